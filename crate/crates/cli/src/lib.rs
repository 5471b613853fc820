//! Command-line front end: tree documents, SVG output and the subcommands.

pub mod commands;
pub mod document;
pub mod render;
