//! Subcommands and their argument types.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use steiner_core::approx::{
    build_circle_construction, build_tk_closed_form, build_tk_recursive, random_tree, witness3, witness4,
};
use steiner_core::bounds::{bound_table, ratio_report, Family, TableGrid};
use steiner_core::geometry::schmidt_bound_check;
use steiner_core::melzak::{oracle_from_tree, solve_tree, unfold, unfold_edge};
use steiner_core::verify::{catalogue, run_all, VerifyOptions};
use steiner_core::{EmbeddedTree, TkParams};
use thiserror::Error;

use crate::document::{DocError, Metadata, TreeDocument};
use crate::render::{path_svg, tree_svg};

/// Agreement required between Melzak and the oracle under `--check-oracle`.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Document(#[from] DocError),
    #[error(transparent)]
    Core(#[from] steiner_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "steiner-approx", version, about = "Approximate Steiner trees in the plane")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct an instance and write it as a JSON tree document.
    Generate(GenerateArgs),
    /// Shortest tree with the same topology, and the length ratio.
    Solve(SolveArgs),
    /// Unfold a tree into a polygonal path and compare with its chord.
    Unfold(UnfoldArgs),
    /// CSV of every bound formula over a parameter grid.
    Table(TableArgs),
    /// Draw a tree document (or its unfolding) as SVG.
    Render(RenderArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub family: Construction,
    /// Output file (stdout when absent).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Read angles in degrees.
    #[arg(long, global = true)]
    pub degrees: bool,
}

#[derive(Debug, Subcommand)]
pub enum Construction {
    /// The binary family T_k.
    Tk {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Build from the recurrence instead of the closed form.
        #[arg(long)]
        recursive: bool,
    },
    /// Concentric-circle construction for eps >= pi/3.
    Circle {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1e-9)]
        delta: f64,
    },
    /// Three-terminal extremal tree.
    Witness3 {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
    },
    /// Four-terminal extremal tree.
    Witness4 {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
    },
    /// Random full topology with bounded angle errors.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub input: PathBuf,
    /// Also run the numeric oracle and require agreement within 1e-6.
    #[arg(long)]
    pub check_oracle: bool,
    /// Write the shortest tree here.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UnfoldArgs {
    pub input: PathBuf,
    /// Terminal to start from (defaults to the document root).
    #[arg(long, conflicts_with = "edge")]
    pub root: Option<usize>,
    /// Unfold about an edge instead, given as `u,v`.
    #[arg(long, value_delimiter = ',', value_name = "U,V")]
    pub edge: Option<Vec<usize>>,
    /// Write an SVG of the path here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Terminal counts, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub ns: Option<Vec<usize>>,
    /// Binary depths, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub ks: Option<Vec<u32>>,
    /// Values of eps, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub degrees: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub input: PathBuf,
    /// Draw the unfolded path from the root instead of the tree.
    #[arg(long)]
    pub unfold: bool,
    #[arg(long, requires = "unfold")]
    pub root: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run a single check, by id or group name.
    #[arg(long)]
    pub only: Option<String>,
    /// Cap the binary depth used by k-indexed checks.
    #[arg(long)]
    pub k_max: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report runtimes without failing on budgets.
    #[arg(long)]
    pub no_budget: bool,
}

pub fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Unfold(a) => unfold_cmd(a),
        Command::Table(a) => table(a),
        Command::Render(a) => render(a),
        Command::Verify(a) => verify(a),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "stdout".into(),
            source,
        }),
    }
}

fn angle(v: f64, degrees: bool) -> f64 {
    if degrees {
        v.to_radians()
    } else {
        v
    }
}

/// Parameter errors from a constructor come from the flags.
fn flag_error(e: steiner_core::Error) -> CliError {
    use steiner_core::Error as E;
    match e {
        E::KTooLarge { .. } | E::InvalidParameter(_) | E::EpsOutOfRange { .. } | E::RangeViolation { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Core(other),
    }
}

fn generate(a: GenerateArgs) -> Result<ExitCode, CliError> {
    let deg = a.degrees;
    let (tree, metadata) = match a.family {
        Construction::Tk { k, eps, recursive } => {
            let eps = angle(eps, deg);
            let params = TkParams::new(k, eps).map_err(flag_error)?;
            let tree = if recursive { build_tk_recursive(params) } else { build_tk_closed_form(params) };
            (tree.map_err(flag_error)?, meta("tk", eps, json!({"k": k})))
        }
        Construction::Circle { k, eps, delta } => {
            let eps = angle(eps, deg);
            let cc = build_circle_construction(k, eps, delta).map_err(flag_error)?;
            (cc.tree, meta("circle", eps, json!({"k": k, "delta": delta})))
        }
        Construction::Witness3 { eps, delta } => {
            let eps = angle(eps, deg);
            (witness3(eps, delta).map_err(flag_error)?, meta("witness3", eps, json!({"delta": delta})))
        }
        Construction::Witness4 { eps, delta } => {
            let eps = angle(eps, deg);
            (witness4(eps, delta).map_err(flag_error)?, meta("witness4", eps, json!({"delta": delta})))
        }
        Construction::Random { n, eps, seed } => {
            let eps = angle(eps, deg);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tree = random_tree(n, eps, &mut rng).map_err(flag_error)?;
            (tree, meta("random", eps, json!({"n": n, "seed": seed})))
        }
    };
    let doc = TreeDocument::from_tree(&tree, metadata);
    emit(a.output.as_deref(), &doc.to_json())?;
    let measured = tree.measure_eps().map_or_else(|_| "n/a".to_string(), |e| e.to_string());
    let summary = format!(
        "n={} L={} eps_actual={}",
        tree.topology().n_terminals(),
        tree.length(),
        measured
    );
    if a.output.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(ExitCode::SUCCESS)
}

fn meta(construction: &str, eps: f64, params: serde_json::Value) -> Metadata {
    let params = match params {
        serde_json::Value::Object(m) => m.into_iter().collect(),
        _ => Default::default(),
    };
    Metadata {
        construction: construction.into(),
        eps: Some(eps),
        params,
    }
}

fn family_of(doc: &TreeDocument) -> Family<f64> {
    match doc.metadata.construction.as_str() {
        "tk" => doc.param_u32("k").map_or(Family::Other, |k| Family::Tk { k }),
        "circle" => match (doc.param_u32("k"), doc.param_f64("delta")) {
            (Some(k), Some(delta)) => Family::Circle { k, delta },
            _ => Family::Other,
        },
        "witness3" => Family::Witness3,
        "witness4" => Family::Witness4,
        _ => Family::Other,
    }
}

fn load(path: &Path) -> Result<(TreeDocument, EmbeddedTree<f64>), CliError> {
    let doc = TreeDocument::read(path)?;
    let tree = doc.to_tree()?;
    Ok((doc, tree))
}

fn solve(a: SolveArgs) -> Result<ExitCode, CliError> {
    let (doc, tree) = load(&a.input)?;
    let result = solve_tree(&tree)?;
    let eps = match doc.metadata.eps {
        Some(e) => e,
        None => tree.measure_eps()?,
    };
    let report = ratio_report(&a.input.display().to_string(), &tree, Some(eps), family_of(&doc))?;
    let status = if result.is_nondegenerate() { "non-degenerate" } else { "degenerate" };
    println!("status: {status}");
    println!("n: {}", report.n);
    println!("eps: {eps}");
    println!("L(T): {}", report.l_t);
    println!("L(S(T)): {}", report.l_s);
    println!("ratio: {}", report.ratio_minus_1);
    println!("source: {}", if report.melzak { "melzak" } else { "oracle" });
    if let Some(u) = &report.upper {
        println!("upper: {} = {}", u.formula, u.value);
    }
    if let Some(l) = &report.lower {
        println!("lower: {} = {}", l.formula, l.value);
    }
    println!("bounds hold: {}", if report.holds { "yes" } else { "no" });
    let mut code = ExitCode::SUCCESS;
    if a.check_oracle {
        let oracle = oracle_from_tree(&tree)?;
        let gap = (oracle.length - report.l_s).abs();
        let ok = gap <= ORACLE_TOL;
        println!(
            "oracle: L = {}, |diff| = {gap:e} ({})",
            oracle.length,
            if ok { "ok" } else { "MISMATCH" }
        );
        if !ok {
            code = ExitCode::from(1);
        }
    }
    if let Some(path) = a.output.as_deref() {
        let (shortest, source) = match result.tree {
            Some(t) => (t, "melzak"),
            None => (tree.with_positions(oracle_from_tree(&tree)?.positions)?, "oracle"),
        };
        let metadata = Metadata {
            construction: "shortest".into(),
            eps: None,
            params: [
                ("source".to_string(), json!(source)),
                ("from".to_string(), json!(doc.metadata.construction)),
            ]
            .into_iter()
            .collect(),
        };
        emit(Some(path), &TreeDocument::from_tree(&shortest, metadata).to_json())?;
    }
    Ok(code)
}

fn unfold_cmd(a: UnfoldArgs) -> Result<ExitCode, CliError> {
    let (_, tree) = load(&a.input)?;
    let topo = tree.topology();
    let (label, path) = match &a.edge {
        Some(e) if e.len() == 2 => (format!("edge {},{}", e[0], e[1]), unfold_edge(&tree, e[0], e[1])?),
        Some(_) => return Err(CliError::Usage("--edge takes two node ids, as u,v".into())),
        None => {
            let root = a.root.unwrap_or(topo.root());
            if root >= topo.node_count() || !topo.is_terminal(root) {
                return Err(CliError::Usage(format!("--root {root} is not a terminal")));
            }
            (format!("root {root}"), unfold(&tree, root)?)
        }
    };
    println!("from: {label}");
    println!("edges: {}", path.edge_count());
    println!("length: {}", path.length());
    println!("endpoint distance: {}", path.endpoint_distance());
    println!("kappa: {}", path.kappa());
    match schmidt_bound_check(&path) {
        Ok(r) => {
            println!("length ratio: {}", r.length_ratio);
            println!("schmidt bound: {}", r.bound);
            println!("holds: {}", if r.holds { "yes" } else { "no" });
        }
        Err(e) => println!("schmidt bound: n/a ({e})"),
    }
    if let Some(svg) = a.svg.as_deref() {
        emit(Some(svg), &path_svg(&path))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn table(a: TableArgs) -> Result<ExitCode, CliError> {
    let mut grid = TableGrid::default();
    if let Some(ns) = a.ns {
        grid.ns = ns;
    }
    if let Some(ks) = a.ks {
        grid.ks = ks;
    }
    if let Some(eps) = a.eps {
        grid.eps = eps.into_iter().map(|e| angle(e, a.degrees)).collect();
    }
    if grid.is_empty() {
        return Err(CliError::Usage("the parameter grid is empty".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["formula", "n", "k", "eps", "value", "applicable"])?;
    for row in bound_table(&grid) {
        let opt = |v: Option<String>| v.unwrap_or_default();
        w.write_record([
            row.formula.to_string(),
            opt(row.n.map(|n| n.to_string())),
            opt(row.k.map(|k| k.to_string())),
            row.eps.to_string(),
            opt(row.value.map(|v| v.to_string())),
            row.applicable.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: "csv buffer".into(),
        source: e.into_error(),
    })?;
    emit(a.output.as_deref(), &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    Ok(ExitCode::SUCCESS)
}

fn render(a: RenderArgs) -> Result<ExitCode, CliError> {
    let (_, tree) = load(&a.input)?;
    let svg = if a.unfold {
        let root = a.root.unwrap_or(tree.topology().root());
        path_svg(&unfold(&tree, root)?)
    } else {
        tree_svg(&tree)
    };
    emit(a.output.as_deref(), &svg)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode, CliError> {
    if let Some(only) = &a.only {
        let known = catalogue().iter().any(|&(id, _, group)| group == only || id.to_string() == *only);
        if !known {
            let groups: Vec<String> = catalogue().iter().map(|&(id, _, g)| format!("{id}/{g}")).collect();
            return Err(CliError::Usage(format!("unknown check {only:?}; choose from {}", groups.join(", "))));
        }
    }
    let mut opts = VerifyOptions {
        k_max: a.k_max,
        enforce_budget: !a.no_budget,
        ..VerifyOptions::default()
    };
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    let outcomes = run_all(a.only.as_deref(), &opts);
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    for o in &outcomes {
        println!("{o}");
    }
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
