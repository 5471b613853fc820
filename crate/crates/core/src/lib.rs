//! Approximate Steiner trees in the plane: the `T_k` family, Melzak's
//! construction, polygon unfolding and the relative-error bounds.
//!
//! Everything is generic over the scalar (`f32` or `f64`); the aliases below
//! fix it to one of the two.

pub mod approx;
pub mod bounds;
pub mod error;
pub mod geometry;
pub mod melzak;
pub mod scalar;
pub mod topology;
pub mod verify;

pub use approx::{EmbeddedTree, TkParams};
pub use error::{Error, Result};
pub use geometry::{Circle, Point, PolyPath};
pub use melzak::{SolveResult, SolveStatus};
pub use scalar::Scalar;
pub use topology::{FullTopology, NodeId, NodeKind};

pub type PointF64 = Point<f64>;
pub type CircleF64 = Circle<f64>;
pub type PolyPathF64 = PolyPath<f64>;
pub type EmbeddedTreeF64 = EmbeddedTree<f64>;
pub type TkParamsF64 = TkParams<f64>;
pub type SolveResultF64 = SolveResult<f64>;

pub type PointF32 = Point<f32>;
pub type CircleF32 = Circle<f32>;
pub type PolyPathF32 = PolyPath<f32>;
pub type EmbeddedTreeF32 = EmbeddedTree<f32>;
pub type TkParamsF32 = TkParams<f32>;
pub type SolveResultF32 = SolveResult<f32>;
