//! Limsup sets of metric Diophantine approximation: criterion sums, exponent solvers,
//! resonant-plane geometry, measure and dimension estimators, and slicing.

pub mod config;
pub mod dimfun;
pub mod error;
pub mod estimators;
pub mod fit;
pub mod geometry;
pub mod problems;
pub mod rng;
pub mod series;
pub mod slicing;
pub mod windows;

pub use config::{load_problem, ProblemConfig};
pub use dimfun::{Ball, DimensionFunction, Norm};
pub use error::{Error, Result};
pub use problems::{LinearFormsProblem, Problem, PsiSpec, SquaresProblem, Support};
pub use series::{Classification, PartialSumSeries, Verdict};
pub use windows::{Schedule, Window};
