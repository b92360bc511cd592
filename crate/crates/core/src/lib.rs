//! Finite-dimensional calculus of maximal monotone operators with power-gauge
//! duality mappings.
//!
//! The crate computes resolvents `J_λ^φ` and Yosida approximants `A_λ^φ` on
//! `(ℝⁿ, ‖·‖_p)`, checks their structural properties numerically, computes
//! Brouwer degrees, and locates nonzero solutions of regularized inclusions
//! `A_t^φ x + C x + q_ε x = 0` in annular regions by continuation. The
//! discrete p-Laplacian applications live in [`pde`].

pub mod cli;
pub mod degree;
pub mod error;
pub mod homotopy;
mod linalg;
pub mod operators;
pub mod pde;
pub mod report;
mod scalar;
pub mod space;
pub mod spec;
pub mod yosida;

pub use error::{Error, Result};
pub use operators::MonotoneOp;
pub use space::{Gauge, PVector, Side};
pub use yosida::{resolvent, yosida_apply, ResolventOptions, YosidaResult};
