//! Hessian Riemannian Langevin Monte Carlo over Legendre entropies.
//!
//! The iterate moves in the dual space of a mirror map `∇φ`:
//!
//! ```text
//! y' = ∇φ(x) − h∇f(x) + √(2h) [D²φ(x)]^{1/2} ξ,    x' = ∇φ*(y')
//! ```
//!
//! Besides the sampler the crate estimates the constants that control its
//! contraction, evaluates the resulting Wasserstein bounds and measures the
//! mirror Wasserstein distance between point clouds.

pub mod analysis;
pub mod assignment;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod target;

pub use entropy::{parse_entropy, register_table1_entropies, Entropy};
pub use error::{Error, Result};
pub use target::{parse_target, register_table2_targets, TargetSpec};
