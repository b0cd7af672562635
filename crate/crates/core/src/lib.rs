//! Solvers for the stochastic Manakov equation
//!
//! ```text
//! i dX + (∂ₓ²X + |X|²X) dt + i sqrt(γ) Σ_k σ_k ∂ₓX ∘ dW_k = 0
//! ```
//!
//! for a two-component field X = (X₁, X₂) driven by a three-dimensional
//! Brownian motion through the Pauli matrices. The Stratonovich noise is
//! discretised by the implicit midpoint rule, which keeps the discrete mass
//! exactly conserved.

pub mod analytic;
pub mod error;
pub mod field;
pub mod metrics;
pub mod noise;
pub mod pauli;
pub mod propagator;
pub mod record;
pub mod schemes;

pub use error::{Error, Result};
pub use field::{discrete_h1_norm, discrete_l2_mass, Field, Grid1D, Pair};
pub use noise::{coarsen, sample_path, BrownianPath};
pub use record::{RunRecord, RunStatus, StepDiagnostics};
pub use schemes::{evolve, Run, SchemeConfig, SchemeKind};
