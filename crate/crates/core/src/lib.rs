//! Exact conditional-independence knockoffs for exchangeable and partially
//! exchangeable categorical covariates.
//!
//! The crate is organised bottom-up: [`priors`] holds the de Finetti mixing
//! measures, [`model`] the closed-form probabilities, [`sampler`] the exact
//! knockoff draws, [`robustness`] the total-variation checks, [`selection`]
//! the knockoff filter, [`gaussian`] the second-order baseline and
//! [`harness`] the simulation driver and CSV plumbing.

pub mod enumerate;
pub mod gaussian;
pub mod harness;
pub mod error;
pub mod model;
pub mod priors;
pub mod quad;
pub mod robustness;
pub mod sampler;
pub mod selection;
pub mod special;

pub use error::{Error, Result};
pub use model::{CategoricalVector, MixedVector, SuffStats};
pub use priors::{LinkSpec, Prior, PriorSpec};
pub use sampler::{CategoricalMatrix, SeededRng};
pub use harness::{ExperimentConfig, ExperimentReport, KnockoffMethod};
pub use selection::{SelectionResult, WStats};
