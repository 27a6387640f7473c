//! Software model of a quantized Gibbs-sampling accelerator (the "SPU")
//! next to a full-precision reference sampler, plus the diagnostics used to
//! judge whether the hardware approximations hurt statistical robustness:
//!
//! * sampling quality: effective sample size with inactive-variable masking,
//! * convergence: Gelman-Rubin R̂ extended with a zero-variance decision
//!   process and reported as a convergence percentage,
//! * goodness of fit: RMSE against a mode-of-runs reference and a
//!   data-independent Jensen-Shannon divergence sweep.
//!
//! The [`harness`] module ties these together into reproducible multi-seed
//! experiments over named design points.

pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod reference;
pub mod rng;
pub mod spu;

mod chain;

pub use error::{Error, Result};
pub use model::{GridModel, LabelField, Pairwise};
pub use reference::{Mode, RunConfig, SampleTrace};
pub use spu::{Backend, RngKind, SpuConfig};
