//! Output-feedback, event-triggered sliding mode control for delta-operator
//! sampled-data systems.
//!
//! The pipeline runs bottom-up:
//!
//! * [`matlib`] dense matrices, exponential/ZOH, SVD, least squares;
//! * [`discretize`] shift and delta sampled models at the control rate τ and
//!   the output rate Δ = τ/N;
//! * [`observability`] multi-rate observability stacks in both domains and the
//!   factorization linking them;
//! * [`mrse`] static multi-rate state estimation from N fast output samples;
//! * [`smc`] regular form, control laws and band/bound calculators;
//! * [`simkit`] exact dual-rate closed-loop simulation and trace metrics;
//! * [`scenario`] the serializable run configuration and built-in presets.

pub mod discretize;
pub mod error;
pub mod matlib;
pub mod mrse;
pub mod observability;
pub mod scenario;
pub mod simkit;
pub mod smc;

pub use error::{Error, Result};
pub use matlib::Mat;
