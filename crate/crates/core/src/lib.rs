//! Profile-aware recurrent multi-task modelling of daily student behaviour.
//!
//! The crate is organised bottom-up:
//!
//! * [`autograd`] is a small reverse-mode differentiation engine over dense
//!   `f64` arrays.
//! * [`ingest`] turns raw campus records into binned behaviour sequences,
//!   label histories, course statistics and fitted scalers.
//! * [`model`] holds the parameter store and the forward pass: dense profile
//!   embedding, profile-aware LSTMs, soft-attention pooling, trend LSTMs,
//!   stacked co-attention interaction units and tanh output heads.
//! * [`training`] provides losses, Adam, the mini-batch training loop,
//!   evaluation in original units and the unpaired t-test.
//! * [`synth`] generates seeded synthetic cohorts and runs ablation
//!   experiments against model variants and baselines.
//!
//! Per-sample work (forward/backward within a mini-batch, evaluation over a
//! split, independent experiment runs) is dispatched through [`Execution`],
//! which uses rayon when the `parallel` feature is enabled and falls back to
//! a plain loop otherwise. Reductions always happen in sample-index order, so
//! both paths produce bitwise-identical results.

pub mod autograd;
mod error;
mod exec;
pub mod ingest;
pub mod io;
pub mod model;
pub mod synth;
pub mod training;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use exec::Execution;
