//! Noise-induced quantum reservoir computing.
//!
//! Small qubit reservoirs are simulated exactly as density matrices. Every
//! gate of the per-step encoding circuit carries a single-qubit reset
//! channel whose probability is a free parameter; the `⟨Z_i⟩` signals of the
//! register feed a linear readout, and the reset probabilities are tuned by
//! global optimizers against the readout's prediction error.
//!
//! Module map:
//!
//! - [`quantum`]: density matrices, gates, Kraus channels, `⟨Z⟩` extraction
//! - [`reservoir`]: circuit layout, step evolution, feature matrices
//! - [`readout`]: least-squares output layer
//! - [`optimizer`]: dual annealing and a (μ+λ) evolution strategy
//! - [`benchmarks`]: NARMA, Mackey-Glass and memory-capacity probe data
//! - [`metrics`]: MSE / NMSE / NRMSE / MASE, Naive baseline, memory capacity
//! - [`pipeline`]: task evaluation and the optimization objective

pub mod benchmarks;
pub mod error;
pub mod metrics;
pub mod optimizer;
pub mod parallel;
pub mod pipeline;
pub mod quantum;
pub mod readout;
pub mod reservoir;

pub use error::{QnirError, Result};
