//! Hybrid quantum-classical normalizing flow.
//!
//! An invertible generative model over small grayscale images whose coupling
//! layers mix a classical affine transform with a simulated parameterized
//! quantum circuit acting unitarily on part of the state. Trained by exact
//! maximum likelihood; the unitary block contributes nothing to the
//! log-determinant, so the change-of-variables term stays cheap.
//!
//! Module map:
//! - [`qsim`]: statevector simulator, hardware-efficient ansatz, adjoint-mode
//!   parameter gradients
//! - [`neural`]: small MLPs with hand backprop, AdamW
//! - [`flow`]: coupling layers, the layer stack, log-determinants
//! - [`objective`]: base density, exact nll, full-model gradients, training
//! - [`data`]: IDX parsing, downscaling, image/sample conversion
//! - [`metrics`]: pixel-space Frechet distance proxy
//! - [`verify`]: finite-difference and dense-matrix property checks
//! - [`runner`]: the train/generate/evaluate/check commands

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod flow;
pub mod metrics;
pub mod neural;
pub mod objective;
pub mod pgm;
pub mod qsim;
pub mod runner;
pub mod verify;

#[doc(hidden)]
pub mod testutil;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use flow::{FlowModel, SampleVector, Splits};
