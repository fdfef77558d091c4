//! Compressed sensing of doubly-sparse (delay-Doppler) time-varying channels
//! with AFDM pilots.
//!
//! The crate is organised bottom-up:
//!
//! - [`daft`]: discrete affine Fourier transform, chirp-periodic prefix and
//!   chirp-rate selection.
//! - [`channel`]: delay-Doppler sparsity models, gain sampling and the
//!   time-domain channel.
//! - [`sensing`]: pilot frames, observation windows, the measurement operator
//!   and its hierarchical (block) structure.
//! - [`hihtp`]: hierarchical hard thresholding pursuit and a flat HTP baseline.
//! - [`subnyquist`]: de-chirp and decimate receiver emulation.
//! - [`harness`]: Monte-Carlo driver, overhead accounting and reports.

pub mod channel;
pub mod daft;
pub mod error;
pub mod harness;
pub mod hihtp;
pub mod linalg;
pub mod rng;
pub mod sensing;
pub mod subnyquist;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex sample type used throughout the crate.
pub type C64 = Complex64;
