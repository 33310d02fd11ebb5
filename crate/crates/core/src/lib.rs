//! Regularized least-squares regression over reproducing-kernel Hilbert
//! spaces whose kernel is given by an explicit, truncated Mercer spectrum.
//!
//! Because the eigenvalues and eigenfunctions are known exactly, every norm
//! in the scale of power spaces `[H]^γ`, `0 ≤ γ ≤ 2`, can be computed from
//! coefficient vectors, and the population LS-SVM solution is available in
//! closed form. On top of that the crate provides:
//!
//! | module | purpose |
//! |--------|---------|
//! | [`spectral_kernel`] | cosine eigenbasis on `[0, 1]`, kernels, Gram matrices, embedding constants |
//! | [`power_space`] | coefficient vectors and `γ`-power norms |
//! | [`lssvm`] | empirical fits, population solution, approximation error, effective dimension, oracle bound |
//! | [`rate_lab`] | source-condition targets, λ-schedules, rate sweeps and slope fits |
//! | [`minimax`] | Gilbert–Varshamov codes, packing families, KL divergence, testing game |
//! | [`concentration`] | Hilbert-space Bernstein thresholds with Monte-Carlo tail checks |

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod concentration;
pub mod config;
pub mod error;
pub mod linalg;
pub mod lssvm;
pub mod minimax;
pub mod power_space;
pub mod rate_lab;
pub mod rng;
pub mod spectral_kernel;

pub use check::CheckResult;
pub use error::{LabError, Result};
pub use lssvm::{Dataset, DualWeights};
pub use power_space::CoefficientVector;
pub use spectral_kernel::{EigenfunctionFamily, SpectrumModel};
