//! Numerical toolkit for pilot-to-data power ratio (PDPR) design and
//! statistical phase-shift configuration in RIS-assisted uplink MIMO.
//!
//! A single-antenna terminal reaches an `N_b`-antenna base station only
//! through an `N_r`-element reconfigurable intelligent surface. The BS–RIS
//! link is line-of-sight (rank 1); the terminal–RIS link is correlated
//! Rayleigh fading. The base station estimates the cascade channel by least
//! squares from one pilot symbol and detects data with the MMSE receiver
//! that accounts for the estimation error. The crate provides
//!
//! - [`geometry`]: planar arrays, steering vectors, isotropic RIS correlation;
//! - [`channel`]: cascade statistics, effective RIS gain `ζ`, channel sampling;
//! - [`estimation`]: pilots, LS estimation, conditional statistics `(R, D, Q)`;
//! - [`receiver`]: the MMSE combiner, its conditional MSE and SNR `ρ`;
//! - [`analysis`]: `λ`, the ergodic MMSE closed form, optimal pilot ratio;
//! - [`risopt`]: coordinate-ascent maximization of `ζ` over RIS phases;
//! - [`montecarlo`]: seeded, scheduling-independent simulation checks.
//!
//! The `parallel` feature (on by default) runs data-parallel loops on rayon.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod montecarlo;
pub mod receiver;
pub mod risopt;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64;
