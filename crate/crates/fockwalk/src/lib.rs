//! Fock-space recurrence engine for Gaussian photonic circuits.
//!
//! Everything in this crate is built around one linear recurrence on a
//! multi-index lattice: the amplitude tensor `G` of a Gaussian state (state
//! vector or density matrix) satisfies
//!
//! ```text
//! G[k + 1_i] = ( G[k] * b_i  +  Σ_l sqrt(k_l) * G[k - 1_l] * A[i][l] ) / sqrt(k_i + 1)
//! ```
//!
//! with `G[k] = 0` whenever any index is negative. The crate provides:
//!
//! * [`gaussian`] — covariance-matrix circuit simulation and the conversion
//!   to the `(A, b, G0)` recurrence parameters,
//! * [`walker`] — the reference dense walker (every lattice cell),
//! * [`gbs`] — the buffered diagonal-selective scheduler that produces photon
//!   distributions from density matrices while holding only a thin slab of
//!   off-diagonal amplitudes,
//! * [`conditional`] — conditional (heralded) block generation over a subset
//!   of detected modes,
//! * [`grad`] — forward-mode gradients of every amplitude with respect to
//!   `A` and `b`, co-walked with the value pass,
//! * [`lattice`], [`store`], [`exec`], [`mat`] — supporting index math,
//!   amplitude stores with instrumentation, deterministic parallelism, and
//!   small dense complex linear algebra.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) just forwards to the numeric dependencies.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod conditional;
pub mod error;
pub mod exec;
pub mod gaussian;
pub mod gbs;
pub mod grad;
pub mod lattice;
pub mod mat;
pub mod store;
pub mod walker;

pub use error::FockError;

/// The scalar type used throughout: double-precision complex.
pub type C64 = num_complex::Complex<f64>;
