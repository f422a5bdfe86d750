//! Core numerics for continuous-variable measurement-based quantum computing on
//! matrix-product-state quantum wires.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs plus an explicitly passed random stream, so callers
//! are free to fan work out across threads.
//!
//! * [`fock`]: truncated Fock-space states and Gaussian operators, used as the
//!   brute-force oracle for the closed forms elsewhere.
//! * [`su2`]: 2×2 and 4×4 gate algebra.
//! * [`wire`]: correlation-space matrices, measurement sampling and transport.
//! * [`scheme`]: the displaced-photon-counting scheme and its compiler.
//! * [`nogo`]: the Gaussian no-control examples and scaling scans.
#![no_std]

extern crate alloc;

pub mod error;
pub mod fock;
pub mod linalg;
pub mod nogo;
pub mod rng;
pub mod scheme;
pub mod stats;
pub mod su2;
pub mod tolerance;
pub mod wire;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use tolerance::Tolerances;
