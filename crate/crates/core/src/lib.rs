//! Zero-error capacity of the binary adder channel with complete feedback,
//! and exact adaptive group testing for two defectives.
//!
//! The binary adder channel takes one bit from each of two senders and
//! outputs their integer sum. With complete feedback both encoders see every
//! past output. The largest symmetric rate `R` such that `(R, R)` is
//! achievable with zero decoding error is
//!
//! ```text
//! R = H2(1/2 - δ, 1/2 + δ) ≈ 0.78974,   δ = 1 / (2 log2(2 + √3))
//! ```
//!
//! This crate evaluates every piece of machinery needed to certify that
//! number numerically:
//!
//! * [`entropy`]: base-2 entropy functionals and the exact constants.
//! * [`coupling`]: the coupling `c_{a,b}(x)`, the excess function `φ_{a,b}`
//!   and the induced four-cell joint distribution.
//! * [`fixed_point`]: the parameter domain and the middle-symbol fixed
//!   point `x*` of a mixture.
//! * [`feasibility`]: the capacity constraint and brute-force grid
//!   cross-checks of it.
//! * [`capacity_opt`]: the rate objective, the certificate at the symmetric
//!   optimum, and a multistart optimizer.
//! * [`lagrangian`]: the upper bound via a fixed Lagrange multiplier, its
//!   gradient formulas and stationary-cell analysis.
//! * [`adder_code`]: feedback codes, unique decodability, and the bijection
//!   with two-set group testing strategies.
//! * [`group_testing`]: exact minimax test counts `t(n)` and `t(n, n)`.
//! * [`cli`]: the command-line front end (JSON/CSV output).
//!
//! ```
//! use adder_capacity::capacity_opt::belokopytov_certificate;
//!
//! let cert = belokopytov_certificate().unwrap();
//! assert!((cert.rate - 0.78974).abs() < 1e-4);
//! assert!(cert.m_at_cstar.abs() < 1e-9);
//! ```

#![forbid(unsafe_code)]

pub mod adder_code;
pub mod capacity_opt;
pub mod cli;
pub mod coupling;
pub mod entropy;
mod error;
pub mod feasibility;
pub mod fixed_point;
pub mod group_testing;
pub mod lagrangian;

pub use error::{Error, Result};
