//! Base-2 entropy functionals and the exact constants of the capacity formula.
//!
//! All logarithms are base 2, and `0 · log 0 = 0`.

use std::sync::OnceLock;

use serde::Serialize;

use crate::{Error, Result};

/// Cell masses in `[-CLAMP_TOL, 0)` are treated as rounding noise and
/// clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// The constants pinning the capacity value, computed from their defining
/// formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    /// `δ = 1 / (2 log2 r)`.
    pub delta: f64,
    /// `r = 2 + √3`.
    pub r_const: f64,
    /// `λ* = δ log2((1 + 2δ) / (1 - 2δ))`.
    pub lambda_star: f64,
    /// `H2(1/2 - δ, 1/2 + δ)`.
    pub capacity: f64,
}

impl Constants {
    fn compute() -> Self {
        let r_const = 2.0 + 3f64.sqrt();
        let delta = 1.0 / (2.0 * r_const.log2());
        let lambda_star = delta * ((1.0 + 2.0 * delta) / (1.0 - 2.0 * delta)).log2();
        let capacity = h2(0.5 - delta);
        Constants {
            delta,
            r_const,
            lambda_star,
            capacity,
        }
    }

    /// The symmetric optimum `a* = b* = 1/2 - δ`.
    pub fn a_star(&self) -> f64 {
        0.5 - self.delta
    }

    /// The optimal coupling `c* = 1/4 - 2δ/√3 + δ²` at the symmetric optimum.
    pub fn c_star(&self) -> f64 {
        0.25 - 2.0 * self.delta / 3f64.sqrt() + self.delta * self.delta
    }
}

/// Process-wide constants, computed once.
pub fn constants() -> &'static Constants {
    static CONSTANTS: OnceLock<Constants> = OnceLock::new();
    CONSTANTS.get_or_init(Constants::compute)
}

/// `-x log2 x`, with the convention `0 log 0 = 0`.
#[inline]
pub fn neg_xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

fn clamp_mass(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("mass is NaN"));
    }
    if x < -CLAMP_TOL {
        return Err(Error::domain(format!("negative mass {x:e}")));
    }
    Ok(x.max(0.0))
}

/// `H(x_1, ..., x_n) = -Σ x_i log2 x_i`. Masses need not sum to one.
pub fn entropy(masses: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &m in masses {
        if m.is_nan() || m < 0.0 {
            return Err(Error::domain(format!("negative mass {m:e}")));
        }
        h += neg_xlogx(m);
    }
    Ok(h)
}

/// Binary entropy `H2(p, 1 - p)` for `p` in `[0, 1]`.
pub fn h2(p: f64) -> f64 {
    neg_xlogx(p) + neg_xlogx(1.0 - p)
}

/// `S3(x) = H3((1 - x)/2, x, (1 - x)/2)`.
pub fn s3(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("s3 argument {x} outside [0, 1]")));
    }
    Ok(2.0 * neg_xlogx((1.0 - x) / 2.0) + neg_xlogx(x))
}

/// `S4(a, b, c) = H4(ab - c, a(1-b) + c, (1-a)b + c, (1-a)(1-b) - c)`.
pub fn s4(a: f64, b: f64, c: f64) -> Result<f64> {
    let cells = [
        a * b - c,
        a * (1.0 - b) + c,
        (1.0 - a) * b + c,
        (1.0 - a) * (1.0 - b) - c,
    ];
    let mut h = 0.0;
    for e in cells {
        h += neg_xlogx(clamp_mass(e)?);
    }
    Ok(h)
}
