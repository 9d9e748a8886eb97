//! The coupling `c_{a,b}(x)`, the excess function `φ_{a,b}(x)` and the joint
//! distribution they induce.
//!
//! For marginals `a, b` and a middle-output mass `x`, the coupling is the
//! unique `c` in the coupling box with `m(c, x) = 0`, where
//!
//! ```text
//! m(c, x) = (a b̄ + c)(ā b + c)(1 - x)² - (a b - c)(ā b̄ - c)(2x)²
//! ```
//!
//! `m` is increasing in `c`, so bisection on the box always works. A closed
//! form exists away from `x = 1/3`, where it has a removable singularity.

use serde::{Deserialize, Serialize};

use crate::entropy::CLAMP_TOL;
use crate::{Error, Result};

/// Distance from `x = 1/3` within which the closed form is replaced by
/// bisection.
pub const BRANCH_SWITCH_TOL: f64 = 1e-3;
/// Maximum residual `|m(c, x)|` accepted from either solver.
pub const RESIDUAL_TOL: f64 = 1e-10;
const BISECT_MAX_ITER: usize = 200;
const BISECT_TOL: f64 = 1e-14;
const V_CLAMP_TOL: f64 = 1e-12;
const MC_FLOOR: f64 = 1e-12;
const FD_STEP: f64 = 1e-6;

/// Admissible range of the coupling for marginals `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingBox {
    pub lo: f64,
    pub hi: f64,
}

impl CouplingBox {
    pub fn contains(&self, c: f64, tol: f64) -> bool {
        c >= self.lo - tol && c <= self.hi + tol
    }

    pub fn is_degenerate(&self) -> bool {
        self.hi - self.lo <= 0.0
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// The four cell masses `(e1, e2, e3, e4)` of the joint input distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

impl JointDistribution {
    pub fn cells(&self) -> [f64; 4] {
        [self.e1, self.e2, self.e3, self.e4]
    }

    /// Marginal of the first input.
    pub fn a(&self) -> f64 {
        self.e1 + self.e2
    }

    /// Marginal of the second input.
    pub fn b(&self) -> f64 {
        self.e1 + self.e3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSign {
    Plus,
    Minus,
    Center,
}

/// Intermediate quantities of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormBranch {
    pub u: f64,
    pub v: f64,
    pub s: f64,
    pub t: f64,
    pub sign: BranchSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Closed form, falling back to bisection near `x = 1/3`.
    #[default]
    Closed,
    Bisect,
}

pub(crate) fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

pub fn coupling_box(a: f64, b: f64) -> Result<CouplingBox> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    Ok(box_unchecked(a, b))
}

fn box_unchecked(a: f64, b: f64) -> CouplingBox {
    let (na, nb) = (1.0 - a, 1.0 - b);
    CouplingBox {
        lo: -(a * nb).min(na * b),
        hi: (a * b).min(na * nb),
    }
}

#[inline]
fn residual(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let (na, nb) = (1.0 - a, 1.0 - b);
    let y = 1.0 - x;
    (a * nb + c) * (na * b + c) * y * y - (a * b - c) * (na * nb - c) * 4.0 * x * x
}

/// The defining residual `m(c, x)`.
pub fn eval_m(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let bx = coupling_box(a, b)?;
    check_unit("x", x)?;
    if !bx.contains(c, CLAMP_TOL) {
        return Err(Error::domain(format!(
            "c = {c} outside coupling box [{}, {}]",
            bx.lo, bx.hi
        )));
    }
    Ok(residual(a, b, c, x))
}

fn branch_sign(x: f64) -> BranchSign {
    if (x - 1.0 / 3.0).abs() <= BRANCH_SWITCH_TOL {
        BranchSign::Center
    } else if x < 1.0 / 3.0 {
        BranchSign::Plus
    } else {
        BranchSign::Minus
    }
}

/// Quantities `u, v, s, t` of the closed form at `x`.
///
/// At the center branch `u` and `v` are reported as NaN-free zeros, since the
/// closed form is not used there.
pub fn closed_form_branch(a: f64, b: f64, x: f64) -> Result<ClosedFormBranch> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    check_unit("x", x)?;
    let s = a * (1.0 - b) + (1.0 - a) * b;
    let t = (a - b).abs();
    let sign = branch_sign(x);
    if sign == BranchSign::Center {
        return Ok(ClosedFormBranch {
            u: 0.0,
            v: 0.0,
            s,
            t,
            sign,
        });
    }
    let u = -4.0 * x * x / ((1.0 + x) * (1.0 - 3.0 * x));
    let mut v = u * u - 2.0 * s * u + t * t;
    if v < 0.0 {
        if v < -V_CLAMP_TOL {
            return Err(Error::Solver(format!(
                "closed form discriminant {v:e} negative at a={a}, b={b}, x={x}"
            )));
        }
        v = 0.0;
    }
    Ok(ClosedFormBranch { u, v, s, t, sign })
}

fn bisect(a: f64, b: f64, x: f64, bx: CouplingBox) -> f64 {
    let (mut lo, mut hi) = (bx.lo, bx.hi);
    if residual(a, b, lo, x) >= 0.0 {
        return lo;
    }
    if residual(a, b, hi, x) <= 0.0 {
        return hi;
    }
    for _ in 0..BISECT_MAX_ITER {
        if hi - lo <= BISECT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if residual(a, b, mid, x) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve `m(c, x) = 0` for `c` in the coupling box.
pub fn solve_c(a: f64, b: f64, x: f64, method: Method) -> Result<f64> {
    let bx = coupling_box(a, b)?;
    check_unit("x", x)?;
    if bx.is_degenerate() {
        return Ok(0.0);
    }
    let c = match method {
        Method::Bisect => bisect(a, b, x, bx),
        // Exact roots at the ends. At x = 1 with a + b = 1 the root is double
        // and the closed form loses half the digits.
        Method::Closed if x == 0.0 => bx.lo,
        Method::Closed if x == 1.0 => bx.hi,
        Method::Closed => {
            let br = closed_form_branch(a, b, x)?;
            match br.sign {
                BranchSign::Center => bisect(a, b, x, bx),
                BranchSign::Plus => 0.5 * (-br.s + br.u + br.v.sqrt()),
                BranchSign::Minus => 0.5 * (-br.s + br.u - br.v.sqrt()),
            }
        }
    };
    let c = c.clamp(bx.lo, bx.hi);
    let res = residual(a, b, c, x);
    if !(res.abs() <= RESIDUAL_TOL) {
        return Err(Error::Solver(format!(
            "coupling residual {res:e} at a={a}, b={b}, x={x}"
        )));
    }
    Ok(c)
}

/// `c_{a,b}(x)` with the default method.
pub fn coupling(a: f64, b: f64, x: f64) -> Result<f64> {
    solve_c(a, b, x, Method::Closed)
}

/// `φ_{a,b}(x) = a b̄ + ā b + 2 c_{a,b}(x) - x`.
pub fn phi(a: f64, b: f64, x: f64) -> Result<f64> {
    let c = coupling(a, b, x)?;
    Ok(a * (1.0 - b) + (1.0 - a) * b + 2.0 * c - x)
}

/// `dφ/dx` by implicit differentiation of `m(c, x) = 0`.
pub fn phi_prime(a: f64, b: f64, x: f64) -> Result<f64> {
    let c = coupling(a, b, x)?;
    let (na, nb) = (1.0 - a, 1.0 - b);
    if box_unchecked(a, b).is_degenerate() {
        return Ok(-1.0);
    }
    let y = 1.0 - x;
    let m_c = (a * nb + na * b + 2.0 * c) * y * y + (a * b + na * nb - 2.0 * c) * 4.0 * x * x;
    if m_c < MC_FLOOR {
        return if x + FD_STEP <= 1.0 {
            Ok((phi(a, b, x + FD_STEP)? - phi(a, b, x)?) / FD_STEP)
        } else {
            Ok((phi(a, b, x)? - phi(a, b, x - FD_STEP)?) / FD_STEP)
        };
    }
    let m_x = -2.0 * y * (a * nb + c) * (na * b + c) - 8.0 * x * (a * b - c) * (na * nb - c);
    Ok(2.0 * (-m_x / m_c) - 1.0)
}

/// The joint distribution induced by `(a, b, c)`.
pub fn joint(a: f64, b: f64, c: f64) -> Result<JointDistribution> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    let (na, nb) = (1.0 - a, 1.0 - b);
    let raw = [a * b - c, a * nb + c, na * b + c, na * nb - c];
    let mut e = [0.0; 4];
    for (k, &m) in raw.iter().enumerate() {
        if !(m >= -CLAMP_TOL) {
            return Err(Error::domain(format!(
                "cell e{} = {m:e} negative for a={a}, b={b}, c={c}",
                k + 1
            )));
        }
        e[k] = m.max(0.0);
    }
    Ok(JointDistribution {
        e1: e[0],
        e2: e[1],
        e3: e[2],
        e4: e[3],
    })
}
