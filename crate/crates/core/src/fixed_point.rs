//! Mixtures, the domain `D_n`, and the fixed point `x*` of the mixture
//! equation `x = Σ p_i (a_i b̄_i + ā_i b_i + 2 c_{a_i,b_i}(x))`.

use serde::{Deserialize, Serialize};

use crate::coupling::{check_unit, phi, phi_prime};
use crate::{Error, Result};

/// Tolerance on the strict inequalities defining `D_n`.
pub const DOMAIN_TOL: f64 = 1e-12;
/// Margin below which an in-domain mixture is flagged as near the boundary.
pub const NEAR_BOUNDARY: f64 = 1e-6;
const SIMPLEX_TOL: f64 = 1e-12;
const ENDPOINT_TOL: f64 = 1e-12;
const SCAN_FLOOR: f64 = 1e-9;
const BISECT_TOL: f64 = 1e-13;
const RESIDUAL_OK: f64 = 1e-11;
const DEBUG_PRESCAN: usize = 1024;

/// Weights `p` on the simplex together with per-component marginals `a, b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub p: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Mixture {
    pub fn new(p: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let m = Mixture { p, a, b };
        m.validate()?;
        Ok(m)
    }

    /// Single-component mixture `p = (1)`.
    pub fn single(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![a], vec![b])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.p.len();
        if n == 0 {
            return Err(Error::domain("mixture must have at least one component"));
        }
        if self.a.len() != n || self.b.len() != n {
            return Err(Error::domain(format!(
                "length mismatch: p has {n}, a has {}, b has {}",
                self.a.len(),
                self.b.len()
            )));
        }
        for i in 0..n {
            check_unit("p", self.p[i])?;
            check_unit("a", self.a[i])?;
            check_unit("b", self.b[i])?;
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Iterator over `(p_i, a_i, b_i)`.
    pub fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.n()).map(move |i| (self.p[i], self.a[i], self.b[i]))
    }

    /// `Σ p_i |a_i - b_i|`.
    pub fn asymmetry(&self) -> f64 {
        self.components().map(|(p, a, b)| p * (a - b).abs()).sum()
    }

    /// `Σ p_i √(a_i ā_i)`.
    pub fn spread(&self) -> f64 {
        self.components()
            .map(|(p, a, _)| p * (a * (1.0 - a)).sqrt())
            .sum()
    }
}

/// Membership in `D_n`: `Σ p|a - b| > 0` or `Σ p √(a ā) > 1/4`.
pub fn in_domain(mix: &Mixture) -> bool {
    mix.asymmetry() > DOMAIN_TOL || mix.spread() - 0.25 > DOMAIN_TOL
}

fn near_boundary(mix: &Mixture) -> bool {
    mix.asymmetry() < NEAR_BOUNDARY && mix.spread() - 0.25 < NEAR_BOUNDARY
}

/// `φ(x) = Σ p_i φ_{a_i,b_i}(x)`.
pub fn phi_mix(mix: &Mixture, x: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (p, a, b) in mix.components() {
        if p > 0.0 {
            acc += p * phi(a, b, x)?;
        }
    }
    Ok(acc)
}

pub fn phi_mix_prime(mix: &Mixture, x: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (p, a, b) in mix.components() {
        if p > 0.0 {
            acc += p * phi_prime(a, b, x)?;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointResult {
    pub x_star: f64,
    /// `|φ(x*)|`.
    pub residual: f64,
    pub phi_prime_at: f64,
    pub found: bool,
    /// Both domain margins are below [`NEAR_BOUNDARY`].
    pub near_boundary: bool,
}

/// Count strict sign changes of `phi_mix` on the points `x_k = k / points`,
/// `k = 1..=points`. Exact zeros are skipped.
pub fn count_sign_changes(mix: &Mixture, points: usize) -> Result<usize> {
    Ok(sign_change_brackets(mix, points)?.len())
}

/// Intervals `(x_prev, x_next)` of the uniform grid on which `phi_mix`
/// changes sign.
pub fn sign_change_brackets(mix: &Mixture, points: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for k in 1..=points {
        let x = k as f64 / points as f64;
        let v = phi_mix(mix, x)?;
        if v == 0.0 {
            continue;
        }
        if let Some((xp, vp)) = prev {
            if (vp > 0.0) != (v > 0.0) {
                out.push((xp, x));
            }
        }
        prev = Some((x, v));
    }
    Ok(out)
}

/// The unique root of `phi_mix` in `(0, 1]`.
pub fn solve_x_star(mix: &Mixture) -> Result<FixedPointResult> {
    mix.validate()?;
    if !in_domain(mix) {
        return Err(Error::domain(
            "mixture outside D_n: no fixed point in (0, 1]",
        ));
    }
    debug_assert!(
        count_sign_changes(mix, DEBUG_PRESCAN)? <= 1,
        "phi_mix has more than one sign change"
    );
    let near = near_boundary(mix);
    let f1 = phi_mix(mix, 1.0)?;
    if f1.abs() <= ENDPOINT_TOL {
        return finish(mix, 1.0, f1, near);
    }
    // Geometric down-scan for a point where phi_mix is positive.
    let mut hi = 1.0;
    let mut lo = 0.5;
    let mut f_lo = phi_mix(mix, lo)?;
    while f_lo <= 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo < SCAN_FLOOR {
            return Err(Error::Solver(format!(
                "no sign change of phi_mix found down to {SCAN_FLOOR:e}"
            )));
        }
        f_lo = phi_mix(mix, lo)?;
    }
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if phi_mix(mix, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let f = phi_mix(mix, x)?;
    finish(mix, x, f, near)
}

fn finish(mix: &Mixture, x: f64, f: f64, near_boundary: bool) -> Result<FixedPointResult> {
    let d = phi_mix_prime(mix, x)?;
    let residual = f.abs();
    Ok(FixedPointResult {
        x_star: x,
        residual,
        phi_prime_at: d,
        found: residual <= RESIDUAL_OK && d < 0.0,
        near_boundary,
    })
}
