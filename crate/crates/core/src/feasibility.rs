//! The capacity constraint `S3(x) ≥ Σ p_i S4(a_i, b_i, c_i)` and its checks.
//!
//! [`constraint_gap`] evaluates the constraint only at the couplings
//! `c_i = c_{a_i,b_i}(x*)`. [`brute_min_gap`] minimizes the gap over a
//! Cartesian grid of coupling boxes instead, which is the independent
//! cross-check of that reduction.

use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{coupling, coupling_box, CouplingBox};
use crate::entropy::{s3, s4, CLAMP_TOL};
use crate::fixed_point::{solve_x_star, Mixture};
use crate::{Error, Result};

/// A point is feasible when its gap is at least `-FEASIBILITY_TOL`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
pub const MAX_BRUTE_COMPONENTS: usize = 3;
pub const MAX_BRUTE_GRID: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub x_star: f64,
    pub constraint_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_min_gap: Option<f64>,
    pub feasible: bool,
}

/// `S3(Σ p_i (a_i b̄_i + ā_i b_i + 2 c_i)) - Σ p_i S4(a_i, b_i, c_i)`.
pub fn gap_at(mix: &Mixture, c: &[f64]) -> Result<f64> {
    if c.len() != mix.n() {
        return Err(Error::domain(format!(
            "expected {} couplings, got {}",
            mix.n(),
            c.len()
        )));
    }
    let mut x = 0.0;
    let mut h4 = 0.0;
    for ((p, a, b), &ci) in mix.components().zip(c) {
        let bx = coupling_box(a, b)?;
        if !bx.contains(ci, CLAMP_TOL) {
            return Err(Error::domain(format!(
                "c = {ci} outside coupling box [{}, {}]",
                bx.lo, bx.hi
            )));
        }
        x += p * (a * (1.0 - b) + (1.0 - a) * b + 2.0 * ci);
        h4 += p * s4(a, b, ci)?;
    }
    Ok(s3(x.clamp(0.0, 1.0))? - h4)
}

/// Gap at the fixed-point couplings.
pub fn constraint_gap(mix: &Mixture) -> Result<FeasibilityReport> {
    let fp = solve_x_star(mix)?;
    let c = mix
        .components()
        .map(|(_, a, b)| coupling(a, b, fp.x_star))
        .collect::<Result<Vec<_>>>()?;
    let gap = gap_at(mix, &c)?;
    Ok(FeasibilityReport {
        x_star: fp.x_star,
        constraint_gap: gap,
        brute_min_gap: None,
        feasible: gap >= -FEASIBILITY_TOL,
    })
}

/// [`constraint_gap`] plus, when `grid` is given, the brute-force minimum.
pub fn feasibility(mix: &Mixture, grid: Option<usize>) -> Result<FeasibilityReport> {
    let mut report = constraint_gap(mix)?;
    if let Some(g) = grid {
        report.brute_min_gap = Some(brute_min_gap(mix, g)?);
    }
    Ok(report)
}

/// Grid minimizer of [`gap_at`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMinimum {
    pub value: f64,
    /// Grid index per component.
    pub index: Vec<usize>,
    pub c: Vec<f64>,
    /// Grid spacing per component (zero on degenerate boxes).
    pub step: Vec<f64>,
}

struct Axis {
    points: Vec<f64>,
    /// `p_i (a_i b̄_i + ā_i b_i + 2 c)` per grid point.
    mass: Vec<f64>,
    /// `p_i S4(a_i, b_i, c)` per grid point.
    h4: Vec<f64>,
    step: f64,
}

fn axis(p: f64, a: f64, b: f64, bx: CouplingBox, grid: usize) -> Result<Axis> {
    let (points, step) = if bx.is_degenerate() || grid == 1 {
        (vec![if bx.is_degenerate() { 0.0 } else { bx.lo }], 0.0)
    } else {
        let step = bx.width() / (grid - 1) as f64;
        let pts = (0..grid)
            .map(|k| if k + 1 == grid { bx.hi } else { bx.lo + k as f64 * step })
            .collect();
        (pts, step)
    };
    let s = a * (1.0 - b) + (1.0 - a) * b;
    let mass = points.iter().map(|c| p * (s + 2.0 * c)).collect();
    let h4 = points
        .iter()
        .map(|&c| s4(a, b, c).map(|h| p * h))
        .collect::<Result<Vec<_>>>()?;
    Ok(Axis {
        points,
        mass,
        h4,
        step,
    })
}

fn better(v: f64, idx: &[usize], best_v: f64, best_idx: &[usize]) -> bool {
    v < best_v || (v == best_v && idx < best_idx)
}

/// Minimum of [`gap_at`] over a closed grid with `grid` points per box axis.
///
/// Ties are broken by the lexicographically smallest index vector, so the
/// result does not depend on the thread count.
pub fn brute_minimize(mix: &Mixture, grid: usize) -> Result<GridMinimum> {
    mix.validate()?;
    let n = mix.n();
    if n > MAX_BRUTE_COMPONENTS {
        return Err(Error::Resource(format!(
            "brute-force grid supports at most {MAX_BRUTE_COMPONENTS} components, got {n}"
        )));
    }
    if grid == 0 || grid > MAX_BRUTE_GRID {
        return Err(Error::Resource(format!(
            "grid per axis must be in 1..={MAX_BRUTE_GRID}, got {grid}"
        )));
    }
    let axes = mix
        .components()
        .map(|(p, a, b)| axis(p, a, b, coupling_box(a, b)?, grid))
        .collect::<Result<Vec<_>>>()?;
    let lens: Vec<usize> = axes.iter().map(|ax| ax.points.len()).collect();
    let rest: usize = lens[1..].iter().product();

    let eval = |idx: &[usize]| -> f64 {
        let mut x = 0.0;
        let mut h4 = 0.0;
        for (ax, &k) in axes.iter().zip(idx) {
            x += ax.mass[k];
            h4 += ax.h4[k];
        }
        // Rounding cannot push x out of [0, 1] by more than a few ulps.
        let x = x.clamp(0.0, 1.0);
        s3(x).unwrap_or(f64::NAN) - h4
    };

    let (value, index) = (0..lens[0])
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            let mut best_v = f64::INFINITY;
            let mut best_idx = idx.clone();
            for flat in 0..rest {
                let mut r = flat;
                for d in (1..n).rev() {
                    idx[d] = r % lens[d];
                    r /= lens[d];
                }
                let v = eval(&idx);
                if better(v, &idx, best_v, &best_idx) {
                    best_v = v;
                    best_idx.copy_from_slice(&idx);
                }
            }
            (best_v, best_idx)
        })
        .reduce_with(|x, y| if better(y.0, &y.1, x.0, &x.1) { y } else { x })
        .expect("grid has at least one point");

    let c = index
        .iter()
        .zip(&axes)
        .map(|(&k, ax)| ax.points[k])
        .collect();
    let step = axes.iter().map(|ax| ax.step).collect();
    Ok(GridMinimum {
        value,
        index,
        c,
        step,
    })
}

pub fn brute_min_gap(mix: &Mixture, grid: usize) -> Result<f64> {
    Ok(brute_minimize(mix, grid)?.value)
}
