//! The rate objective, the certificate at the symmetric optimum, and a
//! multistart derivative-free optimizer over feasible mixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::coupling_box;
use crate::entropy::{constants, h2};
use crate::feasibility::{
    brute_min_gap, constraint_gap, gap_at, FeasibilityReport, FEASIBILITY_TOL,
};
use crate::fixed_point::{in_domain, Mixture};
use crate::{Error, Result};

pub const MAX_COMPONENTS: usize = 3;
const N1_GRID: usize = 200;
const WEIGHTED_GRID: usize = 201;
const WEIGHTED_BRUTE_GRID: usize = 400;
const CERTIFY_GRID: usize = 100;
const CERTIFY_TOL: f64 = 1e-6;
const CERT_POINTS: usize = 10_000;
const START_ATTEMPTS: usize = 10_000;
const FRONTIER_ITERS: usize = 48;
const GOLDEN_TOL: f64 = 1e-12;
const SWEEP_WINDOWS: [f64; 3] = [1.0, 0.05, 0.005];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
}

/// Per-sender rates `Σ p_i H2(a_i)` and `Σ p_i H2(b_i)`.
pub fn rate_point(mix: &Mixture) -> RatePoint {
    let mut r = RatePoint { r1: 0.0, r2: 0.0 };
    for (p, a, b) in mix.components() {
        r.r1 += p * h2(a);
        r.r2 += p * h2(b);
    }
    r
}

/// Average rate `(r1 + r2) / 2`.
pub fn objective(mix: &Mixture) -> f64 {
    let r = rate_point(mix);
    0.5 * (r.r1 + r.r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BelokopytovCertificate {
    pub a_star: f64,
    pub c_star: f64,
    #[serde(rename = "M_at_cstar")]
    pub m_at_cstar: f64,
    pub grid_min: f64,
    pub grid_points: usize,
    pub rate: f64,
}

/// `M(c)`: the constraint gap at `a = b = 1/2 - δ` as a function of the
/// coupling.
pub fn belokopytov_m(c: f64) -> Result<f64> {
    let a = constants().a_star();
    gap_at(&Mixture::single(a, a)?, &[c])
}

/// `M'(c)` from its closed form
/// `2^{M'(c)} = (1/4 + δ² - c)² / (4((1/2 - δ)² - c)((1/2 + δ)² - c))`.
pub fn belokopytov_m_prime(c: f64) -> f64 {
    let d = constants().delta;
    let num = 0.25 + d * d - c;
    let den = 4.0 * ((0.5 - d).powi(2) - c) * ((0.5 + d).powi(2) - c);
    (num * num / den).log2()
}

/// Check that `(a*, a*)` with `a* = 1/2 - δ` is feasible and tight.
pub fn belokopytov_certificate() -> Result<BelokopytovCertificate> {
    let k = constants();
    let a = k.a_star();
    let c_star = k.c_star();
    let m_at_cstar = belokopytov_m(c_star)?;
    let bx = coupling_box(a, a)?;
    let mix = Mixture::single(a, a)?;
    let mut grid_min = f64::INFINITY;
    for i in 0..CERT_POINTS {
        let c = if i + 1 == CERT_POINTS {
            bx.hi
        } else {
            bx.lo + bx.width() * i as f64 / (CERT_POINTS - 1) as f64
        };
        grid_min = grid_min.min(gap_at(&mix, &[c])?);
    }
    let rate = objective(&mix);
    if m_at_cstar.abs() > 1e-9 {
        return Err(Error::Certification(format!("M(c*) = {m_at_cstar:e}")));
    }
    if grid_min < -CERTIFY_TOL {
        return Err(Error::Certification(format!("grid minimum of M is {grid_min:e}")));
    }
    if (rate - k.capacity).abs() > 1e-9 {
        return Err(Error::Certification(format!(
            "rate {rate} differs from capacity {}",
            k.capacity
        )));
    }
    Ok(BelokopytovCertificate {
        a_star: a,
        c_star,
        m_at_cstar,
        grid_min,
        grid_points: CERT_POINTS,
        rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizeOptions {
    pub n: usize,
    pub restarts: usize,
    pub seed: u64,
    /// When false the constraint is ignored (diagnostic only).
    pub enforce_feasibility: bool,
    pub sweeps: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            n: 1,
            restarts: 16,
            seed: 1,
            enforce_feasibility: true,
            sweeps: SWEEP_WINDOWS.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best_mix: Mixture,
    pub rate: f64,
    /// Feasibility at the optimum, with the brute-force grid minimum filled
    /// in when the constraint is enforced.
    pub report: FeasibilityReport,
    pub restarts_used: usize,
    pub enforce_feasibility: bool,
}

/// Maximize [`objective`] over feasible mixtures with `n` components.
pub fn optimize(n: usize, restarts: usize, seed: u64) -> Result<OptimizationResult> {
    optimize_with(&OptimizeOptions {
        n,
        restarts,
        seed,
        ..OptimizeOptions::default()
    })
}

pub fn optimize_with(opts: &OptimizeOptions) -> Result<OptimizationResult> {
    if opts.n == 0 || opts.n > MAX_COMPONENTS {
        return Err(Error::domain(format!(
            "n must be in 1..={MAX_COMPONENTS}, got {}",
            opts.n
        )));
    }
    let enforce = opts.enforce_feasibility;
    let feasible = move |m: &Mixture| !enforce || is_feasible(m);
    let start = best_grid_point(N1_GRID, objective, &feasible)?
        .ok_or_else(|| Error::Optimization("no feasible grid point".into()))?;
    let single = refine(start, opts.sweeps, &objective, &feasible);
    let (best, restarts_used) = if opts.n == 1 {
        (single, 1)
    } else {
        if opts.restarts == 0 {
            return Err(Error::domain("restarts must be positive for n > 1"));
        }
        let runs: Vec<Option<Mixture>> = (0..opts.restarts)
            .into_par_iter()
            .map(|k| {
                let mut rng = restart_rng(opts.seed, k as u64);
                random_start(opts.n, &mut rng, &feasible)
                    .map(|m| refine(m, opts.sweeps, &objective, &feasible))
            })
            .collect();
        // The single-component optimum, padded with empty components, keeps
        // the result monotone in `n`.
        let mut warm = single;
        for _ in 1..opts.n {
            warm.p.push(0.0);
            warm.a.push(0.5);
            warm.b.push(0.5);
        }
        let warm = refine(warm, opts.sweeps, &objective, &feasible);
        let mut best: Option<(f64, Mixture)> = Some((objective(&warm), warm));
        for m in runs.into_iter().flatten() {
            let v = objective(&m);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, m));
            }
        }
        let (_, m) = best.ok_or_else(|| Error::Optimization("no feasible start found".into()))?;
        (m, opts.restarts)
    };
    let mut report = constraint_gap(&best)?;
    if enforce {
        let g = brute_min_gap(&best, CERTIFY_GRID)?;
        report.brute_min_gap = Some(g);
        if !report.feasible || g < -CERTIFY_TOL {
            return Err(Error::Certification(format!(
                "optimum failed certification: gap {}, grid minimum {g}",
                report.constraint_gap
            )));
        }
    }
    Ok(OptimizationResult {
        rate: objective(&best),
        best_mix: best,
        report,
        restarts_used,
        enforce_feasibility: enforce,
    })
}

/// Independent stream per restart, so results for restart `k` do not depend
/// on how many restarts run.
fn restart_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

fn is_feasible(m: &Mixture) -> bool {
    in_domain(m)
        && constraint_gap(m)
            .map(|r| r.constraint_gap >= -FEASIBILITY_TOL)
            .unwrap_or(false)
}

fn random_start<R: Rng, F: Fn(&Mixture) -> bool>(n: usize, rng: &mut R, feasible: &F) -> Option<Mixture> {
    for _ in 0..START_ATTEMPTS {
        let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let total: f64 = w.iter().sum();
        let mut p: Vec<f64> = w.iter().map(|v| v / total).collect();
        let head: f64 = p[..n - 1].iter().sum();
        p[n - 1] = 1.0 - head;
        let a = (0..n).map(|_| rng.gen::<f64>()).collect();
        let b = (0..n).map(|_| rng.gen::<f64>()).collect();
        let m = Mixture { p, a, b };
        if feasible(&m) {
            return Some(m);
        }
    }
    None
}

/// Best feasible single-component point on the closed `grid × grid` lattice.
///
/// Points are visited in decreasing objective order, so the first feasible
/// one is the answer.
fn best_grid_point<O, F>(grid: usize, obj: O, feasible: &F) -> Result<Option<Mixture>>
where
    O: Fn(&Mixture) -> f64,
    F: Fn(&Mixture) -> bool,
{
    let step = 1.0 / (grid - 1) as f64;
    let mut cells = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            let m = Mixture::single(i as f64 * step, j as f64 * step)?;
            cells.push((obj(&m), i, j, m));
        }
    }
    cells.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    Ok(cells.into_iter().map(|c| c.3).find(|m| feasible(m)))
}

#[derive(Debug, Clone, Copy)]
enum Coord {
    A(usize),
    B(usize),
    /// Moves weight between `p_i` and the last component.
    P(usize),
}

fn coords(n: usize) -> Vec<Coord> {
    let mut v = Vec::with_capacity(3 * n - 1);
    for i in 0..n {
        v.push(Coord::A(i));
        v.push(Coord::B(i));
    }
    for i in 0..n - 1 {
        v.push(Coord::P(i));
    }
    v
}

fn t_range(m: &Mixture, c: Coord) -> (f64, f64) {
    match c {
        Coord::A(i) => (-m.a[i], 1.0 - m.a[i]),
        Coord::B(i) => (-m.b[i], 1.0 - m.b[i]),
        Coord::P(i) => {
            let last = m.n() - 1;
            (-m.p[i].min(1.0 - m.p[last]), (1.0 - m.p[i]).min(m.p[last]))
        }
    }
}

fn moved(m: &Mixture, c: Coord, t: f64) -> Mixture {
    let mut out = m.clone();
    match c {
        Coord::A(i) => out.a[i] = (m.a[i] + t).clamp(0.0, 1.0),
        Coord::B(i) => out.b[i] = (m.b[i] + t).clamp(0.0, 1.0),
        Coord::P(i) => {
            let last = m.n() - 1;
            out.p[i] = (m.p[i] + t).clamp(0.0, 1.0);
            let head: f64 = out.p[..last].iter().sum();
            out.p[last] = (1.0 - head).max(0.0);
        }
    }
    out
}

/// Largest feasible step toward `t_end`, by bisection from the feasible
/// point at `t = 0`.
fn frontier<F: Fn(&Mixture) -> bool>(m: &Mixture, c: Coord, t_end: f64, feasible: &F) -> f64 {
    if feasible(&moved(m, c, t_end)) {
        return t_end;
    }
    let (mut good, mut bad) = (0.0, t_end);
    for _ in 0..FRONTIER_ITERS {
        let mid = 0.5 * (good + bad);
        if feasible(&moved(m, c, mid)) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

fn golden_max<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = g(x1);
        }
    }
    // The interval ends are candidates too: the objective may be monotone.
    [lo, hi, 0.5 * (lo + hi)]
        .into_iter()
        .max_by(|x, y| g(*x).total_cmp(&g(*y)))
        .unwrap()
}

/// Coordinate-wise golden-section ascent inside the feasible set.
fn refine<O, F>(start: Mixture, sweeps: usize, obj: &O, feasible: &F) -> Mixture
where
    O: Fn(&Mixture) -> f64,
    F: Fn(&Mixture) -> bool,
{
    let mut cur = start;
    let mut best = obj(&cur);
    for sweep in 0..sweeps {
        let w = SWEEP_WINDOWS[sweep.min(SWEEP_WINDOWS.len() - 1)];
        for c in coords(cur.n()) {
            let (tmin, tmax) = t_range(&cur, c);
            let lo = frontier(&cur, c, tmin.max(-w), feasible);
            let hi = frontier(&cur, c, tmax.min(w), feasible);
            if hi - lo <= 0.0 {
                continue;
            }
            let t = golden_max(|t| obj(&moved(&cur, c, t)), lo, hi);
            let cand = moved(&cur, c, t);
            let v = obj(&cand);
            if v > best && feasible(&cand) {
                best = v;
                cur = cand;
            }
        }
    }
    cur
}

/// One row of the single-component feasibility grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub a: f64,
    pub b: f64,
    /// Absent outside the domain `D_1`.
    pub gap: Option<f64>,
    pub objective: f64,
}

/// Constraint gap and objective on the closed `grid × grid` lattice.
pub fn feasibility_grid(grid: usize) -> Result<Vec<GridRow>> {
    if grid < 2 {
        return Err(Error::domain("grid must have at least 2 points per axis"));
    }
    let step = 1.0 / (grid - 1) as f64;
    (0..grid * grid)
        .into_par_iter()
        .map(|k| {
            let (a, b) = ((k / grid) as f64 * step, (k % grid) as f64 * step);
            let m = Mixture::single(a, b)?;
            let gap = if in_domain(&m) {
                Some(constraint_gap(&m)?.constraint_gap)
            } else {
                None
            };
            Ok(GridRow {
                a,
                b,
                gap,
                objective: objective(&m),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedResult {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub b: f64,
    pub value: f64,
    /// Brute-force minimum of the constraint over the coupling box.
    pub constraint_grid_min: f64,
    /// Always true: the weighted problem is an open conjecture and this is a
    /// candidate value only.
    pub conjectural: bool,
}

/// Exploratory maximization of `c1 H2(a) + c2 H2(b)` under the constraint for
/// every coupling in the box.
pub fn weighted_optimize(c1: f64, c2: f64) -> Result<WeightedResult> {
    if !(c1 >= 0.0 && c2 >= 0.0 && (c1 + c2 - 1.0).abs() <= 1e-12) {
        return Err(Error::domain(format!(
            "weights must be nonnegative and sum to 1, got ({c1}, {c2})"
        )));
    }
    let value = move |m: &Mixture| c1 * h2(m.a[0]) + c2 * h2(m.b[0]);
    let feasible = |m: &Mixture| {
        brute_min_gap(m, WEIGHTED_BRUTE_GRID)
            .map(|g| g >= -FEASIBILITY_TOL)
            .unwrap_or(false)
    };
    let start = best_grid_point(WEIGHTED_GRID, value, &feasible)?
        .ok_or_else(|| Error::Optimization("no feasible grid point".into()))?;
    let best = refine(start, SWEEP_WINDOWS.len(), &value, &feasible);
    Ok(WeightedResult {
        c1,
        c2,
        a: best.a[0],
        b: best.b[0],
        value: value(&best),
        constraint_grid_min: brute_min_gap(&best, WEIGHTED_BRUTE_GRID)?,
        conjectural: true,
    })
}
