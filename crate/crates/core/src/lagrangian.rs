//! The upper bound obtained from the Lagrangian
//! `L = objective + λ · constraint_gap` with a fixed multiplier `λ`.
//!
//! At `λ = λ*` the largest candidate value of `L` equals the capacity, which
//! closes the sandwich with the certificate in [`crate::capacity_opt`].

use serde::Serialize;

use crate::capacity_opt::objective;
use crate::coupling::{coupling, joint, JointDistribution};
use crate::entropy::{constants, entropy};
use crate::feasibility::constraint_gap;
use crate::fixed_point::{in_domain, Mixture};
use crate::{Error, Result};

/// Below this distance from 1, `ρ(r)` is replaced by its limit.
pub const RHO_LIMIT_TOL: f64 = 1e-9;
pub const STATIONARY_TOL: f64 = 1e-9;
const GRAD_STEP: f64 = 1e-6;
const MIN_CELL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagrangianParams {
    pub lambda: f64,
    pub x1: f64,
    /// `ρ(r²)` with `r = 2 + √3`.
    pub rho_r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub lambda: f64,
    pub x1: f64,
    pub q_base: f64,
    pub q_case1: f64,
    pub q_case2: f64,
    /// `max(q_case1, q_case2)`.
    pub bound: f64,
    /// `max(bound, q_base)`.
    pub overall: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::domain(format!("lambda = {lambda} outside (0, 1/2)")));
    }
    Ok(())
}

/// `ρ(r) = √r (r^λ - 1) / (r - r^λ)`.
pub fn rho(r: f64, lambda: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("rho needs r > 0, got {r}")));
    }
    check_lambda(lambda)?;
    if (r - 1.0).abs() < RHO_LIMIT_TOL {
        return Ok(lambda / (1.0 - lambda));
    }
    // Rewritten with expm1 so both factors keep full precision near r = 1.
    let l = r.ln();
    Ok(((0.5 - lambda) * l).exp() * (lambda * l).exp_m1() / ((1.0 - lambda) * l).exp_m1())
}

/// The threshold `x1` at multiplier `λ`.
pub fn x1_of(lambda: f64) -> Result<LagrangianParams> {
    check_lambda(lambda)?;
    let r = constants().r_const;
    let r2l = r.powf(2.0 * lambda);
    let x1 = 1.0 / (1.0 + 2.0 * r * (r2l - 1.0) / (r * r - r2l));
    Ok(LagrangianParams {
        lambda,
        x1,
        rho_r2: rho(r * r, lambda)?,
    })
}

/// The three candidate maxima of `L` at multiplier `λ`.
pub fn theorem_bound(lambda: f64) -> Result<BoundReport> {
    let params = x1_of(lambda)?;
    let x1 = params.x1;
    let r = constants().r_const;
    let s3 = 3f64.sqrt();
    let q_base = (1.0 + lambda) / 2.0;
    let q_case1 = 1.0 - lambda * (1.0 + x1).log2();
    let h = entropy(&[r / 4.0 - s3 / 4.0 * x1, 1.0 / (4.0 * r) + s3 / 4.0 * x1])?;
    let q_case2 = h + lambda * (-1.0 + s3 / 2.0 * r.log2() * (1.0 - x1));
    let bound = q_case1.max(q_case2);
    Ok(BoundReport {
        lambda,
        x1,
        q_base,
        q_case1,
        q_case2,
        bound,
        overall: bound.max(q_base),
    })
}

/// Outcome of checking the bound at `λ*` against the capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub report: BoundReport,
    pub rho_r2: f64,
    /// `1 - 4δ/√3`.
    pub x1_closed_form: f64,
    pub capacity: f64,
    pub overall_minus_capacity: f64,
}

/// Evaluate the bound at `λ*` and check it closes on the capacity.
pub fn verify() -> Result<Verification> {
    let k = constants();
    let params = x1_of(k.lambda_star)?;
    let report = theorem_bound(k.lambda_star)?;
    let x1_closed_form = 1.0 - 4.0 * k.delta / 3f64.sqrt();
    let fail = |msg: String| Err(Error::Certification(msg));
    if (params.x1 - x1_closed_form).abs() > 1e-12 {
        return fail(format!("x1 = {} but 1 - 4δ/√3 = {x1_closed_form}", params.x1));
    }
    if (params.x1 - 1.0 / (1.0 + 2.0 * params.rho_r2)).abs() > 1e-12 {
        return fail("x1 disagrees with 1/(1 + 2ρ(r²))".into());
    }
    if !(report.q_case1 < report.q_case2 && report.q_base < report.q_case2) {
        return fail(format!(
            "case 2 is not the largest candidate: {:?}",
            report
        ));
    }
    let diff = report.overall - k.capacity;
    if diff.abs() > 1e-9 {
        return fail(format!("overall bound exceeds capacity by {diff:e}"));
    }
    Ok(Verification {
        report,
        rho_r2: params.rho_r2,
        x1_closed_form,
        capacity: k.capacity,
        overall_minus_capacity: diff,
    })
}

/// `L(mix) = objective(mix) + λ · constraint_gap(mix)`.
pub fn lagrangian_value(mix: &Mixture, lambda: f64) -> Result<f64> {
    Ok(objective(mix) + lambda * constraint_gap(mix)?.constraint_gap)
}

/// Cells of every component at the fixed-point couplings.
pub fn stationary_cells(mix: &Mixture) -> Result<Vec<JointDistribution>> {
    let x = constraint_gap(mix)?.x_star;
    mix.components()
        .map(|(_, a, b)| joint(a, b, coupling(a, b, x)?))
        .collect()
}

fn pair_term(u: f64, v: f64, lambda: f64) -> f64 {
    lambda * (u * v).log2() - (u + v).log2()
}

/// Closed-form `(∂L/∂a_i, ∂L/∂b_i)` for every component.
pub fn partials(mix: &Mixture, lambda: f64) -> Result<Vec<(f64, f64)>> {
    let cells = stationary_cells(mix)?;
    Ok(mix
        .components()
        .zip(cells)
        .map(|((p, _, _), e)| {
            let da = 0.5 * p * (pair_term(e.e1, e.e2, lambda) - pair_term(e.e3, e.e4, lambda));
            let db = 0.5 * p * (pair_term(e.e1, e.e3, lambda) - pair_term(e.e2, e.e4, lambda));
            (da, db)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheck {
    pub max_abs_error: f64,
    pub analytic: Vec<(f64, f64)>,
    pub numeric: Vec<(f64, f64)>,
}

/// Compare [`partials`] against central differences of [`lagrangian_value`].
pub fn grad_check(mix: &Mixture, lambda: f64) -> Result<GradCheck> {
    mix.validate()?;
    for (p, a, b) in mix.components() {
        if !(p > 0.0) || !(a > 0.02 && a < 0.98) || !(b > 0.02 && b < 0.98) {
            return Err(Error::domain(
                "gradient check needs p > 0 and a, b in (0.02, 0.98)",
            ));
        }
    }
    if !in_domain(mix) || mix.components().all(|(_, a, b)| (a + b - 1.0).abs() <= 1e-9) {
        return Err(Error::domain(
            "gradient check needs an in-domain mixture with some a + b != 1",
        ));
    }
    if let Some(e) = stationary_cells(mix)?
        .iter()
        .find(|e| e.cells().iter().any(|&v| v < MIN_CELL))
    {
        return Err(Error::domain(format!(
            "cell mass below {MIN_CELL:e} makes the partials singular: {e:?}"
        )));
    }
    let analytic = partials(mix, lambda)?;
    let mut numeric = Vec::with_capacity(mix.n());
    let mut worst: f64 = 0.0;
    for (i, &(da, db)) in analytic.iter().enumerate() {
        let diff = |field: fn(&mut Mixture) -> &mut Vec<f64>| -> Result<f64> {
            let mut plus = mix.clone();
            field(&mut plus)[i] += GRAD_STEP;
            let mut minus = mix.clone();
            field(&mut minus)[i] -= GRAD_STEP;
            Ok((lagrangian_value(&plus, lambda)? - lagrangian_value(&minus, lambda)?)
                / (2.0 * GRAD_STEP))
        };
        let na = diff(|m| &mut m.a)?;
        let nb = diff(|m| &mut m.b)?;
        worst = worst.max((na - da).abs()).max((nb - db).abs());
        numeric.push((na, nb));
    }
    Ok(GradCheck {
        max_abs_error: worst,
        analytic,
        numeric,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryCase {
    /// `e1 = e4` and `e2 = e3`.
    CaseA,
    /// `e2 = e3` and `y = ρ(e1/e4)`.
    CaseB,
    /// `e1 = e4` and `y = 1/ρ(e2/e3)`.
    CaseC,
    None,
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= STATIONARY_TOL * x.abs().max(y.abs()).max(1.0)
}

fn pair_ratio(u: f64, v: f64, lambda: f64) -> f64 {
    (u * v).powf(lambda) / (u + v)
}

/// Which stationary pattern, if any, a strictly positive cell vector fits.
pub fn classify_stationary(cells: &JointDistribution, lambda: f64) -> Result<StationaryCase> {
    let [e1, e2, e3, e4] = cells.cells();
    if cells.cells().iter().any(|&e| !(e > 0.0)) {
        return Err(Error::domain("all cells must be strictly positive"));
    }
    check_lambda(lambda)?;
    let eq1 = close(pair_ratio(e1, e2, lambda), pair_ratio(e3, e4, lambda));
    let eq2 = close(pair_ratio(e1, e3, lambda), pair_ratio(e2, e4, lambda));
    if !(eq1 && eq2) {
        return Ok(StationaryCase::None);
    }
    let y = (e1 * e4).sqrt() / (e2 * e3).sqrt();
    Ok(if close(e1, e4) && close(e2, e3) {
        StationaryCase::CaseA
    } else if close(e2, e3) && close(y, rho(e1 / e4, lambda)?) {
        StationaryCase::CaseB
    } else if close(e1, e4) && close(y, 1.0 / rho(e2 / e3, lambda)?) {
        StationaryCase::CaseC
    } else {
        StationaryCase::None
    })
}

/// Normalized cells with `e2 = e3`, `e1/e4 = r0` and `y = ρ(r0)`.
pub fn case_b_cells(r0: f64, lambda: f64) -> Result<JointDistribution> {
    let k = r0.sqrt() / rho(r0, lambda)?;
    let e4 = 1.0 / (r0 + 1.0 + 2.0 * k);
    let s = k * e4;
    Ok(JointDistribution {
        e1: r0 * e4,
        e2: s,
        e3: s,
        e4,
    })
}

/// Roots of `r1 + 1 = 4 √r1`, larger first.
pub fn case2_roots() -> (f64, f64) {
    // Quadratic s² - 4s + 1 = 0 in s = √r1.
    let s3 = 3f64.sqrt();
    ((2.0 + s3).powi(2), (2.0 - s3).powi(2))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lstar() -> f64 {
        constants().lambda_star
    }

    #[test]
    fn rho_examples() {
        let l = lstar();
        for r in [0.01, 0.3, 2.0, 17.0] {
            assert!((rho(r, l).unwrap() - rho(1.0 / r, l).unwrap()).abs() < 1e-12);
        }
        let lim = l / (1.0 - l);
        assert_eq!(rho(1.0, l).unwrap(), lim);
        assert!((rho(1.0 + 1e-6, l).unwrap() - lim).abs() < 1e-6);
        let r = constants().r_const;
        // 40-digit reference values.
        assert!((rho(r * r, l).unwrap() - 0.774_688_032_456_256_36).abs() < 1e-14);
        assert!(rho(0.0, l).is_err());
        assert!(rho(-1.0, l).is_err());
    }

    #[test]
    fn x1_examples() {
        let p = x1_of(lstar()).unwrap();
        assert!((p.x1 - 0.392_252_839_337_109_39).abs() < 1e-14);
        assert!((p.x1 - (1.0 - 4.0 * constants().delta / 3f64.sqrt())).abs() <= 1e-12);
        assert!((p.x1 - 1.0 / (1.0 + 2.0 * p.rho_r2)).abs() <= 1e-12);
        assert!(x1_of(1e-6).unwrap().x1 > 0.9999);
        assert!(x1_of(0.0).is_err());
        assert!(x1_of(0.5).is_err());
    }

    #[test]
    fn bound_at_lambda_star() {
        let b = theorem_bound(lstar()).unwrap();
        assert!((b.q_base - 0.72212).abs() < 1e-4);
        assert!((b.q_case2 - 0.78974).abs() < 1e-4);
        // Independent 40-digit evaluation of 1 - λ log2(1 + x1).
        assert!((b.q_case1 - 0.787_909_567_427_692_96).abs() < 1e-13);
        assert!(b.q_case1 < b.q_case2);
        assert!((b.overall - constants().capacity).abs() <= 1e-9);
        assert_eq!(b.bound, b.q_case1.max(b.q_case2));
        let v = verify().unwrap();
        assert!(v.overall_minus_capacity.abs() <= 1e-9);
    }

    #[test]
    fn lagrangian_examples() {
        let a = constants().a_star();
        let m = Mixture::single(a, a).unwrap();
        let l = lagrangian_value(&m, lstar()).unwrap();
        assert!((l - constants().capacity).abs() < 1e-8);
        let low = Mixture::single(0.1, 0.1).unwrap();
        assert!(lagrangian_value(&low, 0.3).unwrap() > objective(&low));
        assert!((lagrangian_value(&low, 1e-12).unwrap() - objective(&low)).abs() < 1e-11);
    }

    #[test]
    fn partials_vanish_at_optimum() {
        let a = constants().a_star();
        let m = Mixture::single(a, a).unwrap();
        let g = partials(&m, lstar()).unwrap();
        assert!(g[0].0.abs() < 1e-6 && g[0].1.abs() < 1e-6, "{g:?}");
    }

    #[test]
    fn partials_symmetric_when_a_equals_b() {
        let m = Mixture::new(vec![0.4, 0.6], vec![0.3, 0.6], vec![0.3, 0.6]).unwrap();
        for (da, db) in partials(&m, 0.3).unwrap() {
            assert!((da - db).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_check_preconditions() {
        let edge = Mixture::single(0.01, 0.3).unwrap();
        assert!(grad_check(&edge, 0.3).is_err());
        let anti = Mixture::single(0.3, 0.7).unwrap();
        assert!(grad_check(&anti, 0.3).is_err());
    }

    #[test]
    fn classifier_examples() {
        let l = lstar();
        let sym = JointDistribution { e1: 0.1, e2: 0.4, e3: 0.4, e4: 0.1 };
        assert_eq!(classify_stationary(&sym, l).unwrap(), StationaryCase::CaseA);
        let cb = case_b_cells(3.0, l).unwrap();
        assert!((cb.cells().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(classify_stationary(&cb, l).unwrap(), StationaryCase::CaseB);
        let generic = JointDistribution { e1: 0.1, e2: 0.2, e3: 0.3, e4: 0.4 };
        assert_eq!(classify_stationary(&generic, l).unwrap(), StationaryCase::None);
        let zero = JointDistribution { e1: 0.0, e2: 0.5, e3: 0.5, e4: 0.0 };
        assert!(classify_stationary(&zero, l).is_err());
    }

    #[test]
    fn case2_quadratic() {
        let (hi, lo) = case2_roots();
        let r = constants().r_const;
        for r1 in [hi, lo] {
            assert!((r1 + 1.0 - 4.0 * r1.sqrt()).abs() < 1e-10);
        }
        assert!((hi - r * r).abs() < 1e-10);
        assert!((lo - 1.0 / (r * r)).abs() < 1e-10);
    }

    #[test]
    fn all_antidiagonal_mixture_value() {
        let m = Mixture::new(vec![0.3, 0.7], vec![0.2, 0.6], vec![0.8, 0.4]).unwrap();
        let l = 0.35;
        let want: f64 = (1.0 - l) * (0.3 * crate::entropy::h2(0.2) + 0.7 * crate::entropy::h2(0.6));
        let got = lagrangian_value(&m, l).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!(got <= 1.0 - l);
    }

    proptest! {
        #[test]
        fn rho_in_range(lr in -8.0f64..8.0, l in 0.01f64..0.49) {
            let r = lr.exp();
            let v = rho(r, l).unwrap();
            prop_assert!(v > 0.0 && v <= l / (1.0 - l));
        }

        #[test]
        fn grad_check_interior(a in 0.05f64..0.95, b in 0.05f64..0.95, l in 0.05f64..0.49) {
            let m = Mixture::single(a, b).unwrap();
            prop_assume!(in_domain(&m) && (a + b - 1.0).abs() > 0.05);
            match grad_check(&m, l) {
                Ok(g) => prop_assert!(g.max_abs_error < 1e-4, "{:?}", g),
                Err(Error::Domain(_)) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}
