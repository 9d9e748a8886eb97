//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use adder_capacity::adder_code::{
    code_to_strategy, is_uniquely_decodable, strategy_to_code, Strategy,
};
use adder_capacity::capacity_opt::{belokopytov_certificate, optimize};
use adder_capacity::coupling::{eval_m, phi, phi_prime, solve_c, Method};
use adder_capacity::entropy::{constants, h2};
use adder_capacity::feasibility::{brute_minimize, constraint_gap};
use adder_capacity::fixed_point::{in_domain, sign_change_brackets, solve_x_star, Mixture};
use adder_capacity::group_testing::{
    bounds, exact_depth, exact_t, exact_t_nn, greedy_strategy, replay, table, CandidateState,
    SearchLimits, TableOptions, Variant,
};
use adder_capacity::lagrangian::{
    case2_roots, case_b_cells, classify_stationary, grad_check, rho, verify, StationaryCase,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, &'static str, u64, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: adder_capacity::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_mixture(rng: &mut ChaCha8Rng, max_n: usize) -> Mixture {
    loop {
        let n = rng.gen_range(1..=max_n);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let p = w.iter().map(|v| v / total).collect();
        let a = (0..n).map(|_| rng.gen::<f64>()).collect();
        let b = (0..n).map(|_| rng.gen::<f64>()).collect();
        if let Ok(m) = Mixture::new(p, a, b) {
            if in_domain(&m) {
                return m;
            }
        }
    }
}

fn ac1() -> Outcome {
    let cert = lib(belokopytov_certificate())?;
    let target = h2(0.5 - constants().delta);
    ensure((cert.rate - target).abs() <= 1e-12, || format!("rate {} != H2 {target}", cert.rate))?;
    ensure((cert.rate - 0.78974).abs() <= 1e-4, || format!("rate {}", cert.rate))?;
    ensure(cert.m_at_cstar.abs() <= 1e-9, || format!("M(c*) = {:e}", cert.m_at_cstar))?;
    ensure(cert.grid_points >= 10_000, || format!("{} grid points", cert.grid_points))?;
    ensure(cert.grid_min >= -1e-6, || format!("grid min {:e}", cert.grid_min))?;
    Ok(format!(
        "rate = {:.10}, M(c*) = {:.1e}, grid min = {:.1e}",
        cert.rate, cert.m_at_cstar, cert.grid_min
    ))
}

fn ac2() -> Outcome {
    let v = lib(verify())?;
    let r = v.report;
    ensure((r.q_base - 0.72212).abs() <= 1e-4, || format!("q_base {}", r.q_base))?;
    ensure((r.q_case2 - 0.78974).abs() <= 1e-4, || format!("q_case2 {}", r.q_case2))?;
    ensure(r.q_case1 < r.q_case2, || format!("q_case1 {} >= q_case2 {}", r.q_case1, r.q_case2))?;
    ensure((r.q_case1 - 0.787_909_567_427_693).abs() <= 1e-12, || {
        format!("q_case1 {} moved from the recorded value", r.q_case1)
    })?;
    ensure((r.overall - v.capacity).abs() <= 1e-9, || {
        format!("overall {} vs capacity {}", r.overall, v.capacity)
    })?;
    Ok(format!(
        "q_base = {:.8}, q_case1 = {:.8}, q_case2 = {:.8}, overall - capacity = {:.1e}",
        r.q_base, r.q_case1, r.q_case2, v.overall_minus_capacity
    ))
}

fn ac3() -> Outcome {
    let one = lib(optimize(1, 16, 1))?;
    ensure((0.78960..=0.78975).contains(&one.rate), || format!("n=1 rate {}", one.rate))?;
    ensure(one.report.feasible, || format!("n=1 infeasible: {:?}", one.report))?;
    let certified = one.report.brute_min_gap.is_some_and(|g| g >= -1e-6);
    ensure(certified, || format!("n=1 certificate {:?}", one.report.brute_min_gap))?;
    let two = lib(optimize(2, 64, 1))?;
    ensure(two.rate <= 0.78975, || format!("n=2 rate {}", two.rate))?;
    ensure(two.report.feasible, || format!("n=2 infeasible: {:?}", two.report))?;
    Ok(format!("n=1 rate = {:.8}, n=2 rate = {:.8}", one.rate, two.rate))
}

fn ac4() -> Outcome {
    let mut r = rng(4);
    let (mut worst_diff, mut worst_res) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (a, b, x) = (r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>());
        let closed = lib(solve_c(a, b, x, Method::Closed))?;
        let bisect = lib(solve_c(a, b, x, Method::Bisect))?;
        worst_diff = worst_diff.max((closed - bisect).abs());
        worst_res = worst_res.max(lib(eval_m(a, b, closed, x))?.abs());
    }
    ensure(worst_diff <= 1e-9, || format!("max |closed - bisect| = {worst_diff:e}"))?;
    ensure(worst_res <= 1e-10, || format!("max residual {worst_res:e}"))?;
    Ok(format!("max diff = {worst_diff:.1e}, max residual = {worst_res:.1e}"))
}

fn ac5() -> Outcome {
    let mut r = rng(5);
    let mut worst_res = 0.0f64;
    for k in 0..10_000 {
        let m = random_mixture(&mut r, 3);
        let fp = lib(solve_x_star(&m))?;
        let brackets = lib(sign_change_brackets(&m, 10_000))?;
        ensure(brackets.len() == 1, || {
            format!("mixture {k} {m:?}: {} sign changes, x* = {}", brackets.len(), fp.x_star)
        })?;
        let (lo, hi) = brackets[0];
        ensure(lo <= fp.x_star && fp.x_star <= hi, || {
            format!("x* = {} outside bracket ({lo}, {hi})", fp.x_star)
        })?;
        ensure(fp.phi_prime_at < 0.0, || format!("phi'(x*) = {}", fp.phi_prime_at))?;
        worst_res = worst_res.max(fp.residual);
    }
    ensure(worst_res <= 1e-11, || format!("max residual {worst_res:e}"))?;

    // x* = 1 exactly when every component has a + b = 1.
    for k in 0..1_000 {
        let mut m = random_mixture(&mut r, 3);
        let on_line = k % 2 == 0;
        if on_line {
            m.b = m.a.iter().map(|a| 1.0 - a).collect();
        }
        let fp = lib(solve_x_star(&m))?;
        let line = m.components().all(|(_, a, b)| (a + b - 1.0).abs() < 1e-10);
        let at_one = (fp.x_star - 1.0).abs() <= 1e-10;
        ensure(line == at_one, || format!("{m:?}: x* = {}, on line = {line}", fp.x_star))?;
    }

    // a = b = t/2 with the D_1 margin sqrt(a(1-a)) - 1/4 shrinking.
    let mut prev = f64::INFINITY;
    let mut last = 0.0;
    for margin in [1e-1f64, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let s = 0.25 + margin;
        let a = 0.5 * (1.0 - (1.0 - 4.0 * s * s).sqrt());
        let x = lib(solve_x_star(&lib(Mixture::single(a, a))?))?.x_star;
        ensure(x < prev, || format!("x* not decreasing at margin {margin:e}"))?;
        if margin < 1e-3 {
            ensure(x < 0.05, || format!("x* = {x} at margin {margin:e}"))?;
        }
        prev = x;
        last = x;
    }
    Ok(format!("max residual = {worst_res:.1e}, x* at margin 1e-6 = {last:.2e}"))
}

/// `m(x)` from the uniqueness argument, as a plain polynomial.
fn mxmx_m(a: f64, b: f64, x: f64) -> f64 {
    (a + b - x) * (2.0 - a - b - x) * (2.0 * x).powi(2) + (a - b + x) * (a - b - x) * (1.0 - x).powi(2)
}

fn ac6() -> Outcome {
    let mut worst_end = 0.0f64;
    for i in 0..100 {
        for j in 0..100 {
            let (a, b) = (i as f64 / 99.0, j as f64 / 99.0);
            worst_end = worst_end
                .max((lib(phi(a, b, 0.0))? - (a - b).abs()).abs())
                .max((lib(phi(a, b, 1.0))? + (a + b - 1.0).abs()).abs());
        }
    }
    ensure(worst_end <= 1e-12, || format!("endpoint error {worst_end:e}"))?;

    let x = 1e-3;
    for k in 1..=9 {
        let a = k as f64 / 10.0;
        let g = 4.0 * (a * (1.0 - a)).sqrt();
        let second = (lib(phi(a, a, x))? - (g - 1.0) * x) / (x * x);
        ensure((second - (g - 4.0)).abs() <= 1e-2, || {
            format!("a = {a}: second coefficient {second} vs {}", g - 4.0)
        })?;
    }

    let mut worst_half = 0.0f64;
    for k in 0..=1000 {
        let x = k as f64 / 1000.0;
        worst_half = worst_half.max((lib(phi(0.5, 0.5, x))? - x * (1.0 - x) / (1.0 + x)).abs());
    }
    ensure(worst_half <= 1e-10, || format!("phi_(1/2,1/2) error {worst_half:e}"))?;

    let mut r = rng(6);
    let mut worst_id = 0.0f64;
    for _ in 0..1_000 {
        let (a, b, x) = (r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>());
        let h = 1e-3;
        let m = |t| mxmx_m(a, b, t);
        let dm = (m(x - 2.0 * h) - 8.0 * m(x - h) + 8.0 * m(x + h) - m(x + 2.0 * h)) / (12.0 * h);
        let rhs = 2.0 * (1.0 - x) * ((a - b).powi(2) + 3.0 * x.powi(3));
        worst_id = worst_id.max((2.0 * m(x) - x * dm - rhs).abs());
    }
    ensure(worst_id <= 1e-10, || format!("2m - x m' identity error {worst_id:e}"))?;

    // phi(x) = x phi'(x) has no root: the sign is constant along each scan.
    for _ in 0..1_000 {
        let (a, b) = (r.gen::<f64>(), r.gen::<f64>());
        let mut sign = 0.0;
        for k in 1..=1000 {
            let x = k as f64 / 1000.0;
            let v = lib(phi(a, b, x))? - x * lib(phi_prime(a, b, x))?;
            ensure(v != 0.0 && (sign == 0.0 || v.signum() == sign), || {
                format!("phi - x phi' changes sign for a = {a}, b = {b} at x = {x}")
            })?;
            sign = v.signum();
        }
    }
    Ok(format!(
        "endpoints {worst_end:.1e}, half {worst_half:.1e}, identity {worst_id:.1e}"
    ))
}

fn ac7() -> Outcome {
    let mut r = rng(7);
    let mut compared = 0;
    let mut worst_cells = 0.0f64;
    for k in 0..200 {
        let m = random_mixture(&mut r, 2);
        let report = lib(constraint_gap(&m))?;
        let grid = lib(brute_minimize(&m, 200))?;
        let gap = report.constraint_gap;
        ensure(grid.value >= gap - 1e-9, || {
            format!("mixture {k}: grid minimum {:e} below the gap {gap:e}", grid.value)
        })?;
        if gap.abs() > 1e-4 {
            compared += 1;
            ensure((gap > 0.0) == (grid.value > 0.0), || {
                format!("mixture {k}: gap {gap:e}, grid minimum {:e}", grid.value)
            })?;
        }
        for (i, (_, a, b)) in m.components().enumerate() {
            let step = grid.step[i];
            if step == 0.0 {
                continue;
            }
            let c = lib(solve_c(a, b, report.x_star, Method::Closed))?;
            let cells = (grid.c[i] - c).abs() / step;
            worst_cells = worst_cells.max(cells);
            ensure(cells <= 2.0, || {
                format!("mixture {k} component {i}: argmin {} vs c(x*) {c}, {cells:.2} cells", grid.c[i])
            })?;
        }
    }
    Ok(format!("{compared}/200 signs compared, argmin within {worst_cells:.2} cells"))
}

fn ac8() -> Outcome {
    let mut r = rng(8);
    let lambda = constants().lambda_star;
    let (mut done, mut worst) = (0, 0.0f64);
    while done < 100 {
        let n = r.gen_range(1..=3);
        let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        let p = w.iter().map(|v| v / total).collect();
        let a = (0..n).map(|_| r.gen_range(0.05..0.95)).collect();
        let b = (0..n).map(|_| r.gen_range(0.05..0.95)).collect();
        let m = lib(Mixture::new(p, a, b))?;
        // Skip mixtures whose stationary cells are nearly singular.
        let Ok(g) = grad_check(&m, lambda) else { continue };
        ensure(g.max_abs_error < 1e-4, || format!("{m:?}: error {:e}", g.max_abs_error))?;
        worst = worst.max(g.max_abs_error);
        done += 1;
    }
    Ok(format!("100 mixtures, max error = {worst:.1e}"))
}

fn ac9() -> Outcome {
    let mut r = rng(9);
    for _ in 0..20 {
        let lambda = r.gen_range(0.01..0.49);
        let sup = lambda / (1.0 - lambda);
        let grid: Vec<f64> = (0..1000).map(|k| 10f64.powf(-4.0 + 8.0 * k as f64 / 999.0)).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| rho(t, lambda)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        for w in 0..grid.len() - 1 {
            let (r0, r1) = (grid[w], grid[w + 1]);
            let up = vals[w + 1] > vals[w];
            if r1 <= 1.0 {
                ensure(up, || format!("lambda {lambda}: not increasing at r = {r0}"))?;
            } else if r0 >= 1.0 {
                ensure(!up, || format!("lambda {lambda}: not decreasing at r = {r0}"))?;
            }
        }
        ensure(vals.iter().all(|&v| v > 0.0 && v < sup), || format!("lambda {lambda}: value outside (0, {sup})"))?;
        for &t in &grid {
            let d = (lib(rho(t, lambda))? - lib(rho(1.0 / t, lambda))?).abs();
            ensure(d <= 1e-12, || format!("rho({t}) != rho(1/{t}) by {d:e}"))?;
        }
        for _ in 0..200 {
            let (s, t) = (10f64.powf(r.gen_range(-3.0..3.0)), 10f64.powf(r.gen_range(-3.0..3.0)));
            if (lib(rho(s, lambda))? - lib(rho(t, lambda))?).abs() < 1e-12 {
                ensure((s - t).abs() < 1e-6 || (s * t - 1.0).abs() < 1e-6, || {
                    format!("rho({s}) = rho({t}) without r = r' or r r' = 1")
                })?;
            }
            let r0 = if s == 1.0 { 2.0 } else { s };
            let cells = lib(case_b_cells(r0, lambda))?;
            let case = lib(classify_stationary(&cells, lambda))?;
            ensure(case == StationaryCase::CaseB, || format!("r0 = {r0}: classified {case:?}"))?;
        }
    }
    let (big, small) = case2_roots();
    let sq = 2.0 + 3f64.sqrt();
    for (root, want) in [(big, sq * sq), (small, 1.0 / (sq * sq))] {
        ensure((root + 1.0 - 4.0 * root.sqrt()).abs() <= 1e-10, || format!("root {root} fails"))?;
        ensure((root - want).abs() <= 1e-10, || format!("root {root} vs {want}"))?;
    }
    Ok("20 seeded lambdas, 1000-point log grid each".into())
}

const T_SINGLE: [(usize, u32); 8] = [(2, 0), (3, 2), (4, 3), (5, 3), (6, 4), (7, 4), (8, 4), (9, 5)];
const T_TWO: [(usize, u32); 6] = [(1, 0), (2, 2), (3, 3), (4, 3), (5, 4), (6, 4)];

fn relabel(state: &CandidateState, rng: &mut ChaCha8Rng) -> Result<CandidateState, String> {
    let mut p1: Vec<usize> = (0..state.n1).collect();
    let mut p2: Vec<usize> = (0..state.n2).collect();
    p1.shuffle(rng);
    p2.shuffle(rng);
    let pairs: Vec<(usize, usize)> = state
        .candidates()
        .into_iter()
        .map(|(i, j)| match state.variant {
            Variant::SingleSet => (p1[i].min(p1[j]), p1[i].max(p1[j])),
            Variant::TwoSets => (p1[i], p2[j]),
        })
        .collect();
    lib(CandidateState::from_pairs(state.variant, state.n1, state.n2, &pairs))
}

fn ac10() -> Outcome {
    let start = Instant::now();
    for (n, want) in T_SINGLE {
        let res = lib(exact_t(n))?;
        ensure(res.depth == want, || format!("t({n}) = {}, expected {want}", res.depth))?;
        let state = lib(CandidateState::full_single(n))?;
        ensure(lib(replay(&res.tree, &state))?, || format!("t({n}) witness fails"))?;
        let info = lib(bounds(n, Variant::SingleSet))?.info_lower;
        let greedy = lib(greedy_strategy(&state))?;
        ensure(lib(replay(&greedy, &state))?, || format!("greedy({n}) fails"))?;
        ensure(info <= res.depth && res.depth as usize <= greedy.depth, || {
            format!("n = {n}: {info} <= {} <= {} fails", res.depth, greedy.depth)
        })?;
        if n == 7 {
            ensure(start.elapsed() < Duration::from_secs(600), || "t(2..7) over 10 min".into())?;
        }
    }
    for (n, want) in T_TWO {
        let res = lib(exact_t_nn(n))?;
        ensure(res.depth == want, || format!("t({n},{n}) = {}, expected {want}", res.depth))?;
        let state = lib(CandidateState::full_two(n, n))?;
        ensure(lib(replay(&res.tree, &state))?, || format!("t({n},{n}) witness fails"))?;
        let info = lib(bounds(n, Variant::TwoSets))?.info_lower;
        let greedy = lib(greedy_strategy(&state))?;
        ensure(lib(replay(&greedy, &state))?, || format!("greedy({n},{n}) fails"))?;
        ensure(info <= res.depth && res.depth as usize <= greedy.depth, || {
            format!("n = {n}: {info} <= {} <= {} fails", res.depth, greedy.depth)
        })?;
    }

    // Relabeling a random candidate subset leaves the exact depth unchanged.
    let mut r = rng(10);
    let limits = SearchLimits::default();
    for k in 0..60 {
        let full = if k % 2 == 0 {
            lib(CandidateState::full_single(r.gen_range(3..=7)))?
        } else {
            lib(CandidateState::full_two(r.gen_range(2..=4), r.gen_range(2..=4)))?
        };
        let mut pairs = full.candidates();
        pairs.shuffle(&mut r);
        pairs.truncate(r.gen_range(2..=pairs.len()));
        let state = lib(CandidateState::from_pairs(full.variant, full.n1, full.n2, &pairs))?;
        let moved = relabel(&state, &mut r)?;
        let d0 = lib(exact_depth(&state, &limits))?;
        let d1 = lib(exact_depth(&moved, &limits))?;
        ensure(d0.depth == d1.depth, || format!("relabeling changed depth {} -> {}", d0.depth, d1.depth))?;
        ensure(lib(replay(&d0.tree, &state))?, || "subset witness fails".into())?;
    }
    Ok(format!(
        "t(2..9) = {:?}, t_nn(1..6) = {:?}, {:.2?}",
        T_SINGLE.map(|v| v.1),
        T_TWO.map(|v| v.1),
        start.elapsed()
    ))
}

fn ac11() -> Outcome {
    let witness = lib(exact_t_nn(2))?.tree;
    let code = lib(strategy_to_code(&witness))?;
    ensure((code.m1, code.m2, code.n_uses) == (2, 2, 2), || {
        format!("code shape ({}, {}, {})", code.m1, code.m2, code.n_uses)
    })?;
    let check = lib(is_uniquely_decodable(&code))?;
    ensure(check.uniquely_decodable, || format!("not uniquely decodable: {:?}", check.counterexample))?;
    ensure(lib(code_to_strategy(&code))? == witness, || "witness round trip differs".into())?;

    let mut r = rng(11);
    for _ in 0..100 {
        let (n1, n2, depth) = (r.gen_range(1..=4), r.gen_range(1..=4), r.gen_range(1..=3));
        let s = Strategy::random(n1, n2, depth, &mut r);
        let back = lib(code_to_strategy(&lib(strategy_to_code(&s))?))?;
        ensure(back == s, || format!("round trip differs for {s:?}"))?;
    }
    Ok("(2, 2, 2) code uniquely decodable, 100 round trips".into())
}

fn ac12() -> Outcome {
    let rows = lib(table(&TableOptions {
        n_max: 12,
        exact_max: 9,
        exact_nn_max: 6,
    }))?;
    let mut ratios = BTreeMap::new();
    for row in &rows {
        ensure((row.asymptotic_constant - 1.26624).abs() <= 1e-5, || {
            format!("reference constant {}", row.asymptotic_constant)
        })?;
        let depth = row.exact_t.unwrap_or(row.greedy);
        ensure(row.info_lower <= depth && depth <= row.greedy, || format!("row {row:?}"))?;
        ensure((row.ratio_to_log2n - depth as f64 / (row.n as f64).log2()).abs() < 1e-12, || {
            format!("ratio in row {row:?}")
        })?;
        ratios.insert(row.n, format!("{:.3}", row.ratio_to_log2n));
    }
    Ok(format!("reference 1.26624, t(n)/log2 n = {ratios:?}"))
}

fn main() -> ExitCode {
    let checks: [Check; 12] = [
        ("AC1", "capacity certificate", 5, ac1),
        ("AC2", "sandwich closure", 1, ac2),
        ("AC3", "optimizer recovery", 120, ac3),
        ("AC4", "coupling closed form vs bisection", 5, ac4),
        ("AC5", "fixed-point properties", 30, ac5),
        ("AC6", "phi identities", 60, ac6),
        ("AC7", "quantifier elimination", 120, ac7),
        ("AC8", "Lagrangian gradient", 60, ac8),
        ("AC9", "rho properties", 60, ac9),
        ("AC10", "group testing exact values", 600, ac10),
        ("AC11", "strategy-code bijection", 60, ac11),
        ("AC12", "test-count table", 600, ac12),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in checks {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > Duration::from_secs(budget) {
            outcome = Err(format!("took {elapsed:.2?}, budget {budget} s"));
        }
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {id} {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
