//! Evaluate the Lagrangian upper bound and its ingredients at λ*.

use adder_capacity::entropy::constants;
use adder_capacity::fixed_point::Mixture;
use adder_capacity::lagrangian::{
    case_b_cells, classify_stationary, grad_check, partials, rho, theorem_bound, verify,
};

fn main() -> adder_capacity::Result<()> {
    let k = constants();
    let l = k.lambda_star;

    let v = verify()?;
    println!("bound at lambda* = {l:.12}:");
    println!("  q_base  = {:.12}", v.report.q_base);
    println!("  q_case1 = {:.12}", v.report.q_case1);
    println!("  q_case2 = {:.12}", v.report.q_case2);
    println!("  overall - capacity = {:+.2e}", v.overall_minus_capacity);

    for lambda in [0.1, 0.3, l, 0.49] {
        let b = theorem_bound(lambda)?;
        println!("lambda = {lambda:.4}: overall = {:.6}", b.overall);
    }

    println!("rho(r) at lambda*:");
    for r in [0.05, 0.5, 1.0, 2.0, 20.0] {
        println!("  rho({r}) = {:.10}", rho(r, l)?);
    }

    let a = k.a_star();
    println!("partials at the optimum: {:?}", partials(&Mixture::single(a, a)?, l)?);
    let g = grad_check(&Mixture::single(0.3, 0.45)?, l)?;
    println!("gradient check max error: {:.2e}", g.max_abs_error);

    let cells = case_b_cells(4.0, l)?;
    println!("{cells:?} -> {:?}", classify_stationary(&cells, l)?);
    Ok(())
}
