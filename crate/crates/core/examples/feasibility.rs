//! Compare the fixed-point constraint gap with a brute-force grid minimum.

use adder_capacity::entropy::constants;
use adder_capacity::feasibility::{brute_minimize, constraint_gap};
use adder_capacity::fixed_point::Mixture;

fn main() -> adder_capacity::Result<()> {
    let a = constants().a_star();
    let cases = [
        ("symmetric optimum", Mixture::single(a, a)?),
        ("uniform inputs", Mixture::single(0.5, 0.5)?),
        ("low entropy", Mixture::single(0.1, 0.1)?),
        ("two components", Mixture::new(vec![0.5, 0.5], vec![0.2, 0.3], vec![0.25, 0.1])?),
    ];
    for (name, m) in &cases {
        let r = constraint_gap(m)?;
        let g = brute_minimize(m, 200)?;
        println!(
            "{name:<18} x* = {:.6}  gap = {:+.3e}  grid min = {:+.3e} at c = {:?}  feasible = {}",
            r.x_star, r.constraint_gap, g.value, g.c, r.feasible
        );
    }
    Ok(())
}
