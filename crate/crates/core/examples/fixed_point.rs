//! Solve for the middle-symbol fixed point of a few mixtures.

use adder_capacity::entropy::constants;
use adder_capacity::fixed_point::{count_sign_changes, in_domain, solve_x_star, Mixture};

fn main() -> adder_capacity::Result<()> {
    let a = constants().a_star();
    let mixtures = [
        Mixture::single(a, a)?,
        Mixture::single(0.5, 0.5)?,
        Mixture::single(0.8, 0.2)?,
        Mixture::new(vec![0.3, 0.7], vec![0.1, 0.6], vec![0.4, 0.2])?,
        Mixture::new(vec![0.2, 0.3, 0.5], vec![0.9, 0.1, 0.5], vec![0.9, 0.1, 0.3])?,
    ];
    for m in &mixtures {
        assert!(in_domain(m));
        let r = solve_x_star(m)?;
        println!(
            "p={:?} a={:?} b={:?}\n  x* = {:.15}  |phi| = {:.1e}  phi' = {:.6}  sign changes = {}",
            m.p,
            m.a,
            m.b,
            r.x_star,
            r.residual,
            r.phi_prime_at,
            count_sign_changes(m, 10_000)?
        );
    }
    Ok(())
}
