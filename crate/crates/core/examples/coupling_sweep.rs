//! Sweep the coupling and the excess function for a few marginals.

use adder_capacity::coupling::{phi, phi_prime, solve_c, Method};

fn main() -> adder_capacity::Result<()> {
    let marginals = [(0.5, 0.5), (0.3, 0.3), (0.2, 0.7), (0.9, 0.4)];
    for (a, b) in marginals {
        println!("a = {a}, b = {b}");
        println!("{:>6} {:>12} {:>12} {:>12}", "x", "c", "phi", "phi'");
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            let c = solve_c(a, b, x, Method::Closed)?;
            let cb = solve_c(a, b, x, Method::Bisect)?;
            assert!((c - cb).abs() < 1e-9);
            println!(
                "{x:>6.2} {c:>12.8} {:>12.8} {:>12.8}",
                phi(a, b, x)?,
                phi_prime(a, b, x)?
            );
        }
        println!();
    }
    Ok(())
}
