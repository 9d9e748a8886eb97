//! Certify the symmetric optimum and recover it with the optimizer.
//!
//! Run with `--release`; the multistart search for two components takes a
//! few seconds.

use adder_capacity::capacity_opt::{belokopytov_certificate, optimize, weighted_optimize};

fn main() -> adder_capacity::Result<()> {
    let cert = belokopytov_certificate()?;
    println!("certificate: {cert:#?}");

    let one = optimize(1, 1, 1)?;
    println!(
        "n=1: rate = {:.10} at a = {:.6}, b = {:.6}, gap = {:+.2e}",
        one.rate, one.best_mix.a[0], one.best_mix.b[0], one.report.constraint_gap
    );

    let two = optimize(2, 64, 1)?;
    println!(
        "n=2: rate = {:.10} (p = {:?}, a = {:?}, b = {:?})",
        two.rate, two.best_mix.p, two.best_mix.a, two.best_mix.b
    );

    for (c1, c2) in [(0.5, 0.5), (0.7, 0.3), (1.0, 0.0)] {
        let w = weighted_optimize(c1, c2)?;
        println!(
            "weighted ({c1}, {c2}): value = {:.6} at a = {:.4}, b = {:.4} (conjectural)",
            w.value, w.a, w.b
        );
    }
    Ok(())
}
