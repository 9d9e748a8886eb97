//! Exact and greedy test counts for two defectives.

use std::time::Instant;

use adder_capacity::group_testing::{table, TableOptions};

fn main() -> adder_capacity::Result<()> {
    let start = Instant::now();
    let rows = table(&TableOptions {
        n_max: 12,
        exact_max: 9,
        exact_nn_max: 6,
    })?;
    println!("{:>3} {:>5} {:>7} {:>9} {:>6} {:>8}", "n", "info", "t(n)", "t(n,n)", "greedy", "t/log2n");
    for r in &rows {
        let show = |v: Option<u32>| v.map_or("-".to_string(), |d| d.to_string());
        println!(
            "{:>3} {:>5} {:>7} {:>9} {:>6} {:>8.4}",
            r.n,
            r.info_lower,
            show(r.exact_t),
            show(r.exact_t_nn),
            r.greedy,
            r.ratio_to_log2n
        );
    }
    println!("reference constant 1/capacity = {:.5}", rows[0].asymptotic_constant);
    println!("elapsed: {:.2?}", start.elapsed());
    Ok(())
}
