//! Build a feedback code from an optimal two-set test strategy and check it.

use adder_capacity::adder_code::{
    canonical_two_by_two, code_to_strategy, is_uniquely_decodable, simulate, strategy_to_code,
};
use adder_capacity::group_testing::exact_t_nn;

fn main() -> adder_capacity::Result<()> {
    let code = canonical_two_by_two();
    println!("hand-built (2, 2, 2) code:");
    for w1 in 0..2 {
        for w2 in 0..2 {
            println!("  ({w1}, {w2}) -> {:?}", simulate(&code, w1, w2)?);
        }
    }
    println!("  uniquely decodable: {}", is_uniquely_decodable(&code)?.uniquely_decodable);

    for n in 2..=3 {
        let search = exact_t_nn(n)?;
        let code = strategy_to_code(&search.tree)?;
        let check = is_uniquely_decodable(&code)?;
        println!(
            "t({n}, {n}) = {}: code ({}, {}, {}) uniquely decodable = {}",
            search.depth, code.m1, code.m2, code.n_uses, check.uniquely_decodable
        );
        assert_eq!(code_to_strategy(&code)?, search.tree);
    }
    println!("{}", strategy_to_code(&exact_t_nn(2)?.tree)?.to_json()?);
    Ok(())
}
