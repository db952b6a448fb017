//! Two non-adaptive strategies on the `1/d` chain, compared as `d` doubles.
//!
//! The nested tester spends `m + m²` queries with `m = ⌈d ln d³⌉`; the path
//! strategy walks `2d` steps and tests the endpoint, repeated a fixed number
//! of times, so its cost is linear in `d`.
//!
//! ```text
//! cargo run --release --example one_over_d_strategies
//! ```

use markov_rewind::experiment::{example1_points, growth_ratios};
use markov_rewind::strategies::{path_strategy_fire_probability, DEFAULT_REPETITIONS};

fn main() {
    let ds = [8, 16, 32];
    let points = example1_points(&ds, DEFAULT_REPETITIONS, 1000, 42);
    println!("strategy     d   queries   success");
    for p in &points {
        println!("{:<9} {:>4} {:>9}   {:.3} ± {:.3}", p.strategy, p.d, p.mean_queries, p.success.rate, p.success.half_width);
    }
    println!("\ncost growth per doubling of d:");
    println!("  nested {:?}", growth_ratios(&points, "nested"));
    println!("  path   {:?}", growth_ratios(&points, "path"));

    println!("\nper-repetition firing probability of the path strategy from a':");
    for d in ds {
        let p = path_strategy_fire_probability(d);
        let overall = 1.0 - (1.0 - p).powi(DEFAULT_REPETITIONS as i32);
        println!("  d={d:<3} {p:.4}  (after {DEFAULT_REPETITIONS} repetitions: {overall:.4})");
    }
}
