//! How often two coupled runs of the gap chain come apart.
//!
//! Starting from `q2`, a walk that reaches the sink within `k` steps is the
//! event in which runs from `q1` and `q2` stop looking alike. This example
//! puts the Monte Carlo frequency next to the exact dynamic-programming value
//! and two closed-form bounds. The tighter of the two bounds is too
//! optimistic for small `d`; the union bound holds.
//!
//! ```text
//! cargo run --release --example decoupling
//! ```

use markov_rewind::experiment::decouple_points;

fn main() {
    let points = decouple_points(5, &[2, 4, 8], &[4, 8, 16], 50_000, 3);
    println!("  d   k   monte carlo        exact      bound   union bound");
    for p in points {
        println!(
            "{:>3} {:>3}   {:.4} ± {:.4}   {:.5}   {:.2e}   {:.2e}",
            p.d, p.k, p.mc.estimate, p.mc.std_err, p.exact, p.bound, p.union_bound
        );
    }
}
