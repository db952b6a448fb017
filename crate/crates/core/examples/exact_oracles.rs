//! Exact observation laws of small query trees.
//!
//! Enumerates every labeling of a fixed tree shape to get the exact law of
//! its observations, then searches all shapes with a given number of queries
//! for the cheapest one that tells two states apart.
//!
//! ```text
//! cargo run --release --example exact_oracles
//! ```

use markov_rewind::chain::build_intro_chain;
use markov_rewind::simulate::{all_shapes, exact_plan_tv, exhaustive_min_queries, TreeShape};

fn main() {
    let chain = build_intro_chain();
    let (a, a_prime) = (chain.state("a").unwrap(), chain.state("a'").unwrap());

    for (name, shape) in [
        ("root only", TreeShape::root_only()),
        ("star of 4", TreeShape::star(4)),
        ("path of 4", TreeShape::path(4)),
        ("step then 3 siblings", TreeShape::new(vec![0, 1, 1, 1]).unwrap()),
    ] {
        println!("{name:<22} TV(a, a') = {:.4}", exact_plan_tv(&chain, &shape, a, a_prime).unwrap());
    }

    for q in 0..=4 {
        let best = all_shapes(q)
            .iter()
            .map(|s| (exact_plan_tv(&chain, s, a, a_prime).unwrap(), s.rewind_amounts()))
            .max_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        println!("{q} queries: best TV {:.4} with rewinds {:?}", best.0, best.1);
    }

    for threshold in [0.5, 0.75, 0.9] {
        let t = exhaustive_min_queries(&chain, a, a_prime, 6, threshold).unwrap();
        println!("fewest queries reaching TV >= {threshold}: {t:?}");
    }
}
