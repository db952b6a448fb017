//! Distances between states as seen through a partition.
//!
//! `d_TV^P(a, b)` compares the next-step laws of `a` and `b` after lumping
//! states by `P`. Splitting states along the connected components of the
//! "closer than D/(n−1)" graph yields a refinement that separates `a` from
//! `b`, and a sampling test decides which of the two a fresh child came from.
//!
//! ```text
//! cargo run --example partition_distances
//! ```

use markov_rewind::chain::build_intro_chain;
use markov_rewind::partition::{dtv_partition, pair_test, refine_by_components, source_partition, theta, PairTest};
use markov_rewind::simulate::stream_rng;

fn main() {
    let chain = build_intro_chain();
    let p0 = source_partition(&chain).unwrap();
    println!("source partition {}  θ = {:.3}", p0.display(&chain), theta(&chain, &p0));

    println!("\nd_TV under the source partition:");
    for x in 0..chain.n() {
        let row: Vec<String> = (0..chain.n()).map(|y| format!("{:.2}", dtv_partition(&chain, x, y, &p0))).collect();
        println!("  {:<3} {}", chain.label(x), row.join(" "));
    }

    let (a, a_prime) = (chain.state("a").unwrap(), chain.state("a'").unwrap());
    let (b, b_prime) = (chain.state("b").unwrap(), chain.state("b'").unwrap());
    let p1 = refine_by_components(&chain, &p0, b, b_prime).unwrap();
    println!("\nsplitting b from b': {}", p1.display(&chain));
    println!("now d_TV(a, a') = {:.3}", dtv_partition(&chain, a, a_prime, &p1));

    let test = PairTest::new(&chain, &p1, a, a_prime).unwrap();
    println!("pair test: δ = {:.3}, {} samples for ε = 0.01", test.delta, test.samples(0.01));
    let mut rng = stream_rng(1, 0);
    for hidden in [a, a_prime] {
        let answer = pair_test(&chain, &p1, a, a_prime, || Some(p1.class(chain.sample_next(hidden, &mut rng))), 0.01).unwrap();
        println!("  hidden {:<3} -> answered {}", chain.label(hidden), chain.label(answer));
    }
}
