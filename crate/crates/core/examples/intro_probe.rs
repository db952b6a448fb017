//! Telling `a` from `a'` on the five-state chain with a single rewind point.
//!
//! Step once from the hidden start, then keep drawing siblings of that node.
//! Children of `b'` are fair coins between the sink and `b'` itself, so
//! disagreement among siblings exposes `a'`. From `a` the siblings always
//! agree.
//!
//! ```text
//! cargo run --example intro_probe
//! ```

use markov_rewind::chain::build_intro_chain;
use markov_rewind::experiment::intro_success;
use markov_rewind::simulate::{run_adaptive, Transcript};
use markov_rewind::strategies::OneStepSiblings;

fn main() {
    let chain = build_intro_chain();
    let (a, a_prime) = (chain.state("a").unwrap(), chain.state("a'").unwrap());

    let mut probe = OneStepSiblings {
        siblings: 7,
        same: a,
        mixed: a_prime,
    };
    let (tree, verdict) = run_adaptive(&chain, a_prime, &mut probe, 100, 7).expect("valid start");
    let transcript = Transcript::new(&chain, &tree, verdict, 7, true);
    println!("one run from a' (states revealed):");
    println!("{}", serde_json::to_string_pretty(&transcript).unwrap());

    println!("\nsiblings  success   exact 1-2^-s");
    for siblings in [1, 2, 4, 7, 10] {
        let est = intro_success(siblings, 20_000, 1);
        // from a' the probe errs only when all siblings agree: 2 · 2^-s, halved by the even split
        println!("{siblings:>8}  {:.4}    {:.4}", est.rate, 1.0 - 0.5f64.powi(siblings as i32));
    }
}
