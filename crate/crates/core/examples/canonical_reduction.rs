//! Reducing a chain with a multi-symbol alphabet to a canonical one.
//!
//! Every transition gets a ladder of dummy states, and each symbol is
//! encoded by how deep a special path runs before it hits the sink. A source
//! strategy runs unchanged on the target through the adaptive emulator,
//! which recovers observations and draws from path probes.
//!
//! ```text
//! cargo run --release --example canonical_reduction
//! ```

use markov_rewind::chain::{build_reduction_example_chain, chain_to_json};
use markov_rewind::experiment::reduction_run;
use markov_rewind::reduce::{reduce_to_canonical_with_alphabet, target_is_canonical};

fn main() {
    let source = build_reduction_example_chain();
    let r = reduce_to_canonical_with_alphabet(&source, 0.5, 3).unwrap();
    println!(
        "source: {} states; target: {} states, canonical: {}",
        source.n(),
        r.target.n(),
        target_is_canonical(&r)
    );
    println!("{}", serde_json::to_string_pretty(&r.phi_map()).unwrap());

    for x in 0..source.n() {
        let emulated = r.conditional_child_distribution(x);
        println!("{}: source row {:?}  emulated {:?}", source.label(x), source.row(x), emulated);
    }

    let report = reduction_run(4000, 17).unwrap();
    println!("\n{}", serde_json::to_string_pretty(&report).unwrap());

    if std::env::args().any(|a| a == "--dump") {
        println!("{}", chain_to_json(&r.target));
    }
}
