//! Writing the built-in chains to JSON files and reading them back.
//!
//! The files are what the `rewind` binary consumes.
//!
//! ```text
//! cargo run --example chain_files -- ./chains
//! rewind validate chains/intro.json
//! ```

use std::path::PathBuf;

use markov_rewind::chain::{
    build_acyclicity_chain_bidirectional, build_example1_chain, build_gap_chain, build_intro_chain,
    build_reduction_example_chain, is_canonical, read_chain, validate, write_chain,
};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "chains".into()));
    std::fs::create_dir_all(&dir).unwrap();
    let chains = [
        ("intro", build_intro_chain()),
        ("one_over_d_8", build_example1_chain(8).unwrap()),
        ("gap_5_4", build_gap_chain(5, 4).unwrap()),
        ("acyclicity_3", build_acyclicity_chain_bidirectional(3).unwrap()),
        ("three_symbols", build_reduction_example_chain()),
    ];
    for (file, chain) in chains {
        let path = dir.join(format!("{file}.json"));
        write_chain(&chain, &path).unwrap();
        let back = read_chain(&path).unwrap();
        assert_eq!(back, chain, "round trip is exact");
        println!(
            "{:<28} {:>3} states  valid={}  canonical={}",
            path.display(),
            back.n(),
            validate(&back).ok(),
            is_canonical(&back).is_some()
        );
    }
}
