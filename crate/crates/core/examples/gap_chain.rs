//! Adaptive identification on the gap chain, where only path length matters.
//!
//! From `q_i` the chain creeps forward one state every `d` steps on average,
//! with detours through the dummy state `D` along the way. Each path is
//! filtered: a node is dropped when a few of its children reveal it as `D`.
//! Paths from `q1` are one stage longer than paths from `q2`, and averaging
//! many of them separates the two.
//!
//! ```text
//! cargo run --release --example gap_chain
//! ```

use markov_rewind::experiment::gap_runs;
use markov_rewind::gap::{adaptive_gap_identify, expected_path_length, expected_path_length_solved, GapChain};

fn main() {
    let (n, d) = (6, 8);
    println!("filtered path length from q_i, closed form vs fundamental matrix:");
    for start in 1..=n - 2 {
        let exact = expected_path_length(n, d, start);
        let solved = expected_path_length_solved(n, d, start);
        println!(
            "  q{start}: mean {:.3} / {:.3}   variance {:.3} / {:.3}",
            exact.mean, solved.mean, exact.variance, solved.variance
        );
    }

    let gap = GapChain::new(n, d).unwrap();
    let run = adaptive_gap_identify(&gap, gap.q(2), 200, 3, 5).unwrap();
    println!(
        "\none run from q2 with 200 paths: mean length {:.2} vs threshold {:.2}, {} queries, {} nodes discarded, verdict {:?}",
        run.mean_length, run.threshold, run.total_queries, run.discarded, run.verdict
    );

    let (summary, _) = gap_runs(n, d, 600, 3, 100, 11).unwrap();
    println!("\n{}", serde_json::to_string_pretty(&summary).unwrap());
}
