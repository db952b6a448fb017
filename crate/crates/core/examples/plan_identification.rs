//! The general identification planner.
//!
//! Builds the graph of refinements of the source partition, finds the
//! cheapest path to a partition separating the two candidates, and turns it
//! into a uniform query tree. At the default error budget the tree is far too
//! large to draw node by node, so `identify` samples it lazily; with a loose
//! budget the tree can be materialized and classified directly.
//!
//! ```text
//! cargo run --release --example plan_identification
//! ```

use markov_rewind::chain::{build_example1_chain, build_intro_chain, PoMarkovChain};
use markov_rewind::experiment::run_identification;
use markov_rewind::plan::{
    build_partition_graph, certify_path_bound, classify_tree, plan_identification, plan_identification_with_epsilon,
    PlanSummary,
};
use markov_rewind::simulate::{sample_shape, trial_seed, Verdict};

fn show(chain: &PoMarkovChain, a: &str, b: &str) {
    let (ia, ib) = (chain.state(a).unwrap(), chain.state(b).unwrap());
    let graph = build_partition_graph(chain).unwrap();
    let plan = plan_identification(chain, ia, ib).unwrap();
    println!("== {} ({a} vs {b}) ==", chain.name());
    println!("partition graph: {} nodes, {} edges", graph.nodes().len(), graph.edge_count());
    println!("{}", serde_json::to_string_pretty(&PlanSummary::new(chain, &plan)).unwrap());

    let run = run_identification(chain, &plan, None, 400, 9);
    println!(
        "identify x400: success {:.3}, queries {:?}, nodes actually sampled per run {:.0}",
        run.success.rate, run.query_counts, run.mean_sampled_nodes
    );
    match certify_path_bound(chain, ia, ib, 10.0).unwrap() {
        Some(walk) => println!("greedy walk with edge cap (3(n-1)·10)² separates them in {} steps", walk.len() - 1),
        None => println!("greedy walk with edge cap (3(n-1)·10)² does not separate them"),
    }
}

fn main() {
    show(&build_intro_chain(), "a", "a'");
    show(&build_example1_chain(4).unwrap(), "a", "a'");

    // A loose error budget gives a tree small enough to draw in full.
    let chain = build_intro_chain();
    let (a, a_prime) = (chain.state("a").unwrap(), chain.state("a'").unwrap());
    let plan = plan_identification_with_epsilon(&chain, a, a_prime, 0.05).unwrap();
    let shape = plan.uniform_shape().unwrap();
    println!("\nmaterialized plan at ε = 0.05: degrees {:?}, {} queries", plan.degrees(), shape.queries());
    let mut correct = 0;
    for i in 0..100u64 {
        let hidden = if i % 2 == 0 { a } else { a_prime };
        let tree = sample_shape(&chain, hidden, &shape, trial_seed(3, i)).unwrap();
        if classify_tree(&chain, &plan, &tree).unwrap() == Verdict::State(hidden) {
            correct += 1;
        }
    }
    println!("classified {correct}/100 sampled trees correctly");
}
