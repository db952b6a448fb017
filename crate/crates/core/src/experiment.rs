//! Seeded experiment runners and the report format they share.
//!
//! Every runner is a pure function of its parameters and master seed, so a
//! rerun reproduces the report byte for byte. Trial `i` always draws from
//! `trial_seed(seed, i)`, which keeps earlier trials fixed when more are added.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::chain::{build_example1_chain, build_intro_chain, build_reduction_example_chain, PoMarkovChain, StateId, Symbol};
use crate::gap::{
    adaptive_gap_identify, decoupling_bound, decoupling_probability_exact, decoupling_probability_mc,
    decoupling_union_bound, expected_path_length, GapChain, GapError, GapRunStats, McEstimate,
};
use crate::plan::{plan_identification, IdentificationPlan, PlanError, PlanSummary};
use crate::reduce::{reduce_to_canonical_with_alphabet, verify_reduction, ReduceError, ReductionReport};
use crate::simulate::{estimate_success, run_adaptive, run_plan, trial_seed, NonAdaptivePlan, SuccessEstimate, Verdict};
use crate::strategies::{nested_tester_plan, path_strategy_plan, OneStepSiblings, StarProbe};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_TRIALS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub tool_version: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, Value>,
    pub records: Vec<Value>,
    pub aggregates: Value,
}

impl ExperimentReport {
    fn new(experiment: &str, seed: u64, parameters: BTreeMap<String, Value>) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            parameters,
            records: Vec::new(),
            aggregates: Value::Null,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

// ── intro ───────────────────────────────────────────────────────────────────

pub fn intro_success(siblings: usize, trials: u64, seed: u64) -> SuccessEstimate {
    let c = build_intro_chain();
    let (a, ap) = (0, 4);
    estimate_success(a, ap, trials, seed, |hidden, s| {
        let mut strategy = OneStepSiblings { siblings, same: a, mixed: ap };
        run_adaptive(&c, hidden, &mut strategy, siblings + 1, s).expect("valid strategy").1
    })
}

pub fn intro_experiment(siblings: usize, trials: u64, seed: u64) -> ExperimentReport {
    let est = intro_success(siblings, trials, seed);
    let mut r = ExperimentReport::new(
        "intro",
        seed,
        params(&[("siblings", json!(siblings)), ("trials", json!(trials))]),
    );
    r.aggregates = json!({
        "success": est,
        "exact_success": 1.0 - 0.5f64.powi(siblings as i32),
        "queries_per_trial": siblings + 1,
    });
    r
}

// ── example 1 ───────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyPoint {
    pub d: u32,
    pub strategy: String,
    pub success: SuccessEstimate,
    pub mean_queries: f64,
}

fn score_plan(chain: &PoMarkovChain, plan: &NonAdaptivePlan, a: StateId, b: StateId, trials: u64, seed: u64) -> (SuccessEstimate, f64) {
    let success = estimate_success(a, b, trials, seed, |hidden, s| run_plan(chain, hidden, plan, s).expect("valid plan").1);
    (success, plan.shape.queries() as f64)
}

pub fn example1_points(ds: &[u32], repetitions: usize, trials: u64, seed: u64) -> Vec<StrategyPoint> {
    let (a, ap) = (0, 2);
    let mut out = Vec::new();
    for (i, &d) in ds.iter().enumerate() {
        let c = build_example1_chain(d).expect("d >= 2");
        let s = trial_seed(seed, i as u64);
        let (success, mean_queries) = score_plan(&c, &nested_tester_plan(d, a, ap), a, ap, trials, s);
        out.push(StrategyPoint {
            d,
            strategy: "nested".into(),
            success,
            mean_queries,
        });
        let (success, mean_queries) = score_plan(&c, &path_strategy_plan(d, repetitions, a, ap), a, ap, trials, trial_seed(s, 1));
        out.push(StrategyPoint {
            d,
            strategy: "path".into(),
            success,
            mean_queries,
        });
    }
    out
}

/// `Q(2d) / Q(d)` for consecutive doubling values of `d` in `points`.
pub fn growth_ratios(points: &[StrategyPoint], strategy: &str) -> Vec<f64> {
    let pts: Vec<&StrategyPoint> = points.iter().filter(|p| p.strategy == strategy).collect();
    pts.windows(2)
        .filter(|w| w[1].d == 2 * w[0].d)
        .map(|w| w[1].mean_queries / w[0].mean_queries)
        .collect()
}

pub fn example1_experiment(ds: &[u32], repetitions: usize, trials: u64, seed: u64) -> ExperimentReport {
    let points = example1_points(ds, repetitions, trials, seed);
    let mut r = ExperimentReport::new(
        "example1",
        seed,
        params(&[("d", json!(ds)), ("repetitions", json!(repetitions)), ("trials", json!(trials))]),
    );
    r.aggregates = json!({
        "nested_growth": growth_ratios(&points, "nested"),
        "path_growth": growth_ratios(&points, "path"),
    });
    r.records = points.iter().map(|p| serde_json::to_value(p).expect("serializable")).collect();
    r
}

// ── planner ─────────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentifyRun {
    pub success: SuccessEstimate,
    /// Distinct per-trial query counts; a single value for a non-adaptive plan.
    pub query_counts: Vec<u64>,
    pub mean_sampled_nodes: f64,
}

/// Runs the planner's identification `trials` times. `hidden` fixes the start;
/// otherwise starts alternate between `a` and `b`.
pub fn run_identification(
    chain: &PoMarkovChain,
    plan: &IdentificationPlan,
    hidden: Option<StateId>,
    trials: u64,
    seed: u64,
) -> IdentifyRun {
    let outcomes: Vec<(bool, u64, u64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let x0 = hidden.unwrap_or(if i % 2 == 0 { plan.a } else { plan.b });
            let o = plan.identify(chain, x0, trial_seed(seed, i));
            (o.verdict == Verdict::State(x0), o.queries, o.sampled_nodes)
        })
        .collect();
    let successes = outcomes.iter().filter(|o| o.0).count() as u64;
    let mut query_counts: Vec<u64> = outcomes.iter().map(|o| o.1).collect();
    query_counts.sort_unstable();
    query_counts.dedup();
    let mean_sampled_nodes = if trials == 0 {
        0.0
    } else {
        outcomes.iter().map(|o| o.2 as f64).sum::<f64>() / trials as f64
    };
    IdentifyRun {
        success: SuccessEstimate::from_counts(successes, trials),
        query_counts,
        mean_sampled_nodes,
    }
}

pub fn identify_experiment(
    chain: &PoMarkovChain,
    a: StateId,
    b: StateId,
    hidden: Option<StateId>,
    trials: u64,
    seed: u64,
) -> Result<ExperimentReport, PlanError> {
    let plan = plan_identification(chain, a, b)?;
    let run = run_identification(chain, &plan, hidden, trials, seed);
    let mut r = ExperimentReport::new(
        "identify",
        seed,
        params(&[
            ("chain", json!(chain.name())),
            ("a", json!(chain.label(a))),
            ("b", json!(chain.label(b))),
            ("hidden", json!(hidden.map(|h| chain.label(h)))),
            ("trials", json!(trials)),
        ]),
    );
    r.aggregates = json!({ "plan": PlanSummary::new(chain, &plan), "run": run });
    Ok(r)
}

// ── gap ─────────────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapSummary {
    pub success: SuccessEstimate,
    pub query_bound: u64,
    pub within_bound: f64,
    pub mean_queries: f64,
    pub max_queries: u64,
    pub expected_lengths: [f64; 2],
    pub half_convention_lengths: [f64; 2],
}

pub fn gap_runs(n: usize, d: u32, k_paths: usize, t_children: usize, trials: u64, seed: u64) -> Result<(GapSummary, Vec<GapRunStats>), GapError> {
    let g = GapChain::new(n, d)?;
    let runs: Vec<GapRunStats> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let hidden = if i % 2 == 0 { g.q(1) } else { g.q(2) };
            adaptive_gap_identify(&g, hidden, k_paths, t_children, trial_seed(seed, i))
        })
        .collect::<Result<_, _>>()?;
    let successes = runs
        .iter()
        .enumerate()
        .filter(|(i, r)| r.verdict == Verdict::State(if i % 2 == 0 { g.q(1) } else { g.q(2) }))
        .count() as u64;
    let bound = 5000 * (n * n) as u64 * d as u64;
    let within = runs.iter().filter(|r| r.total_queries <= bound).count();
    let (e1, e2) = (expected_path_length(n, d, 1), expected_path_length(n, d, 2));
    let t = trials.max(1) as f64;
    let summary = GapSummary {
        success: SuccessEstimate::from_counts(successes, trials),
        query_bound: bound,
        within_bound: within as f64 / t,
        mean_queries: runs.iter().map(|r| r.total_queries as f64).sum::<f64>() / t,
        max_queries: runs.iter().map(|r| r.total_queries).max().unwrap_or(0),
        expected_lengths: [e1.mean, e2.mean],
        half_convention_lengths: [e1.half_convention_mean, e2.half_convention_mean],
    };
    Ok((summary, runs))
}

pub fn gap_experiment(n: usize, d: u32, k_paths: usize, t_children: usize, trials: u64, seed: u64) -> Result<ExperimentReport, GapError> {
    let (summary, runs) = gap_runs(n, d, k_paths, t_children, trials, seed)?;
    let mut r = ExperimentReport::new(
        "gap",
        seed,
        params(&[
            ("n", json!(n)),
            ("d", json!(d)),
            ("k_paths", json!(k_paths)),
            ("t_children", json!(t_children)),
            ("trials", json!(trials)),
        ]),
    );
    r.aggregates = serde_json::to_value(&summary).expect("serializable");
    r.records = runs
        .iter()
        .map(|s| {
            json!({
                "verdict": s.verdict,
                "total_queries": s.total_queries,
                "discarded": s.discarded,
                "mean_length": s.mean_length,
            })
        })
        .collect();
    Ok(r)
}

// ── decoupling ──────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecouplePoint {
    pub n: usize,
    pub d: u32,
    pub k: u64,
    pub mc: McEstimate,
    pub bound: f64,
    pub exact: f64,
    pub union_bound: f64,
    /// `mc ≤ bound + 3 standard errors`.
    pub within_bound: bool,
    /// `mc ≤ union_bound + 3 standard errors`.
    pub within_union_bound: bool,
}

pub fn decouple_points(n: usize, ds: &[u32], ks: &[u64], trials: u64, seed: u64) -> Vec<DecouplePoint> {
    let mut out = Vec::new();
    for (i, &d) in ds.iter().enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            let mc = decoupling_probability_mc(n, d, k, trials, trial_seed(seed, (i * ks.len() + j) as u64));
            let bound = decoupling_bound(n, d, k);
            let union_bound = decoupling_union_bound(n, d, k);
            out.push(DecouplePoint {
                n,
                d,
                k,
                mc,
                bound,
                exact: decoupling_probability_exact(n, d, k),
                union_bound,
                within_bound: mc.estimate <= bound + 3.0 * mc.std_err,
                within_union_bound: mc.estimate <= union_bound + 3.0 * mc.std_err,
            });
        }
    }
    out
}

pub fn decouple_experiment(n: usize, ds: &[u32], ks: &[u64], trials: u64, seed: u64) -> ExperimentReport {
    let points = decouple_points(n, ds, ks, trials, seed);
    let mut r = ExperimentReport::new(
        "decouple",
        seed,
        params(&[("n", json!(n)), ("d", json!(ds)), ("k", json!(ks)), ("trials", json!(trials))]),
    );
    r.aggregates = json!({
        "all_within_bound": points.iter().all(|p| p.within_bound),
        "all_within_union_bound": points.iter().all(|p| p.within_union_bound),
    });
    r.records = points.iter().map(|p| serde_json::to_value(p).expect("serializable")).collect();
    r
}

// ── reduction ───────────────────────────────────────────────────────────────

/// The reduction example chain with `q = 1/2` over a three-symbol alphabet,
/// probing `s2` against `s3` with five children.
pub fn reduction_run(trials: u64, seed: u64) -> Result<ReductionReport, ReduceError> {
    let source = build_reduction_example_chain();
    let r = reduce_to_canonical_with_alphabet(&source, 0.5, 3)?;
    let probe = || StarProbe {
        children: 5,
        symbol: Symbol(1),
        hit: 1,
        miss: 2,
    };
    verify_reduction(&r, 1, 2, probe, 100, trials, seed)
}

pub fn reduction_experiment(trials: u64, seed: u64) -> Result<ExperimentReport, ReduceError> {
    let report = reduction_run(trials, seed)?;
    let mut r = ExperimentReport::new("reduction", seed, params(&[("q", json!(0.5)), ("trials", json!(trials))]));
    r.aggregates = serde_json::to_value(&report).expect("serializable");
    Ok(r)
}
