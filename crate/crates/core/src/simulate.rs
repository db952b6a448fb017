//! Rewinding strategies executed as query trees.
//!
//! A rewinding strategy is viewed as a growing tree: the root holds the
//! (hidden) start state, and every query picks an existing node and draws a
//! fresh child from that node's transition row. Only the observations and the
//! tree shape are visible to the strategy.
//!
//! The module also carries the exact oracles used as ground truth for small
//! instances: the joint distribution of all observations of a fixed plan,
//! the resulting total-variation distance between two start states, and an
//! exhaustive search over every plan shape up to a small size.

use std::collections::BTreeMap;
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{PoMarkovChain, StateId, Symbol};

/// Default ceiling on the number of hidden labelings an exact oracle may visit.
pub const ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum SimulateError {
    #[error("strategy selected node {index} but the tree has {len} nodes")]
    InvalidNode { index: usize, len: usize },
    #[error("malformed parent array: node {node} has parent {parent}")]
    MalformedShape { node: usize, parent: usize },
    #[error("exact enumeration needs {required} labelings, above the cap of {cap}")]
    CapExceeded { required: u64, cap: u64 },
    #[error("state {0} is not a state of the chain")]
    UnknownState(StateId),
}

// ── Seeds ───────────────────────────────────────────────────────────────────

/// Derives the seed for trial `index` from a master seed.
///
/// The rule is one round of the SplitMix64 finalizer applied to
/// `master + (index + 1) * 0x9E3779B97F4A7C15`. Each trial depends only on
/// `(master, index)`, so adding trials never perturbs earlier ones.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream used for drawing chain transitions.
pub const CHAIN_STREAM: u64 = 0;
/// Stream handed to strategies for their own coin flips.
pub const STRATEGY_STREAM: u64 = 1;

/// A ChaCha8 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ── Trees ───────────────────────────────────────────────────────────────────

/// The tree of drawn states, in creation order. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryTree {
    parents: Vec<usize>,
    states: Vec<StateId>,
    observations: Vec<Symbol>,
}

impl QueryTree {
    pub fn new(chain: &PoMarkovChain, root: StateId) -> Self {
        QueryTree {
            parents: vec![0],
            states: vec![root],
            observations: vec![chain.observation(root)],
        }
    }

    fn push(&mut self, parent: usize, state: StateId, observation: Symbol) -> usize {
        self.parents.push(parent);
        self.states.push(state);
        self.observations.push(observation);
        self.states.len() - 1
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Always false: a tree holds at least its root.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Queries spent so far: every node except the root.
    pub fn queries(&self) -> usize {
        self.len() - 1
    }

    pub fn root_state(&self) -> StateId {
        self.states[0]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        (node > 0).then(|| self.parents[node])
    }

    pub fn state(&self, node: usize) -> StateId {
        self.states[node]
    }

    pub fn observation(&self, node: usize) -> Symbol {
        self.observations[node]
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn observations(&self) -> &[Symbol] {
        &self.observations
    }

    pub fn visible(&self) -> VisibleTree<'_> {
        VisibleTree {
            parents: &self.parents,
            observations: &self.observations,
        }
    }

    /// The shape of this tree as a parent array over non-root nodes.
    pub fn shape(&self) -> TreeShape {
        TreeShape {
            parents: self.parents[1..].to_vec(),
        }
    }

    /// Rewind amounts `A_t = t - parent(t + 1)` for `t = 0 … T-1`.
    pub fn rewind_amounts(&self) -> Vec<usize> {
        self.shape().rewind_amounts()
    }
}

/// What a strategy is allowed to see: tree shape and observations.
#[derive(Clone, Copy, Debug)]
pub struct VisibleTree<'a> {
    parents: &'a [usize],
    observations: &'a [Symbol],
}

impl<'a> VisibleTree<'a> {
    /// A view over caller-held arrays; `parents[0]` is ignored.
    ///
    /// # Panics
    /// If the arrays differ in length or are empty.
    pub fn new(parents: &'a [usize], observations: &'a [Symbol]) -> Self {
        assert!(!parents.is_empty() && parents.len() == observations.len());
        VisibleTree { parents, observations }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        (node > 0).then(|| self.parents[node])
    }

    pub fn observation(&self, node: usize) -> Symbol {
        self.observations[node]
    }

    pub fn observations(&self) -> &'a [Symbol] {
        self.observations
    }

    pub fn last(&self) -> usize {
        self.len() - 1
    }
}

/// A validated parent array for nodes `1 … T`; `parents[t - 1] < t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TreeShape {
    parents: Vec<usize>,
}

impl TreeShape {
    /// `parents[i]` is the parent of node `i + 1`.
    pub fn new(parents: Vec<usize>) -> Result<Self, SimulateError> {
        for (i, &p) in parents.iter().enumerate() {
            if p > i {
                return Err(SimulateError::MalformedShape { node: i + 1, parent: p });
            }
        }
        Ok(TreeShape { parents })
    }

    /// The root alone.
    pub fn root_only() -> Self {
        TreeShape { parents: Vec::new() }
    }

    /// `t` children of the root.
    pub fn star(t: usize) -> Self {
        TreeShape { parents: vec![0; t] }
    }

    /// A single passive trajectory of `t` steps.
    pub fn path(t: usize) -> Self {
        TreeShape { parents: (0..t).collect() }
    }

    /// Inverse of [`TreeShape::rewind_amounts`]; `A_t` may not exceed `t`.
    pub fn from_rewind_amounts(amounts: &[usize]) -> Result<Self, SimulateError> {
        let parents = amounts
            .iter()
            .enumerate()
            .map(|(t, &a)| {
                t.checked_sub(a)
                    .ok_or(SimulateError::MalformedShape { node: t + 1, parent: usize::MAX })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TreeShape { parents })
    }

    pub fn rewind_amounts(&self) -> Vec<usize> {
        self.parents.iter().enumerate().map(|(t, &p)| t - p).collect()
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    /// Number of drawn (non-root) nodes.
    pub fn queries(&self) -> usize {
        self.parents.len()
    }

    /// Total nodes including the root.
    pub fn nodes(&self) -> usize {
        self.parents.len() + 1
    }

    /// Parent of node `t >= 1`.
    pub fn parent(&self, node: usize) -> usize {
        self.parents[node - 1]
    }
}

/// Every shape with exactly `queries` drawn nodes (there are `queries!`).
pub fn all_shapes(queries: usize) -> Vec<TreeShape> {
    let mut out = Vec::new();
    let mut parents = vec![0usize; queries];
    loop {
        out.push(TreeShape { parents: parents.clone() });
        // mixed-radix increment: digit i ranges over 0..=i
        let mut i = queries;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if parents[i] < i {
                parents[i] += 1;
                break;
            }
            parents[i] = 0;
        }
    }
}

// ── Strategies ──────────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    State(StateId),
    Abstain,
}

impl Verdict {
    pub fn state(self) -> Option<StateId> {
        match self {
            Verdict::State(s) => Some(s),
            Verdict::Abstain => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::State(s) => write!(f, "state {s}"),
            Verdict::Abstain => f.write_str("abstain"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Extend(usize),
    Stop(Verdict),
}

/// An adaptive rewinding strategy.
///
/// `decide` is called with the visible tree after every draw and returns the
/// next node to extend or a final verdict. Any randomness must come from the
/// supplied generator so runs are reproducible.
pub trait AdaptiveStrategy {
    fn decide(&mut self, view: &VisibleTree<'_>, rng: &mut dyn RngCore) -> Decision;
}

impl<F> AdaptiveStrategy for F
where
    F: FnMut(&VisibleTree<'_>, &mut dyn RngCore) -> Decision,
{
    fn decide(&mut self, view: &VisibleTree<'_>, rng: &mut dyn RngCore) -> Decision {
        self(view, rng)
    }
}

/// Maps the full observation vector of a plan's tree to a verdict.
pub type PlanDecision = Box<dyn Fn(&[Symbol]) -> Verdict + Send + Sync>;

/// A fixed tree shape plus a decision on the full observation vector.
pub struct NonAdaptivePlan {
    pub shape: TreeShape,
    pub decision: PlanDecision,
}

impl NonAdaptivePlan {
    pub fn new(
        shape: TreeShape,
        decision: impl Fn(&[Symbol]) -> Verdict + Send + Sync + 'static,
    ) -> Self {
        NonAdaptivePlan {
            shape,
            decision: Box::new(decision),
        }
    }
}

impl fmt::Debug for NonAdaptivePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonAdaptivePlan").field("shape", &self.shape).finish_non_exhaustive()
    }
}

/// A chain plus a growing tree and the generator that draws its transitions.
///
/// Algorithms that interleave sampling with their own bookkeeping (rather than
/// going through [`AdaptiveStrategy`]) drive one of these directly.
pub struct QuerySession<'c> {
    chain: &'c PoMarkovChain,
    tree: QueryTree,
    rng: ChaCha8Rng,
}

impl<'c> QuerySession<'c> {
    pub fn new(chain: &'c PoMarkovChain, root: StateId, rng: ChaCha8Rng) -> Self {
        QuerySession {
            chain,
            tree: QueryTree::new(chain, root),
            rng,
        }
    }

    pub fn chain(&self) -> &'c PoMarkovChain {
        self.chain
    }

    pub fn tree(&self) -> &QueryTree {
        &self.tree
    }

    pub fn into_tree(self) -> QueryTree {
        self.tree
    }

    pub fn queries(&self) -> usize {
        self.tree.queries()
    }

    pub fn observation(&self, node: usize) -> Symbol {
        self.tree.observation(node)
    }

    /// Draws a fresh child of `parent` and returns its node index.
    pub fn draw_child(&mut self, parent: usize) -> Result<usize, SimulateError> {
        if parent >= self.tree.len() {
            return Err(SimulateError::InvalidNode {
                index: parent,
                len: self.tree.len(),
            });
        }
        let next = self.chain.sample_next(self.tree.state(parent), &mut self.rng);
        Ok(self.tree.push(parent, next, self.chain.observation(next)))
    }
}

fn check_state(chain: &PoMarkovChain, s: StateId) -> Result<(), SimulateError> {
    if s < chain.n() {
        Ok(())
    } else {
        Err(SimulateError::UnknownState(s))
    }
}

/// Runs an adaptive strategy from hidden start `x0` for at most `budget`
/// draws. Running out of budget yields [`Verdict::Abstain`].
pub fn run_adaptive(
    chain: &PoMarkovChain,
    x0: StateId,
    strategy: &mut dyn AdaptiveStrategy,
    budget: usize,
    seed: u64,
) -> Result<(QueryTree, Verdict), SimulateError> {
    check_state(chain, x0)?;
    let mut session = QuerySession::new(chain, x0, stream_rng(seed, CHAIN_STREAM));
    let mut strategy_rng = stream_rng(seed, STRATEGY_STREAM);
    loop {
        match strategy.decide(&session.tree.visible(), &mut strategy_rng) {
            Decision::Stop(v) => return Ok((session.into_tree(), v)),
            Decision::Extend(node) => {
                if node >= session.tree.len() {
                    return Err(SimulateError::InvalidNode {
                        index: node,
                        len: session.tree.len(),
                    });
                }
                if session.queries() >= budget {
                    return Ok((session.into_tree(), Verdict::Abstain));
                }
                session.draw_child(node)?;
            }
        }
    }
}

/// Samples the plan's tree from `x0` and applies its decision.
pub fn run_plan(
    chain: &PoMarkovChain,
    x0: StateId,
    plan: &NonAdaptivePlan,
    seed: u64,
) -> Result<(QueryTree, Verdict), SimulateError> {
    let tree = sample_shape(chain, x0, &plan.shape, seed)?;
    let verdict = (plan.decision)(tree.observations());
    Ok((tree, verdict))
}

/// Samples a tree of the given shape without applying any decision.
pub fn sample_shape(
    chain: &PoMarkovChain,
    x0: StateId,
    shape: &TreeShape,
    seed: u64,
) -> Result<QueryTree, SimulateError> {
    check_state(chain, x0)?;
    let mut session = QuerySession::new(chain, x0, stream_rng(seed, CHAIN_STREAM));
    for &p in shape.parents() {
        session.draw_child(p)?;
    }
    Ok(session.into_tree())
}

// ── Exact oracles ───────────────────────────────────────────────────────────

/// Joint law of the observation vector `(Z_0, …, Z_T)` under a fixed shape.
pub type ObservationDistribution = BTreeMap<Vec<Symbol>, f64>;

fn labelings(n: usize, nodes: usize) -> u64 {
    (n as u64).checked_pow(nodes as u32).unwrap_or(u64::MAX)
}

/// Exact distribution of observation vectors, by summing over every hidden
/// labeling that has positive probability.
///
/// Refuses when `n^{nodes}` exceeds `cap` rather than approximating.
pub fn exact_observation_distribution_capped(
    chain: &PoMarkovChain,
    shape: &TreeShape,
    x0: StateId,
    cap: u64,
) -> Result<ObservationDistribution, SimulateError> {
    check_state(chain, x0)?;
    let required = labelings(chain.n(), shape.nodes());
    if required > cap {
        return Err(SimulateError::CapExceeded { required, cap });
    }
    let mut out = ObservationDistribution::new();
    let mut states = vec![x0; shape.nodes()];
    let mut obs = vec![chain.observation(x0); shape.nodes()];
    enumerate(chain, shape, 1, 1.0, &mut states, &mut obs, &mut out);
    Ok(out)
}

pub fn exact_observation_distribution(
    chain: &PoMarkovChain,
    shape: &TreeShape,
    x0: StateId,
) -> Result<ObservationDistribution, SimulateError> {
    exact_observation_distribution_capped(chain, shape, x0, ENUMERATION_CAP)
}

fn enumerate(
    chain: &PoMarkovChain,
    shape: &TreeShape,
    node: usize,
    prob: f64,
    states: &mut [StateId],
    obs: &mut [Symbol],
    out: &mut ObservationDistribution,
) {
    if node == shape.nodes() {
        *out.entry(obs.to_vec()).or_insert(0.0) += prob;
        return;
    }
    let row = chain.row(states[shape.parent(node)]);
    for (next, &p) in row.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        states[node] = next;
        obs[node] = chain.observation(next);
        enumerate(chain, shape, node + 1, prob * p, states, obs, out);
    }
}

/// Total variation distance between two observation laws.
pub fn tv_distance(p: &ObservationDistribution, q: &ObservationDistribution) -> f64 {
    let mut sum = 0.0;
    for (k, &pv) in p {
        sum += (pv - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &qv) in q {
        if !p.contains_key(k) {
            sum += qv;
        }
    }
    (sum / 2.0).min(1.0)
}

/// Exact TV between the observation laws of `shape` started from `a` and `b`.
pub fn exact_plan_tv(
    chain: &PoMarkovChain,
    shape: &TreeShape,
    a: StateId,
    b: StateId,
) -> Result<f64, SimulateError> {
    if a == b {
        check_state(chain, a)?;
        return Ok(0.0);
    }
    let pa = exact_observation_distribution(chain, shape, a)?;
    let pb = exact_observation_distribution(chain, shape, b)?;
    Ok(tv_distance(&pa, &pb))
}

/// Smallest `T <= max_t` for which some shape with `T` draws reaches exact
/// TV at least `tv_threshold` between starts `a` and `b`.
///
/// Every shape is evaluated (there are `T!` of them), so the total work is
/// capped: the sum over `T` of `T! * n^{T+1}` must stay within
/// [`ENUMERATION_CAP`] times 100.
pub fn exhaustive_min_queries(
    chain: &PoMarkovChain,
    a: StateId,
    b: StateId,
    max_t: usize,
    tv_threshold: f64,
) -> Result<Option<usize>, SimulateError> {
    check_state(chain, a)?;
    check_state(chain, b)?;
    let cap = ENUMERATION_CAP.saturating_mul(100);
    let mut required: u64 = 0;
    let mut fact: u64 = 1;
    for t in 0..=max_t {
        if t > 0 {
            fact = fact.saturating_mul(t as u64);
        }
        required = required.saturating_add(fact.saturating_mul(labelings(chain.n(), t + 1)));
    }
    if required > cap {
        return Err(SimulateError::CapExceeded { required, cap });
    }
    if a == b {
        return Ok(None);
    }
    for t in 0..=max_t {
        let found = all_shapes(t).par_iter().any(|shape| {
            exact_plan_tv(chain, shape, a, b).map(|tv| tv >= tv_threshold - 1e-12).unwrap_or(false)
        });
        if found {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

// ── Monte Carlo scoring ─────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuccessEstimate {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub half_width: f64,
}

impl SuccessEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return SuccessEstimate {
                trials,
                successes,
                rate: 0.0,
                half_width: 0.0,
            };
        }
        let rate = successes as f64 / trials as f64;
        let half_width = 1.96 * (rate * (1.0 - rate) / trials as f64).sqrt();
        SuccessEstimate {
            trials,
            successes,
            rate,
            half_width,
        }
    }
}

/// Scores `runner` with hidden starts alternating `a, b, a, b, …`.
///
/// Trial `i` receives the seed `trial_seed(seed, i)`. An abstention counts as
/// a failure. Trials run in parallel but results are order independent.
pub fn estimate_success<F>(a: StateId, b: StateId, trials: u64, seed: u64, runner: F) -> SuccessEstimate
where
    F: Fn(StateId, u64) -> Verdict + Sync,
{
    let successes = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let hidden = if i % 2 == 0 { a } else { b };
            runner(hidden, trial_seed(seed, i)) == Verdict::State(hidden)
        })
        .count() as u64;
    SuccessEstimate::from_counts(successes, trials)
}

// ── Transcripts ─────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranscriptNode {
    pub parent: Option<usize>,
    pub observation: Symbol,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

/// Serializable record of one run. Hidden states are only present when
/// `reveal` was requested.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transcript {
    pub seed: u64,
    pub verdict: Option<String>,
    pub nodes: Vec<TranscriptNode>,
}

impl Transcript {
    pub fn new(chain: &PoMarkovChain, tree: &QueryTree, verdict: Verdict, seed: u64, reveal: bool) -> Self {
        let nodes = (0..tree.len())
            .map(|t| TranscriptNode {
                parent: tree.parent(t),
                observation: tree.observation(t),
                state: reveal.then(|| chain.label(tree.state(t)).to_string()),
            })
            .collect();
        Transcript {
            seed,
            verdict: verdict.state().map(|s| chain.label(s).to_string()),
            nodes,
        }
    }
}
