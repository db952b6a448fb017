//! The partition graph and the non-adaptive identification planner.
//!
//! Nodes of the graph are the partitions refining the source partition. An
//! edge goes from every partition to each of its proper refinements and costs
//! the worst `1 / d_TV²` among the pairs it splits, measured under the coarser
//! partition. Path costs multiply, so shortest paths are computed on natural
//! logs of the weights.
//!
//! A shortest path `P₀ → … → P_k` to a partition separating the two target
//! states yields a uniform tree of height `k`: nodes at height `i` get enough
//! children to run every pair test needed to place themselves in `P_i`, using
//! their children's classes in `P_{i-1}`. Leaves only need their observation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use thiserror::Error;

use crate::chain::{PoMarkovChain, StateId, Symbol};
use crate::partition::{
    all_refinements, class_masses, dtv_partition, refines, source_partition, ClassId, PairTest, Partition,
    PartitionError,
};
use crate::simulate::{stream_rng, QueryTree, SimulateError, TreeShape, Verdict, CHAIN_STREAM};

/// Largest number of non-sink states the graph builder accepts.
pub const MAX_NON_SINK_STATES: usize = 10;

/// Largest uniform tree [`IdentificationPlan::uniform_shape`] will materialize.
pub const MATERIALIZE_CAP: u64 = 5_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error("{non_sink} non-sink states exceed the planner cap of {cap}")]
    CapExceeded { non_sink: usize, cap: usize },
    #[error("no finite-cost partition separates states {0} and {1}")]
    Indistinguishable(StateId, StateId),
    #[error("the second partition is not a proper refinement of the first")]
    NotRefinement,
    #[error("tree shape does not match the plan")]
    ShapeMismatch,
    #[error("the plan's tree has {nodes} nodes, above the materialization cap of {cap}")]
    TooLarge { nodes: u64, cap: u64 },
}

/// Weight of the edge `p1 → p2`, or `None` when some split pair has
/// identical projected laws under `p1` (no edge).
pub fn edge_weight(chain: &PoMarkovChain, p1: &Partition, p2: &Partition) -> Result<Option<f64>, PlanError> {
    if p1 == p2 || !refines(p2, p1)? {
        return Err(PlanError::NotRefinement);
    }
    let mut w: f64 = 1.0;
    for x in 0..chain.n() {
        for y in x + 1..chain.n() {
            if p1.same_class(x, y) && p2.separates(x, y) {
                let d = dtv_partition(chain, x, y, p1);
                if d <= 0.0 {
                    return Ok(None);
                }
                w = w.max(1.0 / (d * d));
            }
        }
    }
    Ok(Some(w))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub to: usize,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct PartitionGraph {
    nodes: Vec<Partition>,
    index: HashMap<Partition, usize>,
    edges: Vec<Vec<Edge>>,
    source: usize,
}

impl PartitionGraph {
    pub fn nodes(&self) -> &[Partition] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Partition {
        &self.nodes[i]
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn edges_from(&self, i: usize) -> &[Edge] {
        &self.edges[i]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn source(&self) -> usize {
        self.source
    }
}

/// Enumerates every refinement of the source partition and every
/// finite-weight refinement edge between them.
pub fn build_partition_graph(chain: &PoMarkovChain) -> Result<PartitionGraph, PlanError> {
    let p0 = source_partition(chain)?;
    let non_sink = chain.n() - 1;
    if non_sink > MAX_NON_SINK_STATES {
        return Err(PlanError::CapExceeded {
            non_sink,
            cap: MAX_NON_SINK_STATES,
        });
    }
    let nodes = all_refinements(&p0);
    let index: HashMap<Partition, usize> = nodes.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let n = chain.n();
    let edges = nodes
        .iter()
        .map(|p1| {
            let masses: Vec<Vec<f64>> = (0..n).map(|x| class_masses(chain, x, p1)).collect();
            let mut dist = vec![vec![0.0; n]; n];
            for x in 0..n {
                for y in x + 1..n {
                    let d: f64 = masses[x].iter().zip(&masses[y]).map(|(u, v)| (u - v).abs()).sum();
                    dist[x][y] = (d / 2.0).min(1.0);
                }
            }
            let mut out = Vec::new();
            'targets: for p2 in all_refinements(p1) {
                if &p2 == p1 {
                    continue;
                }
                let mut w: f64 = 1.0;
                for x in 0..n {
                    for y in x + 1..n {
                        if p1.same_class(x, y) && p2.separates(x, y) {
                            let d = dist[x][y];
                            if d <= 0.0 {
                                continue 'targets;
                            }
                            w = w.max(1.0 / (d * d));
                        }
                    }
                }
                out.push(Edge {
                    to: index[&p2],
                    weight: w,
                });
            }
            out.sort_by_key(|e| e.to);
            out
        })
        .collect();
    let source = index[&p0];
    Ok(PartitionGraph {
        nodes,
        index,
        edges,
        source,
    })
}

/// Multiplicative shortest-path tree rooted at the source partition.
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    /// `ln c(P)`; infinite when unreachable.
    pub log_cost: Vec<f64>,
    pub predecessor: Vec<Option<usize>>,
}

impl ShortestPaths {
    pub fn cost(&self, i: usize) -> f64 {
        self.log_cost[i].exp()
    }

    pub fn reachable(&self, i: usize) -> bool {
        self.log_cost[i].is_finite()
    }

    /// Node indices from the source to `target`.
    pub fn path_to(&self, target: usize) -> Vec<usize> {
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.predecessor[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then on index
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra on `ln w`; valid since every weight is at least 1.
pub fn shortest_costs(graph: &PartitionGraph) -> ShortestPaths {
    let n = graph.nodes.len();
    let mut log_cost = vec![f64::INFINITY; n];
    let mut predecessor = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    log_cost[graph.source] = 0.0;
    heap.push(HeapItem(0.0, graph.source));
    while let Some(HeapItem(c, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for e in &graph.edges[u] {
            let next = c + e.weight.ln();
            if next < log_cost[e.to] {
                log_cost[e.to] = next;
                predecessor[e.to] = Some(u);
                heap.push(HeapItem(next, e.to));
            }
        }
    }
    ShortestPaths { log_cost, predecessor }
}

// ── Plans ───────────────────────────────────────────────────────────────────

/// How a node at some height settles one cross-class pair.
#[derive(Clone, Debug, PartialEq)]
enum PairCheck {
    /// The pair differs in observation; the node's own observation decides.
    Observation,
    /// A sampled test on the children in block `[start, start + samples)`.
    Sampled { test: PairTest, start: u64, samples: u64 },
}

#[derive(Clone, Debug, PartialEq)]
struct PairRule {
    x: StateId,
    y: StateId,
    check: PairCheck,
}

/// One edge of the planned path and the tree level that realizes it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanLevel {
    /// The finer partition `P_i`.
    pub partition: Partition,
    /// `w(P_{i-1}, P_i)`.
    pub weight: f64,
    /// Children of every node at height `i`.
    pub degree: u64,
    /// Children reserved for each state pair at this height.
    pub block: u64,
    #[serde(skip)]
    rules: Vec<PairRule>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentificationPlan {
    pub a: StateId,
    pub b: StateId,
    pub n: usize,
    pub source: Partition,
    /// `levels[i - 1]` realizes the edge `P_{i-1} → P_i`.
    pub levels: Vec<PlanLevel>,
    /// `c(P_k)`, the product of the path weights.
    pub cost: f64,
    pub epsilon: f64,
    pub ln_inv_epsilon: f64,
    /// Drawn nodes of the uniform tree (root excluded), saturating.
    pub total_queries: u64,
    pub log10_total_queries: f64,
}

/// The error budget `1 / (3 n^{2k} Q max(1, log₂(n^{2k} Q)))`, returned as
/// `(ε, ln(1/ε))` so that tiny values keep full precision.
pub fn plan_epsilon(n: usize, k: usize, cost: f64) -> (f64, f64) {
    let l = 2.0 * k as f64 * (n as f64).ln() + cost.ln();
    let log2 = l / std::f64::consts::LN_2;
    let ln_inv = 3f64.ln() + l + log2.max(1.0).ln();
    ((-ln_inv).exp(), ln_inv)
}

/// Index of the unordered pair `{x, y}`, `x < y`, among all pairs of `n` states.
fn pair_index(n: usize, x: usize, y: usize) -> u64 {
    (x * n - x * (x + 1) / 2 + (y - x - 1)) as u64
}

impl IdentificationPlan {
    fn assemble(chain: &PoMarkovChain, a: StateId, b: StateId, path: Vec<Partition>, ln_inv: Option<f64>) -> Result<Self, PlanError> {
        let n = chain.n();
        let k = path.len() - 1;
        let mut weights = Vec::with_capacity(k);
        for w in path.windows(2) {
            weights.push(edge_weight(chain, &w[0], &w[1])?.ok_or(PlanError::Indistinguishable(a, b))?);
        }
        let cost: f64 = weights.iter().product();
        let (epsilon, ln_inv_epsilon) = match ln_inv {
            Some(l) => ((-l).exp(), l),
            None => plan_epsilon(n, k, cost),
        };
        let source = path[0].clone();
        let mut levels = Vec::with_capacity(k);
        for i in 1..=k {
            let (coarse, fine) = (&path[i - 1], &path[i]);
            let w = weights[i - 1];
            let degree = (2.0 * (n * n) as f64 * ln_inv_epsilon * w).ceil() as u64;
            let block = (2.0 * ln_inv_epsilon * w).ceil() as u64;
            let mut rules = Vec::new();
            for x in 0..n {
                for y in x + 1..n {
                    if fine.same_class(x, y) {
                        continue;
                    }
                    let check = if source.separates(x, y) {
                        PairCheck::Observation
                    } else {
                        let test = PairTest::new(chain, coarse, x, y)?;
                        // capped at the block: a pair split further down the
                        // path can be closer than this edge's weight allows
                        let samples = pair_test_samples_ln(ln_inv_epsilon, test.delta).min(block);
                        PairCheck::Sampled {
                            start: pair_index(n, x, y) * block,
                            test,
                            samples,
                        }
                    };
                    rules.push(PairRule { x, y, check });
                }
            }
            levels.push(PlanLevel {
                partition: fine.clone(),
                weight: w,
                degree,
                block,
                rules,
            });
        }
        let mut total: u64 = 0;
        let mut width: u64 = 1;
        let mut log10_total = f64::NEG_INFINITY;
        let mut log10_width = 0.0;
        for level in levels.iter().rev() {
            width = width.saturating_mul(level.degree);
            total = total.saturating_add(width);
            log10_width += (level.degree as f64).log10();
            log10_total = log10_sum(log10_total, log10_width);
        }
        Ok(IdentificationPlan {
            a,
            b,
            n,
            source,
            levels,
            cost,
            epsilon,
            ln_inv_epsilon,
            total_queries: total,
            log10_total_queries: log10_total,
        })
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    /// `P_0, …, P_k`.
    pub fn path(&self) -> Vec<&Partition> {
        std::iter::once(&self.source).chain(self.levels.iter().map(|l| &l.partition)).collect()
    }

    pub fn degrees(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.degree).collect()
    }

    pub fn final_partition(&self) -> &Partition {
        self.levels.last().map_or(&self.source, |l| &l.partition)
    }

    fn observation_class(&self, chain: &PoMarkovChain, obs: Symbol) -> ClassId {
        let sink = chain.sink().expect("plans exist only for canonical chains");
        let sink_class = self.source.class(sink);
        if obs == Symbol::SINK {
            sink_class
        } else {
            1 - sink_class
        }
    }

    /// Places a node of the given height in `P_height`.
    ///
    /// `hits(rule)` must report how many of the rule's children fall in the
    /// test's collection. Pairs are resolved lazily, so children of pairs that
    /// cannot change the outcome are never requested.
    fn classify_with(
        &self,
        height: usize,
        own_p0: ClassId,
        mut hits: impl FnMut(&PairTest, u64, u64) -> u64,
    ) -> Option<ClassId> {
        if height == 0 {
            return Some(own_p0);
        }
        let level = &self.levels[height - 1];
        let fine = &level.partition;
        let mut verdicts: Vec<Option<StateId>> = vec![None; level.rules.len()];
        let mut rule_of: HashMap<(StateId, StateId), usize> = HashMap::with_capacity(level.rules.len());
        for (i, r) in level.rules.iter().enumerate() {
            rule_of.insert((r.x, r.y), i);
        }
        let mut verdict = |ri: usize| -> StateId {
            if let Some(v) = verdicts[ri] {
                return v;
            }
            let rule = &level.rules[ri];
            let v = match &rule.check {
                PairCheck::Observation => {
                    if self.source.class(rule.x) == own_p0 {
                        rule.x
                    } else {
                        rule.y
                    }
                }
                PairCheck::Sampled { test, start, samples } => test.decide(hits(test, *start, *samples), *samples),
            };
            verdicts[ri] = Some(v);
            v
        };
        let mut winning: Option<ClassId> = None;
        for x in 0..self.n {
            let beats_all = (0..self.n).filter(|&y| fine.separates(x, y)).all(|y| {
                let key = (x.min(y), x.max(y));
                verdict(rule_of[&key]) == x
            });
            if beats_all {
                match winning {
                    None => winning = Some(fine.class(x)),
                    Some(c) if c == fine.class(x) => {}
                    Some(_) => return None,
                }
            }
        }
        winning
    }

    fn root_verdict(&self, class: Option<ClassId>) -> Verdict {
        let fin = self.final_partition();
        match class {
            Some(c) if c == fin.class(self.a) => Verdict::State(self.a),
            Some(c) if c == fin.class(self.b) => Verdict::State(self.b),
            _ => Verdict::Abstain,
        }
    }

    /// The plan's tree in breadth-first order.
    pub fn uniform_shape(&self) -> Result<TreeShape, PlanError> {
        if self.total_queries > MATERIALIZE_CAP {
            return Err(PlanError::TooLarge {
                nodes: self.total_queries,
                cap: MATERIALIZE_CAP,
            });
        }
        let mut parents = Vec::with_capacity(self.total_queries as usize);
        let mut frontier = vec![0usize];
        let mut next_id = 1usize;
        for height in (1..=self.height()).rev() {
            let degree = self.levels[height - 1].degree;
            let mut next = Vec::with_capacity(frontier.len() * degree as usize);
            for &node in &frontier {
                for _ in 0..degree {
                    parents.push(node);
                    next.push(next_id);
                    next_id += 1;
                }
            }
            frontier = next;
        }
        Ok(TreeShape::new(parents)?)
    }

    /// Classifies the root of a fully materialized plan tree from its
    /// observations alone. `observations` must follow [`Self::uniform_shape`].
    pub fn classify_observations(&self, chain: &PoMarkovChain, observations: &[Symbol]) -> Result<Verdict, PlanError> {
        if observations.len() as u64 != self.total_queries + 1 {
            return Err(PlanError::ShapeMismatch);
        }
        // first node index at each depth
        let mut depth_start = vec![0u64; self.height() + 1];
        let mut width = 1u64;
        for depth in 1..=self.height() {
            depth_start[depth] = depth_start[depth - 1] + width;
            width *= self.levels[self.height() - depth].degree;
        }
        let class = self.classify_materialized(chain, observations, &depth_start, 0, 0);
        Ok(self.root_verdict(class))
    }

    fn classify_materialized(
        &self,
        chain: &PoMarkovChain,
        obs: &[Symbol],
        depth_start: &[u64],
        depth: usize,
        offset: u64,
    ) -> Option<ClassId> {
        let height = self.height() - depth;
        let node = depth_start[depth] + offset;
        let own = self.observation_class(chain, obs[node as usize]);
        if height == 0 {
            return Some(own);
        }
        let degree = self.levels[height - 1].degree;
        self.classify_with(height, own, |test, start, samples| {
            (start..start + samples)
                .filter(|&j| {
                    let child = self.classify_materialized(chain, obs, depth_start, depth + 1, offset * degree + j);
                    test.hits(child)
                })
                .count() as u64
        })
    }

    /// Samples the plan's tree from hidden start `x0` and classifies it.
    ///
    /// Only the children that the classifier actually inspects are drawn, and
    /// at the lowest level their class counts are drawn directly from the
    /// binomial law they follow. The result has the same distribution as
    /// sampling the whole tree; the query count reported is the full tree's.
    pub fn identify(&self, chain: &PoMarkovChain, x0: StateId, seed: u64) -> IdentifyOutcome {
        let mut rng = stream_rng(seed, CHAIN_STREAM);
        let mut sampled = 0u64;
        let class = self.classify_lazy(chain, x0, self.height(), &mut rng, &mut sampled);
        IdentifyOutcome {
            verdict: self.root_verdict(class),
            queries: self.total_queries,
            sampled_nodes: sampled,
        }
    }

    fn classify_lazy<R: Rng>(
        &self,
        chain: &PoMarkovChain,
        state: StateId,
        height: usize,
        rng: &mut R,
        sampled: &mut u64,
    ) -> Option<ClassId> {
        let own = self.observation_class(chain, chain.observation(state));
        self.classify_with(height, own, |test, _start, samples| {
            *sampled += samples;
            if height == 1 {
                let p: f64 = chain
                    .row(state)
                    .iter()
                    .enumerate()
                    .filter(|&(y, _)| test.hits(Some(self.source.class(y))))
                    .map(|(_, &p)| p)
                    .sum();
                binomial(samples, p, rng)
            } else {
                (0..samples)
                    .filter(|_| {
                        let child = chain.sample_next(state, rng);
                        test.hits(self.classify_lazy(chain, child, height - 1, rng, sampled))
                    })
                    .count() as u64
            }
        })
    }
}

fn binomial<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 || n == 0 {
        0
    } else if p == 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("valid binomial parameters").sample(rng)
    }
}

fn pair_test_samples_ln(ln_inv_epsilon: f64, delta: f64) -> u64 {
    (2.0 * ln_inv_epsilon / (delta * delta)).ceil().max(1.0) as u64
}

fn log10_sum(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + 10f64.powf(lo - hi)).log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentifyOutcome {
    pub verdict: Verdict,
    /// Size of the plan's tree; identical on every run.
    pub queries: u64,
    /// Nodes the lazy sampler actually had to draw.
    pub sampled_nodes: u64,
}

/// Runs the planner: the cheapest partition separating `a` from `b` (ties
/// broken by the smallest canonical class array), its shortest path and the
/// resulting uniform tree.
pub fn plan_identification(chain: &PoMarkovChain, a: StateId, b: StateId) -> Result<IdentificationPlan, PlanError> {
    plan_with(chain, a, b, None)
}

/// Same as [`plan_identification`] but with a caller-chosen per-test error
/// budget. Mostly useful for building trees small enough to materialize.
pub fn plan_identification_with_epsilon(
    chain: &PoMarkovChain,
    a: StateId,
    b: StateId,
    epsilon: f64,
) -> Result<IdentificationPlan, PlanError> {
    plan_with(chain, a, b, Some((1.0 / epsilon).ln()))
}

fn plan_with(chain: &PoMarkovChain, a: StateId, b: StateId, ln_inv: Option<f64>) -> Result<IdentificationPlan, PlanError> {
    let graph = build_partition_graph(chain)?;
    let paths = shortest_costs(&graph);
    let mut best: Option<usize> = None;
    for (i, p) in graph.nodes.iter().enumerate() {
        if !p.separates(a, b) || !paths.reachable(i) {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(j) => {
                let (ci, cj) = (paths.log_cost[i], paths.log_cost[j]);
                let tol = 1e-12 * ci.abs().max(cj.abs()).max(1.0);
                if ci < cj - tol || ((ci - cj).abs() <= tol && graph.nodes[i] < graph.nodes[j]) {
                    Some(i)
                } else {
                    Some(j)
                }
            }
        };
    }
    let target = best.ok_or(PlanError::Indistinguishable(a, b))?;
    let path = paths.path_to(target).into_iter().map(|i| graph.nodes[i].clone()).collect();
    IdentificationPlan::assemble(chain, a, b, path, ln_inv)
}

/// Plans and runs one identification from hidden start `x0`.
pub fn identify(chain: &PoMarkovChain, a: StateId, b: StateId, x0: StateId, seed: u64) -> Result<IdentifyOutcome, PlanError> {
    Ok(plan_identification(chain, a, b)?.identify(chain, x0, seed))
}

/// Classifies a sampled plan tree. The tree must have the plan's shape.
pub fn classify_tree(chain: &PoMarkovChain, plan: &IdentificationPlan, tree: &QueryTree) -> Result<Verdict, PlanError> {
    if tree.shape() != plan.uniform_shape()? {
        return Err(PlanError::ShapeMismatch);
    }
    plan.classify_observations(chain, tree.observations())
}

/// Greedily follows edges of weight at most `(3 (n−1) q̂)²` from the source
/// (lightest edge first, ties to the smallest target) until none is left.
/// Returns the walk when its end separates `a` and `b`.
pub fn certify_path_bound(
    chain: &PoMarkovChain,
    a: StateId,
    b: StateId,
    q_hat: f64,
) -> Result<Option<Vec<Partition>>, PlanError> {
    if a == b {
        return Ok(None);
    }
    let graph = build_partition_graph(chain)?;
    let h = (3.0 * (chain.n() - 1) as f64 * q_hat).powi(2);
    let mut cur = graph.source;
    let mut walk = vec![graph.nodes[cur].clone()];
    while let Some(e) = graph.edges[cur]
        .iter()
        .filter(|e| e.weight <= h)
        .min_by(|x, y| x.weight.total_cmp(&y.weight).then(x.to.cmp(&y.to)))
    {
        cur = e.to;
        walk.push(graph.nodes[cur].clone());
    }
    Ok(graph.nodes[cur].separates(a, b).then_some(walk))
}

/// Plan summary for reports: partitions rendered with state labels.
#[derive(Clone, Debug, Serialize)]
pub struct PlanSummary {
    pub a: String,
    pub b: String,
    pub path: Vec<String>,
    pub weights: Vec<f64>,
    pub cost: f64,
    pub epsilon: f64,
    pub degrees: Vec<u64>,
    pub total_queries: u64,
    pub log10_total_queries: f64,
}

impl PlanSummary {
    pub fn new(chain: &PoMarkovChain, plan: &IdentificationPlan) -> Self {
        PlanSummary {
            a: chain.label(plan.a).to_string(),
            b: chain.label(plan.b).to_string(),
            path: plan.path().iter().map(|p| p.display(chain).to_string()).collect(),
            weights: plan.levels.iter().map(|l| l.weight).collect(),
            cost: plan.cost,
            epsilon: plan.epsilon,
            degrees: plan.degrees(),
            total_queries: plan.total_queries,
            log10_total_queries: plan.log10_total_queries,
        }
    }
}
