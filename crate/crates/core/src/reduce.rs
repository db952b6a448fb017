//! Reduction from arbitrary observation alphabets to canonical chains.
//!
//! Every transition `x → x'` of the source becomes, with probability
//! `q·p(x, x')`, a detour through `k − 1` silent dummy states ending at
//! `φ(x')`. With the remaining probability `1 − q`, `φ(x)` steps onto a ladder
//! of special states `σ_{O(x)+1} → … → σ_k = s`, so the depth at which a
//! path hits the sink spells out the source observation: a path from `φ(x)`
//! reaches `s` after exactly `k − O(x)` steps.
//!
//! Both directions of use are provided: an adaptive emulator that drives a
//! source strategy on the target chain, and a non-adaptive one that lays a
//! fixed bundle of paths under every planned source node.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{is_canonical, ChainError, PoMarkovChain, StateId, Symbol};
use crate::simulate::{
    run_adaptive, trial_seed, AdaptiveStrategy, Decision, NonAdaptivePlan, SimulateError, TreeShape, Verdict,
    VisibleTree,
};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("q must lie strictly between 0 and 1, got {0}")]
    InvalidQ(f64),
    #[error("alphabet size {requested} is below 2 or below the {used} symbols in use")]
    Alphabet { requested: usize, used: usize },
    #[error("plan has no nodes")]
    EmptyPlan,
    #[error("a node has {children} children but bundles hold {bundle} paths")]
    BundleTooSmall { children: usize, bundle: u64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
}

/// The source chain, its canonical image and the maps between them.
///
/// Source state `x` is target state `x` (`φ` is the identity on the first
/// `n` indices); dummy paths and the special ladder follow.
#[derive(Clone, Debug)]
pub struct CanonicalReduction {
    pub source: PoMarkovChain,
    pub target: PoMarkovChain,
    pub phi: Vec<StateId>,
    /// `(x, x') ↦ [d₁, …, d_{k−1}]` for every transition with `p(x, x') > 0`.
    pub dummy_paths: BTreeMap<(StateId, StateId), Vec<StateId>>,
    /// `[σ₁, …, σ_k]`; the last one is the sink.
    pub special: Vec<StateId>,
    pub q: f64,
    pub k: usize,
}

/// Builds the reduction with the alphabet `{0, …, max symbol}`.
pub fn reduce_to_canonical(source: &PoMarkovChain, q: f64) -> Result<CanonicalReduction, ReduceError> {
    reduce_to_canonical_with_alphabet(source, q, source.alphabet_size().max(2))
}

/// Builds the reduction for an alphabet of `k` symbols, which may be larger
/// than the set of symbols the chain actually uses.
pub fn reduce_to_canonical_with_alphabet(
    source: &PoMarkovChain,
    q: f64,
    k: usize,
) -> Result<CanonicalReduction, ReduceError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(ReduceError::InvalidQ(q));
    }
    if k < 2 || k < source.alphabet_size() {
        return Err(ReduceError::Alphabet {
            requested: k,
            used: source.alphabet_size(),
        });
    }
    let n = source.n();
    let mut labels: Vec<String> = source.states().to_vec();
    let mut dummy_paths = BTreeMap::new();
    for x in 0..n {
        for (y, &p) in source.row(x).iter().enumerate() {
            if p > 0.0 {
                let ids: Vec<StateId> = (1..k)
                    .map(|j| {
                        labels.push(format!("d{j}[{}>{}]", source.label(x), source.label(y)));
                        labels.len() - 1
                    })
                    .collect();
                dummy_paths.insert((x, y), ids);
            }
        }
    }
    let special: Vec<StateId> = (1..=k)
        .map(|i| {
            labels.push(format!("sigma{i}"));
            labels.len() - 1
        })
        .collect();
    let total = labels.len();
    let mut p = vec![vec![0.0; total]; total];
    for x in 0..n {
        for (y, &pxy) in source.row(x).iter().enumerate() {
            if pxy > 0.0 {
                let path = &dummy_paths[&(x, y)];
                p[x][path[0]] += q * pxy;
                for w in path.windows(2) {
                    p[w[0]][w[1]] = 1.0;
                }
                p[*path.last().expect("k >= 2")][y] = 1.0;
            }
        }
        p[x][special[source.observation(x).0 as usize]] += 1.0 - q;
    }
    for w in special.windows(2) {
        p[w[0]][w[1]] = 1.0;
    }
    let sink = *special.last().expect("k >= 2");
    p[sink][sink] = 1.0;
    let observation = (0..total)
        .map(|i| if i == sink { Symbol::SINK } else { Symbol::NON_SINK })
        .collect();
    let target = PoMarkovChain::new(
        format!("canonical({})", source.name()),
        labels,
        p,
        observation,
        Some(sink),
    )?;
    Ok(CanonicalReduction {
        source: source.clone(),
        target,
        phi: (0..n).collect(),
        dummy_paths,
        special,
        q,
        k,
    })
}

impl CanonicalReduction {
    /// Depth at which a special path from `φ(x)` meets the sink.
    pub fn sink_depth(&self, symbol: Symbol) -> usize {
        self.k - symbol.0 as usize
    }

    /// Inverse of [`Self::sink_depth`]; `None` outside `1..=k`.
    pub fn decode_depth(&self, depth: usize) -> Option<Symbol> {
        (1..=self.k).contains(&depth).then(|| Symbol((self.k - depth) as u32))
    }

    /// `P̂(first step enters d₁^{x,x'} | first step is not special)` for every
    /// `x'`, read off the target matrix.
    pub fn conditional_child_distribution(&self, x: StateId) -> Vec<f64> {
        let row = self.target.row(self.phi[x]);
        let special_mass: f64 = self.special.iter().map(|&s| row[s]).sum();
        let rest = 1.0 - special_mass;
        (0..self.source.n())
            .map(|y| match self.dummy_paths.get(&(x, y)) {
                Some(path) => row[path[0]] / rest,
                None => 0.0,
            })
            .collect()
    }

    /// Sidecar describing `φ`, the dummy paths and the special ladder by label.
    pub fn phi_map(&self) -> PhiMap {
        let t = |s: StateId| self.target.label(s).to_string();
        PhiMap {
            q: self.q,
            k: self.k,
            phi: (0..self.source.n())
                .map(|x| (self.source.label(x).to_string(), t(self.phi[x])))
                .collect(),
            special: self.special.iter().map(|&s| t(s)).collect(),
            dummy_paths: self
                .dummy_paths
                .iter()
                .map(|(&(x, y), path)| DummyPathRecord {
                    from: self.source.label(x).to_string(),
                    to: self.source.label(y).to_string(),
                    states: path.iter().map(|&s| t(s)).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DummyPathRecord {
    pub from: String,
    pub to: String,
    pub states: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiMap {
    pub q: f64,
    pub k: usize,
    pub phi: BTreeMap<String, String>,
    pub special: Vec<String>,
    pub dummy_paths: Vec<DummyPathRecord>,
}

// ── Adaptive emulation ──────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    /// Nothing drawn yet.
    Start,
    /// Drawing paths from `anchor` until one meets the sink.
    Observe { anchor: usize, depth: usize },
    /// Drawing length-`k` paths from `anchor` until one avoids the sink.
    Advance { anchor: usize, depth: usize },
    Done(Verdict),
}

/// Runs a source strategy on the target chain of a reduction.
///
/// Each source observation is recovered by drawing paths from the current
/// node until one reaches the sink; the depth at which it does names the
/// symbol. Each source draw is realized by drawing length-`k` paths until one
/// stays clear of the sink; its endpoint plays the new source node.
pub struct AdaptiveEmulator<'r, S> {
    reduction: &'r CanonicalReduction,
    source: S,
    phase: Phase,
    src_parents: Vec<usize>,
    src_obs: Vec<Symbol>,
    /// Target node standing in for each source node.
    src_to_target: Vec<usize>,
    /// Source parent of the node being advanced to.
    pending_parent: Option<usize>,
}

impl<'r, S: AdaptiveStrategy> AdaptiveEmulator<'r, S> {
    pub fn new(reduction: &'r CanonicalReduction, source: S) -> Self {
        AdaptiveEmulator {
            reduction,
            source,
            phase: Phase::Start,
            src_parents: Vec::new(),
            src_obs: Vec::new(),
            src_to_target: Vec::new(),
            pending_parent: None,
        }
    }

    /// Source queries emulated so far.
    pub fn source_queries(&self) -> usize {
        self.src_obs.len().saturating_sub(1)
    }

    fn consult_source(&mut self, rng: &mut dyn RngCore) -> Decision {
        let view = VisibleTree::new(&self.src_parents, &self.src_obs);
        match self.source.decide(&view, rng) {
            Decision::Stop(v) => {
                let mapped = match v {
                    Verdict::State(x) => Verdict::State(self.reduction.phi[x]),
                    Verdict::Abstain => Verdict::Abstain,
                };
                self.phase = Phase::Done(mapped);
                Decision::Stop(mapped)
            }
            Decision::Extend(src_node) => {
                if src_node >= self.src_obs.len() {
                    // forward the bad index; the runner reports it
                    return Decision::Extend(usize::MAX);
                }
                let anchor = self.src_to_target[src_node];
                self.pending_parent = Some(src_node);
                self.phase = Phase::Advance { anchor, depth: 0 };
                Decision::Extend(anchor)
            }
        }
    }
}

impl<S: AdaptiveStrategy> AdaptiveStrategy for AdaptiveEmulator<'_, S> {
    fn decide(&mut self, view: &VisibleTree<'_>, rng: &mut dyn RngCore) -> Decision {
        let k = self.reduction.k;
        match self.phase {
            Phase::Done(v) => Decision::Stop(v),
            Phase::Start => {
                self.src_to_target.push(0);
                self.phase = Phase::Observe { anchor: 0, depth: 0 };
                Decision::Extend(0)
            }
            Phase::Observe { anchor, depth, .. } => {
                let node = view.last();
                let depth = depth + 1;
                if view.observation(node) == Symbol::SINK {
                    let symbol = self.reduction.decode_depth(depth).expect("depth within 1..=k");
                    if self.src_obs.is_empty() {
                        self.src_parents.push(0);
                    } else {
                        let parent = self.pending_parent.take().expect("advance precedes observe");
                        self.src_parents.push(parent);
                    }
                    self.src_obs.push(symbol);
                    self.consult_source(rng)
                } else if depth == k {
                    self.phase = Phase::Observe { anchor, depth: 0 };
                    Decision::Extend(anchor)
                } else {
                    self.phase = Phase::Observe { anchor, depth };
                    Decision::Extend(node)
                }
            }
            Phase::Advance { anchor, depth, .. } => {
                let node = view.last();
                let depth = depth + 1;
                if view.observation(node) == Symbol::SINK {
                    self.phase = Phase::Advance { anchor, depth: 0 };
                    Decision::Extend(anchor)
                } else if depth == k {
                    self.src_to_target.push(node);
                    self.phase = Phase::Observe { anchor: node, depth: 0 };
                    Decision::Extend(node)
                } else {
                    self.phase = Phase::Advance { anchor, depth };
                    Decision::Extend(node)
                }
            }
        }
    }
}

/// Wraps a source strategy for use on the reduction's target chain.
pub fn emulate_adaptive<S: AdaptiveStrategy>(reduction: &CanonicalReduction, strategy: S) -> AdaptiveEmulator<'_, S> {
    AdaptiveEmulator::new(reduction, strategy)
}

// ── Non-adaptive emulation ──────────────────────────────────────────────────

/// `q` such that the special transition has probability `1 / (c1 Q)`.
pub fn nonadaptive_q(c1: f64, plan_nodes: usize) -> f64 {
    1.0 - 1.0 / (c1 * plan_nodes as f64)
}

/// Paths per bundle: `c2 · Q · ceil(log₂ Q)` with the log clamped to at least 1.
pub fn bundle_size(c2: f64, plan_nodes: usize) -> u64 {
    let log = (plan_nodes as f64).log2().ceil().max(1.0);
    (c2 * plan_nodes as f64 * log).ceil().max(1.0) as u64
}

/// Upper bound on the chance that some bundle holds no special path:
/// `Q (1 − 1/(c1 Q))^{bundle}`.
pub fn bundle_failure_bound(c1: f64, c2: f64, plan_nodes: usize) -> f64 {
    let q = plan_nodes as f64;
    (q.ln() + bundle_size(c2, plan_nodes) as f64 * (1.0 - 1.0 / (c1 * q)).ln()).exp()
}

/// Lays a bundle of fixed length-`k` paths under every source node. The `j`-th
/// child of a source node continues from the end of path `j` of its bundle.
/// The decision decodes each source observation from the first path in the
/// bundle that meets the sink and abstains when a bundle has none or when a
/// designated continuation path was diverted.
pub fn emulate_nonadaptive(
    reduction: &CanonicalReduction,
    plan: NonAdaptivePlan,
    c2: f64,
) -> Result<NonAdaptivePlan, ReduceError> {
    let src = &plan.shape;
    let nodes = src.nodes();
    if nodes == 0 {
        return Err(ReduceError::EmptyPlan);
    }
    let k = reduction.k;
    let bundle = bundle_size(c2, nodes);
    let mut children = vec![0usize; nodes];
    for &p in src.parents() {
        children[p] += 1;
    }
    if let Some(&most) = children.iter().max() {
        if most as u64 > bundle {
            return Err(ReduceError::BundleTooSmall { children: most, bundle });
        }
    }
    let mut parents: Vec<usize> = Vec::new();
    let mut anchor = vec![0usize; nodes];
    let mut bundle_start = vec![0usize; nodes];
    let mut next_child = vec![0usize; nodes];
    for v in 0..nodes {
        if v > 0 {
            let p = src.parent(v);
            let j = next_child[p];
            next_child[p] += 1;
            anchor[v] = bundle_start[p] + j * k + (k - 1);
        }
        bundle_start[v] = parents.len() + 1;
        for _ in 0..bundle {
            let mut prev = anchor[v];
            for _ in 0..k {
                parents.push(prev);
                prev = parents.len();
            }
        }
    }
    let shape = TreeShape::new(parents)?;
    let phi = reduction.phi.clone();
    let decision = plan.decision;
    let decode = move |obs: &[Symbol]| -> Verdict {
        let mut src_obs = Vec::with_capacity(nodes);
        for v in 0..nodes {
            if v > 0 && obs[anchor[v]] == Symbol::SINK {
                return Verdict::Abstain;
            }
            let mut symbol = None;
            for p in 0..bundle as usize {
                let base = bundle_start[v] + p * k;
                if let Some(t) = (0..k).find(|&t| obs[base + t] == Symbol::SINK) {
                    symbol = Some(Symbol((k - (t + 1)) as u32));
                    break;
                }
            }
            match symbol {
                Some(s) => src_obs.push(s),
                None => return Verdict::Abstain,
            }
        }
        match decision(&src_obs) {
            Verdict::State(x) => Verdict::State(phi[x]),
            Verdict::Abstain => Verdict::Abstain,
        }
    };
    Ok(NonAdaptivePlan::new(shape, decode))
}

// ── Verification ────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionReport {
    pub trials: u64,
    pub source_success: f64,
    pub target_success: f64,
    pub success_gap: f64,
    pub mean_source_queries: f64,
    pub mean_target_queries: f64,
    pub overhead_ratio: f64,
    pub alphabet: usize,
}

/// Runs a source strategy on the source chain and its emulation on the target
/// from the same hidden starts (`a, b, a, …`) and compares them.
pub fn verify_reduction<S, F>(
    reduction: &CanonicalReduction,
    a: StateId,
    b: StateId,
    make_strategy: F,
    budget: usize,
    trials: u64,
    seed: u64,
) -> Result<ReductionReport, ReduceError>
where
    S: AdaptiveStrategy,
    F: Fn() -> S,
{
    let mut src_ok = 0u64;
    let mut tgt_ok = 0u64;
    let mut src_q = 0u64;
    let mut tgt_q = 0u64;
    for i in 0..trials {
        let hidden = if i % 2 == 0 { a } else { b };
        let s = trial_seed(seed, i);
        let mut strategy = make_strategy();
        let (tree, v) = run_adaptive(&reduction.source, hidden, &mut strategy, budget, s)?;
        src_q += tree.queries() as u64;
        src_ok += u64::from(v == Verdict::State(hidden));
        let mut emulator = emulate_adaptive(reduction, make_strategy());
        let target_budget = budget.saturating_mul(64 * reduction.k).max(64 * reduction.k);
        let (tree, v) = run_adaptive(
            &reduction.target,
            reduction.phi[hidden],
            &mut emulator,
            target_budget,
            trial_seed(s, 1),
        )?;
        tgt_q += tree.queries() as u64;
        tgt_ok += u64::from(v == Verdict::State(reduction.phi[hidden]));
    }
    let t = trials.max(1) as f64;
    let (ss, ts) = (src_ok as f64 / t, tgt_ok as f64 / t);
    let (ms, mt) = (src_q as f64 / t, tgt_q as f64 / t);
    Ok(ReductionReport {
        trials,
        source_success: ss,
        target_success: ts,
        success_gap: (ss - ts).abs(),
        mean_source_queries: ms,
        mean_target_queries: mt,
        overhead_ratio: if ms > 0.0 { mt / ms } else { f64::INFINITY },
        alphabet: reduction.k,
    })
}

/// True iff the reduction's target is a canonical chain.
pub fn target_is_canonical(reduction: &CanonicalReduction) -> bool {
    is_canonical(&reduction.target).is_some()
}
