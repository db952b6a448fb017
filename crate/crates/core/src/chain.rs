//! Partially observable Markov chains.
//!
//! A chain is a finite state set with a row-stochastic transition matrix and a
//! deterministic observation function into a small integer alphabet. A chain is
//! *canonical* when it declares an absorbing sink and the only observation is
//! the sink indicator.
//!
//! Every example chain used throughout the crate is built here, and chains can
//! be stored as JSON documents (see [`write_chain`] / [`read_chain`]).

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a state in [`PoMarkovChain::states`].
pub type StateId = usize;

/// Row sums must be within this distance of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A visible observation symbol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub u32);

impl Symbol {
    pub const NON_SINK: Symbol = Symbol(0);
    pub const SINK: Symbol = Symbol(1);
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unknown state label `{0}`")]
    UnknownState(String),
    #[error("duplicate state label `{0}`")]
    DuplicateState(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A partially observable Markov chain `(Ω, P, O)` with an optional sink.
#[derive(Clone, Debug, PartialEq)]
pub struct PoMarkovChain {
    name: String,
    states: Vec<String>,
    transition: Vec<Vec<f64>>,
    observation: Vec<Symbol>,
    sink: Option<StateId>,
}

impl PoMarkovChain {
    /// Builds a chain after checking shapes and label uniqueness.
    ///
    /// Probabilistic invariants (row sums, absorbing sink) are *not* enforced
    /// here; use [`validate`] for those, so that malformed files can still be
    /// loaded and reported on.
    pub fn new(
        name: impl Into<String>,
        states: Vec<String>,
        transition: Vec<Vec<f64>>,
        observation: Vec<Symbol>,
        sink: Option<StateId>,
    ) -> Result<Self, ChainError> {
        let n = states.len();
        if n == 0 {
            return Err(ChainError::Shape("chain has no states".into()));
        }
        if transition.len() != n {
            return Err(ChainError::Shape(format!(
                "{} states but transition matrix has {} rows",
                n,
                transition.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(ChainError::Shape(format!(
                    "{} states but transition row {} has {} entries",
                    n,
                    i,
                    row.len()
                )));
            }
        }
        if observation.len() != n {
            return Err(ChainError::Shape(format!(
                "{} states but {} observations",
                n,
                observation.len()
            )));
        }
        if let Some(s) = sink {
            if s >= n {
                return Err(ChainError::Shape(format!("sink index {s} out of range")));
            }
        }
        let mut seen = HashSet::new();
        for label in &states {
            if !seen.insert(label.as_str()) {
                return Err(ChainError::DuplicateState(label.clone()));
            }
        }
        Ok(PoMarkovChain {
            name: name.into(),
            states,
            transition,
            observation,
            sink,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn label(&self, state: StateId) -> &str {
        &self.states[state]
    }

    pub fn state(&self, label: &str) -> Result<StateId, ChainError> {
        self.states
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| ChainError::UnknownState(label.to_string()))
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn row(&self, state: StateId) -> &[f64] {
        &self.transition[state]
    }

    pub fn prob(&self, from: StateId, to: StateId) -> f64 {
        self.transition[from][to]
    }

    pub fn observation(&self, state: StateId) -> Symbol {
        self.observation[state]
    }

    pub fn observations(&self) -> &[Symbol] {
        &self.observation
    }

    pub fn sink(&self) -> Option<StateId> {
        self.sink
    }

    /// Size of the observation alphabet `{0, …, max symbol}`.
    pub fn alphabet_size(&self) -> usize {
        self.observation.iter().map(|s| s.0 as usize).max().unwrap_or(0) + 1
    }

    /// Draws the next state from row `state`.
    pub fn sample_next<R: Rng + ?Sized>(&self, state: StateId, rng: &mut R) -> StateId {
        let row = &self.transition[state];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = state;
        for (j, &p) in row.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
        // rounding: u landed in the last sliver above the accumulated sum
        last
    }
}

/// One invariant failure found by [`validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    RowSum { row: usize, sum: f64 },
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    SinkNotAbsorbing { sink: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { row, sum } => write!(f, "row {row} sums to {sum}"),
            Violation::EntryOutOfRange { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} is outside [0, 1]")
            }
            Violation::SinkNotAbsorbing { sink } => write!(f, "sink {sink} is not absorbing"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(chain: &PoMarkovChain) -> ValidationReport {
    let mut violations = Vec::new();
    for (i, row) in chain.transition.iter().enumerate() {
        let mut sum = 0.0;
        for (j, &p) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                violations.push(Violation::EntryOutOfRange { row: i, col: j, value: p });
            }
            sum += p;
        }
        if !sum.is_finite() || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            violations.push(Violation::RowSum { row: i, sum });
        }
    }
    if let Some(s) = chain.sink {
        if !is_absorbing(chain, s) {
            violations.push(Violation::SinkNotAbsorbing { sink: s });
        }
    }
    ValidationReport { violations }
}

fn is_absorbing(chain: &PoMarkovChain, state: StateId) -> bool {
    chain.transition[state]
        .iter()
        .enumerate()
        .all(|(j, &p)| if j == state { p == 1.0 } else { p == 0.0 })
}

/// Returns the sink when the chain is canonical.
///
/// A chain is canonical iff it *declares* a sink, that sink is absorbing, and
/// the observation is 1 exactly on the sink and 0 everywhere else.
pub fn is_canonical(chain: &PoMarkovChain) -> Option<StateId> {
    let s = chain.sink?;
    if !is_absorbing(chain, s) {
        return None;
    }
    let indicator = chain
        .observation
        .iter()
        .enumerate()
        .all(|(i, &o)| o == if i == s { Symbol::SINK } else { Symbol::NON_SINK });
    indicator.then_some(s)
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn zeros(n: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; n]; n]
}

fn canonical_observation(n: usize, sink: StateId) -> Vec<Symbol> {
    (0..n)
        .map(|i| if i == sink { Symbol::SINK } else { Symbol::NON_SINK })
        .collect()
}

/// The five-state chain `a, b, s, b', a'` where one step plus many sibling
/// children tells `a` from `a'`, but passive observation cannot.
pub fn build_intro_chain() -> PoMarkovChain {
    let (a, b, s, bp, ap) = (0, 1, 2, 3, 4);
    let mut p = zeros(5);
    p[a][a] = 0.5;
    p[a][b] = 0.5;
    p[b][s] = 1.0;
    p[ap][bp] = 1.0;
    p[bp][bp] = 0.5;
    p[bp][s] = 0.5;
    p[s][s] = 1.0;
    PoMarkovChain::new(
        "intro",
        labels(&["a", "b", "s", "b'", "a'"]),
        p,
        canonical_observation(5, s),
        Some(s),
    )
    .expect("intro chain is well formed")
}

/// The `a, b, a', b', s` chain with `1/d` transition probabilities.
pub fn build_example1_chain(d: u32) -> Result<PoMarkovChain, ChainError> {
    if d < 2 {
        return Err(ChainError::Parameter(format!("d must be >= 2, got {d}")));
    }
    let inv = 1.0 / d as f64;
    let (a, b, ap, bp, s) = (0, 1, 2, 3, 4);
    let mut p = zeros(5);
    p[a][b] = 1.0;
    p[b][a] = 1.0 - inv;
    p[b][s] = inv;
    p[ap][ap] = inv;
    p[ap][bp] = 1.0 - inv;
    p[bp][ap] = 1.0 - inv;
    p[bp][s] = inv;
    p[s][s] = 1.0;
    PoMarkovChain::new(
        format!("example1(d={d})"),
        labels(&["a", "b", "a'", "b'", "s"]),
        p,
        canonical_observation(5, s),
        Some(s),
    )
}

/// Path `q1 … q_{n-2}` toward the sink with a dummy state `D` reachable from
/// every path state with probability 1/2.
///
/// States are ordered `q1, …, q_{n-2}, D, s`.
pub fn build_gap_chain(n: usize, d: u32) -> Result<PoMarkovChain, ChainError> {
    if n < 4 {
        return Err(ChainError::Parameter(format!("n must be >= 4, got {n}")));
    }
    if d < 2 {
        return Err(ChainError::Parameter(format!("d must be >= 2, got {d}")));
    }
    let d = d as f64;
    let path = n - 2;
    let dummy = path;
    let sink = path + 1;
    let mut p = zeros(n);
    for i in 0..path {
        p[i][i] = (1.0 - 1.0 / d) / 2.0;
        let next = if i + 1 < path { i + 1 } else { sink };
        p[i][next] = 1.0 / (2.0 * d);
        p[i][dummy] = 0.5;
    }
    p[dummy][sink] = 1.0;
    p[sink][sink] = 1.0;
    let mut states: Vec<String> = (1..=path).map(|i| format!("q{i}")).collect();
    states.push("D".into());
    states.push("s".into());
    PoMarkovChain::new(
        format!("gap(n={n},d={d})"),
        states,
        p,
        canonical_observation(n, sink),
        Some(sink),
    )
}

/// Layered acyclicity chain with `m` YES layers.
///
/// States: `x_NO, v_U, v_D, x_YES, l1 … lm`. Only `lm` is observable
/// (symbol 1). `lm` is made absorbing so every row stays stochastic; the chain
/// declares no sink.
pub fn build_acyclicity_chain(m: usize) -> Result<PoMarkovChain, ChainError> {
    if m < 2 {
        return Err(ChainError::Parameter(format!("m must be >= 2, got {m}")));
    }
    let (x_no, v_u, v_d, x_yes) = (0, 1, 2, 3);
    let layer = |i: usize| 3 + i; // i in 1..=m
    let n = 4 + m;
    let mut p = zeros(n);
    p[x_no][v_u] = 0.5;
    p[x_no][v_d] = 0.5;
    p[v_u][v_d] = 1.0;
    p[v_d][v_u] = 1.0;
    for i in 1..=m {
        p[x_yes][layer(i)] = 1.0 / m as f64;
        if i < m {
            p[layer(i)][layer(i + 1)] = 1.0;
        }
    }
    p[layer(m)][layer(m)] = 1.0;
    let mut states = labels(&["x_NO", "v_U", "v_D", "x_YES"]);
    states.extend((1..=m).map(|i| format!("l{i}")));
    let observation = (0..n)
        .map(|i| if i == layer(m) { Symbol(1) } else { Symbol(0) })
        .collect();
    PoMarkovChain::new(format!("acyclicity(m={m})"), states, p, observation, None)
}

/// Observation symbols of the bidirectional acyclicity chain.
pub mod bidirectional_symbols {
    use super::Symbol;
    pub const PLAIN: Symbol = Symbol(0);
    pub const LAST_LAYER: Symbol = Symbol(1);
    pub const FIRST_LAYER: Symbol = Symbol(2);
    pub const UP: Symbol = Symbol(3);
    pub const DOWN: Symbol = Symbol(4);
}

/// Acyclicity chain where every layer can be left through its outgoing edges
/// (`l_i → d_i → l_{i+1}`) or its incoming edges (`l_i → u_i → l_{i-1}`).
///
/// The NO side gets the same gadget: `v_U` leaves through `dU`/`uU` to `v_D`
/// and `v_D` through `dD`/`uD` to `v_U`. Boundary layers that lack one
/// direction keep that half of their mass as a self-loop.
pub fn build_acyclicity_chain_bidirectional(m: usize) -> Result<PoMarkovChain, ChainError> {
    use bidirectional_symbols::*;
    if m < 2 {
        return Err(ChainError::Parameter(format!("m must be >= 2, got {m}")));
    }
    let mut states = labels(&["x_NO", "v_U", "v_D", "x_YES"]);
    states.extend((1..=m).map(|i| format!("l{i}")));
    states.extend((1..m).map(|i| format!("d{i}")));
    states.extend((2..=m).map(|i| format!("u{i}")));
    states.extend(labels(&["dU", "uU", "dD", "uD"]));
    let n = states.len();
    let (x_no, v_u, v_d, x_yes) = (0, 1, 2, 3);
    let layer = |i: usize| 3 + i;
    let down = |i: usize| 3 + m + i; // i in 1..m
    let up = |i: usize| 3 + m + (m - 1) + (i - 1); // i in 2..=m
    let (du, uu, dd, ud) = (n - 4, n - 3, n - 2, n - 1);

    let mut p = zeros(n);
    let mut obs = vec![PLAIN; n];
    p[x_no][v_u] = 0.5;
    p[x_no][v_d] = 0.5;
    p[v_u][du] = 0.5;
    p[v_u][uu] = 0.5;
    p[du][v_d] = 1.0;
    p[uu][v_d] = 1.0;
    p[v_d][dd] = 0.5;
    p[v_d][ud] = 0.5;
    p[dd][v_u] = 1.0;
    p[ud][v_u] = 1.0;
    obs[du] = DOWN;
    obs[dd] = DOWN;
    obs[uu] = UP;
    obs[ud] = UP;
    for i in 1..=m {
        p[x_yes][layer(i)] = 1.0 / m as f64;
        if i < m {
            p[layer(i)][down(i)] = 0.5;
            p[down(i)][layer(i + 1)] = 1.0;
            obs[down(i)] = DOWN;
        } else {
            p[layer(i)][layer(i)] += 0.5;
        }
        if i > 1 {
            p[layer(i)][up(i)] = 0.5;
            p[up(i)][layer(i - 1)] = 1.0;
            obs[up(i)] = UP;
        } else {
            p[layer(i)][layer(i)] += 0.5;
        }
    }
    obs[layer(1)] = FIRST_LAYER;
    obs[layer(m)] = LAST_LAYER;
    PoMarkovChain::new(
        format!("acyclicity-bidirectional(m={m})"),
        states,
        p,
        obs,
        None,
    )
}

/// Three-state chain with a two-symbol-used, three-symbol alphabet, used to
/// illustrate the reduction to canonical form.
///
/// `s1 → s2` (1), `s2 → s1` (1/2), `s2 → s3` (1/2), `s3 → s1` (1);
/// observations `s1 ↦ 0`, `s2 ↦ 1`, `s3 ↦ 1`.
pub fn build_reduction_example_chain() -> PoMarkovChain {
    let mut p = zeros(3);
    p[0][1] = 1.0;
    p[1][0] = 0.5;
    p[1][2] = 0.5;
    p[2][0] = 1.0;
    PoMarkovChain::new(
        "reduction-example",
        labels(&["s1", "s2", "s3"]),
        p,
        vec![Symbol(0), Symbol(1), Symbol(1)],
        None,
    )
    .expect("reduction example chain is well formed")
}

/// Random chains for property tests and acceptance sweeps.
pub mod random {
    use super::*;

    /// Random row over `n` states with support on a random non-empty subset.
    ///
    /// Weights are small integers so that exact ties between rows happen often.
    fn random_row<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
        let mut weights = vec![0u32; n];
        let support = rng.random_range(1..=n);
        for _ in 0..support {
            let j = rng.random_range(0..n);
            weights[j] += rng.random_range(1..=4);
        }
        let total: u32 = weights.iter().sum();
        weights.iter().map(|&w| w as f64 / total as f64).collect()
    }

    /// A random chain whose observations use `alphabet` symbols; no sink.
    pub fn random_chain<R: Rng + ?Sized>(n: usize, alphabet: u32, rng: &mut R) -> PoMarkovChain {
        let transition = (0..n).map(|_| random_row(n, rng)).collect();
        let observation = (0..n).map(|_| Symbol(rng.random_range(0..alphabet.max(1)))).collect();
        let states = (0..n).map(|i| format!("x{i}")).collect();
        PoMarkovChain::new("random", states, transition, observation, None)
            .expect("random chain is well formed")
    }

    /// A random canonical chain on `n >= 2` states; the last state is the sink.
    pub fn random_canonical_chain<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PoMarkovChain {
        assert!(n >= 2, "canonical chain needs a sink and one other state");
        let sink = n - 1;
        let mut transition: Vec<Vec<f64>> = (0..n).map(|_| random_row(n, rng)).collect();
        transition[sink] = vec![0.0; n];
        transition[sink][sink] = 1.0;
        let mut states: Vec<String> = (0..sink).map(|i| format!("x{i}")).collect();
        states.push("s".into());
        PoMarkovChain::new(
            "random-canonical",
            states,
            transition,
            canonical_observation(n, sink),
            Some(sink),
        )
        .expect("random canonical chain is well formed")
    }
}

// ── File format ─────────────────────────────────────────────────────────────

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    name: String,
    states: Vec<String>,
    transition: Vec<Vec<f64>>,
    observation: Vec<u32>,
    sink: Option<String>,
}

/// Serializes a chain as JSON with keys in the order
/// `name, states, transition, observation, sink`.
///
/// Probabilities are written with 17 significant digits so that reading the
/// document back reproduces every `f64` bit for bit.
pub fn chain_to_json(chain: &PoMarkovChain) -> String {
    let quote = |s: &str| serde_json::to_string(s).expect("string serializes");
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"name\": {},\n", quote(&chain.name)));
    let states: Vec<String> = chain.states.iter().map(|s| quote(s)).collect();
    out.push_str(&format!("  \"states\": [{}],\n", states.join(", ")));
    out.push_str("  \"transition\": [\n");
    for (i, row) in chain.transition.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.16e}")).collect();
        let sep = if i + 1 < chain.n() { "," } else { "" };
        out.push_str(&format!("    [{}]{}\n", cells.join(", "), sep));
    }
    out.push_str("  ],\n");
    let obs: Vec<String> = chain.observation.iter().map(|o| o.0.to_string()).collect();
    out.push_str(&format!("  \"observation\": [{}],\n", obs.join(", ")));
    match chain.sink {
        Some(s) => out.push_str(&format!("  \"sink\": {}\n", quote(&chain.states[s]))),
        None => out.push_str("  \"sink\": null\n"),
    }
    out.push_str("}\n");
    out
}

pub fn chain_from_json(text: &str) -> Result<PoMarkovChain, ChainError> {
    let file: ChainFile = serde_json::from_str(text).map_err(|e| ChainError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let sink = match &file.sink {
        Some(label) => Some(
            file.states
                .iter()
                .position(|s| s == label)
                .ok_or_else(|| ChainError::UnknownState(label.clone()))?,
        ),
        None => None,
    };
    PoMarkovChain::new(
        file.name,
        file.states,
        file.transition,
        file.observation.into_iter().map(Symbol).collect(),
        sink,
    )
}

pub fn write_chain(chain: &PoMarkovChain, path: impl AsRef<Path>) -> Result<(), ChainError> {
    std::fs::write(path, chain_to_json(chain))?;
    Ok(())
}

pub fn read_chain(path: impl AsRef<Path>) -> Result<PoMarkovChain, ChainError> {
    let text = std::fs::read_to_string(path)?;
    chain_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn intro_chain_rows_and_canonical_sink() {
        let c = build_intro_chain();
        assert_eq!(c.row(c.state("a").unwrap()), &[0.5, 0.5, 0.0, 0.0, 0.0]);
        assert!(validate(&c).ok());
        assert_eq!(is_canonical(&c), Some(c.state("s").unwrap()));
    }

    #[test]
    fn example1_row_for_b_at_d2() {
        let c = build_example1_chain(2).unwrap();
        assert_eq!(c.row(1), &[0.5, 0.0, 0.0, 0.0, 0.5]);
        assert!(build_example1_chain(1).is_err());
    }

    #[test]
    fn example1_rows_sum_to_one_and_canonical() {
        let c = build_example1_chain(8).unwrap();
        assert!(validate(&c).ok());
        assert_eq!(is_canonical(&c), Some(4));
    }

    #[test]
    fn gap_chain_rows() {
        let c = build_gap_chain(5, 2).unwrap();
        let q1 = c.state("q1").unwrap();
        assert_eq!(c.prob(q1, q1), 0.25);
        assert_eq!(c.prob(q1, c.state("q2").unwrap()), 0.25);
        assert_eq!(c.prob(q1, c.state("D").unwrap()), 0.5);
        assert!(validate(&c).ok());
        assert!(is_canonical(&c).is_some());
        for (n, d) in [(4, 2), (6, 8), (9, 3)] {
            let c = build_gap_chain(n, d).unwrap();
            assert_eq!(c.prob(c.state("D").unwrap(), c.state("s").unwrap()), 1.0);
            let last = c.state(&format!("q{}", n - 2)).unwrap();
            assert_eq!(c.prob(last, c.state("s").unwrap()), 1.0 / (2.0 * d as f64));
        }
        assert!(build_gap_chain(3, 2).is_err());
    }

    #[test]
    fn acyclicity_chain_layers() {
        let c = build_acyclicity_chain(3).unwrap();
        let x_yes = c.state("x_YES").unwrap();
        let layers: Vec<f64> = c.row(x_yes).iter().copied().filter(|&p| p > 0.0).collect();
        assert_eq!(layers.len(), 3);
        assert!(layers.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(c.observation(c.state("l3").unwrap()), Symbol(1));
        assert_eq!(c.observation(c.state("v_U").unwrap()), Symbol(0));
        let l3 = c.state("l3").unwrap();
        assert_eq!(c.prob(l3, l3), 1.0);
        assert!(validate(&c).ok());
        assert_eq!(is_canonical(&c), None);
        assert!(build_acyclicity_chain(1).is_err());
    }

    #[test]
    fn bidirectional_gadget() {
        let c = build_acyclicity_chain_bidirectional(3).unwrap();
        assert!(validate(&c).ok());
        assert_eq!(c.prob(c.state("d1").unwrap(), c.state("l2").unwrap()), 1.0);
        assert_eq!(c.prob(c.state("u3").unwrap(), c.state("l2").unwrap()), 1.0);
        assert_eq!(c.alphabet_size(), 5);

        let c2 = build_acyclicity_chain_bidirectional(2).unwrap();
        assert!(validate(&c2).ok());
        assert!(c2.state("u1").is_err());
        let l1 = c2.state("l1").unwrap();
        assert_eq!(c2.prob(l1, l1), 0.5);
        let l2 = c2.state("l2").unwrap();
        assert_eq!(c2.prob(l2, l2), 0.5);
    }

    #[test]
    fn validate_reports_row_sum_and_sink() {
        let mut c = build_intro_chain();
        c.transition[0] = vec![0.4, 0.5, 0.0, 0.0, 0.0];
        let report = validate(&c);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::RowSum { row: 0, .. }));

        let mut c = build_intro_chain();
        c.transition[2] = vec![0.0, 0.0, 0.5, 0.5, 0.0];
        let report = validate(&c);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SinkNotAbsorbing { sink: 2 })));
        assert_eq!(is_canonical(&c), None);
    }

    #[test]
    fn negative_entry_is_reported() {
        let mut c = build_intro_chain();
        c.transition[0] = vec![1.5, -0.5, 0.0, 0.0, 0.0];
        let report = validate(&c);
        assert_eq!(
            report
                .violations
                .iter()
                .filter(|v| matches!(v, Violation::EntryOutOfRange { .. }))
                .count(),
            2
        );
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut chains = vec![
            build_intro_chain(),
            build_example1_chain(7).unwrap(),
            build_gap_chain(6, 3).unwrap(),
            build_acyclicity_chain(4).unwrap(),
            build_acyclicity_chain_bidirectional(4).unwrap(),
            build_reduction_example_chain(),
        ];
        chains.push(random::random_chain(6, 3, &mut rng));
        for c in chains {
            let text = chain_to_json(&c);
            let back = chain_from_json(&text).unwrap();
            assert_eq!(back, c);
            assert_eq!(chain_to_json(&back), text);
        }
    }

    #[test]
    fn unknown_field_is_named() {
        let text = r#"{"name":"x","states":["a"],"transition":[[1.0]],"observation":[0],"sink":null,"colour":1}"#;
        let err = chain_from_json(text).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let text = r#"{"name":"x","states":["a","b","c"],"transition":[[1.0,0.0],[0.0,1.0]],"observation":[0,0,0],"sink":null}"#;
        assert!(matches!(chain_from_json(text), Err(ChainError::Shape(_))));
    }

    #[test]
    fn sampling_follows_support() {
        let c = build_intro_chain();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let next = c.sample_next(0, &mut rng);
            assert!(next == 0 || next == 1);
            assert_eq!(c.sample_next(4, &mut rng), 3);
        }
    }
}
