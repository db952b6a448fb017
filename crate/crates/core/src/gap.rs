//! The gap chain: cheap to handle adaptively, expensive without adaptivity.
//!
//! The chain walks `q₁ → q₂ → … → q_{n−2} → s`, and from every path state
//! jumps with probability 1/2 to a dummy `D` that goes straight to the sink.
//! An adaptive strategy can spot a `D` child with a few grandchildren (all of
//! them are the sink) and redraw it, which turns the walk into a clean
//! geometric race whose length reveals the starting index. A non-adaptive
//! tree cannot do that, and two coupled walks from `q₁` and `q₂` only look
//! different once one of them reaches the sink through the path.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{build_gap_chain, ChainError, PoMarkovChain, StateId, Symbol};
use crate::simulate::{stream_rng, trial_seed, QuerySession, SimulateError, Verdict, CHAIN_STREAM};

/// Children drawn by one D-test.
pub const DEFAULT_T_CHILDREN: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum GapError {
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error("invalid gap chain: {0}")]
    Chain(String),
    #[error("node {0} is the sink and cannot be tested")]
    SinkNode(usize),
    #[error("path exceeded {0} accepted nodes")]
    Aborted(u64),
    #[error("hidden start must be q1 or q2")]
    HiddenStart,
}

impl From<ChainError> for GapError {
    fn from(e: ChainError) -> Self {
        GapError::Chain(e.to_string())
    }
}

/// A gap chain together with its parameters.
#[derive(Clone, Debug)]
pub struct GapChain {
    pub chain: PoMarkovChain,
    pub n: usize,
    pub d: u32,
}

impl GapChain {
    pub fn new(n: usize, d: u32) -> Result<Self, GapError> {
        Ok(GapChain {
            chain: build_gap_chain(n, d)?,
            n,
            d,
        })
    }

    /// `q_i`, 1-based.
    pub fn q(&self, i: usize) -> StateId {
        i - 1
    }

    pub fn dummy(&self) -> StateId {
        self.n - 2
    }

    pub fn sink(&self) -> StateId {
        self.n - 1
    }

    /// Cap on accepted nodes per filtered path: `20 n d`.
    pub fn max_len(&self) -> u64 {
        20 * self.n as u64 * self.d as u64
    }
}

/// Draws `t_children` children of `node`; true iff every one is the sink.
pub fn d_test(session: &mut QuerySession<'_>, node: usize, t_children: usize) -> Result<bool, GapError> {
    if session.observation(node) == Symbol::SINK {
        return Err(GapError::SinkNode(node));
    }
    let mut all_sink = true;
    for _ in 0..t_children {
        let c = session.draw_child(node)?;
        all_sink &= session.observation(c) == Symbol::SINK;
    }
    Ok(all_sink)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FilteredPath {
    /// Accepted draws, the final step into the sink included.
    pub accepted: u64,
    /// Children discarded because their D-test fired.
    pub discarded: u64,
}

/// Walks from `root` to the sink, redrawing every child whose D-test fires.
pub fn filtered_path(
    session: &mut QuerySession<'_>,
    root: usize,
    t_children: usize,
    max_len: u64,
) -> Result<FilteredPath, GapError> {
    let mut cur = root;
    let mut out = FilteredPath { accepted: 0, discarded: 0 };
    loop {
        let child = session.draw_child(cur)?;
        if session.observation(child) == Symbol::SINK {
            out.accepted += 1;
            return Ok(out);
        }
        if d_test(session, child, t_children)? {
            out.discarded += 1;
            continue;
        }
        out.accepted += 1;
        if out.accepted > max_len {
            return Err(GapError::Aborted(max_len));
        }
        cur = child;
    }
}

/// Moments of the filtered path length from `q_start`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathMoments {
    pub mean: f64,
    pub variance: f64,
    /// The half-length convention `(n − 1 − start) d / 2`, reported alongside.
    pub half_convention_mean: f64,
}

/// Closed form: `n − 1 − start` independent geometric stages of rate `1/d`.
pub fn expected_path_length(n: usize, d: u32, start: usize) -> PathMoments {
    let stages = (n - 1 - start) as f64;
    let d = d as f64;
    PathMoments {
        mean: stages * d,
        variance: stages * (1.0 - 1.0 / d) * d * d,
        half_convention_mean: stages * d / 2.0,
    }
}

/// The same moments from the fundamental matrix of the filtered walk,
/// `N = (I − Q)⁻¹`: mean `N·1`, variance `(2N − I)·t − t∘t`.
pub fn expected_path_length_solved(n: usize, d: u32, start: usize) -> PathMoments {
    let m = n - 2; // transient states q1..q_{n-2}
    let adv = 1.0 / d as f64;
    let mut q = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        q[(i, i)] = 1.0 - adv;
        if i + 1 < m {
            q[(i, i + 1)] = adv;
        }
    }
    let eye = DMatrix::<f64>::identity(m, m);
    let fundamental = (&eye - &q).try_inverse().expect("I - Q is invertible for d >= 1");
    let ones = DVector::<f64>::from_element(m, 1.0);
    let t = &fundamental * &ones;
    let second = (&fundamental * 2.0 - &eye) * &t;
    let i = start - 1;
    PathMoments {
        mean: t[i],
        variance: second[i] - t[i] * t[i],
        half_convention_mean: t[i] / 2.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRunStats {
    pub path_lengths: Vec<u64>,
    pub discarded: u64,
    pub total_queries: u64,
    pub mean_length: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Runs `k_paths` filtered paths from the hidden start and answers `q₁` iff
/// the mean length reaches the midpoint of the two expected lengths.
pub fn adaptive_gap_identify(
    gap: &GapChain,
    hidden: StateId,
    k_paths: usize,
    t_children: usize,
    seed: u64,
) -> Result<GapRunStats, GapError> {
    if hidden != gap.q(1) && hidden != gap.q(2) {
        return Err(GapError::HiddenStart);
    }
    let e1 = expected_path_length(gap.n, gap.d, 1).mean;
    let e2 = expected_path_length(gap.n, gap.d, 2).mean;
    let threshold = (e1 + e2) / 2.0;
    let mut session = QuerySession::new(&gap.chain, hidden, stream_rng(seed, CHAIN_STREAM));
    let mut stats = GapRunStats {
        path_lengths: Vec::with_capacity(k_paths),
        discarded: 0,
        total_queries: 0,
        mean_length: 0.0,
        threshold,
        verdict: Verdict::Abstain,
    };
    let mut aborted = false;
    for _ in 0..k_paths {
        match filtered_path(&mut session, 0, t_children, gap.max_len()) {
            Ok(p) => {
                stats.path_lengths.push(p.accepted);
                stats.discarded += p.discarded;
            }
            Err(GapError::Aborted(_)) => {
                aborted = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    stats.total_queries = session.queries() as u64;
    if k_paths > 0 && !aborted {
        stats.mean_length = stats.path_lengths.iter().sum::<u64>() as f64 / k_paths as f64;
        stats.verdict = Verdict::State(if stats.mean_length >= threshold { gap.q(1) } else { gap.q(2) });
    }
    Ok(stats)
}

// ── Decoupling ──────────────────────────────────────────────────────────────

fn ln_binomial(k: u64, r: u64) -> Option<f64> {
    if r > k {
        return None;
    }
    let r = r.min(k - r);
    Some((0..r).map(|i| ((k - i) as f64).ln() - ((i + 1) as f64).ln()).sum())
}

/// `(1/2)^k · min(C(k, n−2) (1/d)^{n−2}, 1)`, computed in log space.
pub fn decoupling_bound(n: usize, d: u32, k: u64) -> f64 {
    let m = (n - 2) as u64;
    match ln_binomial(k, m) {
        None => 0.0,
        Some(lc) => {
            let inner = (lc - m as f64 * (d as f64).ln()).min(0.0);
            (inner - k as f64 * std::f64::consts::LN_2).exp()
        }
    }
}

/// `min(1, C(k, n−3) (1/(2d))^{n−3})`: a union bound over the steps at which
/// the walk from `q₂` could make its `n − 3` advances.
pub fn decoupling_union_bound(n: usize, d: u32, k: u64) -> f64 {
    let m = (n - 3) as u64;
    match ln_binomial(k, m) {
        None => 0.0,
        Some(lc) => (lc - m as f64 * (2.0 * d as f64).ln()).min(0.0).exp(),
    }
}

/// Exact probability that the walk from `q₂` reaches the sink through the
/// path within `k` steps (a jump to `D` couples the two walks for good).
pub fn decoupling_probability_exact(n: usize, d: u32, k: u64) -> f64 {
    let need = n - 3; // advances from q2 to s
    let stay = (1.0 - 1.0 / d as f64) / 2.0;
    let adv = 1.0 / (2.0 * d as f64);
    // dist[j] = P(j advances so far, not in D, not yet absorbed)
    let mut dist = vec![0.0; need];
    dist[0] = 1.0;
    let mut absorbed = 0.0;
    for _ in 0..k {
        let mut next = vec![0.0; need];
        for j in 0..need {
            next[j] += dist[j] * stay;
            if j + 1 == need {
                absorbed += dist[j] * adv;
            } else {
                next[j + 1] += dist[j] * adv;
            }
        }
        dist = next;
    }
    absorbed
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub std_err: f64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let estimate = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        let std_err = if trials == 0 {
            0.0
        } else {
            (estimate * (1.0 - estimate) / trials as f64).sqrt()
        };
        McEstimate {
            trials,
            hits,
            estimate,
            std_err,
        }
    }
}

/// One run of the lockstep coupling: both walks share every stay, advance
/// and jump choice for `k` steps. Returns true iff they decouple.
fn coupled_walk<R: Rng>(n: usize, d: u32, k: u64, rng: &mut R) -> bool {
    let sink = n - 1; // position index: q_i sits at i, the sink at n − 1
    let mut q2_walk = 2;
    let adv = 1.0 / (2.0 * d as f64);
    for _ in 0..k {
        let u: f64 = rng.random();
        if u < 0.5 {
            return false;
        }
        if u < 0.5 + adv {
            q2_walk += 1;
            if q2_walk == sink {
                return true;
            }
        }
    }
    false
}

/// Monte Carlo frequency of decoupling over `trials` coupled runs.
pub fn decoupling_probability_mc(n: usize, d: u32, k: u64, trials: u64, seed: u64) -> McEstimate {
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, i));
            coupled_walk(n, d, k, &mut rng)
        })
        .count() as u64;
    McEstimate::from_counts(hits, trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dummy_always_tests_positive() {
        let g = GapChain::new(5, 4).unwrap();
        for seed in 0..200 {
            let mut s = QuerySession::new(&g.chain, g.dummy(), stream_rng(seed, 0));
            assert!(d_test(&mut s, 0, 3).unwrap());
        }
    }

    #[test]
    fn early_path_states_never_test_positive() {
        let g = GapChain::new(6, 2).unwrap();
        for seed in 0..200 {
            for i in 1..=3 {
                let mut s = QuerySession::new(&g.chain, g.q(i), stream_rng(seed, 0));
                assert!(!d_test(&mut s, 0, 3).unwrap());
            }
        }
    }

    #[test]
    fn sink_cannot_be_tested() {
        let g = GapChain::new(5, 4).unwrap();
        let mut s = QuerySession::new(&g.chain, g.sink(), stream_rng(0, 0));
        assert_eq!(d_test(&mut s, 0, 3), Err(GapError::SinkNode(0)));
    }

    #[test]
    fn last_path_state_false_positive_rate() {
        let g = GapChain::new(5, 2).unwrap();
        let trials = 40_000;
        let mut s = QuerySession::new(&g.chain, g.q(3), stream_rng(8, 0));
        let hits = (0..trials).filter(|_| d_test(&mut s, 0, 3).unwrap()).count();
        let p = (1.0f64 / 4.0).powi(3);
        let rate = hits as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((rate - p).abs() <= 4.0 * se, "{rate} vs {p}");
    }

    #[test]
    fn closed_form_agrees_with_absorbing_solve() {
        for (n, d) in [(4, 2), (5, 4), (6, 8), (9, 3)] {
            for start in 1..=n - 2 {
                let a = expected_path_length(n, d, start);
                let b = expected_path_length_solved(n, d, start);
                assert!((a.mean - b.mean).abs() < 1e-9 * a.mean, "{n} {d} {start}");
                assert!((a.variance - b.variance).abs() < 1e-8 * a.variance.max(1.0));
            }
        }
        assert_eq!(expected_path_length(6, 8, 1).mean, 32.0);
        assert_eq!(expected_path_length(4, 2, 1).mean, 4.0);
        assert_eq!(expected_path_length(7, 5, 5).mean, 5.0);
        for (n, d) in [(5, 2), (8, 7)] {
            let gap = expected_path_length(n, d, 1).mean - expected_path_length(n, d, 2).mean;
            assert_eq!(gap, d as f64);
        }
    }

    #[test]
    fn filtered_path_mean_matches_oracle() {
        let g = GapChain::new(5, 3).unwrap();
        let runs = 5_000;
        let mut s = QuerySession::new(&g.chain, g.q(1), stream_rng(4, 0));
        let lengths: Vec<f64> = (0..runs)
            .map(|_| filtered_path(&mut s, 0, 3, g.max_len()).unwrap().accepted as f64)
            .collect();
        let mean = lengths.iter().sum::<f64>() / runs as f64;
        let m = expected_path_length(5, 3, 1);
        let se = (m.variance / runs as f64).sqrt();
        assert!((mean - m.mean).abs() <= 3.0 * se, "{mean} vs {}", m.mean);
    }

    #[test]
    fn zero_paths_abstain() {
        let g = GapChain::new(6, 8).unwrap();
        let stats = adaptive_gap_identify(&g, g.q(1), 0, 3, 1).unwrap();
        assert_eq!(stats.verdict, Verdict::Abstain);
        assert_eq!(stats.total_queries, 0);
        assert_eq!(adaptive_gap_identify(&g, g.dummy(), 5, 3, 1).unwrap_err(), GapError::HiddenStart);
    }

    #[test]
    fn identification_is_reproducible_and_counts_queries() {
        let g = GapChain::new(5, 4).unwrap();
        let a = adaptive_gap_identify(&g, g.q(2), 50, 3, 77).unwrap();
        let b = adaptive_gap_identify(&g, g.q(2), 50, 3, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.path_lengths.len(), 50);
        assert!(a.total_queries >= a.path_lengths.iter().sum::<u64>());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(decoupling_bound(8, 2, 5), 0.0);
        let k = 3u64;
        assert!((decoupling_bound(5, 4, k) - 0.5f64.powi(3) * 0.25f64.powi(3)).abs() < 1e-15);
        assert!((decoupling_bound(5, 4, 6) - 20.0 / 4096.0).abs() < 1e-15);
    }

    #[test]
    fn exact_decoupling_small_case() {
        // n = 5, d = 2: two advances of probability 1/4, stays of probability 1/4
        let expected = 1.0 / 16.0 + 2.0 / 64.0 + 3.0 / 256.0;
        assert!((decoupling_probability_exact(5, 2, 4) - expected).abs() < 1e-15);
        assert_eq!(decoupling_probability_exact(5, 2, 1), 0.0);
    }

    #[test]
    fn mc_matches_exact_and_union_bound_holds() {
        for (d, k) in [(2u32, 4u64), (4, 8), (2, 16)] {
            let exact = decoupling_probability_exact(5, d, k);
            let mc = decoupling_probability_mc(5, d, k, 40_000, 9);
            assert!((mc.estimate - exact).abs() <= 4.0 * mc.std_err.max(1e-4), "{d} {k}");
            assert!(exact <= decoupling_union_bound(5, d, k) + 1e-12);
        }
    }

    #[test]
    fn short_horizon_never_decouples() {
        let mc = decoupling_probability_mc(7, 2, 3, 10_000, 1);
        assert_eq!(mc.hits, 0);
    }
}
