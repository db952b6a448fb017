//! Partitions of the state space and the tests they support.
//!
//! Collapsing next-state distributions onto the classes of a partition gives a
//! projected total-variation distance. Two states that are far apart under that
//! distance can be told apart by drawing children and asking which class each
//! child falls in, which is exactly what [`PairTest`] does.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::chain::{is_canonical, PoMarkovChain, StateId};

pub type ClassId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("partitions cover {left} and {right} states")]
    SizeMismatch { left: usize, right: usize },
    #[error("the source partition needs a canonical chain")]
    NotCanonical,
    #[error("states {0} and {1} have identical projected next-step laws")]
    ZeroDistance(StateId, StateId),
    #[error("states {0} and {1} are already in different classes")]
    AlreadySeparated(StateId, StateId),
    #[error("invalid partition literal: {0}")]
    Parse(String),
}

/// A partition stored as a class index per state.
///
/// Class ids are canonical: classes are numbered in order of their smallest
/// member, so two partitions are equal iff their `class_of` arrays are.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Partition {
    class_of: Vec<ClassId>,
}

impl Partition {
    /// Relabels arbitrary class tags into canonical form.
    pub fn from_labels<T: Eq + Clone>(tags: &[T]) -> Self {
        let mut seen: Vec<T> = Vec::new();
        let class_of = tags
            .iter()
            .map(|t| match seen.iter().position(|s| s == t) {
                Some(i) => i,
                None => {
                    seen.push(t.clone());
                    seen.len() - 1
                }
            })
            .collect();
        Partition { class_of }
    }

    pub fn discrete(n: usize) -> Self {
        Partition {
            class_of: (0..n).collect(),
        }
    }

    pub fn single_class(n: usize) -> Self {
        Partition { class_of: vec![0; n] }
    }

    pub fn n(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_of(&self) -> &[ClassId] {
        &self.class_of
    }

    pub fn class(&self, state: StateId) -> ClassId {
        self.class_of[state]
    }

    pub fn num_classes(&self) -> usize {
        self.class_of.iter().max().map_or(0, |m| m + 1)
    }

    pub fn classes(&self) -> Vec<Vec<StateId>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (s, &c) in self.class_of.iter().enumerate() {
            out[c].push(s);
        }
        out
    }

    pub fn same_class(&self, a: StateId, b: StateId) -> bool {
        self.class_of[a] == self.class_of[b]
    }

    pub fn separates(&self, a: StateId, b: StateId) -> bool {
        !self.same_class(a, b)
    }

    pub fn is_discrete(&self) -> bool {
        self.num_classes() == self.n()
    }

    /// Common refinement of `self` and `other`.
    pub fn meet(&self, other: &Partition) -> Result<Partition, PartitionError> {
        same_size(self, other)?;
        let tags: Vec<(ClassId, ClassId)> = self
            .class_of
            .iter()
            .zip(&other.class_of)
            .map(|(&x, &y)| (x, y))
            .collect();
        Ok(Partition::from_labels(&tags))
    }

    /// Parses a literal such as `"[a b a' b'][s]"` against the chain's labels.
    pub fn parse(chain: &PoMarkovChain, text: &str) -> Result<Partition, PartitionError> {
        let mut tag: Vec<Option<usize>> = vec![None; chain.n()];
        let mut rest = text.trim();
        let mut group = 0;
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('[')
                .ok_or_else(|| PartitionError::Parse(format!("expected `[` at `{rest}`")))?;
            let end = body
                .find(']')
                .ok_or_else(|| PartitionError::Parse("unclosed `[`".into()))?;
            for label in body[..end].split_whitespace() {
                let s = chain
                    .state(label)
                    .map_err(|_| PartitionError::Parse(format!("unknown state `{label}`")))?;
                if tag[s].replace(group).is_some() {
                    return Err(PartitionError::Parse(format!("state `{label}` listed twice")));
                }
            }
            group += 1;
            rest = body[end + 1..].trim_start();
        }
        if let Some(s) = tag.iter().position(Option::is_none) {
            return Err(PartitionError::Parse(format!(
                "state `{}` is not in any class",
                chain.label(s)
            )));
        }
        Ok(Partition::from_labels(&tag))
    }

    /// Renders the partition in the literal syntax accepted by [`Partition::parse`].
    pub fn display<'a>(&'a self, chain: &'a PoMarkovChain) -> PartitionDisplay<'a> {
        PartitionDisplay { partition: self, chain }
    }
}

pub struct PartitionDisplay<'a> {
    partition: &'a Partition,
    chain: &'a PoMarkovChain,
}

impl fmt::Display for PartitionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for class in self.partition.classes() {
            let labels: Vec<&str> = class.iter().map(|&s| self.chain.label(s)).collect();
            write!(f, "[{}]", labels.join(" "))?;
        }
        Ok(())
    }
}

fn same_size(a: &Partition, b: &Partition) -> Result<(), PartitionError> {
    if a.n() == b.n() {
        Ok(())
    } else {
        Err(PartitionError::SizeMismatch { left: a.n(), right: b.n() })
    }
}

/// `{s}` versus everything else.
pub fn source_partition(chain: &PoMarkovChain) -> Result<Partition, PartitionError> {
    let sink = is_canonical(chain).ok_or(PartitionError::NotCanonical)?;
    let tags: Vec<bool> = (0..chain.n()).map(|s| s == sink).collect();
    Ok(Partition::from_labels(&tags))
}

/// True iff every class of `p2` sits inside a class of `p1`.
pub fn refines(p2: &Partition, p1: &Partition) -> Result<bool, PartitionError> {
    same_size(p2, p1)?;
    let mut image: Vec<Option<ClassId>> = vec![None; p2.num_classes()];
    for (s, &c2) in p2.class_of.iter().enumerate() {
        let c1 = p1.class_of[s];
        match image[c2] {
            None => image[c2] = Some(c1),
            Some(prev) if prev != c1 => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

/// `p(x, C)` for every class `C` of `p`.
pub fn class_masses(chain: &PoMarkovChain, x: StateId, p: &Partition) -> Vec<f64> {
    let mut out = vec![0.0; p.num_classes()];
    for (y, &prob) in chain.row(x).iter().enumerate() {
        out[p.class(y)] += prob;
    }
    out
}

/// `½ Σ_C |p(a, C) − p(b, C)|`.
pub fn dtv_partition(chain: &PoMarkovChain, a: StateId, b: StateId, p: &Partition) -> f64 {
    if a == b {
        return 0.0;
    }
    let ma = class_masses(chain, a, p);
    let mb = class_masses(chain, b, p);
    let sum: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).sum();
    (sum / 2.0).min(1.0)
}

/// Largest projected distance between two states sharing a class; 0 when
/// every class is a singleton.
pub fn theta(chain: &PoMarkovChain, p: &Partition) -> f64 {
    let masses: Vec<Vec<f64>> = (0..chain.n()).map(|x| class_masses(chain, x, p)).collect();
    let mut best: f64 = 0.0;
    for x in 0..chain.n() {
        for y in x + 1..chain.n() {
            if p.same_class(x, y) {
                let d: f64 = masses[x].iter().zip(&masses[y]).map(|(u, v)| (u - v).abs()).sum();
                best = best.max((d / 2.0).min(1.0));
            }
        }
    }
    best
}

/// Classes where `b` puts strictly more mass than `a`.
pub fn best_separating_collection(chain: &PoMarkovChain, a: StateId, b: StateId, p: &Partition) -> Vec<ClassId> {
    let ma = class_masses(chain, a, p);
    let mb = class_masses(chain, b, p);
    (0..p.num_classes()).filter(|&c| mb[c] > ma[c]).collect()
}

/// `ceil(2 ln(1/ε) / δ²)`.
pub fn pair_test_samples(epsilon: f64, delta: f64) -> u64 {
    (2.0 * (1.0 / epsilon).ln() / (delta * delta)).ceil().max(1.0) as u64
}

/// The sampled test that tells `a` from `b` through the classes of a node's
/// children.
///
/// Let `A` be the classes where `b` outweighs `a` and `δ` the projected
/// distance. With `X` the fraction of children landing in `A`, the verdict is
/// `a` iff `X < p(a, A) + δ/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTest {
    pub a: StateId,
    pub b: StateId,
    pub delta: f64,
    in_collection: Vec<bool>,
    threshold: f64,
}

impl PairTest {
    pub fn new(chain: &PoMarkovChain, p: &Partition, a: StateId, b: StateId) -> Result<Self, PartitionError> {
        let delta = dtv_partition(chain, a, b, p);
        if delta <= 0.0 {
            return Err(PartitionError::ZeroDistance(a, b));
        }
        let ma = class_masses(chain, a, p);
        let mut in_collection = vec![false; p.num_classes()];
        let mut pa = 0.0;
        for c in best_separating_collection(chain, a, b, p) {
            in_collection[c] = true;
            pa += ma[c];
        }
        Ok(PairTest {
            a,
            b,
            delta,
            in_collection,
            threshold: pa + delta / 2.0,
        })
    }

    pub fn samples(&self, epsilon: f64) -> u64 {
        pair_test_samples(epsilon, self.delta)
    }

    /// Whether a child of class `class` counts toward `X`. Unknown classes do not.
    pub fn hits(&self, class: Option<ClassId>) -> bool {
        class.is_some_and(|c| self.in_collection[c])
    }

    /// `p(a, A) + δ/2`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Verdict from `hits` children in `A` out of `draws`.
    pub fn decide(&self, hits: u64, draws: u64) -> StateId {
        let x = if draws == 0 { 0.0 } else { hits as f64 / draws as f64 };
        if x < self.threshold {
            self.a
        } else {
            self.b
        }
    }
}

/// Runs a [`PairTest`] on an unknown node whose children are produced by
/// `sampler` (each call returns the class of a fresh child).
pub fn pair_test(
    chain: &PoMarkovChain,
    p: &Partition,
    a: StateId,
    b: StateId,
    mut sampler: impl FnMut() -> Option<ClassId>,
    epsilon: f64,
) -> Result<StateId, PartitionError> {
    let test = PairTest::new(chain, p, a, b)?;
    let m = test.samples(epsilon);
    let hits = (0..m).filter(|_| test.hits(sampler())).count() as u64;
    Ok(test.decide(hits, m))
}

/// Splits `a` from `b` by cutting `p` along the components of the graph that
/// links states closer than `D/(n−1)`, where `D` is the pair's distance.
///
/// Every pair newly separated this way is at distance at least `D/(n−1)`.
pub fn refine_by_components(
    chain: &PoMarkovChain,
    p: &Partition,
    a: StateId,
    b: StateId,
) -> Result<Partition, PartitionError> {
    if p.separates(a, b) {
        return Err(PartitionError::AlreadySeparated(a, b));
    }
    let big_d = dtv_partition(chain, a, b, p);
    if big_d <= 0.0 {
        return Err(PartitionError::ZeroDistance(a, b));
    }
    let n = chain.n();
    let cut = big_d / (n - 1) as f64;
    let masses: Vec<Vec<f64>> = (0..n).map(|x| class_masses(chain, x, p)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for x in 0..n {
        for y in x + 1..n {
            let d: f64 = masses[x].iter().zip(&masses[y]).map(|(u, v)| (u - v).abs()).sum::<f64>() / 2.0;
            if d < cut {
                let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                parent[rx] = ry;
            }
        }
    }
    let components: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
    p.meet(&Partition::from_labels(&components))
}

/// Every partition refining `p`, each class split independently.
///
/// Classes of size `m` contribute a Bell(m) factor; callers cap the size.
pub fn all_refinements(p: &Partition) -> Vec<Partition> {
    let classes = p.classes();
    let per_class: Vec<Vec<Vec<usize>>> = classes.iter().map(|c| set_partitions(c.len())).collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; classes.len()];
    loop {
        let mut tags = vec![(0usize, 0usize); p.n()];
        for (ci, class) in classes.iter().enumerate() {
            let rgs = &per_class[ci][choice[ci]];
            for (pos, &s) in class.iter().enumerate() {
                tags[s] = (ci, rgs[pos]);
            }
        }
        out.push(Partition::from_labels(&tags));
        let mut i = 0;
        loop {
            if i == classes.len() {
                out.sort();
                return out;
            }
            choice[i] += 1;
            if choice[i] < per_class[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Restricted growth strings of length `m` (one per set partition of `m` items).
fn set_partitions(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; m];
    fn rec(i: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == rgs.len() {
            out.push(rgs.clone());
            return;
        }
        for v in 0..=max + 1 {
            rgs[i] = v;
            rec(i + 1, max.max(v), rgs, out);
        }
    }
    // the first element always opens class 0
    rec(1, 0, &mut rgs, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_example1_chain, build_gap_chain, build_intro_chain};
    use crate::simulate::stream_rng;
    use rand::Rng;

    #[test]
    fn source_partition_of_example1() {
        let c = build_example1_chain(8).unwrap();
        let p = source_partition(&c).unwrap();
        assert_eq!(p.class_of(), &[0, 0, 0, 0, 1]);
        assert_eq!(p.display(&c).to_string(), "[a b a' b'][s]");
    }

    #[test]
    fn source_partition_needs_canonical_chain() {
        let c = crate::chain::build_acyclicity_chain(3).unwrap();
        assert_eq!(source_partition(&c), Err(PartitionError::NotCanonical));
    }

    #[test]
    fn literal_round_trip() {
        let c = build_intro_chain();
        let p = Partition::parse(&c, "[a a'] [b b'][s]").unwrap();
        assert_eq!(p.display(&c).to_string(), "[a a'][b b'][s]");
        assert!(Partition::parse(&c, "[a b][s]").is_err());
        assert!(Partition::parse(&c, "[a b b' a' s][a]").is_err());
        assert!(Partition::parse(&c, "[a b b' a' z]").is_err());
    }

    #[test]
    fn refinement_relation() {
        let c = build_example1_chain(4).unwrap();
        let ab = Partition::parse(&c, "[a b][a' b'][s]").unwrap();
        let aa = Partition::parse(&c, "[a a'][b b'][s]").unwrap();
        assert!(!refines(&ab, &aa).unwrap());
        assert!(refines(&Partition::discrete(5), &aa).unwrap());
        assert!(refines(&aa, &aa).unwrap());
        assert!(refines(&aa, &Partition::single_class(5)).unwrap());
        assert!(refines(&aa, &Partition::discrete(4)).is_err());
    }

    #[test]
    fn example1_source_distance_is_one_over_d() {
        for d in [2u32, 5, 8] {
            let c = build_example1_chain(d).unwrap();
            let p = source_partition(&c).unwrap();
            assert!((dtv_partition(&c, 0, 1, &p) - 1.0 / d as f64).abs() < 1e-15);
            assert_eq!(best_separating_collection(&c, 0, 1, &p), vec![p.class(4)]);
        }
    }

    #[test]
    fn gap_source_distance_between_last_path_state_and_dummy() {
        let c = build_gap_chain(6, 4).unwrap();
        let p = source_partition(&c).unwrap();
        let (q, dummy) = (c.state("q4").unwrap(), c.state("D").unwrap());
        assert!((dtv_partition(&c, q, dummy, &p) - (1.0 - 1.0 / 8.0)).abs() < 1e-15);
        assert_eq!(best_separating_collection(&c, q, dummy, &p), vec![p.class(c.state("s").unwrap())]);
    }

    #[test]
    fn theta_edge_cases() {
        let c = build_example1_chain(8).unwrap();
        assert_eq!(theta(&c, &Partition::discrete(5)), 0.0);
        let p0 = source_partition(&c).unwrap();
        let mut brute: f64 = 0.0;
        for x in 0..4 {
            for y in x + 1..4 {
                brute = brute.max(dtv_partition(&c, x, y, &p0));
            }
        }
        assert_eq!(theta(&c, &p0), brute);
        assert!((brute - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn sample_count_formula() {
        let m = pair_test_samples(0.05, 1.0);
        assert_eq!(m, (2.0 * 20f64.ln()).ceil() as u64);
        assert_eq!(pair_test_samples(0.05, 0.125), (2.0 * 20f64.ln() * 64.0).ceil() as u64);
    }

    #[test]
    fn threshold_boundary_is_strict() {
        let c = build_example1_chain(2).unwrap();
        let p = source_partition(&c).unwrap();
        let t = PairTest::new(&c, &p, 0, 1).unwrap();
        // p(a, {s}) = 0, δ = 1/2, threshold = 1/4
        assert_eq!(t.threshold(), 0.25);
        assert_eq!(t.decide(1, 4), 1);
        assert_eq!(t.decide(0, 4), 0);
        assert_eq!(t.decide(0, 0), 0);
    }

    #[test]
    fn zero_distance_is_not_testable() {
        let c = build_intro_chain();
        let p = source_partition(&c).unwrap();
        // a and a' both step to a non-sink state surely
        assert_eq!(
            PairTest::new(&c, &p, 0, 4).unwrap_err(),
            PartitionError::ZeroDistance(0, 4)
        );
    }

    #[test]
    fn pair_test_error_rate_on_example1() {
        let c = build_example1_chain(8).unwrap();
        let p = source_partition(&c).unwrap();
        let eps = 0.05;
        let trials = 2000;
        let mut rng = stream_rng(11, 0);
        for truth in [0usize, 1] {
            let mut wrong = 0;
            for _ in 0..trials {
                let v = pair_test(&c, &p, 0, 1, || Some(p.class(c.sample_next(truth, &mut rng))), eps).unwrap();
                if v != truth {
                    wrong += 1;
                }
            }
            let rate = wrong as f64 / trials as f64;
            let se = (eps * (1.0 - eps) / trials as f64).sqrt();
            assert!(rate <= eps + 3.0 * se, "truth {truth}: {rate}");
        }
    }

    #[test]
    fn components_separate_a_from_b_prime() {
        let c = build_example1_chain(8).unwrap();
        let p0 = source_partition(&c).unwrap();
        let d = dtv_partition(&c, 0, 3, &p0);
        assert!(d > 0.0);
        let p1 = refine_by_components(&c, &p0, 0, 3).unwrap();
        assert!(refines(&p1, &p0).unwrap());
        assert!(p1.separates(0, 3));
        assert_eq!(refine_by_components(&c, &p0, 0, 2), Err(PartitionError::ZeroDistance(0, 2)));
    }

    #[test]
    fn refinement_counts_follow_bell_numbers() {
        assert_eq!(set_partitions(4).len(), 15);
        assert_eq!(set_partitions(5).len(), 52);
        let p = Partition::from_labels(&[0, 0, 0, 0, 1]);
        assert_eq!(all_refinements(&p).len(), 15);
        let p = Partition::from_labels(&[0, 1, 0, 1, 2]);
        assert_eq!(all_refinements(&p).len(), 4);
        for q in all_refinements(&p) {
            assert!(refines(&q, &p).unwrap());
        }
    }

    #[test]
    fn canonical_form_is_label_independent() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..100 {
            let tags: Vec<u8> = (0..7).map(|_| rng.random_range(0..4)).collect();
            let shifted: Vec<u8> = tags.iter().map(|t| (t + 3) % 4).collect();
            assert_eq!(Partition::from_labels(&tags), Partition::from_labels(&shifted));
        }
    }
}
