//! Hand-built strategies for the example chains.
//!
//! These are the concrete rewinding strategies the planner is compared
//! against: a one-step-then-siblings probe for the five-state intro chain, the
//! two strategies for the `1/d` chain (a nested tester whose cost grows like
//! `d² log² d`, and a path-based one that is linear in `d`), and a plain star
//! probe used to exercise the canonical reduction.

use rand::RngCore;

use crate::chain::{StateId, Symbol};
use crate::simulate::{AdaptiveStrategy, Decision, NonAdaptivePlan, TreeShape, Verdict, VisibleTree};

/// Step once from the root, then draw `siblings` children of that node.
/// Answers `same` when all of them show one observation and `mixed`
/// otherwise.
///
/// On the intro chain, `a` leads to children that agree (all `a`/`b`, or all
/// sink), while `a'` leads to `b'`, whose children are fair coin flips.
#[derive(Clone, Debug)]
pub struct OneStepSiblings {
    pub siblings: usize,
    pub same: StateId,
    pub mixed: StateId,
}

impl AdaptiveStrategy for OneStepSiblings {
    fn decide(&mut self, view: &VisibleTree<'_>, _rng: &mut dyn RngCore) -> Decision {
        if view.len() == 1 {
            return Decision::Extend(0);
        }
        if view.len() < 2 + self.siblings {
            return Decision::Extend(1);
        }
        let grand = &view.observations()[2..];
        let agree = grand.iter().all(|&o| o == grand[0]);
        Decision::Stop(Verdict::State(if agree { self.same } else { self.mixed }))
    }
}

/// Draw `children` children of the root; answer `hit` if any shows `symbol`.
#[derive(Clone, Debug)]
pub struct StarProbe {
    pub children: usize,
    pub symbol: Symbol,
    pub hit: StateId,
    pub miss: StateId,
}

impl AdaptiveStrategy for StarProbe {
    fn decide(&mut self, view: &VisibleTree<'_>, _rng: &mut dyn RngCore) -> Decision {
        if view.len() <= self.children {
            return Decision::Extend(0);
        }
        let hit = view.observations()[1..].contains(&self.symbol);
        Decision::Stop(Verdict::State(if hit { self.hit } else { self.miss }))
    }
}

/// Branching factor `ceil(d ln(1/ε))` of the nested tester, with `ε = 1/d³`.
pub fn nested_branching(d: u32) -> usize {
    let d = d as f64;
    (d * (d * d * d).ln()).ceil() as usize
}

/// The nested tester on the `1/d` chain.
///
/// The root gets `m` children and each child gets `m` children of its own.
/// A child with a sink among its children is taken to be `b` or `b'`; if
/// some child has none, it is taken to be `a'` (reachable only from `a'`),
/// and the verdict is `a_prime`. Otherwise the verdict is `a`.
pub fn nested_tester_plan(d: u32, a: StateId, a_prime: StateId) -> NonAdaptivePlan {
    let m = nested_branching(d);
    let mut parents = vec![0usize; m];
    for child in 1..=m {
        parents.extend(std::iter::repeat_n(child, m));
    }
    let shape = TreeShape::new(parents).expect("children follow their parent");
    NonAdaptivePlan::new(shape, move |obs: &[Symbol]| {
        let a_node_seen = (1..=m).any(|child| {
            let start = 1 + m + (child - 1) * m;
            obs[child] == Symbol::NON_SINK && !obs[start..start + m].contains(&Symbol::SINK)
        });
        Verdict::State(if a_node_seen { a_prime } else { a })
    })
}

/// Children per endpoint test in the path strategy: `ceil(d ln 20)`.
pub fn path_test_children(d: u32) -> usize {
    (d as f64 * 20f64.ln()).ceil() as usize
}

/// Repetitions used by default; see [`path_strategy_fire_probability`].
pub const DEFAULT_REPETITIONS: usize = 10;

/// The linear-cost strategy on the `1/d` chain.
///
/// Each repetition draws a path of length `2d` from the root and then
/// `ceil(d ln 20)` children of the path's last node. From `a`, a sink-free
/// path of even length ends back at `a`, whose children are never the sink.
/// From `a'`, the path ends at `b'` with constant probability, and then one of
/// its children is the sink. The verdict is `a_prime` iff some repetition
/// ends at a non-sink node with a sink child.
pub fn path_strategy_plan(d: u32, repetitions: usize, a: StateId, a_prime: StateId) -> NonAdaptivePlan {
    let len = 2 * d as usize;
    let t = path_test_children(d);
    let per_rep = len + t;
    let mut parents = Vec::with_capacity(repetitions * per_rep);
    for r in 0..repetitions {
        let base = 1 + r * per_rep; // index of the first path node
        parents.push(0);
        for j in 1..len {
            parents.push(base + j - 1);
        }
        parents.extend(std::iter::repeat_n(base + len - 1, t));
    }
    let shape = TreeShape::new(parents).expect("path nodes follow their parent");
    NonAdaptivePlan::new(shape, move |obs: &[Symbol]| {
        let fired = (0..repetitions).any(|r| {
            let end = 1 + r * per_rep + len - 1;
            obs[end] == Symbol::NON_SINK && obs[end + 1..end + 1 + t].contains(&Symbol::SINK)
        });
        Verdict::State(if fired { a_prime } else { a })
    })
}

/// Exact probability that one repetition of the path strategy fires when
/// started from `a'`.
pub fn path_strategy_fire_probability(d: u32) -> f64 {
    let inv = 1.0 / d as f64;
    // mass on a' and b' among sink-free prefixes
    let (mut on_a, mut on_b) = (1.0, 0.0);
    for _ in 0..2 * d {
        (on_a, on_b) = (on_a * inv + on_b * (1.0 - inv), on_a * (1.0 - inv));
    }
    on_b * (1.0 - (1.0 - inv).powi(path_test_children(d) as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_example1_chain, build_intro_chain};
    use crate::simulate::{run_adaptive, run_plan};

    #[test]
    fn intro_probe_never_errs_from_a() {
        let c = build_intro_chain();
        for seed in 0..300 {
            let mut s = OneStepSiblings { siblings: 7, same: 0, mixed: 4 };
            let (tree, v) = run_adaptive(&c, 0, &mut s, 100, seed).unwrap();
            assert_eq!(v, Verdict::State(0));
            assert_eq!(tree.queries(), 8);
        }
    }

    #[test]
    fn nested_tester_sizes() {
        let m = nested_branching(8);
        assert_eq!(m, (8.0 * 512f64.ln()).ceil() as usize);
        let plan = nested_tester_plan(8, 0, 2);
        assert_eq!(plan.shape.queries(), m + m * m);
    }

    #[test]
    fn nested_tester_distinguishes() {
        let c = build_example1_chain(8).unwrap();
        let plan = nested_tester_plan(8, 0, 2);
        let mut ok = 0;
        for seed in 0..200 {
            let hidden = if seed % 2 == 0 { 0 } else { 2 };
            if run_plan(&c, hidden, &plan, seed).unwrap().1 == Verdict::State(hidden) {
                ok += 1;
            }
        }
        assert!(ok >= 180, "{ok}");
    }

    #[test]
    fn path_strategy_shape_and_one_sided_error() {
        let d = 8;
        let c = build_example1_chain(d).unwrap();
        let plan = path_strategy_plan(d, 10, 0, 2);
        assert_eq!(plan.shape.queries(), 10 * (16 + path_test_children(d)));
        for seed in 0..200 {
            assert_eq!(run_plan(&c, 0, &plan, seed).unwrap().1, Verdict::State(0));
        }
    }

    #[test]
    fn fire_probability_matches_simulation() {
        let d = 8;
        let c = build_example1_chain(d).unwrap();
        let plan = path_strategy_plan(d, 1, 0, 2);
        let trials = 20_000;
        let fired = (0..trials)
            .filter(|&s| run_plan(&c, 2, &plan, s).unwrap().1 == Verdict::State(2))
            .count();
        let p = path_strategy_fire_probability(d);
        let rate = fired as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((rate - p).abs() <= 4.0 * se, "{rate} vs {p}");
    }

    #[test]
    fn star_probe_counts_children() {
        let c = build_intro_chain();
        let mut s = StarProbe {
            children: 5,
            symbol: Symbol::SINK,
            hit: 1,
            miss: 0,
        };
        let (tree, v) = run_adaptive(&c, 1, &mut s, 100, 3).unwrap();
        assert_eq!(tree.queries(), 5);
        assert_eq!(v, Verdict::State(1));
    }
}
