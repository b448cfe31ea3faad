//! Exhaustive search for perfect triangle factors (3-dimensional matching).
//!
//! Classes are held as `u64` masks, so the oracle handles classes of at most
//! [`MAX_CLASS`] vertices. Decision mode branches on the uncovered class-0
//! vertex with the fewest completions, prunes states in which some uncovered
//! vertex has none, only tries the lowest uncovered member of each twin class
//! (vertices with equal neighbourhoods) and remembers failed states. Count
//! mode drops the twin reduction and memoizes counts per state.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::graph::{Triangle, TripartiteGraph, VertexRef, CLASSES};

pub const MAX_CLASS: usize = 64;

/// Failed states kept in decision mode before the memo stops growing.
const MEMO_CAP: usize = 4_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub max_depth: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactVerdict {
    Cover(Vec<Triangle>),
    NoFactor,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactResult {
    pub verdict: ExactVerdict,
    /// Number of perfect factors, in count mode when the search finished.
    pub count: Option<u128>,
    pub stats: SearchStats,
}

#[derive(Debug, thiserror::Error, Clone, Copy, PartialEq, Eq)]
#[error("exact search exceeded its node budget")]
pub struct BudgetExceeded;

type State = [u64; CLASSES];

struct Search {
    n: usize,
    /// `adj[a][b][i]`: neighbours in class `b` of vertex `i` of class `a`.
    adj: [[Vec<u64>; CLASSES]; CLASSES],
    /// `twins[c][i]`: vertices of class `c` with the same neighbourhood as `i`.
    twins: [Vec<u64>; CLASSES],
    budget: u64,
    stats: SearchStats,
    failed: HashSet<State>,
    counts: HashMap<State, u128>,
    exceeded: bool,
}

fn mask_of(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

impl Search {
    fn new(g: &TripartiteGraph, budget: u64) -> Self {
        let n = g.n();
        assert!(n <= MAX_CLASS, "exact search supports classes of at most {MAX_CLASS} vertices");
        let adj: [[Vec<u64>; CLASSES]; CLASSES] = std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                (0..n)
                    .map(|i| {
                        if a == b {
                            0
                        } else {
                            g.neighbors(VertexRef::new(a, i), b).ones().fold(0u64, |m, j| m | 1 << j)
                        }
                    })
                    .collect()
            })
        });
        let twins = std::array::from_fn(|c| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .filter(|&j| (0..CLASSES).all(|b| adj[c][b][i] == adj[c][b][j]))
                        .fold(0u64, |m, j| m | 1 << j)
                })
                .collect()
        });
        Self {
            n,
            adj,
            twins,
            budget,
            stats: SearchStats::default(),
            failed: HashSet::new(),
            counts: HashMap::new(),
            exceeded: false,
        }
    }

    /// Number of triangles of uncovered vertices through class-0 vertex `v`.
    fn completions0(&self, s: &State, v: usize) -> u32 {
        let w_side = self.adj[0][2][v] & s[2];
        bits(self.adj[0][1][v] & s[1])
            .map(|u| (self.adj[1][2][u] & w_side).count_ones())
            .sum()
    }

    /// Whether uncovered vertex `i` of class `c` (1 or 2) lies in some triangle.
    fn has_completion(&self, s: &State, c: usize, i: usize) -> bool {
        let o = 3 - c;
        let other = self.adj[c][o][i] & s[o];
        bits(self.adj[c][0][i] & s[0]).any(|v| self.adj[0][o][v] & other != 0)
    }

    /// Branch vertex of class 0 (fewest completions, then lowest index) or
    /// `None` if some uncovered vertex has no completion.
    fn pick(&self, s: &State) -> Option<usize> {
        let mut best: Option<(u32, usize)> = None;
        for v in bits(s[0]) {
            let c = self.completions0(s, v);
            if c == 0 {
                return None;
            }
            if best.is_none_or(|b| c < b.0) {
                best = Some((c, v));
            }
        }
        for c in 1..CLASSES {
            if bits(s[c]).any(|i| !self.has_completion(s, c, i)) {
                return None;
            }
        }
        best.map(|b| b.1)
    }

    fn tick(&mut self, depth: usize) -> bool {
        self.stats.nodes_expanded += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
        if self.stats.nodes_expanded > self.budget {
            self.exceeded = true;
        }
        !self.exceeded
    }

    fn is_twin_rep(&self, s: &State, c: usize, i: usize) -> bool {
        (self.twins[c][i] & s[c]).trailing_zeros() as usize == i
    }

    fn find(&mut self, s: State, depth: usize, out: &mut Vec<Triangle>) -> bool {
        if s[0] == 0 {
            return true;
        }
        if !self.tick(depth) || self.failed.contains(&s) {
            return false;
        }
        if let Some(v) = self.pick(&s) {
            let w_side = self.adj[0][2][v] & s[2];
            for u in bits(self.adj[0][1][v] & s[1]) {
                if !self.is_twin_rep(&s, 1, u) {
                    continue;
                }
                for w in bits(self.adj[1][2][u] & w_side) {
                    if !self.is_twin_rep(&s, 2, w) {
                        continue;
                    }
                    let next = [s[0] & !(1 << v), s[1] & !(1 << u), s[2] & !(1 << w)];
                    out.push(Triangle::from_indices([v, u, w]));
                    if self.find(next, depth + 1, out) {
                        return true;
                    }
                    out.pop();
                    if self.exceeded {
                        return false;
                    }
                }
            }
        }
        if self.failed.len() < MEMO_CAP {
            self.failed.insert(s);
        }
        false
    }

    fn count(&mut self, s: State, depth: usize) -> u128 {
        if s[0] == 0 {
            return 1;
        }
        if let Some(&c) = self.counts.get(&s) {
            return c;
        }
        if !self.tick(depth) {
            return 0;
        }
        let mut total = 0u128;
        if let Some(v) = self.pick(&s) {
            let w_side = self.adj[0][2][v] & s[2];
            for u in bits(self.adj[0][1][v] & s[1]) {
                for w in bits(self.adj[1][2][u] & w_side) {
                    total += self.count([s[0] & !(1 << v), s[1] & !(1 << u), s[2] & !(1 << w)], depth + 1);
                    if self.exceeded {
                        return 0;
                    }
                }
            }
        }
        self.counts.insert(s, total);
        total
    }
}

/// Decides (and in `count_mode` counts) perfect triangle factors of `g`
/// within `budget` expanded nodes.
pub fn exact_factor(g: &TripartiteGraph, count_mode: bool, budget: u64) -> ExactResult {
    let start = Instant::now();
    let mut search = Search::new(g, budget);
    let full = [mask_of(search.n); CLASSES];
    let mut count = None;
    if count_mode {
        let c = search.count(full, 0);
        if search.exceeded {
            return finish(search, ExactVerdict::BudgetExceeded, None, start);
        }
        count = Some(c);
        if c == 0 {
            return finish(search, ExactVerdict::NoFactor, count, start);
        }
    }
    let mut cover = Vec::with_capacity(search.n);
    let verdict = if search.find(full, 0, &mut cover) {
        cover.sort();
        ExactVerdict::Cover(cover)
    } else if search.exceeded {
        count = None;
        ExactVerdict::BudgetExceeded
    } else {
        ExactVerdict::NoFactor
    };
    finish(search, verdict, count, start)
}

fn finish(search: Search, verdict: ExactVerdict, count: Option<u128>, start: Instant) -> ExactResult {
    let mut stats = search.stats;
    stats.elapsed = start.elapsed();
    ExactResult { verdict, count, stats }
}

/// Whether `g` has a perfect triangle factor.
pub fn has_factor(g: &TripartiteGraph, budget: u64) -> Result<bool, BudgetExceeded> {
    match exact_factor(g, false, budget).verdict {
        ExactVerdict::Cover(_) => Ok(true),
        ExactVerdict::NoFactor => Ok(false),
        ExactVerdict::BudgetExceeded => Err(BudgetExceeded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{gamma3, gen_random_min_degree, theta3x2, theta3x3};
    use crate::graph::verify_cover;

    const BUDGET: u64 = 100_000_000;

    /// Counts perfect factors by choosing disjoint triangles from the full
    /// triangle list in increasing order.
    fn naive_count(g: &TripartiteGraph) -> u128 {
        fn go(ts: &[Triangle], from: usize, chosen: &mut Vec<Triangle>, n: usize) -> u128 {
            if chosen.len() == n {
                return 1;
            }
            let mut total = 0;
            for k in from..ts.len() {
                if chosen.iter().all(|c| c.is_disjoint(&ts[k])) {
                    chosen.push(ts[k]);
                    total += go(ts, k + 1, chosen, n);
                    chosen.pop();
                }
            }
            total
        }
        go(&g.triangles(), 0, &mut Vec::new(), g.n())
    }

    fn reversed(g: &TripartiteGraph) -> TripartiteGraph {
        let n = g.n();
        let perm: [Vec<usize>; 3] = std::array::from_fn(|_| (0..n).rev().collect());
        g.permuted(&perm)
    }

    #[test]
    fn complete_333_has_36_factors() {
        let g = TripartiteGraph::complete(3);
        let r = exact_factor(&g, true, BUDGET);
        assert_eq!(r.count, Some(36));
        assert_eq!(naive_count(&g), 36);
        let ExactVerdict::Cover(c) = r.verdict else { panic!() };
        assert!(verify_cover(&g, &c, true).is_accept());
    }

    #[test]
    fn complete_444_count_matches_formula() {
        // factors biject with pairs of bijections V0 -> V1, V0 -> V2
        assert_eq!(exact_factor(&TripartiteGraph::complete(4), true, BUDGET).count, Some(576));
    }

    #[test]
    fn small_cases() {
        assert_eq!(has_factor(&TripartiteGraph::complete(1), BUDGET), Ok(true));
        assert_eq!(has_factor(&TripartiteGraph::empty(0), BUDGET), Ok(true));
        assert_eq!(has_factor(&TripartiteGraph::empty(2), BUDGET), Ok(false));
        for t in 1..=3 {
            assert_eq!(has_factor(&theta3x2(t), BUDGET), Ok(false));
        }
    }

    #[test]
    fn gamma3_parity_table() {
        for t in 1..=5 {
            let g = gamma3(t);
            let r = exact_factor(&g, false, BUDGET);
            match r.verdict {
                ExactVerdict::Cover(c) => {
                    assert_eq!(t % 2, 0, "t = {t}");
                    assert!(verify_cover(&g, &c, true).is_accept());
                }
                ExactVerdict::NoFactor => assert_eq!(t % 2, 1, "t = {t}"),
                ExactVerdict::BudgetExceeded => panic!("budget"),
            }
        }
    }

    #[test]
    fn theta33_cover_is_latin() {
        let g = theta3x3(1);
        let ExactVerdict::Cover(c) = exact_factor(&g, false, BUDGET).verdict else { panic!() };
        assert!(verify_cover(&g, &c, true).is_accept());
        for t in &c {
            let [a, b, d] = t.v;
            assert!(a != b && b != d && a != d);
        }
        // Latin squares of order 3 with a fixed first row: 2; triangles are transversals
        assert_eq!(exact_factor(&g, true, BUDGET).count, Some(naive_count(&g)));
    }

    #[test]
    fn matches_naive_oracle_on_small_random_graphs() {
        for seed in 0..200 {
            let n = 1 + (seed as usize % 4);
            let frac = [0.4, 0.55, 0.7, 0.85][(seed as usize / 4) % 4];
            let g = gen_random_min_degree(n, frac, seed).unwrap();
            let naive = naive_count(&g);
            let r = exact_factor(&g, true, BUDGET);
            assert_eq!(r.count, Some(naive), "seed {seed}");
            assert_eq!(has_factor(&g, BUDGET), Ok(naive > 0));
        }
    }

    #[test]
    fn decision_invariant_under_reversal() {
        for seed in 0..60 {
            let g = gen_random_min_degree(6, 0.6, seed).unwrap();
            assert_eq!(has_factor(&g, BUDGET), has_factor(&reversed(&g), BUDGET), "seed {seed}");
        }
    }

    #[test]
    fn budget_is_a_distinct_verdict() {
        let g = gamma3(3);
        let r = exact_factor(&g, false, 1);
        assert_eq!(r.verdict, ExactVerdict::BudgetExceeded);
        assert_eq!(has_factor(&g, 1), Err(BudgetExceeded));
        let r = exact_factor(&TripartiteGraph::complete(5), true, 3);
        assert_eq!(r.verdict, ExactVerdict::BudgetExceeded);
        assert_eq!(r.count, None);
    }

    #[test]
    fn stats_are_recorded() {
        let r = exact_factor(&gamma3(2), false, BUDGET);
        assert!(r.stats.nodes_expanded >= 1);
        assert!(r.stats.max_depth <= 6);
    }
}
