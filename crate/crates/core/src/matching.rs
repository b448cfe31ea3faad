//! Bipartite matching: Hopcroft–Karp, Hall violators and the near-half-degree
//! `Θ_{2×2}` detector.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use num_rational::Rational64;
use thiserror::Error;

use crate::graph::{ratio_le, ratio_to_f64, TripartiteGraph, VertexRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error("matching already saturates the left side")]
    MatchingIsPerfect,
    #[error("bipartite graph has a perfect matching")]
    HasPerfectMatching,
    #[error("sides have sizes {0} and {1}, expected equal")]
    Unbalanced(usize, usize),
    #[error("degree {degree} is below the floor {floor}")]
    PreconditionDegree { degree: usize, floor: usize },
    #[error("no Θ22 structure: sparse densities {0} and {1} exceed the bound")]
    NoStructure(f64, f64),
}

/// Bipartite graph with locally indexed sides. Labels map local indices back to
/// tripartite vertices when the view was cut from a [`TripartiteGraph`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteView {
    left: Vec<VertexRef>,
    right: Vec<VertexRef>,
    adj: Vec<FixedBitSet>,
    radj: Vec<FixedBitSet>,
}

impl BipartiteView {
    /// The bipartite graph between `sa` in class `a` and `sb` in class `b`.
    pub fn between(g: &TripartiteGraph, a: usize, sa: &FixedBitSet, b: usize, sb: &FixedBitSet) -> Self {
        let left: Vec<VertexRef> = sa.ones().map(|i| VertexRef::new(a, i)).collect();
        let right: Vec<VertexRef> = sb.ones().map(|j| VertexRef::new(b, j)).collect();
        Self::with_labels(left, right, |i, j| g.adjacent(i, j))
    }

    /// Builds a view from explicit labels and an adjacency predicate.
    pub fn with_labels(
        left: Vec<VertexRef>,
        right: Vec<VertexRef>,
        mut adjacent: impl FnMut(VertexRef, VertexRef) -> bool,
    ) -> Self {
        let mut adj = vec![FixedBitSet::with_capacity(right.len()); left.len()];
        let mut radj = vec![FixedBitSet::with_capacity(left.len()); right.len()];
        for (i, &u) in left.iter().enumerate() {
            for (j, &v) in right.iter().enumerate() {
                if adjacent(u, v) {
                    adj[i].insert(j);
                    radj[j].insert(i);
                }
            }
        }
        Self { left, right, adj, radj }
    }

    /// Unlabelled view from a predicate on local indices; labels are
    /// `(0, i)` on the left and `(1, j)` on the right.
    pub fn from_fn(nl: usize, nr: usize, mut adjacent: impl FnMut(usize, usize) -> bool) -> Self {
        let left = (0..nl).map(|i| VertexRef::new(0, i)).collect();
        let right = (0..nr).map(|j| VertexRef::new(1, j)).collect();
        Self::with_labels(left, right, |u, v| adjacent(u.index, v.index))
    }

    pub fn left_len(&self) -> usize {
        self.left.len()
    }

    pub fn right_len(&self) -> usize {
        self.right.len()
    }

    pub fn left(&self, i: usize) -> VertexRef {
        self.left[i]
    }

    pub fn right(&self, j: usize) -> VertexRef {
        self.right[j]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(j)
    }

    pub fn left_neighbors(&self, i: usize) -> &FixedBitSet {
        &self.adj[i]
    }

    pub fn right_neighbors(&self, j: usize) -> &FixedBitSet {
        &self.radj[j]
    }

    pub fn left_degree(&self, i: usize) -> usize {
        self.adj[i].count_ones(..)
    }

    pub fn right_degree(&self, j: usize) -> usize {
        self.radj[j].count_ones(..)
    }

    /// Union of the neighbourhoods of the given left vertices.
    pub fn neighborhood(&self, xs: &[usize]) -> FixedBitSet {
        let mut n = FixedBitSet::with_capacity(self.right.len());
        for &i in xs {
            n.union_with(&self.adj[i]);
        }
        n
    }

    /// Edges between left set `ls` and right set `rs` (local indices).
    pub fn edges_between(&self, ls: &FixedBitSet, rs: &FixedBitSet) -> usize {
        ls.ones().map(|i| self.adj[i].intersection(rs).count()).sum()
    }

    /// The view with sides swapped.
    pub fn transposed(&self) -> Self {
        Self {
            left: self.right.clone(),
            right: self.left.clone(),
            adj: self.radj.clone(),
            radj: self.adj.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingResult {
    /// `(left, right)` local index pairs, sorted by left index.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_left: Vec<usize>,
    pub mate_left: Vec<Option<usize>>,
    pub mate_right: Vec<Option<usize>>,
}

impl MatchingResult {
    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_left_perfect(&self) -> bool {
        self.unmatched_left.is_empty()
    }

    pub fn is_perfect(&self) -> bool {
        self.unmatched_left.is_empty() && self.mate_right.iter().all(Option::is_some)
    }
}

/// Maximum-cardinality matching by Hopcroft–Karp.
pub fn max_matching(bv: &BipartiteView) -> MatchingResult {
    const INF: usize = usize::MAX;
    let (nl, nr) = (bv.left_len(), bv.right_len());
    let mut mate_left: Vec<Option<usize>> = vec![None; nl];
    let mut mate_right: Vec<Option<usize>> = vec![None; nr];
    let mut dist = vec![INF; nl];

    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for i in 0..nl {
            if mate_left[i].is_none() {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = INF;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for j in bv.adj[i].ones() {
                match mate_right[j] {
                    None => found = true,
                    Some(k) if dist[k] == INF => {
                        dist[k] = dist[i] + 1;
                        queue.push_back(k);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        for i in 0..nl {
            if mate_left[i].is_none() {
                augment(bv, i, &mut dist, &mut mate_left, &mut mate_right);
            }
        }
    }

    let pairs = (0..nl).filter_map(|i| mate_left[i].map(|j| (i, j))).collect();
    let unmatched_left = (0..nl).filter(|&i| mate_left[i].is_none()).collect();
    MatchingResult {
        pairs,
        unmatched_left,
        mate_left,
        mate_right,
    }
}

fn augment(
    bv: &BipartiteView,
    i: usize,
    dist: &mut [usize],
    mate_left: &mut [Option<usize>],
    mate_right: &mut [Option<usize>],
) -> bool {
    for j in bv.adj[i].ones() {
        let ok = match mate_right[j] {
            None => true,
            Some(k) => dist[k] == dist[i] + 1 && augment(bv, k, dist, mate_left, mate_right),
        };
        if ok {
            mate_left[i] = Some(j);
            mate_right[j] = Some(i);
            return true;
        }
    }
    dist[i] = usize::MAX;
    false
}

/// `X ⊆ left` with `|N(X)| < |X|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HallViolator {
    pub x: Vec<usize>,
    pub neighbors: Vec<usize>,
}

impl HallViolator {
    pub fn deficiency(&self) -> usize {
        self.x.len() - self.neighbors.len()
    }
}

/// Left vertices reachable by alternating paths from the unmatched left
/// vertices of a maximum matching. Its deficiency equals the number of
/// unmatched left vertices.
pub fn hall_violator(bv: &BipartiteView, m: &MatchingResult) -> Result<HallViolator, MatchingError> {
    if m.unmatched_left.is_empty() {
        return Err(MatchingError::MatchingIsPerfect);
    }
    let mut in_x = FixedBitSet::with_capacity(bv.left_len());
    let mut in_n = FixedBitSet::with_capacity(bv.right_len());
    let mut queue: VecDeque<usize> = m.unmatched_left.iter().copied().collect();
    for &i in &m.unmatched_left {
        in_x.insert(i);
    }
    while let Some(i) = queue.pop_front() {
        for j in bv.adj[i].ones() {
            if in_n.put(j) {
                continue;
            }
            let k = m.mate_right[j].expect("maximum matching leaves no augmenting path");
            if !in_x.put(k) {
                queue.push_back(k);
            }
        }
    }
    let v = HallViolator {
        x: in_x.ones().collect(),
        neighbors: in_n.ones().collect(),
    };
    assert!(v.neighbors.len() < v.x.len(), "alternating set is not deficient");
    Ok(v)
}

/// Partition of both sides into halves whose cross pairs `(La, Rb)` and
/// `(Lb, Ra)` are sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct Theta22Witness {
    pub la: Vec<usize>,
    pub lb: Vec<usize>,
    pub ra: Vec<usize>,
    pub rb: Vec<usize>,
    /// `d(La, Rb)`.
    pub d_a_b: Rational64,
    /// `d(Lb, Ra)`.
    pub d_b_a: Rational64,
}

impl Theta22Witness {
    pub fn max_density(&self) -> Rational64 {
        self.d_a_b.max(self.d_b_a)
    }
}

/// Extracts a `Θ_{2×2}(M/2)` partition from a balanced bipartite graph with
/// degrees near `M/2` and no perfect matching, certified by `delta`.
pub fn detect_theta22(bv: &BipartiteView, eps: f64, delta: f64) -> Result<Theta22Witness, MatchingError> {
    let m = bv.left_len();
    if bv.right_len() != m {
        return Err(MatchingError::Unbalanced(m, bv.right_len()));
    }
    let floor = crate::graph::ceil_tol((0.5 - eps) * m as f64);
    let min_deg = (0..m)
        .map(|i| bv.left_degree(i))
        .chain((0..m).map(|j| bv.right_degree(j)))
        .min()
        .unwrap_or(0);
    if m > 0 && min_deg < floor {
        return Err(MatchingError::PreconditionDegree { degree: min_deg, floor });
    }
    let mm = max_matching(bv);
    if mm.is_left_perfect() {
        return Err(MatchingError::HasPerfectMatching);
    }
    let hv = hall_violator(bv, &mm)?;

    let mut la = FixedBitSet::with_capacity(m);
    la.extend(hv.x.iter().copied());
    let mut ra = FixedBitSet::with_capacity(m);
    ra.extend(hv.neighbors.iter().copied());

    // Ra goes to the half size nearest to |N(X)|, La into the eps band.
    let half_lo = m / 2;
    let half_hi = m - m / 2;
    let ra_target = ra.count_ones(..).clamp(half_lo, half_hi);
    let band = (eps * m as f64).max(0.0);
    let la_lo = crate::graph::ceil_tol(m as f64 / 2.0 - band);
    let la_hi = crate::graph::floor_tol(m as f64 / 2.0 + band).max(la_lo);
    let la_target = la.count_ones(..).clamp(la_lo, la_hi);
    resize_half(&mut ra, ra_target, |j, in_a| partner_degree(bv.right_neighbors(j), &la, in_a));
    resize_half(&mut la, la_target, |i, in_a| partner_degree(bv.left_neighbors(i), &ra, in_a));

    let lb = complement(&la, m);
    let rb = complement(&ra, m);
    let d_a_b = density(bv.edges_between(&la, &rb), la.count_ones(..), rb.count_ones(..));
    let d_b_a = density(bv.edges_between(&lb, &ra), lb.count_ones(..), ra.count_ones(..));
    if !ratio_le(d_a_b, delta) || !ratio_le(d_b_a, delta) {
        return Err(MatchingError::NoStructure(ratio_to_f64(d_a_b), ratio_to_f64(d_b_a)));
    }
    Ok(Theta22Witness {
        la: la.ones().collect(),
        lb: lb.ones().collect(),
        ra: ra.ones().collect(),
        rb: rb.ones().collect(),
        d_a_b,
        d_b_a,
    })
}

/// Degree of a vertex into its dense partner half: the `a` half if it sits in
/// its own `a` half, the complement otherwise.
fn partner_degree(nbrs: &FixedBitSet, partner_a: &FixedBitSet, in_a: bool) -> usize {
    let into_a = nbrs.intersection(partner_a).count();
    if in_a {
        into_a
    } else {
        nbrs.count_ones(..) - into_a
    }
}

/// Moves vertices in or out of `half` until it has `target` members, always
/// moving the vertex least attached to its current dense partner.
fn resize_half(half: &mut FixedBitSet, target: usize, degree: impl Fn(usize, bool) -> usize) {
    let len = half.len();
    while half.count_ones(..) > target {
        let v = half.ones().min_by_key(|&v| (degree(v, true), v)).unwrap();
        half.set(v, false);
    }
    while half.count_ones(..) < target {
        let v = (0..len)
            .filter(|&v| !half.contains(v))
            .min_by_key(|&v| (degree(v, false), v))
            .unwrap();
        half.insert(v);
    }
}

fn complement(s: &FixedBitSet, n: usize) -> FixedBitSet {
    let mut c = FixedBitSet::with_capacity(n);
    c.insert_range(..);
    c.difference_with(s);
    c
}

fn density(edges: usize, a: usize, b: usize) -> Rational64 {
    if a == 0 || b == 0 {
        Rational64::from_integer(0)
    } else {
        Rational64::new(edges as i64, (a * b) as i64)
    }
}
