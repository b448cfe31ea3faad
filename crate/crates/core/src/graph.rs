//! Balanced tripartite graphs, triangles, partial covers and cover verification.
//!
//! Vertices are addressed by `(class, index)` with classes `0, 1, 2` and
//! indices `0..n`. Adjacency is kept as one bitset per vertex and per other
//! class, so neighbourhood intersections are word-parallel.

use std::fmt;

use fixedbitset::FixedBitSet;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of vertex classes.
pub const CLASSES: usize = 3;

/// The two classes different from `c`, in increasing order.
pub fn other_classes(c: usize) -> [usize; 2] {
    match c {
        0 => [1, 2],
        1 => [0, 2],
        2 => [0, 1],
        _ => panic!("class id {c} out of range"),
    }
}

/// The class that is neither `a` nor `b` (`a != b`).
pub fn third_class(a: usize, b: usize) -> usize {
    debug_assert!(a != b && a < CLASSES && b < CLASSES);
    3 - a - b
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {0} -- {1} joins two vertices of the same class")]
    WithinClassEdge(VertexRef, VertexRef),
    #[error("vertex {0} is outside a graph with {1} vertices per class")]
    IndexOutOfRange(VertexRef, usize),
    #[error("degree query of class {0} against its own class")]
    SameClassQuery(usize),
    #[error("density of an empty vertex set")]
    EmptySet,
    #[error("density between two sets of the same class {0}")]
    SameClass(usize),
    #[error("{0} -- {1} is not a cross-class non-edge")]
    NotANonEdge(VertexRef, VertexRef),
    #[error("missing edge in triangle {0}")]
    MissingEdge(Triangle),
    #[error("kept vertex sets have unequal sizes {0:?}")]
    Unbalanced([usize; 3]),
    #[error("graph needs at least one vertex per class")]
    EmptyGraph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexRef {
    pub class: usize,
    pub index: usize,
}

impl VertexRef {
    pub fn new(class: usize, index: usize) -> Self {
        Self { class, index }
    }
}

impl fmt::Display for VertexRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.class, self.index)
    }
}

/// Balanced tripartite graph with `n` vertices in each class.
///
/// Immutable after construction; every "mutation" returns a new graph.
#[derive(Clone, PartialEq, Eq)]
pub struct TripartiteGraph {
    n: usize,
    // nbr[a][b][u] = neighbours of (a, u) inside class b; empty when a == b.
    nbr: [[Vec<FixedBitSet>; CLASSES]; CLASSES],
}

impl fmt::Debug for TripartiteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TripartiteGraph")
            .field("n", &self.n)
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl TripartiteGraph {
    /// Edgeless graph with `n` vertices per class.
    pub fn empty(n: usize) -> Self {
        let nbr = std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                if a == b {
                    Vec::new()
                } else {
                    vec![FixedBitSet::with_capacity(n); n]
                }
            })
        });
        Self { n, nbr }
    }

    /// Complete tripartite graph `K_{n,n,n}`.
    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for a in 0..CLASSES {
            for b in 0..CLASSES {
                if a != b {
                    for row in &mut g.nbr[a][b] {
                        row.insert_range(..);
                    }
                }
            }
        }
        g
    }

    /// Builds a graph from an edge list; edges are symmetrised and duplicates collapse.
    pub fn build(n: usize, edges: &[(VertexRef, VertexRef)]) -> Result<Self, GraphError> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            g.check_vertex(u)?;
            g.check_vertex(v)?;
            if u.class == v.class {
                return Err(GraphError::WithinClassEdge(u, v));
            }
            g.set_edge(u, v);
        }
        Ok(g)
    }

    /// Builds a graph from a symmetric predicate over cross-class vertex pairs.
    pub fn from_fn(n: usize, mut adjacent: impl FnMut(VertexRef, VertexRef) -> bool) -> Self {
        let mut g = Self::empty(n);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for i in 0..n {
                for j in 0..n {
                    let (u, v) = (VertexRef::new(a, i), VertexRef::new(b, j));
                    if adjacent(u, v) {
                        g.set_edge(u, v);
                    }
                }
            }
        }
        g
    }

    pub(crate) fn set_edge(&mut self, u: VertexRef, v: VertexRef) {
        self.nbr[u.class][v.class][u.index].insert(v.index);
        self.nbr[v.class][u.class][v.index].insert(u.index);
    }

    fn check_vertex(&self, v: VertexRef) -> Result<(), GraphError> {
        if v.class >= CLASSES || v.index >= self.n {
            Err(GraphError::IndexOutOfRange(v, self.n))
        } else {
            Ok(())
        }
    }

    /// Vertices per class.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, u: VertexRef, v: VertexRef) -> bool {
        u.class != v.class && self.nbr[u.class][v.class][u.index].contains(v.index)
    }

    /// Neighbours of `v` inside `class` as a bitset over that class.
    ///
    /// Panics if `class == v.class`.
    pub fn neighbors(&self, v: VertexRef, class: usize) -> &FixedBitSet {
        assert!(class != v.class, "no within-class adjacency");
        &self.nbr[v.class][class][v.index]
    }

    pub fn cross_degree(&self, v: VertexRef, other_class: usize) -> Result<usize, GraphError> {
        self.check_vertex(v)?;
        if other_class == v.class || other_class >= CLASSES {
            return Err(GraphError::SameClassQuery(other_class));
        }
        Ok(self.nbr[v.class][other_class][v.index].count_ones(..))
    }

    /// Degree of `v` into the subset `set` of class `class`.
    pub fn degree_into(&self, v: VertexRef, class: usize, set: &FixedBitSet) -> usize {
        self.neighbors(v, class).intersection_count(set)
    }

    /// Minimum cross-degree over all vertices and all other classes (0 for `n == 0`).
    pub fn min_cross_degree(&self) -> usize {
        let mut best = usize::MAX;
        for a in 0..CLASSES {
            for b in other_classes(a) {
                for row in &self.nbr[a][b] {
                    best = best.min(row.count_ones(..));
                }
            }
        }
        if best == usize::MAX {
            0
        } else {
            best
        }
    }

    /// Number of edges between two classes.
    pub fn class_pair_edges(&self, a: usize, b: usize) -> usize {
        self.nbr[a][b].iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.class_pair_edges(0, 1) + self.class_pair_edges(0, 2) + self.class_pair_edges(1, 2)
    }

    /// Canonical edge list: lower class first, sorted lexicographically.
    pub fn edges(&self) -> Vec<(VertexRef, VertexRef)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for i in 0..self.n {
                for j in self.nbr[a][b][i].ones() {
                    out.push((VertexRef::new(a, i), VertexRef::new(b, j)));
                }
            }
        }
        out
    }

    /// Number of edges between `sa` (class `a`) and `sb` (class `b`).
    pub fn edges_between(&self, a: usize, sa: &FixedBitSet, b: usize, sb: &FixedBitSet) -> usize {
        if a == b {
            return 0;
        }
        sa.ones()
            .map(|i| self.nbr[a][b][i].intersection_count(sb))
            .sum()
    }

    /// `e(A, B) / (|A| |B|)` as an exact rational.
    pub fn density(
        &self,
        a: usize,
        sa: &FixedBitSet,
        b: usize,
        sb: &FixedBitSet,
    ) -> Result<Rational64, GraphError> {
        if a == b {
            return Err(GraphError::SameClass(a));
        }
        let (na, nb) = (sa.count_ones(..), sb.count_ones(..));
        if na == 0 || nb == 0 {
            return Err(GraphError::EmptySet);
        }
        let e = self.edges_between(a, sa, b, sb);
        Ok(Rational64::new(e as i64, (na * nb) as i64))
    }

    pub fn is_triangle(&self, t: &Triangle) -> bool {
        let [a, b, c] = t.vertices();
        t.v.iter().all(|&i| i < self.n)
            && self.adjacent(a, b)
            && self.adjacent(a, c)
            && self.adjacent(b, c)
    }

    /// All triangles, ordered by `(v0, v1, v2)`.
    pub fn triangles(&self) -> Vec<Triangle> {
        let mut out = Vec::new();
        for x in 0..self.n {
            let n1 = &self.nbr[0][1][x];
            let n2 = &self.nbr[0][2][x];
            for y in n1.ones() {
                for z in self.nbr[1][2][y].intersection(n2) {
                    out.push(Triangle::from_indices([x, y, z]));
                }
            }
        }
        out
    }

    pub fn is_triangle_free(&self) -> bool {
        (0..self.n).all(|x| {
            let n2 = &self.nbr[0][2][x];
            self.nbr[0][1][x]
                .ones()
                .all(|y| self.nbr[1][2][y].is_disjoint(n2))
        })
    }

    /// Copy of this graph with one extra edge; errors if `u -- v` is already an edge
    /// or is not a cross-class pair.
    pub fn with_edge(&self, u: VertexRef, v: VertexRef) -> Result<Self, GraphError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u.class == v.class || self.adjacent(u, v) {
            return Err(GraphError::NotANonEdge(u, v));
        }
        let mut g = self.clone();
        g.set_edge(u, v);
        Ok(g)
    }

    /// Induced subgraph on `keep` (one set per class, equal sizes). Returns the
    /// subgraph and, per class, the original index of each new index.
    pub fn induced(
        &self,
        keep: &[FixedBitSet; CLASSES],
    ) -> Result<(Self, [Vec<usize>; CLASSES]), GraphError> {
        let maps: [Vec<usize>; CLASSES] = std::array::from_fn(|c| keep[c].ones().collect());
        let sizes = [maps[0].len(), maps[1].len(), maps[2].len()];
        if sizes[0] != sizes[1] || sizes[1] != sizes[2] {
            return Err(GraphError::Unbalanced(sizes));
        }
        let m = sizes[0];
        let mut g = Self::empty(m);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for (i, &oi) in maps[a].iter().enumerate() {
                let row = &self.nbr[a][b][oi];
                for (j, &oj) in maps[b].iter().enumerate() {
                    if row.contains(oj) {
                        g.set_edge(VertexRef::new(a, i), VertexRef::new(b, j));
                    }
                }
            }
        }
        Ok((g, maps))
    }

    /// Relabels vertices: new index `perm[c][i]` receives old vertex `(c, i)`.
    pub fn permuted(&self, perm: &[Vec<usize>; CLASSES]) -> Self {
        let mut g = Self::empty(self.n);
        for (u, v) in self.edges() {
            g.set_edge(
                VertexRef::new(u.class, perm[u.class][u.index]),
                VertexRef::new(v.class, perm[v.class][v.index]),
            );
        }
        g
    }

    /// Full vertex set of each class.
    pub fn full_sets(&self) -> [FixedBitSet; CLASSES] {
        std::array::from_fn(|_| full_set(self.n))
    }
}

/// Bitset of length `n` with every bit set.
pub fn full_set(n: usize) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(n);
    s.insert_range(..);
    s
}

/// Bitset of length `n` holding `items`.
pub fn set_of(n: usize, items: impl IntoIterator<Item = usize>) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(n);
    for i in items {
        s.insert(i);
    }
    s
}

/// A class-transversal triangle: `v[c]` is the index of its class-`c` vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Triangle {
    pub v: [usize; CLASSES],
}

impl Triangle {
    /// Unchecked constructor; use [`Triangle::new`] to check edges.
    pub fn from_indices(v: [usize; CLASSES]) -> Self {
        Self { v }
    }

    pub fn new(g: &TripartiteGraph, v: [usize; CLASSES]) -> Result<Self, GraphError> {
        let t = Self { v };
        for (c, &i) in v.iter().enumerate() {
            g.check_vertex(VertexRef::new(c, i))?;
        }
        if g.is_triangle(&t) {
            Ok(t)
        } else {
            Err(GraphError::MissingEdge(t))
        }
    }

    pub fn vertex(&self, class: usize) -> VertexRef {
        VertexRef::new(class, self.v[class])
    }

    pub fn vertices(&self) -> [VertexRef; CLASSES] {
        std::array::from_fn(|c| self.vertex(c))
    }

    pub fn contains(&self, v: VertexRef) -> bool {
        self.v[v.class] == v.index
    }

    pub fn is_disjoint(&self, other: &Triangle) -> bool {
        (0..CLASSES).all(|c| self.v[c] != other.v[c])
    }
}

impl fmt::Display for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.v[0], self.v[1], self.v[2])
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverError {
    #[error("triangle {0} overlaps a triangle already in the cover")]
    Overlap(Triangle),
    #[error("triangle {0} has an index outside the cover's range")]
    OutOfRange(Triangle),
}

/// Vertex-disjoint set of triangles, with the covered vertices of each class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriangleCover {
    triangles: Vec<Triangle>,
    covered: [FixedBitSet; CLASSES],
}

impl TriangleCover {
    pub fn new(n: usize) -> Self {
        Self {
            triangles: Vec::new(),
            covered: std::array::from_fn(|_| FixedBitSet::with_capacity(n)),
        }
    }

    pub fn from_triangles(
        n: usize,
        triangles: impl IntoIterator<Item = Triangle>,
    ) -> Result<Self, CoverError> {
        let mut c = Self::new(n);
        for t in triangles {
            c.push(t)?;
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.covered[0].len()
    }

    pub fn push(&mut self, t: Triangle) -> Result<(), CoverError> {
        if t.v.iter().any(|&i| i >= self.n()) {
            return Err(CoverError::OutOfRange(t));
        }
        if (0..CLASSES).any(|c| self.covered[c].contains(t.v[c])) {
            return Err(CoverError::Overlap(t));
        }
        for c in 0..CLASSES {
            self.covered[c].insert(t.v[c]);
        }
        self.triangles.push(t);
        Ok(())
    }

    /// Removes and returns the triangle at position `idx` (order not preserved).
    pub fn swap_remove(&mut self, idx: usize) -> Triangle {
        let t = self.triangles.swap_remove(idx);
        for c in 0..CLASSES {
            self.covered[c].set(t.v[c], false);
        }
        t
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn into_triangles(self) -> Vec<Triangle> {
        self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn is_perfect(&self) -> bool {
        self.triangles.len() == self.n()
    }

    pub fn covered(&self, class: usize) -> &FixedBitSet {
        &self.covered[class]
    }

    pub fn is_covered(&self, v: VertexRef) -> bool {
        self.covered[v.class].contains(v.index)
    }

    /// Uncovered vertices of `class`.
    pub fn uncovered(&self, class: usize) -> FixedBitSet {
        let mut u = self.covered[class].clone();
        u.toggle_range(..);
        u
    }

    /// Triangles sorted, for order-insensitive comparison.
    pub fn sorted_triangles(&self) -> Vec<Triangle> {
        let mut t = self.triangles.clone();
        t.sort_unstable();
        t
    }
}

/// Why a cover was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    IndexOutOfRange,
    MissingEdge,
    NotDisjoint,
    NotSpanning,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Violation::IndexOutOfRange => "vertex index out of range",
            Violation::MissingEdge => "triangle edge missing from graph",
            Violation::NotDisjoint => "triangles are not vertex-disjoint",
            Violation::NotSpanning => "cover does not span every vertex",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    /// First violated condition; `triangle` is the position of the offending
    /// triangle, absent for [`Violation::NotSpanning`].
    Reject {
        violation: Violation,
        triangle: Option<usize>,
    },
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Checks a list of triangles against `g`: indices in range, every edge present,
/// pairwise vertex-disjoint, and (if `require_perfect`) exactly `n` triangles.
pub fn verify_cover(g: &TripartiteGraph, triangles: &[Triangle], require_perfect: bool) -> Verdict {
    let n = g.n();
    let mut seen: [FixedBitSet; CLASSES] = std::array::from_fn(|_| FixedBitSet::with_capacity(n));
    for (pos, t) in triangles.iter().enumerate() {
        let reject = |violation| Verdict::Reject {
            violation,
            triangle: Some(pos),
        };
        if t.v.iter().any(|&i| i >= n) {
            return reject(Violation::IndexOutOfRange);
        }
        if !g.is_triangle(t) {
            return reject(Violation::MissingEdge);
        }
        if (0..CLASSES).any(|c| seen[c].contains(t.v[c])) {
            return reject(Violation::NotDisjoint);
        }
        for c in 0..CLASSES {
            seen[c].insert(t.v[c]);
        }
    }
    if require_perfect && triangles.len() != n {
        return Verdict::Reject {
            violation: Violation::NotSpanning,
            triangle: None,
        };
    }
    Verdict::Accept
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("delta0 = {0} must lie in (0, 1)")]
    Delta0(f64),
    #[error("theta = {0} must lie in (3/4, 1)")]
    Theta(f64),
    #[error("eps_prime = {0} must lie in [0, 1/12)")]
    EpsPrime(f64),
    #[error("exact_limit = {0} exceeds the oracle's maximum class size 64")]
    ExactLimit(usize),
    #[error("{0} = {1} must lie in [0, 1]")]
    Fraction(&'static str, f64),
}

/// Solver knobs. Thresholds are fractions; the defaults were calibrated so that
/// the acceptance suite passes at desk-scale instance sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Density below which three sets count as an extreme (sparse) triple.
    pub delta0: f64,
    /// Degree fraction used to split the extreme partition into A'/B'/C'.
    pub theta: f64,
    /// Slack below 2/3 tolerated by the augmentation step.
    pub eps_prime: f64,
    pub seed: u64,
    /// Largest class size for which the exact oracle is used as fallback.
    pub exact_limit: usize,
    /// Node budget of the exact oracle.
    pub budget: u64,
    /// Typicality slack: a vertex is typical in its cluster when it misses at
    /// most this fraction of every model-edge partner cluster.
    pub eta: f64,
    /// Largest fraction of a half that may be exchanged when placing colored vertices.
    pub exchange_frac: f64,
    /// Overlap fractions strictly between these bounds are inconclusive.
    pub overlap_band: (f64, f64),
}

impl Default for Config {
    fn default() -> Self {
        Self {
            delta0: 0.05,
            theta: 0.8,
            eps_prime: 0.02,
            seed: 0,
            exact_limit: 15,
            budget: 100_000_000,
            eta: 0.25,
            exchange_frac: 0.05,
            overlap_band: (0.25, 0.75),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return Err(ConfigError::Delta0(self.delta0));
        }
        if !(self.theta > 0.75 && self.theta < 1.0) {
            return Err(ConfigError::Theta(self.theta));
        }
        if !(self.eps_prime >= 0.0 && self.eps_prime < 1.0 / 12.0) {
            return Err(ConfigError::EpsPrime(self.eps_prime));
        }
        if self.exact_limit > crate::exact::MAX_CLASS {
            return Err(ConfigError::ExactLimit(self.exact_limit));
        }
        for (name, v) in [("eta", self.eta), ("exchange_frac", self.exchange_frac)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Fraction(name, v));
            }
        }
        let (lo, hi) = self.overlap_band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(ConfigError::Fraction("overlap_band", lo));
        }
        Ok(())
    }
}

/// `r < x` for an exact rational and a float threshold.
pub fn ratio_lt(r: Rational64, x: f64) -> bool {
    match Rational64::approximate_float(x) {
        Some(q) => r < q,
        None => (*r.numer() as f64) < x * (*r.denom() as f64),
    }
}

/// `r <= x` for an exact rational and a float threshold.
pub fn ratio_le(r: Rational64, x: f64) -> bool {
    match Rational64::approximate_float(x) {
        Some(q) => r <= q,
        None => (*r.numer() as f64) <= x * (*r.denom() as f64),
    }
}

pub fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `ceil(x)` tolerant of float noise just above an integer.
pub(crate) fn ceil_tol(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// `floor(x)` tolerant of float noise just below an integer.
pub(crate) fn floor_tol(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r.max(0.0) as usize
    } else {
        x.floor().max(0.0) as usize
    }
}
