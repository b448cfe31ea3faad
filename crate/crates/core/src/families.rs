//! Generators for the extremal families `Θ_{m×n}` and `Γ_k`, their blow-ups and
//! noisy blow-ups, and random instances conditioned on a minimum cross-degree.
//!
//! Grid families are emitted as [`PartiteGraph`]s with one class per row. Vertex
//! `h_{i,j}` (row `i`, column `j`, both 0-indexed) is index `j` of class `i`.
//! Blow-ups keep clusters contiguous: the clone `r` of `(i, j)` is index
//! `j * t + r`, so column `j` of class `i` is the index range `j*t..(j+1)*t`.

use fixedbitset::FixedBitSet;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ceil_tol, floor_tol, GraphError, TripartiteGraph, VertexRef, CLASSES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("invalid family parameter: {0}")]
    InvalidParameter(String),
    #[error("graph has {0} classes, a tripartite graph needs 3")]
    NotTripartite(usize),
    #[error("class sizes {0:?} are not balanced")]
    Unbalanced(Vec<usize>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Multipartite graph with arbitrary class sizes; vertices carry a global id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartiteGraph {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    adj: Vec<FixedBitSet>,
}

impl PartiteGraph {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0;
        for &s in &sizes {
            offsets.push(total);
            total += s;
        }
        Self {
            sizes,
            offsets,
            adj: vec![FixedBitSet::with_capacity(total); total],
        }
    }

    pub fn classes(&self) -> usize {
        self.sizes.len()
    }

    pub fn class_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    /// Global id of vertex `index` in `class`.
    pub fn id(&self, class: usize, index: usize) -> usize {
        debug_assert!(index < self.sizes[class]);
        self.offsets[class] + index
    }

    /// `(class, index)` of a global id.
    pub fn locate(&self, id: usize) -> (usize, usize) {
        let class = self.offsets.partition_point(|&o| o <= id) - 1;
        (class, id - self.offsets[class])
    }

    /// Adds an undirected edge between two global ids of different classes.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert_ne!(self.locate(u).0, self.locate(v).0, "within-class edge");
        self.adj[u].insert(v);
        self.adj[v].insert(u);
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    pub fn neighbors(&self, u: usize) -> &FixedBitSet {
        &self.adj[u]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones(..)).sum::<usize>() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones(..)
    }

    /// Degree of `u` into class `class`.
    pub fn class_degree(&self, u: usize, class: usize) -> usize {
        let lo = self.offsets[class];
        self.adj[u].count_ones(lo..lo + self.sizes[class])
    }

    pub fn is_triangle_free(&self) -> bool {
        (0..self.vertex_count()).all(|u| {
            self.adj[u]
                .ones()
                .filter(|&v| v > u)
                .all(|v| self.adj[u].intersection(&self.adj[v]).all(|w| w < v))
        })
    }

    /// Downcast to a [`TripartiteGraph`]; needs exactly 3 equal classes.
    pub fn to_tripartite(&self) -> Result<TripartiteGraph, FamilyError> {
        if self.classes() != CLASSES {
            return Err(FamilyError::NotTripartite(self.classes()));
        }
        if self.sizes.iter().any(|&s| s != self.sizes[0]) {
            return Err(FamilyError::Unbalanced(self.sizes.clone()));
        }
        let n = self.sizes[0];
        Ok(TripartiteGraph::from_fn(n, |u, v| {
            self.adjacent(self.id(u.class, u.index), self.id(v.class, v.index))
        }))
    }

    /// Inverse of [`PartiteGraph::to_tripartite`].
    pub fn from_tripartite(g: &TripartiteGraph) -> Self {
        let n = g.n();
        let mut p = Self::new(vec![n; CLASSES]);
        for (u, v) in g.edges() {
            let (a, b) = (p.id(u.class, u.index), p.id(v.class, v.index));
            p.add_edge(a, b);
        }
        p
    }
}

/// `Θ_{m×n}`: `h_{i,j} ~ h_{i',j'}` iff `i != i'` and `j != j'`.
pub fn gen_theta(m: usize, n: usize) -> Result<PartiteGraph, FamilyError> {
    if m < 2 || n < 1 {
        return Err(FamilyError::InvalidParameter(format!("theta needs m >= 2, n >= 1 (got {m}x{n})")));
    }
    Ok(grid(m, n, |_, j, _, jj| j != jj))
}

/// `Γ_k`: cross-row pairs in different columns are adjacent when one column is
/// among the first `k - 2`; the last two columns are each complete across rows.
pub fn gen_gamma(k: usize) -> Result<PartiteGraph, FamilyError> {
    if k < 3 {
        return Err(FamilyError::InvalidParameter(format!("gamma needs k >= 3 (got {k})")));
    }
    Ok(grid(k, k, |_, j, _, jj| {
        (j != jj && (j < k - 2 || jj < k - 2)) || (j == jj && j >= k - 2)
    }))
}

fn grid(rows: usize, cols: usize, rule: impl Fn(usize, usize, usize, usize) -> bool) -> PartiteGraph {
    let mut g = PartiteGraph::new(vec![cols; rows]);
    for i in 0..rows {
        for ii in i + 1..rows {
            for j in 0..cols {
                for jj in 0..cols {
                    if rule(i, j, ii, jj) {
                        let (u, v) = (g.id(i, j), g.id(ii, jj));
                        g.add_edge(u, v);
                    }
                }
            }
        }
    }
    g
}

/// `G(t)`: every vertex becomes `t` clones, every edge a complete `K_{t,t}`.
pub fn blow_up(g: &PartiteGraph, t: usize) -> Result<PartiteGraph, FamilyError> {
    if t < 1 {
        return Err(FamilyError::InvalidParameter("blow-up factor must be >= 1".into()));
    }
    let sizes: Vec<usize> = g.sizes.iter().map(|&s| s * t).collect();
    let mut h = PartiteGraph::new(sizes);
    for u in 0..g.vertex_count() {
        let (cu, iu) = g.locate(u);
        for v in g.neighbors(u).ones().filter(|&v| v > u) {
            let (cv, iv) = g.locate(v);
            for r in 0..t {
                for s in 0..t {
                    let (a, b) = (h.id(cu, iu * t + r), h.id(cv, iv * t + s));
                    h.add_edge(a, b);
                }
            }
        }
    }
    Ok(h)
}

/// Realized density of one model non-edge after noise was planted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDensity {
    /// Model vertices `(class, index)` of the two clusters.
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub edges: usize,
    pub density: f64,
}

/// A noisy blow-up together with its planted clusters and realized noise.
#[derive(Clone, Debug)]
pub struct ApproxBlowUp {
    pub graph: PartiteGraph,
    /// For every global vertex id, the model vertex `(class, index)` it clones.
    pub cluster_of: Vec<(usize, usize)>,
    /// `sizes[class][index]`: size of the cluster replacing model vertex `(class, index)`.
    pub sizes: Vec<Vec<usize>>,
    /// Realized densities of all cross-class model non-edges.
    pub nonedge_densities: Vec<PairDensity>,
    pub max_nonedge_density: Rational64,
}

/// `(eps, delta)`-approximate blow-up: cluster sizes uniform in
/// `[(1-eps)t, (1+eps)t]`, model edges complete, model non-edges random with
/// edge probability `delta_density`.
pub fn approx_blow_up(
    g: &PartiteGraph,
    t: usize,
    eps: f64,
    delta_density: f64,
    seed: u64,
) -> Result<ApproxBlowUp, FamilyError> {
    if t < 1 || !(0.0..1.0).contains(&eps) || !(0.0..=1.0).contains(&delta_density) {
        return Err(FamilyError::InvalidParameter(format!(
            "approx blow-up needs t >= 1, 0 <= eps < 1, 0 <= delta <= 1 (got t={t}, eps={eps}, delta={delta_density})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = ceil_tol((1.0 - eps) * t as f64).max(1);
    let hi = floor_tol((1.0 + eps) * t as f64).max(lo);
    let sizes: Vec<Vec<usize>> = g
        .sizes
        .iter()
        .map(|&s| (0..s).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect();
    let class_sizes: Vec<usize> = sizes.iter().map(|row| row.iter().sum()).collect();
    let mut h = PartiteGraph::new(class_sizes);
    let mut cluster_of = Vec::with_capacity(h.vertex_count());
    let mut members: Vec<Vec<Vec<usize>>> = Vec::with_capacity(g.classes());
    for (c, row) in sizes.iter().enumerate() {
        let mut next = 0;
        let mut per = Vec::with_capacity(row.len());
        for (j, &s) in row.iter().enumerate() {
            per.push((next..next + s).map(|i| h.id(c, i)).collect::<Vec<_>>());
            cluster_of.extend(std::iter::repeat_n((c, j), s));
            next += s;
        }
        members.push(per);
    }
    let mut nonedge_densities = Vec::new();
    let mut max_density = Rational64::from_integer(0);
    for u in 0..g.vertex_count() {
        let (cu, iu) = g.locate(u);
        for v in u + 1..g.vertex_count() {
            let (cv, iv) = g.locate(v);
            if cu == cv {
                continue;
            }
            let (xs, ys) = (&members[cu][iu], &members[cv][iv]);
            if g.adjacent(u, v) {
                for &x in xs {
                    for &y in ys {
                        h.add_edge(x, y);
                    }
                }
            } else {
                let mut edges = 0;
                for &x in xs {
                    for &y in ys {
                        if delta_density > 0.0 && rng.gen_bool(delta_density) {
                            h.add_edge(x, y);
                            edges += 1;
                        }
                    }
                }
                let d = Rational64::new(edges as i64, (xs.len() * ys.len()) as i64);
                max_density = max_density.max(d);
                nonedge_densities.push(PairDensity {
                    a: (cu, iu),
                    b: (cv, iv),
                    edges,
                    density: edges as f64 / (xs.len() * ys.len()) as f64,
                });
            }
        }
    }
    Ok(ApproxBlowUp {
        graph: h,
        cluster_of,
        sizes,
        nonedge_densities,
        max_nonedge_density: max_density,
    })
}

/// Random balanced tripartite graph with every cross-degree at least
/// `ceil(delta_frac * n)`.
///
/// Each class pair starts as `G(n, n, p = delta_frac)`; then, while some vertex
/// is short, the lowest-degree short vertex (ties: lower class side, then lower
/// index) gains an edge to its lowest-degree non-neighbour (ties: lower index).
pub fn gen_random_min_degree(n: usize, delta_frac: f64, seed: u64) -> Result<TripartiteGraph, FamilyError> {
    if !(0.0..=1.0).contains(&delta_frac) {
        return Err(FamilyError::InvalidParameter(format!("degree fraction {delta_frac} not in [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = ceil_tol(delta_frac * n as f64).min(n);
    let mut g = TripartiteGraph::empty(n);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let mut deg = [vec![0usize; n], vec![0usize; n]];
        for i in 0..n {
            for j in 0..n {
                if rng.gen_bool(delta_frac) {
                    g.set_edge(VertexRef::new(a, i), VertexRef::new(b, j));
                    deg[0][i] += 1;
                    deg[1][j] += 1;
                }
            }
        }
        loop {
            let short = (0..2)
                .flat_map(|side| (0..n).map(move |i| (side, i)))
                .filter(|&(side, i)| deg[side][i] < target)
                .min_by_key(|&(side, i)| (deg[side][i], side, i));
            let Some((side, i)) = short else { break };
            let (this, other) = if side == 0 { (a, b) } else { (b, a) };
            let v = VertexRef::new(this, i);
            let partner = (0..n)
                .filter(|&j| !g.adjacent(v, VertexRef::new(other, j)))
                .min_by_key(|&j| (deg[1 - side][j], j))
                .expect("a short vertex always has a non-neighbour");
            g.set_edge(v, VertexRef::new(other, partner));
            deg[side][i] += 1;
            deg[1 - side][partner] += 1;
        }
    }
    Ok(g)
}

/// `g` plus the non-edge `u -- v`.
pub fn mutate_add_edge(g: &TripartiteGraph, u: VertexRef, v: VertexRef) -> Result<TripartiteGraph, FamilyError> {
    Ok(g.with_edge(u, v)?)
}

/// `Γ_3(t)` as a tripartite graph.
pub fn gamma3(t: usize) -> TripartiteGraph {
    blow_up(&gen_gamma(3).unwrap(), t)
        .and_then(|g| g.to_tripartite())
        .expect("gamma3 blow-up is balanced")
}

/// `Θ_{3×3}(t)` as a tripartite graph.
pub fn theta3x3(t: usize) -> TripartiteGraph {
    blow_up(&gen_theta(3, 3).unwrap(), t)
        .and_then(|g| g.to_tripartite())
        .expect("theta blow-up is balanced")
}

/// `Θ_{3×2}(t)` as a tripartite graph.
pub fn theta3x2(t: usize) -> TripartiteGraph {
    blow_up(&gen_theta(3, 2).unwrap(), t)
        .and_then(|g| g.to_tripartite())
        .expect("theta blow-up is balanced")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FamilyKind {
    Theta { m: usize, n: usize },
    Gamma { k: usize },
    CompleteTripartite { n: usize },
    RandomMinDegree { n: usize, delta_frac: f64 },
}

/// Declarative description of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub t: usize,
    /// `(eps, delta_density)` for approximate blow-ups; `(0, 0)` is exact.
    pub noise: (f64, f64),
    pub seed: u64,
}

impl FamilySpec {
    pub fn exact(kind: FamilyKind, t: usize) -> Self {
        Self {
            kind,
            t,
            noise: (0.0, 0.0),
            seed: 0,
        }
    }

    /// Generates the instance as a tripartite graph. Grid families must have
    /// three rows; approximate blow-ups must come out balanced.
    pub fn build(&self) -> Result<TripartiteGraph, FamilyError> {
        let base = match self.kind {
            FamilyKind::Theta { m, n } => gen_theta(m, n)?,
            FamilyKind::Gamma { k } => gen_gamma(k)?,
            FamilyKind::CompleteTripartite { n } => PartiteGraph::from_tripartite(&TripartiteGraph::complete(n)),
            FamilyKind::RandomMinDegree { n, delta_frac } => {
                let g = gen_random_min_degree(n, delta_frac, self.seed)?;
                PartiteGraph::from_tripartite(&g)
            }
        };
        let (eps, delta) = self.noise;
        if eps == 0.0 && delta == 0.0 {
            blow_up(&base, self.t)?.to_tripartite()
        } else {
            approx_blow_up(&base, self.t, eps, delta, self.seed)?.graph.to_tripartite()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::other_classes;

    #[test]
    fn theta_3x2_counts() {
        let g = gen_theta(3, 2).unwrap();
        assert_eq!(g.vertex_count(), 6);
        assert_eq!(g.edge_count(), 6);
        assert!(g.is_triangle_free());
    }

    #[test]
    fn theta_3x3_counts() {
        let g = gen_theta(3, 3).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.edge_count(), 18);
        for u in 0..9 {
            let (c, _) = g.locate(u);
            for o in other_classes(c) {
                assert_eq!(g.class_degree(u, o), 2);
            }
        }
    }

    #[test]
    fn theta_2x1_is_edgeless() {
        let g = gen_theta(2, 1).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 0);
        assert!(gen_theta(1, 3).is_err());
    }

    #[test]
    fn gamma3_structure() {
        let g = gen_gamma(3).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.edge_count(), 18);
        for u in 0..9 {
            assert_eq!(g.degree(u), 4);
            let (c, _) = g.locate(u);
            for o in other_classes(c) {
                assert_eq!(g.class_degree(u, o), 2);
            }
        }
        // columns 1 and 2 (0-indexed) never meet
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert!(!g.adjacent(g.id(a, 1), g.id(b, 2)));
                }
            }
        }
        // the last two columns each carry a transversal triangle
        for col in [1, 2] {
            assert!(g.adjacent(g.id(0, col), g.id(1, col)));
            assert!(g.adjacent(g.id(0, col), g.id(2, col)));
            assert!(g.adjacent(g.id(1, col), g.id(2, col)));
        }
        assert!(gen_gamma(2).is_err());
    }

    #[test]
    fn gamma_general_k_matches_rule() {
        let k = 5;
        let g = gen_gamma(k).unwrap();
        for u in 0..g.vertex_count() {
            for v in 0..g.vertex_count() {
                let ((i, j), (ii, jj)) = (g.locate(u), g.locate(v));
                let expect = i != ii
                    && ((j != jj && (j < k - 2 || jj < k - 2)) || (j == jj && j >= k - 2));
                assert_eq!(g.adjacent(u, v), expect, "{:?} {:?}", (i, j), (ii, jj));
            }
        }
    }

    #[test]
    fn blow_up_identity_and_counts() {
        let g = gen_theta(3, 2).unwrap();
        assert_eq!(blow_up(&g, 1).unwrap(), g);
        let h = blow_up(&g, 2).unwrap();
        assert_eq!(h.vertex_count(), 12);
        assert_eq!(h.edge_count(), 24);
        assert!(h.is_triangle_free());
        let gamma = gamma3(2);
        assert_eq!(gamma.n(), 6);
        assert_eq!(gamma.min_cross_degree(), 4);
    }

    #[test]
    fn approx_blow_up_without_noise_is_exact() {
        let g = gen_gamma(3).unwrap();
        for seed in 0..3 {
            let a = approx_blow_up(&g, 3, 0.0, 0.0, seed).unwrap();
            assert_eq!(a.graph, blow_up(&g, 3).unwrap());
            assert_eq!(a.max_nonedge_density, Rational64::from_integer(0));
        }
    }

    #[test]
    fn approx_blow_up_cluster_sizes_in_range() {
        let g = gen_gamma(3).unwrap();
        for seed in 0..20 {
            let a = approx_blow_up(&g, 4, 0.25, 0.0, seed).unwrap();
            for row in &a.sizes {
                for &s in row {
                    assert!((3..=5).contains(&s), "size {s}");
                }
            }
            assert_eq!(a.cluster_of.len(), a.graph.vertex_count());
        }
    }

    #[test]
    fn approx_blow_up_reports_realized_density() {
        let g = gen_theta(3, 2).unwrap();
        let a = approx_blow_up(&g, 10, 0.0, 0.04, 7).unwrap();
        // three class pairs, two model non-edges each
        assert_eq!(a.nonedge_densities.len(), 6);
        let max = a.nonedge_densities.iter().map(|p| p.density).fold(0.0, f64::max);
        assert!((max - crate::graph::ratio_to_f64(a.max_nonedge_density)).abs() < 1e-12);
        let noise: usize = a.nonedge_densities.iter().map(|p| p.edges).sum();
        assert_eq!(a.graph.edge_count(), 6 * 100 + noise);
    }

    #[test]
    fn random_min_degree_full_and_floor() {
        assert_eq!(gen_random_min_degree(5, 1.0, 3).unwrap(), TripartiteGraph::complete(5));
        for seed in 0..30 {
            let g = gen_random_min_degree(9, 2.0 / 3.0, seed).unwrap();
            assert!(g.min_cross_degree() >= 6);
        }
        let a = gen_random_min_degree(12, 0.7, 11).unwrap();
        let b = gen_random_min_degree(12, 0.7, 11).unwrap();
        assert_eq!(a, b);
        assert!(gen_random_min_degree(4, 1.5, 0).is_err());
    }

    #[test]
    fn add_edge_rejects_existing() {
        let g = gamma3(1);
        let (u, v) = (VertexRef::new(0, 0), VertexRef::new(1, 1));
        assert!(g.adjacent(u, v));
        assert!(mutate_add_edge(&g, u, v).is_err());
        let w = VertexRef::new(1, 2);
        let h = mutate_add_edge(&g, VertexRef::new(0, 1), w).unwrap();
        assert_eq!(h.edge_count(), g.edge_count() + 1);
        assert_eq!(g.edge_count(), 18);
    }

    #[test]
    fn spec_builds_tripartite() {
        let g = FamilySpec::exact(FamilyKind::Gamma { k: 3 }, 2).build().unwrap();
        assert_eq!(g, gamma3(2));
        let spec = FamilySpec::exact(FamilyKind::Theta { m: 4, n: 2 }, 1);
        assert!(matches!(spec.build(), Err(FamilyError::NotTripartite(4))));
    }
}
