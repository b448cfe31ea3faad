//! One improvement step of a partial triangle cover.
//!
//! The search escalates: a triangle among uncovered vertices, then exchanges
//! that take out one or two cover triangles and put back one more, then the
//! pinned-edge phase. That phase first creates six disjoint uncovered edges
//! (two per class pair) by size-preserving exchanges and then looks for a
//! triangle in the sets those edges single out. When that triple of sets is
//! triangle-free it is split as an approximate `Θ_{3×2}` and one column
//! triple becomes the extreme witness.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;

use super::{trim_extreme, ExtremeWitness, SolverError};
use crate::extremal::theta32_split;
use crate::graph::{ceil_tol, other_classes, Config, TripartiteGraph, Triangle, TriangleCover, VertexRef, CLASSES};

/// Largest number of new triangles one step may introduce.
pub const MAX_CHANGED: usize = 15;

/// Node budget of one augmentation step across all searches.
const STEP_BUDGET: u64 = 4_000_000;

/// Input of [`augment_once`].
#[derive(Clone, Debug)]
pub struct AugmentState {
    pub cover: TriangleCover,
}

impl AugmentState {
    pub fn new(cover: TriangleCover) -> Self {
        Self { cover }
    }
}

#[derive(Clone, Debug)]
pub enum AugmentStep {
    /// A strictly larger cover; `changed = |𝒯 ∖ 𝒯₀|`.
    Improved { cover: TriangleCover, changed: usize },
    Extreme(ExtremeWitness),
    Stuck,
}

/// Checks the step's preconditions: the cover is not perfect and the min
/// degree is at least `(2/3 - ε')N`. Improvement is only guaranteed with at
/// least four uncovered vertices per class; smaller gaps are still searched.
pub fn check_preconditions(g: &TripartiteGraph, cover: &TriangleCover, cfg: &Config) -> Result<(), SolverError> {
    let n = g.n();
    if cover.len() >= n {
        return Err(SolverError::PreconditionViolated("cover is already perfect".into()));
    }
    let floor = ceil_tol((2.0 / 3.0 - cfg.eps_prime) * n as f64);
    let d = g.min_cross_degree();
    if d < floor {
        return Err(SolverError::PreconditionViolated(format!("min degree {d} below {floor}")));
    }
    Ok(())
}

/// Mutable working copy of a cover with vertex ownership.
#[derive(Clone)]
struct Work<'g> {
    g: &'g TripartiteGraph,
    tris: Vec<Triangle>,
}

impl<'g> Work<'g> {
    fn uncovered(&self) -> [FixedBitSet; CLASSES] {
        let n = self.g.n();
        let mut u: [FixedBitSet; CLASSES] = std::array::from_fn(|_| crate::graph::full_set(n));
        for t in &self.tris {
            for c in 0..CLASSES {
                u[c].set(t.v[c], false);
            }
        }
        u
    }

    fn owner(&self) -> [Vec<Option<usize>>; CLASSES] {
        let n = self.g.n();
        let mut o: [Vec<Option<usize>>; CLASSES] = std::array::from_fn(|_| vec![None; n]);
        for (k, t) in self.tris.iter().enumerate() {
            for c in 0..CLASSES {
                o[c][t.v[c]] = Some(k);
            }
        }
        o
    }

    /// Replaces the triangles at `removed` by `added`.
    fn replace(&mut self, removed: &[usize], added: &[Triangle]) {
        let mut idx = removed.to_vec();
        idx.sort_unstable_by(|a, b| b.cmp(a));
        idx.dedup();
        for k in idx {
            self.tris.swap_remove(k);
        }
        self.tris.extend_from_slice(added);
    }

    fn to_cover(&self) -> TriangleCover {
        TriangleCover::from_triangles(self.g.n(), self.tris.iter().copied()).expect("working cover stays disjoint")
    }
}

/// Triangles through `v` with the other two vertices in `free`.
fn triangles_through(g: &TripartiteGraph, v: VertexRef, free: &[FixedBitSet; CLASSES], out: &mut Vec<Triangle>) {
    let [a, b] = other_classes(v.class);
    let mut na = g.neighbors(v, a).clone();
    na.intersect_with(&free[a]);
    for x in na.ones() {
        let mut nb = g.neighbors(v, b).clone();
        nb.intersect_with(&free[b]);
        nb.intersect_with(g.neighbors(VertexRef::new(a, x), b));
        for y in nb.ones() {
            let mut idx = [0; CLASSES];
            idx[v.class] = v.index;
            idx[a] = x;
            idx[b] = y;
            out.push(Triangle::from_indices(idx));
        }
    }
}

fn take(free: &mut [FixedBitSet; CLASSES], t: &Triangle, on: bool) {
    for c in 0..CLASSES {
        free[c].set(t.v[c], on);
    }
}

/// Finds `need` disjoint triangles in `free`, each through at least one
/// vertex of `must`. Complete when `free` minus `must` is triangle-free.
fn pack(
    g: &TripartiteGraph,
    free: &mut [FixedBitSet; CLASSES],
    must: &[VertexRef],
    i: usize,
    need: usize,
    acc: &mut Vec<Triangle>,
    budget: &mut u64,
) -> bool {
    if acc.len() >= need {
        return true;
    }
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let open = must[i..].iter().filter(|v| free[v.class].contains(v.index)).count();
    if acc.len() + open < need {
        return false;
    }
    let v = must[i];
    if free[v.class].contains(v.index) {
        let mut cands = Vec::new();
        triangles_through(g, v, free, &mut cands);
        for t in cands {
            take(free, &t, false);
            acc.push(t);
            if pack(g, free, must, i + 1, need, acc, budget) {
                return true;
            }
            acc.pop();
            take(free, &t, true);
        }
    }
    pack(g, free, must, i + 1, need, acc, budget)
}

fn triangle_in(g: &TripartiteGraph, s: &[FixedBitSet; CLASSES]) -> Option<Triangle> {
    let mut out = Vec::new();
    for x in s[0].ones() {
        triangles_through(g, VertexRef::new(0, x), s, &mut out);
        if let Some(&t) = out.first() {
            return Some(t);
        }
    }
    None
}

/// Removes the triangles `removed` and tries to place `removed.len() + extra`
/// triangles in the freed vertices plus `pool`.
fn repack(
    w: &Work,
    pool: &[FixedBitSet; CLASSES],
    removed: &[usize],
    extra: usize,
    budget: &mut u64,
) -> Option<Vec<Triangle>> {
    let mut free = pool.clone();
    let mut must = Vec::with_capacity(3 * removed.len());
    for &k in removed {
        for v in w.tris[k].vertices() {
            free[v.class].insert(v.index);
            must.push(v);
        }
    }
    let mut acc = Vec::new();
    pack(w.g, &mut free, &must, 0, removed.len() + extra, &mut acc, budget).then_some(acc)
}

fn changed(before: &TriangleCover, after: &[Triangle]) -> usize {
    let old: HashSet<&Triangle> = before.triangles().iter().collect();
    after.iter().filter(|t| !old.contains(t)).count()
}

/// Cover triangles with a vertex that some uncovered vertex could replace.
fn swappable(w: &Work, u: &[FixedBitSet; CLASSES]) -> Vec<usize> {
    (0..w.tris.len())
        .filter(|&k| {
            let t = &w.tris[k];
            (0..CLASSES).any(|c| {
                let [a, b] = other_classes(c);
                let mut s = u[c].clone();
                s.intersect_with(w.g.neighbors(t.vertex(a), c));
                s.intersect_with(w.g.neighbors(t.vertex(b), c));
                !s.is_clear()
            })
        })
        .collect()
}

/// Improvements that take out one or two triangles and put back one more.
fn small_exchange<'g>(w: &Work<'g>, budget: &mut u64) -> Option<Work<'g>> {
    let u = w.uncovered();
    if let Some(t) = triangle_in(w.g, &u) {
        let mut out = w.clone();
        out.replace(&[], &[t]);
        return Some(out);
    }
    for k in 0..w.tris.len() {
        if let Some(add) = repack(w, &u, &[k], 1, budget) {
            let mut out = w.clone();
            out.replace(&[k], &add);
            return Some(out);
        }
    }
    let cands = swappable(w, &u);
    for (p, &k1) in cands.iter().enumerate() {
        for &k2 in &cands[p + 1..] {
            if *budget == 0 {
                return None;
            }
            if let Some(add) = repack(w, &u, &[k1, k2], 1, budget) {
                let mut out = w.clone();
                out.replace(&[k1, k2], &add);
                return Some(out);
            }
        }
    }
    None
}

/// Creates an uncovered edge between classes `a` and `b` that avoids
/// `pinned`, by a size-preserving exchange of at most two triangles.
fn pin_edge<'g>(
    w: &Work<'g>,
    a: usize,
    b: usize,
    pinned: &[FixedBitSet; CLASSES],
    budget: &mut u64,
) -> Option<(Work<'g>, (usize, usize))> {
    let g = w.g;
    let mut u = w.uncovered();
    for c in 0..CLASSES {
        u[c].difference_with(&pinned[c]);
    }
    for x in u[a].ones() {
        let mut ys = g.neighbors(VertexRef::new(a, x), b).clone();
        ys.intersect_with(&u[b]);
        if let Some(y) = ys.ones().next() {
            return Some((w.clone(), (x, y)));
        }
    }
    let try_removal = |removed: &[usize], budget: &mut u64| -> Option<(Work<'g>, (usize, usize))> {
        let mut free = u.clone();
        let mut must = Vec::new();
        for &k in removed {
            for v in w.tris[k].vertices() {
                free[v.class].insert(v.index);
                must.push(v);
            }
        }
        let in_removed = |v: VertexRef| must.contains(&v);
        for x in free[a].clone().ones() {
            let xv = VertexRef::new(a, x);
            let mut ys = g.neighbors(xv, b).clone();
            ys.intersect_with(&free[b]);
            for y in ys.ones() {
                let yv = VertexRef::new(b, y);
                if !in_removed(xv) && !in_removed(yv) {
                    continue;
                }
                let mut rest = free.clone();
                rest[a].set(x, false);
                rest[b].set(y, false);
                let must_rest: Vec<VertexRef> = must.iter().copied().filter(|&v| v != xv && v != yv).collect();
                let mut acc = Vec::new();
                if pack(g, &mut rest, &must_rest, 0, removed.len(), &mut acc, budget) {
                    let mut out = w.clone();
                    out.replace(removed, &acc);
                    return Some((out, (x, y)));
                }
                if *budget == 0 {
                    return None;
                }
            }
        }
        None
    };
    for k in 0..w.tris.len() {
        if let Some(r) = try_removal(&[k], budget) {
            return Some(r);
        }
    }
    let cands = swappable(w, &w.uncovered());
    for (p, &k1) in cands.iter().enumerate() {
        for &k2 in &cands[p + 1..] {
            if *budget == 0 {
                return None;
            }
            if let Some(r) = try_removal(&[k1, k2], budget) {
                return Some(r);
            }
        }
    }
    None
}

/// Class pair of each pinned edge, in the order `e1, e2, f1, f3, g2, g3`.
const PIN_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2)];

/// Vertices of class `target` in cover triangles whose class-`anchor` vertex
/// sees both ends of `edge`.
fn anchored(w: &Work, anchor: usize, target: usize, edge: ((usize, usize), (usize, usize))) -> FixedBitSet {
    let ((ca, ia), (cb, ib)) = edge;
    let mut s = FixedBitSet::with_capacity(w.g.n());
    for t in &w.tris {
        let v = t.vertex(anchor);
        if w.g.adjacent(v, VertexRef::new(ca, ia)) && w.g.adjacent(v, VertexRef::new(cb, ib)) {
            s.insert(t.v[target]);
        }
    }
    s
}

/// Performs one augmentation step.
pub fn augment_once(g: &TripartiteGraph, state: &AugmentState, cfg: &Config) -> Result<AugmentStep, SolverError> {
    let start = &state.cover;
    check_preconditions(g, start, cfg)?;
    let n = g.n();
    let mut budget = STEP_BUDGET;
    let w0 = Work {
        g,
        tris: start.triangles().to_vec(),
    };
    let accept = |w: &Work| -> Option<AugmentStep> {
        let c = changed(start, &w.tris);
        (w.tris.len() > start.len() && c <= MAX_CHANGED).then(|| AugmentStep::Improved {
            cover: w.to_cover(),
            changed: c,
        })
    };

    if let Some(w) = small_exchange(&w0, &mut budget) {
        if let Some(step) = accept(&w) {
            return Ok(step);
        }
    }

    // Pinned-edge phase.
    let mut w = w0.clone();
    let mut pinned: [FixedBitSet; CLASSES] = std::array::from_fn(|_| FixedBitSet::with_capacity(n));
    let mut edges: Vec<((usize, usize), (usize, usize))> = Vec::with_capacity(6);
    for &(a, b) in &PIN_PAIRS {
        let Some((next, (x, y))) = pin_edge(&w, a, b, &pinned, &mut budget) else {
            return Ok(extreme_or_stuck(g, &w, None, cfg));
        };
        w = next;
        pinned[a].insert(x);
        pinned[b].insert(y);
        edges.push(((a, x), (b, y)));
        // An exchange may already have opened up an improvement.
        if let Some(t) = triangle_in(g, &w.uncovered()) {
            let mut better = w.clone();
            better.replace(&[], &[t]);
            if let Some(step) = accept(&better) {
                return Ok(step);
            }
        }
    }
    let a1 = anchored(&w, 0, 1, edges[4]);
    let a2 = anchored(&w, 0, 2, edges[5]);
    let b0 = anchored(&w, 1, 0, edges[2]);
    let b2 = anchored(&w, 1, 2, edges[3]);
    let c0 = anchored(&w, 2, 0, edges[0]);
    let c1 = anchored(&w, 2, 1, edges[1]);
    let mut xs = [b0, a1, a2];
    xs[0].union_with(&c0);
    xs[1].union_with(&c1);
    xs[2].union_with(&b2);

    let u = w.uncovered();
    let owner = w.owner();
    let mut tried: HashSet<Vec<usize>> = HashSet::new();
    let mut any_triangle = false;
    let mut found = Vec::new();
    for x in xs[0].ones() {
        found.clear();
        triangles_through(g, VertexRef::new(0, x), &xs, &mut found);
        for t in &found {
            any_triangle = true;
            let mut removed: Vec<usize> = (0..CLASSES).filter_map(|c| owner[c][t.v[c]]).collect();
            removed.sort_unstable();
            removed.dedup();
            if !tried.insert(removed.clone()) {
                continue;
            }
            if let Some(add) = repack(&w, &u, &removed, 1, &mut budget) {
                let mut better = w.clone();
                better.replace(&removed, &add);
                if let Some(step) = accept(&better) {
                    return Ok(step);
                }
            }
            if budget == 0 {
                return Ok(AugmentStep::Stuck);
            }
        }
    }
    if let Some(better) = small_exchange(&w, &mut budget) {
        if let Some(step) = accept(&better) {
            return Ok(step);
        }
    }
    Ok(extreme_or_stuck(g, &w, (!any_triangle).then_some(&xs), cfg))
}

/// Looks for a sparse triple of size `floor(N/3)`: from the `Θ_{3×2}` split
/// of a triangle-free triple when one is given, and from the common
/// non-neighbourhoods of uncovered vertices.
fn extreme_or_stuck(g: &TripartiteGraph, w: &Work, triangle_free: Option<&[FixedBitSet; CLASSES]>, cfg: &Config) -> AugmentStep {
    let n = g.n();
    let s = n / 3;
    if s == 0 {
        return AugmentStep::Stuck;
    }
    let mut candidates: Vec<[FixedBitSet; CLASSES]> = Vec::new();
    if let Some(xs) = triangle_free {
        if let Some(split) = theta32_split(g, xs, s, 0.5, None) {
            for col in 0..2 {
                candidates.push(std::array::from_fn(|c| split.cols[c][col].clone()));
            }
        }
    }
    let u = w.uncovered();
    for c in 0..CLASSES {
        for i in u[c].ones() {
            candidates.push(non_neighbourhood_seed(g, VertexRef::new(c, i), s));
        }
    }
    for cand in candidates {
        if let Some(wit) = trim_extreme(g, &cand, s, cfg.delta0) {
            return AugmentStep::Extreme(wit);
        }
    }
    AugmentStep::Stuck
}

/// `V_o ∖ N(v)` for the two other classes, and in `v`'s class the `s`
/// vertices least attached to those two sets.
pub(crate) fn non_neighbourhood_seed(g: &TripartiteGraph, v: VertexRef, s: usize) -> [FixedBitSet; CLASSES] {
    let n = g.n();
    let mut sets: [FixedBitSet; CLASSES] = std::array::from_fn(|_| FixedBitSet::with_capacity(n));
    for o in other_classes(v.class) {
        let mut m = g.neighbors(v, o).clone();
        m.toggle_range(..);
        sets[o] = m;
    }
    let [a, b] = other_classes(v.class);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| {
        let x = VertexRef::new(v.class, i);
        (g.degree_into(x, a, &sets[a]) + g.degree_into(x, b, &sets[b]), i)
    });
    sets[v.class].extend(order.into_iter().take(s));
    sets
}
