use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use super::{ExtremalError, Model, StructureWitness};
use crate::graph::{TripartiteGraph, Triangle, VertexRef, CLASSES};

/// Result of the parity search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Three disjoint triangles that together use every cluster exactly once.
    Triangles([Triangle; 3]),
    /// The graph is exactly `Γ₃(t)`: no parity triangles can exist.
    GammaExact,
}

/// Column patterns of three triangles that together meet every cluster once.
/// `combo[k][c]` is the column triangle `k` uses in class `c`.
type Combo = [[usize; CLASSES]; 3];

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Number of model non-edges a combo needs.
fn combo_cost(model: Model, combo: &Combo) -> usize {
    combo
        .iter()
        .map(|p| {
            [(0, 1), (0, 2), (1, 2)]
                .iter()
                .filter(|&&(a, b)| !model.is_edge(p[a], p[b]))
                .count()
        })
        .sum()
}

/// All 36 Latin combos. For `Θ_{3×3}` the two transversal orders come first.
fn combos(model: Model) -> Vec<Combo> {
    let mut out: Vec<Combo> = Vec::with_capacity(36);
    if model == Model::Theta33 {
        out.push([[0, 1, 2], [2, 0, 1], [1, 2, 0]]);
        out.push([[0, 2, 1], [1, 0, 2], [2, 1, 0]]);
    }
    let mut rest = Vec::new();
    for p1 in PERMS {
        for p2 in PERMS {
            let combo: Combo = std::array::from_fn(|k| [k, p1[k], p2[k]]);
            let mut key = combo;
            key.sort();
            if !out.iter().any(|c| {
                let mut s = *c;
                s.sort();
                s == key
            }) {
                rest.push(combo);
            }
        }
    }
    rest.sort_by_key(|c| combo_cost(model, c));
    out.extend(rest);
    out
}

/// Candidate cap per triangle slot during the disjointness search.
const SLOT_CAP: usize = 256;

fn triangles_in(
    g: &TripartiteGraph,
    sets: [&FixedBitSet; CLASSES],
    used: &[FixedBitSet; CLASSES],
    cap: usize,
) -> Vec<Triangle> {
    let mut out = Vec::new();
    for u in sets[0].ones().filter(|&u| !used[0].contains(u)) {
        let uv = VertexRef::new(0, u);
        let mut s1 = g.neighbors(uv, 1).clone();
        s1.intersect_with(sets[1]);
        s1.difference_with(&used[1]);
        for v in s1.ones() {
            let mut s2 = g.neighbors(uv, 2).clone();
            s2.intersect_with(g.neighbors(VertexRef::new(1, v), 2));
            s2.intersect_with(sets[2]);
            s2.difference_with(&used[2]);
            for w in s2.ones() {
                out.push(Triangle::from_indices([u, v, w]));
                if out.len() >= cap {
                    return out;
                }
            }
        }
    }
    out
}

fn place(
    g: &TripartiteGraph,
    clusters: &[Vec<FixedBitSet>; CLASSES],
    combo: &Combo,
    k: usize,
    used: &mut [FixedBitSet; CLASSES],
    acc: &mut Vec<Triangle>,
) -> bool {
    if k == 3 {
        return true;
    }
    let sets = std::array::from_fn(|c| &clusters[c][combo[k][c]]);
    for t in triangles_in(g, sets, used, SLOT_CAP) {
        for c in 0..CLASSES {
            used[c].insert(t.v[c]);
        }
        acc.push(t);
        if place(g, clusters, combo, k + 1, used, acc) {
            return true;
        }
        acc.pop();
        for c in 0..CLASSES {
            used[c].set(t.v[c], false);
        }
    }
    false
}

/// Parity search over explicit clusters, skipping vertices in `avoid`.
pub(crate) fn parity_search(
    g: &TripartiteGraph,
    model: Model,
    clusters: &[Vec<FixedBitSet>; CLASSES],
    avoid: &[FixedBitSet; CLASSES],
) -> Option<[Triangle; 3]> {
    for combo in combos(model) {
        let mut used = avoid.clone();
        let mut acc = Vec::with_capacity(3);
        if place(g, clusters, &combo, 0, &mut used, &mut acc) {
            return Some([acc[0], acc[1], acc[2]]);
        }
    }
    None
}

/// Looks for three disjoint triangles meeting every cluster of `sw` once.
pub fn find_parity_triangles(g: &TripartiteGraph, sw: &StructureWitness) -> Result<Parity, ExtremalError> {
    if sw.model == Model::Theta32 {
        return Err(ExtremalError::ModelMismatch(sw.model));
    }
    let avoid = std::array::from_fn(|_| FixedBitSet::with_capacity(g.n()));
    if let Some(ts) = parity_search(g, sw.model, &sw.clusters(), &avoid) {
        return Ok(Parity::Triangles(ts));
    }
    if sw.model == Model::Gamma3 && is_exact_model(g, sw) {
        return Ok(Parity::GammaExact);
    }
    Err(ExtremalError::NoParityTriangles)
}

/// Whether `g` is exactly the blow-up described by `sw`: every cluster has
/// size `t` and adjacency follows the model with no exceptions.
pub fn is_exact_model(g: &TripartiteGraph, sw: &StructureWitness) -> bool {
    let n = g.n();
    let cols = sw.model.columns();
    if n != cols * sw.t {
        return false;
    }
    for row in &sw.assignment {
        let mut sizes = vec![0usize; cols];
        for &j in row {
            sizes[j] += 1;
        }
        if sizes.iter().any(|&s| s != sw.t) {
            return false;
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for i in 0..n {
            let u = VertexRef::new(a, i);
            for j in 0..n {
                let want = sw.model.is_edge(sw.assignment[a][i], sw.assignment[b][j]);
                if g.adjacent(u, VertexRef::new(b, j)) != want {
                    return false;
                }
            }
        }
    }
    true
}

/// Recognizes `g` as exactly `Γ₃(N/3)` up to relabelling inside classes.
pub fn recognize_gamma3(g: &TripartiteGraph) -> Option<StructureWitness> {
    let n = g.n();
    if n == 0 || !n.is_multiple_of(3) {
        return None;
    }
    let t = n / 3;
    let mut groups: [Vec<Vec<usize>>; CLASSES] = Default::default();
    for (c, slot) in groups.iter_mut().enumerate() {
        let mut by_nbhd: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for i in 0..n {
            let v = VertexRef::new(c, i);
            let key: Vec<usize> = crate::graph::other_classes(c)
                .iter()
                .flat_map(|&o| g.neighbors(v, o).ones().map(move |j| o * n + j))
                .collect();
            by_nbhd.entry(key).or_default().push(i);
        }
        if by_nbhd.len() != 3 || by_nbhd.values().any(|m| m.len() != t) {
            return None;
        }
        let mut gs: Vec<Vec<usize>> = by_nbhd.into_values().collect();
        gs.sort();
        *slot = gs;
    }
    for p0 in PERMS {
        for p1 in PERMS {
            for p2 in PERMS {
                let perms = [p0, p1, p2];
                let assignment: [Vec<usize>; CLASSES] = std::array::from_fn(|c| {
                    let mut row = vec![0; n];
                    for (k, members) in groups[c].iter().enumerate() {
                        for &i in members {
                            row[i] = perms[c][k];
                        }
                    }
                    row
                });
                let sw = StructureWitness::new(g, Model::Gamma3, t, assignment).ok()?;
                if is_exact_model(g, &sw) {
                    return Some(sw);
                }
            }
        }
    }
    None
}
