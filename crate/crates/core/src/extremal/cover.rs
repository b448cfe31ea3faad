use fixedbitset::FixedBitSet;

use super::parity::parity_search;
use super::split::balanced_random_split;
use super::{is_exact_model, ExtremalError, Model, StructureWitness};
use crate::cover::easy_cover;
use crate::graph::{
    ceil_tol, other_classes, verify_cover, Config, TripartiteGraph, Triangle, TriangleCover, VertexRef, CLASSES,
};

/// Why a vertex is pinned to a particular label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    /// Moved out of an oversized column-0 cluster.
    Red,
    /// Atypical vertex placed in its best-fitting cluster.
    Green,
    /// Moved out of an oversized cluster of another column.
    Blue,
    /// Uncolored vertex exchanged into the other half to make room.
    Black,
}

/// One half of a cluster together with the label it serves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub class: usize,
    pub col: usize,
    pub label: usize,
    pub members: Vec<usize>,
}

/// Bookkeeping of a labelled random split.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledSplit {
    /// `labels[l][c]` is the column label `l` uses in class `c`.
    pub labels: Vec<[usize; CLASSES]>,
    pub pieces: Vec<Piece>,
    pub colored: Vec<(VertexRef, Color)>,
    /// Pairs swapped between the two halves of a cluster.
    pub exchanges: Vec<(VertexRef, VertexRef)>,
    pub parity: Option<[Triangle; 3]>,
}

/// Column vectors of the six labels.
fn labels(model: Model) -> Vec<[usize; CLASSES]> {
    match model {
        Model::Gamma3 => (0..CLASSES)
            .flat_map(|i| (1..=2).map(move |j| std::array::from_fn(|c| if c == i { 0 } else { j })))
            .collect(),
        _ => vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]],
    }
}

/// How badly `v` fits column `col` of its class: missed vertices in model-edge
/// clusters plus neighbours in model-non-edge clusters.
fn misfit(g: &TripartiteGraph, model: Model, clusters: &[Vec<FixedBitSet>; CLASSES], v: VertexRef, col: usize) -> usize {
    let mut bad = 0;
    for o in other_classes(v.class) {
        for (jj, s) in clusters[o].iter().enumerate() {
            let d = g.degree_into(v, o, s);
            bad += if model.is_edge(col, jj) { s.count_ones(..) - d } else { d };
        }
    }
    bad
}

fn is_typical(g: &TripartiteGraph, model: Model, clusters: &[Vec<FixedBitSet>; CLASSES], v: VertexRef, col: usize, slack: f64) -> bool {
    other_classes(v.class).iter().all(|&o| {
        clusters[o].iter().enumerate().all(|(jj, s)| {
            let d = g.degree_into(v, o, s);
            let bad = if model.is_edge(col, jj) { s.count_ones(..) - d } else { d };
            (bad as f64) <= slack
        })
    })
}

/// Smallest fraction of a label's partner clusters that `v` is joined to.
fn label_fit(g: &TripartiteGraph, clusters: &[Vec<FixedBitSet>; CLASSES], v: VertexRef, label: &[usize; CLASSES]) -> f64 {
    other_classes(v.class)
        .iter()
        .map(|&o| {
            let s = &clusters[o][label[o]];
            let size = s.count_ones(..);
            if size == 0 {
                1.0
            } else {
                g.degree_into(v, o, s) as f64 / size as f64
            }
        })
        .fold(1.0, f64::min)
}

/// Covers a graph that is approximately `Γ₃(t)` or `Θ_{3×3}(t)`.
pub fn extreme_cover(g: &TripartiteGraph, sw: &StructureWitness, cfg: &Config) -> Result<TriangleCover, ExtremalError> {
    extreme_cover_with_split(g, sw, cfg).map(|(c, _)| c)
}

/// [`extreme_cover`] that also returns the labelled split it used.
///
/// Atypical vertices are moved to their best-fitting cluster, clusters are
/// rebalanced to size `t`, three parity triangles are set aside when `t` is
/// odd, and every cluster is halved at random between its two labels.
/// Colored vertices are swapped into the half of the label they fit, given
/// their own triangles, and each label's remaining triple is finished by the
/// high-degree cover.
pub fn extreme_cover_with_split(
    g: &TripartiteGraph,
    sw: &StructureWitness,
    cfg: &Config,
) -> Result<(TriangleCover, LabeledSplit), ExtremalError> {
    let model = sw.model;
    if model == Model::Theta32 {
        return Err(ExtremalError::ModelMismatch(model));
    }
    let n = g.n();
    let t = sw.t;
    if n != 3 * t {
        return Err(ExtremalError::WitnessInvalid(format!("class size {n} is not 3t = {}", 3 * t)));
    }
    let mut split = LabeledSplit {
        labels: labels(model),
        ..Default::default()
    };
    let mut cover = TriangleCover::new(n);
    if n == 0 {
        return Ok((cover, split));
    }
    let mut clusters = sw.clusters();
    let mut color: [Vec<Option<Color>>; CLASSES] = std::array::from_fn(|_| vec![None; n]);

    // Typicality, measured against the witness clusters.
    let slack = cfg.eta * t as f64;
    let mut atypical = Vec::new();
    for c in 0..CLASSES {
        for i in 0..n {
            let v = VertexRef::new(c, i);
            let col = sw.column_of(v);
            if !is_typical(g, model, &clusters, v, col, slack) {
                atypical.push(v);
            }
        }
    }
    for &v in &atypical {
        clusters[v.class][sw.column_of(v)].set(v.index, false);
    }
    for &v in &atypical {
        let sizes: Vec<usize> = clusters[v.class].iter().map(|s| s.count_ones(..)).collect();
        let col = (0..3)
            .min_by_key(|&j| (misfit(g, model, &clusters, v, j), sizes[j], j))
            .expect("three columns");
        clusters[v.class][col].insert(v.index);
        color[v.class][v.index] = Some(Color::Green);
    }

    // Rebalance every cluster to exactly t.
    for c in 0..CLASSES {
        loop {
            let sizes: Vec<usize> = clusters[c].iter().map(|s| s.count_ones(..)).collect();
            let Some(from) = (0..3).filter(|&j| sizes[j] > t).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))) else {
                break;
            };
            let to = (0..3).filter(|&j| sizes[j] < t).min_by_key(|&j| (sizes[j], j)).expect("sizes sum to 3t");
            let v = clusters[c][from]
                .ones()
                .map(|i| VertexRef::new(c, i))
                .min_by_key(|&v| (misfit(g, model, &clusters, v, to), v.index))
                .expect("oversized cluster is nonempty");
            clusters[c][from].set(v.index, false);
            clusters[c][to].insert(v.index);
            color[c][v.index] = Some(if from == 0 { Color::Red } else { Color::Blue });
        }
    }

    // Parity.
    let mut piece_size = t;
    if t % 2 == 1 {
        let avoid: [FixedBitSet; CLASSES] = std::array::from_fn(|c| {
            let mut s = FixedBitSet::with_capacity(n);
            s.extend((0..n).filter(|&i| color[c][i].is_some()));
            s
        });
        let empty: [FixedBitSet; CLASSES] = std::array::from_fn(|_| FixedBitSet::with_capacity(n));
        let found = parity_search(g, model, &clusters, &avoid).or_else(|| parity_search(g, model, &clusters, &empty));
        let Some(ts) = found else {
            if model == Model::Gamma3 && is_exact_model(g, sw) {
                return Err(ExtremalError::ExactGammaOdd);
            }
            return Err(ExtremalError::NoParityTriangles);
        };
        for tr in ts {
            for c in 0..CLASSES {
                for s in clusters[c].iter_mut() {
                    s.set(tr.v[c], false);
                }
                color[c][tr.v[c]] = None;
            }
            cover.push(tr).expect("parity triangles are disjoint");
        }
        split.parity = Some(ts);
        piece_size = t - 1;
    }
    let half = piece_size / 2;

    // Random halving: the first half of a cluster serves its lower label.
    let mut pieces: Vec<[FixedBitSet; CLASSES]> =
        vec![std::array::from_fn(|_| FixedBitSet::with_capacity(n)); split.labels.len()];
    let cap = ceil_tol(cfg.exchange_frac * half as f64).max(usize::from(half > 0));
    for c in 0..CLASSES {
        for col in 0..3 {
            let served: Vec<usize> = (0..split.labels.len()).filter(|&l| split.labels[l][c] == col).collect();
            debug_assert_eq!(served.len(), 2);
            let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add((c * 3 + col) as u64);
            let r = balanced_random_split(g, c, &clusters[c][col], seed)?;
            let mut halves = r.halves;

            // Exchange colored vertices into the half of the label they fit.
            let mut swaps = 0;
            for side in 0..2 {
                let here = served[side];
                let there = served[1 - side];
                let movers: Vec<usize> = halves[side]
                    .ones()
                    .filter(|&i| color[c][i].is_some_and(|k| k != Color::Black))
                    .filter(|&i| {
                        let v = VertexRef::new(c, i);
                        label_fit(g, &clusters, v, &split.labels[there]) > label_fit(g, &clusters, v, &split.labels[here])
                    })
                    .collect();
                for i in movers {
                    let v = VertexRef::new(c, i);
                    let partner = halves[1 - side]
                        .ones()
                        .filter(|&k| color[c][k].is_none())
                        .max_by(|&a, &b| {
                            let fa = label_fit(g, &clusters, VertexRef::new(c, a), &split.labels[here]);
                            let fb = label_fit(g, &clusters, VertexRef::new(c, b), &split.labels[here]);
                            fa.total_cmp(&fb).then(b.cmp(&a))
                        });
                    let Some(k) = partner else { continue };
                    swaps += 1;
                    if swaps > cap {
                        return Err(ExtremalError::WitnessInvalid(format!(
                            "cluster ({c},{col}) needs more than {cap} exchanges"
                        )));
                    }
                    halves[side].set(i, false);
                    halves[side].insert(k);
                    halves[1 - side].set(k, false);
                    halves[1 - side].insert(i);
                    color[c][k] = Some(Color::Black);
                    split.exchanges.push((v, VertexRef::new(c, k)));
                }
            }
            for side in 0..2 {
                pieces[served[side]][c] = halves[side].clone();
                split.pieces.push(Piece {
                    class: c,
                    col,
                    label: served[side],
                    members: halves[side].ones().collect(),
                });
            }
        }
    }
    for c in 0..CLASSES {
        for i in 0..n {
            if let Some(k) = color[c][i] {
                split.colored.push((VertexRef::new(c, i), k));
            }
        }
    }

    // Colored triangles, then the high-degree finish per label.
    for (l, piece) in pieces.iter_mut().enumerate() {
        let colored: Vec<VertexRef> = (0..CLASSES)
            .flat_map(|c| piece[c].ones().map(move |i| VertexRef::new(c, i)))
            .filter(|v| color[v.class][v.index].is_some())
            .collect();
        let mut free: [FixedBitSet; CLASSES] = std::array::from_fn(|c| {
            let mut s = piece[c].clone();
            for v in &colored {
                if v.class == c {
                    s.set(v.index, false);
                }
            }
            s
        });
        for &v in &colored {
            if !piece[v.class].contains(v.index) {
                continue;
            }
            let [a, b] = other_classes(v.class);
            let mut na = g.neighbors(v, a).clone();
            na.intersect_with(&free[a]);
            let mut nb = g.neighbors(v, b).clone();
            nb.intersect_with(&free[b]);
            let pick = na.ones().find_map(|x| {
                let mut m = g.neighbors(VertexRef::new(a, x), b).clone();
                m.intersect_with(&nb);
                m.ones().next().map(|y| (x, y))
            });
            let Some((x, y)) = pick else {
                return Err(ExtremalError::WitnessInvalid(format!(
                    "colored vertex {v:?} has no triangle inside label {l}"
                )));
            };
            let mut idx = [0; CLASSES];
            idx[v.class] = v.index;
            idx[a] = x;
            idx[b] = y;
            let tr = Triangle::from_indices(idx);
            cover.push(tr).expect("colored triangles are disjoint");
            for c in 0..CLASSES {
                piece[c].set(tr.v[c], false);
                free[c].set(tr.v[c], false);
            }
        }
        let (sub, maps) = g
            .induced(piece)
            .map_err(|e| ExtremalError::WitnessInvalid(format!("label {l}: {e}")))?;
        let m = sub.n();
        if m == 0 {
            continue;
        }
        let floor = ceil_tol(0.75 * m as f64);
        if sub.min_cross_degree() < floor {
            return Err(ExtremalError::WitnessInvalid(format!(
                "label {l}: min degree {} below {floor} of {m}",
                sub.min_cross_degree()
            )));
        }
        let local = easy_cover(&sub).map_err(|e| ExtremalError::WitnessInvalid(format!("label {l}: {e}")))?;
        for tr in local.triangles() {
            let global = Triangle::from_indices(std::array::from_fn(|c| maps[c][tr.v[c]]));
            cover.push(global).expect("labels are disjoint");
        }
    }
    if !verify_cover(g, cover.triangles(), true).is_accept() {
        return Err(ExtremalError::WitnessInvalid("assembled cover failed verification".into()));
    }
    Ok((cover, split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{approx_blow_up, gamma3, gen_theta};

    fn block_witness(g: &TripartiteGraph, model: Model, t: usize) -> StructureWitness {
        StructureWitness::new(g, model, t, std::array::from_fn(|_| (0..3 * t).map(|i| i / t).collect())).unwrap()
    }

    #[test]
    fn label_triples_are_model_triangles() {
        for model in [Model::Gamma3, Model::Theta33] {
            let ls = labels(model);
            assert_eq!(ls.len(), 6);
            for l in &ls {
                assert!(model.is_edge(l[0], l[1]) && model.is_edge(l[0], l[2]) && model.is_edge(l[1], l[2]));
            }
            for c in 0..3 {
                for col in 0..3 {
                    assert_eq!(ls.iter().filter(|l| l[c] == col).count(), 2);
                }
            }
        }
    }

    #[test]
    fn even_gamma_is_covered() {
        for t in [2, 4, 6] {
            let g = gamma3(t);
            let (cover, split) = extreme_cover_with_split(&g, &block_witness(&g, Model::Gamma3, t), &Config::default()).unwrap();
            assert!(verify_cover(&g, cover.triangles(), true).is_accept());
            assert!(split.colored.is_empty());
            assert_eq!(split.pieces.len(), 18);
        }
    }

    #[test]
    fn odd_gamma_is_exceptional() {
        for t in [1, 3, 5] {
            let g = gamma3(t);
            assert_eq!(
                extreme_cover(&g, &block_witness(&g, Model::Gamma3, t), &Config::default()),
                Err(ExtremalError::ExactGammaOdd)
            );
        }
    }

    #[test]
    fn odd_gamma_plus_edge_uses_parity() {
        let g = gamma3(3).with_edge(VertexRef::new(0, 3), VertexRef::new(1, 6)).unwrap();
        let (cover, split) = extreme_cover_with_split(&g, &block_witness(&g, Model::Gamma3, 3), &Config::default()).unwrap();
        assert!(verify_cover(&g, cover.triangles(), true).is_accept());
        assert!(split.parity.is_some());
    }

    #[test]
    fn noisy_theta33_is_covered() {
        let base = gen_theta(3, 3).unwrap();
        for seed in 0..10 {
            let a = approx_blow_up(&base, 8, 0.02, 0.01, seed).unwrap();
            let g = a.graph.to_tripartite().unwrap();
            let assignment = std::array::from_fn(|c| (0..g.n()).map(|i| a.cluster_of[a.graph.id(c, i)].1).collect());
            let sw = StructureWitness::new(&g, Model::Theta33, 8, assignment).unwrap();
            let cfg = Config { seed, ..Config::default() };
            let cover = extreme_cover(&g, &sw, &cfg).unwrap();
            assert!(verify_cover(&g, cover.triangles(), true).is_accept(), "seed {seed}");
        }
    }

    #[test]
    fn misplaced_vertices_are_recolored() {
        // Swap two vertices between columns 0 and 1 of class 0 in the witness.
        let t = 4;
        let g = gamma3(t);
        let mut a: [Vec<usize>; 3] = std::array::from_fn(|_| (0..3 * t).map(|i| i / t).collect());
        a[0][0] = 1;
        a[0][t] = 0;
        let sw = StructureWitness::new(&g, Model::Gamma3, t, a).unwrap();
        let (cover, split) = extreme_cover_with_split(&g, &sw, &Config::default()).unwrap();
        assert!(verify_cover(&g, cover.triangles(), true).is_accept());
        assert!(split.colored.iter().any(|&(_, k)| k == Color::Green));
    }
}
