use fixedbitset::FixedBitSet;
use num_rational::Rational64;

use super::{at_least, density0, ExtremalError, Model, StructureWitness};
use crate::cover::ExtremeWitness;
use crate::graph::{ceil_tol, floor_tol, other_classes, ratio_le, TripartiteGraph, VertexRef, CLASSES};

/// Two-column split of three vertex sets with sparse same-column pairs.
#[derive(Clone, Debug)]
pub(crate) struct Theta32Split {
    /// `cols[class][col]`.
    pub cols: [[FixedBitSet; 2]; CLASSES],
    pub max_density: Rational64,
}

fn same_column_density(g: &TripartiteGraph, cols: &[[FixedBitSet; 2]; CLASSES]) -> Rational64 {
    let mut worst = Rational64::from_integer(0);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for j in 0..2 {
            worst = worst.max(density0(g, a, &cols[a][j], b, &cols[b][j]));
        }
    }
    worst
}

/// Anchored `Θ_{3×2}` extraction on the sets `xs`. For every anchor `w` in
/// class 2 the neighbourhoods of `w` seed column 0 of classes 0 and 1, class 2
/// gets the vertices with fewer than `delta_frac * t` neighbours in both, and
/// all three are filtered until every member has fewer than `delta_frac * t`
/// neighbours in each other column-0 set. With `bounds`, columns are then
/// rebalanced into `[lo, hi]`. Returns the anchor with the sparsest result.
pub(crate) fn theta32_split(
    g: &TripartiteGraph,
    xs: &[FixedBitSet; CLASSES],
    t: usize,
    delta_frac: f64,
    bounds: Option<(usize, usize)>,
) -> Option<Theta32Split> {
    let cut = delta_frac * t as f64;
    let sparse = |v: VertexRef, a: &[FixedBitSet; CLASSES]| {
        other_classes(v.class)
            .iter()
            .all(|&o| (g.degree_into(v, o, &a[o]) as f64) < cut)
    };
    let mut best: Option<Theta32Split> = None;
    for w in xs[2].ones() {
        let wv = VertexRef::new(2, w);
        let mut a: [FixedBitSet; CLASSES] = std::array::from_fn(|_| FixedBitSet::with_capacity(g.n()));
        for c in 0..2 {
            a[c] = g.neighbors(wv, c).clone();
            a[c].intersect_with(&xs[c]);
        }
        if a[0].is_clear() || a[1].is_clear() {
            continue;
        }
        a[2] = xs[2].ones().filter(|&i| sparse(VertexRef::new(2, i), &a)).collect_set(g.n());
        loop {
            let mut changed = false;
            for c in 0..CLASSES {
                let drop: Vec<usize> = a[c].ones().filter(|&i| !sparse(VertexRef::new(c, i), &a)).collect();
                for i in drop {
                    a[c].set(i, false);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut cols: [[FixedBitSet; 2]; CLASSES] = std::array::from_fn(|c| {
            let mut rest = xs[c].clone();
            rest.difference_with(&a[c]);
            [a[c].clone(), rest]
        });
        if let Some((lo, hi)) = bounds {
            rebalance_columns(g, &mut cols, lo, hi);
        }
        let d = same_column_density(g, &cols);
        if best.as_ref().is_none_or(|b| d < b.max_density) {
            let done = d == Rational64::from_integer(0);
            best = Some(Theta32Split { cols, max_density: d });
            if done {
                break;
            }
        }
    }
    best
}

trait CollectSet: Iterator<Item = usize> + Sized {
    fn collect_set(self, n: usize) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(n);
        s.extend(self);
        s
    }
}

impl<I: Iterator<Item = usize>> CollectSet for I {}

/// Moves vertices between the two columns of each class until both column
/// sizes lie in `[lo, hi]`; the moved vertex is the one with the fewest
/// neighbours in the destination column of the other classes.
fn rebalance_columns(g: &TripartiteGraph, cols: &mut [[FixedBitSet; 2]; CLASSES], lo: usize, hi: usize) {
    for c in 0..CLASSES {
        loop {
            let sizes = [cols[c][0].count_ones(..), cols[c][1].count_ones(..)];
            let (from, to) = if sizes[0] > hi || (sizes[1] < lo && sizes[0] > lo) {
                (0, 1)
            } else if sizes[1] > hi || (sizes[0] < lo && sizes[1] > lo) {
                (1, 0)
            } else {
                break;
            };
            let cost = |i: usize| -> usize {
                other_classes(c)
                    .iter()
                    .map(|&o| g.degree_into(VertexRef::new(c, i), o, &cols[o][to]))
                    .sum()
            };
            let Some(v) = cols[c][from].ones().min_by_key(|&i| (cost(i), i)) else { break };
            cols[c][from].set(v, false);
            cols[c][to].insert(v);
        }
    }
}

/// Recognizes an (almost) triangle-free `h` as an approximate `Θ_{3×2}(t)`.
///
/// Noisy blow-ups carry a few triangles through their noise edges, so `h` is
/// rejected only when its triangle density `#triangles / n³` exceeds `delta`.
pub fn classify_theta32(h: &TripartiteGraph, t: usize, eps: f64, delta: f64) -> Result<StructureWitness, ExtremalError> {
    let n = h.n();
    let triangles = h.triangles().len();
    if triangles > 0 && !ratio_le(Rational64::new(triangles as i64, (n * n * n) as i64), delta) {
        return Err(ExtremalError::NotTriangleFree);
    }
    let (lo, hi) = (2.0 * (1.0 - eps) * t as f64, 2.0 * (1.0 + eps) * t as f64);
    if !at_least(n, lo) || n as f64 > hi + 1e-9 {
        return Err(ExtremalError::SizeOutOfRange { class: 0, size: n, lo, hi });
    }
    let max_miss = floor_tol((1.0 + eps) * t as f64);
    for c in 0..CLASSES {
        for i in 0..n {
            for o in other_classes(c) {
                let miss = n - h.neighbors(VertexRef::new(c, i), o).count_ones(..);
                if miss > max_miss {
                    return Err(ExtremalError::NotApplicable(format!(
                        "vertex ({c},{i}) misses {miss} vertices of class {o}"
                    )));
                }
            }
        }
    }
    let col_lo = ceil_tol((1.0 - eps) * t as f64).min(n);
    let col_hi = floor_tol((1.0 + eps) * t as f64).max(col_lo);
    let split = theta32_split(h, &h.full_sets(), t, 0.5, Some((col_lo, col_hi)))
        .ok_or_else(|| ExtremalError::NotApplicable("no anchor with neighbours in both classes".into()))?;
    if !ratio_le(split.max_density, delta) {
        return Err(ExtremalError::NotApplicable(format!(
            "best same-column density {} exceeds {delta}",
            split.max_density
        )));
    }
    let assignment = std::array::from_fn(|c| (0..n).map(|i| usize::from(!split.cols[c][0].contains(i))).collect());
    StructureWitness::new(h, Model::Theta32, t, assignment)
}

/// `A'`, `B'`, `C'` split of every class relative to an extreme triple.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremePartition {
    pub t: usize,
    pub theta: f64,
    /// The extreme sets `A_i` themselves.
    pub a: [FixedBitSet; CLASSES],
    pub a_prime: [FixedBitSet; CLASSES],
    pub b_prime: [FixedBitSet; CLASSES],
    pub c_prime: [FixedBitSet; CLASSES],
}

impl ExtremePartition {
    /// `B'_i ∪ C'_i`.
    pub fn remainder(&self, class: usize) -> FixedBitSet {
        let mut r = self.b_prime[class].clone();
        r.union_with(&self.c_prime[class]);
        r
    }
}

/// Splits each class by degree into the extreme sets `A_j` and their
/// complements `B_j`, and checks the size bands implied by a sparse triple.
pub fn classify_extreme_partition(
    g: &TripartiteGraph,
    witness: &ExtremeWitness,
    theta: f64,
    delta0: f64,
) -> Result<ExtremePartition, ExtremalError> {
    let n = g.n();
    let t = witness.size();
    let a: [FixedBitSet; CLASSES] = std::array::from_fn(|c| witness.set(c, n));
    let b: [FixedBitSet; CLASSES] = std::array::from_fn(|c| {
        let mut s = FixedBitSet::with_capacity(n);
        s.insert_range(..);
        s.difference_with(&a[c]);
        s
    });
    let tf = t as f64;
    let mut a_prime: [FixedBitSet; CLASSES] = std::array::from_fn(|_| FixedBitSet::with_capacity(n));
    let mut b_prime = a_prime.clone();
    let mut c_prime = a_prime.clone();
    for c in 0..CLASSES {
        for i in 0..n {
            let v = VertexRef::new(c, i);
            let others = other_classes(c);
            if others.iter().all(|&o| at_least(g.degree_into(v, o, &b[o]), (1.0 + theta) * tf)) {
                a_prime[c].insert(i);
            } else if others.iter().all(|&o| at_least(g.degree_into(v, o, &a[o]), 0.5 * (1.0 + theta) * tf)) {
                b_prime[c].insert(i);
            } else {
                c_prime[c].insert(i);
            }
        }
    }
    let d1 = 4.0 * delta0 / (1.0 - theta);
    for c in 0..CLASSES {
        for (name, set, mid) in [("A'", &a_prime[c], 1.0), ("B'", &b_prime[c], 2.0)] {
            let size = set.count_ones(..);
            let (lo, hi) = ((mid - d1) * tf, (mid + d1) * tf);
            let s = size as f64;
            if !(s > lo && s < hi) {
                return Err(ExtremalError::SizeBandViolated { set: name, class: c, size, lo, hi });
            }
        }
    }
    Ok(ExtremePartition {
        t,
        theta,
        a,
        a_prime,
        b_prime,
        c_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{approx_blow_up, gamma3, gen_theta, theta3x2, theta3x3};

    fn planted_agreement(w: &StructureWitness, planted: &[Vec<usize>; CLASSES]) -> f64 {
        let n = planted[0].len();
        let mut best: usize = 0;
        for swap in [0, 1] {
            let agree = (0..CLASSES)
                .flat_map(|c| (0..n).map(move |i| (c, i)))
                .filter(|&(c, i)| w.assignment[c][i] ^ swap == planted[c][i])
                .count();
            best = best.max(agree);
        }
        best as f64 / (CLASSES * n) as f64
    }

    #[test]
    fn exact_theta32_recovered() {
        for t in 1..=10 {
            let w = classify_theta32(&theta3x2(t), t, 0.05, 0.01).unwrap();
            assert_eq!(w.max_nonedge_density, Rational64::from_integer(0), "t = {t}");
            assert_eq!(w.eps, 0.0);
            let planted: [Vec<usize>; 3] = std::array::from_fn(|_| (0..2 * t).map(|i| i / t).collect());
            assert_eq!(planted_agreement(&w, &planted), 1.0);
        }
    }

    #[test]
    fn noisy_theta32_recovered() {
        let base = gen_theta(3, 2).unwrap();
        let mut good = 0;
        for seed in 0..20 {
            let a = approx_blow_up(&base, 8, 0.05, 0.01, seed).unwrap();
            let h = a.graph.to_tripartite().unwrap();
            let planted: [Vec<usize>; 3] = std::array::from_fn(|c| {
                (0..h.n()).map(|i| a.cluster_of[a.graph.id(c, i)].1).collect()
            });
            let w = classify_theta32(&h, 8, 0.05, 0.05).unwrap();
            assert!(w.is_consistent(&h));
            if planted_agreement(&w, &planted) >= 0.95 {
                good += 1;
            }
        }
        assert!(good >= 19, "{good}");
    }

    #[test]
    fn triangle_is_rejected() {
        let k = TripartiteGraph::complete(2);
        assert_eq!(classify_theta32(&k, 1, 0.05, 0.01), Err(ExtremalError::NotTriangleFree));
        assert!(matches!(
            classify_theta32(&theta3x2(2), 5, 0.05, 0.01),
            Err(ExtremalError::SizeOutOfRange { .. })
        ));
    }

    fn column0_witness(g: &TripartiteGraph, t: usize) -> ExtremeWitness {
        ExtremeWitness::from_sets(g, std::array::from_fn(|_| (0..t).collect()))
    }

    #[test]
    fn partition_of_exact_models() {
        for g in [gamma3(6), theta3x3(6)] {
            let w = column0_witness(&g, 6);
            let ep = classify_extreme_partition(&g, &w, 0.8, 0.05).unwrap();
            for c in 0..3 {
                assert_eq!(ep.a_prime[c].ones().collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
                assert_eq!(ep.b_prime[c].ones().collect::<Vec<_>>(), (6..18).collect::<Vec<_>>());
                assert!(ep.c_prime[c].is_clear());
            }
        }
    }

    #[test]
    fn complete_graph_violates_bands() {
        let g = TripartiteGraph::complete(6);
        let w = column0_witness(&g, 2);
        assert!(matches!(
            classify_extreme_partition(&g, &w, 0.8, 0.05),
            Err(ExtremalError::SizeBandViolated { .. })
        ));
    }
}
