use fixedbitset::FixedBitSet;
use num_rational::Rational64;

use super::{density0, ExtremalError, ExtremePartition, Model, StructureWitness};
use crate::graph::{ratio_le, Config, TripartiteGraph, VertexRef, CLASSES};
use crate::matching::{detect_theta22, max_matching, BipartiteView, MatchingError};

/// Knobs for telling `Γ₃` from `Θ_{3×3}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Half-size slack handed to the `Θ_{2×2}` detector.
    pub eps: f64,
    /// Largest accepted density of a sparse pair.
    pub delta: f64,
    /// Overlap fractions at or below `band.0` read as disjoint, at or above
    /// `band.1` as coinciding; anything between is inconclusive.
    pub band: (f64, f64),
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps: 0.25,
            delta: 0.25,
            band: (0.25, 0.75),
        }
    }
}

impl From<&Config> for Thresholds {
    fn from(cfg: &Config) -> Self {
        Self {
            eps: cfg.eta,
            delta: cfg.eta,
            band: cfg.overlap_band,
        }
    }
}

/// Split of the remainders of classes `i` and `j` into halves with
/// `(I_a, J_a)` and `(I_b, J_b)` dense and the cross pairs sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPartition {
    pub classes: (usize, usize),
    pub i_a: FixedBitSet,
    pub i_b: FixedBitSet,
    pub j_a: FixedBitSet,
    pub j_b: FixedBitSet,
    /// `d(I_a, J_b)`.
    pub d_ab: Rational64,
    /// `d(I_b, J_a)`.
    pub d_ba: Rational64,
}

impl PairPartition {
    fn new(g: &TripartiteGraph, (i, j): (usize, usize), i_a: FixedBitSet, i_b: FixedBitSet, j_a: FixedBitSet, j_b: FixedBitSet) -> Self {
        let d_ab = density0(g, i, &i_a, j, &j_b);
        let d_ba = density0(g, i, &i_b, j, &j_a);
        Self {
            classes: (i, j),
            i_a,
            i_b,
            j_a,
            j_b,
            d_ab,
            d_ba,
        }
    }

    pub fn max_density(&self) -> Rational64 {
        self.d_ab.max(self.d_ba)
    }

    /// Exchanges the `a` and `b` labels on both sides.
    fn flipped(self) -> Self {
        Self {
            classes: self.classes,
            i_a: self.i_b,
            i_b: self.i_a,
            j_a: self.j_b,
            j_b: self.j_a,
            d_ab: self.d_ba,
            d_ba: self.d_ab,
        }
    }
}

fn frac(edges: usize, size: usize) -> f64 {
    if size == 0 {
        0.0
    } else {
        edges as f64 / size as f64
    }
}

/// Side `s` of class `c` goes to the half it is denser to, ties to `a`.
fn split_by(g: &TripartiteGraph, c: usize, s: &FixedBitSet, o: usize, oa: &FixedBitSet, ob: &FixedBitSet) -> (FixedBitSet, FixedBitSet) {
    let (na, nb) = (oa.count_ones(..), ob.count_ones(..));
    let mut a = FixedBitSet::with_capacity(s.len());
    let mut b = FixedBitSet::with_capacity(s.len());
    for u in s.ones() {
        let v = VertexRef::new(c, u);
        if frac(g.degree_into(v, o, oa), na) >= frac(g.degree_into(v, o, ob), nb) {
            a.insert(u);
        } else {
            b.insert(u);
        }
    }
    (a, b)
}

/// Alternating majority reassignment until both sides are stable.
fn refine(g: &TripartiteGraph, i: usize, ri: &FixedBitSet, j: usize, rj: &FixedBitSet, mut ja: FixedBitSet) -> PairPartition {
    let mut jb = rj.clone();
    jb.difference_with(&ja);
    let (mut ia, mut ib) = split_by(g, i, ri, j, &ja, &jb);
    for _ in 0..32 {
        let (nja, njb) = split_by(g, j, rj, i, &ia, &ib);
        let (nia, nib) = split_by(g, i, ri, j, &nja, &njb);
        let stable = nja == ja && nia == ia;
        (ia, ib, ja, jb) = (nia, nib, nja, njb);
        if stable {
            break;
        }
    }
    PairPartition::new(g, (i, j), ia, ib, ja, jb)
}

/// Tripartite indices of the right-side half `ra` of a view.
fn right_half(n: usize, bv: &BipartiteView, ra: &[usize]) -> FixedBitSet {
    let mut ja = FixedBitSet::with_capacity(n);
    ja.extend(ra.iter().map(|&k| bv.right(k).index));
    ja
}

/// Splits the remainders `ri` of class `i` and `rj` of class `j` into a
/// `Θ_{2×2}` pattern. A Hall certificate is tried first, on the pair itself
/// or after deleting one vertex per side to break a perfect matching; the
/// result is then polished by majority refinement. Without a certificate,
/// refinement is seeded from neighbourhoods of individual vertices.
pub fn pair_partition(
    g: &TripartiteGraph,
    (i, ri): (usize, &FixedBitSet),
    (j, rj): (usize, &FixedBitSet),
    th: &Thresholds,
) -> Option<PairPartition> {
    if ri.is_clear() || rj.is_clear() {
        return None;
    }
    let mut best: Option<PairPartition> = None;

    let bv = BipartiteView::between(g, i, ri, j, rj);
    if bv.left_len() == bv.right_len() {
        match detect_theta22(&bv, th.eps, th.delta) {
            Ok(w) => consider(&mut best, refine(g, i, ri, j, rj, right_half(g.n(), &bv, &w.ra))),
            Err(MatchingError::HasPerfectMatching) => {
                'probe: for x in ri.ones().take(8) {
                    let xv = VertexRef::new(i, x);
                    for y in rj.ones().filter(|&y| !g.adjacent(xv, VertexRef::new(j, y))).take(8) {
                        let mut si = ri.clone();
                        si.set(x, false);
                        let mut sj = rj.clone();
                        sj.set(y, false);
                        let sub = BipartiteView::between(g, i, &si, j, &sj);
                        if max_matching(&sub).is_perfect() {
                            continue;
                        }
                        if let Ok(w) = detect_theta22(&sub, th.eps, th.delta) {
                            consider(&mut best, refine(g, i, ri, j, rj, right_half(g.n(), &sub, &w.ra)));
                            break 'probe;
                        }
                    }
                }
            }
            Err(_) => {}
        }
    }
    if best.as_ref().is_none_or(|b| !ratio_le(b.max_density(), th.delta)) {
        for x in ri.ones() {
            let mut ja = g.neighbors(VertexRef::new(i, x), j).clone();
            ja.intersect_with(rj);
            consider(&mut best, refine(g, i, ri, j, rj, ja));
            if best.as_ref().is_some_and(|b| b.max_density() == Rational64::from_integer(0)) {
                break;
            }
        }
    }
    best
}

fn consider(best: &mut Option<PairPartition>, p: PairPartition) {
    let nondegenerate = !p.i_a.is_clear() && !p.i_b.is_clear() && !p.j_a.is_clear() && !p.j_b.is_clear();
    if nondegenerate && best.as_ref().is_none_or(|b| p.max_density() < b.max_density()) {
        *best = Some(p);
    }
}

/// `|x ∩ y| / min(|x|, |y|)`.
fn overlap(x: &FixedBitSet, y: &FixedBitSet) -> f64 {
    let m = x.count_ones(..).min(y.count_ones(..));
    if m == 0 {
        0.0
    } else {
        x.intersection(y).count() as f64 / m as f64
    }
}

/// Orients `p` so that its first-class `a` half best matches `target`.
/// Returns the oriented partition and the achieved overlap.
fn orient(p: PairPartition, target: &FixedBitSet) -> (PairPartition, f64) {
    let keep = overlap(&p.i_a, target);
    let swap = overlap(&p.i_b, target);
    if swap > keep {
        (p.flipped(), swap)
    } else {
        (p, keep)
    }
}

/// Reads the remainders of an extreme partition as either `Γ₃` or `Θ_{3×3}`.
///
/// Pair partitions of `(0,1)`, `(0,2)` and `(1,2)` are oriented to agree on
/// classes 0 and 1; the two halves they induce on class 2 then either
/// coincide (`Γ₃`) or are disjoint (`Θ_{3×3}`).
pub fn discriminate_gamma_vs_theta(
    g: &TripartiteGraph,
    ep: &ExtremePartition,
    th: &Thresholds,
) -> Result<StructureWitness, ExtremalError> {
    let rem: [FixedBitSet; CLASSES] = std::array::from_fn(|c| ep.remainder(c));
    let pp = |a: usize, b: usize| {
        pair_partition(g, (a, &rem[a]), (b, &rem[b]), th)
            .ok_or_else(|| ExtremalError::Inconclusive(format!("no pair partition for classes {a}, {b}")))
    };
    let p01 = pp(0, 1)?;
    let (p02, o0) = orient(pp(0, 2)?, &p01.i_a);
    let (p12, o1) = orient(pp(1, 2)?, &p01.j_a);
    let (lo, hi) = th.band;
    if o0 < hi || o1 < hi {
        return Err(ExtremalError::Inconclusive(format!(
            "pair partitions disagree on classes 0/1 (overlaps {o0:.2}, {o1:.2})"
        )));
    }
    for p in [&p01, &p02, &p12] {
        if !ratio_le(p.max_density(), th.delta) {
            return Err(ExtremalError::Inconclusive(format!(
                "pair {:?} has sparse density {}",
                p.classes,
                p.max_density()
            )));
        }
    }
    let o2 = overlap(&p02.j_a, &p12.j_a);
    let model = if o2 >= hi {
        Model::Gamma3
    } else if o2 <= lo {
        Model::Theta33
    } else {
        return Err(ExtremalError::Inconclusive(format!("class-2 overlap {o2:.2} in the middle band")));
    };

    let n = g.n();
    let halves = [&p01.i_a, &p01.j_a, &p02.j_a];
    let mut best: Option<StructureWitness> = None;
    for mask in 0..8u32 {
        let assignment: [Vec<usize>; CLASSES] = std::array::from_fn(|c| {
            let flip = mask >> c & 1 == 1;
            (0..n)
                .map(|v| {
                    if ep.a_prime[c].contains(v) {
                        0
                    } else if halves[c].contains(v) != flip {
                        1
                    } else {
                        2
                    }
                })
                .collect()
        });
        let w = StructureWitness::new(g, model, n / 3, assignment)?;
        if best.as_ref().is_none_or(|b| w.max_nonedge_density < b.max_nonedge_density) {
            best = Some(w);
        }
    }
    let w = best.expect("eight orientations tried");
    if !ratio_le(w.max_nonedge_density, th.delta) {
        return Err(ExtremalError::Inconclusive(format!(
            "best {model:?} assignment has non-edge density {}",
            w.max_nonedge_density
        )));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::ExtremeWitness;
    use crate::extremal::classify_extreme_partition;
    use crate::families::{gamma3, theta3x3};

    fn column0_partition(g: &TripartiteGraph, t: usize) -> ExtremePartition {
        let w = ExtremeWitness::from_sets(g, std::array::from_fn(|_| (0..t).collect()));
        classify_extreme_partition(g, &w, 0.8, 0.05).unwrap()
    }

    fn columns(t: usize) -> [Vec<usize>; 3] {
        std::array::from_fn(|_| (0..3 * t).map(|i| i / t).collect())
    }

    #[test]
    fn exact_models_are_labelled() {
        for t in 3..=8 {
            let g = gamma3(t);
            let w = discriminate_gamma_vs_theta(&g, &column0_partition(&g, t), &Thresholds::default()).unwrap();
            assert_eq!(w.model, Model::Gamma3, "t = {t}");
            assert_eq!(w.max_nonedge_density, Rational64::from_integer(0));
            // Columns 1 and 2 of Γ₃ may be exchanged as a whole.
            let cols = columns(t);
            let swapped: [Vec<usize>; 3] = std::array::from_fn(|c| cols[c].iter().map(|&j| [0, 2, 1][j]).collect());
            assert!(w.assignment == cols || w.assignment == swapped);

            let g = theta3x3(t);
            let w = discriminate_gamma_vs_theta(&g, &column0_partition(&g, t), &Thresholds::default()).unwrap();
            assert_eq!(w.model, Model::Theta33, "t = {t}");
            assert_eq!(w.max_nonedge_density, Rational64::from_integer(0));
        }
    }

    #[test]
    fn half_relabelled_cluster_is_inconclusive() {
        // Three of the six column-2 vertices of class 2 face class 1 as if
        // they sat in column 1.
        let t = 6;
        let col = |i: usize| i / t;
        let moved = |c: usize, i: usize| c == 2 && col(i) == 2 && i < 2 * t + 3;
        let g = TripartiteGraph::from_fn(3 * t, |u, v| {
            let (ju, jv) = (col(u.index), col(v.index));
            let eff = |w: VertexRef, j: usize, other: usize| if other == 1 && moved(w.class, w.index) { 1 } else { j };
            let ju2 = eff(u, ju, v.class);
            let jv2 = eff(v, jv, u.class);
            ju2 != jv2
        });
        let ep = column0_partition(&g, t);
        let r = discriminate_gamma_vs_theta(&g, &ep, &Thresholds::default());
        assert!(matches!(r, Err(ExtremalError::Inconclusive(_))), "{r:?}");
    }

    #[test]
    fn pair_partition_of_gamma_remainders() {
        let t = 4;
        let g = gamma3(t);
        let rem = crate::graph::set_of(3 * t, t..3 * t);
        let p = pair_partition(&g, (0, &rem), (1, &rem), &Thresholds::default()).unwrap();
        assert_eq!(p.max_density(), Rational64::from_integer(0));
        assert_eq!(p.i_a.count_ones(..), t);
        assert_eq!(p.i_a, p.j_a);
    }
}
