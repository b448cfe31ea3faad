use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ExtremalError;
use crate::graph::{other_classes, TripartiteGraph, VertexRef};

/// Random halving of one cluster and how evenly it splits outside degrees.
#[derive(Clone, Debug)]
pub struct SplitReport {
    pub halves: [FixedBitSet; 2],
    /// For every vertex of the other two classes, `|deg(v, half 0) - deg(v, cluster) / 2|`.
    pub deviations: Vec<(VertexRef, f64)>,
}

impl SplitReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().map(|&(_, d)| d).fold(0.0, f64::max)
    }
}

/// Splits `cluster` (a subset of `class`) into two equal halves chosen
/// uniformly at random.
pub fn balanced_random_split(
    g: &TripartiteGraph,
    class: usize,
    cluster: &FixedBitSet,
    seed: u64,
) -> Result<SplitReport, ExtremalError> {
    let mut members: Vec<usize> = cluster.ones().collect();
    if members.len() % 2 == 1 {
        return Err(ExtremalError::OddSize(members.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    members.shuffle(&mut rng);
    let half = members.len() / 2;
    let mut halves = [FixedBitSet::with_capacity(g.n()), FixedBitSet::with_capacity(g.n())];
    halves[0].extend(members[..half].iter().copied());
    halves[1].extend(members[half..].iter().copied());
    let mut deviations = Vec::with_capacity(2 * g.n());
    for o in other_classes(class) {
        for i in 0..g.n() {
            let v = VertexRef::new(o, i);
            let whole = g.degree_into(v, class, cluster) as f64;
            let part = g.degree_into(v, class, &halves[0]) as f64;
            deviations.push((v, (part - whole / 2.0).abs()));
        }
    }
    Ok(SplitReport { halves, deviations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::gamma3;
    use crate::graph::set_of;

    #[test]
    fn halves_partition_the_cluster() {
        let g = gamma3(4);
        let cluster = set_of(12, 0..4);
        let r = balanced_random_split(&g, 0, &cluster, 9).unwrap();
        assert_eq!(r.halves[0].count_ones(..), 2);
        assert!(r.halves[0].is_disjoint(&r.halves[1]));
        let mut u = r.halves[0].clone();
        u.union_with(&r.halves[1]);
        assert_eq!(u, cluster);
    }

    #[test]
    fn full_and_empty_neighbours_have_no_deviation() {
        // Column 0 of class 0 is joined to all of columns 1, 2 elsewhere and to
        // nothing in column 0.
        let g = gamma3(4);
        let r = balanced_random_split(&g, 0, &set_of(12, 0..4), 3).unwrap();
        for &(_, d) in &r.deviations {
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn odd_cluster_rejected() {
        let g = gamma3(3);
        assert_eq!(
            balanced_random_split(&g, 0, &set_of(9, 0..3), 0).unwrap_err(),
            ExtremalError::OddSize(3)
        );
    }

    #[test]
    fn same_seed_same_split() {
        let g = gamma3(6);
        let c = set_of(18, 6..12);
        let a = balanced_random_split(&g, 1, &c, 42).unwrap();
        let b = balanced_random_split(&g, 1, &c, 42).unwrap();
        assert_eq!(a.halves, b.halves);
    }
}
