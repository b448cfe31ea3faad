//! Approximate-structure recognition and covering of the extreme case.
//!
//! Models are 3-row grids (rows are vertex classes). Columns are 0-indexed;
//! for `Γ₃` column 0 is the column joined to everything in other rows, and
//! columns 1 and 2 are the two columns that are complete across rows but
//! never meet each other.

mod classify;
mod cover;
mod discriminate;
mod parity;
mod reachable;
mod split;

use fixedbitset::FixedBitSet;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{TripartiteGraph, VertexRef, CLASSES};

pub use classify::{classify_extreme_partition, classify_theta32, ExtremePartition};
pub(crate) use classify::theta32_split;
pub use cover::{extreme_cover, extreme_cover_with_split, Color, LabeledSplit, Piece};
pub use discriminate::{discriminate_gamma_vs_theta, pair_partition, PairPartition, Thresholds};
pub use parity::{find_parity_triangles, is_exact_model, recognize_gamma3, Parity};
pub use reachable::{is_valid_chain, reachable, Reachability};
pub use split::{balanced_random_split, SplitReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtremalError {
    #[error("graph contains a triangle")]
    NotTriangleFree,
    #[error("class {class} has size {size}, outside [{lo}, {hi}]")]
    SizeOutOfRange { class: usize, size: usize, lo: f64, hi: f64 },
    #[error("structure not recognized: {0}")]
    NotApplicable(String),
    #[error("set {set} of class {class} has size {size}, outside ({lo}, {hi})")]
    SizeBandViolated { set: &'static str, class: usize, size: usize, lo: f64, hi: f64 },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("operation does not apply to model {0:?}")]
    ModelMismatch(Model),
    #[error("vertices must lie in the same class")]
    DifferentClasses,
    #[error("cluster has odd size {0}")]
    OddSize(usize),
    #[error("no parity triangles found")]
    NoParityTriangles,
    #[error("graph is exactly Γ₃(t) with t odd")]
    ExactGammaOdd,
    #[error("witness invalid: {0}")]
    WitnessInvalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Theta32,
    Theta33,
    Gamma3,
}

impl Model {
    pub fn columns(self) -> usize {
        match self {
            Model::Theta32 => 2,
            Model::Theta33 | Model::Gamma3 => 3,
        }
    }

    /// Whether clusters in columns `j` and `jj` of two different rows are joined.
    pub fn is_edge(self, j: usize, jj: usize) -> bool {
        match self {
            Model::Theta32 | Model::Theta33 => j != jj,
            Model::Gamma3 => (j != jj && (j == 0 || jj == 0)) || (j == jj && j >= 1),
        }
    }
}

/// A vertex-to-cluster assignment certifying that a graph is approximately a
/// blow-up of `model`. Row `i` of the model is vertex class `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureWitness {
    pub model: Model,
    pub t: usize,
    /// `assignment[class][index]` is the model column of that vertex.
    pub assignment: [Vec<usize>; CLASSES],
    /// Largest `|cluster size - t| / t`.
    pub eps: f64,
    pub max_nonedge_density: Rational64,
}

impl StructureWitness {
    /// Builds a witness and measures its size slack and non-edge densities.
    pub fn new(
        g: &TripartiteGraph,
        model: Model,
        t: usize,
        assignment: [Vec<usize>; CLASSES],
    ) -> Result<Self, ExtremalError> {
        for (c, row) in assignment.iter().enumerate() {
            if row.len() != g.n() {
                return Err(ExtremalError::WitnessInvalid(format!(
                    "class {c} assigns {} of {} vertices",
                    row.len(),
                    g.n()
                )));
            }
            if let Some(&j) = row.iter().find(|&&j| j >= model.columns()) {
                return Err(ExtremalError::WitnessInvalid(format!("column {j} out of range")));
            }
        }
        let mut w = Self {
            model,
            t,
            assignment,
            eps: 0.0,
            max_nonedge_density: Rational64::from_integer(0),
        };
        let (eps, d) = w.recompute(g);
        w.eps = eps;
        w.max_nonedge_density = d;
        Ok(w)
    }

    pub fn column_of(&self, v: VertexRef) -> usize {
        self.assignment[v.class][v.index]
    }

    pub fn cluster(&self, class: usize, col: usize) -> FixedBitSet {
        let row = &self.assignment[class];
        let mut s = FixedBitSet::with_capacity(row.len());
        s.extend((0..row.len()).filter(|&i| row[i] == col));
        s
    }

    pub fn clusters(&self) -> [Vec<FixedBitSet>; CLASSES] {
        std::array::from_fn(|c| (0..self.model.columns()).map(|j| self.cluster(c, j)).collect())
    }

    /// Size slack and largest model-non-edge density, measured on `g`.
    pub fn recompute(&self, g: &TripartiteGraph) -> (f64, Rational64) {
        let clusters = self.clusters();
        let mut eps: f64 = 0.0;
        for row in &clusters {
            for s in row {
                let size = s.count_ones(..) as f64;
                if self.t > 0 {
                    eps = eps.max((size - self.t as f64).abs() / self.t as f64);
                }
            }
        }
        let mut worst = Rational64::from_integer(0);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for j in 0..self.model.columns() {
                for jj in 0..self.model.columns() {
                    if !self.model.is_edge(j, jj) {
                        worst = worst.max(density0(g, a, &clusters[a][j], b, &clusters[b][jj]));
                    }
                }
            }
        }
        (eps, worst)
    }

    /// Whether the recorded slack and density match a fresh measurement.
    pub fn is_consistent(&self, g: &TripartiteGraph) -> bool {
        let (eps, d) = self.recompute(g);
        (eps - self.eps).abs() < 1e-12 && d == self.max_nonedge_density
    }
}

/// Density that treats an empty side as density 0.
pub(crate) fn density0(g: &TripartiteGraph, a: usize, sa: &FixedBitSet, b: usize, sb: &FixedBitSet) -> Rational64 {
    g.density(a, sa, b, sb).unwrap_or(Rational64::from_integer(0))
}

/// Real-valued `x >= bound` with a small tolerance for rounding.
pub(crate) fn at_least(x: usize, bound: f64) -> bool {
    x as f64 >= bound - 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{gamma3, theta3x3};

    fn blocks(n: usize, t: usize) -> Vec<usize> {
        (0..n).map(|i| i / t).collect()
    }

    #[test]
    fn model_edges() {
        assert!(Model::Gamma3.is_edge(0, 1));
        assert!(Model::Gamma3.is_edge(2, 2));
        assert!(!Model::Gamma3.is_edge(0, 0));
        assert!(!Model::Gamma3.is_edge(1, 2));
        assert!(Model::Theta33.is_edge(0, 2));
        assert!(!Model::Theta33.is_edge(1, 1));
    }

    #[test]
    fn exact_witnesses_have_zero_density() {
        for t in 1..=4 {
            let a: [Vec<usize>; 3] = std::array::from_fn(|_| blocks(3 * t, t));
            let w = StructureWitness::new(&gamma3(t), Model::Gamma3, t, a.clone()).unwrap();
            assert_eq!(w.max_nonedge_density, Rational64::from_integer(0));
            assert_eq!(w.eps, 0.0);
            assert!(w.is_consistent(&gamma3(t)));
            let w = StructureWitness::new(&theta3x3(t), Model::Theta33, t, a).unwrap();
            assert_eq!(w.max_nonedge_density, Rational64::from_integer(0));
        }
    }

    #[test]
    fn wrong_model_shows_density() {
        let t = 2;
        let a: [Vec<usize>; 3] = std::array::from_fn(|_| blocks(3 * t, t));
        let w = StructureWitness::new(&gamma3(t), Model::Theta33, t, a).unwrap();
        assert_eq!(w.max_nonedge_density, Rational64::from_integer(1));
    }

    #[test]
    fn witness_rejects_bad_assignment() {
        let a: [Vec<usize>; 3] = std::array::from_fn(|_| vec![0, 1, 3]);
        assert!(StructureWitness::new(&gamma3(1), Model::Gamma3, 1, a).is_err());
    }
}
