//! Scanner for the blow-up conjecture: if `G(t)` and `G(t+1)` both have
//! triangle factors, so does `G`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::io::{write_file, write_tri3, IoError};
use crate::exact::has_factor;
use crate::families::{blow_up, PartiteGraph};
use crate::graph::{TripartiteGraph, VertexRef, CLASSES};

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Edge pattern of a base graph with class size `s`: bit `p*s*s + i*s + j`
/// is the edge between vertex `i` of class `PAIRS[p].0` and vertex `j` of
/// class `PAIRS[p].1`.
fn decode(s: usize, code: u64) -> TripartiteGraph {
    TripartiteGraph::from_fn(s, |u, v| {
        let (u, v) = if u.class < v.class { (u, v) } else { (v, u) };
        let p = PAIRS.iter().position(|&pr| pr == (u.class, v.class)).expect("distinct classes");
        code >> (p * s * s + u.index * s + v.index) & 1 == 1
    })
}

fn encode(g: &TripartiteGraph) -> u64 {
    let s = g.n();
    let mut code = 0u64;
    for (p, &(a, b)) in PAIRS.iter().enumerate() {
        for i in 0..s {
            for j in 0..s {
                if g.adjacent(VertexRef::new(a, i), VertexRef::new(b, j)) {
                    code |= 1 << (p * s * s + i * s + j);
                }
            }
        }
    }
    code
}

fn permutations(s: usize) -> Vec<Vec<usize>> {
    if s == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(s - 1) {
        for pos in 0..s {
            let mut q = p.clone();
            q.insert(pos, s - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest code over all class permutations and permutations inside classes.
pub fn canonical_code(g: &TripartiteGraph) -> u64 {
    let s = g.n();
    let inner = permutations(s);
    let outer = permutations(CLASSES);
    let mut best = u64::MAX;
    for cp in &outer {
        for p0 in &inner {
            for p1 in &inner {
                for p2 in &inner {
                    let within = [p0, p1, p2];
                    let h = TripartiteGraph::from_fn(s, |u, v| {
                        // Vertex (c, i) of h is vertex (cp[c], within[c][i]) of g.
                        g.adjacent(
                            VertexRef::new(cp[u.class], within[u.class][u.index]),
                            VertexRef::new(cp[v.class], within[v.class][v.index]),
                        )
                    });
                    best = best.min(encode(&h));
                }
            }
        }
    }
    best
}

/// Canonical base graphs: every pattern for class size at most 2, a seeded
/// sample of `samples` patterns above that.
pub fn base_graphs(max_base_n: usize, samples: usize, seed: u64) -> Vec<(usize, u64)> {
    let mut out = BTreeSet::new();
    for s in 1..=max_base_n {
        let bits = 3 * s * s;
        if s <= 2 {
            for code in 0..1u64 << bits {
                out.insert((s, canonical_code(&decode(s, code))));
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ s as u64);
            for _ in 0..samples {
                let code = rng.gen::<u64>() & ((1 << bits) - 1);
                out.insert((s, canonical_code(&decode(s, code))));
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStatus {
    /// `G(t)` or `G(t+1)` has no factor.
    HypothesisFails,
    /// Hypothesis holds and `G` has a factor.
    Consistent,
    Counterexample,
    /// The oracle ran out of budget; not evidence either way.
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureRow {
    pub base_n: usize,
    pub code: u64,
    pub t: usize,
    pub base: Option<bool>,
    pub blow_t: Option<bool>,
    pub blow_t1: Option<bool>,
    pub status: CaseStatus,
    /// Files written for a counterexample: base, `G(t)`, `G(t+1)`.
    pub witness_files: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub rows: Vec<ConjectureRow>,
}

impl ConjectureReport {
    pub fn count(&self, status: CaseStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    /// Rows whose hypothesis holds, with their verdicts.
    pub fn hypothesis_cases(&self) -> impl Iterator<Item = &ConjectureRow> {
        self.rows
            .iter()
            .filter(|r| matches!(r.status, CaseStatus::Consistent | CaseStatus::Counterexample))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["base_n", "code", "t", "base", "blow_t", "blow_t1", "status"])
            .expect("in-memory write");
        let show = |b: Option<bool>| b.map_or("indeterminate".to_string(), |b| b.to_string());
        for r in &self.rows {
            let status = match r.status {
                CaseStatus::HypothesisFails => "hypothesis_fails",
                CaseStatus::Consistent => "consistent",
                CaseStatus::Counterexample => "counterexample",
                CaseStatus::Indeterminate => "indeterminate",
            };
            w.write_record([
                r.base_n.to_string(),
                r.code.to_string(),
                r.t.to_string(),
                show(r.base),
                show(r.blow_t),
                show(r.blow_t1),
                status.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

fn blown(g: &TripartiteGraph, t: usize) -> TripartiteGraph {
    blow_up(&PartiteGraph::from_tripartite(g), t)
        .and_then(|h| h.to_tripartite())
        .expect("blow-up of a balanced graph is balanced")
}

fn decide(g: &TripartiteGraph, budget: u64) -> Option<bool> {
    has_factor(g, budget).ok()
}

/// Checks one base graph against one `t`.
pub fn check_case(g: &TripartiteGraph, t: usize, budget: u64) -> (Option<bool>, Option<bool>, Option<bool>, CaseStatus) {
    let gt = decide(&blown(g, t), budget);
    let gt1 = decide(&blown(g, t + 1), budget);
    let base = decide(g, budget);
    let status = match (gt, gt1, base) {
        (Some(false), _, _) | (_, Some(false), _) => CaseStatus::HypothesisFails,
        (Some(true), Some(true), Some(true)) => CaseStatus::Consistent,
        (Some(true), Some(true), Some(false)) => CaseStatus::Counterexample,
        _ => CaseStatus::Indeterminate,
    };
    (base, gt, gt1, status)
}

/// Scans canonical base graphs with class size up to `max_base_n` against
/// every `t` in `t_values`. Every counterexample has its three graphs
/// written to `witness_dir` as `.tri3` files.
pub fn check_conjecture(
    max_base_n: usize,
    t_values: &[usize],
    budget: u64,
    seed: u64,
    witness_dir: &Path,
) -> Result<ConjectureReport, IoError> {
    let bases = base_graphs(max_base_n, 200, seed);
    let cases: Vec<(usize, u64, usize)> = bases
        .iter()
        .flat_map(|&(s, code)| t_values.iter().map(move |&t| (s, code, t)))
        .collect();
    let mut rows: Vec<ConjectureRow> = cases
        .into_par_iter()
        .map(|(s, code, t)| {
            let (base, blow_t, blow_t1, status) = check_case(&decode(s, code), t, budget);
            ConjectureRow {
                base_n: s,
                code,
                t,
                base,
                blow_t,
                blow_t1,
                status,
                witness_files: Vec::new(),
            }
        })
        .collect();
    rows.sort_by_key(|r| (r.base_n, r.code, r.t));
    for r in rows.iter_mut().filter(|r| r.status == CaseStatus::Counterexample) {
        std::fs::create_dir_all(witness_dir).map_err(|source| IoError::File {
            path: witness_dir.display().to_string(),
            source,
        })?;
        let g = decode(r.base_n, r.code);
        for (name, h) in [
            ("base".to_string(), g.clone()),
            (format!("t{}", r.t), blown(&g, r.t)),
            (format!("t{}", r.t + 1), blown(&g, r.t + 1)),
        ] {
            let path = witness_dir.join(format!("cx_{}_{}_{}_{name}.tri3", r.base_n, r.code, r.t));
            write_file(&path, &write_tri3(&h))?;
            r.witness_files.push(path);
        }
    }
    Ok(ConjectureReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::gamma3;

    #[test]
    fn codes_roundtrip() {
        for code in [0u64, 1, 0b1011_0110_1001, 4095] {
            assert_eq!(encode(&decode(2, code)), code);
        }
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn canonical_is_invariant() {
        let g = gamma3(1);
        let h = g.permuted(&[vec![2, 0, 1], vec![1, 2, 0], vec![0, 2, 1]]);
        assert_eq!(canonical_code(&g), canonical_code(&h));
        assert_ne!(canonical_code(&g), canonical_code(&TripartiteGraph::complete(3)));
    }

    #[test]
    fn small_bases() {
        let one = base_graphs(1, 0, 0);
        // Class size 1: 0, 1, 2 or 3 edges up to symmetry.
        assert_eq!(one.len(), 4);
    }

    #[test]
    fn single_triangle() {
        let (base, gt, gt1, status) = check_case(&TripartiteGraph::complete(1), 1, 1_000_000);
        assert_eq!((base, gt, gt1), (Some(true), Some(true), Some(true)));
        assert_eq!(status, CaseStatus::Consistent);
    }

    #[test]
    fn gamma_fails_hypothesis() {
        let (_, gt, gt1, status) = check_case(&gamma3(1), 2, 1_000_000);
        assert_eq!((gt, gt1), (Some(true), Some(false)));
        assert_eq!(status, CaseStatus::HypothesisFails);
    }
}
