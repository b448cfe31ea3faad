//! Constructive covering: the high-degree matching cover, greedy initial
//! covers, augmentation, the `N mod 3` reduction and the solver pipeline.

mod augment;

use std::str::FromStr;

use fixedbitset::FixedBitSet;
use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{exact_factor, ExactVerdict, MAX_CLASS};
use crate::extremal::{
    classify_extreme_partition, discriminate_gamma_vs_theta, extreme_cover, recognize_gamma3, StructureWitness,
    Thresholds,
};
use crate::graph::{
    ceil_tol, full_set, other_classes, ratio_lt, verify_cover, Config, TripartiteGraph, Triangle, TriangleCover,
    VertexRef, CLASSES,
};
use crate::matching::{max_matching, BipartiteView};

pub use augment::{augment_once, check_preconditions, AugmentState, AugmentStep, MAX_CHANGED};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("min cross-degree {degree} is below the required {floor}")]
    PreconditionDegree { degree: usize, floor: usize },
    #[error("matching step failed although its degree condition holds: {0}")]
    InternalHallFailure(String),
    #[error("augmentation precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("graph has no triangle to remove")]
    NoTriangleExists,
    #[error("class size {0} is already a multiple of 3")]
    PreconditionDivisibility(usize),
}

/// Three equal-size sets, one per class, with their pairwise densities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtremeWitness {
    pub n: usize,
    pub sets: [Vec<usize>; CLASSES],
    /// Densities of the pairs `(0,1)`, `(0,2)`, `(1,2)`.
    #[serde(serialize_with = "ser_ratios")]
    pub densities: [Rational64; 3],
}

fn ser_ratios<S: serde::Serializer>(d: &[Rational64; 3], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(d.iter().map(|r| r.to_string()))
}

impl ExtremeWitness {
    /// Measures the densities of `sets` in `g`; empty sets have density 0.
    pub fn from_sets(g: &TripartiteGraph, sets: [Vec<usize>; CLASSES]) -> Self {
        let n = g.n();
        let bits: [FixedBitSet; CLASSES] = std::array::from_fn(|c| crate::graph::set_of(n, sets[c].iter().copied()));
        let d = |a: usize, b: usize| g.density(a, &bits[a], b, &bits[b]).unwrap_or(Rational64::from_integer(0));
        Self {
            n,
            densities: [d(0, 1), d(0, 2), d(1, 2)],
            sets,
        }
    }

    /// Size of the class-0 set.
    pub fn size(&self) -> usize {
        self.sets[0].len()
    }

    pub fn set(&self, class: usize, n: usize) -> FixedBitSet {
        crate::graph::set_of(n, self.sets[class].iter().copied())
    }

    pub fn max_density(&self) -> Rational64 {
        self.densities.iter().copied().max().expect("three densities")
    }

    /// All sets share one size and every pairwise density is below `delta0`.
    pub fn certify(&self, delta0: f64) -> bool {
        let s = self.size();
        self.sets.iter().all(|x| x.len() == s) && ratio_lt(self.max_density(), delta0)
    }

    /// Whether the recorded densities match `g`.
    pub fn is_consistent(&self, g: &TripartiteGraph) -> bool {
        Self::from_sets(g, self.sets.clone()) == *self
    }
}

/// Perfect cover of a graph with min cross-degree at least `ceil(3N/4)`: a
/// perfect matching between classes 1 and 2, then a perfect matching of
/// class 0 into the matched edges.
pub fn easy_cover(g: &TripartiteGraph) -> Result<TriangleCover, SolverError> {
    let n = g.n();
    let floor = ceil_tol(0.75 * n as f64);
    let degree = g.min_cross_degree();
    if n > 0 && degree < floor {
        return Err(SolverError::PreconditionDegree { degree, floor });
    }
    let all = full_set(n);
    let m12 = max_matching(&BipartiteView::between(g, 1, &all, 2, &all));
    if !m12.is_perfect() {
        return Err(SolverError::InternalHallFailure(format!(
            "classes 1-2 matched {} of {n}",
            m12.size()
        )));
    }
    let pairs = m12.pairs;
    let view = BipartiteView::from_fn(n, n, |x, k| {
        let xv = VertexRef::new(0, x);
        g.adjacent(xv, VertexRef::new(1, pairs[k].0)) && g.adjacent(xv, VertexRef::new(2, pairs[k].1))
    });
    let m0 = max_matching(&view);
    if !m0.is_perfect() {
        return Err(SolverError::InternalHallFailure(format!(
            "class 0 matched {} of {n} edges",
            m0.size()
        )));
    }
    let tris = m0.pairs.iter().map(|&(x, k)| Triangle::from_indices([x, pairs[k].0, pairs[k].1]));
    Ok(TriangleCover::from_triangles(n, tris).expect("matchings are disjoint"))
}

/// Maximal set of disjoint triangles: class-0 vertices in random order each
/// take a uniformly random free triangle through them, if any.
pub fn greedy_partial_cover(g: &TripartiteGraph, seed: u64) -> TriangleCover {
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut free = g.full_sets();
    let mut cover = TriangleCover::new(n);
    for x in order {
        let xv = VertexRef::new(0, x);
        let mut ys = g.neighbors(xv, 1).clone();
        ys.intersect_with(&free[1]);
        let mut options = Vec::new();
        for y in ys.ones() {
            let mut zs = g.neighbors(xv, 2).clone();
            zs.intersect_with(&free[2]);
            zs.intersect_with(g.neighbors(VertexRef::new(1, y), 2));
            options.extend(zs.ones().map(|z| (y, z)));
        }
        if options.is_empty() {
            continue;
        }
        let (y, z) = options[rng.gen_range(0..options.len())];
        free[0].set(x, false);
        free[1].set(y, false);
        free[2].set(z, false);
        cover.push(Triangle::from_indices([x, y, z])).expect("free vertices");
    }
    cover
}

/// Resizes a candidate triple to `s` vertices per class and certifies it.
/// Oversized sets drop their vertices with most neighbours in the other two
/// sets; undersized sets take the outside vertices with fewest.
pub(crate) fn trim_extreme(
    g: &TripartiteGraph,
    cand: &[FixedBitSet; CLASSES],
    s: usize,
    delta0: f64,
) -> Option<ExtremeWitness> {
    let n = g.n();
    if s == 0 || s > n {
        return None;
    }
    let mut sets = cand.clone();
    let load = |sets: &[FixedBitSet; CLASSES], v: VertexRef| -> usize {
        other_classes(v.class).iter().map(|&o| g.degree_into(v, o, &sets[o])).sum()
    };
    for _ in 0..2 {
        for c in 0..CLASSES {
            while sets[c].count_ones(..) > s {
                let drop = sets[c]
                    .ones()
                    .max_by_key(|&i| (load(&sets, VertexRef::new(c, i)), i))
                    .expect("nonempty");
                sets[c].set(drop, false);
            }
            while sets[c].count_ones(..) < s {
                let add = (0..n)
                    .filter(|&i| !sets[c].contains(i))
                    .min_by_key(|&i| (load(&sets, VertexRef::new(c, i)), i))
                    .expect("room to pad");
                sets[c].insert(add);
            }
        }
    }
    let w = ExtremeWitness::from_sets(g, std::array::from_fn(|c| sets[c].ones().collect()));
    w.certify(delta0).then_some(w)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// Constructive pipeline with the exact oracle as fallback.
    #[default]
    Auto,
    /// Exact oracle only.
    Exact,
    /// Constructive pipeline without whole-graph oracle calls.
    Constructive,
}

impl FromStr for SolveMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            "constructive" => Ok(Self::Constructive),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoFactorSource {
    ExactOracle,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveOutcome {
    Cover(TriangleCover),
    Extreme(ExtremeWitness),
    NoFactor {
        source: NoFactorSource,
        witness: Option<StructureWitness>,
    },
    Indeterminate(String),
}

impl SolveOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Cover(_) => "cover",
            Self::Extreme(_) => "extreme",
            Self::NoFactor { .. } => "nofactor",
            Self::Indeterminate(_) => "indeterminate",
        }
    }

    /// `Some(true)` for a cover, `Some(false)` for a certified non-factor.
    pub fn has_factor(&self) -> Option<bool> {
        match self {
            Self::Cover(_) => Some(true),
            Self::NoFactor { .. } => Some(false),
            _ => None,
        }
    }
}

/// One logged augmentation step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ImprovedStep {
    pub before: usize,
    pub after: usize,
    pub changed: usize,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    pub mode: SolveMode,
    pub steps: Vec<ImprovedStep>,
    /// Stages the pipeline passed through, in order.
    pub trace: Vec<&'static str>,
}

/// Solves with [`SolveMode::Auto`].
pub fn solve(g: &TripartiteGraph, cfg: &Config) -> SolveOutcome {
    solve_with(g, cfg, SolveMode::Auto).outcome
}

/// Runs the covering pipeline and reports what it did.
pub fn solve_with(g: &TripartiteGraph, cfg: &Config, mode: SolveMode) -> SolveReport {
    let mut rep = SolveReport {
        outcome: SolveOutcome::Indeterminate(String::new()),
        mode,
        steps: Vec::new(),
        trace: Vec::new(),
    };
    rep.outcome = pipeline(g, cfg, mode, &mut rep);
    if let SolveOutcome::Cover(c) = &rep.outcome {
        assert!(verify_cover(g, c.triangles(), true).is_accept(), "solver produced an invalid cover");
    }
    rep
}

fn pipeline(g: &TripartiteGraph, cfg: &Config, mode: SolveMode, rep: &mut SolveReport) -> SolveOutcome {
    let n = g.n();
    if n == 0 {
        return SolveOutcome::Cover(TriangleCover::new(0));
    }
    if mode == SolveMode::Exact {
        rep.trace.push("exact");
        return exact_outcome(g, cfg, None);
    }
    let degree = g.min_cross_degree();
    if degree >= ceil_tol(0.75 * n as f64) {
        rep.trace.push("easy");
        if let Ok(c) = easy_cover(g) {
            return SolveOutcome::Cover(c);
        }
    }
    if let Some(sw) = recognize_gamma3(g) {
        rep.trace.push("gamma3");
        if sw.t % 2 == 0 {
            if let Ok(c) = extreme_cover(g, &sw, cfg) {
                return SolveOutcome::Cover(c);
            }
        } else if mode == SolveMode::Auto && n <= cfg.exact_limit {
            return exact_outcome(g, cfg, Some(sw));
        } else {
            return SolveOutcome::Indeterminate("gamma3-witness".into());
        }
    }
    if !n.is_multiple_of(3) && degree >= ceil_tol(2.0 * n as f64 / 3.0) {
        rep.trace.push("mod3");
        if let Some(c) = mod3_path(g, cfg, mode, rep) {
            return SolveOutcome::Cover(c);
        }
    }

    rep.trace.push("augment");
    let mut cover = greedy_partial_cover(g, cfg.seed);
    let mut extreme = None;
    while !cover.is_perfect() && check_preconditions(g, &cover, cfg).is_ok() {
        match augment_once(g, &AugmentState::new(cover.clone()), cfg) {
            Ok(AugmentStep::Improved { cover: next, changed }) => {
                assert!(next.len() > cover.len() && changed <= MAX_CHANGED);
                rep.steps.push(ImprovedStep {
                    before: cover.len(),
                    after: next.len(),
                    changed,
                });
                cover = next;
            }
            Ok(AugmentStep::Extreme(w)) => {
                rep.trace.push("extreme");
                if let Some(c) = extreme_path(g, &w, cfg) {
                    return SolveOutcome::Cover(c);
                }
                extreme = Some(w);
                break;
            }
            Ok(AugmentStep::Stuck) | Err(_) => break,
        }
    }
    if cover.is_perfect() {
        return SolveOutcome::Cover(cover);
    }
    if mode == SolveMode::Auto && n <= cfg.exact_limit {
        rep.trace.push("exact");
        return exact_outcome(g, cfg, None);
    }
    rep.trace.push("lns");
    if let Some(c) = lns_complete(g, &cover, cfg) {
        return SolveOutcome::Cover(c);
    }
    match extreme {
        Some(w) => SolveOutcome::Extreme(w),
        None => SolveOutcome::Indeterminate(format!("augmentation stalled at {} of {n} triangles", cover.len())),
    }
}

fn exact_outcome(g: &TripartiteGraph, cfg: &Config, witness: Option<StructureWitness>) -> SolveOutcome {
    if g.n() > MAX_CLASS {
        return SolveOutcome::Indeterminate(format!("class size {} exceeds the exact oracle", g.n()));
    }
    match exact_factor(g, false, cfg.budget).verdict {
        ExactVerdict::Cover(ts) => {
            SolveOutcome::Cover(TriangleCover::from_triangles(g.n(), ts).expect("oracle cover is disjoint"))
        }
        ExactVerdict::NoFactor => SolveOutcome::NoFactor {
            source: NoFactorSource::ExactOracle,
            witness,
        },
        ExactVerdict::BudgetExceeded => SolveOutcome::Indeterminate("exact budget exceeded".into()),
    }
}

/// Extreme triple -> `A'/B'/C'` partition -> `Γ₃` or `Θ_{3×3}` -> cover.
fn extreme_path(g: &TripartiteGraph, w: &ExtremeWitness, cfg: &Config) -> Option<TriangleCover> {
    if !g.n().is_multiple_of(3) {
        return None;
    }
    let ep = classify_extreme_partition(g, w, cfg.theta, cfg.delta0).ok()?;
    let sw = discriminate_gamma_vs_theta(g, &ep, &Thresholds::from(cfg)).ok()?;
    extreme_cover(g, &sw, cfg).ok()
}

/// Largest class size of a window handed to the oracle by [`lns_complete`].
const LNS_WINDOW: usize = 12;
const LNS_ROUNDS: usize = 200;
const LNS_BUDGET: u64 = 200_000;

/// Completes a near-perfect cover by re-solving small windows exactly: all
/// uncovered vertices plus a few cover triangles, preferring triangles with
/// vertices adjacent to the uncovered ones.
fn lns_complete(g: &TripartiteGraph, cover: &TriangleCover, cfg: &Config) -> Option<TriangleCover> {
    let n = g.n();
    let missing = n - cover.len();
    if missing == 0 {
        return Some(cover.clone());
    }
    if missing > LNS_WINDOW {
        return None;
    }
    let unc: [FixedBitSet; CLASSES] = std::array::from_fn(|c| cover.uncovered(c));
    let touch = |t: &Triangle| -> usize {
        t.vertices()
            .iter()
            .map(|&v| other_classes(v.class).iter().map(|&o| g.degree_into(v, o, &unc[o])).sum::<usize>())
            .sum()
    };
    let mut ranked: Vec<usize> = (0..cover.len()).collect();
    ranked.sort_by_key(|&k| (std::cmp::Reverse(touch(&cover.triangles()[k])), k));
    let take = (LNS_WINDOW - missing).min(cover.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED);
    for round in 0..LNS_ROUNDS {
        let chosen: Vec<usize> = if round == 0 {
            ranked[..take].to_vec()
        } else {
            let pool = (2 * take).min(ranked.len());
            let mut p = ranked[..pool].to_vec();
            p.shuffle(&mut rng);
            if round % 2 == 1 {
                // Half the rounds draw from the whole cover.
                p = (0..cover.len()).collect();
                p.shuffle(&mut rng);
            }
            p.truncate(take);
            p
        };
        let mut keep = unc.clone();
        for &k in &chosen {
            for v in cover.triangles()[k].vertices() {
                keep[v.class].insert(v.index);
            }
        }
        let (sub, maps) = g.induced(&keep).ok()?;
        if let ExactVerdict::Cover(ts) = exact_factor(&sub, false, LNS_BUDGET).verdict {
            let mut out: Vec<Triangle> = cover
                .triangles()
                .iter()
                .enumerate()
                .filter(|(k, _)| !chosen.contains(k))
                .map(|(_, t)| *t)
                .collect();
            out.extend(ts.iter().map(|t| Triangle::from_indices(std::array::from_fn(|c| maps[c][t.v[c]]))));
            return TriangleCover::from_triangles(n, out).ok();
        }
    }
    None
}

/// Result of [`reduce_mod3`].
#[derive(Clone, Debug)]
pub struct Reduction {
    pub graph: TripartiteGraph,
    /// Removed triangles, in the original indexing.
    pub removed: Vec<Triangle>,
    /// `maps[c][i]`: original index of vertex `i` of class `c` in `graph`.
    pub maps: [Vec<usize>; CLASSES],
}

impl Reduction {
    fn lift(&self, t: &Triangle) -> Triangle {
        Triangle::from_indices(std::array::from_fn(|c| self.maps[c][t.v[c]]))
    }
}

/// Min cross-degree of `g` after deleting the vertices of `t`.
fn degree_after(g: &TripartiteGraph, deg: &[Vec<[usize; CLASSES]>; CLASSES], t: &Triangle) -> usize {
    let mut best = usize::MAX;
    for c in 0..CLASSES {
        for i in 0..g.n() {
            if t.v[c] == i {
                continue;
            }
            let v = VertexRef::new(c, i);
            for o in other_classes(c) {
                let d = deg[c][i][o] - usize::from(g.adjacent(v, t.vertex(o)));
                best = best.min(d);
            }
        }
    }
    best
}

/// Removes `N mod 3` disjoint triangles so the class size becomes a multiple
/// of 3. Each triangle is the first one (in sorted order) that leaves the
/// largest minimum cross-degree.
pub fn reduce_mod3(g: &TripartiteGraph) -> Result<Reduction, SolverError> {
    let n = g.n();
    let r = n % 3;
    if r == 0 {
        return Err(SolverError::PreconditionDivisibility(n));
    }
    let floor = ceil_tol(2.0 * n as f64 / 3.0);
    let degree = g.min_cross_degree();
    if degree < floor {
        return Err(SolverError::PreconditionDegree { degree, floor });
    }
    let mut keep = g.full_sets();
    let mut removed = Vec::with_capacity(r);
    for _ in 0..r {
        let (sub, maps) = g.induced(&keep).expect("balanced by construction");
        let deg: [Vec<[usize; CLASSES]>; CLASSES] = std::array::from_fn(|c| {
            (0..sub.n())
                .map(|i| {
                    std::array::from_fn(|o| {
                        if o == c {
                            0
                        } else {
                            sub.neighbors(VertexRef::new(c, i), o).count_ones(..)
                        }
                    })
                })
                .collect()
        });
        let mut best: Option<(usize, Triangle)> = None;
        for t in sub.triangles() {
            let d = degree_after(&sub, &deg, &t);
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, t));
            }
        }
        let (_, t) = best.ok_or(SolverError::NoTriangleExists)?;
        let global = Triangle::from_indices(std::array::from_fn(|c| maps[c][t.v[c]]));
        for c in 0..CLASSES {
            keep[c].set(global.v[c], false);
        }
        removed.push(global);
    }
    let (graph, maps) = g.induced(&keep).expect("balanced by construction");
    Ok(Reduction { graph, removed, maps })
}

/// Reduction, then a cover of the reduced graph. When the reduced graph is
/// exactly `Γ₃(t)` with `t` odd, a column-2 triangle and one column-0 and one
/// column-1 vertex per class are re-covered together with the removed
/// vertices, and the remaining `Γ₃(t-1)` is covered on its own.
fn mod3_path(g: &TripartiteGraph, cfg: &Config, mode: SolveMode, rep: &mut SolveReport) -> Option<TriangleCover> {
    let red = reduce_mod3(g).ok()?;
    let n = g.n();
    if let Some(sw) = recognize_gamma3(&red.graph) {
        if sw.t % 2 == 1 {
            rep.trace.push("gamma3-swap");
            return gamma_swap(g, &red, &sw, cfg);
        }
    }
    let sub = solve_with(&red.graph, cfg, mode);
    rep.steps.extend(sub.steps.iter().copied());
    let SolveOutcome::Cover(c) = sub.outcome else { return None };
    let tris = red.removed.iter().copied().chain(c.triangles().iter().map(|t| red.lift(t)));
    TriangleCover::from_triangles(n, tris).ok()
}

fn gamma_swap(g: &TripartiteGraph, red: &Reduction, sw: &StructureWitness, cfg: &Config) -> Option<TriangleCover> {
    let n = g.n();
    let h = &red.graph;
    let t = sw.t;
    let members = |c: usize, j: usize| -> Vec<usize> { sw.cluster(c, j).ones().collect() };
    let col2: [Vec<usize>; CLASSES] = std::array::from_fn(|c| members(c, 2));
    let col0: [Vec<usize>; CLASSES] = std::array::from_fn(|c| members(c, 0));
    let col1: [Vec<usize>; CLASSES] = std::array::from_fn(|c| members(c, 1));
    for k in 0..t.min(8) {
        // Column 2 is complete across classes, so any transversal is a triangle.
        let tri = Triangle::from_indices(std::array::from_fn(|c| col2[c][k]));
        for s in 0..t.min(8) {
            let local: [Vec<usize>; CLASSES] = std::array::from_fn(|c| vec![tri.v[c], col0[c][s], col1[c][s]]);
            let mut small: [FixedBitSet; CLASSES] = std::array::from_fn(|_| FixedBitSet::with_capacity(n));
            for c in 0..CLASSES {
                for &i in &local[c] {
                    small[c].insert(red.maps[c][i]);
                }
                for rt in &red.removed {
                    small[c].insert(rt.v[c]);
                }
            }
            let (sg, smaps) = g.induced(&small).ok()?;
            let ExactVerdict::Cover(sts) = exact_factor(&sg, false, cfg.budget).verdict else { continue };
            let mut rest: [FixedBitSet; CLASSES] = std::array::from_fn(|_| full_set(h.n()));
            for c in 0..CLASSES {
                for &i in &local[c] {
                    rest[c].set(i, false);
                }
            }
            let (rg, rmaps) = h.induced(&rest).ok()?;
            let rest_cover = if rg.n() == 0 {
                TriangleCover::new(0)
            } else {
                let rsw = recognize_gamma3(&rg)?;
                extreme_cover(&rg, &rsw, cfg).ok()?
            };
            let mut tris: Vec<Triangle> = sts
                .iter()
                .map(|st| Triangle::from_indices(std::array::from_fn(|c| smaps[c][st.v[c]])))
                .collect();
            tris.extend(
                rest_cover
                    .triangles()
                    .iter()
                    .map(|rt| red.lift(&Triangle::from_indices(std::array::from_fn(|c| rmaps[c][rt.v[c]])))),
            );
            if let Ok(cover) = TriangleCover::from_triangles(n, tris) {
                if verify_cover(g, cover.triangles(), true).is_accept() {
                    return Some(cover);
                }
            }
        }
    }
    None
}
