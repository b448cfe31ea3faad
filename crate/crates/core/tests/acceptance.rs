//! Acceptance suite: one PASS/FAIL line per criterion, then a single assert.

use std::io::Write;
use std::time::{Duration, Instant};

use trifactor::cover::{easy_cover, solve_with, SolveMode, SolveOutcome};
use trifactor::exact::{exact_factor, ExactVerdict};
use trifactor::extremal::{
    balanced_random_split, classify_extreme_partition, classify_theta32, discriminate_gamma_vs_theta, extreme_cover,
    ExtremalError, Model, StructureWitness, Thresholds,
};
use trifactor::families::{approx_blow_up, gamma3, gen_random_min_degree, gen_theta, theta3x2, theta3x3};
use trifactor::graph::{Config, TripartiteGraph, Triangle, VertexRef};
use trifactor::harness::{check_conjecture, CaseStatus};

const BUDGET: u64 = 100_000_000;

// Time limits.
const C1_PER_RUN: Duration = Duration::from_secs(60);
const C2_TOTAL: Duration = Duration::from_secs(600);
const C4_PER_INSTANCE: Duration = Duration::from_secs(1);
const C11_TOTAL: Duration = Duration::from_secs(300);

// Counts and rates.
const C4_SEEDS: u64 = 100;
const C5_SEEDS: u64 = 25;
const C6_MAX_CHANGED: usize = 15;
const C7_AGREEMENT: f64 = 0.95;
/// Classifier density tolerance. Noise at p = 0.01 on 64-pair cluster pairs
/// realizes up to 5/64 on some seeds, so the tolerance sits above that.
const C7_CLASSIFY_DELTA: f64 = 0.1;
const C7_SEEDS: u64 = 50;
const C7_REQUIRED: usize = 48;
const C8_SEEDS: u64 = 25;
const C9_EPS: f64 = 0.1;
const C9_SEEDS: u64 = 200;
const C9_RATE: f64 = 0.99;
const C10_SEEDS: u64 = 50;

/// Independent perfect-cover check: `n` disjoint triangles, all edges present.
fn is_perfect_cover(g: &TripartiteGraph, ts: &[Triangle]) -> bool {
    let n = g.n();
    if ts.len() != n {
        return false;
    }
    let mut seen = vec![[false; 3]; n];
    for t in ts {
        for c in 0..3 {
            let i = t.v[c];
            if i >= n || seen[i][c] {
                return false;
            }
            seen[i][c] = true;
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            if !g.adjacent(VertexRef::new(a, t.v[a]), VertexRef::new(b, t.v[b])) {
                return false;
            }
        }
    }
    true
}

fn oracle(g: &TripartiteGraph) -> Option<bool> {
    match exact_factor(g, false, BUDGET).verdict {
        ExactVerdict::Cover(ts) => Some(is_perfect_cover(g, &ts)),
        ExactVerdict::NoFactor => Some(false),
        ExactVerdict::BudgetExceeded => None,
    }
}

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line {
        pass,
        detail: detail.into(),
    }
}

fn c1_gamma_parity() -> Line {
    let mut bad = Vec::new();
    let mut slowest = Duration::ZERO;
    for t in 1..=5 {
        let g = gamma3(t);
        let start = Instant::now();
        let r = exact_factor(&g, false, BUDGET);
        let took = start.elapsed();
        slowest = slowest.max(took);
        let ok = match (&r.verdict, t % 2) {
            (ExactVerdict::NoFactor, 1) => true,
            (ExactVerdict::Cover(ts), 0) => is_perfect_cover(&g, ts),
            _ => false,
        };
        if !ok || took >= C1_PER_RUN {
            bad.push(t);
        }
    }
    line(bad.is_empty(), format!("failing t = {bad:?}, slowest run {slowest:.2?}"))
}

fn c2_edge_tightness() -> Line {
    let g = gamma3(3);
    let start = Instant::now();
    let (mut total, mut covered) = (0, 0);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for i in 0..9 {
            for j in 0..9 {
                let (u, v) = (VertexRef::new(a, i), VertexRef::new(b, j));
                if g.adjacent(u, v) {
                    continue;
                }
                total += 1;
                if oracle(&g.with_edge(u, v).unwrap()) == Some(true) {
                    covered += 1;
                }
            }
        }
    }
    let took = start.elapsed();
    line(
        total > 0 && covered == total && took < C2_TOTAL,
        format!("{covered}/{total} non-edges give a factor in {took:.2?}"),
    )
}

fn c3_theta32_triangle_free() -> Line {
    let mut found = 0;
    for t in 1..=6 {
        let g = theta3x2(t);
        let n = g.n();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let (u, v, w) = (VertexRef::new(0, x), VertexRef::new(1, y), VertexRef::new(2, z));
                    if g.adjacent(u, v) && g.adjacent(u, w) && g.adjacent(v, w) {
                        found += 1;
                    }
                }
            }
        }
    }
    line(found == 0, format!("{found} triangles in theta 3x2 blow-ups, t <= 6"))
}

fn c4_easy_cover() -> Line {
    let mut fails = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut runs = 0;
    for n in [8, 12, 20, 40, 60] {
        for seed in 0..C4_SEEDS {
            let g = gen_random_min_degree(n, 0.75, seed).unwrap();
            let start = Instant::now();
            let ok = easy_cover(&g).is_ok_and(|c| is_perfect_cover(&g, c.triangles()));
            let took = start.elapsed();
            slowest = slowest.max(took);
            runs += 1;
            if !ok || took >= C4_PER_INSTANCE {
                fails.push((n, seed));
            }
        }
    }
    line(
        fails.is_empty(),
        format!("{}/{runs} verified, slowest {slowest:.2?}, failures {:?}", runs - fails.len(), fails),
    )
}

/// Criteria 5 and 6 share their runs.
fn c5_c6_oracle_equivalence() -> (Line, Line) {
    let cfg = Config::default();
    let mut disagreements = Vec::new();
    let mut runs = 0;
    let (mut steps, mut worst, mut non_increasing) = (0, 0, 0);
    for n in [6, 9, 12] {
        for frac in [0.5, 2.0 / 3.0, 0.75, 0.9] {
            for seed in 0..C5_SEEDS {
                let g = gen_random_min_degree(n, frac, seed).unwrap();
                let rep = solve_with(&g, &Config { seed, ..cfg.clone() }, SolveMode::Auto);
                runs += 1;
                let truth = oracle(&g);
                let decided = match &rep.outcome {
                    SolveOutcome::Cover(c) => Some(is_perfect_cover(&g, c.triangles())),
                    SolveOutcome::NoFactor { .. } => Some(false),
                    _ => None,
                };
                if truth.is_none() || decided != truth {
                    disagreements.push((n, frac, seed));
                }
                for s in &rep.steps {
                    steps += 1;
                    worst = worst.max(s.changed);
                    if s.after <= s.before {
                        non_increasing += 1;
                    }
                }
            }
        }
    }
    (
        line(
            runs == 300 && disagreements.is_empty(),
            format!("{} disagreements over {runs} instances {:?}", disagreements.len(), disagreements),
        ),
        line(
            steps > 0 && worst <= C6_MAX_CHANGED && non_increasing == 0,
            format!("{steps} improved steps, max changed {worst}, non-increasing {non_increasing}"),
        ),
    )
}

fn c7_structure_recovery() -> Line {
    let base = gen_theta(3, 2).unwrap();
    let mut good = 0;
    for seed in 0..C7_SEEDS {
        let a = approx_blow_up(&base, 8, 0.05, 0.01, seed).unwrap();
        let g = a.graph.to_tripartite().unwrap();
        let planted: [Vec<usize>; 3] =
            std::array::from_fn(|c| (0..g.n()).map(|i| a.cluster_of[a.graph.id(c, i)].1).collect());
        let Ok(w) = classify_theta32(&g, 8, 0.05, C7_CLASSIFY_DELTA) else { continue };
        let total = 3 * g.n();
        let agree = [0, 1]
            .iter()
            .map(|&flip| {
                (0..3)
                    .flat_map(|c| (0..g.n()).map(move |i| (c, i)))
                    .filter(|&(c, i)| w.assignment[c][i] ^ flip == planted[c][i])
                    .count()
            })
            .max()
            .unwrap();
        if agree as f64 >= C7_AGREEMENT * total as f64 {
            good += 1;
        }
    }

    let mut errors = Vec::new();
    for t in 3..=8 {
        for (g, want) in [(gamma3(t), Model::Gamma3), (theta3x3(t), Model::Theta33)] {
            let w = trifactor::cover::ExtremeWitness::from_sets(&g, std::array::from_fn(|_| (0..t).collect()));
            let got = classify_extreme_partition(&g, &w, 0.8, 0.05)
                .ok()
                .and_then(|ep| discriminate_gamma_vs_theta(&g, &ep, &Thresholds::default()).ok())
                .map(|sw| sw.model);
            if got != Some(want) {
                errors.push((t, want));
            }
        }
    }
    line(
        good >= C7_REQUIRED && errors.is_empty(),
        format!("theta 3x2 recovered on {good}/{C7_SEEDS} seeds; labelling errors {errors:?}"),
    )
}

fn block_witness(g: &TripartiteGraph, model: Model, t: usize) -> StructureWitness {
    StructureWitness::new(g, model, t, std::array::from_fn(|_| (0..3 * t).map(|i| i / t).collect())).unwrap()
}

fn c8_extreme_cover() -> Line {
    let cfg = Config::default();
    let mut fails = Vec::new();
    for t in [2, 4] {
        let g = gamma3(t);
        let ok = extreme_cover(&g, &block_witness(&g, Model::Gamma3, t), &cfg)
            .is_ok_and(|c| is_perfect_cover(&g, c.triangles()));
        if !ok {
            fails.push(format!("gamma3({t})"));
        }
    }
    let base = gen_theta(3, 3).unwrap();
    let mut covered = 0;
    for seed in 0..C8_SEEDS {
        let a = approx_blow_up(&base, 8, 0.02, 0.01, seed).unwrap();
        let g = a.graph.to_tripartite().unwrap();
        let assignment = std::array::from_fn(|c| (0..g.n()).map(|i| a.cluster_of[a.graph.id(c, i)].1).collect());
        let sw = StructureWitness::new(&g, Model::Theta33, 8, assignment).unwrap();
        if extreme_cover(&g, &sw, &Config { seed, ..cfg.clone() }).is_ok_and(|c| is_perfect_cover(&g, c.triangles())) {
            covered += 1;
        }
    }
    if covered != C8_SEEDS {
        fails.push(format!("theta 3x3 covered {covered}/{C8_SEEDS}"));
    }
    let g3 = gamma3(3);
    let odd = extreme_cover(&g3, &block_witness(&g3, Model::Gamma3, 3), &cfg);
    if odd != Err(ExtremalError::ExactGammaOdd) {
        fails.push(format!("gamma3(3) gave {odd:?}"));
    }
    line(fails.is_empty(), format!("failures {fails:?}"))
}

fn c9_concentration() -> Line {
    let t = 20;
    let g = gamma3(t);
    let n = g.n();
    let bound = C9_EPS * n as f64;
    let (mut trials, mut within) = (0usize, 0usize);
    for seed in 0..C9_SEEDS {
        for c in 0..3 {
            for j in 0..3 {
                let cluster = trifactor::graph::set_of(n, j * t..(j + 1) * t);
                let rep = balanced_random_split(&g, c, &cluster, seed).unwrap();
                for (_, d) in &rep.deviations {
                    trials += 1;
                    if *d <= bound {
                        within += 1;
                    }
                }
            }
        }
    }
    let rate = within as f64 / trials.max(1) as f64;
    line(trials > 0 && rate >= C9_RATE, format!("{within}/{trials} within {bound} ({rate:.4})"))
}

fn c10_reduction() -> Line {
    let cfg = Config::default();
    let mut fails = Vec::new();
    for n in [10, 11] {
        for seed in 0..C10_SEEDS {
            let g = gen_random_min_degree(n, 0.7, seed).unwrap();
            let rep = solve_with(&g, &Config { seed, ..cfg.clone() }, SolveMode::Auto);
            let ok = match &rep.outcome {
                SolveOutcome::Cover(c) => is_perfect_cover(&g, c.triangles()) && oracle(&g) == Some(true),
                _ => false,
            };
            if !ok {
                fails.push((n, seed, rep.outcome.tag()));
            }
        }
    }
    line(
        fails.is_empty(),
        format!("{}/{} confirmed covers, failures {fails:?}", 2 * C10_SEEDS as usize - fails.len(), 2 * C10_SEEDS),
    )
}

fn c11_conjecture() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let report = check_conjecture(2, &[1, 2], BUDGET, 0, dir.path()).unwrap();
    let took = start.elapsed();
    let cx = report.count(CaseStatus::Counterexample);
    let ind = report.count(CaseStatus::Indeterminate);
    line(
        cx == 0 && ind == 0 && took < C11_TOTAL,
        format!(
            "{} cases, {} with hypothesis, {cx} counterexamples, {ind} indeterminate, {took:.2?}",
            report.rows.len(),
            report.hypothesis_cases().count()
        ),
    )
}

#[test]
fn acceptance() {
    let (c5, c6) = c5_c6_oracle_equivalence();
    let lines = [
        c1_gamma_parity(),
        c2_edge_tightness(),
        c3_theta32_triangle_free(),
        c4_easy_cover(),
        c5,
        c6,
        c7_structure_recovery(),
        c8_extreme_cover(),
        c9_concentration(),
        c10_reduction(),
        c11_conjecture(),
    ];
    // Written past the test harness's output capture so the table always shows.
    let mut out = std::io::stdout().lock();
    for (k, l) in lines.iter().enumerate() {
        let verdict = if l.pass { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {:>2}: {verdict} : {}", k + 1, l.detail).unwrap();
    }
    drop(out);
    let failed: Vec<usize> = lines.iter().enumerate().filter(|(_, l)| !l.pass).map(|(k, _)| k + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
