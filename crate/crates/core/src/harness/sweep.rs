//! Degree-threshold sweeps over random instances.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cover::{solve_with, SolveMode, SolveOutcome};
use crate::exact::has_factor;
use crate::families::gen_random_min_degree;
use crate::graph::Config;

pub const CSV_HEADER: &str = "# trifactor-sweep v1";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub n_values: Vec<usize>,
    pub fractions: Vec<f64>,
    pub trials: usize,
    pub seed_base: u64,
    pub mode: SolveMode,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("trials must be at least 1")]
    Trials,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if let Some(&f) = self.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(SweepError::Fraction(f));
        }
        if self.trials == 0 {
            return Err(SweepError::Trials);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub fraction: f64,
    pub seed: u64,
    pub outcome: &'static str,
    pub cover_size: usize,
    /// Whether the exact oracle agrees with the outcome. `None` above the
    /// oracle limit.
    pub oracle_confirmed: Option<bool>,
    pub wall_ms: f64,
}

fn run_cell(n: usize, fraction: f64, seed: u64, mode: SolveMode, cfg: &Config) -> SweepRecord {
    let start = Instant::now();
    let cfg = Config { seed, ..cfg.clone() };
    let (outcome, oracle_confirmed) = match gen_random_min_degree(n, fraction, seed) {
        Ok(g) => {
            let out = solve_with(&g, &cfg, mode).outcome;
            let confirmed = (n <= cfg.exact_limit).then(|| match (&out, has_factor(&g, cfg.budget)) {
                (SolveOutcome::Cover(_), Ok(truth)) => truth,
                (SolveOutcome::NoFactor { .. }, Ok(truth)) => !truth,
                _ => false,
            });
            (out, confirmed)
        }
        Err(e) => (SolveOutcome::Indeterminate(e.to_string()), None),
    };
    let cover_size = match &outcome {
        SolveOutcome::Cover(c) => c.len(),
        _ => 0,
    };
    SweepRecord {
        n,
        fraction,
        seed,
        outcome: outcome.tag(),
        cover_size,
        oracle_confirmed,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Solves every `(n, fraction, trial)` cell in parallel. Trial `k` uses seed
/// `seed_base + k`; rows come back sorted by `(n, fraction, seed)`.
pub fn run_sweep(spec: &SweepSpec, cfg: &Config) -> Result<Vec<SweepRecord>, SweepError> {
    spec.validate()?;
    let cells: Vec<(usize, f64, u64)> = spec
        .n_values
        .iter()
        .flat_map(|&n| {
            spec.fractions
                .iter()
                .flat_map(move |&f| (0..spec.trials as u64).map(move |k| (n, f, spec.seed_base + k)))
        })
        .collect();
    let mut rows: Vec<SweepRecord> = cells
        .into_par_iter()
        .map(|(n, f, s)| run_cell(n, f, s, spec.mode, cfg))
        .collect();
    rows.sort_by(|a, b| (a.n, a.fraction, a.seed).partial_cmp(&(b.n, b.fraction, b.seed)).expect("finite"));
    Ok(rows)
}

/// CSV with the versioned header comment. Wall time is omitted unless
/// `timing` is set, so output is reproducible byte for byte.
pub fn sweep_csv(rows: &[SweepRecord], timing: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n", "fraction", "seed", "outcome", "cover_size", "oracle_confirmed"];
    if timing {
        header.push("wall_ms");
    }
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![
            r.n.to_string(),
            r.fraction.to_string(),
            r.seed.to_string(),
            r.outcome.to_string(),
            r.cover_size.to_string(),
            r.oracle_confirmed.map_or(String::new(), |b| b.to_string()),
        ];
        if timing {
            rec.push(format!("{:.3}", r.wall_ms));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("flush")).expect("utf8");
    format!("{CSV_HEADER}\n{body}")
}
