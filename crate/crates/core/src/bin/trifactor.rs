use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use trifactor::cover::{solve_with, SolveMode, SolveOutcome};
use trifactor::families::{gen_random_min_degree, FamilyKind, FamilySpec};
use trifactor::graph::{verify_cover, Config, TripartiteGraph};
use trifactor::harness::io::{
    cover_to_json, extreme_witness_json, parse_config, parse_cover_json, read_file, roundtrip, structure_witness_json,
    write_file, IoError,
};
use trifactor::harness::sweep::{run_sweep, sweep_csv, SweepSpec};
use trifactor::harness::{check_conjecture, parse_tri3, write_tri3, CaseStatus};

#[derive(Parser)]
#[command(name = "trifactor", version, about = "Perfect triangle factors of balanced tripartite graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Theta3x2,
    Theta3x3,
    Gamma3,
    Complete,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Exact,
    Constructive,
}

impl From<Mode> for SolveMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Auto => SolveMode::Auto,
            Mode::Exact => SolveMode::Exact,
            Mode::Constructive => SolveMode::Constructive,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Class size for `complete` and `random`.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 2.0 / 3.0)]
        min_deg_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a perfect triangle factor or a certificate.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Check a cover against a graph.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        /// Accept covers that leave vertices uncovered.
        #[arg(long)]
        partial: bool,
    },
    /// Sweep random instances over class sizes and degree fractions.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Add a wall-time column (breaks byte-for-byte reproducibility).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan small base graphs for counterexamples to the blow-up conjecture.
    Conjecture {
        #[arg(long, default_value_t = 2)]
        max_base_n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        t: Vec<usize>,
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "conjecture-witnesses")]
        witness_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and re-serialize a graph or cover in canonical form.
    Roundtrip {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Parse(String),
    Verify(String),
    Other(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Parse(p) => Failure::Parse(p.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => Ok(write_file(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<TripartiteGraph, Failure> {
    let text = read_file(path)?;
    parse_tri3(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>, seed: Option<u64>, budget: Option<u64>) -> Result<Config, Failure> {
    let mut cfg = match path {
        Some(p) => parse_config(&read_file(p)?).map_err(|e| Failure::Parse(format!("{}: {e}", p.display())))?,
        None => Config::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(b) = budget {
        cfg.budget = b;
    }
    Ok(cfg)
}

fn generate(family: Family, t: usize, noise: (f64, f64), n: Option<usize>, frac: f64, seed: u64) -> Result<TripartiteGraph, String> {
    let need_n = || n.ok_or_else(|| "--n is required for this family".to_string());
    let spec = |kind| FamilySpec { kind, t, noise, seed };
    let g = match family {
        Family::Random => gen_random_min_degree(need_n()?, frac, seed),
        Family::Complete => spec(FamilyKind::CompleteTripartite { n: need_n()? }).build(),
        Family::Gamma3 => spec(FamilyKind::Gamma { k: 3 }).build(),
        Family::Theta3x3 => spec(FamilyKind::Theta { m: 3, n: 3 }).build(),
        Family::Theta3x2 => spec(FamilyKind::Theta { m: 3, n: 2 }).build(),
    };
    g.map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Gen {
            family,
            t,
            eps,
            delta,
            n,
            min_deg_frac,
            seed,
            out,
        } => {
            let g = generate(family, t, (eps, delta), n, min_deg_frac, seed).map_err(Failure::Other)?;
            emit(out.as_deref(), &write_tri3(&g))
        }
        Cmd::Solve {
            input,
            mode,
            seed,
            budget,
            config,
            out,
            witness,
        } => {
            let g = load_graph(&input)?;
            let cfg = load_config(config.as_deref(), seed, budget)?;
            let report = solve_with(&g, &cfg, mode.into());
            let witness_text = match &report.outcome {
                SolveOutcome::Cover(c) => {
                    emit(out.as_deref(), &(cover_to_json(c.triangles()) + "\n"))?;
                    None
                }
                SolveOutcome::Extreme(w) => Some(extreme_witness_json(w)),
                SolveOutcome::NoFactor { witness: Some(w), .. } => Some(structure_witness_json(w)),
                _ => None,
            };
            if let (Some(path), Some(text)) = (witness.as_deref(), witness_text) {
                write_file(path, &(text + "\n"))?;
            }
            match &report.outcome {
                SolveOutcome::Indeterminate(why) => eprintln!("indeterminate: {why}"),
                other => eprintln!("{}", other.tag()),
            }
            Ok(())
        }
        Cmd::Verify { input, cover, partial } => {
            let g = load_graph(&input)?;
            let text = read_file(&cover)?;
            let ts = parse_cover_json(&text).map_err(|e| Failure::Parse(format!("{}: {e}", cover.display())))?;
            let verdict = verify_cover(&g, &ts, !partial);
            if verdict.is_accept() {
                println!("accept");
                Ok(())
            } else {
                Err(Failure::Verify(format!("{verdict:?}")))
            }
        }
        Cmd::Sweep {
            n,
            fractions,
            trials,
            seed,
            mode,
            budget,
            config,
            timing,
            out,
        } => {
            let cfg = load_config(config.as_deref(), None, budget)?;
            let spec = SweepSpec {
                n_values: n,
                fractions,
                trials,
                seed_base: seed,
                mode: mode.into(),
            };
            let rows = run_sweep(&spec, &cfg).map_err(|e| Failure::Other(e.to_string()))?;
            emit(out.as_deref(), &sweep_csv(&rows, timing))
        }
        Cmd::Conjecture {
            max_base_n,
            t,
            budget,
            seed,
            witness_dir,
            out,
        } => {
            let report = check_conjecture(max_base_n, &t, budget, seed, &witness_dir)?;
            emit(out.as_deref(), &report.to_csv())?;
            eprintln!(
                "cases {} hypothesis {} counterexamples {} indeterminate {}",
                report.rows.len(),
                report.hypothesis_cases().count(),
                report.count(CaseStatus::Counterexample),
                report.count(CaseStatus::Indeterminate)
            );
            Ok(())
        }
        Cmd::Roundtrip { input, out } => {
            let text = read_file(&input)?;
            let canon = roundtrip(&text).map_err(|e| Failure::Parse(format!("{}: {e}", input.display())))?;
            emit(out.as_deref(), &canon)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Parse(msg)) => {
            eprintln!("parse error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
