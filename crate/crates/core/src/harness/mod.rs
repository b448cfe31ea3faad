//! File formats, sweeps and the conjecture scanner behind the CLI.

pub mod conjecture;
pub mod io;
pub mod sweep;

pub use conjecture::{check_conjecture, CaseStatus, ConjectureReport, ConjectureRow};
pub use io::{parse_tri3, write_tri3, IoError, ParseError};
pub use sweep::{run_sweep, sweep_csv, SweepRecord, SweepSpec};
