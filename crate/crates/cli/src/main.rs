//! `qcurve` — command-line runner for constant Q- and U-curvature solves on
//! the radial Poincaré ball.
//!
//! ```bash
//! qcurve indicial --n 5
//! qcurve solve --n 4 --amplitude 1e-3 --out results/
//! qcurve sweep --n 5 --amplitudes=-1e-3,-5e-4,5e-4,1e-3
//! qcurve ucurve --preset D2 --points 2048
//! qcurve verify covariance --seed 7
//! ```
//!
//! Exit codes: 0 success, 1 solver non-convergence or failed check (report
//! still written), 2 configuration error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use commands::Status;
use config::{parse_config, Cli};

fn config_error_code(e: &qcurve_core::Error) -> bool {
    use qcurve_core::Error as E;
    matches!(
        e,
        E::Dimension(_)
            | E::DegenerateAlpha
            | E::Precondition(_)
            | E::Grid(_)
            | E::NoKernel(_)
            | E::GridTooCoarse { .. }
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match parse_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match commands::execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if config_error_code(&e) { 2 } else { 1 });
        }
    };
    match outcome.write(&cfg) {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match outcome.status {
        Status::Success => ExitCode::SUCCESS,
        Status::Failed => {
            eprintln!("error: {} did not succeed (report written to {})", outcome.stem, cfg.out_dir.display());
            ExitCode::from(1)
        }
    }
}
