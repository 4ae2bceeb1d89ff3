//! `carre`: run carré du champ checks described by a TOML config.
//!
//! Exit status: 0 when every check holds or finds no violation, 2 on a
//! violation, 3 when only hypothesis warnings remain, 1 on configuration
//! errors. Reports are written in every case.

mod checks;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use crate::checks::{exit_code, run_check};
use crate::config::Source;
use crate::error::Result;
use crate::output::RunInfo;

#[derive(Debug, Parser)]
#[command(name = "carre", version, about = "Carré du champ checks on Hörmander-type diffusion triples")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Report directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Seed for sample points and random functions; overrides `seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Check to run (repeatable); overrides `checks`.
    #[arg(long = "check", value_name = "NAME")]
    checks: Vec<String>,
}

const DEFAULT_OUT: &str = "carre-reports";

fn run(cli: &Cli) -> Result<(u8, PathBuf)> {
    let (mut config, text) = config::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.clone().or_else(|| config.output.dir.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
    let result = (|| {
        let checks = config.selected_checks(&cli.checks)?;
        let src = Source { path: &cli.config, text: &text };
        let setup = config.setup(&src)?;
        config.validate(&checks, &setup)?;
        Ok((checks, setup))
    })();
    let (checks, setup) = match result {
        Ok(v) => v,
        Err(e) => {
            output::write_error(&out, &e)?;
            return Err(e);
        }
    };
    let info = RunInfo {
        seed: config.seed,
        geometry: {
            let mut g = serde_json::to_value(setup.triple.kind()).expect("geometry kind serializes");
            g["name"] = json!(setup.triple.name());
            g["dimension"] = json!(setup.triple.dimension());
            g
        },
        conventions: setup.triple.conventions().to_vec(),
    };
    let mut outcomes = Vec::with_capacity(checks.len());
    for name in &checks {
        let o = run_check(name, &config, &setup);
        println!("[{}] {}: {}", o.status.as_str(), o.check, o.summary);
        outcomes.push(o);
    }
    let statuses: Vec<_> = outcomes.iter().map(|o| o.status).collect();
    let code = exit_code(&statuses);
    output::write_reports(&out, &info, &outcomes, config.output.csv, code)?;
    Ok((code, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok((code, out)) => {
            println!("reports written to {}", out.display());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
