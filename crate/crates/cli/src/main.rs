use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use omega_lab_cli::config::CACHE_ENV;
use omega_lab_cli::{exit_code, render, run_experiment, Args, ExperimentConfig};
use omega_lab_core::Result;

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omega-lab: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn run(args: Args) -> Result<()> {
    let args = args.merge_config_file()?;
    let cfg = ExperimentConfig::from_args(args, std::env::var_os(CACHE_ENV).map(Into::into))?;
    let table = run_experiment(&cfg)?;
    match &cfg.output {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            render(&table, cfg.format, cfg.timing, &mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            render(&table, cfg.format, cfg.timing, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}
