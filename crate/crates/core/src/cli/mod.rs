//! Command-line front end: `capcert run`, `capcert montecarlo` and
//! `capcert preset`.
//!
//! Exit codes: 0 on success, 1 for malformed configuration or I/O failure,
//! 2 when the parameters are valid but infeasible.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, ExperimentConfig};
pub use run::{run_experiments, run_montecarlo, RunOptions, RunReport};

use crate::error::Error;

/// Bundled experiment definitions, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2", include_str!("../../presets/fig2.json")),
    ("fig3", include_str!("../../presets/fig3.json")),
    ("supp-cutoff", include_str!("../../presets/supp-cutoff.json")),
    ("supp-photon", include_str!("../../presets/supp-photon.json")),
    ("supp-binwidth", include_str!("../../presets/supp-binwidth.json")),
    ("supp-infidelity", include_str!("../../presets/supp-infidelity.json")),
    ("supp-asym-binwidth", include_str!("../../presets/supp-asym-binwidth.json")),
    ("qubit-coherent-info", include_str!("../../presets/qubit-coherent-info.json")),
];

/// Body of a bundled preset.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, body)| *body)
}

#[derive(Debug, Parser)]
#[command(name = "capcert", version, about = "Certified capacity bounds for continuous-variable channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Directory for output files (default: current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "CAPCERT_THREADS")]
    pub threads: Option<usize>,
}

impl CommonArgs {
    fn options(&self) -> RunOptions {
        RunOptions { out_dir: self.out.clone(), seed: self.seed, threads: self.threads }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an experiment file and write its table.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run repeated trials and write per-trial records plus a summary.
    Montecarlo {
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a bundled experiment.
    Preset {
        /// Preset name; omit with --list.
        name: Option<String>,
        /// List available presets.
        #[arg(long)]
        list: bool,
        /// Print the preset configuration instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_) => 2,
        _ => 1,
    }
}

fn finish(result: crate::Result<RunReport>) -> i32 {
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.infeasible.is_empty() {
                0
            } else {
                for msg in &report.infeasible {
                    eprintln!("infeasible: {msg}");
                }
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(path: &PathBuf) -> crate::Result<Vec<ExperimentConfig>> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run { config, common } => finish(load(&config).and_then(|c| run_experiments(&c, &common.options()))),
        Command::Montecarlo { config, common } => {
            finish(load(&config).and_then(|c| run_montecarlo(&c, &common.options())))
        }
        Command::Preset { name, list, print, common } => {
            if list || name.is_none() {
                for (n, _) in PRESETS {
                    println!("{n}");
                }
                return if list { 0 } else { 1 };
            }
            let name = name.expect("checked above");
            let Some(body) = preset(&name) else {
                eprintln!("error: unknown preset '{name}'");
                return 1;
            };
            if print {
                print!("{body}");
                return 0;
            }
            finish(parse_config(body).and_then(|c| run_experiments(&c, &common.options())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for (name, body) in PRESETS {
            let cfgs = parse_config(body).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!cfgs.is_empty());
        }
    }

    #[test]
    fn loss_comparison_columns() {
        let cfg = parse_config(preset("fig3").unwrap()).unwrap().remove(0);
        assert_eq!(cfg.point_columns(), vec!["tau", "n_bar", "n_th", "d"]);
        assert_eq!(cfg.points().unwrap().len(), 51 * 2 * 2);
    }
}
