//! Command-line front end. Every subcommand reads one JSON config file;
//! `--seed` overrides the config's seed(s) where that makes sense.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nngmix::dataset::{load_csv, make_synthetic_clusters, write_csv, ClusterSpec, Standardizer};
use nngmix::harness::{
    export_projection, read_json, run_cell, run_generate, run_grid, run_intrusion, run_sweep, write_json,
    DatasetSource, ExperimentConfig, GenerateConfig, GridConfig, IntrusionConfig, Preset,
};
use nngmix::{Error, Result};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "nngmix", version, about = "Pseudo-anomaly generation and anomaly-detection benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed (or seed list).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a synthetic cluster dataset as CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Built-in layout used when no config is given.
        #[arg(long, value_enum, default_value = "two-cluster")]
        preset: PresetArg,
    },
    /// Carve a dataset and emit pseudo-anomalies plus provenance.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Run one experiment cell and print its result as JSON.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the full grid; resumable.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Fraction of generated rows inside the normal region.
    Intrusion {
        #[command(flatten)]
        common: Common,
    },
    /// Detector score over a 2-D mesh.
    Grid {
        #[command(flatten)]
        common: Common,
    },
    /// PCA projection of a dataset.
    Project {
        #[command(flatten)]
        common: Common,
        /// CSV input, as an alternative to a config file.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "label")]
        label_column: String,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PresetArg {
    TwoCluster,
    Ring,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthConfig {
    clusters: Vec<ClusterSpec>,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectConfig {
    dataset: DatasetSource,
    #[serde(default)]
    standardize: bool,
}

fn config_or_default<T: for<'de> Deserialize<'de>>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => serde_json::from_str("{}").map_err(|e| Error::Config(format!("a --config file is required: {e}"))),
    }
}

fn required<'a>(path: Option<&'a Path>, what: &str) -> Result<&'a Path> {
    path.ok_or_else(|| Error::Config(format!("--{what} is required")))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { common, preset } => {
            let (clusters, seed) = match &common.config {
                Some(p) => {
                    let c: SynthConfig = read_json(p)?;
                    (c.clusters, c.seed)
                }
                None => {
                    let p = match preset {
                        PresetArg::TwoCluster => Preset::TwoCluster,
                        PresetArg::Ring => Preset::Ring,
                    };
                    (p.clusters(), 0)
                }
            };
            let ds = make_synthetic_clusters(&clusters, common.seed.unwrap_or(seed))?;
            write_csv(&ds, required(common.out.as_deref(), "out")?)
        }
        Command::Generate { common } => {
            let mut cfg: GenerateConfig = read_json(required(common.config.as_deref(), "config")?)?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let out = run_generate(&cfg)?;
            let dir = required(common.out.as_deref(), "out")?;
            std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
            write_csv(&out.samples, dir.join("generated.csv"))?;
            write_json(&dir.join("provenance.json"), &out)?;
            eprintln!("{} pseudo-anomalies written to {}", out.samples.n(), dir.display());
            Ok(())
        }
        Command::Evaluate { common } => {
            let mut cfg = ExperimentConfig::from_json_file(required(common.config.as_deref(), "config")?)?;
            if let Some(s) = common.seed {
                cfg.seeds = vec![s];
            }
            cfg.validate()?;
            let ds = cfg.dataset.load()?;
            ds.check_benchmark_ready()?;
            let cells = cfg.cells(&ds);
            if cells.len() != 1 {
                return Err(Error::Config(format!(
                    "evaluate needs exactly one value per grid axis, config expands to {} cells; use `sweep`",
                    cells.len()
                )));
            }
            let row = run_cell(&cells[0], &ds)?.row;
            if let Some(out) = &common.out {
                write_json(out, &row)?;
            }
            print_json(&row)
        }
        Command::Sweep { common, jobs } => {
            let mut cfg = ExperimentConfig::from_json_file(required(common.config.as_deref(), "config")?)?;
            if let Some(s) = common.seed {
                cfg.seeds = vec![s];
            }
            let out = common
                .out
                .clone()
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::Config("--out or output_dir is required".into()))?;
            let outcome = run_sweep(&cfg, Some(&out), jobs)?;
            eprintln!(
                "{} rows ({} computed, {} reused), {} aggregates in {}",
                outcome.rows.len(),
                outcome.computed,
                outcome.reused,
                outcome.aggregates.len(),
                out.display()
            );
            Ok(())
        }
        Command::Intrusion { common } => {
            let mut cfg: IntrusionConfig = config_or_default(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seeds = vec![s];
            }
            let report = run_intrusion(&cfg)?;
            if let Some(out) = &common.out {
                write_json(out, &report)?;
            }
            for e in &report.entries {
                println!("{:<40} {:.6}", e.generator, e.mean_fraction);
            }
            Ok(())
        }
        Command::Grid { common } => {
            let mut cfg: GridConfig = config_or_default(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let out = required(common.out.as_deref(), "out")?;
            let run = run_grid(&cfg, Some(out))?;
            eprintln!("{} grid points written to {}", run.grid.len(), out.display());
            Ok(())
        }
        Command::Project {
            common,
            input,
            label_column,
        } => {
            let ds = match (&input, &common.config) {
                (Some(p), _) => load_csv(p, &label_column)?,
                (None, Some(c)) => {
                    let cfg: ProjectConfig = read_json(c)?;
                    let ds = cfg.dataset.load()?;
                    if cfg.standardize {
                        Standardizer::fit(&ds.features)?.apply(&ds)?
                    } else {
                        ds
                    }
                }
                (None, None) => return Err(Error::Config("--input or --config is required".into())),
            };
            let out = required(common.out.as_deref(), "out")?;
            let proj = export_projection(&ds.features, &ds.labels, out)?;
            eprintln!(
                "projection written to {} (top eigenvalues {:?})",
                out.display(),
                &proj.eigenvalues[..proj.eigenvalues.len().min(2)]
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage mistakes are configuration errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
