use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use houseprice::data::load_houses_dataset;
use houseprice::pipeline::{
    calibrate_houses, evaluate_saved, read_sweep, run_sweep, train_eval, unix_now, write_outputs, write_report, write_rows, Estimator,
    RunConfig, RunManifest, Source, SWEEP_FILE,
};
use houseprice::Error;

#[derive(Parser)]
#[command(name = "houseprice", version, about = "House price estimation from photos and listing attributes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Houses dataset directory, or a tabular CSV file.
    #[arg(long)]
    dataset: PathBuf,
    /// Descriptor cache directory.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// TOML file overriding the default configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract and cache SURF descriptors for every house image.
    Extract {
        #[command(flatten)]
        common: Common,
        /// Print the threshold giving a median of this many points per image, then exit.
        #[arg(long)]
        calibrate: Option<usize>,
    },
    /// Train one estimator and write model, scalers, report and manifest.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_estimator)]
        estimator: Estimator,
        #[arg(long, default_value_t = 0)]
        n_features: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 3 when training did not converge.
        #[arg(long)]
        strict: bool,
    },
    /// Score a trained run directory on its recorded test split.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every (estimator, n, seed) point and write sweep.csv plus plots.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Rebuild the summary table and plots from an existing sweep.csv.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Error(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn load_source(c: &Common) -> Result<(RunConfig, Source), Error> {
    let cfg = load_config(c.config.as_deref())?;
    let source = Source::load(&c.dataset, c.cache.as_deref(), &cfg)?;
    Ok((cfg, source))
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Extract {
            common,
            calibrate: Some(target),
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let houses = load_houses_dataset(&common.dataset)?;
            let t = calibrate_houses(&houses, &cfg.surf_params(), target, 400)?;
            println!("hessian_threshold = {t}");
        }
        Command::Extract { common, calibrate: None } => {
            let (_, source) = load_source(&common)?;
            match source.extract_report() {
                Some(r) => println!("{}", serde_json::to_string_pretty(r).map_err(Error::from)?),
                None => println!("tabular dataset: nothing to extract"),
            }
        }
        Command::Train {
            common,
            estimator,
            n_features,
            seed,
            out,
            strict,
        } => {
            let started = unix_now();
            let (cfg, source) = load_source(&common)?;
            let outcome = train_eval(&source, estimator, n_features, seed, &cfg)?;
            let manifest = RunManifest::new(&common.dataset, &source, &cfg, &outcome, started);
            write_outputs(&out, &outcome, &manifest)?;
            println!("{}", serde_json::to_string_pretty(&outcome.report).map_err(Error::from)?);
            if strict && !outcome.report.converged {
                return Err(Failure::NotConverged(format!("{estimator} n={n_features} seed={seed}")));
            }
        }
        Command::Eval { common, out } => {
            let (_, source) = load_source(&common)?;
            let (norm, usd) = evaluate_saved(&out, &source)?;
            println!("{}", serde_json::to_string_pretty(&[norm, usd]).map_err(Error::from)?);
        }
        Command::Sweep { common, out, strict } => {
            let (cfg, source) = load_source(&common)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let rows = run_sweep(&source, &cfg);
            write_rows(&out.join(SWEEP_FILE), &rows)?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("{} n={} seed={}: {}", r.estimator, r.n, r.seed, r.error.as_deref().unwrap_or(""));
            }
            let (_, trend) = write_report(&out, &rows)?;
            println!("{}", serde_json::to_string_pretty(&trend).map_err(Error::from)?);
            if strict {
                if let Some(r) = rows.iter().find(|r| !r.converged) {
                    return Err(Failure::NotConverged(format!("{} n={} seed={}", r.estimator, r.n, r.seed)));
                }
            }
        }
        Command::Report { out } => {
            let rows = read_sweep(&out.join(SWEEP_FILE))?;
            let (summary, trend) = write_report(&out, &rows)?;
            for s in &summary {
                println!(
                    "{:>3} n={:>2} mse={} r={}",
                    s.estimator.as_str(),
                    s.n,
                    s.test_mse_norm.map_or("-".into(), |v| format!("{v:.6}")),
                    s.r_value.map_or("-".into(), |v| format!("{v:.4}")),
                );
            }
            println!("{}", serde_json::to_string_pretty(&trend).map_err(Error::from)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged(what)) => {
            eprintln!("error: training did not converge ({what})");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
