use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedsim_core::data::{leave_one_out_split, save_dataset};
use fedsim_core::federation::{run_federation_with, FederationConfig, RoundRecorder};
use fedsim_core::harness::{
    generate_domains, read_rows, run_experiment, summarize, write_outputs, ExperimentSpec, Scenario,
};
use fedsim_core::metrics::{cross_domain_threshold, hter, ScoreSet};
use fedsim_core::Error;

#[derive(Parser)]
#[command(name = "fedsim", version, about = "Federated anti-spoofing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec and write rows.csv and summary.json.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; falls back to the spec's `output` entry.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Federated runs over 2..=n centers of the built-in five-domain set.
    Sweep {
        #[arg(long)]
        user: String,
        #[arg(long)]
        max_centers: usize,
        #[arg(long, default_value_t = 30)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a directory produced by `run` or `sweep`.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the built-in spec of a scenario as TOML.
    Init {
        #[arg(long, default_value = "table2")]
        scenario: String,
        #[arg(long, default_value_t = 30)]
        seeds: u64,
    },
    /// Write each domain of a spec, for one seed, as a CSV file.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// One federated run with the given user held out, logging every round.
    Train {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Save the global model every n rounds.
        #[arg(long)]
        checkpoint_every: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { spec, out } => {
            let spec = ExperimentSpec::load(&spec)?;
            let out = out
                .or_else(|| spec.output.clone())
                .ok_or_else(|| Error::ExperimentSpec("no output directory given".into()))?;
            let rows = run_experiment(&spec)?;
            let summary = write_outputs(&out, &rows)?;
            emit(&summary.to_table())?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Sweep {
            user,
            max_centers,
            seeds,
            out,
        } => {
            let mut spec = ExperimentSpec::sweep(&user, max_centers)?;
            spec.seeds = (0..seeds).collect();
            let rows = run_experiment(&spec)?;
            let summary = match &out {
                Some(dir) => write_outputs(dir, &rows)?,
                None => summarize(&rows)?,
            };
            emit(&summary.to_table())?;
        }
        Command::Report { input } => {
            let rows = read_rows(input.join("rows.csv"))?;
            let summary = summarize(&rows)?;
            let mut text = summary.to_table();
            for o in &summary.orderings {
                text += &format!(
                    "{} vs {}: AUC {}  EER {}  HTER {}\n",
                    o.a, o.b, o.auc, o.eer, o.hter
                );
            }
            emit(&text)?;
        }
        Command::Init { scenario, seeds } => {
            let mut spec = ExperimentSpec::preset(scenario.parse::<Scenario>()?);
            spec.seeds = (0..seeds).collect();
            emit(&spec.to_toml())?;
        }
        Command::Generate { spec, seed, out } => {
            let spec = ExperimentSpec::load(&spec)?;
            create_dir(&out)?;
            for d in generate_domains(&spec, seed)? {
                let path = out.join(format!("{}.csv", d.domain_id()));
                save_dataset(&d, &path)?;
                eprintln!("wrote {} samples to {}", d.len(), path.display());
            }
        }
        Command::Train {
            spec,
            user,
            seed,
            out,
            checkpoint_every,
        } => {
            let spec = ExperimentSpec::load(&spec)?;
            let domains = generate_domains(&spec, seed)?;
            let (centers, user_data) = leave_one_out_split(&domains, &user)?;
            let config = FederationConfig {
                master_seed: seed,
                ..spec.federation.clone()
            };
            let mut recorder = RoundRecorder::create(&out, config.arch.clone(), checkpoint_every)?;
            let (model, logs) = run_federation_with(&centers, &config, |log, params| {
                recorder.record(log, params)
            })?;
            recorder.checkpoint(model.params(), "global_final.fedw")?;
            let center_scores = centers
                .iter()
                .map(|c| ScoreSet::from_scorer(&model, c))
                .collect::<Result<Vec<_>, _>>()?;
            let threshold = cross_domain_threshold(&center_scores)?;
            let report = hter(&ScoreSet::from_scorer(&model, &user_data)?, threshold)?;
            let path = out.join("report.json");
            std::fs::write(&path, format!("{}\n", report.to_json()))
                .map_err(|e| io_err(&path, e))?;
            emit(&format!("{}\n", report.to_json()))?;
            eprintln!("{} rounds logged in {}", logs.len(), out.display());
        }
    }
    Ok(())
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes to stdout; a closed pipe (as with `| head`) is not an error.
fn emit(text: &str) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(io_err(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
