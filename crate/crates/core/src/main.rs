use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::{fs, thread};

use clap::{Parser, Subcommand};

use fuzzrel::harness::{self, io, ExperimentSpec, Source};
use fuzzrel::{Error, Result, Snapshot};

/// On-line fuzzy relational identification of a motor drive.
#[derive(Debug, Parser)]
#[command(name = "fuzzrel", version)]
struct Cli {
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Override a spec key, e.g. `--set gamma=1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the plant alone and write `<name>_plant.csv` (t,u,y).
    Simulate {
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Run one or more experiment specs (in parallel).
    Identify {
        #[arg(long, required = true, num_args = 1..)]
        spec: Vec<PathBuf>,
    },
    /// Identify over a recorded `t,u,y` file.
    Replay {
        #[arg(long)]
        input: PathBuf,
        /// Identifier settings; noise and plant keys are ignored.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Print the rules held in a snapshot, strongest first.
    ExplainRules {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn overrides(cli: &Cli) -> Vec<String> {
    let mut all = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        all.push(format!("seed={seed}"));
    }
    all
}

fn load_spec(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentSpec> {
    match path {
        Some(p) => ExperimentSpec::load(p, overrides),
        None => ExperimentSpec::parse("", overrides),
    }
}

fn run(cli: Cli) -> Result<()> {
    let sets = overrides(&cli);
    match &cli.command {
        Command::Simulate { spec } => {
            let spec = load_spec(spec.as_deref(), &sets)?;
            let series = harness::simulate_plant(&spec)?;
            fs::create_dir_all(&cli.out_dir).map_err(|e| Error::Io {
                path: cli.out_dir.clone(),
                source: e,
            })?;
            let path = cli.out_dir.join(format!("{}_plant.csv", spec.name));
            io::write_series(&path, &series)?;
            println!("{}: {} samples", path.display(), series.len());
            Ok(())
        }
        Command::Identify { spec } => {
            let specs = spec
                .iter()
                .map(|p| ExperimentSpec::load(p, &sets))
                .collect::<Result<Vec<_>>>()?;
            let results: Vec<Result<String>> = thread::scope(|scope| {
                let handles: Vec<_> = specs
                    .iter()
                    .map(|s| scope.spawn(|| identify_one(s, &cli.out_dir)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("experiment thread panicked"))
                    .collect()
            });
            let mut first_error = None;
            for r in results {
                match r {
                    Ok(line) => println!("{line}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        first_error.get_or_insert(e);
                    }
                }
            }
            first_error.map_or(Ok(()), Err)
        }
        Command::Replay { input, spec } => {
            let mut spec = load_spec(spec.as_deref(), &sets)?;
            spec.source = Source::Csv;
            spec.input_path = Some(input.clone());
            spec.input_noise = 0.0;
            spec.output_noise = 0.0;
            if let Some(stem) = input.file_stem() {
                spec.name = format!("{}_replay", stem.to_string_lossy());
            }
            println!("{}", identify_one(&spec, &cli.out_dir)?);
            Ok(())
        }
        Command::ExplainRules {
            snapshot,
            threshold,
        } => {
            let text = fs::read_to_string(snapshot).map_err(|e| Error::Io {
                path: snapshot.clone(),
                source: e,
            })?;
            let snap = Snapshot::from_json(&text).map_err(|e| Error::Format {
                path: snapshot.clone(),
                message: e.to_string(),
            })?;
            for rule in snap.rules(*threshold)? {
                println!("{rule}");
            }
            Ok(())
        }
    }
}

fn identify_one(spec: &ExperimentSpec, out_dir: &Path) -> Result<String> {
    let (report, paths) = harness::run_experiment(spec, out_dir)?;
    Ok(match &report.metrics {
        Some(m) => format!(
            "{}: {} samples, rmse {:.4}, quarters [{}], trace {}",
            spec.name,
            m.sample_count,
            m.rmse,
            m.rmse_quarters
                .iter()
                .map(|q| q.map_or_else(|| "-".to_owned(), |v| format!("{v:.4}")))
                .collect::<Vec<_>>()
                .join(", "),
            paths.trace.display()
        ),
        None => format!("{}: empty stream, trace {}", spec.name, paths.trace.display()),
    })
}
