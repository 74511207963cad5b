//! Experiment runner: builds a `(u, y)` stream, runs the identifier over it
//! and writes the trace, final snapshot and summary report.

pub mod io;
pub mod metrics;
pub mod spec;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::identifier::{Identifier, IdentifierConfig, Snapshot};
use crate::plant::{self, MotorParams, Signal};

pub use io::{load_series, Series, TraceRecord};
pub use metrics::{compute_metrics, Metrics};
pub use spec::{ExperimentSpec, ModelKind, Source};

/// Seed offset for the output-noise stream, so input and output noise are
/// independent under one experiment seed.
const OUTPUT_NOISE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Identification stream plus the noise-free output when it is known.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stream {
    pub series: Series,
    pub clean_output: Option<Vec<f64>>,
    /// Generated by the plant model rather than read from a file.
    pub synthetic: bool,
}

/// Runs the plant alone and returns the measured `(t, i_q_ref, ω)` samples,
/// before any noise is added.
pub fn simulate_plant(spec: &ExperimentSpec) -> Result<Series> {
    let cfg = spec.sim_config();
    if cfg.sample_count() == 0 {
        return Ok(Series::default());
    }
    let params = MotorParams::default();
    let load = spec.load_signal();
    let traj = match spec.source {
        Source::Sinusoid => {
            let profile = Signal::sinusoid(spec.amplitude, spec.frequency);
            plant::simulate(&profile, &load, &params, &cfg)?
        }
        Source::SpeedStep => plant::simulate_speed_loop(
            &Signal::Constant(spec.speed_reference),
            spec.speed_controller(),
            &load,
            &params,
            &cfg,
        )?,
        Source::Csv => {
            return Err(Error::config("a csv source has no plant to simulate"));
        }
    };
    Ok(Series {
        t: traj.t,
        u: traj.i_q_ref,
        y: traj.omega,
    })
}

fn peak_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Builds the stream for `spec`.
///
/// For the sinusoid source the noisy input drives the plant (held over each
/// sampling period); the recorded `u` is that noisy input. For the
/// closed-loop source, input noise corrupts only the recorded reference.
/// Output noise is added to the recorded speed in both cases, scaled by the
/// peak clean speed.
pub fn generate_stream(spec: &ExperimentSpec) -> Result<Stream> {
    let (mut series, synthetic) = match spec.source {
        Source::Csv => {
            let path = spec
                .input_path
                .as_deref()
                .ok_or_else(|| Error::config("source = \"csv\" needs input_path"))?;
            (load_series(path)?, false)
        }
        Source::Sinusoid if spec.input_noise > 0.0 => {
            let cfg = spec.sim_config();
            let n = cfg.sample_count();
            if n == 0 {
                (Series::default(), true)
            } else {
                let profile = Signal::sinusoid(spec.amplitude, spec.frequency);
                let clean_u = profile.sample(spec.sample_dt, n);
                let noisy_u = plant::add_noise(&clean_u, spec.input_noise, spec.amplitude, spec.seed);
                let held = Signal::Held {
                    period: spec.sample_dt,
                    values: noisy_u,
                };
                let traj = plant::simulate(&held, &spec.load_signal(), &MotorParams::default(), &cfg)?;
                (
                    Series {
                        t: traj.t,
                        u: traj.i_q_ref,
                        y: traj.omega,
                    },
                    true,
                )
            }
        }
        Source::Sinusoid => (simulate_plant(spec)?, true),
        Source::SpeedStep => {
            let mut s = simulate_plant(spec)?;
            s.u = plant::add_noise(&s.u, spec.input_noise, spec.current_limit, spec.seed);
            (s, true)
        }
    };

    let clean_output = (spec.output_noise > 0.0 || synthetic).then(|| series.y.clone());
    if spec.output_noise > 0.0 {
        let nominal = peak_abs(&series.y);
        series.y = plant::add_noise(
            &series.y,
            spec.output_noise,
            nominal,
            spec.seed.wrapping_add(OUTPUT_NOISE_STREAM),
        );
    }
    Ok(Stream {
        series,
        clean_output,
        synthetic,
    })
}

/// Result of one identification run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<TraceRecord>,
    /// `None` for an empty stream.
    pub metrics: Option<Metrics>,
    /// RMSE of the prediction against the noise-free output, when known.
    pub rmse_vs_clean: Option<f64>,
    pub clean_output: Option<Vec<f64>>,
    pub snapshot: Snapshot,
    pub synthetic: bool,
}

impl RunReport {
    pub fn predictions(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y_hat).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.e).collect()
    }
}

/// Drives the identifier over `stream`, one step per sample.
pub fn identify_stream(cfg: IdentifierConfig, stream: &Stream) -> Result<RunReport> {
    let mut ident = Identifier::new(cfg)?;
    let s = &stream.series;
    let mut records = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        let step = ident.step(s.u[k], s.y[k]).map_err(|e| Error::AtSample {
            index: k,
            source: Box::new(e),
        })?;
        records.push(TraceRecord {
            t: s.t[k],
            u: s.u[k],
            y: s.y[k],
            y_hat: step.y_hat,
            e: step.error,
        });
    }
    let errors: Vec<f64> = records.iter().map(|r| r.e).collect();
    let metrics = if errors.is_empty() {
        None
    } else {
        Some(compute_metrics(&errors)?)
    };
    let rmse_vs_clean = stream.clean_output.as_ref().and_then(|clean| {
        let y_hat: Vec<f64> = records.iter().map(|r| r.y_hat).collect();
        metrics::rmse_between(&y_hat, clean)
    });
    Ok(RunReport {
        records,
        metrics,
        rmse_vs_clean,
        clean_output: stream.clean_output.clone(),
        snapshot: ident.snapshot(),
        synthetic: stream.synthetic,
    })
}

/// Sampling period: the configured one for generated streams, the median
/// spacing for recorded ones.
fn stream_dt(spec: &ExperimentSpec, stream: &Stream) -> f64 {
    if stream.synthetic {
        spec.sample_dt
    } else {
        stream.series.median_dt().unwrap_or(spec.sample_dt)
    }
}

/// Generates the stream for `spec` and identifies it, without writing files.
pub fn run_in_memory(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    let stream = generate_stream(spec)?;
    let dt = stream_dt(spec, &stream);
    identify_stream(spec.identifier_config(dt), &stream)
}

/// Paths written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub trace: PathBuf,
    pub snapshot: PathBuf,
    pub report: PathBuf,
}

impl Artifacts {
    pub fn for_name(out_dir: &Path, name: &str) -> Self {
        Self {
            trace: out_dir.join(format!("{name}_trace.csv")),
            snapshot: out_dir.join(format!("{name}_snapshot.json")),
            report: out_dir.join(format!("{name}_report.json")),
        }
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    name: &'a str,
    seed: u64,
    source: Source,
    synthetic: bool,
    sample_count: usize,
    metrics: &'a Metrics,
    rmse_vs_clean: Option<f64>,
    trace: String,
    snapshot: String,
    identifier: IdentifierConfig,
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

/// Runs `spec` and writes `<name>_trace.csv`, `<name>_snapshot.json` and
/// `<name>_report.json` into `out_dir`. An empty stream leaves only a
/// header-only trace.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<(RunReport, Artifacts)> {
    spec.validate()?;
    let stream = generate_stream(spec)?;
    let dt = stream_dt(spec, &stream);
    let cfg = spec.identifier_config(dt);
    let report = identify_stream(cfg.clone(), &stream)?;

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let paths = Artifacts::for_name(out_dir, &spec.name);
    io::write_trace(&paths.trace, &report.records)?;
    if report.records.is_empty() {
        return Ok((report, paths));
    }
    fs::write(&paths.snapshot, report.snapshot.to_json()).map_err(|e| Error::io(&paths.snapshot, e))?;
    let summary = ReportFile {
        name: &spec.name,
        seed: spec.seed,
        source: spec.source,
        synthetic: report.synthetic,
        sample_count: report.records.len(),
        metrics: report.metrics.as_ref().expect("non-empty trace has metrics"),
        rmse_vs_clean: report.rmse_vs_clean,
        trace: file_name(&paths.trace),
        snapshot: file_name(&paths.snapshot),
        identifier: cfg,
    };
    let text = serde_json::to_string_pretty(&summary).expect("report serializes") + "\n";
    fs::write(&paths.report, text).map_err(|e| Error::io(&paths.report, e))?;
    Ok((report, paths))
}
