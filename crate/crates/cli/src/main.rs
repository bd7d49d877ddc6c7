//! `pinchcert`: sampled certificate checks for contracting curvature flows.
//!
//! Exit status: 0 when every check passes, 1 when a check finds violations,
//! 2 on configuration or IO errors.

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pinch_core::config::{OutputFormat, RunConfig, Tolerances};
use pinch_core::export::{export_rows, to_csv_string, ExportRow};
use pinch_core::flow::{
    derive_threshold, resolve_threshold, verify_flow, DeriveConfig, FlowConfig, FlowPreset,
    ThresholdSource, DERIVE_GRID_RESOLUTION,
};
use pinch_core::report::{meta_path, write_atomic, Counts, Report, RunMeta};
use pinch_core::sampling::Sampler;

#[derive(Parser, Debug)]
#[command(
    name = "pinchcert",
    version,
    about = "Critical-point certificate checks for contracting curvature flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the inclusion chains, the vanishing identity and the pinching bound.
    Verify(Opts),
    /// Classify every sample against the cone, sublevel and certificate sets.
    Export(Opts),
    /// Derive the sublevel threshold from the maximum over the pinched cone.
    DeriveH(Opts),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Opts {
    /// Flow preset: H3, A2 or K.
    flow: String,
    /// Monte-Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Lattice resolution of an additional grid run (export: replaces sampling).
    #[arg(long)]
    grid: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the sublevel threshold.
    #[arg(long = "h")]
    h: Option<f64>,
    #[arg(long)]
    eps_tau: Option<f64>,
    #[arg(long)]
    eps_nsd: Option<f64>,
    #[arg(long)]
    eps_grad: Option<f64>,
    #[arg(long)]
    eps_umbilic: Option<f64>,
    #[arg(long)]
    eps_dd: Option<f64>,
    /// Default: csv for export, json otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

/// Error that maps to exit status 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (name, opts) = match &cli.command {
        Command::Verify(o) => ("verify", o),
        Command::Export(o) => ("export", o),
        Command::DeriveH(o) => ("derive-h", o),
    };
    let outcome = run(name, opts);
    let elapsed = started.elapsed();
    match outcome {
        Ok((ok, config)) => {
            eprintln!("wall time: {:.3} s", elapsed.as_secs_f64());
            if let Some(out) = &config.out {
                let meta = RunMeta::new(config.workers, elapsed);
                let json = serde_json::to_string_pretty(&meta).unwrap_or_default() + "\n";
                if let Err(e) = write_atomic(&meta_path(Path::new(out)), json.as_bytes()) {
                    eprintln!("error: writing run metadata: {e}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(if ok { 0 } else { 1 })
        }
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn tolerances(o: &Opts) -> Result<Tolerances, Fatal> {
    let mut t = Tolerances::default();
    for (flag, value, slot) in [
        ("--eps-tau", o.eps_tau, &mut t.tau),
        ("--eps-nsd", o.eps_nsd, &mut t.tau_nsd),
        ("--eps-grad", o.eps_grad, &mut t.delta_grad),
        ("--eps-umbilic", o.eps_umbilic, &mut t.eps_umbilic),
        ("--eps-dd", o.eps_dd, &mut t.eps_dd),
    ] {
        if let Some(v) = value {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Fatal(format!(
                    "{flag} must be a finite non-negative number"
                )));
            }
            *slot = v;
        }
    }
    Ok(t)
}

fn run_config(command: &str, o: &Opts) -> Result<RunConfig, Fatal> {
    if let Some(h) = o.h {
        if !(h.is_finite() && h > 0.0) {
            return Err(Fatal("--h must be a finite positive number".into()));
        }
    }
    if o.samples == 0 {
        return Err(Fatal("--samples must be at least 1".into()));
    }
    if matches!(o.grid, Some(r) if r < 3) {
        return Err(Fatal("--grid must be at least 3".into()));
    }
    let format = match (o.format, command) {
        (Some(Format::Json), _) => OutputFormat::Json,
        (Some(Format::Csv), _) | (None, "export") => OutputFormat::Csv,
        (None, _) => OutputFormat::Json,
    };
    Ok(RunConfig {
        command: command.to_string(),
        flow: o.flow.clone(),
        samples: o.samples,
        grid: o.grid,
        seed: o.seed,
        threshold_override: o.h,
        tolerances: tolerances(o)?,
        format,
        out: o.out.clone(),
        workers: o.workers,
    })
}

fn emit(config: &RunConfig, body: &str) -> Result<(), Fatal> {
    match &config.out {
        Some(path) => write_atomic(Path::new(path), body.as_bytes())
            .map_err(|e| Fatal(format!("writing {path}: {e}"))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Fatal(format!("writing stdout: {e}")))
        }
    }
}

fn run(command: &str, o: &Opts) -> Result<(bool, RunConfig), Fatal> {
    let config = run_config(command, o)?;
    let preset = FlowPreset::by_name(&config.flow)?;
    let ok = match command {
        "verify" => cmd_verify(&preset, &config)?,
        "export" => cmd_export(&preset, &config)?,
        _ => cmd_derive_h(&preset, &config)?,
    };
    Ok((ok, config))
}

fn flow_config(config: &RunConfig) -> FlowConfig {
    FlowConfig {
        samples: config.samples,
        seed: config.seed,
        grid: config.grid,
        threshold_override: config.threshold_override,
        tolerances: config.tolerances,
        workers: config.workers,
        ..FlowConfig::default()
    }
}

#[derive(Serialize)]
struct InclusionRow<'a> {
    check: &'a str,
    sampler: &'static str,
    samples: u64,
    inner_count: u64,
    indeterminate: u64,
    violations: u64,
    worst_margin: Option<f64>,
    verified: bool,
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, Fatal> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(
        w.into_inner().map_err(|e| Fatal(e.to_string()))?,
    )?)
}

fn cmd_verify(preset: &FlowPreset, config: &RunConfig) -> Result<bool, Fatal> {
    let rep = verify_flow(preset, &flow_config(config))?;
    let counts = Counts {
        samples: rep.inclusions.iter().map(|r| r.samples).sum(),
        indeterminate: rep.indeterminate_count(),
        violations: rep.violation_count(),
    };
    let body = match config.format {
        OutputFormat::Json => Report::new(config, counts, rep.verified, &rep).to_json()?,
        OutputFormat::Csv => {
            let rows: Vec<_> = rep
                .inclusions
                .iter()
                .map(|r| InclusionRow {
                    check: &r.label,
                    sampler: match r.sampler {
                        Sampler::MonteCarlo { .. } => "monte_carlo",
                        Sampler::Grid { .. } => "grid",
                    },
                    samples: r.samples,
                    inner_count: r.inner_count,
                    indeterminate: r.indeterminate_count,
                    violations: r.violation_count,
                    worst_margin: r.worst_margin,
                    verified: r.verified,
                })
                .collect();
            csv_string(&rows)?
        }
    };
    emit(config, &body)?;

    eprintln!(
        "{} (h = {}, {:?}): {} samples, {} indeterminate, {} violations",
        preset.name,
        rep.threshold,
        rep.threshold_source,
        counts.samples,
        counts.indeterminate,
        counts.violations
    );
    for r in &rep.inclusions {
        let status = if r.verified { "ok" } else { "VIOLATED" };
        eprintln!("  {:<8} {} [{}]", status, r.label, r.samples);
        for v in r.violations.iter().take(5) {
            eprintln!(
                "           counterexample ({:.6}, {:.6}, {:.6}) margin {:.3e} failing {:?}",
                v.point[0], v.point[1], v.point[2], v.outer_margin, v.failing
            );
        }
    }
    let van = &rep.vanishing;
    eprintln!(
        "  {:<8} vanishing {} under {}: max relative {:.3e} over {} points",
        if van.passes { "ok" } else { "FAILED" },
        van.quantity,
        van.speed,
        van.max_relative,
        van.trials
    );
    eprintln!(
        "  {:<8} pinching bound: {} failures over {} points",
        if rep.pinching.failures == 0 {
            "ok"
        } else {
            "FAILED"
        },
        rep.pinching.failures,
        rep.pinching.trials
    );
    Ok(rep.verified)
}

#[derive(Serialize)]
struct ExportResult<'a> {
    flow: String,
    threshold: f64,
    threshold_source: ThresholdSource,
    sampler: Sampler,
    rows: &'a [ExportRow],
}

fn cmd_export(preset: &FlowPreset, config: &RunConfig) -> Result<bool, Fatal> {
    let (h, source, _) = resolve_threshold(preset, &flow_config(config))?;
    let sampler = match config.grid {
        Some(resolution) => Sampler::Grid { resolution },
        None => Sampler::MonteCarlo {
            count: config.samples,
            seed: config.seed,
        },
    };
    let rows = export_rows(preset, h, &sampler, &config.tolerances, config.workers)?;
    let body = match config.format {
        OutputFormat::Csv => to_csv_string(&rows)?,
        OutputFormat::Json => {
            let counts = Counts {
                samples: rows.len() as u64,
                indeterminate: rows
                    .iter()
                    .filter(|r| {
                        [r.in_cone, r.in_sublevel, r.cert_phi, r.cert_psi]
                            .iter()
                            .any(|f| f.0 == pinch_core::region::Membership::Indeterminate)
                    })
                    .count() as u64,
                violations: 0,
            };
            let result = ExportResult {
                flow: preset.name.to_string(),
                threshold: h,
                threshold_source: source,
                sampler,
                rows: &rows,
            };
            Report::new(config, counts, true, &result).to_json()?
        }
    };
    emit(config, &body)?;
    eprintln!("{}: {} rows (h = {h})", preset.name, rows.len());
    Ok(true)
}

fn cmd_derive_h(preset: &FlowPreset, config: &RunConfig) -> Result<bool, Fatal> {
    let rep = derive_threshold(
        preset,
        &DeriveConfig {
            samples: config.samples,
            seed: config.seed,
            grid: Some(config.grid.unwrap_or(DERIVE_GRID_RESOLUTION)),
            workers: config.workers,
            tolerances: config.tolerances,
        },
    )?;
    let counts = Counts {
        samples: config.samples + rep.grid.as_ref().map_or(0, |g| g.samples),
        indeterminate: 0,
        violations: 0,
    };
    let body = match config.format {
        OutputFormat::Json => Report::new(config, counts, true, &rep).to_json()?,
        OutputFormat::Csv => {
            #[derive(Serialize)]
            struct Row {
                flow: String,
                threshold: f64,
                raw_max: f64,
                a: f64,
                b: f64,
                c: f64,
            }
            csv_string(&[Row {
                flow: preset.name.to_string(),
                threshold: rep.threshold,
                raw_max: rep.raw_max,
                a: rep.argmax[0],
                b: rep.argmax[1],
                c: rep.argmax[2],
            }])?
        }
    };
    emit(config, &body)?;
    let line = format!(
        "{}: h = {} (max {} = {:.12} at ({:.6}, {:.6}, {:.6}))",
        preset.name,
        rep.threshold,
        rep.quantity,
        rep.raw_max,
        rep.argmax[0],
        rep.argmax[1],
        rep.argmax[2]
    );
    if config.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(true)
}
