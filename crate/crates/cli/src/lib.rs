//! `crosskerr` command-line runner.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use crosskerr_core::device::quality_factor;
use crosskerr_core::experiments::{
    run_cat_sweep, run_gate_heatmap, run_gate_sweep, validate_effective, CatAmplitudes, SweepRecord,
};
use crosskerr_core::{derive, solve_gate_parameters, C64};
use serde::Serialize;

use config::RunConfig;
use output::{Metadata, Table};

pub const ENV_WORKERS: &str = "CROSSKERR_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical tolerance failure: {0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Tolerance(_) => 2,
        }
    }
}

impl From<crosskerr_core::Error> for CliError {
    fn from(e: crosskerr_core::Error) -> Self {
        match e {
            crosskerr_core::Error::Tolerance(m) => CliError::Tolerance(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crosskerr", version, about = "Qutrit-mediated cross-Kerr gate and cat-state simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print derived couplings, gate solution, quality factors and regime warnings.
    Params(Common),
    /// Gate fidelity versus delta_b.
    GateSweep(Common),
    /// Lossy gate fidelity over (gamma, eta) at fixed delta_b.
    GateHeatmap(Common),
    /// Entangled-coherent-state fidelity versus D = delta_b/mu and m.
    CatSweep(Common),
    /// Overlap deficits along the effective-model chain.
    ValidateEffective(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    #[arg(long, env = ENV_WORKERS)]
    pub workers: Option<usize>,
    /// Integration step in ns.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub dim_a: Option<usize>,
    #[arg(long)]
    pub dim_b: Option<usize>,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Params(c)
            | Command::GateSweep(c)
            | Command::GateHeatmap(c)
            | Command::CatSweep(c)
            | Command::ValidateEffective(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Params(_) => "params",
            Command::GateSweep(_) => "gate-sweep",
            Command::GateHeatmap(_) => "gate-heatmap",
            Command::CatSweep(_) => "cat-sweep",
            Command::ValidateEffective(_) => "validate-effective",
        }
    }
}

/// Config with command-line overrides applied.
fn resolve(common: &Common) -> Result<(RunConfig, usize, PathBuf), CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if common.dt.is_some() {
        cfg.numerics.dt_ns = common.dt;
    }
    if common.dim_a.is_some() {
        cfg.numerics.dim_a = common.dim_a;
    }
    if common.dim_b.is_some() {
        cfg.numerics.dim_b = common.dim_b;
    }
    let workers = common.workers.or(cfg.output.workers).unwrap_or(1);
    if workers == 0 {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    cfg.output.workers = Some(workers);
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    cfg.output.dir = Some(out.clone());
    cfg.options(workers)?;
    Ok((cfg, workers, out))
}

/// Runs one subcommand, writing its report to `stdout`-like `log`.
pub fn run(cli: &Cli, log: &mut dyn std::io::Write) -> Result<(), CliError> {
    let common = cli.command.common();
    let (cfg, workers, out) = resolve(common)?;
    let start = Instant::now();
    let name = cli.command.name();
    let say = |log: &mut dyn std::io::Write, s: String| {
        let _ = writeln!(log, "{s}");
    };
    match &cli.command {
        Command::Params(_) => {
            say(log, params_report(&cfg)?);
            Ok(())
        }
        Command::GateSweep(_) => {
            let base = cfg.device_params()?;
            let records = run_gate_sweep(&base, &cfg.gate_grid(), &cfg.options(workers)?)?;
            let series = vec![
                ("lossless".to_string(), xy(&records, |r| r.params.delta_b_ghz, |r| r.fidelity_lossless)),
                ("lossy".to_string(), xy(&records, |r| r.params.delta_b_ghz, |r| r.fidelity_lossy)),
            ];
            let plot = common
                .plot
                .then(|| output::line_plot("Gate fidelity", "delta_b (GHz)", "F", &series));
            finish(name, &cfg, &out, output::gate_table(&records), &records, plot, start, log)
        }
        Command::GateHeatmap(_) => {
            let base = cfg.device_params()?;
            let records = run_gate_heatmap(&base, base.delta_b_ghz, &cfg.heatmap_pairs(), &cfg.options(workers)?)?;
            let plot = common.plot.then(|| {
                let cells: Vec<(f64, f64, f64)> = records
                    .iter()
                    .filter_map(|r| match r.inputs {
                        crosskerr_core::experiments::SweepInputs::Decoherence { gamma_us, eta_us } => {
                            Some((gamma_us, eta_us, r.fidelity_lossy.unwrap_or(f64::NAN)))
                        }
                        _ => None,
                    })
                    .collect();
                output::heatmap_plot("Lossy gate fidelity", "gamma (us)", "eta (us)", &cells)
            });
            finish(name, &cfg, &out, output::heatmap_table(&records), &records, plot, start, log)
        }
        Command::CatSweep(_) => {
            let base = cfg.device_params()?;
            let (ds, ms) = cfg.cat_grid();
            let amps = CatAmplitudes {
                alpha_a: C64::new(cfg.sweep.alpha_a.unwrap_or(0.5), 0.0),
                beta_b: C64::new(cfg.sweep.beta_b.unwrap_or(1.0), 0.0),
            };
            let records = run_cat_sweep(&base, &ds, &ms, amps, &cfg.options(workers)?)?;
            let plot = common.plot.then(|| {
                let series: Vec<(String, Vec<(f64, f64)>)> = ms
                    .iter()
                    .map(|&m| {
                        let pts = records
                            .iter()
                            .filter_map(|r| match r.inputs {
                                crosskerr_core::experiments::SweepInputs::Cat { d_ratio, m: rm } if rm == m => {
                                    Some((d_ratio, r.fidelity_lossy.unwrap_or(f64::NAN)))
                                }
                                _ => None,
                            })
                            .collect();
                        (format!("m = {m}"), pts)
                    })
                    .collect();
                output::line_plot("Cat-state fidelity", "D = delta_b/mu", "F", &series)
            });
            finish(name, &cfg, &out, output::cat_table(&records), &records, plot, start, log)
        }
        Command::ValidateEffective(_) => {
            let params = cfg.device_params()?;
            let sector = cfg.sweep.sector.unwrap_or([1, 1]);
            let scales = cfg.sweep.scales.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
            let report = validate_effective(&params, (sector[0], sector[1]), &scales, None, &cfg.options(workers)?)?;
            let table = output::validation_table(&report);
            let plot = common.plot.then(|| {
                let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
                for e in &report.entries {
                    let label = format!("{} vs {}", e.pair.reference, e.pair.approximation);
                    let point = (e.scale, e.deficit.max(1e-300).log10());
                    match series.iter_mut().find(|s| s.0 == label) {
                        Some(s) => s.1.push(point),
                        None => series.push((label, vec![point])),
                    }
                }
                output::line_plot("Effective-model deficit", "detuning scale", "log10 deficit", &series)
            });
            write_outputs(name, &cfg, &out, &table, &report, plot, start)?;
            say(log, format!("wrote {} rows to {}", table.rows.len(), out.display()));
            Ok(())
        }
    }
}

fn xy(
    records: &[SweepRecord],
    x: impl Fn(&SweepRecord) -> f64,
    y: impl Fn(&SweepRecord) -> Option<f64>,
) -> Vec<(f64, f64)> {
    records.iter().map(|r| (x(r), y(r).unwrap_or(f64::NAN))).collect()
}

fn write_outputs<R: Serialize>(
    name: &str,
    cfg: &RunConfig,
    out: &Path,
    table: &Table,
    results: &R,
    plot: Option<String>,
    start: Instant,
) -> Result<(), CliError> {
    let dir = output::ensure_dir(out)?;
    let stem = name.replace('-', "_");
    output::write_csv(&dir.join(format!("{stem}.csv")), table)?;
    let meta = Metadata {
        tool: "crosskerr",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        config: cfg,
        wall_seconds: start.elapsed().as_secs_f64(),
        results,
    };
    output::write_json(&dir.join(format!("{stem}.json")), &meta)?;
    if let Some(svg) = plot {
        output::write_text(&dir.join(format!("{stem}.svg")), &svg)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    name: &str,
    cfg: &RunConfig,
    out: &Path,
    table: Table,
    records: &[SweepRecord],
    plot: Option<String>,
    start: Instant,
    log: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    write_outputs(name, cfg, out, &table, &records, plot, start)?;
    let _ = writeln!(log, "wrote {} rows to {}", table.rows.len(), out.display());
    let failed: Vec<String> = records
        .iter()
        .filter(|r| !r.status.is_ok())
        .map(|r| format!("{:?}: {}", r.inputs, r.status.label()))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!("{} of {} points failed; {}", failed.len(), records.len(), failed.join(" | "))))
    }
}

fn params_report(cfg: &RunConfig) -> Result<String, CliError> {
    let p = cfg.device_params()?;
    let d = derive(&p)?;
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k:<22}{v}\n"));
    line("omega_a", format!("{} GHz", p.omega_a_ghz));
    line("omega_b", format!("{} GHz", p.omega_b_ghz));
    line("delta_a", format!("{} GHz", p.delta_a_ghz));
    line("delta_b", format!("{} GHz", p.delta_b_ghz));
    line("Delta_ab", format!("{:.4} GHz", p.delta_ab_ghz()));
    line("g", format!("{} MHz", p.g_mhz));
    line("mu", format!("{:.4} MHz", p.mu_mhz));
    line("g_ab", format!("{} MHz", p.g_ab_mhz));
    line("lambda", format!("{:.4} MHz", d.lambda_mhz));
    line("Delta", format!("{:.4} GHz", d.big_delta_ghz));
    line("chi", format!("{:.4} MHz", d.chi_mhz));
    line("theta", format!("{:.4} MHz", d.theta_mhz));
    line("t_gate", format!("{:.4} ns", d.t_gate_ns));
    line("t_cat (pi/chi)", format!("{:.4} ns", d.t_cat_ns));
    match solve_gate_parameters(p.g_mhz, p.delta_a_ghz, p.delta_b_ghz, p.k) {
        Ok(sol) => {
            line("solved lambda", format!("{:.4} MHz", sol.lambda_mhz));
            line("solved mu", format!("{:.4} MHz", sol.mu_mhz));
            line("solved t_gate", format!("{:.4} ns", sol.t_gate_ns));
        }
        Err(e) => line("gate solution", format!("unavailable ({e})")),
    }
    if let Some(eta) = cfg.device.eta_us {
        line("Q_a", format!("{:.4e}", quality_factor(p.omega_a_ghz, eta)));
        line("Q_b", format!("{:.4e}", quality_factor(p.omega_b_ghz, eta)));
    }
    if d.warnings.is_empty() {
        line("warnings", "none".into());
    }
    for w in &d.warnings {
        line("warning", w.to_string());
    }
    Ok(s)
}
