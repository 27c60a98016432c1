use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use tpts_core::analysis::{analyze_trace, balance_error, resource_report, AnalysisError, MetricsReport, ResourceRow};
use tpts_core::modulator::{counted_cycle, OperatingPoint};
use tpts_core::{run_simulation, Scheme, SimError, Trace};

use crate::config::{ConfigError, RunConfig};
use crate::output::{render_counters, render_metrics, write_trace_csv};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("analysis failed: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

/// Operation counts of one control cycle at the configured index.
pub fn op_counters(cfg: &RunConfig, schemes: &[Scheme]) -> Result<Vec<ResourceRow>, CliError> {
    let s = &cfg.sim;
    let op = OperatingPoint::new(-PI / 12.0, s.m, s.load_current, s.switching_period());
    let rows = schemes
        .iter()
        .map(|&sc| counted_cycle(sc, &op).map(|(_, c)| (sc, c)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(SimError::from)?;
    Ok(resource_report(rows).rows)
}

/// Steady-state metrics, discarding up to `skip_cycles` whole periods but
/// always keeping at least one.
pub fn measure(cfg: &RunConfig, trace: &Trace) -> Result<MetricsReport, CliError> {
    let per_cycle = trace.samples_per_fundamental().max(1);
    let cycles = trace.len() / per_cycle;
    if cycles == 0 {
        let have = trace.len() as f64 * trace.sample_interval * trace.f_grid;
        return Err(AnalysisError::Window { cycles: have }.into());
    }
    Ok(analyze_trace(trace, cfg.skip_cycles.min(cycles - 1), cfg.harmonics)?)
}

pub struct RunOutput {
    pub trace: Trace,
    pub metrics: MetricsReport,
}

/// Simulates, analyses and writes `trace.csv` and `metrics.txt` into `out`.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<RunOutput, CliError> {
    let trace = run_simulation(&cfg.sim)?;
    let mut metrics = measure(cfg, &trace)?;
    metrics.op_counters = op_counters(cfg, &[cfg.sim.scheme])?;
    create_dir(out)?;
    let csv = out.join("trace.csv");
    let file = File::create(&csv).map_err(io_err(&csv))?;
    write_trace_csv(BufWriter::new(file), &trace).map_err(io_err(&csv))?;
    write_file(&out.join("metrics.txt"), &render_metrics(cfg, &metrics))?;
    Ok(RunOutput { trace, metrics })
}

pub struct CompareRow {
    pub scheme: Scheme,
    pub metrics: MetricsReport,
    /// Worst deviation of the modulator's period-averaged currents from
    /// their references, A.
    pub balance_error: f64,
}

pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub counters: Vec<ResourceRow>,
    /// Largest difference between schemes in any period-averaged current, A.
    pub cross_scheme_average: f64,
    pub text: String,
}

/// Runs every scheme at the same operating point and tabulates the results.
pub fn compare(cfg: &RunConfig, out: &Path) -> Result<Comparison, CliError> {
    let runs: Vec<(Scheme, Trace)> = Scheme::ALL
        .par_iter()
        .map(|&scheme| {
            let sim = tpts_core::SimConfig { scheme, ..cfg.sim };
            run_simulation(&sim).map(|t| (scheme, t))
        })
        .collect::<Result<_, _>>()?;
    let counters = op_counters(cfg, &Scheme::ALL)?;
    let i_dc = cfg.sim.load_current;

    let mut rows = Vec::new();
    for (scheme, trace) in &runs {
        let mut metrics = measure(cfg, trace)?;
        metrics.op_counters = counters.iter().filter(|r| r.scheme == *scheme).copied().collect();
        rows.push(CompareRow { scheme: *scheme, metrics, balance_error: balance_error(&trace.periods, i_dc) });
    }
    let mut cross = 0.0f64;
    let first = &runs[0].1.periods;
    for (_, trace) in &runs[1..] {
        for (a, b) in first.iter().zip(&trace.periods) {
            cross = cross.max(a.average_current(i_dc).max_abs_diff(b.average_current(i_dc)));
        }
    }

    let mut text = String::new();
    let _ = writeln!(
        text,
        "operating point: m = {}, f_sw = {} Hz, load {} A, {} fundamental period(s) measured\n",
        cfg.sim.m, cfg.sim.f_sw, cfg.sim.load_current, rows[0].metrics.window_cycles
    );
    let _ = writeln!(
        text,
        "{:<10}{:>8}{:>6}{:>6}{:>6}{:>24}{:>8}{:>10}{:>12}{:>12}{:>12}",
        "scheme", "trig", "lut", "rel", "br", "clamp A/B/C", "edges", "thd A", "track rms", "|I1| A", "balance"
    );
    for r in &rows {
        let c = r.metrics.op_counters.first().map(|x| x.counters).unwrap_or_default();
        let cl = r.metrics.clamp.clamp_fraction;
        let _ = writeln!(
            text,
            "{:<10}{:>8}{:>6}{:>6}{:>6}{:>24}{:>8}{:>9.3}%{:>12.5}{:>12.5}{:>12.2e}",
            r.scheme.name(),
            c.trig_evals,
            c.table_lookups,
            c.relational_ops,
            c.branches,
            format!("{:.3}/{:.3}/{:.3}", cl[0], cl[1], cl[2]),
            r.metrics.clamp.max_transitions.iter().max().copied().unwrap_or(0),
            100.0 * r.metrics.source[0].thd,
            r.metrics.tracking_error_rms,
            r.metrics.source[0].fundamental.amplitude,
            r.balance_error,
        );
    }
    let _ = writeln!(text, "\nlargest difference between schemes in period-averaged current: {cross:.3e} A\n");
    text.push_str(&render_counters(&counters));

    create_dir(out)?;
    write_file(&out.join("compare.txt"), &text)?;
    Ok(Comparison { rows, counters, cross_scheme_average: cross, text })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub m: f64,
    pub dir: String,
    pub result: Result<SweepMetrics, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMetrics {
    pub fundamental: f64,
    pub phase_error_deg: f64,
    pub thd: f64,
    pub tracking_error_rms: f64,
    pub mean_i_dc: f64,
    pub mean_v_out: f64,
    pub clamp_fraction: [f64; 3],
}

pub const SUMMARY_HEADER: &str =
    "scheme,m,dir,status,fundamental_a,phase_error_deg,thd_a,tracking_error_rms,mean_i_dc,mean_v_out,clamp_a,clamp_b,clamp_c";

/// One run per (scheme, m) pair, each in its own subdirectory, then
/// `summary.csv` once every run has finished.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepPoint>, CliError> {
    create_dir(out)?;
    let grid: Vec<(Scheme, f64)> =
        cfg.sweep_schemes.iter().flat_map(|&s| cfg.sweep_m.iter().map(move |&m| (s, m))).collect();
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&(scheme, m)| {
            let dir = format!("{}_m{:.4}", scheme.name(), m);
            let mut point_cfg = cfg.clone();
            point_cfg.sim.scheme = scheme;
            point_cfg.sim.m = m;
            let result = simulate(&point_cfg, &out.join(&dir))
                .map(|r| {
                    let x = &r.metrics;
                    SweepMetrics {
                        fundamental: x.source[0].fundamental.amplitude,
                        phase_error_deg: x.phase_error[0].to_degrees(),
                        thd: x.source[0].thd,
                        tracking_error_rms: x.tracking_error_rms,
                        mean_i_dc: x.mean_i_dc,
                        mean_v_out: x.mean_v_out,
                        clamp_fraction: x.clamp.clamp_fraction,
                    }
                })
                .map_err(|e| e.to_string());
            SweepPoint { scheme, m, dir, result }
        })
        .collect();

    let mut csv = String::from(SUMMARY_HEADER);
    csv.push('\n');
    for p in &points {
        match &p.result {
            Ok(x) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},ok,{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    p.scheme.name(),
                    p.m,
                    p.dir,
                    x.fundamental,
                    x.phase_error_deg,
                    x.thd,
                    x.tracking_error_rms,
                    x.mean_i_dc,
                    x.mean_v_out,
                    x.clamp_fraction[0],
                    x.clamp_fraction[1],
                    x.clamp_fraction[2]
                );
            }
            Err(e) => {
                let _ = writeln!(csv, "{},{},{},\"error: {}\",,,,,,,,,", p.scheme.name(), p.m, p.dir, e.replace('"', "'"));
            }
        }
    }
    write_file(&out.join("summary.csv"), &csv)?;
    Ok(points)
}
