//! Trace CSV and plain-text reports.

use std::fmt::Write as _;
use std::io::{self, Write};

use tpts_core::analysis::{MetricsReport, ResourceRow};
use tpts_core::simulator::TRACE_COLUMNS;
use tpts_core::{Phase, Trace};

use crate::config::RunConfig;

/// Writes the trace with a header row and every value at 17 significant
/// digits, so the file round-trips to the same doubles.
pub fn write_trace_csv(mut w: impl Write, trace: &Trace) -> io::Result<()> {
    writeln!(w, "{}", TRACE_COLUMNS.join(","))?;
    let mut line = String::with_capacity(TRACE_COLUMNS.len() * 24);
    for i in 0..trace.len() {
        line.clear();
        for (k, v) in trace.row(i).iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            write!(line, "{v:.16e}").expect("write to String");
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

fn pct(x: f64) -> String {
    format!("{:.3} %", 100.0 * x)
}

fn triple<T>(xs: [T; 3], f: impl Fn(&T) -> String) -> String {
    Phase::ALL.iter().zip(xs.iter()).map(|(p, x)| format!("{p}={}", f(x))).collect::<Vec<_>>().join("  ")
}

/// Human-readable metrics for one run.
pub fn render_metrics(cfg: &RunConfig, m: &MetricsReport) -> String {
    let s = &cfg.sim;
    let mut out = String::new();
    let _ = writeln!(out, "scheme                 {}", s.scheme);
    let _ = writeln!(out, "modulation index       {}", s.m);
    let _ = writeln!(out, "switching frequency    {} Hz", s.f_sw);
    let _ = writeln!(out, "load current           {} A", s.load_current);
    let _ = writeln!(
        out,
        "window                 {} fundamental period(s) from t = {:.6} s",
        m.window_cycles, m.window_start
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "[source current]");
    let _ = writeln!(out, "fundamental            {}", triple(m.source, |c| format!("{:.6} A", c.fundamental.amplitude)));
    let _ = writeln!(out, "reference              {}", triple(m.reference, |r| format!("{:.6} A", r.amplitude)));
    let _ = writeln!(out, "phase error            {}", triple(m.phase_error, |e| format!("{:.3} deg", e.to_degrees())));
    let _ = writeln!(out, "thd (h2..h{})          {}", cfg.harmonics, triple(m.source, |c| pct(c.thd)));
    let _ = writeln!(out, "switching band         {}", triple(m.source, |c| pct(c.hf_distortion)));
    let _ = writeln!(out, "tracking error rms     {:.6} A", m.tracking_error_rms);
    let _ = writeln!(out);
    let _ = writeln!(out, "[rectifier current]");
    let _ = writeln!(out, "fundamental            {}", triple(m.rectifier, |c| format!("{:.6} A", c.fundamental.amplitude)));
    let _ = writeln!(out, "thd (h2..h{})          {}", cfg.harmonics, triple(m.rectifier, |c| pct(c.thd)));
    let _ = writeln!(out, "switching band         {}", triple(m.rectifier, |c| pct(c.hf_distortion)));
    let _ = writeln!(out);
    let _ = writeln!(out, "[dc side]");
    let _ = writeln!(out, "mean i_dc              {:.6} A", m.mean_i_dc);
    let _ = writeln!(out, "i_dc ripple (p-p)      {}", pct(m.i_dc_ripple));
    let _ = writeln!(out, "mean v_out             {:.6} V", m.mean_v_out);
    let _ = writeln!(out, "output power           {:.3} W", m.mean_v_out * s.load_current);
    let _ = writeln!(out);
    let _ = writeln!(out, "[switching]");
    let _ = writeln!(out, "clamp fraction         {}", triple(m.clamp.clamp_fraction, |f| format!("{f:.6}")));
    let _ = writeln!(out, "transitions / period   {}", triple(m.clamp.max_transitions, |n| format!("max {n}")));
    let _ = writeln!(out, "mean transitions       {}", triple(m.clamp.mean_transitions, |n| format!("{n:.4}")));
    if !m.op_counters.is_empty() {
        let _ = writeln!(out);
        out.push_str(&render_counters(&m.op_counters));
    }
    out
}

/// Per-cycle operation counts, one column per scheme.
pub fn render_counters(rows: &[ResourceRow]) -> String {
    let mut out = String::from("[operations per control cycle]\n");
    let _ = write!(out, "{:<22}", "");
    for r in rows {
        let _ = write!(out, "{:>10}", r.scheme.name());
    }
    out.push('\n');
    type Field = (&'static str, fn(&ResourceRow) -> u32);
    let fields: [Field; 8] = [
        ("multiplications", |r| r.counters.multiplications),
        ("additions", |r| r.counters.additions),
        ("subtractions", |r| r.counters.subtractions),
        ("trigonometric", |r| r.counters.trig_evals),
        ("absolute values", |r| r.counters.abs_evals),
        ("relational", |r| r.counters.relational_ops),
        ("branches", |r| r.counters.branches),
        ("table lookups", |r| r.counters.table_lookups),
    ];
    for (name, get) in fields {
        let _ = write!(out, "{name:<22}");
        for r in rows {
            let _ = write!(out, "{:>10}", get(r));
        }
        out.push('\n');
    }
    out
}
