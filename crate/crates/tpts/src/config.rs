//! Run configuration: a flat TOML document of `key = value` pairs plus
//! `key=value` command-line overrides. Every key is optional; the defaults
//! are the hardware and operating values the engine is calibrated against.

use std::fmt;

use thiserror::Error;
use toml::de::{DeTable, DeValue};
use tpts_core::{CircuitParams, GridConfig, Scheme, SimConfig};

/// Where a setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("--set"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Syntax { origin: Origin, message: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { key: String, origin: Origin },
    #[error("{origin}: `{key}` expects {expected}")]
    Type { key: String, origin: Origin, expected: &'static str },
    #[error("{origin}: `{key}` {reason}")]
    Range { key: String, origin: Origin, reason: String },
    #[error("{0}")]
    Inconsistent(String),
}

/// Everything a command needs besides the output location.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    /// Highest harmonic order in the low-frequency THD.
    pub harmonics: usize,
    /// Fundamental periods discarded before measuring.
    pub skip_cycles: usize,
    pub sweep_m: Vec<f64>,
    pub sweep_schemes: Vec<Scheme>,
    pub selftest_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sim: SimConfig::default(),
            harmonics: 50,
            skip_cycles: 1,
            sweep_m: vec![0.25, 0.5, 0.75, 0.9],
            sweep_schemes: Scheme::ALL.to_vec(),
            selftest_points: 10_000,
        }
    }
}

/// Recognised keys with a one-line description, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("v_ll_peak", "peak line-to-line grid voltage, V (245)"),
    ("f_grid", "grid frequency, Hz (50)"),
    ("phase_offset_deg", "grid angle at t = 0, degrees (0)"),
    ("f_sw", "switching frequency, Hz (18000)"),
    ("m", "modulation index, peak grid current over DC-link current, 0..=1 (0.5)"),
    ("load_current", "constant-current load, A (5)"),
    ("load_knee", "voltage below which the load current tapers to zero, V (1)"),
    ("l_in", "input filter inductance, H (230e-6)"),
    ("r_l_in", "input inductor resistance, ohm (0.1)"),
    ("c_in", "input filter capacitance, F (6.8e-6)"),
    ("l_out", "DC-link inductance, H (1e-3)"),
    ("c_out", "output capacitance, F (150e-6)"),
    ("r_damp", "extra series damping in the input filter, ohm (0)"),
    ("duration", "simulated time, s (0.06)"),
    ("steps_per_period", "RK4 steps per switching period, >= 20 (200)"),
    ("record_every", "keep every n-th step in the trace (1)"),
    ("scheme", "pattern1 | pattern2 | svm (pattern1)"),
    ("cap_compensation", "feed forward the filter capacitor current (true)"),
    ("exact_edges", "split steps at switching instants instead of snapping (true)"),
    ("harmonics", "highest harmonic order in the THD, >= 2 (50)"),
    ("skip_cycles", "fundamental periods discarded before measuring (1)"),
    ("sweep_m", "modulation indices visited by `sweep` ([0.25, 0.5, 0.75, 0.9])"),
    ("sweep_schemes", "schemes visited by `sweep` (all three)"),
    ("selftest_points", "random operating points per self-test property (10000)"),
];

/// A parsed value, independent of where it came from.
#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
    List(Vec<Value>),
    Table,
}

impl Value {
    fn from_de(v: &DeValue<'_>) -> Result<Value, String> {
        Ok(match v {
            DeValue::Integer(i) => Value::Integer(
                i64::from_str_radix(i.as_str(), i.radix()).map_err(|e| format!("bad integer: {e}"))?,
            ),
            DeValue::Float(f) => Value::Number(f.as_str().parse().map_err(|_| format!("bad float `{f}`"))?),
            DeValue::Boolean(b) => Value::Bool(*b),
            DeValue::String(s) => Value::Text(s.to_string()),
            DeValue::Array(a) => Value::List(a.iter().map(|x| Value::from_de(x.get_ref())).collect::<Result<_, _>>()?),
            DeValue::Table(_) => Value::Table,
            DeValue::Datetime(d) => Value::Text(d.to_string()),
        })
    }

    fn number(&self) -> Option<f64> {
        match *self {
            Value::Number(x) => Some(x),
            Value::Integer(i) => Some(i as f64),
            _ => None,
        }
    }
}

type Problem = (&'static str, Option<String>);

fn number(v: &Value) -> Result<f64, Problem> {
    v.number().filter(|x| x.is_finite()).ok_or(("a number", None))
}

fn positive(v: &Value) -> Result<f64, Problem> {
    let x = number(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(("", Some(format!("must be positive, got {x}"))))
    }
}

fn non_negative(v: &Value) -> Result<f64, Problem> {
    let x = number(v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(("", Some(format!("must not be negative, got {x}"))))
    }
}

fn count(v: &Value, min: usize) -> Result<usize, Problem> {
    match v {
        Value::Integer(i) if *i >= min as i64 => Ok(*i as usize),
        Value::Integer(i) => Err(("", Some(format!("must be at least {min}, got {i}")))),
        _ => Err(("an integer", None)),
    }
}

fn flag(v: &Value) -> Result<bool, Problem> {
    match v {
        Value::Bool(b) => Ok(*b),
        _ => Err(("true or false", None)),
    }
}

fn scheme(v: &Value) -> Result<Scheme, Problem> {
    match v {
        Value::Text(s) => Scheme::from_name(s).ok_or(("", Some(format!("unknown scheme `{s}` (pattern1, pattern2, svm)")))),
        _ => Err(("a scheme name", None)),
    }
}

fn index(v: &Value) -> Result<f64, Problem> {
    let m = number(v)?;
    if (0.0..=1.0).contains(&m) {
        Ok(m)
    } else {
        Err(("", Some(format!("= {m}: overmodulation, the index must lie in [0, 1]"))))
    }
}

fn list<T>(v: &Value, item: impl Fn(&Value) -> Result<T, Problem>) -> Result<Vec<T>, Problem> {
    match v {
        Value::List(xs) if !xs.is_empty() => xs.iter().map(item).collect(),
        Value::List(_) => Err(("", Some("must not be empty".into()))),
        _ => Err(("an array", None)),
    }
}

fn apply(cfg: &mut RunConfig, key: &str, v: &Value, origin: Origin) -> Result<(), ConfigError> {
    let sim = &mut cfg.sim;
    let result: Result<(), Problem> = (|| {
        match key {
            "v_ll_peak" => sim.grid.v_line_line_peak = positive(v)?,
            "f_grid" => sim.grid.f_grid = positive(v)?,
            "phase_offset_deg" => sim.grid.phase_offset = number(v)?.to_radians(),
            "f_sw" => sim.f_sw = positive(v)?,
            "m" => sim.m = index(v)?,
            "load_current" => sim.load_current = positive(v)?,
            "load_knee" => sim.load_knee = non_negative(v)?,
            "l_in" => sim.circuit.l_in = positive(v)?,
            "r_l_in" => sim.circuit.r_l_in = positive(v)?,
            "c_in" => sim.circuit.c_in = positive(v)?,
            "l_out" => sim.circuit.l_out = positive(v)?,
            "c_out" => sim.circuit.c_out = positive(v)?,
            "r_damp" => sim.circuit.r_damp = non_negative(v)?,
            "duration" => sim.duration = positive(v)?,
            "steps_per_period" => sim.steps_per_period = count(v, 20)?,
            "record_every" => sim.record_every = count(v, 1)?,
            "scheme" => sim.scheme = scheme(v)?,
            "cap_compensation" => sim.cap_compensation = flag(v)?,
            "exact_edges" => sim.exact_edges = flag(v)?,
            "harmonics" => cfg.harmonics = count(v, 2)?,
            "skip_cycles" => cfg.skip_cycles = count(v, 0)?,
            "sweep_m" => cfg.sweep_m = list(v, index)?,
            "sweep_schemes" => cfg.sweep_schemes = list(v, scheme)?,
            "selftest_points" => cfg.selftest_points = count(v, 1)?,
            _ => unreachable!("key checked by caller"),
        }
        Ok(())
    })();
    result.map_err(|(expected, reason)| match reason {
        Some(reason) => ConfigError::Range { key: key.into(), origin, reason },
        None => ConfigError::Type { key: key.into(), origin, expected },
    })
}

fn set(cfg: &mut RunConfig, key: &str, v: &Value, origin: Origin) -> Result<(), ConfigError> {
    if !KEYS.iter().any(|(k, _)| *k == key) {
        return Err(ConfigError::UnknownKey { key: key.into(), origin });
    }
    if *v == Value::Table {
        return Err(ConfigError::Type { key: key.into(), origin, expected: "a value, not a table" });
    }
    apply(cfg, key, v, origin)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses a configuration document on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    merge_document(&mut cfg, text)?;
    check(&cfg)?;
    Ok(cfg)
}

fn merge_document(cfg: &mut RunConfig, text: &str) -> Result<(), ConfigError> {
    let table = DeTable::parse(text).map_err(|e| ConfigError::Syntax {
        origin: Origin::Line(e.span().map_or(1, |s| line_of(text, s.start))),
        message: e.message().to_string(),
    })?;
    let mut entries: Vec<_> = table.get_ref().iter().collect();
    entries.sort_by_key(|(k, _)| k.span().start);
    for (key, value) in entries {
        let origin = Origin::Line(line_of(text, key.span().start));
        let v = Value::from_de(value.get_ref()).map_err(|message| ConfigError::Syntax { origin, message })?;
        set(cfg, key.get_ref(), &v, origin)?;
    }
    Ok(())
}

/// Applies one `key=value` override. Values use TOML syntax; a bare word
/// that is not valid TOML is taken as a string, so `scheme=svm` works.
pub fn apply_override(cfg: &mut RunConfig, assignment: &str) -> Result<(), ConfigError> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(ConfigError::Syntax { origin: Origin::Override, message: format!("`{assignment}` is not key=value") });
    };
    let (key, raw) = (key.trim(), raw.trim());
    let v = match DeValue::parse(raw) {
        Ok(v) => Value::from_de(v.get_ref()).map_err(|message| ConfigError::Syntax { origin: Origin::Override, message })?,
        Err(_) => Value::Text(raw.to_string()),
    };
    set(cfg, key, &v, Origin::Override)
}

/// Loads an optional document and applies overrides in order.
pub fn load(text: Option<&str>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(text) = text {
        merge_document(&mut cfg, text)?;
    }
    for o in overrides {
        apply_override(&mut cfg, o)?;
    }
    check(&cfg)?;
    Ok(cfg)
}

fn check(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.sim.validate().map_err(|e| ConfigError::Inconsistent(e.to_string()))
}

/// Renders a configuration as a document `parse_config` accepts.
pub fn render(cfg: &RunConfig) -> String {
    let s = &cfg.sim;
    let (g, c): (&GridConfig, &CircuitParams) = (&s.grid, &s.circuit);
    let nums = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
    let names = cfg.sweep_schemes.iter().map(|x| format!("\"{x}\"")).collect::<Vec<_>>().join(", ");
    format!(
        "v_ll_peak = {:?}\nf_grid = {:?}\nphase_offset_deg = {:?}\nf_sw = {:?}\nm = {:?}\nload_current = {:?}\n\
         load_knee = {:?}\nl_in = {:?}\nr_l_in = {:?}\nc_in = {:?}\nl_out = {:?}\nc_out = {:?}\nr_damp = {:?}\n\
         duration = {:?}\nsteps_per_period = {}\nrecord_every = {}\nscheme = \"{}\"\ncap_compensation = {}\n\
         exact_edges = {}\nharmonics = {}\nskip_cycles = {}\nsweep_m = [{}]\nsweep_schemes = [{}]\nselftest_points = {}\n",
        g.v_line_line_peak,
        g.f_grid,
        g.phase_offset.to_degrees(),
        s.f_sw,
        s.m,
        s.load_current,
        s.load_knee,
        c.l_in,
        c.r_l_in,
        c.c_in,
        c.l_out,
        c.c_out,
        c.r_damp,
        s.duration,
        s.steps_per_period,
        s.record_every,
        s.scheme,
        s.cap_compensation,
        s.exact_edges,
        cfg.harmonics,
        cfg.skip_cycles,
        nums(&cfg.sweep_m),
        names,
        cfg.selftest_points,
    )
}
