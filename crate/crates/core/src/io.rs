//! Run configuration files and CSV output.
//!
//! Configs are INI-style: `[section]` headers, `key = value` lines and `#`
//! comments. Sections are `[system]`, `[integration]`, `[sweep]` and
//! `[output]`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::analysis::{
    AttractorClass, BistabilityReport, Direction, HysteresisPoint, LyapunovMethod, LyapunovResult,
};
use crate::error::{Error, Result};
use crate::integrator::{ConvergenceReport, IntegrationConfig, Trajectory};
use crate::model::{Component, Convention, ParamId, StateVector, SystemParams};
use crate::steady_state::FixedPoint;
use crate::sweep::SweepRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax,
    UnknownSection,
    UnknownKey,
    MalformedValue,
    Constraint,
}

impl ConfigErrorKind {
    fn name(self) -> &'static str {
        match self {
            ConfigErrorKind::Syntax => "syntax error",
            ConfigErrorKind::UnknownSection => "unknown section",
            ConfigErrorKind::UnknownKey => "unknown key",
            ConfigErrorKind::MalformedValue => "malformed value",
            ConfigErrorKind::Constraint => "constraint violated",
        }
    }
}

/// A config problem. Line 0 means a command-line override.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub kind: ConfigErrorKind,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "command line: {}: {}", self.kind.name(), self.message)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.kind.name(), self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(line: usize, kind: ConfigErrorKind, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        kind,
        message: message.into(),
    }
}

/// Which way a one-parameter sweep runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepDirection {
    Up,
    Down,
    Both,
}

impl SweepDirection {
    pub fn directions(self) -> Vec<Direction> {
        match self {
            SweepDirection::Up => vec![Direction::Up],
            SweepDirection::Down => vec![Direction::Down],
            SweepDirection::Both => vec![Direction::Up, Direction::Down],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub x_param: ParamId,
    pub x_min: f64,
    pub x_max: f64,
    pub x_n: usize,
    pub y_param: ParamId,
    pub y_min: f64,
    pub y_max: f64,
    pub y_n: usize,
    /// One-parameter sweeps.
    pub param: ParamId,
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub direction: SweepDirection,
    pub ic: StateVector,
    pub ic2: Option<StateVector>,
    /// Basin maps sweep these two initial-condition components.
    pub ic_x: Component,
    pub ic_x_min: f64,
    pub ic_x_max: f64,
    pub ic_x_n: usize,
    pub ic_y: Component,
    pub ic_y_min: f64,
    pub ic_y_max: f64,
    pub ic_y_n: usize,
    pub renorm_interval: f64,
    pub lyapunov_method: LyapunovMethod,
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            x_param: ParamId::Delta,
            x_min: -3.0,
            x_max: 3.0,
            x_n: 101,
            y_param: ParamId::Jm,
            y_min: 0.0,
            y_max: 0.1,
            y_n: 101,
            param: ParamId::Jm,
            min: 0.4,
            max: 0.65,
            n: 26,
            direction: SweepDirection::Both,
            ic: StateVector::ZERO,
            ic2: None,
            ic_x: Component::Ar,
            ic_x_min: -2.0,
            ic_x_max: 0.0,
            ic_x_n: 16,
            ic_y: Component::B1r,
            ic_y_min: -2.0,
            ic_y_max: 0.0,
            ic_y_n: 16,
            renorm_interval: 1.0,
            lyapunov_method: LyapunovMethod::TangentMap,
            workers: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputConfig {
    /// CSV destination; standard output when unset.
    pub path: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV.
    pub gnuplot: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub integration: IntegrationConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

pub const SECTIONS: [&str; 4] = ["system", "integration", "sweep", "output"];

fn parse_f64(line: usize, key: &str, v: &str) -> std::result::Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| {
        cfg_err(line, ConfigErrorKind::MalformedValue, format!("{key}: '{v}' is not a number"))
    })?;
    if !x.is_finite() {
        return Err(cfg_err(line, ConfigErrorKind::Constraint, format!("{key} must be finite")));
    }
    Ok(x)
}

fn parse_usize(line: usize, key: &str, v: &str) -> std::result::Result<usize, ConfigError> {
    v.parse().map_err(|_| {
        cfg_err(
            line,
            ConfigErrorKind::MalformedValue,
            format!("{key}: '{v}' is not a non-negative integer"),
        )
    })
}

fn parse_bool(line: usize, key: &str, v: &str) -> std::result::Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(cfg_err(
            line,
            ConfigErrorKind::MalformedValue,
            format!("{key}: '{v}' is not a boolean"),
        )),
    }
}

fn parse_state(line: usize, key: &str, v: &str) -> std::result::Result<StateVector, ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(cfg_err(
            line,
            ConfigErrorKind::MalformedValue,
            format!("{key}: expected six comma-separated numbers"),
        ));
    }
    let mut s = [0.0; 6];
    for (slot, p) in s.iter_mut().zip(parts) {
        *slot = parse_f64(line, key, p)?;
    }
    Ok(StateVector(s))
}

fn parse_named<T: std::str::FromStr>(
    line: usize,
    key: &str,
    v: &str,
) -> std::result::Result<T, ConfigError> {
    v.parse().map_err(|_| {
        cfg_err(line, ConfigErrorKind::MalformedValue, format!("{key}: unrecognised value '{v}'"))
    })
}

fn require(line: usize, ok: bool, rule: &str) -> std::result::Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(cfg_err(line, ConfigErrorKind::Constraint, rule.to_string()))
    }
}

impl RunConfig {
    /// Set one `section.key`. `line` is used for diagnostics only.
    pub fn set(
        &mut self,
        section: &str,
        key: &str,
        value: &str,
        line: usize,
    ) -> std::result::Result<(), ConfigError> {
        let v = value.trim();
        let unknown = || {
            cfg_err(line, ConfigErrorKind::UnknownKey, format!("'{key}' in [{section}]"))
        };
        match section {
            "system" => {
                if key == "convention" {
                    self.system.convention = parse_named::<Convention>(line, key, v)?;
                    return Ok(());
                }
                let id: ParamId = key.parse().map_err(|_| unknown())?;
                let x = parse_f64(line, key, v)?;
                match id {
                    ParamId::Kappa => require(line, x > 0.0, "kappa must be > 0")?,
                    ParamId::Gamma1 => require(line, x > 0.0, "gamma1 must be > 0")?,
                    ParamId::Gamma2 => require(line, x > 0.0, "gamma2 must be > 0")?,
                    ParamId::Jm => require(line, x >= 0.0, "jm must be >= 0")?,
                    _ => {}
                }
                id.set(&mut self.system, x);
            }
            "integration" => {
                let c = &mut self.integration;
                match key {
                    "dt" => {
                        c.dt = parse_f64(line, key, v)?;
                        require(line, c.dt > 0.0, "dt must be > 0")?;
                    }
                    "t_total" => {
                        c.t_total = parse_f64(line, key, v)?;
                        require(line, c.t_total > 0.0, "t_total must be > 0")?;
                    }
                    "t_transient" => {
                        c.t_transient = parse_f64(line, key, v)?;
                        require(line, c.t_transient >= 0.0, "t_transient must be >= 0")?;
                    }
                    "record_stride" => {
                        c.record_stride = parse_usize(line, key, v)?;
                        require(line, c.record_stride >= 1, "record_stride must be >= 1")?;
                    }
                    "blow_up_bound" => {
                        c.blow_up_bound = parse_f64(line, key, v)?;
                        require(line, c.blow_up_bound > 0.0, "blow_up_bound must be > 0")?;
                    }
                    "keep_transient" => c.keep_transient = parse_bool(line, key, v)?,
                    _ => return Err(unknown()),
                }
            }
            "sweep" => {
                let s = &mut self.sweep;
                let count = |n: usize| require(line, n >= 2, &format!("{key} must be >= 2")).map(|_| n);
                match key {
                    "x_param" => s.x_param = parse_named(line, key, v)?,
                    "x_min" => s.x_min = parse_f64(line, key, v)?,
                    "x_max" => s.x_max = parse_f64(line, key, v)?,
                    "x_n" => s.x_n = count(parse_usize(line, key, v)?)?,
                    "y_param" => s.y_param = parse_named(line, key, v)?,
                    "y_min" => s.y_min = parse_f64(line, key, v)?,
                    "y_max" => s.y_max = parse_f64(line, key, v)?,
                    "y_n" => s.y_n = count(parse_usize(line, key, v)?)?,
                    "param" => s.param = parse_named(line, key, v)?,
                    "min" => s.min = parse_f64(line, key, v)?,
                    "max" => s.max = parse_f64(line, key, v)?,
                    "n" => s.n = count(parse_usize(line, key, v)?)?,
                    "direction" => {
                        s.direction = match v.to_ascii_lowercase().as_str() {
                            "up" => SweepDirection::Up,
                            "down" => SweepDirection::Down,
                            "both" => SweepDirection::Both,
                            _ => {
                                return Err(cfg_err(
                                    line,
                                    ConfigErrorKind::MalformedValue,
                                    format!("direction: '{v}' (expected up|down|both)"),
                                ))
                            }
                        }
                    }
                    "ic" => s.ic = parse_state(line, key, v)?,
                    "ic2" => {
                        s.ic2 = if v.is_empty() || v == "none" {
                            None
                        } else {
                            Some(parse_state(line, key, v)?)
                        }
                    }
                    "ic_x" => s.ic_x = parse_named(line, key, v)?,
                    "ic_x_min" => s.ic_x_min = parse_f64(line, key, v)?,
                    "ic_x_max" => s.ic_x_max = parse_f64(line, key, v)?,
                    "ic_x_n" => s.ic_x_n = count(parse_usize(line, key, v)?)?,
                    "ic_y" => s.ic_y = parse_named(line, key, v)?,
                    "ic_y_min" => s.ic_y_min = parse_f64(line, key, v)?,
                    "ic_y_max" => s.ic_y_max = parse_f64(line, key, v)?,
                    "ic_y_n" => s.ic_y_n = count(parse_usize(line, key, v)?)?,
                    "renorm_interval" => {
                        s.renorm_interval = parse_f64(line, key, v)?;
                        require(line, s.renorm_interval > 0.0, "renorm_interval must be > 0")?;
                    }
                    "lyapunov_method" => {
                        s.lyapunov_method = match v.to_ascii_lowercase().as_str() {
                            "tangent" => LyapunovMethod::TangentMap,
                            "two_trajectory" => LyapunovMethod::TwoTrajectory,
                            _ => {
                                return Err(cfg_err(
                                    line,
                                    ConfigErrorKind::MalformedValue,
                                    format!("lyapunov_method: '{v}' (expected tangent|two_trajectory)"),
                                ))
                            }
                        }
                    }
                    "workers" => {
                        let w = parse_usize(line, key, v)?;
                        require(line, w >= 1, "workers must be >= 1")?;
                        s.workers = Some(w);
                    }
                    _ => return Err(unknown()),
                }
            }
            "output" => match key {
                "path" => self.output.path = (!v.is_empty()).then(|| PathBuf::from(v)),
                "gnuplot" => self.output.gnuplot = parse_bool(line, key, v)?,
                _ => return Err(unknown()),
            },
            other => {
                return Err(cfg_err(line, ConfigErrorKind::UnknownSection, format!("[{other}]")))
            }
        }
        Ok(())
    }

    /// Apply a `section.key` override from the command line.
    pub fn apply_override(&mut self, dotted: &str, value: &str) -> std::result::Result<(), ConfigError> {
        let Some((section, key)) = dotted.split_once('.') else {
            return Err(cfg_err(
                0,
                ConfigErrorKind::Syntax,
                format!("'{dotted}' is not of the form section.key"),
            ));
        };
        self.set(section, key, value, 0)
    }

    /// Cross-field invariants. `line` is attached to any violation.
    pub fn check(&self, line: usize) -> std::result::Result<(), ConfigError> {
        require(
            line,
            self.integration.t_transient < self.integration.t_total,
            "t_transient must be < t_total",
        )?;
        require(line, self.sweep.x_param != self.sweep.y_param, "x_param and y_param must differ")?;
        require(line, self.sweep.ic_x != self.sweep.ic_y, "ic_x and ic_y must differ")?;
        Ok(())
    }
}

/// Parse a config file over the defaults.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    merge_config(&mut cfg, text)?;
    Ok(cfg)
}

/// Parse `text` on top of an existing config.
pub fn merge_config(cfg: &mut RunConfig, text: &str) -> std::result::Result<(), ConfigError> {
    let mut section: Option<String> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        last_line = line;
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| {
                cfg_err(line, ConfigErrorKind::Syntax, format!("unterminated section header '{content}'"))
            })?;
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(cfg_err(line, ConfigErrorKind::UnknownSection, format!("[{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            cfg_err(line, ConfigErrorKind::Syntax, format!("expected 'key = value', got '{content}'"))
        })?;
        let Some(sec) = section.as_deref() else {
            return Err(cfg_err(line, ConfigErrorKind::Syntax, "key outside of any section"));
        };
        cfg.set(sec, key.trim(), value, line)?;
    }
    cfg.check(last_line)
}

/// Column layout of each output file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsvSchema {
    Trajectory,
    Peaks,
    CountMap,
    StabilityMap,
    AttractorMap,
    Basin,
    Lyapunov,
    FixedPoints,
    Bistability,
    Convergence,
}

impl CsvSchema {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            CsvSchema::Trajectory => &["t", "ar", "ai", "b1r", "b1i", "b2r", "b2i"],
            CsvSchema::Peaks => &["param_value", "direction", "variable", "peak_value"],
            CsvSchema::CountMap => &["param1", "param2", "count", "closed_form_count"],
            CsvSchema::StabilityMap => &[
                "param1", "param2", "count", "stable1", "stable2", "stable3", "max_re1", "max_re2",
                "max_re3",
            ],
            CsvSchema::AttractorMap => &[
                "param1",
                "param2",
                "class",
                "lambda_max",
                "second_class",
                "coexisting",
                "hidden",
            ],
            CsvSchema::Basin => &["ic1", "ic2", "class", "lambda_max", "basin"],
            CsvSchema::Lyapunov => &["lambda_max", "stderr", "converged"],
            CsvSchema::FixedPoints => &[
                "ar",
                "ai",
                "b1r",
                "b1i",
                "b2r",
                "b2i",
                "residual",
                "max_real_part",
                "stable",
            ],
            CsvSchema::Bistability => &[
                "class_a",
                "class_b",
                "lambda_a",
                "lambda_b",
                "optical_distance",
                "optical_diameter",
                "mechanical_distance",
                "mechanical_diameter",
                "same_attractor",
            ],
            CsvSchema::Convergence => &["observable", "coarse", "fine"],
        }
    }
}

/// One CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
    Empty,
}

/// 17 significant digits, exponent form, locale-independent.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => (if *b { "1" } else { "0" }).into(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

fn opt_num(x: Option<f64>) -> Cell {
    x.map_or(Cell::Empty, Cell::Num)
}

fn opt_bool(x: Option<bool>) -> Cell {
    x.map_or(Cell::Empty, Cell::Bool)
}

fn opt_class(x: Option<AttractorClass>) -> Cell {
    x.map_or(Cell::Empty, |c| Cell::Text(c.name().into()))
}

/// Render rows to CSV bytes with a header.
pub fn render_csv(schema: CsvSchema, rows: &[Vec<Cell>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let bad = |e: csv::Error| Error::Csv {
        path: PathBuf::from("<memory>"),
        message: e.to_string(),
    };
    w.write_record(schema.columns()).map_err(bad)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != schema.columns().len() {
            return Err(Error::Csv {
                path: PathBuf::from("<memory>"),
                message: format!("row {i} has {} fields, schema {:?} has {}", row.len(), schema, schema.columns().len()),
            });
        }
        w.write_record(row.iter().map(Cell::render)).map_err(bad)?;
    }
    w.into_inner().map_err(|e| Error::Csv {
        path: PathBuf::from("<memory>"),
        message: e.to_string(),
    })
}

/// Write rows to `path`, or standard output when `path` is `None`.
pub fn write_records(rows: &[Vec<Cell>], schema: CsvSchema, path: Option<&Path>) -> Result<()> {
    let bytes = render_csv(schema, rows)?;
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout().lock().write_all(&bytes).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

pub fn trajectory_rows(t: &Trajectory) -> Vec<Vec<Cell>> {
    t.times
        .iter()
        .zip(&t.states)
        .map(|(&time, s)| {
            std::iter::once(Cell::Num(time))
                .chain(s.0.iter().map(|&x| Cell::Num(x)))
                .collect()
        })
        .collect()
}

pub fn peak_rows(points: &[HysteresisPoint]) -> Vec<Vec<Cell>> {
    let mut rows = Vec::new();
    for p in points {
        for set in [&p.peaks_ar, &p.peaks_b1r] {
            for &v in &set.values {
                rows.push(vec![
                    Cell::Num(p.value),
                    Cell::Text(p.direction.name().into()),
                    Cell::Text(set.variable.name().into()),
                    Cell::Num(v),
                ]);
            }
        }
    }
    rows
}

pub fn count_map_rows(records: &[SweepRecord]) -> Vec<Vec<Cell>> {
    records
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.x),
                Cell::Num(r.y),
                r.count.map_or(Cell::Empty, Cell::Int),
                r.closed_form_count.map_or(Cell::Empty, Cell::Int),
            ]
        })
        .collect()
}

pub fn stability_map_rows(records: &[SweepRecord]) -> Vec<Vec<Cell>> {
    records
        .iter()
        .map(|r| {
            let mut row = vec![Cell::Num(r.x), Cell::Num(r.y), r.count.map_or(Cell::Empty, Cell::Int)];
            row.extend((0..3).map(|k| opt_bool(r.stable.get(k).copied())));
            row.extend((0..3).map(|k| opt_num(r.max_real_parts.get(k).copied())));
            row
        })
        .collect()
}

pub fn attractor_map_rows(records: &[SweepRecord]) -> Vec<Vec<Cell>> {
    records
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.x),
                Cell::Num(r.y),
                opt_class(r.class),
                opt_num(r.lambda_max),
                opt_class(r.second_class),
                opt_bool(r.coexisting),
                opt_bool(r.hidden),
            ]
        })
        .collect()
}

pub fn basin_rows(records: &[SweepRecord]) -> Vec<Vec<Cell>> {
    records
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.x),
                Cell::Num(r.y),
                opt_class(r.class),
                opt_num(r.lambda_max),
                r.basin.map_or(Cell::Empty, Cell::Int),
            ]
        })
        .collect()
}

pub fn lyapunov_rows(l: &LyapunovResult) -> Vec<Vec<Cell>> {
    vec![vec![Cell::Num(l.lambda_max), Cell::Num(l.std_error), Cell::Bool(l.converged)]]
}

pub fn fixed_point_rows(points: &[FixedPoint]) -> Vec<Vec<Cell>> {
    points
        .iter()
        .map(|fp| {
            let mut row: Vec<Cell> = fp.state.0.iter().map(|&x| Cell::Num(x)).collect();
            row.push(Cell::Num(fp.residual_norm));
            row.push(Cell::Num(fp.max_real_part()));
            row.push(Cell::Bool(fp.stable));
            row
        })
        .collect()
}

pub fn bistability_rows(r: &BistabilityReport) -> Vec<Vec<Cell>> {
    let lam = |b: &crate::analysis::BranchOutcome| opt_num(b.lyapunov.as_ref().map(|l| l.lambda_max));
    let c = r.comparison;
    vec![vec![
        Cell::Text(r.a.class.name().into()),
        Cell::Text(r.b.class.name().into()),
        lam(&r.a),
        lam(&r.b),
        opt_num(c.map(|c| c.optical.distance)),
        opt_num(c.map(|c| c.optical.diameter)),
        opt_num(c.map(|c| c.mechanical.distance)),
        opt_num(c.map(|c| c.mechanical.diameter)),
        opt_bool(r.same_attractor()),
    ]]
}

pub fn convergence_rows(r: &ConvergenceReport) -> Vec<Vec<Cell>> {
    let mut rows: Vec<Vec<Cell>> = r
        .observables
        .iter()
        .map(|(name, a, b)| vec![Cell::Text(name.clone()), Cell::Num(*a), Cell::Num(*b)])
        .collect();
    rows.push(vec![
        Cell::Text("max_relative_deviation".into()),
        Cell::Num(r.max_relative_deviation),
        Cell::Empty,
    ]);
    rows.push(vec![
        Cell::Text("peak_distribution_distance".into()),
        Cell::Num(r.peak_distribution_distance),
        Cell::Empty,
    ]);
    rows
}

/// Header and raw fields of a CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let bad = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(bad)?;
    let header = r.headers().map_err(bad)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(bad)?.iter().map(String::from).collect());
    }
    Ok(Table { header, rows })
}

/// Parse a field written by [`format_f64`].
pub fn parse_f64_field(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// Read a trajectory CSV back into times and states.
pub fn read_trajectory(path: &Path) -> Result<(Vec<f64>, Vec<StateVector>)> {
    let table = read_table(path)?;
    let want = CsvSchema::Trajectory.columns();
    if table.header != want {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: format!("expected header {}", want.join(",")),
        });
    }
    let mut times = Vec::with_capacity(table.rows.len());
    let mut states = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let vals: Option<Vec<f64>> = row.iter().map(|f| parse_f64_field(f)).collect();
        let vals = vals.filter(|v| v.len() == 7).ok_or_else(|| Error::Csv {
            path: path.to_path_buf(),
            message: format!("row {} is not seven numbers", i + 2),
        })?;
        times.push(vals[0]);
        states.push(StateVector(vals[1..].try_into().unwrap()));
    }
    Ok((times, states))
}

/// Rows for [`CsvSchema::Trajectory`] from bare samples.
pub fn samples_rows(times: &[f64], states: &[StateVector]) -> Vec<Vec<Cell>> {
    times
        .iter()
        .zip(states)
        .map(|(&t, s)| std::iter::once(Cell::Num(t)).chain(s.0.iter().map(|&x| Cell::Num(x))).collect())
        .collect()
}

/// Best-effort gnuplot script for a CSV written with `schema`.
pub fn gnuplot_script(schema: CsvSchema, csv_path: &Path) -> String {
    let file = csv_path.display();
    let body = match schema {
        CsvSchema::Trajectory => format!("plot '{file}' using 1:2 with lines title 'ar'"),
        CsvSchema::Peaks => format!("plot '{file}' using 1:4 with points pt 7 ps 0.3 title 'peaks'"),
        CsvSchema::CountMap => format!("plot '{file}' using 1:2:3 with points pt 5 palette title 'count'"),
        CsvSchema::StabilityMap => format!("plot '{file}' using 1:2:4 with points pt 5 palette title 'stable1'"),
        CsvSchema::AttractorMap => format!("plot '{file}' using 1:2:4 with points pt 5 palette title 'lambda_max'"),
        CsvSchema::Basin => format!("plot '{file}' using 1:2:5 with points pt 5 palette title 'basin'"),
        _ => format!("# no default plot for this table\n# data: {file}"),
    };
    format!("# best-effort gnuplot script\nset datafile separator ','\nset key autotitle columnhead\n{body}\n")
}

pub fn write_gnuplot(schema: CsvSchema, csv_path: &Path) -> Result<PathBuf> {
    let script = csv_path.with_extension("gp");
    fs::write(&script, gnuplot_script(schema, csv_path)).map_err(|source| Error::Io {
        path: script.clone(),
        source,
    })?;
    Ok(script)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
        assert_eq!(parse_config("# nothing\n\n   \n").unwrap(), RunConfig::default());
    }

    #[test]
    fn sets_values() {
        let c = parse_config(
            "[system]\ntheta = 1.5707963\nconvention = paper # inline\n[integration]\ndt = 5e-4\nkeep_transient = yes\n[sweep]\nic2 = -1.096, 0, -0.8734, 0, 0, 0\nworkers = 3\n[output]\npath = out.csv\n",
        )
        .unwrap();
        assert!((c.system.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-7);
        assert_eq!(c.system.convention, Convention::PaperVerbatim);
        assert_eq!(c.integration.dt, 5e-4);
        assert!(c.integration.keep_transient);
        assert_eq!(c.sweep.ic2.unwrap().0[2], -0.8734);
        assert_eq!(c.sweep.workers, Some(3));
        assert_eq!(c.output.path.as_deref(), Some(Path::new("out.csv")));
    }

    #[test]
    fn distinct_diagnostics() {
        let cases = [
            ("[system]\nkappa = -1\n", 2, ConfigErrorKind::Constraint, "kappa must be > 0"),
            ("[system]\nfoo = 1\n", 2, ConfigErrorKind::UnknownKey, "foo"),
            ("\n[system]\ndelta = abc\n", 3, ConfigErrorKind::MalformedValue, "abc"),
            ("[physics]\n", 1, ConfigErrorKind::UnknownSection, "physics"),
            ("delta = 1\n", 1, ConfigErrorKind::Syntax, "outside"),
            ("[system\n", 1, ConfigErrorKind::Syntax, "unterminated"),
            ("[system]\ndelta\n", 2, ConfigErrorKind::Syntax, "key = value"),
            ("[integration]\nt_transient = 2e3\n", 2, ConfigErrorKind::Constraint, "t_transient"),
            ("[sweep]\nx_n = 1\n", 2, ConfigErrorKind::Constraint, "x_n"),
        ];
        for (text, line, kind, needle) in cases {
            let e = parse_config(text).unwrap_err();
            assert_eq!((e.line, e.kind), (line, kind), "{text:?}: {e}");
            assert!(e.to_string().contains(needle), "{e}");
            assert!(e.to_string().starts_with(&format!("line {line}:")));
        }
    }

    #[test]
    fn overrides() {
        let mut c = RunConfig::default();
        c.apply_override("system.alpha_in", "1.2e3").unwrap();
        assert_eq!(c.system.alpha_in, 1.2e3);
        let e = c.apply_override("alpha_in", "1").unwrap_err();
        assert_eq!(e.kind, ConfigErrorKind::Syntax);
        let e = c.apply_override("system.kappa", "0").unwrap_err();
        assert_eq!((e.line, e.kind), (0, ConfigErrorKind::Constraint));
        assert!(e.to_string().starts_with("command line:"));
    }

    #[test]
    fn number_format() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_f64(f64::NAN), "nan");
        for x in [0.1, 1.0 / 3.0, -7.3e-2, 1e-300, 5e-324, f64::MAX] {
            assert_eq!(parse_f64_field(&format_f64(x)), Some(x));
        }
    }

    #[test]
    fn header_only_and_single_row() {
        let b = render_csv(CsvSchema::Trajectory, &[]).unwrap();
        assert_eq!(b, b"t,ar,ai,b1r,b1i,b2r,b2i\n");
        let rows = samples_rows(&[0.0], &[StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)]);
        let s = String::from_utf8(render_csv(CsvSchema::Trajectory, &rows).unwrap()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(render_csv(CsvSchema::Lyapunov, &[vec![Cell::Num(1.0)]]).is_err());
    }

    #[test]
    fn io_errors_carry_path() {
        let p = Path::new("/nonexistent-dir/x.csv");
        let e = write_records(&[], CsvSchema::Peaks, Some(p)).unwrap_err();
        assert!(e.to_string().contains("/nonexistent-dir/x.csv"));
        assert!(read_table(p).is_err());
    }
}
