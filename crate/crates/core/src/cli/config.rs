//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # rotation test
//! [grid]
//! vx = 64
//! vy = 64
//! [scheme]
//! frame = rotating
//! h = 0.01
//! [physics]
//! t_final = 5
//! [case]
//! kind = rotation_only
//! ```
//!
//! Keys inside `[section]` are read as `section.key`. Axis point counts
//! default to 1 (degenerate, a single node at the origin unless `min` is
//! given); resolved spatial axes default to `[0, 2π)` and velocity axes to
//! `[-6, 6)`. Lengths accept a `pi` factor such as `4pi` or `2*pi`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::cases::{CaseKind, CaseParams};
use crate::grid::{make_grid, Axis, AxisKind, AxisSpec, PhaseSpaceGrid};
use crate::interpolation::InterpMethod;
use crate::propagator::{Frame, Order, SchemeConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self { line: Some(line), key: Some(key.to_string()), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, key: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Steps between diagnostic rows.
    pub cadence: usize,
    /// Binary snapshots of `f` at each diagnostic row.
    pub snapshots: bool,
    /// Density CSV at each diagnostic row.
    pub density: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub axes: [AxisSpec; 6],
    pub scheme: SchemeConfig,
    pub t_final: f64,
    pub case: CaseParams,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Defaults for `kind` on a fully degenerate grid.
    pub fn new(kind: CaseKind) -> Self {
        Self {
            axes: Axis::ALL.map(AxisSpec::degenerate),
            scheme: SchemeConfig {
                frame: Frame::Rotating,
                order: Order::Strang,
                interp: InterpMethod::Trig,
                h: 0.01,
                omega_c: 1.0,
                merge: true,
            },
            t_final: 1.0,
            case: CaseParams::new(kind),
            output: OutputConfig { directory: PathBuf::from("out"), cadence: 1, snapshots: false, density: false },
        }
    }

    pub fn grid(&self) -> Result<PhaseSpaceGrid, ConfigError> {
        make_grid(self.axes).map_err(|e| ConfigError::global(format!("grid: {e}")))
    }

    pub fn with_axis(mut self, axis: Axis, n: usize, min: f64, length: f64) -> Self {
        self.axes[axis.index()] = AxisSpec::new(axis, n, min, length);
        self
    }

    /// Number of steps `t_final / h`, which must be a whole number.
    pub fn n_steps(&self) -> Result<usize, ConfigError> {
        steps_for(self.t_final, self.scheme.h)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let h = self.scheme.h;
        if !(h > 0.0) || !h.is_finite() {
            return Err(ConfigError::global(format!("scheme.h must be positive, got {h}")));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(ConfigError::global(format!("physics.t_final must be non-negative, got {}", self.t_final)));
        }
        self.n_steps()?;
        if self.output.cadence == 0 {
            return Err(ConfigError::global("output.cadence must be at least 1"));
        }
        if let InterpMethod::Lagrange { q } = self.scheme.interp {
            if q < 2 {
                return Err(ConfigError::global(format!("scheme.q must be at least 2, got {q}")));
            }
        }
        let c = &self.case;
        if !(c.epsilon >= 0.0) {
            return Err(ConfigError::global("case.epsilon must be non-negative"));
        }
        if c.m_max < 1 {
            return Err(ConfigError::global("case.m_max must be at least 1"));
        }
        if !self.scheme.omega_c.is_finite() {
            return Err(ConfigError::global("physics.omega_c must be finite"));
        }
        self.grid()?;
        Ok(())
    }
}

pub fn steps_for(t_final: f64, h: f64) -> Result<usize, ConfigError> {
    let ratio = t_final / h;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(ConfigError::global(format!(
            "time step h = {h} does not divide t_final = {t_final} into whole steps"
        )));
    }
    Ok(n as usize)
}

fn default_axis(axis: Axis) -> AxisSpec {
    match axis.kind() {
        AxisKind::Spatial => AxisSpec::new(axis, 1, 0.0, 2.0 * PI),
        AxisKind::Velocity => AxisSpec::new(axis, 1, -6.0, 12.0),
    }
}

struct Entry {
    line: usize,
    value: String,
}

/// Accepts `2.5`, `pi`, `4pi`, `4*pi`, `-0.5pi`.
fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().ok()?,
        };
        return Some(factor * PI);
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct Reader {
    entries: BTreeMap<String, Entry>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn real(&mut self, key: &str, target: &mut f64) -> Result<(), ConfigError> {
        if let Some(e) = self.take(key) {
            *target = parse_real(&e.value)
                .ok_or_else(|| ConfigError::at(e.line, key, format!("expected a real number such as 0.5 or 4pi, got `{}`", e.value)))?;
        }
        Ok(())
    }

    fn count(&mut self, key: &str, target: &mut usize) -> Result<(), ConfigError> {
        if let Some(e) = self.take(key) {
            *target = e
                .value
                .parse::<usize>()
                .map_err(|_| ConfigError::at(e.line, key, format!("expected a non-negative integer, got `{}`", e.value)))?;
        }
        Ok(())
    }

    fn flag(&mut self, key: &str, target: &mut bool) -> Result<(), ConfigError> {
        if let Some(e) = self.take(key) {
            *target = match e.value.as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => return Err(ConfigError::at(e.line, key, format!("expected true or false, got `{other}`"))),
            };
        }
        Ok(())
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)], target: &mut T) -> Result<(), ConfigError> {
        if let Some(e) = self.take(key) {
            *target = options.iter().find(|(name, _)| *name == e.value).map(|(_, v)| *v).ok_or_else(|| {
                let allowed: Vec<_> = options.iter().map(|(n, _)| *n).collect();
                ConfigError::at(e.line, key, format!("`{}` is not one of {{{}}}", e.value, allowed.join(", ")))
            })?;
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::global(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError { line: Some(line), key: None, message: "expected `[section]`".into() })?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| ConfigError {
            line: Some(line),
            key: None,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
        if let Some(prev) = entries.get(&key) {
            return Err(ConfigError::at(line, &key, format!("duplicate key, first set on line {}", prev.line)));
        }
        entries.insert(key, Entry { line, value: v.trim().to_string() });
    }

    let mut r = Reader { entries };
    let kind_entry = r.take("case.kind");
    let kind = match &kind_entry {
        None => return Err(ConfigError::global("missing `case.kind`")),
        Some(e) => CaseKind::from_name(&e.value).ok_or_else(|| {
            let allowed: Vec<_> = CaseKind::ALL.iter().map(|c| c.name()).collect();
            ConfigError::at(e.line, "case.kind", format!("`{}` is not one of {{{}}}", e.value, allowed.join(", ")))
        })?,
    };
    let mut cfg = RunConfig::new(kind);

    for axis in Axis::ALL {
        let spec = &mut cfg.axes[axis.index()];
        let label = axis.label();
        let mut n = 1;
        r.count(&format!("grid.{label}"), &mut n)?;
        let mut full = default_axis(axis);
        if n == 1 {
            full = AxisSpec::degenerate(axis);
        }
        full.n_points = n;
        r.real(&format!("grid.{label}.min"), &mut full.min)?;
        r.real(&format!("grid.{label}.length"), &mut full.length)?;
        *spec = full;
    }

    let s = &mut cfg.scheme;
    r.choice("scheme.frame", &[("physical", Frame::Physical), ("rotating", Frame::Rotating)], &mut s.frame)?;
    r.choice("scheme.order", &[("strang", Order::Strang), ("fourth", Order::Fourth)], &mut s.order)?;
    let mut interp = "trig";
    r.choice("scheme.interp", &[("trig", "trig"), ("lagrange", "lagrange")], &mut interp)?;
    let mut q = 6;
    r.count("scheme.q", &mut q)?;
    s.interp = if interp == "trig" { InterpMethod::Trig } else { InterpMethod::Lagrange { q } };
    r.real("scheme.h", &mut s.h)?;
    r.flag("scheme.merge", &mut s.merge)?;
    r.real("physics.omega_c", &mut s.omega_c)?;
    r.real("physics.t_final", &mut cfg.t_final)?;

    let c = &mut cfg.case;
    r.real("case.epsilon", &mut c.epsilon)?;
    if let Some(e) = r.take("case.e0") {
        let parts: Vec<_> = e.value.split(',').map(parse_real).collect();
        c.e0 = match parts.as_slice() {
            [Some(a), Some(b), Some(z)] => [*a, *b, *z],
            _ => return Err(ConfigError::at(e.line, "case.e0", format!("expected three reals `ex, ey, ez`, got `{}`", e.value))),
        };
    }
    r.real("case.alpha", &mut c.alpha)?;
    let (mut m_max, mut p_max) = (c.m_max as usize, c.p_max as usize);
    r.count("case.m_max", &mut m_max)?;
    r.count("case.p_max", &mut p_max)?;
    c.m_max = m_max as u32;
    c.p_max = p_max as u32;
    r.real("case.kappa_n", &mut c.kappa_n)?;
    r.real("case.kappa_t", &mut c.kappa_t)?;

    let o = &mut cfg.output;
    if let Some(e) = r.take("output.directory") {
        o.directory = PathBuf::from(e.value);
    }
    r.count("output.cadence", &mut o.cadence)?;
    r.flag("output.snapshots", &mut o.snapshots)?;
    r.flag("output.density", &mut o.density)?;

    if let Some((key, e)) = r.entries.iter().next() {
        return Err(ConfigError::at(e.line, key, "unknown key"));
    }
    cfg.validate()?;
    Ok(cfg)
}
