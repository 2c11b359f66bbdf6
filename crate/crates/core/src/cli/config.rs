//! `key = value` run configuration with dotted keys and `#` comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nozzle::{Centerline, Profile};
use crate::problem::ProblemSpec;
use crate::solver::{LinearSolverKind, NewtonConfig};

/// Every key the parser accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "mode",
    "gas.gamma",
    "gas.delta0",
    "nozzle.kind",
    "nozzle.dim",
    "nozzle.radius",
    "nozzle.r_minus",
    "nozzle.r_plus",
    "nozzle.length",
    "nozzle.depth",
    "nozzle.width",
    "nozzle.centerline",
    "nozzle.shift",
    "nozzle.shift_length",
    "domain.L",
    "domain.L_schedule",
    "mesh.N_t",
    "mesh.N_a",
    "flux.m0",
    "flux.q_star",
    "sweep.m0",
    "critical.delta0_schedule",
    "critical.bisections",
    "solver.rtol",
    "solver.atol",
    "solver.max_iter",
    "solver.linear",
    "solver.cg_rtol",
    "solver.flux_ramp_steps",
    "probe.offsets",
    "output.dir",
    "output.vtk",
    "output.snapshot",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Sweep,
    CriticalFlux,
    Uniqueness,
    ValidateCylinder,
    FarField,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "solve" => Mode::Solve,
            "sweep" => Mode::Sweep,
            "critical-flux" => Mode::CriticalFlux,
            "uniqueness" => Mode::Uniqueness,
            "validate-cylinder" => Mode::ValidateCylinder,
            "far-field" => Mode::FarField,
            other => {
                return Err(format!(
                    "unknown mode `{other}` (expected solve, sweep, critical-flux, \
                     uniqueness, validate-cylinder or far-field)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// Source line; zero for command-line overrides.
    line: usize,
}

/// Raw key/value pairs with their source lines.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = RawConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    key: content.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            out.insert(key.trim(), value.trim(), line)?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        if value.is_empty() {
            return Err(Error::Config {
                line,
                key: key.to_string(),
                message: "empty value".into(),
            });
        }
        if let Some(prev) = self.entries.get(key) {
            if line != 0 {
                return Err(Error::Config {
                    line,
                    key: key.to_string(),
                    message: format!("duplicate key (first set on line {})", prev.line),
                });
            }
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
        Ok(())
    }

    /// Applies a `key=value` override on top of the file contents.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(Error::Config {
                line: 0,
                key: assignment.to_string(),
                message: "override must look like key=value".into(),
            });
        };
        self.insert(key.trim(), value.trim(), 0)
    }

    /// SHA-256 of the effective configuration in canonical `key=value` form.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, e) in &self.entries {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(e.value.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.line_of(key),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.error(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| self.error(key, "required key is missing"))
    }

    fn positive(&self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = match default {
            Some(d) => self.get(key)?.unwrap_or(d),
            None => self.require(key)?,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(self.error(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| self.error(key, format!("cannot parse `{}`: {e}", s.trim())))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: ProblemSpec,
    pub m0: f64,
    /// Target speed for `validate-cylinder`.
    pub q_star: Option<f64>,
    pub length_schedule: Option<Vec<f64>>,
    pub sweep_fluxes: Vec<f64>,
    pub delta0_schedule: Vec<f64>,
    pub bisections: usize,
    pub newton: NewtonConfig,
    pub probe_offsets: Vec<f64>,
    pub output_dir: PathBuf,
    pub write_vtk: bool,
    pub write_snapshot: bool,
    pub hash: String,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mode: Mode = raw.require("mode")?;
        let gamma: f64 = raw.require("gas.gamma")?;
        if !(gamma > 1.0) {
            return Err(raw.error("gas.gamma", format!("must exceed 1, got {gamma}")));
        }
        let delta0 = raw.positive("gas.delta0", Some(ProblemSpec::DEFAULT_DELTA0))?;
        if delta0 >= 0.25 {
            return Err(raw.error("gas.delta0", "must lie in (0, 0.25)"));
        }
        let validate = mode == Mode::ValidateCylinder;
        let profile = if validate {
            let dim: usize = raw.get("nozzle.dim")?.unwrap_or(2);
            let radius = raw.positive("nozzle.radius", Some(0.5))?;
            Profile::cylinder(dim, radius).map_err(|e| raw.error("nozzle.radius", e.to_string()))?
        } else {
            parse_profile(raw)?
        };
        let (default_l, default_nt, default_na) = if validate {
            (Some(4.0), Some(16), Some(128))
        } else {
            (None, None, None)
        };
        let length_schedule = raw.list("domain.L_schedule")?;
        if let Some(s) = &length_schedule {
            if s.is_empty() || s[0] <= 0.0 || s.windows(2).any(|w| w[1] <= w[0]) {
                return Err(raw.error(
                    "domain.L_schedule",
                    "must be positive and strictly increasing",
                ));
            }
        }
        let half_length = match (&length_schedule, raw.get::<f64>("domain.L")?) {
            (_, Some(l)) => raw.positive("domain.L", Some(l))?,
            (Some(s), None) => s[0],
            (None, None) => raw.positive("domain.L", default_l)?,
        };
        let n_t = count(raw, "mesh.N_t", default_nt)?;
        let n_a = count(raw, "mesh.N_a", default_na)?;
        let problem = ProblemSpec {
            gamma,
            delta0,
            profile,
            half_length,
            transverse_cells: n_t,
            axial_cells: n_a,
        };

        let q_star = if validate {
            let q = raw.positive("flux.q_star", Some(0.5))?;
            if q >= 1.0 {
                return Err(raw.error("flux.q_star", "must be subsonic (< 1)"));
            }
            Some(q)
        } else {
            None
        };
        let needs_m0 = matches!(mode, Mode::Solve | Mode::Uniqueness | Mode::FarField);
        let m0 = match raw.get::<f64>("flux.m0")? {
            Some(m) if m >= 0.0 && m.is_finite() => m,
            Some(m) => return Err(raw.error("flux.m0", format!("must be nonnegative, got {m}"))),
            None if needs_m0 => return Err(raw.error("flux.m0", "required key is missing")),
            None => 0.0,
        };
        let sweep_fluxes = match raw.list("sweep.m0")? {
            Some(v) => {
                if v.iter().any(|m| !(*m >= 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(
                        raw.error("sweep.m0", "must be nonnegative and strictly increasing")
                    );
                }
                v
            }
            None if mode == Mode::Sweep => {
                return Err(raw.error("sweep.m0", "required key is missing"))
            }
            None => Vec::new(),
        };
        let delta0_schedule = raw
            .list("critical.delta0_schedule")?
            .unwrap_or_else(|| crate::analysis::DEFAULT_DELTA0_SCHEDULE.to_vec());
        if delta0_schedule.is_empty()
            || delta0_schedule.iter().any(|d| !(*d > 0.0 && *d < 0.25))
            || delta0_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(raw.error(
                "critical.delta0_schedule",
                "must lie in (0, 0.25) and be strictly decreasing",
            ));
        }
        let bisections = raw.get("critical.bisections")?.unwrap_or(12);

        let defaults = NewtonConfig::default();
        let linear = match raw.raw("solver.linear") {
            None | Some("auto") => LinearSolverKind::Auto,
            Some("cg") => LinearSolverKind::ConjugateGradient,
            Some("direct") => LinearSolverKind::Direct,
            Some(other) => {
                return Err(raw.error(
                    "solver.linear",
                    format!("expected auto, cg or direct, got `{other}`"),
                ))
            }
        };
        let newton = NewtonConfig {
            rel_tol: raw.positive("solver.rtol", Some(defaults.rel_tol))?,
            abs_tol: raw.positive("solver.atol", Some(defaults.abs_tol))?,
            max_iterations: count(raw, "solver.max_iter", Some(defaults.max_iterations))?,
            cg_rel_tol: raw.positive("solver.cg_rtol", Some(defaults.cg_rel_tol))?,
            flux_ramp_steps: raw
                .get("solver.flux_ramp_steps")?
                .unwrap_or(defaults.flux_ramp_steps),
            linear,
            ..defaults
        };

        let probe_offsets = raw
            .list("probe.offsets")?
            .unwrap_or_else(|| vec![half_length / 8.0, half_length / 4.0]);
        if probe_offsets
            .iter()
            .any(|o| !(*o > 0.0 && *o < 2.0 * half_length))
        {
            return Err(raw.error("probe.offsets", "offsets must lie in (0, 2L)"));
        }

        Ok(RunConfig {
            mode,
            problem,
            m0,
            q_star,
            length_schedule,
            sweep_fluxes,
            delta0_schedule,
            bisections,
            newton,
            probe_offsets,
            output_dir: raw
                .raw("output.dir")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("nozzleflow-out")),
            write_vtk: raw.get("output.vtk")?.unwrap_or(true),
            write_snapshot: raw.get("output.snapshot")?.unwrap_or(true),
            hash: raw.hash(),
        })
    }
}

fn count(raw: &RawConfig, key: &str, default: Option<usize>) -> Result<usize> {
    let v: usize = match default {
        Some(d) => raw.get(key)?.unwrap_or(d),
        None => raw.require(key)?,
    };
    if v == 0 {
        return Err(raw.error(key, "must be at least 1"));
    }
    Ok(v)
}

fn parse_profile(raw: &RawConfig) -> Result<Profile> {
    let dim: usize = raw.get("nozzle.dim")?.unwrap_or(2);
    let kind: String = raw.require("nozzle.kind")?;
    let built = match kind.as_str() {
        "cylinder" => Profile::cylinder(dim, raw.positive("nozzle.radius", None)?),
        "tanh" => Profile::tanh_expansion(
            dim,
            raw.positive("nozzle.r_minus", None)?,
            raw.positive("nozzle.r_plus", None)?,
            raw.positive("nozzle.length", None)?,
        ),
        "gaussian_throat" => Profile::gaussian_throat(
            dim,
            raw.positive("nozzle.radius", None)?,
            raw.positive("nozzle.depth", None)?,
            raw.positive("nozzle.width", None)?,
        ),
        other => {
            return Err(raw.error(
                "nozzle.kind",
                format!("expected cylinder, tanh or gaussian_throat, got `{other}`"),
            ))
        }
    };
    let profile = built.map_err(|e| raw.error("nozzle.kind", e.to_string()))?;
    match raw.raw("nozzle.centerline") {
        None | Some("straight") => Ok(profile),
        Some("tanh_shift") => {
            let shift = raw
                .list("nozzle.shift")?
                .ok_or_else(|| raw.error("nozzle.shift", "required key is missing"))?;
            if shift.len() != dim - 1 {
                return Err(raw.error("nozzle.shift", format!("expected {} components", dim - 1)));
            }
            let mut s = [0.0; 2];
            s[..shift.len()].copy_from_slice(&shift);
            let length = raw.positive("nozzle.shift_length", None)?;
            profile
                .with_centerline(Centerline::TanhShift { shift: s, length })
                .map_err(|e| raw.error("nozzle.centerline", e.to_string()))
        }
        Some(other) => Err(raw.error(
            "nozzle.centerline",
            format!("expected straight or tanh_shift, got `{other}`"),
        )),
    }
}
