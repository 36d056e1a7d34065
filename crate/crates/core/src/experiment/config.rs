//! `key = value` scenario configuration.
//!
//! Every key is optional; an empty file describes the 220-site chain with
//! the `(0.75, 0.75)` block on sites 109-112, quenched from `v/w = 0.25`.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `scenario` | `spectrum` | `spectrum`, `lightcone`, `bipartite`, `ratio-sweep` or `reshuffle` |
//! | `n_cells` | 110 | unit cells, `2 n_cells` sites |
//! | `w` | 1.0 | intercell hopping |
//! | `region_enabled` | true | whether the potential block is present |
//! | `region_start`, `region_end` | 109, 112 | block sites, 1-based, inclusive |
//! | `u_re`, `u_im` | 0.75, 0.75 | block potential, `u_re - i u_im` on odd sites |
//! | `v_initial` | 0.25 | pre-quench `v/w` |
//! | `v_final` | 1.5 | post-quench `v/w` for `lightcone` and `bipartite` |
//! | `v_min`, `v_max`, `v_step` | per scenario | sweep grid for `spectrum` (0.1..2.0 by 0.01) and `ratio-sweep` (1.0..2.0 by 0.025) |
//! | `v_values` | 1.125, 1.5 | comma separated `v/w` values for `reshuffle` |
//! | `sides` | left, right | edge states to evolve |
//! | `t_max` | 500 | last sample time, units of `1/w` |
//! | `dt` | 0.5 | sample spacing |
//! | `t_sample` | 240 | sample time of the reflection ratio |
//! | `ep_tol` | 1e-6 | `max |Im E|` below which a grid point counts as real |
//! | `zero_mode_tol` | 1e-3 | largest `|E|` accepted for an edge-state pair |
//! | `threshold` | 0.5 | center classification band, sites |
//! | `condition_ceiling` | 1e10 | eigenvector condition beyond which evolution uses the propagator |
//! | `initial_embedded` | true | whether the pre-quench Hamiltonian carries the block |
//! | `output_dir` | `out` | where files are written |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::dynamics::{EdgeSide, DEFAULT_ZERO_MODE_TOL};
use crate::error::Error;
use crate::lattice::LatticeConfig;
use crate::observables::DEFAULT_SIDE_THRESHOLD;
use crate::spectral::{DEFAULT_CONDITION_CEILING, DEFAULT_EP_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Spectrum,
    Lightcone,
    Bipartite,
    RatioSweep,
    Reshuffle,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Spectrum,
        ScenarioKind::Lightcone,
        ScenarioKind::Bipartite,
        ScenarioKind::RatioSweep,
        ScenarioKind::Reshuffle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Spectrum => "spectrum",
            ScenarioKind::Lightcone => "lightcone",
            ScenarioKind::Bipartite => "bipartite",
            ScenarioKind::RatioSweep => "ratio-sweep",
            ScenarioKind::Reshuffle => "reshuffle",
        }
    }

    fn default_grid(&self) -> (f64, f64, f64) {
        match self {
            ScenarioKind::RatioSweep => (1.0, 2.0, 0.025),
            _ => (0.1, 2.0, 0.01),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown scenario `{s}`, expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// Parse or validation failure. `origin` is `line N` for file input or
/// `--set` for overrides.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{origin}: expected `key = value`, got `{text}`")]
    Syntax { origin: String, text: String },

    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: String, key: String },

    #[error("{origin}: key `{key}` given twice")]
    Duplicate { origin: String, key: String },

    #[error("{origin}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        origin: String,
        key: String,
        reason: String,
    },

    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },
}

impl ConfigError {
    /// The key the error is about, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { key, .. }
            | ConfigError::Duplicate { key, .. }
            | ConfigError::InvalidValue { key, .. }
            | ConfigError::Validation { key, .. } => Some(key),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub n_cells: usize,
    pub w: f64,
    pub region_enabled: bool,
    pub region_start: usize,
    pub region_end: usize,
    pub u_re: f64,
    pub u_im: f64,
    pub v_initial: f64,
    pub v_final: f64,
    /// Sweep grid; `None` takes the scenario default.
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub v_step: Option<f64>,
    pub v_values: Vec<f64>,
    pub sides: Vec<EdgeSide>,
    pub t_max: f64,
    pub dt: f64,
    pub t_sample: f64,
    pub ep_tol: f64,
    pub zero_mode_tol: f64,
    pub threshold: f64,
    pub condition_ceiling: f64,
    pub initial_embedded: bool,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Spectrum,
            n_cells: 110,
            w: 1.0,
            region_enabled: true,
            region_start: 109,
            region_end: 112,
            u_re: 0.75,
            u_im: 0.75,
            v_initial: 0.25,
            v_final: 1.5,
            v_min: None,
            v_max: None,
            v_step: None,
            v_values: vec![1.125, 1.5],
            sides: vec![EdgeSide::Left, EdgeSide::Right],
            t_max: 500.0,
            dt: 0.5,
            t_sample: 240.0,
            ep_tol: DEFAULT_EP_TOL,
            zero_mode_tol: DEFAULT_ZERO_MODE_TOL,
            threshold: DEFAULT_SIDE_THRESHOLD,
            condition_ceiling: DEFAULT_CONDITION_CEILING,
            initial_embedded: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.parse()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{s}` is not `true` or `false`")),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',').map(|p| item(p.trim())).collect()
}

fn parse_side(s: &str) -> Result<EdgeSide, String> {
    match s {
        "left" => Ok(EdgeSide::Left),
        "right" => Ok(EdgeSide::Right),
        _ => Err(format!("`{s}` is not `left` or `right`")),
    }
}

impl ScenarioConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::InvalidValue {
            origin: origin.to_string(),
            key: key.to_string(),
            reason,
        };
        match key {
            "scenario" => self.scenario = value.parse().map_err(bad)?,
            "n_cells" => self.n_cells = parse_count(value).map_err(bad)?,
            "w" => self.w = parse_real(value).map_err(bad)?,
            "region_enabled" => self.region_enabled = parse_bool(value).map_err(bad)?,
            "region_start" => self.region_start = parse_count(value).map_err(bad)?,
            "region_end" => self.region_end = parse_count(value).map_err(bad)?,
            "u_re" => self.u_re = parse_real(value).map_err(bad)?,
            "u_im" => self.u_im = parse_real(value).map_err(bad)?,
            "v_initial" => self.v_initial = parse_real(value).map_err(bad)?,
            "v_final" => self.v_final = parse_real(value).map_err(bad)?,
            "v_min" => self.v_min = Some(parse_real(value).map_err(bad)?),
            "v_max" => self.v_max = Some(parse_real(value).map_err(bad)?),
            "v_step" => self.v_step = Some(parse_real(value).map_err(bad)?),
            "v_values" => self.v_values = parse_list(value, parse_real).map_err(bad)?,
            "sides" => self.sides = parse_list(value, parse_side).map_err(bad)?,
            "t_max" => self.t_max = parse_real(value).map_err(bad)?,
            "dt" => self.dt = parse_real(value).map_err(bad)?,
            "t_sample" => self.t_sample = parse_real(value).map_err(bad)?,
            "ep_tol" => self.ep_tol = parse_real(value).map_err(bad)?,
            "zero_mode_tol" => self.zero_mode_tol = parse_real(value).map_err(bad)?,
            "threshold" => self.threshold = parse_real(value).map_err(bad)?,
            "condition_ceiling" => self.condition_ceiling = parse_real(value).map_err(bad)?,
            "initial_embedded" => self.initial_embedded = parse_bool(value).map_err(bad)?,
            "output_dir" => {
                if value.is_empty() {
                    return Err(bad("empty path".into()));
                }
                self.output_dir = PathBuf::from(value)
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    origin: origin.to_string(),
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// The lattice template; its `v` is `v_initial * w` and is overridden per
    /// run.
    pub fn lattice(&self) -> LatticeConfig {
        let base = LatticeConfig::ssh(self.n_cells, self.v_initial * self.w, self.w);
        if self.region_enabled {
            base.with_region(self.region_start, self.region_end, self.u_re, self.u_im)
        } else {
            base
        }
    }

    /// `(v_min, v_max, v_step)` with scenario defaults filled in.
    pub fn sweep_range(&self) -> (f64, f64, f64) {
        let (lo, hi, step) = self.scenario.default_grid();
        (
            self.v_min.unwrap_or(lo),
            self.v_max.unwrap_or(hi),
            self.v_step.unwrap_or(step),
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |key: &str, reason: String| {
            Err(ConfigError::Validation {
                key: key.to_string(),
                reason,
            })
        };
        let lattice = self.lattice();
        if let Err(Error::InvalidConfig { field, reason }) = lattice.validate() {
            return fail(field, reason);
        }
        for (key, v) in [("v_initial", self.v_initial), ("v_final", self.v_final)] {
            if v < 0.0 {
                return fail(key, format!("must be >= 0, got {v}"));
            }
        }
        let (lo, hi, step) = self.sweep_range();
        if lo < 0.0 {
            return fail("v_min", format!("must be >= 0, got {lo}"));
        }
        if hi < lo {
            return fail("v_max", format!("{hi} is below v_min {lo}"));
        }
        if step <= 0.0 {
            return fail("v_step", format!("must be > 0, got {step}"));
        }
        if self.v_values.is_empty() || self.v_values.iter().any(|&v| v < 0.0) {
            return fail("v_values", "needs at least one value, all >= 0".into());
        }
        if self.v_values.windows(2).any(|p| p[1] <= p[0]) {
            return fail("v_values", "must be strictly increasing".into());
        }
        if self.sides.is_empty() {
            return fail("sides", "needs at least one side".into());
        }
        if (1..self.sides.len()).any(|i| self.sides[..i].contains(&self.sides[i])) {
            return fail("sides", "lists a side twice".into());
        }
        if self.dt <= 0.0 {
            return fail("dt", format!("must be > 0, got {}", self.dt));
        }
        if self.t_max < 0.0 {
            return fail("t_max", format!("must be >= 0, got {}", self.t_max));
        }
        let k = self.t_sample / self.dt;
        if self.t_sample < 0.0 || (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return fail(
                "t_sample",
                format!(
                    "{} is not a non-negative multiple of dt {}",
                    self.t_sample, self.dt
                ),
            );
        }
        if self.scenario != ScenarioKind::RatioSweep && self.t_sample > self.t_max {
            return fail(
                "t_sample",
                format!("{} exceeds t_max {}", self.t_sample, self.t_max),
            );
        }
        for (key, v) in [
            ("ep_tol", self.ep_tol),
            ("zero_mode_tol", self.zero_mode_tol),
            ("threshold", self.threshold),
            ("condition_ceiling", self.condition_ceiling),
        ] {
            if v <= 0.0 {
                return fail(key, format!("must be > 0, got {v}"));
            }
        }
        if lattice.dim() < 4 {
            return fail(
                "n_cells",
                "needs at least 2 cells for an edge-state pair".into(),
            );
        }
        Ok(())
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let origin = format!("line {}", n + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                origin,
                text: line.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                origin,
                text: line.to_string(),
            });
        }
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::Duplicate {
                origin,
                key: key.to_string(),
            });
        }
        cfg.set(key, value, &origin)?;
        seen.push(key.to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_flagship() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        let lattice = cfg.lattice();
        assert_eq!(lattice.dim(), 220);
        assert_eq!(lattice, LatticeConfig::flagship());
        assert_eq!(parse_config("# nothing\n\n   \n").unwrap(), cfg);
    }

    #[test]
    fn single_override() {
        let cfg = parse_config("u_im = 0.25\n").unwrap();
        assert_eq!(
            cfg,
            ScenarioConfig {
                u_im: 0.25,
                ..ScenarioConfig::default()
            }
        );
    }

    #[test]
    fn region_out_of_bounds_names_key() {
        let err = parse_config("region_start = 300").unwrap_err();
        assert_eq!(err.key(), Some("region_start"));
        assert!(err.to_string().contains("region_start"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("n_cells = 10\n\nbogus = 1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                origin: "line 3".into(),
                key: "bogus".into()
            }
        );
        let err = parse_config("# c\nw: 1\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2:"), "{err}");
        let err = parse_config("dt = fast").unwrap_err();
        assert_eq!(err.key(), Some("dt"));
        assert!(err.to_string().starts_with("line 1:"));
        let err = parse_config("w = 1\nw = 2").unwrap_err();
        assert!(matches!(err, ConfigError::Duplicate { .. }));
        assert!(parse_config("u_re = inf").is_err());
    }

    #[test]
    fn lists_and_flags() {
        let cfg = parse_config(
            "scenario = reshuffle # trailing comment\nv_values = 1.0, 1.25,1.5\nsides = right\nregion_enabled = false\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Reshuffle);
        assert_eq!(cfg.v_values, vec![1.0, 1.25, 1.5]);
        assert_eq!(cfg.sides, vec![EdgeSide::Right]);
        assert_eq!(cfg.lattice().region, None);
        assert!(parse_config("sides = left, left").is_err());
        assert!(parse_config("sides = up").is_err());
        assert!(parse_config("v_values = 1.5, 1.0").is_err());
    }

    #[test]
    fn sweep_defaults_follow_scenario() {
        let mut cfg = ScenarioConfig::default();
        assert_eq!(cfg.sweep_range(), (0.1, 2.0, 0.01));
        cfg.scenario = ScenarioKind::RatioSweep;
        assert_eq!(cfg.sweep_range(), (1.0, 2.0, 0.025));
        cfg.v_step = Some(0.1);
        assert_eq!(cfg.sweep_range(), (1.0, 2.0, 0.1));
    }

    #[test]
    fn time_checks() {
        assert_eq!(
            parse_config("t_sample = 240.25").unwrap_err().key(),
            Some("t_sample")
        );
        assert_eq!(
            parse_config("t_max = 100").unwrap_err().key(),
            Some("t_sample")
        );
        assert!(parse_config("scenario = ratio-sweep\nt_max = 100").is_ok());
        assert_eq!(parse_config("dt = 0").unwrap_err().key(), Some("dt"));
        assert_eq!(
            parse_config("n_cells = 1\nregion_enabled = false")
                .unwrap_err()
                .key(),
            Some("n_cells")
        );
    }
}
