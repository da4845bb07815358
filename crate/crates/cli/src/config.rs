//! Flat `key = value` configuration with `--set` overrides.
//!
//! Three key families share one namespace: model parameters (`m`, `rho`, ...),
//! experiment settings (`decay.t_max`, ...) and tolerances (`tol.*`). Every
//! value is a finite number.

use std::collections::BTreeMap;

use polaron_core::params::PARAM_KEYS;
use polaron_core::{make_params, ModelParams, ParamMap};

use crate::error::{CliError, CliResult};

/// A documented setting. `None` defaults are derived from the model
/// parameters at run time.
#[derive(Debug, Clone, Copy)]
pub struct Setting {
    pub key: &'static str,
    pub default: Option<f64>,
    pub doc: &'static str,
}

const fn setting(key: &'static str, default: Option<f64>, doc: &'static str) -> Setting {
    Setting { key, default, doc }
}

pub const SETTINGS: &[Setting] = &[
    setting("seed", Some(0.0), "seed for sampled amplitudes in validate"),
    setting("grid.points", Some(401.0), "frequency samples written by spectrum"),
    setting(
        "grid.w_max",
        None,
        "top of the spectrum grid; default min(4 Omega, omega_max)",
    ),
    setting("modes.count", None, "roots solved by modes; default n_modes"),
    setting(
        "oracle.aux",
        Some(12.0),
        "auxiliary oscillators condensing the truncated string tail; 0 for the literal forms",
    ),
    setting("fluct.w_max", None, "highest root in the mode sum; default 20 Omega"),
    setting("profile.points", Some(40.0), "geometric z samples"),
    setting("profile.z_min", None, "smallest |z|; default half the fit window start"),
    setting("profile.z_max", None, "largest |z|; default the fit window end"),
    setting("decay.x0", Some(1.0), "initial particle displacement"),
    setting("decay.v0", Some(0.0), "initial particle velocity"),
    setting("decay.t_max", None, "run length; default 0.9 L / (2 s)"),
    setting("decay.dz", None, "grid spacing; default s / (40 Omega)"),
    setting("decay.cfl", Some(0.5), "time step as a fraction of dz / s"),
    setting("decay.record_every", Some(10.0), "trace row stride in steps"),
    setting(
        "decay.snapshots",
        Some(4.0),
        "field snapshots, evenly spaced up to t_max",
    ),
    setting(
        "decay.margin",
        None,
        "distance kept from the wave front in the retarded check; default 2 pi s / Omega",
    ),
    setting("counting.bins", Some(20.0), "histogram bins for the mode-count check"),
    setting(
        "occupation.n",
        Some(0.0),
        "occupation of one excited group in spectrum; 0 keeps the ground state",
    ),
    setting("occupation.width", None, "width of the excited group; default Omega"),
    setting(
        "occupation.scan_lo",
        None,
        "first lower edge of the group; default Omega / 2",
    ),
    setting(
        "occupation.scan_hi",
        None,
        "last lower edge of the group; default 2 Omega",
    ),
    setting(
        "occupation.scan_points",
        Some(61.0),
        "lower edges scanned between scan_lo and scan_hi",
    ),
    setting("validate.fdt_length", Some(1000.0), "string length for the <x^2> check"),
    setting(
        "validate.weak_ratio",
        Some(0.01),
        "eta / (m Omega) for the energy check",
    ),
    setting(
        "validate.cutoff_ratio",
        Some(100.0),
        "omega_max / Omega for the energy check",
    ),
    setting("validate.gamma", Some(0.05), "rho s / m for the damping check"),
    setting("validate.decay_time", Some(60.0), "run length of the damping check"),
    setting(
        "validate.profile_modes",
        Some(128.0),
        "modes in the profile summation check",
    ),
];

pub const TOLERANCES: &[Setting] = &[
    setting(
        "tol.roots",
        Some(1e-8),
        "secular roots vs generalized eigenvalues, relative",
    ),
    setting("tol.normalization", Some(1e-8), "mode orthonormality residual"),
    setting("tol.sum_rule", Some(1e-8), "integrated excess vs 1"),
    setting(
        "tol.counting",
        Some(3.0),
        "root histogram vs density, in binning standard errors",
    ),
    setting(
        "tol.energy",
        Some(0.02),
        "ground energy quadrature vs weak-coupling closed form, relative",
    ),
    setting(
        "tol.fdt",
        Some(1e-4),
        "<x^2> mode sum vs fluctuation-dissipation integral, relative",
    ),
    setting("tol.gamma", Some(0.02), "fitted decay rate vs rho s / m, relative"),
    setting(
        "tol.profile",
        Some(1e-6),
        "closed-form string profile vs Fourier sum, relative",
    ),
];

fn lookup(key: &str) -> Option<&'static Setting> {
    SETTINGS.iter().chain(TOLERANCES).find(|s| s.key == key)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    params: ParamMap,
    settings: BTreeMap<String, f64>,
}

fn parse_value(key: &str, raw: &str, line: Option<usize>) -> CliResult<f64> {
    let err = |message: String| CliError::Config {
        line,
        key: key.to_string(),
        message,
    };
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| err(format!("`{}` is not a number", raw.trim())))?;
    if !v.is_finite() {
        return Err(err("value is not finite".into()));
    }
    Ok(v)
}

impl Config {
    /// Parses config text. Later duplicates of a key are rejected.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Config::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| CliError::Config {
                line: Some(line),
                key: body.to_string(),
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(CliError::Config {
                    line: Some(line),
                    key: key.to_string(),
                    message: format!("already set on line {first}"),
                });
            }
            cfg.set_at(key, value, Some(line))?;
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> CliResult<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("`{assignment}` is not key=value")))?;
        self.set_at(key.trim(), value, None)
    }

    pub fn set(&mut self, key: &str, value: f64) -> CliResult<()> {
        self.set_at(key, &format!("{value:?}"), None)
    }

    fn set_at(&mut self, key: &str, value: &str, line: Option<usize>) -> CliResult<()> {
        let v = parse_value(key, value, line)?;
        if PARAM_KEYS.contains(&key) {
            // rho and damping_ratio are two spellings of one parameter
            match key {
                "rho" => self.params.remove("damping_ratio"),
                "damping_ratio" => self.params.remove("rho"),
                _ => None,
            };
            self.params.insert(key.to_string(), v);
        } else if lookup(key).is_some() {
            self.settings.insert(key.to_string(), v);
        } else {
            return Err(CliError::Config {
                line,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        Ok(())
    }

    pub fn is_known_key(key: &str) -> bool {
        PARAM_KEYS.contains(&key) || lookup(key).is_some()
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        make_params(&self.params).map_err(|e| CliError::config(param_key(&e), e.to_string()))
    }

    pub fn param_map(&self) -> &ParamMap {
        &self.params
    }

    /// Explicit value of a setting or tolerance, else its fixed default.
    pub fn get(&self, key: &str) -> Option<f64> {
        self.settings
            .get(key)
            .copied()
            .or_else(|| lookup(key).and_then(|s| s.default))
    }

    /// Setting with a run-time derived default.
    pub fn get_or(&self, key: &str, derived: f64) -> f64 {
        self.get(key).unwrap_or(derived)
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.get(&format!("tol.{name}")).expect("registered tolerance")
    }

    /// Integer setting, rejecting negative or fractional values.
    pub fn count(&self, key: &str, derived: usize) -> CliResult<usize> {
        let v = self.get_or(key, derived as f64);
        if v < 0.0 || v.fract() != 0.0 {
            return Err(CliError::config(key, format!("{v} is not a non-negative integer")));
        }
        Ok(v as usize)
    }

    /// Every tolerance with its effective value.
    pub fn tolerances(&self) -> BTreeMap<String, f64> {
        TOLERANCES
            .iter()
            .map(|t| (t.key.to_string(), self.get(t.key).expect("tolerances have defaults")))
            .collect()
    }

    /// Explicitly set experiment settings.
    pub fn settings(&self) -> &BTreeMap<String, f64> {
        &self.settings
    }
}

fn param_key(e: &polaron_core::Error) -> String {
    use polaron_core::Error as E;
    match e {
        E::NonPositiveParameter(k) | E::NegativeParameter(k) | E::NonFinite(k) => k.to_string(),
        E::UnknownParameter(k) => k.clone(),
        E::CutoffBelowOmega { .. } => "omega_max".into(),
        _ => "params".into(),
    }
}
