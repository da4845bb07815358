//! Physical parameters of the particle–string system and the unit convention
//! used to report them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw key/value parameter map, as read from a config file.
pub type ParamMap = BTreeMap<String, f64>;

/// Keys understood by [`make_params`].
pub const PARAM_KEYS: [&str; 10] = [
    "m",
    "rho",
    "s",
    "Omega",
    "L",
    "hbar",
    "T",
    "omega_max",
    "n_modes",
    "damping_ratio",
];

/// Validated physical constants.
///
/// The string friction coefficient `eta = 2 rho s` is always derived and never
/// stored. Construct through [`make_params`] or [`ModelParams::new`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    m: f64,
    rho: f64,
    s: f64,
    omega: f64,
    length: f64,
    hbar: f64,
    temperature: f64,
    omega_max: f64,
    n_modes: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    m: f64,
    rho: f64,
    s: f64,
    #[serde(rename = "Omega")]
    omega: f64,
    #[serde(rename = "L")]
    length: f64,
    hbar: f64,
    #[serde(rename = "T")]
    temperature: f64,
    omega_max: f64,
    n_modes: usize,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(
            r.m,
            r.rho,
            r.s,
            r.omega,
            r.length,
            r.hbar,
            r.temperature,
            Some(r.omega_max),
            r.n_modes,
        )
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            m: p.m,
            rho: p.rho,
            s: p.s,
            omega: p.omega,
            length: p.length,
            hbar: p.hbar,
            temperature: p.temperature,
            omega_max: p.omega_max,
            n_modes: p.n_modes,
        }
    }
}

impl Default for ModelParams {
    /// `hbar = m = Omega = 1`, `rho = 0.5`, `s = 1` (so `eta/(m Omega) = 1`),
    /// `L = 100`, 256 string modes, ground state.
    fn default() -> Self {
        make_params(&ParamMap::new()).expect("defaults are valid")
    }
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: f64,
        rho: f64,
        s: f64,
        omega: f64,
        length: f64,
        hbar: f64,
        temperature: f64,
        omega_max: Option<f64>,
        n_modes: usize,
    ) -> Result<Self> {
        let finite = [
            ("m", m),
            ("rho", rho),
            ("s", s),
            ("Omega", omega),
            ("L", length),
            ("hbar", hbar),
            ("T", temperature),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        for (name, v) in [("m", m), ("rho", rho), ("s", s), ("L", length), ("hbar", hbar)] {
            if v <= 0.0 {
                return Err(Error::NonPositiveParameter(name));
            }
        }
        if omega < 0.0 {
            return Err(Error::NegativeParameter("Omega"));
        }
        if temperature < 0.0 {
            return Err(Error::NegativeParameter("T"));
        }
        if n_modes == 0 {
            return Err(Error::NonPositiveParameter("n_modes"));
        }
        let omega_max = omega_max.unwrap_or_else(|| default_cutoff(s, length, n_modes));
        if !omega_max.is_finite() {
            return Err(Error::NonFinite("omega_max"));
        }
        if omega_max <= omega {
            return Err(Error::CutoffBelowOmega { omega_max, omega });
        }
        Ok(ModelParams {
            m,
            rho,
            s,
            omega,
            length,
            hbar,
            temperature,
            omega_max,
            n_modes,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    /// Well frequency.
    pub fn omega(&self) -> f64 {
        self.omega
    }
    /// String length.
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Radiation friction coefficient `2 rho s`.
    pub fn eta(&self) -> f64 {
        2.0 * self.rho * self.s
    }

    /// Free-string frequency `2 pi n s / L`.
    pub fn omega_n(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 * self.s / self.length
    }

    /// Spacing of the free-string spectrum, `2 pi s / L`.
    pub fn mode_spacing(&self) -> f64 {
        2.0 * PI * self.s / self.length
    }

    /// Mass ratio `m / (rho L)` between the particle and the whole string.
    pub fn mass_ratio(&self) -> f64 {
        self.m / (self.rho * self.length)
    }

    /// Free-string density of states `L / (2 pi s)`.
    pub fn nu0(&self) -> f64 {
        self.length / (2.0 * PI * self.s)
    }

    /// Cutoff wave vector `omega_max / s`.
    pub fn q_max(&self) -> f64 {
        self.omega_max / self.s
    }

    pub fn with_temperature(mut self, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFinite("T"));
        }
        if t < 0.0 {
            return Err(Error::NegativeParameter("T"));
        }
        self.temperature = t;
        Ok(self)
    }

    /// Flat parameter map that [`make_params`] turns back into `self`.
    pub fn to_map(&self) -> ParamMap {
        let mut map = ParamMap::new();
        map.insert("m".into(), self.m);
        map.insert("rho".into(), self.rho);
        map.insert("s".into(), self.s);
        map.insert("Omega".into(), self.omega);
        map.insert("L".into(), self.length);
        map.insert("hbar".into(), self.hbar);
        map.insert("T".into(), self.temperature);
        map.insert("omega_max".into(), self.omega_max);
        map.insert("n_modes".into(), self.n_modes as f64);
        map
    }

    /// `key = value` lines in the config file syntax.
    pub fn to_config_string(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = {v:?}\n")).collect()
    }
}

fn default_cutoff(s: f64, length: f64, n_modes: usize) -> f64 {
    s * (2.0 * PI * n_modes as f64 / length) * 0.5
}

/// Builds validated parameters from a raw map, filling unspecified keys with
/// the dimensionless defaults.
///
/// `damping_ratio`, when present, fixes `rho` through `eta/(m Omega)`.
pub fn make_params(raw: &ParamMap) -> Result<ModelParams> {
    for (k, v) in raw {
        if !PARAM_KEYS.contains(&k.as_str()) {
            return Err(Error::UnknownParameter(k.clone()));
        }
        if !v.is_finite() {
            let name = PARAM_KEYS.iter().find(|p| **p == k.as_str()).copied();
            return Err(Error::NonFinite(name.unwrap_or("?")));
        }
    }
    let get = |k: &str, default: f64| raw.get(k).copied().unwrap_or(default);

    let m = get("m", 1.0);
    let s = get("s", 1.0);
    let omega = get("Omega", 1.0);
    let rho = match raw.get("damping_ratio") {
        Some(&ratio) => {
            if ratio <= 0.0 {
                return Err(Error::NonPositiveParameter("damping_ratio"));
            }
            ratio * m * omega / (2.0 * s)
        }
        None => get("rho", 0.5),
    };
    let n = get("n_modes", 256.0);
    if n < 1.0 || n.fract() != 0.0 {
        return Err(Error::NonPositiveParameter("n_modes"));
    }
    ModelParams::new(
        m,
        rho,
        s,
        omega,
        get("L", 100.0),
        get("hbar", 1.0),
        get("T", 0.0),
        raw.get("omega_max").copied(),
        n as usize,
    )
}

/// `eta / (m Omega)`, the single coupling knob in the default units.
pub fn damping_ratio(p: &ModelParams) -> Result<f64> {
    if p.omega() == 0.0 {
        return Err(Error::OmegaZero);
    }
    Ok(p.eta() / (p.m() * p.omega()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Dimensionless,
    Si,
}

/// Unit convention attached to every reported quantity.
///
/// The scale factors convert one internal unit into the labelled unit; in the
/// dimensionless convention they are all one and the defaults put
/// `hbar = m = Omega = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub convention: Convention,
    pub length: f64,
    pub time: f64,
    pub mass: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem::dimensionless()
    }
}

impl UnitSystem {
    pub fn dimensionless() -> Self {
        UnitSystem {
            convention: Convention::Dimensionless,
            length: 1.0,
            time: 1.0,
            mass: 1.0,
        }
    }

    pub fn si(length: f64, time: f64, mass: f64) -> Result<Self> {
        for (name, v) in [("units.length", length), ("units.time", time), ("units.mass", mass)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
            if v <= 0.0 {
                return Err(Error::NonPositiveParameter(name));
            }
        }
        Ok(UnitSystem {
            convention: Convention::Si,
            length,
            time,
            mass,
        })
    }

    /// Energy scale `mass * length^2 / time^2`.
    pub fn energy(&self) -> f64 {
        self.mass * self.length * self.length / (self.time * self.time)
    }

    pub fn label(&self) -> String {
        match self.convention {
            Convention::Dimensionless => "dimensionless (hbar = m = Omega = 1 by default)".into(),
            Convention::Si => format!(
                "SI (length x{:e} m, time x{:e} s, mass x{:e} kg)",
                self.length, self.time, self.mass
            ),
        }
    }
}

impl fmt::Display for UnitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
