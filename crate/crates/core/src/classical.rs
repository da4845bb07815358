//! Classical time-domain dynamics of a point oscillator embedded in a string.
//!
//! The string is sampled on an odd grid over `[-L/2, L/2]` with fixed ends.
//! Site masses are `rho dz`, the centre site carries the extra mass `m` and the
//! well force `-m Omega^2 R_0`, and the tension force is
//! `rho s^2 (R_{i+1} - 2 R_i + R_{i-1}) / dz`. Velocity Verlet advances the pair
//! `(R, V)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::stats::fit_line;
use crate::params::ModelParams;

/// Minimum number of envelope extrema for a damping fit.
pub const MIN_EXTREMA: usize = 8;

/// Inward/outward monitor energy ratio that flags a returning wave.
pub const REFLECTION_FRACTION: f64 = 0.05;

/// Relative amplitude below which envelope extrema are not fitted.
pub const ENVELOPE_FLOOR: f64 = 1e-4;

const PARALLEL_SITES: usize = 1 << 16;

/// Material constants of the discretised system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub rho: f64,
    pub s: f64,
    pub m: f64,
    pub omega: f64,
    pub length: f64,
    pub dz: f64,
}

impl Lattice {
    /// Grid with spacing as close to `dz` as an odd point count allows.
    pub fn new(rho: f64, s: f64, m: f64, omega: f64, length: f64, dz: f64) -> Result<Self> {
        for (name, v) in [("rho", rho), ("m", m)] {
            if !(v >= 0.0) {
                return Err(Error::NegativeParameter(name));
            }
        }
        for (name, v) in [("s", s), ("L", length), ("dz", dz)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveParameter(name));
            }
        }
        if !(omega >= 0.0) {
            return Err(Error::NegativeParameter("Omega"));
        }
        let half = (0.5 * length / dz).round().max(1.0);
        Ok(Lattice {
            rho,
            s,
            m,
            omega,
            length,
            dz: 0.5 * length / half,
        })
    }

    pub fn from_params(p: &ModelParams, dz: f64) -> Result<Self> {
        Lattice::new(p.rho(), p.s(), p.m(), p.omega(), p.length(), dz)
    }

    pub fn sites(&self) -> usize {
        2 * (0.5 * self.length / self.dz).round() as usize + 1
    }

    pub fn center(&self) -> usize {
        self.sites() / 2
    }

    pub fn z(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.dz
    }

    pub fn eta(&self) -> f64 {
        2.0 * self.rho * self.s
    }

    fn masses(&self) -> Vec<f64> {
        let mut mass = vec![self.rho * self.dz; self.sites()];
        mass[self.center()] += self.m;
        mass
    }

    /// Largest stable time step ratio is 1; `dt = cfl dz / s`.
    pub fn time_step(&self, cfl: f64) -> Result<f64> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::CflViolation { cfl });
        }
        Ok(cfl * self.dz / self.s)
    }

    fn forces(&self, r: &[f64], out: &mut [f64]) {
        let k = self.rho * self.s * self.s / self.dz;
        let n = r.len();
        let body = |(i, f): (usize, &mut f64)| {
            *f = if i == 0 || i + 1 == n {
                0.0
            } else {
                k * (r[i + 1] - 2.0 * r[i] + r[i - 1])
            };
        };
        if n >= PARALLEL_SITES {
            out.par_iter_mut().enumerate().for_each(body);
        } else {
            out.iter_mut().enumerate().for_each(body);
        }
        let c = n / 2;
        out[c] -= self.m * self.omega * self.omega * r[c];
    }
}

/// Field samples at one instant. The particle coordinate is the centre sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn at_rest(lat: &Lattice) -> Self {
        let n = lat.sites();
        FieldState {
            r: vec![0.0; n],
            v: vec![0.0; n],
            t: 0.0,
        }
    }

    /// String at rest, particle at `x0` moving with `v0`.
    pub fn particle(lat: &Lattice, x0: f64, v0: f64) -> Self {
        let mut st = FieldState::at_rest(lat);
        let c = lat.center();
        st.r[c] = x0;
        st.v[c] = v0;
        st
    }

    /// Arbitrary initial data; the ends are clamped to zero.
    pub fn from_profile(lat: &Lattice, r: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64) -> Self {
        let n = lat.sites();
        let mut st = FieldState {
            r: (0..n).map(|i| r(lat.z(i))).collect(),
            v: (0..n).map(|i| v(lat.z(i))).collect(),
            t: 0.0,
        };
        for buf in [&mut st.r, &mut st.v] {
            buf[0] = 0.0;
            buf[n - 1] = 0.0;
        }
        st
    }

    pub fn x(&self) -> f64 {
        self.r[self.r.len() / 2]
    }

    pub fn x_dot(&self) -> f64 {
        self.v[self.v.len() / 2]
    }
}

/// Velocity-Verlet integrator with cached forces.
#[derive(Debug, Clone)]
pub struct Integrator {
    lattice: Lattice,
    dt: f64,
    inv_mass: Vec<f64>,
    force: Vec<f64>,
    state: FieldState,
}

impl Integrator {
    pub fn new(lattice: Lattice, state: FieldState, dt: f64) -> Result<Self> {
        let cfl = dt * lattice.s / lattice.dz;
        if !(dt > 0.0) || cfl > 1.0 {
            return Err(Error::CflViolation { cfl });
        }
        if state.r.len() != lattice.sites() || state.v.len() != lattice.sites() {
            return Err(Error::DimensionMismatch {
                expected: lattice.sites(),
                got: state.r.len(),
            });
        }
        let inv_mass = lattice
            .masses()
            .iter()
            .map(|&m| if m > 0.0 { 1.0 / m } else { 0.0 })
            .collect();
        let mut force = vec![0.0; lattice.sites()];
        lattice.forces(&state.r, &mut force);
        Ok(Integrator {
            lattice,
            dt,
            inv_mass,
            force,
            state,
        })
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn into_state(self) -> FieldState {
        self.state
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&mut self) {
        let h = 0.5 * self.dt;
        let n = self.state.r.len();
        let st = &mut self.state;
        for i in 1..n - 1 {
            st.v[i] += h * self.force[i] * self.inv_mass[i];
            st.r[i] += self.dt * st.v[i];
        }
        self.lattice.forces(&st.r, &mut self.force);
        for i in 1..n - 1 {
            st.v[i] += h * self.force[i] * self.inv_mass[i];
        }
        st.t += self.dt;
    }

    /// Discrete energy: kinetic, tension and well terms.
    pub fn energy(&self) -> f64 {
        energy_between(&self.lattice, &self.state, 0, self.state.r.len() - 1)
    }

    /// Energy corrected by `-(dt^2/8) F.M^{-1}.F`, which velocity Verlet
    /// conserves exactly for a linear force.
    pub fn shadow_energy(&self) -> f64 {
        let corr: f64 = self.force.iter().zip(&self.inv_mass).map(|(f, w)| f * f * w).sum();
        self.energy() - self.dt * self.dt / 8.0 * corr
    }

    /// Power delivered by the region ending at site `i` to the sites beyond
    /// it (right of `i` when `i` is right of the centre), including the bond
    /// that crosses the boundary.
    fn outward_flux(&self, i: usize) -> f64 {
        let lat = &self.lattice;
        let st = &self.state;
        let k = lat.rho * lat.s * lat.s / lat.dz;
        let j = if i >= lat.center() { i + 1 } else { i - 1 };
        -k * (st.r[j] - st.r[i]) * st.v[i]
    }
}

/// Energy of sites `lo..=hi` and the bonds between them; includes the well
/// term when the centre lies inside.
fn energy_between(lat: &Lattice, st: &FieldState, lo: usize, hi: usize) -> f64 {
    let c = lat.center();
    let base = lat.rho * lat.dz;
    let k = lat.rho * lat.s * lat.s / lat.dz;
    let mut e = 0.0;
    for i in lo..=hi {
        let mass = if i == c { base + lat.m } else { base };
        e += 0.5 * mass * st.v[i] * st.v[i];
    }
    for i in lo..hi {
        e += 0.5 * k * (st.r[i + 1] - st.r[i]).powi(2);
    }
    if (lo..=hi).contains(&c) {
        e += 0.5 * lat.m * lat.omega * lat.omega * st.r[c] * st.r[c];
    }
    e
}

/// One explicit step of `state`.
pub fn step(state: &FieldState, lat: &Lattice, dt: f64) -> Result<FieldState> {
    let mut it = Integrator::new(*lat, state.clone(), dt)?;
    it.step();
    Ok(it.into_state())
}

/// Field profile at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
}

/// Particle trajectory at every step plus field snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub s: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl History {
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.x.len().saturating_sub(1))
    }

    /// Linear interpolation of `x(t)`, zero before the start.
    pub fn x_at(&self, t: f64) -> Option<f64> {
        if t < 0.0 {
            return Some(0.0);
        }
        let u = t / self.dt;
        let k = u.floor() as usize;
        let last = self.x.len().checked_sub(1)?;
        if k >= last {
            return (u <= last as f64 + 1e-6).then(|| self.x[last]);
        }
        let f = u - k as f64;
        Some(self.x[k] * (1.0 - f) + self.x[k + 1] * f)
    }
}

/// `max |R(z,t) - x(t - |z|/s)| / max|x|` over all snapshots, sampling sites
/// with `|z| <= s t - front_margin`.
pub fn check_retarded_solution(history: &History, front_margin: f64) -> Result<f64> {
    if history.snapshots.is_empty() {
        return Err(Error::InsufficientHistory("no field snapshots".into()));
    }
    let scale = history.x.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if !(scale > 0.0) {
        return Err(Error::InsufficientHistory("particle never moved".into()));
    }
    let mut worst = 0.0f64;
    for snap in &history.snapshots {
        if snap.t > history.t_end() + 0.5 * history.dt {
            return Err(Error::InsufficientHistory(format!(
                "snapshot at t = {} beyond trajectory end {}",
                snap.t,
                history.t_end()
            )));
        }
        let cone = history.s * snap.t - front_margin;
        for (z, r) in snap.z.iter().zip(&snap.r) {
            if z.abs() > cone {
                continue;
            }
            let xr = history
                .x_at(snap.t - z.abs() / history.s)
                .ok_or_else(|| Error::InsufficientHistory(format!("x({}) unavailable", snap.t)))?;
            worst = worst.max((r - xr).abs());
        }
    }
    Ok(worst / scale)
}

/// Settings for one time-domain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub dz: f64,
    pub cfl: f64,
    pub t_max: f64,
    pub x0: f64,
    pub v0: f64,
    /// Monitor points sit at `z = +-monitor`.
    pub monitor: f64,
    pub snapshot_times: Vec<f64>,
    /// Row stride of the recorded trace.
    pub record_every: usize,
    /// Skip the reflection guard on `t_max`.
    pub allow_reflection: bool,
}

impl DecayConfig {
    /// `dz = s / (40 Omega)`, CFL 0.5, monitors at `10 dz`.
    pub fn standard(p: &ModelParams, x0: f64, t_max: f64) -> Self {
        let dz = p.s() / (40.0 * p.omega().max(1e-300));
        DecayConfig {
            dz,
            cfl: 0.5,
            t_max,
            x0,
            v0: 0.0,
            monitor: 10.0 * dz,
            snapshot_times: vec![0.5 * t_max, t_max],
            record_every: 1,
            allow_reflection: false,
        }
    }
}

/// Exponential-envelope fit of `x(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingFit {
    pub gamma_fit: f64,
    /// `eta / 2m = rho s / m`.
    pub gamma_theory: f64,
    pub omega_fit: f64,
    /// `sqrt(Omega^2 - (eta/2m)^2)`.
    pub omega_theory: f64,
    pub window: (f64, f64),
    pub extrema: usize,
}

/// Fits `|x|` extrema (parabolic peak refinement) by a line in `ln|x|`.
/// The first extremum is dropped as transient; extrema after the envelope
/// falls below `ENVELOPE_FLOOR` of its start are ignored.
pub fn fit_damping(x: &[f64], dt: f64, gamma_theory: f64, omega_theory: f64) -> Result<DampingFit> {
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
        // maxima above and minima below the axis; ripples riding on one
        // half-cycle are merged into its largest extremum
        let is_max = b > a && b >= c && b > 0.0;
        let is_min = b < a && b <= c && b < 0.0;
        if !(is_max || is_min) {
            continue;
        }
        let curv = a - 2.0 * b + c;
        let shift = if curv != 0.0 { 0.5 * (a - c) / curv } else { 0.0 };
        let value = b - 0.25 * (a - c) * shift;
        let pk = ((i as f64 + shift) * dt, value);
        match peaks.last_mut() {
            Some(last) if (last.1 > 0.0) == (value > 0.0) => {
                if value.abs() > last.1.abs() {
                    *last = pk;
                }
            }
            _ => peaks.push(pk),
        }
    }
    let peaks: Vec<(f64, f64)> = peaks.into_iter().map(|(t, v)| (t, v.abs())).collect();
    // drop the first extremum and stop once the envelope reaches the noise floor
    let mut used: Vec<(f64, f64)> = Vec::new();
    for pk in peaks.into_iter().skip(1) {
        if !(pk.1 > ENVELOPE_FLOOR * used.first().map_or(pk.1, |f| f.1)) {
            break;
        }
        used.push(pk);
    }
    if used.len() < MIN_EXTREMA {
        return Err(Error::InsufficientHistory(format!(
            "{} envelope extrema, need {MIN_EXTREMA}",
            used.len()
        )));
    }
    let ts: Vec<f64> = used.iter().map(|p| p.0).collect();
    let ls: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&ts, &ls).ok_or_else(|| Error::InsufficientHistory("degenerate extrema".into()))?;
    let (t0, t1) = (ts[0], ts[ts.len() - 1]);
    Ok(DampingFit {
        gamma_fit: -line.slope,
        gamma_theory,
        omega_fit: PI * (ts.len() - 1) as f64 / (t1 - t0),
        omega_theory,
        window: (t0, t1),
        extrema: ts.len(),
    })
}

/// `(rho s / m, sqrt(Omega^2 - (rho s / m)^2))`.
pub fn damping_theory(p: &ModelParams) -> (f64, f64) {
    let gamma = p.rho() * p.s() / p.m();
    (gamma, (p.omega().powi(2) - gamma * gamma).max(0.0).sqrt())
}

/// Recorded trace of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// Conserved (shadow) energy of the whole lattice.
    pub energy_total: Vec<f64>,
    /// Energy carried past the monitor points so far.
    pub energy_radiated: Vec<f64>,
}

/// Everything produced by one time-domain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRun {
    pub fit: Option<DampingFit>,
    pub trace: Trace,
    pub history: History,
    /// `max |E - E_0| / E_0` of the shadow energy.
    pub energy_drift: f64,
    /// Energy lost by `|z| < monitor` against the flux through the monitors.
    pub region_energy_lost: f64,
    pub flux_radiated: f64,
    /// First time the energy flowing inward through the monitors exceeds
    /// `REFLECTION_FRACTION` of the energy that has flowed out.
    pub reflection_detected: Option<f64>,
}

impl DecayRun {
    pub fn flux_balance(&self) -> f64 {
        (self.region_energy_lost - self.flux_radiated).abs() / self.region_energy_lost.abs()
    }
}

/// Integrates from rest with the particle displaced (and optionally kicked).
pub fn run_decay(p: &ModelParams, cfg: &DecayConfig) -> Result<DecayRun> {
    let lat = Lattice::from_params(p, cfg.dz)?;
    let limit = 0.5 * p.length() / p.s();
    if !cfg.allow_reflection && !(cfg.t_max < limit) {
        return Err(Error::ReflectionContamination {
            t_max: cfg.t_max,
            limit,
        });
    }
    let dt = lat.time_step(cfg.cfl)?;
    let steps = (cfg.t_max / dt).round() as usize;
    let c = lat.center();
    let jm = ((cfg.monitor / lat.dz).round() as usize).clamp(1, c - 1);
    let (lo, hi) = (c - jm, c + jm);

    let mut it = Integrator::new(lat, FieldState::particle(&lat, cfg.x0, cfg.v0), dt)?;
    let stride = cfg.record_every.max(1);
    let mut snap_steps: Vec<usize> = cfg
        .snapshot_times
        .iter()
        .map(|t| ((t / dt).round() as usize).min(steps))
        .collect();
    snap_steps.sort_unstable();
    snap_steps.dedup();
    let zs: Vec<f64> = (0..lat.sites()).map(|i| lat.z(i)).collect();

    let e0 = it.shadow_energy();
    let region0 = energy_between(&lat, it.state(), lo, hi);
    let mut history = History {
        s: lat.s,
        dt,
        x: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
    };
    let mut trace = Trace {
        t: Vec::new(),
        x: Vec::new(),
        energy_total: Vec::new(),
        energy_radiated: Vec::new(),
    };
    let mut drift = 0.0f64;
    let mut radiated = 0.0;
    let mut flux_prev = it.outward_flux(lo) + it.outward_flux(hi);
    let mut outward = 0.0;
    let mut inward = 0.0;
    let mut reflection = None;
    let mut snaps = snap_steps.iter().peekable();

    for k in 0..=steps {
        if k > 0 {
            it.step();
            let fl = it.outward_flux(lo);
            let fr = it.outward_flux(hi);
            let flux = fl + fr;
            radiated += 0.5 * dt * (flux + flux_prev);
            flux_prev = flux;
            outward += dt * (fl.max(0.0) + fr.max(0.0));
            inward -= dt * (fl.min(0.0) + fr.min(0.0));
            if reflection.is_none() && inward > REFLECTION_FRACTION * outward {
                reflection = Some(it.state().t);
            }
        }
        let e = it.shadow_energy();
        drift = drift.max((e - e0).abs() / e0.abs());
        history.x.push(it.state().x());
        if k % stride == 0 || k == steps {
            trace.t.push(it.state().t);
            trace.x.push(it.state().x());
            trace.energy_total.push(e);
            trace.energy_radiated.push(radiated);
        }
        if snaps.peek() == Some(&&k) {
            snaps.next();
            history.snapshots.push(Snapshot {
                t: it.state().t,
                z: zs.clone(),
                r: it.state().r.clone(),
            });
        }
    }
    let region_lost = region0 - energy_between(&lat, it.state(), lo, hi);
    let (gamma_theory, omega_theory) = damping_theory(p);
    let fit = fit_damping(&history.x, dt, gamma_theory, omega_theory).ok();
    Ok(DecayRun {
        fit,
        trace,
        history,
        energy_drift: drift,
        region_energy_lost: region_lost,
        flux_radiated: radiated,
        reflection_detected: reflection,
    })
}

/// Displaced-particle decay at `dz = s/(40 Omega)`, CFL 0.5.
pub fn run_decay_experiment(p: &ModelParams, x0: f64, t_max: f64) -> Result<DampingFit> {
    let limit = 2.0 * p.m() * p.omega();
    if !(p.eta() < limit) {
        return Err(Error::OverdampedRegime { eta: p.eta(), limit });
    }
    let mut cfg = DecayConfig::standard(p, x0, t_max);
    cfg.snapshot_times.clear();
    let run = run_decay(p, &cfg)?;
    let (gamma, omega) = damping_theory(p);
    fit_damping(&run.history.x, run.history.dt, gamma, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{make_params, ParamMap};

    fn params(pairs: &[(&str, f64)]) -> ModelParams {
        let mut map: ParamMap = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        map.entry("omega_max".into()).or_insert(100.0);
        make_params(&map).unwrap()
    }

    #[test]
    fn odd_grid_centred_on_origin() {
        let lat = Lattice::new(1.0, 1.0, 1.0, 1.0, 10.0, 0.3).unwrap();
        assert_eq!(lat.sites() % 2, 1);
        assert_eq!(lat.z(lat.center()), 0.0);
        assert!((lat.z(lat.sites() - 1) - 5.0).abs() < 1e-12);
        let st = FieldState::particle(&lat, 0.7, 0.0);
        assert_eq!(st.x(), 0.7);
    }

    #[test]
    fn cfl_is_enforced() {
        let lat = Lattice::new(1.0, 1.0, 1.0, 1.0, 10.0, 0.1).unwrap();
        let st = FieldState::at_rest(&lat);
        assert!(matches!(step(&st, &lat, 0.11), Err(Error::CflViolation { .. })));
        assert!(matches!(lat.time_step(1.5), Err(Error::CflViolation { .. })));
        assert!(step(&st, &lat, 0.1).is_ok());
    }

    #[test]
    fn free_pulse_translates() {
        let (l, s, width) = (40.0, 1.0, 1.0);
        let lat = Lattice::new(1.0, s, 0.0, 0.0, l, 0.02).unwrap();
        let g = |z: f64| (-(z / width).powi(2)).exp();
        let gp = |z: f64| -2.0 * z / (width * width) * g(z);
        let st = FieldState::from_profile(&lat, g, |z| -s * gp(z));
        let dt = lat.time_step(0.5).unwrap();
        let mut it = Integrator::new(lat, st, dt).unwrap();
        let t_end = l / (4.0 * s);
        while it.state().t < t_end - 0.5 * dt {
            it.step();
        }
        let t = it.state().t;
        let err = (0..lat.sites())
            .map(|i| (it.state().r[i] - g(lat.z(i) - s * t)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn shadow_energy_is_conserved() {
        let p = params(&[("rho", 0.05), ("L", 40.0)]);
        let mut cfg = DecayConfig::standard(&p, 1.0, 19.0);
        cfg.snapshot_times.clear();
        let run = run_decay(&p, &cfg).unwrap();
        assert!(run.energy_drift < 1e-10, "{}", run.energy_drift);
    }

    #[test]
    fn fronts_respect_causality() {
        let p = params(&[("rho", 0.05), ("L", 40.0)]);
        let mut cfg = DecayConfig::standard(&p, 1.0, 5.0);
        cfg.snapshot_times = vec![5.0];
        let run = run_decay(&p, &cfg).unwrap();
        let snap = &run.history.snapshots[0];
        // the explicit stencil moves information one site per step
        let numerical_cone = snap.t / run.history.dt * cfg.dz;
        for (z, r) in snap.z.iter().zip(&snap.r) {
            if z.abs() > numerical_cone + 1e-9 {
                assert_eq!(*r, 0.0);
            }
            if z.abs() > snap.t + 1.0 {
                assert!(r.abs() < 1e-6, "{z} {r}");
            }
        }
        let near_front = snap.z.iter().zip(&snap.r).filter(|(z, _)| (z.abs() - 4.5).abs() < 0.05);
        assert!(near_front.map(|(_, r)| r.abs()).fold(0.0, f64::max) > 1e-2);
    }

    #[test]
    fn decay_rate_matches_friction() {
        let p = params(&[("rho", 0.05), ("L", 140.0)]);
        let fit = run_decay_experiment(&p, 1.0, 60.0).unwrap();
        assert!((fit.gamma_fit / fit.gamma_theory - 1.0).abs() < 0.02, "{fit:?}");
        assert!((fit.omega_fit / fit.omega_theory - 1.0).abs() < 0.005, "{fit:?}");
        assert!(fit.extrema >= MIN_EXTREMA);
        assert!(fit.window.1 < 70.0 + fit.window.0);
    }

    #[test]
    fn weak_coupling_is_undamped() {
        let p = params(&[("rho", 1e-7), ("L", 60.0)]);
        let fit = run_decay_experiment(&p, 1.0, 29.0).unwrap();
        assert!(fit.gamma_fit.abs() < 1e-5, "{fit:?}");
    }

    #[test]
    fn preconditions() {
        let p = params(&[("rho", 1.5), ("L", 60.0)]);
        assert!(matches!(
            run_decay_experiment(&p, 1.0, 20.0),
            Err(Error::OverdampedRegime { .. })
        ));
        let p = params(&[("rho", 0.05), ("L", 60.0)]);
        assert!(matches!(
            run_decay_experiment(&p, 1.0, 30.0),
            Err(Error::ReflectionContamination { .. })
        ));
        let short = History {
            s: 1.0,
            dt: 0.1,
            x: vec![1.0, 0.5],
            snapshots: vec![],
        };
        assert!(matches!(
            check_retarded_solution(&short, 0.0),
            Err(Error::InsufficientHistory(_))
        ));
    }

    #[test]
    fn retarded_form_holds_inside_cone() {
        let p = params(&[("rho", 0.05), ("L", 100.0)]);
        let mut cfg = DecayConfig::standard(&p, 0.0, 40.0);
        cfg.v0 = 1.0;
        let run = run_decay(&p, &cfg).unwrap();
        let res = check_retarded_solution(&run.history, 2.0 * PI).unwrap();
        assert!(res < 1e-2, "{res}");
        cfg.dz *= 0.5;
        cfg.monitor *= 0.5;
        let fine = check_retarded_solution(&run_decay(&p, &cfg).unwrap().history, 2.0 * PI).unwrap();
        // at least first-order convergence under grid refinement
        assert!(fine < 0.6 * res, "{fine} {res}");
    }

    #[test]
    fn radiated_flux_balances_region_energy() {
        let p = params(&[("rho", 0.05), ("L", 100.0)]);
        let mut cfg = DecayConfig::standard(&p, 0.0, 40.0);
        cfg.v0 = 1.0;
        let run = run_decay(&p, &cfg).unwrap();
        assert!(
            run.flux_balance() < 0.02,
            "{} {}",
            run.region_energy_lost,
            run.flux_radiated
        );
        assert!(run.reflection_detected.is_none());
    }

    #[test]
    fn returning_wave_is_detected() {
        let p = params(&[("rho", 0.05), ("L", 30.0)]);
        let mut cfg = DecayConfig::standard(&p, 1.0, 40.0);
        cfg.allow_reflection = true;
        let run = run_decay(&p, &cfg).unwrap();
        let t = run.reflection_detected.expect("reflection");
        let zm = cfg.monitor;
        assert!(t > 2.0 * (15.0 - zm) && t < 30.0 - zm + 1.0, "{t}");
    }
}
