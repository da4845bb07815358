//! Equilibrium particle fluctuations: mode sum against the
//! fluctuation-dissipation integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{u0_asymptotic, ModeSpectrum};
use crate::numerics::quadrature::{Estimate, Quadrature};
use crate::params::ModelParams;

/// Default bound on the continuum tail as a fraction of the mode sum.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.05;

/// `coth(hbar w / 2T)`, equal to 1 at `T = 0`.
pub fn thermal_factor(hbar: f64, w: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let u = hbar * w / (2.0 * t);
    if u > 20.0 {
        1.0
    } else {
        1.0 / u.tanh()
    }
}

/// `<eta_q^2> = (L hbar / 2 rho w) coth(hbar w / 2T)`.
pub fn mode_variance(p: &ModelParams, w: f64, t: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::ZeroFrequency);
    }
    if !(t >= 0.0) {
        return Err(Error::NegativeParameter("T"));
    }
    Ok(p.length() * p.hbar() / (2.0 * p.rho() * w) * thermal_factor(p.hbar(), w, t))
}

/// FDT integrand `(hbar/pi) coth(hbar w/2T) eta w / ((m w^2 - m Omega^2)^2 + eta^2 w^2)`.
fn fdt_integrand(p: &ModelParams, w: f64, t: f64) -> f64 {
    if w == 0.0 {
        if t == 0.0 || p.omega() == 0.0 {
            return 0.0;
        }
        // coth ~ 2T/(hbar w) cancels the factor w
        return 2.0 * t * p.eta() / (PI * (p.m() * p.omega().powi(2)).powi(2));
    }
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let d = (m * w * w - m * o2).powi(2) + (eta * w).powi(2);
    p.hbar() / PI * thermal_factor(p.hbar(), w, t) * eta * w / d
}

fn fdt_seeds(p: &ModelParams) -> (f64, Vec<f64>) {
    let o = p.omega();
    let width = p.eta() / p.m();
    let scale = if o > 0.0 { o } else { width };
    let mut seeds = vec![scale];
    for k in [0.5, 2.0, 8.0] {
        seeds.push(scale - k * width);
        seeds.push(scale + k * width);
    }
    seeds.retain(|x| *x > 0.0);
    (scale, seeds)
}

/// `<x^2>` from the real form of the fluctuation-dissipation integral,
/// `(hbar/pi) int_0^inf coth(hbar w/2T) eta w / D(w) dw`.
pub fn x2_fdt(p: &ModelParams, t: f64) -> Result<Estimate> {
    let (scale, seeds) = fdt_seeds(p);
    Quadrature::with_tolerances(0.0, 1e-12).integrate_semi_infinite(|w| fdt_integrand(p, w, t), 0.0, scale, &seeds)
}

/// `int_w0^inf` of the FDT integrand.
fn fdt_tail(p: &ModelParams, w0: f64, t: f64) -> Result<Estimate> {
    let (scale, seeds) = fdt_seeds(p);
    Quadrature::with_tolerances(0.0, 1e-12).integrate_semi_infinite(
        |w| fdt_integrand(p, w, t),
        w0,
        scale.max(w0),
        &seeds,
    )
}

/// `<x^2>` from the complex form `(i hbar / 2 pi) int_{-inf}^{inf} coth(hbar w/2T) dw / (m w^2 - m Omega^2 + i eta w)`
/// evaluated on the real axis, pairing `w` with `-w` so the pole of `coth`
/// at the origin is taken as a principal value. The imaginary part of the
/// result measures how far the integral is from real.
pub fn x2_fdt_complex(p: &ModelParams, t: f64) -> Result<Complex64> {
    let (m, o2, eta, hbar) = (p.m(), p.omega().powi(2), p.eta(), p.hbar());
    let i = Complex64::i();
    let response = |w: f64| 1.0 / Complex64::new(m * w * w - m * o2, eta * w);
    let paired = |w: f64| -> Complex64 {
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let th = thermal_factor(hbar, w, t);
        (response(w) - response(-w)) * th
    };
    let (scale, seeds) = fdt_seeds(p);
    let q = Quadrature::with_tolerances(1e-15, 1e-12);
    let re = q.integrate_semi_infinite(|w| paired(w).re, 0.0, scale, &seeds)?;
    let im = q.integrate_semi_infinite(|w| paired(w).im, 0.0, scale, &seeds)?;
    Ok(i * hbar / (2.0 * PI) * Complex64::new(re.value, im.value))
}

/// Truncated mode sum with its continuum tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSum {
    pub value: f64,
    pub discrete: f64,
    pub tail: f64,
    pub modes: usize,
}

/// `<x^2> = (2/L^2) sum_q u0q^2 <eta_q^2>` plus the modes above the
/// spectrum, counted with the free-string density `nu0`.
pub fn x2_mode_sum(p: &ModelParams, spec: &ModeSpectrum, t: f64) -> Result<ModeSum> {
    x2_mode_sum_with(p, spec, t, DEFAULT_TAIL_FRACTION)
}

/// As [`x2_mode_sum`], with an explicit bound on the tail fraction.
pub fn x2_mode_sum_with(p: &ModelParams, spec: &ModeSpectrum, t: f64, tail_fraction: f64) -> Result<ModeSum> {
    let l2 = p.length().powi(2);
    let mut discrete = 0.0;
    for (&w, &u) in spec.omega().iter().zip(spec.u0()) {
        discrete += 2.0 / l2 * u * u * mode_variance(p, w, t)?;
    }
    // nu0 (2/L^2) u0^2 <eta^2> reduces to the FDT integrand
    let top = spec.omega().last().map_or(0.0, |w| w + 0.5 * p.mode_spacing());
    let tail = fdt_tail(p, top, t)?.value;
    let value = discrete + tail;
    if !(tail <= tail_fraction * value) {
        return Err(Error::TruncationNotConverged { sum: discrete, tail });
    }
    Ok(ModeSum {
        value,
        discrete,
        tail,
        modes: spec.len(),
    })
}

/// Continuum version of one summand, used to cross-check the tail density.
pub fn continuum_weight(p: &ModelParams, w: f64, t: f64) -> Result<f64> {
    let u = u0_asymptotic(p, w);
    Ok(p.nu0() * 2.0 / p.length().powi(2) * u * u * mode_variance(p, w, t)?)
}

/// Both routes to `<x^2>` at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationReport {
    pub temperature: f64,
    pub x2_mode_sum: f64,
    pub x2_fdt: f64,
    pub discrepancy: f64,
    pub tail: f64,
    pub modes: usize,
}

pub fn fluctuation_report(p: &ModelParams, spec: &ModeSpectrum, t: f64) -> Result<FluctuationReport> {
    let sum = x2_mode_sum(p, spec, t)?;
    let fdt = x2_fdt(p, t)?.value;
    Ok(FluctuationReport {
        temperature: t,
        x2_mode_sum: sum.value,
        x2_fdt: fdt,
        discrepancy: (sum.value - fdt).abs() / fdt,
        tail: sum.tail,
        modes: sum.modes,
    })
}
