//! Ground-state string displacement `<R^2(z)>` and its polaronic tail.
//!
//! Per unit frequency the profile splits into a string part
//! `(2 hbar / pi eta) sin^2(z w/s) / w`, cut at `w_max` (s-mode included),
//! and a particle part
//! `(hbar/pi) [eta w cos(k w) + m(Omega^2 - w^2) sin(k w)] / D(w)`, `k = 2|z|/s`,
//! which is `(hbar/pi) Im[chi(w) e^{ikw}]` with
//! `chi = 1/(m Omega^2 - m w^2 - i eta w)`. The particle part converges
//! without a cutoff; its decay past the last full period is summed by
//! repeated integration by parts.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::Quadrature;
use crate::numerics::stats::fit_line;
use crate::params::ModelParams;

/// Minimum number of grid points inside the tail-fit window.
pub const MIN_FIT_POINTS: usize = 10;

fn quad() -> Quadrature {
    Quadrature::with_tolerances(1e-15, 1e-12)
}

/// `sum_j j! / (i lambda u)^(j+1)`: the factor multiplying `e^{i lambda u}` in
/// the antiderivative of `e^{i lambda u} / u`.
fn inverse_power_series(lambda: f64, u: f64) -> Complex64 {
    let x = Complex64::new(0.0, lambda * u);
    let mut term = 1.0 / x;
    let mut sum = term;
    for j in 1..40 {
        term *= j as f64 / x;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// `int_0^X sin^2(u)/u du`.
pub fn sin2_over_u(x: f64) -> Result<f64> {
    let split = 200.0 * PI;
    let f = |u: f64| if u == 0.0 { 0.0 } else { u.sin().powi(2) / u };
    let head_end = x.min(split);
    let head = quad().integrate_periods(f, 0.0, head_end, PI, &[])?.value;
    if x <= split {
        return Ok(head);
    }
    // sin^2 u / u = 1/(2u) - Re[e^{2iu}] / (2u)
    let anti = |u: f64| (Complex64::new(0.0, 2.0 * u).exp() * inverse_power_series(2.0, u)).re;
    Ok(head + 0.5 * (x / split).ln() - 0.5 * (anti(x) - anti(split)))
}

/// String part `(2 hbar / pi eta) int_0^{q_max} sin^2(q z)/q dq`.
pub fn baseline(p: &ModelParams, z: f64) -> Result<f64> {
    Ok(2.0 * p.hbar() / (PI * p.eta()) * sin2_over_u(z.abs() * p.q_max())?)
}

/// Leading-log form `(2 hbar / pi eta) ln(z q_max)`.
pub fn baseline_log_form(p: &ModelParams, z: f64) -> f64 {
    2.0 * p.hbar() / (PI * p.eta()) * (z.abs() * p.q_max()).ln()
}

/// Poles of `chi`, the roots of `m w^2 + i eta w - m Omega^2`.
fn poles(p: &ModelParams) -> (Complex64, Complex64) {
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let disc = Complex64::new(4.0 * m * m * o2 - eta * eta, 0.0).sqrt();
    let i = Complex64::i();
    ((-i * eta + disc) / (2.0 * m), (-i * eta - disc) / (2.0 * m))
}

/// `d^j chi / dw^j` at real `w`, from partial fractions.
fn chi_derivative(p: &ModelParams, w: f64, j: usize) -> Complex64 {
    let (r1, r2) = poles(p);
    let m = p.m();
    let wc = Complex64::new(w, 0.0);
    let fact: f64 = (1..=j).map(|v| v as f64).product();
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    if (r1 - r2).norm() > 1e-6 * r1.norm().max(1e-300) {
        let d1 = sign * fact / (wc - r1).powu(j as u32 + 1);
        let d2 = sign * fact / (wc - r2).powu(j as u32 + 1);
        -(d1 - d2) / (m * (r1 - r2))
    } else {
        let r = (r1 + r2) * 0.5;
        // chi = -1 / (m (w - r)^2)
        -sign * fact * (j as f64 + 1.0) / (m * (wc - r).powu(j as u32 + 2))
    }
}

/// `int_W^inf chi(w) e^{ikw} dw` by integration by parts.
fn chi_tail(p: &ModelParams, k: f64, w: f64) -> Complex64 {
    let ik = Complex64::new(0.0, k);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut denom = ik;
    for j in 0..40 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * chi_derivative(p, w, j) / denom;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
        denom *= ik;
    }
    -(ik * w).exp() * sum
}

fn particle_density(p: &ModelParams, k: f64, w: f64) -> f64 {
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let d = (m * w * w - m * o2).powi(2) + (eta * w).powi(2);
    if d == 0.0 {
        return 0.0;
    }
    p.hbar() / PI * (eta * w * (k * w).cos() + m * (o2 - w * w) * (k * w).sin()) / d
}

fn peak_points(p: &ModelParams) -> Vec<f64> {
    let o = p.omega();
    let width = p.eta() / p.m();
    let mut pts = vec![o];
    for f in [0.5, 2.0, 8.0] {
        pts.push(o - f * width);
        pts.push(o + f * width);
    }
    pts.retain(|x| *x > 0.0);
    pts
}

/// Upper edge of the explicit quadrature for the particle part: far beyond
/// the poles and many periods out, so the asymptotic tail converges fast.
fn explicit_limit(p: &ModelParams, k: f64) -> f64 {
    let (r1, r2) = poles(p);
    (20.0 * r1.norm().max(r2.norm())).max(60.0 / k)
}

/// Particle part of `<R^2(z)>`, integrating only the `u_0q^2` terms.
pub fn excess(p: &ModelParams, z: f64) -> Result<f64> {
    let k = 2.0 * z.abs() / p.s();
    if k == 0.0 {
        // R(0) = x: the profile reduces to the T = 0 particle variance
        return crate::fluctuation::x2_fdt(p, 0.0).map(|e| e.value);
    }
    let w_end = explicit_limit(p, k);
    let head = quad().integrate_periods(|w| particle_density(p, k, w), 0.0, w_end, 2.0 * PI / k, &peak_points(p))?;
    Ok(head.value + p.hbar() / PI * chi_tail(p, k, w_end).im)
}

/// Particle part from the contour rotated onto the imaginary axis:
/// `(hbar/pi) int_0^inf e^{-k y} / (m y^2 + eta y + m Omega^2) dy`.
/// Positive and monotone in `|z|`.
pub fn excess_laplace(p: &ModelParams, z: f64) -> Result<f64> {
    let k = 2.0 * z.abs() / p.s();
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let scale = if k > 0.0 { 1.0 / k } else { p.omega().max(eta / m) };
    let f = |y: f64| (-k * y).exp() / (m * y * y + eta * y + m * o2);
    let v = Quadrature::with_tolerances(0.0, 1e-12).integrate_semi_infinite(f, 0.0, scale, &[])?;
    Ok(p.hbar() / PI * v.value)
}

/// Whole profile from one pass over the combined integrand.
pub fn total(p: &ModelParams, z: f64) -> Result<f64> {
    let k = 2.0 * z.abs() / p.s();
    if k == 0.0 {
        return excess(p, 0.0);
    }
    let w_max = p.omega_max();
    let pref = 2.0 * p.hbar() / (PI * p.eta());
    let zs = z.abs() / p.s();
    let combined = |w: f64| {
        let string = if w == 0.0 {
            0.0
        } else {
            pref * (zs * w).sin().powi(2) / w
        };
        string + particle_density(p, k, w)
    };
    let period = 2.0 * PI / k;
    let pts = peak_points(p);
    let mut value = quad().integrate_periods(combined, 0.0, w_max, period, &pts)?.value;
    let upper = w_max.max(explicit_limit(p, k));
    if upper > w_max {
        value += quad()
            .integrate_periods(|w| particle_density(p, k, w), w_max, upper, period, &pts)?
            .value;
    }
    Ok(value + p.hbar() / PI * chi_tail(p, k, upper).im)
}

/// `[20 max(eta s/(m Omega^2), s/Omega), s / (10 w_min)]` with `w_min = pi s / L`.
pub fn fit_window(p: &ModelParams) -> Result<(f64, f64)> {
    let o = p.omega();
    if o == 0.0 {
        return Err(Error::OmegaZero);
    }
    let s = p.s();
    let lo = 20.0 * (p.eta() * s / (p.m() * o * o)).max(s / o);
    let w_min = PI * s / p.length();
    Ok((lo, s / (10.0 * w_min)))
}

/// Log-log fits of the particle part over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// `c` in `c / |z|` with the exponent fixed at -1.
    pub coefficient: f64,
    /// `hbar s / (2 pi m Omega^2)`.
    pub coefficient_theory: f64,
    /// Exponent from a free fit.
    pub exponent: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub points: usize,
}

pub fn fit_tail(p: &ModelParams, z: &[f64], values: &[f64]) -> Result<TailFit> {
    let (lo, hi) = fit_window(p)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = z
        .iter()
        .zip(values)
        .filter(|(zz, v)| zz.abs() >= lo && zz.abs() <= hi && **v > 0.0)
        .map(|(zz, v)| (zz.abs().ln(), v.ln()))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::WindowTooNarrow {
            points: xs.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let coefficient = (xs.iter().zip(&ys).map(|(x, y)| x + y).sum::<f64>() / xs.len() as f64).exp();
    let line = fit_line(&xs, &ys).ok_or_else(|| Error::InvalidArgument("degenerate fit abscissae".into()))?;
    Ok(TailFit {
        coefficient,
        coefficient_theory: p.hbar() * p.s() / (2.0 * PI * p.m() * p.omega().powi(2)),
        exponent: line.slope,
        window_lo: lo,
        window_hi: hi,
        points: xs.len(),
    })
}

/// `<R^2(z)>` on a grid with its string/particle split and tail fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub z: Vec<f64>,
    pub r2_total: Vec<f64>,
    pub r2_baseline: Vec<f64>,
    /// `r2_total - r2_baseline`.
    pub r2_excess: Vec<f64>,
    /// Particle terms integrated on their own.
    pub r2_excess_direct: Vec<f64>,
    pub baseline_log_form: Vec<f64>,
    /// Largest `|r2_excess - r2_excess_direct|` over the grid.
    pub split_mismatch: f64,
    pub tail_fit: Option<TailFit>,
    /// Largest relative deviation of the baseline from its leading-log form
    /// inside the fit window.
    pub baseline_deviation: Option<f64>,
}

/// Ground-state profile (`<eta_q^2> = hbar L / 2 rho w_q`) on `z_grid`.
/// The fit fields are `None` when the window holds too few points.
pub fn r2_profile(p: &ModelParams, z_grid: &[f64]) -> Result<ProfileReport> {
    let half = 0.5 * p.length();
    if let Some(bad) = z_grid.iter().find(|z| !(z.abs() <= half)) {
        return Err(Error::PositionOutOfRange { z: *bad });
    }
    let rows: Vec<(f64, f64, f64)> = z_grid
        .par_iter()
        .map(|&z| Ok((total(p, z)?, baseline(p, z)?, excess(p, z)?)))
        .collect::<Result<_>>()?;
    let r2_total: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let r2_baseline: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let r2_excess_direct: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let r2_excess: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();
    let split_mismatch = r2_excess
        .iter()
        .zip(&r2_excess_direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let baseline_log_form: Vec<f64> = z_grid.iter().map(|&z| baseline_log_form(p, z)).collect();
    let (tail_fit, baseline_deviation) = match fit_tail(p, z_grid, &r2_excess) {
        Ok(fit) => {
            let dev = z_grid
                .iter()
                .zip(r2_baseline.iter().zip(&baseline_log_form))
                .filter(|(z, _)| z.abs() >= fit.window_lo && z.abs() <= fit.window_hi)
                .map(|(_, (b, l))| (b / l - 1.0).abs())
                .fold(0.0, f64::max);
            (Some(fit), Some(dev))
        }
        Err(Error::WindowTooNarrow { .. }) | Err(Error::OmegaZero) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(ProfileReport {
        z: z_grid.to_vec(),
        r2_total,
        r2_baseline,
        r2_excess,
        r2_excess_direct,
        baseline_log_form,
        split_mismatch,
        tail_fit,
        baseline_deviation,
    })
}

/// `n` geometrically spaced points on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (r * i as f64).exp()).collect()
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
    fn sin2_integral_has_log_asymptote() {
        // int_0^X sin^2 u / u = (ln 2X + gamma - Ci(2X)) / 2
        let gamma = 0.577_215_664_901_532_9;
        for x in [1e3, 1e4, 1e5] {
            let v = sin2_over_u(x).unwrap();
            let asym = 0.5 * ((2.0 * x).ln() + gamma);
            // |Ci(2X)| < 1/X
            assert!((v - asym).abs() < 1.0 / x, "{x}: {v} {asym}");
        }
        let direct = quad().integrate_periods(
            |u| if u == 0.0 { 0.0 } else { u.sin().powi(2) / u },
            0.0,
            1500.0,
            PI,
            &[],
        );
        assert!((direct.unwrap().value - sin2_over_u(1500.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_route_matches_rotated_contour() {
        for (rho, z) in [(0.5, 0.3), (0.5, 5.0), (0.1, 40.0), (1.0, 200.0), (0.02, 3.0)] {
            let p = params(&[("rho", rho)]);
            let a = excess(&p, z).unwrap();
            let b = excess_laplace(&p, z).unwrap();
            assert!((a - b).abs() < 1e-9 * b.abs().max(1e-6), "{rho} {z}: {a} {b}");
        }
    }

    #[test]
    fn origin_is_the_particle_variance() {
        let p = params(&[("rho", 0.5)]);
        let x2 = crate::fluctuation::x2_fdt(&p, 0.0).unwrap().value;
        assert!((excess_laplace(&p, 0.0).unwrap() - x2).abs() < 1e-9 * x2);
        assert!((excess(&p, 0.0).unwrap() - x2).abs() < 1e-12);
    }

    #[test]
    fn profile_is_even_and_split_exact() {
        let p = params(&[("rho", 0.5), ("omega_max", 20.0)]);
        let z = [-30.0, -2.0, 2.0, 30.0];
        let rep = r2_profile(&p, &z).unwrap();
        assert!((rep.r2_total[0] - rep.r2_total[3]).abs() < 1e-14);
        assert!((rep.r2_excess_direct[1] - rep.r2_excess_direct[2]).abs() < 1e-14);
        assert!(rep.split_mismatch < 1e-9, "{}", rep.split_mismatch);
        assert!(rep.tail_fit.is_none());
    }

    #[test]
    fn excess_decays_to_zero() {
        let p = params(&[("rho", 0.2)]);
        let mut last = f64::MAX;
        for z in [1.0, 10.0, 100.0, 1000.0] {
            let v = excess_laplace(&p, z).unwrap();
            assert!(v > 0.0 && v < last);
            last = v;
        }
        assert!(last < 2e-4);
    }

    #[test]
    fn narrow_window_is_reported() {
        let p = params(&[("L", 2000.0)]);
        let z = geometric_grid(25.0, 60.0, 5);
        let vals: Vec<f64> = z.iter().map(|z| 1.0 / z).collect();
        assert!(matches!(
            fit_tail(&p, &z, &vals),
            Err(Error::WindowTooNarrow { points: 5, .. })
        ));
    }

    #[test]
    fn out_of_range_position() {
        let p = params(&[]);
        assert!(matches!(r2_profile(&p, &[70.0]), Err(Error::PositionOutOfRange { .. })));
    }
}
