//! Frequency distribution of the coupled modes and the particle energy.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{Estimate, Quadrature};
use crate::params::{damping_ratio, ModelParams};

/// Largest `eta / (m Omega)` accepted by the weak-coupling closed form.
pub const WEAK_COUPLING_LIMIT: f64 = 0.05;

/// Particle excess `nu(w) - nu0 = (eta/pi)(m w^2 + m Omega^2) / ((m w^2 - m Omega^2)^2 + eta^2 w^2)`.
pub fn excess(p: &ModelParams, w: f64) -> f64 {
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let d = (m * w * w - m * o2).powi(2) + (eta * w).powi(2);
    if d == 0.0 {
        // w = 0 at Omega = 0: the limit of the expression above
        return m / (PI * eta);
    }
    eta / PI * (m * w * w + m * o2) / d
}

/// Density of modes `nu0 + excess`.
pub fn nu(p: &ModelParams, w: f64) -> f64 {
    p.nu0() + excess(p, w)
}

/// `int_0^w excess`, from the antiderivative `atan((m w^2 - m Omega^2)/(eta w)) / pi`.
pub fn excess_count(p: &ModelParams, w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let at_zero = if o2 > 0.0 { -0.5 * PI } else { 0.0 };
    (((m * w * w - m * o2) / (eta * w)).atan() - at_zero) / PI
}

/// Expected number of modes in `[0, w]`: `nu0 w + int_0^w excess`.
pub fn counting_integral(p: &ModelParams, w: f64) -> f64 {
    p.nu0() * w.max(0.0) + excess_count(p, w)
}

/// Root count in one frequency bin against the integrated density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub expected: f64,
    /// Counting (Poisson) error `sqrt(expected)`.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingCheck {
    pub bins: Vec<CountingBin>,
    /// Largest `|count - expected| / std_error` over the bins.
    pub max_bin_deviation: f64,
    /// Largest `|#{roots <= w} - int_0^w nu|` over `[0, w_hi]`.
    pub max_cumulative_deviation: f64,
}

/// Compares sorted roots below `w_hi` with `nu` on `bins` equal bins.
pub fn counting_check(p: &ModelParams, roots: &[f64], w_hi: f64, bins: usize) -> Result<CountingCheck> {
    if bins == 0 || !(w_hi > 0.0) {
        return Err(Error::InvalidArgument("counting needs bins > 0 and w_hi > 0".into()));
    }
    if roots.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("roots must be sorted".into()));
    }
    let width = w_hi / bins as f64;
    let mut out = Vec::with_capacity(bins);
    let mut worst = 0.0f64;
    for b in 0..bins {
        let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
        let count = roots.iter().filter(|&&w| w > lo && w <= hi).count();
        let expected = counting_integral(p, hi) - counting_integral(p, lo);
        let std_error = expected.sqrt();
        worst = worst.max((count as f64 - expected).abs() / std_error);
        out.push(CountingBin {
            lo,
            hi,
            count,
            expected,
            std_error,
        });
    }
    let mut cumulative = 0.0f64;
    let inside: Vec<f64> = roots.iter().copied().filter(|&w| w <= w_hi).collect();
    for (k, &w) in inside.iter().enumerate() {
        let target = counting_integral(p, w);
        cumulative = cumulative
            .max((k as f64 - target).abs())
            .max((k as f64 + 1.0 - target).abs());
    }
    cumulative = cumulative.max((inside.len() as f64 - counting_integral(p, w_hi)).abs());
    Ok(CountingCheck {
        bins: out,
        max_bin_deviation: worst,
        max_cumulative_deviation: cumulative,
    })
}

/// Tabulated density on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub nu0: f64,
    pub omega: Vec<f64>,
    pub nu: Vec<f64>,
    pub excess: Vec<f64>,
}

impl SpectralDensity {
    pub fn tabulate(p: &ModelParams, grid: &[f64]) -> Result<Self> {
        if let Some(bad) = grid.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "frequency {bad} is not a finite non-negative value"
            )));
        }
        let ex: Vec<f64> = grid.par_iter().map(|&w| excess(p, w)).collect();
        Ok(SpectralDensity {
            nu0: p.nu0(),
            omega: grid.to_vec(),
            nu: ex.iter().map(|e| p.nu0() + e).collect(),
            excess: ex,
        })
    }
}

/// Resonance scale and interior seed points used by the quadratures.
fn peak_seeds(p: &ModelParams) -> (f64, Vec<f64>) {
    let o = p.omega();
    let width = p.eta() / p.m();
    if o == 0.0 {
        return (width, vec![width, 10.0 * width]);
    }
    let mut seeds = vec![o];
    for k in [0.5, 2.0, 8.0] {
        seeds.push(o - k * width);
        seeds.push(o + k * width);
    }
    seeds.retain(|w| *w > 0.0);
    (o, seeds)
}

/// `int_0^inf excess dw` by adaptive quadrature on `w = scale t / (1 - t)`.
pub fn sum_rule(p: &ModelParams) -> Result<Estimate> {
    let (scale, seeds) = peak_seeds(p);
    Quadrature::with_tolerances(1e-13, 1e-12).integrate_semi_infinite(|w| excess(p, w), 0.0, scale, &seeds)
}

/// `int_0^inf excess dw` from the residues of the even rational integrand
/// in the upper half plane.
pub fn sum_rule_residues(p: &ModelParams) -> f64 {
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let i = Complex64::i();
    if o2 == 0.0 {
        // (eta m / pi) / (m^2 w^2 + eta^2): single pole at i eta / m
        let pole = i * eta / m;
        let res = eta * m / PI / (2.0 * m * m * pole);
        return (i * PI * res).re;
    }
    // denominator = P1 P2, P1 = m w^2 + i eta w - m O^2, P2 = m w^2 - i eta w - m O^2;
    // both zeros of P2 lie in the upper half plane
    let disc = Complex64::new(4.0 * m * m * o2 - eta * eta, 0.0).sqrt();
    let r1 = (i * eta + disc) / (2.0 * m);
    let r2 = (i * eta - disc) / (2.0 * m);
    let num = |w: Complex64| w * w * m + m * o2;
    let dnum = |w: Complex64| w * 2.0 * m;
    let p1 = |w: Complex64| w * w * m + i * eta * w - m * o2;
    let dp1 = |w: Complex64| w * 2.0 * m + i * eta;
    let g = |w: Complex64| num(w) / p1(w) * (eta / (PI * m));
    let residue_sum = if (r1 - r2).norm() > 1e-6 * r1.norm() {
        (g(r1) - g(r2)) / (r1 - r2)
    } else {
        let w = (r1 + r2) * 0.5;
        (dnum(w) * p1(w) - num(w) * dp1(w)) / (p1(w) * p1(w)) * (eta / (PI * m))
    };
    // half of the full-line integral 2 pi i sum(res)
    (i * PI * residue_sum).re
}

/// One frequency group: the half-open interval `[lo, hi)` whose oscillators
/// sit in excitation level `level` with average occupation `occupation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationGroup {
    pub lo: f64,
    pub hi: f64,
    pub level: u32,
    pub occupation: f64,
}

/// Piecewise-constant occupation `sum_l N_lw`; frequencies outside every
/// group are in the ground state. A level may own several intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OccupationSpec {
    groups: Vec<OccupationGroup>,
}

impl OccupationSpec {
    pub fn ground() -> Self {
        Self::default()
    }

    pub fn new(mut groups: Vec<OccupationGroup>) -> Result<Self> {
        for g in &groups {
            if !(g.lo.is_finite() && g.hi.is_finite() && g.lo >= 0.0 && g.lo < g.hi) {
                return Err(Error::InvalidOccupation(format!(
                    "interval [{}, {}) is empty or invalid",
                    g.lo, g.hi
                )));
            }
            if g.level == 0 {
                return Err(Error::InvalidOccupation("levels start at 1".into()));
            }
            if !(g.occupation >= 0.0 && g.occupation <= g.level as f64) {
                return Err(Error::InvalidOccupation(format!(
                    "occupation {} outside [0, {}]",
                    g.occupation, g.level
                )));
            }
        }
        groups.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in groups.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::InvalidOccupation(format!(
                    "intervals [{}, {}) and [{}, {}) overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(OccupationSpec { groups })
    }

    /// Every frequency in one level with the given occupation.
    pub fn uniform(level: u32, occupation: f64) -> Result<Self> {
        Self::new(vec![OccupationGroup {
            lo: 0.0,
            hi: f64::MAX,
            level,
            occupation,
        }])
    }

    pub fn groups(&self) -> &[OccupationGroup] {
        &self.groups
    }

    /// `sum_l N_lw` at frequency `w`.
    pub fn occupation(&self, w: f64) -> f64 {
        self.groups
            .iter()
            .find(|g| w >= g.lo && w < g.hi)
            .map_or(0.0, |g| g.occupation)
    }

    fn edges(&self) -> Vec<f64> {
        self.groups.iter().flat_map(|g| [g.lo, g.hi]).collect()
    }
}

/// `E_p = int_0^{w_max} hbar w (1/2 + sum_l N_lw) excess(w) dw`.
pub fn particle_energy(p: &ModelParams, occ: &OccupationSpec) -> Result<Estimate> {
    particle_energy_to(p, occ, p.omega_max())
}

fn particle_energy_to(p: &ModelParams, occ: &OccupationSpec, w_max: f64) -> Result<Estimate> {
    let (_, mut points) = peak_seeds(p);
    points.extend(occ.edges());
    // geometric seeds keep the slowly decaying tail well resolved
    let mut w = 4.0 * p.omega().max(p.eta() / p.m());
    while w < w_max {
        points.push(w);
        w *= 4.0;
    }
    points.retain(|x| *x > 0.0 && *x < w_max);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let hbar = p.hbar();
    // integrate panel by panel so occupation jumps are always panel edges
    let mut edges = vec![0.0];
    edges.extend(points);
    edges.push(w_max);
    let quad = Quadrature::with_tolerances(1e-15, 1e-12);
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid_occ = occ.occupation(0.5 * (a + b));
        let g = |w: f64| hbar * w * (0.5 + mid_occ) * excess(p, w);
        let part = quad.integrate(g, a, b)?;
        total.value += part.value;
        total.error += part.error;
        total.intervals += part.intervals;
    }
    Ok(total)
}

/// Rate of change of `E_p` as the upper edge of a group with `occupation`
/// moves through `w`; the lower edge moves with the opposite sign.
pub fn edge_rate(p: &ModelParams, w: f64, occupation: f64) -> f64 {
    p.hbar() * w * occupation * excess(p, w)
}

/// `hbar Omega / 2 + (hbar eta / 2 pi m) ln(w_max / Omega)`, valid for
/// `eta / (m Omega) <= 0.05`.
pub fn ground_state_energy_weak_coupling(p: &ModelParams) -> Result<f64> {
    let ratio = damping_ratio(p)?;
    if ratio > WEAK_COUPLING_LIMIT {
        return Err(Error::OutsideWeakCoupling {
            ratio,
            limit: WEAK_COUPLING_LIMIT,
        });
    }
    Ok(closed_form(p))
}

fn closed_form(p: &ModelParams) -> f64 {
    let hbar = p.hbar();
    0.5 * hbar * p.omega() + hbar * p.eta() / (2.0 * PI * p.m()) * (p.omega_max() / p.omega()).ln()
}

/// Closed form and quadrature of the ground-state energy side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateReport {
    pub closed_form: f64,
    pub quadrature: f64,
    pub quadrature_error: f64,
    /// Parts beyond `hbar Omega / 2`.
    pub coupling_closed_form: f64,
    pub coupling_quadrature: f64,
    /// Relative difference of the totals.
    pub discrepancy: f64,
    /// Relative difference of the coupling parts.
    pub coupling_discrepancy: f64,
}

pub fn ground_state_report(p: &ModelParams) -> Result<GroundStateReport> {
    let closed = ground_state_energy_weak_coupling(p)?;
    let quad = particle_energy(p, &OccupationSpec::ground())?;
    let zero_point = 0.5 * p.hbar() * p.omega();
    let cc = closed - zero_point;
    let cq = quad.value - zero_point;
    Ok(GroundStateReport {
        closed_form: closed,
        quadrature: quad.value,
        quadrature_error: quad.error,
        coupling_closed_form: cc,
        coupling_quadrature: cq,
        discrepancy: (quad.value - closed).abs() / closed.abs(),
        coupling_discrepancy: (cq - cc).abs() / cc.abs(),
    })
}

/// Slope of the ground-state `E_p` against `ln w_max` between two cutoffs.
pub fn log_cutoff_slope(p: &ModelParams, w_lo: f64, w_hi: f64) -> Result<f64> {
    if !(w_lo > 0.0 && w_hi > w_lo) {
        return Err(Error::InvalidArgument("cutoffs must satisfy 0 < w_lo < w_hi".into()));
    }
    let g = OccupationSpec::ground();
    let lo = particle_energy_to(p, &g, w_lo)?.value;
    let hi = particle_energy_to(p, &g, w_hi)?.value;
    Ok((hi - lo) / (w_hi / w_lo).ln())
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
    fn excess_at_resonance_and_infinity() {
        let p = params(&[("rho", 0.05)]);
        let eta = p.eta();
        assert!((excess(&p, 1.0) - 2.0 / (PI * eta)).abs() < 1e-12);
        let w = 1e5;
        assert!((excess(&p, w) * w * w - eta / PI).abs() < 1e-6);
        assert!((nu(&p, 0.3) - p.nu0() - excess(&p, 0.3)).abs() < 1e-15);
    }

    #[test]
    fn sum_rule_quadrature_and_contour() {
        for (rho, m) in [(0.005, 1.0), (0.05, 1.0), (0.5, 1.0), (1.0, 1.0), (0.5, 3.0)] {
            let p = params(&[("rho", rho), ("m", m)]);
            let q = sum_rule(&p).unwrap().value;
            let c = sum_rule_residues(&p);
            assert!((q - 1.0).abs() < 1e-8, "{rho}: {q}");
            assert!((c - 1.0).abs() < 1e-12, "{rho}: {c}");
            assert!((excess_count(&p, 1e12) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_well_sum_rule_is_half() {
        let p = params(&[("Omega", 0.0)]);
        assert!((sum_rule(&p).unwrap().value - 0.5).abs() < 1e-8);
        assert!((sum_rule_residues(&p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn critically_damped_contour() {
        // eta = 2 m Omega gives a double pole
        let p = params(&[("rho", 1.0)]);
        assert!((sum_rule_residues(&p) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn occupation_validation() {
        let g = |lo, hi, level, occupation| OccupationGroup {
            lo,
            hi,
            level,
            occupation,
        };
        assert!(OccupationSpec::new(vec![g(0.0, 1.0, 1, 1.5)]).is_err());
        assert!(OccupationSpec::new(vec![g(0.0, 1.0, 1, 1.0), g(0.5, 2.0, 2, 1.0)]).is_err());
        assert!(OccupationSpec::new(vec![g(1.0, 1.0, 1, 1.0)]).is_err());
        let ok = OccupationSpec::new(vec![g(1.0, 2.0, 2, 2.0), g(0.0, 1.0, 1, 1.0)]).unwrap();
        assert_eq!(ok.occupation(1.0), 2.0);
        assert_eq!(ok.occupation(0.999), 1.0);
        assert_eq!(ok.occupation(2.0), 0.0);
    }

    #[test]
    fn first_excited_everywhere_triples_ground() {
        let p = params(&[("rho", 0.05), ("omega_max", 50.0)]);
        let e0 = particle_energy(&p, &OccupationSpec::ground()).unwrap().value;
        let e1 = particle_energy(&p, &OccupationSpec::uniform(1, 1.0).unwrap())
            .unwrap()
            .value;
        assert!((e1 - 3.0 * e0).abs() < 1e-10 * e1);
    }

    #[test]
    fn moving_an_edge_follows_edge_rate() {
        let p = params(&[("rho", 0.2)]);
        let energy = |hi: f64| {
            let occ = OccupationSpec::new(vec![OccupationGroup {
                lo: 0.5,
                hi,
                level: 1,
                occupation: 1.0,
            }])
            .unwrap();
            particle_energy(&p, &occ).unwrap().value
        };
        let h = 1e-4;
        for w in [0.8, 1.0, 1.7] {
            let d = (energy(w + h) - energy(w - h)) / (2.0 * h);
            assert!((d / edge_rate(&p, w, 1.0) - 1.0).abs() < 1e-5, "{w}: {d}");
        }
    }

    #[test]
    fn weak_coupling_closed_form() {
        let p = params(&[("rho", 1e-300)]);
        assert!((ground_state_energy_weak_coupling(&p).unwrap() - 0.5).abs() < 1e-12);
        let a = params(&[("rho", 0.005), ("omega_max", 100.0)]);
        let b = params(&[("rho", 0.005), ("omega_max", 200.0)]);
        let d = ground_state_energy_weak_coupling(&b).unwrap() - ground_state_energy_weak_coupling(&a).unwrap();
        assert!((d - a.eta() / (2.0 * PI) * 2f64.ln()).abs() < 1e-15);
        let strong = params(&[("rho", 0.5)]);
        assert!(matches!(
            ground_state_energy_weak_coupling(&strong),
            Err(Error::OutsideWeakCoupling { .. })
        ));
        assert_eq!(
            ground_state_energy_weak_coupling(&params(&[("Omega", 0.0)])),
            Err(Error::OmegaZero)
        );
    }

    #[test]
    fn cutoff_slope_matches_log_law() {
        let p = params(&[("rho", 0.005), ("omega_max", 1000.0)]);
        let slope = log_cutoff_slope(&p, 100.0, 1000.0).unwrap();
        let expected = p.hbar() * p.eta() / (2.0 * PI * p.m());
        assert!((slope / expected - 1.0).abs() < 0.03, "{slope} {expected}");
    }

    #[test]
    fn counting_integral_tracks_density() {
        let p = params(&[("rho", 0.3)]);
        let h = 1e-5;
        for w in [0.2, 1.0, 3.0] {
            let d = (counting_integral(&p, w + h) - counting_integral(&p, w - h)) / (2.0 * h);
            assert!((d - nu(&p, w)).abs() < 1e-6 * nu(&p, w));
        }
    }

    #[test]
    fn root_histogram_follows_density() {
        let p = params(&[("rho", 0.25), ("L", 2000.0)]);
        let roots: Vec<f64> = crate::modes::secular_roots_below(&p, 5.0)
            .unwrap()
            .iter()
            .map(|r| r.omega)
            .collect();
        let check = counting_check(&p, &roots, 5.0, 25).unwrap();
        assert!(check.max_bin_deviation < 3.0, "{check:?}");
        assert!(check.max_cumulative_deviation <= 1.0);
        assert!(counting_check(&p, &[2.0, 1.0], 5.0, 5).is_err());
    }
}
