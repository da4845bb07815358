//! Globally adaptive 21-point Gauss–Kronrod quadrature.

// node and weight tables are quoted to their published digits
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Single 21-point Kronrod panel on `[a, b]`; returns (value, error).
pub fn gauss_kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jj = 2 * j + 1;
        let dx = half * XGK[jj];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jj] = f1;
        fv2[jj] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jj] * (f1 + f2);
        res_abs += WGK[jj] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jj = 2 * j;
        let dx = half * XGK[jj];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jj] = f1;
        fv2[jj] = f2;
        res_k += WGK[jj] * (f1 + f2);
        res_abs += WGK[jj] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_panels: 20_000,
        }
    }
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Quadrature {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    /// Integrates over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Estimate> {
        self.integrate_with_points(f, a, b, &[])
    }

    /// Integrates over `[a, b]`, seeding the subdivision with interior
    /// `points` (peaks, kinks, oscillation nodes). Points outside the
    /// interval are ignored.
    pub fn integrate_with_points<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, points: &[f64]) -> Result<Estimate> {
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
                intervals: 0,
            });
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut cuts: Vec<f64> = points
            .iter()
            .copied()
            .filter(|p| p.is_finite() && *p > lo && *p < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(lo);
        edges.extend(cuts);
        edges.push(hi);

        let mut heap = BinaryHeap::new();
        for w in edges.windows(2) {
            let (value, error) = gauss_kronrod21(&f, w[0], w[1]);
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
        let mut frozen: Vec<Panel> = Vec::new();
        let mut total: f64 = heap.iter().map(|p| p.value).sum();
        let mut err: f64 = heap.iter().map(|p| p.error).sum();

        loop {
            let tol = self.abs_tol.max(self.rel_tol * total.abs());
            if err <= tol {
                break;
            }
            if heap.len() + frozen.len() >= self.max_panels {
                break;
            }
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 4.0 * f64::EPSILON * mid.abs() {
                frozen.push(worst);
                continue;
            }
            let (v1, e1) = gauss_kronrod21(&f, worst.a, mid);
            let (v2, e2) = gauss_kronrod21(&f, mid, worst.b);
            total += v1 + v2 - worst.value;
            err += e1 + e2 - worst.error;
            heap.push(Panel {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Panel {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }

        let mut panels: Vec<Panel> = heap.into_vec();
        panels.extend(frozen);
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let estimate = Estimate {
            value: sign * value,
            error,
            intervals: panels.len(),
        };
        if !value.is_finite() || error > self.abs_tol.max(self.rel_tol * value.abs()) * 10.0 {
            return Err(Error::QuadratureNotConverged {
                estimate: estimate.value,
                error,
            });
        }
        Ok(estimate)
    }

    /// Integrates over `[a, inf)` through the map `x = a + scale t / (1 - t)`.
    /// `seeds` are abscissae in the original variable that should start as
    /// panel edges.
    pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        scale: f64,
        seeds: &[f64],
    ) -> Result<Estimate> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(
                "semi-infinite map scale must be positive".into(),
            ));
        }
        let mapped = |t: f64| {
            let one_minus = 1.0 - t;
            if one_minus <= 0.0 {
                return 0.0;
            }
            let x = a + scale * t / one_minus;
            let v = f(x) * scale / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let points: Vec<f64> = seeds
            .iter()
            .filter(|x| **x > a)
            .map(|x| (x - a) / (x - a + scale))
            .collect();
        self.integrate_with_points(mapped, 0.0, 1.0, &points)
    }
}

impl Quadrature {
    /// Integrates an oscillatory `f` over `[a, b]` one `period` at a time,
    /// with `points` as extra panel edges. Panel results are summed in order.
    pub fn integrate_periods<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        period: f64,
        points: &[f64],
    ) -> Result<Estimate> {
        if !(period > 0.0) || !(b >= a) {
            return Err(Error::InvalidArgument(
                "periodic panels need period > 0 and a <= b".into(),
            ));
        }
        let count = ((b - a) / period).ceil();
        if count > 1e8 {
            return Err(Error::InvalidArgument(format!("{count} panels requested")));
        }
        let mut edges: Vec<f64> = (0..count as usize).map(|j| a + j as f64 * period).collect();
        edges.extend(points.iter().copied().filter(|x| *x > a && *x < b));
        edges.push(b);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let mut total = Estimate {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        };
        for w in edges.windows(2) {
            let part = self.integrate(&f, w[0], w[1])?;
            total.value += part.value;
            total.error += part.error;
            total.intervals += part.intervals;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = Quadrature::default();
        let a = q.integrate(f64::sin, 0.0, 1.0).unwrap().value;
        let b = q.integrate(f64::sin, 1.0, 0.0).unwrap().value;
        assert_eq!(a, -b);
    }

    #[test]
    fn narrow_lorentzian_on_half_line() {
        // integral of w/pi / ((x-1)^2 + w^2) over [0, inf) = 1/2 + atan(1/w)/pi
        let w = 1e-4;
        let q = Quadrature::default();
        let r = q
            .integrate_semi_infinite(|x| w / PI / ((x - 1.0).powi(2) + w * w), 0.0, 1.0, &[1.0])
            .unwrap();
        let exact = 0.5 + (1.0 / w).atan() / PI;
        assert!((r.value - exact).abs() < 1e-10, "{} vs {}", r.value, exact);
    }

    #[test]
    fn algebraic_tail() {
        let q = Quadrature::default();
        let r = q
            .integrate_semi_infinite(|x| 1.0 / (1.0 + x * x), 0.0, 1.0, &[])
            .unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_panels() {
        let q = Quadrature::with_tolerances(1e-15, 1e-12);
        let k = 37.0;
        let r = q
            .integrate_periods(|x| (k * x).cos() / (1.0 + x * x), 0.0, 20.0, 2.0 * PI / k, &[0.5])
            .unwrap();
        let reference = q.integrate(|x| (k * x).cos() / (1.0 + x * x), 0.0, 20.0);
        if let Ok(reference) = reference {
            assert!((r.value - reference.value).abs() < 1e-12);
        }
        let exact_inf = PI / 2.0 * (-k).exp();
        // tail beyond 20 is below 1/(k 20^2)
        assert!((r.value - exact_inf).abs() < 1.0 / (k * 400.0));
    }

    #[test]
    fn divergent_integral_reports_failure() {
        let q = Quadrature {
            max_panels: 200,
            ..Default::default()
        };
        assert!(q.integrate_semi_infinite(|x| 1.0 / (1.0 + x), 0.0, 1.0, &[]).is_err());
    }
}
