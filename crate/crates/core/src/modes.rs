//! Analytic normal modes: secular roots, transformation coefficients and
//! the string profile.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::roots::{bisect, brent};
use crate::numerics::series::{cos_minus_one_series, shifted_square_sum, shifted_square_sum_sq};
use crate::oracle::{OracleSpectrum, QuadraticForms};
use crate::params::ModelParams;

/// Relative tolerance on every secular root.
pub const ROOT_TOLERANCE: f64 = 1e-12;
/// Relative guard on `|omega_n^2 - omega_q^2|` in the coefficient formula.
pub const RESONANCE_TOLERANCE: f64 = 1e-12;

/// One root of the secular equation with its branch index `k`: the root lies
/// between the tangent poles at `(k - 1/2) c` and `(k + 1/2) c`, `c = 2 pi s / L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularRoot {
    pub omega: f64,
    pub branch: usize,
}

/// `Omega^2 - w^2 - (eta w / m) tan(L w / 2s)`.
pub fn secular_function(p: &ModelParams, w: f64) -> f64 {
    p.omega().powi(2) - w * w - p.eta() * w / p.m() * (p.length() * w / (2.0 * p.s())).tan()
}

/// Secular function multiplied by `sin(pi t)` on branch `k`, where
/// `w = (k - 1/2 + t) c`. It is finite on the closed bracket, positive at
/// `t = 0` and negative at `t = 1`.
fn branch_function(p: &ModelParams, k: usize, t: f64) -> f64 {
    let c = p.mode_spacing();
    let w = (k as f64 - 0.5 + t) * c;
    (p.omega().powi(2) - w * w) * (PI * t).sin() + p.eta() * w / p.m() * (PI * t).cos()
}

fn solve_branch(p: &ModelParams, k: usize) -> Result<SecularRoot> {
    let c = p.mode_spacing();
    let lo = if k == 0 { 0.5 } else { 0.0 };
    let f = |t: f64| branch_function(p, k, t);
    let (flo, fhi) = (f(lo), f(1.0));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::RootNotBracketed { branch: k });
    }
    let offset = k as f64 - 0.5;
    let omega_lo = (offset + lo).max(1e-300) * c;
    let xtol = 0.25 * ROOT_TOLERANCE * omega_lo / c;
    let found = match brent(f, lo, 1.0, xtol, 200) {
        Some(r) if r.converged => r,
        _ => bisect(f, lo, 1.0, xtol, 400).ok_or(Error::RootNotBracketed { branch: k })?,
    };
    let omega = (offset + found.root) * c;
    let rel_width = found.width * c / omega;
    if !found.converged || rel_width > ROOT_TOLERANCE {
        return Err(Error::ToleranceNotReached {
            branch: k,
            width: rel_width,
        });
    }
    Ok(SecularRoot { omega, branch: k })
}

fn first_branch(p: &ModelParams) -> usize {
    // at Omega = 0 the first branch only holds the zero mode
    if p.omega() == 0.0 {
        1
    } else {
        0
    }
}

/// The `n_roots` smallest positive roots, one per branch, solved in parallel.
pub fn secular_roots(p: &ModelParams, n_roots: usize) -> Result<Vec<SecularRoot>> {
    if n_roots == 0 {
        return Err(Error::InvalidArgument("n_roots must be at least 1".into()));
    }
    let k0 = first_branch(p);
    (k0..k0 + n_roots).into_par_iter().map(|k| solve_branch(p, k)).collect()
}

/// All positive roots `<= w_max`.
pub fn secular_roots_below(p: &ModelParams, w_max: f64) -> Result<Vec<SecularRoot>> {
    let c = p.mode_spacing();
    let k0 = first_branch(p);
    // branch k starts at (k - 1/2) c
    let k_end = (w_max / c + 0.5).floor() as usize + 1;
    if k_end <= k0 {
        return Ok(Vec::new());
    }
    let mut roots: Vec<SecularRoot> = (k0..k_end)
        .into_par_iter()
        .map(|k| solve_branch(p, k))
        .collect::<Result<_>>()?;
    roots.retain(|r| r.omega <= w_max);
    Ok(roots)
}

/// `u_0q` from the large-`L` normalization
/// `eta w / sqrt((m w^2 - m Omega^2)^2 + eta^2 w^2)`.
pub fn u0_asymptotic(p: &ModelParams, w: f64) -> f64 {
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let d = (m * w * w - m * o2).powi(2) + (eta * w).powi(2);
    eta * w / d.sqrt()
}

/// `u_0q` normalized exactly at finite `L`.
///
/// Imposing `B_qq = omega_q^2` with the full mode sums adds
/// `(2 m s eta / L)(w^2 + Omega^2)` to the denominator of the large-`L`
/// form; the ratio to it is `sqrt(nu0 / nu(w))`.
pub fn u0_exact(p: &ModelParams, w: f64) -> f64 {
    let (m, o2, eta) = (p.m(), p.omega().powi(2), p.eta());
    let d = (m * w * w - m * o2).powi(2) + (eta * w).powi(2);
    let finite = 2.0 * m * p.s() * eta / p.length() * (w * w + o2);
    eta * w / (d + finite).sqrt()
}

/// Exact normal modes of the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    params: ModelParams,
    omega: Vec<f64>,
    branch: Vec<usize>,
    u0: Vec<f64>,
    u0_asymptotic: Vec<f64>,
    /// `kappa_n` for the rows of `unq`, index 0 being the particle.
    kappa: Vec<f64>,
    /// Rows `n = 1..N`, one column per mode.
    unq: DMatrix<f64>,
}

/// Transformation coefficients `u_0q` and `u_nq`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub u0: DVector<f64>,
    pub unq: DMatrix<f64>,
}

/// Solves the secular equation for the `n_roots` lowest positive modes and
/// fills the coefficients for the `N = n_modes` string rows.
pub fn solve_secular(p: &ModelParams, n_roots: usize) -> Result<ModeSpectrum> {
    ModeSpectrum::from_roots(p, &secular_roots(p, n_roots)?)
}

/// As [`solve_secular`], for every root `<= w_max`.
pub fn solve_secular_below(p: &ModelParams, w_max: f64) -> Result<ModeSpectrum> {
    ModeSpectrum::from_roots(p, &secular_roots_below(p, w_max)?)
}

/// Every root `<= w_max` with `u_0q` only; the `u_nq` matrix is left empty.
/// Meant for long strings where only particle observables are needed.
pub fn solve_frequencies_below(p: &ModelParams, w_max: f64) -> Result<ModeSpectrum> {
    Ok(ModeSpectrum::particle_only(p, &secular_roots_below(p, w_max)?))
}

/// `u_nq = (2m / rho L) (w_q^2 - Omega^2) / (w_n^2 - w_q^2) u_0q` for `n = 1..N`.
pub fn coefficients(spec: &ModeSpectrum, p: &ModelParams) -> Result<Coefficients> {
    let unq = analytic_unq(p, &spec.omega, &spec.u0)?;
    Ok(Coefficients {
        u0: DVector::from_vec(spec.u0.clone()),
        unq,
    })
}

fn analytic_unq(p: &ModelParams, omega: &[f64], u0: &[f64]) -> Result<DMatrix<f64>> {
    let n = p.n_modes();
    let mu = p.mass_ratio();
    let o2 = p.omega().powi(2);
    let mut unq = DMatrix::zeros(n, omega.len());
    for (q, (&w, &u)) in omega.iter().zip(u0).enumerate() {
        let lam = w * w;
        let cq = 2.0 * mu * (lam - o2) * u;
        for row in 0..n {
            let wn2 = p.omega_n(row + 1).powi(2);
            let gap = wn2 - lam;
            if gap.abs() < RESONANCE_TOLERANCE * wn2 {
                return Err(Error::ResonantDenominator { n: row + 1, q });
            }
            unq[(row, q)] = cq / gap;
        }
    }
    Ok(unq)
}

impl ModeSpectrum {
    fn from_roots(p: &ModelParams, roots: &[SecularRoot]) -> Result<Self> {
        let mut spec = Self::particle_only(p, roots);
        spec.unq = analytic_unq(p, &spec.omega, &spec.u0)?;
        spec.kappa.extend((1..=p.n_modes()).map(|n| p.omega_n(n).powi(2)));
        Ok(spec)
    }

    fn particle_only(p: &ModelParams, roots: &[SecularRoot]) -> Self {
        let omega: Vec<f64> = roots.iter().map(|r| r.omega).collect();
        ModeSpectrum {
            params: *p,
            u0: omega.iter().map(|&w| u0_exact(p, w)).collect(),
            u0_asymptotic: omega.iter().map(|&w| u0_asymptotic(p, w)).collect(),
            branch: roots.iter().map(|r| r.branch).collect(),
            kappa: vec![2.0 * p.m() * p.omega().powi(2) / (p.rho() * p.length())],
            unq: DMatrix::zeros(0, omega.len()),
            omega,
        }
    }

    /// Whether the `u_nq` rows were computed.
    pub fn has_string_coefficients(&self) -> bool {
        self.unq.nrows() > 0
    }

    fn require_string_coefficients(&self) -> Result<()> {
        if self.has_string_coefficients() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "spectrum was solved without string coefficients".into(),
            ))
        }
    }

    /// Spectrum of a finite system taken from the generalized eigensolver.
    /// The transformation is exact for that system, which makes it the
    /// reference for round trips between coordinates and mode amplitudes.
    pub fn from_oracle(p: &ModelParams, forms: &QuadraticForms, spec: &OracleSpectrum) -> Self {
        let v = spec.modes();
        let omega: Vec<f64> = spec.omega().iter().copied().collect();
        let rows = forms.dim() - 1;
        ModeSpectrum {
            params: *p,
            u0_asymptotic: omega.iter().map(|&w| u0_asymptotic(p, w)).collect(),
            branch: (0..omega.len()).collect(),
            u0: (0..omega.len()).map(|q| v[(0, q)]).collect(),
            kappa: forms.kappa().iter().copied().collect(),
            unq: v.rows(1, rows).into_owned(),
            omega,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn len(&self) -> usize {
        self.omega.len()
    }
    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
    pub fn branch(&self) -> &[usize] {
        &self.branch
    }
    /// Wave vectors `q = omega / s`.
    pub fn q(&self) -> Vec<f64> {
        self.omega.iter().map(|w| w / self.params.s()).collect()
    }
    pub fn u0(&self) -> &[f64] {
        &self.u0
    }
    pub fn u0_asymptotic(&self) -> &[f64] {
        &self.u0_asymptotic
    }
    pub fn unq(&self) -> &DMatrix<f64> {
        &self.unq
    }

    /// Largest `|Omega^2 - w^2 - (eta w/m) tan(L w/2s)|` scaled by `Omega^2 + w^2`.
    pub fn secular_residual(&self) -> f64 {
        let o2 = self.params.omega().powi(2);
        self.omega
            .iter()
            .map(|&w| {
                // multiply through by cos to stay finite near the poles
                let arg = self.params.length() * w / (2.0 * self.params.s());
                let r = (o2 - w * w) * arg.cos() - self.params.eta() * w / self.params.m() * arg.sin();
                r.abs() / (o2 + w * w)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `q` from the quantization condition
    /// `q = 2 pi k / L - (2/L) atan(m s q / eta - m Omega^2 / (eta s q))`.
    pub fn quantization_residual(&self) -> f64 {
        let p = &self.params;
        let (m, s, eta, o2, l) = (p.m(), p.s(), p.eta(), p.omega().powi(2), p.length());
        self.omega
            .iter()
            .zip(&self.branch)
            .map(|(&w, &k)| {
                let q = w / s;
                let x = m * s * q / eta - m * o2 / (eta * s * q);
                let rhs = 2.0 * PI * k as f64 / l - 2.0 / l * x.atan();
                (q - rhs).abs() / q
            })
            .fold(0.0, f64::max)
    }

    fn check_len(&self, amplitudes: &[f64]) -> Result<()> {
        if amplitudes.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: amplitudes.len(),
            });
        }
        Ok(())
    }

    /// Particle coordinate `x = (sqrt 2 / L) sum_q u_0q eta_q`.
    pub fn reconstruct_x(&self, amplitudes: &[f64]) -> Result<f64> {
        self.check_len(amplitudes)?;
        let s: f64 = self.u0.iter().zip(amplitudes).map(|(u, a)| u * a).sum();
        Ok(2f64.sqrt() / self.params.length() * s)
    }

    /// Mode amplitudes `eta_q = sum_n (kappa_n / w_q^2) u_nq xi_n` from the
    /// coordinates `xi` (particle first).
    pub fn project_to_modes(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.require_string_coefficients()?;
        let rows = self.unq.nrows() + 1;
        if xi.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: xi.len(),
            });
        }
        self.omega
            .iter()
            .enumerate()
            .map(|(q, &w)| {
                if w <= 0.0 {
                    return Err(Error::ZeroFrequency);
                }
                let mut acc = self.kappa[0] * self.u0[q] * xi[0];
                for n in 1..rows {
                    acc += self.kappa[n] * self.unq[(n - 1, q)] * xi[n];
                }
                Ok(acc / (w * w))
            })
            .collect()
    }

    /// Coordinates `xi_n = sum_q u_nq eta_q`, particle first.
    pub fn coordinates(&self, amplitudes: &[f64]) -> Result<Vec<f64>> {
        self.check_len(amplitudes)?;
        self.require_string_coefficients()?;
        let a = DVector::from_column_slice(amplitudes);
        let mut out = vec![self.u0.iter().zip(amplitudes).map(|(u, x)| u * x).sum()];
        out.extend((&self.unq * a).iter().copied());
        Ok(out)
    }

    fn check_positions(&self, z: &[f64]) -> Result<()> {
        let half = 0.5 * self.params.length();
        match z.iter().find(|v| !(v.abs() <= half)) {
            Some(&bad) => Err(Error::PositionOutOfRange { z: bad }),
            None => Ok(()),
        }
    }

    /// String displacement from the closed form
    /// `R(z) = (sqrt 2/L) sum_q eta_q u_0q [cos(z w/s) + m(Omega^2 - w^2)/(eta w) sin(|z| w/s)]`.
    pub fn string_profile(&self, amplitudes: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(amplitudes)?;
        self.check_positions(z)?;
        let p = &self.params;
        let pref = 2f64.sqrt() / p.length();
        let o2 = p.omega().powi(2);
        Ok(z.iter()
            .map(|&zz| {
                let mut acc = 0.0;
                for (q, &w) in self.omega.iter().enumerate() {
                    let k = w / p.s();
                    let beta = p.m() * (o2 - w * w) / (p.eta() * w);
                    acc += amplitudes[q] * self.u0[q] * ((zz * k).cos() + beta * (zz.abs() * k).sin());
                }
                pref * acc
            })
            .collect())
    }

    /// String displacement from the Fourier route
    /// `R(z) = x + (sqrt 2/L) sum_q eta_q sum_{n>=1} u_nq (cos(2 pi n z/L) - 1)`,
    /// with the `n` sum carried to infinity.
    pub fn string_profile_fourier(&self, amplitudes: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(amplitudes)?;
        self.check_positions(z)?;
        let p = &self.params;
        let pref = 2f64.sqrt() / p.length();
        let c = p.mode_spacing();
        let o2 = p.omega().powi(2);
        let x = self.reconstruct_x(amplitudes)?;
        Ok(z.par_iter()
            .map(|&zz| {
                let lambda = 2.0 * PI * zz / p.length();
                let mut acc = 0.0;
                for (q, &w) in self.omega.iter().enumerate() {
                    let cq = 2.0 * p.mass_ratio() * (w * w - o2) * self.u0[q];
                    acc += amplitudes[q] * cq / (c * c) * cos_minus_one_series(lambda, w / c);
                }
                x + pref * acc
            })
            .collect())
    }

    /// `(max |A_pq - delta_pq|, max |B_pq - w_q^2 delta_pq| / max w_q^2)` with
    /// the sums over the string modes carried to infinity.
    pub fn normalization_residual(&self) -> (f64, f64) {
        let p = &self.params;
        let c2 = p.mode_spacing().powi(2);
        let mu = p.mass_ratio();
        let o2 = p.omega().powi(2);
        let kappa0 = 2.0 * p.m() * o2 / (p.rho() * p.length());
        let lam: Vec<f64> = self.omega.iter().map(|w| w * w).collect();
        let sums: Vec<(f64, f64)> = lam
            .par_iter()
            .map(|&l| {
                (
                    shifted_square_sum(l / c2, 1) / c2,
                    shifted_square_sum_sq(l / c2, 1) / (c2 * c2),
                )
            })
            .collect();
        let cq: Vec<f64> = lam.iter().zip(&self.u0).map(|(l, u)| 2.0 * mu * (l - o2) * u).collect();
        let sq: Vec<f64> = cq.iter().zip(&sums).map(|(c, s)| c * s.0).collect();
        let u = &self.u0;
        let n = self.len();
        let wmax = lam.iter().cloned().fold(0.0, f64::max);
        let mut ra: f64 = 0.0;
        let mut rb: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (pp, bb) = if i == j {
                    let (s, sp) = sums[i];
                    (cq[i] * cq[i] * sp, cq[i] * cq[i] * (s + lam[i] * sp))
                } else {
                    let d = lam[i] - lam[j];
                    (
                        cq[i] * cq[j] * (sums[i].0 - sums[j].0) / d,
                        cq[i] * cq[j] * (lam[i] * sums[i].0 - lam[j] * sums[j].0) / d,
                    )
                };
                let a = pp + 2.0 * sq[i] * sq[j] - 2.0 * (u[j] * sq[i] + u[i] * sq[j]) + 2.0 * (1.0 + mu) * u[i] * u[j];
                let b = kappa0 * u[i] * u[j] + bb;
                let (ta, tb) = if i == j { (1.0, lam[i]) } else { (0.0, 0.0) };
                ra = ra.max((a - ta).abs());
                rb = rb.max((b - tb).abs());
            }
        }
        (ra, rb / wmax)
    }

    /// CSV with columns `index, q_n, omega_q, u0q`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "q_n", "omega_q", "u0q"])
            .map_err(crate::oracle::csv_err)?;
        for (i, (qv, (wv, uv))) in self.q().iter().zip(self.omega.iter().zip(&self.u0)).enumerate() {
            w.write_record(&[
                i.to_string(),
                format!("{qv:.16e}"),
                format!("{wv:.16e}"),
                format!("{uv:.16e}"),
            ])
            .map_err(crate::oracle::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

const CACHE_MAGIC: &[u8; 8] = b"PLMODES1";

/// Hex SHA-256 of the parameters and root count.
pub fn cache_key(p: &ModelParams, n_roots: usize) -> String {
    let mut h = Sha256::new();
    h.update(p.to_config_string().as_bytes());
    h.update(format!("n_roots = {n_roots}\n").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, p: &ModelParams, n_roots: usize) -> PathBuf {
    dir.join(format!("{}.modes", cache_key(p, n_roots)))
}

/// On-disk layout of a cached spectrum; parameters are implied by the key.
#[derive(Serialize, Deserialize)]
struct CacheRecord {
    magic: [u8; 8],
    branch: Vec<usize>,
    omega: Vec<f64>,
    u0: Vec<f64>,
    u0_asymptotic: Vec<f64>,
    kappa: Vec<f64>,
    rows: usize,
    unq: Vec<f64>,
}

impl ModeSpectrum {
    fn encode(&self) -> Vec<u8> {
        let record = CacheRecord {
            magic: *CACHE_MAGIC,
            branch: self.branch.clone(),
            omega: self.omega.clone(),
            u0: self.u0.clone(),
            u0_asymptotic: self.u0_asymptotic.clone(),
            kappa: self.kappa.clone(),
            rows: self.unq.nrows(),
            unq: self.unq.as_slice().to_vec(),
        };
        bincode::serialize(&record).expect("plain vectors always serialize")
    }

    fn decode(p: &ModelParams, data: &[u8]) -> Option<Self> {
        let r: CacheRecord = bincode::deserialize(data).ok()?;
        let n = r.omega.len();
        let consistent = r.magic == *CACHE_MAGIC
            && [r.branch.len(), r.u0.len(), r.u0_asymptotic.len()]
                .iter()
                .all(|&k| k == n)
            && r.kappa.len() == r.rows + 1
            && r.unq.len() == r.rows * n;
        if !consistent {
            return None;
        }
        Some(ModeSpectrum {
            params: *p,
            unq: DMatrix::from_vec(r.rows, n, r.unq),
            omega: r.omega,
            branch: r.branch,
            u0: r.u0,
            u0_asymptotic: r.u0_asymptotic,
            kappa: r.kappa,
        })
    }

    /// Writes the binary cache entry for `(params, len)` into `dir`.
    pub fn save_cache(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = cache_path(dir, &self.params, self.len());
        fs::File::create(&path)?.write_all(&self.encode())?;
        Ok(path)
    }

    /// Reads a cache entry; `None` when absent or unreadable.
    pub fn load_cache(dir: &Path, p: &ModelParams, n_roots: usize) -> Option<Self> {
        let mut data = Vec::new();
        fs::File::open(cache_path(dir, p, n_roots))
            .ok()?
            .read_to_end(&mut data)
            .ok()?;
        Self::decode(p, &data)
    }
}

/// [`solve_secular`] backed by the on-disk cache in `dir`.
pub fn solve_secular_cached(p: &ModelParams, n_roots: usize, dir: &Path) -> Result<ModeSpectrum> {
    if let Some(spec) = ModeSpectrum::load_cache(dir, p, n_roots) {
        return Ok(spec);
    }
    let spec = solve_secular(p, n_roots)?;
    spec.save_cache(dir)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_condensed_forms, build_forms, diagonalize};
    use crate::params::{make_params, ParamMap};

    fn params(pairs: &[(&str, f64)]) -> ModelParams {
        let mut map: ParamMap = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        map.entry("omega_max".into()).or_insert(100.0);
        make_params(&map).unwrap()
    }

    #[test]
    fn one_root_per_branch() {
        let p = params(&[]);
        let spec = solve_secular(&p, 200).unwrap();
        let c = p.mode_spacing();
        for (w, k) in spec.omega().iter().zip(spec.branch()) {
            let lo = (*k as f64 - 0.5).max(0.0) * c;
            let hi = (*k as f64 + 0.5) * c;
            assert!(*w > lo && *w < hi);
        }
        assert!(spec.omega().windows(2).all(|w| w[0] < w[1]));
        assert!(spec.secular_residual() < 1e-10, "{}", spec.secular_residual());
    }

    #[test]
    fn quantization_condition_is_an_identity() {
        let p = params(&[("rho", 0.05)]);
        let spec = solve_secular(&p, 300).unwrap();
        assert!(spec.quantization_residual() < 1e-12, "{}", spec.quantization_residual());
    }

    #[test]
    fn weak_coupling_root_tends_to_omega() {
        let p = params(&[("rho", 1e-9), ("L", 100.3)]);
        let spec = solve_secular(&p, 40).unwrap();
        let nearest = spec.omega().iter().map(|w| (w - 1.0).abs()).fold(f64::MAX, f64::min);
        assert!(nearest < 1e-6, "{nearest}");
    }

    #[test]
    fn u0_is_one_on_resonance_and_bounded() {
        let p = params(&[]);
        assert!((u0_asymptotic(&p, 1.0) - 1.0).abs() < 1e-15);
        for w in [0.01, 0.5, 1.0, 3.0, 40.0] {
            let u = u0_exact(&p, w);
            assert!(u > 0.0 && u <= 1.0);
            assert!(u <= u0_asymptotic(&p, w));
        }
        let far = params(&[("L", 1e12)]);
        assert!((u0_exact(&far, 0.7) / u0_asymptotic(&far, 0.7) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_well_skips_the_zero_mode() {
        let p = params(&[("Omega", 0.0)]);
        let spec = solve_secular(&p, 5).unwrap();
        assert_eq!(spec.branch()[0], 1);
        assert!(spec.omega()[0] > 0.5 * p.mode_spacing());
    }

    #[test]
    fn roots_match_condensed_oracle() {
        let p = params(&[("n_modes", 64.0), ("omega_max", 2.0)]);
        let oracle = diagonalize(&build_condensed_forms(&p, 6)).unwrap();
        let spec = solve_secular_below(&p, p.omega_n(32)).unwrap();
        for (q, w) in spec.omega().iter().enumerate() {
            let rel = (oracle.omega()[q] - w).abs() / w;
            assert!(rel < 1e-9, "q={q}: {rel}");
        }
    }

    #[test]
    fn exact_normalization_orthonormalizes() {
        let p = params(&[]);
        let spec = solve_secular(&p, 40).unwrap();
        let (ra, rb) = spec.normalization_residual();
        assert!(ra < 1e-9 && rb < 1e-9, "{ra} {rb}");
    }

    #[test]
    fn resonance_guard() {
        let p = params(&[("n_modes", 4.0)]);
        let res = analytic_unq(&p, &[p.omega_n(2)], &[0.5]);
        assert_eq!(res, Err(Error::ResonantDenominator { n: 2, q: 0 }));
    }

    #[test]
    fn single_amplitude_and_zero_profile() {
        let p = params(&[]);
        let spec = solve_secular(&p, 10).unwrap();
        let mut a = vec![0.0; 10];
        assert_eq!(spec.reconstruct_x(&a).unwrap(), 0.0);
        a[3] = 1.0;
        let x = spec.reconstruct_x(&a).unwrap();
        assert!((x - 2f64.sqrt() * spec.u0()[3] / p.length()).abs() < 1e-16);
        let r0 = spec.string_profile(&a, &[0.0]).unwrap()[0];
        assert!((r0 - x).abs() < 1e-15);
        assert!(matches!(
            spec.reconstruct_x(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            spec.string_profile(&a, &[60.0]),
            Err(Error::PositionOutOfRange { .. })
        ));
    }

    #[test]
    fn closed_form_profile_matches_fourier_route() {
        let p = params(&[("n_modes", 128.0), ("omega_max", 2.0)]);
        let spec = solve_secular(&p, 128).unwrap();
        let amps: Vec<f64> = (0..128).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0).collect();
        let z: Vec<f64> = (0..=10).map(|i| -50.0 + 10.0 * i as f64).collect();
        let a = spec.string_profile(&amps, &z).unwrap();
        let b = spec.string_profile_fourier(&amps, &z).unwrap();
        let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8 * scale, "{x} {y}");
        }
        for i in 0..z.len() {
            assert!((a[i] - a[z.len() - 1 - i]).abs() < 1e-15 * scale);
        }
    }

    #[test]
    fn oracle_round_trip() {
        let p = params(&[("n_modes", 48.0)]);
        let forms = build_forms(&p);
        let oracle = diagonalize(&forms).unwrap();
        let spec = ModeSpectrum::from_oracle(&p, &forms, &oracle);
        let xi: Vec<f64> = (0..49).map(|i| (0.3 * i as f64 + 0.4).sin()).collect();
        let eta = spec.project_to_modes(&xi).unwrap();
        let x = spec.reconstruct_x(&eta).unwrap();
        let direct = 2f64.sqrt() * xi[0] / p.length();
        assert!((x - direct).abs() < 1e-10 * direct.abs(), "{x} {direct}");
        let back = spec.coordinates(&eta).unwrap();
        for (u, v) in back.iter().zip(&xi) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = params(&[("n_modes", 8.0)]);
        let a = solve_secular_cached(&p, 12, dir.path()).unwrap();
        let b = ModeSpectrum::load_cache(dir.path(), &p, 12).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache_key(&p, 12).len(), 64);
        assert_ne!(cache_key(&p, 12), cache_key(&p, 13));
        let path = cache_path(dir.path(), &p, 12);
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() / 2);
        fs::write(&path, bytes).unwrap();
        assert!(ModeSpectrum::load_cache(dir.path(), &p, 12).is_none());
    }

    #[test]
    fn particle_only_spectrum_refuses_string_work() {
        let p = params(&[("n_modes", 4.0)]);
        let spec = solve_frequencies_below(&p, 2.0).unwrap();
        let full = solve_secular_below(&p, 2.0).unwrap();
        assert_eq!(spec.omega(), full.omega());
        assert!(!spec.has_string_coefficients());
        let amps = vec![1.0; spec.len()];
        assert!(spec.coordinates(&amps).is_err());
        assert!(spec.project_to_modes(&[1.0]).is_err());
    }

    #[test]
    fn csv_export() {
        let p = params(&[("n_modes", 4.0)]);
        let spec = solve_secular(&p, 3).unwrap();
        let mut buf = Vec::new();
        spec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,q_n,omega_q,u0q\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
