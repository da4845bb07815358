//! Brute-force normal modes from the finite-N quadratic forms.
//!
//! Coordinates are `xi_0 = L x / sqrt(2)` followed by the string amplitudes
//! `xi_1..xi_N`. Energies are kept in the `2L/rho` scaling internally and
//! multiplied by `rho / (2L)` only in [`total_energy`].

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::series::power_tail;
use crate::params::ModelParams;

/// Kinetic and potential matrices of the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForms {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    kappa: DVector<f64>,
    n_string: usize,
    energy_scale: f64,
}

impl QuadraticForms {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    /// Diagonal of `B`: `kappa_0 = 2 m Omega^2 / (rho L)`, then `omega_n^2`.
    pub fn kappa(&self) -> &DVector<f64> {
        &self.kappa
    }
    pub fn dim(&self) -> usize {
        self.kappa.len()
    }
    /// Number of explicit string coordinates.
    pub fn n_string(&self) -> usize {
        self.n_string
    }
    /// Number of auxiliary coordinates standing in for the truncated modes.
    pub fn n_aux(&self) -> usize {
        self.dim() - 1 - self.n_string
    }

    /// Ratio of extreme eigenvalues of `A`. Large values flag trouble in
    /// the elimination of `r_0` in favour of `x`.
    pub fn condition_number(&self) -> f64 {
        let ev = self.a.clone().symmetric_eigenvalues();
        let max = ev.iter().cloned().fold(f64::MIN, f64::max);
        let min = ev.iter().cloned().fold(f64::MAX, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Largest `|M - M^T|` over both matrices.
    pub fn asymmetry(&self) -> f64 {
        let da = (&self.a - self.a.transpose()).amax();
        let db = (&self.b - self.b.transpose()).amax();
        da.max(db)
    }
}

fn assemble(p: &ModelParams, coupling: &[f64], kappa_string: &[f64]) -> QuadraticForms {
    let d = coupling.len() + 1;
    let mu = p.mass_ratio();
    let mut a = DMatrix::<f64>::zeros(d, d);
    a[(0, 0)] = 2.0 * (1.0 + mu);
    for (i, bi) in coupling.iter().enumerate() {
        a[(0, i + 1)] = -2.0 * bi;
        a[(i + 1, 0)] = -2.0 * bi;
        for (j, bj) in coupling.iter().enumerate() {
            a[(i + 1, j + 1)] = 2.0 * bi * bj;
        }
        a[(i + 1, i + 1)] += 1.0;
    }
    let mut kappa = DVector::<f64>::zeros(d);
    kappa[0] = 2.0 * p.m() * p.omega().powi(2) / (p.rho() * p.length());
    for (i, k) in kappa_string.iter().enumerate() {
        kappa[i + 1] = *k;
    }
    QuadraticForms {
        a,
        b: DMatrix::from_diagonal(&kappa),
        kappa,
        n_string: p.n_modes(),
        energy_scale: p.rho() / (2.0 * p.length()),
    }
}

/// Literal `(N+1) x (N+1)` forms: `A_nm = 2 + delta_nm`, `A_0n = -2`,
/// `A_00 = 2 (1 + m / rho L)`, `B = diag(kappa)`.
pub fn build_forms(p: &ModelParams) -> QuadraticForms {
    let n = p.n_modes();
    let coupling = vec![1.0; n];
    let kappa: Vec<f64> = (1..=n).map(|k| p.omega_n(k).powi(2)).collect();
    assemble(p, &coupling, &kappa)
}

/// Forms with the modes `n > N` folded into `aux` extra coordinates.
///
/// Plain truncation shifts every frequency by `O(1/N)`. The discarded modes
/// enter the secular equation only through `sum_{n>N} 1/(omega_n^2 - w^2)`,
/// which is a Stieltjes function of `w^2`; a Gauss rule for its measure
/// reproduces it to high order below `omega_N`, and each Gauss node becomes
/// one oscillator with frequency `Omega_k` and coupling weight `sqrt(w_k)`.
pub fn build_condensed_forms(p: &ModelParams, aux: usize) -> QuadraticForms {
    let n = p.n_modes();
    let c = p.mode_spacing();
    let (nodes, weights) = tail_quadrature(n, c, aux);
    let mut coupling = vec![1.0; n];
    coupling.extend(weights.iter().map(|w| w.sqrt()));
    let mut kappa: Vec<f64> = (1..=n).map(|k| p.omega_n(k).powi(2)).collect();
    kappa.extend(nodes);
    assemble(p, &coupling, &kappa)
}

/// Gauss rule for the measure `sum_{n>N} x_n delta(x - x_n)`, `x_n = 1/omega_n^2`.
/// Returns squared frequencies `1/theta_k` and coupling weights.
fn tail_quadrature(n: usize, c: f64, k: usize) -> (Vec<f64>, Vec<f64>) {
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let explicit_end = 128 * n as u64;
    let mut xs = Vec::with_capacity(explicit_end as usize - n + 1);
    for j in (n as u64 + 1)..=explicit_end {
        xs.push(1.0 / (c * j as f64).powi(2));
    }
    let mut ws = xs.clone();
    // lump everything past explicit_end into one point with matching moments
    let m0 = power_tail(2.0, explicit_end + 1) / (c * c);
    let m1 = power_tail(4.0, explicit_end + 1) / c.powi(4);
    xs.push(m1 / m0);
    ws.push(m0);

    let total: f64 = ws.iter().sum();
    let dim = xs.len();
    let k = k.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let norm = total.sqrt();
    basis.push(ws.iter().map(|w| w.sqrt() / norm).collect());
    let mut alpha = Vec::with_capacity(k);
    let mut beta = Vec::with_capacity(k);
    for step in 0..k {
        let q = &basis[step];
        let mut v: Vec<f64> = q.iter().zip(&xs).map(|(qi, xi)| qi * xi).collect();
        let a: f64 = q.iter().zip(&v).map(|(x, y)| x * y).sum();
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for prev in &basis {
                let proj: f64 = prev.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(prev).for_each(|(vi, pi)| *vi -= proj * pi);
            }
        }
        let b = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        beta.push(b);
        if step + 1 < k {
            basis.push(v.iter().map(|x| x / b).collect());
        }
    }
    let mut jac = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        jac[(i, i)] = alpha[i];
        if i + 1 < k {
            jac[(i, i + 1)] = beta[i];
            jac[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for i in 0..k {
        let theta = eig.eigenvalues[i];
        let w = total * eig.eigenvectors[(0, i)].powi(2);
        nodes.push(1.0 / theta);
        weights.push(w / theta);
    }
    (nodes, weights)
}

/// Generalized eigenpairs of `(B, A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpectrum {
    omega: DVector<f64>,
    modes: DMatrix<f64>,
    condition: f64,
}

impl OracleSpectrum {
    /// Ascending frequencies.
    pub fn omega(&self) -> &DVector<f64> {
        &self.omega
    }
    /// Columns are `A`-orthonormal eigenvectors, signed so that the particle
    /// component (row 0) is non-negative.
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }
    pub fn len(&self) -> usize {
        self.omega.len()
    }
    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
    /// Condition number of `A` observed during the factorization.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }
    /// Particle component of mode `q`, the analogue of `u_0q`.
    pub fn particle_component(&self, q: usize) -> f64 {
        self.modes[(0, q)]
    }

    /// `(max |V^T A V - I|, max |V^T B V - diag(omega^2)| / max omega^2)`.
    pub fn orthonormality_residual(&self, f: &QuadraticForms) -> (f64, f64) {
        let v = &self.modes;
        let va = v.transpose() * f.a() * v;
        let vb = v.transpose() * f.b() * v;
        let n = self.len();
        let wmax = self
            .omega
            .iter()
            .map(|w| w * w)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut ra: f64 = 0.0;
        let mut rb: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target_a = if i == j { 1.0 } else { 0.0 };
                let target_b = if i == j { self.omega[i].powi(2) } else { 0.0 };
                ra = ra.max((va[(i, j)] - target_a).abs());
                rb = rb.max((vb[(i, j)] - target_b).abs());
            }
        }
        (ra, rb / wmax)
    }

    /// CSV with columns `index, omega_q, u0q`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "omega_q", "u0q"]).map_err(csv_err)?;
        for q in 0..self.len() {
            w.write_record(&[
                q.to_string(),
                format!("{:.16e}", self.omega[q]),
                format!("{:.16e}", self.particle_component(q)),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Solves `B v = w^2 A v` through the Cholesky factor of `A`.
pub fn diagonalize(f: &QuadraticForms) -> Result<OracleSpectrum> {
    let chol = f.a().clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(f.dim(), f.dim()))
        .ok_or(Error::NotPositiveDefinite)?;
    let mut c = &l_inv * f.b() * l_inv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let v_all = l_inv.transpose() * &eig.eigenvectors;

    let mut order: Vec<usize> = (0..f.dim()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut omega = DVector::zeros(f.dim());
    let mut modes = DMatrix::zeros(f.dim(), f.dim());
    for (k, &i) in order.iter().enumerate() {
        omega[k] = eig.eigenvalues[i].max(0.0).sqrt();
        let mut col = v_all.column(i).into_owned();
        if col[0] < 0.0 {
            col.neg_mut();
        }
        modes.set_column(k, &col);
    }
    let diag = l.diagonal();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::MAX, f64::min);
    Ok(OracleSpectrum {
        omega,
        modes,
        condition: (dmax / dmin).powi(2),
    })
}

/// `(rho / 2L) (xi_dot^T A xi_dot + xi^T B xi)`.
pub fn total_energy(f: &QuadraticForms, xi: &DVector<f64>, xi_dot: &DVector<f64>) -> Result<f64> {
    for v in [xi, xi_dot] {
        if v.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: v.len(),
            });
        }
    }
    let kinetic = xi_dot.dot(&(f.a() * xi_dot));
    let potential = xi.dot(&(f.b() * xi));
    Ok(f.energy_scale * (kinetic + potential))
}

/// Mode-space energy `(rho / 2L) sum_q (eta_dot_q^2 + omega_q^2 eta_q^2)`.
pub fn mode_energy(p: &ModelParams, spec: &OracleSpectrum, eta: &DVector<f64>, eta_dot: &DVector<f64>) -> Result<f64> {
    for v in [eta, eta_dot] {
        if v.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                got: v.len(),
            });
        }
    }
    let sum: f64 = (0..spec.len())
        .map(|q| eta_dot[q].powi(2) + (spec.omega[q] * eta[q]).powi(2))
        .sum();
    Ok(p.rho() / (2.0 * p.length()) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamMap;

    fn params(pairs: &[(&str, f64)]) -> ModelParams {
        let mut map: ParamMap = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        map.entry("omega_max".into()).or_insert(100.0);
        crate::params::make_params(&map).unwrap()
    }

    #[test]
    fn one_mode_toy_matches_quadratic_roots() {
        // m / (rho L) = 1 with rho = 0.01, L = 100
        let p = params(&[("rho", 0.01), ("n_modes", 1.0)]);
        let f = build_forms(&p);
        assert_eq!(f.a()[(0, 0)], 4.0);
        assert_eq!(f.a()[(0, 1)], -2.0);
        assert_eq!(f.a()[(1, 1)], 3.0);
        let k0 = f.kappa()[0];
        let k1 = f.kappa()[1];
        assert!((k0 - 2.0).abs() < 1e-15);
        assert!((k1 - p.omega_n(1).powi(2)).abs() < 1e-15);
        // det(B - lam A) = 8 lam^2 - (3 k0 + 4 k1) lam + k0 k1
        let (qa, qb, qc) = (8.0, -(3.0 * k0 + 4.0 * k1), k0 * k1);
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let lo = (-qb - disc) / (2.0 * qa);
        let hi = (-qb + disc) / (2.0 * qa);
        let spec = diagonalize(&f).unwrap();
        assert!((spec.omega()[0] - lo.sqrt()).abs() < 1e-13);
        assert!((spec.omega()[1] - hi.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn forms_are_symmetric_and_definite() {
        for n in [1.0, 8.0, 64.0] {
            let f = build_forms(&params(&[("n_modes", n)]));
            assert_eq!(f.asymmetry(), 0.0);
            let min = f.a().clone().symmetric_eigenvalues().min();
            assert!(min > 0.0);
            assert!(f.condition_number().is_finite());
        }
    }

    #[test]
    fn heavy_string_limit() {
        let p = params(&[("rho", 1e12), ("n_modes", 4.0)]);
        assert!((build_forms(&p).a()[(0, 0)] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn decoupled_particle_leaves_free_string() {
        let p = params(&[("m", 1e-8), ("Omega", 0.0), ("omega_max", 1.0), ("n_modes", 32.0)]);
        let spec = diagonalize(&build_forms(&p)).unwrap();
        assert!(spec.omega()[0] < 1e-6);
        for n in 1..=32 {
            let w = spec.omega()[n];
            assert!((w - p.omega_n(n)).abs() < 1e-6 * p.omega_n(n), "n={n}: {w}");
        }
    }

    #[test]
    fn eigenvectors_are_a_orthonormal() {
        let p = params(&[("n_modes", 64.0)]);
        let f = build_forms(&p);
        let spec = diagonalize(&f).unwrap();
        let (ra, rb) = spec.orthonormality_residual(&f);
        assert!(ra < 1e-10 && rb < 1e-10, "{ra} {rb}");
        assert!(spec.omega().iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn energy_of_single_mode_and_zero_state() {
        let p = params(&[("n_modes", 16.0)]);
        let f = build_forms(&p);
        let spec = diagonalize(&f).unwrap();
        let zero = DVector::zeros(f.dim());
        assert_eq!(total_energy(&f, &zero, &zero).unwrap(), 0.0);
        let q = 3;
        let amp = 0.7;
        let xi = spec.modes().column(q) * amp;
        let e = total_energy(&f, &xi, &zero).unwrap();
        let expected = p.rho() / (2.0 * p.length()) * (spec.omega()[q] * amp).powi(2);
        assert!((e - expected).abs() < 1e-12 * expected);
        assert!(matches!(
            total_energy(&f, &DVector::zeros(3), &zero),
            Err(Error::DimensionMismatch { expected: 17, got: 3 })
        ));
    }

    #[test]
    fn condensed_tail_converges_when_n_doubles() {
        let small = params(&[("n_modes", 64.0)]);
        let large = params(&[("n_modes", 128.0)]);
        let plain = (
            diagonalize(&build_forms(&small)).unwrap(),
            diagonalize(&build_forms(&large)).unwrap(),
        );
        let cond = (
            diagonalize(&build_condensed_forms(&small, 6)).unwrap(),
            diagonalize(&build_condensed_forms(&large, 6)).unwrap(),
        );
        for q in 0..10 {
            let d_plain = (plain.0.omega()[q] - plain.1.omega()[q]).abs() / plain.1.omega()[q];
            let d_cond = (cond.0.omega()[q] - cond.1.omega()[q]).abs() / cond.1.omega()[q];
            assert!(d_cond < 1e-6, "q={q}: {d_cond}");
            assert!(d_cond < 1e-3 * d_plain, "q={q}: {d_cond} vs {d_plain}");
        }
        assert_eq!(build_condensed_forms(&small, 6).n_aux(), 6);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = params(&[("n_modes", 3.0)]);
        let spec = diagonalize(&build_forms(&p)).unwrap();
        let mut buf = Vec::new();
        spec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,omega_q,u0q\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
