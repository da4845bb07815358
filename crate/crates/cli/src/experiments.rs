//! Static experiment registry.

use std::f64::consts::PI;
use std::path::Path;

use polaron_core::classical::{self, DecayConfig};
use polaron_core::fluctuation;
use polaron_core::modes::{self, ModeSpectrum};
use polaron_core::oracle::{self, OracleSpectrum};
use polaron_core::profile;
use polaron_core::spectral::{self, OccupationGroup, OccupationSpec, SpectralDensity};
use polaron_core::{Error, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::error::{CliError, CliResult, Context};
use crate::output::Table;
use crate::report::{Check, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Spectrum,
    Modes,
    Oracle,
    Fluct,
    Profile,
    Decay,
    Validate,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Spectrum,
        Kind::Modes,
        Kind::Oracle,
        Kind::Fluct,
        Kind::Profile,
        Kind::Decay,
        Kind::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Spectrum => "spectrum",
            Kind::Modes => "modes",
            Kind::Oracle => "oracle",
            Kind::Fluct => "fluct",
            Kind::Profile => "profile",
            Kind::Decay => "decay",
            Kind::Validate => "validate",
        }
    }

    pub fn parse(name: &str) -> CliResult<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == name).ok_or_else(|| {
            let known: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
            CliError::config(
                "experiment",
                format!("unknown experiment `{name}`; expected one of {}", known.join(", ")),
            )
        })
    }
}

/// Result of one experiment instance. Tables are written as `<name>.csv`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Map<String, Value>,
    pub tables: Vec<(String, Table)>,
    pub pass: Option<bool>,
    pub text: Option<String>,
}

impl Outcome {
    fn new(summary: Value) -> Self {
        let summary = match summary {
            Value::Object(m) => m,
            other => Map::from_iter([("value".to_string(), other)]),
        };
        Outcome {
            summary,
            tables: Vec::new(),
            pass: None,
            text: None,
        }
    }

    fn table(mut self, name: &str, t: Table) -> Self {
        self.tables.push((name.to_string(), t));
        self
    }
}

pub fn run_experiment(kind: Kind, cfg: &Config, out: &Path) -> CliResult<Outcome> {
    let p = cfg.params()?;
    let mut outcome = match kind {
        Kind::Spectrum => spectrum(&p, cfg)?,
        Kind::Modes => modes(&p, cfg, out)?,
        Kind::Oracle => oracle_run(&p, cfg)?,
        Kind::Fluct => fluct(&p, cfg)?,
        Kind::Profile => profile_run(&p, cfg)?,
        Kind::Decay => decay(&p, cfg)?,
        Kind::Validate => validate(&p, cfg)?,
    };
    let mut head = Map::new();
    head.insert("experiment".into(), json!(kind.name()));
    head.insert("params".into(), json!(p.to_map()));
    head.insert("settings".into(), json!(cfg.settings()));
    head.append(&mut outcome.summary);
    outcome.summary = head;
    Ok(outcome)
}

fn weak_coupling_report(p: &ModelParams) -> CliResult<Option<spectral::GroundStateReport>> {
    match spectral::ground_state_report(p) {
        Ok(r) => Ok(Some(r)),
        Err(Error::OutsideWeakCoupling { .. }) | Err(Error::OmegaZero) => Ok(None),
        Err(e) => Err(e).during("spectral_energy", "ground_state_report"),
    }
}

fn spectrum(p: &ModelParams, cfg: &Config) -> CliResult<Outcome> {
    let scale = if p.omega() > 0.0 { p.omega() } else { p.eta() / p.m() };
    let top = cfg.get_or("grid.w_max", (4.0 * scale).min(p.omega_max()));
    let n = cfg.count("grid.points", 0)?.max(2);
    let grid: Vec<f64> = (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect();
    let dens = SpectralDensity::tabulate(p, &grid).during("spectral_energy", "nu")?;
    let mut t = Table::new(&["omega", "nu0", "nu", "excess"]);
    for i in 0..n {
        t.push(vec![dens.omega[i], dens.nu0, dens.nu[i], dens.excess[i]]);
    }
    let rule = spectral::sum_rule(p).during("spectral_energy", "sum_rule")?;
    let contour = spectral::sum_rule_residues(p);
    let ground =
        spectral::particle_energy(p, &OccupationSpec::ground()).during("spectral_energy", "particle_energy")?;
    let report = weak_coupling_report(p)?;
    let slope = match report {
        Some(_) => Some(
            spectral::log_cutoff_slope(p, 0.1 * p.omega_max(), p.omega_max())
                .during("spectral_energy", "log_cutoff_slope")?,
        ),
        None => None,
    };
    let slope_theory = p.hbar() * p.eta() / (2.0 * PI * p.m());
    let mut summary = json!({
        "sum_rule": rule.value,
        "sum_rule_error": rule.error,
        "sum_rule_contour": contour,
        "energy_ground": ground.value,
        "energy_ground_error": ground.error,
        "energy_closed_form": report.map(|r| r.closed_form),
        "discrepancy": report.map(|r| r.discrepancy),
        "coupling_discrepancy": report.map(|r| r.coupling_discrepancy),
        "log_slope": slope,
        "log_slope_theory": slope_theory,
        "log_slope_deviation": slope.map(|s| s / slope_theory - 1.0),
    });
    let mut tables = vec![("spectrum".to_string(), t)];

    let bins = cfg.count("counting.bins", 0)?;
    if bins > 0 {
        let roots: Vec<f64> = modes::secular_roots_below(p, top)
            .during("mode_solver", "secular_roots")?
            .iter()
            .map(|r| r.omega)
            .collect();
        let check = spectral::counting_check(p, &roots, top, bins).during("spectral_energy", "nu")?;
        let mut h = Table::new(&["lo", "hi", "count", "expected", "std_error"]);
        for b in &check.bins {
            h.push(vec![b.lo, b.hi, b.count as f64, b.expected, b.std_error]);
        }
        summary["roots_counted"] = json!(roots.len());
        summary["counting_max_bin_deviation"] = json!(check.max_bin_deviation);
        summary["counting_max_cumulative_deviation"] = json!(check.max_cumulative_deviation);
        tables.push(("counting".into(), h));
    }

    let n_occ = cfg.get_or("occupation.n", 0.0);
    if n_occ > 0.0 {
        let (scan, t) = occupation_scan(p, cfg, scale, n_occ)?;
        summary["occupation_scan"] = scan;
        tables.push(("occupation".into(), t));
    }
    let mut o = Outcome::new(summary);
    o.tables = tables;
    Ok(o)
}

/// Moves one excited group `[lo, lo + width)` across the scan range and
/// compares finite differences of `E_p` with the exact edge rates.
fn occupation_scan(p: &ModelParams, cfg: &Config, scale: f64, n_occ: f64) -> CliResult<(Value, Table)> {
    let width = cfg.get_or("occupation.width", scale);
    let lo0 = cfg.get_or("occupation.scan_lo", 0.5 * scale);
    let lo1 = cfg.get_or("occupation.scan_hi", 2.0 * scale);
    let n = cfg.count("occupation.scan_points", 0)?;
    if n < 3 || !(lo1 > lo0) {
        return Err(CliError::config(
            "occupation.scan_points",
            "the scan needs at least 3 points and scan_lo < scan_hi",
        ));
    }
    let level = n_occ.ceil().max(1.0) as u32;
    let step = (lo1 - lo0) / (n - 1) as f64;
    let los: Vec<f64> = (0..n).map(|i| lo0 + step * i as f64).collect();
    let energies = los
        .par_iter()
        .map(|&lo| {
            let occ = OccupationSpec::new(vec![OccupationGroup {
                lo,
                hi: lo + width,
                level,
                occupation: n_occ,
            }])?;
            spectral::particle_energy(p, &occ)
        })
        .collect::<polaron_core::Result<Vec<_>>>()
        .during("spectral_energy", "particle_energy")?;
    let rate = |lo: f64| spectral::edge_rate(p, lo + width, n_occ) - spectral::edge_rate(p, lo, n_occ);
    let mut t = Table::new(&["lo", "hi", "energy", "energy_error", "rate_fd", "rate_exact"]);
    let (mut max_step, mut max_rate, mut max_dev, mut max_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        let (a, b) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        let fd = (energies[b].value - energies[a].value) / (los[b] - los[a]);
        let exact = rate(los[i]);
        if i > 0 {
            max_step = max_step.max((energies[i].value - energies[i - 1].value).abs());
        }
        if i > 0 && i < n - 1 {
            max_dev = max_dev.max((fd - exact).abs());
        }
        max_rate = max_rate.max(exact.abs());
        max_err = max_err.max(energies[i].error);
        t.push(vec![
            los[i],
            los[i] + width,
            energies[i].value,
            energies[i].error,
            fd,
            exact,
        ]);
    }
    let scan = json!({
        "points": n,
        "width": width,
        "max_step": max_step,
        "max_rate": max_rate,
        "max_rate_deviation": max_dev / max_rate,
        "quadrature_error": max_err,
    });
    Ok((scan, t))
}

fn modes(p: &ModelParams, cfg: &Config, out: &Path) -> CliResult<Outcome> {
    let n = cfg.count("modes.count", p.n_modes())?;
    let cache = out.join("cache");
    let spec = modes::solve_secular_cached(p, n, &cache).during("mode_solver", "solve_secular")?;
    let mut buf = Vec::new();
    spec.write_csv(&mut buf).during("mode_solver", "write_csv")?;
    let (ra, rb) = spec.normalization_residual();
    let summary = json!({
        "roots": spec.len(),
        "omega_first": spec.omega().first(),
        "omega_last": spec.omega().last(),
        "secular_residual": spec.secular_residual(),
        "quantization_residual": spec.quantization_residual(),
        "normalization_residual_a": ra,
        "normalization_residual_b": rb,
        "cache_key": modes::cache_key(p, n),
    });
    let mut o = Outcome::new(summary);
    o.tables.push(("modes".into(), csv_text_table(&buf)?));
    Ok(o)
}

/// Re-reads CSV bytes produced by a core writer into a table.
fn csv_text_table(bytes: &[u8]) -> CliResult<Table> {
    let mut r = csv::Reader::from_reader(bytes);
    let err = |e: csv::Error| CliError::Internal(format!("csv: {e}"));
    let headers: Vec<String> = r.headers().map_err(err)?.iter().map(String::from).collect();
    let mut t = Table {
        headers,
        rows: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec.map_err(err)?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| CliError::Internal(e.to_string())))
            .collect::<CliResult<Vec<_>>>()?;
        t.rows.push(row);
    }
    Ok(t)
}

/// Largest relative gap between the secular roots below `omega_max` and the
/// lowest generalized eigenvalues.
fn roots_vs_oracle(p: &ModelParams, aux: usize) -> CliResult<(usize, f64, OracleSpectrum, (f64, f64))> {
    let roots = modes::secular_roots_below(p, p.omega_max()).during("mode_solver", "secular_roots")?;
    let forms = if aux == 0 {
        oracle::build_forms(p)
    } else {
        oracle::build_condensed_forms(p, aux)
    };
    let spec = oracle::diagonalize(&forms).during("oracle_diag", "diagonalize")?;
    if spec.len() < roots.len() {
        return Err(CliError::Compute {
            module: "oracle_diag",
            operation: "diagonalize",
            source: Error::DimensionMismatch {
                expected: roots.len(),
                got: spec.len(),
            },
        });
    }
    let worst = roots
        .iter()
        .enumerate()
        .map(|(q, r)| (spec.omega()[q] - r.omega).abs() / r.omega)
        .fold(0.0, f64::max);
    let resid = spec.orthonormality_residual(&forms);
    Ok((roots.len(), worst, spec, resid))
}

fn oracle_run(p: &ModelParams, cfg: &Config) -> CliResult<Outcome> {
    let aux = cfg.count("oracle.aux", 0)?;
    let (count, worst, spec, (ra, rb)) = roots_vs_oracle(p, aux)?;
    let mut buf = Vec::new();
    spec.write_csv(&mut buf).during("oracle_diag", "write_csv")?;
    let summary = json!({
        "dimension": spec.len(),
        "aux_oscillators": aux,
        "roots_compared": count,
        "max_relative_gap": worst,
        "orthonormality_a": ra,
        "orthonormality_b": rb,
        "condition_number": spec.condition_number(),
    });
    Ok(Outcome::new(summary).table("oracle", csv_text_table(&buf)?))
}

fn fluct_spectrum(p: &ModelParams, cfg: &Config) -> CliResult<ModeSpectrum> {
    let w = cfg.get_or("fluct.w_max", 20.0 * p.omega().max(p.eta() / p.m()));
    modes::solve_frequencies_below(p, w).during("mode_solver", "solve_secular")
}

const WEAK_LIMIT_RATIO: f64 = 1e-3;

fn fluct(p: &ModelParams, cfg: &Config) -> CliResult<Outcome> {
    let spec = fluct_spectrum(p, cfg)?;
    let rep = fluctuation::fluctuation_report(p, &spec, p.temperature()).during("fluctuation_lab", "x2_mode_sum")?;
    // eta -> 0 at T = 0 against the bare oscillator
    let (weak, ground) = if p.omega() > 0.0 {
        let wp = with(p, &[("damping_ratio", WEAK_LIMIT_RATIO), ("T", 0.0)])?;
        let weak = fluctuation::x2_fdt(&wp, 0.0).during("fluctuation_lab", "x2_fdt")?.value;
        (Some(weak), Some(p.hbar() / (2.0 * p.m() * p.omega())))
    } else {
        (None, None)
    };
    let mut t = Table::new(&["T", "x2_mode_sum", "x2_fdt", "discrepancy"]);
    t.push(vec![rep.temperature, rep.x2_mode_sum, rep.x2_fdt, rep.discrepancy]);
    let summary = json!({
        "T": rep.temperature,
        "x2_mode_sum": rep.x2_mode_sum,
        "x2_fdt": rep.x2_fdt,
        "discrepancy": rep.discrepancy,
        "tail": rep.tail,
        "modes": rep.modes,
        "x2_weak_limit": weak,
        "x2_oscillator_ground": ground,
        "weak_limit_deviation": weak.zip(ground).map(|(w, g)| w / g - 1.0),
    });
    Ok(Outcome::new(summary).table("fluct", t))
}

fn profile_run(p: &ModelParams, cfg: &Config) -> CliResult<Outcome> {
    let (lo, hi) = profile::fit_window(p).during("fluctuation_lab", "r2_profile")?;
    if hi <= lo {
        return Err(Error::WindowTooNarrow {
            points: 0,
            needed: profile::MIN_FIT_POINTS,
        })
        .during("fluctuation_lab", "r2_profile");
    }
    let z_min = cfg.get_or("profile.z_min", 0.5 * lo);
    let z_max = cfg.get_or("profile.z_max", hi.min(0.5 * p.length()));
    let n = cfg.count("profile.points", 0)?;
    if !(z_min > 0.0 && z_max > z_min) {
        return Err(CliError::config(
            "profile.z_min",
            format!("need 0 < z_min < z_max, got {z_min}, {z_max}"),
        ));
    }
    let grid = profile::geometric_grid(z_min, z_max, n);
    let rep = profile::r2_profile(p, &grid).during("fluctuation_lab", "r2_profile")?;
    let fit = rep.tail_fit.ok_or(CliError::Compute {
        module: "fluctuation_lab",
        operation: "r2_profile",
        source: Error::WindowTooNarrow {
            points: grid.iter().filter(|z| **z >= lo && **z <= hi).count(),
            needed: profile::MIN_FIT_POINTS,
        },
    })?;
    let mut t = Table::new(&["z", "r2_total", "r2_baseline", "r2_excess"]);
    for i in 0..grid.len() {
        t.push(vec![rep.z[i], rep.r2_total[i], rep.r2_baseline[i], rep.r2_excess[i]]);
    }
    let summary = json!({
        "coefficient": fit.coefficient,
        "coefficient_theory": fit.coefficient_theory,
        "coefficient_deviation": fit.coefficient / fit.coefficient_theory - 1.0,
        "exponent": fit.exponent,
        "window": [fit.window_lo, fit.window_hi],
        "points": fit.points,
        "baseline_deviation": rep.baseline_deviation,
        "split_mismatch": rep.split_mismatch,
    });
    Ok(Outcome::new(summary).table("profile", t))
}

fn decay_config(p: &ModelParams, cfg: &Config) -> CliResult<DecayConfig> {
    let t_max = cfg.get_or("decay.t_max", 0.9 * 0.5 * p.length() / p.s());
    let mut dc = DecayConfig::standard(p, cfg.get_or("decay.x0", 1.0), t_max);
    dc.v0 = cfg.get_or("decay.v0", 0.0);
    if let Some(dz) = cfg.get("decay.dz") {
        dc.dz = dz;
        dc.monitor = 10.0 * dz;
    }
    dc.cfl = cfg.get_or("decay.cfl", 0.5);
    dc.record_every = cfg.count("decay.record_every", 1)?.max(1);
    let snaps = cfg.count("decay.snapshots", 0)?;
    dc.snapshot_times = (1..=snaps).map(|k| t_max * k as f64 / snaps as f64).collect();
    Ok(dc)
}

fn decay(p: &ModelParams, cfg: &Config) -> CliResult<Outcome> {
    let limit = 2.0 * p.m() * p.omega();
    if !(p.eta() < limit) {
        return Err(Error::OverdampedRegime { eta: p.eta(), limit }).during("classical_dyn", "run_decay_experiment");
    }
    let dc = decay_config(p, cfg)?;
    let run = classical::run_decay(p, &dc).during("classical_dyn", "run_decay_experiment")?;
    let margin = cfg.get_or("decay.margin", 2.0 * PI * p.s() / p.omega());
    let retarded = if dc.snapshot_times.is_empty() {
        None
    } else {
        Some(
            classical::check_retarded_solution(&run.history, margin)
                .during("classical_dyn", "check_retarded_solution")?,
        )
    };
    let mut t = Table::new(&["t", "x", "energy_total", "energy_radiated"]);
    for i in 0..run.trace.t.len() {
        t.push(vec![
            run.trace.t[i],
            run.trace.x[i],
            run.trace.energy_total[i],
            run.trace.energy_radiated[i],
        ]);
    }
    let mut snaps = Table::new(&["t", "z", "R"]);
    for s in &run.history.snapshots {
        for (z, r) in s.z.iter().zip(&s.r) {
            snaps.push(vec![s.t, *z, *r]);
        }
    }
    let (gamma_theory, omega_theory) = classical::damping_theory(p);
    let fit = run.fit;
    let summary = json!({
        "gamma_fit": fit.map(|f| f.gamma_fit),
        "gamma_theory": gamma_theory,
        "omega_fit": fit.map(|f| f.omega_fit),
        "omega_theory": omega_theory,
        "window": fit.map(|f| [f.window.0, f.window.1]),
        "extrema": fit.map(|f| f.extrema),
        "fit_status": if fit.is_some() { "ok" } else { "fewer envelope extrema than the fit needs" },
        "residuals": {
            "retarded": retarded,
            "energy_drift": run.energy_drift,
            "flux_balance": run.flux_balance(),
        },
        "reflection_detected": run.reflection_detected,
        "dz": dc.dz,
        "cfl": dc.cfl,
        "t_max": dc.t_max,
    });
    Ok(Outcome::new(summary).table("decay", t).table("snapshots", snaps))
}

fn with(p: &ModelParams, pairs: &[(&str, f64)]) -> CliResult<ModelParams> {
    let mut map = p.to_map();
    for (k, v) in pairs {
        map.insert(k.to_string(), *v);
    }
    polaron_core::make_params(&map).map_err(|e| CliError::config("params", e.to_string()))
}

/// The registered cross-checks, in report order.
pub fn validation_checks(p: &ModelParams, cfg: &Config) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();

    let (count, worst, _, _) = roots_vs_oracle(p, cfg.count("oracle.aux", 0)?)?;
    checks.push(Check::new(
        "secular roots vs generalized eigenvalues",
        "secular equation",
        "quadratic forms",
        count as f64,
        count as f64,
        worst,
        cfg.tol("roots"),
    ));

    let roots: Vec<f64> = modes::secular_roots_below(p, p.omega_max())
        .during("mode_solver", "secular_roots")?
        .iter()
        .map(|r| r.omega)
        .collect();
    let bins = cfg.count("counting.bins", 0)?;
    let counting = spectral::counting_check(p, &roots, p.omega_max(), bins).during("spectral_energy", "nu")?;
    checks.push(Check::new(
        "mode density vs root histogram",
        "root count",
        "integrated nu",
        roots.len() as f64,
        spectral::counting_integral(p, p.omega_max()),
        counting.max_bin_deviation,
        cfg.tol("counting"),
    ));

    let fp = with(p, &[("L", cfg.get_or("validate.fdt_length", 1000.0))])?;
    let spec = fluct_spectrum(&fp, cfg)?;
    let rep = fluctuation::fluctuation_report(&fp, &spec, fp.temperature()).during("fluctuation_lab", "x2_mode_sum")?;
    checks.push(Check::relative(
        "<x^2> mode sum vs FDT",
        "mode sum",
        "FDT integral",
        rep.x2_mode_sum,
        rep.x2_fdt,
        cfg.tol("fdt"),
    ));

    let weak = with(
        p,
        &[
            ("damping_ratio", cfg.get_or("validate.weak_ratio", 0.01)),
            ("omega_max", cfg.get_or("validate.cutoff_ratio", 100.0) * p.omega()),
        ],
    )?;
    let g = spectral::ground_state_report(&weak).during("spectral_energy", "ground_state_report")?;
    checks.push(Check::relative(
        "ground energy quadrature vs closed form",
        "quadrature",
        "weak-coupling closed form",
        g.quadrature,
        g.closed_form,
        cfg.tol("energy"),
    ));

    let t_decay = cfg.get_or("validate.decay_time", 60.0);
    let gamma = cfg.get_or("validate.gamma", 0.05);
    let dp = with(
        p,
        &[
            ("rho", gamma * p.m() / p.s()),
            ("L", 2.0 * p.s() * (t_decay + 10.0 * p.s() / p.omega())),
        ],
    )?;
    let fit = classical::run_decay_experiment(&dp, 1.0, t_decay).during("classical_dyn", "run_decay_experiment")?;
    checks.push(Check::relative(
        "decay rate vs rho s / m",
        "envelope fit",
        "radiation friction",
        fit.gamma_fit,
        fit.gamma_theory,
        cfg.tol("gamma"),
    ));

    let n = cfg.count("validate.profile_modes", 128)?;
    let pp = with(p, &[("n_modes", n as f64)])?;
    let spec = modes::solve_secular(&pp, n).during("mode_solver", "solve_secular")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.count("seed", 0)? as u64);
    let amps: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let half = 0.5 * pp.length();
    let z: Vec<f64> = (0..=20).map(|i| -half + pp.length() * i as f64 / 20.0).collect();
    let closed = spec.string_profile(&amps, &z).during("mode_solver", "string_profile")?;
    let fourier = spec
        .string_profile_fourier(&amps, &z)
        .during("mode_solver", "string_profile")?;
    let scale = closed.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let gap = closed
        .iter()
        .zip(&fourier)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "string profile closed form vs Fourier sum",
        "closed form",
        "Fourier sum",
        closed[5],
        fourier[5],
        gap / scale,
        cfg.tol("profile"),
    ));
    Ok(checks)
}

fn validate(p: &ModelParams, cfg: &Config) -> CliResult<Outcome> {
    let report = ValidationReport::new(validation_checks(p, cfg)?)?;
    let mut o = Outcome::new(json!({
        "pass": report.pass,
        "checks": report.checks,
        "tolerances": cfg.tolerances(),
    }));
    o.pass = Some(report.pass);
    o.text = Some(report.table());
    Ok(o)
}
