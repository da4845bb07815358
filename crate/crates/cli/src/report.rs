//! Pairwise cross-validation report.

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// One cross-check: two independent routes to the same quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub route_a: String,
    pub route_b: String,
    pub a: f64,
    pub b: f64,
    /// Checked figure of merit; usually `|a - b| / |b|`.
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(quantity: &str, route_a: &str, route_b: &str, a: f64, b: f64, discrepancy: f64, tolerance: f64) -> Self {
        Check {
            quantity: quantity.into(),
            route_a: route_a.into(),
            route_b: route_b.into(),
            a,
            b,
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
        }
    }

    pub fn relative(quantity: &str, route_a: &str, route_b: &str, a: f64, b: f64, tolerance: f64) -> Self {
        Check::new(quantity, route_a, route_b, a, b, (a - b).abs() / b.abs(), tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ValidationReport {
    /// Refuses an empty or duplicated set of checks.
    pub fn new(checks: Vec<Check>) -> CliResult<Self> {
        if checks.is_empty() {
            return Err(CliError::Internal("validation report has no checks".into()));
        }
        for (i, c) in checks.iter().enumerate() {
            if checks[..i].iter().any(|d| d.quantity == c.quantity) {
                return Err(CliError::Internal(format!("check `{}` registered twice", c.quantity)));
            }
        }
        let pass = checks.iter().all(|c| c.pass);
        Ok(ValidationReport { checks, pass })
    }

    /// Fixed-width table, one row per check.
    pub fn table(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.quantity.chars().count())
            .max()
            .unwrap_or(0)
            .max(8);
        let mut out = format!(
            "{:<width$}  {:>24}  {:>24}  {:>10}  {:>10}  ok\n",
            "quantity", "route A", "route B", "discrep.", "tol"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<width$}  {:>24.16e}  {:>24.16e}  {:>10.3e}  {:>10.3e}  {}\n",
                c.quantity,
                c.a,
                c.b,
                c.discrepancy,
                c.tolerance,
                if c.pass { "✓" } else { "✗" }
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        if failed == 0 {
            out.push_str(&format!("all {} checks passed\n", self.checks.len()));
        } else {
            out.push_str(&format!("{failed} of {} checks failed\n", self.checks.len()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_refused() {
        assert!(matches!(ValidationReport::new(vec![]), Err(CliError::Internal(_))));
    }

    #[test]
    fn failing_row_shows_values_and_tolerance() {
        let rep = ValidationReport::new(vec![
            Check::relative("alpha", "x", "y", 1.0, 1.0, 1e-8),
            Check::relative("beta", "x", "y", 1.1, 1.0, 1e-2),
        ])
        .unwrap();
        assert!(!rep.pass);
        let table = rep.table();
        let beta = table.lines().find(|l| l.starts_with("beta")).unwrap();
        assert!(beta.contains("1.1000000000000001e0"));
        assert!(beta.contains("1.000e-2"));
        assert!(beta.ends_with('✗'));
        assert!(table.lines().nth(1).unwrap().ends_with('✓'));
    }

    #[test]
    fn duplicates_are_refused() {
        let c = Check::relative("alpha", "x", "y", 1.0, 1.0, 1e-8);
        assert!(ValidationReport::new(vec![c.clone(), c]).is_err());
    }
}
