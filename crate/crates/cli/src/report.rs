//! The report document written by every command, and the finiteness check
//! applied before it is emitted.

use serde::{Deserialize, Serialize};

use freebound::inequalities::{CheckRecord, HypothesisAudit, InequalityReport, NormalizedForm, ReillyBreakdown};
use freebound::quadrature::ConvergenceTable;

use crate::config::{ProbeSettings, Quantity, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub model: String,
    pub support: String,
    pub weight: String,
    /// `max |Hess V + K V g|` from the closed-form jet.
    pub va2_residual: f64,
    /// Same identity with finite-difference derivatives of `V`.
    pub va2_fd_residual: f64,
    /// `max |dV(N) - kappa V|` on the support.
    pub va3_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureRow {
    pub model: String,
    pub support: String,
    pub kappa: f64,
    /// `max |g^{-1} h - kappa I|` over sampled support points.
    pub umbilicity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionalRow {
    pub model: String,
    pub curvature: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReillyEntry {
    pub function: String,
    pub breakdown: ReillyBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub relative_deficit: f64,
    pub min_convexity_eig: f64,
    pub min_substatic_eig: f64,
    pub status: freebound::inequalities::ReportStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub quantity: Quantity,
    pub table: ConvergenceTable,
    pub meets_order: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub passed: bool,
    pub exit_code: u8,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_seconds: f64,
    pub elapsed_seconds: f64,
}

/// One self-describing report per run. Every field except `wall_clock` is a
/// deterministic function of the config and the tool version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: ToolInfo,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<HypothesisAudit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<InequalityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reilly: Vec<ReillyEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub identities: Vec<IdentityRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curvature: Vec<CurvatureRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sectional: Vec<SectionalRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub convergence: Vec<ConvergenceEntry>,
    pub outcome: Outcome,
    pub wall_clock: WallClock,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        ReportDocument {
            tool: ToolInfo::current(),
            command: command.into(),
            scenario: None,
            probe: None,
            quadrature_level: None,
            audit: None,
            reports: Vec::new(),
            reilly: Vec::new(),
            identities: Vec::new(),
            curvature: Vec::new(),
            sectional: Vec::new(),
            sweep: Vec::new(),
            convergence: Vec::new(),
            outcome: Outcome {
                passed: true,
                exit_code: 0,
                failures: Vec::new(),
            },
            wall_clock: WallClock {
                started_unix_seconds: 0.0,
                elapsed_seconds: 0.0,
            },
        }
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.outcome.failures.push(reason.into());
        self.outcome.passed = false;
        self.outcome.exit_code = 1;
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Sweep table with the fixed header
    /// `epsilon,deficit,relative_deficit,min_convexity_eig`.
    pub fn sweep_csv(&self) -> String {
        let mut s = String::from("epsilon,deficit,relative_deficit,min_convexity_eig\n");
        for r in &self.sweep {
            s.push_str(&format!("{},{},{},{}\n", r.epsilon, r.deficit, r.relative_deficit, r.min_convexity_eig));
        }
        s
    }
}

/// Every number carried is finite. `None` counts as finite.
pub trait Finite {
    fn all_finite(&self) -> bool;
}

impl Finite for f64 {
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl<T: Finite> Finite for Option<T> {
    fn all_finite(&self) -> bool {
        self.as_ref().is_none_or(Finite::all_finite)
    }
}

impl<T: Finite> Finite for [T] {
    fn all_finite(&self) -> bool {
        self.iter().all(Finite::all_finite)
    }
}

impl<T: Finite> Finite for Vec<T> {
    fn all_finite(&self) -> bool {
        self.as_slice().all_finite()
    }
}

impl Finite for CheckRecord {
    fn all_finite(&self) -> bool {
        self.value.all_finite() && self.tolerance.is_finite()
    }
}

impl Finite for HypothesisAudit {
    fn all_finite(&self) -> bool {
        self.checks.all_finite()
    }
}

impl Finite for NormalizedForm {
    fn all_finite(&self) -> bool {
        [self.lhs, self.rhs, self.deficit, self.relative_deficit].all_finite()
    }
}

impl Finite for InequalityReport {
    fn all_finite(&self) -> bool {
        [self.lhs, self.rhs, self.deficit, self.relative_deficit].all_finite()
            && self.hypotheses.all_finite()
            && self.normalized.all_finite()
    }
}

impl Finite for ReillyEntry {
    fn all_finite(&self) -> bool {
        let b = &self.breakdown;
        [b.lhs, b.rhs, b.residual, b.volume_rhs].all_finite() && b.boundary.all_finite()
    }
}

impl Finite for IdentityRow {
    fn all_finite(&self) -> bool {
        [self.va2_residual, self.va2_fd_residual, self.va3_residual].all_finite()
    }
}

impl Finite for CurvatureRow {
    fn all_finite(&self) -> bool {
        [self.kappa, self.umbilicity_residual].all_finite()
    }
}

impl Finite for SectionalRow {
    fn all_finite(&self) -> bool {
        [self.curvature, self.max_residual].all_finite()
    }
}

impl Finite for SweepRow {
    fn all_finite(&self) -> bool {
        [
            self.epsilon,
            self.lhs,
            self.rhs,
            self.deficit,
            self.relative_deficit,
            self.min_convexity_eig,
            self.min_substatic_eig,
        ]
        .all_finite()
    }
}

impl Finite for ConvergenceEntry {
    fn all_finite(&self) -> bool {
        let t = &self.table;
        t.values.all_finite() && t.errors.all_finite() && t.orders.all_finite() && t.reference.all_finite()
    }
}

impl Finite for ReportDocument {
    fn all_finite(&self) -> bool {
        self.audit.all_finite()
            && self.reports.all_finite()
            && self.reilly.all_finite()
            && self.identities.all_finite()
            && self.curvature.all_finite()
            && self.sectional.all_finite()
            && self.sweep.all_finite()
            && self.convergence.all_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(deficit: f64) -> SweepRow {
        SweepRow {
            epsilon: 0.1,
            lhs: 1.0,
            rhs: 1.0,
            deficit,
            relative_deficit: 0.0,
            min_convexity_eig: 1.0,
            min_substatic_eig: 1.0,
            status: freebound::inequalities::ReportStatus::Holds,
        }
    }

    #[test]
    fn non_finite_values_are_caught() {
        let mut doc = ReportDocument::new("sweep");
        doc.sweep.push(row(0.5));
        assert!(doc.all_finite());
        doc.sweep.push(row(f64::NAN));
        assert!(!doc.all_finite());
        doc.sweep[1] = row(f64::INFINITY);
        assert!(!doc.all_finite());
    }

    #[test]
    fn csv_rows_follow_header() {
        let mut doc = ReportDocument::new("sweep");
        doc.sweep.push(row(0.25));
        assert_eq!(doc.sweep_csv(), "epsilon,deficit,relative_deficit,min_convexity_eig\n0.1,0.25,0,1\n");
    }

    #[test]
    fn document_round_trips() {
        let mut doc = ReportDocument::new("sweep");
        doc.sweep.push(row(1.0 / 3.0));
        doc.fail("example");
        let back: ReportDocument = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
    }
}
