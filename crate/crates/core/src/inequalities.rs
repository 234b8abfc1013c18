//! Weighted Minkowski, Alexandrov-Fenchel and almost-Schur checks, the
//! hypothesis audit behind them, and the weighted Reilly identity residual.
//!
//! Every report carries both sides, a deficit oriented so that the
//! hypotheses imply `deficit >= 0`, and the audit. Validation failures
//! (geometry that does not describe the intended configuration) abort the
//! report; hypothesis failures only change its status.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambient::MetricData;
use crate::error::{Error, Result};
use crate::families::Scenario;
use crate::quadrature::{domain_integrals, surface_integrals, DomainRegion, QuadratureRule};
use crate::surfaces::{CurvatureData, FreeBoundarySurface, FundamentalForms};
use crate::weights::WeightField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Minkowski,
    #[serde(rename = "af")]
    AlexandrovFenchel,
    AlmostSchur,
    ClassicalReilly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub orthogonality: f64,
    pub on_support: f64,
    pub principal_direction: f64,
    pub admissibility: f64,
    /// Slack on the convexity and sub-static eigenvalues.
    pub hypothesis: f64,
    /// Relative deficit below which a report counts as an equality case.
    pub equality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            orthogonality: 1e-8,
            on_support: 1e-10,
            principal_direction: 1e-8,
            admissibility: crate::families::ADMISSIBILITY_MARGIN,
            hypothesis: 1e-9,
            equality: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Failing means the scenario is not the configuration being tested.
    Validation,
    /// Failing means the theorem does not apply.
    Hypothesis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub kind: CheckKind,
    pub value: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Pass/fail record of every condition a report depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisAudit {
    pub checks: Vec<CheckRecord>,
}

impl HypothesisAudit {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.check(name).and_then(|c| c.value)
    }

    pub fn first_validation_failure(&self) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.kind == CheckKind::Validation && !c.passed)
    }

    pub fn validation_passed(&self) -> bool {
        self.first_validation_failure().is_none()
    }

    /// The hypothesis the given theorem relies on.
    pub fn hypothesis_for(theorem: TheoremId) -> Option<&'static str> {
        match theorem {
            TheoremId::Minkowski => Some("convexity"),
            TheoremId::AlexandrovFenchel | TheoremId::AlmostSchur => Some("substatic"),
            TheoremId::ClassicalReilly => None,
        }
    }

    pub fn hypotheses_hold(&self, theorem: TheoremId) -> bool {
        Self::hypothesis_for(theorem).is_none_or(|name| self.check(name).is_some_and(|c| c.passed))
    }

    /// Error naming the first failed validation check.
    pub fn require_valid(&self) -> Result<()> {
        match self.first_validation_failure() {
            None => Ok(()),
            Some(c) => Err(Error::ValidationFailed {
                check: c.name.clone(),
                detail: c.detail.clone().unwrap_or_else(|| match c.value {
                    Some(v) => format!("value {v:e} against tolerance {:e}", c.tolerance),
                    None => "not evaluable".into(),
                }),
            }),
        }
    }
}

fn record(name: &str, kind: CheckKind, tolerance: f64, outcome: Result<f64>, pass: impl Fn(f64) -> bool) -> CheckRecord {
    match outcome {
        Ok(v) => CheckRecord {
            name: name.into(),
            kind,
            value: Some(v),
            tolerance,
            passed: v.is_finite() && pass(v),
            detail: None,
        },
        Err(e) => CheckRecord {
            name: name.into(),
            kind,
            value: None,
            tolerance,
            passed: false,
            detail: Some(e.to_string()),
        },
    }
}

/// Run every check on the scenario's quadrature nodes.
pub fn hypothesis_audit(s: &Scenario, rule: &QuadratureRule, tol: &Tolerances) -> HypothesisAudit {
    use CheckKind::{Hypothesis, Validation};
    let sigma = &s.surface;
    let face = &s.support_piece;
    let w = &s.weight;
    let mut checks = Vec::new();

    let immersion = sigma.immersion_margin(rule).min(face.immersion_margin(rule));
    checks.push(record("immersion", Validation, crate::surfaces::IMMERSION_THRESHOLD, Ok(immersion), |v| {
        v >= crate::surfaces::IMMERSION_THRESHOLD
    }));

    let adm = sigma.admissibility(rule).and_then(|a| {
        let b = face.admissibility(rule)?;
        if a.outside_nodes > 0 {
            return Err(Error::InadmissiblePlacement(format!("{} cap nodes outside B^int", a.outside_nodes)));
        }
        let m = match (a.margin, b.margin) {
            (Some(x), Some(y)) => x.min(y),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => f64::MAX,
        };
        Ok(m)
    });
    checks.push(record("admissibility", Validation, tol.admissibility, adm, |v| v >= tol.admissibility));

    let vmin = sigma.weight_min(w, rule).and_then(|a| Ok(a.min(face.weight_min(w, rule)?)));
    checks.push(record("weight_positive", Validation, 0.0, vmin, |v| v > 0.0));

    let star = s.region.star_shape_margin(rule);
    checks.push(record("star_shape", Validation, 0.0, Ok(star), |v| v > 0.0));

    let ortho = sigma.boundary_orthogonality(rule);
    let (angle, dist) = match ortho {
        Ok((a, d)) => (Ok(a), Ok(d)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    checks.push(record("on_support", Validation, tol.on_support, dist, |v| v <= tol.on_support));
    checks.push(record("boundary_orthogonality", Validation, tol.orthogonality, angle, |v| {
        v <= tol.orthogonality
    }));
    let pd = sigma.boundary_principal_direction_residual(rule);
    checks.push(record("principal_direction", Validation, tol.principal_direction, pd, |v| {
        v <= tol.principal_direction
    }));

    let convex = sigma.condition_convexity(w, rule);
    checks.push(record("convexity", Hypothesis, tol.hypothesis, convex, |v| v >= -tol.hypothesis));
    let sub = sigma.condition_substatic(w, rule);
    checks.push(record("substatic", Hypothesis, tol.hypothesis, sub, |v| v >= -tol.hypothesis));
    HypothesisAudit { checks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    /// Hypotheses hold and so does the inequality.
    Holds,
    /// Hypotheses hold but the deficit is negative beyond tolerance.
    Violated,
    /// The theorem does not apply; both sides are still reported.
    HypothesesViolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    pub level: usize,
    pub pieces: usize,
}

/// The equivalent normalized Alexandrov-Fenchel form
/// `int (H - mean_V H)^2 V <= (n-1)/(n-2) int |h0|^2 V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedForm {
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub relative_deficit: f64,
    pub sign_agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub theorem: TheoremId,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub relative_deficit: f64,
    pub equality: bool,
    pub status: ReportStatus,
    pub hypotheses: HypothesisAudit,
    pub quadrature: QuadratureMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<NormalizedForm>,
}

/// Scale below which both sides count as zero.
const ZERO_SCALE: f64 = 1e-10;

/// `deficit / max(|lhs|, |rhs|)`, or `0` when both sides vanish.
pub fn relative_deficit(lhs: f64, rhs: f64, deficit: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale <= ZERO_SCALE {
        0.0
    } else {
        deficit / scale
    }
}

fn assemble(
    theorem: TheoremId,
    lhs: f64,
    rhs: f64,
    deficit: f64,
    audit: HypothesisAudit,
    s: &Scenario,
    rule: &QuadratureRule,
    tol: &Tolerances,
) -> InequalityReport {
    let rel = relative_deficit(lhs, rhs, deficit);
    let status = if !audit.hypotheses_hold(theorem) {
        ReportStatus::HypothesesViolated
    } else if rel >= -tol.equality {
        ReportStatus::Holds
    } else {
        ReportStatus::Violated
    };
    InequalityReport {
        theorem,
        lhs,
        rhs,
        deficit,
        relative_deficit: rel,
        equality: rel.abs() <= tol.equality,
        status,
        hypotheses: audit,
        quadrature: QuadratureMeta {
            level: rule.level(),
            pieces: s.region.pieces().len(),
        },
        normalized: None,
    }
}

fn weight_jet(w: &WeightField, forms: &FundamentalForms) -> (f64, f64) {
    let jet = w.eval_with(forms.point.as_slice(), &forms.metric);
    (jet.value, jet.directional(&forms.nu))
}

/// `(int_Sigma V)^2 >= n/(n-1) int_Omega V int_Sigma H V`.
pub fn minkowski_report(s: &Scenario, rule: &QuadratureRule, tol: &Tolerances) -> Result<InequalityReport> {
    let audit = hypothesis_audit(s, rule, tol);
    audit.require_valid()?;
    let n = s.dim() as f64;
    let k = s.surface.model().curvature();
    let w = &s.weight;
    let sums = surface_integrals(
        &s.surface,
        2,
        |f| {
            let (v, _) = weight_jet(w, f);
            let c = CurvatureData::from_forms(f, k);
            Ok(vec![v, c.mean * v])
        },
        rule,
    )?;
    let vol = domain_integrals(&s.region, 1, |x, m| Ok(vec![w.eval_with(x, m).value]), rule)?[0];
    let lhs = sums[0] * sums[0];
    let rhs = n / (n - 1.0) * vol * sums[1];
    Ok(assemble(TheoremId::Minkowski, lhs, rhs, lhs - rhs, audit, s, rule, tol))
}

/// `(int H V)^2 >= 2(n-1)/(n-2) int V int sigma_2 V`, with the normalized form.
pub fn af_report(s: &Scenario, rule: &QuadratureRule, tol: &Tolerances) -> Result<InequalityReport> {
    let n = s.dim();
    if n < 3 {
        return Err(Error::DimensionTooLow { required: 3, found: n });
    }
    let audit = hypothesis_audit(s, rule, tol);
    audit.require_valid()?;
    let nf = n as f64;
    let k = s.surface.model().curvature();
    let w = &s.weight;
    let first = surface_integrals(
        &s.surface,
        3,
        |f| {
            let (v, _) = weight_jet(w, f);
            let c = CurvatureData::from_forms(f, k);
            Ok(vec![v, c.mean * v, c.sigma2 * v])
        },
        rule,
    )?;
    let (int_v, int_hv, int_s2v) = (first[0], first[1], first[2]);
    let lhs = int_hv * int_hv;
    let rhs = 2.0 * (nf - 1.0) / (nf - 2.0) * int_v * int_s2v;
    let deficit = lhs - rhs;

    let mean_h = int_hv / int_v;
    let second = surface_integrals(
        &s.surface,
        2,
        |f| {
            let (v, _) = weight_jet(w, f);
            let c = CurvatureData::from_forms(f, k);
            let traceless = (c.norm_h_sq - c.mean * c.mean / (nf - 1.0)).max(0.0);
            Ok(vec![(c.mean - mean_h).powi(2) * v, traceless * v])
        },
        rule,
    )?;
    let n_lhs = second[0];
    let n_rhs = (nf - 1.0) / (nf - 2.0) * second[1];
    let n_def = n_rhs - n_lhs;
    let n_rel = relative_deficit(n_lhs, n_rhs, n_def);
    let mut report = assemble(TheoremId::AlexandrovFenchel, lhs, rhs, deficit, audit, s, rule, tol);
    let both_equal = report.relative_deficit.abs() <= tol.equality && n_rel.abs() <= tol.equality;
    report.normalized = Some(NormalizedForm {
        lhs: n_lhs,
        rhs: n_rhs,
        deficit: n_def,
        relative_deficit: n_rel,
        sign_agrees: both_equal || deficit.signum() == n_def.signum(),
    });
    Ok(report)
}

/// `int |R - mean_V R|^2 V <= 4(n-1)(n-2)/(n-3)^2 int |Ric - R/(n-1) g|^2 V`,
/// deficit `rhs - lhs`.
pub fn schur_report(s: &Scenario, rule: &QuadratureRule, tol: &Tolerances) -> Result<InequalityReport> {
    let n = s.dim();
    if n < 4 {
        return Err(Error::DimensionTooLow { required: 4, found: n });
    }
    let audit = hypothesis_audit(s, rule, tol);
    audit.require_valid()?;
    let nf = n as f64;
    let k = s.surface.model().curvature();
    let w = &s.weight;
    let first = surface_integrals(
        &s.surface,
        2,
        |f| {
            let (v, _) = weight_jet(w, f);
            let c = CurvatureData::from_forms(f, k);
            Ok(vec![v, c.scal * v])
        },
        rule,
    )?;
    let mean_scal = first[1] / first[0];
    let second = surface_integrals(
        &s.surface,
        2,
        |f| {
            let (v, _) = weight_jet(w, f);
            let c = CurvatureData::from_forms(f, k);
            Ok(vec![(c.scal - mean_scal).powi(2) * v, c.traceless_ricci_sq(f) * v])
        },
        rule,
    )?;
    let constant = 4.0 * (nf - 1.0) * (nf - 2.0) / ((nf - 3.0) * (nf - 3.0));
    let lhs = second[0];
    let rhs = constant * second[1];
    Ok(assemble(TheoremId::AlmostSchur, lhs, rhs, rhs - lhs, audit, s, rule, tol))
}

type JetFn = dyn Fn(&[f64]) -> (f64, DVector<f64>, DMatrix<f64>) + Send + Sync;

/// Smooth test function for the Reilly identity, given by its value,
/// Euclidean gradient and Euclidean Hessian in chart coordinates.
#[derive(Clone)]
pub enum TestFunction {
    /// The weight `V` itself.
    Weight,
    /// `x_i`.
    Coordinate(usize),
    /// `x_i^2`.
    CoordinateSquared(usize),
    Custom(Arc<JetFn>),
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Weight => write!(f, "Weight"),
            TestFunction::Coordinate(i) => write!(f, "Coordinate({i})"),
            TestFunction::CoordinateSquared(i) => write!(f, "CoordinateSquared({i})"),
            TestFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl TestFunction {
    pub fn jet(&self, w: &WeightField, x: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        match self {
            TestFunction::Weight => w.formula().euclidean_jet(x),
            TestFunction::Coordinate(i) => {
                let mut g = DVector::zeros(n);
                g[*i] = 1.0;
                (x[*i], g, DMatrix::zeros(n, n))
            }
            TestFunction::CoordinateSquared(i) => {
                let mut g = DVector::zeros(n);
                g[*i] = 2.0 * x[*i];
                let mut h = DMatrix::zeros(n, n);
                h[(*i, *i)] = 2.0;
                (x[*i] * x[*i], g, h)
            }
            TestFunction::Custom(f) => f(x),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            TestFunction::Coordinate(i) | TestFunction::CoordinateSquared(i) if *i >= n => Err(Error::InvalidParameter(
                format!("coordinate index {i} out of range for n = {n}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Both sides of the weighted Reilly identity and their parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReillyBreakdown {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Ricci-weighted volume term of the right side.
    pub volume_rhs: f64,
    /// Boundary integral over each piece, in region order.
    pub boundary: Vec<f64>,
}

fn finite_jet(f: &TestFunction, w: &WeightField, x: &[f64]) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let jet = f.jet(w, x);
    if jet.0.is_finite() && jet.1.iter().all(|v| v.is_finite()) && jet.2.iter().all(|v| v.is_finite()) {
        Ok(jet)
    } else {
        Err(Error::NonSmoothTestFunction { point: x.to_vec() })
    }
}

fn reilly_volume(f: &TestFunction, w: &WeightField, x: &[f64], metric: &MetricData, k: f64) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let wj = w.eval_with(x, metric);
    let (fv, df, d2f) = finite_jet(f, w, x)?;
    let v = wj.value;
    let hess_f = metric.covariant_hessian(&df, &d2f);
    let lap_f = metric.trace(&hess_f);
    let lap_v = metric.trace(&wj.hessian);
    let a = lap_f - lap_v / v * fv;
    let b = &hess_f - &wj.hessian * (fv / v);
    let lhs = v * (a * a - metric.norm_sq(&b));
    let y = metric.raise(&(&df - &wj.differential * (fv / v)));
    let gbar = DMatrix::identity(x.len(), x.len()) * metric.conformal_factor;
    let tensor = &gbar * lap_v - &wj.hessian + &gbar * (v * (n - 1.0) * k);
    let rhs = (y.transpose() * tensor * &y)[0];
    Ok(vec![lhs, rhs])
}

fn reilly_boundary(f: &TestFunction, w: &WeightField, forms: &FundamentalForms) -> Result<f64> {
    let x = forms.point.as_slice();
    let metric = &forms.metric;
    let wj = w.eval_with(x, metric);
    let (fv, df, d2f) = finite_jet(f, w, x)?;
    let v = wj.value;
    let nu = &forms.nu;
    let d = &forms.tangents;
    let hess_f = metric.covariant_hessian(&df, &d2f);
    let hess_v = &wj.hessian;
    let mean = (&forms.g_inv * &forms.h).trace();

    let f_nu = df.dot(nu);
    let v_nu = wj.differential.dot(nu);
    let q = f_nu - v_nu / v * fv;

    // intrinsic Laplacian of the restriction
    let lap_f = metric.trace(&hess_f) - (nu.transpose() * &hess_f * nu)[0] - mean * f_nu;
    let lap_v = metric.trace(hess_v) - (nu.transpose() * hess_v * nu)[0] - mean * v_nu;
    let l = lap_f - lap_v / v * fv;

    // tangential differentials
    let df_t = d.transpose() * &df;
    let dv_t = d.transpose() * &wj.differential;
    let z = &df_t - &dv_t * (fv / v);
    // d_j (u_nu) = Hess u(d_j X, nu) + h_jk g^{ki} d_i u
    let shape = &forms.h * &forms.g_inv;
    let df_nu = d.transpose() * (&hess_f * nu) + &shape * &df_t;
    let dv_nu = d.transpose() * (hess_v * nu) + &shape * &dv_t;
    let dq = &df_nu - &dv_nu * (fv / v) + &dv_t * (v_nu * fv / (v * v)) - &df_t * (v_nu / v);

    let zu = &forms.g_inv * &z;
    let grad_term = dq.dot(&zu);
    let h_zz = (zu.transpose() * &forms.h * &zu)[0];
    let g_zz = z.dot(&zu);
    Ok(v * q * l - v * grad_term + v * mean * q * q + v * (h_zz - v_nu / v * g_zz))
}

/// Residual of the weighted Reilly identity on `region` with boundary
/// pieces `sigma` and `face`.
pub fn reilly_residual(
    region: &DomainRegion,
    sigma: &FreeBoundarySurface,
    face: &FreeBoundarySurface,
    f: &TestFunction,
    w: &WeightField,
    rule: &QuadratureRule,
) -> Result<ReillyBreakdown> {
    let model = region.model();
    f.check(model.dim())?;
    if sigma.model() != model || face.model() != model || w.model() != model {
        return Err(Error::validation("model", "region, pieces and weight must share one model"));
    }
    let k = model.curvature();
    let vol = domain_integrals(region, 2, |x, m| reilly_volume(f, w, x, m, k), rule)?;
    let mut boundary = Vec::with_capacity(2);
    for piece in [sigma, face] {
        let b = surface_integrals(piece, 1, |forms| Ok(vec![reilly_boundary(f, w, forms)?]), rule)?;
        boundary.push(b[0]);
    }
    let rhs = vol[1] + boundary.iter().sum::<f64>();
    Ok(ReillyBreakdown {
        lhs: vol[0],
        rhs,
        residual: (vol[0] - rhs).abs(),
        volume_rhs: vol[1],
        boundary,
    })
}

/// Reilly identity as a report; the deficit is `lhs - rhs` and equality is
/// judged against the absolute tolerance `tol.equality`.
pub fn reilly_report(s: &Scenario, f: &TestFunction, rule: &QuadratureRule, tol: &Tolerances) -> Result<(InequalityReport, ReillyBreakdown)> {
    let audit = hypothesis_audit(s, rule, tol);
    audit.require_valid()?;
    let b = reilly_residual(&s.region, &s.surface, &s.support_piece, f, &s.weight, rule)?;
    let mut report = assemble(TheoremId::ClassicalReilly, b.lhs, b.rhs, b.lhs - b.rhs, audit, s, rule, tol);
    report.equality = b.residual <= tol.equality;
    report.status = if report.equality {
        ReportStatus::Holds
    } else {
        ReportStatus::Violated
    };
    Ok((report, b))
}
