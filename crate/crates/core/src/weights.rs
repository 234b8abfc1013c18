//! Weight functions `V` attached to each support family.
//!
//! The formula is selected by the support and cannot be chosen
//! independently. Every weight satisfies `Hess V = -K V g` in the ambient
//! space form and `dV(N) = kappa V` on its support; the residual functions
//! below measure both identities.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::ambient::{MetricData, SpaceFormModel};
use crate::error::{Error, Result};
use crate::supports::{ChartShape, SupportKind, SupportSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFormula {
    /// `x_n` in R^n (sphere support).
    EuclidXn,
    /// `1` in R^n (plane support).
    EuclidOne,
    /// `2 x_n / (1 - |x|^2)` in the Poincare ball.
    HypBall,
    /// `1 / x_n` in the upper half-space.
    HypHalfspace,
    /// `2 x_n / (1 + |x|^2)` in the stereographic chart.
    SphGeodesicBall,
    /// `(1 - |x|^2) / (1 + |x|^2)` in the stereographic chart.
    SphHyperplane,
}

impl WeightFormula {
    pub const ALL: [WeightFormula; 6] = [
        WeightFormula::EuclidXn,
        WeightFormula::EuclidOne,
        WeightFormula::HypBall,
        WeightFormula::HypHalfspace,
        WeightFormula::SphGeodesicBall,
        WeightFormula::SphHyperplane,
    ];

    pub fn for_support(kind: &SupportKind) -> Self {
        match kind {
            SupportKind::EuclideanSphere { .. } => WeightFormula::EuclidXn,
            SupportKind::EuclideanPlane => WeightFormula::EuclidOne,
            SupportKind::HypGeodesicSphere { .. } => WeightFormula::HypBall,
            SupportKind::Horosphere | SupportKind::Equidistant { .. } | SupportKind::HypGeodesicPlane => {
                WeightFormula::HypHalfspace
            }
            SupportKind::SphGeodesicSphere { .. } => WeightFormula::SphGeodesicBall,
            SupportKind::SphHyperplane => WeightFormula::SphHyperplane,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightFormula::EuclidXn => "euclid_xn",
            WeightFormula::EuclidOne => "euclid_one",
            WeightFormula::HypBall => "hyp_ball",
            WeightFormula::HypHalfspace => "hyp_halfspace",
            WeightFormula::SphGeodesicBall => "sph_geodesicball",
            WeightFormula::SphHyperplane => "sph_hyperplane",
        }
    }

    /// Value, Euclidean gradient and Euclidean Hessian in chart coordinates.
    pub fn euclidean_jet(self, x: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let xn = x[n - 1];
        let s: f64 = x.iter().map(|c| c * c).sum();
        let e = |i: usize| if i == n - 1 { 1.0 } else { 0.0 };
        match self {
            WeightFormula::EuclidXn => (xn, DVector::from_fn(n, |i, _| e(i)), DMatrix::zeros(n, n)),
            WeightFormula::EuclidOne => (1.0, DVector::zeros(n), DMatrix::zeros(n, n)),
            WeightFormula::HypBall => {
                let d = 1.0 - s;
                let value = 2.0 * xn / d;
                let grad = DVector::from_fn(n, |i, _| 2.0 * e(i) / d + 4.0 * xn * x[i] / (d * d));
                let hess = DMatrix::from_fn(n, n, |i, j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    4.0 * (e(i) * x[j] + e(j) * x[i]) / (d * d)
                        + 4.0 * xn * delta / (d * d)
                        + 16.0 * xn * x[i] * x[j] / (d * d * d)
                });
                (value, grad, hess)
            }
            WeightFormula::HypHalfspace => {
                let mut grad = DVector::zeros(n);
                grad[n - 1] = -1.0 / (xn * xn);
                let mut hess = DMatrix::zeros(n, n);
                hess[(n - 1, n - 1)] = 2.0 / (xn * xn * xn);
                (1.0 / xn, grad, hess)
            }
            WeightFormula::SphGeodesicBall => {
                let d = 1.0 + s;
                let value = 2.0 * xn / d;
                let grad = DVector::from_fn(n, |i, _| 2.0 * e(i) / d - 4.0 * xn * x[i] / (d * d));
                let hess = DMatrix::from_fn(n, n, |i, j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    -4.0 * (e(i) * x[j] + e(j) * x[i]) / (d * d) - 4.0 * xn * delta / (d * d)
                        + 16.0 * xn * x[i] * x[j] / (d * d * d)
                });
                (value, grad, hess)
            }
            WeightFormula::SphHyperplane => {
                let d = 1.0 + s;
                let value = (1.0 - s) / d;
                let grad = DVector::from_fn(n, |i, _| -4.0 * x[i] / (d * d));
                let hess = DMatrix::from_fn(n, n, |i, j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    -4.0 * delta / (d * d) + 16.0 * x[i] * x[j] / (d * d * d)
                });
                (value, grad, hess)
            }
        }
    }
}

/// A weight field bound to its support.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    model: SpaceFormModel,
    support_kind: SupportKind,
    formula: WeightFormula,
}

/// `V` with its covariant derivatives at one chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightJet {
    pub value: f64,
    /// Euclidean partials `d_i V` (the differential).
    pub differential: DVector<f64>,
    /// Metric gradient `grad V` in chart components.
    pub gradient: DVector<f64>,
    /// Covariant Hessian `Hess V` in chart components.
    pub hessian: DMatrix<f64>,
}

impl WeightJet {
    /// `dV(X)` for a chart vector `X`.
    pub fn directional(&self, x: &DVector<f64>) -> f64 {
        self.differential.dot(x)
    }
}

impl WeightField {
    pub fn for_support(support: &SupportSpec) -> Self {
        WeightField {
            model: support.model(),
            support_kind: support.kind(),
            formula: WeightFormula::for_support(&support.kind()),
        }
    }

    pub fn model(&self) -> SpaceFormModel {
        self.model
    }

    pub fn formula(&self) -> WeightFormula {
        self.formula
    }

    pub fn support_kind(&self) -> SupportKind {
        self.support_kind
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.model.check(p)?;
        Ok(self.formula.euclidean_jet(p).0)
    }

    pub fn eval(&self, p: &[f64]) -> Result<WeightJet> {
        let metric = self.model.metric_at(p)?;
        Ok(self.eval_with(p, &metric))
    }

    /// Evaluate with an already computed metric at `p`.
    pub fn eval_with(&self, p: &[f64], metric: &MetricData) -> WeightJet {
        let (value, differential, euclid_hess) = self.formula.euclidean_jet(p);
        let hessian = metric.covariant_hessian(&differential, &euclid_hess);
        WeightJet {
            value,
            gradient: metric.raise(&differential),
            differential,
            hessian,
        }
    }
}

/// `max_p max_ij |Hess V + K V g|_ij` over the sample.
pub fn hessian_identity_residual(w: &WeightField, points: &[DVector<f64>]) -> Result<f64> {
    let k = w.model.curvature();
    let mut worst: f64 = 0.0;
    for p in points {
        let metric = w.model.metric_at(p.as_slice())?;
        let jet = w.eval_with(p.as_slice(), &metric);
        let n = p.len();
        for i in 0..n {
            for j in 0..n {
                let g = if i == j { metric.conformal_factor } else { 0.0 };
                worst = worst.max((jet.hessian[(i, j)] + k * jet.value * g).abs());
            }
        }
    }
    Ok(worst)
}

/// Finite-difference oracle for [`hessian_identity_residual`]. The Euclidean
/// derivatives of `V` come from central differences of its values with the
/// given step; each residual entry is divided by `max(1, |V| e^{2 phi})` so
/// that points near the ideal boundary are not dominated by truncation error.
pub fn hessian_identity_residual_fd(w: &WeightField, points: &[DVector<f64>], step: f64) -> Result<f64> {
    let k = w.model.curvature();
    let mut worst: f64 = 0.0;
    for p in points {
        let n = p.len();
        let metric = w.model.metric_at(p.as_slice())?;
        let at = |offsets: &[(usize, f64)]| -> Result<f64> {
            let mut q = p.clone();
            for &(i, d) in offsets {
                q[i] += d;
            }
            w.value(q.as_slice())
        };
        let v = at(&[])?;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            let plus = at(&[(i, step)])?;
            let minus = at(&[(i, -step)])?;
            grad[i] = (plus - minus) / (2.0 * step);
            hess[(i, i)] = (plus - 2.0 * v + minus) / (step * step);
            for j in 0..i {
                let d = at(&[(i, step), (j, step)])? - at(&[(i, step), (j, -step)])? - at(&[(i, -step), (j, step)])?
                    + at(&[(i, -step), (j, -step)])?;
                hess[(i, j)] = d / (4.0 * step * step);
                hess[(j, i)] = hess[(i, j)];
            }
        }
        let cov = metric.covariant_hessian(&grad, &hess);
        let scale = (v.abs() * metric.conformal_factor).max(1.0);
        for i in 0..n {
            for j in 0..n {
                let g = if i == j { metric.conformal_factor } else { 0.0 };
                worst = worst.max((cov[(i, j)] + k * v * g).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// `max_p |dV(N) - kappa V|` over points of the support, `N` the metric-unit
/// outward normal of `B^int`.
pub fn neumann_identity_residual(w: &WeightField, s: &SupportSpec, points: &[DVector<f64>]) -> Result<f64> {
    if WeightFormula::for_support(&s.kind()) != w.formula || s.model() != w.model {
        return Err(Error::InvalidParameter(format!(
            "weight {} is not paired with support {}",
            w.formula.name(),
            s.kind().name()
        )));
    }
    let mut worst: f64 = 0.0;
    for p in points {
        let distance = s.signed_distance(p.as_slice())?;
        if distance.abs() > 1e-12 {
            return Err(Error::PointNotOnSupport { distance });
        }
        let normal = s.outward_normal(p.as_slice())?;
        let jet = w.eval(p.as_slice())?;
        worst = worst.max((jet.directional(&normal) - s.kappa() * jet.value).abs());
    }
    Ok(worst)
}

/// Seeded rejection sampling of `count` points in the admissible region of
/// `s` (`B^int` or `B^{int,+}`), drawn from a box that covers the region
/// near the support. `extent` bounds the box for unbounded regions.
pub fn sample_admissible(s: &SupportSpec, count: usize, seed: u64, extent: f64) -> Vec<DVector<f64>> {
    let n = s.model().dim();
    let (lo, hi) = sampling_box(s, extent);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = DVector::from_fn(n, |i, _| rng.random_range(lo[i]..hi[i]));
        if s.in_admissible_region(p.as_slice()) {
            out.push(p);
        }
    }
    out
}

fn sampling_box(s: &SupportSpec, extent: f64) -> (Vec<f64>, Vec<f64>) {
    let n = s.model().dim();
    match s.shape() {
        ChartShape::Sphere { center, radius } => (
            (0..n).map(|i| center[i] - radius).collect(),
            (0..n).map(|i| center[i] + radius).collect(),
        ),
        ChartShape::Plane { point, .. } => {
            let mut lo: Vec<f64> = (0..n).map(|i| point[i] - extent).collect();
            let mut hi: Vec<f64> = (0..n).map(|i| point[i] + extent).collect();
            if s.model().kind() == crate::ambient::ModelKind::UpperHalfSpace {
                // keep away from the ideal boundary
                lo[n - 1] = lo[n - 1].max(0.1);
                hi[n - 1] = hi[n - 1].max(lo[n - 1] + extent);
            }
            if s.half_region().is_some() {
                lo.iter_mut().for_each(|c| *c = c.max(-1.0));
                hi.iter_mut().for_each(|c| *c = c.min(1.0));
            }
            (lo, hi)
        }
    }
}
