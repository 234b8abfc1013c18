//! Conformal coordinate models of the space forms.
//!
//! Every model is a chart on an open subset of R^n carrying a metric
//! `e^{2 phi} delta`. Angles in the chart are Euclidean angles, and every
//! umbilical hypersurface is a Euclidean sphere or plane, which is what the
//! cap constructions rely on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// R^n with the flat metric.
    EuclideanCartesian,
    /// Unit ball with `4 / (1 - |x|^2)^2 delta`.
    PoincareBall,
    /// Half-space `x_n > 0` with `delta / x_n^2`.
    UpperHalfSpace,
    /// Stereographic image of the sphere minus its south pole,
    /// `4 / (1 + |x|^2)^2 delta`.
    SphereStereographic,
}

impl ModelKind {
    pub fn curvature(self) -> f64 {
        match self {
            ModelKind::EuclideanCartesian => 0.0,
            ModelKind::PoincareBall | ModelKind::UpperHalfSpace => -1.0,
            ModelKind::SphereStereographic => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::EuclideanCartesian => "euclidean_cartesian",
            ModelKind::PoincareBall => "poincare_ball",
            ModelKind::UpperHalfSpace => "upper_half_space",
            ModelKind::SphereStereographic => "sphere_stereographic",
        }
    }
}

/// A space form `M^n(K)` realized in one of the conformal charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceFormModel {
    kind: ModelKind,
    dim: usize,
}

/// Conformal factor `e^{2 phi}` with exact Euclidean derivatives of `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricData {
    pub conformal_factor: f64,
    pub phi: f64,
    pub phi_grad: DVector<f64>,
    pub phi_hess: DMatrix<f64>,
}

impl MetricData {
    /// `e^{phi}`, the ratio between metric and Euclidean lengths.
    pub fn scale(&self) -> f64 {
        self.phi.exp()
    }

    /// Metric inner product of two chart vectors.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.conformal_factor * u.dot(v)
    }

    /// Contraction `Gamma^k_{ij} u^i v^j` of the Levi-Civita connection.
    ///
    /// For a conformal metric this is
    /// `u^k <dphi, v> + v^k <dphi, u> - <u, v> dphi^k`.
    pub fn connection(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let du = self.phi_grad.dot(u);
        let dv = self.phi_grad.dot(v);
        u * dv + v * du - &self.phi_grad * u.dot(v)
    }

    /// Covariant Hessian from the Euclidean gradient and Hessian of a scalar:
    /// `d_i d_j f - Gamma^k_{ij} d_k f`.
    pub fn covariant_hessian(&self, grad: &DVector<f64>, hess: &DMatrix<f64>) -> DMatrix<f64> {
        let n = grad.len();
        let pf = self.phi_grad.dot(grad);
        let mut out = hess.clone();
        for i in 0..n {
            for j in 0..n {
                let mut gamma = self.phi_grad[i] * grad[j] + self.phi_grad[j] * grad[i];
                if i == j {
                    gamma -= pf;
                }
                out[(i, j)] -= gamma;
            }
        }
        out
    }

    /// Raise the index of a covector: `g^{ij} w_j = e^{-2 phi} w_i`.
    pub fn raise(&self, covector: &DVector<f64>) -> DVector<f64> {
        covector / self.conformal_factor
    }

    /// Metric trace of a bilinear form.
    pub fn trace(&self, form: &DMatrix<f64>) -> f64 {
        form.trace() / self.conformal_factor
    }

    /// Squared metric norm of a bilinear form, `g^{ia} g^{jb} A_ij A_ab`.
    pub fn norm_sq(&self, form: &DMatrix<f64>) -> f64 {
        form.norm_squared() / (self.conformal_factor * self.conformal_factor)
    }
}

/// Christoffel symbols `Gamma^k_{ij}` stored densely as `[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffels {
    n: usize,
    data: Vec<f64>,
}

impl Christoffels {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    fn from_phi_grad(grad: &DVector<f64>) -> Self {
        let n = grad.len();
        let mut data = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if i == k {
                        v += grad[j];
                    }
                    if j == k {
                        v += grad[i];
                    }
                    if i == j {
                        v -= grad[k];
                    }
                    data[(k * n + i) * n + j] = v;
                }
            }
        }
        Christoffels { n, data }
    }

    fn combine(a: &Self, b: &Self, ca: f64, cb: f64) -> Self {
        Christoffels {
            n: a.n,
            data: a.data.iter().zip(&b.data).map(|(x, y)| ca * x + cb * y).collect(),
        }
    }
}

impl SpaceFormModel {
    pub fn new(kind: ModelKind, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooLow {
                required: 2,
                found: dim,
            });
        }
        Ok(SpaceFormModel { kind, dim })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(ModelKind::EuclideanCartesian, dim)
    }

    pub fn poincare_ball(dim: usize) -> Result<Self> {
        Self::new(ModelKind::PoincareBall, dim)
    }

    pub fn upper_half_space(dim: usize) -> Result<Self> {
        Self::new(ModelKind::UpperHalfSpace, dim)
    }

    pub fn sphere_stereographic(dim: usize) -> Result<Self> {
        Self::new(ModelKind::SphereStereographic, dim)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sectional curvature `K`.
    pub fn curvature(&self) -> f64 {
        self.kind.curvature()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match self.kind {
            ModelKind::EuclideanCartesian | ModelKind::SphereStereographic => true,
            ModelKind::PoincareBall => x.iter().map(|c| c * c).sum::<f64>() < 1.0,
            ModelKind::UpperHalfSpace => x[self.dim - 1] > 0.0,
        }
    }

    /// Euclidean distance-like margin to the edge of the chart domain
    /// (`1 - |x|` for the ball, `x_n` for the half-space, infinite otherwise).
    pub fn domain_margin(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::EuclideanCartesian | ModelKind::SphereStereographic => f64::INFINITY,
            ModelKind::PoincareBall => 1.0 - x.iter().map(|c| c * c).sum::<f64>().sqrt(),
            ModelKind::UpperHalfSpace => x[self.dim - 1],
        }
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::PointOutsideChart {
                model: self.kind.name(),
                point: x.to_vec(),
            })
        }
    }

    /// Conformal factor and exact derivatives of `phi` at `x`.
    pub fn metric_at(&self, x: &[f64]) -> Result<MetricData> {
        self.check(x)?;
        let n = self.dim;
        let s: f64 = x.iter().map(|c| c * c).sum();
        let (phi, phi_grad, phi_hess) = match self.kind {
            ModelKind::EuclideanCartesian => (0.0, DVector::zeros(n), DMatrix::zeros(n, n)),
            ModelKind::PoincareBall => {
                // phi = log 2 - log(1 - |x|^2)
                let d = 1.0 - s;
                let grad = DVector::from_fn(n, |i, _| 2.0 * x[i] / d);
                let hess = DMatrix::from_fn(n, n, |i, j| {
                    let diag = if i == j { 2.0 / d } else { 0.0 };
                    diag + 4.0 * x[i] * x[j] / (d * d)
                });
                ((2.0 / d).ln(), grad, hess)
            }
            ModelKind::UpperHalfSpace => {
                // phi = -log x_n
                let xn = x[n - 1];
                let mut grad = DVector::zeros(n);
                grad[n - 1] = -1.0 / xn;
                let mut hess = DMatrix::zeros(n, n);
                hess[(n - 1, n - 1)] = 1.0 / (xn * xn);
                (-xn.ln(), grad, hess)
            }
            ModelKind::SphereStereographic => {
                // phi = log 2 - log(1 + |x|^2)
                let d = 1.0 + s;
                let grad = DVector::from_fn(n, |i, _| -2.0 * x[i] / d);
                let hess = DMatrix::from_fn(n, n, |i, j| {
                    let diag = if i == j { -2.0 / d } else { 0.0 };
                    diag + 4.0 * x[i] * x[j] / (d * d)
                });
                ((2.0 / d).ln(), grad, hess)
            }
        };
        let conformal_factor = match self.kind {
            ModelKind::EuclideanCartesian => 1.0,
            ModelKind::PoincareBall => 4.0 / ((1.0 - s) * (1.0 - s)),
            ModelKind::UpperHalfSpace => 1.0 / (x[n - 1] * x[n - 1]),
            ModelKind::SphereStereographic => 4.0 / ((1.0 + s) * (1.0 + s)),
        };
        Ok(MetricData {
            conformal_factor,
            phi,
            phi_grad,
            phi_hess,
        })
    }

    /// Exact Christoffel symbols at `x`.
    pub fn christoffels_at(&self, x: &[f64]) -> Result<Christoffels> {
        let m = self.metric_at(x)?;
        Ok(Christoffels::from_phi_grad(&m.phi_grad))
    }

    /// `e^{2 phi(p)} <u, v>`.
    pub fn ambient_inner(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        let m = self.metric_at(p)?;
        if u.len() != self.dim || v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.len().min(v.len()),
            });
        }
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        Ok(m.conformal_factor * dot)
    }

    /// Sectional curvature of the plane spanned by `u`, `v` at `p`, computed
    /// from the Riemann tensor with Christoffel derivatives taken by central
    /// differences (step `1e-4`, one Richardson level).
    pub fn sectional_curvature_probe(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        let n = self.dim;
        let metric = self.metric_at(p)?;
        let uu = DVector::from_column_slice(u);
        let vv = DVector::from_column_slice(v);
        let guu = metric.inner(&uu, &uu);
        let gvv = metric.inner(&vv, &vv);
        let guv = metric.inner(&uu, &vv);
        let area_sq = guu * gvv - guv * guv;
        if area_sq <= 1e-14 * guu.max(f64::MIN_POSITIVE) * gvv.max(f64::MIN_POSITIVE) {
            return Err(Error::DegeneratePlane { area_sq });
        }

        let gamma = self.christoffels_at(p)?;
        // dgamma[a] = d_a Gamma
        let mut dgamma = Vec::with_capacity(n);
        for a in 0..n {
            let diff = |h: f64| -> Result<Christoffels> {
                let mut xp = p.to_vec();
                let mut xm = p.to_vec();
                xp[a] += h;
                xm[a] -= h;
                let gp = self.christoffels_at(&xp)?;
                let gm = self.christoffels_at(&xm)?;
                Ok(Christoffels::combine(&gp, &gm, 0.5 / h, -0.5 / h))
            };
            let coarse = diff(1e-4)?;
            let fine = diff(0.5e-4)?;
            dgamma.push(Christoffels::combine(&fine, &coarse, 4.0 / 3.0, -1.0 / 3.0));
        }

        // R^l_{ijk} = d_i G^l_{jk} - d_j G^l_{ik} + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik}
        let riemann = |l: usize, i: usize, j: usize, k: usize| -> f64 {
            let mut r = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
            for m in 0..n {
                r += gamma.get(l, i, m) * gamma.get(m, j, k) - gamma.get(l, j, m) * gamma.get(m, i, k);
            }
            r
        };
        // <R(u, v) v, u>
        let mut num = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let coeff = u[i] * v[j] * v[k];
                    if coeff == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        num += coeff * riemann(l, i, j, k) * metric.conformal_factor * u[l];
                    }
                }
            }
        }
        Ok(num / area_sq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn euclidean_metric_is_flat() {
        let m = SpaceFormModel::euclidean(3).unwrap();
        let d = m.metric_at(&[1.0, -2.0, 5.0]).unwrap();
        assert_eq!(d.conformal_factor, 1.0);
        assert_eq!(d.phi_grad.norm(), 0.0);
        let g = m.christoffels_at(&[1.0, 2.0, 3.0]).unwrap();
        assert!(g.data.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn poincare_origin_factor_four() {
        let m = SpaceFormModel::poincare_ball(3).unwrap();
        let d = m.metric_at(&[0.0; 3]).unwrap();
        assert_abs_diff_eq!(d.conformal_factor, 4.0, epsilon = 1e-15);
        assert_eq!(d.phi_grad.norm(), 0.0);
        let g = m.christoffels_at(&[0.0; 3]).unwrap();
        assert!(g.data.iter().all(|&c| c == 0.0));
        assert_abs_diff_eq!(m.ambient_inner(&[0.0; 3], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), 4.0);
    }

    #[test]
    fn half_space_at_height_two() {
        let m = SpaceFormModel::upper_half_space(3).unwrap();
        let d = m.metric_at(&[0.3, -1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(d.conformal_factor, 0.25, epsilon = 1e-15);
        assert_eq!(d.phi_grad.as_slice(), &[0.0, 0.0, -0.5]);
        assert_abs_diff_eq!(
            m.ambient_inner(&[0.0, 0.0, 2.0], &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(),
            0.25
        );
    }

    #[test]
    fn half_space_christoffels_at_unit_height() {
        let m = SpaceFormModel::upper_half_space(3).unwrap();
        let g = m.christoffels_at(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(g.get(2, 0, 0), 1.0);
        assert_eq!(g.get(0, 0, 2), -1.0);
        assert_eq!(g.get(0, 2, 0), -1.0);
        assert_eq!(g.get(2, 2, 2), -1.0);
    }

    #[test]
    fn chart_domains_are_enforced() {
        let ball = SpaceFormModel::poincare_ball(2).unwrap();
        assert!(matches!(ball.metric_at(&[0.8, 0.8]), Err(Error::PointOutsideChart { .. })));
        let half = SpaceFormModel::upper_half_space(2).unwrap();
        assert!(matches!(half.metric_at(&[0.0, 0.0]), Err(Error::PointOutsideChart { .. })));
        assert!(SpaceFormModel::euclidean(1).is_err());
    }

    #[test]
    fn curvature_probe_signs() {
        let u = [1.0, 0.0, 0.0];
        let v = [0.0, 1.0, 0.0];
        let e = SpaceFormModel::euclidean(3).unwrap();
        assert_abs_diff_eq!(e.sectional_curvature_probe(&[0.1, 0.2, 0.3], &u, &v).unwrap(), 0.0, epsilon = 1e-8);
        let b = SpaceFormModel::poincare_ball(3).unwrap();
        assert_abs_diff_eq!(b.sectional_curvature_probe(&[0.1, 0.2, 0.3], &u, &v).unwrap(), -1.0, epsilon = 1e-5);
        let s = SpaceFormModel::sphere_stereographic(3).unwrap();
        assert_abs_diff_eq!(s.sectional_curvature_probe(&[0.5, -1.0, 0.3], &u, &v).unwrap(), 1.0, epsilon = 1e-5);
        assert!(matches!(
            s.sectional_curvature_probe(&[0.0; 3], &u, &[2.0, 0.0, 0.0]),
            Err(Error::DegeneratePlane { .. })
        ));
    }
}
