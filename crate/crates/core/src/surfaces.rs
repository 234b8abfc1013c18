//! Parametric hypersurfaces in a conformal chart: fundamental forms,
//! curvature scalars, and the free-boundary checks along `Gamma`.
//!
//! Conventions: `h_ij = -g(D_i d_j X, nu)` with `nu` the unit normal pointing
//! out of the enclosed region, so a round sphere with outward normal has
//! `H = (n-1)/r > 0`. The boundary face `Gamma` is the face `u_0 = upper`
//! of the parameter box.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambient::{MetricData, SpaceFormModel};
use crate::chart::{ChartMap, ParamBox};
use crate::error::{Error, Result};
use crate::linalg::{cross_columns, generalized_eigenvalues, symmetrize};
use crate::quadrature::QuadratureRule;
use crate::supports::SupportSpec;
use crate::weights::WeightField;

/// Threshold on `det g / prod g_ii` below which the chart is treated as
/// singular.
pub const IMMERSION_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceRole {
    /// The free hypersurface `Sigma`.
    Cap,
    /// The face `T` lying on the support.
    Support,
}

/// One smooth boundary piece of a region, parametrized over a box.
#[derive(Debug, Clone)]
pub struct FreeBoundarySurface {
    support: SupportSpec,
    chart: Arc<dyn ChartMap>,
    domain: ParamBox,
    orientation: f64,
    has_boundary: bool,
    role: PieceRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalForms {
    pub point: DVector<f64>,
    /// Chart tangent vectors `d_i X` as columns.
    pub tangents: DMatrix<f64>,
    pub metric: MetricData,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// Metric-unit normal in chart components.
    pub nu: DVector<f64>,
    /// Euclidean unit normal, `nu` rescaled by `e^{phi}`.
    pub nu_euclid: DVector<f64>,
    /// `sqrt(det g)`.
    pub area_element: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub mean: f64,
    pub norm_h_sq: f64,
    pub sigma2: f64,
    /// Intrinsic Ricci tensor from the Gauss equation, in parameter components.
    pub ric: DMatrix<f64>,
    pub scal: f64,
    /// Principal curvatures, ascending.
    pub principal: Vec<f64>,
}

impl CurvatureData {
    pub fn from_forms(forms: &FundamentalForms, ambient_curvature: f64) -> Self {
        let p = forms.g.nrows() as f64;
        let k = ambient_curvature;
        let w = &forms.g_inv * &forms.h;
        let mean = w.trace();
        let norm_h_sq = (&w * &w).trace();
        let sigma2 = 0.5 * (mean * mean - norm_h_sq);
        let hgh = &forms.h * &w;
        let mut ric = &forms.g * ((p - 1.0) * k) + &forms.h * mean - hgh;
        symmetrize(&mut ric);
        let scal = p * (p - 1.0) * k + mean * mean - norm_h_sq;
        let principal = generalized_eigenvalues(&forms.h, &forms.g).unwrap_or_default();
        CurvatureData {
            mean,
            norm_h_sq,
            sigma2,
            ric,
            scal,
            principal,
        }
    }

    /// `|Ric - scal/(n-1) g|^2`, the squared norm of the traceless Ricci tensor.
    pub fn traceless_ricci_sq(&self, forms: &FundamentalForms) -> f64 {
        let p = forms.g.nrows() as f64;
        let e = &self.ric - &forms.g * (self.scal / p);
        let m = &forms.g_inv * e;
        (&m * &m).trace()
    }
}

/// Margins of a surface with respect to the admissible region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    /// Smallest half-region or chart-domain margin over all nodes; `None`
    /// when neither constraint applies.
    pub margin: Option<f64>,
    /// Interior nodes found outside `B^int`.
    pub outside_nodes: usize,
}

impl FreeBoundarySurface {
    /// `orientation` is `+1` or `-1` and multiplies the generalized cross
    /// product of the tangents to give the outward normal.
    pub fn new(
        support: SupportSpec,
        chart: Arc<dyn ChartMap>,
        domain: ParamBox,
        role: PieceRole,
        has_boundary: bool,
        orientation: f64,
    ) -> Result<Self> {
        let n = support.model().dim();
        if chart.ambient_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: chart.ambient_dim(),
            });
        }
        if chart.param_dim() != n - 1 || domain.dim() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: chart.param_dim().min(domain.dim()),
            });
        }
        if orientation != 1.0 && orientation != -1.0 {
            return Err(Error::InvalidParameter(format!("orientation {orientation} must be +1 or -1")));
        }
        Ok(FreeBoundarySurface {
            support,
            chart,
            domain,
            orientation,
            has_boundary,
            role,
        })
    }

    /// Same chart with the orientation sign chosen so that the normal at the
    /// center of the box has positive Euclidean inner product with `outward`.
    pub fn oriented_towards(
        support: SupportSpec,
        chart: Arc<dyn ChartMap>,
        domain: ParamBox,
        role: PieceRole,
        has_boundary: bool,
        outward: &DVector<f64>,
    ) -> Result<Self> {
        let jet = chart.eval(&domain.center());
        let raw = cross_columns(&jet.d1);
        let orientation = if raw.dot(outward) >= 0.0 { 1.0 } else { -1.0 };
        Self::new(support, chart, domain, role, has_boundary, orientation)
    }

    pub fn model(&self) -> SpaceFormModel {
        self.support.model()
    }

    pub fn support(&self) -> &SupportSpec {
        &self.support
    }

    pub fn chart(&self) -> &Arc<dyn ChartMap> {
        &self.chart
    }

    pub fn domain(&self) -> &ParamBox {
        &self.domain
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn role(&self) -> PieceRole {
        self.role
    }

    pub fn has_boundary(&self) -> bool {
        self.has_boundary
    }

    pub fn fundamental_forms(&self, u: &[f64]) -> Result<FundamentalForms> {
        let jet = self.chart.eval(u);
        let metric = self.model().metric_at(jet.point.as_slice())?;
        let p = jet.param_dim();
        let gram = jet.d1.transpose() * &jet.d1;
        let diag: f64 = (0..p).map(|i| gram[(i, i)]).product();
        let det = gram.determinant();
        let normalized = if diag > 0.0 { det / diag } else { 0.0 };
        if !(normalized >= IMMERSION_THRESHOLD) {
            return Err(Error::DegenerateImmersion {
                u: u.to_vec(),
                det: normalized,
            });
        }
        let e2 = metric.conformal_factor;
        let g = &gram * e2;
        let g_inv = g.clone().try_inverse().ok_or_else(|| Error::DegenerateImmersion {
            u: u.to_vec(),
            det: normalized,
        })?;
        let raw = cross_columns(&jet.d1);
        let nu_euclid = &raw * (self.orientation / raw.norm());
        let scale = metric.scale();
        let cols: Vec<DVector<f64>> = (0..p).map(|i| jet.d1.column(i).into_owned()).collect();
        let mut h = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let accel = jet.second(i, j) + metric.connection(&cols[i], &cols[j]);
                let v = -scale * accel.dot(&nu_euclid);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let area_element = (det.max(0.0) * e2.powi(p as i32)).sqrt();
        Ok(FundamentalForms {
            nu: &nu_euclid / scale,
            point: jet.point,
            tangents: jet.d1,
            metric,
            g,
            g_inv,
            h,
            nu_euclid,
            area_element,
        })
    }

    pub fn curvature_data(&self, u: &[f64]) -> Result<CurvatureData> {
        let forms = self.fundamental_forms(u)?;
        Ok(CurvatureData::from_forms(&forms, self.model().curvature()))
    }

    fn interior_nodes(&self, rule: &QuadratureRule) -> Vec<Vec<f64>> {
        rule.nodes(&self.domain).into_iter().map(|(u, _)| u).collect()
    }

    fn face_nodes(&self, rule: &QuadratureRule) -> Result<Vec<Vec<f64>>> {
        if !self.has_boundary {
            return Err(Error::NoBoundary);
        }
        Ok(rule.face_nodes(&self.domain).into_iter().map(|(u, _)| u).collect())
    }

    /// Largest `|g(nu, N)|` and largest `|signed distance|` over the nodes of `Gamma`.
    pub fn boundary_orthogonality(&self, rule: &QuadratureRule) -> Result<(f64, f64)> {
        let mut angle: f64 = 0.0;
        let mut distance: f64 = 0.0;
        for u in self.face_nodes(rule)? {
            let forms = self.fundamental_forms(&u)?;
            let p = forms.point.as_slice();
            // both normals are unit, so the metric inner product equals the
            // Euclidean one of the Euclidean unit normals
            angle = angle.max(forms.nu_euclid.dot(&self.support.outward_euclidean(p)).abs());
            distance = distance.max(self.support.signed_distance(p)?.abs());
        }
        Ok((angle, distance))
    }

    fn weight_at(&self, w: &WeightField, forms: &FundamentalForms) -> Result<(f64, f64)> {
        let jet = w.eval_with(forms.point.as_slice(), &forms.metric);
        if !(jet.value > 0.0) {
            return Err(Error::WeightNonpositive { value: jet.value });
        }
        Ok((jet.value, jet.directional(&forms.nu)))
    }

    /// Smallest weight value over all nodes, boundary face included.
    pub fn weight_min(&self, w: &WeightField, rule: &QuadratureRule) -> Result<f64> {
        let mut nodes = self.interior_nodes(rule);
        if self.has_boundary {
            nodes.extend(self.face_nodes(rule)?);
        }
        let mut min = f64::INFINITY;
        for u in nodes {
            let point = self.chart.eval(&u).point;
            min = min.min(w.value(point.as_slice())?);
        }
        Ok(min)
    }

    /// Minimum over nodes of the smallest eigenvalue of `h - (V_nu / V) g`
    /// relative to `g`.
    pub fn condition_convexity(&self, w: &WeightField, rule: &QuadratureRule) -> Result<f64> {
        let mut min = f64::INFINITY;
        for u in self.interior_nodes(rule) {
            let forms = self.fundamental_forms(&u)?;
            let (v, v_nu) = self.weight_at(w, &forms)?;
            let a = &forms.h - &forms.g * (v_nu / v);
            min = min.min(min_generalized(&a, &forms.g, &u)?);
        }
        Ok(min)
    }

    /// Minimum over nodes of the smallest eigenvalue of
    /// `(V h - V_nu g) g^{-1} (H g - h)` relative to `g`.
    pub fn condition_substatic(&self, w: &WeightField, rule: &QuadratureRule) -> Result<f64> {
        let mut min = f64::INFINITY;
        for u in self.interior_nodes(rule) {
            let forms = self.fundamental_forms(&u)?;
            let (v, v_nu) = self.weight_at(w, &forms)?;
            let mean = (&forms.g_inv * &forms.h).trace();
            let a = &forms.h * v - &forms.g * v_nu;
            let b = &forms.g * mean - &forms.h;
            let mut t = a * &forms.g_inv * b;
            symmetrize(&mut t);
            min = min.min(min_generalized(&t, &forms.g, &u)?);
        }
        Ok(min)
    }

    /// Largest `|h(e, mu)|` over the nodes of `Gamma` and unit vectors `e`
    /// tangent to `Gamma`, with `mu` the outward conormal.
    pub fn boundary_principal_direction_residual(&self, rule: &QuadratureRule) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for u in self.face_nodes(rule)? {
            let forms = self.fundamental_forms(&u)?;
            let p = forms.g.nrows();
            let mu: DVector<f64> = forms.g_inv.column(0) / forms.g_inv[(0, 0)].sqrt();
            let tau = DVector::from_fn(p - 1, |j, _| (forms.h.row(j + 1) * &mu)[0]);
            let gamma_metric = forms.g.view((1, 1), (p - 1, p - 1)).into_owned();
            let solved = gamma_metric.cholesky().map(|c| c.solve(&tau)).ok_or_else(|| Error::DegenerateImmersion {
                u: u.clone(),
                det: 0.0,
            })?;
            worst = worst.max(tau.dot(&solved).max(0.0).sqrt());
        }
        Ok(worst)
    }

    /// Smallest `det g / prod g_ii` over the nodes, boundary face included.
    pub fn immersion_margin(&self, rule: &QuadratureRule) -> f64 {
        let mut nodes = self.interior_nodes(rule);
        if self.has_boundary {
            nodes.extend(rule.face_nodes(&self.domain).into_iter().map(|(u, _)| u));
        }
        let mut min = f64::INFINITY;
        for u in nodes {
            let d1 = self.chart.eval(&u).d1;
            let gram = d1.transpose() * &d1;
            let diag: f64 = (0..gram.nrows()).map(|i| gram[(i, i)]).product();
            let v = if diag > 0.0 { gram.determinant() / diag } else { 0.0 };
            min = min.min(v);
        }
        min
    }

    /// Margins of the nodes against the half region and chart domain, and the
    /// number of interior nodes outside `B^int` (checked for caps only).
    pub fn admissibility(&self, rule: &QuadratureRule) -> Result<Admissibility> {
        let model = self.model();
        let mut nodes: Vec<(Vec<f64>, bool)> = self.interior_nodes(rule).into_iter().map(|u| (u, true)).collect();
        if self.has_boundary {
            nodes.extend(self.face_nodes(rule)?.into_iter().map(|u| (u, false)));
        }
        let mut margin: Option<f64> = None;
        let mut outside_nodes = 0;
        for (u, interior) in nodes {
            let point = self.chart.eval(&u).point;
            let p = point.as_slice();
            let mut m = model.domain_margin(p);
            if let Some(h) = self.support.half_region_margin(p) {
                m = m.min(h);
            }
            if m.is_finite() {
                margin = Some(margin.map_or(m, |old: f64| old.min(m)));
            }
            if interior && self.role == PieceRole::Cap && !self.support.in_admissible_region(p) {
                outside_nodes += 1;
            }
        }
        Ok(Admissibility { margin, outside_nodes })
    }
}

fn min_generalized(a: &DMatrix<f64>, g: &DMatrix<f64>, u: &[f64]) -> Result<f64> {
    let eig = generalized_eigenvalues(a, g).ok_or_else(|| Error::DegenerateImmersion {
        u: u.to_vec(),
        det: 0.0,
    })?;
    Ok(eig[0])
}
