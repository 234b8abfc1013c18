//! Umbilical support hypersurfaces and the regions they bound.
//!
//! Each support is realized in its chart as a Euclidean sphere or plane.
//! Signed distances are Euclidean chart distances, negative inside `B^int`,
//! so the outward normal of `B^int` is the direction of increasing distance.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ambient::{ModelKind, SpaceFormModel};
use crate::error::{Error, Result};

/// The eight umbilical support families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportKind {
    /// Round sphere of radius `radius` about the origin of R^n.
    EuclideanSphere { radius: f64 },
    /// The hyperplane `x_n = 0` of R^n.
    EuclideanPlane,
    /// Geodesic sphere of hyperbolic radius `radius`, in the Poincare ball.
    HypGeodesicSphere { radius: f64 },
    /// Horosphere `x_n = 1` in the upper half-space.
    Horosphere,
    /// Equidistant hypersurface `x_1 tan(theta) + x_n = 1`.
    Equidistant { theta: f64 },
    /// Totally geodesic hyperplane `x_1 = 0` in the upper half-space.
    HypGeodesicPlane,
    /// Geodesic sphere of spherical radius `radius < pi/2`.
    SphGeodesicSphere { radius: f64 },
    /// Totally geodesic equator `x_n = 0` of the stereographic chart.
    SphHyperplane,
}

impl SupportKind {
    pub fn model_kind(&self) -> ModelKind {
        match self {
            SupportKind::EuclideanSphere { .. } | SupportKind::EuclideanPlane => ModelKind::EuclideanCartesian,
            SupportKind::HypGeodesicSphere { .. } => ModelKind::PoincareBall,
            SupportKind::Horosphere | SupportKind::Equidistant { .. } | SupportKind::HypGeodesicPlane => {
                ModelKind::UpperHalfSpace
            }
            SupportKind::SphGeodesicSphere { .. } | SupportKind::SphHyperplane => ModelKind::SphereStereographic,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SupportKind::EuclideanSphere { .. } => "euclidean_sphere",
            SupportKind::EuclideanPlane => "euclidean_plane",
            SupportKind::HypGeodesicSphere { .. } => "hyp_geodesic_sphere",
            SupportKind::Horosphere => "horosphere",
            SupportKind::Equidistant { .. } => "equidistant",
            SupportKind::HypGeodesicPlane => "hyp_geodesic_plane",
            SupportKind::SphGeodesicSphere { .. } => "sph_geodesic_sphere",
            SupportKind::SphHyperplane => "sph_hyperplane",
        }
    }

    /// Geodesic spheres in any model and the spherical equator need the half
    /// region `B^{int,+}` for the weight to stay positive.
    pub fn requires_half_region(&self) -> bool {
        matches!(
            self,
            SupportKind::EuclideanSphere { .. }
                | SupportKind::HypGeodesicSphere { .. }
                | SupportKind::SphGeodesicSphere { .. }
                | SupportKind::SphHyperplane
        )
    }

    /// One representative of every family, with the parameters used
    /// throughout the test suites.
    pub fn catalogue() -> Vec<SupportKind> {
        vec![
            SupportKind::EuclideanSphere { radius: 1.0 },
            SupportKind::EuclideanPlane,
            SupportKind::HypGeodesicSphere { radius: 1.0 },
            SupportKind::Horosphere,
            SupportKind::Equidistant {
                theta: std::f64::consts::FRAC_PI_6,
            },
            SupportKind::HypGeodesicPlane,
            SupportKind::SphGeodesicSphere { radius: 1.0 },
            SupportKind::SphHyperplane,
        ]
    }
}

/// Euclidean sphere or plane realizing a support in its chart.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartShape {
    Sphere { center: DVector<f64>, radius: f64 },
    /// Plane through `point`; `inward` is the Euclidean unit normal pointing
    /// into `B^int`.
    Plane { point: DVector<f64>, inward: DVector<f64> },
}

/// Extra constraint cutting `B^int` down to `B^{int,+}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfRegion {
    /// `x_n > 0`.
    UpperHalf,
    /// `|x| < 1`.
    UnitBall,
}

/// An umbilical support hypersurface `S_{K,kappa}` with its interior region.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSpec {
    model: SpaceFormModel,
    kind: SupportKind,
    kappa: f64,
    shape: ChartShape,
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
}

impl SupportSpec {
    /// Build the support in ambient dimension `dim`; the model follows from
    /// the kind.
    pub fn new(kind: SupportKind, dim: usize) -> Result<Self> {
        let model = SpaceFormModel::new(kind.model_kind(), dim)?;
        let n = dim;
        let origin = DVector::zeros(n);
        let (kappa, shape) = match kind {
            SupportKind::EuclideanSphere { radius } => {
                positive("radius", radius)?;
                (1.0 / radius, ChartShape::Sphere { center: origin, radius })
            }
            SupportKind::EuclideanPlane => (
                0.0,
                ChartShape::Plane {
                    point: origin,
                    inward: unit(n, n - 1),
                },
            ),
            SupportKind::HypGeodesicSphere { radius } => {
                positive("radius", radius)?;
                // |x| = tanh(R/2) = sqrt((cosh R - 1)/(cosh R + 1))
                let chart_radius = (0.5 * radius).tanh();
                (
                    1.0 / radius.tanh(),
                    ChartShape::Sphere {
                        center: origin,
                        radius: chart_radius,
                    },
                )
            }
            SupportKind::Horosphere => (
                1.0,
                ChartShape::Plane {
                    point: unit(n, n - 1),
                    inward: unit(n, n - 1),
                },
            ),
            SupportKind::Equidistant { theta } => {
                if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
                    return Err(Error::InvalidParameter(format!(
                        "equidistant angle theta = {theta} must lie in (0, pi/2)"
                    )));
                }
                let mut inward = DVector::zeros(n);
                inward[0] = theta.sin();
                inward[n - 1] = theta.cos();
                (
                    theta.cos(),
                    ChartShape::Plane {
                        point: unit(n, n - 1),
                        inward,
                    },
                )
            }
            SupportKind::HypGeodesicPlane => (
                0.0,
                ChartShape::Plane {
                    point: unit(n, n - 1),
                    inward: unit(n, 0),
                },
            ),
            SupportKind::SphGeodesicSphere { radius } => {
                if !(radius > 0.0 && radius < std::f64::consts::FRAC_PI_2) {
                    return Err(Error::InvalidParameter(format!(
                        "spherical geodesic radius {radius} must lie in (0, pi/2)"
                    )));
                }
                // sqrt((1 - cos R)/(1 + cos R)) = tan(R/2)
                let chart_radius = ((1.0 - radius.cos()) / (1.0 + radius.cos())).sqrt();
                (
                    1.0 / radius.tan(),
                    ChartShape::Sphere {
                        center: origin,
                        radius: chart_radius,
                    },
                )
            }
            SupportKind::SphHyperplane => (
                0.0,
                ChartShape::Plane {
                    point: origin,
                    inward: unit(n, n - 1),
                },
            ),
        };
        Ok(SupportSpec {
            model,
            kind,
            kappa,
            shape,
        })
    }

    pub fn model(&self) -> SpaceFormModel {
        self.model
    }

    pub fn kind(&self) -> SupportKind {
        self.kind
    }

    /// Principal curvature `kappa >= 0` with respect to the outward normal of
    /// `B^int`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn shape(&self) -> &ChartShape {
        &self.shape
    }

    pub fn requires_half_region(&self) -> bool {
        self.kind.requires_half_region()
    }

    pub fn half_region(&self) -> Option<HalfRegion> {
        match self.kind {
            SupportKind::SphHyperplane => Some(HalfRegion::UnitBall),
            k if k.requires_half_region() => Some(HalfRegion::UpperHalf),
            _ => None,
        }
    }

    /// Euclidean chart distance to the realization, negative inside `B^int`.
    pub fn signed_distance(&self, p: &[f64]) -> Result<f64> {
        self.model.check(p)?;
        Ok(self.raw_signed_distance(p))
    }

    fn raw_signed_distance(&self, p: &[f64]) -> f64 {
        match &self.shape {
            ChartShape::Sphere { center, radius } => {
                let d: f64 = p.iter().zip(center.iter()).map(|(a, c)| (a - c) * (a - c)).sum();
                d.sqrt() - radius
            }
            ChartShape::Plane { point, inward } => {
                -p.iter()
                    .zip(point.iter())
                    .zip(inward.iter())
                    .map(|((a, q), m)| (a - q) * m)
                    .sum::<f64>()
            }
        }
    }

    /// Euclidean unit normal pointing out of `B^int` (the gradient of the
    /// signed distance).
    pub fn outward_euclidean(&self, p: &[f64]) -> DVector<f64> {
        match &self.shape {
            ChartShape::Sphere { center, .. } => (DVector::from_column_slice(p) - center).normalize(),
            ChartShape::Plane { inward, .. } => -inward,
        }
    }

    /// Metric-unit outward normal `N` of `B^int` at a point of the support.
    pub fn outward_normal(&self, p: &[f64]) -> Result<DVector<f64>> {
        let metric = self.model.metric_at(p)?;
        let distance = self.raw_signed_distance(p);
        if distance.abs() > 1e-10 {
            return Err(Error::PointNotOnSupport { distance });
        }
        Ok(self.outward_euclidean(p) / metric.scale())
    }

    /// Positive inside the half-region constraint (`x_n` or `1 - |x|`);
    /// `None` when the kind needs no half region.
    pub fn half_region_margin(&self, p: &[f64]) -> Option<f64> {
        self.half_region().map(|h| match h {
            HalfRegion::UpperHalf => p[p.len() - 1],
            HalfRegion::UnitBall => 1.0 - p.iter().map(|c| c * c).sum::<f64>().sqrt(),
        })
    }

    /// Membership in `B^int`, or in `B^{int,+}` for the kinds that need it.
    pub fn in_admissible_region(&self, p: &[f64]) -> bool {
        if !self.model.contains(p) {
            return false;
        }
        if self.raw_signed_distance(p) >= 0.0 {
            return false;
        }
        self.half_region_margin(p).is_none_or(|m| m > 0.0)
    }

    /// Sample `count` points on the support with `|signed distance| <= 1e-12`,
    /// seed-controlled. Plane supports are sampled in a unit-sized window around
    /// the base point; spheres uniformly in direction (upper half only when a
    /// half region is required).
    pub fn sample_on_support(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        use rand::{Rng, SeedableRng};
        let n = self.model.dim();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let p = match &self.shape {
                ChartShape::Sphere { center, radius } => {
                    let mut dir = DVector::from_fn(n, |_, _| standard_normal(&mut rng));
                    if self.half_region().is_some() {
                        dir[n - 1] = dir[n - 1].abs();
                    }
                    let norm = dir.norm();
                    if norm < 1e-6 {
                        continue;
                    }
                    center + dir * (*radius / norm)
                }
                ChartShape::Plane { point, inward } => {
                    let mut offset = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
                    let along = offset.dot(inward);
                    offset -= inward * along;
                    point + offset
                }
            };
            if self.model.contains(p.as_slice()) && self.half_region_margin(p.as_slice()).is_none_or(|m| m > 0.0) {
                out.push(p);
            }
        }
        out
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {value} must be positive")))
    }
}

/// Standard normal deviate by Box-Muller.
pub(crate) fn standard_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
