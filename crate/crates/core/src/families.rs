//! Umbilical free-boundary caps and their perturbations.
//!
//! A cap is a piece of a Euclidean sphere in the chart meeting the support
//! realization at a right angle; conformality makes it umbilical and free
//! boundary in the space form. Perturbations move the cap along its chart
//! normal by a profile that vanishes to high order on `Gamma`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::{hyperspherical, ChartJet, ChartMap, DiskPatch, FiniteDifferenceChart, ParamBox, SpherePatch};
use crate::error::{Error, Result};
use crate::linalg::frame_with_axis;
use crate::quadrature::{DomainRegion, QuadratureRule};
use crate::supports::{ChartShape, SupportSpec};
use crate::surfaces::{FreeBoundarySurface, PieceRole};
use crate::weights::WeightField;

/// Minimum distance of the cap and its face to the half-region and chart
/// boundaries.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-6;

/// Where the star center sits between the center of `T` and the apex of the cap.
const STAR_FRACTION: f64 = 0.3;

/// Placement of an umbilical cap.
#[derive(Debug, Clone, PartialEq)]
pub struct CapSpec {
    pub support: SupportSpec,
    /// Chart radius `r` of the realizing Euclidean sphere.
    pub radius: f64,
    /// Plane supports: displacement of the foot point within the plane.
    /// Sphere supports: direction of the cap center (default `e_n`).
    pub center_offset: Option<DVector<f64>>,
    /// Angle by which the cap departs from orthogonality; `0` gives a free
    /// boundary cap.
    pub tilt: f64,
    /// Quadrature level used by the construction checks.
    pub resolution: usize,
}

impl CapSpec {
    pub fn new(support: SupportSpec, radius: f64) -> Self {
        CapSpec {
            support,
            radius,
            center_offset: None,
            tilt: 0.0,
            resolution: 8,
        }
    }

    pub fn with_offset(mut self, offset: DVector<f64>) -> Self {
        self.center_offset = Some(offset);
        self
    }

    pub fn with_tilt(mut self, tilt: f64) -> Self {
        self.tilt = tilt;
        self
    }
}

/// Bump profiles in `rho = t / t_max` and `omega_1`, the first direction
/// cosine around the cap axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `(1 - rho^2)^3`.
    Radial,
    /// `(1 - rho^2)^3 (rho omega_1)^k`.
    Azimuthal { order: u32 },
    /// `(1 - rho^2) rho omega_1`. Vanishes on `Gamma` only to first order,
    /// so it tilts the cap there and breaks orthogonality.
    Shear,
}

/// Value, gradient and Hessian in the parameters.
#[derive(Debug, Clone, PartialEq)]
struct Jet2 {
    v: f64,
    g: DVector<f64>,
    h: DMatrix<f64>,
}

impl Jet2 {
    fn constant(p: usize, v: f64) -> Self {
        Jet2 {
            v,
            g: DVector::zeros(p),
            h: DMatrix::zeros(p, p),
        }
    }

    fn variable(p: usize, i: usize, v: f64) -> Self {
        let mut j = Self::constant(p, v);
        j.g[i] = 1.0;
        j
    }

    fn mul(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            g: &self.g * o.v + &o.g * self.v,
            h: &self.h * o.v + &o.h * self.v + &self.g * o.g.transpose() + &o.g * self.g.transpose(),
        }
    }

    fn scale(&self, s: f64) -> Jet2 {
        Jet2 {
            v: self.v * s,
            g: &self.g * s,
            h: &self.h * s,
        }
    }

    fn add_const(&self, c: f64) -> Jet2 {
        Jet2 {
            v: self.v + c,
            g: self.g.clone(),
            h: self.h.clone(),
        }
    }

    /// `f(self)` given `f`, `f'`, `f''` at `self.v`.
    fn compose(&self, f: f64, df: f64, ddf: f64) -> Jet2 {
        Jet2 {
            v: f,
            g: &self.g * df,
            h: &self.h * df + &self.g * self.g.transpose() * ddf,
        }
    }

    fn powi(&self, k: u32) -> Jet2 {
        let x = self.v;
        let kf = k as f64;
        let f = x.powi(k as i32);
        let df = if k == 0 { 0.0 } else { kf * x.powi(k as i32 - 1) };
        let ddf = if k < 2 { 0.0 } else { kf * (kf - 1.0) * x.powi(k as i32 - 2) };
        self.compose(f, df, ddf)
    }
}

impl Profile {
    fn jet(&self, u: &[f64], t_max: f64) -> Jet2 {
        let p = u.len();
        let rho = Jet2::variable(p, 0, u[0]).scale(1.0 / t_max);
        let omega = if p >= 2 {
            let psi = Jet2::variable(p, 1, u[1]);
            psi.compose(u[1].cos(), -u[1].sin(), -u[1].cos())
        } else {
            Jet2::constant(p, 1.0)
        };
        let edge = rho.mul(&rho).scale(-1.0).add_const(1.0);
        match *self {
            Profile::Radial => edge.powi(3),
            Profile::Azimuthal { order } => edge.powi(3).mul(&rho.mul(&omega).powi(order)),
            Profile::Shear => edge.mul(&rho).mul(&omega),
        }
    }

    /// Value of the profile at `u`.
    pub fn value(&self, u: &[f64], t_max: f64) -> f64 {
        self.jet(u, t_max).v
    }
}

/// Normal displacement `epsilon * profile` of a base cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub profile: Profile,
}

/// Sphere patch moved along its chart normal: `X + (sum eps_k b_k) n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedChart {
    base: SpherePatch,
    terms: Vec<PerturbationSpec>,
    t_max: f64,
}

impl PerturbedChart {
    pub fn new(base: SpherePatch, terms: Vec<PerturbationSpec>, t_max: f64) -> Self {
        PerturbedChart { base, terms, t_max }
    }

    fn displacement(&self, u: &[f64]) -> Jet2 {
        let p = u.len();
        self.terms.iter().fold(Jet2::constant(p, 0.0), |acc, t| {
            let b = t.profile.jet(u, self.t_max).scale(t.epsilon);
            Jet2 {
                v: acc.v + b.v,
                g: acc.g + b.g,
                h: acc.h + b.h,
            }
        })
    }
}

impl ChartMap for PerturbedChart {
    fn param_dim(&self) -> usize {
        self.base.param_dim()
    }

    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }

    fn eval(&self, u: &[f64]) -> ChartJet {
        if self.terms.iter().all(|t| t.epsilon == 0.0) {
            return self.base.eval(u);
        }
        let p = u.len();
        let (y, dy, ddy) = hyperspherical(u);
        let b = self.displacement(u);
        let radius = self.base.radius + b.v;
        let f = &self.base.frame;
        let point = &self.base.center + f * (&y * radius);
        let cols: Vec<DVector<f64>> = (0..p).map(|i| f * (&dy[i] * radius + &y * b.g[i])).collect();
        let mut d2 = Vec::with_capacity(p * p);
        for i in 0..p {
            for j in 0..p {
                let local = &ddy[i * p + j] * radius + &dy[j] * b.g[i] + &dy[i] * b.g[j] + &y * b.h[(i, j)];
                d2.push(f * local);
            }
        }
        ChartJet {
            point,
            d1: DMatrix::from_columns(&cols),
            d2,
        }
    }
}

/// Placement data of a constructed cap in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CapGeometry {
    pub center: DVector<f64>,
    pub radius: f64,
    /// Unit axis from the sphere center toward the cap apex.
    pub axis: DVector<f64>,
    /// Polar angle of `Gamma` on the cap sphere.
    pub t_max: f64,
    /// Center of the face `T`.
    pub face_center: DVector<f64>,
}

/// A region `Omega` bounded by a cap `Sigma` and a support face `T`,
/// together with the weight of the support.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub surface: FreeBoundarySurface,
    pub support_piece: FreeBoundarySurface,
    pub region: DomainRegion,
    pub weight: WeightField,
    pub geometry: CapGeometry,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.region.model().dim()
    }

    pub fn support(&self) -> &SupportSpec {
        self.surface.support()
    }
}

struct Placement {
    geometry: CapGeometry,
    face_chart: Arc<dyn ChartMap>,
    face_domain: ParamBox,
    face_outward: DVector<f64>,
}

fn place(c: &CapSpec) -> Result<Placement> {
    let n = c.support.model().dim();
    if n < 3 {
        return Err(Error::DimensionTooLow { required: 3, found: n });
    }
    let r = c.radius;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("cap radius {r} must be positive")));
    }
    if !(c.tilt.abs() < FRAC_PI_2) {
        return Err(Error::OrthogonalityInfeasible(format!(
            "tilt {} is outside (-pi/2, pi/2); no sphere meets the support at that angle",
            c.tilt
        )));
    }
    if let Some(o) = &c.center_offset {
        if o.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: o.len(),
            });
        }
    }
    match c.support.shape() {
        ChartShape::Plane { point, inward } => {
            let mut foot = point.clone();
            if let Some(o) = &c.center_offset {
                foot += o - inward * o.dot(inward);
            }
            let lift = r * c.tilt.sin();
            let center = &foot + inward * lift;
            let t_max = (-lift / r).acos();
            let plane = frame_with_axis(inward).remove_column(0);
            Ok(Placement {
                geometry: CapGeometry {
                    center,
                    radius: r,
                    axis: inward.clone(),
                    t_max,
                    face_center: foot.clone(),
                },
                face_chart: Arc::new(DiskPatch { center: foot, plane }),
                face_domain: ParamBox::polar_disk(n - 1, r * c.tilt.cos()),
                face_outward: -inward,
            })
        }
        ChartShape::Sphere { center: o, radius: big } => {
            let big = *big;
            let dir = match &c.center_offset {
                Some(v) if v.norm() > 0.0 => v.normalize(),
                Some(_) => return Err(Error::InvalidParameter("cap direction must be nonzero".into())),
                None => DVector::from_fn(n, |i, _| if i == n - 1 { 1.0 } else { 0.0 }),
            };
            let d2 = big * big + r * r - 2.0 * big * r * c.tilt.sin();
            let d = d2.sqrt();
            if !(d > (big - r).abs() && d < big + r) {
                return Err(Error::OrthogonalityInfeasible(format!(
                    "a sphere of radius {r} cannot meet the support sphere of radius {big} at the requested angle"
                )));
            }
            let center = o + &dir * d;
            let ell = (big * big + d2 - r * r) / (2.0 * d);
            let t_max = ((d - ell) / r).clamp(-1.0, 1.0).acos();
            let face = SpherePatch {
                center: o.clone(),
                radius: big,
                frame: frame_with_axis(&dir),
            };
            Ok(Placement {
                geometry: CapGeometry {
                    center,
                    radius: r,
                    axis: -&dir,
                    t_max,
                    face_center: o + &dir * big,
                },
                face_chart: Arc::new(face),
                face_domain: ParamBox::polar_cap(n - 1, (ell / big).clamp(-1.0, 1.0).acos()),
                face_outward: dir,
            })
        }
    }
}

fn assemble(spec: &CapSpec, placement: Placement, cap_chart: Arc<dyn ChartMap>) -> Result<Scenario> {
    let support = spec.support.clone();
    let model = support.model();
    let n = model.dim();
    let geo = placement.geometry;
    let cap_domain = ParamBox::polar_cap(n - 1, geo.t_max);
    let rule = QuadratureRule::new(spec.resolution.max(2))?;

    // The chart must stay inside the model before any metric is evaluated.
    let probe = FreeBoundarySurface::new(support.clone(), cap_chart.clone(), cap_domain.clone(), PieceRole::Cap, true, 1.0)?;
    let face_probe = FreeBoundarySurface::new(
        support.clone(),
        placement.face_chart.clone(),
        placement.face_domain.clone(),
        PieceRole::Support,
        true,
        1.0,
    )?;
    for (label, piece) in [("cap", &probe), ("support face", &face_probe)] {
        let adm = piece.admissibility(&rule)?;
        if adm.outside_nodes > 0 {
            return Err(Error::InadmissiblePlacement(format!(
                "{label}: {} nodes lie outside B^int",
                adm.outside_nodes
            )));
        }
        if let Some(m) = adm.margin {
            if m < ADMISSIBILITY_MARGIN {
                return Err(Error::InadmissiblePlacement(format!(
                    "{label}: margin {m:e} to the admissible region is below {ADMISSIBILITY_MARGIN:e}"
                )));
            }
        }
    }

    let cap_outward = &cap_chart.eval(&cap_domain.center()).point - &geo.center;
    let surface = FreeBoundarySurface::oriented_towards(support.clone(), cap_chart, cap_domain, PieceRole::Cap, true, &cap_outward)?;
    let support_piece = FreeBoundarySurface::oriented_towards(
        support.clone(),
        placement.face_chart,
        placement.face_domain,
        PieceRole::Support,
        true,
        &placement.face_outward,
    )?;
    let apex = &geo.center + &geo.axis * geo.radius;
    let star = &geo.face_center + (apex - &geo.face_center) * STAR_FRACTION;
    let region = DomainRegion::new(model, star, vec![surface.clone(), support_piece.clone()])?;
    let star_margin = region.star_shape_margin(&rule);
    if !(star_margin > 0.0) {
        return Err(Error::StarShapeViolated { value: star_margin });
    }
    Ok(Scenario {
        surface,
        support_piece,
        weight: WeightField::for_support(&support),
        region,
        geometry: geo,
    })
}

fn base_patch(geo: &CapGeometry) -> SpherePatch {
    SpherePatch {
        center: geo.center.clone(),
        radius: geo.radius,
        frame: frame_with_axis(&geo.axis),
    }
}

/// Cap on the support realized by a chart sphere meeting it at a right angle
/// (or at `tilt` away from it), with the enclosed region.
pub fn make_umbilical_cap(c: &CapSpec) -> Result<Scenario> {
    let placement = place(c)?;
    let chart = Arc::new(base_patch(&placement.geometry));
    assemble(c, placement, chart)
}

/// Base cap displaced by `epsilon * profile` along its chart normal.
pub fn make_perturbed_cap(base: &CapSpec, p: &PerturbationSpec) -> Result<Scenario> {
    make_multi_perturbed_cap(base, std::slice::from_ref(p))
}

/// Base cap displaced by a sum of profiles.
pub fn make_multi_perturbed_cap(base: &CapSpec, terms: &[PerturbationSpec]) -> Result<Scenario> {
    if let Some(t) = terms.iter().find(|t| !t.epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("perturbation amplitude {} is not finite", t.epsilon)));
    }
    let placement = place(base)?;
    let geo = &placement.geometry;
    let chart = Arc::new(PerturbedChart::new(base_patch(geo), terms.to_vec(), geo.t_max));
    assemble(base, placement, chart)
}

/// Same surface as [`make_multi_perturbed_cap`], but the cap chart only
/// exposes its point map and derivatives come from finite differences.
pub fn make_sampled_chart_cap(base: &CapSpec, terms: &[PerturbationSpec]) -> Result<Scenario> {
    let placement = place(base)?;
    let geo = &placement.geometry;
    let exact = PerturbedChart::new(base_patch(geo), terms.to_vec(), geo.t_max);
    let n = geo.center.len();
    let chart = Arc::new(FiniteDifferenceChart::new(n - 1, n, Arc::new(move |u: &[f64]| exact.eval(u).point)));
    assemble(base, placement, chart)
}

/// Largest amplitude in `[0, eps_max]` up to which `condition_convexity`
/// stays nonnegative, found by bisection to within `1e-6`.
pub fn convexity_threshold(base: &CapSpec, profile: Profile, eps_max: f64, rule: &QuadratureRule) -> Result<f64> {
    let convex = |eps: f64| -> Result<bool> {
        let s = make_perturbed_cap(base, &PerturbationSpec { epsilon: eps, profile })?;
        Ok(s.surface.condition_convexity(&s.weight, rule)? >= 0.0)
    };
    if !convex(0.0)? {
        return Ok(0.0);
    }
    if convex(eps_max)? {
        return Ok(eps_max);
    }
    let (mut lo, mut hi) = (0.0, eps_max);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        match convex(mid) {
            Ok(true) => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(lo)
}

/// Largest deviation `|k_i - c|` of the principal curvatures over the nodes,
/// with `c` the mean of all principal curvatures seen.
pub fn umbilicity_defect(s: &FreeBoundarySurface, rule: &QuadratureRule) -> Result<f64> {
    let mut all = Vec::new();
    for (u, _) in rule.nodes(s.domain()) {
        all.extend(s.curvature_data(&u)?.principal);
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    Ok(all.iter().fold(0.0f64, |m, k| m.max((k - mean).abs())))
}

/// Small patch of the support's chart realization around the support point
/// `p`, oriented by the outward normal of `B^int`. The domain center lies
/// within `size` (chart units) of `p`.
pub fn support_patch(s: &SupportSpec, p: &[f64], size: f64) -> Result<FreeBoundarySurface> {
    let n = s.model().dim();
    let distance = s.signed_distance(p)?;
    if distance.abs() > 1e-10 {
        return Err(Error::PointNotOnSupport { distance });
    }
    let x = DVector::from_column_slice(p);
    let (chart, domain): (Arc<dyn ChartMap>, ParamBox) = match s.shape() {
        ChartShape::Sphere { center, radius } => (
            Arc::new(SpherePatch {
                center: center.clone(),
                radius: *radius,
                frame: frame_with_axis(&(&x - center)),
            }),
            ParamBox::polar_cap(n - 1, 2.0 * size / radius),
        ),
        ChartShape::Plane { inward, .. } => (
            Arc::new(DiskPatch {
                center: x.clone(),
                plane: frame_with_axis(inward).remove_column(0),
            }),
            ParamBox::polar_disk(n - 1, 2.0 * size),
        ),
    };
    let outward = s.outward_euclidean(p);
    FreeBoundarySurface::oriented_towards(s.clone(), chart, domain, PieceRole::Support, false, &outward)
}

/// `max |g^{-1} h - kappa I|` at the centers of support patches around each
/// point: zero when the support is umbilical with the advertised `kappa`.
pub fn support_umbilicity_residual(s: &SupportSpec, points: &[DVector<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let patch = support_patch(s, p.as_slice(), 1e-2)?;
        let forms = patch.fundamental_forms(&patch.domain().center())?;
        let shape = &forms.g_inv * &forms.h;
        let m = shape.nrows();
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { s.kappa() } else { 0.0 };
                worst = worst.max((shape[(i, j)] - target).abs());
            }
        }
    }
    Ok(worst)
}
