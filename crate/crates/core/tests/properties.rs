use nalgebra::DVector;
use proptest::prelude::*;

use freebound::ambient::{ModelKind, SpaceFormModel};
use freebound::families::{make_perturbed_cap, make_umbilical_cap, CapSpec, PerturbationSpec, Profile, Scenario};
use freebound::inequalities::{minkowski_report, Tolerances};
use freebound::quadrature::{domain_integral, surface_integral, QuadratureRule};
use freebound::supports::{SupportKind, SupportSpec};
use freebound::surfaces::CurvatureData;

const MODELS: [ModelKind; 4] = [
    ModelKind::EuclideanCartesian,
    ModelKind::PoincareBall,
    ModelKind::UpperHalfSpace,
    ModelKind::SphereStereographic,
];

/// Map a point of the unit cube into the chart domain, away from its edge.
fn into_domain(kind: ModelKind, c: &[f64]) -> Vec<f64> {
    let n = c.len();
    match kind {
        ModelKind::EuclideanCartesian | ModelKind::SphereStereographic => c.iter().map(|x| 3.0 * x).collect(),
        ModelKind::PoincareBall => c.iter().map(|x| 0.5 * x).collect(),
        ModelKind::UpperHalfSpace => (0..n)
            .map(|i| if i == n - 1 { 0.05 + 2.0 * c[i].abs() } else { 2.0 * c[i] })
            .collect(),
    }
}

fn hemisphere_perturbed(radius: f64, eps: f64, profile: Profile) -> Scenario {
    let support = SupportSpec::new(SupportKind::EuclideanPlane, 3).unwrap();
    make_perturbed_cap(&CapSpec::new(support, radius), &PerturbationSpec { epsilon: eps, profile }).unwrap()
}

fn unit() -> impl Strategy<Value = f64> {
    -1.0..1.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ambient_inner_is_symmetric_and_positive(
        m in 0usize..4,
        dim in 2usize..5,
        raw in prop::collection::vec(unit(), 12),
    ) {
        let kind = MODELS[m];
        let model = SpaceFormModel::new(kind, dim).unwrap();
        let p = into_domain(kind, &raw[..dim]);
        let u = &raw[4..4 + dim];
        let v = &raw[8..8 + dim];
        let uv = model.ambient_inner(&p, u, v).unwrap();
        let vu = model.ambient_inner(&p, v, u).unwrap();
        prop_assert_eq!(uv, vu);
        let uu = model.ambient_inner(&p, u, u).unwrap();
        let uu_flat: f64 = u.iter().map(|x| x * x).sum();
        prop_assert!(uu >= 0.0);
        prop_assert_eq!(uu > 0.0, uu_flat > 0.0);
    }

    #[test]
    fn sectional_curvature_is_constant(
        m in 0usize..4,
        raw in prop::collection::vec(unit(), 9),
    ) {
        let kind = MODELS[m];
        let model = SpaceFormModel::new(kind, 3).unwrap();
        let p = into_domain(kind, &raw[..3]);
        let (u, v) = (&raw[3..6], &raw[6..9]);
        let cross = DVector::from_column_slice(u).cross(&DVector::from_column_slice(v)).norm();
        prop_assume!(cross > 1e-3);
        let k = model.sectional_curvature_probe(&p, u, v).unwrap();
        prop_assert!((k - model.curvature()).abs() < 1e-6, "K = {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn surface_integral_is_linear_and_positive(a in -3.0..3.0f64, b in -3.0..3.0f64, eps in 0.0..0.08f64) {
        let s = hemisphere_perturbed(1.0, eps, Profile::Radial);
        let rule = QuadratureRule::new(10).unwrap();
        let f = |x: &[f64]| 1.0 + x[0] * x[0];
        let g = |x: &[f64]| x[2];
        let int_f = surface_integral(&s.surface, |fm| Ok(f(fm.point.as_slice())), &rule).unwrap();
        let int_g = surface_integral(&s.surface, |fm| Ok(g(fm.point.as_slice())), &rule).unwrap();
        let both = surface_integral(&s.surface, |fm| Ok(a * f(fm.point.as_slice()) + b * g(fm.point.as_slice())), &rule).unwrap();
        prop_assert!((both - (a * int_f + b * int_g)).abs() <= 1e-12 * (1.0 + both.abs()));
        prop_assert!(int_f > 0.0);
        let vol = domain_integral(&s.region, |_, _| Ok(1.0), &rule).unwrap();
        let vol2 = domain_integral(&s.region, |_, _| Ok(2.0), &rule).unwrap();
        prop_assert!(vol > 0.0);
        prop_assert!((vol2 - 2.0 * vol).abs() <= 1e-13 * vol);
    }

    #[test]
    fn gauss_equation_and_sigma2(eps in -0.08..0.08f64, order in 0u32..3, u0 in 0.05..1.0f64, u1 in 0.0..6.28f64) {
        let profile = if order == 0 { Profile::Radial } else { Profile::Azimuthal { order } };
        let s = hemisphere_perturbed(1.0, eps, profile);
        let d = s.surface.domain();
        let u = [d.lower[0] + u0 * (d.upper[0] - d.lower[0]), u1];
        let forms = s.surface.fundamental_forms(&u).unwrap();
        let c = CurvatureData::from_forms(&forms, 0.0);
        prop_assert!((c.sigma2 - 0.5 * (c.mean * c.mean - c.norm_h_sq)).abs() < 1e-10 * (1.0 + c.mean * c.mean));
        // p = 2, K = 0: scal = 2 sigma_2
        prop_assert!((c.scal - 2.0 * c.sigma2).abs() < 1e-10 * (1.0 + c.scal.abs()));
        let sum: f64 = c.principal.iter().sum();
        prop_assert!((sum - c.mean).abs() < 1e-10 * (1.0 + c.mean.abs()));
    }

    #[test]
    fn minkowski_deficit_is_scale_invariant(lambda in 0.3..3.0f64, eps in 0.0..0.08f64) {
        let rule = QuadratureRule::new(16).unwrap();
        let tol = Tolerances::default();
        let base = minkowski_report(&hemisphere_perturbed(1.0, eps, Profile::Radial), &rule, &tol).unwrap();
        let scaled = minkowski_report(&hemisphere_perturbed(lambda, lambda * eps, Profile::Radial), &rule, &tol).unwrap();
        let factor = lambda.powi(4);
        prop_assert!((scaled.lhs - factor * base.lhs).abs() <= 1e-10 * scaled.lhs);
        prop_assert!((scaled.rhs - factor * base.rhs).abs() <= 1e-10 * scaled.rhs);
        prop_assert!((scaled.relative_deficit - base.relative_deficit).abs() <= 1e-10);
    }

    #[test]
    fn odd_profiles_give_even_deficits(eps in 0.005..0.08f64, odd in 0u32..2) {
        // x_1 -> -x_1 maps the +eps surface onto the -eps one; the angular
        // nodes are not symmetric under it, so agreement is to quadrature error
        let profile = Profile::Azimuthal { order: 2 * odd + 1 };
        let rule = QuadratureRule::new(24).unwrap();
        let tol = Tolerances::default();
        let plus = minkowski_report(&hemisphere_perturbed(1.0, eps, profile), &rule, &tol).unwrap();
        let minus = minkowski_report(&hemisphere_perturbed(1.0, -eps, profile), &rule, &tol).unwrap();
        prop_assert!(plus.deficit > 0.0);
        // the deficit is a difference of O(1) sides; compare on their scale
        prop_assert!((plus.deficit - minus.deficit).abs() <= 1e-10 * plus.lhs, "{} vs {}", plus.deficit, minus.deficit);
        prop_assert!((plus.deficit - minus.deficit).abs() <= 1e-3 * plus.deficit);
    }

    #[test]
    fn umbilical_caps_are_equality_cases(r in 0.2..0.6f64, shift in -0.5..0.5f64) {
        let support = SupportSpec::new(SupportKind::Horosphere, 3).unwrap();
        let spec = CapSpec::new(support, r).with_offset(DVector::from_vec(vec![shift, 0.0, 0.0]));
        let s = make_umbilical_cap(&spec).unwrap();
        let rule = QuadratureRule::new(16).unwrap();
        let rep = minkowski_report(&s, &rule, &Tolerances::default()).unwrap();
        prop_assert!(rep.relative_deficit.abs() <= 1e-10, "{}", rep.relative_deficit);
    }
}
