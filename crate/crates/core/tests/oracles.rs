use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};

use freebound::families::{make_multi_perturbed_cap, make_sampled_chart_cap, make_umbilical_cap, CapSpec, PerturbationSpec, Profile};
use freebound::quadrature::{domain_integral, surface_integral, QuadratureRule};
use freebound::supports::{SupportKind, SupportSpec};
use freebound::surfaces::{CurvatureData, FreeBoundarySurface};

fn spec(kind: SupportKind, r: f64) -> CapSpec {
    CapSpec::new(SupportSpec::new(kind, 3).unwrap(), r)
}

fn terms() -> Vec<PerturbationSpec> {
    vec![
        PerturbationSpec {
            epsilon: 0.04,
            profile: Profile::Radial,
        },
        PerturbationSpec {
            epsilon: 0.02,
            profile: Profile::Azimuthal { order: 2 },
        },
    ]
}

#[test]
fn hemisphere_area_and_half_ball_volume() {
    let s = make_umbilical_cap(&spec(SupportKind::EuclideanPlane, 1.0)).unwrap();
    let rule = QuadratureRule::new(24).unwrap();
    let area = surface_integral(&s.surface, |_| Ok(1.0), &rule).unwrap();
    let vol = domain_integral(&s.region, |_, _| Ok(1.0), &rule).unwrap();
    assert!((area - 2.0 * PI).abs() < 1e-12, "{area}");
    assert!((vol - 2.0 * PI / 3.0).abs() < 1e-12, "{vol}");
}

#[test]
fn cap_on_unit_sphere_area() {
    // R = 1, r = 1/2: the cap center sits at distance sqrt(5)/2 and
    // cos t_max = 1/sqrt(5)
    let s = make_umbilical_cap(&spec(SupportKind::EuclideanSphere { radius: 1.0 }, 0.5)).unwrap();
    let rule = QuadratureRule::new(24).unwrap();
    let area = surface_integral(&s.surface, |_| Ok(1.0), &rule).unwrap();
    let exact = 2.0 * PI * 0.25 * (1.0 - 1.0 / 5f64.sqrt());
    assert!((area - exact).abs() < 1e-12, "{area} vs {exact}");
}

#[test]
fn horosphere_cap_hyperbolic_area_and_volume() {
    // Euclidean hemisphere of radius a about (0, 0, 1) above x_3 = 1
    let a: f64 = 0.3;
    let s = make_umbilical_cap(&spec(SupportKind::Horosphere, a)).unwrap();
    let rule = QuadratureRule::new(24).unwrap();
    let area = surface_integral(&s.surface, |_| Ok(1.0), &rule).unwrap();
    let exact_area = 2.0 * PI * a * a / (1.0 + a);
    assert!((area - exact_area).abs() < 1e-12, "{area} vs {exact_area}");
    let vol = domain_integral(&s.region, |_, _| Ok(1.0), &rule).unwrap();
    // int_1^{1+a} pi (a^2 - (z-1)^2) z^{-3} dz
    let c = a * a - 1.0;
    let anti = |z: f64| PI * (-c / (2.0 * z * z) - 2.0 / z - z.ln());
    let exact_vol = anti(1.0 + a) - anti(1.0);
    assert!((vol - exact_vol).abs() < 1e-12, "{vol} vs {exact_vol}");
}

/// Gaussian curvature of the induced metric by the Brioschi formula, with
/// derivatives of `g` taken by central differences.
fn brioschi(s: &FreeBoundarySurface, u: [f64; 2], h: f64) -> f64 {
    let g = |a: f64, b: f64| -> DMatrix<f64> { s.fundamental_forms(&[u[0] + a, u[1] + b]).unwrap().g };
    let g0 = g(0.0, 0.0);
    let (e, f, gg) = (g0[(0, 0)], g0[(0, 1)], g0[(1, 1)]);
    let du = |i: usize, j: usize| (g(h, 0.0)[(i, j)] - g(-h, 0.0)[(i, j)]) / (2.0 * h);
    let dv = |i: usize, j: usize| (g(0.0, h)[(i, j)] - g(0.0, -h)[(i, j)]) / (2.0 * h);
    let (e_u, e_v, f_u, f_v, g_u, g_v) = (du(0, 0), dv(0, 0), du(0, 1), dv(0, 1), du(1, 1), dv(1, 1));
    let e_vv = (g(0.0, h)[(0, 0)] - 2.0 * e + g(0.0, -h)[(0, 0)]) / (h * h);
    let g_uu = (g(h, 0.0)[(1, 1)] - 2.0 * gg + g(-h, 0.0)[(1, 1)]) / (h * h);
    let f_uv = (g(h, h)[(0, 1)] - g(h, -h)[(0, 1)] - g(-h, h)[(0, 1)] + g(-h, -h)[(0, 1)]) / (4.0 * h * h);
    let m1 = Matrix3::new(
        -0.5 * e_vv + f_uv - 0.5 * g_uu,
        0.5 * e_u,
        f_u - 0.5 * e_v,
        f_v - 0.5 * g_u,
        e,
        f,
        0.5 * g_v,
        f,
        gg,
    );
    let m2 = Matrix3::new(0.0, 0.5 * e_v, 0.5 * g_u, 0.5 * e_v, e, f, 0.5 * g_u, f, gg);
    (m1.determinant() - m2.determinant()) / (e * gg - f * f).powi(2)
}

#[test]
fn gauss_equation_matches_brioschi() {
    let cases = [
        spec(SupportKind::EuclideanPlane, 1.0),
        spec(SupportKind::Horosphere, 0.3),
        spec(SupportKind::HypGeodesicSphere { radius: 1.0 }, 0.2),
        spec(SupportKind::SphHyperplane, 0.5),
    ];
    for c in cases {
        let s = make_multi_perturbed_cap(&c, &terms()).unwrap();
        let k = s.surface.model().curvature();
        let d = s.surface.domain().clone();
        for (a, b) in [(0.3, 1.0), (0.6, 2.5), (0.9, 4.4)] {
            let u = [d.lower[0] + a * (d.upper[0] - d.lower[0]), b];
            let gauss = CurvatureData::from_forms(&s.surface.fundamental_forms(&u).unwrap(), k).scal / 2.0;
            let intrinsic = brioschi(&s.surface, u, 1e-3);
            assert!(
                (gauss - intrinsic).abs() < 1e-4 * (1.0 + gauss.abs()),
                "{:?}: {gauss} vs {intrinsic}",
                c.support.kind()
            );
        }
    }
}

#[test]
fn sampled_chart_reproduces_exact_forms() {
    for c in [spec(SupportKind::EuclideanPlane, 1.0), spec(SupportKind::Equidistant { theta: PI / 6.0 }, 0.3)] {
        let exact = make_multi_perturbed_cap(&c, &terms()).unwrap();
        let sampled = make_sampled_chart_cap(&c, &terms()).unwrap();
        let d = exact.surface.domain().clone();
        for (a, b) in [(0.2, 0.4), (0.5, 3.0), (0.95, 5.5)] {
            let u = [d.lower[0] + a * (d.upper[0] - d.lower[0]), b];
            let fe = exact.surface.fundamental_forms(&u).unwrap();
            let fs = sampled.surface.fundamental_forms(&u).unwrap();
            let scale = fe.h.abs().max();
            assert!((&fe.g - &fs.g).abs().max() < 1e-8 * fe.g.abs().max());
            assert!((&fe.h - &fs.h).abs().max() < 1e-6 * scale, "{}", (&fe.h - &fs.h).abs().max());
        }
    }
}
