//! Acceptance criteria, one line each. Tolerances and runtime bounds are
//! pinned here; loosening one is a visible diff.

use std::f64::consts::PI;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};

use freebound::error::Error;
use freebound::families::{make_perturbed_cap, make_umbilical_cap, CapSpec, PerturbationSpec, Profile, Scenario};
use freebound::inequalities::{af_report, minkowski_report, reilly_report, schur_report, TestFunction, Tolerances};
use freebound::quadrature::{domain_integral, refine_study, surface_integral, QuadratureRule};
use freebound::supports::{SupportKind, SupportSpec};
use freebound_cli::{execute, Command, Flags, ReportDocument};

const VA2_CLOSED: f64 = 1e-10;
const VA2_FD: f64 = 1e-5;
const VA3: f64 = 1e-10;
const PROBE_POINTS: usize = 100;
const UMBILIC: f64 = 1e-8;
const SECTIONAL: f64 = 1e-5;
const EQUALITY: f64 = 1e-6;
const FIT_R2: f64 = 0.99;
const SCHUR_ZERO: f64 = 1e-10;
const REILLY: f64 = 1e-5;
const REILLY_WEIGHT: f64 = 1e-12;
const MIN_ORDER: f64 = 3.0;
const MC_SAMPLES: usize = 10_000_000;
const MC_SIGMAS: f64 = 3.0;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn cap(kind: SupportKind, n: usize, r: f64) -> CapSpec {
    CapSpec::new(SupportSpec::new(kind, n).unwrap(), r)
}

fn radial(eps: f64) -> PerturbationSpec {
    PerturbationSpec {
        epsilon: eps,
        profile: Profile::Radial,
    }
}

fn rule(level: usize) -> QuadratureRule {
    QuadratureRule::new(level).unwrap()
}

fn weight_identities() -> Outcome {
    let out = execute(Command::Identities, &Flags::default()).unwrap();
    let rows = &out.document.identities;
    let probe = out.document.probe.unwrap();
    let mut weights: Vec<&str> = rows.iter().map(|r| r.weight.as_str()).collect();
    weights.sort();
    weights.dedup();
    let va2 = rows.iter().map(|r| r.va2_residual).fold(0.0, f64::max);
    let fd = rows.iter().map(|r| r.va2_fd_residual).fold(0.0, f64::max);
    let va3 = rows.iter().map(|r| r.va3_residual).fold(0.0, f64::max);
    Outcome::new(
        rows.len() == 8 && weights.len() == 6 && probe.samples == PROBE_POINTS && va2 <= VA2_CLOSED && fd <= VA2_FD && va3 <= VA3,
        format!("8 supports / {} weights: va2 {va2:.1e}, fd {fd:.1e}, va3 {va3:.1e}", weights.len()),
    )
}

fn curvature_certification() -> Outcome {
    let out = execute(Command::Curvature, &Flags::default()).unwrap();
    let d = &out.document;
    let umb = d.curvature.iter().map(|r| r.umbilicity_residual).fold(0.0, f64::max);
    let sec = d.sectional.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    Outcome::new(
        d.curvature.len() == 8 && d.sectional.len() == 4 && umb <= UMBILIC && sec <= SECTIONAL,
        format!("|h - kappa g| {umb:.1e}, |K_sec - K| {sec:.1e}"),
    )
}

fn equality_cases() -> Outcome {
    let cases = [
        ("R3 plane", cap(SupportKind::EuclideanPlane, 3, 1.0)),
        ("R3 sphere", cap(SupportKind::EuclideanSphere { radius: 1.0 }, 3, 0.5)),
        ("H3 horosphere", cap(SupportKind::Horosphere, 3, 0.3)),
        ("H3 equidistant", cap(SupportKind::Equidistant { theta: PI / 6.0 }, 3, 0.3)),
        ("H3 geodesic plane", cap(SupportKind::HypGeodesicPlane, 3, 0.5)),
        ("H3 geodesic sphere", cap(SupportKind::HypGeodesicSphere { radius: 1.0 }, 3, 0.2)),
        ("S3 geodesic sphere", cap(SupportKind::SphGeodesicSphere { radius: 1.0 }, 3, 0.25)),
        ("S3 hyperplane", cap(SupportKind::SphHyperplane, 3, 0.5)),
    ];
    let tol = Tolerances::default();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (name, c) in &cases {
        let s = make_umbilical_cap(c).unwrap();
        let m = minkowski_report(&s, &rule(24), &tol).unwrap();
        let a = af_report(&s, &rule(24), &tol).unwrap();
        let table = refine_study(
            |l| Ok(minkowski_report(&s, &rule(l), &tol)?.relative_deficit.abs()),
            &[12, 24, 48],
            Some(0.0),
        )
        .unwrap();
        worst = worst.max(m.relative_deficit.abs()).max(a.relative_deficit.abs());
        let here = m.relative_deficit.abs() <= EQUALITY && a.relative_deficit.abs() <= EQUALITY && table.monotone;
        if !here {
            bad.push(*name);
        }
        ok &= here;
        if *name == "R3 plane" {
            let target = 4.0 * PI * PI;
            ok &= (m.lhs - target).abs() <= EQUALITY * target && (m.rhs - target).abs() <= EQUALITY * target;
        }
    }
    Outcome::new(ok, format!("8 caps, worst relative deficit {worst:.1e}, monotone in {{12,24,48}}; failing {bad:?}"))
}

/// Least-squares `d = c eps^2` and its coefficient of determination.
fn quadratic_fit(eps: &[f64], d: &[f64]) -> (f64, f64) {
    let c = eps.iter().zip(d).map(|(e, d)| e * e * d).sum::<f64>() / eps.iter().map(|e| e.powi(4)).sum::<f64>();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let ss_res: f64 = eps.iter().zip(d).map(|(e, d)| (d - c * e * e).powi(2)).sum();
    let ss_tot: f64 = d.iter().map(|d| (d - mean).powi(2)).sum();
    (c, 1.0 - ss_res / ss_tot)
}

fn strictness() -> Outcome {
    let eps = [0.02, 0.04, 0.06, 0.08, 0.10];
    let base = cap(SupportKind::EuclideanPlane, 3, 1.0);
    let tol = Tolerances::default();
    let mut mink = Vec::new();
    let mut af = Vec::new();
    let mut convex = f64::INFINITY;
    for &e in &eps {
        let s = make_perturbed_cap(&base, &radial(e)).unwrap();
        let m = minkowski_report(&s, &rule(24), &tol).unwrap();
        let a = af_report(&s, &rule(24), &tol).unwrap();
        convex = convex.min(m.hypotheses.value("convexity").unwrap());
        mink.push(m.deficit);
        af.push(a.deficit);
    }
    let (cm, rm) = quadratic_fit(&eps, &mink);
    let (ca, ra) = quadratic_fit(&eps, &af);
    let positive = mink.iter().chain(&af).all(|&d| d > 0.0);
    Outcome::new(
        positive && cm > 0.0 && ca > 0.0 && rm >= FIT_R2 && ra >= FIT_R2 && convex >= 0.0,
        format!("Minkowski c = {cm:.4} (R^2 {rm:.6}), AF c = {ca:.4} (R^2 {ra:.6}), min convexity {convex:.3}"),
    )
}

fn af_equality_and_sign() -> Outcome {
    let tol = Tolerances::default();
    let s = make_umbilical_cap(&cap(SupportKind::EuclideanPlane, 3, 1.0)).unwrap();
    let r = af_report(&s, &rule(24), &tol).unwrap();
    let target = 16.0 * PI * PI;
    let closed = (r.lhs - target).abs() <= EQUALITY * target && (r.rhs - target).abs() <= EQUALITY * target;
    let supports = [
        cap(SupportKind::EuclideanPlane, 3, 1.0),
        cap(SupportKind::EuclideanSphere { radius: 1.0 }, 3, 0.5),
        cap(SupportKind::Horosphere, 3, 0.3),
        cap(SupportKind::Equidistant { theta: PI / 6.0 }, 3, 0.3),
        cap(SupportKind::SphHyperplane, 3, 0.5),
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
    let mut agree = 0;
    for _ in 0..20 {
        let c = &supports[rng.random_range(0..supports.len())];
        let profile = match rng.random_range(0..3) {
            0 => Profile::Radial,
            k => Profile::Azimuthal { order: k },
        };
        let eps = rng.random_range(-0.08..0.08) * c.radius;
        let s = make_perturbed_cap(c, &PerturbationSpec { epsilon: eps, profile }).unwrap();
        let r = af_report(&s, &rule(16), &tol).unwrap();
        let nf = r.normalized.unwrap();
        if nf.sign_agrees && nf.deficit.signum() == r.deficit.signum() {
            agree += 1;
        }
    }
    Outcome::new(
        closed && agree == 20,
        format!("hemisphere lhs {:.10} rhs {:.10} vs 16 pi^2; sign agreement {agree}/20", r.lhs, r.rhs),
    )
}

fn almost_schur() -> Outcome {
    let tol = Tolerances::default();
    let base = cap(SupportKind::EuclideanPlane, 4, 1.0);
    let s = make_umbilical_cap(&base).unwrap();
    let r = schur_report(&s, &rule(12), &tol).unwrap();
    let p = make_perturbed_cap(&base, &radial(0.05)).unwrap();
    let rp = schur_report(&p, &rule(12), &tol).unwrap();
    let low = make_umbilical_cap(&cap(SupportKind::EuclideanPlane, 3, 1.0)).unwrap();
    let rejected = matches!(schur_report(&low, &rule(8), &tol), Err(Error::DimensionTooLow { .. }));
    Outcome::new(
        r.lhs.abs() <= SCHUR_ZERO && r.rhs.abs() <= SCHUR_ZERO && rp.deficit > 0.0 && rp.relative_deficit > EQUALITY && rejected,
        format!(
            "umbilic sides {:.1e}/{:.1e}; perturbed deficit {:.3e}; n = 3 rejected: {rejected}",
            r.lhs, r.rhs, rp.deficit
        ),
    )
}

fn reilly() -> Outcome {
    let tol = Tolerances::default();
    let scenarios: [(&str, Scenario); 2] = [
        ("half-ball", make_umbilical_cap(&cap(SupportKind::EuclideanPlane, 3, 1.0)).unwrap()),
        ("H3 horosphere cap", make_umbilical_cap(&cap(SupportKind::Horosphere, 3, 0.3)).unwrap()),
    ];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut weight_worst: f64 = 0.0;
    for (_, s) in &scenarios {
        for f in [TestFunction::Weight, TestFunction::Coordinate(0), TestFunction::CoordinateSquared(0)] {
            let (_, b) = reilly_report(s, &f, &rule(24), &tol).unwrap();
            worst = worst.max(b.residual);
            ok &= b.residual <= REILLY;
            if matches!(f, TestFunction::Weight) {
                weight_worst = weight_worst.max(b.residual);
                ok &= b.residual <= REILLY_WEIGHT;
            }
        }
    }
    Outcome::new(ok, format!("worst residual {worst:.1e}, f = V {weight_worst:.1e}"))
}

fn quadrature() -> Outcome {
    let s = make_umbilical_cap(&cap(SupportKind::EuclideanPlane, 3, 1.0)).unwrap();
    let area = refine_study(|l| surface_integral(&s.surface, |_| Ok(1.0), &rule(l)), &[2, 4, 8], Some(2.0 * PI)).unwrap();
    let vol =
        refine_study(|l| domain_integral(&s.region, |_, _| Ok(1.0), &rule(l)), &[2, 4, 8], Some(2.0 * PI / 3.0)).unwrap();

    // weighted hyperbolic volume of the horosphere cap region, int x_3^{-4} dx
    let h = make_umbilical_cap(&cap(SupportKind::Horosphere, 3, 0.3)).unwrap();
    let w = &h.weight;
    let quad = domain_integral(&h.region, |x, m| Ok(w.eval_with(x, m).value), &rule(24)).unwrap();
    let (a, c): (f64, [f64; 3]) = (0.3, [0.0, 0.0, 1.0]);
    let box_vol = (2.0 * a) * (2.0 * a) * a;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..MC_SAMPLES {
        let x: [f64; 3] = [rng.random_range(-a..a), rng.random_range(-a..a), 1.0 + rng.random_range(0.0..a)];
        let r2: f64 = (0..3).map(|i| (x[i] - c[i]).powi(2)).sum();
        let f = if r2 < a * a { x[2].powi(-4) } else { 0.0 };
        sum += f;
        sum_sq += f * f;
    }
    let nn = MC_SAMPLES as f64;
    let mean = sum / nn;
    let est = box_vol * mean;
    let se = box_vol * ((sum_sq / nn - mean * mean) / (nn - 1.0)).sqrt();
    let z = (est - quad).abs() / se;
    Outcome::new(
        area.meets_order(MIN_ORDER) && vol.meets_order(MIN_ORDER) && z <= MC_SIGMAS,
        format!(
            "area order {:.1}, volume order {:.1}; Monte Carlo {est:.6} vs {quad:.6} ({z:.2} standard errors)",
            area.observed_order.unwrap_or(f64::NAN),
            vol.observed_order.unwrap_or(f64::NAN)
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"{
  "schema_version": 1,
  "support": { "kind": "horosphere" },
  "family": { "kind": "perturbed_cap", "radius": 0.3, "epsilon": 0.01, "profile": { "kind": "azimuthal", "order": 2 } },
  "theorems": ["minkowski", "af", "classical_reilly"],
  "sweep": { "epsilons": [0.0, 0.005, 0.01, 0.015] }
}"#;

fn strip_clock(text: &str) -> &str {
    &text[..text.find("\"wall_clock\"").expect("report has a wall clock")]
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.json");
    std::fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let mut ok = true;
    let mut lossless = true;
    for cmd in ["run", "sweep"] {
        let mut outputs = Vec::new();
        for jobs in [1, 8] {
            let out = dir.path().join(format!("{cmd}-{jobs}.json"));
            let status = Process::new(env!("CARGO_BIN_EXE_freebound"))
                .args([cmd, "--config"])
                .arg(&config)
                .args(["--jobs", &jobs.to_string(), "--out"])
                .arg(&out)
                .status()
                .unwrap();
            ok &= status.code() == Some(0);
            outputs.push(std::fs::read_to_string(&out).unwrap());
        }
        ok &= strip_clock(&outputs[0]) == strip_clock(&outputs[1]);
        let doc: ReportDocument = serde_json::from_str(&outputs[0]).unwrap();
        lossless &= doc.to_json() == outputs[0];
    }
    Outcome::new(ok && lossless, format!("run and sweep at 1 and 8 threads, identical: {ok}; lossless round trip: {lossless}"))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("weight identities", weight_identities, Some(Duration::from_secs(5))),
        ("curvature certification", curvature_certification, Some(Duration::from_secs(10))),
        ("equality cases", equality_cases, Some(Duration::from_secs(120))),
        ("strictness under perturbation", strictness, Some(Duration::from_secs(60))),
        ("Alexandrov-Fenchel equality and sign", af_equality_and_sign, None),
        ("almost-Schur", almost_schur, None),
        ("Reilly identity", reilly, None),
        ("quadrature convergence and Monte Carlo", quadrature, None),
        ("thread-count determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, run, bound)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let in_time = bound.is_none_or(|b| took <= b);
        let passed = outcome.passed && in_time;
        if !passed {
            failed += 1;
        }
        let budget = bound.map(|b| format!(" / {}s", b.as_secs())).unwrap_or_default();
        println!(
            "[{}] {}. {name}: {} ({:.2}s{budget})",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
