use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use freebound::ambient::{ModelKind, SpaceFormModel};
use freebound::families::{support_umbilicity_residual, Scenario};
use freebound::inequalities::{
    af_report, hypothesis_audit, minkowski_report, reilly_report, schur_report, InequalityReport, ReportStatus,
    TheoremId,
};
use freebound::quadrature::{domain_integral, refine_study, surface_integral, QuadratureRule};
use freebound::supports::{SupportKind, SupportSpec};
use freebound::weights::{
    hessian_identity_residual, hessian_identity_residual_fd, neumann_identity_residual, sample_admissible, WeightField,
};

use crate::config::{validation, OutputFormat, ProbeSettings, Quantity, ScenarioConfig};
use crate::error::CliError;
use crate::report::{
    ConvergenceEntry, CurvatureRow, Finite, IdentityRow, ReillyEntry, ReportDocument, SectionalRow, SweepRow, WallClock,
};

pub const VA2_TOLERANCE: f64 = 1e-10;
pub const VA2_FD_TOLERANCE: f64 = 1e-5;
pub const VA2_FD_STEP: f64 = 1e-4;
pub const VA3_TOLERANCE: f64 = 1e-10;
pub const UMBILICITY_TOLERANCE: f64 = 1e-8;
pub const SECTIONAL_TOLERANCE: f64 = 1e-5;

/// Verify weighted geometric inequalities for free-boundary hypersurfaces.
///
/// Flags override the matching config fields, which override built-in
/// defaults. No environment variables are read.
#[derive(Debug, Parser)]
#[command(name = "freebound", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Scenario config (JSON). Required except for `identities` and `curvature`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; `csv` is only available for `sweep`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Gauss-Legendre nodes per axis.
    #[arg(long, global = true)]
    pub level: Option<usize>,
    /// Seed for sampled probe points.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Equality tolerance on relative deficits (and on Reilly residuals).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Every theorem listed in the config.
    Run,
    /// Weight identities for every model and support.
    Identities,
    /// Support umbilicity and ambient sectional curvature.
    Curvature,
    /// Weighted Minkowski inequality.
    Minkowski,
    /// Weighted Alexandrov-Fenchel inequality.
    Af,
    /// Almost-Schur inequality; needs `dim >= 4`.
    Schur,
    /// Weighted Reilly identity for each configured test function.
    Reilly,
    /// Amplitude sweep of a perturbed cap.
    Sweep,
    /// Refinement study of areas and volumes.
    Converge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Identities => "identities",
            Command::Curvature => "curvature",
            Command::Minkowski => "minkowski",
            Command::Af => "af",
            Command::Schur => "schur",
            Command::Reilly => "reilly",
            Command::Sweep => "sweep",
            Command::Converge => "converge",
        }
    }
}

/// A finished command: the document and how to emit it.
pub struct Output {
    pub document: ReportDocument,
    pub format: OutputFormat,
}

impl Output {
    pub fn render(&self) -> String {
        match self.format {
            OutputFormat::Json => self.document.to_json(),
            OutputFormat::Csv => self.document.sweep_csv(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.document.outcome.exit_code
    }
}

fn apply_flags(cfg: &mut ScenarioConfig, flags: &Flags) -> Result<(), CliError> {
    if let Some(l) = flags.level {
        cfg.level = Some(l);
    }
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(t) = flags.tolerance {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Config {
                field: "--tolerance".into(),
                detail: format!("{t} must be a nonnegative number"),
            });
        }
        cfg.tolerances.equality = t;
    }
    if let Some(f) = flags.format {
        cfg.format = f;
    }
    cfg.check()
}

fn load(flags: &Flags, required: bool) -> Result<Option<ScenarioConfig>, CliError> {
    match &flags.config {
        Some(path) => {
            let mut cfg = ScenarioConfig::load(path)?;
            apply_flags(&mut cfg, flags)?;
            Ok(Some(cfg))
        }
        None if required => Err(CliError::Config {
            field: "--config".into(),
            detail: "this command needs a scenario config".into(),
        }),
        None => Ok(None),
    }
}

/// Run a command inside a pool of `flags.jobs` threads.
pub fn execute(command: Command, flags: &Flags) -> Result<Output, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = flags.jobs {
        if j == 0 {
            return Err(CliError::Config {
                field: "--jobs".into(),
                detail: "need at least one worker".into(),
            });
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Config {
        field: "--jobs".into(),
        detail: e.to_string(),
    })?;
    pool.install(|| execute_here(command, flags))
}

fn execute_here(command: Command, flags: &Flags) -> Result<Output, CliError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let needs_config = !matches!(command, Command::Identities | Command::Curvature);
    let cfg = load(flags, needs_config)?;
    let format = cfg.as_ref().map(|c| c.format).or(flags.format).unwrap_or_default();
    if format == OutputFormat::Csv && command != Command::Sweep {
        return Err(CliError::Config {
            field: "format".into(),
            detail: "csv output is only available for sweep".into(),
        });
    }
    let mut doc = ReportDocument::new(command.name());
    match command {
        Command::Identities | Command::Curvature => {
            let mut probe = cfg.as_ref().map(ScenarioConfig::probe_settings).unwrap_or_default();
            if let Some(s) = flags.seed {
                probe.seed = s;
            }
            doc.scenario = cfg;
            doc.probe = Some(probe);
            if command == Command::Identities {
                identities(&probe, &mut doc)?;
            } else {
                curvature(&probe, &mut doc)?;
            }
        }
        _ => {
            let cfg = cfg.expect("config loaded");
            doc.quadrature_level = Some(cfg.level());
            match command {
                Command::Minkowski => theorems(&cfg, &[TheoremId::Minkowski], &mut doc)?,
                Command::Af => theorems(&cfg, &[TheoremId::AlexandrovFenchel], &mut doc)?,
                Command::Schur => theorems(&cfg, &[TheoremId::AlmostSchur], &mut doc)?,
                Command::Reilly => theorems(&cfg, &[TheoremId::ClassicalReilly], &mut doc)?,
                Command::Run => theorems(&cfg, &cfg.theorems.clone(), &mut doc)?,
                Command::Sweep => sweep(&cfg, &mut doc)?,
                Command::Converge => converge(&cfg, &mut doc)?,
                Command::Identities | Command::Curvature => unreachable!(),
            }
            doc.scenario = Some(cfg);
        }
    }
    if !doc.all_finite() {
        doc.fail("report contains a non-finite value");
    }
    doc.wall_clock = WallClock {
        started_unix_seconds: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
    };
    Ok(Output { document: doc, format })
}

fn identities(p: &ProbeSettings, doc: &mut ReportDocument) -> Result<(), CliError> {
    let rows: Vec<Result<IdentityRow, CliError>> = SupportKind::catalogue()
        .par_iter()
        .map(|&kind| {
            let s = SupportSpec::new(kind, p.dim).map_err(validation)?;
            let w = WeightField::for_support(&s);
            let interior = sample_admissible(&s, p.samples, p.seed, 1.0);
            let on_support = s.sample_on_support(p.samples, p.seed);
            let run = || -> freebound::error::Result<IdentityRow> {
                Ok(IdentityRow {
                    model: s.model().kind().name().into(),
                    support: kind.name().into(),
                    weight: w.formula().name().into(),
                    va2_residual: hessian_identity_residual(&w, &interior)?,
                    va2_fd_residual: hessian_identity_residual_fd(&w, &interior, VA2_FD_STEP)?,
                    va3_residual: neumann_identity_residual(&w, &s, &on_support)?,
                })
            };
            run().map_err(validation)
        })
        .collect();
    for row in rows {
        let row = row?;
        let label = format!("{}/{}", row.model, row.support);
        if !(row.va2_residual <= VA2_TOLERANCE) {
            doc.fail(format!("{label}: Hessian identity residual {:e} > {VA2_TOLERANCE:e}", row.va2_residual));
        }
        if !(row.va2_fd_residual <= VA2_FD_TOLERANCE) {
            doc.fail(format!(
                "{label}: finite-difference Hessian residual {:e} > {VA2_FD_TOLERANCE:e}",
                row.va2_fd_residual
            ));
        }
        if !(row.va3_residual <= VA3_TOLERANCE) {
            doc.fail(format!("{label}: Neumann identity residual {:e} > {VA3_TOLERANCE:e}", row.va3_residual));
        }
        doc.identities.push(row);
    }
    Ok(())
}

/// Seeded points well inside the chart domain of `model`.
pub fn sample_model_points(model: &SpaceFormModel, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let n = model.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = match model.kind() {
            ModelKind::EuclideanCartesian | ModelKind::SphereStereographic => {
                DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0))
            }
            ModelKind::PoincareBall => DVector::from_fn(n, |_, _| rng.random_range(-0.9..0.9)),
            ModelKind::UpperHalfSpace => DVector::from_fn(n, |i, _| {
                if i == n - 1 {
                    rng.random_range(0.1..2.0)
                } else {
                    rng.random_range(-2.0..2.0)
                }
            }),
        };
        if model.domain_margin(p.as_slice()) > 0.05 {
            out.push(p);
        }
    }
    out
}

fn curvature(p: &ProbeSettings, doc: &mut ReportDocument) -> Result<(), CliError> {
    let rows: Vec<Result<CurvatureRow, CliError>> = SupportKind::catalogue()
        .par_iter()
        .map(|&kind| {
            let s = SupportSpec::new(kind, p.dim).map_err(validation)?;
            let pts = s.sample_on_support(p.samples, p.seed);
            Ok(CurvatureRow {
                model: s.model().kind().name().into(),
                support: kind.name().into(),
                kappa: s.kappa(),
                umbilicity_residual: support_umbilicity_residual(&s, &pts).map_err(validation)?,
            })
        })
        .collect();
    for row in rows {
        let row = row?;
        if !(row.umbilicity_residual <= UMBILICITY_TOLERANCE) {
            doc.fail(format!(
                "{}/{}: h differs from kappa g by {:e}",
                row.model, row.support, row.umbilicity_residual
            ));
        }
        doc.curvature.push(row);
    }
    let kinds = [
        ModelKind::EuclideanCartesian,
        ModelKind::PoincareBall,
        ModelKind::UpperHalfSpace,
        ModelKind::SphereStereographic,
    ];
    for kind in kinds {
        let model = SpaceFormModel::new(kind, p.dim).map_err(validation)?;
        let pts = sample_model_points(&model, p.samples, p.seed);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(p.seed ^ 0x5eed);
        let mut worst: f64 = 0.0;
        for x in &pts {
            let u: Vec<f64> = (0..p.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..p.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let k = model.sectional_curvature_probe(x.as_slice(), &u, &v).map_err(validation)?;
            worst = worst.max((k - model.curvature()).abs());
        }
        if !(worst <= SECTIONAL_TOLERANCE) {
            doc.fail(format!("{}: sectional curvature off by {worst:e}", kind.name()));
        }
        doc.sectional.push(SectionalRow {
            model: kind.name().into(),
            curvature: model.curvature(),
            max_residual: worst,
        });
    }
    Ok(())
}

fn theorem_name(t: TheoremId) -> &'static str {
    match t {
        TheoremId::Minkowski => "minkowski",
        TheoremId::AlexandrovFenchel => "af",
        TheoremId::AlmostSchur => "almost_schur",
        TheoremId::ClassicalReilly => "classical_reilly",
    }
}

fn judge(r: &InequalityReport, doc: &mut ReportDocument, label: &str) {
    match r.status {
        ReportStatus::Holds => {}
        ReportStatus::Violated => doc.fail(format!(
            "{label}: deficit {:e} (relative {:e}) below tolerance",
            r.deficit, r.relative_deficit
        )),
        ReportStatus::HypothesesViolated => {
            let failed: Vec<&str> = r
                .hypotheses
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            doc.fail(format!("{label}: hypotheses violated ({})", failed.join(", ")));
        }
    }
}

fn inequality(s: &Scenario, t: TheoremId, rule: &QuadratureRule, cfg: &ScenarioConfig) -> Result<InequalityReport, CliError> {
    let tol = &cfg.tolerances;
    match t {
        TheoremId::Minkowski => minkowski_report(s, rule, tol),
        TheoremId::AlexandrovFenchel => af_report(s, rule, tol),
        TheoremId::AlmostSchur => schur_report(s, rule, tol),
        TheoremId::ClassicalReilly => unreachable!("handled per test function"),
    }
    .map_err(validation)
}

fn theorems(cfg: &ScenarioConfig, selected: &[TheoremId], doc: &mut ReportDocument) -> Result<(), CliError> {
    let rule = cfg.rule()?;
    let s = cfg.scenario()?;
    let audit = hypothesis_audit(&s, &rule, &cfg.tolerances);
    if let Some(c) = audit.first_validation_failure() {
        let detail = c.detail.clone().unwrap_or_else(|| {
            format!("value {:e} against tolerance {:e}", c.value.unwrap_or(f64::NAN), c.tolerance)
        });
        return Err(CliError::Validation {
            field: format!("scenario.{}", c.name),
            source: freebound::error::Error::ValidationFailed {
                check: c.name.clone(),
                detail,
            },
        });
    }
    doc.audit = Some(audit);
    for &t in selected {
        if t == TheoremId::ClassicalReilly {
            for f in &cfg.test_functions {
                let (report, breakdown) =
                    reilly_report(&s, &f.to_test_function(), &rule, &cfg.tolerances).map_err(validation)?;
                judge(&report, doc, &format!("reilly[f = {}]", f.label()));
                doc.reports.push(report);
                doc.reilly.push(ReillyEntry {
                    function: f.label(),
                    breakdown,
                });
            }
        } else {
            let report = inequality(&s, t, &rule, cfg)?;
            judge(&report, doc, theorem_name(t));
            doc.reports.push(report);
        }
    }
    Ok(())
}

fn sweep(cfg: &ScenarioConfig, doc: &mut ReportDocument) -> Result<(), CliError> {
    let rule = cfg.rule()?;
    let t = cfg.sweep.theorem;
    if t == TheoremId::ClassicalReilly {
        return Err(CliError::Config {
            field: "sweep.theorem".into(),
            detail: "sweeps cover the inequalities, not the Reilly identity".into(),
        });
    }
    let rows: Vec<Result<SweepRow, CliError>> = cfg
        .sweep
        .epsilons
        .par_iter()
        .map(|&e| {
            let s = cfg.scenario_with(Some(e))?;
            let r = inequality(&s, t, &rule, cfg)?;
            let eig = |name: &str| r.hypotheses.value(name).unwrap_or(f64::NAN);
            Ok(SweepRow {
                epsilon: e,
                lhs: r.lhs,
                rhs: r.rhs,
                deficit: r.deficit,
                relative_deficit: r.relative_deficit,
                min_convexity_eig: eig("convexity"),
                min_substatic_eig: eig("substatic"),
                status: r.status,
            })
        })
        .collect();
    for row in rows {
        let row = row?;
        match row.status {
            ReportStatus::Holds => {}
            ReportStatus::Violated => doc.fail(format!("epsilon {}: deficit {:e} below tolerance", row.epsilon, row.deficit)),
            ReportStatus::HypothesesViolated => doc.fail(format!("epsilon {}: hypotheses violated", row.epsilon)),
        }
        doc.sweep.push(row);
    }
    Ok(())
}

fn converge(cfg: &ScenarioConfig, doc: &mut ReportDocument) -> Result<(), CliError> {
    let s = cfg.scenario()?;
    let c = &cfg.converge;
    for target in &c.targets {
        let w = &s.weight;
        let quantity = |level: usize| -> freebound::error::Result<f64> {
            let rule = QuadratureRule::new(level)?;
            match target.quantity {
                Quantity::Area => surface_integral(&s.surface, |_| Ok(1.0), &rule),
                Quantity::WeightedArea => {
                    surface_integral(&s.surface, |f| Ok(w.eval_with(f.point.as_slice(), &f.metric).value), &rule)
                }
                Quantity::Volume => domain_integral(&s.region, |_, _| Ok(1.0), &rule),
                Quantity::WeightedVolume => domain_integral(&s.region, |x, m| Ok(w.eval_with(x, m).value), &rule),
            }
        };
        let table = refine_study(quantity, &c.levels, target.reference).map_err(validation)?;
        let meets = table.meets_order(c.min_order);
        if !meets {
            doc.fail(format!(
                "{:?}: observed order {:?} below {}",
                target.quantity, table.observed_order, c.min_order
            ));
        }
        doc.convergence.push(ConvergenceEntry {
            quantity: target.quantity,
            table,
            meets_order: meets,
        });
    }
    Ok(())
}
