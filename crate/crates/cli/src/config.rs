//! Scenario configuration: the JSON document read by `--config`.
//!
//! Precedence for every setting is command-line flag, then config field,
//! then built-in default. Nothing is read from the environment.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use freebound::ambient::ModelKind;
use freebound::error::Error;
use freebound::families::{
    make_perturbed_cap, make_sampled_chart_cap, make_umbilical_cap, CapSpec, PerturbationSpec, Profile, Scenario,
};
use freebound::inequalities::{TestFunction, TheoremId, Tolerances};
use freebound::quadrature::QuadratureRule;
use freebound::supports::{SupportKind, SupportSpec};

use crate::error::CliError;

/// Version of the config layout accepted by this build; matches
/// `schema/scenario.schema.v1.json`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    /// Ambient dimension `n`.
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Optional cross-check; the support already determines the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    pub support: SupportKind,
    pub family: FamilyConfig,
    /// Gauss-Legendre nodes per axis; defaults by dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_theorems")]
    pub theorems: Vec<TheoremId>,
    /// Test functions for the Reilly identity (coordinates are 0-based).
    #[serde(default = "default_test_functions")]
    pub test_functions: Vec<TestFunctionConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub format: OutputFormat,
    /// Seed for every sampled quantity (identity and curvature probes).
    #[serde(default)]
    pub seed: u64,
    /// Points per probe for `identities` and `curvature`.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    UmbilicalCap {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center_offset: Option<Vec<f64>>,
        #[serde(default)]
        tilt: f64,
    },
    PerturbedCap {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center_offset: Option<Vec<f64>>,
        #[serde(default)]
        tilt: f64,
        epsilon: f64,
        profile: Profile,
    },
    /// A cap given only through its point map (a sum of profile terms);
    /// derivatives are taken by finite differences.
    UserChart {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center_offset: Option<Vec<f64>>,
        #[serde(default)]
        tilt: f64,
        terms: Vec<PerturbationSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionConfig {
    Weight,
    Coordinate(usize),
    CoordinateSquared(usize),
}

impl TestFunctionConfig {
    pub fn to_test_function(self) -> TestFunction {
        match self {
            TestFunctionConfig::Weight => TestFunction::Weight,
            TestFunctionConfig::Coordinate(i) => TestFunction::Coordinate(i),
            TestFunctionConfig::CoordinateSquared(i) => TestFunction::CoordinateSquared(i),
        }
    }

    pub fn label(self) -> String {
        match self {
            TestFunctionConfig::Weight => "V".into(),
            TestFunctionConfig::Coordinate(i) => format!("x{}", i + 1),
            TestFunctionConfig::CoordinateSquared(i) => format!("x{}^2", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_sweep_theorem")]
    pub theorem: TheoremId,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            epsilons: default_epsilons(),
            theorem: default_sweep_theorem(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `int_Sigma 1`.
    Area,
    /// `int_Sigma V`.
    WeightedArea,
    /// `int_Omega 1`.
    Volume,
    /// `int_Omega V`.
    WeightedVolume,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeTarget {
    pub quantity: Quantity,
    /// Exact value; without it consecutive levels are compared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default = "default_converge_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_targets")]
    pub targets: Vec<ConvergeTarget>,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            levels: default_converge_levels(),
            targets: default_targets(),
            min_order: default_min_order(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}
fn default_dim() -> usize {
    3
}
fn default_theorems() -> Vec<TheoremId> {
    vec![TheoremId::Minkowski, TheoremId::AlexandrovFenchel]
}
fn default_test_functions() -> Vec<TestFunctionConfig> {
    vec![
        TestFunctionConfig::Weight,
        TestFunctionConfig::Coordinate(0),
        TestFunctionConfig::CoordinateSquared(0),
    ]
}
fn default_epsilons() -> Vec<f64> {
    vec![0.02, 0.04, 0.06, 0.08, 0.10]
}
fn default_sweep_theorem() -> TheoremId {
    TheoremId::Minkowski
}
fn default_converge_levels() -> Vec<usize> {
    vec![2, 4, 8]
}
fn default_targets() -> Vec<ConvergeTarget> {
    vec![
        ConvergeTarget {
            quantity: Quantity::Area,
            reference: None,
        },
        ConvergeTarget {
            quantity: Quantity::Volume,
            reference: None,
        },
    ]
}
fn default_min_order() -> f64 {
    3.0
}
fn default_samples() -> usize {
    100
}

/// Settings for the probe commands, which need no scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub dim: usize,
    pub seed: u64,
    pub samples: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            dim: default_dim(),
            seed: 0,
            samples: default_samples(),
        }
    }
}

/// Field path for a construction error, used in validation messages.
fn field_for(e: &Error) -> String {
    match e {
        Error::DimensionTooLow { .. } => "dim".into(),
        Error::DimensionMismatch { .. } => "family.center_offset".into(),
        Error::OrthogonalityInfeasible(_) => "family.tilt".into(),
        Error::ValidationFailed { check, .. } => format!("scenario.{check}"),
        Error::StarShapeViolated { .. } => "scenario.star_shape".into(),
        _ => "family".into(),
    }
}

pub(crate) fn validation(e: Error) -> CliError {
    CliError::Validation {
        field: field_for(&e),
        source: e,
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::ConfigParse { detail, .. } => CliError::ConfigParse {
                path: path.display().to_string(),
                detail,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::ConfigParse {
            path: "<inline>".into(),
            detail: e.to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Static constraints that do not need any geometry.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |field: &str, detail: String| {
            Err(CliError::Config {
                field: field.into(),
                detail,
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if self.dim < 2 {
            return bad("dim", format!("dimension {} is below 2", self.dim));
        }
        if let Some(m) = self.model {
            if m != self.support.model_kind() {
                return bad(
                    "model",
                    format!(
                        "support {} lives in {}, not {}",
                        self.support.name(),
                        self.support.model_kind().name(),
                        m.name()
                    ),
                );
            }
        }
        if self.level == Some(0) {
            return bad("level", "quadrature level must be positive".into());
        }
        if self.samples == 0 {
            return bad("samples", "at least one sample is needed".into());
        }
        if self.theorems.is_empty() {
            return bad("theorems", "select at least one theorem".into());
        }
        if self.sweep.epsilons.iter().any(|e| !e.is_finite()) {
            return bad("sweep.epsilons", "amplitudes must be finite".into());
        }
        if self.converge.levels.len() < 3 || self.converge.levels.windows(2).any(|w| w[1] <= w[0]) || self.converge.levels[0] == 0 {
            return bad("converge.levels", "need at least three increasing positive levels".into());
        }
        for (i, f) in self.test_functions.iter().enumerate() {
            if let TestFunctionConfig::Coordinate(k) | TestFunctionConfig::CoordinateSquared(k) = f {
                if *k >= self.dim {
                    return bad(&format!("test_functions[{i}]"), format!("coordinate {k} out of range for n = {}", self.dim));
                }
            }
        }
        Ok(())
    }

    pub fn level(&self) -> usize {
        self.level.unwrap_or_else(|| QuadratureRule::default_level(self.dim))
    }

    pub fn rule(&self) -> Result<QuadratureRule, CliError> {
        QuadratureRule::new(self.level()).map_err(|e| CliError::Config {
            field: "level".into(),
            detail: e.to_string(),
        })
    }

    pub fn probe_settings(&self) -> ProbeSettings {
        ProbeSettings {
            dim: self.dim,
            seed: self.seed,
            samples: self.samples,
        }
    }

    fn cap_spec(&self) -> Result<CapSpec, CliError> {
        let support = SupportSpec::new(self.support, self.dim).map_err(|e| CliError::Validation {
            field: if matches!(e, Error::DimensionTooLow { .. }) { "dim" } else { "support" }.into(),
            source: e,
        })?;
        let (radius, offset, tilt) = match &self.family {
            FamilyConfig::UmbilicalCap {
                radius,
                center_offset,
                tilt,
            }
            | FamilyConfig::PerturbedCap {
                radius,
                center_offset,
                tilt,
                ..
            }
            | FamilyConfig::UserChart {
                radius,
                center_offset,
                tilt,
                ..
            } => (*radius, center_offset, *tilt),
        };
        let mut spec = CapSpec::new(support, radius).with_tilt(tilt);
        if let Some(o) = offset {
            spec = spec.with_offset(DVector::from_column_slice(o));
        }
        Ok(spec)
    }

    /// Build the configured scenario.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        self.scenario_with(None)
    }

    /// Build the scenario, replacing the perturbation amplitude when
    /// `epsilon` is given (sweeps).
    pub fn scenario_with(&self, epsilon: Option<f64>) -> Result<Scenario, CliError> {
        let spec = self.cap_spec()?;
        let built = match (&self.family, epsilon) {
            (FamilyConfig::UmbilicalCap { .. }, None) => make_umbilical_cap(&spec),
            (FamilyConfig::PerturbedCap { epsilon: e, profile, .. }, over) => make_perturbed_cap(
                &spec,
                &PerturbationSpec {
                    epsilon: over.unwrap_or(*e),
                    profile: *profile,
                },
            ),
            (FamilyConfig::UserChart { terms, .. }, None) => make_sampled_chart_cap(&spec, terms),
            (_, Some(_)) => {
                return Err(CliError::Config {
                    field: "family.kind".into(),
                    detail: "an amplitude sweep needs a perturbed_cap family".into(),
                })
            }
        };
        built.map_err(validation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEMISPHERE: &str = r#"{
        "support": {"kind": "euclidean_plane"},
        "family": {"kind": "umbilical_cap", "radius": 1.0}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::parse(HEMISPHERE).unwrap();
        assert_eq!(c.dim, 3);
        assert_eq!(c.level(), 24);
        assert_eq!(c.theorems, vec![TheoremId::Minkowski, TheoremId::AlexandrovFenchel]);
        assert_eq!(c.tolerances, Tolerances::default());
        assert!(c.scenario().is_ok());
    }

    #[test]
    fn round_trip() {
        let c = ScenarioConfig::parse(HEMISPHERE).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ScenarioConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = HEMISPHERE.replace("\"radius\": 1.0", "\"radius\": 1.0, \"radious\": 2");
        assert!(matches!(ScenarioConfig::parse(&text), Err(CliError::ConfigParse { .. })));
    }

    #[test]
    fn model_mismatch_names_field() {
        let text = HEMISPHERE.replace("\"support\"", "\"model\": \"poincare_ball\", \"support\"");
        match ScenarioConfig::parse(&text) {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "model"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tilted_cap_fails_on_orthogonality() {
        let text = HEMISPHERE.replace("\"radius\": 1.0", "\"radius\": 1.0, \"tilt\": 0.2");
        let c = ScenarioConfig::parse(&text).unwrap();
        // placement succeeds, the audit later rejects it
        assert!(c.scenario().is_ok());
        let text = HEMISPHERE.replace("\"radius\": 1.0", "\"radius\": 1.0, \"tilt\": 2.0");
        let c = ScenarioConfig::parse(&text).unwrap();
        match c.scenario() {
            Err(CliError::Validation { field, .. }) => assert_eq!(field, "family.tilt"),
            other => panic!("{other:?}"),
        }
    }
}
