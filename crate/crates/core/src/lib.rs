//! Weighted geometric inequalities for free-boundary hypersurfaces in the
//! space forms.
//!
//! A [`families::Scenario`] is a hypersurface `Sigma` meeting an umbilical
//! support at a right angle, the region `Omega` it cuts off and the weight
//! `V` of the support. The reports in [`inequalities`] integrate both sides of
//! the Minkowski, Alexandrov-Fenchel and almost-Schur inequalities over it,
//! after auditing the hypotheses.
//!
//! ```
//! use freebound::families::{make_perturbed_cap, CapSpec, PerturbationSpec, Profile};
//! use freebound::inequalities::{minkowski_report, ReportStatus, Tolerances};
//! use freebound::quadrature::QuadratureRule;
//! use freebound::supports::{SupportKind, SupportSpec};
//!
//! let support = SupportSpec::new(SupportKind::HypGeodesicSphere { radius: 1.0 }, 3)?;
//! let bump = PerturbationSpec { epsilon: 0.03, profile: Profile::Radial };
//! let s = make_perturbed_cap(&CapSpec::new(support, 0.2), &bump)?;
//! let report = minkowski_report(&s, &QuadratureRule::new(12)?, &Tolerances::default())?;
//! assert_eq!(report.status, ReportStatus::Holds);
//! assert!(report.deficit > 0.0);
//! # Ok::<(), freebound::error::Error>(())
//! ```
//!
//! The guide in `book/` walks through the models, supports, caps and reports.

pub mod ambient;
pub mod chart;
pub mod error;
pub mod families;
pub mod inequalities;
pub mod linalg;
pub mod quadrature;
pub mod supports;
pub mod surfaces;
pub mod weights;

// The book's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/space-forms.md")]
    mod space_forms {}
    #[doc = include_str!("../../../book/src/supports-and-weights.md")]
    mod supports_and_weights {}
    #[doc = include_str!("../../../book/src/surfaces.md")]
    mod surfaces {}
    #[doc = include_str!("../../../book/src/caps.md")]
    mod caps {}
    #[doc = include_str!("../../../book/src/quadrature.md")]
    mod quadrature {}
    #[doc = include_str!("../../../book/src/inequalities.md")]
    mod inequalities {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
