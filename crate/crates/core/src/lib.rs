//! Exact discrete optimal transport on finitely generated groups.
//!
//! Arens–Eells (Wasserstein-1) norms with primal plans and Kantorovich dual
//! certificates, word metrics on Cayley graphs, convolution of finitely
//! supported probability measures, translation-invariance defects, and
//! Hausdorff quotients of finite isometric actions. All arithmetic is exact.

pub mod config;
pub mod error;
mod flow;
pub mod group;
pub mod io;
pub mod metric;
pub mod probe;
pub mod quotient;
pub mod rational;
pub mod transport;

pub use error::{Error, Result};
pub use metric::{hausdorff_distance, validate_metric, MetricSpace, PointId, ValidationReport};
pub use rational::Rational;
pub use transport::{
    arens_eells_norm, kantorovich_dual, optimal_assignment, verify_certificate, wasserstein,
    Assignment, Certificate, LipschitzWitness, SignedMeasure, TransportPlan,
};

/// Library version, as recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
