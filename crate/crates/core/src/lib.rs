//! Conformally-corrected out-of-distribution detection metrics.
//!
//! The crate turns a set of in-distribution calibration scores into
//! high-probability upper envelopes for the false positive rate. From those it
//! derives calibration-conditional p-values, a conformal ROC curve, conformal
//! AUROC and conformal FPR@TPR. A second half of the crate provides
//! class-conditional OOD scorers (KNN, Mahalanobis, softmax) and the split
//! conformal prediction set constructions (LAC, APS, RAPS) that consume them.
//!
//! Scores follow a single orientation everywhere: higher means more OOD.
//!
//! All numerical code is generic over [`Real`] (implemented for `f32` and
//! `f64`). The `f64` instantiations are re-exported below under short aliases.

pub mod conformal_sets;
pub mod corrections;
pub mod error;
pub mod metrics;
pub mod pvalues;
pub mod rng;
pub mod scalar;
pub mod scorers;
pub mod simulation;
pub mod special;

pub use conformal_sets::{CalibrationResult, PredictionSet, RapsParams, SetEvaluation, SetMethod};
pub use corrections::{CorrectionMethod, DeltaHat, MonteCarloConfig};
pub use error::{Error, Result};
pub use metrics::{CurveKind, OperatingPoint, RocPoint};
pub use pvalues::MarginalPValue;
pub use scalar::Real;
pub use simulation::ViolationReport;

/// Correction bounds over `f64`.
pub type BoundSequence = corrections::BoundSequence<f64>;
/// Detector scores over `f64`.
pub type ScoreVector = pvalues::ScoreVector<f64>;
/// ROC curve over `f64`.
pub type RocCurve = metrics::RocCurve<f64>;
/// Classical-vs-conformal metric summary over `f64`.
pub type MetricReport = metrics::MetricReport<f64>;
/// Labeled feature matrix over `f64`.
pub type LabeledFeatures = scorers::LabeledFeatures<f64>;
/// Per-class nonconformity scores over `f64`.
pub type ClassScores = scorers::ClassScores<f64>;
/// Fitted Mahalanobis scorer over `f64`.
pub type MahalanobisModel = scorers::MahalanobisModel<f64>;
/// Simulated conditional-FPR draws over `f64`.
pub type FluctuationDraws = simulation::FluctuationDraws<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type BoundSequence = crate::corrections::BoundSequence<f32>;
    pub type ScoreVector = crate::pvalues::ScoreVector<f32>;
    pub type RocCurve = crate::metrics::RocCurve<f32>;
    pub type MetricReport = crate::metrics::MetricReport<f32>;
    pub type LabeledFeatures = crate::scorers::LabeledFeatures<f32>;
    pub type ClassScores = crate::scorers::ClassScores<f32>;
}
