//! Turns massive heterogeneous text-log streams into per-interval
//! feature-count vectors, calibrates a PCA normality model, flags anomalous
//! intervals via D/Q statistics and a combined Tscore, diagnoses the
//! responsible features, and recovers the exact raw log lines behind each
//! anomaly.
//!
//! The pipeline runs in five composable steps:
//!
//! 1. parse — count regex matches per feature per sampling interval
//! 2. fuse — resample per-source streams to a common rate and append columns
//! 3. detect — PCA model, D/Q statistics, empirical control limits, Tscore
//! 4. diagnose — Univariate-Squared contributions and feature selection
//! 5. de-parse — recover raw log lines ranked by matched features

pub mod config;
pub mod diagnosis;
pub mod error;
pub mod fusion;
pub mod model;
pub mod monitor;
pub mod parser;
pub mod pca;

pub use config::{ComponentPolicy, FeatureSelection, FeatureSpec, PipelineConfig, SourceSpec};
pub use diagnosis::{ContributionVector, DeparseResult, SelectedFeature, SelectedFeatures};
pub use error::{Error, Result};
pub use fusion::FusedMatrix;
pub use model::SavedModel;
pub use monitor::{AnomalyWindow, ClusterPoint, ControlLimits, Detector, MonitorRecord, Phase};
pub use parser::{FeatureStream, LogLine, ParseStats};
pub use pca::{CrossProductAccumulator, MeanVarAccumulator, PcaModel, PreprocessParams};
