//! Change point and event detection for single- and multi-view dynamic
//! graphs from Laplacian spectra.
//!
//! Each snapshot is summarized by the top singular values of its Laplacian.
//! A time step is anomalous when its spectrum departs from the dominant
//! direction of recent spectra, measured over a short and a long window.
//! Multi-view graphs merge the per-view normalized spectra with a scalar
//! power mean before scoring.

pub mod baselines;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod generators;
pub mod graph;
pub mod multiview;
pub mod sparse;
pub mod spectral;

pub use detector::{lad_detect, AnomalyScoreSeries, DetectorConfig, LaplacianKind, SignatureSize};
pub use error::{Error, Result};
pub use graph::{DynamicGraph, GraphSnapshot};
pub use multiview::{multilad_detect, PowerMeanConfig};
pub use spectral::{SignatureVector, SolverOptions};
