//! Motion detection for moving-camera video, driven by dense optical flow.
//!
//! The camera-induced part of a flow field is modeled as a quadratic
//! polynomial of the pixel coordinates, fitted robustly to grid-constrained
//! samples; pixels whose observed flow deviates from the model by more than
//! an adaptive threshold are foreground. A frame-interval controller keeps
//! the background flow magnitude near a fixed operating point so slow scenes
//! stay detectable.
//!
//! Modules:
//! - [`flow`]: fields, coordinates, and polynomial background models.
//! - [`regression`]: least-squares model fitting.
//! - [`sampling`]: grid partition, constrained sampling, robust (RANSAC) fit.
//! - [`detector`]: per-frame pipeline (interval, threshold, mask).
//! - [`synth`]: synthetic scenes with exact ground truth.
//! - [`eval`]: region-similarity metrics over mask sequences.
//! - [`io`]: flow/mask file formats and sequence manifests.

pub mod detector;
pub mod eval;
pub mod flow;
pub mod io;
pub mod regression;
pub mod sampling;
pub mod synth;

pub use detector::{
    detect_frame, DetectorConfig, ForegroundMask, FrameResult, IntervalKind, IntervalState,
    ModelKind, ThresholdKind,
};
pub use flow::{BackgroundModel, FlowField, FlowModel, PixelCoord, QuadraticFlowModel};
pub use sampling::{GridConfig, RansacConfig, SamplePoint};
