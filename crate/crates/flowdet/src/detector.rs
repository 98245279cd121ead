//! Frame-level detection pipeline: adaptive interval maintenance, adaptive
//! thresholding, and foreground mask extraction.
//!
//! Per frame: draw grid-constrained samples from the mixed flow field, fit
//! the background model robustly, measure the mean background-flow norm over
//! the fit's inliers, derive the foreground threshold from it, and mark every
//! pixel whose flow deviates from the model prediction by more than the
//! threshold. The measured norm also drives the frame interval for the next
//! frame: the interval grows when the scene moves slower than the target
//! speed and shrinks when it moves faster, so the background flow magnitude
//! the fit sees stays near a fixed operating point.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::flow::{BackgroundModel, FlowField, FlowModel, PixelCoord};
use crate::sampling::{
    mean_flow_norm, ransac_fit_linear, ransac_fit_timed, sample_points, GridConfig, RansacConfig,
    SamplingError,
};

/// Background model class to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Quadratic,
    Linear,
}

/// Foreground threshold policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdKind {
    /// Static component plus a gain on the mean background-flow norm.
    Adaptive,
    /// A single fixed value in pixels.
    Fixed(f64),
}

/// Frame interval policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    /// Regulated so the mean background-flow norm tracks `alpha_s`.
    Adaptive,
    /// Pinned to a constant interval.
    Fixed(u32),
}

/// Norm used on the per-pixel complement vector in mask extraction.
/// Euclidean is the operating choice; the taxicab variant exists for
/// comparison runs only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualNorm {
    L2,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Target mean background-flow norm, pixels.
    pub alpha_s: f64,
    /// Static threshold component, pixels.
    pub alpha_1: f64,
    /// Dynamic threshold gain on the mean background-flow norm.
    pub alpha_2: f64,
    /// Frame-interval bounds.
    pub k_min: u32,
    pub k_max: u32,
    pub grid: GridConfig,
    pub ransac: RansacConfig,
    pub model_kind: ModelKind,
    pub threshold_kind: ThresholdKind,
    pub interval_kind: IntervalKind,
    pub residual_norm: ResidualNorm,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            alpha_s: 25.0,
            alpha_1: 2.85,
            alpha_2: 0.33,
            k_min: 1,
            k_max: 5,
            grid: GridConfig::default(),
            ransac: RansacConfig::default(),
            model_kind: ModelKind::Quadratic,
            threshold_kind: ThresholdKind::Adaptive,
            interval_kind: IntervalKind::Adaptive,
            residual_norm: ResidualNorm::L2,
        }
    }
}

/// Current frame interval plus the last measured mean background-flow norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalState {
    pub k: u32,
    pub last_mean_norm: Option<f64>,
}

impl IntervalState {
    /// Initial state: interval 1, nothing measured yet.
    pub fn new() -> Self {
        Self {
            k: 1,
            last_mean_norm: None,
        }
    }
}

impl Default for IntervalState {
    fn default() -> Self {
        Self::new()
    }
}

/// Per-pixel boolean image, row-major; `true` marks foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl ForegroundMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert!(width >= 1 && height >= 1);
        assert_eq!(bits.len(), width as usize * height as usize);
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of foreground pixels.
    pub fn foreground_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Foreground fraction of the frame, in [0, 1].
    pub fn foreground_fraction(&self) -> f64 {
        self.foreground_count() as f64 / self.bits.len() as f64
    }
}

/// Everything one processed frame yields, diagnostics included.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub mask: ForegroundMask,
    pub model: BackgroundModel,
    pub threshold_used: f64,
    pub mean_background_norm: f64,
    pub inlier_ratio: f64,
    pub next_k: u32,
}

/// Wall-clock split of one frame, milliseconds.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub sampling_ms: f64,
    pub search_ms: f64,
    pub refit_ms: f64,
    pub mask_ms: f64,
}

impl StageTimings {
    /// Total non-I/O pipeline time for the frame.
    pub fn total_ms(&self) -> f64 {
        self.sampling_ms + self.search_ms + self.refit_ms + self.mask_ms
    }
}

/// Next frame interval: `round(alpha_s * k / mean_norm)` clamped to
/// `[k_min, k_max]`. A zero measured norm means the scene moves arbitrarily
/// slower than the target, so the interval saturates at `k_max`.
pub fn update_interval(state: &IntervalState, mean_norm: f64, cfg: &DetectorConfig) -> u32 {
    debug_assert!(mean_norm >= 0.0);
    if mean_norm <= 0.0 {
        return cfg.k_max;
    }
    let raw = (cfg.alpha_s * state.k as f64 / mean_norm).round();
    raw.clamp(cfg.k_min as f64, cfg.k_max as f64) as u32
}

/// Foreground decision level: `alpha_1 + alpha_2 * mean_norm` pixels.
pub fn adaptive_threshold(mean_norm: f64, cfg: &DetectorConfig) -> f64 {
    cfg.alpha_1 + cfg.alpha_2 * mean_norm
}

/// Marks every pixel whose flow deviates from the model prediction by
/// strictly more than `threshold` pixels (Euclidean norm). A residual exactly
/// at the threshold stays background.
pub fn extract_mask<M: FlowModel>(field: &FlowField, model: &M, threshold: f64) -> ForegroundMask {
    extract_mask_with_norm(field, model, threshold, ResidualNorm::L2)
}

/// [`extract_mask`] with an explicit choice of residual norm.
pub fn extract_mask_with_norm<M: FlowModel>(
    field: &FlowField,
    model: &M,
    threshold: f64,
    norm: ResidualNorm,
) -> ForegroundMask {
    let width = field.width();
    let height = field.height();
    let u = field.u_plane();
    let v = field.v_plane();
    let mut bits = vec![false; u.len()];
    let threshold_sq = threshold * threshold;
    for y in 0..height {
        let row = y as usize * width as usize;
        for x in 0..width {
            let i = row + x as usize;
            let predicted = model.evaluate(PixelCoord::of_pixel(x, y));
            let du = u[i] - predicted.x;
            let dv = v[i] - predicted.y;
            bits[i] = match norm {
                ResidualNorm::L2 => du * du + dv * dv > threshold_sq,
                ResidualNorm::L1 => du.abs() + dv.abs() > threshold,
            };
        }
    }
    ForegroundMask::new(width, height, bits)
}

/// Runs the full per-frame pipeline and advances the interval state once.
///
/// The field is expected to be the flow between frames `t` and `t - state.k`;
/// honoring that interval is the caller's contract. Deterministic given
/// `(field, state, cfg)`; the random stream derives from `cfg.ransac.seed`.
pub fn detect_frame(
    field: &FlowField,
    state: &IntervalState,
    cfg: &DetectorConfig,
) -> Result<(FrameResult, IntervalState), SamplingError> {
    detect_frame_timed(field, state, cfg).map(|(result, next, _)| (result, next))
}

/// [`detect_frame`] plus the wall-clock split of the pipeline stages.
pub fn detect_frame_timed(
    field: &FlowField,
    state: &IntervalState,
    cfg: &DetectorConfig,
) -> Result<(FrameResult, IntervalState, StageTimings), SamplingError> {
    let domain = (field.width(), field.height());
    let mut timings = StageTimings::default();

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.ransac.seed);
    let samples = sample_points(field, &cfg.grid, &mut rng)?;
    timings.sampling_ms = start.elapsed().as_secs_f64() * 1e3;

    let (model, inliers, inlier_ratio) = match cfg.model_kind {
        ModelKind::Quadratic => {
            let (result, ransac_timing) = ransac_fit_timed(&samples, domain, &cfg.ransac)?;
            timings.search_ms = ransac_timing.search_ms;
            timings.refit_ms = ransac_timing.refit_ms;
            (
                BackgroundModel::Quadratic(result.model),
                result.inliers,
                result.inlier_ratio,
            )
        }
        ModelKind::Linear => {
            let start = Instant::now();
            let result = ransac_fit_linear(&samples, domain, &cfg.ransac)?;
            timings.search_ms = start.elapsed().as_secs_f64() * 1e3;
            (
                BackgroundModel::Linear(result.model),
                result.inliers,
                result.inlier_ratio,
            )
        }
    };

    let mean_norm = mean_flow_norm(&inliers)?;
    let threshold = match cfg.threshold_kind {
        ThresholdKind::Adaptive => adaptive_threshold(mean_norm, cfg),
        ThresholdKind::Fixed(value) => value,
    };

    let start = Instant::now();
    let mask = extract_mask_with_norm(field, &model, threshold, cfg.residual_norm);
    timings.mask_ms = start.elapsed().as_secs_f64() * 1e3;

    let next_k = match cfg.interval_kind {
        IntervalKind::Adaptive => update_interval(state, mean_norm, cfg),
        IntervalKind::Fixed(k) => k.clamp(cfg.k_min, cfg.k_max),
    };

    let result = FrameResult {
        mask,
        model,
        threshold_used: threshold,
        mean_background_norm: mean_norm,
        inlier_ratio,
        next_k,
    };
    let next_state = IntervalState {
        k: next_k,
        last_mean_norm: Some(mean_norm),
    };
    Ok((result, next_state, timings))
}
