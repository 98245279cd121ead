//! Grid-constrained point sampling and robust (RANSAC) background fitting.
//!
//! The sampler divides the frame into square pieces, picks a fraction of the
//! pieces, and draws exactly one pixel per chosen piece. Constraining the
//! pool to at most one point per piece keeps the samples spread across the
//! frame (good fitting coverage) while keeping the pool small enough that a
//! fixed, small number of RANSAC rounds finds an outlier-free subset.

use std::time::Instant;

use nalgebra::Vector2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::flow::{FlowField, FlowModel, LinearFlowModel, PixelCoord, QuadraticFlowModel};
use crate::regression::{
    fit_linear, fit_quadratic, residual, FitError, MIN_LINEAR_SAMPLES, MIN_QUADRATIC_SAMPLES,
};

/// Parameters of the sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Edge length of the square pieces, pixels.
    pub piece_edge: u32,
    /// Fraction of pieces that receive a sample, in (0, 1].
    pub sample_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            piece_edge: 100,
            sample_fraction: 0.5,
        }
    }
}

/// One rectangle of the grid partition. Interior pieces are square; pieces on
/// the right/bottom edge may be smaller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPiece {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl GridPiece {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

/// A pixel coordinate paired with the flow observed there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub coord: PixelCoord,
    pub flow: Vector2<f64>,
}

/// RANSAC parameters. Hypotheses always use the minimal determined subset
/// (6 points for the quadratic model, 3 for the linear one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// Number of hypothesize-and-verify rounds. Fixed, not adaptive.
    pub iterations: u32,
    /// A sample is an inlier when its flow residual is at most this many pixels.
    pub inlier_threshold_px: f64,
    /// Seed for the deterministic random generator.
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        // The inlier threshold sits well below the foreground decision
        // threshold (~11 px at the default operating point) so foreground
        // points rarely survive as inliers.
        Self {
            iterations: 50,
            inlier_threshold_px: 1.5,
            seed: 0,
        }
    }
}

/// Robust fit result: the refit model, the samples consistent with it, and
/// their fraction of the input pool.
#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult<M = QuadraticFlowModel> {
    pub model: M,
    pub inliers: Vec<SamplePoint>,
    pub inlier_ratio: f64,
}

/// Wall-clock split of a robust fit, for the benchmark report.
#[derive(Debug, Clone, Copy, Default)]
pub struct RansacTiming {
    /// Hypothesize-and-verify rounds.
    pub search_ms: f64,
    /// Final least-squares refit on the winning inlier set plus re-scoring.
    pub refit_ms: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SamplingError {
    /// The configured fraction selects zero pieces.
    #[error("sample fraction selects zero grid pieces")]
    EmptySelection,
    /// Fewer samples than the minimal model-determining subset.
    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },
    /// Every hypothesis produced a singular fit.
    #[error("all RANSAC hypotheses were degenerate")]
    DegenerateModel,
    /// An aggregate over an empty point list was requested.
    #[error("empty input")]
    EmptyInput,
}

/// Tiles `width x height` into square pieces of edge `piece_edge`, row-major.
///
/// The tiling is exact: pieces are disjoint, cover the full frame, and number
/// `ceil(width/S) * ceil(height/S)`.
pub fn grid_partition(width: u32, height: u32, piece_edge: u32) -> Vec<GridPiece> {
    assert!(width >= 1 && height >= 1 && piece_edge >= 1);
    let cols = width.div_ceil(piece_edge);
    let rows = height.div_ceil(piece_edge);
    let mut pieces = Vec::with_capacity(cols as usize * rows as usize);
    for row in 0..rows {
        for col in 0..cols {
            let x = col * piece_edge;
            let y = row * piece_edge;
            pieces.push(GridPiece {
                x,
                y,
                width: piece_edge.min(width - x),
                height: piece_edge.min(height - y),
            });
        }
    }
    pieces
}

/// Draws the constrained sample set: `round(P * piece_count)` pieces chosen
/// uniformly without replacement (round half up), then one uniform pixel per
/// chosen piece. Every returned point lies in a distinct piece and carries
/// the field's flow at its integer pixel location.
pub fn sample_points(
    field: &FlowField,
    cfg: &GridConfig,
    rng: &mut impl Rng,
) -> Result<Vec<SamplePoint>, SamplingError> {
    let pieces = grid_partition(field.width(), field.height(), cfg.piece_edge);
    // f64::round is round-half-away-from-zero, i.e. half-up for the
    // non-negative values possible here.
    let select = (cfg.sample_fraction * pieces.len() as f64).round() as usize;
    if select == 0 {
        return Err(SamplingError::EmptySelection);
    }
    let mut chosen =
        rand::seq::index::sample(rng, pieces.len(), select.min(pieces.len())).into_vec();
    chosen.sort_unstable();

    let samples = chosen
        .into_iter()
        .map(|i| {
            let piece = pieces[i];
            let x = piece.x + rng.random_range(0..piece.width);
            let y = piece.y + rng.random_range(0..piece.height);
            SamplePoint {
                coord: PixelCoord::of_pixel(x, y),
                flow: field.flow_at(x, y),
            }
        })
        .collect();
    Ok(samples)
}

/// Robustly fits the quadratic background model: `cfg.iterations` rounds of
/// (draw 6 distinct samples, fit exactly, count inliers by flow residual),
/// keeping the round with the most inliers (first encountered wins ties),
/// then refitting on the full winning inlier set and re-scoring against the
/// refit model. Deterministic given `cfg.seed`.
pub fn ransac_fit(
    samples: &[SamplePoint],
    domain: (u32, u32),
    cfg: &RansacConfig,
) -> Result<RansacResult, SamplingError> {
    ransac_fit_timed(samples, domain, cfg).map(|(result, _)| result)
}

/// [`ransac_fit`] with its wall-clock phase split.
pub fn ransac_fit_timed(
    samples: &[SamplePoint],
    domain: (u32, u32),
    cfg: &RansacConfig,
) -> Result<(RansacResult, RansacTiming), SamplingError> {
    ransac_engine(samples, cfg, MIN_QUADRATIC_SAMPLES, |subset| {
        fit_quadratic(subset, domain)
    })
}

/// Same engine over the affine model (3-point minimal subsets), for the
/// linear ablation arm.
pub fn ransac_fit_linear(
    samples: &[SamplePoint],
    domain: (u32, u32),
    cfg: &RansacConfig,
) -> Result<RansacResult<LinearFlowModel>, SamplingError> {
    ransac_engine(samples, cfg, MIN_LINEAR_SAMPLES, |subset| {
        fit_linear(subset, domain)
    })
    .map(|(result, _)| result)
}

fn ransac_engine<M, F>(
    samples: &[SamplePoint],
    cfg: &RansacConfig,
    min_points: usize,
    fit: F,
) -> Result<(RansacResult<M>, RansacTiming), SamplingError>
where
    M: FlowModel,
    F: Fn(&[SamplePoint]) -> Result<M, FitError>,
{
    if samples.len() < min_points {
        return Err(SamplingError::InsufficientSamples {
            required: min_points,
            got: samples.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut subset = Vec::with_capacity(min_points);

    let search_start = Instant::now();
    let mut best: Option<(usize, M)> = None;
    for _ in 0..cfg.iterations {
        let indices = rand::seq::index::sample(&mut rng, samples.len(), min_points);
        subset.clear();
        subset.extend(indices.iter().map(|i| samples[i]));
        let Ok(hypothesis) = fit(&subset) else {
            continue;
        };
        let count = samples
            .iter()
            .filter(|s| residual(&hypothesis, s) <= cfg.inlier_threshold_px)
            .count();
        // Strict comparison: ties keep the earlier hypothesis.
        if best
            .as_ref()
            .is_none_or(|(best_count, _)| count > *best_count)
        {
            best = Some((count, hypothesis));
        }
    }
    let Some((_, winner)) = best else {
        return Err(SamplingError::DegenerateModel);
    };
    let search_ms = search_start.elapsed().as_secs_f64() * 1e3;

    let refit_start = Instant::now();
    let winning_set: Vec<SamplePoint> = samples
        .iter()
        .filter(|s| residual(&winner, s) <= cfg.inlier_threshold_px)
        .copied()
        .collect();
    let model = fit(&winning_set).map_err(|_| SamplingError::DegenerateModel)?;
    // Re-score under the refit model so the reported inliers are consistent
    // with the model actually returned.
    let inliers: Vec<SamplePoint> = samples
        .iter()
        .filter(|s| residual(&model, s) <= cfg.inlier_threshold_px)
        .copied()
        .collect();
    let inlier_ratio = inliers.len() as f64 / samples.len() as f64;
    let refit_ms = refit_start.elapsed().as_secs_f64() * 1e3;

    Ok((
        RansacResult {
            model,
            inliers,
            inlier_ratio,
        },
        RansacTiming {
            search_ms,
            refit_ms,
        },
    ))
}

/// Arithmetic mean of the Euclidean norms of the points' flow vectors.
pub fn mean_flow_norm(points: &[SamplePoint]) -> Result<f64, SamplingError> {
    if points.is_empty() {
        return Err(SamplingError::EmptyInput);
    }
    Ok(points.iter().map(|p| p.flow.norm()).sum::<f64>() / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::NormTransform;
    use proptest::prelude::*;

    const DOMAIN: (u32, u32) = (320, 240);

    fn planted_model(seed: u64) -> QuadraticFlowModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = [[0.0; 6]; 2];
        for row in &mut coeffs {
            for c in row.iter_mut() {
                let magnitude = rng.random_range(0.5..8.0);
                *c = if rng.random_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                };
            }
        }
        QuadraticFlowModel::new(coeffs, NormTransform::for_domain(DOMAIN.0, DOMAIN.1))
    }

    /// `n` samples drawn from the model; the first `outliers` of them get a
    /// large constant flow offset.
    fn planted_samples(
        model: &QuadraticFlowModel,
        n: usize,
        outliers: usize,
        seed: u64,
    ) -> Vec<SamplePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let coord = PixelCoord::new(
                    rng.random_range(0..DOMAIN.0) as f64,
                    rng.random_range(0..DOMAIN.1) as f64,
                );
                let mut flow = model.evaluate(coord);
                if i < outliers {
                    flow += Vector2::new(40.0, 40.0);
                }
                SamplePoint { coord, flow }
            })
            .collect()
    }

    fn max_relative_coeff_error(a: &QuadraticFlowModel, b: &QuadraticFlowModel) -> f64 {
        a.coeffs
            .iter()
            .flatten()
            .zip(b.coeffs.iter().flatten())
            .map(|(x, y)| (x - y).abs() / x.abs().max(1e-12))
            .fold(0.0, f64::max)
    }

    #[test]
    fn partition_exact_tiling() {
        let pieces = grid_partition(200, 100, 100);
        assert_eq!(pieces.len(), 2);
        assert!(pieces.iter().all(|p| p.width == 100 && p.height == 100));
    }

    #[test]
    fn partition_remainder_edge() {
        let pieces = grid_partition(250, 100, 100);
        assert_eq!(pieces.len(), 3);
        assert_eq!(pieces[0].width, 100);
        assert_eq!(pieces[1].width, 100);
        assert_eq!(pieces[2].width, 50);
        assert!(pieces.iter().all(|p| p.height == 100));
    }

    #[test]
    fn partition_davis_sized_frame() {
        let pieces = grid_partition(854, 480, 100);
        assert_eq!(pieces.len(), 45); // 9 columns x 5 rows
                                      // Enumeration oracle: every pixel is covered exactly once.
        let mut covered = vec![0u8; 854 * 480];
        for p in &pieces {
            for y in p.y..p.y + p.height {
                for x in p.x..p.x + p.width {
                    covered[y as usize * 854 + x as usize] += 1;
                }
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn full_fraction_samples_every_piece() {
        let field = FlowField::zeros(854, 480);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = GridConfig {
            piece_edge: 100,
            sample_fraction: 1.0,
        };
        let samples = sample_points(&field, &cfg, &mut rng).unwrap();
        assert_eq!(samples.len(), 45);
    }

    #[test]
    fn half_fraction_rounds_half_up() {
        let field = FlowField::zeros(854, 480); // 45 pieces
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = GridConfig {
            piece_edge: 100,
            sample_fraction: 0.5,
        };
        let samples = sample_points(&field, &cfg, &mut rng).unwrap();
        assert_eq!(samples.len(), 23); // round-half-up of 22.5
    }

    #[test]
    fn tiny_fraction_is_empty_selection() {
        let field = FlowField::zeros(854, 480);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = GridConfig {
            piece_edge: 100,
            sample_fraction: 0.001,
        };
        assert_eq!(
            sample_points(&field, &cfg, &mut rng),
            Err(SamplingError::EmptySelection)
        );
    }

    #[test]
    fn samples_lie_in_distinct_pieces() {
        let field = FlowField::zeros(320, 240);
        let cfg = GridConfig {
            piece_edge: 40,
            sample_fraction: 0.7,
        };
        let pieces = grid_partition(320, 240, 40);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = sample_points(&field, &cfg, &mut rng).unwrap();
            let mut owners: Vec<usize> = samples
                .iter()
                .map(|s| {
                    pieces
                        .iter()
                        .position(|p| p.contains(s.coord.x as u32, s.coord.y as u32))
                        .unwrap()
                })
                .collect();
            owners.sort_unstable();
            owners.dedup();
            assert_eq!(
                owners.len(),
                samples.len(),
                "two samples share a piece (seed {seed})"
            );
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let field = FlowField::zeros(320, 240);
        let cfg = GridConfig {
            piece_edge: 50,
            sample_fraction: 0.5,
        };
        let a = sample_points(&field, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_points(&field, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clean_samples_recover_model_exactly() {
        let model = planted_model(100);
        let samples = planted_samples(&model, 30, 0, 101);
        let result = ransac_fit(&samples, DOMAIN, &RansacConfig::default()).unwrap();
        assert_eq!(result.inlier_ratio, 1.0);
        assert!(
            max_relative_coeff_error(&model, &result.model) <= 1e-6,
            "coefficient error {}",
            max_relative_coeff_error(&model, &result.model)
        );
    }

    #[test]
    fn thirty_percent_outliers_are_excluded() {
        let model = planted_model(200);
        let samples = planted_samples(&model, 40, 12, 201);
        let result = ransac_fit(&samples, DOMAIN, &RansacConfig::default()).unwrap();
        assert_eq!(
            result.inliers.len(),
            28,
            "inliers must be exactly the clean samples"
        );
        for inlier in &result.inliers {
            // Contaminated samples carry a +40 px offset; a clean sample never does.
            assert!(
                residual(&model, inlier) < 1.0,
                "a contaminated sample survived"
            );
        }
        assert!(max_relative_coeff_error(&model, &result.model) <= 1e-4);
    }

    #[test]
    fn five_samples_are_insufficient() {
        let model = planted_model(7);
        let samples = planted_samples(&model, 5, 0, 8);
        assert_eq!(
            ransac_fit(&samples, DOMAIN, &RansacConfig::default()),
            Err(SamplingError::InsufficientSamples {
                required: 6,
                got: 5
            })
        );
    }

    #[test]
    fn ransac_is_deterministic() {
        let model = planted_model(300);
        let samples = planted_samples(&model, 40, 10, 301);
        let cfg = RansacConfig {
            seed: 77,
            ..Default::default()
        };
        let a = ransac_fit(&samples, DOMAIN, &cfg).unwrap();
        let b = ransac_fit(&samples, DOMAIN, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reported_inliers_are_consistent_with_model() {
        let model = planted_model(400);
        for seed in 0..10 {
            let samples = planted_samples(&model, 40, 12, 400 + seed);
            let cfg = RansacConfig {
                seed,
                ..Default::default()
            };
            let result = ransac_fit(&samples, DOMAIN, &cfg).unwrap();
            for inlier in &result.inliers {
                assert!(
                    residual(&result.model, inlier) <= cfg.inlier_threshold_px,
                    "reported inlier has residual above the threshold"
                );
            }
        }
    }

    /// Statistical robustness at the 30% contamination level used by the
    /// acceptance gate: the exact planted inlier set in >= 99 of 100 runs.
    #[test]
    fn recovers_exact_inlier_set_at_thirty_percent() {
        let model = planted_model(500);
        let mut successes = 0;
        for seed in 0..100u64 {
            let samples = planted_samples(&model, 40, 12, 1_000 + seed);
            let cfg = RansacConfig {
                seed,
                ..Default::default()
            };
            let result = ransac_fit(&samples, DOMAIN, &cfg).unwrap();
            let exact = result.inliers.len() == 28
                && result.inliers.iter().all(|s| residual(&model, s) < 1.0);
            if exact {
                successes += 1;
            }
        }
        assert!(
            successes >= 99,
            "only {successes}/100 runs recovered the exact inlier set"
        );
    }

    /// At 40% contamination the chance of drawing one all-clean 6-subset in
    /// 50 rounds is ~0.83, so only a conservative floor can be asserted.
    #[test]
    fn recovers_majority_of_runs_at_forty_percent() {
        let model = planted_model(600);
        let mut successes = 0;
        for seed in 0..100u64 {
            let samples = planted_samples(&model, 40, 16, 2_000 + seed);
            let cfg = RansacConfig {
                seed,
                ..Default::default()
            };
            let result = ransac_fit(&samples, DOMAIN, &cfg).unwrap();
            let exact = result.inliers.len() == 24
                && result.inliers.iter().all(|s| residual(&model, s) < 1.0);
            if exact {
                successes += 1;
            }
        }
        assert!(
            successes >= 70,
            "only {successes}/100 runs recovered the exact inlier set"
        );
    }

    #[test]
    fn linear_ransac_recovers_affine_field() {
        let mut coeffs = [[0.0; 3]; 2];
        coeffs[0] = [4.0, -1.0, 10.0];
        coeffs[1] = [0.5, 3.0, -6.0];
        let model = LinearFlowModel::new(coeffs, NormTransform::for_domain(DOMAIN.0, DOMAIN.1));
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples: Vec<SamplePoint> = (0..30)
            .map(|i| {
                let coord = PixelCoord::new(
                    rng.random_range(0..DOMAIN.0) as f64,
                    rng.random_range(0..DOMAIN.1) as f64,
                );
                let mut flow = model.evaluate(coord);
                if i < 8 {
                    flow += Vector2::new(35.0, -35.0);
                }
                SamplePoint { coord, flow }
            })
            .collect();
        let result = ransac_fit_linear(&samples, DOMAIN, &RansacConfig::default()).unwrap();
        assert_eq!(result.inliers.len(), 22);
        for (fit_row, true_row) in result.model.coeffs.iter().zip(&model.coeffs) {
            for (a, b) in fit_row.iter().zip(true_row) {
                assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn mean_norm_of_three_four_flows() {
        let points: Vec<SamplePoint> = (0..4)
            .map(|i| SamplePoint {
                coord: PixelCoord::new(i as f64, 0.0),
                flow: Vector2::new(3.0, 4.0),
            })
            .collect();
        assert_eq!(mean_flow_norm(&points).unwrap(), 5.0);
    }

    #[test]
    fn mean_norm_of_zero_flows() {
        let points = vec![SamplePoint {
            coord: PixelCoord::new(0.0, 0.0),
            flow: Vector2::zeros(),
        }];
        assert_eq!(mean_flow_norm(&points).unwrap(), 0.0);
    }

    #[test]
    fn mean_norm_mixes_magnitudes() {
        let points = vec![
            SamplePoint {
                coord: PixelCoord::new(0.0, 0.0),
                flow: Vector2::new(3.0, 4.0),
            },
            SamplePoint {
                coord: PixelCoord::new(1.0, 0.0),
                flow: Vector2::zeros(),
            },
        ];
        assert_eq!(mean_flow_norm(&points).unwrap(), 2.5);
    }

    #[test]
    fn mean_norm_of_nothing_errors() {
        assert_eq!(mean_flow_norm(&[]), Err(SamplingError::EmptyInput));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// The partition tiles the frame exactly for arbitrary dimensions.
        #[test]
        fn partition_tiles_exactly(width in 1u32..200, height in 1u32..200, edge in 1u32..64) {
            let pieces = grid_partition(width, height, edge);
            prop_assert_eq!(
                pieces.len() as u32,
                width.div_ceil(edge) * height.div_ceil(edge)
            );
            let area: u64 = pieces.iter().map(|p| p.width as u64 * p.height as u64).sum();
            prop_assert_eq!(area, width as u64 * height as u64);
            // Row-major ordering and disjointness.
            for w in pieces.windows(2) {
                prop_assert!(w[1].y > w[0].y || (w[1].y == w[0].y && w[1].x > w[0].x));
            }
        }

        /// No two samples ever share a grid piece.
        #[test]
        fn sampling_respects_piece_constraint(
            width in 16u32..128,
            height in 16u32..128,
            edge in 8u32..48,
            fraction in 0.1f64..1.0,
            seed in 0u64..1000,
        ) {
            let field = FlowField::zeros(width, height);
            let cfg = GridConfig { piece_edge: edge, sample_fraction: fraction };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Ok(samples) = sample_points(&field, &cfg, &mut rng) {
                let pieces = grid_partition(width, height, edge);
                let mut owners: Vec<usize> = samples
                    .iter()
                    .map(|s| {
                        pieces
                            .iter()
                            .position(|p| p.contains(s.coord.x as u32, s.coord.y as u32))
                            .unwrap()
                    })
                    .collect();
                owners.sort_unstable();
                let n = owners.len();
                owners.dedup();
                prop_assert_eq!(owners.len(), n);
            }
        }
    }
}
