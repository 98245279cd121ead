//! Least-squares fitting of background-flow models to sample points.
//!
//! Fits run on the normalized design matrix through one SVD shared by the u
//! and v solves (same design, two right-hand sides). The normal-equations
//! route is avoided on purpose: quadratic monomials of raw pixel coordinates
//! square the condition number, and the sample counts here (tens to a few
//! hundred points) make the orthogonal factorization essentially free.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::flow::{monomial_vector, FlowModel, LinearFlowModel, NormTransform, QuadraticFlowModel};
use crate::sampling::SamplePoint;

/// A quadratic flow model has 6 unknowns per component and every sample
/// constrains both components through the same monomial row, so 6 points
/// determine it exactly.
pub const MIN_QUADRATIC_SAMPLES: usize = 6;

/// Determined-system minimum for the affine model.
pub const MIN_LINEAR_SAMPLES: usize = 3;

/// Singular values below this fraction of the largest one mean the sample
/// geometry does not determine the model (e.g. collinear points).
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FitError {
    /// The design matrix is rank-deficient beyond tolerance: the sample
    /// geometry is degenerate for the requested model.
    #[error("singular design matrix: sample geometry does not determine the model")]
    SingularDesign,
    /// Fewer samples than unknowns.
    #[error("need at least {required} samples to fit, got {got}")]
    TooFewSamples { required: usize, got: usize },
}

/// Fits the quadratic model minimizing the summed squared flow residuals over
/// the samples. `domain` is the frame size the samples came from; it fixes
/// the coordinate normalization stored in the returned model.
pub fn fit_quadratic(
    samples: &[SamplePoint],
    domain: (u32, u32),
) -> Result<QuadraticFlowModel, FitError> {
    fit_quadratic_with_transform(samples, NormTransform::for_domain(domain.0, domain.1))
}

fn fit_quadratic_with_transform(
    samples: &[SamplePoint],
    norm: NormTransform,
) -> Result<QuadraticFlowModel, FitError> {
    if samples.len() < MIN_QUADRATIC_SAMPLES {
        return Err(FitError::TooFewSamples {
            required: MIN_QUADRATIC_SAMPLES,
            got: samples.len(),
        });
    }
    let design = DMatrix::from_fn(samples.len(), 6, |r, c| {
        monomial_vector(norm.apply(samples[r].coord)).0[c]
    });
    let solution = solve_least_squares(design, samples)?;
    let mut coeffs = [[0.0; 6]; 2];
    for (component, row) in coeffs.iter_mut().enumerate() {
        for (term, value) in row.iter_mut().enumerate() {
            *value = solution[(term, component)];
        }
    }
    Ok(QuadraticFlowModel::new(coeffs, norm))
}

/// Affine counterpart of [`fit_quadratic`], for the linear ablation arm.
pub fn fit_linear(
    samples: &[SamplePoint],
    domain: (u32, u32),
) -> Result<LinearFlowModel, FitError> {
    if samples.len() < MIN_LINEAR_SAMPLES {
        return Err(FitError::TooFewSamples {
            required: MIN_LINEAR_SAMPLES,
            got: samples.len(),
        });
    }
    let norm = NormTransform::for_domain(domain.0, domain.1);
    let design = DMatrix::from_fn(samples.len(), 3, |r, c| {
        let n = norm.apply(samples[r].coord);
        [n.x, n.y, 1.0][c]
    });
    let solution = solve_least_squares(design, samples)?;
    let mut coeffs = [[0.0; 3]; 2];
    for (component, row) in coeffs.iter_mut().enumerate() {
        for (term, value) in row.iter_mut().enumerate() {
            *value = solution[(term, component)];
        }
    }
    Ok(LinearFlowModel::new(coeffs, norm))
}

/// One SVD, two right-hand sides (u and v values of the samples).
fn solve_least_squares(
    design: DMatrix<f64>,
    samples: &[SamplePoint],
) -> Result<DMatrix<f64>, FitError> {
    let unknowns = design.ncols();
    let rhs = DMatrix::from_fn(samples.len(), 2, |r, c| samples[r].flow[c]);
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    if max_sv == 0.0 || svd.singular_values.min() < RANK_TOLERANCE * max_sv {
        return Err(FitError::SingularDesign);
    }
    let solution = svd.solve(&rhs, 0.0).map_err(|_| FitError::SingularDesign)?;
    debug_assert_eq!(solution.nrows(), unknowns);
    Ok(solution)
}

/// Euclidean distance between a sample's observed flow and the model's
/// prediction at the sample's coordinate, in pixels.
#[inline]
pub fn residual<M: FlowModel>(model: &M, sample: &SamplePoint) -> f64 {
    (model.evaluate(sample.coord) - sample.flow).norm()
}

/// Summed squared residual over a sample set; the quantity the fits minimize.
pub fn sum_squared_residuals<M: FlowModel>(model: &M, samples: &[SamplePoint]) -> f64 {
    samples.iter().map(|s| residual(model, s).powi(2)).sum()
}
