//! Dense flow fields and the polynomial background-flow models fitted to them.
//!
//! A [`FlowField`] is the raw per-pixel displacement field between two frames;
//! it mixes camera-induced (background) motion with object (foreground) motion.
//! The background component is modeled as a polynomial in the pixel coordinates:
//! quadratic ([`QuadraticFlowModel`]) in the main pipeline, affine
//! ([`LinearFlowModel`]) for the ablation arm.
//!
//! Models are fitted and evaluated in a normalized coordinate frame (pixel
//! coordinates affinely mapped to `[-1, 1]^2`). Raw pixel coordinates up to
//! several hundred produce monomials up to ~7e5 and badly conditioned normal
//! equations; the [`NormTransform`] is stored inside each model so callers
//! never deal with anything but pixel coordinates.

use nalgebra::Vector2;

/// Dense per-pixel 2D displacement field, stored as two row-major planes.
///
/// Values are finite by construction: the constructor rejects NaN/Inf so
/// nothing downstream has to re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: u32,
    height: u32,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    /// Builds a field from two row-major planes of `width * height` values.
    ///
    /// Panics if the dimensions are zero, the plane lengths disagree with the
    /// dimensions, or any value is non-finite. File readers validate their
    /// payloads and report typed errors before calling this.
    pub fn new(width: u32, height: u32, u: Vec<f64>, v: Vec<f64>) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "flow field dimensions must be positive"
        );
        let len = width as usize * height as usize;
        assert_eq!(u.len(), len, "u plane length does not match dimensions");
        assert_eq!(v.len(), len, "v plane length does not match dimensions");
        assert!(
            u.iter().chain(v.iter()).all(|c| c.is_finite()),
            "flow fields must not contain NaN or infinite values"
        );
        Self {
            width,
            height,
            u,
            v,
        }
    }

    /// All-zero field of the given dimensions.
    pub fn zeros(width: u32, height: u32) -> Self {
        let len = width as usize * height as usize;
        Self::new(width, height, vec![0.0; len], vec![0.0; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of pixels.
    pub fn pixel_count(&self) -> usize {
        self.u.len()
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    /// Flow vector at an integer pixel location.
    #[inline]
    pub fn flow_at(&self, x: u32, y: u32) -> Vector2<f64> {
        let i = self.index(x, y);
        Vector2::new(self.u[i], self.v[i])
    }

    pub fn u_plane(&self) -> &[f64] {
        &self.u
    }

    pub fn v_plane(&self) -> &[f64] {
        &self.v
    }

    /// Pixel-wise sum of two fields of identical dimensions.
    ///
    /// Used to approximate an interval-k field by accumulating k interval-1
    /// fields when no directly estimated long-interval flow is available.
    pub fn accumulate(&self, other: &FlowField) -> FlowField {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "cannot accumulate fields of different dimensions"
        );
        let u = self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect();
        let v = self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect();
        FlowField::new(self.width, self.height, u, v)
    }
}

/// A (possibly sub-pixel) image-plane position. `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub x: f64,
    pub y: f64,
}

impl PixelCoord {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Coordinate of an integer pixel.
    pub fn of_pixel(x: u32, y: u32) -> Self {
        Self {
            x: x as f64,
            y: y as f64,
        }
    }
}

/// The six quadratic basis terms of a coordinate, in the fixed order
/// `[x^2, y^2, x*y, x, y, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialVector(pub [f64; 6]);

/// Expands a coordinate into its quadratic monomial basis.
pub fn monomial_vector(p: PixelCoord) -> MonomialVector {
    MonomialVector([p.x * p.x, p.y * p.y, p.x * p.y, p.x, p.y, 1.0])
}

/// Affine map from pixel coordinates to the normalized fitting domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormTransform {
    sx: f64,
    sy: f64,
    ox: f64,
    oy: f64,
}

impl NormTransform {
    /// Maps `[0, width-1] x [0, height-1]` onto `[-1, 1]^2`.
    ///
    /// A degenerate axis (extent 1) maps to 0; models on such domains cannot
    /// determine the coefficients that vary along that axis and the fit
    /// reports a singular design instead.
    pub fn for_domain(width: u32, height: u32) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "domain dimensions must be positive"
        );
        let (sx, ox) = if width > 1 {
            (2.0 / (width as f64 - 1.0), -1.0)
        } else {
            (1.0, 0.0)
        };
        let (sy, oy) = if height > 1 {
            (2.0 / (height as f64 - 1.0), -1.0)
        } else {
            (1.0, 0.0)
        };
        Self { sx, sy, ox, oy }
    }

    /// Leaves coordinates untouched. Only sensible on small domains.
    pub fn identity() -> Self {
        Self {
            sx: 1.0,
            sy: 1.0,
            ox: 0.0,
            oy: 0.0,
        }
    }

    #[inline]
    pub fn apply(&self, p: PixelCoord) -> PixelCoord {
        PixelCoord::new(p.x * self.sx + self.ox, p.y * self.sy + self.oy)
    }
}

/// Quadratic background-flow model: a 2x6 coefficient matrix over the
/// monomial basis of the normalized coordinate. Row 0 produces the u
/// component, row 1 the v component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFlowModel {
    /// Coefficients in the order `[x^2, y^2, x*y, x, y, 1]`, normalized basis.
    pub coeffs: [[f64; 6]; 2],
    pub norm: NormTransform,
}

impl QuadraticFlowModel {
    pub fn new(coeffs: [[f64; 6]; 2], norm: NormTransform) -> Self {
        assert!(
            coeffs.iter().flatten().all(|c| c.is_finite()),
            "model coefficients must be finite"
        );
        Self { coeffs, norm }
    }

    pub fn zero(norm: NormTransform) -> Self {
        Self {
            coeffs: [[0.0; 6]; 2],
            norm,
        }
    }
}

/// Linear (affine) background-flow model over `[x, y, 1]`, the ablation
/// counterpart of [`QuadraticFlowModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFlowModel {
    /// Coefficients in the order `[x, y, 1]`, normalized basis.
    pub coeffs: [[f64; 3]; 2],
    pub norm: NormTransform,
}

impl LinearFlowModel {
    pub fn new(coeffs: [[f64; 3]; 2], norm: NormTransform) -> Self {
        assert!(
            coeffs.iter().flatten().all(|c| c.is_finite()),
            "model coefficients must be finite"
        );
        Self { coeffs, norm }
    }

    pub fn zero(norm: NormTransform) -> Self {
        Self {
            coeffs: [[0.0; 3]; 2],
            norm,
        }
    }
}

/// Anything that predicts a background flow vector at a pixel coordinate.
pub trait FlowModel {
    fn evaluate(&self, p: PixelCoord) -> Vector2<f64>;
}

impl FlowModel for QuadraticFlowModel {
    #[inline]
    fn evaluate(&self, p: PixelCoord) -> Vector2<f64> {
        let n = self.norm.apply(p);
        let m = monomial_vector(n).0;
        let dot = |row: &[f64; 6]| {
            row[0] * m[0] + row[1] * m[1] + row[2] * m[2] + row[3] * m[3] + row[4] * m[4] + row[5]
        };
        Vector2::new(dot(&self.coeffs[0]), dot(&self.coeffs[1]))
    }
}

impl FlowModel for LinearFlowModel {
    #[inline]
    fn evaluate(&self, p: PixelCoord) -> Vector2<f64> {
        let n = self.norm.apply(p);
        let dot = |row: &[f64; 3]| row[0] * n.x + row[1] * n.y + row[2];
        Vector2::new(dot(&self.coeffs[0]), dot(&self.coeffs[1]))
    }
}

/// Either model kind, as carried through the frame pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackgroundModel {
    Quadratic(QuadraticFlowModel),
    Linear(LinearFlowModel),
}

impl FlowModel for BackgroundModel {
    #[inline]
    fn evaluate(&self, p: PixelCoord) -> Vector2<f64> {
        match self {
            BackgroundModel::Quadratic(m) => m.evaluate(p),
            BackgroundModel::Linear(m) => m.evaluate(p),
        }
    }
}
