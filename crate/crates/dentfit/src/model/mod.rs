//! Closed-form dent model.
//!
//! A dent is described by seven parameters: the traditional length, width
//! and depth, plus an exponential base `b` controlling how fast the depth
//! grows inward, an egg-factor `p` deforming the circular boundary, and a
//! shift `(s_x, s_y)` moving the deepest point off center. The reference
//! dent lives on the open support `−f(x) < y < f(x)` inside `[−0.5, 0.5]²`
//! with unit peak depth; a general dent is the reference rescaled by
//! `(l, w, d)`.

mod field;
mod srm;

pub use field::HeightField;
pub use srm::{srm_box_measures, SrmBox};

use crate::error::ModelError;

/// Default cap on height-field cells.
pub const DEFAULT_CELL_CAP: usize = 10_000_000;

/// The seven dent parameters. Lengths in millimeters, the rest dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DentParams {
    /// Extent along the local x-axis (mm, > 0).
    pub l: f64,
    /// Extent along the local y-axis (mm, > 0).
    pub w: f64,
    /// Maximum depth (mm, > 0).
    pub d: f64,
    /// Exponential base (> 1). Values close to 1 make the depth grow
    /// fastest going inward.
    pub b: f64,
    /// Egg-factor in (0, 2); 1 gives a circular boundary.
    pub p: f64,
    /// Deepest-point shift along x, fraction of `l`, in (−0.5, 0.5).
    pub s_x: f64,
    /// Deepest-point shift along y, fraction of `w`, in (−0.5, 0.5).
    pub s_y: f64,
}

impl DentParams {
    /// Validates ranges and the requirement that the shift lies strictly
    /// inside the reference boundary.
    pub fn new(
        l: f64,
        w: f64,
        d: f64,
        b: f64,
        p: f64,
        s_x: f64,
        s_y: f64,
    ) -> Result<Self, ModelError> {
        let params = Self {
            l,
            w,
            d,
            b,
            p,
            s_x,
            s_y,
        };
        params.validate()?;
        Ok(params)
    }

    /// Symmetric dent: `b = e`, circular boundary, centered peak.
    pub fn symmetric(l: f64, w: f64, d: f64) -> Result<Self, ModelError> {
        Self::new(l, w, d, std::f64::consts::E, 1.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.l, self.w, self.d, self.b, self.p, self.s_x, self.s_y];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Domain("parameters must be finite".into()));
        }
        if self.l <= 0.0 || self.w <= 0.0 || self.d <= 0.0 {
            return Err(ModelError::Domain(format!(
                "l, w, d must be positive (got {}, {}, {})",
                self.l, self.w, self.d
            )));
        }
        if self.b <= 1.0 {
            return Err(ModelError::Domain(format!(
                "base b must exceed 1 (got {})",
                self.b
            )));
        }
        if self.p <= 0.0 || self.p >= 2.0 {
            return Err(ModelError::Domain(format!(
                "egg-factor p must lie in (0, 2) (got {})",
                self.p
            )));
        }
        if self.s_x.abs() >= 0.5 || self.s_y.abs() >= 0.5 {
            return Err(ModelError::Domain(format!(
                "shift ({}, {}) must lie in (-0.5, 0.5)",
                self.s_x, self.s_y
            )));
        }
        // The shifted branch evaluates r at the shift point, which must be
        // strictly inside the boundary. This is stronger than the box bound
        // for egg-shaped boundaries.
        if (self.s_x, self.s_y) != (0.0, 0.0) {
            let f = boundary_half_width(self.s_x, self.p)?;
            if self.s_y.abs() >= f {
                return Err(ModelError::Domain(format!(
                    "shift ({}, {}) lies outside the boundary for p = {}",
                    self.s_x, self.s_y, self.p
                )));
            }
        }
        Ok(())
    }
}

/// A point in reference coordinates, `x` in `[-0.5, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub x: f64,
    pub y: f64,
}

impl RefPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

fn check_p(p: f64) -> Result<(), ModelError> {
    if !(p > 0.0 && p < 2.0) {
        return Err(ModelError::Domain(format!(
            "egg-factor p must lie in (0, 2) (got {p})"
        )));
    }
    Ok(())
}

/// Half-width of the egg-shaped boundary at abscissa `x`.
///
/// `f(x) = sqrt(0.25 − ((x + 0.5)^p − 0.5)²)`, zero at `x = ±0.5` and
/// reaching 0.5 where `(x + 0.5)^p = 0.5`. For `p = 1` this is a circle.
pub fn boundary_half_width(x: f64, p: f64) -> Result<f64, ModelError> {
    check_p(p)?;
    if !(-0.5..=0.5).contains(&x) {
        return Err(ModelError::Domain(format!(
            "abscissa {x} outside [-0.5, 0.5]"
        )));
    }
    Ok(half_width_unchecked(x, p))
}

#[inline]
fn half_width_unchecked(x: f64, p: f64) -> f64 {
    let g = (x + 0.5).powf(p) - 0.5;
    // rounding can push the argument a hair below zero at the endpoints
    (0.25 - g * g).max(0.0).sqrt()
}

/// Ratio of a point's distance from the origin to the boundary's distance
/// along the same vertical slice: `r = sqrt(x² + y²) / sqrt(x² + f²(x))`.
///
/// 0 at the origin, 1 on the boundary, > 1 outside. The denominator never
/// vanishes on `[-0.5, 0.5]` since `f > 0` wherever `x = 0`.
pub fn radial_ratio(pt: RefPoint, p: f64) -> Result<f64, ModelError> {
    check_p(p)?;
    if !(-0.5..=0.5).contains(&pt.x) {
        return Err(ModelError::Domain(format!(
            "abscissa {} outside [-0.5, 0.5]",
            pt.x
        )));
    }
    Ok(radial_ratio_unchecked(pt.x, pt.y, p))
}

/// Squared slice denominator `x² + f²(x)`; constant 0.25 on the circle.
#[inline]
fn slice_denominator_sq(x: f64, p: f64, circle: bool) -> f64 {
    if circle {
        0.25
    } else {
        let g = (x + 0.5).powf(p) - 0.5;
        x * x + (0.25 - g * g).max(0.0)
    }
}

#[inline]
fn radial_ratio_unchecked(x: f64, y: f64, p: f64) -> f64 {
    let f = half_width_unchecked(x, p);
    ((x * x + y * y) / (x * x + f * f)).sqrt()
}

/// Analytic partial derivatives `(∂r/∂x, ∂r/∂y)` of [`radial_ratio`].
///
/// With `n = sqrt(x² + y²)`, `m = sqrt(x² + f²(x))` and
/// `g(x) = (x + 0.5)^p − 0.5`:
///
/// ```text
/// ∂r/∂x = x / (n·m) − n·(x − g·g') / m³        g' = p·(x + 0.5)^(p−1)
/// ∂r/∂y = y / (n·m)
/// ```
///
/// The identity `f·f' = −g·g'` keeps the expression finite at the
/// endpoints where `f` itself vanishes. Undefined at the origin.
pub fn radial_ratio_gradient(pt: RefPoint, p: f64) -> Result<(f64, f64), ModelError> {
    check_p(p)?;
    if !(-0.5..=0.5).contains(&pt.x) {
        return Err(ModelError::Domain(format!(
            "abscissa {} outside [-0.5, 0.5]",
            pt.x
        )));
    }
    if pt.x == 0.0 && pt.y == 0.0 {
        return Err(ModelError::SingularGradient);
    }
    Ok(radial_gradient_unchecked(pt.x, pt.y, p))
}

#[inline]
fn radial_gradient_unchecked(x: f64, y: f64, p: f64) -> (f64, f64) {
    let f = half_width_unchecked(x, p);
    let n = (x * x + y * y).sqrt();
    let m = (x * x + f * f).sqrt();
    let g = (x + 0.5).powf(p) - 0.5;
    let gp = p * (x + 0.5).powf(p - 1.0);
    let dm_num = x - g * gp;
    let dr_dx = x / (n * m) - n * dm_num / (m * m * m);
    let dr_dy = y / (n * m);
    (dr_dx, dr_dy)
}

/// Reference dent evaluated at one point, prepared once per parameter set.
///
/// Precomputes the shifted-branch coefficients so that per-point cost stays
/// low inside sampling and fitting loops.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceDent {
    b_ln: f64,
    p: f64,
    s_x: f64,
    s_y: f64,
    /// 1 / (1 − r²(s)); also the constant term of the shifted exponent.
    inv_vs: f64,
    /// Linear correction coefficients 2·r(s)·∇r(s) / (1 − r²(s))².
    kx: f64,
    ky: f64,
    shifted: bool,
    /// `p == 1`: the slice denominator x² + f²(x) collapses to 0.25.
    circle: bool,
}

impl ReferenceDent {
    pub fn new(b: f64, p: f64, s_x: f64, s_y: f64) -> Result<Self, ModelError> {
        check_p(p)?;
        if !b.is_finite() || b <= 1.0 {
            return Err(ModelError::Domain(format!(
                "base b must exceed 1 (got {b})"
            )));
        }
        let circle = p == 1.0;
        let shifted = (s_x, s_y) != (0.0, 0.0);
        let (inv_vs, kx, ky) = if shifted {
            if s_x.abs() >= 0.5 || s_y.abs() >= 0.5 {
                return Err(ModelError::Domain(format!(
                    "shift ({s_x}, {s_y}) outside (-0.5, 0.5)"
                )));
            }
            // evaluate 1/(1 − r²(s)) through the exact same expression the
            // hot path uses, so the shifted exponent cancels to 0 at the
            // shift point bit-for-bit
            let qs = s_x * s_x + s_y * s_y;
            let m2s = slice_denominator_sq(s_x, p, circle);
            if qs >= m2s {
                return Err(ModelError::Domain(format!(
                    "shift ({s_x}, {s_y}) lies outside the boundary for p = {p}"
                )));
            }
            let inv_vs = m2s / (m2s - qs);
            let rs = (qs / m2s).sqrt();
            let (gx, gy) = radial_gradient_unchecked(s_x, s_y, p);
            (
                inv_vs,
                2.0 * rs * gx * inv_vs * inv_vs,
                2.0 * rs * gy * inv_vs * inv_vs,
            )
        } else {
            (1.0, 0.0, 0.0)
        };
        Ok(Self {
            b_ln: b.ln(),
            p,
            s_x,
            s_y,
            inv_vs,
            kx,
            ky,
            shifted,
            circle,
        })
    }

    pub fn for_params(params: &DentParams) -> Result<Self, ModelError> {
        Self::new(params.b, params.p, params.s_x, params.s_y)
    }

    /// Depth fraction in `(0, 1]` inside the support, `None` outside.
    ///
    /// The exponent is computed first; once it falls below the underflow
    /// threshold the result is an exact 0 rather than subnormal noise.
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> Option<f64> {
        if x.abs() >= 0.5 || y.abs() >= 0.5 {
            return None;
        }
        // work with r² = (x² + y²) / (x² + f²(x)); no square roots needed
        let q = x * x + y * y;
        let m2 = slice_denominator_sq(x, self.p, self.circle);
        if q >= m2 {
            return None;
        }
        let u = m2 / (m2 - q);
        let exponent = if self.shifted {
            -u + (x - self.s_x) * self.kx + (y - self.s_y) * self.ky + self.inv_vs
        } else {
            1.0 - u
        };
        let log_value = exponent * self.b_ln;
        if log_value <= f64::MIN_POSITIVE.ln() {
            return Some(0.0);
        }
        Some(log_value.exp())
    }
}

/// Reference dent per Eq. (1)'s two branches: `b^(1 − 1/(1−r²))` when the
/// shift is zero, the first-order-corrected exponent otherwise. Returns
/// `None` outside the open support.
pub fn ref_dent(
    pt: RefPoint,
    b: f64,
    p: f64,
    s_x: f64,
    s_y: f64,
) -> Result<Option<f64>, ModelError> {
    Ok(ReferenceDent::new(b, p, s_x, s_y)?.eval(pt.x, pt.y))
}

/// General dent depth at `(x, y)` in millimeters: `d · refDent(x/l, y/w)`.
/// Positive magnitude; `None` outside the scaled support.
pub fn dent_depth(x: f64, y: f64, params: &DentParams) -> Result<Option<f64>, ModelError> {
    params.validate()?;
    let reference = ReferenceDent::for_params(params)?;
    Ok(reference
        .eval(x / params.l, y / params.w)
        .map(|v| params.d * v))
}

/// Location and magnitude of the deepest point: `(s_x·l, s_y·w, d)`.
pub fn max_depth_point(params: &DentParams) -> Result<(f64, f64, f64), ModelError> {
    params.validate()?;
    Ok((params.s_x * params.l, params.s_y * params.w, params.d))
}

pub use field::sample_height_field;
