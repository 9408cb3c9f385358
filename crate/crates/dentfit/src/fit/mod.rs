//! Bounded nonlinear least-squares fitting of the dent model.
//!
//! The ten free quantities in full mode are the in-plane pose (center,
//! rotation) and the seven model parameters; the simplified mode freezes
//! the base at `e`, the boundary circular and the peak centered, leaving
//! the traditional length/width/depth plus pose. Bounds are enforced by
//! smooth reparameterization (logs for sizes and `b − 1`, scaled logistics
//! for `p` and the shift), and the search is a restarted derivative-free
//! simplex: the support boundary makes residuals non-differentiable in the
//! pose and size parameters, so gradient methods are a poor match.

mod simplex;

pub use simplex::{SimplexOptions, SimplexResult};

use std::f64::consts::E;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::cloud::{canonical_point_order, DentSegment, LocalPoint};
use crate::error::FitError;
use crate::model::{sample_height_field, srm_box_measures, DentParams, ReferenceDent, SrmBox};

/// In-plane placement of a dent: center plus rotation of its x-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub c_x: f64,
    pub c_y: f64,
    /// Rotation in radians, canonicalized into `(-π/2, π/2]`.
    pub theta: f64,
}

impl Pose {
    pub fn new(c_x: f64, c_y: f64, theta: f64) -> Self {
        Self { c_x, c_y, theta }
    }
}

/// Reduces an angle into `(-π/2, π/2]` modulo π.
///
/// Note that reducing by an odd multiple of π flips the dent's axes; it
/// leaves the surface unchanged only together with a shift negation, and
/// for a non-circular boundary not even then. Fit reports handle this
/// explicitly; see [`fit`].
pub fn canonical_theta(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut t = theta % pi;
    if t > pi / 2.0 {
        t -= pi;
    } else if t <= -pi / 2.0 {
        t += pi;
    }
    t
}

/// Reduces an angle into `(-π, π]` modulo 2π; surface-preserving always.
fn wrap_half_turn(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta % two_pi;
    if t > std::f64::consts::PI {
        t -= two_pi;
    } else if t <= -std::f64::consts::PI {
        t += two_pi;
    }
    t
}

/// Egg-factor whose widest section mirrors that of `p`; the boundary
/// family is not closed under mirroring, so this is the seed for a
/// re-polish rather than an exact substitute.
fn mirror_egg_factor(p: f64) -> f64 {
    let x_star = 0.5f64.powf(1.0 / p);
    (0.5f64.ln() / (1.0 - x_star).ln()).clamp(1e-3, 2.0 - 1e-3)
}

fn theta_out_of_range(theta: f64) -> bool {
    theta.abs() > std::f64::consts::FRAC_PI_2 || theta == -std::f64::consts::FRAC_PI_2
}

/// Negates the shift, shrinking it toward zero if the raw flip falls
/// outside an asymmetric boundary.
fn valid_flip(params: &DentParams) -> DentParams {
    let mut flipped = DentParams {
        s_x: -params.s_x,
        s_y: -params.s_y,
        ..*params
    };
    let mut scale = 1.0;
    for _ in 0..60 {
        if flipped.validate().is_ok() {
            return flipped;
        }
        scale *= 0.9;
        flipped.s_x = -params.s_x * scale;
        flipped.s_y = -params.s_y * scale;
    }
    DentParams {
        s_x: 0.0,
        s_y: 0.0,
        ..*params
    }
}

/// Which parameters the optimizer may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// All seven parameters plus pose.
    Full7,
    /// `b = e`, `p = 1`, `s = 0` frozen; length, width, depth plus pose.
    Simplified3,
}

/// Optimizer configuration.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub mode: FitMode,
    /// Number of perturbed restarts (the plain initial guess counts as one).
    pub multistart: usize,
    /// Objective-evaluation budget per start.
    pub max_evals: usize,
    /// Per-point convergence tolerance on the simplex objective spread (mm²).
    pub tol: f64,
    /// Width of the flat anchor ring appended around a segment (mm).
    pub ring_width: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mode: FitMode::Full7,
            multistart: 8,
            max_evals: 20_000,
            tol: 1e-10,
            ring_width: 4.0,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.multistart == 0 || self.max_evals == 0 {
            return Err(FitError::InvalidConfig(
                "multistart and max_evals must be positive".into(),
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(FitError::InvalidConfig("tolerance must be positive".into()));
        }
        if self.ring_width < 0.0 {
            return Err(FitError::InvalidConfig(
                "ring width must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Residual summary of a fit.
#[derive(Debug, Clone)]
pub struct ResidualStats {
    pub mae: f64,
    pub rmse: f64,
    pub max_residual: f64,
    pub residuals: Vec<f64>,
}

/// Outcome of fitting one segment.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: DentParams,
    pub pose: Pose,
    pub mae: f64,
    pub rmse: f64,
    pub max_residual: f64,
    pub n_points: usize,
    pub converged: bool,
    /// Total objective evaluations across all starts.
    pub evaluations: usize,
    pub starts: usize,
    /// Fitted base beyond 50: the (b, p) pair is weakly identified on the
    /// data, so b is reported but should not be over-interpreted.
    pub weakly_identified: bool,
    /// Carried over from the segment; overlapping dents are not split.
    pub multimodal: bool,
    /// Box measures of the fitted model surface.
    pub srm: SrmBox,
}

/// Threshold above which a fitted base is flagged as weakly identified.
pub const WEAK_BASE_THRESHOLD: f64 = 50.0;

// ── Residual evaluation ─────────────────────────────────────────────────────

/// Model surface prepared for repeated evaluation at one parameter vector.
struct Trial {
    c_x: f64,
    c_y: f64,
    cos_t: f64,
    sin_t: f64,
    inv_l: f64,
    inv_w: f64,
    d: f64,
    reference: ReferenceDent,
}

impl Trial {
    fn new(params: &DentParams, pose: &Pose) -> Result<Self, FitError> {
        let reference = ReferenceDent::for_params(params)?;
        let (sin_t, cos_t) = pose.theta.sin_cos();
        Ok(Self {
            c_x: pose.c_x,
            c_y: pose.c_y,
            cos_t,
            sin_t,
            inv_l: 1.0 / params.l,
            inv_w: 1.0 / params.w,
            d: params.d,
            reference,
        })
    }

    /// Model height at a local-frame point; zero outside the support, since
    /// an undefined value cannot enter a least-squares sum.
    #[inline]
    fn model_height(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.c_x;
        let dy = y - self.c_y;
        let xr = (dx * self.cos_t + dy * self.sin_t) * self.inv_l;
        let yr = (-dx * self.sin_t + dy * self.cos_t) * self.inv_w;
        match self.reference.eval(xr, yr) {
            Some(v) => -self.d * v,
            None => 0.0,
        }
    }

    #[inline]
    fn sum_squared_residuals(&self, points: &[LocalPoint]) -> f64 {
        let mut sum = 0.0;
        for p in points {
            let r = p.h - self.model_height(p.x, p.y);
            sum += r * r;
        }
        sum
    }
}

/// Sum of squared residuals of the model against a segment (mm²).
pub fn objective(segment: &DentSegment, params: &DentParams, pose: &Pose) -> Result<f64, FitError> {
    params.validate()?;
    let trial = Trial::new(params, pose)?;
    Ok(trial.sum_squared_residuals(&segment.points))
}

/// Per-point residuals and their summary statistics.
pub fn residual_stats(
    segment: &DentSegment,
    params: &DentParams,
    pose: &Pose,
) -> Result<ResidualStats, FitError> {
    if segment.is_empty() {
        return Err(FitError::EmptySegment);
    }
    params.validate()?;
    let trial = Trial::new(params, pose)?;
    let residuals: Vec<f64> = segment
        .points
        .iter()
        .map(|p| p.h - trial.model_height(p.x, p.y))
        .collect();
    let n = residuals.len() as f64;
    let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / n;
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let max_residual = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    Ok(ResidualStats {
        mae,
        rmse,
        max_residual,
        residuals,
    })
}

// ── Anchor ring ─────────────────────────────────────────────────────────────

/// Appends flat points from the surrounding cloud within `width` of the
/// segment's bounding box. The extra near-zero heights penalize inflating
/// the fitted footprint past the true boundary; without them the optimizer
/// can trade boundary position against interior fit.
pub fn anchor_ring(segment: &DentSegment, context: &[LocalPoint], width: f64) -> DentSegment {
    if width <= 0.0 {
        return segment.clone();
    }
    let b = segment.bounds;
    let inside_expanded = |p: &LocalPoint| {
        p.x >= b.min_x - width
            && p.x <= b.max_x + width
            && p.y >= b.min_y - width
            && p.y <= b.max_y + width
    };
    let inside_original =
        |p: &LocalPoint| p.x >= b.min_x && p.x <= b.max_x && p.y >= b.min_y && p.y <= b.max_y;
    let mut augmented = segment.clone();
    for p in context {
        if p.h.abs() <= segment.depth_threshold && inside_expanded(p) && !inside_original(p) {
            augmented.points.push(*p);
        }
    }
    augmented.points.sort_by(canonical_point_order);
    augmented
}

// ── Initial guess ───────────────────────────────────────────────────────────

/// Depth fraction that defines the measurable footprint of the guess.
const EXTENT_DEPTH_CUT: f64 = 0.05;
/// Reference dent with `b = e` falls to the cut fraction at this radial
/// ratio; measured extents are scaled back up by its inverse.
const EXTENT_CUT_RATIO: f64 = 0.866_025_403_784_438_6; // sqrt(3)/2

/// First estimate of parameters and pose from segment geometry alone:
/// depth-weighted centroid and principal axis, footprint extents, and the
/// deepest point mapped into reference coordinates.
pub fn initial_guess(segment: &DentSegment) -> Result<(DentParams, Pose), FitError> {
    if segment.is_empty() {
        return Err(FitError::EmptySegment);
    }
    let depth = -segment.min_height();
    if depth.is_nan() || depth <= 0.0 {
        return Err(FitError::DegenerateSegment);
    }

    let mut weight_sum = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in &segment.points {
        let w = p.h.abs();
        weight_sum += w;
        cx += w * p.x;
        cy += w * p.y;
    }
    if weight_sum.is_nan() || weight_sum <= 0.0 {
        return Err(FitError::DegenerateSegment);
    }
    cx /= weight_sum;
    cy /= weight_sum;

    let (mut mxx, mut mxy, mut myy) = (0.0, 0.0, 0.0);
    for p in &segment.points {
        let w = p.h.abs();
        let dx = p.x - cx;
        let dy = p.y - cy;
        mxx += w * dx * dx;
        mxy += w * dx * dy;
        myy += w * dy * dy;
    }
    let theta = canonical_theta(0.5 * (2.0 * mxy).atan2(mxx - myy));
    let (sin_t, cos_t) = theta.sin_cos();

    let cut = EXTENT_DEPTH_CUT * depth;
    let deep: Vec<&LocalPoint> = segment.points.iter().filter(|p| p.h <= -cut).collect();
    let extents = |points: &[&LocalPoint]| -> (f64, f64) {
        let (mut lo_a, mut hi_a) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_b, mut hi_b) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            let a = (p.x - cx) * cos_t + (p.y - cy) * sin_t;
            let b = -(p.x - cx) * sin_t + (p.y - cy) * cos_t;
            lo_a = lo_a.min(a);
            hi_a = hi_a.max(a);
            lo_b = lo_b.min(b);
            hi_b = hi_b.max(b);
        }
        (hi_a - lo_a, hi_b - lo_b)
    };

    let (l, w) = if deep.len() >= 8 {
        let (el, ew) = extents(&deep);
        if el > 0.0 && ew > 0.0 {
            (el / EXTENT_CUT_RATIO, ew / EXTENT_CUT_RATIO)
        } else {
            let all: Vec<&LocalPoint> = segment.points.iter().collect();
            extents(&all)
        }
    } else {
        let all: Vec<&LocalPoint> = segment.points.iter().collect();
        extents(&all)
    };
    let l = l.max(1e-3);
    let w = w.max(1e-3);

    let deepest = segment
        .points
        .iter()
        .min_by(|a, b| a.h.total_cmp(&b.h))
        .expect("segment checked non-empty");
    let ax = (deepest.x - cx) * cos_t + (deepest.y - cy) * sin_t;
    let ay = -(deepest.x - cx) * sin_t + (deepest.y - cy) * cos_t;
    let s_x = (ax / l).clamp(-0.3, 0.3);
    let s_y = (ay / w).clamp(-0.3, 0.3);

    let params = DentParams::new(l, w, depth, E, 1.0, s_x, s_y)?;
    Ok((params, Pose::new(cx, cy, theta)))
}

// ── Bounded reparameterization ──────────────────────────────────────────────

/// Shift bound inside the optimizer, slightly tighter than the model's
/// (−0.5, 0.5) so r(s) stays safely below 1 for every boundary shape.
const SHIFT_BOUND: f64 = 0.45;

fn logistic(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

fn logit(t: f64) -> f64 {
    (t / (1.0 - t)).ln()
}

fn encode(params: &DentParams, pose: &Pose, mode: FitMode) -> Vec<f64> {
    let mut x = vec![
        pose.c_x,
        pose.c_y,
        pose.theta,
        params.l.ln(),
        params.w.ln(),
        params.d.ln(),
    ];
    if mode == FitMode::Full7 {
        let b = params.b.clamp(1.0 + 1e-9, f64::MAX);
        let p = params.p.clamp(1e-6, 2.0 - 1e-6);
        let sx = params.s_x.clamp(-SHIFT_BOUND + 1e-9, SHIFT_BOUND - 1e-9);
        let sy = params.s_y.clamp(-SHIFT_BOUND + 1e-9, SHIFT_BOUND - 1e-9);
        x.push((b - 1.0).ln());
        x.push(logit(p / 2.0));
        x.push(logit((sx + SHIFT_BOUND) / (2.0 * SHIFT_BOUND)));
        x.push(logit((sy + SHIFT_BOUND) / (2.0 * SHIFT_BOUND)));
    }
    x
}

fn decode(x: &[f64], mode: FitMode) -> Option<(DentParams, Pose)> {
    let pose = Pose {
        c_x: x[0],
        c_y: x[1],
        theta: x[2],
    };
    let l = x[3].exp();
    let w = x[4].exp();
    let d = x[5].exp();
    let (b, p, s_x, s_y) = match mode {
        FitMode::Simplified3 => (E, 1.0, 0.0, 0.0),
        FitMode::Full7 => {
            let b = 1.0 + x[6].exp();
            let p = 2.0 * logistic(x[7]);
            let s_x = 2.0 * SHIFT_BOUND * logistic(x[8]) - SHIFT_BOUND;
            let s_y = 2.0 * SHIFT_BOUND * logistic(x[9]) - SHIFT_BOUND;
            (b, p, s_x, s_y)
        }
    };
    let params = DentParams::new(l, w, d, b, p, s_x, s_y).ok()?;
    Some((params, pose))
}

fn initial_steps(mode: FitMode, scale: f64) -> Vec<f64> {
    let mut steps = vec![0.03 * scale, 0.03 * scale, 0.05, 0.08, 0.08, 0.08];
    if mode == FitMode::Full7 {
        steps.extend_from_slice(&[0.2, 0.15, 0.15, 0.15]);
    }
    steps
}

// ── Multistart driver ───────────────────────────────────────────────────────

const BASE_CYCLE: [f64; 3] = [2.0, E, 6.0];
const EGG_CYCLE: [f64; 3] = [0.8, 1.0, 1.2];
/// Orientation offsets explored by the restarts; the principal-axis guess
/// is unreliable for near-equal extents and says nothing about which way
/// an egg-shaped boundary points.
const THETA_CYCLE_DEG: [f64; 4] = [0.0, 90.0, 45.0, -45.0];

fn perturbed_start(
    base_params: &DentParams,
    base_pose: &Pose,
    mode: FitMode,
    seed: u64,
    index: usize,
) -> (DentParams, Pose) {
    let mut rng = StdRng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let jitter = |rng: &mut StdRng| 1.0 + rng.gen_range(-0.15..0.15);
    let mut params = *base_params;
    params.l *= jitter(&mut rng);
    params.w *= jitter(&mut rng);
    params.d *= jitter(&mut rng);
    let theta_offset = THETA_CYCLE_DEG[index % THETA_CYCLE_DEG.len()].to_radians();
    let pose = Pose::new(
        base_pose.c_x,
        base_pose.c_y,
        base_pose.theta + theta_offset + rng.gen_range(-15f64.to_radians()..15f64.to_radians()),
    );
    if mode == FitMode::Full7 {
        params.p = EGG_CYCLE[index % EGG_CYCLE.len()];
        params.b = BASE_CYCLE[(index / EGG_CYCLE.len()) % BASE_CYCLE.len()];
    }
    (params, pose)
}

struct StartOutcome {
    value: f64,
    evaluations: usize,
    converged: bool,
    x: Vec<f64>,
}

fn run_starts(
    points: &[LocalPoint],
    starts: &[(DentParams, Pose)],
    mode: FitMode,
    config: &FitConfig,
) -> (StartOutcome, usize) {
    let spread_tol = config.tol * points.len() as f64;
    let mut best: Option<(usize, StartOutcome)> = None;
    let mut total_evals = 0usize;
    for (index, (params, pose)) in starts.iter().enumerate() {
        let scale = params.l.max(params.w);
        let opts = SimplexOptions {
            max_evals: config.max_evals,
            spread_tol,
            initial_steps: initial_steps(mode, scale.max(1e-3)),
        };
        let x0 = encode(params, pose, mode);
        let result = simplex::minimize(
            |x| match decode(x, mode) {
                Some((params, pose)) => match Trial::new(&params, &pose) {
                    Ok(trial) => trial.sum_squared_residuals(points),
                    Err(_) => f64::INFINITY,
                },
                None => f64::INFINITY,
            },
            &x0,
            &opts,
        );
        total_evals += result.evaluations;
        let outcome = StartOutcome {
            value: result.value,
            evaluations: result.evaluations,
            converged: result.converged,
            x: result.x,
        };
        let better = match &best {
            None => true,
            Some((_, current)) => {
                outcome.value < current.value
                    || (outcome.value == current.value && outcome.evaluations < current.evaluations)
            }
        };
        if better {
            best = Some((index, outcome));
        }
    }
    let (_, outcome) = best.expect("at least one start");
    (outcome, total_evals)
}

fn report_from(
    segment: &DentSegment,
    params: DentParams,
    pose: Pose,
    converged: bool,
    evaluations: usize,
    starts: usize,
) -> Result<FitReport, FitError> {
    let stats = residual_stats(segment, &params, &pose)?;
    let srm = fitted_srm(&params)?;
    Ok(FitReport {
        params,
        pose,
        mae: stats.mae,
        rmse: stats.rmse,
        max_residual: stats.max_residual,
        n_points: segment.len(),
        converged,
        evaluations,
        starts,
        weakly_identified: params.b > WEAK_BASE_THRESHOLD,
        multimodal: segment.multimodal,
        srm,
    })
}

/// Box measures of the fitted model, sampled at 1/400 of the larger side.
pub fn fitted_srm(params: &DentParams) -> Result<SrmBox, FitError> {
    let spacing = params.l.max(params.w) / 400.0;
    let field = sample_height_field(params, spacing, 0.0)?;
    Ok(srm_box_measures(&field)?)
}

/// Fits the model to a segment with multistart simplex minimization.
///
/// In full mode one start is seeded with the simplified solution, which
/// guarantees the full-mode objective never ends up above the simplified
/// one. Deterministic for a given seed; ties across starts resolve to the
/// lower objective, then fewer evaluations, then the lower start index.
///
/// The reported rotation lies in `(-π/2, π/2]`. A winner outside that
/// range is flipped by a half turn with the shift negated, which preserves
/// the surface exactly for a circular boundary; for `p ≠ 1` the flip is
/// not a model symmetry, so the fit is re-polished from the mirrored
/// parameters and the polished result is reported.
pub fn fit(segment: &DentSegment, config: &FitConfig) -> Result<FitReport, FitError> {
    config.validate()?;
    let (guess_params, guess_pose) = initial_guess(segment)?;

    let mut starts: Vec<(DentParams, Pose)> = vec![(guess_params, guess_pose)];
    if config.mode == FitMode::Full7 {
        let simplified = fit(
            segment,
            &FitConfig {
                mode: FitMode::Simplified3,
                ..*config
            },
        )?;
        starts.push((simplified.params, simplified.pose));
    }
    for index in starts.len()..config.multistart.max(starts.len()) {
        starts.push(perturbed_start(
            &guess_params,
            &guess_pose,
            config.mode,
            config.seed,
            index,
        ));
    }

    let (outcome, mut total_evals) = run_starts(&segment.points, &starts, config.mode, config);
    let (mut params, mut pose) =
        decode(&outcome.x, config.mode).expect("winning start decodes (its objective was finite)");
    let mut converged = outcome.converged;

    pose.theta = wrap_half_turn(pose.theta);
    if theta_out_of_range(pose.theta) {
        let flipped_theta = canonical_theta(pose.theta);
        let flipped = valid_flip(&params);
        if params.p == 1.0 {
            params = flipped;
            pose.theta = flipped_theta;
        } else {
            // mirror the egg and let the optimizer settle in-range
            let seed_params = DentParams {
                p: mirror_egg_factor(params.p),
                ..flipped
            };
            let seed_pose = Pose {
                theta: flipped_theta,
                ..pose
            };
            let (polish, polish_evals) = run_starts(
                &segment.points,
                &[(seed_params, seed_pose)],
                config.mode,
                config,
            );
            total_evals += polish_evals;
            let fallback_pose = Pose {
                theta: flipped_theta,
                ..pose
            };
            let fallback_value = Trial::new(&flipped, &fallback_pose)
                .map(|t| t.sum_squared_residuals(&segment.points))
                .unwrap_or(f64::INFINITY);
            let polished = decode(&polish.x, config.mode).filter(|(_, p)| {
                polish.value.is_finite()
                    && polish.value <= fallback_value
                    && !theta_out_of_range(wrap_half_turn(p.theta))
            });
            match polished {
                Some((polished_params, polished_pose)) => {
                    params = polished_params;
                    pose = polished_pose;
                    pose.theta = wrap_half_turn(pose.theta);
                    converged = polish.converged;
                }
                None => {
                    params = flipped;
                    pose = fallback_pose;
                }
            }
        }
    }
    report_from(segment, params, pose, converged, total_evals, starts.len())
}

/// Simplified three-parameter fit: identical machinery with `p`, `s` and
/// `b` frozen at `(1, 0, e)`.
pub fn fit_simplified(segment: &DentSegment, config: &FitConfig) -> Result<FitReport, FitError> {
    fit(
        segment,
        &FitConfig {
            mode: FitMode::Simplified3,
            ..*config
        },
    )
}
