//! Synthetic dent clouds for testing and demonstration.
//!
//! A dent is sampled on a regular grid embedded in a flat patch, with
//! optional Gaussian height noise. The grid is anchored at the dent center
//! so the peak lands exactly on a node for unrotated centered dents.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::cloud::{LocalPoint, PointCloud};
use crate::error::ModelError;
use crate::fit::Pose;
use crate::model::{DentParams, ReferenceDent};

/// Parameters of a synthetic cloud.
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub params: DentParams,
    pub pose: Pose,
    /// Grid pitch (mm).
    pub spacing: f64,
    /// Flat band around the dent's rotated bounding box (mm).
    pub margin: f64,
    /// Standard deviation of Gaussian height noise (mm); 0 disables it.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(params: DentParams, pose: Pose, spacing: f64) -> Self {
        Self {
            params,
            pose,
            spacing,
            margin: 10.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Samples the dent plus flat patch on a grid in the plane frame.
pub fn synth_local_points(spec: &SynthSpec) -> Result<Vec<LocalPoint>, ModelError> {
    if spec.spacing <= 0.0 || !spec.spacing.is_finite() {
        return Err(ModelError::Domain(format!(
            "spacing must be positive (got {})",
            spec.spacing
        )));
    }
    if spec.margin < 0.0 || spec.noise_sigma < 0.0 {
        return Err(ModelError::Domain(
            "margin and noise must be non-negative".into(),
        ));
    }
    spec.params.validate()?;
    let reference = ReferenceDent::for_params(&spec.params)?;
    let (sin_t, cos_t) = spec.pose.theta.sin_cos();
    let half_l = spec.params.l / 2.0;
    let half_w = spec.params.w / 2.0;
    let half_x = half_l * cos_t.abs() + half_w * sin_t.abs() + spec.margin;
    let half_y = half_l * sin_t.abs() + half_w * cos_t.abs() + spec.margin;
    let nx = (half_x / spec.spacing).ceil() as i64;
    let ny = (half_y / spec.spacing).ceil() as i64;

    let mut rng = StdRng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");

    let mut points = Vec::with_capacity(((2 * nx + 1) * (2 * ny + 1)) as usize);
    for i in -nx..=nx {
        for j in -ny..=ny {
            let x = spec.pose.c_x + i as f64 * spec.spacing;
            let y = spec.pose.c_y + j as f64 * spec.spacing;
            let dx = x - spec.pose.c_x;
            let dy = y - spec.pose.c_y;
            let xr = (dx * cos_t + dy * sin_t) / spec.params.l;
            let yr = (-dx * sin_t + dy * cos_t) / spec.params.w;
            let mut h = match reference.eval(xr, yr) {
                Some(v) => -spec.params.d * v,
                None => 0.0,
            };
            if spec.noise_sigma > 0.0 {
                h += noise.sample(&mut rng);
            }
            points.push(LocalPoint::new(x, y, h));
        }
    }
    Ok(points)
}

/// Same sampling expressed as a scanner cloud with the base plane at z = 0.
pub fn synth_cloud(spec: &SynthSpec) -> Result<PointCloud, ModelError> {
    let points = synth_local_points(spec)?;
    Ok(PointCloud::new(
        points.into_iter().map(|p| [p.x, p.y, p.h]).collect(),
    ))
}
