//! Base-plane estimation and projection into the plane frame.

use nalgebra::{Matrix3, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::cloud::{LocalPoint, PointCloud};
use crate::error::CloudError;

/// Orthonormal frame of the base plane: origin on the plane, `normal`
/// pointing away from the dented side, `u`/`v` spanning the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub origin: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl PlaneFrame {
    /// Signed height of a point above the plane.
    #[inline]
    pub fn height(&self, point: &Vector3<f64>) -> f64 {
        (point - self.origin).dot(&self.normal)
    }
}

fn centroid(points: &[[f64; 3]]) -> Vector3<f64> {
    let mut sum = Vector3::zeros();
    for p in points {
        sum += Vector3::new(p[0], p[1], p[2]);
    }
    sum / points.len() as f64
}

fn covariance(points: &[[f64; 3]], center: &Vector3<f64>) -> Matrix3<f64> {
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::new(p[0], p[1], p[2]) - center;
        cov += d * d.transpose();
    }
    cov / points.len() as f64
}

/// Cyclic Jacobi eigendecomposition of a symmetric 3x3 matrix; returns the
/// eigenvalues and the matching eigenvectors as columns.
///
/// Point covariances here are often numerically diagonal with one nearly
/// zero entry, a shape general-purpose solvers can mishandle (eigenvalues
/// reported in one order, vectors in another); a dozen explicit Jacobi
/// rotations are exact to machine precision and keep the pairing trivially
/// correct.
fn symmetric_eigen_3x3(matrix: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut a = *matrix;
    let mut vectors = Matrix3::identity();
    for _ in 0..30 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let diag = a[(0, 0)].powi(2) + a[(1, 1)].powi(2) + a[(2, 2)].powi(2);
        if off <= f64::EPSILON * f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rotation = Matrix3::identity();
            rotation[(p, p)] = c;
            rotation[(q, q)] = c;
            rotation[(p, q)] = s;
            rotation[(q, p)] = -s;
            a = rotation.transpose() * a * rotation;
            vectors *= rotation;
        }
    }
    (Vector3::new(a[(0, 0)], a[(1, 1)], a[(2, 2)]), vectors)
}

/// Total-least-squares plane through a cloud.
///
/// The origin is the centroid and the normal is the smallest-eigenvalue
/// direction of the point covariance. The normal sign is chosen so the
/// deepest tail of heights is negative (dents point down), and the u-axis
/// follows the largest in-plane variance with its sign fixed by the first
/// point.
pub fn fit_plane_lsq(cloud: &PointCloud) -> Result<PlaneFrame, CloudError> {
    cloud.ensure_plane_fittable()?;
    let center = centroid(&cloud.points);
    let cov = covariance(&cloud.points, &center);
    let (eigenvalues, eigenvectors) = symmetric_eigen_3x3(&cov);

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    let [min_idx, mid_idx, max_idx] = order;
    let lambda_mid = eigenvalues[mid_idx];
    let lambda_max = eigenvalues[max_idx];
    if lambda_max <= 0.0 || lambda_mid <= lambda_max * 1e-12 {
        return Err(CloudError::DegenerateGeometry);
    }
    let mut normal = eigenvectors.column(min_idx).into_owned().normalize();

    // orient: the deepest 1% tail of heights goes negative
    let mut heights: Vec<f64> = cloud
        .points
        .iter()
        .map(|p| (Vector3::new(p[0], p[1], p[2]) - center).dot(&normal))
        .collect();
    heights.sort_by(f64::total_cmp);
    let k = (heights.len() / 100).max(1);
    let low: f64 = heights[..k].iter().sum();
    let high: f64 = heights[heights.len() - k..].iter().sum();
    if low + high > 0.0 {
        normal = -normal;
    }

    // in-plane axes: start from the coordinate axis least aligned with the
    // normal, then rotate onto the largest in-plane variance direction
    let seed_axis = if normal.x.abs() <= normal.y.abs() && normal.x.abs() <= normal.z.abs() {
        Vector3::x()
    } else if normal.y.abs() <= normal.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let u0 = (seed_axis - normal * seed_axis.dot(&normal)).normalize();
    let v0 = normal.cross(&u0);

    let (mut caa, mut cab, mut cbb) = (0.0, 0.0, 0.0);
    for p in &cloud.points {
        let d = Vector3::new(p[0], p[1], p[2]) - center;
        let a = d.dot(&u0);
        let b = d.dot(&v0);
        caa += a * a;
        cab += a * b;
        cbb += b * b;
    }
    let angle = 0.5 * (2.0 * cab).atan2(caa - cbb);
    let mut u = (u0 * angle.cos() + v0 * angle.sin()).normalize();

    // resolve the 180° ambiguity with the first point
    let first = Vector3::new(cloud.points[0][0], cloud.points[0][1], cloud.points[0][2]);
    if (first - center).dot(&u) < 0.0 {
        u = -u;
    }
    let v = normal.cross(&u);

    Ok(PlaneFrame {
        origin: center,
        normal,
        u,
        v,
    })
}

/// RANSAC plane: the best 3-point consensus refined by [`fit_plane_lsq`]
/// on its inliers. Deterministic for a given seed.
pub fn fit_plane_ransac(
    cloud: &PointCloud,
    inlier_tol: f64,
    iterations: usize,
    seed: u64,
) -> Result<PlaneFrame, CloudError> {
    cloud.ensure_plane_fittable()?;
    if inlier_tol <= 0.0 {
        return Err(CloudError::DegenerateGeometry);
    }
    let n = cloud.points.len();
    let mut rng = StdRng::seed_from_u64(seed);
    let point = |i: usize| Vector3::new(cloud.points[i][0], cloud.points[i][1], cloud.points[i][2]);

    let mut best_count = 0usize;
    let mut best_plane: Option<(Vector3<f64>, Vector3<f64>)> = None;
    for _ in 0..iterations.max(1) {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let mut k = rng.gen_range(0..n);
        while k == i || k == j {
            k = rng.gen_range(0..n);
        }
        let (a, b, c) = (point(i), point(j), point(k));
        let normal = (b - a).cross(&(c - a));
        let norm = normal.norm();
        if norm < 1e-12 {
            continue;
        }
        let unit = normal / norm;
        let count = cloud
            .points
            .iter()
            .filter(|p| ((Vector3::new(p[0], p[1], p[2]) - a).dot(&unit)).abs() <= inlier_tol)
            .count();
        if count > best_count {
            best_count = count;
            best_plane = Some((a, unit));
        }
    }

    let (anchor, unit) = match best_plane {
        Some(plane) if best_count * 2 >= n => plane,
        _ => {
            return Err(CloudError::RobustFitFailed {
                got: best_count,
                total: n,
            })
        }
    };
    let inliers: Vec<[f64; 3]> = cloud
        .points
        .iter()
        .filter(|p| ((Vector3::new(p[0], p[1], p[2]) - anchor).dot(&unit)).abs() <= inlier_tol)
        .copied()
        .collect();
    fit_plane_lsq(&PointCloud::new(inliers))
}

/// Projects every cloud point into the plane frame.
pub fn to_local_frame(cloud: &PointCloud, frame: &PlaneFrame) -> Vec<LocalPoint> {
    cloud
        .points
        .iter()
        .map(|p| {
            let d = Vector3::new(p[0], p[1], p[2]) - frame.origin;
            LocalPoint::new(d.dot(&frame.u), d.dot(&frame.v), d.dot(&frame.normal))
        })
        .collect()
}
