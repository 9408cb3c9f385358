//! Point-cloud ingestion, base-plane estimation and dent segmentation.

mod io;
mod plane;
mod segment;

pub use io::{parse_ply_ascii, parse_xyz, write_xyz};
pub use plane::{fit_plane_lsq, fit_plane_ransac, to_local_frame, PlaneFrame};
pub use segment::{segment_dents, DentSegment, SegmentationConfig};

use crate::error::CloudError;

/// Unordered 3D points in scanner coordinates, millimeters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    /// Optional per-point intensity; carried through parsing, ignored by
    /// the pipeline.
    pub intensity: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Self {
        Self {
            points,
            intensity: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ensure_plane_fittable(&self) -> Result<(), CloudError> {
        if self.points.len() < 3 {
            return Err(CloudError::InsufficientData {
                needed: 3,
                got: self.points.len(),
            });
        }
        Ok(())
    }
}

/// A point expressed in the base-plane frame: in-plane `(x, y)` plus signed
/// height `h`, all in millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl LocalPoint {
    pub fn new(x: f64, y: f64, h: f64) -> Self {
        Self { x, y, h }
    }
}

/// Total order on local points so segment contents stay canonical no
/// matter how the input cloud was ordered.
pub(crate) fn canonical_point_order(a: &LocalPoint, b: &LocalPoint) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.h.total_cmp(&b.h))
}
