//! Isolation of individual dents from a plane-referenced cloud.
//!
//! Points deeper than the threshold are binned into a square grid, the
//! occupied cells are dilated by one cell, and 8-connected components of
//! the dilated mask become segments. The dilation both recovers the dent
//! flanks that sit above the threshold and bridges sub-cell gaps from
//! missing scan data.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::cloud::{canonical_point_order, LocalPoint};

/// Knobs for [`segment_dents`]. Defaults assume scanner noise well under
/// 0.05 mm and dents several millimeters across.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    /// Points with `h ≤ -depth_threshold` seed segments (mm).
    pub depth_threshold: f64,
    /// Binning cell size (mm).
    pub cell: f64,
    /// Segments with fewer points are dropped.
    pub min_points: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            depth_threshold: 0.05,
            cell: 2.0,
            min_points: 50,
        }
    }
}

/// Axis-aligned bounds of a segment's points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    fn of(points: &[LocalPoint]) -> Self {
        let mut b = Self {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for p in points {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        b
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

/// Points of one isolated dent in the plane frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DentSegment {
    /// Points in canonical order, flanks included.
    pub points: Vec<LocalPoint>,
    pub bounds: Bounds,
    /// Cells of the dilated footprint, `(col, row)` in cell units.
    pub cells: BTreeSet<(i64, i64)>,
    pub cell_size: f64,
    /// Threshold the segment was extracted with.
    pub depth_threshold: f64,
    /// Set when the depth surface shows more than one well-separated
    /// minimum; such segments likely hold overlapping dents, which the
    /// fitter does not attempt to split.
    pub multimodal: bool,
}

impl DentSegment {
    /// Wraps an already-isolated patch of local points as a segment,
    /// bypassing segmentation. The footprint covers every occupied cell.
    pub fn from_points(mut points: Vec<LocalPoint>, cell_size: f64, depth_threshold: f64) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        points.sort_by(canonical_point_order);
        let bounds = Bounds::of(&points);
        let cells: BTreeSet<(i64, i64)> = points
            .iter()
            .map(|p| cell_of(p.x, p.y, cell_size))
            .collect();
        let multimodal = detect_multimodal(&points, cell_size);
        Self {
            points,
            bounds,
            cells,
            cell_size,
            depth_threshold,
            multimodal,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Deepest height in the segment (most negative).
    pub fn min_height(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.h)
            .fold(f64::INFINITY, f64::min)
    }
}

#[inline]
fn cell_of(x: f64, y: f64, cell: f64) -> (i64, i64) {
    ((x / cell).floor() as i64, (y / cell).floor() as i64)
}

const NEIGHBORS: [(i64, i64); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Splits a local-frame cloud into per-dent segments, deepest first.
///
/// Output order is by descending point count with ties broken by the
/// bounding box minimum x then y, and is invariant to input point order.
pub fn segment_dents(points: &[LocalPoint], config: &SegmentationConfig) -> Vec<DentSegment> {
    assert!(
        config.depth_threshold > 0.0,
        "depth threshold must be positive"
    );
    assert!(config.cell > 0.0, "cell size must be positive");

    let deep: BTreeSet<(i64, i64)> = points
        .iter()
        .filter(|p| p.h <= -config.depth_threshold)
        .map(|p| cell_of(p.x, p.y, config.cell))
        .collect();
    if deep.is_empty() {
        return Vec::new();
    }

    let mut mask: BTreeSet<(i64, i64)> = BTreeSet::new();
    for &(cx, cy) in &deep {
        mask.insert((cx, cy));
        for (dx, dy) in NEIGHBORS {
            mask.insert((cx + dx, cy + dy));
        }
    }

    // 8-connected components over the dilated mask
    let mut component_of: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut n_components = 0;
    for &start in &mask {
        if component_of.contains_key(&start) {
            continue;
        }
        let id = n_components;
        n_components += 1;
        let mut queue = VecDeque::from([start]);
        component_of.insert(start, id);
        while let Some((cx, cy)) = queue.pop_front() {
            for (dx, dy) in NEIGHBORS {
                let next = (cx + dx, cy + dy);
                if mask.contains(&next) && !component_of.contains_key(&next) {
                    component_of.insert(next, id);
                    queue.push_back(next);
                }
            }
        }
    }

    let mut members: Vec<Vec<LocalPoint>> = vec![Vec::new(); n_components];
    for p in points {
        if let Some(&id) = component_of.get(&cell_of(p.x, p.y, config.cell)) {
            members[id].push(*p);
        }
    }

    // gate on points actually below the threshold: the dilated footprint
    // sweeps up flat neighbors, which must not let noise specks qualify
    let mut segments: Vec<DentSegment> = members
        .into_iter()
        .enumerate()
        .filter(|(_, pts)| {
            pts.iter()
                .filter(|p| p.h <= -config.depth_threshold)
                .count()
                >= config.min_points
        })
        .map(|(id, mut pts)| {
            pts.sort_by(canonical_point_order);
            let bounds = Bounds::of(&pts);
            let cells: BTreeSet<(i64, i64)> = component_of
                .iter()
                .filter(|&(_, &cid)| cid == id)
                .map(|(&cell, _)| cell)
                .collect();
            let multimodal = detect_multimodal(&pts, config.cell);
            DentSegment {
                points: pts,
                bounds,
                cells,
                cell_size: config.cell,
                depth_threshold: config.depth_threshold,
                multimodal,
            }
        })
        .collect();

    segments.sort_by(|a, b| {
        b.points
            .len()
            .cmp(&a.points.len())
            .then(a.bounds.min_x.total_cmp(&b.bounds.min_x))
            .then(a.bounds.min_y.total_cmp(&b.bounds.min_y))
    });
    segments
}

/// Flags segments whose per-cell depth surface has two or more distinct
/// minima at least half the maximum depth and three cells apart.
fn detect_multimodal(points: &[LocalPoint], cell: f64) -> bool {
    let mut depth_per_cell: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for p in points {
        let key = cell_of(p.x, p.y, cell);
        let entry = depth_per_cell.entry(key).or_insert(f64::INFINITY);
        *entry = entry.min(p.h);
    }
    let max_depth = depth_per_cell.values().fold(0.0f64, |m, &h| m.max(-h));
    if max_depth <= 0.0 {
        return false;
    }
    let mut minima: Vec<((i64, i64), f64)> = depth_per_cell
        .iter()
        .filter(|&(&(cx, cy), &h)| {
            -h >= 0.5 * max_depth
                && NEIGHBORS.iter().all(|(dx, dy)| {
                    depth_per_cell
                        .get(&(cx + dx, cy + dy))
                        .is_none_or(|&nh| h <= nh)
                })
        })
        .map(|(&key, &h)| (key, h))
        .collect();
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut accepted: Vec<(i64, i64)> = Vec::new();
    for (key, _) in minima {
        if accepted
            .iter()
            .all(|&(ax, ay)| (key.0 - ax).abs().max((key.1 - ay).abs()) >= 3)
        {
            accepted.push(key);
        }
    }
    accepted.len() >= 2
}
