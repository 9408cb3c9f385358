//! Traditional box measures extracted from a sampled height field.
//!
//! The length is the longest chord across the dent footprint, the width is
//! the longest chord perpendicular to the length direction, and the section
//! depth is read along the width chord. For off-center dents the section
//! depth undershoots the true maximum depth, which is exactly the ambiguity
//! the seven-parameter model removes; both values are reported.

use crate::error::ModelError;
use crate::model::HeightField;

/// Box measures in millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrmBox {
    /// Longest chord across the footprint.
    pub length: f64,
    /// Longest chord at 90° to the length direction.
    pub width: f64,
    /// Magnitude of the deepest height along the width chord.
    pub depth_at_width_section: f64,
    /// Magnitude of the deepest height anywhere in the footprint.
    pub max_depth: f64,
    /// Length direction in radians, in `[0, π)`.
    pub length_angle: f64,
}

impl SrmBox {
    /// How much the section depth understates the true depth.
    pub fn depth_discrepancy(&self) -> f64 {
        self.max_depth - self.depth_at_width_section
    }
}

/// Direction step of the chord sweep: 0.5 degrees.
const ANGLE_STEP_DEG: f64 = 0.5;

struct BinExtents {
    lo: Vec<f64>,
    hi: Vec<f64>,
    offset: isize,
}

impl BinExtents {
    fn new(max_bins: usize) -> Self {
        Self {
            lo: vec![f64::INFINITY; max_bins],
            hi: vec![f64::NEG_INFINITY; max_bins],
            offset: max_bins as isize / 2,
        }
    }

    fn reset(&mut self) {
        self.lo.fill(f64::INFINITY);
        self.hi.fill(f64::NEG_INFINITY);
    }

    #[inline]
    fn index(&self, along_perp: f64, spacing: f64) -> usize {
        ((along_perp / spacing).round() as isize + self.offset) as usize
    }

    #[inline]
    fn update(&mut self, idx: usize, along: f64) {
        if along < self.lo[idx] {
            self.lo[idx] = along;
        }
        if along > self.hi[idx] {
            self.hi[idx] = along;
        }
    }

    /// Longest extent across all occupied bins; first (lowest) bin wins ties.
    fn longest(&self) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0;
        for (i, (&lo, &hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if hi >= lo && hi - lo > best {
                best = hi - lo;
                best_idx = i;
            }
        }
        (best, best_idx)
    }
}

/// Extracts SRM box measures from a sampled field.
///
/// Directions are swept at 0.5° steps over `[0°, 180°)`; the longest chord
/// wins, ties broken by the smaller angle. Chord lengths include one cell
/// width so a single-cell footprint measures one spacing across.
pub fn srm_box_measures(field: &HeightField) -> Result<SrmBox, ModelError> {
    let cells: Vec<(f64, f64, f64)> = field
        .finite_cells()
        .map(|(r, c, h)| {
            let (x, y) = field.position(r, c);
            (x, y, h)
        })
        .collect();
    if cells.is_empty() {
        return Err(ModelError::EmptyField);
    }
    let spacing = field.spacing;
    let max_bins = 2 * (field.rows + field.cols) + 8;
    let mut bins = BinExtents::new(max_bins);

    let steps = (180.0 / ANGLE_STEP_DEG) as usize;
    let mut best_len = f64::NEG_INFINITY;
    let mut best_angle = 0.0;
    for step in 0..steps {
        let angle = (step as f64 * ANGLE_STEP_DEG).to_radians();
        let (sin, cos) = angle.sin_cos();
        bins.reset();
        for &(x, y, _) in &cells {
            let along = x * cos + y * sin;
            let perp = -x * sin + y * cos;
            let idx = bins.index(perp, spacing);
            bins.update(idx, along);
        }
        let (extent, _) = bins.longest();
        if extent > best_len {
            best_len = extent;
            best_angle = angle;
        }
    }
    let length = best_len + spacing;

    // width: longest chord perpendicular to the length direction
    let width_angle = best_angle + std::f64::consts::FRAC_PI_2;
    let (sin, cos) = width_angle.sin_cos();
    bins.reset();
    for &(x, y, _) in &cells {
        let along = x * cos + y * sin;
        let perp = -x * sin + y * cos;
        let idx = bins.index(perp, spacing);
        bins.update(idx, along);
    }
    let (width_extent, width_bin) = bins.longest();
    let width = width_extent + spacing;

    // depth along the winning width chord
    let mut section_min = f64::INFINITY;
    let mut overall_min = f64::INFINITY;
    for &(x, y, h) in &cells {
        let perp = -x * sin + y * cos;
        if bins.index(perp, spacing) == width_bin && h < section_min {
            section_min = h;
        }
        if h < overall_min {
            overall_min = h;
        }
    }

    Ok(SrmBox {
        length,
        width,
        depth_at_width_section: -section_min,
        max_depth: -overall_min,
        length_angle: best_angle,
    })
}
