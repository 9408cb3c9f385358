//! Residual and height-field rendering as binary PPM images.
//!
//! PPM needs no image dependencies and decodes in a dozen lines, which
//! keeps the output verifiable in tests. One pixel per grid cell; blue is
//! zero, red is the full scale, and cells outside the support are mid-gray.

use std::io::{Read, Write};

use crate::cloud::LocalPoint;
use crate::error::ModelError;
use crate::model::HeightField;

/// Color mapping of a heatmap.
#[derive(Debug, Clone, Copy)]
pub struct HeatmapSpec {
    /// Magnitude mapped to pure red (mm).
    pub scale: f64,
    /// Cell size when binning scattered points (mm per pixel).
    pub pitch: f64,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        Self {
            scale: 1.0,
            pitch: 0.5,
        }
    }
}

const SENTINEL_GRAY: [u8; 3] = [128, 128, 128];

/// Writes the field as a binary PPM (P6), mapping `|value| / scale` onto a
/// linear blue-to-red ramp clamped at the scale.
pub fn render_heatmap<W: Write>(
    field: &HeightField,
    spec: &HeatmapSpec,
    mut out: W,
) -> Result<(), ModelError> {
    if field.rows == 0 || field.cols == 0 {
        return Err(ModelError::EmptyField);
    }
    if spec.scale.is_nan() || spec.scale <= 0.0 {
        return Err(ModelError::Domain(format!(
            "heatmap scale must be positive (got {})",
            spec.scale
        )));
    }
    let header = format!("P6\n{} {}\n255\n", field.cols, field.rows);
    let mut bytes = Vec::with_capacity(header.len() + field.rows * field.cols * 3);
    bytes.extend_from_slice(header.as_bytes());
    // north up: the last grid row (max y) becomes the first image row
    for row in (0..field.rows).rev() {
        for col in 0..field.cols {
            let rgb = match field.get(row, col) {
                Some(h) => {
                    let t = (h.abs() / spec.scale).clamp(0.0, 1.0);
                    [
                        (255.0 * t).round() as u8,
                        0,
                        (255.0 * (1.0 - t)).round() as u8,
                    ]
                }
                None => SENTINEL_GRAY,
            };
            bytes.extend_from_slice(&rgb);
        }
    }
    out.write_all(&bytes)
        .map_err(|e| ModelError::Domain(format!("write failed: {e}")))
}

/// Decodes a binary PPM written by [`render_heatmap`]; `(cols, rows, rgb)`.
pub fn read_ppm<R: Read>(mut input: R) -> Result<(usize, usize, Vec<[u8; 3]>), ModelError> {
    let mut data = Vec::new();
    input
        .read_to_end(&mut data)
        .map_err(|e| ModelError::MalformedField(e.to_string()))?;
    let mut header_fields = Vec::new();
    let mut pos = 0;
    while header_fields.len() < 4 && pos < data.len() {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        header_fields.push(String::from_utf8_lossy(&data[start..pos]).to_string());
    }
    if header_fields.len() != 4 || header_fields[0] != "P6" || header_fields[3] != "255" {
        return Err(ModelError::MalformedField("not a P6/255 ppm".into()));
    }
    let cols: usize = header_fields[1]
        .parse()
        .map_err(|_| ModelError::MalformedField("bad width".into()))?;
    let rows: usize = header_fields[2]
        .parse()
        .map_err(|_| ModelError::MalformedField("bad height".into()))?;
    pos += 1; // single whitespace after maxval
    let expected = rows * cols * 3;
    if data.len() < pos + expected {
        return Err(ModelError::MalformedField("truncated pixel data".into()));
    }
    let pixels = data[pos..pos + expected]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Ok((cols, rows, pixels))
}

/// Bins scattered local points into a grid of per-cell mean values.
///
/// `values` pairs with `points`; empty cells become sentinels. Used for
/// residual heatmaps (values = |residual|) and for empirical height fields
/// (values = height).
pub fn bin_local_points(
    points: &[LocalPoint],
    values: &[f64],
    pitch: f64,
) -> Result<HeightField, ModelError> {
    assert_eq!(points.len(), values.len());
    if points.is_empty() {
        return Err(ModelError::EmptyField);
    }
    if pitch.is_nan() || pitch <= 0.0 {
        return Err(ModelError::Domain(format!(
            "pitch must be positive (got {pitch})"
        )));
    }
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let cols = ((max_x - min_x) / pitch).floor() as usize + 1;
    let rows = ((max_y - min_y) / pitch).floor() as usize + 1;
    let mut sums = vec![(0.0f64, 0usize); rows * cols];
    for (p, &v) in points.iter().zip(values) {
        let col = (((p.x - min_x) / pitch).floor() as usize).min(cols - 1);
        let row = (((p.y - min_y) / pitch).floor() as usize).min(rows - 1);
        let cell = &mut sums[row * cols + col];
        cell.0 += v;
        cell.1 += 1;
    }
    let mut field = HeightField::new(rows, cols, pitch, min_x, min_y)?;
    for row in 0..rows {
        for col in 0..cols {
            let (sum, count) = sums[row * cols + col];
            if count > 0 {
                field.set(row, col, Some(sum / count as f64));
            }
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_field(value: Option<f64>, rows: usize, cols: usize) -> HeightField {
        let mut field = HeightField::new(rows, cols, 1.0, 0.0, 0.0).unwrap();
        for r in 0..rows {
            for c in 0..cols {
                field.set(r, c, value);
            }
        }
        field
    }

    #[test]
    fn zero_residuals_render_uniform_blue() {
        let field = constant_field(Some(0.0), 4, 6);
        let mut buf = Vec::new();
        render_heatmap(&field, &HeatmapSpec::default(), &mut buf).unwrap();
        let (cols, rows, pixels) = read_ppm(buf.as_slice()).unwrap();
        assert_eq!((cols, rows), (6, 4));
        assert!(pixels.iter().all(|&p| p == [0, 0, 255]));
    }

    #[test]
    fn full_scale_is_pure_red_and_clamped() {
        let mut field = constant_field(Some(1.0), 1, 3);
        field.set(0, 1, Some(5.0)); // beyond scale: clamped
        field.set(0, 2, None);
        let mut buf = Vec::new();
        render_heatmap(&field, &HeatmapSpec::default(), &mut buf).unwrap();
        let (_, _, pixels) = read_ppm(buf.as_slice()).unwrap();
        assert_eq!(pixels[0], [255, 0, 0]);
        assert_eq!(pixels[1], [255, 0, 0]);
        assert_eq!(pixels[2], [128, 128, 128]);
    }

    #[test]
    fn ramp_is_monotone_in_red() {
        let mut field = HeightField::new(1, 11, 1.0, 0.0, 0.0).unwrap();
        for c in 0..11 {
            field.set(0, c, Some(c as f64 / 10.0));
        }
        let mut buf = Vec::new();
        render_heatmap(&field, &HeatmapSpec::default(), &mut buf).unwrap();
        let (_, _, pixels) = read_ppm(buf.as_slice()).unwrap();
        for pair in pixels.windows(2) {
            assert!(pair[1][0] >= pair[0][0], "red channel not monotone");
            assert!(pair[1][2] <= pair[0][2], "blue channel not anti-monotone");
        }
    }

    #[test]
    fn binning_averages_per_cell() {
        let points = vec![
            LocalPoint::new(0.1, 0.1, 0.0),
            LocalPoint::new(0.2, 0.2, 0.0),
            LocalPoint::new(3.0, 0.0, 0.0),
        ];
        let field = bin_local_points(&points, &[1.0, 3.0, 7.0], 1.0).unwrap();
        assert_eq!(field.cols, 3);
        assert_eq!(field.get(0, 0), Some(2.0));
        assert_eq!(field.get(0, 2), Some(7.0));
        assert_eq!(field.get(0, 1), None);
    }
}
