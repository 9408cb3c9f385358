//! Regular height grids sampled from the model.
//!
//! Heights are signed: a dent is a depression, so sampled cells carry the
//! negated model depth. Cells outside the support hold an explicit sentinel
//! rather than a NaN so that callers must branch.

use std::io::{BufRead, Write};

use crate::error::ModelError;
use crate::model::{DentParams, ReferenceDent, DEFAULT_CELL_CAP};

/// Row-major grid of signed heights over the base plane.
///
/// Node `(row, col)` sits at `(origin_x + col·spacing, origin_y + row·spacing)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub rows: usize,
    pub cols: usize,
    /// Node spacing (mm, > 0).
    pub spacing: f64,
    /// World position of node (0, 0).
    pub origin_x: f64,
    pub origin_y: f64,
    cells: Vec<Option<f64>>,
}

impl HeightField {
    pub fn new(
        rows: usize,
        cols: usize,
        spacing: f64,
        origin_x: f64,
        origin_y: f64,
    ) -> Result<Self, ModelError> {
        if spacing <= 0.0 || !spacing.is_finite() {
            return Err(ModelError::Domain(format!(
                "spacing must be positive (got {spacing})"
            )));
        }
        let cells = rows
            .checked_mul(cols)
            .filter(|&n| n <= DEFAULT_CELL_CAP)
            .ok_or(ModelError::GridTooLarge {
                cells: rows.saturating_mul(cols),
                cap: DEFAULT_CELL_CAP,
            })?;
        Ok(Self {
            rows,
            cols,
            spacing,
            origin_x,
            origin_y,
            cells: vec![None; cells],
        })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Option<f64>) {
        self.cells[row * self.cols + col] = value;
    }

    /// World coordinates of a node.
    #[inline]
    pub fn position(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_x + col as f64 * self.spacing,
            self.origin_y + row as f64 * self.spacing,
        )
    }

    /// Iterator over `(row, col, height)` of cells inside the support.
    pub fn finite_cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.map(|h| (i / self.cols, i % self.cols, h)))
    }

    pub fn finite_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Deepest cell: `(row, col, height)` with the minimum height.
    pub fn argmin(&self) -> Option<(usize, usize, f64)> {
        self.finite_cells()
            .fold(None, |best, (r, c, h)| match best {
                Some((_, _, bh)) if bh <= h => best,
                _ => Some((r, c, h)),
            })
    }

    /// Writes the plain-text `HF v1` representation.
    ///
    /// Header `HF v1 rows cols spacing_mm origin_x origin_y`, then row-major
    /// space-separated heights with `*` for cells outside the support.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "HF v1 {} {} {} {} {}",
            self.rows, self.cols, self.spacing, self.origin_x, self.origin_y
        )?;
        for row in 0..self.rows {
            let mut line = String::new();
            for col in 0..self.cols {
                if col > 0 {
                    line.push(' ');
                }
                match self.get(row, col) {
                    Some(h) => line.push_str(&format!("{h}")),
                    None => line.push('*'),
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, ModelError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| ModelError::MalformedField("empty input".into()))?
            .map_err(|e| ModelError::MalformedField(e.to_string()))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 7 || tokens[0] != "HF" || tokens[1] != "v1" {
            return Err(ModelError::MalformedField(format!("bad header `{header}`")));
        }
        let rows: usize = tokens[2]
            .parse()
            .map_err(|_| ModelError::MalformedField("bad rows".into()))?;
        let cols: usize = tokens[3]
            .parse()
            .map_err(|_| ModelError::MalformedField("bad cols".into()))?;
        let spacing: f64 = tokens[4]
            .parse()
            .map_err(|_| ModelError::MalformedField("bad spacing".into()))?;
        let origin_x: f64 = tokens[5]
            .parse()
            .map_err(|_| ModelError::MalformedField("bad origin".into()))?;
        let origin_y: f64 = tokens[6]
            .parse()
            .map_err(|_| ModelError::MalformedField("bad origin".into()))?;
        let mut field = Self::new(rows, cols, spacing, origin_x, origin_y)?;
        for row in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| ModelError::MalformedField(format!("missing row {row}")))?
                .map_err(|e| ModelError::MalformedField(e.to_string()))?;
            let mut col = 0;
            for token in line.split_whitespace() {
                if col >= cols {
                    return Err(ModelError::MalformedField(format!(
                        "row {row} has extra cells"
                    )));
                }
                let value = if token == "*" {
                    None
                } else {
                    Some(token.parse().map_err(|_| {
                        ModelError::MalformedField(format!("row {row}: bad height `{token}`"))
                    })?)
                };
                field.set(row, col, value);
                col += 1;
            }
            if col != cols {
                return Err(ModelError::MalformedField(format!(
                    "row {row} has {col} of {cols} cells"
                )));
            }
        }
        Ok(field)
    }
}

/// Samples the dent over `[−l/2 − margin, l/2 + margin] × [−w/2 − margin,
/// w/2 + margin]` at the given node spacing. Heights are negated depths;
/// nodes outside the support are sentinels.
pub fn sample_height_field(
    params: &DentParams,
    spacing: f64,
    margin: f64,
) -> Result<HeightField, ModelError> {
    params.validate()?;
    if spacing <= 0.0 || !spacing.is_finite() {
        return Err(ModelError::Domain(format!(
            "spacing must be positive (got {spacing})"
        )));
    }
    if margin < 0.0 || !margin.is_finite() {
        return Err(ModelError::Domain(format!(
            "margin must be non-negative (got {margin})"
        )));
    }
    let half_x = params.l / 2.0 + margin;
    let half_y = params.w / 2.0 + margin;
    let cols = (2.0 * half_x / spacing).ceil() as usize + 1;
    let rows = (2.0 * half_y / spacing).ceil() as usize + 1;
    let mut field = HeightField::new(rows, cols, spacing, -half_x, -half_y)?;
    let reference = ReferenceDent::for_params(params)?;
    for row in 0..rows {
        for col in 0..cols {
            let (x, y) = field.position(row, col);
            let depth = reference.eval(x / params.l, y / params.w);
            field.set(row, col, depth.map(|v| -params.d * v));
        }
    }
    Ok(field)
}
