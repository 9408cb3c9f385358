//! Readers and writers for ascii cloud interchange formats.
//!
//! Binary scanner formats are deliberately out of scope; they are detected
//! and rejected with the format named so callers get an actionable message.

use std::io::{BufRead, Write};

use crate::cloud::PointCloud;
use crate::error::CloudError;

/// Parses whitespace-separated `x y z [intensity]` triples, one point per
/// line. Empty lines and lines starting with `#` are skipped.
pub fn parse_xyz<R: BufRead>(input: R) -> Result<PointCloud, CloudError> {
    let mut points = Vec::new();
    let mut intensities = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let line_no = idx + 1;
        let mut values = [0.0f64; 4];
        let mut count = 0;
        for token in trimmed.split_whitespace() {
            if count >= 4 {
                return Err(CloudError::Parse {
                    line: line_no,
                    msg: format!("expected at most 4 values, found more in `{trimmed}`"),
                });
            }
            values[count] = token.parse().map_err(|_| CloudError::Parse {
                line: line_no,
                msg: format!("malformed number `{token}`"),
            })?;
            count += 1;
        }
        if count < 3 {
            return Err(CloudError::Parse {
                line: line_no,
                msg: format!("expected 3 coordinates, found {count}"),
            });
        }
        if values[..count].iter().any(|v| !v.is_finite()) {
            return Err(CloudError::Parse {
                line: line_no,
                msg: "non-finite coordinate".into(),
            });
        }
        points.push([values[0], values[1], values[2]]);
        intensities.push(if count == 4 { values[3] } else { f64::NAN });
    }
    if points.len() < 3 {
        return Err(CloudError::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let has_intensity = intensities.iter().any(|v| !v.is_nan());
    Ok(PointCloud {
        points,
        intensity: has_intensity.then_some(intensities),
    })
}

/// Writes one `x y z` line per point using exact round-trip formatting.
pub fn write_xyz<W: Write>(cloud: &PointCloud, mut out: W) -> std::io::Result<()> {
    let mut line = String::new();
    for p in &cloud.points {
        line.clear();
        line.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
    has_list: bool,
}

/// Parses an ascii PLY file, extracting vertex positions. Faces and unknown
/// vertex properties are ignored. Binary variants are rejected with the
/// detected format named.
pub fn parse_ply_ascii<R: BufRead>(input: R) -> Result<PointCloud, CloudError> {
    let mut lines = input.lines().enumerate();

    let magic = match lines.next() {
        Some((_, line)) => line?,
        None => {
            return Err(CloudError::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    };
    if magic.trim() != "ply" {
        return Err(CloudError::Parse {
            line: 1,
            msg: "missing `ply` magic".into(),
        });
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut format_seen = false;
    loop {
        let (idx, line) = match lines.next() {
            Some((idx, line)) => (idx, line?),
            None => {
                return Err(CloudError::Parse {
                    line: 0,
                    msg: "header not terminated".into(),
                })
            }
        };
        let line_no = idx + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.first().copied() {
            Some("comment") | None => continue,
            Some("format") => {
                let kind = tokens.get(1).copied().unwrap_or("");
                if kind != "ascii" {
                    return Err(CloudError::UnsupportedFormat {
                        detected: kind.to_string(),
                    });
                }
                format_seen = true;
            }
            Some("element") => {
                let name = tokens.get(1).copied().unwrap_or("").to_string();
                let count = tokens.get(2).and_then(|t| t.parse().ok()).ok_or_else(|| {
                    CloudError::Parse {
                        line: line_no,
                        msg: "bad element count".into(),
                    }
                })?;
                elements.push(PlyElement {
                    name,
                    count,
                    properties: Vec::new(),
                    has_list: false,
                });
            }
            Some("property") => {
                let element = elements.last_mut().ok_or_else(|| CloudError::Parse {
                    line: line_no,
                    msg: "property before any element".into(),
                })?;
                if tokens.get(1) == Some(&"list") {
                    element.has_list = true;
                } else if let Some(name) = tokens.last() {
                    element.properties.push(name.to_string());
                }
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(CloudError::Parse {
                    line: line_no,
                    msg: format!("unknown header keyword `{other}`"),
                })
            }
        }
    }
    if !format_seen {
        return Err(CloudError::Parse {
            line: 0,
            msg: "header missing format line".into(),
        });
    }

    let vertex = elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or(CloudError::MissingProperty { name: "vertex" })?;
    let x_idx = vertex
        .properties
        .iter()
        .position(|p| p == "x")
        .ok_or(CloudError::MissingProperty { name: "x" })?;
    let y_idx = vertex
        .properties
        .iter()
        .position(|p| p == "y")
        .ok_or(CloudError::MissingProperty { name: "y" })?;
    let z_idx = vertex
        .properties
        .iter()
        .position(|p| p == "z")
        .ok_or(CloudError::MissingProperty { name: "z" })?;

    let mut points = Vec::new();
    for element in &elements {
        for _ in 0..element.count {
            let (idx, line) = match lines.next() {
                Some((idx, line)) => (idx, line?),
                None => {
                    return Err(CloudError::Parse {
                        line: 0,
                        msg: format!("unexpected end of data in element `{}`", element.name),
                    })
                }
            };
            if element.name != "vertex" {
                continue;
            }
            let line_no = idx + 1;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let need = x_idx.max(y_idx).max(z_idx);
            if tokens.len() <= need {
                return Err(CloudError::Parse {
                    line: line_no,
                    msg: format!("vertex line has {} values, need {}", tokens.len(), need + 1),
                });
            }
            let parse = |i: usize| -> Result<f64, CloudError> {
                tokens[i].parse().map_err(|_| CloudError::Parse {
                    line: line_no,
                    msg: format!("malformed number `{}`", tokens[i]),
                })
            };
            points.push([parse(x_idx)?, parse(y_idx)?, parse(z_idx)?]);
        }
    }
    if points.len() < 3 {
        return Err(CloudError::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    Ok(PointCloud::new(points))
}
