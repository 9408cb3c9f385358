//! Report serialization with platform-stable formatting.
//!
//! Numbers are rounded to 9 significant digits before printing and keys
//! are emitted in a fixed order, so identical runs produce byte-identical
//! JSON and golden-file comparisons stay meaningful across platforms.

use crate::fit::FitReport;
use crate::model::SrmBox;

/// Rounds to 9 significant digits and prints the shortest representation.
/// Non-finite values become `null`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor();
    let scale = 10f64.powi(8 - magnitude as i32);
    let rounded = (x * scale).round() / scale;
    format!("{rounded}")
}

fn push_pairs(out: &mut String, pairs: &[(&str, String)]) {
    out.push('{');
    for (i, (key, value)) in pairs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('"');
        out.push_str(key);
        out.push_str("\":");
        out.push_str(value);
    }
    out.push('}');
}

fn srm_json(srm: &SrmBox) -> String {
    let mut out = String::new();
    push_pairs(
        &mut out,
        &[
            ("length", format_number(srm.length)),
            ("width", format_number(srm.width)),
            (
                "depth_at_width_section",
                format_number(srm.depth_at_width_section),
            ),
            ("max_depth", format_number(srm.max_depth)),
            ("depth_discrepancy", format_number(srm.depth_discrepancy())),
            ("length_angle", format_number(srm.length_angle)),
        ],
    );
    out
}

/// One report as a JSON object with the fixed top-level keys
/// `params`, `pose`, `metrics`, `srm`, `convergence`.
pub fn report_json(report: &FitReport) -> String {
    let mut params = String::new();
    push_pairs(
        &mut params,
        &[
            ("l", format_number(report.params.l)),
            ("w", format_number(report.params.w)),
            ("d", format_number(report.params.d)),
            ("b", format_number(report.params.b)),
            ("p", format_number(report.params.p)),
            ("s_x", format_number(report.params.s_x)),
            ("s_y", format_number(report.params.s_y)),
        ],
    );
    let mut pose = String::new();
    push_pairs(
        &mut pose,
        &[
            ("c_x", format_number(report.pose.c_x)),
            ("c_y", format_number(report.pose.c_y)),
            ("theta", format_number(report.pose.theta)),
        ],
    );
    let mut metrics = String::new();
    push_pairs(
        &mut metrics,
        &[
            ("mae", format_number(report.mae)),
            ("rmse", format_number(report.rmse)),
            ("max_residual", format_number(report.max_residual)),
            ("n_points", report.n_points.to_string()),
        ],
    );
    let mut convergence = String::new();
    push_pairs(
        &mut convergence,
        &[
            ("converged", report.converged.to_string()),
            ("evaluations", report.evaluations.to_string()),
            ("starts", report.starts.to_string()),
            ("weakly_identified", report.weakly_identified.to_string()),
            ("multimodal", report.multimodal.to_string()),
        ],
    );
    let mut out = String::new();
    push_pairs(
        &mut out,
        &[
            ("params", params),
            ("pose", pose),
            ("metrics", metrics),
            ("srm", srm_json(&report.srm)),
            ("convergence", convergence),
        ],
    );
    out
}

/// Reports for all segments of one input, as a JSON array.
pub fn reports_json(reports: &[FitReport]) -> String {
    let items: Vec<String> = reports.iter().map(report_json).collect();
    format!("[{}]\n", items.join(","))
}

/// Side-by-side simplified/full comparison for one segment.
pub fn compare_json_entry(simplified: &FitReport, full: &FitReport) -> String {
    let ratio = simplified.mae / full.mae;
    let mut out = String::new();
    push_pairs(
        &mut out,
        &[
            ("simplified3", report_json(simplified)),
            ("full7", report_json(full)),
            ("mae_ratio", format_number(ratio)),
        ],
    );
    out
}

pub fn compare_json(pairs: &[(FitReport, FitReport)]) -> String {
    let items: Vec<String> = pairs
        .iter()
        .map(|(simplified, full)| compare_json_entry(simplified, full))
        .collect();
    format!("[{}]\n", items.join(","))
}

/// Box measures plus the depth discrepancy, as a standalone document.
pub fn srm_only_json(srm: &SrmBox) -> String {
    srm_json(srm)
}

pub fn srm_array_json(measures: &[SrmBox]) -> String {
    let items: Vec<String> = measures.iter().map(srm_json).collect();
    format!("[{}]\n", items.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(3.968502629920499), "3.96850263");
        assert_eq!(format_number(-0.001234567891234), "-0.00123456789");
        assert_eq!(format_number(30.000000001), "30");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(f64::NAN), "null");
        assert_eq!(format_number(123456789.123), "123456789");
    }

    #[test]
    fn stable_key_order() {
        let mut out = String::new();
        push_pairs(&mut out, &[("b", "1".into()), ("a", "2".into())]);
        assert_eq!(out, "{\"b\":1,\"a\":2}");
    }
}
