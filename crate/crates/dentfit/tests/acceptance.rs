//! Acceptance suite: one test per release criterion, each printing a
//! PASS line once its assertions hold. Run with `--nocapture` to see the
//! per-criterion lines:
//!
//! ```text
//! cargo test -p dentfit --test acceptance -- --nocapture
//! ```

use std::f64::consts::{E, FRAC_PI_2};
use std::time::Instant;

use dentfit::cloud::{
    fit_plane_lsq, fit_plane_ransac, parse_xyz, segment_dents, to_local_frame, LocalPoint,
    PointCloud, SegmentationConfig,
};
use dentfit::fit::{anchor_ring, fit, FitConfig, FitMode, Pose};
use dentfit::model::{
    boundary_half_width, radial_ratio, radial_ratio_gradient, ref_dent, sample_height_field,
    srm_box_measures, DentParams, HeightField, RefPoint,
};
use dentfit::synth::{synth_local_points, SynthSpec};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

/// Table of golden parameter rows used throughout the suite:
/// (l, w, d, b, p, s_x, s_y).
const GOLDEN_ROWS: [(f64, f64, f64, f64, f64, f64, f64); 8] = [
    (30.0, 30.0, 5.0, 2.0, 1.0, 0.0, 0.0),
    (30.0, 30.0, 5.0, 10.0, 1.0, 0.0, 0.0),
    (30.0, 30.0, 5.0, E, 0.8, 0.0, 0.0),
    (30.0, 30.0, 5.0, E, 1.2, 0.0, 0.0),
    (30.0, 15.0, 5.0, E, 1.0, 0.0, 0.0),
    (30.0, 15.0, 5.0, E, 1.0, 0.2, 0.0),
    (30.0, 15.0, 5.0, E, 1.0, 0.0, 0.2),
    (30.0, 30.0, 5.0, E, 0.7, -0.2, -0.1),
];

fn params_of(row: (f64, f64, f64, f64, f64, f64, f64)) -> DentParams {
    DentParams::new(row.0, row.1, row.2, row.3, row.4, row.5, row.6).unwrap()
}

// ── Criterion 1: model invariant suite ──────────────────────────────────────

#[test]
fn criterion_1_model_invariants() {
    let start = Instant::now();
    let shift_sets: [(f64, f64, f64, f64); 6] = [
        (2.0, 1.0, 0.0, 0.0),
        (E, 1.0, 0.2, -0.1),
        (10.0, 1.0, -0.3, 0.25),
        (1.5, 0.8, 0.1, 0.05),
        (4.0, 1.3, -0.15, -0.2),
        (E, 0.7, -0.2, -0.1),
    ];

    // peak normalization: exactly 1 at the shift point, both branches
    for &(b, p, s_x, s_y) in &shift_sets {
        let v = ref_dent(RefPoint::new(s_x, s_y), b, p, s_x, s_y)
            .unwrap()
            .unwrap();
        assert_eq!(
            v, 1.0,
            "peak must be exactly 1 for b={b} p={p} s=({s_x},{s_y})"
        );
    }

    // vanishing boundary: < 1e-6 at radial ratio 0.999
    for &(b, p, s_x, s_y) in &shift_sets {
        let mut checked = 0;
        for i in 1..200 {
            let x = -0.5 + i as f64 / 200.0;
            let f = boundary_half_width(x, p).unwrap();
            let m2 = x * x + f * f;
            let y2 = 0.999_f64.powi(2) * m2 - x * x;
            if y2 <= 0.0 {
                continue;
            }
            let y = y2.sqrt();
            let r = radial_ratio(RefPoint::new(x, y), p).unwrap();
            assert!((r - 0.999).abs() < 1e-9);
            for y in [y, -y] {
                let v = ref_dent(RefPoint::new(x, y), b, p, s_x, s_y)
                    .unwrap()
                    .unwrap();
                assert!(v < 1e-6, "boundary value {v} at ({x},{y}) b={b} p={p}");
                checked += 1;
            }
        }
        assert!(checked > 200, "boundary sweep too sparse");
    }

    // support box: f tops out at exactly 0.5 and vanishes at the ends
    for p in [0.3, 0.7, 1.0, 1.5, 1.9] {
        let mut max_f: f64 = 0.0;
        for i in 0..=4000 {
            let x = -0.5 + i as f64 / 4000.0;
            let f = boundary_half_width(x, p).unwrap();
            assert!(f <= 0.5 + 1e-12);
            max_f = max_f.max(f);
        }
        assert!(
            (max_f - 0.5).abs() < 1e-6,
            "support must touch the box for p={p}"
        );
        assert_eq!(boundary_half_width(-0.5, p).unwrap(), 0.0);
        assert_eq!(boundary_half_width(0.5, p).unwrap(), 0.0);
    }

    // circle specialization at p = 1
    for i in 0..=1000 {
        let x = -0.5 + i as f64 / 1000.0;
        let f = boundary_half_width(x, 1.0).unwrap();
        assert!((f - (0.25 - x * x).max(0.0).sqrt()).abs() <= 1e-12);
    }

    // branch continuity: slightly shifted branch meets the unshifted one
    for &(b, p) in &[(2.0, 1.0), (E, 0.8), (10.0, 1.2)] {
        for i in -6..=6 {
            for j in -6..=6 {
                let (x, y) = (i as f64 * 0.07, j as f64 * 0.07);
                let unshifted = ref_dent(RefPoint::new(x, y), b, p, 0.0, 0.0).unwrap();
                let shifted = ref_dent(RefPoint::new(x, y), b, p, 1e-12, 1e-12).unwrap();
                match (unshifted, shifted) {
                    (Some(a), Some(s)) => {
                        assert!((a - s).abs() <= 1e-8, "branch gap {} at ({x},{y})", a - s)
                    }
                    (None, None) => {}
                    other => panic!("branch support mismatch: {other:?}"),
                }
            }
        }
    }

    // analytic gradient against central differences at 1000 random points
    let mut rng = StdRng::seed_from_u64(42);
    let mut tested = 0;
    while tested < 1000 {
        let p = rng.gen_range(0.3..1.7);
        let x = rng.gen_range(-0.49..0.49);
        let f = boundary_half_width(x, p).unwrap();
        let y = rng.gen_range(-1.0..1.0) * f;
        let r = radial_ratio(RefPoint::new(x, y), p).unwrap();
        if !(0.05..0.95).contains(&r) {
            continue;
        }
        let (ax, ay) = radial_ratio_gradient(RefPoint::new(x, y), p).unwrap();
        let h = 1e-6;
        let rr = |x: f64, y: f64| radial_ratio(RefPoint::new(x, y), p).unwrap();
        let nx = (rr(x + h, y) - rr(x - h, y)) / (2.0 * h);
        let ny = (rr(x, y + h) - rr(x, y - h)) / (2.0 * h);
        assert!(
            (ax - nx).abs() <= 1e-5 * nx.abs().max(1.0),
            "d/dx {ax} vs {nx} at ({x},{y},{p})"
        );
        assert!(
            (ay - ny).abs() <= 1e-5 * ny.abs().max(1.0),
            "d/dy {ay} vs {ny} at ({x},{y},{p})"
        );
        tested += 1;
    }

    // stationarity at the shift point for moderate shifts
    for &(b, p, s_x, s_y) in shift_sets
        .iter()
        .filter(|s| s.2.abs() <= 0.3 && s.3.abs() <= 0.3)
    {
        let h = 1e-5;
        let v = |x: f64, y: f64| {
            ref_dent(RefPoint::new(x, y), b, p, s_x, s_y)
                .unwrap()
                .unwrap()
        };
        let gx = (v(s_x + h, s_y) - v(s_x - h, s_y)) / (2.0 * h);
        let gy = (v(s_x, s_y + h) - v(s_x, s_y - h)) / (2.0 * h);
        assert!(
            (gx * gx + gy * gy).sqrt() <= 1e-6,
            "peak not stationary for b={b} p={p}"
        );
    }

    // steeper decay for larger bases at fixed interior radius
    for r in [0.2, 0.5, 0.8] {
        let values: Vec<f64> = [1.5, 2.0, E, 10.0]
            .iter()
            .map(|&b| {
                ref_dent(RefPoint::new(r * 0.5, 0.0), b, 1.0, 0.0, 0.0)
                    .unwrap()
                    .unwrap()
            })
            .collect();
        for pair in values.windows(2) {
            assert!(pair[1] < pair[0], "value must decrease with b at r={r}");
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 1 took {elapsed:?}");
    println!("criterion 1 (model invariant suite): PASS in {elapsed:?}");
}

// ── Criterion 2: golden shapes ──────────────────────────────────────────────

#[test]
fn criterion_2_golden_shapes() {
    let start = Instant::now();
    let spacing = 0.25;
    for (index, &row) in GOLDEN_ROWS.iter().enumerate() {
        let params = params_of(row);
        let field = sample_height_field(&params, spacing, 0.0).unwrap();

        let (r, c, min_h) = field.argmin().unwrap();
        let (x, y) = field.position(r, c);
        let expect = (params.s_x * params.l, params.s_y * params.w);
        assert!(
            (x - expect.0).abs() <= spacing + 1e-9 && (y - expect.1).abs() <= spacing + 1e-9,
            "row {}: deepest cell at ({x}, {y}), expected near {expect:?}",
            index + 1
        );
        assert!(
            (-min_h - params.d).abs() <= 1e-6,
            "row {}: max depth {} differs from d = {}",
            index + 1,
            -min_h,
            params.d
        );

        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for (row, col, _) in field.finite_cells() {
            let (x, y) = field.position(row, col);
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let extent_x = max_x - min_x + spacing;
        let extent_y = max_y - min_y + spacing;
        assert!(
            (extent_x - params.l).abs() <= spacing + 1e-9,
            "row {}: x footprint {extent_x} vs l = {}",
            index + 1,
            params.l
        );
        assert!(
            (extent_y - params.w).abs() <= spacing + 1e-9,
            "row {}: y footprint {extent_y} vs w = {}",
            index + 1,
            params.w
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 2 took {elapsed:?}");
    println!("criterion 2 (golden shapes, 8 rows): PASS in {elapsed:?}");
}

// ── Criterion 3: round-trip recovery ────────────────────────────────────────

fn pipeline_fit(
    cloud: &PointCloud,
    depth_threshold: f64,
    inlier_tol: f64,
    seed: u64,
) -> dentfit::fit::FitReport {
    let frame = fit_plane_ransac(cloud, inlier_tol, 500, seed).unwrap();
    let local = to_local_frame(cloud, &frame);
    let segments = segment_dents(
        &local,
        &SegmentationConfig {
            depth_threshold,
            ..Default::default()
        },
    );
    assert_eq!(segments.len(), 1, "expected a single segment");
    let segment = anchor_ring(&segments[0], &local, 4.0);
    fit(
        &segment,
        &FitConfig {
            seed,
            ..FitConfig::default()
        },
    )
    .unwrap()
}

#[test]
fn criterion_3_round_trip_recovery() {
    let start = Instant::now();
    for &row_index in &[0usize, 1, 4, 7] {
        let truth = params_of(GOLDEN_ROWS[row_index]);

        // noiseless: parameter recovery
        let mut spec = SynthSpec::new(truth, Pose::new(0.0, 0.0, 0.0), 0.5);
        spec.margin = 8.0;
        let cloud = dentfit::synth::synth_cloud(&spec).unwrap();
        let report = pipeline_fit(&cloud, 0.05, 0.05, row_index as u64 + 1);
        let p = report.params;
        // a circular boundary makes a quarter turn with swapped axes an
        // exact model symmetry; either assignment is a faithful recovery
        let candidates: Vec<(f64, f64, f64, f64)> = if truth.p == 1.0 {
            vec![
                (truth.l, truth.w, truth.s_x, truth.s_y),
                (truth.w, truth.l, truth.s_y, -truth.s_x),
                (truth.w, truth.l, -truth.s_y, truth.s_x),
            ]
        } else {
            vec![(truth.l, truth.w, truth.s_x, truth.s_y)]
        };
        let matched = candidates.iter().any(|&(l, w, s_x, s_y)| {
            (p.l / l - 1.0).abs() <= 0.01
                && (p.w / w - 1.0).abs() <= 0.01
                && (p.s_x - s_x).abs() <= 0.02
                && (p.s_y - s_y).abs() <= 0.02
        });
        assert!(
            matched,
            "row {}: (l, w, s_x, s_y) = ({}, {}, {}, {}) matches no symmetry branch of the truth",
            row_index + 1,
            p.l,
            p.w,
            p.s_x,
            p.s_y
        );
        assert!(
            (p.d / truth.d - 1.0).abs() <= 0.01,
            "row {}: d {}",
            row_index + 1,
            p.d
        );
        assert!(
            (p.b / truth.b - 1.0).abs() <= 0.05,
            "row {}: b {}",
            row_index + 1,
            p.b
        );
        assert!(
            (p.p - truth.p).abs() <= 0.02,
            "row {}: p {}",
            row_index + 1,
            p.p
        );

        // scanner-grade noise: residual error at the noise floor
        spec.noise_sigma = 0.02;
        spec.seed = 77 + row_index as u64;
        let cloud = dentfit::synth::synth_cloud(&spec).unwrap();
        let report = pipeline_fit(&cloud, 0.1, 0.08, row_index as u64 + 1);
        assert!(
            report.mae <= 0.03,
            "row {}: noisy MAE {}",
            row_index + 1,
            report.mae
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "criterion 3 took {elapsed:?}"
    );
    println!("criterion 3 (round-trip recovery rows 1/2/5/8): PASS in {elapsed:?}");
}

// ── Criterion 4: simplified-vs-full comparison ──────────────────────────────

/// An oblique-impact-style asymmetric dent: shifted peak, non-default
/// base, slightly egg-shaped, with a small footprint shear and
/// scanner-grade noise so the target is not exactly in-family.
fn asymmetric_dent_cloud(seed: u64) -> Vec<LocalPoint> {
    let base = DentParams::new(6.10, 5.48, 1.24, 3.11, 1.01, -0.11, 0.0).unwrap();
    let reference = dentfit::model::ReferenceDent::for_params(&base).unwrap();
    let shear = 0.03;
    let spacing = 0.15;
    let noise = Normal::new(0.0, 0.0015).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    let n = (6.5 / spacing) as i64;
    let mut points = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let (x, y) = (i as f64 * spacing, j as f64 * spacing);
            let sheared_x = x + shear * y;
            let mut h = match reference.eval(sheared_x / base.l, y / base.w) {
                Some(v) => -base.d * v,
                None => 0.0,
            };
            h += noise.sample(&mut rng);
            points.push(LocalPoint::new(x, y, h));
        }
    }
    points
}

#[test]
fn criterion_4_simplified_vs_full_ratio() {
    let start = Instant::now();
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let points = asymmetric_dent_cloud(seed);
        let segments = segment_dents(
            &points,
            &SegmentationConfig {
                depth_threshold: 0.02,
                cell: 1.0,
                min_points: 50,
            },
        );
        assert_eq!(segments.len(), 1);
        let segment = anchor_ring(&segments[0], &points, 1.5);
        let config = FitConfig {
            seed,
            ..FitConfig::default()
        };
        let full = fit(&segment, &config).unwrap();
        let simplified = fit(
            &segment,
            &FitConfig {
                mode: FitMode::Simplified3,
                ..config
            },
        )
        .unwrap();
        let ratio = simplified.mae / full.mae;
        assert!(
            ratio >= 5.0,
            "seed {seed}: ratio {ratio:.2} (simplified {:.5}, full {:.5})",
            simplified.mae,
            full.mae
        );
        ratios.push(ratio);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let elapsed = start.elapsed();
    println!(
        "criterion 4 (simplified/full error ratio >= 5 across 10 seeds): PASS in {elapsed:?} \
         (mean ratio {mean:.1})"
    );
}

// ── Criterion 5: box-measure inconsistency ──────────────────────────────────

/// Brute-force oracle sharing only the length-direction convention with
/// the implementation (the sweep discretization is a declared design
/// decision): length from pairwise rim-cell distances near that direction,
/// width from same-line pairwise extents perpendicular to it, and depths
/// read directly off the winning chord cells.
fn srm_oracle(field: &HeightField, length_angle: f64) -> (f64, f64, f64, f64) {
    let mut cells: Vec<(f64, f64, f64)> = Vec::new();
    for (r, c, h) in field.finite_cells() {
        let (x, y) = field.position(r, c);
        cells.push((x, y, h));
    }
    let occupied: std::collections::HashSet<(i64, i64)> = field
        .finite_cells()
        .map(|(r, c, _)| (r as i64, c as i64))
        .collect();
    let rim: Vec<(f64, f64)> = field
        .finite_cells()
        .filter(|&(r, c, _)| {
            [
                (-1i64, -1i64),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ]
            .iter()
            .any(|&(dr, dc)| !occupied.contains(&(r as i64 + dr, c as i64 + dc)))
        })
        .map(|(r, c, _)| field.position(r, c))
        .collect();

    // longest rim-to-rim pair whose direction matches the length angle
    let mut best = 0.0f64;
    for (i, a) in rim.iter().enumerate() {
        for b in rim.iter().skip(i + 1) {
            let d2 = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
            let mut pair_angle = (b.1 - a.1).atan2(b.0 - a.0);
            if pair_angle < 0.0 {
                pair_angle += std::f64::consts::PI;
            }
            let mut delta = (pair_angle - length_angle).abs();
            delta = delta.min(std::f64::consts::PI - delta);
            if delta <= 1f64.to_radians() && d2 > best {
                best = d2;
            }
        }
    }
    let length = best.sqrt() + field.spacing;
    let (sin_w, cos_w) = (length_angle + FRAC_PI_2).sin_cos();

    // longest same-line pair perpendicular to the length direction
    let mut width = 0.0f64;
    let mut width_line = 0.0f64;
    for (i, a) in cells.iter().enumerate() {
        for b in cells.iter().skip(i + 1) {
            let along_a = a.0 * cos_w + a.1 * sin_w;
            let along_b = b.0 * cos_w + b.1 * sin_w;
            let perp_a = -a.0 * sin_w + a.1 * cos_w;
            let perp_b = -b.0 * sin_w + b.1 * cos_w;
            if (perp_a - perp_b).abs() <= 0.5 * field.spacing + 1e-12 {
                let extent = (along_a - along_b).abs();
                if extent > width {
                    width = extent;
                    width_line = 0.5 * (perp_a + perp_b);
                }
            }
        }
    }
    width += field.spacing;

    let mut section_min = f64::INFINITY;
    let mut overall_min = f64::INFINITY;
    for &(x, y, h) in &cells {
        let perp = -x * sin_w + y * cos_w;
        if (perp - width_line).abs() <= 0.5 * field.spacing + 1e-12 {
            section_min = section_min.min(h);
        }
        overall_min = overall_min.min(h);
    }
    (length, width, -section_min, -overall_min)
}

#[test]
fn criterion_5_box_measure_inconsistency() {
    let start = Instant::now();
    let params = params_of(GOLDEN_ROWS[7]);
    let spacing = 0.25;
    let field = sample_height_field(&params, spacing, 0.0).unwrap();
    let srm = srm_box_measures(&field).unwrap();

    assert!(
        srm.depth_at_width_section < srm.max_depth,
        "section depth {} must understate max depth {}",
        srm.depth_at_width_section,
        srm.max_depth
    );

    // a cell's worth of height variation bounds the allowed disagreement
    let mut max_step: f64 = 0.0;
    for (r, c, h) in field.finite_cells() {
        if c + 1 < field.cols {
            if let Some(next) = field.get(r, c + 1) {
                max_step = max_step.max((next - h).abs());
            }
        }
        if r + 1 < field.rows {
            if let Some(next) = field.get(r + 1, c) {
                max_step = max_step.max((next - h).abs());
            }
        }
    }

    let (o_length, o_width, o_section_depth, o_max_depth) = srm_oracle(&field, srm.length_angle);
    let gap = srm.depth_discrepancy();
    let oracle_gap = o_max_depth - o_section_depth;
    assert!(gap > 0.0 && oracle_gap > 0.0);
    assert!(
        (gap - oracle_gap).abs() <= max_step,
        "gap {gap} vs oracle {oracle_gap} (allowed {max_step})"
    );
    assert!(
        (srm.length - o_length).abs() <= 2.0 * spacing,
        "length {} vs {o_length}",
        srm.length
    );
    assert!(
        (srm.width - o_width).abs() <= 2.0 * spacing,
        "width {} vs {o_width}",
        srm.width
    );
    assert!((srm.max_depth - o_max_depth).abs() <= 1e-9);

    let elapsed = start.elapsed();
    println!(
        "criterion 5 (box-measure inconsistency, row 8): PASS in {elapsed:?} \
         (section depth {:.3} vs max depth {:.3})",
        srm.depth_at_width_section, srm.max_depth
    );
}

// ── Criterion 6: end-to-end at real-scan scale ──────────────────────────────

#[test]
fn criterion_6_real_scale_pipeline() {
    let start = Instant::now();
    // production scan clouds are proprietary; this synthetic stands in at
    // the same scale: 60 x 53 mm, 0.8 mm deep, 25 um noise
    let truth = DentParams::new(60.0, 53.0, 0.8, 8.0, 1.0, 0.01, 0.0).unwrap();
    let mut spec = SynthSpec::new(truth, Pose::new(0.0, 0.0, 0.0), 0.8);
    spec.margin = 10.0;
    spec.noise_sigma = 0.025;
    spec.seed = 2024;
    let flat = synth_local_points(&spec).unwrap();

    // tilt and lift into a scanner-like frame
    let tilt = 2f64.to_radians();
    let (sin_t, cos_t) = tilt.sin_cos();
    let cloud = PointCloud::new(
        flat.iter()
            .map(|p| {
                [
                    p.x,
                    p.y * cos_t - p.h * sin_t,
                    p.y * sin_t + p.h * cos_t + 3.0,
                ]
            })
            .collect(),
    );

    let report = pipeline_fit(&cloud, 0.06, 0.08, 6);
    assert!(report.converged, "fit did not converge");
    assert!(report.mae <= 0.03, "MAE {} above 0.03 mm", report.mae);
    assert!(
        (report.params.l / truth.l - 1.0).abs() <= 0.05,
        "l {}",
        report.params.l
    );
    assert!(
        (report.params.w / truth.w - 1.0).abs() <= 0.05,
        "w {}",
        report.params.w
    );
    assert!(
        (report.params.d / truth.d - 1.0).abs() <= 0.05,
        "d {}",
        report.params.d
    );

    let elapsed = start.elapsed();
    println!(
        "criterion 6 (real-scale pipeline, 60x53x0.8 mm at 25 um noise): PASS in {elapsed:?} \
         (MAE {:.4} mm)",
        report.mae
    );
}

// ── Criterion 7: pipeline robustness ────────────────────────────────────────

#[test]
fn criterion_7_pipeline_robustness() {
    let start = Instant::now();

    // plane recovery within 0.1 degree on tilted noisy planes
    let tilt = 10f64.to_radians();
    let (sin_t, cos_t) = tilt.sin_cos();
    let mut rng = StdRng::seed_from_u64(7);
    let gauss = Normal::new(0.0, 0.01).unwrap();
    let mut points = Vec::new();
    for i in 0..60 {
        for j in 0..60 {
            let (x, y) = (i as f64, j as f64);
            let z: f64 = gauss.sample(&mut rng);
            points.push([x, y * cos_t - z * sin_t, y * sin_t + z * cos_t]);
        }
    }
    let cloud = PointCloud::new(points);
    let truth = [0.0, -sin_t, cos_t];
    for frame in [
        fit_plane_lsq(&cloud).unwrap(),
        fit_plane_ransac(&cloud, 0.05, 300, 3).unwrap(),
    ] {
        let dot =
            (frame.normal[0] * truth[0] + frame.normal[1] * truth[1] + frame.normal[2] * truth[2])
                .abs()
                .clamp(-1.0, 1.0);
        let angle = dot.acos().to_degrees();
        assert!(angle < 0.1, "plane recovered {angle} degrees off");
    }

    // segmentation finds exactly the two planted dents
    let dent = DentParams::symmetric(24.0, 24.0, 3.0).unwrap();
    let reference = dentfit::model::ReferenceDent::for_params(&dent).unwrap();
    let gauss = Normal::new(0.0, 0.01).unwrap();
    let mut local = Vec::new();
    for i in -90..=90 {
        for j in -45..=45 {
            let (x, y) = (i as f64, j as f64);
            let mut h: f64 = gauss.sample(&mut rng);
            for center in [-50.0, 50.0] {
                if let Some(v) = reference.eval((x - center) / dent.l, y / dent.w) {
                    h -= dent.d * v;
                }
            }
            local.push(LocalPoint::new(x, y, h));
        }
    }
    let segments = segment_dents(
        &local,
        &SegmentationConfig {
            depth_threshold: dent.d / 10.0,
            ..Default::default()
        },
    );
    assert_eq!(segments.len(), 2, "expected exactly the two planted dents");

    // byte-identical reports for identical seeds
    let truth = params_of(GOLDEN_ROWS[5]);
    let mut spec = SynthSpec::new(truth, Pose::new(1.0, -2.0, 0.3), 0.6);
    spec.margin = 6.0;
    spec.noise_sigma = 0.02;
    spec.seed = 99;
    let cloud = dentfit::synth::synth_cloud(&spec).unwrap();
    let mut cloud_bytes = Vec::new();
    dentfit::cloud::write_xyz(&cloud, &mut cloud_bytes).unwrap();
    let run_once = || {
        let parsed = parse_xyz(cloud_bytes.as_slice()).unwrap();
        let frame = fit_plane_ransac(&parsed, 0.08, 500, 5).unwrap();
        let local = to_local_frame(&parsed, &frame);
        let segments = segment_dents(
            &local,
            &SegmentationConfig {
                depth_threshold: 0.1,
                ..Default::default()
            },
        );
        let reports: Vec<_> = segments
            .iter()
            .map(|s| {
                fit(
                    &anchor_ring(s, &local, 4.0),
                    &FitConfig {
                        seed: 11,
                        ..FitConfig::default()
                    },
                )
                .unwrap()
            })
            .collect();
        dentfit::jsonfmt::reports_json(&reports)
    };
    let first = run_once();
    let second = run_once();
    assert!(!first.is_empty() && first.contains("params"));
    assert_eq!(first, second, "same seed must give byte-identical JSON");

    let elapsed = start.elapsed();
    println!("criterion 7 (plane recovery, segmentation, determinism): PASS in {elapsed:?}");
}
