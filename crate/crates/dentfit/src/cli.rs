//! Command implementations behind the `dentfit` binary.
//!
//! Exit-code contract: 0 for success with at least one dent, 2 for a clean
//! run that found none, 1 for any failure. Output files are written whole
//! via a temp-and-rename so failures never leave partial files.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};

use crate::cloud::{
    fit_plane_lsq, fit_plane_ransac, parse_ply_ascii, parse_xyz, segment_dents, to_local_frame,
    write_xyz, DentSegment, PointCloud, SegmentationConfig,
};
use crate::fit::{
    anchor_ring, fit, fitted_srm, residual_stats, FitConfig, FitMode, FitReport, Pose,
};
use crate::jsonfmt;
use crate::model::{sample_height_field, srm_box_measures, DentParams, HeightField, SrmBox};
use crate::render::{bin_local_points, render_heatmap, HeatmapSpec};
use crate::synth::{synth_cloud, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_DENTS: i32 = 2;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dent cloud embedded in a flat patch.
    Synth(SynthArgs),
    /// Fit the dent model to every segment of a scanned cloud.
    Fit(FitArgs),
    /// Fit both the simplified and the full model and compare errors.
    Compare(CompareArgs),
    /// Extract traditional box measures from a cloud, grid or report.
    Srm(SrmArgs),
    /// Render a stored height grid as a heatmap image.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlaneMethod {
    Lsq,
    Ransac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full7,
    Simplified3,
}

impl From<ModeArg> for FitMode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Full7 => FitMode::Full7,
            ModeArg::Simplified3 => FitMode::Simplified3,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Dent length along its x-axis (mm).
    #[arg(long)]
    pub l: f64,
    /// Dent width along its y-axis (mm).
    #[arg(long)]
    pub w: f64,
    /// Maximum depth (mm).
    #[arg(long)]
    pub d: f64,
    /// Exponential base (> 1).
    #[arg(long, default_value_t = std::f64::consts::E)]
    pub b: f64,
    /// Egg-factor in (0, 2).
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Deepest-point shift along x, fraction of l.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub sx: f64,
    /// Deepest-point shift along y, fraction of w.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub sy: f64,
    /// Dent center x in the plane (mm).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub cx: f64,
    /// Dent center y in the plane (mm).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub cy: f64,
    /// In-plane rotation (degrees).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta_deg: f64,
    /// Grid pitch (mm).
    #[arg(long, default_value_t = 0.5)]
    pub spacing: f64,
    /// Flat band around the dent (mm).
    #[arg(long, default_value_t = 10.0)]
    pub margin: f64,
    /// Gaussian height noise sigma (mm).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output cloud path (.xyz).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the noiseless model height grid (HF v1).
    #[arg(long)]
    pub field: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Input cloud (.xyz or ascii .ply).
    pub input: PathBuf,
    /// Plane estimation method. The robust default survives dents that
    /// cover a large share of the patch; `lsq` suits pre-flattened data.
    #[arg(long, value_enum, default_value_t = PlaneMethod::Ransac)]
    pub plane: PlaneMethod,
    /// RANSAC inlier tolerance (mm).
    #[arg(long, default_value_t = 0.1)]
    pub inlier_tol: f64,
    /// RANSAC iterations.
    #[arg(long, default_value_t = 500)]
    pub ransac_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Segmentation depth threshold (mm).
    #[arg(long, default_value_t = 0.05)]
    pub depth_threshold: f64,
    /// Segmentation cell size (mm).
    #[arg(long, default_value_t = 2.0)]
    pub cell: f64,
    /// Minimum points per segment.
    #[arg(long, default_value_t = 50)]
    pub min_points: usize,
    /// Width of the flat anchor ring appended to each segment (mm).
    #[arg(long, default_value_t = 4.0)]
    pub ring_width: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Full7)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 8)]
    pub multistart: usize,
    #[arg(long, default_value_t = 20_000)]
    pub max_evals: usize,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Residual heatmap path (.ppm); segment k > 0 gets a `-k` suffix.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
    /// Heatmap full-red scale (mm).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Heatmap pixel pitch (mm).
    #[arg(long, default_value_t = 0.5)]
    pub pitch: f64,
    /// Write an empty report instead of nothing when no dents are found.
    #[arg(long)]
    pub allow_empty: bool,
    /// Directory for per-segment .xyz dumps (local frame).
    #[arg(long)]
    pub segments_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = 8)]
    pub multistart: usize,
    #[arg(long, default_value_t = 20_000)]
    pub max_evals: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub allow_empty: bool,
}

#[derive(Debug, Args)]
pub struct SrmArgs {
    /// Input: cloud (.xyz/.ply), height grid (HF v1) or fit report (.json).
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = PlaneMethod::Ransac)]
    pub plane: PlaneMethod,
    #[arg(long, default_value_t = 0.1)]
    pub inlier_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub ransac_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub depth_threshold: f64,
    #[arg(long, default_value_t = 2.0)]
    pub cell: f64,
    #[arg(long, default_value_t = 50)]
    pub min_points: usize,
    /// Binning pitch for empirical fields from clouds (mm).
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Input height grid (HF v1).
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Full-red scale (mm).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Synth(args) => run_synth(&args),
        Command::Fit(args) => run_fit(&args),
        Command::Compare(args) => run_compare(&args),
        Command::Srm(args) => run_srm(&args),
        Command::Render(args) => run_render(&args),
    }
}

// ── Helpers ─────────────────────────────────────────────────────────────────

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("invalid output path {}", path.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_cloud(path: &Path) -> Result<PointCloud> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let reader = BufReader::new(file);
    let by_extension = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let cloud = match by_extension.as_deref() {
        Some("ply") => parse_ply_ascii(reader)?,
        Some("xyz") | Some("txt") | Some("pts") => parse_xyz(reader)?,
        _ => {
            let head = fs::read_to_string(path)?;
            if head.starts_with("ply") {
                parse_ply_ascii(head.as_bytes())?
            } else {
                parse_xyz(head.as_bytes())?
            }
        }
    };
    Ok(cloud)
}

fn dent_params_from_args(args: &SynthArgs) -> Result<DentParams> {
    Ok(DentParams::new(
        args.l, args.w, args.d, args.b, args.p, args.sx, args.sy,
    )?)
}

/// Shared plane-removal and segmentation front end.
fn segments_from_cloud(args: &PipelineArgs) -> Result<Vec<DentSegment>> {
    let cloud = load_cloud(&args.input)?;
    let frame = match args.plane {
        PlaneMethod::Lsq => fit_plane_lsq(&cloud)?,
        PlaneMethod::Ransac => {
            fit_plane_ransac(&cloud, args.inlier_tol, args.ransac_iters, args.seed)?
        }
    };
    let local = to_local_frame(&cloud, &frame);
    let config = SegmentationConfig {
        depth_threshold: args.depth_threshold,
        cell: args.cell,
        min_points: args.min_points,
    };
    let segments = segment_dents(&local, &config);
    Ok(segments
        .into_iter()
        .map(|segment| anchor_ring(&segment, &local, args.ring_width))
        .collect())
}

fn indexed_path(path: &Path, index: usize) -> PathBuf {
    if index == 0 {
        return path.to_path_buf();
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned());
    let mut name = format!("{stem}-{index}");
    if let Some(ext) = ext {
        name.push('.');
        name.push_str(&ext);
    }
    path.with_file_name(name)
}

// ── Commands ────────────────────────────────────────────────────────────────

fn run_synth(args: &SynthArgs) -> Result<i32> {
    let params = dent_params_from_args(args)?;
    let pose = Pose::new(args.cx, args.cy, args.theta_deg.to_radians());
    let spec = SynthSpec {
        params,
        pose,
        spacing: args.spacing,
        margin: args.margin,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let cloud = synth_cloud(&spec)?;
    let mut bytes = Vec::new();
    write_xyz(&cloud, &mut bytes)?;
    write_atomic(&args.out, &bytes).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(field_path) = &args.field {
        let field = sample_height_field(&params, args.spacing, 0.0)?;
        let mut bytes = Vec::new();
        field.write(&mut bytes)?;
        write_atomic(field_path, &bytes)?;
    }
    eprintln!("wrote {} points to {}", cloud.len(), args.out.display());
    Ok(EXIT_OK)
}

fn fit_config(
    mode: FitMode,
    multistart: usize,
    max_evals: usize,
    pipeline: &PipelineArgs,
) -> FitConfig {
    FitConfig {
        mode,
        multistart,
        max_evals,
        ring_width: pipeline.ring_width,
        seed: pipeline.seed,
        ..FitConfig::default()
    }
}

fn run_fit(args: &FitArgs) -> Result<i32> {
    let segments = segments_from_cloud(&args.pipeline)?;
    if segments.is_empty() {
        eprintln!(
            "no dents found (threshold {} mm)",
            args.pipeline.depth_threshold
        );
        if args.allow_empty {
            emit(&args.out, "[]\n")?;
        }
        return Ok(EXIT_NO_DENTS);
    }
    if let Some(dir) = &args.segments_out {
        fs::create_dir_all(dir)?;
        for (index, segment) in segments.iter().enumerate() {
            let cloud = PointCloud::new(segment.points.iter().map(|p| [p.x, p.y, p.h]).collect());
            let mut bytes = Vec::new();
            write_xyz(&cloud, &mut bytes)?;
            write_atomic(&dir.join(format!("segment-{index}.xyz")), &bytes)?;
        }
    }
    let config = fit_config(
        args.mode.into(),
        args.multistart,
        args.max_evals,
        &args.pipeline,
    );
    let mut reports: Vec<FitReport> = Vec::new();
    for segment in &segments {
        reports.push(fit(segment, &config)?);
    }
    emit(&args.out, &jsonfmt::reports_json(&reports))?;

    if let Some(heatmap_path) = &args.heatmap {
        let spec = HeatmapSpec {
            scale: args.scale,
            pitch: args.pitch,
        };
        for (index, (segment, report)) in segments.iter().zip(&reports).enumerate() {
            let stats = residual_stats(segment, &report.params, &report.pose)?;
            let magnitudes: Vec<f64> = stats.residuals.iter().map(|r| r.abs()).collect();
            let grid = bin_local_points(&segment.points, &magnitudes, spec.pitch)?;
            let mut bytes = Vec::new();
            render_heatmap(&grid, &spec, &mut bytes)?;
            write_atomic(&indexed_path(heatmap_path, index), &bytes)?;
        }
    }
    Ok(EXIT_OK)
}

fn run_compare(args: &CompareArgs) -> Result<i32> {
    let segments = segments_from_cloud(&args.pipeline)?;
    if segments.is_empty() {
        eprintln!(
            "no dents found (threshold {} mm)",
            args.pipeline.depth_threshold
        );
        if args.allow_empty {
            emit(&args.out, "[]\n")?;
        }
        return Ok(EXIT_NO_DENTS);
    }
    let mut pairs = Vec::new();
    for segment in &segments {
        let simplified = fit(
            segment,
            &fit_config(
                FitMode::Simplified3,
                args.multistart,
                args.max_evals,
                &args.pipeline,
            ),
        )?;
        let full = fit(
            segment,
            &fit_config(
                FitMode::Full7,
                args.multistart,
                args.max_evals,
                &args.pipeline,
            ),
        )?;
        pairs.push((simplified, full));
    }
    emit(&args.out, &jsonfmt::compare_json(&pairs))?;
    Ok(EXIT_OK)
}

/// Empirical height field of a segment: per-cell mean heights with cells
/// shallower than the threshold blanked, so the measures trace the dented
/// footprint rather than the surrounding flat patch.
fn empirical_field(segment: &DentSegment, pitch: f64, depth_threshold: f64) -> Result<HeightField> {
    let heights: Vec<f64> = segment.points.iter().map(|p| p.h).collect();
    let mut field = bin_local_points(&segment.points, &heights, pitch)?;
    for row in 0..field.rows {
        for col in 0..field.cols {
            if let Some(h) = field.get(row, col) {
                if h > -depth_threshold {
                    field.set(row, col, None);
                }
            }
        }
    }
    if field.finite_count() == 0 {
        bail!("segment has no cells below the depth threshold");
    }
    Ok(field)
}

fn params_from_json(value: &serde_json::Value) -> Result<DentParams> {
    let params = value
        .get("params")
        .ok_or_else(|| anyhow!("report is missing the `params` object"))?;
    let field = |name: &str| -> Result<f64> {
        params
            .get(name)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| anyhow!("report params missing numeric `{name}`"))
    };
    Ok(DentParams::new(
        field("l")?,
        field("w")?,
        field("d")?,
        field("b")?,
        field("p")?,
        field("s_x")?,
        field("s_y")?,
    )?)
}

fn run_srm(args: &SrmArgs) -> Result<i32> {
    let head = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let trimmed = head.trim_start();

    if trimmed.starts_with("HF v1") {
        let field = HeightField::read(head.as_bytes())?;
        let srm = srm_box_measures(&field)?;
        emit(&args.out, &format!("{}\n", jsonfmt::srm_only_json(&srm)))?;
        return Ok(EXIT_OK);
    }

    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        let value: serde_json::Value =
            serde_json::from_str(&head).context("parsing report JSON")?;
        let measures: Vec<SrmBox> = match &value {
            serde_json::Value::Array(entries) => entries
                .iter()
                .map(|entry| Ok(fitted_srm(&params_from_json(entry)?)?))
                .collect::<Result<_>>()?,
            object => vec![fitted_srm(&params_from_json(object)?)?],
        };
        let text = if value.is_array() {
            jsonfmt::srm_array_json(&measures)
        } else {
            format!("{}\n", jsonfmt::srm_only_json(&measures[0]))
        };
        emit(&args.out, &text)?;
        return Ok(EXIT_OK);
    }

    // otherwise treat it as a cloud and measure each segment empirically
    let pipeline = PipelineArgs {
        input: args.input.clone(),
        plane: args.plane,
        inlier_tol: args.inlier_tol,
        ransac_iters: args.ransac_iters,
        seed: args.seed,
        depth_threshold: args.depth_threshold,
        cell: args.cell,
        min_points: args.min_points,
        ring_width: 0.0,
    };
    let segments = segments_from_cloud(&pipeline)?;
    if segments.is_empty() {
        eprintln!("no dents found (threshold {} mm)", args.depth_threshold);
        return Ok(EXIT_NO_DENTS);
    }
    let mut measures = Vec::new();
    for segment in &segments {
        let field = empirical_field(segment, args.spacing, args.depth_threshold)?;
        measures.push(srm_box_measures(&field)?);
    }
    emit(&args.out, &jsonfmt::srm_array_json(&measures))?;
    Ok(EXIT_OK)
}

fn run_render(args: &RenderArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let field = HeightField::read(text.as_bytes())?;
    let spec = HeatmapSpec {
        scale: args.scale,
        ..HeatmapSpec::default()
    };
    let mut bytes = Vec::new();
    render_heatmap(&field, &spec, &mut bytes)?;
    write_atomic(&args.out, &bytes)?;
    Ok(EXIT_OK)
}
