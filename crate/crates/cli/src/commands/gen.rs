use std::path::{Path, PathBuf};

use clap::Args;
use nbv_core::field::RenderConfig;
use nbv_core::geom::{classify_trajectory, PointSet, TrajectoryLabel};
use nbv_core::scenegen::{generate_scene, generate_trajectory, render_dataset, SceneSpec, TrajectoryKind, TrajectorySpec};
use serde::Serialize;

use super::{output_dir, write_json};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value = "lawnmower")]
    pub kind: TrajectoryKind,
    #[arg(long, default_value_t = 100)]
    pub views: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ground-truth grid resolution per axis.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    /// Image width and height in pixels.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Samples per ray for the ground-truth renders.
    #[arg(long, default_value_t = 128)]
    pub samples: usize,
    #[arg(long)]
    pub altitude: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Total altitude change of a helix.
    #[arg(long)]
    pub sweep: Option<f64>,
    #[arg(long)]
    pub boxes: Option<usize>,
    #[arg(long)]
    pub spheres: Option<usize>,
    /// Planarity threshold used for the printed classification.
    #[arg(long, default_value_t = 0.05)]
    pub eps_rel: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenSummary {
    pub dir: PathBuf,
    pub views: usize,
    pub kind: TrajectoryKind,
    pub label: TrajectoryLabel,
    pub hausdorff: f64,
    pub threshold: f64,
}

pub fn gen(args: &GenArgs, root: &Path) -> CliResult<GenSummary> {
    if args.size == 0 || args.samples == 0 {
        return Err(CliError::Config("--size and --samples must be positive".into()));
    }
    let defaults = SceneSpec::default();
    let scene = SceneSpec {
        seed: args.seed,
        dims: [args.grid; 3],
        boxes: args.boxes.unwrap_or(defaults.boxes),
        spheres: args.spheres.unwrap_or(defaults.spheres),
        ..defaults
    };
    let t = TrajectorySpec::default();
    let traj = TrajectorySpec {
        kind: args.kind,
        n_views: args.views,
        altitude: args.altitude.unwrap_or(t.altitude),
        radius: args.radius.unwrap_or(t.radius),
        sweep: args.sweep.unwrap_or(t.sweep),
        seed: args.seed,
        width: args.size,
        height: args.size,
        ..t
    };
    let dir = output_dir(&args.out, root, format!("dataset-{}-{}", args.kind, args.seed))?;
    let gt = generate_scene(&scene).map_err(CliError::core("generating scene"))?;
    let cams = generate_trajectory(&traj).map_err(CliError::core("generating trajectory"))?;
    let render = RenderConfig {
        n_samples: args.samples,
        ..RenderConfig::default()
    };
    let ds = render_dataset(&gt, &cams, (args.size, args.size), &render, args.kind, &dir)
        .map_err(CliError::core("rendering dataset"))?;
    write_json(&dir.join("scene.json"), &scene)?;
    write_json(&dir.join("trajectory.json"), &traj)?;

    let positions = PointSet::new(ds.cameras.iter().map(|c| c.position).collect()).map_err(CliError::core("poses"))?;
    let class = classify_trajectory(&positions, args.eps_rel).map_err(CliError::core("classifying trajectory"))?;
    let summary = GenSummary {
        dir: dir.clone(),
        views: ds.len(),
        kind: args.kind,
        label: class.label,
        hausdorff: class.hausdorff_value,
        threshold: class.threshold_used,
    };
    println!(
        "dataset {}: {} views ({}), {}x{} px, grid {:?}, trajectory {:?} (H = {:.4}, threshold {:.4})",
        dir.display(),
        summary.views,
        args.kind,
        args.size,
        args.size,
        ds.manifest.grid_dims,
        class.label,
        class.hausdorff_value,
        class.threshold_used
    );
    Ok(summary)
}
