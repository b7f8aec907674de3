use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use nbv_core::field::{raw_density, train as fit, write_checkpoint, TrainView, VoxelField};
use nbv_core::planner::{evaluate_views, init_split};

use super::{load_dataset, output_dir, write_text};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Run configuration; training parameters and split come from it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train on every view instead of the initial training split.
    #[arg(long)]
    pub all_views: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn train(args: &TrainArgs, root: &Path) -> CliResult<PathBuf> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let ds = load_dataset(&args.dataset)?;
    let split = init_split(ds.len(), cfg.init_frac, cfg.test_frac, cfg.min_init, cfg.seed)
        .map_err(CliError::core("splitting dataset"))?;
    let ids: Vec<usize> = if args.all_views { (0..ds.len()).collect() } else { split.train.clone() };
    let planner = cfg.planner(ds.manifest.render);
    let mut field = VoxelField::filled(
        cfg.grid_dims.unwrap_or(ds.manifest.grid_dims),
        ds.manifest.extent().map_err(CliError::core("manifest extent"))?,
        raw_density(cfg.init_density),
        0.0,
    )
    .map_err(CliError::core("initial field"))?;
    let views: Vec<TrainView> = ids
        .iter()
        .map(|&i| TrainView {
            camera: &ds.cameras[i],
            image: &ds.images[i],
        })
        .collect();
    let mut train_cfg = planner.train;
    train_cfg.iterations = args.iterations.unwrap_or(cfg.initial_iterations);
    let trace = fit(&mut field, &views, &train_cfg).map_err(CliError::core("training"))?;

    let dir = output_dir(&args.out, root, format!("train-{}", cfg.seed))?;
    let ckpt = dir.join("field.bin");
    write_checkpoint(&ckpt, &field).map_err(CliError::core("writing checkpoint"))?;
    let mut loss = String::from("iteration,loss\n");
    for (i, l) in trace.losses.iter().enumerate() {
        writeln!(loss, "{i},{l}").expect("string write");
    }
    write_text(&dir.join("loss.csv"), &loss)?;
    cfg.save(&dir.join("run_config.json"))?;
    let (p, s) = evaluate_views(&field, &ds, &split.test, &ds.manifest.render).map_err(CliError::core("evaluating"))?;
    println!(
        "trained on {} views for {} iterations; test PSNR {p:.3} dB, SSIM {s:.4}; checkpoint {}",
        ids.len(),
        trace.losses.len(),
        ckpt.display()
    );
    Ok(ckpt)
}
