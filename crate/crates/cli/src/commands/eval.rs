use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use nbv_core::field::{read_checkpoint, render_view};
use nbv_core::image::Image;
use nbv_core::metrics::{ause, pixel_errors, psnr, srcc, ssim, DEFAULT_STEPS};
use nbv_core::pfm;
use nbv_core::planner::init_split;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{load_dataset, output_dir, write_json, write_text};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Field checkpoint to evaluate.
    #[arg(long)]
    pub field: PathBuf,
    /// Run configuration defining the test split; defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluate every view rather than the test split.
    #[arg(long)]
    pub all_views: bool,
    /// Sparsification steps for AUSE.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One row of `eval_views.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewEval {
    pub view_id: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub mse: f64,
    pub mean_uncertainty: f64,
    pub ause: f64,
    pub ause_random: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n_views: usize,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    /// Absent-marker: no perceptual network is bundled.
    pub lpips: Option<f64>,
    pub srcc: f64,
    pub srcc_defined: bool,
    pub mean_ause: f64,
    pub mean_ause_random: f64,
    pub views: Vec<ViewEval>,
}

pub const EVAL_HEADER: &str = "view_id,psnr,ssim,lpips,mse,mean_uncertainty,ause,ause_random";

pub fn eval(args: &EvalArgs, root: &Path) -> CliResult<EvalSummary> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let ds = load_dataset(&args.dataset)?;
    let field = read_checkpoint(&args.field).map_err(CliError::core(format!("reading {}", args.field.display())))?;
    let extent = ds.manifest.extent().map_err(CliError::core("manifest extent"))?;
    if field.extent() != &extent {
        return Err(CliError::data(&args.field, "field extent does not match the dataset manifest"));
    }
    let ids: Vec<usize> = if args.all_views {
        (0..ds.len()).collect()
    } else {
        init_split(ds.len(), cfg.init_frac, cfg.test_frac, cfg.min_init, cfg.seed)
            .map_err(CliError::core("splitting dataset"))?
            .test
    };
    let dir = output_dir(&args.out, root, format!("eval-{}", cfg.seed))?;
    let maps = dir.join("uncertainty");
    let curves = dir.join("sparsification");
    for d in [&maps, &curves] {
        std::fs::create_dir_all(d).map_err(|e| CliError::data(d, e))?;
    }

    let mut views = Vec::with_capacity(ids.len());
    for &id in &ids {
        let gt = &ds.images[id];
        let r = render_view(&field, &ds.cameras[id], &ds.manifest.render, id as u64);
        let img = r.mean_image();
        let errors = pixel_errors(&img, gt).map_err(CliError::core("pixel errors"))?;
        let mse = errors.iter().sum::<f64>() / errors.len() as f64;
        let a = ause(&r.variance, &errors, args.steps).map_err(CliError::core(format!("AUSE of view {id}")))?;
        let mut shuffled = r.variance.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ id as u64));
        let a_rand = ause(&shuffled, &errors, args.steps).map_err(CliError::core("AUSE baseline"))?;
        a.curve
            .write_csv(&curves.join(format!("{id}.csv")))
            .map_err(CliError::core("writing curve"))?;
        let map = Image::new(r.width, r.height, 1, r.variance.iter().map(|&v| v as f32).collect())
            .map_err(CliError::core("uncertainty map"))?;
        pfm::write(&maps.join(format!("{id}.pfm")), &map).map_err(CliError::core("writing uncertainty map"))?;
        views.push(ViewEval {
            view_id: id,
            psnr: psnr(&img, gt).map_err(CliError::core("psnr"))?,
            ssim: ssim(&img, gt).map_err(CliError::core("ssim"))?,
            mse,
            mean_uncertainty: r.variance.iter().sum::<f64>() / r.variance.len() as f64,
            ause: a.value,
            ause_random: a_rand.value,
        });
    }
    let n = views.len() as f64;
    let mean = |f: fn(&ViewEval) -> f64| views.iter().map(f).sum::<f64>() / n;
    let (rho, defined) = if views.len() >= 3 {
        let u: Vec<f64> = views.iter().map(|v| v.mean_uncertainty).collect();
        let e: Vec<f64> = views.iter().map(|v| v.mse).collect();
        let c = srcc(&u, &e).map_err(CliError::core("srcc"))?;
        (c.value, c.defined)
    } else {
        (0.0, false)
    };
    let summary = EvalSummary {
        n_views: views.len(),
        mean_psnr: mean(|v| v.psnr),
        mean_ssim: mean(|v| v.ssim),
        lpips: None,
        srcc: rho,
        srcc_defined: defined,
        mean_ause: mean(|v| v.ause),
        mean_ause_random: mean(|v| v.ause_random),
        views: views.clone(),
    };

    let mut csv = format!("{EVAL_HEADER}\n");
    for v in &views {
        writeln!(
            csv,
            "{},{},{},NA,{},{},{},{}",
            v.view_id, v.psnr, v.ssim, v.mse, v.mean_uncertainty, v.ause, v.ause_random
        )
        .unwrap();
    }
    write_text(&dir.join("eval_views.csv"), &csv)?;
    write_json(&dir.join("eval_summary.json"), &summary)?;
    println!(
        "{} views: PSNR {:.4} dB, SSIM {:.4}, LPIPS n/a, SRCC {:.4}{}, AUSE {:.5} (random {:.5})",
        summary.n_views,
        summary.mean_psnr,
        summary.mean_ssim,
        summary.srcc,
        if defined { "" } else { " (undefined)" },
        summary.mean_ause,
        summary.mean_ause_random
    );
    Ok(summary)
}
