use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use nbv_core::field::write_checkpoint;
use nbv_core::planner::{init_split, run_incremental, run_incremental_with, write_trace, SelectionState, Strategy, StrategyKind};
use nbv_core::uncertainty::write_score_csv;
use serde::{Deserialize, Serialize};

use super::{load_dataset, output_dir, write_json, write_text};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Start from a saved run configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub init_frac: Option<f64>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    #[arg(long)]
    pub budget_frac: Option<f64>,
    #[arg(long)]
    pub min_init: Option<usize>,
    /// Training iterations after each selection.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Training iterations on the initial split.
    #[arg(long)]
    pub initial_iterations: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub term_tau: Option<f64>,
    #[arg(long)]
    pub eps_rel: Option<f64>,
    /// Planar Voronoi raster resolution.
    #[arg(long)]
    pub voronoi_resolution: Option<usize>,
    /// Fraction of pixels rendered when scoring a candidate.
    #[arg(long)]
    pub ray_fraction: Option<f64>,
    #[arg(long)]
    pub psnr_target: Option<f64>,
    /// Record per-round wall time in the trace (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Write a field checkpoint after every round.
    #[arg(long)]
    pub round_checkpoints: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SelectArgs {
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident <- $arg:ident),* $(,)?) => {
                $(if let Some(v) = self.$arg { c.$field = v; })*
            };
        }
        set!(
            strategy <- strategy,
            seed <- seed,
            init_frac <- init_frac,
            test_frac <- test_frac,
            budget_frac <- budget_frac,
            min_init <- min_init,
            iterations_per_round <- iterations,
            initial_iterations <- initial_iterations,
            learning_rate <- learning_rate,
            samples_per_ray <- samples,
            term_tau <- term_tau,
            eps_rel <- eps_rel,
            voronoi_resolution_2d <- voronoi_resolution,
            ray_fraction <- ray_fraction,
        );
        if self.psnr_target.is_some() {
            c.psnr_target = self.psnr_target;
        }
        c.record_timing |= self.timing;
        c.save_round_checkpoints |= self.round_checkpoints;
        c.validate()?;
        Ok(c)
    }
}

/// Contents of `final.json` in a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub rounds: usize,
    pub final_psnr: f64,
    pub final_ssim: f64,
    pub n_views: usize,
    pub train_ids: Vec<usize>,
    pub candidate_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

pub fn select(args: &SelectArgs, root: &Path) -> CliResult<PathBuf> {
    let cfg = args.resolve()?;
    let ds = load_dataset(&args.dataset)?;
    let dir = output_dir(&args.out, root, format!("select-{}-{}", cfg.strategy, cfg.seed))?;
    cfg.save(&dir.join("run_config.json"))?;

    let split = init_split(ds.len(), cfg.init_frac, cfg.test_frac, cfg.min_init, cfg.seed)
        .map_err(CliError::core("splitting dataset"))?;
    let planner = cfg.planner(ds.manifest.render);
    let mut state = SelectionState::new(&ds, split, &planner).map_err(CliError::core("initial state"))?;
    let strategy = Strategy {
        kind: cfg.strategy,
        seed: cfg.seed,
    };
    let outcome = if cfg.save_round_checkpoints {
        run_with_checkpoints(&mut state, &strategy, &planner, &dir)
    } else {
        run_incremental(&mut state, &strategy, &planner).map_err(CliError::core(format!("round {}", state.round)))
    };

    // The trace is written even when a round failed.
    write_trace(&dir.join("trace.csv"), &state.trace).map_err(CliError::core("writing trace"))?;
    let scores_dir = dir.join("scores");
    for (round, scores) in state.scores.iter().enumerate().filter(|(_, s)| !s.is_empty()) {
        std::fs::create_dir_all(&scores_dir).map_err(|e| CliError::data(&scores_dir, e))?;
        let selected = state.trace[round].selected_id;
        write_score_csv(&scores_dir.join(format!("round_{round:03}.csv")), scores, Some(selected))
            .map_err(CliError::core("writing scores"))?;
    }
    outcome?;

    write_checkpoint(&dir.join("field.bin"), &state.field).map_err(CliError::core("writing checkpoint"))?;
    let fin = FinalMetrics {
        strategy: cfg.strategy,
        seed: cfg.seed,
        rounds: state.trace.len(),
        final_psnr: state.latest_psnr.unwrap_or(f64::NAN),
        final_ssim: state.latest_ssim.unwrap_or(f64::NAN),
        n_views: ds.len(),
        train_ids: state.train_ids.clone(),
        candidate_ids: state.candidate_ids.clone(),
        test_ids: state.test_ids.clone(),
    };
    write_json(&dir.join("final.json"), &fin)?;

    let mut text = String::new();
    writeln!(text, "strategy: {}", cfg.strategy).unwrap();
    writeln!(text, "seed: {}", cfg.seed).unwrap();
    writeln!(text, "trajectory: {:?}", state.trajectory_class().label).unwrap();
    writeln!(
        text,
        "training views: {} of {} ({:.1}%)",
        fin.train_ids.len(),
        fin.n_views,
        100.0 * fin.train_ids.len() as f64 / fin.n_views as f64
    )
    .unwrap();
    writeln!(text, "final test PSNR: {:.4} dB", fin.final_psnr).unwrap();
    writeln!(text, "final test SSIM: {:.4}", fin.final_ssim).unwrap();
    writeln!(text, "rounds:").unwrap();
    for r in &state.trace {
        writeln!(text, "  {:>3}  view {:>4}  psnr {:.4}  ssim {:.4}", r.round, r.selected_id, r.psnr, r.ssim).unwrap();
    }
    write_text(&dir.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(dir)
}

fn run_with_checkpoints(
    state: &mut SelectionState<'_>,
    strategy: &Strategy,
    planner: &nbv_core::planner::PlannerConfig,
    dir: &Path,
) -> CliResult<()> {
    let ckpt_dir = dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir).map_err(|e| CliError::data(&ckpt_dir, e))?;
    run_incremental_with(state, strategy, planner, |s| {
        write_checkpoint(&ckpt_dir.join(format!("round_{:03}.bin", s.round)), &s.field)
    })
    .map_err(CliError::core(format!("round {}", state.round)))
}
