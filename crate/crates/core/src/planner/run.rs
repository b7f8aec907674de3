use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::split::{ceil_frac, Split};
use super::trace::RoundRecord;
use super::{Strategy, StrategyKind};
use crate::field::{raw_density, render_view, train, RenderConfig, TrainConfig, TrainView, VoxelField};
use crate::geom::{classify_trajectory, PointSet, TrajectoryClass};
use crate::metrics::{psnr, ssim};
use crate::scenegen::Dataset;
use crate::seed;
use crate::uncertainty::{
    argmax, min_max, normalize_scores, positional_uncertainty, rendering_uncertainty, CandidateScore,
    PositionalContext, UncertaintyConfig,
};
use crate::{Error, Result};

/// Source of the per-site Voronoi weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Uniform,
    /// Weights from the training views' normalized rendering uncertainty in
    /// the current round, floored at 0.05.
    RenderingUncertainty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Initial training fraction; together with `budget_frac` it caps the
    /// final training set size.
    pub init_frac: f64,
    pub budget_frac: f64,
    /// Stop early once the mean test PSNR reaches this value.
    pub psnr_target: Option<f64>,
    pub initial_iterations: usize,
    /// Per-round warm-start training; `train.seed` is the base of the
    /// per-round training seeds.
    pub train: TrainConfig,
    pub uncertainty: UncertaintyConfig,
    pub eps_rel: f64,
    pub weight_mode: WeightMode,
    /// Renderer for test-view evaluation.
    pub eval_render: RenderConfig,
    /// Initial density of every voxel, per world unit.
    pub init_density: f64,
    /// Reconstruction grid; the dataset's ground-truth grid when `None`.
    pub field_dims: Option<[usize; 3]>,
    pub record_timing: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            init_frac: 0.15,
            budget_frac: 0.15,
            psnr_target: None,
            initial_iterations: 120,
            train: TrainConfig {
                iterations: 40,
                ..TrainConfig::default()
            },
            uncertainty: UncertaintyConfig::default(),
            eps_rel: 0.05,
            weight_mode: WeightMode::Uniform,
            eval_render: RenderConfig::default(),
            init_density: 1.0,
            field_dims: None,
            record_timing: false,
        }
    }
}

/// Number of selections allowed. The final training set holds
/// `ceil(init_frac N) + ceil(budget_frac N)` views, so views added to the
/// initial split by the minimum-size rule count against the budget.
pub fn selection_budget(n: usize, init_frac: f64, budget_frac: f64, initial_train: usize) -> usize {
    (ceil_frac(init_frac, n) + ceil_frac(budget_frac, n)).saturating_sub(initial_train)
}

/// Outcome of one selection step.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub view_id: usize,
    /// Scores of every candidate, empty for the baselines. Ablations carry
    /// the unused component as zero.
    pub scores: Vec<CandidateScore>,
    pub sigma_rgb2: Option<f64>,
    pub sigma_pos2: Option<f64>,
    pub hybrid: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SelectionState<'a> {
    pub dataset: &'a Dataset,
    pub train_ids: Vec<usize>,
    pub candidate_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub field: VoxelField,
    pub round: usize,
    pub trace: Vec<RoundRecord>,
    /// Candidate scores per selection round (empty rows for baselines).
    pub scores: Vec<Vec<CandidateScore>>,
    /// Test metrics of the current field, once evaluated.
    pub latest_psnr: Option<f64>,
    pub latest_ssim: Option<f64>,
    class: TrajectoryClass,
}

impl<'a> SelectionState<'a> {
    /// Fresh state with a uniform initial field on the dataset's grid.
    pub fn new(dataset: &'a Dataset, split: Split, config: &PlannerConfig) -> Result<Self> {
        let n = dataset.len();
        let mut seen = vec![false; n];
        for &id in split.train.iter().chain(&split.candidates).chain(&split.test) {
            if id >= n || std::mem::replace(&mut seen[id], true) {
                return Err(Error::invalid(format!("split id {id} is out of range or repeated")));
            }
        }
        if split.train.is_empty() || split.test.is_empty() {
            return Err(Error::invalid("split needs training and test views"));
        }
        if !(config.init_density > 0.0) {
            return Err(Error::invalid("initial density must be positive"));
        }
        let positions = PointSet::new(dataset.cameras.iter().map(|c| c.position).collect())?;
        let class = classify_trajectory(&positions, config.eps_rel)?;
        let field = VoxelField::filled(
            config.field_dims.unwrap_or(dataset.manifest.grid_dims),
            dataset.manifest.extent()?,
            raw_density(config.init_density),
            0.0,
        )?;
        Ok(Self {
            dataset,
            train_ids: split.train,
            candidate_ids: split.candidates,
            test_ids: split.test,
            field,
            round: 0,
            trace: Vec::new(),
            scores: Vec::new(),
            latest_psnr: None,
            latest_ssim: None,
            class,
        })
    }

    pub fn trajectory_class(&self) -> &TrajectoryClass {
        &self.class
    }

    /// Override the trajectory label used for positional scoring.
    pub fn set_trajectory_class(&mut self, class: TrajectoryClass) {
        self.class = class;
    }

    fn train_views(&self) -> Vec<TrainView<'a>> {
        let ds = self.dataset;
        self.train_ids
            .iter()
            .map(|&i| TrainView {
                camera: &ds.cameras[i],
                image: &ds.images[i],
            })
            .collect()
    }
}

/// Mean PSNR and SSIM of `field` over the given views.
pub fn evaluate_views(field: &VoxelField, dataset: &Dataset, ids: &[usize], render: &RenderConfig) -> Result<(f64, f64)> {
    if ids.is_empty() {
        return Err(Error::invalid("no views to evaluate"));
    }
    let mut p = 0.0;
    let mut s = 0.0;
    for &id in ids {
        let img = render_view(field, &dataset.cameras[id], render, id as u64).mean_image();
        p += psnr(&img, &dataset.images[id])?;
        s += ssim(&img, &dataset.images[id])?;
    }
    Ok((p / ids.len() as f64, s / ids.len() as f64))
}

fn positional_context(state: &SelectionState<'_>, config: &PlannerConfig, round_seed: u64) -> Result<PositionalContext> {
    let ds = state.dataset;
    let weights = match config.weight_mode {
        WeightMode::Uniform => vec![1.0; state.train_ids.len()],
        WeightMode::RenderingUncertainty => {
            let decoded = state.field.decode();
            let rgb = RgbSeed(round_seed).config(config);
            let raw: Vec<f64> = state
                .train_ids
                .par_iter()
                .map(|&i| rendering_uncertainty(&decoded, &ds.cameras[i], &ds.images[i], &rgb, i as u64))
                .collect::<Result<_>>()?;
            min_max(&raw).into_iter().map(|v| v.max(0.05)).collect()
        }
    };
    let train = PointSet::new(state.train_ids.iter().map(|&i| ds.cameras[i].position).collect())?;
    let extent: Vec<_> = ds.cameras.iter().map(|c| c.position).collect();
    PositionalContext::new(state.class, train, weights, &extent, config.uncertainty.positional)
}

struct RgbSeed(u64);

impl RgbSeed {
    fn config(&self, config: &PlannerConfig) -> crate::uncertainty::RgbConfig {
        crate::uncertainty::RgbConfig {
            seed: seed::derive(config.uncertainty.rgb.seed, &[self.0]),
            ..config.uncertainty.rgb
        }
    }
}

fn lowest_id_argmax(ids: &[usize], key: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    for i in 1..ids.len() {
        let (a, b) = (key(i), key(best));
        if a > b || (a == b && ids[i] < ids[best]) {
            best = i;
        }
    }
    best
}

/// Choose the next view among the current candidates.
pub fn select_next(state: &SelectionState<'_>, strategy: &Strategy, config: &PlannerConfig) -> Result<Selection> {
    let ids = &state.candidate_ids;
    if ids.is_empty() {
        return Err(Error::Exhausted);
    }
    let ds = state.dataset;
    let round_seed = seed::derive(strategy.seed, &[state.round as u64]);
    let baseline = |view_id| Selection {
        view_id,
        scores: Vec::new(),
        sigma_rgb2: None,
        sigma_pos2: None,
        hybrid: None,
    };
    match strategy.kind {
        StrategyKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(round_seed);
            Ok(baseline(ids[rng.gen_range(0..ids.len())]))
        }
        StrategyKind::Fvs => {
            let dist = |i: usize| {
                let p = ds.cameras[ids[i]].position;
                state
                    .train_ids
                    .iter()
                    .map(|&t| (ds.cameras[t].position - p).norm())
                    .fold(f64::INFINITY, f64::min)
            };
            Ok(baseline(ids[lowest_id_argmax(ids, dist)]))
        }
        kind => {
            let want_rgb = kind != StrategyKind::PositionalOnly;
            let want_pos = kind != StrategyKind::RenderingOnly;
            let rgb_cfg = RgbSeed(round_seed).config(config);
            let rgb: Vec<f64> = if want_rgb {
                let decoded = state.field.decode();
                ids.par_iter()
                    .map(|&i| rendering_uncertainty(&decoded, &ds.cameras[i], &ds.images[i], &rgb_cfg, i as u64))
                    .collect::<Result<_>>()?
            } else {
                vec![0.0; ids.len()]
            };
            let pos: Vec<f64> = if want_pos {
                let ctx = positional_context(state, config, round_seed)?;
                ids.par_iter()
                    .map(|&i| positional_uncertainty(&ctx, &ds.cameras[i].position))
                    .collect::<Result<_>>()?
            } else {
                vec![0.0; ids.len()]
            };
            let scores = normalize_scores(ids, &rgb, &pos)?;
            let best = match kind {
                StrategyKind::Hybrid => argmax(&scores, |s| s.hybrid).expect("non-empty"),
                StrategyKind::RenderingOnly => lowest_id_argmax(ids, |i| rgb[i]),
                _ => lowest_id_argmax(ids, |i| pos[i]),
            };
            let s = scores[best];
            Ok(Selection {
                view_id: s.view_id,
                sigma_rgb2: want_rgb.then_some(s.sigma_rgb2),
                sigma_pos2: want_pos.then_some(s.sigma_pos2),
                hybrid: (kind == StrategyKind::Hybrid).then_some(s.hybrid),
                scores,
            })
        }
    }
}

fn retrain(state: &mut SelectionState<'_>, config: &PlannerConfig) -> Result<()> {
    let iterations = if state.round == 0 && state.trace.is_empty() {
        config.initial_iterations
    } else {
        config.train.iterations
    };
    let cfg = TrainConfig {
        iterations,
        seed: seed::derive(config.train.seed, &[state.round as u64]),
        ..config.train
    };
    let views = state.train_views();
    let mut field = state.field.clone();
    train(&mut field, &views, &cfg)?;
    state.field = field;
    Ok(())
}

/// Train, evaluate, select and repeat until the selection budget or the PSNR
/// target is reached. On error the state keeps every completed round.
pub fn run_incremental(state: &mut SelectionState<'_>, strategy: &Strategy, config: &PlannerConfig) -> Result<()> {
    run_incremental_with(state, strategy, config, |_| Ok(()))
}

/// [`run_incremental`] with a hook called after every training and
/// evaluation pass, before the stopping check.
pub fn run_incremental_with(
    state: &mut SelectionState<'_>,
    strategy: &Strategy,
    config: &PlannerConfig,
    mut after_training: impl FnMut(&SelectionState<'_>) -> Result<()>,
) -> Result<()> {
    if !(config.budget_frac > 0.0) {
        return Err(Error::invalid("budget fraction must be positive"));
    }
    let budget = selection_budget(state.dataset.len(), config.init_frac, config.budget_frac, state.train_ids.len());
    let mut selections = 0;
    loop {
        let start = Instant::now();
        retrain(state, config)?;
        let (p, s) = evaluate_views(&state.field, state.dataset, &state.test_ids, &config.eval_render)?;
        state.latest_psnr = Some(p);
        state.latest_ssim = Some(s);
        after_training(state)?;
        let reached = config.psnr_target.is_some_and(|t| p >= t);
        if reached || selections >= budget || state.candidate_ids.is_empty() {
            return Ok(());
        }
        let sel = select_next(state, strategy, config)?;
        let pos = state
            .candidate_ids
            .iter()
            .position(|&c| c == sel.view_id)
            .expect("selected id is a candidate");
        state.candidate_ids.remove(pos);
        let at = state.train_ids.partition_point(|&t| t < sel.view_id);
        state.train_ids.insert(at, sel.view_id);
        state.trace.push(RoundRecord {
            round: state.round,
            selected_id: sel.view_id,
            psnr: p,
            ssim: s,
            sigma_rgb2: sel.sigma_rgb2,
            sigma_pos2: sel.sigma_pos2,
            hybrid: sel.hybrid,
            wall_ms: config.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3),
        });
        state.scores.push(sel.scores);
        state.round += 1;
        selections += 1;
    }
}
