use std::path::Path;

use nbv_core::field::{RenderConfig, TrainConfig};
use nbv_core::planner::{PlannerConfig, StrategyKind, WeightMode};
use nbv_core::uncertainty::{PositionalConfig, RgbConfig, UncertaintyConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Every parameter of a selection run. Written next to the run outputs so
/// the run can be reproduced from the file alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: StrategyKind,
    pub init_frac: f64,
    pub test_frac: f64,
    pub budget_frac: f64,
    pub min_init: usize,
    pub seed: u64,
    /// Reconstruction grid; the dataset's grid when absent.
    pub grid_dims: Option<[usize; 3]>,
    pub initial_iterations: usize,
    pub iterations_per_round: usize,
    pub learning_rate: f64,
    pub density_learning_rate: f64,
    pub momentum: f64,
    pub ray_batch: usize,
    pub term_tau: f64,
    pub samples_per_ray: usize,
    pub eps_rel: f64,
    pub voronoi_resolution_2d: usize,
    pub voronoi_resolution_3d: usize,
    pub candidate_cell_only: bool,
    pub ray_fraction: f64,
    pub variance_floor: f64,
    pub weight_mode: WeightMode,
    pub psnr_target: Option<f64>,
    pub init_density: f64,
    pub record_timing: bool,
    pub save_round_checkpoints: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let planner = PlannerConfig::default();
        Self {
            strategy: StrategyKind::Hybrid,
            init_frac: 0.15,
            test_frac: 0.10,
            budget_frac: planner.budget_frac,
            min_init: 20,
            seed: 0,
            grid_dims: None,
            initial_iterations: planner.initial_iterations,
            iterations_per_round: planner.train.iterations,
            learning_rate: planner.train.learning_rate,
            density_learning_rate: planner.train.density_learning_rate,
            momentum: planner.train.momentum,
            ray_batch: planner.train.ray_batch,
            term_tau: planner.train.render.term_tau,
            samples_per_ray: planner.train.render.n_samples,
            eps_rel: planner.eps_rel,
            voronoi_resolution_2d: planner.uncertainty.positional.resolution_2d,
            voronoi_resolution_3d: planner.uncertainty.positional.resolution_3d,
            candidate_cell_only: false,
            ray_fraction: planner.uncertainty.rgb.fraction,
            variance_floor: planner.uncertainty.rgb.variance_floor,
            weight_mode: planner.weight_mode,
            psnr_target: None,
            init_density: planner.init_density,
            record_timing: false,
            save_round_checkpoints: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("init_frac", self.init_frac)?;
        unit("test_frac", self.test_frac)?;
        unit("budget_frac", self.budget_frac)?;
        if self.ray_fraction <= 0.0 || self.ray_fraction > 1.0 {
            return Err(CliError::Config(format!("ray_fraction must lie in (0, 1], got {}", self.ray_fraction)));
        }
        if self.samples_per_ray == 0 || self.ray_batch == 0 {
            return Err(CliError::Config("samples_per_ray and ray_batch must be positive".into()));
        }
        if !(self.term_tau >= 0.0 && self.term_tau < 1.0) {
            return Err(CliError::Config(format!("term_tau must lie in [0, 1), got {}", self.term_tau)));
        }
        if !(self.eps_rel > 0.0) {
            return Err(CliError::Config("eps_rel must be positive".into()));
        }
        Ok(())
    }

    /// Training renderer: jittered stratified samples.
    pub fn train_render(&self) -> RenderConfig {
        RenderConfig {
            n_samples: self.samples_per_ray,
            term_tau: self.term_tau,
            jitter_seed: Some(self.seed),
            ..RenderConfig::default()
        }
    }

    /// Planner settings; test views are evaluated with `eval_render`.
    pub fn planner(&self, eval_render: RenderConfig) -> PlannerConfig {
        PlannerConfig {
            init_frac: self.init_frac,
            budget_frac: self.budget_frac,
            psnr_target: self.psnr_target,
            initial_iterations: self.initial_iterations,
            train: TrainConfig {
                iterations: self.iterations_per_round,
                learning_rate: self.learning_rate,
                density_learning_rate: self.density_learning_rate,
                momentum: self.momentum,
                ray_batch: self.ray_batch,
                seed: self.seed,
                render: self.train_render(),
            },
            uncertainty: UncertaintyConfig {
                rgb: RgbConfig {
                    fraction: self.ray_fraction,
                    seed: self.seed,
                    variance_floor: self.variance_floor,
                    render: RenderConfig {
                        n_samples: self.samples_per_ray,
                        term_tau: self.term_tau,
                        ..RenderConfig::default()
                    },
                },
                positional: PositionalConfig {
                    resolution_2d: self.voronoi_resolution_2d,
                    resolution_3d: self.voronoi_resolution_3d,
                    candidate_cell_only: self.candidate_cell_only,
                    ..PositionalConfig::default()
                },
            },
            eps_rel: self.eps_rel,
            weight_mode: self.weight_mode,
            eval_render,
            init_density: self.init_density,
            field_dims: self.grid_dims,
            record_timing: self.record_timing,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::data(path, e))
    }
}
