//! Incremental next-best-view selection for explicit voxel radiance fields.
//!
//! The crate is organised bottom-up:
//!
//! - [`geom`]: Hausdorff distance, plane fitting, trajectory planarity,
//!   rasterized multiplicatively weighted Voronoi diagrams and cell clustering.
//! - [`field`]: a trainable voxel radiance field, ray-marched volume rendering
//!   with beta-distributed colour variance, analytic gradients and training.
//! - [`uncertainty`]: rendering uncertainty, positional uncertainty and the
//!   normalized hybrid score used to rank candidate views.
//! - [`planner`]: dataset splits, the incremental selection loop and the
//!   Random / FVS / ablation strategies.
//! - [`metrics`]: PSNR, SSIM, Spearman rank correlation and AUSE.
//! - [`scenegen`]: procedural scenes, UAV-style trajectories and on-disk
//!   synthetic datasets.

pub mod error;
pub mod field;
pub mod geom;
pub mod image;
pub mod metrics;
pub mod pfm;
pub mod planner;
pub mod scenegen;
pub mod uncertainty;

mod seed;

pub use error::{Error, Result};
