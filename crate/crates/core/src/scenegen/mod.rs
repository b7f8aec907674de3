//! Synthetic ground truth: voxel scenes built from boxes and spheres, UAV
//! style camera trajectories, and rendered datasets on disk.

mod dataset;
mod scene;
mod trajectory;

pub use dataset::{read_dataset, render_dataset, Dataset, Manifest, PoseRow, GT_FIELD_FILE};
pub use scene::{generate_scene, Primitive, SceneSpec};
pub use trajectory::{generate_trajectory, TrajectoryKind, TrajectorySpec};
