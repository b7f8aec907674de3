//! Explicit voxel radiance field: trilinear sampling, ray-marched volume
//! rendering with beta-distributed colour variance, analytic gradients of the
//! photometric loss, gradient-descent training and binary checkpoints.

mod camera;
mod checkpoint;
mod render;
mod train;
mod voxel;

pub use camera::{Camera, Ray};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use render::{
    ray_weights, render_pixels, render_ray, render_view, sample_variance, RayRender, RenderConfig,
    RenderedView,
};
pub use train::{
    photometric_loss_and_grad, train, Gradients, LossTrace, TrainConfig, TrainView,
};
pub use voxel::{raw_density, sample_field, DecodedField, VoxelField, EMPTY_DENSITY_RAW};
pub(crate) use voxel::{logit, softplus_inverse};
