use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{Camera, Ray};
use super::render::{march, MarchSample, RenderConfig};
use super::voxel::{logistic, DecodedField, VoxelField};
use crate::image::Image;
use crate::seed;
use crate::{Error, Result};

/// Rays per parallel work unit. Fixed so that gradient sums are reduced in
/// the same order for any worker count.
const CHUNK: usize = 64;

/// A supervising view: camera plus ground-truth RGB image.
#[derive(Debug, Clone, Copy)]
pub struct TrainView<'a> {
    pub camera: &'a Camera,
    pub image: &'a Image,
}

/// Gradients with respect to the raw (pre-activation) parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub density: Vec<f64>,
    pub color: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Step size for colour parameters, applied to the per-ray mean gradient.
    pub learning_rate: f64,
    /// Step size for density parameters.
    pub density_learning_rate: f64,
    pub momentum: f64,
    pub ray_batch: usize,
    pub seed: u64,
    pub render: RenderConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            learning_rate: 20.0,
            density_learning_rate: 200.0,
            momentum: 0.9,
            ray_batch: 1024,
            seed: 0,
            render: RenderConfig {
                n_samples: 48,
                jitter_seed: Some(0),
                ..RenderConfig::default()
            },
        }
    }
}

/// Per-iteration mean squared error per ray.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTrace {
    pub losses: Vec<f64>,
}

pub(crate) struct SupervisedRay {
    pub ray: Ray,
    pub target: [f64; 3],
    pub stream: u64,
}

/// Loss and gradient for one ray, accumulated into decoded-space buffers
/// (`dL/dσ_v`, `dL/dc_v`).
fn ray_loss_grad(
    field: &DecodedField,
    sr: &SupervisedRay,
    config: &RenderConfig,
    scratch: &mut Vec<MarchSample>,
    d_sigma: &mut [f64],
    d_color: &mut [f64],
) -> f64 {
    scratch.clear();
    let render = match sr.ray.clip(field.extent()) {
        Some(span) => march(field, &sr.ray, span, config, sr.stream, Some(scratch)),
        None => super::render::empty_ray(config),
    };
    let residual = [
        render.mean[0] - sr.target[0],
        render.mean[1] - sr.target[1],
        render.mean[2] - sr.target[2],
    ];
    let loss = residual.iter().map(|r| r * r).sum();
    let g = residual.map(|r| 2.0 * r);

    // Suffix colour S_k = Σ_{i>k} α_i c_i + T_final · background.
    let t_final = render.transmittance_final;
    let mut suffix = config.background.map(|b| b * t_final);
    for s in scratch.iter().rev() {
        let (a, c) = (s.alpha, s.color);
        let mut d_sig = 0.0;
        let mut d_col = [0.0; 3];
        for k in 0..3 {
            d_sig += g[k] * (s.t_after * c[k] - suffix[k]);
            d_col[k] = a * g[k];
        }
        d_sig *= s.delta;
        for (&i, &w) in s.stencil.idx.iter().zip(&s.stencil.w) {
            if w == 0.0 {
                continue;
            }
            d_sigma[i] += w * d_sig;
            for k in 0..3 {
                d_color[3 * i + k] += w * d_col[k];
            }
        }
        for k in 0..3 {
            suffix[k] += a * c[k];
        }
    }
    loss
}

/// Summed loss and raw-parameter gradients over a batch of rays.
pub(crate) fn batch_loss_grad(
    field: &VoxelField,
    rays: &[SupervisedRay],
    config: &RenderConfig,
) -> Result<(f64, Gradients)> {
    let decoded = field.decode();
    let n = field.voxel_count();
    let partials: Vec<(f64, Option<usize>, Vec<f64>, Vec<f64>)> = rays
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(chunk, group)| {
            let mut d_sigma = vec![0.0; n];
            let mut d_color = vec![0.0; 3 * n];
            let mut scratch = Vec::with_capacity(config.n_samples);
            let mut loss = 0.0;
            let mut bad = None;
            for (k, sr) in group.iter().enumerate() {
                let l = ray_loss_grad(&decoded, sr, config, &mut scratch, &mut d_sigma, &mut d_color);
                if !l.is_finite() && bad.is_none() {
                    bad = Some(chunk * CHUNK + k);
                }
                loss += l;
            }
            (loss, bad, d_sigma, d_color)
        })
        .collect();

    let mut loss = 0.0;
    let mut d_sigma = vec![0.0; n];
    let mut d_color = vec![0.0; 3 * n];
    for (l, bad, ds, dc) in partials {
        if let Some(ray) = bad {
            return Err(Error::NonFinite { ray });
        }
        loss += l;
        d_sigma.iter_mut().zip(&ds).for_each(|(a, b)| *a += b);
        d_color.iter_mut().zip(&dc).for_each(|(a, b)| *a += b);
    }

    // Chain through the activations: softplus' = logistic, logistic' = s(1-s).
    let density = field
        .density_params()
        .iter()
        .zip(&d_sigma)
        .map(|(&raw, &g)| g * logistic(raw as f64))
        .collect();
    let color = field
        .color_params()
        .iter()
        .zip(&d_color)
        .map(|(&raw, &g)| {
            let s = logistic(raw as f64);
            g * s * (1.0 - s)
        })
        .collect();
    Ok((loss, Gradients { density, color }))
}

fn view_rays(views: &[TrainView<'_>]) -> Result<Vec<SupervisedRay>> {
    let mut rays = Vec::new();
    for (v, view) in views.iter().enumerate() {
        check_view(view)?;
        for p in 0..view.camera.pixel_count() {
            rays.push(SupervisedRay {
                ray: view.camera.ray(p),
                target: view.image.rgb(p),
                stream: seed::derive(v as u64, &[p as u64]),
            });
        }
    }
    Ok(rays)
}

fn check_view(view: &TrainView<'_>) -> Result<()> {
    let (c, img) = (view.camera, view.image);
    if img.width() != c.width || img.height() != c.height || img.channels() != 3 {
        return Err(Error::invalid(format!(
            "ground truth {}x{}x{} does not match camera {}x{}",
            img.width(),
            img.height(),
            img.channels(),
            c.width,
            c.height
        )));
    }
    Ok(())
}

/// Photometric loss `Σ_r |C(r) - C̄(r)|²` over every pixel of `views`, with
/// exact gradients through compositing, interpolation and activations.
pub fn photometric_loss_and_grad(
    field: &VoxelField,
    views: &[TrainView<'_>],
    config: &RenderConfig,
) -> Result<(f64, Gradients)> {
    if views.is_empty() {
        return Err(Error::invalid("photometric loss needs at least one view"));
    }
    let rays = view_rays(views)?;
    batch_loss_grad(field, &rays, config)
}

/// Momentum gradient descent on random ray batches drawn from `views`.
///
/// Deterministic for a given seed, independent of the worker count. Aborts
/// when the batch loss exceeds a thousand times the first batch loss.
pub fn train(field: &mut VoxelField, views: &[TrainView<'_>], config: &TrainConfig) -> Result<LossTrace> {
    let mut trace = LossTrace::default();
    if config.iterations == 0 {
        return Ok(trace);
    }
    if views.is_empty() {
        return Err(Error::invalid("training needs at least one view"));
    }
    if config.ray_batch == 0 {
        return Err(Error::invalid("ray batch must be at least 1"));
    }
    for v in views {
        check_view(v)?;
    }
    let offsets: Vec<usize> = views
        .iter()
        .scan(0usize, |acc, v| {
            let start = *acc;
            *acc += v.camera.pixel_count();
            Some(start)
        })
        .collect();
    let total_pixels: usize = views.iter().map(|v| v.camera.pixel_count()).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = field.voxel_count();
    let mut vel_density = vec![0.0f64; n];
    let mut vel_color = vec![0.0f64; 3 * n];
    let mut render = config.render;
    let jitter_base = render.jitter_seed.map(|s| seed::derive(s, &[config.seed]));
    let mut initial = None;

    for it in 0..config.iterations {
        render.jitter_seed = jitter_base.map(|s| seed::derive(s, &[it as u64]));
        let batch: Vec<SupervisedRay> = (0..config.ray_batch)
            .map(|b| {
                let g = rng.gen_range(0..total_pixels);
                let v = offsets.partition_point(|&o| o <= g) - 1;
                let p = g - offsets[v];
                SupervisedRay {
                    ray: views[v].camera.ray(p),
                    target: views[v].image.rgb(p),
                    stream: b as u64,
                }
            })
            .collect();
        let (loss, grads) = batch_loss_grad(field, &batch, &render)?;
        let mean_loss = loss / config.ray_batch as f64;
        let reference = *initial.get_or_insert(mean_loss);
        let limit = 1e3 * reference.max(1e-12);
        if mean_loss > limit {
            return Err(Error::Divergence {
                iteration: it,
                loss: mean_loss,
                limit,
            });
        }
        trace.losses.push(mean_loss);

        let scale = 1.0 / config.ray_batch as f64;
        step(
            field.density_params_mut(),
            &mut vel_density,
            &grads.density,
            config.density_learning_rate,
            config.momentum,
            scale,
        );
        step(
            field.color_params_mut(),
            &mut vel_color,
            &grads.color,
            config.learning_rate,
            config.momentum,
            scale,
        );
    }
    Ok(trace)
}

fn step(params: &mut [f32], velocity: &mut [f64], grad: &[f64], lr: f64, momentum: f64, scale: f64) {
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grad) {
        *v = momentum * *v + g * scale;
        *p = (*p as f64 - lr * *v) as f32;
    }
}
