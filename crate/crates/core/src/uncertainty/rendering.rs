use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{render_pixels, Camera, DecodedField, RayRender, RenderConfig};
use crate::image::Image;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgbConfig {
    /// Fraction of pixels rendered per candidate, in `(0, 1]`.
    pub fraction: f64,
    pub seed: u64,
    /// Lower bound applied to the ray variance before division and log.
    pub variance_floor: f64,
    pub render: RenderConfig,
}

impl Default for RgbConfig {
    fn default() -> Self {
        Self {
            fraction: 0.25,
            seed: 0,
            variance_floor: 1e-4,
            render: RenderConfig::default(),
        }
    }
}

/// Sorted pixel subset of size `ceil(fraction * n)`, drawn without
/// replacement from a stream keyed by `(seed, view_key)`.
pub fn sample_pixels(n: usize, fraction: f64, seed_value: u64, view_key: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("ray fraction must lie in (0, 1], got {fraction}")));
    }
    let k = ((fraction * n as f64) - 1e-9).ceil().max(1.0) as usize;
    if k >= n {
        return Ok((0..n).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed_value, &[view_key]));
    let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Literal sum `Σ_r |C(r) - C̄(r)|² / (2 β̄²(r)) + log(β̄²(r)) / 2` over the
/// given rays, with `β̄²` floored at `floor`.
pub fn rendering_nll(renders: &[RayRender], targets: &[[f64; 3]], floor: f64) -> f64 {
    renders
        .iter()
        .zip(targets)
        .map(|(r, c)| {
            let var = r.variance.max(floor);
            let sq: f64 = (0..3).map(|k| (c[k] - r.mean[k]).powi(2)).sum();
            sq / (2.0 * var) + 0.5 * var.ln()
        })
        .sum()
}

/// Rendering uncertainty of a candidate view against its image, estimated
/// on a seeded pixel subset and rescaled to the full ray count.
pub fn rendering_uncertainty(
    field: &DecodedField,
    camera: &Camera,
    gt: &Image,
    config: &RgbConfig,
    view_key: u64,
) -> Result<f64> {
    if gt.width() != camera.width || gt.height() != camera.height || gt.channels() != 3 {
        return Err(Error::invalid("candidate image does not match its camera"));
    }
    let n = camera.pixel_count();
    let pixels = sample_pixels(n, config.fraction, config.seed, view_key)?;
    let renders = render_pixels(field, camera, &pixels, &config.render, view_key);
    let targets: Vec<[f64; 3]> = pixels.iter().map(|&p| gt.rgb(p)).collect();
    let sum = rendering_nll(&renders, &targets, config.variance_floor);
    Ok(sum * n as f64 / pixels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{render_view, VoxelField};
    use crate::geom::{Aabb, Point3};
    use rand::Rng;

    fn ray(mean: [f64; 3], variance: f64) -> RayRender {
        RayRender {
            mean,
            variance,
            transmittance_final: 0.0,
            samples_used: 1,
            alpha_sum: 1.0,
        }
    }

    #[test]
    fn closed_forms() {
        let c = [[0.1, 0.2, 0.3]; 7];
        let unit: Vec<RayRender> = c.iter().map(|&m| ray(m, 1.0)).collect();
        assert_eq!(rendering_nll(&unit, &c, 1e-4), 0.0);
        let e: Vec<RayRender> = c.iter().map(|&m| ray(m, std::f64::consts::E)).collect();
        assert!((rendering_nll(&e, &c, 1e-4) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn full_fraction_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let extent = Aabb::new(Point3::repeat(-1.0), Point3::repeat(1.0)).unwrap();
        let density = (0..125).map(|_| rng.gen_range(-3.0f32..3.0)).collect();
        let color = (0..375).map(|_| rng.gen_range(-2.0f32..2.0)).collect();
        let field = VoxelField::new([5, 5, 5], extent, density, color).unwrap();
        let cam = Camera::look_at(Point3::new(0.3, -3.0, 0.8), Point3::zeros(), Point3::z(), 4, 4, 0.8).unwrap();
        let gt = Image::new(4, 4, 3, (0..48).map(|_| rng.gen::<f32>()).collect()).unwrap();
        let cfg = RgbConfig {
            fraction: 1.0,
            ..Default::default()
        };
        let got = rendering_uncertainty(&field.decode(), &cam, &gt, &cfg, 3).unwrap();
        let view = render_view(&field, &cam, &cfg.render, 3);
        let mut expected = 0.0;
        for p in 0..16 {
            let var = view.variance[p].max(1e-4);
            let g = gt.pixel(p);
            let mut sq = 0.0;
            for k in 0..3 {
                sq += (g[k] as f64 - view.mean[p][k]).powi(2);
            }
            expected += sq / (2.0 * var) + var.ln() / 2.0;
        }
        assert!((got - expected).abs() < 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn subsample_is_seeded_and_sized() {
        let a = sample_pixels(400, 0.25, 7, 2).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, sample_pixels(400, 0.25, 7, 2).unwrap());
        assert_ne!(a, sample_pixels(400, 0.25, 7, 3).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_pixels(10, 1.0, 0, 0).unwrap(), (0..10).collect::<Vec<_>>());
        assert!(sample_pixels(10, 0.0, 0, 0).is_err());
    }

    #[test]
    fn subsampling_unbiased_on_uniform_scene() {
        // Every ray sees the same thing, so any subset rescales to the full sum.
        let extent = Aabb::new(Point3::repeat(-1.0), Point3::repeat(1.0)).unwrap();
        let field = VoxelField::filled([4, 4, 4], extent, 0.5, 0.0).unwrap();
        let cam = Camera::new(Point3::new(0.0, 0.0, -3.0), Point3::z(), Point3::y(), 8, 8, 0.05).unwrap();
        let gt = Image::filled(8, 8, 3, 0.2);
        let d = field.decode();
        let full = rendering_uncertainty(&d, &cam, &gt, &RgbConfig { fraction: 1.0, ..Default::default() }, 0).unwrap();
        let part = rendering_uncertainty(&d, &cam, &gt, &RgbConfig::default(), 0).unwrap();
        assert!((full - part).abs() < 1e-3 * full.abs());
    }
}
