use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{Camera, Ray};
use super::voxel::{DecodedField, Stencil, VoxelField};
use crate::image::Image;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Stratified samples over the part of the ray inside the field extent.
    pub n_samples: usize,
    /// Marching stops once accumulated transmittance drops below this value.
    pub term_tau: f64,
    pub background: [f64; 3],
    /// Variance reported for rays that cross the field but whose opacities
    /// are all zero. Rays that miss the field extent carry no uncertainty.
    pub empty_ray_variance: f64,
    /// Seed for stratified jitter; `None` samples stratum midpoints.
    pub jitter_seed: Option<u64>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            n_samples: 64,
            term_tau: 1e-4,
            background: [0.0; 3],
            empty_ray_variance: (-1.0f64).exp(),
            jitter_seed: None,
        }
    }
}

/// Per-ray rendering result: beta mean, beta variance and final transmittance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRender {
    pub mean: [f64; 3],
    pub variance: f64,
    pub transmittance_final: f64,
    pub samples_used: usize,
    pub alpha_sum: f64,
}

/// Compositing weights `α_i = exp(-Σ_{j<i} σ_j δ_j) (1 - exp(-σ_i δ_i))`.
pub fn ray_weights(sigmas: &[f64], deltas: &[f64]) -> Vec<f64> {
    assert_eq!(sigmas.len(), deltas.len(), "sigmas and deltas differ in length");
    let mut optical_depth = 0.0f64;
    sigmas
        .iter()
        .zip(deltas)
        .map(|(&s, &d)| {
            let a = (-optical_depth).exp() * (1.0 - (-s * d).exp());
            optical_depth += s * d;
            a
        })
        .collect()
}

/// Per-sample variance `β² = -P log P` with `P = α_i / Σ α`.
///
/// Zero-opacity samples contribute zero; an all-zero ray yields all zeros.
pub fn sample_variance(alphas: &[f64]) -> Vec<f64> {
    let total: f64 = alphas.iter().sum();
    alphas
        .iter()
        .map(|&a| {
            if total <= 0.0 || a <= 0.0 {
                0.0
            } else {
                let p = a / total;
                -p * p.ln()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MarchSample {
    pub delta: f64,
    pub alpha: f64,
    /// Transmittance after this sample, `T_{i+1}`.
    pub t_after: f64,
    pub color: [f64; 3],
    pub stencil: Stencil,
}

/// Ray march over `[t_near, t_far]`, optionally keeping per-sample records
/// for backpropagation.
pub(crate) fn march(
    field: &DecodedField,
    ray: &Ray,
    span: (f64, f64),
    config: &RenderConfig,
    stream: u64,
    mut trace: Option<&mut Vec<MarchSample>>,
) -> RayRender {
    let (t_near, t_far) = span;
    let n = config.n_samples.max(1);
    let bin = (t_far - t_near) / n as f64;
    let mut transmittance = 1.0f64;
    let mut mean = [0.0f64; 3];
    let mut alphas = Vec::with_capacity(n);
    let mut used = 0;
    if bin > 0.0 {
        for i in 0..n {
            let offset = match config.jitter_seed {
                Some(s) => seed::unit(seed::derive(s, &[stream, i as u64])),
                None => 0.5,
            };
            let t = t_near + (i as f64 + offset) * bin;
            used = i + 1;
            let x = ray.at(t);
            let (alpha, color, stencil) = match field.stencil(&x) {
                Some(st) => {
                    let (sigma, color) = field.eval(&st);
                    let decay = (-sigma * bin).exp();
                    let alpha = transmittance * (1.0 - decay);
                    transmittance *= decay;
                    (alpha, color, st)
                }
                None => (
                    0.0,
                    [0.0; 3],
                    Stencil {
                        idx: [0; 8],
                        w: [0.0; 8],
                    },
                ),
            };
            for c in 0..3 {
                mean[c] += alpha * color[c];
            }
            alphas.push(alpha);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(MarchSample {
                    delta: bin,
                    alpha,
                    t_after: transmittance,
                    color,
                    stencil,
                });
            }
            if transmittance < config.term_tau {
                break;
            }
        }
    }
    let alpha_sum: f64 = alphas.iter().sum();
    let variance = if alpha_sum > 0.0 {
        alphas
            .iter()
            .zip(sample_variance(&alphas))
            .map(|(a, b2)| a * a * b2)
            .sum()
    } else {
        config.empty_ray_variance
    };
    for c in 0..3 {
        mean[c] = (mean[c] + transmittance * config.background[c]).clamp(0.0, 1.0);
    }
    RayRender {
        mean,
        variance,
        transmittance_final: transmittance,
        samples_used: used,
        alpha_sum,
    }
}

pub(crate) fn empty_ray(config: &RenderConfig) -> RayRender {
    RayRender {
        mean: config.background.map(|c| c.clamp(0.0, 1.0)),
        variance: config.empty_ray_variance,
        transmittance_final: 1.0,
        samples_used: 0,
        alpha_sum: 0.0,
    }
}

/// Render one ray over an explicit parametric span.
///
/// `stream` selects the stratified jitter sequence when jitter is enabled.
pub fn render_ray(field: &DecodedField, ray: &Ray, t_near: f64, t_far: f64, config: &RenderConfig, stream: u64) -> RayRender {
    if !(t_far > t_near) {
        return empty_ray(config);
    }
    march(field, ray, (t_near, t_far), config, stream, None)
}

/// Render a ray over its intersection with the field extent. A ray that
/// misses the extent sees only background, with zero variance.
pub(crate) fn render_clipped(field: &DecodedField, ray: &Ray, config: &RenderConfig, stream: u64) -> RayRender {
    match ray.clip(field.extent()) {
        Some(span) => march(field, ray, span, config, stream, None),
        None => RayRender {
            variance: 0.0,
            ..empty_ray(config)
        },
    }
}

/// Per-pixel rendering of one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub width: usize,
    pub height: usize,
    pub mean: Vec<[f64; 3]>,
    pub variance: Vec<f64>,
    pub transmittance: Vec<f64>,
}

impl RenderedView {
    pub fn mean_image(&self) -> Image {
        let data = self.mean.iter().flat_map(|c| c.map(|v| v as f32)).collect();
        Image::new(self.width, self.height, 3, data).expect("consistent view dimensions")
    }

    pub fn variance_image(&self) -> Image {
        let data = self.variance.iter().map(|&v| v as f32).collect();
        Image::new(self.width, self.height, 1, data).expect("consistent view dimensions")
    }
}

/// Render selected pixels of `camera`. Jitter streams are keyed by
/// `(view_key, pixel)`, so results do not depend on which other pixels are
/// requested or on the worker count.
pub fn render_pixels(
    field: &DecodedField,
    camera: &Camera,
    pixels: &[usize],
    config: &RenderConfig,
    view_key: u64,
) -> Vec<RayRender> {
    pixels
        .par_iter()
        .with_min_len(64)
        .map(|&p| render_clipped(field, &camera.ray(p), config, seed::derive(view_key, &[p as u64])))
        .collect()
}

/// Render every pixel through its center.
pub fn render_view(field: &VoxelField, camera: &Camera, config: &RenderConfig, view_key: u64) -> RenderedView {
    let decoded = field.decode();
    let pixels: Vec<usize> = (0..camera.pixel_count()).collect();
    let rays = render_pixels(&decoded, camera, &pixels, config, view_key);
    RenderedView {
        width: camera.width,
        height: camera.height,
        mean: rays.iter().map(|r| r.mean).collect(),
        variance: rays.iter().map(|r| r.variance).collect(),
        transmittance: rays.iter().map(|r| r.transmittance_final).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::voxel::{logit, softplus_inverse, EMPTY_DENSITY_RAW};
    use crate::geom::{Aabb, Point3};
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn empty_ray_weights() {
        assert_eq!(ray_weights(&[0.0; 4], &[0.1; 4]), vec![0.0; 4]);
    }

    #[test]
    fn single_half_opacity() {
        let a = ray_weights(&[LN_2], &[1.0]);
        assert!((a[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_sample_weights() {
        let a = ray_weights(&[LN_2, LN_2], &[1.0, 1.0]);
        assert!((a[0] - 0.5).abs() < 1e-15);
        assert!((a[1] - 0.25).abs() < 1e-15);
    }

    // Values computed independently:
    //   python3 -c "import math; p=[2/3,1/3]; b=[-x*math.log(x) for x in p];
    //               print(b, 0.25*b[0]+0.0625*b[1])"
    //   -> [0.2703100720721096, 0.3662040962227032] 0.09046527403194635
    #[test]
    fn two_sample_variance() {
        let alphas = [0.5, 0.25];
        let b = sample_variance(&alphas);
        assert!((b[0] - 0.270_310_072_072_109_6).abs() < 1e-12);
        assert!((b[1] - 0.366_204_096_222_703_2).abs() < 1e-12);
        let total: f64 = alphas.iter().zip(&b).map(|(a, v)| a * a * v).sum();
        assert!((total - 0.090_465_274_031_946_35).abs() < 1e-12);
    }

    fn slab_field(density: f32, color: [f64; 3]) -> VoxelField {
        let extent = Aabb::new(Point3::zeros(), Point3::new(1.0, 1.0, 1.0)).unwrap();
        let c = color.map(|v| logit(v) as f32);
        let n = 8 * 8 * 8;
        let col: Vec<f32> = (0..n).flat_map(|_| c).collect();
        VoxelField::new([8, 8, 8], extent, vec![density; n], col).unwrap()
    }

    fn straight_ray() -> Ray {
        Ray {
            origin: Point3::new(0.5, 0.5, -1.0),
            direction: Point3::z(),
        }
    }

    #[test]
    fn empty_field_renders_background_with_floor() {
        let f = VoxelField::empty([4, 4, 4], Aabb::unit()).unwrap().decode();
        let cfg = RenderConfig::default();
        let r = render_ray(&f, &straight_ray(), 1.0, 2.0, &cfg, 0);
        assert_eq!(r.mean, [0.0; 3]);
        assert_eq!(r.transmittance_final, 1.0);
        assert_eq!(r.variance, cfg.empty_ray_variance);
    }

    #[test]
    fn opaque_first_sample_has_zero_variance() {
        let f = slab_field(softplus_inverse(1e4) as f32, [0.2, 0.4, 0.6]).decode();
        let cfg = RenderConfig {
            n_samples: 16,
            ..Default::default()
        };
        let r = render_ray(&f, &straight_ray(), 1.0, 2.0, &cfg, 0);
        assert_eq!(r.samples_used, 1);
        assert!(r.variance.abs() < 1e-12);
        for (m, e) in r.mean.iter().zip([0.2, 0.4, 0.6]) {
            assert!((m - e).abs() < 1e-6);
        }
    }

    #[test]
    fn termination_bound() {
        let f = slab_field(softplus_inverse(4.0) as f32, [0.9, 0.5, 0.1]).decode();
        let full = RenderConfig {
            n_samples: 128,
            term_tau: 0.0,
            ..Default::default()
        };
        for tau in [1e-4, 1e-2, 0.05] {
            let cut = RenderConfig { term_tau: tau, ..full };
            let a = render_ray(&f, &straight_ray(), 1.0, 2.0, &full, 0);
            let b = render_ray(&f, &straight_ray(), 1.0, 2.0, &cut, 0);
            assert!(b.samples_used <= a.samples_used);
            for c in 0..3 {
                assert!((a.mean[c] - b.mean[c]).abs() <= tau + 1e-12);
            }
        }
    }

    #[test]
    fn single_voxel_on_axis() {
        // One opaque red voxel at the center of a 5^3 grid.
        let extent = Aabb::new(Point3::repeat(-2.5), Point3::repeat(2.5)).unwrap();
        let mut f = VoxelField::empty([5, 5, 5], extent).unwrap();
        let rgb = [logit(0.9) as f32, logit(0.1) as f32, logit(0.3) as f32];
        // Colour of empty voxels is irrelevant except through interpolation;
        // give the whole grid the voxel colour so only density varies.
        for i in 0..f.voxel_count() {
            f.set_voxel(i, EMPTY_DENSITY_RAW, rgb);
        }
        let i = f.index(2, 2, 2);
        f.set_voxel(i, softplus_inverse(200.0) as f32, rgb);
        let cam = Camera::look_at(Point3::new(0.0, 0.0, 10.0), Point3::zeros(), Point3::y(), 9, 9, 0.3).unwrap();
        let cfg = RenderConfig {
            n_samples: 256,
            ..Default::default()
        };
        let view = render_view(&f, &cam, &cfg, 0);
        let center = view.mean[4 * 9 + 4];
        // Density ramps linearly from the neighbouring centers to 200 at the
        // voxel center, so the optical depth along the axis is 100: the pixel
        // is opaque and composites the voxel colour.
        for (m, e) in center.iter().zip([0.9, 0.1, 0.3]) {
            assert!((m - e).abs() < 0.01, "{center:?}");
        }
    }

    #[test]
    fn resolution_consistency() {
        let extent = Aabb::new(Point3::repeat(-1.0), Point3::repeat(1.0)).unwrap();
        let mut f = VoxelField::empty([6, 6, 6], extent).unwrap();
        for (k, (x, y, z)) in [(1, 2, 3), (3, 3, 3), (4, 1, 2), (2, 4, 4)].into_iter().enumerate() {
            let i = f.index(x, y, z);
            let c = [0.2 + 0.2 * k as f64, 0.8 - 0.15 * k as f64, 0.5];
            f.set_voxel(i, softplus_inverse(20.0) as f32, c.map(|v| logit(v) as f32));
        }
        let cam = Camera::look_at(Point3::new(3.0, 2.0, 4.0), Point3::zeros(), Point3::z(), 24, 24, 0.7).unwrap();
        let cfg = RenderConfig::default();
        let lo = render_view(&f, &cam, &cfg, 0).mean_image().mean();
        let hi = render_view(&f, &cam.with_resolution(48, 48), &cfg, 0).mean_image().mean();
        assert!((lo - hi).abs() < 0.02, "{lo} vs {hi}");
    }

    #[test]
    fn rigid_transform_invariance() {
        let f = slab_field(softplus_inverse(3.0) as f32, [0.3, 0.6, 0.9]);
        let shift = Point3::new(10.0, -4.0, 2.5);
        let moved_extent = Aabb::new(f.extent().min + shift, f.extent().max + shift).unwrap();
        let moved = VoxelField::new(f.dims(), moved_extent, f.density_params().to_vec(), f.color_params().to_vec()).unwrap();
        let cam = Camera::look_at(Point3::new(2.0, 1.5, 3.0), Point3::repeat(0.5), Point3::z(), 8, 8, 0.8).unwrap();
        let cam2 = Camera::look_at(cam.position + shift, Point3::repeat(0.5) + shift, Point3::z(), 8, 8, 0.8).unwrap();
        let cfg = RenderConfig::default();
        let a = render_view(&f, &cam, &cfg, 3);
        let b = render_view(&moved, &cam2, &cfg, 3);
        for (x, y) in a.mean.iter().zip(&b.mean) {
            for c in 0..3 {
                assert!((x[c] - y[c]).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn conservation_and_bounds(
            sigmas in prop::collection::vec(0.0f64..50.0, 1..40),
            step in 0.001f64..0.5,
        ) {
            let deltas = vec![step; sigmas.len()];
            let alphas = ray_weights(&sigmas, &deltas);
            let total_depth: f64 = sigmas.iter().map(|s| s * step).sum();
            let sum: f64 = alphas.iter().sum();
            prop_assert!((sum + (-total_depth).exp() - 1.0).abs() < 1e-9);
            prop_assert!(alphas.iter().all(|&a| a >= 0.0));
            for b in sample_variance(&alphas) {
                prop_assert!(b >= 0.0);
                prop_assert!(b <= (-1.0f64).exp() + 1e-15);
            }
        }
    }
}
