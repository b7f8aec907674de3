//! Image-quality and uncertainty-quality metrics.

mod sparsification;
mod ssim;

pub use sparsification::{ause, pixel_errors, Ause, SparsificationCurve, DEFAULT_STEPS};
pub use ssim::ssim;

use crate::image::Image;
use crate::{Error, Result};

/// Reported PSNR for identical images.
pub const PSNR_CAP: f64 = 99.0;

pub fn mse(rendered: &Image, gt: &Image) -> Result<f64> {
    rendered.check_same_shape(gt)?;
    let sum: f64 = rendered
        .data()
        .iter()
        .zip(gt.data())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / rendered.data().len() as f64)
}

/// Peak signal-to-noise ratio for unit-range images, capped at [`PSNR_CAP`].
pub fn psnr(rendered: &Image, gt: &Image) -> Result<f64> {
    let m = mse(rendered, gt)?;
    if m <= 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((-10.0 * m.log10()).min(PSNR_CAP))
}

/// Rank correlation. `defined` is false when either input is constant, in
/// which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub defined: bool,
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation coefficient.
pub fn srcc(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("srcc length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::invalid("srcc needs at least 3 pairs"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("srcc inputs must be finite"));
    }
    Ok(match pearson(&average_ranks(xs), &average_ranks(ys)) {
        Some(value) => Correlation { value, defined: true },
        None => Correlation {
            value: 0.0,
            defined: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_image(seed: u64, w: usize, h: usize) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(w, h, 3, (0..w * h * 3).map(|_| rng.gen::<f32>()).collect()).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = noise_image(1, 8, 8);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        let zero = Image::filled(4, 4, 3, 0.0);
        let tenth = Image::filled(4, 4, 3, 0.1);
        assert_relative_eq!(psnr(&zero, &tenth).unwrap(), 20.0, epsilon = 1e-6);
        assert!(psnr(&zero, &Image::filled(4, 5, 3, 0.0)).is_err());
    }

    #[test]
    fn psnr_matches_direct_sum() {
        let a = noise_image(2, 13, 7);
        let b = noise_image(3, 13, 7);
        let mut s = 0.0;
        for y in 0..7 {
            for x in 0..13 {
                let (pa, pb) = (a.pixel(y * 13 + x), b.pixel(y * 13 + x));
                for c in 0..3 {
                    s += (pa[c] as f64 - pb[c] as f64).powi(2);
                }
            }
        }
        let expected = 10.0 * (1.0 / (s / (13.0 * 7.0 * 3.0))).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let base = Image::filled(16, 16, 3, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let unit: Vec<f32> = (0..16 * 16 * 3).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let noisy = |amp: f32| Image::new(16, 16, 3, unit.iter().map(|u| 0.5 + amp * u).collect()).unwrap();
        let p: Vec<f64> = [0.01, 0.05, 0.2].iter().map(|&a| psnr(&noisy(a), &base).unwrap()).collect();
        assert!(p[0] > p[1] && p[1] > p[2]);
    }

    #[test]
    fn srcc_examples() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64 * 0.7).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_eq!(srcc(&xs, &sq).unwrap().value, 1.0);
        assert_eq!(srcc(&xs, &neg).unwrap().value, -1.0);
        let c = srcc(&xs, &[2.0; 10]).unwrap();
        assert_eq!(c, Correlation { value: 0.0, defined: false });
        assert!(srcc(&xs[..2], &sq[..2]).is_err());
    }

    /// Rank of each value by counting, ties averaged.
    fn brute_ranks(xs: &[f64]) -> Vec<f64> {
        xs.iter()
            .map(|&x| {
                let below = xs.iter().filter(|&&y| y < x).count() as f64;
                let equal = xs.iter().filter(|&&y| y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    }

    #[test]
    fn srcc_matches_rank_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let xs: Vec<f64> = (0..20).map(|_| rng.gen_range(0..8) as f64).collect();
        let ys: Vec<f64> = (0..20).map(|_| rng.gen_range(0..8) as f64).collect();
        let (rx, ry) = (brute_ranks(&xs), brute_ranks(&ys));
        let mean = 10.5;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
        let expected = cov / (vx * vy).sqrt();
        assert!((srcc(&xs, &ys).unwrap().value - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn srcc_monotone_invariant(xs in prop::collection::vec(-5.0f64..5.0, 3..30), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = xs.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let base = srcc(&xs, &ys).unwrap();
            let tx: Vec<f64> = xs.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            let ty: Vec<f64> = ys.iter().map(|y| y.powi(3)).collect();
            let t = srcc(&tx, &ty).unwrap();
            prop_assert_eq!(base.defined, t.defined);
            prop_assert!((base.value - t.value).abs() < 1e-12);
        }
    }
}
