use crate::image::Image;
use crate::{Error, Result};

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable Gaussian filter keeping only fully-covered window positions.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..WINDOW).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity over all valid 11×11 Gaussian windows,
/// averaged across channels.
pub fn ssim(rendered: &Image, gt: &Image) -> Result<f64> {
    rendered.check_same_shape(gt)?;
    let (w, h) = (rendered.width(), rendered.height());
    if w < WINDOW || h < WINDOW {
        return Err(Error::invalid(format!("ssim needs at least {WINDOW}x{WINDOW} pixels, got {w}x{h}")));
    }
    let k = gaussian_kernel();
    let channels = rendered.channels();
    let mut total = 0.0;
    for c in 0..channels {
        let a = rendered.channel(c);
        let b = gt.channel(c);
        let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
        let mu_a = filter_valid(&a, w, h, &k);
        let mu_b = filter_valid(&b, w, h, &k);
        let e_aa = filter_valid(&prod(&a, &a), w, h, &k);
        let e_bb = filter_valid(&prod(&b, &b), w, h, &k);
        let e_ab = filter_valid(&prod(&a, &b), w, h, &k);
        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
        }
        total += sum / mu_a.len() as f64;
    }
    Ok(total / channels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64, w: usize, h: usize, f: impl Fn(f32) -> f32) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(w, h, 3, (0..w * h * 3).map(|_| f(rng.gen::<f32>())).collect()).unwrap()
    }

    /// Direct per-window evaluation with a freshly built 2-D kernel.
    fn ssim_direct(a: &Image, b: &Image) -> f64 {
        let (w, h) = (a.width(), a.height());
        let mut g = [[0.0f64; 11]; 11];
        let mut s = 0.0;
        for (i, row) in g.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
                *v = (-(di * di + dj * dj) / 4.5).exp();
                s += *v;
            }
        }
        let mut total = 0.0;
        for c in 0..3 {
            let mut acc = 0.0;
            let mut count = 0.0;
            for y0 in 0..=h - 11 {
                for x0 in 0..=w - 11 {
                    let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for i in 0..11 {
                        for j in 0..11 {
                            let p = (y0 + i) * w + x0 + j;
                            let wt = g[i][j] / s;
                            let (x, y) = (a.pixel(p)[c] as f64, b.pixel(p)[c] as f64);
                            ma += wt * x;
                            mb += wt * y;
                            saa += wt * x * x;
                            sbb += wt * y * y;
                            sab += wt * x * y;
                        }
                    }
                    let (va, vb, cv) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                    acc += ((2.0 * ma * mb + C1) * (2.0 * cv + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
                    count += 1.0;
                }
            }
            total += acc / count;
        }
        total / 3.0
    }

    #[test]
    fn identical_is_one() {
        let a = random(1, 20, 14, |v| v);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_is_anticorrelated() {
        let a = random(2, 16, 16, |v| v);
        let neg = Image::new(16, 16, 3, a.data().iter().map(|v| 1.0 - v).collect()).unwrap();
        assert!(ssim(&a, &neg).unwrap() < 0.0);
    }

    #[test]
    fn near_constant_matches_direct() {
        let a = Image::filled(16, 16, 3, 0.5);
        let b = random(3, 16, 16, |v| 0.5 + (v - 0.5) * 1e-3);
        let got = ssim(&a, &b).unwrap();
        assert!(got > 0.99);
        assert!((got - ssim_direct(&a, &b)).abs() < 1e-10);
        let c = random(4, 17, 13, |v| v);
        let d = random(5, 17, 13, |v| v * 0.5 + 0.2);
        assert!((ssim(&c, &d).unwrap() - ssim_direct(&c, &d)).abs() < 1e-10);
    }

    #[test]
    fn too_small_rejected() {
        let a = Image::filled(10, 20, 3, 0.0);
        assert!(ssim(&a, &a).is_err());
    }
}
