use std::io::Write;
use std::path::Path;

use crate::image::Image;
use crate::{Error, Result};

pub const DEFAULT_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SparsificationCurve {
    pub fractions_removed: Vec<f64>,
    pub error_by_uncertainty: Vec<f64>,
    pub error_by_oracle: Vec<f64>,
}

impl SparsificationCurve {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("fraction,err_by_uncertainty,err_by_oracle\n");
        for i in 0..self.fractions_removed.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.fractions_removed[i], self.error_by_uncertainty[i], self.error_by_oracle[i]
            ));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ause {
    pub value: f64,
    pub curve: SparsificationCurve,
    /// Set when every error is zero; the curves are then flat and `value` is 0.
    pub zero_error: bool,
}

/// Per-pixel squared error averaged over channels.
pub fn pixel_errors(rendered: &Image, gt: &Image) -> Result<Vec<f64>> {
    rendered.check_same_shape(gt)?;
    let c = rendered.channels();
    Ok((0..rendered.pixel_count())
        .map(|p| {
            let (a, b) = (rendered.pixel(p), gt.pixel(p));
            (0..c).map(|k| (a[k] as f64 - b[k] as f64).powi(2)).sum::<f64>() / c as f64
        })
        .collect())
}

/// Sum of errors removed when dropping the `k` highest-ranked pixels under
/// `key`, for each `k` in `counts`. Pixels sharing a key form one block; a
/// partially removed block contributes its mean error per removed pixel, so
/// ties never favour any particular pixel.
fn removed_sums(key: &[f64], errors: &[f64], counts: &[usize]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..key.len()).collect();
    order.sort_by(|&a, &b| key[b].total_cmp(&key[a]));
    // Block boundaries and prefix sums over the sorted order.
    let mut prefix = vec![0.0; order.len() + 1];
    for (i, &p) in order.iter().enumerate() {
        prefix[i + 1] = prefix[i] + errors[p];
    }
    let mut block_start = vec![0usize; order.len()];
    let mut block_end = vec![0usize; order.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && key[order[j]] == key[order[i]] {
            j += 1;
        }
        for k in i..j {
            block_start[k] = i;
            block_end[k] = j;
        }
        i = j;
    }
    counts
        .iter()
        .map(|&k| {
            if k == 0 {
                return 0.0;
            }
            if k >= order.len() {
                return prefix[order.len()];
            }
            let (s, e) = (block_start[k - 1], block_end[k - 1]);
            let block_mean = (prefix[e] - prefix[s]) / (e - s) as f64;
            prefix[s] + block_mean * (k - s) as f64
        })
        .collect()
}

/// Area between the uncertainty-ranked and oracle sparsification curves.
///
/// Fractions are `0, 1/steps, …, 1 - 1/steps`; each curve value is the mean
/// error of the kept pixels divided by the overall mean error.
pub fn ause(uncertainty: &[f64], errors: &[f64], steps: usize) -> Result<Ause> {
    if uncertainty.len() != errors.len() {
        return Err(Error::invalid(format!(
            "uncertainty map has {} pixels, error map {}",
            uncertainty.len(),
            errors.len()
        )));
    }
    if steps < 2 {
        return Err(Error::invalid("sparsification needs at least 2 steps"));
    }
    if errors.is_empty() {
        return Err(Error::invalid("empty error map"));
    }
    if uncertainty.iter().chain(errors).any(|v| !v.is_finite()) {
        return Err(Error::invalid("sparsification inputs must be finite"));
    }
    let n = errors.len();
    let fractions: Vec<f64> = (0..steps).map(|i| i as f64 / steps as f64).collect();
    let counts: Vec<usize> = fractions.iter().map(|f| (f * n as f64 + 1e-9).floor() as usize).collect();
    let total: f64 = errors.iter().sum();
    if total <= 0.0 {
        return Ok(Ause {
            value: 0.0,
            curve: SparsificationCurve {
                fractions_removed: fractions,
                error_by_uncertainty: vec![1.0; steps],
                error_by_oracle: vec![1.0; steps],
            },
            zero_error: true,
        });
    }
    let mean = total / n as f64;
    let curve = |sums: Vec<f64>| -> Vec<f64> {
        sums.iter()
            .zip(&counts)
            .map(|(s, &k)| ((total - s).max(0.0) / (n - k) as f64) / mean)
            .collect()
    };
    let by_unc = curve(removed_sums(uncertainty, errors, &counts));
    let by_oracle = curve(removed_sums(errors, errors, &counts));
    let gap: Vec<f64> = by_unc.iter().zip(&by_oracle).map(|(u, o)| u - o).collect();
    let area: f64 = (1..steps)
        .map(|i| 0.5 * (gap[i] + gap[i - 1]) * (fractions[i] - fractions[i - 1]))
        .sum();
    Ok(Ause {
        value: area.max(0.0),
        curve: SparsificationCurve {
            fractions_removed: fractions,
            error_by_uncertainty: by_unc,
            error_by_oracle: by_oracle,
        },
        zero_error: false,
    })
}
