use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::positional::{positional_uncertainty, PositionalConfig, PositionalContext};
use super::rendering::{rendering_uncertainty, RgbConfig};
use crate::field::{Camera, DecodedField};
use crate::image::Image;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    pub rgb: RgbConfig,
    pub positional: PositionalConfig,
}

/// A candidate view: its id, camera and captured image.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub view_id: usize,
    pub camera: &'a Camera,
    pub image: &'a Image,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub view_id: usize,
    pub sigma_rgb2: f64,
    pub sigma_pos2: f64,
    /// Sum of the two normalized components, in `[0, 2]`.
    pub hybrid: f64,
    /// Normalized `(positional, rendering)` components.
    pub components_normalized: (f64, f64),
}

/// Min-max normalization into `[0, 1]`; a constant input maps to 0.5.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.5 })
        .collect()
}

/// Combine raw component values into hybrid scores.
pub fn normalize_scores(view_ids: &[usize], sigma_rgb2: &[f64], sigma_pos2: &[f64]) -> Result<Vec<CandidateScore>> {
    if view_ids.len() != sigma_rgb2.len() || view_ids.len() != sigma_pos2.len() {
        return Err(Error::invalid("component lists differ in length"));
    }
    if let Some(i) = (0..view_ids.len()).find(|&i| !(sigma_rgb2[i].is_finite() && sigma_pos2[i].is_finite())) {
        return Err(Error::invalid(format!("non-finite uncertainty for view {}", view_ids[i])));
    }
    let nr = min_max(sigma_rgb2);
    let np = min_max(sigma_pos2);
    Ok((0..view_ids.len())
        .map(|i| CandidateScore {
            view_id: view_ids[i],
            sigma_rgb2: sigma_rgb2[i],
            sigma_pos2: sigma_pos2[i],
            hybrid: np[i] + nr[i],
            components_normalized: (np[i], nr[i]),
        })
        .collect())
}

/// Index of the highest `key`, ties going to the lowest view id.
pub fn argmax(scores: &[CandidateScore], key: impl Fn(&CandidateScore) -> f64) -> Option<usize> {
    (0..scores.len()).reduce(|best, i| {
        let (a, b) = (key(&scores[i]), key(&scores[best]));
        if a > b || (a == b && scores[i].view_id < scores[best].view_id) {
            i
        } else {
            best
        }
    })
}

/// Score every candidate against an immutable field and positional context.
pub fn hybrid_scores(
    field: &DecodedField,
    context: &PositionalContext,
    candidates: &[Candidate<'_>],
    config: &UncertaintyConfig,
) -> Result<Vec<CandidateScore>> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates to score"));
    }
    let raw: Vec<(f64, f64)> = candidates
        .par_iter()
        .map(|c| {
            let rgb = rendering_uncertainty(field, c.camera, c.image, &config.rgb, c.view_id as u64)?;
            let pos = positional_uncertainty(context, &c.camera.position)?;
            Ok((rgb, pos))
        })
        .collect::<Result<_>>()?;
    let ids: Vec<usize> = candidates.iter().map(|c| c.view_id).collect();
    let rgb: Vec<f64> = raw.iter().map(|r| r.0).collect();
    let pos: Vec<f64> = raw.iter().map(|r| r.1).collect();
    normalize_scores(&ids, &rgb, &pos)
}

/// Per-round score dump with a 0/1 `selected` column.
pub fn write_score_csv(path: &Path, scores: &[CandidateScore], selected: Option<usize>) -> Result<()> {
    let mut out = String::from("view_id,sigma_rgb2,sigma_pos2,norm_rgb,norm_pos,hybrid,selected\n");
    for s in scores {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.view_id,
            s.sigma_rgb2,
            s.sigma_pos2,
            s.components_normalized.1,
            s.components_normalized.0,
            s.hybrid,
            u8::from(selected == Some(s.view_id))
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_candidate_is_one() {
        let s = normalize_scores(&[4], &[3.0], &[7.0]).unwrap();
        assert_eq!(s[0].hybrid, 1.0);
        assert_eq!(s[0].components_normalized, (0.5, 0.5));
    }

    #[test]
    fn dominating_candidate() {
        let s = normalize_scores(&[0, 1], &[5.0, 1.0], &[2.0, -1.0]).unwrap();
        assert_eq!(s[0].hybrid, 2.0);
        assert_eq!(s[1].hybrid, 0.0);
    }

    #[test]
    fn argmax_matches_manual_normalization() {
        let ids = [3, 8, 1, 6, 2];
        let rgb = [12.0, -4.0, 7.5, 3.0, 9.0];
        let pos = [0.2, 0.9, 0.1, 0.6, 0.35];
        let s = normalize_scores(&ids, &rgb, &pos).unwrap();
        // (rgb - min)/(max - min) + (pos - min)/(max - min), written out.
        let manual: Vec<f64> = (0..5).map(|i| (rgb[i] + 4.0) / 16.0 + (pos[i] - 0.1) / 0.8).collect();
        for (a, b) in s.iter().zip(&manual) {
            assert!((a.hybrid - b).abs() < 1e-12);
        }
        let best = manual.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmax(&s, |c| c.hybrid), Some(best));
    }

    #[test]
    fn ties_break_to_lowest_id() {
        let s = normalize_scores(&[9, 2, 5], &[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(s[argmax(&s, |c| c.hybrid).unwrap()].view_id, 2);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(normalize_scores(&[0, 1], &[1.0, f64::NAN], &[0.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn normalized_ranges(rgb in prop::collection::vec(-1e3f64..1e3, 1..20), seed in any::<u64>()) {
            let n = rgb.len();
            let pos: Vec<f64> = (0..n).map(|i| ((seed >> (i % 60)) & 7) as f64).collect();
            let ids: Vec<usize> = (0..n).collect();
            let s = normalize_scores(&ids, &rgb, &pos).unwrap();
            for c in &s {
                prop_assert!((0.0..=1.0).contains(&c.components_normalized.0));
                prop_assert!((0.0..=1.0).contains(&c.components_normalized.1));
                prop_assert!((0.0..=2.0).contains(&c.hybrid));
                prop_assert_eq!(c.hybrid, c.components_normalized.0 + c.components_normalized.1);
            }
        }

        #[test]
        fn argmax_affine_invariant(rgb in prop::collection::vec(-10.0f64..10.0, 2..12), a in 0.1f64..10.0, b in -50.0f64..50.0) {
            let n = rgb.len();
            let pos: Vec<f64> = (0..n).map(|i| (i * 7 % 5) as f64).collect();
            let ids: Vec<usize> = (0..n).collect();
            let s0 = normalize_scores(&ids, &rgb, &pos).unwrap();
            let scaled: Vec<f64> = rgb.iter().map(|v| a * v + b).collect();
            let s1 = normalize_scores(&ids, &scaled, &pos).unwrap();
            let h0: Vec<f64> = s0.iter().map(|c| c.hybrid).collect();
            let h1: Vec<f64> = s1.iter().map(|c| c.hybrid).collect();
            let best = argmax(&s1, |c| c.hybrid).unwrap();
            // Allow rounding-level ties in the rescaled scores.
            let top = h0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(h0[best] >= top - 1e-9, "{:?} vs {:?}", h0, h1);
        }
    }
}
