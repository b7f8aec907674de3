//! Candidate-view uncertainty: rendering uncertainty from the field's colour
//! variance, positional uncertainty from weighted Voronoi cell measures, and
//! the normalized hybrid score used to rank candidates.

mod hybrid;
mod positional;
mod rendering;

pub use hybrid::{
    argmax, hybrid_scores, min_max, normalize_scores, write_score_csv, Candidate, CandidateScore,
    UncertaintyConfig,
};
pub use positional::{
    nonplanar_formula, nonplanar_positional, nonplanar_score, planar_formula, planar_positional,
    planar_score, positional_uncertainty, PositionalConfig, PositionalContext, DUPLICATE_SCORE,
};
pub use rendering::{rendering_nll, rendering_uncertainty, sample_pixels, RgbConfig};
