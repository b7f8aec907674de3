use serde::{Deserialize, Serialize};

use super::{fit_plane, hausdorff, Plane, PointSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryLabel {
    Planar,
    NonPlanar,
}

/// Outcome of the planarity test on a camera trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryClass {
    pub label: TrajectoryLabel,
    pub hausdorff_value: f64,
    pub threshold_used: f64,
    /// Best-fit plane; `None` when the fit was degenerate.
    pub plane: Option<Plane>,
    /// Set when the positions are coincident or collinear.
    pub degenerate: bool,
}

impl TrajectoryClass {
    pub fn is_planar(&self) -> bool {
        self.label == TrajectoryLabel::Planar
    }

    /// Same geometry with the label overridden; used to exercise both
    /// positional branches on one trajectory.
    pub fn forced(mut self, label: TrajectoryLabel) -> Self {
        self.label = label;
        self
    }
}

/// Planar / non-planar split of a pose trajectory.
///
/// `A` is the set of positions and `B` their orthogonal projections onto the
/// least-squares plane of `A`. The trajectory is planar when
/// `H(A, B) < eps_rel * diameter(A)`, where the diameter (largest pairwise
/// distance) is the rotation-invariant extent of the set; for grid-like
/// trajectories it coincides with the bounding-box diagonal.
pub fn classify_trajectory(poses: &PointSet<3>, eps_rel: f64) -> Result<TrajectoryClass> {
    if !(eps_rel > 0.0 && eps_rel.is_finite()) {
        return Err(Error::invalid(format!("eps_rel must be positive, got {eps_rel}")));
    }
    if poses.len() < 3 {
        return Err(Error::invalid(format!(
            "trajectory classification needs at least 3 poses, got {}",
            poses.len()
        )));
    }
    let threshold = (eps_rel * diameter(poses)).max(f64::MIN_POSITIVE);
    let plane = match fit_plane(poses) {
        Ok(plane) => plane,
        Err(Error::DegenerateGeometry(_)) => {
            return Ok(TrajectoryClass {
                label: TrajectoryLabel::NonPlanar,
                hausdorff_value: f64::INFINITY,
                threshold_used: threshold,
                plane: None,
                degenerate: true,
            })
        }
        Err(e) => return Err(e),
    };
    let projected = PointSet::new(poses.points().iter().map(|p| plane.project(p)).collect())?;
    let h = hausdorff(poses, &projected);
    let label = if h < threshold {
        TrajectoryLabel::Planar
    } else {
        TrajectoryLabel::NonPlanar
    };
    Ok(TrajectoryClass {
        label,
        hausdorff_value: h,
        threshold_used: threshold,
        plane: Some(plane),
        degenerate: false,
    })
}

/// Largest pairwise distance.
pub(crate) fn diameter(points: &PointSet<3>) -> f64 {
    let pts = points.points();
    let mut best = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max((a - b).norm_squared());
        }
    }
    best.sqrt()
}
