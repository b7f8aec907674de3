use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Point2, Point3, PointSet, TrajectoryClass, VoronoiDiagram, WeightedSites};
use crate::{Error, Result};

/// Score given to a candidate that coincides with a training position. Both
/// positional scores are non-negative, so this is the smallest attainable.
pub const DUPLICATE_SCORE: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionalConfig {
    pub resolution_2d: usize,
    pub resolution_3d: usize,
    /// Restrict the planar outer sum to the candidate's own cell.
    pub candidate_cell_only: bool,
    /// Padding added around the positions, as a fraction of the largest side.
    pub padding: f64,
    /// Weight given to the candidate site.
    pub candidate_weight: f64,
}

impl Default for PositionalConfig {
    fn default() -> Self {
        Self {
            resolution_2d: 256,
            resolution_3d: 64,
            candidate_cell_only: false,
            padding: 0.1,
            candidate_weight: 1.0,
        }
    }
}

/// Training positions, their weights and the geometry the Voronoi diagrams
/// are built on. Diagrams over the training sites are cached so scoring a
/// candidate only inserts one site.
#[derive(Debug, Clone)]
pub struct PositionalContext {
    class: TrajectoryClass,
    train: PointSet<3>,
    weights: Vec<f64>,
    config: PositionalConfig,
    planar_base: Option<VoronoiDiagram<2>>,
    volume_base: VoronoiDiagram<3>,
}

impl PositionalContext {
    /// Context whose diagram bounds cover `train` and `extent` (typically
    /// every candidate position as well), padded.
    pub fn new(
        class: TrajectoryClass,
        train: PointSet<3>,
        weights: Vec<f64>,
        extent: &[Point3],
        config: PositionalConfig,
    ) -> Result<Self> {
        let all: Vec<Point3> = train.points().iter().chain(extent).copied().collect();
        let all = PointSet::new(all)?;
        let min_pad = 1e-3 * all.bounding_box().diagonal().max(1e-6);
        let volume = all.bounding_box().padded(config.padding, min_pad);
        let planar = match class.plane {
            Some(plane) => {
                let local: Vec<Point2> = all.points().iter().map(|p| plane.to_local(p)).collect();
                let bb = PointSet::new(local)?.bounding_box();
                Some(bb.padded(config.padding, min_pad))
            }
            None => None,
        };
        Self::with_bounds(class, train, weights, planar, volume, config)
    }

    /// Context with explicit bounds: `plane_bounds` in the plane's local
    /// coordinates, `volume_bounds` in world coordinates.
    pub fn with_bounds(
        class: TrajectoryClass,
        train: PointSet<3>,
        weights: Vec<f64>,
        plane_bounds: Option<Aabb<2>>,
        volume_bounds: Aabb<3>,
        config: PositionalConfig,
    ) -> Result<Self> {
        if weights.len() != train.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} training positions",
                weights.len(),
                train.len()
            )));
        }
        let planar_base = match (class.plane, plane_bounds) {
            (Some(plane), Some(bounds)) => {
                let local: Vec<Point2> = train.points().iter().map(|p| plane.to_local(p)).collect();
                let sites = WeightedSites::new(PointSet::new(local)?, weights.clone())?;
                Some(VoronoiDiagram::build(sites, bounds, config.resolution_2d)?)
            }
            _ => None,
        };
        if class.is_planar() && planar_base.is_none() {
            return Err(Error::invalid("planar context needs a fitted plane and plane bounds"));
        }
        let sites = WeightedSites::new(train.clone(), weights.clone())?;
        let volume_base = VoronoiDiagram::build(sites, volume_bounds, config.resolution_3d)?;
        Ok(Self {
            class,
            train,
            weights,
            config,
            planar_base,
            volume_base,
        })
    }

    pub fn class(&self) -> &TrajectoryClass {
        &self.class
    }

    pub fn train_positions(&self) -> &PointSet<3> {
        &self.train
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn config(&self) -> &PositionalConfig {
        &self.config
    }

    /// Candidate position in the plane's 2D coordinates, if a plane exists.
    pub fn project(&self, candidate: &Point3) -> Option<Point2> {
        self.class.plane.map(|p| p.to_local(candidate))
    }

    fn is_duplicate(&self, candidate: &Point3) -> bool {
        let tol = 1e-9 * self.volume_base.bounds().diagonal();
        self.train.points().iter().any(|p| (p - candidate).norm() <= tol)
    }
}

fn cell_floor<const D: usize>(diagram: &VoronoiDiagram<D>) -> f64 {
    0.5 * diagram.cell_measure()
}

/// `Σ_i [Σ_j |p_i - p_j|^{λ_i}] / A_i` over all sites, or only over site
/// `only` when given.
pub fn planar_formula(positions: &[Point2], weights: &[f64], areas: &[f64], only: Option<usize>) -> f64 {
    let term = |i: usize| {
        let spread: f64 = positions.iter().map(|q| (positions[i] - q).norm().powf(weights[i])).sum();
        spread / areas[i]
    };
    match only {
        Some(i) => term(i),
        None => (0..positions.len()).map(term).sum(),
    }
}

/// `Σ_i [-log(G_i) r_i + λ_i (G_i - r_i)²]` with `G_i = λ_i A_i / Σ λA` and
/// `r_i = (1/A_i) / Σ 1/A`.
pub fn nonplanar_formula(weights: &[f64], volumes: &[f64]) -> f64 {
    let weighted: f64 = weights.iter().zip(volumes).map(|(l, a)| l * a).sum();
    let inverse: f64 = volumes.iter().map(|a| 1.0 / a).sum();
    weights
        .iter()
        .zip(volumes)
        .map(|(&l, &a)| {
            let g = (l * a / weighted).max(1e-12);
            let r = (1.0 / a) / inverse;
            -g.ln() * r + l * (g - r) * (g - r)
        })
        .sum()
}

/// Planar score of `diagram`, whose last site is the candidate.
fn planar_of(diagram: &VoronoiDiagram<2>, cell_only: bool) -> f64 {
    let floor = cell_floor(diagram);
    let areas: Vec<f64> = diagram.measures().iter().map(|a| a.max(floor)).collect();
    let sites = diagram.sites();
    let only = cell_only.then(|| sites.len() - 1);
    planar_formula(sites.positions(), sites.weights(), &areas, only)
}

fn nonplanar_of(diagram: &VoronoiDiagram<3>) -> f64 {
    let floor = cell_floor(diagram);
    let volumes: Vec<f64> = diagram.measures().iter().map(|a| a.max(floor)).collect();
    nonplanar_formula(diagram.sites().weights(), &volumes)
}

/// Planar positional score for explicit sites and bounds. Cells that own no
/// grid cell are treated as half a grid cell.
pub fn planar_score(
    sites: &WeightedSites<2>,
    candidate: Point2,
    candidate_weight: f64,
    bounds: Aabb<2>,
    resolution: usize,
    cell_only: bool,
) -> Result<f64> {
    let base = VoronoiDiagram::build(sites.clone(), bounds, resolution)?;
    Ok(planar_of(&base.with_site(candidate, candidate_weight)?, cell_only))
}

/// Volumetric positional score for explicit sites and bounds.
pub fn nonplanar_score(
    sites: &WeightedSites<3>,
    candidate: Point3,
    candidate_weight: f64,
    bounds: Aabb<3>,
    resolution: usize,
) -> Result<f64> {
    let base = VoronoiDiagram::build(sites.clone(), bounds, resolution)?;
    Ok(nonplanar_of(&base.with_site(candidate, candidate_weight)?))
}

/// Planar positional score of a 3D candidate position, evaluated on its
/// projection into the trajectory plane.
pub fn planar_positional(context: &PositionalContext, candidate: &Point3) -> Result<f64> {
    let base = context
        .planar_base
        .as_ref()
        .ok_or_else(|| Error::invalid("context has no trajectory plane"))?;
    if context.is_duplicate(candidate) {
        return Ok(DUPLICATE_SCORE);
    }
    let local = context.project(candidate).expect("plane present with planar diagram");
    let diagram = base.with_site(local, context.config.candidate_weight)?;
    Ok(planar_of(&diagram, context.config.candidate_cell_only))
}

pub fn nonplanar_positional(context: &PositionalContext, candidate: &Point3) -> Result<f64> {
    if context.is_duplicate(candidate) {
        return Ok(DUPLICATE_SCORE);
    }
    let diagram = context.volume_base.with_site(*candidate, context.config.candidate_weight)?;
    Ok(nonplanar_of(&diagram))
}

/// Positional uncertainty, dispatched on the trajectory label.
pub fn positional_uncertainty(context: &PositionalContext, candidate: &Point3) -> Result<f64> {
    if context.class.is_planar() {
        planar_positional(context, candidate)
    } else {
        nonplanar_positional(context, candidate)
    }
}
