//! Computational geometry kernel: Hausdorff distance, plane fitting,
//! trajectory planarity, weighted Voronoi rasterization and cell clustering.

mod classify;
mod cluster;
mod hausdorff;
mod plane;
mod voronoi;

pub use classify::{classify_trajectory, TrajectoryClass, TrajectoryLabel};
pub use cluster::{face_adjacency, voronoi_cluster};
pub use hausdorff::{directed_hausdorff, hausdorff};
pub use plane::{fit_plane, Plane};
pub use voronoi::{voronoi_volumes, weighted_voronoi, VoronoiDiagram};

use nalgebra::SVector;

use crate::{Error, Result};

pub type Point<const D: usize> = SVector<f64, D>;
pub type Point2 = Point<2>;
pub type Point3 = Point<3>;

/// Non-empty set of finite points in `D` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<const D: usize> {
    points: Vec<Point<D>>,
}

impl<const D: usize> PointSet<D> {
    pub fn new(points: Vec<Point<D>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("point set must contain at least one point"));
        }
        if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Self { points })
    }

    pub fn from_arrays(points: &[[f64; D]]) -> Result<Self> {
        Self::new(points.iter().map(|p| Point::<D>::from(*p)).collect())
    }

    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounding_box(&self) -> Aabb<D> {
        let mut min = self.points[0];
        let mut max = self.points[0];
        for p in &self.points[1..] {
            min = min.inf(p);
            max = max.sup(p);
        }
        Aabb { min, max }
    }
}

/// Sites of a multiplicatively weighted Voronoi diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSites<const D: usize> {
    positions: PointSet<D>,
    weights: Vec<f64>,
}

impl<const D: usize> WeightedSites<D> {
    pub fn new(positions: PointSet<D>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != positions.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} sites",
                weights.len(),
                positions.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("site weight {w} is not positive")));
        }
        Ok(Self { positions, weights })
    }

    /// All weights equal to one.
    pub fn uniform(positions: PointSet<D>) -> Self {
        let weights = vec![1.0; positions.len()];
        Self { positions, weights }
    }

    pub fn positions(&self) -> &[Point<D>] {
        self.positions.points()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub(crate) fn push(&mut self, position: Point<D>, weight: f64) {
        self.positions.points.push(position);
        self.weights.push(weight);
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<const D: usize> {
    pub min: Point<D>,
    pub max: Point<D>,
}

impl<const D: usize> Aabb<D> {
    pub fn new(min: Point<D>, max: Point<D>) -> Result<Self> {
        if min.iter().chain(max.iter()).any(|c| !c.is_finite()) {
            return Err(Error::invalid("box corners must be finite"));
        }
        if min.iter().zip(max.iter()).any(|(a, b)| a >= b) {
            return Err(Error::invalid("box must have positive extent on every axis"));
        }
        Ok(Self { min, max })
    }

    pub fn unit() -> Self {
        Self {
            min: Point::<D>::zeros(),
            max: Point::<D>::repeat(1.0),
        }
    }

    pub fn size(&self) -> Point<D> {
        self.max - self.min
    }

    /// Area in 2D, volume in 3D.
    pub fn measure(&self) -> f64 {
        self.size().iter().product()
    }

    pub fn diagonal(&self) -> f64 {
        self.size().norm()
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// Grow every side by `fraction` of the largest side, with a minimum pad
    /// of `min_pad` so degenerate boxes get positive extent.
    pub fn padded(&self, fraction: f64, min_pad: f64) -> Self {
        let largest = self.size().max();
        let pad = (largest * fraction).max(min_pad);
        Self {
            min: self.min.add_scalar(-pad),
            max: self.max.add_scalar(pad),
        }
    }
}
