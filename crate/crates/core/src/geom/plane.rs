use nalgebra::{Matrix3, SymmetricEigen};

use super::{Point2, Point3, PointSet};
use crate::{Error, Result};

/// Plane `{x : normal · x = offset}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Point3,
    pub offset: f64,
    /// Least-squares centroid of the fitted points; origin of [`Plane::to_local`].
    pub origin: Point3,
}

impl Plane {
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Orthogonal projection of `p` onto the plane.
    pub fn project(&self, p: &Point3) -> Point3 {
        p - self.normal * self.signed_distance(p)
    }

    /// Orthonormal in-plane basis `(u, v)` with `u × v = normal`.
    pub fn basis(&self) -> (Point3, Point3) {
        let n = self.normal;
        // Pick the world axis least aligned with the normal.
        let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Point3::x()
        } else if n.y.abs() <= n.z.abs() {
            Point3::y()
        } else {
            Point3::z()
        };
        let u = (axis - n * n.dot(&axis)).normalize();
        let v = n.cross(&u);
        (u, v)
    }

    /// 2D coordinates of the projection of `p` in the plane basis.
    pub fn to_local(&self, p: &Point3) -> Point2 {
        let (u, v) = self.basis();
        let d = p - self.origin;
        Point2::new(d.dot(&u), d.dot(&v))
    }
}

/// Total least-squares plane through a 3D point set.
///
/// The normal is the eigenvector of the scatter matrix with the smallest
/// eigenvalue, which minimizes the sum of squared point-plane distances.
pub fn fit_plane(points: &PointSet<3>) -> Result<Plane> {
    let pts = points.points();
    if pts.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "plane fit needs at least 3 points, got {}",
            pts.len()
        )));
    }
    let centroid = pts.iter().fold(Point3::zeros(), |acc, p| acc + p) / pts.len() as f64;
    let scatter = pts.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p - centroid;
        acc + d * d.transpose()
    });
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (middle, largest) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if largest <= 0.0 || middle <= largest * 1e-12 {
        return Err(Error::DegenerateGeometry(
            "points are coincident or collinear".into(),
        ));
    }
    let mut normal: Point3 = eig.eigenvectors.column(order[0]).into_owned().normalize();
    // Canonical sign: first non-negligible component positive.
    if let Some(c) = normal.iter().find(|c| c.abs() > 1e-12) {
        if *c < 0.0 {
            normal = -normal;
        }
    }
    Ok(Plane {
        normal,
        offset: normal.dot(&centroid),
        origin: centroid,
    })
}
