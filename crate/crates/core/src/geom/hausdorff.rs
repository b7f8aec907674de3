use super::{Point, PointSet};

/// Directed Hausdorff distance `h(A, B) = max_a min_b |a - b|`.
pub fn directed_hausdorff<const D: usize>(a: &PointSet<D>, b: &PointSet<D>) -> f64 {
    a.points()
        .iter()
        .map(|pa| nearest_sq(pa, b.points()))
        .fold(0.0, f64::max)
        .sqrt()
}

/// Symmetric Hausdorff distance `H(A, B) = max(h(A, B), h(B, A))`.
///
/// Both sets are non-empty by construction of [`PointSet`].
pub fn hausdorff<const D: usize>(a: &PointSet<D>, b: &PointSet<D>) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn nearest_sq<const D: usize>(p: &Point<D>, others: &[Point<D>]) -> f64 {
    others
        .iter()
        .map(|q| (p - q).norm_squared())
        .fold(f64::INFINITY, f64::min)
}
