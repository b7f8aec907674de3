use std::io::Write;

use rayon::prelude::*;

use super::{Aabb, Point, WeightedSites};
use crate::{Error, Result};

pub const MIN_RESOLUTION: usize = 16;

/// Rasterized multiplicatively weighted Voronoi diagram.
///
/// Every grid cell center `p` belongs to the site minimizing
/// `d(p, p_i) / λ_i`; exact ties go to the lowest site index.
#[derive(Debug, Clone)]
pub struct VoronoiDiagram<const D: usize> {
    sites: WeightedSites<D>,
    bounds: Aabb<D>,
    resolution: usize,
    ownership: Vec<u32>,
    // Weighted distance from each cell center to its owner.
    owner_score: Vec<f64>,
    measures: Vec<f64>,
}

/// Planar diagram; measures are areas.
pub fn weighted_voronoi(
    sites: &WeightedSites<2>,
    bounds: Aabb<2>,
    resolution: usize,
) -> Result<VoronoiDiagram<2>> {
    VoronoiDiagram::build(sites.clone(), bounds, resolution)
}

/// Volumetric diagram; measures are volumes.
pub fn voronoi_volumes(
    sites: &WeightedSites<3>,
    bounds: Aabb<3>,
    resolution: usize,
) -> Result<VoronoiDiagram<3>> {
    VoronoiDiagram::build(sites.clone(), bounds, resolution)
}

#[inline]
fn weighted_distance<const D: usize>(p: &Point<D>, site: &Point<D>, weight: f64) -> f64 {
    (p - site).norm() / weight
}

impl<const D: usize> VoronoiDiagram<D> {
    pub fn build(sites: WeightedSites<D>, bounds: Aabb<D>, resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::invalid(format!(
                "voronoi resolution {resolution} below minimum {MIN_RESOLUTION}"
            )));
        }
        if sites.is_empty() {
            return Err(Error::invalid("voronoi diagram needs at least one site"));
        }
        if let Some(p) = sites.positions().iter().find(|p| !bounds.contains(p)) {
            return Err(Error::invalid(format!(
                "site {:?} lies outside the diagram bounds",
                p.as_slice()
            )));
        }
        let n_cells = resolution.pow(D as u32);
        let mut ownership = vec![0u32; n_cells];
        let mut owner_score = vec![0.0f64; n_cells];
        let geometry = Grid { bounds, resolution };
        let positions = sites.positions();
        let weights = sites.weights();
        ownership
            .par_chunks_mut(resolution)
            .zip(owner_score.par_chunks_mut(resolution))
            .enumerate()
            .for_each(|(row, (own_row, score_row))| {
                for (k, (own, score)) in own_row.iter_mut().zip(score_row.iter_mut()).enumerate() {
                    let p = geometry.center(row * resolution + k);
                    let mut best = (0u32, f64::INFINITY);
                    for (i, (site, &w)) in positions.iter().zip(weights).enumerate() {
                        let d = weighted_distance(&p, site, w);
                        if d < best.1 {
                            best = (i as u32, d);
                        }
                    }
                    *own = best.0;
                    *score = best.1;
                }
            });
        let mut diagram = Self {
            sites,
            bounds,
            resolution,
            ownership,
            owner_score,
            measures: Vec::new(),
        };
        diagram.recount();
        Ok(diagram)
    }

    /// Diagram with one extra site appended (highest index).
    ///
    /// Produces exactly the ownership a full rebuild would: the new site only
    /// takes cells where it is strictly closer in weighted distance.
    pub fn with_site(&self, position: Point<D>, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::invalid(format!("site weight {weight} is not positive")));
        }
        if !self.bounds.contains(&position) {
            return Err(Error::invalid("inserted site lies outside the diagram bounds"));
        }
        let new_index = self.sites.len() as u32;
        let geometry = self.grid();
        let mut ownership = self.ownership.clone();
        let mut owner_score = self.owner_score.clone();
        let resolution = self.resolution;
        ownership
            .par_chunks_mut(resolution)
            .zip(owner_score.par_chunks_mut(resolution))
            .enumerate()
            .for_each(|(row, (own_row, score_row))| {
                for (k, (own, score)) in own_row.iter_mut().zip(score_row.iter_mut()).enumerate() {
                    let p = geometry.center(row * resolution + k);
                    let d = weighted_distance(&p, &position, weight);
                    if d < *score {
                        *own = new_index;
                        *score = d;
                    }
                }
            });
        let mut sites = self.sites.clone();
        sites.push(position, weight);
        let mut diagram = Self {
            sites,
            bounds: self.bounds,
            resolution,
            ownership,
            owner_score,
            measures: Vec::new(),
        };
        diagram.recount();
        Ok(diagram)
    }

    fn recount(&mut self) {
        let mut counts = vec![0usize; self.sites.len()];
        for &o in &self.ownership {
            counts[o as usize] += 1;
        }
        let cell = self.cell_measure();
        self.measures = counts.into_iter().map(|c| c as f64 * cell).collect();
    }

    fn grid(&self) -> Grid<D> {
        Grid {
            bounds: self.bounds,
            resolution: self.resolution,
        }
    }

    pub fn sites(&self) -> &WeightedSites<D> {
        &self.sites
    }

    pub fn bounds(&self) -> &Aabb<D> {
        &self.bounds
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Owner site index of every grid cell, axis 0 fastest.
    pub fn ownership(&self) -> &[u32] {
        &self.ownership
    }

    /// Area (2D) or volume (3D) owned by each site.
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    /// Area or volume of one grid cell.
    pub fn cell_measure(&self) -> f64 {
        self.bounds.measure() / self.ownership.len() as f64
    }

    pub fn cell_coords(&self, index: usize) -> [usize; D] {
        self.grid().coords(index)
    }

    pub fn cell_center(&self, index: usize) -> Point<D> {
        self.grid().center(index)
    }

    /// Debug export: one row per cell, `cell_x,cell_y[,cell_z],site_index`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        let axes = ["cell_x", "cell_y", "cell_z"];
        let mut header: Vec<&str> = axes[..D].to_vec();
        header.push("site_index");
        w.write_record(&header).map_err(csv_err)?;
        for (i, owner) in self.ownership.iter().enumerate() {
            let mut row: Vec<String> = self.cell_coords(i).iter().map(|c| c.to_string()).collect();
            row.push(owner.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<voronoi csv>", e))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::format("voronoi csv", e.to_string())
}

#[derive(Clone, Copy)]
struct Grid<const D: usize> {
    bounds: Aabb<D>,
    resolution: usize,
}

impl<const D: usize> Grid<D> {
    fn coords(&self, mut index: usize) -> [usize; D] {
        let mut c = [0usize; D];
        for slot in c.iter_mut() {
            *slot = index % self.resolution;
            index /= self.resolution;
        }
        c
    }

    fn center(&self, index: usize) -> Point<D> {
        let c = self.coords(index);
        let size = self.bounds.size();
        Point::<D>::from_fn(|k, _| {
            self.bounds.min[k] + (c[k] as f64 + 0.5) * size[k] / self.resolution as f64
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point2, PointSet};
    use proptest::prelude::*;

    fn sites2(pts: &[[f64; 2]], weights: &[f64]) -> WeightedSites<2> {
        WeightedSites::new(PointSet::from_arrays(pts).unwrap(), weights.to_vec()).unwrap()
    }

    #[test]
    fn single_site_owns_everything() {
        let d = weighted_voronoi(&sites2(&[[0.3, 0.7]], &[1.0]), Aabb::unit(), 64).unwrap();
        assert!((d.measures()[0] - 1.0).abs() < 1e-12);
        let d3 = voronoi_volumes(
            &WeightedSites::uniform(PointSet::from_arrays(&[[0.5, 0.5, 0.5]]).unwrap()),
            Aabb::unit(),
            16,
        )
        .unwrap();
        assert!((d3.measures()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisector_split() {
        let d = weighted_voronoi(
            &sites2(&[[0.25, 0.5], [0.75, 0.5]], &[1.0, 1.0]),
            Aabb::unit(),
            128,
        )
        .unwrap();
        let quantum = d.cell_measure() * 128.0;
        assert!((d.measures()[0] - 0.5).abs() <= quantum);
        assert!((d.measures()[1] - 0.5).abs() <= quantum);
    }

    #[test]
    fn cube_corners_split_evenly() {
        let mut pts = Vec::new();
        for k in 0..8 {
            pts.push([
                if k & 1 == 0 { 0.0 } else { 1.0 },
                if k & 2 == 0 { 0.0 } else { 1.0 },
                if k & 4 == 0 { 0.0 } else { 1.0 },
            ]);
        }
        let sites = WeightedSites::uniform(PointSet::from_arrays(&pts).unwrap());
        let d = voronoi_volumes(&sites, Aabb::unit(), 32).unwrap();
        for m in d.measures() {
            assert!((m - 0.125).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn exact_tie_goes_to_lowest_index() {
        // Both sites coincide: every cell is a tie.
        let d = weighted_voronoi(&sites2(&[[0.5, 0.5], [0.5, 0.5]], &[1.0, 1.0]), Aabb::unit(), 16)
            .unwrap();
        assert!(d.ownership().iter().all(|&o| o == 0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = sites2(&[[1.5, 0.5]], &[1.0]);
        assert!(weighted_voronoi(&s, Aabb::unit(), 32).is_err());
        let s = sites2(&[[0.5, 0.5]], &[1.0]);
        assert!(weighted_voronoi(&s, Aabb::unit(), 8).is_err());
        assert!(WeightedSites::new(PointSet::from_arrays(&[[0.5, 0.5]]).unwrap(), vec![0.0]).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let d = weighted_voronoi(&sites2(&[[0.2, 0.2], [0.8, 0.8]], &[1.0, 1.0]), Aabb::unit(), 16)
            .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("cell_x,cell_y,site_index"));
        assert_eq!(lines.next(), Some("0,0,0"));
        assert_eq!(text.lines().count(), 1 + 256);
        assert!(!text.contains('\r'));
    }

    fn arb_sites() -> impl Strategy<Value = Vec<([f64; 2], f64)>> {
        prop::collection::vec((prop::array::uniform2(0.0f64..1.0), 0.5f64..3.0), 1..8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn measures_partition_bounds(raw in arb_sites()) {
            let pts: Vec<[f64; 2]> = raw.iter().map(|r| r.0).collect();
            let w: Vec<f64> = raw.iter().map(|r| r.1).collect();
            let d = weighted_voronoi(&sites2(&pts, &w), Aabb::unit(), 32).unwrap();
            let total: f64 = d.measures().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(d.measures().iter().all(|m| *m >= 0.0));
        }

        #[test]
        fn common_weight_scaling_keeps_ownership(raw in arb_sites(), scale in 0.1f64..10.0) {
            let pts: Vec<[f64; 2]> = raw.iter().map(|r| r.0).collect();
            // Powers of two scale d/λ exactly.
            let pow2 = 2f64.powi((scale.log2().round()) as i32);
            let w: Vec<f64> = raw.iter().map(|r| r.1).collect();
            let ws: Vec<f64> = w.iter().map(|x| x * pow2).collect();
            let a = weighted_voronoi(&sites2(&pts, &w), Aabb::unit(), 32).unwrap();
            let b = weighted_voronoi(&sites2(&pts, &ws), Aabb::unit(), 32).unwrap();
            prop_assert_eq!(a.ownership(), b.ownership());
            // Arbitrary scales agree up to floating-point ties.
            let wsf: Vec<f64> = w.iter().map(|x| x * scale).collect();
            let c = weighted_voronoi(&sites2(&pts, &wsf), Aabb::unit(), 32).unwrap();
            let differing = a.ownership().iter().zip(c.ownership()).filter(|(x, y)| x != y).count();
            prop_assert!(differing <= 2);
        }

        #[test]
        fn insertion_matches_rebuild(raw in arb_sites(), extra in prop::array::uniform2(0.0f64..1.0), w in 0.5f64..3.0) {
            let pts: Vec<[f64; 2]> = raw.iter().map(|r| r.0).collect();
            let ws: Vec<f64> = raw.iter().map(|r| r.1).collect();
            let base = weighted_voronoi(&sites2(&pts, &ws), Aabb::unit(), 32).unwrap();
            let inserted = base.with_site(Point2::from(extra), w).unwrap();
            let mut pts2 = pts.clone();
            pts2.push(extra);
            let mut ws2 = ws.clone();
            ws2.push(w);
            let rebuilt = weighted_voronoi(&sites2(&pts2, &ws2), Aabb::unit(), 32).unwrap();
            prop_assert_eq!(inserted.ownership(), rebuilt.ownership());
            prop_assert_eq!(inserted.measures(), rebuilt.measures());
        }
    }

    #[test]
    fn resolution_doubling_converges() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let n = 5;
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let s = sites2(&pts, &w);
            let lo = weighted_voronoi(&s, Aabb::unit(), 128).unwrap();
            let hi = weighted_voronoi(&s, Aabb::unit(), 256).unwrap();
            // Perimeter-proportional quantum: boundary length (<= 4 for the
            // unit square per cell, bounded by the box perimeter plus
            // interior boundaries) times the cell width.
            let h = 1.0 / 128.0;
            for (a, b) in lo.measures().iter().zip(hi.measures()) {
                let perimeter_bound = 4.0 + 2.0 * std::f64::consts::PI;
                assert!((a - b).abs() < 4.0 * perimeter_bound * h, "{a} vs {b}");
            }
        }
    }
}
