use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{logit, softplus_inverse, VoxelField};
use crate::geom::{Aabb, Point3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Primitive {
    Box { min: [f64; 3], max: [f64; 3], color: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64, color: [f64; 3] },
}

impl Primitive {
    fn contains(&self, p: &Point3) -> bool {
        match self {
            Primitive::Box { min, max, .. } => (0..3).all(|k| p[k] >= min[k] && p[k] <= max[k]),
            Primitive::Sphere { center, radius, .. } => (p - Point3::from(*center)).norm() <= *radius,
        }
    }

    fn color(&self) -> [f64; 3] {
        match self {
            Primitive::Box { color, .. } | Primitive::Sphere { color, .. } => *color,
        }
    }

    /// Shift (and if needed shrink) the primitive so it lies inside `bounds`.
    fn fit_within(self, bounds: &Aabb<3>) -> Self {
        match self {
            Primitive::Box { mut min, mut max, color } => {
                for k in 0..3 {
                    let size = (max[k] - min[k]).min(bounds.max[k] - bounds.min[k]);
                    let lo = min[k].clamp(bounds.min[k], bounds.max[k] - size);
                    min[k] = lo;
                    max[k] = lo + size;
                }
                Primitive::Box { min, max, color }
            }
            Primitive::Sphere { mut center, radius, color } => {
                let half = (0..3).map(|k| 0.5 * (bounds.max[k] - bounds.min[k])).fold(f64::INFINITY, f64::min);
                let radius = radius.min(half);
                for k in 0..3 {
                    center[k] = center[k].clamp(bounds.min[k] + radius, bounds.max[k] - radius);
                }
                Primitive::Sphere { center, radius, color }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub dims: [usize; 3],
    pub extent_min: [f64; 3],
    pub extent_max: [f64; 3],
    pub boxes: usize,
    pub spheres: usize,
    /// Primitive size range as a fraction of the smallest extent side.
    pub size_range: (f64, f64),
    pub palette: Vec<[f64; 3]>,
    /// Checkerboard tiles per side of a one-voxel ground layer; 0 disables it.
    pub ground_tiles: usize,
    /// Density of occupied voxels, per world unit.
    pub solid_density: f64,
    /// Primitives placed before the random ones.
    pub primitives: Vec<Primitive>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            dims: [16, 16, 16],
            extent_min: [-1.0, -1.0, -1.0],
            extent_max: [1.0, 1.0, 1.0],
            boxes: 4,
            spheres: 2,
            size_range: (0.2, 0.45),
            palette: vec![
                [0.85, 0.25, 0.2],
                [0.2, 0.6, 0.85],
                [0.9, 0.8, 0.25],
                [0.3, 0.75, 0.35],
                [0.75, 0.4, 0.8],
                [0.95, 0.6, 0.3],
            ],
            ground_tiles: 4,
            solid_density: 40.0,
            primitives: Vec::new(),
        }
    }
}

impl SceneSpec {
    pub fn extent(&self) -> Result<Aabb<3>> {
        Aabb::new(Point3::from(self.extent_min), Point3::from(self.extent_max))
    }

    fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 8) {
            return Err(Error::invalid(format!("scene grid {:?} must be at least 8 per axis", self.dims)));
        }
        let (lo, hi) = self.size_range;
        if !(lo > 0.0 && hi >= lo && hi <= 1.0) {
            return Err(Error::invalid("primitive size range must satisfy 0 < min <= max <= 1"));
        }
        if self.boxes + self.spheres > 0 && self.palette.is_empty() {
            return Err(Error::invalid("palette is empty"));
        }
        if !(self.solid_density > 0.0 && self.solid_density.is_finite()) {
            return Err(Error::invalid("solid density must be positive"));
        }
        let in_unit = |c: &[f64; 3]| c.iter().all(|v| (0.0..=1.0).contains(v));
        if !self.palette.iter().all(in_unit) {
            return Err(Error::invalid("palette colours must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Ground layer plus explicit and random primitives, each fitted inside
    /// the extent. Later primitives paint over earlier ones.
    pub fn primitives(&self) -> Result<Vec<Primitive>> {
        self.validate()?;
        let extent = self.extent()?;
        let size = extent.size();
        let mut out = Vec::new();
        let voxel_z = size.z / self.dims[2] as f64;
        if self.ground_tiles > 0 {
            let n = self.ground_tiles;
            let (tx, ty) = (size.x / n as f64, size.y / n as f64);
            let shades = [[0.55, 0.5, 0.45], [0.25, 0.3, 0.3]];
            for i in 0..n {
                for j in 0..n {
                    let x0 = extent.min.x + i as f64 * tx;
                    let y0 = extent.min.y + j as f64 * ty;
                    out.push(Primitive::Box {
                        min: [x0, y0, extent.min.z],
                        max: [x0 + tx, y0 + ty, extent.min.z + voxel_z],
                        color: shades[(i + j) % 2],
                    });
                }
            }
        }
        out.extend(self.primitives.iter().map(|p| p.fit_within(&extent)));

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let side = size.min();
        // Objects rest on the ground layer.
        let floor = extent.min.z + if self.ground_tiles > 0 { voxel_z } else { 0.0 };
        let color = |rng: &mut ChaCha8Rng| self.palette[rng.gen_range(0..self.palette.len())];
        for _ in 0..self.boxes {
            let s: Vec<f64> = (0..3).map(|_| side * rng.gen_range(self.size_range.0..=self.size_range.1)).collect();
            let x = rng.gen_range(extent.min.x..=extent.max.x - s[0]);
            let y = rng.gen_range(extent.min.y..=extent.max.y - s[1]);
            let p = Primitive::Box {
                min: [x, y, floor],
                max: [x + s[0], y + s[1], floor + s[2]],
                color: color(&mut rng),
            };
            out.push(p.fit_within(&extent));
        }
        for _ in 0..self.spheres {
            let r = 0.5 * side * rng.gen_range(self.size_range.0..=self.size_range.1);
            let x = rng.gen_range(extent.min.x + r..=extent.max.x - r);
            let y = rng.gen_range(extent.min.y + r..=extent.max.y - r);
            let z = floor + r + rng.gen_range(0.0..=0.5 * r);
            let p = Primitive::Sphere {
                center: [x, y, z],
                radius: r,
                color: color(&mut rng),
            };
            out.push(p.fit_within(&extent));
        }
        Ok(out)
    }
}

/// Voxelize the scene: a voxel is occupied by the last primitive containing
/// its center. Free voxels get zero density and mid-grey colour.
pub fn generate_scene(spec: &SceneSpec) -> Result<VoxelField> {
    let prims = spec.primitives()?;
    let mut field = VoxelField::empty(spec.dims, spec.extent()?)?;
    let solid = softplus_inverse(spec.solid_density) as f32;
    let [nx, ny, nz] = spec.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let c = field.voxel_center(x, y, z);
                if let Some(p) = prims.iter().rev().find(|p| p.contains(&c)) {
                    let color = p.color().map(|v| logit(v.clamp(1e-4, 1.0 - 1e-4)) as f32);
                    let i = field.index(x, y, z);
                    field.set_voxel(i, solid, color);
                }
            }
        }
    }
    Ok(field)
}

/// Occupied voxel count, for tests and summaries.
#[cfg(test)]
pub(crate) fn occupied(field: &VoxelField) -> usize {
    field.density_params().iter().filter(|&&d| d > crate::field::EMPTY_DENSITY_RAW).count()
}
