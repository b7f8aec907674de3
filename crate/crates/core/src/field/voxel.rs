use crate::geom::{Aabb, Point3};
use crate::{Error, Result};

/// Raw density that decodes to a density small enough that
/// `1 - exp(-σδ)` rounds to exactly zero: free space.
pub const EMPTY_DENSITY_RAW: f32 = -200.0;

/// Trainable voxel grid of unconstrained parameters.
///
/// Density decodes through softplus (σ ≥ 0), colour through the logistic
/// function (c ∈ [0, 1]³). Voxel `(x, y, z)` lives at index
/// `x + nx * (y + ny * z)`; colours are interleaved RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelField {
    dims: [usize; 3],
    extent: Aabb<3>,
    density: Vec<f32>,
    color: Vec<f32>,
}

impl VoxelField {
    pub fn new(dims: [usize; 3], extent: Aabb<3>, density: Vec<f32>, color: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid(format!("field dims {dims:?} must be at least 2 per axis")));
        }
        let n = dims.iter().product::<usize>();
        if density.len() != n || color.len() != 3 * n {
            return Err(Error::invalid(format!(
                "parameter lengths {} / {} do not match {n} voxels",
                density.len(),
                color.len()
            )));
        }
        if density.iter().chain(&color).any(|v| v.is_nan()) {
            return Err(Error::invalid("field parameters contain NaN"));
        }
        Ok(Self {
            dims,
            extent,
            density,
            color,
        })
    }

    /// Field with every voxel set to the same raw parameters.
    pub fn filled(dims: [usize; 3], extent: Aabb<3>, density_raw: f32, color_raw: f32) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        Self::new(dims, extent, vec![density_raw; n], vec![color_raw; 3 * n])
    }

    /// Free space everywhere.
    pub fn empty(dims: [usize; 3], extent: Aabb<3>) -> Result<Self> {
        Self::filled(dims, extent, EMPTY_DENSITY_RAW, 0.0)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn extent(&self) -> &Aabb<3> {
        &self.extent
    }

    pub fn voxel_count(&self) -> usize {
        self.density.len()
    }

    pub fn voxel_size(&self) -> Point3 {
        let s = self.extent.size();
        Point3::new(
            s.x / self.dims[0] as f64,
            s.y / self.dims[1] as f64,
            s.z / self.dims[2] as f64,
        )
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn voxel_center(&self, x: usize, y: usize, z: usize) -> Point3 {
        let s = self.voxel_size();
        self.extent.min
            + Point3::new(
                (x as f64 + 0.5) * s.x,
                (y as f64 + 0.5) * s.y,
                (z as f64 + 0.5) * s.z,
            )
    }

    pub fn density_params(&self) -> &[f32] {
        &self.density
    }

    pub fn color_params(&self) -> &[f32] {
        &self.color
    }

    pub fn density_params_mut(&mut self) -> &mut [f32] {
        &mut self.density
    }

    pub fn color_params_mut(&mut self) -> &mut [f32] {
        &mut self.color
    }

    pub fn set_voxel(&mut self, index: usize, density_raw: f32, color_raw: [f32; 3]) {
        self.density[index] = density_raw;
        self.color[3 * index..3 * index + 3].copy_from_slice(&color_raw);
    }

    pub fn decode(&self) -> DecodedField {
        DecodedField {
            dims: self.dims,
            extent: self.extent,
            voxel_size: self.voxel_size(),
            sigma: self.density.iter().map(|&r| softplus(r as f64)).collect(),
            color: self
                .color
                .chunks_exact(3)
                .map(|c| [logistic(c[0] as f64), logistic(c[1] as f64), logistic(c[2] as f64)])
                .collect(),
        }
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Inverse of softplus for positive targets.
pub(crate) fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

/// Raw density parameter that decodes to `sigma` (> 0).
pub fn raw_density(sigma: f64) -> f32 {
    softplus_inverse(sigma) as f32
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Trilinear stencil: eight voxel indices and weights summing to one.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub idx: [usize; 8],
    pub w: [f64; 8],
}

/// Field with activations applied, ready for sampling.
#[derive(Debug, Clone)]
pub struct DecodedField {
    dims: [usize; 3],
    extent: Aabb<3>,
    voxel_size: Point3,
    pub(crate) sigma: Vec<f64>,
    pub(crate) color: Vec<[f64; 3]>,
}

impl DecodedField {
    pub fn extent(&self) -> &Aabb<3> {
        &self.extent
    }

    pub(crate) fn stencil(&self, x: &Point3) -> Option<Stencil> {
        if !self.extent.contains(x) {
            return None;
        }
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for k in 0..3 {
            let n = self.dims[k];
            let u = ((x[k] - self.extent.min[k]) / self.voxel_size[k] - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = (u.floor() as usize).min(n - 2);
            base[k] = i0;
            frac[k] = u - i0 as f64;
        }
        let (nx, ny) = (self.dims[0], self.dims[1]);
        let mut st = Stencil {
            idx: [0; 8],
            w: [0.0; 8],
        };
        for corner in 0..8 {
            let (dx, dy, dz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            st.idx[corner] = (base[0] + dx) + nx * ((base[1] + dy) + ny * (base[2] + dz));
            let wx = if dx == 1 { frac[0] } else { 1.0 - frac[0] };
            let wy = if dy == 1 { frac[1] } else { 1.0 - frac[1] };
            let wz = if dz == 1 { frac[2] } else { 1.0 - frac[2] };
            st.w[corner] = wx * wy * wz;
        }
        Some(st)
    }

    pub(crate) fn eval(&self, st: &Stencil) -> (f64, [f64; 3]) {
        let mut sigma = 0.0;
        let mut color = [0.0; 3];
        for (&i, &w) in st.idx.iter().zip(&st.w) {
            sigma += w * self.sigma[i];
            let c = &self.color[i];
            color[0] += w * c[0];
            color[1] += w * c[1];
            color[2] += w * c[2];
        }
        (sigma, color)
    }

    /// Density and colour at `x`; zero outside the extent.
    pub fn sample(&self, x: &Point3) -> (f64, [f64; 3]) {
        match self.stencil(x) {
            Some(st) => self.eval(&st),
            None => (0.0, [0.0; 3]),
        }
    }
}

/// Trilinearly interpolated decoded density and colour at `x`.
pub fn sample_field(field: &VoxelField, x: &Point3) -> (f64, [f64; 3]) {
    field.decode().sample(x)
}
