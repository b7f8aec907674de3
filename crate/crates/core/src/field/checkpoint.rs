//! Binary field checkpoint.
//!
//! Layout (all little-endian):
//! `magic[8] | nx ny nz: u32 | min.xyz max.xyz: f64 | density: f32 * n | color: f32 * 3n`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::VoxelField;
use crate::geom::{Aabb, Point3};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NBVVOX01";

pub fn encode_checkpoint<W: Write>(field: &VoxelField, mut out: W) -> std::io::Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    for d in field.dims() {
        out.write_all(&(d as u32).to_le_bytes())?;
    }
    let e = field.extent();
    for v in e.min.iter().chain(e.max.iter()) {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in field.density_params().iter().chain(field.color_params()) {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn decode_checkpoint<R: Read>(mut input: R) -> Result<VoxelField> {
    let ctx = "field checkpoint";
    let mut read = |buf: &mut [u8]| input.read_exact(buf).map_err(|e| Error::format(ctx, e.to_string()));
    let mut magic = [0u8; 8];
    read(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::format(ctx, "bad magic bytes"));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        let mut b = [0u8; 4];
        read(&mut b)?;
        *d = u32::from_le_bytes(b) as usize;
    }
    let mut corners = [0.0f64; 6];
    for c in corners.iter_mut() {
        let mut b = [0u8; 8];
        read(&mut b)?;
        *c = f64::from_le_bytes(b);
    }
    let n: usize = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= 1 << 30)
        .ok_or_else(|| Error::format(ctx, "voxel count out of range"))?;
    let mut floats = |count: usize| -> Result<Vec<f32>> {
        let mut bytes = vec![0u8; count * 4];
        read(&mut bytes)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    };
    let density = floats(n)?;
    let color = floats(3 * n)?;
    let extent = Aabb::new(
        Point3::new(corners[0], corners[1], corners[2]),
        Point3::new(corners[3], corners[4], corners[5]),
    )
    .map_err(|e| Error::format(ctx, e.to_string()))?;
    VoxelField::new(dims, extent, density, color).map_err(|e| Error::format(ctx, e.to_string()))
}

pub fn write_checkpoint(path: &Path, field: &VoxelField) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode_checkpoint(field, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<VoxelField> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(BufReader::new(file))
}
