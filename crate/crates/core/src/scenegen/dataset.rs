use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrajectoryKind;
use crate::field::{read_checkpoint, render_view, write_checkpoint, Camera, RenderConfig, VoxelField};
use crate::geom::{Aabb, Point3};
use crate::image::Image;
use crate::pfm;
use crate::{Error, Result};

/// Ground-truth field checkpoint stored next to the rendered views.
pub const GT_FIELD_FILE: &str = "ground_truth.field";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_views: usize,
    pub width: usize,
    pub height: usize,
    pub extent_min: [f64; 3],
    pub extent_max: [f64; 3],
    pub trajectory_kind: TrajectoryKind,
    pub grid_dims: [usize; 3],
    /// Renderer settings used for the images; evaluation reuses them.
    pub render: RenderConfig,
}

impl Manifest {
    pub fn extent(&self) -> Result<Aabb<3>> {
        Aabb::new(Point3::from(self.extent_min), Point3::from(self.extent_max))
    }
}

/// One line of `poses.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRow {
    pub id: usize,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub ux: f64,
    pub uy: f64,
    pub uz: f64,
    pub vfov_rad: f64,
    pub width: usize,
    pub height: usize,
}

impl PoseRow {
    fn from_camera(id: usize, c: &Camera) -> Self {
        Self {
            id,
            px: c.position.x,
            py: c.position.y,
            pz: c.position.z,
            fx: c.forward.x,
            fy: c.forward.y,
            fz: c.forward.z,
            ux: c.up.x,
            uy: c.up.y,
            uz: c.up.z,
            vfov_rad: c.vfov,
            width: c.width,
            height: c.height,
        }
    }

    fn camera(&self) -> Result<Camera> {
        Camera::new(
            Point3::new(self.px, self.py, self.pz),
            Point3::new(self.fx, self.fy, self.fz),
            Point3::new(self.ux, self.uy, self.uz),
            self.width,
            self.height,
            self.vfov_rad,
        )
    }
}

/// A rendered dataset; view `i` has id `i`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub cameras: Vec<Camera>,
    pub images: Vec<Image>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn ground_truth(&self) -> Result<VoxelField> {
        read_checkpoint(&self.root.join(GT_FIELD_FILE))
    }
}

fn image_path(root: &Path, id: usize) -> PathBuf {
    root.join("images").join(format!("{id}.pfm"))
}

/// Render every camera at `size` and write manifest, poses, images and the
/// ground-truth checkpoint under `out_dir`.
pub fn render_dataset(
    gt: &VoxelField,
    cameras: &[Camera],
    size: (usize, usize),
    render: &RenderConfig,
    kind: TrajectoryKind,
    out_dir: &Path,
) -> Result<Dataset> {
    if cameras.is_empty() {
        return Err(Error::invalid("dataset needs at least one camera"));
    }
    let cameras: Vec<Camera> = cameras.iter().map(|c| c.with_resolution(size.0, size.1)).collect();
    let images_dir = out_dir.join("images");
    fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
    let images: Vec<Image> = cameras
        .par_iter()
        .enumerate()
        .map(|(id, cam)| {
            let img = render_view(gt, cam, render, id as u64).mean_image();
            pfm::write(&image_path(out_dir, id), &img)?;
            Ok(img)
        })
        .collect::<Result<_>>()?;

    let poses = out_dir.join("poses.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&poses)
        .map_err(|e| Error::format("poses.csv", e.to_string()))?;
    for (id, c) in cameras.iter().enumerate() {
        w.serialize(PoseRow::from_camera(id, c))
            .map_err(|e| Error::format("poses.csv", e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&poses, e))?;

    let extent = gt.extent();
    let manifest = Manifest {
        n_views: cameras.len(),
        width: size.0,
        height: size.1,
        extent_min: extent.min.into(),
        extent_max: extent.max.into(),
        trajectory_kind: kind,
        grid_dims: gt.dims(),
        render: *render,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::format("manifest.json", e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    write_checkpoint(&out_dir.join(GT_FIELD_FILE), gt)?;
    Ok(Dataset {
        root: out_dir.to_path_buf(),
        manifest,
        cameras,
        images,
    })
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::format("manifest.json", e.to_string()))?;

    let poses = dir.join("poses.csv");
    let mut r = csv::Reader::from_path(&poses).map_err(|e| Error::format("poses.csv", e.to_string()))?;
    let mut cameras = Vec::new();
    for (line, row) in r.deserialize::<PoseRow>().enumerate() {
        let row = row.map_err(|e| Error::format("poses.csv", e.to_string()))?;
        if row.id != line {
            return Err(Error::format("poses.csv", format!("expected id {line}, found {}", row.id)));
        }
        cameras.push(row.camera()?);
    }
    if cameras.len() != manifest.n_views {
        return Err(Error::format(
            "poses.csv",
            format!("{} poses but manifest lists {} views", cameras.len(), manifest.n_views),
        ));
    }
    let images = (0..cameras.len())
        .into_par_iter()
        .map(|id| {
            let img = pfm::read(&image_path(dir, id))?;
            let c = &cameras[id];
            if img.width() != c.width || img.height() != c.height || img.channels() != 3 {
                return Err(Error::format("images", format!("view {id} has the wrong shape")));
            }
            Ok(img)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        root: dir.to_path_buf(),
        manifest,
        cameras,
        images,
    })
}
