use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TRACE_HEADER: &str = "round,selected_id,psnr,ssim,sigma_rgb2,sigma_pos2,hybrid,wall_ms";

/// One selection round: test metrics of the field that scored the
/// candidates, and the chosen view with its scores where the strategy has
/// them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub selected_id: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub sigma_rgb2: Option<f64>,
    pub sigma_pos2: Option<f64>,
    pub hybrid: Option<f64>,
    pub wall_ms: Option<f64>,
}

pub fn write_trace(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::format("trace", e.to_string()))?;
    for r in records {
        w.serialize(r).map_err(|e| Error::format("trace", e.to_string()))?;
    }
    if records.is_empty() {
        w.write_record(TRACE_HEADER.split(',')).map_err(|e| Error::format("trace", e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<RoundRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format("trace", format!("{other:?}")),
    })?;
    let header = r.headers().map_err(|e| Error::format("trace", e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != TRACE_HEADER {
        return Err(Error::format(
            path.display().to_string(),
            format!("trace header {:?} does not match the expected schema", header),
        ));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::format(path.display().to_string(), e.to_string())))
        .collect()
}
