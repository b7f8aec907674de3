use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::Camera;
use crate::geom::Point3;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Lawnmower,
    Orbit,
    Helix,
}

impl std::str::FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lawnmower" => Ok(Self::Lawnmower),
            "orbit" => Ok(Self::Orbit),
            "helix" => Ok(Self::Helix),
            other => Err(Error::invalid(format!("unknown trajectory kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Lawnmower => "lawnmower",
            Self::Orbit => "orbit",
            Self::Helix => "helix",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub n_views: usize,
    /// Camera height (mid-height for a helix).
    pub altitude: f64,
    /// Half-width of the lawnmower square, or orbit / helix radius.
    pub radius: f64,
    /// Total altitude change of a helix.
    pub sweep: f64,
    pub turns: f64,
    pub target: [f64; 3],
    /// Lawnmower look-at blend: 0 looks straight down, 1 at the target.
    pub tilt: f64,
    /// Position noise as a fraction of `radius`; lawnmower noise is
    /// horizontal only.
    pub jitter: f64,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub vfov: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            kind: TrajectoryKind::Lawnmower,
            n_views: 100,
            altitude: 1.6,
            radius: 1.1,
            sweep: 1.2,
            turns: 2.0,
            target: [0.0, 0.0, -0.6],
            tilt: 0.35,
            jitter: 0.0,
            seed: 0,
            width: 64,
            height: 64,
            vfov: 1.0,
        }
    }
}

impl TrajectorySpec {
    fn validate(&self) -> Result<()> {
        if self.n_views < 8 {
            return Err(Error::invalid(format!("trajectory needs at least 8 views, got {}", self.n_views)));
        }
        let positive = [self.radius, self.turns, self.vfov];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("radius, turns and vfov must be positive"));
        }
        if !(self.altitude.is_finite() && self.sweep.is_finite() && self.sweep >= 0.0) {
            return Err(Error::invalid("altitude and sweep must be finite, sweep non-negative"));
        }
        if !(0.0..=1.0).contains(&self.tilt) || !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::invalid("tilt must lie in [0, 1] and jitter in [0, 1)"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image size must be positive"));
        }
        Ok(())
    }
}

fn lawnmower_positions(spec: &TrajectorySpec) -> Vec<Point3> {
    let n = spec.n_views;
    let rows = (n as f64).sqrt().round().max(1.0) as usize;
    let cols = n.div_ceil(rows);
    let coord = |i: usize, count: usize| {
        if count == 1 {
            0.0
        } else {
            -spec.radius + 2.0 * spec.radius * i as f64 / (count - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(n);
    for r in 0..rows {
        for c in 0..cols {
            // Boustrophedon: alternate rows run backwards.
            let c = if r % 2 == 0 { c } else { cols - 1 - c };
            out.push(Point3::new(
                spec.target[0] + coord(c, cols),
                spec.target[1] + coord(r, rows),
                spec.altitude,
            ));
        }
    }
    out.truncate(n);
    out
}

fn helix_positions(spec: &TrajectorySpec, sweep: f64) -> Vec<Point3> {
    let n = spec.n_views;
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            let theta = TAU * spec.turns * i as f64 / n as f64;
            Point3::new(
                spec.target[0] + spec.radius * theta.cos(),
                spec.target[1] + spec.radius * theta.sin(),
                spec.altitude + sweep * (s - 0.5),
            )
        })
        .collect()
}

/// Camera poses along the trajectory, every camera aimed at the target
/// (lawnmower cameras blend between nadir and the target).
pub fn generate_trajectory(spec: &TrajectorySpec) -> Result<Vec<Camera>> {
    spec.validate()?;
    let mut positions = match spec.kind {
        TrajectoryKind::Lawnmower => lawnmower_positions(spec),
        TrajectoryKind::Orbit => helix_positions(&TrajectorySpec { turns: 1.0, ..*spec }, 0.0),
        TrajectoryKind::Helix => helix_positions(spec, spec.sweep),
    };
    if spec.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let amp = spec.jitter * spec.radius;
        for p in positions.iter_mut() {
            p.x += rng.gen_range(-amp..=amp);
            p.y += rng.gen_range(-amp..=amp);
            if spec.kind == TrajectoryKind::Helix {
                p.z += rng.gen_range(-amp..=amp);
            }
        }
    }
    let target = Point3::from(spec.target);
    positions
        .into_iter()
        .map(|p| {
            let (aim, up) = match spec.kind {
                TrajectoryKind::Lawnmower => {
                    let below = Point3::new(p.x, p.y, target.z);
                    (below + (target - below) * spec.tilt, Point3::y())
                }
                _ => (target, Point3::z()),
            };
            Camera::look_at(p, aim, up, spec.width, spec.height, spec.vfov)
        })
        .collect()
}
