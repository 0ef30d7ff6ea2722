use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::RadialGrid;

/// Smallest radius the Coulomb grid is anchored at; `r0 = 0` maps here.
pub const COULOMB_MIN_RADIUS: f64 = 1e-6;
/// The regular Coulomb solution is started from its power series at or
/// below this radius.
const SERIES_RADIUS: f64 = 1e-2;
/// Nodes kept below the boundary node for finite differences.
const GUARD_NODES: usize = 9;

/// One channel: target threshold and electron angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub index: usize,
    pub threshold: f64,
    pub l: u32,
}

/// Thresholds and angular momenta of all channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    channels: Vec<Channel>,
}

impl ChannelSet {
    pub fn new(thresholds: &[f64], angular_momenta: &[u32]) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::validation("channels.thresholds", "at least one channel is required"));
        }
        if thresholds.len() != angular_momenta.len() {
            return Err(Error::validation(
                "channels.l",
                format!(
                    "expected {} angular momenta, got {}",
                    thresholds.len(),
                    angular_momenta.len()
                ),
            ));
        }
        if thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::validation("channels.thresholds", "thresholds must be finite"));
        }
        if thresholds.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::validation("channels.thresholds", "thresholds must be ascending"));
        }
        let channels = thresholds
            .iter()
            .zip(angular_momenta)
            .enumerate()
            .map(|(index, (&threshold, &l))| Channel {
                index,
                threshold,
                l,
            })
            .collect();
        Ok(Self { channels })
    }

    pub fn single(l: u32) -> Self {
        Self::new(&[0.0], &[l]).expect("one channel at zero is valid")
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Channel> {
        self.channels.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Channel> {
        self.channels.iter()
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.threshold).collect()
    }

    /// Lowest threshold; every channel is closed below it.
    pub fn lowest_threshold(&self) -> f64 {
        self.channels[0].threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Coulomb,
    HardWall { wall_radius: f64 },
}

/// Long-range potential outside `r0` together with the grid its channel
/// functions are sampled on.
#[derive(Debug, Clone)]
pub struct LongRangeModel {
    kind: ModelKind,
    r0: f64,
    grid: Arc<RadialGrid>,
    boundary_index: usize,
}

impl LongRangeModel {
    /// Coulomb tail on a grid uniform in `ln r` with step `dx`, reaching at
    /// least `r_max`. The boundary radius `max(r0, 1e-6)` is a grid node.
    pub fn coulomb(r0: f64, r_max: f64, dx: f64) -> Result<Self> {
        if !(r0 >= 0.0) || !r0.is_finite() {
            return Err(Error::InvalidGrid(format!("r0 must be >= 0, got {r0}")));
        }
        let r_b = r0.max(COULOMB_MIN_RADIUS);
        if !(dx > 0.0) || dx > 0.05 {
            return Err(Error::InvalidGrid(format!("log step must lie in (0, 0.05], got {dx}")));
        }
        let r_start = r_b.min(SERIES_RADIUS);
        let nodes_below = ((r_b / r_start).ln() / dx).ceil() as usize + GUARD_NODES;
        let grid = RadialGrid::logarithmic(r_b, nodes_below, dx, r_max)?;
        if grid.len() < nodes_below + 2 * GUARD_NODES {
            return Err(Error::InvalidGrid(format!("r_max {r_max} too close to r0 {r_b}")));
        }
        Ok(Self {
            kind: ModelKind::Coulomb,
            r0,
            grid: Arc::new(grid),
            boundary_index: nodes_below,
        })
    }

    /// Infinite wall at `wall_radius`, free motion on `[r0, wall_radius]`.
    pub fn hard_wall(r0: f64, wall_radius: f64, step: f64) -> Result<Self> {
        if !(wall_radius > r0) {
            return Err(Error::InvalidGrid(format!(
                "wall radius {wall_radius} must exceed r0 {r0}"
            )));
        }
        let grid = RadialGrid::uniform(r0, wall_radius, step)?;
        Ok(Self {
            kind: ModelKind::HardWall { wall_radius },
            r0,
            grid: Arc::new(grid),
            boundary_index: 0,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Coulomb => "coulomb",
            ModelKind::HardWall { .. } => "hard_wall",
        }
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Node at which boundary data are taken.
    pub fn boundary_index(&self) -> usize {
        self.boundary_index
    }

    pub fn boundary_radius(&self) -> f64 {
        self.grid.nodes()[self.boundary_index]
    }

    /// Kinetic energy must be negative for Coulomb and positive inside the
    /// wall.
    pub fn check_closed(&self, channel: &Channel, energy: f64) -> Result<()> {
        let ok = match self.kind {
            ModelKind::Coulomb => energy < 0.0,
            ModelKind::HardWall { .. } => energy > 0.0,
        };
        if !ok || !energy.is_finite() {
            return Err(Error::OpenChannel {
                channel: channel.index,
                energy,
            });
        }
        if let ModelKind::HardWall { .. } = self.kind {
            if channel.l != 0 {
                return Err(Error::UnsupportedAngularMomentum {
                    l: channel.l,
                    model: "hard_wall",
                });
            }
        }
        Ok(())
    }

    /// Continuous boundary phase: `pi nu` (Coulomb) or `k L` (hard wall).
    pub fn raw_phase(&self, energy: f64) -> f64 {
        match self.kind {
            ModelKind::Coulomb => PI * effective_n(energy),
            ModelKind::HardWall { wall_radius } => (2.0 * energy).sqrt() * wall_radius,
        }
    }

    /// Derivative of [`LongRangeModel::raw_phase`] with respect to energy.
    pub fn phase_rate(&self, energy: f64) -> f64 {
        match self.kind {
            ModelKind::Coulomb => PI * effective_n(energy).powi(3),
            ModelKind::HardWall { wall_radius } => wall_radius / (2.0 * energy).sqrt(),
        }
    }
}

/// Effective quantum number `nu = (-2 eps)^(-1/2)` of a closed Coulomb channel.
pub fn effective_n(energy: f64) -> f64 {
    (-2.0 * energy).sqrt().recip()
}

/// Reduces an angle to `(-pi/2, pi/2]`.
pub fn reduce_phase(theta: f64) -> f64 {
    let mut t = theta - PI * (theta / PI).round();
    if t <= -PI / 2.0 {
        t += PI;
    }
    t
}
