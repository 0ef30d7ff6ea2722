use std::sync::Arc;

use crate::error::{Error, Result};

use super::coulomb;
use super::grid::RadialGrid;
use super::model::{reduce_phase, Channel, LongRangeModel, ModelKind};

/// Outer-boundary tolerances on `|F(r_max)| / max |F|`.
const COULOMB_TAIL_TOL: f64 = 1e-8;
const WALL_TAIL_TOL: f64 = 1e-10;
const DEGENERATE_ENERGY: f64 = 1e-12;

/// Regular and irregular channel solutions with `W(g, f) = 1`, sampled from
/// the boundary radius outwards (up to the matching radius for Coulomb).
#[derive(Debug, Clone)]
pub struct FgPair {
    pub channel: usize,
    pub energy: f64,
    pub radii: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub f_deriv: Vec<f64>,
    pub g_deriv: Vec<f64>,
}

impl FgPair {
    pub fn f_r0(&self) -> f64 {
        self.f[0]
    }

    pub fn g_r0(&self) -> f64 {
        self.g[0]
    }

    pub fn f_deriv_r0(&self) -> f64 {
        self.f_deriv[0]
    }

    pub fn g_deriv_r0(&self) -> f64 {
        self.g_deriv[0]
    }

    /// `W(g, f) = g f' - g' f` at sample `i`.
    pub fn wronskian(&self, i: usize) -> f64 {
        self.g[i] * self.f_deriv[i] - self.g_deriv[i] * self.f[i]
    }

    pub fn max_wronskian_deviation(&self) -> f64 {
        (0..self.f.len())
            .map(|i| (self.wronskian(i) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Value and radial derivative at the inner boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub radius: f64,
    pub value: f64,
    pub derivative: f64,
}

/// Decaying channel function `F = cos(theta) f - sin(theta) g`.
#[derive(Debug, Clone)]
pub struct ChannelWave {
    pub channel: usize,
    pub energy: f64,
    /// Boundary phase reduced to `(-pi/2, pi/2]`.
    pub theta: f64,
    pub boundary: BoundaryData,
    grid: Arc<RadialGrid>,
    offset: usize,
    values: Option<Vec<f64>>,
    norm_sq: f64,
    tail_ratio: f64,
}

impl ChannelWave {
    /// Samples on `grid.nodes()[offset..]`, if retained.
    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    pub fn radii(&self) -> &[f64] {
        &self.grid.nodes()[self.offset..]
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// `|F(r_max)| / max |F|`.
    pub fn tail_ratio(&self) -> f64 {
        self.tail_ratio
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            boundary: BoundaryData {
                value: c * self.boundary.value,
                derivative: c * self.boundary.derivative,
                ..self.boundary
            },
            values: self.values.as_ref().map(|v| v.iter().map(|x| c * x).collect()),
            norm_sq: c * c * self.norm_sq,
            ..self.clone()
        }
    }

    /// Same wave divided by its quadrature norm.
    pub fn normalized(&self) -> Self {
        self.scaled(self.norm_sq.sqrt().recip())
    }

    /// Drops the samples, keeping boundary data and the cached norm.
    pub fn without_samples(mut self) -> Self {
        self.values = None;
        self
    }

    pub fn require_values(&self) -> Result<&[f64]> {
        self.values().ok_or(Error::WaveNotRetained {
            channel: self.channel,
        })
    }
}

/// Boundary phase `theta` with `R = tan(theta)`, reduced to `(-pi/2, pi/2]`.
pub fn theta_phase(model: &LongRangeModel, channel: &Channel, energy: f64) -> Result<f64> {
    model.check_closed(channel, energy)?;
    Ok(reduce_phase(model.raw_phase(energy)))
}

/// Unit-Wronskian regular/irregular pair.
pub fn milne_pair(model: &LongRangeModel, channel: &Channel, energy: f64) -> Result<FgPair> {
    model.check_closed(channel, energy)?;
    let nodes = model.grid().nodes();
    match model.kind() {
        ModelKind::HardWall { .. } => {
            let k = (2.0 * energy).sqrt();
            let sk = k.sqrt();
            let radii = nodes.to_vec();
            Ok(FgPair {
                channel: channel.index,
                energy,
                f: radii.iter().map(|r| (k * r).sin() / sk).collect(),
                g: radii.iter().map(|r| (k * r).cos() / sk).collect(),
                f_deriv: radii.iter().map(|r| sk * (k * r).cos()).collect(),
                g_deriv: radii.iter().map(|r| -sk * (k * r).sin()).collect(),
                radii,
            })
        }
        ModelKind::Coulomb => {
            let q = coulomb::q_values(model, channel.l, energy);
            let basis = coulomb::basis(model, channel, energy, &q)?;
            let h = model.grid().step();
            let range = model.boundary_index()..=basis.m - 1;
            let mut pair = FgPair {
                channel: channel.index,
                energy,
                radii: Vec::new(),
                f: Vec::new(),
                g: Vec::new(),
                f_deriv: Vec::new(),
                g_deriv: Vec::new(),
            };
            for j in range {
                let r = nodes[j];
                let sr = r.sqrt();
                let (f, g) = (basis.at(&basis.f, j), basis.at(&basis.g, j));
                let (fx, gx) = (basis.deriv(&basis.f, j, h), basis.deriv(&basis.g, j, h));
                pair.radii.push(r);
                pair.f.push(sr * f);
                pair.g.push(sr * g);
                pair.f_deriv.push((fx + 0.5 * f) / sr);
                pair.g_deriv.push((gx + 0.5 * g) / sr);
            }
            Ok(pair)
        }
    }
}

/// Decaying channel function with boundary data and cached quadrature norm.
pub fn channel_wave(model: &LongRangeModel, channel: &Channel, energy: f64) -> Result<ChannelWave> {
    model.check_closed(channel, energy)?;
    let grid = model.grid();
    let nodes = grid.nodes();
    let b = model.boundary_index();
    let (theta, values, boundary, tol) = match model.kind() {
        ModelKind::HardWall { .. } => {
            let k = (2.0 * energy).sqrt();
            let sk = k.sqrt();
            let theta = reduce_phase(model.raw_phase(energy));
            let values: Vec<f64> = nodes.iter().map(|r| (k * r - theta).sin() / sk).collect();
            let r0 = nodes[0];
            let boundary = BoundaryData {
                radius: r0,
                value: (k * r0 - theta).sin() / sk,
                derivative: sk * (k * r0 - theta).cos(),
            };
            (theta, values, boundary, WALL_TAIL_TOL)
        }
        ModelKind::Coulomb => {
            let q = coulomb::q_values(model, channel.l, energy);
            let basis = coulomb::basis(model, channel, energy, &q)?;
            let dec = coulomb::decaying(model, channel, energy, &q, &basis)?;
            let values: Vec<f64> = dec
                .y
                .iter()
                .zip(&nodes[b..])
                .map(|(y, r)| r.sqrt() * y)
                .collect();
            let r_b = nodes[b];
            let boundary = BoundaryData {
                radius: r_b,
                value: values[0],
                derivative: dec.du_boundary,
            };
            (dec.theta, values, boundary, COULOMB_TAIL_TOL)
        }
    };
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail_ratio = values.last().unwrap().abs() / peak;
    if !(tail_ratio < tol) {
        return Err(Error::TruncatedTail {
            channel: channel.index,
            ratio: tail_ratio,
        });
    }
    let weights = grid.simpson_weights(b);
    let norm_sq = weights.iter().zip(&values).map(|(w, v)| w * v * v).sum();
    Ok(ChannelWave {
        channel: channel.index,
        energy,
        theta,
        boundary,
        grid: Arc::clone(grid),
        offset: b,
        values: Some(values),
        norm_sq,
        tail_ratio,
    })
}

fn check_pair(w1: &ChannelWave, w2: &ChannelWave) -> Result<()> {
    if w1.channel != w2.channel {
        return Err(Error::ChannelMismatch(w1.channel, w2.channel));
    }
    if w1.offset != w2.offset || !(Arc::ptr_eq(&w1.grid, &w2.grid) || w1.grid == w2.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `int F1 F2 dr` over `[r0, outer boundary]` from boundary data alone:
/// `[F1 F2' - F1' F2](r0) / (2 (eps2 - eps1))`.
pub fn wronskian_overlap(w1: &ChannelWave, w2: &ChannelWave) -> Result<f64> {
    check_pair(w1, w2)?;
    let de = w2.energy - w1.energy;
    if de.abs() <= DEGENERATE_ENERGY {
        return Err(Error::DegenerateEnergies(w1.energy, w2.energy));
    }
    let (a, b) = (&w1.boundary, &w2.boundary);
    Ok((a.value * b.derivative - a.derivative * b.value) / (2.0 * de))
}

/// `int F1 F2 dr` by Simpson quadrature on the shared grid.
pub fn quadrature_overlap(w1: &ChannelWave, w2: &ChannelWave) -> Result<f64> {
    check_pair(w1, w2)?;
    let (v1, v2) = (w1.require_values()?, w2.require_values()?);
    let weights = w1.grid.simpson_weights(w1.offset);
    Ok(weights.iter().zip(v1).zip(v2).map(|((w, a), b)| w * a * b).sum())
}

/// Wronskian formula, or quadrature when the energies coincide.
pub fn overlap(w1: &ChannelWave, w2: &ChannelWave) -> Result<f64> {
    match wronskian_overlap(w1, w2) {
        Err(Error::DegenerateEnergies(..)) => quadrature_overlap(w1, w2),
        other => other,
    }
}

/// `int F^2 dr` by quadrature (cached at construction).
pub fn channel_norm(w: &ChannelWave) -> f64 {
    w.norm_sq
}
