//! Long-range channel functions: grids, Numerov propagation, the regular and
//! irregular pair, decaying channel waves and their overlaps.

mod coulomb;
pub mod grid;
pub mod model;
pub mod numerov;
pub mod wave;

pub use grid::{RadialGrid, Spacing};
pub use model::{effective_n, reduce_phase, Channel, ChannelSet, LongRangeModel, ModelKind};
pub use numerov::{numerov_integrate, Direction, NumerovSolution};
pub use wave::{
    channel_norm, channel_wave, milne_pair, overlap, quadrature_overlap, theta_phase,
    wronskian_overlap, BoundaryData, ChannelWave, FgPair,
};
