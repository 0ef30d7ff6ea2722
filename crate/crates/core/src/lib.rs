//! Bound states of a multichannel Rydberg system built from a reaction
//! matrix, the metric of the resulting non-orthogonal eigenbasis, and
//! wavepacket propagation with and without that metric.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod kmatrix;
pub mod metric;
pub mod output;
pub mod pipeline;
pub mod radial;
pub mod selftest;
pub mod spectrum;

pub use error::{Error, ErrorClass, Result};
