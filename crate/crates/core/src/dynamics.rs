//! Wavepacket expansion over the eigenstates and its propagation, once
//! ignoring the metric and once through it. Everything is done on coefficient
//! vectors against the Gram matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::MetricFactorization;
use crate::spectrum::SpectrumChunk;

const CUTOFF_RATIO: f64 = 1e-8;

/// Outer turning point and orbital period of a Coulomb electron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeplerScales {
    pub turning_point: f64,
    pub period: f64,
}

pub fn kepler_scales(mean_n: f64) -> KeplerScales {
    KeplerScales {
        turning_point: 2.0 * mean_n * mean_n,
        period: 2.0 * PI * mean_n.powi(3),
    }
}

/// Radial Gaussian `exp(-(r - center)^2 / (4 width^2))` in one channel, so
/// `|zeta|^2` has standard deviation `width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketSpec {
    pub center: f64,
    pub width: f64,
    pub channel: usize,
}

impl WavepacketSpec {
    pub fn new(center: f64, width: f64, channel: usize) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::validation("wavepacket.width", "must be positive"));
        }
        if !(center > 0.0) || !center.is_finite() {
            return Err(Error::validation("wavepacket.center", "must be positive"));
        }
        Ok(Self {
            center,
            width,
            channel,
        })
    }

    /// Centred on the outer turning point `2 n^2`.
    pub fn at_mean_n(mean_n: f64, width: f64, channel: usize) -> Result<Self> {
        if !(mean_n > 0.0) {
            return Err(Error::validation("wavepacket.mean_n", "must be positive"));
        }
        Self::new(kepler_scales(mean_n).turning_point, width, channel)
    }

    fn shape(&self, r: f64) -> f64 {
        (-(r - self.center).powi(2) / (4.0 * self.width * self.width)).exp()
    }
}

/// `p(E) = X_c(E) int F_c(E, r) zeta(r) dr` with `zeta` normalized on the grid.
pub fn gaussian_projections(spec: &WavepacketSpec, chunk: &SpectrumChunk) -> Result<Vec<f64>> {
    let model = &chunk.problem.model;
    if spec.channel >= chunk.problem.dim() {
        return Err(Error::validation(
            "wavepacket.channel",
            format!("must be between 1 and {}", chunk.problem.dim()),
        ));
    }
    let r_b = model.boundary_radius();
    if spec.center <= r_b {
        return Err(Error::validation("wavepacket.center", "must lie beyond r0"));
    }
    let ratio = spec.shape(r_b);
    if ratio > CUTOFF_RATIO {
        return Err(Error::AmplitudeAtCutoff { ratio });
    }
    let grid = model.grid();
    let b = model.boundary_index();
    let weights = grid.simpson_weights(b);
    let zeta: Vec<f64> = grid.nodes()[b..].iter().map(|&r| spec.shape(r)).collect();
    let norm: f64 = weights.iter().zip(&zeta).map(|(w, z)| w * z * z).sum();
    let kernel: Vec<f64> = weights
        .iter()
        .zip(&zeta)
        .map(|(w, z)| w * z / norm.sqrt())
        .collect();
    chunk
        .states
        .par_iter()
        .map(|s| {
            let f = s.waves[spec.channel].require_values()?;
            let overlap: f64 = kernel.iter().zip(f).map(|(k, v)| k * v).sum();
            Ok(s.x[spec.channel] * overlap)
        })
        .collect()
}

/// Expansion of the initial state over the eigenbasis.
#[derive(Debug, Clone)]
pub struct StateCoefficients {
    pub energies: Vec<f64>,
    pub p: Vec<f64>,
    /// `G^-1 p`, rescaled so `b^T G b = 1`.
    pub b: Vec<f64>,
    /// `1 - p^T G^-1 p` before rescaling.
    pub span_residual: f64,
}

pub fn coefficients(energies: &[f64], p: &[f64], fact: &MetricFactorization) -> Result<StateCoefficients> {
    let n = fact.dim();
    if p.len() != n || energies.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let pv = DVector::from_column_slice(p);
    let b = &fact.inverse * &pv;
    let captured = pv.dot(&b);
    if !(captured > 0.0) {
        return Err(Error::ZeroNorm { energy: f64::NAN });
    }
    let b = b / captured.sqrt();
    Ok(StateCoefficients {
        energies: energies.to_vec(),
        p: p.to_vec(),
        b: b.as_slice().to_vec(),
        span_residual: 1.0 - captured,
    })
}

/// `times = linspace(0, periods * T, samples)`.
pub fn time_grid(period: f64, periods: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let end = periods * period;
            (0..samples)
                .map(|k| end * k as f64 / (samples - 1) as f64)
                .collect()
        }
    }
}

fn phase(e: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -e * t)
}

/// `sum_E exp(-iEt) w_E`.
fn weighted_sum(weights: &[f64], energies: &[f64], times: &[f64]) -> Vec<Complex64> {
    times
        .par_iter()
        .map(|&t| {
            weights
                .iter()
                .zip(energies)
                .map(|(w, &e)| phase(e, t) * w)
                .sum()
        })
        .collect()
}

/// `C(t) = sum_E exp(-iEt) p(E)^2`, the metric-blind autocorrelation.
pub fn naive_autocorrelation(p: &[f64], energies: &[f64], times: &[f64]) -> Vec<Complex64> {
    let w: Vec<f64> = p.iter().map(|x| x * x).collect();
    weighted_sum(&w, energies, times)
}

/// `C(t) = v^T diag(exp(-iEt)) v` with `v = G^(1/2) b`.
pub fn correct_autocorrelation(coeffs: &StateCoefficients, fact: &MetricFactorization, times: &[f64]) -> Vec<Complex64> {
    let v = &fact.sqrt * DVector::from_column_slice(&coeffs.b);
    let w: Vec<f64> = v.iter().map(|x| x * x).collect();
    weighted_sum(&w, &coeffs.energies, times)
}

/// `a^dagger G a` for complex `a = re + i im` and real symmetric `G`.
fn metric_norm(g: &DMatrix<f64>, re: &DVector<f64>, im: &DVector<f64>) -> f64 {
    re.dot(&(g * re)) + im.dot(&(g * im))
}

fn rotated(x: &[f64], energies: &[f64], t: f64) -> (DVector<f64>, DVector<f64>) {
    let re = DVector::from_iterator(x.len(), x.iter().zip(energies).map(|(v, e)| v * (e * t).cos()));
    let im = DVector::from_iterator(x.len(), x.iter().zip(energies).map(|(v, e)| -v * (e * t).sin()));
    (re, im)
}

/// Norm of the naively evolved state, `a(t)^dagger G a(t)` with
/// `a(t) = diag(exp(-iEt)) p`.
pub fn naive_norm_series(p: &[f64], energies: &[f64], g: &DMatrix<f64>, times: &[f64]) -> Vec<f64> {
    times
        .par_iter()
        .map(|&t| {
            let (re, im) = rotated(p, energies, t);
            metric_norm(g, &re, &im)
        })
        .collect()
}

/// Norm of `b(t) = G^(-1/2) diag(exp(-iEt)) G^(1/2) b`, which the metric
/// keeps at one.
pub fn correct_norm_series(coeffs: &StateCoefficients, fact: &MetricFactorization, times: &[f64]) -> Vec<f64> {
    let v = &fact.sqrt * DVector::from_column_slice(&coeffs.b);
    times
        .par_iter()
        .map(|&t| {
            let (re, im) = rotated(v.as_slice(), &coeffs.energies, t);
            let (bre, bim) = (&fact.inv_sqrt * re, &fact.inv_sqrt * im);
            metric_norm(&fact.metric, &bre, &bim)
        })
        .collect()
}

/// Both propagation schemes sampled on one time grid.
#[derive(Debug, Clone)]
pub struct AutocorrelationSeries {
    pub times: Vec<f64>,
    pub period: f64,
    pub c_naive: Vec<Complex64>,
    pub c_correct: Vec<Complex64>,
    pub norm_naive: Vec<f64>,
    pub norm_correct: Vec<f64>,
}

impl AutocorrelationSeries {
    pub fn compute(coeffs: &StateCoefficients, fact: &MetricFactorization, times: Vec<f64>, period: f64) -> Self {
        Self {
            c_naive: naive_autocorrelation(&coeffs.p, &coeffs.energies, &times),
            c_correct: correct_autocorrelation(coeffs, fact, &times),
            norm_naive: naive_norm_series(&coeffs.p, &coeffs.energies, &fact.metric, &times),
            norm_correct: correct_norm_series(coeffs, fact, &times),
            times,
            period,
        }
    }

    /// `max_t ||C_naive| - |C_correct||`.
    pub fn max_profile_gap(&self) -> f64 {
        self.c_naive
            .iter()
            .zip(&self.c_correct)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{factorize, MetricMatrix};

    fn toy(g: f64) -> (MetricFactorization, StateCoefficients) {
        let energies = vec![-0.3, -0.1];
        let m = MetricMatrix::new(energies.clone(), DMatrix::from_row_slice(2, 2, &[1.0, g, g, 1.0])).unwrap();
        let fact = factorize(&m).unwrap();
        let b0 = 1.0 / (2.0 * (1.0 + g)).sqrt();
        let p = vec![(1.0 + g) * b0; 2];
        let c = coefficients(&energies, &p, &fact).unwrap();
        (fact, c)
    }

    #[test]
    fn kepler_values() {
        let k = kepler_scales(1.0);
        assert_eq!(k.turning_point, 2.0);
        assert!((k.period - 2.0 * PI).abs() < 1e-15);
        let k = kepler_scales(55.0);
        assert_eq!(k.turning_point, 6050.0);
        assert!((k.period - 2.0 * PI * 166_375.0).abs() < 1e-9);
        assert!((k.period - 1.045365e6).abs() < 1.0);
        assert!((kepler_scales(110.0).period / k.period - 8.0).abs() < 1e-12);
    }

    #[test]
    fn two_state_round_trip() {
        let g = 0.1;
        let (_, c) = toy(g);
        let b0 = 1.0 / (2.0 * (1.0 + g)).sqrt();
        for b in &c.b {
            assert!((b - b0).abs() < 1e-12);
        }
        assert!(c.span_residual.abs() < 1e-12);
    }

    #[test]
    fn two_state_series() {
        let g = 0.1;
        let (fact, c) = toy(g);
        let de: f64 = 0.2;
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 1.7).chain([PI / de]).collect();
        let naive = naive_autocorrelation(&c.p, &c.energies, &times);
        assert!((naive[0].re - 1.1).abs() < 1e-12 && naive[0].im.abs() < 1e-12);
        let correct = correct_autocorrelation(&c, &fact, &times);
        let nn = naive_norm_series(&c.p, &c.energies, &fact.metric, &times);
        let nc = correct_norm_series(&c, &fact, &times);
        for (k, &t) in times.iter().enumerate() {
            assert!((correct[k].norm() - (de * t / 2.0).cos().abs()).abs() < 1e-12);
            let expect = (1.0 + g) * (1.0 + g * (de * t).cos());
            assert!((nn[k] - expect).abs() < 1e-12);
            assert!((nc[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_metric_schemes_agree() {
        let energies = vec![-0.5, -0.2, -0.1];
        let m = MetricMatrix::new(energies.clone(), DMatrix::identity(3, 3)).unwrap();
        let fact = factorize(&m).unwrap();
        let p = vec![0.6, 0.0, 0.8];
        let c = coefficients(&energies, &p, &fact).unwrap();
        assert_eq!(c.b, p);
        let times = time_grid(1.0, 3.0, 40);
        let a = naive_autocorrelation(&p, &energies, &times);
        let b = correct_autocorrelation(&c, &fact, &times);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
        for n in naive_norm_series(&p, &energies, &fact.metric, &times) {
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn time_grid_endpoints() {
        let t = time_grid(2.0, 10.0, 2048);
        assert_eq!(t.len(), 2048);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 20.0);
    }

    #[test]
    fn wavepacket_validation() {
        assert!(WavepacketSpec::new(10.0, 0.0, 0).is_err());
        assert!(WavepacketSpec::at_mean_n(55.0, 300.0, 0).unwrap().center == 6050.0);
    }
}
