//! Bound states of the secular system `[K(E) + R(E)] Z = 0`.
//!
//! The scan works on `det(cos(Theta) K + sin(Theta))` with the continuous
//! phases `theta_i(E)`, bordered by one row and column per K-matrix pole so
//! the scanned function stays finite through the poles:
//!
//! `det [[cos(Theta) K_s + sin(Theta), cos(Theta) G], [-G^T, diag(E_p - E)]]
//!   = det(cos(Theta) K + sin(Theta)) * prod_p (E_p - E)`
//!
//! where `K_s` is the smooth part of `K` and the columns of `G` are the pole
//! strengths.

use std::f64::consts::PI;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmatrix::KMatrixSpec;
use crate::radial::{channel_norm, channel_wave, reduce_phase, ChannelSet, ChannelWave, LongRangeModel, ModelKind};

/// Phase advance allowed per scan step.
const SCAN_PHASE_STEP: f64 = PI / 64.0;
const POLISH_REL: f64 = 1e-12;
const DUPLICATE_GAP: f64 = 1e-12;
const POLE_GAP: f64 = 1e-12;
pub const NULL_TOL: f64 = 1e-8;
const BRANCH_TOL: f64 = 1e-6;
const BRANCH_MIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub lo: f64,
    pub hi: f64,
}

impl EnergyWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::validation("window", format!("need e_lo < e_hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

/// Which channel waves keep their radial samples after a state is solved.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Retention {
    #[default]
    All,
    None,
    Channels(Vec<usize>),
}

impl Retention {
    fn keeps(&self, channel: usize) -> bool {
        match self {
            Retention::All => true,
            Retention::None => false,
            Retention::Channels(c) => c.contains(&channel),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_states: usize,
    pub retention: Retention,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_states: 2000,
            retention: Retention::All,
        }
    }
}

/// Channels, long-range model and K matrix.
#[derive(Debug, Clone)]
pub struct SecularProblem {
    pub channels: ChannelSet,
    pub model: LongRangeModel,
    pub kmatrix: KMatrixSpec,
}

impl SecularProblem {
    pub fn new(channels: ChannelSet, model: LongRangeModel, kmatrix: KMatrixSpec) -> Result<Self> {
        if kmatrix.dim() != channels.len() {
            return Err(Error::DimensionMismatch {
                expected: channels.len(),
                got: kmatrix.dim(),
            });
        }
        Ok(Self {
            channels,
            model,
            kmatrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// Continuous boundary phases `theta_i(E - eps_i)`.
    pub fn raw_phases(&self, energy: f64) -> Result<Vec<f64>> {
        self.channels
            .iter()
            .map(|ch| {
                let eps = energy - ch.threshold;
                self.model.check_closed(ch, eps)?;
                Ok(self.model.raw_phase(eps))
            })
            .collect()
    }

    /// `cos(Theta) K(E) + sin(Theta)`.
    pub fn secular_matrix(&self, energy: f64) -> Result<DMatrix<f64>> {
        let theta = self.raw_phases(energy)?;
        let mut m = self.kmatrix.eval(energy)?;
        for (i, t) in theta.iter().enumerate() {
            m.row_mut(i).scale_mut(t.cos());
            m[(i, i)] += t.sin();
        }
        Ok(m)
    }

    /// Secular determinant times `prod_p (E_p - E)`; finite at the poles.
    pub fn cleared_det(&self, energy: f64) -> Result<f64> {
        let theta = self.raw_phases(energy)?;
        let n = self.dim();
        let poles = self.kmatrix.poles();
        let size = n + poles.len();
        let mut b = DMatrix::zeros(size, size);
        let ks = self.kmatrix.smooth_part(energy);
        for i in 0..n {
            let c = theta[i].cos();
            for j in 0..n {
                b[(i, j)] = c * ks[(i, j)];
            }
            b[(i, i)] += theta[i].sin();
            for (p, pole) in poles.iter().enumerate() {
                b[(i, n + p)] = c * pole.strength[i];
                b[(n + p, i)] = -pole.strength[i];
            }
        }
        for (p, pole) in poles.iter().enumerate() {
            b[(n + p, n + p)] = pole.position - energy;
        }
        Ok(b.determinant())
    }

    /// Upper bound on the total phase rate, used to size scan steps.
    fn phase_rate(&self, energy: f64) -> f64 {
        let channels: f64 = self
            .channels
            .iter()
            .map(|ch| self.model.phase_rate(energy - ch.threshold))
            .sum();
        let linear = self.kmatrix.linear().norm();
        channels + linear + self.kmatrix.pole_phase_rate(energy)
    }

    /// First energy at which every channel is closed, and checks the window
    /// stays inside the closed region.
    fn scan_start(&self, window: &EnergyWindow) -> Result<f64> {
        let thresholds = self.channels.thresholds();
        match self.model.kind() {
            ModelKind::Coulomb => {
                let lowest = thresholds[0];
                if window.hi >= lowest {
                    return Err(Error::WindowOpenChannel {
                        lo: window.lo,
                        hi: window.hi,
                        threshold: lowest,
                    });
                }
                Ok(window.lo)
            }
            ModelKind::HardWall { .. } => {
                let highest = *thresholds.last().unwrap();
                if window.lo < highest {
                    return Err(Error::WindowOpenChannel {
                        lo: window.lo,
                        hi: window.hi,
                        threshold: highest,
                    });
                }
                // zero kinetic energy is excluded, so step just inside
                if window.lo == highest {
                    Ok(window.lo + 1e-12 * (window.hi - window.lo))
                } else {
                    Ok(window.lo)
                }
            }
        }
    }
}

/// Pole-free secular determinant `det(cos(Theta) K + sin(Theta))`.
pub fn secular_det(problem: &SecularProblem, energy: f64) -> Result<f64> {
    Ok(problem.secular_matrix(energy)?.determinant())
}

/// Energies in the window where the secular determinant vanishes.
pub fn scan_roots(problem: &SecularProblem, window: &EnergyWindow, max_states: usize) -> Result<Vec<f64>> {
    let start = problem.scan_start(window)?;
    let mut grid = vec![start];
    let mut e = start;
    while e < window.hi {
        let step = SCAN_PHASE_STEP / problem.phase_rate(e);
        e = (e + step).min(window.hi);
        grid.push(e);
    }
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&e| problem.cleared_det(e))
        .collect::<Result<_>>()?;
    debug!("scan: {} energies in [{:e}, {:e}]", grid.len(), start, window.hi);

    let mut brackets = Vec::new();
    let mut exact = Vec::new();
    for k in 0..grid.len() - 1 {
        let (fa, fb) = (values[k], values[k + 1]);
        if fa == 0.0 && k > 0 {
            exact.push(grid[k]);
        } else if fa * fb < 0.0 {
            brackets.push((grid[k], grid[k + 1], fa, fb));
        }
    }
    let polished: Vec<f64> = brackets
        .par_iter()
        .map(|&(a, b, fa, fb)| polish(problem, a, b, fa, fb))
        .collect::<Result<_>>()?;
    let mut roots: Vec<f64> = polished.into_iter().chain(exact).collect();
    roots.sort_by(f64::total_cmp);

    let poles: Vec<f64> = problem.kmatrix.poles().iter().map(|p| p.position).collect();
    roots.retain(|&r| {
        let near = poles.iter().any(|p| (r - p).abs() <= POLE_GAP);
        if near {
            warn!("root at {r:e} coincides with a K-matrix pole; skipped");
        }
        !near
    });
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    let mut i = 0;
    while i < roots.len() {
        if i + 1 < roots.len() && roots[i + 1] - roots[i] <= DUPLICATE_GAP {
            warn!("near-degenerate roots at {:e} and {:e}; skipped", roots[i], roots[i + 1]);
            i += 2;
            continue;
        }
        out.push(roots[i]);
        i += 1;
    }
    if out.len() > max_states {
        return Err(Error::TooManyStates { max: max_states });
    }
    Ok(out)
}

/// Illinois-modified regula falsi with a bisection safeguard.
fn polish(problem: &SecularProblem, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64> {
    let mut side = 0i8;
    for _ in 0..200 {
        let width = b - a;
        if width <= POLISH_REL * a.abs().max(b.abs()) || width <= f64::MIN_POSITIVE {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = problem.cleared_det(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if (fc < 0.0) == (fa < 0.0) {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        // force a bisection when the bracket stalls on one side
        if (b - a) > 0.5 * width {
            let m = 0.5 * (a + b);
            let fm = problem.cleared_det(m)?;
            if fm == 0.0 {
                return Ok(m);
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
            side = 0;
        }
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

/// Unit vector spanning the numerical null space of `m`.
///
/// Singular values and the residual are measured relative to
/// `max(1, ||m||_2)`. The sign makes the largest component positive.
pub fn null_vector(m: &DMatrix<f64>, tol: f64) -> Result<DVector<f64>> {
    let n = m.ncols();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let svd = m.clone().svd(false, true);
    let sv = &svd.singular_values;
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let scale = sv.max().max(1.0);
    let second = sv[order[1]] / scale;
    if second < tol {
        return Err(Error::DegenerateNullSpace {
            energy: f64::NAN,
            second,
        });
    }
    let mut z: DVector<f64> = v_t.row(order[0]).transpose();
    let lead = z.iamax();
    if z[lead] < 0.0 {
        z.neg_mut();
    }
    let residual = (m * &z).norm() / scale;
    if residual >= tol {
        return Err(Error::ResidualTooLarge {
            energy: f64::NAN,
            residual,
            tol,
        });
    }
    Ok(z)
}

/// Channel amplitudes `X_i` from the mixing vector.
pub fn amplitudes(z: &DVector<f64>, theta: &[f64], kz: &DVector<f64>) -> Result<DVector<f64>> {
    let mut x = DVector::zeros(z.len());
    for i in 0..z.len() {
        let (c, s) = (theta[i].cos(), theta[i].sin());
        let from_cos = z[i] / c;
        let from_sin = -kz[i] / s;
        x[i] = if c.abs() >= s.abs() { from_cos } else { from_sin };
        if c.abs() > BRANCH_MIN && s.abs() > BRANCH_MIN {
            let diff = (from_cos - from_sin).abs();
            let size = from_cos.abs().max(from_sin.abs());
            if diff > BRANCH_TOL * size + 1e-10 * z.amax() {
                return Err(Error::InconsistentAmplitude {
                    channel: i,
                    relative: diff / size.max(f64::MIN_POSITIVE),
                });
            }
        }
    }
    Ok(x)
}

/// Multichannel eigenstate at a root of the secular equation.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub energy: f64,
    pub z: DVector<f64>,
    pub x: DVector<f64>,
    /// Reduced boundary phases, one per channel.
    pub theta: Vec<f64>,
    pub waves: Vec<ChannelWave>,
    /// `||(cos(Theta) K + sin(Theta)) Z||` relative to the matrix norm.
    pub residual: f64,
}

impl BoundState {
    /// `sum_i X_i^2 ||F_i||^2`.
    pub fn norm_sq(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.waves)
            .map(|(x, w)| x * x * channel_norm(w))
            .sum()
    }
}

/// Rescales the amplitudes so the state has unit norm.
pub fn normalize_state(mut state: BoundState) -> Result<BoundState> {
    let n = state.norm_sq();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroNorm {
            energy: state.energy,
        });
    }
    state.x /= n.sqrt();
    Ok(state)
}

/// Null vector, amplitudes, channel waves and normalization at a root.
pub fn solve_state(problem: &SecularProblem, energy: f64, retention: &Retention) -> Result<BoundState> {
    let m = problem.secular_matrix(energy)?;
    let z = null_vector(&m, NULL_TOL).map_err(|e| match e {
        Error::DegenerateNullSpace { second, .. } => Error::DegenerateNullSpace { energy, second },
        Error::ResidualTooLarge { residual, tol, .. } => Error::ResidualTooLarge {
            energy,
            residual,
            tol,
        },
        other => other,
    })?;
    let residual = (&m * &z).norm() / m.norm().max(1.0);
    let theta: Vec<f64> = problem
        .raw_phases(energy)?
        .into_iter()
        .map(reduce_phase)
        .collect();
    let kz = problem.kmatrix.eval(energy)? * &z;
    let x = amplitudes(&z, &theta, &kz)?;
    let waves = problem
        .channels
        .iter()
        .map(|ch| {
            let w = channel_wave(&problem.model, ch, energy - ch.threshold)?;
            Ok(if retention.keeps(ch.index) { w } else { w.without_samples() })
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_state(BoundState {
        energy,
        z,
        x,
        theta,
        waves,
        residual,
    })
}

/// Solved states in an energy window, sorted by energy.
#[derive(Debug, Clone)]
pub struct SpectrumChunk {
    pub states: Vec<BoundState>,
    pub window: EnergyWindow,
    pub problem: SecularProblem,
}

impl SpectrumChunk {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }
}

/// Scan, then solve every root in parallel; states whose null space is
/// degenerate are skipped with a warning.
pub fn solve_chunk(problem: &SecularProblem, window: EnergyWindow, options: &SolveOptions) -> Result<SpectrumChunk> {
    let roots = scan_roots(problem, &window, options.max_states)?;
    let solved: Vec<Option<BoundState>> = roots
        .par_iter()
        .map(|&e| match solve_state(problem, e, &options.retention) {
            Ok(s) => Ok(Some(s)),
            Err(Error::DegenerateNullSpace { energy, second }) => {
                warn!("degenerate null space at E = {energy:e} (second singular value {second:.3e}); state skipped");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let states: Vec<BoundState> = solved.into_iter().flatten().collect();
    Ok(SpectrumChunk {
        states,
        window,
        problem: problem.clone(),
    })
}
