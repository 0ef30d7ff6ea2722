//! Coulomb channel functions on the logarithmic grid.
//!
//! With `x = ln r` and `u = r^(1/2) y` the radial equation becomes
//! `y'' + Q(x) y = 0`, `Q = 2 eps r^2 + 2 r - (l + 1/2)^2`, which Numerov
//! integrates on the uniform `x` grid. All arrays here are in `y`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::grid::{central_derivative, composite_simpson};
use super::model::{effective_n, reduce_phase, Channel, LongRangeModel};
use super::numerov::{sweep, Direction};

const AMPLITUDE_RANGE: (f64, f64) = (1e-12, 1e12);
const PHASE_TOL: f64 = 1e-6;
/// Nodes kept beyond the matching node for finite differences.
const PAD: usize = 5;
/// Below this radius the boundary slope is carried in from here by
/// integrating `u'' = -k^2 u`. Converting `(y_x + y/2) / r^(1/2)` directly
/// cancels most digits for the irregular `l = 0` function near the origin.
const SLOPE_RADIUS: f64 = 1.0;

/// Milne pair in `y` on global nodes `lo..=m + PAD`.
pub(crate) struct Basis {
    pub lo: usize,
    pub m: usize,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl Basis {
    pub fn at(&self, v: &[f64], j: usize) -> f64 {
        v[j - self.lo]
    }

    pub fn deriv(&self, v: &[f64], j: usize, h: f64) -> f64 {
        central_derivative(v, j - self.lo, h)
    }
}

/// Decaying channel function in `y` on global nodes `b..`, normalized so
/// that it equals `alpha f + beta g` with `alpha^2 + beta^2 = 1`.
pub(crate) struct Decaying {
    pub y: Vec<f64>,
    /// `du/dr` at the boundary node.
    pub du_boundary: f64,
    pub theta: f64,
}

pub(crate) fn q_values(model: &LongRangeModel, l: u32, energy: f64) -> Vec<f64> {
    let a = (l as f64 + 0.5).powi(2);
    model
        .grid()
        .nodes()
        .iter()
        .map(|&r| 2.0 * energy * r * r + 2.0 * r - a)
        .collect()
}

/// Fourth-order WKB phase derivative `dphi/dx` in the allowed region.
fn wkb_phase_rate(x: f64, energy: f64, l: u32) -> f64 {
    let r = x.exp();
    let a = (l as f64 + 0.5).powi(2);
    let er2 = energy * r * r;
    let q0 = 2.0 * er2 + 2.0 * r - a;
    let q1 = 4.0 * er2 + 2.0 * r;
    let q2 = 8.0 * er2 + 2.0 * r;
    let q3 = 16.0 * er2 + 2.0 * r;
    let q4 = 32.0 * er2 + 2.0 * r;
    let e2 = -q2 / (8.0 * q0 * q0) + 5.0 * q1 * q1 / (32.0 * q0.powi(3));
    let e4 = q4 / (32.0 * q0.powi(3)) - 7.0 * q1 * q3 / (32.0 * q0.powi(4))
        - 19.0 * q2 * q2 / (128.0 * q0.powi(4))
        + 221.0 * q1 * q1 * q2 / (256.0 * q0.powi(5))
        - 1105.0 * q1.powi(4) / (2048.0 * q0.powi(6));
    q0.sqrt() * (1.0 + e2 + e4)
}

/// Smooth Milne amplitude `w = (dphi/dx)^(-1/2)` and its `x` derivative.
fn wkb_amplitude(x: f64, energy: f64, l: u32) -> (f64, f64, f64) {
    let d = 1e-3;
    let p = |x| wkb_phase_rate(x, energy, l);
    let rate = p(x);
    let rate_x = (p(x - 2.0 * d) - 8.0 * p(x - d) + 8.0 * p(x + d) - p(x + 2.0 * d)) / (12.0 * d);
    let w = rate.powf(-0.5);
    (w, -0.5 * rate.powf(-1.5) * rate_x, rate)
}

/// `y = r^(l+1/2) sum a_k r^k` with the Coulomb recurrence.
fn regular_series(r: f64, energy: f64, l: u32) -> f64 {
    let l = l as f64;
    let (mut a2, mut a1) = (0.0, 1.0);
    let mut sum = 1.0;
    let mut rk = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        let a = (-2.0 * a1 - 2.0 * energy * a2) / (kf * (kf + 2.0 * l + 1.0));
        rk *= r;
        let term = a * rk;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        a2 = a1;
        a1 = a;
    }
    r.powf(l + 0.5) * sum
}

pub(crate) fn basis(model: &LongRangeModel, channel: &Channel, energy: f64, q: &[f64]) -> Result<Basis> {
    let grid = model.grid();
    let nodes = grid.nodes();
    let h = grid.step();
    let l = channel.l;
    let b = model.boundary_index();
    let lo = b - PAD;
    let nu = effective_n(energy);

    let r_match = (0.5 * nu * nu).max(model.boundary_radius() * (12.0 * h).exp());
    let m = grid.nearest_index(r_match).max(b + 2 * PAD);
    if m + 4 * PAD >= nodes.len() {
        return Err(Error::InvalidGrid(format!(
            "grid ends at r = {:.4e}, before the matching radius {:.4e} of channel {}",
            grid.r_max(),
            r_match,
            channel.index
        )));
    }
    if q[m] <= 0.0 {
        return Err(Error::NumericalBlowup {
            detail: format!(
                "channel {} at nu = {nu:.6}: no classically allowed region beyond r0 for l = {l}",
                channel.index
            ),
        });
    }

    let top = m + PAD;
    let seed = [regular_series(nodes[0], energy, l), regular_series(nodes[1], energy, l)];
    let reg = sweep(q, h, Direction::Outward, seed, 0, top, true)?;

    let x_m = nodes[m].ln();
    let (w, w_x, rate) = wkb_amplitude(x_m, energy, l);
    let s = reg[m] / w;
    let c = w * central_derivative(&reg, m, h) - w_x * reg[m];
    let phi_m = s.atan2(c);
    let amp = s.hypot(c);
    let f: Vec<f64> = reg[lo..=top].iter().map(|v| v / amp).collect();

    // inward companion seeded with the smooth cosine solution
    let seed_at = |j: usize| {
        let x = nodes[j].ln();
        let (wj, _, _) = wkb_amplitude(x, energy, l);
        wj * (phi_m + rate * (x - x_m)).cos()
    };
    let helper = sweep(q, h, Direction::Inward, [seed_at(top), seed_at(top - 1)], lo, top, true)?;

    let i = m - lo;
    let g_m = w * phi_m.cos();
    let g_x = w_x * phi_m.cos() - phi_m.sin() / w;
    let (f_m, f_x) = (f[i], central_derivative(&f, i, h));
    let (k_m, k_x) = (helper[i], central_derivative(&helper, i, h));
    let det = f_m * k_x - f_x * k_m;
    let ca = (g_m * k_x - g_x * k_m) / det;
    let cb = (f_m * g_x - f_x * g_m) / det;
    let g: Vec<f64> = f.iter().zip(&helper).map(|(a, k)| ca * a + cb * k).collect();

    for j in b..=m {
        let amp_r = nodes[j].sqrt() * f[j - lo].hypot(g[j - lo]);
        if !(amp_r >= AMPLITUDE_RANGE.0 && amp_r <= AMPLITUDE_RANGE.1) {
            return Err(Error::NumericalBlowup {
                detail: format!(
                    "channel {}, amplitude {amp_r:.3e} at r = {:.4e}",
                    channel.index, nodes[j]
                ),
            });
        }
    }
    Ok(Basis { lo, m, f, g })
}

/// Decaying solution matched to the Milne pair.
pub(crate) fn decaying(
    model: &LongRangeModel,
    channel: &Channel,
    energy: f64,
    q: &[f64],
    basis: &Basis,
) -> Result<Decaying> {
    let grid = model.grid();
    let h = grid.step();
    let n = grid.len();
    let b = model.boundary_index();
    let m = basis.m;
    let start = m - PAD;

    let kappa = (-q[n - 1]).max(0.0).sqrt();
    let seed = [1e-30, 1e-30 * (kappa * h).exp()];
    let tail = sweep(q, h, Direction::Inward, seed, start, n - 1, true)?;
    let t_m = tail[m - start];
    let t_x = central_derivative(&tail, m - start, h);

    let (f_m, f_x) = (basis.at(&basis.f, m), basis.deriv(&basis.f, m, h));
    let (g_m, g_x) = (basis.at(&basis.g, m), basis.deriv(&basis.g, m, h));
    let w_fg = f_m * g_x - f_x * g_m;
    let alpha = (t_m * g_x - t_x * g_m) / w_fg;
    let beta = (f_m * t_x - f_x * t_m) / w_fg;

    let theta = reduce_phase(PI * effective_n(energy));
    let theta_eff = (-beta).atan2(alpha);
    let mismatch = reduce_phase(theta_eff - theta).abs();
    if mismatch > PHASE_TOL || !mismatch.is_finite() {
        return Err(Error::BoundaryMismatch {
            channel: channel.index,
            mismatch,
        });
    }
    let sign = if alpha * theta.cos() - beta * theta.sin() >= 0.0 { 1.0 } else { -1.0 };
    let norm = alpha.hypot(beta);
    let (a, c) = (sign * alpha / norm, sign * beta / norm);
    let scale = sign / norm;

    let mut y = Vec::with_capacity(n - b);
    for j in b..=m {
        y.push(a * basis.at(&basis.f, j) + c * basis.at(&basis.g, j));
    }
    y.extend(tail[m + 1 - start..].iter().map(|v| scale * v));
    let y_x = a * basis.deriv(&basis.f, b, h) + c * basis.deriv(&basis.g, b, h);
    let du_boundary = boundary_slope(grid.nodes(), b, m, &y, y_x, h, energy, channel.l);
    Ok(Decaying {
        y,
        du_boundary,
        theta,
    })
}

/// `du/dr` at node `b` of the solution sampled as `y` on nodes `b..`.
#[allow(clippy::too_many_arguments)]
fn boundary_slope(nodes: &[f64], b: usize, m: usize, y: &[f64], y_x: f64, h: f64, energy: f64, l: u32) -> f64 {
    let slope = |j: usize, y_x: f64| (y_x + 0.5 * y[j - b]) / nodes[j].sqrt();
    let j_ref = nodes.partition_point(|&r| r < SLOPE_RADIUS);
    if j_ref < b + 4 || j_ref + 4 > m {
        return slope(b, y_x);
    }
    let ll = (l * (l + 1)) as f64;
    let weights = composite_simpson(j_ref - b + 1, h);
    // int k^2 u dr over [r_b, r_ref], written in x = ln r
    let carried: f64 = (b..=j_ref)
        .zip(&weights)
        .map(|(j, w)| {
            let r = nodes[j];
            w * (2.0 * energy * r + 2.0 - ll / r) * r.sqrt() * y[j - b]
        })
        .sum();
    slope(j_ref, central_derivative(y, j_ref - b, h)) + carried
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_hydrogen_ground_state() {
        // eps = -1/2, l = 0: u = r exp(-r)
        for r in [1e-4, 1e-2, 0.5] {
            let y = regular_series(r, -0.5, 0);
            let exact = r.sqrt() * (-r).exp();
            assert!((y - exact).abs() < 1e-15 * exact.max(1e-300), "{r}");
        }
    }

    #[test]
    fn wkb_rate_approaches_local_wavenumber() {
        let e = -0.5 / 3600.0;
        let x = (1800.0f64).ln();
        let r = x.exp();
        let q = 2.0 * e * r * r + 2.0 * r - 0.25;
        let rate = wkb_phase_rate(x, e, 0);
        assert!(((rate - q.sqrt()) / q.sqrt()).abs() < 1e-4);
    }
}
