use crate::error::{Error, Result};

use super::grid::RadialGrid;

/// Direction of propagation across the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outward,
    Inward,
}

/// Solution sampled on every node of the grid it was propagated on.
#[derive(Debug, Clone)]
pub struct NumerovSolution {
    pub values: Vec<f64>,
    /// Both seeds were zero, so the solution is identically zero.
    pub degenerate: bool,
}

const OVERFLOW: f64 = 1e300;
const RESCALE_AT: f64 = 1e200;

/// Propagates `-u''/2 + v_eff(r) u = energy u` across a uniform grid.
///
/// `seed` holds the first two values in the direction of travel: `u(r_0),
/// u(r_1)` outward, `u(r_{n-1}), u(r_{n-2})` inward.
pub fn numerov_integrate<V>(
    v_eff: V,
    energy: f64,
    grid: &RadialGrid,
    direction: Direction,
    seed: [f64; 2],
) -> Result<NumerovSolution>
where
    V: Fn(f64) -> f64,
{
    grid.require_uniform()?;
    if !seed.iter().all(|s| s.is_finite()) {
        return Err(Error::InvalidGrid("seed values must be finite".into()));
    }
    let n = grid.len();
    if seed == [0.0, 0.0] {
        return Ok(NumerovSolution {
            values: vec![0.0; n],
            degenerate: true,
        });
    }
    let q: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| 2.0 * (energy - v_eff(r)))
        .collect();
    let values = sweep(&q, grid.step(), direction, seed, 0, n - 1, false)?;
    Ok(NumerovSolution {
        values,
        degenerate: false,
    })
}

/// Numerov recursion for `y'' + q y = 0` on `q[lo..=hi]`, returning values on
/// the same index range.
///
/// With `renormalize` the running solution is rescaled whenever it grows past
/// 1e200, so only its shape is meaningful; otherwise growth beyond 1e300 is an
/// error.
pub(crate) fn sweep(
    q: &[f64],
    h: f64,
    direction: Direction,
    seed: [f64; 2],
    lo: usize,
    hi: usize,
    renormalize: bool,
) -> Result<Vec<f64>> {
    let len = hi - lo + 1;
    let mut y = vec![0.0; len];
    let h2 = h * h;
    let t: Vec<f64> = q[lo..=hi].iter().map(|qi| 1.0 + h2 / 12.0 * qi).collect();
    let idx = |s: usize| match direction {
        Direction::Outward => s,
        Direction::Inward => len - 1 - s,
    };
    y[idx(0)] = seed[0];
    if len == 1 {
        return Ok(y);
    }
    y[idx(1)] = seed[1];
    // summed form on phi = t y keeps round-off from accumulating
    let mut phi = t[idx(1)] * seed[1];
    let mut diff = phi - t[idx(0)] * seed[0];
    for s in 2..len {
        let (b, n) = (idx(s - 1), idx(s));
        diff -= h2 * q[lo + b] * y[b];
        phi += diff;
        let next = phi / t[n];
        y[n] = next;
        if next.abs() > RESCALE_AT || !next.is_finite() {
            if renormalize && next.is_finite() {
                let scale = 1.0 / next.abs();
                for k in 0..=s {
                    y[idx(k)] *= scale;
                }
                phi *= scale;
                diff *= scale;
            } else if !next.is_finite() || next.abs() > OVERFLOW {
                return Err(Error::Overflow { node: lo + n });
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle_matches_sine() {
        let grid = RadialGrid::uniform(0.0, 20.0, 1e-3).unwrap();
        let k = 1.0;
        let h = grid.step();
        let sol =
            numerov_integrate(|_| 0.0, 0.5, &grid, Direction::Outward, [0.0, (k * h).sin()])
                .unwrap();
        let err = grid
            .nodes()
            .iter()
            .zip(&sol.values)
            .map(|(r, u)| (u - (k * r).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "max error {err}");
    }

    #[test]
    fn zero_seed_is_degenerate() {
        let grid = RadialGrid::uniform(0.0, 1.0, 0.1).unwrap();
        let sol = numerov_integrate(|_| 0.0, 0.5, &grid, Direction::Outward, [0.0, 0.0]).unwrap();
        assert!(sol.degenerate);
        assert!(sol.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nonuniform_grid_is_rejected() {
        let grid = RadialGrid::from_nodes(vec![0.0, 0.1, 0.3, 0.4]).unwrap();
        let r = numerov_integrate(|_| 0.0, 0.5, &grid, Direction::Outward, [0.0, 1.0]);
        assert!(matches!(r, Err(Error::NonUniformGrid { .. })));
    }

    #[test]
    fn coulomb_decaying_solution_grows_inward() {
        let nu: f64 = 55.0;
        let energy = -0.5 / (nu * nu);
        let grid = RadialGrid::uniform(2.0 * nu * nu, 9000.0, 0.05).unwrap();
        let kappa = (-2.0 * energy).sqrt();
        let h = grid.step();
        let sol = numerov_integrate(
            |r| -1.0 / r,
            energy,
            &grid,
            Direction::Inward,
            [1e-30, 1e-30 * (kappa * h).exp()],
        )
        .unwrap();
        let v = &sol.values;
        assert!(v.iter().all(|&u| u > 0.0));
        assert!(v.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn overflow_is_reported() {
        let grid = RadialGrid::uniform(0.0, 100.0, 0.01).unwrap();
        let r = numerov_integrate(|_| 0.0, -50.0, &grid, Direction::Outward, [1.0, 1.1]);
        assert!(matches!(r, Err(Error::Overflow { .. })));
    }

    #[test]
    fn renormalized_sweep_keeps_shape() {
        let h = 0.01;
        let q = vec![-100.0; 20_001];
        let y = sweep(&q, h, Direction::Outward, [1.0, (10.0 * h).exp()], 0, 20_000, true).unwrap();
        let ratio = y[20_000] / y[19_999];
        assert!((ratio - (10.0 * h).exp()).abs() < 1e-6);
    }
}
