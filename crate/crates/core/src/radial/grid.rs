use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How consecutive nodes are spaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// r_{j+1} - r_j constant.
    Uniform,
    /// ln r_{j+1} - ln r_j constant.
    Logarithmic,
}

/// Sample points of the radial coordinate.
///
/// `step` is the constant increment of the integration variable: `dr` for a
/// uniform grid, `d(ln r)` for a logarithmic one.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    spacing: Spacing,
    step: f64,
}

const UNIFORM_TOL: f64 = 1e-12;

impl RadialGrid {
    /// Uniform grid on `[r_min, r_max]` whose step is the largest value not
    /// exceeding `step` that divides the interval evenly.
    pub fn uniform(r_min: f64, r_max: f64, step: f64) -> Result<Self> {
        check_bounds(r_min, r_max)?;
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        let intervals = ((r_max - r_min) / step).ceil().max(1.0) as usize;
        let h = (r_max - r_min) / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|j| r_min + j as f64 * h).collect();
        nodes[intervals] = r_max;
        Ok(Self {
            nodes,
            spacing: Spacing::Uniform,
            step: h,
        })
    }

    /// Logarithmic grid with `anchor` as node number `nodes_below`, step `dx`
    /// in `ln r`, extended until the last node reaches `r_max`.
    pub fn logarithmic(anchor: f64, nodes_below: usize, dx: f64, r_max: f64) -> Result<Self> {
        if !(anchor > 0.0) || !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "logarithmic grid needs anchor > 0 and dx > 0 (anchor {anchor}, dx {dx})"
            )));
        }
        if !(r_max > anchor) {
            return Err(Error::InvalidGrid(format!(
                "r_max {r_max} must exceed the anchor radius {anchor}"
            )));
        }
        let above = ((r_max / anchor).ln() / dx).ceil() as usize;
        let x_anchor = anchor.ln();
        let nodes = (0..=nodes_below + above)
            .map(|j| {
                if j == nodes_below {
                    anchor
                } else {
                    (x_anchor + (j as f64 - nodes_below as f64) * dx).exp()
                }
            })
            .collect();
        Ok(Self {
            nodes,
            spacing: Spacing::Logarithmic,
            step: dx,
        })
    }

    /// Arbitrary strictly increasing nodes, treated as nominally uniform with
    /// the first difference as step. Irregular grids are accepted here and
    /// rejected by [`RadialGrid::require_uniform`].
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
        }
        check_bounds(nodes[0], *nodes.last().unwrap())?;
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        let h = nodes[1] - nodes[0];
        Ok(Self {
            nodes,
            spacing: Spacing::Uniform,
            step: h,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Largest relative deviation of the step in the grid's own variable,
    /// beyond the rounding of the stored node values.
    pub fn uniform_deviation(&self) -> f64 {
        let var = |r: f64| match self.spacing {
            Spacing::Uniform => r,
            Spacing::Logarithmic => r.ln(),
        };
        self.nodes
            .windows(2)
            .map(|w| {
                let rounding = 4.0 * f64::EPSILON * var(w[1]).abs().max(var(w[0]).abs());
                (((var(w[1]) - var(w[0])) - self.step).abs() - rounding).max(0.0) / self.step
            })
            .fold(0.0, f64::max)
    }

    pub fn require_uniform(&self) -> Result<()> {
        let deviation = match self.spacing {
            Spacing::Uniform => self.uniform_deviation(),
            Spacing::Logarithmic => f64::INFINITY,
        };
        if deviation > UNIFORM_TOL {
            return Err(Error::NonUniformGrid { deviation });
        }
        Ok(())
    }

    /// Index of the node closest to `r`.
    pub fn nearest_index(&self, r: f64) -> usize {
        match self.nodes.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.nodes.len() => self.nodes.len() - 1,
            Err(i) => {
                if (r - self.nodes[i - 1]) <= (self.nodes[i] - r) {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Quadrature weights for `∫ u(r) dr` over `nodes[from..]`.
    ///
    /// Composite Simpson in the grid variable, closed with a 3/8 panel when
    /// the interval count is odd; the Jacobian `dr/dx = r` is folded in for
    /// logarithmic grids.
    pub fn simpson_weights(&self, from: usize) -> Vec<f64> {
        let n = self.nodes.len() - from;
        let mut w = composite_simpson(n, self.step);
        if self.spacing == Spacing::Logarithmic {
            for (wi, r) in w.iter_mut().zip(&self.nodes[from..]) {
                *wi *= r;
            }
        }
        w
    }
}

fn check_bounds(r_min: f64, r_max: f64) -> Result<()> {
    if !(r_min >= 0.0) || !r_min.is_finite() {
        return Err(Error::InvalidGrid(format!("r_min must be >= 0, got {r_min}")));
    }
    if !(r_max > r_min) || !r_max.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "r_max ({r_max}) must exceed r_min ({r_min})"
        )));
    }
    Ok(())
}

pub(crate) fn composite_simpson(points: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; points];
    match points {
        0 | 1 => return w,
        2 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
            return w;
        }
        _ => {}
    }
    let intervals = points - 1;
    let simpson_end = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
    let mut i = 0;
    while i < simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if simpson_end < intervals {
        let c = 3.0 * h / 8.0;
        w[simpson_end] += c;
        w[simpson_end + 1] += 3.0 * c;
        w[simpson_end + 2] += 3.0 * c;
        w[simpson_end + 3] += c;
    }
    w
}

/// Eighth-order central difference of `y` at index `i` (needs four
/// neighbours on each side).
pub(crate) fn central_derivative(y: &[f64], i: usize, h: f64) -> f64 {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let mut s = 0.0;
    for (k, c) in C.iter().enumerate() {
        s += c * (y[i + k + 1] - y[i - k - 1]);
    }
    s / h
}
