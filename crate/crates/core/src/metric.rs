use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial::wronskian_overlap;
use crate::spectrum::SpectrumChunk;

const PD_TOL: f64 = 1e-12;

/// Gram matrix of the normalized eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    pub energies: Vec<f64>,
    pub entries: DMatrix<f64>,
}

impl MetricMatrix {
    pub fn new(energies: Vec<f64>, entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() != energies.len() {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                got: entries.nrows(),
            });
        }
        Ok(Self { energies, entries })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn pair_count(&self) -> usize {
        let n = self.dim();
        n * n.saturating_sub(1) / 2
    }

    /// Off-diagonal magnitudes in upper-triangle row-major order.
    fn upper_magnitudes(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(self.pair_count());
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.entries[(i, j)].abs());
            }
        }
        out
    }

    pub fn max_offdiagonal(&self) -> f64 {
        self.upper_magnitudes().into_iter().fold(0.0, f64::max)
    }
}

/// `G_ab = sum_i X_i(E_a) X_i(E_b) <F_i(E_a) | F_i(E_b)>` from boundary
/// Wronskians, with the diagonal pinned to 1.
pub fn build_metric(chunk: &SpectrumChunk) -> Result<MetricMatrix> {
    let states = &chunk.states;
    let n = states.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let sa = &states[a];
            (a + 1..n)
                .map(|b| {
                    let sb = &states[b];
                    let mut g = 0.0;
                    for (i, (wa, wb)) in sa.waves.iter().zip(&sb.waves).enumerate() {
                        g += sa.x[i] * sb.x[i] * wronskian_overlap(wa, wb)?;
                    }
                    Ok(g)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::identity(n, n);
    for (a, row) in rows.iter().enumerate() {
        for (k, &g) in row.iter().enumerate() {
            let b = a + 1 + k;
            if !(g.abs() < 1.0) {
                return Err(Error::IllConditionedBasis {
                    row: a,
                    col: b,
                    value: g.abs(),
                });
            }
            entries[(a, b)] = g;
            entries[(b, a)] = g;
        }
    }
    MetricMatrix::new(chunk.energies(), entries)
}

/// Spectral decomposition of `G` and the matrix functions built from it.
#[derive(Debug, Clone)]
pub struct MetricFactorization {
    /// The factorized matrix itself.
    pub metric: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the matching orthonormal eigenvectors.
    pub eigenvectors: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub condition: f64,
}

impl MetricFactorization {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

/// `G = V diag(lambda) V^T` and `G^s = V diag(lambda^s) V^T` for
/// `s = -1, 1/2, -1/2`.
pub fn factorize(g: &MetricMatrix) -> Result<MetricFactorization> {
    let n = g.dim();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let eig = SymmetricEigen::new(g.entries.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    if !(eigenvalues[0] > PD_TOL) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: eigenvalues[0],
        });
    }
    let apply = |f: &dyn Fn(f64) -> f64| {
        let mut scaled = vectors.clone();
        for (k, &lambda) in eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(f(lambda));
        }
        let m = &scaled * vectors.transpose();
        (&m + m.transpose()) * 0.5
    };
    let inverse = apply(&|l| 1.0 / l);
    let sqrt = apply(&f64::sqrt);
    let inv_sqrt = apply(&|l| 1.0 / l.sqrt());
    let condition = eigenvalues[n - 1] / eigenvalues[0];
    Ok(MetricFactorization {
        metric: g.entries.clone(),
        eigenvalues,
        eigenvectors: vectors,
        inverse,
        sqrt,
        inv_sqrt,
        condition,
    })
}

/// The `count` largest off-diagonal magnitudes, descending; ties keep
/// upper-triangle row-major order.
pub fn sorted_offdiagonals(g: &MetricMatrix, count: usize) -> Result<Vec<f64>> {
    let available = g.pair_count();
    if count > available {
        return Err(Error::InvalidCount {
            requested: count,
            available,
        });
    }
    let mut mags = g.upper_magnitudes();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.truncate(count);
    Ok(mags)
}

/// Mean of the `n` largest off-diagonal magnitudes of `G - I`; `n` defaults
/// to the matrix dimension, capped at the number of pairs.
pub fn kappa_index(g: &MetricMatrix, n: Option<usize>) -> Result<f64> {
    let available = g.pair_count();
    if available == 0 {
        return Err(Error::EmptyMatrix);
    }
    let n = n.unwrap_or_else(|| g.dim().min(available));
    if n == 0 {
        return Err(Error::InvalidCount {
            requested: 0,
            available,
        });
    }
    let top = sorted_offdiagonals(g, n)?;
    Ok(top.iter().sum::<f64>() / n as f64)
}

/// Coefficients of the biorthogonal partners: the columns of `G^-1`.
pub fn biorthogonal_coefficients(fact: &MetricFactorization) -> DMatrix<f64> {
    fact.inverse.clone()
}

/// Scalar digest written next to the matrix export.
#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    pub dim: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub condition: f64,
    pub kappa: f64,
    pub kappa_n: usize,
    pub max_offdiagonal: f64,
}

impl MetricSummary {
    pub fn new(g: &MetricMatrix, fact: &MetricFactorization, kappa_n: Option<usize>) -> Result<Self> {
        let n = kappa_n.unwrap_or_else(|| g.dim().min(g.pair_count()));
        Ok(Self {
            dim: g.dim(),
            min_eigenvalue: fact.min_eigenvalue(),
            max_eigenvalue: fact.max_eigenvalue(),
            condition: fact.condition,
            kappa: kappa_index(g, Some(n))?,
            kappa_n: n,
            max_offdiagonal: g.max_offdiagonal(),
        })
    }
}
