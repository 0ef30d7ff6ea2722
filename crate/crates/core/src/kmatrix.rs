use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const POLE_EXCLUSION: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

/// Rank-one resonance term `gamma gamma^T / (position - E)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub strength: Vec<f64>,
    pub position: f64,
}

/// `K(E) = K0 + K1 (E - e_ref) + sum_p gamma_p gamma_p^T / (E_p - E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMatrixSpec {
    base: DMatrix<f64>,
    linear: DMatrix<f64>,
    poles: Vec<Pole>,
    e_ref: f64,
}

impl KMatrixSpec {
    pub fn new(base: DMatrix<f64>, linear: DMatrix<f64>, poles: Vec<Pole>, e_ref: f64) -> Result<Self> {
        let n = base.nrows();
        if n == 0 || !base.is_square() {
            return Err(Error::validation("kmatrix.base", "must be a non-empty square matrix"));
        }
        if linear.shape() != (n, n) {
            return Err(Error::validation("kmatrix.linear", format!("must be {n}x{n}")));
        }
        for (name, m) in [("kmatrix.base", &base), ("kmatrix.linear", &linear)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(name, "entries must be finite"));
            }
            let scale = m.amax().max(1.0);
            if (m - m.transpose()).amax() > SYMMETRY_TOL * scale {
                return Err(Error::validation(name, "matrix must be symmetric"));
            }
        }
        for (i, p) in poles.iter().enumerate() {
            if p.strength.len() != n {
                return Err(Error::validation(
                    format!("kmatrix.poles[{i}].strength"),
                    format!("must have {n} components"),
                ));
            }
            if !p.position.is_finite() || p.strength.iter().any(|g| !g.is_finite()) {
                return Err(Error::validation(format!("kmatrix.poles[{i}]"), "values must be finite"));
            }
        }
        if !e_ref.is_finite() {
            return Err(Error::validation("kmatrix.e_ref", "must be finite"));
        }
        // store exactly symmetric parts
        let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
        Ok(Self {
            base: sym(base),
            linear: sym(linear),
            poles,
            e_ref,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            base: DMatrix::zeros(n, n),
            linear: DMatrix::zeros(n, n),
            poles: Vec::new(),
            e_ref: 0.0,
        }
    }

    pub fn constant(base: DMatrix<f64>) -> Result<Self> {
        let n = base.nrows();
        Self::new(base, DMatrix::zeros(n, n), Vec::new(), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn e_ref(&self) -> f64 {
        self.e_ref
    }

    /// Pole-free part `K0 + K1 (E - e_ref)`.
    pub fn smooth_part(&self, energy: f64) -> DMatrix<f64> {
        &self.base + &self.linear * (energy - self.e_ref)
    }

    pub fn check_not_at_pole(&self, energy: f64) -> Result<()> {
        for p in &self.poles {
            if (energy - p.position).abs() <= POLE_EXCLUSION {
                return Err(Error::AtPole {
                    energy,
                    pole: p.position,
                });
            }
        }
        Ok(())
    }

    pub fn eval(&self, energy: f64) -> Result<DMatrix<f64>> {
        self.check_not_at_pole(energy)?;
        let mut k = self.smooth_part(energy);
        for p in &self.poles {
            let g = DVector::from_column_slice(&p.strength);
            k += (&g * g.transpose()) / (p.position - energy);
        }
        Ok(k)
    }

    /// Rate at which the rank-one terms sweep their eigenphase, summed over
    /// poles: `|gamma|^2 / ((E_p - E)^2 + |gamma|^4)`.
    pub fn pole_phase_rate(&self, energy: f64) -> f64 {
        self.poles
            .iter()
            .map(|p| {
                let g2: f64 = p.strength.iter().map(|g| g * g).sum();
                g2 / ((p.position - energy).powi(2) + g2 * g2)
            })
            .sum()
    }
}

/// `K(E)` per the evaluation rule.
pub fn kmatrix_eval(spec: &KMatrixSpec, energy: f64) -> Result<DMatrix<f64>> {
    spec.eval(energy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spec_is_zero() {
        let k = KMatrixSpec::zero(3).eval(-0.1).unwrap();
        assert_eq!(k, DMatrix::zeros(3, 3));
    }

    #[test]
    fn single_pole_arithmetic() {
        let mut g = vec![0.0; 4];
        g[0] = 1.0;
        let spec = KMatrixSpec::new(
            DMatrix::zeros(4, 4),
            DMatrix::zeros(4, 4),
            vec![Pole {
                strength: g,
                position: -0.001,
            }],
            0.0,
        )
        .unwrap();
        let k = spec.eval(-0.002).unwrap();
        assert!((k[(0, 0)] - 1000.0).abs() < 1e-9);
        assert_eq!(k[(1, 1)], 0.0);
        assert!(matches!(spec.eval(-0.001), Err(Error::AtPole { .. })));
    }

    #[test]
    fn rejects_asymmetric_parts() {
        let mut b = DMatrix::zeros(2, 2);
        b[(0, 1)] = 0.1;
        assert!(KMatrixSpec::constant(b).is_err());
    }

    #[test]
    fn linear_term_uses_reference_energy() {
        let spec = KMatrixSpec::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2) * 10.0,
            Vec::new(),
            -0.5,
        )
        .unwrap();
        let k = spec.eval(-0.4).unwrap();
        assert!((k[(0, 0)] - 2.0).abs() < 1e-12);
    }
}
