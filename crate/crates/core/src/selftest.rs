//! Built-in checks against closed-form spectra, run by `qhbound selftest`.

use std::f64::consts::PI;
use std::time::Instant;

use crate::kmatrix::KMatrixSpec;
use crate::radial::{quadrature_overlap, wronskian_overlap, ChannelSet, LongRangeModel};
use crate::spectrum::{solve_chunk, EnergyWindow, SecularProblem, SolveOptions};
use crate::Result;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, result: Result<(bool, String)>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn single_channel(model: LongRangeModel) -> Result<SecularProblem> {
    SecularProblem::new(ChannelSet::single(0), model, KMatrixSpec::zero(1))
}

/// Hydrogen levels n = 50..60 with K = 0.
fn hydrogen() -> Result<(bool, String)> {
    let start = Instant::now();
    let level = |n: f64| -0.5 / (n * n);
    let problem = single_channel(LongRangeModel::coulomb(1.0, 6.0 * 61.0 * 61.0, 3e-4)?)?;
    let options = SolveOptions {
        retention: crate::spectrum::Retention::None,
        ..SolveOptions::default()
    };
    let chunk = solve_chunk(&problem, EnergyWindow::new(level(49.5), level(60.5))?, &options)?;
    let energies = chunk.energies();
    let worst = energies
        .iter()
        .zip(50..=60)
        .map(|(e, n)| ((e - level(n as f64)) / level(n as f64)).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    let passed = energies.len() == 11 && worst < 1e-9 && elapsed < 10.0;
    Ok((
        passed,
        format!("{} roots, max relative error {worst:.2e}, {elapsed:.2} s", energies.len()),
    ))
}

/// Hard wall at L = 10 with r0 = 1: levels m^2 pi^2 / 200 and the overlap
/// of the first two states by both routes.
fn hard_wall() -> Result<(bool, String)> {
    let problem = single_channel(LongRangeModel::hard_wall(1.0, 10.0, 1e-3)?)?;
    let chunk = solve_chunk(&problem, EnergyWindow::new(0.0, 5.0)?, &SolveOptions::default())?;
    let energies = chunk.energies();
    let worst = energies
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let m = (k + 1) as f64;
            (e - m * m * PI * PI / 200.0).abs()
        })
        .fold(0.0, f64::max);
    let (a, b) = (&chunk.states[0], &chunk.states[1]);
    let w = a.x[0] * b.x[0] * wronskian_overlap(&a.waves[0], &b.waves[0])?;
    let q = a.x[0] * b.x[0] * quadrature_overlap(&a.waves[0], &b.waves[0])?;
    let passed = energies.len() == 10 && worst < 1e-10 && (w - q).abs() < 1e-8;
    Ok((
        passed,
        format!(
            "{} roots, max error {worst:.2e}; G12 Wronskian {w:.10} vs quadrature {q:.10}",
            energies.len()
        ),
    ))
}

pub fn run_selftest() -> Vec<Check> {
    vec![check("hydrogen n=50..60", hydrogen()), check("hard wall L=10", hard_wall())]
}
