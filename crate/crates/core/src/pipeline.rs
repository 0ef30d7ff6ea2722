//! Orchestration of the subcommands: solve, build the metric, propagate,
//! and render every output in memory before anything touches the disk.

use std::path::Path;
use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::config::RunConfig;
use crate::dynamics::{coefficients, gaussian_projections, time_grid, AutocorrelationSeries, StateCoefficients};
use crate::error::{Error, Result};
use crate::metric::{build_metric, factorize, sorted_offdiagonals, MetricFactorization, MetricMatrix, MetricSummary};
use crate::output::{write_atomic, CsvTable, VERSION};
use crate::spectrum::{solve_chunk, Retention, SolveOptions, SpectrumChunk};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Metric,
    Fig1,
    Evolve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Metric => "metric",
            Command::Fig1 => "fig1",
            Command::Evolve => "evolve",
        }
    }
}

/// Command-line values that take precedence over the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub kappa_n: Option<usize>,
    pub max_states: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub states: usize,
    pub e_lo: f64,
    pub e_hi: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig1Summary {
    pub count: usize,
    pub largest: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsSummary {
    pub period: f64,
    pub samples: usize,
    pub sum_p_squared: f64,
    pub span_residual: f64,
    pub c_correct_0: f64,
    pub max_profile_gap: f64,
    pub norm_naive_min: f64,
    pub norm_naive_max: f64,
    pub norm_naive_mean: f64,
    pub norm_correct_max_deviation: f64,
}

/// Machine-readable digest written as `<command>.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResultBundle {
    pub command: String,
    pub provenance: Provenance,
    pub spectrum: SpectrumSummary,
    pub metric: Option<MetricSummary>,
    pub fig1: Option<Fig1Summary>,
    pub dynamics: Option<DynamicsSummary>,
    pub files: Vec<String>,
}

/// Rendered outputs of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub bundle: ResultBundle,
    /// File name and contents, bundle last.
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(dir, &self.files).map(|_| ())
    }
}

/// Solves every state in the configured window.
pub fn solve(cfg: &RunConfig, retention: Retention, overrides: Overrides) -> Result<SpectrumChunk> {
    let options = SolveOptions {
        max_states: overrides.max_states.unwrap_or(cfg.max_states),
        retention,
    };
    let start = Instant::now();
    let chunk = solve_chunk(&cfg.problem, cfg.window, &options)?;
    info!("{} states in {:.2?}", chunk.len(), start.elapsed());
    Ok(chunk)
}

pub fn metric(chunk: &SpectrumChunk) -> Result<(MetricMatrix, MetricFactorization)> {
    let start = Instant::now();
    let g = build_metric(chunk)?;
    let fact = factorize(&g)?;
    info!("metric of dimension {} in {:.2?}", g.dim(), start.elapsed());
    Ok((g, fact))
}

/// Projections, coefficients and both propagated series.
pub fn evolve(
    cfg: &RunConfig,
    chunk: &SpectrumChunk,
    fact: &MetricFactorization,
) -> Result<(StateCoefficients, AutocorrelationSeries)> {
    let (spec, period) = cfg
        .wavepacket
        .ok_or_else(|| Error::validation("wavepacket", "the evolve command needs a wavepacket section"))?;
    let p = gaussian_projections(&spec, chunk)?;
    let coeffs = coefficients(&chunk.energies(), &p, fact)?;
    let times = time_grid(period, cfg.periods, cfg.samples);
    let series = AutocorrelationSeries::compute(&coeffs, fact, times, period);
    Ok((coeffs, series))
}

fn kappa_count(cfg: &RunConfig, overrides: Overrides) -> Option<usize> {
    overrides.kappa_n.or(cfg.kappa_n)
}

fn spectrum_table(chunk: &SpectrumChunk) -> CsvTable {
    let n = chunk.problem.dim();
    let columns = ["index", "energy", "residual"]
        .into_iter()
        .map(String::from)
        .chain((1..=n).map(|i| format!("z_{i}")))
        .chain((1..=n).map(|i| format!("x_{i}")));
    let mut t = CsvTable::new(columns);
    for (k, s) in chunk.states.iter().enumerate() {
        let values = [s.energy, s.residual]
            .into_iter()
            .chain(s.z.iter().copied())
            .chain(s.x.iter().copied());
        t.push_row(Some(k), values);
    }
    t
}

fn metric_table(g: &MetricMatrix) -> CsvTable {
    let n = g.dim();
    let columns = ["index", "energy"]
        .into_iter()
        .map(String::from)
        .chain((0..n).map(|j| format!("g_{j}")));
    let mut t = CsvTable::new(columns);
    for i in 0..n {
        t.push_row(Some(i), std::iter::once(g.energies[i]).chain(g.entries.row(i).iter().copied()));
    }
    t
}

fn fig1_table(values: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(["rank", "abs_g"]);
    for (k, v) in values.iter().enumerate() {
        t.push_row(Some(k + 1), [*v]);
    }
    t
}

fn fig2_table(s: &AutocorrelationSeries) -> CsvTable {
    let mut t = CsvTable::new([
        "t",
        "t_over_period",
        "abs_c_naive",
        "abs_c_correct",
        "re_c_naive",
        "im_c_naive",
        "re_c_correct",
        "im_c_correct",
    ]);
    for (k, &time) in s.times.iter().enumerate() {
        let (a, b) = (s.c_naive[k], s.c_correct[k]);
        t.push_row(None, [time, time / s.period, a.norm(), b.norm(), a.re, a.im, b.re, b.im]);
    }
    t
}

fn fig3_table(s: &AutocorrelationSeries) -> CsvTable {
    let mut t = CsvTable::new(["t", "t_over_period", "norm_naive", "norm_correct"]);
    for (k, &time) in s.times.iter().enumerate() {
        t.push_row(None, [time, time / s.period, s.norm_naive[k], s.norm_correct[k]]);
    }
    t
}

fn dynamics_summary(coeffs: &StateCoefficients, s: &AutocorrelationSeries) -> DynamicsSummary {
    let nn = &s.norm_naive;
    DynamicsSummary {
        period: s.period,
        samples: s.times.len(),
        sum_p_squared: coeffs.p.iter().map(|x| x * x).sum(),
        span_residual: coeffs.span_residual,
        c_correct_0: s.c_correct[0].norm(),
        max_profile_gap: s.max_profile_gap(),
        norm_naive_min: nn.iter().copied().fold(f64::INFINITY, f64::min),
        norm_naive_max: nn.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        norm_naive_mean: nn.iter().sum::<f64>() / nn.len() as f64,
        norm_correct_max_deviation: s.norm_correct.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max),
    }
}

/// Runs one subcommand and renders its files; `hash` identifies the
/// configuration in every header.
pub fn run(command: Command, cfg: &RunConfig, overrides: Overrides, hash: &str) -> Result<RunOutput> {
    let retention = match (command, cfg.wavepacket) {
        (Command::Evolve, Some((spec, _))) => Retention::Channels(vec![spec.channel]),
        _ => Retention::None,
    };
    if command == Command::Evolve && cfg.wavepacket.is_none() {
        return Err(Error::validation("wavepacket", "the evolve command needs a wavepacket section"));
    }
    let chunk = solve(cfg, retention, overrides)?;
    let mut bundle = ResultBundle {
        command: command.name().to_string(),
        provenance: Provenance {
            config_sha256: hash.to_string(),
            version: VERSION.to_string(),
        },
        spectrum: SpectrumSummary {
            states: chunk.len(),
            e_lo: cfg.window.lo,
            e_hi: cfg.window.hi,
            max_residual: chunk.states.iter().map(|s| s.residual).fold(0.0, f64::max),
        },
        metric: None,
        fig1: None,
        dynamics: None,
        files: Vec::new(),
    };
    let mut files: Vec<(String, String)> = Vec::new();
    if command == Command::Spectrum {
        files.push(("spectrum.csv".into(), spectrum_table(&chunk).render(hash)));
    } else {
        let (g, fact) = metric(&chunk)?;
        bundle.metric = Some(MetricSummary::new(&g, &fact, kappa_count(cfg, overrides))?);
        match command {
            Command::Metric => files.push(("metric.csv".into(), metric_table(&g).render(hash))),
            Command::Fig1 => {
                let count = (g.dim() / 2).min(g.pair_count());
                let values = sorted_offdiagonals(&g, count)?;
                bundle.fig1 = Some(Fig1Summary {
                    count,
                    largest: values.first().copied().unwrap_or(0.0),
                });
                files.push(("fig1.csv".into(), fig1_table(&values).render(hash)));
            }
            Command::Evolve => {
                let (coeffs, series) = evolve(cfg, &chunk, &fact)?;
                bundle.dynamics = Some(dynamics_summary(&coeffs, &series));
                files.push(("fig2.csv".into(), fig2_table(&series).render(hash)));
                files.push(("fig3.csv".into(), fig3_table(&series).render(hash)));
            }
            Command::Spectrum => unreachable!(),
        }
    }
    let name = format!("{}.json", command.name());
    bundle.files = files.iter().map(|(n, _)| n.clone()).chain([name.clone()]).collect();
    let json = serde_json::to_string_pretty(&bundle).expect("bundle serializes") + "\n";
    files.push((name, json));
    Ok(RunOutput { bundle, files })
}
