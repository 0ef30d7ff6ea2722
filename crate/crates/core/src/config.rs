//! JSON run configuration.
//!
//! ```json
//! {
//!   "model":      { "kind": "coulomb", "r0": 3.0, "r_max": 1.2e5, "grid_step": 1.4e-4 },
//!   "channels":   { "thresholds": [0.0, 2e-5], "l": [0, 0] },
//!   "kmatrix":    { "base": [[..]], "linear": [[..]], "poles": [..], "e_ref": -3e-4 },
//!   "window":     { "e_lo": -6e-4, "e_hi": -2.5e-5, "max_states": 2000 },
//!   "wavepacket": { "mean_n": 55, "width": 300, "channel": 1 },
//!   "times":      { "periods": 10, "samples": 2048 },
//!   "kappa":      { "n": 400 }
//! }
//! ```
//!
//! Defaults: `l` all zero; `linear` zero; `poles` empty; `e_ref` 0;
//! `max_states` 2000; `times` 10 periods and 2048 samples; `kappa.n` the
//! number of states. A Coulomb `r_max` defaults to `6 nu^2` and `grid_step`
//! to `0.02 / nu` (at most 0.05), where `nu` is the effective quantum number
//! of the lowest channel at `e_hi`. A hard-wall `grid_step` defaults to
//! `wall_radius / 10^4`. `wavepacket` is needed only by `evolve`; its
//! `channel` is 1-based and it takes either `mean_n` (centre `2 n^2`) or
//! `center`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::dynamics::{kepler_scales, WavepacketSpec};
use crate::error::{Error, Result};
use crate::kmatrix::{KMatrixSpec, Pole};
use crate::radial::{effective_n, ChannelSet, LongRangeModel};
use crate::spectrum::{EnergyWindow, SecularProblem};

pub const DEFAULT_MAX_STATES: usize = 2000;
pub const DEFAULT_PERIODS: f64 = 10.0;
pub const DEFAULT_SAMPLES: usize = 2048;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSection {
    Coulomb {
        r0: f64,
        r_max: Option<f64>,
        grid_step: Option<f64>,
    },
    HardWall {
        r0: f64,
        wall_radius: f64,
        grid_step: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelsSection {
    pub thresholds: Vec<f64>,
    pub l: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMatrixSection {
    pub base: Vec<Vec<f64>>,
    pub linear: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub poles: Vec<Pole>,
    #[serde(default)]
    pub e_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub e_lo: f64,
    pub e_hi: f64,
    pub max_states: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketSection {
    pub mean_n: Option<f64>,
    pub center: Option<f64>,
    pub width: f64,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesSection {
    pub periods: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaSection {
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelSection,
    channels: ChannelsSection,
    kmatrix: KMatrixSection,
    window: WindowSection,
    wavepacket: Option<WavepacketSection>,
    times: Option<TimesSection>,
    kappa: Option<KappaSection>,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: SecularProblem,
    pub window: EnergyWindow,
    pub max_states: usize,
    /// Gaussian packet with a 0-based channel, and the Kepler period of its
    /// mean quantum number.
    pub wavepacket: Option<(WavepacketSpec, f64)>,
    pub periods: f64,
    pub samples: usize,
    pub kappa_n: Option<usize>,
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text, &path.display().to_string())
}

/// Parses configuration text; `origin` names the source in diagnostics.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    raw.validate().map_err(|e| match e {
        Error::Validation { field, rule } => {
            let at = match locate(text, &field) {
                Some((line, column)) => format!("{origin}:{line}:{column}: {field}"),
                None => format!("{origin}: {field}"),
            };
            Error::Validation { field: at, rule }
        }
        other => other,
    })
}

/// Line and column of the last key of a dotted field path such as
/// `kmatrix.poles[2].strength`, searching each key after the previous one.
fn locate(text: &str, field: &str) -> Option<(usize, usize)> {
    let mut from = 0;
    for part in field.split('.') {
        let key = part.split('[').next().unwrap_or(part);
        let quoted = format!("\"{key}\"");
        from += text[from..].find(&quoted)?;
    }
    let line = text[..from].matches('\n').count() + 1;
    let column = from - text[..from].rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}

fn matrix(rows: &[Vec<f64>], n: usize, field: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation(field, format!("must be a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn positive(value: f64, field: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::validation(field, "must be positive"))
    }
}

impl RawConfig {
    fn validate(self) -> Result<RunConfig> {
        let thresholds = &self.channels.thresholds;
        let n = thresholds.len();
        let l = self.channels.l.clone().unwrap_or_else(|| vec![0; n]);
        let channels = ChannelSet::new(thresholds, &l)?;

        let base = matrix(&self.kmatrix.base, n, "kmatrix.base")?;
        let linear = match &self.kmatrix.linear {
            Some(rows) => matrix(rows, n, "kmatrix.linear")?,
            None => DMatrix::zeros(n, n),
        };
        let kmatrix = KMatrixSpec::new(base, linear, self.kmatrix.poles.clone(), self.kmatrix.e_ref)?;

        let window = EnergyWindow::new(self.window.e_lo, self.window.e_hi)?;
        let max_states = self.window.max_states.unwrap_or(DEFAULT_MAX_STATES);
        if max_states == 0 {
            return Err(Error::validation("window.max_states", "must be at least 1"));
        }

        let model = match self.model {
            ModelSection::Coulomb { r0, r_max, grid_step } => {
                let lowest = channels.lowest_threshold();
                if !(window.hi < lowest) {
                    return Err(Error::validation(
                        "window.e_hi",
                        format!("must lie below the lowest threshold {lowest:e} for a Coulomb model"),
                    ));
                }
                let nu = effective_n(window.hi - lowest);
                let r_max = r_max.unwrap_or(6.0 * nu * nu);
                let step = grid_step.unwrap_or((0.02 / nu).min(0.05));
                LongRangeModel::coulomb(r0, r_max, step)
            }
            ModelSection::HardWall {
                r0,
                wall_radius,
                grid_step,
            } => {
                if l.iter().any(|&l| l != 0) {
                    return Err(Error::validation("channels.l", "the hard-wall model supports l = 0 only"));
                }
                let highest = thresholds[n - 1];
                if window.lo < highest {
                    return Err(Error::validation(
                        "window.e_lo",
                        format!("must not lie below the highest threshold {highest:e} for a hard-wall model"),
                    ));
                }
                let step = grid_step.unwrap_or(wall_radius / 1e4);
                LongRangeModel::hard_wall(r0, wall_radius, step)
            }
        }
        .map_err(|e| match e {
            Error::InvalidGrid(rule) => Error::validation("model", rule),
            other => other,
        })?;

        let wavepacket = match self.wavepacket {
            None => None,
            Some(w) => {
                if w.channel == 0 || w.channel > n {
                    return Err(Error::validation(
                        "wavepacket.channel",
                        format!("must be between 1 and {n} (channels are numbered from 1)"),
                    ));
                }
                let (spec, mean_n) = match (w.mean_n, w.center) {
                    (Some(m), None) => {
                        positive(m, "wavepacket.mean_n")?;
                        (WavepacketSpec::at_mean_n(m, w.width, w.channel - 1)?, m)
                    }
                    (None, Some(c)) => {
                        positive(c, "wavepacket.center")?;
                        (WavepacketSpec::new(c, w.width, w.channel - 1)?, (c / 2.0).sqrt())
                    }
                    _ => {
                        return Err(Error::validation(
                            "wavepacket",
                            "give exactly one of mean_n and center",
                        ))
                    }
                };
                Some((spec, kepler_scales(mean_n).period))
            }
        };

        let times = self.times.unwrap_or(TimesSection {
            periods: None,
            samples: None,
        });
        let periods = positive(times.periods.unwrap_or(DEFAULT_PERIODS), "times.periods")?;
        let samples = times.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples < 2 {
            return Err(Error::validation("times.samples", "must be at least 2"));
        }

        let kappa_n = self.kappa.and_then(|k| k.n);
        if kappa_n == Some(0) {
            return Err(Error::validation("kappa.n", "must be at least 1"));
        }

        Ok(RunConfig {
            problem: SecularProblem::new(channels, model, kmatrix)?,
            window,
            max_states,
            wavepacket,
            periods,
            samples,
            kappa_n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "model": { "kind": "hard_wall", "r0": 1.0, "wall_radius": 10.0 },
  "channels": { "thresholds": [0.0] },
  "kmatrix": { "base": [[0.0]] },
  "window": { "e_lo": 0.0, "e_hi": 0.5 }
}"#;

    fn edited(from: &str, to: &str) -> String {
        assert!(MINIMAL.contains(from));
        MINIMAL.replace(from, to)
    }

    #[test]
    fn defaults_are_filled() {
        let c = parse_config_str(MINIMAL, "mem").unwrap();
        assert_eq!(c.max_states, DEFAULT_MAX_STATES);
        assert_eq!(c.samples, DEFAULT_SAMPLES);
        assert_eq!(c.periods, DEFAULT_PERIODS);
        assert!(c.wavepacket.is_none());
        assert!((c.problem.model.grid().step() - 1e-3).abs() < 1e-15);
        assert_eq!(c.problem.dim(), 1);
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_config_str("{\n  \"model\": ,\n}", "broken.json").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            parse_config_str("{}", "x").unwrap_err().exit_code(),
            1,
            "missing sections are parse errors"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = edited("\"e_hi\": 0.5", "\"e_hi\": 0.5, \"e_mid\": 0.2");
        assert!(matches!(parse_config_str(&text, "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn descending_thresholds_name_the_rule() {
        let text = edited("\"thresholds\": [0.0] }", "\"thresholds\": [0.1, 0.0] }")
            .replace("[[0.0]]", "[[0.0, 0.0], [0.0, 0.0]]");
        let err = parse_config_str(&text, "c.json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("thresholds must be ascending"), "{msg}");
        assert!(msg.contains("c.json:3:"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn zero_width_packet_is_rejected() {
        let text = edited(
            "\"window\"",
            "\"wavepacket\": { \"center\": 5.0, \"width\": 0.0, \"channel\": 1 },\n  \"window\"",
        );
        let err = parse_config_str(&text, "x").unwrap_err();
        assert!(err.to_string().contains("wavepacket.width"), "{err}");
    }

    #[test]
    fn packet_channel_is_one_based() {
        let packet = |ch: usize| {
            edited(
                "\"window\"",
                &format!("\"wavepacket\": {{ \"center\": 5.0, \"width\": 0.5, \"channel\": {ch} }},\n  \"window\""),
            )
        };
        let c = parse_config_str(&packet(1), "x").unwrap();
        assert_eq!(c.wavepacket.unwrap().0.channel, 0);
        assert!(parse_config_str(&packet(0), "x").is_err());
        assert!(parse_config_str(&packet(2), "x").is_err());
    }

    #[test]
    fn hard_wall_rejects_nonzero_l() {
        let text = edited("\"thresholds\": [0.0] }", "\"thresholds\": [0.0], \"l\": [1] }");
        assert!(parse_config_str(&text, "x").unwrap_err().to_string().contains("l = 0"));
    }

    #[test]
    fn coulomb_window_must_be_closed() {
        let text = MINIMAL
            .replace("\"kind\": \"hard_wall\", \"r0\": 1.0, \"wall_radius\": 10.0", "\"kind\": \"coulomb\", \"r0\": 1.0")
            .replace("\"e_lo\": 0.0, \"e_hi\": 0.5", "\"e_lo\": -0.01, \"e_hi\": 0.001");
        let err = parse_config_str(&text, "x").unwrap_err();
        assert!(err.to_string().contains("window.e_hi"), "{err}");
    }

    #[test]
    fn coulomb_defaults_follow_the_window() {
        let text = MINIMAL
            .replace("\"kind\": \"hard_wall\", \"r0\": 1.0, \"wall_radius\": 10.0", "\"kind\": \"coulomb\", \"r0\": 1.0")
            .replace("\"e_lo\": 0.0, \"e_hi\": 0.5", "\"e_lo\": -2e-4, \"e_hi\": -1.25e-4");
        let c = parse_config_str(&text, "x").unwrap();
        let grid = c.problem.model.grid();
        // nu = 1 / sqrt(2.5e-4) = 63.25
        assert!((grid.r_max() / 24_000.0 - 1.0).abs() < 1e-3, "{}", grid.r_max());
        assert!((grid.step() - 0.02 / 63.245_553_203_367_59).abs() < 1e-12);
    }

    #[test]
    fn locate_follows_nested_keys() {
        let text = "{\n \"a\": {\n  \"b\": 1\n }\n}";
        assert_eq!(locate(text, "a.b"), Some((3, 3)));
        assert_eq!(locate(text, "a.c"), None);
    }
}
