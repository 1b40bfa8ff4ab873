//! Plain-text run configuration: `key = value` lines under bracketed
//! sections, chosen for diff-friendliness in experiment tracking.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ops::WeightParams;
use crate::scenario::{ScenarioKind, ScenarioSpec};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_x1: usize,
    pub n_y: usize,
    pub n_x3: usize,
    pub l: f64,
    pub y_max: f64,
    pub ell: f64,
    pub a0: f64,
    pub rho0: f64,
    pub tau: f64,
    pub c0: f64,
    pub m_max: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Evolution horizon expressed as a fraction of the estimated lifespan;
    /// when positive it overrides `t_end`.
    pub t_star_fraction: f64,
    pub eps1: f64,
    pub eps1_schedule: Vec<f64>,
    pub eps_sweep: Vec<f64>,
    pub scenario: ScenarioKind,
    pub amplitude: f64,
    pub mode: usize,
    pub width: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Emit diagnostics every this many steps.
    pub sample_every: usize,
    /// Replace the wall-normal derivative traces by their tangential
    /// divergence-consistent values.
    pub div_consistent_traces: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_x1: 256,
            n_y: 129,
            n_x3: 129,
            l: 10.0,
            y_max: 8.0,
            ell: 1.0,
            a0: 0.25,
            rho0: 1.0,
            tau: 3.0,
            c0: 1.0,
            m_max: 8,
            dt: 1e-3,
            t_end: 0.1,
            t_star_fraction: 0.0,
            eps1: 1e-4,
            eps1_schedule: vec![1e-2, 1e-3, 1e-4],
            eps_sweep: vec![1e-2, 3e-3, 1e-3, 3e-4],
            scenario: ScenarioKind::SmallData,
            amplitude: 0.05,
            mode: 1,
            width: 2.0,
            out_dir: PathBuf::from("out"),
            seed: 42,
            sample_every: 10,
            div_consistent_traces: true,
        }
    }
}

impl RunConfig {
    pub fn scenario_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            kind: self.scenario,
            amplitude: self.amplitude,
            mode: self.mode,
            width: self.width,
            a0: self.a0,
        }
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_text(&text)
    }

    pub fn from_str_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (entry, line_no) in parse_entries(text)? {
            let (section, key, value) = entry;
            let qual = format!("{section}.{key}");
            let bad = |what: &str| Error::ConfigParse {
                line: line_no,
                msg: format!("cannot parse '{value}' as {what} for {qual}"),
            };
            let as_f64 = || value.parse::<f64>().map_err(|_| bad("a number"));
            let as_usize = || value.parse::<usize>().map_err(|_| bad("an integer"));
            let as_list = || -> Result<Vec<f64>> {
                value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| bad("a number list")))
                    .collect()
            };
            match qual.as_str() {
                "grid.n_x1" => cfg.n_x1 = as_usize()?,
                "grid.n_y" => cfg.n_y = as_usize()?,
                "grid.n_x3" => cfg.n_x3 = as_usize()?,
                "grid.L" | "grid.l" => cfg.l = as_f64()?,
                "grid.Y" | "grid.y" => cfg.y_max = as_f64()?,
                "weights.ell" => cfg.ell = as_f64()?,
                "weights.a0" => cfg.a0 = as_f64()?,
                "norms.rho0" => cfg.rho0 = as_f64()?,
                "norms.tau" => cfg.tau = as_f64()?,
                "norms.C0" | "norms.c0" => cfg.c0 = as_f64()?,
                "norms.m_max" => cfg.m_max = as_usize()?,
                "time.dt" => cfg.dt = as_f64()?,
                "time.T" | "time.t" => cfg.t_end = as_f64()?,
                "time.t_star_fraction" => cfg.t_star_fraction = as_f64()?,
                "time.sample_every" => cfg.sample_every = as_usize()?,
                "layer.eps1" => cfg.eps1 = as_f64()?,
                "layer.eps1_schedule" => cfg.eps1_schedule = as_list()?,
                "sweep.eps" => cfg.eps_sweep = as_list()?,
                "scenario.id" => cfg.scenario = ScenarioKind::parse(&value)?,
                "scenario.amplitude" => cfg.amplitude = as_f64()?,
                "scenario.mode" => cfg.mode = as_usize()?,
                "scenario.width" => cfg.width = as_f64()?,
                "output.dir" => cfg.out_dir = PathBuf::from(&value),
                "output.seed" => cfg.seed = value.parse::<u64>().map_err(|_| bad("an integer"))?,
                "coupling.div_consistent_traces" => {
                    cfg.div_consistent_traces = match value.as_str() {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => return Err(bad("a boolean")),
                    }
                }
                other => {
                    return Err(Error::ConfigParse {
                        line: line_no,
                        msg: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    /// Check every structural invariant without running; returns the list of
    /// violations (empty when the config is usable).
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_x1 < 8 || !self.n_x1.is_power_of_two() {
            v.push(format!(
                "grid.n_x1 must be a power of two >= 8, got {}",
                self.n_x1
            ));
        }
        if self.n_y < 5 {
            v.push(format!("grid.n_y must be >= 5, got {}", self.n_y));
        }
        if self.n_x3 < 5 || !(self.n_x3 - 1).is_power_of_two() {
            v.push(format!(
                "grid.n_x3 - 1 must be a power of two (transform doubling), got {}",
                self.n_x3
            ));
        }
        if !(self.l > 0.0 && self.y_max > 0.0) {
            v.push("domain lengths must be positive".into());
        }
        if let Err(e) = WeightParams::new(self.ell, self.a0) {
            v.push(e.to_string());
        } else if let Err(e) = WeightParams::new(self.ell, self.a0)
            .unwrap()
            .validate_against_height(self.y_max)
        {
            v.push(e.to_string());
        }
        if !(self.rho0 > 0.0) {
            v.push(format!("norms.rho0 must be positive, got {}", self.rho0));
        }
        if !(self.tau > 0.0) {
            v.push(format!("norms.tau must be positive, got {}", self.tau));
        }
        if self.m_max < 3 || self.m_max > crate::ops::MAX_TANGENTIAL_ORDER {
            v.push(format!(
                "norms.m_max must lie in [3, {}], got {}",
                crate::ops::MAX_TANGENTIAL_ORDER,
                self.m_max
            ));
        }
        if !(self.dt > 0.0) {
            v.push(format!("time.dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0) && self.t_star_fraction <= 0.0 {
            v.push("time.T must be positive (or set time.t_star_fraction)".into());
        }
        if !(self.eps1 > 0.0) {
            v.push(format!("layer.eps1 must be positive, got {}", self.eps1));
        }
        if self.eps1_schedule.len() < 3 {
            v.push("layer.eps1_schedule needs at least 3 entries".into());
        }
        if !self.eps1_schedule.windows(2).all(|w| w[1] < w[0]) {
            v.push("layer.eps1_schedule must be strictly decreasing".into());
        }
        if !self.eps_sweep.windows(2).all(|w| w[1] < w[0]) {
            v.push("sweep.eps must be strictly decreasing".into());
        }
        if self.eps_sweep.iter().any(|e| *e <= 0.0) {
            v.push("sweep.eps entries must be positive".into());
        }
        if self.sample_every == 0 {
            v.push("time.sample_every must be >= 1".into());
        }
        v
    }

    /// Canonical serialized form (sections and keys in fixed order), used
    /// both for provenance in the manifest and for the config hash.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let mut push_sec = |name: &str, entries: &[(&str, String)]| {
            s.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                s.push_str(&format!("{k} = {v}\n"));
            }
        };
        push_sec(
            "grid",
            &[
                ("n_x1", self.n_x1.to_string()),
                ("n_y", self.n_y.to_string()),
                ("n_x3", self.n_x3.to_string()),
                ("L", format!("{:e}", self.l)),
                ("Y", format!("{:e}", self.y_max)),
            ],
        );
        push_sec(
            "weights",
            &[
                ("ell", format!("{:e}", self.ell)),
                ("a0", format!("{:e}", self.a0)),
            ],
        );
        push_sec(
            "norms",
            &[
                ("rho0", format!("{:e}", self.rho0)),
                ("tau", format!("{:e}", self.tau)),
                ("C0", format!("{:e}", self.c0)),
                ("m_max", self.m_max.to_string()),
            ],
        );
        push_sec(
            "time",
            &[
                ("dt", format!("{:e}", self.dt)),
                ("T", format!("{:e}", self.t_end)),
                ("t_star_fraction", format!("{:e}", self.t_star_fraction)),
                ("sample_every", self.sample_every.to_string()),
            ],
        );
        push_sec(
            "layer",
            &[
                ("eps1", format!("{:e}", self.eps1)),
                (
                    "eps1_schedule",
                    self.eps1_schedule
                        .iter()
                        .map(|e| format!("{e:e}"))
                        .collect::<Vec<_>>()
                        .join(","),
                ),
            ],
        );
        push_sec(
            "sweep",
            &[(
                "eps",
                self.eps_sweep
                    .iter()
                    .map(|e| format!("{e:e}"))
                    .collect::<Vec<_>>()
                    .join(","),
            )],
        );
        push_sec(
            "scenario",
            &[
                ("id", self.scenario.name().to_string()),
                ("amplitude", format!("{:e}", self.amplitude)),
                ("mode", self.mode.to_string()),
                ("width", format!("{:e}", self.width)),
            ],
        );
        push_sec(
            "coupling",
            &[(
                "div_consistent_traces",
                self.div_consistent_traces.to_string(),
            )],
        );
        // the output directory is not part of the experiment identity
        push_sec("output", &[("seed", self.seed.to_string())]);
        s
    }
}

type Entry = ((String, String, String), usize);

fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut section = String::new();
    let mut out = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(Error::ConfigParse {
                line: line_no,
                msg: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
            line: line_no,
            msg: "expected 'key = value'".into(),
        })?;
        if section.is_empty() {
            return Err(Error::ConfigParse {
                line: line_no,
                msg: "key outside of any [section]".into(),
            });
        }
        let key = key.trim().to_string();
        let qual = format!("{section}.{key}");
        if let Some(prev) = seen.insert(qual.clone(), line_no) {
            return Err(Error::ConfigParse {
                line: line_no,
                msg: format!("duplicate key '{qual}' (first set on line {prev})"),
            });
        }
        out.push(((section.clone(), key, value.trim().to_string()), line_no));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip_and_defaults() {
        let text = "\n[grid]\nn_x1 = 128\nL = 12.5\n\n[scenario]\nid = transport\n";
        let cfg = RunConfig::from_str_text(text).unwrap();
        assert_eq!(cfg.n_x1, 128);
        assert_eq!(cfg.l, 12.5);
        assert_eq!(cfg.scenario, ScenarioKind::Transport);
        assert_eq!(cfg.n_y, 129); // default survives
        assert!(cfg.validate().is_empty());
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "[grid]\nn_x1 = not_a_number\n";
        match RunConfig::from_str_text(text) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "[grid\nn_x1 = 8\n";
        match RunConfig::from_str_text(text) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validate_flags_bad_ell() {
        let mut cfg = RunConfig::default();
        cfg.ell = 0.4;
        let v = cfg.validate();
        assert!(v.iter().any(|m| m.contains("ell")), "{v:?}");
    }

    #[test]
    fn validate_flags_weight_overflow() {
        let mut cfg = RunConfig::default();
        cfg.a0 = 10.0;
        let v = cfg.validate();
        assert!(v.iter().any(|m| m.contains("overflow")), "{v:?}");
    }

    #[test]
    fn consistent_config_empty_report() {
        assert!(RunConfig::default().validate().is_empty());
    }
}
