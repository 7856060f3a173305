//! Experiment configuration files.
//!
//! TOML with three sections:
//!
//! ```toml
//! [experiment]
//! model = "dyadic"
//! diagnostics = ["ui", "lbc"]
//! family = "alpha:0.5"
//! start = "4"
//! seed = 7
//!
//! [grid]
//! steps = 40            # or t_grid = [100.0, 200.0]
//! probe_radii = [16.0, 8.0, 4.0]
//! samples = 2000
//! tail_fraction = 0.5
//!
//! [output]
//! format = "json"
//! path = "out"
//! ```
//!
//! Command-line flags override config fields, which override built-in
//! defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ergokit::models;

use crate::{Format, UsageError};

pub const DIAGNOSTIC_IDS: [&str; 6] = ["lbc", "evc", "ui", "lyapunov", "tightness", "birkhoff"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub model: Option<String>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
    pub family: Option<String>,
    pub start: Option<String>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub steps: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    pub probe_radii: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub tail_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| UsageError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks ids against the registries and rejects configs that set nothing.
    pub fn validate(&self) -> Result<(), UsageError> {
        if *self == ExperimentConfig::default() {
            return Err(UsageError("config: no fields set".into()));
        }
        let e = &self.experiment;
        if let Some(m) = &e.model {
            models::model(m).map_err(|err| UsageError(format!("config: experiment.model: {err}")))?;
        }
        for (k, d) in e.diagnostics.iter().enumerate() {
            if !DIAGNOSTIC_IDS.contains(&d.as_str()) {
                return Err(UsageError(format!("config: experiment.diagnostics[{k}]: unknown diagnostic `{d}`")));
            }
        }
        if let Some(f) = &e.family {
            let m = models::model(e.model.as_deref().unwrap_or("dyadic")).expect("checked above");
            models::parse_family(f, m.metric.clone(), m.v.clone(), &m.default_center)
                .map_err(|err| UsageError(format!("config: experiment.family: {err}")))?;
        }
        if let Some(s) = &e.start {
            s.parse::<ergokit::State>()
                .map_err(|err| UsageError(format!("config: experiment.start: {err}")))?;
        }
        if let Some(h) = e.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(UsageError(format!("config: experiment.horizon: must be positive, got {h}")));
            }
        }
        let g = &self.grid;
        if g.steps == Some(0) {
            return Err(UsageError("config: grid.steps: must be at least 1".into()));
        }
        if g.samples == Some(0) {
            return Err(UsageError("config: grid.samples: must be at least 1".into()));
        }
        if let Some(t) = &g.t_grid {
            if t.is_empty() {
                return Err(UsageError("config: grid.t_grid: must not be empty".into()));
            }
            if let Some(k) = t.windows(2).position(|w| w[1] <= w[0]) {
                return Err(UsageError(format!("config: grid.t_grid[{}]: times must increase", k + 1)));
            }
        }
        if let Some(r) = &g.probe_radii {
            if let Some(k) = r.iter().position(|x| !(*x > 0.0)) {
                return Err(UsageError(format!("config: grid.probe_radii[{k}]: must be positive")));
            }
        }
        if let Some(f) = g.tail_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(UsageError(format!("config: grid.tail_fraction: must lie in (0, 1], got {f}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_rejected() {
        assert!(ExperimentConfig::parse("").is_err());
        assert!(ExperimentConfig::parse("[experiment]\n").is_err());
    }

    #[test]
    fn full_config_parses() {
        let cfg = ExperimentConfig::parse(
            "[experiment]\nmodel = \"dyadic\"\ndiagnostics = [\"ui\"]\nseed = 7\n[grid]\nsteps = 40\n[output]\nformat = \"csv\"\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment.seed, Some(7));
        assert_eq!(cfg.output.format, Some(Format::Csv));
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::parse("[grid]\nt_grid = [2.0, 1.0]\n").unwrap_err();
        assert!(e.0.contains("grid.t_grid[1]"), "{}", e.0);
        let e = ExperimentConfig::parse("[experiment]\nmodel = \"nope\"\n").unwrap_err();
        assert!(e.0.contains("experiment.model"), "{}", e.0);
        assert!(ExperimentConfig::parse("[experiment]\nmodle = \"dyadic\"\n").is_err());
    }
}
