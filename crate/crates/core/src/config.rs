//! Experiment configuration, one TOML file per experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::deviation::MIN_SAMPLES;
use crate::error::{invalid, Result};
use crate::flows::{RoofSpec, SuspensionFlow};
use crate::observables::{Observable, ObservableSpec};
use crate::systems::{System, SystemSpec};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ERGLAB_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NRange {
    pub min: usize,
    pub max: usize,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl NRange {
    pub fn values(&self) -> Vec<usize> {
        (self.min..=self.max).step_by(self.stride.max(1)).collect()
    }

    fn validate(&self, name: &str, allow_zero: bool) -> Result<()> {
        if self.stride == 0 {
            return Err(invalid(&format!("{name}.stride"), "must be positive"));
        }
        if !allow_zero && self.min == 0 {
            return Err(invalid(&format!("{name}.min"), "must be positive"));
        }
        if self.max < self.min {
            return Err(invalid(&format!("{name}.max"), "is below min"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverConfig {
    pub n: NRange,
    /// Overrides the radius derived from the observable's modulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Tested `d′ = d₀ + offset`.
    #[serde(default = "default_offsets")]
    pub dprime_offsets: Vec<f64>,
    #[serde(default = "default_grid_budget")]
    pub grid_budget: u64,
}

fn default_offsets() -> Vec<f64> {
    vec![0.1]
}

fn default_grid_budget() -> u64 {
    100_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub n: usize,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub roof: RoofSpec,
    pub t_ladder: Vec<f64>,
    #[serde(default = "default_flow_samples")]
    pub samples: usize,
    #[serde(default)]
    pub fiber_amplitude: f64,
}

fn default_flow_samples() -> usize {
    1_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub observable: ObservableSpec,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub sample_count: u64,
    /// Known space average; estimated from the SRB measure when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub ladder: NRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<LemmaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    pub fn build_system(&self) -> Result<System> {
        System::from_spec(&self.system)
    }

    pub fn build_observable(&self, sys: &System) -> Result<Observable> {
        Observable::for_system(&self.observable, sys)
    }

    pub fn validate(&self) -> Result<()> {
        let sys = self.build_system()?;
        self.build_observable(&sys)?;
        if self.alphas.is_empty() {
            return Err(invalid("alphas", "list is empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(invalid("alphas", format!("{a} is not a positive threshold")));
        }
        if self.sample_count < MIN_SAMPLES {
            return Err(invalid(
                "sample_count",
                format!("{} is below the floor {MIN_SAMPLES}", self.sample_count),
            ));
        }
        if let Some(p) = self.phi_bar {
            if !p.is_finite() {
                return Err(invalid("phi_bar", "not finite"));
            }
        }
        self.ladder.validate("ladder", false)?;
        sys.check_horizon(self.ladder.max)?;
        if let Some(c) = &self.cover {
            c.n.validate("cover.n", true)?;
            if let Some(d) = c.delta {
                if !(d > 0.0) {
                    return Err(invalid("cover.delta", format!("{d} is not positive")));
                }
            }
            if c.dprime_offsets.iter().any(|o| !(*o > 0.0)) {
                return Err(invalid("cover.dprime_offsets", "offsets must be positive"));
            }
            if c.grid_budget == 0 {
                return Err(invalid("cover.grid_budget", "must be positive"));
            }
            sys.check_horizon(c.n.max)?;
        }
        if let Some(l) = &self.lemma {
            if l.n == 0 {
                return Err(invalid("lemma.n", "must be positive"));
            }
            if l.pairs == 0 {
                return Err(invalid("lemma.pairs", "must be positive"));
            }
            sys.check_horizon(l.n)?;
        }
        if let Some(f) = &self.flow {
            SuspensionFlow::new(sys.clone(), f.roof.clone())?;
            if f.t_ladder.is_empty() || f.t_ladder.iter().any(|t| !(*t >= 2.0) || !t.is_finite()) {
                return Err(invalid("flow.t_ladder", "needs horizons of at least 2"));
            }
            if f.samples == 0 {
                return Err(invalid("flow.samples", "must be positive"));
            }
            if !f.fiber_amplitude.is_finite() {
                return Err(invalid("flow.fiber_amplitude", "not finite"));
            }
        }
        Ok(())
    }

    /// `cli` beats the config, which beats the environment default.
    pub fn resolve_output_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("erglab-out"))
    }
}
