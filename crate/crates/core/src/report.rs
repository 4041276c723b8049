//! Report structure and file emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::deviation::{DeviationLadder, RateFunctionFit};
use crate::dimension::{BallLemmaReport, BesicovitchEggleston, CoverLadder, DimensionReport, VolumeSeries};
use crate::flows::{RoofSpec, TimeOneLipschitz};
use crate::systems::SpaceAverage;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

/// A fit, or the reason none could be made.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum FitOutcome {
    Fitted(RateFunctionFit),
    Failed { reason: String },
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&RateFunctionFit> {
        match self {
            FitOutcome::Fitted(f) => Some(f),
            FitOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub alpha: f64,
    pub half_alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<DeviationLadder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_ladder: Option<DeviationLadder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_fit: Option<FitOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverLadder>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<VolumeSeries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_dimension_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<BesicovitchEggleston>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<DimensionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma: Option<BallLemmaReport>,
    /// Stages that did not apply, with the reason.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

impl AlphaReport {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            half_alpha: 0.5 * alpha,
            ladder: None,
            half_ladder: None,
            fit: None,
            half_fit: None,
            delta: None,
            cover: None,
            series: Vec::new(),
            box_dimension_error: None,
            oracle: None,
            dimension: None,
            lemma: None,
            skipped: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerPartSummary {
    pub max_lhs: f64,
    pub bound: f64,
    pub failures: usize,
    /// States where the unfactored constant `sup|φ|/[T]` was exceeded.
    pub naive_bound_exceeded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionSummary {
    pub alpha: f64,
    /// Whether `T` clears the horizon needed for the implication.
    pub admissible: bool,
    pub in_flow_set: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowHorizonSummary {
    pub t: f64,
    /// Fraction of sampled states with flow deviation at least `α`, per `α`.
    pub deviation_fraction: Vec<f64>,
    pub integer_part: IntegerPartSummary,
    pub inclusion: Vec<InclusionSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub roof: RoofSpec,
    pub fiber_amplitude: f64,
    pub phi_bar: f64,
    pub quadrature_step: f64,
    pub samples: usize,
    pub horizons: Vec<FlowHorizonSummary>,
    pub time_one_lipschitz: TimeOneLipschitz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<StageTiming>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_bar: Option<SpaceAverage>,
    pub experiments: Vec<AlphaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    /// Wall-clock data; the only section that varies between identical runs.
    pub timings: Timings,
}

/// `0.3` → `0.3`, `0.15` → `0.15`; safe inside file names.
fn alpha_tag(alpha: f64) -> String {
    format!("{alpha}").replace('-', "m")
}

impl Report {
    pub fn new(command: &str, config: ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo::current(),
            command: command.to_owned(),
            seed: config.seed,
            config,
            phi_bar: None,
            experiments: Vec::new(),
            flow: None,
            failure: None,
            timings: Timings::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable") + "\n"
    }

    /// The report without its timings section, for determinism comparisons.
    pub fn deterministic_json(&self) -> String {
        strip_timings(&self.to_json())
    }

    pub fn write(&self, dir: &Path, format: OutputFormat) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> std::io::Result<()> {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        match format {
            OutputFormat::Json => put("report.json".into(), self.to_json())?,
            OutputFormat::Csv => {
                for e in &self.experiments {
                    for ladder in [&e.ladder, &e.half_ladder].into_iter().flatten() {
                        put(format!("ladder_alpha_{}.csv", alpha_tag(ladder.alpha())), ladder.to_csv())?;
                    }
                    if let Some(c) = &e.cover {
                        put(format!("cover_alpha_{}.csv", alpha_tag(e.alpha)), c.to_csv())?;
                    }
                }
            }
        }
        Ok(written)
    }
}

/// Removes the top-level `timings` member from a serialized report.
pub fn strip_timings(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).expect("valid report JSON");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timings");
    }
    serde_json::to_string_pretty(&v).expect("JSON value serializes")
}
