//! Stage wiring: space average, deviation ladders, rate fits, `d₀`, cover
//! ladder and verdict, then the lemma and flow checks.

use std::time::Instant;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::deviation::{estimate_deviation_ladders, fit_rate_function, FitWindow};
use crate::dimension::{
    besicovitch_eggleston_dimension, box_counting_dimension, build_cover_ladder, dimension_upper_bound,
    dprime_volume_series, verify_ball_lemma, DimensionReport,
};
use crate::error::{Error, Result};
use crate::flows::{
    default_quadrature_step, estimate_time_one_lipschitz, flow_nontypical_inclusion_check, flow_space_average,
    inclusion_min_horizon, integer_part_reduction_check, FlowObservable, SuspensionFlow,
};
use crate::observables::{modulus_delta, Observable, ObservableSpec};
use crate::report::{
    AlphaReport, FitOutcome, FlowHorizonSummary, FlowSummary, InclusionSummary, IntegerPartSummary, Report,
    StageFailure, StageTiming,
};
use crate::rng::{tags, SampleStream};
use crate::systems::{SpaceAverage, SpaceAverageBudget, SpaceAverageMethod, System, SystemSpec};

/// Which stages a command runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub ladders: bool,
    pub fits: bool,
    pub bound: bool,
    pub cover: bool,
    pub lemma: bool,
    pub flow: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    LdpFit,
    Dimension,
    Cover,
    Verify,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::LdpFit => "ldp-fit",
            Command::Dimension => "dimension",
            Command::Cover => "cover",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }

    pub fn stages(self) -> Stages {
        let none = Stages {
            ladders: false,
            fits: false,
            bound: false,
            cover: false,
            lemma: false,
            flow: false,
        };
        match self {
            Command::Simulate => Stages { ladders: true, ..none },
            Command::LdpFit => Stages {
                ladders: true,
                fits: true,
                ..none
            },
            Command::Dimension => Stages {
                ladders: true,
                fits: true,
                bound: true,
                ..none
            },
            Command::Cover => Stages {
                ladders: true,
                fits: true,
                bound: true,
                cover: true,
                ..none
            },
            Command::Verify => Stages {
                lemma: true,
                flow: true,
                ..none
            },
            Command::Report => Stages {
                ladders: true,
                fits: true,
                bound: true,
                cover: true,
                lemma: true,
                flow: true,
            },
        }
    }
}

/// A stage error, with everything computed before it.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub source: Error,
    pub partial: Box<Report>,
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineError {}

struct Runner {
    report: Report,
}

impl Runner {
    fn stage<T>(&mut self, name: &'static str, f: impl FnOnce(&mut Report) -> Result<T>) -> std::result::Result<T, PipelineError> {
        let start = Instant::now();
        let out = f(&mut self.report);
        self.report.timings.stages.push(StageTiming {
            stage: name.to_owned(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out.map_err(|source| {
            self.report.failure = Some(StageFailure {
                stage: name.to_owned(),
                message: source.to_string(),
            });
            PipelineError {
                stage: name,
                source,
                partial: Box::new(self.report.clone()),
            }
        })
    }
}

fn fit_outcome(ladder: &crate::deviation::DeviationLadder) -> FitOutcome {
    match fit_rate_function(ladder, FitWindow::Auto) {
        Ok(f) => FitOutcome::Fitted(f),
        Err(e) => FitOutcome::Failed { reason: e.to_string() },
    }
}

fn positive_rate(outcome: &Option<FitOutcome>) -> Option<f64> {
    outcome.as_ref().and_then(FitOutcome::fit).map(|f| f.h).filter(|h| *h > 0.0)
}

fn space_average(config: &ExperimentConfig, sys: &System, phi: &Observable) -> Result<SpaceAverage> {
    match config.phi_bar {
        Some(value) => Ok(SpaceAverage {
            value,
            std_error: 0.0,
            method: SpaceAverageMethod::Supplied,
        }),
        None => sys.srb_space_average(phi, &SpaceAverageBudget::default()),
    }
}

/// The binary digit-frequency oracle applies to the doubling map with the
/// first-digit observable.
fn oracle_dimension(config: &ExperimentConfig, alpha: f64) -> Option<crate::dimension::BesicovitchEggleston> {
    let applies = config.system == SystemSpec::Doubling && config.observable == ObservableSpec::Digit;
    applies.then(|| besicovitch_eggleston_dimension(alpha).ok()).flatten()
}

/// Runs the stages of `command` on `config`. Deterministic given the config:
/// every parallel reduction is order-fixed.
pub fn run_pipeline(config: &ExperimentConfig, command: Command) -> std::result::Result<Report, PipelineError> {
    let stages = command.stages();
    let mut run = Runner {
        report: Report::new(command.name(), config.clone()),
    };
    let (sys, phi) = run.stage("setup", |_| {
        config.validate()?;
        let sys = config.build_system()?;
        let phi = config.build_observable(&sys)?;
        Ok((sys, phi))
    })?;
    let phi_bar = run.stage("space-average", |r| {
        let avg = space_average(config, &sys, &phi)?;
        let v = avg.value;
        r.phi_bar = Some(avg);
        Ok(v)
    })?;
    run.report.experiments = config.alphas.iter().map(|&a| AlphaReport::new(a)).collect();

    if stages.ladders {
        run.stage("deviation-ladders", |r| {
            let mut thresholds = Vec::with_capacity(2 * config.alphas.len());
            for &a in &config.alphas {
                thresholds.push(a);
                thresholds.push(0.5 * a);
            }
            let ns = config.ladder.values();
            let mut ladders =
                estimate_deviation_ladders(&sys, &phi, phi_bar, &thresholds, &ns, config.sample_count, config.seed)?
                    .into_iter();
            for e in &mut r.experiments {
                e.ladder = ladders.next();
                e.half_ladder = ladders.next();
            }
            Ok(())
        })?;
    }

    if stages.fits {
        run.stage("rate-fit", |r| {
            for e in &mut r.experiments {
                e.fit = e.ladder.as_ref().map(fit_outcome);
                e.half_fit = e.half_ladder.as_ref().map(fit_outcome);
            }
            Ok(())
        })?;
    }

    if stages.cover {
        run.stage("cover", |r| {
            let Some(cover) = &config.cover else {
                for e in &mut r.experiments {
                    e.skipped.push("cover: no [cover] section in the config".into());
                }
                return Ok(());
            };
            for e in &mut r.experiments {
                if !phi.is_continuous() {
                    e.skipped.push(format!("cover: observable `{}` is not Lipschitz", phi.id()));
                    continue;
                }
                let delta = match cover.delta {
                    Some(d) => d,
                    None => modulus_delta(&phi, e.alpha, sys.diameter())?,
                };
                e.delta = Some(delta);
                let d0 = positive_rate(&e.half_fit).and_then(|h| dimension_upper_bound(sys.dim(), sys.big_l(), h).ok());
                let dprimes: Vec<f64> = match d0 {
                    Some(d0) => cover.dprime_offsets.iter().map(|o| d0 + o).collect(),
                    None => Vec::new(),
                };
                let ns = cover.n.values();
                let ladder =
                    build_cover_ladder(&sys, &phi, phi_bar, e.alpha, delta, &ns, &dprimes, cover.grid_budget)?;
                e.series = dprimes
                    .iter()
                    .map(|&d| dprime_volume_series(&ladder, d, cover.n.min))
                    .collect();
                e.cover = Some(ladder);
            }
            Ok(())
        })?;
    }

    if stages.bound {
        run.stage("dimension", |r| {
            for e in &mut r.experiments {
                e.oracle = oracle_dimension(config, e.alpha);
                let box_dim = e.cover.as_ref().and_then(|c| match box_counting_dimension(&c.box_counts()) {
                    Ok(b) => Some(b),
                    Err(err) => {
                        e.box_dimension_error = Some(err.to_string());
                        None
                    }
                });
                e.dimension = Some(DimensionReport::new(
                    &sys,
                    positive_rate(&e.half_fit),
                    positive_rate(&e.fit),
                    box_dim,
                    e.oracle.as_ref().map(|o| o.dimension),
                ));
            }
            Ok(())
        })?;
    }

    if stages.lemma {
        run.stage("lemma", |r| {
            let Some(lemma) = &config.lemma else {
                for e in &mut r.experiments {
                    e.skipped.push("lemma: no [lemma] section in the config".into());
                }
                return Ok(());
            };
            for e in &mut r.experiments {
                if !phi.is_continuous() {
                    e.skipped.push(format!("lemma: observable `{}` is not Lipschitz", phi.id()));
                    continue;
                }
                let delta = match config.cover.as_ref().and_then(|c| c.delta) {
                    Some(d) => d,
                    None => modulus_delta(&phi, e.alpha, sys.diameter())?,
                };
                e.delta = Some(delta);
                e.lemma = Some(verify_ball_lemma(
                    &sys,
                    &phi,
                    phi_bar,
                    e.alpha,
                    delta,
                    lemma.n,
                    lemma.pairs,
                    config.seed,
                )?);
            }
            Ok(())
        })?;
    }

    if stages.flow {
        if let Some(flow_cfg) = &config.flow {
            run.stage("flow", |r| {
                let flow = SuspensionFlow::new(sys.clone(), flow_cfg.roof.clone())?;
                let fphi = FlowObservable {
                    base: phi.clone(),
                    fiber_amplitude: flow_cfg.fiber_amplitude,
                };
                let flow_bar = flow_space_average(&flow, &fphi, &SpaceAverageBudget::default())?;
                let step = default_quadrature_step(&flow);
                let stream = SampleStream::new(config.seed, tags::FLOW);
                let states = (0..flow_cfg.samples as u64)
                    .map(|i| flow.sample_state(&stream, i))
                    .collect::<Result<Vec<_>>>()?;
                let mut horizons = Vec::with_capacity(flow_cfg.t_ladder.len());
                for &t in &flow_cfg.t_ladder {
                    horizons.push(flow_horizon(&flow, &fphi, flow_bar, &config.alphas, &states, t, step)?);
                }
                let pairs = flow_cfg.samples.max(1_000);
                r.flow = Some(FlowSummary {
                    roof: flow_cfg.roof.clone(),
                    fiber_amplitude: flow_cfg.fiber_amplitude,
                    phi_bar: flow_bar,
                    quadrature_step: step,
                    samples: flow_cfg.samples,
                    horizons,
                    time_one_lipschitz: estimate_time_one_lipschitz(&flow, pairs, 1e-8, config.seed)?,
                });
                Ok(())
            })?;
        }
    }
    Ok(run.report)
}

struct StateOutcome {
    integer_part: crate::flows::IntegerPartCheck,
    inclusion: Vec<Option<crate::flows::InclusionCheck>>,
}

fn flow_horizon(
    flow: &SuspensionFlow,
    phi: &FlowObservable,
    phi_bar: f64,
    alphas: &[f64],
    states: &[crate::flows::FlowState],
    t: f64,
    step: f64,
) -> Result<FlowHorizonSummary> {
    let outcomes: Vec<StateOutcome> = states
        .par_iter()
        .map(|&st| {
            let integer_part = integer_part_reduction_check(flow, phi, st, t, step)?;
            let inclusion = alphas
                .iter()
                .map(|&a| {
                    if t >= inclusion_min_horizon(phi, a) {
                        flow_nontypical_inclusion_check(flow, phi, phi_bar, a, st, t, step).map(Some)
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(StateOutcome { integer_part, inclusion })
        })
        .collect::<Result<_>>()?;

    let count = outcomes.len() as f64;
    let integer_part = IntegerPartSummary {
        max_lhs: outcomes.iter().map(|o| o.integer_part.lhs).fold(0.0, f64::max),
        bound: outcomes.first().map_or(0.0, |o| o.integer_part.bound),
        failures: outcomes.iter().filter(|o| !o.integer_part.ok).count(),
        naive_bound_exceeded: outcomes.iter().filter(|o| !o.integer_part.within_naive_bound).count(),
    };
    let mut deviation_fraction = Vec::with_capacity(alphas.len());
    let mut inclusion = Vec::with_capacity(alphas.len());
    for (k, &alpha) in alphas.iter().enumerate() {
        let checks: Vec<_> = outcomes.iter().filter_map(|o| o.inclusion[k]).collect();
        let admissible = !checks.is_empty();
        let in_set = checks.iter().filter(|c| c.in_flow_set).count();
        // below the admissible horizon the deviation is computed directly
        let fraction = if admissible {
            in_set as f64 / count
        } else {
            states
                .iter()
                .map(|&st| crate::flows::flow_time_average(flow, phi, st, t, step))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|v| (v - phi_bar).abs() >= alpha)
                .count() as f64
                / count
        };
        deviation_fraction.push(fraction);
        inclusion.push(InclusionSummary {
            alpha,
            admissible,
            in_flow_set: in_set,
            failures: checks.iter().filter(|c| !c.holds).count(),
        });
    }
    Ok(FlowHorizonSummary {
        t,
        deviation_fraction,
        integer_part,
        inclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::Verdict;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    const SMALL: &str = r#"
alphas = [0.6]
seed = 7
sample_count = 20000

[system]
id = "doubling"

[observable]
id = "cos1"

[ladder]
min = 1
max = 24

[cover]
n = { min = 6, max = 14 }

[lemma]
n = 8
pairs = 500

[flow]
roof = { kind = "cosine", a = 0.2 }
t_ladder = [10.0, 30.5]
samples = 200
"#;

    #[test]
    fn small_report_runs_every_stage() {
        let r = run_pipeline(&config(SMALL), Command::Report).unwrap();
        let e = &r.experiments[0];
        assert!(e.ladder.is_some() && e.half_ladder.is_some());
        assert!(matches!(e.half_fit, Some(FitOutcome::Fitted(_))));
        assert_eq!(e.cover.as_ref().unwrap().entries.len(), 9);
        assert_eq!(e.series.len(), 1);
        assert_eq!(e.lemma.as_ref().unwrap().violations, 0);
        let flow = r.flow.as_ref().unwrap();
        assert_eq!(flow.horizons.len(), 2);
        assert!(flow.horizons.iter().all(|h| h.integer_part.failures == 0));
        assert!(flow.horizons.iter().all(|h| h.inclusion.iter().all(|i| i.failures == 0)));
        assert_ne!(e.dimension.as_ref().unwrap().verdict, Verdict::BoundViolated);
        let stages: Vec<&str> = r.timings.stages.iter().map(|s| s.stage.as_str()).collect();
        assert_eq!(stages, ["setup", "space-average", "deviation-ladders", "rate-fit", "cover", "dimension", "lemma", "flow"]);
    }

    #[test]
    fn threshold_above_range_is_inconclusive() {
        let cfg = config(&SMALL.replace("alphas = [0.6]", "alphas = [2.5]"));
        let r = run_pipeline(&cfg, Command::Cover).unwrap();
        let e = &r.experiments[0];
        assert!(e.ladder.as_ref().unwrap().entries().iter().all(|x| x.measure == 0.0));
        assert!(e.cover.as_ref().unwrap().entries.iter().all(|x| x.card == 0));
        assert_eq!(e.dimension.as_ref().unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn stage_failure_keeps_partial_report() {
        let cfg = config(&SMALL.replace("n = { min = 6, max = 14 }", "n = { min = 6, max = 14 }\ngrid_budget = 10"));
        let err = run_pipeline(&cfg, Command::Cover).unwrap_err();
        assert_eq!(err.stage, "cover");
        assert!(matches!(err.source, Error::GridBudget { .. }));
        assert!(err.partial.experiments[0].half_fit.is_some());
        assert_eq!(err.partial.failure.as_ref().unwrap().stage, "cover");
    }

    #[test]
    fn simulate_only_builds_ladders() {
        let r = run_pipeline(&config(SMALL), Command::Simulate).unwrap();
        let e = &r.experiments[0];
        assert!(e.ladder.is_some() && e.fit.is_none() && e.cover.is_none() && r.flow.is_none());
    }

    #[test]
    fn digit_observable_gets_the_oracle() {
        let text = SMALL
            .replace("id = \"cos1\"", "id = \"digit\"")
            .replace("alphas = [0.6]", "alphas = [0.2]");
        let r = run_pipeline(&config(&text), Command::Report).unwrap();
        let e = &r.experiments[0];
        assert!(e.cover.is_none() && e.lemma.is_none());
        assert_eq!(e.skipped.len(), 2);
        let dim = e.dimension.as_ref().unwrap();
        assert!(dim.oracle_dim.is_some());
        assert_eq!(dim.verdict, Verdict::BoundHolds);
    }
}
