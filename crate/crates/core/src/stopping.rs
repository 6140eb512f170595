//! Stopping criteria over the per-step metric stream.
//!
//! Four criteria run concurrently against the same samples. The task-driven
//! rule watches the percentage increments of graph quality and known area:
//! once their combined increment Γ stays below a threshold for a full
//! window of consecutive steps, the task has stopped paying for itself.
//! The temporal, coverage, and frontier-absence rules are the conventional
//! baselines it is compared against. Criteria never halt anything on their
//! own: each one just records the first step at which it would have
//! stopped, and the driver decides what actually ends the run.
//!
//! Coverage needs ground truth (a real robot has no denominator for it),
//! and a recorded trace carries no frontier signal; the availability check
//! makes both limits explicit at configuration time.

use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Values this close to zero are treated as zero when forming percentage
/// deltas.
pub const NEAR_ZERO: f64 = 1e-12;

/// Percentage deltas saturate here; growth from an almost-empty baseline is
/// "large", not infinite.
pub const DELTA_SATURATION: f64 = 1000.0;

pub const DEFAULT_GAMMA_THRESHOLD: f64 = 2.0;
pub const DEFAULT_WINDOW: usize = 3;

/// Everything the criteria consume about one active-SLAM step.
#[derive(Debug, Clone, Copy)]
pub struct MetricSample {
    pub step: usize,
    /// Simulated seconds since the run began.
    pub wall_time: f64,
    /// Graph quality: spanning-tree D-optimality of the pose graph.
    pub u: f64,
    /// Known map area, m².
    pub a: f64,
    /// Percent of the observable world currently known (privileged).
    pub coverage: f64,
    /// True when the last step found no reachable frontier.
    pub frontier_exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

/// Criterion flavor plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriterionSpec {
    TaskDriven { gamma_th: f64, window: usize },
    Temporal { budget: f64 },
    Coverage { target: f64 },
    FrontierAbsence,
}

impl CriterionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CriterionSpec::TaskDriven { gamma_th, window } => {
                if !gamma_th.is_finite() || gamma_th <= 0.0 {
                    return Err(Error::Config(format!(
                        "task-driven threshold must be a positive percentage, got {gamma_th}"
                    )));
                }
                if window == 0 {
                    return Err(Error::Config("task-driven window must be at least 1".into()));
                }
            }
            CriterionSpec::Temporal { budget } => {
                if !budget.is_finite() || budget < 0.0 {
                    return Err(Error::Config(format!("time budget must be ≥ 0 s, got {budget}")));
                }
            }
            CriterionSpec::Coverage { target } => {
                if !(0.0..=100.0).contains(&target) {
                    return Err(Error::Config(format!(
                        "coverage target must be within 0..=100 percent, got {target}"
                    )));
                }
            }
            CriterionSpec::FrontierAbsence => {}
        }
        Ok(())
    }

    /// Availability under the data actually at hand. Coverage compares
    /// against the observable world, which only a simulator (or a surveyed
    /// site) can provide; the frontier signal exists live but is not part
    /// of a recorded trace.
    pub fn validate_available(&self, has_ground_truth: bool, has_frontier_signal: bool) -> Result<()> {
        match self {
            CriterionSpec::Coverage { .. } if !has_ground_truth => Err(Error::Config(
                "coverage criterion needs ground truth for its denominator".into(),
            )),
            CriterionSpec::FrontierAbsence if !has_frontier_signal => Err(Error::Config(
                "frontier-absence criterion needs the live exploration signal".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Short form used in config files, CSV column headers, and summaries.
    pub fn label(&self) -> String {
        match *self {
            CriterionSpec::TaskDriven { gamma_th, window } => format!("task:{gamma_th}:{window}"),
            CriterionSpec::Temporal { budget } => format!("temporal:{budget}"),
            CriterionSpec::Coverage { target } => format!("coverage:{target}"),
            CriterionSpec::FrontierAbsence => "frontier".into(),
        }
    }
}

/// One criterion's evolving state across a run.
#[derive(Debug, Clone)]
pub struct CriterionState {
    spec: CriterionSpec,
    /// Last `window` Γ values (task-driven only).
    gamma_window: VecDeque<f64>,
    triggered_at: Option<usize>,
}

impl CriterionState {
    pub fn new(spec: CriterionSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, gamma_window: VecDeque::new(), triggered_at: None })
    }

    pub fn spec(&self) -> &CriterionSpec {
        &self.spec
    }

    /// Step at which this criterion first said stop, if it ever has. Frozen
    /// at the first trigger; later decisions cannot move it.
    pub fn triggered_at(&self) -> Option<usize> {
        self.triggered_at
    }

    fn record(&mut self, decision: Decision, step: usize) -> Decision {
        if decision == Decision::Stop && self.triggered_at.is_none() {
            self.triggered_at = Some(step);
        }
        decision
    }

    /// Task-driven update: push Γ for this step (increments relative to
    /// `prev`) and stop iff the window is full and every value sits below
    /// the threshold. A partially filled window never stops.
    pub fn update_task_driven(
        &mut self,
        sample: &MetricSample,
        prev: &MetricSample,
    ) -> Result<Decision> {
        let CriterionSpec::TaskDriven { gamma_th, window } = self.spec else {
            return Err(Error::Config("not a task-driven criterion".into()));
        };
        let du = delta_pct(prev.u, sample.u)?;
        let da = delta_pct(prev.a, sample.a)?;
        self.gamma_window.push_back(gamma(du, da));
        while self.gamma_window.len() > window {
            self.gamma_window.pop_front();
        }
        let stop = self.gamma_window.len() == window
            && self.gamma_window.iter().all(|&g| g < gamma_th);
        let decision = if stop { Decision::Stop } else { Decision::Continue };
        Ok(self.record(decision, sample.step))
    }

    /// Stop once the simulated clock reaches the budget.
    pub fn update_temporal(&mut self, sample: &MetricSample) -> Result<Decision> {
        let CriterionSpec::Temporal { budget } = self.spec else {
            return Err(Error::Config("not a temporal criterion".into()));
        };
        let decision =
            if sample.wall_time >= budget { Decision::Stop } else { Decision::Continue };
        Ok(self.record(decision, sample.step))
    }

    /// Stop once known coverage reaches the target percentage.
    pub fn update_coverage(&mut self, sample: &MetricSample) -> Result<Decision> {
        let CriterionSpec::Coverage { target } = self.spec else {
            return Err(Error::Config("not a coverage criterion".into()));
        };
        let decision =
            if sample.coverage >= target { Decision::Stop } else { Decision::Continue };
        Ok(self.record(decision, sample.step))
    }

    /// Stop when exploration reports no reachable frontier.
    pub fn update_frontier_absence(&mut self, sample: &MetricSample) -> Result<Decision> {
        let CriterionSpec::FrontierAbsence = self.spec else {
            return Err(Error::Config("not a frontier-absence criterion".into()));
        };
        let decision =
            if sample.frontier_exhausted { Decision::Stop } else { Decision::Continue };
        Ok(self.record(decision, sample.step))
    }

    /// Dispatches to the right update for this criterion's kind.
    pub fn update(&mut self, sample: &MetricSample, prev: &MetricSample) -> Result<Decision> {
        match self.spec {
            CriterionSpec::TaskDriven { .. } => self.update_task_driven(sample, prev),
            CriterionSpec::Temporal { .. } => self.update_temporal(sample),
            CriterionSpec::Coverage { .. } => self.update_coverage(sample),
            CriterionSpec::FrontierAbsence => self.update_frontier_absence(sample),
        }
    }
}

/// Percentage change from `prev` to `curr`, saturated at
/// ±[`DELTA_SATURATION`]. A near-zero baseline yields 0 when the value
/// stayed near zero and the positive saturation ceiling's tenth (+100)
/// when anything appeared from nothing.
pub fn delta_pct(prev: f64, curr: f64) -> Result<f64> {
    if !prev.is_finite() || !curr.is_finite() {
        return Err(Error::Domain(format!("delta_pct needs finite inputs, got ({prev}, {curr})")));
    }
    if prev.abs() < NEAR_ZERO {
        return Ok(if curr.abs() < NEAR_ZERO { 0.0 } else { 100.0 });
    }
    Ok((100.0 * (curr - prev) / prev.abs()).clamp(-DELTA_SATURATION, DELTA_SATURATION))
}

/// The combined increment Γ = ΔU + |ΔA|. The area delta enters by absolute
/// value: a loop closure that shrinks the fog-of-war estimate still counts
/// as change, so it cannot trip the stop.
pub fn gamma(du_pct: f64, da_pct: f64) -> f64 {
    du_pct + da_pct.abs()
}

/// Updates every criterion against the same sample, independently; returns
/// the decisions in criteria order. First-trigger steps accumulate inside
/// the states; the caller decides which criterion (if any) actually halts
/// the run.
pub fn evaluate_all(
    criteria: &mut [CriterionState],
    sample: &MetricSample,
    prev: &MetricSample,
) -> Result<Vec<Decision>> {
    criteria.iter_mut().map(|c| c.update(sample, prev)).collect()
}
