//! Re-runs a stopping criterion over a recorded `trace.csv` without
//! touching the simulator. The trace carries U, A, and coverage per step,
//! so task-driven, temporal, and coverage criteria replay exactly; the
//! frontier-absence criterion needs the live exploration signal, which a
//! trace does not record, and is rejected up front.

use std::path::Path;

use aslam_core::stopping::{CriterionSpec, CriterionState, Decision, MetricSample};
use aslam_core::{Error, Result};

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    /// First stop decision: `(step, wall_time)`; `None` if the criterion
    /// never fires over the trace.
    pub trigger: Option<(usize, f64)>,
    pub steps: usize,
    /// When the trace already has a decision column for this criterion:
    /// whether the replayed decisions match it row for row.
    pub matches_recorded: Option<bool>,
}

pub fn replay_trace(path: &Path, spec: &CriterionSpec) -> Result<ReplayOutcome> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    replay_str(&text, spec)
}

pub fn replay_str(text: &str, spec: &CriterionSpec) -> Result<ReplayOutcome> {
    spec.validate()?;
    // has_ground_truth: coverage was recorded, so the privileged
    // denominator is in the data. has_frontier_signal: never in a trace.
    spec.validate_available(true, false)?;

    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty trace".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Parse(format!("trace has no `{name}` column")))
    };
    let c_step = col("step")?;
    let c_time = col("wall_time")?;
    let c_u = col("U")?;
    let c_a = col("A")?;
    let c_cov = col("coverage")?;
    let recorded_col = cols.iter().position(|c| *c == format!("{}:decision", spec.label()));

    let mut state = CriterionState::new(spec.clone())?;
    // Same convention the live run uses: the first row's deltas compare
    // against an empty-start baseline.
    let mut prev = MetricSample {
        step: 0,
        wall_time: 0.0,
        u: 0.0,
        a: 0.0,
        coverage: 0.0,
        frontier_exhausted: false,
    };
    let mut trigger = None;
    let mut steps = 0;
    let mut matches_recorded = recorded_col.map(|_| true);

    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let lineno = idx + 2;
        let num = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::Parse(format!("trace line {lineno}: bad field {i}")))
        };
        let sample = MetricSample {
            step: num(c_step)? as usize,
            wall_time: num(c_time)?,
            u: num(c_u)?,
            a: num(c_a)?,
            coverage: num(c_cov)?,
            frontier_exhausted: false,
        };
        let decision = state.update(&sample, &prev)?;
        if decision == Decision::Stop && trigger.is_none() {
            trigger = Some((sample.step, sample.wall_time));
        }
        if let (Some(ci), Some(ok)) = (recorded_col, matches_recorded.as_mut()) {
            let recorded = match fields.get(ci).map(|f| f.trim()) {
                Some("stop") => Decision::Stop,
                Some("continue") => Decision::Continue,
                other => {
                    return Err(Error::Parse(format!(
                        "trace line {lineno}: bad decision cell {other:?}"
                    )))
                }
            };
            *ok &= recorded == decision;
        }
        prev = sample;
        steps += 1;
    }
    Ok(ReplayOutcome { trigger, steps, matches_recorded })
}
