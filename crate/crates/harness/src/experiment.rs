//! Full exploration runs: sweep, frontier-driven steps, batched graph
//! optimization, per-step metric sampling, concurrent stopping criteria,
//! and the CSV artifacts a run leaves behind.
//!
//! One *step* is one frontier decision plus its execution. After the robot
//! runs out of frontiers the run is not over: criteria that have not fired
//! yet still need wall time and quiet metrics, so the robot drives back to
//! its start node once and then dwells in place. Every artifact embeds the
//! seed, and a fixed seed reproduces every file byte for byte.
//!
//! Per trial directory:
//! - `trace.csv`     step, wall_time, U, A, coverage, dU_pct, dA_pct, gamma,
//!   then one decision column per criterion
//! - `summary.csv`   one row per criterion: time, area, coverage, mRMSE,
//!   node count, mean degree, optimization count, D-opt, all frozen at the
//!   criterion's first trigger; `∞` and empty cells if it never fired
//! - `fig2.csv`      step, dU_pct, dA_pct
//! - `decisions.csv` every candidate of every evaluation round
//! - `graph_at_<criterion>.g2o` pose-graph export at each trigger
//!
//! With several trials, `summary_mean.csv` at the top level holds the
//! arithmetic mean over the trials in which each criterion fired.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use aslam_core::explore::{self, ExploreParams, StepOutcome};
use aslam_core::graph::EdgeKind;
use aslam_core::graph_io;
use aslam_core::se2::Pose2;
use aslam_core::slam::SlamState;
use aslam_core::stopping::{
    delta_pct, evaluate_all, gamma, CriterionState, Decision, MetricSample,
};
use aslam_core::{Error, Result};

use crate::config::ExperimentConfig;

/// Simulated seconds one dwell step burns once exploration is exhausted.
const DWELL_SECONDS: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub step: usize,
    pub wall_time: f64,
    pub u: f64,
    pub a: f64,
    pub coverage: f64,
    pub du_pct: f64,
    pub da_pct: f64,
    pub gamma: f64,
    /// Decisions in config criteria order.
    pub decisions: Vec<Decision>,
    /// Loop-closure edges added during this step (not a CSV column).
    pub closures: usize,
    /// Step ran in exhausted mode (not a CSV column).
    pub exhausted: bool,
}

/// Metric snapshot frozen at a criterion's first trigger; the run summary
/// table is one of these per criterion.
#[derive(Debug, Clone)]
pub struct CriterionRow {
    pub label: String,
    pub triggered_step: Option<usize>,
    pub time_s: f64,
    pub area_m2: f64,
    pub coverage_pct: f64,
    /// Worst map cell error; `None` while the estimated map has no
    /// occupied cell.
    pub mrmse_m: Option<f64>,
    pub nodes: usize,
    pub mean_degree: f64,
    pub opt_count: usize,
    pub dopt: f64,
}

impl CriterionRow {
    fn untriggered(label: String) -> Self {
        Self {
            label,
            triggered_step: None,
            time_s: f64::INFINITY,
            area_m2: 0.0,
            coverage_pct: 0.0,
            mrmse_m: None,
            nodes: 0,
            mean_degree: 0.0,
            opt_count: 0,
            dopt: 0.0,
        }
    }
}

#[derive(Debug)]
pub struct TrialResult {
    pub index: usize,
    pub seed: u64,
    pub steps_run: usize,
    /// First step that found no reachable frontier.
    pub exhausted_at: Option<usize>,
    pub rows: Vec<CriterionRow>,
    pub trace: Vec<TraceRow>,
    pub out_dir: PathBuf,
}

#[derive(Debug)]
pub struct RunSummary {
    pub trials: Vec<TrialResult>,
    /// Arithmetic mean over triggering trials, present when `trials > 1`.
    pub mean_rows: Option<Vec<CriterionRow>>,
}

impl RunSummary {
    /// Mean trigger step of the criterion with this label, over the trials
    /// in which it fired.
    pub fn mean_trigger_step(&self, label: &str) -> Option<f64> {
        let steps: Vec<f64> = self
            .trials
            .iter()
            .filter_map(|t| {
                t.rows
                    .iter()
                    .find(|r| r.label == label)
                    .and_then(|r| r.triggered_step)
                    .map(|s| s as f64)
            })
            .collect();
        if steps.is_empty() {
            None
        } else {
            Some(steps.iter().sum::<f64>() / steps.len() as f64)
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", cfg.out_dir.display())))?;

    let mut trials = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        trials.push(run_trial(cfg, t)?);
    }

    let mean_rows = (cfg.trials > 1).then(|| mean_over_trials(&trials));
    if let Some(rows) = &mean_rows {
        let path = cfg.out_dir.join("summary_mean.csv");
        let header = format!(
            "# seed={} trials={} world={}\n",
            cfg.seed,
            cfg.trials,
            cfg.world.describe()
        );
        write_file(&path, &(header + &summary_csv(rows)))?;
    }
    Ok(RunSummary { trials, mean_rows })
}

fn run_trial(cfg: &ExperimentConfig, index: usize) -> Result<TrialResult> {
    let seed = cfg.seed.wrapping_add(index as u64);
    let out_dir = cfg.out_dir.join(format!("trial_{index}"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out_dir.display())))?;

    let world = cfg.world.load()?;
    let start = match cfg.start {
        Some((x, y, theta)) => Pose2::new(x, y, theta),
        None => {
            let (w, h) = world.size_meters();
            let center = (world.origin().x + w / 2.0, world.origin().y + h / 2.0);
            let cell = world
                .nearest_free_cell(center.0, center.1)
                .ok_or_else(|| Error::Config("world has no free cell".into()))?;
            let (x, y) = world.center_of(cell.0, cell.1);
            Pose2::new(x, y, 0.0)
        }
    };
    let mut state = SlamState::new(world, cfg.sensor.clone(), cfg.motion.clone(), start, seed)?;
    let params: ExploreParams = cfg.explore.clone();

    let mut criteria: Vec<CriterionState> = cfg
        .criteria
        .iter()
        .map(|spec| CriterionState::new(spec.clone()))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = cfg.criteria.iter().map(|c| c.label()).collect();
    let mut rows: Vec<CriterionRow> =
        labels.iter().map(|l| CriterionRow::untriggered(l.clone())).collect();

    explore::initial_sweep(&mut state, &params)?;
    if state.closures_pending_optimize() > 0 {
        state.optimize()?;
    }

    // The first step's deltas compare against a nothing-yet baseline, so a
    // fresh map always reads as saturated growth rather than division noise.
    let mut prev = MetricSample {
        step: 0,
        wall_time: state.wall_time,
        u: 0.0,
        a: 0.0,
        coverage: 0.0,
        frontier_exhausted: false,
    };

    let mut trace: Vec<TraceRow> = Vec::new();
    let mut decision_log = String::from(
        "step,round,candidates,cluster,size,centroid_x,centroid_y,graph_term,area_term,utility,selected\n",
    );
    let mut exhausted_mode = false;
    let mut homed = false;
    let mut exhausted_at = None;
    let mut steps_run = 0;

    for step in 1..=cfg.step_cap {
        steps_run = step;
        let closures_before = closure_count(&state);

        if !exhausted_mode {
            match explore::select_and_execute(&mut state, &params)? {
                StepOutcome::Exhausted => {
                    exhausted_mode = true;
                    exhausted_at = Some(step);
                }
                StepOutcome::Executed(report) => {
                    for (round, eval) in report.rounds.iter().enumerate() {
                        for c in &eval.candidates {
                            writeln!(
                                decision_log,
                                "{step},{round},{},{},{},{},{},{},{},{},{}",
                                eval.candidates.len(),
                                c.cluster_index,
                                c.cluster_size,
                                c.centroid.0,
                                c.centroid.1,
                                c.graph_term,
                                c.area_term,
                                c.utility,
                                (c.cluster_index == eval.selected) as u8,
                            )
                            .expect("string write");
                        }
                    }
                }
            }
        }
        if exhausted_mode {
            if !homed {
                homed = true;
                let home = state.graph.pose(0)?;
                explore::drive_to(&mut state, (home.x, home.y), &params)?;
            } else {
                dwell(&mut state, &params);
            }
        }
        if state.closures_pending_optimize() > 0 {
            state.optimize()?;
        }

        let sample = MetricSample {
            step,
            wall_time: state.wall_time,
            u: state.dopt()?,
            a: state.known_area(),
            coverage: state.coverage(),
            frontier_exhausted: exhausted_mode,
        };
        let decisions = evaluate_all(&mut criteria, &sample, &prev)?;
        let du = delta_pct(prev.u, sample.u)?;
        let da = delta_pct(prev.a, sample.a)?;
        trace.push(TraceRow {
            step,
            wall_time: sample.wall_time,
            u: sample.u,
            a: sample.a,
            coverage: sample.coverage,
            du_pct: du,
            da_pct: da,
            gamma: gamma(du, da),
            decisions,
            closures: closure_count(&state) - closures_before,
            exhausted: exhausted_mode,
        });

        for (i, crit) in criteria.iter().enumerate() {
            if crit.triggered_at() == Some(step) {
                rows[i] = CriterionRow {
                    label: labels[i].clone(),
                    triggered_step: Some(step),
                    time_s: sample.wall_time,
                    area_m2: sample.a,
                    coverage_pct: sample.coverage,
                    mrmse_m: state.map_error().map(|(_, max)| max),
                    nodes: state.graph.node_count(),
                    mean_degree: state.graph.average_node_degree(),
                    opt_count: state.optimization_count,
                    dopt: sample.u,
                };
                let name = format!("graph_at_{}.g2o", labels[i].replace(':', "_"));
                graph_io::export_pose_graph(&state.graph, &out_dir.join(name))?;
            }
        }

        prev = sample;
        if criteria.iter().all(|c| c.triggered_at().is_some()) {
            break;
        }
    }

    let meta = format!(
        "# seed={seed} trial={index} world={}\n",
        cfg.world.describe()
    );
    write_file(&out_dir.join("trace.csv"), &(meta.clone() + &trace_csv(&trace, &labels)))?;
    write_file(&out_dir.join("summary.csv"), &(meta.clone() + &summary_csv(&rows)))?;
    write_file(&out_dir.join("fig2.csv"), &(meta.clone() + &fig2_csv(&trace)))?;
    write_file(&out_dir.join("decisions.csv"), &(meta + &decision_log))?;

    Ok(TrialResult { index, seed, steps_run, exhausted_at, rows, trace, out_dir })
}

fn closure_count(state: &SlamState) -> usize {
    state.graph.edges().iter().filter(|e| e.kind == EdgeKind::LoopClosure).count()
}

/// Burns wall time without moving: zero commands never reach the commit
/// thresholds, so the graph and map stay put and the deltas go quiet.
fn dwell(state: &mut SlamState, params: &ExploreParams) {
    let ticks = (DWELL_SECONDS / params.dt).round() as usize;
    for _ in 0..ticks {
        state.advance_true(0.0, 0.0, params.dt);
    }
}

fn trace_csv(trace: &[TraceRow], labels: &[String]) -> String {
    let mut out = String::from("step,wall_time,U,A,coverage,dU_pct,dA_pct,gamma");
    for l in labels {
        write!(out, ",{l}:decision").expect("string write");
    }
    out.push('\n');
    for r in trace {
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.step, r.wall_time, r.u, r.a, r.coverage, r.du_pct, r.da_pct, r.gamma
        )
        .expect("string write");
        for d in &r.decisions {
            out.push_str(match d {
                Decision::Stop => ",stop",
                Decision::Continue => ",continue",
            });
        }
        out.push('\n');
    }
    out
}

fn summary_csv(rows: &[CriterionRow]) -> String {
    let mut out = String::from("criterion,time_s,area_m2,coverage_pct,mrmse_m,n,d,opt_count,dopt_graph\n");
    for r in rows {
        if r.triggered_step.is_none() {
            // Never fired inside the step cap.
            writeln!(out, "{},∞,,,,,,,", r.label).expect("string write");
            continue;
        }
        let mrmse = r.mrmse_m.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{mrmse},{},{},{},{}",
            r.label, r.time_s, r.area_m2, r.coverage_pct, r.nodes, r.mean_degree, r.opt_count,
            r.dopt
        )
        .expect("string write");
    }
    out
}

fn fig2_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("step,dU_pct,dA_pct\n");
    for r in trace {
        writeln!(out, "{},{},{}", r.step, r.du_pct, r.da_pct).expect("string write");
    }
    out
}

/// Column-wise mean over the trials in which each criterion fired; a
/// criterion that fired nowhere keeps its `∞` row. `nodes` and `opt_count`
/// stay fractional in the mean, so the mean row reuses the nearest integer.
fn mean_over_trials(trials: &[TrialResult]) -> Vec<CriterionRow> {
    let labels: Vec<&String> = trials[0].rows.iter().map(|r| &r.label).collect();
    labels
        .iter()
        .map(|label| {
            let fired: Vec<&CriterionRow> = trials
                .iter()
                .filter_map(|t| {
                    t.rows.iter().find(|r| &r.label == *label && r.triggered_step.is_some())
                })
                .collect();
            if fired.is_empty() {
                return CriterionRow::untriggered((*label).clone());
            }
            let n = fired.len() as f64;
            let mean = |f: &dyn Fn(&CriterionRow) -> f64| fired.iter().map(|r| f(r)).sum::<f64>() / n;
            let mrmse: Vec<f64> = fired.iter().filter_map(|r| r.mrmse_m).collect();
            CriterionRow {
                label: (*label).clone(),
                triggered_step: Some(
                    mean(&|r| r.triggered_step.unwrap() as f64).round() as usize
                ),
                time_s: mean(&|r| r.time_s),
                area_m2: mean(&|r| r.area_m2),
                coverage_pct: mean(&|r| r.coverage_pct),
                mrmse_m: (!mrmse.is_empty())
                    .then(|| mrmse.iter().sum::<f64>() / mrmse.len() as f64),
                nodes: mean(&|r| r.nodes as f64).round() as usize,
                mean_degree: mean(&|r| r.mean_degree),
                opt_count: mean(&|r| r.opt_count as f64).round() as usize,
                dopt: mean(&|r| r.dopt),
            }
        })
        .collect()
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}
