//! The active-SLAM decision loop: find frontiers, score candidate goals,
//! drive to the winner.
//!
//! Each exploration step hallucinates what the pose graph would look like
//! after driving to a candidate frontier (an odometry chain along the
//! planned path, plus loop closures wherever the path brushes past old
//! nodes under maximum-likelihood measurements) and scores the candidate by
//! the graph's spanning-tree D-optimality together with the unknown area
//! the goal is expected to reveal. The two terms live on incomparable
//! scales, so ranking normalizes both over the candidate set before
//! blending; raw terms are kept for logging.

use crate::error::Result;
use crate::frontier::{detect_frontiers, FrontierCluster};
use crate::graph::{EdgeKind, PoseGraph};
use crate::grid::{CellState, OccupancyGrid};
use crate::optimality::dopt_graph;
use crate::planner::{plan_path, DEFAULT_ROBOT_RADIUS};
use crate::se2::{wrap_angle, Pose2};
use crate::sensor::{walk_ray, SensorModel};
use crate::slam::{closure_info, SlamState, LOOP_CLOSURE_MIN_INDEX_GAP, NODE_TRANSLATION_THRESHOLD};

/// Tuning knobs for candidate scoring and path execution. The defaults are
/// the configuration every experiment starts from.
#[derive(Debug, Clone)]
pub struct ExploreParams {
    /// Blend weight on the (normalized) expected-area term.
    pub alpha: f64,
    /// Radius for loop-closure detection and hallucination, meters.
    pub loop_radius: f64,
    /// Heading gate for closures; π accepts any relative yaw.
    pub yaw_gate: f64,
    /// Planning inflation radius, meters.
    pub robot_radius: f64,
    /// At most this many frontier clusters are scored per step.
    pub candidate_cap: usize,
    /// Pure-pursuit lookahead distance, meters.
    pub lookahead: f64,
    /// Arrival tolerance around the goal, meters.
    pub goal_tolerance: f64,
    /// Control tick, seconds.
    pub dt: f64,
    /// Ticks without path progress before the goal is abandoned.
    pub n_stuck: usize,
    /// Hard per-attempt tick cap, a backstop over the progress rule.
    pub max_ticks: usize,
}

impl Default for ExploreParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            loop_radius: 1.0,
            yaw_gate: std::f64::consts::PI,
            robot_radius: DEFAULT_ROBOT_RADIUS,
            candidate_cap: 10,
            lookahead: 0.4,
            goal_tolerance: 0.2,
            dt: 0.1,
            n_stuck: 150,
            max_ticks: 6000,
        }
    }
}

/// A scored frontier goal. `utility` is the normalized blend used for
/// ranking and is only comparable within one candidate set; `graph_term`
/// and `area_term` are the raw quantities.
#[derive(Debug, Clone)]
pub struct CandidateAction {
    /// Index into the step's cluster list (the declared tie-break key).
    pub cluster_index: usize,
    pub goal: (f64, f64),
    pub path: Vec<Pose2>,
    pub predicted_graph: PoseGraph,
    /// Spanning-tree D-optimality of the predicted graph.
    pub graph_term: f64,
    /// Expected newly visible unknown area, m².
    pub area_term: f64,
    pub utility: f64,
}

/// Raw (unnormalized) utility: the predicted graph quality plus α times
/// the expected newly revealed area.
pub fn blend(graph_term: f64, area_term: f64, alpha: f64) -> f64 {
    graph_term + alpha * area_term
}

/// Extends a copy of `graph` with the maximum-likelihood consequences of
/// driving `path`: a node every [`NODE_TRANSLATION_THRESHOLD`] of arc
/// length (odometry edges carrying the nominal motion information), plus a
/// loop-closure edge to the nearest old node within `loop_radius` and
/// `yaw_gate` for every hallucinated node, mirroring the detector's
/// index-gap and nearest-wins rules.
///
/// A path too short to seed a node (in particular the identity action)
/// returns an unmodified copy.
pub fn hallucinate_graph(
    graph: &PoseGraph,
    nominal_info: crate::graph::InfoMatrix3,
    path: &[Pose2],
    loop_radius: f64,
    yaw_gate: f64,
) -> Result<PoseGraph> {
    let mut predicted = graph.clone();
    if path.len() < 2 {
        return Ok(predicted);
    }

    // Sample hallucinated node poses along the path by accumulated arc
    // length. The endpoint is included when it is meaningfully beyond the
    // last sample, so short final segments do not spawn near-duplicate
    // nodes.
    let mut samples: Vec<Pose2> = Vec::new();
    let mut since_last = 0.0;
    for pair in path.windows(2) {
        let seg = (pair[1].x - pair[0].x).hypot(pair[1].y - pair[0].y);
        since_last += seg;
        if since_last >= NODE_TRANSLATION_THRESHOLD {
            samples.push(pair[1]);
            since_last = 0.0;
        }
    }
    if since_last >= NODE_TRANSLATION_THRESHOLD / 2.0 {
        samples.push(*path.last().unwrap());
    }

    let mut prev = predicted.node_count() - 1;
    let mut prev_pose = predicted.pose(prev)?;
    for sample in samples {
        let measurement = prev_pose.between(&sample);
        let id = predicted.add_node(sample, 0);
        predicted.add_edge(prev, id, measurement, nominal_info, EdgeKind::Odometry)?;

        // Mirror of the runtime closure rule: nearest candidate at least
        // the index gap back, ties to the lower id, at most one edge.
        let mut best: Option<(f64, usize)> = None;
        if id >= LOOP_CLOSURE_MIN_INDEX_GAP {
            for old in 0..=id - LOOP_CLOSURE_MIN_INDEX_GAP {
                let old_pose = predicted.pose(old)?;
                let d = old_pose.distance(&sample);
                if d > loop_radius {
                    continue;
                }
                if wrap_angle(old_pose.theta - sample.theta).abs() > yaw_gate {
                    continue;
                }
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, old));
                }
            }
        }
        if let Some((_, old)) = best {
            let rel = predicted.pose(old)?.between(&sample);
            predicted.add_edge(old, id, rel, closure_info(), EdgeKind::LoopClosure)?;
        }

        prev = id;
        prev_pose = sample;
    }
    Ok(predicted)
}

/// Counts unknown cells a scan from `from` could reveal: rays at the
/// sensor's angular density over the full circle (the robot is free to turn
/// on arrival), stopped by known-occupied cells, counting each unknown cell
/// once. Optimistic about what lies behind the unknown, which is fine for a
/// ranking proxy.
pub fn expected_visible_cells(
    map: &OccupancyGrid,
    sensor: &SensorModel,
    from: (f64, f64),
) -> usize {
    let rays = (std::f64::consts::TAU / sensor.fov * sensor.beams as f64).ceil() as usize;
    let (w, h) = (map.width(), map.height());
    let origin = map.origin();
    let mut seen = vec![false; w * h];
    let mut count = 0usize;
    for i in 0..rays {
        let angle = std::f64::consts::TAU * (i as f64 + 0.5) / rays as f64;
        walk_ray(
            map.resolution(),
            (origin.x, origin.y),
            w,
            h,
            from,
            angle,
            sensor.range,
            |ix, iy, _| match map.state(ix, iy) {
                CellState::Occupied => false,
                CellState::Unknown => {
                    if !seen[iy * w + ix] {
                        seen[iy * w + ix] = true;
                        count += 1;
                    }
                    true
                }
                CellState::Free => true,
            },
        );
    }
    count
}

/// Builds the scored candidate for one cluster, raw terms only; `utility`
/// is left NaN until [`rank_candidates`] fills it in.
pub fn evaluate_candidate(
    state: &SlamState,
    cluster_index: usize,
    cluster: &FrontierCluster,
    path: Vec<Pose2>,
    params: &ExploreParams,
) -> Result<CandidateAction> {
    let predicted = hallucinate_graph(
        &state.graph,
        state.motion.info_matrix(),
        &path,
        params.loop_radius,
        params.yaw_gate,
    )?;
    let graph_term = dopt_graph(&predicted)?;
    let cells = expected_visible_cells(&state.map, &state.sensor, cluster.centroid);
    let area_term = cells as f64 * state.map.resolution().powi(2);
    Ok(CandidateAction {
        cluster_index,
        goal: cluster.centroid,
        path,
        predicted_graph: predicted,
        graph_term,
        area_term,
        utility: f64::NAN,
    })
}

/// Min-max normalizes both terms over the set and writes the blended
/// utility. A term with no spread contributes nothing (every candidate gets
/// zero for it), which leaves the argmax unchanged.
pub fn rank_candidates(candidates: &mut [CandidateAction], alpha: f64) {
    fn normalized(values: Vec<f64>) -> Vec<f64> {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-15 {
            return vec![0.0; values.len()];
        }
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    }
    let g = normalized(candidates.iter().map(|c| c.graph_term).collect());
    let a = normalized(candidates.iter().map(|c| c.area_term).collect());
    for (i, c) in candidates.iter_mut().enumerate() {
        c.utility = g[i] + alpha * a[i];
    }
}

/// Index of the highest-utility candidate; exact ties go to the lower
/// cluster index. None only for an empty set.
pub fn argmax_candidate(candidates: &[CandidateAction]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                c.utility > candidates[b].utility
                    || (c.utility == candidates[b].utility
                        && c.cluster_index < candidates[b].cluster_index)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// One candidate's numbers as logged in the per-step decision record.
#[derive(Debug, Clone)]
pub struct CandidateSummary {
    pub cluster_index: usize,
    pub cluster_size: usize,
    pub centroid: (f64, f64),
    pub graph_term: f64,
    pub area_term: f64,
    pub utility: f64,
}

/// One evaluation round: the candidates scored together and which of them
/// was selected. A step holds several rounds when goals get abandoned.
#[derive(Debug, Clone)]
pub struct EvaluationRound {
    pub candidates: Vec<CandidateSummary>,
    /// cluster_index of the selected candidate.
    pub selected: usize,
}

/// What one active-SLAM step did.
#[derive(Debug)]
pub enum StepOutcome {
    /// No frontier clusters, or none of them reachable: exploration is done.
    Exhausted,
    Executed(StepReport),
}

#[derive(Debug)]
pub struct StepReport {
    /// Cluster index of the goal the step ended on.
    pub selected_cluster: usize,
    pub goal: (f64, f64),
    /// False when every attempted goal was abandoned.
    pub reached: bool,
    /// Goals attempted (1 unless earlier ones were abandoned).
    pub attempts: usize,
    pub ticks: usize,
    pub rounds: Vec<EvaluationRound>,
}

enum AttemptOutcome {
    Reached { ticks: usize },
    Abandoned { ticks: usize },
}

/// Runs one active-SLAM step: detect frontiers, score the up-to-`cap`
/// largest, drive the argmax goal. An abandoned goal (no path progress for
/// `n_stuck` ticks) is blacklisted and the remaining candidates are
/// re-scored from wherever the robot ended up. The step finishes when a
/// goal is reached or every candidate has been dropped.
pub fn select_and_execute(state: &mut SlamState, params: &ExploreParams) -> Result<StepOutcome> {
    let clusters: Vec<FrontierCluster> = detect_frontiers(&state.map)
        .into_iter()
        .take(params.candidate_cap)
        .collect();
    if clusters.is_empty() {
        return Ok(StepOutcome::Exhausted);
    }

    let mut blacklist = vec![false; clusters.len()];
    let mut rounds = Vec::new();
    let mut attempts = 0usize;
    let mut ticks = 0usize;
    let mut last_goal: Option<(usize, (f64, f64))> = None;

    loop {
        let estimate = state.current_estimate();
        let mut candidates = Vec::new();
        if let Some(plan_start) = plannable_start(&state.map, estimate, params.robot_radius) {
            for (i, cluster) in clusters.iter().enumerate() {
                if blacklist[i] {
                    continue;
                }
                // Drive target is the cluster anchor: the centroid of a curved
                // cluster can sit in already explored space (or a wall), while
                // the anchor is always on the frontier itself.
                let Some(path) =
                    plan_path(&state.map, plan_start, cluster.anchor, params.robot_radius)?
                else {
                    continue;
                };
                candidates.push(evaluate_candidate(state, i, cluster, path, params)?);
            }
        }
        if candidates.is_empty() {
            return Ok(match last_goal {
                None => StepOutcome::Exhausted,
                Some((cluster, goal)) => StepOutcome::Executed(StepReport {
                    selected_cluster: cluster,
                    goal,
                    reached: false,
                    attempts,
                    ticks,
                    rounds,
                }),
            });
        }

        rank_candidates(&mut candidates, params.alpha);
        let best = argmax_candidate(&candidates).expect("non-empty candidate set");
        rounds.push(EvaluationRound {
            candidates: candidates
                .iter()
                .map(|c| CandidateSummary {
                    cluster_index: c.cluster_index,
                    cluster_size: clusters[c.cluster_index].size,
                    centroid: c.goal,
                    graph_term: c.graph_term,
                    area_term: c.area_term,
                    utility: c.utility,
                })
                .collect(),
            selected: candidates[best].cluster_index,
        });

        let chosen = &candidates[best];
        last_goal = Some((chosen.cluster_index, chosen.goal));
        attempts += 1;
        match drive_path(state, &chosen.path, params)? {
            AttemptOutcome::Reached { ticks: t } => {
                ticks += t;
                return Ok(StepOutcome::Executed(StepReport {
                    selected_cluster: chosen.cluster_index,
                    goal: chosen.goal,
                    reached: true,
                    attempts,
                    ticks,
                    rounds,
                }));
            }
            AttemptOutcome::Abandoned { ticks: t } => {
                ticks += t;
                blacklist[chosen.cluster_index] = true;
            }
        }
    }
}

/// Plans to an arbitrary point and follows the path; `false` when no plan
/// exists or the follower gave up. Used for goals that are not frontier
/// driven, such as returning to the start once the map is exhausted.
pub fn drive_to(state: &mut SlamState, goal: (f64, f64), params: &ExploreParams) -> Result<bool> {
    let estimate = state.current_estimate();
    let Some(start) = plannable_start(&state.map, estimate, params.robot_radius) else {
        return Ok(false);
    };
    let Some(path) = plan_path(&state.map, start, goal, params.robot_radius)? else {
        return Ok(false);
    };
    Ok(matches!(drive_path(state, &path, params)?, AttemptOutcome::Reached { .. }))
}

/// A noisy estimate can sit inside a wall or fog cell while the real robot
/// stands in open space, and the planner refuses to start there. Shifts the
/// plan start to the nearest known-free cell center, searching a couple of
/// robot diameters out; `None` when the map is wrong beyond that.
fn plannable_start(map: &OccupancyGrid, estimate: Pose2, robot_radius: f64) -> Option<Pose2> {
    let (cx, cy) = map.cell_of(estimate.x, estimate.y)?;
    if map.state(cx, cy) == CellState::Free {
        return Some(estimate);
    }
    let reach = (4.0 * robot_radius / map.resolution()).ceil() as i64;
    let mut best: Option<(f64, usize, usize)> = None;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let nx = cx as i64 + dx;
            let ny = cy as i64 + dy;
            if nx < 0 || ny < 0 || nx >= map.width() as i64 || ny >= map.height() as i64 {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if map.state(nx, ny) != CellState::Free {
                continue;
            }
            let (px, py) = map.center_of(nx, ny);
            let d2 = (px - estimate.x).powi(2) + (py - estimate.y).powi(2);
            let candidate = (d2, ny, nx);
            if best.map_or(true, |b| candidate < b) {
                best = Some(candidate);
            }
        }
    }
    best.map(|(_, ny, nx)| {
        let (x, y) = map.center_of(nx, ny);
        Pose2::new(x, y, estimate.theta)
    })
}

/// Spins the robot through a full revolution, committing nodes and scanning
/// as the rotation threshold trips. This is how a run bootstraps a nonempty
/// map before the first frontier decision.
pub fn initial_sweep(state: &mut SlamState, params: &ExploreParams) -> Result<()> {
    let mut turned = 0.0;
    let omega = state.motion.omega_max;
    while turned < std::f64::consts::TAU {
        state.advance_true(0.0, omega, params.dt);
        turned += omega * params.dt;
        commit_if_due(state, params)?;
    }
    // Final partial-segment commit so the sweep always ends on a scan.
    let pending = state.pending_motion();
    if pending.translation_norm() > 1e-9 || pending.theta.abs() > 1e-9 {
        state.commit_node()?;
        state.raycast_and_update()?;
        state.detect_loop_closure(params.loop_radius, params.yaw_gate)?;
    }
    Ok(())
}

fn commit_if_due(state: &mut SlamState, params: &ExploreParams) -> Result<()> {
    if state.due_for_commit() {
        state.commit_node()?;
        state.raycast_and_update()?;
        state.detect_loop_closure(params.loop_radius, params.yaw_gate)?;
    }
    Ok(())
}

/// Pure-pursuit follower. Progress is the shrinking of remaining path
/// length; `n_stuck` ticks without a centimeter of progress abandons the
/// attempt (walls the map does not know about, oscillation, clamped turns).
fn drive_path(state: &mut SlamState, path: &[Pose2], params: &ExploreParams) -> Result<AttemptOutcome> {
    const TURN_IN_PLACE: f64 = 0.7;
    const PROGRESS_EPS: f64 = 0.01;

    let goal = *path.last().expect("paths are non-empty");
    let mut cum = vec![0.0f64; path.len()];
    for i in 1..path.len() {
        cum[i] = cum[i - 1] + (path[i].x - path[i - 1].x).hypot(path[i].y - path[i - 1].y);
    }

    let mut nearest = 0usize;
    let mut best_remaining = f64::INFINITY;
    let mut stuck = 0usize;

    for tick in 0..params.max_ticks {
        let est = state.current_estimate();
        if (est.x - goal.x).hypot(est.y - goal.y) <= params.goal_tolerance {
            arrival_commit(state, params)?;
            return Ok(AttemptOutcome::Reached { ticks: tick });
        }

        // Monotone advance of the nearest-waypoint index.
        while nearest + 1 < path.len() {
            let here = (path[nearest].x - est.x).hypot(path[nearest].y - est.y);
            let next = (path[nearest + 1].x - est.x).hypot(path[nearest + 1].y - est.y);
            if next <= here {
                nearest += 1;
            } else {
                break;
            }
        }

        let remaining =
            cum[path.len() - 1] - cum[nearest] + (path[nearest].x - est.x).hypot(path[nearest].y - est.y);
        if best_remaining - remaining >= PROGRESS_EPS {
            best_remaining = remaining;
            stuck = 0;
        } else {
            stuck += 1;
            if stuck >= params.n_stuck {
                return Ok(AttemptOutcome::Abandoned { ticks: tick });
            }
        }

        // Lookahead target: first waypoint far enough along the path.
        let mut target = goal;
        for j in nearest..path.len() {
            if cum[j] - cum[nearest] >= params.lookahead {
                target = path[j];
                break;
            }
        }

        let heading_err = wrap_angle((target.y - est.y).atan2(target.x - est.x) - est.theta);
        let (v, omega) = if heading_err.abs() > TURN_IN_PLACE {
            (0.0, state.motion.omega_max * heading_err.signum())
        } else {
            let ld = (target.x - est.x).hypot(target.y - est.y).max(1e-6);
            let v = state.motion.v_max * (1.0 - 0.5 * heading_err.abs() / TURN_IN_PLACE);
            (v, 2.0 * v * heading_err.sin() / ld)
        };
        state.advance_true(v, omega, params.dt);
        commit_if_due(state, params)?;
    }
    Ok(AttemptOutcome::Abandoned { ticks: params.max_ticks })
}

/// Commit at arrival so the goal pose gets a node and a scan; skipped when
/// the robot has barely moved since the last node.
fn arrival_commit(state: &mut SlamState, params: &ExploreParams) -> Result<()> {
    let pending = state.pending_motion();
    if pending.translation_norm() > 0.01 || pending.theta.abs() > 0.01 {
        state.commit_node()?;
        state.raycast_and_update()?;
        state.detect_loop_closure(params.loop_radius, params.yaw_gate)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slam::MotionModel;
    use crate::world::WorldModel;

    fn chain_graph(n: usize, spacing: f64) -> PoseGraph {
        let motion = MotionModel::default();
        let mut graph = PoseGraph::new();
        graph.add_node(Pose2::new(0.0, 0.0, 0.0), 0);
        for i in 1..n {
            let pose = Pose2::new(spacing * i as f64, 0.0, 0.0);
            graph.add_node(pose, i);
            graph
                .add_edge(
                    i - 1,
                    i,
                    Pose2::new(spacing, 0.0, 0.0),
                    motion.info_matrix(),
                    EdgeKind::Odometry,
                )
                .unwrap();
        }
        graph
    }

    fn straight_path(from: (f64, f64), to: (f64, f64), step: f64) -> Vec<Pose2> {
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        let len = dx.hypot(dy);
        let theta = dy.atan2(dx);
        let n = (len / step).ceil() as usize;
        (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                Pose2::new(from.0 + t * dx, from.1 + t * dy, theta)
            })
            .collect()
    }

    #[test]
    fn identity_action_keeps_the_current_graph_quality() {
        let graph = chain_graph(12, 0.3);
        let info = MotionModel::default().info_matrix();
        let single = vec![graph.pose(11).unwrap()];
        let predicted = hallucinate_graph(&graph, info, &single, 1.0, std::f64::consts::PI).unwrap();
        assert_eq!(predicted.node_count(), graph.node_count());
        assert_eq!(predicted.edge_count(), graph.edge_count());
        assert_eq!(dopt_graph(&predicted).unwrap(), dopt_graph(&graph).unwrap());
    }

    #[test]
    fn hallucinated_chain_spacing_follows_the_node_threshold() {
        let graph = chain_graph(2, 0.3);
        let info = MotionModel::default().info_matrix();
        let path = straight_path((0.3, 0.0), (2.7, 0.0), 0.05);
        let predicted = hallucinate_graph(&graph, info, &path, 0.05, std::f64::consts::PI).unwrap();
        // 2.4 m of path at one node per 0.3 m of arc length: 7 or 8 new
        // nodes depending on rounding in the accumulated segment lengths,
        // all odometry (the tiny loop radius forbids hallucinated closures).
        let added = predicted.node_count() - graph.node_count();
        assert!((7..=8).contains(&added), "{added} hallucinated nodes");
        assert_eq!(predicted.count_edges_of_kind(EdgeKind::Odometry), predicted.node_count() - 1);
        assert_eq!(predicted.count_edges_of_kind(EdgeKind::LoopClosure), 0);
        // Consecutive hallucinated nodes are close to one threshold apart.
        for id in graph.node_count()..predicted.node_count() {
            let gap = predicted.pose(id - 1).unwrap().distance(&predicted.pose(id).unwrap());
            if id > graph.node_count() {
                assert!((0.25..=0.40).contains(&gap), "node gap {gap}");
            }
        }
    }

    #[test]
    fn path_near_old_nodes_scores_a_higher_graph_term() {
        // 16 nodes along y = 0. Path A runs parallel at y = 0.5 (inside the
        // 1 m closure radius of the old chain); path B at y = 5, same shape.
        let graph = chain_graph(16, 0.3);
        let info = MotionModel::default().info_matrix();
        let start = graph.pose(15).unwrap();
        let near: Vec<Pose2> = straight_path((start.x, 0.5), (0.0, 0.5), 0.05);
        let far: Vec<Pose2> = straight_path((start.x, 5.0), (0.0, 5.0), 0.05);
        let with_near =
            hallucinate_graph(&graph, info, &near, 1.0, std::f64::consts::PI).unwrap();
        let with_far = hallucinate_graph(&graph, info, &far, 1.0, std::f64::consts::PI).unwrap();
        assert!(with_near.count_edges_of_kind(EdgeKind::LoopClosure) >= 3);
        assert_eq!(with_far.count_edges_of_kind(EdgeKind::LoopClosure), 0);
        let d_near = dopt_graph(&with_near).unwrap();
        let d_far = dopt_graph(&with_far).unwrap();
        assert!(
            d_near > d_far,
            "closure-rich prediction {d_near} vs closure-free {d_far}"
        );
    }

    #[test]
    fn adding_a_closure_edge_never_lowers_the_graph_term() {
        let graph = chain_graph(16, 0.3);
        let info = MotionModel::default().info_matrix();
        let path = straight_path((4.5, 0.5), (0.0, 0.5), 0.05);
        let predicted = hallucinate_graph(&graph, info, &path, 1.0, std::f64::consts::PI).unwrap();
        let before = dopt_graph(&predicted).unwrap();
        let mut with_extra = predicted.clone();
        let last = with_extra.node_count() - 1;
        let rel = with_extra.pose(2).unwrap().between(&with_extra.pose(last).unwrap());
        with_extra
            .add_edge(2, last, rel, closure_info(), EdgeKind::LoopClosure)
            .unwrap();
        let after = dopt_graph(&with_extra).unwrap();
        assert!(after >= before, "{after} < {before}");
    }

    #[test]
    fn more_revealed_area_wins_between_equal_graph_terms() {
        let mk = |idx: usize, graph_term: f64, area_term: f64| CandidateAction {
            cluster_index: idx,
            goal: (0.0, 0.0),
            path: vec![Pose2::identity()],
            predicted_graph: PoseGraph::new(),
            graph_term,
            area_term,
            utility: f64::NAN,
        };
        let mut set = vec![mk(0, 2.0, 1.0), mk(1, 2.0, 11.0), mk(2, 2.0, 6.0)];
        rank_candidates(&mut set, 1.0);
        assert_eq!(argmax_candidate(&set), Some(1));
        // Raw blend agrees for any positive alpha.
        for alpha in [0.1, 1.0, 10.0] {
            assert!(blend(2.0, 11.0, alpha) > blend(2.0, 6.0, alpha));
        }
    }

    #[test]
    fn utility_ties_break_to_the_lower_cluster_index() {
        let mk = |idx: usize, graph_term: f64, area_term: f64| CandidateAction {
            cluster_index: idx,
            goal: (0.0, 0.0),
            path: vec![Pose2::identity()],
            predicted_graph: PoseGraph::new(),
            graph_term,
            area_term,
            utility: f64::NAN,
        };
        let mut set = vec![mk(0, 1.0, 3.0), mk(1, 3.0, 1.0), mk(2, 3.0, 1.0)];
        rank_candidates(&mut set, 1.0);
        // Candidates 1 and 2 tie exactly; 0 ties with them too under this
        // construction. The lowest cluster index must win.
        let winner = argmax_candidate(&set).unwrap();
        assert_eq!(set[winner].cluster_index, 0);
        let mut two = vec![mk(3, 5.0, 5.0), mk(7, 5.0, 5.0)];
        rank_candidates(&mut two, 1.0);
        assert_eq!(two[argmax_candidate(&two).unwrap()].cluster_index, 3);
    }

    #[test]
    fn expected_cells_sees_the_unknown_not_the_known() {
        let mut map =
            OccupancyGrid::new(60, 60, 0.1, Pose2::new(0.0, 0.0, 0.0)).unwrap();
        // Left half known free, right half unknown.
        for iy in 0..60 {
            for ix in 0..30 {
                map.update(ix, iy, -2.0);
            }
        }
        let mut sensor = SensorModel::default();
        sensor.beams = 180;
        sensor.range = 2.0;
        let deep_in_known = expected_visible_cells(&map, &sensor, (1.0, 3.0));
        let at_boundary = expected_visible_cells(&map, &sensor, (2.9, 3.0));
        assert_eq!(deep_in_known, 0, "fully known surroundings reveal nothing");
        assert!(at_boundary > 200, "boundary viewpoint must see the unknown half");
    }

    #[test]
    fn occupied_cells_block_prediction_rays() {
        let mut map =
            OccupancyGrid::new(60, 60, 0.1, Pose2::new(0.0, 0.0, 0.0)).unwrap();
        for iy in 0..60 {
            for ix in 0..30 {
                map.update(ix, iy, -2.0);
            }
            // A known wall sealing the boundary to the unknown half.
            map.update(30, iy, 4.0);
        }
        let mut sensor = SensorModel::default();
        sensor.beams = 180;
        sensor.range = 2.0;
        assert_eq!(expected_visible_cells(&map, &sensor, (2.9, 3.0)), 0);
    }

    /// Small enclosed test arena, parsed from text: 4 m x 4 m at 0.1 m.
    fn arena() -> WorldModel {
        let mut rows = Vec::new();
        rows.push("#".repeat(40));
        for _ in 0..38 {
            let mut row = String::from("#");
            row.push_str(&".".repeat(38));
            row.push('#');
            rows.push(row);
        }
        rows.push("#".repeat(40));
        let text = format!("resolution 0.1\n{}\n", rows.join("\n"));
        WorldModel::parse(&text).unwrap()
    }

    fn test_state(seed: u64) -> SlamState {
        let mut sensor = SensorModel::default();
        sensor.beams = 240;
        sensor.range = 1.5;
        SlamState::new(
            arena(),
            sensor,
            MotionModel::default(),
            Pose2::new(2.0, 2.0, 0.0),
            seed,
        )
        .unwrap()
    }

    fn quick_params() -> ExploreParams {
        ExploreParams { candidate_cap: 10, ..ExploreParams::default() }
    }

    #[test]
    fn initial_sweep_builds_nodes_scans_and_self_closures() {
        let mut state = test_state(1);
        initial_sweep(&mut state, &quick_params()).unwrap();
        // A full revolution at one node per 0.3 rad.
        assert!(state.graph.node_count() >= 18, "{}", state.graph.node_count());
        assert_eq!(state.scans().len(), state.graph.node_count() - 1);
        assert!(state.known_area() > 1.0);
        // Rotating in place, late nodes close against node 0 at zero range.
        assert!(state.graph.count_edges_of_kind(EdgeKind::LoopClosure) >= 5);
    }

    #[test]
    fn step_selects_and_reaches_a_frontier_goal() {
        let mut state = test_state(2);
        let params = quick_params();
        initial_sweep(&mut state, &params).unwrap();
        let before = state.known_area();
        match select_and_execute(&mut state, &params).unwrap() {
            StepOutcome::Executed(report) => {
                assert!(report.reached);
                assert_eq!(report.attempts, 1);
                assert!(!report.rounds.is_empty());
                let round = &report.rounds[0];
                // Argmax property over the logged round.
                let selected = round
                    .candidates
                    .iter()
                    .find(|c| c.cluster_index == round.selected)
                    .unwrap();
                for c in &round.candidates {
                    assert!(c.utility <= selected.utility + 1e-12);
                }
            }
            StepOutcome::Exhausted => panic!("arena has frontiers after one sweep"),
        }
        assert!(state.known_area() >= before, "driving must not lose known area");
    }

    #[test]
    fn fully_explored_arena_reports_exhausted() {
        let mut state = test_state(3);
        let params = quick_params();
        initial_sweep(&mut state, &params).unwrap();
        for _ in 0..40 {
            match select_and_execute(&mut state, &params).unwrap() {
                StepOutcome::Executed(_) => {}
                StepOutcome::Exhausted => {
                    assert!(state.coverage() > 75.0, "coverage {}", state.coverage());
                    return;
                }
            }
        }
        panic!("4 m arena should exhaust its frontiers within 40 steps");
    }

    #[test]
    fn tiny_tick_budget_abandons_every_candidate() {
        let mut state = test_state(4);
        let mut params = quick_params();
        initial_sweep(&mut state, &params).unwrap();
        params.max_ticks = 2;
        params.n_stuck = 1;
        match select_and_execute(&mut state, &params).unwrap() {
            StepOutcome::Executed(report) => {
                assert!(!report.reached);
                assert!(report.attempts >= 1);
                assert_eq!(report.rounds.len(), report.attempts);
            }
            StepOutcome::Exhausted => panic!("candidates existed, outcome is a failed step"),
        }
    }
}
