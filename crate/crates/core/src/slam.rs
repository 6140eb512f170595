//! Simulated graph-SLAM frontend.
//!
//! The simulator holds two parallel realities: the true robot pose advancing
//! by exact unicycle kinematics through the ground-truth world, and the
//! estimated pose graph built from noise-corrupted relative measurements.
//! Scans are raycast from the true pose but rendered into the map from the
//! estimated one, so mapping honestly inherits localization drift. Loop
//! closures are privileged: candidates are found with true poses, standing
//! in for an external scan-matching frontend.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, InfoMatrix3, PoseGraph};
use crate::grid::{CellState, OccupancyGrid};
use crate::optimality;
use crate::optimizer::{self, ConvergenceReport};
use crate::se2::{wrap_angle, Pose2};
use crate::sensor::{walk_ray, Scan, SensorModel};
use crate::world::WorldModel;

/// New graph node once the robot has moved this far from the last one.
pub const NODE_TRANSLATION_THRESHOLD: f64 = 0.3;
pub const NODE_ROTATION_THRESHOLD: f64 = 0.3;

/// Closure candidates must be at least this many node ids in the past.
pub const LOOP_CLOSURE_MIN_INDEX_GAP: usize = 10;

/// Scan-match accuracy assumed for loop-closure edges (5 cm, 5 cm, 0.025 rad),
/// an order tighter than odometry.
pub const LOOP_CLOSURE_SIGMA: (f64, f64, f64) = (0.05, 0.05, 0.025);

#[derive(Debug, Clone, Copy)]
pub struct MotionModel {
    pub v_max: f64,
    pub omega_max: f64,
    /// Odometry noise standard deviations (x, y, theta) applied per
    /// committed node.
    pub sigma: (f64, f64, f64),
}

impl Default for MotionModel {
    fn default() -> Self {
        Self { v_max: 0.2, omega_max: 0.8, sigma: (0.015, 0.015, 0.0075) }
    }
}

impl MotionModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0) || !(self.omega_max > 0.0) {
            return Err(Error::Config("motion limits must be positive".into()));
        }
        let (sx, sy, st) = self.sigma;
        if !(sx >= 0.0 && sy >= 0.0 && st >= 0.0) {
            return Err(Error::Config("motion noise deviations must be >= 0".into()));
        }
        Ok(())
    }

    /// Edge information matrix: inverse of the diagonal noise covariance.
    /// Zero deviations are floored at 1e-6 so the information stays finite.
    pub fn info_matrix(&self) -> InfoMatrix3 {
        let inv = |s: f64| 1.0 / s.max(1e-6).powi(2);
        InfoMatrix3::diagonal(inv(self.sigma.0), inv(self.sigma.1), inv(self.sigma.2))
            .expect("floored deviations give a valid information matrix")
    }
}

/// Exact unicycle motion over one interval (arc for nonzero turn rate).
pub fn advance_unicycle(pose: Pose2, v: f64, omega: f64, dt: f64) -> Pose2 {
    if omega.abs() < 1e-12 {
        Pose2::new(
            pose.x + v * dt * pose.theta.cos(),
            pose.y + v * dt * pose.theta.sin(),
            pose.theta,
        )
    } else {
        let r = v / omega;
        let t1 = pose.theta + omega * dt;
        Pose2::new(
            pose.x + r * (t1.sin() - pose.theta.sin()),
            pose.y + r * (pose.theta.cos() - t1.cos()),
            t1,
        )
    }
}

/// A scan anchored to a graph node. `offset` is the robot's exact motion
/// since that node at capture time, so replay after pose corrections renders
/// from `pose(node) ∘ offset`.
#[derive(Debug, Clone)]
pub struct StoredScan {
    pub node: usize,
    pub offset: Pose2,
    pub scan: Scan,
}

pub struct SlamState {
    world: WorldModel,
    pub sensor: SensorModel,
    pub motion: MotionModel,
    pub graph: PoseGraph,
    pub map: OccupancyGrid,
    rng: ChaCha8Rng,
    true_pose: Pose2,
    /// True pose at each committed node, indexed by node id (privileged).
    true_poses: Vec<Pose2>,
    scans: Vec<StoredScan>,
    /// Simulated seconds of robot motion.
    pub wall_time: f64,
    pub optimization_count: usize,
    closures_since_optimize: usize,
    /// Commands that had to be clamped to the motion limits.
    pub clamp_events: usize,
    distance_field: Vec<f64>,
    /// World cells the robot could ever come to know, privileged.
    observable_mask: Vec<bool>,
    observable_cells: usize,
}

impl SlamState {
    pub fn new(
        world: WorldModel,
        sensor: SensorModel,
        motion: MotionModel,
        start: Pose2,
        seed: u64,
    ) -> Result<Self> {
        sensor.validate()?;
        motion.validate()?;
        let start_cell = world
            .cell_of(start.x, start.y)
            .ok_or_else(|| Error::Config("start pose outside the world".into()))?;
        if world.is_occupied(start_cell.0, start_cell.1) {
            return Err(Error::Config("start pose inside an occupied cell".into()));
        }
        let map =
            OccupancyGrid::new(world.width(), world.height(), world.resolution(), world.origin())?;
        let mut graph = PoseGraph::new();
        graph.add_node(start, 0);
        let distance_field = world.occupied_distance_field();
        let observable_mask = world.observable_mask(start_cell);
        let observable_cells = observable_mask.iter().filter(|&&m| m).count();
        Ok(Self {
            world,
            sensor,
            motion,
            graph,
            map,
            rng: ChaCha8Rng::seed_from_u64(seed),
            true_pose: start,
            true_poses: vec![start],
            scans: Vec::new(),
            wall_time: 0.0,
            optimization_count: 0,
            closures_since_optimize: 0,
            clamp_events: 0,
            distance_field,
            observable_mask,
            observable_cells,
        })
    }

    pub fn world(&self) -> &WorldModel {
        &self.world
    }

    /// Privileged ground-truth pose; simulation internals and metrics only.
    pub fn true_pose(&self) -> Pose2 {
        self.true_pose
    }

    /// Ground-truth pose of every committed node, for evaluation against
    /// the estimated trajectory.
    pub fn true_poses(&self) -> &[Pose2] {
        &self.true_poses
    }

    pub fn scans(&self) -> &[StoredScan] {
        &self.scans
    }

    /// Best current pose estimate: the last committed node's estimate
    /// composed with the exact motion since (odometry noise enters per
    /// committed node, not per control tick).
    pub fn current_estimate(&self) -> Pose2 {
        let last = self.graph.node_count() - 1;
        let est = self.graph.pose(last).expect("graph always has nodes");
        let pending = self.true_poses[last].between(&self.true_pose);
        est.compose(&pending)
    }

    /// Advances the true pose by one control tick; commands are clamped to
    /// the motion limits, and motion that would enter a wall is blocked
    /// (time still passes). Returns the applied command.
    pub fn advance_true(&mut self, v: f64, omega: f64, dt: f64) -> (f64, f64) {
        let cv = v.clamp(-self.motion.v_max, self.motion.v_max);
        let co = omega.clamp(-self.motion.omega_max, self.motion.omega_max);
        if cv != v || co != omega {
            self.clamp_events += 1;
        }
        let candidate = advance_unicycle(self.true_pose, cv, co, dt);
        let blocked = match self.world.cell_of(candidate.x, candidate.y) {
            Some((ix, iy)) => self.world.is_occupied(ix, iy),
            None => true,
        };
        if blocked {
            // Keep the heading change so the robot can turn away from walls.
            self.true_pose = Pose2::new(self.true_pose.x, self.true_pose.y, candidate.theta);
        } else {
            self.true_pose = candidate;
        }
        self.wall_time += dt;
        (cv, co)
    }

    /// Motion accumulated since the last committed node.
    pub fn pending_motion(&self) -> Pose2 {
        self.true_poses[self.graph.node_count() - 1].between(&self.true_pose)
    }

    /// True once the pending motion passes the node decimation thresholds.
    pub fn due_for_commit(&self) -> bool {
        let p = self.pending_motion();
        p.translation_norm() >= NODE_TRANSLATION_THRESHOLD
            || p.theta.abs() >= NODE_ROTATION_THRESHOLD
    }

    /// Appends a node for the current pose with a noisy odometry edge from
    /// the previous node. Returns the new node id.
    pub fn commit_node(&mut self) -> Result<usize> {
        let prev = self.graph.node_count() - 1;
        let true_delta = self.pending_motion();
        let (sx, sy, st) = self.motion.sigma;
        let measurement = Pose2::new(
            true_delta.x + self.sample_normal(sx),
            true_delta.y + self.sample_normal(sy),
            wrap_angle(true_delta.theta + self.sample_normal(st)),
        );
        let est = self.graph.pose(prev)?.compose(&measurement);
        let id = self.graph.add_node(est, 0);
        self.graph.add_edge(prev, id, measurement, self.motion.info_matrix(), EdgeKind::Odometry)?;
        self.true_poses.push(self.true_pose);
        Ok(id)
    }

    fn sample_normal(&mut self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        Normal::new(0.0, sigma).expect("validated sigma").sample(&mut self.rng)
    }

    /// Spec'd one-shot step: advance for `dt` under `command`, then commit a
    /// node unconditionally. The exploration driver instead ticks
    /// `advance_true` and commits on the decimation thresholds.
    pub fn step_odometry(&mut self, command: (f64, f64), dt: f64) -> Result<usize> {
        self.advance_true(command.0, command.1, dt);
        self.commit_node()
    }

    /// Casts a full scan from the true pose, stores it against the latest
    /// node, and renders it into the map from the estimated pose (node
    /// estimate composed with the exact motion since the node).
    pub fn raycast_and_update(&mut self) -> Result<()> {
        let (ix, iy) = self
            .world
            .cell_of(self.true_pose.x, self.true_pose.y)
            .ok_or_else(|| Error::Domain("robot left the world".into()))?;
        if self.world.is_occupied(ix, iy) {
            return Err(Error::Domain("robot inside an occupied cell".into()));
        }
        let node = self.graph.node_count() - 1;
        let offset = self.pending_motion();
        let mut ranges = Vec::with_capacity(self.sensor.beams);
        let mut hits = Vec::with_capacity(self.sensor.beams);
        for angle in self.sensor.beam_angles(self.true_pose.theta) {
            let ray = self.sensor.cast_ray(&self.world, self.true_pose.x, self.true_pose.y, angle);
            let noisy = (ray.distance + self.sample_normal(self.sensor.sigma_r))
                .clamp(0.0, self.sensor.range);
            ranges.push(noisy);
            hits.push(ray.hit);
        }
        let scan = Scan { ranges, hits };
        let est = self.graph.pose(node)?.compose(&offset);
        apply_scan(&mut self.map, &self.sensor, est, &scan);
        self.scans.push(StoredScan { node, offset, scan });
        Ok(())
    }

    /// Privileged closure detection against true poses: the nearest node at
    /// least `LOOP_CLOSURE_MIN_INDEX_GAP` ids back, within `radius` meters
    /// and `yaw_gate` radians of the current true pose. Ties prefer the
    /// lower id. At most one edge per call.
    pub fn detect_loop_closure(&mut self, radius: f64, yaw_gate: f64) -> Result<Option<usize>> {
        let current = self.graph.node_count() - 1;
        if current < LOOP_CLOSURE_MIN_INDEX_GAP {
            return Ok(None);
        }
        let pose = self.true_poses[current];
        let mut best: Option<(f64, usize)> = None;
        for id in 0..=current - LOOP_CLOSURE_MIN_INDEX_GAP {
            let d = self.true_poses[id].distance(&pose);
            if d > radius {
                continue;
            }
            if wrap_angle(self.true_poses[id].theta - pose.theta).abs() > yaw_gate {
                continue;
            }
            // Strict < keeps the earliest id on exact ties.
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, id));
            }
        }
        let Some((_, id)) = best else { return Ok(None) };
        let true_rel = self.true_poses[id].between(&pose);
        let (sx, sy, st) = LOOP_CLOSURE_SIGMA;
        let measurement = Pose2::new(
            true_rel.x + self.sample_normal(sx),
            true_rel.y + self.sample_normal(sy),
            wrap_angle(true_rel.theta + self.sample_normal(st)),
        );
        self.graph.add_edge(id, current, measurement, closure_info(), EdgeKind::LoopClosure)?;
        self.closures_since_optimize += 1;
        Ok(Some(id))
    }

    pub fn closures_pending_optimize(&self) -> usize {
        self.closures_since_optimize
    }

    /// Optimizes the graph and rebuilds the map from all stored scans at the
    /// corrected poses. The optimization counter only advances when the call
    /// follows at least one loop-closure insertion.
    pub fn optimize(&mut self) -> Result<ConvergenceReport> {
        let report = optimizer::optimize(&mut self.graph)?;
        if self.closures_since_optimize > 0 {
            self.optimization_count += 1;
            self.closures_since_optimize = 0;
        }
        self.rebuild_map()?;
        Ok(report)
    }

    /// Clears the map and replays every stored scan from its node's current
    /// estimated pose. Replaying from unchanged poses reproduces the map
    /// bit for bit.
    pub fn rebuild_map(&mut self) -> Result<()> {
        self.map.reset();
        for stored in &self.scans {
            let est = self.graph.pose(stored.node)?.compose(&stored.offset);
            apply_scan(&mut self.map, &self.sensor, est, &stored.scan);
        }
        Ok(())
    }

    pub fn known_area(&self) -> f64 {
        self.map.known_area()
    }

    /// Percent of the world's observable cells (reachable free space plus
    /// adjacent walls) currently known. Known cells outside the observable
    /// set are noise artifacts and do not count, so the value never passes
    /// 100. Privileged: needs ground truth.
    pub fn coverage(&self) -> f64 {
        let w = self.map.width();
        let known_observable = self
            .map
            .states()
            .filter(|&((ix, iy), state)| {
                state != CellState::Unknown && self.observable_mask[iy * w + ix]
            })
            .count();
        100.0 * known_observable as f64 / self.observable_cells as f64
    }

    /// (rmse, max) distance from estimated-occupied cells to the nearest
    /// true occupied cell; None while the map has no occupied cell.
    pub fn map_error(&self) -> Option<(f64, f64)> {
        map_error_with_field(&self.map, &self.distance_field)
    }

    /// Spanning-tree-based D-optimality of the current graph.
    pub fn dopt(&self) -> Result<f64> {
        optimality::dopt_graph(&self.graph)
    }

    #[cfg(test)]
    pub(crate) fn teleport(&mut self, pose: Pose2) {
        self.true_pose = pose;
    }
}

/// Information matrix every loop-closure edge carries, from the fixed
/// scan-match deviations.
pub fn closure_info() -> InfoMatrix3 {
    let inv = |s: f64| 1.0 / (s * s);
    InfoMatrix3::diagonal(
        inv(LOOP_CLOSURE_SIGMA.0),
        inv(LOOP_CLOSURE_SIGMA.1),
        inv(LOOP_CLOSURE_SIGMA.2),
    )
    .expect("fixed closure deviations are valid")
}

/// Renders one scan into the map from the given pose: cells fully traversed
/// by a beam take the miss increment; the endpoint cell takes the hit
/// increment when the beam actually struck a wall, and no mark at all when
/// the beam merely ran out of range inside it.
pub fn apply_scan(map: &mut OccupancyGrid, sensor: &SensorModel, pose: Pose2, scan: &Scan) {
    let origin = (map.origin().x, map.origin().y);
    for (i, angle) in sensor.beam_angles(pose.theta).into_iter().enumerate() {
        // Hair of slack so an endpoint exactly on a wall face still lands in
        // the wall cell despite last-bit pose rounding.
        let limit = scan.ranges[i] + 1e-9;
        let mut last: Option<(usize, usize)> = None;
        walk_ray(
            map.resolution(),
            origin,
            map.width(),
            map.height(),
            (pose.x, pose.y),
            angle,
            limit,
            |ix, iy, _| {
                if let Some((px, py)) = last {
                    map.update(px, py, sensor.miss_log_odds);
                }
                last = Some((ix, iy));
                true
            },
        );
        if let Some((lx, ly)) = last {
            if scan.hits[i] {
                map.update(lx, ly, sensor.hit_log_odds);
            }
        }
    }
}

/// Map accuracy against ground truth; see [`SlamState::map_error`].
pub fn map_error(map: &OccupancyGrid, world: &WorldModel) -> Option<(f64, f64)> {
    map_error_with_field(map, &world.occupied_distance_field())
}

pub(crate) fn map_error_with_field(map: &OccupancyGrid, field: &[f64]) -> Option<(f64, f64)> {
    let mut sum_sq = 0.0;
    let mut max = 0.0f64;
    let mut count = 0usize;
    for ((ix, iy), state) in map.states() {
        if state != CellState::Occupied {
            continue;
        }
        let d = field[iy * map.width() + ix];
        sum_sq += d * d;
        max = max.max(d);
        count += 1;
    }
    (count > 0).then(|| ((sum_sq / count as f64).sqrt(), max))
}
