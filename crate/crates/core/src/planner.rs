//! Grid path planning over the known map.
//!
//! A* on the 8-connected cell lattice, restricted to known-free cells with
//! occupied cells inflated by the robot radius. Unknown space is
//! untraversable: the planner only commits the robot to terrain the map has
//! actually seen. Unreachable goals are a normal outcome, not an error.

use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid};
use crate::se2::Pose2;
use crate::world::squared_cell_distances;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Inflation radius for planning. Cells whose center lies within this
/// distance of an occupied cell center are off limits.
pub const DEFAULT_ROBOT_RADIUS: f64 = 0.15;

/// How far (in cells, Chebyshev) a goal may be nudged to the nearest
/// traversable cell before we call it unreachable. Frontier centroids can
/// land a little inside the unknown or the inflation band.
const GOAL_SNAP_CELLS: i64 = 20;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Cells a robot of the given radius may occupy: known free, and no
/// occupied cell center within `robot_radius`.
pub fn traversable_mask(map: &OccupancyGrid, robot_radius: f64) -> Vec<bool> {
    let (w, h) = (map.width(), map.height());
    let mut occupied = vec![false; w * h];
    for iy in 0..h {
        for ix in 0..w {
            occupied[iy * w + ix] = map.state(ix, iy) == CellState::Occupied;
        }
    }
    let d2 = squared_cell_distances(w, h, &occupied);
    let r_cells = robot_radius / map.resolution();
    let r2 = r_cells * r_cells;
    let mut mask = vec![false; w * h];
    for iy in 0..h {
        for ix in 0..w {
            let idx = iy * w + ix;
            mask[idx] = map.state(ix, iy) == CellState::Free && d2[idx] > r2;
        }
    }
    mask
}

/// Heap entry ordered by lowest f-cost; ties broken by insertion order so
/// the search is fully deterministic.
struct OpenNode {
    f: f64,
    seq: u64,
    cell: usize,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.seq == other.seq
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest f first.
        other
            .f
            .total_cmp(&self.f)
            .then(other.seq.cmp(&self.seq))
    }
}

fn octile(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dx = (a.0 as f64 - b.0 as f64).abs();
    let dy = (a.1 as f64 - b.1 as f64).abs();
    let lo = dx.min(dy);
    dx.max(dy) - lo + lo * SQRT2
}

/// Shortest inflated-grid path from `start` to `goal` (world meters).
///
/// Returns `Ok(None)` when no path exists. The start pose must sit in known
/// free space; anywhere else is a caller error. The start's immediate
/// neighborhood (one robot radius) is exempted from inflation so a robot
/// parked near a wall can still plan its way out.
///
/// The returned path begins with `start` itself, follows cell centers, and
/// carries headings pointing along each segment.
pub fn plan_path(
    map: &OccupancyGrid,
    start: Pose2,
    goal: (f64, f64),
    robot_radius: f64,
) -> Result<Option<Vec<Pose2>>> {
    let (w, h) = (map.width(), map.height());
    let start_cell = map
        .cell_of(start.x, start.y)
        .ok_or_else(|| Error::Config("path start lies outside the map".into()))?;
    if map.state(start_cell.0, start_cell.1) != CellState::Free {
        return Err(Error::Config("path start is not in known free space".into()));
    }

    let mut mask = traversable_mask(map, robot_radius);
    // Exempt the robot's own footprint: free cells within one radius of the
    // start are traversable by the fact of the robot standing there.
    let r_cells = (robot_radius / map.resolution()).ceil() as i64 + 1;
    let (sx, sy) = map.center_of(start_cell.0, start_cell.1);
    for dy in -r_cells..=r_cells {
        for dx in -r_cells..=r_cells {
            let nx = start_cell.0 as i64 + dx;
            let ny = start_cell.1 as i64 + dy;
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let (cx, cy) = map.center_of(nx as usize, ny as usize);
            if (cx - sx).hypot(cy - sy) <= robot_radius
                && map.state(nx as usize, ny as usize) == CellState::Free
            {
                mask[ny as usize * w + nx as usize] = true;
            }
        }
    }

    let goal_cell = match snap_goal(map, &mask, goal) {
        Some(cell) => cell,
        None => return Ok(None),
    };
    if goal_cell == start_cell {
        return Ok(Some(vec![start]));
    }

    let mut g = vec![f64::INFINITY; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let start_idx = start_cell.1 * w + start_cell.0;
    g[start_idx] = 0.0;
    open.push(OpenNode { f: octile(start_cell, goal_cell), seq, cell: start_idx });

    let goal_idx = goal_cell.1 * w + goal_cell.0;
    const MOVES: [(i64, i64); 8] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ];
    while let Some(node) = open.pop() {
        let idx = node.cell;
        if idx == goal_idx {
            break;
        }
        let cx = (idx % w) as i64;
        let cy = (idx / w) as i64;
        // Stale heap entry: a shorter route to this cell was already popped.
        if node.f > g[idx] + octile(((idx % w), (idx / w)), goal_cell) + 1e-9 {
            continue;
        }
        for (dx, dy) in MOVES {
            let nx = cx + dx;
            let ny = cy + dy;
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let nidx = ny as usize * w + nx as usize;
            if !mask[nidx] {
                continue;
            }
            // Diagonal moves must not cut corners: both cardinal cells the
            // robot would brush past have to be traversable too.
            if dx != 0 && dy != 0 {
                let side_a = cy as usize * w + nx as usize;
                let side_b = ny as usize * w + cx as usize;
                if !mask[side_a] || !mask[side_b] {
                    continue;
                }
            }
            let step = if dx != 0 && dy != 0 { SQRT2 } else { 1.0 };
            let tentative = g[idx] + step;
            if tentative < g[nidx] {
                g[nidx] = tentative;
                parent[nidx] = idx;
                seq += 1;
                open.push(OpenNode {
                    f: tentative + octile((nx as usize, ny as usize), goal_cell),
                    seq,
                    cell: nidx,
                });
            }
        }
    }

    if g[goal_idx].is_infinite() {
        return Ok(None);
    }

    // Walk parents back to the start, then emit world-frame waypoints with
    // headings along the direction of travel.
    let mut cells = vec![goal_idx];
    let mut idx = goal_idx;
    while idx != start_idx {
        idx = parent[idx];
        cells.push(idx);
    }
    cells.reverse();

    let mut points = Vec::with_capacity(cells.len() + 1);
    points.push((start.x, start.y));
    for &c in &cells[1..] {
        points.push(map.center_of(c % w, c / w));
    }
    let mut path: Vec<Pose2> = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let theta = if i + 1 < points.len() {
            let (x0, y0) = points[i];
            let (x1, y1) = points[i + 1];
            (y1 - y0).atan2(x1 - x0)
        } else if i > 0 {
            path[i - 1].theta
        } else {
            start.theta
        };
        path.push(Pose2::new(points[i].0, points[i].1, theta));
    }
    path[0].theta = start.theta;
    Ok(Some(path))
}

/// Nearest traversable cell to the goal point, scanning outward in
/// Chebyshev rings; ties go to the lowest (iy, ix). None once the snap
/// radius is exhausted.
fn snap_goal(map: &OccupancyGrid, mask: &[bool], goal: (f64, f64)) -> Option<(usize, usize)> {
    let w = map.width() as i64;
    let h = map.height() as i64;
    let res = map.resolution();
    let origin = map.origin();
    // Clamp the goal point into the grid before snapping.
    let gx = ((goal.0 - origin.x) / res).floor().clamp(0.0, (w - 1) as f64) as i64;
    let gy = ((goal.1 - origin.y) / res).floor().clamp(0.0, (h - 1) as f64) as i64;
    for ring in 0..=GOAL_SNAP_CELLS {
        let mut best: Option<(f64, i64, i64)> = None;
        for dy in -ring..=ring {
            for dx in -ring..=ring {
                if dx.abs().max(dy.abs()) != ring {
                    continue;
                }
                let nx = gx + dx;
                let ny = gy + dy;
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                if !mask[(ny * w + nx) as usize] {
                    continue;
                }
                let (cx, cy) = map.center_of(nx as usize, ny as usize);
                let d = (cx - goal.0).hypot(cy - goal.1);
                let key = (d, ny, nx);
                if best.map_or(true, |b| key < b) {
                    best = Some(key);
                }
            }
        }
        if let Some((_, ny, nx)) = best {
            return Some((nx as usize, ny as usize));
        }
    }
    None
}

/// Total Euclidean length of a waypoint path, in meters.
pub fn path_length(path: &[Pose2]) -> f64 {
    path.windows(2)
        .map(|p| (p[1].x - p[0].x).hypot(p[1].y - p[0].y))
        .sum()
}
