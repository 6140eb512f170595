//! Frontier detection on the occupancy grid.
//!
//! A frontier cell is known free space touching the unknown: standing there,
//! the robot's sensor looks into territory the map has nothing to say about.
//! Cells are grouped into 8-connected clusters and small clusters are
//! discarded as noise; what remains is the candidate goal set for
//! exploration.

use crate::grid::{CellState, OccupancyGrid};

/// Clusters smaller than this are sensor-noise fringes, not places worth
/// driving to.
pub const MIN_CLUSTER_SIZE: usize = 5;

/// One maximal 8-connected group of frontier cells.
#[derive(Debug, Clone)]
pub struct FrontierCluster {
    /// Member cells as (ix, iy) grid indices, in discovery order.
    pub cells: Vec<(usize, usize)>,
    /// Mean of the member cell centers, in world meters.
    pub centroid: (f64, f64),
    /// Center of the member cell nearest the centroid, in world meters.
    /// The drivable stand-in for the centroid: a curved cluster (an arc
    /// around the robot, a corner) can put its centroid well inside already
    /// explored space or even in a wall, while the anchor is always on the
    /// cluster itself.
    pub anchor: (f64, f64),
    /// Number of member cells; always equals `cells.len()`.
    pub size: usize,
}

/// A cell is a frontier cell iff it is known free and at least one of its
/// 4-neighbors is unknown. Grid borders do not count as unknown.
pub fn is_frontier_cell(map: &OccupancyGrid, ix: usize, iy: usize) -> bool {
    if map.state(ix, iy) != CellState::Free {
        return false;
    }
    let (w, h) = (map.width(), map.height());
    let neighbors = [
        (ix.wrapping_sub(1), iy),
        (ix + 1, iy),
        (ix, iy.wrapping_sub(1)),
        (ix, iy + 1),
    ];
    neighbors
        .into_iter()
        .any(|(nx, ny)| nx < w && ny < h && map.state(nx, ny) == CellState::Unknown)
}

/// All frontier clusters with at least [`MIN_CLUSTER_SIZE`] cells, largest
/// first. Equal sizes are ordered by centroid x then y so the result is a
/// total order independent of scan order.
pub fn detect_frontiers(map: &OccupancyGrid) -> Vec<FrontierCluster> {
    let (w, h) = (map.width(), map.height());
    let mut frontier = vec![false; w * h];
    for iy in 0..h {
        for ix in 0..w {
            frontier[iy * w + ix] = is_frontier_cell(map, ix, iy);
        }
    }

    let mut visited = vec![false; w * h];
    let mut clusters = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for iy in 0..h {
        for ix in 0..w {
            let idx = iy * w + ix;
            if !frontier[idx] || visited[idx] {
                continue;
            }
            visited[idx] = true;
            queue.push_back((ix, iy));
            let mut cells = Vec::new();
            while let Some((cx, cy)) = queue.pop_front() {
                cells.push((cx, cy));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = cx as i64 + dx;
                        let ny = cy as i64 + dy;
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let nidx = ny as usize * w + nx as usize;
                        if frontier[nidx] && !visited[nidx] {
                            visited[nidx] = true;
                            queue.push_back((nx as usize, ny as usize));
                        }
                    }
                }
            }
            if cells.len() < MIN_CLUSTER_SIZE {
                continue;
            }
            let mut sx = 0.0;
            let mut sy = 0.0;
            for &(cx, cy) in &cells {
                let (x, y) = map.center_of(cx, cy);
                sx += x;
                sy += y;
            }
            let n = cells.len() as f64;
            let centroid = (sx / n, sy / n);
            // Anchor: member cell center nearest the centroid; ties resolve
            // by lower (iy, ix) so the choice is scan-order independent.
            let mut best: Option<(f64, usize, usize)> = None;
            for &(cx, cy) in &cells {
                let (x, y) = map.center_of(cx, cy);
                let d2 = (x - centroid.0).powi(2) + (y - centroid.1).powi(2);
                let key = (d2, cy, cx);
                if best.map_or(true, |b| key < b) {
                    best = Some(key);
                }
            }
            let (_, ay, ax) = best.expect("cluster is non-empty");
            clusters.push(FrontierCluster {
                centroid,
                anchor: map.center_of(ax, ay),
                size: cells.len(),
                cells,
            });
        }
    }

    clusters.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then(a.centroid.0.total_cmp(&b.centroid.0))
            .then(a.centroid.1.total_cmp(&b.centroid.1))
    });
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se2::Pose2;

    /// 20x20 grid at 0.1 m resolution, origin at (0, 0), all unknown.
    fn blank_map() -> OccupancyGrid {
        OccupancyGrid::new(20, 20, 0.1, Pose2::new(0.0, 0.0, 0.0)).unwrap()
    }

    fn mark_free(map: &mut OccupancyGrid, ix: usize, iy: usize) {
        map.update(ix, iy, -2.0);
    }

    fn mark_occupied(map: &mut OccupancyGrid, ix: usize, iy: usize) {
        map.update(ix, iy, 2.0);
    }

    #[test]
    fn fully_known_map_has_no_frontiers() {
        let mut map = blank_map();
        for iy in 0..20 {
            for ix in 0..20 {
                if ix == 0 || iy == 0 || ix == 19 || iy == 19 {
                    mark_occupied(&mut map, ix, iy);
                } else {
                    mark_free(&mut map, ix, iy);
                }
            }
        }
        assert!(detect_frontiers(&map).is_empty());
    }

    #[test]
    fn free_band_against_unknown_yields_one_cluster() {
        let mut map = blank_map();
        // Rows 0..5 free, rest unknown: only row 4 touches the unknown.
        for iy in 0..5 {
            for ix in 0..20 {
                mark_free(&mut map, ix, iy);
            }
        }
        let clusters = detect_frontiers(&map);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].size, 20);
        assert!(clusters[0].cells.iter().all(|&(_, iy)| iy == 4));
        // Centroid: x spans the full row (mean 1.0 m), y at row 4 center.
        assert!((clusters[0].centroid.0 - 1.0).abs() < 1e-12);
        assert!((clusters[0].centroid.1 - 0.45).abs() < 1e-12);
        // Anchor snaps to one of the two member cells flanking x = 1.0
        // (their float distances to the centroid differ only in the last
        // bits, so the winner is not specified here).
        let (ax, ay) = clusters[0].anchor;
        assert!((ax - 0.95).abs() < 1e-12 || (ax - 1.05).abs() < 1e-12, "{ax}");
        assert!((ay - 0.45).abs() < 1e-12);
    }

    #[test]
    fn two_separated_rooms_yield_two_clusters() {
        let mut map = blank_map();
        // Two free blocks with a 2-column unknown gap between their frontier
        // columns: 8-connectivity cannot bridge them.
        for iy in 2..10 {
            for ix in 1..6 {
                mark_free(&mut map, ix, iy);
            }
            for ix in 8..13 {
                mark_free(&mut map, ix, iy);
            }
        }
        let clusters = detect_frontiers(&map);
        assert_eq!(clusters.len(), 2);
        // All member cells border the unknown from inside free space.
        for cluster in &clusters {
            for &(ix, iy) in &cluster.cells {
                assert!(is_frontier_cell(&map, ix, iy), "({ix},{iy})");
            }
        }
    }

    #[test]
    fn ring_cluster_anchor_sits_on_the_ring_not_the_middle() {
        let mut map = blank_map();
        // A free disc in the unknown: its frontier is the boundary ring,
        // whose centroid is the disc center, far from every member cell.
        let (cx, cy) = (10.0_f64, 10.0_f64);
        for iy in 0..20 {
            for ix in 0..20 {
                let d = ((ix as f64 - cx).powi(2) + (iy as f64 - cy).powi(2)).sqrt();
                if d <= 6.0 {
                    mark_free(&mut map, ix, iy);
                }
            }
        }
        let clusters = detect_frontiers(&map);
        assert_eq!(clusters.len(), 1);
        let ring = &clusters[0];
        let centroid_on_member = ring.cells.iter().any(|&(ix, iy)| {
            let (x, y) = map.center_of(ix, iy);
            (x - ring.centroid.0).hypot(y - ring.centroid.1) < 1e-9
        });
        assert!(!centroid_on_member, "ring centroid lies inside the disc");
        let anchor_on_member = ring.cells.iter().any(|&(ix, iy)| {
            let (x, y) = map.center_of(ix, iy);
            (x - ring.anchor.0).hypot(y - ring.anchor.1) < 1e-9
        });
        assert!(anchor_on_member, "anchor must be a member cell center");
    }

    #[test]
    fn small_clusters_are_dropped() {
        let mut map = blank_map();
        // A 2x2 free pocket in the unknown: 4 frontier cells, below the
        // cluster threshold.
        for iy in 5..7 {
            for ix in 5..7 {
                mark_free(&mut map, ix, iy);
            }
        }
        assert!(detect_frontiers(&map).is_empty());
    }

    #[test]
    fn clusters_sort_by_size_then_centroid() {
        let mut map = blank_map();
        // Row bands of free cells surrounded by unknown above and below:
        // every free cell is a frontier cell. Sizes 8, 5, 5.
        for ix in 2..10 {
            mark_free(&mut map, ix, 2);
        }
        for ix in 6..11 {
            mark_free(&mut map, ix, 8);
        }
        for ix in 2..7 {
            mark_free(&mut map, ix, 14);
        }
        let clusters = detect_frontiers(&map);
        assert_eq!(clusters.len(), 3);
        assert_eq!(clusters[0].size, 8);
        assert_eq!(clusters[1].size, 5);
        assert_eq!(clusters[2].size, 5);
        // The two size-5 bands tie; the one with the smaller centroid x
        // (columns 2..7) must come first.
        assert!(clusters[1].centroid.0 < clusters[2].centroid.0);
    }

    #[test]
    fn every_frontier_cell_is_clustered_or_in_a_small_component() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        for _ in 0..10 {
            let mut map = blank_map();
            for iy in 0..20 {
                for ix in 0..20 {
                    match rng.gen_range(0..3) {
                        0 => mark_free(&mut map, ix, iy),
                        1 => mark_occupied(&mut map, ix, iy),
                        _ => {}
                    }
                }
            }
            let clusters = detect_frontiers(&map);
            let mut clustered = std::collections::HashSet::new();
            for cluster in &clusters {
                assert_eq!(cluster.size, cluster.cells.len());
                assert!(cluster.size >= MIN_CLUSTER_SIZE);
                for &cell in &cluster.cells {
                    assert!(is_frontier_cell(&map, cell.0, cell.1));
                    assert!(clustered.insert(cell), "cell in two clusters");
                }
            }
            // Brute-force the frontier set; anything not clustered must
            // belong to a component smaller than the threshold, which we
            // check loosely by counting its 8-neighborhood closure.
            for iy in 0..20 {
                for ix in 0..20 {
                    if !is_frontier_cell(&map, ix, iy) || clustered.contains(&(ix, iy)) {
                        continue;
                    }
                    let component = flood(&map, ix, iy);
                    assert!(
                        component < MIN_CLUSTER_SIZE,
                        "unclustered frontier cell ({ix},{iy}) in component of {component}"
                    );
                }
            }
        }
    }

    /// Size of the 8-connected frontier component containing (ix, iy),
    /// computed independently of detect_frontiers.
    fn flood(map: &OccupancyGrid, ix: usize, iy: usize) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![(ix, iy)];
        seen.insert((ix, iy));
        while let Some((cx, cy)) = stack.pop() {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = cx as i64 + dx;
                    let ny = cy as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= 20 || ny >= 20 {
                        continue;
                    }
                    let cell = (nx as usize, ny as usize);
                    if is_frontier_cell(map, cell.0, cell.1) && seen.insert(cell) {
                        stack.push(cell);
                    }
                }
            }
        }
        seen.len()
    }
}
