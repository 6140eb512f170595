//! Simulated 2D lidar.
//!
//! Beams are cast through the ground-truth grid with an integer voxel
//! traversal; the reported distance is the exact ray parameter at which the
//! beam crosses into the first occupied cell, so a wall face at 2 m reads
//! exactly 2 m under zero noise. Range noise and map updates are applied by
//! the SLAM layer, which owns the RNG; everything here is pure geometry.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::world::WorldModel;

#[derive(Debug, Clone, Copy)]
pub struct SensorModel {
    /// Field of view, centered on the robot heading.
    pub fov: f64,
    /// Maximum range in meters; beams are truncated here.
    pub range: f64,
    pub beams: usize,
    /// Additive Gaussian range noise (standard deviation, meters).
    pub sigma_r: f64,
    pub hit_log_odds: f64,
    pub miss_log_odds: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            fov: PI,
            range: 5.0,
            beams: 1500,
            sigma_r: 0.01,
            hit_log_odds: 0.85,
            miss_log_odds: -0.4,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov > 0.0 && self.fov <= 2.0 * PI) {
            return Err(Error::Config(format!("sensor fov must be in (0, 2pi], got {}", self.fov)));
        }
        if self.beams == 0 {
            return Err(Error::Config("sensor needs at least one beam".into()));
        }
        if !(self.sigma_r >= 0.0) {
            return Err(Error::Config(format!("sensor sigma_r must be >= 0, got {}", self.sigma_r)));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::Config(format!("sensor range must be positive, got {}", self.range)));
        }
        Ok(())
    }

    /// Beam directions for one scan, evenly spread over the fov around
    /// `heading` at bin midpoints (no duplicate beam at a full circle).
    pub fn beam_angles(&self, heading: f64) -> Vec<f64> {
        let b = self.beams as f64;
        (0..self.beams)
            .map(|i| heading - self.fov / 2.0 + self.fov * (i as f64 + 0.5) / b)
            .collect()
    }

    /// True distance along one beam, truncated at max range.
    pub fn cast_ray(&self, world: &WorldModel, x: f64, y: f64, angle: f64) -> RayHit {
        let mut result = RayHit { distance: self.range, hit: false };
        walk_ray(
            world.resolution(),
            (world.origin().x, world.origin().y),
            world.width(),
            world.height(),
            (x, y),
            angle,
            self.range,
            |ix, iy, t_entry| {
                if world.is_occupied(ix, iy) {
                    result = RayHit { distance: t_entry, hit: true };
                    false
                } else {
                    true
                }
            },
        );
        result
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    /// False when the beam reached max range without touching a wall.
    pub hit: bool,
}

/// One full sweep: per-beam measured range and whether a wall was struck,
/// indexed like [`SensorModel::beam_angles`].
#[derive(Debug, Clone)]
pub struct Scan {
    pub ranges: Vec<f64>,
    pub hits: Vec<bool>,
}

/// Visits grid cells pierced by a ray, in order, starting at the cell
/// containing `start` (entry parameter 0). Stops past `limit` meters, at the
/// grid edge, or when `visit` returns false.
pub fn walk_ray(
    resolution: f64,
    origin: (f64, f64),
    width: usize,
    height: usize,
    start: (f64, f64),
    angle: f64,
    limit: f64,
    mut visit: impl FnMut(usize, usize, f64) -> bool,
) {
    let (dx, dy) = (angle.cos(), angle.sin());
    let fx = (start.0 - origin.0) / resolution;
    let fy = (start.1 - origin.1) / resolution;
    if fx < 0.0 || fy < 0.0 {
        return;
    }
    let (mut ix, mut iy) = (fx.floor() as i64, fy.floor() as i64);
    if ix >= width as i64 || iy >= height as i64 {
        return;
    }
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    // Ray parameter at the next vertical/horizontal grid line.
    let mut t_max_x = if dx == 0.0 {
        f64::INFINITY
    } else {
        let next = origin.0 + (ix + i64::from(dx > 0.0)) as f64 * resolution;
        (next - start.0) / dx
    };
    let mut t_max_y = if dy == 0.0 {
        f64::INFINITY
    } else {
        let next = origin.1 + (iy + i64::from(dy > 0.0)) as f64 * resolution;
        (next - start.1) / dy
    };
    let t_delta_x = if dx == 0.0 { f64::INFINITY } else { resolution / dx.abs() };
    let t_delta_y = if dy == 0.0 { f64::INFINITY } else { resolution / dy.abs() };
    let mut t = 0.0;
    loop {
        if !visit(ix as usize, iy as usize, t) {
            return;
        }
        if t_max_x < t_max_y {
            t = t_max_x;
            t_max_x += t_delta_x;
            ix += step_x;
        } else {
            t = t_max_y;
            t_max_y += t_delta_y;
            iy += step_y;
        }
        if t > limit || ix < 0 || iy < 0 || ix >= width as i64 || iy >= height as i64 {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn corridor() -> WorldModel {
        // Free span x in [0.5, 2.5); wall face of the right wall at x = 2.5.
        WorldModel::parse("resolution 0.5\n######\n#....#\n######\n").unwrap()
    }

    #[test]
    fn straight_beam_reads_wall_face_distance() {
        let w = corridor();
        let s = SensorModel { sigma_r: 0.0, ..Default::default() };
        let hit = s.cast_ray(&w, 0.5, 0.75, 0.0);
        assert!(hit.hit);
        assert_abs_diff_eq!(hit.distance, 2.0, epsilon = 1e-12);
        // Backwards into the left wall, face at x = 0.5.
        let hit = s.cast_ray(&w, 0.7, 0.75, PI);
        assert!(hit.hit);
        assert_abs_diff_eq!(hit.distance, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn vertical_beam_handles_zero_direction_component() {
        let w = corridor();
        let s = SensorModel::default();
        let hit = s.cast_ray(&w, 1.2, 0.75, PI / 2.0);
        assert!(hit.hit);
        assert_abs_diff_eq!(hit.distance, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn beam_truncates_at_max_range() {
        let w = corridor();
        let s = SensorModel { range: 1.0, ..Default::default() };
        let hit = s.cast_ray(&w, 0.6, 0.75, 0.0);
        assert!(!hit.hit);
        assert_abs_diff_eq!(hit.distance, 1.0);
    }

    #[test]
    fn diagonal_beam_distance() {
        let big = "resolution 1\n######\n#....#\n#....#\n#....#\n#....#\n######\n";
        let w = WorldModel::parse(big).unwrap();
        let s = SensorModel { range: 10.0, ..Default::default() };
        // From (1.5, 1.5) at 45 degrees: crosses into the top wall cell row
        // (iy = 5, y = 5.0) at t = 3.5 * sqrt(2).
        let hit = s.cast_ray(&w, 1.5, 1.5, PI / 4.0);
        assert!(hit.hit);
        assert_abs_diff_eq!(hit.distance, 3.5 * 2.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn walk_ray_visits_cells_in_order() {
        let mut cells = Vec::new();
        walk_ray(1.0, (0.0, 0.0), 5, 5, (0.5, 0.5), 0.0, 3.2, |ix, iy, t| {
            cells.push((ix, iy, t));
            true
        });
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[0].0, cells[0].1), (0, 0));
        assert_eq!((cells[3].0, cells[3].1), (3, 0));
        assert_abs_diff_eq!(cells[1].2, 0.5);
        assert_abs_diff_eq!(cells[3].2, 2.5);
    }

    #[test]
    fn beam_angles_span_fov_symmetrically() {
        let s = SensorModel { beams: 4, fov: PI, ..Default::default() };
        let a = s.beam_angles(0.0);
        assert_eq!(a.len(), 4);
        assert_abs_diff_eq!(a[0], -PI / 2.0 + PI / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[3], PI / 2.0 - PI / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[0] + a[3], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn validation_rejects_bad_models() {
        assert!(SensorModel::default().validate().is_ok());
        assert!(SensorModel { fov: 0.0, ..Default::default() }.validate().is_err());
        assert!(SensorModel { fov: 7.0, ..Default::default() }.validate().is_err());
        assert!(SensorModel { beams: 0, ..Default::default() }.validate().is_err());
        assert!(SensorModel { sigma_r: -1.0, ..Default::default() }.validate().is_err());
        assert!(SensorModel { range: 0.0, ..Default::default() }.validate().is_err());
    }
}
