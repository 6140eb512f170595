//! Log-odds occupancy grid built from range observations.
//!
//! Each cell holds a clamped log-odds value; classification into
//! free/occupied/unknown uses a symmetric threshold equivalent to an
//! occupancy probability of 0.65. Unknown is the entire band in between,
//! so a single miss (-0.4) does not yet mark a cell free.

use crate::error::{Error, Result};
use crate::se2::Pose2;

/// ln(0.65 / 0.35): a cell is known once its evidence passes this magnitude.
pub const OCCUPANCY_THRESHOLD: f64 = 0.6190392084062235;

/// Log-odds saturation bound; keeps cells revisable after long observation.
pub const LOG_ODDS_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Pose2,
    log_odds: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, origin: Pose2) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config("occupancy grid must be non-empty".into()));
        }
        if !resolution.is_finite() || resolution <= 0.0 {
            return Err(Error::Config(format!("bad grid resolution {resolution}")));
        }
        Ok(Self { width, height, resolution, origin, log_odds: vec![0.0; width * height] })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Pose2 {
        self.origin
    }

    /// Cell containing the world point, or None outside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let cx = (x - self.origin.x) / self.resolution;
        let cy = (y - self.origin.y) / self.resolution;
        if cx < 0.0 || cy < 0.0 {
            return None;
        }
        let (ix, iy) = (cx.floor() as usize, cy.floor() as usize);
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    pub fn center_of(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn log_odds(&self, ix: usize, iy: usize) -> f64 {
        self.log_odds[iy * self.width + ix]
    }

    /// Adds evidence to one cell, saturating at the log-odds limit.
    pub fn update(&mut self, ix: usize, iy: usize, delta: f64) {
        let v = &mut self.log_odds[iy * self.width + ix];
        *v = (*v + delta).clamp(-LOG_ODDS_LIMIT, LOG_ODDS_LIMIT);
    }

    pub fn state(&self, ix: usize, iy: usize) -> CellState {
        classify(self.log_odds[iy * self.width + ix])
    }

    pub fn in_bounds(&self, ix: usize, iy: usize) -> bool {
        ix < self.width && iy < self.height
    }

    /// All evidence wiped back to unknown; used when the map is rebuilt from
    /// stored scans after pose corrections.
    pub fn reset(&mut self) {
        self.log_odds.fill(0.0);
    }

    pub fn known_cell_count(&self) -> usize {
        self.log_odds.iter().filter(|&&v| classify(v) != CellState::Unknown).count()
    }

    /// Area (square meters) of cells classified either free or occupied.
    pub fn known_area(&self) -> f64 {
        self.known_cell_count() as f64 * self.resolution * self.resolution
    }

    pub fn states(&self) -> impl Iterator<Item = ((usize, usize), CellState)> + '_ {
        let w = self.width;
        self.log_odds
            .iter()
            .enumerate()
            .map(move |(i, &v)| ((i % w, i / w), classify(v)))
    }
}

fn classify(log_odds: f64) -> CellState {
    if log_odds > OCCUPANCY_THRESHOLD {
        CellState::Occupied
    } else if log_odds < -OCCUPANCY_THRESHOLD {
        CellState::Free
    } else {
        CellState::Unknown
    }
}
