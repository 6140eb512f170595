//! Ground-truth occupancy worlds.
//!
//! A world is a closed boolean grid loaded from ASCII: the first line is
//! `resolution <meters>`, every following line one row of `#` (occupied) and
//! `.` (free), the first text row being the top of the world. Cell (ix, iy)
//! covers [ix*res, (ix+1)*res) x [iy*res, (iy+1)*res) past the origin, which
//! is the bottom-left corner; iy counts upward. The outer border must be
//! fully occupied so every beam terminates and nothing "escapes" the arena.

use std::path::Path;

use crate::error::{Error, Result};
use crate::se2::Pose2;

pub const BUNDLED_WORLDS: &[(&str, &str)] = &[
    (
        "closed_rooms_small",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/worlds/closed_rooms_small.world")),
    ),
    (
        "closed_maze",
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/worlds/closed_maze.world")),
    ),
];

#[derive(Debug, Clone)]
pub struct WorldModel {
    resolution: f64,
    origin: Pose2,
    width: usize,
    height: usize,
    occupied: Vec<bool>,
}

impl WorldModel {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty world file".into()))?;
        let mut parts = header.split_whitespace();
        let resolution = match (parts.next(), parts.next(), parts.next()) {
            (Some("resolution"), Some(v), None) => v
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad resolution value {v:?}")))?,
            _ => {
                return Err(Error::Parse(format!(
                    "first line must be `resolution <m>`, got {header:?}"
                )))
            }
        };
        if !resolution.is_finite() || resolution <= 0.0 {
            return Err(Error::Parse(format!("resolution must be positive, got {resolution}")));
        }
        let rows: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::Parse("world has no grid rows".into()));
        }
        let width = rows[0].len();
        let height = rows.len();
        let mut occupied = vec![false; width * height];
        for (j, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Parse(format!(
                    "row {} has {} cells, expected {width}",
                    j + 2,
                    row.len()
                )));
            }
            let iy = height - 1 - j; // first text row is the top
            for (ix, c) in row.chars().enumerate() {
                occupied[iy * width + ix] = match c {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(Error::Parse(format!(
                            "row {}: unexpected character {other:?}",
                            j + 2
                        )))
                    }
                };
            }
        }
        let world = Self { resolution, origin: Pose2::identity(), width, height, occupied };
        for ix in 0..width {
            if !world.is_occupied(ix, 0) || !world.is_occupied(ix, height - 1) {
                return Err(Error::Parse("world boundary is not closed".into()));
            }
        }
        for iy in 0..height {
            if !world.is_occupied(0, iy) || !world.is_occupied(width - 1, iy) {
                return Err(Error::Parse("world boundary is not closed".into()));
            }
        }
        if !world.occupied.iter().any(|&o| !o) {
            return Err(Error::Parse("world has no free cells".into()));
        }
        Ok(world)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Worlds compiled into the library, addressable by bare name.
    pub fn bundled(name: &str) -> Result<Self> {
        BUNDLED_WORLDS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text).expect("bundled worlds are valid"))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown bundled world {name:?}; available: {}",
                    BUNDLED_WORLDS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
                ))
            })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Pose2 {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[iy * self.width + ix]
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

    pub fn size_meters(&self) -> (f64, f64) {
        (self.width as f64 * self.resolution, self.height as f64 * self.resolution)
    }

    pub fn free_area(&self) -> f64 {
        let free = self.occupied.iter().filter(|&&o| !o).count();
        free as f64 * self.resolution * self.resolution
    }

    /// Free cell nearest to the world point, scanning outward ring by ring;
    /// ties broken by lower (iy, ix). None if the world has no free cell in
    /// range (cannot happen for valid worlds).
    pub fn nearest_free_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let cx = ((x - self.origin.x) / self.resolution).floor() as i64;
        let cy = ((y - self.origin.y) / self.resolution).floor() as i64;
        let max_r = self.width.max(self.height) as i64;
        for r in 0..=max_r {
            let mut best: Option<(i64, usize, usize)> = None;
            let mut consider = |ix: i64, iy: i64| {
                if ix < 0 || iy < 0 || ix >= self.width as i64 || iy >= self.height as i64 {
                    return;
                }
                let (ux, uy) = (ix as usize, iy as usize);
                if self.is_occupied(ux, uy) {
                    return;
                }
                let d2 = (ix - cx).pow(2) + (iy - cy).pow(2);
                let cand = (d2, uy, ux);
                if best.map_or(true, |(bd, by, bx)| cand < (bd, by, bx)) {
                    best = Some(cand);
                }
            };
            if r == 0 {
                consider(cx, cy);
            } else {
                for dx in -r..=r {
                    consider(cx + dx, cy - r);
                    consider(cx + dx, cy + r);
                }
                for dy in (-r + 1)..r {
                    consider(cx - r, cy + dy);
                    consider(cx + r, cy + dy);
                }
            }
            if let Some((_, uy, ux)) = best {
                return Some((ux, uy));
            }
        }
        None
    }

    /// 4-connected flood fill over free cells from `from`. Entry per cell:
    /// true iff reachable.
    pub fn reachable_mask(&self, from: (usize, usize)) -> Vec<bool> {
        let mut mask = vec![false; self.occupied.len()];
        if self.is_occupied(from.0, from.1) {
            return mask;
        }
        let mut queue = std::collections::VecDeque::new();
        mask[from.1 * self.width + from.0] = true;
        queue.push_back(from);
        while let Some((ix, iy)) = queue.pop_front() {
            let neighbors = [
                (ix.wrapping_sub(1), iy),
                (ix + 1, iy),
                (ix, iy.wrapping_sub(1)),
                (ix, iy + 1),
            ];
            for (nx, ny) in neighbors {
                if nx >= self.width || ny >= self.height {
                    continue;
                }
                let idx = ny * self.width + nx;
                if !mask[idx] && !self.occupied[idx] {
                    mask[idx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
        mask
    }

    /// Cells a robot starting at `from` could ever come to know: reachable
    /// free cells plus occupied cells 8-adjacent to one (observable walls).
    /// This is the coverage denominator.
    pub fn observable_mask(&self, from: (usize, usize)) -> Vec<bool> {
        let reachable = self.reachable_mask(from);
        let mut mask = reachable.clone();
        for iy in 0..self.height {
            for ix in 0..self.width {
                if !self.is_occupied(ix, iy) {
                    continue;
                }
                // Adjacency is tested against reachable free space only, so
                // wall interiors cannot chain off an already marked wall cell.
                'adj: for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (ix as i64 + dx, iy as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
                            continue;
                        }
                        if reachable[ny as usize * self.width + nx as usize] {
                            mask[iy * self.width + ix] = true;
                            break 'adj;
                        }
                    }
                }
            }
        }
        mask
    }

    pub fn observable_cell_count(&self, from: (usize, usize)) -> usize {
        self.observable_mask(from).iter().filter(|&&m| m).count()
    }

    /// Exact Euclidean distance (meters) from every cell center to the
    /// nearest occupied cell center.
    pub fn occupied_distance_field(&self) -> Vec<f64> {
        squared_cell_distances(self.width, self.height, &self.occupied)
            .iter()
            .map(|&d2| d2.sqrt() * self.resolution)
            .collect()
    }
}

/// Squared Euclidean distance (in cell units) from every cell center to the
/// nearest seed cell center, via the two-pass squared distance transform
/// (lower envelope of parabolas per column, then per row). Cells with no
/// seed anywhere keep a huge sentinel value.
pub(crate) fn squared_cell_distances(w: usize, h: usize, seed: &[bool]) -> Vec<f64> {
    const FAR: f64 = 1e20;
    let mut field: Vec<f64> = seed.iter().map(|&s| if s { 0.0 } else { FAR }).collect();
    let mut scratch = vec![0.0f64; w.max(h)];
    for ix in 0..w {
        for iy in 0..h {
            scratch[iy] = field[iy * w + ix];
        }
        let col = dt_1d(&scratch[..h]);
        for iy in 0..h {
            field[iy * w + ix] = col[iy];
        }
    }
    for iy in 0..h {
        scratch[..w].copy_from_slice(&field[iy * w..(iy + 1) * w]);
        let row = dt_1d(&scratch[..w]);
        field[iy * w..(iy + 1) * w].copy_from_slice(&row);
    }
    field
}

/// 1D squared distance transform of sampled function f (lower envelope).
fn dt_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0f64; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let sq = (q * q) as f64;
        loop {
            let p = v[k];
            let s = (f[q] + sq - f[p] - (p * p) as f64) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        d[q] = (q as f64 - p as f64).powi(2) + f[p];
    }
    d
}
