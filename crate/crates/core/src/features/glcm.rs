use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Deg0,
        Direction::Deg45,
        Direction::Deg90,
        Direction::Deg135,
    ];

    /// (row, col) step for distance 1.
    pub fn step(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (0, 1),
            Direction::Deg45 => (-1, 1),
            Direction::Deg90 => (-1, 0),
            Direction::Deg135 => (-1, -1),
        }
    }
}

/// Normalized, symmetric gray-level co-occurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
}

impl Glcm {
    /// Wraps an explicit probability matrix. Must be square, symmetric,
    /// non-negative and sum to one.
    pub fn from_probabilities(levels: usize, p: Vec<f64>) -> Result<Self> {
        if levels == 0 || p.len() != levels * levels {
            return Err(Error::DimensionMismatch {
                expected: levels * levels,
                actual: p.len(),
            });
        }
        let total: f64 = p.iter().sum();
        let symmetric = (0..levels)
            .all(|i| (0..i).all(|j| (p[i * levels + j] - p[j * levels + i]).abs() <= 1e-12));
        if p.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-12 || !symmetric {
            return Err(Error::InvalidData(
                "co-occurrence matrix must be symmetric, non-negative and sum to 1".into(),
            ));
        }
        Ok(Glcm { levels, p })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

/// Uniform quantization over the grid's own `[min, max]`. Constant grids map
/// every pixel to level 0.
pub fn quantize(grid: &Grid, levels: usize) -> Vec<usize> {
    let (lo, hi) = grid.min_max();
    if hi <= lo {
        return vec![0; grid.data().len()];
    }
    let span = hi - lo;
    grid.data()
        .iter()
        .map(|&v| (((v - lo) / span * levels as f64) as usize).min(levels - 1))
        .collect()
}

fn accumulate(
    q: &[usize],
    width: usize,
    height: usize,
    levels: usize,
    distance: usize,
    direction: Direction,
) -> Result<Glcm> {
    let (sr, sc) = direction.step();
    let (dr, dc) = (sr * distance as isize, sc * distance as isize);
    let mut counts = vec![0u32; levels * levels];
    let mut pairs = 0u64;
    for r in 0..height as isize {
        let r2 = r + dr;
        if r2 < 0 || r2 >= height as isize {
            continue;
        }
        for c in 0..width as isize {
            let c2 = c + dc;
            if c2 < 0 || c2 >= width as isize {
                continue;
            }
            let a = q[(r * width as isize + c) as usize];
            let b = q[(r2 * width as isize + c2) as usize];
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::UnusablePatch(format!(
            "{width}x{height} grid has no pixel pair at distance {distance} along {direction:?}"
        )));
    }
    let total = (2 * pairs) as f64;
    Ok(Glcm {
        levels,
        p: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

pub fn compute_glcm(grid: &Grid, levels: usize, distance: usize, direction: Direction) -> Result<Glcm> {
    check_levels(levels, distance)?;
    let q = quantize(grid, levels);
    accumulate(&q, grid.width(), grid.height(), levels, distance, direction)
}

/// All four directions from a single quantization pass.
pub fn compute_glcms(grid: &Grid, levels: usize, distance: usize) -> Result<[Glcm; 4]> {
    check_levels(levels, distance)?;
    let q = quantize(grid, levels);
    let (w, h) = (grid.width(), grid.height());
    Ok([
        accumulate(&q, w, h, levels, distance, Direction::Deg0)?,
        accumulate(&q, w, h, levels, distance, Direction::Deg45)?,
        accumulate(&q, w, h, levels, distance, Direction::Deg90)?,
        accumulate(&q, w, h, levels, distance, Direction::Deg135)?,
    ])
}

fn check_levels(levels: usize, distance: usize) -> Result<()> {
    if levels < 2 {
        return Err(Error::Config(format!("need at least 2 gray levels, got {levels}")));
    }
    if distance == 0 {
        return Err(Error::Config("co-occurrence distance must be positive".into()));
    }
    Ok(())
}
