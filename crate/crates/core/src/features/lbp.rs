//! Rotation-invariant uniform local binary patterns plus a quantized local
//! variance histogram.
//!
//! Circular neighbours sit at angle `2πp/P` and radius `R` around each centre
//! and are read with bilinear interpolation. Only centres whose full
//! neighbourhood lies inside the grid contribute.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub points: usize,
    pub radius: f64,
}

impl Circle {
    pub fn riu2_bins(&self) -> usize {
        self.points + 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbpConfig {
    pub small: Circle,
    pub large: Circle,
    /// Neighbourhood used for the local variance measure.
    pub variance: Circle,
    pub variance_bins: usize,
}

impl Default for LbpConfig {
    fn default() -> Self {
        LbpConfig {
            small: Circle { points: 8, radius: 1.0 },
            large: Circle { points: 16, radius: 2.0 },
            variance: Circle { points: 8, radius: 1.0 },
            variance_bins: 7,
        }
    }
}

impl LbpConfig {
    pub fn len(&self) -> usize {
        self.small.riu2_bins() + self.large.riu2_bins() + self.variance_bins
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        for c in [self.small, self.large, self.variance] {
            if c.points < 2 || c.points > 32 || !(c.radius > 0.0) {
                return Err(Error::Config(format!(
                    "LBP circle needs 2..=32 points and positive radius, got {c:?}"
                )));
            }
        }
        if self.variance_bins == 0 {
            return Err(Error::Config("variance histogram needs at least one bin".into()));
        }
        Ok(())
    }
}

/// Precomputed bilinear taps for one neighbour, relative to the centre.
#[derive(Debug, Clone, Copy)]
struct Tap {
    row: isize,
    col: isize,
    frac_row: f64,
    frac_col: f64,
}

/// Snaps to a 1e-12 lattice so that offsets related by 90° rotations are
/// bit-identical.
fn snap(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

fn taps(circle: Circle) -> Vec<Tap> {
    (0..circle.points)
        .map(|p| {
            let theta = 2.0 * std::f64::consts::PI * p as f64 / circle.points as f64;
            let dr = snap(-circle.radius * theta.sin());
            let dc = snap(circle.radius * theta.cos());
            let (r0, c0) = (dr.floor(), dc.floor());
            Tap {
                row: r0 as isize,
                col: c0 as isize,
                frac_row: dr - r0,
                frac_col: dc - c0,
            }
        })
        .collect()
}

struct Sampler<'a> {
    grid: &'a Grid,
    taps: Vec<Tap>,
    margin: usize,
}

impl<'a> Sampler<'a> {
    fn new(grid: &'a Grid, circle: Circle) -> Result<Self> {
        let margin = circle.radius.ceil() as usize;
        if grid.width() <= 2 * margin || grid.height() <= 2 * margin {
            return Err(Error::UnusablePatch(format!(
                "{}x{} grid too small for LBP radius {}",
                grid.width(),
                grid.height(),
                circle.radius
            )));
        }
        Ok(Sampler {
            grid,
            taps: taps(circle),
            margin,
        })
    }

    fn centres(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (m, w, h) = (self.margin, self.grid.width(), self.grid.height());
        (m..h - m).flat_map(move |r| (m..w - m).map(move |c| (r, c)))
    }

    fn neighbours(&self, r: usize, c: usize, out: &mut Vec<f64>) {
        out.clear();
        let g = self.grid;
        for t in &self.taps {
            let r0 = (r as isize + t.row) as usize;
            let c0 = (c as isize + t.col) as usize;
            let mut top = g.get(r0, c0);
            if t.frac_col > 0.0 {
                top = top * (1.0 - t.frac_col) + g.get(r0, c0 + 1) * t.frac_col;
            }
            let v = if t.frac_row > 0.0 {
                let mut bottom = g.get(r0 + 1, c0);
                if t.frac_col > 0.0 {
                    bottom = bottom * (1.0 - t.frac_col) + g.get(r0 + 1, c0 + 1) * t.frac_col;
                }
                top * (1.0 - t.frac_row) + bottom * t.frac_row
            } else {
                top
            };
            out.push(v);
        }
    }
}

/// riu2 code: number of set bits for uniform patterns (at most two circular
/// 0/1 transitions), `P + 1` otherwise.
pub fn riu2_code(neighbours: &[f64], centre: f64) -> usize {
    let bits: Vec<bool> = neighbours.iter().map(|&v| v >= centre).collect();
    let p = bits.len();
    let transitions = (0..p).filter(|&i| bits[i] != bits[(i + p - 1) % p]).count();
    if transitions <= 2 {
        bits.iter().filter(|&&b| b).count()
    } else {
        p + 1
    }
}

/// Normalized riu2 histogram with `P + 2` bins.
pub fn riu2_histogram(grid: &Grid, circle: Circle) -> Result<Vec<f64>> {
    let sampler = Sampler::new(grid, circle)?;
    let mut hist = vec![0.0; circle.riu2_bins()];
    let mut buf = Vec::with_capacity(circle.points);
    let mut n = 0usize;
    for (r, c) in sampler.centres() {
        sampler.neighbours(r, c, &mut buf);
        hist[riu2_code(&buf, grid.get(r, c))] += 1.0;
        n += 1;
    }
    hist.iter_mut().for_each(|h| *h /= n as f64);
    Ok(hist)
}

/// Population variance of the circular neighbours of every valid centre.
pub fn local_variances(grid: &Grid, circle: Circle) -> Result<Vec<f64>> {
    let sampler = Sampler::new(grid, circle)?;
    let mut buf = Vec::with_capacity(circle.points);
    Ok(sampler
        .centres()
        .map(|(r, c)| {
            sampler.neighbours(r, c, &mut buf);
            let mean = buf.iter().sum::<f64>() / buf.len() as f64;
            buf.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / buf.len() as f64
        })
        .collect())
}

/// Bin index: the number of edges strictly below `v`.
pub fn variance_bin(v: f64, edges: &[f64]) -> usize {
    edges.partition_point(|&e| e < v)
}

pub fn variance_histogram(grid: &Grid, circle: Circle, edges: &[f64]) -> Result<Vec<f64>> {
    let vars = local_variances(grid, circle)?;
    let mut hist = vec![0.0; edges.len() + 1];
    for &v in &vars {
        hist[variance_bin(v, edges)] += 1.0;
    }
    hist.iter_mut().for_each(|h| *h /= vars.len() as f64);
    Ok(hist)
}

/// Interior quantile edges (`bins - 1` of them) of pooled variance values,
/// linear interpolation between order statistics.
pub fn quantile_edges(mut values: Vec<f64>, bins: usize) -> Vec<f64> {
    if values.is_empty() {
        return vec![0.0; bins.saturating_sub(1)];
    }
    values.sort_by(f64::total_cmp);
    let last = (values.len() - 1) as f64;
    (1..bins)
        .map(|k| {
            let pos = last * k as f64 / bins as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let t = pos - lo as f64;
            values[lo] * (1.0 - t) + values[hi] * t
        })
        .collect()
}

/// The full LBP block: small-circle riu2, large-circle riu2, variance
/// histogram over `edges`.
pub fn lbp_features(grid: &Grid, config: &LbpConfig, edges: &[f64]) -> Result<Vec<f64>> {
    if edges.len() + 1 != config.variance_bins {
        return Err(Error::Config(format!(
            "{} variance edges given for {} bins",
            edges.len(),
            config.variance_bins
        )));
    }
    let mut out = riu2_histogram(grid, config.small)?;
    out.extend(riu2_histogram(grid, config.large)?);
    out.extend(variance_histogram(grid, config.variance, edges)?);
    Ok(out)
}
