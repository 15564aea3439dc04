use crate::error::{Error, Result};

/// Dense row-major 2D grid of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidData("grid must be non-empty".into()));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a grid from nested rows. Panics on ragged input; meant for tests
    /// and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == width), "ragged rows");
        Grid::new(width, height, rows.concat()).expect("non-empty rows")
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Grid::new(width, height, data).expect("non-empty grid")
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Rotates the grid by 90° counter-clockwise.
    pub fn rotate90(&self) -> Grid {
        let (w, h) = (self.width, self.height);
        Grid::from_fn(h, w, |r, c| self.get(c, w - 1 - r))
    }

    /// Bilinear sample at fractional (row, col); coordinates are clamped to
    /// the grid.
    pub fn bilinear(&self, row: f64, col: f64) -> f64 {
        let r = row.clamp(0.0, (self.height - 1) as f64);
        let c = col.clamp(0.0, (self.width - 1) as f64);
        let r0 = r.floor() as usize;
        let c0 = c.floor() as usize;
        let r1 = (r0 + 1).min(self.height - 1);
        let c1 = (c0 + 1).min(self.width - 1);
        let fr = r - r0 as f64;
        let fc = c - c0 as f64;
        let top = self.get(r0, c0) * (1.0 - fc) + self.get(r0, c1) * fc;
        let bottom = self.get(r1, c0) * (1.0 - fc) + self.get(r1, c1) * fc;
        top * (1.0 - fr) + bottom * fr
    }

    /// Bilinear sample with mirror reflection at the borders.
    pub fn bilinear_reflect(&self, row: f64, col: f64) -> f64 {
        self.bilinear(
            reflect(row, self.height),
            reflect(col, self.width),
        )
    }

    /// Separable Gaussian smoothing with mirrored borders. `sigma <= 0` is a
    /// no-op.
    pub fn gaussian_blur(&self, sigma: f64) -> Grid {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let mut kernel: Vec<f64> = (-radius..=radius)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|k| *k /= total);

        let (w, h) = (self.width, self.height);
        let pass = |src: &Grid, horizontal: bool| {
            Grid::from_fn(w, h, |r, c| {
                kernel
                    .iter()
                    .zip(-radius..=radius)
                    .map(|(k, off)| {
                        let v = if horizontal {
                            src.get(r, reflect_index(c as isize + off, w))
                        } else {
                            src.get(reflect_index(r as isize + off, h), c)
                        };
                        k * v
                    })
                    .sum()
            })
        };
        pass(&pass(self, true), false)
    }
}

/// Mirrors a continuous coordinate into `[0, n - 1]`.
fn reflect(x: f64, n: usize) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let last = (n - 1) as f64;
    let period = 2.0 * last;
    let mut y = x.rem_euclid(period);
    if y > last {
        y = period - y;
    }
    y
}

fn reflect_index(i: isize, n: usize) -> usize {
    reflect(i as f64, n) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotate_four_times_is_identity() {
        let g = Grid::from_fn(3, 5, |r, c| (r * 10 + c) as f64);
        let back = g.rotate90().rotate90().rotate90().rotate90();
        assert_eq!(g, back);
        assert_eq!(g.rotate90().width(), 5);
    }

    #[test]
    fn bilinear_hits_grid_points() {
        let g = Grid::from_rows(&[&[0.0, 1.0], &[2.0, 3.0]]);
        assert_eq!(g.bilinear(0.0, 1.0), 1.0);
        assert_eq!(g.bilinear(0.5, 0.5), 1.5);
    }

    #[test]
    fn reflection_mirrors_without_repeating_edge() {
        assert_eq!(reflect(-1.0, 4), 1.0);
        assert_eq!(reflect(4.0, 4), 2.0);
        assert_eq!(reflect(2.5, 4), 2.5);
        assert_eq!(reflect(7.0, 1), 0.0);
    }

    #[test]
    fn blur_preserves_constants() {
        let g = Grid::filled(6, 5, 0.25);
        let b = g.gaussian_blur(1.3);
        assert!(b.data().iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(0, 3, vec![]).is_err());
        assert!(Grid::new(2, 2, vec![0.0; 3]).is_err());
    }
}
