use crate::grid::Grid;

/// Population mean, standard deviation, skewness and excess kurtosis.
/// Skewness and kurtosis are 0 for a constant grid.
pub fn first_order(grid: &Grid) -> [f64; 4] {
    let data = grid.data();
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in data {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    if std == 0.0 {
        return [mean, 0.0, 0.0, 0.0];
    }
    [mean, std, m3 / (m2 * std), m4 / (m2 * m2) - 3.0]
}
