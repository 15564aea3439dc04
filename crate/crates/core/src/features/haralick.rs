//! The fourteen Haralick statistics of a co-occurrence matrix.
//!
//! Gray levels are indexed from 0. Entropies use base-2 logarithms with
//! `0·log 0 = 0`. Each statistic is computed per direction and averaged; a
//! statistic that is undefined in any direction is reported as `None`.

use serde::{Deserialize, Serialize};

use super::eigen::symmetric_eigenvalues;
use super::glcm::Glcm;

pub const HARALICK_COUNT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaralickConfig {
    /// QL iteration budget for the maximal correlation coefficient.
    pub eigen_max_iterations: usize,
}

impl Default for HaralickConfig {
    fn default() -> Self {
        HaralickConfig {
            eigen_max_iterations: 10_000,
        }
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Statistics f1..f14 of a single matrix.
pub fn haralick_single(m: &Glcm, cfg: &HaralickConfig) -> [Option<f64>; HARALICK_COUNT] {
    let n = m.levels();
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut p_sum = vec![0.0; 2 * n - 1];
    let mut p_diff = vec![0.0; n];
    let (mut asm, mut idm, mut entropy, mut sum_ij) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let p = m.get(i, j);
            if p == 0.0 {
                continue;
            }
            px[i] += p;
            py[j] += p;
            p_sum[i + j] += p;
            p_diff[i.abs_diff(j)] += p;
            asm += p * p;
            let d = i as f64 - j as f64;
            idm += p / (1.0 + d * d);
            entropy -= plogp(p);
            sum_ij += (i * j) as f64 * p;
        }
    }

    let mean_of = |v: &[f64]| v.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>();
    let var_of = |v: &[f64], mu: f64| {
        v.iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mu).powi(2) * p)
            .sum::<f64>()
    };
    let entropy_of = |v: &[f64]| -v.iter().map(|&p| plogp(p)).sum::<f64>();

    let mu_x = mean_of(&px);
    let mu_y = mean_of(&py);
    let var_x = var_of(&px, mu_x);
    let var_y = var_of(&py, mu_y);
    let sd = (var_x * var_y).sqrt();

    let contrast: f64 = p_diff.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
    let correlation = (sd > 1e-15).then(|| (sum_ij - mu_x * mu_y) / sd);
    let sum_average = mean_of(&p_sum);
    let sum_variance = var_of(&p_sum, sum_average);
    let sum_entropy = entropy_of(&p_sum);
    let diff_variance = var_of(&p_diff, mean_of(&p_diff));
    let diff_entropy = entropy_of(&p_diff);

    let hx = entropy_of(&px);
    let hy = entropy_of(&py);
    let (mut hxy1, mut hxy2) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let q = px[i] * py[j];
            if q > 0.0 {
                hxy1 -= m.get(i, j) * q.log2();
                hxy2 -= q * q.log2();
            }
        }
    }
    let h_max = hx.max(hy);
    let imc1 = (h_max > 0.0).then(|| (entropy - hxy1) / h_max);
    let imc2 = (1.0 - (-2.0 * (hxy2 - entropy)).exp()).max(0.0).sqrt();

    [
        Some(asm),
        Some(contrast),
        correlation,
        Some(var_x),
        Some(idm),
        Some(sum_average),
        Some(sum_variance),
        Some(sum_entropy),
        Some(entropy),
        Some(diff_variance),
        Some(diff_entropy),
        imc1,
        Some(imc2),
        maximal_correlation(m, &px, &py, cfg),
    ]
}

/// Square root of the second-largest eigenvalue of
/// `Q(i,j) = Σ_k p(i,k) p(j,k) / (px(i) py(k))`, evaluated through the
/// similar symmetric matrix `A Aᵀ` with `A(i,k) = p(i,k) / sqrt(px(i) py(k))`
/// over occupied levels.
fn maximal_correlation(m: &Glcm, px: &[f64], py: &[f64], cfg: &HaralickConfig) -> Option<f64> {
    let rows: Vec<usize> = (0..px.len()).filter(|&i| px[i] > 0.0).collect();
    let cols: Vec<usize> = (0..py.len()).filter(|&k| py[k] > 0.0).collect();
    let d = rows.len();
    if d < 2 {
        return None;
    }
    let a: Vec<f64> = rows
        .iter()
        .flat_map(|&i| {
            cols.iter()
                .map(move |&k| m.get(i, k) / (px[i] * py[k]).sqrt())
        })
        .collect();
    let w = cols.len();
    let mut b = vec![0.0; d * d];
    for r in 0..d {
        for s in 0..=r {
            let v: f64 = (0..w).map(|k| a[r * w + k] * a[s * w + k]).sum();
            b[r * d + s] = v;
            b[s * d + r] = v;
        }
    }
    let mut eig = symmetric_eigenvalues(b, d, cfg.eigen_max_iterations)?;
    eig.sort_by(|x, y| y.total_cmp(x));
    let second = eig[1];
    second.is_finite().then(|| second.max(0.0).sqrt())
}

/// Direction-averaged statistics.
pub fn haralick_features(glcms: &[Glcm], cfg: &HaralickConfig) -> [Option<f64>; HARALICK_COUNT] {
    let per_dir: Vec<_> = glcms.iter().map(|g| haralick_single(g, cfg)).collect();
    std::array::from_fn(|k| {
        let mut acc = 0.0;
        for f in &per_dir {
            acc += f[k]?;
        }
        Some(acc / per_dir.len() as f64)
    })
}
