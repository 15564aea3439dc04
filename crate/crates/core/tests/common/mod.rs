//! Naive reference implementations used as oracles by the integration tests.
//! They favour obviousness over speed and share no code with the library.

#![allow(dead_code)]

use std::collections::HashMap;

use texturekit::learners::{ForestModel, Tree, TreeNode};
use texturekit::Grid;

/// Population moments by explicit double loops over rows and columns.
pub fn first_order_oracle(g: &Grid) -> [f64; 4] {
    let (h, w) = (g.height(), g.width());
    let n = (h * w) as f64;
    let mut sum = 0.0;
    for r in 0..h {
        for c in 0..w {
            sum += g.get(r, c);
        }
    }
    let mean = sum / n;
    let moment = |k: i32| {
        let mut acc = 0.0;
        for r in 0..h {
            for c in 0..w {
                acc += (g.get(r, c) - mean).powi(k);
            }
        }
        acc / n
    };
    let var = moment(2);
    if var == 0.0 {
        return [mean, 0.0, 0.0, 0.0];
    }
    let sd = var.sqrt();
    [mean, sd, moment(3) / sd.powi(3), moment(4) / var.powi(2) - 3.0]
}

/// Gray level of each pixel: uniform bins over the patch's own range.
pub fn quantize_oracle(g: &Grid, levels: usize) -> Vec<Vec<usize>> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in g.data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (0..g.height())
        .map(|r| {
            (0..g.width())
                .map(|c| {
                    if hi == lo {
                        return 0;
                    }
                    let t = (g.get(r, c) - lo) / (hi - lo);
                    let k = (t * levels as f64).floor() as usize;
                    k.min(levels - 1)
                })
                .collect()
        })
        .collect()
}

/// Symmetric normalized co-occurrence matrix by enumerating every ordered
/// pixel pair and keeping those whose displacement is `±(dr, dc)`.
pub fn glcm_oracle(g: &Grid, levels: usize, dr: isize, dc: isize) -> Vec<Vec<f64>> {
    let q = quantize_oracle(g, levels);
    let (h, w) = (g.height() as isize, g.width() as isize);
    let mut m = vec![vec![0.0; levels]; levels];
    let mut total = 0.0;
    for r1 in 0..h {
        for c1 in 0..w {
            for r2 in 0..h {
                for c2 in 0..w {
                    let d = (r2 - r1, c2 - c1);
                    if d == (dr, dc) || d == (-dr, -dc) {
                        m[q[r1 as usize][c1 as usize]][q[r2 as usize][c2 as usize]] += 1.0;
                        total += 1.0;
                    }
                }
            }
        }
    }
    for row in &mut m {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    m
}

/// Image-axis offsets for 0°, 45°, 90° and 135° at distance 1 (rows grow
/// downward, so "up" is a negative row step).
pub const OFFSETS: [(isize, isize); 4] = [(0, 1), (-1, 1), (-1, 0), (-1, -1)];

fn xlog2(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Haralick f1..f13 written out term by term from the textbook formulas.
/// Gray levels are numbered from 0. Correlation is `None` when a marginal
/// has zero variance; IMC1 is `None` when both marginal entropies vanish.
pub fn haralick_oracle(p: &[Vec<f64>]) -> [Option<f64>; 13] {
    let n = p.len();
    let px: Vec<f64> = (0..n).map(|i| (0..n).map(|j| p[i][j]).sum()).collect();
    let py: Vec<f64> = (0..n).map(|j| (0..n).map(|i| p[i][j]).sum()).collect();
    let mut pxy_sum = vec![0.0; 2 * n - 1];
    let mut pxy_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            pxy_sum[i + j] += p[i][j];
            pxy_diff[(i as isize - j as isize).unsigned_abs()] += p[i][j];
        }
    }
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    let mut sum_ij = 0.0;
    let mut f5 = 0.0;
    let mut f9 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (fi, fj) = (i as f64, j as f64);
            f1 += p[i][j] * p[i][j];
            f2 += (fi - fj) * (fi - fj) * p[i][j];
            sum_ij += fi * fj * p[i][j];
            f5 += p[i][j] / (1.0 + (fi - fj) * (fi - fj));
            f9 -= xlog2(p[i][j]);
        }
    }
    let mux: f64 = (0..n).map(|i| i as f64 * px[i]).sum();
    let muy: f64 = (0..n).map(|j| j as f64 * py[j]).sum();
    let varx: f64 = (0..n).map(|i| (i as f64 - mux).powi(2) * px[i]).sum();
    let vary: f64 = (0..n).map(|j| (j as f64 - muy).powi(2) * py[j]).sum();
    let f3 = if varx > 0.0 && vary > 0.0 {
        Some((sum_ij - mux * muy) / (varx * vary).sqrt())
    } else {
        None
    };
    // Variance about the mean of the whole matrix, with the row and column
    // means equal for a symmetric matrix.
    let mut f4 = 0.0;
    for i in 0..n {
        for j in 0..n {
            f4 += (i as f64 - mux).powi(2) * p[i][j];
        }
    }
    let f6: f64 = (0..2 * n - 1).map(|k| k as f64 * pxy_sum[k]).sum();
    let f7: f64 = (0..2 * n - 1).map(|k| (k as f64 - f6).powi(2) * pxy_sum[k]).sum();
    let f8: f64 = -(0..2 * n - 1).map(|k| xlog2(pxy_sum[k])).sum::<f64>();
    let dmean: f64 = (0..n).map(|k| k as f64 * pxy_diff[k]).sum();
    let f10: f64 = (0..n).map(|k| (k as f64 - dmean).powi(2) * pxy_diff[k]).sum();
    let f11: f64 = -(0..n).map(|k| xlog2(pxy_diff[k])).sum::<f64>();
    let hx: f64 = -px.iter().map(|&v| xlog2(v)).sum::<f64>();
    let hy: f64 = -py.iter().map(|&v| xlog2(v)).sum::<f64>();
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let q = px[i] * py[j];
            if q > 0.0 {
                hxy1 -= p[i][j] * q.log2();
                hxy2 -= q * q.log2();
            }
        }
    }
    let hmax = hx.max(hy);
    let f12 = if hmax > 0.0 { Some((f9 - hxy1) / hmax) } else { None };
    let f13 = (1.0 - (-2.0 * (hxy2 - f9)).exp()).max(0.0).sqrt();
    [
        Some(f1),
        Some(f2),
        f3,
        Some(f4),
        Some(f5),
        Some(f6),
        Some(f7),
        Some(f8),
        Some(f9),
        Some(f10),
        Some(f11),
        f12,
        Some(f13),
    ]
}

/// Maximal correlation coefficient: square root of the second-largest
/// eigenvalue of the non-symmetric `Q` matrix, computed with a general
/// eigenvalue routine over occupied gray levels.
pub fn f14_oracle(p: &[Vec<f64>]) -> Option<f64> {
    let n = p.len();
    let px: Vec<f64> = (0..n).map(|i| p[i].iter().sum()).collect();
    let py: Vec<f64> = (0..n).map(|j| (0..n).map(|i| p[i][j]).sum()).collect();
    let occ: Vec<usize> = (0..n).filter(|&i| px[i] > 0.0).collect();
    let d = occ.len();
    if d < 2 {
        return None;
    }
    let q = nalgebra::DMatrix::from_fn(d, d, |a, b| {
        let (i, j) = (occ[a], occ[b]);
        (0..n)
            .filter(|&k| py[k] > 0.0)
            .map(|k| p[i][k] * p[j][k] / (px[i] * py[k]))
            .sum::<f64>()
    });
    let mut ev: Vec<f64> = q.complex_eigenvalues().iter().map(|z| z.re).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Some(ev[1].max(0.0).sqrt())
}

/// Bilinear read at fractional (row, col) with the four surrounding pixels.
fn bilinear(g: &Grid, y: f64, x: f64) -> f64 {
    let (r0, c0) = (y.floor(), x.floor());
    let (fy, fx) = (y - r0, x - c0);
    let (r0, c0) = (r0 as usize, c0 as usize);
    let at = |r: usize, c: usize| {
        if r < g.height() && c < g.width() {
            g.get(r, c)
        } else {
            0.0
        }
    };
    let top = at(r0, c0) * (1.0 - fx) + at(r0, c0 + 1) * fx;
    let bottom = at(r0 + 1, c0) * (1.0 - fx) + at(r0 + 1, c0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

fn circle_values(g: &Grid, r: usize, c: usize, points: usize, radius: f64) -> Vec<f64> {
    (0..points)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
            bilinear(g, r as f64 - radius * a.sin(), c as f64 + radius * a.cos())
        })
        .collect()
}

/// riu2 histogram by coding each pixel as an integer pattern, counting its
/// circular bit transitions with rotations, and binning.
pub fn riu2_oracle(g: &Grid, points: usize, radius: f64) -> Vec<f64> {
    let m = radius.ceil() as usize;
    let mut hist = vec![0.0; points + 2];
    let mut n = 0.0;
    for r in m..g.height() - m {
        for c in m..g.width() - m {
            let v = circle_values(g, r, c, points, radius);
            let centre = g.get(r, c);
            let mut code: u64 = 0;
            for (k, &x) in v.iter().enumerate() {
                if x >= centre {
                    code |= 1 << k;
                }
            }
            let mask = (1u64 << points) - 1;
            let rotated = ((code >> 1) | (code << (points - 1))) & mask;
            let u = (code ^ rotated).count_ones();
            let bin = if u <= 2 { code.count_ones() as usize } else { points + 1 };
            hist[bin] += 1.0;
            n += 1.0;
        }
    }
    hist.iter().map(|h| h / n).collect()
}

/// Local-variance histogram: population variance of each centre's circle,
/// binned by how many edges lie strictly below it.
pub fn var_hist_oracle(g: &Grid, points: usize, radius: f64, edges: &[f64]) -> Vec<f64> {
    let m = radius.ceil() as usize;
    let mut hist = vec![0.0; edges.len() + 1];
    let mut n = 0.0;
    for r in m..g.height() - m {
        for c in m..g.width() - m {
            let v = circle_values(g, r, c, points, radius);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
            hist[edges.iter().filter(|&&e| e < var).count()] += 1.0;
            n += 1.0;
        }
    }
    hist.iter().map(|h| h / n).collect()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half, by enumerating every pair.
pub fn auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / pairs
}

/// Expected tree output when only the features in `known` are fixed to
/// `x`; unknown splits average their children by training weight.
fn conditional(tree: &Tree, node: usize, x: &[f64], known: &[bool]) -> f64 {
    match &tree.nodes[node] {
        TreeNode::Leaf { probability, .. } => *probability,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            if known[*feature] {
                let next = if x[*feature] <= *threshold { *left } else { *right };
                conditional(tree, next, x, known)
            } else {
                let wl = tree.nodes[*left].n_samples();
                let wr = tree.nodes[*right].n_samples();
                (wl * conditional(tree, *left, x, known) + wr * conditional(tree, *right, x, known))
                    / (wl + wr)
            }
        }
    }
}

fn forest_conditional(m: &ForestModel, x: &[f64], known: &[bool]) -> f64 {
    m.trees.iter().map(|t| conditional(t, 0, x, known)).sum::<f64>() / m.trees.len() as f64
}

/// Shapley values of the forest's conditional-expectation game by
/// enumerating all coalitions. Returns (phi, base value).
pub fn shapley_oracle(m: &ForestModel, x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let fact: Vec<f64> = (0..=n).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    })
    .collect();
    let mut value: HashMap<u32, f64> = HashMap::new();
    for mask in 0..(1u32 << n) {
        let known: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        value.insert(mask, forest_conditional(m, x, &known));
    }
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in 0..(1u32 << n) {
            if mask >> i & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = fact[s] * fact[n - s - 1] / fact[n];
            *p += w * (value[&(mask | 1 << i)] - value[&mask]);
        }
    }
    (phi, value[&0])
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let mut ra: HashMap<usize, f64> = HashMap::new();
    let mut rb: HashMap<usize, f64> = HashMap::new();
    for k in 0..n {
        *table.entry((a[k], b[k])).or_default() += 1.0;
        *ra.entry(a[k]).or_default() += 1.0;
        *rb.entry(b[k]).or_default() += 1.0;
    }
    let c2 = |v: f64| v * (v - 1.0) / 2.0;
    let index: f64 = table.values().map(|&v| c2(v)).sum();
    let sa: f64 = ra.values().map(|&v| c2(v)).sum();
    let sb: f64 = rb.values().map(|&v| c2(v)).sum();
    let expected = sa * sb / c2(n as f64);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Uniform random 16x16 patch in [0, 1).
pub fn random_patch(seed: u64, size: usize) -> Grid {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Grid::from_fn(size, size, |_, _| rng.random::<f64>())
}
