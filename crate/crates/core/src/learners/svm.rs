use serde::{Deserialize, Serialize};

use super::{check_training_input, train_fingerprint, Classifier, Model};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    /// RBF width; ignored by the linear kernel.
    pub gamma: f64,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            kernel: Kernel::Rbf,
            c: 1.0,
            gamma: 0.01,
            tolerance: 1e-3,
            max_iterations: 100_000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.kernel == Kernel::Rbf && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kernel {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf => {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-self.gamma * d).exp()
            }
        }
    }
}

/// Soft-margin SVM over standardized columns with Platt-scaled output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    pub feature_names: Vec<String>,
    pub column_means: Vec<f64>,
    pub column_stds: Vec<f64>,
    /// Standardized support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub converged: bool,
    pub iterations: usize,
    pub train_fingerprint: String,
}

impl SvmModel {
    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.column_means.iter().zip(&self.column_stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Signed distance-like score; positive favours the positive class.
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        let z = self.standardize(x);
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, c)| c * self.params.kernel(sv, &z))
            .sum::<f64>()
            + self.bias
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.feature_names.len();
        let ok = self.column_means.len() == p
            && self.column_stds.len() == p
            && self.column_stds.iter().all(|s| *s > 0.0)
            && self.support_vectors.len() == self.dual_coefficients.len()
            && self.support_vectors.iter().all(|v| v.len() == p);
        if !ok {
            return Err(Error::ModelFormat("inconsistent SVM model dimensions".into()));
        }
        Ok(())
    }
}

fn sigmoid_prob(f: f64, a: f64, b: f64) -> f64 {
    let t = a * f + b;
    if t >= 0.0 {
        (-t).exp() / (1.0 + (-t).exp())
    } else {
        1.0 / (1.0 + t.exp())
    }
}

impl Classifier for SvmModel {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        sigmoid_prob(self.decision_value(x), self.platt_a, self.platt_b)
    }

    fn to_model(&self) -> Option<Model> {
        Some(Model::Svm(self.clone()))
    }
}

/// Dual objective after each solver iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SvmTrace {
    pub dual_objective: Vec<f64>,
}

pub fn train_svm(
    x: &Matrix,
    y: &[bool],
    feature_names: &[String],
    params: &SvmParams,
) -> Result<SvmModel> {
    train_svm_traced(x, y, feature_names, params).map(|(m, _)| m)
}

/// Kernel rows of the signed Gram matrix `Q_ij = y_i y_j K(x_i, x_j)`,
/// precomputed when small enough.
struct Gram<'a> {
    z: &'a [Vec<f64>],
    s: &'a [f64],
    params: &'a SvmParams,
    full: Option<Vec<f64>>,
}

impl Gram<'_> {
    fn row(&self, i: usize) -> Vec<f64> {
        let n = self.z.len();
        match &self.full {
            Some(q) => q[i * n..(i + 1) * n].to_vec(),
            None => (0..n)
                .map(|j| self.s[i] * self.s[j] * self.params.kernel(&self.z[i], &self.z[j]))
                .collect(),
        }
    }
}

/// Trains with SMO using maximal-violating-pair selection with a
/// second-order choice of the partner, and records the dual objective.
/// Hitting `max_iterations` returns the model with `converged == false`.
pub fn train_svm_traced(
    x: &Matrix,
    y: &[bool],
    feature_names: &[String],
    params: &SvmParams,
) -> Result<(SvmModel, SvmTrace)> {
    params.validate()?;
    check_training_input(x, y, feature_names)?;
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::InvalidData("SVM training needs both classes".into()));
    }
    let n = x.rows();
    let p = x.cols();
    let mut means = vec![0.0; p];
    let mut stds = vec![0.0; p];
    for j in 0..p {
        let col = x.column(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        means[j] = m;
        stds[j] = if v > 0.0 { v.sqrt() } else { 1.0 };
    }
    let z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            x.row(i)
                .iter()
                .enumerate()
                .map(|(j, v)| (v - means[j]) / stds[j])
                .collect()
        })
        .collect();
    let s: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let full = (n * n <= 12_000_000).then(|| {
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = s[i] * s[j] * params.kernel(&z[i], &z[j]);
                q[i * n + j] = v;
                q[j * n + i] = v;
            }
        }
        q
    });
    let gram = Gram {
        z: &z,
        s: &s,
        params,
        full,
    };
    let diag: Vec<f64> = (0..n).map(|i| params.kernel(&z[i], &z[i])).collect();

    let c = params.c;
    let tau = 1e-12;
    let mut alpha = vec![0.0; n];
    // Gradient of 0.5 a'Qa - e'a.
    let mut grad = vec![-1.0; n];
    let mut trace = SvmTrace::default();
    let mut converged = false;
    let mut iterations = 0;

    let in_up = |a: f64, si: f64| (si > 0.0 && a < c) || (si < 0.0 && a > 0.0);
    let in_low = |a: f64, si: f64| (si > 0.0 && a > 0.0) || (si < 0.0 && a < c);

    while iterations < params.max_iterations {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], s[t]) {
                let v = -s[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if in_low(alpha[t], s[t]) {
                gmin = gmin.min(-s[t] * grad[t]);
            }
        }
        if i_sel == usize::MAX || gmax - gmin < params.tolerance {
            converged = true;
            break;
        }
        let i = i_sel;
        let q_i = gram.row(i);
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if in_low(alpha[t], s[t]) {
                let b = gmax + s[t] * grad[t];
                if b > 0.0 {
                    // K_ii + K_tt - 2 K_it, written via the signed Gram row.
                    let a = diag[i] + diag[t] - 2.0 * s[i] * s[t] * q_i[t];
                    let a = if a > 0.0 { a } else { tau };
                    let obj = -(b * b) / a;
                    if obj < best {
                        best = obj;
                        j_sel = t;
                    }
                }
            }
        }
        if j_sel == usize::MAX {
            converged = true;
            break;
        }
        let j = j_sel;
        let q_j = gram.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ai, aj) = pair_update(alpha[i], alpha[j], s[i], s[j], &q_i, &q_j, i, j, &grad, c, tau);
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += q_i[t] * di + q_j[t] * dj;
        }
        iterations += 1;
        let f: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() * 0.5;
        trace.dual_objective.push(-f);
    }
    if !converged {
        log::warn!(
            "SVM solver stopped at the iteration limit ({}) before reaching tolerance",
            params.max_iterations
        );
    }

    let rho = compute_rho(&alpha, &grad, &s, c);
    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(z[t].clone());
            dual_coefficients.push(alpha[t] * s[t]);
        }
    }
    let mut model = SvmModel {
        params: params.clone(),
        feature_names: feature_names.to_vec(),
        column_means: means,
        column_stds: stds,
        support_vectors,
        dual_coefficients,
        bias: -rho,
        platt_a: 0.0,
        platt_b: 0.0,
        converged,
        iterations,
        train_fingerprint: train_fingerprint(x, y),
    };
    let dec: Vec<f64> = (0..n).map(|t| model.decision_value(x.row(t))).collect();
    let (a, b) = platt(&dec, y);
    model.platt_a = a;
    model.platt_b = b;
    Ok((model, trace))
}

#[allow(clippy::too_many_arguments)]
fn pair_update(
    mut ai: f64,
    mut aj: f64,
    si: f64,
    sj: f64,
    q_i: &[f64],
    q_j: &[f64],
    i: usize,
    j: usize,
    grad: &[f64],
    c: f64,
    tau: f64,
) -> (f64, f64) {
    if si != sj {
        let mut quad = q_i[i] + q_j[j] + 2.0 * q_i[j];
        if quad <= 0.0 {
            quad = tau;
        }
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = ai - aj;
        ai += delta;
        aj += delta;
        if diff > 0.0 {
            if aj < 0.0 {
                aj = 0.0;
                ai = diff;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = -diff;
        }
        if diff > 0.0 {
            if ai > c {
                ai = c;
                aj = c - diff;
            }
        } else if aj > c {
            aj = c;
            ai = c + diff;
        }
    } else {
        let mut quad = q_i[i] + q_j[j] - 2.0 * q_i[j];
        if quad <= 0.0 {
            quad = tau;
        }
        let delta = (grad[i] - grad[j]) / quad;
        let sum = ai + aj;
        ai -= delta;
        aj += delta;
        if sum > c {
            if ai > c {
                ai = c;
                aj = sum - c;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > c {
            if aj > c {
                aj = c;
                ai = sum - c;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
    }
    (ai, aj)
}

/// Offset from free multipliers, or the middle of the feasible interval
/// when every multiplier is at a bound.
fn compute_rho(alpha: &[f64], grad: &[f64], s: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = s[t] * grad[t];
        if alpha[t] >= c {
            if s[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if s[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum += yg;
        }
    }
    if n_free > 0 {
        sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Fits `P(y=1|f) = 1 / (1 + exp(A f + B))` by Newton's method with
/// backtracking on regularized targets.
fn platt(dec: &[f64], y: &[bool]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&l| l).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y.iter().map(|&l| if l { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(f, ti)| {
                let v = f * a + b;
                if v >= 0.0 {
                    ti * v + (-v).exp().ln_1p()
                } else {
                    (ti - 1.0) * v + v.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (f, ti) in dec.iter().zip(&t) {
            let v = f * a + b;
            let (p, q) = if v >= 0.0 {
                let e = (-v).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = v.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    (a, b)
}
