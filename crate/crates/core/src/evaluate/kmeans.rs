use rand::Rng;
use serde::{Deserialize, Serialize};

use super::summary::MetricSummary;
use crate::error::{Error, Result};
use crate::rng::rng_for;

pub const KMEANS_RESTARTS: usize = 20;
const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, centers.last().unwrap()));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansFit {
    let n = points.len();
    let k = centers.len();
    let dim = points[0].len();
    let mut assign = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, d) = centers
                .iter()
                .enumerate()
                .map(|(c, ctr)| (c, dist2(p, ctr)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
            inertia += d;
        }
        // Re-seed empty clusters with the point farthest from its centroid.
        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let (far, d) = (0..n)
                    .filter(|&i| counts[assign[i]] > 1)
                    .map(|i| (i, dist2(&points[i], &centers[assign[i]])))
                    .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                if far == usize::MAX {
                    continue;
                }
                counts[assign[far]] -= 1;
                assign[far] = c;
                counts[c] = 1;
                centers[c] = points[far].clone();
                inertia -= d;
                changed = true;
            }
        }
        trace.push(inertia);
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&assign) {
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&assign)
        .map(|(p, &a)| dist2(p, &centers[a]))
        .sum();
    KMeansFit {
        assignments: assign,
        centroids: centers,
        inertia,
        inertia_trace: trace,
    }
}

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// inertia (first run wins ties).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidData(format!(
            "{} points cannot form {k} clusters",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidData("points must be finite and of equal dimension".into()));
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) {
        let mut rng = rng_for(seed, &[r as u64]);
        let fit = lloyd(points, plus_plus_init(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigCluster {
    pub config_ids: Vec<String>,
    pub assignments: Vec<usize>,
    /// Centroids in standardized metric space.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

/// Clusters configurations by their five metric means, each dimension
/// standardized to zero mean and unit variance (constant dimensions map
/// to 0).
pub fn cluster_configs(summaries: &[MetricSummary], k: usize, seed: u64) -> Result<ConfigCluster> {
    let raw: Vec<[f64; 5]> = summaries.iter().map(MetricSummary::means).collect();
    let n = raw.len() as f64;
    let mut points: Vec<Vec<f64>> = raw.iter().map(|r| r.to_vec()).collect();
    for d in 0..5 {
        let mean = raw.iter().map(|r| r[d]).sum::<f64>() / n;
        let sd = (raw.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for p in &mut points {
            p[d] = if sd > 0.0 { (p[d] - mean) / sd } else { 0.0 };
        }
    }
    let fit = kmeans(&points, k, seed, KMEANS_RESTARTS)?;
    Ok(ConfigCluster {
        config_ids: summaries.iter().map(|s| s.config_id.clone()).collect(),
        assignments: fit.assignments,
        centroids: fit.centroids,
        inertia: fit.inertia,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 1.0]).collect();
        let f = kmeans(&pts, 1, 0, 3).unwrap();
        assert!(f.assignments.iter().all(|&a| a == 0));
        assert!((f.centroids[0][0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn duplicates_cost_nothing() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![5.0, 5.0], vec![5.0, 5.0]];
        let f = kmeans(&pts, 2, 1, 5).unwrap();
        assert_eq!(f.inertia, 0.0);
        assert_eq!(f.assignments[0], f.assignments[1]);
        assert_ne!(f.assignments[0], f.assignments[2]);
    }

    #[test]
    fn inertia_never_increases() {
        let mut rng = rng_for(3, &[]);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        for seed in 0..10 {
            let f = kmeans(&pts, 5, seed, 1).unwrap();
            assert!(f.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn too_few_points() {
        assert!(kmeans(&[vec![1.0]], 2, 0, 1).is_err());
    }

    #[test]
    fn identical_points_fill_every_cluster() {
        let pts = vec![vec![1.0]; 4];
        let f = kmeans(&pts, 3, 0, 2).unwrap();
        let mut seen = f.assignments.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 3);
    }
}
