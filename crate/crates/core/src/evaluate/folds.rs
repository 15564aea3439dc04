use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::patchio::Dataset;
use crate::rng::rng_for;

/// Patient-grouped fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// Patient ids per fold, sorted within each fold.
    pub folds: Vec<Vec<String>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn assignments(&self) -> HashMap<&str, usize> {
        self.folds
            .iter()
            .enumerate()
            .flat_map(|(f, ps)| ps.iter().map(move |p| (p.as_str(), f)))
            .collect()
    }

    pub fn fold_of(&self, patient: &str) -> Option<usize> {
        self.folds.iter().position(|ps| ps.iter().any(|p| p == patient))
    }
}

/// Shuffles patients with `seed`, then deals positive patients round-robin
/// over the folds and continues the same rotation with negative patients.
/// Fold sizes differ by at most one patient, and so do per-fold positive
/// counts. A patient counts as positive if any of their samples is.
pub fn make_folds_for(patients: &[(String, bool)], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut status: BTreeMap<&str, bool> = BTreeMap::new();
    for (p, pos) in patients {
        *status.entry(p.as_str()).or_insert(false) |= *pos;
    }
    if status.len() < k {
        return Err(Error::InvalidData(format!(
            "{} patients cannot fill {k} folds",
            status.len()
        )));
    }
    if status.values().all(|&p| p) || status.values().all(|&p| !p) {
        return Err(Error::InvalidData("fold plan needs patients of both classes".into()));
    }
    let mut order: Vec<(&str, bool)> = status.into_iter().collect();
    order.shuffle(&mut rng_for(seed, &[0xF01D]));
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for want in [true, false] {
        for (p, _) in order.iter().filter(|(_, pos)| *pos == want) {
            folds[next % k].push(p.to_string());
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort();
    }
    Ok(FoldPlan { folds })
}

pub fn make_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let ps: Vec<(String, bool)> = d
        .samples
        .iter()
        .map(|s| (s.patient_id().to_owned(), s.label().is_positive()))
        .collect();
    make_folds_for(&ps, k, seed)
}

pub fn make_folds_table(t: &FeatureTable, k: usize, seed: u64) -> Result<FoldPlan> {
    let ps: Vec<(String, bool)> = t
        .rows
        .iter()
        .map(|r| (r.patient_id.clone(), r.label.is_positive()))
        .collect();
    make_folds_for(&ps, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patients(n: usize, pos_every: usize) -> Vec<(String, bool)> {
        (0..n).map(|i| (format!("p{i:02}"), i % pos_every == 0)).collect()
    }

    #[test]
    fn ten_patients_five_folds() {
        let plan = make_folds_for(&patients(10, 2), 5, 1).unwrap();
        assert!(plan.folds.iter().all(|f| f.len() == 2));
        assert_eq!(plan, make_folds_for(&patients(10, 2), 5, 1).unwrap());
        assert_ne!(plan, make_folds_for(&patients(10, 2), 5, 2).unwrap());
    }

    #[test]
    fn class_balance_within_one() {
        for seed in 0..20 {
            let ps = patients(37, 3);
            let plan = make_folds_for(&ps, 5, seed).unwrap();
            let pos: HashMap<_, _> = ps.iter().map(|(p, l)| (p.as_str(), *l)).collect();
            let counts: Vec<usize> = plan
                .folds
                .iter()
                .map(|f| f.iter().filter(|p| pos[p.as_str()]).count())
                .collect();
            let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            assert_eq!(sizes.iter().sum::<usize>(), 37);
        }
    }

    #[test]
    fn too_few_patients() {
        assert!(make_folds_for(&patients(4, 2), 5, 0).is_err());
        assert!(make_folds_for(&patients(6, 1), 5, 0).is_err());
    }

    #[test]
    fn repeated_patient_rows_collapse() {
        let mut ps = patients(6, 2);
        ps.extend(patients(6, 2));
        let plan = make_folds_for(&ps, 3, 4).unwrap();
        assert_eq!(plan.folds.iter().map(Vec::len).sum::<usize>(), 6);
        assert_eq!(plan.fold_of("p03"), plan.assignments().get("p03").copied());
    }
}
