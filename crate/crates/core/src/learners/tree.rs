use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forest::{ClassWeight, RFParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One node of a flattened binary tree. Rows with `x[feature] <= threshold`
/// go left. `n_samples` is the total training weight that reached the node
/// (bootstrap multiplicities included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: f64,
    },
    Leaf {
        probability: f64,
        n_samples: f64,
    },
}

impl TreeNode {
    pub fn n_samples(&self) -> f64 {
        match self {
            TreeNode::Split { n_samples, .. } | TreeNode::Leaf { n_samples, .. } => *n_samples,
        }
    }
}

/// Nodes stored in preorder; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(probability: f64, n_samples: f64) -> Tree {
        Tree {
            nodes: vec![TreeNode::Leaf {
                probability,
                n_samples,
            }],
        }
    }

    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { probability, .. } => *probability,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Checks structure after deserialization: children point forward,
    /// features are in range, probabilities lie in [0, 1] and counts are
    /// positive and additive.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::ModelFormat("tree without nodes".into()));
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            let n = node.n_samples();
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::ModelFormat(format!(
                    "node {i} has no training sample count"
                )));
            }
            match node {
                TreeNode::Leaf { probability, .. } => {
                    if !(0.0..=1.0).contains(probability) {
                        return Err(Error::ModelFormat(format!(
                            "leaf {i} probability {probability} outside [0, 1]"
                        )));
                    }
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    n_samples,
                } => {
                    if *feature >= n_features || !threshold.is_finite() {
                        return Err(Error::ModelFormat(format!("node {i} has an invalid split")));
                    }
                    for &c in [left, right] {
                        if c <= i || c >= self.nodes.len() {
                            return Err(Error::ModelFormat(format!(
                                "node {i} has an invalid child {c}"
                            )));
                        }
                        parents[c] += 1;
                    }
                    let sum = self.nodes[*left].n_samples() + self.nodes[*right].n_samples();
                    if (sum - n_samples).abs() > 1e-9 * n_samples.max(1.0) {
                        return Err(Error::ModelFormat(format!(
                            "node {i} child counts do not add up"
                        )));
                    }
                }
            }
        }
        if parents[1..].iter().any(|&p| p != 1) {
            return Err(Error::ModelFormat("tree nodes are not a single tree".into()));
        }
        Ok(())
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Column-major copy of a training matrix with every column's row indices
/// presorted by (value, row). Built once and shared by all trees of a forest.
pub(crate) struct Presorted {
    rows: usize,
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub(crate) fn new(x: &Matrix) -> Presorted {
        let cols: Vec<Vec<f64>> = (0..x.cols()).map(|f| (0..x.rows()).map(|i| x.get(i, f)).collect()).collect();
        let order = cols
            .iter()
            .map(|col| {
                let mut o: Vec<u32> = (0..x.rows() as u32).collect();
                o.sort_unstable_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                o
            })
            .collect();
        Presorted {
            rows: x.rows(),
            cols,
            order,
        }
    }
}

/// Grows one CART tree by greedy Gini minimization.
///
/// `row_weights[i]` is the multiplicity of row `i` in this tree's training
/// sample (0 excludes it). Class weights, if enabled, only affect the
/// impurity; leaf probabilities are plain positive fractions.
pub fn train_tree(
    x: &Matrix,
    y: &[bool],
    params: &RFParams,
    row_weights: &[f64],
    seed: u64,
) -> Result<Tree> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::InvalidData("empty training matrix".into()));
    }
    train_tree_presorted(&Presorted::new(x), y, params, row_weights, seed)
}

pub(crate) fn train_tree_presorted(
    data: &Presorted,
    y: &[bool],
    params: &RFParams,
    row_weights: &[f64],
    seed: u64,
) -> Result<Tree> {
    if y.len() != data.rows || row_weights.len() != data.rows {
        return Err(Error::DimensionMismatch {
            expected: data.rows,
            actual: y.len().min(row_weights.len()),
        });
    }
    if row_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidData("row weights must be finite and non-negative".into()));
    }
    let n_cols = data.cols.len();
    // One index buffer per feature plus a last one in row order. Every node
    // owns the same range [lo, hi) in each buffer; splits partition ranges
    // stably in place.
    let mut bufs: Vec<Vec<u32>> = data
        .order
        .iter()
        .chain(std::iter::once(&(0..data.rows as u32).collect()))
        .map(|o| o.iter().copied().filter(|&i| row_weights[i as usize] > 0.0).collect())
        .collect();
    let m = bufs[n_cols].len();
    if m == 0 {
        return Err(Error::InvalidData("all row weights are zero".into()));
    }
    let class_w = class_weights(params.class_weight, y, row_weights);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = Builder {
        data,
        y,
        params,
        row_weights,
        class_w,
        n_try: params.features_per_split.resolve(n_cols),
    };

    let mut nodes = vec![TreeNode::Leaf {
        probability: 0.0,
        n_samples: 0.0,
    }];
    let mut goes_left = vec![false; data.rows];
    let mut scratch: Vec<u32> = Vec::with_capacity(m);
    let mut stack = vec![(0usize, 0usize, m, 0usize)];
    while let Some((slot, lo, hi, depth)) = stack.pop() {
        let rows = &bufs[n_cols][lo..hi];
        let (n, pos) = rows.iter().fold((0.0, 0.0), |(n, p), &i| {
            let w = row_weights[i as usize];
            (n + w, if y[i as usize] { p + w } else { p })
        });
        let Some(c) = b.best_split(&bufs, lo, hi, n, depth, &mut rng) else {
            nodes[slot] = TreeNode::Leaf {
                probability: pos / n,
                n_samples: n,
            };
            continue;
        };
        let col = &data.cols[c.feature];
        let mut n_left = 0;
        for &i in rows {
            let l = col[i as usize] <= c.threshold;
            goes_left[i as usize] = l;
            n_left += l as usize;
        }
        // Children at the depth limit become leaves and only need row order.
        let leaves_next = params.max_depth > 0 && depth + 1 >= params.max_depth;
        let skip = if leaves_next { n_cols } else { 0 };
        for buf in bufs.iter_mut().skip(skip) {
            let range = &mut buf[lo..hi];
            scratch.clear();
            scratch.extend(range.iter().copied().filter(|&i| goes_left[i as usize]));
            scratch.extend(range.iter().copied().filter(|&i| !goes_left[i as usize]));
            range.copy_from_slice(&scratch);
        }
        let left = nodes.len();
        let right = left + 1;
        let placeholder = TreeNode::Leaf {
            probability: 0.0,
            n_samples: 0.0,
        };
        nodes.push(placeholder.clone());
        nodes.push(placeholder);
        nodes[slot] = TreeNode::Split {
            feature: c.feature,
            threshold: c.threshold,
            left,
            right,
            n_samples: n,
        };
        stack.push((right, lo + n_left, hi, depth + 1));
        stack.push((left, lo, lo + n_left, depth + 1));
    }
    Ok(renumber_preorder(nodes))
}

fn class_weights(mode: ClassWeight, y: &[bool], w: &[f64]) -> [f64; 2] {
    match mode {
        ClassWeight::None => [1.0, 1.0],
        ClassWeight::Balanced => {
            let mut tot = [0.0; 2];
            for (&l, &wi) in y.iter().zip(w) {
                tot[l as usize] += wi;
            }
            let n = tot[0] + tot[1];
            tot.map(|t| if t > 0.0 { n / (2.0 * t) } else { 1.0 })
        }
    }
}

struct Builder<'a> {
    data: &'a Presorted,
    y: &'a [bool],
    params: &'a RFParams,
    row_weights: &'a [f64],
    class_w: [f64; 2],
    n_try: usize,
}

impl Builder<'_> {
    /// Searches the node holding `bufs[_][lo..hi]`, whose total weight is
    /// `count`.
    fn best_split(
        &self,
        bufs: &[Vec<u32>],
        lo: usize,
        hi: usize,
        count: f64,
        depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let p = self.params;
        if p.max_depth > 0 && depth >= p.max_depth {
            return None;
        }
        let n_cols = self.data.cols.len();
        let mut gw = [0.0; 2];
        for &i in &bufs[n_cols][lo..hi] {
            let c = self.y[i as usize] as usize;
            gw[c] += self.row_weights[i as usize] * self.class_w[c];
        }
        if gw[0] == 0.0 || gw[1] == 0.0 {
            return None;
        }
        let min_leaf = p.min_samples_leaf as f64;
        if count < p.min_samples_split as f64 || count < 2.0 * min_leaf {
            return None;
        }
        let g_total = gw[0] + gw[1];
        let parent = gini(gw[1], g_total);

        let mut features = sample_features(n_cols, self.n_try, rng);
        features.sort_unstable();

        let mut best: Option<Candidate> = None;
        for &f in &features {
            let col = &self.data.cols[f];
            let order = &bufs[f][lo..hi];
            let mut left_count = 0.0;
            let mut left_g = [0.0; 2];
            for k in 0..order.len() - 1 {
                let i = order[k] as usize;
                let v = col[i];
                let w = self.row_weights[i];
                let c = self.y[i] as usize;
                left_count += w;
                left_g[c] += w * self.class_w[c];
                let next = col[order[k + 1] as usize];
                if v >= next {
                    continue;
                }
                if left_count < min_leaf || count - left_count < min_leaf {
                    continue;
                }
                let lg = left_g[0] + left_g[1];
                let rg = g_total - lg;
                let imp = (lg * gini(left_g[1], lg) + rg * gini(gw[1] - left_g[1], rg)) / g_total;
                if best.as_ref().is_none_or(|b| imp < b.impurity) {
                    let mut threshold = 0.5 * (v + next);
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        impurity: imp,
                    });
                }
            }
        }
        best.filter(|b| b.impurity < parent - 1e-12)
    }
}

/// `k` distinct feature indices drawn uniformly by a partial shuffle.
fn sample_features(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if k >= n {
        return idx;
    }
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

/// The builder appends both children before descending, which yields
/// breadth-ish numbering. Rewrites indices into a plain preorder layout.
fn renumber_preorder(nodes: Vec<TreeNode>) -> Tree {
    let mut out = Vec::with_capacity(nodes.len());
    let mut map = vec![usize::MAX; nodes.len()];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        map[i] = out.len();
        out.push(nodes[i].clone());
        if let TreeNode::Split { left, right, .. } = nodes[i] {
            stack.push(right);
            stack.push(left);
        }
    }
    for n in &mut out {
        if let TreeNode::Split { left, right, .. } = n {
            *left = map[*left];
            *right = map[*right];
        }
    }
    Tree { nodes: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::FeatureSubset;

    fn params() -> RFParams {
        RFParams {
            n_trees: 1,
            max_depth: 0,
            min_samples_leaf: 1,
            min_samples_split: 1,
            features_per_split: FeatureSubset::All,
            bootstrap: false,
            class_weight: ClassWeight::None,
        }
    }

    #[test]
    fn threshold_separable_data_is_fit_exactly() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let y: Vec<bool> = xs.iter().map(|&v| v > 0.5).collect();
        let x = Matrix::new(40, 1, xs.clone()).unwrap();
        let t = train_tree(&x, &y, &params(), &vec![1.0; 40], 7).unwrap();
        for (v, l) in xs.iter().zip(&y) {
            assert_eq!(t.predict(&[*v]), if *l { 1.0 } else { 0.0 });
        }
        assert_eq!(t.nodes.len(), 3);
        t.validate(1).unwrap();
    }

    #[test]
    fn pure_input_gives_single_leaf() {
        let x = Matrix::new(5, 2, (0..10).map(f64::from).collect()).unwrap();
        for label in [false, true] {
            let t = train_tree(&x, &[label; 5], &params(), &[1.0; 5], 7).unwrap();
            assert_eq!(t, Tree::leaf(if label { 1.0 } else { 0.0 }, 5.0));
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        let x = Matrix::new(0, 3, vec![]).unwrap();
        assert!(train_tree(&x, &[], &params(), &[], 7).is_err());
    }

    #[test]
    fn same_seed_same_tree_and_counts_add_up() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f64> = (0..300).map(|_| r.random::<f64>()).collect();
        let x = Matrix::new(60, 5, data).unwrap();
        let y: Vec<bool> = (0..60).map(|i| x.get(i, 0) + x.get(i, 3) > 1.0).collect();
        let p = RFParams {
            features_per_split: FeatureSubset::Sqrt,
            min_samples_leaf: 2,
            ..params()
        };
        let w: Vec<f64> = (0..60).map(|i| (i % 3) as f64).collect();
        let a = train_tree(&x, &y, &p, &w, 7).unwrap();
        let b = train_tree(&x, &y, &p, &w, 7).unwrap();
        assert_eq!(a, b);
        a.validate(5).unwrap();
        assert_eq!(a.nodes[0].n_samples(), w.iter().sum::<f64>());
        for n in &a.nodes {
            if let TreeNode::Leaf { n_samples, .. } = n {
                assert!(*n_samples >= 2.0);
            }
        }
    }

    #[test]
    fn accepted_splits_reduce_gini() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..400).map(|_| r.random::<f64>()).collect();
        let x = Matrix::new(100, 4, data).unwrap();
        let y: Vec<bool> = (0..100).map(|i| x.get(i, 1) > 0.3 && x.get(i, 2) < 0.8).collect();
        let t = train_tree(&x, &y, &params(), &[1.0; 100], 7).unwrap();
        // Recompute node impurities from routed rows.
        let mut members = vec![Vec::new(); t.nodes.len()];
        for i in 0..100 {
            let mut k = 0;
            loop {
                members[k].push(i);
                match &t.nodes[k] {
                    TreeNode::Leaf { .. } => break,
                    TreeNode::Split { feature, threshold, left, right, .. } => {
                        k = if x.get(i, *feature) <= *threshold { *left } else { *right }
                    }
                }
            }
        }
        let g = |m: &Vec<usize>| {
            let pos = m.iter().filter(|&&i| y[i]).count() as f64;
            gini(pos, m.len() as f64)
        };
        for (k, n) in t.nodes.iter().enumerate() {
            if let TreeNode::Split { left, right, .. } = n {
                let nl = members[*left].len() as f64;
                let nr = members[*right].len() as f64;
                let child = (nl * g(&members[*left]) + nr * g(&members[*right])) / (nl + nr);
                assert!(child < g(&members[k]));
            }
        }
    }

    #[test]
    fn depth_limit_is_respected() {
        let mut r = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
        let x = Matrix::new(100, 2, data).unwrap();
        let y: Vec<bool> = (0..100).map(|_| r.random_bool(0.5)).collect();
        let p = RFParams {
            max_depth: 3,
            ..params()
        };
        let t = train_tree(&x, &y, &p, &[1.0; 100], 7).unwrap();
        assert!(t.depth() <= 3);
    }

    #[test]
    fn validate_rejects_broken_trees() {
        let mut t = Tree {
            nodes: vec![
                TreeNode::Split {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                    n_samples: 4.0,
                },
                TreeNode::Leaf {
                    probability: 0.0,
                    n_samples: 2.0,
                },
                TreeNode::Leaf {
                    probability: 1.0,
                    n_samples: 2.0,
                },
            ],
        };
        t.validate(1).unwrap();
        assert!(t.validate(0).is_err());
        t.nodes[2] = TreeNode::Leaf {
            probability: 1.0,
            n_samples: 0.0,
        };
        assert!(t.validate(1).is_err());
    }
}
