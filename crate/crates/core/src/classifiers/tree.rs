//! Decision tree induction in the C4.5 style: gain-ratio splits over binary
//! term-presence tests and midpoint thresholds on dense features, with
//! pessimistic-error pruning.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::FeatureVector;

use super::{check_dense_len, check_training_data, ClassifierKind, LabeledExample, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// Is the term (by vocabulary id) present in the sentence?
    TermPresent(u32),
    /// Is dense[dim] <= threshold?
    DenseLe(usize, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Per-category training counts; the predicted distribution is the
        /// relative frequencies, so a pure leaf yields exactly 1.0.
        counts: Vec<f64>,
    },
    Split {
        test: SplitTest,
        counts: Vec<f64>,
        on_true: Box<TreeNode>,
        on_false: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { on_true, on_false, .. } => 1 + on_true.depth().max(on_false.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { on_true, on_false, .. } => on_true.leaf_count() + on_false.leaf_count(),
        }
    }

    fn counts(&self) -> &[f64] {
        match self {
            TreeNode::Leaf { counts } => counts,
            TreeNode::Split { counts, .. } => counts,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    pub n_categories: usize,
    pub dense_len: usize,
    pub min_leaf: usize,
    pub confidence: f64,
    pub pruned: bool,
    pub root: TreeNode,
}

fn entropy_of(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &c in counts {
        if c > 0.0 {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h
}

fn term_present(fv: &FeatureVector, id: u32) -> bool {
    fv.counts.binary_search_by_key(&id, |&(i, _)| i).is_ok()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    test: SplitTest,
    gain: f64,
    ratio: f64,
}

/// All valid split candidates at a node: every present term, every dense
/// midpoint; both children must hold at least `min_leaf` examples.
fn candidates(data: &[LabeledExample], idx: &[usize], n_categories: usize, min_leaf: usize) -> Vec<Candidate> {
    let n = idx.len() as f64;
    let mut parent = vec![0.0; n_categories];
    for &i in idx {
        parent[data[i].category] += 1.0;
    }
    let h_parent = entropy_of(&parent);
    let mut out = Vec::new();

    let evaluate = |true_counts: &[f64], test: SplitTest, out: &mut Vec<Candidate>| {
        let n_true: f64 = true_counts.iter().sum();
        let n_false = n - n_true;
        if n_true < min_leaf as f64 || n_false < min_leaf as f64 {
            return;
        }
        let false_counts: Vec<f64> = parent.iter().zip(true_counts).map(|(p, t)| p - t).collect();
        let h_children = (n_true / n) * entropy_of(true_counts) + (n_false / n) * entropy_of(&false_counts);
        let gain = h_parent - h_children;
        let p_t = n_true / n;
        let split_info = -(p_t * p_t.log2() + (1.0 - p_t) * (1.0 - p_t).log2());
        if split_info <= 0.0 {
            return;
        }
        out.push(Candidate { test, gain: gain.max(0.0), ratio: gain.max(0.0) / split_info });
    };

    // term presence tests: one pass over the node's sparse ids
    let mut terms: BTreeSet<u32> = BTreeSet::new();
    for &i in idx {
        for &(id, _) in &data[i].features.counts {
            terms.insert(id);
        }
    }
    for &term in &terms {
        let mut true_counts = vec![0.0; n_categories];
        for &i in idx {
            if term_present(&data[i].features, term) {
                true_counts[data[i].category] += 1.0;
            }
        }
        evaluate(&true_counts, SplitTest::TermPresent(term), &mut out);
    }

    // dense thresholds: midpoints between consecutive distinct values
    let dense_len = data[idx[0]].features.dense.len();
    for d in 0..dense_len {
        let mut values: Vec<f64> = idx.iter().map(|&i| data[i].features.dense[d]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let mut true_counts = vec![0.0; n_categories];
            for &i in idx {
                if data[i].features.dense[d] <= threshold {
                    true_counts[data[i].category] += 1.0;
                }
            }
            evaluate(&true_counts, SplitTest::DenseLe(d, threshold), &mut out);
        }
    }
    out
}

fn grow(data: &[LabeledExample], idx: &[usize], n_categories: usize, min_leaf: usize) -> TreeNode {
    let mut counts = vec![0.0; n_categories];
    for &i in idx {
        counts[data[i].category] += 1.0;
    }
    let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
    if pure || idx.len() < 2 * min_leaf {
        return TreeNode::Leaf { counts };
    }

    // max gain ratio, then gain, then candidate order; an impure node may
    // split on a zero-gain candidate (the children can still untangle it)
    let cands = candidates(data, idx, n_categories, min_leaf);
    let mut best: Option<Candidate> = None;
    for c in cands {
        let better = match best {
            None => true,
            Some(b) => c.ratio > b.ratio + 1e-12 || ((c.ratio - b.ratio).abs() <= 1e-12 && c.gain > b.gain + 1e-12),
        };
        if better {
            best = Some(c);
        }
    }
    let Some(chosen) = best else {
        return TreeNode::Leaf { counts };
    };

    let (mut true_idx, mut false_idx) = (Vec::new(), Vec::new());
    for &i in idx {
        let goes_true = match chosen.test {
            SplitTest::TermPresent(id) => term_present(&data[i].features, id),
            SplitTest::DenseLe(d, thr) => data[i].features.dense[d] <= thr,
        };
        if goes_true {
            true_idx.push(i);
        } else {
            false_idx.push(i);
        }
    }
    TreeNode::Split {
        test: chosen.test,
        counts,
        on_true: Box::new(grow(data, &true_idx, n_categories, min_leaf)),
        on_false: Box::new(grow(data, &false_idx, n_categories, min_leaf)),
    }
}

/// Inverse standard normal CDF (Acklam's rational approximation).
fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Pessimistic extra-error estimate for a leaf holding `n` examples of
/// which `e` are misclassified, at the given confidence.
fn added_errors(n: f64, e: f64, confidence: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1e-9 {
        return n * (1.0 - confidence.powf(1.0 / n));
    }
    if e < 1.0 {
        let base = n * (1.0 - confidence.powf(1.0 / n));
        return base + e * (added_errors(n, 1.0, confidence) - base);
    }
    let z = normal_quantile(1.0 - confidence);
    let f = (e + 0.5) / n;
    let upper = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    (upper.min(1.0) * n) - e
}

fn leaf_error(counts: &[f64], confidence: f64) -> f64 {
    let n: f64 = counts.iter().sum();
    let max = counts.iter().cloned().fold(0.0, f64::max);
    let e = n - max;
    e + added_errors(n, e, confidence)
}

/// Estimated subtree error; collapses subtrees whose leaf estimate is no
/// worse (plus the customary 0.1 slack).
fn prune_node(node: TreeNode, confidence: f64) -> TreeNode {
    match node {
        TreeNode::Leaf { counts } => TreeNode::Leaf { counts },
        TreeNode::Split { test, counts, on_true, on_false } => {
            let on_true = prune_node(*on_true, confidence);
            let on_false = prune_node(*on_false, confidence);
            let subtree_error = estimated_error(&on_true, confidence) + estimated_error(&on_false, confidence);
            let as_leaf = leaf_error(&counts, confidence);
            if as_leaf <= subtree_error + 0.1 {
                TreeNode::Leaf { counts }
            } else {
                TreeNode::Split {
                    test,
                    counts,
                    on_true: Box::new(on_true),
                    on_false: Box::new(on_false),
                }
            }
        }
    }
}

fn estimated_error(node: &TreeNode, confidence: f64) -> f64 {
    match node {
        TreeNode::Leaf { counts } => leaf_error(counts, confidence),
        TreeNode::Split { on_true, on_false, .. } => {
            estimated_error(on_true, confidence) + estimated_error(on_false, confidence)
        }
    }
}

pub fn train_decision_tree(
    data: &[LabeledExample],
    n_categories: usize,
    min_leaf: usize,
    confidence: f64,
    prune: bool,
) -> Result<TreeModel> {
    check_training_data(data, n_categories)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut root = grow(data, &idx, n_categories, min_leaf.max(1));
    if prune {
        root = prune_node(root, confidence);
    }
    Ok(TreeModel {
        n_categories,
        dense_len: data[0].features.dense.len(),
        min_leaf: min_leaf.max(1),
        confidence,
        pruned: prune,
        root,
    })
}

impl Model for TreeModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Tree
    }

    fn n_categories(&self) -> usize {
        self.n_categories
    }

    fn predict_proba(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        check_dense_len(self.dense_len, features)?;
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { counts } => {
                    let total: f64 = counts.iter().sum();
                    return Ok(counts.iter().map(|c| c / total).collect());
                }
                TreeNode::Split { test, on_true, on_false, .. } => {
                    let goes_true = match *test {
                        SplitTest::TermPresent(id) => term_present(features, id),
                        SplitTest::DenseLe(d, thr) => features.dense[d] <= thr,
                    };
                    node = if goes_true { on_true } else { on_false };
                }
            }
        }
    }
}

impl TreeModel {
    /// Training-set accuracy, used by fixtures.
    pub fn training_accuracy(&self, data: &[LabeledExample]) -> f64 {
        let correct = data
            .iter()
            .filter(|ex| self.predict(&ex.features).map(|p| p == ex.category).unwrap_or(false))
            .count();
        correct as f64 / data.len() as f64
    }

    /// Gain ratio of every valid candidate at the root, for auditing the
    /// split choice against an exhaustive recomputation.
    pub fn root_counts(&self) -> &[f64] {
        self.root.counts()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term_example(ids: &[u32], category: usize) -> LabeledExample {
        LabeledExample {
            features: FeatureVector {
                sparse: ids.iter().map(|&i| (i, 1.0)).collect(),
                counts: ids.iter().map(|&i| (i, 1)).collect(),
                dense: vec![],
            },
            category,
        }
    }

    fn dense_example(values: &[f64], category: usize) -> LabeledExample {
        LabeledExample {
            features: FeatureVector { sparse: vec![], counts: vec![], dense: values.to_vec() },
            category,
        }
    }

    #[test]
    fn perfectly_separating_term_gives_depth_one() {
        let data = vec![
            term_example(&[0], 0),
            term_example(&[0], 0),
            term_example(&[1], 1),
            term_example(&[1], 1),
        ];
        let model = train_decision_tree(&data, 2, 2, 0.25, true).unwrap();
        assert_eq!(model.root.depth(), 1);
        assert_eq!(model.training_accuracy(&data), 1.0);
    }

    #[test]
    fn uniform_labels_make_single_leaf() {
        let data = vec![term_example(&[0], 0), term_example(&[1], 0)];
        let model = train_decision_tree(&data, 1, 2, 0.25, true).unwrap();
        assert!(matches!(model.root, TreeNode::Leaf { .. }));
        let p = model.predict_proba(&data[0].features).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn xor_unpruned_reaches_depth_two() {
        // exhaustive 4-point truth table on two binary dense features
        let data = vec![
            dense_example(&[0.0, 0.0], 0),
            dense_example(&[0.0, 1.0], 1),
            dense_example(&[1.0, 0.0], 1),
            dense_example(&[1.0, 1.0], 0),
        ];
        let model = train_decision_tree(&data, 2, 1, 0.25, false).unwrap();
        assert_eq!(model.root.depth(), 2);
        assert_eq!(model.training_accuracy(&data), 1.0);
    }

    #[test]
    fn pure_leaf_predicts_one() {
        let data = vec![
            term_example(&[0], 0),
            term_example(&[0], 0),
            term_example(&[1], 1),
            term_example(&[1], 1),
        ];
        let model = train_decision_tree(&data, 2, 2, 0.25, false).unwrap();
        let p = model.predict_proba(&term_example(&[0], 0).features).unwrap();
        assert_eq!(p[0], 1.0);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn empty_data_rejected() {
        assert!(train_decision_tree(&[], 2, 2, 0.25, true).is_err());
    }

    #[test]
    fn chosen_root_split_maximizes_gain_ratio() {
        // mixed fixture, <= 50 examples; recompute all candidates here and
        // compare with the trained root's choice
        let mut data = Vec::new();
        for i in 0..12 {
            let cat = usize::from(i >= 6);
            let mut ids = vec![if cat == 0 { 0 } else { 1 }];
            if i % 3 == 0 {
                ids.push(2);
            }
            ids.sort_unstable();
            let mut ex = term_example(&ids, cat);
            ex.features.dense = vec![i as f64 % 5.0, (i * 7 % 3) as f64];
            data.push(ex);
        }
        let model = train_decision_tree(&data, 2, 2, 0.25, false).unwrap();
        let idx: Vec<usize> = (0..data.len()).collect();
        let all = candidates(&data, &idx, 2, 2);
        let TreeNode::Split { test, .. } = &model.root else {
            panic!("expected a split at the root");
        };
        let chosen = all.iter().find(|c| c.test == *test).expect("chosen test enumerated");
        for c in &all {
            assert!(chosen.ratio >= c.ratio - 1e-9, "{:?} beaten by {:?}", chosen, c);
        }
    }

    #[test]
    fn pruning_collapses_noise_splits() {
        // labels independent of features: the pruned tree should be small
        let mut data = Vec::new();
        for i in 0..30 {
            let mut ex = dense_example(&[(i % 7) as f64, (i % 5) as f64], i % 2);
            ex.features.counts = vec![(i as u32 % 4, 1)];
            ex.features.sparse = vec![(i as u32 % 4, 1.0)];
            data.push(ex);
        }
        let unpruned = train_decision_tree(&data, 2, 2, 0.25, false).unwrap();
        let pruned = train_decision_tree(&data, 2, 2, 0.25, true).unwrap();
        assert!(pruned.root.leaf_count() <= unpruned.root.leaf_count());
    }
}
