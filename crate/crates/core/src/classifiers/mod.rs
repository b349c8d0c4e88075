//! The four classifiers behind one contract: fit labeled feature vectors,
//! then `predict_proba` yields a category distribution and `predict` its
//! argmax (ties broken by lowest category index).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

mod mlp;
mod naive_bayes;
mod svm;
mod tree;

pub use mlp::{train_mlp, MlpModel, MlpParams};
pub use naive_bayes::{train_naive_bayes, NaiveBayesModel};
pub use svm::{train_svm_smo, PairMachine, SvmModel};
pub use tree::{train_decision_tree, SplitTest, TreeModel, TreeNode};

pub type CategoryIndex = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub category: CategoryIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    NaiveBayes,
    Svm,
    Tree,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::Svm,
        ClassifierKind::Tree,
        ClassifierKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Tree => "tree",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

/// Shared prediction contract of the four classifiers.
pub trait Model {
    fn kind(&self) -> ClassifierKind;

    fn n_categories(&self) -> usize;

    /// Category distribution: entries >= 0 summing to 1.
    fn predict_proba(&self, features: &FeatureVector) -> Result<Vec<f64>>;

    /// Argmax category, ties broken by lowest index.
    fn predict(&self, features: &FeatureVector) -> Result<CategoryIndex> {
        Ok(argmax_lowest(&self.predict_proba(features)?))
    }
}

/// Index of the maximum entry; the first one wins on exact ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// n_categories examples sanity shared by the trainers.
pub(crate) fn check_training_data(
    data: &[LabeledExample],
    n_categories: usize,
) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Training("no training examples".into()));
    }
    if n_categories == 0 {
        return Err(Error::Training("no categories declared".into()));
    }
    let mut seen = vec![false; n_categories];
    for ex in data {
        if ex.category >= n_categories {
            return Err(Error::Training(format!(
                "example labeled {} but only {} categories declared",
                ex.category, n_categories
            )));
        }
        seen[ex.category] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Training(format!("category {missing} has zero examples")));
    }
    Ok(())
}

pub(crate) fn check_dense_len(expected: usize, fv: &FeatureVector) -> Result<()> {
    if fv.dense.len() != expected {
        return Err(Error::SchemaMismatch {
            model: format!("dense len {expected}"),
            input: format!("dense len {}", fv.dense.len()),
        });
    }
    Ok(())
}

/// Per-dimension (min, max) of the dense block over the training set, used
/// by the SVM and MLP to scale dense features into [0, 1].
pub(crate) fn dense_min_max(data: &[LabeledExample], dense_len: usize) -> Vec<(f64, f64)> {
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); dense_len];
    for ex in data {
        for (d, &v) in ex.features.dense.iter().enumerate() {
            let (lo, hi) = &mut ranges[d];
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
    }
    ranges
}

pub(crate) fn scale_dense(value: f64, range: (f64, f64)) -> f64 {
    let (lo, hi) = range;
    if hi > lo {
        (value - lo) / (hi - lo)
    } else {
        0.0
    }
}
