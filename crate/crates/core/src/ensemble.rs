//! Weighted voting over the four classifiers, NULL-prediction handling, and
//! recursive descent through the category tree.
//!
//! Each classifier carries weight 0.25. A category above 0.50 total weight
//! wins alone; otherwise every distinct non-null prediction survives and the
//! next level sees all of them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifiers::{argmax_lowest, CategoryIndex, ClassifierKind, Model};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::taxonomy::{CategoryTree, NodeId, ROOT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    /// `None` is a NULL prediction ("can't be predicted").
    pub category: Option<CategoryIndex>,
    pub source: ClassifierKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub per_classifier_weight: f64,
    pub win_threshold: f64,
    /// Max-probability floor below which a classifier votes NULL.
    pub null_proba_floor: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            per_classifier_weight: 0.25,
            win_threshold: 0.5,
            null_proba_floor: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteOutcome {
    /// Surviving categories, ascending; empty only when all four voted NULL.
    pub winners: Vec<CategoryIndex>,
    pub weights: BTreeMap<CategoryIndex, f64>,
    pub null_weight: f64,
    pub all_null: bool,
}

impl VoteOutcome {
    /// Deterministic single-label projection for evaluation: the winner with
    /// the highest vote weight, ties by lowest category index. `None` only
    /// in the all-null case.
    pub fn single_winner(&self) -> Option<CategoryIndex> {
        if self.all_null {
            return None;
        }
        self.winners
            .iter()
            .copied()
            .max_by(|a, b| {
                self.weights[a]
                    .partial_cmp(&self.weights[b])
                    .unwrap()
                    .then(b.cmp(a)) // lower index wins ties
            })
    }
}

/// Combine exactly four predictions (one per classifier) into the vote
/// outcome.
pub fn vote(predictions: &[Prediction], config: &EnsembleConfig) -> Result<VoteOutcome> {
    if predictions.len() != 4 {
        return Err(Error::InvalidArgument(format!(
            "vote needs exactly 4 predictions, got {}",
            predictions.len()
        )));
    }
    for kind in ClassifierKind::ALL {
        if predictions.iter().filter(|p| p.source == kind).count() != 1 {
            return Err(Error::InvalidArgument(format!(
                "vote needs exactly one prediction from {}",
                kind.name()
            )));
        }
    }

    let w = config.per_classifier_weight;
    let mut weights: BTreeMap<CategoryIndex, f64> = BTreeMap::new();
    let mut nulls = 0usize;
    for p in predictions {
        match p.category {
            Some(c) => *weights.entry(c).or_insert(0.0) += w,
            None => nulls += 1,
        }
    }
    let null_weight = nulls as f64 * w;

    if weights.is_empty() {
        return Ok(VoteOutcome { winners: vec![], weights, null_weight, all_null: true });
    }

    // rule (1): a category above the winning threshold takes it alone
    let above: Vec<CategoryIndex> = weights
        .iter()
        .filter(|(_, &wt)| wt > config.win_threshold)
        .map(|(&c, _)| c)
        .collect();
    let winners = if above.len() == 1 {
        above
    } else {
        // rules (2)/(3): keep every distinct non-null prediction
        weights.keys().copied().collect()
    };
    Ok(VoteOutcome { winners, weights, null_weight, all_null: false })
}

/// Run one classifier and apply the NULL floor: a distribution whose peak is
/// below the floor becomes a NULL prediction (equality keeps the category).
pub fn classify_with_null(
    model: &dyn Model,
    features: &FeatureVector,
    config: &EnsembleConfig,
) -> Result<Prediction> {
    let proba = model.predict_proba(features)?;
    let best = argmax_lowest(&proba);
    let category = if proba[best] < config.null_proba_floor {
        None
    } else {
        Some(best)
    };
    Ok(Prediction { category, source: model.kind() })
}

/// The four per-node classifiers used during routing; implemented by the
/// engine over its trained models.
pub trait NodeClassifiers {
    /// Predictions over the child-category space of `node`, or `None` when
    /// the node has no trained models.
    fn predict_at(
        &self,
        node: NodeId,
        features: &FeatureVector,
        config: &EnsembleConfig,
    ) -> Option<Result<[Prediction; 4]>>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelTrace {
    pub node: NodeId,
    pub node_path: String,
    pub predictions: Vec<Prediction>,
    pub outcome: VoteOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteResult {
    /// Terminal node of every surviving root-to-leaf path (a path may stop
    /// at an internal node when its vote was all-null).
    pub terminals: Vec<NodeId>,
    /// Node-id path from the root for each terminal.
    pub paths: Vec<Vec<NodeId>>,
    pub trace: Vec<LevelTrace>,
    /// True when the root vote was all-null and the whole repository is the
    /// fallback.
    pub root_fallback: bool,
}

/// Breadth-wise descent: vote at every surviving multi-child node, follow
/// every winner, pass through single-child nodes, stop at leaves.
pub fn route_recursive(
    features: &FeatureVector,
    tree: &CategoryTree,
    classifiers: &dyn NodeClassifiers,
    config: &EnsembleConfig,
) -> Result<RouteResult> {
    let mut terminals = Vec::new();
    let mut paths = Vec::new();
    let mut trace = Vec::new();
    let mut root_fallback = false;

    let mut frontier: std::collections::VecDeque<Vec<NodeId>> = std::collections::VecDeque::from([vec![ROOT]]);
    while let Some(path) = frontier.pop_front() {
        let node = *path.last().unwrap();
        let children = &tree.node(node).children;
        match children.len() {
            0 => {
                terminals.push(node);
                paths.push(path);
            }
            1 => {
                let mut next = path.clone();
                next.push(children[0]);
                frontier.push_back(next);
            }
            _ => {
                let predictions = match classifiers.predict_at(node, features, config) {
                    Some(p) => p?,
                    None => return Err(Error::MissingModels(tree.path_string(node))),
                };
                let outcome = vote(&predictions, config)?;
                trace.push(LevelTrace {
                    node,
                    node_path: tree.path_string(node),
                    predictions: predictions.to_vec(),
                    outcome: outcome.clone(),
                });
                if outcome.all_null {
                    if node == ROOT {
                        root_fallback = true;
                        terminals.push(ROOT);
                        paths.push(vec![ROOT]);
                        break;
                    }
                    // vote refused below the root: the whole subtree stays
                    // a candidate
                    terminals.push(node);
                    paths.push(path);
                    continue;
                }
                for &winner in &outcome.winners {
                    let mut next = path.clone();
                    next.push(children[winner]);
                    frontier.push_back(next);
                }
            }
        }
    }

    terminals.sort_unstable();
    terminals.dedup();
    Ok(RouteResult { terminals, paths, trace, root_fallback })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(cats: [Option<usize>; 4]) -> Vec<Prediction> {
        ClassifierKind::ALL
            .iter()
            .zip(cats)
            .map(|(&source, category)| Prediction { category, source })
            .collect()
    }

    const A: Option<usize> = Some(0);
    const B: Option<usize> = Some(1);
    const C: Option<usize> = Some(2);
    const D: Option<usize> = Some(3);
    const NULL: Option<usize> = None;

    #[test]
    fn three_to_one_majority_wins_alone() {
        let out = vote(&preds([A, A, A, B]), &EnsembleConfig::default()).unwrap();
        assert_eq!(out.winners, vec![0]);
        assert!((out.weights[&0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn four_distinct_keeps_all() {
        let out = vote(&preds([A, B, C, D]), &EnsembleConfig::default()).unwrap();
        assert_eq!(out.winners, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lone_prediction_survives_nulls() {
        let out = vote(&preds([A, NULL, NULL, NULL]), &EnsembleConfig::default()).unwrap();
        assert_eq!(out.winners, vec![0]);
        assert!((out.null_weight - 0.75).abs() < 1e-12);
    }

    #[test]
    fn two_disagreeing_both_survive() {
        let out = vote(&preds([A, B, NULL, NULL]), &EnsembleConfig::default()).unwrap();
        assert_eq!(out.winners, vec![0, 1]);
    }

    #[test]
    fn unanimous_takes_full_weight() {
        let out = vote(&preds([A, A, A, A]), &EnsembleConfig::default()).unwrap();
        assert_eq!(out.winners, vec![0]);
        assert!((out.weights[&0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_two_split_keeps_both() {
        let out = vote(&preds([A, A, B, B]), &EnsembleConfig::default()).unwrap();
        assert_eq!(out.winners, vec![0, 1]);
    }

    #[test]
    fn all_null_is_flagged() {
        let out = vote(&preds([NULL, NULL, NULL, NULL]), &EnsembleConfig::default()).unwrap();
        assert!(out.all_null);
        assert!(out.winners.is_empty());
        assert!((out.null_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        for cats in [[A, A, B, NULL], [A, B, C, NULL], [NULL, NULL, A, A]] {
            let out = vote(&preds(cats), &EnsembleConfig::default()).unwrap();
            let total: f64 = out.weights.values().sum::<f64>() + out.null_weight;
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_arity_rejected() {
        let mut p = preds([A, A, A, A]);
        p.pop();
        assert!(vote(&p, &EnsembleConfig::default()).is_err());
    }

    #[test]
    fn duplicate_source_rejected() {
        let mut p = preds([A, A, A, A]);
        p[1].source = p[0].source;
        assert!(vote(&p, &EnsembleConfig::default()).is_err());
    }

    #[test]
    fn single_winner_projection() {
        let out = vote(&preds([A, A, B, NULL]), &EnsembleConfig::default()).unwrap();
        assert_eq!(out.winners, vec![0, 1]);
        assert_eq!(out.single_winner(), Some(0));
        let tied = vote(&preds([A, A, B, B]), &EnsembleConfig::default()).unwrap();
        assert_eq!(tied.single_winner(), Some(0)); // tie → lowest index
        let none = vote(&preds([NULL, NULL, NULL, NULL]), &EnsembleConfig::default()).unwrap();
        assert_eq!(none.single_winner(), None);
    }

    #[test]
    fn permutation_invariance() {
        // same multiset of categories assigned to different sources
        let a = vote(&preds([A, B, NULL, A]), &EnsembleConfig::default()).unwrap();
        let b = vote(&preds([NULL, A, A, B]), &EnsembleConfig::default()).unwrap();
        assert_eq!(a.winners, b.winners);
        assert_eq!(a.weights, b.weights);
    }

    struct FloorModel {
        proba: Vec<f64>,
    }

    impl Model for FloorModel {
        fn kind(&self) -> ClassifierKind {
            ClassifierKind::NaiveBayes
        }
        fn n_categories(&self) -> usize {
            self.proba.len()
        }
        fn predict_proba(&self, _f: &FeatureVector) -> Result<Vec<f64>> {
            Ok(self.proba.clone())
        }
    }

    fn empty_features() -> FeatureVector {
        FeatureVector { sparse: vec![], counts: vec![], dense: vec![] }
    }

    #[test]
    fn null_floor_behaviour() {
        let config = EnsembleConfig::default();
        let confident = FloorModel { proba: vec![0.9, 0.1] };
        assert_eq!(
            classify_with_null(&confident, &empty_features(), &config).unwrap().category,
            Some(0)
        );
        let uniform7 = FloorModel { proba: vec![1.0 / 7.0; 7] };
        assert_eq!(
            classify_with_null(&uniform7, &empty_features(), &config).unwrap().category,
            None
        );
        // max exactly at the floor emits the category
        let boundary = FloorModel { proba: vec![0.4, 0.35, 0.25] };
        assert_eq!(
            classify_with_null(&boundary, &empty_features(), &config).unwrap().category,
            Some(0)
        );
    }
}
