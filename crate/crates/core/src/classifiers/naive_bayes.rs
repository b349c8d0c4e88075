//! Multinomial Naive Bayes over raw term counts with Laplace smoothing.
//!
//! Scores are computed in log space (log prior + Σ tf·log p(term|category))
//! and softmax-normalized, which equals the direct probability product.
//! Dense meta-features are categorical here: they are discretized into
//! quartile bins computed on the training data, with the bin boundaries kept
//! in the model.

use serde::{Deserialize, Serialize};

use super::{check_dense_len, check_training_data, ClassifierKind, LabeledExample, Model};
use crate::error::Result;
use crate::features::FeatureVector;

const DENSE_BINS: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub n_categories: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub log_priors: Vec<f64>,
    /// [category][term id] log p(term | category); rows sum to 1 in
    /// probability space over the vocabulary.
    pub term_log_likelihood: Vec<Vec<f64>>,
    pub dense_len: usize,
    /// Quartile boundaries (q1, q2, q3) per dense dimension.
    pub dense_bins: Vec<[f64; 3]>,
    /// [category][dense dim][bin] log p(bin | category).
    pub dense_log_likelihood: Vec<Vec<[f64; DENSE_BINS]>>,
}

fn bin_of(value: f64, bounds: &[f64; 3]) -> usize {
    if value <= bounds[0] {
        0
    } else if value <= bounds[1] {
        1
    } else if value <= bounds[2] {
        2
    } else {
        3
    }
}

/// Train a multinomial model over sparse term counts with Laplace smoothing
/// `alpha`. Every declared category needs at least one example.
pub fn train_naive_bayes(
    data: &[LabeledExample],
    n_categories: usize,
    vocab_size: usize,
    alpha: f64,
) -> Result<NaiveBayesModel> {
    check_training_data(data, n_categories)?;
    let dense_len = data[0].features.dense.len();

    let mut class_counts = vec![0usize; n_categories];
    let mut term_counts = vec![vec![0.0f64; vocab_size]; n_categories];
    let mut term_totals = vec![0.0f64; n_categories];
    for ex in data {
        class_counts[ex.category] += 1;
        for &(id, tf) in &ex.features.counts {
            if (id as usize) < vocab_size {
                term_counts[ex.category][id as usize] += tf as f64;
                term_totals[ex.category] += tf as f64;
            }
        }
    }

    let n = data.len() as f64;
    let log_priors: Vec<f64> = class_counts.iter().map(|&c| (c as f64 / n).ln()).collect();

    let term_log_likelihood: Vec<Vec<f64>> = (0..n_categories)
        .map(|c| {
            let denom = term_totals[c] + alpha * vocab_size as f64;
            term_counts[c]
                .iter()
                .map(|&cnt| ((cnt + alpha) / denom).ln())
                .collect()
        })
        .collect();

    // quartile boundaries per dense dimension, over the whole training set
    let mut dense_bins = Vec::with_capacity(dense_len);
    for d in 0..dense_len {
        let mut values: Vec<f64> = data.iter().map(|ex| ex.features.dense[d]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pick = |q: usize| values[(values.len() * q / 4).min(values.len() - 1)];
        dense_bins.push([pick(1), pick(2), pick(3)]);
    }

    let mut dense_counts = vec![vec![[0.0f64; DENSE_BINS]; dense_len]; n_categories];
    for ex in data {
        for d in 0..dense_len {
            let b = bin_of(ex.features.dense[d], &dense_bins[d]);
            dense_counts[ex.category][d][b] += 1.0;
        }
    }
    let dense_log_likelihood: Vec<Vec<[f64; DENSE_BINS]>> = (0..n_categories)
        .map(|c| {
            (0..dense_len)
                .map(|d| {
                    let total: f64 = dense_counts[c][d].iter().sum();
                    let denom = total + alpha * DENSE_BINS as f64;
                    let mut row = [0.0; DENSE_BINS];
                    for (b, slot) in row.iter_mut().enumerate() {
                        *slot = ((dense_counts[c][d][b] + alpha) / denom).ln();
                    }
                    row
                })
                .collect()
        })
        .collect();

    Ok(NaiveBayesModel {
        n_categories,
        vocab_size,
        alpha,
        log_priors,
        term_log_likelihood,
        dense_len,
        dense_bins,
        dense_log_likelihood,
    })
}

impl NaiveBayesModel {
    /// Unnormalized log posterior per category.
    pub fn log_scores(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        check_dense_len(self.dense_len, features)?;
        let mut scores = self.log_priors.clone();
        for (c, score) in scores.iter_mut().enumerate() {
            for &(id, tf) in &features.counts {
                if (id as usize) < self.vocab_size {
                    *score += tf as f64 * self.term_log_likelihood[c][id as usize];
                }
            }
            for d in 0..self.dense_len {
                let b = bin_of(features.dense[d], &self.dense_bins[d]);
                *score += self.dense_log_likelihood[c][d][b];
            }
        }
        Ok(scores)
    }
}

impl Model for NaiveBayesModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::NaiveBayes
    }

    fn n_categories(&self) -> usize {
        self.n_categories
    }

    fn predict_proba(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        let scores = self.log_scores(features)?;
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Build an example straight from raw term counts (ids into an implied
    /// vocabulary), with an empty dense block.
    fn counted(pairs: &[(u32, u32)], category: usize) -> LabeledExample {
        LabeledExample {
            features: FeatureVector {
                sparse: pairs.iter().map(|&(id, tf)| (id, tf as f64)).collect(),
                counts: pairs.to_vec(),
                dense: vec![],
            },
            category,
        }
    }

    fn hand_fixture() -> Vec<LabeledExample> {
        // category A: "x x y"; category B: "y z z" over vocab {x=0, y=1, z=2}
        vec![counted(&[(0, 2), (1, 1)], 0), counted(&[(1, 1), (2, 2)], 1)]
    }

    #[test]
    fn hand_example_posterior() {
        let model = train_naive_bayes(&hand_fixture(), 2, 3, 1.0).unwrap();
        // p(x|A) = (2+1)/(3+3) = 1/2, p(x|B) = (0+1)/(3+3) = 1/6, priors 1/2
        let p = model.predict_proba(&counted(&[(0, 1)], 0).features).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-9, "got {p:?}");
        assert!((p[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn log_space_matches_direct_product() {
        let model = train_naive_bayes(&hand_fixture(), 2, 3, 1.0).unwrap();
        let query = counted(&[(0, 1), (1, 2)], 0).features;
        let via_log = model.predict_proba(&query).unwrap();
        // direct product route on the same tables
        let mut direct: Vec<f64> = (0..2)
            .map(|c| {
                let mut p = model.log_priors[c].exp();
                for &(id, tf) in &query.counts {
                    p *= model.term_log_likelihood[c][id as usize].exp().powi(tf as i32);
                }
                p
            })
            .collect();
        let sum: f64 = direct.iter().sum();
        for p in direct.iter_mut() {
            *p /= sum;
        }
        for (a, b) in via_log.iter().zip(&direct) {
            assert!((a - b).abs() / b.abs().max(1e-300) < 1e-9);
        }
    }

    #[test]
    fn empty_vector_gives_priors() {
        let mut data = hand_fixture();
        data.push(counted(&[(2, 1)], 0)); // priors 2/3 vs 1/3
        let model = train_naive_bayes(&data, 2, 3, 1.0).unwrap();
        let p = model.predict_proba(&counted(&[], 0).features).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplication_with_scaled_alpha_is_invariant() {
        let data = hand_fixture();
        let model1 = train_naive_bayes(&data, 2, 3, 1.0).unwrap();
        let mut doubled = data.clone();
        doubled.extend(data.clone());
        let model2 = train_naive_bayes(&doubled, 2, 3, 2.0).unwrap();
        let query = counted(&[(0, 1), (2, 1)], 0).features;
        let p1 = model1.predict_proba(&query).unwrap();
        let p2 = model2.predict_proba(&query).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn likelihoods_sum_to_one_over_vocab() {
        let model = train_naive_bayes(&hand_fixture(), 2, 3, 1.0).unwrap();
        for row in &model.term_log_likelihood {
            let sum: f64 = row.iter().map(|l| l.exp()).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_and_missing_category() {
        assert!(train_naive_bayes(&[], 2, 3, 1.0).is_err());
        let one_sided = vec![counted(&[(0, 1)], 0)];
        assert!(train_naive_bayes(&one_sided, 2, 3, 1.0).is_err());
    }

    #[test]
    fn schema_mismatch_reported() {
        let model = train_naive_bayes(&hand_fixture(), 2, 3, 1.0).unwrap();
        let bad = FeatureVector { sparse: vec![], counts: vec![], dense: vec![1.0, 2.0] };
        assert!(model.predict_proba(&bad).is_err());
    }
}
