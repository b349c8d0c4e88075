//! Linear-kernel SVM trained by sequential minimal optimization, one binary
//! machine per unordered category pair. Multiclass probabilities are the
//! normalized pairwise-vote fractions.
//!
//! Inputs are binary term presence plus the dense block scaled into [0, 1]
//! from training minima/maxima; the linear kernel keeps an explicit weight
//! vector so decision values cost one sparse dot product.

use serde::{Deserialize, Serialize};

use super::{check_dense_len, check_training_data, dense_min_max, scale_dense, ClassifierKind, LabeledExample, Model};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairMachine {
    pub cat_a: usize,
    pub cat_b: usize,
    /// Dense weight vector over term ids followed by scaled dense slots.
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Lagrange multipliers of the pair's training examples, within [0, C].
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub n_categories: usize,
    pub vocab_size: usize,
    pub dense_len: usize,
    pub c: f64,
    pub tol: f64,
    pub dense_scale: Vec<(f64, f64)>,
    pub machines: Vec<PairMachine>,
}

fn sparse_dot(a: &SparseVec, b: &SparseVec) -> f64 {
    let mut dot = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

fn encode(fv: &FeatureVector, vocab_size: usize, scale: &[(f64, f64)]) -> SparseVec {
    let mut x: SparseVec = fv
        .counts
        .iter()
        .filter(|(id, tf)| (*id as usize) < vocab_size && *tf > 0)
        .map(|&(id, _)| (id, 1.0))
        .collect();
    for (d, &v) in fv.dense.iter().enumerate() {
        // dense features scaled into [-1, 1]; constant dimensions drop out
        let s = 2.0 * scale_dense(v, scale[d]) - 1.0;
        if s != 0.0 && scale[d].1 > scale[d].0 {
            x.push((vocab_size as u32 + d as u32, s));
        }
    }
    x
}

struct Smo<'a> {
    x: &'a [SparseVec],
    y: &'a [f64],
    alphas: Vec<f64>,
    w: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
}

impl<'a> Smo<'a> {
    fn raw_decision(&self, i: usize) -> f64 {
        let mut f = 0.0;
        for &(id, v) in &self.x[i] {
            f += self.w[id as usize] * v;
        }
        f
    }

    /// β_t = y_t − w·x_t: the bias each example wants. Feasibility of one
    /// shared bias across the β landscape is exactly the KKT condition.
    fn beta(&self, t: usize) -> f64 {
        self.y[t] - self.raw_decision(t)
    }

    fn in_lower_set(&self, t: usize) -> bool {
        // examples that force b >= β_t
        (self.y[t] > 0.0 && self.alphas[t] < self.c - 1e-12)
            || (self.y[t] < 0.0 && self.alphas[t] > 1e-12)
    }

    fn in_upper_set(&self, t: usize) -> bool {
        // examples that force b <= β_t
        (self.y[t] > 0.0 && self.alphas[t] > 1e-12)
            || (self.y[t] < 0.0 && self.alphas[t] < self.c - 1e-12)
    }

    fn kernel(&self, i: usize, j: usize) -> f64 {
        sparse_dot(&self.x[i], &self.x[j])
    }

    fn try_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (ai, aj) = (self.alphas[i], self.alphas[j]);
        let (yi, yj) = (self.y[i], self.y[j]);
        // errors with any common bias: the pair update only uses E_i − E_j
        let (ei, ej) = (self.raw_decision(i) - yi, self.raw_decision(j) - yj);

        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (self.c + aj - ai).min(self.c))
        } else {
            ((ai + aj - self.c).max(0.0), (ai + aj).min(self.c))
        };
        if hi - lo < 1e-12 {
            return false;
        }
        let eta = 2.0 * self.kernel(i, j) - self.kernel(i, i) - self.kernel(j, j);
        if eta >= 0.0 {
            return false;
        }
        let aj_new = (aj - yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj_new - aj).abs() < 1e-10 {
            return false;
        }
        let ai_new = (ai + yi * yj * (aj - aj_new)).clamp(0.0, self.c);

        for &(id, v) in &self.x[i] {
            self.w[id as usize] += yi * (ai_new - ai) * v;
        }
        for &(id, v) in &self.x[j] {
            self.w[id as usize] += yj * (aj_new - aj) * v;
        }
        self.alphas[i] = ai_new;
        self.alphas[j] = aj_new;
        true
    }

    /// The maximal violating pair: the hardest "b must be at least" example
    /// against the hardest "b must be at most" example.
    fn max_violating_pair(&self) -> Option<(usize, usize, f64)> {
        let n = self.x.len();
        let mut lo: Option<(usize, f64)> = None;
        let mut up: Option<(usize, f64)> = None;
        for t in 0..n {
            let beta = self.beta(t);
            if self.in_lower_set(t) && lo.map(|(_, v)| beta > v).unwrap_or(true) {
                lo = Some((t, beta));
            }
            if self.in_upper_set(t) && up.map(|(_, v)| beta < v).unwrap_or(true) {
                up = Some((t, beta));
            }
        }
        match (lo, up) {
            (Some((i, bi)), Some((j, bj))) => Some((i, j, bi - bj)),
            _ => None,
        }
    }

    fn count_violations(&self) -> usize {
        match self.max_violating_pair() {
            Some((_, _, gap)) if gap > self.tol => {
                // count every example outside its KKT band
                let (mut b_lo, mut b_up) = (f64::NEG_INFINITY, f64::INFINITY);
                for t in 0..self.x.len() {
                    let beta = self.beta(t);
                    if self.in_lower_set(t) {
                        b_lo = b_lo.max(beta);
                    }
                    if self.in_upper_set(t) {
                        b_up = b_up.min(beta);
                    }
                }
                let mid = (b_lo + b_up) / 2.0;
                (0..self.x.len())
                    .filter(|&t| {
                        let beta = self.beta(t);
                        (self.in_lower_set(t) && beta > mid + self.tol)
                            || (self.in_upper_set(t) && beta < mid - self.tol)
                    })
                    .count()
            }
            _ => 0,
        }
    }

    /// Pair steps grouped into sweeps of at most n; training stops once
    /// `max_passes` consecutive sweeps see every example within tolerance.
    fn solve(&mut self, max_passes: usize) {
        let n = self.x.len();
        let step_cap = 40_000 + 200 * n;
        let mut steps = 0usize;
        let mut quiet = 0usize;
        while quiet < max_passes && steps < step_cap {
            let mut changed = 0usize;
            for _ in 0..n {
                let Some((i, j, gap)) = self.max_violating_pair() else {
                    break;
                };
                if gap <= self.tol {
                    break;
                }
                if self.try_step(i, j) {
                    changed += 1;
                    steps += 1;
                    continue;
                }
                // degenerate pair (η = 0 or box-locked): try the next
                // best partner for i before giving up this sweep
                let mut advanced = false;
                for j2 in 0..n {
                    if j2 != j && self.in_upper_set(j2) && self.try_step(i, j2) {
                        advanced = true;
                        changed += 1;
                        steps += 1;
                        break;
                    }
                }
                if !advanced {
                    break;
                }
            }
            if changed == 0 || self.count_violations() == 0 {
                quiet += 1;
            } else {
                quiet = 0;
            }
        }
        // final bias from the feasible-b interval
        let (mut b_lo, mut b_up) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut interior_sum = 0.0;
        let mut interior_count = 0usize;
        for t in 0..n {
            let beta = self.beta(t);
            if self.alphas[t] > 1e-12 && self.alphas[t] < self.c - 1e-12 {
                interior_sum += beta;
                interior_count += 1;
            }
            if self.in_lower_set(t) {
                b_lo = b_lo.max(beta);
            }
            if self.in_upper_set(t) {
                b_up = b_up.min(beta);
            }
        }
        self.b = if interior_count > 0 {
            interior_sum / interior_count as f64
        } else if b_lo.is_finite() && b_up.is_finite() {
            (b_lo + b_up) / 2.0
        } else {
            0.0
        };
    }
}

/// Train one SMO machine per unordered category pair on the linear kernel.
pub fn train_svm_smo(
    data: &[LabeledExample],
    n_categories: usize,
    vocab_size: usize,
    c: f64,
    tol: f64,
    max_passes: usize,
) -> Result<SvmModel> {
    check_training_data(data, n_categories)?;
    if n_categories < 2 {
        return Err(Error::Training("SVM needs at least two categories".into()));
    }
    for ex in data {
        if ex.features.dense.iter().any(|v| !v.is_finite())
            || ex.features.sparse.iter().any(|(_, w)| !w.is_finite())
        {
            return Err(Error::NonFinite("feature value in SVM training data".into()));
        }
    }
    let dense_len = data[0].features.dense.len();
    let dense_scale = dense_min_max(data, dense_len);
    let dim = vocab_size + dense_len;

    let encoded: Vec<SparseVec> = data
        .iter()
        .map(|ex| encode(&ex.features, vocab_size, &dense_scale))
        .collect();

    let mut machines = Vec::with_capacity(n_categories * (n_categories - 1) / 2);
    for cat_a in 0..n_categories {
        for cat_b in (cat_a + 1)..n_categories {
            let mut x: Vec<SparseVec> = Vec::new();
            let mut y: Vec<f64> = Vec::new();
            for (ex, enc) in data.iter().zip(&encoded) {
                if ex.category == cat_a {
                    x.push(enc.clone());
                    y.push(1.0);
                } else if ex.category == cat_b {
                    x.push(enc.clone());
                    y.push(-1.0);
                }
            }
            let mut smo = Smo {
                alphas: vec![0.0; x.len()],
                w: vec![0.0; dim],
                b: 0.0,
                c,
                tol,
                x: &x,
                y: &y,
            };
            smo.solve(max_passes);
            machines.push(PairMachine {
                cat_a,
                cat_b,
                weights: smo.w,
                bias: smo.b,
                alphas: smo.alphas,
            });
        }
    }

    Ok(SvmModel {
        n_categories,
        vocab_size,
        dense_len,
        c,
        tol,
        dense_scale,
        machines,
    })
}

impl SvmModel {
    /// Decision value of one pair machine for an input vector.
    pub fn decision(&self, machine: &PairMachine, features: &FeatureVector) -> f64 {
        let x = encode(features, self.vocab_size, &self.dense_scale);
        let mut f = machine.bias;
        for &(id, v) in &x {
            f += machine.weights[id as usize] * v;
        }
        f
    }
}

impl Model for SvmModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Svm
    }

    fn n_categories(&self) -> usize {
        self.n_categories
    }

    fn predict_proba(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        check_dense_len(self.dense_len, features)?;
        let mut votes = vec![0usize; self.n_categories];
        for m in &self.machines {
            if self.decision(m, features) >= 0.0 {
                votes[m.cat_a] += 1;
            } else {
                votes[m.cat_b] += 1;
            }
        }
        // fraction of the K-1 pairs involving each category, then normalized
        let pairs_per_category = (self.n_categories - 1) as f64;
        let mut probs: Vec<f64> = votes.iter().map(|&v| v as f64 / pairs_per_category).collect();
        let sum: f64 = probs.iter().sum();
        if sum > 0.0 {
            for p in probs.iter_mut() {
                *p /= sum;
            }
        } else {
            let uniform = 1.0 / self.n_categories as f64;
            probs.iter_mut().for_each(|p| *p = uniform);
        }
        Ok(probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_example(x: f64, category: usize) -> LabeledExample {
        LabeledExample {
            features: FeatureVector { sparse: vec![], counts: vec![], dense: vec![x] },
            category,
        }
    }

    #[test]
    fn two_point_boundary_at_zero() {
        let data = vec![dense_example(-1.0, 0), dense_example(1.0, 1)];
        let model = train_svm_smo(&data, 2, 0, 1.0, 1e-3, 10).unwrap();
        // midpoint separator: 0.5 falls on the B side
        assert_eq!(model.predict(&dense_example(0.5, 0).features).unwrap(), 1);
        assert_eq!(model.predict(&dense_example(-0.5, 0).features).unwrap(), 0);
        // margin: support vectors reach |decision| >= 1 - tol
        for ex in &data {
            let d = model.decision(&model.machines[0], &ex.features);
            assert!(d.abs() >= 1.0 - 1e-3, "decision {d}");
        }
    }

    #[test]
    fn alphas_respect_box_constraint() {
        let data = vec![
            dense_example(-2.0, 0),
            dense_example(-1.0, 0),
            dense_example(1.0, 1),
            dense_example(2.0, 1),
        ];
        let model = train_svm_smo(&data, 2, 0, 1.0, 1e-3, 10).unwrap();
        for m in &model.machines {
            for &a in &m.alphas {
                assert!((0.0..=1.0 + 1e-12).contains(&a), "alpha {a}");
            }
        }
    }

    #[test]
    fn seven_categories_give_21_machines() {
        let data: Vec<LabeledExample> = (0..7)
            .flat_map(|c| {
                [
                    dense_example(c as f64 * 10.0, c),
                    dense_example(c as f64 * 10.0 + 1.0, c),
                ]
            })
            .collect();
        let model = train_svm_smo(&data, 7, 0, 1.0, 1e-3, 10).unwrap();
        assert_eq!(model.machines.len(), 21);
        let p = model.predict_proba(&data[0].features).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separable_fixture_has_zero_training_error() {
        let data: Vec<LabeledExample> = vec![
            dense_example(-3.0, 0),
            dense_example(-2.0, 0),
            dense_example(-1.5, 0),
            dense_example(1.5, 1),
            dense_example(2.0, 1),
            dense_example(3.0, 1),
        ];
        // C large enough that the hard-margin solution is box-feasible
        let model = train_svm_smo(&data, 2, 0, 10.0, 1e-3, 10).unwrap();
        for ex in &data {
            assert_eq!(model.predict(&ex.features).unwrap(), ex.category);
        }
        // support vectors (alpha > 0) sit on or outside the margin
        let m = &model.machines[0];
        for (i, ex) in data.iter().enumerate() {
            if m.alphas[i] > 1e-9 {
                let d = model.decision(m, &ex.features);
                assert!(d.abs() >= 1.0 - model.tol, "sv {i} decision {d}");
            }
        }
    }

    #[test]
    fn single_category_rejected() {
        let data = vec![dense_example(0.0, 0)];
        assert!(train_svm_smo(&data, 1, 0, 1.0, 1e-3, 10).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let data = vec![dense_example(f64::NAN, 0), dense_example(1.0, 1)];
        assert!(train_svm_smo(&data, 2, 0, 1.0, 1e-3, 10).is_err());
    }
}
