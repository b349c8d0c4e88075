//! Evaluation machinery: k-fold cross-validation, percentage splits,
//! confusion matrices, and the metric roster (accuracy, kappa, MAE, RMSE,
//! RAE, RRSE, per-category precision/recall).
//!
//! MAE/RMSE are computed over full probability distributions against
//! one-hot truth, normalized by N·K; RAE/RRSE divide by the error of a
//! baseline that always emits the training-set prior distribution.

use serde::{Deserialize, Serialize};

use crate::classifiers::{CategoryIndex, LabeledExample};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub n_categories: usize,
    /// Row = actual, column = predicted, row-major.
    pub cells: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(n_categories: usize) -> ConfusionMatrix {
        ConfusionMatrix { n_categories, cells: vec![0; n_categories * n_categories] }
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.cells[actual * self.n_categories + predicted]
    }

    pub fn add(&mut self, actual: usize, predicted: usize) {
        self.cells[actual * self.n_categories + predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_categories).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sum(&self, actual: usize) -> u64 {
        (0..self.n_categories).map(|p| self.get(actual, p)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.n_categories).map(|a| self.get(a, predicted)).sum()
    }

    pub fn merged(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        assert_eq!(self.n_categories, other.n_categories);
        ConfusionMatrix {
            n_categories: self.n_categories,
            cells: self.cells.iter().zip(&other.cells).map(|(a, b)| a + b).collect(),
        }
    }

    /// Truth marginal distribution (row sums / total).
    pub fn truth_priors(&self) -> Vec<f64> {
        let total = self.total() as f64;
        (0..self.n_categories).map(|a| self.row_sum(a) as f64 / total).collect()
    }

    /// Aligned plain-text rendering with category headers.
    pub fn render(&self, category_names: &[String]) -> String {
        let width = category_names.iter().map(|n| n.chars().count()).max().unwrap_or(1).max(6);
        let mut out = String::new();
        out.push_str(&format!("{:width$} |", "a\\p", width = width));
        for name in category_names {
            out.push_str(&format!(" {:>width$}", name, width = width));
        }
        out.push('\n');
        for (a, name) in category_names.iter().enumerate() {
            out.push_str(&format!("{:width$} |", name, width = width));
            for p in 0..self.n_categories {
                out.push_str(&format!(" {:>width$}", self.get(a, p), width = width));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryPr {
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Absent when chance agreement is 1 (a single occupied category).
    pub kappa: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
    /// Absent when the baseline error is zero.
    pub rae: Option<f64>,
    pub rrse: Option<f64>,
    pub per_category: Vec<CategoryPr>,
    pub confusion: ConfusionMatrix,
    pub n_instances: u64,
}

/// Seeded shuffle then balanced partition into k folds (sizes differ by at
/// most one; disjoint and covering).
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("k must be in [2, {n}], got {k}")));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut indices);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0usize;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(indices[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Train-prefix/test-suffix split of n instances. Unshuffled, the train set
/// is exactly the first ⌊n·pct/100⌋ indices; shuffled, a seeded permutation
/// is applied first.
pub fn percentage_split(n: usize, pct: f64, seed: u64, shuffle: bool) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0 < pct && pct < 100.0) {
        return Err(Error::InvalidArgument(format!("split percentage must be in (0, 100), got {pct}")));
    }
    let train_size = (n as f64 * pct / 100.0).floor() as usize;
    if train_size == 0 || train_size == n {
        return Err(Error::InvalidArgument(format!(
            "degenerate split: {train_size} train / {} test",
            n - train_size
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    if shuffle {
        Rng::new(seed).shuffle(&mut indices);
    }
    let test = indices.split_off(train_size);
    Ok((indices, test))
}

/// Count (actual, predicted) pairs into a K×K matrix.
pub fn confusion(predictions: &[CategoryIndex], truth: &[CategoryIndex], n_categories: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "prediction/truth length mismatch: {} vs {}",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput("confusion of zero instances".into()));
    }
    let mut cm = ConfusionMatrix::zeros(n_categories);
    for (&p, &t) in predictions.iter().zip(truth) {
        cm.add(t, p);
    }
    Ok(cm)
}

/// Metric roster from a confusion matrix, optionally refined by
/// per-instance probability distributions (paired with the truth labels in
/// the same order). `baseline_priors` defaults to the truth marginals.
pub fn compute_metrics(
    cm: &ConfusionMatrix,
    per_instance: Option<(&[Vec<f64>], &[CategoryIndex])>,
    baseline_priors: Option<&[f64]>,
) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("metrics of an empty confusion matrix".into()));
    }
    let k = cm.n_categories;
    let n = total as f64;
    let accuracy = cm.trace() as f64 / n;

    let p_e: f64 = (0..k)
        .map(|c| cm.row_sum(c) as f64 * cm.col_sum(c) as f64)
        .sum::<f64>()
        / (n * n);
    let kappa = if (1.0 - p_e).abs() < 1e-15 {
        None
    } else {
        Some((accuracy - p_e) / (1.0 - p_e))
    };

    // distribution-based errors against one-hot truth
    let (mae, rmse) = match per_instance {
        Some((probas, truth)) => {
            if probas.len() != total as usize || truth.len() != total as usize {
                return Err(Error::InvalidArgument(
                    "per-instance distributions must match the confusion total".into(),
                ));
            }
            let mut abs_sum = 0.0;
            let mut sq_sum = 0.0;
            for (proba, &t) in probas.iter().zip(truth) {
                for (c, &p) in proba.iter().enumerate() {
                    let y = if c == t { 1.0 } else { 0.0 };
                    abs_sum += (p - y).abs();
                    sq_sum += (p - y) * (p - y);
                }
            }
            (abs_sum / (n * k as f64), (sq_sum / (n * k as f64)).sqrt())
        }
        None => {
            // hard one-hot predictions: every error contributes |1-0| twice
            let errors = (total - cm.trace()) as f64;
            (2.0 * errors / (n * k as f64), (2.0 * errors / (n * k as f64)).sqrt())
        }
    };

    // baseline always emits the prior distribution
    let default_priors;
    let priors: &[f64] = match baseline_priors {
        Some(p) => p,
        None => {
            default_priors = cm.truth_priors();
            &default_priors
        }
    };
    let mut base_abs = 0.0;
    let mut base_sq = 0.0;
    for t in 0..k {
        let weight = cm.row_sum(t) as f64;
        if weight == 0.0 {
            continue;
        }
        let mut abs_i = 0.0;
        let mut sq_i = 0.0;
        for (c, &p) in priors.iter().enumerate() {
            let y = if c == t { 1.0 } else { 0.0 };
            abs_i += (p - y).abs();
            sq_i += (p - y) * (p - y);
        }
        base_abs += weight * abs_i;
        base_sq += weight * sq_i;
    }
    let base_mae = base_abs / (n * k as f64);
    let base_rmse = (base_sq / (n * k as f64)).sqrt();
    let rae = (base_mae > 0.0).then(|| mae / base_mae);
    let rrse = (base_rmse > 0.0).then(|| rmse / base_rmse);

    let per_category = (0..k)
        .map(|c| {
            let col = cm.col_sum(c) as f64;
            let row = cm.row_sum(c) as f64;
            let diag = cm.get(c, c) as f64;
            CategoryPr {
                precision: if col > 0.0 { diag / col } else { 0.0 },
                recall: if row > 0.0 { diag / row } else { 0.0 },
            }
        })
        .collect();

    Ok(EvalReport {
        accuracy,
        kappa,
        mae,
        rmse,
        rae,
        rrse,
        per_category,
        confusion: cm.clone(),
        n_instances: total,
    })
}

/// Anything that can be scored: a label per instance and optionally a
/// distribution. Individual classifiers give both; the vote gives a label
/// only.
pub trait EvalModel {
    fn eval_label(&self, features: &FeatureVector) -> Result<CategoryIndex>;
    fn eval_dist(&self, features: &FeatureVector) -> Result<Option<Vec<f64>>>;
}

/// One remembered prediction, dumpable as JSONL for later inspection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold: Option<usize>,
    /// Index into the evaluated dataset.
    pub index: usize,
    pub actual: CategoryIndex,
    pub predicted: CategoryIndex,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proba: Option<Vec<f64>>,
}

pub struct CvOutcome {
    pub averaged: EvalReport,
    pub folds: Vec<EvalReport>,
    pub predictions: Vec<PredictionRow>,
}

/// Evaluate a train-set/test-set pair with a freshly trained model.
pub fn evaluate_split<F>(
    train_fn: F,
    data: &[LabeledExample],
    n_categories: usize,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<EvalReport>
where
    F: Fn(&[LabeledExample]) -> Result<Box<dyn EvalModel>>,
{
    Ok(evaluate_split_detailed(train_fn, data, n_categories, train_idx, test_idx)?.0)
}

/// As `evaluate_split`, also returning the remembered per-instance
/// predictions.
pub fn evaluate_split_detailed<F>(
    train_fn: F,
    data: &[LabeledExample],
    n_categories: usize,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<(EvalReport, Vec<PredictionRow>)>
where
    F: Fn(&[LabeledExample]) -> Result<Box<dyn EvalModel>>,
{
    let train_set: Vec<LabeledExample> = train_idx.iter().map(|&i| data[i].clone()).collect();
    let model = train_fn(&train_set)?;

    let mut predictions = Vec::with_capacity(test_idx.len());
    let mut truth = Vec::with_capacity(test_idx.len());
    let mut probas: Vec<Vec<f64>> = Vec::new();
    let mut rows = Vec::with_capacity(test_idx.len());
    let mut have_probas = true;
    for &i in test_idx {
        let predicted = model.eval_label(&data[i].features)?;
        let dist = model.eval_dist(&data[i].features)?;
        predictions.push(predicted);
        truth.push(data[i].category);
        match &dist {
            Some(d) if have_probas => probas.push(d.clone()),
            _ => have_probas = false,
        }
        rows.push(PredictionRow {
            fold: None,
            index: i,
            actual: data[i].category,
            predicted,
            proba: dist,
        });
    }
    let cm = confusion(&predictions, &truth, n_categories)?;
    let mut train_priors = vec![0.0; n_categories];
    for ex in &train_set {
        train_priors[ex.category] += 1.0 / train_set.len() as f64;
    }
    let per_instance = have_probas.then_some((probas.as_slice(), truth.as_slice()));
    let report = compute_metrics(&cm, per_instance, Some(&train_priors))?;
    Ok((report, rows))
}

/// K-fold cross-validation: train on all-but-fold, test on the fold, then
/// average scalar metrics (unweighted) and sum the confusion matrices.
/// Re-seeds up to 10 times if some training fold misses a category.
pub fn cross_validate<F>(
    train_fn: F,
    data: &[LabeledExample],
    n_categories: usize,
    k: usize,
    seed: u64,
) -> Result<CvOutcome>
where
    F: Fn(&[LabeledExample]) -> Result<Box<dyn EvalModel>>,
{
    let n = data.len();
    let mut folds = kfold_split(n, k, seed)?;
    let mut last_missing: Option<(usize, usize)> = None;
    'attempt: for attempt in 0..10 {
        folds = kfold_split(n, k, seed.wrapping_add(attempt))?;
        for (f, fold) in folds.iter().enumerate() {
            let mut present = vec![false; n_categories];
            let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
            for (i, ex) in data.iter().enumerate() {
                if !in_fold.contains(&i) {
                    present[ex.category] = true;
                }
            }
            if let Some(missing) = present.iter().position(|p| !p) {
                last_missing = Some((f, missing));
                continue 'attempt;
            }
        }
        last_missing = None;
        break;
    }
    if let Some((fold, category)) = last_missing {
        return Err(Error::Training(format!(
            "category {category} missing from the training data of fold {fold} after 10 reseeds"
        )));
    }

    let mut reports = Vec::with_capacity(k);
    let mut predictions = Vec::with_capacity(n);
    for (f, fold) in folds.iter().enumerate() {
        let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let train_idx: Vec<usize> = (0..n).filter(|i| !in_fold.contains(i)).collect();
        let (report, rows) = evaluate_split_detailed(&train_fn, data, n_categories, &train_idx, fold)?;
        reports.push(report);
        predictions.extend(rows.into_iter().map(|mut r| {
            r.fold = Some(f);
            r
        }));
    }

    let averaged = average_reports(&reports);
    Ok(CvOutcome { averaged, folds: reports, predictions })
}

fn mean_of(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    values.sum::<f64>() / count as f64
}

/// Unweighted mean of scalar metrics; confusion matrices summed;
/// per-category precision/recall recomputed from the pooled confusion.
pub fn average_reports(reports: &[EvalReport]) -> EvalReport {
    let k = reports.len();
    let pooled = reports
        .iter()
        .skip(1)
        .fold(reports[0].confusion.clone(), |acc, r| acc.merged(&r.confusion));
    let pooled_report = compute_metrics(&pooled, None, None).expect("pooled confusion is non-empty");

    let kappas: Vec<f64> = reports.iter().filter_map(|r| r.kappa).collect();
    let raes: Vec<f64> = reports.iter().filter_map(|r| r.rae).collect();
    let rrses: Vec<f64> = reports.iter().filter_map(|r| r.rrse).collect();
    EvalReport {
        accuracy: mean_of(reports.iter().map(|r| r.accuracy), k),
        kappa: (!kappas.is_empty()).then(|| kappas.iter().sum::<f64>() / kappas.len() as f64),
        mae: mean_of(reports.iter().map(|r| r.mae), k),
        rmse: mean_of(reports.iter().map(|r| r.rmse), k),
        rae: (!raes.is_empty()).then(|| raes.iter().sum::<f64>() / raes.len() as f64),
        rrse: (!rrses.is_empty()).then(|| rrses.iter().sum::<f64>() / rrses.len() as f64),
        per_category: pooled_report.per_category,
        confusion: pooled,
        n_instances: reports.iter().map(|r| r.n_instances).sum(),
    }
}
