//! Sigmoid multilayer perceptron: chi-squared term selection feeds a single
//! hidden layer; per-example backpropagation of squared error with learning
//! rate and momentum. Weights and the loss/gradient helpers are public so
//! the analytic gradients can be checked against finite differences.

use serde::{Deserialize, Serialize};

use super::{check_dense_len, check_training_data, dense_min_max, scale_dense, ClassifierKind, LabeledExample, Model};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rng::Rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpParams {
    /// Hidden layer width; `None` means ⌈(inputs + categories) / 2⌉ capped at 64.
    pub hidden: Option<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// How many terms the chi-squared filter keeps as inputs.
    pub top_k: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: None,
            learning_rate: 0.3,
            momentum: 0.2,
            epochs: 500,
            top_k: 500,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    pub n_categories: usize,
    pub vocab_size: usize,
    pub dense_len: usize,
    /// Term ids kept by the chi-squared filter, ascending.
    pub selected_terms: Vec<u32>,
    pub dense_scale: Vec<(f64, f64)>,
    pub hidden: usize,
    /// [input][hidden]
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// [hidden][category]
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Chi-squared score of each term's presence against the category labels;
/// returns the `top_k` best ids, ascending.
fn select_terms(data: &[LabeledExample], n_categories: usize, vocab_size: usize, top_k: usize) -> Vec<u32> {
    let n = data.len() as f64;
    let mut class_totals = vec![0.0f64; n_categories];
    for ex in data {
        class_totals[ex.category] += 1.0;
    }
    let mut present = vec![vec![0.0f64; n_categories]; vocab_size];
    for ex in data {
        for &(id, _) in &ex.features.counts {
            if (id as usize) < vocab_size {
                present[id as usize][ex.category] += 1.0;
            }
        }
    }
    let mut scored: Vec<(f64, u32)> = Vec::with_capacity(vocab_size);
    for (id, row) in present.iter().enumerate() {
        let present_total: f64 = row.iter().sum();
        if present_total == 0.0 || present_total == n {
            scored.push((0.0, id as u32));
            continue;
        }
        let mut chi2 = 0.0;
        for c in 0..n_categories {
            for (observed, row_total) in [(row[c], present_total), (class_totals[c] - row[c], n - present_total)] {
                let expected = row_total * class_totals[c] / n;
                if expected > 0.0 {
                    chi2 += (observed - expected).powi(2) / expected;
                }
            }
        }
        scored.push((chi2, id as u32));
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut kept: Vec<u32> = scored.into_iter().take(top_k).map(|(_, id)| id).collect();
    kept.sort_unstable();
    kept
}

impl MlpModel {
    /// Input vector: tf-idf weight of each selected term, then the dense
    /// block scaled into [0, 1].
    pub fn inputs(&self, fv: &FeatureVector) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.selected_terms.len() + self.dense_len);
        for &id in &self.selected_terms {
            let w = fv
                .sparse
                .binary_search_by_key(&id, |&(i, _)| i)
                .map(|pos| fv.sparse[pos].1)
                .unwrap_or(0.0);
            x.push(w);
        }
        for (d, &v) in fv.dense.iter().enumerate() {
            x.push(scale_dense(v, self.dense_scale[d]));
        }
        x
    }

    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut hidden_out = vec![0.0; self.hidden];
        for (h, out) in hidden_out.iter_mut().enumerate() {
            let mut z = self.b1[h];
            for (i, &xi) in x.iter().enumerate() {
                if xi != 0.0 {
                    z += self.w1[i][h] * xi;
                }
            }
            *out = sigmoid(z);
        }
        let mut output = vec![0.0; self.n_categories];
        for (o, out) in output.iter_mut().enumerate() {
            let mut z = self.b2[o];
            for (h, &hv) in hidden_out.iter().enumerate() {
                z += self.w2[h][o] * hv;
            }
            *out = sigmoid(z);
        }
        (hidden_out, output)
    }

    /// Squared-error loss ½·Σ(target − output)² of one example.
    pub fn example_loss(&self, fv: &FeatureVector, category: usize) -> f64 {
        let (_, output) = self.forward(&self.inputs(fv));
        output
            .iter()
            .enumerate()
            .map(|(o, &v)| {
                let t = if o == category { 1.0 } else { 0.0 };
                0.5 * (t - v) * (t - v)
            })
            .sum()
    }

    /// Analytic gradients ∂E/∂θ of `example_loss` for one example, in the
    /// same shapes as (w1, b1, w2, b2).
    #[allow(clippy::type_complexity)]
    pub fn gradients(&self, fv: &FeatureVector, category: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let x = self.inputs(fv);
        let (hidden_out, output) = self.forward(&x);

        // output delta: (t − o)·σ'(o); gradient of E is the negative
        let mut delta_out = vec![0.0; self.n_categories];
        for (o, d) in delta_out.iter_mut().enumerate() {
            let t = if o == category { 1.0 } else { 0.0 };
            *d = (t - output[o]) * output[o] * (1.0 - output[o]);
        }
        let mut delta_hidden = vec![0.0; self.hidden];
        for (h, d) in delta_hidden.iter_mut().enumerate() {
            let mut e = 0.0;
            for (o, &dout) in delta_out.iter().enumerate() {
                e += dout * self.w2[h][o];
            }
            *d = e * hidden_out[h] * (1.0 - hidden_out[h]);
        }

        let mut gw1 = vec![vec![0.0; self.hidden]; x.len()];
        for (i, &xi) in x.iter().enumerate() {
            for (h, &dh) in delta_hidden.iter().enumerate() {
                gw1[i][h] = -dh * xi;
            }
        }
        let gb1: Vec<f64> = delta_hidden.iter().map(|d| -d).collect();
        let mut gw2 = vec![vec![0.0; self.n_categories]; self.hidden];
        for (h, &hv) in hidden_out.iter().enumerate() {
            for (o, &dout) in delta_out.iter().enumerate() {
                gw2[h][o] = -dout * hv;
            }
        }
        let gb2: Vec<f64> = delta_out.iter().map(|d| -d).collect();
        (gw1, gb1, gw2, gb2)
    }

    /// Mean squared error over a dataset, normalized by N·K.
    pub fn mse(&self, data: &[LabeledExample]) -> f64 {
        let mut total = 0.0;
        for ex in data {
            let (_, output) = self.forward(&self.inputs(&ex.features));
            for (o, &v) in output.iter().enumerate() {
                let t = if o == ex.category { 1.0 } else { 0.0 };
                total += (t - v) * (t - v);
            }
        }
        total / (data.len() as f64 * self.n_categories as f64)
    }
}

pub fn train_mlp(
    data: &[LabeledExample],
    n_categories: usize,
    vocab_size: usize,
    params: &MlpParams,
) -> Result<MlpModel> {
    check_training_data(data, n_categories)?;
    if params.top_k < 1 {
        return Err(Error::InvalidArgument("mlp top_k must be at least 1".into()));
    }
    let dense_len = data[0].features.dense.len();
    let selected_terms = select_terms(data, n_categories, vocab_size, params.top_k);
    let dense_scale = dense_min_max(data, dense_len);
    let n_inputs = selected_terms.len() + dense_len;
    let hidden = params
        .hidden
        .unwrap_or_else(|| ((n_inputs + n_categories).div_ceil(2)).min(64))
        .max(1);

    let mut rng = Rng::new(params.seed);
    fn init(rng: &mut Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| rng.range_f64(-0.5, 0.5)).collect())
            .collect()
    }
    let w1 = init(&mut rng, n_inputs, hidden);
    let b1: Vec<f64> = (0..hidden).map(|_| rng.range_f64(-0.5, 0.5)).collect();
    let w2 = init(&mut rng, hidden, n_categories);
    let b2: Vec<f64> = (0..n_categories).map(|_| rng.range_f64(-0.5, 0.5)).collect();

    let mut model = MlpModel {
        n_categories,
        vocab_size,
        dense_len,
        selected_terms,
        dense_scale,
        hidden,
        w1,
        b1,
        w2,
        b2,
    };

    let inputs: Vec<Vec<f64>> = data.iter().map(|ex| model.inputs(&ex.features)).collect();
    let mut dw1 = vec![vec![0.0; model.hidden]; n_inputs];
    let mut db1 = vec![0.0; model.hidden];
    let mut dw2 = vec![vec![0.0; model.n_categories]; model.hidden];
    let mut db2 = vec![0.0; model.n_categories];

    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..params.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let x = &inputs[i];
            let (hidden_out, output) = model.forward(x);

            let mut delta_out = vec![0.0; model.n_categories];
            for (o, d) in delta_out.iter_mut().enumerate() {
                let t = if o == data[i].category { 1.0 } else { 0.0 };
                epoch_loss += (t - output[o]) * (t - output[o]);
                *d = (t - output[o]) * output[o] * (1.0 - output[o]);
            }
            let mut delta_hidden = vec![0.0; model.hidden];
            for (h, d) in delta_hidden.iter_mut().enumerate() {
                let mut e = 0.0;
                for (o, &dout) in delta_out.iter().enumerate() {
                    e += dout * model.w2[h][o];
                }
                *d = e * hidden_out[h] * (1.0 - hidden_out[h]);
            }

            // hidden→output updates
            for (h, &hv) in hidden_out.iter().enumerate() {
                for (o, &dout) in delta_out.iter().enumerate() {
                    let step = params.learning_rate * dout * hv + params.momentum * dw2[h][o];
                    dw2[h][o] = step;
                    model.w2[h][o] += step;
                }
            }
            for (o, &dout) in delta_out.iter().enumerate() {
                let step = params.learning_rate * dout + params.momentum * db2[o];
                db2[o] = step;
                model.b2[o] += step;
            }
            // input→hidden updates; skip zero inputs (sparse text vectors)
            for (i_in, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                for (h, &dh) in delta_hidden.iter().enumerate() {
                    let step = params.learning_rate * dh * xi + params.momentum * dw1[i_in][h];
                    dw1[i_in][h] = step;
                    model.w1[i_in][h] += step;
                }
            }
            for (h, &dh) in delta_hidden.iter().enumerate() {
                let step = params.learning_rate * dh + params.momentum * db1[h];
                db1[h] = step;
                model.b1[h] += step;
            }
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss at epoch {epoch}")));
        }
    }
    Ok(model)
}

impl Model for MlpModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Mlp
    }

    fn n_categories(&self) -> usize {
        self.n_categories
    }

    fn predict_proba(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        check_dense_len(self.dense_len, features)?;
        let (_, output) = self.forward(&self.inputs(features));
        let sum: f64 = output.iter().sum();
        if sum > 0.0 {
            Ok(output.iter().map(|v| v / sum).collect())
        } else {
            Ok(vec![1.0 / self.n_categories as f64; self.n_categories])
        }
    }
}
