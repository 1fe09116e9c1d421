//! Built-in to-be-explained classifiers implementing the [`Predictor`]
//! contract: a 1-nearest-neighbor classifier, a small 1-d convolutional
//! network for binary tasks, and a constant classifier for baselines.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Adam, AdamConfig, BoundParams, Graph, Linear, NodeId, ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};
use crate::series::{ClassLabel, Dataset, Predictor, TimeSeries};

/// 1-nearest-neighbor classifier under the Euclidean metric; distance ties
/// break to the lowest training index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneNnClassifier {
    train: Dataset,
}

impl OneNnClassifier {
    pub fn fit(d: &Dataset) -> Result<Self> {
        Ok(OneNnClassifier { train: d.clone() })
    }

    pub fn training_set(&self) -> &Dataset {
        &self.train
    }
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

impl Predictor for OneNnClassifier {
    fn predict(&self, series: &TimeSeries) -> Result<ClassLabel> {
        if series.len() != self.train.series_length() {
            return Err(Error::LengthMismatch {
                left: series.len(),
                right: self.train.series_length(),
            });
        }
        let mut best = f64::INFINITY;
        let mut best_label = self.train.instances()[0].label;
        for inst in self.train.instances() {
            let d = squared_euclidean(series.values(), inst.series.values());
            if d < best {
                best = d;
                best_label = inst.label;
            }
        }
        Ok(best_label)
    }
}

/// Always predicts the same label; useful as the degenerate baseline that
/// no counterfactual search can flip.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConstantClassifier(pub ClassLabel);

impl Predictor for ConstantClassifier {
    fn predict(&self, _series: &TimeSeries) -> Result<ClassLabel> {
        Ok(self.0)
    }
}

/// Training hyperparameters for [`SmallCnnClassifier`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub n_kernels: usize,
    pub kernel_width: usize,
}

impl Default for CnnHyper {
    fn default() -> Self {
        CnnHyper {
            epochs: 100,
            batch_size: 16,
            lr: 1e-3,
            seed: 0,
            n_kernels: 16,
            kernel_width: 7,
        }
    }
}

/// Small binary CNN: conv1d (valid padding) -> relu -> global mean over
/// time -> dense -> sigmoid at threshold 0.5.
#[derive(Debug, Clone)]
pub struct SmallCnnClassifier {
    params: ParamSet,
    kernel: ParamId,
    kernel_bias: ParamId,
    head: Linear,
    series_len: usize,
    hyper: CnnHyper,
}

impl SmallCnnClassifier {
    fn build_params(hyper: &CnnHyper, series_len: usize) -> Result<(ParamSet, ParamId, ParamId, Linear)> {
        if hyper.kernel_width > series_len {
            return Err(Error::invalid_input(format!(
                "kernel width {} exceeds series length {series_len}",
                hyper.kernel_width
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let mut params = ParamSet::new();
        let kernel = params.add_uniform(
            "conv.kernel",
            vec![hyper.n_kernels, hyper.kernel_width],
            hyper.kernel_width,
            &mut rng,
        )?;
        let kernel_bias = params.add_uniform(
            "conv.bias",
            vec![hyper.n_kernels],
            hyper.kernel_width,
            &mut rng,
        )?;
        let head = Linear::new(&mut params, "head", hyper.n_kernels, 1, &mut rng)?;
        Ok((params, kernel, kernel_bias, head))
    }

    /// Forward pass to logits `[B, 1]` for a batch leaf `[B, N]`.
    fn logits(
        &self,
        g: &mut Graph,
        bound: &BoundParams,
        batch: NodeId,
    ) -> Result<NodeId> {
        let conv = g.conv1d(batch, bound.node(self.kernel))?; // [B, K, L]
        let pooled_pre = g.relu(conv);
        let pooled = g.global_mean_over_time(pooled_pre); // [B, K]
        let biased = g.add(pooled, bound.node(self.kernel_bias))?;
        self.head.apply(g, bound, biased)
    }

    /// Trains with logit-safe BCE and Adam; deterministic given
    /// `hyper.seed`.
    pub fn fit(d: &Dataset, hyper: &CnnHyper) -> Result<Self> {
        let alphabet = d.label_alphabet();
        if alphabet.len() != 2 || alphabet != [ClassLabel(0), ClassLabel(1)] {
            return Err(Error::usage(format!(
                "the CNN handles binary datasets with labels {{0, 1}}; got {alphabet:?}"
            )));
        }
        let (params, kernel, kernel_bias, head) = Self::build_params(hyper, d.series_length())?;
        let mut model = SmallCnnClassifier {
            params,
            kernel,
            kernel_bias,
            head,
            series_len: d.series_length(),
            hyper: hyper.clone(),
        };
        let mut group = vec![model.kernel, model.kernel_bias];
        group.extend(model.head.param_ids());
        let mut adam = Adam::new(AdamConfig::with_lr(hyper.lr), group, &model.params);

        let n = d.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(1));
        for epoch in 0..hyper.epochs {
            // fresh shuffle each epoch
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            for batch_idx in order.chunks(hyper.batch_size.max(1)) {
                let b = batch_idx.len();
                let mut xdata = Vec::with_capacity(b * model.series_len);
                let mut ydata = Vec::with_capacity(b);
                for &i in batch_idx {
                    let inst = &d.instances()[i];
                    xdata.extend_from_slice(inst.series.values());
                    ydata.push(inst.label.0 as f64);
                }
                let mut g = Graph::new();
                let bound = BoundParams::bind(&mut g, &model.params);
                let x = g.leaf(Tensor::matrix(b, model.series_len, xdata)?);
                let y = g.leaf(Tensor::matrix(b, 1, ydata)?);
                let logits = model.logits(&mut g, &bound, x)?;
                let loss = g.bce_loss(logits, y)?;
                let loss_value = g.value(loss).item()?;
                if !loss_value.is_finite() {
                    return Err(Error::TrainingDiverged {
                        phase: "cnn".into(),
                        iteration: epoch,
                    });
                }
                g.backward(loss)?;
                adam.step(&mut model.params, &bound.grads(&g))?;
            }
        }
        Ok(model)
    }

    /// Sigmoid probability of class 1.
    pub fn probability(&self, series: &TimeSeries) -> Result<f64> {
        if series.len() != self.series_len {
            return Err(Error::LengthMismatch {
                left: series.len(),
                right: self.series_len,
            });
        }
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, &self.params);
        let x = g.leaf(Tensor::matrix(1, self.series_len, series.values().to_vec())?);
        let logits = self.logits(&mut g, &bound, x)?;
        let z = g.value(logits).data()[0];
        Ok(1.0 / (1.0 + (-z).exp()))
    }

    pub fn hyper(&self) -> &CnnHyper {
        &self.hyper
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut with_meta = self.params.clone();
        with_meta.add("meta.series_len", Tensor::scalar(self.series_len as f64))?;
        with_meta.add("meta.n_kernels", Tensor::scalar(self.hyper.n_kernels as f64))?;
        with_meta.add(
            "meta.kernel_width",
            Tensor::scalar(self.hyper.kernel_width as f64),
        )?;
        with_meta.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let stored = ParamSet::load(path)?;
        let meta = |name: &str| -> Result<usize> {
            let id = stored
                .id_by_name(name)
                .ok_or_else(|| Error::invalid_input(format!("missing {name} in model file")))?;
            Ok(stored.tensor(id).item()? as usize)
        };
        let hyper = CnnHyper {
            n_kernels: meta("meta.n_kernels")?,
            kernel_width: meta("meta.kernel_width")?,
            ..CnnHyper::default()
        };
        let series_len = meta("meta.series_len")?;
        let (mut params, kernel, kernel_bias, head) = Self::build_params(&hyper, series_len)?;
        params.load_values_from(&stored)?;
        Ok(SmallCnnClassifier {
            params,
            kernel,
            kernel_bias,
            head,
            series_len,
            hyper,
        })
    }
}

impl Predictor for SmallCnnClassifier {
    fn predict(&self, series: &TimeSeries) -> Result<ClassLabel> {
        let p = self.probability(series)?;
        Ok(if p >= 0.5 { ClassLabel(1) } else { ClassLabel(0) })
    }
}

/// Fraction of instances in `d` that `predictor` labels correctly.
pub fn accuracy(predictor: &dyn Predictor, d: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for inst in d.instances() {
        if predictor.predict(&inst.series)? == inst.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / d.len() as f64)
}
