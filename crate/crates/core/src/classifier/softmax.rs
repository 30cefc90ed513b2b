//! Multinomial logistic regression on mean-pooled image features.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax, Classifier, LabeledImage};
use crate::bispectrum::BispectrumImage;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Mean of each `pooling`×`pooling` block per channel, scaled to [0, 1].
/// Layout: block-row, block-column, channel.
pub fn pooled_features(image: &BispectrumImage, pooling: usize) -> Result<Vec<f64>> {
    if pooling == 0 || !image.width.is_multiple_of(pooling) || !image.height.is_multiple_of(pooling)
    {
        return Err(Error::invalid(format!(
            "{}x{} image is not divisible into {pooling}x{pooling} pools",
            image.width, image.height
        )));
    }
    let (pw, ph) = (image.width / pooling, image.height / pooling);
    let mut out = vec![0.0; ph * pw * 3];
    for r in 0..image.height {
        let row = &image.pixels[r * image.width * 3..(r + 1) * image.width * 3];
        let base = (r / pooling) * pw * 3;
        for (c, px) in row.chunks_exact(3).enumerate() {
            let cell = base + (c / pooling) * 3;
            for ch in 0..3 {
                out[cell + ch] += px[ch] as f64;
            }
        }
    }
    let scale = 1.0 / (255.0 * (pooling * pooling) as f64);
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// Dense feature matrix with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub dim: usize,
    pub rows: Vec<f64>,
    pub labels: Vec<usize>,
}

impl FeatureSet {
    pub fn from_images(items: &[LabeledImage], pooling: usize) -> Result<Self> {
        let mut rows = Vec::new();
        let mut labels = Vec::with_capacity(items.len());
        let mut dim = 0;
        for item in items {
            let f = pooled_features(&item.image, pooling)?;
            if dim == 0 {
                dim = f.len();
            } else if f.len() != dim {
                return Err(Error::invalid("images in one set must share dimensions"));
            }
            rows.extend(f);
            labels.push(item.label);
        }
        Ok(FeatureSet { dim, rows, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

fn logits(weights: &[f64], biases: &[f64], x: &[f64]) -> Vec<f64> {
    weights
        .chunks_exact(x.len())
        .zip(biases)
        .map(|(w, b)| b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

/// Mean cross-entropy plus `l2 · ‖W‖²` over the rows `idx` of `data`, with
/// its gradient. Biases are not penalized.
pub fn loss_and_gradient(
    weights: &[f64],
    biases: &[f64],
    data: &FeatureSet,
    idx: &[usize],
    l2: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let d = data.dim;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = vec![0.0; biases.len()];
    let mut loss = 0.0;
    for &i in idx {
        let x = data.row(i);
        let mut p = logits(weights, biases, x);
        softmax_in_place(&mut p);
        let y = data.labels[i];
        loss -= p[y].max(1e-300).ln();
        p[y] -= 1.0;
        for (k, &pk) in p.iter().enumerate() {
            gb[k] += pk;
            for (g, &xv) in gw[k * d..(k + 1) * d].iter_mut().zip(x) {
                *g += pk * xv;
            }
        }
    }
    let inv = 1.0 / idx.len() as f64;
    loss *= inv;
    gw.iter_mut().for_each(|g| *g *= inv);
    gb.iter_mut().for_each(|g| *g *= inv);
    loss += l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in gw.iter_mut().zip(weights) {
        *g += 2.0 * l2 * w;
    }
    (loss, gw, gb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub pooling: usize,
    /// Stop once every per-class validation accuracy exceeds this.
    pub accuracy_floor: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.02,
            l2: 0.05,
            pooling: 4,
            accuracy_floor: Some(0.60),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training-set loss after each epoch (accepted parameters only).
    pub epoch_losses: Vec<f64>,
    pub epochs_run: usize,
    pub final_learning_rate: f64,
}

/// Trained linear softmax classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    pub num_classes: usize,
    pub pooling: usize,
    pub feature_dim: usize,
    /// Row-major `[num_classes × feature_dim]`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    /// Per-class accuracy on the validation set at the end of training.
    pub validation_accuracy: Vec<f64>,
}

impl SoftmaxModel {
    pub fn zeros(num_classes: usize, feature_dim: usize, pooling: usize) -> Self {
        SoftmaxModel {
            num_classes,
            pooling,
            feature_dim,
            weights: vec![0.0; num_classes * feature_dim],
            biases: vec![0.0; num_classes],
            validation_accuracy: vec![0.0; num_classes],
        }
    }

    pub fn probabilities_of(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.feature_dim {
            return Err(Error::invalid(format!(
                "feature vector has {} entries, model expects {}",
                features.len(),
                self.feature_dim
            )));
        }
        let mut p = logits(&self.weights, &self.biases, features);
        softmax_in_place(&mut p);
        Ok(p)
    }

    /// Per-class accuracy over a feature set.
    pub fn per_class_accuracy(&self, data: &FeatureSet) -> Result<Vec<f64>> {
        let mut hit = vec![0usize; self.num_classes];
        let mut seen = vec![0usize; self.num_classes];
        for i in 0..data.len() {
            let y = data.labels[i];
            seen[y] += 1;
            if argmax(&self.probabilities_of(data.row(i))?) == y {
                hit[y] += 1;
            }
        }
        Ok(hit
            .iter()
            .zip(&seen)
            .map(|(&h, &n)| if n == 0 { 0.0 } else { h as f64 / n as f64 })
            .collect())
    }
}

impl Classifier for SoftmaxModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn class_probabilities(&self, image: &BispectrumImage) -> Result<Vec<f64>> {
        self.probabilities_of(&pooled_features(image, self.pooling)?)
    }
}

fn check_labels(data: &FeatureSet, num_classes: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; num_classes];
    for &y in &data.labels {
        if y >= num_classes {
            return Err(Error::invalid(format!("{what} label {y} out of range")));
        }
        seen[y] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::invalid(format!(
            "class {missing} absent from {what} set"
        )));
    }
    Ok(())
}

/// Mini-batch gradient descent on cross-entropy with an L2 penalty.
///
/// After each epoch the full training loss is evaluated; if it went up the
/// epoch is rolled back and the step size halved, so accepted losses never
/// increase.
pub fn train_softmax(
    train: &FeatureSet,
    val: &FeatureSet,
    num_classes: usize,
    config: &TrainConfig,
) -> Result<(SoftmaxModel, TrainReport)> {
    if num_classes < 2 {
        return Err(Error::invalid("training needs at least 2 classes"));
    }
    if train.is_empty() || config.batch_size == 0 {
        return Err(Error::invalid(
            "training set and batch size must be non-empty",
        ));
    }
    if val.dim != train.dim && !val.is_empty() {
        return Err(Error::invalid("train and validation feature sizes differ"));
    }
    check_labels(train, num_classes, "training")?;
    let mut model = SoftmaxModel::zeros(num_classes, train.dim, config.pooling);
    let all: Vec<usize> = (0..train.len()).collect();
    let mut lr = config.learning_rate;
    let mut prev = loss_and_gradient(&model.weights, &model.biases, train, &all, config.l2).0;
    let mut losses = Vec::new();
    let mut epochs_run = 0;
    for epoch in 0..config.epochs {
        epochs_run = epoch + 1;
        let snapshot = (model.weights.clone(), model.biases.clone());
        let mut order = all.clone();
        order.shuffle(&mut stream(config.seed, Purpose::Shuffle, epoch as u64, 0));
        for batch in order.chunks(config.batch_size) {
            let (_, gw, gb) =
                loss_and_gradient(&model.weights, &model.biases, train, batch, config.l2);
            model
                .weights
                .iter_mut()
                .zip(&gw)
                .for_each(|(w, g)| *w -= lr * g);
            model
                .biases
                .iter_mut()
                .zip(&gb)
                .for_each(|(b, g)| *b -= lr * g);
        }
        let loss = loss_and_gradient(&model.weights, &model.biases, train, &all, config.l2).0;
        if loss > prev || !loss.is_finite() {
            (model.weights, model.biases) = snapshot;
            lr *= 0.5;
            losses.push(prev);
            continue;
        }
        prev = loss;
        losses.push(loss);
        if let (Some(floor), false) = (config.accuracy_floor, val.is_empty()) {
            if model.per_class_accuracy(val)?.iter().all(|&a| a > floor) {
                break;
            }
        }
    }
    if !val.is_empty() {
        model.validation_accuracy = model.per_class_accuracy(val)?;
    }
    Ok((
        model,
        TrainReport {
            epoch_losses: losses,
            epochs_run,
            final_learning_rate: lr,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy(n: usize, dim: usize, classes: usize, seed: u64) -> FeatureSet {
        let mut rng = stream(seed, Purpose::Noise, 0, 0);
        let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        let rows = labels
            .iter()
            .flat_map(|&y| {
                let mut r: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
                r[y % dim] += 1.0;
                r
            })
            .collect();
        FeatureSet { dim, rows, labels }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = toy(30, 10, 3, 1);
        let mut rng = stream(2, Purpose::Noise, 0, 0);
        let w: Vec<f64> = (0..30).map(|_| rng.random_range(-0.5..0.5)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
        let idx: Vec<usize> = (0..30).collect();
        let (_, gw, gb) = loss_and_gradient(&w, &b, &data, &idx, 0.05);
        let h = 1e-6;
        let rel = |num: f64, ana: f64| (num - ana).abs() / ana.abs().max(1e-3);
        for j in 0..w.len() {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            let num = (loss_and_gradient(&wp, &b, &data, &idx, 0.05).0
                - loss_and_gradient(&wm, &b, &data, &idx, 0.05).0)
                / (2.0 * h);
            assert!(rel(num, gw[j]) < 1e-5, "w[{j}]: {num} vs {}", gw[j]);
        }
        for k in 0..b.len() {
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp[k] += h;
            bm[k] -= h;
            let num = (loss_and_gradient(&w, &bp, &data, &idx, 0.05).0
                - loss_and_gradient(&w, &bm, &data, &idx, 0.05).0)
                / (2.0 * h);
            assert!(rel(num, gb[k]) < 1e-5, "b[{k}]");
        }
    }

    #[test]
    fn zero_epochs_give_uniform_probabilities() {
        let data = toy(12, 4, 3, 0);
        let cfg = TrainConfig {
            epochs: 0,
            pooling: 1,
            ..TrainConfig::default()
        };
        let (model, _) = train_softmax(&data, &data, 3, &cfg).unwrap();
        let p = model.probabilities_of(data.row(0)).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(argmax(&p), 0);
    }

    #[test]
    fn accepted_losses_never_increase() {
        let data = toy(90, 6, 3, 4);
        let cfg = TrainConfig {
            epochs: 40,
            learning_rate: 500.0,
            pooling: 1,
            accuracy_floor: None,
            ..TrainConfig::default()
        };
        let (_, report) = train_softmax(&data, &data, 3, &cfg).unwrap();
        assert!(
            report.final_learning_rate < 500.0,
            "expected at least one halving"
        );
        assert!(report.epoch_losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn learns_separable_toy_problem() {
        let data = toy(120, 8, 4, 5);
        let cfg = TrainConfig {
            pooling: 1,
            accuracy_floor: None,
            epochs: 60,
            ..TrainConfig::default()
        };
        let (model, _) = train_softmax(&data, &toy(80, 8, 4, 6), 4, &cfg).unwrap();
        assert!(
            model.validation_accuracy.iter().all(|&a| a > 0.6),
            "{:?}",
            model.validation_accuracy
        );
    }

    #[test]
    fn missing_training_class_is_rejected() {
        let mut data = toy(12, 4, 3, 0);
        data.labels.iter_mut().for_each(|y| *y = (*y).min(1));
        let err = train_softmax(&data, &data, 3, &TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("class 2"));
    }

    #[test]
    fn pooling_averages_blocks() {
        let mut px = vec![0u8; 4 * 4 * 3];
        px[0] = 255; // top-left red
        let img = BispectrumImage::new(4, 4, px).unwrap();
        let f = pooled_features(&img, 2).unwrap();
        assert_eq!(f.len(), 12);
        assert_eq!(f[0], 0.25);
        assert!(f[1..].iter().all(|&v| v == 0.0));
        assert!(pooled_features(&img, 3).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = SoftmaxModel::zeros(4, 588, 4);
        let img = BispectrumImage::new(8, 8, vec![0; 192]).unwrap();
        assert!(model.classify(&img).is_err());
        let ok = BispectrumImage::new(56, 56, vec![7; 56 * 56 * 3]).unwrap();
        assert_eq!(model.classify(&ok).unwrap(), 0);
    }
}
