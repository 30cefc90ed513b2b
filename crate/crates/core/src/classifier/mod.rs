//! Per-subsample voters.
//!
//! Anything implementing [`Classifier`] can turn a feature image into a vote.
//! [`SoftmaxModel`] is a small trainable baseline; [`ConfusionVoter`] draws
//! votes straight from a confusion matrix so the voting statistics can be
//! studied without any signal processing.

mod confusion;
mod model_io;
mod softmax;

use crate::bispectrum::BispectrumImage;
use crate::error::{Error, Result};

pub use confusion::ConfusionVoter;
pub use model_io::{read_model, write_model};
pub use softmax::{
    loss_and_gradient, pooled_features, train_softmax, FeatureSet, SoftmaxModel, TrainConfig,
    TrainReport,
};

/// A feature-image classifier.
pub trait Classifier {
    fn num_classes(&self) -> usize;

    /// Probability per class; non-negative and summing to one.
    fn class_probabilities(&self, image: &BispectrumImage) -> Result<Vec<f64>>;

    /// Most probable class, lowest index on ties.
    fn classify(&self, image: &BispectrumImage) -> Result<usize> {
        Ok(argmax(&self.class_probabilities(image)?))
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// An image with its class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pub image: BispectrumImage,
    pub label: usize,
}

/// Row-stochastic confusion matrix from `(true, predicted)` pairs.
/// Row `i` is the empirical distribution of predictions for true class `i`.
pub fn confusion_from_pairs(
    num_classes: usize,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Vec<Vec<f64>>> {
    if num_classes < 2 {
        return Err(Error::invalid(format!(
            "confusion matrix needs at least 2 classes, got {num_classes}"
        )));
    }
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (t, p) in pairs {
        if t >= num_classes || p >= num_classes {
            return Err(Error::invalid(format!(
                "label pair ({t}, {p}) out of range for {num_classes} classes"
            )));
        }
        counts[t][p] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let n: u64 = row.iter().sum();
            if n == 0 {
                return Err(Error::invalid(format!("class {i} has no labeled items")));
            }
            Ok(row.into_iter().map(|c| c as f64 / n as f64).collect())
        })
        .collect()
}

/// Confusion matrix of `model` over a labeled set.
pub fn estimate_confusion<C: Classifier + ?Sized>(
    model: &C,
    set: &[LabeledImage],
) -> Result<Vec<Vec<f64>>> {
    let pairs = set
        .iter()
        .map(|item| Ok((item.label, model.classify(&item.image)?)))
        .collect::<Result<Vec<_>>>()?;
    confusion_from_pairs(model.num_classes(), pairs)
}
