use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{mix, stream, Purpose};

/// Synthetic voter: the vote for an item of true class `i` is drawn from
/// row `i` of a row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionVoter {
    matrix: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    pub rng_seed: u64,
}

impl ConfusionVoter {
    pub fn new(matrix: Vec<Vec<f64>>, rng_seed: u64) -> Result<Self> {
        let n = matrix.len();
        if n < 2 {
            return Err(Error::invalid("confusion matrix needs at least 2 rows"));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("row {i} sums to {s}, not 1")));
            }
        }
        let cumulative = matrix
            .iter()
            .map(|row| {
                row.iter()
                    .scan(0.0, |acc, &v| {
                        *acc += v;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Ok(ConfusionVoter {
            matrix,
            cumulative,
            rng_seed,
        })
    }

    /// `accuracy` on the diagonal, the remainder spread evenly over rivals.
    pub fn uniform_rivals(num_classes: usize, accuracy: f64, rng_seed: u64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid("confusion matrix needs at least 2 rows"));
        }
        let off = (1.0 - accuracy) / (num_classes - 1) as f64;
        let matrix = (0..num_classes)
            .map(|i| {
                (0..num_classes)
                    .map(|j| if i == j { accuracy } else { off })
                    .collect()
            })
            .collect();
        ConfusionVoter::new(matrix, rng_seed)
    }

    pub fn num_classes(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    fn draw(&self, seed: u64, true_class: usize, draw_index: u64) -> usize {
        let u: f64 = stream(seed, Purpose::Confusion, true_class as u64, draw_index).random();
        let row = &self.cumulative[true_class];
        // first bin whose cumulative mass exceeds u; guards float shortfall
        row.iter().position(|&c| u < c).unwrap_or_else(|| {
            self.matrix[true_class]
                .iter()
                .rposition(|&v| v > 0.0)
                .unwrap()
        })
    }

    /// Vote for an item of class `true_class`, drawn from the stream
    /// `(rng_seed, true_class, draw_index)`.
    pub fn confusion_sample(&self, true_class: usize, draw_index: u64) -> Result<usize> {
        if true_class >= self.num_classes() {
            return Err(Error::invalid(format!(
                "class {true_class} out of range for {} classes",
                self.num_classes()
            )));
        }
        Ok(self.draw(self.rng_seed, true_class, draw_index))
    }

    /// Like [`confusion_sample`](Self::confusion_sample) but on an
    /// independent stream selected by `stream_key`.
    pub fn keyed_sample(&self, true_class: usize, stream_key: u64, draw_index: u64) -> usize {
        self.draw(mix(self.rng_seed ^ mix(stream_key)), true_class, draw_index)
    }
}
