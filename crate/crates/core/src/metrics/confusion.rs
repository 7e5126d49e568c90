use super::{Metric, MetricsError};

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

/// Builds a matrix over `labels` from parallel label sequences.
pub fn confusion<S: AsRef<str>>(labels: &[S], truth: &[S], predicted: &[S]) -> Result<ConfusionMatrix, MetricsError> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    let index = |s: &S| {
        labels
            .iter()
            .position(|l| l.as_ref() == s.as_ref())
            .ok_or_else(|| MetricsError::UnknownLabel(s.as_ref().to_string()))
    };
    let mut cm = ConfusionMatrix::empty(labels.iter().map(|l| l.as_ref().to_string()).collect());
    for (t, p) in truth.iter().zip(predicted) {
        cm.add(index(t)?, index(p)?);
    }
    Ok(cm)
}

impl ConfusionMatrix {
    pub fn empty(labels: Vec<String>) -> Self {
        let k = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; k]; k],
        }
    }

    /// Records one sample by class index. Panics on out-of-range indices.
    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn tp(&self, c: usize) -> u64 {
        self.counts[c][c]
    }

    pub fn fp(&self, c: usize) -> u64 {
        (0..self.labels.len()).filter(|&t| t != c).map(|t| self.counts[t][c]).sum()
    }

    pub fn fn_(&self, c: usize) -> u64 {
        (0..self.labels.len()).filter(|&p| p != c).map(|p| self.counts[c][p]).sum()
    }

    pub fn tn(&self, c: usize) -> u64 {
        self.total() - self.tp(c) - self.fp(c) - self.fn_(c)
    }

    /// Samples whose true class is `c`.
    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    /// Correct predictions over all predictions (the multi-class reading of
    /// (TP+TN)/(TP+TN+FP+FN)).
    pub fn accuracy(&self) -> Metric {
        let correct: u64 = (0..self.labels.len()).map(|c| self.counts[c][c]).sum();
        Metric::ratio(correct, self.total())
    }

    /// One-vs-rest accuracy for class `c`.
    pub fn class_accuracy(&self, c: usize) -> Metric {
        Metric::ratio(self.tp(c) + self.tn(c), self.total())
    }

    pub fn precision(&self, c: usize) -> Metric {
        Metric::ratio(self.tp(c), self.tp(c) + self.fp(c))
    }

    pub fn recall(&self, c: usize) -> Metric {
        Metric::ratio(self.tp(c), self.tp(c) + self.fn_(c))
    }

    /// `2TP / (2TP + FP + FN)`.
    pub fn f1(&self, c: usize) -> Metric {
        Metric::ratio(2 * self.tp(c), 2 * self.tp(c) + self.fp(c) + self.fn_(c))
    }
}

/// `2PR / (P + R)`, zero when both are zero.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
