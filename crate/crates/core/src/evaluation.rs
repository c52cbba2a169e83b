//! Train/test splitting, confusion-matrix metrics and the coding
//! reliability calculator.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::classifier::ModelParams;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test fraction must lie in [0, 1), got {0}")]
    BadFraction(f64),
    #[error("no samples")]
    Empty,
    #[error("got {actual} predictions for {expected} true labels")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("label index {value} is out of range for {k} classes")]
    UnknownLabel { value: usize, k: usize },
    #[error("total_codes must be positive")]
    ZeroTotalCodes,
    #[error("2·duplicate_codes ({duplicates}·2) exceeds total_codes ({total})")]
    DuplicatesExceedTotal { duplicates: u64, total: u64 },
    #[error("prediction failed: {0}")]
    Predict(#[from] crate::classifier::ClassifierError),
}

/// Disjoint train/test index partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub test_fraction: f64,
    pub seed: u64,
}

/// Stratified split: shuffles within each class with a seeded generator and
/// sends close to `count·fraction` of every class to the test side.
///
/// Per-class test counts start at `floor(count·fraction)` and the classes
/// with the largest fractional remainders are rounded up (ties broken by
/// first-occurrence order) until the global target `round(n·fraction)` is
/// met, so every class deviates from its exact share by at most one sample.
pub fn stratified_split<T: Eq + Hash>(
    labels: &[T],
    fraction: f64,
    seed: u64,
) -> Result<Split, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    if !(0.0..1.0).contains(&fraction) {
        return Err(EvalError::BadFraction(fraction));
    }

    // Group indices by class, classes in first-occurrence order.
    let mut slot_of: HashMap<&T, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (index, label) in labels.iter().enumerate() {
        let slot = *slot_of.entry(label).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(index);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for group in &mut groups {
        group.shuffle(&mut rng);
    }

    let target_total = (labels.len() as f64 * fraction).round() as usize;
    let mut base: Vec<usize> = Vec::with_capacity(groups.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(groups.len());
    for (slot, group) in groups.iter().enumerate() {
        let exact = group.len() as f64 * fraction;
        let floor = exact.floor() as usize;
        base.push(floor);
        remainders.push((slot, exact - floor as f64));
    }
    let assigned: usize = base.iter().sum();
    let extra = target_total.saturating_sub(assigned);
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(slot, _) in remainders.iter().take(extra) {
        base[slot] += 1;
    }

    let mut test = Vec::with_capacity(target_total);
    let mut train = Vec::with_capacity(labels.len() - target_total);
    for (group, &take) in groups.iter().zip(&base) {
        test.extend_from_slice(&group[..take]);
        train.extend_from_slice(&group[take..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, test, test_fraction: fraction, seed })
}

/// Unstratified split: one seeded shuffle over all indices.
pub fn uniform_split(n: usize, fraction: f64, seed: u64) -> Result<Split, EvalError> {
    if n == 0 {
        return Err(EvalError::Empty);
    }
    if !(0.0..1.0).contains(&fraction) {
        return Err(EvalError::BadFraction(fraction));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let take = (n as f64 * fraction).round() as usize;
    let mut test: Vec<usize> = indices[..take].to_vec();
    let mut train: Vec<usize> = indices[take..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, test, test_fraction: fraction, seed })
}

/// K×K count matrix; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let n_classes = rows.len();
        assert!(rows.iter().all(|r| r.len() == n_classes), "matrix must be square");
        Self { n_classes, counts: rows.iter().flatten().copied().collect() }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|i| self.count(i, i)).sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        (0..self.n_classes).map(|j| self.count(i, j)).sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        (0..self.n_classes).map(|i| self.count(i, j)).sum()
    }
}

impl Serialize for ConfusionMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.n_classes))?;
        for i in 0..self.n_classes {
            let row: Vec<u64> = (0..self.n_classes).map(|j| self.count(i, j)).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

/// Count (true, predicted) pairs into a K×K matrix.
pub fn confusion(
    true_labels: &[usize],
    predicted: &[usize],
    n_classes: usize,
) -> Result<ConfusionMatrix, EvalError> {
    if true_labels.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            expected: true_labels.len(),
            actual: predicted.len(),
        });
    }
    let mut counts = vec![0u64; n_classes * n_classes];
    for (&t, &p) in true_labels.iter().zip(predicted) {
        if t >= n_classes {
            return Err(EvalError::UnknownLabel { value: t, k: n_classes });
        }
        if p >= n_classes {
            return Err(EvalError::UnknownLabel { value: p, k: n_classes });
        }
        counts[t * n_classes + p] += 1;
    }
    Ok(ConfusionMatrix { n_classes, counts })
}

/// Precision, recall and F1 of one class. Each 0/0 case is defined as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Per-class precision/recall/F1 from a confusion matrix:
/// `P = TP/(TP+FP)`, `R = TP/(TP+FN)`, `F1 = 2PR/(P+R)`, 0/0 → 0.
pub fn class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.n_classes())
        .map(|k| {
            let tp = cm.count(k, k);
            let precision = ratio(tp, cm.col_sum(k));
            let recall = ratio(tp, cm.row_sum(k));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics { precision, recall, f1 }
        })
        .collect()
}

/// Full metrics bundle: accuracy, per-class P/R/F1, macro and micro F1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// Filled by callers that also score the training split.
    pub train_accuracy: Option<f64>,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub classes: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
}

/// Aggregate a confusion matrix into a [`MetricsReport`].
///
/// `accuracy = trace/total`; macro-F1 is the unweighted mean of per-class
/// F1; micro-F1 comes from globally pooled counts, `2·TP/(2·TP+FP+FN)`,
/// which for single-label data equals accuracy exactly.
pub fn aggregate_metrics(
    cm: &ConfusionMatrix,
    classes: &[String],
) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let per_class = class_metrics(cm);
    let accuracy = cm.trace() as f64 / total as f64;
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / per_class.len() as f64;
    let tp = cm.trace();
    let fp = total - tp; // every miss is one false positive and one false negative
    let micro_f1 = ratio(2 * tp, 2 * tp + fp + fp);
    Ok(MetricsReport {
        accuracy,
        train_accuracy: None,
        macro_f1,
        micro_f1,
        classes: classes.to_vec(),
        per_class,
        confusion: cm.clone(),
    })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<18} {:>8.4}", "accuracy (test)", self.accuracy)?;
        if let Some(train) = self.train_accuracy {
            writeln!(f, "{:<18} {:>8.4}", "accuracy (train)", train)?;
        }
        writeln!(f, "{:<18} {:>8.4}", "f1 (macro)", self.macro_f1)?;
        writeln!(f, "{:<18} {:>8.4}", "f1 (micro)", self.micro_f1)?;
        writeln!(f)?;
        writeln!(f, "{:<12} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1")?;
        for (name, m) in self.classes.iter().zip(&self.per_class) {
            writeln!(f, "{:<12} {:>9.4} {:>9.4} {:>9.4}", name, m.precision, m.recall, m.f1)?;
        }
        writeln!(f)?;
        writeln!(f, "confusion matrix (rows true, columns predicted)")?;
        write!(f, "{:<12}", "")?;
        for name in &self.classes {
            write!(f, " {name:>10}")?;
        }
        writeln!(f)?;
        for (i, name) in self.classes.iter().enumerate() {
            write!(f, "{name:<12}")?;
            for j in 0..self.confusion.n_classes() {
                write!(f, " {:>10}", self.confusion.count(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Inputs of the test-retest reliability ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReliabilityInput {
    total_codes: u64,
    duplicate_codes: u64,
}

impl ReliabilityInput {
    pub fn new(total_codes: u64, duplicate_codes: u64) -> Result<Self, EvalError> {
        if total_codes == 0 {
            return Err(EvalError::ZeroTotalCodes);
        }
        if 2 * duplicate_codes > total_codes {
            return Err(EvalError::DuplicatesExceedTotal {
                duplicates: duplicate_codes,
                total: total_codes,
            });
        }
        Ok(Self { total_codes, duplicate_codes })
    }

    pub fn total_codes(&self) -> u64 {
        self.total_codes
    }

    pub fn duplicate_codes(&self) -> u64 {
        self.duplicate_codes
    }
}

/// Test-retest reliability: `2·duplicate_codes / total_codes`, in [0, 1].
pub fn reliability(input: &ReliabilityInput) -> f64 {
    2.0 * input.duplicate_codes as f64 / input.total_codes as f64
}

/// Predict every row of `x` and aggregate against `y`.
pub fn evaluate(model: &ModelParams, x: &Array2<f64>, y: &[usize]) -> Result<MetricsReport, EvalError> {
    if y.is_empty() || x.nrows() == 0 {
        return Err(EvalError::Empty);
    }
    if x.nrows() != y.len() {
        return Err(EvalError::LengthMismatch { expected: x.nrows(), actual: y.len() });
    }
    let mut predicted = Vec::with_capacity(y.len());
    for row in x.rows() {
        let features = row.to_vec();
        predicted.push(model.predict(&features)?);
    }
    let cm = confusion(y, &predicted, model.n_classes())?;
    aggregate_metrics(&cm, &model.classes)
}

/// Plain accuracy of `model` on `(x, y)`, used for train-split scoring.
pub fn accuracy(model: &ModelParams, x: &Array2<f64>, y: &[usize]) -> Result<f64, EvalError> {
    if y.is_empty() || x.nrows() != y.len() {
        return Err(EvalError::LengthMismatch { expected: x.nrows(), actual: y.len() });
    }
    let mut hits = 0usize;
    for (row, &label) in x.rows().into_iter().zip(y) {
        if model.predict(&row.to_vec())? == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / y.len() as f64)
}
