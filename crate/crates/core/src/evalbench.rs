//! Prediction-quality metrics: accuracy against ground truth, the
//! majority-class baseline, confidence-filtered accuracy sweeps, calibration
//! buckets, confusion counts, and side-by-side model comparison.
//!
//! All metrics are pure functions; correctness counts are accumulated in
//! integer arithmetic and divided once, so confusion-derived accuracy equals
//! the accuracy operation exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{label_digest, LabeledPair, PairKey};

/// Previously published davinci-era results on the 485-pair bill/company
/// relevance benchmark. These are reference constants for the comparison
/// report, not test targets: the models are deprecated paid endpoints.
pub const REFERENCE_POINTS: &[&str] = &[
    "text-davinci-003: accuracy 75.1% (n=485); confidence>90 subset 79% (n=433)",
    "text-davinci-002: accuracy 52.2% (n=485); confidence>90 subset 83% (n=41, most predictions eliminated)",
    "always-predict-irrelevant baseline: 70.9% (n=485)",
];

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("label set is empty")]
    EmptyLabels,
    #[error("no prediction matches any label")]
    EmptyIntersection,
    #[error("prediction for {0} has no ground-truth label")]
    UnlabeledPrediction(PairKey),
    #[error("duplicate prediction for {0}")]
    DuplicatePrediction(PairKey),
    #[error("confidence {confidence} for {key} outside [0, 100]")]
    ConfidenceOutOfRange { key: PairKey, confidence: u8 },
    #[error("invalid calibration edges: {0}")]
    InvalidEdges(String),
    #[error("label digests differ: {a} vs {b}; reports are not over the same label set")]
    LabelDigestMismatch { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub key: PairKey,
    pub predicted: bool,
    pub confidence: u8,
}

/// One model's predictions over a pair set. `excluded_count` tallies pairs
/// that produced no parseable prediction; they are reported, never imputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub model_id: String,
    pub entries: Vec<PredictionEntry>,
    pub excluded_count: usize,
}

impl PredictionSet {
    pub fn new(
        model_id: impl Into<String>,
        entries: Vec<PredictionEntry>,
        excluded_count: usize,
    ) -> Result<Self, EvalError> {
        let mut seen = HashMap::new();
        for e in &entries {
            if e.confidence > 100 {
                return Err(EvalError::ConfidenceOutOfRange {
                    key: e.key.clone(),
                    confidence: e.confidence,
                });
            }
            if seen.insert(e.key.clone(), ()).is_some() {
                return Err(EvalError::DuplicatePrediction(e.key.clone()));
            }
        }
        Ok(Self {
            model_id: model_id.into(),
            entries,
            excluded_count,
        })
    }
}

/// Matched (prediction, label) rows, the common substrate of every metric.
struct Matched<'a> {
    rows: Vec<(&'a PredictionEntry, bool)>,
    /// Labeled pairs that had no prediction.
    missing_predictions: usize,
}

fn match_up<'a>(
    predictions: &'a PredictionSet,
    labels: &[LabeledPair],
) -> Result<Matched<'a>, EvalError> {
    let by_key: HashMap<PairKey, bool> = labels.iter().map(|l| (l.key(), l.relevant)).collect();
    let mut rows = Vec::with_capacity(predictions.entries.len());
    for entry in &predictions.entries {
        let truth = by_key
            .get(&entry.key)
            .ok_or_else(|| EvalError::UnlabeledPrediction(entry.key.clone()))?;
        rows.push((entry, *truth));
    }
    if rows.is_empty() {
        return Err(EvalError::EmptyIntersection);
    }
    let predicted_keys: HashMap<&PairKey, ()> =
        predictions.entries.iter().map(|e| (&e.key, ())).collect();
    let missing_predictions = labels
        .iter()
        .filter(|l| !predicted_keys.contains_key(&l.key()))
        .count();
    Ok(Matched {
        rows,
        missing_predictions,
    })
}

/// Fraction of matched pairs where the prediction equals the label, plus the
/// matched count.
pub fn accuracy(
    predictions: &PredictionSet,
    labels: &[LabeledPair],
) -> Result<(f64, usize), EvalError> {
    let matched = match_up(predictions, labels)?;
    let n = matched.rows.len();
    let correct = matched
        .rows
        .iter()
        .filter(|(e, truth)| e.predicted == *truth)
        .count();
    Ok((correct as f64 / n as f64, n))
}

/// Accuracy of always predicting the more common label: max(p, 1-p) over the
/// positive fraction p. An exact tie is 0.5.
pub fn majority_baseline(labels: &[LabeledPair]) -> Result<f64, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::EmptyLabels);
    }
    let positive = labels.iter().filter(|l| l.relevant).count();
    let negative = labels.len() - positive;
    Ok(positive.max(negative) as f64 / labels.len() as f64)
}

/// Accuracy restricted to predictions with confidence strictly greater than
/// `min_confidence`. `None` is the explicit empty-slice signal: every
/// prediction was filtered out, there is no 0/0 to report.
pub fn filtered_accuracy(
    predictions: &PredictionSet,
    labels: &[LabeledPair],
    min_confidence: u32,
) -> Result<Option<(f64, usize)>, EvalError> {
    let matched = match_up(predictions, labels)?;
    let retained: Vec<_> = matched
        .rows
        .iter()
        .filter(|(e, _)| e.confidence as u32 > min_confidence)
        .collect();
    if retained.is_empty() {
        return Ok(None);
    }
    let correct = retained
        .iter()
        .filter(|(e, truth)| e.predicted == *truth)
        .count();
    Ok(Some((correct as f64 / retained.len() as f64, retained.len())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBucket {
    /// Inclusive lower edge.
    pub lo: u32,
    /// Exclusive upper edge, except the last bucket which closes at 100.
    pub hi: u32,
    pub count: usize,
    pub mean_confidence: Option<f64>,
    pub empirical_accuracy: Option<f64>,
}

/// Bucket predictions by confidence into `[lo, hi)` intervals (last bucket
/// closed at 100) and measure empirical accuracy per bucket.
pub fn calibration_curve(
    predictions: &PredictionSet,
    labels: &[LabeledPair],
    bucket_edges: &[u32],
) -> Result<Vec<CalibrationBucket>, EvalError> {
    if bucket_edges.len() < 2 {
        return Err(EvalError::InvalidEdges("need at least two edges".into()));
    }
    if bucket_edges.first() != Some(&0) || bucket_edges.last() != Some(&100) {
        return Err(EvalError::InvalidEdges(format!(
            "edges must cover [0, 100], got {bucket_edges:?}"
        )));
    }
    if !bucket_edges.windows(2).all(|w| w[0] < w[1]) {
        return Err(EvalError::InvalidEdges(format!(
            "edges must be strictly increasing, got {bucket_edges:?}"
        )));
    }

    // Empty prediction sets produce all-zero buckets, so tolerate the
    // EmptyIntersection case here.
    let rows = match match_up(predictions, labels) {
        Ok(m) => m.rows,
        Err(EvalError::EmptyIntersection) => Vec::new(),
        Err(e) => return Err(e),
    };

    let mut buckets: Vec<CalibrationBucket> = bucket_edges
        .windows(2)
        .map(|w| CalibrationBucket {
            lo: w[0],
            hi: w[1],
            count: 0,
            mean_confidence: None,
            empirical_accuracy: None,
        })
        .collect();
    let last = buckets.len() - 1;

    let mut sums: Vec<(u64, usize)> = vec![(0, 0); buckets.len()]; // (confidence sum, correct)
    for (entry, truth) in &rows {
        let c = entry.confidence as u32;
        let idx = if c >= buckets[last].lo {
            last
        } else {
            buckets
                .iter()
                .position(|b| c >= b.lo && c < b.hi)
                .expect("edges cover [0, 100]")
        };
        buckets[idx].count += 1;
        sums[idx].0 += entry.confidence as u64;
        if entry.predicted == *truth {
            sums[idx].1 += 1;
        }
    }
    for (bucket, (conf_sum, correct)) in buckets.iter_mut().zip(sums) {
        if bucket.count > 0 {
            bucket.mean_confidence = Some(conf_sum as f64 / bucket.count as f64);
            bucket.empirical_accuracy = Some(correct as f64 / bucket.count as f64);
        }
    }
    Ok(buckets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

/// Standard confusion counts; positive = predicted/labeled relevant.
pub fn confusion(
    predictions: &PredictionSet,
    labels: &[LabeledPair],
) -> Result<ConfusionCounts, EvalError> {
    let matched = match_up(predictions, labels)?;
    let mut counts = ConfusionCounts {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (entry, truth) in matched.rows {
        match (entry.predicted, truth) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fn_ += 1,
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredRow {
    pub threshold: u32,
    pub n_retained: usize,
    /// None is the empty-slice signal: nothing survived the filter.
    pub accuracy: Option<f64>,
    /// Ground-truth composition of the dropped predictions, making visible
    /// whether a confidence cut skews positive or negative.
    pub dropped_positive_labels: usize,
    pub dropped_negative_labels: usize,
}

/// Every quantitative result for one prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    pub label_digest: String,
    /// Matched (predicted and labeled) pair count.
    pub n: usize,
    pub accuracy: f64,
    pub baseline_accuracy: f64,
    /// Unparseable predictions plus labeled pairs with no prediction.
    pub excluded_count: usize,
    pub filtered: Vec<FilteredRow>,
    pub calibration: Vec<CalibrationBucket>,
    pub confusion: ConfusionCounts,
}

/// Compute the full report: accuracy, baseline, filter sweep, calibration,
/// and confusion counts over one prediction set.
pub fn evaluate(
    predictions: &PredictionSet,
    labels: &[LabeledPair],
    thresholds: &[u32],
    bucket_edges: &[u32],
) -> Result<EvalReport, EvalError> {
    let (acc, n) = accuracy(predictions, labels)?;
    let baseline = majority_baseline(labels)?;
    let matched = match_up(predictions, labels)?;
    let counts = confusion(predictions, labels)?;

    let mut filtered = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let point = filtered_accuracy(predictions, labels, threshold)?;
        let (dropped_pos, dropped_neg) = matched
            .rows
            .iter()
            .filter(|(e, _)| e.confidence as u32 <= threshold)
            .fold((0, 0), |(p, q), (_, truth)| {
                if *truth {
                    (p + 1, q)
                } else {
                    (p, q + 1)
                }
            });
        filtered.push(FilteredRow {
            threshold,
            n_retained: point.map_or(0, |(_, n)| n),
            accuracy: point.map(|(a, _)| a),
            dropped_positive_labels: dropped_pos,
            dropped_negative_labels: dropped_neg,
        });
    }

    let calibration = calibration_curve(predictions, labels, bucket_edges)?;

    Ok(EvalReport {
        model_id: predictions.model_id.clone(),
        label_digest: label_digest(labels),
        n,
        accuracy: acc,
        baseline_accuracy: baseline,
        excluded_count: predictions.excluded_count + matched.missing_predictions,
        filtered,
        calibration,
        confusion: counts,
    })
}

fn fraction(v: f64) -> String {
    format!("{v:.3} ({:.1}%)", v * 100.0)
}

impl EvalReport {
    /// Aligned plain-text rendering; fractions at 3 decimal places.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model:            {}", self.model_id);
        let _ = writeln!(out, "label digest:     {}", &self.label_digest[..16.min(self.label_digest.len())]);
        let _ = writeln!(out, "n (matched):      {}", self.n);
        let _ = writeln!(out, "excluded:         {}", self.excluded_count);
        let _ = writeln!(out, "accuracy:         {}", fraction(self.accuracy));
        let _ = writeln!(out, "baseline:         {}", fraction(self.baseline_accuracy));
        let c = &self.confusion;
        let _ = writeln!(out, "confusion:        tp={} fp={} tn={} fn={}", c.tp, c.fp, c.tn, c.fn_);
        let _ = writeln!(out, "\nfiltered accuracy (confidence strictly greater than threshold):");
        let _ = writeln!(out, "  {:>9}  {:>10}  {:>16}  {:>13}", "threshold", "n_retained", "accuracy", "dropped (+/-)");
        for row in &self.filtered {
            let acc = match row.accuracy {
                Some(a) => fraction(a),
                None => "(empty)".to_string(),
            };
            let _ = writeln!(
                out,
                "  {:>9}  {:>10}  {:>16}  {:>6}/{:<6}",
                row.threshold, row.n_retained, acc, row.dropped_positive_labels, row.dropped_negative_labels
            );
        }
        let _ = writeln!(out, "\ncalibration buckets:");
        let _ = writeln!(out, "  {:>10}  {:>6}  {:>15}  {:>18}", "bucket", "count", "mean confidence", "empirical accuracy");
        for b in &self.calibration {
            let mean = b.mean_confidence.map_or("-".into(), |m| format!("{m:.1}"));
            let acc = b.empirical_accuracy.map_or("-".into(), |a| format!("{a:.3}"));
            let _ = writeln!(out, "  [{:>3},{:>3})  {:>6}  {:>15}  {:>18}", b.lo, b.hi, b.count, mean, acc);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFilteredRow {
    pub threshold: u32,
    pub accuracy_a: Option<f64>,
    pub accuracy_b: Option<f64>,
    pub delta: Option<f64>,
    pub retained_a: usize,
    pub retained_b: usize,
    pub low_retention_a: bool,
    pub low_retention_b: bool,
}

/// Side-by-side comparison of two reports over the same label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model_a: String,
    pub model_b: String,
    pub label_digest: String,
    pub n_a: usize,
    pub n_b: usize,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    pub accuracy_delta: f64,
    pub baseline_accuracy: f64,
    pub filtered: Vec<ComparisonFilteredRow>,
    /// Thresholds where filtering eliminated most of a model's predictions,
    /// rendering the filtered figure close to useless.
    pub low_retention_fraction: f64,
    pub reference_points: Vec<String>,
}

/// Compare two reports. Errors when the label digests differ: filtered rows
/// and baselines are only comparable over the identical label set.
pub fn compare_models(
    a: &EvalReport,
    b: &EvalReport,
    low_retention_fraction: f64,
) -> Result<ModelComparison, EvalError> {
    if a.label_digest != b.label_digest {
        return Err(EvalError::LabelDigestMismatch {
            a: a.label_digest.clone(),
            b: b.label_digest.clone(),
        });
    }

    let mut thresholds: Vec<u32> = a
        .filtered
        .iter()
        .chain(&b.filtered)
        .map(|r| r.threshold)
        .collect();
    thresholds.sort_unstable();
    thresholds.dedup();

    let row_for = |report: &EvalReport, t: u32| -> Option<FilteredRow> {
        report.filtered.iter().find(|r| r.threshold == t).cloned()
    };
    let filtered = thresholds
        .into_iter()
        .filter_map(|t| {
            let ra = row_for(a, t)?;
            let rb = row_for(b, t)?;
            let low = |row: &FilteredRow, n: usize| {
                n > 0 && (row.n_retained as f64 / n as f64) < low_retention_fraction
            };
            Some(ComparisonFilteredRow {
                threshold: t,
                accuracy_a: ra.accuracy,
                accuracy_b: rb.accuracy,
                delta: match (ra.accuracy, rb.accuracy) {
                    (Some(x), Some(y)) => Some(x - y),
                    _ => None,
                },
                retained_a: ra.n_retained,
                retained_b: rb.n_retained,
                low_retention_a: low(&ra, a.n),
                low_retention_b: low(&rb, b.n),
            })
        })
        .collect();

    Ok(ModelComparison {
        model_a: a.model_id.clone(),
        model_b: b.model_id.clone(),
        label_digest: a.label_digest.clone(),
        n_a: a.n,
        n_b: b.n,
        accuracy_a: a.accuracy,
        accuracy_b: b.accuracy,
        accuracy_delta: a.accuracy - b.accuracy,
        baseline_accuracy: a.baseline_accuracy,
        filtered,
        low_retention_fraction,
        reference_points: REFERENCE_POINTS.iter().map(|s| s.to_string()).collect(),
    })
}

impl ModelComparison {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "comparison: {} vs {}", self.model_a, self.model_b);
        let _ = writeln!(out, "label digest: {}", &self.label_digest[..16.min(self.label_digest.len())]);
        let _ = writeln!(out, "n: {} vs {}", self.n_a, self.n_b);
        let _ = writeln!(
            out,
            "accuracy: {} vs {} (delta {:+.3})",
            fraction(self.accuracy_a),
            fraction(self.accuracy_b),
            self.accuracy_delta
        );
        let _ = writeln!(out, "baseline: {}", fraction(self.baseline_accuracy));
        let _ = writeln!(out, "\nfiltered accuracy:");
        let _ = writeln!(
            out,
            "  {:>9}  {:>16}  {:>16}  {:>8}  {:>13}",
            "threshold", self.model_a, self.model_b, "delta", "retained a/b"
        );
        for row in &self.filtered {
            let explain = |acc: Option<f64>, low: bool| match (acc, low) {
                (None, _) => "(empty)".to_string(),
                (Some(a), false) => format!("{a:.3}"),
                (Some(a), true) => format!("{a:.3} [low-retention]"),
            };
            let _ = writeln!(
                out,
                "  {:>9}  {:>16}  {:>16}  {:>8}  {:>5}/{:<6}",
                row.threshold,
                explain(row.accuracy_a, row.low_retention_a),
                explain(row.accuracy_b, row.low_retention_b),
                row.delta.map_or("-".into(), |d| format!("{d:+.3}")),
                row.retained_a,
                row.retained_b,
            );
        }
        let _ = writeln!(out, "\nreference points:");
        for line in &self.reference_points {
            let _ = writeln!(out, "  {line}");
        }
        out
    }
}
