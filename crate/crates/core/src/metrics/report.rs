use std::fmt::Write as _;

use serde::Serialize;

use super::{average_precision, pr_curve, ConfusionMatrix, Metric, MetricsError, PrCurve};
use crate::dicom::CLASS_LABELS;
use crate::inference::Prediction;

pub const MODEL_AVERAGE: &str = "Model Average";

/// One scored sample: true class index, class probabilities, fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub id: String,
    pub truth: usize,
    pub probabilities: [f64; 3],
    pub fold: usize,
}

impl Sample {
    /// Predicted class: highest probability, lowest index on ties.
    pub fn predicted(&self) -> usize {
        Prediction::argmax(&self.probabilities)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Unweighted mean of the class rows.
    Macro,
    /// Class rows weighted by image count.
    Weighted,
}

impl Averaging {
    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::Macro => "macro",
            Averaging::Weighted => "weighted",
        }
    }

    pub fn parse(s: &str) -> Option<Averaging> {
        match s {
            "macro" => Some(Averaging::Macro),
            "weighted" => Some(Averaging::Weighted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub image_count: usize,
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
    pub ap: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Model Average first, then classes in label order.
    pub rows: Vec<ReportRow>,
    pub fold_count: usize,
    pub averaging: Averaging,
    /// Overall accuracy, averaged across folds.
    pub accuracy: Metric,
}

struct FoldMetrics {
    precision: [Metric; 3],
    recall: [Metric; 3],
    f1: [Metric; 3],
    ap: [Metric; 3],
    accuracy: Metric,
}

fn fold_metrics(samples: &[&Sample]) -> FoldMetrics {
    let mut cm = ConfusionMatrix::empty(CLASS_LABELS.map(String::from).to_vec());
    for s in samples {
        cm.add(s.truth, s.predicted());
    }
    let ap = std::array::from_fn(|c| {
        let scores: Vec<f64> = samples.iter().map(|s| s.probabilities[c]).collect();
        let truths: Vec<bool> = samples.iter().map(|s| s.truth == c).collect();
        match pr_curve(&scores, &truths) {
            Ok(curve) => Metric::defined(average_precision(&curve)),
            Err(_) => Metric::undefined(),
        }
    });
    FoldMetrics {
        precision: std::array::from_fn(|c| cm.precision(c)),
        recall: std::array::from_fn(|c| cm.recall(c)),
        f1: std::array::from_fn(|c| cm.f1(c)),
        ap,
        accuracy: cm.accuracy(),
    }
}

fn validate(samples: &[Sample], fold_count: usize) -> Result<(), MetricsError> {
    if fold_count == 0 {
        return Err(MetricsError::NoFolds);
    }
    let mut sizes = vec![0usize; fold_count];
    for s in samples {
        if s.truth >= CLASS_LABELS.len() {
            return Err(MetricsError::UnknownLabel(s.truth.to_string()));
        }
        if s.fold >= fold_count {
            return Err(MetricsError::FoldOutOfRange {
                id: s.id.clone(),
                fold: s.fold,
                folds: fold_count,
            });
        }
        if let Some(i) = s.probabilities.iter().position(|p| !p.is_finite()) {
            return Err(MetricsError::NonFiniteScore(i));
        }
        sizes[s.fold] += 1;
    }
    match sizes.iter().position(|&n| n == 0) {
        Some(f) => Err(MetricsError::EmptyFold(f)),
        None => Ok(()),
    }
}

/// Computes every metric per fold, averages each across folds with equal
/// weight, then forms the Model Average row from the class rows.
pub fn evaluate(samples: &[Sample], fold_count: usize, averaging: Averaging) -> Result<EvalReport, MetricsError> {
    validate(samples, fold_count)?;
    let folds: Vec<FoldMetrics> = (0..fold_count)
        .map(|f| {
            let members: Vec<&Sample> = samples.iter().filter(|s| s.fold == f).collect();
            fold_metrics(&members)
        })
        .collect();
    let across = |pick: &dyn Fn(&FoldMetrics) -> Metric| Metric::mean(folds.iter().map(pick));

    let mut class_rows = Vec::with_capacity(3);
    for (c, name) in CLASS_LABELS.iter().enumerate() {
        class_rows.push(ReportRow {
            name: name.to_string(),
            image_count: samples.iter().filter(|s| s.truth == c).count(),
            precision: across(&|f| f.precision[c]),
            recall: across(&|f| f.recall[c]),
            f1: across(&|f| f.f1[c]),
            ap: across(&|f| f.ap[c]),
        });
    }
    let weight = |r: &ReportRow| match averaging {
        Averaging::Macro => 1.0,
        Averaging::Weighted => r.image_count as f64,
    };
    let combine = |pick: fn(&ReportRow) -> Metric| Metric::mean_weighted(class_rows.iter().map(|r| (pick(r), weight(r))));
    let average = ReportRow {
        name: MODEL_AVERAGE.to_string(),
        image_count: samples.len(),
        precision: combine(|r| r.precision),
        recall: combine(|r| r.recall),
        f1: combine(|r| r.f1),
        ap: combine(|r| r.ap),
    };
    let mut rows = vec![average];
    rows.extend(class_rows);
    Ok(EvalReport {
        rows,
        fold_count,
        averaging,
        accuracy: across(&|f| f.accuracy),
    })
}

/// One-vs-rest curve per class over all samples pooled.
pub fn pr_curves(samples: &[Sample]) -> Vec<(&'static str, Result<PrCurve, MetricsError>)> {
    CLASS_LABELS
        .iter()
        .enumerate()
        .map(|(c, &name)| {
            let scores: Vec<f64> = samples.iter().map(|s| s.probabilities[c]).collect();
            let truths: Vec<bool> = samples.iter().map(|s| s.truth == c).collect();
            (name, pr_curve(&scores, &truths))
        })
        .collect()
}

fn cell(m: Metric) -> String {
    format!("{:.3}{}", m.value, if m.undefined { "*" } else { "" })
}

impl EvalReport {
    pub fn any_undefined(&self) -> bool {
        self.rows
            .iter()
            .any(|r| [r.precision, r.recall, r.f1, r.ap].iter().any(|m| m.undefined))
            || self.accuracy.undefined
    }

    /// Aligned table at 3 decimal places with a footer naming the averaging.
    pub fn to_text(&self) -> String {
        let header = ["Class", "Image count", "Precision", "Recall", "F1 Score", "AP"];
        let body: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.name.clone(),
                    r.image_count.to_string(),
                    cell(r.precision),
                    cell(r.recall),
                    cell(r.f1),
                    cell(r.ap),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..6)
            .map(|i| body.iter().map(|row| row[i].len()).chain([header[i].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let mut line = |cells: Vec<&str>| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        line(header.to_vec());
        for row in &body {
            line(row.iter().map(String::as_str).collect());
        }
        let mode = match self.averaging {
            Averaging::Macro => "macro (unweighted mean of class rows)",
            Averaging::Weighted => "weighted (class rows weighted by image count)",
        };
        let _ = writeln!(out, "\nModel Average: {mode}");
        let _ = writeln!(out, "Folds: {} (metrics averaged across folds)", self.fold_count);
        let _ = writeln!(out, "Accuracy: {}", cell(self.accuracy));
        if self.any_undefined() {
            let _ = writeln!(out, "* undefined (zero denominator) in at least one fold, counted as 0");
        }
        out
    }

    /// `class,image_count,precision,recall,f1,ap,undefined`; values at 3 d.p.,
    /// `undefined` lists flagged columns separated by `;`.
    pub fn to_csv(&self) -> Result<String, MetricsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["class", "image_count", "precision", "recall", "f1", "ap", "undefined"])?;
        for r in &self.rows {
            let named = [("precision", r.precision), ("recall", r.recall), ("f1", r.f1), ("ap", r.ap)];
            let flags: Vec<&str> = named.iter().filter(|(_, m)| m.undefined).map(|(n, _)| *n).collect();
            w.write_record([
                r.name.clone(),
                r.image_count.to_string(),
                format!("{:.3}", r.precision.value),
                format!("{:.3}", r.recall.value),
                format!("{:.3}", r.f1.value),
                format!("{:.3}", r.ap.value),
                flags.join(";"),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| MetricsError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: usize, truth: usize, probabilities: [f64; 3], fold: usize) -> Sample {
        Sample {
            id: id.to_string(),
            truth,
            probabilities,
            fold,
        }
    }

    fn perfect(fold: usize) -> Vec<Sample> {
        (0..9)
            .map(|i| {
                let t = i % 3;
                let mut p = [0.1, 0.1, 0.1];
                p[t] = 0.8;
                sample(i, t, p, fold)
            })
            .collect()
    }

    #[test]
    fn perfect_single_fold_is_all_ones() {
        let report = evaluate(&perfect(0), 1, Averaging::Macro).unwrap();
        assert_eq!(report.rows[0].name, MODEL_AVERAGE);
        assert_eq!(report.rows.iter().skip(1).map(|r| r.name.as_str()).collect::<Vec<_>>(), CLASS_LABELS);
        for r in &report.rows {
            for m in [r.precision, r.recall, r.f1, r.ap] {
                assert_eq!(m, Metric::defined(1.0));
            }
        }
        assert_eq!(report.accuracy.value, 1.0);
    }

    #[test]
    fn two_identical_folds_match_one_fold() {
        let base: Vec<Sample> = vec![
            sample(0, 0, [0.6, 0.3, 0.1], 0),
            sample(1, 0, [0.2, 0.5, 0.3], 0),
            sample(2, 1, [0.1, 0.7, 0.2], 0),
            sample(3, 1, [0.4, 0.35, 0.25], 0),
            sample(4, 2, [0.2, 0.2, 0.6], 0),
            sample(5, 2, [0.3, 0.3, 0.4], 0),
        ];
        let mut doubled = base.clone();
        doubled.extend(base.iter().map(|s| Sample { fold: 1, ..s.clone() }));
        let one = evaluate(&base, 1, Averaging::Macro).unwrap();
        let two = evaluate(&doubled, 2, Averaging::Macro).unwrap();
        for (a, b) in one.rows.iter().zip(&two.rows) {
            assert_eq!(b.image_count, 2 * a.image_count);
            assert_eq!((a.precision, a.recall, a.f1, a.ap), (b.precision, b.recall, b.f1, b.ap));
        }
    }

    #[test]
    fn fold_errors() {
        assert!(matches!(evaluate(&perfect(0), 2, Averaging::Macro), Err(MetricsError::EmptyFold(1))));
        assert!(matches!(evaluate(&perfect(3), 2, Averaging::Macro), Err(MetricsError::FoldOutOfRange { fold: 3, .. })));
        assert!(matches!(evaluate(&perfect(0), 0, Averaging::Macro), Err(MetricsError::NoFolds)));
    }

    #[test]
    fn absent_class_is_flagged_not_nan() {
        let samples = vec![sample(0, 0, [0.9, 0.05, 0.05], 0), sample(1, 1, [0.2, 0.7, 0.1], 0)];
        let report = evaluate(&samples, 1, Averaging::Macro).unwrap();
        let no_finding = &report.rows[3];
        assert!(no_finding.recall.undefined && no_finding.ap.undefined);
        assert!(report.rows[0].ap.undefined);
        assert!(report.to_text().contains("0.000*"));
        assert!(report.to_csv().unwrap().contains("No Finding,0,0.000,0.000,0.000,0.000,precision;recall;f1;ap"));
    }

    #[test]
    fn weighted_average_uses_image_counts() {
        let mut samples = perfect(0);
        samples.push(sample(99, 0, [0.2, 0.7, 0.1], 0));
        let macro_avg = evaluate(&samples, 1, Averaging::Macro).unwrap();
        let weighted = evaluate(&samples, 1, Averaging::Weighted).unwrap();
        let rows = &macro_avg.rows[1..];
        let expect: f64 = rows.iter().map(|r| r.recall.value * r.image_count as f64).sum::<f64>() / samples.len() as f64;
        assert!((weighted.rows[0].recall.value - expect).abs() < 1e-15);
        let plain: f64 = rows.iter().map(|r| r.recall.value).sum::<f64>() / 3.0;
        assert!((macro_avg.rows[0].recall.value - plain).abs() < 1e-15);
        assert!(weighted.to_text().contains("weighted"));
    }

    #[test]
    fn text_layout() {
        let text = evaluate(&perfect(0), 1, Averaging::Macro).unwrap().to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Class          Image count  Precision  Recall  F1 Score  AP");
        assert_eq!(lines[1], "Model Average  9            1.000      1.000   1.000     1.000");
        assert!(lines[2].starts_with("COVID-19 "));
    }

    #[test]
    fn published_average_row_is_count_weighted() {
        // published class rows: (image count, precision, recall)
        let rows = [(3987.0, 0.981, 0.962), (7650.0, 0.952, 0.922), (10268.0, 0.941, 0.967)];
        let round3 = |v: f64| (v * 1000.0).round() / 1000.0;
        let weighted = |pick: fn(&(f64, f64, f64)) -> f64| {
            Metric::mean_weighted(rows.iter().map(|r| (Metric::defined(pick(r)), r.0))).value
        };
        assert_eq!(round3(weighted(|r| r.1)), 0.952);
        assert_eq!(round3(weighted(|r| r.2)), 0.950);
        let macro_p = Metric::mean(rows.iter().map(|r| Metric::defined(r.1))).value;
        assert_eq!(round3(macro_p), 0.958);
        assert_eq!(round3(crate::metrics::f1_from(0.952, 0.922)), 0.937);
    }
}
