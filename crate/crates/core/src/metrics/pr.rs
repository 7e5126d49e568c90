use serde::Serialize;

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    /// 1-based rank of the last sample in the tied block this point closes.
    pub rank: usize,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub positive_count: usize,
    pub total: usize,
    /// Precision of a classifier that cannot separate the classes.
    pub baseline: f64,
}

/// Ranks samples by descending score and emits one point per distinct
/// score, placed at the end of its tied block.
pub fn pr_curve(scores: &[f64], truths: &[bool]) -> Result<PrCurve, MetricsError> {
    if scores.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            left: scores.len(),
            right: truths.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(i));
    }
    let positive_count = truths.iter().filter(|&&t| t).count();
    if positive_count == 0 {
        return Err(MetricsError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::new();
    let mut tp = 0usize;
    for (n, &i) in order.iter().enumerate() {
        if truths[i] {
            tp += 1;
        }
        let block_ends = order.get(n + 1).is_none_or(|&next| scores[next] != scores[i]);
        if block_ends {
            let rank = n + 1;
            points.push(PrPoint {
                rank,
                recall: tp as f64 / positive_count as f64,
                precision: tp as f64 / rank as f64,
            });
        }
    }
    Ok(PrCurve {
        points,
        positive_count,
        total: scores.len(),
        baseline: positive_count as f64 / scores.len() as f64,
    })
}

/// `sum_n (R_n - R_{n-1}) * P_n` with `R_0 = 0`; no interpolation.
pub fn average_precision(curve: &PrCurve) -> f64 {
    let mut prev = 0.0;
    let mut ap = 0.0;
    for p in &curve.points {
        ap += (p.recall - prev) * p.precision;
        prev = p.recall;
    }
    ap
}
