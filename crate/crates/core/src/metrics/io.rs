use std::io::{Read, Write};

use super::{MetricsError, PrCurve, Sample};
use crate::dicom::CLASS_LABELS;

pub const PREDICTIONS_HEADER: [&str; 6] = ["id", "true_label", "p_covid", "p_noncovid", "p_nofinding", "fold"];
pub const PR_CURVE_HEADER: [&str; 4] = ["class", "threshold_rank", "recall", "precision"];

/// Reads `id,true_label,p_covid,p_noncovid,p_nofinding,fold` rows. Columns
/// are located by header name; rows are numbered from 1 after the header.
pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<Sample>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(PREDICTIONS_HEADER) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| MetricsError::BadRow {
            row: 0,
            detail: format!("missing column {name:?}"),
        })?;
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |k: usize| record.get(idx[k]).unwrap_or("");
        let bad = |detail: String| MetricsError::BadRow { row, detail };
        let label = field(1);
        let truth = CLASS_LABELS
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| MetricsError::UnknownLabel(label.to_string()))?;
        let mut probabilities = [0.0; 3];
        for (c, p) in probabilities.iter_mut().enumerate() {
            let raw = field(2 + c);
            *p = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && (0.0..=1.0).contains(v))
                .ok_or_else(|| bad(format!("{} {raw:?} is not a probability", PREDICTIONS_HEADER[2 + c])))?;
        }
        let fold = field(5).parse().map_err(|_| bad(format!("bad fold {:?}", field(5))))?;
        out.push(Sample {
            id: field(0).to_string(),
            truth,
            probabilities,
            fold,
        });
    }
    Ok(out)
}

/// Writes `class,threshold_rank,recall,precision`, one row per curve point.
pub fn write_pr_curves<W: Write>(writer: W, curves: &[(&str, &PrCurve)]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PR_CURVE_HEADER)?;
    for (name, curve) in curves {
        for p in &curve.points {
            w.write_record([name.to_string(), p.rank.to_string(), p.recall.to_string(), p.precision.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
