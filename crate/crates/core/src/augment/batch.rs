use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{AugmentError, AugmentOp, AugmentPlan};
use crate::image::{load_image, ImageGrid, Photometric};
use crate::manifest::{read_manifest_file, ManifestEntry};

pub const OUTPUT_MANIFEST: &str = "manifest.csv";
pub const OUTPUT_MANIFEST_HEADER: [&str; 6] = ["path", "label", "source", "op", "params", "seed"];

#[derive(Debug, Default)]
pub struct BatchSummary {
    pub written: usize,
    /// `(source path, message)` for inputs that could not be processed.
    pub errors: Vec<(String, String)>,
}

struct Row {
    path: String,
    label: &'static str,
    source: String,
    op: AugmentOp,
    seed: u64,
}

/// Inverts MONOCHROME1 so every augmented output is MONOCHROME2.
fn normalize(grid: ImageGrid) -> ImageGrid {
    if grid.photometric() == Photometric::Monochrome2 {
        return grid;
    }
    let max = grid.max_value() as u16;
    let inverted = grid.samples().iter().map(|&v| max - v).collect();
    grid.with_samples(inverted).with_photometric(Photometric::Monochrome2)
}

fn stem(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn process(
    index: usize,
    entry: &ManifestEntry,
    base: &Path,
    out_dir: &Path,
    plan: &AugmentPlan,
) -> Result<Vec<Row>, String> {
    let src = base.join(&entry.path);
    let bytes = fs::read(&src).map_err(|e| format!("{}: {e}", src.display()))?;
    let grid = normalize(load_image(&bytes).map_err(|e| e.to_string())?.grid().clone());
    let stem = stem(&entry.path);
    let mut rows = Vec::with_capacity(plan.variants_per_image);
    for (variant, (seed, op)) in plan.ops_for(index).into_iter().enumerate() {
        let name = format!("{index:05}_{stem}_v{variant}.pgm");
        let out = op.apply(&grid);
        fs::write(out_dir.join(&name), out.to_pgm()).map_err(|e| format!("{name}: {e}"))?;
        rows.push(Row {
            path: name,
            label: entry.label.as_str(),
            source: entry.path.clone(),
            op,
            seed,
        });
    }
    Ok(rows)
}

/// Expands every manifest image into `plan.variants_per_image` PGM files in
/// `out_dir` and writes `manifest.csv` there. Input paths are relative to
/// the manifest's directory. Unreadable inputs are reported and skipped.
pub fn augment_batch(manifest_in: &Path, out_dir: &Path, plan: &AugmentPlan) -> Result<BatchSummary, AugmentError> {
    plan.ranges.validate()?;
    let entries = read_manifest_file(manifest_in)?;
    let base: PathBuf = manifest_in.parent().map(Path::to_path_buf).unwrap_or_default();
    fs::create_dir_all(out_dir)?;

    let results: Vec<Result<Vec<Row>, String>> = entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| process(i, e, &base, out_dir, plan))
        .collect();

    let mut summary = BatchSummary::default();
    let mut w = csv::Writer::from_path(out_dir.join(OUTPUT_MANIFEST))?;
    w.write_record(OUTPUT_MANIFEST_HEADER)?;
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(rows) => {
                for r in rows {
                    w.write_record([
                        r.path.as_str(),
                        r.label,
                        r.source.as_str(),
                        r.op.name(),
                        &r.op.params(),
                        &r.seed.to_string(),
                    ])?;
                    summary.written += 1;
                }
            }
            Err(msg) => summary.errors.push((entry.path.clone(), msg)),
        }
    }
    w.flush()?;
    Ok(summary)
}
