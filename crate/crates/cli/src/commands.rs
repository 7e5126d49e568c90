use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cxr_core::augment::{augment_batch, AugmentPlan, AugmentRanges};
use cxr_core::dicom::{grid_to_dicom, serialize_part10, CxrImageParams};
use cxr_core::image::{ImageGrid, LoadedImage, Photometric};
use cxr_core::inference::{demo, load_model, save_model, ModelFile};
use cxr_core::manifest::{class_counts, read_manifest_file, write_manifest, Filter, Label};
use cxr_core::metrics::{evaluate, pr_curves, read_predictions, write_pr_curves, Averaging};
use cxr_core::pipeline::{Pipeline, Status};
use cxr_gateway::config::ConfigSources;
use serde_json::json;

use crate::{AverageArg, Command, ManifestCommand, ModelKind, PhotometricArg};

pub const EXIT_ERROR: u8 = 1;
pub const EXIT_REJECTED: u8 = 3;

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Classify { image, model, ood, threshold } => classify(&image, model.as_deref(), ood.as_deref(), threshold),
        Command::Manifest {
            command: ManifestCommand::Filter { input, min_age, include_low_quality, out },
        } => manifest_filter(
            &input,
            Filter { min_age, require_quality: !include_low_quality },
            out.as_deref(),
        ),
        Command::Augment {
            manifest,
            out,
            seed,
            variants,
            max_rotation,
            brightness,
            zoom,
            saturation,
            jpeg_quality,
        } => {
            let plan = AugmentPlan {
                seed,
                variants_per_image: variants,
                ranges: AugmentRanges {
                    rotate_degrees: -max_rotation..=max_rotation,
                    brightness_gain: brightness[0]..=brightness[1],
                    zoom_scale: zoom[0]..=zoom[1],
                    saturation_factor: saturation[0]..=saturation[1],
                    jpeg_quality: jpeg_quality[0]..=jpeg_quality[1],
                },
            };
            augment(&manifest, &out, &plan)
        }
        Command::Evaluate { predictions, folds, average, report_csv, pr_csv } => {
            let averaging = match average {
                AverageArg::Macro => Averaging::Macro,
                AverageArg::Weighted => Averaging::Weighted,
            };
            evaluate_cmd(&predictions, folds, averaging, report_csv.as_deref(), pr_csv.as_deref())
        }
        Command::Serve { config, listen, classifier, ood, threshold, storage_dir, max_request_bytes } => {
            let mut sources = match &config {
                Some(path) => ConfigSources::from_file(path)?,
                None => ConfigSources::default(),
            }
            .with_env(std::env::vars());
            let flags = [
                ("listen", listen),
                ("model.classifier", classifier.map(|p| p.display().to_string())),
                ("model.ood", ood.map(|p| p.display().to_string())),
                ("ood.threshold", threshold.map(|t| t.to_string())),
                ("storage.dir", storage_dir.map(|p| p.display().to_string())),
                ("limits.max_request_bytes", max_request_bytes.map(|n| n.to_string())),
            ];
            for (key, value) in flags {
                if let Some(v) = value {
                    sources = sources.with_flag(key, v);
                }
            }
            serve(sources)
        }
        Command::GenModel { kind, seed, out } => {
            let model = match kind {
                ModelKind::DemoCxr3Class => demo::cxr_3class(seed),
                ModelKind::DemoOod2Class => demo::ood_2class(seed),
            };
            let bytes = save_model(&model)?;
            fs::write(&out, bytes).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} ({})", out.display(), model.model_version());
            Ok(ExitCode::SUCCESS)
        }
        Command::MakeDicom { pgm, out, photometric, sop_uid, study_uid, series_uid, patient_id, view } => {
            let bytes = fs::read(&pgm).with_context(|| format!("reading {}", pgm.display()))?;
            let photometric = match photometric {
                PhotometricArg::Monochrome1 => Photometric::Monochrome1,
                PhotometricArg::Monochrome2 => Photometric::Monochrome2,
            };
            let grid = ImageGrid::from_pgm(&bytes)?.with_photometric(photometric);
            let params = CxrImageParams {
                sop_instance_uid: sop_uid,
                study_instance_uid: study_uid,
                series_instance_uid: series_uid,
                patient_id,
                view_position: view,
            };
            let object = grid_to_dicom(&grid, &params)?;
            fs::write(&out, serialize_part10(&object)?).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} (SOP {})", out.display(), object.sop_instance_uid().unwrap_or_default());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_model_file(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_model(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn classify(image: &Path, model: Option<&Path>, ood: Option<&Path>, threshold: f64) -> Result<ExitCode> {
    let classifier = match model {
        Some(p) => read_model_file(p)?,
        None => demo::cxr_3class(demo::DEFAULT_SEED),
    };
    let gate_model = match ood {
        Some(p) => read_model_file(p)?,
        None => demo::ood_2class(demo::DEFAULT_SEED),
    };
    let pipeline = Pipeline::new(classifier, gate_model, threshold)?;
    let bytes = fs::read(image).with_context(|| format!("reading {}", image.display()))?;
    let (loaded, outcome) = pipeline
        .run_bytes(&bytes)
        .with_context(|| format!("classifying {}", image.display()))?;
    let sop = match &loaded {
        LoadedImage::Dicom { object, .. } => object.sop_instance_uid(),
        LoadedImage::Pgm(_) => None,
    };
    let status = outcome.status();
    let out = json!({
        "sop_instance_uid": sop,
        "status": status,
        "gate": outcome.gate,
        "prediction": outcome.prediction,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(match status {
        Status::Accepted => ExitCode::SUCCESS,
        _ => ExitCode::from(EXIT_REJECTED),
    })
}

fn manifest_filter(input: &Path, filter: Filter, out: Option<&Path>) -> Result<ExitCode> {
    let rows = read_manifest_file(input).with_context(|| format!("reading {}", input.display()))?;
    let kept = filter.apply(&rows);
    match out {
        Some(path) => write_manifest(fs::File::create(path)?, &kept)?,
        None => write_manifest(std::io::stdout().lock(), &kept)?,
    }
    let counts = class_counts(&kept);
    let mut err = std::io::stderr().lock();
    writeln!(err, "kept {} of {} rows", kept.len(), rows.len())?;
    for label in Label::ALL {
        writeln!(err, "  {label}: {}", counts[label.index()])?;
    }
    Ok(ExitCode::SUCCESS)
}

fn augment(manifest: &Path, out: &Path, plan: &AugmentPlan) -> Result<ExitCode> {
    let summary = augment_batch(manifest, out, plan)?;
    for (path, message) in &summary.errors {
        eprintln!("skipped {path}: {message}");
    }
    eprintln!(
        "wrote {} images to {} ({} inputs skipped)",
        summary.written,
        out.display(),
        summary.errors.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn evaluate_cmd(
    predictions: &Path,
    folds: usize,
    averaging: Averaging,
    report_csv: Option<&Path>,
    pr_csv: Option<&Path>,
) -> Result<ExitCode> {
    let file = fs::File::open(predictions).with_context(|| format!("reading {}", predictions.display()))?;
    let samples = read_predictions(file)?;
    let report = evaluate(&samples, folds, averaging)?;
    print!("{}", report.to_text());
    if let Some(path) = report_csv {
        fs::write(path, report.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = pr_csv {
        let curves = pr_curves(&samples);
        let mut present = Vec::new();
        for (name, curve) in &curves {
            match curve {
                Ok(c) => present.push((*name, c)),
                Err(e) => eprintln!("no PR curve for {name}: {e}"),
            }
        }
        write_pr_curves(fs::File::create(path)?, &present)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(sources: ConfigSources) -> Result<ExitCode> {
    let config = sources.resolve()?;
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(cxr_gateway::serve(config))?;
    Ok(ExitCode::SUCCESS)
}

