mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Chest X-ray triage toolkit: classify images, prepare datasets, evaluate
/// predictions and run the DICOMweb gateway.
#[derive(Debug, Parser)]
#[command(name = "cxr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gate and classify one DICOM or PGM image; JSON on stdout.
    ///
    /// Exit status: 0 accepted, 3 rejected by the out-of-distribution gate,
    /// 1 on error.
    Classify {
        image: PathBuf,
        /// Classifier model (.cbmf). Defaults to the built-in seed-42 demo model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Gate model (.cbmf). Defaults to the built-in seed-42 demo model.
        #[arg(long)]
        ood: Option<PathBuf>,
        #[arg(long, default_value_t = cxr_core::ood::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Dataset manifest tools.
    Manifest {
        #[command(subcommand)]
        command: ManifestCommand,
    },
    /// Expand every manifest image into seeded augmented variants.
    Augment {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = cxr_core::augment::DEFAULT_VARIANTS)]
        variants: usize,
        /// Rotation range in degrees, symmetric about zero.
        #[arg(long, default_value_t = 15.0)]
        max_rotation: f64,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.7, 1.3])]
        brightness: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [1.0, 1.2])]
        zoom: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.5, 1.5])]
        saturation: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [30u8, 90])]
        jpeg_quality: Vec<u8>,
    },
    /// Per-class precision, recall, F1 and AP from a predictions CSV.
    Evaluate {
        predictions: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, value_enum, default_value_t = AverageArg::Macro)]
        average: AverageArg,
        /// Also write the report as CSV.
        #[arg(long)]
        report_csv: Option<PathBuf>,
        /// Write pooled per-class PR curves as CSV.
        #[arg(long)]
        pr_csv: Option<PathBuf>,
    },
    /// Run the STOW-RS / WADO-RS gateway.
    Serve {
        /// key = value config file; CXRGW_* variables and flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        classifier: Option<PathBuf>,
        #[arg(long)]
        ood: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        storage_dir: Option<PathBuf>,
        #[arg(long)]
        max_request_bytes: Option<usize>,
    },
    /// Write a seeded demo model file.
    GenModel {
        #[arg(long, value_enum)]
        kind: ModelKind,
        #[arg(long, default_value_t = cxr_core::inference::demo::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wrap a PGM into a minimal DX Part 10 file. Samples are stored as-is;
    /// --photometric only sets the interpretation.
    MakeDicom {
        pgm: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PhotometricArg::Monochrome2)]
        photometric: PhotometricArg,
        #[arg(long)]
        sop_uid: Option<String>,
        #[arg(long)]
        study_uid: Option<String>,
        #[arg(long)]
        series_uid: Option<String>,
        #[arg(long)]
        patient_id: Option<String>,
        #[arg(long, value_parser = ["PA", "AP"])]
        view: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum ManifestCommand {
    /// Drop rows below the age cutoff or failing quality; CSV on stdout
    /// (or --out), per-class counts on stderr.
    Filter {
        input: PathBuf,
        #[arg(long, default_value_t = cxr_core::manifest::DEFAULT_MIN_AGE)]
        min_age: u32,
        /// Keep rows whose quality_ok is false
        #[arg(long)]
        include_low_quality: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AverageArg {
    Macro,
    Weighted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    #[value(name = "demo-cxr-3class")]
    DemoCxr3Class,
    #[value(name = "demo-ood-2class")]
    DemoOod2Class,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PhotometricArg {
    #[value(name = "MONOCHROME1")]
    Monochrome1,
    #[value(name = "MONOCHROME2")]
    Monochrome2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::EXIT_ERROR)
        }
    }
}
