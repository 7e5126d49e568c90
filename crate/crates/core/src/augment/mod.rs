//! Offline training-data augmentation: six single-transform ops and a
//! seeded plan that expands each input into a fixed number of variants.

mod batch;
mod jpeg;
mod transforms;

use std::fmt;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::image::ImageGrid;

pub use batch::{augment_batch, BatchSummary, OUTPUT_MANIFEST, OUTPUT_MANIFEST_HEADER};
pub use jpeg::{jpeg_noise, quant_table};
pub use transforms::{brightness, rotate, saturation, vflip, zoom};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("unknown op {0:?}")]
    UnknownOp(String),
    #[error("bad parameters {params:?} for {op}")]
    BadParams { op: &'static str, params: String },
    #[error("{op} parameter {value} outside {lo}..={hi}")]
    OutOfRange { op: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("invalid range for {0}")]
    InvalidRange(&'static str),
    #[error("manifest: {0}")]
    Manifest(#[from] crate::manifest::ManifestError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One transform with its concrete parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AugmentOp {
    VFlip,
    Rotate { degrees: f64 },
    Brightness { gain: f64 },
    Zoom { scale: f64 },
    Saturation { factor: f64 },
    JpegNoise { quality: u8 },
}

pub const OP_NAMES: [&str; 6] = ["vflip", "rotate", "brightness", "zoom", "saturation", "jpeg_noise"];

impl AugmentOp {
    pub fn name(&self) -> &'static str {
        match self {
            AugmentOp::VFlip => "vflip",
            AugmentOp::Rotate { .. } => "rotate",
            AugmentOp::Brightness { .. } => "brightness",
            AugmentOp::Zoom { .. } => "zoom",
            AugmentOp::Saturation { .. } => "saturation",
            AugmentOp::JpegNoise { .. } => "jpeg_noise",
        }
    }

    /// `key=value` parameter string. Floats use the shortest representation
    /// that parses back to the same bits, so replay is exact.
    pub fn params(&self) -> String {
        match *self {
            AugmentOp::VFlip => String::new(),
            AugmentOp::Rotate { degrees } => format!("degrees={degrees}"),
            AugmentOp::Brightness { gain } => format!("gain={gain}"),
            AugmentOp::Zoom { scale } => format!("scale={scale}"),
            AugmentOp::Saturation { factor } => format!("factor={factor}"),
            AugmentOp::JpegNoise { quality } => format!("quality={quality}"),
        }
    }

    /// Inverse of `name()` + `params()`.
    pub fn parse(op: &str, params: &str) -> Result<AugmentOp, AugmentError> {
        let name = OP_NAMES
            .iter()
            .copied()
            .find(|n| *n == op)
            .ok_or_else(|| AugmentError::UnknownOp(op.to_string()))?;
        let bad = || AugmentError::BadParams { op: name, params: params.to_string() };
        let value = |key: &str| -> Result<&str, AugmentError> {
            params
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(bad)
        };
        let float = |key: &str| -> Result<f64, AugmentError> {
            value(key)?.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad)
        };
        Ok(match name {
            "vflip" if params.is_empty() => AugmentOp::VFlip,
            "vflip" => return Err(bad()),
            "rotate" => AugmentOp::Rotate { degrees: float("degrees")? },
            "brightness" => AugmentOp::Brightness { gain: float("gain")? },
            "zoom" => AugmentOp::Zoom { scale: float("scale")? },
            "saturation" => AugmentOp::Saturation { factor: float("factor")? },
            _ => AugmentOp::JpegNoise {
                quality: value("quality")?.parse().map_err(|_| bad())?,
            },
        })
    }

    pub fn apply(&self, img: &ImageGrid) -> ImageGrid {
        match *self {
            AugmentOp::VFlip => vflip(img),
            AugmentOp::Rotate { degrees } => rotate(img, degrees),
            AugmentOp::Brightness { gain } => brightness(img, gain),
            AugmentOp::Zoom { scale } => zoom(img, scale),
            AugmentOp::Saturation { factor } => saturation(img, factor),
            AugmentOp::JpegNoise { quality } => jpeg_noise(img, quality),
        }
    }

    /// Checks the parameter against `ranges`.
    pub fn check(&self, ranges: &AugmentRanges) -> Result<(), AugmentError> {
        let within = |op: &'static str, value: f64, r: &RangeInclusive<f64>| {
            if r.contains(&value) {
                Ok(())
            } else {
                Err(AugmentError::OutOfRange { op, value, lo: *r.start(), hi: *r.end() })
            }
        };
        match *self {
            AugmentOp::VFlip => Ok(()),
            AugmentOp::Rotate { degrees } => within("rotate", degrees, &ranges.rotate_degrees),
            AugmentOp::Brightness { gain } => within("brightness", gain, &ranges.brightness_gain),
            AugmentOp::Zoom { scale } => within("zoom", scale, &ranges.zoom_scale),
            AugmentOp::Saturation { factor } => within("saturation", factor, &ranges.saturation_factor),
            AugmentOp::JpegNoise { quality } => {
                let r = &ranges.jpeg_quality;
                if r.contains(&quality) {
                    Ok(())
                } else {
                    Err(AugmentError::OutOfRange {
                        op: "jpeg_noise",
                        value: f64::from(quality),
                        lo: f64::from(*r.start()),
                        hi: f64::from(*r.end()),
                    })
                }
            }
        }
    }
}

impl fmt::Display for AugmentOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self.params();
        if params.is_empty() {
            f.write_str(self.name())
        } else {
            write!(f, "{}({params})", self.name())
        }
    }
}

/// Parameter ranges sampled by a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentRanges {
    pub rotate_degrees: RangeInclusive<f64>,
    pub brightness_gain: RangeInclusive<f64>,
    pub zoom_scale: RangeInclusive<f64>,
    pub saturation_factor: RangeInclusive<f64>,
    pub jpeg_quality: RangeInclusive<u8>,
}

impl Default for AugmentRanges {
    fn default() -> Self {
        AugmentRanges {
            rotate_degrees: -15.0..=15.0,
            brightness_gain: 0.7..=1.3,
            zoom_scale: 1.0..=1.2,
            saturation_factor: 0.5..=1.5,
            jpeg_quality: 30..=90,
        }
    }
}

impl AugmentRanges {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let ok = |r: &RangeInclusive<f64>| r.start().is_finite() && r.end().is_finite() && r.start() <= r.end();
        if !ok(&self.rotate_degrees) || self.rotate_degrees.start().abs() > 45.0 || self.rotate_degrees.end().abs() > 45.0 {
            return Err(AugmentError::InvalidRange("rotate"));
        }
        if !ok(&self.brightness_gain) || *self.brightness_gain.start() < 0.0 {
            return Err(AugmentError::InvalidRange("brightness"));
        }
        if !ok(&self.zoom_scale) || *self.zoom_scale.start() < 1.0 {
            return Err(AugmentError::InvalidRange("zoom"));
        }
        if !ok(&self.saturation_factor) || *self.saturation_factor.start() < 0.0 {
            return Err(AugmentError::InvalidRange("saturation"));
        }
        let q = &self.jpeg_quality;
        if *q.start() < 1 || q.start() > q.end() || *q.end() > 100 {
            return Err(AugmentError::InvalidRange("jpeg_noise"));
        }
        Ok(())
    }

    /// Uniform op, then a uniform parameter within its range.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> AugmentOp {
        match rng.random_range(0..OP_NAMES.len()) {
            0 => AugmentOp::VFlip,
            1 => AugmentOp::Rotate { degrees: rng.random_range(self.rotate_degrees.clone()) },
            2 => AugmentOp::Brightness { gain: rng.random_range(self.brightness_gain.clone()) },
            3 => AugmentOp::Zoom { scale: rng.random_range(self.zoom_scale.clone()) },
            4 => AugmentOp::Saturation { factor: rng.random_range(self.saturation_factor.clone()) },
            _ => AugmentOp::JpegNoise { quality: rng.random_range(self.jpeg_quality.clone()) },
        }
    }
}

pub const DEFAULT_VARIANTS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentPlan {
    pub seed: u64,
    pub variants_per_image: usize,
    pub ranges: AugmentRanges,
}

impl AugmentPlan {
    pub fn new(seed: u64) -> Self {
        AugmentPlan {
            seed,
            variants_per_image: DEFAULT_VARIANTS,
            ranges: AugmentRanges::default(),
        }
    }

    /// Seed for one variant, independent of processing order.
    pub fn variant_seed(&self, image: usize, variant: usize) -> u64 {
        splitmix64(splitmix64(splitmix64(self.seed) ^ image as u64) ^ variant as u64)
    }

    pub fn sample_op(&self, variant_seed: u64) -> AugmentOp {
        let mut rng = ChaCha8Rng::seed_from_u64(variant_seed);
        self.ranges.sample(&mut rng)
    }

    /// Ops for one image, in variant order.
    pub fn ops_for(&self, image: usize) -> Vec<(u64, AugmentOp)> {
        (0..self.variants_per_image)
            .map(|v| {
                let s = self.variant_seed(image, v);
                (s, self.sample_op(s))
            })
            .collect()
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
