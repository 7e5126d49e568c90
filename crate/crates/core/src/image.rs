//! Grayscale pixel grids and binary PGM (P5) I/O.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dicom::{self, DicomError};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("invalid image grid: {0}")]
    InvalidGrid(String),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("not a DICOM Part 10 or binary PGM file")]
    UnknownFormat,
    #[error(transparent)]
    Dicom(#[from] DicomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Photometric {
    /// Zero is white.
    #[serde(rename = "MONOCHROME1")]
    Monochrome1,
    /// Zero is black.
    #[serde(rename = "MONOCHROME2")]
    Monochrome2,
}

impl Photometric {
    pub fn as_str(self) -> &'static str {
        match self {
            Photometric::Monochrome1 => "MONOCHROME1",
            Photometric::Monochrome2 => "MONOCHROME2",
        }
    }

    pub fn parse(s: &str) -> Option<Photometric> {
        match s.trim() {
            "MONOCHROME1" => Some(Photometric::Monochrome1),
            "MONOCHROME2" => Some(Photometric::Monochrome2),
            _ => None,
        }
    }
}

impl fmt::Display for Photometric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Single-channel image with native unsigned intensities, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    bits_allocated: u8,
    photometric: Photometric,
    samples: Vec<u16>,
}

impl ImageGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        bits_allocated: u8,
        photometric: Photometric,
        samples: Vec<u16>,
    ) -> Result<Self, ImageError> {
        if bits_allocated != 8 && bits_allocated != 16 {
            return Err(ImageError::InvalidGrid(format!(
                "bits_allocated must be 8 or 16, got {bits_allocated}"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(ImageError::InvalidGrid("empty image".into()));
        }
        if samples.len() != rows * cols {
            return Err(ImageError::InvalidGrid(format!(
                "{} samples for {rows}x{cols}",
                samples.len()
            )));
        }
        let max = max_for_bits(bits_allocated);
        if let Some(v) = samples.iter().find(|&&v| u32::from(v) > max) {
            return Err(ImageError::InvalidGrid(format!(
                "sample {v} exceeds {bits_allocated}-bit range"
            )));
        }
        Ok(ImageGrid {
            rows,
            cols,
            bits_allocated,
            photometric,
            samples,
        })
    }

    pub fn filled(rows: usize, cols: usize, bits_allocated: u8, value: u16) -> Result<Self, ImageError> {
        ImageGrid::new(
            rows,
            cols,
            bits_allocated,
            Photometric::Monochrome2,
            vec![value; rows * cols],
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits_allocated(&self) -> u8 {
        self.bits_allocated
    }

    pub fn photometric(&self) -> Photometric {
        self.photometric
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn max_value(&self) -> u32 {
        max_for_bits(self.bits_allocated)
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.samples[row * self.cols + col]
    }

    pub fn with_photometric(mut self, photometric: Photometric) -> Self {
        self.photometric = photometric;
        self
    }

    /// Same geometry and depth, new samples. Callers keep values in range.
    pub(crate) fn with_samples(&self, samples: Vec<u16>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        ImageGrid {
            samples,
            ..self.clone()
        }
    }

    /// Encodes as binary PGM. 16-bit samples are big-endian per the format.
    pub fn to_pgm(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n{}\n", self.cols, self.rows, self.max_value());
        let width = if self.bits_allocated == 8 { 1 } else { 2 };
        let mut out = Vec::with_capacity(header.len() + self.samples.len() * width);
        out.extend_from_slice(header.as_bytes());
        if self.bits_allocated == 8 {
            out.extend(self.samples.iter().map(|&v| v as u8));
        } else {
            for v in &self.samples {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        out
    }

    /// Decodes a binary PGM. `maxval <= 255` yields an 8-bit grid, larger
    /// values a 16-bit grid; samples keep their stored values.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut pos = 0;
        let magic = pgm_token(bytes, &mut pos)?;
        if magic != b"P5" {
            return Err(ImageError::Pgm("expected P5 magic".into()));
        }
        let mut number = |name: &str| -> Result<usize, ImageError> {
            let tok = pgm_token(bytes, &mut pos)?;
            std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ImageError::Pgm(format!("bad {name}")))
        };
        let cols = number("width")?;
        let rows = number("height")?;
        let maxval = number("maxval")?;
        if maxval == 0 || maxval > 65535 {
            return Err(ImageError::Pgm(format!("maxval {maxval} out of range")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let raster = bytes.get(pos..).unwrap_or(&[]);
        let (bits, width) = if maxval <= 255 { (8, 1) } else { (16, 2) };
        let needed = rows * cols * width;
        if raster.len() < needed {
            return Err(ImageError::Pgm(format!(
                "raster has {} bytes, expected {needed}",
                raster.len()
            )));
        }
        let samples: Vec<u16> = if width == 1 {
            raster[..needed].iter().map(|&b| u16::from(b)).collect()
        } else {
            raster[..needed]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        };
        if samples.iter().any(|&v| usize::from(v) > maxval) {
            return Err(ImageError::Pgm("sample exceeds maxval".into()));
        }
        ImageGrid::new(rows, cols, bits, Photometric::Monochrome2, samples)
    }
}

pub fn max_for_bits(bits: u8) -> u32 {
    (1u32 << bits) - 1
}

fn pgm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], ImageError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if bytes.get(*pos) == Some(&b'#') {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(ImageError::Pgm("unexpected end of header".into()));
    }
    Ok(&bytes[start..*pos])
}

/// Where an image came from, so callers can report SOP identity.
#[derive(Debug, Clone)]
pub enum LoadedImage {
    Dicom {
        object: Box<dicom::DicomObject>,
        grid: ImageGrid,
    },
    Pgm(ImageGrid),
}

impl LoadedImage {
    pub fn grid(&self) -> &ImageGrid {
        match self {
            LoadedImage::Dicom { grid, .. } | LoadedImage::Pgm(grid) => grid,
        }
    }
}

/// Sniffs DICOM Part 10 (magic at offset 128) or binary PGM and decodes.
pub fn load_image(bytes: &[u8]) -> Result<LoadedImage, ImageError> {
    if bytes.len() >= 132 && &bytes[128..132] == b"DICM" {
        let object = dicom::parse_part10(bytes)?;
        let grid = dicom::extract_pixels(&object)?;
        Ok(LoadedImage::Dicom {
            object: Box::new(object),
            grid,
        })
    } else if bytes.starts_with(b"P5") {
        Ok(LoadedImage::Pgm(ImageGrid::from_pgm(bytes)?))
    } else {
        Err(ImageError::UnknownFormat)
    }
}
