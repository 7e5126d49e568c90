//! Deterministic synthetic images for fixtures, demos and tests.
//!
//! None of these are medical data. The chest phantom is a smooth
//! body-and-lungs silhouette; the out-of-distribution pattern is a
//! high-contrast block mosaic nothing like a radiograph.

use crate::image::{max_for_bits, ImageGrid, Photometric};
use crate::inference::demo::XorShift64Star;

fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// 1 inside the ellipse, 0 outside, with a soft rim.
fn ellipse(u: f64, v: f64, cu: f64, cv: f64, ru: f64, rv: f64) -> f64 {
    let d = (((u - cu) / ru).powi(2) + ((v - cv) / rv).powi(2)).sqrt();
    1.0 - smoothstep(0.85, 1.05, d)
}

fn quantize(level: f64, bits: u8) -> u16 {
    let max = f64::from(max_for_bits(bits));
    (level.clamp(0.0, 1.0) * max).round() as u16
}

fn coords(rows: usize, cols: usize, r: usize, c: usize) -> (f64, f64) {
    let u = if cols > 1 { c as f64 / (cols - 1) as f64 } else { 0.5 };
    let v = if rows > 1 { r as f64 / (rows - 1) as f64 } else { 0.5 };
    (u, v)
}

/// Frontal chest phantom, MONOCHROME2. `seed` perturbs anatomy and noise.
pub fn chest_phantom(rows: usize, cols: usize, bits: u8, seed: u64) -> ImageGrid {
    let mut rng = XorShift64Star::new(seed.wrapping_add(0xC0FFEE));
    let shift_u = rng.uniform(0.03);
    let shift_v = rng.uniform(0.03);
    let lung_r = 0.14 + rng.uniform(0.015);
    let haze = 0.08 + rng.uniform(0.05).abs();
    let mut samples = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let (u, v) = coords(rows, cols, r, c);
            let body = ellipse(u, v, 0.5 + shift_u, 0.58 + shift_v, 0.44, 0.52);
            let lungs = ellipse(u, v, 0.32 + shift_u, 0.46 + shift_v, lung_r, 0.27)
                .max(ellipse(u, v, 0.68 + shift_u, 0.46 + shift_v, lung_r, 0.27));
            let spine = (-((u - 0.5 - shift_u) / 0.05).powi(2)).exp() * body;
            let ribs = 0.04 * (v * 38.0).sin() * lungs;
            let mut level = 0.04 + 0.5 * body - 0.32 * lungs + 0.28 * spine + ribs;
            level += haze * lungs * (1.0 - v);
            level += rng.uniform(0.01);
            samples.push(quantize(level, bits));
        }
    }
    ImageGrid::new(rows, cols, bits, Photometric::Monochrome2, samples).expect("phantom in range")
}

/// High-contrast mosaic of `block`-pixel tiles with random levels.
pub fn ood_mosaic(rows: usize, cols: usize, bits: u8, seed: u64) -> ImageGrid {
    let mut rng = XorShift64Star::new(seed.wrapping_add(0xBAD5EED));
    let block = 8;
    let tiles_c = cols.div_ceil(block);
    let tiles: Vec<f64> = (0..rows.div_ceil(block) * tiles_c)
        .map(|_| if rng.next_f64() < 0.5 { 0.0 } else { 1.0 })
        .collect();
    let samples = (0..rows * cols)
        .map(|i| quantize(tiles[(i / cols / block) * tiles_c + (i % cols) / block], bits))
        .collect();
    ImageGrid::new(rows, cols, bits, Photometric::Monochrome2, samples).expect("mosaic in range")
}

/// Diagonal ramp spanning 10%..90% of the range.
pub fn smooth_gradient(rows: usize, cols: usize, bits: u8) -> ImageGrid {
    let samples = (0..rows * cols)
        .map(|i| {
            let (u, v) = coords(rows, cols, i / cols, i % cols);
            quantize(0.1 + 0.8 * (u + v) / 2.0, bits)
        })
        .collect();
    ImageGrid::new(rows, cols, bits, Photometric::Monochrome2, samples).expect("ramp in range")
}

/// Bright centred square of side `side` on a dark background.
pub fn centered_square(rows: usize, cols: usize, side: usize, bits: u8) -> ImageGrid {
    let top = (rows - side) / 2;
    let left = (cols - side) / 2;
    let max = max_for_bits(bits) as u16;
    let samples = (0..rows * cols)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            if (top..top + side).contains(&r) && (left..left + side).contains(&c) {
                max
            } else {
                0
            }
        })
        .collect();
    ImageGrid::new(rows, cols, bits, Photometric::Monochrome2, samples).expect("square in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(chest_phantom(32, 40, 16, 3), chest_phantom(32, 40, 16, 3));
        assert_ne!(chest_phantom(32, 40, 8, 3), chest_phantom(32, 40, 8, 4));
        assert_eq!(ood_mosaic(20, 20, 8, 1), ood_mosaic(20, 20, 8, 1));
    }

    #[test]
    fn phantom_lungs_are_darker_than_spine() {
        let g = chest_phantom(100, 100, 8, 0);
        assert!(g.get(46, 30) < g.get(46, 50));
    }
}
