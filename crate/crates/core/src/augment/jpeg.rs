//! JPEG's lossy step without entropy coding: 8x8 DCT-II, quantization with
//! the standard luminance table scaled by quality, dequantization, inverse DCT.

use std::sync::OnceLock;

use crate::image::ImageGrid;

/// Luminance quantization table, natural (row-major) order.
const LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// libjpeg's quality scaling, baseline-clamped to `1..=255`.
pub fn quant_table(quality: u8) -> [u16; 64] {
    let q = u32::from(quality.clamp(1, 100));
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    LUMA_TABLE.map(|base| ((u32::from(base) * scale + 50) / 100).clamp(1, 255) as u16)
}

/// Orthonormal DCT-II basis: `basis[u][x]`.
fn basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; 8]; 8];
        for (u, row) in m.iter_mut().enumerate() {
            let alpha = if u == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
            for (x, v) in row.iter_mut().enumerate() {
                *v = alpha * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        m
    })
}

fn dct(block: &[f64; 64]) -> [f64; 64] {
    let c = basis();
    let mut tmp = [0.0; 64];
    for u in 0..8 {
        for x in 0..8 {
            tmp[u * 8 + x] = (0..8).map(|y| c[u][y] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for u in 0..8 {
        for v in 0..8 {
            out[u * 8 + v] = (0..8).map(|x| tmp[u * 8 + x] * c[v][x]).sum();
        }
    }
    out
}

fn idct(coef: &[f64; 64]) -> [f64; 64] {
    let c = basis();
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for v in 0..8 {
            tmp[y * 8 + v] = (0..8).map(|u| c[u][y] * coef[u * 8 + v]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|v| tmp[y * 8 + v] * c[v][x]).sum();
        }
    }
    out
}

/// Applies JPEG quantization noise at `quality` (30..=90 in augmentation
/// plans). Samples are mapped to the 8-bit domain for quantization, so
/// 16-bit images see the same relative loss. Partial edge blocks are
/// padded by replicating the last row/column.
pub fn jpeg_noise(img: &ImageGrid, quality: u8) -> ImageGrid {
    let table = quant_table(quality);
    let (rows, cols) = (img.rows(), img.cols());
    let max = f64::from(img.max_value());
    let to_domain = 255.0 / max;
    let samples = img.samples();
    let mut out = vec![0u16; rows * cols];
    for by in (0..rows).step_by(8) {
        for bx in (0..cols).step_by(8) {
            let mut block = [0.0; 64];
            for y in 0..8 {
                let r = (by + y).min(rows - 1);
                for x in 0..8 {
                    let c = (bx + x).min(cols - 1);
                    block[y * 8 + x] = f64::from(samples[r * cols + c]) * to_domain - 128.0;
                }
            }
            let mut coef = dct(&block);
            for (v, q) in coef.iter_mut().zip(table) {
                let q = f64::from(q);
                *v = (*v / q).round() * q;
            }
            let recon = idct(&coef);
            for y in 0..8.min(rows - by) {
                for x in 0..8.min(cols - bx) {
                    let v = (recon[y * 8 + x] + 128.0) / to_domain;
                    out[(by + y) * cols + bx + x] = v.round().clamp(0.0, max) as u16;
                }
            }
        }
    }
    img.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Photometric;
    use crate::synthetic;

    fn mae(a: &ImageGrid, b: &ImageGrid) -> f64 {
        let total: u64 = a
            .samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| u64::from(x.abs_diff(*y)))
            .sum();
        total as f64 / a.samples().len() as f64
    }

    fn max_dev(a: &ImageGrid, b: &ImageGrid) -> u16 {
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| x.abs_diff(*y))
            .max()
            .unwrap()
    }

    #[test]
    fn libjpeg_scaling_reference_points() {
        assert_eq!(quant_table(50), LUMA_TABLE);
        // quality 90: scale 20 -> (16*20+50)/100 = 3
        assert_eq!(quant_table(90)[0], 3);
        // quality 30: scale 166 -> (16*166+50)/100 = 27
        assert_eq!(quant_table(30)[0], 27);
        assert_eq!(quant_table(100), [1; 64]);
    }

    #[test]
    fn transform_pair_is_orthonormal() {
        let mut block = [0.0; 64];
        for (i, v) in block.iter_mut().enumerate() {
            *v = ((i * 37) % 91) as f64 - 45.0;
        }
        let back = idct(&dct(&block));
        for (a, b) in block.iter().zip(back) {
            assert!((a - b).abs() < 1e-9);
        }
        // constant block: all energy in DC = 8 * value
        let dc = dct(&[3.0; 64]);
        assert!((dc[0] - 24.0).abs() < 1e-12);
        assert!(dc[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn quality_ninety_on_a_gradient_stays_within_four_levels() {
        let g = synthetic::smooth_gradient(64, 80, 8);
        assert!(max_dev(&g, &jpeg_noise(&g, 90)) <= 4);
    }

    #[test]
    fn constant_images_survive() {
        for value in [0u16, 17, 128, 200, 255] {
            let g = ImageGrid::filled(24, 20, 8, value).unwrap();
            for quality in 30..=90u8 {
                let dc_step = f64::from(quant_table(quality)[0]);
                // DC rounding error is at most step/2 in a coefficient that is
                // 8x the pixel value
                let bound = if dc_step <= 16.0 { 1 } else { (dc_step / 16.0).ceil() as u16 };
                let dev = max_dev(&g, &jpeg_noise(&g, quality));
                assert!(dev <= bound, "value {value} quality {quality}: {dev} > {bound}");
            }
        }
    }

    #[test]
    fn lower_quality_is_noisier() {
        for seed in 0..4 {
            let g = synthetic::chest_phantom(64, 64, 8, seed);
            assert!(mae(&g, &jpeg_noise(&g, 30)) >= mae(&g, &jpeg_noise(&g, 90)));
        }
        let wide = synthetic::chest_phantom(40, 52, 16, 9);
        assert!(mae(&wide, &jpeg_noise(&wide, 30)) >= mae(&wide, &jpeg_noise(&wide, 90)));
    }

    #[test]
    fn odd_sizes_keep_shape() {
        let g = ImageGrid::new(3, 5, 8, Photometric::Monochrome2, (0..15).map(|v| v * 10).collect()).unwrap();
        let out = jpeg_noise(&g, 60);
        assert_eq!((out.rows(), out.cols()), (3, 5));
    }
}
