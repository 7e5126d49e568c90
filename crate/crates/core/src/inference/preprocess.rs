use crate::image::{ImageGrid, Photometric};
use crate::interp;

use super::Tensor;

/// Side length of the square model input.
pub const MODEL_INPUT_SIZE: usize = 224;

/// Converts a grid to the `[3, 224, 224]` model input.
///
/// MONOCHROME1 is inverted, intensities are scaled to `[0, 1]` by the
/// bit-depth maximum, the plane is resized bilinearly (align-corners) and
/// replicated into three identical channels.
pub fn preprocess(grid: &ImageGrid) -> Tensor {
    preprocess_to(grid, MODEL_INPUT_SIZE, MODEL_INPUT_SIZE)
}

pub fn preprocess_to(grid: &ImageGrid, out_rows: usize, out_cols: usize) -> Tensor {
    let max = f64::from(grid.max_value());
    let invert = grid.photometric() == Photometric::Monochrome1;
    let plane: Vec<f64> = grid
        .samples()
        .iter()
        .map(|&v| {
            let v = f64::from(v);
            if invert {
                (max - v) / max
            } else {
                v / max
            }
        })
        .collect();
    let resized = bilinear_resize(&plane, grid.rows(), grid.cols(), out_rows, out_cols);
    let mut data = Vec::with_capacity(3 * resized.len());
    for _ in 0..3 {
        data.extend(resized.iter().map(|v| v.clamp(0.0, 1.0)));
    }
    Tensor::from_parts(vec![3, out_rows, out_cols], data)
}

/// Align-corners bilinear resize of a row-major plane.
pub fn bilinear_resize(plane: &[f64], rows: usize, cols: usize, out_rows: usize, out_cols: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..out_cols)
        .map(|x| interp::align_corners(x, cols, out_cols))
        .collect();
    let mut out = Vec::with_capacity(out_rows * out_cols);
    for y in 0..out_rows {
        let sy = interp::align_corners(y, rows, out_rows);
        out.extend(xs.iter().map(|&sx| interp::sample(plane, rows, cols, sy, sx)));
    }
    out
}
