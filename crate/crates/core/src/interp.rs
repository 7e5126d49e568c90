//! Bilinear sampling shared by preprocessing and augmentation.

/// Align-corners source coordinate for output index `dst`:
/// `dst * (src_len - 1) / (dst_len - 1)`, or 0 when `dst_len == 1`.
pub fn align_corners(dst: usize, src_len: usize, dst_len: usize) -> f64 {
    if dst_len <= 1 {
        0.0
    } else {
        dst as f64 * (src_len - 1) as f64 / (dst_len - 1) as f64
    }
}

/// Samples `plane` (row-major, `rows x cols`) at fractional `(y, x)`.
/// Coordinates are clamped to the plane.
pub fn sample(plane: &[f64], rows: usize, cols: usize, y: f64, x: f64) -> f64 {
    let y = y.clamp(0.0, (rows - 1) as f64);
    let x = x.clamp(0.0, (cols - 1) as f64);
    let y0 = y.floor() as usize;
    let x0 = x.floor() as usize;
    let y1 = (y0 + 1).min(rows - 1);
    let x1 = (x0 + 1).min(cols - 1);
    let fy = y - y0 as f64;
    let fx = x - x0 as f64;
    let at = |r: usize, c: usize| plane[r * cols + c];
    let top = at(y0, x0) + (at(y0, x1) - at(y0, x0)) * fx;
    let bottom = at(y1, x0) + (at(y1, x1) - at(y1, x0)) * fx;
    top + (bottom - top) * fy
}
