use crate::image::ImageGrid;
use crate::interp;

fn round_clamp(v: f64, max: u32) -> u16 {
    v.round().clamp(0.0, f64::from(max)) as u16
}

fn plane(img: &ImageGrid) -> Vec<f64> {
    img.samples().iter().map(|&v| f64::from(v)).collect()
}

/// Reverses row order.
pub fn vflip(img: &ImageGrid) -> ImageGrid {
    let cols = img.cols();
    let samples = img
        .samples()
        .chunks_exact(cols)
        .rev()
        .flatten()
        .copied()
        .collect();
    img.with_samples(samples)
}

/// Rotates about the image centre by `degrees` (counter-clockwise as
/// displayed). Bilinear sampling; pixels mapping outside the source are 0.
pub fn rotate(img: &ImageGrid, degrees: f64) -> ImageGrid {
    let (rows, cols) = (img.rows(), img.cols());
    let src = plane(img);
    let (sin, cos) = degrees.to_radians().sin_cos();
    let cy = (rows - 1) as f64 / 2.0;
    let cx = (cols - 1) as f64 / 2.0;
    const EPS: f64 = 1e-9;
    let max = img.max_value();
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let dy = r as f64 - cy;
        for c in 0..cols {
            let dx = c as f64 - cx;
            // inverse mapping: rotate the output coordinate back by -angle
            let sx = cx + dx * cos - dy * sin;
            let sy = cy + dx * sin + dy * cos;
            let inside = sx >= -EPS && sy >= -EPS && sx <= (cols - 1) as f64 + EPS && sy <= (rows - 1) as f64 + EPS;
            out.push(if inside {
                round_clamp(interp::sample(&src, rows, cols, sy, sx), max)
            } else {
                0
            });
        }
    }
    img.with_samples(out)
}

/// `v -> clamp(round(v * gain))`.
pub fn brightness(img: &ImageGrid, gain: f64) -> ImageGrid {
    let max = img.max_value();
    let samples = img
        .samples()
        .iter()
        .map(|&v| round_clamp(f64::from(v) * gain, max))
        .collect();
    img.with_samples(samples)
}

/// Crops the central `1/scale` of the image and resizes it back to full size.
pub fn zoom(img: &ImageGrid, scale: f64) -> ImageGrid {
    let (rows, cols) = (img.rows(), img.cols());
    let src = plane(img);
    let crop_h = rows as f64 / scale;
    let crop_w = cols as f64 / scale;
    let top = (rows as f64 - crop_h) / 2.0;
    let left = (cols as f64 - crop_w) / 2.0;
    let step = |len: usize, crop: f64| if len > 1 { (crop - 1.0) / (len - 1) as f64 } else { 0.0 };
    let (step_y, step_x) = (step(rows, crop_h), step(cols, crop_w));
    let max = img.max_value();
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let sy = top + r as f64 * step_y;
        for c in 0..cols {
            let sx = left + c as f64 * step_x;
            out.push(round_clamp(interp::sample(&src, rows, cols, sy, sx), max));
        }
    }
    img.with_samples(out)
}

/// Grayscale "saturation": contrast scaled about the image mean,
/// `v -> clamp(round(mean + factor * (v - mean)))`.
pub fn saturation(img: &ImageGrid, factor: f64) -> ImageGrid {
    let n = img.samples().len() as f64;
    let mean = img.samples().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let max = img.max_value();
    let samples = img
        .samples()
        .iter()
        .map(|&v| round_clamp(mean + factor * (f64::from(v) - mean), max))
        .collect();
    img.with_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Photometric;
    use crate::synthetic;
    use proptest::prelude::*;

    fn grid(rows: usize, cols: usize, samples: Vec<u16>) -> ImageGrid {
        ImageGrid::new(rows, cols, 8, Photometric::Monochrome2, samples).unwrap()
    }

    fn arb_grid() -> impl Strategy<Value = ImageGrid> {
        (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
            proptest::collection::vec(0u16..=255, r * c).prop_map(move |s| grid(r, c, s))
        })
    }

    #[test]
    fn vflip_two_by_two() {
        let g = grid(2, 2, vec![1, 2, 3, 4]);
        assert_eq!(vflip(&g).samples(), &[3, 4, 1, 2]);
    }

    #[test]
    fn identities_at_neutral_parameters() {
        let g = synthetic::chest_phantom(33, 47, 8, 4);
        assert_eq!(rotate(&g, 0.0), g);
        assert_eq!(brightness(&g, 1.0), g);
        assert_eq!(zoom(&g, 1.0), g);
        assert_eq!(saturation(&g, 1.0), g);
        let wide = synthetic::chest_phantom(20, 16, 16, 4);
        assert_eq!(zoom(&wide, 1.0), wide);
        assert_eq!(saturation(&wide, 1.0), wide);
    }

    #[test]
    fn brightness_clamps() {
        let g = ImageGrid::filled(4, 4, 8, 200).unwrap();
        assert!(brightness(&g, 2.0).samples().iter().all(|&v| v == 255));
    }

    #[test]
    fn rotated_constant_keeps_interior() {
        let g = ImageGrid::filled(41, 41, 8, 173).unwrap();
        for deg in [-15.0, -7.5, 3.0, 12.0, 45.0] {
            let r = rotate(&g, deg);
            // the inscribed disc always maps inside the source
            for row in 0..41 {
                for col in 0..41 {
                    let (dy, dx) = (row as f64 - 20.0, col as f64 - 20.0);
                    if dy.hypot(dx) <= 19.0 {
                        assert_eq!(r.get(row, col), 173, "deg {deg} at {row},{col}");
                    }
                }
            }
            assert_eq!(r.get(0, 0), if deg == 0.0 { 173 } else { 0 });
        }
    }

    #[test]
    fn rotation_round_trip_is_close_away_from_borders() {
        // smooth content only: pixel-level noise is low-pass filtered by two
        // bilinear passes, which is smoothing rather than interpolation error
        let blob = |rows: usize, cols: usize, bits: u8| {
            let max = f64::from(crate::image::max_for_bits(bits));
            let samples = (0..rows * cols)
                .map(|i| {
                    let dy = (i / cols) as f64 / rows as f64 - 0.45;
                    let dx = (i % cols) as f64 / cols as f64 - 0.55;
                    (max * (0.1 + 0.8 * (-(dx * dx + dy * dy) / 0.05).exp())).round() as u16
                })
                .collect();
            ImageGrid::new(rows, cols, bits, Photometric::Monochrome2, samples).unwrap()
        };
        let images = [
            synthetic::smooth_gradient(96, 96, 8),
            synthetic::smooth_gradient(100, 120, 8),
            blob(128, 128, 8),
            blob(90, 140, 8),
        ];
        for g in &images {
            let back = rotate(&rotate(g, 10.0), -10.0);
            let (rows, cols) = (g.rows(), g.cols());
            let mut worst = 0;
            for r in rows / 5..rows - rows / 5 {
                for c in cols / 5..cols - cols / 5 {
                    worst = worst.max(g.get(r, c).abs_diff(back.get(r, c)));
                }
            }
            assert!(worst <= ROTATION_ROUND_TRIP_TOLERANCE, "worst deviation {worst}");
        }
    }

    /// Measured worst case on the corpus above is 1 level.
    const ROTATION_ROUND_TRIP_TOLERANCE: u16 = 2;

    #[test]
    fn zoom_grows_centered_square_area() {
        let g = synthetic::centered_square(200, 200, 60, 8);
        let bright = |img: &ImageGrid| img.samples().iter().filter(|&&v| v >= 128).count() as f64;
        let ratio = bright(&zoom(&g, 1.2)) / bright(&g);
        assert!((ratio / 1.44 - 1.0).abs() <= 0.10, "area ratio {ratio}");
    }

    #[test]
    fn saturation_zero_flattens_to_mean() {
        let g = grid(1, 4, vec![0, 10, 20, 30]);
        assert_eq!(saturation(&g, 0.0).samples(), &[15, 15, 15, 15]);
    }

    proptest! {
        #[test]
        fn vflip_is_an_involution_preserving_row_sums(g in arb_grid()) {
            let f = vflip(&g);
            prop_assert_eq!(vflip(&f), g.clone());
            let sums = |img: &ImageGrid| {
                let mut s: Vec<u32> = img.samples().chunks(img.cols()).map(|r| r.iter().map(|&v| u32::from(v)).sum()).collect();
                s.sort_unstable();
                s
            };
            prop_assert_eq!(sums(&f), sums(&g));
        }

        #[test]
        fn transforms_keep_shape_and_range(g in arb_grid(), deg in -45.0f64..45.0, gain in 0.7f64..1.3, scale in 1.0f64..1.2, factor in 0.5f64..1.5) {
            for out in [vflip(&g), rotate(&g, deg), brightness(&g, gain), zoom(&g, scale), saturation(&g, factor)] {
                prop_assert_eq!((out.rows(), out.cols(), out.bits_allocated()), (g.rows(), g.cols(), g.bits_allocated()));
                prop_assert!(out.samples().iter().all(|&v| u32::from(v) <= out.max_value()));
            }
        }
    }
}
