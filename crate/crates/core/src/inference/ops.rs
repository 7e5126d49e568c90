//! Layer kernels. All accumulate in a fixed order, so a parallel split over
//! output channels yields the same bits as a sequential run.

use rayon::prelude::*;

use super::{InferenceError, Tensor};

/// Output extent of a sliding window, or `None` if the window does not fit.
fn window_extent(input: usize, pad: usize, kernel: usize, stride: usize) -> Option<usize> {
    let padded = input + 2 * pad;
    (padded >= kernel && stride > 0).then(|| (padded - kernel) / stride + 1)
}

/// 2-D cross-correlation with zero padding.
///
/// `input` is `[C, H, W]`, `kernel` is `[O, C, kh, kw]`, `bias` is `[O]`.
pub fn conv2d(
    input: &Tensor,
    kernel: &Tensor,
    bias: &Tensor,
    stride: usize,
    pad: usize,
) -> Result<Tensor, InferenceError> {
    let (c, h, w) = input
        .dims3()
        .ok_or_else(|| InferenceError::shape(None, format!("conv2d input {:?} is not [C,H,W]", input.shape())))?;
    let &[o, kc, kh, kw] = kernel.shape() else {
        return Err(InferenceError::shape(
            None,
            format!("conv2d kernel {:?} is not [O,C,kh,kw]", kernel.shape()),
        ));
    };
    if kc != c {
        return Err(InferenceError::shape(
            None,
            format!("conv2d kernel expects {kc} input channels, input has {c}"),
        ));
    }
    if bias.shape() != [o] {
        return Err(InferenceError::shape(
            None,
            format!("conv2d bias {:?} does not match {o} output channels", bias.shape()),
        ));
    }
    let (Some(oh), Some(ow)) = (window_extent(h, pad, kh, stride), window_extent(w, pad, kw, stride)) else {
        return Err(InferenceError::shape(
            None,
            format!("conv2d kernel {kh}x{kw} (pad {pad}, stride {stride}) does not fit {h}x{w}"),
        ));
    };

    let x = input.data();
    let k = kernel.data();
    let b = bias.data();
    let plane = oh * ow;
    let mut out = vec![0.0; o * plane];
    out.par_chunks_mut(plane).enumerate().for_each(|(oc, dst)| {
        let kbase = oc * c * kh * kw;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = b[oc];
                for ic in 0..c {
                    let xbase = ic * h * w;
                    let kc_base = kbase + ic * kh * kw;
                    for ky in 0..kh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = xbase + iy as usize * w;
                        for kx in 0..kw {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += k[kc_base + ky * kw + kx] * x[row + ix as usize];
                        }
                    }
                }
                dst[oy * ow + ox] = acc;
            }
        }
    });
    Ok(Tensor::from_parts(vec![o, oh, ow], out))
}

/// Max over `window x window` cells at the given stride, per channel.
pub fn maxpool2d(input: &Tensor, window: usize, stride: usize) -> Result<Tensor, InferenceError> {
    let (c, h, w) = input
        .dims3()
        .ok_or_else(|| InferenceError::shape(None, format!("maxpool2d input {:?} is not [C,H,W]", input.shape())))?;
    let (Some(oh), Some(ow)) = (window_extent(h, 0, window, stride), window_extent(w, 0, window, stride)) else {
        return Err(InferenceError::shape(
            None,
            format!("maxpool2d window {window} (stride {stride}) does not fit {h}x{w}"),
        ));
    };
    if window == 0 {
        return Err(InferenceError::shape(None, "maxpool2d window must be positive".into()));
    }
    let x = input.data();
    let plane = oh * ow;
    let mut out = vec![0.0; c * plane];
    out.par_chunks_mut(plane).enumerate().for_each(|(ch, dst)| {
        let base = ch * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                for dy in 0..window {
                    let row = base + (oy * stride + dy) * w + ox * stride;
                    for v in &x[row..row + window] {
                        best = best.max(*v);
                    }
                }
                dst[oy * ow + ox] = best;
            }
        }
    });
    Ok(Tensor::from_parts(vec![c, oh, ow], out))
}

/// `out[i] = sum_j weights[i, j] * x[j] + bias[i]`.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor, InferenceError> {
    let &[n] = input.shape() else {
        return Err(InferenceError::shape(None, format!("dense input {:?} is not a vector", input.shape())));
    };
    let &[m, wn] = weights.shape() else {
        return Err(InferenceError::shape(None, format!("dense weights {:?} are not [m,n]", weights.shape())));
    };
    if wn != n || bias.shape() != [m] {
        return Err(InferenceError::shape(
            None,
            format!(
                "dense weights {:?} / bias {:?} do not match input length {n}",
                weights.shape(),
                bias.shape()
            ),
        ));
    }
    let x = input.data();
    let out = weights
        .data()
        .chunks_exact(n)
        .zip(bias.data())
        .map(|(row, b)| row.iter().zip(x).fold(0.0, |acc, (wij, xj)| acc + wij * xj) + b)
        .collect();
    Ok(Tensor::from_parts(vec![m], out))
}

pub fn relu(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::from_parts(input.shape().to_vec(), data)
}

pub fn flatten(input: &Tensor) -> Tensor {
    Tensor::from_parts(vec![input.len()], input.data().to_vec())
}

/// Mean of each channel plane: `[C, H, W] -> [C]`.
pub fn global_avg_pool(input: &Tensor) -> Result<Tensor, InferenceError> {
    let (c, h, w) = input.dims3().ok_or_else(|| {
        InferenceError::shape(None, format!("globalavgpool input {:?} is not [C,H,W]", input.shape()))
    })?;
    let plane = h * w;
    let out = input
        .data()
        .chunks_exact(plane)
        .map(|p| p.iter().sum::<f64>() / plane as f64)
        .collect();
    Ok(Tensor::from_parts(vec![c], out))
}

/// Numerically stable softmax over a vector.
pub fn softmax(logits: &Tensor) -> Result<Tensor, InferenceError> {
    let &[_] = logits.shape() else {
        return Err(InferenceError::shape(None, format!("softmax input {:?} is not a vector", logits.shape())));
    };
    let max = logits.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.data().iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let out = exps.into_iter().map(|e| e / total).collect();
    Ok(Tensor::from_parts(logits.shape().to_vec(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Pads explicitly, then slides the kernel with no bounds logic.
    #[allow(clippy::needless_range_loop)]
    fn conv_oracle(x: &Tensor, k: &Tensor, b: &Tensor, stride: usize, pad: usize) -> Vec<f64> {
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (o, kh, kw) = (k.shape()[0], k.shape()[2], k.shape()[3]);
        let (ph, pw) = (h + 2 * pad, w + 2 * pad);
        let mut padded = vec![vec![vec![0.0; pw]; ph]; c];
        for ci in 0..c {
            for y in 0..h {
                for xx in 0..w {
                    padded[ci][y + pad][xx + pad] = x.data()[(ci * h + y) * w + xx];
                }
            }
        }
        let oh = (ph - kh) / stride + 1;
        let ow = (pw - kw) / stride + 1;
        let mut out = Vec::new();
        for oc in 0..o {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut s = b.data()[oc];
                    for ci in 0..c {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                s += k.data()[((oc * c + ci) * kh + ky) * kw + kx]
                                    * padded[ci][oy * stride + ky][ox * stride + kx];
                            }
                        }
                    }
                    out.push(s);
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel_copies_input() {
        let x = Tensor::new(vec![1, 3, 3], (1..=9).map(f64::from).collect()).unwrap();
        let k = Tensor::new(vec![1, 1, 1, 1], vec![1.0]).unwrap();
        let b = Tensor::zeros(vec![1]);
        assert_eq!(conv2d(&x, &k, &b, 1, 0).unwrap(), x);
    }

    #[test]
    fn all_ones_sum_to_nine() {
        let x = Tensor::filled(vec![1, 3, 3], 1.0);
        let k = Tensor::filled(vec![1, 1, 3, 3], 1.0);
        let out = conv2d(&x, &k, &Tensor::zeros(vec![1]), 1, 0).unwrap();
        assert_eq!(out.shape(), [1, 1, 1]);
        assert_eq!(out.data(), [9.0]);
    }

    #[test]
    fn strided_padded_conv_matches_loop_nest() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random(&mut rng, vec![2, 5, 5]);
        let k = random(&mut rng, vec![3, 2, 3, 3]);
        let b = random(&mut rng, vec![3]);
        let out = conv2d(&x, &k, &b, 2, 1).unwrap();
        assert_eq!(out.shape(), [3, 3, 3]);
        for (a, e) in out.data().iter().zip(conv_oracle(&x, &k, &b, 2, 1)) {
            assert!((a - e).abs() <= 1e-9);
        }
    }

    #[test]
    fn conv_channel_mismatch() {
        let x = Tensor::zeros(vec![2, 4, 4]);
        let k = Tensor::zeros(vec![1, 3, 3, 3]);
        assert!(conv2d(&x, &k, &Tensor::zeros(vec![1]), 1, 0).is_err());
    }

    #[test]
    fn maxpool_on_counting_grid() {
        let x = Tensor::new(vec![1, 4, 4], (1..=16).map(f64::from).collect()).unwrap();
        let out = maxpool2d(&x, 2, 2).unwrap();
        // windows: {1,2,5,6} {3,4,7,8} {9,10,13,14} {11,12,15,16}
        assert_eq!(out.shape(), [1, 2, 2]);
        assert_eq!(out.data(), [6.0, 8.0, 14.0, 16.0]);
    }

    #[test]
    fn maxpool_constant_and_global() {
        let x = Tensor::filled(vec![2, 4, 4], 3.5);
        assert!(maxpool2d(&x, 2, 1).unwrap().data().iter().all(|&v| v == 3.5));
        let y = Tensor::new(vec![1, 3, 3], vec![0.0, -1.0, 4.0, 2.0, 9.5, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let g = maxpool2d(&y, 3, 1).unwrap();
        assert_eq!(g.shape(), [1, 1, 1]);
        assert_eq!(g.data(), [9.5]);
        assert!(maxpool2d(&y, 4, 1).is_err());
    }

    #[test]
    fn dense_hand_cases() {
        let x = Tensor::from_vec(vec![1.0, 2.0]).unwrap();
        let eye = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(dense(&x, &eye, &Tensor::zeros(vec![2])).unwrap(), x);
        let w = Tensor::new(vec![2, 2], vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        let b = Tensor::from_vec(vec![0.0, 1.0]).unwrap();
        assert_eq!(dense(&x, &w, &b).unwrap().data(), [3.0, 3.0]);
        assert!(dense(&x, &Tensor::zeros(vec![2, 3]), &b).is_err());
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        let out = softmax(&Tensor::from_vec(vec![0.0; 3]).unwrap()).unwrap();
        for v in out.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let big = softmax(&Tensor::from_vec(vec![1000.0, 1000.0]).unwrap()).unwrap();
        assert_eq!(big.data(), [0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn softmax_is_a_shift_invariant_distribution(
            logits in proptest::collection::vec(-50.0f64..50.0, 1..12),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&Tensor::from_vec(logits.clone()).unwrap()).unwrap();
            let sum: f64 = p.data().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(p.data().iter().all(|v| (0.0..=1.0).contains(v)));
            let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
            let q = softmax(&Tensor::from_vec(shifted).unwrap()).unwrap();
            for (a, b) in p.data().iter().zip(q.data()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn conv_is_linear_without_bias(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random(&mut rng, vec![2, 6, 5]);
            let y = random(&mut rng, vec![2, 6, 5]);
            let k = random(&mut rng, vec![3, 2, 3, 2]);
            let zero = Tensor::zeros(vec![3]);
            let mix: Vec<f64> = x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect();
            let lhs = conv2d(&Tensor::new(vec![2, 6, 5], mix).unwrap(), &k, &zero, 1, 1).unwrap();
            let cx = conv2d(&x, &k, &zero, 1, 1).unwrap();
            let cy = conv2d(&y, &k, &zero, 1, 1).unwrap();
            for ((l, p), q) in lhs.data().iter().zip(cx.data()).zip(cy.data()) {
                prop_assert!((l - (a * p + b * q)).abs() <= 1e-9);
            }
        }
    }
}
