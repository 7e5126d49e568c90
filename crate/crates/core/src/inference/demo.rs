//! Small seeded models used by tests, fixtures and the default gateway config.
//!
//! Weights come from xorshift64* so the files are reproducible byte for byte
//! from a seed alone.

use super::{LayerSpec, ModelFile};
use crate::dicom::CLASS_LABELS;

pub const CXR_MODEL_NAME: &str = "demo-cxr-3class";
pub const OOD_MODEL_NAME: &str = "demo-ood-2class";
pub const OOD_LABELS: [&str; 2] = ["in-distribution", "out-of-distribution"];
pub const DEFAULT_SEED: u64 = 42;

/// xorshift64* (Vigna). A zero seed is remapped, since zero is a fixed point.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        XorShift64Star {
            state: if seed == 0 { 0x9E37_79B9_7F4A_7C15 } else { seed },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, limit: f64) -> f64 {
        (2.0 * self.next_f64() - 1.0) * limit
    }

    fn fill(&mut self, n: usize, limit: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(limit)).collect()
    }
}

fn conv(rng: &mut XorShift64Star, cin: usize, cout: usize, k: usize, stride: usize, pad: usize) -> LayerSpec {
    let limit = (6.0 / (cin * k * k) as f64).sqrt();
    let weights = rng.fill(cout * cin * k * k, limit);
    let bias = rng.fill(cout, 0.1);
    LayerSpec::conv2d(cin, cout, (k, k), stride, pad, weights, bias).expect("consistent demo conv")
}

fn dense(rng: &mut XorShift64Star, n_in: usize, n_out: usize, limit: f64) -> LayerSpec {
    let weights = rng.fill(n_out * n_in, limit);
    let bias = rng.fill(n_out, 0.1);
    LayerSpec::dense(n_in, n_out, weights, bias).expect("consistent demo dense")
}

/// Three-class CXR classifier on `224 x 224 x 3` input.
pub fn cxr_3class(seed: u64) -> ModelFile {
    let mut rng = XorShift64Star::new(seed);
    let layers = vec![
        LayerSpec::MaxPool2d { window: 4, stride: 4 },
        conv(&mut rng, 3, 6, 5, 2, 2),
        LayerSpec::Relu,
        LayerSpec::MaxPool2d { window: 2, stride: 2 },
        conv(&mut rng, 6, 8, 3, 1, 1),
        LayerSpec::Relu,
        LayerSpec::GlobalAvgPool,
        dense(&mut rng, 8, 3, 4.0),
        LayerSpec::Softmax,
    ];
    ModelFile {
        name: CXR_MODEL_NAME.into(),
        version: format!("seed{seed}"),
        input_shape: [224, 224, 3],
        class_labels: CLASS_LABELS.map(String::from).to_vec(),
        layers,
    }
}

/// Two-class in/out-of-distribution gate on `224 x 224 x 3` input.
pub fn ood_2class(seed: u64) -> ModelFile {
    let mut rng = XorShift64Star::new(seed ^ 0x00D0_0D00);
    let layers = vec![
        LayerSpec::MaxPool2d { window: 8, stride: 8 },
        conv(&mut rng, 3, 4, 3, 2, 1),
        LayerSpec::Relu,
        LayerSpec::GlobalAvgPool,
        dense(&mut rng, 4, 2, 16.0),
        LayerSpec::Softmax,
    ];
    ModelFile {
        name: OOD_MODEL_NAME.into(),
        version: format!("seed{seed}"),
        input_shape: [224, 224, 3],
        class_labels: OOD_LABELS.map(String::from).to_vec(),
        layers,
    }
}
