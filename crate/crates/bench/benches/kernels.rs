use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cxr_core::augment::{jpeg_noise, rotate};
use cxr_core::dicom::{grid_to_dicom, parse_part10, serialize_part10, CxrImageParams};
use cxr_core::inference::ops::conv2d;
use cxr_core::inference::{demo, forward, preprocess, Tensor};
use cxr_core::metrics::{average_precision, pr_curve};
use cxr_core::synthetic;

fn ramp(shape: Vec<usize>) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape, (0..n).map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0).collect()).unwrap()
}

fn inference(c: &mut Criterion) {
    let x = ramp(vec![3, 56, 56]);
    let k = ramp(vec![6, 3, 5, 5]);
    let b = ramp(vec![6]);
    c.bench_function("conv2d 3x56x56 -> 6, 5x5 stride 2", |bench| {
        bench.iter(|| conv2d(black_box(&x), &k, &b, 2, 2).unwrap())
    });

    let grid = synthetic::chest_phantom(512, 512, 16, 1);
    c.bench_function("preprocess 512x512 16-bit", |bench| bench.iter(|| preprocess(black_box(&grid))));

    let input = preprocess(&grid);
    let classifier = demo::cxr_3class(demo::DEFAULT_SEED);
    let gate = demo::ood_2class(demo::DEFAULT_SEED);
    c.bench_function("forward demo classifier", |bench| {
        bench.iter(|| forward(&classifier, black_box(&input)).unwrap())
    });
    c.bench_function("forward demo OOD gate", |bench| bench.iter(|| forward(&gate, black_box(&input)).unwrap()));
}

fn metrics(c: &mut Criterion) {
    let n = 10_000;
    let scores: Vec<f64> = (0..n).map(|i| ((i * 2654435761usize) % 100_003) as f64 / 100_003.0).collect();
    let truths: Vec<bool> = (0..n).map(|i| (i * 40503) % 7 < 2).collect();
    c.bench_function("average precision, 10k samples", |bench| {
        bench.iter(|| average_precision(&pr_curve(black_box(&scores), &truths).unwrap()))
    });
}

fn codec(c: &mut Criterion) {
    let grid = synthetic::chest_phantom(1024, 1024, 16, 2);
    let bytes = serialize_part10(&grid_to_dicom(&grid, &CxrImageParams::default()).unwrap()).unwrap();
    c.bench_function("parse_part10 1024x1024 16-bit", |bench| bench.iter(|| parse_part10(black_box(&bytes)).unwrap()));
}

fn augment(c: &mut Criterion) {
    let grid = synthetic::chest_phantom(256, 256, 8, 3);
    c.bench_function("rotate 256x256 by 7.5 degrees", |bench| bench.iter(|| rotate(black_box(&grid), 7.5)));
    c.bench_function("jpeg_noise 256x256 q50", |bench| bench.iter(|| jpeg_noise(black_box(&grid), 50)));
}

criterion_group!(benches, inference, metrics, codec, augment);
criterion_main!(benches);
