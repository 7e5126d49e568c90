use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use cxr_core::inference::{demo, forward, load_model, save_model, ModelFile, Tensor};

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../testdata/models")
}

fn committed() -> Vec<(ModelFile, Vec<u8>)> {
    [
        (demo::cxr_3class(demo::DEFAULT_SEED), "demo-cxr-3class.cbmf"),
        (demo::ood_2class(demo::DEFAULT_SEED), "demo-ood-2class.cbmf"),
    ]
    .into_iter()
    .map(|(model, file)| (model, fs::read(models_dir().join(file)).unwrap()))
    .collect()
}

#[test]
fn committed_demo_models_match_the_generator() {
    for (model, bytes) in committed() {
        assert_eq!(save_model(&model).unwrap(), bytes, "{}", model.model_version());
        assert_eq!(load_model(&bytes).unwrap(), model);
    }
}

#[test]
fn zero_input_probabilities_are_locked() {
    let text = fs::read_to_string(models_dir().join("zero_input.json")).unwrap();
    let expected: BTreeMap<String, Vec<f64>> = serde_json::from_str(&text).unwrap();
    for (model, _) in committed() {
        let input = Tensor::zeros(model.input_chw().to_vec());
        let prediction = forward(&model, &input).unwrap();
        let want = &expected[&model.model_version()];
        assert_eq!(prediction.probabilities.len(), want.len());
        for (got, want) in prediction.probabilities.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{}: {:?}", model.model_version(), prediction.probabilities);
        }
    }
}
