//! Forward-pass CNN engine: tensors, layer kernels, the `.cbmf` model format,
//! and the image preprocessing that feeds it.

pub mod demo;
mod format;
mod model;
pub mod ops;
mod preprocess;
mod tensor;

use thiserror::Error;

pub use format::{load_model, save_model, FORMAT_VERSION, MAGIC};
pub use model::{forward, LayerSpec, ModelFile, Prediction};
pub use preprocess::{bilinear_resize, preprocess, preprocess_to, MODEL_INPUT_SIZE};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("shape mismatch{}: {detail}", layer_suffix(*.layer))]
    ShapeMismatch { layer: Option<usize>, detail: String },
    #[error("model schema error{} field `{field}`: {detail}", layer_suffix(*.layer))]
    SchemaError {
        layer: Option<usize>,
        field: String,
        detail: String,
    },
    #[error("tensor contains non-finite values")]
    NonFinite,
}

fn layer_suffix(layer: Option<usize>) -> String {
    layer.map(|i| format!(" at layer {i}")).unwrap_or_default()
}

impl InferenceError {
    pub(crate) fn shape(layer: Option<usize>, detail: String) -> Self {
        InferenceError::ShapeMismatch { layer, detail }
    }

    pub(crate) fn schema(layer: Option<usize>, field: &str, detail: impl Into<String>) -> Self {
        InferenceError::SchemaError {
            layer,
            field: field.to_string(),
            detail: detail.into(),
        }
    }

    /// Attaches a layer index to a kernel error.
    pub(crate) fn at_layer(self, index: usize) -> Self {
        match self {
            InferenceError::ShapeMismatch { detail, .. } => InferenceError::ShapeMismatch {
                layer: Some(index),
                detail,
            },
            other => other,
        }
    }
}
