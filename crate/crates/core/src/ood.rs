//! In-distribution gate run ahead of the classifier.
//!
//! A dedicated two-class model scores the preprocessed tensor; class 0 is
//! "in distribution". Images scoring below the threshold are refused and
//! routed to human review instead of being classified.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{forward, InferenceError, ModelFile, Tensor};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("gate model must have exactly 2 labels [in-distribution, out-of-distribution], found {0}")]
    ModelArity(usize),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub in_dist_prob: f64,
    pub threshold: f64,
    pub accepted: bool,
    pub ood_model_version: String,
}

pub fn check_threshold(threshold: f64) -> Result<f64, GateError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(threshold)
    } else {
        Err(GateError::InvalidThreshold(threshold))
    }
}

pub fn check_model(model: &ModelFile) -> Result<(), GateError> {
    match model.class_labels.len() {
        2 => Ok(()),
        n => Err(GateError::ModelArity(n)),
    }
}

/// Scores `image` and accepts it iff the in-distribution probability is at
/// least `threshold`.
pub fn gate(image: &Tensor, model: &ModelFile, threshold: f64) -> Result<GateDecision, GateError> {
    check_model(model)?;
    check_threshold(threshold)?;
    let prediction = forward(model, image)?;
    let in_dist_prob = prediction.probabilities[0];
    Ok(GateDecision {
        in_dist_prob,
        threshold,
        accepted: in_dist_prob >= threshold,
        ood_model_version: prediction.model_version,
    })
}
