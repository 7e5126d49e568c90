//! The classify path shared by the CLI and the gateway:
//! preprocess, gate, and (only when accepted) classify.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dicom::CLASS_LABELS;
use crate::image::{load_image, ImageError, ImageGrid, LoadedImage};
use crate::inference::{forward, preprocess, InferenceError, ModelFile, Prediction};
use crate::ood::{self, GateDecision, GateError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("classifier labels must be {CLASS_LABELS:?}, found {0:?}")]
    ClassifierLabels(Vec<String>),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Accepted,
    RejectedOod,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Accepted => "accepted",
            Status::RejectedOod => "rejected_ood",
            Status::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "accepted" => Some(Status::Accepted),
            "rejected_ood" => Some(Status::RejectedOod),
            "failed" => Some(Status::Failed),
            _ => None,
        }
    }
}

/// Gate result plus the prediction, present iff the gate accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub gate: GateDecision,
    pub prediction: Option<Prediction>,
}

impl Outcome {
    pub fn status(&self) -> Status {
        if self.gate.accepted {
            Status::Accepted
        } else {
            Status::RejectedOod
        }
    }
}

/// Loaded, validated models and the gate threshold. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Pipeline {
    classifier: Arc<ModelFile>,
    ood_model: Arc<ModelFile>,
    threshold: f64,
}

impl Pipeline {
    pub fn new(classifier: ModelFile, ood_model: ModelFile, threshold: f64) -> Result<Self, PipelineError> {
        classifier.validate()?;
        ood_model.validate()?;
        if classifier.class_labels.iter().map(String::as_str).ne(CLASS_LABELS) {
            return Err(PipelineError::ClassifierLabels(classifier.class_labels));
        }
        ood::check_model(&ood_model)?;
        ood::check_threshold(threshold)?;
        Ok(Pipeline {
            classifier: Arc::new(classifier),
            ood_model: Arc::new(ood_model),
            threshold,
        })
    }

    pub fn classifier(&self) -> &ModelFile {
        &self.classifier
    }

    pub fn ood_model(&self) -> &ModelFile {
        &self.ood_model
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn run(&self, grid: &ImageGrid) -> Result<Outcome, PipelineError> {
        let input = preprocess(grid);
        let gate = ood::gate(&input, &self.ood_model, self.threshold)?;
        let prediction = if gate.accepted {
            Some(forward(&self.classifier, &input)?)
        } else {
            None
        };
        Ok(Outcome { gate, prediction })
    }

    /// Decodes DICOM or PGM bytes and runs the pipeline.
    pub fn run_bytes(&self, bytes: &[u8]) -> Result<(LoadedImage, Outcome), PipelineError> {
        let image = load_image(bytes)?;
        let outcome = self.run(image.grid())?;
        Ok((image, outcome))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::demo;

    fn pipeline(threshold: f64) -> Pipeline {
        Pipeline::new(demo::cxr_3class(42), demo::ood_2class(42), threshold).unwrap()
    }

    #[test]
    fn classifier_runs_iff_gate_accepts() {
        let grid = crate::synthetic::chest_phantom(64, 64, 8, 1);
        let open = pipeline(0.0).run(&grid).unwrap();
        assert!(open.gate.accepted && open.prediction.is_some());
        assert_eq!(open.status(), Status::Accepted);
        let closed = pipeline(1.0).run(&grid).unwrap();
        assert!(!closed.gate.accepted && closed.prediction.is_none());
        assert_eq!(closed.status(), Status::RejectedOod);
    }

    #[test]
    fn models_are_checked_at_construction() {
        assert!(matches!(
            Pipeline::new(demo::ood_2class(1), demo::ood_2class(1), 0.5),
            Err(PipelineError::ClassifierLabels(_))
        ));
        assert!(Pipeline::new(demo::cxr_3class(1), demo::cxr_3class(1), 0.5).is_err());
        assert!(Pipeline::new(demo::cxr_3class(1), demo::ood_2class(1), 1.5).is_err());
    }

    #[test]
    fn status_names() {
        for s in [Status::Accepted, Status::RejectedOod, Status::Failed] {
            assert_eq!(Status::parse(s.as_str()), Some(s));
            assert_eq!(serde_json::to_value(s).unwrap(), s.as_str());
        }
    }
}
