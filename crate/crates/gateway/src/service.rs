//! Request-independent ingest logic: one DICOM part in, one outcome out.

use std::sync::Arc;

use cxr_core::dicom::uid::{self, Clock, UidSource};
use cxr_core::dicom::{build_sr, extract_pixels, parse_part10, serialize_part10, SrDocument};
use cxr_core::inference::Prediction;
use cxr_core::pipeline::{Pipeline, Status};
use serde::{Deserialize, Serialize};

use crate::multipart::{Part, DICOM_MEDIA_TYPE};
use crate::store::{NewInstance, Store, StoreError, StudyRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedEntry {
    pub sop: String,
    pub study: String,
    pub prediction: Prediction,
    pub sr_sop: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedEntry {
    pub sop: String,
    pub study: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedEntry {
    /// Zero-based position of the part in the request.
    pub index: usize,
    /// Stable error kind, e.g. `TruncatedElement`.
    pub kind: String,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sop: Option<String>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
pub struct StowResponse {
    pub accepted: Vec<AcceptedEntry>,
    pub rejected: Vec<RejectedEntry>,
    pub failed: Vec<FailedEntry>,
}

enum PartOutcome {
    Accepted(AcceptedEntry),
    Rejected(RejectedEntry),
    Failed(FailedEntry),
}

/// Models, storage and identity sources shared by all requests.
pub struct Gateway {
    pipeline: Pipeline,
    store: Store,
    uids: Arc<dyn UidSource>,
    clock: Arc<dyn Clock>,
}

fn failed(index: usize, kind: &str, error: impl ToString, sop: Option<String>) -> PartOutcome {
    PartOutcome::Failed(FailedEntry {
        index,
        kind: kind.to_string(),
        error: error.to_string(),
        sop,
    })
}

fn rejection_reason(record: &StudyRecord) -> String {
    match &record.gate {
        Some(g) => format!(
            "out of distribution: in_dist_prob {:.4} < threshold {:.4}",
            g.in_dist_prob, g.threshold
        ),
        None => "out of distribution".into(),
    }
}

/// Maps a stored record back to the response entry it produced.
fn outcome_of(index: usize, record: &StudyRecord) -> PartOutcome {
    match record.status {
        Status::Accepted => PartOutcome::Accepted(AcceptedEntry {
            sop: record.sop_instance_uid.clone(),
            study: record.study_uid.clone(),
            prediction: record.prediction.clone().expect("accepted records carry a prediction"),
            sr_sop: record.sr_sop_uid.clone().expect("accepted records carry an SR"),
        }),
        Status::RejectedOod => PartOutcome::Rejected(RejectedEntry {
            sop: record.sop_instance_uid.clone(),
            study: record.study_uid.clone(),
            reason: rejection_reason(record),
        }),
        Status::Failed => {
            let error = record.error.clone().unwrap_or_default();
            let kind = error.split(':').next().unwrap_or("Failed").to_string();
            failed(index, &kind, error, Some(record.sop_instance_uid.clone()))
        }
    }
}

impl Gateway {
    pub fn new(pipeline: Pipeline, store: Store, uids: Arc<dyn UidSource>, clock: Arc<dyn Clock>) -> Self {
        Gateway { pipeline, store, uids, clock }
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Processes every part; a failing part never affects its siblings.
    pub fn stow(&self, parts: &[Part]) -> StowResponse {
        let mut response = StowResponse::default();
        for (index, part) in parts.iter().enumerate() {
            match self.ingest(index, part) {
                PartOutcome::Accepted(e) => response.accepted.push(e),
                PartOutcome::Rejected(e) => response.rejected.push(e),
                PartOutcome::Failed(e) => response.failed.push(e),
            }
        }
        response
    }

    fn ingest(&self, index: usize, part: &Part) -> PartOutcome {
        if let Some(ct) = part.header("content-type") {
            let media = ct.split(';').next().unwrap_or("").trim();
            if !media.eq_ignore_ascii_case(DICOM_MEDIA_TYPE) {
                return failed(index, "UnsupportedMediaType", format!("part media type {media:?}"), None);
            }
        }
        let bytes = part.body.as_slice();
        let object = match parse_part10(bytes) {
            Ok(o) => o,
            Err(e) => return failed(index, e.kind(), e, None),
        };
        let sop = object.sop_instance_uid().unwrap_or_default();
        let Some(study) = object.study_instance_uid() else {
            return failed(index, "MissingStudyInstanceUid", "StudyInstanceUID (0020,000D) is required", Some(sop));
        };
        for u in [&sop, &study] {
            if !uid::is_valid(u) {
                return failed(index, "InvalidUid", format!("UID {u:?} is not a valid DICOM UID"), Some(sop.clone()));
            }
        }

        let lock = self.store.lock_sop(&sop);
        let _guard = lock.lock().expect("sop lock poisoned");
        if let Some(existing) = self.store.get(&sop) {
            return outcome_of(index, &existing);
        }

        let received_at = self.clock.now();
        let mut record = StudyRecord {
            study_uid: study.clone(),
            sop_instance_uid: sop.clone(),
            received_at,
            status: Status::Failed,
            prediction: None,
            gate: None,
            sr_sop_uid: None,
            source_bytes_path: Store::source_rel_path(&study, &sop),
            error: None,
            review: None,
        };

        let run = extract_pixels(&object)
            .map_err(|e| format!("{}: {e}", e.kind()))
            .and_then(|grid| self.pipeline.run(&grid).map_err(|e| format!("Inference: {e}")));
        let outcome = match run {
            Ok(o) => o,
            Err(error) => {
                record.error = Some(error);
                return self.persist(index, NewInstance { record, source: bytes, sr: None });
            }
        };
        record.status = outcome.status();
        record.gate = Some(outcome.gate.clone());
        let Some(prediction) = outcome.prediction else {
            return self.persist(index, NewInstance { record, source: bytes, sr: None });
        };

        let probabilities: [f64; 3] = match prediction.probabilities.as_slice().try_into() {
            Ok(p) => p,
            Err(_) => return failed(index, "Inference", "classifier must output 3 probabilities", Some(sop)),
        };
        let mut doc = SrDocument::new(&sop, probabilities, &prediction.model_version, received_at);
        doc.study_instance_uid = Some(study);
        let sr = match build_sr(&doc, self.uids.as_ref()).and_then(|o| {
            let uid = o.sop_instance_uid().unwrap_or_default();
            serialize_part10(&o).map(|b| (uid, b))
        }) {
            Ok(v) => v,
            Err(e) => return failed(index, e.kind(), e, Some(sop)),
        };
        record.prediction = Some(prediction);
        record.sr_sop_uid = Some(sr.0);
        self.persist(index, NewInstance { record, source: bytes, sr: Some(&sr.1) })
    }

    fn persist(&self, index: usize, new: NewInstance<'_>) -> PartOutcome {
        let sop = new.record.sop_instance_uid.clone();
        match self.store.commit(new) {
            Ok(record) => outcome_of(index, &record),
            Err(e @ StoreError::InvalidUid(_)) => failed(index, "InvalidUid", e, Some(sop)),
            Err(e) => failed(index, "Storage", e, Some(sop)),
        }
    }
}
