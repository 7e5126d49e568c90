//! Basic Text SR carrying a three-class prediction.
//!
//! The content tree is flat: a CONTAINER root whose ContentSequence holds one
//! TEXT item per class (`LABEL=p.pppp`) followed by one gate item. Both the
//! content and reference sequences are emitted as precomputed defined-length
//! bytes.

use chrono::{DateTime, Utc};

use super::parse::ElementReader;
use super::uid::UidSource;
use super::write::{encoded_len, write_element};
use super::{tags, DataElement, DicomError, DicomObject, Vr, BASIC_TEXT_SR_CLASS, DX_PRESENTATION_CLASS};

/// Class labels, in model output order.
pub const CLASS_LABELS: [&str; 3] = ["COVID-19", "Non-COVID-19", "No Finding"];

const PROBABILITY_TOLERANCE: f64 = 1e-6;
const GATE_ITEM_PREFIX: &str = "OOD_GATE=";

#[derive(Debug, Clone, PartialEq)]
pub struct SrDocument {
    pub source_sop_instance_uid: String,
    /// Study of the source image; the SR joins it when present.
    pub study_instance_uid: Option<String>,
    pub class_labels: [String; 3],
    pub probabilities: [f64; 3],
    pub gate_accepted: bool,
    pub model_version: String,
    pub created_at: DateTime<Utc>,
}

impl SrDocument {
    pub fn new(
        source_sop_instance_uid: impl Into<String>,
        probabilities: [f64; 3],
        model_version: impl Into<String>,
        created_at: DateTime<Utc>,
    ) -> Self {
        SrDocument {
            source_sop_instance_uid: source_sop_instance_uid.into(),
            study_instance_uid: None,
            class_labels: CLASS_LABELS.map(String::from),
            probabilities,
            gate_accepted: true,
            model_version: model_version.into(),
            created_at,
        }
    }

    pub fn validate(&self) -> Result<(), DicomError> {
        if self.class_labels.iter().map(String::as_str).ne(CLASS_LABELS) {
            return Err(DicomError::InvariantViolation(format!(
                "class labels must be {CLASS_LABELS:?}"
            )));
        }
        if let Some(p) = self
            .probabilities
            .iter()
            .find(|p| !p.is_finite() || !(0.0..=1.0).contains(*p))
        {
            return Err(DicomError::InvariantViolation(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(DicomError::InvariantViolation(format!(
                "probabilities sum to {sum}"
            )));
        }
        if self.source_sop_instance_uid.is_empty() {
            return Err(DicomError::InvariantViolation("empty source SOP UID".into()));
        }
        Ok(())
    }

    /// Text of each class item, e.g. `COVID-19=0.9000`.
    pub fn class_texts(&self) -> Vec<String> {
        self.class_labels
            .iter()
            .zip(self.probabilities)
            .map(|(label, p)| format!("{label}={p:.4}"))
            .collect()
    }
}

/// Builds the SR object. The SOP instance UID comes from `uids`; everything
/// else is a pure function of `doc`.
pub fn build_sr(doc: &SrDocument, uids: &dyn UidSource) -> Result<DicomObject, DicomError> {
    doc.validate()?;
    let date = doc.created_at.format("%Y%m%d").to_string();
    let time = doc.created_at.format("%H%M%S").to_string();
    let sop_instance_uid = uids.next_uid();

    let mut items: Vec<Vec<DataElement>> = doc
        .class_texts()
        .iter()
        .map(|text| text_item(text))
        .collect();
    let gate = if doc.gate_accepted { "ACCEPTED" } else { "REJECTED" };
    items.push(text_item(&format!("{GATE_ITEM_PREFIX}{gate}")));

    let reference = vec![vec![
        DataElement::string(tags::REFERENCED_SOP_CLASS_UID, Vr::UI, DX_PRESENTATION_CLASS),
        DataElement::string(tags::REFERENCED_SOP_INSTANCE_UID, Vr::UI, &doc.source_sop_instance_uid),
    ]];

    let mut dataset = vec![
        DataElement::string(tags::INSTANCE_CREATION_DATE, Vr::DA, &date),
        DataElement::string(tags::INSTANCE_CREATION_TIME, Vr::TM, &time),
        DataElement::string(tags::SOP_CLASS_UID, Vr::UI, BASIC_TEXT_SR_CLASS),
        DataElement::string(tags::SOP_INSTANCE_UID, Vr::UI, &sop_instance_uid),
        DataElement::string(tags::CONTENT_DATE, Vr::DA, &date),
        DataElement::string(tags::CONTENT_TIME, Vr::TM, &time),
        DataElement::string(tags::MODALITY, Vr::CS, "SR"),
        DataElement::new(tags::REFERENCED_IMAGE_SEQUENCE, Vr::SQ, encode_items(&reference)),
        DataElement::string(tags::SOFTWARE_VERSIONS, Vr::LO, &doc.model_version),
        DataElement::string(tags::SERIES_INSTANCE_UID, Vr::UI, &uids.next_uid()),
        DataElement::string(tags::VALUE_TYPE, Vr::CS, "CONTAINER"),
        DataElement::string(tags::CONTINUITY_OF_CONTENT, Vr::CS, "SEPARATE"),
        DataElement::string(tags::COMPLETION_FLAG, Vr::CS, "COMPLETE"),
        DataElement::string(tags::VERIFICATION_FLAG, Vr::CS, "UNVERIFIED"),
        DataElement::new(tags::CONTENT_SEQUENCE, Vr::SQ, encode_items(&items)),
    ];
    if let Some(study) = &doc.study_instance_uid {
        dataset.push(DataElement::string(tags::STUDY_INSTANCE_UID, Vr::UI, study));
    }
    DicomObject::from_dataset(dataset)
}

fn text_item(text: &str) -> Vec<DataElement> {
    vec![
        DataElement::string(tags::RELATIONSHIP_TYPE, Vr::CS, "CONTAINS"),
        DataElement::string(tags::VALUE_TYPE, Vr::CS, "TEXT"),
        DataElement::string(tags::TEXT_VALUE, Vr::UT, text),
    ]
}

/// Encodes defined-length items, each holding explicit VR LE elements.
pub fn encode_items(items: &[Vec<DataElement>]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        let len: usize = item.iter().map(encoded_len).sum();
        out.extend_from_slice(&tags::ITEM.group.to_le_bytes());
        out.extend_from_slice(&tags::ITEM.element.to_le_bytes());
        out.extend_from_slice(&(len as u32).to_le_bytes());
        for element in item {
            write_element(&mut out, element);
        }
    }
    out
}

/// Reads one level of items from a defined-length SQ value. Nested sequences
/// inside items stay opaque.
pub fn read_items(sequence: &DataElement) -> Result<Vec<Vec<DataElement>>, DicomError> {
    if sequence.vr != Vr::SQ {
        return Err(DicomError::InvariantViolation(format!(
            "{} is not a sequence",
            sequence.tag
        )));
    }
    let mut outer = ElementReader {
        buf: sequence.bytes(),
        pos: 0,
    };
    let mut items = Vec::new();
    while !outer.at_end() {
        let (tag, len) = outer.item_header()?;
        if tag != tags::ITEM {
            return Err(DicomError::InvariantViolation(format!(
                "expected item tag, found {tag}"
            )));
        }
        let body = outer.bytes(tag, len)?;
        let mut inner = ElementReader { buf: body, pos: 0 };
        let mut elements = Vec::new();
        while !inner.at_end() {
            elements.push(inner.next_element()?);
        }
        items.push(elements);
    }
    Ok(items)
}

/// TEXT values from the SR content sequence, in order.
pub fn text_values(sr: &DicomObject) -> Result<Vec<String>, DicomError> {
    let content = sr
        .get(tags::CONTENT_SEQUENCE)
        .ok_or_else(|| DicomError::InvariantViolation("SR lacks ContentSequence".into()))?;
    Ok(read_items(content)?
        .iter()
        .filter_map(|item| {
            item.iter()
                .find(|e| e.tag == tags::TEXT_VALUE)
                .and_then(DataElement::as_str)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::uid::SequentialUids;
    use crate::dicom::{parse_part10, serialize_part10};
    use chrono::TimeZone;

    fn doc(probabilities: [f64; 3]) -> SrDocument {
        let at = Utc.with_ymd_and_hms(2024, 3, 9, 14, 5, 7).unwrap();
        SrDocument::new("2.25.42", probabilities, "demo-cxr-3class@1", at)
    }

    #[test]
    fn class_items_use_four_decimals() {
        let sr = build_sr(&doc([0.90, 0.06, 0.04]), &SequentialUids::new(1)).unwrap();
        let texts = text_values(&sr).unwrap();
        assert_eq!(
            texts,
            [
                "COVID-19=0.9000",
                "Non-COVID-19=0.0600",
                "No Finding=0.0400",
                "OOD_GATE=ACCEPTED"
            ]
        );
    }

    #[test]
    fn bad_probability_sum_is_rejected() {
        let err = build_sr(&doc([0.5, 0.2, 0.1]), &SequentialUids::new(1)).unwrap_err();
        assert_eq!(err.kind(), "InvariantViolation");
    }

    #[test]
    fn wrong_labels_are_rejected() {
        let mut d = doc([0.2, 0.3, 0.5]);
        d.class_labels[2] = "Normal".into();
        assert!(build_sr(&d, &SequentialUids::new(1)).is_err());
    }

    #[test]
    fn survives_serialization() {
        let mut d = doc([0.2, 0.3, 0.5]);
        d.study_instance_uid = Some("1.2.3.4".into());
        let sr = build_sr(&d, &SequentialUids::new(9)).unwrap();
        let back = parse_part10(&serialize_part10(&sr).unwrap()).unwrap();
        assert_eq!(back.get_str(tags::MODALITY).as_deref(), Some("SR"));
        assert_eq!(back.sop_class_uid().as_deref(), Some(BASIC_TEXT_SR_CLASS));
        assert_eq!(back.sop_instance_uid().as_deref(), Some("2.25.9"));
        assert_eq!(back.study_instance_uid().as_deref(), Some("1.2.3.4"));
        assert_eq!(back.get_str(tags::INSTANCE_CREATION_DATE).as_deref(), Some("20240309"));
        let refs = read_items(back.get(tags::REFERENCED_IMAGE_SEQUENCE).unwrap()).unwrap();
        assert_eq!(refs.len(), 1);
        let referenced = refs[0]
            .iter()
            .find(|e| e.tag == tags::REFERENCED_SOP_INSTANCE_UID)
            .and_then(DataElement::as_str);
        assert_eq!(referenced.as_deref(), Some("2.25.42"));
        assert_eq!(back, sr);
    }

    #[test]
    fn deterministic_given_uids_and_clock() {
        let a = build_sr(&doc([0.1, 0.1, 0.8]), &SequentialUids::new(5)).unwrap();
        let b = build_sr(&doc([0.1, 0.1, 0.8]), &SequentialUids::new(5)).unwrap();
        assert_eq!(serialize_part10(&a).unwrap(), serialize_part10(&b).unwrap());
    }
}
