//! A strict subset of DICOM Part 10: Explicit VR Little Endian only.
//!
//! The codec keeps elements as raw bytes and decodes on demand, so a parsed
//! object re-serializes to exactly the bytes it came from. Sequences are
//! carried as opaque defined-length blobs and never recursed into by the
//! parser; [`sr::read_items`] offers a one-level reader for the SR output.

mod parse;
mod pixels;
pub mod sr;
pub mod tags;
pub mod uid;
mod write;

use std::fmt;

use thiserror::Error;

pub use parse::parse_part10;
pub use pixels::{extract_pixels, grid_to_dicom, CxrImageParams};
pub use sr::{build_sr, SrDocument, CLASS_LABELS};
pub use write::serialize_part10;

/// Explicit VR Little Endian.
pub const EXPLICIT_VR_LITTLE_ENDIAN: &str = "1.2.840.10008.1.2.1";
/// Basic Text SR storage.
pub const BASIC_TEXT_SR_CLASS: &str = "1.2.840.10008.5.1.4.1.1.88.11";
/// Digital X-Ray Image Storage - For Presentation.
pub const DX_PRESENTATION_CLASS: &str = "1.2.840.10008.5.1.4.1.1.1.1";
/// Implementation class UID written into file meta by this codec.
pub const IMPLEMENTATION_CLASS_UID: &str = "2.25.81731542917389145312398047118653279421";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DicomError {
    #[error("input is {0} bytes, need at least 132 for preamble and magic")]
    MissingMagic(usize),
    #[error("unsupported transfer syntax {0:?}")]
    UnsupportedTransferSyntax(String),
    #[error("element {tag} declares {declared} bytes but only {remaining} remain")]
    TruncatedElement {
        tag: Tag,
        declared: usize,
        remaining: usize,
    },
    #[error("element {tag} has odd value length {len}")]
    OddLength { tag: Tag, len: usize },
    #[error("element {tag} has unsupported VR {vr:?}")]
    UnsupportedVr { tag: Tag, vr: String },
    #[error("element {tag} uses undefined length, only defined lengths are supported")]
    UndefinedLength { tag: Tag },
    #[error("element {tag} follows {previous}; tags must be strictly ascending")]
    OutOfOrder { previous: Tag, tag: Tag },
    #[error("file meta is missing {0}")]
    MissingMeta(Tag),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("missing pixel module element {0}")]
    MissingPixelModule(Tag),
    #[error("pixel data has {actual} bytes, expected {expected}")]
    PixelLengthMismatch { expected: usize, actual: usize },
    #[error("unsupported pixel encoding: {0}")]
    UnsupportedPixelEncoding(String),
}

impl DicomError {
    /// Stable variant name, used by golden listings and error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            DicomError::MissingMagic(_) => "MissingMagic",
            DicomError::UnsupportedTransferSyntax(_) => "UnsupportedTransferSyntax",
            DicomError::TruncatedElement { .. } => "TruncatedElement",
            DicomError::OddLength { .. } => "OddLength",
            DicomError::UnsupportedVr { .. } => "UnsupportedVr",
            DicomError::UndefinedLength { .. } => "UndefinedLength",
            DicomError::OutOfOrder { .. } => "OutOfOrder",
            DicomError::MissingMeta(_) => "MissingMeta",
            DicomError::InvariantViolation(_) => "InvariantViolation",
            DicomError::MissingPixelModule(_) => "MissingPixelModule",
            DicomError::PixelLengthMismatch { .. } => "PixelLengthMismatch",
            DicomError::UnsupportedPixelEncoding(_) => "UnsupportedPixelEncoding",
        }
    }
}

/// A (group, element) pair, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag {
    pub group: u16,
    pub element: u16,
}

impl Tag {
    pub const fn new(group: u16, element: u16) -> Self {
        Tag { group, element }
    }

    pub fn is_meta(self) -> bool {
        self.group == 0x0002
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:04X},{:04X})", self.group, self.element)
    }
}

/// Value representations understood by the codec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vr {
    UI,
    SH,
    LO,
    PN,
    CS,
    DA,
    TM,
    IS,
    DS,
    US,
    UL,
    OB,
    OW,
    SQ,
    ST,
    UT,
}

impl Vr {
    pub const ALL: [Vr; 16] = [
        Vr::UI,
        Vr::SH,
        Vr::LO,
        Vr::PN,
        Vr::CS,
        Vr::DA,
        Vr::TM,
        Vr::IS,
        Vr::DS,
        Vr::US,
        Vr::UL,
        Vr::OB,
        Vr::OW,
        Vr::SQ,
        Vr::ST,
        Vr::UT,
    ];

    pub fn from_bytes(code: [u8; 2]) -> Option<Vr> {
        Vr::ALL.into_iter().find(|vr| vr.code().as_bytes() == code)
    }

    pub fn code(self) -> &'static str {
        match self {
            Vr::UI => "UI",
            Vr::SH => "SH",
            Vr::LO => "LO",
            Vr::PN => "PN",
            Vr::CS => "CS",
            Vr::DA => "DA",
            Vr::TM => "TM",
            Vr::IS => "IS",
            Vr::DS => "DS",
            Vr::US => "US",
            Vr::UL => "UL",
            Vr::OB => "OB",
            Vr::OW => "OW",
            Vr::SQ => "SQ",
            Vr::ST => "ST",
            Vr::UT => "UT",
        }
    }

    /// Explicit VR encodings with a 2-byte reserved field and a 32-bit length.
    pub fn has_long_length(self) -> bool {
        matches!(self, Vr::OB | Vr::OW | Vr::SQ | Vr::UT)
    }

    pub fn is_string(self) -> bool {
        matches!(
            self,
            Vr::UI
                | Vr::SH
                | Vr::LO
                | Vr::PN
                | Vr::CS
                | Vr::DA
                | Vr::TM
                | Vr::IS
                | Vr::DS
                | Vr::ST
                | Vr::UT
        )
    }

    /// Byte used to pad odd-length values to even length.
    pub fn pad_byte(self) -> u8 {
        match self {
            Vr::UI => 0,
            vr if vr.is_string() => b' ',
            _ => 0,
        }
    }
}

impl fmt::Display for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataElement {
    pub tag: Tag,
    pub vr: Vr,
    value: Vec<u8>,
}

impl DataElement {
    /// Builds an element from raw bytes, padding odd lengths per the VR.
    pub fn new(tag: Tag, vr: Vr, mut value: Vec<u8>) -> Self {
        if value.len() % 2 == 1 {
            value.push(vr.pad_byte());
        }
        DataElement { tag, vr, value }
    }

    pub fn string(tag: Tag, vr: Vr, text: &str) -> Self {
        DataElement::new(tag, vr, text.as_bytes().to_vec())
    }

    pub fn u16(tag: Tag, value: u16) -> Self {
        DataElement::new(tag, Vr::US, value.to_le_bytes().to_vec())
    }

    pub fn u32(tag: Tag, value: u32) -> Self {
        DataElement::new(tag, Vr::UL, value.to_le_bytes().to_vec())
    }

    /// Raw value bytes, including any padding.
    pub fn bytes(&self) -> &[u8] {
        &self.value
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.value
    }

    /// String view with trailing padding (NUL or space) removed.
    ///
    /// Non-ASCII bytes are passed through lossily; there is no character set
    /// handling.
    pub fn as_str(&self) -> Option<String> {
        if !self.vr.is_string() {
            return None;
        }
        let trimmed = trim_padding(&self.value);
        Some(String::from_utf8_lossy(trimmed).into_owned())
    }

    pub fn as_u16(&self) -> Option<u16> {
        match (self.vr, self.value.as_slice()) {
            (Vr::US, [a, b, ..]) => Some(u16::from_le_bytes([*a, *b])),
            _ => None,
        }
    }

    pub fn as_u32(&self) -> Option<u32> {
        match (self.vr, self.value.as_slice()) {
            (Vr::UL, [a, b, c, d, ..]) => Some(u32::from_le_bytes([*a, *b, *c, *d])),
            _ => None,
        }
    }
}

fn trim_padding(bytes: &[u8]) -> &[u8] {
    let end = bytes
        .iter()
        .rposition(|&b| b != 0 && b != b' ')
        .map_or(0, |i| i + 1);
    &bytes[..end]
}

/// A Part 10 object: file meta group plus dataset, both strictly ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DicomObject {
    pub meta: Vec<DataElement>,
    pub dataset: Vec<DataElement>,
    pub transfer_syntax: String,
}

impl DicomObject {
    /// Assembles an object around `dataset`, generating a complete file meta
    /// group (including the group length) for Explicit VR Little Endian.
    ///
    /// The dataset is sorted; duplicate tags or missing SOP UIDs are rejected.
    pub fn from_dataset(mut dataset: Vec<DataElement>) -> Result<Self, DicomError> {
        dataset.sort_by_key(|e| e.tag);
        if let Some(w) = dataset.windows(2).find(|w| w[0].tag >= w[1].tag) {
            return Err(DicomError::InvariantViolation(format!(
                "duplicate tag {}",
                w[1].tag
            )));
        }
        let mut obj = DicomObject {
            meta: Vec::new(),
            dataset,
            transfer_syntax: EXPLICIT_VR_LITTLE_ENDIAN.to_string(),
        };
        let class = obj.required_str(tags::SOP_CLASS_UID)?;
        let instance = obj.required_str(tags::SOP_INSTANCE_UID)?;
        let mut meta = vec![
            DataElement::new(tags::FILE_META_VERSION, Vr::OB, vec![0x00, 0x01]),
            DataElement::string(tags::MEDIA_STORAGE_SOP_CLASS_UID, Vr::UI, &class),
            DataElement::string(tags::MEDIA_STORAGE_SOP_INSTANCE_UID, Vr::UI, &instance),
            DataElement::string(tags::TRANSFER_SYNTAX_UID, Vr::UI, EXPLICIT_VR_LITTLE_ENDIAN),
            DataElement::string(tags::IMPLEMENTATION_CLASS_UID, Vr::UI, IMPLEMENTATION_CLASS_UID),
        ];
        let group_len: usize = meta.iter().map(write::encoded_len).sum();
        meta.insert(0, DataElement::u32(tags::FILE_META_GROUP_LENGTH, group_len as u32));
        obj.meta = meta;
        Ok(obj)
    }

    pub fn get(&self, tag: Tag) -> Option<&DataElement> {
        let list = if tag.is_meta() { &self.meta } else { &self.dataset };
        list.binary_search_by_key(&tag, |e| e.tag)
            .ok()
            .map(|i| &list[i])
    }

    pub fn get_str(&self, tag: Tag) -> Option<String> {
        self.get(tag).and_then(DataElement::as_str)
    }

    pub fn sop_class_uid(&self) -> Option<String> {
        self.get_str(tags::SOP_CLASS_UID)
    }

    pub fn sop_instance_uid(&self) -> Option<String> {
        self.get_str(tags::SOP_INSTANCE_UID)
    }

    pub fn study_instance_uid(&self) -> Option<String> {
        self.get_str(tags::STUDY_INSTANCE_UID)
    }

    /// Checks the structural invariants the serializer relies on.
    pub fn validate(&self) -> Result<(), DicomError> {
        for (name, list) in [("meta", &self.meta), ("dataset", &self.dataset)] {
            if let Some(w) = list.windows(2).find(|w| w[0].tag >= w[1].tag) {
                return Err(DicomError::InvariantViolation(format!(
                    "{name} tags not strictly ascending at {}",
                    w[1].tag
                )));
            }
        }
        if let Some(e) = self.meta.iter().find(|e| !e.tag.is_meta()) {
            return Err(DicomError::InvariantViolation(format!(
                "meta contains non-0002 element {}",
                e.tag
            )));
        }
        if let Some(e) = self.dataset.iter().find(|e| e.tag.is_meta()) {
            return Err(DicomError::InvariantViolation(format!(
                "dataset contains group 0002 element {}",
                e.tag
            )));
        }
        if let Some(e) = self.meta.iter().chain(&self.dataset).find(|e| e.value.len() % 2 == 1) {
            return Err(DicomError::InvariantViolation(format!(
                "element {} has odd length",
                e.tag
            )));
        }
        self.required_str(tags::SOP_CLASS_UID)?;
        self.required_str(tags::SOP_INSTANCE_UID)?;
        Ok(())
    }

    fn required_str(&self, tag: Tag) -> Result<String, DicomError> {
        self.get_str(tag)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| DicomError::InvariantViolation(format!("dataset lacks {tag}")))
    }
}
