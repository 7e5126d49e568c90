use super::{DataElement, DicomError, DicomObject};

/// Serializes an object as Part 10: zero preamble, `DICM`, meta, dataset.
///
/// Elements are written exactly as held, so any object obtained from
/// [`super::parse_part10`] reproduces its source bytes.
pub fn serialize_part10(obj: &DicomObject) -> Result<Vec<u8>, DicomError> {
    obj.validate()?;
    let body: usize = obj.meta.iter().chain(&obj.dataset).map(encoded_len).sum();
    let mut out = Vec::with_capacity(132 + body);
    out.resize(128, 0);
    out.extend_from_slice(b"DICM");
    for element in obj.meta.iter().chain(&obj.dataset) {
        write_element(&mut out, element);
    }
    Ok(out)
}

pub(super) fn encoded_len(element: &DataElement) -> usize {
    let header = if element.vr.has_long_length() { 12 } else { 8 };
    header + element.bytes().len()
}

pub(super) fn write_element(out: &mut Vec<u8>, element: &DataElement) {
    out.extend_from_slice(&element.tag.group.to_le_bytes());
    out.extend_from_slice(&element.tag.element.to_le_bytes());
    out.extend_from_slice(element.vr.code().as_bytes());
    let len = element.bytes().len();
    if element.vr.has_long_length() {
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&(len as u32).to_le_bytes());
    } else {
        out.extend_from_slice(&(len as u16).to_le_bytes());
    }
    out.extend_from_slice(element.bytes());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::{tags, Tag, Vr};

    #[test]
    fn empty_dataset_is_rejected() {
        let obj = DicomObject {
            meta: vec![DataElement::string(
                tags::TRANSFER_SYNTAX_UID,
                Vr::UI,
                crate::dicom::EXPLICIT_VR_LITTLE_ENDIAN,
            )],
            dataset: vec![],
            transfer_syntax: crate::dicom::EXPLICIT_VR_LITTLE_ENDIAN.into(),
        };
        assert_eq!(serialize_part10(&obj).unwrap_err().kind(), "InvariantViolation");
    }

    #[test]
    fn odd_strings_gain_one_pad_byte() {
        let obj = DicomObject::from_dataset(vec![
            DataElement::string(tags::SOP_CLASS_UID, Vr::UI, "1.2.3"),
            DataElement::string(tags::SOP_INSTANCE_UID, Vr::UI, "1.2.45"),
            DataElement::string(Tag::new(0x0010, 0x0010), Vr::PN, "Doe^J"),
        ])
        .unwrap();
        let bytes = serialize_part10(&obj).unwrap();
        let tail = &bytes[bytes.len() - 14..];
        assert_eq!(&tail[..8], &[0x10, 0x00, 0x10, 0x00, b'P', b'N', 6, 0]);
        assert_eq!(&tail[8..], b"Doe^J ");
        let class = bytes
            .windows(6)
            .position(|w| w == b"1.2.3\0")
            .expect("UI padded with NUL");
        assert!(class > 132);
    }

    #[test]
    fn long_length_vrs_use_reserved_field() {
        let mut out = Vec::new();
        write_element(&mut out, &DataElement::new(tags::PIXEL_DATA, Vr::OB, vec![1, 2]));
        assert_eq!(out, [0xE0, 0x7F, 0x10, 0x00, b'O', b'B', 0, 0, 2, 0, 0, 0, 1, 2]);
    }
}
