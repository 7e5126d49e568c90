use super::{tags, uid, DataElement, DicomError, DicomObject, Tag, Vr, DX_PRESENTATION_CLASS};
use crate::image::{ImageGrid, Photometric};

/// Reads the image pixel module into an [`ImageGrid`].
///
/// MONOCHROME1 data is returned untouched with the flag set; inversion is
/// left to preprocessing.
pub fn extract_pixels(obj: &DicomObject) -> Result<ImageGrid, DicomError> {
    let us = |tag: Tag| -> Result<u16, DicomError> {
        obj.get(tag)
            .and_then(DataElement::as_u16)
            .ok_or(DicomError::MissingPixelModule(tag))
    };
    let rows = usize::from(us(tags::ROWS)?);
    let cols = usize::from(us(tags::COLUMNS)?);
    let bits = us(tags::BITS_ALLOCATED)?;
    let photometric_text = obj
        .get_str(tags::PHOTOMETRIC_INTERPRETATION)
        .ok_or(DicomError::MissingPixelModule(tags::PHOTOMETRIC_INTERPRETATION))?;
    let pixel_data = obj
        .get(tags::PIXEL_DATA)
        .ok_or(DicomError::MissingPixelModule(tags::PIXEL_DATA))?;

    if let Some(samples) = obj.get(tags::SAMPLES_PER_PIXEL).and_then(DataElement::as_u16) {
        if samples != 1 {
            return Err(DicomError::UnsupportedPixelEncoding(format!(
                "{samples} samples per pixel"
            )));
        }
    }
    let photometric = Photometric::parse(&photometric_text).ok_or_else(|| {
        DicomError::UnsupportedPixelEncoding(format!("photometric {photometric_text}"))
    })?;
    let bytes_per_sample = match bits {
        8 => 1,
        16 => 2,
        other => {
            return Err(DicomError::UnsupportedPixelEncoding(format!(
                "{other} bits allocated"
            )))
        }
    };

    let payload = pixel_data.bytes();
    let expected = rows * cols * bytes_per_sample;
    // an odd 8-bit payload carries one trailing pad byte
    let padded = expected + expected % 2;
    if payload.len() != expected && payload.len() != padded {
        return Err(DicomError::PixelLengthMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let samples = if bytes_per_sample == 1 {
        payload[..expected].iter().map(|&b| u16::from(b)).collect()
    } else {
        payload[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    };
    ImageGrid::new(rows, cols, bits as u8, photometric, samples)
        .map_err(|e| DicomError::UnsupportedPixelEncoding(e.to_string()))
}

/// Identity and descriptive fields for a synthesized CXR instance.
#[derive(Debug, Clone, Default)]
pub struct CxrImageParams {
    pub sop_instance_uid: Option<String>,
    pub study_instance_uid: Option<String>,
    pub series_instance_uid: Option<String>,
    pub patient_id: Option<String>,
    /// "PA" or "AP".
    pub view_position: Option<String>,
}

/// Wraps a grid into a minimal DX Part 10 object; the inverse of
/// [`extract_pixels`]. Missing UIDs are generated under the `2.25.` root.
pub fn grid_to_dicom(grid: &ImageGrid, params: &CxrImageParams) -> Result<DicomObject, DicomError> {
    let fresh = |given: &Option<String>| given.clone().unwrap_or_else(uid::generate);
    let bits = u16::from(grid.bits_allocated());
    let pixel_bytes: Vec<u8> = if bits == 8 {
        grid.samples().iter().map(|&v| v as u8).collect()
    } else {
        grid.samples().iter().flat_map(|v| v.to_le_bytes()).collect()
    };
    let pixel_vr = if bits == 8 { Vr::OB } else { Vr::OW };

    let mut dataset = vec![
        DataElement::string(tags::SOP_CLASS_UID, Vr::UI, DX_PRESENTATION_CLASS),
        DataElement::string(tags::SOP_INSTANCE_UID, Vr::UI, &fresh(&params.sop_instance_uid)),
        DataElement::string(tags::MODALITY, Vr::CS, "DX"),
        DataElement::string(tags::STUDY_INSTANCE_UID, Vr::UI, &fresh(&params.study_instance_uid)),
        DataElement::string(tags::SERIES_INSTANCE_UID, Vr::UI, &fresh(&params.series_instance_uid)),
        DataElement::string(tags::INSTANCE_NUMBER, Vr::IS, "1"),
        DataElement::u16(tags::SAMPLES_PER_PIXEL, 1),
        DataElement::string(tags::PHOTOMETRIC_INTERPRETATION, Vr::CS, grid.photometric().as_str()),
        DataElement::u16(tags::ROWS, grid.rows() as u16),
        DataElement::u16(tags::COLUMNS, grid.cols() as u16),
        DataElement::u16(tags::BITS_ALLOCATED, bits),
        DataElement::u16(tags::BITS_STORED, bits),
        DataElement::u16(tags::HIGH_BIT, bits - 1),
        DataElement::u16(tags::PIXEL_REPRESENTATION, 0),
        DataElement::new(tags::PIXEL_DATA, pixel_vr, pixel_bytes),
    ];
    if let Some(id) = &params.patient_id {
        dataset.push(DataElement::string(tags::PATIENT_ID, Vr::LO, id));
    }
    if let Some(view) = &params.view_position {
        dataset.push(DataElement::string(tags::VIEW_POSITION, Vr::CS, view));
    }
    if grid.rows() > usize::from(u16::MAX) || grid.cols() > usize::from(u16::MAX) {
        return Err(DicomError::InvariantViolation("image dimensions exceed 65535".into()));
    }
    DicomObject::from_dataset(dataset)
}
