use super::{tags, DataElement, DicomError, DicomObject, Tag, Vr, EXPLICIT_VR_LITTLE_ENDIAN};

const PREAMBLE_LEN: usize = 128;
const MAGIC: &[u8; 4] = b"DICM";
const UNDEFINED_LENGTH: u32 = 0xFFFF_FFFF;

/// Parses a Part 10 byte stream.
///
/// Only Explicit VR Little Endian datasets are accepted. Elements must be in
/// strictly ascending tag order in both the meta group and the dataset;
/// unknown tags are kept verbatim.
pub fn parse_part10(bytes: &[u8]) -> Result<DicomObject, DicomError> {
    if bytes.len() < PREAMBLE_LEN + MAGIC.len() || &bytes[PREAMBLE_LEN..PREAMBLE_LEN + 4] != MAGIC {
        return Err(DicomError::MissingMagic(bytes.len()));
    }
    let mut reader = ElementReader {
        buf: bytes,
        pos: PREAMBLE_LEN + MAGIC.len(),
    };

    let mut meta = Vec::new();
    while reader.peek_group() == Some(0x0002) {
        push_ordered(&mut meta, reader.next_element()?)?;
    }
    let transfer_syntax = meta
        .iter()
        .find(|e| e.tag == tags::TRANSFER_SYNTAX_UID)
        .and_then(DataElement::as_str)
        .ok_or(DicomError::MissingMeta(tags::TRANSFER_SYNTAX_UID))?;
    if transfer_syntax != EXPLICIT_VR_LITTLE_ENDIAN {
        return Err(DicomError::UnsupportedTransferSyntax(transfer_syntax));
    }

    let mut dataset = Vec::new();
    while !reader.at_end() {
        let element = reader.next_element()?;
        if element.tag.is_meta() {
            return Err(DicomError::InvariantViolation(format!(
                "group 0002 element {} inside dataset",
                element.tag
            )));
        }
        push_ordered(&mut dataset, element)?;
    }

    let obj = DicomObject {
        meta,
        dataset,
        transfer_syntax,
    };
    for tag in [tags::SOP_CLASS_UID, tags::SOP_INSTANCE_UID] {
        if obj.get_str(tag).is_none_or(|s| s.is_empty()) {
            return Err(DicomError::InvariantViolation(format!("dataset lacks {tag}")));
        }
    }
    Ok(obj)
}

fn push_ordered(list: &mut Vec<DataElement>, element: DataElement) -> Result<(), DicomError> {
    if let Some(last) = list.last() {
        if last.tag >= element.tag {
            return Err(DicomError::OutOfOrder {
                previous: last.tag,
                tag: element.tag,
            });
        }
    }
    list.push(element);
    Ok(())
}

/// Cursor over explicit VR little endian elements.
pub(super) struct ElementReader<'a> {
    pub(super) buf: &'a [u8],
    pub(super) pos: usize,
}

impl<'a> ElementReader<'a> {
    pub(super) fn at_end(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn remaining(&self) -> usize {
        self.buf.len().saturating_sub(self.pos)
    }

    fn peek_group(&self) -> Option<u16> {
        self.buf
            .get(self.pos..self.pos + 2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    fn take(&mut self, n: usize) -> &'a [u8] {
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        slice
    }

    fn u16(&mut self) -> u16 {
        let b = self.take(2);
        u16::from_le_bytes([b[0], b[1]])
    }

    fn u32(&mut self) -> u32 {
        let b = self.take(4);
        u32::from_le_bytes([b[0], b[1], b[2], b[3]])
    }

    /// Reads a tag and a 32-bit length (item headers have no VR).
    pub(super) fn item_header(&mut self) -> Result<(Tag, usize), DicomError> {
        let start = self.pos;
        if self.remaining() < 8 {
            let tag = self.partial_tag();
            return Err(DicomError::TruncatedElement {
                tag,
                declared: 8,
                remaining: self.buf.len() - start,
            });
        }
        let tag = Tag::new(self.u16(), self.u16());
        let len = self.u32();
        if len == UNDEFINED_LENGTH {
            return Err(DicomError::UndefinedLength { tag });
        }
        Ok((tag, len as usize))
    }

    pub(super) fn bytes(&mut self, tag: Tag, len: usize) -> Result<&'a [u8], DicomError> {
        if len > self.remaining() {
            return Err(DicomError::TruncatedElement {
                tag,
                declared: len,
                remaining: self.remaining(),
            });
        }
        Ok(self.take(len))
    }

    fn partial_tag(&self) -> Tag {
        let rest = &self.buf[self.pos..];
        let word = |i: usize| {
            rest.get(i..i + 2)
                .map_or(0, |b| u16::from_le_bytes([b[0], b[1]]))
        };
        Tag::new(word(0), word(2))
    }

    pub(super) fn next_element(&mut self) -> Result<DataElement, DicomError> {
        if self.remaining() < 8 {
            return Err(DicomError::TruncatedElement {
                tag: self.partial_tag(),
                declared: 8,
                remaining: self.remaining(),
            });
        }
        let tag = Tag::new(self.u16(), self.u16());
        let code = self.take(2);
        let vr = Vr::from_bytes([code[0], code[1]]).ok_or_else(|| DicomError::UnsupportedVr {
            tag,
            vr: String::from_utf8_lossy(code).into_owned(),
        })?;
        let len = if vr.has_long_length() {
            self.take(2);
            if self.remaining() < 4 {
                return Err(DicomError::TruncatedElement {
                    tag,
                    declared: 4,
                    remaining: self.remaining(),
                });
            }
            let len = self.u32();
            if len == UNDEFINED_LENGTH {
                return Err(DicomError::UndefinedLength { tag });
            }
            len as usize
        } else {
            usize::from(self.u16())
        };
        let value = self.bytes(tag, len)?;
        if len % 2 == 1 {
            return Err(DicomError::OddLength { tag, len });
        }
        Ok(DataElement::new(tag, vr, value.to_vec()))
    }
}
