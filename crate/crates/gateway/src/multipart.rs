//! `multipart/related` envelopes carrying DICOM parts.

use memchr::memmem;
use thiserror::Error;

pub const DICOM_MEDIA_TYPE: &str = "application/dicom";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("unsupported media type {0:?}, expected multipart/related; type=\"application/dicom\"")]
    MediaType(String),
    #[error("malformed multipart body: {0}")]
    Malformed(String),
}

impl EnvelopeError {
    /// True for errors that map to 415 rather than 400.
    pub fn is_media_type(&self) -> bool {
        matches!(self, EnvelopeError::MediaType(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Part {
    /// Lower-cased header names with trimmed values.
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Part {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Validates the request Content-Type and returns the boundary.
pub fn boundary_from_content_type(content_type: &str) -> Result<String, EnvelopeError> {
    let media: mime::Mime = content_type
        .parse()
        .map_err(|_| EnvelopeError::MediaType(content_type.to_string()))?;
    if media.type_() != mime::MULTIPART || media.subtype() != "related" {
        return Err(EnvelopeError::MediaType(content_type.to_string()));
    }
    if let Some(t) = media.get_param("type") {
        if !t.as_str().eq_ignore_ascii_case(DICOM_MEDIA_TYPE) {
            return Err(EnvelopeError::MediaType(content_type.to_string()));
        }
    }
    let boundary = media
        .get_param(mime::BOUNDARY)
        .map(|b| b.as_str().to_string())
        .ok_or_else(|| EnvelopeError::Malformed("missing boundary parameter".into()))?;
    if boundary.is_empty() || boundary.len() > 70 {
        return Err(EnvelopeError::Malformed("boundary must be 1..=70 characters".into()));
    }
    Ok(boundary)
}

/// Splits a body on `--boundary` delimiters. Preamble and epilogue are
/// ignored; the close delimiter is required.
pub fn parse_parts(body: &[u8], boundary: &str) -> Result<Vec<Part>, EnvelopeError> {
    let delimiter = format!("--{boundary}");
    let inner = format!("\r\n--{boundary}");
    let malformed = |m: &str| EnvelopeError::Malformed(m.to_string());

    // first delimiter: at the very start, or after a CRLF-terminated preamble
    let mut pos = if body.starts_with(delimiter.as_bytes()) {
        delimiter.len()
    } else {
        memmem::find(body, inner.as_bytes()).ok_or_else(|| malformed("no boundary delimiter found"))? + inner.len()
    };

    let mut parts = Vec::new();
    loop {
        let rest = &body[pos..];
        if rest.starts_with(b"--") {
            return Ok(parts);
        }
        // transport padding, then CRLF
        let line_end = memmem::find(rest, b"\r\n").ok_or_else(|| malformed("unterminated delimiter line"))?;
        if rest[..line_end].iter().any(|b| !matches!(b, b' ' | b'\t')) {
            return Err(malformed("unexpected bytes after boundary"));
        }
        let start = pos + line_end + 2;
        let end = memmem::find(&body[start..], inner.as_bytes())
            .map(|i| start + i)
            .ok_or_else(|| malformed("missing close delimiter"))?;
        parts.push(parse_part(&body[start..end])?);
        pos = end + inner.len();
    }
}

fn parse_part(raw: &[u8]) -> Result<Part, EnvelopeError> {
    let (head, body) = if raw.starts_with(b"\r\n") {
        (&raw[..0], &raw[2..])
    } else {
        let split = memmem::find(raw, b"\r\n\r\n")
            .ok_or_else(|| EnvelopeError::Malformed("part headers not terminated".into()))?;
        (&raw[..split], &raw[split + 4..])
    };
    let head = std::str::from_utf8(head).map_err(|_| EnvelopeError::Malformed("non-UTF-8 part headers".into()))?;
    let mut headers = Vec::new();
    for line in head.split("\r\n").filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| EnvelopeError::Malformed(format!("bad part header {line:?}")))?;
        headers.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    Ok(Part {
        headers,
        body: body.to_vec(),
    })
}

/// Builds an envelope; used by clients and tests.
pub fn encode_parts<'a>(boundary: &str, parts: impl IntoIterator<Item = &'a [u8]>) -> Vec<u8> {
    let mut out = Vec::new();
    for body in parts {
        out.extend_from_slice(format!("--{boundary}\r\nContent-Type: {DICOM_MEDIA_TYPE}\r\n\r\n").as_bytes());
        out.extend_from_slice(body);
        out.extend_from_slice(b"\r\n");
    }
    out.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
    out
}

pub fn content_type_for(boundary: &str) -> String {
    format!("multipart/related; type=\"{DICOM_MEDIA_TYPE}\"; boundary={boundary}")
}
