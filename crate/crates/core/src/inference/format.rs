//! `.cbmf` model files.
//!
//! ```text
//! "CBMF"                 4 bytes
//! format version         u32 LE
//! header length          u32 LE
//! header                 UTF-8 `key=value` lines
//! per parameterized layer, in layer order:
//!     weight count u32 LE, weights f64 LE...
//!     bias count   u32 LE, bias    f64 LE...
//! ```
//!
//! Header keys: `name`, `version`, `input_shape` (H,W,C), `labels`,
//! `label.<i>`, `layers`, `layer.<i>.kind` and the per-kind hyperparameters
//! (`in_channels`, `out_channels`, `kernel` as `h,w`, `stride`, `padding`,
//! `window`, `in_features`, `out_features`).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{InferenceError, LayerSpec, ModelFile, Tensor};

pub const MAGIC: &[u8; 4] = b"CBMF";
pub const FORMAT_VERSION: u32 = 1;

/// Encodes a model. The model is validated first so that every file written
/// also loads.
pub fn save_model(model: &ModelFile) -> Result<Vec<u8>, InferenceError> {
    model.validate()?;
    Ok(encode(model))
}

fn encode(model: &ModelFile) -> Vec<u8> {
    let mut header = String::new();
    let [h, w, c] = model.input_shape;
    let _ = writeln!(header, "name={}", model.name);
    let _ = writeln!(header, "version={}", model.version);
    let _ = writeln!(header, "input_shape={h},{w},{c}");
    let _ = writeln!(header, "labels={}", model.class_labels.len());
    for (i, label) in model.class_labels.iter().enumerate() {
        let _ = writeln!(header, "label.{i}={label}");
    }
    let _ = writeln!(header, "layers={}", model.layers.len());
    for (i, layer) in model.layers.iter().enumerate() {
        let _ = writeln!(header, "layer.{i}.kind={}", layer.kind());
        match layer {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
                ..
            } => {
                let _ = writeln!(header, "layer.{i}.in_channels={in_channels}");
                let _ = writeln!(header, "layer.{i}.out_channels={out_channels}");
                let _ = writeln!(header, "layer.{i}.kernel={kernel_h},{kernel_w}");
                let _ = writeln!(header, "layer.{i}.stride={stride}");
                let _ = writeln!(header, "layer.{i}.padding={padding}");
            }
            LayerSpec::MaxPool2d { window, stride } => {
                let _ = writeln!(header, "layer.{i}.window={window}");
                let _ = writeln!(header, "layer.{i}.stride={stride}");
            }
            LayerSpec::Dense {
                in_features,
                out_features,
                ..
            } => {
                let _ = writeln!(header, "layer.{i}.in_features={in_features}");
                let _ = writeln!(header, "layer.{i}.out_features={out_features}");
            }
            LayerSpec::Relu | LayerSpec::Flatten | LayerSpec::GlobalAvgPool | LayerSpec::Softmax => {}
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for (weights, bias) in model.layers.iter().filter_map(LayerSpec::parameters) {
        for block in [weights, bias] {
            out.extend_from_slice(&(block.len() as u32).to_le_bytes());
            for v in block.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// Decodes and validates a model.
pub fn load_model(bytes: &[u8]) -> Result<ModelFile, InferenceError> {
    let mut cursor = Cursor { bytes, pos: 0 };
    if cursor.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(InferenceError::schema(None, "magic", "not a CBMF model file"));
    }
    let version = cursor.u32("format_version")?;
    if version != FORMAT_VERSION {
        return Err(InferenceError::schema(
            None,
            "format_version",
            format!("unsupported version {version}"),
        ));
    }
    let header_len = cursor.u32("header")? as usize;
    let header_bytes = cursor
        .take(header_len)
        .map_err(|_| InferenceError::schema(None, "header", "truncated header"))?;
    let header_text = std::str::from_utf8(header_bytes)
        .map_err(|_| InferenceError::schema(None, "header", "header is not UTF-8"))?;
    let header = Header::parse(header_text)?;

    let name = header.text(None, "name")?;
    let version = header.text(None, "version")?;
    let input_shape = parse_list::<3>(header.text(None, "input_shape")?)
        .ok_or_else(|| InferenceError::schema(None, "input_shape", "expected H,W,C"))?;
    let label_count: usize = header.number(None, "labels")?;
    let class_labels = (0..label_count)
        .map(|i| header.text(None, &format!("label.{i}")).map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    let layer_count: usize = header.number(None, "layers")?;

    let mut layers = Vec::with_capacity(layer_count);
    for i in 0..layer_count {
        let at = Some(i);
        let key = |field: &str| format!("layer.{i}.{field}");
        let num = |field: &str| header.number(at, &key(field));
        let layer = match header.text(at, &key("kind"))? {
            "conv2d" => {
                let in_channels = num("in_channels")?;
                let out_channels = num("out_channels")?;
                let [kernel_h, kernel_w] = parse_list::<2>(header.text(at, &key("kernel"))?)
                    .ok_or_else(|| InferenceError::schema(at, "kernel", "expected h,w"))?;
                let stride = num("stride")?;
                let padding = num("padding")?;
                let weights = cursor.block(i, "weights", out_channels * in_channels * kernel_h * kernel_w)?;
                let bias = cursor.block(i, "bias", out_channels)?;
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_h,
                    kernel_w,
                    stride,
                    padding,
                    weights: tensor(i, vec![out_channels, in_channels, kernel_h, kernel_w], weights)?,
                    bias: tensor(i, vec![out_channels], bias)?,
                }
            }
            "maxpool2d" => LayerSpec::MaxPool2d {
                window: num("window")?,
                stride: num("stride")?,
            },
            "dense" => {
                let in_features = num("in_features")?;
                let out_features = num("out_features")?;
                let weights = cursor.block(i, "weights", out_features * in_features)?;
                let bias = cursor.block(i, "bias", out_features)?;
                LayerSpec::Dense {
                    in_features,
                    out_features,
                    weights: tensor(i, vec![out_features, in_features], weights)?,
                    bias: tensor(i, vec![out_features], bias)?,
                }
            }
            "relu" => LayerSpec::Relu,
            "flatten" => LayerSpec::Flatten,
            "globalavgpool" => LayerSpec::GlobalAvgPool,
            "softmax" => LayerSpec::Softmax,
            other => return Err(InferenceError::schema(at, "kind", format!("unknown layer kind {other:?}"))),
        };
        layers.push(layer);
    }
    if cursor.pos != bytes.len() {
        return Err(InferenceError::schema(
            None,
            "weights",
            format!("{} trailing bytes after last weight block", bytes.len() - cursor.pos),
        ));
    }
    header.reject_unused()?;

    let model = ModelFile {
        name: name.to_string(),
        version: version.to_string(),
        input_shape,
        class_labels,
        layers,
    };
    model.validate()?;
    Ok(model)
}

fn tensor(layer: usize, shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor, InferenceError> {
    Tensor::new(shape, data).map_err(|e| InferenceError::schema(Some(layer), "weights", e.to_string()))
}

fn parse_list<const N: usize>(text: &str) -> Option<[usize; N]> {
    let values: Vec<usize> = text.split(',').map(|s| s.trim().parse().ok()).collect::<Option<_>>()?;
    values.try_into().ok()
}

struct Header<'a> {
    entries: BTreeMap<&'a str, &'a str>,
    used: std::cell::RefCell<std::collections::BTreeSet<&'a str>>,
}

impl<'a> Header<'a> {
    fn parse(text: &'a str) -> Result<Self, InferenceError> {
        let mut entries = BTreeMap::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| InferenceError::schema(None, "header", format!("line without '=': {line:?}")))?;
            if entries.insert(key, value).is_some() {
                return Err(InferenceError::schema(None, key, "duplicate key"));
            }
        }
        Ok(Header {
            entries,
            used: Default::default(),
        })
    }

    fn text(&self, layer: Option<usize>, key: &str) -> Result<&'a str, InferenceError> {
        let (k, v) = self
            .entries
            .get_key_value(key)
            .ok_or_else(|| InferenceError::schema(layer, field_name(key), "missing"))?;
        self.used.borrow_mut().insert(k);
        Ok(v)
    }

    fn number(&self, layer: Option<usize>, key: &str) -> Result<usize, InferenceError> {
        let text = self.text(layer, key)?;
        text.trim()
            .parse()
            .map_err(|_| InferenceError::schema(layer, field_name(key), format!("not a count: {text:?}")))
    }

    fn reject_unused(&self) -> Result<(), InferenceError> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(InferenceError::schema(None, k, "unknown header key")),
            None => Ok(()),
        }
    }
}

/// `layer.3.stride` -> `stride`
fn field_name(key: &str) -> &str {
    key.rsplit('.').next().unwrap_or(key)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ()> {
        let end = self.pos.checked_add(n).ok_or(())?;
        let slice = self.bytes.get(self.pos..end).ok_or(())?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, field: &str) -> Result<u32, InferenceError> {
        let b = self
            .take(4)
            .map_err(|_| InferenceError::schema(None, field, "truncated"))?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn block(&mut self, layer: usize, field: &str, expected: usize) -> Result<Vec<f64>, InferenceError> {
        let count = self
            .take(4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
            .map_err(|_| InferenceError::schema(Some(layer), field, "truncated block header"))?;
        if count != expected {
            return Err(InferenceError::schema(
                Some(layer),
                field,
                format!("expected {expected} values, file holds {count}"),
            ));
        }
        let raw = self
            .take(count * 8)
            .map_err(|_| InferenceError::schema(Some(layer), field, "truncated weight block"))?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}
