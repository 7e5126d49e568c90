use serde::{Deserialize, Serialize};

use super::{ops, InferenceError, Tensor};

/// One layer of a model, with its hyperparameters and weights.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        padding: usize,
        /// `[out, in, kh, kw]`
        weights: Tensor,
        /// `[out]`
        bias: Tensor,
    },
    MaxPool2d {
        window: usize,
        stride: usize,
    },
    Relu,
    Flatten,
    Dense {
        in_features: usize,
        out_features: usize,
        /// `[out, in]`
        weights: Tensor,
        /// `[out]`
        bias: Tensor,
    },
    GlobalAvgPool,
    Softmax,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::MaxPool2d { .. } => "maxpool2d",
            LayerSpec::Relu => "relu",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::GlobalAvgPool => "globalavgpool",
            LayerSpec::Softmax => "softmax",
        }
    }

    /// Weight and bias tensors, for layers that carry parameters.
    pub fn parameters(&self) -> Option<(&Tensor, &Tensor)> {
        match self {
            LayerSpec::Conv2d { weights, bias, .. } | LayerSpec::Dense { weights, bias, .. } => {
                Some((weights, bias))
            }
            _ => None,
        }
    }

    /// Builds a dense layer, checking weight shapes against the declared sizes.
    pub fn dense(in_features: usize, out_features: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self, InferenceError> {
        Ok(LayerSpec::Dense {
            in_features,
            out_features,
            weights: Tensor::new(vec![out_features, in_features], weights)?,
            bias: Tensor::new(vec![out_features], bias)?,
        })
    }

    pub fn conv2d(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, InferenceError> {
        Ok(LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel_h: kernel.0,
            kernel_w: kernel.1,
            stride,
            padding,
            weights: Tensor::new(vec![out_channels, in_channels, kernel.0, kernel.1], weights)?,
            bias: Tensor::new(vec![out_channels], bias)?,
        })
    }

    fn apply(&self, x: &Tensor) -> Result<Tensor, InferenceError> {
        match self {
            LayerSpec::Conv2d {
                weights,
                bias,
                stride,
                padding,
                ..
            } => ops::conv2d(x, weights, bias, *stride, *padding),
            LayerSpec::MaxPool2d { window, stride } => ops::maxpool2d(x, *window, *stride),
            LayerSpec::Relu => Ok(ops::relu(x)),
            LayerSpec::Flatten => Ok(ops::flatten(x)),
            LayerSpec::Dense { weights, bias, .. } => ops::dense(x, weights, bias),
            LayerSpec::GlobalAvgPool => ops::global_avg_pool(x),
            LayerSpec::Softmax => ops::softmax(x),
        }
    }

    /// Output shape for a given input shape, or the offending field.
    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, (&'static str, String)> {
        let chw = || match input {
            &[c, h, w] => Ok((c, h, w)),
            other => Err(("input", format!("expects [C,H,W], got {other:?}"))),
        };
        match self {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                padding,
                weights,
                bias,
            } => {
                let (c, h, w) = chw()?;
                if *stride == 0 {
                    return Err(("stride", "must be positive".into()));
                }
                if *kernel_h == 0 || *kernel_w == 0 || *out_channels == 0 {
                    return Err(("kernel", "dimensions must be positive".into()));
                }
                if c != *in_channels {
                    return Err(("in_channels", format!("declared {in_channels}, input has {c}")));
                }
                let expected = out_channels * in_channels * kernel_h * kernel_w;
                if weights.len() != expected || weights.shape() != [*out_channels, *in_channels, *kernel_h, *kernel_w] {
                    return Err((
                        "weights",
                        format!("expected {expected} values (O*C*kh*kw), found {}", weights.len()),
                    ));
                }
                if bias.shape() != [*out_channels] {
                    return Err(("bias", format!("expected {out_channels} values, found {}", bias.len())));
                }
                if h + 2 * padding < *kernel_h || w + 2 * padding < *kernel_w {
                    return Err(("kernel", format!("{kernel_h}x{kernel_w} does not fit {h}x{w} with padding {padding}")));
                }
                Ok(vec![
                    *out_channels,
                    (h + 2 * padding - kernel_h) / stride + 1,
                    (w + 2 * padding - kernel_w) / stride + 1,
                ])
            }
            LayerSpec::MaxPool2d { window, stride } => {
                let (c, h, w) = chw()?;
                if *window == 0 || *stride == 0 {
                    return Err(("window", "window and stride must be positive".into()));
                }
                if h < *window || w < *window {
                    return Err(("window", format!("{window} exceeds {h}x{w}")));
                }
                Ok(vec![c, (h - window) / stride + 1, (w - window) / stride + 1])
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::GlobalAvgPool => chw().map(|(c, _, _)| vec![c]),
            LayerSpec::Dense {
                in_features,
                out_features,
                weights,
                bias,
            } => {
                if input != [*in_features] {
                    return Err(("in_features", format!("declared {in_features}, input is {input:?}")));
                }
                if *out_features == 0 {
                    return Err(("out_features", "must be positive".into()));
                }
                if weights.shape() != [*out_features, *in_features] {
                    return Err((
                        "weights",
                        format!("expected {} values, found {}", out_features * in_features, weights.len()),
                    ));
                }
                if bias.shape() != [*out_features] {
                    return Err(("bias", format!("expected {out_features} values, found {}", bias.len())));
                }
                Ok(vec![*out_features])
            }
            LayerSpec::Softmax => match input {
                &[_] => Ok(input.to_vec()),
                other => Err(("input", format!("softmax expects a vector, got {other:?}"))),
            },
        }
    }
}

/// A classification model: metadata plus an ordered layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub name: String,
    pub version: String,
    /// `[H, W, C]`
    pub input_shape: [usize; 3],
    pub class_labels: Vec<String>,
    pub layers: Vec<LayerSpec>,
}

impl ModelFile {
    /// `name@version`, recorded on every prediction.
    pub fn model_version(&self) -> String {
        format!("{}@{}", self.name, self.version)
    }

    /// Channel-first shape the forward pass expects.
    pub fn input_chw(&self) -> [usize; 3] {
        let [h, w, c] = self.input_shape;
        [c, h, w]
    }

    /// Propagates shapes through every layer and checks the classifier
    /// contract: terminal softmax, output width equal to the label count.
    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.input_shape.contains(&0) {
            return Err(InferenceError::schema(None, "input_shape", "dimensions must be positive"));
        }
        if self.class_labels.is_empty() {
            return Err(InferenceError::schema(None, "labels", "at least one class label required"));
        }
        let fields = [("name", &self.name), ("version", &self.version)];
        for (field, text) in fields.into_iter().chain(self.class_labels.iter().map(|l| ("labels", l))) {
            if text.is_empty() || text.contains(['\n', '\r']) {
                return Err(InferenceError::schema(None, field, format!("invalid value {text:?}")));
            }
        }
        let mut shape = self.input_chw().to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer
                .output_shape(&shape)
                .map_err(|(field, detail)| InferenceError::schema(Some(i), field, detail))?;
        }
        match self.layers.last() {
            Some(LayerSpec::Softmax) => {}
            _ => {
                return Err(InferenceError::schema(
                    self.layers.len().checked_sub(1),
                    "kind",
                    "classification models must end with softmax",
                ))
            }
        }
        if let Some((i, LayerSpec::Dense { out_features, .. })) = self
            .layers
            .iter()
            .enumerate()
            .rev()
            .find(|(_, l)| l.parameters().is_some())
        {
            if *out_features != self.class_labels.len() {
                return Err(InferenceError::schema(
                    Some(i),
                    "out_features",
                    format!("{out_features} outputs for {} labels", self.class_labels.len()),
                ));
            }
        }
        if shape != [self.class_labels.len()] {
            return Err(InferenceError::schema(
                None,
                "labels",
                format!("model emits {shape:?} for {} labels", self.class_labels.len()),
            ));
        }
        Ok(())
    }
}

/// Per-class probabilities from one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
    pub argmax_label: String,
    pub model_version: String,
}

impl Prediction {
    /// Index of the highest probability; the lowest index wins ties.
    pub fn argmax(probabilities: &[f64]) -> usize {
        let mut best = 0;
        for (i, p) in probabilities.iter().enumerate().skip(1) {
            if *p > probabilities[best] {
                best = i;
            }
        }
        best
    }

    pub fn probability_of(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.probabilities[i])
    }
}

/// Runs every layer in order on a `[C, H, W]` input.
pub fn forward(model: &ModelFile, input: &Tensor) -> Result<Prediction, InferenceError> {
    let expected = model.input_chw();
    if input.shape() != expected {
        return Err(InferenceError::shape(
            Some(0),
            format!("model expects input {expected:?} (C,H,W), got {:?}", input.shape()),
        ));
    }
    let mut x = input.clone();
    for (i, layer) in model.layers.iter().enumerate() {
        x = layer.apply(&x).map_err(|e| e.at_layer(i))?;
    }
    if x.shape() != [model.class_labels.len()] {
        return Err(InferenceError::shape(
            Some(model.layers.len().saturating_sub(1)),
            format!("output {:?} does not match {} labels", x.shape(), model.class_labels.len()),
        ));
    }
    let probabilities = x.into_data();
    if probabilities.iter().any(|p| !p.is_finite()) {
        return Err(InferenceError::NonFinite);
    }
    let best = Prediction::argmax(&probabilities);
    Ok(Prediction {
        labels: model.class_labels.clone(),
        argmax_label: model.class_labels[best].clone(),
        probabilities,
        model_version: model.model_version(),
    })
}
