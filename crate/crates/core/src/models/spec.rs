//! Declarative model descriptions and the architecture builders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{pooled_len, ActivationKind, RnnKind, StateActivation};
use crate::synth::{InputFormat, NUM_CLASSES};

/// Max-norm bound applied to SCRNN weights.
pub const SCRNN_MAX_NORM: f64 = 3.0;
pub const DROPOUT_RATE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    /// Same-padded convolution over time.
    Conv1d { filters: usize, kernel: usize },
    Maxpool1d { size: usize, stride: usize },
    Rnn { cell: RnnKind, units: usize, activation: StateActivation, return_sequences: bool },
    Dense { units: usize },
    Dropout { rate: f64 },
    /// `[T, C] -> [T·C]`.
    Flatten,
    Activation { function: ActivationKind },
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Maxpool1d { .. } => "maxpool1d",
            LayerSpec::Rnn { .. } => "rnn",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Activation { .. } => "activation",
        }
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self, LayerSpec::Conv1d { .. } | LayerSpec::Rnn { .. } | LayerSpec::Dense { .. })
    }
}

/// Per-sample activation shape between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActShape {
    /// `steps × channels`.
    Seq { steps: usize, channels: usize },
    Flat(usize),
}

impl ActShape {
    pub fn size(self) -> usize {
        match self {
            ActShape::Seq { steps, channels } => steps * channels,
            ActShape::Flat(f) => f,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub input_format: InputFormat,
    pub input_len: usize,
    pub input_channels: usize,
    pub classes: usize,
    /// Per-unit L2 bound on incoming weights, if any.
    pub max_norm: Option<f64>,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Output shape of every layer; fails on the first incompatible layer.
    pub fn shapes(&self) -> Result<Vec<ActShape>> {
        if self.input_len == 0 || self.input_channels == 0 {
            return Err(Error::shape("model", "input_len and input_channels must be positive"));
        }
        let mut cur = ActShape::Seq { steps: self.input_len, channels: self.input_channels };
        let mut out = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            let fail = |detail: String| Error::Shape { op: "model", detail: format!("layer {idx} ({}): {detail}", layer.kind_name()) };
            cur = match (*layer, cur) {
                (LayerSpec::Conv1d { filters, kernel }, ActShape::Seq { steps, .. }) => {
                    if filters == 0 || kernel % 2 == 0 {
                        return Err(fail(format!("need filters > 0 and an odd kernel, got {filters}, {kernel}")));
                    }
                    ActShape::Seq { steps, channels: filters }
                }
                (LayerSpec::Maxpool1d { size, stride }, ActShape::Seq { steps, channels }) => {
                    let t = pooled_len(steps, size, stride)
                        .ok_or_else(|| fail(format!("pool {size}/{stride} does not fit {steps} steps")))?;
                    ActShape::Seq { steps: t, channels }
                }
                (LayerSpec::Rnn { units, return_sequences, .. }, ActShape::Seq { steps, .. }) => {
                    if units == 0 {
                        return Err(fail("units must be positive".into()));
                    }
                    if return_sequences {
                        ActShape::Seq { steps, channels: units }
                    } else {
                        ActShape::Flat(units)
                    }
                }
                (LayerSpec::Dense { units }, ActShape::Flat(_)) => {
                    if units == 0 {
                        return Err(fail("units must be positive".into()));
                    }
                    ActShape::Flat(units)
                }
                (LayerSpec::Flatten, s) => ActShape::Flat(s.size()),
                (LayerSpec::Dropout { rate }, s) => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(fail(format!("rate {rate} outside [0, 1)")));
                    }
                    s
                }
                (LayerSpec::Activation { function: ActivationKind::Softmax }, s) if idx + 1 != self.layers.len() => {
                    return Err(fail(format!("softmax is only allowed as the final layer (input {s:?})")));
                }
                (LayerSpec::Activation { .. }, s) => s,
                (_, s) => return Err(fail(format!("cannot accept input shaped {s:?}"))),
            };
            out.push(cur);
        }
        let n = self.layers.len();
        let ends_ok = n >= 2
            && self.layers[n - 1] == LayerSpec::Activation { function: ActivationKind::Softmax }
            && self.layers[n - 2] == LayerSpec::Dense { units: self.classes };
        if !ends_ok {
            return Err(Error::shape("model", format!("final layers must be dense({}) + softmax", self.classes)));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.max_norm {
            if !(l > 0.0) {
                return Err(Error::Config { key: "max_norm".into(), detail: format!("must be > 0, got {l}") });
            }
        }
        self.shapes().map(|_| ())
    }

    /// Weight shapes per trainable tensor, in storage order.
    pub fn param_shapes(&self) -> Result<Vec<(String, Vec<usize>)>> {
        let shapes = self.shapes()?;
        let mut out = Vec::new();
        let mut prev = ActShape::Seq { steps: self.input_len, channels: self.input_channels };
        for (idx, (layer, &shape)) in self.layers.iter().zip(&shapes).enumerate() {
            let in_ch = match prev {
                ActShape::Seq { channels, .. } => channels,
                ActShape::Flat(f) => f,
            };
            match *layer {
                LayerSpec::Conv1d { filters, kernel } => {
                    out.push((format!("layer{idx}.conv.weight"), vec![filters, in_ch, kernel]));
                    out.push((format!("layer{idx}.conv.bias"), vec![filters]));
                }
                LayerSpec::Rnn { cell, units, .. } => {
                    let gh = cell.gates() * units;
                    out.push((format!("layer{idx}.{}.input_weights", cell.name()), vec![gh, in_ch]));
                    out.push((format!("layer{idx}.{}.recurrent_weights", cell.name()), vec![gh, units]));
                    out.push((format!("layer{idx}.{}.biases", cell.name()), vec![gh]));
                }
                LayerSpec::Dense { units } => {
                    out.push((format!("layer{idx}.dense.weight"), vec![units, in_ch]));
                    out.push((format!("layer{idx}.dense.bias"), vec![units]));
                }
                _ => {}
            }
            prev = shape;
        }
        Ok(out)
    }

    pub fn count_params(&self) -> Result<usize> {
        Ok(self.param_shapes()?.iter().map(|(_, s)| s.iter().product::<usize>()).sum())
    }

    /// Time steps entering the first recurrent layer, if there is one.
    pub fn rnn_sequence_length(&self) -> Result<Option<usize>> {
        let shapes = self.shapes()?;
        let mut prev = ActShape::Seq { steps: self.input_len, channels: self.input_channels };
        for (layer, &shape) in self.layers.iter().zip(&shapes) {
            if let (LayerSpec::Rnn { .. }, ActShape::Seq { steps, .. }) = (layer, prev) {
                return Ok(Some(steps));
            }
            prev = shape;
        }
        Ok(None)
    }

    pub fn trainable_layers(&self) -> usize {
        self.layers.iter().filter(|l| l.is_trainable()).count()
    }

    /// The same architecture on frames of a different length.
    pub fn with_input_len(&self, input_len: usize) -> Result<ModelSpec> {
        let spec = ModelSpec { input_len, ..self.clone() };
        spec.validate()?;
        Ok(spec)
    }
}

fn relu() -> LayerSpec {
    LayerSpec::Activation { function: ActivationKind::Relu }
}

fn drop() -> LayerSpec {
    LayerSpec::Dropout { rate: DROPOUT_RATE }
}

fn head(layers: &mut Vec<LayerSpec>) {
    layers.push(LayerSpec::Dense { units: NUM_CLASSES });
    layers.push(LayerSpec::Activation { function: ActivationKind::Softmax });
}

/// Two convolutions (256 and 80 filters, width 3) and two dense layers.
pub fn build_cnn_baseline() -> ModelSpec {
    let mut layers = vec![
        LayerSpec::Conv1d { filters: 256, kernel: 3 },
        relu(),
        drop(),
        LayerSpec::Conv1d { filters: 80, kernel: 3 },
        relu(),
        drop(),
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 256 },
        relu(),
        drop(),
    ];
    head(&mut layers);
    ModelSpec {
        name: "cnn_baseline".into(),
        input_format: InputFormat::Iq,
        input_len: 128,
        input_channels: 2,
        classes: NUM_CLASSES,
        max_norm: None,
        layers,
    }
}

/// Two 128-unit tanh LSTMs over amplitude-phase frames.
pub fn build_lstm_baseline() -> ModelSpec {
    let lstm = |return_sequences| LayerSpec::Rnn {
        cell: RnnKind::Lstm,
        units: 128,
        activation: StateActivation::Tanh,
        return_sequences,
    };
    let mut layers = vec![lstm(true), drop(), lstm(false), drop()];
    head(&mut layers);
    ModelSpec {
        name: "lstm_baseline".into(),
        input_format: InputFormat::AmplitudePhase,
        input_len: 128,
        input_channels: 2,
        classes: NUM_CLASSES,
        max_norm: None,
        layers,
    }
}

/// How the recurrent stack's output reaches the classifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScrnnHead {
    /// Flatten the full output sequence.
    #[default]
    Flatten,
    /// Use only the last time step of the final recurrent layer.
    LastStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScrnnVariant {
    pub conv_depth: usize,
    pub kernel_size: usize,
    pub kernel_count: usize,
    pub rnn_kind: RnnKind,
    pub rnn_depth: usize,
    pub head: ScrnnHead,
}

impl Default for ScrnnVariant {
    fn default() -> Self {
        Self { conv_depth: 2, kernel_size: 5, kernel_count: 128, rnn_kind: RnnKind::Lstm, rnn_depth: 2, head: ScrnnHead::Flatten }
    }
}

impl ScrnnVariant {
    pub fn validate(&self) -> Result<()> {
        let check = |key: &str, v: usize, allowed: &[usize]| {
            if allowed.contains(&v) {
                Ok(())
            } else {
                Err(Error::Config { key: format!("variant.{key}"), detail: format!("{v} not in {allowed:?}") })
            }
        };
        check("conv_depth", self.conv_depth, &[1, 2, 3])?;
        check("kernel_size", self.kernel_size, &[3, 5, 7])?;
        check("kernel_count", self.kernel_count, &[64, 128, 256])?;
        check("rnn_depth", self.rnn_depth, &[1, 2, 3])
    }

    /// Short identifier such as `d2_k5_n128_lstm2`.
    pub fn label(&self) -> String {
        let mut s = format!(
            "d{}_k{}_n{}_{}{}",
            self.conv_depth,
            self.kernel_size,
            self.kernel_count,
            self.rnn_kind.name(),
            self.rnn_depth
        );
        if self.head == ScrnnHead::LastStep {
            s.push_str("_last");
        }
        s
    }
}

/// Convolutions with a 3/3 max-pool after each but the last, dropout, a
/// stack of 128-unit ReLU recurrent layers, then the dense classifier.
pub fn build_scrnn(v: ScrnnVariant) -> Result<ModelSpec> {
    v.validate()?;
    let mut layers = Vec::new();
    for d in 0..v.conv_depth {
        layers.push(LayerSpec::Conv1d { filters: v.kernel_count, kernel: v.kernel_size });
        layers.push(relu());
        if d + 1 < v.conv_depth {
            layers.push(LayerSpec::Maxpool1d { size: 3, stride: 3 });
        }
    }
    layers.push(drop());
    for r in 0..v.rnn_depth {
        let last = r + 1 == v.rnn_depth;
        layers.push(LayerSpec::Rnn {
            cell: v.rnn_kind,
            units: 128,
            activation: StateActivation::Relu,
            return_sequences: !(last && v.head == ScrnnHead::LastStep),
        });
        layers.push(drop());
    }
    if v.head == ScrnnHead::Flatten {
        layers.push(LayerSpec::Flatten);
    }
    head(&mut layers);
    let spec = ModelSpec {
        name: format!("scrnn_{}", v.label()),
        input_format: InputFormat::Iq,
        input_len: 128,
        input_channels: 2,
        classes: NUM_CLASSES,
        max_norm: Some(SCRNN_MAX_NORM),
        layers,
    };
    spec.validate()?;
    Ok(spec)
}

/// Architecture family selector used by the driver and the examples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Cnn,
    Lstm,
    #[default]
    Scrnn,
}

impl Arch {
    pub fn build(self, variant: ScrnnVariant) -> Result<ModelSpec> {
        match self {
            Arch::Cnn => Ok(build_cnn_baseline()),
            Arch::Lstm => Ok(build_lstm_baseline()),
            Arch::Scrnn => build_scrnn(variant),
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" | "cnn_baseline" => Ok(Arch::Cnn),
            "lstm" | "lstm_baseline" => Ok(Arch::Lstm),
            "scrnn" => Ok(Arch::Scrnn),
            other => Err(Error::InvalidArgument(format!("unknown architecture {other:?} (cnn, lstm, scrnn)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnn_baseline_counts() {
        let s = build_cnn_baseline();
        assert_eq!(s.trainable_layers(), 4);
        let closed = 256 * (2 * 3 + 1) + 80 * (256 * 3 + 1) + 256 * (128 * 80 + 1) + 11 * (256 + 1);
        assert_eq!(s.count_params().unwrap(), closed);
        assert_eq!(closed, 2_687_835);
    }

    #[test]
    fn lstm_baseline_layer_sizes() {
        let s = build_lstm_baseline();
        let shapes = s.shapes().unwrap();
        assert_eq!(shapes[0], ActShape::Seq { steps: 128, channels: 128 });
        assert_eq!(shapes[2], ActShape::Flat(128));
        let p = s.param_shapes().unwrap();
        let first: usize = p[..3].iter().map(|(_, s)| s.iter().product::<usize>()).sum();
        assert_eq!(first, 67072);
        assert_eq!(s.input_format, InputFormat::AmplitudePhase);
    }

    #[test]
    fn scrnn_sequence_lengths() {
        for (d, t) in [(1, 128), (2, 42), (3, 14)] {
            let s = build_scrnn(ScrnnVariant { conv_depth: d, ..Default::default() }).unwrap();
            assert_eq!(s.rnn_sequence_length().unwrap(), Some(t));
        }
    }

    #[test]
    fn default_scrnn_structure() {
        let s = build_scrnn(ScrnnVariant::default()).unwrap();
        let count = |k: &str| s.layers.iter().filter(|l| l.kind_name() == k).count();
        assert_eq!((count("conv1d"), count("maxpool1d"), count("rnn"), count("dense")), (2, 1, 2, 1));
        assert!(s.layers.iter().all(|l| match l {
            LayerSpec::Rnn { cell, units, return_sequences, .. } => *cell == RnnKind::Lstm && *units == 128 && *return_sequences,
            _ => true,
        }));
        let dense = 11 * (42 * 128 + 1);
        let lstm = 4 * (128 * 128 + 128 * 128 + 128);
        let conv = 128 * (2 * 5 + 1) + 128 * (128 * 5 + 1);
        assert_eq!(s.count_params().unwrap(), dense + 2 * lstm + conv);
    }

    #[test]
    fn rejects_out_of_grid_variants() {
        assert!(build_scrnn(ScrnnVariant { kernel_size: 4, ..Default::default() }).is_err());
        assert!(build_scrnn(ScrnnVariant { conv_depth: 4, ..Default::default() }).is_err());
        let short = build_scrnn(ScrnnVariant { conv_depth: 3, ..Default::default() }).unwrap();
        assert!(short.with_input_len(8).is_err());
    }

    #[test]
    fn shape_errors_name_the_layer() {
        let mut s = build_lstm_baseline();
        s.layers.insert(0, LayerSpec::Dense { units: 4 });
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("layer 0 (dense)"), "{msg}");
    }

    #[test]
    fn spec_json_round_trip() {
        let s = build_scrnn(ScrnnVariant { head: ScrnnHead::LastStep, rnn_kind: RnnKind::Gru, ..Default::default() }).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&text).unwrap(), s);
        assert!(serde_json::from_str::<LayerSpec>(r#"{"kind":"dense","units":3,"extra":1}"#).is_err());
    }
}
