//! Small fully connected networks with exact reverse-mode gradients.
//!
//! Parameters live in one flat `f64` vector. Each affine layer stores its
//! weight matrix row-major (`fan_out` rows of `fan_in` entries) followed by
//! its bias. Hidden layers use `tanh`; the final affine output is split into
//! named heads, each with its own output transform.

use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::stochastics::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTransform {
    Identity,
    /// `ln(1 + e^z) + 1`, strictly greater than one.
    SoftplusPlusOne,
}

impl OutputTransform {
    fn apply(self, z: f64) -> f64 {
        match self {
            OutputTransform::Identity => z,
            OutputTransform::SoftplusPlusOne => softplus(z) + 1.0,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            OutputTransform::Identity => 1.0,
            OutputTransform::SoftplusPlusOne => sigmoid(z),
        }
    }
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub name: String,
    pub size: usize,
    pub transform: OutputTransform,
}

impl HeadSpec {
    pub fn new(name: impl Into<String>, size: usize, transform: OutputTransform) -> Self {
        Self {
            name: name.into(),
            size,
            transform,
        }
    }
}

/// Shape of one affine layer inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSlice {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Range<usize>,
    pub bias: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    heads: Vec<HeadSpec>,
}

impl MlpSpec {
    /// `layer_sizes` lists input, hidden and output widths. A spec with two
    /// entries is a single affine map.
    pub fn new(layer_sizes: Vec<usize>, heads: Vec<HeadSpec>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidConfig(
                "an MLP needs at least input and output sizes".into(),
            ));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig("layer sizes must be positive".into()));
        }
        let head_total: usize = heads.iter().map(|h| h.size).sum();
        if heads.is_empty() || head_total != *layer_sizes.last().unwrap() {
            return Err(Error::InvalidConfig(format!(
                "head sizes sum to {head_total}, output layer has {}",
                layer_sizes.last().unwrap()
            )));
        }
        Ok(Self {
            layer_sizes,
            hidden_activation: Activation::Tanh,
            heads,
        })
    }

    /// `input → hidden × depth → heads` with `tanh` hidden units.
    pub fn with_hidden(input: usize, hidden: &[usize], heads: Vec<HeadSpec>) -> Result<Self> {
        let out: usize = heads.iter().map(|h| h.size).sum();
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(out);
        Self::new(sizes, heads)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn heads(&self) -> &[HeadSpec] {
        &self.heads
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    pub fn layout(&self) -> Vec<LayerSlice> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let weights = offset..offset + fan_in * fan_out;
                let bias = weights.end..weights.end + fan_out;
                offset = bias.end;
                LayerSlice {
                    fan_in,
                    fan_out,
                    weights,
                    bias,
                }
            })
            .collect()
    }

    /// Output range of the named head within the flat output vector.
    pub fn head_range(&self, name: &str) -> Option<Range<usize>> {
        let mut start = 0;
        for h in &self.heads {
            if h.name == name {
                return Some(start..start + h.size);
            }
            start += h.size;
        }
        None
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params(&self, rng: &mut Rng) -> ParamVector {
        let mut values = vec![0.0; self.num_params()];
        for layer in self.layout() {
            let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            for w in &mut values[layer.weights] {
                *w = rng.uniform_range(-limit, limit);
            }
        }
        ParamVector::new(values)
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(params, input)?.output)
    }

    /// Forward pass that keeps every activation for a later backward pass.
    pub fn forward_trace(&self, params: &[f64], input: &[f64]) -> Result<Trace> {
        check_dim(self.num_params(), params.len())?;
        check_dim(self.input_dim(), input.len())?;
        let layout = self.layout();
        let mut activations = Vec::with_capacity(layout.len());
        activations.push(input.to_vec());
        let mut pre_output = Vec::new();
        for (i, layer) in layout.iter().enumerate() {
            let x = &activations[i];
            let w = &params[layer.weights.clone()];
            let b = &params[layer.bias.clone()];
            let mut z: Vec<f64> = b.to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &w[o * layer.fan_in..(o + 1) * layer.fan_in];
                *zo += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
            if i + 1 < layout.len() {
                match self.hidden_activation {
                    Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
                }
                activations.push(z);
            } else {
                pre_output = z;
            }
        }
        let mut output = pre_output.clone();
        let mut start = 0;
        for h in &self.heads {
            for v in &mut output[start..start + h.size] {
                *v = h.transform.apply(*v);
            }
            start += h.size;
        }
        Ok(Trace {
            activations,
            pre_output,
            output,
        })
    }

    /// Adds `scale · ∂(upstream · output)/∂params` into `grad`.
    pub fn backward_into(
        &self,
        params: &[f64],
        trace: &Trace,
        upstream: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<()> {
        check_dim(self.output_dim(), upstream.len())?;
        check_dim(self.num_params(), params.len())?;
        check_dim(self.num_params(), grad.len())?;
        let layout = self.layout();
        let mut delta: Vec<f64> = Vec::with_capacity(self.output_dim());
        let mut start = 0;
        for h in &self.heads {
            for k in start..start + h.size {
                delta.push(scale * upstream[k] * h.transform.derivative(trace.pre_output[k]));
            }
            start += h.size;
        }
        for (i, layer) in layout.iter().enumerate().rev() {
            let x = &trace.activations[i];
            {
                let gw = &mut grad[layer.weights.clone()];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let row = &mut gw[o * layer.fan_in..(o + 1) * layer.fan_in];
                    row.iter_mut().zip(x).for_each(|(g, xi)| *g += d * xi);
                }
            }
            grad[layer.bias.clone()]
                .iter_mut()
                .zip(&delta)
                .for_each(|(g, d)| *g += d);
            if i == 0 {
                break;
            }
            let w = &params[layer.weights.clone()];
            let mut prev = vec![0.0; layer.fan_in];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &w[o * layer.fan_in..(o + 1) * layer.fan_in];
                prev.iter_mut().zip(row).for_each(|(p, wi)| *p += d * wi);
            }
            // x = tanh(z) for hidden layers, so tanh'(z) = 1 − x².
            for (p, xi) in prev.iter_mut().zip(x) {
                *p *= 1.0 - xi * xi;
            }
            delta = prev;
        }
        Ok(())
    }
}

/// Activations recorded by [`MlpSpec::forward_trace`].
#[derive(Debug, Clone)]
pub struct Trace {
    activations: Vec<Vec<f64>>,
    pre_output: Vec<f64>,
    output: Vec<f64>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

pub fn mlp_forward(spec: &MlpSpec, params: &ParamVector, input: &[f64]) -> Result<Vec<f64>> {
    spec.forward(params.as_slice(), input)
}

/// Gradient of `upstream · output` with respect to the parameters.
pub fn mlp_backward(
    spec: &MlpSpec,
    params: &ParamVector,
    input: &[f64],
    upstream: &[f64],
) -> Result<ParamVector> {
    let trace = spec.forward_trace(params.as_slice(), input)?;
    let mut grad = vec![0.0; spec.num_params()];
    spec.backward_into(params.as_slice(), &trace, upstream, 1.0, &mut grad)?;
    Ok(ParamVector::new(grad))
}

/// Weights and bias of one layer, unpacked from a [`ParamVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_layers(&self, spec: &MlpSpec) -> Result<Vec<LayerParams>> {
        check_dim(spec.num_params(), self.len())?;
        Ok(spec
            .layout()
            .into_iter()
            .map(|l| LayerParams {
                weights: self.values[l.weights]
                    .chunks(l.fan_in)
                    .map(<[f64]>::to_vec)
                    .collect(),
                bias: self.values[l.bias].to_vec(),
            })
            .collect())
    }

    pub fn from_layers(spec: &MlpSpec, layers: &[LayerParams]) -> Result<Self> {
        let layout = spec.layout();
        check_dim(layout.len(), layers.len())?;
        let mut values = Vec::with_capacity(spec.num_params());
        for (slice, layer) in layout.iter().zip(layers) {
            check_dim(slice.fan_out, layer.weights.len())?;
            for row in &layer.weights {
                check_dim(slice.fan_in, row.len())?;
                values.extend_from_slice(row);
            }
            check_dim(slice.fan_out, layer.bias.len())?;
            values.extend_from_slice(&layer.bias);
        }
        Ok(Self::new(values))
    }

    /// Flat little-endian `f64` array.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 8 != 0 {
            return Err(Error::Domain(format!(
                "parameter file length {} is not a multiple of 8",
                bytes.len()
            )));
        }
        Ok(Self::new(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ))
    }
}

/// Sidecar written next to a raw parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<M> {
    pub spec: MlpSpec,
    pub num_values: usize,
    pub metadata: M,
}

/// Writes `<stem>.bin` (raw parameters) and `<stem>.json` (spec and metadata).
pub fn save_checkpoint<M: Serialize>(
    stem: &Path,
    spec: &MlpSpec,
    params: &ParamVector,
    metadata: M,
) -> Result<()> {
    fs::write(stem.with_extension("bin"), params.to_le_bytes())?;
    let sidecar = Checkpoint {
        spec: spec.clone(),
        num_values: params.len(),
        metadata,
    };
    fs::write(
        stem.with_extension("json"),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}

pub fn load_checkpoint<M: for<'de> Deserialize<'de>>(
    stem: &Path,
) -> Result<(Checkpoint<M>, ParamVector)> {
    let sidecar: Checkpoint<M> = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    let params = ParamVector::from_le_bytes(&fs::read(stem.with_extension("bin"))?)?;
    check_dim(sidecar.num_values, params.len())?;
    Ok((sidecar, params))
}
