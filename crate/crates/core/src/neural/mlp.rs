use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qpc::SoftAssignment;

/// Output pre-activations are clamped to this magnitude so the sigmoid stays
/// strictly inside (0, 1) in double precision.
pub const LOGIT_CLAMP: f64 = 36.0;

static NEXT_GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    NEXT_GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// One affine layer; `w` is row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer {
            n_in,
            n_out,
            w: vec![0.0; n_in * n_out],
            b: vec![0.0; n_out],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.w
            .chunks_exact(self.n_in)
            .zip(&self.b)
            .map(|(row, b)| row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
}

/// Feed-forward network: affine + ReLU hidden layers (with inverted dropout
/// in training mode) and a sigmoid output layer.
#[derive(Debug, Clone)]
pub struct MlpModel {
    dims: Vec<usize>,
    layers: Vec<Layer>,
    dropout: f64,
    pub meta: ModelMeta,
    generation: u64,
}

impl PartialEq for MlpModel {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.layers == other.layers && self.dropout == other.dropout
    }
}

/// Values kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    /// Input to each layer (the network input first).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
    /// Dropout scale per hidden unit: 0 or `1 / (1 - p)`; empty when off.
    masks: Vec<Vec<f64>>,
    output: Vec<f64>,
}

/// Parameter-shaped container used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
pub fn init_model(dims: &[usize], dropout: f64, seed: u64) -> Result<MlpModel> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidSpec(format!(
            "layer dims {dims:?} need at least an input and an output size, all positive"
        )));
    }
    if !(0.0..1.0).contains(&dropout) {
        return Err(Error::InvalidSpec(format!("dropout rate {dropout} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .map(|d| {
            let bound = 1.0 / (d[0] as f64).sqrt();
            let mut layer = Layer::zeros(d[0], d[1]);
            for p in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                *p = rng.gen_range(-bound..bound);
            }
            layer
        })
        .collect();
    Ok(MlpModel {
        dims: dims.to_vec(),
        layers,
        dropout,
        meta: ModelMeta {
            seed: Some(seed),
            ..ModelMeta::default()
        },
        generation: next_generation(),
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl MlpModel {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_inputs(&self) -> usize {
        self.dims[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.dims.last().expect("at least two dims")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                flat.len()
            )));
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            for p in l.w.iter_mut().chain(l.b.iter_mut()) {
                *p = *it.next().expect("length checked");
            }
        }
        self.touch();
        Ok(())
    }

    /// Invalidate outstanding forward caches.
    fn touch(&mut self) {
        self.generation = next_generation();
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        self.touch();
        &mut self.layers
    }

    /// Set every weight and bias to zero.
    pub fn zero_params(&mut self) {
        for l in self.layers_mut() {
            l.w.fill(0.0);
            l.b.fill(0.0);
        }
    }

    pub fn forward<R: Rng>(&self, input: &[u8], mode: Mode, rng: &mut R) -> Result<(SoftAssignment, ForwardCache)> {
        let dropout_rng: Option<&mut dyn RngCore> = match mode {
            Mode::Train if self.dropout > 0.0 => Some(rng),
            _ => None,
        };
        self.forward_inner(input, dropout_rng)
    }

    /// Evaluation-mode output.
    pub fn predict(&self, input: &[u8]) -> Result<SoftAssignment> {
        Ok(self.forward_inner(input, None)?.0)
    }

    fn forward_inner(&self, input: &[u8], mut rng: Option<&mut dyn RngCore>) -> Result<(SoftAssignment, ForwardCache)> {
        if input.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                got: input.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut x: Vec<f64> = input.iter().map(|&b| f64::from(b)).collect();
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(last);
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&x);
            inputs.push(std::mem::take(&mut x));
            if i == last {
                x = z.iter().map(|&z| sigmoid(z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP))).collect();
            } else {
                x = z.iter().map(|&z| z.max(0.0)).collect();
                let mask = match rng.as_deref_mut() {
                    Some(r) => {
                        let keep = 1.0 / (1.0 - self.dropout);
                        (0..x.len())
                            .map(|_| if r.gen::<f64>() < self.dropout { 0.0 } else { keep })
                            .collect()
                    }
                    None => Vec::new(),
                };
                if !mask.is_empty() {
                    x.iter_mut().zip(&mask).for_each(|(a, m)| *a *= m);
                }
                masks.push(mask);
            }
            pre.push(z);
        }
        let q = SoftAssignment::new(x.clone())?;
        Ok((
            q,
            ForwardCache {
                generation: self.generation,
                inputs,
                pre,
                masks,
                output: x,
            },
        ))
    }

    /// Parameter gradients of a loss given its gradient with respect to the
    /// network outputs.
    pub fn backward(&self, cache: &ForwardCache, dl_dq: &[f64]) -> Result<Gradients> {
        if cache.generation != self.generation {
            return Err(Error::StaleCache);
        }
        if dl_dq.len() != self.n_outputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_outputs(),
                got: dl_dq.len(),
            });
        }
        let last = self.layers.len() - 1;
        // through the (clamped) sigmoid
        let mut delta: Vec<f64> = dl_dq
            .iter()
            .zip(&cache.output)
            .zip(&cache.pre[last])
            .map(|((g, s), z)| if z.abs() > LOGIT_CLAMP { 0.0 } else { g * s * (1.0 - s) })
            .collect();
        let mut grads = Gradients::zeros_like(self);
        for i in (0..=last).rev() {
            let layer = &self.layers[i];
            let x = &cache.inputs[i];
            let g = &mut grads.layers[i];
            for (o, d) in delta.iter().enumerate() {
                g.b[o] = *d;
                let row = &mut g.w[o * layer.n_in..(o + 1) * layer.n_in];
                row.iter_mut().zip(x).for_each(|(w, x)| *w = d * x);
            }
            if i == 0 {
                break;
            }
            let mut below = vec![0.0; layer.n_in];
            for (row, d) in layer.w.chunks_exact(layer.n_in).zip(&delta) {
                below.iter_mut().zip(row).for_each(|(b, w)| *b += d * w);
            }
            let mask = &cache.masks[i - 1];
            for (k, b) in below.iter_mut().enumerate() {
                if cache.pre[i - 1][k] <= 0.0 {
                    *b = 0.0;
                } else if !mask.is_empty() {
                    *b *= mask[k];
                }
            }
            delta = below;
        }
        Ok(grads)
    }

    pub fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            dims: self.dims.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDoc {
                    w: l.w.chunks_exact(l.n_in).map(<[f64]>::to_vec).collect(),
                    b: l.b.clone(),
                })
                .collect(),
            dropout: self.dropout,
            meta: self.meta.clone(),
        }
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        let mut model = init_model(&doc.dims, doc.dropout, 0)?;
        if doc.layers.len() != model.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} layers for dims {:?}",
                doc.layers.len(),
                doc.dims
            )));
        }
        for (l, d) in model.layers.iter_mut().zip(&doc.layers) {
            if d.b.len() != l.n_out || d.w.len() != l.n_out || d.w.iter().any(|r| r.len() != l.n_in) {
                return Err(Error::ShapeMismatch(format!("layer {}x{} has the wrong shape", l.n_out, l.n_in)));
            }
            l.w = d.w.concat();
            l.b = d.b.clone();
        }
        if model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidSpec("model parameters must be finite".into()));
        }
        model.meta = doc.meta.clone();
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerDoc {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub dims: Vec<usize>,
    pub layers: Vec<LayerDoc>,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default)]
    pub meta: ModelMeta,
}

impl Gradients {
    pub fn zeros_like(m: &MlpModel) -> Self {
        Gradients {
            layers: m.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b))
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values().copied().collect()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        self.values_mut().zip(other.values()).for_each(|(a, b)| *a += b);
    }

    pub fn scale(&mut self, k: f64) {
        self.values_mut().for_each(|a| *a *= k);
    }

    pub fn norm(&self) -> f64 {
        self.values().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn same_shape(&self, m: &MlpModel) -> bool {
        self.layers.len() == m.layers.len()
            && self
                .layers
                .iter()
                .zip(&m.layers)
                .all(|(g, l)| g.n_in == l.n_in && g.n_out == l.n_out && g.w.len() == l.w.len())
    }
}
