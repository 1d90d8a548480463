use rand::Rng;

use crate::error::{Error, Result};

/// Fully connected layer, weights stored row-major as `[output][input]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    /// `biases + weights · x`, accumulated in input order.
    #[inline]
    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in self.weights.chunks_exact(self.inputs).enumerate() {
            let mut acc = self.biases[o];
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            out[o] = acc;
        }
    }
}

/// Regressor from local features to a non-negative residual: dense layers
/// with rectifiers after every layer, including the output.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualModel {
    layers: Vec<Dense>,
}

/// Per-layer pre-activations and activations of one forward pass.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub(crate) pre: Vec<Vec<f64>>,
    pub(crate) post: Vec<Vec<f64>>,
}

impl ResidualModel {
    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        assert_eq!(*sizes.last().unwrap(), 1, "the model has a single output");
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let mut layer = Dense::zeros(pair[0], pair[1]);
                let limit = (6.0 / (pair[0] + pair[1]) as f64).sqrt();
                for w in &mut layer.weights {
                    *w = rng.gen_range(-limit..limit);
                }
                layer
            })
            .collect();
        ResidualModel { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ModelFormat("no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::ModelFormat("layer sizes do not chain".into()));
            }
        }
        if layers.last().unwrap().outputs != 1 {
            return Err(Error::ModelFormat("last layer must have one output".into()));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::ModelFormat("parameter count mismatch".into()));
            }
        }
        Ok(ResidualModel { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Predicted residual, always `≥ 0`.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                actual: features.len(),
            });
        }
        Ok(self.forward(features))
    }

    pub(crate) fn forward(&self, x: &[f64]) -> f64 {
        let mut first = vec![0.0; self.layers[0].outputs];
        self.layers[0].affine(x, &mut first);
        self.forward_from_first(first)
    }

    /// Continues a forward pass from the first layer's pre-activation.
    pub(crate) fn forward_from_first(&self, mut z: Vec<f64>) -> f64 {
        relu(&mut z);
        let mut a = z;
        for layer in &self.layers[1..] {
            let mut next = vec![0.0; layer.outputs];
            layer.affine(&a, &mut next);
            relu(&mut next);
            a = next;
        }
        a[0]
    }

    /// First-layer pre-activation restricted to inputs `0..split`, bias
    /// included. Adding `tail_first_layer` for the rest reproduces
    /// `forward` bit for bit.
    pub(crate) fn head_first_layer(&self, x_head: &[f64]) -> Vec<f64> {
        let l = &self.layers[0];
        l.weights
            .chunks_exact(l.inputs)
            .zip(&l.biases)
            .map(|(row, &b)| {
                let mut acc = b;
                for (w, v) in row.iter().zip(x_head) {
                    acc += w * v;
                }
                acc
            })
            .collect()
    }

    pub(crate) fn tail_first_layer(&self, head: &[f64], split: usize, x_tail: &[f64]) -> Vec<f64> {
        let l = &self.layers[0];
        l.weights
            .chunks_exact(l.inputs)
            .zip(head)
            .map(|(row, &h)| {
                let mut acc = h;
                for (w, v) in row[split..].iter().zip(x_tail) {
                    acc += w * v;
                }
                acc
            })
            .collect()
    }

    pub(crate) fn forward_trace(&self, x: &[f64], trace: &mut Trace) -> f64 {
        trace.pre.resize(self.layers.len(), Vec::new());
        trace.post.resize(self.layers.len(), Vec::new());
        for (i, layer) in self.layers.iter().enumerate() {
            let (before, rest) = trace.post.split_at_mut(i);
            let input: &[f64] = if i == 0 { x } else { &before[i - 1] };
            let pre = &mut trace.pre[i];
            pre.resize(layer.outputs, 0.0);
            layer.affine(input, pre);
            let post = &mut rest[0];
            post.clear();
            post.extend(pre.iter().map(|&z| z.max(0.0)));
        }
        trace.post.last().unwrap()[0]
    }

    /// Accumulates `d_out · ∂output/∂θ` into `grads` using a trace of `x`.
    pub(crate) fn backward(&self, x: &[f64], trace: &Trace, d_out: f64, grads: &mut ResidualModel) {
        let mut delta = vec![d_out];
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            for (d, &z) in delta.iter_mut().zip(&trace.pre[i]) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
            let input: &[f64] = if i == 0 { x } else { &trace.post[i - 1] };
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, &v) in row.iter_mut().zip(input) {
                    *gw += d * v;
                }
            }
            if i > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Same shape, all parameters zero.
    pub fn zeros_like(&self) -> ResidualModel {
        ResidualModel {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub(crate) fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
    }

    /// Parameters in storage order: per layer, weights then biases.
    pub fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }
}

fn relu(v: &mut [f64]) {
    for x in v {
        *x = x.max(0.0);
    }
}
