//! Dense ReLU network with an identity output layer, plus exact gradients
//! of the DQN regression loss.

use rand::Rng;

use crate::error::DqnError;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for j in 0..self.outputs {
            let row = &self.weights[j * self.inputs..(j + 1) * self.inputs];
            let dot: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
            out.push(self.biases[j] + dot);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Per-layer parameter gradients, same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

impl Mlp {
    /// All-zero network with the given layer sizes (input first).
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output sizes");
        Self { layers: layer_sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect() }
    }

    /// He-uniform weights, zero biases.
    pub fn new<R: Rng>(layer_sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(layer_sizes);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().expect("non-empty").outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters in layer order: weights (row-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied()).collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), DqnError> {
        if params.len() != self.param_count() {
            return Err(DqnError::Dimension { expected: self.param_count(), got: params.len() });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, DqnError> {
        if x.len() != self.input_size() {
            return Err(DqnError::Dimension { expected: self.input_size(), got: x.len() });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if i != last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Pre-activations of every layer for one input.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(&act, &mut z);
            act = if i != last { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
            pre.push(z);
        }
        pre
    }

    /// Mean squared error of the chosen-action Q values against `targets`,
    /// and its exact gradient.
    pub fn td_loss_and_gradients(&self, states: &[&[f64]], actions: &[usize], targets: &[f64]) -> Result<(f64, Gradients), DqnError> {
        if states.is_empty() {
            return Err(DqnError::EmptyBatch);
        }
        let n = states.len() as f64;
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for ((&s, &a), &y) in states.iter().zip(actions).zip(targets) {
            if s.len() != self.input_size() {
                return Err(DqnError::Dimension { expected: self.input_size(), got: s.len() });
            }
            if a >= self.output_size() {
                return Err(DqnError::Dimension { expected: self.output_size(), got: a });
            }
            let pre = self.forward_trace(s);
            let q = pre.last().expect("non-empty")[a];
            let err = q - y;
            loss += err * err / n;
            // delta at the output pre-activation
            let mut delta = vec![0.0; self.output_size()];
            delta[a] = 2.0 * err / n;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input: Vec<f64> = if l == 0 { s.to_vec() } else { pre[l - 1].iter().map(|v| v.max(0.0)).collect() };
                let gw = &mut grads.weights[l];
                for (j, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grads.biases[l][j] += d;
                    let row = &mut gw[j * layer.inputs..(j + 1) * layer.inputs];
                    for (g, &v) in row.iter_mut().zip(&input) {
                        *g += d * v;
                    }
                }
                if l > 0 {
                    let mut back = vec![0.0; layer.inputs];
                    for (j, &d) in delta.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let row = &layer.weights[j * layer.inputs..(j + 1) * layer.inputs];
                        for (b, &w) in back.iter_mut().zip(row) {
                            *b += w * d;
                        }
                    }
                    for (b, &z) in back.iter_mut().zip(&pre[l - 1]) {
                        if z <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        Ok((loss, grads))
    }

    /// Plain gradient-descent step.
    pub fn apply_sgd(&mut self, grads: &Gradients, learning_rate: f64) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (w, g) in layer.weights.iter_mut().zip(&grads.weights[l]) {
                *w -= learning_rate * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(&grads.biases[l]) {
                *b -= learning_rate * g;
            }
        }
    }

    /// Largest absolute parameter difference to another network of the same
    /// shape.
    pub fn max_param_diff(&self, other: &Mlp) -> f64 {
        self.params().iter().zip(other.params()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}
