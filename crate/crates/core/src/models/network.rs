//! Executable networks built from a [`ModelSpec`].
//!
//! Activations run channels-last (`[N, T, C]`) internally; the public input
//! is `[N, channels, T]`.

use crate::error::{Error, Result};
use crate::models::spec::{LayerSpec, ModelSpec};
use crate::nn::{
    conv1d_backward, conv1d_forward, cross_entropy_indices, dense, dense_backward, dropout, grad_check, init_params,
    maxpool1d_backward, maxpool1d_forward, relu, relu_backward, rnn_sequence, rnn_sequence_backward, softmax,
    take_branch_flip, ActivationKind, Conv1dCache, Delta, DropoutMask, GradCheckConfig, GradCheckReport, GradObjective, InitScheme, Parameter, RnnCache, RnnCellParams,
};
use crate::rng::SeededRng;
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct Network<F: Scalar> {
    spec: ModelSpec,
    params: Vec<Parameter<F>>,
    /// Index of each layer's first parameter in `params`.
    offsets: Vec<usize>,
}

enum Cache<F: Scalar> {
    Conv(Conv1dCache<F>),
    Pool { argmax: Vec<usize>, steps: usize },
    Rnn(Box<(RnnCellParams<F>, RnnCache<F>)>),
    Dense(Tensor<F>),
    Dropout(DropoutMask<F>),
    Flatten(Vec<usize>),
    Relu(Tensor<F>),
    /// Softmax input (logits).
    Softmax(Tensor<F>),
}

/// Saved activations from a training-mode forward pass.
pub struct Trace<F: Scalar> {
    caches: Vec<Cache<F>>,
    pub probs: Tensor<F>,
}

impl<F: Scalar> Trace<F> {
    /// Pre-softmax outputs.
    pub fn logits(&self) -> &Tensor<F> {
        match self.caches.last() {
            Some(Cache::Softmax(z)) => z,
            _ => unreachable!("validated specs end in softmax"),
        }
    }
}

fn layer_offsets(spec: &ModelSpec) -> Vec<usize> {
    let mut at = 0;
    spec.layers
        .iter()
        .map(|l| {
            let here = at;
            at += match l {
                LayerSpec::Conv1d { .. } | LayerSpec::Dense { .. } => 2,
                LayerSpec::Rnn { .. } => 3,
                _ => 0,
            };
            here
        })
        .collect()
}

impl<F: Scalar> Network<F> {
    /// Glorot weights, orthogonal recurrent weights, zero biases (LSTM
    /// forget-gate bias 1).
    pub fn new(spec: &ModelSpec, rng: &mut SeededRng) -> Result<Self> {
        let shapes = spec.param_shapes()?;
        let limit = spec.max_norm;
        let mut params = Vec::with_capacity(shapes.len());
        let mut it = shapes.into_iter();
        let mut prev_channels = spec.input_channels;
        let act_shapes = spec.shapes()?;
        for (layer, out) in spec.layers.iter().zip(&act_shapes) {
            match *layer {
                LayerSpec::Conv1d { .. } | LayerSpec::Dense { .. } => {
                    let (wn, ws) = it.next().unwrap();
                    let (bn, bs) = it.next().unwrap();
                    params.push(Parameter::new(wn, init_params(&ws, InitScheme::GlorotUniform, rng)?, limit));
                    params.push(Parameter::new(bn, Tensor::zeros(bs), None));
                }
                LayerSpec::Rnn { cell, units, activation, .. } => {
                    let cp = RnnCellParams::<F>::init(cell, prev_channels, units, activation, rng)?;
                    let names: Vec<String> = (0..3).map(|_| it.next().unwrap().0).collect();
                    params.push(Parameter::new(names[0].clone(), cp.input_weights, limit));
                    params.push(Parameter::new(names[1].clone(), cp.recurrent_weights, limit));
                    params.push(Parameter::new(names[2].clone(), cp.biases, None));
                }
                _ => {}
            }
            prev_channels = match out {
                crate::models::spec::ActShape::Seq { channels, .. } => *channels,
                crate::models::spec::ActShape::Flat(f) => *f,
            };
        }
        Ok(Self { spec: spec.clone(), params, offsets: layer_offsets(spec) })
    }

    /// Wraps existing tensors, checking names and shapes against `spec`.
    pub fn from_tensors(spec: &ModelSpec, tensors: Vec<(String, Tensor<F>)>) -> Result<Self> {
        let shapes = spec.param_shapes()?;
        if shapes.len() != tensors.len() {
            return Err(Error::ShapeTableMismatch {
                name: format!("<tensor count {}>", tensors.len()),
                found: vec![tensors.len()],
                expected: vec![shapes.len()],
            });
        }
        let mut params = Vec::with_capacity(shapes.len());
        for ((name, shape), (tname, t)) in shapes.into_iter().zip(tensors) {
            if name != tname || t.shape() != shape.as_slice() {
                return Err(Error::ShapeTableMismatch { name: tname, found: t.shape().to_vec(), expected: shape });
            }
            let limit = if name.ends_with("bias") || name.ends_with("biases") { None } else { spec.max_norm };
            params.push(Parameter::new(name, t, limit));
        }
        Ok(Self { spec: spec.clone(), params, offsets: layer_offsets(spec) })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Parameter<F>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter<F>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }

    pub fn cast<G: Scalar>(&self) -> Network<G> {
        Network { spec: self.spec.clone(), params: self.params.iter().map(Parameter::cast).collect(), offsets: self.offsets.clone() }
    }

    /// Parameter values as `(name, tensor)` pairs, in storage order.
    pub fn tensors(&self) -> Vec<(String, Tensor<F>)> {
        self.params.iter().map(|p| (p.name.clone(), p.value.clone())).collect()
    }

    fn cell(&self, idx: usize) -> RnnCellParams<F> {
        let LayerSpec::Rnn { cell, units, activation, .. } = self.spec.layers[idx] else { unreachable!() };
        let o = self.offsets[idx];
        RnnCellParams {
            kind: cell,
            input_weights: self.params[o].value.clone(),
            recurrent_weights: self.params[o + 1].value.clone(),
            biases: self.params[o + 2].value.clone(),
            hidden_size: units,
            state_activation: activation,
        }
    }

    fn check_input(&self, x: &Tensor<F>) -> Result<()> {
        let want = [self.spec.input_channels, self.spec.input_len];
        if x.rank() != 3 || x.shape()[1..] != want {
            return Err(Error::shape(
                "model input",
                format!("expected [N, {}, {}], got {:?}", want[0], want[1], x.shape()),
            ));
        }
        Ok(())
    }

    fn run(&self, x: &Tensor<F>, mut rng: Option<&mut SeededRng>, keep: bool) -> Result<(Tensor<F>, Vec<Cache<F>>)> {
        self.check_input(x)?;
        let training = rng.is_some();
        let mut h = x.swap_last_two();
        let mut caches = Vec::with_capacity(if keep { self.spec.layers.len() } else { 0 });
        for (idx, layer) in self.spec.layers.iter().enumerate() {
            let at = |e: Error| match e {
                Error::Shape { op, detail } => Error::Shape { op, detail: format!("layer {idx} ({}): {detail}", layer.kind_name()) },
                other => other,
            };
            let o = self.offsets[idx];
            let (next, cache) = match *layer {
                LayerSpec::Conv1d { .. } => {
                    let (y, c) = conv1d_forward(&h, &self.params[o].value, &self.params[o + 1].value).map_err(at)?;
                    (y, Cache::Conv(c))
                }
                LayerSpec::Maxpool1d { size, stride } => {
                    let p = maxpool1d_forward(&h, size, stride).map_err(at)?;
                    (p.output, Cache::Pool { argmax: p.argmax, steps: p.input_steps })
                }
                LayerSpec::Rnn { return_sequences, .. } => {
                    let cp = self.cell(idx);
                    let (y, c) = rnn_sequence(&cp, &h, return_sequences).map_err(at)?;
                    (y, Cache::Rnn(Box::new((cp, c))))
                }
                LayerSpec::Dense { .. } => {
                    let y = dense(&h, &self.params[o].value, &self.params[o + 1].value).map_err(at)?;
                    (y, Cache::Dense(if keep { h } else { Tensor::zeros(vec![1]) }))
                }
                LayerSpec::Dropout { rate } => {
                    let (y, mask) = match rng.as_deref_mut() {
                        Some(r) => dropout(&h, rate, r, training)?,
                        None => (h, DropoutMask::default()),
                    };
                    (y, Cache::Dropout(mask))
                }
                LayerSpec::Flatten => {
                    let shape = h.shape().to_vec();
                    let n = shape[0];
                    let y = h.reshape(vec![n, shape[1..].iter().product::<usize>()])?;
                    (y, Cache::Flatten(shape))
                }
                LayerSpec::Activation { function: ActivationKind::Relu } => {
                    let y = relu(&h);
                    let c = Cache::Relu(if keep { y.clone() } else { Tensor::zeros(vec![1]) });
                    (y, c)
                }
                LayerSpec::Activation { function: ActivationKind::Softmax } => {
                    let y = softmax(&h);
                    (y, Cache::Softmax(if keep { h } else { Tensor::zeros(vec![1]) }))
                }
            };
            if !next.is_finite() {
                return Err(Error::NonFinite { stage: format!("forward layer {idx} ({})", layer.kind_name()) });
            }
            h = next;
            if keep {
                caches.push(cache);
            }
        }
        Ok((h, caches))
    }

    /// Inference-mode class probabilities `[N, classes]`.
    pub fn predict(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        Ok(self.run(x, None, false)?.0)
    }

    /// Forward pass that records what [`Network::backward`] needs. With
    /// `rng` set the network runs in training mode (dropout active).
    pub fn forward(&self, x: &Tensor<F>, rng: Option<&mut SeededRng>) -> Result<Trace<F>> {
        let (probs, caches) = self.run(x, rng, true)?;
        Ok(Trace { caches, probs })
    }

    /// Accumulates parameter gradients given `dL/dlogits` (the input of the
    /// final softmax). Returns `dL/dx` in the public `[N, C, T]` layout.
    pub fn backward(&mut self, trace: Trace<F>, dlogits: &Tensor<F>) -> Result<Tensor<F>> {
        let mut g = dlogits.clone();
        let layers = self.spec.layers.clone();
        for (idx, (layer, cache)) in layers.iter().zip(trace.caches).enumerate().rev() {
            let o = self.offsets[idx];
            g = match (*layer, cache) {
                (_, Cache::Softmax(_)) => g,
                (LayerSpec::Conv1d { .. }, Cache::Conv(c)) => {
                    let gr = conv1d_backward(&c, &self.params[o].value, &g)?;
                    add_into(&mut self.params[o].grad, &gr.weight);
                    add_into(&mut self.params[o + 1].grad, &gr.bias);
                    gr.input
                }
                (_, Cache::Pool { argmax, steps }) => maxpool1d_backward(&argmax, steps, &g)?,
                (_, Cache::Rnn(b)) => {
                    let (cp, c) = *b;
                    let gr = rnn_sequence_backward(&cp, &c, &g)?;
                    add_into(&mut self.params[o].grad, &gr.input_weights);
                    add_into(&mut self.params[o + 1].grad, &gr.recurrent_weights);
                    add_into(&mut self.params[o + 2].grad, &gr.biases);
                    gr.input
                }
                (_, Cache::Dense(x)) => {
                    let gr = dense_backward(&x, &self.params[o].value, &g)?;
                    add_into(&mut self.params[o].grad, &gr.weight);
                    add_into(&mut self.params[o + 1].grad, &gr.bias);
                    gr.input
                }
                (_, Cache::Dropout(mask)) => mask.backward(&g),
                (_, Cache::Flatten(shape)) => g.reshape(shape)?,
                (_, Cache::Relu(y)) => relu_backward(&y, &g),
                _ => unreachable!("cache kind follows layer kind"),
            };
        }
        Ok(g.swap_last_two())
    }

    /// Zeroes gradients, then runs forward, cross-entropy and backward on one
    /// batch. Returns the mean loss.
    pub fn accumulate_gradients(&mut self, x: &Tensor<F>, labels: &[usize], rng: Option<&mut SeededRng>) -> Result<f64> {
        self.zero_grad();
        let trace = self.forward(x, rng)?;
        let (loss, dlogits) = cross_entropy_indices(&trace.probs, labels)?;
        self.backward(trace, &dlogits)?;
        Ok(loss)
    }
}

fn add_into<F: Scalar>(acc: &mut Tensor<F>, g: &Tensor<F>) {
    for (a, &b) in acc.data_mut().iter_mut().zip(g.data()) {
        *a += b;
    }
}

/// Cross-entropy of a 64-bit network on a fixed batch, as a gradient-check
/// objective. Dropout masks are redrawn from the same seed on every
/// evaluation, so training mode is deterministic too.
///
/// After [`GradObjective::gradient`] has fixed a base point, `loss` reports
/// `L(θ) − L(θ₀)` evaluated in [`Delta`] arithmetic: the network runs on
/// (base value, change) pairs, so the offset keeps full relative precision
/// instead of being the difference of two rounded losses near `ln 11`.
/// Perturbations that flip a ReLU, pooling or softmax winner are reported
/// through [`GradObjective::kink_signature`].
pub struct NetworkObjective {
    pub net: Network<f64>,
    pub input: Tensor<f64>,
    pub labels: Vec<usize>,
    /// `Some(seed)` runs in training mode with dropout seeded by `seed`.
    pub dropout_seed: Option<u64>,
    base: Option<DeltaBase>,
    last_flip: Option<u64>,
}

struct DeltaBase {
    probs: Tensor<f64>,
    net: Network<Delta>,
    input: Tensor<Delta>,
}

impl NetworkObjective {
    pub fn new(net: Network<f64>, input: Tensor<f64>, labels: Vec<usize>, dropout_seed: Option<u64>) -> Self {
        Self { net, input, labels, dropout_seed, base: None, last_flip: None }
    }

    fn trace(&self) -> Result<Trace<f64>> {
        let mut rng = self.dropout_seed.map(SeededRng::new);
        self.net.forward(&self.input, rng.as_mut())
    }

    /// Mean over rows of `lse(z) − z_c − (lse(z₀) − z₀_c)`, using
    /// `lse(z) − lse(z₀) = ln(1 + Σ p₀ₖ·expm1(zₖ − z₀ₖ))`.
    fn loss_offset(&mut self) -> Result<f64> {
        let base = self.base.as_ref().expect("base point fixed");
        let mut rng = self.dropout_seed.map(SeededRng::new);
        take_branch_flip();
        let trace = base.net.forward(&base.input, rng.as_mut())?;
        self.last_flip = Some(take_branch_flip() as u64);
        let z = trace.logits();
        let k = z.dim(1);
        let mut total = 0.0;
        for (row, &c) in self.labels.iter().enumerate() {
            let dz = &z.data()[row * k..][..k];
            let p0 = &base.probs.data()[row * k..][..k];
            let s: f64 = (0..k).map(|j| p0[j] * dz[j].delta.exp_m1()).sum();
            total += s.ln_1p() - dz[c].delta;
        }
        Ok(total / self.labels.len() as f64)
    }
}

impl GradObjective for NetworkObjective {
    fn num_tensors(&self) -> usize {
        self.net.params.len()
    }

    fn tensor_len(&self, tensor: usize) -> usize {
        self.net.params[tensor].value.len()
    }

    fn get(&self, tensor: usize, index: usize) -> f64 {
        self.net.params[tensor].value.data()[index]
    }

    fn set(&mut self, tensor: usize, index: usize, value: f64) {
        self.net.params[tensor].value.data_mut()[index] = value;
        if let Some(base) = &mut self.base {
            let slot = &mut base.net.params[tensor].value.data_mut()[index];
            *slot = Delta::new(slot.base, value - slot.base);
        }
    }

    fn loss(&mut self) -> Result<f64> {
        match self.base {
            Some(_) => self.loss_offset(),
            None => Ok(cross_entropy_indices(&self.trace()?.probs, &self.labels)?.0),
        }
    }

    fn gradient(&mut self) -> Result<Vec<Vec<f64>>> {
        self.net.zero_grad();
        let trace = self.trace()?;
        let (_, dlogits) = cross_entropy_indices(&trace.probs, &self.labels)?;
        let input = Tensor::new(self.input.shape().to_vec(), self.input.data().iter().map(|&v| Delta::constant(v)).collect())?;
        self.base = Some(DeltaBase { probs: trace.probs.clone(), net: self.net.cast(), input });
        self.last_flip = Some(0);
        self.net.backward(trace, &dlogits)?;
        Ok(self.net.params.iter().map(|p| p.grad.data().to_vec()).collect())
    }

    fn kink_signature(&self) -> Option<u64> {
        self.last_flip
    }
}

/// Gradient check of a freshly initialized 64-bit `spec` on a batch of two
/// random frames (labels 1 and 7) in training mode. Every random draw comes
/// from `seed`.
pub fn check_model_gradients(spec: &ModelSpec, seed: u64, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let net = Network::<f64>::new(spec, &mut SeededRng::new(seed))?;
    let mut rng = SeededRng::new(seed.wrapping_add(100));
    let v: Vec<f64> = (0..2 * spec.input_channels * spec.input_len).map(|_| rng.normal()).collect();
    let input = Tensor::from_f64(vec![2, spec.input_channels, spec.input_len], &v)?;
    let mut obj = NetworkObjective::new(net, input, vec![1, 7], Some(seed));
    grad_check(&mut obj, &GradCheckConfig { seed, ..*cfg })
}
