//! Recurrent cells (LSTM, GRU, simple) and full backpropagation through time.
//!
//! Gate blocks are stacked along the first weight axis: LSTM `i,f,g,o`,
//! GRU `z,r,n`. Input weights are `[G·H, F]`, recurrent weights `[G·H, H]`,
//! biases `[G·H]`.
//!
//! LSTM: `c' = f⊙c + i⊙act(g)`, `h' = o⊙act(c')`.
//! GRU: `n = act(x_n + r⊙(U_n h))`, `h' = (1−z)⊙n + z⊙h`.
//! Simple: `h' = act(W x + U h + b)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::activation::sigmoid;
use crate::nn::init::{init_params, InitScheme};
use crate::rng::SeededRng;
use crate::tensor::{gemm, Op, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RnnKind {
    Lstm,
    Gru,
    Simple,
}

impl RnnKind {
    pub fn gates(self) -> usize {
        match self {
            RnnKind::Lstm => 4,
            RnnKind::Gru => 3,
            RnnKind::Simple => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RnnKind::Lstm => "lstm",
            RnnKind::Gru => "gru",
            RnnKind::Simple => "simple",
        }
    }
}

/// Activation used for candidate and state outputs; gates are always sigmoid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateActivation {
    Tanh,
    Relu,
}

impl StateActivation {
    #[inline]
    fn apply<F: Scalar>(self, x: F) -> F {
        match self {
            StateActivation::Tanh => x.tanh(),
            StateActivation::Relu => x.max(F::zero()),
        }
    }

    /// Derivative expressed through the activation's output `y = act(x)`.
    #[inline]
    fn grad_from_output<F: Scalar>(self, y: F) -> F {
        match self {
            StateActivation::Tanh => F::one() - y * y,
            StateActivation::Relu => {
                if y > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RnnCellParams<F> {
    pub kind: RnnKind,
    pub input_weights: Tensor<F>,
    pub recurrent_weights: Tensor<F>,
    pub biases: Tensor<F>,
    pub hidden_size: usize,
    pub state_activation: StateActivation,
}

impl<F: Scalar> RnnCellParams<F> {
    pub fn zeros(kind: RnnKind, input_size: usize, hidden_size: usize, act: StateActivation) -> Self {
        let gh = kind.gates() * hidden_size;
        Self {
            kind,
            input_weights: Tensor::zeros(vec![gh, input_size]),
            recurrent_weights: Tensor::zeros(vec![gh, hidden_size]),
            biases: Tensor::zeros(vec![gh]),
            hidden_size,
            state_activation: act,
        }
    }

    /// Glorot input weights, orthogonal recurrent weights, zero biases with
    /// the LSTM forget-gate bias set to 1.
    pub fn init(
        kind: RnnKind,
        input_size: usize,
        hidden_size: usize,
        act: StateActivation,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let gh = kind.gates() * hidden_size;
        let mut biases = Tensor::zeros(vec![gh]);
        if kind == RnnKind::Lstm {
            biases.data_mut()[hidden_size..2 * hidden_size].iter_mut().for_each(|b| *b = F::one());
        }
        Ok(Self {
            kind,
            input_weights: init_params(&[gh, input_size], InitScheme::GlorotUniform, rng)?,
            recurrent_weights: init_params(&[gh, hidden_size], InitScheme::Orthogonal, rng)?,
            biases,
            hidden_size,
            state_activation: act,
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_weights.dim(1)
    }

    fn gh(&self) -> usize {
        self.kind.gates() * self.hidden_size
    }

    fn validate(&self) -> Result<()> {
        let (gh, h) = (self.gh(), self.hidden_size);
        if self.input_weights.rank() != 2 || self.input_weights.dim(0) != gh {
            return Err(Error::shape("rnn", format!("input weights {:?}, expected [{gh}, F]", self.input_weights.shape())));
        }
        if self.recurrent_weights.shape() != [gh, h] {
            return Err(Error::shape("rnn", format!("recurrent weights {:?}, expected [{gh}, {h}]", self.recurrent_weights.shape())));
        }
        if self.biases.shape() != [gh] {
            return Err(Error::shape("rnn", format!("biases {:?}, expected [{gh}]", self.biases.shape())));
        }
        Ok(())
    }

    /// `x·Wxᵀ + b` for `rows` input rows.
    fn project_inputs(&self, x: &[F], rows: usize) -> Vec<F> {
        let (gh, f) = (self.gh(), self.input_size());
        let mut out = vec![F::zero(); rows * gh];
        gemm(Op::N, Op::T, rows, f, gh, x, self.input_weights.data(), F::zero(), &mut out);
        for row in out.chunks_exact_mut(gh) {
            for (v, &b) in row.iter_mut().zip(self.biases.data()) {
                *v += b;
            }
        }
        out
    }

    /// `h·Whᵀ` for a batch of `n` hidden rows.
    fn project_hidden(&self, h: &[F], n: usize) -> Vec<F> {
        let gh = self.gh();
        let mut out = vec![F::zero(); n * gh];
        gemm(Op::N, Op::T, n, self.hidden_size, gh, h, self.recurrent_weights.data(), F::zero(), &mut out);
        out
    }
}

/// Hidden state (and cell state for LSTM), `[H]` or `[N, H]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnState<F> {
    pub h: Tensor<F>,
    pub c: Option<Tensor<F>>,
}

impl<F: Scalar> RnnState<F> {
    pub fn zeros(params: &RnnCellParams<F>, batch: Option<usize>) -> Self {
        let shape = match batch {
            Some(n) => vec![n, params.hidden_size],
            None => vec![params.hidden_size],
        };
        Self {
            h: Tensor::zeros(shape.clone()),
            c: (params.kind == RnnKind::Lstm).then(|| Tensor::zeros(shape)),
        }
    }
}

/// Advances one batch row-block by one step. `gates` receives the activated
/// gate values used by the backward pass.
#[allow(clippy::too_many_arguments)]
fn cell_update<F: Scalar>(
    kind: RnnKind,
    act: StateActivation,
    hsz: usize,
    xz: &[F],
    hz: &[F],
    h_prev: &[F],
    c_prev: &[F],
    gates: &mut [F],
    h_out: &mut [F],
    c_out: &mut [F],
) {
    let gh = kind.gates() * hsz;
    let n = h_prev.len() / hsz;
    for s in 0..n {
        let xz = &xz[s * gh..(s + 1) * gh];
        let hz = &hz[s * gh..(s + 1) * gh];
        let g = &mut gates[s * gh..(s + 1) * gh];
        let hp = &h_prev[s * hsz..(s + 1) * hsz];
        let ho = &mut h_out[s * hsz..(s + 1) * hsz];
        match kind {
            RnnKind::Lstm => {
                let cp = &c_prev[s * hsz..(s + 1) * hsz];
                let co = &mut c_out[s * hsz..(s + 1) * hsz];
                for j in 0..hsz {
                    let i = sigmoid(xz[j] + hz[j]);
                    let f = sigmoid(xz[hsz + j] + hz[hsz + j]);
                    let cand = act.apply(xz[2 * hsz + j] + hz[2 * hsz + j]);
                    let o = sigmoid(xz[3 * hsz + j] + hz[3 * hsz + j]);
                    let c = f * cp[j] + i * cand;
                    g[j] = i;
                    g[hsz + j] = f;
                    g[2 * hsz + j] = cand;
                    g[3 * hsz + j] = o;
                    co[j] = c;
                    ho[j] = o * act.apply(c);
                }
            }
            RnnKind::Gru => {
                for j in 0..hsz {
                    let z = sigmoid(xz[j] + hz[j]);
                    let r = sigmoid(xz[hsz + j] + hz[hsz + j]);
                    let cand = act.apply(xz[2 * hsz + j] + r * hz[2 * hsz + j]);
                    g[j] = z;
                    g[hsz + j] = r;
                    g[2 * hsz + j] = cand;
                    ho[j] = (F::one() - z) * cand + z * hp[j];
                }
            }
            RnnKind::Simple => {
                for j in 0..hsz {
                    let h = act.apply(xz[j] + hz[j]);
                    g[j] = h;
                    ho[j] = h;
                }
            }
        }
    }
}

fn batch_dims<F: Scalar>(x: &Tensor<F>, rank_single: usize) -> Option<(usize, bool)> {
    match x.rank() {
        r if r == rank_single => Some((1, false)),
        r if r == rank_single + 1 => Some((x.dim(0), true)),
        _ => None,
    }
}

/// One recurrent step on `x_t[F]` (or a batch `[N, F]`).
pub fn rnn_step<F: Scalar>(params: &RnnCellParams<F>, x_t: &Tensor<F>, state: &RnnState<F>) -> Result<RnnState<F>> {
    params.validate()?;
    let (n, batched) = batch_dims(x_t, 1)
        .ok_or_else(|| Error::shape("rnn_step", format!("input must be [F] or [N, F], got {:?}", x_t.shape())))?;
    let (f, hsz) = (params.input_size(), params.hidden_size);
    if *x_t.shape().last().unwrap() != f {
        return Err(Error::shape("rnn_step", format!("F: input has {} features, cell expects {f}", x_t.shape().last().unwrap())));
    }
    if state.h.len() != n * hsz {
        return Err(Error::shape("rnn_step", format!("H: state {:?} does not hold {n}x{hsz}", state.h.shape())));
    }
    let zeros;
    let c_prev = match (&state.c, params.kind) {
        (Some(c), RnnKind::Lstm) if c.len() == n * hsz => c.data(),
        (_, RnnKind::Lstm) => return Err(Error::shape("rnn_step", "LSTM state needs a cell tensor of size H")),
        _ => {
            zeros = Vec::new();
            &zeros[..]
        }
    };
    let xz = params.project_inputs(x_t.data(), n);
    let hz = params.project_hidden(state.h.data(), n);
    let mut gates = vec![F::zero(); n * params.gh()];
    let mut h = vec![F::zero(); n * hsz];
    let mut c = vec![F::zero(); if params.kind == RnnKind::Lstm { n * hsz } else { 0 }];
    cell_update(params.kind, params.state_activation, hsz, &xz, &hz, state.h.data(), c_prev, &mut gates, &mut h, &mut c);
    if h.iter().chain(&c).any(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow { step: 0 });
    }
    let shape = if batched { vec![n, hsz] } else { vec![hsz] };
    Ok(RnnState {
        h: Tensor::new(shape.clone(), h)?,
        c: if params.kind == RnnKind::Lstm { Some(Tensor::new(shape, c)?) } else { None },
    })
}

/// Everything the backward pass needs, stored time-major (`row = t·N + s`).
#[derive(Clone, Debug)]
pub struct RnnCache<F> {
    batch: usize,
    steps: usize,
    batched: bool,
    return_sequences: bool,
    x_tm: Vec<F>,
    /// Hidden states `h_{-1}..h_{T-1}`, `(T+1)·N·H`.
    h_all: Vec<F>,
    /// Cell states `c_{-1}..c_{T-1}` (LSTM only).
    c_all: Vec<F>,
    gates: Vec<F>,
    /// Recurrent projections `U·h_{t-1}` (GRU only).
    hz_all: Vec<F>,
}

#[derive(Clone, Debug)]
pub struct RnnGrads<F> {
    pub input: Tensor<F>,
    pub input_weights: Tensor<F>,
    pub recurrent_weights: Tensor<F>,
    pub biases: Tensor<F>,
}

/// Runs the cell over `x[T, F]` (or `[N, T, F]`) from a zero state.
///
/// Returns `[T, H]` / `[N, T, H]` when `return_sequences`, otherwise the last
/// hidden state `[H]` / `[N, H]`.
pub fn rnn_sequence<F: Scalar>(
    params: &RnnCellParams<F>,
    x: &Tensor<F>,
    return_sequences: bool,
) -> Result<(Tensor<F>, RnnCache<F>)> {
    params.validate()?;
    let (n, batched) = batch_dims(x, 2)
        .ok_or_else(|| Error::shape("rnn_sequence", format!("input must be [T, F] or [N, T, F], got {:?}", x.shape())))?;
    let r = x.rank();
    let (t, f) = (x.dim(r - 2), x.dim(r - 1));
    if t == 0 {
        return Err(Error::EmptySequence { op: "rnn_sequence" });
    }
    if f != params.input_size() {
        return Err(Error::shape("rnn_sequence", format!("F: input has {f} features, cell expects {}", params.input_size())));
    }
    let hsz = params.hidden_size;
    let gh = params.gh();
    let lstm = params.kind == RnnKind::Lstm;
    let gru = params.kind == RnnKind::Gru;

    let xs = x.data();
    let mut x_tm = vec![F::zero(); t * n * f];
    for s in 0..n {
        for step in 0..t {
            x_tm[(step * n + s) * f..(step * n + s + 1) * f].copy_from_slice(&xs[(s * t + step) * f..(s * t + step + 1) * f]);
        }
    }
    let xz = params.project_inputs(&x_tm, t * n);

    let block = n * hsz;
    let mut h_all = vec![F::zero(); (t + 1) * block];
    let mut c_all = vec![F::zero(); if lstm { (t + 1) * block } else { 0 }];
    let mut gates = vec![F::zero(); t * n * gh];
    let mut hz_all = vec![F::zero(); if gru { t * n * gh } else { 0 }];

    for step in 0..t {
        let hz = params.project_hidden(&h_all[step * block..(step + 1) * block], n);
        let (h_prev, h_next) = h_all.split_at_mut((step + 1) * block);
        let h_prev = &h_prev[step * block..];
        let h_next = &mut h_next[..block];
        let (c_prev, c_next): (&[F], &mut [F]) = if lstm {
            let (a, b) = c_all.split_at_mut((step + 1) * block);
            (&a[step * block..], &mut b[..block])
        } else {
            (&[], &mut [])
        };
        cell_update(
            params.kind,
            params.state_activation,
            hsz,
            &xz[step * n * gh..(step + 1) * n * gh],
            &hz,
            h_prev,
            c_prev,
            &mut gates[step * n * gh..(step + 1) * n * gh],
            h_next,
            c_next,
        );
        if h_next.iter().chain(c_next.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow { step });
        }
        if gru {
            hz_all[step * n * gh..(step + 1) * n * gh].copy_from_slice(&hz);
        }
    }

    let out = if return_sequences {
        let mut out = vec![F::zero(); n * t * hsz];
        for step in 0..t {
            for s in 0..n {
                let src = &h_all[(step + 1) * block + s * hsz..(step + 1) * block + (s + 1) * hsz];
                out[(s * t + step) * hsz..(s * t + step + 1) * hsz].copy_from_slice(src);
            }
        }
        let shape = if batched { vec![n, t, hsz] } else { vec![t, hsz] };
        Tensor::new(shape, out)?
    } else {
        let shape = if batched { vec![n, hsz] } else { vec![hsz] };
        Tensor::new(shape, h_all[t * block..].to_vec())?
    };
    let cache = RnnCache { batch: n, steps: t, batched, return_sequences, x_tm, h_all, c_all, gates, hz_all };
    Ok((out, cache))
}

/// Backpropagation through time for [`rnn_sequence`].
pub fn rnn_sequence_backward<F: Scalar>(
    params: &RnnCellParams<F>,
    cache: &RnnCache<F>,
    dy: &Tensor<F>,
) -> Result<RnnGrads<F>> {
    let (n, t) = (cache.batch, cache.steps);
    let (hsz, gh, f) = (params.hidden_size, params.gh(), params.input_size());
    let act = params.state_activation;
    let block = n * hsz;
    let expected = if cache.return_sequences { n * t * hsz } else { n * hsz };
    if dy.len() != expected {
        return Err(Error::shape("rnn_sequence_backward", format!("dy shape {:?} holds {} values, expected {expected}", dy.shape(), dy.len())));
    }

    // time-major upstream gradient
    let mut dy_tm = vec![F::zero(); t * block];
    let g = dy.data();
    if cache.return_sequences {
        for s in 0..n {
            for step in 0..t {
                dy_tm[step * block + s * hsz..step * block + (s + 1) * hsz]
                    .copy_from_slice(&g[(s * t + step) * hsz..(s * t + step + 1) * hsz]);
            }
        }
    } else {
        dy_tm[(t - 1) * block..].copy_from_slice(g);
    }

    let gru = params.kind == RnnKind::Gru;
    let mut dz = vec![F::zero(); t * n * gh];
    let mut dhz = vec![F::zero(); if gru { t * n * gh } else { 0 }];
    let mut dh_next = vec![F::zero(); block];
    let mut dc_next = vec![F::zero(); block];
    let mut dh = vec![F::zero(); block];
    let one = F::one();

    for step in (0..t).rev() {
        for (d, (&a, &b)) in dh.iter_mut().zip(dy_tm[step * block..(step + 1) * block].iter().zip(&dh_next)) {
            *d = a + b;
        }
        let gates = &cache.gates[step * n * gh..(step + 1) * n * gh];
        let dzt = &mut dz[step * n * gh..(step + 1) * n * gh];
        match params.kind {
            RnnKind::Lstm => {
                let c_t = &cache.c_all[(step + 1) * block..(step + 2) * block];
                let c_p = &cache.c_all[step * block..(step + 1) * block];
                for s in 0..n {
                    let gs = &gates[s * gh..(s + 1) * gh];
                    let dzs = &mut dzt[s * gh..(s + 1) * gh];
                    for j in 0..hsz {
                        let k = s * hsz + j;
                        let (i, fg, cand, o) = (gs[j], gs[hsz + j], gs[2 * hsz + j], gs[3 * hsz + j]);
                        let ac = act.apply(c_t[k]);
                        let d_o = dh[k] * ac;
                        let dc = dh[k] * o * act.grad_from_output(ac) + dc_next[k];
                        let di = dc * cand;
                        let dg = dc * i;
                        let df = dc * c_p[k];
                        dc_next[k] = dc * fg;
                        dzs[j] = di * i * (one - i);
                        dzs[hsz + j] = df * fg * (one - fg);
                        dzs[2 * hsz + j] = dg * act.grad_from_output(cand);
                        dzs[3 * hsz + j] = d_o * o * (one - o);
                    }
                }
                gemm(Op::N, Op::N, n, gh, hsz, dzt, params.recurrent_weights.data(), F::zero(), &mut dh_next);
            }
            RnnKind::Gru => {
                let h_p = &cache.h_all[step * block..(step + 1) * block];
                let hz = &cache.hz_all[step * n * gh..(step + 1) * n * gh];
                let dhzt = &mut dhz[step * n * gh..(step + 1) * n * gh];
                for s in 0..n {
                    let gs = &gates[s * gh..(s + 1) * gh];
                    let hzs = &hz[s * gh..(s + 1) * gh];
                    let dzs = &mut dzt[s * gh..(s + 1) * gh];
                    let dhs = &mut dhzt[s * gh..(s + 1) * gh];
                    for j in 0..hsz {
                        let k = s * hsz + j;
                        let (z, r, cand) = (gs[j], gs[hsz + j], gs[2 * hsz + j]);
                        let dn = dh[k] * (one - z);
                        let dzg = dh[k] * (h_p[k] - cand);
                        let dan = dn * act.grad_from_output(cand);
                        let dr = dan * hzs[2 * hsz + j];
                        let dzz = dzg * z * (one - z);
                        let drr = dr * r * (one - r);
                        dzs[j] = dzz;
                        dzs[hsz + j] = drr;
                        dzs[2 * hsz + j] = dan;
                        dhs[j] = dzz;
                        dhs[hsz + j] = drr;
                        dhs[2 * hsz + j] = dan * r;
                    }
                }
                gemm(Op::N, Op::N, n, gh, hsz, dhzt, params.recurrent_weights.data(), F::zero(), &mut dh_next);
                for s in 0..n {
                    for j in 0..hsz {
                        let k = s * hsz + j;
                        dh_next[k] += dh[k] * gates[s * gh + j];
                    }
                }
            }
            RnnKind::Simple => {
                for (k, d) in dzt.iter_mut().enumerate() {
                    *d = dh[k] * act.grad_from_output(gates[k]);
                }
                gemm(Op::N, Op::N, n, gh, hsz, dzt, params.recurrent_weights.data(), F::zero(), &mut dh_next);
            }
        }
    }

    let rows = t * n;
    let dhz_src = if gru { &dhz } else { &dz };
    let mut d_rec = vec![F::zero(); gh * hsz];
    gemm(Op::T, Op::N, gh, rows, hsz, dhz_src, &cache.h_all[..rows * hsz], F::zero(), &mut d_rec);
    let mut d_in = vec![F::zero(); gh * f];
    gemm(Op::T, Op::N, gh, rows, f, &dz, &cache.x_tm, F::zero(), &mut d_in);
    let mut d_b = vec![F::zero(); gh];
    for row in dz.chunks_exact(gh) {
        for (acc, &v) in d_b.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let mut dx_tm = vec![F::zero(); rows * f];
    gemm(Op::N, Op::N, rows, gh, f, &dz, params.input_weights.data(), F::zero(), &mut dx_tm);
    let mut dx = vec![F::zero(); rows * f];
    for s in 0..n {
        for step in 0..t {
            dx[(s * t + step) * f..(s * t + step + 1) * f].copy_from_slice(&dx_tm[(step * n + s) * f..(step * n + s + 1) * f]);
        }
    }
    let x_shape = if cache.batched { vec![n, t, f] } else { vec![t, f] };
    Ok(RnnGrads {
        input: Tensor::new(x_shape, dx)?,
        input_weights: Tensor::new(vec![gh, f], d_in)?,
        recurrent_weights: Tensor::new(vec![gh, hsz], d_rec)?,
        biases: Tensor::new(vec![gh], d_b)?,
    })
}
