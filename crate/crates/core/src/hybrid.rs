//! Hybrid quantum layer `h(x) = φ(f(ψ(x)))`.
//!
//! `ψ` and `φ` are two-layer affine maps with a tanh between them, `f` is the
//! vector of per-qubit Z expectations of the angle-encoded circuit.

use std::f64::consts::TAU;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use crate::ansatz::CircuitSpec;
use crate::error::{check_len, Error, Result};
use crate::qsim::StateVector;

/// `x ↦ W2ᵀ tanh(W1ᵀ x + b1) + b2`, weights stored row-major as
/// `in_dim × hidden` and `hidden × out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePair {
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl AffinePair {
    pub fn zeros(in_dim: usize, hidden: usize, out_dim: usize) -> Self {
        AffinePair {
            in_dim,
            hidden,
            out_dim,
            w1: vec![0.0; in_dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * out_dim],
            b2: vec![0.0; out_dim],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, hidden: usize, out_dim: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(in_dim, hidden, out_dim);
        let a1 = (6.0 / (in_dim + hidden) as f64).sqrt();
        p.w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..=a1));
        let a2 = (6.0 / (hidden + out_dim) as f64).sqrt();
        p.w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..=a2));
        p
    }

    pub fn param_count(&self) -> usize {
        self.in_dim * self.hidden + self.hidden + self.hidden * self.out_dim + self.out_dim
    }

    /// Returns `(tanh hidden activations, output)`.
    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut h = self.b1.clone();
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
            h.iter_mut().zip(row).for_each(|(hj, w)| *hj += xi * w);
        }
        h.iter_mut().for_each(|v| *v = v.tanh());
        let mut out = self.b2.clone();
        for (j, &hj) in h.iter().enumerate() {
            let row = &self.w2[j * self.out_dim..(j + 1) * self.out_dim];
            out.iter_mut().zip(row).for_each(|(o, w)| *o += hj * w);
        }
        (h, out)
    }

    /// Accumulates parameter gradients into `grad` and returns `d loss / d x`.
    pub fn backward(&self, x: &[f64], h: &[f64], d_out: &[f64], grad: &mut AffinePair) -> Vec<f64> {
        grad.b2.iter_mut().zip(d_out).for_each(|(g, d)| *g += d);
        let mut d_pre = vec![0.0; self.hidden];
        for (j, &hj) in h.iter().enumerate() {
            let row = &self.w2[j * self.out_dim..(j + 1) * self.out_dim];
            let grow = &mut grad.w2[j * self.out_dim..(j + 1) * self.out_dim];
            let mut dh = 0.0;
            for k in 0..self.out_dim {
                grow[k] += hj * d_out[k];
                dh += row[k] * d_out[k];
            }
            d_pre[j] = dh * (1.0 - hj * hj);
        }
        grad.b1.iter_mut().zip(&d_pre).for_each(|(g, d)| *g += d);
        let mut dx = vec![0.0; self.in_dim];
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
            let grow = &mut grad.w1[i * self.hidden..(i + 1) * self.hidden];
            let mut acc = 0.0;
            for j in 0..self.hidden {
                grow[j] += xi * d_pre[j];
                acc += row[j] * d_pre[j];
            }
            dx[i] = acc;
        }
        dx
    }

    fn blocks(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn blocks_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

static NEXT_LAYER_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_LAYER_ID.fetch_add(1, Ordering::Relaxed)
}

/// Pre-network, circuit, post-network.
#[derive(Debug)]
pub struct HybridLayer {
    pre: AffinePair,
    circuit: Arc<CircuitSpec>,
    theta: Vec<f64>,
    post: AffinePair,
    outer_tanh: bool,
    id: u64,
    revision: u64,
}

impl Clone for HybridLayer {
    fn clone(&self) -> Self {
        HybridLayer {
            pre: self.pre.clone(),
            circuit: Arc::clone(&self.circuit),
            theta: self.theta.clone(),
            post: self.post.clone(),
            outer_tanh: self.outer_tanh,
            id: fresh_id(),
            revision: 0,
        }
    }
}

impl PartialEq for HybridLayer {
    fn eq(&self, other: &Self) -> bool {
        self.pre == other.pre
            && self.circuit == other.circuit
            && self.theta == other.theta
            && self.post == other.post
            && self.outer_tanh == other.outer_tanh
    }
}

/// Gradient of a scalar loss with respect to every parameter of a layer.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridGrads {
    pub pre: AffinePair,
    pub theta: Vec<f64>,
    pub post: AffinePair,
}

impl HybridGrads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.append_to(&mut out);
        out
    }

    pub fn append_to(&self, out: &mut Vec<f64>) {
        for b in self.pre.blocks() {
            out.extend_from_slice(b);
        }
        out.extend_from_slice(&self.theta);
        for b in self.post.blocks() {
            out.extend_from_slice(b);
        }
    }
}

/// Intermediates recorded by [`HybridLayer::forward`].
#[derive(Debug, Clone)]
pub struct HybridTape {
    layer_id: u64,
    revision: u64,
    x: Vec<f64>,
    pre_hidden: Vec<f64>,
    encoded: Vec<f64>,
    state: StateVector,
    expectations: Vec<f64>,
    post_hidden: Vec<f64>,
    output: Vec<f64>,
}

impl HybridTape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn encoded(&self) -> &[f64] {
        &self.encoded
    }

    pub fn expectations(&self) -> &[f64] {
        &self.expectations
    }
}

impl HybridLayer {
    pub fn new(pre: AffinePair, circuit: Arc<CircuitSpec>, theta: Vec<f64>, post: AffinePair) -> Result<Self> {
        let q = circuit.n_qubits();
        check_len("pre-network output vs qubits", q, pre.out_dim)?;
        check_len("post-network input vs qubits", q, post.in_dim)?;
        check_len("circuit angles", circuit.param_count(), theta.len())?;
        for (what, p) in [("pre-network", &pre), ("post-network", &post)] {
            check_len(what, p.in_dim * p.hidden, p.w1.len())?;
            check_len(what, p.hidden, p.b1.len())?;
            check_len(what, p.hidden * p.out_dim, p.w2.len())?;
            check_len(what, p.out_dim, p.b2.len())?;
        }
        Ok(HybridLayer {
            pre,
            circuit,
            theta,
            post,
            outer_tanh: false,
            id: fresh_id(),
            revision: 0,
        })
    }

    /// Glorot affine weights, zero biases, angles uniform in `[0, 2π)`.
    pub fn init<R: Rng + ?Sized>(
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        circuit: Arc<CircuitSpec>,
        rng: &mut R,
    ) -> Result<Self> {
        let q = circuit.n_qubits();
        let pre = AffinePair::glorot(in_dim, hidden, q, rng);
        let theta = (0..circuit.param_count()).map(|_| rng.gen_range(0.0..TAU)).collect();
        let post = AffinePair::glorot(q, hidden, out_dim, rng);
        Self::new(pre, circuit, theta, post)
    }

    pub fn with_outer_tanh(mut self, on: bool) -> Self {
        self.outer_tanh = on;
        self.revision += 1;
        self
    }

    pub fn in_dim(&self) -> usize {
        self.pre.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.post.out_dim
    }

    pub fn circuit(&self) -> &CircuitSpec {
        &self.circuit
    }

    pub fn pre(&self) -> &AffinePair {
        &self.pre
    }

    pub fn post(&self) -> &AffinePair {
        &self.post
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn outer_tanh(&self) -> bool {
        self.outer_tanh
    }

    pub fn pre_mut(&mut self) -> &mut AffinePair {
        self.revision += 1;
        &mut self.pre
    }

    pub fn post_mut(&mut self) -> &mut AffinePair {
        self.revision += 1;
        &mut self.post
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        self.revision += 1;
        &mut self.theta
    }

    pub fn affine_param_count(&self) -> usize {
        self.pre.param_count() + self.post.param_count()
    }

    pub fn circuit_param_count(&self) -> usize {
        self.theta.len()
    }

    pub fn param_count(&self) -> usize {
        self.affine_param_count() + self.circuit_param_count()
    }

    /// Flat parameters: pre (W1, b1, W2, b2), θ, post (W1, b1, W2, b2).
    pub fn append_params(&self, out: &mut Vec<f64>) {
        for b in self.pre.blocks() {
            out.extend_from_slice(b);
        }
        out.extend_from_slice(&self.theta);
        for b in self.post.blocks() {
            out.extend_from_slice(b);
        }
    }

    /// Reads parameters in `append_params` order, returns the number consumed.
    pub fn load_params(&mut self, src: &[f64]) -> Result<usize> {
        let n = self.param_count();
        if src.len() < n {
            return Err(Error::LengthMismatch {
                what: "hybrid layer parameters",
                expected: n,
                got: src.len(),
            });
        }
        let mut off = 0;
        let mut take = |dst: &mut Vec<f64>| {
            let len = dst.len();
            dst.copy_from_slice(&src[off..off + len]);
            off += len;
        };
        for b in self.pre.blocks_mut() {
            take(b);
        }
        take(&mut self.theta);
        for b in self.post.blocks_mut() {
            take(b);
        }
        self.revision += 1;
        Ok(off)
    }

    pub fn zero_grads(&self) -> HybridGrads {
        HybridGrads {
            pre: AffinePair::zeros(self.pre.in_dim, self.pre.hidden, self.pre.out_dim),
            theta: vec![0.0; self.theta.len()],
            post: AffinePair::zeros(self.post.in_dim, self.post.hidden, self.post.out_dim),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<HybridTape> {
        check_len("hybrid layer input", self.pre.in_dim, x.len())?;
        let (pre_hidden, encoded) = self.pre.forward(x);
        let state = self.circuit.program().run(&encoded, &self.theta)?;
        let expectations = state.expectations_z();
        let (post_hidden, mut output) = self.post.forward(&expectations);
        if self.outer_tanh {
            output.iter_mut().for_each(|v| *v = v.tanh());
        }
        Ok(HybridTape {
            layer_id: self.id,
            revision: self.revision,
            x: x.to_vec(),
            pre_hidden,
            encoded,
            state,
            expectations,
            post_hidden,
            output,
        })
    }

    /// Accumulates parameter gradients into `grads`, returns `d loss / d x`.
    pub fn backward_into(&self, tape: &HybridTape, upstream: &[f64], grads: &mut HybridGrads) -> Result<Vec<f64>> {
        if tape.layer_id != self.id || tape.revision != self.revision {
            return Err(Error::StaleTape);
        }
        check_len("upstream gradient", self.post.out_dim, upstream.len())?;
        let d_out: Vec<f64> = if self.outer_tanh {
            upstream
                .iter()
                .zip(&tape.output)
                .map(|(g, y)| g * (1.0 - y * y))
                .collect()
        } else {
            upstream.to_vec()
        };
        let d_f = self
            .post
            .backward(&tape.expectations, &tape.post_hidden, &d_out, &mut grads.post);
        let (d_theta, d_z) =
            self.circuit
                .program()
                .adjoint_vjp(&tape.state, &tape.encoded, &self.theta, &d_f)?;
        grads.theta.iter_mut().zip(&d_theta).for_each(|(g, d)| *g += d);
        Ok(self.pre.backward(&tape.x, &tape.pre_hidden, &d_z, &mut grads.pre))
    }

    pub fn backward(&self, tape: &HybridTape, upstream: &[f64]) -> Result<(HybridGrads, Vec<f64>)> {
        let mut grads = self.zero_grads();
        let dx = self.backward_into(tape, upstream, &mut grads)?;
        Ok((grads, dx))
    }
}

pub fn hybrid_forward(layer: &HybridLayer, x: &[f64]) -> Result<(Vec<f64>, HybridTape)> {
    let tape = layer.forward(x)?;
    Ok((tape.output.clone(), tape))
}

pub fn hybrid_backward(layer: &HybridLayer, tape: &HybridTape, upstream: &[f64]) -> Result<(HybridGrads, Vec<f64>)> {
    layer.backward(tape, upstream)
}
