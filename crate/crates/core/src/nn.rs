//! Dense feed-forward networks with exact gradients.
//!
//! The engine is deliberately small: affine layers with relu or identity
//! activations, softmax/cross-entropy losses, and backpropagation that
//! yields gradients with respect to both parameters and the input. The
//! input gradient is what every attack in this crate consumes.
//!
//! All arithmetic is `f64`. The relu subgradient at exactly 0 is taken as 0.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative at `z`; relu uses subgradient 0 at the kink.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One affine layer, weights stored row-major with shape `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
    in_dim: usize,
    out_dim: usize,
}

impl Layer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != in_dim * out_dim {
            return Err(Error::Dimension {
                expected: in_dim * out_dim,
                got: weights.len(),
            });
        }
        if bias.len() != out_dim {
            return Err(Error::Dimension {
                expected: out_dim,
                got: bias.len(),
            });
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "layer parameters must be finite".into(),
            ));
        }
        Ok(Layer {
            weights,
            bias,
            activation,
            in_dim,
            out_dim,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for row in 0..self.out_dim {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            let mut acc = self.bias[row];
            for (wi, xi) in w.iter().zip(input.iter()) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// A dense multilayer classifier over `input_dim` features and
/// `num_classes` logits. The last layer is always identity (raw logits).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
    input_dim: usize,
    num_classes: usize,
}

impl DenseNet {
    /// Builds a net from explicit layers, checking the dimension chain and
    /// the identity-output invariant.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Dimension {
                    expected: pair[0].out_dim,
                    got: pair[1].in_dim,
                });
            }
        }
        let last = layers.last().unwrap();
        if last.activation != Activation::Identity {
            return Err(Error::InvalidInput(
                "last layer must have identity activation".into(),
            ));
        }
        let input_dim = layers[0].in_dim;
        let num_classes = last.out_dim;
        Ok(DenseNet {
            layers,
            input_dim,
            num_classes,
        })
    }

    /// Seeded fan-based init: every parameter uniform in `[-s, s]` with
    /// `s = sqrt(6 / (in + out))` per layer; relu on hidden layers.
    pub fn seeded(
        input_dim: usize,
        hidden: &[usize],
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || num_classes == 0 {
            return Err(Error::InvalidInput("zero-sized network".into()));
        }
        let mut rng = stream_rng(seed, &[0x6e65_74]);
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(num_classes);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for i in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-s..=s))
                .collect();
            let bias: Vec<f64> = (0..fan_out).map(|_| rng.random_range(-s..=s)).collect();
            let act = if i + 1 == dims.len() - 1 {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(Layer::new(fan_in, fan_out, weights, bias, act)?);
        }
        DenseNet::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("input must be finite".into()));
        }
        Ok(())
    }

    /// Logits for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.affine(&cur, &mut next);
            for v in next.iter_mut() {
                *v = layer.activation.apply(*v);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Predicted class: argmax of logits, lowest index on exact ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut z = Vec::new();
            layer.affine(&cur, &mut z);
            let a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            cur = a.clone();
            post.push(a);
        }
        Ok(Trace {
            input: x.to_vec(),
            pre,
            post,
        })
    }

    /// Backpropagates `logit_grad` (the objective's gradient w.r.t. the
    /// logits) through the trace. Parameter gradients are computed only
    /// when `want_params` is set; the input gradient always is.
    fn backprop(&self, trace: &Trace, logit_grad: &[f64], want_params: bool) -> GradientBundle {
        let mut upstream = logit_grad.to_vec();
        let mut layer_grads: Vec<LayerGrad> = Vec::new();
        if want_params {
            layer_grads.resize_with(self.layers.len(), LayerGrad::default);
        }
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre[idx];
            let dz: Vec<f64> = upstream
                .iter()
                .zip(z.iter())
                .map(|(&g, &zi)| g * layer.activation.derivative(zi))
                .collect();
            let below: &[f64] = if idx == 0 {
                &trace.input
            } else {
                &trace.post[idx - 1]
            };
            if want_params {
                let mut wg = vec![0.0; layer.weights.len()];
                for (row, &d) in dz.iter().enumerate() {
                    let base = row * layer.in_dim;
                    for (col, &a) in below.iter().enumerate() {
                        wg[base + col] = d * a;
                    }
                }
                layer_grads[idx] = LayerGrad {
                    weights: wg,
                    bias: dz.clone(),
                };
            }
            let mut down = vec![0.0; layer.in_dim];
            for (row, &d) in dz.iter().enumerate() {
                let w = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                for (col, &wv) in w.iter().enumerate() {
                    down[col] += d * wv;
                }
            }
            upstream = down;
        }
        GradientBundle {
            layers: layer_grads,
            input: upstream,
        }
    }

    /// Cross-entropy loss and exact gradients w.r.t. all parameters and
    /// the input, evaluated at `(x, y)`.
    pub fn backward(&self, x: &[f64], y: usize) -> Result<(f64, GradientBundle)> {
        if y >= self.num_classes {
            return Err(Error::InvalidInput(format!(
                "label {y} out of range for {} classes",
                self.num_classes
            )));
        }
        let trace = self.forward_trace(x)?;
        let logits = trace.logits();
        let loss = cross_entropy(logits, y)?;
        let probs = softmax(logits);
        let mut seed = probs;
        seed[y] -= 1.0;
        Ok((loss, self.backprop(&trace, &seed, true)))
    }

    /// Gradient of an attack proxy objective w.r.t. the input. The inner
    /// max over targets is resolved at the current point (lowest index on
    /// ties) before differentiating.
    pub fn objective_gradient(&self, x: &[f64], objective: &AttackObjective) -> Result<Vec<f64>> {
        objective.validate(self.num_classes)?;
        let trace = self.forward_trace(x)?;
        let probs = softmax(trace.logits());
        let seed = objective.logit_grad(&probs);
        Ok(self.backprop(&trace, &seed, false).input)
    }

    /// Current value of an attack proxy objective at `x`.
    pub fn objective_value(&self, x: &[f64], objective: &AttackObjective) -> Result<f64> {
        objective.validate(self.num_classes)?;
        let probs = softmax(&self.forward(x)?);
        Ok(objective.value(&probs))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = NetDoc::from_net(self);
        let text = serde_json::to_string_pretty(&doc)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc: NetDoc = serde_json::from_str(&text)?;
        doc.into_net()
    }
}

struct Trace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Trace {
    fn logits(&self) -> &[f64] {
        self.pre.last().unwrap()
    }
}

/// Gradients for one layer, same shapes as the layer's parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient of a scalar objective w.r.t. all parameters and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrad>,
    pub input: Vec<f64>,
}

impl GradientBundle {
    /// Accumulates `other` into `self` (same shapes).
    pub fn add_assign(&mut self, other: &GradientBundle) {
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            for (x, y) in a.weights.iter_mut().zip(b.weights.iter()) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(b.bias.iter()) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.layers.iter_mut() {
            for v in g.weights.iter_mut() {
                *v *= factor;
            }
            for v in g.bias.iter_mut() {
                *v *= factor;
            }
        }
    }
}

/// Differentiable proxy objectives used by input-space attacks.
///
/// All are functions of the class probabilities at `x`; the max over a
/// target set is resolved by the current probabilities with lowest-index
/// tie-break, then the chosen branch is differentiated.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackObjective {
    /// `max_{t ∈ T} p̂(t | x)` — the multi-target response proxy.
    TargetSet(Vec<usize>),
    /// `max_{t ∈ T} p̂(t | x) − max_{t ∉ T} p̂(t | x)` — penalized variant.
    PenalizedTargetSet(Vec<usize>),
    /// `max_t w_t · p̂(t | x)` over strictly positive weights `w`.
    WeightedTargets(Vec<f64>),
}

impl AttackObjective {
    fn validate(&self, num_classes: usize) -> Result<()> {
        match self {
            AttackObjective::TargetSet(t) | AttackObjective::PenalizedTargetSet(t) => {
                if t.is_empty() {
                    return Err(Error::InvalidInput("empty target set".into()));
                }
                if t.iter().any(|&c| c >= num_classes) {
                    return Err(Error::InvalidInput("target out of range".into()));
                }
                if matches!(self, AttackObjective::PenalizedTargetSet(_))
                    && t.len() >= num_classes
                {
                    return Err(Error::InvalidInput(
                        "penalized objective needs a non-empty complement".into(),
                    ));
                }
            }
            AttackObjective::WeightedTargets(w) => {
                if w.len() != num_classes {
                    return Err(Error::Dimension {
                        expected: num_classes,
                        got: w.len(),
                    });
                }
                if !w.iter().any(|&v| v > 0.0) {
                    return Err(Error::InvalidInput(
                        "weighted objective needs a positive weight".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, probs: &[f64]) -> f64 {
        match self {
            AttackObjective::TargetSet(t) => probs[argmax_over(probs, t)],
            AttackObjective::PenalizedTargetSet(t) => {
                let complement = complement_of(t, probs.len());
                probs[argmax_over(probs, t)] - probs[argmax_over(probs, &complement)]
            }
            AttackObjective::WeightedTargets(w) => {
                let scored: Vec<f64> = probs.iter().zip(w.iter()).map(|(p, wv)| p * wv).collect();
                let best = argmax(&scored);
                scored[best]
            }
        }
    }

    /// Gradient of the objective w.r.t. the logits at the given probs.
    fn logit_grad(&self, probs: &[f64]) -> Vec<f64> {
        match self {
            AttackObjective::TargetSet(t) => prob_logit_grad(probs, argmax_over(probs, t), 1.0),
            AttackObjective::PenalizedTargetSet(t) => {
                let complement = complement_of(t, probs.len());
                let plus = argmax_over(probs, t);
                let minus = argmax_over(probs, &complement);
                let mut g = prob_logit_grad(probs, plus, 1.0);
                let g2 = prob_logit_grad(probs, minus, -1.0);
                for (a, b) in g.iter_mut().zip(g2.iter()) {
                    *a += b;
                }
                g
            }
            AttackObjective::WeightedTargets(w) => {
                let scored: Vec<f64> = probs.iter().zip(w.iter()).map(|(p, wv)| p * wv).collect();
                let best = argmax(&scored);
                prob_logit_grad(probs, best, w[best])
            }
        }
    }
}

/// Gradient of `scale · p̂(target)` w.r.t. the logits:
/// `scale · p_t · (e_t − p)`.
fn prob_logit_grad(probs: &[f64], target: usize, scale: f64) -> Vec<f64> {
    let pt = probs[target];
    probs
        .iter()
        .enumerate()
        .map(|(j, &pj)| {
            let indicator = if j == target { 1.0 } else { 0.0 };
            scale * pt * (indicator - pj)
        })
        .collect()
}

fn complement_of(targets: &[usize], num_classes: usize) -> Vec<usize> {
    (0..num_classes).filter(|c| !targets.contains(c)).collect()
}

/// Index of the maximum value, lowest index on exact ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Argmax restricted to `candidates`; among ties the candidate with the
/// lowest class index wins regardless of its position in the list.
fn argmax_over(values: &[f64], candidates: &[usize]) -> usize {
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    let mut best = sorted[0];
    for &c in &sorted[1..] {
        if values[c] > values[best] {
            best = c;
        }
    }
    best
}

/// Numerically stable softmax (max-subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `−log softmax(logits)[y]`, computed through log-sum-exp.
pub fn cross_entropy(logits: &[f64], y: usize) -> Result<f64> {
    if y >= logits.len() {
        return Err(Error::InvalidInput(format!(
            "label {y} out of range for {} classes",
            logits.len()
        )));
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|&z| (z - m).exp()).sum::<f64>().ln();
    Ok(lse - logits[y])
}

/// Momentum state for SGD, shaped like the network parameters.
#[derive(Debug, Clone)]
pub struct Velocity {
    layers: Vec<LayerGrad>,
}

impl Velocity {
    pub fn zeros(net: &DenseNet) -> Self {
        Velocity {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }
}

/// One SGD-with-momentum update: `v ← μ·v + g`, `θ ← θ − lr·v`.
pub fn sgd_step(net: &mut DenseNet, grads: &GradientBundle, lr: f64, momentum: f64, vel: &mut Velocity) {
    assert!(lr > 0.0, "learning rate must be positive");
    assert!((0.0..1.0).contains(&momentum), "momentum must be in [0,1)");
    assert_eq!(grads.layers.len(), net.layers.len(), "gradient shape mismatch");
    for ((layer, grad), v) in net
        .layers
        .iter_mut()
        .zip(grads.layers.iter())
        .zip(vel.layers.iter_mut())
    {
        for ((w, &g), vw) in layer
            .weights
            .iter_mut()
            .zip(grad.weights.iter())
            .zip(v.weights.iter_mut())
        {
            *vw = momentum * *vw + g;
            *w -= lr * *vw;
        }
        for ((b, &g), vb) in layer
            .bias
            .iter_mut()
            .zip(grad.bias.iter())
            .zip(v.bias.iter_mut())
        {
            *vb = momentum * *vb + g;
            *b -= lr * *vb;
        }
    }
}

/// Serialized network document: `{input_dim, num_classes, layers:[{rows,
/// cols, activation, weights, biases}]}` with row-major weights.
#[derive(Debug, Serialize, Deserialize)]
pub struct NetDoc {
    pub input_dim: usize,
    pub num_classes: usize,
    pub layers: Vec<LayerDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayerDoc {
    pub rows: usize,
    pub cols: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl NetDoc {
    pub fn from_net(net: &DenseNet) -> Self {
        NetDoc {
            input_dim: net.input_dim,
            num_classes: net.num_classes,
            layers: net
                .layers
                .iter()
                .map(|l| LayerDoc {
                    rows: l.out_dim,
                    cols: l.in_dim,
                    activation: l.activation,
                    weights: l.weights.clone(),
                    biases: l.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn into_net(self) -> Result<DenseNet> {
        let layers: Result<Vec<Layer>> = self
            .layers
            .into_iter()
            .map(|d| Layer::new(d.cols, d.rows, d.weights, d.biases, d.activation))
            .collect();
        let net = DenseNet::new(layers?)?;
        if net.input_dim != self.input_dim || net.num_classes != self.num_classes {
            return Err(Error::InvalidInput(
                "network document header does not match layer shapes".into(),
            ));
        }
        Ok(net)
    }
}
