//! Fully-connected Q-network: ReLU hidden layers, linear output, trained by
//! plain (optionally momentum) SGD on the squared TD error of the taken
//! action.

use std::io::{BufRead, Write};

use catan_core::actions::ActionMask;
use rand::Rng;
use thiserror::Error;

use crate::replay::Experience;

/// Input, two hidden layers, output.
pub const ARCHITECTURE: [usize; 4] = [160, 50, 50, 73];

const CHECKPOINT_HEADER: &str = "qnet v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("expected an input of {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("minibatch is empty")]
    EmptyBatch,
    #[error("a network needs at least an input and an output size")]
    BadShape,
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
}

/// Dense layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Layer {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>, relu: bool) {
        out.clear();
        for o in 0..self.outputs {
            let z = self.biases[o] + dot(self.row(o), x);
            out.push(if relu { z.max(0.0) } else { z });
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub layers: Vec<Layer>,
}

impl QNetwork {
    pub fn zeros(sizes: &[usize]) -> Result<QNetwork, NnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NnError::BadShape);
        }
        Ok(QNetwork { layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect() })
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init_weights<R: Rng>(sizes: &[usize], rng: &mut R) -> Result<QNetwork, NnError> {
        let mut net = QNetwork::zeros(sizes)?;
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..=limit);
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Activations of every layer for input `x`; the last entry is the Q-vector.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            let input = if l == 0 { x } else { &acts[l - 1] };
            layer.apply(input, &mut out, l != last);
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        if x.len() != self.inputs() {
            return Err(NnError::DimensionMismatch { expected: self.inputs(), got: x.len() });
        }
        Ok(self.activations(x).pop().expect("at least one layer"))
    }

    /// Largest Q-value over the legal actions of `mask`, `None` if none is legal.
    pub fn max_legal(&self, x: &[f64], mask: &ActionMask) -> Result<Option<f64>, NnError> {
        let q = self.forward(x)?;
        Ok(mask
            .legal_indices()
            .filter(|&i| i < q.len())
            .map(|i| q[i])
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))))
    }

    /// TD targets: `r` for terminal experiences, otherwise
    /// `r + gamma * max over legal a' of Q(s', a')` under this network.
    pub fn td_targets(&self, batch: &[&Experience], gamma: f64) -> Result<Vec<f64>, NnError> {
        batch
            .iter()
            .map(|e| {
                if e.terminal {
                    return Ok(e.reward);
                }
                Ok(e.reward + gamma * self.max_legal(&e.next_state, &e.next_mask)?.unwrap_or(0.0))
            })
            .collect()
    }

    /// Mean squared error between `targets` and the Q-values of the taken
    /// actions, with its gradient. Only the taken action's output carries
    /// error. With `td_clip`, the error used for the gradient is clipped.
    pub fn loss_and_gradient(
        &self,
        batch: &[&Experience],
        targets: &[f64],
        td_clip: Option<f64>,
    ) -> Result<(f64, QNetwork), NnError> {
        if batch.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let mut grad = QNetwork::zeros(&self.sizes())?;
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for (e, &y) in batch.iter().zip(targets) {
            if e.state.len() != self.inputs() {
                return Err(NnError::DimensionMismatch { expected: self.inputs(), got: e.state.len() });
            }
            let acts = self.activations(&e.state);
            let q = acts[acts.len() - 1][e.action];
            let err = y - q;
            loss += err * err;
            let err = td_clip.map_or(err, |c| err.clamp(-c, c));
            let mut delta = vec![0.0; self.outputs()];
            delta[e.action] = -2.0 * err / n;
            self.backprop(&e.state, &acts, delta, &mut grad);
        }
        Ok((loss / n, grad))
    }

    /// Adds d(loss)/d(theta) for one sample to `grad`, given d(loss)/d(output).
    fn backprop(&self, x: &[f64], acts: &[Vec<f64>], mut delta: Vec<f64>, grad: &mut QNetwork) {
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = if l == 0 { x } else { &acts[l - 1] };
            let g = &mut grad.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (w, &xi) in row.iter_mut().zip(input) {
                    *w += d * xi;
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, &w) in prev.iter_mut().zip(layer.row(o)) {
                    *p += d * w;
                }
            }
            // ReLU derivative: the unit was active iff its output is positive.
            for (p, &a) in prev.iter_mut().zip(&acts[l - 1]) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }

    /// `self -= lr * grad`.
    pub fn sgd_step(&mut self, grad: &QNetwork, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= lr * gb;
            }
        }
    }

    /// One plain SGD step on the TD loss against `target`; returns the loss
    /// before the step.
    pub fn train_minibatch(&mut self, target: &QNetwork, batch: &[&Experience], gamma: f64, lr: f64) -> Result<f64, NnError> {
        let targets = target.td_targets(batch, gamma)?;
        let (loss, grad) = self.loss_and_gradient(batch, &targets, None)?;
        self.sgd_step(&grad, lr);
        Ok(loss)
    }

    /// Text dump: a header, the layer sizes, then per layer one line of
    /// weights per output unit followed by one line of biases.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), NnError> {
        let io = |e: std::io::Error| NnError::Io(e.to_string());
        writeln!(w, "{CHECKPOINT_HEADER}").map_err(io)?;
        let sizes: Vec<String> = self.sizes().iter().map(|s| s.to_string()).collect();
        writeln!(w, "shape {}", sizes.join(" ")).map_err(io)?;
        for layer in &self.layers {
            for o in 0..layer.outputs {
                writeln!(w, "{}", join(layer.row(o))).map_err(io)?;
            }
            writeln!(w, "{}", join(&layer.biases)).map_err(io)?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<QNetwork, NnError> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String), NnError> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((_, Err(e))) => Err(NnError::Io(e.to_string())),
                None => Err(NnError::Checkpoint { line: 0, msg: format!("unexpected end of file, expected {what}") }),
            }
        };
        let (line, header) = next("header")?;
        if header.trim() != CHECKPOINT_HEADER {
            return Err(NnError::Checkpoint { line, msg: format!("bad header {header:?}") });
        }
        let (line, shape) = next("shape")?;
        let sizes: Vec<usize> = match shape.strip_prefix("shape ") {
            Some(rest) => rest
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| NnError::Checkpoint { line, msg: format!("bad size {s:?}") }))
                .collect::<Result<_, _>>()?,
            None => return Err(NnError::Checkpoint { line, msg: "missing shape line".into() }),
        };
        let mut net = QNetwork::zeros(&sizes).map_err(|_| NnError::Checkpoint { line, msg: "bad shape".into() })?;
        for layer in &mut net.layers {
            for o in 0..layer.outputs {
                let (line, text) = next("weights")?;
                let row = parse_row(&text, layer.inputs, line)?;
                layer.weights[o * layer.inputs..(o + 1) * layer.inputs].copy_from_slice(&row);
            }
            let (line, text) = next("biases")?;
            layer.biases = parse_row(&text, layer.outputs, line)?;
        }
        Ok(net)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_row(text: &str, n: usize, line: usize) -> Result<Vec<f64>, NnError> {
    let row: Vec<f64> = text
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| NnError::Checkpoint { line, msg: format!("bad number {s:?}") }))
        .collect::<Result<_, _>>()?;
    if row.len() != n {
        return Err(NnError::Checkpoint { line, msg: format!("expected {n} values, found {}", row.len()) });
    }
    Ok(row)
}

/// Frozen copy of the online network used inside TD targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetNetwork {
    pub net: QNetwork,
    pub steps_since_sync: u64,
}

impl TargetNetwork {
    pub fn new(online: &QNetwork) -> TargetNetwork {
        TargetNetwork { net: online.clone(), steps_since_sync: 0 }
    }

    pub fn sync(&mut self, online: &QNetwork) {
        self.net.clone_from(online);
        self.steps_since_sync = 0;
    }

    /// Counts one training step and syncs once `period` steps have passed.
    /// Returns true when a sync happened.
    pub fn tick(&mut self, online: &QNetwork, period: u64) -> bool {
        self.steps_since_sync += 1;
        if self.steps_since_sync >= period {
            self.sync(online);
            true
        } else {
            false
        }
    }
}

/// SGD with optional classical momentum.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Option<QNetwork>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64) -> Sgd {
        Sgd { learning_rate, momentum, velocity: None }
    }

    pub fn step(&mut self, net: &mut QNetwork, grad: &QNetwork) {
        if self.momentum == 0.0 {
            net.sgd_step(grad, self.learning_rate);
            return;
        }
        let v = self.velocity.get_or_insert_with(|| QNetwork::zeros(&net.sizes()).expect("shape of a live network"));
        for (vl, gl) in v.layers.iter_mut().zip(&grad.layers) {
            for (vw, gw) in vl.weights.iter_mut().zip(&gl.weights) {
                *vw = self.momentum * *vw + gw;
            }
            for (vb, gb) in vl.biases.iter_mut().zip(&gl.biases) {
                *vb = self.momentum * *vb + gb;
            }
        }
        net.sgd_step(v, self.learning_rate);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp(state: Vec<f64>, action: usize, reward: f64, next: Vec<f64>, mask: ActionMask, terminal: bool) -> Experience {
        Experience { state, action, reward, next_state: next, next_mask: mask, terminal }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::zeros(&ARCHITECTURE).unwrap();
        assert_eq!(net.forward(&[0.3; 160]).unwrap(), vec![0.0; 73]);
    }

    #[test]
    fn output_bias_passes_through() {
        let mut net = QNetwork::zeros(&ARCHITECTURE).unwrap();
        let last = net.layers.len() - 1;
        net.layers[last].biases = (0..73).map(|i| i as f64 * 0.5).collect();
        assert_eq!(net.forward(&[0.0; 160]).unwrap(), net.layers[last].biases);
    }

    #[test]
    fn forward_is_pure() {
        let net = QNetwork::init_weights(&ARCHITECTURE, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let x: Vec<f64> = (0..160).map(|i| (i % 7) as f64 / 7.0).collect();
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn wrong_input_width() {
        let net = QNetwork::zeros(&ARCHITECTURE).unwrap();
        assert_eq!(net.forward(&[0.0; 10]), Err(NnError::DimensionMismatch { expected: 160, got: 10 }));
    }

    #[test]
    fn xavier_bounds_and_zero_biases() {
        let net = QNetwork::init_weights(&ARCHITECTURE, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let limit = (6.0f64 / 210.0).sqrt();
        assert!((limit - 0.169).abs() < 1e-3);
        assert!(net.layers[0].weights.iter().all(|w| w.abs() <= limit));
        assert!(net.layers[0].weights.iter().any(|w| w.abs() > 0.9 * limit));
        assert!(net.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        let again = QNetwork::init_weights(&ARCHITECTURE, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(net, again);
        assert_eq!(net.num_parameters(), 160 * 50 + 50 + 50 * 50 + 50 + 50 * 73 + 73);
    }

    #[test]
    fn terminal_target_is_reward() {
        let net = QNetwork::zeros(&[4, 3, 3]).unwrap();
        let e = exp(vec![0.1; 4], 1, 2.0, vec![0.2; 4], ActionMask::none(), true);
        let targets = net.td_targets(&[&e], 0.7).unwrap();
        assert_eq!(targets, vec![2.0]);
        let (loss, _) = net.loss_and_gradient(&[&e], &targets, None).unwrap();
        assert_eq!(loss, 4.0);
    }

    #[test]
    fn myopic_targets() {
        let mut net = QNetwork::zeros(&[4, 3, 3]).unwrap();
        net.layers[1].biases = vec![5.0, 6.0, 7.0];
        let mut mask = ActionMask::none();
        mask.set(0, true);
        let e = exp(vec![0.1; 4], 1, 0.5, vec![0.2; 4], mask, false);
        assert_eq!(net.td_targets(&[&e], 0.0).unwrap(), vec![0.5]);
        assert_eq!(net.td_targets(&[&e], 0.5).unwrap(), vec![0.5 + 2.5]);
    }

    #[test]
    fn target_max_ignores_illegal_actions() {
        let mut net = QNetwork::zeros(&[4, 3, 3]).unwrap();
        // Huge values on illegal slots 0 and 2.
        net.layers[1].biases = vec![1e6, -3.0, 1e9];
        let mut mask = ActionMask::none();
        mask.set(1, true);
        let e = exp(vec![0.0; 4], 0, 1.0, vec![0.0; 4], mask, false);
        assert_eq!(net.td_targets(&[&e], 0.5).unwrap(), vec![1.0 - 1.5]);
    }

    #[test]
    fn empty_batch_rejected() {
        let mut net = QNetwork::zeros(&[4, 3, 3]).unwrap();
        let target = net.clone();
        assert_eq!(net.train_minibatch(&target, &[], 0.7, 0.01), Err(NnError::EmptyBatch));
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = QNetwork::init_weights(&ARCHITECTURE, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        let back = QNetwork::load(buf.as_slice()).unwrap();
        assert_eq!(back, net);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("qnet v1\nshape 160 50 50 73\n"));
    }

    #[test]
    fn checkpoint_errors() {
        assert!(matches!(QNetwork::load("nope\n".as_bytes()), Err(NnError::Checkpoint { line: 1, .. })));
        let short = "qnet v1\nshape 2 1\n0.5\n";
        assert!(matches!(QNetwork::load(short.as_bytes()), Err(NnError::Checkpoint { line: 3, .. })));
    }

    #[test]
    fn sync_copies_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut online = QNetwork::init_weights(&[4, 3, 3], &mut rng).unwrap();
        let mut target = TargetNetwork::new(&online);
        let before = target.net.clone();
        online.layers[0].weights[0] += 1.0;
        assert!(!target.tick(&online, 3));
        assert!(!target.tick(&online, 3));
        assert_eq!(target.net, before);
        assert!(target.tick(&online, 3));
        assert_eq!(target.net, online);
        assert_eq!(target.steps_since_sync, 0);
        let x = [0.3, 0.1, 0.9, 0.5];
        assert_eq!(target.net.forward(&x).unwrap(), online.forward(&x).unwrap());
        // Period 1 syncs after every step.
        online.layers[0].weights[1] += 1.0;
        assert!(target.tick(&online, 1));
        assert_eq!(target.net, online);
    }

    #[test]
    fn momentum_zero_matches_plain_sgd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = QNetwork::init_weights(&[4, 3, 3], &mut rng).unwrap();
        let grad = QNetwork::init_weights(&[4, 3, 3], &mut rng).unwrap();
        let mut a = net.clone();
        let mut b = net.clone();
        a.sgd_step(&grad, 0.1);
        Sgd::new(0.1, 0.0).step(&mut b, &grad);
        assert_eq!(a, b);
        let mut c = net.clone();
        let mut opt = Sgd::new(0.1, 0.9);
        opt.step(&mut c, &grad);
        opt.step(&mut c, &grad);
        // Second step moves by (1 + 0.9) gradients.
        let expected = net.layers[0].weights[0] - 0.1 * grad.layers[0].weights[0] * 2.9;
        assert!((c.layers[0].weights[0] - expected).abs() < 1e-12);
    }
}
