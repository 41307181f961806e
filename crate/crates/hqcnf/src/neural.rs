//! Minimal multilayer-perceptron machinery and the AdamW optimizer.
//!
//! All conditioner networks (s, t, r) are plain MLPs with tanh hidden
//! activations and an identity output layer, trained by hand-rolled reverse
//! mode. Everything is f64.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fully connected network. `weights[l]` is row-major fan_out x fan_in.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Cached activations from a forward pass. `activations[0]` is the input,
/// `activations[l+1]` the post-activation output of layer l.
#[derive(Debug, Clone)]
pub struct Tape {
    activations: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

/// Parameter-shaped gradient accumulator mirroring [`Mlp`].
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            for x in w {
                *x *= factor;
            }
        }
        for b in &mut self.biases {
            for x in b {
                *x *= factor;
            }
        }
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }
}

impl Mlp {
    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Canonical flat layout: per layer, row-major weights then biases.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }

    /// Reads parameters back from the canonical flat layout. Returns the
    /// number of values consumed.
    pub fn unflatten_from(&mut self, flat: &[f64]) -> Result<usize> {
        let needed = self.n_params();
        if flat.len() < needed {
            return Err(Error::DimensionMismatch {
                expected: needed,
                got: flat.len(),
            });
        }
        let mut pos = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let wn = w.len();
            w.copy_from_slice(&flat[pos..pos + wn]);
            pos += wn;
            let bn = b.len();
            b.copy_from_slice(&flat[pos..pos + bn]);
            pos += bn;
        }
        Ok(pos)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Tape> {
        if x.len() != self.input_size() {
            return Err(Error::DimensionMismatch {
                expected: self.input_size(),
                got: x.len(),
            });
        }
        let n_layers = self.weights.len();
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(x.to_vec());
        for l in 0..n_layers {
            let fan_in = self.sizes[l];
            let fan_out = self.sizes[l + 1];
            let input = &activations[l];
            let mut out = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                let mut acc = self.biases[l][o];
                for (wi, xi) in row.iter().zip(input) {
                    acc += wi * xi;
                }
                out[o] = if l + 1 < n_layers { acc.tanh() } else { acc };
            }
            activations.push(out);
        }
        Ok(Tape { activations })
    }

    /// Reverse-mode pass: gradients w.r.t. all parameters and the input.
    pub fn backward(&self, tape: &Tape, d_out: &[f64]) -> Result<(MlpGrads, Vec<f64>)> {
        let n_layers = self.weights.len();
        if tape.activations.len() != n_layers + 1 {
            return Err(Error::DimensionMismatch {
                expected: n_layers + 1,
                got: tape.activations.len(),
            });
        }
        if d_out.len() != self.output_size() {
            return Err(Error::DimensionMismatch {
                expected: self.output_size(),
                got: d_out.len(),
            });
        }
        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let fan_in = self.sizes[l];
            let fan_out = self.sizes[l + 1];
            let input = &tape.activations[l];
            if input.len() != fan_in {
                return Err(Error::DimensionMismatch {
                    expected: fan_in,
                    got: input.len(),
                });
            }
            let mut d_in = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                grads.biases[l][o] = d;
                let wrow = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                let grow = &mut grads.weights[l][o * fan_in..(o + 1) * fan_in];
                for i in 0..fan_in {
                    grow[i] = d * input[i];
                    d_in[i] += d * wrow[i];
                }
            }
            if l > 0 {
                // chain through tanh using the cached post-activation values
                for (di, a) in d_in.iter_mut().zip(&tape.activations[l]) {
                    *di *= 1.0 - a * a;
                }
            }
            delta = d_in;
        }
        Ok((grads, delta))
    }
}

/// Glorot-style uniform initialization; with `zero_last` the final layer is
/// all zeros so the containing flow starts at the identity.
pub fn init_mlp(sizes: &[usize], rng: &mut ChaCha8Rng, zero_last: bool) -> Mlp {
    assert!(sizes.len() >= 2, "need at least input and output sizes");
    let n_layers = sizes.len() - 1;
    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
        let last = l == n_layers - 1;
        let w = if last && zero_last {
            vec![0.0; fan_in * fan_out]
        } else {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect()
        };
        weights.push(w);
        biases.push(vec![0.0; fan_out]);
    }
    Mlp {
        sizes: sizes.to_vec(),
        weights,
        biases,
    }
}

/// AdamW hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// Per-parameter-group optimizer state.
#[derive(Debug, Clone)]
pub struct AdamWState {
    pub config: AdamWConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamWState {
    pub fn new(n_params: usize, config: AdamWConfig) -> Self {
        Self {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One decoupled-weight-decay Adam step:
    /// p <- p - lr * ( m_hat / (sqrt(v_hat) + eps) + lambda * p ).
    ///
    /// A non-finite gradient aborts before any state is touched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                got: grads.len(),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("adamw gradient"));
        }
        let c = self.config;
        self.t += 1;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * params[i]);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    #[test]
    fn zero_net_outputs_zero() {
        let mut rng = testutil::rng(0);
        let mut net = init_mlp(&[3, 4, 2], &mut rng, false);
        for w in &mut net.weights {
            w.fill(0.0);
        }
        let tape = net.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(tape.output(), &[0.0, 0.0]);
    }

    #[test]
    fn single_linear_layer() {
        let net = Mlp {
            sizes: vec![1, 1],
            weights: vec![vec![2.0]],
            biases: vec![vec![1.0]],
        };
        let tape = net.forward(&[3.0]).unwrap();
        assert_eq!(tape.output(), &[7.0]);
    }

    #[test]
    fn two_layer_hand_evaluation() {
        // hidden: tanh(0.5*x + 0.1), output: 2*h - 0.3
        let net = Mlp {
            sizes: vec![1, 1, 1],
            weights: vec![vec![0.5], vec![2.0]],
            biases: vec![vec![0.1], vec![-0.3]],
        };
        let x = 0.8_f64;
        let want = 2.0 * (0.5 * x + 0.1).tanh() - 0.3;
        let tape = net.forward(&[x]).unwrap();
        assert!((tape.output()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn identity_net_passes_gradient_through() {
        let net = Mlp {
            sizes: vec![2, 2],
            weights: vec![vec![1.0, 0.0, 0.0, 1.0]],
            biases: vec![vec![0.0, 0.0]],
        };
        let tape = net.forward(&[0.3, -0.7]).unwrap();
        let (_, dx) = net.backward(&tape, &[1.5, -2.5]).unwrap();
        assert_eq!(dx, vec![1.5, -2.5]);
    }

    #[test]
    fn linear_layer_weight_gradient_is_outer_product() {
        let net = Mlp {
            sizes: vec![2, 2],
            weights: vec![vec![0.1, 0.2, 0.3, 0.4]],
            biases: vec![vec![0.0, 0.0]],
        };
        let x = [2.0, -1.0];
        let dy = [3.0, 5.0];
        let tape = net.forward(&x).unwrap();
        let (grads, _) = net.backward(&tape, &dy).unwrap();
        assert_eq!(grads.weights[0], vec![6.0, -3.0, 10.0, -5.0]);
        assert_eq!(grads.biases[0], vec![3.0, 5.0]);
    }

    #[test]
    fn gradient_check_three_layer_net() {
        let mut rng = testutil::rng(42);
        let net = init_mlp(&[4, 6, 5, 3], &mut rng, false);
        let x = testutil::uniform_vec(&mut rng, 4, -1.0, 1.0);
        let d_out = testutil::uniform_vec(&mut rng, 3, -1.0, 1.0);
        let loss = |n: &Mlp, x: &[f64]| -> f64 {
            let t = n.forward(x).unwrap();
            t.output().iter().zip(&d_out).map(|(y, d)| y * d).sum()
        };
        let tape = net.forward(&x).unwrap();
        let (grads, dx) = net.backward(&tape, &d_out).unwrap();

        let h = 1e-5;
        // input gradient
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h);
            let denom = fd.abs().max(1e-3);
            assert!(
                (dx[i] - fd).abs() / denom < 1e-5,
                "dx[{i}]: {} vs {}",
                dx[i],
                fd
            );
        }
        // parameter gradient
        for l in 0..net.weights.len() {
            for k in 0..net.weights[l].len() {
                let mut np = net.clone();
                np.weights[l][k] += h;
                let mut nm = net.clone();
                nm.weights[l][k] -= h;
                let fd = (loss(&np, &x) - loss(&nm, &x)) / (2.0 * h);
                let denom = fd.abs().max(1e-3);
                assert!(
                    (grads.weights[l][k] - fd).abs() / denom < 1e-5,
                    "dw[{l}][{k}]: {} vs {}",
                    grads.weights[l][k],
                    fd
                );
            }
            for k in 0..net.biases[l].len() {
                let mut np = net.clone();
                np.biases[l][k] += h;
                let mut nm = net.clone();
                nm.biases[l][k] -= h;
                let fd = (loss(&np, &x) - loss(&nm, &x)) / (2.0 * h);
                let denom = fd.abs().max(1e-3);
                assert!((grads.biases[l][k] - fd).abs() / denom < 1e-5);
            }
        }
    }

    #[test]
    fn zero_last_gives_zero_output() {
        let mut rng = testutil::rng(1);
        let net = init_mlp(&[3, 8, 2], &mut rng, true);
        let tape = net.forward(&[0.2, -0.9, 1.4]).unwrap();
        assert_eq!(tape.output(), &[0.0, 0.0]);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = init_mlp(&[4, 8, 2], &mut testutil::rng(7), false);
        let b = init_mlp(&[4, 8, 2], &mut testutil::rng(7), false);
        assert_eq!(a, b);
    }

    #[test]
    fn param_count_arithmetic() {
        let net = init_mlp(&[4, 8, 2], &mut testutil::rng(0), false);
        assert_eq!(net.n_params(), 4 * 8 + 8 + 8 * 2 + 2);
    }

    #[test]
    fn flatten_roundtrip() {
        let mut rng = testutil::rng(13);
        let net = init_mlp(&[3, 5, 2], &mut rng, false);
        let mut flat = Vec::new();
        net.flatten_into(&mut flat);
        assert_eq!(flat.len(), net.n_params());
        let mut other = init_mlp(&[3, 5, 2], &mut testutil::rng(99), false);
        let used = other.unflatten_from(&flat).unwrap();
        assert_eq!(used, flat.len());
        assert_eq!(net, other);
    }

    #[test]
    fn adamw_zero_gradient_only_decays() {
        let mut st = AdamWState::new(
            2,
            AdamWConfig {
                weight_decay: 0.0,
                ..Default::default()
            },
        );
        let mut p = vec![1.0, -2.0];
        st.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn adamw_first_step_magnitude_is_lr() {
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut st = AdamWState::new(3, cfg);
        let mut p = vec![0.0; 3];
        st.step(&mut p, &[0.3, -7.0, 1e-3]).unwrap();
        for (x, g) in p.iter().zip([0.3_f64, -7.0, 1e-3]) {
            // bias correction makes m_hat/sqrt(v_hat) = sign(g) exactly on step 1
            assert!((x.abs() - cfg.lr).abs() < 1e-6, "step {x} for grad {g}");
            assert_eq!(x.signum(), -g.signum());
        }
    }

    #[test]
    fn adamw_hand_computed_quadratic_step() {
        // f(w) = w^2, w0 = 1, lr = 0.1, lambda = 0.01, default betas
        let cfg = AdamWConfig {
            lr: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        };
        let mut st = AdamWState::new(1, cfg);
        let mut p = vec![1.0];
        st.step(&mut p, &[2.0]).unwrap();
        let m_hat = (0.1 * 2.0) / (1.0 - 0.9);
        let v_hat: f64 = (0.001 * 4.0) / (1.0 - 0.999);
        let want = 1.0 - 0.1 * (m_hat / (v_hat.sqrt() + 1e-8) + 0.01 * 1.0);
        assert!((p[0] - want).abs() < 1e-12);
    }

    #[test]
    fn adamw_with_zero_decay_is_adam() {
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            lr: 0.05,
            ..Default::default()
        };
        let mut st = AdamWState::new(4, cfg);
        let mut rng = testutil::rng(5);
        let mut p = testutil::uniform_vec(&mut rng, 4, -1.0, 1.0);
        // hand-rolled plain Adam
        let mut hp = p.clone();
        let (mut m, mut v) = (vec![0.0; 4], vec![0.0; 4]);
        for t in 1..=10u32 {
            let g = testutil::uniform_vec(&mut rng, 4, -2.0, 2.0);
            st.step(&mut p, &g).unwrap();
            for i in 0..4 {
                m[i] = 0.9 * m[i] + 0.1 * g[i];
                v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
                let mh = m[i] / (1.0 - 0.9f64.powi(t as i32));
                let vh = v[i] / (1.0 - 0.999f64.powi(t as i32));
                hp[i] -= 0.05 * mh / (vh.sqrt() + 1e-8);
            }
            for i in 0..4 {
                assert!((p[i] - hp[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adamw_rejects_non_finite_gradient() {
        let mut st = AdamWState::new(1, AdamWConfig::default());
        let mut p = vec![1.0];
        assert!(st.step(&mut p, &[f64::NAN]).is_err());
        assert_eq!(p, vec![1.0]);
        assert_eq!(st.step_count(), 0);
    }
}
