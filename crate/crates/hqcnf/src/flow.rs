//! The hybrid coupling layer and the multi-layer flow built from it.
//!
//! Each layer keeps the first d1 coordinates fixed, applies an affine
//! transform to coordinates d1..d2, and evolves the remaining complex segment
//! through the parameterized circuit. The circuit is unitary, so its realified
//! Jacobian block has determinant one and the layer's log-determinant is just
//! the sum of the scale outputs.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::neural::{init_mlp, Mlp, Tape};
use crate::objective::{base_log_density, BaseDensitySpec};
use crate::qsim::{apply_circuit, AnsatzSpec, Direction};

/// Bound for the scale output: s = S_MAX * tanh(s_raw / S_MAX), so exp(s)
/// stays within e^{+-S_MAX}.
pub const S_MAX: f64 = 5.0;

/// Index split of one sample: classical 0..d2 (conditioner 0..d1), quantum
/// d2..total as a complex vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Splits {
    pub d1: usize,
    pub d2: usize,
    pub total: usize,
}

impl Splits {
    pub fn new(d1: usize, d2: usize, total: usize) -> Result<Self> {
        let s = Self { d1, d2, total };
        if !(1 <= d1 && d1 < d2 && d2 <= total) {
            return Err(Error::Config(format!(
                "invalid splits d1={d1}, d2={d2}, D={total}"
            )));
        }
        if s.quantum_dim() > 0 && !s.quantum_dim().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(s.quantum_dim()));
        }
        Ok(s)
    }

    /// Length of the complex quantum segment (may be zero for a pure-classical
    /// model).
    pub fn quantum_dim(&self) -> usize {
        self.total - self.d2
    }

    pub fn mid_dim(&self) -> usize {
        self.d2 - self.d1
    }

    /// Dimension of the realified view: d2 + 2 (D - d2).
    pub fn real_dim(&self) -> usize {
        self.d2 + 2 * self.quantum_dim()
    }

    pub fn n_qubits(&self) -> Option<usize> {
        let q = self.quantum_dim();
        (q > 0).then(|| q.trailing_zeros() as usize)
    }
}

/// One data point: real classical segment plus complex quantum segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector {
    pub classical: Vec<f64>,
    pub quantum: Vec<Complex64>,
}

impl SampleVector {
    pub fn zeros(splits: Splits) -> Self {
        Self {
            classical: vec![0.0; splits.d2],
            quantum: vec![Complex64::ZERO; splits.quantum_dim()],
        }
    }

    pub fn conforms(&self, splits: Splits) -> bool {
        self.classical.len() == splits.d2 && self.quantum.len() == splits.quantum_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.classical.iter().all(|x| x.is_finite())
            && self
                .quantum
                .iter()
                .all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Realified view: classical coordinates followed by interleaved
    /// (re, im) pairs of the quantum segment.
    pub fn realify(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.classical.len() + 2 * self.quantum.len());
        out.extend_from_slice(&self.classical);
        for a in &self.quantum {
            out.push(a.re);
            out.push(a.im);
        }
        out
    }

    pub fn from_realified(flat: &[f64], splits: Splits) -> Result<Self> {
        if flat.len() != splits.real_dim() {
            return Err(Error::DimensionMismatch {
                expected: splits.real_dim(),
                got: flat.len(),
            });
        }
        let classical = flat[..splits.d2].to_vec();
        let quantum = flat[splits.d2..]
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        Ok(Self { classical, quantum })
    }
}

/// Quantum half of a coupling layer: the conditioner r mapping the fixed
/// segment to circuit parameters, and the circuit template itself.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumBlock {
    pub r_net: Mlp,
    pub ansatz: AnsatzSpec,
}

/// All parameters of one coupling layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLayer {
    pub splits: Splits,
    pub s_net: Mlp,
    pub t_net: Mlp,
    pub quantum: Option<QuantumBlock>,
}

impl CouplingLayer {
    /// Identity-initialized layer: hidden weights random, every final layer
    /// zeroed so the map starts as y = x.
    pub fn init(
        splits: Splits,
        hidden: usize,
        ansatz: Option<AnsatzSpec>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let mid = splits.mid_dim();
        let s_net = init_mlp(&[splits.d1, hidden, mid], rng, true);
        let t_net = init_mlp(&[splits.d1, hidden, mid], rng, true);
        let quantum = match (splits.quantum_dim(), ansatz) {
            (0, None) => None,
            (0, Some(_)) => {
                return Err(Error::Config(
                    "ansatz given but quantum segment is empty".into(),
                ))
            }
            (_, None) => return Err(Error::Config("quantum segment requires an ansatz".into())),
            (q, Some(ansatz)) => {
                if ansatz.dim() != q {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        got: ansatz.dim(),
                    });
                }
                let r_net = init_mlp(&[splits.d1, hidden, ansatz.n_params], rng, true);
                Some(QuantumBlock { r_net, ansatz })
            }
        };
        Ok(Self {
            splits,
            s_net,
            t_net,
            quantum,
        })
    }

    pub fn n_params(&self) -> usize {
        self.s_net.n_params()
            + self.t_net.n_params()
            + self.quantum.as_ref().map_or(0, |q| q.r_net.n_params())
    }

    /// Canonical flat parameter layout of one layer: s net, t net, r net.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        self.s_net.flatten_into(out);
        self.t_net.flatten_into(out);
        if let Some(q) = &self.quantum {
            q.r_net.flatten_into(out);
        }
    }

    /// Reads parameters back from the canonical flat layout. Returns the
    /// number of values consumed.
    pub fn unflatten_from(&mut self, flat: &[f64]) -> Result<usize> {
        let mut pos = self.s_net.unflatten_from(flat)?;
        pos += self.t_net.unflatten_from(&flat[pos..])?;
        if let Some(q) = &mut self.quantum {
            pos += q.r_net.unflatten_from(&flat[pos..])?;
        }
        Ok(pos)
    }
}

/// Conditioner outputs at one evaluation point, with tapes for reverse mode.
pub struct ConditionerEval {
    pub s_tape: Tape,
    pub t_tape: Tape,
    pub r_tape: Option<Tape>,
    /// squashed scale, S_MAX * tanh(s_raw / S_MAX)
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub phi: Vec<f64>,
}

fn eval_conditioners(layer: &CouplingLayer, cond: &[f64]) -> Result<ConditionerEval> {
    let s_tape = layer.s_net.forward(cond)?;
    let t_tape = layer.t_net.forward(cond)?;
    let scale: Vec<f64> = s_tape
        .output()
        .iter()
        .map(|&r| S_MAX * (r / S_MAX).tanh())
        .collect();
    let shift = t_tape.output().to_vec();
    if !scale.iter().chain(&shift).all(|x| x.is_finite()) {
        return Err(Error::NonFinite("coupling conditioner output"));
    }
    let (r_tape, phi) = match &layer.quantum {
        Some(q) => {
            let tape = q.r_net.forward(cond)?;
            let phi = tape.output().to_vec();
            if !phi.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("circuit parameters"));
            }
            (Some(tape), phi)
        }
        None => (None, Vec::new()),
    };
    Ok(ConditionerEval {
        s_tape,
        t_tape,
        r_tape,
        scale,
        shift,
        phi,
    })
}

/// Forward map of one layer. Returns the output and the layer's
/// log-determinant, which is the sum of the scale outputs (the unitary block
/// contributes log 1 = 0).
pub fn layer_forward(x: &SampleVector, layer: &CouplingLayer) -> Result<(SampleVector, f64)> {
    let sp = layer.splits;
    if !x.conforms(sp) {
        return Err(Error::DimensionMismatch {
            expected: sp.d2,
            got: x.classical.len(),
        });
    }
    let cond = &x.classical[..sp.d1];
    let ev = eval_conditioners(layer, cond)?;
    let mut y = x.clone();
    for j in 0..sp.mid_dim() {
        y.classical[sp.d1 + j] = x.classical[sp.d1 + j] * ev.scale[j].exp() + ev.shift[j];
    }
    if let Some(q) = &layer.quantum {
        apply_circuit(&mut y.quantum, &q.ansatz, &ev.phi, Direction::Forward)?;
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("layer forward output"));
    }
    Ok((y, ev.scale.iter().sum()))
}

/// Everything the backward pass needs about one inverse-layer evaluation.
pub struct InverseTape {
    pub cond: ConditionerEval,
    /// quantum segment of the inverse input y
    pub y_quantum: Vec<Complex64>,
    /// the inverse output x
    pub x: SampleVector,
}

/// Exact inverse of [`layer_forward`]. The conditioners see y[0..d1], which
/// equals x[0..d1]; the quantum segment is undone with the adjoint circuit.
pub fn layer_inverse(y: &SampleVector, layer: &CouplingLayer) -> Result<(SampleVector, f64)> {
    let (x, logdet, _) = layer_inverse_tape(y, layer)?;
    Ok((x, logdet))
}

/// Inverse pass that also returns the tape used for gradients.
pub fn layer_inverse_tape(
    y: &SampleVector,
    layer: &CouplingLayer,
) -> Result<(SampleVector, f64, InverseTape)> {
    let sp = layer.splits;
    if !y.conforms(sp) {
        return Err(Error::DimensionMismatch {
            expected: sp.d2,
            got: y.classical.len(),
        });
    }
    let cond = &y.classical[..sp.d1];
    let ev = eval_conditioners(layer, cond)?;
    let mut x = y.clone();
    for j in 0..sp.mid_dim() {
        x.classical[sp.d1 + j] = (y.classical[sp.d1 + j] - ev.shift[j]) * (-ev.scale[j]).exp();
    }
    if let Some(q) = &layer.quantum {
        apply_circuit(&mut x.quantum, &q.ansatz, &ev.phi, Direction::Adjoint)?;
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("layer inverse output"));
    }
    let logdet = ev.scale.iter().sum();
    let tape = InverseTape {
        y_quantum: y.quantum.clone(),
        x: x.clone(),
        cond: ev,
    };
    Ok((x, logdet, tape))
}

/// Cyclic left rotation of the classical indices by d1 positions, applied
/// between layers so the fixed segment changes each layer.
pub fn rotate_classical(classical: &mut [f64], d1: usize) {
    let n = classical.len();
    if n > 0 {
        classical.rotate_left(d1 % n);
    }
}

pub fn rotate_classical_inverse(classical: &mut [f64], d1: usize) {
    let n = classical.len();
    if n > 0 {
        classical.rotate_right(d1 % n);
    }
}

/// Ordered stack of coupling layers with inter-layer feature rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    pub layers: Vec<CouplingLayer>,
    pub base: BaseDensitySpec,
}

impl FlowModel {
    pub fn splits(&self) -> Splits {
        self.layers[0].splits
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("flow needs at least one layer".into()));
        }
        let sp = self.splits();
        if self.layers.iter().any(|l| l.splits != sp) {
            return Err(Error::Config(
                "all layers must share the same splits".into(),
            ));
        }
        if self.base.splits != sp {
            return Err(Error::Config(
                "base density splits disagree with layers".into(),
            ));
        }
        Ok(())
    }

    /// Total quantum circuit parameter count across unique ansatz slots of one
    /// layer (all layers share the template).
    pub fn quantum_params_per_layer(&self) -> usize {
        self.layers[0]
            .quantum
            .as_ref()
            .map_or(0, |q| q.ansatz.n_params)
    }
}

/// z -> x through all layers, with the total forward log-determinant.
pub fn flow_forward(z: &SampleVector, model: &FlowModel) -> Result<(SampleVector, f64)> {
    let sp = model.splits();
    let mut x = z.clone();
    let mut total = 0.0;
    let last = model.layers.len() - 1;
    for (l, layer) in model.layers.iter().enumerate() {
        let (y, logdet) = layer_forward(&x, layer)?;
        x = y;
        total += logdet;
        if l < last {
            rotate_classical(&mut x.classical, sp.d1);
        }
    }
    Ok((x, total))
}

/// x -> z through all layers in reverse. Returns the same total
/// log-determinant value as the forward pass at the matched point.
pub fn flow_inverse(x: &SampleVector, model: &FlowModel) -> Result<(SampleVector, f64)> {
    let sp = model.splits();
    let mut z = x.clone();
    let mut total = 0.0;
    for l in (0..model.layers.len()).rev() {
        let (prev, logdet) = layer_inverse(&z, &model.layers[l])?;
        z = prev;
        total += logdet;
        if l > 0 {
            rotate_classical_inverse(&mut z.classical, sp.d1);
        }
    }
    Ok((z, total))
}

/// Exact log-density of the model at x: log pi(f^-1(x)) - log|det J|.
pub fn log_prob(x: &SampleVector, model: &FlowModel) -> Result<f64> {
    let (z, logdet) = flow_inverse(x, model)?;
    let lp = base_log_density(&z, &model.base) - logdet;
    if !lp.is_finite() {
        return Err(Error::NonFinite("log_prob"));
    }
    Ok(lp)
}
