//! Dense statevector simulation of the parameterized circuit ansatz.
//!
//! States are stored as 2^n complex amplitudes with little-endian qubit
//! ordering: qubit 0 is the least significant bit of the basis index. Gate
//! kernels mutate the amplitude buffer in place with stride iteration, so each
//! gate costs O(2^n) rather than a dense matrix product.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense-matrix extraction is refused above this qubit count.
pub const MAX_DENSE_QUBITS: usize = 10;

/// Pure state of `n` qubits: 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Wraps an amplitude vector. The length must be a power of two.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(amps.len()));
        }
        Ok(Self { amps })
    }

    /// The basis state |0...0> on `n` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[0] = Complex64::ONE;
        Self { amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Encodes a complex feature vector as a normalized statevector.
///
/// Returns the state together with the Euclidean norm of the input, so callers
/// can treat the circuit as a linear map on unnormalized vectors.
pub fn amplitude_encode(v: &[Complex64]) -> Result<(Statevector, f64)> {
    if !v.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(v.len()));
    }
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let amps = v.iter().map(|a| a / norm).collect();
    Ok((Statevector { amps }, norm))
}

/// Real-vector convenience wrapper around [`amplitude_encode`].
pub fn amplitude_encode_real(v: &[f64]) -> Result<(Statevector, f64)> {
    let cv: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    amplitude_encode(&cv)
}

/// Rotation axis of a parameterized gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Gate kinds supported by the ansatz template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
}

impl GateKind {
    fn axis(self) -> Option<Axis> {
        match self {
            GateKind::Rx => Some(Axis::X),
            GateKind::Ry => Some(Axis::Y),
            GateKind::Rz => Some(Axis::Z),
            GateKind::Cnot => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cnot => "cnot",
        }
    }
}

/// Angle source for a rotation gate: a trainable slot of phi, or a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Slot(usize),
    Fixed(f64),
}

/// One gate in the ansatz template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub angle: Option<Angle>,
}

impl GateOp {
    pub fn rotation(kind: GateKind, target: usize, angle: Angle) -> Self {
        Self {
            kind,
            target,
            control: None,
            angle: Some(angle),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            target,
            control: Some(control),
            angle: None,
        }
    }
}

/// The fixed parameterized-circuit template U(phi).
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub n_params: usize,
    pub gates: Vec<GateOp>,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, n_params: usize, gates: Vec<GateOp>) -> Result<Self> {
        let spec = Self {
            n_qubits,
            n_params,
            gates,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Checks qubit ranges, slot ranges, and that every slot is referenced.
    pub fn validate(&self) -> Result<()> {
        let mut used = vec![false; self.n_params];
        for g in &self.gates {
            if g.target >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: g.target,
                    n_qubits: self.n_qubits,
                });
            }
            if let Some(c) = g.control {
                if c >= self.n_qubits {
                    return Err(Error::QubitOutOfRange {
                        index: c,
                        n_qubits: self.n_qubits,
                    });
                }
                if c == g.target {
                    return Err(Error::EqualControlTarget(c));
                }
            }
            if let Some(Angle::Slot(s)) = g.angle {
                if s >= self.n_params {
                    return Err(Error::SlotOutOfRange {
                        slot: s,
                        n_params: self.n_params,
                    });
                }
                used[s] = true;
            }
        }
        if let Some(slot) = used.iter().position(|u| !u) {
            return Err(Error::UnusedSlot(slot));
        }
        Ok(())
    }

    /// Hardware-efficient template: per block one RY and one RZ per qubit,
    /// then a CNOT ring (qubit i controls i+1 mod n). 2*n*blocks parameters;
    /// n = 5, blocks = 4 gives the default 40-parameter budget.
    pub fn hardware_efficient(n_qubits: usize, blocks: usize) -> Self {
        let mut gates = Vec::new();
        let mut slot = 0;
        for _ in 0..blocks {
            for q in 0..n_qubits {
                gates.push(GateOp::rotation(GateKind::Ry, q, Angle::Slot(slot)));
                slot += 1;
            }
            for q in 0..n_qubits {
                gates.push(GateOp::rotation(GateKind::Rz, q, Angle::Slot(slot)));
                slot += 1;
            }
            if n_qubits >= 2 {
                for q in 0..n_qubits {
                    gates.push(GateOp::cnot(q, (q + 1) % n_qubits));
                }
            }
        }
        Self {
            n_qubits,
            n_params: slot,
            gates,
        }
    }

    /// Plain-text serialization, one gate per line (`ry q0 p3`, `cnot q0 q1`).
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\nparams {}\n", self.n_qubits, self.n_params);
        for g in &self.gates {
            match g.kind {
                GateKind::Cnot => {
                    out.push_str(&format!("cnot q{} q{}\n", g.control.unwrap(), g.target));
                }
                _ => {
                    let angle = match g.angle.unwrap() {
                        Angle::Slot(s) => format!("p{s}"),
                        Angle::Fixed(a) => format!("{a}"),
                    };
                    out.push_str(&format!("{} q{} {}\n", g.kind.name(), g.target, angle));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut n_params = None;
        let mut gates = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse(format!("line {}: {}", lineno + 1, msg));
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "qubits" if toks.len() == 2 => {
                    n_qubits = Some(toks[1].parse().map_err(|_| bad("bad qubit count"))?);
                }
                "params" if toks.len() == 2 => {
                    n_params = Some(toks[1].parse().map_err(|_| bad("bad param count"))?);
                }
                "cnot" if toks.len() == 3 => {
                    let c = parse_qubit(toks[1]).ok_or_else(|| bad("bad control qubit"))?;
                    let t = parse_qubit(toks[2]).ok_or_else(|| bad("bad target qubit"))?;
                    gates.push(GateOp::cnot(c, t));
                }
                "rx" | "ry" | "rz" if toks.len() == 3 => {
                    let kind = match toks[0] {
                        "rx" => GateKind::Rx,
                        "ry" => GateKind::Ry,
                        _ => GateKind::Rz,
                    };
                    let q = parse_qubit(toks[1]).ok_or_else(|| bad("bad target qubit"))?;
                    let angle = if let Some(slot) = toks[2].strip_prefix('p') {
                        Angle::Slot(slot.parse().map_err(|_| bad("bad slot index"))?)
                    } else {
                        Angle::Fixed(toks[2].parse().map_err(|_| bad("bad fixed angle"))?)
                    };
                    gates.push(GateOp::rotation(kind, q, angle));
                }
                other => return Err(bad(&format!("unrecognized gate line '{other} ...'"))),
            }
        }
        let spec = Self {
            n_qubits: n_qubits.ok_or_else(|| Error::Parse("missing 'qubits' line".into()))?,
            n_params: n_params.ok_or_else(|| Error::Parse("missing 'params' line".into()))?,
            gates,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_qubit(tok: &str) -> Option<usize> {
    tok.strip_prefix('q')?.parse().ok()
}

fn check_qubit(amps: &[Complex64], qubit: usize) -> Result<usize> {
    let n = amps.len().trailing_zeros() as usize;
    if qubit >= n {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            n_qubits: n,
        });
    }
    Ok(n)
}

/// Applies exp(-i*angle*sigma_axis/2) to the target qubit, in place.
pub fn apply_rotation(amps: &mut [Complex64], axis: Axis, qubit: usize, angle: f64) -> Result<()> {
    check_qubit(amps, qubit)?;
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let stride = 1usize << qubit;
    match axis {
        Axis::X => {
            let b = Complex64::new(0.0, -s);
            for_pairs(amps, stride, |a0, a1| {
                let (x0, x1) = (*a0, *a1);
                *a0 = c * x0 + b * x1;
                *a1 = b * x0 + c * x1;
            });
        }
        Axis::Y => {
            for_pairs(amps, stride, |a0, a1| {
                let (x0, x1) = (*a0, *a1);
                *a0 = c * x0 - s * x1;
                *a1 = s * x0 + c * x1;
            });
        }
        Axis::Z => {
            let p0 = Complex64::new(c, -s);
            let p1 = Complex64::new(c, s);
            for_pairs(amps, stride, |a0, a1| {
                *a0 *= p0;
                *a1 *= p1;
            });
        }
    }
    Ok(())
}

/// Swaps amplitude pairs where the control bit is set, in place.
pub fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) -> Result<()> {
    check_qubit(amps, control)?;
    check_qubit(amps, target)?;
    if control == target {
        return Err(Error::EqualControlTarget(control));
    }
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    for i in 0..amps.len() {
        if i & cbit != 0 && i & tbit == 0 {
            amps.swap(i, i | tbit);
        }
    }
    Ok(())
}

/// Applies the bare Pauli operator on one qubit (used by the gradient sweep).
fn apply_pauli(amps: &mut [Complex64], axis: Axis, qubit: usize) {
    let stride = 1usize << qubit;
    match axis {
        Axis::X => for_pairs(amps, stride, std::mem::swap),
        Axis::Y => for_pairs(amps, stride, |a0, a1| {
            let (x0, x1) = (*a0, *a1);
            *a0 = Complex64::new(x1.im, -x1.re); // -i * x1
            *a1 = Complex64::new(-x0.im, x0.re); // i * x0
        }),
        Axis::Z => for_pairs(amps, stride, |_, a1| *a1 = -*a1),
    }
}

fn for_pairs<F: FnMut(&mut Complex64, &mut Complex64)>(
    amps: &mut [Complex64],
    stride: usize,
    mut f: F,
) {
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            let (lo, hi) = amps.split_at_mut(i + stride);
            f(&mut lo[i], &mut hi[0]);
        }
        base += stride << 1;
    }
}

/// Circuit direction: U(phi) or its adjoint U(phi)^dagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Adjoint,
}

#[derive(Debug, Clone, Copy)]
struct ResolvedGate {
    kind: GateKind,
    target: usize,
    control: Option<usize>,
    angle: f64,
    slot: Option<usize>,
    // d(applied angle)/d(phi[slot]): +1 forward, -1 in the adjoint circuit.
    dsign: f64,
}

fn resolve(spec: &AnsatzSpec, phi: &[f64], dir: Direction) -> Result<Vec<ResolvedGate>> {
    if phi.len() != spec.n_params {
        return Err(Error::DimensionMismatch {
            expected: spec.n_params,
            got: phi.len(),
        });
    }
    let mut out = Vec::with_capacity(spec.gates.len());
    for g in &spec.gates {
        let (angle, slot) = match g.angle {
            Some(Angle::Slot(s)) => (phi[s], Some(s)),
            Some(Angle::Fixed(a)) => (a, None),
            None => (0.0, None),
        };
        if g.kind == GateKind::Cnot && g.angle.is_some() {
            return Err(Error::UnsupportedGradient("cnot"));
        }
        out.push(ResolvedGate {
            kind: g.kind,
            target: g.target,
            control: g.control,
            angle,
            slot,
            dsign: 1.0,
        });
    }
    if dir == Direction::Adjoint {
        out.reverse();
        for g in &mut out {
            g.angle = -g.angle;
            g.dsign = -1.0;
        }
    }
    Ok(out)
}

fn apply_resolved(amps: &mut [Complex64], g: &ResolvedGate) -> Result<()> {
    match g.kind.axis() {
        Some(axis) => apply_rotation(amps, axis, g.target, g.angle),
        None => apply_cnot(amps, g.control.unwrap(), g.target),
    }
}

fn unapply_resolved(amps: &mut [Complex64], g: &ResolvedGate) -> Result<()> {
    match g.kind.axis() {
        Some(axis) => apply_rotation(amps, axis, g.target, -g.angle),
        None => apply_cnot(amps, g.control.unwrap(), g.target),
    }
}

fn check_state_dim(spec: &AnsatzSpec, amps: &[Complex64]) -> Result<()> {
    if amps.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: amps.len(),
        });
    }
    Ok(())
}

/// Applies the circuit in the given direction, in place. Acts linearly: the
/// input is not renormalized.
pub fn apply_circuit(
    amps: &mut [Complex64],
    spec: &AnsatzSpec,
    phi: &[f64],
    dir: Direction,
) -> Result<()> {
    check_state_dim(spec, amps)?;
    for g in resolve(spec, phi, dir)? {
        apply_resolved(amps, &g)?;
    }
    Ok(())
}

/// U(phi) applied to a state.
pub fn apply_ansatz(state: &Statevector, spec: &AnsatzSpec, phi: &[f64]) -> Result<Statevector> {
    let mut amps = state.amplitudes().to_vec();
    apply_circuit(&mut amps, spec, phi, Direction::Forward)?;
    Ok(Statevector { amps })
}

/// U(phi)^dagger: the gate list reversed with each gate conjugate-transposed.
pub fn apply_ansatz_adjoint(
    state: &Statevector,
    spec: &AnsatzSpec,
    phi: &[f64],
) -> Result<Statevector> {
    let mut amps = state.amplitudes().to_vec();
    apply_circuit(&mut amps, spec, phi, Direction::Adjoint)?;
    Ok(Statevector { amps })
}

/// Dense U(phi), built by applying the circuit to each basis state. Test
/// oracle; refuses more than [`MAX_DENSE_QUBITS`] qubits.
pub fn ansatz_unitary(spec: &AnsatzSpec, phi: &[f64]) -> Result<nalgebra::DMatrix<Complex64>> {
    if spec.n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits {
            n_qubits: spec.n_qubits,
            max: MAX_DENSE_QUBITS,
        });
    }
    let dim = spec.dim();
    let mut u = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    for col in 0..dim {
        let mut amps = vec![Complex64::ZERO; dim];
        amps[col] = Complex64::ONE;
        apply_circuit(&mut amps, spec, phi, Direction::Forward)?;
        for row in 0..dim {
            u[(row, col)] = amps[row];
        }
    }
    Ok(u)
}

/// Vector-Jacobian product of the circuit w.r.t. phi.
///
/// Given the circuit output and the cotangent g (g_j = dL/dRe y_j + i dL/dIm
/// y_j), returns dL/dphi. Runs a reverse sweep that unapplies gates one at a
/// time; each rotation parameter costs one Pauli application and one inner
/// product, so the whole gradient is O(gates * 2^n).
pub fn circuit_param_vjp(
    spec: &AnsatzSpec,
    phi: &[f64],
    dir: Direction,
    output: &[Complex64],
    cotangent: &[Complex64],
) -> Result<Vec<f64>> {
    check_state_dim(spec, output)?;
    check_state_dim(spec, cotangent)?;
    let resolved = resolve(spec, phi, dir)?;
    let mut ket = output.to_vec();
    let mut lam = cotangent.to_vec();
    let mut grad = vec![0.0; spec.n_params];
    let mut scratch = vec![Complex64::ZERO; output.len()];
    for g in resolved.iter().rev() {
        if let (Some(slot), Some(axis)) = (g.slot, g.kind.axis()) {
            // dG/da applied to the pre-gate state equals (-i/2) P (ket after
            // the gate); Re<lam, (-i/2) P ket> = 0.5 * sum Im(conj(lam) P ket).
            scratch.copy_from_slice(&ket);
            apply_pauli(&mut scratch, axis, g.target);
            let dot: f64 = lam
                .iter()
                .zip(&scratch)
                .map(|(l, t)| (l.conj() * t).im)
                .sum();
            grad[slot] += g.dsign * 0.5 * dot;
        }
        unapply_resolved(&mut ket, g)?;
        unapply_resolved(&mut lam, g)?;
    }
    Ok(grad)
}
