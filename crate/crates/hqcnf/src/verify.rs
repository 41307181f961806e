//! Property suite shared by the `check` command and the test suites, so the
//! CLI verification path and the library tests cannot drift apart.
//!
//! Each check returns its measured residual and the tolerance it is held to;
//! the finite-difference Jacobian and gradient oracles here are deliberately
//! independent of the analytic code paths they cross-check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::Result;
use crate::flow::{
    flow_forward, flow_inverse, layer_forward, layer_inverse, CouplingLayer, FlowModel,
    SampleVector, Splits,
};
use crate::objective::{nll_loss, nll_with_grads, BaseDensitySpec};
use crate::qsim::{ansatz_unitary, apply_ansatz, apply_ansatz_adjoint, AnsatzSpec, Statevector};
use crate::testutil;

/// One verification result: named residual vs tolerance.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual < self.tolerance
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<32} residual {:.3e} (tolerance {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance
        )
    }
}

/// Randomizes every net of an identity-initialized layer, final layers
/// included, so the map is a generic member of the family.
pub fn randomize_model(model: &mut FlowModel, rng: &mut ChaCha8Rng, scale: f64) {
    for layer in &mut model.layers {
        let mut nets = vec![&mut layer.s_net, &mut layer.t_net];
        if let Some(q) = &mut layer.quantum {
            nets.push(&mut q.r_net);
        }
        for net in nets {
            for buf in net.weights.iter_mut().chain(net.biases.iter_mut()) {
                for w in buf.iter_mut() {
                    *w += rng.random_range(-scale..scale);
                }
            }
        }
    }
}

/// Random-parameter flow at the given shape.
pub fn random_model(
    splits: Splits,
    n_layers: usize,
    hidden: usize,
    ansatz: Option<AnsatzSpec>,
    base: BaseDensitySpec,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<FlowModel> {
    let layers = (0..n_layers)
        .map(|_| CouplingLayer::init(splits, hidden, ansatz.clone(), rng))
        .collect::<Result<Vec<_>>>()?;
    let mut model = FlowModel { layers, base };
    randomize_model(&mut model, rng, scale);
    model.validate()?;
    Ok(model)
}

pub fn random_sample(splits: Splits, sigma: f64, rng: &mut ChaCha8Rng) -> SampleVector {
    let flat = testutil::normal_vec(rng, splits.real_dim(), sigma);
    SampleVector::from_realified(&flat, splits).expect("shape by construction")
}

fn max_abs_diff(a: &SampleVector, b: &SampleVector) -> f64 {
    a.realify()
        .iter()
        .zip(b.realify())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Max two-sided roundtrip error of single random layers.
pub fn layer_roundtrip_check(
    model: &FlowModel,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CheckReport> {
    let splits = model.splits();
    let mut worst = 0.0f64;
    for i in 0..n_samples {
        let layer = &model.layers[i % model.layers.len()];
        let x = random_sample(splits, 2.0, rng);
        let (y, _) = layer_forward(&x, layer)?;
        let (back, _) = layer_inverse(&y, layer)?;
        worst = worst.max(max_abs_diff(&back, &x));
        let y2 = random_sample(splits, 2.0, rng);
        let (x2, _) = layer_inverse(&y2, layer)?;
        let (fwd, _) = layer_forward(&x2, layer)?;
        worst = worst.max(max_abs_diff(&fwd, &y2));
    }
    Ok(CheckReport {
        name: "layer_roundtrip".into(),
        residual: worst,
        tolerance: 1e-9,
    })
}

/// Max two-sided roundtrip error of the full layer stack.
pub fn flow_roundtrip_check(
    model: &FlowModel,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CheckReport> {
    let splits = model.splits();
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let z = random_sample(splits, 2.0, rng);
        let (x, ld_fwd) = flow_forward(&z, model)?;
        let (back, ld_inv) = flow_inverse(&x, model)?;
        worst = worst.max(max_abs_diff(&back, &z));
        worst = worst.max((ld_fwd - ld_inv).abs());
        let x2 = random_sample(splits, 2.0, rng);
        let (z2, _) = flow_inverse(&x2, model)?;
        let (fwd, _) = flow_forward(&z2, model)?;
        worst = worst.max(max_abs_diff(&fwd, &x2));
    }
    Ok(CheckReport {
        name: "flow_roundtrip".into(),
        residual: worst,
        tolerance: 1e-8,
    })
}

fn corrupted_adjoint(
    state: &Statevector,
    spec: &AnsatzSpec,
    phi: &[f64],
    corrupt: bool,
) -> Result<Statevector> {
    if corrupt {
        // fault-injection hook: the adjoint sees a shifted first parameter
        let mut bad = phi.to_vec();
        if let Some(p) = bad.first_mut() {
            *p += 1e-3;
        }
        apply_ansatz_adjoint(state, spec, &bad)
    } else {
        apply_ansatz_adjoint(state, spec, phi)
    }
}

/// adjoint(U(x)) = x on random states.
pub fn circuit_roundtrip_check(
    spec: &AnsatzSpec,
    n_trials: usize,
    rng: &mut ChaCha8Rng,
    corrupt_adjoint: bool,
) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for _ in 0..n_trials {
        let phi = testutil::uniform_vec(rng, spec.n_params, -3.0, 3.0);
        let state = testutil::random_state(rng, spec.n_qubits);
        let fwd = apply_ansatz(&state, spec, &phi)?;
        let back = corrupted_adjoint(&fwd, spec, &phi, corrupt_adjoint)?;
        let err = back
            .amplitudes()
            .iter()
            .zip(state.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    Ok(CheckReport {
        name: "circuit_adjoint_roundtrip".into(),
        residual: worst,
        tolerance: 1e-10,
    })
}

/// Dense U(phi)^dagger U(phi) = I.
pub fn circuit_unitarity_check(
    spec: &AnsatzSpec,
    rng: &mut ChaCha8Rng,
    corrupt_adjoint: bool,
) -> Result<CheckReport> {
    let phi = testutil::uniform_vec(rng, spec.n_params, -3.0, 3.0);
    let dim = spec.dim();
    // columns of adjoint(U e_j), which is I when the adjoint matches U
    let mut worst = 0.0f64;
    for col in 0..dim {
        let mut basis = vec![Complex64::ZERO; dim];
        basis[col] = Complex64::ONE;
        let fwd = apply_ansatz(&Statevector::new(basis).unwrap(), spec, &phi)?;
        let back = corrupted_adjoint(&fwd, spec, &phi, corrupt_adjoint)?;
        for (row, a) in back.amplitudes().iter().enumerate() {
            let want = if row == col {
                Complex64::ONE
            } else {
                Complex64::ZERO
            };
            worst = worst.max((a - want).norm());
        }
    }
    Ok(CheckReport {
        name: "circuit_unitarity".into(),
        residual: worst,
        tolerance: 1e-10,
    })
}

/// det [[V, -W], [W, V]] = 1 for U = V + iW, checked densely with an LU
/// determinant for small qubit counts.
pub fn realified_determinant_check(
    max_qubits: usize,
    blocks: usize,
    trials_per_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for n in 1..=max_qubits {
        let spec = AnsatzSpec::hardware_efficient(n, blocks);
        for _ in 0..trials_per_size {
            let phi = testutil::uniform_vec(rng, spec.n_params, -3.0, 3.0);
            let u = ansatz_unitary(&spec, &phi)?;
            let dim = spec.dim();
            let mut r = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
            for i in 0..dim {
                for j in 0..dim {
                    let v = u[(i, j)].re;
                    let w = u[(i, j)].im;
                    r[(i, j)] = v;
                    r[(i, j + dim)] = -w;
                    r[(i + dim, j)] = w;
                    r[(i + dim, j + dim)] = v;
                }
            }
            let det = r.lu().determinant();
            worst = worst.max((det - 1.0).abs());
        }
    }
    Ok(CheckReport {
        name: "realified_determinant".into(),
        residual: worst,
        tolerance: 1e-8,
    })
}

/// log|det| of the numeric Jacobian of a realified map, by central finite
/// differences and an LU determinant. Brute-force oracle.
pub fn fd_jacobian_logdet<F>(map: F, splits: Splits, at: &SampleVector, step: f64) -> Result<f64>
where
    F: Fn(&SampleVector) -> Result<SampleVector>,
{
    let dim = splits.real_dim();
    let flat = at.realify();
    let mut jac = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut plus = flat.clone();
        plus[j] += step;
        let mut minus = flat.clone();
        minus[j] -= step;
        let fp = map(&SampleVector::from_realified(&plus, splits)?)?.realify();
        let fm = map(&SampleVector::from_realified(&minus, splits)?)?.realify();
        for i in 0..dim {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(jac.lu().determinant().abs().ln())
}

/// Analytic layer log-determinant vs the finite-difference Jacobian oracle.
pub fn logdet_fd_check(
    model: &FlowModel,
    n_trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CheckReport> {
    let splits = model.splits();
    let mut worst = 0.0f64;
    for i in 0..n_trials {
        let layer = &model.layers[i % model.layers.len()];
        let x = random_sample(splits, 1.0, rng);
        let (_, analytic) = layer_forward(&x, layer)?;
        let numeric = fd_jacobian_logdet(
            |v| layer_forward(v, layer).map(|(y, _)| y),
            splits,
            &x,
            1e-5,
        )?;
        worst = worst.max((analytic - numeric).abs());
    }
    Ok(CheckReport {
        name: "logdet_finite_difference".into(),
        residual: worst,
        tolerance: 1e-5,
    })
}

/// With s and t forced to zero the layer is the pure unitary block; its full
/// realified Jacobian determinant must be 1.
pub fn volume_preservation_check(
    splits: Splits,
    ansatz: &AnsatzSpec,
    hidden: usize,
    rng: &mut ChaCha8Rng,
) -> Result<CheckReport> {
    let mut layer = CouplingLayer::init(splits, hidden, Some(ansatz.clone()), rng)?;
    if let Some(q) = &mut layer.quantum {
        // random phi via a random final bias; s, t stay identically zero
        let last = q.r_net.biases.len() - 1;
        for b in q.r_net.biases[last].iter_mut() {
            *b = rng.random_range(-3.0..3.0);
        }
    }
    let x = random_sample(splits, 1.0, rng);
    let logdet = fd_jacobian_logdet(
        |v| layer_forward(v, &layer).map(|(y, _)| y),
        splits,
        &x,
        1e-5,
    )?;
    let det = logdet.exp();
    Ok(CheckReport {
        name: "volume_preservation".into(),
        residual: (det - 1.0).abs(),
        tolerance: 1e-6,
    })
}

/// Full parameter gradient (classical backprop plus the circuit parameter
/// path) vs central finite differences of the batch nll. Residual is the
/// worst relative error.
pub fn gradient_fd_check(model: &FlowModel, rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    let splits = model.splits();
    let batch: Vec<SampleVector> = (0..2).map(|_| random_sample(splits, 1.0, rng)).collect();
    let (_, grads) = nll_with_grads(&batch, model)?;
    let mut analytic = Vec::new();
    for g in &grads {
        g.flatten_into(&mut analytic);
    }

    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut probe = model.clone();
    let mut flat = Vec::new();
    for layer in &model.layers {
        layer.flatten_into(&mut flat);
    }
    for k in 0..flat.len() {
        let orig = flat[k];
        flat[k] = orig + h;
        set_params(&mut probe, &flat)?;
        let up = nll_loss(&batch, &probe)?.nll;
        flat[k] = orig - h;
        set_params(&mut probe, &flat)?;
        let down = nll_loss(&batch, &probe)?.nll;
        flat[k] = orig;
        let fd = (up - down) / (2.0 * h);
        let rel = (analytic[k] - fd).abs() / fd.abs().max(1e-3);
        worst = worst.max(rel);
    }
    set_params(&mut probe, &flat)?;
    Ok(CheckReport {
        name: "gradient_finite_difference".into(),
        residual: worst,
        tolerance: 1e-4,
    })
}

fn set_params(model: &mut FlowModel, flat: &[f64]) -> Result<()> {
    let mut pos = 0;
    for layer in &mut model.layers {
        pos += layer.unflatten_from(&flat[pos..])?;
    }
    Ok(())
}

/// The whole suite at the configured shape. `corrupt_adjoint` is a fault
/// injection hook used to prove the checks can fail.
pub fn run_all(config: &RunConfig, corrupt_adjoint: bool) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed_init ^ 0x5eed);
    let splits = config.splits();
    // wide conditioners at larger scales saturate the s squash; the resulting
    // exp(+-5) amplification per layer inflates roundtrip error past 1e-8
    let model = random_model(
        splits,
        config.layers,
        config.hidden,
        config.ansatz(),
        config.base_density(),
        0.25,
        &mut rng,
    )?;
    let mut reports = vec![
        layer_roundtrip_check(&model, 200, &mut rng)?,
        flow_roundtrip_check(&model, 200, &mut rng)?,
    ];
    if let Some(ansatz) = config.ansatz() {
        reports.push(circuit_roundtrip_check(
            &ansatz,
            50,
            &mut rng,
            corrupt_adjoint,
        )?);
        reports.push(circuit_unitarity_check(&ansatz, &mut rng, corrupt_adjoint)?);
        reports.push(realified_determinant_check(
            config.qubits.min(3),
            config.blocks,
            20,
            &mut rng,
        )?);
        reports.push(volume_preservation_check(
            splits,
            &ansatz,
            config.hidden,
            &mut rng,
        )?);
    }
    reports.push(logdet_fd_check(&model, 5, &mut rng)?);
    // gradient finite differences over every parameter: narrow nets keep it fast
    let small = random_model(
        splits,
        1,
        config.hidden.min(8),
        config.ansatz(),
        config.base_density(),
        0.5,
        &mut rng,
    )?;
    reports.push(gradient_fd_check(&small, &mut rng)?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_small_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let splits = Splits::new(2, 4, 8).unwrap();
        let ansatz = AnsatzSpec::hardware_efficient(2, 2);
        let base = BaseDensitySpec::standard(splits, 1.0, 1.0);
        let model = random_model(splits, 3, 8, Some(ansatz.clone()), base, 0.5, &mut rng).unwrap();
        assert!(layer_roundtrip_check(&model, 50, &mut rng)
            .unwrap()
            .passed());
        assert!(flow_roundtrip_check(&model, 50, &mut rng).unwrap().passed());
        assert!(circuit_roundtrip_check(&ansatz, 20, &mut rng, false)
            .unwrap()
            .passed());
        assert!(circuit_unitarity_check(&ansatz, &mut rng, false)
            .unwrap()
            .passed());
        assert!(realified_determinant_check(2, 2, 5, &mut rng)
            .unwrap()
            .passed());
        assert!(logdet_fd_check(&model, 3, &mut rng).unwrap().passed());
        assert!(volume_preservation_check(splits, &ansatz, 8, &mut rng)
            .unwrap()
            .passed());
        assert!(gradient_fd_check(&model, &mut rng).unwrap().passed());
    }

    #[test]
    fn corrupted_adjoint_fails_the_hooked_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ansatz = AnsatzSpec::hardware_efficient(2, 2);
        assert!(!circuit_roundtrip_check(&ansatz, 10, &mut rng, true)
            .unwrap()
            .passed());
        assert!(!circuit_unitarity_check(&ansatz, &mut rng, true)
            .unwrap()
            .passed());
    }
}
