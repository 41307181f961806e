//! Base density, negative-log-likelihood loss, and full-model gradients.
//!
//! Training evaluates the inverse pass on data, so gradients are assembled by
//! reverse mode along that pass: hand backprop through the affine block and
//! conditioner networks, and an adjoint sweep through the circuit for the phi
//! path, chained into the r network.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::flow::{
    flow_forward, layer_inverse_tape, rotate_classical, rotate_classical_inverse, CouplingLayer,
    FlowModel, InverseTape, SampleVector, Splits, S_MAX,
};
use crate::neural::{AdamWState, MlpGrads};
use crate::qsim::{apply_circuit, circuit_param_vjp, Direction};

/// Isotropic Gaussian base density over the realified latent space, centered
/// on the |0...0> encoding (classical segment zero, quantum segment e0).
#[derive(Debug, Clone, PartialEq)]
pub struct BaseDensitySpec {
    pub splits: Splits,
    pub sigma_classical: f64,
    pub sigma_quantum: f64,
}

impl BaseDensitySpec {
    pub fn standard(splits: Splits, sigma_classical: f64, sigma_quantum: f64) -> Self {
        assert!(sigma_classical > 0.0 && sigma_quantum > 0.0);
        Self {
            splits,
            sigma_classical,
            sigma_quantum,
        }
    }

    /// The distribution center: zeros classically, amplitude 1 on |0...0>.
    pub fn center(&self) -> SampleVector {
        let mut c = SampleVector::zeros(self.splits);
        if !c.quantum.is_empty() {
            c.quantum[0] = Complex64::ONE;
        }
        c
    }

    /// Standard deviation of realified coordinate `i`.
    pub fn sigma_at(&self, i: usize) -> f64 {
        if i < self.splits.d2 {
            self.sigma_classical
        } else {
            self.sigma_quantum
        }
    }
}

/// Gaussian log-density of z under the base distribution.
pub fn base_log_density(z: &SampleVector, spec: &BaseDensitySpec) -> f64 {
    let flat = z.realify();
    let center = spec.center().realify();
    let mut lp = 0.0;
    for (i, (zi, ci)) in flat.iter().zip(&center).enumerate() {
        let sigma = spec.sigma_at(i);
        let d = zi - ci;
        lp -= d * d / (2.0 * sigma * sigma);
        lp -= (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    }
    lp
}

/// Per-batch loss summary. The assembled identity
/// nll = -base_logp_mean + logdet_mean holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub nll: f64,
    pub logdet_mean: f64,
    pub base_logp_mean: f64,
    pub batch_size: usize,
}

/// Mean negative log-likelihood of the batch:
/// (1/m) sum_i [ -log pi(f^-1(x_i)) + logdet_i ].
pub fn nll_loss(batch: &[SampleVector], model: &FlowModel) -> Result<LossReport> {
    if batch.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut logdet_sum = 0.0;
    let mut base_sum = 0.0;
    for x in batch {
        let (z, logdet) = crate::flow::flow_inverse(x, model)?;
        logdet_sum += logdet;
        base_sum += base_log_density(&z, &model.base);
    }
    let m = batch.len() as f64;
    let report = LossReport {
        nll: (-base_sum + logdet_sum) / m,
        logdet_mean: logdet_sum / m,
        base_logp_mean: base_sum / m,
        batch_size: batch.len(),
    };
    if !report.nll.is_finite() {
        return Err(Error::NonFinite("nll"));
    }
    Ok(report)
}

/// Gradients of one coupling layer's parameters, mirroring its three nets.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub s: MlpGrads,
    pub t: MlpGrads,
    pub r: Option<MlpGrads>,
}

impl LayerGrads {
    pub fn zeros_like(layer: &CouplingLayer) -> Self {
        Self {
            s: MlpGrads::zeros_like(&layer.s_net),
            t: MlpGrads::zeros_like(&layer.t_net),
            r: layer
                .quantum
                .as_ref()
                .map(|q| MlpGrads::zeros_like(&q.r_net)),
        }
    }

    pub fn add_assign(&mut self, other: &LayerGrads) {
        self.s.add_assign(&other.s);
        self.t.add_assign(&other.t);
        if let (Some(a), Some(b)) = (self.r.as_mut(), other.r.as_ref()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.s.scale(factor);
        self.t.scale(factor);
        if let Some(r) = self.r.as_mut() {
            r.scale(factor);
        }
    }

    /// Canonical flat layout matching [`CouplingLayer::flatten_into`]:
    /// s net, t net, r net.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        self.s.flatten_into(out);
        self.t.flatten_into(out);
        if let Some(r) = &self.r {
            r.flatten_into(out);
        }
    }
}

/// Cotangent of a sample: dL/d(classical) and dL/d(Re, Im) of the quantum
/// segment packed as complex numbers.
struct SampleGrad {
    classical: Vec<f64>,
    quantum: Vec<Complex64>,
}

/// Reverse mode through one inverse-layer evaluation. Consumes the gradient
/// w.r.t. the layer's inverse output x, accumulates parameter gradients, and
/// returns the gradient w.r.t. the inverse input y. The `+1` on each scale
/// output is the direct log-determinant term of the loss.
fn layer_backward(
    layer: &CouplingLayer,
    tape: &InverseTape,
    g_x: &SampleGrad,
    grads: &mut LayerGrads,
) -> Result<SampleGrad> {
    let sp = layer.splits;
    let ev = &tape.cond;
    let mid = sp.mid_dim();

    let mut g_y = SampleGrad {
        classical: vec![0.0; sp.d2],
        quantum: vec![Complex64::ZERO; sp.quantum_dim()],
    };

    let mut d_scale = vec![0.0; mid];
    let mut d_shift = vec![0.0; mid];
    for j in 0..mid {
        let g = g_x.classical[sp.d1 + j];
        let e = (-ev.scale[j]).exp();
        g_y.classical[sp.d1 + j] = g * e;
        // x_mid = (y_mid - t) exp(-s): d/ds = -x_mid, d/dt = -exp(-s)
        d_scale[j] = -g * tape.x.classical[sp.d1 + j] + 1.0;
        d_shift[j] = -g * e;
    }
    // chain through the bounded squash s = S_MAX tanh(s_raw / S_MAX)
    let d_scale_raw: Vec<f64> = d_scale
        .iter()
        .zip(&ev.scale)
        .map(|(d, s)| d * (1.0 - (s / S_MAX) * (s / S_MAX)))
        .collect();

    let (s_grads, dc_s) = layer.s_net.backward(&ev.s_tape, &d_scale_raw)?;
    let (t_grads, dc_t) = layer.t_net.backward(&ev.t_tape, &d_shift)?;
    grads.s.add_assign(&s_grads);
    grads.t.add_assign(&t_grads);

    let mut d_cond = vec![0.0; sp.d1];
    for i in 0..sp.d1 {
        d_cond[i] = dc_s[i] + dc_t[i];
    }

    if let Some(q) = &layer.quantum {
        // phi gradient by the adjoint sweep over the adjoint circuit
        let d_phi = circuit_param_vjp(
            &q.ansatz,
            &ev.phi,
            Direction::Adjoint,
            &tape.x.quantum,
            &g_x.quantum,
        )?;
        let (r_grads, dc_r) = q.r_net.backward(
            ev.r_tape.as_ref().expect("quantum layer has r tape"),
            &d_phi,
        )?;
        grads.r.as_mut().unwrap().add_assign(&r_grads);
        for i in 0..sp.d1 {
            d_cond[i] += dc_r[i];
        }
        // x_q = U^dag y_q, so the cotangent pulls back through U
        g_y.quantum.copy_from_slice(&g_x.quantum);
        apply_circuit(&mut g_y.quantum, &q.ansatz, &ev.phi, Direction::Forward)?;
    }

    for i in 0..sp.d1 {
        g_y.classical[i] = g_x.classical[i] + d_cond[i];
    }
    Ok(g_y)
}

/// Loss and parameter gradients for one sample.
fn sample_grads(
    x: &SampleVector,
    model: &FlowModel,
    grads: &mut [LayerGrads],
) -> Result<(f64, f64)> {
    let sp = model.splits();
    let n_layers = model.layers.len();

    // inverse pass, keeping each layer's tape
    let mut tapes: Vec<Option<InverseTape>> = (0..n_layers).map(|_| None).collect();
    let mut cur = x.clone();
    let mut logdet_total = 0.0;
    for l in (0..n_layers).rev() {
        let (prev, logdet, tape) = layer_inverse_tape(&cur, &model.layers[l])?;
        tapes[l] = Some(tape);
        logdet_total += logdet;
        cur = prev;
        if l > 0 {
            rotate_classical_inverse(&mut cur.classical, sp.d1);
        }
    }
    let z = cur;
    let base_lp = base_log_density(&z, &model.base);

    // dL/dz of the -log pi term: (z - c) / sigma^2 per realified coordinate
    let center = model.base.center();
    let mut g = SampleGrad {
        classical: z
            .classical
            .iter()
            .zip(&center.classical)
            .map(|(zi, ci)| (zi - ci) / (model.base.sigma_classical * model.base.sigma_classical))
            .collect(),
        quantum: z
            .quantum
            .iter()
            .zip(&center.quantum)
            .map(|(zi, ci)| (zi - ci) / (model.base.sigma_quantum * model.base.sigma_quantum))
            .collect(),
    };

    // walk the inverse computation in reverse: layer 0 first
    for l in 0..n_layers {
        let tape = tapes[l].as_ref().unwrap();
        g = layer_backward(&model.layers[l], tape, &g, &mut grads[l])?;
        if l + 1 < n_layers {
            rotate_classical(&mut g.classical, sp.d1);
        }
    }
    Ok((-base_lp + logdet_total, logdet_total))
}

/// Mean loss and mean parameter gradients over the batch, accumulated in a
/// fixed order for determinism.
pub fn nll_with_grads(
    batch: &[SampleVector],
    model: &FlowModel,
) -> Result<(LossReport, Vec<LayerGrads>)> {
    if batch.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut grads: Vec<LayerGrads> = model.layers.iter().map(LayerGrads::zeros_like).collect();
    let mut nll_sum = 0.0;
    let mut logdet_sum = 0.0;
    for x in batch {
        let (nll, logdet) = sample_grads(x, model, &mut grads)?;
        nll_sum += nll;
        logdet_sum += logdet;
    }
    let m = batch.len() as f64;
    for g in &mut grads {
        g.scale(1.0 / m);
    }
    let report = LossReport {
        nll: nll_sum / m,
        logdet_mean: logdet_sum / m,
        base_logp_mean: (logdet_sum - nll_sum) / m,
        batch_size: batch.len(),
    };
    if !report.nll.is_finite() {
        return Err(Error::NonFinite("nll"));
    }
    Ok((report, grads))
}

/// Gradient of the mean nll w.r.t. the s and t networks only, flattened in
/// canonical layer order.
pub fn classical_grads(batch: &[SampleVector], model: &FlowModel) -> Result<Vec<f64>> {
    let (_, grads) = nll_with_grads(batch, model)?;
    let mut out = Vec::new();
    for g in &grads {
        g.s.flatten_into(&mut out);
        g.t.flatten_into(&mut out);
    }
    Ok(out)
}

/// Gradient of the mean nll along the phi-producing paths: the r networks,
/// with dL/dphi obtained from the circuit parameter sweep.
pub fn quantum_param_grads(batch: &[SampleVector], model: &FlowModel) -> Result<Vec<f64>> {
    let (_, grads) = nll_with_grads(batch, model)?;
    let mut out = Vec::new();
    for g in &grads {
        if let Some(r) = &g.r {
            r.flatten_into(&mut out);
        }
    }
    Ok(out)
}

/// One epoch's worth of reports.
#[derive(Debug, Clone)]
pub struct EpochReport {
    pub batches: Vec<LossReport>,
    pub summary: LossReport,
}

pub fn summarize(batches: &[LossReport]) -> LossReport {
    let total: usize = batches.iter().map(|b| b.batch_size).sum();
    let w = |f: fn(&LossReport) -> f64| -> f64 {
        batches
            .iter()
            .map(|b| f(b) * b.batch_size as f64)
            .sum::<f64>()
            / total as f64
    };
    LossReport {
        nll: w(|b| b.nll),
        logdet_mean: w(|b| b.logdet_mean),
        base_logp_mean: w(|b| b.base_logp_mean),
        batch_size: total,
    }
}

/// Shuffles the dataset, then for each batch computes combined gradients and
/// applies one AdamW step per layer group.
pub fn train_epoch(
    dataset: &[SampleVector],
    model: &mut FlowModel,
    optimizers: &mut [AdamWState],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EpochReport> {
    if dataset.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if optimizers.len() != model.layers.len() {
        return Err(Error::DimensionMismatch {
            expected: model.layers.len(),
            got: optimizers.len(),
        });
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);

    let mut reports = Vec::new();
    for chunk in order.chunks(batch_size.max(1)) {
        let batch: Vec<SampleVector> = chunk.iter().map(|&i| dataset[i].clone()).collect();
        let (report, grads) = nll_with_grads(&batch, model)
            .map_err(|e| Error::Diverged(format!("batch loss failed: {e}")))?;
        for (layer, (opt, grad)) in model
            .layers
            .iter_mut()
            .zip(optimizers.iter_mut().zip(&grads))
        {
            let mut params = Vec::with_capacity(layer.n_params());
            layer.flatten_into(&mut params);
            let mut flat_grad = Vec::with_capacity(layer.n_params());
            grad.flatten_into(&mut flat_grad);
            opt.step(&mut params, &flat_grad)?;
            layer.unflatten_from(&params)?;
        }
        reports.push(report);
    }
    let summary = summarize(&reports);
    Ok(EpochReport {
        batches: reports,
        summary,
    })
}

/// Draws latent vectors centered on the base center with per-coordinate noise
/// sigma_segment * temperature, and pushes them through the forward flow.
pub fn sample(
    model: &FlowModel,
    rng: &mut ChaCha8Rng,
    count: usize,
    temperature: f64,
) -> Result<Vec<SampleVector>> {
    assert!(temperature >= 0.0);
    let sp = model.splits();
    let base = &model.base;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut flat = base.center().realify();
        for (i, v) in flat.iter_mut().enumerate() {
            let n: f64 = StandardNormal.sample(rng);
            *v += base.sigma_at(i) * temperature * n;
        }
        let z = SampleVector::from_realified(&flat, sp)?;
        let (x, _) = flow_forward(&z, model)?;
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::AdamWConfig;
    use crate::qsim::AnsatzSpec;
    use crate::testutil;

    fn small_splits() -> Splits {
        Splits::new(2, 4, 8).unwrap()
    }

    fn small_base() -> BaseDensitySpec {
        BaseDensitySpec::standard(small_splits(), 1.0, 0.5)
    }

    fn identity_model(n_layers: usize, seed: u64) -> FlowModel {
        let mut rng = testutil::rng(seed);
        let ansatz = AnsatzSpec::hardware_efficient(2, 2);
        let layers = (0..n_layers)
            .map(|_| CouplingLayer::init(small_splits(), 8, Some(ansatz.clone()), &mut rng))
            .collect::<crate::error::Result<Vec<_>>>()
            .unwrap();
        FlowModel {
            layers,
            base: small_base(),
        }
    }

    fn random_batch(n: usize, seed: u64) -> Vec<SampleVector> {
        let mut rng = testutil::rng(seed);
        (0..n)
            .map(|_| {
                let flat = testutil::normal_vec(&mut rng, small_splits().real_dim(), 1.0);
                SampleVector::from_realified(&flat, small_splits()).unwrap()
            })
            .collect()
    }

    #[test]
    fn log_density_peaks_at_center_with_the_right_constant() {
        let base = small_base();
        let lp = base_log_density(&base.center(), &base);
        // 4 classical coords at sigma 1, 8 realified quantum coords at 0.5
        let want: f64 = -(4.0 * (1.0f64 * (2.0 * std::f64::consts::PI).sqrt()).ln()
            + 8.0 * (0.5f64 * (2.0 * std::f64::consts::PI).sqrt()).ln());
        assert!((lp - want).abs() < 1e-12);
    }

    #[test]
    fn log_density_drops_quadratically_per_coordinate() {
        let base = small_base();
        let lp0 = base_log_density(&base.center(), &base);
        let mut shifted = base.center();
        shifted.classical[1] += 0.7;
        let drop = lp0 - base_log_density(&shifted, &base);
        assert!((drop - 0.7 * 0.7 / 2.0).abs() < 1e-12);
        let mut shifted_q = base.center();
        shifted_q.quantum[2].im += 0.3;
        let drop_q = lp0 - base_log_density(&shifted_q, &base);
        assert!((drop_q - 0.3 * 0.3 / (2.0 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn independent_scalar_gaussian_oracle() {
        // product of 1-d normal densities, written without realify
        let base = small_base();
        let mut rng = testutil::rng(5);
        for _ in 0..10 {
            let flat = testutil::normal_vec(&mut rng, base.splits.real_dim(), 1.5);
            let z = SampleVector::from_realified(&flat, base.splits).unwrap();
            let center = base.center().realify();
            let mut want = 0.0;
            for (i, (zi, ci)) in flat.iter().zip(&center).enumerate() {
                let s = base.sigma_at(i);
                let pdf = (-((zi - ci) / s).powi(2) / 2.0).exp()
                    / (s * (2.0 * std::f64::consts::PI).sqrt());
                want += pdf.ln();
            }
            assert!((base_log_density(&z, &base) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn loss_report_identity_holds_exactly() {
        let model = identity_model(3, 7);
        let report = nll_loss(&random_batch(9, 8), &model).unwrap();
        assert!((report.nll - (-report.base_logp_mean + report.logdet_mean)).abs() < 1e-12);
        // identity-initialized scales are exactly zero
        assert_eq!(report.logdet_mean, 0.0);
    }

    #[test]
    fn duplicated_batch_leaves_the_mean_unchanged() {
        let model = identity_model(2, 9);
        let batch = random_batch(5, 10);
        let doubled: Vec<SampleVector> = batch.iter().chain(&batch).cloned().collect();
        let a = nll_loss(&batch, &model).unwrap();
        let b = nll_loss(&doubled, &model).unwrap();
        assert!((a.nll - b.nll).abs() < 1e-12);
        let (_, ga) = nll_with_grads(&batch, &model).unwrap();
        let (_, gb) = nll_with_grads(&doubled, &model).unwrap();
        let mut fa = Vec::new();
        let mut fb = Vec::new();
        for g in &ga {
            g.flatten_into(&mut fa);
        }
        for g in &gb {
            g.flatten_into(&mut fb);
        }
        for (x, y) in fa.iter().zip(&fb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn scale_bias_gradient_is_one_when_mid_segment_vanishes() {
        // with identity init and x_mid = 0 the data term contributes nothing,
        // leaving exactly the +1 from the log-determinant
        let model = identity_model(1, 11);
        let mut x = SampleVector::zeros(small_splits());
        x.classical = vec![0.4, -0.2, 0.0, 0.0];
        x.quantum[0] = num_complex::Complex64::ONE;
        let (_, grads) = nll_with_grads(&[x], &model).unwrap();
        let last = grads[0].s.biases.len() - 1;
        for g in &grads[0].s.biases[last] {
            assert!((g - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_helpers_split_the_full_gradient() {
        let mut model = identity_model(2, 12);
        crate::verify::randomize_model(&mut model, &mut testutil::rng(13), 0.3);
        let batch = random_batch(3, 14);
        let (_, grads) = nll_with_grads(&batch, &model).unwrap();
        let classical = classical_grads(&batch, &model).unwrap();
        let quantum = quantum_param_grads(&batch, &model).unwrap();
        let mut want_classical = Vec::new();
        let mut want_quantum = Vec::new();
        for g in &grads {
            g.s.flatten_into(&mut want_classical);
            g.t.flatten_into(&mut want_classical);
            g.r.as_ref().unwrap().flatten_into(&mut want_quantum);
        }
        assert_eq!(classical, want_classical);
        assert_eq!(quantum, want_quantum);
    }

    #[test]
    fn zero_lr_epoch_is_a_no_op_on_parameters() {
        let mut model = identity_model(2, 15);
        let before = model.clone();
        let cfg = AdamWConfig {
            lr: 0.0,
            ..Default::default()
        };
        let mut opts: Vec<AdamWState> = model
            .layers
            .iter()
            .map(|l| AdamWState::new(l.n_params(), cfg))
            .collect();
        let data = random_batch(8, 16);
        train_epoch(&data, &mut model, &mut opts, 4, &mut testutil::rng(17)).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn training_lowers_the_loss_on_a_fixed_point_cloud() {
        let mut model = identity_model(2, 18);
        let mut opts: Vec<AdamWState> = model
            .layers
            .iter()
            .map(|l| {
                AdamWState::new(
                    l.n_params(),
                    AdamWConfig {
                        lr: 5e-3,
                        ..Default::default()
                    },
                )
            })
            .collect();
        let data = random_batch(32, 19);
        let start = nll_loss(&data, &model).unwrap().nll;
        let mut rng = testutil::rng(20);
        for _ in 0..5 {
            train_epoch(&data, &mut model, &mut opts, 8, &mut rng).unwrap();
        }
        let end = nll_loss(&data, &model).unwrap().nll;
        assert!(end < start, "nll went {start} -> {end}");
    }

    #[test]
    fn train_epoch_is_seed_deterministic() {
        let run = || {
            let mut model = identity_model(2, 21);
            let mut opts: Vec<AdamWState> = model
                .layers
                .iter()
                .map(|l| AdamWState::new(l.n_params(), AdamWConfig::default()))
                .collect();
            let data = random_batch(16, 22);
            let report =
                train_epoch(&data, &mut model, &mut opts, 4, &mut testutil::rng(23)).unwrap();
            (model, report.summary)
        };
        let (ma, sa) = run();
        let (mb, sb) = run();
        assert_eq!(ma, mb);
        assert_eq!(sa, sb);
    }

    #[test]
    fn summarize_weights_by_batch_size() {
        let a = LossReport {
            nll: 1.0,
            logdet_mean: 0.5,
            base_logp_mean: -0.5,
            batch_size: 3,
        };
        let b = LossReport {
            nll: 2.0,
            logdet_mean: 1.0,
            base_logp_mean: -1.0,
            batch_size: 1,
        };
        let s = summarize(&[a, b]);
        assert!((s.nll - 1.25).abs() < 1e-12);
        assert_eq!(s.batch_size, 4);
    }

    #[test]
    fn zero_temperature_samples_sit_on_the_pushed_center() {
        let mut model = identity_model(2, 24);
        crate::verify::randomize_model(&mut model, &mut testutil::rng(25), 0.3);
        let drawn = sample(&model, &mut testutil::rng(26), 3, 0.0).unwrap();
        let (want, _) = flow_forward(&model.base.center(), &model).unwrap();
        for s in &drawn {
            let diff: f64 = s
                .realify()
                .iter()
                .zip(want.realify())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let mut model = identity_model(2, 27);
        crate::verify::randomize_model(&mut model, &mut testutil::rng(28), 0.3);
        let a = sample(&model, &mut testutil::rng(29), 4, 1.0).unwrap();
        let b = sample(&model, &mut testutil::rng(29), 4, 1.0).unwrap();
        assert_eq!(a, b);
    }
}
