//! Command implementations behind the CLI: train, generate, evaluate, check.
//! The library tests drive these same entry points so the binary paths stay
//! covered.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint;
use crate::config::RunConfig;
use crate::data::{downscale, filter_digits, from_sample, parse_idx, to_sample_dequantized, Image};
use crate::error::{Error, Result};
use crate::flow::{FlowModel, SampleVector};
use crate::metrics::fid_proxy;
use crate::objective::{nll_loss, sample, train_epoch};
use crate::pgm::{contact_sheet, write_pgm};
use crate::verify;

const SHEET_COLUMNS: usize = 8;

fn read_maybe_gz(path: &str) -> Result<Vec<u8>> {
    let raw = std::fs::read(path)?;
    if path.ends_with(".gz") {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Downscaled training samples plus held-out images for evaluation.
pub struct PreparedData {
    pub train: Vec<SampleVector>,
    pub holdout: Vec<Image>,
}

/// Loads the IDX pair, keeps the configured digits, downscales, splits off
/// the seeded holdout, and dequantizes the training portion. Deterministic
/// for a fixed config.
pub fn prepare_data(config: &RunConfig) -> Result<PreparedData> {
    let images = read_maybe_gz(&config.train_images)?;
    let labels = read_maybe_gz(&config.train_labels)?;
    let mut ds = filter_digits(&parse_idx(&images, &labels)?, &config.digits);
    if ds.is_empty() {
        return Err(Error::Config(format!(
            "no images with digits {:?} in {}",
            config.digits, config.train_images
        )));
    }
    if config.train_limit > 0 {
        ds.images.truncate(config.train_limit);
        ds.labels.truncate(config.train_limit);
    }
    let small: Vec<Image> = ds
        .images
        .iter()
        .map(|im| downscale(im, config.image_size))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed_shuffle);
    let mut order: Vec<usize> = (0..small.len()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let n_holdout = ((small.len() as f64) * config.holdout_fraction).round() as usize;
    let (holdout_idx, train_idx) = order.split_at(n_holdout);

    let splits = config.splits();
    let train = train_idx
        .iter()
        .map(|&i| to_sample_dequantized(&small[i], splits, &mut rng))
        .collect::<Result<_>>()?;
    let holdout = holdout_idx.iter().map(|&i| small[i].clone()).collect();
    Ok(PreparedData { train, holdout })
}

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    Path::new(&config.out_dir).join(name)
}

fn append_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let fresh = !path.exists();
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if fresh {
        writeln!(f, "{header}")?;
    }
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn write_sample_sheet(path: &Path, samples: &[SampleVector], side: usize) -> Result<()> {
    let images = samples
        .iter()
        .map(|s| from_sample(s, side))
        .collect::<Result<Vec<_>>>()?;
    write_pgm(path, &contact_sheet(&images, SHEET_COLUMNS))
}

/// Trains from scratch: rolling checkpoint after every epoch, per-batch rows
/// appended to loss.csv, one contact sheet of samples per epoch. On a
/// diverged batch the last completed epoch's checkpoint is left in place.
pub fn cmd_train(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(out_path(config, "samples"))?;
    let data = prepare_data(config)?;
    if data.train.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    println!(
        "training on {} samples ({} held out), {} layers, {} quantum params/layer",
        data.train.len(),
        data.holdout.len(),
        config.layers,
        config.ansatz().map_or(0, |a| a.n_params)
    );

    let mut model = config.build_model()?;
    let mut optimizers = config.build_optimizers(&model);
    let loss_path = out_path(config, "loss.csv");
    if loss_path.exists() {
        std::fs::remove_file(&loss_path)?;
    }
    append_csv(
        &loss_path,
        "epoch,batch,nll,logdet_mean,base_logp_mean",
        &[],
    )?;
    let ckpt_path = out_path(config, "checkpoint.bin");
    checkpoint::save(&ckpt_path, &model, config.hidden, 0)?;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed_shuffle ^ 0x7a17);
    for epoch in 1..=config.epochs {
        let report = train_epoch(
            &data.train,
            &mut model,
            &mut optimizers,
            config.batch_size,
            &mut shuffle_rng,
        )?;
        let rows: Vec<String> = report
            .batches
            .iter()
            .enumerate()
            .map(|(b, r)| {
                format!(
                    "{epoch},{b},{},{},{}",
                    r.nll, r.logdet_mean, r.base_logp_mean
                )
            })
            .collect();
        append_csv(
            &loss_path,
            "epoch,batch,nll,logdet_mean,base_logp_mean",
            &rows,
        )?;
        checkpoint::save(&ckpt_path, &model, config.hidden, epoch)?;

        let mut sample_rng =
            ChaCha8Rng::seed_from_u64(config.seed_sample.wrapping_add(epoch as u64));
        let drawn = sample(
            &model,
            &mut sample_rng,
            SHEET_COLUMNS * 2,
            config.temperature,
        )?;
        write_sample_sheet(
            &out_path(config, &format!("samples/epoch_{epoch:04}.pgm")),
            &drawn,
            config.image_size,
        )?;
        println!(
            "epoch {epoch:3}: nll {:.4}  logdet {:.4}  base_logp {:.4}",
            report.summary.nll, report.summary.logdet_mean, report.summary.base_logp_mean
        );
    }
    println!("checkpoint written to {}", ckpt_path.display());
    Ok(())
}

fn load_checkpoint_for(
    config: &RunConfig,
    checkpoint_path: Option<&str>,
) -> Result<(FlowModel, checkpoint::Manifest)> {
    let path = checkpoint_path
        .map(PathBuf::from)
        .unwrap_or_else(|| out_path(config, "checkpoint.bin"));
    let (model, manifest) = checkpoint::load(&path)?;
    if manifest.splits != config.splits() {
        return Err(Error::Config(format!(
            "checkpoint shape {:?} does not match the configured shape {:?}",
            manifest.splits,
            config.splits()
        )));
    }
    Ok((model, manifest))
}

/// Draws `count` samples from a trained checkpoint and writes them as
/// individual PGM files plus one contact sheet.
pub fn cmd_generate(config: &RunConfig, checkpoint_path: Option<&str>, count: usize) -> Result<()> {
    let (model, manifest) = load_checkpoint_for(config, checkpoint_path)?;
    let dir = out_path(config, "generated");
    std::fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed_sample);
    let drawn = sample(&model, &mut rng, count, config.temperature)?;
    for (i, s) in drawn.iter().enumerate() {
        write_pgm(
            &dir.join(format!("sample_{i:04}.pgm")),
            &from_sample(s, config.image_size)?,
        )?;
    }
    write_sample_sheet(&dir.join("sheet.pgm"), &drawn, config.image_size)?;
    println!(
        "wrote {count} samples from the epoch-{} checkpoint to {}",
        manifest.epoch,
        dir.display()
    );
    Ok(())
}

/// Evaluation summary; also appended to metrics.csv by [`cmd_evaluate`].
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub epoch: usize,
    pub fid_proxy: f64,
    pub noise_fid: f64,
    pub holdout_nll: f64,
    pub n_generated: usize,
    pub n_real: usize,
}

fn noise_images(count: usize, side: usize, rng: &mut ChaCha8Rng) -> Vec<Image> {
    (0..count)
        .map(|_| Image {
            height: side,
            width: side,
            pixels: (0..side * side)
                .map(|_| rng.random_range(0.0..1.0))
                .collect(),
        })
        .collect()
}

/// Scores a checkpoint against the held-out real images: pixel-space Frechet
/// distance of generated vs real, uniform-noise baseline, and holdout nll.
pub fn cmd_evaluate(config: &RunConfig, checkpoint_path: Option<&str>) -> Result<EvalReport> {
    let (model, manifest) = load_checkpoint_for(config, checkpoint_path)?;
    let data = prepare_data(config)?;
    if data.holdout.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: data.holdout.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed_sample);
    let drawn = sample(&model, &mut rng, config.eval_samples, config.temperature)?;
    let generated: Vec<Image> = drawn
        .iter()
        .map(|s| from_sample(s, config.image_size))
        .collect::<Result<_>>()?;
    let fid = fid_proxy(&generated, &data.holdout)?;
    let noise = noise_images(config.eval_samples, config.image_size, &mut rng);
    let noise_fid = fid_proxy(&noise, &data.holdout)?;

    let splits = config.splits();
    let holdout_samples: Vec<SampleVector> = data
        .holdout
        .iter()
        .map(|im| to_sample_dequantized(im, splits, &mut rng))
        .collect::<Result<_>>()?;
    let holdout_nll = nll_loss(&holdout_samples, &model)?.nll;

    let report = EvalReport {
        epoch: manifest.epoch,
        fid_proxy: fid,
        noise_fid,
        holdout_nll,
        n_generated: generated.len(),
        n_real: data.holdout.len(),
    };
    std::fs::create_dir_all(&config.out_dir)?;
    append_csv(
        &out_path(config, "metrics.csv"),
        "epoch,fid_proxy,n_generated,n_real",
        &[format!(
            "{},{},{},{}",
            report.epoch, report.fid_proxy, report.n_generated, report.n_real
        )],
    )?;
    println!(
        "epoch {}: fid_proxy {:.4} (uniform-noise baseline {:.4}), holdout nll {:.4} \
         over {} generated vs {} real",
        report.epoch,
        report.fid_proxy,
        report.noise_fid,
        report.holdout_nll,
        report.n_generated,
        report.n_real
    );
    Ok(report)
}

/// Runs the verification suite and prints one line per check. Returns whether
/// everything passed.
pub fn cmd_check(config: &RunConfig, corrupt_adjoint: bool) -> Result<bool> {
    let reports = verify::run_all(config, corrupt_adjoint)?;
    let mut all_ok = true;
    for r in &reports {
        println!("{r}");
        all_ok &= r.passed();
    }
    Ok(all_ok)
}
