//! Flat binary checkpoints: `HQCF` magic, version, parameter count, 64-bit
//! little-endian floats in canonical layer order (per layer: s net, t net,
//! r net), followed by a plain-text manifest describing the model shape.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{CouplingLayer, FlowModel, Splits};
use crate::objective::BaseDensitySpec;
use crate::qsim::AnsatzSpec;

pub const MAGIC: &[u8; 4] = b"HQCF";
pub const VERSION: u32 = 1;

/// Model shape as recorded in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub layers: usize,
    pub splits: Splits,
    pub hidden: usize,
    pub sigma_classical: f64,
    pub sigma_quantum: f64,
    pub epoch: usize,
    pub ansatz: Option<AnsatzSpec>,
}

impl Manifest {
    fn to_text(&self) -> String {
        let mut out = format!(
            "layers = {}\nd1 = {}\nd2 = {}\ntotal = {}\nhidden = {}\n\
             sigma_classical = {}\nsigma_quantum = {}\nepoch = {}\n",
            self.layers,
            self.splits.d1,
            self.splits.d2,
            self.splits.total,
            self.hidden,
            self.sigma_classical,
            self.sigma_quantum,
            self.epoch,
        );
        if let Some(ansatz) = &self.ansatz {
            out.push_str("ansatz:\n");
            out.push_str(&ansatz.to_text());
        }
        out
    }

    fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(format!("manifest: {msg}"));
        let (head, ansatz_text) = match text.split_once("ansatz:\n") {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        let mut fields = std::collections::HashMap::new();
        for line in head.lines() {
            if let Some((k, v)) = line.split_once('=') {
                fields.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| -> Result<String> {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| bad(&format!("missing field '{k}'")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| bad(&format!("bad field '{k}'")))
        };
        let fnum = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| bad(&format!("bad field '{k}'")))
        };
        Ok(Self {
            layers: num("layers")?,
            splits: Splits::new(num("d1")?, num("d2")?, num("total")?)?,
            hidden: num("hidden")?,
            sigma_classical: fnum("sigma_classical")?,
            sigma_quantum: fnum("sigma_quantum")?,
            epoch: num("epoch")?,
            ansatz: ansatz_text.map(AnsatzSpec::from_text).transpose()?,
        })
    }
}

pub fn manifest_for(model: &FlowModel, hidden: usize, epoch: usize) -> Manifest {
    Manifest {
        layers: model.layers.len(),
        splits: model.splits(),
        hidden,
        sigma_classical: model.base.sigma_classical,
        sigma_quantum: model.base.sigma_quantum,
        epoch,
        ansatz: model.layers[0].quantum.as_ref().map(|q| q.ansatz.clone()),
    }
}

pub fn encode(model: &FlowModel, hidden: usize, epoch: usize) -> Vec<u8> {
    let mut params = Vec::new();
    for layer in &model.layers {
        layer.flatten_into(&mut params);
    }
    let mut bytes = Vec::with_capacity(16 + 8 * params.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in &params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    bytes.extend_from_slice(manifest_for(model, hidden, epoch).to_text().as_bytes());
    bytes
}

pub fn decode(bytes: &[u8]) -> Result<(FlowModel, Manifest)> {
    if bytes.len() < 16 {
        return Err(Error::Checkpoint("file shorter than the header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint("bad magic (expected HQCF)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let float_end = 16 + 8 * count;
    if bytes.len() < float_end {
        return Err(Error::Checkpoint("truncated parameter block".into()));
    }
    let params: Vec<f64> = bytes[16..float_end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let manifest_text = std::str::from_utf8(&bytes[float_end..])
        .map_err(|_| Error::Checkpoint("manifest is not UTF-8".into()))?;
    let manifest = Manifest::from_text(manifest_text)?;

    // rebuild the model skeleton, then overwrite every parameter
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut layers = Vec::with_capacity(manifest.layers);
    for _ in 0..manifest.layers {
        layers.push(CouplingLayer::init(
            manifest.splits,
            manifest.hidden,
            manifest.ansatz.clone(),
            &mut rng,
        )?);
    }
    let mut model = FlowModel {
        layers,
        base: BaseDensitySpec::standard(
            manifest.splits,
            manifest.sigma_classical,
            manifest.sigma_quantum,
        ),
    };
    let expected: usize = model.layers.iter().map(|l| l.n_params()).sum();
    if expected != count {
        return Err(Error::Checkpoint(format!(
            "parameter count {count} does not match the manifest shape ({expected})"
        )));
    }
    let mut pos = 0;
    for layer in &mut model.layers {
        pos += layer.unflatten_from(&params[pos..])?;
    }
    Ok((model, manifest))
}

pub fn save(path: &std::path::Path, model: &FlowModel, hidden: usize, epoch: usize) -> Result<()> {
    std::fs::write(path, encode(model, hidden, epoch))?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<(FlowModel, Manifest)> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn small_config() -> RunConfig {
        RunConfig {
            layers: 2,
            hidden: 8,
            ..Default::default()
        }
    }

    #[test]
    fn encode_decode_roundtrip() {
        let cfg = small_config();
        let model = cfg.build_model().unwrap();
        let bytes = encode(&model, cfg.hidden, 3);
        let (back, manifest) = decode(&bytes).unwrap();
        assert_eq!(model, back);
        assert_eq!(manifest.epoch, 3);
        assert_eq!(manifest.hidden, 8);
        assert_eq!(manifest.ansatz.as_ref().unwrap().n_params, 40);
    }

    #[test]
    fn header_layout_is_fixed() {
        let cfg = small_config();
        let model = cfg.build_model().unwrap();
        let bytes = encode(&model, cfg.hidden, 0);
        assert_eq!(&bytes[..4], b"HQCF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let expected: usize = model.layers.iter().map(|l| l.n_params()).sum();
        assert_eq!(count as usize, expected);
    }

    #[test]
    fn rejects_corruption() {
        let cfg = small_config();
        let model = cfg.build_model().unwrap();
        let bytes = encode(&model, cfg.hidden, 0);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        assert!(decode(&bytes[..40]).is_err());
    }

    #[test]
    fn pure_classical_model_roundtrips() {
        let cfg = RunConfig {
            d1: 1,
            d2: 4,
            total: 4,
            image_size: 2,
            layers: 1,
            hidden: 4,
            ..Default::default()
        };
        cfg.validate().unwrap();
        let model = cfg.build_model().unwrap();
        let (back, manifest) = decode(&encode(&model, 4, 0)).unwrap();
        assert_eq!(model, back);
        assert!(manifest.ansatz.is_none());
    }
}
