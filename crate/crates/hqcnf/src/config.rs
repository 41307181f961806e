//! Plain-text run configuration: `key = value` lines, `#` comments, unknown
//! keys rejected.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{CouplingLayer, FlowModel, Splits};
use crate::neural::{AdamWConfig, AdamWState};
use crate::objective::BaseDensitySpec;
use crate::qsim::AnsatzSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train_images: String,
    pub train_labels: String,
    pub digits: Vec<u8>,
    pub image_size: usize,
    pub train_limit: usize,
    pub holdout_fraction: f64,

    pub d1: usize,
    pub d2: usize,
    pub total: usize,
    pub qubits: usize,
    pub blocks: usize,
    pub layers: usize,
    pub hidden: usize,

    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,

    pub sigma_classical: f64,
    pub sigma_quantum: f64,
    pub temperature: f64,
    pub eval_samples: usize,

    pub seed_init: u64,
    pub seed_shuffle: u64,
    pub seed_sample: u64,

    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train_images: "data/train-images-idx3-ubyte".into(),
            train_labels: "data/train-labels-idx1-ubyte".into(),
            digits: vec![0, 1],
            image_size: 8,
            train_limit: 0,
            holdout_fraction: 0.1,
            d1: 16,
            d2: 32,
            total: 64,
            qubits: 5,
            blocks: 4,
            layers: 6,
            hidden: 64,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
            batch_size: 64,
            epochs: 20,
            sigma_classical: 1.0,
            sigma_quantum: 0.1,
            temperature: 1.0,
            eval_samples: 256,
            seed_init: 1,
            seed_shuffle: 2,
            seed_sample: 3,
            out_dir: "out".into(),
        }
    }
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("field '{key}': cannot parse '{value}'")))
}

impl RunConfig {
    /// Parses config text over the defaults. Unknown keys are errors so typos
    /// do not silently fall back to defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "train_images" => cfg.train_images = value.to_string(),
                "train_labels" => cfg.train_labels = value.to_string(),
                "digits" => {
                    cfg.digits = value
                        .split(',')
                        .map(|d| parse_as::<u8>(key, d.trim()))
                        .collect::<Result<_>>()?;
                }
                "image_size" => cfg.image_size = parse_as(key, value)?,
                "train_limit" => cfg.train_limit = parse_as(key, value)?,
                "holdout_fraction" => cfg.holdout_fraction = parse_as(key, value)?,
                "d1" => cfg.d1 = parse_as(key, value)?,
                "d2" => cfg.d2 = parse_as(key, value)?,
                "total" => cfg.total = parse_as(key, value)?,
                "qubits" => cfg.qubits = parse_as(key, value)?,
                "blocks" => cfg.blocks = parse_as(key, value)?,
                "layers" => cfg.layers = parse_as(key, value)?,
                "hidden" => cfg.hidden = parse_as(key, value)?,
                "lr" => cfg.lr = parse_as(key, value)?,
                "beta1" => cfg.beta1 = parse_as(key, value)?,
                "beta2" => cfg.beta2 = parse_as(key, value)?,
                "eps" => cfg.eps = parse_as(key, value)?,
                "weight_decay" => cfg.weight_decay = parse_as(key, value)?,
                "batch_size" => cfg.batch_size = parse_as(key, value)?,
                "epochs" => cfg.epochs = parse_as(key, value)?,
                "sigma_classical" => cfg.sigma_classical = parse_as(key, value)?,
                "sigma_quantum" => cfg.sigma_quantum = parse_as(key, value)?,
                "temperature" => cfg.temperature = parse_as(key, value)?,
                "eval_samples" => cfg.eval_samples = parse_as(key, value)?,
                "seed_init" => cfg.seed_init = parse_as(key, value)?,
                "seed_shuffle" => cfg.seed_shuffle = parse_as(key, value)?,
                "seed_sample" => cfg.seed_sample = parse_as(key, value)?,
                "out_dir" => cfg.out_dir = value.to_string(),
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses, validates; `HQCNF_OUT` overrides the output directory.
    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let Ok(out) = std::env::var("HQCNF_OUT") {
            cfg.out_dir = out;
        }
        Ok(cfg)
    }

    /// Structural consistency, checked before any data is touched.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.image_size * self.image_size != self.total {
            return fail(format!(
                "image_size^2 = {} must equal total = {}",
                self.image_size * self.image_size,
                self.total
            ));
        }
        Splits::new(self.d1, self.d2, self.total)?;
        let quantum_dim = self.total - self.d2;
        if quantum_dim > 0 && (1usize << self.qubits) != quantum_dim {
            return fail(format!(
                "qubits = {}: 2^qubits must equal total - d2 = {quantum_dim}",
                self.qubits
            ));
        }
        if quantum_dim > 0 && self.blocks == 0 {
            return fail("blocks must be positive".into());
        }
        if self.layers == 0 {
            return fail("layers must be positive".into());
        }
        if self.hidden == 0 {
            return fail("hidden must be positive".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        if !(self.sigma_classical > 0.0 && self.sigma_quantum > 0.0) {
            return fail("sigmas must be positive".into());
        }
        if self.temperature < 0.0 {
            return fail("temperature must be nonnegative".into());
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return fail("holdout_fraction must be in [0, 1)".into());
        }
        if self.eval_samples < 2 {
            return fail("eval_samples must be at least 2".into());
        }
        Ok(())
    }

    pub fn splits(&self) -> Splits {
        Splits::new(self.d1, self.d2, self.total).expect("validated")
    }

    pub fn ansatz(&self) -> Option<AnsatzSpec> {
        (self.total > self.d2).then(|| AnsatzSpec::hardware_efficient(self.qubits, self.blocks))
    }

    pub fn base_density(&self) -> BaseDensitySpec {
        BaseDensitySpec::standard(self.splits(), self.sigma_classical, self.sigma_quantum)
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    /// Identity-initialized model from `seed_init`.
    pub fn build_model(&self) -> Result<FlowModel> {
        let splits = self.splits();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed_init);
        let layers = (0..self.layers)
            .map(|_| CouplingLayer::init(splits, self.hidden, self.ansatz(), &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let model = FlowModel {
            layers,
            base: self.base_density(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn build_optimizers(&self, model: &FlowModel) -> Vec<AdamWState> {
        model
            .layers
            .iter()
            .map(|l| AdamWState::new(l.n_params(), self.adamw()))
            .collect()
    }
}
