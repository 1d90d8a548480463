use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CommonArgs, ProblemArgs};
use crate::error::{Error, Result};
use crate::model::{Hyperparams, Optimizer};
use crate::problem::ProblemSpec;
use crate::statespace::DomainKind;

/// Resolved settings shared by the experiment commands. Seeds are always
/// explicit; nothing is seeded from the clock.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    #[serde(rename = "K")]
    pub k: Vec<u32>,
    pub w: Vec<f64>,
    pub seeds: Vec<u64>,
    pub expansion_limit: Option<u64>,
    pub problems: usize,
    pub problem_spec: ProblemSpec,
    /// Not part of the hash: the same run written elsewhere is the same run.
    #[serde(skip)]
    pub out: PathBuf,
}

pub(crate) struct Defaults<'a> {
    pub domain: DomainKind,
    pub k: &'a [u32],
    pub w: &'a [f64],
    pub problems: usize,
}

impl ExperimentConfig {
    pub(crate) fn resolve(
        common: &CommonArgs,
        problems: &ProblemArgs,
        defaults: Defaults<'_>,
    ) -> Result<Self> {
        let config = ExperimentConfig {
            domain: common.domain.unwrap_or(defaults.domain),
            k: if common.k.is_empty() {
                defaults.k.to_vec()
            } else {
                common.k.clone()
            },
            w: if common.w.is_empty() {
                defaults.w.to_vec()
            } else {
                common.w.clone()
            },
            seeds: common.seed.clone(),
            expansion_limit: common.expansion_limit,
            problems: problems.problems.unwrap_or(defaults.problems),
            problem_spec: ProblemSpec {
                min_distance: problems.min_distance,
                max_distance: problems.max_distance,
                ..ProblemSpec::default()
            },
            out: common.out.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() || self.w.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "--k, --w and --seed need at least one value".into(),
            ));
        }
        if self.k.contains(&0) {
            return Err(Error::Config("K must be >= 1".into()));
        }
        if let Some(w) = self.w.iter().find(|w| !(**w >= 1.0 && w.is_finite())) {
            return Err(Error::Config(format!(
                "weight {w} must be a finite value >= 1"
            )));
        }
        if self.problems == 0 {
            return Err(Error::Config("--problems must be >= 1".into()));
        }
        if self.problem_spec.min_distance > self.problem_spec.max_distance {
            return Err(Error::Config(
                "--min-distance exceeds --max-distance".into(),
            ));
        }
        Ok(())
    }

    pub fn single_k(&self) -> Result<u32> {
        single("--k", &self.k)
    }

    pub fn single_w(&self) -> Result<f64> {
        single("--w", &self.w)
    }

    pub fn single_seed(&self) -> Result<u64> {
        single("--seed", &self.seeds)
    }
}

fn single<T: Copy>(flag: &str, values: &[T]) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => Err(Error::Config(format!(
            "{flag} takes exactly one value for this command"
        ))),
    }
}

/// Training flags.
#[derive(Clone, Debug, Args, Serialize)]
pub struct TrainParams {
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64,64")]
    pub hidden: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Optimizer::Adam)]
    pub optimizer: Optimizer,
    /// Give every sample weight 1 instead of its alpha.
    #[arg(long)]
    pub no_alpha: bool,
    /// Train on the eight rotations and reflections of every sample.
    #[arg(long)]
    pub symmetries: bool,
    /// Regress incomplete samples onto their target divided by alpha.
    #[arg(long)]
    pub scale_incomplete: bool,
}

impl TrainParams {
    pub fn hyperparams(&self, seed: u64) -> Result<Hyperparams> {
        let h = Hyperparams {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            hidden: self.hidden.clone(),
            optimizer: self.optimizer,
            use_alpha: !self.no_alpha,
            symmetries: self.symmetries,
            scale_incomplete: self.scale_incomplete,
            seed,
        };
        h.validate()?;
        Ok(h)
    }
}

/// SHA-256 (hex) of the command name, its settings and the digests of its
/// inputs, over canonical JSON.
pub fn config_hash<C: Serialize, I: Serialize>(command: &str, config: &C, inputs: &I) -> String {
    let value = serde_json::json!({
        "command": command,
        "config": config,
        "inputs": inputs,
    });
    let bytes = serde_json::to_vec(&value).expect("config serializes");
    crate::model::train::hex(&Sha256::digest(bytes))
}
