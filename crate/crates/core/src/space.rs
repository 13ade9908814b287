//! Hyperparameter search space and random configuration sampling.
//!
//! The default space has nine numeric hyperparameters (learning rate, lr
//! decay, weight decay, entity and relation L2 penalties, dropout, init
//! scale, negatives, batch size) and two categorical ones (optimizer,
//! negative pool). The embedding dimension is fixed per search.
//!
//! Sampling draws one uniform number per numeric field and maps it through
//! the field's quantile function. The number of negatives uses a per-model
//! upper bound, so the same seed gives the same configurations for every
//! model except in that one field.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::model::Scorer;
use crate::rng::rng_from;
use crate::train::{NegativePool, OptimizerKind, TrainConfig};
use crate::{Error, Result};

const TAG_SPACE: u64 = 7;

/// Domain of one numeric hyperparameter.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Domain {
    Uniform { low: f64, high: f64 },
    /// Log-uniform; draws below `zero_below` are switched off (set to 0).
    LogUniform {
        low: f64,
        high: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        zero_below: Option<f64>,
    },
    /// Log-uniform over the integers `low..=high`.
    IntLog { low: u64, high: u64 },
    Fixed { value: f64 },
}

impl Domain {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Domain::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            Domain::LogUniform { low, high, .. } => low.is_finite() && high.is_finite() && 0.0 < low && low < high,
            Domain::IntLog { low, high } => 0 < low && low < high,
            Domain::Fixed { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(alloc::format!("bad domain for {name}: {self:?}")))
        }
    }

    /// Maps `u` in `[0, 1)` to a value of the domain.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Domain::Uniform { low, high } => low + u * (high - low),
            Domain::LogUniform { low, high, zero_below } => {
                let v = libm::exp(libm::log(low) + u * (libm::log(high) - libm::log(low)));
                match zero_below {
                    Some(z) if v < z => 0.0,
                    _ => v.clamp(low, high),
                }
            }
            Domain::IntLog { low, high } => {
                let (l, h) = (low as f64, high as f64 + 1.0);
                let v = libm::floor(libm::exp(libm::log(l) + u * (libm::log(h) - libm::log(l))));
                v.clamp(l, high as f64)
            }
            Domain::Fixed { value } => value,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Domain::Uniform { low, high } => low <= v && v <= high,
            Domain::LogUniform { low, high, zero_below } => (zero_below.is_some() && v == 0.0) || (low <= v && v <= high),
            Domain::IntLog { low, high } => v == libm::floor(v) && low as f64 <= v && v <= high as f64,
            Domain::Fixed { value } => v == value,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchSpace {
    pub learning_rate: Domain,
    pub lr_decay: Domain,
    pub weight_decay: Domain,
    pub entity_penalty: Domain,
    pub relation_penalty: Domain,
    pub dropout: Domain,
    pub init_scale: Domain,
    /// Upper bound is overridden per model by `negatives_cap`.
    pub num_negatives: Domain,
    pub batch_size: Domain,
    pub optimizers: Vec<OptimizerKind>,
    pub negative_pools: Vec<NegativePool>,
    pub negatives_cap: BTreeMap<Scorer, u64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        use Domain::*;
        let penalty = LogUniform { low: 1e-12, high: 1e-1, zero_below: Some(1e-10) };
        Self {
            learning_rate: LogUniform { low: 1e-4, high: 1.0, zero_below: None },
            lr_decay: Uniform { low: 0.9, high: 1.0 },
            weight_decay: LogUniform { low: 1e-12, high: 1e-2, zero_below: Some(1e-10) },
            entity_penalty: penalty,
            relation_penalty: penalty,
            dropout: Uniform { low: 0.0, high: 0.5 },
            init_scale: LogUniform { low: 1e-4, high: 1.0, zero_below: None },
            num_negatives: IntLog { low: 16, high: 10_000 },
            batch_size: IntLog { low: 128, high: 4096 },
            optimizers: alloc::vec![OptimizerKind::Adagrad, OptimizerKind::Adam],
            negative_pools: alloc::vec![NegativePool::Uniform, NegativePool::Frequency],
            negatives_cap: [(Scorer::ComplEx, 10_000), (Scorer::TransE, 1000), (Scorer::RotatE, 1000)]
                .into_iter()
                .collect(),
        }
    }
}

impl SearchSpace {
    /// A scaled-down space for graphs with a few thousand entities.
    pub fn desk() -> Self {
        use Domain::*;
        let penalty = LogUniform { low: 1e-12, high: 1e-1, zero_below: Some(1e-10) };
        Self {
            learning_rate: LogUniform { low: 1e-3, high: 1.0, zero_below: None },
            lr_decay: Uniform { low: 0.9, high: 1.0 },
            weight_decay: LogUniform { low: 1e-12, high: 1e-2, zero_below: Some(1e-10) },
            entity_penalty: penalty,
            relation_penalty: penalty,
            dropout: Uniform { low: 0.0, high: 0.3 },
            init_scale: LogUniform { low: 1e-3, high: 1.0, zero_below: None },
            num_negatives: IntLog { low: 4, high: 64 },
            batch_size: IntLog { low: 64, high: 1024 },
            optimizers: alloc::vec![OptimizerKind::Adagrad, OptimizerKind::Adam],
            negative_pools: alloc::vec![NegativePool::Uniform, NegativePool::Frequency],
            negatives_cap: [(Scorer::ComplEx, 64), (Scorer::TransE, 64), (Scorer::RotatE, 64)]
                .into_iter()
                .collect(),
        }
    }

    fn numeric(&self) -> [(&'static str, &Domain); 9] {
        [
            ("learning_rate", &self.learning_rate),
            ("lr_decay", &self.lr_decay),
            ("weight_decay", &self.weight_decay),
            ("entity_penalty", &self.entity_penalty),
            ("relation_penalty", &self.relation_penalty),
            ("dropout", &self.dropout),
            ("init_scale", &self.init_scale),
            ("num_negatives", &self.num_negatives),
            ("batch_size", &self.batch_size),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in self.numeric() {
            d.validate(name)?;
        }
        if self.optimizers.is_empty() || self.negative_pools.is_empty() {
            return Err(Error::InvalidParam("categorical hyperparameters need at least one option".into()));
        }
        if !matches!(self.num_negatives, Domain::IntLog { .. } | Domain::Fixed { .. }) {
            return Err(Error::InvalidParam("num_negatives must be an int_log or fixed domain".into()));
        }
        if !matches!(self.batch_size, Domain::IntLog { .. } | Domain::Fixed { .. }) {
            return Err(Error::InvalidParam("batch_size must be an int_log or fixed domain".into()));
        }
        Ok(())
    }

    /// The negatives domain with the model's cap applied.
    pub fn negatives_domain(&self, scorer: Scorer) -> Domain {
        match (self.num_negatives, self.negatives_cap.get(&scorer)) {
            (Domain::IntLog { low, high }, Some(&cap)) => Domain::IntLog { low, high: cap.max(low + 1).min(high.max(cap)) },
            (d, _) => d,
        }
    }

    /// Checks every value of `cfg` against its domain.
    pub fn contains(&self, cfg: &HyperparamConfig, scorer: Scorer) -> bool {
        self.learning_rate.contains(cfg.learning_rate)
            && self.lr_decay.contains(cfg.lr_decay)
            && self.weight_decay.contains(cfg.weight_decay)
            && self.entity_penalty.contains(cfg.entity_penalty)
            && self.relation_penalty.contains(cfg.relation_penalty)
            && self.dropout.contains(cfg.dropout)
            && self.init_scale.contains(cfg.init_scale)
            && self.negatives_domain(scorer).contains(cfg.num_negatives as f64)
            && self.batch_size.contains(cfg.batch_size as f64)
            && self.optimizers.contains(&cfg.optimizer)
            && self.negative_pools.contains(&cfg.negative_pool)
    }
}

/// One point of the search space.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HyperparamConfig {
    pub id: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub entity_penalty: f64,
    pub relation_penalty: f64,
    pub dropout: f64,
    pub init_scale: f64,
    pub num_negatives: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub negative_pool: NegativePool,
}

impl HyperparamConfig {
    /// Training settings for this configuration.
    pub fn train_config(&self, num_negatives: usize, epochs: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            num_negatives,
            optimizer: self.optimizer,
            learning_rate: self.learning_rate,
            lr_decay: self.lr_decay,
            weight_decay: self.weight_decay,
            entity_penalty: self.entity_penalty,
            relation_penalty: self.relation_penalty,
            dropout: self.dropout,
            batch_size: self.batch_size,
            init_scale: self.init_scale,
            negative_pool: self.negative_pool,
            epochs,
            seed,
            ..TrainConfig::default()
        }
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        alloc::format!(
            "#{} lr={:.3e} opt={} neg={} batch={} drop={:.2}",
            self.id,
            self.learning_rate,
            self.optimizer.name(),
            self.num_negatives,
            self.batch_size,
            self.dropout
        )
    }
}

/// Draws `n` configurations, ids `0..n`. Deterministic in `seed`.
pub fn sample_configs(space: &SearchSpace, n: usize, seed: u64, scorer: Scorer) -> Result<Vec<HyperparamConfig>> {
    space.validate()?;
    let mut rng = rng_from(seed, &[TAG_SPACE]);
    let negatives = space.negatives_domain(scorer);
    let configs = (0..n)
        .map(|id| {
            let mut u = [0.0f64; 9];
            for x in &mut u {
                *x = rng.gen::<f64>();
            }
            let opt = rng.gen_range(0..space.optimizers.len());
            let pool = rng.gen_range(0..space.negative_pools.len());
            HyperparamConfig {
                id,
                learning_rate: space.learning_rate.quantile(u[0]),
                lr_decay: space.lr_decay.quantile(u[1]),
                weight_decay: space.weight_decay.quantile(u[2]),
                entity_penalty: space.entity_penalty.quantile(u[3]),
                relation_penalty: space.relation_penalty.quantile(u[4]),
                dropout: space.dropout.quantile(u[5]),
                init_scale: space.init_scale.quantile(u[6]),
                num_negatives: negatives.quantile(u[7]) as usize,
                batch_size: space.batch_size.quantile(u[8]) as usize,
                optimizer: space.optimizers[opt],
                negative_pool: space.negative_pools[pool],
            }
        })
        .collect();
    Ok(configs)
}
