//! Multi-fidelity hyperparameter search for knowledge graph embedding (KGE)
//! models.
//!
//! The search runs successive halving over a pool of randomly drawn
//! hyperparameter configurations. Early rounds train many configurations at
//! low fidelity, either on fewer epochs, on a reduced graph (a k-core, a
//! triple sample or a random-walk sample), or on both; later rounds promote
//! the best `1/eta` of the pool to higher fidelity until one configuration
//! remains.
//!
//! Everything in this crate is a pure function of its inputs and seeds, and
//! the crate only needs `alloc`. File formats, the command line and the
//! parallel trial executor live in the `grash` crate.
//!
//! Module map:
//!
//! - [`kg`]: vocabularies, triples, train/valid splits, statistics.
//! - [`reduce`]: triple sampling, multi-start random walks, k-core ladders.
//! - [`model`]: ComplEx, TransE and RotatE scoring with analytic gradients.
//! - [`train`]: negative sampling, cross-entropy loss, Adagrad/Adam, the
//!   (possibly fractional) epoch loop.
//! - [`eval`]: filtered entity ranking, MRR and Hits@k.
//! - [`space`]: the hyperparameter search space and config sampling.
//! - [`search`]: schedule planning, the round loop and budget accounting.
//! - [`analysis`]: Spearman correlation and transferability sweeps.
//! - [`synthetic`]: clustered long-tail graphs for tests and demos.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
mod error;
pub mod eval;
pub mod kg;
pub mod model;
pub mod reduce;
pub mod rng;
pub mod search;
pub mod space;
pub mod synthetic;
pub mod train;

pub use crate::error::{Error, Result};
pub use crate::eval::{evaluate, filtered_rank, RankingReport};
pub use crate::kg::{split_train_valid, stats, DatasetSplit, GraphStats, KnowledgeGraph, Triple};
pub use crate::model::{init_model, Direction, EmbeddingModel, Norm, Scorer};
pub use crate::reduce::{
    core_decomposition, k_core, random_walk_sample, select_core_for_fidelity, triple_sample,
    CoreLadder, Provenance, Subgraph,
};
pub use crate::search::{
    plan_schedule, run_search, trial_cost, Executor, SearchParams, SearchSchedule, Sequential,
    TrialResult, Variant,
};
pub use crate::space::{sample_configs, HyperparamConfig, SearchSpace};
pub use crate::train::{scale_negatives, train, LossTrace, TrainConfig};
