//! Successive-halving search over hyperparameter configurations.
//!
//! With `n` configurations and reduction factor `eta` the search runs
//! `s = ceil(log_eta n)` rounds and gives each round `R = B / s` of the total
//! budget `B`, measured in full training runs. Round `i` trains every
//! surviving configuration at fidelity `f_i` and keeps the best
//! `ceil(|pool| / eta)` by validation MRR (ties go to the lower config id).
//!
//! | variant    | epochs       | graph                       | `f_i`               |
//! |------------|--------------|-----------------------------|---------------------|
//! | `epoch`    | `f_i * E`    | full                        | `R / |pool|`        |
//! | `graph`    | `E`          | `f_i` of the triples        | `R / |pool|`        |
//! | `combined` | `f_i * E`    | `f_i` of the triples        | `sqrt(R / |pool|)`  |
//!
//! A trial costs `(E_i / E) * (|K_i| / |K|)`, so every round spends `R`
//! whenever no fidelity needs clamping to 1.

pub(crate) mod run;

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{Norm, Scorer};
use crate::reduce::{select_core_for_fidelity, CoreLadder};
use crate::{Error, Result};

pub use run::{
    RoundGraph,
    final_train, run_search, BudgetLedger, Executor, FinalRun, SearchObserver, SearchOutcome,
    Sequential, TrialResult, TrialStatus,
};

/// Which fidelity dimensions the search reduces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Variant {
    Epoch,
    Graph,
    #[default]
    Combined,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Epoch => "epoch",
            Variant::Graph => "graph",
            Variant::Combined => "combined",
        }
    }

    fn reduces_epochs(self) -> bool {
        self != Variant::Graph
    }

    fn reduces_graph(self) -> bool {
        self != Variant::Epoch
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epoch" => Ok(Variant::Epoch),
            "graph" => Ok(Variant::Graph),
            "combined" => Ok(Variant::Combined),
            _ => Err(Error::InvalidParam(alloc::format!("unknown variant {s:?}"))),
        }
    }
}

/// How a low-fidelity graph is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum GraphReduction {
    #[default]
    KCore,
    TripleSample,
    RandomWalk { walk_length: usize },
}

impl GraphReduction {
    pub fn name(self) -> &'static str {
        match self {
            GraphReduction::KCore => "kcore",
            GraphReduction::TripleSample => "triple",
            GraphReduction::RandomWalk { .. } => "walk",
        }
    }
}

/// The embedding model being tuned. Fixed for the whole search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    pub scorer: Scorer,
    pub dim: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub norm: Norm,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            scorer: Scorer::ComplEx,
            dim: 128,
            norm: Norm::L2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchParams {
    /// Total budget in full training runs.
    pub budget: f64,
    pub num_configs: usize,
    pub eta: usize,
    /// Epochs of a full-fidelity run.
    pub max_epochs: f64,
    pub variant: Variant,
    /// Upper bound on the per-round validation split.
    pub valid_size: usize,
    pub reduction: GraphReduction,
    pub seed: u64,
    pub model: ModelSpec,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            budget: 3.0,
            num_configs: 64,
            eta: 4,
            max_epochs: 20.0,
            variant: Variant::Combined,
            valid_size: 5000,
            reduction: GraphReduction::KCore,
            seed: 0,
            model: ModelSpec::default(),
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return bad("budget must be positive");
        }
        if self.num_configs == 0 {
            return bad("num_configs must be at least 1");
        }
        if self.eta < 2 {
            return bad("eta must be at least 2");
        }
        if self.num_configs < self.eta {
            return bad("num_configs must be at least eta");
        }
        if !(self.max_epochs > 0.0 && self.max_epochs.is_finite()) {
            return bad("max_epochs must be positive");
        }
        if self.valid_size == 0 {
            return bad("valid_size must be at least 1");
        }
        if self.model.dim == 0 || (self.model.scorer.is_complex() && !self.model.dim.is_multiple_of(2)) {
            return Err(Error::InvalidDimension {
                dim: self.model.dim,
                reason: "must be positive, and even for complex-valued models",
            });
        }
        if let GraphReduction::RandomWalk { walk_length: 0 } = self.reduction {
            return bad("walk_length must be at least 1");
        }
        Ok(())
    }
}

/// Smallest `s` with `eta^s >= n`, and at least 1.
pub fn num_rounds(n: usize, eta: usize) -> usize {
    let mut s = 0;
    let mut reach = 1usize;
    while reach < n {
        reach = reach.saturating_mul(eta);
        s += 1;
    }
    s.max(1)
}

/// Pool size at the start of every round, followed by the final survivor
/// count.
pub fn survivor_counts(n: usize, eta: usize) -> Vec<usize> {
    let s = num_rounds(n, eta);
    let mut counts = Vec::with_capacity(s + 1);
    let mut m = n;
    counts.push(m);
    for _ in 0..s {
        m = m.div_ceil(eta);
        counts.push(m);
    }
    counts
}

/// Cost of one trial in full training runs.
pub fn trial_cost(epochs: f64, max_epochs: f64, triples: usize, full_triples: usize) -> f64 {
    (epochs / max_epochs) * (triples as f64 / full_triples as f64)
}

/// One round of a planned search.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundPlan {
    pub round: usize,
    pub configs: usize,
    pub survivors: usize,
    /// Fidelity per reduced dimension, after clamping to 1.
    pub fidelity: f64,
    /// Relative cost of one trial before graph sizes are known: the product
    /// of the epoch share and the target graph share.
    pub nominal_trial_cost: f64,
    pub epochs: f64,
    /// Target share of the triples; 1 when the graph is not reduced.
    pub graph_fraction: f64,
    /// Chosen core for k-core reduction.
    pub core_k: Option<usize>,
    /// Triples of the round's graph, exact for k-cores and full graphs and
    /// approximate for samples.
    pub triples: usize,
    /// Planned cost of the whole round.
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchSchedule {
    pub rounds: Vec<RoundPlan>,
    /// `R`, the per-round budget.
    pub round_budget: f64,
    pub planned_cost: f64,
    pub warnings: Vec<String>,
}

/// Plans fidelities, epochs and graph sizes for every round.
///
/// `ladder` is required for k-core reduction unless the variant keeps the
/// full graph.
pub fn plan_schedule(params: &SearchParams, num_triples: usize, ladder: Option<&CoreLadder>) -> Result<SearchSchedule> {
    params.validate()?;
    if num_triples == 0 {
        return Err(Error::NoTriples);
    }
    let counts = survivor_counts(params.num_configs, params.eta);
    let s = counts.len() - 1;
    let r = params.budget / s as f64;
    let mut warnings = Vec::new();
    let mut rounds = Vec::with_capacity(s);
    for i in 0..s {
        let pool = counts[i];
        let raw = match params.variant {
            Variant::Combined => libm::sqrt(r / pool as f64),
            _ => r / pool as f64,
        };
        let fidelity = if raw > 1.0 {
            warnings.push(alloc::format!(
                "round {i}: fidelity {raw:.3} exceeds 1 and is clamped; the round underspends its budget"
            ));
            1.0
        } else {
            raw
        };
        let epochs = if params.variant.reduces_epochs() {
            fidelity * params.max_epochs
        } else {
            params.max_epochs
        };
        if epochs != libm::floor(epochs) {
            warnings.push(alloc::format!("round {i}: {epochs:.3} epochs; the last epoch is partial"));
        }
        let graph_fraction = if params.variant.reduces_graph() { fidelity } else { 1.0 };
        let (core_k, triples) = if graph_fraction >= 1.0 {
            (None, num_triples)
        } else {
            match params.reduction {
                GraphReduction::KCore => {
                    let ladder = ladder.ok_or_else(|| Error::InvalidParam("k-core reduction needs a core ladder".into()))?;
                    let choice = select_core_for_fidelity(ladder, graph_fraction);
                    let level = ladder.level(choice.k).ok_or(Error::EmptyCore { k: choice.k, max_k: ladder.max_k() })?;
                    if choice.overshoot {
                        warnings.push(alloc::format!(
                            "round {i}: even the {}-core holds {} triples, above the target of {:.0}",
                            choice.k,
                            level.triples,
                            graph_fraction * num_triples as f64
                        ));
                    }
                    (Some(choice.k), level.triples)
                }
                _ => (None, libm::round(graph_fraction * num_triples as f64).max(1.0) as usize),
            }
        };
        let cost = pool as f64 * trial_cost(epochs, params.max_epochs, triples, num_triples);
        rounds.push(RoundPlan {
            round: i,
            configs: pool,
            survivors: counts[i + 1],
            fidelity,
            nominal_trial_cost: (epochs / params.max_epochs) * graph_fraction,
            epochs,
            graph_fraction,
            core_k,
            triples,
            cost,
        });
    }
    let planned_cost = rounds.iter().map(|p| p.cost).sum();
    Ok(SearchSchedule {
        rounds,
        round_budget: r,
        planned_cost,
        warnings,
    })
}
