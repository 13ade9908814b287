use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{plan_schedule, trial_cost, GraphReduction, ModelSpec, RoundPlan, SearchParams, SearchSchedule};
use crate::eval::{evaluate_with, FilterIndex, RankingReport};
use crate::kg::{split_train_valid, DatasetSplit, KnowledgeGraph, Triple};
use crate::model::{init_model, EmbeddingModel};
use crate::reduce::{core_decomposition, k_core, random_walk_for_fidelity, triple_sample, CoreLadder, Subgraph};
use crate::rng::{derive_seed, TAG_REDUCE, TAG_SPLIT, TAG_TRIAL};
use crate::space::HyperparamConfig;
use crate::train::{scale_negatives, train, LossTrace};
use crate::{Error, Result};

/// Runs independent trials. Implementations may run them in parallel but
/// must return results in input order.
pub trait Executor {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync;
}

/// Runs trials one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        items.iter().map(f).collect()
    }
}

/// Progress callbacks, invoked on the calling thread in a fixed order.
pub trait SearchObserver {
    fn round_started(&mut self, _plan: &RoundPlan, _graph: &RoundGraph) {}
    fn trial_finished(&mut self, _trial: &TrialResult) {}
    fn round_finished(&mut self, _round: usize, _survivors: &[usize]) {}
}

impl SearchObserver for () {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TrialStatus {
    Ok,
    /// Training diverged or failed; the trial is ranked with MRR 0.
    Failed,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialResult {
    pub round: usize,
    pub config_id: usize,
    pub seed: u64,
    pub epochs: f64,
    pub num_negatives: usize,
    pub graph_entities: usize,
    pub graph_triples: usize,
    pub status: TrialStatus,
    pub valid_mrr: f64,
    pub hits_at_1: f64,
    pub hits_at_3: f64,
    pub hits_at_10: f64,
    /// Share of the budget, in full training runs.
    pub cost: f64,
    pub train_score_computations: u64,
    pub eval_score_computations: u64,
    /// Mean training loss per (partial) epoch.
    pub epoch_losses: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub error: Option<String>,
}

/// Sizes of the graph a round trained on.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundGraph {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
    pub train_triples: usize,
    pub valid_triples: usize,
    pub dropped_valid: usize,
    pub core_k: Option<usize>,
}

/// Budget actually spent, in full training runs.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BudgetLedger {
    pub budget: f64,
    pub per_round: Vec<f64>,
    pub spent: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchOutcome {
    pub best: HyperparamConfig,
    pub schedule: SearchSchedule,
    pub rounds: Vec<RoundGraph>,
    /// Survivor ids after every round, best first.
    pub survivors: Vec<Vec<usize>>,
    pub trials: Vec<TrialResult>,
    pub ledger: BudgetLedger,
}

pub(crate) struct RoundData {
    train: Vec<Triple>,
    valid: Vec<Triple>,
    filter: FilterIndex,
    entities: usize,
    relations: usize,
    triples: usize,
}

fn reduce_graph(graph: &KnowledgeGraph, plan: &RoundPlan, params: &SearchParams, ladder: Option<&CoreLadder>) -> Result<Subgraph> {
    if plan.graph_fraction >= 1.0 {
        return Ok(Subgraph::full(graph));
    }
    let seed = derive_seed(params.seed, &[TAG_REDUCE, plan.round as u64]);
    match params.reduction {
        GraphReduction::KCore => {
            let ladder = ladder.ok_or_else(|| Error::InvalidParam("k-core reduction needs a core ladder".into()))?;
            let k = plan.core_k.ok_or_else(|| Error::InvalidParam("plan lacks a core".into()))?;
            k_core(graph, k, ladder)
        }
        GraphReduction::TripleSample => triple_sample(graph, plan.graph_fraction, seed),
        GraphReduction::RandomWalk { walk_length } => random_walk_for_fidelity(graph, plan.graph_fraction, walk_length, seed),
    }
}

pub(crate) fn prepare_round(graph: &KnowledgeGraph, plan: &RoundPlan, params: &SearchParams, ladder: Option<&CoreLadder>) -> Result<(RoundData, RoundGraph)> {
    let sub = reduce_graph(graph, plan, params, ladder)?;
    let g = &sub.graph;
    let valid_size = params.valid_size.min(g.num_triples() / 5);
    let split = split_train_valid(g, valid_size, derive_seed(params.seed, &[TAG_SPLIT, plan.round as u64]))?;
    let filter = FilterIndex::new(split.train.iter().chain(&split.valid));
    let info = RoundGraph {
        entities: g.num_entities(),
        relations: g.num_relations(),
        triples: g.num_triples(),
        train_triples: split.train.len(),
        valid_triples: split.valid.len(),
        dropped_valid: split.dropped_valid,
        core_k: plan.core_k,
    };
    let data = RoundData {
        train: split.train,
        valid: split.valid,
        filter,
        entities: g.num_entities(),
        relations: g.num_relations(),
        triples: g.num_triples(),
    };
    Ok((data, info))
}

/// Negatives for a graph with `entities` entities, scaled from the count
/// tuned for `full_entities` and kept below the entity count.
fn round_negatives(n_neg: usize, entities: usize, full_entities: usize) -> usize {
    scale_negatives(n_neg, entities, full_entities).min(entities.saturating_sub(1)).max(1)
}

#[allow(clippy::too_many_arguments)]
fn fit(
    spec: &ModelSpec,
    cfg: &HyperparamConfig,
    train_triples: &[Triple],
    entities: usize,
    relations: usize,
    num_negatives: usize,
    epochs: f64,
    seed: u64,
) -> Result<(EmbeddingModel, LossTrace)> {
    let mut model = init_model(spec.scorer, spec.dim, entities, relations, cfg.init_scale, seed)?.with_norm(spec.norm);
    let trace = train(&mut model, train_triples, &cfg.train_config(num_negatives, epochs, seed))?;
    Ok((model, trace))
}

pub(crate) fn run_trial(data: &RoundData, cfg: &HyperparamConfig, plan: &RoundPlan, params: &SearchParams, full: &KnowledgeGraph) -> TrialResult {
    let seed = derive_seed(params.seed, &[TAG_TRIAL, cfg.id as u64, plan.round as u64]);
    let num_negatives = round_negatives(cfg.num_negatives, data.entities, full.num_entities());
    let mut result = TrialResult {
        round: plan.round,
        config_id: cfg.id,
        seed,
        epochs: plan.epochs,
        num_negatives,
        graph_entities: data.entities,
        graph_triples: data.triples,
        status: TrialStatus::Ok,
        valid_mrr: 0.0,
        hits_at_1: 0.0,
        hits_at_3: 0.0,
        hits_at_10: 0.0,
        cost: trial_cost(plan.epochs, params.max_epochs, data.triples, full.num_triples()),
        train_score_computations: 0,
        eval_score_computations: 0,
        epoch_losses: Vec::new(),
        error: None,
    };
    match fit(&params.model, cfg, &data.train, data.entities, data.relations, num_negatives, plan.epochs, seed) {
        Ok((model, trace)) => {
            let rep = evaluate_with(&model, &data.valid, &data.filter);
            result.train_score_computations = trace.score_computations;
            result.epoch_losses = trace.epoch_losses;
            result.eval_score_computations = rep.score_computations;
            result.valid_mrr = rep.mrr;
            result.hits_at_1 = rep.hits(1);
            result.hits_at_3 = rep.hits(3);
            result.hits_at_10 = rep.hits(10);
        }
        Err(e) => {
            result.status = TrialStatus::Failed;
            result.error = Some(e.to_string());
        }
    }
    result
}

/// Runs the search on `graph` over `configs`, whose ids must be distinct.
///
/// Every round draws a fresh reduced graph and validation split, trains
/// each surviving configuration from scratch and keeps the top
/// `ceil(|pool| / eta)`. A missing core ladder is computed when needed.
pub fn run_search<E: Executor, O: SearchObserver + ?Sized>(
    graph: &KnowledgeGraph,
    configs: &[HyperparamConfig],
    params: &SearchParams,
    ladder: Option<&CoreLadder>,
    executor: &E,
    observer: &mut O,
) -> Result<SearchOutcome> {
    if configs.len() != params.num_configs {
        return Err(Error::InvalidParam(alloc::format!(
            "{} configurations given but num_configs is {}",
            configs.len(),
            params.num_configs
        )));
    }
    let mut ids: Vec<usize> = configs.iter().map(|c| c.id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != configs.len() {
        return Err(Error::InvalidParam("configuration ids must be distinct".into()));
    }
    let computed;
    let ladder = match (ladder, params.reduction) {
        (Some(l), _) => Some(l),
        (None, GraphReduction::KCore) if params.variant != super::Variant::Epoch => {
            computed = core_decomposition(graph);
            Some(&computed)
        }
        _ => None,
    };
    let schedule = plan_schedule(params, graph.num_triples(), ladder)?;

    let mut pool: Vec<HyperparamConfig> = configs.to_vec();
    let mut outcome_rounds = Vec::with_capacity(schedule.rounds.len());
    let mut survivors_log = Vec::with_capacity(schedule.rounds.len());
    let mut trials = Vec::new();
    let mut ledger = BudgetLedger {
        budget: params.budget,
        ..BudgetLedger::default()
    };
    for plan in &schedule.rounds {
        let (data, info) = prepare_round(graph, plan, params, ladder)?;
        observer.round_started(plan, &info);
        let results = executor.map(&pool, |cfg| run_trial(&data, cfg, plan, params, graph));
        let mut spent = 0.0;
        for r in &results {
            spent += r.cost;
            observer.trial_finished(r);
        }
        if results.iter().all(|r| r.status == TrialStatus::Failed) {
            return Err(Error::RoundFailed { round: plan.round });
        }
        ledger.per_round.push(spent);
        ledger.spent += spent;

        let mut ranked: Vec<(f64, usize, usize)> = results.iter().enumerate().map(|(i, r)| (r.valid_mrr, r.config_id, i)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        ranked.truncate(plan.survivors);
        let keep: Vec<usize> = ranked.iter().map(|&(_, id, _)| id).collect();
        pool = ranked.iter().map(|&(_, _, i)| pool[i].clone()).collect();
        observer.round_finished(plan.round, &keep);
        survivors_log.push(keep);
        outcome_rounds.push(info);
        trials.extend(results);
    }
    Ok(SearchOutcome {
        best: pool.swap_remove(0),
        schedule,
        rounds: outcome_rounds,
        survivors: survivors_log,
        trials,
        ledger,
    })
}

/// A full-fidelity training run with validation and test reports.
#[derive(Clone, Debug)]
pub struct FinalRun {
    pub model: EmbeddingModel,
    pub trace: LossTrace,
    pub valid: RankingReport,
    pub test: Option<RankingReport>,
}

/// Trains `config` on the training split for `epochs` epochs and evaluates
/// on the validation and (if present) test splits, filtering with every
/// known triple. The negatives count is capped below the entity count.
pub fn final_train(dataset: &DatasetSplit, config: &HyperparamConfig, spec: &ModelSpec, epochs: f64, seed: u64) -> Result<FinalRun> {
    let n_ent = dataset.num_entities();
    let negatives = config.num_negatives.min(n_ent.saturating_sub(1)).max(1);
    let (model, trace) = fit(spec, config, &dataset.train, n_ent, dataset.num_relations(), negatives, epochs, seed)?;
    let filter = FilterIndex::new(dataset.all_triples());
    let valid = evaluate_with(&model, &dataset.valid, &filter);
    let test = (!dataset.test.is_empty()).then(|| evaluate_with(&model, &dataset.test, &filter));
    Ok(FinalRun { model, trace, valid, test })
}
