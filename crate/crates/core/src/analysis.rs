//! Rank correlation between low- and full-fidelity results.
//!
//! A transferability sweep trains every configuration once at full fidelity
//! and once per (technique, budget) point, then reports the Spearman
//! correlation of the two validation-MRR vectors. Both runs go through the
//! same split and seeding as a search round, so the epoch technique at
//! budget 1 reproduces the reference exactly.
//!
//! A point's budget is the relative cost of one trial. Single-dimension
//! techniques spend it on epochs or on the triple share; the combined
//! technique uses `sqrt(budget)` for both.

use alloc::vec::Vec;

use crate::kg::KnowledgeGraph;
use crate::reduce::{core_decomposition, select_core_for_fidelity, CoreLadder};
use crate::search::run::{prepare_round, run_trial, Executor, TrialStatus};
use crate::search::{GraphReduction, ModelSpec, RoundPlan, SearchParams, Variant};
use crate::space::HyperparamConfig;
use crate::{Error, Result};

/// Mean-tied ranks, starting at 1.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = alloc::vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation with mean ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// A low-fidelity technique. `Combined` reduces epochs and uses a k-core.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Technique {
    Epoch,
    TripleSample,
    RandomWalk,
    KCore,
    Combined,
}

impl Technique {
    pub const ALL: [Technique; 5] = [
        Technique::Epoch,
        Technique::TripleSample,
        Technique::RandomWalk,
        Technique::KCore,
        Technique::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Epoch => "epoch",
            Technique::TripleSample => "triple",
            Technique::RandomWalk => "walk",
            Technique::KCore => "kcore",
            Technique::Combined => "combined",
        }
    }
}

impl core::str::FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidParam(alloc::format!("unknown technique {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepParams {
    pub model: ModelSpec,
    pub max_epochs: f64,
    pub valid_size: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            max_epochs: 20.0,
            valid_size: 5000,
            walk_length: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationReport {
    pub technique: Technique,
    pub budget: f64,
    /// `None` when either MRR vector is constant.
    pub spearman: Option<f64>,
    pub epochs: f64,
    pub graph_triples: usize,
    pub core_k: Option<usize>,
    /// Mean cost of one trial, in full training runs.
    pub cost: f64,
    pub failed: usize,
    pub mrr: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepOutcome {
    pub config_ids: Vec<usize>,
    pub reference_mrr: Vec<f64>,
    pub reports: Vec<CorrelationReport>,
}

fn point_setup(
    technique: Technique,
    budget: f64,
    sweep: &SweepParams,
    num_triples: usize,
    ladder: &dyn Fn() -> CoreLadder,
    cache: &mut Option<CoreLadder>,
) -> Result<(SearchParams, RoundPlan)> {
    if !(budget > 0.0 && budget <= 1.0) {
        return Err(Error::InvalidFraction(budget));
    }
    let fraction = if technique == Technique::Combined { libm::sqrt(budget) } else { budget };
    let (variant, reduction) = match technique {
        Technique::Epoch => (Variant::Epoch, GraphReduction::KCore),
        Technique::TripleSample => (Variant::Graph, GraphReduction::TripleSample),
        Technique::RandomWalk => (Variant::Graph, GraphReduction::RandomWalk { walk_length: sweep.walk_length }),
        Technique::KCore => (Variant::Graph, GraphReduction::KCore),
        Technique::Combined => (Variant::Combined, GraphReduction::KCore),
    };
    let epochs = if variant == Variant::Graph { sweep.max_epochs } else { fraction * sweep.max_epochs };
    let graph_fraction = if variant == Variant::Epoch { 1.0 } else { fraction };
    let mut core_k = None;
    let mut triples = libm::round(graph_fraction * num_triples as f64) as usize;
    if graph_fraction < 1.0 && reduction == GraphReduction::KCore {
        let l = cache.get_or_insert_with(ladder);
        let choice = select_core_for_fidelity(l, graph_fraction);
        core_k = Some(choice.k);
        triples = l.level(choice.k).map_or(0, |lv| lv.triples);
    }
    let params = SearchParams {
        budget: 1.0,
        num_configs: 1,
        max_epochs: sweep.max_epochs,
        variant,
        valid_size: sweep.valid_size,
        reduction,
        seed: sweep.seed,
        model: sweep.model,
        ..SearchParams::default()
    };
    let plan = RoundPlan {
        round: 0,
        configs: 0,
        survivors: 0,
        fidelity: fraction,
        nominal_trial_cost: (epochs / sweep.max_epochs) * graph_fraction,
        epochs,
        graph_fraction,
        core_k,
        triples,
        cost: 0.0,
    };
    Ok((params, plan))
}

/// Trains every configuration at full fidelity and at each point of
/// `points`, and correlates the validation MRRs.
pub fn transferability_sweep<E: Executor>(
    graph: &KnowledgeGraph,
    configs: &[HyperparamConfig],
    points: &[(Technique, f64)],
    sweep: &SweepParams,
    ladder: Option<&CoreLadder>,
    executor: &E,
) -> Result<SweepOutcome> {
    let mut cache = ladder.cloned();
    let compute = || core_decomposition(graph);
    let mut run_point = |technique, budget| -> Result<(CorrelationReport, Vec<f64>)> {
        let (params, plan) = point_setup(technique, budget, sweep, graph.num_triples(), &compute, &mut cache)?;
        let (data, info) = prepare_round(graph, &plan, &params, cache.as_ref())?;
        let results = executor.map(configs, |cfg| run_trial(&data, cfg, &plan, &params, graph));
        let mrr: Vec<f64> = results.iter().map(|r| r.valid_mrr).collect();
        let report = CorrelationReport {
            technique,
            budget,
            spearman: None,
            epochs: plan.epochs,
            graph_triples: info.triples,
            core_k: info.core_k,
            cost: results.iter().map(|r| r.cost).sum::<f64>() / results.len().max(1) as f64,
            failed: results.iter().filter(|r| r.status == TrialStatus::Failed).count(),
            mrr: mrr.clone(),
        };
        Ok((report, mrr))
    };
    let (_, reference) = run_point(Technique::Epoch, 1.0)?;
    let mut reports = Vec::with_capacity(points.len());
    for &(technique, budget) in points {
        let (mut report, mrr) = run_point(technique, budget)?;
        report.spearman = match spearman(&mrr, &reference) {
            Ok(r) => Some(r),
            Err(Error::ZeroVariance) => None,
            Err(e) => return Err(e),
        };
        reports.push(report);
    }
    Ok(SweepOutcome {
        config_ids: configs.iter().map(|c| c.id).collect(),
        reference_mrr: reference,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn perfect_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(spearman(&[1.0, 2.0], &[1.0]).unwrap_err(), Error::LengthMismatch(2, 1));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]).unwrap_err(), Error::ZeroVariance);
    }
}
