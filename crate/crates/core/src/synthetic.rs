//! Synthetic knowledge graphs with cluster structure and a long-tailed
//! degree distribution.
//!
//! Entity `e` belongs to cluster `e % clusters` and has popularity
//! `(e + 1)^-alpha`. Each relation maps every cluster to a fixed target
//! cluster. A triple draws its relation, then a subject by popularity, then
//! (with probability `1 - noise`) an object by popularity from the target
//! cluster of the subject's cluster, otherwise from all entities. The result
//! is learnable by every supported model while leaving room for good and bad
//! hyperparameters.

use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::kg::{split_train_valid, DatasetSplit, GraphBuilder, KnowledgeGraph};
use crate::rng::rng_from;
use crate::{Error, Result};

const TAG_SYNTHETIC: u64 = 8;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticParams {
    pub entities: usize,
    pub relations: usize,
    /// Target number of distinct triples.
    pub triples: usize,
    pub clusters: usize,
    /// Popularity exponent.
    pub alpha: f64,
    /// Share of objects drawn ignoring clusters.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            entities: 1000,
            relations: 10,
            triples: 10_000,
            clusters: 20,
            alpha: 0.8,
            noise: 0.1,
            seed: 0,
        }
    }
}

/// Generates a graph. Entities without triples are dropped, so the result
/// can have fewer entities (and, if the target is unreachable, fewer
/// triples) than requested.
pub fn generate(params: &SyntheticParams) -> Result<KnowledgeGraph> {
    let p = params;
    if p.entities < 2 || p.relations == 0 || p.triples == 0 || p.clusters == 0 || p.clusters > p.entities {
        return Err(Error::InvalidParam(alloc::format!("unusable synthetic graph parameters: {p:?}")));
    }
    if !(0.0..=1.0).contains(&p.noise) || !(p.alpha.is_finite() && p.alpha >= 0.0) {
        return Err(Error::InvalidParam("noise must be in [0, 1] and alpha >= 0".into()));
    }
    let mut rng = rng_from(p.seed, &[TAG_SYNTHETIC]);
    let pop: Vec<f64> = (0..p.entities).map(|e| libm::pow(e as f64 + 1.0, -p.alpha)).collect();
    let all = WeightedIndex::new(&pop).map_err(|_| Error::InvalidParam("bad popularity weights".into()))?;
    let members: Vec<Vec<usize>> = (0..p.clusters)
        .map(|c| (c..p.entities).step_by(p.clusters).collect())
        .collect();
    let within: Vec<WeightedIndex<f64>> = members
        .iter()
        .map(|m| WeightedIndex::new(m.iter().map(|&e| pop[e])).expect("clusters are nonempty"))
        .collect();
    let targets: Vec<Vec<usize>> = (0..p.relations)
        .map(|_| {
            let mut t: Vec<usize> = (0..p.clusters).collect();
            t.shuffle(&mut rng);
            t
        })
        .collect();
    let rel_weights: Vec<f64> = (0..p.relations).map(|r| libm::pow(r as f64 + 1.0, -0.5)).collect();
    let rels = WeightedIndex::new(&rel_weights).expect("relation weights are positive");

    let mut b = GraphBuilder::default();
    let mut attempts = 0usize;
    while b.len() < p.triples && attempts < 20 * p.triples {
        attempts += 1;
        let r = rels.sample(&mut rng);
        let s = all.sample(&mut rng);
        let o = if rng.gen::<f64>() < p.noise {
            all.sample(&mut rng)
        } else {
            let c = targets[r][s % p.clusters];
            members[c][within[c].sample(&mut rng)]
        };
        if s != o {
            b.push(&alloc::format!("e{s}"), &alloc::format!("r{r}"), &alloc::format!("e{o}"));
        }
    }
    b.finish().map(|(g, _)| g)
}

/// Generates a graph and holds out `valid + test` triples. Held-out triples
/// whose entities or relation would vanish from train are dropped.
pub fn dataset(params: &SyntheticParams, valid: usize, test: usize) -> Result<DatasetSplit> {
    let g = generate(params)?;
    let held = split_train_valid(&g, valid + test, rng_from(params.seed, &[TAG_SYNTHETIC, 1]).gen())?;
    let mut v = held.valid;
    let keep = libm::round(v.len() as f64 * valid as f64 / (valid + test) as f64) as usize;
    let t = v.split_off(keep);
    Ok(DatasetSplit {
        vocab: held.vocab,
        train: held.train,
        valid: v,
        test: t,
        dropped_valid: held.dropped_valid,
        dropped_test: 0,
    })
}
