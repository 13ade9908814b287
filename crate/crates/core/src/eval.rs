//! Filtered entity ranking.
//!
//! Every evaluation triple `(s, p, o)` yields two queries, `(s, p, ?)` and
//! `(?, p, o)`. All entities are scored as candidates; other candidates that
//! form known true triples are filtered out before ranking the true entity.
//! Ties use the mean-rank convention `1 + greater + floor(equal / 2)`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::kg::Triple;
use crate::model::{Direction, EmbeddingModel};
use crate::{Error, Result};

pub const HITS_AT: [u32; 3] = [1, 3, 10];

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankingReport {
    pub mrr: f64,
    pub hits_at: BTreeMap<u32, f64>,
    pub n_queries: usize,
    pub score_computations: u64,
    /// Filtered rank per query: object query then subject query for each
    /// evaluation triple.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub ranks: Vec<u64>,
}

impl RankingReport {
    pub fn from_ranks(ranks: Vec<u64>, score_computations: u64) -> Self {
        let n = ranks.len();
        let denom = n.max(1) as f64;
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / denom;
        let hits_at = HITS_AT
            .iter()
            .map(|&k| (k, ranks.iter().filter(|&&r| r <= k as u64).count() as f64 / denom))
            .collect();
        Self {
            mrr,
            hits_at,
            n_queries: n,
            score_computations,
            ranks,
        }
    }

    pub fn hits(&self, k: u32) -> f64 {
        self.hits_at.get(&k).copied().unwrap_or(0.0)
    }
}

/// Known answers per `(s, p)` and `(p, o)` pair.
#[derive(Clone, Debug, Default)]
pub struct FilterIndex {
    objects: BTreeMap<(u32, u32), Vec<u32>>,
    subjects: BTreeMap<(u32, u32), Vec<u32>>,
}

impl FilterIndex {
    pub fn new<'a, I: IntoIterator<Item = &'a Triple>>(triples: I) -> Self {
        let mut idx = Self::default();
        for t in triples {
            idx.objects.entry((t.s, t.p)).or_default().push(t.o);
            idx.subjects.entry((t.p, t.o)).or_default().push(t.s);
        }
        for v in idx.objects.values_mut().chain(idx.subjects.values_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        idx
    }

    /// Known objects of `(s, p, ?)`.
    pub fn objects(&self, s: u32, p: u32) -> &[u32] {
        self.objects.get(&(s, p)).map_or(&[], Vec::as_slice)
    }

    /// Known subjects of `(?, p, o)`.
    pub fn subjects(&self, p: u32, o: u32) -> &[u32] {
        self.subjects.get(&(p, o)).map_or(&[], Vec::as_slice)
    }
}

/// Counts strictly better and tied candidates, skipping the true entity and
/// every index in `filter_out` (which must be duplicate-free).
fn rank_with(scores: &[f64], truth: u32, filter_out: impl Iterator<Item = u32> + Clone) -> u64 {
    let t = scores[truth as usize];
    let (mut greater, mut equal) = (0u64, 0u64);
    for &x in scores {
        greater += (x > t) as u64;
        equal += (x == t) as u64;
    }
    equal -= 1; // the true entity itself
    for j in filter_out {
        if j == truth {
            continue;
        }
        let x = scores[j as usize];
        greater -= (x > t) as u64;
        equal -= (x == t) as u64;
    }
    1 + greater + equal / 2
}

/// Filtered rank of `true_entity` among `scores`.
pub fn filtered_rank(scores: &[f64], true_entity: u32, filter_out: &[u32]) -> Result<u64> {
    if true_entity as usize >= scores.len() {
        return Err(Error::IndexOutOfRange {
            kind: "entity",
            index: true_entity,
            len: scores.len(),
        });
    }
    if filter_out.contains(&true_entity) {
        return Err(Error::FilteredTrueEntity(true_entity));
    }
    let mut set = filter_out.to_vec();
    set.sort_unstable();
    set.dedup();
    Ok(rank_with(scores, true_entity, set.iter().copied()))
}

/// Runs both queries of every evaluation triple and pools the ranks.
pub fn evaluate(model: &EmbeddingModel, eval_triples: &[Triple], filter_triples: &[Triple]) -> RankingReport {
    evaluate_with(model, eval_triples, &FilterIndex::new(filter_triples))
}

/// As [`evaluate`], reusing a prebuilt filter index.
pub fn evaluate_with(model: &EmbeddingModel, eval_triples: &[Triple], filter: &FilterIndex) -> RankingReport {
    let mut ranks = Vec::with_capacity(2 * eval_triples.len());
    let mut scores = Vec::with_capacity(model.num_entities());
    let mut op = Vec::with_capacity(model.dim());
    for t in eval_triples {
        model.score_candidates_into(Direction::Object, t.s, t.p, &mut op, &mut scores);
        ranks.push(rank_with(&scores, t.o, filter.objects(t.s, t.p).iter().copied()));
        model.score_candidates_into(Direction::Subject, t.o, t.p, &mut op, &mut scores);
        ranks.push(rank_with(&scores, t.s, filter.subjects(t.p, t.o).iter().copied()));
    }
    let cost = 2 * eval_triples.len() as u64 * model.num_entities() as u64;
    RankingReport::from_ranks(ranks, cost)
}
