//! Graph reduction: triple sampling, multi-start random walks and k-cores.
//!
//! Every technique first picks a set of parent triples and then induces the
//! entity and relation vocabularies from them, so a subgraph never carries
//! an entity without a retained triple.

mod kcore;

use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use crate::kg::KnowledgeGraph;
use crate::rng::{rng_from, TAG_REDUCE, TAG_WALK};
use crate::{Error, Result};

pub use kcore::{core_decomposition, k_core, select_core_for_fidelity, CoreChoice, CoreLadder, CoreLevel};

/// How a subgraph was produced.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "technique", rename_all = "snake_case"))]
pub enum Provenance {
    Full,
    TripleSample { fraction: f64 },
    RandomWalk { starts: usize, length: usize },
    KCore { k: usize },
}

/// A reduced graph with maps back into its parent.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgraph {
    pub graph: KnowledgeGraph,
    /// Subgraph entity index to parent entity index.
    pub entity_map: Vec<u32>,
    /// Subgraph relation index to parent relation index.
    pub relation_map: Vec<u32>,
    pub provenance: Provenance,
    pub parent_entity_count: usize,
    pub parent_triple_count: usize,
}

impl Subgraph {
    /// Induces a subgraph from parent triple indices.
    pub fn from_parent(parent: &KnowledgeGraph, triple_indices: &[u32], provenance: Provenance) -> Result<Self> {
        if triple_indices.is_empty() {
            return Err(Error::EmptySubgraph);
        }
        let (graph, entity_map, relation_map) = parent.induce(triple_indices)?;
        Ok(Self {
            graph,
            entity_map,
            relation_map,
            provenance,
            parent_entity_count: parent.num_entities(),
            parent_triple_count: parent.num_triples(),
        })
    }

    /// The whole parent, re-indexed identically.
    pub fn full(parent: &KnowledgeGraph) -> Self {
        Self {
            graph: parent.clone(),
            entity_map: (0..parent.num_entities() as u32).collect(),
            relation_map: (0..parent.num_relations() as u32).collect(),
            provenance: Provenance::Full,
            parent_entity_count: parent.num_entities(),
            parent_triple_count: parent.num_triples(),
        }
    }

    pub fn triple_fraction(&self) -> f64 {
        self.graph.num_triples() as f64 / self.parent_triple_count as f64
    }
}

/// Keeps `round(fraction * |K|)` triples drawn uniformly without replacement.
pub fn triple_sample(graph: &KnowledgeGraph, fraction: f64, seed: u64) -> Result<Subgraph> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let n = graph.num_triples();
    let keep = libm::round(fraction * n as f64) as usize;
    if keep == 0 {
        return Err(Error::EmptySubgraph);
    }
    let mut rng = rng_from(seed, &[TAG_REDUCE]);
    let idx: Vec<u32> = index::sample(&mut rng, n, keep).into_iter().map(|i| i as u32).collect();
    Subgraph::from_parent(graph, &idx, Provenance::TripleSample { fraction })
}

/// Walks from a permutation of all entities. Walk `i` uses its own stream,
/// so the first `s` walks are the same for every `s`.
struct Walker<'a> {
    graph: &'a KnowledgeGraph,
    incidence: Vec<Vec<u32>>,
    starts: Vec<u32>,
    seed: u64,
}

impl<'a> Walker<'a> {
    fn new(graph: &'a KnowledgeGraph, seed: u64) -> Self {
        let mut starts: Vec<u32> = (0..graph.num_entities() as u32).collect();
        starts.shuffle(&mut rng_from(seed, &[TAG_REDUCE]));
        Self {
            graph,
            incidence: graph.incidence(),
            starts,
            seed,
        }
    }

    /// Calls `visit` with every triple index on walk `i` (repeats included).
    fn walk(&self, i: usize, length: usize, mut visit: impl FnMut(u32)) {
        let mut rng = rng_from(self.seed, &[TAG_WALK, i as u64]);
        let mut cur = self.starts[i];
        for _ in 0..length {
            let inc = &self.incidence[cur as usize];
            if inc.is_empty() {
                break;
            }
            let ti = inc[rng.gen_range(0..inc.len())];
            visit(ti);
            let t = self.graph.triples()[ti as usize];
            cur = if t.s == cur { t.o } else { t.s };
        }
    }
}

/// Multi-start random walk: `num_starts` distinct start entities, each
/// walking `walk_length` steps over incident triples (direction ignored).
/// The union of traversed triples forms the subgraph.
pub fn random_walk_sample(graph: &KnowledgeGraph, num_starts: usize, walk_length: usize, seed: u64) -> Result<Subgraph> {
    if num_starts > graph.num_entities() {
        return Err(Error::TooManyStarts { starts: num_starts, entities: graph.num_entities() });
    }
    if num_starts == 0 || walk_length == 0 {
        return Err(Error::InvalidParam(alloc::format!(
            "walk needs at least one start and one step (got {num_starts} starts, length {walk_length})"
        )));
    }
    let walker = Walker::new(graph, seed);
    let mut seen = alloc::vec![false; graph.num_triples()];
    let mut keep = Vec::new();
    for i in 0..num_starts {
        walker.walk(i, walk_length, |ti| {
            if !core::mem::replace(&mut seen[ti as usize], true) {
                keep.push(ti);
            }
        });
    }
    Subgraph::from_parent(graph, &keep, Provenance::RandomWalk { starts: num_starts, length: walk_length })
}

/// Random-walk subgraph with the most starts whose triple count stays within
/// `target_fraction` of the parent (at least one start).
pub fn random_walk_for_fidelity(graph: &KnowledgeGraph, target_fraction: f64, walk_length: usize, seed: u64) -> Result<Subgraph> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::InvalidFraction(target_fraction));
    }
    if walk_length == 0 {
        return Err(Error::InvalidParam("walk length must be at least 1".into()));
    }
    let budget = target_fraction * graph.num_triples() as f64;
    let walker = Walker::new(graph, seed);
    let mut seen = alloc::vec![false; graph.num_triples()];
    let mut keep: Vec<u32> = Vec::new();
    let mut starts = 0;
    for i in 0..graph.num_entities() {
        let mut fresh = Vec::new();
        walker.walk(i, walk_length, |ti| {
            if !seen[ti as usize] {
                seen[ti as usize] = true;
                fresh.push(ti);
            }
        });
        if i > 0 && (keep.len() + fresh.len()) as f64 > budget {
            break;
        }
        keep.extend(fresh);
        starts = i + 1;
    }
    Subgraph::from_parent(graph, &keep, Provenance::RandomWalk { starts, length: walk_length })
}
