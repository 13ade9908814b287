//! Knowledge graphs, dataset splits and graph statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::rng::{rng_from, TAG_SPLIT};
use crate::{Error, Result};

/// A `(subject, relation, object)` triple of dense vocabulary indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Triple {
    pub s: u32,
    pub p: u32,
    pub o: u32,
}

impl Triple {
    pub const fn new(s: u32, p: u32, o: u32) -> Self {
        Self { s, p, o }
    }
}

/// Entity and relation labels, indexed densely from 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
}

/// An immutable knowledge graph.
///
/// Invariants: every triple index is within its vocabulary, triples are
/// unique, and every vocabulary entry occurs in at least one triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowledgeGraph {
    vocab: Vocabulary,
    triples: Vec<Triple>,
}

impl KnowledgeGraph {
    /// Builds a graph, checking every invariant.
    pub fn from_parts(
        entities: Vec<String>,
        relations: Vec<String>,
        triples: Vec<Triple>,
    ) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::NoTriples);
        }
        let mut seen_e = alloc::vec![false; entities.len()];
        let mut seen_r = alloc::vec![false; relations.len()];
        let mut unique = BTreeSet::new();
        for t in &triples {
            for (kind, idx, len) in [
                ("entity", t.s, entities.len()),
                ("relation", t.p, relations.len()),
                ("entity", t.o, entities.len()),
            ] {
                if idx as usize >= len {
                    return Err(Error::IndexOutOfRange { kind, index: idx, len });
                }
            }
            if !unique.insert(*t) {
                return Err(Error::DuplicateTriple(t.s, t.p, t.o));
            }
            seen_e[t.s as usize] = true;
            seen_e[t.o as usize] = true;
            seen_r[t.p as usize] = true;
        }
        if let Some(i) = seen_e.iter().position(|&b| !b) {
            return Err(Error::UnusedVocabulary { kind: "entity", index: i as u32 });
        }
        if let Some(i) = seen_r.iter().position(|&b| !b) {
            return Err(Error::UnusedVocabulary { kind: "relation", index: i as u32 });
        }
        Ok(Self {
            vocab: Vocabulary { entities, relations },
            triples,
        })
    }

    /// Builds a graph from labelled triples. Vocabularies follow first
    /// occurrence; the second value is the number of duplicates dropped.
    pub fn from_labeled<'a, I>(triples: I) -> Result<(Self, usize)>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut b = GraphBuilder::default();
        for (s, p, o) in triples {
            b.push(s, p, o);
        }
        b.finish()
    }

    pub fn entities(&self) -> &[String] {
        &self.vocab.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.vocab.relations
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.relations.len()
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    /// Number of triples each entity occurs in. A self-loop counts once.
    pub fn entity_degrees(&self) -> Vec<u32> {
        let mut deg = alloc::vec![0u32; self.num_entities()];
        for t in &self.triples {
            deg[t.s as usize] += 1;
            if t.o != t.s {
                deg[t.o as usize] += 1;
            }
        }
        deg
    }

    /// Per-entity lists of incident triple indices.
    pub fn incidence(&self) -> Vec<Vec<u32>> {
        let mut inc = alloc::vec![Vec::new(); self.num_entities()];
        for (i, t) in self.triples.iter().enumerate() {
            inc[t.s as usize].push(i as u32);
            if t.o != t.s {
                inc[t.o as usize].push(i as u32);
            }
        }
        inc
    }

    /// Restricts the graph to the given triples (indices into
    /// [`Self::triples`], any order) and re-indexes vocabularies in first
    /// occurrence order of the retained triples, taken in ascending index
    /// order. Returns the induced graph plus entity and relation maps back to
    /// this graph.
    pub fn induce(&self, triple_indices: &[u32]) -> Result<(Self, Vec<u32>, Vec<u32>)> {
        let mut idx: Vec<u32> = triple_indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        let picked = idx.iter().map(|&i| self.triples[i as usize]);
        induce_from(&self.vocab, picked)
    }
}

/// Re-indexes `triples` (expressed against `vocab`) densely. The triples
/// must be unique.
pub(crate) fn induce_from<I>(vocab: &Vocabulary, triples: I) -> Result<(KnowledgeGraph, Vec<u32>, Vec<u32>)>
where
    I: IntoIterator<Item = Triple>,
{
    const NONE: u32 = u32::MAX;
    let mut e_new = alloc::vec![NONE; vocab.entities.len()];
    let mut r_new = alloc::vec![NONE; vocab.relations.len()];
    let mut e_map = Vec::new();
    let mut r_map = Vec::new();
    let mut out = Vec::new();
    let mut map_e = |e: u32, e_map: &mut Vec<u32>| {
        let slot = &mut e_new[e as usize];
        if *slot == NONE {
            *slot = e_map.len() as u32;
            e_map.push(e);
        }
        *slot
    };
    for t in triples {
        let s = map_e(t.s, &mut e_map);
        let slot = &mut r_new[t.p as usize];
        if *slot == NONE {
            *slot = r_map.len() as u32;
            r_map.push(t.p);
        }
        let p = *slot;
        let o = map_e(t.o, &mut e_map);
        out.push(Triple::new(s, p, o));
    }
    if out.is_empty() {
        return Err(Error::NoTriples);
    }
    let entities = e_map.iter().map(|&e| vocab.entities[e as usize].clone()).collect();
    let relations = r_map.iter().map(|&r| vocab.relations[r as usize].clone()).collect();
    let graph = KnowledgeGraph {
        vocab: Vocabulary { entities, relations },
        triples: out,
    };
    Ok((graph, e_map, r_map))
}

/// Incremental construction from labels, deduplicating triples.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    entity_ids: BTreeMap<String, u32>,
    relation_ids: BTreeMap<String, u32>,
    vocab: Vocabulary,
    seen: BTreeSet<Triple>,
    triples: Vec<Triple>,
    duplicates: usize,
}

fn intern(ids: &mut BTreeMap<String, u32>, labels: &mut Vec<String>, label: &str) -> u32 {
    if let Some(&id) = ids.get(label) {
        return id;
    }
    let id = labels.len() as u32;
    ids.insert(label.to_string(), id);
    labels.push(label.to_string());
    id
}

impl GraphBuilder {
    /// Adds a triple; returns `false` if it was a duplicate.
    pub fn push(&mut self, s: &str, p: &str, o: &str) -> bool {
        let s = intern(&mut self.entity_ids, &mut self.vocab.entities, s);
        let p = intern(&mut self.relation_ids, &mut self.vocab.relations, p);
        let o = intern(&mut self.entity_ids, &mut self.vocab.entities, o);
        let t = Triple::new(s, p, o);
        if self.seen.insert(t) {
            self.triples.push(t);
            true
        } else {
            self.duplicates += 1;
            false
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn finish(self) -> Result<(KnowledgeGraph, usize)> {
        if self.triples.is_empty() {
            return Err(Error::NoTriples);
        }
        let g = KnowledgeGraph {
            vocab: self.vocab,
            triples: self.triples,
        };
        Ok((g, self.duplicates))
    }
}

/// Train, validation and test triples over one shared vocabulary.
///
/// Splits are pairwise disjoint, and every entity and relation of a valid
/// or test triple occurs in train.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub vocab: Vocabulary,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    /// Valid triples dropped for unseen entities/relations or overlap.
    pub dropped_valid: usize,
    /// Test triples dropped for unseen entities/relations or overlap.
    pub dropped_test: usize,
}

impl DatasetSplit {
    /// Builds a split from labelled train, valid and test triples. The
    /// vocabulary comes from train (first occurrence). Valid and test
    /// triples mentioning labels unseen in train, or repeating a triple of an
    /// earlier split, are dropped and counted.
    pub fn from_labeled<'a, A, B, C>(train: A, valid: B, test: C) -> Result<Self>
    where
        A: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
        B: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
        C: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let (g, _) = KnowledgeGraph::from_labeled(train)?;
        let mut seen: BTreeSet<Triple> = g.triples.iter().copied().collect();
        let e_ids: BTreeMap<&str, u32> = g
            .entities()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let r_ids: BTreeMap<&str, u32> = g
            .relations()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let mut resolve = |items: &mut dyn Iterator<Item = (&str, &str, &str)>| {
            let mut kept = Vec::new();
            let mut dropped = 0;
            for (s, p, o) in items {
                let t = match (e_ids.get(s), r_ids.get(p), e_ids.get(o)) {
                    (Some(&s), Some(&p), Some(&o)) => Triple::new(s, p, o),
                    _ => {
                        dropped += 1;
                        continue;
                    }
                };
                if seen.insert(t) {
                    kept.push(t);
                } else {
                    dropped += 1;
                }
            }
            (kept, dropped)
        };
        let (valid, dropped_valid) = resolve(&mut valid.into_iter());
        let (test, dropped_test) = resolve(&mut test.into_iter());
        Ok(Self {
            vocab: g.vocab,
            train: g.triples,
            valid,
            test,
            dropped_valid,
            dropped_test,
        })
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.relations.len()
    }

    /// The training triples as a graph of their own (re-indexed to drop
    /// vocabulary entries that only appear in discarded triples).
    pub fn train_graph(&self) -> Result<KnowledgeGraph> {
        induce_from(&self.vocab, self.train.iter().copied()).map(|(g, _, _)| g)
    }

    /// Train, valid and test triples chained, for filtered evaluation.
    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> + '_ {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }
}

/// Splits off a random validation set of `valid_size` triples.
///
/// Validation triples whose entities or relation would not occur in the
/// remaining training triples are dropped (neither train nor valid) and
/// counted in `dropped_valid`. Deterministic in `seed`.
pub fn split_train_valid(graph: &KnowledgeGraph, valid_size: usize, seed: u64) -> Result<DatasetSplit> {
    let n = graph.num_triples();
    if valid_size == 0 || valid_size >= n {
        return Err(Error::InvalidValidSize { valid_size, triples: n });
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = rng_from(seed, &[TAG_SPLIT]);
    order.shuffle(&mut rng);
    let (cand, rest) = order.split_at(valid_size);

    let mut e_count = alloc::vec![0u32; graph.num_entities()];
    let mut r_count = alloc::vec![0u32; graph.num_relations()];
    let mut train_idx = rest.to_vec();
    train_idx.sort_unstable();
    for &i in &train_idx {
        let t = graph.triples[i as usize];
        e_count[t.s as usize] += 1;
        e_count[t.o as usize] += 1;
        r_count[t.p as usize] += 1;
    }
    let mut valid_idx = cand.to_vec();
    valid_idx.sort_unstable();
    let before = valid_idx.len();
    valid_idx.retain(|&i| {
        let t = graph.triples[i as usize];
        e_count[t.s as usize] > 0 && e_count[t.o as usize] > 0 && r_count[t.p as usize] > 0
    });
    let dropped_valid = before - valid_idx.len();
    let pick = |idx: &[u32]| idx.iter().map(|&i| graph.triples[i as usize]).collect();
    Ok(DatasetSplit {
        vocab: graph.vocab.clone(),
        train: pick(&train_idx),
        valid: pick(&valid_idx),
        test: Vec::new(),
        dropped_valid,
        dropped_test: 0,
    })
}

/// Size and degree summary of a graph.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphStats {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
    pub min_degree: u32,
    pub mean_degree: f64,
    pub max_degree: u32,
}

pub fn stats(graph: &KnowledgeGraph) -> GraphStats {
    let deg = graph.entity_degrees();
    let total: u64 = deg.iter().map(|&d| d as u64).sum();
    GraphStats {
        entities: graph.num_entities(),
        relations: graph.num_relations(),
        triples: graph.num_triples(),
        min_degree: deg.iter().copied().min().unwrap_or(0),
        mean_degree: if deg.is_empty() { 0.0 } else { total as f64 / deg.len() as f64 },
        max_degree: deg.iter().copied().max().unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn labeled(lines: &[(&'static str, &'static str, &'static str)]) -> KnowledgeGraph {
        KnowledgeGraph::from_labeled(lines.iter().copied()).unwrap().0
    }

    #[test]
    fn dedup_on_load() {
        let (g, dups) =
            KnowledgeGraph::from_labeled([("a", "r", "b"), ("b", "r", "c"), ("a", "r", "b")]).unwrap();
        assert_eq!(g.num_entities(), 3);
        assert_eq!(g.num_relations(), 1);
        assert_eq!(g.num_triples(), 2);
        assert_eq!(dups, 1);
        assert_eq!(g.entities(), ["a", "b", "c"]);
    }

    #[test]
    fn empty_is_error() {
        let none: [(&str, &str, &str); 0] = [];
        assert_eq!(KnowledgeGraph::from_labeled(none).unwrap_err(), Error::NoTriples);
    }

    #[test]
    fn from_parts_checks_invariants() {
        let e = || alloc::vec!["a".to_string(), "b".to_string()];
        let r = || alloc::vec!["r".to_string()];
        assert!(matches!(
            KnowledgeGraph::from_parts(e(), r(), alloc::vec![Triple::new(0, 0, 2)]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            KnowledgeGraph::from_parts(e(), r(), alloc::vec![Triple::new(0, 0, 1), Triple::new(0, 0, 1)]),
            Err(Error::DuplicateTriple(..))
        ));
        assert!(matches!(
            KnowledgeGraph::from_parts(e(), r(), alloc::vec![Triple::new(0, 0, 0)]),
            Err(Error::UnusedVocabulary { kind: "entity", index: 1 })
        ));
    }

    #[test]
    fn triangle_stats() {
        let g = labeled(&[("a", "r", "b"), ("b", "r", "c"), ("c", "r", "a")]);
        let st = stats(&g);
        assert_eq!((st.entities, st.relations, st.triples), (3, 1, 3));
        assert_eq!((st.min_degree, st.max_degree), (2, 2));
        assert_eq!(st.mean_degree, 2.0);
    }

    #[test]
    fn single_triple_stats() {
        let st = stats(&labeled(&[("a", "r", "b")]));
        assert_eq!((st.min_degree, st.max_degree), (1, 1));
    }

    #[test]
    fn self_loop_counts_once() {
        let g = labeled(&[("a", "r", "a"), ("a", "r", "b")]);
        assert_eq!(g.entity_degrees(), [2, 1]);
    }

    fn grid(n: usize) -> KnowledgeGraph {
        let labels: Vec<(String, String, String)> = (0..n)
            .map(|i| (format!("e{}", i % 97), format!("r{}", i % 5), format!("e{}", (i * 7 + 3) % 211)))
            .collect();
        KnowledgeGraph::from_labeled(labels.iter().map(|(a, b, c)| (a.as_str(), b.as_str(), c.as_str())))
            .unwrap()
            .0
    }

    #[test]
    fn split_is_partition() {
        let g = grid(2000);
        let sp = split_train_valid(&g, 300, 9).unwrap();
        assert!(sp.valid.len() <= 300);
        assert_eq!(sp.train.len() + sp.valid.len() + sp.dropped_valid, g.num_triples());
        let train: BTreeSet<_> = sp.train.iter().collect();
        assert!(sp.valid.iter().all(|t| !train.contains(t)));
        let ents: BTreeSet<u32> = sp.train.iter().flat_map(|t| [t.s, t.o]).collect();
        let rels: BTreeSet<u32> = sp.train.iter().map(|t| t.p).collect();
        assert!(sp.valid.iter().all(|t| ents.contains(&t.s) && ents.contains(&t.o) && rels.contains(&t.p)));
    }

    #[test]
    fn split_rejects_full_valid() {
        let g = grid(50);
        let n = g.num_triples();
        assert!(matches!(split_train_valid(&g, n, 0), Err(Error::InvalidValidSize { .. })));
        assert!(matches!(split_train_valid(&g, 0, 0), Err(Error::InvalidValidSize { .. })));
    }

    #[test]
    fn split_drops_unseen() {
        // "z" only occurs in one triple; if that triple lands in valid it must be dropped.
        let g = labeled(&[("a", "r", "b"), ("b", "r", "a"), ("a", "r", "z")]);
        for seed in 0..20 {
            let sp = split_train_valid(&g, 1, seed).unwrap();
            for t in &sp.valid {
                assert_ne!(g.entities()[t.o as usize], "z");
            }
        }
    }

    #[test]
    fn from_labeled_split_drops_overlap_and_unseen() {
        let sp = DatasetSplit::from_labeled(
            [("a", "r", "b"), ("b", "r", "c")],
            [("a", "r", "b"), ("a", "r", "c"), ("a", "q", "c")],
            [("a", "r", "c"), ("c", "r", "a"), ("x", "r", "a")],
        )
        .unwrap();
        assert_eq!(sp.valid, [Triple::new(0, 0, 2)]);
        assert_eq!(sp.dropped_valid, 2);
        assert_eq!(sp.test, [Triple::new(2, 0, 0)]);
        assert_eq!(sp.dropped_test, 2);
    }

    #[test]
    fn induce_reindexes() {
        let g = labeled(&[("a", "r", "b"), ("b", "q", "c"), ("c", "r", "d")]);
        let (sub, emap, rmap) = g.induce(&[2, 1]).unwrap();
        assert_eq!(sub.entities(), ["b", "c", "d"]);
        assert_eq!(sub.relations(), ["q", "r"]);
        assert_eq!(emap, [1, 2, 3]);
        assert_eq!(rmap, [1, 0]);
    }
}
