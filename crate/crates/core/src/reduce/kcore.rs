//! k-core decomposition on triple-incidence degree.
//!
//! An entity's degree is the number of triples it occurs in. The k-core is
//! the largest induced subgraph in which every retained entity occurs in at
//! least k retained triples. Coreness is computed by bucket peeling in
//! O(|E| + |K|).

use alloc::vec::Vec;

use super::{Provenance, Subgraph};
use crate::kg::KnowledgeGraph;
use crate::{Error, Result};

/// Size of the k-core at one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoreLevel {
    pub k: usize,
    pub triples: usize,
    pub entities: usize,
}

/// Coreness of every entity plus the sizes of all nonempty cores, `k = 1..`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoreLadder {
    pub coreness: Vec<u32>,
    pub levels: Vec<CoreLevel>,
    pub parent_entities: usize,
    pub parent_triples: usize,
}

impl CoreLadder {
    /// Rebuilds the level table from per-entity coreness.
    pub fn from_coreness(graph: &KnowledgeGraph, coreness: Vec<u32>) -> Self {
        let max_k = coreness.iter().copied().max().unwrap_or(0) as usize;
        let mut ent_hist = alloc::vec![0usize; max_k + 2];
        let mut tri_hist = alloc::vec![0usize; max_k + 2];
        for &c in &coreness {
            ent_hist[c as usize] += 1;
        }
        for t in graph.triples() {
            let c = coreness[t.s as usize].min(coreness[t.o as usize]);
            tri_hist[c as usize] += 1;
        }
        let mut levels = Vec::with_capacity(max_k);
        let (mut ents, mut tris) = (0, 0);
        for k in (1..=max_k).rev() {
            ents += ent_hist[k];
            tris += tri_hist[k];
            levels.push(CoreLevel { k, triples: tris, entities: ents });
        }
        levels.reverse();
        Self {
            coreness,
            levels,
            parent_entities: graph.num_entities(),
            parent_triples: graph.num_triples(),
        }
    }

    /// Deepest k with a nonempty core (0 for an empty ladder).
    pub fn max_k(&self) -> usize {
        self.levels.last().map_or(0, |l| l.k)
    }

    pub fn level(&self, k: usize) -> Option<&CoreLevel> {
        k.checked_sub(1).and_then(|i| self.levels.get(i))
    }
}

/// Computes the coreness of every entity by iterative peeling.
pub fn core_decomposition(graph: &KnowledgeGraph) -> CoreLadder {
    let n = graph.num_entities();
    let triples = graph.triples();
    let inc = graph.incidence();
    let mut deg = graph.entity_degrees();
    let max_deg = deg.iter().copied().max().unwrap_or(0) as usize;

    // bin[d] = first position of degree-d entities in `vert`
    let mut bin = alloc::vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d as usize] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let c = *b;
        *b = start;
        start += c;
    }
    let mut pos = alloc::vec![0usize; n];
    let mut vert = alloc::vec![0u32; n];
    for v in 0..n {
        let d = deg[v] as usize;
        pos[v] = bin[d];
        vert[pos[v]] = v as u32;
        bin[d] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i] as usize;
        for &ti in &inc[v] {
            let t = triples[ti as usize];
            let u = if t.s as usize == v { t.o } else { t.s } as usize;
            if u == v || deg[u] <= deg[v] {
                continue;
            }
            // move u to the front of its bin, then shrink its degree
            let du = deg[u] as usize;
            let pu = pos[u];
            let pw = bin[du];
            let w = vert[pw] as usize;
            if u != w {
                pos[u] = pw;
                vert[pu] = w as u32;
                pos[w] = pu;
                vert[pw] = u as u32;
            }
            bin[du] += 1;
            deg[u] -= 1;
        }
    }
    CoreLadder::from_coreness(graph, deg)
}

/// Extracts the k-core: all triples whose subject and object have coreness
/// at least `k`.
pub fn k_core(graph: &KnowledgeGraph, k: usize, ladder: &CoreLadder) -> Result<Subgraph> {
    let max_k = ladder.max_k();
    if k == 0 || k > max_k {
        return Err(Error::EmptyCore { k, max_k });
    }
    let c = &ladder.coreness;
    let keep: Vec<u32> = graph
        .triples()
        .iter()
        .enumerate()
        .filter(|(_, t)| c[t.s as usize] as usize >= k && c[t.o as usize] as usize >= k)
        .map(|(i, _)| i as u32)
        .collect();
    Subgraph::from_parent(graph, &keep, Provenance::KCore { k })
}

/// Result of [`select_core_for_fidelity`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoreChoice {
    pub k: usize,
    /// Even the deepest core holds more triples than the target.
    pub overshoot: bool,
}

/// Picks the largest core whose triple count does not exceed
/// `target_fraction` of the parent's triples. Falls back to the deepest core
/// (flagged as overshoot) when every core is too large.
pub fn select_core_for_fidelity(ladder: &CoreLadder, target_fraction: f64) -> CoreChoice {
    let budget = target_fraction * ladder.parent_triples as f64;
    match ladder.levels.iter().find(|l| l.triples as f64 <= budget) {
        Some(l) => CoreChoice { k: l.k, overshoot: false },
        None => CoreChoice { k: ladder.max_k(), overshoot: true },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Triple;
    use alloc::string::ToString;
    use alloc::vec;

    fn graph(n: usize, edges: &[(u32, u32)]) -> KnowledgeGraph {
        let ents = (0..n).map(|i| alloc::format!("e{i}")).collect();
        let ts = edges.iter().map(|&(s, o)| Triple::new(s, 0, o)).collect();
        KnowledgeGraph::from_parts(ents, vec!["r".to_string()], ts).unwrap()
    }

    #[test]
    fn triangle() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let l = core_decomposition(&g);
        assert_eq!(l.coreness, [2, 2, 2]);
        assert_eq!(l.max_k(), 2);
        assert_eq!(k_core(&g, 2, &l).unwrap().graph.num_triples(), 3);
        assert_eq!(k_core(&g, 3, &l).unwrap_err(), Error::EmptyCore { k: 3, max_k: 2 });
    }

    #[test]
    fn path() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let l = core_decomposition(&g);
        assert_eq!(l.coreness, [1, 1, 1]);
        assert!(k_core(&g, 2, &l).is_err());
        let one = k_core(&g, 1, &l).unwrap();
        assert_eq!(one.graph.num_triples(), 2);
    }

    #[test]
    fn clique_with_pendants() {
        let mut e = vec![];
        for a in 0..4u32 {
            for b in a + 1..4 {
                e.push((a, b));
            }
        }
        e.extend([(0, 4), (1, 5), (5, 6), (2, 7)]);
        let g = graph(8, &e);
        let l = core_decomposition(&g);
        let c3 = k_core(&g, 3, &l).unwrap();
        assert_eq!(c3.graph.num_triples(), 6);
        assert_eq!(c3.graph.num_entities(), 4);
        assert_eq!(l.max_k(), 3);
        for d in c3.graph.entity_degrees() {
            assert!(d >= 3);
        }
    }

    #[test]
    fn parallel_relations_count_per_triple() {
        // two entities joined by three relations: each has degree 3
        let ents = vec!["a".to_string(), "b".to_string()];
        let rels = (0..3).map(|i| alloc::format!("r{i}")).collect();
        let ts = (0..3).map(|p| Triple::new(0, p, 1)).collect();
        let g = KnowledgeGraph::from_parts(ents, rels, ts).unwrap();
        assert_eq!(core_decomposition(&g).coreness, [3, 3]);
    }

    #[test]
    fn selection_rule() {
        let ladder = CoreLadder {
            coreness: vec![],
            levels: vec![
                CoreLevel { k: 1, triples: 100, entities: 50 },
                CoreLevel { k: 2, triples: 40, entities: 20 },
                CoreLevel { k: 3, triples: 10, entities: 5 },
            ],
            parent_entities: 50,
            parent_triples: 100,
        };
        assert_eq!(select_core_for_fidelity(&ladder, 0.5), CoreChoice { k: 2, overshoot: false });
        assert_eq!(select_core_for_fidelity(&ladder, 1.0), CoreChoice { k: 1, overshoot: false });
        assert_eq!(select_core_for_fidelity(&ladder, 0.1), CoreChoice { k: 3, overshoot: false });
        assert_eq!(select_core_for_fidelity(&ladder, 0.05), CoreChoice { k: 3, overshoot: true });
    }
}
