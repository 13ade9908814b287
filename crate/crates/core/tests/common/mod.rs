#![allow(dead_code)]

use std::collections::BTreeSet;

use grash_core::kg::GraphBuilder;
use grash_core::{KnowledgeGraph, Triple};
use proptest::prelude::*;

/// Builds a graph from index triples, deduplicating. Labels are `e{i}` and
/// `r{i}`, so indices follow first occurrence rather than the raw numbers.
pub fn graph_from(edges: &[(u32, u32, u32)]) -> KnowledgeGraph {
    let mut b = GraphBuilder::default();
    for &(s, p, o) in edges {
        b.push(&format!("e{s}"), &format!("r{p}"), &format!("e{o}"));
    }
    b.finish().unwrap().0
}

pub fn arb_graph(max_entities: u32, max_relations: u32, max_triples: usize) -> impl Strategy<Value = KnowledgeGraph> {
    prop::collection::vec((0..max_entities, 0..max_relations, 0..max_entities), 1..=max_triples)
        .prop_map(|edges| graph_from(&edges))
}

/// Entity sets surviving naive repeated peeling at every k, plus coreness.
pub fn naive_cores(g: &KnowledgeGraph) -> (Vec<u32>, Vec<BTreeSet<Triple>>) {
    let mut coreness = vec![0u32; g.num_entities()];
    let mut cores = Vec::new();
    for k in 1.. {
        let mut alive = vec![true; g.num_entities()];
        loop {
            let mut deg = vec![0usize; g.num_entities()];
            for t in g.triples() {
                if alive[t.s as usize] && alive[t.o as usize] {
                    deg[t.s as usize] += 1;
                    if t.o != t.s {
                        deg[t.o as usize] += 1;
                    }
                }
            }
            let mut changed = false;
            for e in 0..alive.len() {
                if alive[e] && deg[e] < k {
                    alive[e] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let triples: BTreeSet<Triple> =
            g.triples().iter().copied().filter(|t| alive[t.s as usize] && alive[t.o as usize]).collect();
        if triples.is_empty() {
            break;
        }
        for (e, a) in alive.iter().enumerate() {
            if *a {
                coreness[e] = k as u32;
            }
        }
        cores.push(triples);
    }
    (coreness, cores)
}
