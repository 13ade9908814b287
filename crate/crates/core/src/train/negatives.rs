//! Negative sampling without replacement and negative-count scaling.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;

use crate::kg::Triple;
use crate::model::Direction;
use crate::rng::Rng;
use crate::{Error, Result};

/// Scales the per-positive negative count to a subgraph so that every
/// entity keeps its probability `n_neg / |E|` of being drawn:
/// `max(1, round(n_neg * sub_entities / full_entities))`.
pub fn scale_negatives(n_neg: usize, sub_entities: usize, full_entities: usize) -> usize {
    assert!(sub_entities > 0 && sub_entities <= full_entities, "need 0 < sub_entities <= full_entities");
    let scaled = libm::round(n_neg as f64 * sub_entities as f64 / full_entities as f64) as usize;
    scaled.max(1)
}

/// Draws `n` distinct entities uniformly from `0..num_entities`.
pub fn sample_negatives(num_entities: usize, n: usize, rng: &mut Rng) -> Result<Vec<u32>> {
    if n >= num_entities {
        return Err(Error::TooManyNegatives { n, entities: num_entities });
    }
    Ok(index::sample(rng, num_entities, n).into_iter().map(|e| e as u32).collect())
}

/// Replaces one side of `positive` with `entity`.
pub fn corrupt(positive: Triple, direction: Direction, entity: u32) -> Triple {
    match direction {
        Direction::Object => Triple { o: entity, ..positive },
        Direction::Subject => Triple { s: entity, ..positive },
    }
}

/// Where negatives are drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NegativePool {
    /// Uniform over all entities.
    #[default]
    Uniform,
    /// Proportional to `degree^0.75` in the training triples.
    Frequency,
}

impl NegativePool {
    pub fn name(self) -> &'static str {
        match self {
            NegativePool::Uniform => "uniform",
            NegativePool::Frequency => "frequency",
        }
    }
}

pub(crate) struct NegativeSampler {
    num_entities: usize,
    cumulative: Option<Vec<f64>>,
    chosen: Vec<bool>,
}

impl NegativeSampler {
    pub(crate) fn new(pool: NegativePool, num_entities: usize, train: &[Triple]) -> Self {
        let cumulative = match pool {
            NegativePool::Uniform => None,
            NegativePool::Frequency => {
                let mut deg = alloc::vec![0u32; num_entities];
                for t in train {
                    deg[t.s as usize] += 1;
                    deg[t.o as usize] += 1;
                }
                let mut acc = 0.0;
                Some(
                    deg.iter()
                        .map(|&d| {
                            acc += libm::pow(d as f64, 0.75);
                            acc
                        })
                        .collect(),
                )
            }
        };
        Self {
            num_entities,
            cumulative,
            chosen: alloc::vec![false; num_entities],
        }
    }

    pub(crate) fn sample(&mut self, n: usize, rng: &mut Rng) -> Result<Vec<u32>> {
        let Some(cum) = &self.cumulative else {
            return sample_negatives(self.num_entities, n, rng);
        };
        if n >= self.num_entities {
            return Err(Error::TooManyNegatives { n, entities: self.num_entities });
        }
        let total = *cum.last().unwrap_or(&0.0);
        let mut out = Vec::with_capacity(n);
        // weighted draws with rejection of repeats; heavy heads fall back to
        // uniform fill after a bounded number of attempts
        let mut attempts = 8 * n + 32;
        while out.len() < n && attempts > 0 && total > 0.0 {
            attempts -= 1;
            let x = rng.gen_range(0.0..total);
            let e = cum.partition_point(|&c| c <= x).min(self.num_entities - 1);
            if !self.chosen[e] {
                self.chosen[e] = true;
                out.push(e as u32);
            }
        }
        while out.len() < n {
            let e = rng.gen_range(0..self.num_entities);
            if !self.chosen[e] {
                self.chosen[e] = true;
                out.push(e as u32);
            }
        }
        for &e in &out {
            self.chosen[e as usize] = false;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use alloc::collections::BTreeSet;

    #[test]
    fn scaling() {
        assert_eq!(scale_negatives(1000, 500, 500), 1000);
        assert_eq!(scale_negatives(1000, 50, 500), 100);
        assert_eq!(scale_negatives(3, 5, 500), 1);
    }

    #[test]
    fn near_exhaustive_draw() {
        let mut rng = rng_from(3, &[]);
        let v = sample_negatives(20, 19, &mut rng).unwrap();
        assert_eq!(v.iter().collect::<BTreeSet<_>>().len(), 19);
        assert_eq!(sample_negatives(20, 20, &mut rng).unwrap_err(), Error::TooManyNegatives { n: 20, entities: 20 });
    }

    #[test]
    fn frequency_pool_distinct() {
        let train: Vec<Triple> = (0..50).map(|i| Triple::new(0, 0, 1 + i % 9)).collect();
        let mut s = NegativeSampler::new(NegativePool::Frequency, 12, &train);
        let mut rng = rng_from(1, &[]);
        for _ in 0..100 {
            let v = s.sample(11, &mut rng).unwrap();
            assert_eq!(v.iter().collect::<BTreeSet<_>>().len(), 11);
        }
    }

    #[test]
    fn corrupt_sides() {
        let t = Triple::new(1, 2, 3);
        assert_eq!(corrupt(t, Direction::Object, 9), Triple::new(1, 2, 9));
        assert_eq!(corrupt(t, Direction::Subject, 9), Triple::new(9, 2, 3));
    }
}
