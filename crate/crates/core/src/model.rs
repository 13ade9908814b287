//! Embedding storage and scoring for ComplEx, TransE and RotatE.
//!
//! All embeddings live in two row-major real matrices. Complex vectors are
//! interleaved `(re, im)` pairs. RotatE relation rows hold `dim / 2` phase
//! angles; scoring turns them into unit-modulus rotations.
//!
//! Scoring is split into a relation *operator* (the relation row, or the
//! `(cos, sin)` pairs of RotatE phases) and a kernel over three slices of
//! length `dim`. [`EmbeddingModel::score`] and
//! [`EmbeddingModel::score_candidates`] go through the same kernel, so their
//! results agree bit for bit.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;

use crate::rng::{rng_from, TAG_INIT};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scorer {
    ComplEx,
    TransE,
    RotatE,
}

impl Scorer {
    pub const ALL: [Scorer; 3] = [Scorer::ComplEx, Scorer::TransE, Scorer::RotatE];

    pub fn is_complex(self) -> bool {
        matches!(self, Scorer::ComplEx | Scorer::RotatE)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scorer::ComplEx => "complex",
            Scorer::TransE => "transe",
            Scorer::RotatE => "rotate",
        }
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl core::str::FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParam(alloc::format!("unknown model {s:?}")))
    }
}

/// Distance norm used by TransE.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Norm {
    L1,
    #[default]
    L2,
}

/// Which side of a triple is replaced by candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `(s, p, ?)`
    Object,
    /// `(?, p, o)`
    Subject,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    scorer: Scorer,
    norm: Norm,
    dim: usize,
    seed: u64,
    n_entities: usize,
    n_relations: usize,
    pub(crate) entities: Vec<f64>,
    pub(crate) relations: Vec<f64>,
}

fn relation_width(scorer: Scorer, dim: usize) -> usize {
    if scorer == Scorer::RotatE {
        dim / 2
    } else {
        dim
    }
}

fn check_dim(scorer: Scorer, dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, reason: "must be at least 2" });
    }
    if scorer.is_complex() && !dim.is_multiple_of(2) {
        return Err(Error::InvalidDimension { dim, reason: "complex scorers need an even dimension" });
    }
    Ok(())
}

/// Draws embeddings uniformly from `[-init_scale, init_scale]` (RotatE
/// phases from `[0, 2pi)`).
pub fn init_model(
    scorer: Scorer,
    dim: usize,
    n_entities: usize,
    n_relations: usize,
    init_scale: f64,
    seed: u64,
) -> Result<EmbeddingModel> {
    check_dim(scorer, dim)?;
    if !(init_scale.is_finite() && init_scale > 0.0) {
        return Err(Error::InvalidParam(alloc::format!("init scale {init_scale} must be positive")));
    }
    let mut rng = rng_from(seed, &[TAG_INIT]);
    let entities = (0..n_entities * dim).map(|_| rng.gen_range(-init_scale..=init_scale)).collect();
    let rw = relation_width(scorer, dim);
    let relations = (0..n_relations * rw)
        .map(|_| {
            if scorer == Scorer::RotatE {
                rng.gen_range(0.0..2.0 * PI)
            } else {
                rng.gen_range(-init_scale..=init_scale)
            }
        })
        .collect();
    Ok(EmbeddingModel {
        scorer,
        norm: Norm::L2,
        dim,
        seed,
        n_entities,
        n_relations,
        entities,
        relations,
    })
}

impl EmbeddingModel {
    /// Rebuilds a model from raw matrices (e.g. a checkpoint).
    pub fn from_raw(
        scorer: Scorer,
        norm: Norm,
        dim: usize,
        seed: u64,
        entities: Vec<f64>,
        relations: Vec<f64>,
    ) -> Result<Self> {
        check_dim(scorer, dim)?;
        let rw = relation_width(scorer, dim);
        if !entities.len().is_multiple_of(dim) || !relations.len().is_multiple_of(rw) {
            return Err(Error::InvalidParam("embedding matrix size is not a multiple of the row width".into()));
        }
        if !entities.iter().chain(&relations).all(|v| v.is_finite()) {
            return Err(Error::InvalidParam("non-finite embedding value".into()));
        }
        Ok(Self {
            scorer,
            norm,
            dim,
            seed,
            n_entities: entities.len() / dim,
            n_relations: relations.len() / rw,
            entities,
            relations,
        })
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn scorer(&self) -> Scorer {
        self.scorer
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_entities(&self) -> usize {
        self.n_entities
    }

    pub fn num_relations(&self) -> usize {
        self.n_relations
    }

    /// Width of a stored relation row.
    pub fn relation_width(&self) -> usize {
        relation_width(self.scorer, self.dim)
    }

    /// Total number of stored parameters.
    pub fn num_values(&self) -> usize {
        self.entities.len() + self.relations.len()
    }

    pub fn entity_embeddings(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_embeddings(&self) -> &[f64] {
        &self.relations
    }

    pub fn entity(&self, e: u32) -> &[f64] {
        let d = self.dim;
        &self.entities[e as usize * d..(e as usize + 1) * d]
    }

    pub fn relation(&self, p: u32) -> &[f64] {
        let w = self.relation_width();
        &self.relations[p as usize * w..(p as usize + 1) * w]
    }

    pub fn is_finite(&self) -> bool {
        self.entities.iter().chain(&self.relations).all(|v| v.is_finite())
    }

    /// Writes the relation operator (length `dim`) for `p` into `out`.
    pub(crate) fn relation_operator_into(&self, p: u32, out: &mut Vec<f64>) {
        out.clear();
        let row = self.relation(p);
        match self.scorer {
            Scorer::RotatE => {
                for &theta in row {
                    out.push(libm::cos(theta));
                    out.push(libm::sin(theta));
                }
            }
            _ => out.extend_from_slice(row),
        }
    }

    pub fn score(&self, s: u32, p: u32, o: u32) -> f64 {
        let mut op = Vec::with_capacity(self.dim);
        self.relation_operator_into(p, &mut op);
        kernel_score(self.scorer, self.norm, self.entity(s), &op, self.entity(o))
    }

    /// Scores every entity as the missing side of `(entity, p, ?)` or
    /// `(?, p, entity)`.
    pub fn score_candidates(&self, direction: Direction, entity: u32, p: u32) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_entities);
        let mut op = Vec::with_capacity(self.dim);
        self.score_candidates_into(direction, entity, p, &mut op, &mut out);
        out
    }

    pub(crate) fn score_candidates_into(
        &self,
        direction: Direction,
        entity: u32,
        p: u32,
        op: &mut Vec<f64>,
        out: &mut Vec<f64>,
    ) {
        self.relation_operator_into(p, op);
        let fixed = self.entity(entity);
        out.clear();
        if self.scorer == Scorer::ComplEx && direction == Direction::Object {
            let mut q = Vec::with_capacity(self.dim);
            complex_query(fixed, op, &mut q);
            out.extend(self.entities.chunks_exact(self.dim).map(|c| dot(&q, c)));
            return;
        }
        out.extend(self.entities.chunks_exact(self.dim).map(|cand| match direction {
            Direction::Object => kernel_score(self.scorer, self.norm, fixed, op, cand),
            Direction::Subject => kernel_score(self.scorer, self.norm, cand, op, fixed),
        }));
    }
}

/// Score of `(s, r, o)` given the relation operator `r`.
#[inline]
pub(crate) fn kernel_score(scorer: Scorer, norm: Norm, s: &[f64], r: &[f64], o: &[f64]) -> f64 {
    match scorer {
        Scorer::ComplEx => {
            let mut acc = 0.0;
            for ((s, r), o) in s.chunks_exact(2).zip(r.chunks_exact(2)).zip(o.chunks_exact(2)) {
                let (q0, q1) = (s[0] * r[0] - s[1] * r[1], s[1] * r[0] + s[0] * r[1]);
                acc += q0 * o[0] + q1 * o[1];
            }
            acc
        }
        Scorer::TransE => match norm {
            Norm::L2 => {
                let mut acc = 0.0;
                for ((s, r), o) in s.iter().zip(r).zip(o) {
                    let d = s + r - o;
                    acc += d * d;
                }
                -libm::sqrt(acc)
            }
            Norm::L1 => {
                let mut acc = 0.0;
                for ((s, r), o) in s.iter().zip(r).zip(o) {
                    acc += libm::fabs(s + r - o);
                }
                -acc
            }
        },
        Scorer::RotatE => {
            let mut acc = 0.0;
            for ((s, r), o) in s.chunks_exact(2).zip(r.chunks_exact(2)).zip(o.chunks_exact(2)) {
                let re = s[0] * r[0] - s[1] * r[1] - o[0];
                let im = s[0] * r[1] + s[1] * r[0] - o[1];
                acc += re * re + im * im;
            }
            -libm::sqrt(acc)
        }
    }
}

/// ComplEx `s * r` as a vector `q` with `score = q . o`.
pub(crate) fn complex_query(s: &[f64], r: &[f64], q: &mut Vec<f64>) {
    q.clear();
    for (s, r) in s.chunks_exact(2).zip(r.chunks_exact(2)) {
        q.push(s[0] * r[0] - s[1] * r[1]);
        q.push(s[1] * r[0] + s[0] * r[1]);
    }
}

/// ComplEx `r * conj(o)` as a vector `u` with `score = s . u`.
pub(crate) fn complex_subject_query(r: &[f64], o: &[f64], u: &mut Vec<f64>) {
    u.clear();
    for (r, o) in r.chunks_exact(2).zip(o.chunks_exact(2)) {
        u.push(r[0] * o[0] + r[1] * o[1]);
        u.push(r[0] * o[1] - r[1] * o[0]);
    }
}

/// Chains `gq = d/dq` of [`complex_query`] into `gs` and `gr`.
pub(crate) fn complex_query_grad(s: &[f64], r: &[f64], gq: &[f64], gs: &mut [f64], gr: &mut [f64]) {
    for k in (0..s.len()).step_by(2) {
        let (g0, g1) = (gq[k], gq[k + 1]);
        gs[k] += g0 * r[k] + g1 * r[k + 1];
        gs[k + 1] += g1 * r[k] - g0 * r[k + 1];
        gr[k] += g0 * s[k] + g1 * s[k + 1];
        gr[k + 1] += g1 * s[k] - g0 * s[k + 1];
    }
}

/// Chains `gu = d/du` of [`complex_subject_query`] into `gr` and `go`.
pub(crate) fn complex_subject_query_grad(r: &[f64], o: &[f64], gu: &[f64], gr: &mut [f64], go: &mut [f64]) {
    for k in (0..r.len()).step_by(2) {
        let (g0, g1) = (gu[k], gu[k + 1]);
        gr[k] += g0 * o[k] + g1 * o[k + 1];
        gr[k + 1] += g0 * o[k + 1] - g1 * o[k];
        go[k] += g0 * r[k] - g1 * r[k + 1];
        go[k + 1] += g0 * r[k + 1] + g1 * r[k];
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in a.chunks_exact(2).zip(b.chunks_exact(2)) {
        acc += a[0] * b[0] + a[1] * b[1];
    }
    acc
}

/// Adds `upstream * d score / d (s, r, o)` into `gs`, `gr`, `go`.
///
/// At a zero distance (TransE L2, RotatE) the subgradient 0 is used.
#[allow(clippy::too_many_arguments)]
pub(crate) fn kernel_grad(
    scorer: Scorer,
    norm: Norm,
    s: &[f64],
    r: &[f64],
    o: &[f64],
    upstream: f64,
    gs: &mut [f64],
    gr: &mut [f64],
    go: &mut [f64],
) {
    match scorer {
        Scorer::ComplEx => {
            for k in (0..s.len()).step_by(2) {
                let (sr, si, rr, ri, or, oi) = (s[k], s[k + 1], r[k], r[k + 1], o[k], o[k + 1]);
                gs[k] += upstream * (rr * or + ri * oi);
                gs[k + 1] += upstream * (rr * oi - ri * or);
                gr[k] += upstream * (sr * or + si * oi);
                gr[k + 1] += upstream * (sr * oi - si * or);
                go[k] += upstream * (sr * rr - si * ri);
                go[k + 1] += upstream * (si * rr + sr * ri);
            }
        }
        Scorer::TransE => {
            let dist = -kernel_score(scorer, norm, s, r, o);
            for k in 0..s.len() {
                let d = s[k] + r[k] - o[k];
                let g = match norm {
                    Norm::L2 if dist > 0.0 => -d / dist,
                    Norm::L2 => 0.0,
                    Norm::L1 if d > 0.0 => -1.0,
                    Norm::L1 if d < 0.0 => 1.0,
                    Norm::L1 => 0.0,
                } * upstream;
                gs[k] += g;
                gr[k] += g;
                go[k] -= g;
            }
        }
        Scorer::RotatE => {
            let dist = -kernel_score(scorer, norm, s, r, o);
            if dist == 0.0 {
                return;
            }
            let c = -upstream / dist;
            for k in (0..s.len()).step_by(2) {
                let (sr, si, rr, ri, or, oi) = (s[k], s[k + 1], r[k], r[k + 1], o[k], o[k + 1]);
                let gre = c * (sr * rr - si * ri - or);
                let gim = c * (sr * ri + si * rr - oi);
                gs[k] += gre * rr + gim * ri;
                gs[k + 1] += -gre * ri + gim * rr;
                gr[k] += gre * sr + gim * si;
                gr[k + 1] += -gre * si + gim * sr;
                go[k] -= gre;
                go[k + 1] -= gim;
            }
        }
    }
}

/// Chains a gradient w.r.t. the relation operator back to the stored row.
/// Identity except for RotatE, where `op = (cos t, sin t)`.
pub(crate) fn operator_grad_to_row(scorer: Scorer, op: &[f64], g_op: &[f64], g_row: &mut [f64]) {
    match scorer {
        Scorer::RotatE => {
            for (k, g) in g_row.iter_mut().enumerate() {
                let (c, s) = (op[2 * k], op[2 * k + 1]);
                *g += -g_op[2 * k] * s + g_op[2 * k + 1] * c;
            }
        }
        _ => {
            for (g, d) in g_row.iter_mut().zip(g_op) {
                *g += d;
            }
        }
    }
}
