//! Negative-sampling training with cross-entropy loss.
//!
//! Each positive `(s, p, o)` is scored once and compared against `N-`
//! sampled objects and `N-` sampled subjects. The loss per direction is the
//! cross-entropy of the positive within `{positive} + negatives`, so one
//! positive costs `2 N- + 1` score computations.

mod negatives;
mod optim;

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::kg::Triple;
use crate::model::{
    complex_query, complex_query_grad, complex_subject_query, complex_subject_query_grad, dot, kernel_grad, kernel_score,
    operator_grad_to_row, EmbeddingModel, Scorer,
};
use crate::rng::{rng_from, Rng};
use crate::{Error, Result};

pub use negatives::{corrupt, sample_negatives, scale_negatives, NegativePool};
pub use optim::OptimizerKind;

use negatives::NegativeSampler;
use optim::OptimState;

const TAG_TRAIN: u64 = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Loss {
    #[default]
    CrossEntropy,
}

/// Everything one training run needs besides the data.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// Negatives per positive and direction.
    pub num_negatives: usize,
    pub loss: Loss,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Multiplies the learning rate after every full epoch.
    pub lr_decay: f64,
    /// Decoupled shrinkage applied to updated rows.
    pub weight_decay: f64,
    /// L2 penalty on the subject and object embeddings of each positive.
    pub entity_penalty: f64,
    /// L2 penalty on the relation embedding of each positive.
    pub relation_penalty: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub init_scale: f64,
    pub negative_pool: NegativePool,
    /// May be fractional; the remainder is a partial pass over a fresh
    /// shuffle.
    pub epochs: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_negatives: 16,
            loss: Loss::CrossEntropy,
            optimizer: OptimizerKind::Adagrad,
            learning_rate: 0.1,
            lr_decay: 1.0,
            weight_decay: 0.0,
            entity_penalty: 0.0,
            relation_penalty: 0.0,
            dropout: 0.0,
            batch_size: 256,
            init_scale: 0.1,
            negative_pool: NegativePool::Uniform,
            epochs: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(what.into()));
        if self.num_negatives == 0 {
            return bad("num_negatives must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must be in (0, 1]");
        }
        for (name, v) in [
            ("weight_decay", self.weight_decay),
            ("entity_penalty", self.entity_penalty),
            ("relation_penalty", self.relation_penalty),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(alloc::format!("{name} must be >= 0")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.epochs >= 0.0 && self.epochs.is_finite()) {
            return bad("epochs must be >= 0");
        }
        Ok(())
    }
}

/// Average loss per (partial) epoch and the number of score computations.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossTrace {
    pub epoch_losses: Vec<f64>,
    pub score_computations: u64,
}

/// A positive with its sampled negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct NegSample {
    pub positive: Triple,
    pub object_negatives: Vec<u32>,
    pub subject_negatives: Vec<u32>,
    masks: Option<Masks>,
}

impl NegSample {
    pub fn new(positive: Triple, object_negatives: Vec<u32>, subject_negatives: Vec<u32>) -> Self {
        Self {
            positive,
            object_negatives,
            subject_negatives,
            masks: None,
        }
    }
}

/// Inverted-dropout multipliers for the positive's subject, relation and
/// object rows (each entry `0` or `1 / (1 - rate)`).
#[derive(Clone, Debug, PartialEq)]
struct Masks {
    s: Vec<f64>,
    p: Option<Vec<f64>>,
    o: Vec<f64>,
}

/// Dense gradient buffers with a list of touched rows.
#[derive(Clone, Debug)]
pub struct Gradient {
    dim: usize,
    rel_width: usize,
    entities: Vec<f64>,
    relations: Vec<f64>,
    touched_e: Vec<u32>,
    touched_r: Vec<u32>,
    flag_e: Vec<bool>,
    flag_r: Vec<bool>,
}

impl Gradient {
    pub fn new(model: &EmbeddingModel) -> Self {
        Self {
            dim: model.dim(),
            rel_width: model.relation_width(),
            entities: alloc::vec![0.0; model.entity_embeddings().len()],
            relations: alloc::vec![0.0; model.relation_embeddings().len()],
            touched_e: Vec::new(),
            touched_r: Vec::new(),
            flag_e: alloc::vec![false; model.num_entities()],
            flag_r: alloc::vec![false; model.num_relations()],
        }
    }

    pub fn entity_grad(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_grad(&self) -> &[f64] {
        &self.relations
    }

    fn entity_row(&mut self, e: u32) -> &mut [f64] {
        if !core::mem::replace(&mut self.flag_e[e as usize], true) {
            self.touched_e.push(e);
        }
        let d = self.dim;
        &mut self.entities[e as usize * d..(e as usize + 1) * d]
    }

    fn relation_row(&mut self, p: u32) -> &mut [f64] {
        if !core::mem::replace(&mut self.flag_r[p as usize], true) {
            self.touched_r.push(p);
        }
        let w = self.rel_width;
        &mut self.relations[p as usize * w..(p as usize + 1) * w]
    }
}

/// Scratch vectors reused across positives.
struct Scratch {
    s: Vec<f64>,
    o: Vec<f64>,
    row_p: Vec<f64>,
    op: Vec<f64>,
    gs: Vec<f64>,
    go: Vec<f64>,
    gop: Vec<f64>,
    grow: Vec<f64>,
    q: Vec<f64>,
    u: Vec<f64>,
    gq: Vec<f64>,
    gu: Vec<f64>,
    scores: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        let v = || Vec::with_capacity(dim);
        Self {
            s: v(),
            o: v(),
            row_p: v(),
            op: v(),
            gs: v(),
            go: v(),
            gop: v(),
            grow: v(),
            q: v(),
            u: v(),
            gq: v(),
            gu: v(),
            scores: Vec::new(),
        }
    }
}

fn relation_operator(scorer: Scorer, row: &[f64], out: &mut Vec<f64>) {
    out.clear();
    if scorer == Scorer::RotatE {
        for &t in row {
            out.push(libm::cos(t));
            out.push(libm::sin(t));
        }
    } else {
        out.extend_from_slice(row);
    }
}

/// Turns candidate scores (positive first) into the cross-entropy loss and
/// writes `softmax - onehot(0)` back into `scores`.
fn cross_entropy_in_place(scores: &mut [f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted_pos = scores[0] - max;
    let mut z = 0.0;
    for s in scores.iter_mut() {
        *s = libm::exp(*s - max);
        z += *s;
    }
    for s in scores.iter_mut() {
        *s /= z;
    }
    scores[0] -= 1.0;
    libm::log(z) - shifted_pos
}

/// Mean loss of a batch (cross-entropy in both directions plus L2
/// penalties). When `grad` is given, the gradient of that mean is added to
/// it.
pub fn batch_objective(
    model: &EmbeddingModel,
    batch: &[NegSample],
    entity_penalty: f64,
    relation_penalty: f64,
    mut grad: Option<&mut Gradient>,
) -> f64 {
    let mut sc = Scratch::new(model.dim());
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut total = 0.0;
    for item in batch {
        total += sample_objective(model, item, entity_penalty, relation_penalty, scale, grad.as_deref_mut(), &mut sc);
    }
    total * scale
}

fn sample_objective(
    model: &EmbeddingModel,
    item: &NegSample,
    entity_penalty: f64,
    relation_penalty: f64,
    scale: f64,
    grad: Option<&mut Gradient>,
    sc: &mut Scratch,
) -> f64 {
    let (scorer, norm, dim) = (model.scorer(), model.norm(), model.dim());
    let Triple { s, p, o } = item.positive;
    let (raw_s, raw_p, raw_o) = (model.entity(s), model.relation(p), model.entity(o));

    let apply = |raw: &[f64], mask: Option<&Vec<f64>>, out: &mut Vec<f64>| {
        out.clear();
        match mask {
            Some(m) => out.extend(raw.iter().zip(m).map(|(x, m)| x * m)),
            None => out.extend_from_slice(raw),
        }
    };
    let masks = item.masks.as_ref();
    apply(raw_s, masks.map(|m| &m.s), &mut sc.s);
    apply(raw_o, masks.map(|m| &m.o), &mut sc.o);
    apply(raw_p, masks.and_then(|m| m.p.as_ref()), &mut sc.row_p);
    relation_operator(scorer, &sc.row_p, &mut sc.op);

    let pos_score = kernel_score(scorer, norm, &sc.s, &sc.op, &sc.o);
    let mut loss = 0.0;
    // ComplEx scores against a precomputed query: one dot product per negative
    let complex = scorer == Scorer::ComplEx;
    if complex {
        complex_query(&sc.s, &sc.op, &mut sc.q);
        complex_subject_query(&sc.op, &sc.o, &mut sc.u);
    }

    sc.scores.clear();
    sc.scores.push(pos_score);
    for &e in &item.object_negatives {
        let c = model.entity(e);
        sc.scores.push(if complex { dot(&sc.q, c) } else { kernel_score(scorer, norm, &sc.s, &sc.op, c) });
    }
    loss += cross_entropy_in_place(&mut sc.scores);
    let obj_up: Vec<f64> = if grad.is_some() { sc.scores.clone() } else { Vec::new() };

    sc.scores.clear();
    sc.scores.push(pos_score);
    for &e in &item.subject_negatives {
        let c = model.entity(e);
        sc.scores.push(if complex { dot(c, &sc.u) } else { kernel_score(scorer, norm, c, &sc.op, &sc.o) });
    }
    loss += cross_entropy_in_place(&mut sc.scores);

    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    loss += entity_penalty * (sq(raw_s) + sq(raw_o)) + relation_penalty * sq(raw_p);

    let Some(g) = grad else {
        return loss;
    };
    let sub_up = &sc.scores;
    for v in [&mut sc.gs, &mut sc.go, &mut sc.gop, &mut sc.gq, &mut sc.gu] {
        v.clear();
        v.resize(dim, 0.0);
    }
    kernel_grad(scorer, norm, &sc.s, &sc.op, &sc.o, (obj_up[0] + sub_up[0]) * scale, &mut sc.gs, &mut sc.gop, &mut sc.go);
    if complex {
        for (&e, &up) in item.object_negatives.iter().zip(&obj_up[1..]) {
            let w = up * scale;
            for (gq, c) in sc.gq.iter_mut().zip(model.entity(e)) {
                *gq += w * c;
            }
            for (ge, q) in g.entity_row(e).iter_mut().zip(&sc.q) {
                *ge += w * q;
            }
        }
        for (&e, &up) in item.subject_negatives.iter().zip(&sub_up[1..]) {
            let w = up * scale;
            for (gu, c) in sc.gu.iter_mut().zip(model.entity(e)) {
                *gu += w * c;
            }
            for (ge, u) in g.entity_row(e).iter_mut().zip(&sc.u) {
                *ge += w * u;
            }
        }
        complex_query_grad(&sc.s, &sc.op, &sc.gq, &mut sc.gs, &mut sc.gop);
        complex_subject_query_grad(&sc.op, &sc.o, &sc.gu, &mut sc.gop, &mut sc.go);
    } else {
        for (&e, &up) in item.object_negatives.iter().zip(&obj_up[1..]) {
            let ge = g.entity_row(e);
            kernel_grad(scorer, norm, &sc.s, &sc.op, model.entity(e), up * scale, &mut sc.gs, &mut sc.gop, ge);
        }
        for (&e, &up) in item.subject_negatives.iter().zip(&sub_up[1..]) {
            let ge = g.entity_row(e);
            kernel_grad(scorer, norm, model.entity(e), &sc.op, &sc.o, up * scale, ge, &mut sc.gop, &mut sc.go);
        }
    }

    // back through dropout masks, then add penalty gradients
    let unmask = |gv: &mut Vec<f64>, mask: Option<&Vec<f64>>| {
        if let Some(m) = mask {
            for (x, m) in gv.iter_mut().zip(m) {
                *x *= m;
            }
        }
    };
    unmask(&mut sc.gs, masks.map(|m| &m.s));
    unmask(&mut sc.go, masks.map(|m| &m.o));
    sc.grow.clear();
    sc.grow.resize(raw_p.len(), 0.0);
    operator_grad_to_row(scorer, &sc.op, &sc.gop, &mut sc.grow);
    unmask(&mut sc.grow, masks.and_then(|m| m.p.as_ref()));

    let ep = 2.0 * entity_penalty * scale;
    let rp = 2.0 * relation_penalty * scale;
    let gs_row = g.entity_row(s);
    for ((g, d), x) in gs_row.iter_mut().zip(&sc.gs).zip(raw_s) {
        *g += d + ep * x;
    }
    let go_row = g.entity_row(o);
    for ((g, d), x) in go_row.iter_mut().zip(&sc.go).zip(raw_o) {
        *g += d + ep * x;
    }
    let gp_row = g.relation_row(p);
    for ((g, d), x) in gp_row.iter_mut().zip(&sc.grow).zip(raw_p) {
        *g += d + rp * x;
    }
    loss
}

fn dropout_mask(rng: &mut Rng, len: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect()
}

/// Trains `model` in place on `train` triples.
///
/// Runs `floor(epochs)` full epochs and then a partial epoch over the first
/// `round(frac(epochs) * |train|)` triples of a fresh shuffle. Optimizer
/// state persists across epochs; the learning rate is multiplied by
/// `lr_decay` after each full epoch. Deterministic in `config.seed`.
pub fn train(model: &mut EmbeddingModel, train: &[Triple], config: &TrainConfig) -> Result<LossTrace> {
    config.validate()?;
    if config.epochs == 0.0 {
        return Ok(LossTrace::default());
    }
    if train.is_empty() {
        return Err(Error::NoTriples);
    }
    let n_ent = model.num_entities();
    if config.num_negatives >= n_ent {
        return Err(Error::TooManyNegatives { n: config.num_negatives, entities: n_ent });
    }

    let mut rng = rng_from(config.seed, &[TAG_TRAIN]);
    let mut sampler = NegativeSampler::new(config.negative_pool, n_ent, train);
    let mut grad = Gradient::new(model);
    let mut ent_state = OptimState::new(config.optimizer, model.entities.len());
    let mut rel_state = OptimState::new(config.optimizer, model.relations.len());
    let mut trace = LossTrace::default();
    let mut lr = config.learning_rate;
    let mut step = 0u64;
    let mut order: Vec<u32> = (0..train.len() as u32).collect();
    let mut batch: Vec<NegSample> = Vec::with_capacity(config.batch_size);

    let full = libm::floor(config.epochs) as usize;
    let partial = libm::round((config.epochs - full as f64) * train.len() as f64) as usize;
    let passes = (0..full).map(|_| train.len()).chain((partial > 0).then_some(partial));

    for (epoch, len) in passes.enumerate() {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order[..len].chunks(config.batch_size) {
            batch.clear();
            for &i in chunk {
                let t = train[i as usize];
                let mut item = NegSample::new(
                    t,
                    sampler.sample(config.num_negatives, &mut rng)?,
                    sampler.sample(config.num_negatives, &mut rng)?,
                );
                if config.dropout > 0.0 {
                    let rel = (model.scorer() != Scorer::RotatE)
                        .then(|| dropout_mask(&mut rng, model.relation_width(), config.dropout));
                    item.masks = Some(Masks {
                        s: dropout_mask(&mut rng, model.dim(), config.dropout),
                        p: rel,
                        o: dropout_mask(&mut rng, model.dim(), config.dropout),
                    });
                }
                trace.score_computations += 1 + (item.object_negatives.len() + item.subject_negatives.len()) as u64;
                batch.push(item);
            }
            let loss = batch_objective(model, &batch, config.entity_penalty, config.relation_penalty, Some(&mut grad));
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += loss * chunk.len() as f64;

            step += 1;
            let dim = model.dim();
            let rw = model.relation_width();
            for e in grad.touched_e.drain(..) {
                grad.flag_e[e as usize] = false;
                let start = e as usize * dim;
                ent_state.apply(&mut model.entities, &mut grad.entities[start..start + dim], start, lr, config.weight_decay, step);
            }
            for p in grad.touched_r.drain(..) {
                grad.flag_r[p as usize] = false;
                let start = p as usize * rw;
                rel_state.apply(&mut model.relations, &mut grad.relations[start..start + rw], start, lr, config.weight_decay, step);
            }
        }
        if !model.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        trace.epoch_losses.push(epoch_loss / len as f64);
        if epoch < full {
            lr *= config.lr_decay;
        }
    }
    Ok(trace)
}
