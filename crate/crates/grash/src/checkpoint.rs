//! Binary model checkpoint, little-endian throughout.
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | magic `GRASHKGE`                       |
//! | 8      | 4    | format version (u32, currently 1)      |
//! | 12     | 1    | scorer tag: 0 ComplEx, 1 TransE, 2 RotatE |
//! | 13     | 1    | norm: 1 = L1, 2 = L2                   |
//! | 14     | 2    | reserved, zero                         |
//! | 16     | 8    | dim (u64)                              |
//! | 24     | 8    | entity count (u64)                     |
//! | 32     | 8    | relation count (u64)                   |
//! | 40     | 8    | relation row width (u64)               |
//! | 48     | 8    | init seed (u64)                        |
//! | 56     | ...  | entity matrix, row-major f64           |
//! |        | ...  | relation matrix, row-major f64         |
//! |        | ...  | entity labels, then relation labels    |
//!
//! Each label is a u32 byte length followed by UTF-8 bytes.

use std::fs;
use std::path::Path;

use grash_core::kg::Vocabulary;
use grash_core::{EmbeddingModel, Norm, Scorer};

use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GRASHKGE";
pub const VERSION: u32 = 1;

pub fn encode(model: &EmbeddingModel, vocab: &Vocabulary) -> Vec<u8> {
    let mut b = Vec::with_capacity(64 + 8 * model.num_values());
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    b.push(model.scorer().tag());
    b.push(match model.norm() {
        Norm::L1 => 1,
        Norm::L2 => 2,
    });
    b.extend_from_slice(&[0, 0]);
    for v in [model.dim(), model.num_entities(), model.num_relations(), model.relation_width()] {
        b.extend_from_slice(&(v as u64).to_le_bytes());
    }
    b.extend_from_slice(&model.seed().to_le_bytes());
    for x in model.entity_embeddings().iter().chain(model.relation_embeddings()) {
        b.extend_from_slice(&x.to_le_bytes());
    }
    for label in vocab.entities.iter().chain(&vocab.relations) {
        b.extend_from_slice(&(label.len() as u32).to_le_bytes());
        b.extend_from_slice(label.as_bytes());
    }
    b
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| Error::format(self.path, "truncated checkpoint"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::format(self.path, "matrix too large"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn labels(&mut self, n: usize) -> Result<Vec<String>> {
        (0..n)
            .map(|_| {
                let len = self.u32()? as usize;
                String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::format(self.path, "label is not UTF-8"))
            })
            .collect()
    }
}

pub fn decode(buf: &[u8], path: &Path) -> Result<(EmbeddingModel, Vocabulary)> {
    let mut r = Reader { buf, pos: 0, path };
    if r.take(8)? != MAGIC {
        return Err(Error::format(path, "not a grash checkpoint"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported checkpoint version {version}")));
    }
    let head = r.take(4)?;
    let scorer = Scorer::from_tag(head[0]).ok_or_else(|| Error::format(path, "unknown scorer tag"))?;
    let norm = match head[1] {
        1 => Norm::L1,
        2 => Norm::L2,
        _ => return Err(Error::format(path, "unknown norm")),
    };
    let dim = r.u64()? as usize;
    let n_e = r.u64()? as usize;
    let n_r = r.u64()? as usize;
    let width = r.u64()? as usize;
    let seed = r.u64()?;
    let ents = r.f64s(n_e.saturating_mul(dim))?;
    let rels = r.f64s(n_r.saturating_mul(width))?;
    let model = EmbeddingModel::from_raw(scorer, norm, dim, seed, ents, rels)?;
    if model.relation_width() != width || model.num_entities() != n_e || model.num_relations() != n_r {
        return Err(Error::format(path, "header does not match the matrices"));
    }
    let entities = r.labels(n_e)?;
    let relations = r.labels(n_r)?;
    if r.pos != buf.len() {
        return Err(Error::format(path, "trailing bytes after checkpoint"));
    }
    Ok((model, Vocabulary { entities, relations }))
}

pub fn write(path: &Path, model: &EmbeddingModel, vocab: &Vocabulary) -> Result<()> {
    fs::write(path, encode(model, vocab)).map_err(Error::io(path))
}

pub fn read(path: &Path) -> Result<(EmbeddingModel, Vocabulary)> {
    decode(&fs::read(path).map_err(Error::io(path))?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use grash_core::init_model;

    #[test]
    fn round_trip_every_scorer() {
        for scorer in Scorer::ALL {
            let m = init_model(scorer, 4, 3, 2, 0.5, 9).unwrap().with_norm(Norm::L1);
            let vocab = Vocabulary {
                entities: vec!["a".into(), "b".into(), "ç".into()],
                relations: vec!["r".into(), "s".into()],
            };
            let bytes = encode(&m, &vocab);
            let (back, v) = decode(&bytes, Path::new("m")).unwrap();
            assert_eq!(back, m);
            assert_eq!(v, vocab);
            assert!(decode(&bytes[..bytes.len() - 1], Path::new("m")).is_err());
        }
    }
}
