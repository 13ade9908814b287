//! Triple files: UTF-8, one `subject<TAB>relation<TAB>object` line per
//! triple, no header. Blank lines are skipped; a trailing `\r` is ignored.
//!
//! A dataset is either a directory holding `train.txt` and optionally
//! `valid.txt` and `test.txt`, or a single triple file used as the training
//! split.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use grash_core::kg::Vocabulary;
use grash_core::{DatasetSplit, KnowledgeGraph, Triple};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub type Labeled = (String, String, String);

pub const SPLIT_FILES: [&str; 3] = ["train.txt", "valid.txt", "test.txt"];

pub fn parse_triples(reader: impl BufRead, path: &Path) -> Result<Vec<Labeled>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |message: String| Error::Parse { path: path.to_owned(), line: i + 1, message };
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(bad("empty field".into()));
        }
        out.push((fields[0].to_owned(), fields[1].to_owned(), fields[2].to_owned()));
    }
    Ok(out)
}

pub fn read_triples(path: &Path) -> Result<Vec<Labeled>> {
    let f = fs::File::open(path).map_err(Error::io(path))?;
    parse_triples(BufReader::new(f), path)
}

fn as_refs(v: &[Labeled]) -> impl Iterator<Item = (&str, &str, &str)> {
    v.iter().map(|(s, p, o)| (s.as_str(), p.as_str(), o.as_str()))
}

/// Loads one triple file, dropping duplicates. Returns the graph and the
/// number of duplicates.
pub fn load_graph(path: &Path) -> Result<(KnowledgeGraph, usize)> {
    let triples = read_triples(path)?;
    Ok(KnowledgeGraph::from_labeled(as_refs(&triples))?)
}

/// The files making up a dataset, in train/valid/test order.
pub fn dataset_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let files: Vec<PathBuf> = SPLIT_FILES.iter().map(|f| path.join(f)).filter(|p| p.is_file()).collect();
        if !path.join(SPLIT_FILES[0]).is_file() {
            return Err(Error::format(path, "dataset directory has no train.txt"));
        }
        Ok(files)
    } else if path.is_file() {
        Ok(vec![path.to_owned()])
    } else {
        Err(Error::format(path, "no such dataset file or directory"))
    }
}

pub fn load_dataset(path: &Path) -> Result<DatasetSplit> {
    let read = |name: &str| -> Result<Vec<Labeled>> {
        let p = path.join(name);
        if p.is_file() {
            read_triples(&p)
        } else {
            Ok(Vec::new())
        }
    };
    let (train, valid, test) = if path.is_dir() {
        dataset_files(path)?;
        (read(SPLIT_FILES[0])?, read(SPLIT_FILES[1])?, read(SPLIT_FILES[2])?)
    } else {
        (read_triples(path)?, Vec::new(), Vec::new())
    };
    Ok(DatasetSplit::from_labeled(as_refs(&train), as_refs(&valid), as_refs(&test))?)
}

pub fn write_triples(path: &Path, vocab: &Vocabulary, triples: &[Triple]) -> Result<()> {
    let f = fs::File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(f);
    for t in triples {
        writeln!(
            w,
            "{}\t{}\t{}",
            vocab.entities[t.s as usize], vocab.relations[t.p as usize], vocab.entities[t.o as usize]
        )
        .map_err(Error::io(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Writes `train.txt`, `valid.txt` and (when nonempty) `test.txt` into `dir`.
pub fn write_dataset(dir: &Path, d: &DatasetSplit) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    write_triples(&dir.join(SPLIT_FILES[0]), &d.vocab, &d.train)?;
    write_triples(&dir.join(SPLIT_FILES[1]), &d.vocab, &d.valid)?;
    if !d.test.is_empty() {
        write_triples(&dir.join(SPLIT_FILES[2]), &d.vocab, &d.test)?;
    }
    Ok(())
}

/// SHA-256 over the dataset's file names and contents, hex encoded.
pub fn dataset_hash(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for f in dataset_files(path)? {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        h.update(name.as_bytes());
        h.update([0u8]);
        h.update(fs::read(&f).map_err(Error::io(&f))?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_lines() {
        let p = Path::new("x.txt");
        let ok = parse_triples("a\tr\tb\r\n\nb\tr\tc\n".as_bytes(), p).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[1], ("b".into(), "r".into(), "c".into()));
        let err = parse_triples("a\tr\tb\na r b\n".as_bytes(), p).unwrap_err();
        assert_eq!(err.to_string(), "x.txt:2: expected 3 tab-separated fields, found 1");
        assert!(parse_triples("a\t\tb\n".as_bytes(), p).is_err());
    }
}
