//! Text cache for a k-core ladder.
//!
//! ```text
//! # grash core ladder v1
//! parent_entities <n>
//! parent_triples <m>
//! level <k> <triples> <entities>      (one line per k = 1..=max_k)
//! coreness
//! <coreness of entity 0>
//! <coreness of entity 1>
//! ...
//! ```
//!
//! Entity indices follow the graph the ladder was computed on.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use grash_core::reduce::{CoreLadder, CoreLevel};
use grash_core::KnowledgeGraph;

use crate::{Error, Result};

const HEADER: &str = "# grash core ladder v1";

pub fn to_text(ladder: &CoreLadder) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "parent_entities {}", ladder.parent_entities);
    let _ = writeln!(s, "parent_triples {}", ladder.parent_triples);
    for l in &ladder.levels {
        let _ = writeln!(s, "level {} {} {}", l.k, l.triples, l.entities);
    }
    let _ = writeln!(s, "coreness");
    for c in &ladder.coreness {
        let _ = writeln!(s, "{c}");
    }
    s
}

pub fn parse(text: &str, path: &Path) -> Result<CoreLadder> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, message: &str| Error::Parse { path: path.to_owned(), line: line + 1, message: message.to_owned() };
    match lines.next() {
        Some((_, h)) if h.trim_end() == HEADER => {}
        _ => return Err(err(0, "missing ladder header")),
    }
    let mut keyed = |key: &str| -> Result<usize> {
        let (i, line) = lines.next().ok_or_else(|| err(0, "truncated ladder"))?;
        line.strip_prefix(key)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err(i, &format!("expected `{key} <count>`")))
    };
    let parent_entities = keyed("parent_entities")?;
    let parent_triples = keyed("parent_triples")?;
    let mut levels = Vec::new();
    let mut coreness = Vec::new();
    let mut in_coreness = false;
    for (i, line) in lines {
        if in_coreness {
            coreness.push(line.trim().parse().map_err(|_| err(i, "bad coreness value"))?);
        } else if line.trim() == "coreness" {
            in_coreness = true;
        } else {
            let f: Vec<usize> = line
                .strip_prefix("level ")
                .map(|r| r.split_whitespace().filter_map(|x| x.parse().ok()).collect())
                .unwrap_or_default();
            if f.len() != 3 || f[0] != levels.len() + 1 {
                return Err(err(i, "expected `level <k> <triples> <entities>` with consecutive k"));
            }
            levels.push(CoreLevel { k: f[0], triples: f[1], entities: f[2] });
        }
    }
    if !in_coreness || coreness.len() != parent_entities {
        return Err(Error::format(path, "coreness list does not cover every entity"));
    }
    Ok(CoreLadder { coreness, levels, parent_entities, parent_triples })
}

pub fn write(path: &Path, ladder: &CoreLadder) -> Result<()> {
    fs::write(path, to_text(ladder)).map_err(Error::io(path))
}

pub fn read(path: &Path) -> Result<CoreLadder> {
    parse(&fs::read_to_string(path).map_err(Error::io(path))?, path)
}

/// Reads a cached ladder and checks it against `graph`: sizes must match and
/// the coreness must reproduce the cached levels.
pub fn read_for(path: &Path, graph: &KnowledgeGraph) -> Result<CoreLadder> {
    let cached = read(path)?;
    if cached.parent_entities != graph.num_entities() || cached.parent_triples != graph.num_triples() {
        return Err(Error::format(path, "ladder was computed on a different graph"));
    }
    let rebuilt = CoreLadder::from_coreness(graph, cached.coreness.clone());
    if rebuilt != cached {
        return Err(Error::format(path, "ladder levels do not match the graph"));
    }
    Ok(cached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use grash_core::core_decomposition;

    #[test]
    fn round_trip() {
        let (g, _) = KnowledgeGraph::from_labeled([("a", "r", "b"), ("b", "r", "c"), ("c", "r", "a"), ("c", "r", "d")]).unwrap();
        let l = core_decomposition(&g);
        let text = to_text(&l);
        assert!(text.starts_with(HEADER));
        assert_eq!(parse(&text, Path::new("l")).unwrap(), l);
        assert!(parse(&text.replace("level 2", "level 3"), Path::new("l")).is_err());
    }
}
