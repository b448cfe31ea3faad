//! Text formats: `.tri3` graphs, JSON covers and witnesses, key=value configs.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::cover::ExtremeWitness;
use crate::extremal::{Model, StructureWitness};
use crate::graph::{Config, TripartiteGraph, Triangle, VertexRef, CLASSES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn at(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn parse_num(tok: &str, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse()
        .map_err(|_| ParseError::at(line, format!("{what} {tok:?} is not a non-negative integer")))
}

/// Parses a `.tri3` graph. Blank lines and `#` comments are ignored anywhere;
/// the first content line must be the `tri3 <N>` header.
pub fn parse_tri3(text: &str) -> Result<TripartiteGraph, ParseError> {
    let mut g: Option<TripartiteGraph> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let Some(graph) = g.as_mut() else {
            match toks.as_slice() {
                ["tri3", n] => {
                    g = Some(TripartiteGraph::empty(parse_num(n, line, "class size")?));
                    continue;
                }
                _ => return Err(ParseError::at(line, "expected header `tri3 <N>`")),
            }
        };
        let ["e", ca, ia, cb, ib] = toks.as_slice() else {
            return Err(ParseError::at(line, "expected `e <classA> <idxA> <classB> <idxB>`"));
        };
        let n = graph.n();
        let (ca, ia) = (parse_num(ca, line, "class")?, parse_num(ia, line, "index")?);
        let (cb, ib) = (parse_num(cb, line, "class")?, parse_num(ib, line, "index")?);
        for c in [ca, cb] {
            if c >= CLASSES {
                return Err(ParseError::at(line, format!("class {c} out of range")));
            }
        }
        if ca >= cb {
            return Err(ParseError::at(line, format!("classes must satisfy classA < classB, got {ca} {cb}")));
        }
        for i in [ia, ib] {
            if i >= n {
                return Err(ParseError::at(line, format!("index {i} out of range for N = {n}")));
            }
        }
        graph.set_edge(VertexRef::new(ca, ia), VertexRef::new(cb, ib));
    }
    g.ok_or_else(|| ParseError::at(text.lines().count().max(1), "missing header `tri3 <N>`"))
}

/// Canonical `.tri3` text: header, then edges sorted by
/// `(classA, idxA, classB, idxB)`.
pub fn write_tri3(g: &TripartiteGraph) -> String {
    let mut edges: Vec<(usize, usize, usize, usize)> = g
        .edges()
        .into_iter()
        .map(|(u, v)| {
            let (u, v) = if u.class < v.class { (u, v) } else { (v, u) };
            (u.class, u.index, v.class, v.index)
        })
        .collect();
    edges.sort_unstable();
    let mut out = format!("tri3 {}\n", g.n());
    for (ca, ia, cb, ib) in edges {
        writeln!(out, "e {ca} {ia} {cb} {ib}").expect("writing to a String");
    }
    out
}

pub fn read_tri3(path: &Path) -> Result<TripartiteGraph, IoError> {
    Ok(parse_tri3(&read_file(path)?)?)
}

/// Cover as a JSON array of `[i0, i1, i2]` triples.
pub fn cover_to_json(triangles: &[Triangle]) -> String {
    let rows: Vec<[usize; 3]> = triangles.iter().map(|t| t.v).collect();
    serde_json::to_string(&rows).expect("plain arrays serialize")
}

pub fn parse_cover_json(text: &str) -> Result<Vec<Triangle>, ParseError> {
    let rows: Vec<[usize; 3]> = serde_json::from_str(text).map_err(|e| ParseError::at(e.line(), e.to_string()))?;
    Ok(rows.into_iter().map(Triangle::from_indices).collect())
}

#[derive(Serialize)]
struct StructureJson {
    model: Model,
    t: usize,
    eps: f64,
    delta: f64,
    /// `[class, index, i, j]`: vertex `index` of `class` is model vertex `(i, j)`.
    assignment: Vec<[usize; 4]>,
}

pub fn structure_witness_json(w: &StructureWitness) -> String {
    let assignment = (0..CLASSES)
        .flat_map(|c| w.assignment[c].iter().enumerate().map(move |(i, &j)| [c, i, c, j]))
        .collect();
    let doc = StructureJson {
        model: w.model,
        t: w.t,
        eps: w.eps,
        delta: crate::graph::ratio_to_f64(w.max_nonedge_density),
        assignment,
    };
    serde_json::to_string(&doc).expect("witness serializes")
}

pub fn extreme_witness_json(w: &ExtremeWitness) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        model: &'static str,
        #[serde(flatten)]
        witness: &'a ExtremeWitness,
    }
    serde_json::to_string(&Doc {
        model: "extreme",
        witness: w,
    })
    .expect("witness serializes")
}

/// Config from `key = value` lines; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<Config, ParseError> {
    let cfg: Config = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| text[..s.start].matches('\n').count() + 1);
        ParseError::at(line, e.message().to_string())
    })?;
    cfg.validate().map_err(|e| ParseError::at(1, e.to_string()))?;
    Ok(cfg)
}

/// Parses and re-serializes a graph (`tri3` header) or a JSON cover.
pub fn roundtrip(text: &str) -> Result<String, ParseError> {
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    if first.starts_with('[') {
        Ok(cover_to_json(&parse_cover_json(text)?) + "\n")
    } else {
        Ok(write_tri3(&parse_tri3(text)?))
    }
}
