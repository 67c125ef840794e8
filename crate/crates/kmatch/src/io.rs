//! Plain-text graph and matching files.
//!
//! A graph file starts with `p kmatch <n> <m> <k>` followed by `m` lines
//! `e <u> <v>` with 0-based ids; loops are `e u u` and parallel edges are
//! repeated. Lines starting with `c` and blank lines are skipped. A matching
//! file holds one `u v` pair per line.

use crate::graph::MultiGraph;
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `p kmatch` header")]
    MissingHeader,
    #[error("header announces {expected} edges, found {found}")]
    EdgeCount { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A graph together with the `k` recorded in its header.
#[derive(Clone, Debug)]
pub struct GraphFile {
    pub graph: MultiGraph,
    pub k: usize,
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

fn field(line: usize, tok: Option<&str>, what: &str) -> Result<usize, ParseError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| syntax(line, format!("{what} `{tok}` is not a nonnegative integer")))
}

pub fn read_graph<R: BufRead>(reader: R) -> Result<GraphFile, ParseError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut g = MultiGraph::new(0);
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text?;
        let mut toks = text.split_whitespace();
        match toks.next() {
            None | Some("c") => continue,
            Some("p") => {
                if header.is_some() {
                    return Err(syntax(line, "second header"));
                }
                if toks.next() != Some("kmatch") {
                    return Err(syntax(line, "header must read `p kmatch <n> <m> <k>`"));
                }
                let n = field(line, toks.next(), "n")?;
                let m = field(line, toks.next(), "m")?;
                let k = field(line, toks.next(), "k")?;
                header = Some((n, m, k));
                g = MultiGraph::new(n);
            }
            Some("e") => {
                let Some((n, _, _)) = header else { return Err(ParseError::MissingHeader) };
                let u = field(line, toks.next(), "endpoint")?;
                let v = field(line, toks.next(), "endpoint")?;
                if u >= n || v >= n {
                    return Err(syntax(line, format!("vertex out of range for n = {n}")));
                }
                g.add_edge(u, v).map_err(|e| syntax(line, e.to_string()))?;
            }
            Some(other) => return Err(syntax(line, format!("unknown line type `{other}`"))),
        }
        if toks.next().is_some() {
            return Err(syntax(line, "trailing tokens"));
        }
    }
    let (_, m, k) = header.ok_or(ParseError::MissingHeader)?;
    if g.m() != m {
        return Err(ParseError::EdgeCount { expected: m, found: g.m() });
    }
    Ok(GraphFile { graph: g, k })
}

pub fn write_graph<W: Write>(mut w: W, g: &MultiGraph, k: usize) -> io::Result<()> {
    writeln!(w, "p kmatch {} {} {}", g.n(), g.m(), k)?;
    for (_, u, v) in g.edges() {
        writeln!(w, "e {u} {v}")?;
    }
    w.flush()
}

pub fn read_matching<R: BufRead>(reader: R) -> Result<Vec<(usize, usize)>, ParseError> {
    let mut pairs = Vec::new();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text?;
        let mut toks = text.split_whitespace();
        let Some(first) = toks.next() else { continue };
        let u = field(line, Some(first), "endpoint")?;
        let v = field(line, toks.next(), "endpoint")?;
        if toks.next().is_some() {
            return Err(syntax(line, "trailing tokens"));
        }
        pairs.push((u, v));
    }
    Ok(pairs)
}

pub fn write_matching<W: Write>(mut w: W, pairs: &[(usize, usize)]) -> io::Result<()> {
    for &(u, v) in pairs {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()
}
