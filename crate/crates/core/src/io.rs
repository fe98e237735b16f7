//! Plain-text graph files.
//!
//! ```text
//! # comment
//! p <node_count> <arc_count>
//! a <src> <dst>
//! ```
//!
//! Node ids are 0-based. Arcs are written sorted by `(src, dst)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::graph::{DirectedGraph, GraphError};

#[derive(Debug, Error)]
pub enum GraphFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> GraphFileError {
    GraphFileError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_id(tok: Option<&str>, line: usize, what: &str) -> Result<usize, GraphFileError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

pub fn parse_graph(text: &str) -> Result<DirectedGraph, GraphFileError> {
    let mut graph: Option<(DirectedGraph, usize)> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let kind = toks.next().unwrap_or_default();
        match (kind, graph.as_mut()) {
            ("p", None) => {
                let n = parse_id(toks.next(), line, "node count")?;
                let m = parse_id(toks.next(), line, "arc count")?;
                graph = Some((DirectedGraph::new(n), m));
            }
            ("p", Some(_)) => return Err(parse_err(line, "duplicate `p` line")),
            ("a", Some((g, _))) => {
                let u = parse_id(toks.next(), line, "source id")?;
                let v = parse_id(toks.next(), line, "target id")?;
                g.add_arc(u, v).map_err(|e| match e {
                    GraphError::NodeOutOfRange { id, node_count } => {
                        parse_err(line, format!("node id {id} >= node count {node_count}"))
                    }
                    other => parse_err(line, other.to_string()),
                })?;
            }
            ("a", None) => return Err(parse_err(line, "arc before `p` line")),
            (other, _) => return Err(parse_err(line, format!("unknown line type `{other}`"))),
        }
        if toks.next().is_some() {
            return Err(parse_err(line, "trailing tokens"));
        }
    }
    let (g, declared) = graph.ok_or_else(|| parse_err(last_line.max(1), "missing `p` line"))?;
    if g.arc_count() != declared {
        return Err(parse_err(
            last_line.max(1),
            format!("header declares {declared} arcs but {} were listed", g.arc_count()),
        ));
    }
    Ok(g)
}

pub fn format_graph(g: &DirectedGraph) -> String {
    let mut out = format!("p {} {}\n", g.node_count(), g.arc_count());
    for (u, v) in g.arcs() {
        let _ = writeln!(out, "a {u} {v}");
    }
    out
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<DirectedGraph, GraphFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GraphFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_graph(&text)
}

pub fn write_graph(g: &DirectedGraph, path: impl AsRef<Path>) -> Result<(), GraphFileError> {
    let path = path.as_ref();
    fs::write(path, format_graph(g)).map_err(|source| GraphFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes an embedding as `pattern_node target_node` lines.
pub fn write_witness(witness: &[usize], path: impl AsRef<Path>) -> Result<(), GraphFileError> {
    let path = path.as_ref();
    let mut out = String::new();
    for (i, t) in witness.iter().enumerate() {
        let _ = writeln!(out, "{i} {t}");
    }
    fs::write(path, out).map_err(|source| GraphFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic() {
        let g = parse_graph("# demo\np 3 2\na 0 1\n\na 1 2\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.arcs().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        let e = parse_graph("p 3 0\n").unwrap();
        assert_eq!((e.node_count(), e.arc_count()), (3, 0));
    }

    #[test]
    fn writes_sorted() {
        let g = DirectedGraph::from_arcs(3, [(2, 0), (0, 2), (0, 1)]).unwrap();
        assert_eq!(format_graph(&g), "p 3 3\na 0 1\na 0 2\na 2 0\n");
    }

    fn line_of(text: &str) -> usize {
        match parse_graph(text) {
            Err(GraphFileError::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_lines() {
        assert_eq!(line_of("p 2 1\na 0 2\n"), 2);
        assert_eq!(line_of("p 2 2\na 0 1\na 0 1\n"), 3);
        assert_eq!(line_of("a 0 1\n"), 1);
        assert_eq!(line_of("p 2 2\na 0 1\n"), 2);
        assert_eq!(line_of("p 2\n"), 1);
        assert_eq!(line_of("p 2 0\nx 1\n"), 2);
        assert_eq!(line_of("p 2 1\na 1 1\n"), 2);
        assert_eq!(line_of("p x 0\n"), 1);
        assert_eq!(line_of(""), 1);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let g = DirectedGraph::from_arcs(4, [(0, 1), (3, 2), (1, 0)]).unwrap();
        write_graph(&g, &path).unwrap();
        assert_eq!(read_graph(&path).unwrap(), g);
        assert!(matches!(
            read_graph(dir.path().join("missing")),
            Err(GraphFileError::Io { .. })
        ));
    }
}
