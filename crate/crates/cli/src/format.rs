//! Flat-file formats: `.bg` graphs, labelling files, piece-size files, and
//! JSON artifacts. Every parser reports the 1-based line of the first problem.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use bipembed_core::{BipartiteGraph, VertexId};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

/// Non-empty content lines with comments stripped, as `(line number, text)`.
fn content_lines(text: &str) -> Result<Vec<(usize, &str)>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        if raw.contains('\r') {
            return err(i + 1, "CR character found; files must use LF line endings");
        }
        let body = raw.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            out.push((i + 1, body));
        }
    }
    Ok(out)
}

fn parse_usize(line: usize, field: &str, what: &str) -> Result<usize, ParseError> {
    field.parse().or_else(|_| {
        err(
            line,
            format!("{what} `{field}` is not a non-negative integer"),
        )
    })
}

fn last_line(text: &str) -> usize {
    text.split('\n').count()
}

/// `bipartite <nA> <nB> <m>` followed by `m` lines `<a> <b>`, edges sorted.
pub fn write_graph(g: &BipartiteGraph) -> String {
    let mut s = format!(
        "bipartite {} {} {}\n",
        g.size_a(),
        g.size_b(),
        g.edge_count()
    );
    for (a, b) in g.edges() {
        let _ = writeln!(s, "{a} {b}");
    }
    s
}

pub fn parse_graph(text: &str) -> Result<BipartiteGraph, ParseError> {
    let lines = content_lines(text)?;
    let Some(&(hl, header)) = lines.first() else {
        return err(1, "missing `bipartite <nA> <nB> <m>` header");
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "bipartite" {
        return err(hl, "expected header `bipartite <nA> <nB> <m>`");
    }
    let n_a = parse_usize(hl, fields[1], "nA")?;
    let n_b = parse_usize(hl, fields[2], "nB")?;
    let m = parse_usize(hl, fields[3], "m")?;
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    for &(ln, body) in &lines[1..] {
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 2 {
            return err(ln, "expected an edge `<a> <b>`");
        }
        let (a, b) = (
            parse_usize(ln, f[0], "A-index")?,
            parse_usize(ln, f[1], "B-index")?,
        );
        if a >= n_a || b >= n_b {
            return err(
                ln,
                format!("edge ({a}, {b}) out of range for {n_a}+{n_b} vertices"),
            );
        }
        if !seen.insert((a, b)) {
            return err(ln, format!("duplicate edge ({a}, {b})"));
        }
        if edges.len() == m {
            return err(ln, format!("more than the declared {m} edges"));
        }
        edges.push((a, b));
    }
    if edges.len() != m {
        return err(
            last_line(text),
            format!("declared {m} edges but found {}", edges.len()),
        );
    }
    BipartiteGraph::new(n_a, n_b, &edges).or_else(|e| err(hl, e.to_string()))
}

const LABELLING_HEADER: &str =
    "# labelling: line p holds the global id of the vertex at position p;\n\
# A-vertex i has id 2i and B-vertex j has id 2j+1.\n";

pub fn write_labelling(order: &[VertexId]) -> String {
    let mut s = String::from(LABELLING_HEADER);
    for v in order {
        let _ = writeln!(s, "{}", v.global());
    }
    s
}

/// Parses a labelling; duplicate ids are rejected here, the permutation
/// property against a particular graph is checked by the consumer.
pub fn parse_labelling(text: &str) -> Result<Vec<VertexId>, ParseError> {
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    for (ln, body) in content_lines(text)? {
        let id = parse_usize(ln, body, "global id")?;
        if !seen.insert(id) {
            return err(ln, format!("global id {id} repeated"));
        }
        order.push(VertexId::from_global(id));
    }
    Ok(order)
}

/// One piece per line: `<|X ∩ W_i|> <|Y ∩ W_i|>`.
pub fn write_pieces(x: &[usize], y: &[usize]) -> String {
    let mut s = String::from("# pieces: one line per piece, `<A-count> <B-count>`\n");
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, "{a} {b}");
    }
    s
}

pub fn parse_pieces(text: &str) -> Result<(Vec<usize>, Vec<usize>), ParseError> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (ln, body) in content_lines(text)? {
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 2 {
            return err(ln, "expected `<A-count> <B-count>`");
        }
        x.push(parse_usize(ln, f[0], "A-count")?);
        y.push(parse_usize(ln, f[1], "B-count")?);
    }
    if x.is_empty() {
        return err(1, "no pieces");
    }
    Ok((x, y))
}

/// Cluster sizes either as `<size>x<count>` or a comma-separated list.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("`{spec}` is neither `<size>x<count>` nor a comma-separated list");
    if let Some((size, count)) = spec.split_once('x') {
        let size: usize = size.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        return Ok(vec![size; count]);
    }
    spec.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize");
    s.push('\n');
    s
}

/// Parses JSON; syntax and shape errors carry the offending line.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError {
        line: e.line(),
        message: e.to_string(),
    })
}

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
}

pub fn read_file(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), FileError> {
    std::fs::write(path, contents).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads and parses a file, tagging parse errors with the path.
pub fn load<T>(
    path: &Path,
    parse: impl FnOnce(&str) -> Result<T, ParseError>,
) -> Result<T, FileError> {
    let text = read_file(path)?;
    parse(&text).map_err(|source| FileError::Parse {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_round_trip_and_comments() {
        let g = BipartiteGraph::new(3, 2, &[(0, 1), (2, 0), (1, 1)]).unwrap();
        let text = write_graph(&g);
        assert_eq!(text, "bipartite 3 2 3\n0 1\n1 1\n2 0\n");
        assert_eq!(parse_graph(&text).unwrap(), g);
        let commented = "# host\nbipartite 3 2 3  # header\n\n0 1\n1 1 # edge\n2 0\n";
        assert_eq!(parse_graph(commented).unwrap(), g);
    }

    #[test]
    fn graph_errors_name_the_line() {
        let dup = "bipartite 2 2 2\n0 0\n0 0\n";
        assert_eq!(parse_graph(dup).unwrap_err().line, 3);
        let range = "bipartite 2 2 1\n# c\n0 5\n";
        assert_eq!(parse_graph(range).unwrap_err().line, 3);
        let short = "bipartite 2 2 2\n0 0\n";
        assert!(parse_graph(short)
            .unwrap_err()
            .message
            .contains("declared 2"));
        assert_eq!(parse_graph("bipartite 2 2 1\r\n0 0\n").unwrap_err().line, 1);
        assert_eq!(parse_graph("graph 2 2 0\n").unwrap_err().line, 1);
        assert_eq!(parse_graph("bipartite 2 2 1\n0 x\n").unwrap_err().line, 2);
    }

    #[test]
    fn labelling_and_pieces() {
        let order = vec![
            VertexId::a(0),
            VertexId::b(0),
            VertexId::b(1),
            VertexId::a(1),
        ];
        let text = write_labelling(&order);
        assert!(text.starts_with('#'));
        assert_eq!(parse_labelling(&text).unwrap(), order);
        assert_eq!(parse_labelling("0\n1\n0\n").unwrap_err().line, 3);
        let text = write_pieces(&[3, 4], &[4, 3]);
        assert_eq!(parse_pieces(&text).unwrap(), (vec![3, 4], vec![4, 3]));
        assert_eq!(parse_pieces("1 2\n3\n").unwrap_err().line, 2);
        assert_eq!(parse_sizes("1000x8").unwrap(), vec![1000; 8]);
        assert_eq!(parse_sizes("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_sizes("ax2").is_err());
    }

    #[test]
    fn json_errors_carry_lines() {
        let e = from_json::<Vec<usize>>("[\n1,\n\"x\"\n]").unwrap_err();
        assert_eq!(e.line, 3);
    }
}
