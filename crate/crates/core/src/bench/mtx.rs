//! Matrix Market coordinate reader.

use std::fs;
use std::path::Path;

use super::graph::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Pattern,
    Real,
    Integer,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<Graph> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

/// Reads a square coordinate matrix as an undirected graph. Entries are
/// 1-based; explicit zeros, self loops and repeated edges are dropped and
/// the result is symmetric whatever the header says.
pub fn parse_matrix_market(text: &str) -> Result<Graph> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (no, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(no, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'"));
    }
    if words[2] != "coordinate" {
        return Err(parse_err(no, format!("unsupported format '{}'", words[2])));
    }
    let field = match words[3].as_str() {
        "pattern" => Field::Pattern,
        "real" => Field::Real,
        "integer" => Field::Integer,
        other => return Err(parse_err(no, format!("unsupported field '{other}'"))),
    };
    match words[4].as_str() {
        "general" | "symmetric" => {}
        other => return Err(parse_err(no, format!("unsupported symmetry '{other}'"))),
    }

    let mut data = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (no, size) = data.next().ok_or_else(|| parse_err(no, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(no, format!("bad size line: {e}")))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(parse_err(no, "size line needs rows, columns and entry count"));
    };
    if rows != cols {
        return Err(parse_err(no, format!("matrix is {rows} x {cols}, not square")));
    }

    let mut edges = Vec::with_capacity(nnz);
    let mut seen = 0;
    for (no, line) in data {
        seen += 1;
        if seen > nnz {
            return Err(parse_err(no, format!("more than the declared {nnz} entries")));
        }
        let mut parts = line.split_whitespace();
        let mut index = |what: &str| -> Result<usize> {
            let raw = parts.next().ok_or_else(|| parse_err(no, format!("missing {what} index")))?;
            let i: usize = raw.parse().map_err(|_| parse_err(no, format!("bad {what} index '{raw}'")))?;
            if i == 0 || i > rows {
                return Err(parse_err(no, format!("{what} index {i} outside 1..={rows}")));
            }
            Ok(i - 1)
        };
        let (i, j) = (index("row")?, index("column")?);
        let keep = match field {
            Field::Pattern => true,
            Field::Real | Field::Integer => {
                let raw = parts.next().ok_or_else(|| parse_err(no, "missing value"))?;
                let v: f64 = raw.parse().map_err(|_| parse_err(no, format!("bad value '{raw}'")))?;
                v != 0.0
            }
        };
        if parts.next().is_some() {
            return Err(parse_err(no, "trailing fields"));
        }
        if keep {
            edges.push((i, j));
        }
    }
    if seen < nnz {
        return Err(parse_err(text.lines().count(), format!("{seen} entries, header declares {nnz}")));
    }
    Graph::from_edges(rows, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_file() {
        let g = parse_matrix_market(
            "%%MatrixMarket matrix coordinate pattern symmetric\n% c\n3 3 3\n2 1\n3 2\n3 1\n",
        )
        .unwrap();
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn symmetric_and_general_forms_agree() {
        let sym = "%%MatrixMarket matrix coordinate real symmetric\n4 4 3\n2 1 1.0\n3 2 2.5\n4 4 1\n";
        let gen = "%%MatrixMarket matrix coordinate integer general\n4 4 5\n1 2 1\n2 1 1\n2 3 7\n3 2 7\n1 4 0\n";
        assert_eq!(parse_matrix_market(sym).unwrap(), parse_matrix_market(gen).unwrap());
    }

    #[test]
    fn malformed_inputs() {
        let bad = [
            "",
            "%%MatrixMarket matrix array real general\n2 2\n",
            "%%MatrixMarket matrix coordinate complex general\n2 2 0\n",
            "%%MatrixMarket matrix coordinate pattern general\n2 3 0\n",
            "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n0 1\n",
            "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 3\n",
            "%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2\n",
        ];
        for text in bad {
            assert!(matches!(parse_matrix_market(text), Err(Error::Parse { .. })), "{text:?}");
        }
    }
}
