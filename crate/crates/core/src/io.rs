//! Text formats.
//!
//! `BIREG n m s t` followed by `u r sign` lines (sign written `+1` / `-1`),
//! sorted by `(u, r)`. `BIGRAPH n m` followed by `u r` lines.

use std::fmt::Write as _;
use std::path::Path;

use crate::ensemble::{BipartiteGraph, SignedBiregularMatrix, SignedMatrix};
use crate::error::{Error, Result};

pub fn write_bireg(a: &SignedBiregularMatrix) -> String {
    let g = a.graph();
    let mut out = String::with_capacity(16 * g.n_edges() + 32);
    let _ = writeln!(out, "BIREG {} {} {} {}", g.n_left(), g.n_right(), a.s(), a.t());
    for (e, &(u, r)) in g.edges().iter().enumerate() {
        let sign = if a.sign(e) > 0 { "+1" } else { "-1" };
        let _ = writeln!(out, "{u} {r} {sign}");
    }
    out
}

pub fn write_bigraph(g: &BipartiteGraph) -> String {
    let mut out = String::with_capacity(12 * g.n_edges() + 32);
    let _ = writeln!(out, "BIGRAPH {} {}", g.n_left(), g.n_right());
    for &(u, r) in g.edges() {
        let _ = writeln!(out, "{u} {r}");
    }
    out
}

fn fmt_err(line: usize, msg: impl Into<String>) -> Error {
    Error::FileFormat { line, msg: msg.into() }
}

fn parse_num(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| fmt_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| fmt_err(line, format!("bad {what} `{tok}`")))
}

/// Non-empty lines that are not `#` comments, with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_bireg(text: &str) -> Result<SignedBiregularMatrix> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| fmt_err(1, "empty file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("BIREG") {
        return Err(fmt_err(hl, "expected `BIREG n m s t` header"));
    }
    let n = parse_num(toks.next(), hl, "n")?;
    let m = parse_num(toks.next(), hl, "m")?;
    let s = parse_num(toks.next(), hl, "s")?;
    let t = parse_num(toks.next(), hl, "t")?;
    if toks.next().is_some() {
        return Err(fmt_err(hl, "trailing tokens in header"));
    }
    let mut entries: Vec<((usize, usize), i8)> = Vec::with_capacity(n * t);
    for (ln, l) in lines {
        let mut toks = l.split_whitespace();
        let u = parse_num(toks.next(), ln, "left index")?;
        let r = parse_num(toks.next(), ln, "right index")?;
        let sign = match toks.next() {
            Some("+1") | Some("1") => 1,
            Some("-1") => -1,
            Some(other) => return Err(fmt_err(ln, format!("bad sign `{other}`"))),
            None => return Err(fmt_err(ln, "missing sign")),
        };
        if toks.next().is_some() {
            return Err(fmt_err(ln, "trailing tokens"));
        }
        if u >= n || r >= m {
            return Err(fmt_err(ln, format!("edge ({u}, {r}) out of range")));
        }
        if let Some(&(prev, _)) = entries.last() {
            if prev >= (u, r) {
                return Err(fmt_err(ln, "edges must be strictly sorted by (u, r)"));
            }
        }
        entries.push(((u, r), sign));
    }
    let (edges, signs): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
    let graph = BipartiteGraph::new(n, m, edges)?;
    SignedBiregularMatrix::new(SignedMatrix::new(graph, signs)?, s, t)
}

pub fn parse_bigraph(text: &str) -> Result<BipartiteGraph> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| fmt_err(1, "empty file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("BIGRAPH") {
        return Err(fmt_err(hl, "expected `BIGRAPH n m` header"));
    }
    let n = parse_num(toks.next(), hl, "n")?;
    let m = parse_num(toks.next(), hl, "m")?;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (ln, l) in lines {
        let mut toks = l.split_whitespace();
        let u = parse_num(toks.next(), ln, "left index")?;
        let r = parse_num(toks.next(), ln, "right index")?;
        if toks.next().is_some() {
            return Err(fmt_err(ln, "trailing tokens"));
        }
        if u >= n || r >= m {
            return Err(fmt_err(ln, format!("edge ({u}, {r}) out of range")));
        }
        if !seen.insert((u, r)) {
            return Err(fmt_err(ln, format!("repeated edge ({u}, {r})")));
        }
        edges.push((u, r));
    }
    BipartiteGraph::new(n, m, edges)
}

pub fn read_bireg(path: impl AsRef<Path>) -> Result<SignedBiregularMatrix> {
    parse_bireg(&std::fs::read_to_string(path)?)
}

pub fn read_bigraph(path: impl AsRef<Path>) -> Result<BipartiteGraph> {
    parse_bigraph(&std::fs::read_to_string(path)?)
}

pub fn save_bireg(a: &SignedBiregularMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_bireg(a))?;
    Ok(())
}

pub fn save_bigraph(g: &BipartiteGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_bigraph(g))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_biregular, EnsembleParams};

    #[test]
    fn bireg_round_trip_is_exact() {
        let a = sample_biregular(&EnsembleParams::new(16, 8, 6, 3, 7).unwrap()).unwrap();
        let text = write_bireg(&a);
        let b = parse_bireg(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(write_bireg(&b), text);
        assert!(text.starts_with("BIREG 16 8 6 3\n"));
    }

    #[test]
    fn bigraph_round_trip() {
        let g = BipartiteGraph::new(3, 2, vec![(0, 1), (2, 0), (1, 1)]).unwrap();
        let text = write_bigraph(&g);
        assert_eq!(text, "BIGRAPH 3 2\n0 1\n1 1\n2 0\n");
        assert_eq!(parse_bigraph(&text).unwrap(), g);
    }

    #[test]
    fn malformed_inputs_report_line() {
        let err = parse_bireg("BIREG 2 1 2 1\n0 0 +1\n1 0 x\n").unwrap_err();
        assert!(matches!(err, Error::FileFormat { line: 3, .. }));
        let err = parse_bireg("BIREG 2 1 2 1\n1 0 +1\n0 0 +1\n").unwrap_err();
        assert!(matches!(err, Error::FileFormat { line: 3, .. }));
        assert!(parse_bigraph("BIREG 1 1\n").is_err());
        assert!(parse_bigraph("BIGRAPH 1 1\n0 0\n0 0\n").is_err());
        // right degree wrong for the declared s
        assert!(matches!(
            parse_bireg("BIREG 2 1 1 1\n0 0 +1\n1 0 -1\n"),
            Err(Error::InvalidParams(_))
        ));
    }
}
