//! Plain-text file formats.
//!
//! * Graphs: first line `n m`, then `m` lines `u v` with `0 ≤ u < v < n`.
//! * Walk traces: first line `start steps`, then the `steps + 1` vertices of the
//!   sequence, one per line. Paths ending in `.gz` are gzip-compressed.
//! * Trees: first line `k+1`, then `k` lines `j parent(j)` for `j = 1…k`.
//! * Homomorphisms: one line `j image(j)` per tree vertex.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::{RootedTree, TreeHomomorphism};
use crate::walk::{EdgeSubgraph, WalkTrace};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with their 1-based line numbers.
fn lines<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String)>> {
    r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        Ok(s) => Some(Ok((i + 1, s))),
        Err(e) => Some(Err(e.into())),
    })
}

fn fields<const K: usize>(line: usize, s: &str) -> Result<[usize; K]> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != K {
        return Err(parse_err(
            line,
            format!("expected {K} fields, found {}", parts.len()),
        ));
    }
    let mut out = [0usize; K];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse()
            .map_err(|_| parse_err(line, format!("`{p}` is not a non-negative integer")))?;
    }
    Ok(out)
}

fn write_edges<W: Write>(mut w: W, n: usize, edges: &[(usize, usize)]) -> Result<()> {
    writeln!(w, "{} {}", n, edges.len())?;
    for (u, v) in edges {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_graph<W: Write>(w: W, g: &Graph) -> Result<()> {
    let edges: Vec<_> = g.edges().collect();
    write_edges(w, g.n(), &edges)
}

/// Writes an edge subgraph in the graph format, on the parent's vertex set.
pub fn write_subgraph<W: Write>(w: W, sub: &EdgeSubgraph<'_>) -> Result<()> {
    let edges: Vec<_> = sub.edges().collect();
    write_edges(w, sub.parent().n(), &edges)
}

/// Reads the graph format. Rejects `u ≥ v`, out-of-range ids, duplicate
/// edges and a count mismatch, reporting the offending line.
pub fn read_graph<R: BufRead>(r: R) -> Result<Graph> {
    let mut it = lines(r);
    let (hl, header) = it.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let [n, m] = fields::<2>(hl, &header)?;
    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    let mut last = hl;
    for item in it {
        let (ln, s) = item?;
        last = ln;
        let [u, v] = fields::<2>(ln, &s)?;
        if u >= v {
            return Err(parse_err(ln, format!("edge `{u} {v}` must satisfy u < v")));
        }
        if v >= n {
            return Err(parse_err(
                ln,
                format!("vertex {v} out of range for n = {n}"),
            ));
        }
        if !seen.insert((u, v)) {
            return Err(parse_err(ln, format!("duplicate edge `{u} {v}`")));
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(parse_err(
            last,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    Graph::from_edges(n, edges)
}

pub fn write_trace<W: Write>(mut w: W, trace: &WalkTrace) -> Result<()> {
    writeln!(w, "{} {}", trace.start, trace.steps())?;
    for v in &trace.sequence {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace and validates it against `g`.
pub fn read_trace<R: BufRead>(r: R, g: &Graph) -> Result<WalkTrace> {
    let mut it = lines(r);
    let (hl, header) = it.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let [start, steps] = fields::<2>(hl, &header)?;
    let mut seq = Vec::with_capacity(steps + 1);
    for item in it {
        let (ln, s) = item?;
        let [v] = fields::<1>(ln, &s)?;
        if v >= g.n() {
            return Err(parse_err(ln, format!("vertex {v} out of range")));
        }
        seq.push(v as u32);
    }
    if seq.len() != steps + 1 {
        return Err(parse_err(
            hl,
            format!("expected {} vertices, found {}", steps + 1, seq.len()),
        ));
    }
    if seq[0] as usize != start {
        return Err(parse_err(
            hl,
            "sequence does not begin at the declared start",
        ));
    }
    WalkTrace::from_sequence(g, seq)
}

pub fn write_tree<W: Write>(mut w: W, t: &RootedTree) -> Result<()> {
    writeln!(w, "{}", t.size())?;
    for j in 1..t.size() {
        writeln!(w, "{} {}", j, t.parent(j).unwrap())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tree<R: BufRead>(r: R) -> Result<RootedTree> {
    let mut it = lines(r);
    let (hl, header) = it.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let [size] = fields::<1>(hl, &header)?;
    if size == 0 {
        return Err(parse_err(hl, "tree size must be positive"));
    }
    let mut parents = vec![0usize; size];
    let mut expected = 1;
    for item in it {
        let (ln, s) = item?;
        let [j, p] = fields::<2>(ln, &s)?;
        if j != expected || j >= size {
            return Err(parse_err(
                ln,
                format!("expected vertex {expected}, found {j}"),
            ));
        }
        if p >= j {
            return Err(parse_err(
                ln,
                format!("parent {p} of {j} does not precede it"),
            ));
        }
        parents[j] = p;
        expected += 1;
    }
    if expected != size {
        return Err(parse_err(
            hl,
            format!("expected {} parent lines, found {}", size - 1, expected - 1),
        ));
    }
    RootedTree::from_parents(&parents)
}

pub fn write_homomorphism<W: Write>(mut w: W, h: &TreeHomomorphism) -> Result<()> {
    for (j, x) in h.image.iter().enumerate() {
        writeln!(w, "{j} {x}")?;
    }
    w.flush()?;
    Ok(())
}

/// Opens `path` for writing, gzip-compressing when it ends in `.gz`.
pub fn create(path: &Path) -> Result<Box<dyn Write>> {
    let f = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzEncoder::new(f, Compression::default())))
    } else {
        Ok(Box::new(f))
    }
}

/// Opens `path` for reading, decompressing when it ends in `.gz`.
pub fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let f = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let dec: Box<dyn Read> = Box::new(GzDecoder::new(f));
        Ok(Box::new(BufReader::new(dec)))
    } else {
        Ok(Box::new(BufReader::new(f)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_gnp;
    use crate::tree::gen_random_tree;
    use crate::walk::{run_walk, ListModel};

    #[test]
    fn graph_text_round_trip() {
        let g = gen_gnp(30, 0.3, 1).unwrap();
        let mut buf = Vec::new();
        write_graph(&mut buf, &g).unwrap();
        assert_eq!(read_graph(&buf[..]).unwrap(), g);
    }

    #[test]
    fn graph_loader_reports_lines() {
        let bad = "3 2\n0 1\n2 1\n";
        match read_graph(bad.as_bytes()) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_graph("3 1\n0 5\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_graph("3 2\n0 1\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            read_graph("3 2\n0 1\n0 1\n".as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_graph("3 1\n0 x\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn gz_trace_round_trip() {
        let g = gen_gnp(40, 0.4, 2).unwrap();
        let t = run_walk(&g, &mut ListModel::new(3, 40), 0, 300).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for name in ["w.txt", "w.txt.gz"] {
            let path = dir.path().join(name);
            write_trace(create(&path).unwrap(), &t).unwrap();
            assert_eq!(read_trace(open(&path).unwrap(), &g).unwrap(), t);
        }
    }

    #[test]
    fn tree_round_trip_and_errors() {
        let t = gen_random_tree(25, 3, 5).unwrap();
        let mut buf = Vec::new();
        write_tree(&mut buf, &t).unwrap();
        assert_eq!(read_tree(&buf[..]).unwrap(), t);
        assert!(matches!(
            read_tree("3\n1 0\n2 2\n".as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(read_tree("3\n1 0\n".as_bytes()).is_err());
    }

    #[test]
    fn homomorphism_lines() {
        let h = TreeHomomorphism {
            image: vec![4, 2, 4],
        };
        let mut buf = Vec::new();
        write_homomorphism(&mut buf, &h).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 4\n1 2\n2 4\n");
    }
}
