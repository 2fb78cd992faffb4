use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Edge, SniInstance};
use crate::error::{Error, Result};

/// Writes the instance; `meta` adds `key=value` tokens after the header fields.
pub fn write_instance<W: Write>(inst: &SniInstance, meta: &[(&str, &str)], mut out: W) -> Result<()> {
    write!(out, "SNI v1 k={} n={} deg={}", inst.k, inst.n_vertices(), inst.degree)?;
    for (key, value) in meta {
        write!(out, " {key}={value}")?;
    }
    writeln!(out)?;
    for a in &inst.constraints {
        for row in a {
            writeln!(out, "{}", join(row))?;
        }
    }
    for e in &inst.edges {
        writeln!(out, "{} {} {}", e.u, e.v, join(&e.theta))?;
    }
    out.flush()?;
    Ok(())
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn write_instance_file(inst: &SniInstance, meta: &[(&str, &str)], path: &Path) -> Result<()> {
    write_instance(inst, meta, BufWriter::new(File::create(path)?))
}

pub fn read_instance_file(path: &Path) -> Result<SniInstance> {
    read_instance(BufReader::new(File::open(path)?))
}

pub fn read_instance<R: Read>(input: R) -> Result<SniInstance> {
    let mut lines = BufReader::new(input).lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((no, Ok(l))) => Ok((no, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse { line: 0, field: 0, message: format!("unexpected end of file, expected {what}") }),
        }
    };
    let (_, header) = next("header")?;
    let tokens: Vec<&str> = header.split(' ').collect();
    if tokens.len() < 5 || tokens[0] != "SNI" || tokens[1] != "v1" {
        return Err(Error::Parse { line: 1, field: 1, message: "expected header `SNI v1 k=<int> n=<int> deg=<int>`".into() });
    }
    let field = |idx: usize, key: &str| -> Result<usize> {
        let bad = || Error::Parse { line: 1, field: idx + 1, message: format!("expected `{key}=<int>`") };
        let raw = tokens[idx].strip_prefix(key).and_then(|t| t.strip_prefix('=')).ok_or_else(bad)?;
        raw.parse().map_err(|_| bad())
    };
    let k = field(2, "k")?;
    let n = field(3, "n")?;
    let deg = field(4, "deg")?;
    if k == 0 {
        return Err(Error::Parse { line: 1, field: 3, message: "k must be positive".into() });
    }
    if (n * deg) % 2 != 0 {
        return Err(Error::Parse { line: 1, field: 5, message: "n * deg must be even".into() });
    }
    let mut constraints = Vec::with_capacity(n);
    for _ in 0..n {
        let mut a = Vec::with_capacity(k);
        for _ in 0..k {
            let (no, line) = next("constraint row")?;
            a.push(parse_floats(&line, no, 0, k)?);
        }
        constraints.push(a);
    }
    let mut edges = Vec::with_capacity(n * deg / 2);
    for _ in 0..n * deg / 2 {
        let (no, line) = next("edge line")?;
        let parts: Vec<&str> = line.split(' ').collect();
        if parts.len() != k + 2 {
            return Err(Error::Parse { line: no, field: parts.len().min(k + 2), message: format!("expected {} fields", k + 2) });
        }
        let endpoint = |i: usize| -> Result<usize> {
            let v: usize = parts[i].parse().map_err(|_| Error::Parse { line: no, field: i + 1, message: "expected a vertex index".into() })?;
            if v >= n {
                return Err(Error::Parse { line: no, field: i + 1, message: format!("vertex {v} out of range") });
            }
            Ok(v)
        };
        let (u, v) = (endpoint(0)?, endpoint(1)?);
        let theta = parse_floats(&parts[2..].join(" "), no, 2, k)?;
        let len = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        if (len - 1.0).abs() > super::UNIT_TOL {
            return Err(Error::Parse { line: no, field: 3, message: format!("theta has length {len}, expected a unit vector") });
        }
        edges.push(Edge { u, v, theta });
    }
    if let Some((no, line)) = lines.by_ref().find(|(_, l)| l.as_ref().map_or(true, |s| !s.is_empty())) {
        line?;
        return Err(Error::Parse { line: no, field: 1, message: "trailing content after the last edge".into() });
    }
    SniInstance::new(k, deg, constraints, edges)
}

fn parse_floats(line: &str, no: usize, offset: usize, k: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != k {
        return Err(Error::Parse { line: no, field: offset + parts.len().min(k), message: format!("expected {k} numbers") });
    }
    parts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse { line: no, field: offset + i + 1, message: format!("`{p}` is not a finite number") })
        })
        .collect()
}
