//! Matrix Market input/output for `J`, plain-text potentials, and the grid
//! geometry comment written by the generator.
//!
//! `J` is stored as `coordinate real symmetric` (lower triangle, 1-based).
//! Files in `general` layout are accepted when both triangles agree.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::GraphModel;

const GRID_TAG: &str = "gabp-orbit grid";

/// Shape of a generated grid model, carried as a comment in its file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGeometry {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
}

impl fmt::Display for GridGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{GRID_TAG} rows={} cols={} periodic={}",
            self.rows, self.cols, self.periodic
        )
    }
}

impl GridGeometry {
    /// Parses the body of a `% gabp-orbit grid ...` comment.
    fn from_comment(text: &str) -> Option<Self> {
        let rest = text.trim().strip_prefix(GRID_TAG)?;
        let (mut rows, mut cols, mut periodic) = (None, None, None);
        for kv in rest.split_whitespace() {
            match kv.split_once('=')? {
                ("rows", v) => rows = v.parse().ok(),
                ("cols", v) => cols = v.parse().ok(),
                ("periodic", v) => periodic = v.parse().ok(),
                _ => {}
            }
        }
        Some(Self {
            rows: rows?,
            cols: cols?,
            periodic: periodic?,
        })
    }
}

/// Parses `RxC`, e.g. `32x32`.
impl FromStr for GridGeometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid shape {s:?} is not ROWSxCOLS"));
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        Ok(Self {
            rows: r.trim().parse().map_err(|_| bad())?,
            cols: c.trim().parse().map_err(|_| bad())?,
            periodic: false,
        })
    }
}

/// Writes `J` (lower triangle) with an optional grid comment.
pub fn write_model<W: Write>(model: &GraphModel, grid: Option<GridGeometry>, mut out: W) -> io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    if let Some(g) = grid {
        writeln!(out, "% {g}")?;
    }
    let n = model.n();
    writeln!(out, "{n} {n} {}", n + model.num_edges())?;
    let mut entries: Vec<(usize, usize, f64)> = model
        .edges()
        .iter()
        .zip(model.off_diag())
        .map(|(&(i, j), &v)| (j, i, v))
        .chain(model.diag().iter().enumerate().map(|(i, &d)| (i, i, d)))
        .collect();
    entries.sort_by_key(|e| (e.0, e.1));
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    out.flush()
}

pub fn write_model_file(path: &Path, model: &GraphModel, grid: Option<GridGeometry>) -> Result<()> {
    write_model(model, grid, BufWriter::new(File::create(path)?))?;
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads `J` from Matrix Market, returning the grid geometry if the file
/// carries one.
pub fn read_model<R: BufRead>(input: R) -> Result<(GraphModel, Option<GridGeometry>)> {
    let mut lines = input.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(parse_err(1, "expected a '%%MatrixMarket matrix coordinate' header"));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field type {:?}", fields[3])));
    }
    let symmetric = match fields[4] {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut grid = None;
    let mut size: Option<(usize, usize)> = None;
    let mut diag: Vec<Option<f64>> = Vec::new();
    let mut off: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0;
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if let Some(comment) = t.strip_prefix('%') {
            grid = grid.or_else(|| GridGeometry::from_comment(comment.trim_start_matches('%')));
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let tok: Vec<&str> = t.split_whitespace().collect();
        let Some((n, nnz)) = size else {
            if tok.len() != 3 {
                return Err(parse_err(no, "expected 'rows cols entries'"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(no, format!("bad count {s:?}")));
            let (r, c, k) = (num(tok[0])?, num(tok[1])?, num(tok[2])?);
            if r != c {
                return Err(parse_err(no, format!("J must be square, got {r}x{c}")));
            }
            size = Some((r, k));
            diag = vec![None; r];
            continue;
        };
        if tok.len() != 3 {
            return Err(parse_err(no, "expected 'row col value'"));
        }
        let idx = |s: &str| match s.parse::<usize>() {
            Ok(v) if (1..=n).contains(&v) => Ok(v - 1),
            _ => Err(parse_err(no, format!("index {s:?} outside 1..={n}"))),
        };
        let (i, j) = (idx(tok[0])?, idx(tok[1])?);
        let v: f64 = tok[2]
            .parse()
            .map_err(|_| parse_err(no, format!("bad value {:?}", tok[2])))?;
        seen += 1;
        if seen > nnz {
            return Err(parse_err(no, format!("more than the declared {nnz} entries")));
        }
        if i == j {
            if diag[i].replace(v).is_some() {
                return Err(parse_err(no, format!("duplicate diagonal entry {}", i + 1)));
            }
        } else if symmetric && i < j {
            return Err(parse_err(no, "symmetric files store the lower triangle only"));
        } else if v != 0.0 {
            off.push((i, j, v));
        }
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(0, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(0, format!("declared {nnz} entries, found {seen}")));
    }
    let diag = diag
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| Error::InvalidModel(format!("missing diagonal entry {}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    if !symmetric {
        off = merge_general(off)?;
    }
    debug_assert_eq!(diag.len(), n);
    Ok((GraphModel::new(diag, off)?, grid))
}

/// Collapses both triangles of a general file, requiring symmetry.
fn merge_general(mut off: Vec<(usize, usize, f64)>) -> Result<Vec<(usize, usize, f64)>> {
    off.sort_by_key(|&(i, j, _)| (i.min(j), i.max(j), i > j));
    let mut out = Vec::with_capacity(off.len() / 2);
    let mut k = 0;
    while k < off.len() {
        let (i, j, v) = off[k];
        match off.get(k + 1) {
            Some(&(a, b, w)) if (a, b) == (j, i) => {
                if v != w {
                    return Err(Error::InvalidModel(format!(
                        "J is not symmetric at ({}, {}): {v} vs {w}",
                        i + 1,
                        j + 1
                    )));
                }
                out.push((i, j, v));
                k += 2;
            }
            _ => {
                return Err(Error::InvalidModel(format!(
                    "entry ({}, {}) has no symmetric partner",
                    i + 1,
                    j + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn read_model_file(path: &Path) -> Result<(GraphModel, Option<GridGeometry>)> {
    read_model(BufReader::new(File::open(path)?))
}

/// One value per line.
pub fn write_potential<W: Write>(h: &[f64], mut out: W) -> io::Result<()> {
    for v in h {
        writeln!(out, "{v:e}")?;
    }
    out.flush()
}

pub fn write_potential_file(path: &Path, h: &[f64]) -> Result<()> {
    write_potential(h, BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// Reads a potential vector, skipping blank lines and `%` or `#` comments.
pub fn read_potential<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut h = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        h.push(
            t.parse()
                .map_err(|_| parse_err(k + 1, format!("bad value {t:?}")))?,
        );
    }
    Ok(h)
}

pub fn read_potential_file(path: &Path) -> Result<Vec<f64>> {
    read_potential(BufReader::new(File::open(path)?))
}
