//! Plain-text matrix files.
//!
//! ```text
//! # comment
//! key value
//! matrix <name> <rows> <cols>
//! <row>,<col>,<value>
//! end
//! ```
//!
//! Only nonzero cells are listed. Values use the shortest representation that
//! round-trips exactly, so a reload reproduces the matrices bit for bit.

use std::fmt::Write as _;

use indexmap::IndexMap;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            if v != 0.0 {
                let _ = writeln!(out, "{r},{c},{v:?}");
            }
        }
    }
    out.push_str("end\n");
}

#[derive(Debug, Default)]
pub struct MatrixFile {
    pub fields: IndexMap<String, String>,
    pub matrices: IndexMap<String, DMatrix<f64>>,
}

impl MatrixFile {
    pub fn field(&self, key: &str) -> Result<&str> {
        self.fields
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("missing field `{key}`")))
    }

    pub fn take_matrix(&mut self, name: &str) -> Result<DMatrix<f64>> {
        self.matrices
            .shift_remove(name)
            .ok_or_else(|| Error::Parse(format!("missing matrix `{name}`")))
    }
}

pub fn parse(text: &str) -> Result<MatrixFile> {
    let mut file = MatrixFile::default();
    let mut current: Option<(String, DMatrix<f64>)> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| Error::Parse(format!("line {}: {msg}: `{line}`", lineno + 1));
        if let Some((name, m)) = current.as_mut() {
            if line == "end" {
                let (name, m) = current.take().expect("open matrix");
                file.matrices.insert(name, m);
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(err("expected row,col,value"));
            }
            let r: usize = f[0].parse().map_err(|_| err("bad row"))?;
            let c: usize = f[1].parse().map_err(|_| err("bad column"))?;
            let v: f64 = f[2].parse().map_err(|_| err("bad value"))?;
            if r >= m.nrows() || c >= m.ncols() {
                return Err(err(&format!("cell out of range for matrix {name}")));
            }
            m[(r, c)] = v;
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().expect("non-empty line");
        if key == "matrix" {
            let name = parts.next().ok_or_else(|| err("missing matrix name"))?;
            let rows: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("bad rows"))?;
            let cols: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("bad cols"))?;
            current = Some((name.to_string(), DMatrix::zeros(rows, cols)));
        } else {
            let value = parts.collect::<Vec<_>>().join(" ");
            file.fields.insert(key.to_string(), value);
        }
    }
    if let Some((name, _)) = current {
        return Err(Error::Parse(format!("matrix `{name}` is missing its `end` line")));
    }
    Ok(file)
}
