//! Dense user-embedding matrix and its text/binary file formats.
//!
//! Text: a header line `n_rows dim`, then `external_id v_1 ... v_dim` per
//! row. Binary: little-endian `u64 n_rows`, `u64 dim`, then per row a `u32`
//! id byte length, the UTF-8 id, and `dim` `f32` values.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, UserTable};

/// Value of every entry of the vector given to users without a network.
pub const SENTINEL_VALUE: f64 = -1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(ids: Vec<String>, dim: usize) -> Self {
        let n = ids.len();
        EmbeddingMatrix {
            ids,
            dim,
            values: vec![0.0; n * dim],
        }
    }

    pub fn from_values(ids: Vec<String>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * dim,
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding entry {bad}")));
        }
        Ok(EmbeddingMatrix { ids, dim, values })
    }

    /// Ids `0..n` as strings; handy when no user table is involved.
    pub fn index_ids(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sentinel(&self) -> Vec<f64> {
        vec![SENTINEL_VALUE; self.dim]
    }

    pub fn set_sentinel(&mut self, i: usize) {
        self.row_mut(i).fill(SENTINEL_VALUE);
    }

    pub fn is_sentinel_row(&self, i: usize) -> bool {
        self.row(i).iter().all(|&v| v == SENTINEL_VALUE)
    }

    /// Replaces the rows of users with no edges in `graph` and of users
    /// flagged missing by the sentinel vector.
    pub fn mask_unobserved(&mut self, graph: &DirectedGraph, users: &UserTable) {
        for i in 0..self.n_rows() {
            if users.is_missing(i) || graph.degree(i) == 0 {
                self.set_sentinel(i);
            }
        }
    }

    /// Reorders rows to follow `users`. Users absent from the file must be
    /// flagged missing and receive the sentinel row.
    pub fn align_to(&self, users: &UserTable) -> Result<EmbeddingMatrix> {
        let lookup: HashMap<&str, usize> =
            self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut out = EmbeddingMatrix::zeros(users.ids().to_vec(), self.dim);
        for u in 0..users.len() {
            match lookup.get(users.external_id(u)) {
                Some(&row) => out.row_mut(u).copy_from_slice(self.row(row)),
                None if users.is_missing(u) => out.set_sentinel(u),
                None => return Err(Error::UnknownUser(users.external_id(u).to_string())),
            }
        }
        Ok(out)
    }

    /// Rows selected by `mask`, as a row-major `(n, dim)` buffer.
    pub fn select_rows(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect()
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{} {}", self.n_rows(), self.dim)?;
        for (i, id) in self.ids.iter().enumerate() {
            write!(w, "{id}")?;
            for v in self.row(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text(path: &Path) -> Result<EmbeddingMatrix> {
        let name = path.display().to_string();
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(&name, 1, "missing header"))??;
        let mut it = header.split_whitespace().map(str::parse::<usize>);
        let (n, dim) = match (it.next(), it.next(), it.next()) {
            (Some(Ok(n)), Some(Ok(d)), None) => (n, d),
            _ => return Err(Error::parse(&name, 1, "header must be `n_rows dim`")),
        };
        let mut ids = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n * dim);
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = k + 2;
            let mut fields = line.split_whitespace();
            let id = fields.next().unwrap();
            let row: Vec<f64> = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(&name, lineno, "bad number"))?;
            if row.len() != dim {
                return Err(Error::parse(
                    &name,
                    lineno,
                    format!("expected {dim} values, got {}", row.len()),
                ));
            }
            ids.push(id.to_string());
            values.extend(row);
        }
        if ids.len() != n {
            return Err(Error::parse(&name, 1, format!("header says {n} rows, found {}", ids.len())));
        }
        EmbeddingMatrix::from_values(ids, dim, values)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&(self.n_rows() as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        for (i, id) in self.ids.iter().enumerate() {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            for &v in self.row(i) {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<EmbeddingMatrix> {
        let mut r = BufReader::new(File::open(path)?);
        let mut b8 = [0u8; 8];
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let dim = u64::from_le_bytes(b8) as usize;
        let mut ids = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n * dim);
        for _ in 0..n {
            r.read_exact(&mut b4)?;
            let mut id = vec![0u8; u32::from_le_bytes(b4) as usize];
            r.read_exact(&mut id)?;
            ids.push(String::from_utf8(id).map_err(|e| Error::invalid(e.to_string()))?);
            for _ in 0..dim {
                r.read_exact(&mut b4)?;
                values.push(f32::from_le_bytes(b4) as f64);
            }
        }
        EmbeddingMatrix::from_values(ids, dim, values)
    }

    /// Chooses the format from the extension: `.bin` is binary, anything
    /// else text.
    pub fn write(&self, path: &Path) -> Result<()> {
        if is_binary(path) {
            self.write_binary(path)
        } else {
            self.write_text(path)
        }
    }

    pub fn read(path: &Path) -> Result<EmbeddingMatrix> {
        if is_binary(path) {
            Self::read_binary(path)
        } else {
            Self::read_text(path)
        }
    }
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip_is_exact(vals in proptest::collection::vec(-1e6f64..1e6, 6)) {
            let m = EmbeddingMatrix::from_values(vec!["u1".into(), "u2".into()], 3, vals).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("e.txt");
            m.write(&p).unwrap();
            prop_assert_eq!(EmbeddingMatrix::read(&p).unwrap(), m);
        }

        #[test]
        fn binary_round_trip_is_f32_exact(vals in proptest::collection::vec(-1e3f32..1e3, 6)) {
            let vals: Vec<f64> = vals.into_iter().map(f64::from).collect();
            let m = EmbeddingMatrix::from_values(vec!["a".into(), "b".into()], 3, vals).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("e.bin");
            m.write(&p).unwrap();
            prop_assert_eq!(EmbeddingMatrix::read(&p).unwrap(), m);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(EmbeddingMatrix::from_values(vec!["a".into()], 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn row_count_mismatch_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        std::fs::write(&p, "2 2\na 1 2\n").unwrap();
        assert!(matches!(EmbeddingMatrix::read(&p), Err(Error::Parse { .. })));
        std::fs::write(&p, "1 2\na 1\n").unwrap();
        assert!(matches!(EmbeddingMatrix::read(&p), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn masking_and_alignment() {
        let mut users = UserTable::new();
        users.intern("a");
        users.intern("b");
        users.intern_missing("ghost");
        let g = DirectedGraph::from_edges(3, [(0, 1)]);
        let mut m = EmbeddingMatrix::from_values(users.ids().to_vec(), 2, vec![0.5; 6]).unwrap();
        m.mask_unobserved(&g, &users);
        assert!(!m.is_sentinel_row(0));
        assert!(m.is_sentinel_row(2));

        let partial = EmbeddingMatrix::from_values(vec!["b".into(), "a".into()], 1, vec![2.0, 1.0]).unwrap();
        let aligned = partial.align_to(&users).unwrap();
        assert_eq!(aligned.values(), &[1.0, 2.0, -1.0]);
    }
}
