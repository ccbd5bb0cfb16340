use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Square complex matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, C::new(1.0, 0.0))))
    }

    /// Builds from `(row, col, value)` entries; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(dim: usize, entries: impl IntoIterator<Item = (usize, usize, C)>) -> Self {
        let mut map: BTreeMap<(usize, usize), C> = BTreeMap::new();
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            *map.entry((r, c)).or_default() += v;
        }
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(map.len());
        let mut vals = Vec::with_capacity(map.len());
        for ((r, c), v) in map {
            if v == C::new(0.0, 0.0) {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn from_dense(m: &DMatrix<C>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        Self::from_triplets(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j, m[(i, j)]))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        self.row(r)
            .find(|&(col, _)| col == c)
            .map_or(C::new(0.0, 0.0), |(_, v)| v)
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut entries = Vec::new();
        for (r, k, a) in self.triplets() {
            for (c, b) in other.row(k) {
                entries.push((r, c, a * b));
            }
        }
        Self::from_triplets(self.dim, entries)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).max_abs() <= tol
    }

    /// `out = self * x`.
    pub fn apply(&self, x: &[C], out: &mut [C]) {
        debug_assert_eq!(x.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn apply_vec(&self, x: &[C]) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.dim];
        self.apply(x, &mut out);
        out
    }

    /// `out = self * m` for a dense row-major `dim x dim` matrix `m`.
    pub fn apply_dense(&self, m: &[C], out: &mut [C]) {
        let n = self.dim;
        debug_assert_eq!(m.len(), n * n);
        for r in 0..n {
            let orow = &mut out[r * n..(r + 1) * n];
            orow.fill(C::new(0.0, 0.0));
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.vals[k];
                let mrow = &m[self.cols[k] * n..(self.cols[k] + 1) * n];
                for (o, &x) in orow.iter_mut().zip(mrow) {
                    *o += v * x;
                }
            }
        }
    }

    /// `<x| self |y>`.
    pub fn expectation(&self, x: &[C], y: &[C]) -> C {
        (0..self.dim)
            .map(|r| {
                let row: C = self.row(r).map(|(c, v)| v * y[c]).sum();
                x[r].conj() * row
            })
            .sum()
    }

    /// Plain-text form: a `# operator dim=N nnz=K` header then one
    /// `row col re im` line per stored entry, row-major.
    pub fn to_text(&self) -> String {
        let mut s = format!("# operator dim={} nnz={}\n", self.dim, self.nnz());
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{r} {c} {:e} {:e}", v.re, v.im);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty operator text".into()))?;
        let dim = header_field(header, "operator", "dim")?;
        let nnz = header_field(header, "operator", "nnz")?;
        let mut entries = Vec::with_capacity(nnz);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad operator line: {line:?}")));
            }
            let r: usize = parse(f[0])?;
            let c: usize = parse(f[1])?;
            if r >= dim || c >= dim {
                return Err(Error::Parse(format!("entry ({r}, {c}) outside dimension {dim}")));
            }
            entries.push((r, c, C::new(parse(f[2])?, parse(f[3])?)));
        }
        if entries.len() != nnz {
            return Err(Error::Parse(format!("expected {nnz} entries, found {}", entries.len())));
        }
        Ok(Self::from_triplets(dim, entries))
    }
}

pub(crate) fn header_field(header: &str, kind: &str, key: &str) -> Result<usize> {
    let mut words = header.trim_start_matches('#').split_whitespace();
    if words.next() != Some(kind) {
        return Err(Error::Parse(format!("expected a `# {kind}` header, got {header:?}")));
    }
    words
        .find_map(|w| w.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Parse(format!("header lacks `{key}=`")))
        .and_then(parse)
}

pub(crate) fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("cannot parse {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let op = Operator::from_triplets(2, [(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0)), (1, 0, c(0.0, 2.0))]);
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(1, 0), c(0.0, 2.0));
        assert_eq!(op.get(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn products_match_dense() {
        let a = Operator::from_triplets(3, [(0, 1, c(1.0, 2.0)), (2, 0, c(0.5, 0.0)), (1, 1, c(0.0, -1.0))]);
        let b = Operator::from_triplets(3, [(1, 2, c(3.0, 0.0)), (0, 0, c(1.0, 1.0)), (2, 2, c(2.0, 0.0))]);
        let dense = a.to_dense() * b.to_dense();
        assert!((a.matmul(&b).to_dense() - dense).norm() < 1e-14);
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let y = a.apply_vec(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_vec(x);
        for i in 0..3 {
            assert!((y[i] - yd[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn apply_dense_matches_matmul() {
        let a = Operator::from_triplets(2, [(0, 1, c(1.0, 2.0)), (1, 0, c(0.5, 0.0))]);
        let m = [c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
        let mut out = [c(0.0, 0.0); 4];
        a.apply_dense(&m, &mut out);
        let expect = a.to_dense() * DMatrix::from_row_slice(2, 2, &m);
        for i in 0..2 {
            for j in 0..2 {
                assert!((out[i * 2 + j] - expect[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn text_rejects_garbage() {
        assert!(Operator::from_text("").is_err());
        assert!(Operator::from_text("# state dim=2\n").is_err());
        assert!(Operator::from_text("# operator dim=2 nnz=1\n5 0 1 0\n").is_err());
        assert!(Operator::from_text("# operator dim=2 nnz=2\n0 0 1 0\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip(entries in proptest::collection::vec((0usize..5, 0usize..5, -1e3f64..1e3, -1e3f64..1e3), 0..20)) {
            let op = Operator::from_triplets(5, entries.into_iter().map(|(r, c, re, im)| (r, c, C::new(re, im))));
            let back = Operator::from_text(&op.to_text()).unwrap();
            prop_assert_eq!(op, back);
        }
    }
}
