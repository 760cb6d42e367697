//! Symmetric sparse storage, banded Cholesky, Matrix Market export.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form.
///
/// Both triangles are stored. Operators built by this crate are assembled so
/// that `a[i][j]` and `a[j][i]` come out of the same floating-point
/// expression, so symmetry holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds from per-row maps; explicit zeros are dropped.
    pub fn from_rows(rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                debug_assert!(j < n);
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator { n, row_ptr, col_idx, values }
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows = vec![BTreeMap::new(); n];
        for (i, j, v) in triplets {
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        Self::from_rows(rows)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        Self::from_triplets(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j, a[i][j]))))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    /// `A + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        let mut rows: Vec<BTreeMap<usize, f64>> = (0..self.n).map(|i| self.row(i).collect()).collect();
        for (i, &di) in d.iter().enumerate() {
            if di != 0.0 {
                *rows[i].entry(i).or_insert(0.0) += di;
            }
        }
        Self::from_rows(rows)
    }

    /// Half bandwidth: `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    /// `max |a_ij - a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Gershgorin bound on the spectrum of `diag(w)⁻¹ A`.
    pub fn scaled_row_bound(&self, w: &[f64]) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>() / w[i]).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        a
    }

    /// Writes the lower triangle in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
            .collect();
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{} {} {}", self.n, self.n, lower.len())?;
        for (i, j, v) in lower {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }

    /// Reads a `coordinate real symmetric` Matrix Market stream.
    pub fn read_matrix_market<R: BufRead>(input: R) -> Result<Self> {
        let bad = |msg: &str| Error::config(format!("matrix market: {msg}"));
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))??;
        if !header.to_ascii_lowercase().starts_with("%%matrixmarket matrix coordinate real symmetric") {
            return Err(bad("unsupported header"));
        }
        let mut size = None;
        let mut triplets = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if size.is_none() {
                let dims: Vec<usize> = fields.iter().map(|f| f.parse().map_err(|_| bad("bad size line"))).collect::<Result<_>>()?;
                if dims.len() != 3 || dims[0] != dims[1] {
                    return Err(bad("expected square size line"));
                }
                size = Some(dims[0]);
                continue;
            }
            if fields.len() != 3 {
                return Err(bad("expected `row col value`"));
            }
            let i: usize = fields[0].parse().map_err(|_| bad("bad row"))?;
            let j: usize = fields[1].parse().map_err(|_| bad("bad column"))?;
            let v: f64 = fields[2].parse().map_err(|_| bad("bad value"))?;
            triplets.push((i - 1, j - 1, v));
            if i != j {
                triplets.push((j - 1, i - 1, v));
            }
        }
        let n = size.ok_or_else(|| bad("missing size line"))?;
        Ok(Self::from_triplets(n, triplets))
    }
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite banded matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // row i holds L[i][i-bw ..= i], left-padded
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let stride = bw + 1;
        let mut data = vec![0.0; n * stride];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    data[i * stride + bw + j - i] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let k0 = lo.max(j.saturating_sub(bw));
                let mut s = data[i * stride + bw + j - i];
                let row_i = &data[i * stride + bw + k0 - i..i * stride + bw + j - i];
                let row_j = &data[j * stride + bw + k0 - j..j * stride + bw];
                s -= row_i.iter().zip(row_j).map(|(x, y)| x * y).sum::<f64>();
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { row: i, value: s });
                    }
                    data[i * stride + bw] = s.sqrt();
                } else {
                    data[i * stride + bw + j - i] = s / data[j * stride + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, stride) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &self.data[i * stride + bw + lo - i..i * stride + bw];
            let s: f64 = row.iter().zip(&x[lo..i]).map(|(l, v)| l * v).sum();
            x[i] = (x[i] - s) / self.data[i * stride + bw];
        }
        for i in (0..n).rev() {
            x[i] /= self.data[i * stride + bw];
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            for (k, l) in (lo..i).zip(&self.data[i * stride + bw + lo - i..i * stride + bw]) {
                x[k] -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
