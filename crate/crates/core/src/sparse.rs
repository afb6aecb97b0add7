//! Exact sparse matrices over the rationals.
//!
//! Incidence matrices, two-scale relations and hierarchical differential
//! operators are all stored here. Entries are kept reduced and explicit
//! zeros are never stored.

use std::collections::BTreeMap;
use std::fmt;

use faer::Mat;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar used for knots and operator entries.
pub type Rational = Ratio<i128>;

/// Sparse matrix with exact rational entries, stored row-wise with sorted
/// column indices.
#[derive(Clone, PartialEq, Eq)]
pub struct SignedSparseMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, Rational)>>,
}

impl fmt::Debug for SignedSparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignedSparseMatrix({}x{}, nnz={})", self.nrows, self.ncols, self.nnz())
    }
}

impl SignedSparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, rows: vec![Vec::new(); nrows] }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| vec![(i, Rational::one())]).collect();
        Self { nrows: n, ncols: n, rows }
    }

    /// Builds a matrix from triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Rational)>,
    {
        let mut acc: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of {nrows}x{ncols}");
            *acc[r].entry(c).or_insert_with(Rational::zero) += v;
        }
        let rows = acc
            .into_iter()
            .map(|m| m.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        Self { nrows, ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, Rational)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        match self.rows[r].binary_search_by_key(&c, |e| e.0) {
            Ok(k) => self.rows[r][k].1,
            Err(_) => Rational::zero(),
        }
    }

    /// Iterates over `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Rational)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    /// True when every entry is an integer.
    pub fn is_integral(&self) -> bool {
        self.triplets().all(|(_, _, v)| v.is_integer())
    }

    pub fn max_abs_entry(&self) -> Rational {
        self.triplets().map(|(_, _, v)| v.abs()).max().unwrap_or_else(Rational::zero)
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.ncols];
        for (r, c, v) in self.triplets() {
            rows[c].push((r, v));
        }
        Self { nrows: self.ncols, ncols: self.nrows, rows }
    }

    /// Exact product `self * rhs`.
    pub fn mul(&self, rhs: &SignedSparseMatrix) -> SignedSparseMatrix {
        assert_eq!(self.ncols, rhs.nrows, "dimension mismatch in sparse product");
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
                for &(k, a) in row {
                    for &(c, b) in &rhs.rows[k] {
                        *acc.entry(c).or_insert_with(Rational::zero) += a * b;
                    }
                }
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        SignedSparseMatrix { nrows: self.nrows, ncols: rhs.ncols, rows }
    }

    /// Exact matrix-vector product.
    pub fn mul_vec(&self, x: &[Rational]) -> Vec<Rational> {
        assert_eq!(x.len(), self.ncols);
        self.rows
            .iter()
            .map(|row| row.iter().fold(Rational::zero(), |s, &(c, v)| s + v * x[c]))
            .collect()
    }

    /// Floating point matrix-vector product.
    pub fn mul_vec_f64(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| to_f64(v) * x[c]).sum())
            .collect()
    }

    /// Kronecker product `self ⊗ rhs` with index `(r1 * rhs.nrows + r2, c1 * rhs.ncols + c2)`.
    pub fn kron(&self, rhs: &SignedSparseMatrix) -> SignedSparseMatrix {
        let mut rows = Vec::with_capacity(self.nrows * rhs.nrows);
        for a in &self.rows {
            for b in &rhs.rows {
                let mut row = Vec::with_capacity(a.len() * b.len());
                for &(ca, va) in a {
                    for &(cb, vb) in b {
                        row.push((ca * rhs.ncols + cb, va * vb));
                    }
                }
                rows.push(row);
            }
        }
        SignedSparseMatrix { nrows: self.nrows * rhs.nrows, ncols: self.ncols * rhs.ncols, rows }
    }

    /// Keeps only the listed rows and columns, renumbered in the given order.
    pub fn restrict(&self, keep_rows: &[usize], keep_cols: &[usize]) -> SignedSparseMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = new;
        }
        let rows = keep_rows
            .iter()
            .map(|&r| {
                let mut row: Vec<(usize, Rational)> = self.rows[r]
                    .iter()
                    .filter(|(c, _)| col_map[*c] != usize::MAX)
                    .map(|&(c, v)| (col_map[c], v))
                    .collect();
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        SignedSparseMatrix { nrows: keep_rows.len(), ncols: keep_cols.len(), rows }
    }

    /// Stacks row blocks with identical column counts.
    pub fn vstack(blocks: &[&SignedSparseMatrix]) -> SignedSparseMatrix {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut rows = Vec::new();
        for b in blocks {
            assert_eq!(b.ncols, ncols);
            rows.extend(b.rows.iter().cloned());
        }
        SignedSparseMatrix { nrows: rows.len(), ncols, rows }
    }

    /// Concatenates column blocks with identical row counts.
    pub fn hstack(blocks: &[&SignedSparseMatrix]) -> SignedSparseMatrix {
        let nrows = blocks.first().map_or(0, |b| b.nrows);
        let mut rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); nrows];
        let mut offset = 0;
        for b in blocks {
            assert_eq!(b.nrows, nrows);
            for (r, row) in b.rows.iter().enumerate() {
                rows[r].extend(row.iter().map(|&(c, v)| (c + offset, v)));
            }
            offset += b.ncols;
        }
        SignedSparseMatrix { nrows, ncols: offset, rows }
    }

    pub fn scale(&self, s: Rational) -> SignedSparseMatrix {
        if s.is_zero() {
            return Self::zeros(self.nrows, self.ncols);
        }
        let rows = self.rows.iter().map(|r| r.iter().map(|&(c, v)| (c, v * s)).collect()).collect();
        SignedSparseMatrix { nrows: self.nrows, ncols: self.ncols, rows }
    }

    /// Column-major dense copy in floating point.
    pub fn to_dense_f64(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for (r, c, v) in self.triplets() {
            out[r + c * self.nrows] = to_f64(v);
        }
        out
    }
}

/// Real sparse matrix for assembled Galerkin operators, stored row-wise with
/// sorted column indices.
#[derive(Clone, PartialEq)]
pub struct RealSparseMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl fmt::Debug for RealSparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealSparseMatrix({}x{}, nnz={})", self.nrows, self.ncols, self.nnz())
    }
}

impl RealSparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, rows: vec![Vec::new(); nrows] }
    }

    /// Sums duplicates in a fixed order: triplets are stably sorted by
    /// position, so equal inputs give bitwise equal matrices.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of {nrows}x{ncols}");
            match rows[r].last_mut() {
                Some((lc, lv)) if *lc == c => *lv += v,
                _ => rows[r].push((c, v)),
            }
        }
        Self { nrows, ncols, rows }
    }

    pub fn from_exact(m: &SignedSparseMatrix) -> Self {
        let rows = (0..m.nrows()).map(|r| m.row(r).iter().map(|&(c, v)| (c, to_f64(v))).collect()).collect();
        Self { nrows: m.nrows(), ncols: m.ncols(), rows }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self.rows[r].binary_search_by_key(&c, |e| e.0) {
            Ok(k) => self.rows[r][k].1,
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.ncols];
        for (r, c, v) in self.triplets() {
            rows[c].push((r, v));
        }
        Self { nrows: self.ncols, ncols: self.nrows, rows }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        self.rows.iter().map(|row| row.iter().map(|&(c, v)| v * x[c]).sum()).collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul_vec(y)).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.triplets().fold(0.0, |m, (_, _, v)| m.max(v.abs()))
    }

    /// Largest `|A_rc − A_cr|`.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        self.triplets().fold(0.0, |m, (r, c, v)| m.max((v - self.get(c, r)).abs()))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut out = Mat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            out[(r, c)] = v;
        }
        out
    }
}

pub fn to_f64(v: Rational) -> f64 {
    v.numer().to_f64().unwrap() / v.denom().to_f64().unwrap()
}

pub fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_drop_zeros() {
        let m = SignedSparseMatrix::from_triplets(
            2,
            3,
            vec![(0, 1, rat(1, 2)), (0, 1, rat(-1, 2)), (1, 2, rat(3, 1)), (1, 0, rat(1, 1))],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.row(1), &[(0, rat(1, 1)), (2, rat(3, 1))]);
        assert_eq!(m.get(0, 1), rat(0, 1));
    }

    #[test]
    fn kron_matches_definition() {
        let a = SignedSparseMatrix::from_triplets(2, 2, vec![(0, 0, rat(1, 1)), (1, 0, rat(2, 1))]);
        let b = SignedSparseMatrix::from_triplets(1, 2, vec![(0, 1, rat(-1, 1))]);
        let k = a.kron(&b);
        assert_eq!((k.nrows(), k.ncols()), (2, 4));
        assert_eq!(k.get(0, 1), rat(-1, 1));
        assert_eq!(k.get(1, 1), rat(-2, 1));
        assert_eq!(k.nnz(), 2);
    }

    #[test]
    fn product_and_transpose() {
        let a = SignedSparseMatrix::from_triplets(2, 2, vec![(0, 0, rat(1, 1)), (0, 1, rat(1, 3)), (1, 1, rat(2, 1))]);
        let at = a.transpose();
        let p = a.mul(&at);
        assert_eq!(p.get(0, 0), rat(10, 9));
        assert_eq!(p.get(0, 1), rat(2, 3));
        assert_eq!(p.get(1, 1), rat(4, 1));
    }
}
