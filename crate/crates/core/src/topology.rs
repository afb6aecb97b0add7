//! Combinatorial topology of cell sets on Cartesian grids and ranks of
//! finite cochain complexes.
//!
//! A [`CellSet`] stands for the open region "interior of the closure" of its
//! cells: two cells that touch only at a corner are separate components and
//! the corner is counted once per side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::{Rational, SignedSparseMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("D1 * D0 is not zero")]
    NotAComplex,
    #[error("incompatible shapes: D0 is {0}x{1}, D1 is {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("modular ranks disagree after {0} attempts")]
    RankDisagreement(usize),
}

/// Subset of the cells of an `n₁ × n₂` grid.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellSet {
    shape: [usize; 2],
    mask: Vec<bool>,
}

impl std::fmt::Debug for CellSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CellSet {}x{}", self.shape[0], self.shape[1])?;
        for j in (0..self.shape[1]).rev() {
            let row: String = (0..self.shape[0]).map(|i| if self.contains(i, j) { '#' } else { '.' }).collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

impl CellSet {
    pub fn empty(n1: usize, n2: usize) -> Self {
        Self { shape: [n1, n2], mask: vec![false; n1 * n2] }
    }

    pub fn full(n1: usize, n2: usize) -> Self {
        Self { shape: [n1, n2], mask: vec![true; n1 * n2] }
    }

    pub fn from_fn(n1: usize, n2: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut s = Self::empty(n1, n2);
        for j in 0..n2 {
            for i in 0..n1 {
                s.mask[i + n1 * j] = f(i, j);
            }
        }
        s
    }

    /// Parses rows of `#`/`.`, top row first.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let n2 = rows.len();
        let n1 = rows.first().map_or(0, |r| r.len());
        Self::from_fn(n1, n2, |i, j| rows[n2 - 1 - j].as_bytes()[i] == b'#')
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.shape[0] && j < self.shape[1] && self.mask[i + self.shape[0] * j]
    }

    // Bounds-tolerant lookup with signed indices.
    fn has(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && self.contains(i as usize, j as usize)
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        let n1 = self.shape[0];
        self.mask[i + n1 * j] = true;
    }

    pub fn remove(&mut self, i: usize, j: usize) {
        let n1 = self.shape[0];
        self.mask[i + n1 * j] = false;
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|b| *b)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n1 = self.shape[0];
        self.mask.iter().enumerate().filter(|(_, b)| **b).map(move |(k, _)| (k % n1, k / n1))
    }

    pub fn complement(&self) -> Self {
        Self { shape: self.shape, mask: self.mask.iter().map(|b| !b).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.shape[1], self.shape[0], |i, j| self.contains(j, i))
    }

    pub fn reflect_x(&self) -> Self {
        let n1 = self.shape[0];
        Self::from_fn(n1, self.shape[1], |i, j| self.contains(n1 - 1 - i, j))
    }

    pub fn reflect_y(&self) -> Self {
        let n2 = self.shape[1];
        Self::from_fn(self.shape[0], n2, |i, j| self.contains(i, n2 - 1 - j))
    }
}

/// Betti data of a cell set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridTopology {
    pub components: usize,
    /// Component label per cell (row-major, `None` outside the set).
    pub labels: Vec<Option<usize>>,
    pub holes: usize,
    pub euler: i64,
    /// False when two cells meet only at a corner.
    pub manifold: bool,
}

impl GridTopology {
    /// `(components, holes)`.
    pub fn betti(&self) -> (usize, usize) {
        (self.components, self.holes)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

// Labels connected components; `diagonal` adds corner adjacency.
fn label_components(set: &CellSet, diagonal: bool) -> (usize, Vec<Option<usize>>) {
    let [n1, n2] = set.shape;
    let mut uf = UnionFind::new(n1 * n2);
    for (i, j) in set.iter() {
        let here = i + n1 * j;
        let (ii, jj) = (i as isize, j as isize);
        let mut link = |di: isize, dj: isize| {
            if set.has(ii + di, jj + dj) {
                uf.union(here, (i as isize + di) as usize + n1 * (j as isize + dj) as usize);
            }
        };
        link(1, 0);
        link(0, 1);
        if diagonal {
            link(1, 1);
            link(-1, 1);
        }
    }
    let mut ids = vec![usize::MAX; n1 * n2];
    let mut labels = vec![None; n1 * n2];
    let mut count = 0;
    for (i, j) in set.iter() {
        let r = uf.find(i + n1 * j);
        if ids[r] == usize::MAX {
            ids[r] = count;
            count += 1;
        }
        labels[i + n1 * j] = Some(ids[r]);
    }
    (count, labels)
}

/// Components, holes, Euler characteristic and the manifold flag.
pub fn analyze(cells: &CellSet) -> GridTopology {
    let [n1, n2] = cells.shape;
    let (components, labels) = label_components(cells, false);
    let f = cells.len() as i64;
    let mut e = 0i64;
    for j in 0..=n2 as isize {
        for i in 0..n1 as isize {
            // horizontal edge between cells (i, j-1) and (i, j)
            if cells.has(i, j - 1) || cells.has(i, j) {
                e += 1;
            }
        }
    }
    for j in 0..n2 as isize {
        for i in 0..=n1 as isize {
            if cells.has(i - 1, j) || cells.has(i, j) {
                e += 1;
            }
        }
    }
    let mut v = 0i64;
    let mut manifold = true;
    for j in 0..=n2 as isize {
        for i in 0..=n1 as isize {
            // cyclic order around the vertex: SW, SE, NE, NW
            let around = [cells.has(i - 1, j - 1), cells.has(i, j - 1), cells.has(i, j), cells.has(i - 1, j)];
            let present = around.iter().filter(|b| **b).count();
            let groups = if present == 4 { 1 } else { (0..4).filter(|&k| around[k] && !around[(k + 3) % 4]).count() };
            if groups > 1 {
                manifold = false;
            }
            v += groups as i64;
        }
    }
    let euler = v - e + f;
    let holes = components as i64 - euler;
    debug_assert!(holes >= 0);
    GridTopology { components, labels, holes: holes as usize, euler, manifold }
}

/// Bounded components of the complement, by corner adjacency. Each is a hole.
pub fn hole_regions(cells: &CellSet) -> Vec<CellSet> {
    let [n1, n2] = cells.shape;
    // pad by one ring so the exterior is a single region
    let padded = CellSet::from_fn(n1 + 2, n2 + 2, |i, j| {
        i == 0 || j == 0 || i == n1 + 1 || j == n2 + 1 || !cells.contains(i - 1, j - 1)
    });
    let (count, labels) = label_components(&padded, true);
    let outer = labels[0].expect("padding cell is in the complement");
    let mut regions = vec![CellSet::empty(n1, n2); count];
    for j in 0..n2 {
        for i in 0..n1 {
            if let Some(l) = labels[(i + 1) + (n1 + 2) * (j + 1)] {
                regions[l].insert(i, j);
            }
        }
    }
    regions.into_iter().enumerate().filter(|(l, _)| *l != outer).map(|(_, r)| r).collect()
}

/// Finite element cochain complex of a cell set: interior vertices, interior
/// edges and all cells, with the Greville grid sign conventions.
#[derive(Clone, Debug)]
pub struct CellComplex {
    pub vertices: Vec<(usize, usize)>,
    /// `(horizontal?, i, j)`; horizontal edge `(i, j)` joins vertices
    /// `(i, j)` and `(i + 1, j)`, vertical joins `(i, j)` and `(i, j + 1)`.
    pub edges: Vec<(bool, usize, usize)>,
    pub cells: Vec<(usize, usize)>,
    pub d0: SignedSparseMatrix,
    pub d1: SignedSparseMatrix,
}

/// Builds the boundary-restricted finite element complex supported on `cells`.
pub fn fe_complex(cells: &CellSet) -> CellComplex {
    let [n1, n2] = cells.shape;
    let (w1, w2) = (n1 + 1, n2 + 1);
    let mut vid = vec![usize::MAX; w1 * w2];
    let mut vertices = Vec::new();
    for j in 0..w2 {
        for i in 0..w1 {
            let (ii, jj) = (i as isize, j as isize);
            if cells.has(ii - 1, jj - 1) && cells.has(ii, jj - 1) && cells.has(ii, jj) && cells.has(ii - 1, jj) {
                vid[i + w1 * j] = vertices.len();
                vertices.push((i, j));
            }
        }
    }
    let mut hid = vec![usize::MAX; n1 * w2];
    let mut vid_edge = vec![usize::MAX; w1 * n2];
    let mut edges = Vec::new();
    for j in 0..w2 {
        for i in 0..n1 {
            if cells.has(i as isize, j as isize - 1) && cells.has(i as isize, j as isize) {
                hid[i + n1 * j] = edges.len();
                edges.push((true, i, j));
            }
        }
    }
    for j in 0..n2 {
        for i in 0..w1 {
            if cells.has(i as isize - 1, j as isize) && cells.has(i as isize, j as isize) {
                vid_edge[i + w1 * j] = edges.len();
                edges.push((false, i, j));
            }
        }
    }
    let one = Rational::from_integer(1);
    let mut t0 = Vec::new();
    for (r, &(horizontal, i, j)) in edges.iter().enumerate() {
        let (a, b) = if horizontal { ((i, j), (i + 1, j)) } else { ((i, j), (i, j + 1)) };
        for (v, s) in [(a, -one), (b, one)] {
            let id = vid[v.0 + w1 * v.1];
            if id != usize::MAX {
                t0.push((r, id, s));
            }
        }
    }
    let cell_list: Vec<(usize, usize)> = cells.iter().collect();
    let mut t1 = Vec::new();
    for (r, &(i, j)) in cell_list.iter().enumerate() {
        let sides = [
            (hid[i + n1 * j], one),
            (hid[i + n1 * (j + 1)], -one),
            (vid_edge[(i + 1) + w1 * j], one),
            (vid_edge[i + w1 * j], -one),
        ];
        for (id, s) in sides {
            if id != usize::MAX {
                t1.push((r, id, s));
            }
        }
    }
    let d0 = SignedSparseMatrix::from_triplets(edges.len(), vertices.len(), t0);
    let d1 = SignedSparseMatrix::from_triplets(cell_list.len(), edges.len(), t1);
    CellComplex { vertices, edges, cells: cell_list, d0, d1 }
}

/// Closed 1-cochains on the interior edges of `complex`, one per hole of
/// `cells`: the gradient of the indicator of the hole's closed vertices.
pub fn h1_generators(cells: &CellSet, complex: &CellComplex) -> Vec<Vec<i64>> {
    let [n1, n2] = cells.shape;
    let w1 = n1 + 1;
    hole_regions(cells)
        .into_iter()
        .map(|hole| {
            let mut phi = vec![0i64; w1 * (n2 + 1)];
            for (i, j) in hole.iter() {
                for (a, b) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                    phi[a + w1 * b] = 1;
                }
            }
            complex
                .edges
                .iter()
                .map(|&(horizontal, i, j)| {
                    let b = if horizontal { (i + 1, j) } else { (i, j + 1) };
                    phi[b.0 + w1 * b.1] - phi[i + w1 * j]
                })
                .collect()
        })
        .collect()
}

/// Dimensions `(h0, h1, h2)` of the cohomology of `0 → X⁰ → X¹ → X² → 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CohomologyDims {
    pub h0: usize,
    pub h1: usize,
    pub h2: usize,
}

impl CohomologyDims {
    pub fn as_tuple(self) -> (usize, usize, usize) {
        (self.h0, self.h1, self.h2)
    }

    /// Trivial cohomology apart from the constants in top degree.
    pub fn is_exact(self) -> bool {
        self.as_tuple() == (0, 0, 1)
    }
}

/// Cohomology dimensions over the rationals, with ranks computed modulo
/// random primes drawn from `seed`.
pub fn cohomology_dims(
    d0: &SignedSparseMatrix,
    d1: &SignedSparseMatrix,
    seed: u64,
) -> Result<CohomologyDims, TopologyError> {
    if d1.ncols() != d0.nrows() {
        return Err(TopologyError::ShapeMismatch(d0.nrows(), d0.ncols(), d1.nrows(), d1.ncols()));
    }
    if !d1.mul(d0).is_zero() {
        return Err(TopologyError::NotAComplex);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r0 = rank(d0, &mut rng)?;
    let r1 = rank(d1, &mut rng)?;
    Ok(CohomologyDims { h0: d0.ncols() - r0, h1: d1.ncols() - r1 - r0, h2: d1.nrows() - r1 })
}

const RANK_ATTEMPTS: usize = 3;

/// Rank over the rationals, from elimination modulo two random primes near
/// 2³¹ that must agree.
pub fn rank(m: &SignedSparseMatrix, rng: &mut impl Rng) -> Result<usize, TopologyError> {
    for _ in 0..RANK_ATTEMPTS {
        let (Some(a), Some(b)) = (rank_mod(m, random_prime(rng)), rank_mod(m, random_prime(rng))) else {
            continue;
        };
        if a == b {
            return Ok(a);
        }
    }
    Err(TopologyError::RankDisagreement(RANK_ATTEMPTS))
}

/// Rank with a fixed seed.
pub fn matrix_rank(m: &SignedSparseMatrix) -> usize {
    rank(m, &mut ChaCha8Rng::seed_from_u64(0x5eed)).expect("modular ranks agree")
}

fn random_prime(rng: &mut impl Rng) -> u64 {
    loop {
        let c = rng.random_range((1u64 << 30)..(1u64 << 31)) | 1;
        if is_prime(c) {
            return c;
        }
    }
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn to_mod(v: Rational, p: u64) -> Option<u64> {
    let pi = p as i128;
    let num = v.numer().rem_euclid(pi) as u64;
    let den = v.denom().rem_euclid(pi) as u64;
    if den == 0 {
        return None;
    }
    Some(mul_mod(num, pow_mod(den, p - 2, p), p))
}

/// Rank modulo `p`; `None` if some denominator vanishes modulo `p`.
pub fn rank_mod(m: &SignedSparseMatrix, p: u64) -> Option<usize> {
    // pivots[c]: row with leading column c, normalized to leading 1
    let mut pivots: Vec<Option<Vec<(usize, u64)>>> = vec![None; m.ncols()];
    let mut rank = 0;
    for r in 0..m.nrows() {
        let mut row = Vec::with_capacity(m.row(r).len());
        for &(c, v) in m.row(r) {
            let x = to_mod(v, p)?;
            if x != 0 {
                row.push((c, x));
            }
        }
        while let Some(&(lead, coef)) = row.first() {
            match &pivots[lead] {
                Some(piv) => row = axpy_mod(&row, p - coef, piv, p),
                None => {
                    let inv = pow_mod(coef, p - 2, p);
                    for e in row.iter_mut() {
                        e.1 = mul_mod(e.1, inv, p);
                    }
                    pivots[lead] = Some(row);
                    rank += 1;
                    break;
                }
            }
        }
    }
    Some(rank)
}

// row + a * piv (mod p), both sorted.
fn axpy_mod(row: &[(usize, u64)], a: u64, piv: &[(usize, u64)], p: u64) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(row.len() + piv.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < piv.len() {
        let ci = row.get(i).map_or(usize::MAX, |e| e.0);
        let cj = piv.get(j).map_or(usize::MAX, |e| e.0);
        let (c, v) = if ci < cj {
            i += 1;
            (ci, row[i - 1].1)
        } else if cj < ci {
            j += 1;
            (cj, mul_mod(a, piv[j - 1].1, p))
        } else {
            i += 1;
            j += 1;
            (ci, (row[i - 1].1 + mul_mod(a, piv[j - 1].1, p)) % p)
        };
        if v != 0 {
            out.push((c, v));
        }
    }
    out
}
