//! Univariate B-splines on open knot vectors.
//!
//! Knots are exact rationals so that nestedness, supports and refinement
//! relations are decided without floating point comparisons. Evaluation is
//! done in `f64` with the Cox–de Boor recursion.

use std::ops::Range;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::sparse::{to_f64, Rational, SignedSparseMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("degree must be at least 1, got {0}")]
    InvalidDegree(usize),
    #[error("number of elements must be at least 1")]
    InvalidElementCount,
    #[error("knot vector is not open (first/last {0} knots must equal 0 and 1)")]
    NotOpen(usize),
    #[error("knots must be non-decreasing and lie in [0, 1]")]
    BadKnots,
    #[error("interior knot {knot} has multiplicity {mult} > degree {degree}")]
    MultiplicityTooHigh { knot: f64, mult: usize, degree: usize },
    #[error("evaluation point {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("knot vectors are not nested")]
    NotNested,
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("zero-length local knot span for Curry-Schoenberg function {0}")]
    DegenerateSpan(usize),
}

/// Open knot vector `{ξ_1, …, ξ_{m+p+1}}` with its degree.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<Rational>,
    values: Vec<f64>,
    breaks: Vec<Rational>,
}

/// Values (and derivatives) of the basis functions that are nonzero on the
/// knot span containing the evaluation point.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEval {
    /// Global index of the first function in `ders[k]`.
    pub first: usize,
    /// `ders[k][j]` is the k-th derivative of function `first + j`.
    pub ders: Vec<Vec<f64>>,
}

impl BasisEval {
    pub fn len(&self) -> usize {
        self.ders[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.ders[0].is_empty()
    }

    /// Iterates over `(global index, value)`.
    pub fn values(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.ders[0].iter().enumerate().map(move |(j, &v)| (self.first + j, v))
    }

    /// Value of derivative `order` for global index `i` (zero when `i` is not
    /// among the nonzero functions).
    pub fn get(&self, i: usize, order: usize) -> f64 {
        if i < self.first || i >= self.first + self.len() {
            0.0
        } else {
            self.ders.get(order).map_or(0.0, |d| d[i - self.first])
        }
    }
}

/// Open uniform knot vector of degree `p` with `n_elems` elements and
/// maximal continuity.
pub fn make_uniform_open_knots(p: usize, n_elems: usize) -> Result<KnotVector, SplineError> {
    if p < 1 {
        return Err(SplineError::InvalidDegree(p));
    }
    if n_elems < 1 {
        return Err(SplineError::InvalidElementCount);
    }
    let n = n_elems as i128;
    let mut knots = vec![Rational::zero(); p + 1];
    knots.extend((1..n).map(|j| Rational::new(j, n)));
    knots.extend(std::iter::repeat_n(Rational::one(), p + 1));
    KnotVector::new(p, knots)
}

impl KnotVector {
    /// Validates an open knot vector whose interior multiplicities do not
    /// exceed the degree.
    pub fn new(degree: usize, knots: Vec<Rational>) -> Result<Self, SplineError> {
        let kv = Self::new_unchecked_continuity(degree, knots)?;
        for (b, mult) in kv.interior_multiplicities() {
            if mult > degree {
                return Err(SplineError::MultiplicityTooHigh { knot: to_f64(b), mult, degree });
            }
        }
        Ok(kv)
    }

    // Open and sorted, but interior multiplicity up to degree + 1.
    fn new_unchecked_continuity(degree: usize, knots: Vec<Rational>) -> Result<Self, SplineError> {
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return Err(SplineError::NotOpen(p + 1));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(SplineError::BadKnots);
        }
        let zero = Rational::zero();
        let one = Rational::one();
        let l = knots.len();
        if knots[..=p].iter().any(|k| *k != zero)
            || knots[l - p - 1..].iter().any(|k| *k != one)
            || knots[p + 1] == zero
            || knots[l - p - 2] == one
        {
            return Err(SplineError::NotOpen(p + 1));
        }
        let mut breaks = knots.clone();
        breaks.dedup();
        for b in &breaks {
            let mult = knots.iter().filter(|k| *k == b).count();
            if *b != zero && *b != one && mult > p + 1 {
                return Err(SplineError::MultiplicityTooHigh { knot: to_f64(*b), mult, degree: p });
            }
        }
        let values = knots.iter().map(|k| to_f64(*k)).collect();
        Ok(Self { degree, knots, values, breaks })
    }

    fn interior_multiplicities(&self) -> Vec<(Rational, usize)> {
        let last = self.breaks.len() - 1;
        self.breaks[1..last]
            .iter()
            .map(|b| (*b, self.knots.iter().filter(|k| *k == b).count()))
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[Rational] {
        &self.knots
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.values
    }

    /// Number of basis functions `m`.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Distinct knot values (element boundaries).
    pub fn breakpoints(&self) -> &[Rational] {
        &self.breaks
    }

    pub fn n_elems(&self) -> usize {
        self.breaks.len() - 1
    }

    fn element_of(&self, knot: Rational) -> usize {
        self.breaks.binary_search(&knot).expect("knot is a breakpoint")
    }

    /// Elements covered by the open support `(ξ_i, ξ_{i+p+1})` of `B_i`.
    pub fn support_elements(&self, i: usize) -> Range<usize> {
        let p = self.degree;
        self.element_of(self.knots[i])..self.element_of(self.knots[i + p + 1])
    }

    /// Derived knot vector `Ξ' = {ξ_2, …, ξ_{m+p}}` of degree `p − 1`.
    pub fn derived(&self) -> KnotVector {
        assert!(self.degree >= 1, "derived knot vector needs degree >= 1");
        let l = self.knots.len();
        Self::new_unchecked_continuity(self.degree - 1, self.knots[1..l - 1].to_vec())
            .expect("derived knot vector of a valid knot vector is valid")
    }

    /// Elements covered by the support of the Curry–Schoenberg function `D_j`
    /// (0-based over the `m − 1` derived functions).
    pub fn cs_support_elements(&self, j: usize) -> Range<usize> {
        let p = self.degree;
        self.element_of(self.knots[j + 1])..self.element_of(self.knots[j + p + 1])
    }

    /// Normalization factor `p / (ξ_{j+p} − ξ_j)` of `D_j` (0-based).
    pub fn cs_scale(&self, j: usize) -> Result<Rational, SplineError> {
        let p = self.degree as i128;
        let len = self.knots[j + self.degree + 1] - self.knots[j + 1];
        if len.is_zero() {
            return Err(SplineError::DegenerateSpan(j));
        }
        Ok(Rational::from_integer(p) / len)
    }

    /// Index μ of the knot span `[ξ_μ, ξ_{μ+1})` containing `x`; the last
    /// nonempty span is used at `x = 1`.
    pub fn find_span(&self, x: f64) -> usize {
        let p = self.degree;
        let m = self.dim();
        if x >= self.values[m] {
            return m - 1;
        }
        // largest μ in [p, m-1] with ξ_μ <= x
        let mut lo = p;
        let mut hi = m;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.values[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Element (index into the breakpoints) containing `x`.
    pub fn find_element(&self, x: f64) -> usize {
        let mu = self.find_span(x);
        self.element_of(self.knots[mu])
    }

    /// Nonzero B-splines and their derivatives up to `max_deriv` at `x`.
    ///
    /// Uses right limits at knots, except at `x = 1` where the left limit is
    /// taken.
    pub fn eval_basis(&self, x: f64, max_deriv: usize) -> Result<BasisEval, SplineError> {
        if !(0.0..=1.0).contains(&x) || x.is_nan() {
            return Err(SplineError::OutOfRange(x));
        }
        let mu = self.find_span(x);
        Ok(BasisEval { first: mu - self.degree, ders: ders_basis_funs(&self.values, self.degree, mu, x, max_deriv) })
    }

    /// Nonzero Curry–Schoenberg splines `D_j = p/(ξ_{j+p} − ξ_j) B_{j,p−1}`
    /// on the derived knot vector, with derivatives, at `x`.
    pub fn curry_schoenberg_eval(&self, x: f64, max_deriv: usize) -> Result<BasisEval, SplineError> {
        if self.degree < 1 {
            return Err(SplineError::InvalidDegree(self.degree));
        }
        if !(0.0..=1.0).contains(&x) || x.is_nan() {
            return Err(SplineError::OutOfRange(x));
        }
        let p = self.degree;
        // Span of the derived vector in parent numbering.
        let mu = self.find_span(x);
        let first = mu - p;
        let mut ders = ders_basis_funs(&self.values[1..self.values.len() - 1], p - 1, mu - 1, x, max_deriv);
        for (j, _) in ders[0].clone().iter().enumerate() {
            let s = to_f64(self.cs_scale(first + j)?);
            for d in ders.iter_mut() {
                d[j] *= s;
            }
        }
        Ok(BasisEval { first, ders })
    }

    /// Greville sites `γ_i = (ξ_{i+1} + … + ξ_{i+p})/p`, exact.
    pub fn greville_sites_exact(&self) -> Vec<Rational> {
        let p = self.degree;
        assert!(p >= 1, "Greville sites need degree >= 1");
        (0..self.dim())
            .map(|i| self.knots[i + 1..=i + p].iter().fold(Rational::zero(), |s, k| s + k) / Rational::from_integer(p as i128))
            .collect()
    }

    pub fn greville_sites(&self) -> Vec<f64> {
        self.greville_sites_exact().into_iter().map(to_f64).collect()
    }

    /// Inserts the midpoint of every nonempty knot span.
    pub fn dyadic_refine(&self) -> KnotVector {
        let mut knots = self.knots.clone();
        let half = Rational::new(1, 2);
        for w in self.breaks.windows(2) {
            knots.push((w[0] + w[1]) * half);
        }
        knots.sort();
        KnotVector::new_unchecked_continuity(self.degree, knots).expect("refined knot vector is valid")
    }
}

// Algorithm A2.3 of Piegl & Tiller: nonzero basis functions and derivatives on span `mu`.
fn ders_basis_funs(knots: &[f64], p: usize, mu: usize, x: f64, n: usize) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[mu + 1 - j];
        right[j] = knots[mu + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; n + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let nd = n.min(p);
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r as isize <= pk as isize {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for (k, row) in ders.iter_mut().enumerate().take(nd + 1).skip(1) {
        for v in row.iter_mut() {
            *v *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}

/// Knots of `fine` that are not in `coarse` (as a multiset difference).
fn inserted_knots(coarse: &KnotVector, fine: &KnotVector) -> Result<Vec<Rational>, SplineError> {
    if coarse.degree != fine.degree {
        return Err(SplineError::DegreeMismatch(coarse.degree, fine.degree));
    }
    let mut extra = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (c, f) = (&coarse.knots, &fine.knots);
    while j < f.len() {
        if i < c.len() && c[i] == f[j] {
            i += 1;
        } else if i < c.len() && c[i] < f[j] {
            return Err(SplineError::NotNested);
        } else {
            extra.push(f[j]);
        }
        j += 1;
    }
    if i != c.len() {
        return Err(SplineError::NotNested);
    }
    Ok(extra)
}

/// Two-scale matrix `R` with `B_coarse = R · B_fine`, by repeated single
/// knot insertion (Boehm). Entries are exact.
pub fn two_scale_matrix(coarse: &KnotVector, fine: &KnotVector) -> Result<SignedSparseMatrix, SplineError> {
    let extra = inserted_knots(coarse, fine)?;
    let p = coarse.degree;
    let mut knots = coarse.knots.clone();
    let mut r = SignedSparseMatrix::identity(coarse.dim());
    for t in extra {
        let m = knots.len() - p - 1;
        // k: largest index with ξ_k <= t
        let k = knots.iter().rposition(|x| *x <= t).expect("t >= 0");
        let alpha = |j: usize| -> Rational {
            if j + p <= k {
                Rational::one()
            } else if j > k {
                Rational::zero()
            } else {
                let den = knots[j + p] - knots[j];
                if den.is_zero() {
                    Rational::zero()
                } else {
                    (t - knots[j]) / den
                }
            }
        };
        let mut trips = Vec::with_capacity(2 * m);
        for i in 0..m {
            let a = alpha(i);
            let b = Rational::one() - alpha(i + 1);
            trips.push((i, i, a));
            trips.push((i, i + 1, b));
        }
        let step = SignedSparseMatrix::from_triplets(m, m + 1, trips);
        r = r.mul(&step);
        let pos = knots.iter().rposition(|x| *x <= t).unwrap() + 1;
        knots.insert(pos, t);
    }
    debug_assert_eq!(knots, fine.knots);
    Ok(r)
}

/// Two-scale matrix for the Curry–Schoenberg splines of two nested parent
/// knot vectors: `D_coarse = R · D_fine`.
pub fn curry_schoenberg_two_scale(coarse: &KnotVector, fine: &KnotVector) -> Result<SignedSparseMatrix, SplineError> {
    let rb = two_scale_matrix(&coarse.derived(), &fine.derived())?;
    let trips: Result<Vec<_>, SplineError> = rb
        .triplets()
        .map(|(i, j, v)| Ok((i, j, v * coarse.cs_scale(i)? / fine.cs_scale(j)?)))
        .collect();
    Ok(SignedSparseMatrix::from_triplets(rb.nrows(), rb.ncols(), trips?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Plain recursive Cox–de Boor, independent of the triangular scheme above.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            let last = knots[knots.len() - 1];
            let in_span = knots[i] <= x && x < knots[i + 1];
            // left limit at the right end of the domain
            let at_end = x == last && knots[i] < knots[i + 1] && knots[i + 1] == last;
            return if in_span || at_end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            v += (x - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, x);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, i + 1, p - 1, x);
        }
        v
    }

    fn dense_values(kv: &KnotVector, x: f64) -> Vec<f64> {
        let e = kv.eval_basis(x, 0).unwrap();
        (0..kv.dim()).map(|i| e.get(i, 0)).collect()
    }

    #[test]
    fn uniform_knots() {
        let kv = make_uniform_open_knots(2, 2).unwrap();
        assert_eq!(
            kv.knots(),
            &[rat(0, 1), rat(0, 1), rat(0, 1), rat(1, 2), rat(1, 1), rat(1, 1), rat(1, 1)]
        );
        assert_eq!(kv.dim(), 4);
        let kv = make_uniform_open_knots(1, 1).unwrap();
        assert_eq!(kv.knots(), &[rat(0, 1), rat(0, 1), rat(1, 1), rat(1, 1)]);
        assert_eq!(kv.dim(), 2);
        let kv = make_uniform_open_knots(2, 6).unwrap();
        let expect: Vec<Rational> = [0, 0, 0, 1, 2, 3, 4, 5, 6, 6, 6].iter().map(|&k| rat(k, 6)).collect();
        assert_eq!(kv.knots(), expect.as_slice());
        assert!(matches!(make_uniform_open_knots(0, 3), Err(SplineError::InvalidDegree(0))));
        assert!(matches!(make_uniform_open_knots(2, 0), Err(SplineError::InvalidElementCount)));
    }

    #[test]
    fn rejects_bad_knot_vectors() {
        let z = rat(0, 1);
        let o = rat(1, 1);
        let h = rat(1, 2);
        assert!(matches!(KnotVector::new(1, vec![z, h, o, o]), Err(SplineError::NotOpen(_))));
        assert!(matches!(
            KnotVector::new(1, vec![z, z, h, h, o, o]),
            Err(SplineError::MultiplicityTooHigh { .. })
        ));
        assert!(KnotVector::new(2, vec![z, z, z, h, h, o, o, o]).is_ok());
    }

    #[test]
    fn linear_hats() {
        let kv = make_uniform_open_knots(1, 1).unwrap();
        let e = kv.eval_basis(0.5, 0).unwrap();
        assert_eq!(e.values().collect::<Vec<_>>(), vec![(0, 0.5), (1, 0.5)]);
        assert!(kv.eval_basis(1.5, 0).is_err());
        assert!(kv.eval_basis(-0.1, 0).is_err());
    }

    #[test]
    fn matches_recursive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (p, n) in [(2, 2), (1, 3), (3, 5), (4, 6), (5, 7)] {
            let kv = make_uniform_open_knots(p, n).unwrap();
            let mut xs: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
            xs.extend([0.0, 1.0, 0.5, 0.25]);
            for x in xs {
                let fast = dense_values(&kv, x);
                for (i, v) in fast.iter().enumerate() {
                    let slow = cox_de_boor(kv.knot_values(), i, p, x);
                    assert!((v - slow).abs() < 1e-13, "p={p} x={x} i={i}: {v} vs {slow}");
                }
            }
        }
        // the explicit example at x = 0.25
        let kv = make_uniform_open_knots(2, 2).unwrap();
        let v = dense_values(&kv, 0.25);
        for (i, vi) in v.iter().enumerate() {
            assert!((vi - cox_de_boor(kv.knot_values(), i, 2, 0.25)).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in 1..=5 {
            let kv = make_uniform_open_knots(p, 7).unwrap();
            for _ in 0..100 {
                let x: f64 = rng.random();
                let s: f64 = kv.eval_basis(x, 0).unwrap().values().map(|(_, v)| v).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kv = make_uniform_open_knots(3, 4).unwrap();
        let h = 1e-6;
        for &x in &[0.1, 0.37, 0.6, 0.93] {
            let e = kv.eval_basis(x, 2).unwrap();
            let ep = kv.eval_basis(x + h, 0).unwrap();
            let em = kv.eval_basis(x - h, 0).unwrap();
            for i in 0..kv.dim() {
                let fd = (ep.get(i, 0) - em.get(i, 0)) / (2.0 * h);
                assert!((e.get(i, 1) - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn greville() {
        let kv = make_uniform_open_knots(1, 1).unwrap();
        assert_eq!(kv.greville_sites(), vec![0.0, 1.0]);
        let kv = make_uniform_open_knots(2, 2).unwrap();
        assert_eq!(kv.greville_sites_exact(), vec![rat(0, 1), rat(1, 4), rat(3, 4), rat(1, 1)]);
        let kv = make_uniform_open_knots(2, 6).unwrap();
        let expect: Vec<Rational> = [0, 1, 3, 5, 7, 9, 11, 12].iter().map(|&k| rat(k, 12)).collect();
        assert_eq!(kv.greville_sites_exact(), expect);
    }

    #[test]
    fn curry_schoenberg_lowest_degree_is_scaled_indicator() {
        let kv = make_uniform_open_knots(1, 4).unwrap();
        let e = kv.curry_schoenberg_eval(0.3, 0).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.first, 1);
        assert!((e.ders[0][0] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in 1..=5 {
            let kv = make_uniform_open_knots(p, 6).unwrap();
            for _ in 0..100 {
                let x: f64 = rng.random();
                let b = kv.eval_basis(x, 1).unwrap();
                let d = kv.curry_schoenberg_eval(x, 0).unwrap();
                for i in 0..kv.dim() {
                    let lhs = b.get(i, 1);
                    let dm = if i == 0 { 0.0 } else { d.get(i - 1, 0) };
                    let rhs = dm - d.get(i, 0);
                    assert!((lhs - rhs).abs() < 1e-12, "p={p} i={i} x={x}");
                }
            }
        }
    }

    #[test]
    fn curry_schoenberg_unit_integral() {
        // Gauss–Legendre per knot span, exact for the polynomial pieces.
        let kv = make_uniform_open_knots(3, 5).unwrap();
        let (nodes, weights) = crate::quadrature::gauss_legendre(4);
        let mut integrals = vec![0.0; kv.dim() - 1];
        for w in kv.breakpoints().windows(2) {
            let (a, b) = (to_f64(w[0]), to_f64(w[1]));
            for (t, wt) in nodes.iter().zip(&weights) {
                let x = a + (b - a) * t;
                let e = kv.curry_schoenberg_eval(x, 0).unwrap();
                for (j, v) in e.values() {
                    integrals[j] += wt * (b - a) * v;
                }
            }
        }
        for v in integrals {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn supports() {
        let kv = make_uniform_open_knots(2, 4).unwrap();
        assert_eq!(kv.support_elements(0), 0..1);
        assert_eq!(kv.support_elements(2), 0..3);
        assert_eq!(kv.support_elements(5), 3..4);
        assert_eq!(kv.cs_support_elements(0), 0..1);
        assert_eq!(kv.cs_support_elements(1), 0..2);
        assert_eq!(kv.cs_support_elements(4), 3..4);
    }

    #[test]
    fn two_scale_linear_example() {
        let c = make_uniform_open_knots(1, 1).unwrap();
        let f = make_uniform_open_knots(1, 2).unwrap();
        let r = two_scale_matrix(&c, &f).unwrap();
        let expect = SignedSparseMatrix::from_triplets(
            2,
            3,
            vec![(0, 0, rat(1, 1)), (0, 1, rat(1, 2)), (1, 1, rat(1, 2)), (1, 2, rat(1, 1))],
        );
        assert_eq!(r, expect);
        // both sides agree pointwise
        for &x in &[0.0, 0.2, 0.5, 0.8, 1.0] {
            let bc = dense_values(&c, x);
            let bf = dense_values(&f, x);
            let rb = r.mul_vec_f64(&bf);
            for (a, b) in bc.iter().zip(&rb) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_scale_identity_and_errors() {
        let c = make_uniform_open_knots(3, 4).unwrap();
        assert_eq!(two_scale_matrix(&c, &c).unwrap(), SignedSparseMatrix::identity(c.dim()));
        let other = make_uniform_open_knots(3, 3).unwrap();
        assert_eq!(two_scale_matrix(&c, &other), Err(SplineError::NotNested));
        let d = make_uniform_open_knots(2, 4).unwrap();
        assert!(matches!(two_scale_matrix(&c, &d), Err(SplineError::DegreeMismatch(3, 2))));
    }

    #[test]
    fn two_scale_pointwise_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in 1..=5 {
            let mut coarse = make_uniform_open_knots(p, 2).unwrap();
            for _ in 0..2 {
                let fine = coarse.dyadic_refine();
                let r = two_scale_matrix(&coarse, &fine).unwrap();
                assert!(r.triplets().all(|(_, _, v)| v > Rational::zero()));
                let rd = curry_schoenberg_two_scale(&coarse, &fine).unwrap();
                for _ in 0..200 {
                    let x: f64 = rng.random();
                    let bc = dense_values(&coarse, x);
                    let rb = r.mul_vec_f64(&dense_values(&fine, x));
                    let res = bc.iter().zip(&rb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    assert!(res < 1e-12, "p={p} residual {res}");
                    let dc = coarse.curry_schoenberg_eval(x, 0).unwrap();
                    let df = fine.curry_schoenberg_eval(x, 0).unwrap();
                    let dfv: Vec<f64> = (0..fine.dim() - 1).map(|j| df.get(j, 0)).collect();
                    let rdv = rd.mul_vec_f64(&dfv);
                    for (j, v) in rdv.iter().enumerate() {
                        assert!((dc.get(j, 0) - v).abs() < 1e-11);
                    }
                }
                coarse = fine;
            }
        }
    }

    #[test]
    fn two_scale_nonuniform_insertion() {
        let c = make_uniform_open_knots(2, 2).unwrap();
        let mut knots = c.knots().to_vec();
        knots.push(rat(1, 3));
        knots.push(rat(1, 3));
        knots.sort();
        let f = KnotVector::new(2, knots).unwrap();
        let r = two_scale_matrix(&c, &f).unwrap();
        for i in 0..21 {
            let x = i as f64 / 20.0;
            let rb = r.mul_vec_f64(&dense_values(&f, x));
            for (a, b) in dense_values(&c, x).iter().zip(&rb) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
