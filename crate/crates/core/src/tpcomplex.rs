//! Tensor-product spline form spaces on the unit square and their Greville
//! grid incidence matrices.
//!
//! Every component of a form space is a product of two univariate factors,
//! each either a B-spline basis ([`UniKind::Spline`]) or the Curry–Schoenberg
//! basis of the derived knot vector ([`UniKind::CurrySchoenberg`]). Basis
//! functions of a component are numbered lexicographically, `i + n₁ j`, and
//! components are concatenated.

use std::ops::Range;

use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::{Rational, SignedSparseMatrix};
use crate::splines1d::{BasisEval, KnotVector, SplineError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("form degree must be 0, 1 or 2, got {0}")]
    InvalidFormDegree(usize),
    #[error("0-form degree must be at least 1 in each direction")]
    DegreeTooLow,
    #[error("coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point ({0}, {1}) outside the unit square")]
    OutOfDomain(f64, f64),
}

/// Which of the two 2D complexes a 1-form belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// grad / curl: 1-forms are curl-conforming.
    Standard,
    /// rot / div: 1-forms are divergence-conforming.
    Rotated,
}

/// Univariate factor of a tensor-product basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UniKind {
    Spline,
    CurrySchoenberg,
}

impl UniKind {
    pub fn dim(self, kv: &KnotVector) -> usize {
        match self {
            UniKind::Spline => kv.dim(),
            UniKind::CurrySchoenberg => kv.dim() - 1,
        }
    }

    pub fn degree(self, kv: &KnotVector) -> usize {
        match self {
            UniKind::Spline => kv.degree(),
            UniKind::CurrySchoenberg => kv.degree() - 1,
        }
    }

    /// Element range of the open support of function `i`.
    pub fn support(self, kv: &KnotVector, i: usize) -> Range<usize> {
        match self {
            UniKind::Spline => kv.support_elements(i),
            UniKind::CurrySchoenberg => kv.cs_support_elements(i),
        }
    }

    pub fn eval(self, kv: &KnotVector, x: f64, max_deriv: usize) -> Result<BasisEval, SplineError> {
        match self {
            UniKind::Spline => kv.eval_basis(x, max_deriv),
            UniKind::CurrySchoenberg => kv.curry_schoenberg_eval(x, max_deriv),
        }
    }

    /// Functions of this kind that do not vanish on element `e`.
    pub fn on_element(self, kv: &KnotVector, e: usize) -> Range<usize> {
        // first function is the span index minus the degree
        let left = kv.breakpoints()[e];
        let mu = kv.knots().iter().rposition(|k| *k == left).expect("breakpoint is a knot");
        let p = kv.degree();
        match self {
            UniKind::Spline => mu - p..mu + 1,
            UniKind::CurrySchoenberg => mu - p..mu,
        }
    }
}

/// Component factor types of the k-forms of each complex.
pub fn component_kinds(k: usize, orientation: Orientation) -> Result<Vec<[UniKind; 2]>, FormError> {
    use UniKind::{CurrySchoenberg as D, Spline as B};
    Ok(match (k, orientation) {
        (0, _) => vec![[B, B]],
        (1, Orientation::Standard) => vec![[D, B], [B, D]],
        (1, Orientation::Rotated) => vec![[B, D], [D, B]],
        (2, _) => vec![[D, D]],
        _ => return Err(FormError::InvalidFormDegree(k)),
    })
}

/// One tensor-product space of k-forms, optionally restricted by homogeneous
/// boundary conditions.
#[derive(Clone, Debug)]
pub struct FormSpace {
    k: usize,
    orientation: Orientation,
    knots: [KnotVector; 2],
    kinds: Vec<[UniKind; 2]>,
    shapes: Vec<[usize; 2]>,
    offsets: Vec<usize>,
    bc: bool,
    level: usize,
    retained: Vec<usize>,
    dof_of: Vec<Option<usize>>,
}

/// Builds the k-form space of the complex whose 0-forms use `knots`.
pub fn build_form_space(
    k: usize,
    knots: [KnotVector; 2],
    orientation: Orientation,
    bc: bool,
) -> Result<FormSpace, FormError> {
    FormSpace::new(k, knots, orientation, bc)
}

impl FormSpace {
    pub fn new(k: usize, knots: [KnotVector; 2], orientation: Orientation, bc: bool) -> Result<Self, FormError> {
        if knots.iter().any(|kv| kv.degree() < 1) {
            return Err(FormError::DegreeTooLow);
        }
        let kinds = component_kinds(k, orientation)?;
        let shapes: Vec<[usize; 2]> = kinds.iter().map(|c| [c[0].dim(&knots[0]), c[1].dim(&knots[1])]).collect();
        let mut offsets = Vec::with_capacity(kinds.len() + 1);
        offsets.push(0);
        for s in &shapes {
            offsets.push(offsets.last().unwrap() + s[0] * s[1]);
        }
        let full = *offsets.last().unwrap();
        let mut retained = Vec::with_capacity(full);
        for (c, (kind, shape)) in kinds.iter().zip(&shapes).enumerate() {
            for j in 0..shape[1] {
                for i in 0..shape[0] {
                    let keep = !bc || (keeps(kind[0], i, shape[0]) && keeps(kind[1], j, shape[1]));
                    if keep {
                        retained.push(offsets[c] + i + shape[0] * j);
                    }
                }
            }
        }
        let mut dof_of = vec![None; full];
        for (d, &f) in retained.iter().enumerate() {
            dof_of[f] = Some(d);
        }
        Ok(Self { k, orientation, knots, kinds, shapes, offsets, bc, level: 0, retained, dof_of })
    }

    /// Tags the space with a refinement level.
    pub fn with_level(mut self, level: usize) -> Self {
        self.level = level;
        self
    }

    pub fn form_degree(&self) -> usize {
        self.k
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn knots(&self) -> &[KnotVector; 2] {
        &self.knots
    }

    pub fn has_bc(&self) -> bool {
        self.bc
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_components(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self, c: usize) -> [UniKind; 2] {
        self.kinds[c]
    }

    pub fn shape(&self, c: usize) -> [usize; 2] {
        self.shapes[c]
    }

    /// Polynomial degrees of component `c`.
    pub fn degrees(&self, c: usize) -> [usize; 2] {
        [self.kinds[c][0].degree(&self.knots[0]), self.kinds[c][1].degree(&self.knots[1])]
    }

    /// Dimension after boundary restriction.
    pub fn dim(&self) -> usize {
        self.retained.len()
    }

    /// Dimension without boundary restriction.
    pub fn full_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn full_index(&self, c: usize, i: usize, j: usize) -> usize {
        self.offsets[c] + i + self.shapes[c][0] * j
    }

    /// Inverse of [`FormSpace::full_index`].
    pub fn locate(&self, full: usize) -> (usize, usize, usize) {
        let c = self.offsets.partition_point(|&o| o <= full) - 1;
        let local = full - self.offsets[c];
        (c, local % self.shapes[c][0], local / self.shapes[c][0])
    }

    /// Retained full indices, in dof order.
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn dof_of_full(&self, full: usize) -> Option<usize> {
        self.dof_of[full]
    }

    /// Element index ranges `[x, y]` covered by the support of a full index.
    pub fn support(&self, full: usize) -> [Range<usize>; 2] {
        let (c, i, j) = self.locate(full);
        [self.kinds[c][0].support(&self.knots[0], i), self.kinds[c][1].support(&self.knots[1], j)]
    }

    pub fn n_elems(&self) -> [usize; 2] {
        [self.knots[0].n_elems(), self.knots[1].n_elems()]
    }

    /// Component values (no pullback) of `Σ coeffs[d] β_d` at `(x, y)`.
    pub fn evaluate(&self, coeffs: &[f64], x: f64, y: f64) -> Result<Vec<f64>, FormError> {
        Ok(self.evaluate_with_gradient(coeffs, x, y)?.into_iter().map(|v| v[0]).collect())
    }

    /// Per component `[value, ∂x, ∂y]` of `Σ coeffs[d] β_d` at `(x, y)`.
    pub fn evaluate_with_gradient(&self, coeffs: &[f64], x: f64, y: f64) -> Result<Vec<[f64; 3]>, FormError> {
        self.check_len(coeffs)?;
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(FormError::OutOfDomain(x, y));
        }
        let mut out = Vec::with_capacity(self.n_components());
        for c in 0..self.n_components() {
            let [kx, ky] = self.kinds[c];
            let ex = kx.eval(&self.knots[0], x, 1)?;
            let ey = ky.eval(&self.knots[1], y, 1)?;
            let mut acc = [0.0; 3];
            for (b, _) in ey.values() {
                for (a, _) in ex.values() {
                    let Some(d) = self.dof_of[self.full_index(c, a, b)] else { continue };
                    let (vx, dx) = (ex.get(a, 0), ex.get(a, 1));
                    let (vy, dy) = (ey.get(b, 0), ey.get(b, 1));
                    acc[0] += coeffs[d] * vx * vy;
                    acc[1] += coeffs[d] * dx * vy;
                    acc[2] += coeffs[d] * vx * dy;
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<(), FormError> {
        if coeffs.len() != self.dim() {
            return Err(FormError::DimensionMismatch { expected: self.dim(), got: coeffs.len() });
        }
        Ok(())
    }

    /// Matrix of the exterior derivative into the (k+1)-forms of the same
    /// complex, restricted to the boundary-retained dofs of both spaces.
    pub fn derivative_matrix(&self) -> Result<SignedSparseMatrix, FormError> {
        if self.k >= 2 {
            return Err(FormError::InvalidFormDegree(self.k + 1));
        }
        let target = FormSpace::new(self.k + 1, self.knots.clone(), self.orientation, self.bc)?;
        let full = full_incidence(self.k, self.orientation, self.knots[0].dim(), self.knots[1].dim());
        Ok(full.restrict(target.retained(), self.retained()))
    }
}

fn keeps(kind: UniKind, i: usize, n: usize) -> bool {
    kind == UniKind::CurrySchoenberg || (i != 0 && i + 1 != n)
}

/// Univariate difference matrix `G` with `d/dx Σ c_b B_b = Σ_j (G c)_j D_j`.
pub fn difference_matrix(m: usize) -> SignedSparseMatrix {
    let one = Rational::one();
    let trips = (0..m - 1).flat_map(|j| [(j, j, -one), (j, j + 1, one)]);
    SignedSparseMatrix::from_triplets(m - 1, m, trips)
}

/// Incidence matrix of d^k on the full (unrestricted) tensor grid with `m1 × m2`
/// vertices.
pub fn full_incidence(k: usize, orientation: Orientation, m1: usize, m2: usize) -> SignedSparseMatrix {
    let gx = difference_matrix(m1);
    let gy = difference_matrix(m2);
    let ix = SignedSparseMatrix::identity(m1);
    let iy = SignedSparseMatrix::identity(m2);
    let ix1 = SignedSparseMatrix::identity(m1 - 1);
    let iy1 = SignedSparseMatrix::identity(m2 - 1);
    let neg = -Rational::one();
    match (k, orientation) {
        (0, Orientation::Standard) => SignedSparseMatrix::vstack(&[&iy.kron(&gx), &gy.kron(&ix)]),
        (0, Orientation::Rotated) => SignedSparseMatrix::vstack(&[&gy.kron(&ix), &iy.kron(&gx).scale(neg)]),
        (1, Orientation::Standard) => SignedSparseMatrix::hstack(&[&gy.kron(&ix1).scale(neg), &iy1.kron(&gx)]),
        (1, Orientation::Rotated) => SignedSparseMatrix::hstack(&[&iy1.kron(&gx), &gy.kron(&ix1)]),
        _ => panic!("no incidence matrix for form degree {k}"),
    }
}

/// Entity kinds of a 2D Greville grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entity {
    Vertex { i: usize, j: usize },
    /// Edge from vertex `(i, j)` to `(i + 1, j)`.
    XEdge { i: usize, j: usize },
    /// Edge from vertex `(i, j)` to `(i, j + 1)`.
    YEdge { i: usize, j: usize },
    Cell { i: usize, j: usize },
}

/// Cartesian grid through the Greville sites of a 0-form space.
#[derive(Clone, Debug)]
pub struct GrevilleGrid {
    knots: [KnotVector; 2],
    xs: Vec<f64>,
    ys: Vec<f64>,
}

pub fn build_greville_grid(space0: &FormSpace) -> Result<GrevilleGrid, FormError> {
    if space0.form_degree() != 0 {
        return Err(FormError::InvalidFormDegree(space0.form_degree()));
    }
    Ok(GrevilleGrid::new(space0.knots().clone()))
}

impl GrevilleGrid {
    pub fn new(knots: [KnotVector; 2]) -> Self {
        let xs = knots[0].greville_sites();
        let ys = knots[1].greville_sites();
        Self { knots, xs, ys }
    }

    pub fn knots(&self) -> &[KnotVector; 2] {
        &self.knots
    }

    pub fn vertex_coords(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    /// Vertices per direction.
    pub fn shape(&self) -> [usize; 2] {
        [self.xs.len(), self.ys.len()]
    }

    pub fn n_vertices(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn n_edges(&self) -> usize {
        let [a, b] = self.shape();
        (a - 1) * b + a * (b - 1)
    }

    pub fn n_cells(&self) -> usize {
        let [a, b] = self.shape();
        (a - 1) * (b - 1)
    }

    /// Geometric entity attached to a full basis index of a form space.
    pub fn entity(&self, space: &FormSpace, full: usize) -> Entity {
        let (c, i, j) = space.locate(full);
        match space.form_degree() {
            0 => Entity::Vertex { i, j },
            2 => Entity::Cell { i, j },
            _ => match space.kinds(c) {
                [UniKind::CurrySchoenberg, UniKind::Spline] => Entity::XEdge { i, j },
                _ => Entity::YEdge { i, j },
            },
        }
    }

    pub fn incidence_matrix(&self, k: usize, orientation: Orientation, bc: bool) -> Result<SignedSparseMatrix, FormError> {
        incidence_matrix(self, k, orientation, bc)
    }
}

/// Matrix of d^k between the (boundary-restricted) k- and (k+1)-form bases,
/// equal to the signed incidence matrix of the Greville grid.
pub fn incidence_matrix(
    grid: &GrevilleGrid,
    k: usize,
    orientation: Orientation,
    bc: bool,
) -> Result<SignedSparseMatrix, FormError> {
    if k > 1 {
        return Err(FormError::InvalidFormDegree(k));
    }
    FormSpace::new(k, grid.knots.clone(), orientation, bc)?.derivative_matrix()
}

/// Coefficients of `d ω` for a k-form `ω` with coefficients `coeffs`.
pub fn apply_derivative(space: &FormSpace, coeffs: &[f64]) -> Result<Vec<f64>, FormError> {
    space.check_len(coeffs)?;
    Ok(space.derivative_matrix()?.mul_vec_f64(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splines1d::make_uniform_open_knots;
    use crate::topology::matrix_rank;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn knots_6x5() -> [KnotVector; 2] {
        [make_uniform_open_knots(2, 6).unwrap(), make_uniform_open_knots(2, 5).unwrap()]
    }

    fn unit(p: usize, n: usize) -> [KnotVector; 2] {
        [make_uniform_open_knots(p, n).unwrap(), make_uniform_open_knots(p, n).unwrap()]
    }

    #[test]
    fn dimensions_without_bc() {
        let dims: Vec<usize> = (0..3)
            .map(|k| FormSpace::new(k, knots_6x5(), Orientation::Standard, false).unwrap().dim())
            .collect();
        assert_eq!(dims, vec![56, 97, 42]);
        let x1 = FormSpace::new(1, knots_6x5(), Orientation::Standard, false).unwrap();
        assert_eq!(x1.shape(0), [7, 7]);
        assert_eq!(x1.shape(1), [8, 6]);
        assert_eq!(x1.degrees(0), [1, 2]);
        assert_eq!(x1.degrees(1), [2, 1]);
    }

    #[test]
    fn dimensions_with_bc() {
        let sp: Vec<FormSpace> =
            (0..3).map(|k| FormSpace::new(k, knots_6x5(), Orientation::Standard, true).unwrap()).collect();
        assert_eq!(sp.iter().map(FormSpace::dim).collect::<Vec<_>>(), vec![30, 71, 42]);
        assert_eq!(30 - 71 + 42, 1);
        let rot = FormSpace::new(1, knots_6x5(), Orientation::Rotated, true).unwrap();
        assert_eq!(rot.dim(), 71);
    }

    #[test]
    fn lowest_order_collapses_to_grid_counts() {
        // p = 1: vertices, edges, cells of the n x n Bézier mesh
        let n = 3;
        let dims: Vec<usize> =
            (0..3).map(|k| FormSpace::new(k, unit(1, n), Orientation::Standard, false).unwrap().dim()).collect();
        assert_eq!(dims, vec![(n + 1) * (n + 1), 2 * n * (n + 1), n * n]);
        let grid = GrevilleGrid::new(unit(1, n));
        let kv = make_uniform_open_knots(1, n).unwrap();
        let breaks: Vec<f64> = kv.breakpoints().iter().map(|b| crate::sparse::to_f64(*b)).collect();
        assert_eq!(grid.vertex_coords().0, breaks.as_slice());
    }

    #[test]
    fn greville_grid_counts() {
        let s0 = FormSpace::new(0, knots_6x5(), Orientation::Standard, false).unwrap();
        let g = build_greville_grid(&s0).unwrap();
        assert_eq!(g.shape(), [8, 7]);
        assert_eq!(g.n_edges(), 97);
        assert_eq!(g.n_cells(), 42);
        let g = GrevilleGrid::new(unit(1, 1));
        assert_eq!((g.n_vertices(), g.n_edges(), g.n_cells()), (4, 4, 1));
        let s1 = FormSpace::new(1, knots_6x5(), Orientation::Standard, false).unwrap();
        assert_eq!(g_entity(&s1, 0), Entity::XEdge { i: 0, j: 0 });
        assert_eq!(g_entity(&s1, 49), Entity::YEdge { i: 0, j: 0 });
        assert!(build_greville_grid(&s1).is_err());
    }

    fn g_entity(s: &FormSpace, full: usize) -> Entity {
        GrevilleGrid::new(s.knots().clone()).entity(s, full)
    }

    #[test]
    fn single_cell_ranks() {
        let g = GrevilleGrid::new(unit(1, 1));
        for o in [Orientation::Standard, Orientation::Rotated] {
            let d0 = g.incidence_matrix(0, o, false).unwrap();
            let d1 = g.incidence_matrix(1, o, false).unwrap();
            assert!(d1.mul(&d0).is_zero());
            assert_eq!(matrix_rank(&d0), 3);
            assert_eq!(matrix_rank(&d1), 1);
        }
    }

    #[test]
    fn cell_boundary_orientation() {
        // 1 cell: +1 bottom, +1 right, -1 top, -1 left
        let g = GrevilleGrid::new(unit(1, 1));
        let d1 = g.incidence_matrix(1, Orientation::Standard, false).unwrap();
        let s1 = FormSpace::new(1, unit(1, 1), Orientation::Standard, false).unwrap();
        for (_, col, v) in d1.triplets() {
            let expect = match g.entity(&s1, col) {
                Entity::XEdge { j: 0, .. } | Entity::YEdge { i: 1, .. } => 1,
                _ => -1,
            };
            assert_eq!(v, Rational::from_integer(expect));
        }
        assert_eq!(d1.nnz(), 4);
    }

    #[test]
    fn exact_sequence_with_bc() {
        let g = GrevilleGrid::new(knots_6x5());
        for o in [Orientation::Standard, Orientation::Rotated] {
            let d0 = g.incidence_matrix(0, o, true).unwrap();
            let d1 = g.incidence_matrix(1, o, true).unwrap();
            assert!(d1.mul(&d0).is_zero());
            let r0 = matrix_rank(&d0);
            let r1 = matrix_rank(&d1);
            assert_eq!(d0.ncols() - r0, 0);
            assert_eq!(d1.ncols() - r1, r0);
            assert_eq!(d1.nrows() - r1, 1);
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let s0 = FormSpace::new(0, unit(3, 4), Orientation::Standard, false).unwrap();
        let grad = apply_derivative(&s0, &vec![1.0; s0.dim()]).unwrap();
        assert!(grad.iter().all(|v| *v == 0.0));
        assert!(matches!(apply_derivative(&s0, &[1.0]), Err(FormError::DimensionMismatch { .. })));
    }

    #[test]
    fn derivative_matches_pointwise_differentiation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let knots = [make_uniform_open_knots(3, 4).unwrap(), make_uniform_open_knots(2, 3).unwrap()];
        for o in [Orientation::Standard, Orientation::Rotated] {
            for bc in [false, true] {
                let s0 = FormSpace::new(0, knots.clone(), o, bc).unwrap();
                let s1 = FormSpace::new(1, knots.clone(), o, bc).unwrap();
                let s2 = FormSpace::new(2, knots.clone(), o, bc).unwrap();
                let phi: Vec<f64> = (0..s0.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let u = apply_derivative(&s0, &phi).unwrap();
                let v: Vec<f64> = (0..s1.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let w = apply_derivative(&s1, &v).unwrap();
                for _ in 0..100 {
                    let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
                    let g = s0.evaluate_with_gradient(&phi, x, y).unwrap()[0];
                    let uv = s1.evaluate(&u, x, y).unwrap();
                    let expect = match o {
                        Orientation::Standard => [g[1], g[2]],
                        Orientation::Rotated => [g[2], -g[1]],
                    };
                    assert!((uv[0] - expect[0]).abs() < 1e-11 && (uv[1] - expect[1]).abs() < 1e-11);
                    let vg = s1.evaluate_with_gradient(&v, x, y).unwrap();
                    let dv = match o {
                        Orientation::Standard => vg[1][1] - vg[0][2],
                        Orientation::Rotated => vg[0][1] + vg[1][2],
                    };
                    let wv = s2.evaluate(&w, x, y).unwrap()[0];
                    assert!((wv - dv).abs() < 1e-10, "{wv} vs {dv}");
                }
            }
        }
    }

    #[test]
    fn curl_grad_is_exactly_zero() {
        for p in 1..=4 {
            let g = GrevilleGrid::new(unit(p, 3));
            for o in [Orientation::Standard, Orientation::Rotated] {
                for bc in [false, true] {
                    let d0 = g.incidence_matrix(0, o, bc).unwrap();
                    let d1 = g.incidence_matrix(1, o, bc).unwrap();
                    assert!(d0.is_integral() && d1.is_integral());
                    assert!(d1.mul(&d0).is_zero());
                }
            }
        }
    }

    #[test]
    fn rotated_and_standard_ranks_agree() {
        let g = GrevilleGrid::new(unit(2, 3));
        for k in 0..2 {
            for bc in [false, true] {
                let a = matrix_rank(&g.incidence_matrix(k, Orientation::Standard, bc).unwrap());
                let b = matrix_rank(&g.incidence_matrix(k, Orientation::Rotated, bc).unwrap());
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn locate_inverts_full_index() {
        let s = FormSpace::new(1, knots_6x5(), Orientation::Rotated, false).unwrap();
        for f in 0..s.full_dim() {
            let (c, i, j) = s.locate(f);
            assert_eq!(s.full_index(c, i, j), f);
        }
    }

    #[test]
    fn functions_on_element_match_supports() {
        let kv = make_uniform_open_knots(3, 5).unwrap();
        for kind in [UniKind::Spline, UniKind::CurrySchoenberg] {
            for e in 0..5 {
                let on: Vec<usize> = kind.on_element(&kv, e).collect();
                let by_support: Vec<usize> = (0..kind.dim(&kv)).filter(|&i| kind.support(&kv, i).contains(&e)).collect();
                assert_eq!(on, by_support);
            }
        }
    }
}
