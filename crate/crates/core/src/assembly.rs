//! Galerkin assembly on the hierarchical Bézier mesh.
//!
//! The geometry is a diagonal affine map `F(x̂) = offset + scale ⊙ x̂` from the
//! unit square. Basis functions are evaluated in parametric coordinates and
//! pushed forward per form degree:
//!
//! | form | physical field |
//! |------|----------------|
//! | 0 | `φ̂ ∘ F⁻¹` |
//! | 1, standard | `(û₁ / s₁, û₂ / s₂)` (covariant) |
//! | 1, rotated | `(û₁ / s₂, û₂ / s₁)` (contravariant Piola) |
//! | 2 | `ψ̂ / (s₁ s₂)` |
//!
//! so that grad, curl and div commute with the pullbacks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{build_hier_mesh, ActiveSets, Element, HierarchyError, LevelLadder};
use crate::par;
use crate::quadrature::gauss_legendre;
use crate::sparse::RealSparseMatrix;
use crate::tpcomplex::{FormError, Orientation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("geometry scale must be positive, got {0:?}")]
    InvalidGeometry([f64; 2]),
    #[error("active sets were not built on this ladder")]
    MismatchedLadder,
    #[error("unknown operator kind `{0}`")]
    UnknownKind(String),
    #[error("{kind} needs {expected}")]
    IncompatibleSpaces { kind: OperatorKind, expected: &'static str },
    #[error("boundary data on the {0:?} side, which is not a Dirichlet side")]
    NotDirichlet(Side),
    #[error("point ({0}, {1}) lies outside the domain")]
    OutOfDomain(f64, f64),
    #[error("coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Diagonal affine map of the unit square onto a physical rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryMap {
    scale: [f64; 2],
    offset: [f64; 2],
}

impl GeometryMap {
    pub fn new(scale: [f64; 2], offset: [f64; 2]) -> Result<Self, AssemblyError> {
        if !(scale[0] > 0.0 && scale[1] > 0.0 && scale.iter().all(|s| s.is_finite())) {
            return Err(AssemblyError::InvalidGeometry(scale));
        }
        Ok(Self { scale, offset })
    }

    pub fn unit_square() -> Self {
        Self { scale: [1.0, 1.0], offset: [0.0, 0.0] }
    }

    /// `(0, side)²`.
    pub fn square(side: f64) -> Result<Self, AssemblyError> {
        Self::new([side, side], [0.0, 0.0])
    }

    pub fn scale(&self) -> [f64; 2] {
        self.scale
    }

    pub fn offset(&self) -> [f64; 2] {
        self.offset
    }

    pub fn jacobian_det(&self) -> f64 {
        self.scale[0] * self.scale[1]
    }

    pub fn to_physical(&self, p: [f64; 2]) -> [f64; 2] {
        [self.offset[0] + self.scale[0] * p[0], self.offset[1] + self.scale[1] * p[1]]
    }

    /// Inverse map; points within 1e-12 (relative) of the closed domain are
    /// clamped onto it.
    pub fn to_parametric(&self, x: [f64; 2]) -> Result<[f64; 2], AssemblyError> {
        let mut p = [0.0; 2];
        for a in 0..2 {
            let t = (x[a] - self.offset[a]) / self.scale[a];
            if !(-1e-12..=1.0 + 1e-12).contains(&t) {
                return Err(AssemblyError::OutOfDomain(x[0], x[1]));
            }
            p[a] = t.clamp(0.0, 1.0);
        }
        Ok(p)
    }
}

/// Side of the unit square, named by its parametric position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }

    /// Parametric direction normal to the side.
    fn axis(self) -> usize {
        match self {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        }
    }

    fn at_end(self) -> bool {
        matches!(self, Side::Right | Side::Top)
    }
}

/// Tensor Gauss points of one element, in parametric coordinates, with
/// weights that sum to the physical element measure.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn element(n: usize, bounds: [(f64, f64); 2], geom: &GeometryMap) -> Self {
        let (x, w) = gauss_legendre(n);
        let [(x0, x1), (y0, y1)] = bounds;
        let jac = (x1 - x0) * (y1 - y0) * geom.jacobian_det();
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (ty, wy) in x.iter().zip(&w) {
            for (tx, wx) in x.iter().zip(&w) {
                points.push([x0 + tx * (x1 - x0), y0 + ty * (y1 - y0)]);
                weights.push(wx * wy * jac);
            }
        }
        Self { points, weights }
    }

    /// Gauss points on the face of an element lying on `side`; weights sum to
    /// the physical face length.
    pub fn face(n: usize, bounds: [(f64, f64); 2], side: Side, geom: &GeometryMap) -> Self {
        let (x, w) = gauss_legendre(n);
        let along = 1 - side.axis();
        let (a0, a1) = bounds[along];
        let fixed = if side.at_end() { 1.0 } else { 0.0 };
        let len = (a1 - a0) * geom.scale[along];
        let points = x
            .iter()
            .map(|t| {
                let mut p = [0.0; 2];
                p[side.axis()] = fixed;
                p[along] = a0 + t * (a1 - a0);
                p
            })
            .collect();
        Self { points, weights: w.iter().map(|wi| wi * len).collect() }
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Physical value and gradient of a (possibly vector) field at one point.
/// Scalar fields use component 0 only.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldSample {
    pub value: [f64; 2],
    /// `grad[c][a] = ∂_a value[c]`.
    pub grad: [[f64; 2]; 2],
}

impl FieldSample {
    /// `∂x u₂ − ∂y u₁`.
    pub fn curl(&self) -> f64 {
        self.grad[1][0] - self.grad[0][1]
    }

    pub fn div(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }

    /// Symmetric gradient `[ε₁₁, ε₁₂, ε₂₂]`.
    pub fn sym_grad(&self) -> [f64; 3] {
        [self.grad[0][0], 0.5 * (self.grad[0][1] + self.grad[1][0]), self.grad[1][1]]
    }

    /// `ε(u) n`.
    pub fn traction(&self, n: [f64; 2]) -> [f64; 2] {
        let [e11, e12, e22] = self.sym_grad();
        [e11 * n[0] + e12 * n[1], e12 * n[0] + e22 * n[1]]
    }

    fn dot(&self, other: &FieldSample) -> f64 {
        self.value[0] * other.value[0] + self.value[1] * other.value[1]
    }

    fn sym_grad_dot(&self, other: &FieldSample) -> f64 {
        let [a11, a12, a22] = self.sym_grad();
        let [b11, b12, b22] = other.sym_grad();
        a11 * b11 + 2.0 * a12 * b12 + a22 * b22
    }

    fn add_scaled(&mut self, c: f64, other: &FieldSample) {
        for a in 0..2 {
            self.value[a] += c * other.value[a];
            for b in 0..2 {
                self.grad[a][b] += c * other.grad[a][b];
            }
        }
    }
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Bilinear forms that can be assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `(u, v)` for k-forms of any degree.
    Mass,
    /// `(curl u, curl v)` on curl-conforming 1-forms.
    CurlCurl,
    /// `(grad φ, v)`: rows 1-forms, columns 0-forms.
    GradCoupling,
    /// `(curl u, ψ)`: rows 2-forms, columns curl-conforming 1-forms.
    CurlCoupling,
    /// `(div u, q)`: rows 2-forms, columns div-conforming 1-forms.
    DivCoupling,
    /// `2ν(ε(u), ε(v)) − c(u, v)` with the symmetric Nitsche terms.
    SymGradNitsche,
    /// Gram matrix of the discrete velocity norm.
    VnormGram,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 7] = [
        OperatorKind::Mass,
        OperatorKind::CurlCurl,
        OperatorKind::GradCoupling,
        OperatorKind::CurlCoupling,
        OperatorKind::DivCoupling,
        OperatorKind::SymGradNitsche,
        OperatorKind::VnormGram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Mass => "mass",
            OperatorKind::CurlCurl => "curlcurl",
            OperatorKind::GradCoupling => "grad_coupling",
            OperatorKind::CurlCoupling => "curl_coupling",
            OperatorKind::DivCoupling => "div_coupling",
            OperatorKind::SymGradNitsche => "sym_grad_nitsche",
            OperatorKind::VnormGram => "vnorm_gram",
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, OperatorKind::Mass | OperatorKind::CurlCurl | OperatorKind::SymGradNitsche | OperatorKind::VnormGram)
    }

    fn has_boundary_terms(self) -> bool {
        matches!(self, OperatorKind::SymGradNitsche | OperatorKind::VnormGram)
    }

    // (row space, column space) as (form degree, orientation); None = any.
    fn check(self, rows: &ActiveSets, cols: &ActiveSets) -> Result<(), AssemblyError> {
        use Orientation::{Rotated, Standard};
        let r = (rows.form_degree(), rows.orientation());
        let c = (cols.form_degree(), cols.orientation());
        let ok = match self {
            OperatorKind::Mass => r == c,
            OperatorKind::CurlCurl => r == (1, Standard) && c == r,
            OperatorKind::GradCoupling => r == (1, Standard) && c.0 == 0,
            OperatorKind::CurlCoupling => r.0 == 2 && c == (1, Standard),
            OperatorKind::DivCoupling => r.0 == 2 && c == (1, Rotated),
            OperatorKind::SymGradNitsche | OperatorKind::VnormGram => r == (1, Rotated) && c == r,
        };
        if ok {
            return Ok(());
        }
        let expected = match self {
            OperatorKind::Mass => "equal row and column spaces",
            OperatorKind::CurlCurl => "curl-conforming 1-forms",
            OperatorKind::GradCoupling => "1-forms (rows) and 0-forms (columns)",
            OperatorKind::CurlCoupling => "2-forms (rows) and curl-conforming 1-forms (columns)",
            OperatorKind::DivCoupling => "2-forms (rows) and div-conforming 1-forms (columns)",
            OperatorKind::SymGradNitsche | OperatorKind::VnormGram => "div-conforming 1-forms",
        };
        Err(AssemblyError::IncompatibleSpaces { kind: self, expected })
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = AssemblyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| AssemblyError::UnknownKind(s.to_string()))
    }
}

/// Physical parameters and quadrature control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyParams {
    pub nu: f64,
    /// Nitsche penalty; `None` means `5 · max degree` of the ladder.
    pub c_pen: Option<f64>,
    /// Points added to the default `max degree + 1` Gauss points per direction.
    pub extra_quadrature: usize,
    /// Sides carrying the weak tangential Dirichlet condition.
    pub dirichlet: Vec<Side>,
}

impl Default for AssemblyParams {
    fn default() -> Self {
        Self { nu: 1.0, c_pen: None, extra_quadrature: 0, dirichlet: Side::ALL.to_vec() }
    }
}

impl AssemblyParams {
    pub fn penalty(&self, ladder: &LevelLadder) -> f64 {
        self.c_pen.unwrap_or_else(|| 5.0 * ladder.degree().into_iter().max().unwrap() as f64)
    }

    fn n_points(&self, ladder: &LevelLadder) -> usize {
        ladder.degree().into_iter().max().unwrap() + 1 + self.extra_quadrature
    }
}

/// Shape and dof layout of an assembled space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub form_degree: usize,
    pub orientation: Orientation,
    pub bc: bool,
    pub dim: usize,
    /// Dofs of level ℓ are `level_offsets[ℓ]..level_offsets[ℓ + 1]`.
    pub level_offsets: Vec<usize>,
}

impl SpaceDescriptor {
    pub fn of(sets: &ActiveSets) -> Self {
        let mut level_offsets: Vec<usize> = (0..sets.n_levels()).map(|l| sets.level_range(l).start).collect();
        level_offsets.push(sets.dim());
        Self {
            form_degree: sets.form_degree(),
            orientation: sets.orientation(),
            bc: sets.has_bc(),
            dim: sets.dim(),
            level_offsets,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub kind: OperatorKind,
    pub matrix: RealSparseMatrix,
    pub rows: SpaceDescriptor,
    pub cols: SpaceDescriptor,
}

fn check_ladder(ladder: &LevelLadder, sets: &ActiveSets) -> Result<(), AssemblyError> {
    let same = sets.n_levels() == ladder.n_levels()
        && (0..ladder.n_levels()).all(|l| sets.space(l).knots() == ladder.knots(l));
    if same {
        Ok(())
    } else {
        Err(AssemblyError::MismatchedLadder)
    }
}

/// Active functions that do not vanish on one element, sampled at a list of
/// parametric points.
struct LocalBasis {
    dofs: Vec<usize>,
    /// `samples[f][q]`.
    samples: Vec<Vec<FieldSample>>,
}

// Factor and target component of the push-forward of component `c`.
fn push_forward(k: usize, orientation: Orientation, c: usize, s: [f64; 2]) -> (f64, usize) {
    match (k, orientation, c) {
        (0, _, _) => (1.0, 0),
        (1, Orientation::Standard, c) => (1.0 / s[c], c),
        (1, Orientation::Rotated, c) => (1.0 / s[1 - c], c),
        _ => (1.0 / (s[0] * s[1]), 0),
    }
}

fn local_basis(
    ladder: &LevelLadder,
    sets: &ActiveSets,
    geom: &GeometryMap,
    elem: &Element,
    points: &[[f64; 2]],
) -> Result<LocalBasis, AssemblyError> {
    let s = geom.scale;
    let mut dofs = Vec::new();
    let mut samples = Vec::new();
    for l in 0..=elem.level {
        let shift = elem.level - l;
        let (ex, ey) = (elem.i >> shift, elem.j >> shift);
        let sp = sets.space(l);
        let kv = ladder.knots(l);
        for c in 0..sp.n_components() {
            let [kx, ky] = sp.kinds(c);
            let (xs, ys) = (kx.on_element(&kv[0], ex), ky.on_element(&kv[1], ey));
            let mut here = Vec::new();
            for b in ys.clone() {
                for a in xs.clone() {
                    if let Some(d) = sets.dof(l, sp.full_index(c, a, b)) {
                        here.push((d, a, b));
                    }
                }
            }
            if here.is_empty() {
                continue;
            }
            let (factor, comp) = push_forward(sets.form_degree(), sets.orientation(), c, s);
            let evals: Vec<_> = points
                .iter()
                .map(|p| Ok((kx.eval(&kv[0], p[0], 1)?, ky.eval(&kv[1], p[1], 1)?)))
                .collect::<Result<_, crate::splines1d::SplineError>>()
                .map_err(FormError::from)?;
            for (d, a, b) in here {
                let per_point = evals
                    .iter()
                    .map(|(bx, by)| {
                        let (vx, dx, vy, dy) = (bx.get(a, 0), bx.get(a, 1), by.get(b, 0), by.get(b, 1));
                        let mut f = FieldSample::default();
                        f.value[comp] = factor * vx * vy;
                        f.grad[comp] = [factor * dx * vy / s[0], factor * vx * dy / s[1]];
                        f
                    })
                    .collect();
                dofs.push(d);
                samples.push(per_point);
            }
        }
    }
    Ok(LocalBasis { dofs, samples })
}

fn volume_term(kind: OperatorKind, nu: f64, test: &FieldSample, trial: &FieldSample) -> f64 {
    match kind {
        OperatorKind::Mass => test.dot(trial),
        OperatorKind::CurlCurl => test.curl() * trial.curl(),
        OperatorKind::GradCoupling => dot2(test.value, trial.grad[0]),
        OperatorKind::CurlCoupling => test.value[0] * trial.curl(),
        OperatorKind::DivCoupling => test.value[0] * trial.div(),
        OperatorKind::SymGradNitsche => 2.0 * nu * test.sym_grad_dot(trial),
        OperatorKind::VnormGram => test.sym_grad_dot(trial),
    }
}

struct FaceData {
    normal: [f64; 2],
    h: f64,
    c_pen: f64,
    nu: f64,
}

fn boundary_term(kind: OperatorKind, f: &FaceData, test: &FieldSample, trial: &FieldSample) -> f64 {
    let (tv, tu) = (test.traction(f.normal), trial.traction(f.normal));
    match kind {
        OperatorKind::SymGradNitsche => {
            2.0 * f.nu * (-dot2(tu, test.value) - dot2(tv, trial.value) + f.c_pen / f.h * test.dot(trial))
        }
        OperatorKind::VnormGram => f.h * dot2(tu, tv) + f.c_pen / f.h * test.dot(trial),
        _ => 0.0,
    }
}

// Boundary sides touched by an element, with the physical element size normal
// to each.
fn boundary_faces(ladder: &LevelLadder, elem: &Element, params: &AssemblyParams) -> Vec<Side> {
    let [n1, n2] = ladder.elems(elem.level);
    params
        .dirichlet
        .iter()
        .copied()
        .filter(|side| match side {
            Side::Left => elem.i == 0,
            Side::Right => elem.i + 1 == n1,
            Side::Bottom => elem.j == 0,
            Side::Top => elem.j + 1 == n2,
        })
        .collect()
}

fn face_size(bounds: [(f64, f64); 2], side: Side, geom: &GeometryMap) -> f64 {
    let a = side.axis();
    (bounds[a].1 - bounds[a].0) * geom.scale[a]
}

type Triplets = Vec<(usize, usize, f64)>;

#[allow(clippy::too_many_arguments)]
fn element_triplets(
    kind: OperatorKind,
    ladder: &LevelLadder,
    rows: &ActiveSets,
    cols: &ActiveSets,
    geom: &GeometryMap,
    params: &AssemblyParams,
    bounds: [(f64, f64); 2],
    elem: &Element,
) -> Result<Triplets, AssemblyError> {
    let n = params.n_points(ladder);
    let rule = QuadratureRule::element(n, bounds, geom);
    let test = local_basis(ladder, rows, geom, elem, &rule.points)?;
    let trial = local_basis(ladder, cols, geom, elem, &rule.points)?;
    let mut local = vec![0.0; test.dofs.len() * trial.dofs.len()];
    for (i, ts) in test.samples.iter().enumerate() {
        for (j, us) in trial.samples.iter().enumerate() {
            local[i * trial.dofs.len() + j] =
                rule.weights.iter().zip(ts.iter().zip(us)).map(|(w, (t, u))| w * volume_term(kind, params.nu, t, u)).sum();
        }
    }
    if kind.has_boundary_terms() {
        for side in boundary_faces(ladder, elem, params) {
            let face = QuadratureRule::face(n, bounds, side, geom);
            let data = FaceData {
                normal: side.normal(),
                h: face_size(bounds, side, geom),
                c_pen: params.penalty(ladder),
                nu: params.nu,
            };
            let test = local_basis(ladder, rows, geom, elem, &face.points)?;
            let trial = local_basis(ladder, cols, geom, elem, &face.points)?;
            for (i, ts) in test.samples.iter().enumerate() {
                for (j, us) in trial.samples.iter().enumerate() {
                    local[i * trial.dofs.len() + j] += face
                        .weights
                        .iter()
                        .zip(ts.iter().zip(us))
                        .map(|(w, (t, u))| w * boundary_term(kind, &data, t, u))
                        .sum::<f64>();
                }
            }
        }
    }
    let mut out = Vec::with_capacity(local.len());
    for (i, &r) in test.dofs.iter().enumerate() {
        for (j, &c) in trial.dofs.iter().enumerate() {
            out.push((r, c, local[i * trial.dofs.len() + j]));
        }
    }
    Ok(out)
}

// Elements per parallel work unit; chunk results are merged in chunk order.
const CHUNK: usize = 64;

/// Assembles `kind` with `rows` as test space and `cols` as trial space.
pub fn assemble(
    kind: OperatorKind,
    ladder: &LevelLadder,
    rows: &ActiveSets,
    cols: &ActiveSets,
    geom: &GeometryMap,
    params: &AssemblyParams,
) -> Result<AssembledOperator, AssemblyError> {
    check_ladder(ladder, rows)?;
    check_ladder(ladder, cols)?;
    kind.check(rows, cols)?;
    let mesh = build_hier_mesh(ladder);
    let chunks: Vec<&[Element]> = mesh.elements().chunks(CHUNK).collect();
    let parts = par::map(&chunks, |chunk| -> Result<RealSparseMatrix, AssemblyError> {
        let mut trips = Vec::new();
        for e in chunk.iter() {
            trips.extend(element_triplets(kind, ladder, rows, cols, geom, params, mesh.bounds(e), e)?);
        }
        Ok(RealSparseMatrix::from_triplets(rows.dim(), cols.dim(), trips))
    });
    let mut trips = Vec::new();
    for part in parts {
        trips.extend(part?.triplets());
    }
    Ok(AssembledOperator {
        kind,
        matrix: RealSparseMatrix::from_triplets(rows.dim(), cols.dim(), trips),
        rows: SpaceDescriptor::of(rows),
        cols: SpaceDescriptor::of(cols),
    })
}

/// Square operator on a single space.
pub fn assemble_square(
    kind: OperatorKind,
    ladder: &LevelLadder,
    sets: &ActiveSets,
    geom: &GeometryMap,
    params: &AssemblyParams,
) -> Result<AssembledOperator, AssemblyError> {
    assemble(kind, ladder, sets, sets, geom, params)
}

/// `∫ f · v` for every active function `v`. Scalar forms read `f(x)[0]`.
pub fn load_vector(
    ladder: &LevelLadder,
    sets: &ActiveSets,
    geom: &GeometryMap,
    params: &AssemblyParams,
    f: impl Fn([f64; 2]) -> [f64; 2] + Sync,
) -> Result<Vec<f64>, AssemblyError> {
    check_ladder(ladder, sets)?;
    let mesh = build_hier_mesh(ladder);
    let n = params.n_points(ladder);
    let parts = par::map(mesh.elements(), |e| -> Result<Vec<(usize, f64)>, AssemblyError> {
        let rule = QuadratureRule::element(n, mesh.bounds(e), geom);
        let basis = local_basis(ladder, sets, geom, e, &rule.points)?;
        let fx: Vec<[f64; 2]> = rule.points.iter().map(|&p| f(geom.to_physical(p))).collect();
        Ok(basis
            .dofs
            .iter()
            .zip(&basis.samples)
            .map(|(&d, s)| (d, rule.weights.iter().zip(s.iter().zip(&fx)).map(|(w, (v, g))| w * dot2(v.value, *g)).sum()))
            .collect())
    });
    let mut out = vec![0.0; sets.dim()];
    for part in parts {
        for (d, v) in part? {
            out[d] += v;
        }
    }
    Ok(out)
}

/// Nitsche load `L(v) = ∫_Γ 2ν((ε(v)n)·u_B − C_pen/h_F v·u_B)` for constant
/// boundary velocities given per side; unlisted Dirichlet sides carry zero.
pub fn nitsche_load(
    ladder: &LevelLadder,
    sets: &ActiveSets,
    geom: &GeometryMap,
    params: &AssemblyParams,
    data: &[(Side, [f64; 2])],
) -> Result<Vec<f64>, AssemblyError> {
    check_ladder(ladder, sets)?;
    if (sets.form_degree(), sets.orientation()) != (1, Orientation::Rotated) {
        return Err(AssemblyError::IncompatibleSpaces {
            kind: OperatorKind::SymGradNitsche,
            expected: "div-conforming 1-forms",
        });
    }
    if let Some(&(side, _)) = data.iter().find(|(side, _)| !params.dirichlet.contains(side)) {
        return Err(AssemblyError::NotDirichlet(side));
    }
    let mesh = build_hier_mesh(ladder);
    let n = params.n_points(ladder);
    let c_pen = params.penalty(ladder);
    let mut out = vec![0.0; sets.dim()];
    for e in mesh.elements() {
        let bounds = mesh.bounds(e);
        for side in boundary_faces(ladder, e, params) {
            let Some(&(_, ub)) = data.iter().find(|(s, _)| *s == side) else { continue };
            let face = QuadratureRule::face(n, bounds, side, geom);
            let h = face_size(bounds, side, geom);
            let basis = local_basis(ladder, sets, geom, e, &face.points)?;
            for (&d, s) in basis.dofs.iter().zip(&basis.samples) {
                out[d] += face
                    .weights
                    .iter()
                    .zip(s)
                    .map(|(w, v)| w * 2.0 * params.nu * (dot2(v.traction(side.normal()), ub) - c_pen / h * dot2(v.value, ub)))
                    .sum::<f64>();
            }
        }
    }
    Ok(out)
}

/// A hierarchical field ready for point evaluation.
#[derive(Clone, Debug)]
pub struct HierField<'a> {
    ladder: &'a LevelLadder,
    sets: &'a ActiveSets,
    geom: GeometryMap,
    /// Coefficients by level and full index.
    coeffs: Vec<Vec<f64>>,
}

impl<'a> HierField<'a> {
    pub fn new(
        ladder: &'a LevelLadder,
        sets: &'a ActiveSets,
        geom: GeometryMap,
        coeffs: &[f64],
    ) -> Result<Self, AssemblyError> {
        check_ladder(ladder, sets)?;
        if coeffs.len() != sets.dim() {
            return Err(AssemblyError::DimensionMismatch { expected: sets.dim(), got: coeffs.len() });
        }
        let mut by_level: Vec<Vec<f64>> = (0..sets.n_levels()).map(|l| vec![0.0; sets.space(l).full_dim()]).collect();
        for (dof, (l, f)) in sets.functions().enumerate() {
            by_level[l][f] = coeffs[dof];
        }
        Ok(Self { ladder, sets, geom, coeffs: by_level })
    }

    /// Value and gradient at a physical point of the closed domain.
    pub fn sample(&self, x: [f64; 2]) -> Result<FieldSample, AssemblyError> {
        let p = self.geom.to_parametric(x)?;
        let s = self.geom.scale;
        let mut out = FieldSample::default();
        for (l, coeffs) in self.coeffs.iter().enumerate() {
            let sp = self.sets.space(l);
            let kv = self.ladder.knots(l);
            for c in 0..sp.n_components() {
                let [kx, ky] = sp.kinds(c);
                let bx = kx.eval(&kv[0], p[0], 1).map_err(FormError::from)?;
                let by = ky.eval(&kv[1], p[1], 1).map_err(FormError::from)?;
                let (factor, comp) = push_forward(sp.form_degree(), sp.orientation(), c, s);
                for (b, vy) in by.values() {
                    for (a, vx) in bx.values() {
                        let w = coeffs[sp.full_index(c, a, b)];
                        if w == 0.0 {
                            continue;
                        }
                        let mut f = FieldSample::default();
                        f.value[comp] = factor * vx * vy;
                        f.grad[comp] = [factor * bx.get(a, 1) * vy / s[0], factor * vx * by.get(b, 1) / s[1]];
                        out.add_scaled(w, &f);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Physical values (with pullbacks) of the field `coeffs` at `points`.
pub fn evaluate_field(
    ladder: &LevelLadder,
    sets: &ActiveSets,
    geom: &GeometryMap,
    coeffs: &[f64],
    points: &[[f64; 2]],
) -> Result<Vec<FieldSample>, AssemblyError> {
    let field = HierField::new(ladder, sets, *geom, coeffs)?;
    points.iter().map(|&x| field.sample(x)).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::hierarchy::{build_active_sets, hier_diff_matrix};
    use crate::topology::CellSet;

    fn two_level(p: usize, n: usize) -> LevelLadder {
        let omega = CellSet::from_fn(n, n, |i, j| (1..4).contains(&i) && (2..5).contains(&j));
        LevelLadder::new([p, p], [n, n], vec![omega]).unwrap()
    }

    fn sets(ladder: &LevelLadder, k: usize, o: Orientation, bc: bool) -> ActiveSets {
        build_active_sets(ladder, k, o, bc).unwrap()
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn single_two_form_has_unit_mass() {
        let ladder = LevelLadder::uniform([1, 1], [1, 1]).unwrap();
        let s2 = sets(&ladder, 2, Orientation::Standard, false);
        let m = assemble_square(OperatorKind::Mass, &ladder, &s2, &GeometryMap::unit_square(), &AssemblyParams::default())
            .unwrap();
        assert_eq!(m.matrix.nrows(), 1);
        assert!((m.matrix.get(0, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_weights_sum_to_measure() {
        let g = GeometryMap::new([2.0, 3.0], [1.0, -1.0]).unwrap();
        let r = QuadratureRule::element(4, [(0.25, 0.5), (0.0, 0.5)], &g);
        assert!((r.measure() - 0.25 * 2.0 * 0.5 * 3.0).abs() < 1e-14);
        assert!(r.weights.iter().all(|&w| w > 0.0));
        let f = QuadratureRule::face(3, [(0.25, 0.5), (0.0, 0.5)], Side::Left, &g);
        assert!((f.measure() - 1.5).abs() < 1e-14);
        assert!(f.points.iter().all(|p| p[0] == 0.0));
    }

    // L² projection; exact for fields in the space.
    fn project(
        ladder: &LevelLadder,
        s: &ActiveSets,
        geom: &GeometryMap,
        f: impl Fn([f64; 2]) -> [f64; 2] + Sync,
    ) -> Vec<f64> {
        let params = AssemblyParams::default();
        let m = assemble_square(OperatorKind::Mass, ladder, s, geom, &params).unwrap().matrix.to_dense();
        let rhs = load_vector(ladder, s, geom, &params, f).unwrap();
        use faer::linalg::solvers::Solve;
        let llt = m.llt(faer::Side::Lower).unwrap();
        let x = llt.solve(faer::Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]));
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }

    #[test]
    fn constant_field_energies() {
        let ladder = two_level(3, 6);
        let geom = GeometryMap::square(PI).unwrap();
        let params = AssemblyParams::default();
        let s1 = sets(&ladder, 1, Orientation::Standard, false);
        let u = project(&ladder, &s1, &geom, |_| [1.0, 0.0]);
        let m1 = assemble_square(OperatorKind::Mass, &ladder, &s1, &geom, &params).unwrap();
        let cc = assemble_square(OperatorKind::CurlCurl, &ladder, &s1, &geom, &params).unwrap();
        assert!((m1.matrix.bilinear(&u, &u) - PI * PI).abs() < 1e-10);
        assert!(cc.matrix.bilinear(&u, &u).abs() < 1e-10);
        let at = evaluate_field(&ladder, &s1, &geom, &u, &[[0.1, 3.0], [PI, PI]]).unwrap();
        assert!(at.iter().all(|v| (v.value[0] - 1.0).abs() < 1e-10 && v.value[1].abs() < 1e-10));
    }

    #[test]
    fn gradient_fields_have_no_curl_energy() {
        let ladder = two_level(3, 6);
        let geom = GeometryMap::new([2.0, 0.5], [0.0, 0.0]).unwrap();
        let params = AssemblyParams::default();
        let s0 = sets(&ladder, 0, Orientation::Standard, true);
        let s1 = sets(&ladder, 1, Orientation::Standard, true);
        let d0 = RealSparseMatrix::from_exact(&hier_diff_matrix(&ladder, &s0, &s1).unwrap());
        let cc = assemble_square(OperatorKind::CurlCurl, &ladder, &s1, &geom, &params).unwrap();
        let phi = random_vec(s0.dim(), 3);
        let u = d0.mul_vec(&phi);
        assert!(cc.matrix.bilinear(&u, &u).abs() < 1e-12 * cc.matrix.max_abs_entry().max(1.0));
    }

    #[test]
    fn couplings_equal_mass_times_incidence() {
        let ladder = two_level(2, 5);
        let geom = GeometryMap::new([1.5, 0.75], [0.3, 0.1]).unwrap();
        let params = AssemblyParams::default();
        for o in [Orientation::Standard, Orientation::Rotated] {
            let s0 = sets(&ladder, 0, o, true);
            let s1 = sets(&ladder, 1, o, true);
            let s2 = sets(&ladder, 2, o, true);
            let d0 = RealSparseMatrix::from_exact(&hier_diff_matrix(&ladder, &s0, &s1).unwrap()).to_dense();
            let d1 = RealSparseMatrix::from_exact(&hier_diff_matrix(&ladder, &s1, &s2).unwrap()).to_dense();
            let m1 = assemble_square(OperatorKind::Mass, &ladder, &s1, &geom, &params).unwrap().matrix.to_dense();
            let m2 = assemble_square(OperatorKind::Mass, &ladder, &s2, &geom, &params).unwrap().matrix.to_dense();
            let (second, first) = match o {
                Orientation::Standard => (OperatorKind::CurlCoupling, Some(OperatorKind::GradCoupling)),
                Orientation::Rotated => (OperatorKind::DivCoupling, None),
            };
            let c = assemble(second, &ladder, &s2, &s1, &geom, &params).unwrap().matrix.to_dense();
            assert!((&c - &m2 * &d1).norm_max() < 1e-12 * c.norm_max().max(1.0));
            if let Some(kind) = first {
                let g = assemble(kind, &ladder, &s1, &s0, &geom, &params).unwrap().matrix.to_dense();
                assert!((&g - &m1 * &d0).norm_max() < 1e-12 * g.norm_max().max(1.0));
            }
        }
    }

    #[test]
    fn rotated_potentials_are_divergence_free() {
        let ladder = two_level(3, 6);
        let geom = GeometryMap::unit_square();
        let params = AssemblyParams::default();
        let s0 = sets(&ladder, 0, Orientation::Rotated, true);
        let s1 = sets(&ladder, 1, Orientation::Rotated, true);
        let s2 = sets(&ladder, 2, Orientation::Rotated, true);
        let d0 = RealSparseMatrix::from_exact(&hier_diff_matrix(&ladder, &s0, &s1).unwrap());
        let b = assemble(OperatorKind::DivCoupling, &ladder, &s2, &s1, &geom, &params).unwrap();
        let u = d0.mul_vec(&random_vec(s0.dim(), 5));
        let r = b.matrix.mul_vec(&u);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn extra_quadrature_changes_nothing() {
        let ladder = two_level(3, 6);
        let geom = GeometryMap::new([1.0, 2.0], [0.0, 0.0]).unwrap();
        let s1 = sets(&ladder, 1, Orientation::Rotated, true);
        let base = AssemblyParams::default();
        let more = AssemblyParams { extra_quadrature: 1, ..AssemblyParams::default() };
        for kind in [OperatorKind::Mass, OperatorKind::SymGradNitsche, OperatorKind::VnormGram] {
            let a = assemble_square(kind, &ladder, &s1, &geom, &base).unwrap().matrix;
            let b = assemble_square(kind, &ladder, &s1, &geom, &more).unwrap().matrix;
            assert!(kind.is_symmetric());
            assert!(a.asymmetry() < 1e-13 * a.max_abs_entry());
            let diff = a.triplets().fold(0.0f64, |m, (r, c, v)| m.max((v - b.get(r, c)).abs()));
            assert!(diff < 1e-13 * a.max_abs_entry().max(1.0), "{kind}: {diff}");
        }
    }

    #[test]
    fn curl_matches_finite_differences() {
        let ladder = two_level(3, 6);
        let geom = GeometryMap::new([2.0, 1.0], [-1.0, 0.5]).unwrap();
        let s1 = sets(&ladder, 1, Orientation::Standard, false);
        let coeffs = random_vec(s1.dim(), 11);
        let field = HierField::new(&ladder, &s1, geom, &coeffs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-5;
        for _ in 0..50 {
            let x = [rng.random_range(-0.9..0.9), rng.random_range(0.6..1.4)];
            let f = field.sample(x).unwrap();
            let px = field.sample([x[0] + h, x[1]]).unwrap();
            let mx = field.sample([x[0] - h, x[1]]).unwrap();
            let py = field.sample([x[0], x[1] + h]).unwrap();
            let my = field.sample([x[0], x[1] - h]).unwrap();
            let fd = (px.value[1] - mx.value[1]) / (2.0 * h) - (py.value[0] - my.value[0]) / (2.0 * h);
            assert!((f.curl() - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{} vs {fd}", f.curl());
        }
    }

    #[test]
    fn two_form_integral_matches_quadrature() {
        let ladder = two_level(2, 5);
        let geom = GeometryMap::new([3.0, 2.0], [0.0, 0.0]).unwrap();
        let params = AssemblyParams::default();
        let s2 = sets(&ladder, 2, Orientation::Standard, false);
        let ones = load_vector(&ladder, &s2, &geom, &params, |_| [1.0, 0.0]).unwrap();
        let c = random_vec(s2.dim(), 8);
        let total: f64 = ones.iter().zip(&c).map(|(a, b)| a * b).sum();
        // midpoint sum of evaluate_field on a fine grid
        let n = 600;
        let pts: Vec<[f64; 2]> =
            (0..n * n).map(|k| [3.0 * ((k % n) as f64 + 0.5) / n as f64, 2.0 * ((k / n) as f64 + 0.5) / n as f64]).collect();
        let vals = evaluate_field(&ladder, &s2, &geom, &c, &pts).unwrap();
        let approx: f64 = vals.iter().map(|v| v.value[0]).sum::<f64>() * 6.0 / (n * n) as f64;
        assert!((total - approx).abs() < 1e-3 * (1.0 + total.abs()), "{total} vs {approx}");
    }

    #[test]
    fn interpolated_constant_evaluates_to_one() {
        // level-0 B-splines form a partition of unity
        let uniform = LevelLadder::uniform([3, 3], [6, 6]).unwrap();
        let u0 = sets(&uniform, 0, Orientation::Standard, false);
        let pts = [[0.0, 0.0], [0.3, 0.7], [1.0, 1.0]];
        let vals = evaluate_field(&uniform, &u0, &GeometryMap::unit_square(), &vec![1.0; u0.dim()], &pts).unwrap();
        assert!(vals.iter().all(|v| (v.value[0] - 1.0).abs() < 1e-14));
        // hierarchical space: coefficients of the projected constant
        let ladder = two_level(3, 6);
        let s0 = sets(&ladder, 0, Orientation::Standard, false);
        let g = GeometryMap::unit_square();
        let c = project(&ladder, &s0, &g, |_| [1.0, 0.0]);
        let vals = evaluate_field(&ladder, &s0, &g, &c, &pts).unwrap();
        assert!(vals.iter().all(|v| (v.value[0] - 1.0).abs() < 1e-10 && v.grad[0][0].abs() < 1e-9));
    }

    #[test]
    fn rejects_mismatched_spaces() {
        let ladder = two_level(2, 5);
        let other = LevelLadder::uniform([2, 2], [5, 5]).unwrap();
        let s1 = sets(&other, 1, Orientation::Standard, true);
        let p = AssemblyParams::default();
        let g = GeometryMap::unit_square();
        assert_eq!(
            assemble_square(OperatorKind::Mass, &ladder, &s1, &g, &p).unwrap_err(),
            AssemblyError::MismatchedLadder
        );
        assert!(matches!(
            assemble_square(OperatorKind::VnormGram, &other, &s1, &g, &p),
            Err(AssemblyError::IncompatibleSpaces { .. })
        ));
        assert!(matches!("stiffness".parse::<OperatorKind>(), Err(AssemblyError::UnknownKind(_))));
        let r1 = sets(&other, 1, Orientation::Rotated, true);
        let p = AssemblyParams { dirichlet: vec![Side::Top], ..AssemblyParams::default() };
        assert_eq!(nitsche_load(&other, &r1, &g, &p, &[(Side::Left, [0.0, 1.0])]), Err(AssemblyError::NotDirichlet(Side::Left)));
    }
}
