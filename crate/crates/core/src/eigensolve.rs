//! Dense symmetric eigensolvers and saddle-point solves, plus the Maxwell,
//! inf-sup and lid-driven cavity pipelines built on them.

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, MatRef, Par, Side as FaerSide};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{
    assemble, assemble_square, load_vector, nitsche_load, AssemblyError, AssemblyParams, GeometryMap, HierField,
    OperatorKind, Side,
};
use crate::hierarchy::{build_active_sets, hier_diff_matrix, ActiveSets, HierarchyError, LevelLadder};
use crate::sparse::RealSparseMatrix;
use crate::tpcomplex::Orientation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dense eigensolver did not converge")]
    NoConvergence,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("constraint block is rank deficient: rank {rank} of {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("inf-sup eigenproblem has a negative eigenvalue {0:e}")]
    NegativeInfSup(f64),
    #[error("saddle-point system is singular (relative residual {residual:e}, inertia {inertia:?})")]
    Singular { residual: f64, inertia: Inertia },
}

/// Ascending eigenvalues of a symmetric (generalized) eigenproblem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Columns are M-orthonormal eigenvectors, when requested.
    #[serde(skip)]
    pub vectors: Option<Mat<f64>>,
    /// Relative zero tolerance: `|λ| < zero_tol · max |λ|` counts as zero.
    pub zero_tol: f64,
}

/// Zero tolerance relative to the largest eigenvalue magnitude.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

impl Spectrum {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn threshold(&self) -> f64 {
        self.zero_tol * self.max_abs()
    }

    pub fn zero_count(&self) -> usize {
        let t = self.threshold();
        self.values.iter().filter(|v| v.abs() < t).count()
    }

    /// Eigenvalues above the zero threshold, ascending.
    pub fn nonzero(&self) -> Vec<f64> {
        let t = self.threshold();
        self.values.iter().copied().filter(|v| v.abs() >= t).collect()
    }

    pub fn with_zero_tol(mut self, zero_tol: f64) -> Self {
        self.zero_tol = zero_tol;
        self
    }
}

fn check_square(name: &str, a: MatRef<'_, f64>, n: usize) -> Result<(), EigenError> {
    if a.nrows() != n || a.ncols() != n {
        return Err(EigenError::Shape(format!("{name} is {}x{}, expected {n}x{n}", a.nrows(), a.ncols())));
    }
    Ok(())
}

fn symmetrize(a: &mut Mat<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// All eigenpairs of `A x = λ M x` by Cholesky reduction `L⁻¹ A L⁻ᵀ`.
pub fn sym_gen_eig(a: MatRef<'_, f64>, m: MatRef<'_, f64>, vectors: bool) -> Result<Spectrum, EigenError> {
    let n = m.nrows();
    check_square("A", a, n)?;
    check_square("M", m, n)?;
    let llt = m.llt(FaerSide::Lower).map_err(|_| EigenError::NotPositiveDefinite)?;
    let l = llt.L();
    let mut x = a.to_owned();
    solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    symmetrize(&mut c);
    if !vectors {
        let mut values = c.self_adjoint_eigenvalues(FaerSide::Lower).map_err(|_| EigenError::NoConvergence)?;
        values.sort_by(f64::total_cmp);
        return Ok(Spectrum { values, vectors: None, zero_tol: DEFAULT_ZERO_TOL });
    }
    let evd = c.self_adjoint_eigen(FaerSide::Lower).map_err(|_| EigenError::NoConvergence)?;
    let values: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    // x = L⁻ᵀ y
    let mut vecs = evd.U().to_owned();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.transpose(), vecs.as_mut(), Par::Seq);
    Ok(Spectrum { values, vectors: Some(vecs), zero_tol: DEFAULT_ZERO_TOL })
}

/// Orthonormal basis (columns) of the null space of `c` (rows are
/// constraints), by a full SVD. Singular values below `1e-10 · σ_max` count
/// as zero; `expected_rank` rejects silently deficient constraints.
pub fn null_space(c: MatRef<'_, f64>, expected_rank: Option<usize>) -> Result<Mat<f64>, EigenError> {
    let n = c.ncols();
    let svd = c.transpose().to_owned().svd().map_err(|_| EigenError::NoConvergence)?;
    let k = c.nrows().min(n);
    let s: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();
    let smax = s.iter().fold(0.0f64, |m, v| m.max(*v));
    let rank = s.iter().filter(|&&v| v > 1e-10 * smax).count();
    if let Some(expected) = expected_rank {
        if rank != expected {
            return Err(EigenError::RankDeficient { rank, expected });
        }
    }
    // cᵀ = U Σ Vᵀ; the columns of U beyond the rank span null(c).
    Ok(svd.U().subcols(rank, n - rank).to_owned())
}

/// Basis of `{x : mᵀ x = 0}` from one Householder reflection.
pub fn deflation_basis(m: &[f64]) -> Mat<f64> {
    let n = m.len();
    let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut w = m.to_vec();
    w[0] += if m[0] >= 0.0 { norm } else { -norm };
    let ww: f64 = w.iter().map(|v| v * v).sum();
    Mat::from_fn(n, n - 1, |i, j| {
        let delta = if i == j + 1 { 1.0 } else { 0.0 };
        delta - 2.0 * w[i] * w[j + 1] / ww
    })
}

fn congruence(z: MatRef<'_, f64>, a: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = z.transpose() * (a * z);
    symmetrize(&mut out);
    out
}

/// Which mixed Maxwell formulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedForm {
    /// Curl-curl with a Lagrange multiplier enforcing weak divergence-freeness.
    GradConstraint,
    /// 1-form/2-form pairing on 2-forms modulo constants.
    CurlPairing,
}

/// Operators of the Maxwell problem on one hierarchical complex.
#[derive(Clone, Debug)]
pub struct MaxwellOperators {
    pub curlcurl: Mat<f64>,
    pub mass1: Mat<f64>,
    pub mass2: Mat<f64>,
    /// `(grad φ_j, v_i)`, rows 1-forms.
    pub grad_coupling: Mat<f64>,
    /// `(curl u_j, ψ_i)`, rows 2-forms.
    pub curl_coupling: Mat<f64>,
    /// `∫ ψ_i`, the 2-form mass applied to the constant.
    pub ones2: Vec<f64>,
}

impl MaxwellOperators {
    pub fn assemble(ladder: &LevelLadder, geom: &GeometryMap) -> Result<Self, EigenError> {
        let p = AssemblyParams::default();
        let s0 = build_active_sets(ladder, 0, Orientation::Standard, true)?;
        let s1 = build_active_sets(ladder, 1, Orientation::Standard, true)?;
        let s2 = build_active_sets(ladder, 2, Orientation::Standard, true)?;
        let dense = |op: crate::assembly::AssembledOperator| op.matrix.to_dense();
        Ok(Self {
            curlcurl: dense(assemble_square(OperatorKind::CurlCurl, ladder, &s1, geom, &p)?),
            mass1: dense(assemble_square(OperatorKind::Mass, ladder, &s1, geom, &p)?),
            mass2: dense(assemble_square(OperatorKind::Mass, ladder, &s2, geom, &p)?),
            grad_coupling: dense(assemble(OperatorKind::GradCoupling, ladder, &s1, &s0, geom, &p)?),
            curl_coupling: dense(assemble(OperatorKind::CurlCoupling, ladder, &s2, &s1, geom, &p)?),
            ones2: load_vector(ladder, &s2, geom, &p, |_| [1.0, 0.0])?,
        })
    }
}

/// Eigenvalues of the mixed problem; zeros are counted with the default
/// tolerance.
pub fn mixed_eig(form: MixedForm, ops: &MaxwellOperators) -> Result<Spectrum, EigenError> {
    match form {
        MixedForm::GradConstraint => {
            // u ∈ null(Gᵀ): weakly orthogonal to every discrete gradient
            let n0 = ops.grad_coupling.ncols();
            let z = null_space(ops.grad_coupling.transpose(), Some(n0))?;
            sym_gen_eig(congruence(z.as_ref(), ops.curlcurl.as_ref()).as_ref(), congruence(z.as_ref(), ops.mass1.as_ref()).as_ref(), false)
        }
        MixedForm::CurlPairing => {
            // u = −M₁⁻¹ Cᵀ φ leaves C M₁⁻¹ Cᵀ φ = λ M₂ φ on mean-free φ
            let llt = ops.mass1.llt(FaerSide::Lower).map_err(|_| EigenError::NotPositiveDefinite)?;
            let ct = ops.curl_coupling.transpose().to_owned();
            let x = llt.solve(&ct);
            let s = &ops.curl_coupling * &x;
            let z = deflation_basis(&ops.ones2);
            sym_gen_eig(congruence(z.as_ref(), s.as_ref()).as_ref(), congruence(z.as_ref(), ops.mass2.as_ref()).as_ref(), false)
        }
    }
}

/// Eigenvalues `m² + n²` (m, n ≥ 0, not both zero) of the curl-curl operator
/// with tangential boundary conditions on `(0, π)²`, ascending with
/// multiplicity.
pub fn maxwell_square_eigenvalues(count: usize) -> Vec<f64> {
    maxwell_rectangle_eigenvalues(count, [std::f64::consts::PI; 2])
}

/// Same on `(0, a) × (0, b)`: `(mπ/a)² + (nπ/b)²`.
pub fn maxwell_rectangle_eigenvalues(count: usize, [a, b]: [f64; 2]) -> Vec<f64> {
    let k = [std::f64::consts::PI / a, std::f64::consts::PI / b].map(|w| w * w);
    let mut cap = k[0].min(k[1]);
    loop {
        let mmax = (cap / k[0]).sqrt() as usize;
        let nmax = (cap / k[1]).sqrt() as usize;
        // integer pairs first so squares stay exact
        let mut v: Vec<(usize, usize)> = (0..=mmax)
            .flat_map(|m| (0..=nmax).map(move |n| (m, n)))
            .filter(|&(m, n)| (m, n) != (0, 0) && (m * m) as f64 * k[0] + (n * n) as f64 * k[1] <= cap)
            .collect();
        if v.len() >= count {
            let value = |&(m, n): &(usize, usize)| (m * m) as f64 * k[0] + (n * n) as f64 * k[1];
            v.sort_by(|x, y| value(x).total_cmp(&value(y)));
            return v.iter().take(count).map(value).collect();
        }
        cap *= 2.0;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedEigenvalue {
    /// 1-based rank in the ascending computed list.
    pub rank: usize,
    pub computed: f64,
    pub exact: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpuriousReport {
    pub matched: Vec<MatchedEigenvalue>,
    /// 1-based ranks in the ascending computed list.
    pub spurious: Vec<usize>,
    pub rel_tol: f64,
}

impl SpuriousReport {
    pub fn is_spurious_free(&self) -> bool {
        self.spurious.is_empty()
    }
}

/// Greedy ascending match of the first `n_first` computed eigenvalues against
/// the exact multiset: each computed value takes the smallest unused exact
/// value within `rel_tol`, otherwise it is spurious.
pub fn detect_spurious(computed: &[f64], exact: &[f64], n_first: usize, rel_tol: f64) -> SpuriousReport {
    let mut exact: Vec<f64> = exact.to_vec();
    exact.sort_by(f64::total_cmp);
    let mut used = vec![false; exact.len()];
    let mut matched = Vec::new();
    let mut spurious = Vec::new();
    for (rank, &c) in computed.iter().take(n_first).enumerate() {
        let hit = (0..exact.len()).find(|&k| !used[k] && ((c - exact[k]) / exact[k]).abs() <= rel_tol);
        match hit {
            Some(k) => {
                used[k] = true;
                matched.push(MatchedEigenvalue { rank: rank + 1, computed: c, exact: exact[k], relative_error: (c - exact[k]) / exact[k] });
            }
            None => spurious.push(rank + 1),
        }
    }
    SpuriousReport { matched, spurious, rel_tol }
}

/// Everything reported for one Maxwell mesh.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaxwellReport {
    pub dims: [usize; 3],
    /// Nonzero eigenvalues of the curl-curl problem, ascending.
    pub eigenvalues: Vec<f64>,
    /// Full spectra of the two mixed forms, ascending.
    pub grad_constraint: Vec<f64>,
    pub curl_pairing: Vec<f64>,
    pub zeros_grad_constraint: usize,
    pub zeros_curl_pairing: usize,
    pub spurious: SpuriousReport,
}

pub fn maxwell_report(
    ladder: &LevelLadder,
    geom: &GeometryMap,
    zero_tol: f64,
    n_first: usize,
    rel_tol: f64,
) -> Result<MaxwellReport, EigenError> {
    let ops = MaxwellOperators::assemble(ladder, geom)?;
    let main = sym_gen_eig(ops.curlcurl.as_ref(), ops.mass1.as_ref(), false)?.with_zero_tol(zero_tol);
    let grad = mixed_eig(MixedForm::GradConstraint, &ops)?.with_zero_tol(zero_tol);
    let curl = mixed_eig(MixedForm::CurlPairing, &ops)?.with_zero_tol(zero_tol);
    let eigenvalues = main.nonzero();
    let exact = maxwell_rectangle_eigenvalues(n_first.max(1) * 2, geom.scale());
    let spurious = detect_spurious(&eigenvalues, &exact, n_first, rel_tol);
    Ok(MaxwellReport {
        dims: [ops.grad_coupling.ncols(), ops.mass1.nrows(), ops.mass2.nrows()],
        eigenvalues,
        zeros_grad_constraint: grad.zero_count(),
        zeros_curl_pairing: curl.zero_count(),
        grad_constraint: grad.values,
        curl_pairing: curl.values,
        spurious,
    })
}

/// `β = sqrt(λ_min)` of `B A⁻¹ Bᵀ q = λ M_p q` over `{q : mᵀ q = 0}`, where
/// `m` is the pressure mass applied to the constant.
pub fn infsup_constant(
    b: MatRef<'_, f64>,
    a: MatRef<'_, f64>,
    mp: MatRef<'_, f64>,
    m: &[f64],
) -> Result<f64, EigenError> {
    let (np, nv) = (b.nrows(), b.ncols());
    check_square("A", a, nv)?;
    check_square("Mp", mp, np)?;
    if m.len() != np {
        return Err(EigenError::Shape(format!("constant vector has length {}, expected {np}", m.len())));
    }
    let llt = a.llt(FaerSide::Lower).map_err(|_| EigenError::NotPositiveDefinite)?;
    // S = (L⁻¹ Bᵀ)ᵀ (L⁻¹ Bᵀ)
    let mut w = b.transpose().to_owned();
    solve_lower_triangular_in_place(llt.L(), w.as_mut(), Par::Seq);
    let s = w.transpose() * &w;
    drop(w);
    let z = deflation_basis(m);
    let spec = sym_gen_eig(congruence(z.as_ref(), s.as_ref()).as_ref(), congruence(z.as_ref(), mp).as_ref(), false)?;
    let lmin = spec.values[0];
    if lmin < -1e-10 {
        return Err(EigenError::NegativeInfSup(lmin));
    }
    Ok(lmin.max(0.0).sqrt())
}

/// Velocity/pressure operators of the Stokes discretization: rotated
/// 1-forms for velocity, 2-forms for pressure.
#[derive(Clone, Debug)]
pub struct StokesOperators {
    pub velocity: ActiveSets,
    pub pressure: ActiveSets,
    /// `2ν(ε(u), ε(v)) − c(u, v)`.
    pub stiffness: RealSparseMatrix,
    /// `(q_i, div u_j)`.
    pub div: RealSparseMatrix,
    pub vnorm: RealSparseMatrix,
    pub pressure_mass: RealSparseMatrix,
    /// `∫ q_i`.
    pub pressure_ones: Vec<f64>,
}

impl StokesOperators {
    pub fn assemble(ladder: &LevelLadder, geom: &GeometryMap, params: &AssemblyParams) -> Result<Self, EigenError> {
        let velocity = build_active_sets(ladder, 1, Orientation::Rotated, true)?;
        let pressure = build_active_sets(ladder, 2, Orientation::Rotated, true)?;
        let stiffness = assemble_square(OperatorKind::SymGradNitsche, ladder, &velocity, geom, params)?.matrix;
        let div = assemble(OperatorKind::DivCoupling, ladder, &pressure, &velocity, geom, params)?.matrix;
        let vnorm = assemble_square(OperatorKind::VnormGram, ladder, &velocity, geom, params)?.matrix;
        let pressure_mass = assemble_square(OperatorKind::Mass, ladder, &pressure, geom, params)?.matrix;
        let pressure_ones = load_vector(ladder, &pressure, geom, params, |_| [1.0, 0.0])?;
        Ok(Self { velocity, pressure, stiffness, div, vnorm, pressure_mass, pressure_ones })
    }

    pub fn infsup(&self) -> Result<f64, EigenError> {
        infsup_constant(
            self.div.to_dense().as_ref(),
            self.vnorm.to_dense().as_ref(),
            self.pressure_mass.to_dense().as_ref(),
            &self.pressure_ones,
        )
    }
}

/// Inf-sup constant of the Stokes pair on the unit square.
pub fn infsup_for_ladder(ladder: &LevelLadder, params: &AssemblyParams) -> Result<f64, EigenError> {
    StokesOperators::assemble(ladder, &GeometryMap::unit_square(), params)?.infsup()
}

/// Signs of the pivots of a symmetric factorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

fn lblt_inertia(lblt: &faer::linalg::solvers::Lblt<f64>, tol: f64) -> Inertia {
    let d = lblt.B_diag();
    let e = lblt.B_subdiag();
    let n = d.dim();
    let mut out = Inertia::default();
    let mut i = 0;
    while i < n {
        if i + 1 < n && e[i] != 0.0 {
            let det = d[i] * d[i + 1] - e[i] * e[i];
            if det.abs() < tol * tol {
                out.zero += 1;
                out.positive += usize::from(d[i] + d[i + 1] > 0.0);
                out.negative += usize::from(d[i] + d[i + 1] < 0.0);
            } else if det < 0.0 {
                out.positive += 1;
                out.negative += 1;
            } else if d[i] > 0.0 {
                out.positive += 2;
            } else {
                out.negative += 2;
            }
            i += 2;
        } else {
            if d[i].abs() < tol {
                out.zero += 1;
            } else if d[i] > 0.0 {
                out.positive += 1;
            } else {
                out.negative += 1;
            }
            i += 1;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct StokesSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub inertia: Inertia,
    /// `‖K x − f‖ / ‖f‖` of the full block system.
    pub residual: f64,
}

/// Solves
///
/// ```text
/// [ A  −Bᵀ  0 ] [u]   [f]
/// [−B   0   m ] [p] = [0]
/// [ 0   mᵀ  0 ] [μ]   [0]
/// ```
///
/// by a dense Bunch–Kaufman factorization. The last row fixes the pressure
/// mean; `μ` vanishes because the constant is not in the range of `B`.
pub fn stokes_solve(ops: &StokesOperators, rhs: &[f64]) -> Result<StokesSolution, EigenError> {
    let (nv, np) = (ops.velocity.dim(), ops.pressure.dim());
    if rhs.len() != nv {
        return Err(EigenError::Shape(format!("load has length {}, expected {nv}", rhs.len())));
    }
    let n = nv + np + 1;
    let mut k = Mat::<f64>::zeros(n, n);
    for (r, c, v) in ops.stiffness.triplets() {
        k[(r, c)] = v;
    }
    for (r, c, v) in ops.div.triplets() {
        k[(nv + r, c)] = -v;
        k[(c, nv + r)] = -v;
    }
    for (r, &v) in ops.pressure_ones.iter().enumerate() {
        k[(nv + r, n - 1)] = v;
        k[(n - 1, nv + r)] = v;
    }
    let f = Mat::from_fn(n, 1, |i, _| if i < nv { rhs[i] } else { 0.0 });
    let lblt = k.lblt(FaerSide::Lower);
    let scale = k.norm_max();
    let inertia = lblt_inertia(&lblt, 1e-13 * scale);
    let x = lblt.solve(&f);
    let res = (&k * &x - &f).norm_l2();
    let fnorm = f.norm_l2();
    let residual = if fnorm > 0.0 { res / fnorm } else { res };
    if !residual.is_finite() || residual > 1e-8 || inertia.zero > 0 {
        return Err(EigenError::Singular { residual, inertia });
    }
    Ok(StokesSolution {
        velocity: (0..nv).map(|i| x[(i, 0)]).collect(),
        pressure: (nv..nv + np).map(|i| x[(i, 0)]).collect(),
        inertia,
        residual,
    })
}

/// Outcome of the lid-driven cavity run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CavityReport {
    pub elements: usize,
    /// Velocity + pressure unknowns of the boundary-free spaces.
    pub unknowns: usize,
    /// Unknowns actually solved for (normal velocity removed on the walls).
    pub solved_unknowns: usize,
    pub probe: [f64; 2],
    pub vorticity: f64,
    /// `‖div u_h‖_{L²}` from the exact divergence coefficients.
    pub div_l2: f64,
    /// Largest `|div u_h|` at the sample points.
    pub div_max_sampled: f64,
    pub residual: f64,
}

/// Creeping lid-driven cavity on the unit square: no-slip walls, unit
/// tangential velocity on the top side.
pub fn lid_driven_cavity(
    ladder: &LevelLadder,
    params: &AssemblyParams,
    probe: [f64; 2],
    div_samples: &[[f64; 2]],
) -> Result<CavityReport, EigenError> {
    let geom = GeometryMap::unit_square();
    let ops = StokesOperators::assemble(ladder, &geom, params)?;
    // f = 0, so the right-hand side is −L(v)
    let load = nitsche_load(ladder, &ops.velocity, &geom, params, &[(Side::Top, [1.0, 0.0])])?;
    let rhs: Vec<f64> = load.iter().map(|v| -v).collect();
    let sol = stokes_solve(&ops, &rhs)?;
    let field = HierField::new(ladder, &ops.velocity, geom, &sol.velocity)?;
    let vorticity = field.sample(probe)?.curl();
    let d1 = RealSparseMatrix::from_exact(&hier_diff_matrix(ladder, &ops.velocity, &ops.pressure)?);
    let div_coeffs = d1.mul_vec(&sol.velocity);
    let div_l2 = ops.pressure_mass.bilinear(&div_coeffs, &div_coeffs).max(0.0).sqrt();
    let div_max_sampled = div_samples
        .iter()
        .map(|&x| field.sample(x).map(|s| s.div().abs()))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let free_v = build_active_sets(ladder, 1, Orientation::Rotated, false)?;
    let free_p = build_active_sets(ladder, 2, Orientation::Rotated, false)?;
    Ok(CavityReport {
        elements: crate::hierarchy::build_hier_mesh(ladder).len(),
        unknowns: free_v.dim() + free_p.dim(),
        solved_unknowns: ops.velocity.dim() + ops.pressure.dim(),
        probe,
        vorticity,
        div_l2,
        div_max_sampled,
        residual: sol.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_operators_give_unit_spectrum() {
        let m = Mat::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.5 / (1.0 + (i + j) as f64) });
        let s = sym_gen_eig(m.as_ref(), m.as_ref(), false).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn diagonal_pencil() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { [2.0, 8.0][i] } else { 0.0 });
        let id = Mat::<f64>::identity(2, 2);
        let s = sym_gen_eig(a.as_ref(), id.as_ref(), true).unwrap();
        assert!((s.values[0] - 2.0).abs() < 1e-14 && (s.values[1] - 8.0).abs() < 1e-14);
        assert_eq!(s.zero_count(), 0);
    }

    #[test]
    fn eigenpair_residuals() {
        let n = 30;
        let a = Mat::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let m = Mat::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 } else if i.abs_diff(j) == 1 { 0.5 } else { 0.0 });
        let s = sym_gen_eig(a.as_ref(), m.as_ref(), true).unwrap();
        let x = s.vectors.as_ref().unwrap();
        let anorm = a.norm_l2();
        for (k, &lam) in s.values.iter().enumerate() {
            let r = &a * x.col(k) - (&m * x.col(k)) * faer::Scale(lam);
            assert!(r.norm_l2() <= 1e-8 * anorm);
        }
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn not_spd_mass_is_reported() {
        let a = Mat::<f64>::identity(2, 2);
        let m = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert_eq!(sym_gen_eig(a.as_ref(), m.as_ref(), false).unwrap_err(), EigenError::NotPositiveDefinite);
    }

    #[test]
    fn deflation_basis_is_orthonormal_complement() {
        let m = [3.0, -1.0, 2.0, 0.5];
        let z = deflation_basis(&m);
        let g = z.transpose() * &z;
        assert!((g - Mat::<f64>::identity(3, 3)).norm_max() < 1e-14);
        for j in 0..3 {
            let d: f64 = (0..4).map(|i| m[i] * z[(i, j)]).sum();
            assert!(d.abs() < 1e-14);
        }
    }

    #[test]
    fn square_spectrum_list() {
        assert_eq!(maxwell_square_eigenvalues(10), vec![1.0, 1.0, 2.0, 4.0, 4.0, 5.0, 5.0, 8.0, 9.0, 9.0]);
        assert_eq!(maxwell_square_eigenvalues(25)[21..], [25.0, 25.0, 25.0, 25.0]);
    }

    #[test]
    fn spurious_matching() {
        let exact = maxwell_square_eigenvalues(12);
        let r = detect_spurious(&exact, &exact, 10, 0.02);
        assert!(r.is_spurious_free());
        let computed = [1.0, 1.0, 2.0, 3.0, 4.0, 4.0];
        let r = detect_spurious(&computed, &exact, 6, 0.02);
        assert_eq!(r.spurious, vec![4]);
        assert_eq!(r.matched.len(), 5);
    }

    #[test]
    fn zero_lid_gives_zero_flow() {
        let ladder = LevelLadder::uniform([2, 2], [4, 4]).unwrap();
        let ops = StokesOperators::assemble(&ladder, &GeometryMap::unit_square(), &AssemblyParams::default()).unwrap();
        let sol = stokes_solve(&ops, &vec![0.0; ops.velocity.dim()]).unwrap();
        assert!(sol.velocity.iter().chain(&sol.pressure).all(|v| *v == 0.0));
        // the pressure constant and the mean multiplier pair into one positive
        // and one negative direction
        assert_eq!(sol.inertia, Inertia { positive: ops.velocity.dim() + 1, negative: ops.pressure.dim(), zero: 0 });
    }

    #[test]
    fn uniform_infsup_is_nu_invariant() {
        let ladder = LevelLadder::uniform([3, 3], [4, 4]).unwrap();
        let b1 = infsup_for_ladder(&ladder, &AssemblyParams::default()).unwrap();
        let b2 = infsup_for_ladder(&ladder, &AssemblyParams { nu: 7.0, ..AssemblyParams::default() }).unwrap();
        assert!(b1 > 0.1 && b1 < 1.0);
        assert!((b1 - b2).abs() < 1e-10);
    }
}
