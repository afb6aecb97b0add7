//! Multilevel structure: nested subdomains, active hierarchical bases,
//! hierarchical Bézier mesh, Greville subgrids and hierarchical differential
//! matrices.
//!
//! Level ℓ uses the knot vectors of level 0 dyadically refined ℓ times.
//! Subdomain Ω_ℓ (ℓ ≥ 1) is stored as a set of level-(ℓ−1) elements, so it is
//! a union of previous-level elements by construction. Ω₀ is the whole
//! square and Ω_{N+1} is empty. All containment tests are exact integer
//! computations on element index rectangles.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use num_traits::Zero;
use thiserror::Error;

use crate::par;
use crate::sparse::{Rational, SignedSparseMatrix};
use crate::splines1d::{curry_schoenberg_two_scale, make_uniform_open_knots, two_scale_matrix, KnotVector};
use crate::topology::CellSet;
use crate::tpcomplex::{FormError, FormSpace, Orientation, UniKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HierarchyError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("subdomain {level} has shape {got:?}, expected {expected:?}")]
    ShapeMismatch { level: usize, expected: [usize; 2], got: [usize; 2] },
    #[error("subdomain {level} is not contained in subdomain {}: element ({i}, {j})", level - 1)]
    NotNested { level: usize, i: usize, j: usize },
    #[error("function {index} of level {level} could not be resolved into active functions")]
    BrokenActiveSet { level: usize, index: usize },
    #[error("mismatched ladders or form degrees")]
    Mismatch,
}

// A subdomain at its native resolution with 2D prefix sums.
#[derive(Clone, Debug)]
struct Region {
    res_level: usize,
    set: CellSet,
    prefix: Vec<u32>,
}

impl Region {
    fn new(res_level: usize, set: CellSet) -> Self {
        let [n1, n2] = set.shape();
        let w = n1 + 1;
        let mut prefix = vec![0u32; w * (n2 + 1)];
        for j in 0..n2 {
            for i in 0..n1 {
                prefix[(i + 1) + w * (j + 1)] = prefix[i + w * (j + 1)] + prefix[(i + 1) + w * j] - prefix[i + w * j]
                    + set.contains(i, j) as u32;
            }
        }
        Self { res_level, set, prefix }
    }

    fn count(&self, x: Range<usize>, y: Range<usize>) -> u64 {
        let w = self.set.shape()[0] + 1;
        let p = |i: usize, j: usize| self.prefix[i + w * j] as u64;
        p(x.end, y.end) + p(x.start, y.start) - p(x.start, y.end) - p(x.end, y.start)
    }

    // Rectangle of level-`level` elements mapped to native elements; the
    // second value is the area of the mapped rectangle.
    fn native(&self, level: usize, r: &[Range<usize>; 2]) -> ([Range<usize>; 2], u64) {
        let map = |x: &Range<usize>| {
            if level >= self.res_level {
                let s = level - self.res_level;
                (x.start >> s)..((x.end + (1 << s) - 1) >> s)
            } else {
                let s = self.res_level - level;
                (x.start << s)..(x.end << s)
            }
        };
        let (a, b) = (map(&r[0]), map(&r[1]));
        let area = (a.len() * b.len()) as u64;
        ([a, b], area)
    }

    fn contains_rect(&self, level: usize, r: &[Range<usize>; 2]) -> bool {
        let ([a, b], area) = self.native(level, r);
        self.count(a, b) == area
    }

    fn intersects_rect(&self, level: usize, r: &[Range<usize>; 2]) -> bool {
        let ([a, b], _) = self.native(level, r);
        self.count(a, b) > 0
    }
}

/// Levels `0..=N` of dyadically refined tensor-product spaces with nested
/// subdomains `Ω₁ ⊃ … ⊃ Ω_N`.
#[derive(Clone, Debug)]
pub struct LevelLadder {
    degree: [usize; 2],
    level0: [usize; 2],
    knots: Vec<[KnotVector; 2]>,
    regions: Vec<Region>,
}

impl LevelLadder {
    /// `subdomains[ℓ − 1]` is Ω_ℓ as a set of level-(ℓ−1) elements.
    pub fn new(degree: [usize; 2], level0: [usize; 2], subdomains: Vec<CellSet>) -> Result<Self, HierarchyError> {
        let mut knots = vec![[
            make_uniform_open_knots(degree[0], level0[0]).map_err(FormError::from)?,
            make_uniform_open_knots(degree[1], level0[1]).map_err(FormError::from)?,
        ]];
        let mut regions: Vec<Region> = Vec::with_capacity(subdomains.len());
        for (idx, set) in subdomains.into_iter().enumerate() {
            let level = idx + 1;
            let expected = [level0[0] << idx, level0[1] << idx];
            if set.shape() != expected {
                return Err(HierarchyError::ShapeMismatch { level, expected, got: set.shape() });
            }
            if let Some(prev) = regions.last() {
                if let Some((i, j)) = set.iter().find(|&(i, j)| !prev.set.contains(i / 2, j / 2)) {
                    return Err(HierarchyError::NotNested { level, i, j });
                }
            }
            let last = knots.last().unwrap();
            knots.push([last[0].dyadic_refine(), last[1].dyadic_refine()]);
            regions.push(Region::new(idx, set));
        }
        Ok(Self { degree, level0, knots, regions })
    }

    /// Single-level ladder.
    pub fn uniform(degree: [usize; 2], level0: [usize; 2]) -> Result<Self, HierarchyError> {
        Self::new(degree, level0, Vec::new())
    }

    pub fn degree(&self) -> [usize; 2] {
        self.degree
    }

    pub fn level0(&self) -> [usize; 2] {
        self.level0
    }

    /// Number of levels `N + 1`.
    pub fn n_levels(&self) -> usize {
        self.knots.len()
    }

    /// Index `N` of the finest level.
    pub fn finest(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn knots(&self, level: usize) -> &[KnotVector; 2] {
        &self.knots[level]
    }

    /// Elements per direction at `level`.
    pub fn elems(&self, level: usize) -> [usize; 2] {
        [self.level0[0] << level, self.level0[1] << level]
    }

    /// Ω_ℓ as a set of level-(ℓ−1) elements, for `1 ≤ ℓ ≤ N`.
    pub fn subdomain(&self, l: usize) -> Option<&CellSet> {
        l.checked_sub(1).and_then(|i| self.regions.get(i)).map(|r| &r.set)
    }

    pub fn subdomains(&self) -> Vec<CellSet> {
        self.regions.iter().map(|r| r.set.clone()).collect()
    }

    /// Ladder restricted to levels `0..=level`.
    pub fn truncate(&self, level: usize) -> LevelLadder {
        let regions: Vec<Region> = self.regions.iter().take(level).cloned().collect();
        Self { degree: self.degree, level0: self.level0, knots: self.knots[..=level].to_vec(), regions }
    }

    /// Whether the level-`level` element rectangle lies in Ω_l.
    pub fn omega_contains(&self, l: usize, level: usize, rect: &[Range<usize>; 2]) -> bool {
        match l {
            0 => true,
            _ => self.regions.get(l - 1).is_some_and(|r| r.contains_rect(level, rect)),
        }
    }

    /// Whether the level-`level` element rectangle meets Ω_l.
    pub fn omega_intersects(&self, l: usize, level: usize, rect: &[Range<usize>; 2]) -> bool {
        match l {
            0 => true,
            _ => self.regions.get(l - 1).is_some_and(|r| r.intersects_rect(level, rect)),
        }
    }

    /// Ω_l as a set of level-`level` elements, `level ≥ l − 1`.
    pub fn omega_at(&self, l: usize, level: usize) -> CellSet {
        let [n1, n2] = self.elems(level);
        CellSet::from_fn(n1, n2, |i, j| self.omega_contains(l, level, &[i..i + 1, j..j + 1]))
    }

    pub fn space(&self, level: usize, k: usize, orientation: Orientation, bc: bool) -> Result<FormSpace, FormError> {
        Ok(FormSpace::new(k, self.knots[level].clone(), orientation, bc)?.with_level(level))
    }
}

/// Active hierarchical basis of one form degree.
#[derive(Clone, Debug)]
pub struct ActiveSets {
    k: usize,
    orientation: Orientation,
    bc: bool,
    spaces: Vec<FormSpace>,
    active: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    dof_of: Vec<Vec<Option<usize>>>,
}

/// Level-ℓ function is active iff its support lies in Ω_ℓ but not in Ω_{ℓ+1}.
pub fn build_active_sets(
    ladder: &LevelLadder,
    k: usize,
    orientation: Orientation,
    bc: bool,
) -> Result<ActiveSets, HierarchyError> {
    let spaces: Vec<FormSpace> =
        (0..ladder.n_levels()).map(|l| ladder.space(l, k, orientation, bc)).collect::<Result<_, _>>()?;
    let active: Vec<Vec<usize>> = spaces
        .iter()
        .enumerate()
        .map(|(l, sp)| {
            sp.retained()
                .iter()
                .copied()
                .filter(|&f| {
                    let s = sp.support(f);
                    ladder.omega_contains(l, l, &s) && !ladder.omega_contains(l + 1, l, &s)
                })
                .collect()
        })
        .collect();
    Ok(ActiveSets::from_parts(k, orientation, bc, spaces, active))
}

/// Active sets by the level-by-level recursion: keep functions of `H_ℓ` whose
/// support is not in Ω_{ℓ+1}, add level-(ℓ+1) functions supported in Ω_{ℓ+1}.
pub fn kraft_active_sets(
    ladder: &LevelLadder,
    k: usize,
    orientation: Orientation,
    bc: bool,
) -> Result<Vec<BTreeSet<(usize, usize)>>, HierarchyError> {
    let sp0 = ladder.space(0, k, orientation, bc)?;
    let mut h: BTreeSet<(usize, usize)> = sp0.retained().iter().map(|&f| (0, f)).collect();
    let mut spaces = vec![sp0];
    let mut history = vec![h.clone()];
    for l in 0..ladder.finest() {
        let next = ladder.space(l + 1, k, orientation, bc)?;
        let coarse: BTreeSet<(usize, usize)> = h
            .iter()
            .copied()
            .filter(|&(lev, f)| !ladder.omega_contains(l + 1, lev, &spaces[lev].support(f)))
            .collect();
        let fine = next
            .retained()
            .iter()
            .copied()
            .filter(|&f| ladder.omega_contains(l + 1, l + 1, &next.support(f)))
            .map(|f| (l + 1, f));
        h = coarse.into_iter().chain(fine).collect();
        spaces.push(next);
        history.push(h.clone());
    }
    Ok(history)
}

impl ActiveSets {
    fn from_parts(k: usize, orientation: Orientation, bc: bool, spaces: Vec<FormSpace>, active: Vec<Vec<usize>>) -> Self {
        let mut offsets = vec![0];
        let mut dof_of = Vec::with_capacity(spaces.len());
        for (sp, act) in spaces.iter().zip(&active) {
            let base = *offsets.last().unwrap();
            let mut map = vec![None; sp.full_dim()];
            for (n, &f) in act.iter().enumerate() {
                map[f] = Some(base + n);
            }
            dof_of.push(map);
            offsets.push(base + act.len());
        }
        Self { k, orientation, bc, spaces, active, offsets, dof_of }
    }

    pub fn form_degree(&self) -> usize {
        self.k
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn has_bc(&self) -> bool {
        self.bc
    }

    pub fn n_levels(&self) -> usize {
        self.spaces.len()
    }

    pub fn space(&self, level: usize) -> &FormSpace {
        &self.spaces[level]
    }

    /// Active full indices of `level`, ascending.
    pub fn active(&self, level: usize) -> &[usize] {
        &self.active[level]
    }

    /// Hierarchical dimension.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Dofs of `level` occupy `level_range(level)`.
    pub fn level_range(&self, level: usize) -> Range<usize> {
        self.offsets[level]..self.offsets[level + 1]
    }

    pub fn dof(&self, level: usize, full: usize) -> Option<usize> {
        self.dof_of[level][full]
    }

    /// `(level, full index)` of a hierarchical dof.
    pub fn function(&self, dof: usize) -> (usize, usize) {
        let l = self.offsets.partition_point(|&o| o <= dof) - 1;
        (l, self.active[l][dof - self.offsets[l]])
    }

    /// All active `(level, full index)` pairs in dof order.
    pub fn functions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.active.iter().enumerate().flat_map(|(l, a)| a.iter().map(move |&f| (l, f)))
    }

    pub fn as_set(&self) -> BTreeSet<(usize, usize)> {
        self.functions().collect()
    }
}

/// Univariate two-scale matrices between consecutive levels.
#[derive(Clone, Debug)]
pub struct TwoScale {
    spline: [SignedSparseMatrix; 2],
    cs: [SignedSparseMatrix; 2],
}

impl TwoScale {
    pub fn new(coarse: &[KnotVector; 2], fine: &[KnotVector; 2]) -> Result<Self, FormError> {
        Ok(Self {
            spline: [two_scale_matrix(&coarse[0], &fine[0])?, two_scale_matrix(&coarse[1], &fine[1])?],
            cs: [curry_schoenberg_two_scale(&coarse[0], &fine[0])?, curry_schoenberg_two_scale(&coarse[1], &fine[1])?],
        })
    }

    pub fn matrix(&self, kind: UniKind, dir: usize) -> &SignedSparseMatrix {
        match kind {
            UniKind::Spline => &self.spline[dir],
            UniKind::CurrySchoenberg => &self.cs[dir],
        }
    }

    /// Fine-level expansion of coarse function `full` of `coarse_space`.
    pub fn children(&self, coarse_space: &FormSpace, fine_space: &FormSpace, full: usize) -> Vec<(usize, Rational)> {
        let (c, i, j) = coarse_space.locate(full);
        let [kx, ky] = coarse_space.kinds(c);
        let rx = self.matrix(kx, 0).row(i);
        let ry = self.matrix(ky, 1).row(j);
        let mut out = Vec::with_capacity(rx.len() * ry.len());
        for &(b, vy) in ry {
            for &(a, vx) in rx {
                out.push((fine_space.full_index(c, a, b), vx * vy));
            }
        }
        out
    }
}

fn two_scales(ladder: &LevelLadder) -> Result<Vec<TwoScale>, FormError> {
    (0..ladder.finest()).map(|l| TwoScale::new(ladder.knots(l), ladder.knots(l + 1))).collect()
}

/// Resolves a level-`level` combination of functions of `sets` into active
/// hierarchical dofs by repeated two-scale refinement.
fn resolve(
    sets: &ActiveSets,
    scales: &[TwoScale],
    level: usize,
    terms: BTreeMap<usize, Rational>,
) -> Result<Vec<(usize, Rational)>, HierarchyError> {
    let mut out: BTreeMap<usize, Rational> = BTreeMap::new();
    let mut current = terms;
    let mut l = level;
    while !current.is_empty() {
        let mut next: BTreeMap<usize, Rational> = BTreeMap::new();
        for (f, c) in current {
            if c.is_zero() {
                continue;
            }
            if let Some(d) = sets.dof(l, f) {
                *out.entry(d).or_insert_with(Rational::zero) += c;
            } else if sets.space(l).dof_of_full(f).is_none() {
                // boundary-dropped functions never occur in the image of retained ones
                return Err(HierarchyError::BrokenActiveSet { level: l, index: f });
            } else {
                let scale = scales.get(l).ok_or(HierarchyError::BrokenActiveSet { level: l, index: f })?;
                for (g, v) in scale.children(sets.space(l), sets.space(l + 1), f) {
                    *next.entry(g).or_insert_with(Rational::zero) += c * v;
                }
            }
        }
        current = next;
        l += 1;
    }
    Ok(out.into_iter().filter(|(_, v)| !v.is_zero()).collect())
}

/// Matrix of d^k from the hierarchical basis `src` to the hierarchical basis
/// `dst` of (k+1)-forms on the same ladder.
pub fn hier_diff_matrix(
    ladder: &LevelLadder,
    src: &ActiveSets,
    dst: &ActiveSets,
) -> Result<SignedSparseMatrix, HierarchyError> {
    if dst.k != src.k + 1 || src.orientation != dst.orientation || src.bc != dst.bc || src.n_levels() != ladder.n_levels() {
        return Err(HierarchyError::Mismatch);
    }
    let scales = two_scales(ladder)?;
    let incidences: Vec<SignedSparseMatrix> = (0..ladder.n_levels())
        .map(|l| {
            let kv = ladder.knots(l);
            crate::tpcomplex::full_incidence(src.k, src.orientation, kv[0].dim(), kv[1].dim()).transpose()
        })
        .collect();
    let columns = par::map_range(src.dim(), |dof| {
        let (l, f) = src.function(dof);
        let terms: BTreeMap<usize, Rational> = incidences[l].row(f).iter().copied().collect();
        resolve(dst, &scales, l, terms)
    });
    let mut trips = Vec::new();
    for (col, entries) in columns.into_iter().enumerate() {
        trips.extend(entries?.into_iter().map(|(row, v)| (row, col, v)));
    }
    Ok(SignedSparseMatrix::from_triplets(dst.dim(), src.dim(), trips))
}

/// Expansion of every hierarchical function in the full basis of `level`
/// (rows: hierarchical dofs, columns: full indices of that level).
pub fn refinement_matrix(
    ladder: &LevelLadder,
    sets: &ActiveSets,
    level: usize,
) -> Result<SignedSparseMatrix, HierarchyError> {
    let scales = two_scales(ladder)?;
    let target = ladder.space(level, sets.k, sets.orientation, false)?;
    let spaces: Vec<FormSpace> =
        (0..=level).map(|l| ladder.space(l, sets.k, sets.orientation, false)).collect::<Result<_, _>>()?;
    let mut trips = Vec::new();
    for (dof, (l, f)) in sets.functions().enumerate() {
        if l > level {
            return Err(HierarchyError::BrokenActiveSet { level: l, index: f });
        }
        let mut cur: BTreeMap<usize, Rational> = BTreeMap::from([(f, Rational::from_integer(1))]);
        for lev in l..level {
            let mut next = BTreeMap::new();
            for (g, c) in cur {
                for (h, v) in scales[lev].children(&spaces[lev], &spaces[lev + 1], g) {
                    *next.entry(h).or_insert_with(Rational::zero) += c * v;
                }
            }
            cur = next;
        }
        trips.extend(cur.into_iter().map(|(g, v)| (dof, g, v)));
    }
    Ok(SignedSparseMatrix::from_triplets(sets.dim(), target.full_dim(), trips))
}

/// Element of the hierarchical Bézier mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    pub level: usize,
    pub i: usize,
    pub j: usize,
}

/// Elements Q of level ℓ with Q ⊂ Ω_ℓ and Q ⊄ Ω_{ℓ+1}.
#[derive(Clone, Debug)]
pub struct HierBezierMesh {
    level0: [usize; 2],
    elements: Vec<Element>,
}

pub fn build_hier_mesh(ladder: &LevelLadder) -> HierBezierMesh {
    let mut elements = Vec::new();
    for l in 0..ladder.n_levels() {
        let [n1, n2] = ladder.elems(l);
        for j in 0..n2 {
            for i in 0..n1 {
                let r = [i..i + 1, j..j + 1];
                if ladder.omega_contains(l, l, &r) && !ladder.omega_intersects(l + 1, l, &r) {
                    elements.push(Element { level: l, i, j });
                }
            }
        }
    }
    HierBezierMesh { level0: ladder.level0(), elements }
}

impl HierBezierMesh {
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Parametric box `[x0, x1] × [y0, y1]` of an element.
    pub fn bounds(&self, e: &Element) -> [(f64, f64); 2] {
        let n1 = (self.level0[0] << e.level) as f64;
        let n2 = (self.level0[1] << e.level) as f64;
        [(e.i as f64 / n1, (e.i + 1) as f64 / n1), (e.j as f64 / n2, (e.j + 1) as f64 / n2)]
    }

    /// Exact total area as a rational.
    pub fn area(&self) -> Rational {
        self.elements.iter().fold(Rational::zero(), |s, e| {
            let den = ((self.level0[0] << e.level) * (self.level0[1] << e.level)) as i128;
            s + Rational::new(1, den)
        })
    }

    /// Largest level difference between two elements sharing an edge.
    pub fn max_level_jump(&self) -> usize {
        let finest = self.elements.iter().map(|e| e.level).max().unwrap_or(0);
        let [n1, n2] = [self.level0[0] << finest, self.level0[1] << finest];
        let mut lev = vec![0usize; n1 * n2];
        for e in &self.elements {
            let s = finest - e.level;
            for j in (e.j << s)..((e.j + 1) << s) {
                for i in (e.i << s)..((e.i + 1) << s) {
                    lev[i + n1 * j] = e.level;
                }
            }
        }
        let mut jump = 0;
        for j in 0..n2 {
            for i in 0..n1 {
                let here = lev[i + n1 * j];
                if i + 1 < n1 {
                    jump = jump.max(here.abs_diff(lev[i + 1 + n1 * j]));
                }
                if j + 1 < n2 {
                    jump = jump.max(here.abs_diff(lev[i + n1 * (j + 1)]));
                }
            }
        }
        jump
    }
}

/// Greville grid entities of level ℓ whose functions lie in Ω_{ℓ′}.
#[derive(Clone, Debug, PartialEq)]
pub struct GrevilleSubgrid {
    /// Marked vertices of the `m₁ × m₂` vertex grid.
    pub vertices: CellSet,
    /// Marked horizontal edges, `(m₁ − 1) × m₂`.
    pub x_edges: CellSet,
    /// Marked vertical edges, `m₁ × (m₂ − 1)`.
    pub y_edges: CellSet,
    /// Marked cells, `(m₁ − 1) × (m₂ − 1)`.
    pub cells: CellSet,
}

impl GrevilleSubgrid {
    /// Marks the boundary-retained functions whose support rectangle
    /// satisfies `inside`.
    pub fn from_predicate(knots: &[KnotVector; 2], bc: bool, inside: impl Fn(&[Range<usize>; 2]) -> bool) -> Self {
        let [m1, m2] = [knots[0].dim(), knots[1].dim()];
        let mark = |kx: UniKind, ky: UniKind, n1: usize, n2: usize| {
            let interior = |kind: UniKind, i: usize, n: usize| kind == UniKind::CurrySchoenberg || (i > 0 && i + 1 < n);
            CellSet::from_fn(n1, n2, |i, j| {
                (!bc || (interior(kx, i, n1) && interior(ky, j, n2)))
                    && inside(&[kx.support(&knots[0], i), ky.support(&knots[1], j)])
            })
        };
        use UniKind::{CurrySchoenberg as D, Spline as B};
        Self {
            vertices: mark(B, B, m1, m2),
            x_edges: mark(D, B, m1 - 1, m2),
            y_edges: mark(B, D, m1, m2 - 1),
            cells: mark(D, D, m1 - 1, m2 - 1),
        }
    }

    pub fn counts(&self) -> [usize; 4] {
        [self.vertices.len(), self.x_edges.len(), self.y_edges.len(), self.cells.len()]
    }
}

/// 𝒢_{ℓ,ℓ′}: entities of the level-ℓ Greville grid whose functions are
/// supported in Ω_{ℓ′}.
pub fn greville_subgrid(ladder: &LevelLadder, level: usize, l_prime: usize, bc: bool) -> GrevilleSubgrid {
    GrevilleSubgrid::from_predicate(ladder.knots(level), bc, |r| ladder.omega_contains(l_prime, level, r))
}

/// Hierarchical spaces of all three form degrees and their differentials.
#[derive(Clone, Debug)]
pub struct HierarchicalComplex {
    pub ladder: LevelLadder,
    pub sets: [ActiveSets; 3],
    pub d0: SignedSparseMatrix,
    pub d1: SignedSparseMatrix,
}

impl HierarchicalComplex {
    pub fn new(ladder: LevelLadder, orientation: Orientation, bc: bool) -> Result<Self, HierarchyError> {
        let s0 = build_active_sets(&ladder, 0, orientation, bc)?;
        let s1 = build_active_sets(&ladder, 1, orientation, bc)?;
        let s2 = build_active_sets(&ladder, 2, orientation, bc)?;
        let d0 = hier_diff_matrix(&ladder, &s0, &s1)?;
        let d1 = hier_diff_matrix(&ladder, &s1, &s2)?;
        Ok(Self { ladder, sets: [s0, s1, s2], d0, d1 })
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.sets[0].dim(), self.sets[1].dim(), self.sets[2].dim()]
    }

    /// `dim Ŵ⁰ + dim Ŵ² − dim Ŵ¹ − 1`, zero for every exact complex.
    pub fn dimension_residual(&self) -> i64 {
        let [a, b, c] = self.dims();
        a as i64 + c as i64 - b as i64 - 1
    }
}
