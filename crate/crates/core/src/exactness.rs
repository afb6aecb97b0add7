//! Exactness of hierarchical complexes, decided three ways: the global rank
//! computation, the per-level comparison of Greville subgrid topology, and
//! the local support and overlap conditions on the Bézier mesh.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{greville_subgrid, HierarchicalComplex, HierarchyError, LevelLadder};
use crate::topology::{analyze, cohomology_dims, CellSet, CohomologyDims, TopologyError};
use crate::tpcomplex::{Orientation, UniKind};

#[derive(Debug, Error)]
pub enum ExactnessError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Level-ℓ support condition: every element of Ω_{ℓ+1} lies in the support
/// of a level-ℓ 2-form whose support is inside Ω_{ℓ+1}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportCheck {
    pub pass: bool,
    /// Level-ℓ elements of Ω_{ℓ+1} not covered.
    pub uncovered: Vec<(usize, usize)>,
}

pub fn check_support_assumption(ladder: &LevelLadder, level: usize) -> SupportCheck {
    let Some(omega) = ladder.subdomain(level + 1) else {
        return SupportCheck { pass: true, uncovered: Vec::new() };
    };
    let [n1, n2] = omega.shape();
    let mut covered = CellSet::empty(n1, n2);
    let kv = ladder.knots(level);
    let d = UniKind::CurrySchoenberg;
    for b in 0..d.dim(&kv[1]) {
        let y = d.support(&kv[1], b);
        for a in 0..d.dim(&kv[0]) {
            let x = d.support(&kv[0], a);
            if ladder.omega_contains(level + 1, level, &[x.clone(), y.clone()]) {
                for j in y.clone() {
                    for i in x.clone() {
                        covered.insert(i, j);
                    }
                }
            }
        }
    }
    let uncovered: Vec<(usize, usize)> = omega.iter().filter(|&(i, j)| !covered.contains(i, j)).collect();
    SupportCheck { pass: uncovered.is_empty(), uncovered }
}

/// A basis function whose overlap with the unrefined region is disconnected
/// or has a hole.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapFailure {
    pub level: usize,
    pub k: usize,
    /// Full index in the level-ℓ standard-complex space.
    pub index: usize,
    /// Support rectangle in level-ℓ elements, `[[x0, x1], [y0, y1]]`.
    pub support: [[usize; 2]; 2],
    pub components: usize,
    pub holes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapCheck {
    pub pass: bool,
    pub first_failure: Option<OverlapFailure>,
}

/// Overlap of a support rectangle with the complement of Ω_{ℓ+1}, as a cell
/// set local to the rectangle.
pub fn overlap(ladder: &LevelLadder, level: usize, support: &[Range<usize>; 2]) -> CellSet {
    let [x, y] = support;
    CellSet::from_fn(x.len(), y.len(), |i, j| {
        let e = [x.start + i..x.start + i + 1, y.start + j..y.start + j + 1];
        !ladder.omega_intersects(level + 1, level, &e)
    })
}

/// Level-ℓ overlap condition over the boundary-restricted bases of all form
/// degrees.
pub fn check_overlap_assumption(ladder: &LevelLadder, level: usize) -> OverlapCheck {
    if ladder.subdomain(level + 1).is_none() {
        return OverlapCheck { pass: true, first_failure: None };
    }
    for k in 0..3 {
        let sp = ladder.space(level, k, Orientation::Standard, true).expect("valid ladder spaces");
        for &f in sp.retained() {
            let s = sp.support(f);
            if !ladder.omega_intersects(level + 1, level, &s) {
                continue;
            }
            let t = analyze(&overlap(ladder, level, &s));
            if t.components > 1 || t.holes > 0 {
                let failure = OverlapFailure {
                    level,
                    k,
                    index: f,
                    support: [[s[0].start, s[0].end], [s[1].start, s[1].end]],
                    components: t.components,
                    holes: t.holes,
                };
                return OverlapCheck { pass: false, first_failure: Some(failure) };
            }
        }
    }
    OverlapCheck { pass: true, first_failure: None }
}

/// Per-level outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Exact,
    NotExact,
    /// Subgrid Betti numbers agree but the local conditions fail, so the
    /// inclusion-induced map is not certified.
    BettiMatchUnverified,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Exact => "exact",
            Verdict::NotExact => "not-exact",
            Verdict::BettiMatchUnverified => "betti-match-but-unverified-inclusion",
        })
    }
}

/// Betti comparison of 𝒢_{ℓ,ℓ+1} and 𝒢_{ℓ+1,ℓ+1}, combined with the local
/// conditions at the same level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgridCheck {
    pub level: usize,
    /// (components, holes) of the coarse subgrid.
    pub coarse: (usize, usize),
    /// (components, holes) of the fine subgrid.
    pub fine: (usize, usize),
    /// (components, holes) of Ω_{ℓ+1}.
    pub region: (usize, usize),
    pub manifold: [bool; 3],
    pub support: SupportCheck,
    pub overlap: OverlapCheck,
    pub verdict: Verdict,
}

pub fn check_subgrid_level(ladder: &LevelLadder, level: usize) -> SubgridCheck {
    let coarse = analyze(&greville_subgrid(ladder, level, level + 1, true).cells);
    let fine = if level < ladder.finest() {
        analyze(&greville_subgrid(ladder, level + 1, level + 1, true).cells)
    } else {
        analyze(&CellSet::empty(0, 0))
    };
    let region = analyze(&ladder.subdomain(level + 1).cloned().unwrap_or_else(|| CellSet::empty(0, 0)));
    let support = check_support_assumption(ladder, level);
    let overlap = check_overlap_assumption(ladder, level);
    let verdict = if coarse.betti() != fine.betti() {
        Verdict::NotExact
    } else if support.pass && overlap.pass {
        Verdict::Exact
    } else {
        Verdict::BettiMatchUnverified
    };
    SubgridCheck {
        level,
        coarse: coarse.betti(),
        fine: fine.betti(),
        region: region.betti(),
        manifold: [coarse.manifold, fine.manifold, region.manifold],
        support,
        overlap,
        verdict,
    }
}

/// Cohomology of the hierarchical complex; exact iff `(0, 0, 1)`.
pub fn exactness_oracle(complex: &HierarchicalComplex, seed: u64) -> Result<CohomologyDims, TopologyError> {
    cohomology_dims(&complex.d0, &complex.d1, seed)
}

/// Everything known about the exactness of one hierarchical complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub dims: [usize; 3],
    /// `dim Ŵ⁰ + dim Ŵ² − dim Ŵ¹ − 1`.
    pub dimension_residual: i64,
    pub cohomology: CohomologyDims,
    pub exact: bool,
    pub levels: Vec<SubgridCheck>,
    /// Combination of the per-level verdicts.
    pub subgrid_verdict: Verdict,
}

pub fn exactness_report(ladder: &LevelLadder, seed: u64) -> Result<ExactnessReport, ExactnessError> {
    let complex = HierarchicalComplex::new(ladder.clone(), Orientation::Standard, true)?;
    let cohomology = exactness_oracle(&complex, seed)?;
    let levels: Vec<SubgridCheck> =
        crate::par::map_range(ladder.finest(), |l| check_subgrid_level(ladder, l));
    let subgrid_verdict = if levels.iter().any(|c| c.verdict == Verdict::NotExact) {
        Verdict::NotExact
    } else if levels.iter().all(|c| c.verdict == Verdict::Exact) {
        Verdict::Exact
    } else {
        Verdict::BettiMatchUnverified
    };
    Ok(ExactnessReport {
        dims: complex.dims(),
        dimension_residual: complex.dimension_residual(),
        exact: cohomology.is_exact(),
        cohomology,
        levels,
        subgrid_verdict,
    })
}

impl fmt::Display for ExactnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.dims;
        writeln!(f, "dims: {a} / {b} / {c} (residual {})", self.dimension_residual)?;
        let h = self.cohomology;
        writeln!(f, "cohomology: ({}, {}, {}) -> {}", h.h0, h.h1, h.h2, if self.exact { "exact" } else { "not exact" })?;
        for l in &self.levels {
            writeln!(
                f,
                "level {}: subgrids {:?} vs {:?}, region {:?}, support {}, overlap {} -> {}",
                l.level,
                l.coarse,
                l.fine,
                l.region,
                if l.support.pass { "ok" } else { "fails" },
                if l.overlap.pass { "ok" } else { "fails" },
                l.verdict
            )?;
        }
        write!(f, "subgrid verdict: {}", self.subgrid_verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_set(n: [usize; 2], x: Range<usize>, y: Range<usize>) -> CellSet {
        CellSet::from_fn(n[0], n[1], |i, j| x.contains(&i) && y.contains(&j))
    }

    #[test]
    fn no_refinement_is_exact() {
        let ladder = LevelLadder::new([3, 3], [6, 6], vec![CellSet::empty(6, 6)]).unwrap();
        let r = exactness_report(&ladder, 1).unwrap();
        assert!(r.exact);
        assert_eq!(r.dimension_residual, 0);
        assert_eq!(r.levels[0].coarse, (0, 0));
        assert_eq!(r.levels[0].verdict, Verdict::Exact);
        assert!(check_overlap_assumption(&ladder, 0).pass);
    }

    #[test]
    fn single_support_passes_support_check() {
        // one interior bicubic 2-form support is 3 x 3 elements
        let ladder = LevelLadder::new([3, 3], [8, 8], vec![box_set([8, 8], 2..5, 3..6)]).unwrap();
        assert!(check_support_assumption(&ladder, 0).pass);
        let ladder = LevelLadder::new([3, 3], [8, 8], vec![box_set([8, 8], 2..3, 3..4)]).unwrap();
        let a1 = check_support_assumption(&ladder, 0);
        assert!(!a1.pass);
        assert_eq!(a1.uncovered, vec![(2, 3)]);
    }

    #[test]
    fn hole_in_overlap_fails() {
        // refined ring around one element: a large support sees the hole
        let ring = CellSet::from_fn(10, 10, |i, j| (3..6).contains(&i) && (3..6).contains(&j) && (i, j) != (4, 4));
        let ladder = LevelLadder::new([3, 3], [10, 10], vec![ring]).unwrap();
        let a2 = check_overlap_assumption(&ladder, 0);
        assert!(!a2.pass);
    }
}
