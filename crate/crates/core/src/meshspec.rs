//! JSON description of a level ladder, its validator, and generators for the
//! mesh families used in the experiments.
//!
//! A spec lists, for every refinement level ℓ ≥ 1, the boxes whose union is
//! Ω_ℓ, in level-(ℓ−1) element indices. Boxes are half-open. A spec may
//! instead (or additionally) name a generator; explicit levels win, so
//! checked-in files stay fixed even if generator defaults change.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{HierarchyError, LevelLadder};
use crate::topology::CellSet;

#[derive(Debug, Error)]
pub enum MeshSpecError {
    #[error("degree and level-0 element counts must be positive")]
    Degenerate,
    #[error("level {level}, box {index}: {fault}")]
    Box { level: usize, index: usize, fault: BoxFault },
    #[error("level {level}, box {index}: element ({i}, {j}) is not inside the level-{parent} subdomain")]
    NotNested { level: usize, index: usize, i: usize, j: usize, parent: usize },
    #[error("generator {name}: {reason}")]
    Generator { name: &'static str, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxFault {
    Empty,
    OutOfRange { limit: [usize; 2] },
}

impl std::fmt::Display for BoxFault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoxFault::Empty => f.write_str("box is empty"),
            BoxFault::OutOfRange { limit } => write!(f, "box exceeds the {}x{} element grid", limit[0], limit[1]),
        }
    }
}

/// Half-open element box `[i0, i1) × [j0, j1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElementBox {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl ElementBox {
    pub fn new(i0: usize, i1: usize, j0: usize, j1: usize) -> Self {
        Self { i0, i1, j0, j1 }
    }

    pub fn square(i0: usize, j0: usize, size: usize) -> Self {
        Self::new(i0, i0 + size, j0, j0 + size)
    }

    pub fn is_empty(&self) -> bool {
        self.i0 >= self.i1 || self.j0 >= self.j1
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        (self.i0..self.i1).contains(&i) && (self.j0..self.j1).contains(&j)
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.j0..self.j1).flat_map(move |j| (self.i0..self.i1).map(move |i| (i, j)))
    }
}

/// A mesh hierarchy on the square domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Degree of the 0-forms per direction.
    pub degree: [usize; 2],
    pub level0: [usize; 2],
    /// `levels[ℓ − 1]` covers Ω_ℓ.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<Vec<ElementBox>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    /// Side length of the square; the unit square when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MeshSpec {
    pub fn uniform(degree: [usize; 2], level0: [usize; 2]) -> Self {
        Self { degree, level0, levels: Vec::new(), generator: None, side: None, note: None }
    }

    pub fn from_json(text: &str) -> Result<Self, MeshSpecError> {
        let spec: MeshSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh specs always serialize")
    }

    pub fn with_side(mut self, side: f64) -> Self {
        self.side = Some(side);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Subdomain boxes, expanding the generator when no explicit levels are given.
    pub fn resolved_levels(&self) -> Result<Vec<Vec<ElementBox>>, MeshSpecError> {
        match (&self.generator, self.levels.is_empty()) {
            (Some(g), true) => Ok(g.levels(self.level0)?),
            _ => Ok(self.levels.clone()),
        }
    }

    /// Subdomains as cell sets, checked box by box.
    pub fn subdomains(&self) -> Result<Vec<CellSet>, MeshSpecError> {
        if self.degree.contains(&0) || self.level0.contains(&0) {
            return Err(MeshSpecError::Degenerate);
        }
        let levels = self.resolved_levels()?;
        let mut sets: Vec<CellSet> = Vec::with_capacity(levels.len());
        for (idx, boxes) in levels.iter().enumerate() {
            let level = idx + 1;
            let limit = [self.level0[0] << idx, self.level0[1] << idx];
            let mut set = CellSet::empty(limit[0], limit[1]);
            for (index, b) in boxes.iter().enumerate() {
                if b.is_empty() {
                    return Err(MeshSpecError::Box { level, index, fault: BoxFault::Empty });
                }
                if b.i1 > limit[0] || b.j1 > limit[1] {
                    return Err(MeshSpecError::Box { level, index, fault: BoxFault::OutOfRange { limit } });
                }
                if let Some(parent) = sets.last() {
                    if let Some((i, j)) = b.cells().find(|&(i, j)| !parent.contains(i / 2, j / 2)) {
                        return Err(MeshSpecError::NotNested { level, index, i, j, parent: level - 1 });
                    }
                }
                for (i, j) in b.cells() {
                    set.insert(i, j);
                }
            }
            sets.push(set);
        }
        Ok(sets)
    }

    pub fn validate(&self) -> Result<(), MeshSpecError> {
        self.subdomains().map(|_| ())
    }

    pub fn to_ladder(&self) -> Result<LevelLadder, MeshSpecError> {
        Ok(LevelLadder::new(self.degree, self.level0, self.subdomains()?)?)
    }

    /// Canonical spec of a ladder: each subdomain split greedily into
    /// maximal rectangles, scanning rows bottom-up.
    pub fn from_ladder(ladder: &LevelLadder) -> Self {
        let levels = ladder.subdomains().iter().map(rectangles).collect();
        Self { levels, ..Self::uniform(ladder.degree(), ladder.level0()) }
    }

    /// Same mesh with explicit levels in canonical form; provenance fields kept.
    pub fn canonical(&self) -> Result<Self, MeshSpecError> {
        let levels = self.subdomains()?.iter().map(rectangles).collect();
        Ok(Self { levels, ..self.clone() })
    }

    pub fn element_count(&self) -> Result<usize, MeshSpecError> {
        Ok(crate::hierarchy::build_hier_mesh(&self.to_ladder()?).len())
    }
}

/// Greedy rectangle cover: the first free cell opens a run as wide as
/// possible, which then grows upward while the whole run stays free.
fn rectangles(set: &CellSet) -> Vec<ElementBox> {
    let [n1, n2] = set.shape();
    let mut used = CellSet::empty(n1, n2);
    let free = |used: &CellSet, i: usize, j: usize| set.contains(i, j) && !used.contains(i, j);
    let mut out = Vec::new();
    for j0 in 0..n2 {
        for i0 in 0..n1 {
            if !free(&used, i0, j0) {
                continue;
            }
            let mut i1 = i0 + 1;
            while i1 < n1 && free(&used, i1, j0) {
                i1 += 1;
            }
            let mut j1 = j0 + 1;
            while j1 < n2 && (i0..i1).all(|i| free(&used, i, j1)) {
                j1 += 1;
            }
            let b = ElementBox::new(i0, i1, j0, j1);
            for (i, j) in b.cells() {
                used.insert(i, j);
            }
            out.push(b);
        }
    }
    out
}

/// Parametric mesh families. Serialized as `{"name": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum Generator {
    Diagonal(DiagonalParams),
    ThreeLines(LinesParams),
    ThreeLinesBulge(LinesParams),
    Bulge(BulgeParams),
    Corners(CornersParams),
    Custom(CustomParams),
}

/// Square blocks of `block × block` elements along the main diagonal,
/// consecutive blocks overlapping by `overlap`. Each further refinement
/// repeats the pattern inside every block of the level before.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalParams {
    #[serde(default = "default_block")]
    pub block: usize,
    pub overlap: usize,
    #[serde(default = "one")]
    pub refinements: usize,
    /// Overlap of the finest band when it differs from the others.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finest_overlap: Option<usize>,
}

/// Three full-width horizontal strips, bottom to top, separated by `gap`
/// elements and centred vertically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinesParams {
    pub thickness: [usize; 3],
    pub gap: usize,
    /// Square attached to the thinnest strip at its midpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulge: Option<usize>,
}

/// A square block with a thin strip running from its right side to one
/// element short of the boundary. Block placement scales with the grid,
/// strip thickness does not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulgeParams {
    #[serde(default = "default_strip")]
    pub thickness: usize,
}

/// `block × block` squares of the current level in each corner, nested.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornersParams {
    #[serde(default = "default_corner_block")]
    pub block: usize,
    #[serde(default = "default_corner_levels")]
    pub refinements: usize,
}

/// Subdomains given directly, either as boxes or drawn as rows of `#` and
/// `.` (top row first), one entry per level. Neither means no refinement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomParams {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub masks: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<Vec<ElementBox>>,
}

fn default_block() -> usize {
    4
}

fn one() -> usize {
    1
}

fn default_strip() -> usize {
    2
}

fn default_corner_block() -> usize {
    5
}

fn default_corner_levels() -> usize {
    3
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Diagonal(_) => "diagonal",
            Generator::ThreeLines(_) => "three_lines",
            Generator::ThreeLinesBulge(_) => "three_lines_bulge",
            Generator::Bulge(_) => "bulge",
            Generator::Corners(_) => "corners",
            Generator::Custom(_) => "custom",
        }
    }

    fn fail(&self, reason: impl Into<String>) -> MeshSpecError {
        MeshSpecError::Generator { name: self.name(), reason: reason.into() }
    }

    /// Boxes per refinement level for a given level-0 grid.
    pub fn levels(&self, level0: [usize; 2]) -> Result<Vec<Vec<ElementBox>>, MeshSpecError> {
        match self {
            Generator::Diagonal(p) => self.diagonal(p, level0),
            Generator::ThreeLines(p) | Generator::ThreeLinesBulge(p) => self.lines(p, level0),
            Generator::Bulge(p) => self.bulge(p, level0),
            Generator::Corners(p) => self.corners(p, level0),
            Generator::Custom(p) => self.custom(p, level0),
        }
    }

    fn diagonal(&self, p: &DiagonalParams, level0: [usize; 2]) -> Result<Vec<Vec<ElementBox>>, MeshSpecError> {
        if level0[0] != level0[1] {
            return Err(self.fail("needs a square level-0 grid"));
        }
        let mut out: Vec<Vec<ElementBox>> = Vec::with_capacity(p.refinements);
        for level in 0..p.refinements {
            let overlap = match p.finest_overlap {
                Some(k) if level + 1 == p.refinements => k,
                _ => p.overlap,
            };
            if overlap >= p.block {
                return Err(self.fail(format!("overlap {overlap} leaves no step for {0}x{0} blocks", p.block)));
            }
            if p.block > level0[0] {
                return Err(self.fail(format!("block {} exceeds the {}-element grid", p.block, level0[0])));
            }
            // Level 0 runs along the whole diagonal; deeper levels split each
            // parent block, now 2b elements wide, along its own diagonal.
            let spans: Vec<(usize, usize)> = match out.last() {
                None => vec![(0, level0[0])],
                Some(parents) => parents.iter().map(|b| (2 * b.i0, 2 * p.block)).collect(),
            };
            let mut blocks: Vec<ElementBox> = Vec::new();
            for (start, width) in spans {
                for o in diagonal_offsets(width, p.block, p.block - overlap) {
                    let b = ElementBox::square(start + o, start + o, p.block);
                    if !blocks.contains(&b) {
                        blocks.push(b);
                    }
                }
            }
            blocks.sort_by_key(|b| b.i0);
            out.push(blocks);
        }
        Ok(out)
    }

    fn lines(&self, p: &LinesParams, [n1, n2]: [usize; 2]) -> Result<Vec<Vec<ElementBox>>, MeshSpecError> {
        let total = p.thickness.iter().sum::<usize>() + 2 * p.gap;
        if p.thickness.contains(&0) || total > n2 {
            return Err(self.fail(format!("strips need {total} rows, grid has {n2}")));
        }
        let mut boxes = Vec::with_capacity(4);
        let mut y = (n2 - total) / 2;
        for &t in &p.thickness {
            boxes.push(ElementBox::new(0, n1, y, y + t));
            y += t + p.gap;
        }
        match (self, p.bulge) {
            (Generator::ThreeLinesBulge(_), Some(s)) => {
                let thin = (0..3).min_by_key(|&k| p.thickness[k]).expect("three strips");
                let row = boxes[thin].j0;
                if s > n1 || s > n2 {
                    return Err(self.fail(format!("bulge {s} exceeds the grid")));
                }
                boxes.push(ElementBox::square((n1 - s) / 2, row.min(n2 - s), s));
            }
            (Generator::ThreeLinesBulge(_), None) => return Err(self.fail("missing bulge size")),
            (_, Some(_)) => return Err(self.fail("bulge given for plain strips")),
            _ => {}
        }
        Ok(vec![boxes])
    }

    fn bulge(&self, p: &BulgeParams, [n1, n2]: [usize; 2]) -> Result<Vec<Vec<ElementBox>>, MeshSpecError> {
        let at = |n: usize, tenths: usize| (n * tenths + 5) / 10;
        let block = ElementBox::new(at(n1, 2), at(n1, 6), at(n2, 2), at(n2, 6));
        let y0 = at(n2, 3);
        let strip = ElementBox::new(block.i1, n1.saturating_sub(1), y0, y0 + p.thickness);
        if p.thickness == 0 || strip.is_empty() || strip.j1 > block.j1 {
            return Err(self.fail(format!("grid {n1}x{n2} too small for a strip of thickness {}", p.thickness)));
        }
        Ok(vec![vec![block, strip]])
    }

    fn corners(&self, p: &CornersParams, level0: [usize; 2]) -> Result<Vec<Vec<ElementBox>>, MeshSpecError> {
        let b = p.block;
        if b == 0 || 2 * b > level0[0].min(level0[1]) {
            return Err(self.fail(format!("corner blocks of {b} do not fit the level-0 grid")));
        }
        // A level-ℓ block of b elements covers b/2 level-(ℓ−1) elements, so
        // nested corner blocks of equal element count always stay inside.
        Ok((0..p.refinements)
            .map(|level| {
                let [n1, n2] = [level0[0] << level, level0[1] << level];
                vec![
                    ElementBox::square(0, 0, b),
                    ElementBox::square(n1 - b, 0, b),
                    ElementBox::square(0, n2 - b, b),
                    ElementBox::square(n1 - b, n2 - b, b),
                ]
            })
            .collect())
    }

    fn custom(&self, p: &CustomParams, level0: [usize; 2]) -> Result<Vec<Vec<ElementBox>>, MeshSpecError> {
        match (p.masks.is_empty(), p.boxes.is_empty()) {
            (true, _) => return Ok(p.boxes.clone()),
            (false, true) => {}
            (false, false) => return Err(self.fail("give masks or boxes, not both")),
        }
        p.masks
            .iter()
            .enumerate()
            .map(|(idx, rows)| {
                let expected = [level0[0] << idx, level0[1] << idx];
                let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
                if refs.len() != expected[1] || refs.iter().any(|r| r.len() != expected[0]) {
                    return Err(self.fail(format!("mask {} must be {}x{}", idx + 1, expected[0], expected[1])));
                }
                if let Some(c) = refs.iter().flat_map(|r| r.chars()).find(|c| !matches!(c, '#' | '.')) {
                    return Err(self.fail(format!("mask {} has stray character {c:?}", idx + 1)));
                }
                Ok(rectangles(&CellSet::from_ascii(&refs)))
            })
            .collect()
    }
}

/// Block offsets along a diagonal of `n` elements: multiples of `step`,
/// then one block flush with the far end if the last one falls short.
fn diagonal_offsets(n: usize, block: usize, step: usize) -> Vec<usize> {
    let mut offsets: Vec<usize> = (0..).map(|m| m * step).take_while(|o| o + block <= n).collect();
    if offsets.last().is_some_and(|&o| o + block < n) {
        offsets.push(n - block);
    }
    offsets
}

/// Spec produced by a generator, with the levels expanded and validated.
pub fn generate_mesh(generator: Generator, degree: [usize; 2], level0: [usize; 2]) -> Result<MeshSpec, MeshSpecError> {
    let levels = generator.levels(level0)?;
    let spec = MeshSpec { levels, generator: Some(generator), ..MeshSpec::uniform(degree, level0) };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagonal(block: usize, overlap: usize, refinements: usize) -> Generator {
        Generator::Diagonal(DiagonalParams { block, overlap, refinements, finest_overlap: None })
    }

    #[test]
    fn diagonal_offsets() {
        let spec = generate_mesh(diagonal(4, 1, 1), [3, 3], [10, 10]).unwrap();
        let starts: Vec<usize> = spec.levels[0].iter().map(|b| b.i0).collect();
        assert_eq!(starts, vec![0, 3, 6]);
        // last block pulled flush with the far corner
        let spec = generate_mesh(diagonal(4, 2, 1), [3, 3], [11, 11]).unwrap();
        let starts: Vec<usize> = spec.levels[0].iter().map(|b| b.i0).collect();
        assert_eq!(starts, vec![0, 2, 4, 6, 7]);
    }

    #[test]
    fn diagonal_rejects_zero_step() {
        let err = generate_mesh(diagonal(4, 4, 1), [3, 3], [10, 10]).unwrap_err();
        assert!(matches!(err, MeshSpecError::Generator { name: "diagonal", .. }));
    }

    #[test]
    fn multilevel_diagonal_is_nested() {
        for k in 1..4 {
            let spec = generate_mesh(diagonal(4, k, 5), [3, 3], [10, 10]).unwrap();
            assert_eq!(spec.levels.len(), 5);
            spec.to_ladder().unwrap();
        }
    }

    #[test]
    fn corners_element_count() {
        let g = Generator::Corners(CornersParams { block: 5, refinements: 3 });
        let spec = generate_mesh(g, [2, 2], [32, 32]).unwrap();
        assert_eq!(spec.element_count().unwrap(), 1924);
    }

    #[test]
    fn validator_localizes_errors() {
        let mut spec = MeshSpec::uniform([3, 3], [8, 8]);
        spec.levels = vec![vec![ElementBox::square(0, 0, 2)], vec![ElementBox::square(0, 0, 4), ElementBox::square(4, 4, 2)]];
        match spec.validate().unwrap_err() {
            MeshSpecError::NotNested { level: 2, index: 1, i: 4, j: 4, .. } => {}
            e => panic!("unexpected {e}"),
        }
        spec.levels = vec![vec![ElementBox::new(6, 9, 0, 1)]];
        assert!(matches!(
            spec.validate(),
            Err(MeshSpecError::Box { level: 1, index: 0, fault: BoxFault::OutOfRange { .. } })
        ));
        spec.levels = vec![vec![ElementBox::new(3, 3, 0, 1)]];
        assert!(matches!(spec.validate(), Err(MeshSpecError::Box { fault: BoxFault::Empty, .. })));
    }

    #[test]
    fn json_round_trip_is_idempotent() {
        let g = Generator::Diagonal(DiagonalParams { block: 4, overlap: 3, refinements: 3, finest_overlap: Some(1) });
        let spec = generate_mesh(g, [3, 3], [10, 10]).unwrap().with_note("graded");
        let text = spec.to_json();
        let back = MeshSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        let once = MeshSpec::from_ladder(&back.to_ladder().unwrap());
        let twice = MeshSpec::from_ladder(&once.to_ladder().unwrap());
        assert_eq!(once, twice);
        assert_eq!(once.to_ladder().unwrap().subdomains(), spec.to_ladder().unwrap().subdomains());
    }

    #[test]
    fn generator_only_spec_expands() {
        let text = r#"{"degree":[3,3],"level0":[10,10],"generator":{"name":"diagonal","params":{"overlap":2}}}"#;
        let spec = MeshSpec::from_json(text).unwrap();
        assert!(spec.levels.is_empty());
        assert_eq!(spec.subdomains().unwrap()[0].len(), 4 * 16 - 3 * 4);
    }

    #[test]
    fn custom_masks() {
        let rows = ["....", ".##.", ".#..", "...."].map(String::from).to_vec();
        let g = Generator::Custom(CustomParams { masks: vec![rows], boxes: Vec::new() });
        let spec = generate_mesh(g, [2, 2], [4, 4]).unwrap();
        assert_eq!(spec.levels[0], vec![ElementBox::new(1, 2, 1, 3), ElementBox::new(2, 3, 2, 3)]);
        let bad = Generator::Custom(CustomParams { masks: vec![vec!["#".into()]], boxes: Vec::new() });
        assert!(generate_mesh(bad, [2, 2], [4, 4]).is_err());
        let boxes = vec![vec![ElementBox::square(1, 1, 2)]];
        let g = Generator::Custom(CustomParams { masks: Vec::new(), boxes: boxes.clone() });
        assert_eq!(generate_mesh(g, [2, 2], [4, 4]).unwrap().levels, boxes);
    }

    #[test]
    fn strips_and_bulges() {
        let lines = LinesParams { thickness: [4, 2, 4], gap: 2, bulge: None };
        let spec = generate_mesh(Generator::ThreeLines(lines.clone()), [4, 4], [17, 17]).unwrap();
        let rows: Vec<(usize, usize)> = spec.levels[0].iter().map(|b| (b.j0, b.j1)).collect();
        assert_eq!(rows, vec![(1, 5), (7, 9), (11, 15)]);
        let with = LinesParams { bulge: Some(4), ..lines };
        let spec = generate_mesh(Generator::ThreeLinesBulge(with), [4, 4], [17, 17]).unwrap();
        assert_eq!(spec.levels[0][3], ElementBox::square(6, 7, 4));
        let spec = generate_mesh(Generator::Bulge(BulgeParams { thickness: 2 }), [3, 3], [10, 10]).unwrap();
        assert_eq!(spec.levels[0], vec![ElementBox::new(2, 6, 2, 6), ElementBox::new(6, 9, 3, 5)]);
    }
}
