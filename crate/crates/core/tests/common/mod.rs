//! Random mesh hierarchies shared by the integration and acceptance tests.
#![allow(dead_code)]

use hbcomplex::hierarchy::LevelLadder;
use hbcomplex::topology::CellSet;
use rand::Rng;

/// Nested random boxes: each refinement picks up to `max_boxes` boxes, each
/// inside a random box of the level before (or anywhere on level 0), with
/// sides of at least `min_side` current-level elements where room allows.
pub fn random_ladder(
    rng: &mut impl Rng,
    degree: [usize; 2],
    level0: [usize; 2],
    refinements: usize,
    max_boxes: usize,
    min_side: usize,
) -> LevelLadder {
    let mut parents: Vec<[usize; 4]> = vec![[0, level0[0], 0, level0[1]]];
    let mut sets = Vec::with_capacity(refinements);
    for level in 0..refinements {
        let [n1, n2] = [level0[0] << level, level0[1] << level];
        let nboxes = rng.random_range(1..=max_boxes);
        let mut boxes = Vec::with_capacity(nboxes);
        for _ in 0..nboxes {
            // parents are in level-(ℓ−1) indices except on level 0
            let p = parents[rng.random_range(0..parents.len())];
            let s = if level == 0 { 1 } else { 2 };
            let (x0, x1, y0, y1) = (p[0] * s, p[1] * s, p[2] * s, p[3] * s);
            let pick = |rng: &mut dyn rand::RngCore, lo: usize, hi: usize| {
                let side = rng.random_range(min_side.min(hi - lo)..=hi - lo).max(1);
                let start = rng.random_range(lo..=hi - side);
                (start, start + side)
            };
            let (i0, i1) = pick(rng, x0, x1);
            let (j0, j1) = pick(rng, y0, y1);
            boxes.push([i0, i1, j0, j1]);
        }
        sets.push(CellSet::from_fn(n1, n2, |i, j| {
            boxes.iter().any(|b| (b[0]..b[1]).contains(&i) && (b[2]..b[3]).contains(&j))
        }));
        parents = boxes;
    }
    LevelLadder::new(degree, level0, sets).expect("boxes nest by construction")
}

/// Random cell set made of a few rectangles, sometimes with cells punched out.
pub fn random_cells(rng: &mut impl Rng, n: [usize; 2]) -> CellSet {
    let mut set = CellSet::empty(n[0], n[1]);
    for _ in 0..rng.random_range(1..=4) {
        let w = rng.random_range(1..=n[0]);
        let h = rng.random_range(1..=n[1]);
        let i0 = rng.random_range(0..=n[0] - w);
        let j0 = rng.random_range(0..=n[1] - h);
        for j in j0..j0 + h {
            for i in i0..i0 + w {
                set.insert(i, j);
            }
        }
    }
    for _ in 0..rng.random_range(0..=3) {
        set.remove(rng.random_range(0..n[0]), rng.random_range(0..n[1]));
    }
    set
}
