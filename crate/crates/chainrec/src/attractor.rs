//! Trapping regions, attractors, omega-limit cells, basins, and the
//! recurrence/attractor duality report.
//!
//! A trapping certificate witnesses, with rigorous enclosures, that the
//! one-layer fattening of the image region `{f(h(x)) : x in U, f in Ĝ}` stays
//! inside `U`. The attractor determined by a certificate is computed by
//! iterating a cell-level image operator that requires designated-generator
//! occurrences; omega-limit sets iterate occurrence blocks `h1 ∘ g_a0 ∘ h2`
//! with the free words truncated at length `L`. Basins are recovered by
//! reverse images so that one pass decides all start cells at once.

use crate::chain::ChainError;
use crate::expr::eval_box;
use crate::grid::{BoxSet, Cell, CellMask, Grid, GridError};
use crate::interval::IntervalBox2;
use crate::words::{check_abelian_sampled, enumerate_words, GeneratorSystem, Word, WordsError};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const IMAGE_EVAL_BUDGET: u128 = 100_000_000;

#[derive(Debug, Error)]
pub enum AttractorError {
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Words(#[from] WordsError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Certificate that `U` is a trapping region for step maps `f ∘ h` with
/// `f ∈ Ĝ`, `|f| <= L`: the one-layer fattening of `image_set` is contained
/// in `U`.
#[derive(Clone, Debug)]
pub struct TrappingCertificate {
    u: BoxSet,
    h: Word,
    step_len: usize,
    image_set: BoxSet,
}

impl TrappingCertificate {
    pub fn region(&self) -> &BoxSet {
        &self.u
    }

    pub fn h(&self) -> &Word {
        &self.h
    }

    pub fn step_len(&self) -> usize {
        self.step_len
    }

    pub fn image_set(&self) -> &BoxSet {
        &self.image_set
    }
}

/// Result of a trapping-region check; a rejection carries the first cell of
/// the fattened image that escapes `U`.
#[derive(Clone, Debug)]
pub enum CertifyOutcome {
    Certified(TrappingCertificate),
    Rejected {
        violating_cell: Cell,
        image_set: BoxSet,
    },
}

impl CertifyOutcome {
    pub fn certificate(self) -> Option<TrappingCertificate> {
        match self {
            CertifyOutcome::Certified(c) => Some(c),
            CertifyOutcome::Rejected { .. } => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, CertifyOutcome::Certified(_))
    }
}

/// An attractor together with the certificate that produced it.
#[derive(Clone, Debug)]
pub struct AttractorRecord {
    pub cert: TrappingCertificate,
    pub alpha0: usize,
    pub attractor: BoxSet,
    pub basin: Option<BoxSet>,
    pub stabilized: bool,
    pub m_used: usize,
}

// --- cell-image plumbing -----------------------------------------------

/// Stamp all cells meeting `rect` (half-open cover) into the mask. Returns
/// true when the rect's candidate range spans the whole grid, in which case
/// the image trivially covers every retained cell and callers can stop.
fn stamp_rect(grid: &Grid, rect: &IntervalBox2, mask: &mut CellMask) -> bool {
    let Some((x0, x1, y0, y1)) = grid.cell_range(rect) else {
        return false;
    };
    let last = grid.side() - 1;
    if (x0, x1, y0, y1) == (0, last, 0, last) {
        return true;
    }
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = Cell { iy: y, ix: x };
            if grid.retained(c) && !mask.get(c) {
                mask.set(c);
            }
        }
    }
    false
}

/// Cells meeting the union over `words` of the box images of the cells of `s`.
fn image_cells_words(
    grid: &Grid,
    sys: &GeneratorSystem,
    words: &[Word],
    s: &BoxSet,
) -> BoxSet {
    let mut mask = CellMask::new(grid);
    for &c in s.cells() {
        let b = grid.cell_box(c);
        for w in words {
            let mut img = b;
            for &i in w.indices().iter().rev() {
                img = eval_box(&sys.generators()[i], &img);
            }
            if stamp_rect(grid, &img, &mut mask) {
                return grid.all_cells();
            }
        }
    }
    BoxSet::from_sorted_unchecked(*grid, mask.to_cells())
}

/// Cells meeting the union over `f ∈ Ĝ`, `|f| <= extend_depth`, of the box
/// images `f(base(cell))`, sharing prefixes of `f` across the extension tree.
fn image_cells_extended(
    grid: &Grid,
    sys: &GeneratorSystem,
    base: &Word,
    extend_depth: usize,
    s: &BoxSet,
) -> BoxSet {
    // returns true when the image covers the whole grid
    fn rec(
        grid: &Grid,
        sys: &GeneratorSystem,
        depth_left: usize,
        cur: IntervalBox2,
        mask: &mut CellMask,
    ) -> bool {
        if stamp_rect(grid, &cur, mask) {
            return true;
        }
        if depth_left == 0 {
            return false;
        }
        sys.generators()
            .iter()
            .any(|g| rec(grid, sys, depth_left - 1, eval_box(g, &cur), mask))
    }
    let mut mask = CellMask::new(grid);
    for &c in s.cells() {
        let mut img = grid.cell_box(c);
        for &i in base.indices().iter().rev() {
            img = eval_box(&sys.generators()[i], &img);
        }
        if rec(grid, sys, extend_depth, img, &mut mask) {
            return grid.all_cells();
        }
    }
    BoxSet::from_sorted_unchecked(*grid, mask.to_cells())
}

fn words_per_cell(gens: usize, extend_depth: usize) -> u128 {
    (0..=extend_depth as u32).map(|l| (gens as u128).pow(l)).sum()
}

// --- trapping regions and attractors -----------------------------------

/// Check whether `u` is a trapping region for `h` at step budget `L`:
/// compute the cells meeting `{f(h(x)) : x in u, f ∈ Ĝ, |f| <= L}` and accept
/// iff their one-layer fattening stays inside `u`.
pub fn certify_trapping(
    grid: &Grid,
    sys: &GeneratorSystem,
    u: &BoxSet,
    h: &Word,
    step_len: usize,
) -> Result<CertifyOutcome, AttractorError> {
    if u.is_empty() {
        return Err(AttractorError::Precondition(
            "candidate region must be nonempty".into(),
        ));
    }
    if h.is_identity() {
        return Err(AttractorError::Precondition(
            "h must be a nonempty word".into(),
        ));
    }
    if u.grid() != grid {
        return Err(AttractorError::Precondition(
            "candidate region lives on a different grid".into(),
        ));
    }
    if u.len() as u128 * words_per_cell(sys.len(), step_len) > IMAGE_EVAL_BUDGET {
        return Err(AttractorError::Budget(
            "trapping check exceeds the image evaluation cap".into(),
        ));
    }
    let image_set = image_cells_extended(grid, sys, h, step_len, u);
    let closed = image_set.fatten(0.0);
    let escaped = closed.difference(u);
    if let Some(&violating_cell) = escaped.cells().first() {
        return Ok(CertifyOutcome::Rejected {
            violating_cell,
            image_set,
        });
    }
    Ok(CertifyOutcome::Certified(TrappingCertificate {
        u: u.clone(),
        h: h.clone(),
        step_len,
        image_set,
    }))
}

/// Words `f` with `1 <= |f| <= max_len` containing at least one occurrence of
/// the designated generator.
fn occurrence_words(
    sys: &GeneratorSystem,
    max_len: usize,
    alpha0: usize,
) -> Result<Vec<Word>, WordsError> {
    Ok(enumerate_words(sys, max_len)?
        .into_iter()
        .filter(|w| w.count_of(alpha0) >= 1)
        .collect())
}

/// Occurrence blocks `h ∘ g_alpha0` with `h ∈ Ĝ`, `|h| <= L`: one block adds
/// exactly one guaranteed occurrence of the designated generator, with an
/// arbitrary truncated word after it.
fn block_words(
    sys: &GeneratorSystem,
    step_len: usize,
    alpha0: usize,
) -> Result<Vec<Word>, WordsError> {
    let a = Word::new(vec![alpha0], sys.len())?;
    Ok(enumerate_words(sys, step_len)?
        .into_iter()
        .map(|h| h.concat(&a))
        .collect())
}

/// The attractor determined by a certified trapping region: the one-layer
/// fattening of the stabilized intersection of iterates of the cell image
/// operator `T(S) = cells meeting {f(S) : f ∈ Ĝ, |f| <= L, f contains
/// g_alpha0}` started from the cells of `h(U)`.
pub fn compute_attractor(
    grid: &Grid,
    sys: &GeneratorSystem,
    cert: TrappingCertificate,
    alpha0: usize,
    m_max: usize,
) -> Result<AttractorRecord, AttractorError> {
    if alpha0 >= sys.len() {
        return Err(AttractorError::Precondition(format!(
            "alpha0 {alpha0} out of range for {} generators",
            sys.len()
        )));
    }
    if m_max < 1 {
        return Err(AttractorError::Precondition("m_max must be at least 1".into()));
    }
    let t_words = occurrence_words(sys, cert.step_len, alpha0)?;
    if t_words.is_empty() {
        return Err(AttractorError::Precondition(
            "step budget too small: no step word contains the designated generator".into(),
        ));
    }
    let s0 = image_cells_words(grid, sys, std::slice::from_ref(&cert.h), &cert.u);
    let mut cur = s0.clone();
    let mut inter = s0;
    let mut stabilized = false;
    let mut m_used = m_max;
    for m in 1..=m_max {
        let next = image_cells_words(grid, sys, &t_words, &cur);
        if next == cur {
            stabilized = true;
            m_used = m;
            break;
        }
        inter = inter.intersect(&next);
        cur = next;
        if inter.is_empty() {
            m_used = m;
            break;
        }
    }
    let attractor = inter.fatten(0.0);
    Ok(AttractorRecord {
        cert,
        alpha0,
        attractor,
        basin: None,
        stabilized,
        m_used,
    })
}

/// Omega-limit cells of a start region: the intersection over
/// `m = 1..=depth_m` of the one-layer fattenings of the cell sets reachable
/// from the start by `m` occurrence blocks (after one free truncated word).
pub fn omega_limit_cells(
    grid: &Grid,
    sys: &GeneratorSystem,
    start: &BoxSet,
    alpha0: usize,
    depth_m: usize,
    step_len: usize,
) -> Result<BoxSet, AttractorError> {
    if start.is_empty() {
        return Err(AttractorError::Precondition("start set must be nonempty".into()));
    }
    if alpha0 >= sys.len() {
        return Err(AttractorError::Precondition("alpha0 out of range".into()));
    }
    if depth_m < 1 {
        return Err(AttractorError::Precondition("depth_m must be at least 1".into()));
    }
    let free_words = enumerate_words(sys, step_len)?;
    let blocks = block_words(sys, step_len, alpha0)?;
    let mut reach = image_cells_words(grid, sys, &free_words, start);
    let mut inter: Option<BoxSet> = None;
    for _ in 1..=depth_m {
        reach = image_cells_words(grid, sys, &blocks, &reach);
        let closed = reach.fatten(0.0);
        inter = Some(match inter {
            None => closed,
            Some(acc) => acc.intersect(&closed),
        });
        if inter.as_ref().is_some_and(|s| s.is_empty()) {
            break;
        }
    }
    Ok(inter.expect("depth_m >= 1"))
}

// --- reverse images -----------------------------------------------------

/// Integer cell rectangles of word images, one per (cell, word), for O(1)
/// reverse-image queries against a summed-area table.
struct IntRects {
    words: usize,
    /// `[x0, x1, y0, y1]` per (cell position, word); `x0 > x1` marks a rect
    /// that misses the grid.
    data: Vec<[u16; 4]>,
}

const MISS: [u16; 4] = [1, 0, 0, 0];

fn build_int_rects(grid: &Grid, sys: &GeneratorSystem, cells: &[Cell], words: &[Word]) -> IntRects {
    let data: Vec<[u16; 4]> = cells
        .par_iter()
        .flat_map_iter(|&c| {
            let b = grid.cell_box(c);
            words.iter().map(move |w| {
                let mut img = b;
                for &i in w.indices().iter().rev() {
                    img = eval_box(&sys.generators()[i], &img);
                }
                match grid.cell_range(&img) {
                    None => MISS,
                    Some((x0, x1, y0, y1)) => [x0 as u16, x1 as u16, y0 as u16, y1 as u16],
                }
            })
        })
        .collect();
    IntRects {
        words: words.len(),
        data,
    }
}

/// Summed-area table of a cell set for rectangle occupancy queries.
struct Sat {
    side: usize,
    acc: Vec<u32>,
}

impl Sat {
    fn new(grid: &Grid, s: &BoxSet) -> Sat {
        let side = grid.side() as usize;
        let pitch = side + 1;
        let mut acc = vec![0u32; pitch * pitch];
        let mut members = vec![0u32; side * side];
        for c in s.cells() {
            members[c.iy as usize * side + c.ix as usize] = 1;
        }
        for y in 0..side {
            let mut row_sum = 0u32;
            for x in 0..side {
                row_sum += members[y * side + x];
                acc[(y + 1) * pitch + (x + 1)] = acc[y * pitch + (x + 1)] + row_sum;
            }
        }
        Sat { side, acc }
    }

    #[inline]
    fn any_in(&self, r: &[u16; 4]) -> bool {
        let [x0, x1, y0, y1] = *r;
        if x0 > x1 {
            return false;
        }
        let pitch = self.side + 1;
        let (x0, x1, y0, y1) = (x0 as usize, x1 as usize, y0 as usize, y1 as usize);
        let total = self.acc[(y1 + 1) * pitch + (x1 + 1)] + self.acc[y0 * pitch + x0]
            - self.acc[y0 * pitch + (x1 + 1)]
            - self.acc[(y1 + 1) * pitch + x0];
        total > 0
    }
}

/// Cells whose image under some word meets `target`.
fn reverse_step(grid: &Grid, cells: &[Cell], rects: &IntRects, target: &BoxSet) -> BoxSet {
    let sat = Sat::new(grid, target);
    let hits: Vec<Cell> = cells
        .par_iter()
        .enumerate()
        .filter(|(pos, _)| {
            let base = pos * rects.words;
            rects.data[base..base + rects.words]
                .iter()
                .any(|r| sat.any_in(r))
        })
        .map(|(_, &c)| c)
        .collect();
    BoxSet::from_sorted_unchecked(*grid, hits)
}

/// One-layer neighborhood of a single cell.
fn cell_neighborhood(grid: &Grid, c: Cell) -> BoxSet {
    BoxSet::from_cells(*grid, vec![c])
        .expect("attractor cell is valid")
        .fatten(0.0)
}

/// The basin of attraction at cell level: all cells whose omega-limit cells
/// meet the attractor. Computed by reverse images: a start cell `b` belongs
/// to the basin iff for some attractor cell `a`, every reachable-set iterate
/// of `b` meets the one-layer neighborhood of `a`.
pub fn basin(
    grid: &Grid,
    sys: &GeneratorSystem,
    rec: &AttractorRecord,
    alpha0: usize,
    depth_m: usize,
    step_len: usize,
) -> Result<BoxSet, AttractorError> {
    if rec.attractor.is_empty() {
        return Err(AttractorError::Precondition("attractor must be nonempty".into()));
    }
    if depth_m < 1 {
        return Err(AttractorError::Precondition("depth_m must be at least 1".into()));
    }
    let cells = grid.cells();
    let free_words = enumerate_words(sys, step_len)?;
    let blocks = block_words(sys, step_len, alpha0)?;
    let free_rects = build_int_rects(grid, sys, &cells, &free_words);
    let block_rects = build_int_rects(grid, sys, &cells, &blocks);

    let side = grid.side() as usize;
    let mut pos_of = vec![u32::MAX; side * side];
    for (i, c) in cells.iter().enumerate() {
        pos_of[c.iy as usize * side + c.ix as usize] = i as u32;
    }
    let pos = |c: Cell| pos_of[c.iy as usize * side + c.ix as usize] as usize;

    let mut in_basin = vec![false; cells.len()];

    // Fast certificate: a block-self-loop cell persists in every iterate that
    // contains it, so any start whose first reachable set meets such a cell
    // adjacent to the attractor is in the basin.
    let mut anchors = Vec::new();
    for (p, &c) in cells.iter().enumerate() {
        let base = p * block_rects.words;
        let self_loop = block_rects.data[base..base + block_rects.words]
            .iter()
            .any(|r| {
                r[0] <= r[1]
                    && (r[0]..=r[1]).contains(&(c.ix as u16))
                    && (r[2]..=r[3]).contains(&(c.iy as u16))
            });
        if self_loop && !cell_neighborhood(grid, c).intersect(&rec.attractor).is_empty() {
            anchors.push(c);
        }
    }
    if !anchors.is_empty() {
        let anchors = BoxSet::from_sorted_unchecked(*grid, anchors);
        let certified = reverse_step(
            grid,
            &cells,
            &free_rects,
            &reverse_step(grid, &cells, &block_rects, &anchors),
        );
        for &c in certified.cells() {
            in_basin[pos(c)] = true;
        }
    }

    // Exhaustive pass for anything the certificate did not settle.
    let mut undecided = cells.iter().filter(|&&c| !in_basin[pos(c)]).count();
    if undecided > 0 {
        for &a in rec.attractor.cells() {
            let mut target = cell_neighborhood(grid, a);
            let mut acc: Option<BoxSet> = None;
            for _ in 1..=depth_m {
                target = reverse_step(grid, &cells, &block_rects, &target);
                if target.is_empty() {
                    acc = Some(BoxSet::empty(*grid));
                    break;
                }
                let starts = reverse_step(grid, &cells, &free_rects, &target);
                acc = Some(match acc {
                    None => starts,
                    Some(prev) => prev.intersect(&starts),
                });
                if acc.as_ref().unwrap().is_empty() {
                    break;
                }
            }
            for &c in acc.expect("depth_m >= 1").cells() {
                let p = pos(c);
                if !in_basin[p] {
                    in_basin[p] = true;
                    undecided -= 1;
                }
            }
            if undecided == 0 {
                break;
            }
        }
    }

    let members = cells
        .iter()
        .filter(|&&c| in_basin[pos(c)])
        .copied()
        .collect();
    Ok(BoxSet::from_sorted_unchecked(*grid, members))
}

// --- duality ------------------------------------------------------------

/// Comparison of the complement of the chain recurrent approximation against
/// the union of basin-minus-attractor sets of an attractor family.
#[derive(Clone, Debug)]
pub struct DualityReport {
    /// Union of `basin \ attractor` over the family.
    pub basin_minus_attractor: BoxSet,
    /// Complement of the chain recurrent approximation in the grid.
    pub complement_cr: BoxSet,
    pub sym_diff: BoxSet,
    /// Max Chebyshev distance, in cells, from a symmetric-difference cell to
    /// the boundaries of the two regions (0 when the difference is empty).
    pub max_boundary_dist_cells: u32,
    /// Sampled commutation evidence for the family hypothesis.
    pub abelian: bool,
    /// Whether the symmetric difference is confined to a 2-cell layer of the
    /// region boundaries; asserted only when the abelian evidence holds.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualitySummary {
    pub sym_diff_cells: usize,
    pub max_boundary_dist_cells: u32,
    pub abelian: bool,
    pub pass: Option<bool>,
}

impl DualityReport {
    pub fn summary(&self) -> DualitySummary {
        DualitySummary {
            sym_diff_cells: self.sym_diff.len(),
            max_boundary_dist_cells: self.max_boundary_dist_cells,
            abelian: self.abelian,
            pass: self.pass,
        }
    }
}

/// Cells whose one-layer neighborhood meets both the set and its complement
/// in the plane: positions outside the grid or outside the membership region
/// count as complement, so a set reaching the edge of the phase space has
/// boundary cells there too.
fn boundary_cells(grid: &Grid, s: &BoxSet) -> BoxSet {
    let side = grid.side() as i64;
    let near_s = s.fatten(0.0);
    let cells = near_s
        .cells()
        .iter()
        .copied()
        .filter(|&c| {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let x = c.ix as i64 + dx;
                    let y = c.iy as i64 + dy;
                    let outside = x < 0
                        || y < 0
                        || x >= side
                        || y >= side
                        || !grid.retained(Cell {
                            iy: y as u32,
                            ix: x as u32,
                        })
                        || !s.contains(Cell {
                            iy: y as u32,
                            ix: x as u32,
                        });
                    if outside {
                        return true;
                    }
                }
            }
            false
        })
        .collect();
    BoxSet::from_sorted_unchecked(*grid, cells)
}

fn max_chebyshev_to(grid: &Grid, from: &BoxSet, to: &BoxSet) -> u32 {
    if from.is_empty() {
        return 0;
    }
    if to.is_empty() {
        return u32::MAX;
    }
    let mut covered = to.clone();
    let mut dist = 0u32;
    let cap = 4 * grid.side();
    loop {
        if from.difference(&covered).is_empty() {
            return dist;
        }
        if dist >= cap {
            return u32::MAX;
        }
        covered = covered.fatten(0.0); // one Chebyshev layer
        dist += 1;
    }
}

/// Compare `grid \ cr` with the union of `basin \ attractor` over the given
/// attractor records (records without a computed basin contribute nothing).
pub fn duality_report(
    grid: &Grid,
    sys: &GeneratorSystem,
    cr: &BoxSet,
    attractors: &[AttractorRecord],
) -> DualityReport {
    let abelian = check_abelian_sampled(sys, &grid.bounds(), 1000);
    let mut d = BoxSet::empty(*grid);
    for rec in attractors {
        if let Some(b) = &rec.basin {
            d = d.union(&b.difference(&rec.attractor));
        }
    }
    let complement_cr = cr.complement();
    let sym_diff = complement_cr
        .difference(&d)
        .union(&d.difference(&complement_cr));
    let boundaries = boundary_cells(grid, cr).union(&boundary_cells(grid, &d));
    let max_dist = max_chebyshev_to(grid, &sym_diff, &boundaries);
    let within = max_dist <= 2;
    DualityReport {
        basin_minus_attractor: d,
        complement_cr,
        sym_diff,
        max_boundary_dist_cells: max_dist,
        abelian,
        pass: abelian.then_some(within),
    }
}
