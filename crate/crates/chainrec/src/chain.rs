//! Step graphs over grid cells and the chain-recurrence machinery.
//!
//! One directed edge `b -> b'` encodes one chain step under a test map `g`:
//! some `h` of word length at most `L` (identity allowed) maps `b` to a
//! rigorous rectangle whose Euclidean `eps`-expansion meets `b'`. Because the
//! rectangle encloses the true image, every genuine chain step is covered by
//! an edge; enclosure looseness only ever adds edges. Consequently every set
//! derived from cycles of these graphs is an outer approximation.
//!
//! Adjacency is not materialized. Each node stores its image rectangles (one
//! per `h`-word) and successors are enumerated geometrically on demand, which
//! keeps dense graphs at fine depths affordable.

use crate::grid::{BoxSet, Cell, Grid, GridError};
use crate::interval::IntervalBox2;
use crate::words::{enumerate_words, GeneratorSystem, Word, WordsError};
use crate::expr::eval_box;
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;
use thiserror::Error;

/// Cap on box-image evaluations for a single graph construction.
pub const IMAGE_EVAL_BUDGET: u128 = 100_000_000;
/// Cell-count cap for the pairwise transitivity test.
pub const TRANSITIVITY_CELL_CAP: usize = 1 << 14;
/// Coarsest depth of the internal refinement ladder.
const LADDER_START_DEPTH: u32 = 6;

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Words(#[from] WordsError),
}

/// A step graph for one `(eps, g)` pair on a grid.
pub struct StepGraph {
    grid: Grid,
    g: Word,
    eps: f64,
    eps_sq: f64,
    step_len: usize,
    nodes: Vec<Cell>,
    node_idx: Vec<u32>, // dense side*side lookup, ABSENT outside the node set
    node_bits: Vec<u64>, // occupancy bitmap over the same linear cell index
    rect_offsets: Vec<u32>,
    rects: Vec<IntervalBox2>,
}

/// Build the step graph for test map `g` (a nonempty word), chain tolerance
/// `eps > 0`, and step-word budget `L`.
pub fn build_step_graph(
    grid: &Grid,
    sys: &GeneratorSystem,
    g: &Word,
    eps: f64,
    step_len: usize,
) -> Result<StepGraph, ChainError> {
    StepGraph::build(grid, sys, g, eps, step_len, None)
}

impl StepGraph {
    fn build(
        grid: &Grid,
        sys: &GeneratorSystem,
        g: &Word,
        eps: f64,
        step_len: usize,
        allow: Option<&BoxSet>,
    ) -> Result<StepGraph, ChainError> {
        if g.is_identity() {
            return Err(ChainError::Precondition(
                "test map g must be a nonempty word".into(),
            ));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(ChainError::Precondition("eps must be positive".into()));
        }
        let nodes: Vec<Cell> = match allow {
            Some(s) => {
                assert_eq!(s.grid(), grid, "allow set on a different grid");
                s.cells().to_vec()
            }
            None => grid.cells(),
        };
        let gens = sys.len() as u128;
        let words_per_node: u128 = (0..=step_len as u32).map(|l| gens.pow(l)).sum();
        if nodes.len() as u128 * words_per_node > IMAGE_EVAL_BUDGET {
            return Err(ChainError::Budget(format!(
                "{} cells x {} step words exceeds the image evaluation cap",
                nodes.len(),
                words_per_node
            )));
        }

        let side = grid.side() as usize;
        let mut node_idx = vec![ABSENT; side * side];
        let mut node_bits = vec![0u64; (side * side).div_ceil(64)];
        for (i, c) in nodes.iter().enumerate() {
            let lin = c.iy as usize * side + c.ix as usize;
            node_idx[lin] = i as u32;
            node_bits[lin / 64] |= 1u64 << (lin % 64);
        }

        let per_node = words_per_node as usize;
        let rect_lists: Vec<Vec<IntervalBox2>> = nodes
            .par_iter()
            .map(|&c| {
                let mut base = grid.cell_box(c);
                for &i in g.indices().iter().rev() {
                    base = eval_box(&sys.generators()[i], &base);
                }
                let mut rects = Vec::with_capacity(per_node);
                push_step_images(sys, step_len, base, &mut rects);
                // a rect contained in another admits a subset of its edges
                let mut keep: Vec<IntervalBox2> = Vec::with_capacity(rects.len());
                'outer: for (i, r) in rects.iter().enumerate() {
                    for (j, other) in rects.iter().enumerate() {
                        if i != j && other.contains_box(r) && (i > j || *other != *r) {
                            continue 'outer;
                        }
                    }
                    keep.push(*r);
                }
                keep
            })
            .collect();

        let mut rect_offsets = Vec::with_capacity(nodes.len() + 1);
        let mut rects = Vec::with_capacity(nodes.len() * per_node);
        rect_offsets.push(0u32);
        for list in rect_lists {
            rects.extend_from_slice(&list);
            rect_offsets.push(rects.len() as u32);
        }

        Ok(StepGraph {
            grid: *grid,
            g: g.clone(),
            eps,
            eps_sq: eps * eps,
            step_len,
            nodes,
            node_idx,
            node_bits,
            rect_offsets,
            rects,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn test_map(&self) -> &Word {
        &self.g
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn step_len(&self) -> usize {
        self.step_len
    }

    pub fn node_cells(&self) -> &[Cell] {
        &self.nodes
    }

    fn node_of(&self, c: Cell) -> Option<u32> {
        let side = self.grid.side() as usize;
        let i = self.node_idx[c.iy as usize * side + c.ix as usize];
        (i != ABSENT).then_some(i)
    }

    fn rects_of(&self, node: u32) -> &[IntervalBox2] {
        let a = self.rect_offsets[node as usize] as usize;
        let b = self.rect_offsets[node as usize + 1] as usize;
        &self.rects[a..b]
    }

    /// Candidate integer range for cells possibly within eps of the rect,
    /// padded by one cell so no boundary case is missed.
    fn candidate_range(&self, rect: &IntervalBox2) -> Option<(u32, u32, u32, u32)> {
        let pad_re = self.eps + self.grid.cell_width();
        let pad_im = self.eps + self.grid.cell_height();
        let expanded = IntervalBox2 {
            re_lo: rect.re_lo - pad_re,
            re_hi: rect.re_hi + pad_re,
            im_lo: rect.im_lo - pad_im,
            im_hi: rect.im_hi + pad_im,
        };
        self.grid.cell_range(&expanded)
    }

    /// Invoke `f` on every successor (duplicates possible across step words);
    /// stops early when `f` returns true. Returns whether it stopped.
    fn visit_successors<F: FnMut(u32) -> bool>(&self, node: u32, mut f: F) -> bool {
        let mut iter = SuccIter::new(self, node);
        while let Some(w) = iter.next(self) {
            if f(w) {
                return true;
            }
        }
        false
    }

    /// Edge predicate shared with the successor iterator: decomposed per-axis
    /// so boundary ties resolve identically everywhere.
    fn edge_gap_ok(&self, rect: &IntervalBox2, c: Cell) -> bool {
        let b = self.grid.bounds();
        let h = self.grid.cell_height();
        let w = self.grid.cell_width();
        let cell_im_lo = b.im_lo + c.iy as f64 * h;
        let gy = (rect.im_lo - (cell_im_lo + h))
            .max(cell_im_lo - rect.im_hi)
            .max(0.0);
        let rem = self.eps_sq - gy * gy;
        if rem < 0.0 {
            return false;
        }
        let cell_re_lo = b.re_lo + c.ix as f64 * w;
        let gx = (rect.re_lo - (cell_re_lo + w))
            .max(cell_re_lo - rect.re_hi)
            .max(0.0);
        gx * gx <= rem
    }

    fn has_self_loop(&self, node: u32) -> bool {
        let own = self.nodes[node as usize];
        self.rects_of(node).iter().any(|r| self.edge_gap_ok(r, own))
    }

    /// Raw successor emission count (duplicates included); a cheap proxy for
    /// the edge work a traversal performs on this node.
    pub fn successors_count(&self, cell: Cell) -> u64 {
        let node = self
            .node_of(cell)
            .expect("cell is not a node of this step graph");
        let mut n = 0u64;
        self.visit_successors(node, |_| {
            n += 1;
            false
        });
        n
    }

    /// Deduplicated successors of a cell, in row-major order.
    pub fn successors(&self, cell: Cell) -> Vec<Cell> {
        let node = self
            .node_of(cell)
            .expect("cell is not a node of this step graph");
        let mut seen = vec![false; self.nodes.len()];
        self.visit_successors(node, |w| {
            seen[w as usize] = true;
            false
        });
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| self.nodes[i])
            .collect()
    }

    /// Materialized edge list (intended for small graphs and export).
    pub fn edges(&self) -> Vec<(Cell, Cell)> {
        let mut out = Vec::new();
        for (i, &c) in self.nodes.iter().enumerate() {
            let _ = i;
            for s in self.successors(c) {
                out.push((c, s));
            }
        }
        out
    }

    /// Edge list CSV `src,dst` using linear cell ids `iy * side + ix`.
    pub fn write_edge_csv(&self, path: &Path) -> Result<(), GridError> {
        let side = self.grid.side() as u64;
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "src,dst")?;
        for (a, b) in self.edges() {
            writeln!(
                out,
                "{},{}",
                a.iy as u64 * side + a.ix as u64,
                b.iy as u64 * side + b.ix as u64
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// True iff a directed path of length >= 1 leads from `a` to `b`.
    pub fn chain_reachable(&self, a: Cell, b: Cell) -> bool {
        let start = self.node_of(a).expect("cell a is not in the graph");
        let target = self.node_of(b).expect("cell b is not in the graph");
        let mut visited = vec![false; self.nodes.len()];
        let mut queue = std::collections::VecDeque::new();
        let hit = self.visit_successors(start, |w| {
            if w == target {
                return true;
            }
            if !visited[w as usize] {
                visited[w as usize] = true;
                queue.push_back(w);
            }
            false
        });
        if hit {
            return true;
        }
        while let Some(v) = queue.pop_front() {
            let hit = self.visit_successors(v, |w| {
                if w == target {
                    return true;
                }
                if !visited[w as usize] {
                    visited[w as usize] = true;
                    queue.push_back(w);
                }
                false
            });
            if hit {
                return true;
            }
        }
        false
    }

    /// Tarjan strongly connected components over the implicit adjacency.
    /// Returns per-node component ids and component sizes.
    pub fn scc(&self) -> (Vec<u32>, Vec<u32>) {
        let n = self.nodes.len();
        let mut index = vec![ABSENT; n];
        let mut lowlink = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![ABSENT; n];
        let mut comp_sizes: Vec<u32> = Vec::new();
        let mut counter: u32 = 0;
        let mut scc_stack: Vec<u32> = Vec::new();
        let mut frames: Vec<(u32, SuccIter)> = Vec::new();

        for root in 0..n as u32 {
            if index[root as usize] != ABSENT {
                continue;
            }
            index[root as usize] = counter;
            lowlink[root as usize] = counter;
            counter += 1;
            on_stack[root as usize] = true;
            scc_stack.push(root);
            frames.push((root, SuccIter::new(self, root)));

            while let Some((node, iter)) = frames.last_mut() {
                let v = *node;
                if let Some(w) = iter.next(self) {
                    if index[w as usize] == ABSENT {
                        index[w as usize] = counter;
                        lowlink[w as usize] = counter;
                        counter += 1;
                        on_stack[w as usize] = true;
                        scc_stack.push(w);
                        frames.push((w, SuccIter::new(self, w)));
                    } else if on_stack[w as usize] {
                        lowlink[v as usize] = lowlink[v as usize].min(index[w as usize]);
                    }
                } else {
                    frames.pop();
                    if lowlink[v as usize] == index[v as usize] {
                        let id = comp_sizes.len() as u32;
                        let mut size = 0u32;
                        loop {
                            let w = scc_stack.pop().unwrap();
                            on_stack[w as usize] = false;
                            comp[w as usize] = id;
                            size += 1;
                            if w == v {
                                break;
                            }
                        }
                        comp_sizes.push(size);
                    }
                    if let Some((parent, _)) = frames.last() {
                        lowlink[*parent as usize] =
                            lowlink[*parent as usize].min(lowlink[v as usize]);
                    }
                }
            }
        }
        (comp, comp_sizes)
    }

    /// Strongly connected components with no edge leaving them, as cell sets
    /// (only components that contain a cycle). Fattened by one layer these
    /// make natural trapping-region candidates.
    pub fn attracting_scc_cells(&self) -> Vec<BoxSet> {
        let (comp, sizes) = self.scc();
        let ncomp = sizes.len();
        let mut attracting = vec![true; ncomp];
        let mut cyclic = vec![false; ncomp];
        for i in 0..self.nodes.len() as u32 {
            let ci = comp[i as usize];
            if sizes[ci as usize] >= 2 || self.has_self_loop(i) {
                cyclic[ci as usize] = true;
            }
            self.visit_successors(i, |w| {
                if comp[w as usize] != ci {
                    attracting[ci as usize] = false;
                }
                false
            });
        }
        let mut by_comp: Vec<Vec<Cell>> = vec![Vec::new(); ncomp];
        for (i, &c) in self.nodes.iter().enumerate() {
            let ci = comp[i] as usize;
            if attracting[ci] && cyclic[ci] {
                by_comp[ci].push(c);
            }
        }
        let mut out: Vec<BoxSet> = by_comp
            .into_iter()
            .filter(|v| !v.is_empty())
            .map(|mut v| {
                v.sort_unstable();
                BoxSet::from_sorted_unchecked(self.grid, v)
            })
            .collect();
        out.sort_by_key(|s| s.cells()[0]);
        out
    }

    /// Cells lying on a directed cycle: members of a component of size >= 2,
    /// or carrying a self-loop.
    pub fn recurrent_cells(&self) -> BoxSet {
        self.recurrent_with_components().0
    }

    /// Cycle cells together with their component ids (aligned with the
    /// returned cell order).
    pub fn recurrent_with_components(&self) -> (BoxSet, Vec<u32>) {
        let (comp, sizes) = self.scc();
        let mut cells = Vec::new();
        let mut ids = Vec::new();
        for (i, &c) in self.nodes.iter().enumerate() {
            if sizes[comp[i] as usize] >= 2 || self.has_self_loop(i as u32) {
                cells.push(c);
                ids.push(comp[i]);
            }
        }
        (BoxSet::from_sorted_unchecked(self.grid, cells), ids)
    }
}

/// Cells of the graph lying on a directed cycle.
pub fn chain_recurrent_cells(gr: &StepGraph) -> BoxSet {
    gr.recurrent_cells()
}

/// Exact x-run of cells in row `y` with gap to `rect` within eps, or None
/// when the row contributes nothing. The run bounds come from closed-form
/// float arithmetic with a one-cell safety margin, then exact trimming; the
/// sublevel set of the V-shaped per-axis gap is a single interval.
fn row_run(gr: &StepGraph, rect: &IntervalBox2, y: u32) -> Option<(u32, u32)> {
    let grid = &gr.grid;
    let b = grid.bounds();
    let h = grid.cell_height();
    let w = grid.cell_width();
    let side = grid.side() as i64;
    let cell_im_lo = b.im_lo + y as f64 * h;
    let gy = (rect.im_lo - (cell_im_lo + h))
        .max(cell_im_lo - rect.im_hi)
        .max(0.0);
    let rem = gr.eps_sq - gy * gy;
    if rem < 0.0 {
        return None;
    }
    let dx = rem.sqrt();
    let gx_sq = |x: i64| -> f64 {
        let lo = b.re_lo + x as f64 * w;
        let g = (rect.re_lo - (lo + w)).max(lo - rect.re_hi).max(0.0);
        g * g
    };
    let raw_lo = ((rect.re_lo - dx - b.re_lo) / w).floor();
    let raw_hi = ((rect.re_hi + dx - b.re_lo) / w).floor();
    if raw_hi < -1.0 || raw_lo > side as f64 {
        return None;
    }
    let mut xa = if raw_lo.is_nan() {
        0
    } else {
        (raw_lo as i64).saturating_sub(1).max(0)
    };
    let mut xb = if raw_hi.is_nan() {
        side - 1
    } else {
        (raw_hi as i64).saturating_add(1).min(side - 1)
    };
    while xa <= xb && gx_sq(xa) > rem {
        xa += 1;
    }
    while xb >= xa && gx_sq(xb) > rem {
        xb -= 1;
    }
    if xa > xb {
        return None;
    }
    Some((xa as u32, xb as u32))
}

/// Resumable successor cursor: walks the grid rows covered by a node's image
/// rectangles, merging the per-rectangle eps-runs of each row so every
/// successor is emitted once per row. The emitted edge set matches the gap
/// predicate exactly.
struct SuccIter {
    /// (rect index, candidate row range) per image rectangle of the node.
    rects: Vec<(u32, u32, u32)>,
    y: u32,
    y_end: u32,
    done: bool,
    /// Merged runs of the current row and the emission cursor.
    runs: Vec<(u32, u32)>,
    run_i: usize,
    x: u32,
    row_base: usize,
    row_active: bool,
}

impl SuccIter {
    fn new(gr: &StepGraph, node: u32) -> SuccIter {
        let lo = gr.rect_offsets[node as usize];
        let hi = gr.rect_offsets[node as usize + 1];
        let mut rects = Vec::with_capacity((hi - lo) as usize);
        let mut y_min = u32::MAX;
        let mut y_max = 0u32;
        for r in lo..hi {
            if let Some((_, _, y0, y1)) = gr.candidate_range(&gr.rects[r as usize]) {
                rects.push((r, y0, y1));
                y_min = y_min.min(y0);
                y_max = y_max.max(y1);
            }
        }
        SuccIter {
            done: rects.is_empty(),
            rects,
            y: y_min,
            y_end: y_max,
            runs: Vec::new(),
            run_i: 0,
            x: 0,
            row_base: 0,
            row_active: false,
        }
    }

    fn next(&mut self, gr: &StepGraph) -> Option<u32> {
        loop {
            if self.row_active {
                while self.run_i < self.runs.len() {
                    let (_, b) = self.runs[self.run_i];
                    // scan via the occupancy bitmap, skipping empty words
                    while self.x <= b {
                        let lin = self.row_base + self.x as usize;
                        let word = gr.node_bits[lin / 64] >> (lin % 64);
                        if word == 0 {
                            // jump to the next 64-cell boundary
                            self.x = self.x + 64 - (lin % 64) as u32;
                            continue;
                        }
                        let step = word.trailing_zeros();
                        let x = self.x + step;
                        if x > b {
                            break;
                        }
                        self.x = x + 1;
                        return Some(gr.node_idx[self.row_base + x as usize]);
                    }
                    self.run_i += 1;
                    if self.run_i < self.runs.len() {
                        self.x = self.runs[self.run_i].0;
                    }
                }
                self.row_active = false;
                if self.y == self.y_end {
                    self.done = true;
                } else {
                    self.y += 1;
                }
            }
            if self.done {
                return None;
            }
            // gather and merge this row's runs
            self.runs.clear();
            for &(r, y0, y1) in &self.rects {
                if self.y < y0 || self.y > y1 {
                    continue;
                }
                if let Some(run) = row_run(gr, &gr.rects[r as usize], self.y) {
                    self.runs.push(run);
                }
            }
            if self.runs.is_empty() {
                if self.y == self.y_end {
                    self.done = true;
                } else {
                    self.y += 1;
                }
                continue;
            }
            self.runs.sort_unstable();
            let mut merged = 0;
            for i in 1..self.runs.len() {
                let (a, b) = self.runs[i];
                let (_, pb) = &mut self.runs[merged];
                if a <= pb.saturating_add(1) {
                    *pb = (*pb).max(b);
                } else {
                    merged += 1;
                    self.runs[merged] = (a, b);
                }
            }
            self.runs.truncate(merged + 1);
            self.run_i = 0;
            self.x = self.runs[0].0;
            self.row_base = self.y as usize * gr.grid.side() as usize;
            self.row_active = true;
        }
    }
}

fn push_step_images(
    sys: &GeneratorSystem,
    depth_left: usize,
    cur: IntervalBox2,
    out: &mut Vec<IntervalBox2>,
) {
    out.push(cur);
    if depth_left == 0 {
        return;
    }
    for g in sys.generators() {
        push_step_images(sys, depth_left - 1, eval_box(g, &cur), out);
    }
}

fn validate_schedules(g_schedule: &[Word], eps_schedule: &[f64]) -> Result<(), ChainError> {
    if g_schedule.is_empty() || eps_schedule.is_empty() {
        return Err(ChainError::Precondition("schedules must be nonempty".into()));
    }
    for g in g_schedule {
        if g.is_identity() {
            return Err(ChainError::Precondition(
                "g_schedule words must be nonempty (g ranges over G, not over the identity)".into(),
            ));
        }
    }
    for w in eps_schedule.windows(2) {
        if !(w[1] < w[0]) {
            return Err(ChainError::Precondition(
                "eps_schedule must be strictly decreasing".into(),
            ));
        }
    }
    if eps_schedule.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(ChainError::Precondition(
            "eps_schedule entries must be positive".into(),
        ));
    }
    Ok(())
}

fn children_of(set: &BoxSet, finer: &Grid) -> BoxSet {
    let mut cells = Vec::with_capacity(set.len() * 4);
    for &c in set.cells() {
        for dy in 0..2u32 {
            for dx in 0..2u32 {
                let child = Cell {
                    iy: c.iy * 2 + dy,
                    ix: c.ix * 2 + dx,
                };
                if finer.retained(child) {
                    cells.push(child);
                }
            }
        }
    }
    cells.sort_unstable();
    BoxSet::from_sorted_unchecked(*finer, cells)
}

/// Cycle cells and their component ids for one schedule pair.
pub struct PairRecurrence {
    pub recurrent: BoxSet,
    /// Component id per recurrent cell, aligned with `recurrent.cells()`.
    pub components: Vec<u32>,
}

/// Cycle cells of one `(g, eps)` pair at the grid's depth, computed through a
/// refinement ladder from a coarse grid: for a fixed pair, a cycle at depth
/// `d+1` projects to a cycle at depth `d` (enclosures are inclusion-isotone),
/// so cycle cells at the finer depth always lie in children of coarser cycle
/// cells and the node set can be pruned without changing the result. The
/// component partition is likewise unchanged: any cycle witnessing mutual
/// reachability consists of cycle cells only.
fn pair_recurrence(
    grid: &Grid,
    sys: &GeneratorSystem,
    g: &Word,
    eps: f64,
    step_len: usize,
) -> Result<PairRecurrence, ChainError> {
    let final_depth = grid.depth();
    let start_depth = final_depth.min(LADDER_START_DEPTH);
    let mut allow: Option<BoxSet> = None;
    for depth in start_depth..=final_depth {
        let gd = grid.with_depth(depth)?;
        let gr = StepGraph::build(&gd, sys, g, eps, step_len, allow.as_ref())?;
        let (recurrent, components) = gr.recurrent_with_components();
        if depth == final_depth {
            return Ok(PairRecurrence {
                recurrent,
                components,
            });
        }
        allow = Some(children_of(&recurrent, &grid.with_depth(depth + 1)?));
    }
    unreachable!("ladder always terminates at final_depth")
}

/// Per-pair recurrence analysis for the whole schedule, in pair order
/// (g-major, eps-minor), computed in parallel.
pub fn schedule_recurrence(
    grid: &Grid,
    sys: &GeneratorSystem,
    g_schedule: &[Word],
    eps_schedule: &[f64],
    step_len: usize,
) -> Result<Vec<PairRecurrence>, ChainError> {
    validate_schedules(g_schedule, eps_schedule)?;
    let mut pairs: Vec<(&Word, f64)> = Vec::new();
    for g in g_schedule {
        for &eps in eps_schedule {
            pairs.push((g, eps));
        }
    }
    pairs
        .par_iter()
        .map(|(g, eps)| pair_recurrence(grid, sys, g, *eps, step_len))
        .collect()
}

/// The chain recurrent approximation carried by a schedule analysis: the
/// intersection of the per-pair cycle cells.
pub fn cr_of_recurrence(analysis: &[PairRecurrence]) -> BoxSet {
    analysis
        .iter()
        .skip(1)
        .fold(analysis[0].recurrent.clone(), |acc, r| {
            acc.intersect(&r.recurrent)
        })
}

/// Outer approximation of the chain recurrent set: the intersection over all
/// `(g, eps)` schedule pairs of the cycle cells of the corresponding step
/// graphs, evaluated at the grid's depth.
pub fn approx_cr(
    grid: &Grid,
    sys: &GeneratorSystem,
    g_schedule: &[Word],
    eps_schedule: &[f64],
    step_len: usize,
) -> Result<BoxSet, ChainError> {
    let analysis = schedule_recurrence(grid, sys, g_schedule, eps_schedule, step_len)?;
    Ok(cr_of_recurrence(&analysis))
}

/// A labeled partition of a cell set into chain components.
#[derive(Clone, Debug)]
pub struct ChainComponents {
    classes: Vec<BoxSet>,
}

impl ChainComponents {
    pub fn classes(&self) -> &[BoxSet] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// CSV `ix,iy,component_id`, rows in row-major cell order.
    pub fn write_csv(&self, path: &Path) -> Result<(), GridError> {
        let mut rows: Vec<(Cell, usize)> = Vec::new();
        for (id, class) in self.classes.iter().enumerate() {
            for &c in class.cells() {
                rows.push((c, id));
            }
        }
        rows.sort_unstable();
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "ix,iy,component_id")?;
        for (c, id) in rows {
            writeln!(out, "{},{},{id}", c.ix, c.iy)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn group_classes(grid: &Grid, labeled: Vec<(Cell, u64)>) -> ChainComponents {
    let mut by_label: HashMap<u64, Vec<Cell>> = HashMap::new();
    for (c, l) in labeled {
        by_label.entry(l).or_default().push(c);
    }
    let mut classes: Vec<BoxSet> = by_label
        .into_values()
        .map(|mut cells| {
            cells.sort_unstable();
            BoxSet::from_sorted_unchecked(*grid, cells)
        })
        .collect();
    classes.sort_by_key(|s| s.cells()[0]);
    ChainComponents { classes }
}

/// Partition `cr` by mutual chain reachability in one step graph (strongly
/// connected components restricted to `cr`).
pub fn chain_components(gr: &StepGraph, cr: &BoxSet) -> Result<ChainComponents, ChainError> {
    if cr.grid() != gr.grid() {
        return Err(ChainError::Precondition(
            "cr lives on a different grid than the step graph".into(),
        ));
    }
    if !cr.is_subset(&gr.recurrent_cells()) {
        return Err(ChainError::Precondition(
            "cr must be contained in the graph's chain recurrent cells".into(),
        ));
    }
    let (comp, _) = gr.scc();
    let labeled = cr
        .cells()
        .iter()
        .map(|&c| {
            let idx = gr.node_of(c).expect("cr cell is a node");
            (c, comp[idx as usize] as u64)
        })
        .collect();
    Ok(group_classes(gr.grid(), labeled))
}

/// Partition `cr` by mutual chain reachability across a whole schedule
/// analysis: the common refinement of the per-pair component partitions.
/// `cr` must be contained in every pair's cycle cells.
pub fn components_of_recurrence(
    grid: &Grid,
    cr: &BoxSet,
    analysis: &[PairRecurrence],
) -> Result<ChainComponents, ChainError> {
    let mut labels: Vec<u64> = vec![0; cr.len()];
    for pair in analysis {
        let mut remap: HashMap<(u64, u64), u64> = HashMap::new();
        for (l, &c) in labels.iter_mut().zip(cr.cells()) {
            let pos = pair
                .recurrent
                .cells()
                .binary_search(&c)
                .map_err(|_| {
                    ChainError::Precondition(
                        "cr must be contained in every pair's chain recurrent cells".into(),
                    )
                })?;
            let p = pair.components[pos] as u64;
            let next = remap.len() as u64;
            let id = *remap.entry((*l, p)).or_insert(next);
            *l = id;
        }
    }
    let labeled = cr.cells().iter().copied().zip(labels).collect();
    Ok(group_classes(grid, labeled))
}

/// Partition `cr` by mutual chain reachability across a whole schedule: the
/// common refinement of the per-pair component partitions.
pub fn chain_components_schedule(
    grid: &Grid,
    sys: &GeneratorSystem,
    cr: &BoxSet,
    g_schedule: &[Word],
    eps_schedule: &[f64],
    step_len: usize,
) -> Result<ChainComponents, ChainError> {
    let analysis = schedule_recurrence(grid, sys, g_schedule, eps_schedule, step_len)?;
    components_of_recurrence(grid, cr, &analysis)
}

/// Outcome of the pairwise open-set transitivity test.
#[derive(Clone, Debug)]
pub struct TransitivityCheck {
    pub transitive: bool,
    /// First ordered cell pair with no connecting word, when not transitive.
    pub failing_pair: Option<(Cell, Cell)>,
    /// Per word (in enumeration order), how many ordered pairs it covered
    /// that no earlier word covered.
    pub coverage: Vec<(Word, usize)>,
}

/// Pairwise transitivity at cell resolution: for every ordered pair of cells
/// `(U, V)` some word `w` with `|w| <= word_budget` (identity allowed) has
/// `word_box_image(w, U)` meeting `V`.
pub fn is_topologically_transitive(
    grid: &Grid,
    sys: &GeneratorSystem,
    word_budget: usize,
) -> Result<TransitivityCheck, ChainError> {
    let cells = grid.cells();
    if cells.len() > TRANSITIVITY_CELL_CAP {
        return Err(ChainError::Budget(format!(
            "{} cells exceed the pairwise transitivity cap of {}",
            cells.len(),
            TRANSITIVITY_CELL_CAP
        )));
    }
    let words = enumerate_words(sys, word_budget)?;
    let mut coverage = vec![0usize; words.len()];
    let mut failing: Option<(Cell, Cell)> = None;

    'sources: for &u in &cells {
        let mut reached = vec![false; cells.len()];
        let mut remaining = cells.len();
        for (wi, w) in words.iter().enumerate() {
            let mut img = grid.cell_box(u);
            for &i in w.indices().iter().rev() {
                img = eval_box(&sys.generators()[i], &img);
            }
            if let Some((x0, x1, y0, y1)) = grid.cell_range(&img) {
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        let c = Cell { iy: y, ix: x };
                        if !grid.retained(c) {
                            continue;
                        }
                        if !img.intersects(&grid.cell_box(c)) {
                            continue;
                        }
                        if let Ok(pos) = cells.binary_search(&c) {
                            if !reached[pos] {
                                reached[pos] = true;
                                remaining -= 1;
                                coverage[wi] += 1;
                            }
                        }
                    }
                }
            }
            if remaining == 0 {
                break;
            }
        }
        if remaining > 0 {
            let v = cells[reached.iter().position(|&r| !r).unwrap()];
            failing = Some((u, v));
            break 'sources;
        }
    }

    Ok(TransitivityCheck {
        transitive: failing.is_none(),
        failing_pair: failing,
        coverage: words.into_iter().zip(coverage).collect(),
    })
}

/// True iff for every schedule pair and every ordered pair of cells in
/// `cells` (including a cell with itself) there is a chain path of length at
/// least one. Paths may pass through arbitrary grid cells.
pub fn is_chain_transitive(
    grid: &Grid,
    sys: &GeneratorSystem,
    cells: &BoxSet,
    g_schedule: &[Word],
    eps_schedule: &[f64],
    step_len: usize,
) -> Result<bool, ChainError> {
    validate_schedules(g_schedule, eps_schedule)?;
    if cells.is_empty() {
        return Err(ChainError::Precondition("cell set must be nonempty".into()));
    }
    for g in g_schedule {
        for &eps in eps_schedule {
            let gr = StepGraph::build(grid, sys, g, eps, step_len, None)?;
            let (comp, sizes) = gr.scc();
            let mut class = None;
            for &c in cells.cells() {
                let idx = gr.node_of(c).ok_or_else(|| {
                    ChainError::Precondition("cell outside the grid's retained cells".into())
                })?;
                let my = comp[idx as usize];
                match class {
                    None => class = Some(my),
                    Some(prev) if prev != my => return Ok(false),
                    _ => {}
                }
                if sizes[my as usize] < 2 && !gr.has_self_loop(idx) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
