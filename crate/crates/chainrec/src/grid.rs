//! Uniform box grids over a compact planar region, and sets of grid cells.
//!
//! The phase space is an axis-aligned rectangle subdivided into
//! `2^depth x 2^depth` cells, optionally trimmed by a membership region such
//! as the closed unit disc. Cells are addressed by integer coordinates
//! `(ix, iy)` counted from the lower-left corner. Points are assigned to
//! cells half-open in each axis, so every point of the region lies in exactly
//! one cell.
//!
//! Open regions are represented as unions of cells; the one-layer fattening
//! `fatten(s, 0.0)` plays the role of the closure operator.

use crate::interval::IntervalBox2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

pub const MAX_DEPTH: u32 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid depth {0} exceeds the maximum of {MAX_DEPTH}")]
    DepthTooLarge(u32),
    #[error("invalid grid bounds: {0}")]
    BadBounds(String),
    #[error("cell ({ix},{iy}) is outside the grid or its membership region")]
    InvalidCell { ix: u32, iy: u32 },
    #[error("box sets live on different grids")]
    GridMismatch,
    #[error("hausdorff distance requires nonempty sets")]
    EmptySet,
    #[error("samples_per_cell must be at least 1")]
    NoSamples,
    #[error("io error: {0}")]
    Io(String),
    #[error("malformed cell csv: {0}")]
    BadCsv(String),
}

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        GridError::Io(e.to_string())
    }
}

/// Membership region trimming the rectangular bounds. Cells are retained when
/// they intersect the region (outer cover).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    /// Keep every cell of the bounding rectangle.
    All,
    /// Keep cells meeting the closed disc of the given center and radius.
    Disc {
        center_re: f64,
        center_im: f64,
        radius: f64,
    },
}

/// Integer cell coordinates. The derived ordering is row-major
/// (by `iy`, then `ix`), which is the canonical ordering of all cell lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub iy: u32,
    pub ix: u32,
}

impl Cell {
    pub fn new(ix: u32, iy: u32) -> Cell {
        Cell { iy, ix }
    }
}

/// A uniform grid over a compact rectangle, with an optional membership
/// region. Cheap to copy; two grids are compatible when they compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    bounds: IntervalBox2,
    depth: u32,
    membership: Membership,
}

impl Grid {
    pub fn new(bounds: IntervalBox2, depth: u32, membership: Membership) -> Result<Grid, GridError> {
        if depth > MAX_DEPTH {
            return Err(GridError::DepthTooLarge(depth));
        }
        if bounds.width_re() <= 0.0 || bounds.width_im() <= 0.0 {
            return Err(GridError::BadBounds(
                "bounds must have positive width and height".into(),
            ));
        }
        Ok(Grid {
            bounds,
            depth,
            membership,
        })
    }

    pub fn bounds(&self) -> IntervalBox2 {
        self.bounds
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn membership(&self) -> Membership {
        self.membership
    }

    /// Same bounds and membership at a different subdivision depth.
    pub fn with_depth(&self, depth: u32) -> Result<Grid, GridError> {
        Grid::new(self.bounds, depth, self.membership)
    }

    /// Cells per axis.
    pub fn side(&self) -> u32 {
        1u32 << self.depth
    }

    pub fn cell_width(&self) -> f64 {
        self.bounds.width_re() / self.side() as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.bounds.width_im() / self.side() as f64
    }

    pub fn cell_diameter(&self) -> f64 {
        self.cell_width().hypot(self.cell_height())
    }

    pub fn cell_box(&self, c: Cell) -> IntervalBox2 {
        let w = self.cell_width();
        let h = self.cell_height();
        IntervalBox2 {
            re_lo: self.bounds.re_lo + c.ix as f64 * w,
            re_hi: self.bounds.re_lo + (c.ix + 1) as f64 * w,
            im_lo: self.bounds.im_lo + c.iy as f64 * h,
            im_hi: self.bounds.im_lo + (c.iy + 1) as f64 * h,
        }
    }

    pub fn cell_center(&self, c: Cell) -> Complex64 {
        let w = self.cell_width();
        let h = self.cell_height();
        Complex64::new(
            self.bounds.re_lo + (c.ix as f64 + 0.5) * w,
            self.bounds.im_lo + (c.iy as f64 + 0.5) * h,
        )
    }

    /// The cell containing a point (half-open convention, clamped to the
    /// grid on the high edges). Returns None outside the bounds.
    pub fn locate(&self, p: Complex64) -> Option<Cell> {
        if !self.bounds.contains(p) {
            return None;
        }
        let side = self.side();
        let ix = (((p.re - self.bounds.re_lo) / self.cell_width()) as u32).min(side - 1);
        let iy = (((p.im - self.bounds.im_lo) / self.cell_height()) as u32).min(side - 1);
        Some(Cell { iy, ix })
    }

    /// Whether the cell intersects the membership region.
    pub fn retained(&self, c: Cell) -> bool {
        match self.membership {
            Membership::All => true,
            Membership::Disc {
                center_re,
                center_im,
                radius,
            } => self.cell_box(c).dist_to_point(center_re, center_im) <= radius,
        }
    }

    /// All retained cells in row-major order.
    pub fn cells(&self) -> Vec<Cell> {
        let side = self.side();
        let mut out = Vec::new();
        for iy in 0..side {
            for ix in 0..side {
                let c = Cell { iy, ix };
                if self.retained(c) {
                    out.push(c);
                }
            }
        }
        out
    }

    pub fn cell_count(&self) -> usize {
        match self.membership {
            Membership::All => (self.side() as usize) * (self.side() as usize),
            _ => self.cells().len(),
        }
    }

    /// The full retained region as a box set.
    pub fn all_cells(&self) -> BoxSet {
        BoxSet {
            grid: *self,
            cells: self.cells(),
        }
    }

    /// Cell indices whose closed boxes meet the given rectangle, clamped to
    /// the grid. Empty when the rectangle misses the bounds entirely.
    /// A rectangle edge exactly on a cell boundary includes the next cell,
    /// matching the half-open point-to-cell assignment.
    pub fn cell_range(&self, b: &IntervalBox2) -> Option<(u32, u32, u32, u32)> {
        let side = self.side() as i64;
        let w = self.cell_width();
        let h = self.cell_height();
        let x0 = ((b.re_lo - self.bounds.re_lo) / w).floor();
        let x1 = ((b.re_hi - self.bounds.re_lo) / w).floor();
        let y0 = ((b.im_lo - self.bounds.im_lo) / h).floor();
        let y1 = ((b.im_hi - self.bounds.im_lo) / h).floor();
        let clamp = |v: f64| -> i64 {
            if v.is_nan() {
                0
            } else if v <= 0.0 {
                0
            } else if v >= (side - 1) as f64 {
                side - 1
            } else {
                v as i64
            }
        };
        if x1 < 0.0 || y1 < 0.0 || x0 >= side as f64 || y0 >= side as f64 {
            return None;
        }
        Some((
            clamp(x0) as u32,
            clamp(x1) as u32,
            clamp(y0) as u32,
            clamp(y1) as u32,
        ))
    }
}

/// A dense bitmap over all grid cells; scratch space for set construction.
pub(crate) struct CellMask {
    side: usize,
    words: Vec<u64>,
}

impl CellMask {
    pub fn new(grid: &Grid) -> CellMask {
        let side = grid.side() as usize;
        CellMask {
            side,
            words: vec![0u64; (side * side).div_ceil(64)],
        }
    }

    #[inline]
    pub fn index(&self, c: Cell) -> usize {
        c.iy as usize * self.side + c.ix as usize
    }

    #[inline]
    pub fn set(&mut self, c: Cell) {
        let i = self.index(c);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn get(&self, c: Cell) -> bool {
        let i = self.index(c);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Cells in row-major order.
    pub fn to_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (w_idx, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                let i = w_idx * 64 + b;
                out.push(Cell {
                    iy: (i / self.side) as u32,
                    ix: (i % self.side) as u32,
                });
                bits &= bits - 1;
            }
        }
        out
    }
}

/// An immutable set of retained grid cells, kept sorted in row-major order
/// without duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    grid: Grid,
    cells: Vec<Cell>,
}

impl BoxSet {
    pub fn empty(grid: Grid) -> BoxSet {
        BoxSet {
            grid,
            cells: Vec::new(),
        }
    }

    /// Build from arbitrary cells; validates, sorts, and deduplicates.
    pub fn from_cells(grid: Grid, mut cells: Vec<Cell>) -> Result<BoxSet, GridError> {
        let side = grid.side();
        for &c in &cells {
            if c.ix >= side || c.iy >= side || !grid.retained(c) {
                return Err(GridError::InvalidCell { ix: c.ix, iy: c.iy });
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(BoxSet { grid, cells })
    }

    pub(crate) fn from_sorted_unchecked(grid: Grid, cells: Vec<Cell>) -> BoxSet {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        BoxSet { grid, cells }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    fn check_same_grid(&self, other: &BoxSet) -> Result<(), GridError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(GridError::GridMismatch)
        }
    }

    pub fn union(&self, other: &BoxSet) -> BoxSet {
        self.check_same_grid(other).expect("box set grid mismatch");
        let mut cells = Vec::with_capacity(self.cells.len() + other.cells.len());
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => {
                    cells.push(self.cells[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    cells.push(other.cells[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    cells.push(self.cells[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        cells.extend_from_slice(&self.cells[i..]);
        cells.extend_from_slice(&other.cells[j..]);
        BoxSet {
            grid: self.grid,
            cells,
        }
    }

    pub fn intersect(&self, other: &BoxSet) -> BoxSet {
        self.check_same_grid(other).expect("box set grid mismatch");
        let mut cells = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    cells.push(self.cells[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        BoxSet {
            grid: self.grid,
            cells,
        }
    }

    pub fn difference(&self, other: &BoxSet) -> BoxSet {
        self.check_same_grid(other).expect("box set grid mismatch");
        let mut cells = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() {
            if j >= other.cells.len() {
                cells.extend_from_slice(&self.cells[i..]);
                break;
            }
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => {
                    cells.push(self.cells[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        BoxSet {
            grid: self.grid,
            cells,
        }
    }

    /// Complement within the retained cells of the grid.
    pub fn complement(&self) -> BoxSet {
        self.grid.all_cells().difference(self)
    }

    pub fn is_subset(&self, other: &BoxSet) -> bool {
        self.check_same_grid(other).expect("box set grid mismatch");
        let mut j = 0;
        for &c in &self.cells {
            while j < other.cells.len() && other.cells[j] < c {
                j += 1;
            }
            if j >= other.cells.len() || other.cells[j] != c {
                return false;
            }
        }
        true
    }

    /// All retained cells within Euclidean distance `eps` of some cell of the
    /// set, measured between closed cell rectangles. `eps = 0` adds exactly
    /// the touching neighbors (one-layer closure).
    pub fn fatten(&self, eps: f64) -> BoxSet {
        assert!(eps >= 0.0 && eps.is_finite(), "fatten needs eps >= 0");
        if self.cells.is_empty() {
            return self.clone();
        }
        let w = self.grid.cell_width();
        let h = self.grid.cell_height();
        let rx = (eps / w).floor() as i64 + 1;
        let ry = (eps / h).floor() as i64 + 1;
        // Offsets whose rectangle-to-rectangle gap is within eps.
        let mut offsets = Vec::new();
        for dy in -ry..=ry {
            for dx in -rx..=rx {
                let gx = (dx.abs() - 1).max(0) as f64 * w;
                let gy = (dy.abs() - 1).max(0) as f64 * h;
                if gx * gx + gy * gy <= eps * eps {
                    offsets.push((dx, dy));
                }
            }
        }
        let side = self.grid.side() as i64;
        let mut mask = CellMask::new(&self.grid);
        for &c in &self.cells {
            for &(dx, dy) in &offsets {
                let x = c.ix as i64 + dx;
                let y = c.iy as i64 + dy;
                if x < 0 || y < 0 || x >= side || y >= side {
                    continue;
                }
                let cand = Cell {
                    iy: y as u32,
                    ix: x as u32,
                };
                if !mask.get(cand) && self.grid.retained(cand) {
                    mask.set(cand);
                }
            }
        }
        BoxSet {
            grid: self.grid,
            cells: mask.to_cells(),
        }
    }

    /// Symmetric Hausdorff distance between the two cell sets, computed on
    /// cell centers (error at most one cell diameter).
    pub fn hausdorff(&self, other: &BoxSet) -> Result<f64, GridError> {
        self.check_same_grid(other)?;
        if self.is_empty() || other.is_empty() {
            return Err(GridError::EmptySet);
        }
        let d1 = directed_hausdorff_sq(&self.grid, &self.cells, &other.cells);
        let d2 = directed_hausdorff_sq(&self.grid, &other.cells, &self.cells);
        Ok(d1.max(d2).sqrt())
    }

    // --- serialization ---------------------------------------------------

    /// CSV with header `ix,iy`, rows in row-major cell order.
    pub fn write_csv(&self, path: &Path) -> Result<(), GridError> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "ix,iy")?;
        for c in &self.cells {
            writeln!(out, "{},{}", c.ix, c.iy)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, grid: Grid) -> Result<BoxSet, GridError> {
        let file = BufReader::new(std::fs::File::open(path)?);
        let mut cells = Vec::new();
        for (lineno, line) in file.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 {
                if line != "ix,iy" {
                    return Err(GridError::BadCsv(format!("bad header `{line}`")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| GridError::BadCsv(format!("line {}: `{line}`", lineno + 1)))?;
            let ix: u32 = a
                .parse()
                .map_err(|_| GridError::BadCsv(format!("line {}: `{line}`", lineno + 1)))?;
            let iy: u32 = b
                .parse()
                .map_err(|_| GridError::BadCsv(format!("line {}: `{line}`", lineno + 1)))?;
            cells.push(Cell { iy, ix });
        }
        BoxSet::from_cells(grid, cells)
    }

    /// JSON sidecar carrying the grid bounds, depth and membership.
    pub fn write_grid_sidecar(&self, path: &Path) -> Result<(), GridError> {
        let json = serde_json::to_string_pretty(&self.grid)
            .map_err(|e| GridError::Io(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    /// Binary PGM (P5) raster, one pixel per cell, 255 = member. Row 0 of the
    /// image is the top of the region.
    pub fn write_pgm(&self, path: &Path) -> Result<(), GridError> {
        let side = self.grid.side() as usize;
        let mut data = vec![0u8; side * side];
        for c in &self.cells {
            let row = side - 1 - c.iy as usize;
            data[row * side + c.ix as usize] = 255;
        }
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        write!(out, "P5\n{side} {side}\n255\n")?;
        out.write_all(&data)?;
        out.flush()?;
        Ok(())
    }
}

fn directed_hausdorff_sq(grid: &Grid, from: &[Cell], to: &[Cell]) -> f64 {
    let to_centers: Vec<Complex64> = to.iter().map(|&c| grid.cell_center(c)).collect();
    from.par_iter()
        .map(|&a| {
            let ca = grid.cell_center(a);
            let mut best = f64::INFINITY;
            for cb in &to_centers {
                let d = (ca.re - cb.re) * (ca.re - cb.re) + (ca.im - cb.im) * (ca.im - cb.im);
                if d < best {
                    best = d;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Cells containing at least one sample satisfying the predicate. Samples are
/// a fixed sub-lattice per cell, so this is an inner-ish cover: good for
/// seeding candidate regions, never for certification.
pub fn cover_predicate<F>(grid: &Grid, pred: F, samples_per_cell: usize) -> Result<BoxSet, GridError>
where
    F: Fn(Complex64) -> bool + Sync,
{
    if samples_per_cell < 1 {
        return Err(GridError::NoSamples);
    }
    let k = (samples_per_cell as f64).sqrt().ceil() as usize;
    let side = grid.side();
    let w = grid.cell_width();
    let h = grid.cell_height();
    let rows: Vec<Vec<Cell>> = (0..side)
        .into_par_iter()
        .map(|iy| {
            let mut row = Vec::new();
            for ix in 0..side {
                let c = Cell { iy, ix };
                if !grid.retained(c) {
                    continue;
                }
                let b = grid.cell_box(c);
                'cell: for sy in 0..k {
                    for sx in 0..k {
                        let p = Complex64::new(
                            b.re_lo + (sx as f64 + 0.5) / k as f64 * w,
                            b.im_lo + (sy as f64 + 0.5) / k as f64 * h,
                        );
                        if pred(p) {
                            row.push(c);
                            break 'cell;
                        }
                    }
                }
            }
            row
        })
        .collect();
    let cells = rows.into_iter().flatten().collect();
    Ok(BoxSet::from_sorted_unchecked(*grid, cells))
}

/// Cells whose closed rectangle meets the closed ball of the given center
/// and radius (exact geometry, outer cover of the ball).
pub fn cover_ball(grid: &Grid, center: Complex64, radius: f64) -> BoxSet {
    let side = grid.side();
    let mut cells = Vec::new();
    for iy in 0..side {
        for ix in 0..side {
            let c = Cell { iy, ix };
            if grid.retained(c) && grid.cell_box(c).dist_to_point(center.re, center.im) <= radius {
                cells.push(c);
            }
        }
    }
    BoxSet::from_sorted_unchecked(*grid, cells)
}
