//! Superpixel partition state: label map, per-superpixel statistics, and the
//! machinery for moving pixels or whole blocks between superpixels.
//!
//! Every superpixel is kept 4-connected and above a minimum size at all
//! times; [`Partition::would_disconnect`] and the size floor gate each move
//! so the label map is a valid segmentation at any point during refinement.

mod hierarchy;

pub use hierarchy::{BlockHierarchy, BlockLevel, MinBlock};

use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::imgproc::LabImage;
use crate::io;

/// A unit of exchange between superpixels: one pixel, or one hierarchy block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Row-major pixel index.
    Pixel(usize),
    /// Block `index` within hierarchy level `level`.
    Block { level: usize, index: usize },
}

/// A proposed reassignment of `unit` from superpixel `from` to `to`.
#[derive(Debug, Clone, Copy)]
pub struct MoveProposal {
    pub unit: Unit,
    pub from: u32,
    pub to: u32,
}

/// Label map plus per-superpixel statistics kept exactly in sync with it.
#[derive(Debug, Clone)]
pub struct Partition {
    width: u32,
    height: u32,
    num_bins: usize,
    k: usize,
    labels: Vec<u32>,
    /// Per-pixel color bin, copied from the quantized image.
    bins: Vec<u16>,
    sizes: Vec<u32>,
    /// Color-bin counts per superpixel, `k * num_bins`, superpixel-major.
    histograms: Vec<u32>,
    /// Sum of squared histogram counts per superpixel.
    sumsq: Vec<u64>,
    /// Sum of (x, y) over each superpixel's pixels, for centroids.
    coord_sums: Vec<[u64; 2]>,
    init_sizes: Vec<u32>,
    /// Size floor per superpixel: a quarter of its initial size, at least 1.
    min_sizes: Vec<u32>,
}

impl Partition {
    // ------------------------------------------------------------------
    // Construction
    // ------------------------------------------------------------------

    /// Builds a partition from an explicit label map with no color data
    /// (a single shared bin). Labels must be `0..k` with every id present,
    /// and every superpixel must be 4-connected.
    pub fn from_label_map(width: u32, height: u32, labels: Vec<u32>) -> Result<Self> {
        let n = width as usize * height as usize;
        let bins = vec![0u16; n];
        Self::build(width, height, labels, bins, 1)
    }

    /// Builds a partition from a label map over a quantized image, taking
    /// per-pixel color bins from the image.
    pub fn from_label_map_on(img: &LabImage, labels: Vec<u32>) -> Result<Self> {
        if !img.is_quantized() {
            return Err(Error::config(
                "image must be quantized before building a partition over it",
            ));
        }
        Self::build(img.width, img.height, labels, img.bin.clone(), img.num_bins)
    }

    fn build(
        width: u32,
        height: u32,
        labels: Vec<u32>,
        bins: Vec<u16>,
        num_bins: usize,
    ) -> Result<Self> {
        let p = Self::assemble(width, height, labels, bins, num_bins)?;
        p.validate()?;
        Ok(p)
    }

    /// Shared construction: derives all statistics from the label map but
    /// does not run the (comparatively expensive) validity check. Callers
    /// that accept arbitrary label maps must validate afterwards.
    fn assemble(
        width: u32,
        height: u32,
        labels: Vec<u32>,
        bins: Vec<u16>,
        num_bins: usize,
    ) -> Result<Self> {
        let n = width as usize * height as usize;
        if labels.len() != n {
            return Err(Error::dimension(format!(
                "label map has {} entries for a {width}x{height} image ({n} pixels)",
                labels.len()
            )));
        }
        if n == 0 {
            return Err(Error::dimension("empty label map"));
        }
        let k = *labels.iter().max().unwrap() as usize + 1;
        let mut p = Self {
            width,
            height,
            num_bins,
            k,
            labels,
            bins,
            sizes: Vec::new(),
            histograms: Vec::new(),
            sumsq: Vec::new(),
            coord_sums: Vec::new(),
            init_sizes: Vec::new(),
            min_sizes: Vec::new(),
        };
        p.recount();
        p.init_sizes = p.sizes.clone();
        p.min_sizes = p.sizes.iter().map(|&s| (s / 4).max(1)).collect();
        Ok(p)
    }

    /// The regular grid start: one superpixel per hierarchy cell, where each
    /// cell is a 2x2 group of top-level blocks.
    pub fn init_grid(
        img: &LabImage,
        target_k: usize,
        min_block: MinBlock,
    ) -> Result<(Self, BlockHierarchy)> {
        Self::init_grid_impl(img, target_k, min_block, true)
    }

    /// Like [`Self::init_grid`], but the hierarchy holds only its top level;
    /// the finer levels are filled via [`BlockHierarchy::materialize`] when
    /// block refinement actually needs them.
    pub(crate) fn init_grid_lazy(
        img: &LabImage,
        target_k: usize,
        min_block: MinBlock,
    ) -> Result<(Self, BlockHierarchy)> {
        Self::init_grid_impl(img, target_k, min_block, false)
    }

    fn init_grid_impl(
        img: &LabImage,
        target_k: usize,
        min_block: MinBlock,
        all_levels: bool,
    ) -> Result<(Self, BlockHierarchy)> {
        if !img.is_quantized() {
            return Err(Error::config(
                "image must be quantized before grid initialization",
            ));
        }
        let (cells_x, cells_y) = hierarchy::fit_grid(img.width, img.height, target_k, min_block)?;
        let h = if all_levels {
            hierarchy::build_hierarchy(img, cells_x, cells_y, min_block)?
        } else {
            hierarchy::build_hierarchy_top_only(img, cells_x, cells_y, min_block)?
        };

        let top = h.level(h.top_level());
        let col_cell = cell_lut(&top.xs);
        let row_cell = cell_lut(&top.ys);
        let n = img.width as usize * img.height as usize;
        let mut labels = vec![0u32; n];
        for (row_labels, &rc) in labels.chunks_exact_mut(img.width as usize).zip(&row_cell) {
            let row = rc * cells_x as u32;
            for (label, &cc) in row_labels.iter_mut().zip(&col_cell) {
                *label = row + cc;
            }
        }

        // Each cell is the union of a 2x2 group of top-level blocks whose
        // statistics the hierarchy already holds, so the partition's
        // statistics are summed from blocks instead of a second image pass.
        // The grid is also valid by construction (every cell is a
        // rectangle), so the connectivity check is skipped.
        let k = cells_x * cells_y;
        let nb = img.num_bins;
        let mut part = Self {
            width: img.width,
            height: img.height,
            num_bins: nb,
            k,
            labels,
            bins: img.bin.clone(),
            sizes: vec![0; k],
            histograms: vec![0; k * nb],
            sumsq: vec![0; k],
            coord_sums: vec![[0; 2]; k],
            init_sizes: Vec::new(),
            min_sizes: Vec::new(),
        };
        for cy in 0..cells_y {
            for cx in 0..cells_x {
                let s = cy * cells_x + cx;
                for (by, bx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let b = top.block_index(cx * 2 + bx, cy * 2 + by);
                    part.sizes[s] += top.size[b];
                    for bin in 0..nb {
                        part.histograms[s * nb + bin] += top.histogram[b * nb + bin];
                    }
                    part.coord_sums[s][0] += top.coord_sum[b][0];
                    part.coord_sums[s][1] += top.coord_sum[b][1];
                }
                part.sumsq[s] = part.histograms[s * nb..(s + 1) * nb]
                    .iter()
                    .map(|&c| (c as u64) * (c as u64))
                    .sum();
            }
        }
        part.init_sizes = part.sizes.clone();
        part.min_sizes = part.sizes.iter().map(|&s| (s / 4).max(1)).collect();
        debug_assert_eq!(part.k, h.num_cells());
        debug_assert!(part.validate().is_ok());
        Ok((part, h))
    }

    /// Recomputes sizes, histograms, squared sums and coordinate sums from
    /// the label map.
    fn recount(&mut self) {
        let k = self.k;
        let nb = self.num_bins;
        self.sizes = vec![0; k];
        self.histograms = vec![0; k * nb];
        self.coord_sums = vec![[0; 2]; k];
        let w = self.width as usize;
        let mut p = 0usize;
        for y in 0..self.height as u64 {
            for x in 0..w as u64 {
                let s = self.labels[p] as usize;
                self.sizes[s] += 1;
                self.histograms[s * nb + self.bins[p] as usize] += 1;
                self.coord_sums[s][0] += x;
                self.coord_sums[s][1] += y;
                p += 1;
            }
        }
        self.sumsq = (0..k)
            .map(|s| {
                self.histograms[s * nb..(s + 1) * nb]
                    .iter()
                    .map(|&c| (c as u64) * (c as u64))
                    .sum()
            })
            .collect();
    }

    // ------------------------------------------------------------------
    // Accessors
    // ------------------------------------------------------------------

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn num_pixels(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, x: u32, y: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn size(&self, s: u32) -> u32 {
        self.sizes[s as usize]
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn histogram(&self, s: u32) -> &[u32] {
        let nb = self.num_bins;
        &self.histograms[s as usize * nb..(s as usize + 1) * nb]
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn bin_of(&self, pixel: usize) -> u16 {
        self.bins[pixel]
    }

    /// Per-pixel color bins, row-major.
    pub(crate) fn bins(&self) -> &[u16] {
        &self.bins
    }

    /// Sum of squared histogram counts, kept incrementally current.
    pub fn sum_squared_counts(&self, s: u32) -> u64 {
        self.sumsq[s as usize]
    }

    pub fn init_size(&self, s: u32) -> u32 {
        self.init_sizes[s as usize]
    }

    pub fn min_size(&self, s: u32) -> u32 {
        self.min_sizes[s as usize]
    }

    /// Mean pixel position of a superpixel.
    pub fn centroid(&self, s: u32) -> [f64; 2] {
        let size = self.sizes[s as usize] as f64;
        let c = self.coord_sums[s as usize];
        [c[0] as f64 / size, c[1] as f64 / size]
    }

    // ------------------------------------------------------------------
    // Units and move gating
    // ------------------------------------------------------------------

    /// Current label of a unit. For blocks this is the label of the top-left
    /// pixel; during block-level sweeps blocks are never split, so any pixel
    /// of the block carries the same label.
    pub fn unit_label(&self, h: &BlockHierarchy, unit: Unit) -> u32 {
        match unit {
            Unit::Pixel(p) => self.labels[p],
            Unit::Block { level, index } => {
                self.labels[h.level(level).top_left_pixel(index, self.width)]
            }
        }
    }

    pub fn unit_size(&self, h: &BlockHierarchy, unit: Unit) -> u32 {
        match unit {
            Unit::Pixel(_) => 1,
            Unit::Block { level, index } => h.level(level).size[index],
        }
    }

    /// Whether a unit touches at least one differently labeled unit through
    /// a 4-neighbor (pixels) or grid-adjacent block (blocks).
    pub fn is_boundary_unit(&self, h: &BlockHierarchy, unit: Unit) -> bool {
        match unit {
            Unit::Pixel(p) => {
                let label = self.labels[p];
                self.pixel_neighbors(p)
                    .into_iter()
                    .flatten()
                    .any(|q| self.labels[q] != label)
            }
            Unit::Block { level, index } => {
                let lv = h.level(level);
                let label = self.labels[lv.top_left_pixel(index, self.width)];
                self.block_neighbors(lv, index)
                    .into_iter()
                    .flatten()
                    .any(|b| self.labels[lv.top_left_pixel(b, self.width)] != label)
            }
        }
    }

    /// 4-neighbors of a pixel in left, right, up, down order.
    pub fn pixel_neighbors(&self, p: usize) -> [Option<usize>; 4] {
        let w = self.width as usize;
        let x = p % w;
        let y = p / w;
        [
            (x > 0).then(|| p - 1),
            (x + 1 < w).then(|| p + 1),
            (y > 0).then(|| p - w),
            (y + 1 < self.height as usize).then(|| p + w),
        ]
    }

    /// Labels of the unit's 4-neighbors in left, right, up, down order;
    /// `None` where the image or block grid ends. These are the move
    /// candidates considered for the unit during refinement.
    pub fn unit_neighbor_labels(&self, h: &BlockHierarchy, unit: Unit) -> [Option<u32>; 4] {
        match unit {
            Unit::Pixel(p) => {
                let w = self.width as usize;
                self.neighbor_labels_at(p, p % w, p / w)
            }
            Unit::Block { level, index } => {
                let lv = h.level(level);
                self.block_neighbors(lv, index)
                    .map(|n| n.map(|b| self.labels[lv.top_left_pixel(b, self.width)]))
            }
        }
    }

    /// Left/right/up/down neighbor labels of pixel `p`, whose coordinates
    /// the caller already knows (sweeps track them incrementally).
    #[inline]
    pub fn neighbor_labels_at(&self, p: usize, x: usize, y: usize) -> [Option<u32>; 4] {
        let w = self.width as usize;
        debug_assert_eq!(p, y * w + x);
        [
            (x > 0).then(|| self.labels[p - 1]),
            (x + 1 < w).then(|| self.labels[p + 1]),
            (y > 0).then(|| self.labels[p - w]),
            (p + w < self.labels.len()).then(|| self.labels[p + w]),
        ]
    }

    /// Whether every pixel of a block currently carries the same label.
    /// Holds for all blocks of a level until pixel-level moves run; needed
    /// when block sweeps are manually interleaved after pixel sweeps.
    pub fn block_is_uniform(&self, h: &BlockHierarchy, level: usize, index: usize) -> bool {
        let lv = h.level(level);
        let (x0, y0, x1, y1) = lv.block_rect(index);
        let w = self.width as usize;
        let label = self.labels[y0 as usize * w + x0 as usize];
        (y0..y1).all(|y| {
            let row = y as usize * w;
            self.labels[row + x0 as usize..row + x1 as usize]
                .iter()
                .all(|&l| l == label)
        })
    }

    /// Grid 4-neighbors of a block within its level, left/right/up/down.
    fn block_neighbors(&self, lv: &BlockLevel, index: usize) -> [Option<usize>; 4] {
        let bx = index % lv.blocks_w;
        let by = index / lv.blocks_w;
        [
            (bx > 0).then(|| index - 1),
            (bx + 1 < lv.blocks_w).then(|| index + 1),
            (by > 0).then(|| index - lv.blocks_w),
            (by + 1 < lv.blocks_h).then(|| index + lv.blocks_w),
        ]
    }

    /// Whether removing the unit would split its superpixel into pieces.
    ///
    /// Decided from the 3x3 neighborhood of the unit (on the pixel grid or
    /// the block grid): removal is safe when all same-label 4-neighbors stay
    /// connected to each other inside that window. Any path through the
    /// window is a real path, so a `false` here never lets a superpixel
    /// fall apart.
    pub fn would_disconnect(&self, h: &BlockHierarchy, proposal: &MoveProposal) -> bool {
        let mask = match proposal.unit {
            Unit::Pixel(p) => {
                let w = self.width as usize;
                let ht = self.height as usize;
                let x = (p % w) as i64;
                let y = (p / w) as i64;
                let label = self.labels[p];
                neighborhood_mask(|dx, dy| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx >= 0
                        && ny >= 0
                        && (nx as usize) < w
                        && (ny as usize) < ht
                        && self.labels[ny as usize * w + nx as usize] == label
                })
            }
            Unit::Block { level, index } => {
                let lv = h.level(level);
                let bx = (index % lv.blocks_w) as i64;
                let by = (index / lv.blocks_w) as i64;
                let label = self.labels[lv.top_left_pixel(index, self.width)];
                neighborhood_mask(|dx, dy| {
                    let (nx, ny) = (bx + dx, by + dy);
                    nx >= 0
                        && ny >= 0
                        && (nx as usize) < lv.blocks_w
                        && (ny as usize) < lv.blocks_h
                        && self.labels[lv.top_left_pixel(
                            ny as usize * lv.blocks_w + nx as usize,
                            self.width,
                        )] == label
                })
            }
        };
        !removable_table()[mask as usize]
    }

    /// Whether the source superpixel stays at or above its size floor after
    /// giving up the unit.
    pub fn size_floor_allows(&self, h: &BlockHierarchy, proposal: &MoveProposal) -> bool {
        let unit = self.unit_size(h, proposal.unit);
        let from = self.sizes[proposal.from as usize];
        from >= unit && from - unit >= self.min_sizes[proposal.from as usize]
    }

    /// Applies a gated move, updating labels and all incremental statistics.
    ///
    /// The caller is responsible for gating: `proposal.from` must be the
    /// unit's current label and the move must pass the connectivity and
    /// size-floor checks, otherwise the partition invariants break.
    pub fn apply_move(&mut self, h: &BlockHierarchy, proposal: &MoveProposal) {
        let (from, to) = (proposal.from as usize, proposal.to as usize);
        debug_assert_ne!(from, to);
        debug_assert_eq!(self.unit_label(h, proposal.unit), proposal.from);
        debug_assert!(to < self.k);

        match proposal.unit {
            Unit::Pixel(p) => {
                let nb = self.num_bins;
                let bin = self.bins[p] as usize;
                self.labels[p] = proposal.to;
                self.sizes[from] -= 1;
                self.sizes[to] += 1;

                let hf = &mut self.histograms[from * nb + bin];
                self.sumsq[from] -= 2 * (*hf as u64) - 1;
                *hf -= 1;
                let ht = &mut self.histograms[to * nb + bin];
                self.sumsq[to] += 2 * (*ht as u64) + 1;
                *ht += 1;

                let w = self.width as usize;
                let (x, y) = ((p % w) as u64, (p / w) as u64);
                self.coord_sums[from][0] -= x;
                self.coord_sums[from][1] -= y;
                self.coord_sums[to][0] += x;
                self.coord_sums[to][1] += y;
            }
            Unit::Block { level, index } => {
                let lv = h.level(level);
                let (x0, y0, x1, y1) = lv.block_rect(index);
                let w = self.width as usize;
                for y in y0..y1 {
                    let row = y as usize * w;
                    self.labels[row + x0 as usize..row + x1 as usize].fill(proposal.to);
                }

                let size = lv.size[index];
                self.sizes[from] -= size;
                self.sizes[to] += size;

                let nb = self.num_bins;
                let block_hist = lv.histogram_of(index, nb);
                let mut dsrc = 0i64;
                let mut ddst = 0i64;
                for (bin, &b) in block_hist.iter().enumerate() {
                    if b == 0 {
                        continue;
                    }
                    let b = b as i64;
                    let hf = &mut self.histograms[from * nb + bin];
                    dsrc += b * b - 2 * (*hf as i64) * b;
                    *hf -= b as u32;
                    let ht = &mut self.histograms[to * nb + bin];
                    ddst += b * b + 2 * (*ht as i64) * b;
                    *ht += b as u32;
                }
                self.sumsq[from] = (self.sumsq[from] as i64 + dsrc) as u64;
                self.sumsq[to] = (self.sumsq[to] as i64 + ddst) as u64;

                let c = lv.coord_sum[index];
                self.coord_sums[from][0] -= c[0];
                self.coord_sums[from][1] -= c[1];
                self.coord_sums[to][0] += c[0];
                self.coord_sums[to][1] += c[1];
            }
        }
    }

    // ------------------------------------------------------------------
    // Validation and output
    // ------------------------------------------------------------------

    /// Full audit of every partition invariant: label range, all ids in use,
    /// statistics consistent with the label map, and 4-connectivity of every
    /// superpixel (checked by flood fill). Intended for tests and debugging;
    /// costs a full pass over the image.
    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if n != self.width as usize * self.height as usize {
            return Err(Error::dimension("label map length mismatch"));
        }
        for (p, &l) in self.labels.iter().enumerate() {
            if l as usize >= self.k {
                return Err(Error::domain(format!(
                    "pixel {p} has label {l}, expected less than {}",
                    self.k
                )));
            }
        }

        // Recount all statistics and compare.
        let mut check = self.clone();
        check.recount();
        if check.sizes != self.sizes {
            return Err(Error::domain("superpixel sizes out of sync with labels"));
        }
        if check.histograms != self.histograms {
            return Err(Error::domain("histograms out of sync with labels"));
        }
        if check.sumsq != self.sumsq {
            return Err(Error::domain("squared sums out of sync with histograms"));
        }
        if check.coord_sums != self.coord_sums {
            return Err(Error::domain("coordinate sums out of sync with labels"));
        }
        if let Some(s) = self.sizes.iter().position(|&s| s == 0) {
            return Err(Error::domain(format!("superpixel {s} is empty")));
        }

        // Flood fill: every label must form exactly one 4-connected region.
        let mut seen = vec![false; self.k];
        let mut visited = vec![false; n];
        let mut stack = Vec::new();
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let label = self.labels[start];
            if seen[label as usize] {
                return Err(Error::domain(format!(
                    "superpixel {label} is split into multiple regions"
                )));
            }
            seen[label as usize] = true;
            visited[start] = true;
            stack.push(start);
            while let Some(p) = stack.pop() {
                for q in self.pixel_neighbors(p).into_iter().flatten() {
                    if !visited[q] && self.labels[q] == label {
                        visited[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes the label map as a 16-bit grayscale PGM.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        io::write_label_pgm(path, self.width, self.height, &self.labels)
    }

    /// Writes the label map as CSV, one image row per line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_label_csv(path, self.width, self.height, &self.labels)
    }
}

/// Maps a pixel coordinate to its superpixel cell index along one axis,
/// given the top-level block cuts (two blocks per cell).
fn cell_lut(top_cuts: &[u32]) -> Vec<u32> {
    let total = *top_cuts.last().unwrap();
    let mut lut = vec![0u32; total as usize];
    let mut c = 0usize;
    for (v, slot) in lut.iter_mut().enumerate() {
        while v as u32 >= top_cuts[c + 1] {
            c += 1;
        }
        *slot = (c / 2) as u32;
    }
    lut
}

/// Bit layout of the 3x3 neighborhood mask: bit `i` set means the neighbor
/// at `OFFSETS[i]` holds the same label as the center.
const OFFSETS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn neighborhood_mask(mut same: impl FnMut(i64, i64) -> bool) -> u8 {
    let mut mask = 0u8;
    for (i, &(dx, dy)) in OFFSETS.iter().enumerate() {
        if same(dx, dy) {
            mask |= 1 << i;
        }
    }
    mask
}

/// For every 3x3 same-label pattern: can the center change label without
/// splitting its region? True when all same-label 4-neighbors lie in one
/// 4-connected component of the same-label cells in the window (the center
/// excluded). The all-different pattern is removable (a singleton's move is
/// stopped by the size floor instead).
fn removable_table() -> &'static [bool; 256] {
    static TABLE: OnceLock<[bool; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [false; 256];
        for (mask, entry) in table.iter_mut().enumerate() {
            *entry = mask_is_removable(mask as u8);
        }
        table
    })
}

fn mask_is_removable(mask: u8) -> bool {
    // 3x3 occupancy grid; the center is vacated by the move.
    let mut grid = [[false; 3]; 3];
    for (i, &(dx, dy)) in OFFSETS.iter().enumerate() {
        if mask & (1 << i) != 0 {
            grid[(dy + 1) as usize][(dx + 1) as usize] = true;
        }
    }
    // 4-neighbors of the center, in window coordinates.
    let four: Vec<(usize, usize)> = [(1, 0), (0, 1), (2, 1), (1, 2)]
        .into_iter()
        .filter(|&(x, y)| grid[y][x])
        .collect();
    let Some(&start) = four.first() else {
        return true;
    };
    // Flood fill within the window from one same-label 4-neighbor.
    let mut seen = [[false; 3]; 3];
    let mut stack = vec![start];
    seen[start.1][start.0] = true;
    while let Some((x, y)) = stack.pop() {
        let mut try_cell = |nx: usize, ny: usize| {
            if grid[ny][nx] && !seen[ny][nx] && (nx, ny) != (1, 1) {
                seen[ny][nx] = true;
                stack.push((nx, ny));
            }
        };
        if x > 0 {
            try_cell(x - 1, y);
        }
        if x < 2 {
            try_cell(x + 1, y);
        }
        if y > 0 {
            try_cell(x, y - 1);
        }
        if y < 2 {
            try_cell(x, y + 1);
        }
    }
    four.iter().all(|&(x, y)| seen[y][x])
}
