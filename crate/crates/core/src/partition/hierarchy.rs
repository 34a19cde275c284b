//! Block hierarchy and grid initialization.
//!
//! The image is divided into a grid of superpixel cells, and each cell into a
//! pyramid of rectangular blocks: the cell splits 2x2 into top-level blocks,
//! each block splits 2x2 into the next level, and so on while the smallest
//! blocks stay at least `min_block` pixels on each side. Odd remainders stick
//! to the right/bottom part of a split, and the rightmost/bottom cells absorb
//! what the even grid leaves over, so the blocks of every level tile the image
//! exactly.
//!
//! Per-block color histograms, sizes, LAB sums and coordinate sums are
//! precomputed once; block-level refinement moves whole blocks between
//! superpixels and reuses these sums instead of touching pixels.

use crate::error::{Error, Result};
use crate::imgproc::LabImage;

/// Side length of the smallest blocks in the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MinBlock {
    Two,
    #[default]
    Three,
}

impl MinBlock {
    pub fn px(self) -> u32 {
        match self {
            MinBlock::Two => 2,
            MinBlock::Three => 3,
        }
    }

    pub fn from_px(px: u32) -> Result<Self> {
        match px {
            2 => Ok(MinBlock::Two),
            3 => Ok(MinBlock::Three),
            other => Err(Error::config(format!(
                "min_block must be 2 or 3 pixels, got {other}"
            ))),
        }
    }
}

/// One level of the block hierarchy: a `blocks_w` x `blocks_h` grid of
/// rectangles with per-block statistics. Level 0 holds the smallest blocks.
#[derive(Debug, Clone)]
pub struct BlockLevel {
    pub blocks_w: usize,
    pub blocks_h: usize,
    /// Column boundaries, `blocks_w + 1` entries, first 0 and last = width.
    pub xs: Vec<u32>,
    /// Row boundaries, `blocks_h + 1` entries.
    pub ys: Vec<u32>,
    /// Pixel count per block.
    pub size: Vec<u32>,
    /// Color-bin counts, `blocks_w * blocks_h * num_bins`, block-major.
    pub histogram: Vec<u32>,
    /// Sum of LAB values over each block's pixels.
    pub lab_sum: Vec<[f64; 3]>,
    /// Sum of (x, y) coordinates over each block's pixels.
    pub coord_sum: Vec<[u64; 2]>,
}

impl BlockLevel {
    pub fn num_blocks(&self) -> usize {
        self.blocks_w * self.blocks_h
    }

    pub fn block_index(&self, bx: usize, by: usize) -> usize {
        by * self.blocks_w + bx
    }

    /// `(x0, y0, x1, y1)` pixel bounds of a block, upper bounds exclusive.
    pub fn block_rect(&self, index: usize) -> (u32, u32, u32, u32) {
        let bx = index % self.blocks_w;
        let by = index / self.blocks_w;
        (self.xs[bx], self.ys[by], self.xs[bx + 1], self.ys[by + 1])
    }

    /// Top-left pixel index of a block in the image's row-major layout.
    pub fn top_left_pixel(&self, index: usize, image_width: u32) -> usize {
        let (x0, y0, _, _) = self.block_rect(index);
        y0 as usize * image_width as usize + x0 as usize
    }

    pub fn histogram_of(&self, index: usize, num_bins: usize) -> &[u32] {
        &self.histogram[index * num_bins..(index + 1) * num_bins]
    }
}

/// The full hierarchy: superpixel cell grid plus all block levels.
///
/// The top level is always populated; the finer levels may be built lazily
/// (see [`BlockHierarchy::is_materialized`]) because grid initialization
/// and pixel-level refinement never read them.
#[derive(Debug, Clone)]
pub struct BlockHierarchy {
    pub width: u32,
    pub height: u32,
    pub num_bins: usize,
    /// Superpixel grid dimensions; the initial partition has
    /// `cells_x * cells_y` superpixels.
    pub cells_x: usize,
    pub cells_y: usize,
    /// Levels from smallest blocks (index 0) to largest.
    levels: Vec<BlockLevel>,
    /// Whether every level's statistics are filled in, or only the top's.
    materialized: bool,
}

impl BlockHierarchy {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &BlockLevel {
        assert!(
            self.materialized || l + 1 == self.levels.len(),
            "block level {l} is not materialized; only the top level is built"
        );
        &self.levels[l]
    }

    /// Index of the coarsest level (largest blocks, quarter superpixels).
    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn num_cells(&self) -> usize {
        self.cells_x * self.cells_y
    }

    /// Whether the levels below the top are populated.
    pub fn is_materialized(&self) -> bool {
        self.materialized
    }

    /// Fills the statistics of every level below the top from per-pixel
    /// data; the top level keeps the statistics it was built with. No-op
    /// when already materialized.
    pub(crate) fn materialize(&mut self, bins: &[u16], lab: &[[f32; 3]]) {
        if self.materialized {
            return;
        }
        let top = self.levels.len() - 1;
        let num_bins = self.num_bins;
        let width = self.width;
        for l in 0..top {
            let xs = std::mem::take(&mut self.levels[l].xs);
            let ys = std::mem::take(&mut self.levels[l].ys);
            let built = if l == 0 {
                accumulate_level(bins, num_bins, lab, width, &xs, &ys)
            } else {
                sum_level(&self.levels[l - 1], num_bins, &xs, &ys)
            };
            self.levels[l] = built;
        }
        self.materialized = true;
    }
}

/// Picks the superpixel grid `(cells_x, cells_y)` for a target count.
///
/// Preference order: superpixel count closest to `target_k`, then cell aspect
/// ratio closest to square, then wider grids. Cells must be at least
/// `2 * min_block` pixels on each side so at least one block level exists.
pub(crate) fn fit_grid(
    width: u32,
    height: u32,
    target_k: usize,
    min_block: MinBlock,
) -> Result<(usize, usize)> {
    let min_cell = 2 * min_block.px();
    let max_sx = (width / min_cell) as usize;
    let max_sy = (height / min_cell) as usize;
    if max_sx == 0 || max_sy == 0 {
        return Err(Error::dimension(format!(
            "image {width}x{height} is too small for {}x{} superpixel cells",
            min_cell, min_cell
        )));
    }
    if target_k < 2 {
        return Err(Error::config(format!(
            "target superpixel count must be at least 2, got {target_k}"
        )));
    }
    if target_k > max_sx * max_sy {
        return Err(Error::config(format!(
            "target superpixel count {target_k} is unattainable for {width}x{height} \
             (at most {} with min_block {})",
            max_sx * max_sy,
            min_block.px()
        )));
    }

    let mut best: Option<(usize, f64, usize, usize)> = None;
    for sy in 1..=max_sy {
        for sx in 1..=max_sx {
            let k = sx * sy;
            let count_err = k.abs_diff(target_k);
            let cell_w = width as f64 / sx as f64;
            let cell_h = height as f64 / sy as f64;
            let aspect_err = (cell_w / cell_h).ln().abs();
            let better = match best {
                None => true,
                Some((be, ba, bx, by)) => {
                    (count_err, aspect_err) < (be, ba)
                        || ((count_err, aspect_err) == (be, ba) && (sx, sy) > (bx, by))
                }
            };
            if better {
                best = Some((count_err, aspect_err, sx, sy));
            }
        }
    }
    let (_, _, sx, sy) = best.expect("non-empty search space");
    Ok((sx, sy))
}

/// Evenly spaced cell boundaries with the remainder absorbed by the last cell.
fn cell_cuts(total: u32, cells: usize) -> Vec<u32> {
    let step = total / cells as u32;
    let mut cuts: Vec<u32> = (0..cells as u32).map(|i| i * step).collect();
    cuts.push(total);
    cuts
}

/// Splits every interval in half (larger part on the right when odd).
fn halve_cuts(cuts: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(cuts.len() * 2 - 1);
    for w in cuts.windows(2) {
        out.push(w[0]);
        out.push(w[0] + (w[1] - w[0]) / 2);
    }
    out.push(*cuts.last().unwrap());
    out
}

/// Number of block levels for nominal cell dimensions: the deepest split
/// chain that keeps the smallest blocks at least `min_block` on each side.
fn level_count(cell_w: u32, cell_h: u32, min_block: MinBlock) -> usize {
    let mb = min_block.px();
    let mut n = 0;
    while (cell_w >> (n + 1)) >= mb && (cell_h >> (n + 1)) >= mb {
        n += 1;
    }
    n
}

/// Cut positions for every level, index 0 = finest.
fn level_cuts(
    width: u32,
    height: u32,
    cells_x: usize,
    cells_y: usize,
    min_block: MinBlock,
) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let cell_w = width / cells_x as u32;
    let cell_h = height / cells_y as u32;
    let nlev = level_count(cell_w, cell_h, min_block);
    debug_assert!(nlev >= 1, "fit_grid guarantees at least one level");

    let mut xs_per_level = Vec::with_capacity(nlev);
    let mut ys_per_level = Vec::with_capacity(nlev);
    let mut xs = cell_cuts(width, cells_x);
    let mut ys = cell_cuts(height, cells_y);
    for _ in 0..nlev {
        xs = halve_cuts(&xs);
        ys = halve_cuts(&ys);
        xs_per_level.push(xs.clone());
        ys_per_level.push(ys.clone());
    }
    xs_per_level.reverse(); // index 0 = finest level
    ys_per_level.reverse();
    (xs_per_level, ys_per_level)
}

/// Accumulates one level's block statistics straight from the pixels.
/// Working a rectangle at a time keeps its histogram hot in cache, and
/// coordinate sums over a full rectangle have a closed form.
fn accumulate_level(
    bins: &[u16],
    num_bins: usize,
    lab: &[[f32; 3]],
    width: u32,
    xs: &[u32],
    ys: &[u32],
) -> BlockLevel {
    let blocks_w = xs.len() - 1;
    let blocks_h = ys.len() - 1;
    let nb = blocks_w * blocks_h;

    let mut size = vec![0u32; nb];
    let mut histogram = vec![0u32; nb * num_bins];
    let mut lab_sum = vec![[0f64; 3]; nb];
    let mut coord_sum = vec![[0u64; 2]; nb];
    // Sum of integers in [a, b).
    let range_sum = |a: u64, b: u64| (a + b - 1) * (b - a) / 2;
    for by in 0..blocks_h {
        let (y0, y1) = (ys[by] as usize, ys[by + 1] as usize);
        for bx in 0..blocks_w {
            let (x0, x1) = (xs[bx] as usize, xs[bx + 1] as usize);
            let b = by * blocks_w + bx;
            let hist = &mut histogram[b * num_bins..(b + 1) * num_bins];
            let mut sum = [0f64; 3];
            for y in y0..y1 {
                let row = y * width as usize;
                for p in row + x0..row + x1 {
                    hist[bins[p] as usize] += 1;
                    let l = lab[p];
                    sum[0] += l[0] as f64;
                    sum[1] += l[1] as f64;
                    sum[2] += l[2] as f64;
                }
            }
            lab_sum[b] = sum;
            let (rows, cols) = ((y1 - y0) as u64, (x1 - x0) as u64);
            size[b] = (rows * cols) as u32;
            coord_sum[b] = [
                rows * range_sum(x0 as u64, x1 as u64),
                cols * range_sum(y0 as u64, y1 as u64),
            ];
        }
    }
    BlockLevel {
        blocks_w,
        blocks_h,
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        size,
        histogram,
        lab_sum,
        coord_sum,
    }
}

/// Builds a coarser level: each block is the union of a 2x2 child group.
fn sum_level(child: &BlockLevel, num_bins: usize, xs: &[u32], ys: &[u32]) -> BlockLevel {
    let blocks_w = xs.len() - 1;
    let blocks_h = ys.len() - 1;
    let nb = blocks_w * blocks_h;
    debug_assert_eq!(child.blocks_w, blocks_w * 2);
    debug_assert_eq!(child.blocks_h, blocks_h * 2);

    let mut size = vec![0u32; nb];
    let mut histogram = vec![0u32; nb * num_bins];
    let mut lab_sum = vec![[0f64; 3]; nb];
    let mut coord_sum = vec![[0u64; 2]; nb];
    for by in 0..blocks_h {
        for bx in 0..blocks_w {
            let b = by * blocks_w + bx;
            for (cy, cx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let c = child.block_index(bx * 2 + cx, by * 2 + cy);
                size[b] += child.size[c];
                let dst = &mut histogram[b * num_bins..(b + 1) * num_bins];
                let src = &child.histogram[c * num_bins..(c + 1) * num_bins];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += s;
                }
                for (d, &s) in lab_sum[b].iter_mut().zip(&child.lab_sum[c]) {
                    *d += s;
                }
                coord_sum[b][0] += child.coord_sum[c][0];
                coord_sum[b][1] += child.coord_sum[c][1];
            }
        }
    }
    BlockLevel {
        blocks_w,
        blocks_h,
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        size,
        histogram,
        lab_sum,
        coord_sum,
    }
}

/// A level holding only its geometry; statistics come with materialization.
fn empty_level(xs: &[u32], ys: &[u32]) -> BlockLevel {
    BlockLevel {
        blocks_w: xs.len() - 1,
        blocks_h: ys.len() - 1,
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        size: Vec::new(),
        histogram: Vec::new(),
        lab_sum: Vec::new(),
        coord_sum: Vec::new(),
    }
}

/// Builds the full hierarchy for a quantized image.
pub(crate) fn build_hierarchy(
    img: &LabImage,
    cells_x: usize,
    cells_y: usize,
    min_block: MinBlock,
) -> Result<BlockHierarchy> {
    debug_assert!(img.is_quantized());
    let (xs_l, ys_l) = level_cuts(img.width, img.height, cells_x, cells_y, min_block);
    let mut levels = Vec::with_capacity(xs_l.len());
    levels.push(accumulate_level(&img.bin, img.num_bins, &img.lab, img.width, &xs_l[0], &ys_l[0]));
    for l in 1..xs_l.len() {
        levels.push(sum_level(&levels[l - 1], img.num_bins, &xs_l[l], &ys_l[l]));
    }
    Ok(BlockHierarchy {
        width: img.width,
        height: img.height,
        num_bins: img.num_bins,
        cells_x,
        cells_y,
        levels,
        materialized: true,
    })
}

/// Builds only the coarsest level; the finer levels keep their geometry
/// and are filled by [`BlockHierarchy::materialize`]. Grid initialization
/// reads only the top blocks, so a run that stops before block refinement
/// (for example on a tiny time budget) never pays for the finer pyramid.
pub(crate) fn build_hierarchy_top_only(
    img: &LabImage,
    cells_x: usize,
    cells_y: usize,
    min_block: MinBlock,
) -> Result<BlockHierarchy> {
    debug_assert!(img.is_quantized());
    let (xs_l, ys_l) = level_cuts(img.width, img.height, cells_x, cells_y, min_block);
    let top = xs_l.len() - 1;
    let mut levels: Vec<BlockLevel> =
        (0..top).map(|l| empty_level(&xs_l[l], &ys_l[l])).collect();
    levels.push(accumulate_level(
        &img.bin,
        img.num_bins,
        &img.lab,
        img.width,
        &xs_l[top],
        &ys_l[top],
    ));
    Ok(BlockHierarchy {
        width: img.width,
        height: img.height,
        num_bins: img.num_bins,
        cells_x,
        cells_y,
        levels,
        materialized: top == 0,
    })
}
