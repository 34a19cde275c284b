//! The segmentation objective and the per-move decision tests.
//!
//! The objective rewards superpixels whose color histograms concentrate in
//! few bins, plus an optional boundary-smoothing term that rewards patches
//! of the label map dominated by a single label:
//!
//! * color term `H`: for each superpixel, the sum of squared entries of its
//!   size-normalized color histogram, summed over superpixels;
//! * boundary term `G`: for every pixel, a patch histogram counts the labels
//!   in the surrounding `patch_size` x `patch_size` window (coordinates
//!   clamped to the image, so border patches sample edge pixels repeatedly);
//!   `G` sums the squared normalized patch counts over all pixels. A single
//!   superpixel scores exactly one per pixel, and straight boundaries score
//!   higher than jagged ones.
//!
//! Hill climbing never evaluates the objective from scratch. In fast mode a
//! move is accepted on two integer tests ([`fast_color_test`] and the
//! [`Prior`] gate, typically [`fast_boundary_test`]); in exact mode the true
//! objective change is computed incrementally ([`exact_color_delta`],
//! [`exact_boundary_delta`]) and the move must strictly increase it.

use crate::error::{Error, Result};
use crate::imgproc::LabImage;
use crate::partition::{BlockHierarchy, MoveProposal, Partition, Unit};

/// Boundary-shape gate applied to pixel moves on top of the color test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prior {
    /// No gate: the color test alone decides.
    None,
    /// Accept only moves that make label patches more uniform.
    Smooth3x3,
    /// Accept only moves toward the nearer superpixel centroid.
    Compactness,
    /// Freeze pixels on strong image edges; smooth elsewhere.
    EdgeSnap,
    /// Majority vote of smoothing, compactness, and not-on-an-edge.
    Combined,
}

/// How move decisions are made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationMode {
    /// Integer surrogate tests; the production path.
    Fast,
    /// Exact objective deltas; slower, guarantees a monotone energy trace.
    Exact,
}

/// Parameters of the objective and its evaluation.
#[derive(Debug, Clone)]
pub struct EnergyConfig {
    /// Weight of the boundary term when it participates in the objective.
    pub gamma: f64,
    /// Side length of the label patches; odd, at least 3.
    pub patch_size: usize,
    pub prior: Prior,
    pub evaluation_mode: EvaluationMode,
    /// Percentile of gradient magnitude above which a pixel counts as lying
    /// on a strong edge (used by the edge-aware priors).
    pub edge_percentile: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            patch_size: 3,
            prior: Prior::Smooth3x3,
            evaluation_mode: EvaluationMode::Fast,
            edge_percentile: 90.0,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::config(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        if self.patch_size < 3 || self.patch_size.is_multiple_of(2) {
            return Err(Error::config(format!(
                "patch_size must be odd and at least 3, got {}",
                self.patch_size
            )));
        }
        if !(0.0..=100.0).contains(&self.edge_percentile) {
            return Err(Error::config(format!(
                "edge_percentile must lie in [0, 100], got {}",
                self.edge_percentile
            )));
        }
        if self.evaluation_mode == EvaluationMode::Exact
            && !matches!(self.prior, Prior::None | Prior::Smooth3x3)
        {
            return Err(Error::config(
                "exact evaluation supports only the None and Smooth3x3 priors",
            ));
        }
        Ok(())
    }

    /// Whether the boundary term is part of the objective under this config.
    pub fn uses_boundary_term(&self) -> bool {
        self.prior == Prior::Smooth3x3 && self.gamma > 0.0
    }
}

// ----------------------------------------------------------------------
// Objective values
// ----------------------------------------------------------------------

/// Sum of squared entries of a size-normalized histogram.
pub fn psi(histogram: &[u32], size: u32) -> f64 {
    if size == 0 {
        return 0.0;
    }
    let sumsq: u64 = histogram.iter().map(|&c| (c as u64) * (c as u64)).sum();
    sumsq as f64 / (size as f64 * size as f64)
}

/// Color term of the objective: sum of [`psi`] over all superpixels.
pub fn color_energy(partition: &Partition) -> f64 {
    (0..partition.k() as u32)
        .map(|s| {
            let size = partition.size(s) as f64;
            partition.sum_squared_counts(s) as f64 / (size * size)
        })
        .sum()
}

/// Boundary term of the objective, computed from scratch.
///
/// Every pixel contributes the sum of squared normalized label counts of its
/// clamped `patch_size` x `patch_size` window. A constant label map scores
/// exactly `width * height`.
pub fn boundary_energy(partition: &Partition, patch_size: usize) -> f64 {
    let r = (patch_size / 2) as i64;
    let z = (patch_size * patch_size) as f64;
    let w = partition.width() as i64;
    let h = partition.height() as i64;
    let labels = partition.labels();

    let mut total = 0u64;
    let mut counts: Vec<(u32, u32)> = Vec::with_capacity(patch_size * patch_size);
    for y in 0..h {
        for x in 0..w {
            counts.clear();
            for dy in -r..=r {
                let cy = (y + dy).clamp(0, h - 1);
                for dx in -r..=r {
                    let cx = (x + dx).clamp(0, w - 1);
                    let label = labels[(cy * w + cx) as usize];
                    match counts.iter_mut().find(|(l, _)| *l == label) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((label, 1)),
                    }
                }
            }
            total += counts.iter().map(|&(_, c)| (c as u64) * (c as u64)).sum::<u64>();
        }
    }
    total as f64 / (z * z)
}

/// Full objective under a config: `H` plus `gamma * G` when the smoothing
/// prior makes the boundary term part of the objective.
pub fn total_energy(partition: &Partition, config: &EnergyConfig) -> f64 {
    let mut e = color_energy(partition);
    if config.uses_boundary_term() {
        e += config.gamma * boundary_energy(partition, config.patch_size);
    }
    e
}

/// Histogram intersection: sum of elementwise minima.
///
/// For histograms normalized to equal mass this equals `1 - L1/2` where `L1`
/// is their total absolute difference.
pub fn intersection(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x.min(y)).sum()
}

// ----------------------------------------------------------------------
// Fast decision tests
// ----------------------------------------------------------------------

/// Integer surrogate for "does moving the unit improve the color term".
///
/// For a pixel with color bin `j`: accept when the destination's normalized
/// count of `j` strictly exceeds the source's with the pixel removed, by
/// cross-multiplication in integers. For a block: accept when the block's
/// normalized histogram intersects the destination histogram strictly more
/// than the source histogram with the block removed.
pub fn fast_color_test(
    partition: &Partition,
    hierarchy: &BlockHierarchy,
    proposal: &MoveProposal,
) -> bool {
    let (from, to) = (proposal.from, proposal.to);
    match proposal.unit {
        Unit::Pixel(p) => {
            let j = partition.bin_of(p) as usize;
            let hn = partition.histogram(to)[j] as u64;
            let hk = partition.histogram(from)[j] as u64;
            let sn = partition.size(to) as u64;
            let sk = partition.size(from) as u64;
            hn * (sk - 1) > (hk - 1) * sn
        }
        Unit::Block { level, index } => {
            let lv = hierarchy.level(level);
            let z = lv.size[index];
            let sk = partition.size(from);
            if sk <= z {
                return false;
            }
            let block = lv.histogram_of(index, partition.num_bins());
            let hist_n = partition.histogram(to);
            let hist_k = partition.histogram(from);
            let zn = partition.size(to) as f64;
            let zb = z as f64;
            let zr = (sk - z) as f64;
            let mut int_dest = 0.0f64;
            let mut int_rest = 0.0f64;
            for ((&b, &hn), &hk) in block.iter().zip(hist_n).zip(hist_k) {
                if b == 0 {
                    continue;
                }
                let nb = b as f64 / zb;
                int_dest += nb.min(hn as f64 / zn);
                int_rest += nb.min((hk - b) as f64 / zr);
            }
            int_dest > int_rest
        }
    }
}

/// Per-pixel label counts of every clamped patch, kept current during pixel
/// sweeps so the smoothing test costs a window scan instead of a rebuild.
#[derive(Debug, Clone)]
pub struct PatchHistogramField {
    width: u32,
    height: u32,
    radius: i64,
    /// Patch sample count; every pixel's counts sum to this.
    area: u32,
    stride: usize,
    labels: Vec<u32>,
    counts: Vec<u16>,
    lens: Vec<u8>,
}

impl PatchHistogramField {
    /// Builds the field from the current label map.
    pub fn build(partition: &Partition, patch_size: usize) -> Self {
        let width = partition.width();
        let height = partition.height();
        let r = (patch_size / 2) as i64;
        let stride = patch_size * patch_size;
        let n = width as usize * height as usize;
        let mut field = Self {
            width,
            height,
            radius: r,
            area: stride as u32,
            stride,
            labels: vec![0; n * stride],
            counts: vec![0; n * stride],
            lens: vec![0; n],
        };
        let labels = partition.labels();
        let (w, h) = (width as i64, height as i64);
        let wu = w as usize;
        for y in 0..h {
            for x in 0..w {
                let q = (y * w + x) as usize;
                // Most pixels sit in a uniform 3x3 neighborhood away from
                // the border; their patch is a single label with full count.
                if r == 1 && x > 0 && x < w - 1 && y > 0 && y < h - 1 {
                    let l = labels[q];
                    let (up, down) = (q - wu, q + wu);
                    if labels[q - 1] == l
                        && labels[q + 1] == l
                        && labels[up - 1] == l
                        && labels[up] == l
                        && labels[up + 1] == l
                        && labels[down - 1] == l
                        && labels[down] == l
                        && labels[down + 1] == l
                    {
                        let base = q * field.stride;
                        field.labels[base] = l;
                        field.counts[base] = 9;
                        field.lens[q] = 1;
                        continue;
                    }
                }
                for dy in -r..=r {
                    let cy = (y + dy).clamp(0, h - 1);
                    for dx in -r..=r {
                        let cx = (x + dx).clamp(0, w - 1);
                        field.add(q, labels[(cy * w + cx) as usize], 1);
                    }
                }
            }
        }
        field
    }

    /// Count of `label` in the patch around `pixel`.
    pub fn count(&self, pixel: usize, label: u32) -> u32 {
        let base = pixel * self.stride;
        let len = self.lens[pixel] as usize;
        for i in base..base + len {
            if self.labels[i] == label {
                return self.counts[i] as u32;
            }
        }
        0
    }

    /// Total samples per patch (the patch area); every pixel sums to this.
    pub fn patch_area(&self) -> u32 {
        self.area
    }

    /// Updates all affected patches after pixel `p` changes `from` -> `to`.
    /// Border pixels are sampled repeatedly by clamped patches, so their
    /// counts change by the sampling multiplicity.
    pub fn apply_pixel_move(&mut self, p: usize, from: u32, to: u32) {
        let (w, h) = (self.width as i64, self.height as i64);
        let (px, py) = ((p as i64) % w, (p as i64) / w);
        let r = self.radius;
        for qy in (py - r).max(0)..=(py + r).min(h - 1) {
            let my = axis_multiplicity(qy, py, r, h);
            for qx in (px - r).max(0)..=(px + r).min(w - 1) {
                let m = (axis_multiplicity(qx, px, r, w) * my) as i32;
                let q = (qy * w + qx) as usize;
                self.add(q, from, -m);
                self.add(q, to, m);
            }
        }
    }

    fn add(&mut self, pixel: usize, label: u32, delta: i32) {
        let base = pixel * self.stride;
        let len = self.lens[pixel] as usize;
        for i in base..base + len {
            if self.labels[i] == label {
                let next = self.counts[i] as i32 + delta;
                debug_assert!(next >= 0, "negative patch count");
                if next == 0 {
                    // Swap-remove the emptied entry.
                    self.labels[i] = self.labels[base + len - 1];
                    self.counts[i] = self.counts[base + len - 1];
                    self.lens[pixel] -= 1;
                } else {
                    self.counts[i] = next as u16;
                }
                return;
            }
        }
        debug_assert!(delta > 0, "removing a label absent from the patch");
        debug_assert!(len < self.stride);
        self.labels[base + len] = label;
        self.counts[base + len] = delta as u16;
        self.lens[pixel] += 1;
    }
}

/// How many offsets within `[-r, r]` land a clamped sample from patch
/// center `q` onto coordinate `p`, along one axis of length `extent`.
fn axis_multiplicity(q: i64, p: i64, r: i64, extent: i64) -> u32 {
    let mut m = 0;
    for d in -r..=r {
        if (q + d).clamp(0, extent - 1) == p {
            m += 1;
        }
    }
    m as u32
}

/// Integer surrogate for "does moving pixel `p` improve the boundary term".
///
/// Exact in sign: the accumulated integer equals the true change of `G`
/// scaled by `patch_area^2 / 2`, so the strict comparison agrees with the
/// true objective everywhere, including at image borders where samples carry
/// multiplicity.
pub fn fast_boundary_test(
    field: &PatchHistogramField,
    p: usize,
    from: u32,
    to: u32,
) -> bool {
    let (w, h) = (field.width as i64, field.height as i64);
    let (px, py) = ((p as i64) % w, (p as i64) / w);
    let r = field.radius;
    let mut acc = 0i64;
    for qy in (py - r).max(0)..=(py + r).min(h - 1) {
        let my = axis_multiplicity(qy, py, r, h) as i64;
        for qx in (px - r).max(0)..=(px + r).min(w - 1) {
            let m = axis_multiplicity(qx, px, r, w) as i64 * my;
            let q = (qy * w + qx) as usize;
            acc += m * (field.count(q, to) as i64 - field.count(q, from) as i64) + m * m;
        }
    }
    acc > 0
}

// ----------------------------------------------------------------------
// Exact deltas
// ----------------------------------------------------------------------

/// Exact change of the color term `H` if the proposal were applied.
///
/// Uses the incrementally maintained squared histogram sums, so a pixel move
/// costs O(1) and a block move one histogram scan.
pub fn exact_color_delta(
    partition: &Partition,
    hierarchy: &BlockHierarchy,
    proposal: &MoveProposal,
) -> f64 {
    let (from, to) = (proposal.from, proposal.to);
    let p_size = partition.size(from) as f64;
    let q_size = partition.size(to) as f64;
    let p_sq = partition.sum_squared_counts(from) as f64;
    let q_sq = partition.sum_squared_counts(to) as f64;

    let (unit_size, dsrc, ddst) = match proposal.unit {
        Unit::Pixel(p) => {
            let j = partition.bin_of(p) as usize;
            let a = partition.histogram(from)[j] as f64;
            let b = partition.histogram(to)[j] as f64;
            (1.0, 1.0 - 2.0 * a, 1.0 + 2.0 * b)
        }
        Unit::Block { level, index } => {
            let lv = hierarchy.level(level);
            let block = lv.histogram_of(index, partition.num_bins());
            let hist_k = partition.histogram(from);
            let hist_n = partition.histogram(to);
            let mut dsrc = 0i64;
            let mut ddst = 0i64;
            for ((&b, &hk), &hn) in block.iter().zip(hist_k).zip(hist_n) {
                if b == 0 {
                    continue;
                }
                let b = b as i64;
                dsrc += b * b - 2 * (hk as i64) * b;
                ddst += b * b + 2 * (hn as i64) * b;
            }
            (lv.size[index] as f64, dsrc as f64, ddst as f64)
        }
    };

    let new_src = p_size - unit_size;
    let new_dst = q_size + unit_size;
    debug_assert!(new_src >= 1.0, "source would be emptied");
    (p_sq + dsrc) / (new_src * new_src) - p_sq / (p_size * p_size)
        + (q_sq + ddst) / (new_dst * new_dst)
        - q_sq / (q_size * q_size)
}

/// Exact change of the boundary term `G` if the proposal were applied.
///
/// Recounts only the patches within one patch radius of the changed pixels;
/// works for pixel and block moves alike and needs no maintained field.
pub fn exact_boundary_delta(
    partition: &Partition,
    hierarchy: &BlockHierarchy,
    proposal: &MoveProposal,
    patch_size: usize,
) -> f64 {
    let (w, h) = (partition.width() as i64, partition.height() as i64);
    let labels = partition.labels();
    let r = (patch_size / 2) as i64;
    let z = (patch_size * patch_size) as f64;

    // Pixel rectangle that changes label, upper bounds exclusive.
    let (x0, y0, x1, y1) = match proposal.unit {
        Unit::Pixel(p) => {
            let (x, y) = ((p as i64) % w, (p as i64) / w);
            (x, y, x + 1, y + 1)
        }
        Unit::Block { level, index } => {
            let (a, b, c, d) = hierarchy.level(level).block_rect(index);
            (a as i64, b as i64, c as i64, d as i64)
        }
    };
    let in_rect = |x: i64, y: i64| x >= x0 && x < x1 && y >= y0 && y < y1;

    let mut delta = 0i64;
    let mut before: Vec<(u32, u32)> = Vec::with_capacity(patch_size * patch_size);
    let mut after: Vec<(u32, u32)> = Vec::with_capacity(patch_size * patch_size);
    for qy in (y0 - r).max(0)..(y1 + r).min(h) {
        for qx in (x0 - r).max(0)..(x1 + r).min(w) {
            before.clear();
            after.clear();
            for dy in -r..=r {
                let cy = (qy + dy).clamp(0, h - 1);
                for dx in -r..=r {
                    let cx = (qx + dx).clamp(0, w - 1);
                    let old = labels[(cy * w + cx) as usize];
                    debug_assert!(!in_rect(cx, cy) || old == proposal.from);
                    let new = if in_rect(cx, cy) { proposal.to } else { old };
                    bump(&mut before, old);
                    bump(&mut after, new);
                }
            }
            let sq = |cs: &[(u32, u32)]| -> i64 {
                cs.iter().map(|&(_, c)| (c as i64) * (c as i64)).sum()
            };
            delta += sq(&after) - sq(&before);
        }
    }
    delta as f64 / (z * z)
}

fn bump(counts: &mut Vec<(u32, u32)>, label: u32) {
    match counts.iter_mut().find(|(l, _)| *l == label) {
        Some((_, c)) => *c += 1,
        None => counts.push((label, 1)),
    }
}

/// Exact change of the full objective for a proposal under a config.
pub fn exact_energy_delta(
    partition: &Partition,
    hierarchy: &BlockHierarchy,
    proposal: &MoveProposal,
    config: &EnergyConfig,
) -> f64 {
    let mut d = exact_color_delta(partition, hierarchy, proposal);
    if config.uses_boundary_term() {
        d += config.gamma
            * exact_boundary_delta(partition, hierarchy, proposal, config.patch_size);
    }
    d
}

// ----------------------------------------------------------------------
// Edge maps and the prior gate
// ----------------------------------------------------------------------

/// Central-difference LAB gradient magnitudes with a percentile threshold
/// for "strong edge".
#[derive(Debug, Clone)]
pub struct EdgeMaps {
    pub width: u32,
    pub height: u32,
    /// Gradient magnitude along x (responds to vertical edges).
    pub horizontal: Vec<f32>,
    /// Gradient magnitude along y (responds to horizontal edges).
    pub vertical: Vec<f32>,
    /// Euclidean combination of the two.
    pub combined: Vec<f32>,
    /// Gradient magnitude at the configured percentile.
    pub threshold: f32,
}

impl EdgeMaps {
    pub fn is_strong_edge(&self, pixel: usize) -> bool {
        self.combined[pixel] >= self.threshold && self.threshold > 0.0
    }
}

/// Computes LAB gradient maps and the strong-edge threshold at the given
/// percentile of combined magnitude.
pub fn edge_maps(img: &LabImage, percentile: f64) -> Result<EdgeMaps> {
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::config(format!(
            "edge percentile must lie in [0, 100], got {percentile}"
        )));
    }
    let (w, h) = (img.width as i64, img.height as i64);
    let at = |x: i64, y: i64| img.lab[(y * w + x) as usize];
    let n = (w * h) as usize;
    let mut horizontal = vec![0f32; n];
    let mut vertical = vec![0f32; n];
    let mut combined = vec![0f32; n];
    for y in 0..h {
        for x in 0..w {
            let p = (y * w + x) as usize;
            let gx = diff3(at((x + 1).min(w - 1), y), at((x - 1).max(0), y));
            let gy = diff3(at(x, (y + 1).min(h - 1)), at(x, (y - 1).max(0)));
            horizontal[p] = gx;
            vertical[p] = gy;
            combined[p] = (gx * gx + gy * gy).sqrt();
        }
    }
    let mut sorted = combined.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((percentile / 100.0) * (n - 1) as f64).round() as usize;
    let threshold = sorted[rank];
    Ok(EdgeMaps {
        width: img.width,
        height: img.height,
        horizontal,
        vertical,
        combined,
        threshold,
    })
}

fn diff3(a: [f32; 3], b: [f32; 3]) -> f32 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    ((d0 * d0 + d1 * d1 + d2 * d2) / 4.0).sqrt()
}

/// The boundary-shape gate for a pixel move, dispatching on the prior kind.
///
/// `field` must be `Some` for priors that smooth (`Smooth3x3`, `EdgeSnap`,
/// `Combined`) and `edges` must be `Some` for edge-aware priors.
pub fn prior_test(
    prior: Prior,
    partition: &Partition,
    field: Option<&PatchHistogramField>,
    edges: Option<&EdgeMaps>,
    p: usize,
    from: u32,
    to: u32,
) -> bool {
    match prior {
        Prior::None => true,
        Prior::Smooth3x3 => {
            fast_boundary_test(field.expect("smoothing prior needs a patch field"), p, from, to)
        }
        Prior::Compactness => compactness_test(partition, p, from, to),
        Prior::EdgeSnap => {
            let edges = edges.expect("edge prior needs edge maps");
            if edges.is_strong_edge(p) {
                false
            } else {
                fast_boundary_test(field.expect("edge prior needs a patch field"), p, from, to)
            }
        }
        Prior::Combined => {
            let smooth =
                fast_boundary_test(field.expect("combined prior needs a patch field"), p, from, to);
            let compact = compactness_test(partition, p, from, to);
            let off_edge = !edges.expect("combined prior needs edge maps").is_strong_edge(p);
            (smooth as u8 + compact as u8 + off_edge as u8) >= 2
        }
    }
}

/// True when the pixel sits at least as close to the destination centroid
/// as to its current superpixel's centroid.
fn compactness_test(partition: &Partition, p: usize, from: u32, to: u32) -> bool {
    let w = partition.width() as usize;
    let (x, y) = ((p % w) as f64, (p / w) as f64);
    let d2 = |c: [f64; 2]| (x - c[0]).powi(2) + (y - c[1]).powi(2);
    d2(partition.centroid(to)) <= d2(partition.centroid(from))
}
