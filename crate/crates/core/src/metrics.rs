//! Benchmark metrics: how well a superpixel partition respects a reference
//! segmentation.
//!
//! All metrics treat the reference ("ground truth") as a label map with no
//! connectivity requirement — a reference segment may consist of several
//! disjoint regions. The superpixel partition is compared against it
//! pixel-by-pixel:
//!
//! * **undersegmentation error** charges, for every reference segment, the
//!   pixels that overlapping superpixels leak outside of it;
//! * **corrected undersegmentation error** charges each superpixel only its
//!   pixels outside the one reference segment it overlaps most;
//! * **achievable segmentation accuracy** is the fraction of pixels kept by
//!   the best possible assignment of whole superpixels to segments;
//! * **boundary recall** is the fraction of reference boundary pixels with a
//!   partition boundary nearby.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgproc::LabImage;
use crate::io;
use crate::partition::Partition;

/// A reference segmentation: a dense label map with ids `0..num_segments`.
/// Segments need not be connected.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    num_segments: usize,
}

impl GroundTruth {
    pub fn from_labels(width: u32, height: u32, labels: Vec<u32>) -> Result<Self> {
        let n = width as usize * height as usize;
        if labels.len() != n || n == 0 {
            return Err(Error::dimension(format!(
                "ground truth has {} entries for a {width}x{height} image",
                labels.len()
            )));
        }
        let num_segments = *labels.iter().max().unwrap() as usize + 1;
        let mut present = vec![false; num_segments];
        for &l in &labels {
            present[l as usize] = true;
        }
        if let Some(missing) = present.iter().position(|&p| !p) {
            return Err(Error::domain(format!(
                "ground truth label {missing} is missing; ids must cover 0..{num_segments}"
            )));
        }
        Ok(Self { width, height, labels, num_segments })
    }

    /// Reads a reference segmentation from a `.pgm` or `.csv` label file.
    pub fn read(path: &Path) -> Result<Self> {
        let (width, height, labels) = io::read_labels(path)?;
        Self::from_labels(width, height, labels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_segments(&self) -> usize {
        self.num_segments
    }
}

/// Per-reference-segment diagnostics inside a [`MetricsReport`].
#[derive(Debug, Clone)]
pub struct SegmentDiagnostics {
    pub gt_label: u32,
    /// Pixels in the reference segment.
    pub area: u64,
    /// Superpixels overlapping the segment.
    pub covering_superpixels: usize,
    /// This segment's share of the undersegmentation error numerator:
    /// pixels leaked outside it by its covering superpixels.
    pub leaked_pixels: u64,
}

/// All metrics for one partition/reference pair.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub num_superpixels: usize,
    pub num_gt_segments: usize,
    pub undersegmentation_error: f64,
    pub corrected_undersegmentation_error: f64,
    pub achievable_segmentation_accuracy: f64,
    pub boundary_recall: f64,
    pub per_segment: Vec<SegmentDiagnostics>,
}

fn check_dims(partition: &Partition, gt: &GroundTruth) -> Result<()> {
    if partition.width() != gt.width || partition.height() != gt.height {
        return Err(Error::dimension(format!(
            "partition is {}x{} but ground truth is {}x{}",
            partition.width(),
            partition.height(),
            gt.width,
            gt.height
        )));
    }
    Ok(())
}

/// Dense overlap counts: entry `s * num_segments + g` is the number of
/// pixels with superpixel `s` and reference segment `g`.
fn contingency(partition: &Partition, gt: &GroundTruth) -> Vec<u64> {
    let kg = gt.num_segments;
    let mut table = vec![0u64; partition.k() * kg];
    for (&s, &g) in partition.labels().iter().zip(&gt.labels) {
        table[s as usize * kg + g as usize] += 1;
    }
    table
}

/// Undersegmentation error: for every reference segment, every overlapping
/// superpixel leaks its pixels outside the segment; the total leak is
/// normalized by the image area. 0 for a perfectly nested partition.
pub fn undersegmentation_error(partition: &Partition, gt: &GroundTruth) -> Result<f64> {
    check_dims(partition, gt)?;
    let kg = gt.num_segments;
    let table = contingency(partition, gt);
    let mut leaked = 0u64;
    for s in 0..partition.k() {
        let row = &table[s * kg..(s + 1) * kg];
        let size = partition.size(s as u32) as u64;
        for &overlap in row.iter().filter(|&&o| o > 0) {
            leaked += size - overlap;
        }
    }
    Ok(leaked as f64 / partition.num_pixels() as f64)
}

/// Corrected undersegmentation error: each superpixel is charged only the
/// pixels outside the reference segment it overlaps most (ties favor the
/// smaller segment id). Equals one minus the achievable accuracy.
///
/// Deliberately accumulated through its own per-superpixel pass rather than
/// the shared overlap table, so the identity with
/// [`achievable_segmentation_accuracy`] is a meaningful cross-check.
pub fn corrected_undersegmentation_error(
    partition: &Partition,
    gt: &GroundTruth,
) -> Result<f64> {
    check_dims(partition, gt)?;
    let mut overlaps: Vec<HashMap<u32, u64>> = vec![HashMap::new(); partition.k()];
    for (&s, &g) in partition.labels().iter().zip(&gt.labels) {
        *overlaps[s as usize].entry(g).or_insert(0) += 1;
    }
    let mut misassigned = 0u64;
    for (s, map) in overlaps.iter().enumerate() {
        let size = partition.size(s as u32) as u64;
        // Largest overlap, smaller gt id on ties.
        let (_, &best) = map
            .iter()
            .min_by_key(|&(&g, &count)| (std::cmp::Reverse(count), g))
            .expect("superpixels are non-empty");
        misassigned += size - best;
    }
    Ok(misassigned as f64 / partition.num_pixels() as f64)
}

/// Achievable segmentation accuracy: the fraction of pixels that survive
/// when every superpixel is assigned wholesale to the reference segment it
/// overlaps most. 1.0 when every superpixel nests inside a segment.
pub fn achievable_segmentation_accuracy(
    partition: &Partition,
    gt: &GroundTruth,
) -> Result<f64> {
    check_dims(partition, gt)?;
    let kg = gt.num_segments;
    let table = contingency(partition, gt);
    let kept: u64 = (0..partition.k())
        .map(|s| {
            table[s * kg..(s + 1) * kg]
                .iter()
                .copied()
                .max()
                .unwrap_or(0)
        })
        .sum();
    Ok(kept as f64 / partition.num_pixels() as f64)
}

/// Marks pixels whose right or down neighbor carries a different label.
/// This is the boundary convention used by all boundary-based metrics and
/// by overlay rendering.
pub fn boundary_mask(labels: &[u32], width: u32, height: u32) -> Vec<bool> {
    let (w, h) = (width as usize, height as usize);
    debug_assert_eq!(labels.len(), w * h);
    let mut mask = vec![false; labels.len()];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let right = x + 1 < w && labels[p] != labels[p + 1];
            let down = y + 1 < h && labels[p] != labels[p + w];
            mask[p] = right || down;
        }
    }
    mask
}

/// Boundary recall: the fraction of reference boundary pixels that have a
/// partition boundary pixel within Chebyshev distance `epsilon`. A
/// reference with no boundary at all (a single segment) scores 1.0.
pub fn boundary_recall(partition: &Partition, gt: &GroundTruth, epsilon: u32) -> Result<f64> {
    check_dims(partition, gt)?;
    let (w, h) = (gt.width as usize, gt.height as usize);
    let gt_mask = boundary_mask(&gt.labels, gt.width, gt.height);
    let sp_mask = boundary_mask(partition.labels(), gt.width, gt.height);
    let e = epsilon as i64;

    let mut boundary = 0u64;
    let mut recalled = 0u64;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !gt_mask[y as usize * w + x as usize] {
                continue;
            }
            boundary += 1;
            let hit = ((y - e).max(0)..=(y + e).min(h as i64 - 1)).any(|ny| {
                ((x - e).max(0)..=(x + e).min(w as i64 - 1))
                    .any(|nx| sp_mask[ny as usize * w + nx as usize])
            });
            if hit {
                recalled += 1;
            }
        }
    }
    if boundary == 0 {
        return Ok(1.0);
    }
    Ok(recalled as f64 / boundary as f64)
}

/// Computes every metric plus per-segment diagnostics in one call.
pub fn evaluate(partition: &Partition, gt: &GroundTruth, epsilon: u32) -> Result<MetricsReport> {
    check_dims(partition, gt)?;
    let kg = gt.num_segments;
    let table = contingency(partition, gt);

    let mut per_segment: Vec<SegmentDiagnostics> = (0..kg)
        .map(|g| SegmentDiagnostics {
            gt_label: g as u32,
            area: 0,
            covering_superpixels: 0,
            leaked_pixels: 0,
        })
        .collect();
    for s in 0..partition.k() {
        let size = partition.size(s as u32) as u64;
        for g in 0..kg {
            let overlap = table[s * kg + g];
            per_segment[g].area += overlap;
            if overlap > 0 {
                per_segment[g].covering_superpixels += 1;
                per_segment[g].leaked_pixels += size - overlap;
            }
        }
    }

    Ok(MetricsReport {
        num_superpixels: partition.k(),
        num_gt_segments: kg,
        undersegmentation_error: undersegmentation_error(partition, gt)?,
        corrected_undersegmentation_error: corrected_undersegmentation_error(partition, gt)?,
        achievable_segmentation_accuracy: achievable_segmentation_accuracy(partition, gt)?,
        boundary_recall: boundary_recall(partition, gt, epsilon)?,
        per_segment,
    })
}

/// Averages the boundary indicators of several label maps of equal size
/// into one soft contour map: 1.0 where every scale places a boundary.
pub fn average_boundary_maps(layers: &[&[u32]], width: u32, height: u32) -> Result<Vec<f32>> {
    if layers.is_empty() {
        return Err(Error::config("contour map needs at least one label map"));
    }
    let n = width as usize * height as usize;
    let mut acc = vec![0f32; n];
    for layer in layers {
        if layer.len() != n {
            return Err(Error::dimension(format!(
                "label map has {} entries for a {width}x{height} contour map",
                layer.len()
            )));
        }
        for (a, m) in acc.iter_mut().zip(boundary_mask(layer, width, height)) {
            *a += m as u8 as f32;
        }
    }
    let scale = 1.0 / layers.len() as f32;
    for a in &mut acc {
        *a *= scale;
    }
    Ok(acc)
}

/// Soft contour map of an image: segments it once per superpixel count in
/// `scales` (reusing `config` with only the count swapped) and averages
/// the boundary maps. A pixel's value is the fraction of scales that put
/// a superpixel boundary on it, so persistent image contours score near
/// 1.0 while grid seams wash out.
pub fn contour_map(
    img: &LabImage,
    scales: &[usize],
    config: &crate::seeds::SeedsConfig,
) -> Result<Vec<f32>> {
    if scales.is_empty() {
        return Err(Error::config("contour map needs at least one scale"));
    }
    let mut layers: Vec<Vec<u32>> = Vec::with_capacity(scales.len());
    for &k in scales {
        let mut cfg = config.clone();
        cfg.target_k = k;
        let mut seg = crate::seeds::Segmenter::new(img, cfg)?;
        seg.run();
        layers.push(seg.finish().partition.labels().to_vec());
    }
    let refs: Vec<&[u32]> = layers.iter().map(Vec::as_slice).collect();
    average_boundary_maps(&refs, img.width, img.height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::LabImage;
    use crate::partition::{MinBlock, MoveProposal, Unit};
    use approx::assert_relative_eq;

    fn labels_from_rows(rows: &[&[u32]]) -> (u32, u32, Vec<u32>) {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        (w, h, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    fn vertical_halves(size: u32, seam: u32) -> Vec<u32> {
        (0..size * size)
            .map(|i| if i % size < seam { 0 } else { 1 })
            .collect()
    }

    /// Two flat colors split at `seam_x`, pre-quantized to two bins.
    fn two_tone_lab(width: u32, height: u32, seam_x: u32) -> LabImage {
        let n = (width * height) as usize;
        let mut lab = Vec::with_capacity(n);
        let mut bin = Vec::with_capacity(n);
        for p in 0..n {
            if (p as u32 % width) < seam_x {
                lab.push([20.0, 10.0, -10.0]);
                bin.push(0u16);
            } else {
                lab.push([75.0, -30.0, 40.0]);
                bin.push(1u16);
            }
        }
        LabImage { width, height, lab, bin, num_bins: 2 }
    }

    fn horizontal_halves(size: u32, seam: u32) -> Vec<u32> {
        (0..size * size)
            .map(|i| if i / size < seam { 0 } else { 1 })
            .collect()
    }

    #[test]
    fn identical_partition_scores_perfectly() {
        let labels = vertical_halves(8, 4);
        let part = Partition::from_label_map(8, 8, labels.clone()).unwrap();
        let gt = GroundTruth::from_labels(8, 8, labels).unwrap();
        assert_relative_eq!(undersegmentation_error(&part, &gt).unwrap(), 0.0);
        assert_relative_eq!(corrected_undersegmentation_error(&part, &gt).unwrap(), 0.0);
        assert_relative_eq!(achievable_segmentation_accuracy(&part, &gt).unwrap(), 1.0);
        assert_relative_eq!(boundary_recall(&part, &gt, 2).unwrap(), 1.0);
    }

    #[test]
    fn crossed_halves_have_full_error_and_half_accuracy() {
        // Partition splits horizontally, reference vertically: every
        // superpixel overlaps both segments by half.
        let part = Partition::from_label_map(6, 6, horizontal_halves(6, 3)).unwrap();
        let gt = GroundTruth::from_labels(6, 6, vertical_halves(6, 3)).unwrap();
        assert_relative_eq!(undersegmentation_error(&part, &gt).unwrap(), 1.0);
        assert_relative_eq!(achievable_segmentation_accuracy(&part, &gt).unwrap(), 0.5);
        assert_relative_eq!(corrected_undersegmentation_error(&part, &gt).unwrap(), 0.5);
        // Reference boundary runs down column 2; the partition boundary is
        // row 2, so only reference pixels within 2 rows of it are recalled.
        assert_relative_eq!(boundary_recall(&part, &gt, 2).unwrap(), 5.0 / 6.0);
    }

    #[test]
    fn boundary_recall_tolerates_shifts_up_to_epsilon() {
        let size = 16u32;
        let gt = GroundTruth::from_labels(size, size, vertical_halves(size, 8)).unwrap();
        // Partition seam shifted right by two columns: every reference
        // boundary pixel is exactly two columns from a partition boundary.
        let part =
            Partition::from_label_map(size, size, vertical_halves(size, 10)).unwrap();
        assert_relative_eq!(boundary_recall(&part, &gt, 2).unwrap(), 1.0);
        // Three columns: out of reach.
        let part =
            Partition::from_label_map(size, size, vertical_halves(size, 11)).unwrap();
        assert_relative_eq!(boundary_recall(&part, &gt, 2).unwrap(), 0.0);
        assert_relative_eq!(boundary_recall(&part, &gt, 3).unwrap(), 1.0);
    }

    #[test]
    fn boundary_mask_uses_right_and_down_differences() {
        let (w, h, labels) = labels_from_rows(&[
            &[0, 0, 1],
            &[0, 0, 1],
            &[2, 2, 2],
        ]);
        let mask = boundary_mask(&labels, w, h);
        let expected = [
            false, true, false, // right-diff at (1,0)
            true, true, true,   // down-diffs into row 2, right-diff at (1,1)
            false, false, false, // last row and column have no right/down
        ];
        assert_eq!(mask, expected);
    }

    fn random_valid_partition(seed: u64, k: usize) -> Partition {
        let n = 144usize;
        let img = LabImage {
            width: 12,
            height: 12,
            lab: vec![[50.0, 0.0, 0.0]; n],
            bin: (0..n).map(|i| (i % 5) as u16).collect(),
            num_bins: 5,
        };
        let (mut part, h) = Partition::init_grid(&img, k, MinBlock::Two).unwrap();
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..120 {
            let p = (next() % n as u64) as usize;
            let from = part.labels()[p];
            let Some(to) = part
                .pixel_neighbors(p)
                .into_iter()
                .flatten()
                .map(|q| part.labels()[q])
                .find(|&l| l != from)
            else {
                continue;
            };
            let proposal = MoveProposal { unit: Unit::Pixel(p), from, to };
            if !part.would_disconnect(&h, &proposal) && part.size_floor_allows(&h, &proposal) {
                part.apply_move(&h, &proposal);
            }
        }
        part
    }

    #[test]
    fn corrected_error_and_accuracy_sum_to_one() {
        for i in 0..100u64 {
            let part = random_valid_partition(i * 7 + 1, 4 + (i % 6) as usize);
            let gt_part = random_valid_partition(i * 13 + 5, 2 + (i % 8) as usize);
            let gt = GroundTruth::from_labels(12, 12, gt_part.labels().to_vec()).unwrap();
            let cue = corrected_undersegmentation_error(&part, &gt).unwrap();
            let asa = achievable_segmentation_accuracy(&part, &gt).unwrap();
            assert!(
                (cue + asa - 1.0).abs() <= 1e-12,
                "pair {i}: cue {cue} + asa {asa} != 1"
            );
        }
    }

    #[test]
    fn metrics_ignore_superpixel_id_permutations() {
        let part = random_valid_partition(99, 6);
        let gt = GroundTruth::from_labels(12, 12, vertical_halves(12, 5)).unwrap();
        // Reverse all ids: k-1 <-> 0 and so on.
        let k = part.k() as u32;
        let permuted: Vec<u32> = part.labels().iter().map(|&l| k - 1 - l).collect();
        let permuted = Partition::from_label_map(12, 12, permuted).unwrap();
        for (a, b) in [
            (
                undersegmentation_error(&part, &gt).unwrap(),
                undersegmentation_error(&permuted, &gt).unwrap(),
            ),
            (
                corrected_undersegmentation_error(&part, &gt).unwrap(),
                corrected_undersegmentation_error(&permuted, &gt).unwrap(),
            ),
            (
                achievable_segmentation_accuracy(&part, &gt).unwrap(),
                achievable_segmentation_accuracy(&permuted, &gt).unwrap(),
            ),
            (
                boundary_recall(&part, &gt, 2).unwrap(),
                boundary_recall(&permuted, &gt, 2).unwrap(),
            ),
        ] {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
    }

    /// The nested-square family: a 24x24 reference with a 6x6 object in the
    /// upper-right quadrant. Partitions differ only in how that quadrant is
    /// split between two superpixels, each overlapping both the object and
    /// the background, so the plain undersegmentation error cannot tell the
    /// layouts apart while the corrected one ranks them strictly.
    fn nested_square_gt() -> GroundTruth {
        let mut labels = vec![0u32; 24 * 24];
        for y in 3..9 {
            for x in 15..21 {
                labels[y * 24 + x] = 1;
            }
        }
        GroundTruth::from_labels(24, 24, labels).unwrap()
    }

    /// Base quadrant superpixels 0..3; the upper-right quadrant (labels 3
    /// and 4) is carved by `in_piece`: true puts the pixel in superpixel 4.
    fn quadrant_layout(in_piece: impl Fn(usize, usize) -> bool) -> Partition {
        let mut labels = vec![0u32; 24 * 24];
        for y in 0..24 {
            for x in 0..24 {
                let label = match (x < 12, y < 12) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, false) => 2,
                    (false, true) => {
                        if in_piece(x, y) {
                            4
                        } else {
                            3
                        }
                    }
                };
                labels[y * 24 + x] = label;
            }
        }
        Partition::from_label_map(24, 24, labels).unwrap()
    }

    #[test]
    fn nested_square_layouts_tie_on_ue_but_rank_on_cue() {
        let gt = nested_square_gt();
        // Pieces in increasing order of expected corrected error.
        let layouts: Vec<(Partition, f64)> = vec![
            // Object box shifted right by one: leaks 6 + misses 6.
            (quadrant_layout(|x, y| (16..22).contains(&x) && (3..9).contains(&y)), 12.0),
            // A wider, shorter box: 30 object + 10 background pixels.
            (quadrant_layout(|x, y| (13..21).contains(&x) && (3..8).contains(&y)), 16.0),
            // Object box shifted right by two.
            (quadrant_layout(|x, y| (17..23).contains(&x) && (3..9).contains(&y)), 24.0),
            // Vertical split straight through the object.
            (quadrant_layout(|x, _| x >= 18), 36.0),
        ];

        let n = (24 * 24) as f64;
        let ue: Vec<f64> = layouts
            .iter()
            .map(|(p, _)| undersegmentation_error(p, &gt).unwrap())
            .collect();
        // All layouts leak the whole upper-right quadrant: 144 pixels.
        for (i, &u) in ue.iter().enumerate() {
            assert!(
                (u - 144.0 / n).abs() <= 1e-9,
                "layout {i}: ue {} != {}",
                u,
                144.0 / n
            );
        }

        let cue: Vec<f64> = layouts
            .iter()
            .map(|(p, _)| corrected_undersegmentation_error(p, &gt).unwrap())
            .collect();
        for (i, ((_, expected), &c)) in layouts.iter().zip(&cue).enumerate() {
            assert_relative_eq!(c, expected / n, max_relative = 1e-12);
            if i > 0 {
                assert!(
                    c > cue[i - 1],
                    "layout {i} ({c}) not ranked above layout {} ({})",
                    i - 1,
                    cue[i - 1]
                );
            }
        }
    }

    #[test]
    fn single_segment_reference_is_trivially_satisfied() {
        let part = random_valid_partition(5, 4);
        let gt = GroundTruth::from_labels(12, 12, vec![0; 144]).unwrap();
        assert_relative_eq!(undersegmentation_error(&part, &gt).unwrap(), 0.0);
        assert_relative_eq!(corrected_undersegmentation_error(&part, &gt).unwrap(), 0.0);
        assert_relative_eq!(achievable_segmentation_accuracy(&part, &gt).unwrap(), 1.0);
        // No reference boundary: vacuously recalled.
        assert_relative_eq!(boundary_recall(&part, &gt, 2).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_bundles_the_standalone_metrics() {
        let part = random_valid_partition(17, 6);
        let gt = GroundTruth::from_labels(12, 12, vertical_halves(12, 7)).unwrap();
        let report = evaluate(&part, &gt, 2).unwrap();
        assert_eq!(report.num_superpixels, part.k());
        assert_eq!(report.num_gt_segments, 2);
        assert_relative_eq!(
            report.undersegmentation_error,
            undersegmentation_error(&part, &gt).unwrap()
        );
        assert_relative_eq!(
            report.corrected_undersegmentation_error,
            corrected_undersegmentation_error(&part, &gt).unwrap()
        );
        assert_relative_eq!(
            report.achievable_segmentation_accuracy,
            achievable_segmentation_accuracy(&part, &gt).unwrap()
        );
        assert_relative_eq!(report.boundary_recall, boundary_recall(&part, &gt, 2).unwrap());

        // Diagnostics are consistent: areas tile the image, and the leak
        // total matches the undersegmentation numerator.
        let total_area: u64 = report.per_segment.iter().map(|s| s.area).sum();
        assert_eq!(total_area, 144);
        let leaked: u64 = report.per_segment.iter().map(|s| s.leaked_pixels).sum();
        assert_relative_eq!(
            leaked as f64 / 144.0,
            report.undersegmentation_error,
            max_relative = 1e-12
        );
        assert!(report.per_segment.iter().all(|s| s.covering_superpixels >= 1));
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let part = random_valid_partition(3, 4);
        let gt = GroundTruth::from_labels(10, 10, vec![0; 100]).unwrap();
        assert!(undersegmentation_error(&part, &gt).is_err());
        assert!(corrected_undersegmentation_error(&part, &gt).is_err());
        assert!(achievable_segmentation_accuracy(&part, &gt).is_err());
        assert!(boundary_recall(&part, &gt, 2).is_err());
        assert!(evaluate(&part, &gt, 2).is_err());
    }

    #[test]
    fn ground_truth_requires_compact_ids() {
        // Label 1 missing.
        let labels = vec![0u32, 0, 2, 2];
        assert!(GroundTruth::from_labels(2, 2, labels).is_err());
        // Disconnected segments are fine.
        let (w, h, labels) = labels_from_rows(&[
            &[0, 1, 0],
            &[1, 1, 1],
            &[0, 1, 0],
        ]);
        let gt = GroundTruth::from_labels(w, h, labels).unwrap();
        assert_eq!(gt.num_segments(), 2);
    }

    #[test]
    fn boundary_map_average_counts_per_layer_indicators() {
        let a = vertical_halves(8, 4);
        let b = vertical_halves(8, 6);
        let map = average_boundary_maps(&[&a, &b], 8, 8).unwrap();
        for y in 0..8usize {
            // Column 3 is a boundary in the first map only; column 5 in the
            // second only.
            assert_relative_eq!(map[y * 8 + 3], 0.5);
            assert_relative_eq!(map[y * 8 + 5], 0.5);
            assert_relative_eq!(map[y * 8 + 0], 0.0);
        }
        let twice = average_boundary_maps(&[&a, &a], 8, 8).unwrap();
        for y in 0..8usize {
            assert_relative_eq!(twice[y * 8 + 3], 1.0);
        }
        assert!(average_boundary_maps(&[], 8, 8).is_err());
        assert!(average_boundary_maps(&[&a], 4, 4).is_err());
    }

    #[test]
    fn untouched_grid_scores_perfectly_against_grid_aligned_truth() {
        let n = 24 * 24;
        let img = LabImage {
            width: 24,
            height: 24,
            lab: vec![[50.0, 0.0, 0.0]; n],
            bin: (0..n).map(|i| (i % 3) as u16).collect(),
            num_bins: 3,
        };
        let (part, _) = Partition::init_grid(&img, 4, MinBlock::Two).unwrap();
        let gt = GroundTruth::from_labels(24, 24, part.labels().to_vec()).unwrap();
        let report = evaluate(&part, &gt, 2).unwrap();
        assert_relative_eq!(report.undersegmentation_error, 0.0);
        assert_relative_eq!(report.corrected_undersegmentation_error, 0.0);
        assert_relative_eq!(report.boundary_recall, 1.0);
        assert_relative_eq!(report.achievable_segmentation_accuracy, 1.0);
    }

    fn contour_config() -> crate::seeds::SeedsConfig {
        let mut config = crate::seeds::SeedsConfig::new(2);
        // The smoothing gate vetoes lone-column fixes on flat fixtures, so
        // let the color term alone drive the seams here.
        config.energy.prior = crate::energy::Prior::None;
        config.post_process_means = false;
        config
    }

    #[test]
    fn contour_map_single_scale_is_a_binary_boundary_map() {
        let img = two_tone_lab(24, 24, 13);
        let map = contour_map(&img, &[4], &contour_config()).unwrap();
        assert!(map.iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(map.contains(&1.0), "four superpixels leave boundaries");
    }

    #[test]
    fn contour_map_values_are_multiples_of_the_scale_count() {
        let img = {
            let n = 24 * 24;
            LabImage {
                width: 24,
                height: 24,
                lab: vec![[50.0, 0.0, 0.0]; n],
                bin: vec![0; n],
                num_bins: 1,
            }
        };
        let scales = [2usize, 4, 6, 9];
        let map = contour_map(&img, &scales, &contour_config()).unwrap();
        for &v in &map {
            let steps = v * scales.len() as f32;
            assert_relative_eq!(steps, steps.round(), epsilon = 1e-6);
        }
    }

    #[test]
    fn contour_map_concentrates_on_a_persistent_color_seam() {
        // Two-tone image whose color boundary sits between columns 18 and 19.
        // Each per-scale run keeps its strongest seam near that boundary
        // (coarse block moves can park fragments up to half a coarse cell
        // away), while grid cuts inside the uniform halves close up. The
        // averaged map must therefore peak within a pixel of the true seam
        // and wash out far from it.
        let img = two_tone_lab(32, 32, 19);
        let map = contour_map(&img, &[2, 4, 8, 16], &contour_config()).unwrap();
        let col_mean =
            |x: usize| (0..32).map(|y| map[y * 32 + x]).sum::<f32>() / 32.0;
        let peak = (0..31)
            .max_by(|&a, &b| col_mean(a).total_cmp(&col_mean(b)))
            .unwrap();
        // Boundary columns are marked left of the seam, so the ideal peak
        // is column 18.
        assert!(
            (17..=19).contains(&peak),
            "strongest column {peak} is not at the color seam"
        );
        assert!(
            col_mean(peak) > 0.5,
            "peak column keeps only {} of its boundary votes",
            col_mean(peak)
        );
        // Columns more than eight pixels (half the coarsest grid cell) from
        // the seam see only scale-specific grid cuts, which must fade.
        let off_seam_max = (0..32usize)
            .filter(|&x| x.abs_diff(18) > 8)
            .map(col_mean)
            .fold(0.0f32, f32::max);
        assert!(off_seam_max < 0.1, "off-seam column mean {off_seam_max}");
        assert!(
            col_mean(peak) > 5.0 * off_seam_max,
            "seam contrast too weak: peak {} vs off-seam {}",
            col_mean(peak),
            off_seam_max
        );
    }

    #[test]
    fn contour_map_rejects_an_empty_scale_list() {
        let img = two_tone_lab(24, 24, 13);
        assert!(contour_map(&img, &[], &contour_config()).is_err());
    }
}
