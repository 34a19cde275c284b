//! The `bench` subcommand: segment a directory of images, score each against
//! a stem-matched ground-truth label map, and write a metrics report.
//!
//! # Report schema
//!
//! JSON reports have the shape
//!
//! ```text
//! {
//!   "config":    { segmentation settings used for every run },
//!   "images":    [ {"name", "K", "ue", "cue", "br", "asa", "ms"}, ... ],
//!   "aggregate": { "mean_k", "mean_ue", "mean_cue", "mean_br",
//!                  "mean_asa", "mean_ms" },
//!   "sweep":     [ {"k", "mean_ue", ...}, ... ]   (only with --sweep-k)
//!   "total_ms":  wall time of the whole batch
//! }
//! ```
//!
//! `K` is the achieved superpixel count; `ue`/`cue` are plain and corrected
//! undersegmentation error, `br` boundary recall, `asa` achievable
//! segmentation accuracy, `ms` the wall time of that run. With `--sweep-k`
//! there is one row per image and requested count, and `sweep` holds per-k
//! means in list order. Aggregate values are arithmetic means over the rows.
//!
//! CSV reports carry the same rows — a `name,K,ue,cue,br,asa,ms` header,
//! one line per row, and a final `aggregate` line whose `K` column is the
//! mean achieved count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use log::info;
use seeds_core::imgproc::{load_image, quantize, rgb_to_lab, Quantizer, RgbImage};
use seeds_core::io::write_gray_pgm;
use seeds_core::metrics::{contour_map, evaluate, GroundTruth};
use seeds_core::seeds::{segment, SeedsConfig};
use serde::Serialize;

use crate::{path_with_extension, ConfigArgs};

/// Chebyshev tolerance, in pixels, for boundary recall.
pub const BOUNDARY_TOLERANCE: u32 = 2;

#[derive(Args)]
pub struct BenchArgs {
    /// Directory of input images (.ppm or .png).
    #[arg(long)]
    images: PathBuf,

    /// Directory of ground-truth label maps (.pgm or .csv), matched to
    /// images by file stem.
    #[arg(long)]
    truth: PathBuf,

    #[command(flatten)]
    config: ConfigArgs,

    /// Report output path; format chosen by extension.
    #[arg(long, value_parser = path_with_extension(&["json", "csv"]))]
    report: PathBuf,

    /// Comma-separated superpixel counts; each image is segmented once per
    /// count and the report gains per-count mean metrics.
    #[arg(long, value_delimiter = ',', value_parser = crate::parse_target_k)]
    sweep_k: Option<Vec<usize>>,

    /// Comma-separated superpixel counts whose averaged boundary maps are
    /// written as 8-bit PGMs (`<stem>_contour.pgm`) next to the report.
    #[arg(long, value_delimiter = ',', value_parser = crate::parse_target_k)]
    contour_scales: Option<Vec<usize>>,

    /// Worker threads; 1 keeps per-image timings honest.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

/// One segmentation to run: an image, its truth, and a target count.
struct Task {
    name: String,
    image_path: PathBuf,
    truth_path: PathBuf,
    target_k: usize,
    /// Index of `target_k` in the sweep list (0 when there is no sweep).
    k_index: usize,
    /// Contour maps are written once per image, on its first task.
    write_contour: bool,
}

/// One scored segmentation in the report.
#[derive(Serialize, Clone, Debug)]
pub struct ImageRow {
    name: String,
    #[serde(rename = "K")]
    k: usize,
    ue: f64,
    cue: f64,
    br: f64,
    asa: f64,
    ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    contour: Option<String>,
}

/// Arithmetic means over all rows.
#[derive(Serialize, Debug)]
struct Aggregate {
    mean_k: f64,
    mean_ue: f64,
    mean_cue: f64,
    mean_br: f64,
    mean_asa: f64,
    mean_ms: f64,
}

/// Per-count means when `--sweep-k` is given.
#[derive(Serialize, Debug)]
struct SweepPoint {
    k: usize,
    mean_ue: f64,
    mean_cue: f64,
    mean_br: f64,
    mean_asa: f64,
    mean_ms: f64,
}

#[derive(Serialize)]
struct Report {
    config: crate::ConfigEcho,
    images: Vec<ImageRow>,
    aggregate: Aggregate,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SweepPoint>>,
    total_ms: f64,
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let clock = Instant::now();
    let pairs = pair_images_with_truth(&args.images, &args.truth)?;
    info!("{} image/truth pairs under {}", pairs.len(), args.images.display());

    let ks: Vec<usize> = match &args.sweep_k {
        Some(list) => list.clone(),
        None => vec![args.config.superpixels],
    };
    let tasks: Vec<Task> = pairs
        .iter()
        .flat_map(|(name, image_path, truth_path)| {
            ks.iter().enumerate().map(move |(k_index, &target_k)| Task {
                name: name.clone(),
                image_path: image_path.clone(),
                truth_path: truth_path.clone(),
                target_k,
                k_index,
                write_contour: k_index == 0 && args.contour_scales.is_some(),
            })
        })
        .collect();

    let report_dir = match args.report.parent() {
        Some(dir) if dir != Path::new("") => dir.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let base_config = args.config.to_config();

    let rows = run_tasks(&tasks, args, &base_config, &report_dir)?;

    let aggregate = aggregate_rows(&rows);
    let sweep = args.sweep_k.as_ref().map(|list| {
        list.iter()
            .enumerate()
            .map(|(k_index, &k)| {
                let group: Vec<&ImageRow> = rows
                    .iter()
                    .zip(&tasks)
                    .filter(|(_, t)| t.k_index == k_index)
                    .map(|(r, _)| r)
                    .collect();
                sweep_point(k, &group)
            })
            .collect::<Vec<_>>()
    });

    let report = Report {
        config: args.config.echo(),
        images: rows,
        aggregate,
        sweep,
        total_ms: clock.elapsed().as_secs_f64() * 1e3,
    };
    write_report(&args.report, &report)
        .with_context(|| format!("writing {}", args.report.display()))?;
    info!("report written to {}", args.report.display());

    println!(
        "{}",
        serde_json::json!({
            "report": args.report.display().to_string(),
            "rows": report.images.len(),
            "total_ms": report.total_ms,
        })
    );
    Ok(())
}

/// Runs every task, in order with one worker or work-stealing with more.
/// Rows come back in task order; the first failure aborts the batch.
fn run_tasks(
    tasks: &[Task],
    args: &BenchArgs,
    base_config: &SeedsConfig,
    report_dir: &Path,
) -> Result<Vec<ImageRow>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, ImageRow)>> = Mutex::new(Vec::with_capacity(tasks.len()));
    let failure: Mutex<Option<anyhow::Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..args.jobs {
            scope.spawn(|| loop {
                if failure.lock().unwrap().is_some() {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= tasks.len() {
                    break;
                }
                match process_task(&tasks[i], args, base_config, report_dir) {
                    Ok(row) => {
                        // Printing under the lock keeps progress lines whole.
                        let mut rows = results.lock().unwrap();
                        println!(
                            "{}",
                            serde_json::json!({
                                "image": row.name, "K": row.k, "ms": row.ms,
                            })
                        );
                        rows.push((i, row));
                    }
                    Err(err) => {
                        let mut slot = failure.lock().unwrap();
                        if slot.is_none() {
                            *slot =
                                Some(err.context(format!("processing {}", tasks[i].name)));
                        }
                        break;
                    }
                }
            });
        }
    });

    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }
    let mut rows = results.into_inner().unwrap();
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows.into_iter().map(|(_, row)| row).collect())
}

fn process_task(
    task: &Task,
    args: &BenchArgs,
    base_config: &SeedsConfig,
    report_dir: &Path,
) -> Result<ImageRow> {
    let img = load_image(&task.image_path)
        .with_context(|| format!("reading {}", task.image_path.display()))?;
    let gt = GroundTruth::read(&task.truth_path)
        .with_context(|| format!("reading {}", task.truth_path.display()))?;

    let mut config = base_config.clone();
    config.target_k = task.target_k;
    let result = segment(&img, &config)?;
    let metrics = evaluate(&result.partition, &gt, BOUNDARY_TOLERANCE)?;

    let contour = if task.write_contour {
        let scales = args.contour_scales.as_deref().unwrap_or(&[]);
        Some(write_contour_map(&img, scales, &config, report_dir, &task.name)?)
    } else {
        None
    };

    Ok(ImageRow {
        name: task.name.clone(),
        k: result.achieved_k,
        ue: metrics.undersegmentation_error,
        cue: metrics.corrected_undersegmentation_error,
        br: metrics.boundary_recall,
        asa: metrics.achievable_segmentation_accuracy,
        ms: result.elapsed_ms,
        contour,
    })
}

/// Averages boundary maps across the requested counts and writes the result
/// as an 8-bit PGM next to the report. Returns the file name recorded in
/// the row.
fn write_contour_map(
    img: &RgbImage,
    scales: &[usize],
    config: &SeedsConfig,
    report_dir: &Path,
    stem: &str,
) -> Result<String> {
    let mut lab = rgb_to_lab(img);
    quantize(&mut lab, &Quantizer::new(config.bins_per_channel)?);
    let map = contour_map(&lab, scales, config)?;
    let gray = map_to_gray(&map);
    let name = format!("{stem}_contour.pgm");
    write_gray_pgm(report_dir.join(&name), img.width, img.height, &gray)?;
    Ok(name)
}

/// Scales averaged boundary values from [0, 1] to 8-bit gray.
fn map_to_gray(map: &[f32]) -> Vec<u8> {
    map.iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

/// Lists images and pairs each with the truth file sharing its stem.
/// Returns `(stem, image path, truth path)` sorted by stem. Any image
/// without a truth, or truth without an image, is a hard error naming the
/// offenders.
fn pair_images_with_truth(
    images_dir: &Path,
    truth_dir: &Path,
) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let images = files_with_extensions(images_dir, &["ppm", "png"])
        .with_context(|| format!("listing {}", images_dir.display()))?;
    if images.is_empty() {
        bail!("no .ppm or .png images found in {}", images_dir.display());
    }
    let truths = files_with_extensions(truth_dir, &["pgm", "csv"])
        .with_context(|| format!("listing {}", truth_dir.display()))?;

    let mut pairs = Vec::new();
    let mut missing_truth = Vec::new();
    let mut used = vec![false; truths.len()];
    for (stem, image_path) in &images {
        match truths.iter().position(|(t, _)| t == stem) {
            Some(i) => {
                used[i] = true;
                pairs.push((stem.clone(), image_path.clone(), truths[i].1.clone()));
            }
            None => missing_truth.push(stem.clone()),
        }
    }
    let missing_image: Vec<String> = truths
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|((stem, _), _)| stem.clone())
        .collect();

    if !missing_truth.is_empty() || !missing_image.is_empty() {
        let mut msg = String::from("image/truth names do not match:");
        if !missing_truth.is_empty() {
            write!(msg, " images without truth: {}", missing_truth.join(", ")).unwrap();
        }
        if !missing_image.is_empty() {
            if !missing_truth.is_empty() {
                msg.push(';');
            }
            write!(msg, " truths without image: {}", missing_image.join(", ")).unwrap();
        }
        bail!(msg);
    }
    Ok(pairs)
}

/// Regular files in `dir` with one of the given extensions, as
/// `(stem, path)` sorted by stem. Duplicate stems are an error — the
/// pairing would be ambiguous.
fn files_with_extensions(dir: &Path, extensions: &[&str]) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let ext_ok = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| extensions.iter().any(|a| e.eq_ignore_ascii_case(a)));
        if !ext_ok {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            bail!("file name {} is not valid UTF-8", path.display());
        };
        out.push((stem.to_string(), path));
    }
    out.sort();
    if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
        bail!(
            "ambiguous stem {:?}: both {} and {} match",
            w[0].0,
            w[0].1.display(),
            w[1].1.display()
        );
    }
    Ok(out)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn aggregate_rows(rows: &[ImageRow]) -> Aggregate {
    Aggregate {
        mean_k: mean(rows.iter().map(|r| r.k as f64)),
        mean_ue: mean(rows.iter().map(|r| r.ue)),
        mean_cue: mean(rows.iter().map(|r| r.cue)),
        mean_br: mean(rows.iter().map(|r| r.br)),
        mean_asa: mean(rows.iter().map(|r| r.asa)),
        mean_ms: mean(rows.iter().map(|r| r.ms)),
    }
}

fn sweep_point(k: usize, group: &[&ImageRow]) -> SweepPoint {
    SweepPoint {
        k,
        mean_ue: mean(group.iter().map(|r| r.ue)),
        mean_cue: mean(group.iter().map(|r| r.cue)),
        mean_br: mean(group.iter().map(|r| r.br)),
        mean_asa: mean(group.iter().map(|r| r.asa)),
        mean_ms: mean(group.iter().map(|r| r.ms)),
    }
}

fn write_report(path: &Path, report: &Report) -> Result<()> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        fs::write(path, csv_report(&report.images, &report.aggregate))?;
    } else {
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        fs::write(path, text)?;
    }
    Ok(())
}

fn csv_report(rows: &[ImageRow], aggregate: &Aggregate) -> String {
    let mut out = String::from("name,K,ue,cue,br,asa,ms\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.name, r.k, r.ue, r.cue, r.br, r.asa, r.ms
        )
        .unwrap();
    }
    writeln!(
        out,
        "aggregate,{},{},{},{},{},{}",
        aggregate.mean_k,
        aggregate.mean_ue,
        aggregate.mean_cue,
        aggregate.mean_br,
        aggregate.mean_asa,
        aggregate.mean_ms
    )
    .unwrap();
    out
}
