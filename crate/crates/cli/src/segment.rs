//! The `segment` subcommand: one image in, label map and/or overlay out.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use log::info;
use seeds_core::imgproc::{load_image, RgbImage};
use seeds_core::io::write_ppm;
use seeds_core::metrics::boundary_mask;
use seeds_core::seeds::segment;

use crate::{path_with_extension, ConfigArgs};

#[derive(Args)]
pub struct SegmentArgs {
    /// Input image (PPM; PNG also accepted).
    #[arg(long)]
    input: PathBuf,

    #[command(flatten)]
    config: ConfigArgs,

    /// Label map output path; format chosen by extension.
    #[arg(long, value_parser = path_with_extension(&["pgm", "csv"]))]
    labels_out: Option<PathBuf>,

    /// Boundary overlay output path (input image with boundaries in white).
    #[arg(long, value_parser = path_with_extension(&["ppm"]))]
    overlay_out: Option<PathBuf>,
}

pub fn run(args: &SegmentArgs) -> Result<()> {
    let config = args.config.to_config();
    let img = load_image(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    info!("loaded {}x{} image {}", img.width, img.height, args.input.display());

    let result = segment(&img, &config)?;
    info!(
        "{} superpixels in {:.1} ms ({} moves accepted)",
        result.achieved_k, result.elapsed_ms, result.accepted_moves
    );

    if let Some(path) = &args.labels_out {
        let is_csv = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv {
            result.partition.write_csv(path)
        } else {
            result.partition.write_pgm(path)
        }
        .with_context(|| format!("writing {}", path.display()))?;
        info!("wrote labels to {}", path.display());
    }

    if let Some(path) = &args.overlay_out {
        let overlay = overlay_boundaries(&img, result.partition.labels());
        write_ppm(path, img.width, img.height, &overlay)
            .with_context(|| format!("writing {}", path.display()))?;
        info!("wrote overlay to {}", path.display());
    }

    println!(
        "{}",
        serde_json::json!({
            "achieved_k": result.achieved_k,
            "elapsed_ms": result.elapsed_ms,
        })
    );
    Ok(())
}

/// Copies the input image and paints label boundaries white. Non-boundary
/// pixels are untouched.
fn overlay_boundaries(img: &RgbImage, labels: &[u32]) -> Vec<u8> {
    let mask = boundary_mask(labels, img.width, img.height);
    let mut rgb = img.data.clone();
    for (p, &on) in mask.iter().enumerate() {
        if on {
            rgb[p * 3..p * 3 + 3].copy_from_slice(&[255, 255, 255]);
        }
    }
    rgb
}
