//! Image loading, sRGB → CIELAB conversion, and color quantization.
//!
//! The segmentation works on quantized LAB colors: every pixel is converted to
//! CIELAB (D65 white point) and then mapped to a discrete bin index by a
//! [`Quantizer`] that divides each channel range into equal spans. Superpixel
//! color histograms are histograms over these bin indices.

use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::io;

/// Smallest width/height accepted for segmentation input. A block hierarchy
/// needs at least a 2x2 group of 4x4-pixel blocks on each axis.
pub const MIN_IMAGE_DIM: u32 = 8;

/// Largest supported `bins_per_channel`; keeps flat bin indices within `u16`.
pub const MAX_BINS_PER_CHANNEL: u32 = 40;

/// 8-bit RGB image, row-major, 3 bytes per pixel.
#[derive(Debug, Clone)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// RGB byte triples, `3 * width * height` bytes.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(Error::dimension(format!(
                "RGB buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(RgbImage { width, height, data })
    }

    pub fn num_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// RGB triple of the pixel at `(x, y)`.
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// CIELAB image with optional per-pixel quantized bin indices.
///
/// `bin` is empty until [`quantize`] is called; `num_bins` is the total bin
/// count of the quantizer that produced `bin` (0 when unquantized).
#[derive(Debug, Clone)]
pub struct LabImage {
    pub width: u32,
    pub height: u32,
    /// Per-pixel `[L, a, b]`, row-major.
    pub lab: Vec<[f32; 3]>,
    /// Per-pixel flat bin index, row-major; empty until quantized.
    pub bin: Vec<u16>,
    /// Total number of bins (`bins_per_channel^3`), 0 until quantized.
    pub num_bins: usize,
}

impl LabImage {
    pub fn num_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_quantized(&self) -> bool {
        self.num_bins > 0
    }
}

// ---------------------------------------------------------------------------
// sRGB -> CIELAB
// ---------------------------------------------------------------------------

const KAPPA: f64 = 24389.0 / 27.0;
const EPSILON: f64 = 216.0 / 24389.0;

// D65 reference white (2 degree observer).
const WHITE_X: f64 = 0.95047;
const WHITE_Z: f64 = 1.08883;

fn srgb_to_linear(c: u8) -> f32 {
    // The transfer function has only 256 possible inputs; tabulating it
    // removes a `powf` from the per-pixel path. Entries are computed in
    // f64 and rounded once.
    static TABLE: OnceLock<[f32; 256]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        std::array::from_fn(|i| {
            let c = i as f64 / 255.0;
            let linear = if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            };
            linear as f32
        })
    });
    table[c as usize]
}

fn lab_f(t: f32) -> f32 {
    if t > EPSILON as f32 {
        t.cbrt()
    } else {
        (KAPPA as f32 * t + 16.0) / 116.0
    }
}

/// Converts one sRGB pixel to CIELAB (D65 white point).
pub fn rgb_pixel_to_lab(rgb: [u8; 3]) -> [f32; 3] {
    let r = srgb_to_linear(rgb[0]);
    let g = srgb_to_linear(rgb[1]);
    let b = srgb_to_linear(rgb[2]);

    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175 * b;
    let z = 0.019_333_9 * r + 0.119_192 * g + 0.950_304_1 * b;

    let fx = lab_f(x / WHITE_X as f32);
    let fy = lab_f(y);
    let fz = lab_f(z / WHITE_Z as f32);

    [
        116.0 * fy - 16.0,
        500.0 * (fx - fy),
        200.0 * (fy - fz),
    ]
}

/// Converts a whole image to CIELAB. The result is unquantized.
pub fn rgb_to_lab(img: &RgbImage) -> LabImage {
    let lab = img
        .data
        .chunks_exact(3)
        .map(|p| rgb_pixel_to_lab([p[0], p[1], p[2]]))
        .collect();
    LabImage {
        width: img.width,
        height: img.height,
        lab,
        bin: Vec::new(),
        num_bins: 0,
    }
}

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

/// Maps LAB colors to flat bin indices by dividing each channel range into
/// `bins_per_channel` equal spans (floor binning). Values at or beyond the
/// upper range limit clamp into the last bin, so every color gets a bin.
///
/// Channel ranges are fixed: L in `[0, 100]`, a and b in `[-128, 128)`, which
/// covers the full sRGB gamut. Flat index order is `(L, a, b)`, L varying
/// slowest.
#[derive(Debug, Clone)]
pub struct Quantizer {
    bins_per_channel: u32,
}

impl Quantizer {
    /// Channel lower/upper limits for (L, a, b).
    pub const RANGES: [[f32; 2]; 3] = [[0.0, 100.0], [-128.0, 128.0], [-128.0, 128.0]];

    pub fn new(bins_per_channel: u32) -> Result<Self> {
        if bins_per_channel < 1 {
            return Err(Error::config("bins_per_channel must be at least 1"));
        }
        if bins_per_channel > MAX_BINS_PER_CHANNEL {
            return Err(Error::config(format!(
                "bins_per_channel {bins_per_channel} exceeds the supported maximum {MAX_BINS_PER_CHANNEL}"
            )));
        }
        Ok(Quantizer { bins_per_channel })
    }

    pub fn bins_per_channel(&self) -> u32 {
        self.bins_per_channel
    }

    /// Total number of bins (`bins_per_channel^3`).
    pub fn num_bins(&self) -> usize {
        let b = self.bins_per_channel as usize;
        b * b * b
    }

    fn channel_bin(&self, value: f32, range: [f32; 2]) -> u32 {
        let [lo, hi] = range;
        let t = (value as f64 - lo as f64) / (hi as f64 - lo as f64);
        let b = (t * self.bins_per_channel as f64).floor();
        (b as i64).clamp(0, self.bins_per_channel as i64 - 1) as u32
    }

    /// Flat bin index of one LAB color.
    pub fn bin_of(&self, lab: [f32; 3]) -> u16 {
        let bl = self.channel_bin(lab[0], Self::RANGES[0]);
        let ba = self.channel_bin(lab[1], Self::RANGES[1]);
        let bb = self.channel_bin(lab[2], Self::RANGES[2]);
        ((bl * self.bins_per_channel + ba) * self.bins_per_channel + bb) as u16
    }
}

impl Default for Quantizer {
    /// 5 bins per channel (125 total), the standard operating point.
    fn default() -> Self {
        Quantizer { bins_per_channel: 5 }
    }
}

/// Fills the per-pixel bin indices of `img` using `q`.
pub fn quantize(img: &mut LabImage, q: &Quantizer) {
    img.bin = img.lab.iter().map(|&p| q.bin_of(p)).collect();
    img.num_bins = q.num_bins();
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

/// Loads an image for segmentation. Binary PPM (P6) is always supported; PNG
/// is available when the crate is built with the `png` feature. Images
/// smaller than [`MIN_IMAGE_DIM`] on either side are rejected because no
/// block hierarchy fits them.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let img = match ext.as_deref() {
        Some("png") => load_png(path)?,
        // PPM, or anything else: the magic-number check produces a clear error.
        _ => {
            let (w, h, data) = io::read_ppm(path)?;
            RgbImage { width: w, height: h, data }
        }
    };
    if img.width < MIN_IMAGE_DIM || img.height < MIN_IMAGE_DIM {
        return Err(Error::dimension(format!(
            "image {}x{} is smaller than the minimum {MIN_IMAGE_DIM}x{MIN_IMAGE_DIM}",
            img.width, img.height
        )));
    }
    Ok(img)
}

#[cfg(feature = "png")]
fn load_png(path: &Path) -> Result<RgbImage> {
    let decoded = image::ImageReader::open(path)?
        .decode()
        .map_err(|e| Error::format(format!("PNG decode failed: {e}")))?
        .to_rgb8();
    RgbImage::new(decoded.width(), decoded.height(), decoded.into_raw())
}

#[cfg(not(feature = "png"))]
fn load_png(path: &Path) -> Result<RgbImage> {
    Err(Error::format(format!(
        "{} looks like PNG, but this build lacks the `png` feature",
        path.display()
    )))
}
