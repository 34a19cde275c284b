//! Readers and writers for the on-disk formats: binary PPM (P6) images,
//! 16-bit big-endian PGM (P5) label maps, and CSV label maps.
//!
//! All writers are bit-exact: the same data always produces the same bytes,
//! so outputs can be compared or checksummed across runs.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Maximum label value representable in a 16-bit PGM label map.
pub const MAX_PGM_LABEL: u32 = 65535;

// ---------------------------------------------------------------------------
// netpbm header scanning
// ---------------------------------------------------------------------------

struct HeaderScanner<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    fn new(data: &'a [u8]) -> Self {
        HeaderScanner { data, pos: 0 }
    }

    /// Skips whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn read_token(&mut self) -> Result<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("unexpected end of header"));
        }
        Ok(&self.data[start..self.pos])
    }

    fn read_number(&mut self, what: &str) -> Result<u32> {
        let tok = self.read_token()?;
        let s = std::str::from_utf8(tok)
            .map_err(|_| Error::format(format!("non-ASCII {what} in header")))?;
        s.parse::<u32>()
            .map_err(|_| Error::format(format!("invalid {what} {s:?} in header")))
    }

    /// Consumes the single whitespace byte that separates header from payload.
    fn finish_header(&mut self) -> Result<usize> {
        if self.pos >= self.data.len() || !self.data[self.pos].is_ascii_whitespace() {
            return Err(Error::format("missing separator before pixel data"));
        }
        Ok(self.pos + 1)
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::format("zero image dimension"));
    }
    // Guard the multiplication; real inputs are far below this.
    if (width as u64) * (height as u64) > (1 << 31) {
        return Err(Error::format("image dimensions too large"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// PPM (P6) — 8-bit RGB images
// ---------------------------------------------------------------------------

/// Decodes a binary PPM (magic `P6`, maxval 255) from raw bytes.
///
/// Returns `(width, height, rgb)` with `rgb` in row-major RGB byte triples.
pub fn parse_ppm(data: &[u8]) -> Result<(u32, u32, Vec<u8>)> {
    let mut s = HeaderScanner::new(data);
    if s.read_token()? != b"P6" {
        return Err(Error::format("not a binary PPM (P6) file"));
    }
    let width = s.read_number("width")?;
    let height = s.read_number("height")?;
    let maxval = s.read_number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(format!(
            "unsupported PPM maxval {maxval} (only 255 is supported)"
        )));
    }
    check_dims(width, height)?;
    let start = s.finish_header()?;
    let expected = width as usize * height as usize * 3;
    let payload = &data[start..];
    if payload.len() < expected {
        return Err(Error::format(format!(
            "truncated PPM payload: expected {expected} bytes, found {}",
            payload.len()
        )));
    }
    Ok((width, height, payload[..expected].to_vec()))
}

/// Reads a binary PPM (P6) file from disk.
pub fn read_ppm(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<u8>)> {
    parse_ppm(&fs::read(path)?)
}

/// Encodes `rgb` (row-major RGB triples) as binary PPM (P6) bytes.
pub fn encode_ppm(width: u32, height: u32, rgb: &[u8]) -> Result<Vec<u8>> {
    let expected = width as usize * height as usize * 3;
    if rgb.len() != expected {
        return Err(Error::domain(format!(
            "RGB buffer length {} does not match {width}x{height}",
            rgb.len()
        )));
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    Ok(out)
}

/// Writes a binary PPM (P6) file.
pub fn write_ppm(path: impl AsRef<Path>, width: u32, height: u32, rgb: &[u8]) -> Result<()> {
    fs::write(path, encode_ppm(width, height, rgb)?)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// PGM (P5) — label maps, 16-bit big-endian
// ---------------------------------------------------------------------------

/// Encodes a label map as binary PGM (P5) with maxval 65535, 16-bit
/// big-endian samples, row-major.
pub fn encode_label_pgm(width: u32, height: u32, labels: &[u32]) -> Result<Vec<u8>> {
    let n = width as usize * height as usize;
    if labels.len() != n {
        return Err(Error::domain(format!(
            "label buffer length {} does not match {width}x{height}",
            labels.len()
        )));
    }
    if let Some(&big) = labels.iter().find(|&&l| l > MAX_PGM_LABEL) {
        return Err(Error::domain(format!(
            "label {big} exceeds the 16-bit PGM limit {MAX_PGM_LABEL}"
        )));
    }
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(n * 2);
    for &l in labels {
        out.extend_from_slice(&(l as u16).to_be_bytes());
    }
    Ok(out)
}

/// Writes a label map as a 16-bit big-endian PGM (P5) file.
pub fn write_label_pgm(path: impl AsRef<Path>, width: u32, height: u32, labels: &[u32]) -> Result<()> {
    fs::write(path, encode_label_pgm(width, height, labels)?)?;
    Ok(())
}

/// Decodes a binary PGM (P5) label map. Samples are one byte when
/// maxval < 256 and big-endian two-byte otherwise.
pub fn parse_label_pgm(data: &[u8]) -> Result<(u32, u32, Vec<u32>)> {
    let mut s = HeaderScanner::new(data);
    if s.read_token()? != b"P5" {
        return Err(Error::format("not a binary PGM (P5) file"));
    }
    let width = s.read_number("width")?;
    let height = s.read_number("height")?;
    let maxval = s.read_number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(format!("invalid PGM maxval {maxval}")));
    }
    check_dims(width, height)?;
    let start = s.finish_header()?;
    let n = width as usize * height as usize;
    let payload = &data[start..];
    let labels = if maxval < 256 {
        if payload.len() < n {
            return Err(Error::format("truncated PGM payload"));
        }
        payload[..n].iter().map(|&b| b as u32).collect()
    } else {
        if payload.len() < n * 2 {
            return Err(Error::format("truncated PGM payload"));
        }
        payload[..n * 2]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
            .collect()
    };
    Ok((width, height, labels))
}

/// Reads a PGM (P5) label map from disk.
pub fn read_label_pgm(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<u32>)> {
    parse_label_pgm(&fs::read(path)?)
}

/// Encodes an 8-bit grayscale image as binary PGM (P5) with maxval 255.
pub fn encode_gray_pgm(width: u32, height: u32, gray: &[u8]) -> Result<Vec<u8>> {
    let n = width as usize * height as usize;
    if gray.len() != n {
        return Err(Error::domain(format!(
            "gray buffer length {} does not match {width}x{height}",
            gray.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    Ok(out)
}

/// Writes an 8-bit grayscale image as a PGM (P5) file.
pub fn write_gray_pgm(path: impl AsRef<Path>, width: u32, height: u32, gray: &[u8]) -> Result<()> {
    fs::write(path, encode_gray_pgm(width, height, gray)?)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV label maps
// ---------------------------------------------------------------------------

/// Encodes a label map as CSV: one line per image row, comma-separated
/// decimal labels, `\n` line endings.
pub fn encode_label_csv(width: u32, height: u32, labels: &[u32]) -> Result<Vec<u8>> {
    let n = width as usize * height as usize;
    if labels.len() != n {
        return Err(Error::domain(format!(
            "label buffer length {} does not match {width}x{height}",
            labels.len()
        )));
    }
    let mut out = String::new();
    for row in labels.chunks_exact(width as usize) {
        for (x, l) in row.iter().enumerate() {
            if x > 0 {
                out.push(',');
            }
            out.push_str(&l.to_string());
        }
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Writes a label map as a CSV file.
pub fn write_label_csv(path: impl AsRef<Path>, width: u32, height: u32, labels: &[u32]) -> Result<()> {
    fs::write(path, encode_label_csv(width, height, labels)?)?;
    Ok(())
}

/// Decodes a CSV label map; every line must hold the same number of fields.
pub fn parse_label_csv(data: &[u8]) -> Result<(u32, u32, Vec<u32>)> {
    let text = std::str::from_utf8(data).map_err(|_| Error::format("CSV is not valid UTF-8"))?;
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut height = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let v: u32 = field.trim().parse().map_err(|_| {
                Error::format(format!("invalid label {field:?} on CSV line {}", lineno + 1))
            })?;
            labels.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::format(format!(
                    "CSV line {} has {count} fields, expected {w}",
                    lineno + 1
                )));
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or_else(|| Error::format("empty CSV label map"))?;
    check_dims(width as u32, height as u32)?;
    Ok((width as u32, height as u32, labels))
}

/// Reads a CSV label map from disk.
pub fn read_label_csv(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<u32>)> {
    parse_label_csv(&fs::read(path)?)
}

/// Reads a label map, dispatching on the file extension (`.pgm` or `.csv`).
pub fn read_labels(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<u32>)> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => read_label_pgm(path),
        Some("csv") => read_label_csv(path),
        other => Err(Error::format(format!(
            "unsupported label-map extension {:?} for {} (expected .pgm or .csv)",
            other.unwrap_or(""),
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_ppm() {
        // 2x2, all red.
        let mut data = b"P6\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[255, 0, 0, 255, 0, 0, 255, 0, 0, 255, 0, 0]);
        let (w, h, rgb) = parse_ppm(&data).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(rgb, vec![255, 0, 0, 255, 0, 0, 255, 0, 0, 255, 0, 0]);
    }

    #[test]
    fn ppm_header_allows_comments_and_odd_whitespace() {
        let mut data = b"P6 # a comment\n# another\n 3\t1 # dims\n255 ".to_vec();
        data.extend_from_slice(&[1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let (w, h, rgb) = parse_ppm(&data).unwrap();
        assert_eq!((w, h), (3, 1));
        assert_eq!(rgb, vec![1, 2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn truncated_ppm_is_a_format_error() {
        let mut data = b"P6\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[255, 0, 0, 255, 0]); // 5 of 12 payload bytes
        let err = parse_ppm(&data).unwrap_err();
        assert!(
            matches!(err, Error::Format(_)),
            "expected format error, got {err:?}"
        );
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn rejects_non_255_maxval() {
        let data = b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00".to_vec();
        assert!(matches!(parse_ppm(&data), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_wrong_magic() {
        assert!(matches!(parse_ppm(b"P5\n1 1\n255\n\x00"), Err(Error::Format(_))));
    }

    #[test]
    fn label_pgm_bytes_are_exact() {
        // 3x2 map; value 300 exercises the high byte.
        let labels = [0u32, 1, 2, 300, 4, 5];
        let bytes = encode_label_pgm(3, 2, &labels).unwrap();
        let mut expected = b"P5\n3 2\n65535\n".to_vec();
        for v in [0u16, 1, 2, 300, 4, 5] {
            expected.extend_from_slice(&v.to_be_bytes());
        }
        assert_eq!(bytes, expected);
    }

    #[test]
    fn label_pgm_roundtrip() {
        let labels = vec![0u32, 65535, 17, 4242, 1, 0];
        let bytes = encode_label_pgm(2, 3, &labels).unwrap();
        let (w, h, back) = parse_label_pgm(&bytes).unwrap();
        assert_eq!((w, h), (2, 3));
        assert_eq!(back, labels);
    }

    #[test]
    fn label_pgm_rejects_oversized_labels() {
        let err = encode_label_pgm(1, 1, &[65536]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn eight_bit_pgm_is_accepted_on_read() {
        let mut data = b"P5\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[0, 1, 2, 3]);
        let (w, h, labels) = parse_label_pgm(&data).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn gray_pgm_bytes_are_exact() {
        let bytes = encode_gray_pgm(3, 2, &[0, 128, 255, 7, 8, 9]).unwrap();
        let mut expected = b"P5\n3 2\n255\n".to_vec();
        expected.extend_from_slice(&[0, 128, 255, 7, 8, 9]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn gray_pgm_rejects_wrong_buffer_length() {
        let err = encode_gray_pgm(2, 2, &[1, 2, 3]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn label_csv_bytes_are_exact() {
        let labels = [0u32, 1, 2, 3, 4, 5];
        let bytes = encode_label_csv(3, 2, &labels).unwrap();
        assert_eq!(bytes, b"0,1,2\n3,4,5\n");
    }

    #[test]
    fn label_csv_roundtrip() {
        let labels = vec![9u32, 100000, 0, 3, 7, 7, 1, 2];
        let bytes = encode_label_csv(4, 2, &labels).unwrap();
        let (w, h, back) = parse_label_csv(&bytes).unwrap();
        assert_eq!((w, h), (4, 2));
        assert_eq!(back, labels);
    }

    #[test]
    fn ragged_csv_is_a_format_error() {
        assert!(matches!(
            parse_label_csv(b"1,2,3\n4,5\n"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn read_labels_dispatches_on_extension() {
        let dir = tempfile::tempdir().unwrap();
        let labels = vec![0u32, 1, 2, 3];

        let pgm = dir.path().join("m.pgm");
        write_label_pgm(&pgm, 2, 2, &labels).unwrap();
        assert_eq!(read_labels(&pgm).unwrap(), (2, 2, labels.clone()));

        let csv = dir.path().join("m.csv");
        write_label_csv(&csv, 2, 2, &labels).unwrap();
        assert_eq!(read_labels(&csv).unwrap(), (2, 2, labels.clone()));

        let bad = dir.path().join("m.txt");
        std::fs::write(&bad, b"x").unwrap();
        assert!(matches!(read_labels(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn ppm_roundtrip_via_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let rgb: Vec<u8> = (0..2 * 3 * 3).map(|i| (i * 7 % 256) as u8).collect();
        write_ppm(&path, 3, 2, &rgb).unwrap();
        let (w, h, back) = read_ppm(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(back, rgb);
    }
}
