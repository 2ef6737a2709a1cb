//! PGM (P2/P5) and IDX readers and writers.
//!
//! Both formats carry 8-bit samples. On read they are scaled to `[0, 1]`; on
//! write values are quantized with `round(v * 255)` and anything outside
//! `[0, 1]` is rejected.

use thiserror::Error;

use crate::neurn::{Image, NeurnError};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Error, Debug, PartialEq)]
pub enum ImageIoError {
    #[error("bad magic: expected {expected}, found {found}")]
    BadMagic { expected: String, found: String },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("maxval {0} not supported (must be 1..=255)")]
    MaxVal(u32),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),

    #[error("sample {value} exceeds maxval {maxval}")]
    SampleTooLarge { value: u32, maxval: u32 },

    #[error("image has {0} channels; PGM and IDX hold a single channel")]
    NotGrayscale(usize),

    #[error("pixel value {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("images in an IDX file must share dimensions")]
    MixedDimensions,

    #[error("label {value} at index {index} outside 0..=9")]
    BadLabel { index: usize, value: u8 },

    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error(transparent)]
    Image(#[from] NeurnError),
}

pub type Result<T> = std::result::Result<T, ImageIoError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    /// P2
    Ascii,
    /// P5
    Binary,
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageIoError::Header(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ImageIoError::Header(format!("{what} out of range")))
    }
}

/// Decodes a P2 or P5 graymap; samples are scaled by `1 / maxval`.
pub fn read_pgm(bytes: &[u8]) -> Result<Image> {
    let encoding = match bytes.get(..2) {
        Some(b"P2") => PgmEncoding::Ascii,
        Some(b"P5") => PgmEncoding::Binary,
        other => {
            return Err(ImageIoError::BadMagic {
                expected: "P2 or P5".into(),
                found: String::from_utf8_lossy(other.unwrap_or(bytes)).into_owned(),
            })
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(ImageIoError::MaxVal(maxval));
    }
    if width == 0 || height == 0 {
        return Err(ImageIoError::Header(format!(
            "zero dimension {width}x{height}"
        )));
    }
    let count = width * height;

    let samples: Vec<u32> = match encoding {
        PgmEncoding::Binary => {
            // Exactly one whitespace byte separates maxval from the raster.
            match bytes.get(cur.pos) {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => {
                    return Err(ImageIoError::Header(
                        "missing whitespace after maxval".into(),
                    ))
                }
            }
            let payload = &bytes[cur.pos..];
            if payload.len() < count {
                return Err(ImageIoError::Truncated {
                    expected: count,
                    found: payload.len(),
                });
            }
            if payload.len() > count {
                return Err(ImageIoError::TrailingBytes(payload.len() - count));
            }
            payload.iter().map(|&b| b as u32).collect()
        }
        PgmEncoding::Ascii => {
            let mut samples = Vec::with_capacity(count);
            for i in 0..count {
                cur.skip_space_and_comments();
                if cur.pos >= bytes.len() {
                    return Err(ImageIoError::Truncated {
                        expected: count,
                        found: i,
                    });
                }
                samples.push(cur.number("sample")?);
            }
            cur.skip_space_and_comments();
            if cur.pos < bytes.len() {
                return Err(ImageIoError::TrailingBytes(bytes.len() - cur.pos));
            }
            samples
        }
    };

    if let Some(&value) = samples.iter().find(|&&v| v > maxval) {
        return Err(ImageIoError::SampleTooLarge { value, maxval });
    }
    let scale = maxval as f64;
    Ok(Image::new(
        width,
        height,
        1,
        samples.into_iter().map(|v| v as f64 / scale).collect(),
    )?)
}

fn quantize(img: &Image) -> Result<Vec<u8>> {
    if img.channels() != 1 {
        return Err(ImageIoError::NotGrayscale(img.channels()));
    }
    img.data()
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if !(0.0..=1.0).contains(&value) {
                return Err(ImageIoError::OutOfRange { index, value });
            }
            Ok((value * 255.0).round() as u8)
        })
        .collect()
}

/// Encodes a single-channel image with maxval 255.
pub fn write_pgm(img: &Image, encoding: PgmEncoding) -> Result<Vec<u8>> {
    let samples = quantize(img)?;
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::new();
    match encoding {
        PgmEncoding::Binary => {
            out.extend_from_slice(format!("P5\n{w} {h}\n255\n").as_bytes());
            out.extend_from_slice(&samples);
        }
        PgmEncoding::Ascii => {
            out.extend_from_slice(format!("P2\n{w} {h}\n255\n").as_bytes());
            for row in samples.chunks(w) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    Ok(out)
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| ImageIoError::Header(format!("header truncated at byte {offset}")))
}

fn check_idx_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_be_u32(bytes, 0)?;
    if found != expected {
        return Err(ImageIoError::BadMagic {
            expected: format!("{expected:#010x}"),
            found: format!("{found:#010x}"),
        });
    }
    Ok(())
}

fn idx_payload(bytes: &[u8], header_len: usize, expected: usize) -> Result<&[u8]> {
    let payload = &bytes[header_len..];
    if payload.len() < expected {
        return Err(ImageIoError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(ImageIoError::TrailingBytes(payload.len() - expected));
    }
    Ok(payload)
}

/// Decodes a rank-3 unsigned-byte IDX tensor into row-major images.
pub fn read_idx_images(bytes: &[u8]) -> Result<Vec<Image>> {
    check_idx_magic(bytes, IDX_IMAGES_MAGIC)?;
    let n = read_be_u32(bytes, 4)? as usize;
    let rows = read_be_u32(bytes, 8)? as usize;
    let cols = read_be_u32(bytes, 12)? as usize;
    let per = rows
        .checked_mul(cols)
        .ok_or_else(|| ImageIoError::Header("image size overflows".into()))?;
    let total = per
        .checked_mul(n)
        .ok_or_else(|| ImageIoError::Header("payload size overflows".into()))?;
    if per == 0 && n > 0 {
        return Err(ImageIoError::Header(format!(
            "zero image size {rows}x{cols}"
        )));
    }
    let payload = idx_payload(bytes, 16, total)?;
    payload
        .chunks(per.max(1))
        .take(n)
        .map(|chunk| Ok(Image::from_u8(cols, rows, 1, chunk)?))
        .collect()
}

pub fn read_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_idx_magic(bytes, IDX_LABELS_MAGIC)?;
    let n = read_be_u32(bytes, 4)? as usize;
    Ok(idx_payload(bytes, 8, n)?.to_vec())
}

pub fn write_idx_images(images: &[Image]) -> Result<Vec<u8>> {
    let (rows, cols) = images.first().map_or((0, 0), |i| (i.height(), i.width()));
    if images
        .iter()
        .any(|i| i.height() != rows || i.width() != cols)
    {
        return Err(ImageIoError::MixedDimensions);
    }
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [
        IDX_IMAGES_MAGIC,
        images.len() as u32,
        rows as u32,
        cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        out.extend(quantize(img)?);
    }
    Ok(out)
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Equally sized single-channel images with digit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    images: Vec<Image>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(images: Vec<Image>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(ImageIoError::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
            return Err(ImageIoError::BadLabel { index, value });
        }
        if let Some(first) = images.first() {
            let dims = (first.width(), first.height(), first.channels());
            if images
                .iter()
                .any(|i| (i.width(), i.height(), i.channels()) != dims)
            {
                return Err(ImageIoError::MixedDimensions);
            }
        }
        Ok(LabeledDataset { images, labels })
    }

    pub fn from_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Self> {
        Self::new(read_idx_images(image_bytes)?, read_idx_labels(label_bytes)?)
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Image>, Vec<u8>) {
        (self.images, self.labels)
    }
}
