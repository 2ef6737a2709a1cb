//! Neural Response Normalization.
//!
//! Every pixel is replaced by the population standard deviation of the
//! `k x k` window centred on it (stride 1, so one window per pixel), and the
//! resulting field is divided by its maximum. Because `sigma(a*x + b) =
//! a*sigma(x)` for `a > 0`, the output is invariant to affine intensity
//! changes of the input.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Error, Debug, PartialEq)]
pub enum NeurnError {
    #[error("image dimensions must be positive, got {width}x{height}x{channels}")]
    ZeroDimension {
        width: usize,
        height: usize,
        channels: usize,
    },

    #[error("expected {expected} pixel values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite pixel value at index {0}")]
    NonFinite(usize),

    #[error("k must be odd ≥ 3, got {0}")]
    InvalidK(usize),

    #[error("k = {k} is too large for a {width}x{height} image (max {max})")]
    KTooLarge {
        k: usize,
        width: usize,
        height: usize,
        max: usize,
    },

    #[error("image {index}: {source}")]
    InBatch {
        index: usize,
        #[source]
        source: Box<NeurnError>,
    },
}

pub type Result<T> = std::result::Result<T, NeurnError>;

/// `width x height x channels` grid of intensities, stored row-major with
/// channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(NeurnError::ZeroDimension {
                width,
                height,
                channels,
            });
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(NeurnError::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(NeurnError::NonFinite(i));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// 8-bit samples mapped to `[0, 1]` by `v / 255`.
    pub fn from_u8(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Applies `f` to every value. Panics if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        assert!(
            data.iter().all(|v| v.is_finite()),
            "mapped image has non-finite values"
        );
        Image { data, ..*self }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// One channel as a contiguous `height x width` plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    fn from_planes(width: usize, height: usize, planes: &[Vec<f64>]) -> Image {
        let channels = planes.len();
        let mut data = vec![0.0; width * height * channels];
        for (c, plane) in planes.iter().enumerate() {
            for (i, &v) in plane.iter().enumerate() {
                data[i * channels + c] = v;
            }
        }
        Image {
            width,
            height,
            channels,
            data,
        }
    }
}

/// Border handling for windows that extend past the image edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    /// Repeat the edge pixel: `aaa|abcd|ddd`.
    #[default]
    Replicate,
    /// Mirror without repeating the edge: `dcb|abcd|cba`.
    Reflect,
}

/// Which maximum the sigma field is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormScope {
    #[default]
    PerChannel,
    /// One maximum over all channels.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeurnConfig {
    k: usize,
    padding: Padding,
    scope: NormScope,
}

impl NeurnConfig {
    pub fn new(k: usize, padding: Padding) -> Result<Self> {
        if k < 3 || k.is_multiple_of(2) {
            return Err(NeurnError::InvalidK(k));
        }
        Ok(NeurnConfig {
            k,
            padding,
            scope: NormScope::PerChannel,
        })
    }

    pub fn with_scope(mut self, scope: NormScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn scope(&self) -> NormScope {
        self.scope
    }

    pub fn radius(&self) -> usize {
        self.k / 2
    }

    /// Windows must fit inside a single reflection: `k <= 2 * min(W, H) - 1`.
    pub fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        let max = 2 * width.min(height) - 1;
        if self.k > max {
            return Err(NeurnError::KTooLarge {
                k: self.k,
                width,
                height,
                max,
            });
        }
        Ok(())
    }
}

impl Default for NeurnConfig {
    fn default() -> Self {
        NeurnConfig {
            k: 3,
            padding: Padding::Replicate,
            scope: NormScope::PerChannel,
        }
    }
}

/// Per-pixel, per-channel window mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StatField {
    pub mean: Image,
    pub std: Image,
}

/// Copies a plane into a buffer with `r` pixels of padding on every side.
fn pad_plane(plane: &[f64], width: usize, height: usize, r: usize, padding: Padding) -> Vec<f64> {
    let pw = width + 2 * r;
    let ph = height + 2 * r;
    let src = |p: usize, n: usize| -> usize {
        // p is the padded coordinate; p - r the logical one, possibly negative.
        let logical = p as isize - r as isize;
        let n = n as isize;
        let idx = match padding {
            Padding::Replicate => logical.clamp(0, n - 1),
            Padding::Reflect => {
                if logical < 0 {
                    -logical
                } else if logical >= n {
                    2 * (n - 1) - logical
                } else {
                    logical
                }
            }
        };
        idx as usize
    };
    let mut out = vec![0.0; pw * ph];
    for py in 0..ph {
        let sy = src(py, height);
        for px in 0..pw {
            out[py * pw + px] = plane[sy * width + src(px, width)];
        }
    }
    out
}

/// Mean and population standard deviation of every window of one plane.
fn plane_stats(
    plane: &[f64],
    width: usize,
    height: usize,
    cfg: &NeurnConfig,
) -> (Vec<f64>, Vec<f64>) {
    let k = cfg.k;
    let r = cfg.radius();
    let padded = pad_plane(plane, width, height, r, cfg.padding);
    let pw = width + 2 * r;
    let area = (k * k) as f64;
    let mut mean = vec![0.0; width * height];
    let mut std = vec![0.0; width * height];
    mean.par_chunks_mut(width)
        .zip(std.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, (mrow, srow))| {
            let mut window = Vec::with_capacity(k * k);
            for x in 0..width {
                window.clear();
                for wy in 0..k {
                    let at = (y + wy) * pw + x;
                    window.extend_from_slice(&padded[at..at + k]);
                }
                // Sorted, min-shifted values make the result a function of the
                // window's multiset alone; a constant window gives exactly 0.
                window.sort_unstable_by(f64::total_cmp);
                let lo = window[0];
                window.iter_mut().for_each(|v| *v -= lo);
                let shifted_mean = window.iter().sum::<f64>() / area;
                let sq: f64 = window
                    .iter()
                    .map(|v| (v - shifted_mean) * (v - shifted_mean))
                    .sum();
                mrow[x] = lo + shifted_mean;
                srow[x] = (sq / area).sqrt();
            }
        });
    (mean, std)
}

pub fn patch_stats(img: &Image, cfg: &NeurnConfig) -> Result<StatField> {
    cfg.check_dims(img.width, img.height)?;
    let (means, stds): (Vec<_>, Vec<_>) = (0..img.channels)
        .map(|c| plane_stats(&img.plane(c), img.width, img.height, cfg))
        .unzip();
    Ok(StatField {
        mean: Image::from_planes(img.width, img.height, &means),
        std: Image::from_planes(img.width, img.height, &stds),
    })
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

fn normalize_plane(plane: &mut [f64], c: f64) {
    if c == 0.0 {
        plane.iter_mut().for_each(|v| *v = 0.0);
    } else {
        plane.iter_mut().for_each(|v| *v /= c);
    }
}

/// Sigma field divided by its maximum; an all-zero field stays all zero.
pub fn transform(img: &Image, cfg: &NeurnConfig) -> Result<Image> {
    cfg.check_dims(img.width, img.height)?;
    let mut planes: Vec<Vec<f64>> = (0..img.channels)
        .map(|c| plane_stats(&img.plane(c), img.width, img.height, cfg).1)
        .collect();
    match cfg.scope {
        NormScope::PerChannel => {
            for plane in &mut planes {
                let c = max_of(plane);
                normalize_plane(plane, c);
            }
        }
        NormScope::Global => {
            let c = planes.iter().map(|p| max_of(p)).fold(0.0, f64::max);
            for plane in &mut planes {
                normalize_plane(plane, c);
            }
        }
    }
    Ok(Image::from_planes(img.width, img.height, &planes))
}

/// [`transform`] over a collection, preserving order.
pub fn transform_batch(imgs: &[Image], cfg: &NeurnConfig) -> Result<Vec<Image>> {
    imgs.par_iter()
        .enumerate()
        .map(|(index, img)| {
            transform(img, cfg).map_err(|e| NeurnError::InBatch {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert_eq!(
            NeurnConfig::new(4, Padding::Replicate).unwrap_err(),
            NeurnError::InvalidK(4)
        );
        assert_eq!(
            NeurnConfig::new(1, Padding::Replicate).unwrap_err(),
            NeurnError::InvalidK(1)
        );
        assert_eq!(
            NeurnError::InvalidK(4).to_string(),
            "k must be odd ≥ 3, got 4"
        );
        let cfg = NeurnConfig::new(7, Padding::Reflect).unwrap();
        assert!(cfg.check_dims(4, 4).is_ok());
        assert!(matches!(
            cfg.check_dims(3, 8),
            Err(NeurnError::KTooLarge { max: 5, .. })
        ));
    }

    #[test]
    fn image_validation() {
        assert!(matches!(
            Image::new(2, 2, 1, vec![0.0; 3]),
            Err(NeurnError::LengthMismatch { .. })
        ));
        assert!(matches!(
            Image::new(1, 1, 1, vec![f64::NAN]),
            Err(NeurnError::NonFinite(0))
        ));
        assert!(matches!(
            Image::new(0, 1, 1, vec![]),
            Err(NeurnError::ZeroDimension { .. })
        ));
    }

    #[test]
    fn padding_layouts() {
        let plane = [1.0, 2.0, 3.0, 4.0].repeat(3);
        assert_eq!(
            pad_plane(&plane, 4, 3, 2, Padding::Replicate)[2 * 8..3 * 8],
            [1.0, 1.0, 1.0, 2.0, 3.0, 4.0, 4.0, 4.0]
        );
        assert_eq!(
            pad_plane(&plane, 4, 3, 2, Padding::Reflect)[2 * 8..3 * 8],
            [3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]
        );
    }

    #[test]
    fn constant_image() {
        for k in [3, 5] {
            let img = Image::filled(5, 6, 2, 0.5).unwrap();
            let cfg = NeurnConfig::new(k, Padding::Replicate).unwrap();
            let stats = patch_stats(&img, &cfg).unwrap();
            assert!(stats.mean.data().iter().all(|&v| v == 0.5));
            assert!(stats.std.data().iter().all(|&v| v == 0.0));
            assert!(transform(&img, &cfg)
                .unwrap()
                .data()
                .iter()
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn centre_spike() {
        // Under replicate padding every 3x3 window of this image holds one 1
        // and eight 0s: mu = 1/9, sigma^2 = (8/9)^2/9 + 8 (1/9)^2/9 = 8/81.
        let mut data = vec![0.0; 9];
        data[4] = 1.0;
        let img = Image::new(3, 3, 1, data).unwrap();
        let cfg = NeurnConfig::default();
        let stats = patch_stats(&img, &cfg).unwrap();
        let expected = 2.0 * 2f64.sqrt() / 9.0;
        for &s in stats.std.data() {
            assert!((s - expected).abs() < 1e-15, "{s}");
        }
        assert!((expected - 0.314270).abs() < 1e-6);
        let out = transform(&img, &cfg).unwrap();
        assert!(out.data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn global_scope_uses_one_maximum() {
        // Channel 0 has twice the contrast of channel 1.
        let mut data = vec![0.0; 2 * 9];
        data[4 * 2] = 1.0;
        data[4 * 2 + 1] = 0.5;
        let img = Image::new(3, 3, 2, data).unwrap();
        let cfg = NeurnConfig::default().with_scope(NormScope::Global);
        let out = transform(&img, &cfg).unwrap();
        assert!((out.get(0, 0, 0) - 1.0).abs() < 1e-15);
        assert!((out.get(0, 0, 1) - 0.5).abs() < 1e-15);
        let per = transform(&img, &NeurnConfig::default()).unwrap();
        assert!((per.get(0, 0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn batch_reports_index() {
        let ok = Image::filled(5, 5, 1, 0.2).unwrap();
        let small = Image::filled(1, 1, 1, 0.2).unwrap();
        let err = transform_batch(&[ok.clone(), small], &NeurnConfig::default()).unwrap_err();
        assert!(matches!(err, NeurnError::InBatch { index: 1, .. }));
        let out = transform_batch(std::slice::from_ref(&ok), &NeurnConfig::default()).unwrap();
        assert_eq!(out, vec![transform(&ok, &NeurnConfig::default()).unwrap()]);
    }
}
