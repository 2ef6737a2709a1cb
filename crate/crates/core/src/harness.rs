//! Desk-scale domain-shift experiments.
//!
//! Synthetic 16x16 digits are rendered from a fixed bitmap font, a linear
//! softmax classifier is trained on a clean source domain, and accuracy is
//! measured on a held-out source split and on an intensity-shifted target
//! split. The experiment runs twice: on raw pixels (baseline) and on
//! NeuRN-transformed pixels.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neurn::{self, Image, NeurnConfig, NeurnError, Padding};

pub const SIDE: usize = 16;
pub const NUM_CLASSES: usize = 10;
pub const FEATURES: usize = SIDE * SIDE;
pub const NOISE_AMPLITUDE: f64 = 0.05;
pub const MAX_TRANSLATION: i32 = 2;

// Stream separators for seeds derived from the experiment seed.
const TEST_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const NOISE_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Error, Debug)]
pub enum HarnessError {
    #[error("need at least 10 samples, got {0}")]
    TooFewSamples(usize),

    #[error("invalid shift: {0}")]
    InvalidShift(String),

    #[error("shifted value {value} at image {image}, pixel {pixel} leaves [0, 1]")]
    ShiftOutOfRange {
        image: usize,
        pixel: usize,
        value: f64,
    },

    #[error("feature dimension mismatch: model expects {expected}, data has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{images} samples but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("empty training set")]
    EmptyData,

    #[error("invalid config at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Neurn(#[from] NeurnError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

// 5x7 glyphs, one string per row, '#' marks ink.
const FONT: [[&str; 7]; 10] = [
    [
        ".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###.",
    ],
    [
        "..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###.",
    ],
    [
        ".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####",
    ],
    [
        "#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###.",
    ],
    [
        "...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#.",
    ],
    [
        "#####", "#....", "####.", "....#", "....#", "#...#", ".###.",
    ],
    [
        "..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###.",
    ],
    [
        "#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#...",
    ],
    [
        ".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###.",
    ],
    [
        ".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##..",
    ],
];

fn glyph_mask(digit: usize, dx: i32, dy: i32) -> [bool; FEATURES] {
    let mut mask = [false; FEATURES];
    // 2x upscaled glyph is 10x14, centred at offset (3, 1).
    for (gy, row) in FONT[digit].iter().enumerate() {
        for (gx, ch) in row.bytes().enumerate() {
            if ch != b'#' {
                continue;
            }
            for sy in 0..2 {
                for sx in 0..2 {
                    let x = 3 + 2 * gx as i32 + sx + dx;
                    let y = 1 + 2 * gy as i32 + sy + dy;
                    if (0..SIDE as i32).contains(&x) && (0..SIDE as i32).contains(&y) {
                        mask[y as usize * SIDE + x as usize] = true;
                    }
                }
            }
        }
    }
    mask
}

/// Labeled synthetic digit images with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDigits {
    pub seed: u64,
    pub images: Vec<Image>,
    pub labels: Vec<u8>,
}

impl SyntheticDigits {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// Renders `n` digits. Labels cycle through the classes before shuffling, so
/// every class count is `n / 10` or `n / 10 + 1`. Ink pixels are `1 - u` and
/// background pixels `u`, with `u ~ U[0, 0.05]` per pixel.
pub fn gen_digits(seed: u64, n: usize) -> Result<SyntheticDigits> {
    if n < NUM_CLASSES {
        return Err(HarnessError::TooFewSamples(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = (0..n).map(|i| (i % NUM_CLASSES) as u8).collect();
    labels.shuffle(&mut rng);
    let images = labels
        .iter()
        .map(|&label| {
            let dx = rng.random_range(-MAX_TRANSLATION..=MAX_TRANSLATION);
            let dy = rng.random_range(-MAX_TRANSLATION..=MAX_TRANSLATION);
            let mask = glyph_mask(label as usize, dx, dy);
            let data = mask
                .iter()
                .map(|&ink| {
                    let u = rng.random_range(0.0..=NOISE_AMPLITUDE);
                    if ink {
                        1.0 - u
                    } else {
                        u
                    }
                })
                .collect();
            Image::new(SIDE, SIDE, 1, data).expect("fixed dimensions")
        })
        .collect();
    Ok(SyntheticDigits {
        seed,
        images,
        labels,
    })
}

/// Intensity change applied to a whole target domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainShift {
    /// `x -> a x + b`, with `a [0, 1] + b` inside `[0, 1]`.
    Affine { a: f64, b: f64 },
    /// `x -> 1 - x`.
    Invert,
    /// Adds seeded `U[-sigma_n, sigma_n]` noise; fails if a value leaves `[0, 1]`.
    Noise { sigma_n: f64 },
    /// Affine followed by noise.
    Composite { a: f64, b: f64, sigma_n: f64 },
    /// `x -> clamp(a x + b, 0, 1)`; not invariance-preserving.
    Clamped { a: f64, b: f64 },
}

impl DomainShift {
    pub fn identity() -> Self {
        DomainShift::Affine { a: 1.0, b: 0.0 }
    }

    fn check_affine(a: f64, b: f64) -> Result<()> {
        if !(a.is_finite() && b.is_finite()) || a <= 0.0 {
            return Err(HarnessError::InvalidShift(format!(
                "contrast a must be positive, got {a}"
            )));
        }
        if b < 0.0 || a + b > 1.0 {
            return Err(HarnessError::InvalidShift(format!(
                "a*[0,1]+b = [{b}, {}] leaves [0, 1]",
                a + b
            )));
        }
        Ok(())
    }

    fn check_noise(sigma_n: f64) -> Result<()> {
        if !(sigma_n.is_finite() && sigma_n >= 0.0) {
            return Err(HarnessError::InvalidShift(format!(
                "sigma_n must be >= 0, got {sigma_n}"
            )));
        }
        Ok(())
    }

    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Self::check_affine(a, b)?;
        Ok(DomainShift::Affine { a, b })
    }

    pub fn noise(sigma_n: f64) -> Result<Self> {
        Self::check_noise(sigma_n)?;
        Ok(DomainShift::Noise { sigma_n })
    }

    pub fn composite(a: f64, b: f64, sigma_n: f64) -> Result<Self> {
        Self::check_affine(a, b)?;
        Self::check_noise(sigma_n)?;
        Ok(DomainShift::Composite { a, b, sigma_n })
    }

    pub fn clamped(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a <= 0.0 {
            return Err(HarnessError::InvalidShift(format!(
                "contrast a must be positive, got {a}"
            )));
        }
        Ok(DomainShift::Clamped { a, b })
    }

    /// True for shifts under which NeuRN output is unchanged.
    pub fn is_affine(&self) -> bool {
        matches!(self, DomainShift::Affine { .. })
    }
}

/// Applies `shift` to every image; labels are carried over unchanged.
pub fn apply_shift(
    data: &SyntheticDigits,
    shift: DomainShift,
    noise_seed: u64,
) -> Result<SyntheticDigits> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut images = Vec::with_capacity(data.images.len());
    for (i, img) in data.images.iter().enumerate() {
        let shifted = match shift {
            DomainShift::Affine { a, b } => img.map(|x| a * x + b),
            DomainShift::Invert => img.map(|x| 1.0 - x),
            DomainShift::Clamped { a, b } => img.map(|x| (a * x + b).clamp(0.0, 1.0)),
            DomainShift::Noise { sigma_n } => add_noise(img, sigma_n, &mut rng),
            DomainShift::Composite { a, b, sigma_n } => {
                add_noise(&img.map(|x| a * x + b), sigma_n, &mut rng)
            }
        };
        if let Some((pixel, &value)) = shifted
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(HarnessError::ShiftOutOfRange {
                image: i,
                pixel,
                value,
            });
        }
        images.push(shifted);
    }
    Ok(SyntheticDigits {
        seed: data.seed,
        images,
        labels: data.labels.clone(),
    })
}

fn add_noise(img: &Image, sigma_n: f64, rng: &mut ChaCha8Rng) -> Image {
    if sigma_n == 0.0 {
        return img.clone();
    }
    let data = img
        .data()
        .iter()
        .map(|&x| x + rng.random_range(-sigma_n..=sigma_n))
        .collect();
    Image::new(img.width(), img.height(), img.channels(), data).expect("same dimensions")
}

/// Stacks images into an `n x features` matrix.
pub fn feature_matrix(images: &[Image]) -> Array2<f64> {
    let d = images.first().map_or(0, |i| i.data().len());
    let mut x = Array2::zeros((images.len(), d));
    for (mut row, img) in x.rows_mut().into_iter().zip(images) {
        row.assign(&Array1::from(img.data().to_vec()));
    }
    x
}

/// Multinomial logistic regression: `logits = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyClassifier {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl TinyClassifier {
    pub fn zeros(features: usize) -> Self {
        TinyClassifier {
            weights: Array2::zeros((NUM_CLASSES, features)),
            bias: Array1::zeros(NUM_CLASSES),
        }
    }

    /// Weights and bias drawn from `U[-scale, scale]`.
    pub fn random(features: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            if scale == 0.0 {
                0.0
            } else {
                rng.random_range(-scale..=scale)
            }
        };
        let weights = Array2::from_shape_simple_fn((NUM_CLASSES, features), &mut draw);
        let bias = Array1::from_shape_simple_fn(NUM_CLASSES, &mut draw);
        TinyClassifier { weights, bias }
    }

    pub fn features(&self) -> usize {
        self.weights.ncols()
    }

    fn check(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.features() {
            return Err(HarnessError::DimensionMismatch {
                expected: self.features(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn logits(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(x)?;
        Ok(x.dot(&self.weights.t()) + &self.bias)
    }

    /// Row-wise softmax of the logits.
    pub fn probabilities(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let mut p = self.logits(x)?;
        for mut row in p.rows_mut() {
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            row.mapv_inplace(|v| (v - m).exp());
            let s = row.sum();
            row /= s;
        }
        Ok(p)
    }

    /// Argmax of the logits; ties go to the lowest class id.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>> {
        let logits = self.logits(x)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best as u8
            })
            .collect())
    }

    /// Mean softmax cross-entropy.
    pub fn loss(&self, x: &Array2<f64>, labels: &[u8]) -> Result<f64> {
        check_labels(x, labels)?;
        let logits = self.logits(x)?;
        let total: f64 = logits
            .rows()
            .into_iter()
            .zip(labels)
            .map(|(row, &y)| {
                let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                lse - row[y as usize]
            })
            .sum();
        Ok(total / labels.len() as f64)
    }

    /// Gradient of [`TinyClassifier::loss`] with respect to weights and bias.
    pub fn gradient(&self, x: &Array2<f64>, labels: &[u8]) -> Result<(Array2<f64>, Array1<f64>)> {
        check_labels(x, labels)?;
        let mut residual = self.probabilities(x)?;
        for (mut row, &y) in residual.rows_mut().into_iter().zip(labels) {
            row[y as usize] -= 1.0;
        }
        let n = labels.len() as f64;
        let grad_w = residual.t().dot(x) / n;
        let grad_b = residual.sum_axis(Axis(0)) / n;
        Ok((grad_w, grad_b))
    }
}

fn check_labels(x: &Array2<f64>, labels: &[u8]) -> Result<()> {
    if labels.is_empty() {
        return Err(HarnessError::EmptyData);
    }
    if x.nrows() != labels.len() {
        return Err(HarnessError::CountMismatch {
            images: x.nrows(),
            labels: labels.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: TinyClassifier,
    /// Loss before the first step and after every epoch.
    pub losses: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Initial weights are drawn from `U[-INIT_SCALE, INIT_SCALE]`.
pub const INIT_SCALE: f64 = 0.01;

/// Full-batch gradient descent on the mean cross-entropy.
pub fn train(
    x: &Array2<f64>,
    labels: &[u8],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<TrainOutcome> {
    check_labels(x, labels)?;
    let mut warnings = Vec::new();
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        warnings.push(format!("training data contains a single class ({first})"));
    }
    let mut model = TinyClassifier::random(x.ncols(), INIT_SCALE, seed);
    let mut losses = Vec::with_capacity(epochs + 1);
    losses.push(model.loss(x, labels)?);
    for _ in 0..epochs {
        let (gw, gb) = model.gradient(x, labels)?;
        model.weights.scaled_add(-lr, &gw);
        model.bias.scaled_add(-lr, &gb);
        losses.push(model.loss(x, labels)?);
    }
    Ok(TrainOutcome {
        model,
        losses,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
    #[serde(skip)]
    pub predictions: Vec<u8>,
}

pub fn evaluate(model: &TinyClassifier, x: &Array2<f64>, labels: &[u8]) -> Result<Evaluation> {
    check_labels(x, labels)?;
    let predictions = model.predict(x)?;
    let mut confusion = [[0; NUM_CLASSES]; NUM_CLASSES];
    let mut correct = 0;
    for (&p, &y) in predictions.iter().zip(labels) {
        confusion[y as usize][p as usize] += 1;
        if p == y {
            correct += 1;
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / labels.len() as f64,
        confusion,
        predictions,
    })
}

/// Shift section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub kind: ShiftKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_n: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftKind {
    Affine,
    Invert,
    Noise,
    Composite,
    Clamped,
}

impl ShiftSpec {
    pub fn to_shift(&self) -> Result<DomainShift> {
        let field = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| HarnessError::Config {
                path: format!("shift.{name}"),
                message: format!("required for kind {:?}", self.kind),
            })
        };
        let at = |path: &str, e: HarnessError| HarnessError::Config {
            path: format!("shift.{path}"),
            message: e.to_string(),
        };
        match self.kind {
            ShiftKind::Affine => DomainShift::affine(field(self.a, "a")?, field(self.b, "b")?)
                .map_err(|e| at("a", e)),
            ShiftKind::Invert => Ok(DomainShift::Invert),
            ShiftKind::Noise => {
                DomainShift::noise(field(self.sigma_n, "sigma_n")?).map_err(|e| at("sigma_n", e))
            }
            ShiftKind::Composite => DomainShift::composite(
                field(self.a, "a")?,
                field(self.b, "b")?,
                field(self.sigma_n, "sigma_n")?,
            )
            .map_err(|e| at("a", e)),
            ShiftKind::Clamped => DomainShift::clamped(field(self.a, "a")?, field(self.b, "b")?)
                .map_err(|e| at("a", e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub k: usize,
    pub shift: ShiftSpec,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            n_train: 2000,
            n_test: 2000,
            k: 3,
            shift: ShiftSpec {
                kind: ShiftKind::Affine,
                a: Some(0.3),
                b: Some(0.35),
                sigma_n: None,
            },
            epochs: 200,
            lr: 0.1,
        }
    }
}

impl ExperimentConfig {
    /// Parses a JSON config; errors carry the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Config {
                path: e.path().to_string(),
                message: e.into_inner().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| HarnessError::Config {
            path: path.into(),
            message,
        };
        if self.n_train < NUM_CLASSES {
            return Err(bad(
                "n_train",
                format!("must be at least 10, got {}", self.n_train),
            ));
        }
        if self.n_test < NUM_CLASSES {
            return Err(bad(
                "n_test",
                format!("must be at least 10, got {}", self.n_test),
            ));
        }
        NeurnConfig::new(self.k, Padding::Replicate).map_err(|e| bad("k", e.to_string()))?;
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(bad("lr", format!("must be positive, got {}", self.lr)));
        }
        self.shift.to_shift()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub arm: String,
    pub source: Evaluation,
    pub target: Evaluation,
    pub final_loss: f64,
    /// Fraction of test samples predicted identically before and after the shift.
    pub prediction_agreement: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub shift: DomainShift,
    pub baseline: ArmReport,
    pub neurn: ArmReport,
    /// Not serialized so that reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `arm,source_acc,target_acc` with six decimals.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("arm,source_acc,target_acc\n");
        for arm in [&self.baseline, &self.neurn] {
            out.push_str(&format!(
                "{},{:.6},{:.6}\n",
                arm.arm, arm.source.accuracy, arm.target.accuracy
            ));
        }
        out
    }
}

fn run_arm(
    name: &str,
    train_x: &Array2<f64>,
    train_y: &[u8],
    source_x: &Array2<f64>,
    target_x: &Array2<f64>,
    test_y: &[u8],
    cfg: &ExperimentConfig,
) -> Result<ArmReport> {
    let outcome = train(train_x, train_y, cfg.epochs, cfg.lr, cfg.seed)?;
    let source = evaluate(&outcome.model, source_x, test_y)?;
    let target = evaluate(&outcome.model, target_x, test_y)?;
    let agree = source
        .predictions
        .iter()
        .zip(&target.predictions)
        .filter(|(a, b)| a == b)
        .count();
    Ok(ArmReport {
        arm: name.to_string(),
        prediction_agreement: agree as f64 / test_y.len() as f64,
        final_loss: *outcome.losses.last().expect("at least the initial loss"),
        warnings: outcome.warnings,
        source,
        target,
    })
}

/// Prepared data for both arms of an experiment.
pub struct ExperimentData {
    pub train: SyntheticDigits,
    pub test: SyntheticDigits,
    pub target: SyntheticDigits,
}

pub fn experiment_data(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    let shift = cfg.shift.to_shift()?;
    let train = gen_digits(cfg.seed, cfg.n_train)?;
    let test = gen_digits(cfg.seed ^ TEST_STREAM, cfg.n_test)?;
    let target = apply_shift(&test, shift, cfg.seed ^ NOISE_STREAM)?;
    Ok(ExperimentData {
        train,
        test,
        target,
    })
}

/// Trains and evaluates the baseline and NeuRN arms on identical data.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    cfg.validate()?;
    let shift = cfg.shift.to_shift()?;
    let data = experiment_data(cfg)?;
    let ncfg = NeurnConfig::new(cfg.k, Padding::Replicate)?;

    let (baseline, neurn_arm) = rayon::join(
        || {
            run_arm(
                "baseline",
                &feature_matrix(&data.train.images),
                &data.train.labels,
                &feature_matrix(&data.test.images),
                &feature_matrix(&data.target.images),
                &data.test.labels,
                cfg,
            )
        },
        || -> Result<ArmReport> {
            let train_x = feature_matrix(&neurn::transform_batch(&data.train.images, &ncfg)?);
            let source_x = feature_matrix(&neurn::transform_batch(&data.test.images, &ncfg)?);
            let target_x = feature_matrix(&neurn::transform_batch(&data.target.images, &ncfg)?);
            run_arm(
                "neurn",
                &train_x,
                &data.train.labels,
                &source_x,
                &target_x,
                &data.test.labels,
                cfg,
            )
        },
    );

    Ok(ExperimentReport {
        config: cfg.clone(),
        shift,
        baseline: baseline?,
        neurn: neurn_arm?,
        wall_time: started.elapsed(),
    })
}
