//! Labeled similarity matrices and the functional-similarity pipeline.
//!
//! Structural matrices come from [`crate::align`] and [`crate::patterns`];
//! functional matrices are cosine similarities between rows of a per-model
//! accuracy table ([`PerfTable`]). All of them share the CSV layout:
//!
//! ```text
//! ,A,B
//! A,1.000000,0.250000
//! B,0.250000,1.000000
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

/// Accuracy table bundled with the crate (28 rows: 14 models x 2 variants).
pub const ACCURACY_TABLE_CSV: &str = include_str!("../fixtures/accuracy_table.csv");

/// Domain-transfer task columns, source-target.
pub const TASKS: [&str; 12] = [
    "M-U", "M-S", "M-MM", "U-M", "U-S", "U-MM", "S-M", "S-U", "S-MM", "MM-M", "MM-U", "MM-S",
];

const SYMMETRY_TOL: f64 = 1e-9;
const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Error, Debug)]
pub enum SimMatError {
    #[error("matrix is not square: {rows} rows, {labels} labels")]
    NotSquare { rows: usize, labels: usize },

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("label mismatch between matrices")]
    LabelMismatch,

    #[error("need at least 2 entries, got {0}")]
    TooSmall(usize),

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty vector")]
    EmptyVector,

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("cosine undefined for {model:?}: all accuracies are zero")]
    ZeroRow { model: String },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    BadNumber {
        line: u64,
        column: usize,
        value: String,
    },

    #[error("line {line}, column {column}: accuracy {value} outside [0, 100]")]
    OutOfRange {
        line: u64,
        column: usize,
        value: f64,
    },

    #[error("model {model:?} has no {variant} row")]
    MissingVariant { model: String, variant: Variant },

    #[error("line {line}: duplicate {variant} row for model {model:?}")]
    DuplicateRow {
        line: u64,
        model: String,
        variant: Variant,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimMatError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Symmetric with unit diagonal.
    Similarity,
    /// Elementwise difference of two similarity matrices.
    Difference,
    /// Unnormalized alignment scores.
    RawScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
    kind: MatrixKind,
}

impl SimilarityMatrix {
    pub fn from_parts(
        labels: Vec<String>,
        values: Vec<Vec<f64>>,
        kind: MatrixKind,
    ) -> Result<Self> {
        if values.len() != labels.len() {
            return Err(SimMatError::NotSquare {
                rows: values.len(),
                labels: labels.len(),
            });
        }
        if let Some(row) = values.iter().find(|r| r.len() != labels.len()) {
            return Err(SimMatError::NotSquare {
                rows: row.len(),
                labels: labels.len(),
            });
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(SimMatError::DuplicateLabel(l.clone()));
            }
        }
        Ok(SimilarityMatrix {
            labels,
            values,
            kind,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Value for a pair of labels.
    pub fn lookup(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.values[self.index_of(a)?][self.index_of(b)?])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| (self.values[i][j] - self.values[j][i]).abs() <= tol))
    }

    /// Symmetric within 1e-9 and, for similarity matrices, unit diagonal within 1e-12.
    pub fn check_invariants(&self) -> bool {
        let diag_ok = match self.kind {
            MatrixKind::Similarity => {
                (0..self.len()).all(|i| (self.values[i][i] - 1.0).abs() <= DIAGONAL_TOL)
            }
            _ => true,
        };
        diag_ok && self.is_symmetric(SYMMETRY_TOL)
    }

    /// Off-diagonal upper-triangle entries in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| self.values[i][j])
            .collect()
    }

    /// Rows and columns permuted so that position `k` holds original index `order[k]`.
    pub fn reordered(&self, order: &[usize]) -> SimilarityMatrix {
        assert_eq!(order.len(), self.len(), "permutation length");
        SimilarityMatrix {
            labels: order.iter().map(|&i| self.labels[i].clone()).collect(),
            values: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.values[i][j]).collect())
                .collect(),
            kind: self.kind,
        }
    }

    /// Six decimals per cell; raw integer scores are written without decimals.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|&v| match self.kind {
                MatrixKind::RawScore if v.fract() == 0.0 => format!("{}", v as i64),
                _ => format!("{v:.6}"),
            }));
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 labels")
    }

    /// Parses the CSV layout written by [`SimilarityMatrix::to_csv_string`].
    ///
    /// The kind is inferred: unit diagonal means similarity, zero diagonal
    /// means difference, anything else is treated as raw scores.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            Some(r) => r?,
            None => {
                return Err(SimMatError::Parse {
                    line: 1,
                    message: "empty file".into(),
                })
            }
        };
        if header.get(0) != Some("") {
            return Err(SimMatError::Parse {
                line: 1,
                message: "first header cell must be empty".into(),
            });
        }
        let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let n = labels.len();
        let mut values = Vec::with_capacity(n);
        for (idx, record) in records.enumerate() {
            let record = record?;
            let line = record.position().map_or(idx as u64 + 2, |p| p.line());
            if record.len() != n + 1 {
                return Err(SimMatError::Parse {
                    line,
                    message: format!("expected {} fields, found {}", n + 1, record.len()),
                });
            }
            let row_label = &record[0];
            if labels.get(idx).map(String::as_str) != Some(row_label) {
                return Err(SimMatError::Parse {
                    line,
                    message: format!("row label {row_label:?} does not match header order"),
                });
            }
            let row = record
                .iter()
                .skip(1)
                .enumerate()
                .map(|(c, cell)| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| SimMatError::BadNumber {
                            line,
                            column: c + 2,
                            value: cell.to_string(),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            values.push(row);
        }
        if values.len() != n {
            return Err(SimMatError::Parse {
                line: 1,
                message: format!(
                    "header lists {} labels but file has {} rows",
                    n,
                    values.len()
                ),
            });
        }
        let kind = if (0..n).all(|i| (values[i][i] - 1.0).abs() <= 1e-6) {
            MatrixKind::Similarity
        } else if (0..n).all(|i| values[i][i].abs() <= 1e-6) {
            MatrixKind::Difference
        } else {
            MatrixKind::RawScore
        };
        SimilarityMatrix::from_parts(labels, values, kind)
    }
}

pub fn export_csv(m: &SimilarityMatrix, path: &Path) -> Result<()> {
    fs::write(path, m.to_csv_string())?;
    Ok(())
}

pub fn import_csv(path: &Path) -> Result<SimilarityMatrix> {
    SimilarityMatrix::from_csv_str(&fs::read_to_string(path)?)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(SimMatError::LengthMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(SimMatError::EmptyVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(SimMatError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Elementwise `a - b`.
pub fn difference_matrix(a: &SimilarityMatrix, b: &SimilarityMatrix) -> Result<SimilarityMatrix> {
    if a.labels != b.labels {
        return Err(SimMatError::LabelMismatch);
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect();
    SimilarityMatrix::from_parts(a.labels.clone(), values, MatrixKind::Difference)
}

/// Arithmetic mean of the `n(n-1)` off-diagonal entries.
pub fn mean_offdiagonal(m: &SimilarityMatrix) -> Result<f64> {
    let n = m.len();
    if n < 2 {
        return Err(SimMatError::TooSmall(n));
    }
    let sum: f64 = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m.values[i][j])
        .sum();
    Ok(sum / (n * (n - 1)) as f64)
}

/// Leaf order of average-linkage agglomerative clustering on `1 - similarity`.
///
/// At each step the closest pair of clusters merges; ties go to the pair whose
/// smallest original indices are lexicographically first. The merged cluster
/// lists the members of the lower-indexed cluster first.
pub fn cluster_order(m: &SimilarityMatrix) -> Vec<usize> {
    let n = m.len();
    let dist = |i: usize, j: usize| 1.0 - m.values[i][j];
    // Kept sorted by smallest member, which is always members[0]'s minimum.
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let total: f64 = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                    .map(|(i, j)| dist(i, j))
                    .sum();
                let d = total / (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let (_, a, b) = best.expect("at least two clusters");
        let tail = clusters.remove(b);
        clusters[a].extend(tail);
    }
    clusters.pop().unwrap_or_default()
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        // 1-based average rank of the tie group.
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(SimMatError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(SimMatError::TooSmall(x.len()));
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

/// Spearman correlation between the off-diagonal entries of two matrices.
pub fn rank_correlation(a: &SimilarityMatrix, b: &SimilarityMatrix) -> Result<f64> {
    if a.labels != b.labels {
        return Err(SimMatError::LabelMismatch);
    }
    spearman(&a.upper_triangle(), &b.upper_triangle())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Baseline,
    Neurn,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Baseline => "baseline",
            Variant::Neurn => "neurn",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "neurn" => Ok(Variant::Neurn),
            other => Err(format!(
                "unknown variant {other:?} (expected baseline or neurn)"
            )),
        }
    }
}

/// Which models enter a functional-similarity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelSelection {
    #[default]
    All,
    /// Drops models whose name ends in "(NAS)".
    ExcludeNas,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfRow {
    pub model: String,
    pub variant: Variant,
    pub accuracies: [f64; 12],
}

/// Model x task accuracy table with a baseline and a NeuRN row per model.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfTable {
    models: Vec<String>,
    rows: HashMap<(String, Variant), [f64; 12]>,
}

impl PerfTable {
    pub fn bundled() -> Self {
        Self::from_csv_str(ACCURACY_TABLE_CSV).expect("bundled table is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv_str(&fs::read_to_string(path)?)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            Some(r) => r?,
            None => {
                return Err(SimMatError::Parse {
                    line: 1,
                    message: "empty file".into(),
                })
            }
        };
        let expected: Vec<&str> = ["model", "variant"].into_iter().chain(TASKS).collect();
        let got: Vec<&str> = header.iter().map(str::trim).collect();
        if got != expected {
            return Err(SimMatError::Parse {
                line: 1,
                message: format!(
                    "expected header {}, found {}",
                    expected.join(","),
                    got.join(",")
                ),
            });
        }

        let mut rows = Vec::new();
        for (idx, record) in records.enumerate() {
            let record = record?;
            let line = record.position().map_or(idx as u64 + 2, |p| p.line());
            if record.len() != expected.len() {
                return Err(SimMatError::Parse {
                    line,
                    message: format!("expected {} fields, found {}", expected.len(), record.len()),
                });
            }
            let model = record[0].trim().to_string();
            if model.is_empty() {
                return Err(SimMatError::Parse {
                    line,
                    message: "empty model name".into(),
                });
            }
            let variant: Variant = record[1]
                .trim()
                .parse()
                .map_err(|message| SimMatError::Parse { line, message })?;
            let mut accuracies = [0.0; 12];
            for (c, acc) in accuracies.iter_mut().enumerate() {
                let cell = record[c + 2].trim();
                let column = c + 3;
                let v: f64 = cell.parse().map_err(|_| SimMatError::BadNumber {
                    line,
                    column,
                    value: cell.to_string(),
                })?;
                if !(0.0..=100.0).contains(&v) {
                    return Err(SimMatError::OutOfRange {
                        line,
                        column,
                        value: v,
                    });
                }
                *acc = v;
            }
            rows.push((
                line,
                PerfRow {
                    model,
                    variant,
                    accuracies,
                },
            ));
        }
        Self::from_rows(rows)
    }

    fn from_rows(rows: Vec<(u64, PerfRow)>) -> Result<Self> {
        let mut models = Vec::new();
        let mut map = HashMap::new();
        for (line, row) in rows {
            if !models.contains(&row.model) {
                models.push(row.model.clone());
            }
            if map
                .insert((row.model.clone(), row.variant), row.accuracies)
                .is_some()
            {
                return Err(SimMatError::DuplicateRow {
                    line,
                    model: row.model,
                    variant: row.variant,
                });
            }
        }
        for model in &models {
            for variant in [Variant::Baseline, Variant::Neurn] {
                if !map.contains_key(&(model.clone(), variant)) {
                    return Err(SimMatError::MissingVariant {
                        model: model.clone(),
                        variant,
                    });
                }
            }
        }
        Ok(PerfTable { models, rows: map })
    }

    /// Model names in file order.
    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn row(&self, model: &str, variant: Variant) -> Option<&[f64; 12]> {
        self.rows.get(&(model.to_string(), variant))
    }

    pub fn is_nas(model: &str) -> bool {
        model.trim_end().ends_with("(NAS)")
    }

    pub fn selected_models(&self, selection: ModelSelection) -> Vec<&str> {
        self.models
            .iter()
            .map(String::as_str)
            .filter(|m| selection == ModelSelection::All || !Self::is_nas(m))
            .collect()
    }
}

/// Pairwise cosine similarity between the accuracy rows of one variant.
pub fn functional_similarity(
    table: &PerfTable,
    variant: Variant,
    selection: ModelSelection,
) -> Result<SimilarityMatrix> {
    let models = table.selected_models(selection);
    let rows = models
        .iter()
        .map(|m| {
            let row = table
                .row(m, variant)
                .ok_or_else(|| SimMatError::MissingVariant {
                    model: m.to_string(),
                    variant,
                })?;
            if row.iter().all(|&v| v == 0.0) {
                return Err(SimMatError::ZeroRow {
                    model: m.to_string(),
                });
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in (i + 1)..n {
            let c = cosine(rows[i], rows[j])?;
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    SimilarityMatrix::from_parts(
        models.iter().map(|m| m.to_string()).collect(),
        values,
        MatrixKind::Similarity,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(labels: &[&str], values: Vec<Vec<f64>>) -> SimilarityMatrix {
        SimilarityMatrix::from_parts(
            labels.iter().map(|s| s.to_string()).collect(),
            values,
            MatrixKind::Similarity,
        )
        .unwrap()
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 1.0]),
            Err(SimMatError::ZeroVector)
        ));
        assert!(matches!(
            cosine(&[1.0], &[1.0, 1.0]),
            Err(SimMatError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn cosine_vgg19_vs_densenet121() {
        // Scalar arithmetic on the two printed baseline rows:
        // dot = 28748.27, |u|^2 = 31477.18, |v|^2 = 27060.57.
        let t = PerfTable::bundled();
        let c = cosine(
            t.row("VGG19", Variant::Baseline).unwrap(),
            t.row("DenseNet121", Variant::Baseline).unwrap(),
        )
        .unwrap();
        assert!(c > 0.9 && c < 1.0);
        assert!((c - 0.985_020_652_212_537_5).abs() < 1e-12, "{c}");
    }

    #[test]
    fn mean_offdiagonal_small_cases() {
        let ones = sim(&["a", "b", "c"], vec![vec![1.0; 3]; 3]);
        assert_eq!(mean_offdiagonal(&ones).unwrap(), 1.0);
        let m = sim(&["a", "b"], vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert_eq!(mean_offdiagonal(&m).unwrap(), 0.5);
        let one = sim(&["a"], vec![vec![1.0]]);
        assert!(matches!(
            mean_offdiagonal(&one),
            Err(SimMatError::TooSmall(1))
        ));
    }

    #[test]
    fn difference_properties() {
        let a = sim(&["a", "b"], vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let b = sim(&["a", "b"], vec![vec![1.0, 0.2], vec![0.2, 1.0]]);
        let zero = difference_matrix(&a, &a).unwrap();
        assert!(zero.values().iter().flatten().all(|&v| v == 0.0));
        let ab = difference_matrix(&a, &b).unwrap();
        let ba = difference_matrix(&b, &a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(ab.get(i, j), -ba.get(i, j));
            }
        }
        assert_eq!(ab.kind(), MatrixKind::Difference);
        let c = sim(&["a", "x"], vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert!(matches!(
            difference_matrix(&a, &c),
            Err(SimMatError::LabelMismatch)
        ));
    }

    #[test]
    fn two_identical_rows_give_unit_cosine() {
        let csv = format!(
            "model,variant,{}\nA,baseline,{r}\nA,neurn,{r}\nB,baseline,{r}\nB,neurn,{r}\n",
            TASKS.join(","),
            r = "10,20,30,40,50,60,70,80,90,95,5,1"
        );
        let t = PerfTable::from_csv_str(&csv).unwrap();
        let m = functional_similarity(&t, Variant::Baseline, ModelSelection::All).unwrap();
        assert!((m.get(0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_missing_variant_names_model() {
        let csv = format!(
            "model,variant,{}\nA,baseline,{r}\nA,neurn,{r}\nB,baseline,{r}\n",
            TASKS.join(","),
            r = "1,2,3,4,5,6,7,8,9,10,11,12"
        );
        let err = PerfTable::from_csv_str(&csv).unwrap_err();
        assert!(
            matches!(&err, SimMatError::MissingVariant { model, variant: Variant::Neurn } if model == "B")
        );
        assert!(err.to_string().contains("\"B\""));
    }

    #[test]
    fn table_cell_errors_have_coordinates() {
        let bad = format!(
            "model,variant,{}\nA,baseline,1,2,x,4,5,6,7,8,9,10,11,12\n",
            TASKS.join(",")
        );
        match PerfTable::from_csv_str(&bad).unwrap_err() {
            SimMatError::BadNumber {
                line,
                column,
                value,
            } => {
                assert_eq!((line, column, value.as_str()), (2, 5, "x"));
            }
            e => panic!("{e:?}"),
        }
        let oor = format!(
            "model,variant,{}\nA,baseline,1,2,3,4,5,6,7,8,9,10,11,120\n",
            TASKS.join(",")
        );
        assert!(matches!(
            PerfTable::from_csv_str(&oor).unwrap_err(),
            SimMatError::OutOfRange {
                line: 2,
                column: 14,
                ..
            }
        ));
        assert!(matches!(
            PerfTable::from_csv_str("model,variant,a\n").unwrap_err(),
            SimMatError::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn bundled_table_shape() {
        let t = PerfTable::bundled();
        assert_eq!(t.models().len(), 14);
        assert_eq!(t.selected_models(ModelSelection::ExcludeNas).len(), 12);
        assert!(PerfTable::is_nas("SPOS (NAS)"));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let m = sim(
            &["a", "b,c", "d"],
            vec![
                vec![1.0, 0.123_456_7, -0.5],
                vec![0.123_456_7, 1.0, 0.25],
                vec![-0.5, 0.25, 1.0],
            ],
        );
        let text = m.to_csv_string();
        assert!(text.starts_with(",a,\"b,c\",d\na,1.000000,0.123457,-0.500000\n"));
        let back = SimilarityMatrix::from_csv_str(&text).unwrap();
        assert_eq!(back.labels(), m.labels());
        assert_eq!(back.kind(), MatrixKind::Similarity);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - m.get(i, j)).abs() <= 1e-6);
            }
        }
        assert_eq!(back.to_csv_string(), text);

        let err = SimilarityMatrix::from_csv_str(",a,b,c\na,1,0\nb,0,1\n").unwrap_err();
        assert!(matches!(err, SimMatError::Parse { line: 2, .. }), "{err:?}");
        let err = SimilarityMatrix::from_csv_str(",a,b,c\na,1,0,0\nb,0,1,0\n").unwrap_err();
        assert!(matches!(err, SimMatError::Parse { line: 1, .. }), "{err:?}");
        let err = SimilarityMatrix::from_csv_str(",a,b\na,1,0\nb,zz,1\n").unwrap_err();
        assert!(
            matches!(
                err,
                SimMatError::BadNumber {
                    line: 3,
                    column: 2,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn cluster_order_block_matrix() {
        // {0, 2} and {1, 3} are perfect clusters.
        let m = sim(
            &["a", "b", "c", "d"],
            vec![
                vec![1.0, 0.1, 1.0, 0.1],
                vec![0.1, 1.0, 0.1, 1.0],
                vec![1.0, 0.1, 1.0, 0.1],
                vec![0.1, 1.0, 0.1, 1.0],
            ],
        );
        assert_eq!(cluster_order(&m), vec![0, 2, 1, 3]);
        let r = m.reordered(&cluster_order(&m));
        assert_eq!(r.labels(), &["a", "c", "b", "d"]);
        assert_eq!(r.get(0, 1), 1.0);
    }

    #[test]
    fn cluster_order_ties_keep_input_order() {
        let n = 5;
        let values = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.3 }).collect())
            .collect();
        let m = sim(&["a", "b", "c", "d", "e"], values);
        assert_eq!(cluster_order(&m), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn spearman_known_values() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // Ranks x = [1, 2.5, 2.5, 4], y = [1, 2, 3, 4] -> r = 4.5 / sqrt(4.5 * 5).
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r - 4.5 / (4.5f64 * 5.0).sqrt()).abs() < 1e-12, "{r}");
    }
}
