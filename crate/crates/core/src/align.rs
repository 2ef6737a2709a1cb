//! Global alignment of layer sequences.
//!
//! The scoring matrix follows the zero-boundary recurrence
//!
//! ```text
//! M[i][j] = 0                                  if i == 0 or j == 0
//!         = max(M[i-1][j-1] + s(a_i, b_j),
//!               M[i-1][j]   + gap,
//!               M[i][j-1]   + gap)             otherwise
//! ```
//!
//! Unlike textbook Needleman-Wunsch the first row and column are not seeded
//! with cumulative gap penalties, so leading gaps are free. Trailing gaps are
//! still charged because the score is read from the bottom-right cell.

use rayon::prelude::*;
use thiserror::Error;

use crate::archspec::ArchSpec;
use crate::simmat::{MatrixKind, SimilarityMatrix};

#[derive(Error, Debug, PartialEq, Eq)]
pub enum AlignError {
    #[error("sequence {0} is empty")]
    EmptySequence(char),

    #[error("invalid score parameters: {0}")]
    InvalidParams(String),

    #[error("need at least 2 architectures, got {0}")]
    TooFewSpecs(usize),

    #[error("duplicate architecture name {0:?}")]
    DuplicateName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreParams {
    match_score: i64,
    mismatch: i64,
    gap: i64,
}

impl ScoreParams {
    /// Requires `match_score > 0`, `mismatch < match_score` and `gap < 0`.
    pub fn new(match_score: i64, mismatch: i64, gap: i64) -> Result<Self, AlignError> {
        if match_score <= 0 {
            return Err(AlignError::InvalidParams(format!(
                "match score must be positive, got {match_score}"
            )));
        }
        if mismatch >= match_score {
            return Err(AlignError::InvalidParams(format!(
                "mismatch ({mismatch}) must be below match ({match_score})"
            )));
        }
        if gap >= 0 {
            return Err(AlignError::InvalidParams(format!(
                "gap penalty must be negative, got {gap}"
            )));
        }
        Ok(ScoreParams {
            match_score,
            mismatch,
            gap,
        })
    }

    pub fn match_score(&self) -> i64 {
        self.match_score
    }

    pub fn mismatch(&self) -> i64 {
        self.mismatch
    }

    pub fn gap(&self) -> i64 {
        self.gap
    }

    #[inline]
    pub fn substitution<T: PartialEq>(&self, x: &T, y: &T) -> i64 {
        if x == y {
            self.match_score
        } else {
            self.mismatch
        }
    }
}

impl Default for ScoreParams {
    /// match 4, mismatch -2, gap -1.
    fn default() -> Self {
        ScoreParams {
            match_score: 4,
            mismatch: -2,
            gap: -1,
        }
    }
}

/// Which neighbour a cell's score was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Boundary cell (row or column 0).
    Start,
    /// From `(i-1, j-1)`: match or mismatch.
    Diagonal,
    /// From `(i-1, j)`: symbol of the first sequence aligned to a gap.
    Up,
    /// From `(i, j-1)`: symbol of the second sequence aligned to a gap.
    Left,
}

/// Filled `(l+1) x (m+1)` scoring matrix with back-pointers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpMatrix {
    rows: usize,
    cols: usize,
    scores: Vec<i64>,
    moves: Vec<Move>,
    params: ScoreParams,
    // Substitution score per interior cell, kept so traceback can replay it.
    steps: Vec<i64>,
}

impl DpMatrix {
    /// Number of rows, `l + 1`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns, `m + 1`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn score(&self, i: usize, j: usize) -> i64 {
        self.scores[i * self.cols + j]
    }

    pub fn back_pointer(&self, i: usize, j: usize) -> Move {
        self.moves[i * self.cols + j]
    }

    /// Bottom-right cell.
    pub fn raw_score(&self) -> i64 {
        self.score(self.rows - 1, self.cols - 1)
    }

    pub fn params(&self) -> ScoreParams {
        self.params
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.scores[i * self.cols..(i + 1) * self.cols]
    }

    /// Score contributed by taking `mv` into cell `(i, j)`.
    pub fn step_score(&self, i: usize, j: usize, mv: Move) -> i64 {
        match mv {
            Move::Start => 0,
            Move::Diagonal => self.steps[i * self.cols + j],
            Move::Up | Move::Left => self.params.gap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub i: usize,
    pub j: usize,
    pub mv: Move,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub raw_score: i64,
    pub similarity: f64,
    pub path: Vec<PathStep>,
}

fn check_nonempty<T>(a: &[T], b: &[T]) -> Result<(), AlignError> {
    if a.is_empty() {
        return Err(AlignError::EmptySequence('a'));
    }
    if b.is_empty() {
        return Err(AlignError::EmptySequence('b'));
    }
    Ok(())
}

/// Fills the full scoring matrix with back-pointers.
///
/// Ties between candidates resolve diagonal first, then up, then left.
pub fn nw_matrix<T: PartialEq>(
    a: &[T],
    b: &[T],
    params: ScoreParams,
) -> Result<DpMatrix, AlignError> {
    check_nonempty(a, b)?;
    let rows = a.len() + 1;
    let cols = b.len() + 1;
    let mut scores = vec![0i64; rows * cols];
    let mut moves = vec![Move::Start; rows * cols];
    let mut steps = vec![0i64; rows * cols];

    for i in 1..rows {
        for j in 1..cols {
            let s = params.substitution(&a[i - 1], &b[j - 1]);
            let diag = scores[(i - 1) * cols + j - 1] + s;
            let up = scores[(i - 1) * cols + j] + params.gap;
            let left = scores[i * cols + j - 1] + params.gap;
            let (best, mv) = if diag >= up && diag >= left {
                (diag, Move::Diagonal)
            } else if up >= left {
                (up, Move::Up)
            } else {
                (left, Move::Left)
            };
            scores[i * cols + j] = best;
            moves[i * cols + j] = mv;
            steps[i * cols + j] = s;
        }
    }

    Ok(DpMatrix {
        rows,
        cols,
        scores,
        moves,
        params,
        steps,
    })
}

/// Bottom-right score of [`nw_matrix`] using two rolling rows.
pub fn nw_score<T: PartialEq>(a: &[T], b: &[T], params: ScoreParams) -> Result<i64, AlignError> {
    check_nonempty(a, b)?;
    let mut prev = vec![0i64; b.len() + 1];
    let mut cur = vec![0i64; b.len() + 1];
    for x in a {
        cur[0] = 0;
        for (j, y) in b.iter().enumerate() {
            let diag = prev[j] + params.substitution(x, y);
            let up = prev[j + 1] + params.gap;
            let left = cur[j] + params.gap;
            cur[j + 1] = diag.max(up).max(left);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[b.len()])
}

/// Follows back-pointers from the bottom-right cell until row or column 0.
pub fn traceback(matrix: &DpMatrix) -> Vec<PathStep> {
    let mut path = Vec::with_capacity(matrix.rows + matrix.cols);
    let (mut i, mut j) = (matrix.rows - 1, matrix.cols - 1);
    while i > 0 && j > 0 {
        let mv = matrix.back_pointer(i, j);
        path.push(PathStep { i, j, mv });
        match mv {
            Move::Diagonal => {
                i -= 1;
                j -= 1;
            }
            Move::Up => i -= 1,
            Move::Left => j -= 1,
            Move::Start => unreachable!("interior cell without back-pointer"),
        }
    }
    path
}

/// Raw score normalized by `match * min(l, m)`; 1.0 for identical sequences.
pub fn similarity_index<T: PartialEq>(
    a: &[T],
    b: &[T],
    params: ScoreParams,
) -> Result<f64, AlignError> {
    let raw = nw_score(a, b, params)?;
    Ok(normalize(raw, a.len(), b.len(), params))
}

fn normalize(raw: i64, l: usize, m: usize, params: ScoreParams) -> f64 {
    raw as f64 / (params.match_score * l.min(m) as i64) as f64
}

pub fn align<T: PartialEq>(
    a: &[T],
    b: &[T],
    params: ScoreParams,
) -> Result<AlignmentResult, AlignError> {
    let matrix = nw_matrix(a, b, params)?;
    let raw_score = matrix.raw_score();
    Ok(AlignmentResult {
        raw_score,
        similarity: normalize(raw_score, a.len(), b.len(), params),
        path: traceback(&matrix),
    })
}

fn check_specs(specs: &[ArchSpec]) -> Result<(), AlignError> {
    if specs.len() < 2 {
        return Err(AlignError::TooFewSpecs(specs.len()));
    }
    let mut seen = std::collections::HashSet::new();
    for s in specs {
        if !seen.insert(s.name()) {
            return Err(AlignError::DuplicateName(s.name().to_string()));
        }
    }
    Ok(())
}

fn pairwise_with(
    specs: &[ArchSpec],
    kind: MatrixKind,
    f: impl Fn(&ArchSpec, &ArchSpec) -> f64 + Sync,
) -> Result<SimilarityMatrix, AlignError> {
    check_specs(specs)?;
    let n = specs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| f(&specs[i], &specs[j]))
        .collect();
    let mut grid = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        grid[i][j] = v;
        grid[j][i] = v;
    }
    let labels = specs.iter().map(|s| s.name().to_string()).collect();
    Ok(SimilarityMatrix::from_parts(labels, grid, kind).expect("square by construction"))
}

/// Normalized similarity index for every pair of architectures.
pub fn pairwise_matrix(
    specs: &[ArchSpec],
    params: ScoreParams,
) -> Result<SimilarityMatrix, AlignError> {
    pairwise_with(specs, MatrixKind::Similarity, |a, b| {
        similarity_index(a.layers(), b.layers(), params).expect("specs are non-empty")
    })
}

/// Unnormalized bottom-right scores for every pair.
pub fn pairwise_raw_matrix(
    specs: &[ArchSpec],
    params: ScoreParams,
) -> Result<SimilarityMatrix, AlignError> {
    pairwise_with(specs, MatrixKind::RawScore, |a, b| {
        nw_score(a.layers(), b.layers(), params).expect("specs are non-empty") as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn params_validation() {
        assert!(ScoreParams::new(0, -2, -1).is_err());
        assert!(ScoreParams::new(4, 4, -1).is_err());
        assert!(ScoreParams::new(4, -2, 0).is_err());
        assert_eq!(ScoreParams::new(4, -2, -1).unwrap(), ScoreParams::default());
    }

    #[test]
    fn worked_example_matrix() {
        // Cells evaluated by hand from the recurrence:
        // M[1][1] = 0+4, M[1][2] = max(0-2, 0-1, 4-1) = 3,
        // M[2][1] = max(0-2, 4-1, 0-1) = 3, M[2][2] = max(4-2, 3-1, 3-1) = 2.
        let m = nw_matrix(&chars("CR"), &chars("CM"), ScoreParams::default()).unwrap();
        assert_eq!(m.row(0), &[0, 0, 0]);
        assert_eq!(m.row(1), &[0, 4, 3]);
        assert_eq!(m.row(2), &[0, 3, 2]);
        assert_eq!(m.raw_score(), 2);
        assert_eq!(
            nw_score(&chars("CR"), &chars("CM"), ScoreParams::default()).unwrap(),
            2
        );
    }

    #[test]
    fn worked_example_traceback() {
        let m = nw_matrix(&chars("CR"), &chars("CM"), ScoreParams::default()).unwrap();
        let path = traceback(&m);
        assert_eq!(
            path,
            vec![
                PathStep {
                    i: 2,
                    j: 2,
                    mv: Move::Diagonal
                },
                PathStep {
                    i: 1,
                    j: 1,
                    mv: Move::Diagonal
                },
            ]
        );
        let sim = similarity_index(&chars("CR"), &chars("CM"), ScoreParams::default()).unwrap();
        assert_eq!(sim, 0.25);
    }

    #[test]
    fn identical_sequences() {
        let s = chars("CCRM");
        let r = align(&s, &s, ScoreParams::default()).unwrap();
        assert_eq!(r.raw_score, 16);
        assert_eq!(r.similarity, 1.0);
        assert_eq!(r.path.len(), 4);
        assert!(r.path.iter().all(|p| p.mv == Move::Diagonal));
    }

    #[test]
    fn empty_input_rejected() {
        let a = chars("CCRMM");
        let b: Vec<char> = Vec::new();
        assert_eq!(
            nw_matrix(&a, &b, ScoreParams::default()).unwrap_err(),
            AlignError::EmptySequence('b')
        );
        assert_eq!(
            nw_score(&b, &a, ScoreParams::default()).unwrap_err(),
            AlignError::EmptySequence('a')
        );
    }

    #[test]
    fn leading_gaps_are_free() {
        // "XXXXCR" vs "CR": zero boundary lets the short sequence align to the tail.
        let s = nw_score(&chars("XXXXCR"), &chars("CR"), ScoreParams::default()).unwrap();
        assert_eq!(s, 8);
        // Trailing gaps are charged.
        let s = nw_score(&chars("CRXXXX"), &chars("CR"), ScoreParams::default()).unwrap();
        assert_eq!(s, 4);
    }

    #[test]
    fn pairwise_rejects_bad_input() {
        use crate::archspec::{ArchSpec, LayerAlphabet};
        let a = LayerAlphabet::parse(r#"{"Conv2D":"C"}"#).unwrap();
        let s = ArchSpec::from_names("x", &["Conv2D"], &a).unwrap();
        assert_eq!(
            pairwise_matrix(std::slice::from_ref(&s), ScoreParams::default()).unwrap_err(),
            AlignError::TooFewSpecs(1)
        );
        assert_eq!(
            pairwise_matrix(&[s.clone(), s], ScoreParams::default()).unwrap_err(),
            AlignError::DuplicateName("x".into())
        );
    }

    #[test]
    fn pairwise_identical_specs() {
        use crate::archspec::{ArchSpec, LayerAlphabet};
        let a = LayerAlphabet::parse(r#"{"Conv2D":"C","ReLU":"R"}"#).unwrap();
        let x = ArchSpec::from_names("x", &["Conv2D", "ReLU"], &a).unwrap();
        let y = ArchSpec::from_names("y", &["Conv2D", "ReLU"], &a).unwrap();
        let m = pairwise_matrix(&[x, y], ScoreParams::default()).unwrap();
        assert_eq!(m.values(), &[vec![1.0, 1.0], vec![1.0, 1.0]]);
    }
}
