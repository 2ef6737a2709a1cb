//! Layer-combination patterns: contiguous runs of layer kinds shared by
//! architectures.
//!
//! For a pair of models with `n = min(len_a, len_b)`, the patterns considered
//! are the distinct contiguous subsequences with length in `[min_len, n - 1]`.
//! Each distinct pattern counts once per model regardless of how often it
//! repeats. The pair score is the weight of the shared patterns divided by the
//! smaller of the two self-weights, so identical models score 1.
//!
//! Distinct-substring weights are computed with a suffix automaton, which
//! keeps long models (hundreds of layers) linear in the sequence length.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::archspec::{ArchSpec, LayerAlphabet};
use crate::simmat::{MatrixKind, SimilarityMatrix};

#[derive(Error, Debug, PartialEq, Eq)]
pub enum PatternError {
    #[error("minimum pattern length must be at least 2, got {0}")]
    MinLenTooSmall(usize),

    #[error("architecture {name:?} has {len} layers; at least {required} are needed")]
    TooShort {
        name: String,
        len: usize,
        required: usize,
    },

    #[error("k must be positive")]
    ZeroK,

    #[error("need at least 2 architectures, got {0}")]
    TooFewSpecs(usize),

    #[error("duplicate architecture name {0:?}")]
    DuplicateName(String),
}

/// How a shared pattern contributes to the pair score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Each pattern weighs its length.
    #[default]
    Length,
    /// Each pattern weighs 1.
    Uniform,
}

impl Weighting {
    fn weight(self, len: usize) -> u64 {
        match self {
            Weighting::Length => len as u64,
            Weighting::Uniform => 1,
        }
    }

    /// Total weight of one pattern of every length in `lo..=hi`.
    fn range_weight(self, lo: usize, hi: usize) -> u64 {
        if lo > hi {
            return 0;
        }
        let (lo, hi) = (lo as u64, hi as u64);
        match self {
            Weighting::Length => (lo + hi) * (hi - lo + 1) / 2,
            Weighting::Uniform => hi - lo + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternConfig {
    min_len: usize,
    weighting: Weighting,
}

impl PatternConfig {
    pub fn new(min_len: usize, weighting: Weighting) -> Result<Self, PatternError> {
        if min_len < 2 {
            return Err(PatternError::MinLenTooSmall(min_len));
        }
        Ok(PatternConfig { min_len, weighting })
    }

    pub fn min_len(&self) -> usize {
        self.min_len
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    /// Longest pattern considered for a pair: one less than the shorter model.
    pub fn max_len_for(&self, len_a: usize, len_b: usize) -> usize {
        len_a.min(len_b).saturating_sub(1)
    }
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig {
            min_len: 2,
            weighting: Weighting::Length,
        }
    }
}

/// Distinct contiguous patterns of one sequence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatternSet<T: Ord> {
    patterns: BTreeSet<Vec<T>>,
}

impl<T: Ord + Clone> PatternSet<T> {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn contains(&self, pattern: &[T]) -> bool {
        self.patterns.contains(pattern)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<T>> {
        self.patterns.iter()
    }

    pub fn weight(&self, weighting: Weighting) -> u64 {
        self.patterns
            .iter()
            .map(|p| weighting.weight(p.len()))
            .sum()
    }

    pub fn intersection(&self, other: &PatternSet<T>) -> PatternSet<T> {
        PatternSet {
            patterns: self
                .patterns
                .intersection(&other.patterns)
                .cloned()
                .collect(),
        }
    }
}

/// All distinct windows of `seq` with length in `min_len..=max_len`.
///
/// A sequence shorter than `min_len` yields an empty set.
pub fn enumerate_ngrams<T: Ord + Clone>(
    seq: &[T],
    min_len: usize,
    max_len: usize,
) -> PatternSet<T> {
    let mut patterns = BTreeSet::new();
    for len in min_len.max(1)..=max_len.min(seq.len()) {
        for w in seq.windows(len) {
            patterns.insert(w.to_vec());
        }
    }
    PatternSet { patterns }
}

struct State<T> {
    len: usize,
    link: Option<usize>,
    next: BTreeMap<T, usize>,
    // End index (inclusive) of the first occurrence of this state's strings.
    first_end: usize,
}

/// Suffix automaton of a single sequence.
struct SuffixAutomaton<T> {
    states: Vec<State<T>>,
}

impl<T: Ord + Copy> SuffixAutomaton<T> {
    fn new(seq: &[T]) -> Self {
        let mut sam = SuffixAutomaton {
            states: vec![State {
                len: 0,
                link: None,
                next: BTreeMap::new(),
                first_end: 0,
            }],
        };
        let mut last = 0;
        for (pos, &c) in seq.iter().enumerate() {
            last = sam.extend(last, c, pos);
        }
        sam
    }

    fn extend(&mut self, last: usize, c: T, pos: usize) -> usize {
        let cur = self.states.len();
        self.states.push(State {
            len: self.states[last].len + 1,
            link: None,
            next: BTreeMap::new(),
            first_end: pos,
        });
        let mut p = Some(last);
        while let Some(pi) = p {
            if self.states[pi].next.contains_key(&c) {
                break;
            }
            self.states[pi].next.insert(c, cur);
            p = self.states[pi].link;
        }
        match p {
            None => self.states[cur].link = Some(0),
            Some(pi) => {
                let q = self.states[pi].next[&c];
                if self.states[pi].len + 1 == self.states[q].len {
                    self.states[cur].link = Some(q);
                } else {
                    let clone = self.states.len();
                    self.states.push(State {
                        len: self.states[pi].len + 1,
                        link: self.states[q].link,
                        next: self.states[q].next.clone(),
                        first_end: self.states[q].first_end,
                    });
                    let mut p = Some(pi);
                    while let Some(pi) = p {
                        if self.states[pi].next.get(&c) != Some(&q) {
                            break;
                        }
                        self.states[pi].next.insert(c, clone);
                        p = self.states[pi].link;
                    }
                    self.states[q].link = Some(clone);
                    self.states[cur].link = Some(clone);
                }
            }
        }
        cur
    }

    /// Length range `(link.len, len]` of the strings in each non-root state.
    fn ranges(&self) -> impl Iterator<Item = (usize, usize, &State<T>)> {
        self.states.iter().skip(1).map(move |s| {
            let shortest = self.states[s.link.expect("non-root has link")].len + 1;
            (shortest, s.len, s)
        })
    }

    /// For each end index of `seq`, the longest suffix of `seq[..=e]` that
    /// occurs in the automaton's text.
    fn longest_matches(&self, seq: &[T]) -> Vec<usize> {
        let mut v = 0;
        let mut len = 0;
        seq.iter()
            .map(|c| {
                while v != 0 && !self.states[v].next.contains_key(c) {
                    v = self.states[v].link.expect("non-root has link");
                    len = self.states[v].len;
                }
                match self.states[v].next.get(c) {
                    Some(&t) => {
                        v = t;
                        len += 1;
                    }
                    None => {
                        v = 0;
                        len = 0;
                    }
                }
                len
            })
            .collect()
    }

    /// Weight of the distinct substrings with length in `min_len..=max_len`.
    fn self_weight(&self, min_len: usize, max_len: usize, weighting: Weighting) -> u64 {
        self.ranges()
            .map(|(lo, hi, _)| weighting.range_weight(lo.max(min_len), hi.min(max_len)))
            .sum()
    }
}

/// Weight of distinct patterns present in both sequences, lengths in `min_len..=max_len`.
fn common_weight<T: Ord + Copy>(
    a: &SuffixAutomaton<T>,
    b_seq: &[T],
    b: &SuffixAutomaton<T>,
    min_len: usize,
    max_len: usize,
    weighting: Weighting,
) -> u64 {
    let matches = a.longest_matches(b_seq);
    b.ranges()
        .map(|(lo, hi, s)| {
            let hi = hi.min(matches[s.first_end]).min(max_len);
            weighting.range_weight(lo.max(min_len), hi)
        })
        .sum()
}

/// Shared-pattern weight over the smaller self-weight, for raw sequences.
///
/// Both sequences must be at least `min_len + 1` long.
pub fn sequence_similarity<T: Ord + Copy>(a: &[T], b: &[T], cfg: PatternConfig) -> Option<f64> {
    let required = cfg.min_len + 1;
    if a.len() < required || b.len() < required {
        return None;
    }
    let max_len = cfg.max_len_for(a.len(), b.len());
    let sam_a = SuffixAutomaton::new(a);
    let sam_b = SuffixAutomaton::new(b);
    let common = common_weight(&sam_a, b, &sam_b, cfg.min_len, max_len, cfg.weighting);
    let wa = sam_a.self_weight(cfg.min_len, max_len, cfg.weighting);
    let wb = sam_b.self_weight(cfg.min_len, max_len, cfg.weighting);
    Some(common as f64 / wa.min(wb) as f64)
}

/// Weight of the distinct patterns shared by two sequences, lengths in `min_len..=max_len`.
pub fn shared_weight<T: Ord + Copy>(
    a: &[T],
    b: &[T],
    min_len: usize,
    max_len: usize,
    weighting: Weighting,
) -> u64 {
    let sam_a = SuffixAutomaton::new(a);
    let sam_b = SuffixAutomaton::new(b);
    common_weight(&sam_a, b, &sam_b, min_len, max_len, weighting)
}

fn check_length(spec: &ArchSpec, cfg: PatternConfig) -> Result<(), PatternError> {
    let required = cfg.min_len + 1;
    if spec.len() < required {
        return Err(PatternError::TooShort {
            name: spec.name().to_string(),
            len: spec.len(),
            required,
        });
    }
    Ok(())
}

pub fn pattern_similarity(
    a: &ArchSpec,
    b: &ArchSpec,
    cfg: PatternConfig,
) -> Result<f64, PatternError> {
    check_length(a, cfg)?;
    check_length(b, cfg)?;
    Ok(sequence_similarity(a.layers(), b.layers(), cfg).expect("lengths checked"))
}

fn check_specs(specs: &[ArchSpec]) -> Result<(), PatternError> {
    if specs.len() < 2 {
        return Err(PatternError::TooFewSpecs(specs.len()));
    }
    let mut seen = HashSet::new();
    for s in specs {
        if !seen.insert(s.name()) {
            return Err(PatternError::DuplicateName(s.name().to_string()));
        }
    }
    Ok(())
}

/// Pairwise [`pattern_similarity`] over a collection.
pub fn pattern_matrix(
    specs: &[ArchSpec],
    cfg: PatternConfig,
) -> Result<SimilarityMatrix, PatternError> {
    check_specs(specs)?;
    for s in specs {
        check_length(s, cfg)?;
    }
    let n = specs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| pattern_similarity(&specs[i], &specs[j], cfg).expect("lengths checked"))
        .collect();
    let mut grid = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        grid[i][j] = v;
        grid[j][i] = v;
    }
    let labels = specs.iter().map(|s| s.name().to_string()).collect();
    Ok(
        SimilarityMatrix::from_parts(labels, grid, MatrixKind::Similarity)
            .expect("square by construction"),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonPattern {
    pub pattern: Vec<char>,
    /// Containing models, in input order.
    pub models: Vec<String>,
}

/// The `k` patterns found in the most models.
///
/// Ranking: number of containing models (descending), then pattern length
/// (descending), then symbol order. Patterns shorter than `min_len` are
/// ignored; there is no upper length bound.
pub fn top_common_patterns(
    specs: &[ArchSpec],
    k: usize,
    min_len: usize,
) -> Result<Vec<CommonPattern>, PatternError> {
    if k == 0 {
        return Err(PatternError::ZeroK);
    }
    if min_len < 2 {
        return Err(PatternError::MinLenTooSmall(min_len));
    }
    check_specs(specs)?;

    let mut counts: HashMap<&[char], usize> = HashMap::new();
    for spec in specs {
        let seq = spec.layers();
        let mut seen: HashSet<&[char]> = HashSet::new();
        for len in min_len..=seq.len() {
            for w in seq.windows(len) {
                if seen.insert(w) {
                    *counts.entry(w).or_insert(0) += 1;
                }
            }
        }
    }

    let mut ranked: Vec<(&[char], usize)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|(pa, ca), (pb, cb)| {
        cb.cmp(ca).then(pb.len().cmp(&pa.len())).then(pa.cmp(pb))
    });
    ranked.truncate(k);

    Ok(ranked
        .into_iter()
        .map(|(pattern, _)| CommonPattern {
            pattern: pattern.to_vec(),
            models: specs
                .iter()
                .filter(|s| contains_run(s.layers(), pattern))
                .map(|s| s.name().to_string())
                .collect(),
        })
        .collect())
}

pub fn contains_run<T: PartialEq>(seq: &[T], pattern: &[T]) -> bool {
    pattern.is_empty() || seq.windows(pattern.len()).any(|w| w == pattern)
}

/// CSV with columns `pattern,model_count,models`; patterns are layer names
/// joined by `+`, models are separated by `;`.
pub fn top_patterns_csv(patterns: &[CommonPattern], alphabet: &LayerAlphabet) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["pattern", "model_count", "models"])
        .expect("in-memory write");
    for p in patterns {
        let names: Vec<&str> = p
            .pattern
            .iter()
            .map(|&c| {
                alphabet
                    .name_of(c)
                    .expect("pattern drawn from validated specs")
            })
            .collect();
        w.write_record([
            names.join("+"),
            p.models.len().to_string(),
            p.models.join(";"),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn alphabet() -> LayerAlphabet {
        LayerAlphabet::parse(
            r#"{"Conv2D":"C","MaxPool":"M","ReLU":"R","Dense":"X","Pad":"P","Q":"Q"}"#,
        )
        .unwrap()
    }

    fn spec(name: &str, codes: &str) -> ArchSpec {
        ArchSpec::decode(name, codes, &alphabet()).unwrap()
    }

    #[test]
    fn ngram_examples() {
        let s = enumerate_ngrams(&chars("CCM"), 2, 2);
        assert_eq!(s.len(), 2);
        assert!(s.contains(&chars("CC")) && s.contains(&chars("CM")));
        let s = enumerate_ngrams(&chars("CC"), 2, 2);
        assert_eq!(s.iter().cloned().collect::<Vec<_>>(), vec![chars("CC")]);
        assert!(enumerate_ngrams(&chars("C"), 2, 3).is_empty());
    }

    #[test]
    fn worked_pair_example() {
        // a-grams {CC, CM}, b-grams {CM, MC}; shared {CM} weighs 2; self weights 4.
        let a = spec("a", "CCM");
        let b = spec("b", "CMC");
        let s = pattern_similarity(&a, &b, PatternConfig::default()).unwrap();
        assert_eq!(s, 0.5);
    }

    #[test]
    fn identical_and_disjoint() {
        let a = spec("a", "CCMRCM");
        let b = spec("b", "XPQXPQ");
        assert_eq!(
            pattern_similarity(&a, &a, PatternConfig::default()).unwrap(),
            1.0
        );
        assert_eq!(
            pattern_similarity(&a, &b, PatternConfig::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn too_short_is_named() {
        let a = spec("short", "CM");
        let b = spec("b", "CMC");
        let err = pattern_similarity(&b, &a, PatternConfig::default()).unwrap_err();
        assert_eq!(
            err,
            PatternError::TooShort {
                name: "short".into(),
                len: 2,
                required: 3
            }
        );
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            PatternConfig::new(1, Weighting::Length).unwrap_err(),
            PatternError::MinLenTooSmall(1)
        );
        assert_eq!(PatternConfig::default().max_len_for(7, 4), 3);
    }

    #[test]
    fn uniform_weighting_counts_patterns() {
        // a-grams {CC, CM}, b-grams {CM, MC}; one shared out of two.
        let cfg = PatternConfig::new(2, Weighting::Uniform).unwrap();
        assert_eq!(
            sequence_similarity(&chars("CCM"), &chars("CMC"), cfg),
            Some(0.5)
        );
        // "CCMC" vs "CMCC": max_len 3; a {CC,CM,MC,CCM,CMC}, b {CM,MC,CC,CMC,MCC};
        // shared {CC,CM,MC,CMC}: uniform 4/5, length-weighted 9/12.
        assert_eq!(
            sequence_similarity(&chars("CCMC"), &chars("CMCC"), cfg),
            Some(0.8)
        );
        assert_eq!(
            sequence_similarity(&chars("CCMC"), &chars("CMCC"), PatternConfig::default()),
            Some(0.75)
        );
    }

    #[test]
    fn matrix_identical_and_disjoint() {
        let specs = [spec("a", "CCMR"), spec("b", "CCMR"), spec("c", "XPQX")];
        let m = pattern_matrix(&specs, PatternConfig::default()).unwrap();
        assert_eq!(
            m.values(),
            &[
                vec![1.0, 1.0, 0.0],
                vec![1.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
    }

    #[test]
    fn top_patterns_example() {
        let specs = [spec("m1", "CCM"), spec("m2", "CCR"), spec("m3", "CCX")];
        let top = top_common_patterns(&specs, 1, 2).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].pattern, chars("CC"));
        assert_eq!(top[0].models, vec!["m1", "m2", "m3"]);

        let all = top_common_patterns(&specs, 1000, 2).unwrap();
        // CC, CM, CCM, CR, CCR, CX, CCX
        assert_eq!(all.len(), 7);
        assert_eq!(all[1].pattern, chars("CCM"));
        assert_eq!(
            top_common_patterns(&specs, 0, 2).unwrap_err(),
            PatternError::ZeroK
        );
    }

    #[test]
    fn top_patterns_csv_layout() {
        let specs = [spec("m1", "CCM"), spec("m2", "CCR")];
        let top = top_common_patterns(&specs, 1, 2).unwrap();
        let csv = top_patterns_csv(&top, &alphabet());
        assert_eq!(csv, "pattern,model_count,models\nConv2D+Conv2D,2,m1;m2\n");
    }
}
