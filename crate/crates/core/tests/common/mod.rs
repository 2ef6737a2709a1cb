//! Naive reference implementations used as test oracles. They share no code
//! with the library beyond its plain data types.
#![allow(dead_code)]

use std::collections::HashSet;

use neurn_kit::neurn::{Image, Padding};
use neurn_kit::patterns::Weighting;
use rand::Rng;

/// Direct recursive evaluation of the alignment recurrence, no memoization.
pub fn naive_nw<T: PartialEq>(a: &[T], b: &[T], m: i64, mm: i64, g: i64) -> i64 {
    fn f<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, m: i64, mm: i64, g: i64) -> i64 {
        if i == 0 || j == 0 {
            return 0;
        }
        let s = if a[i - 1] == b[j - 1] { m } else { mm };
        let diag = f(a, b, i - 1, j - 1, m, mm, g) + s;
        let up = f(a, b, i - 1, j, m, mm, g) + g;
        let left = f(a, b, i, j - 1, m, mm, g) + g;
        diag.max(up).max(left)
    }
    f(a, b, a.len(), b.len(), m, mm, g)
}

pub fn ngram_set<T: Clone + Eq + std::hash::Hash>(
    s: &[T],
    lo: usize,
    hi: usize,
) -> HashSet<Vec<T>> {
    let mut out = HashSet::new();
    for len in lo..=hi.min(s.len()) {
        for w in s.windows(len) {
            out.insert(w.to_vec());
        }
    }
    out
}

fn set_weight<T>(set: &HashSet<Vec<T>>, weighting: Weighting) -> u64 {
    set.iter()
        .map(|p| match weighting {
            Weighting::Length => p.len() as u64,
            Weighting::Uniform => 1,
        })
        .sum()
}

/// Shared-pattern score by explicit enumeration of every substring.
pub fn naive_pattern_similarity<T: Clone + Eq + std::hash::Hash>(
    a: &[T],
    b: &[T],
    min_len: usize,
    weighting: Weighting,
) -> Option<f64> {
    if a.len() <= min_len || b.len() <= min_len {
        return None;
    }
    let max_len = a.len().min(b.len()) - 1;
    let sa = ngram_set(a, min_len, max_len);
    let sb = ngram_set(b, min_len, max_len);
    let common: HashSet<Vec<T>> = sa.intersection(&sb).cloned().collect();
    let wc = set_weight(&common, weighting);
    let wa = set_weight(&sa, weighting);
    let wb = set_weight(&sb, weighting);
    Some(wc as f64 / wa.min(wb) as f64)
}

fn border(i: isize, n: usize, padding: Padding) -> usize {
    let n = n as isize;
    let j = match padding {
        Padding::Replicate => i.max(0).min(n - 1),
        Padding::Reflect => {
            if i < 0 {
                -i
            } else if i >= n {
                2 * n - 2 - i
            } else {
                i
            }
        }
    };
    j as usize
}

/// Per-window two-pass population sigma, then division by the channel maximum.
pub fn naive_neurn(img: &Image, k: usize, padding: Padding) -> Vec<f64> {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let r = (k / 2) as isize;
    let mut out = vec![0.0; w * h * ch];
    for c in 0..ch {
        let mut sig = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut vals = Vec::with_capacity(k * k);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = border(x as isize + dx, w, padding);
                        let sy = border(y as isize + dy, h, padding);
                        vals.push(img.get(sx, sy, c));
                    }
                }
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                sig[y * w + x] = var.sqrt();
            }
        }
        let max = sig.iter().cloned().fold(0.0, f64::max);
        for (i, s) in sig.iter().enumerate() {
            out[i * ch + c] = if max == 0.0 { 0.0 } else { s / max };
        }
    }
    out
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize, ch: usize) -> Image {
    let data = (0..w * h * ch)
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    Image::new(w, h, ch, data).unwrap()
}

pub fn random_seq(
    rng: &mut impl Rng,
    max_len: usize,
    alphabet: &[char],
    min_len: usize,
) -> Vec<char> {
    let len = rng.random_range(min_len..=max_len);
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
        .collect()
}

pub fn fixture_dir(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}
