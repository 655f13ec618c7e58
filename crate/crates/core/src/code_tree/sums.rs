use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::tree::CodeTreeRealization;
use super::{Result, TreeError};
use crate::sampling::stream_rng;
use crate::singular::{log_phi_from_logs, SingularSpectrum};

/// Largest number of level-`k` words enumerated exactly.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Below this many words per prefix chunk, enumeration stays on one thread.
const PARALLEL_PREFIXES: u128 = 256;

/// Number of words of length `k` in the realized tree (`1` for `k = 0`).
pub fn word_count(tree: &CodeTreeRealization, k: usize) -> u128 {
    let k = k.min(tree.depth());
    let mut ways: Vec<u128> = vec![1];
    let mut total = 1u128;
    for level in 0..k {
        let nodes = &tree.levels()[level];
        total = nodes
            .iter()
            .zip(&ways)
            .map(|(n, &w)| w.saturating_mul(n.family.len() as u128))
            .fold(0u128, u128::saturating_add);
        if level + 1 < k {
            let mut next = vec![0u128; tree.levels()[level + 1].len()];
            for (n, &w) in nodes.iter().zip(&ways) {
                for &c in &n.children {
                    next[c] = next[c].saturating_add(w);
                }
            }
            ways = next;
        }
    }
    total
}

fn check_level(tree: &CodeTreeRealization, k: usize, cap: u128) -> Result<()> {
    if k > tree.depth() {
        return Err(TreeError::LevelTooDeep {
            level: k,
            depth: tree.depth(),
        });
    }
    let count = word_count(tree, k);
    if count > cap {
        return Err(TreeError::EnumerationCap { level: k, count, cap });
    }
    Ok(())
}

/// A partially walked word: its symbols, node index at the next level, and composition.
struct Cursor {
    word: Vec<usize>,
    node: usize,
    linear: DMatrix<f64>,
    point: DVector<f64>,
}

impl Cursor {
    fn root(d: usize) -> Self {
        Cursor {
            word: Vec::new(),
            node: 0,
            linear: DMatrix::identity(d, d),
            point: DVector::zeros(d),
        }
    }

    fn children<'a>(&'a self, tree: &'a CodeTreeRealization) -> impl Iterator<Item = Cursor> + 'a {
        let level = self.word.len();
        let node = &tree.levels()[level][self.node];
        node.family.maps().iter().enumerate().map(move |(i, map)| {
            let mut word = self.word.clone();
            word.push(i);
            Cursor {
                word,
                node: node.children.get(i).copied().unwrap_or(0),
                linear: &self.linear * map.linear(),
                point: &self.point + &self.linear * map.translation(),
            }
        })
    }
}

fn descend<T, F>(tree: &CodeTreeRealization, k: usize, cur: Cursor, acc: T, f: &F) -> T
where
    F: Fn(T, &[usize], &DMatrix<f64>, &DVector<f64>) -> T,
{
    if cur.word.len() == k {
        return f(acc, &cur.word, &cur.linear, &cur.point);
    }
    cur.children(tree).fold(acc, |acc, child| descend(tree, k, child, acc, f))
}

/// Fold `f` over every level-`k` word in lexicographic order.
///
/// Work is split over word prefixes; each prefix folds from `init` on its own
/// and the partial results are merged left to right with `combine`, so the
/// result does not depend on the number of threads.
pub fn fold_words<T, F, C>(tree: &CodeTreeRealization, k: usize, cap: u128, init: T, f: F, combine: C) -> Result<T>
where
    T: Clone + Send + Sync,
    F: Fn(T, &[usize], &DMatrix<f64>, &DVector<f64>) -> T + Sync,
    C: Fn(T, T) -> T,
{
    check_level(tree, k, cap)?;
    let mut prefixes = vec![Cursor::root(tree.dim())];
    let mut depth = 0;
    while depth < k && (prefixes.len() as u128) < PARALLEL_PREFIXES {
        prefixes = prefixes.iter().flat_map(|c| c.children(tree)).collect();
        depth += 1;
    }
    let parts: Vec<T> = prefixes
        .into_par_iter()
        .map(|c| descend(tree, k, c, init.clone(), &f))
        .collect();
    Ok(parts.into_iter().reduce(&combine).unwrap_or(init))
}

/// `f` applied to every level-`k` word, in lexicographic order.
pub fn map_words<T, F>(tree: &CodeTreeRealization, k: usize, cap: u128, f: F) -> Result<Vec<T>>
where
    T: Clone + Send + Sync,
    F: Fn(&[usize], &DMatrix<f64>, &DVector<f64>) -> T + Sync,
{
    fold_words(
        tree,
        k,
        cap,
        Vec::new(),
        |mut acc, w, lin, pt| {
            acc.push(f(w, lin, pt));
            acc
        },
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    )
}

/// `S(k, s) = Σ Φ^s(T_𝐢)` over all level-`k` words.
pub fn partition_sum(tree: &CodeTreeRealization, k: usize, s: f64) -> Result<f64> {
    fold_words(
        tree,
        k,
        DEFAULT_ENUMERATION_CAP,
        0.0,
        |acc, _, lin, _| acc + SingularSpectrum::of_unchecked(lin).phi(s),
        |a, b| a + b,
    )
}

/// Log singular values of every level-`k` composition, kept so that
/// `log S(k, s)` can be evaluated for many `s` without recomputing products.
#[derive(Clone, Debug)]
pub struct LogPartitionTable {
    level: usize,
    dim: usize,
    logs: Vec<f64>,
}

impl LogPartitionTable {
    pub fn new(tree: &CodeTreeRealization, k: usize) -> Result<Self> {
        Self::with_cap(tree, k, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(tree: &CodeTreeRealization, k: usize, cap: u128) -> Result<Self> {
        let rows = map_words(tree, k, cap, |_, lin, _| SingularSpectrum::of_unchecked(lin).log_values())?;
        Ok(Self {
            level: k,
            dim: tree.dim(),
            logs: rows.concat(),
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn words(&self) -> usize {
        self.logs.len() / self.dim
    }

    /// `log Φ^s` of each word, in lexicographic order.
    pub fn log_phis(&self, s: f64) -> Vec<f64> {
        self.logs.chunks(self.dim).map(|l| log_phi_from_logs(l, s)).collect()
    }

    /// `log S(k, s)`.
    pub fn log_sum(&self, s: f64) -> f64 {
        log_sum_exp(&self.log_phis(s))
    }

    /// Finite-level pressure `log S(k, s) / k`.
    pub fn pressure(&self, s: f64) -> f64 {
        if self.level == 0 {
            0.0
        } else {
            self.log_sum(s) / self.level as f64
        }
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + values.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// Importance-sampled estimate of `S(k, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloSum {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MonteCarloSum {
    pub fn relative_error(&self) -> f64 {
        self.std_error / self.estimate
    }
}

/// Estimate `S(k, s)` by uniform random descent: a word reached with
/// probability `Π 1/M` contributes `Φ^s · Π M`.
pub fn partition_sum_monte_carlo(
    tree: &CodeTreeRealization,
    k: usize,
    s: f64,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloSum> {
    if k > tree.depth() {
        return Err(TreeError::LevelTooDeep {
            level: k,
            depth: tree.depth(),
        });
    }
    if samples == 0 {
        return Err(TreeError::Fs(crate::fs::FsError::NoSamples));
    }
    let d = tree.dim();
    let logs: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let mut linear = DMatrix::<f64>::identity(d, d);
            let mut log_weight = 0.0;
            let mut node = 0;
            for level in 0..k {
                let n = &tree.levels()[level][node];
                let m = n.family.len();
                let pick = rand::Rng::random_range(&mut rng, 0..m);
                log_weight += (m as f64).ln();
                linear *= n.family.maps()[pick].linear();
                node = n.children.get(pick).copied().unwrap_or(0);
            }
            log_weight + SingularSpectrum::of_unchecked(&linear).log_phi(s)
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let n = samples as f64;
    let mean = scaled.iter().sum::<f64>() / n;
    let var = if samples > 1 {
        scaled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let scale = top.exp();
    Ok(MonteCarloSum {
        estimate: mean * scale,
        std_error: (var / n).sqrt() * scale,
        samples,
    })
}
