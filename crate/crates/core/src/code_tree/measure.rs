use nalgebra::DVector;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sums::{log_sum_exp, map_words, DEFAULT_ENUMERATION_CAP};
use super::tree::{shift_first_neck, CodeTreeRealization};
use super::{Result, TreeError};
use crate::fs::{estimate_fullness, LinearFamily};
use crate::singular::SingularSpectrum;

/// A cylinder representative `f_𝐢(0)` with its normalized `Φ^s` weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPoint {
    pub point: DVector<f64>,
    pub weight: f64,
}

/// One draw from the discrete measure on level-`N_m` cylinders.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSample {
    /// Lexicographic index of the cylinder.
    pub cylinder: usize,
    pub point: DVector<f64>,
    pub weight: f64,
}

/// Every level-`level` cylinder point with weight `Φ^s(T_𝐢) / S(level, s)`.
pub fn attractor_points(tree: &CodeTreeRealization, level: usize, s: f64) -> Result<Vec<WeightedPoint>> {
    let raw = map_words(tree, level, DEFAULT_ENUMERATION_CAP, |_, lin, pt| {
        (pt.clone(), SingularSpectrum::of_unchecked(lin).log_phi(s))
    })?;
    let logs: Vec<f64> = raw.iter().map(|(_, l)| *l).collect();
    let total = log_sum_exp(&logs);
    Ok(raw
        .into_iter()
        .map(|(point, l)| WeightedPoint {
            point,
            weight: (l - total).exp(),
        })
        .collect())
}

/// Draw `count` cylinders of level `N_m` with probability `Φ^s(T_𝐢)/S(N_m, s)`.
pub fn sample_measure_points(
    tree: &CodeTreeRealization,
    m: usize,
    s: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<MeasureSample>> {
    if m == 0 || m > tree.necks().len() {
        return Err(TreeError::NotEnoughNecks {
            needed: m.max(1),
            available: tree.necks().len(),
        });
    }
    let level = tree.necks()[m - 1];
    let cylinders = attractor_points(tree, level, s)?;
    let dist = WeightedIndex::new(cylinders.iter().map(|c| c.weight)).map_err(|e| {
        TreeError::Fs(crate::fs::FsError::Unsupported(format!("cylinder weights: {e}")))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let i = dist.sample(&mut rng);
            MeasureSample {
                cylinder: i,
                point: cylinders[i].point.clone(),
                weight: cylinders[i].weight,
            }
        })
        .collect())
}

/// Linear parts of all words from the root down to the first neck.
pub fn first_block_family(tree: &CodeTreeRealization) -> Result<LinearFamily> {
    let first = *tree.necks().first().ok_or(TreeError::NotEnoughNecks {
        needed: 1,
        available: 0,
    })?;
    let maps = map_words(tree, first, DEFAULT_ENUMERATION_CAP, |_, lin, _| lin.clone())?;
    Ok(LinearFamily::new(maps)?)
}

/// Number of neck blocks `j ∈ (n_from, n_to]` whose block family has a
/// sampled fullness constant of at least `c`.
///
/// Block `j` is the first block of the tree shifted `j − 1` times; its
/// estimate uses `samples` pairs and seed `seed + j`.
pub fn count_full_blocks(
    tree: &CodeTreeRealization,
    s: f64,
    c: f64,
    n_from: usize,
    n_to: usize,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    if n_to <= n_from {
        return Ok(0);
    }
    if n_to > tree.necks().len() {
        return Err(TreeError::NotEnoughNecks {
            needed: n_to,
            available: tree.necks().len(),
        });
    }
    let mut current = tree.clone();
    let mut count = 0;
    for j in 1..=n_to {
        if j > n_from {
            let fam = first_block_family(&current)?;
            let est = estimate_fullness(&fam, s, samples, seed.wrapping_add(j as u64))?;
            if est.c_hat >= c {
                count += 1;
            }
        }
        if j < n_to {
            current = shift_first_neck(&current)?;
        }
    }
    Ok(count)
}
