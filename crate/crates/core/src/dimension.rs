//! Pressure curves, the affinity dimension `s₀`, and box counting.

use std::collections::HashSet;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::code_tree::{
    attractor_points, partition_sum_monte_carlo, word_count, CodeTreeRealization, LogPartitionTable, TreeError,
    DEFAULT_ENUMERATION_CAP,
};
use crate::sampling::stream_rng;

/// Allowed increase of `p` between consecutive grid points.
pub const MONOTONE_TOL: f64 = 1e-10;
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;
pub const MAX_BISECTIONS: usize = 60;
/// Box counting needs at least this many points.
pub const MIN_BOX_POINTS: usize = 1000;
/// `|min(s₀, d) − box|` above this is flagged in a [`DimensionReport`].
pub const DEFAULT_AGREEMENT_TOL: f64 = 0.15;
/// Largest number of attractor points enumerated for box counting.
pub const MAX_REPORT_POINTS: u128 = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimensionError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("s grid is empty")]
    EmptyGrid,
    #[error("s grid must be ascending and finite (entry {index})")]
    BadGrid { index: usize },
    #[error("pressure increases from p({s_prev}) = {p_prev} to p({s}) = {p}")]
    NotDecreasing { s_prev: f64, p_prev: f64, s: f64, p: f64 },
    #[error("k must be at least 1")]
    ZeroLevel,
    #[error("box counting needs at least {needed} points, got {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error("point cloud is degenerate (all points identical)")]
    DegeneratePoints,
    #[error("points have mixed dimensions")]
    MixedDimensions,
    #[error("invalid scale window j_min = {j_min}, j_max = {j_max}")]
    BadWindow { j_min: u32, j_max: u32 },
    #[error(
        "dimension formula hypothesis violated: need 0 < sigma_lo <= sigma_hi < 1/2, got sigma_lo = {sigma_lo}, sigma_hi = {sigma_hi}"
    )]
    Hypothesis { sigma_lo: f64, sigma_hi: f64 },
}

pub type Result<T> = std::result::Result<T, DimensionError>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressurePoint {
    pub s: f64,
    /// `log S(k, s) / k`.
    pub p: f64,
    /// `|p_k(s) − p_{⌊k/2⌋}(s)|`; zero when `k = 1`.
    pub diagnostic: f64,
    /// Standard error when `p` comes from Monte-Carlo sampling.
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureCurve {
    pub k: usize,
    pub points: Vec<PressurePoint>,
}

impl PressureCurve {
    /// Linear interpolation of the first sign change, if any.
    pub fn zero_crossing(&self) -> Option<f64> {
        self.points.windows(2).find(|w| w[0].p >= 0.0 && w[1].p <= 0.0).map(|w| {
            if w[0].p == w[1].p {
                w[0].s
            } else {
                w[0].s + (w[1].s - w[0].s) * w[0].p / (w[0].p - w[1].p)
            }
        })
    }
}

/// Monte-Carlo settings used once exact enumeration exceeds the cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureConfig {
    pub cap: u128,
    pub samples: usize,
    pub seed: u64,
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            samples: 100_000,
            seed: 0,
        }
    }
}

/// Finite-level pressure as a function of `s`.
enum Pressure {
    Exact(LogPartitionTable),
    Sampled { tree: CodeTreeRealization, k: usize, cfg: PressureConfig },
}

impl Pressure {
    fn new(tree: &CodeTreeRealization, k: usize, cfg: &PressureConfig) -> Result<Self> {
        match LogPartitionTable::with_cap(tree, k, cfg.cap) {
            Ok(t) => Ok(Pressure::Exact(t)),
            Err(TreeError::EnumerationCap { .. }) => Ok(Pressure::Sampled {
                tree: tree.clone(),
                k,
                cfg: *cfg,
            }),
            Err(e) => Err(e.into()),
        }
    }

    fn eval(&self, s: f64) -> Result<(f64, Option<f64>)> {
        match self {
            Pressure::Exact(t) => Ok((t.pressure(s), None)),
            Pressure::Sampled { tree, k, cfg } => {
                let mc = partition_sum_monte_carlo(tree, *k, s, cfg.samples, cfg.seed)?;
                let kf = *k as f64;
                Ok((mc.estimate.ln() / kf, Some(mc.relative_error() / kf)))
            }
        }
    }
}

pub fn pressure_curve(tree: &CodeTreeRealization, s_grid: &[f64], k: usize) -> Result<PressureCurve> {
    pressure_curve_with(tree, s_grid, k, &PressureConfig::default())
}

/// `p_k(s)` on an ascending grid with the two-level diagnostic `|p_k − p_{k/2}|`.
pub fn pressure_curve_with(
    tree: &CodeTreeRealization,
    s_grid: &[f64],
    k: usize,
    cfg: &PressureConfig,
) -> Result<PressureCurve> {
    if s_grid.is_empty() {
        return Err(DimensionError::EmptyGrid);
    }
    if k == 0 {
        return Err(DimensionError::ZeroLevel);
    }
    if let Some(index) = (0..s_grid.len()).find(|&i| !s_grid[i].is_finite() || (i > 0 && s_grid[i] <= s_grid[i - 1])) {
        return Err(DimensionError::BadGrid { index });
    }
    let full = Pressure::new(tree, k, cfg)?;
    let half = if k >= 2 { Some(Pressure::new(tree, k / 2, cfg)?) } else { None };
    let points = s_grid
        .par_iter()
        .map(|&s| {
            let (p, std_error) = full.eval(s)?;
            let diagnostic = match &half {
                Some(h) => (p - h.eval(s)?.0).abs(),
                None => 0.0,
            };
            Ok(PressurePoint {
                s,
                p,
                diagnostic,
                std_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Pressure::Exact(_) = full {
        for w in points.windows(2) {
            if w[1].p > w[0].p + MONOTONE_TOL {
                return Err(DimensionError::NotDecreasing {
                    s_prev: w[0].s,
                    p_prev: w[0].p,
                    s: w[1].s,
                    p: w[1].p,
                });
            }
        }
    }
    Ok(PressureCurve { k, points })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroStatus {
    Converged,
    /// `p(0) ≤ 0`; `s₀ = 0` is returned.
    NonPositiveAtZero,
    /// `p > 0` on the whole search range; `s₀` is capped at its upper end.
    NotBracketed,
    /// The iteration budget ran out before the bracket shrank to `tol`.
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureZero {
    pub s0: f64,
    pub bracket: (f64, f64),
    pub p_at_s0: f64,
    pub iterations: usize,
    pub status: ZeroStatus,
}

impl PressureZero {
    pub fn bracket_width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }
}

/// Zero of `p_k` by bracket doubling and bisection, stopped when the bracket
/// is narrower than `tol`.
pub fn pressure_zero(tree: &CodeTreeRealization, k: usize, tol: f64) -> Result<PressureZero> {
    if k == 0 {
        return Err(DimensionError::ZeroLevel);
    }
    let table = LogPartitionTable::new(tree, k)?;
    Ok(zero_of(|s| table.pressure(s), tree.dim(), tol))
}

fn zero_of(p: impl Fn(f64) -> f64, d: usize, tol: f64) -> PressureZero {
    let p0 = p(0.0);
    if p0 <= 0.0 {
        return PressureZero {
            s0: 0.0,
            bracket: (0.0, 0.0),
            p_at_s0: p0,
            iterations: 0,
            status: ZeroStatus::NonPositiveAtZero,
        };
    }
    let limit = 64.0 * d as f64;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut p_hi = p(hi);
    while p_hi > 0.0 {
        if hi >= limit {
            return PressureZero {
                s0: hi,
                bracket: (hi, hi),
                p_at_s0: p_hi,
                iterations: 0,
                status: ZeroStatus::NotBracketed,
            };
        }
        lo = hi;
        hi = (2.0 * hi).min(limit);
        p_hi = p(hi);
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let pm = p(mid);
        iterations += 1;
        if pm == 0.0 {
            lo = mid;
            hi = mid;
        } else if pm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s0 = 0.5 * (lo + hi);
    PressureZero {
        s0,
        bracket: (lo, hi),
        p_at_s0: p(s0),
        iterations,
        status: if hi - lo <= tol {
            ZeroStatus::Converged
        } else {
            ZeroStatus::IterationLimit
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCount {
    /// Least-squares slope of `log N(2^{-j})` against `j log 2`.
    pub estimate: f64,
    pub intercept: f64,
    /// Root mean square residual of the fit.
    pub residual: f64,
    pub std_error: f64,
    pub scales: Vec<u32>,
    pub counts: Vec<usize>,
}

fn normalize(points: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(DimensionError::MixedDimensions);
    }
    let lo = DVector::from_fn(d, |i, _| points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min));
    let hi = DVector::from_fn(d, |i, _| points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max));
    let extent = (&hi - &lo).max();
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(DimensionError::DegeneratePoints);
    }
    Ok(points.iter().map(|p| (p - &lo) / extent).collect())
}

/// Occupied dyadic boxes of side `2^{-j}` for each `j`, on points already in `[0, 1]^d`.
fn box_counts(unit: &[DVector<f64>], scales: &[u32]) -> Vec<usize> {
    scales
        .par_iter()
        .map(|&j| {
            let cells = (1u64 << j) as f64;
            let top = (1u64 << j) - 1;
            unit.iter()
                .map(|p| p.iter().map(|&x| ((x * cells) as u64).min(top)).collect::<Vec<u64>>())
                .collect::<HashSet<_>>()
                .len()
        })
        .collect()
}

fn fit(scales: &[u32], counts: &[usize]) -> BoxCount {
    let xs: Vec<f64> = scales.iter().map(|&j| j as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let std_error = if xs.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    BoxCount {
        estimate: slope,
        intercept,
        residual: (ssr / n).sqrt(),
        std_error,
        scales: scales.to_vec(),
        counts: counts.to_vec(),
    }
}

/// Box-counting dimension over the scales `2^{-j}`, `j_min ≤ j ≤ j_max`,
/// after rescaling the cloud so its largest side is 1.
pub fn box_dimension(points: &[DVector<f64>], j_min: u32, j_max: u32) -> Result<BoxCount> {
    if j_min < 1 || j_max <= j_min || j_max > 40 {
        return Err(DimensionError::BadWindow { j_min, j_max });
    }
    if points.len() < MIN_BOX_POINTS {
        return Err(DimensionError::TooFewPoints {
            found: points.len(),
            needed: MIN_BOX_POINTS,
        });
    }
    let unit = normalize(points)?;
    let scales: Vec<u32> = (j_min..=j_max).collect();
    let counts = box_counts(&unit, &scales);
    Ok(fit(&scales, &counts))
}

/// Scale window for a cloud of `n` points resolved down to `resolution`
/// (relative to the cloud's extent): the finest scale stays above the
/// resolution and keeps on average at least `8` points per occupied box.
pub fn auto_window(points: &[DVector<f64>], resolution: f64) -> Result<(u32, u32)> {
    if points.len() < MIN_BOX_POINTS {
        return Err(DimensionError::TooFewPoints {
            found: points.len(),
            needed: MIN_BOX_POINTS,
        });
    }
    let unit = normalize(points)?;
    let finest = if resolution > 0.0 && resolution < 1.0 {
        ((-resolution.log2()).floor() as u32).clamp(3, 30)
    } else {
        30
    };
    let scales: Vec<u32> = (1..=finest).collect();
    let counts = box_counts(&unit, &scales);
    let limit = points.len() / 8;
    let j_max = scales
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c <= limit)
        .map(|(&j, _)| j)
        .max()
        .unwrap_or(3)
        .max(3);
    let j_min = (j_max / 2).max(1).min(j_max - 2);
    Ok((j_min, j_max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionReport {
    pub d: usize,
    pub k: usize,
    pub depth: usize,
    pub s0: f64,
    pub s0_bracket: (f64, f64),
    pub zero_status: ZeroStatus,
    /// `min(s₀, d)`.
    pub dimension: f64,
    pub box_estimate: f64,
    pub box_band: (f64, f64),
    pub box_fit: BoxCount,
    pub point_count: usize,
    pub agreement_tol: f64,
    pub agrees: bool,
    pub note: Option<String>,
}

/// `(σ_lo, σ_hi)` must satisfy `0 < σ_lo ≤ σ_hi < 1/2`.
pub fn check_hypothesis(sigma_lo: f64, sigma_hi: f64) -> Result<()> {
    if sigma_lo > 0.0 && sigma_lo <= sigma_hi && sigma_hi < 0.5 {
        Ok(())
    } else {
        Err(DimensionError::Hypothesis { sigma_lo, sigma_hi })
    }
}

/// Attractor points `f_𝐢(0)` for the level-`depth` words: all of them when
/// there are at most `max_points`, otherwise `max_points` uniform random descents.
pub fn attractor_cloud(tree: &CodeTreeRealization, depth: usize, max_points: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    if word_count(tree, depth) <= max_points as u128 {
        return Ok(attractor_points(tree, depth, 0.0)?.into_iter().map(|p| p.point).collect());
    }
    if depth > tree.depth() {
        return Err(TreeError::LevelTooDeep {
            level: depth,
            depth: tree.depth(),
        }
        .into());
    }
    let d = tree.dim();
    Ok((0..max_points as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let mut linear = nalgebra::DMatrix::<f64>::identity(d, d);
            let mut point = DVector::zeros(d);
            let mut node = 0;
            for level in 0..depth {
                let n = &tree.levels()[level][node];
                let pick = rand::Rng::random_range(&mut rng, 0..n.family.len());
                let map = &n.family.maps()[pick];
                point += &linear * map.translation();
                linear *= map.linear();
                node = n.children.get(pick).copied().unwrap_or(0);
            }
            point
        })
        .collect())
}

/// Affinity dimension from the pressure zero at level `k`, checked against
/// box counting on the level-`depth` attractor points.
pub fn dimension_report(tree: &CodeTreeRealization, k: usize, depth: usize, seed: u64) -> Result<DimensionReport> {
    let (lo, hi) = tree.singular_range();
    check_hypothesis(lo, hi)?;
    let zero = pressure_zero(tree, k, DEFAULT_ZERO_TOL)?;
    let d = tree.dim();
    let dimension = zero.s0.min(d as f64);
    let points = attractor_cloud(tree, depth, MAX_REPORT_POINTS as usize, seed)?;
    let extent = {
        let unit_free = normalize(&points)?;
        drop(unit_free);
        let lo = DVector::from_fn(d, |i, _| points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min));
        let hi = DVector::from_fn(d, |i, _| points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max));
        (&hi - &lo).max()
    };
    let resolution = hi.powi(depth as i32) / extent;
    let (j_min, j_max) = auto_window(&points, resolution)?;
    let fit = box_dimension(&points, j_min, j_max)?;
    let spread = if j_max - j_min >= 3 {
        let a = box_dimension(&points, j_min, j_max - 1)?.estimate;
        let b = box_dimension(&points, j_min + 1, j_max)?.estimate;
        (a - fit.estimate).abs().max((b - fit.estimate).abs())
    } else {
        0.0
    };
    let half_band = 2.0 * fit.std_error + spread;
    let agrees = (dimension - fit.estimate).abs() <= DEFAULT_AGREEMENT_TOL;
    Ok(DimensionReport {
        d,
        k,
        depth,
        s0: zero.s0,
        s0_bracket: zero.bracket,
        zero_status: zero.status,
        dimension,
        box_estimate: fit.estimate,
        box_band: ((fit.estimate - half_band).max(0.0), (fit.estimate + half_band).min(d as f64)),
        point_count: points.len(),
        box_fit: fit,
        agreement_tol: DEFAULT_AGREEMENT_TOL,
        agrees,
        note: (!agrees).then(|| "possibly non-generic translation assignment".to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_tree::{deterministic_tree, AffineMap, IfsFamily};
    use nalgebra::DMatrix;

    fn similarities(r: f64, offsets: &[Vec<f64>]) -> IfsFamily {
        let d = offsets[0].len();
        let maps = offsets
            .iter()
            .enumerate()
            .map(|(i, a)| AffineMap::new(DMatrix::identity(d, d) * r, i, DVector::from_vec(a.clone())).unwrap())
            .collect();
        IfsFamily::new("sim", maps).unwrap()
    }

    fn cantor(depth: usize) -> CodeTreeRealization {
        deterministic_tree(similarities(1.0 / 3.0, &[vec![0.0], vec![2.0 / 3.0]]), depth).unwrap()
    }

    fn diag_tree(depth: usize, translations: &[Vec<f64>]) -> CodeTreeRealization {
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![0.4, 0.2]));
        let maps = translations
            .iter()
            .enumerate()
            .map(|(i, a)| AffineMap::new(t.clone(), i, DVector::from_vec(a.clone())).unwrap())
            .collect();
        deterministic_tree(IfsFamily::new("diag", maps).unwrap(), depth).unwrap()
    }

    fn triangle(depth: usize) -> CodeTreeRealization {
        let r: f64 = 0.45;
        let v = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]];
        let offsets: Vec<Vec<f64>> = v.iter().map(|p| p.iter().map(|x| (1.0 - r) * x).collect()).collect();
        deterministic_tree(similarities(r, &offsets), depth).unwrap()
    }

    #[test]
    fn similarity_pressure_is_linear() {
        let t = cantor(4);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.2).collect();
        let curve = pressure_curve(&t, &grid, 4).unwrap();
        for pt in &curve.points {
            let exact = 2f64.ln() + pt.s * (1.0f64 / 3.0).ln();
            assert!((pt.p - exact).abs() < 1e-13);
            assert!(pt.diagnostic < 1e-13);
        }
        let z = curve.zero_crossing().unwrap();
        assert!((z - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_pressure_is_piecewise_linear() {
        let t = diag_tree(4, &[vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]]);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let curve = pressure_curve(&t, &grid, 4).unwrap();
        for pt in &curve.points {
            let exact = if pt.s <= 1.0 {
                3f64.ln() + pt.s * 0.4f64.ln()
            } else {
                3f64.ln() + 0.4f64.ln() + (pt.s - 1.0) * 0.2f64.ln()
            };
            assert!((pt.p - exact).abs() < 1e-12, "s = {}: {} vs {exact}", pt.s, pt.p);
        }
    }

    #[test]
    fn zero_exponent_gives_branching_rate() {
        let t = triangle(5);
        let curve = pressure_curve(&t, &[0.0], 5).unwrap();
        assert!((curve.points[0].p - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn grid_errors() {
        let t = cantor(3);
        assert!(matches!(pressure_curve(&t, &[], 2), Err(DimensionError::EmptyGrid)));
        assert!(matches!(pressure_curve(&t, &[0.5, 0.5], 2), Err(DimensionError::BadGrid { index: 1 })));
        assert!(matches!(pressure_curve(&t, &[0.5], 0), Err(DimensionError::ZeroLevel)));
    }

    #[test]
    fn monte_carlo_fallback_has_error_bars() {
        let t = diag_tree(6, &[vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]]);
        let cfg = PressureConfig {
            cap: 100,
            samples: 2000,
            seed: 4,
        };
        let curve = pressure_curve_with(&t, &[0.5, 1.5], 6, &cfg).unwrap();
        for pt in &curve.points {
            assert!(pt.std_error.is_some());
        }
        // constant diagonal family: every word has the same Φ^s, so sampling is exact
        let exact = 3f64.ln() + 0.5 * 0.4f64.ln();
        assert!((curve.points[0].p - exact).abs() < 1e-12);
    }

    #[test]
    fn similarity_zero() {
        let target = 2f64.ln() / 3f64.ln();
        for k in 1..=6 {
            let z = pressure_zero(&cantor(k), k, 1e-9).unwrap();
            assert_eq!(z.status, ZeroStatus::Converged);
            assert!((z.s0 - target).abs() < 1e-9);
            assert!(z.bracket_width() <= 1e-9);
        }
        assert!((0.6309297536 - target).abs() < 1e-10);
    }

    #[test]
    fn diagonal_zero() {
        let t = diag_tree(6, &[vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]]);
        let z = pressure_zero(&t, 6, 1e-8).unwrap();
        let target = 1.0 + 1.2f64.ln() / 5f64.ln();
        assert!((z.s0 - target).abs() < 1e-8);
        assert!((target - 1.113283).abs() < 1e-6);
    }

    #[test]
    fn single_similarity_has_zero_dimension() {
        let t = deterministic_tree(similarities(0.3, &[vec![0.1, 0.2]]), 3).unwrap();
        let z = pressure_zero(&t, 3, 1e-6).unwrap();
        assert_eq!(z.status, ZeroStatus::NonPositiveAtZero);
        assert_eq!(z.s0, 0.0);
    }

    #[test]
    fn zero_bisection_edge_cases() {
        let never = zero_of(|_| 1.0, 2, 1e-6);
        assert_eq!(never.status, ZeroStatus::NotBracketed);
        assert_eq!(never.s0, 128.0);
        let capped = zero_of(|s| if s < 0.3 { 1.0 } else { -1.0 }, 1, 1e-30);
        assert_eq!(capped.status, ZeroStatus::IterationLimit);
        assert_eq!(capped.iterations, MAX_BISECTIONS);
        assert!((capped.s0 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn grid_square() {
        let pts: Vec<DVector<f64>> = (0..100)
            .flat_map(|i| (0..100).map(move |j| DVector::from_vec(vec![i as f64 / 99.0, j as f64 / 99.0])))
            .collect();
        let b = box_dimension(&pts, 1, 5).unwrap();
        assert!((b.estimate - 2.0).abs() <= 0.1, "{b:?}");
    }

    #[test]
    fn segment() {
        let pts: Vec<DVector<f64>> = (0..10_000)
            .map(|i| {
                let t = i as f64 / 9999.0;
                DVector::from_vec(vec![t, 0.5 * t + 0.1])
            })
            .collect();
        let b = box_dimension(&pts, 2, 9).unwrap();
        assert!((b.estimate - 1.0).abs() <= 0.1, "{b:?}");
    }

    #[test]
    fn triangle_similarity_attractor() {
        let t = triangle(10);
        let pts = attractor_cloud(&t, 10, 100_000, 0).unwrap();
        assert_eq!(pts.len(), 59_049);
        let (j_min, j_max) = auto_window(&pts, 0.45f64.powi(10)).unwrap();
        let b = box_dimension(&pts, j_min, j_max).unwrap();
        let target = 3f64.ln() / (1.0 / 0.45f64).ln();
        assert!((target - 1.3758).abs() < 1e-4);
        assert!((b.estimate - target).abs() <= 0.1, "{b:?}");
    }

    #[test]
    fn box_errors() {
        let few = vec![DVector::from_vec(vec![0.0]); 10];
        assert!(matches!(box_dimension(&few, 1, 3), Err(DimensionError::TooFewPoints { .. })));
        let same = vec![DVector::from_vec(vec![0.3, 0.3]); 2000];
        assert!(matches!(box_dimension(&same, 1, 3), Err(DimensionError::DegeneratePoints)));
        assert!(matches!(box_dimension(&same, 3, 3), Err(DimensionError::BadWindow { .. })));
    }

    #[test]
    fn report_for_similarity_system() {
        let r = dimension_report(&triangle(10), 6, 10, 1).unwrap();
        assert!((r.dimension - r.box_estimate).abs() <= 0.1, "{r:?}");
        assert!(r.agrees && r.note.is_none());
        assert!(r.box_band.0 <= r.box_estimate && r.box_estimate <= r.box_band.1);
    }

    #[test]
    fn report_for_random_diagonal_system() {
        let mut rng = stream_rng(2024, 0);
        let translations: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2).map(|_| rand::Rng::random::<f64>(&mut rng)).collect())
            .collect();
        let r = dimension_report(&diag_tree(12, &translations), 6, 12, 1).unwrap();
        assert!((r.s0 - 1.113283).abs() < 1e-5);
        assert!((r.box_estimate - 1.1133).abs() <= 0.15, "{r:?}");
    }

    #[test]
    fn hypothesis_is_enforced() {
        let t = deterministic_tree(similarities(0.6, &[vec![0.0], vec![0.4]]), 3).unwrap();
        let err = dimension_report(&t, 3, 3, 0).unwrap_err();
        assert!(matches!(err, DimensionError::Hypothesis { .. }));
        assert!(err.to_string().contains("sigma_hi < 1/2"));
    }
}
