//! The Falconer-Sloan condition `C(s)` for finite families of linear maps.
//!
//! Three levels of evidence are produced:
//!
//! * [`check_cm`] / [`check_cs`] sample decomposable multivectors and either
//!   find a failing configuration or report an empirical pass. An empirical
//!   pass is never a proof, the quantifier over decomposables is only sampled.
//! * [`criterion_cscm`] checks the explicit two-map eigenvalue/minor criterion;
//!   when it passes, the compositions of `F` and `G` up to length `2n₀²`
//!   satisfy `C(s)` for every `0 ≤ s ≤ d`.
//! * [`estimate_fullness`] gives a sampled upper bound for the constant `c` of
//!   a `(c, s)`-full family.

mod condition;
mod criterion;
mod fullness;

pub use condition::{check_cm, check_cs, decomposable_factors, FailCause, FailEvidence, Verdict, Witness};
pub use criterion::{
    change_of_basis, criterion_cscm, minor_profile, product_margins, real_eigenbasis, zero_coordinate_count,
    CriterionReport, EigenBasis,
};
pub use fullness::{estimate_fullness, FullnessEstimate};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::exterior::{self, ExteriorError};
use crate::singular::{SingularSpectrum, SpectrumError, SINGULAR_CUTOFF};

/// Default cutoff for "nonzero" pairings and numerical rank.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default cap on the size of an iterate closure.
pub const DEFAULT_CLOSURE_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FsError {
    #[error("a linear family needs at least one map")]
    EmptyFamily,
    #[error("map {index} has shape {rows}x{cols}, expected {dim}x{dim}")]
    Shape { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("map {index} is singular")]
    SingularMap { index: usize },
    #[error("closure of {maps} maps to depth {depth} has {size} elements, above the cap {cap}")]
    ClosureTooLarge { maps: usize, depth: usize, size: u128, cap: usize },
    #[error("closure depth must be at least 1")]
    ZeroDepth,
    #[error("grade {grade} out of range for dimension {dim}")]
    GradeOutOfRange { grade: usize, dim: usize },
    #[error("need at least one sample")]
    NoSamples,
    #[error("s = {s} is an integer; use check_cm")]
    IntegerExponent { s: f64 },
    #[error("s = {s} outside the open range (0, {dim})")]
    ExponentOutOfRange { s: f64, dim: usize },
    #[error("unsupported by the two-map criterion: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

pub type Result<T> = std::result::Result<T, FsError>;

/// A finite family `{S_i}` of nonsingular `d×d` maps.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFamily {
    dim: usize,
    maps: Vec<DMatrix<f64>>,
}

impl LinearFamily {
    pub fn new(maps: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = maps.first().ok_or(FsError::EmptyFamily)?;
        let dim = first.nrows();
        for (index, m) in maps.iter().enumerate() {
            let (rows, cols) = m.shape();
            if rows != dim || cols != dim || dim == 0 {
                return Err(FsError::Shape { index, rows, cols, dim });
            }
            exterior::check_square(m)?;
            if is_singular(m) {
                return Err(FsError::SingularMap { index });
            }
        }
        Ok(Self { dim, maps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[DMatrix<f64>] {
        &self.maps
    }

    /// The family `{α S_i}`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            maps: self.maps.iter().map(|m| m * alpha).collect(),
        }
    }

    /// The conjugated family `{P S_i P⁻¹}`.
    pub fn conjugated(&self, p: &DMatrix<f64>) -> Option<Self> {
        let inv = p.clone().try_inverse()?;
        Some(Self {
            dim: self.dim,
            maps: self.maps.iter().map(|m| p * m * &inv).collect(),
        })
    }
}

fn is_singular(m: &DMatrix<f64>) -> bool {
    if m.iter().any(|x| !x.is_finite()) {
        return true;
    }
    let spec = SingularSpectrum::of_unchecked(m);
    let scale = spec.largest().powi(m.nrows() as i32);
    let det: f64 = spec.values().iter().product();
    scale == 0.0 || det <= SINGULAR_CUTOFF * scale
}

/// All compositions `S_{i₁}∘…∘S_{i_j}` with `1 ≤ j ≤ depth`, grouped by length
/// and lexicographic in `(i₁, …, i_j)` within a length. Duplicates are kept.
pub fn iterate_closure(fam: &LinearFamily, depth: usize) -> Result<LinearFamily> {
    iterate_closure_with_cap(fam, depth, DEFAULT_CLOSURE_CAP)
}

pub fn iterate_closure_with_cap(fam: &LinearFamily, depth: usize, cap: usize) -> Result<LinearFamily> {
    if depth == 0 {
        return Err(FsError::ZeroDepth);
    }
    let n = fam.len() as u128;
    let mut size: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..depth {
        level = level.saturating_mul(n);
        size = size.saturating_add(level);
    }
    if size > cap as u128 {
        return Err(FsError::ClosureTooLarge {
            maps: fam.len(),
            depth,
            size,
            cap,
        });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut previous: Vec<DMatrix<f64>> = fam.maps.clone();
    out.extend(previous.iter().cloned());
    for _ in 1..depth {
        let next: Vec<DMatrix<f64>> = previous
            .iter()
            .flat_map(|prefix| fam.maps.iter().map(move |m| prefix * m))
            .collect();
        out.extend(next.iter().cloned());
        previous = next;
    }
    Ok(LinearFamily { dim: fam.dim, maps: out })
}
