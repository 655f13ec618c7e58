//! Singular spectra of small square maps and the singular value function `Φ^s`.
//!
//! Spectra are computed with one-sided (Hestenes) Jacobi rotations, which
//! keep high relative accuracy on the small singular values of the graded
//! matrices produced by long compositions of contractions.

use nalgebra::DMatrix;
use thiserror::Error;

/// Smallest `|det T| / σ₁^d` accepted before a map is treated as singular.
pub const SINGULAR_CUTOFF: f64 = 1e-14;
/// Largest condition number `σ₁/σ_d` accepted by [`singular_values`].
pub const MAX_CONDITION: f64 = 1e8;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("map is singular: |det| = {det:e} against scale {scale:e} (a non-singular linear map is required)")]
    Singular { det: f64, scale: f64 },
    #[error("condition number {condition:e} exceeds the supported limit {MAX_CONDITION:e}")]
    IllConditioned { condition: f64 },
    #[error("singular value function needs s >= 0, got {s}")]
    NegativeExponent { s: f64 },
}

/// Singular values `σ₁ ≥ … ≥ σ_d > 0` of a nonsingular map.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSpectrum {
    sigma: Vec<f64>,
}

impl SingularSpectrum {
    /// Builds a spectrum from values already known to be positive and descending.
    pub fn from_sorted(sigma: Vec<f64>) -> Self {
        debug_assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
        Self { sigma }
    }

    /// Spectrum without the nonsingularity and conditioning guards.
    ///
    /// Used for compositions, whose condition numbers grow geometrically with
    /// word length while the Jacobi sweep stays accurate.
    pub fn of_unchecked(t: &DMatrix<f64>) -> Self {
        Self {
            sigma: jacobi_singular_values(t),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn largest(&self) -> f64 {
        self.sigma[0]
    }

    pub fn smallest(&self) -> f64 {
        self.sigma[self.sigma.len() - 1]
    }

    pub fn condition(&self) -> f64 {
        self.largest() / self.smallest()
    }

    /// `log Φ^s`, finite for every `s ≥ 0` and positive spectrum.
    pub fn log_phi(&self, s: f64) -> f64 {
        log_phi_from_logs(&self.log_values(), s)
    }

    pub fn phi(&self, s: f64) -> f64 {
        self.log_phi(s).exp()
    }

    pub fn log_values(&self) -> Vec<f64> {
        self.sigma.iter().map(|v| v.ln()).collect()
    }
}

/// `log Φ^s` from descending log singular values.
///
/// For `m−1 < s ≤ m` this is `log σ₁ + … + log σ_{m−1} + (s−m+1) log σ_m`; integer
/// `s = m` takes the left branch `log(σ₁⋯σ_m)`. For `s > d` it is
/// `(s/d) log |det T|`.
pub fn log_phi_from_logs(log_sigma: &[f64], s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let d = log_sigma.len();
    if s > d as f64 {
        return s / d as f64 * log_sigma.iter().sum::<f64>();
    }
    let m = s.ceil() as usize;
    let head: f64 = log_sigma[..m - 1].iter().sum();
    head + (s - (m as f64) + 1.0) * log_sigma[m - 1]
}

/// Singular values by one-sided Jacobi, sorted descending. No guards.
pub fn jacobi_singular_values(t: &DMatrix<f64>) -> Vec<f64> {
    let mut a = t.clone();
    let n = a.ncols();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let tan = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cos = 1.0 / (1.0 + tan * tan).sqrt();
                let sin = cos * tan;
                for r in 0..a.nrows() {
                    let ap = a[(r, p)];
                    let aq = a[(r, q)];
                    a[(r, p)] = cos * ap - sin * aq;
                    a[(r, q)] = sin * ap + cos * aq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = (0..n).map(|c| a.column(c).norm()).collect();
    sigma.sort_by(|x, y| y.total_cmp(x));
    sigma
}

/// Singular spectrum of a nonsingular, reasonably conditioned square map.
pub fn singular_values(t: &DMatrix<f64>) -> Result<SingularSpectrum, SpectrumError> {
    let (rows, cols) = t.shape();
    if rows != cols || rows == 0 {
        return Err(SpectrumError::NotSquare { rows, cols });
    }
    if t.iter().any(|x| !x.is_finite()) {
        return Err(SpectrumError::NonFinite);
    }
    let spectrum = SingularSpectrum::of_unchecked(t);
    let scale = spectrum.largest().powi(rows as i32);
    let det: f64 = spectrum.values().iter().product();
    if scale == 0.0 || det <= SINGULAR_CUTOFF * scale {
        return Err(SpectrumError::Singular { det, scale });
    }
    let condition = spectrum.condition();
    if condition > MAX_CONDITION {
        return Err(SpectrumError::IllConditioned { condition });
    }
    Ok(spectrum)
}

/// The singular value function `Φ^s(T)`.
pub fn phi(t: &DMatrix<f64>, s: f64) -> Result<f64, SpectrumError> {
    if !(s >= 0.0) {
        return Err(SpectrumError::NegativeExponent { s });
    }
    Ok(singular_values(t)?.phi(s))
}
