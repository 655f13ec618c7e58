use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{FsError, LinearFamily, Result};
use crate::sampling::{gaussian_matrix, random_orthogonal, stream_rng};
use crate::singular::SingularSpectrum;

/// Sampled upper bound on the fullness constant of a family.
#[derive(Clone, Debug, PartialEq)]
pub struct FullnessEstimate {
    /// `min Σ_j Φ^s(U S_j V) / (Φ^s(U) Φ^s(V))` over the sampled pairs.
    pub c_hat: f64,
    pub worst_pair: (DMatrix<f64>, DMatrix<f64>),
    pub samples: usize,
}

fn log_phi(m: &DMatrix<f64>, s: f64) -> f64 {
    SingularSpectrum::of_unchecked(m).log_phi(s)
}

/// `Σ_j Φ^s(U S_j V) / (Φ^s(U) Φ^s(V))`.
pub(crate) fn fullness_ratio(fam: &LinearFamily, s: f64, u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let base = log_phi(u, s) + log_phi(v, s);
    let logs: Vec<f64> = fam.maps().iter().map(|m| log_phi(&(u * m * v), s) - base).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top.exp() * logs.iter().map(|l| (l - top).exp()).sum::<f64>()
}

/// Graded diagonal `diag(1, ε, ε², …)`.
fn graded(d: usize, eps: f64) -> DVector<f64> {
    DVector::from_fn(d, |i, _| eps.powi(i as i32))
}

/// The i-th sampled pair. Every third pair is Gaussian; the others are
/// adversarial: `U` squeezes the directions that `V` stretches, either along
/// coordinate axes or in random orthogonal frames.
fn sample_pair(d: usize, seed: u64, index: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = stream_rng(seed, index);
    let round = index / 3;
    let eps = 10f64.powi(-(1 + (round % 8) as i32));
    let down = DMatrix::from_diagonal(&graded(d, eps));
    let up = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| eps.powi((d - 1 - i) as i32)));
    match index % 3 {
        0 => loop {
            let u = gaussian_matrix(&mut rng, d);
            let v = gaussian_matrix(&mut rng, d);
            if u.determinant() != 0.0 && v.determinant() != 0.0 {
                break (u, v);
            }
        },
        1 => {
            let q1 = random_orthogonal(&mut rng, d);
            let q2 = random_orthogonal(&mut rng, d);
            let q3 = random_orthogonal(&mut rng, d);
            (&q1 * &down * &q2, q2.transpose() * &up * &q3)
        }
        _ => (down, up),
    }
}

/// Estimate the fullness constant `c` from `sample_count` pairs `(U, V)`.
///
/// Pair `i` only depends on `(seed, i)`, so increasing `sample_count` extends
/// the sample set and the estimate can only decrease.
pub fn estimate_fullness(fam: &LinearFamily, s: f64, sample_count: usize, seed: u64) -> Result<FullnessEstimate> {
    if sample_count == 0 {
        return Err(FsError::NoSamples);
    }
    let d = fam.dim();
    let ratios: Vec<f64> = (0..sample_count as u64)
        .into_par_iter()
        .map(|i| {
            let (u, v) = sample_pair(d, seed, i);
            fullness_ratio(fam, s, &u, &v)
        })
        .collect();
    let (worst, c_hat) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, r)| if r < best.1 { (i, r) } else { best });
    Ok(FullnessEstimate {
        c_hat,
        worst_pair: sample_pair(d, seed, worst as u64),
        samples: sample_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fs::{criterion_cscm, iterate_closure};

    fn rot90() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    #[test]
    fn identity_ratio_collapses_on_adversarial_pairs() {
        let fam = LinearFamily::new(vec![DMatrix::identity(2, 2)]).unwrap();
        let eps = 1e-4;
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, eps]);
        let v = DMatrix::from_row_slice(2, 2, &[eps, 0.0, 0.0, 1.0]);
        assert!((fullness_ratio(&fam, 1.0, &u, &v) - eps).abs() < 1e-15);

        let few = estimate_fullness(&fam, 1.0, 3, 1).unwrap();
        let many = estimate_fullness(&fam, 1.0, 30, 1).unwrap();
        assert!(few.c_hat <= 1.0);
        assert!(many.c_hat <= few.c_hat);
        assert!(many.c_hat < 1e-7);
    }

    #[test]
    fn estimate_is_monotone_in_sample_count() {
        let fam = LinearFamily::new(vec![DMatrix::identity(2, 2), rot90()]).unwrap();
        let mut prev = f64::INFINITY;
        for n in [1, 5, 20, 100, 400] {
            let c = estimate_fullness(&fam, 1.3, n, 9).unwrap().c_hat;
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn identity_and_rotation_stay_full() {
        let fam = LinearFamily::new(vec![DMatrix::identity(2, 2), rot90()]).unwrap();
        for seed in 0..5 {
            let c = estimate_fullness(&fam, 1.0, 10_000, seed).unwrap().c_hat;
            assert!(c > 0.5, "seed {seed}: {c}");
        }
    }

    #[test]
    fn certified_closure_is_full() {
        let f = DMatrix::from_row_slice(2, 2, &[0.4, 0.0, 0.0, 0.3]);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let g = &h * DMatrix::from_row_slice(2, 2, &[0.45, 0.0, 0.0, 0.2]) * h.clone().try_inverse().unwrap();
        let report = criterion_cscm(&f, &g, 1e-9).unwrap();
        let closure = iterate_closure(&LinearFamily::new(vec![f, g]).unwrap(), report.certified_depth).unwrap();
        let est = estimate_fullness(&closure, 1.5, 300, 3).unwrap();
        assert!(est.c_hat > 0.0 && est.c_hat.is_finite());
        assert_eq!(est.samples, 300);
    }

    #[test]
    fn rejects_zero_samples() {
        let fam = LinearFamily::new(vec![DMatrix::identity(2, 2)]).unwrap();
        assert!(matches!(estimate_fullness(&fam, 1.0, 0, 0), Err(FsError::NoSamples)));
    }
}
