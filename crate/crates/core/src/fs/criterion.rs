use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{FsError, Result};
use crate::exterior::{binomial, compound_matrix, ExteriorVector, MultiIndex};

/// Real eigenpairs of `m` (eigenvalues with negligible imaginary part), with
/// unit eigenvectors whose largest-magnitude component is positive.
pub fn real_eigenvectors(m: &DMatrix<f64>, tol: f64) -> Vec<(f64, DVector<f64>)> {
    let eig = m.complex_eigenvalues();
    let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut reals: Vec<f64> = eig.iter().filter(|z| z.im.abs() <= tol * scale).map(|z| z.re).collect();
    reals.sort_by(|a, b| b.total_cmp(a));
    reals.dedup_by(|a, b| (*a - *b).abs() <= tol * scale);
    reals.into_iter().map(|lambda| (lambda, null_vector(m, lambda))).collect()
}

/// Right singular vector of `m − λI` belonging to its smallest singular value.
fn null_vector(m: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let d = m.nrows();
    let shifted = m - DMatrix::identity(d, d) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let j = svd.singular_values.argmin().0;
    let v = v_t.row(j).transpose();
    canonical(v.normalize())
}

fn canonical(v: DVector<f64>) -> DVector<f64> {
    let lead = v.iter().copied().fold(0.0f64, |acc, c| if c.abs() > acc.abs() { c } else { acc });
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

/// `d` distinct real eigenvalues (descending) and the matching unit eigenvectors as columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenBasis {
    pub values: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_matrix")]
    pub vectors: DMatrix<f64>,
}

/// Eigen-decomposition required by the two-map criterion. Complex or repeated
/// eigenvalues are reported as [`FsError::Unsupported`].
pub fn real_eigenbasis(m: &DMatrix<f64>, tol: f64) -> Result<EigenBasis> {
    let d = m.nrows();
    let eig = m.complex_eigenvalues();
    let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = eig.iter().find(|z| z.im.abs() > tol * scale) {
        return Err(FsError::Unsupported(format!("complex eigenvalue {} {:+}i", z.re, z.im)));
    }
    let mut values: Vec<f64> = eig.iter().map(|z| z.re).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    for w in values.windows(2) {
        if (w[0] - w[1]).abs() <= tol * scale {
            return Err(FsError::Unsupported(format!("repeated eigenvalue {}", w[0])));
        }
    }
    let mut vectors = DMatrix::zeros(d, d);
    for (c, &lambda) in values.iter().enumerate() {
        vectors.set_column(c, &null_vector(m, lambda));
    }
    Ok(EigenBasis { values, vectors })
}

/// For each `k = 1…d`, the smallest relative gap
/// `|λ_{i₁}⋯λ_{i_k} − λ_{j₁}⋯λ_{j_k}| / max(|·|, |·|)` over distinct ascending k-tuples.
/// `k = d` has a single tuple and reports `+∞`.
pub fn product_margins(values: &[f64]) -> Vec<f64> {
    let d = values.len();
    (1..=d)
        .map(|k| {
            let products: Vec<f64> = MultiIndex::all(d, k)
                .iter()
                .map(|idx| idx.entries().iter().map(|&i| values[i]).product())
                .collect();
            let mut best = f64::INFINITY;
            for a in 0..products.len() {
                for b in a + 1..products.len() {
                    let (p, q) = (products[a], products[b]);
                    let gap = (p - q).abs() / p.abs().max(q.abs());
                    best = best.min(gap);
                }
            }
            best
        })
        .collect()
}

/// `A = Ẽ⁻¹Ê`: coordinates of `F`'s eigenvectors in `G`'s eigenbasis, so that
/// `ê_i = Σ_j A_{ji} ẽ_j`.
pub fn change_of_basis(f_vectors: &DMatrix<f64>, g_vectors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = g_vectors
        .clone()
        .try_inverse()
        .ok_or_else(|| FsError::Unsupported("eigenvectors of G are not a basis".into()))?;
    Ok(inv * f_vectors)
}

/// For each size `k = 1…d`, the smallest `|minor_k(A)| / ‖A‖₂^k`.
pub fn minor_profile(a: &DMatrix<f64>) -> Vec<f64> {
    let d = a.nrows();
    let norm = a.clone().svd(false, false).singular_values.max();
    (1..=d)
        .map(|k| {
            let c = compound_matrix(a, k).expect("square matrix");
            let smallest = c.matrix().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
            smallest / norm.powi(k as i32)
        })
        .collect()
}

/// Result of the explicit two-map criterion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub dim: usize,
    pub f_eigen: EigenBasis,
    pub g_eigen: EigenBasis,
    /// Relative product-distinctness margins for `F`, indexed by `k − 1`.
    pub f_product_margins: Vec<f64>,
    pub g_product_margins: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_matrix")]
    pub change_of_basis: DMatrix<f64>,
    /// Smallest normalized minor of `A` for each size, indexed by `k − 1`.
    pub minor_margins: Vec<f64>,
    pub min_minor: f64,
    pub n0: usize,
    pub certified_depth: usize,
    pub tol: f64,
    pub eigenvalue_condition: bool,
    pub minor_condition: bool,
    pub pass: bool,
}

/// Check the eigenvalue-product and all-minors conditions for the pair `(F, G)`.
///
/// On `pass`, every composition family `S_l(F, G)` with `l ≥ certified_depth`
/// satisfies `C(s)` for all `0 ≤ s ≤ d`.
pub fn criterion_cscm(f: &DMatrix<f64>, g: &DMatrix<f64>, tol: f64) -> Result<CriterionReport> {
    let fam = super::LinearFamily::new(vec![f.clone(), g.clone()])?;
    let d = fam.dim();
    let f_eigen = real_eigenbasis(f, tol)?;
    let g_eigen = real_eigenbasis(g, tol)?;
    let f_product_margins = product_margins(&f_eigen.values);
    let g_product_margins = product_margins(&g_eigen.values);
    let eigenvalue_condition = f_product_margins.iter().chain(&g_product_margins).all(|&m| m > tol);
    let a = change_of_basis(&f_eigen.vectors, &g_eigen.vectors)?;
    let minor_margins = minor_profile(&a);
    let min_minor = minor_margins.iter().copied().fold(f64::INFINITY, f64::min);
    let minor_condition = min_minor > tol;
    let n0 = (0..=d).map(|m| binomial(d, m)).max().unwrap_or(1);
    Ok(CriterionReport {
        dim: d,
        f_eigen,
        g_eigen,
        f_product_margins,
        g_product_margins,
        change_of_basis: a,
        minor_margins,
        min_minor,
        n0,
        certified_depth: 2 * n0 * n0,
        tol,
        eigenvalue_condition,
        minor_condition,
        pass: eigenvalue_condition && minor_condition,
    })
}

/// Number of iterates `i ∈ {1, …, n(n−1)+1}` for which `Λ^m(F^i) v`, written in
/// the eigen-blade basis of `G`, has a coordinate below `threshold` relative to
/// its largest coordinate. Here `n = binom(d, m)`.
pub fn zero_coordinate_count(
    f: &DMatrix<f64>,
    g_vectors: &DMatrix<f64>,
    v: &ExteriorVector,
    threshold: f64,
) -> Result<usize> {
    let m = v.grade();
    let n = binomial(v.dim(), m);
    let basis = compound_matrix(g_vectors, m)?.into_matrix();
    let lu = basis.lu();
    let step = compound_matrix(f, m)?.into_matrix();
    let mut current = v.coords().clone();
    let mut count = 0;
    for _ in 0..n * (n - 1) + 1 {
        current = &step * current;
        let norm = current.amax();
        if norm > 0.0 {
            current /= norm;
        }
        let coords = lu
            .solve(&current)
            .ok_or_else(|| FsError::Unsupported("eigen-blade basis is singular".into()))?;
        let scale = coords.amax();
        if coords.iter().any(|c| c.abs() < threshold * scale) {
            count += 1;
        }
    }
    Ok(count)
}
