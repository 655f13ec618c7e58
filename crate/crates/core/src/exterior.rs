//! Exterior powers `Λ^m(ℝ^d)` in the lexicographic blade basis.
//!
//! An m-vector is stored as a dense coordinate vector of length `binom(d, m)`
//! whose entries are indexed by ascending multi-indices `i_1 < … < i_m` in
//! lexicographic order. Every compound matrix produced here uses the same
//! ordering for both rows and columns, so coordinates and matrices can be
//! combined without any permutation bookkeeping.
//!
//! Indices are 0-based throughout the API: the blade `e₁∧e₃` of the usual
//! notation is the multi-index `[0, 2]`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Largest ambient dimension accepted by the dense routines in this module.
pub const MAX_DIM: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grade {grade} out of range for ambient dimension {dim}")]
    GradeOutOfRange { grade: usize, dim: usize },
    #[error("grade mismatch: {left} vs {right}")]
    GradeMismatch { left: usize, right: usize },
    #[error("ambient dimension {dim} exceeds the dense limit {MAX_DIM}")]
    DimensionTooLarge { dim: usize },
    #[error("invalid multi-index {entries:?} for dimension {dim}: entries must be strictly ascending and < dim")]
    InvalidMultiIndex { dim: usize, entries: Vec<usize> },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

pub type Result<T> = std::result::Result<T, ExteriorError>;

/// `binom(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Sign of the permutation that sorts `seq` (entries assumed distinct).
pub fn permutation_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(ExteriorError::DimensionTooLarge { dim });
    }
    Ok(())
}

fn check_grade(dim: usize, grade: usize) -> Result<()> {
    if grade > dim {
        return Err(ExteriorError::GradeOutOfRange { grade, dim });
    }
    Ok(())
}

/// A strictly ascending index tuple labelling one basis blade of `Λ^m(ℝ^d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    dim: usize,
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(dim: usize, entries: Vec<usize>) -> Result<Self> {
        let ascending = entries.windows(2).all(|w| w[0] < w[1]);
        let in_range = entries.iter().all(|&e| e < dim);
        if !ascending || !in_range {
            return Err(ExteriorError::InvalidMultiIndex { dim, entries });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    /// All multi-indices of the given grade, in lexicographic order.
    pub fn all(dim: usize, grade: usize) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(binomial(dim, grade));
        if grade > dim {
            return out;
        }
        let mut current: Vec<usize> = (0..grade).collect();
        loop {
            out.push(MultiIndex {
                dim,
                entries: current.clone(),
            });
            // advance to the next combination
            let mut i = grade;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if current[i] < dim - grade + i {
                    current[i] += 1;
                    for j in i + 1..grade {
                        current[j] = current[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Position of this multi-index in the lexicographic enumeration.
    pub fn rank(&self) -> usize {
        let m = self.grade();
        let mut rank = 0;
        let mut start = 0;
        for (i, &e) in self.entries.iter().enumerate() {
            for skipped in start..e {
                rank += binomial(self.dim - 1 - skipped, m - 1 - i);
            }
            start = e + 1;
        }
        rank
    }

    /// The ascending complement `{0..d} \ self`.
    pub fn complement(&self) -> MultiIndex {
        let entries = (0..self.dim).filter(|i| !self.entries.contains(i)).collect();
        MultiIndex {
            dim: self.dim,
            entries,
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.entries.iter().map(|e| format!("e{}", e + 1)).collect();
        write!(f, "{}", parts.join("∧"))
    }
}

/// An element of `Λ^m(ℝ^d)` in coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorVector {
    dim: usize,
    grade: usize,
    coords: DVector<f64>,
}

impl ExteriorVector {
    pub fn zero(dim: usize, grade: usize) -> Result<Self> {
        check_dim(dim)?;
        check_grade(dim, grade)?;
        Ok(Self {
            dim,
            grade,
            coords: DVector::zeros(binomial(dim, grade)),
        })
    }

    pub fn from_coords(dim: usize, grade: usize, coords: DVector<f64>) -> Result<Self> {
        check_dim(dim)?;
        check_grade(dim, grade)?;
        let expected = binomial(dim, grade);
        if coords.len() != expected {
            return Err(ExteriorError::DimensionMismatch {
                expected,
                found: coords.len(),
            });
        }
        Ok(Self { dim, grade, coords })
    }

    /// The basis blade `e_{i_1}∧…∧e_{i_m}`.
    pub fn blade(index: &MultiIndex) -> Result<Self> {
        let mut v = Self::zero(index.dim(), index.grade())?;
        v.coords[index.rank()] = 1.0;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    pub fn coord(&self, index: &MultiIndex) -> f64 {
        self.coords[index.rank()]
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            grade: self.grade,
            coords: &self.coords * factor,
        }
    }

    /// Unit vector in the same direction; the zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / n)
        }
    }

    /// Exterior product of two homogeneous elements.
    pub fn wedge(&self, other: &ExteriorVector) -> Result<ExteriorVector> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let grade = self.grade + other.grade;
        check_grade(self.dim, grade)?;
        let mut out = ExteriorVector::zero(self.dim, grade)?;
        let left = MultiIndex::all(self.dim, self.grade);
        let right = MultiIndex::all(self.dim, other.grade);
        let mut merged = Vec::with_capacity(grade);
        for (a, ia) in left.iter().enumerate() {
            let ca = self.coords[a];
            if ca == 0.0 {
                continue;
            }
            for (b, ib) in right.iter().enumerate() {
                let cb = other.coords[b];
                if cb == 0.0 || ib.entries.iter().any(|e| ia.entries.contains(e)) {
                    continue;
                }
                merged.clear();
                merged.extend_from_slice(&ia.entries);
                merged.extend_from_slice(&ib.entries);
                let sign = permutation_sign(&merged);
                merged.sort_unstable();
                let target = MultiIndex {
                    dim: self.dim,
                    entries: merged.clone(),
                };
                out.coords[target.rank()] += sign * ca * cb;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for ExteriorVector {
    /// Nonzero terms in lexicographic order, e.g. `e1∧e2 - 0.5·e2∧e3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (index, c) in MultiIndex::all(self.dim, self.grade).iter().zip(self.coords.iter()) {
            if *c == 0.0 {
                continue;
            }
            let sign = if c.is_sign_negative() { "-" } else { "+" };
            match (first, sign) {
                (true, "-") => write!(f, "-")?,
                (true, _) => {}
                (false, s) => write!(f, " {s} ")?,
            }
            if c.abs() == 1.0 {
                write!(f, "{index}")?;
            } else {
                write!(f, "{}·{index}", c.abs())?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Wedge of vectors in `ℝ^d`: coordinate `J` is the minor of the `d×m`
/// column matrix with rows `J`.
pub fn wedge(vectors: &[DVector<f64>]) -> Result<ExteriorVector> {
    let dim = vectors.first().map(|v| v.len()).ok_or(ExteriorError::GradeOutOfRange { grade: 0, dim: 0 })?;
    for v in vectors {
        if v.len() != dim {
            return Err(ExteriorError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    let columns = DMatrix::from_columns(vectors);
    wedge_columns(&columns)
}

/// Wedge of the columns of a `d×m` matrix.
pub fn wedge_columns(columns: &DMatrix<f64>) -> Result<ExteriorVector> {
    let (dim, grade) = columns.shape();
    check_dim(dim)?;
    check_grade(dim, grade)?;
    let col_idx: Vec<usize> = (0..grade).collect();
    let coords: Vec<f64> = MultiIndex::all(dim, grade)
        .iter()
        .map(|rows| minor(columns, rows.entries(), &col_idx))
        .collect();
    ExteriorVector::from_coords(dim, grade, DVector::from_vec(coords))
}

/// Determinant of the submatrix with the given rows and columns.
pub fn minor(matrix: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    debug_assert_eq!(rows.len(), cols.len());
    match rows.len() {
        0 => 1.0,
        1 => matrix[(rows[0], cols[0])],
        2 => {
            matrix[(rows[0], cols[0])] * matrix[(rows[1], cols[1])]
                - matrix[(rows[0], cols[1])] * matrix[(rows[1], cols[0])]
        }
        n => DMatrix::from_fn(n, n, |r, c| matrix[(rows[r], cols[c])]).determinant(),
    }
}

/// Hodge star `Λ^m → Λ^{d−m}` with the signed convention
/// `*(e_I) = sgn(I, I^c)·e_{I^c}`, so that `v∧*w = ⟨v|w⟩ e₁∧…∧e_d`.
pub fn hodge_star(v: &ExteriorVector) -> ExteriorVector {
    let d = v.dim;
    let mut out = ExteriorVector::zero(d, d - v.grade).expect("grade already validated");
    for index in MultiIndex::all(d, v.grade) {
        let c = v.coords[index.rank()];
        if c == 0.0 {
            continue;
        }
        let comp = index.complement();
        let mut perm = index.entries.clone();
        perm.extend_from_slice(&comp.entries);
        out.coords[comp.rank()] += permutation_sign(&perm) * c;
    }
    out
}

fn check_same_space(v: &ExteriorVector, w: &ExteriorVector) -> Result<()> {
    if v.dim != w.dim {
        return Err(ExteriorError::DimensionMismatch {
            expected: v.dim,
            found: w.dim,
        });
    }
    if v.grade != w.grade {
        return Err(ExteriorError::GradeMismatch {
            left: v.grade,
            right: w.grade,
        });
    }
    Ok(())
}

/// Inner product of two m-vectors; the blade basis is orthonormal.
pub fn exterior_inner(v: &ExteriorVector, w: &ExteriorVector) -> Result<f64> {
    check_same_space(v, w)?;
    Ok(v.coords.dot(&w.coords))
}

/// The same inner product read off as the volume coefficient of `v ∧ *w`.
pub fn exterior_inner_via_star(v: &ExteriorVector, w: &ExteriorVector) -> Result<f64> {
    check_same_space(v, w)?;
    let top = v.wedge(&hodge_star(w))?;
    Ok(top.coords[0])
}

/// The m-th compound of a square matrix, acting on `Λ^m` in lexicographic coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CompoundMatrix {
    dim: usize,
    grade: usize,
    matrix: DMatrix<f64>,
}

impl CompoundMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn apply(&self, v: &ExteriorVector) -> Result<ExteriorVector> {
        if v.dim != self.dim {
            return Err(ExteriorError::DimensionMismatch {
                expected: self.dim,
                found: v.dim,
            });
        }
        if v.grade != self.grade {
            return Err(ExteriorError::GradeMismatch {
                left: self.grade,
                right: v.grade,
            });
        }
        Ok(ExteriorVector {
            dim: self.dim,
            grade: self.grade,
            coords: &self.matrix * &v.coords,
        })
    }
}

pub(crate) fn check_square(s: &DMatrix<f64>) -> Result<usize> {
    let (rows, cols) = s.shape();
    if rows != cols {
        return Err(ExteriorError::NotSquare { rows, cols });
    }
    check_dim(rows)?;
    Ok(rows)
}

/// `Λ^m S`: entry `(J, I)` is the minor of `S` with rows `J` and columns `I`.
pub fn compound_matrix(s: &DMatrix<f64>, grade: usize) -> Result<CompoundMatrix> {
    let dim = check_square(s)?;
    check_grade(dim, grade)?;
    let basis = MultiIndex::all(dim, grade);
    let n = basis.len();
    let mut matrix = DMatrix::zeros(n, n);
    for (r, rows) in basis.iter().enumerate() {
        for (c, cols) in basis.iter().enumerate() {
            matrix[(r, c)] = minor(s, rows.entries(), cols.entries());
        }
    }
    Ok(CompoundMatrix { dim, grade, matrix })
}

/// Induced action `S(v₁∧…∧v_m) = Sv₁∧…∧Sv_m`, extended linearly.
pub fn apply_map(s: &DMatrix<f64>, v: &ExteriorVector) -> Result<ExteriorVector> {
    let dim = check_square(s)?;
    if dim != v.dim {
        return Err(ExteriorError::DimensionMismatch {
            expected: dim,
            found: v.dim,
        });
    }
    compound_matrix(s, v.grade)?.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(d: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v
    }

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_exterior(rng: &mut ChaCha8Rng, d: usize, m: usize) -> ExteriorVector {
        let n = binomial(d, m);
        ExteriorVector::from_coords(d, m, DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn display_of_multivectors() {
        assert_eq!(wedge(&[e(3, 0)]).unwrap().to_string(), "e1");
        assert_eq!(wedge(&[e(3, 1), e(3, 0)]).unwrap().to_string(), "-e1∧e2");
        let v = ExteriorVector::from_coords(3, 2, DVector::from_vec(vec![1.0, 0.0, -0.5])).unwrap();
        assert_eq!(v.to_string(), "e1∧e2 - 0.5·e2∧e3");
        assert_eq!(ExteriorVector::zero(2, 1).unwrap().to_string(), "0");
    }

    #[test]
    fn multi_index_rank_matches_enumeration() {
        for d in 1..=7 {
            for m in 0..=d {
                let all = MultiIndex::all(d, m);
                assert_eq!(all.len(), binomial(d, m));
                for (pos, idx) in all.iter().enumerate() {
                    assert_eq!(idx.rank(), pos, "d={d} m={m} {idx}");
                }
            }
        }
    }

    #[test]
    fn multi_index_rejects_bad_entries() {
        assert!(MultiIndex::new(3, vec![1, 1]).is_err());
        assert!(MultiIndex::new(3, vec![2, 1]).is_err());
        assert!(MultiIndex::new(3, vec![0, 3]).is_err());
        assert!(MultiIndex::new(3, vec![0, 2]).is_ok());
    }

    #[test]
    fn wedge_of_basis_vectors_is_blade() {
        let v = wedge(&[e(3, 0), e(3, 1)]).unwrap();
        assert_eq!(v.coords().as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn wedge_is_alternating() {
        let v = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let w = wedge(&[v.clone(), v]).unwrap();
        assert!(w.coords().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn wedge_plucker_coordinates_in_r4() {
        let a = [1.0, 2.0, 0.0, 1.0];
        let b = [0.0, 1.0, 1.0, 3.0];
        let v = wedge(&[DVector::from_row_slice(&a), DVector::from_row_slice(&b)]).unwrap();
        // brute-force 2x2 minors over rows (i, j), i < j
        let mut expected = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                expected.push(a[i] * b[j] - a[j] * b[i]);
            }
        }
        assert_eq!(expected, vec![1.0, 1.0, 3.0, 2.0, 5.0, -1.0]);
        assert_eq!(v.coords().as_slice(), expected.as_slice());
    }

    #[test]
    fn wedge_rejects_bad_input() {
        assert!(matches!(
            wedge(&[e(3, 0), e(2, 1)]),
            Err(ExteriorError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            wedge(&[e(2, 0), e(2, 1), e(2, 0)]),
            Err(ExteriorError::GradeOutOfRange { .. })
        ));
    }

    #[test]
    fn hodge_star_examples() {
        let e12 = ExteriorVector::blade(&MultiIndex::new(3, vec![0, 1]).unwrap()).unwrap();
        let e3 = ExteriorVector::blade(&MultiIndex::new(3, vec![2]).unwrap()).unwrap();
        assert_eq!(hodge_star(&e12), e3);

        let e2 = ExteriorVector::blade(&MultiIndex::new(3, vec![1]).unwrap()).unwrap();
        let e13 = ExteriorVector::blade(&MultiIndex::new(3, vec![0, 2]).unwrap()).unwrap();
        // permutation (2,1,3) is odd
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(hodge_star(&e2), e13.scale(-1.0));
    }

    #[test]
    fn double_star_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=6 {
            for m in 0..=d {
                let v = random_exterior(&mut rng, d, m);
                let sign = if (m * (d - m)) % 2 == 0 { 1.0 } else { -1.0 };
                let back = hodge_star(&hodge_star(&v));
                let diff = (back.coords() - v.coords() * sign).amax();
                assert!(diff <= 1e-14, "d={d} m={m} diff={diff}");
            }
        }
    }

    #[test]
    fn blades_are_orthonormal() {
        for d in 1..=5 {
            for m in 0..=d {
                let all = MultiIndex::all(d, m);
                for a in &all {
                    for b in &all {
                        let va = ExteriorVector::blade(a).unwrap();
                        let vb = ExteriorVector::blade(b).unwrap();
                        let expected = if a == b { 1.0 } else { 0.0 };
                        assert_eq!(exterior_inner(&va, &vb).unwrap(), expected);
                        assert_eq!(exterior_inner_via_star(&va, &vb).unwrap(), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn inner_product_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=6 {
            for m in 0..=d {
                for _ in 0..5 {
                    let v = random_exterior(&mut rng, d, m);
                    let w = random_exterior(&mut rng, d, m);
                    let dot = exterior_inner(&v, &w).unwrap();
                    let star = exterior_inner_via_star(&v, &w).unwrap();
                    let scale = v.norm() * w.norm();
                    assert!((dot - star).abs() <= 1e-12 * scale, "d={d} m={m}");
                }
            }
        }
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        let a = ExteriorVector::zero(3, 1).unwrap();
        let b = ExteriorVector::zero(3, 2).unwrap();
        let c = ExteriorVector::zero(4, 1).unwrap();
        assert!(matches!(exterior_inner(&a, &b), Err(ExteriorError::GradeMismatch { .. })));
        assert!(matches!(exterior_inner(&a, &c), Err(ExteriorError::DimensionMismatch { .. })));
    }

    #[test]
    fn compound_of_identity_and_diagonal() {
        for d in 1..=5 {
            for m in 0..=d {
                let c = compound_matrix(&DMatrix::identity(d, d), m).unwrap();
                assert_eq!(c.matrix(), &DMatrix::identity(binomial(d, m), binomial(d, m)));
            }
        }
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 5.0]));
        let c = compound_matrix(&diag, 2).unwrap();
        assert_eq!(c.matrix(), &DMatrix::from_diagonal(&DVector::from_vec(vec![6.0, 10.0, 15.0])));
    }

    #[test]
    fn compound_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_matrix(&mut rng, 4);
        let c0 = compound_matrix(&s, 0).unwrap();
        assert_eq!(c0.matrix(), &DMatrix::identity(1, 1));
        let cd = compound_matrix(&s, 4).unwrap();
        assert_relative_eq!(cd.matrix()[(0, 0)], s.determinant(), max_relative = 1e-12);
        assert!(matches!(compound_matrix(&s, 5), Err(ExteriorError::GradeOutOfRange { .. })));
        assert!(matches!(
            compound_matrix(&DMatrix::zeros(2, 3), 1),
            Err(ExteriorError::NotSquare { .. })
        ));
        assert!(matches!(
            compound_matrix(&DMatrix::zeros(13, 13), 1),
            Err(ExteriorError::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn apply_map_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_exterior(&mut rng, 4, 2);
        assert_eq!(apply_map(&DMatrix::identity(4, 4), &v).unwrap(), v);

        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        let top = ExteriorVector::blade(&MultiIndex::new(2, vec![0, 1]).unwrap()).unwrap();
        assert_eq!(apply_map(&diag, &top).unwrap(), top.scale(6.0));
    }

    #[test]
    fn apply_map_commutes_with_wedge() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for d in 1..=5 {
            for m in 1..=d {
                let s = random_matrix(&mut rng, d);
                let vs: Vec<DVector<f64>> =
                    (0..m).map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))).collect();
                let lhs = apply_map(&s, &wedge(&vs).unwrap()).unwrap();
                let images: Vec<DVector<f64>> = vs.iter().map(|v| &s * v).collect();
                let rhs = wedge(&images).unwrap();
                let diff = (lhs.coords() - rhs.coords()).amax();
                assert!(diff <= 1e-12 * (1.0 + rhs.norm()), "d={d} m={m}");
            }
        }
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d in 2..=5 {
            for m in 0..=d {
                let a = random_matrix(&mut rng, d);
                let v = random_exterior(&mut rng, d, m);
                let w = random_exterior(&mut rng, d, m);
                let lhs = exterior_inner(&apply_map(&a, &v).unwrap(), &w).unwrap();
                let rhs = exterior_inner(&v, &apply_map(&a.transpose(), &w).unwrap()).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "d={d} m={m}");
            }
        }
    }

    #[test]
    fn general_wedge_matches_vector_wedge() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let vs: Vec<DVector<f64>> = (0..3).map(|_| DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0))).collect();
        let left = wedge(&vs[..2]).unwrap();
        let right = wedge(&vs[2..]).unwrap();
        let joined = left.wedge(&right).unwrap();
        let direct = wedge(&vs).unwrap();
        assert!((joined.coords() - direct.coords()).amax() <= 1e-14);
    }
}
