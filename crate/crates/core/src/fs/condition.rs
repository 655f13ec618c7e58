use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::criterion::real_eigenvectors;
use super::{FsError, LinearFamily, Result};
use crate::exterior::{binomial, compound_matrix, wedge, ExteriorVector, MultiIndex};
use crate::sampling::{gaussian_vector, stream_rng};
use crate::singular::SingularSpectrum;

/// Outcome of a `C(m)` / `C(s)` check.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// The condition holds for a structural reason (trivial grade).
    CertifiedPass { reason: String },
    /// No failure among the sampled and candidate multivectors. Not a proof.
    EmpiricalPass { samples: usize, margin: f64 },
    Fail(FailEvidence),
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }

    pub fn is_pass(&self) -> bool {
        !self.is_fail()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::CertifiedPass { .. } => "CertifiedPass",
            Verdict::EmpiricalPass { .. } => "EmpiricalPass",
            Verdict::Fail(_) => "Fail",
        }
    }

    pub fn evidence(&self) -> Option<&FailEvidence> {
        match self {
            Verdict::Fail(e) => Some(e),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailEvidence {
    pub cause: FailCause,
    /// Explicit decomposable witness, when one could be constructed.
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FailCause {
    /// Fewer maps than `dim Λ^m`, so no orbit can span.
    Cardinality { grade: usize, maps: usize, required: usize },
    /// `{S_i v}` spans only a `rank`-dimensional subspace of `Λ^m`; `complement`
    /// is an orthonormal basis of its orthogonal complement.
    RankDeficient {
        grade: usize,
        rank: usize,
        required: usize,
        v: ExteriorVector,
        complement: Vec<ExteriorVector>,
    },
    /// A sampled quadruple admitted no single map pairing both grades.
    JointPairing { margin: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// Nonzero decomposable `v, w` with `⟨S_i v|w⟩ = 0` for every `i`.
    Pair { v: ExteriorVector, w: ExteriorVector },
    /// `v, w ∈ Λ^m` and their extensions `v∧x, w∧y ∈ Λ^{m+1}` such that no
    /// single map pairs both grades non-trivially.
    Quadruple {
        v: ExteriorVector,
        w: ExteriorVector,
        v_ext: ExteriorVector,
        w_ext: ExteriorVector,
    },
}

impl Witness {
    /// Largest normalized pairing over the family; small values confirm the witness.
    pub fn worst_pairing(&self, fam: &LinearFamily) -> Result<f64> {
        match self {
            Witness::Pair { v, w } => {
                let act = GradeAction::new(fam, v.grade())?;
                Ok((0..fam.len()).map(|i| act.pairing(i, v, w)).fold(0.0, f64::max))
            }
            Witness::Quadruple { v, w, v_ext, w_ext } => {
                let low = GradeAction::new(fam, v.grade())?;
                let high = GradeAction::new(fam, v_ext.grade())?;
                Ok((0..fam.len())
                    .map(|i| low.pairing(i, v, w).min(high.pairing(i, v_ext, w_ext)))
                    .fold(0.0, f64::max))
            }
        }
    }
}

/// Compound matrices of every family member on one grade, with their norms.
pub(crate) struct GradeAction {
    grade: usize,
    compounds: Vec<DMatrix<f64>>,
    norms: Vec<f64>,
}

impl GradeAction {
    pub(crate) fn new(fam: &LinearFamily, grade: usize) -> Result<Self> {
        let mut compounds = Vec::with_capacity(fam.len());
        let mut norms = Vec::with_capacity(fam.len());
        for s in fam.maps() {
            compounds.push(compound_matrix(s, grade)?.into_matrix());
            let spec = SingularSpectrum::of_unchecked(s);
            norms.push(spec.values()[..grade].iter().product());
        }
        Ok(Self { grade, compounds, norms })
    }

    /// `|⟨Λ^m S_i v | w⟩| / (‖Λ^m S_i‖ ‖v‖ ‖w‖)`.
    pub(crate) fn pairing(&self, i: usize, v: &ExteriorVector, w: &ExteriorVector) -> f64 {
        let raw = w.coords().dot(&(&self.compounds[i] * v.coords()));
        let scale = self.norms[i] * v.norm() * w.norm();
        if scale == 0.0 {
            0.0
        } else {
            raw.abs() / scale
        }
    }
}

struct SpanAnalysis {
    margin: f64,
    rank: usize,
    complement: Vec<DVector<f64>>,
}

/// Numerical rank of `{Λ^m S_i v}` after normalizing each image.
fn span_analysis(act: &GradeAction, v: &ExteriorVector, tol: f64, want_complement: bool) -> SpanAnalysis {
    let n = v.coords().len();
    let k = act.compounds.len();
    let cols = k.max(n);
    let mut m = DMatrix::zeros(n, cols);
    for (i, c) in act.compounds.iter().enumerate() {
        let img = c * v.coords();
        let norm = img.norm();
        if norm > 0.0 {
            m.set_column(i, &(img / norm));
        }
    }
    let svd = m.svd(want_complement, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma_max = svd.singular_values[order[0]];
    let sigma_n = svd.singular_values[order[n - 1]];
    let margin = if sigma_max > 0.0 { sigma_n / sigma_max } else { 0.0 };
    let rank = order
        .iter()
        .filter(|&&j| svd.singular_values[j] > tol * sigma_max)
        .count()
        .min(n);
    let complement = if want_complement && rank < n {
        let u = svd.u.as_ref().expect("requested U");
        order[rank..n].iter().map(|&j| u.column(j).into_owned()).collect()
    } else {
        Vec::new()
    };
    SpanAnalysis { margin, rank, complement }
}

/// Factors `b₁, …, b_m` with `b₁∧…∧b_m = u`, if `u` is a nonzero decomposable m-vector.
pub fn decomposable_factors(u: &ExteriorVector, tol: f64) -> Option<Vec<DVector<f64>>> {
    let d = u.dim();
    let m = u.grade();
    let unorm = u.norm();
    if unorm == 0.0 {
        return None;
    }
    if m == 0 {
        return Some(Vec::new());
    }
    // kernel of x ↦ u∧x has dimension m exactly when u is decomposable
    let rows = binomial(d, m + 1).max(d);
    let mut w = DMatrix::zeros(rows, d);
    for k in 0..d {
        let ek = ExteriorVector::blade(&MultiIndex::new(d, vec![k]).ok()?).ok()?;
        if m < d {
            let prod = u.wedge(&ek).ok()?;
            w.view_mut((0, k), (prod.coords().len(), 1)).copy_from(prod.coords());
        }
    }
    let svd = w.svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let cutoff = tol.sqrt() * unorm;
    let kernel: Vec<usize> = order.iter().copied().filter(|&j| svd.singular_values[j] <= cutoff).collect();
    if kernel.len() != m {
        return None;
    }
    let mut factors: Vec<DVector<f64>> = kernel.iter().map(|&j| v_t.row(j).transpose()).collect();
    let candidate = wedge(&factors).ok()?;
    let lambda = candidate.coords().dot(u.coords()) / (unorm * unorm);
    if lambda == 0.0 {
        return None;
    }
    let residual = (candidate.coords() - u.coords() * lambda).norm();
    if residual > tol.sqrt() * candidate.norm() {
        return None;
    }
    factors[0] /= lambda;
    Some(factors)
}

fn canonical_sign(v: ExteriorVector) -> ExteriorVector {
    let v = v.normalized();
    let lead = v.coords().iter().copied().fold(0.0f64, |acc, c| if c.abs() > acc.abs() { c } else { acc });
    if lead < 0.0 {
        v.scale(-1.0)
    } else {
        v
    }
}

/// Deterministic grade-m candidates: coordinate blades, then wedges of real eigenvectors.
fn candidate_blades(fam: &LinearFamily, grade: usize) -> Vec<ExteriorVector> {
    let d = fam.dim();
    let mut out: Vec<ExteriorVector> = MultiIndex::all(d, grade)
        .iter()
        .filter_map(|idx| ExteriorVector::blade(idx).ok())
        .collect();
    const MAX_EIGEN_CANDIDATES: usize = 4096;
    for s in fam.maps() {
        let vecs: Vec<DVector<f64>> = real_eigenvectors(s, 1e-9).into_iter().map(|(_, v)| v).collect();
        if vecs.len() < grade {
            continue;
        }
        for idx in MultiIndex::all(vecs.len(), grade) {
            let chosen: Vec<DVector<f64>> = idx.entries().iter().map(|&j| vecs[j].clone()).collect();
            if let Ok(b) = wedge(&chosen) {
                if b.norm() > 1e-12 {
                    out.push(b.normalized());
                }
            }
            if out.len() >= MAX_EIGEN_CANDIDATES {
                return out;
            }
        }
    }
    out
}

fn find_pair_witness(
    act: &GradeAction,
    v: &ExteriorVector,
    complement: &[DVector<f64>],
    blades: &[ExteriorVector],
    tol: f64,
) -> Option<Witness> {
    let n_maps = act.compounds.len();
    let orthogonal_to_orbit = |w: &ExteriorVector| (0..n_maps).all(|i| act.pairing(i, v, w) <= tol);
    for w in blades {
        if orthogonal_to_orbit(w) {
            return Some(Witness::Pair {
                v: canonical_sign(v.clone()),
                w: canonical_sign(w.clone()),
            });
        }
    }
    for u in complement {
        let w = ExteriorVector::from_coords(v.dim(), act.grade, u.clone()).ok()?;
        if decomposable_factors(&w, tol).is_some() && orthogonal_to_orbit(&w) {
            return Some(Witness::Pair {
                v: canonical_sign(v.clone()),
                w: canonical_sign(w),
            });
        }
    }
    None
}

fn random_decomposable(d: usize, grade: usize, seed: u64, stream: u64) -> ExteriorVector {
    let mut rng = stream_rng(seed, stream);
    let vs: Vec<DVector<f64>> = (0..grade).map(|_| gaussian_vector(&mut rng, d)).collect();
    wedge(&vs).expect("valid shapes").normalized()
}

/// Sampled test of `C(m)`: does `{S_i v}` span `Λ^m` for every decomposable `v ≠ 0`?
pub fn check_cm(fam: &LinearFamily, grade: usize, samples: usize, tol: f64, seed: u64) -> Result<Verdict> {
    let d = fam.dim();
    if grade > d {
        return Err(FsError::GradeOutOfRange { grade, dim: d });
    }
    if samples == 0 {
        return Err(FsError::NoSamples);
    }
    if grade == 0 || grade == d {
        return Ok(Verdict::CertifiedPass {
            reason: format!("grade {grade} is one-dimensional and every map is nonsingular"),
        });
    }
    let required = binomial(d, grade);
    let act = GradeAction::new(fam, grade)?;
    let blades = candidate_blades(fam, grade);

    if fam.len() < required {
        let witness = blades.iter().find_map(|v| {
            let a = span_analysis(&act, v, tol, true);
            find_pair_witness(&act, v, &a.complement, &blades, tol)
        });
        return Ok(Verdict::Fail(FailEvidence {
            cause: FailCause::Cardinality {
                grade,
                maps: fam.len(),
                required,
            },
            witness,
        }));
    }

    let deficient = |v: &ExteriorVector| -> Option<Verdict> {
        let a = span_analysis(&act, v, tol, true);
        if a.rank >= required {
            return None;
        }
        let witness = find_pair_witness(&act, v, &a.complement, &blades, tol);
        let complement = a
            .complement
            .iter()
            .filter_map(|u| ExteriorVector::from_coords(d, grade, u.clone()).ok())
            .collect();
        Some(Verdict::Fail(FailEvidence {
            cause: FailCause::RankDeficient {
                grade,
                rank: a.rank,
                required,
                v: canonical_sign(v.clone()),
                complement,
            },
            witness,
        }))
    };

    let mut margin = f64::INFINITY;
    for v in &blades {
        if let Some(fail) = deficient(v) {
            return Ok(fail);
        }
        margin = margin.min(span_analysis(&act, v, tol, false).margin);
    }

    let margins: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| span_analysis(&act, &random_decomposable(d, grade, seed, i), tol, false).margin)
        .collect();
    if let Some(i) = margins.iter().position(|&m| m <= tol) {
        let v = random_decomposable(d, grade, seed, i as u64);
        if let Some(fail) = deficient(&v) {
            return Ok(fail);
        }
    }
    margin = margins.iter().copied().fold(margin, f64::min);
    Ok(Verdict::EmpiricalPass { samples, margin })
}

fn scalar_one(d: usize) -> ExteriorVector {
    ExteriorVector::from_coords(d, 0, DVector::from_element(1, 1.0)).expect("grade 0 always valid")
}

fn best_extension(v: &ExteriorVector) -> Option<ExteriorVector> {
    (0..v.dim())
        .filter_map(|k| {
            let ek = ExteriorVector::blade(&MultiIndex::new(v.dim(), vec![k]).ok()?).ok()?;
            v.wedge(&ek).ok()
        })
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .filter(|x| x.norm() > 0.0)
}

/// Split a decomposable `u ∈ Λ^{m+1}` into `(v, v∧x = u)` with `v ∈ Λ^m`.
fn split_last_factor(u: &ExteriorVector, tol: f64) -> Option<ExteriorVector> {
    let factors = decomposable_factors(u, tol)?;
    let m = factors.len() - 1;
    if m == 0 {
        return Some(scalar_one(u.dim()));
    }
    wedge(&factors[..m]).ok()
}

/// Turn a grade-m or grade-(m+1) pair witness into a `C(s)` quadruple witness.
fn lift_witness(witness: Option<Witness>, low_grade: usize, tol: f64) -> Option<Witness> {
    match witness? {
        Witness::Pair { v, w } if v.grade() == low_grade => {
            let v_ext = best_extension(&v)?.normalized();
            let w_ext = best_extension(&w)?.normalized();
            Some(Witness::Quadruple { v, w, v_ext, w_ext })
        }
        Witness::Pair { v: u, w: z } if u.grade() == low_grade + 1 => {
            let v = split_last_factor(&u, tol)?;
            let w = split_last_factor(&z, tol)?;
            // rescale the extensions so they equal u and z exactly up to the stored normalization
            Some(Witness::Quadruple {
                v: v.normalized(),
                w: w.normalized(),
                v_ext: u,
                w_ext: z,
            })
        }
        other => Some(other),
    }
}

/// Sampled test of `C(s)` for non-integer `s ∈ (0, d)`.
pub fn check_cs(fam: &LinearFamily, s: f64, samples: usize, tol: f64, seed: u64) -> Result<Verdict> {
    let d = fam.dim();
    if !(s > 0.0 && s < d as f64) {
        return Err(FsError::ExponentOutOfRange { s, dim: d });
    }
    if s.fract() == 0.0 {
        return Err(FsError::IntegerExponent { s });
    }
    if samples == 0 {
        return Err(FsError::NoSamples);
    }
    let m = s.floor() as usize;
    let mut margin = f64::INFINITY;
    for grade in [m, m + 1] {
        match check_cm(fam, grade, samples, tol, seed)? {
            Verdict::Fail(e) => {
                return Ok(Verdict::Fail(FailEvidence {
                    witness: lift_witness(e.witness, m, tol),
                    cause: e.cause,
                }))
            }
            Verdict::EmpiricalPass { margin: g, .. } => margin = margin.min(g),
            Verdict::CertifiedPass { .. } => {}
        }
    }

    let low = GradeAction::new(fam, m)?;
    let high = GradeAction::new(fam, m + 1)?;
    let joint = |q: &(ExteriorVector, ExteriorVector, ExteriorVector, ExteriorVector)| -> f64 {
        (0..fam.len())
            .map(|i| low.pairing(i, &q.0, &q.1).min(high.pairing(i, &q.2, &q.3)))
            .fold(0.0, f64::max)
    };
    let fail_with = |q: (ExteriorVector, ExteriorVector, ExteriorVector, ExteriorVector), margin: f64| {
        Verdict::Fail(FailEvidence {
            cause: FailCause::JointPairing { margin },
            witness: Some(Witness::Quadruple {
                v: q.0,
                w: q.1,
                v_ext: q.2,
                w_ext: q.3,
            }),
        })
    };

    // coordinate-blade quadruples first
    let low_blades: Vec<MultiIndex> = MultiIndex::all(d, m);
    let mut extended: Vec<(ExteriorVector, ExteriorVector)> = Vec::new();
    for idx in &low_blades {
        let v = ExteriorVector::blade(idx)?;
        for k in (0..d).filter(|k| !idx.entries().contains(k)) {
            let ek = ExteriorVector::blade(&MultiIndex::new(d, vec![k])?)?;
            extended.push((v.clone(), v.wedge(&ek)?));
        }
    }
    for (v, v_ext) in &extended {
        for (w, w_ext) in &extended {
            let q = (v.clone(), w.clone(), v_ext.clone(), w_ext.clone());
            let j = joint(&q);
            if j <= tol {
                return Ok(fail_with(q, j));
            }
            margin = margin.min(j);
        }
    }

    let quadruple = |i: u64| {
        let mut rng = stream_rng(seed ^ 0x5eed_c0de, i);
        let mut half = || {
            let vs: Vec<DVector<f64>> = (0..m).map(|_| gaussian_vector(&mut rng, d)).collect();
            let v = if m == 0 { scalar_one(d) } else { wedge(&vs).expect("shapes").normalized() };
            let mut all = vs;
            all.push(gaussian_vector(&mut rng, d));
            let ext = wedge(&all).expect("shapes").normalized();
            (v, ext)
        };
        let (v, v_ext) = half();
        let (w, w_ext) = half();
        (v, w, v_ext, w_ext)
    };
    let joints: Vec<f64> = (0..samples as u64).into_par_iter().map(|i| joint(&quadruple(i))).collect();
    if let Some(i) = joints.iter().position(|&j| j <= tol) {
        return Ok(fail_with(quadruple(i as u64), joints[i]));
    }
    margin = joints.iter().copied().fold(margin, f64::min);
    Ok(Verdict::EmpiricalPass { samples, margin })
}
