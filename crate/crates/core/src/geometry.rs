//! Rotations, frequency vectors, and slice frames.
//!
//! The central construction is [`build_slice_frame`]: given frequencies
//! ω_1, ..., ω_d in Rⁿ whose span has dimension at most m, it produces a
//! rotation Q ∈ SO(n) and reduced frequencies η_j ∈ Rᵐ with
//! ω_j = Q ι(η_j), where ι : Rᵐ → Rⁿ pads with zeros. Everything here is
//! deterministic: the same inputs give bit-identical frames on every run.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest tolerated entry of |QᵀQ - I| for a valid rotation matrix.
pub const ORTHONORMALITY_TOL: f64 = 1e-12;

/// Largest tolerated deviation of det Q from +1 for a valid rotation matrix.
pub const DETERMINANT_TOL: f64 = 1e-12;

/// Orthonormality tolerance accepted on inputs of [`complete_basis`].
pub const BASIS_INPUT_TOL: f64 = 1e-10;

/// Default rank tolerance for [`gram_schmidt_span`], relative to the largest
/// input norm.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A frequency-domain evaluation point: a finite vector in Rⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector {
    coords: DVector<f64>,
}

impl FrequencyVector {
    /// Wraps `coords`, rejecting empty or non-finite input.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::dimension("frequency vector must have dimension >= 1"));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("frequency vector has a non-finite coordinate"));
        }
        Ok(FrequencyVector { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// The origin of Rⁿ.
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::dimension("frequency vector must have dimension >= 1"));
        }
        Ok(FrequencyVector {
            coords: DVector::zeros(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn dot(&self, other: &FrequencyVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::dimension(format!(
                "dot product of vectors of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.coords.dot(&other.coords))
    }

    /// First `m` coordinates as a new vector; requires 1 <= m <= dim.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.dim() {
            return Err(Error::dimension(format!(
                "cannot truncate a {}-dimensional vector to {} coordinates",
                self.dim(),
                m
            )));
        }
        Ok(FrequencyVector {
            coords: DVector::from_column_slice(&self.coords.as_slice()[..m]),
        })
    }
}

/// Zero-padding embedding ι : Rᵐ → Rⁿ, η ↦ (η, 0, ..., 0).
///
/// This is the canonical copy of the reduced frequency space inside the
/// ambient one; projected transforms are restrictions of ambient transforms
/// along ι.
pub fn canonical_embed(eta: &FrequencyVector, n: usize) -> Result<FrequencyVector> {
    let m = eta.dim();
    if m > n {
        return Err(Error::dimension(format!(
            "cannot embed a {m}-dimensional vector into dimension {n}"
        )));
    }
    let mut coords = DVector::zeros(n);
    coords.rows_mut(0, m).copy_from(eta.coords());
    FrequencyVector::new(coords)
}

/// An element of SO(n), validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    mat: DMatrix<f64>,
}

impl RotationMatrix {
    /// Validates that `mat` is square, finite, orthonormal to
    /// [`ORTHONORMALITY_TOL`], and has determinant +1 to [`DETERMINANT_TOL`].
    pub fn try_new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() == 0 || mat.nrows() != mat.ncols() {
            return Err(Error::dimension(format!(
                "rotation matrix must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("rotation matrix has a non-finite entry"));
        }
        let defect = orthonormality_defect(&mat);
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::validation(format!(
                "matrix is not orthonormal: max |Q^T Q - I| entry is {defect:.3e}"
            )));
        }
        let det = mat.determinant();
        if (det - 1.0).abs() > DETERMINANT_TOL {
            return Err(Error::validation(format!(
                "matrix is not a proper rotation: determinant is {det:.17}"
            )));
        }
        Ok(RotationMatrix { mat })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::dimension("rotation dimension must be >= 1"));
        }
        Ok(RotationMatrix {
            mat: DMatrix::identity(n, n),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// R v.
    pub fn apply(&self, v: &FrequencyVector) -> Result<FrequencyVector> {
        self.check_dim(v)?;
        FrequencyVector::new(&self.mat * v.coords())
    }

    /// Rᵀ v, which equals R⁻¹ v.
    pub fn apply_transpose(&self, v: &FrequencyVector) -> Result<FrequencyVector> {
        self.check_dim(v)?;
        FrequencyVector::new(self.mat.tr_mul(v.coords()))
    }

    /// self · rhs.
    pub fn compose(&self, rhs: &RotationMatrix) -> Result<RotationMatrix> {
        if self.dim() != rhs.dim() {
            return Err(Error::dimension(format!(
                "cannot compose rotations of dimension {} and {}",
                self.dim(),
                rhs.dim()
            )));
        }
        // The product of two validated rotations can fail revalidation only
        // through rounding; skip the checks.
        Ok(RotationMatrix {
            mat: &self.mat * &rhs.mat,
        })
    }

    /// The inverse rotation; for orthonormal matrices this is the transpose.
    pub fn inverse(&self) -> RotationMatrix {
        RotationMatrix {
            mat: self.mat.transpose(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    /// max |QᵀQ - I| entry; a cheap orthonormality diagnostic.
    pub fn orthonormality_defect(&self) -> f64 {
        orthonormality_defect(&self.mat)
    }

    fn check_dim(&self, v: &FrequencyVector) -> Result<()> {
        if self.dim() != v.dim() {
            return Err(Error::dimension(format!(
                "rotation of dimension {} applied to vector of dimension {}",
                self.dim(),
                v.dim()
            )));
        }
        Ok(())
    }
}

fn orthonormality_defect(mat: &DMatrix<f64>) -> f64 {
    let n = mat.ncols();
    let gram = mat.tr_mul(mat);
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((gram[(i, j)] - target).abs());
        }
    }
    defect
}

/// Draws a Haar-distributed rotation from SO(n).
///
/// Construction: fill an n×n matrix with standard Gaussians, take its QR
/// decomposition, flip the sign of each Q column whose R diagonal entry is
/// negative (making the factorization unique and Q Haar on O(n)), then
/// negate the last column if det Q = -1 to land in SO(n).
pub fn haar_rotation(n: usize, stream: RngStream) -> Result<RotationMatrix> {
    haar_rotation_from_rng(n, &mut stream.rng())
}

/// As [`haar_rotation`], drawing from a caller-managed generator. Consumers
/// that need many rotations from one stream pull them sequentially here.
pub fn haar_rotation_from_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RotationMatrix> {
    if n == 0 {
        return Err(Error::dimension("rotation dimension must be >= 1"));
    }
    let gauss = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(n - 1).neg_mut();
    }
    // q is orthonormal to rounding error by construction; try_new re-checks.
    RotationMatrix::try_new(q)
}

/// Orthonormalizes `vectors` by modified Gram-Schmidt with
/// reorthogonalization, discarding vectors whose residual norm is at most
/// `rank_tol` times the largest input norm.
///
/// Returns the orthonormal basis of the span together with its dimension.
/// The output is bit-identical across runs for identical input.
pub fn gram_schmidt_span(
    vectors: &[FrequencyVector],
    rank_tol: f64,
) -> Result<(Vec<FrequencyVector>, usize)> {
    if !(rank_tol > 0.0 && rank_tol.is_finite()) {
        return Err(Error::validation(format!(
            "rank tolerance must be positive and finite, got {rank_tol}"
        )));
    }
    if vectors.is_empty() {
        return Ok((Vec::new(), 0));
    }
    let n = vectors[0].dim();
    if vectors.iter().any(|v| v.dim() != n) {
        return Err(Error::dimension(
            "gram_schmidt_span inputs must share one ambient dimension",
        ));
    }
    // Rank decisions scale with the data; an all-zero query falls back to
    // an absolute threshold so zero vectors are still discarded.
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
    let threshold = rank_tol * if scale > 0.0 { scale } else { 1.0 };

    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.coords().clone();
        // Two projection passes: plain MGS loses orthogonality near rank
        // deficiency, one reorthogonalization restores it to rounding level.
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&w);
                w.axpy(-c, u, 1.0);
            }
        }
        let norm = w.norm();
        if norm > threshold {
            w /= norm;
            basis.push(w);
        }
    }
    let rank = basis.len();
    let basis = basis
        .into_iter()
        .map(FrequencyVector::new)
        .collect::<Result<Vec<_>>>()?;
    Ok((basis, rank))
}

/// Extends an orthonormal family of size r to a full orthonormal basis of
/// Rⁿ whose first `m` vectors span an m-dimensional subspace containing
/// span(partial); requires r <= m <= n.
///
/// Candidates are the standard basis vectors e_1, ..., e_n. At each step the
/// candidate with the largest residual after orthogonalization against the
/// current family is appended, ties broken by lowest index. With this rule
/// a single greedy pass already realizes the two-stage extension (first to
/// m vectors, then to n), and the procedure is fully deterministic:
/// identical inputs give bit-identical bases.
pub fn complete_basis(
    partial: &[FrequencyVector],
    m: usize,
    n: usize,
) -> Result<Vec<FrequencyVector>> {
    check_completion_dimensions(partial, m, n)?;
    for (i, u) in partial.iter().enumerate() {
        for (j, v) in partial.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            let defect = (u.dot(v)? - target).abs();
            if defect > BASIS_INPUT_TOL {
                return Err(Error::validation(format!(
                    "complete_basis input is not orthonormal: |<u_{i}, u_{j}> - {target}| = {defect:.3e}"
                )));
            }
        }
    }

    let mut basis: Vec<DVector<f64>> = partial.iter().map(|v| v.coords().clone()).collect();
    while basis.len() < n {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for i in 0..n {
            let mut w = DVector::zeros(n);
            w[i] = 1.0;
            for _ in 0..2 {
                for u in &basis {
                    let c = u.dot(&w);
                    w.axpy(-c, u, 1.0);
                }
            }
            let norm = w.norm();
            // Strict comparison keeps the lowest index on ties.
            if best.as_ref().is_none_or(|(_, _, b)| norm > *b) {
                best = Some((i, w, norm));
            }
        }
        let (_, w, norm) = best.expect("n >= 1 candidates");
        if norm <= 0.0 {
            return Err(Error::validation(
                "complete_basis could not find an independent candidate; input family is over-complete",
            ));
        }
        basis.push(w / norm);
    }
    basis.into_iter().map(FrequencyVector::new).collect()
}

/// As [`complete_basis`], but the candidate pool is an endless stream of
/// seeded Gaussian vectors instead of the standard basis. Used to probe that
/// downstream results do not depend on the completion choice.
pub fn complete_basis_randomized(
    partial: &[FrequencyVector],
    m: usize,
    n: usize,
    stream: RngStream,
) -> Result<Vec<FrequencyVector>> {
    check_completion_dimensions(partial, m, n)?;
    let mut rng = stream.rng();
    let mut basis: Vec<DVector<f64>> = partial.iter().map(|v| v.coords().clone()).collect();
    while basis.len() < n {
        let mut w = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&w);
                w.axpy(-c, u, 1.0);
            }
        }
        let norm = w.norm();
        // A Gaussian draw lands in the span of the current family with
        // probability zero; retry covers the pathological rounding case.
        if norm > 1e-8 {
            basis.push(w / norm);
        }
    }
    basis.into_iter().map(FrequencyVector::new).collect()
}

fn check_completion_dimensions(partial: &[FrequencyVector], m: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::dimension("ambient dimension must be >= 1"));
    }
    if !(partial.len() <= m && m <= n) {
        return Err(Error::dimension(format!(
            "basis completion requires r <= m <= n, got r = {}, m = {m}, n = {n}",
            partial.len()
        )));
    }
    if partial.iter().any(|v| v.dim() != n) {
        return Err(Error::dimension(format!(
            "complete_basis inputs must live in dimension {n}"
        )));
    }
    Ok(())
}

/// A rotation Q ∈ SO(n) plus reduced frequencies η_j ∈ Rᵐ satisfying
/// ω_j = Q ι(η_j) for the query the frame was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceFrame {
    q: RotationMatrix,
    etas: Vec<FrequencyVector>,
    m: usize,
}

impl SliceFrame {
    pub fn q(&self) -> &RotationMatrix {
        &self.q
    }

    pub fn etas(&self) -> &[FrequencyVector] {
        &self.etas
    }

    /// Slice dimension m.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Ambient dimension n.
    pub fn n(&self) -> usize {
        self.q.dim()
    }

    /// Reconstructs Q ι(η_j); equals ω_j up to rounding.
    pub fn lifted_frequency(&self, j: usize) -> Result<FrequencyVector> {
        let eta = self.etas.get(j).ok_or_else(|| {
            Error::dimension(format!(
                "frame holds {} frequencies, index {j} is out of range",
                self.etas.len()
            ))
        })?;
        self.q.apply(&canonical_embed(eta, self.n())?)
    }
}

/// Builds the slice frame for a query ω_1, ..., ω_d in Rⁿ and a slice
/// dimension m < n.
///
/// Fails with [`Error::OrderExceedsSlice`] when d > m (such queries cannot
/// be rotated into an m-dimensional slice in general) and with
/// [`Error::Model`] when m >= n.
pub fn build_slice_frame(omegas: &[FrequencyVector], m: usize) -> Result<SliceFrame> {
    build_slice_frame_with(omegas, m, Completion::Deterministic)
}

/// As [`build_slice_frame`], but completes the basis with seeded random
/// candidates. Different streams give different, equally valid frames for
/// the same query; estimates lifted through them must agree statistically.
pub fn build_slice_frame_randomized(
    omegas: &[FrequencyVector],
    m: usize,
    stream: RngStream,
) -> Result<SliceFrame> {
    build_slice_frame_with(omegas, m, Completion::Randomized(stream))
}

enum Completion {
    Deterministic,
    Randomized(RngStream),
}

fn build_slice_frame_with(
    omegas: &[FrequencyVector],
    m: usize,
    completion: Completion,
) -> Result<SliceFrame> {
    if m == 0 {
        return Err(Error::dimension("slice dimension m must be >= 1"));
    }
    let n = match omegas.first() {
        Some(v) => v.dim(),
        None => {
            return Err(Error::dimension(
                "build_slice_frame requires at least one frequency to fix the ambient dimension",
            ))
        }
    };
    if omegas.iter().any(|v| v.dim() != n) {
        return Err(Error::dimension(
            "build_slice_frame inputs must share one ambient dimension",
        ));
    }
    if m >= n {
        return Err(Error::model(format!(
            "slice dimension m = {m} must be strictly below the ambient dimension n = {n}"
        )));
    }
    let d = omegas.len();
    if d > m {
        return Err(Error::OrderExceedsSlice { d, m });
    }

    let (span_basis, rank) = gram_schmidt_span(omegas, DEFAULT_RANK_TOL)?;
    debug_assert!(rank <= d);
    let full = match completion {
        Completion::Deterministic => complete_basis(&span_basis, m, n)?,
        Completion::Randomized(stream) => complete_basis_randomized(&span_basis, m, n, stream)?,
    };
    let mut q = DMatrix::zeros(n, n);
    for (j, u) in full.iter().enumerate() {
        q.column_mut(j).copy_from(u.coords());
    }
    if q.determinant() < 0.0 {
        // The last column has index n > m, so negating it keeps every ω_j
        // inside the span of the first m columns.
        q.column_mut(n - 1).neg_mut();
    }
    let q = RotationMatrix::try_new(q)?;

    let etas = omegas
        .iter()
        .map(|w| q.apply_transpose(w)?.truncated(m))
        .collect::<Result<Vec<_>>>()?;
    Ok(SliceFrame { q, etas, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fv(coords: &[f64]) -> FrequencyVector {
        FrequencyVector::from_slice(coords).unwrap()
    }

    #[test]
    fn embed_pads_with_zeros() {
        let eta = fv(&[1.0, 2.0]);
        let omega = canonical_embed(&eta, 4).unwrap();
        assert_eq!(omega.as_slice(), &[1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn embed_into_same_dimension_is_identity() {
        let eta = fv(&[0.25, -3.5, 7.0]);
        assert_eq!(canonical_embed(&eta, 3).unwrap(), eta);
    }

    #[test]
    fn embed_rejects_shrinking() {
        assert!(canonical_embed(&fv(&[1.0, 2.0, 3.0]), 2).is_err());
    }

    #[test]
    fn rotation_rejects_non_orthonormal() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(RotationMatrix::try_new(m).is_err());
    }

    #[test]
    fn rotation_rejects_reflection() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(RotationMatrix::try_new(m).is_err());
    }

    #[test]
    fn rotation_application_and_inverse_round_trip() {
        let r = haar_rotation(4, RngStream::new(11)).unwrap();
        let v = fv(&[1.0, -2.0, 0.5, 3.0]);
        let w = r.apply(&v).unwrap();
        let back = r.inverse().apply(&w).unwrap();
        for (a, b) in back.as_slice().iter().zip(v.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
        // Rᵀ v must agree with R⁻¹ v exactly: both are the transpose.
        assert_eq!(r.apply_transpose(&w).unwrap(), r.inverse().apply(&w).unwrap());
    }

    #[test]
    fn haar_dimension_one_is_the_identity() {
        let r = haar_rotation(1, RngStream::new(0)).unwrap();
        assert_eq!(r.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn haar_is_a_rotation_for_small_dimensions() {
        for n in 1..=6 {
            for seed in 0..20 {
                let r = haar_rotation(n, RngStream::new(seed)).unwrap();
                assert!(r.orthonormality_defect() <= 1e-13);
                assert_abs_diff_eq!(r.matrix().determinant(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn haar_is_deterministic_per_stream() {
        let a = haar_rotation(5, RngStream::with_stream(42, 9)).unwrap();
        let b = haar_rotation(5, RngStream::with_stream(42, 9)).unwrap();
        assert_eq!(a, b);
        let c = haar_rotation(5, RngStream::with_stream(42, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gram_schmidt_of_axis_multiples() {
        let (basis, rank) =
            gram_schmidt_span(&[fv(&[2.0, 0.0, 0.0]), fv(&[0.0, 3.0, 0.0])], 1e-10).unwrap();
        assert_eq!(rank, 2);
        assert_eq!(basis[0].as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(basis[1].as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn gram_schmidt_discards_dependent_vectors() {
        let (basis, rank) = gram_schmidt_span(
            &[fv(&[1.0, 1.0, 0.0]), fv(&[2.0, 2.0, 0.0]), fv(&[0.0, 0.0, 5.0])],
            1e-10,
        )
        .unwrap();
        assert_eq!(rank, 2);
        assert_eq!(basis.len(), 2);
        let g01 = basis[0].dot(&basis[1]).unwrap();
        assert_abs_diff_eq!(g01, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gram_schmidt_of_nothing_is_empty() {
        let (basis, rank) = gram_schmidt_span(&[], 1e-10).unwrap();
        assert!(basis.is_empty());
        assert_eq!(rank, 0);
    }

    #[test]
    fn gram_schmidt_near_duplicate_is_rank_one() {
        let v = fv(&[1.0, 2.0, -0.5]);
        let mut w = v.coords().clone();
        w[0] += 1e-14;
        let w = FrequencyVector::new(w).unwrap();
        let (_, rank) = gram_schmidt_span(&[v, w], 1e-10).unwrap();
        assert_eq!(rank, 1);
    }

    #[test]
    fn complete_basis_from_empty_is_standard() {
        let basis = complete_basis(&[], 2, 3).unwrap();
        assert_eq!(basis[0].as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(basis[1].as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(basis[2].as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn complete_basis_extends_an_axis_with_the_pivot_rule() {
        // From e_1 the largest-residual candidates are e_2 and e_3, tied at
        // norm 1; lowest index wins each round.
        let basis = complete_basis(&[fv(&[1.0, 0.0, 0.0])], 2, 3).unwrap();
        assert_eq!(basis[0].as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(basis[1].as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(basis[2].as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn complete_basis_is_orthonormal_and_deterministic() {
        let (partial, _) =
            gram_schmidt_span(&[fv(&[1.0, 1.0, 1.0, 0.0]), fv(&[0.0, 1.0, -1.0, 0.5])], 1e-10)
                .unwrap();
        let a = complete_basis(&partial, 3, 4).unwrap();
        let b = complete_basis(&partial, 3, 4).unwrap();
        assert_eq!(a, b);
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(a[i].dot(&a[j]).unwrap(), target, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn complete_basis_rejects_non_orthonormal_input() {
        let err = complete_basis(&[fv(&[1.0, 1.0, 0.0])], 2, 3).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn complete_basis_rejects_inconsistent_sizes() {
        let u = fv(&[1.0, 0.0, 0.0]);
        let v = fv(&[0.0, 1.0, 0.0]);
        assert!(complete_basis(&[u.clone(), v.clone()], 1, 3).is_err());
        assert!(complete_basis(&[u, v], 4, 3).is_err());
    }

    #[test]
    fn randomized_completion_is_orthonormal_and_stream_dependent() {
        let (partial, _) = gram_schmidt_span(&[fv(&[1.0, 0.5, 0.0])], 1e-10).unwrap();
        let a = complete_basis_randomized(&partial, 2, 3, RngStream::new(1)).unwrap();
        let b = complete_basis_randomized(&partial, 2, 3, RngStream::new(1)).unwrap();
        let c = complete_basis_randomized(&partial, 2, 3, RngStream::new(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(a[i].dot(&a[j]).unwrap(), target, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn frame_for_collinear_query_on_the_z_axis() {
        let omegas = [fv(&[0.0, 0.0, 1.0]), fv(&[0.0, 0.0, 2.0])];
        let frame = build_slice_frame(&omegas, 2).unwrap();
        assert_abs_diff_eq!(frame.etas()[0].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(frame.etas()[1].norm(), 2.0, epsilon = 1e-14);
        let g = frame.etas()[0].dot(&frame.etas()[1]).unwrap();
        assert_abs_diff_eq!(g, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(frame.q().matrix().determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn frame_for_zero_query_is_the_identity() {
        let omegas = [fv(&[0.0, 0.0, 0.0]), fv(&[0.0, 0.0, 0.0])];
        let frame = build_slice_frame(&omegas, 2).unwrap();
        assert_eq!(frame.q().matrix(), &DMatrix::identity(3, 3));
        assert_eq!(frame.etas()[0].as_slice(), &[0.0, 0.0]);
        assert_eq!(frame.etas()[1].as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn frame_reconstructs_the_query() {
        let omegas = [fv(&[0.3, -1.2, 0.7, 0.1]), fv(&[1.0, 0.4, -0.2, 2.0])];
        let frame = build_slice_frame(&omegas, 3).unwrap();
        for (j, w) in omegas.iter().enumerate() {
            let lifted = frame.lifted_frequency(j).unwrap();
            for (a, b) in lifted.as_slice().iter().zip(w.as_slice()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn frame_rejects_order_above_slice_dimension() {
        let omegas = [fv(&[1.0, 0.0, 0.0]), fv(&[0.0, 1.0, 0.0]), fv(&[0.0, 0.0, 1.0])];
        let err = build_slice_frame(&omegas, 2).unwrap_err();
        assert!(matches!(err, Error::OrderExceedsSlice { d: 3, m: 2 }));
    }

    #[test]
    fn frame_rejects_slice_dimension_at_or_above_ambient() {
        let omegas = [fv(&[1.0, 0.0]), fv(&[0.0, 1.0])];
        assert!(matches!(build_slice_frame(&omegas, 2), Err(Error::Model(_))));
        assert!(matches!(build_slice_frame(&omegas, 5), Err(Error::Model(_))));
    }

    #[test]
    fn randomized_frame_reconstructs_the_query() {
        let omegas = [fv(&[0.3, -1.2, 0.7]), fv(&[1.0, 0.4, -0.2])];
        let frame = build_slice_frame_randomized(&omegas, 2, RngStream::new(3)).unwrap();
        for (j, w) in omegas.iter().enumerate() {
            let lifted = frame.lifted_frequency(j).unwrap();
            for (a, b) in lifted.as_slice().iter().zip(w.as_slice()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(frame.q().matrix().determinant(), 1.0, epsilon = 1e-12);
    }
}
