//! Monte Carlo and quadrature estimators for rotation-averaged moment
//! tensors.
//!
//! The full moment of order d at frequencies ω_1, ..., ω_d is the Haar
//! expectation E_R[∏_j F(R⁻¹ω_j)] of products of the object's Fourier
//! transform F; the projected moment replaces F(R⁻¹·) by the transform of
//! the tomographic projection of the rotated object. Both are estimated
//! over explicit rotation ensembles, with an optional importance-weighted
//! path for ensembles drawn from a non-uniform viewing law.

mod accumulate;
mod quadrature;

pub use quadrature::quadrature_full_moment;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{haar_rotation_from_rng, FrequencyVector, RotationMatrix};
use crate::objects::GaussianMixture;
use crate::rng::RngStream;

use accumulate::{canonical_product, summarize, KahanSum};

/// Default Monte Carlo sample count.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

/// Default node count for the SO(2) trapezoid rule.
pub const DEFAULT_SO2_NODES: usize = 2048;

/// Default nodes per Euler-angle axis for the SO(3) product rule.
pub const DEFAULT_SO3_NODES: usize = 48;

/// An ordered tuple (ω_1, ..., ω_d) of frequencies sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentQuery {
    freqs: Vec<FrequencyVector>,
}

impl MomentQuery {
    /// Requires d >= 1 and a common dimension.
    pub fn new(freqs: Vec<FrequencyVector>) -> Result<Self> {
        let first = freqs
            .first()
            .ok_or_else(|| Error::validation("moment order d must be >= 1"))?;
        let dim = first.dim();
        if freqs.iter().any(|f| f.dim() != dim) {
            return Err(Error::dimension(
                "all frequencies of a query must share one dimension",
            ));
        }
        Ok(MomentQuery { freqs })
    }

    /// Moment order d.
    pub fn order(&self) -> usize {
        self.freqs.len()
    }

    /// Common dimension of the frequencies.
    pub fn dim(&self) -> usize {
        self.freqs[0].dim()
    }

    pub fn freqs(&self) -> &[FrequencyVector] {
        &self.freqs
    }

    /// The query (ι(η_1), ..., ι(η_d)) obtained by zero-padding every
    /// frequency into dimension `n`.
    pub fn embedded(&self, n: usize) -> Result<MomentQuery> {
        let freqs = self
            .freqs
            .iter()
            .map(|eta| crate::geometry::canonical_embed(eta, n))
            .collect::<Result<Vec<_>>>()?;
        MomentQuery::new(freqs)
    }
}

/// The result of one moment estimation.
///
/// `std_error` is the per-component standard error of the mean, reported as
/// the maximum over the real and imaginary parts; it is zero exactly when
/// the per-sample products were constant (rotation-invariant integrand or a
/// deterministic evaluation) or when `n_samples` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "MomentEstimateDto", into = "MomentEstimateDto")]
pub struct MomentEstimate {
    pub value: Complex64,
    pub std_error: f64,
    pub n_samples: usize,
}

#[derive(Serialize, Deserialize)]
struct MomentEstimateDto {
    value_re: f64,
    value_im: f64,
    std_error: f64,
    n_samples: usize,
}

impl From<MomentEstimate> for MomentEstimateDto {
    fn from(e: MomentEstimate) -> Self {
        MomentEstimateDto {
            value_re: e.value.re,
            value_im: e.value.im,
            std_error: e.std_error,
            n_samples: e.n_samples,
        }
    }
}

impl From<MomentEstimateDto> for MomentEstimate {
    fn from(d: MomentEstimateDto) -> Self {
        MomentEstimate {
            value: Complex64::new(d.value_re, d.value_im),
            std_error: d.std_error,
            n_samples: d.n_samples,
        }
    }
}

/// A batch of same-shaped queries, the unit of the query file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QueryBatchDto", into = "QueryBatchDto")]
pub struct QueryBatch {
    d: usize,
    dim: usize,
    queries: Vec<MomentQuery>,
}

impl QueryBatch {
    /// Requires every query to have order `d` and dimension `dim`. The
    /// batch itself may be empty.
    pub fn new(d: usize, dim: usize, queries: Vec<MomentQuery>) -> Result<Self> {
        if d == 0 || dim == 0 {
            return Err(Error::validation(
                "query batches need positive order and dimension",
            ));
        }
        if let Some(q) = queries.iter().find(|q| q.order() != d || q.dim() != dim) {
            return Err(Error::dimension(format!(
                "batch declares d = {d}, dim = {dim} but contains a query with d = {}, dim = {}",
                q.order(),
                q.dim()
            )));
        }
        Ok(QueryBatch { d, dim, queries })
    }

    /// `count` random queries with coordinates uniform in [-range, range].
    pub fn random(d: usize, dim: usize, count: usize, range: f64, stream: RngStream) -> Result<Self> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::validation(format!(
                "coordinate range must be positive and finite, got {range}"
            )));
        }
        if d == 0 || dim == 0 {
            return Err(Error::validation(
                "query batches need positive order and dimension",
            ));
        }
        let mut rng = stream.rng();
        let queries = (0..count)
            .map(|_| {
                let freqs = (0..d)
                    .map(|_| {
                        let coords: Vec<f64> =
                            (0..dim).map(|_| rng.random_range(-range..=range)).collect();
                        FrequencyVector::from_slice(&coords)
                    })
                    .collect::<Result<Vec<_>>>()?;
                MomentQuery::new(freqs)
            })
            .collect::<Result<Vec<_>>>()?;
        QueryBatch::new(d, dim, queries)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn queries(&self) -> &[MomentQuery] {
        &self.queries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MomentQuery> {
        self.queries.iter()
    }
}

#[derive(Serialize, Deserialize)]
struct QueryBatchDto {
    d: usize,
    dim: usize,
    tuples: Vec<Vec<Vec<f64>>>,
}

impl From<QueryBatch> for QueryBatchDto {
    fn from(b: QueryBatch) -> Self {
        QueryBatchDto {
            d: b.d,
            dim: b.dim,
            tuples: b
                .queries
                .iter()
                .map(|q| q.freqs().iter().map(|f| f.as_slice().to_vec()).collect())
                .collect(),
        }
    }
}

impl TryFrom<QueryBatchDto> for QueryBatch {
    type Error = Error;

    fn try_from(dto: QueryBatchDto) -> Result<Self> {
        let queries = dto
            .tuples
            .into_iter()
            .map(|tuple| {
                let freqs = tuple
                    .iter()
                    .map(|coords| FrequencyVector::from_slice(coords))
                    .collect::<Result<Vec<_>>>()?;
                MomentQuery::new(freqs)
            })
            .collect::<Result<Vec<_>>>()?;
        QueryBatch::new(dto.d, dto.dim, queries)
    }
}

/// A realized sample of the viewing law: rotations, optional importance
/// weights, and the seed they were drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RotationEnsembleDto", into = "RotationEnsembleDto")]
pub struct RotationEnsemble {
    n: usize,
    rotations: Vec<RotationMatrix>,
    weights: Option<Vec<f64>>,
    seed: u64,
}

impl RotationEnsemble {
    /// Draws `count` Haar-uniform rotations from `stream`.
    pub fn haar(n: usize, count: usize, stream: RngStream) -> Result<Self> {
        if count == 0 {
            return Err(Error::validation("ensemble sample count must be >= 1"));
        }
        let mut rng = stream.rng();
        let rotations = (0..count)
            .map(|_| haar_rotation_from_rng(n, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(RotationEnsemble {
            n,
            rotations,
            weights: None,
            seed: stream.seed,
        })
    }

    /// Wraps explicit rotations (all of dimension `n`); `seed` is recorded
    /// for bookkeeping and does not influence the contents.
    pub fn from_rotations(n: usize, rotations: Vec<RotationMatrix>, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::dimension("rotation dimension must be >= 1"));
        }
        if rotations.iter().any(|r| r.dim() != n) {
            return Err(Error::dimension(format!(
                "every rotation of the ensemble must have dimension {n}"
            )));
        }
        Ok(RotationEnsemble {
            n,
            rotations,
            weights: None,
            seed,
        })
    }

    /// Attaches importance weights (strictly positive, finite, one per
    /// rotation).
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.rotations.len() {
            return Err(Error::dimension(format!(
                "{} weights for {} rotations",
                weights.len(),
                self.rotations.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::validation(format!(
                "importance weights must be strictly positive and finite, got {w}"
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    /// The same rotations with the weights dropped; estimators then treat
    /// the ensemble as if it were Haar-drawn, which is exactly the biased
    /// path a reweighting demonstration needs.
    pub fn unweighted(&self) -> RotationEnsemble {
        RotationEnsemble {
            n: self.n,
            rotations: self.rotations.clone(),
            weights: None,
            seed: self.seed,
        }
    }

    /// The coupled ensemble {q · R_i}, weights preserved.
    pub fn left_composed(&self, q: &RotationMatrix) -> Result<RotationEnsemble> {
        if q.dim() != self.n {
            return Err(Error::dimension(format!(
                "rotation of dimension {} composed with ensemble of dimension {}",
                q.dim(),
                self.n
            )));
        }
        let rotations = self
            .rotations
            .iter()
            .map(|r| q.compose(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(RotationEnsemble {
            n: self.n,
            rotations,
            weights: self.weights.clone(),
            seed: self.seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn rotations(&self) -> &[RotationMatrix] {
        &self.rotations
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Serialize, Deserialize)]
struct RotationEnsembleDto {
    n: usize,
    seed: u64,
    rotations: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl From<RotationEnsemble> for RotationEnsembleDto {
    fn from(e: RotationEnsemble) -> Self {
        RotationEnsembleDto {
            n: e.n,
            seed: e.seed,
            rotations: e
                .rotations
                .iter()
                .map(|r| {
                    // Row-major flattening.
                    (0..e.n)
                        .flat_map(|i| (0..e.n).map(move |j| r.matrix()[(i, j)]))
                        .collect()
                })
                .collect(),
            weights: e.weights,
        }
    }
}

impl TryFrom<RotationEnsembleDto> for RotationEnsemble {
    type Error = Error;

    fn try_from(dto: RotationEnsembleDto) -> Result<Self> {
        let n = dto.n;
        if n == 0 {
            return Err(Error::dimension("rotation dimension must be >= 1"));
        }
        let rotations = dto
            .rotations
            .into_iter()
            .map(|flat| {
                if flat.len() != n * n {
                    return Err(Error::dimension(format!(
                        "rotation entry has {} values, expected {}",
                        flat.len(),
                        n * n
                    )));
                }
                RotationMatrix::try_new(nalgebra::DMatrix::from_row_slice(n, n, &flat))
            })
            .collect::<Result<Vec<_>>>()?;
        let ens = RotationEnsemble::from_rotations(n, rotations, dto.seed)?;
        match dto.weights {
            Some(w) => ens.with_weights(w),
            None => Ok(ens),
        }
    }
}

/// Rejection-samples `count` rotations with density proportional to
/// exp(κ · tr R) relative to Haar, the crate's concrete non-uniform viewing
/// law. Each stored weight is the unnormalized inverse density
/// exp(-κ · tr R_i), so self-normalized weighted estimators recover Haar
/// expectations.
///
/// κ = 0 draws the identical rotation sequence as [`RotationEnsemble::haar`]
/// on the same stream (no acceptance variates are consumed), with all
/// weights exactly 1.
pub fn sample_tilted_ensemble(
    n: usize,
    kappa: f64,
    count: usize,
    stream: RngStream,
) -> Result<RotationEnsemble> {
    if n == 0 {
        return Err(Error::dimension("rotation dimension must be >= 1"));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::validation(format!(
            "tilt strength must satisfy kappa >= 0 (kappa = 0 is Haar), got {kappa}"
        )));
    }
    if kappa * n as f64 > 700.0 {
        return Err(Error::validation(format!(
            "tilt strength kappa = {kappa} overflows the weight range in dimension {n}"
        )));
    }
    if count == 0 {
        return Err(Error::validation("ensemble sample count must be >= 1"));
    }

    let mut rng = stream.rng();
    let mut rotations = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut proposals: u64 = 0;
    let budget = (count as u64).saturating_mul(100_000);
    while rotations.len() < count {
        proposals += 1;
        if proposals > budget {
            return Err(Error::validation(format!(
                "rejection sampling with kappa = {kappa} accepted too few proposals; weaken the tilt"
            )));
        }
        let r = haar_rotation_from_rng(n, &mut rng)?;
        let trace = r.trace();
        let accept = if kappa == 0.0 {
            true
        } else {
            let u: f64 = rng.random();
            u < (kappa * (trace - n as f64)).exp()
        };
        if accept {
            weights.push((-kappa * trace).exp());
            rotations.push(r);
        }
    }
    RotationEnsemble::from_rotations(n, rotations, stream.seed)?.with_weights(weights)
}

/// Estimator flavor for [`reweighted_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    /// Full moment: query lives in the ambient dimension n.
    Full,
    /// Projected moment through a slice of dimension m.
    Projected { m: usize },
}

/// Per-sample products ∏_j F(R_iᵀ ω_j) of the full-moment estimator, in
/// ensemble order. Exposed so identity tests can compare estimators sample
/// by sample rather than only in expectation.
pub fn full_moment_products(
    obj: &GaussianMixture,
    query: &MomentQuery,
    ens: &RotationEnsemble,
) -> Result<Vec<Complex64>> {
    if query.dim() != obj.dim() || obj.dim() != ens.n() {
        return Err(Error::dimension(format!(
            "full-moment estimate needs query, object, and ensemble in one dimension; got {} / {} / {}",
            query.dim(),
            obj.dim(),
            ens.n()
        )));
    }
    let rotations = ens.rotations();
    Ok(compute_products(rotations.len(), |i| {
        let r = &rotations[i];
        let factors = query
            .freqs()
            .iter()
            .map(|w| {
                let rotated = r
                    .apply_transpose(w)
                    .expect("dimensions validated before the sample loop");
                obj.fourier_eval(&rotated)
                    .expect("dimensions validated before the sample loop")
            })
            .collect();
        canonical_product(factors)
    }))
}

/// Per-sample products ∏_j (P(R_i·f))^(η_j) of the projected-moment
/// estimator, in ensemble order. Each factor is evaluated through the
/// observation pipeline (rotate, project, transform), never through the
/// ambient transform.
pub fn proj_moment_products(
    obj: &GaussianMixture,
    query: &MomentQuery,
    m: usize,
    ens: &RotationEnsemble,
) -> Result<Vec<Complex64>> {
    if query.dim() != m {
        return Err(Error::dimension(format!(
            "projected query has dimension {}, expected the slice dimension {m}",
            query.dim()
        )));
    }
    if obj.dim() != ens.n() {
        return Err(Error::dimension(format!(
            "object dimension {} does not match ensemble dimension {}",
            obj.dim(),
            ens.n()
        )));
    }
    if m >= obj.dim() {
        return Err(Error::model(format!(
            "slice dimension m = {m} must be strictly below the ambient dimension n = {}",
            obj.dim()
        )));
    }
    let rotations = ens.rotations();
    Ok(compute_products(rotations.len(), |i| {
        // One rotate + project per sample; evaluating the d factors on the
        // shared projected object gives bit-identical values to d separate
        // projected_fourier_eval calls because all of these are pure.
        let projected = obj
            .rotate(&rotations[i])
            .expect("dimensions validated before the sample loop")
            .project(m)
            .expect("dimensions validated before the sample loop");
        let factors = query
            .freqs()
            .iter()
            .map(|eta| {
                projected
                    .fourier_eval(eta)
                    .expect("dimensions validated before the sample loop")
            })
            .collect();
        canonical_product(factors)
    }))
}

/// Monte Carlo estimate of the full moment at `query` over `ens`; weighted
/// self-normalized mean when the ensemble carries weights.
pub fn estimate_full_moment(
    obj: &GaussianMixture,
    query: &MomentQuery,
    ens: &RotationEnsemble,
) -> Result<MomentEstimate> {
    let products = full_moment_products(obj, query, ens)?;
    summarize(&products, ens.weights())
}

/// Monte Carlo estimate of the projected moment at `query` (dimension m)
/// over `ens`; weighted self-normalized mean when the ensemble carries
/// weights.
pub fn estimate_proj_moment(
    obj: &GaussianMixture,
    query: &MomentQuery,
    m: usize,
    ens: &RotationEnsemble,
) -> Result<MomentEstimate> {
    let products = proj_moment_products(obj, query, m, ens)?;
    summarize(&products, ens.weights())
}

/// Self-normalized importance-weighted estimate Σ w_i p_i / Σ w_i. Unlike
/// the plain estimators this refuses to run without weights, so a caller
/// asking for reweighting cannot silently fall back to the biased mean.
pub fn reweighted_estimate(
    obj: &GaussianMixture,
    query: &MomentQuery,
    mode: EstimatorMode,
    ens: &RotationEnsemble,
) -> Result<MomentEstimate> {
    if ens.weights().is_none() {
        return Err(Error::validation(
            "reweighted estimate requires an ensemble with importance weights",
        ));
    }
    match mode {
        EstimatorMode::Full => estimate_full_moment(obj, query, ens),
        EstimatorMode::Projected { m } => estimate_proj_moment(obj, query, m, ens),
    }
}

/// Weighted Kahan total used by the quadrature rules; shares the constant
/// fast path with the Monte Carlo reduction.
pub(crate) fn weighted_total(products: &[Complex64], weights: &[f64]) -> Complex64 {
    debug_assert_eq!(products.len(), weights.len());
    if let Some(p0) = products.first() {
        if products.iter().all(|p| p.re == p0.re && p.im == p0.im) {
            // Constant integrand: the exact expectation is that constant,
            // independent of the (unit-sum) quadrature weights.
            return *p0;
        }
    }
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for (p, w) in products.iter().zip(weights) {
        re.add(w * p.re);
        im.add(w * p.im);
    }
    Complex64::new(re.value(), im.value())
}

#[cfg(feature = "parallel")]
fn compute_products<F>(count: usize, f: F) -> Vec<Complex64>
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    use rayon::prelude::*;
    // Indexed parallel collect preserves order, so the downstream fixed-order
    // reduction sees the same sequence at any worker count.
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn compute_products<F>(count: usize, f: F) -> Vec<Complex64>
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    (0..count).map(f).collect()
}
