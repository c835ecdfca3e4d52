//! End-to-end moment recovery through slice frames.
//!
//! Only projections of the rotated object are observable in the model, yet
//! the full moment at ω_1, ..., ω_d is determined by projected data when
//! d <= m: rotate the query into a common m-dimensional slice with
//! [`build_slice_frame`], evaluate the projected-moment estimator at the
//! reduced frequencies, and read the result as the full moment. The checks
//! in this module run both sides of that equality through structurally
//! different code paths.

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{build_slice_frame, build_slice_frame_randomized, SliceFrame};
use crate::moments::{
    estimate_full_moment, estimate_proj_moment, MomentEstimate, MomentQuery, RotationEnsemble,
};
use crate::objects::GaussianMixture;
use crate::rng::RngStream;

/// Stream indices at and above this offset (relative to an ensemble's seed)
/// are reserved for the internal trials of [`slice_choice_stability`], far
/// away from the low indices callers typically draw their ensembles from.
pub const STABILITY_STREAM_BASE: u64 = 1 << 48;

/// |value - reference| / max(1, |reference|): relative deviation with a
/// unit floor so that near-zero references do not inflate rounding noise
/// into large residuals.
pub fn relative_residual(value: Complex64, reference: Complex64) -> f64 {
    (value - reference).norm() / 1.0_f64.max(reference.norm())
}

/// Outcome of one moment recovery: the frame it went through, the recovered
/// estimate, and (opt-in) a direct reference evaluation with its residual.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftReport {
    pub query: MomentQuery,
    pub frame: SliceFrame,
    pub recovered: MomentEstimate,
    pub reference: Option<MomentEstimate>,
    pub residual: Option<f64>,
}

impl LiftReport {
    /// Attaches a reference estimate; the residual is derived from it, so
    /// the two fields are always present together.
    pub fn with_reference(mut self, reference: MomentEstimate) -> LiftReport {
        self.residual = Some(relative_residual(self.recovered.value, reference.value));
        self.reference = Some(reference);
        self
    }
}

impl Serialize for LiftReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.frame.n();
        let q_row_major: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).map(move |j| self.frame.q().matrix()[(i, j)]))
            .collect();
        let etas: Vec<Vec<f64>> = self
            .frame
            .etas()
            .iter()
            .map(|e| e.as_slice().to_vec())
            .collect();
        let query: Vec<Vec<f64>> = self
            .query
            .freqs()
            .iter()
            .map(|w| w.as_slice().to_vec())
            .collect();

        #[derive(Serialize)]
        struct FrameDto {
            n: usize,
            m: usize,
            q: Vec<f64>,
            etas: Vec<Vec<f64>>,
        }

        let mut s = serializer.serialize_struct("LiftReport", 5)?;
        s.serialize_field("query", &query)?;
        s.serialize_field(
            "frame",
            &FrameDto {
                n,
                m: self.frame.m(),
                q: q_row_major,
                etas,
            },
        )?;
        s.serialize_field("recovered", &self.recovered)?;
        s.serialize_field("reference", &self.reference)?;
        s.serialize_field("residual", &self.residual)?;
        s.end()
    }
}

fn check_recovery_dimensions(
    obj: &GaussianMixture,
    query: &MomentQuery,
    ens: &RotationEnsemble,
) -> Result<()> {
    if query.dim() != obj.dim() || obj.dim() != ens.n() {
        return Err(Error::dimension(format!(
            "moment recovery needs query, object, and ensemble in one ambient dimension; got {} / {} / {}",
            query.dim(),
            obj.dim(),
            ens.n()
        )));
    }
    Ok(())
}

/// Recovers the full moment at `query` from projected data only: builds
/// the slice frame, runs the projected estimator at the reduced
/// frequencies, and reports that estimate as the full moment.
///
/// No direct full-moment reference is computed here; in the observation
/// model the ambient transform is not available, so references are an
/// explicit, separate validation step.
pub fn recover_full_moment(
    obj: &GaussianMixture,
    query: &MomentQuery,
    m: usize,
    ens: &RotationEnsemble,
) -> Result<LiftReport> {
    check_recovery_dimensions(obj, query, ens)?;
    let frame = build_slice_frame(query.freqs(), m)?;
    recover_through_frame(obj, query, frame, ens)
}

/// As [`recover_full_moment`], but the frame's basis completion is
/// randomized from `frame_stream`. Every stream yields a valid frame for
/// the same query; recoveries through different frames must agree within
/// statistical tolerance, and identical streams reproduce identical
/// reports.
pub fn recover_full_moment_randomized(
    obj: &GaussianMixture,
    query: &MomentQuery,
    m: usize,
    ens: &RotationEnsemble,
    frame_stream: RngStream,
) -> Result<LiftReport> {
    check_recovery_dimensions(obj, query, ens)?;
    let frame = build_slice_frame_randomized(query.freqs(), m, frame_stream)?;
    recover_through_frame(obj, query, frame, ens)
}

fn recover_through_frame(
    obj: &GaussianMixture,
    query: &MomentQuery,
    frame: SliceFrame,
    ens: &RotationEnsemble,
) -> Result<LiftReport> {
    let eta_query = MomentQuery::new(frame.etas().to_vec())?;
    let recovered = estimate_proj_moment(obj, &eta_query, frame.m(), ens)?;
    Ok(LiftReport {
        query: query.clone(),
        frame,
        recovered,
        reference: None,
        residual: None,
    })
}

/// Runs the coupling argument as a numerical check: the projected estimate
/// at the frame's η's over {R_i} must equal the full estimate at the ω's
/// over the coupled ensemble {Q · R_i} sample for sample, so their relative
/// difference is pure floating-point error.
pub fn coupled_consistency_check(
    obj: &GaussianMixture,
    query: &MomentQuery,
    m: usize,
    ens: &RotationEnsemble,
) -> Result<f64> {
    check_recovery_dimensions(obj, query, ens)?;
    let frame = build_slice_frame(query.freqs(), m)?;
    let eta_query = MomentQuery::new(frame.etas().to_vec())?;
    let projected = estimate_proj_moment(obj, &eta_query, m, ens)?;
    let coupled = ens.left_composed(frame.q())?;
    let full = estimate_full_moment(obj, query, &coupled)?;
    Ok(relative_residual(projected.value, full.value))
}

/// Probes the frame non-uniqueness left open by the recovery procedure:
/// recovers `query` `trials` times through randomized basis completions,
/// each over a fresh Haar ensemble of the same size as `ens`, and returns
/// the maximum pairwise deviation between the recovered values.
///
/// Per-trial streams are derived from `ens.seed()` at stream indices
/// [`STABILITY_STREAM_BASE`] + 2t and + 2t + 1, so the whole probe is a
/// deterministic function of (object, query, m, ensemble shape, trials).
pub fn slice_choice_stability(
    obj: &GaussianMixture,
    query: &MomentQuery,
    m: usize,
    ens: &RotationEnsemble,
    trials: usize,
) -> Result<f64> {
    if trials < 2 {
        return Err(Error::validation(format!(
            "stability probing needs at least 2 trials, got {trials}"
        )));
    }
    if ens.is_empty() {
        return Err(Error::validation(
            "cannot estimate a moment over an empty ensemble",
        ));
    }
    check_recovery_dimensions(obj, query, ens)?;
    let mut values: Vec<Complex64> = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let frame_stream = RngStream::with_stream(ens.seed(), STABILITY_STREAM_BASE + 2 * t);
        let ens_stream = RngStream::with_stream(ens.seed(), STABILITY_STREAM_BASE + 2 * t + 1);
        let trial_ens = RotationEnsemble::haar(ens.n(), ens.len(), ens_stream)?;
        let report = recover_full_moment_randomized(obj, query, m, &trial_ens, frame_stream)?;
        values.push(report.recovered.value);
    }
    let mut max_dev: f64 = 0.0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            max_dev = max_dev.max((values[i] - values[j]).norm());
        }
    }
    Ok(max_dev)
}
