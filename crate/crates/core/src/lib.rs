//! Moment estimation and recovery for randomly oriented, tomographically
//! projected objects.
//!
//! The observation model: an unknown object in ℝⁿ is rotated by an
//! unobserved random rotation and then projected along the last n − m
//! coordinates onto ℝᵐ. Single projections cannot be aligned, but
//! rotation-averaged products of the projection's frequency transform,
//! the moments implemented in [`moments`], are well-defined statistics of
//! the object alone. The central fact this crate operationalizes is that a
//! degree-d moment of the full object is already determined by projected
//! data whenever d ≤ m: rotate the query frequencies into a common
//! m-dimensional slice ([`geometry::build_slice_frame`]) and evaluate the
//! projected moment there ([`lifting::recover_full_moment`]).
//!
//! Test objects are Gaussian mixtures ([`objects::GaussianMixture`]),
//! whose frequency transforms are available in closed form; every
//! estimator here is therefore checkable against exact references and
//! against deterministic quadrature over SO(2) and SO(3)
//! ([`moments::quadrature_full_moment`]).
//!
//! All randomness flows through named [`rng::RngStream`] values, and the
//! estimators accumulate in a fixed order, so every result in this crate
//! is reproducible bit for bit, independent of thread count.
//!
//! ```
//! use moment_lift::{
//!     recover_full_moment, FrequencyVector, GaussianMixture, MomentQuery, RngStream,
//!     RotationEnsemble,
//! };
//!
//! let object = GaussianMixture::centered(3, 1.0)?;
//! let query = MomentQuery::new(vec![
//!     FrequencyVector::from_slice(&[0.6, -0.2, 0.3])?,
//!     FrequencyVector::from_slice(&[0.1, 0.8, -0.4])?,
//! ])?;
//! let ensemble = RotationEnsemble::haar(3, 200, RngStream::new(1))?;
//! let report = recover_full_moment(&object, &query, 2, &ensemble)?;
//! assert!(report.recovered.value.im.abs() < 1e-12);
//! # Ok::<(), moment_lift::Error>(())
//! ```

pub mod error;
pub mod geometry;
pub mod io;
pub mod lifting;
pub mod moments;
pub mod objects;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::{
    build_slice_frame, build_slice_frame_randomized, canonical_embed, complete_basis,
    complete_basis_randomized, gram_schmidt_span, haar_rotation, haar_rotation_from_rng,
    FrequencyVector, RotationMatrix,
    SliceFrame,
};
pub use lifting::{
    coupled_consistency_check, recover_full_moment, recover_full_moment_randomized,
    relative_residual, slice_choice_stability, LiftReport,
};
pub use moments::{
    estimate_full_moment, estimate_proj_moment, quadrature_full_moment, reweighted_estimate,
    sample_tilted_ensemble, EstimatorMode, MomentEstimate, MomentQuery, QueryBatch,
    RotationEnsemble,
};
pub use objects::{GaussianComponent, GaussianMixture};
pub use rng::RngStream;
