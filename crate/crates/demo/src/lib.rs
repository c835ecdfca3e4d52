//! Browser bindings for the moment recovery pipeline.
//!
//! Three operations back the demo page: draw a random object, recover a
//! full moment from projected data, and compare Haar sampling against
//! tilted sampling with and without importance correction. Each takes and
//! returns JSON strings so the page stays free of custom binary glue.
//!
//! The crate also compiles natively, which keeps its logic testable
//! without a browser toolchain.

use moment_lift::{
    estimate_proj_moment, quadrature_full_moment, recover_full_moment, reweighted_estimate,
    sample_tilted_ensemble, Error, EstimatorMode, FrequencyVector, GaussianMixture,
    MomentEstimate, MomentQuery, QueryBatch, RngStream, RotationEnsemble,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// A fresh random mixture as JSON, ready to feed the other operations.
#[wasm_bindgen]
pub fn generate_object(n: usize, components: usize, seed: u32) -> Result<String, JsError> {
    generate_object_impl(n, components, seed).map_err(into_js)
}

/// Recovers the full moment at the given frequency tuple (JSON array of
/// coordinate arrays) from `samples` projected views through a slice of
/// dimension `m`. For n of 2 or 3 the report carries a deterministic
/// quadrature reference and the relative residual against it.
#[wasm_bindgen]
pub fn recover_moment(
    object_json: &str,
    query_json: &str,
    m: usize,
    samples: usize,
    seed: u32,
) -> Result<String, JsError> {
    recover_moment_impl(object_json, query_json, m, samples, seed).map_err(into_js)
}

/// Estimates one projected moment under (a) uniform views, (b) tilted
/// views taken at face value, and (c) tilted views with importance
/// reweighting, reporting each with its standard error.
#[wasm_bindgen]
pub fn reweight_compare(
    object_json: &str,
    kappa: f64,
    samples: usize,
    seed: u32,
) -> Result<String, JsError> {
    reweight_compare_impl(object_json, kappa, samples, seed).map_err(into_js)
}

fn into_js(err: Error) -> JsError {
    JsError::new(&err.to_string())
}

pub fn generate_object_impl(n: usize, components: usize, seed: u32) -> Result<String, Error> {
    let obj = GaussianMixture::random(n, components, RngStream::new(seed as u64))?;
    Ok(to_json(&obj))
}

pub fn recover_moment_impl(
    object_json: &str,
    query_json: &str,
    m: usize,
    samples: usize,
    seed: u32,
) -> Result<String, Error> {
    let obj = parse_object(object_json)?;
    let coords: Vec<Vec<f64>> = serde_json::from_str(query_json)
        .map_err(|e| Error::validation(format!("query is not an array of coordinate arrays: {e}")))?;
    let freqs = coords
        .iter()
        .map(|c| FrequencyVector::from_slice(c))
        .collect::<Result<Vec<_>, _>>()?;
    let query = MomentQuery::new(freqs)?;

    let ens = RotationEnsemble::haar(obj.dim(), samples, RngStream::new(seed as u64))?;
    let mut report = recover_full_moment(&obj, &query, m, &ens)?;
    if obj.dim() <= 3 {
        let nodes = if obj.dim() == 2 { 2048 } else { 48 };
        let value = quadrature_full_moment(&obj, &query, nodes)?;
        report = report.with_reference(MomentEstimate {
            value,
            std_error: 0.0,
            n_samples: 1,
        });
    }
    Ok(to_json(&report))
}

#[derive(Serialize)]
struct ReweightComparison {
    kappa: f64,
    samples: usize,
    query: Vec<Vec<f64>>,
    haar: MomentEstimate,
    tilted_unweighted: MomentEstimate,
    tilted_reweighted: MomentEstimate,
}

pub fn reweight_compare_impl(
    object_json: &str,
    kappa: f64,
    samples: usize,
    seed: u32,
) -> Result<String, Error> {
    let obj = parse_object(object_json)?;
    let n = obj.dim();
    let m = 2.min(n - 1).max(1);
    let d = 2.min(m);
    let seed = seed as u64;
    let batch = QueryBatch::random(d, m, 1, 1.5, RngStream::with_stream(seed, 1))?;
    let query = &batch.queries()[0];

    // One shared stream: at κ = 0 the tilted sampler reproduces the Haar
    // draws exactly, so all three estimates coincide bit for bit.
    let haar_ens = RotationEnsemble::haar(n, samples, RngStream::new(seed))?;
    let tilted = sample_tilted_ensemble(n, kappa, samples, RngStream::new(seed))?;

    let comparison = ReweightComparison {
        kappa,
        samples,
        query: query.freqs().iter().map(|f| f.as_slice().to_vec()).collect(),
        haar: estimate_proj_moment(&obj, query, m, &haar_ens)?,
        tilted_unweighted: estimate_proj_moment(&obj, query, m, &tilted.unweighted())?,
        tilted_reweighted: reweighted_estimate(&obj, query, EstimatorMode::Projected { m }, &tilted)?,
    };
    Ok(to_json(&comparison))
}

fn parse_object(object_json: &str) -> Result<GaussianMixture, Error> {
    serde_json::from_str(object_json).map_err(|source| Error::Parse {
        path: "<object json>".into(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports are plain trees of numbers")
}
