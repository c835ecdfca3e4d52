//! Deterministic quadrature for the Haar expectation on SO(2) and SO(3).
//!
//! SO(2) is a circle, so a uniform trapezoid rule in the rotation angle is
//! spectrally accurate for the smooth periodic integrands that arise here.
//! SO(3) is parameterized by ZYZ Euler angles (α, β, γ) with Haar density
//! sin(β)/(8π²); α and γ are periodic (trapezoid again) while the sin(β)
//! factor breaks periodicity in β, which therefore gets Gauss-Legendre.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::FrequencyVector;
use crate::objects::GaussianMixture;

use super::accumulate::canonical_product;
use super::{weighted_total, MomentQuery};

/// Smallest accepted node count; below this the rules are too coarse to be
/// meaningful oracles.
pub const MIN_QUADRATURE_NODES: usize = 8;

/// Deterministic evaluation of the full moment at `query` by quadrature
/// over the rotation group. `nodes` is the total angle count for n = 2 and
/// the per-axis count for n = 3 (so the SO(3) rule uses nodes³ points).
pub fn quadrature_full_moment(
    obj: &GaussianMixture,
    query: &MomentQuery,
    nodes: usize,
) -> Result<Complex64> {
    if query.dim() != obj.dim() {
        return Err(Error::dimension(format!(
            "query has dimension {}, object lives in dimension {}",
            query.dim(),
            obj.dim()
        )));
    }
    if nodes < MIN_QUADRATURE_NODES {
        return Err(Error::validation(format!(
            "quadrature needs at least {MIN_QUADRATURE_NODES} nodes, got {nodes}"
        )));
    }
    match obj.dim() {
        2 => so2_quadrature(obj, query, nodes),
        3 => so3_quadrature(obj, query, nodes),
        n => Err(Error::UnsupportedGroup { n }),
    }
}

fn so2_quadrature(obj: &GaussianMixture, query: &MomentQuery, nodes: usize) -> Result<Complex64> {
    let mut products = Vec::with_capacity(nodes);
    let weight = 1.0 / nodes as f64;
    let weights = vec![weight; nodes];
    for i in 0..nodes {
        let theta = TAU * i as f64 / nodes as f64;
        let (sin_t, cos_t) = theta.sin_cos();
        let factors = query
            .freqs()
            .iter()
            .map(|w| {
                // R(-θ) ω for R the counterclockwise rotation by θ.
                let x = w.as_slice()[0];
                let y = w.as_slice()[1];
                let v = FrequencyVector::from_slice(&[
                    cos_t * x + sin_t * y,
                    -sin_t * x + cos_t * y,
                ])?;
                obj.fourier_eval(&v)
            })
            .collect::<Result<Vec<_>>>()?;
        products.push(canonical_product(factors));
    }
    Ok(weighted_total(&products, &weights))
}

fn so3_quadrature(obj: &GaussianMixture, query: &MomentQuery, nodes: usize) -> Result<Complex64> {
    let (beta_x, beta_w) = gauss_legendre(nodes)?;
    let mut products = Vec::with_capacity(nodes * nodes * nodes);
    let mut weights = Vec::with_capacity(nodes * nodes * nodes);
    let k = nodes as f64;
    for a in 0..nodes {
        let alpha = TAU * a as f64 / k;
        let (sin_a, cos_a) = alpha.sin_cos();
        for b in 0..nodes {
            // Map the Gauss-Legendre node from [-1, 1] to β ∈ [0, π].
            let beta = 0.5 * PI * (beta_x[b] + 1.0);
            let (sin_b, cos_b) = beta.sin_cos();
            // (2π/K)² · (π/2) w_b · sin(β)/(8π²) per node.
            let node_weight = PI * beta_w[b] * sin_b / (4.0 * k * k);
            for c in 0..nodes {
                let gamma = TAU * c as f64 / k;
                let (sin_c, cos_c) = gamma.sin_cos();
                let factors = query
                    .freqs()
                    .iter()
                    .map(|w| {
                        // R⁻¹ω = Rz(-γ) Ry(-β) Rz(-α) ω for R = Rz(α)Ry(β)Rz(γ).
                        let v = rot_z(w.as_slice().try_into().expect("dimension 3"), cos_a, -sin_a);
                        let v = rot_y(v, cos_b, -sin_b);
                        let v = rot_z(v, cos_c, -sin_c);
                        obj.fourier_eval(&FrequencyVector::from_slice(&v)?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                products.push(canonical_product(factors));
                weights.push(node_weight);
            }
        }
    }
    Ok(weighted_total(&products, &weights))
}

fn rot_z(v: [f64; 3], c: f64, s: f64) -> [f64; 3] {
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

fn rot_y(v: [f64; 3], c: f64, s: f64) -> [f64; 3] {
    [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::validation("Gauss-Legendre order must be >= 1"));
    }
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        // Chebyshev-based initial guess for the i-th root.
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                let (_, d) = legendre_with_derivative(k, x);
                dp = d;
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Ok((nodes, weights))
}

/// (P_k(x), P_k'(x)) via the three-term recurrence; requires k >= 1.
fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for j in 2..=k {
        let jf = j as f64;
        let p_next = ((2.0 * jf - 1.0) * x * p - (jf - 1.0) * p_prev) / jf;
        p_prev = p;
        p = p_next;
    }
    let d = k as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}
