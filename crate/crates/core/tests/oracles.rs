//! Cross-checks against references computed by code that shares nothing
//! with the library's evaluation paths: brute-force spatial integration on
//! a grid, heavy Monte Carlo, and hand-built quadrature ensembles.

use moment_lift::{
    estimate_full_moment, estimate_proj_moment, quadrature_full_moment, FrequencyVector,
    GaussianMixture, MomentQuery, RngStream, RotationEnsemble, RotationMatrix,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn fv(coords: &[f64]) -> FrequencyVector {
    FrequencyVector::from_slice(coords).unwrap()
}

/// Mixture density evaluated in space, rebuilt here from first principles:
/// f(x) = Σ_k a_k exp(−|x − μ_k|² / (2σ_k²)).
fn spatial_density(obj: &GaussianMixture, x: &DVector<f64>) -> f64 {
    obj.components()
        .iter()
        .map(|c| {
            let diff = x - c.mean();
            c.amplitude() * (-diff.norm_squared() / (2.0 * c.sigma() * c.sigma())).exp()
        })
        .sum()
}

/// Midpoint-rule integral of g(x)·e^{−i⟨ω,x⟩} over [−extent, extent]ⁿ.
/// The integrands here decay like Gaussians, so once the box covers the
/// mass the rule is accurate far beyond the tolerances asserted below.
fn grid_transform(
    g: impl Fn(&DVector<f64>) -> f64,
    omega: &DVector<f64>,
    extent: f64,
    step: f64,
) -> Complex64 {
    let n = omega.len();
    let points_per_axis = (2.0 * extent / step).ceil() as usize;
    let axis: Vec<f64> = (0..points_per_axis)
        .map(|i| -extent + (i as f64 + 0.5) * step)
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut index = vec![0usize; n];
    let mut x = DVector::zeros(n);
    loop {
        for (k, &i) in index.iter().enumerate() {
            x[k] = axis[i];
        }
        let phase = -omega.dot(&x);
        sum += g(&x) * Complex64::new(phase.cos(), phase.sin());
        // Odometer increment over the n-dimensional grid.
        let mut k = 0;
        loop {
            if k == n {
                return sum * step.powi(n as i32);
            }
            index[k] += 1;
            if index[k] < points_per_axis {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

fn integration_box(obj: &GaussianMixture) -> f64 {
    obj.components()
        .iter()
        .map(|c| c.mean().amax() + 8.0 * c.sigma())
        .fold(0.0, f64::max)
}

fn rel_err(got: Complex64, reference: Complex64) -> f64 {
    (got - reference).norm() / 1.0_f64.max(reference.norm())
}

#[test]
fn spatial_integration_reproduces_the_frequency_transform() {
    let obj = GaussianMixture::random(2, 2, RngStream::new(101)).unwrap();
    let extent = integration_box(&obj);
    for coords in [[0.0, 0.0], [1.0, 0.5], [-2.5, 1.5], [3.0, -2.5]] {
        let omega = DVector::from_row_slice(&coords);
        let reference = grid_transform(|x| spatial_density(&obj, x), &omega, extent, 0.2);
        let got = obj.fourier_eval(&fv(&coords)).unwrap();
        let err = rel_err(got, reference);
        assert!(err <= 1e-8, "omega {coords:?}: err {err}");
    }
}

#[test]
fn spatial_integration_confirms_the_slice_identity() {
    // The transform of the projection of the rotated object equals the
    // full-space integral of f(Rᵀx)·e^{−i⟨ι(η),x⟩}; the right-hand side
    // is computed here by brute force with no Fourier shortcuts.
    for (n, m, seed) in [(2usize, 1usize, 7u64), (3, 1, 8), (3, 2, 9)] {
        let obj = GaussianMixture::random(n, 2, RngStream::new(seed)).unwrap();
        let r = moment_lift::haar_rotation(n, RngStream::new(seed + 40)).unwrap();
        let eta_coords: Vec<f64> = (0..m).map(|j| 0.9 - 0.5 * j as f64).collect();
        let eta = fv(&eta_coords);

        let mut embedded = vec![0.0; n];
        embedded[..m].copy_from_slice(&eta_coords);
        let omega = DVector::from_row_slice(&embedded);
        let extent = integration_box(&obj);
        let rt = r.matrix().transpose();
        let rotated = |x: &DVector<f64>| spatial_density(&obj, &(&rt * x));
        let step = if n == 3 { 0.25 } else { 0.1 };
        let reference = grid_transform(rotated, &omega, extent, step);

        let got = obj.projected_fourier_eval(&r, &eta).unwrap();
        let err = rel_err(got, reference);
        assert!(err <= 1e-8, "n={n} m={m}: err {err}");
    }
}

/// R(θ) as a rotation matrix; the test builds its own rather than reusing
/// library samplers.
fn planar_rotation(theta: f64) -> RotationMatrix {
    let (s, c) = theta.sin_cos();
    RotationMatrix::try_new(DMatrix::from_row_slice(2, 2, &[c, -s, s, c])).unwrap()
}

#[test]
fn projected_estimator_on_a_quadrature_ensemble_matches_the_oracle() {
    // An ensemble of 4096 evenly spaced planar rotations turns the
    // projected Monte Carlo estimator into a trapezoid rule; it must land
    // on the deterministic quadrature value of the full moment at ι(η).
    let obj = GaussianMixture::random(2, 2, RngStream::new(201)).unwrap();
    let nodes = 4096usize;
    let rotations: Vec<RotationMatrix> = (0..nodes)
        .map(|i| planar_rotation(std::f64::consts::TAU * i as f64 / nodes as f64))
        .collect();
    let ens = RotationEnsemble::from_rotations(2, rotations, 0).unwrap();

    let eta = fv(&[1.3]);
    let query = MomentQuery::new(vec![eta.clone()]).unwrap();
    let estimate = estimate_proj_moment(&obj, &query, 1, &ens).unwrap();

    let full_query = MomentQuery::new(vec![fv(&[1.3, 0.0])]).unwrap();
    let oracle = quadrature_full_moment(&obj, &full_query, nodes).unwrap();
    let err = rel_err(estimate.value, oracle);
    assert!(err <= 1e-8, "err {err}");
}

#[test]
fn full_estimator_matches_so2_quadrature_at_scale() {
    let obj = GaussianMixture::random(2, 2, RngStream::new(301)).unwrap();
    let query = MomentQuery::new(vec![fv(&[0.8, -0.6]), fv(&[-0.4, 1.1])]).unwrap();
    let ens = RotationEnsemble::haar(2, 1_000_000, RngStream::new(302)).unwrap();
    let estimate = estimate_full_moment(&obj, &query, &ens).unwrap();
    let oracle = quadrature_full_moment(&obj, &query, 4096).unwrap();
    let dev = (estimate.value - oracle).norm();
    assert!(estimate.std_error > 0.0);
    assert!(
        dev <= 5.0 * 2.0 * estimate.std_error,
        "deviation {dev} vs std error {}",
        estimate.std_error
    );
}

#[test]
fn so2_quadrature_matches_heavy_monte_carlo() {
    // Off-center single Gaussian, d=1, |ω|=1. Ten independent chunks of
    // 10⁶ samples combine into a 10⁷-sample mean without materializing
    // one giant ensemble; chunk means are independent, so the combined
    // standard error is sqrt(Σ SE_i²)/10.
    let obj = GaussianMixture::new(
        2,
        vec![
            moment_lift::GaussianComponent::new(1.0, DVector::from_row_slice(&[1.0, -0.5]), 0.8)
                .unwrap(),
        ],
    )
    .unwrap();
    let query = MomentQuery::new(vec![fv(&[0.6, 0.8])]).unwrap();
    let base = RngStream::new(401);

    let chunks = 10usize;
    let mut mean = Complex64::new(0.0, 0.0);
    let mut variance_sum = 0.0;
    for c in 0..chunks {
        let ens = RotationEnsemble::haar(2, 1_000_000, base.substream(c as u64)).unwrap();
        let est = estimate_full_moment(&obj, &query, &ens).unwrap();
        mean += est.value / chunks as f64;
        variance_sum += est.std_error * est.std_error;
    }
    let combined_se = variance_sum.sqrt() / chunks as f64;

    let oracle = quadrature_full_moment(&obj, &query, 2048).unwrap();
    let dev = (mean - oracle).norm();
    assert!(
        dev <= 5.0 * 2.0 * combined_se,
        "deviation {dev} vs combined SE {combined_se}"
    );
}

#[test]
fn tilted_ensemble_reweights_to_haar_trace_statistics() {
    // Self-normalized weighted mean of tr R over the tilted ensemble,
    // computed by hand here, against a plain Haar Monte Carlo oracle.
    let count = 100_000usize;
    let tilted = moment_lift::sample_tilted_ensemble(3, 1.0, count, RngStream::new(501)).unwrap();
    let weights = tilted.weights().unwrap();
    let total_weight: f64 = weights.iter().sum();
    let weighted_mean: f64 = tilted
        .rotations()
        .iter()
        .zip(weights)
        .map(|(r, w)| w * r.trace())
        .sum::<f64>()
        / total_weight;
    // Delta-method standard error of the ratio estimator.
    let weighted_var: f64 = tilted
        .rotations()
        .iter()
        .zip(weights)
        .map(|(r, w)| {
            let normalized = w / total_weight;
            let dev = r.trace() - weighted_mean;
            normalized * normalized * dev * dev
        })
        .sum::<f64>();
    let weighted_se = weighted_var.sqrt();

    let haar = RotationEnsemble::haar(3, count, RngStream::new(502)).unwrap();
    let traces: Vec<f64> = haar.rotations().iter().map(|r| r.trace()).collect();
    let haar_mean: f64 = traces.iter().sum::<f64>() / count as f64;
    let haar_var: f64 = traces
        .iter()
        .map(|t| (t - haar_mean) * (t - haar_mean))
        .sum::<f64>()
        / (count as f64 - 1.0);
    let haar_se = (haar_var / count as f64).sqrt();

    let combined = (weighted_se * weighted_se + haar_se * haar_se).sqrt();
    let dev = (weighted_mean - haar_mean).abs();
    assert!(
        dev <= 5.0 * combined,
        "weighted mean {weighted_mean}, Haar mean {haar_mean}, combined SE {combined}"
    );

    // Without the correction the tilt is visible: the raw accepted
    // rotations overrepresent large traces.
    let raw_mean: f64 = tilted.rotations().iter().map(|r| r.trace()).sum::<f64>() / count as f64;
    assert!(
        raw_mean - haar_mean > 20.0 * haar_se,
        "tilt should bias the unweighted mean upward: raw {raw_mean}, Haar {haar_mean}"
    );
}
