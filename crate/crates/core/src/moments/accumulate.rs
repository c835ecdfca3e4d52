//! Deterministic reductions over per-sample moment products.
//!
//! Estimates must be bit-identical at any worker count, so parallelism ends
//! at materializing per-sample products in index order; the mean and
//! variance passes below are single-threaded compensated summation in that
//! fixed order.

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::MomentEstimate;

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub(crate) fn new() -> Self {
        KahanSum::default()
    }

    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Multiplies the factors of one per-sample product in a canonical order
/// (sorted by real part, then imaginary part), so permuting a query tuple
/// permutes only the pre-sort input and the result is bit-identical.
pub(crate) fn canonical_product(mut factors: Vec<Complex64>) -> Complex64 {
    factors.sort_unstable_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    factors
        .into_iter()
        .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f)
}

/// Self-normalized (optionally weighted) mean and standard error of the
/// per-sample products.
///
/// Weights are first scaled by their maximum; this leaves the estimate
/// unchanged (it is invariant under weight scaling) and turns a uniformly
/// weighted run into the literal unweighted computation, so the two agree
/// bit-for-bit. When every product is numerically equal the integrand was
/// rotation-invariant on this ensemble: the mean is that constant and the
/// standard error is exactly zero.
pub(crate) fn summarize(products: &[Complex64], weights: Option<&[f64]>) -> Result<MomentEstimate> {
    let n = products.len();
    if n == 0 {
        return Err(Error::validation(
            "cannot estimate a moment over an empty ensemble",
        ));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::dimension(format!(
                "{} weights for {n} samples",
                w.len()
            )));
        }
    }

    let p0 = products[0];
    if products.iter().all(|p| p.re == p0.re && p.im == p0.im) {
        return Ok(MomentEstimate {
            value: p0,
            std_error: 0.0,
            n_samples: n,
        });
    }

    let scale = match weights {
        Some(w) => {
            let mut max = 0.0_f64;
            for &wi in w {
                if !(wi > 0.0 && wi.is_finite()) {
                    return Err(Error::validation(format!(
                        "importance weights must be strictly positive and finite, got {wi}"
                    )));
                }
                if wi > max {
                    max = wi;
                }
            }
            max
        }
        None => 1.0,
    };
    let weight_at = |i: usize| weights.map_or(1.0, |w| w[i] / scale);

    let mut weight_sum = KahanSum::new();
    let mut re_sum = KahanSum::new();
    let mut im_sum = KahanSum::new();
    for (i, p) in products.iter().enumerate() {
        let w = weight_at(i);
        weight_sum.add(w);
        re_sum.add(w * p.re);
        im_sum.add(w * p.im);
    }
    let total = weight_sum.value();
    let mean = Complex64::new(re_sum.value() / total, im_sum.value() / total);

    let std_error = if n == 1 {
        0.0
    } else {
        // Delta-method variance of the self-normalized estimator,
        // Σ w̄_i² (p_i - mean)² with w̄_i = w_i / Σw, with an n/(n-1)
        // correction so uniform weights reproduce the classical standard
        // error of the mean.
        let mut var_re = KahanSum::new();
        let mut var_im = KahanSum::new();
        for (i, p) in products.iter().enumerate() {
            let wn = weight_at(i) / total;
            let dr = p.re - mean.re;
            let di = p.im - mean.im;
            var_re.add(wn * wn * dr * dr);
            var_im.add(wn * wn * di * di);
        }
        let bessel = n as f64 / (n - 1) as f64;
        (bessel * var_re.value())
            .sqrt()
            .max((bessel * var_im.value()).sqrt())
    };

    Ok(MomentEstimate {
        value: mean,
        std_error,
        n_samples: n,
    })
}
