//! Test objects: isotropic Gaussian mixtures with closed-form transforms.
//!
//! A mixture f(x) = Σ_k a_k exp(-|x - μ_k|² / (2σ_k²)) on Rⁿ is closed
//! under exactly the operations the observation model applies to it:
//! rotation moves the means, and marginalizing out the trailing n - m
//! coordinates keeps a Gaussian mixture on Rᵐ while scaling each amplitude
//! by (2πσ_k²)^((n-m)/2). Its Fourier transform (convention
//! F(ω) = ∫ f(x) e^{-i<ω,x>} dx) is known in closed form, so every
//! estimator in this crate can be checked against exact values.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FrequencyVector, RotationMatrix};
use crate::rng::RngStream;

/// One isotropic Gaussian bump: a · exp(-|x - μ|² / (2σ²)).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    amplitude: f64,
    mean: DVector<f64>,
    sigma: f64,
}

impl GaussianComponent {
    /// Requires finite amplitude and mean, and 0 < σ < ∞.
    pub fn new(amplitude: f64, mean: DVector<f64>, sigma: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::validation("component amplitude must be finite"));
        }
        if mean.is_empty() || mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation(
                "component mean must be a non-empty finite vector",
            ));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::validation(format!(
                "component width must satisfy 0 < sigma < inf, got {sigma}"
            )));
        }
        Ok(GaussianComponent {
            amplitude,
            mean,
            sigma,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// A finite Gaussian mixture on Rⁿ.
///
/// Serializes to `{"n": ..., "components": [{"amplitude", "mean", "sigma"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianMixtureDto", into = "GaussianMixtureDto")]
pub struct GaussianMixture {
    n: usize,
    components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    /// Requires at least one component and all means in dimension `n`.
    pub fn new(n: usize, components: Vec<GaussianComponent>) -> Result<Self> {
        if n == 0 {
            return Err(Error::dimension("object dimension must be >= 1"));
        }
        if components.is_empty() {
            return Err(Error::validation("mixture needs at least one component"));
        }
        if let Some(c) = components.iter().find(|c| c.mean.len() != n) {
            return Err(Error::dimension(format!(
                "component mean has dimension {}, expected {n}",
                c.mean.len()
            )));
        }
        Ok(GaussianMixture { n, components })
    }

    /// A single centered unit-width bump; its rotated copies are identical,
    /// which makes it the natural zero-variance control object.
    pub fn centered(n: usize, sigma: f64) -> Result<Self> {
        GaussianMixture::new(
            n,
            vec![GaussianComponent::new(1.0, DVector::zeros(n), sigma)?],
        )
    }

    /// Draws a random mixture with `k` components: amplitudes in [0.5, 2],
    /// mean coordinates in [-2, 2], widths in [0.5, 1.5].
    pub fn random(n: usize, k: usize, stream: RngStream) -> Result<Self> {
        if k == 0 {
            return Err(Error::validation("mixture needs at least one component"));
        }
        let mut rng = stream.rng();
        let components = (0..k)
            .map(|_| {
                let amplitude = rng.random_range(0.5..=2.0);
                let mean = DVector::from_fn(n, |_, _| rng.random_range(-2.0..=2.0));
                let sigma = rng.random_range(0.5..=1.5);
                GaussianComponent::new(amplitude, mean, sigma)
            })
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(n, components)
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    /// Closed-form Fourier transform at ω:
    /// Σ_k a_k (2πσ_k²)^{n/2} exp(-σ_k²|ω|²/2) e^{-i<ω,μ_k>}.
    pub fn fourier_eval(&self, omega: &FrequencyVector) -> Result<Complex64> {
        if omega.dim() != self.n {
            return Err(Error::dimension(format!(
                "frequency has dimension {}, object lives in dimension {}",
                omega.dim(),
                self.n
            )));
        }
        let norm_sq = omega.coords().norm_squared();
        let mut acc = Complex64::ZERO;
        for c in &self.components {
            let gauss = (TAU * c.sigma * c.sigma).powf(self.n as f64 / 2.0)
                * (-0.5 * c.sigma * c.sigma * norm_sq).exp();
            let phase = -omega.coords().dot(&c.mean);
            acc += c.amplitude * gauss * Complex64::new(phase.cos(), phase.sin());
        }
        Ok(acc)
    }

    /// The rotated object (R·f)(x) = f(R⁻¹x); each mean moves to R μ_k,
    /// amplitudes and widths are untouched.
    pub fn rotate(&self, r: &RotationMatrix) -> Result<GaussianMixture> {
        if r.dim() != self.n {
            return Err(Error::dimension(format!(
                "rotation of dimension {} applied to object of dimension {}",
                r.dim(),
                self.n
            )));
        }
        let components = self
            .components
            .iter()
            .map(|c| GaussianComponent {
                amplitude: c.amplitude,
                mean: r.matrix() * &c.mean,
                sigma: c.sigma,
            })
            .collect();
        // Dimensions are preserved, so skip revalidation.
        Ok(GaussianMixture {
            n: self.n,
            components,
        })
    }

    /// Integrates out the trailing n - m coordinates, yielding the mixture
    /// on Rᵐ with means truncated and amplitudes scaled by
    /// (2πσ_k²)^{(n-m)/2}. Requires 1 <= m < n.
    pub fn project(&self, m: usize) -> Result<GaussianMixture> {
        if m == 0 {
            return Err(Error::dimension("projection target dimension must be >= 1"));
        }
        if m >= self.n {
            return Err(Error::model(format!(
                "projection must reduce the dimension: m = {m}, n = {}",
                self.n
            )));
        }
        let lost = (self.n - m) as f64;
        let components = self
            .components
            .iter()
            .map(|c| GaussianComponent {
                amplitude: c.amplitude * (TAU * c.sigma * c.sigma).powf(lost / 2.0),
                mean: DVector::from_column_slice(&c.mean.as_slice()[..m]),
                sigma: c.sigma,
            })
            .collect();
        Ok(GaussianMixture { n: m, components })
    }

    /// Fourier transform of the projection of the rotated object, evaluated
    /// at η ∈ Rᵐ (the slice dimension m is taken from η).
    ///
    /// This deliberately walks the observation pipeline, rotate, project,
    /// transform, rather than shortcutting through the ambient transform,
    /// so it can serve as one side of slice-identity checks.
    pub fn projected_fourier_eval(
        &self,
        r: &RotationMatrix,
        eta: &FrequencyVector,
    ) -> Result<Complex64> {
        self.rotate(r)?.project(eta.dim())?.fourier_eval(eta)
    }
}

#[derive(Serialize, Deserialize)]
struct GaussianMixtureDto {
    n: usize,
    components: Vec<ComponentDto>,
}

#[derive(Serialize, Deserialize)]
struct ComponentDto {
    amplitude: f64,
    mean: Vec<f64>,
    sigma: f64,
}

impl From<GaussianMixture> for GaussianMixtureDto {
    fn from(obj: GaussianMixture) -> Self {
        GaussianMixtureDto {
            n: obj.n,
            components: obj
                .components
                .into_iter()
                .map(|c| ComponentDto {
                    amplitude: c.amplitude,
                    mean: c.mean.iter().copied().collect(),
                    sigma: c.sigma,
                })
                .collect(),
        }
    }
}

impl TryFrom<GaussianMixtureDto> for GaussianMixture {
    type Error = Error;

    fn try_from(dto: GaussianMixtureDto) -> Result<Self> {
        let components = dto
            .components
            .into_iter()
            .map(|c| GaussianComponent::new(c.amplitude, DVector::from_vec(c.mean), c.sigma))
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(dto.n, components)
    }
}
