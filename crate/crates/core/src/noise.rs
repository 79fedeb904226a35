//! Truncated Laplacian noise `Lap_{1−α}(μ, σ)`.
//!
//! The density is the Laplacian density with location `μ` and scale `σ`,
//! restricted to `[μ − 1 + α, μ + 1 − α]` and renormalized by
//! `1 − exp((−1 + α)/σ)`. Truncation is symmetric, so the mean stays `μ`.
//!
//! The solver only touches noise through [`NoiseFamily`] and
//! [`NoiseDistribution`], so another family with the same mean/variance and
//! divergence properties can be dropped in without changing the loop.

use libm::{exp, expm1, fabs, log};
use rand::distributions::Open01;
use rand::{Rng, RngCore};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("location must be finite (got {0})")]
    Location(f64),
    #[error("scale must be positive and finite (got {0})")]
    Scale(f64),
    #[error("truncation parameter must lie in (0, 1) (got {0})")]
    Truncation(f64),
    #[error("|mu| = {mu} exceeds alpha = {alpha}")]
    LocationOutsideRegime { mu: f64, alpha: f64 },
    #[error("sigma = {sigma} exceeds alpha = {alpha}")]
    ScaleOutsideRegime { sigma: f64, alpha: f64 },
}

/// A one-dimensional noise law with an exact CDF.
pub trait NoiseDistribution {
    fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64;
    fn cdf(&self, x: f64) -> f64;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    /// Closed support `(lo, hi)`.
    fn support(&self) -> (f64, f64);
}

/// Builds the per-coordinate noise law from a mean, a scale and `α`.
pub trait NoiseFamily {
    type Dist: NoiseDistribution;

    fn build(&self, mu: f64, sigma: f64, alpha: f64) -> Result<Self::Dist, NoiseError>;
}

/// The truncated Laplacian family.
#[derive(Debug, Clone, Copy, Default)]
pub struct TruncatedLaplaceFamily;

impl NoiseFamily for TruncatedLaplaceFamily {
    type Dist = TruncatedLaplace;

    fn build(&self, mu: f64, sigma: f64, alpha: f64) -> Result<TruncatedLaplace, NoiseError> {
        TruncatedLaplace::new(mu, sigma, alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedLaplace {
    mu: f64,
    sigma: f64,
    alpha: f64,
    /// `exp(−(1 − α)/σ)`: untruncated mass beyond one endpoint, times two.
    tail: f64,
    /// `1 − tail`, computed without cancellation.
    mass: f64,
}

impl TruncatedLaplace {
    /// Accepts any finite `μ`, `σ > 0` and `α ∈ (0, 1)`.
    pub fn new(mu: f64, sigma: f64, alpha: f64) -> Result<Self, NoiseError> {
        if !mu.is_finite() {
            return Err(NoiseError::Location(mu));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(NoiseError::Scale(sigma));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(NoiseError::Truncation(alpha));
        }
        let r = -(1.0 - alpha) / sigma;
        Ok(Self {
            mu,
            sigma,
            alpha,
            tail: exp(r),
            mass: -expm1(r),
        })
    }

    /// Additionally requires `|μ| ≤ α` and `σ ≤ α`, the regime in which the
    /// divergence bound between neighbouring noise laws holds.
    pub fn new_strict(mu: f64, sigma: f64, alpha: f64) -> Result<Self, NoiseError> {
        let dist = Self::new(mu, sigma, alpha)?;
        if fabs(mu) > alpha {
            return Err(NoiseError::LocationOutsideRegime { mu, alpha });
        }
        if sigma > alpha {
            return Err(NoiseError::ScaleOutsideRegime { sigma, alpha });
        }
        Ok(dist)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn half_width(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let y = fabs(x - self.mu);
        if y > self.half_width() {
            return 0.0;
        }
        exp(-y / self.sigma) / (2.0 * self.sigma * self.mass)
    }

    /// Inverse CDF. `u` outside `[0, 1]` is clamped.
    pub fn quantile(&self, u: f64) -> f64 {
        let h = self.half_width();
        let u = u.clamp(0.0, 1.0);
        let y = if u < 0.5 {
            self.sigma * log(2.0 * self.mass * u + self.tail)
        } else {
            -self.sigma * log(2.0 * self.mass * (1.0 - u) + self.tail)
        };
        self.mu + y.clamp(-h, h)
    }

    /// Exact variance; never exceeds `2σ²`.
    pub fn variance_exact(&self) -> f64 {
        let (s, h) = (self.sigma, self.half_width());
        (2.0 * s * s + self.tail * (-2.0 * h * s - 2.0 * s * s - h * h)) / self.mass
    }
}

impl NoiseDistribution for TruncatedLaplace {
    fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile(u)
    }

    fn cdf(&self, x: f64) -> f64 {
        let h = self.half_width();
        let y = x - self.mu;
        if y <= -h {
            0.0
        } else if y >= h {
            1.0
        } else if y < 0.0 {
            ((exp(y / self.sigma) - self.tail) / (2.0 * self.mass)).max(0.0)
        } else {
            (1.0 - (exp(-y / self.sigma) - self.tail) / (2.0 * self.mass)).min(1.0)
        }
    }

    fn mean(&self) -> f64 {
        self.mu
    }

    fn variance(&self) -> f64 {
        self.variance_exact()
    }

    fn support(&self) -> (f64, f64) {
        (self.mu - self.half_width(), self.mu + self.half_width())
    }
}

/// Untruncated zero-mean Laplacian, used by the tree counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laplace {
    scale: f64,
}

impl Laplace {
    /// `scale = 0` is allowed and yields a point mass at zero.
    pub fn new(scale: f64) -> Result<Self, NoiseError> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(NoiseError::Scale(scale));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
        if self.scale == 0.0 {
            return 0.0;
        }
        let mag = -self.scale * log(1.0 - 2.0 * fabs(u));
        if u < 0.0 {
            -mag
        } else {
            mag
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn cdf_endpoints_and_centre() {
        let d = TruncatedLaplace::new(0.05, 0.03, 0.1).unwrap();
        assert_eq!(d.cdf(0.05 - 0.9), 0.0);
        assert_eq!(d.cdf(0.05 + 0.9), 1.0);
        assert!((d.cdf(0.05) - 0.5).abs() < 1e-15);
        assert_eq!(d.support(), (0.05 - 0.9, 0.05 + 0.9));
    }

    #[test]
    fn samples_stay_in_support() {
        let d = TruncatedLaplace::new(0.05, 0.03, 0.1).unwrap();
        let mut rng = crate::rng_stream(3, 0);
        for _ in 0..10_000 {
            let z = d.sample(&mut rng);
            assert!((-0.85..=0.95).contains(&z));
        }
        // extreme uniforms map to the endpoints
        assert_eq!(d.quantile(0.0), 0.05 - 0.9);
        assert_eq!(d.quantile(1.0), 0.05 + 0.9);
    }

    #[test]
    fn quantile_inverts_cdf_on_grid() {
        for &(mu, sigma, alpha) in &[(0.0, 0.05, 0.1), (0.07, 0.01, 0.1), (-0.2, 0.3, 0.3), (0.0, 0.9, 0.05)] {
            let d = TruncatedLaplace::new(mu, sigma, alpha).unwrap();
            for k in 0..=1000 {
                let u = k as f64 / 1000.0;
                assert!((d.cdf(d.quantile(u)) - u).abs() < 1e-12, "mu={mu} sigma={sigma} u={u}");
            }
        }
    }

    #[test]
    fn variance_formula_bounded() {
        let d = TruncatedLaplace::new(0.0, 0.01, 0.1).unwrap();
        let v = d.variance_exact();
        assert!(v > 0.0 && v <= 2.0 * 0.01 * 0.01);
        // heavy truncation pulls the variance well below 2σ²
        let wide = TruncatedLaplace::new(0.0, 2.0, 0.5).unwrap();
        assert!(wide.variance_exact() < 0.5 * 2.0 * 4.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(TruncatedLaplace::new(0.0, 0.0, 0.1), Err(NoiseError::Scale(0.0)));
        assert_eq!(TruncatedLaplace::new(0.0, 0.1, 1.0), Err(NoiseError::Truncation(1.0)));
        assert!(matches!(
            TruncatedLaplace::new(f64::NAN, 0.1, 0.5),
            Err(NoiseError::Location(_))
        ));
        assert!(matches!(
            TruncatedLaplace::new_strict(0.2, 0.05, 0.1),
            Err(NoiseError::LocationOutsideRegime { .. })
        ));
        assert!(matches!(
            TruncatedLaplace::new_strict(0.0, 0.2, 0.1),
            Err(NoiseError::ScaleOutsideRegime { .. })
        ));
        assert!(TruncatedLaplace::new(0.2, 0.2, 0.1).is_ok());
    }

    #[test]
    fn laplace_zero_scale_is_degenerate() {
        let mut rng = crate::rng_stream(1, 0);
        let l = Laplace::new(0.0).unwrap();
        assert!((0..100).all(|_| l.sample(&mut rng) == 0.0));
        let l = Laplace::new(2.0).unwrap();
        let xs: Vec<f64> = (0..200_000).map(|_| l.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 4.0 * (8.0f64 / 200_000.0).sqrt());
        assert!((var - 8.0).abs() < 0.2, "var {var}");
    }
}
