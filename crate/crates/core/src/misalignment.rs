//! The misalignment-gain distribution for Gaussian pointing jitter.
//!
//! With independent zero-mean Gaussian beam-centre offsets of per-axis
//! standard deviation `σ_r` and the radial gain law `A₀ e^(−2r²/w_eq²)`,
//! the gain `h` has density
//!
//! ```text
//! f(x) = γ² / A₀^(γ²) · x^(γ² − 1),   0 ≤ x ≤ A₀,   γ = w_eq / (2σ_r)
//! ```
//!
//! and CDF `(x/A₀)^(γ²)`. Moments are `μ = γ²A₀/(γ²+1)` and
//! `E[X²] − μ² = γ²A₀²/(γ²+2) − μ²`.

use rand::Rng;

use crate::beam::BeamAtReceiver;
use crate::error::{require_positive, Error, Result};
use crate::rng::{split_seed, stream_rng, streams};

/// Samples drawn per independent RNG stream by [`MisalignmentModel::sample`].
pub const SAMPLE_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentModel {
    gamma: f64,
    a0: f64,
    sigma_r: Option<f64>,
    sigma_theta: Option<f64>,
    distance: Option<f64>,
}

/// Value of the density at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Finite(f64),
    /// `γ² < 1` at `x = 0`: the density diverges at the origin.
    Unbounded,
}

impl Density {
    pub fn value(self) -> f64 {
        match self {
            Density::Finite(v) => v,
            Density::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Density::Unbounded)
    }
}

impl MisalignmentModel {
    pub fn new(gamma: f64, a0: f64) -> Result<Self> {
        require_positive("gamma", gamma)?;
        if !(a0 > 0.0 && a0 <= 1.0) {
            return Err(Error::invalid("a0", format!("must lie in (0, 1], got {a0}")));
        }
        Ok(MisalignmentModel {
            gamma,
            a0,
            sigma_r: None,
            sigma_theta: None,
            distance: None,
        })
    }

    /// Model with `A₀ = 1`, the scale measured data is normalised to.
    pub fn normalized(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0)
    }

    /// Builds the model for a link whose net pointing angle has standard
    /// deviation `sigma_theta` radians.
    pub fn from_geometry(beam: &BeamAtReceiver, distance: f64, sigma_theta: f64) -> Result<Self> {
        let gamma = gamma_from_sigma_theta(sigma_theta, beam.w_eq, distance)?;
        let mut model = Self::new(gamma, beam.a0)?;
        model.sigma_r = Some(distance * sigma_theta.tan());
        model.sigma_theta = Some(sigma_theta);
        model.distance = Some(distance);
        Ok(model)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn sigma_r(&self) -> Option<f64> {
        self.sigma_r
    }

    pub fn sigma_theta(&self) -> Option<f64> {
        self.sigma_theta
    }

    pub fn distance(&self) -> Option<f64> {
        self.distance
    }

    /// Same shape rescaled to `A₀ = 1`.
    pub fn to_normalized(&self) -> Self {
        MisalignmentModel { a0: 1.0, ..*self }
    }

    fn exponent(&self) -> f64 {
        self.gamma * self.gamma
    }

    pub fn pdf(&self, x: f64) -> Density {
        let g2 = self.exponent();
        if !(0.0..=self.a0).contains(&x) {
            return Density::Finite(0.0);
        }
        if x == 0.0 {
            return if g2 < 1.0 {
                Density::Unbounded
            } else if g2 == 1.0 {
                Density::Finite(1.0 / self.a0)
            } else {
                Density::Finite(0.0)
            };
        }
        // γ²/A₀ · (x/A₀)^(γ²−1) avoids A₀^(γ²) underflow for large γ.
        Density::Finite(g2 / self.a0 * (x / self.a0).powf(g2 - 1.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.a0 {
            1.0
        } else {
            (x / self.a0).powf(self.exponent())
        }
    }

    /// Inverse CDF, `A₀ p^(1/γ²)`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.a0 * p.clamp(0.0, 1.0).powf(1.0 / self.exponent())
    }

    /// `n` inverse-CDF draws with `U ~ Uniform(0, 1]`.
    ///
    /// Chunk `i` of [`SAMPLE_CHUNK`] draws comes from its own stream
    /// `split_seed(seed, MISALIGNMENT_SAMPLES + i)`, so the output does not
    /// depend on how the work is split across threads.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, chunk) in out.chunks_mut(SAMPLE_CHUNK).enumerate() {
            self.fill_chunk(chunk, seed, i as u64);
        }
        out
    }

    /// Same output as [`sample`](Self::sample), computed on `workers` threads.
    pub fn sample_parallel(&self, n: usize, seed: u64, workers: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        let chunks: Vec<(usize, &mut [f64])> = out.chunks_mut(SAMPLE_CHUNK).enumerate().collect();
        let per_worker = chunks.len().div_ceil(workers.max(1)).max(1);
        let mut chunks = chunks;
        std::thread::scope(|scope| {
            while !chunks.is_empty() {
                let take = per_worker.min(chunks.len());
                let batch: Vec<_> = chunks.drain(..take).collect();
                scope.spawn(move || {
                    for (i, chunk) in batch {
                        self.fill_chunk(chunk, seed, i as u64);
                    }
                });
            }
        });
        out
    }

    fn fill_chunk(&self, chunk: &mut [f64], seed: u64, index: u64) {
        let mut rng = stream_rng(split_seed(seed, index), streams::MISALIGNMENT_SAMPLES);
        for v in chunk {
            let u: f64 = 1.0 - rng.random::<f64>();
            *v = self.quantile(u);
        }
    }

    pub fn mean(&self) -> f64 {
        let g2 = self.exponent();
        g2 * self.a0 / (g2 + 1.0)
    }

    /// Second raw moment `γ²A₀²/(γ²+2)`.
    pub fn second_moment(&self) -> f64 {
        let g2 = self.exponent();
        g2 * self.a0 * self.a0 / (g2 + 2.0)
    }

    pub fn variance(&self) -> f64 {
        // Equivalent to γ²A₀²/(γ²+2) − μ², in a form without cancellation.
        let g2 = self.exponent();
        self.a0 * self.a0 * g2 / ((g2 + 2.0) * (g2 + 1.0) * (g2 + 1.0))
    }
}

/// `γ = w_eq / (2 d tan σ_θ)`.
pub fn gamma_from_sigma_theta(sigma_theta: f64, w_eq: f64, distance: f64) -> Result<f64> {
    require_positive("sigma_theta", sigma_theta)?;
    require_positive("w_eq", w_eq)?;
    require_positive("distance", distance)?;
    if sigma_theta >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "sigma_theta = {sigma_theta} rad is not below pi/2"
        )));
    }
    let sigma_r = distance * sigma_theta.tan();
    Ok(w_eq / (2.0 * sigma_r))
}

/// `σ_θ = atan(w_eq / (2γ d))`.
pub fn sigma_theta_from_gamma(gamma: f64, w_eq: f64, distance: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    require_positive("w_eq", w_eq)?;
    require_positive("distance", distance)?;
    let sigma_r = w_eq / (2.0 * gamma);
    Ok((sigma_r / distance).atan())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};

    const W_EQ: f64 = 1.658_39;
    const D: f64 = 341.0;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn pdf_examples() {
        let flat = MisalignmentModel::normalized(1.0).unwrap();
        assert_eq!(flat.pdf(0.37), Density::Finite(1.0));
        let steep = MisalignmentModel::normalized(3.0).unwrap();
        assert!((steep.pdf(1.0).value() - 9.0).abs() < 1e-12);
        let m = MisalignmentModel::new(2.0, 0.016890).unwrap();
        assert!(rel(m.pdf(0.016890 / 2.0).value(), 29.603_315_571_343_99) < 1e-12);
    }

    #[test]
    fn pdf_outside_support_and_at_origin() {
        let m = MisalignmentModel::new(2.0, 0.5).unwrap();
        assert_eq!(m.pdf(-0.1).value(), 0.0);
        assert_eq!(m.pdf(0.6).value(), 0.0);
        assert_eq!(m.pdf(0.0).value(), 0.0);
        let wide = MisalignmentModel::new(0.5, 0.5).unwrap();
        assert!(wide.pdf(0.0).is_unbounded());
        assert!(wide.pdf(1e-3).value().is_finite());
    }

    #[test]
    #[allow(clippy::approx_constant)] // quoted five-digit value
    fn cdf_examples() {
        let m = MisalignmentModel::new(1.7, 0.2).unwrap();
        assert_eq!(m.cdf(0.2), 1.0);
        assert_eq!(m.cdf(0.0), 0.0);
        let root2 = MisalignmentModel::normalized(2f64.sqrt()).unwrap();
        assert!((root2.cdf(0.70711) - 0.5).abs() < 1e-5);
        assert!((root2.quantile(0.5) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(root2.quantile(1.0), 1.0);
    }

    #[test]
    fn moments_examples() {
        let g1 = MisalignmentModel::normalized(1.0).unwrap();
        assert!((g1.mean() - 0.5).abs() < 1e-15);
        assert!((g1.variance() - 1.0 / 12.0).abs() < 1e-15);
        let g3 = MisalignmentModel::normalized(3.0).unwrap();
        assert!((g3.mean() - 0.9).abs() < 1e-15);
        assert!((g3.variance() - 0.008_181_818_181_818_18).abs() < 1e-15);
        let g = MisalignmentModel::normalized(9.4067).unwrap();
        assert!((g.mean() - 0.988_825).abs() < 1e-6);
        assert!(MisalignmentModel::normalized(1e6).unwrap().variance() < 1e-23);
    }

    #[test]
    fn variance_matches_raw_moment_form() {
        for gamma in [0.3, 1.0, 2.5, 7.0, 40.0] {
            let m = MisalignmentModel::new(gamma, 0.3).unwrap();
            let direct = m.second_moment() - m.mean().powi(2);
            assert!((m.variance() - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn normalization_and_moments_by_quadrature() {
        for gamma in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let m = MisalignmentModel::new(gamma, 0.4).unwrap();
            let tol = Tolerance::relative(1e-12);
            // Split off the origin so the γ<1 singularity sits on an endpoint.
            let total = integrate(|x| m.pdf(x).value(), 0.0, 0.4, tol).unwrap().value;
            assert!((total - 1.0).abs() < 1e-9, "gamma {gamma}: {total}");
            let mean = integrate(|x| x * m.pdf(x).value(), 0.0, 0.4, tol).unwrap().value;
            assert!(rel(mean, m.mean()) < 1e-8);
            let mu = m.mean();
            let var = integrate(|x| (x - mu).powi(2) * m.pdf(x).value(), 0.0, 0.4, tol)
                .unwrap()
                .value;
            assert!(
                rel(var, m.variance()) < 1e-8,
                "gamma {gamma}: {var} vs {}",
                m.variance()
            );
        }
    }

    #[test]
    fn sampler_is_deterministic_and_thread_independent() {
        let m = MisalignmentModel::normalized(2.0).unwrap();
        let a = m.sample(200_000, 11);
        assert_eq!(a, m.sample(200_000, 11));
        assert_eq!(a, m.sample_parallel(200_000, 11, 3));
        assert_ne!(a, m.sample(200_000, 12));
        assert!(a.iter().all(|&x| x > 0.0 && x <= 1.0));
    }

    #[test]
    fn delta_like_and_flat_regimes() {
        // Mass within 1% of the aligned gain is 1 - 0.99^(γ²); it reaches
        // 0.9 only from γ ≈ 15.13 on.
        for gamma in [10.0, 15.0, 15.2, 40.0] {
            let m = MisalignmentModel::normalized(gamma).unwrap();
            let upper = 1.0 - m.cdf(0.99);
            assert!((upper - (1.0 - 0.99f64.powf(gamma * gamma))).abs() < 1e-14);
            assert_eq!(upper >= 0.9, gamma > 15.13, "gamma {gamma}: {upper}");
            assert!(1.0 - m.cdf(0.9) >= 0.9);
        }
        let m = MisalignmentModel::new(1.0, 0.3).unwrap();
        for i in 1..100 {
            let x = 0.3 * i as f64 / 100.0;
            assert!((m.pdf(x).value() - 1.0 / 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_conversions() {
        let unit = (W_EQ / (2.0 * D)).atan();
        assert!((gamma_from_sigma_theta(unit, W_EQ, D).unwrap() - 1.0).abs() < 1e-12);
        assert!((sigma_theta_from_gamma(1.0, W_EQ, D).unwrap() - unit).abs() < 1e-18);
        let g = gamma_from_sigma_theta(1.745e-4, W_EQ, D).unwrap();
        assert!((g - 13.935).abs() < 1e-3, "{g}");
        let g = gamma_from_sigma_theta(2.5851e-4, W_EQ, D).unwrap();
        assert!((g - 9.4064).abs() < 1e-3, "{g}");
        let s = sigma_theta_from_gamma(9.4067, W_EQ, D).unwrap();
        assert!(rel(s, 2.5851e-4) < 1e-4);
        assert!((s.to_degrees() - 0.014_812).abs() < 1e-6);
    }

    #[test]
    fn angle_domain_errors() {
        assert!(matches!(gamma_from_sigma_theta(2.0, W_EQ, D), Err(Error::Domain(_))));
        assert!(gamma_from_sigma_theta(0.0, W_EQ, D).is_err());
        assert!(MisalignmentModel::new(1.0, 1.5).is_err());
        assert!(MisalignmentModel::new(-1.0, 0.5).is_err());
    }

    #[test]
    fn from_geometry_fields_consistent() {
        let beam = BeamAtReceiver::from_radii(1.651, 0.1524).unwrap();
        let m = MisalignmentModel::from_geometry(&beam, D, 2e-4).unwrap();
        let sr = m.sigma_r().unwrap();
        assert!(rel(m.gamma(), beam.w_eq / (2.0 * sr)) < 1e-12);
        assert!(rel(sr, D * 2e-4f64.tan()) < 1e-12);
        assert_eq!(m.a0(), beam.a0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sigma_gamma_round_trip(sigma in 1e-7f64..0.5, w_eq in 0.01f64..10.0, d in 1.0f64..1e4) {
                let g = gamma_from_sigma_theta(sigma, w_eq, d).unwrap();
                let back = sigma_theta_from_gamma(g, w_eq, d).unwrap();
                prop_assert!(((back - sigma) / sigma).abs() < 1e-12);
            }

            #[test]
            fn quantile_inverts_cdf(gamma in 0.2f64..30.0, a0 in 0.01f64..1.0, p in 0.0f64..1.0) {
                let m = MisalignmentModel::new(gamma, a0).unwrap();
                prop_assert!((m.cdf(m.quantile(p)) - p).abs() < 1e-10);
            }
        }
    }
}
