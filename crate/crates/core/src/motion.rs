//! Antenna pointing motion and the gain traces it produces.
//!
//! Two families of motion are modelled. Gaussian jitter draws azimuth and
//! elevation offsets from normal distributions, the assumption behind the
//! closed-form misalignment model. Driven motion is a sum of sinusoidal
//! modes per axis, as produced by a rotating unbalanced mass exciting the
//! mount; a sinusoid dwells at its turning points, which is what makes the
//! gain histogram multimodal. A static bias on either axis represents an
//! initial alignment error.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::beam::BeamAtReceiver;
use crate::dsp::windowed_sinc;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::rng::{stream_rng, streams};

/// Longest FIR used to band-limit Gaussian jitter.
const MAX_SHAPING_TAPS: usize = 16_385;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionKind {
    Gaussian,
    Driven,
    /// Bias only. Used for baseline captures.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeComponent {
    pub frequency: f64,
    pub amp_az: f64,
    pub amp_el: f64,
    pub phase_az: f64,
    pub phase_el: f64,
}

impl ModeComponent {
    pub fn new(frequency: f64, amp_az: f64, amp_el: f64, phase_az: f64, phase_el: f64) -> Result<Self> {
        let m = ModeComponent {
            frequency,
            amp_az,
            amp_el,
            phase_az,
            phase_el,
        };
        m.validate()?;
        Ok(m)
    }

    /// Azimuth-only mode with zero phase.
    pub fn azimuth(frequency: f64, amplitude: f64) -> Result<Self> {
        Self::new(frequency, amplitude, 0.0, 0.0, 0.0)
    }

    fn validate(&self) -> Result<()> {
        require_positive("mode frequency", self.frequency)?;
        require_non_negative("mode amp_az", self.amp_az)?;
        require_non_negative("mode amp_el", self.amp_el)?;
        if !self.phase_az.is_finite() || !self.phase_el.is_finite() {
            return Err(Error::invalid("mode phase", "must be finite"));
        }
        Ok(())
    }

    fn angles_at(&self, t: f64) -> (f64, f64) {
        let w = 2.0 * PI * self.frequency * t;
        (
            self.amp_az * (w + self.phase_az).sin(),
            self.amp_el * (w + self.phase_el).sin(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSpec {
    pub kind: MotionKind,
    /// Per-axis standard deviations, radians. For driven motion they add a
    /// Gaussian residual.
    pub gaussian_sigma_az: f64,
    pub gaussian_sigma_el: f64,
    /// When set, the Gaussian component is low-pass shaped to this
    /// bandwidth instead of being independent from sample to sample. Each
    /// sample keeps the same normal marginal.
    pub gaussian_bandwidth: Option<f64>,
    pub modes: Vec<ModeComponent>,
    pub bias_az: f64,
    pub bias_el: f64,
}

impl MotionSpec {
    pub fn gaussian(sigma_az: f64, sigma_el: f64) -> Self {
        MotionSpec {
            kind: MotionKind::Gaussian,
            gaussian_sigma_az: sigma_az,
            gaussian_sigma_el: sigma_el,
            gaussian_bandwidth: None,
            modes: Vec::new(),
            bias_az: 0.0,
            bias_el: 0.0,
        }
    }

    pub fn driven(modes: Vec<ModeComponent>) -> Self {
        MotionSpec {
            kind: MotionKind::Driven,
            gaussian_sigma_az: 0.0,
            gaussian_sigma_el: 0.0,
            gaussian_bandwidth: None,
            modes,
            bias_az: 0.0,
            bias_el: 0.0,
        }
    }

    pub fn fixed(bias_az: f64, bias_el: f64) -> Self {
        MotionSpec {
            kind: MotionKind::Static,
            bias_az,
            bias_el,
            ..MotionSpec::driven(Vec::new())
        }
    }

    pub fn with_bias(mut self, bias_az: f64, bias_el: f64) -> Self {
        self.bias_az = bias_az;
        self.bias_el = bias_el;
        self
    }

    pub fn with_residual(mut self, sigma_az: f64, sigma_el: f64) -> Self {
        self.gaussian_sigma_az = sigma_az;
        self.gaussian_sigma_el = sigma_el;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: f64) -> Self {
        self.gaussian_bandwidth = Some(bandwidth);
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("gaussian_sigma_az", self.gaussian_sigma_az)?;
        require_non_negative("gaussian_sigma_el", self.gaussian_sigma_el)?;
        if let Some(b) = self.gaussian_bandwidth {
            require_positive("gaussian_bandwidth", b)?;
        }
        if !self.bias_az.is_finite() || !self.bias_el.is_finite() {
            return Err(Error::invalid("bias", "must be finite"));
        }
        for m in &self.modes {
            m.validate()?;
        }
        let has_noise = self.gaussian_sigma_az > 0.0 || self.gaussian_sigma_el > 0.0;
        let has_modes = self.modes.iter().any(|m| m.amp_az > 0.0 || m.amp_el > 0.0);
        match self.kind {
            MotionKind::Gaussian if !self.modes.is_empty() => {
                Err(Error::invalid("motion", "gaussian motion takes no modes"))
            }
            MotionKind::Driven if !has_noise && !has_modes => Err(Error::invalid(
                "motion",
                "driven motion needs a non-zero mode or residual; use static for bias-only pointing",
            )),
            MotionKind::Static if has_noise || !self.modes.is_empty() => {
                Err(Error::invalid("motion", "static pointing takes no modes or noise"))
            }
            _ => Ok(()),
        }
    }

    pub fn has_noise(&self) -> bool {
        self.gaussian_sigma_az > 0.0 || self.gaussian_sigma_el > 0.0
    }

    pub fn max_mode_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.frequency).fold(0.0, f64::max)
    }

    /// Bias plus the sum of all modes at time `t`, without noise.
    pub fn deterministic_angles(&self, t: f64) -> (f64, f64) {
        self.modes.iter().fold((self.bias_az, self.bias_el), |(x, y), m| {
            let (dx, dy) = m.angles_at(t);
            (x + dx, y + dy)
        })
    }
}

/// Angles, displacement and gain sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PointingTrace {
    pub sample_rate: f64,
    pub sample_times: Vec<f64>,
    pub theta_x: Vec<f64>,
    pub theta_y: Vec<f64>,
    /// Empty until [`gain_trace`] runs.
    pub displacement: Vec<f64>,
    /// Empty until [`gain_trace`] runs.
    pub gain: Vec<f64>,
}

impl PointingTrace {
    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    /// Zero-order-hold lookup of the gain at time `t`.
    pub fn gain_at(&self, t: f64) -> f64 {
        let idx = ((t * self.sample_rate) as usize).min(self.gain.len() - 1);
        self.gain[idx]
    }
}

fn gaussian_component(
    n: usize,
    sigma: f64,
    rate: f64,
    bandwidth: Option<f64>,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    if sigma == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut rng = stream_rng(seed, stream);
    match bandwidth {
        None => Ok((0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()),
        Some(b) => {
            if b >= rate / 2.0 {
                return Err(Error::Aliasing {
                    rate_hz: rate,
                    max_freq_hz: b,
                });
            }
            let taps_wanted = (3.0 * rate / b).ceil() as usize | 1;
            if taps_wanted > MAX_SHAPING_TAPS {
                return Err(Error::invalid(
                    "gaussian_bandwidth",
                    format!("{b} Hz at {rate} Hz needs {taps_wanted} shaping taps; lower the motion rate"),
                ));
            }
            let mut taps = windowed_sinc(taps_wanted, b / rate);
            let energy: f64 = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
            taps.iter_mut().for_each(|h| *h /= energy);
            let white: Vec<f64> = (0..n + taps.len() - 1)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            Ok(white
                .windows(taps.len())
                .map(|w| sigma * w.iter().zip(&taps).map(|(x, h)| x * h).sum::<f64>())
                .collect())
        }
    }
}

/// Samples the pointing angles of `spec` for `duration` seconds at `rate`.
pub fn synthesize_pointing(spec: &MotionSpec, duration: f64, rate: f64, seed: u64) -> Result<PointingTrace> {
    spec.validate()?;
    require_positive("rate", rate)?;
    require_non_negative("duration", duration)?;
    let n = (duration * rate).round() as usize;
    if n < 2 {
        return Err(Error::invalid(
            "duration",
            format!("{duration} s at {rate} Hz gives fewer than 2 samples"),
        ));
    }
    let f_max = spec.max_mode_frequency();
    if f_max > 0.0 && rate <= 2.0 * f_max {
        return Err(Error::Aliasing {
            rate_hz: rate,
            max_freq_hz: f_max,
        });
    }
    let noise_x = gaussian_component(
        n,
        spec.gaussian_sigma_az,
        rate,
        spec.gaussian_bandwidth,
        seed,
        streams::MOTION_AZ,
    )?;
    let noise_y = gaussian_component(
        n,
        spec.gaussian_sigma_el,
        rate,
        spec.gaussian_bandwidth,
        seed,
        streams::MOTION_EL,
    )?;
    let sample_times: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
    let (theta_x, theta_y) = sample_times
        .iter()
        .zip(noise_x.iter().zip(&noise_y))
        .map(|(&t, (nx, ny))| {
            let (x, y) = spec.deterministic_angles(t);
            (x + nx, y + ny)
        })
        .unzip();
    Ok(PointingTrace {
        sample_rate: rate,
        sample_times,
        theta_x,
        theta_y,
        displacement: Vec::new(),
        gain: Vec::new(),
    })
}

/// Net pointing angle to beam-centre displacement, `d tan √(θx² + θy²)`.
pub fn displacement_for(theta_x: f64, theta_y: f64, distance: f64) -> Result<f64> {
    let net = theta_x.hypot(theta_y);
    if !(net < FRAC_PI_2) {
        return Err(Error::Domain(format!("net pointing angle {net} rad is not below pi/2")));
    }
    Ok(distance * net.tan())
}

/// Fills displacement and gain for every sample of `trace`.
pub fn gain_trace(mut trace: PointingTrace, beam: &BeamAtReceiver, distance: f64) -> Result<PointingTrace> {
    require_positive("distance", distance)?;
    let displacement = trace
        .theta_x
        .iter()
        .zip(&trace.theta_y)
        .map(|(&x, &y)| displacement_for(x, y, distance))
        .collect::<Result<Vec<f64>>>()?;
    trace.gain = displacement.iter().map(|&r| beam.gain(r)).collect();
    trace.displacement = displacement;
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Stationary gain values of driven motion
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalOptions {
    /// Analysis window for motion that is not periodic.
    pub window: Option<f64>,
    /// Extrema closer than this fraction of `A₀` are one value.
    pub cluster_tolerance: f64,
    /// Sampling density, points per period of the fastest mode.
    pub points_per_period: f64,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            window: None,
            cluster_tolerance: 1e-4,
            points_per_period: 1e4,
        }
    }
}

const MAX_CRITICAL_POINTS: f64 = 5e7;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Common period of the given frequencies, if they are rational multiples
/// of one fundamental with denominator at most 1000.
pub fn common_period(frequencies: &[f64]) -> Option<f64> {
    if frequencies.is_empty() {
        return None;
    }
    'denominators: for q in 1..=1000u64 {
        let mut g = 0;
        for &f in frequencies {
            let scaled = f * q as f64;
            let k = scaled.round();
            if k < 1.0 || (scaled - k).abs() > 1e-9 * scaled.max(1.0) {
                continue 'denominators;
            }
            g = gcd(g, k as u64);
        }
        return Some(q as f64 / g as f64);
    }
    None
}

/// Distinct gain values at which the noise-free driven trajectory is
/// stationary, ascending. These are the values the gain dwells at, and so
/// the locations of histogram modes.
pub fn critical_gain_values(
    spec: &MotionSpec,
    beam: &BeamAtReceiver,
    distance: f64,
    options: CriticalOptions,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.kind == MotionKind::Gaussian || spec.has_noise() {
        return Err(Error::invalid(
            "motion",
            "critical values need deterministic motion (driven or static, no Gaussian residual)",
        ));
    }
    let gain_at = |t: f64| -> Result<f64> {
        let (x, y) = spec.deterministic_angles(t);
        Ok(beam.gain(displacement_for(x, y, distance)?))
    };
    let active: Vec<f64> = spec
        .modes
        .iter()
        .filter(|m| m.amp_az > 0.0 || m.amp_el > 0.0)
        .map(|m| m.frequency)
        .collect();
    if active.is_empty() {
        return Ok(vec![gain_at(0.0)?]);
    }
    let f_max = active.iter().copied().fold(0.0, f64::max);
    let (span, periodic) = match (options.window, common_period(&active)) {
        (Some(w), _) => (require_positive("window", w)?, false),
        (None, Some(p)) => (p, true),
        (None, None) => {
            return Err(Error::invalid(
                "motion",
                "mode frequencies are not commensurate; give an analysis window",
            ))
        }
    };
    let points = (span * f_max * options.points_per_period).ceil();
    if points > MAX_CRITICAL_POINTS {
        return Err(Error::invalid(
            "motion",
            format!("{points} points needed to resolve a {span} s span; give a shorter window"),
        ));
    }
    let n = points as usize;
    let dt = span / n as f64;
    let g = (0..n).map(|i| gain_at(i as f64 * dt)).collect::<Result<Vec<f64>>>()?;

    let mut extrema = Vec::new();
    let (start, end) = if periodic { (0, n) } else { (1, n - 1) };
    for i in start..end {
        let prev = g[(i + n - 1) % n];
        let next = g[(i + 1) % n];
        let here = g[i];
        let is_max = here > prev && here >= next;
        let is_min = here < prev && here <= next;
        if is_max || is_min {
            // Vertex of the parabola through the three samples.
            let curvature = prev - 2.0 * here + next;
            let refined = if curvature != 0.0 {
                here - (next - prev).powi(2) / (8.0 * curvature)
            } else {
                here
            };
            extrema.push(if is_max { refined.max(here) } else { refined.min(here) });
        }
    }
    if extrema.is_empty() {
        // Motion that never changes the gain (e.g. a mode along a circle of
        // constant net angle).
        extrema.push(g[0]);
    }
    extrema.sort_by(f64::total_cmp);
    let tol = options.cluster_tolerance * beam.a0;
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for v in extrema {
        match clusters.last_mut() {
            Some(c) if v - c[0] <= tol => c.push(v),
            _ => clusters.push(vec![v]),
        }
    }
    Ok(clusters
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::misalignment::MisalignmentModel;
    use crate::stats::{histogram, ks_distance};

    const D: f64 = 341.0;

    fn beam() -> BeamAtReceiver {
        BeamAtReceiver::from_radii(1.651, 0.1524).unwrap()
    }

    fn static_gain(angle: f64) -> f64 {
        let b = beam();
        b.a0 * (-2.0 * (D * angle.tan()).powi(2) / (b.w_eq * b.w_eq)).exp()
    }

    #[test]
    fn driven_starts_at_bias() {
        let spec = MotionSpec::driven(vec![ModeComponent::azimuth(10.3, 1e-3).unwrap()]).with_bias(2e-4, -1e-4);
        let tr = synthesize_pointing(&spec, 0.1, 5000.0, 1).unwrap();
        assert_eq!(tr.theta_x[0], 2e-4);
        assert_eq!(tr.theta_y[0], -1e-4);
    }

    #[test]
    fn driven_stays_inside_first_null() {
        let amp = 0.6_f64.to_radians() / 2f64.sqrt();
        let m = ModeComponent::new(10.3, amp, amp, 0.0, 0.0).unwrap();
        let tr = synthesize_pointing(&MotionSpec::driven(vec![m]), 1.0, 50_000.0, 3).unwrap();
        let peak = tr
            .theta_x
            .iter()
            .zip(&tr.theta_y)
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max);
        assert!(peak < 0.7_f64.to_radians());
        assert!(peak > 0.59_f64.to_radians());
    }

    #[test]
    fn gaussian_sample_std() {
        let sigma = 2.5851e-4;
        let tr = synthesize_pointing(&MotionSpec::gaussian(sigma, sigma), 20.0, 50_000.0, 5).unwrap();
        for axis in [&tr.theta_x, &tr.theta_y] {
            let n = axis.len() as f64;
            let mean = axis.iter().sum::<f64>() / n;
            let sd = (axis.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!(((sd - sigma) / sigma).abs() < 0.005, "sd {sd}");
        }
    }

    #[test]
    fn band_limited_gaussian_keeps_marginal() {
        let sigma = 1e-4;
        let spec = MotionSpec::gaussian(sigma, 0.0).with_bandwidth(2000.0);
        let tr = synthesize_pointing(&spec, 20.0, 50_000.0, 9).unwrap();
        let n = tr.len() as f64;
        let sd = (tr.theta_x.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        assert!(((sd - sigma) / sigma).abs() < 0.02, "sd {sd}");
        // Neighbouring samples are strongly correlated.
        let lag1 = tr.theta_x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n * sigma * sigma);
        assert!(lag1 > 0.9, "lag-1 correlation {lag1}");
    }

    #[test]
    fn aliasing_and_short_duration_rejected() {
        let spec = MotionSpec::driven(vec![ModeComponent::azimuth(100.0, 1e-4).unwrap()]);
        assert!(matches!(
            synthesize_pointing(&spec, 1.0, 150.0, 0),
            Err(Error::Aliasing { .. })
        ));
        assert!(synthesize_pointing(&spec, 1e-6, 1000.0, 0).is_err());
    }

    #[test]
    fn motion_is_seed_deterministic() {
        let spec = MotionSpec::gaussian(1e-4, 2e-4);
        let a = synthesize_pointing(&spec, 0.2, 10_000.0, 42).unwrap();
        let b = synthesize_pointing(&spec, 0.2, 10_000.0, 42).unwrap();
        let c = synthesize_pointing(&spec, 0.2, 10_000.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.theta_x, c.theta_x);
    }

    #[test]
    fn gain_trace_examples() {
        let b = beam();
        let still = synthesize_pointing(&MotionSpec::fixed(0.0, 0.0), 0.01, 1000.0, 0).unwrap();
        let still = gain_trace(still, &b, D).unwrap();
        assert!(still.gain.iter().all(|&g| g == b.a0));

        let amp = 3e-4;
        let spec = MotionSpec::driven(vec![ModeComponent::azimuth(10.0, amp).unwrap()]);
        let tr = gain_trace(synthesize_pointing(&spec, 1.0, 4000.0, 0).unwrap(), &b, D).unwrap();
        let lo = static_gain(amp);
        let min = tr.gain.iter().copied().fold(f64::INFINITY, f64::min);
        let max = tr.gain.iter().copied().fold(0.0, f64::max);
        assert!(min >= lo * (1.0 - 1e-12) && (min - lo).abs() < 1e-9 * b.a0);
        assert_eq!(max, b.a0);

        let bias = 2e-4;
        let biased = gain_trace(
            synthesize_pointing(&MotionSpec::fixed(bias, 0.0), 0.01, 1000.0, 0).unwrap(),
            &b,
            D,
        )
        .unwrap();
        assert!(biased.gain.iter().all(|&g| (g - static_gain(bias)).abs() < 1e-15));
    }

    #[test]
    fn gain_trace_domain_error() {
        let tr = PointingTrace {
            sample_rate: 1.0,
            sample_times: vec![0.0, 1.0],
            theta_x: vec![0.0, 1.2],
            theta_y: vec![0.0, 1.2],
            displacement: vec![],
            gain: vec![],
        };
        assert!(matches!(gain_trace(tr, &beam(), D), Err(Error::Domain(_))));
    }

    #[test]
    fn common_periods() {
        assert!((common_period(&[6.8, 17.1]).unwrap() - 10.0).abs() < 1e-12);
        assert!((common_period(&[10.0, 20.0, 30.0]).unwrap() - 0.1).abs() < 1e-15);
        assert!(common_period(&[1.0, std::f64::consts::PI]).is_none());
    }

    #[test]
    fn single_mode_has_two_critical_values() {
        let b = beam();
        let amp = 3e-4;
        let spec = MotionSpec::driven(vec![ModeComponent::new(10.3, amp, 0.0, 0.4, 0.0).unwrap()]);
        let cv = critical_gain_values(&spec, &b, D, CriticalOptions::default()).unwrap();
        assert_eq!(cv.len(), 2);
        assert!((cv[0] - static_gain(amp)).abs() < 1e-6 * b.a0);
        assert!((cv[1] - b.a0).abs() < 1e-6 * b.a0);
    }

    #[test]
    fn static_has_one_critical_value() {
        let b = beam();
        let cv = critical_gain_values(&MotionSpec::fixed(1e-4, 0.0), &b, D, CriticalOptions::default()).unwrap();
        assert_eq!(cv, vec![static_gain(1e-4)]);
    }

    #[test]
    fn two_mode_count_stable_under_oversampling() {
        let b = beam();
        let spec = MotionSpec::driven(vec![
            ModeComponent::azimuth(6.8, 2e-4).unwrap(),
            ModeComponent::new(17.1, 0.0, 1.5e-4, 0.0, 0.3).unwrap(),
        ]);
        let base = critical_gain_values(&spec, &b, D, CriticalOptions::default()).unwrap();
        let fine = critical_gain_values(
            &spec,
            &b,
            D,
            CriticalOptions {
                points_per_period: 2e4,
                ..CriticalOptions::default()
            },
        )
        .unwrap();
        assert!(base.len() > 2);
        assert_eq!(base.len(), fine.len());
        for (x, y) in base.iter().zip(&fine) {
            assert!((x - y).abs() < 1e-4 * b.a0);
        }
    }

    #[test]
    fn critical_values_need_deterministic_motion() {
        let b = beam();
        assert!(critical_gain_values(&MotionSpec::gaussian(1e-4, 1e-4), &b, D, CriticalOptions::default()).is_err());
        let odd = MotionSpec::driven(vec![
            ModeComponent::azimuth(1.0, 1e-4).unwrap(),
            ModeComponent::azimuth(std::f64::consts::E, 1e-4).unwrap(),
        ]);
        assert!(critical_gain_values(&odd, &b, D, CriticalOptions::default()).is_err());
        let windowed = critical_gain_values(
            &odd,
            &b,
            D,
            CriticalOptions {
                window: Some(3.0),
                ..CriticalOptions::default()
            },
        );
        assert!(windowed.unwrap().len() >= 2);
    }

    #[test]
    fn arcsine_dwell_peaks_at_critical_values() {
        let b = beam();
        let spec = MotionSpec::driven(vec![ModeComponent::azimuth(10.3, 4e-4).unwrap()]);
        let tr = gain_trace(synthesize_pointing(&spec, 2.0, 50_000.0, 0).unwrap(), &b, D).unwrap();
        let h = histogram(&tr.gain, 150).unwrap();
        let mut order: Vec<usize> = (0..h.bin_count()).collect();
        order.sort_by(|&i, &j| h.densities[j].total_cmp(&h.densities[i]));
        let cv = critical_gain_values(&spec, &b, D, CriticalOptions::default()).unwrap();
        for v in cv {
            // Sampling never quite reaches an extremum, so allow half a bin.
            let slack = 0.5 * h.bin_width();
            let holder = order[..2]
                .iter()
                .any(|&i| h.bin_edges[i] - slack <= v && v <= h.bin_edges[i + 1] + slack);
            assert!(holder, "critical value {v} not in the two tallest bins");
        }
    }

    #[test]
    fn gaussian_motion_reproduces_closed_form() {
        let b = beam();
        let sigma = 2.5851e-4;
        let tr = synthesize_pointing(&MotionSpec::gaussian(sigma, sigma), 20.0, 50_000.0, 17).unwrap();
        let tr = gain_trace(tr, &b, D).unwrap();
        let model = MisalignmentModel::from_geometry(&b, D, sigma).unwrap();
        let ks = ks_distance(&tr.gain, &model).unwrap();
        assert!(ks <= 0.01, "ks {ks}");
    }

    #[test]
    fn bias_lifts_normalized_gain_above_one() {
        let b = beam();
        let bias = 2e-4;
        let baseline = static_gain(bias);
        let spec = MotionSpec::driven(vec![ModeComponent::azimuth(6.8, 4e-4).unwrap()]);
        let biased = gain_trace(
            synthesize_pointing(&spec.clone().with_bias(bias, 0.0), 1.0, 20_000.0, 0).unwrap(),
            &b,
            D,
        )
        .unwrap();
        assert!(biased.gain.iter().any(|g| g / baseline > 1.0));
        let centred = gain_trace(synthesize_pointing(&spec, 1.0, 20_000.0, 0).unwrap(), &b, D).unwrap();
        let max = centred.gain.iter().map(|g| g / b.a0).fold(0.0, f64::max);
        assert_eq!(max, 1.0);
    }
}
