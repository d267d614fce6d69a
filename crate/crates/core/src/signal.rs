//! The measurement chain: IF synthesis, envelope extraction and baseline
//! normalisation.
//!
//! The received IF tone is `y = V_rx h_m(t) sin(2π f_IF t) + n`, where
//! `V_rx = C V_tx` folds every static gain and loss into one constant. A
//! no-jitter run gives the reference envelope `ε₀`; dividing a jittered
//! envelope by it cancels `C` and leaves the normalised gain plus scaled
//! noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dsp::EnvelopeExtractor;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::motion::PointingTrace;
use crate::rng::{stream_rng, streams, SimRng};

pub const DEFAULT_LOWPASS_CUTOFF: f64 = 2_000.0;
pub const DEFAULT_ENVELOPE_RATE: f64 = 10_000.0;
/// Filter group delays skipped before any statistic is taken.
pub const SETTLE_GROUP_DELAYS: f64 = 5.0;

/// Amplitude free-space loss `λ / (4π d)`.
pub fn free_space_amplitude(wavelength: f64, distance: f64) -> f64 {
    wavelength / (4.0 * PI * distance)
}

pub fn dbi_to_linear(dbi: f64) -> f64 {
    10f64.powf(dbi / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetInputs {
    pub h_pl: f64,
    pub h_a: f64,
    pub g_t: f64,
    pub g_r: f64,
    pub v_tx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub h_pl: f64,
    pub h_a: f64,
    pub g_t: f64,
    pub g_r: f64,
    pub v_tx: f64,
    /// `C = h_pl h_a √(G_t G_r)`.
    pub c_static: f64,
    /// `V_rx = C V_tx`.
    pub v_rx: f64,
}

pub fn static_gain(inputs: BudgetInputs) -> Result<LinkBudget> {
    for (name, v) in [("h_pl", inputs.h_pl), ("h_a", inputs.h_a)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::invalid(name, format!("must lie in (0, 1], got {v}")));
        }
    }
    for (name, v) in [("g_t", inputs.g_t), ("g_r", inputs.g_r)] {
        if !(v >= 1.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("linear gain must be >= 1, got {v}")));
        }
    }
    require_positive("v_tx", inputs.v_tx)?;
    let c_static = inputs.h_pl * inputs.h_a * (inputs.g_t * inputs.g_r).sqrt();
    Ok(LinkBudget {
        h_pl: inputs.h_pl,
        h_a: inputs.h_a,
        g_t: inputs.g_t,
        g_r: inputs.g_r,
        v_tx: inputs.v_tx,
        c_static,
        v_rx: c_static * inputs.v_tx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalConfig {
    pub f_if: f64,
    /// Local oscillator, kept to check `f_IF = f_c − f_LO`.
    pub f_lo: Option<f64>,
    pub carrier_frequency: Option<f64>,
    pub sample_rate: f64,
    pub duration: f64,
    /// AWGN standard deviation at the sampler, volts.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SignalConfig {
    /// 400 kHz IF sampled at 5 MSps, noise-free.
    pub fn reference_defaults(duration: f64, seed: u64) -> Self {
        SignalConfig {
            f_if: 400e3,
            f_lo: None,
            carrier_frequency: None,
            sample_rate: 5e6,
            duration,
            noise_sigma: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("f_if", self.f_if)?;
        require_positive("sample_rate", self.sample_rate)?;
        require_positive("duration", self.duration)?;
        require_non_negative("noise_sigma", self.noise_sigma)?;
        if self.sample_rate <= 2.0 * self.f_if {
            return Err(Error::Aliasing {
                rate_hz: self.sample_rate,
                max_freq_hz: self.f_if,
            });
        }
        if let (Some(fc), Some(lo)) = (self.carrier_frequency, self.f_lo) {
            if ((fc - lo) - self.f_if).abs() > 1e-6 * self.f_if {
                return Err(Error::invalid(
                    "f_if",
                    format!("{} Hz does not equal f_c - f_lo = {} Hz", self.f_if, fc - lo),
                ));
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> u64 {
        (self.duration * self.sample_rate).round() as u64
    }

    /// Sets the noise so the carrier-to-noise power ratio at the sampler,
    /// `(amplitude²/2) / σ²`, equals `snr_db`.
    pub fn with_snr_db(mut self, snr_db: f64, amplitude: f64) -> Self {
        self.noise_sigma = noise_sigma_for_snr(snr_db, amplitude);
        self
    }
}

pub fn noise_sigma_for_snr(snr_db: f64, amplitude: f64) -> f64 {
    amplitude / 2f64.sqrt() / 10f64.powf(snr_db / 20.0)
}

/// Streams `y[k] = v_rx h_m(t_k) sin(2π f_IF t_k) + n[k]` block by block,
/// holding each gain sample until the next one (zero-order hold).
pub struct IfSynthesizer<'a> {
    gain: &'a PointingTrace,
    cfg: SignalConfig,
    v_rx: f64,
    next: u64,
    total: u64,
    rng: SimRng,
}

impl<'a> IfSynthesizer<'a> {
    pub fn new(gain: &'a PointingTrace, cfg: SignalConfig, v_rx: f64) -> Result<Self> {
        cfg.validate()?;
        require_non_negative("v_rx", v_rx)?;
        if gain.gain.is_empty() {
            return Err(Error::invalid("gain trace", "gain has not been computed"));
        }
        let total = cfg.sample_count();
        let needed = ((total - 1) as f64 / cfg.sample_rate * gain.sample_rate).floor() as usize;
        if needed >= gain.gain.len() {
            return Err(Error::invalid(
                "gain trace",
                format!("covers {} s but the capture lasts {} s", gain.duration(), cfg.duration),
            ));
        }
        Ok(IfSynthesizer {
            gain,
            cfg,
            v_rx,
            next: 0,
            total,
            rng: stream_rng(cfg.seed, streams::RECEIVER_NOISE),
        })
    }

    pub fn total_samples(&self) -> u64 {
        self.total
    }

    /// Index of the next sample to be produced.
    pub fn position(&self) -> u64 {
        self.next
    }

    /// Up to `max` further samples, or `None` once the capture is complete.
    pub fn next_block(&mut self, max: usize) -> Option<Vec<f64>> {
        if self.next >= self.total {
            return None;
        }
        let end = (self.next + max as u64).min(self.total);
        let fs = self.cfg.sample_rate;
        let cycles = self.cfg.f_if / fs;
        let hold = self.gain.sample_rate / fs;
        let block = (self.next..end)
            .map(|k| {
                let kf = k as f64;
                let h = self.gain.gain[(kf * hold).floor() as usize];
                let carrier = (2.0 * PI * (kf * cycles).fract()).sin();
                let noise = if self.cfg.noise_sigma > 0.0 {
                    self.cfg.noise_sigma * self.rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                self.v_rx * h * carrier + noise
            })
            .collect();
        self.next = end;
        Some(block)
    }
}

/// Whole-buffer form of [`IfSynthesizer`].
pub fn synthesize_if_signal(gain: &PointingTrace, cfg: &SignalConfig, v_rx: f64) -> Result<Vec<f64>> {
    let mut synth = IfSynthesizer::new(gain, *cfg, v_rx)?;
    let mut out = Vec::with_capacity(synth.total_samples() as usize);
    while let Some(block) = synth.next_block(1 << 16) {
        out.extend(block);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeOptions {
    pub lowpass_cutoff: f64,
    pub output_rate: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            lowpass_cutoff: DEFAULT_LOWPASS_CUTOFF,
            output_rate: DEFAULT_ENVELOPE_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeTrace {
    /// Seconds, corrected for filter group delay.
    pub sample_times: Vec<f64>,
    /// Volts.
    pub envelope: Vec<f64>,
    /// `envelope / ε₀`, present after [`normalize_envelope`].
    pub normalized: Option<Vec<f64>>,
    pub sample_rate: f64,
    /// Filter group delay, seconds.
    pub group_delay: f64,
}

impl EnvelopeTrace {
    pub fn from_pairs(pairs: Vec<(f64, f64)>, sample_rate: f64, group_delay: f64) -> Self {
        let (sample_times, envelope) = pairs.into_iter().unzip();
        EnvelopeTrace {
            sample_times,
            envelope,
            normalized: None,
            sample_rate,
            group_delay,
        }
    }

    /// Default settling interval, five group delays.
    pub fn settle_time(&self) -> f64 {
        SETTLE_GROUP_DELAYS * self.group_delay
    }

    /// Index of the first sample at least `skip` seconds after the first.
    pub fn first_index_after(&self, skip: f64) -> usize {
        match self.sample_times.first() {
            None => 0,
            Some(&t0) => self.sample_times.partition_point(|&t| t < t0 + skip),
        }
    }

    /// Normalised samples after the settling interval.
    pub fn settled_normalized(&self) -> Option<&[f64]> {
        let start = self.first_index_after(self.settle_time());
        self.normalized.as_deref().map(|v| &v[start.min(v.len())..])
    }
}

pub fn extract_envelope(samples: &[f64], cfg: &SignalConfig, options: EnvelopeOptions) -> Result<EnvelopeTrace> {
    let mut extractor = EnvelopeExtractor::new(cfg.sample_rate, cfg.f_if, options.lowpass_cutoff, options.output_rate)?;
    let pairs = extractor.process(samples);
    Ok(EnvelopeTrace::from_pairs(
        pairs,
        extractor.output_rate(),
        extractor.group_delay(),
    ))
}

/// Mean envelope of a no-jitter capture after discarding `settle_skip`
/// seconds.
pub fn baseline_reference(env: &EnvelopeTrace, settle_skip: f64) -> Result<f64> {
    let start = env.first_index_after(settle_skip);
    let rest = &env.envelope[start.min(env.envelope.len())..];
    if rest.is_empty() {
        return Err(Error::invalid(
            "baseline",
            format!("no envelope samples remain after skipping {settle_skip} s"),
        ));
    }
    let mean = rest.iter().sum::<f64>() / rest.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::invalid(
            "baseline",
            format!("mean envelope {mean} V is not positive"),
        ));
    }
    Ok(mean)
}

pub fn normalize_envelope(mut env: EnvelopeTrace, epsilon_0: f64) -> Result<EnvelopeTrace> {
    require_positive("epsilon_0", epsilon_0)?;
    env.normalized = Some(env.envelope.iter().map(|e| e / epsilon_0).collect());
    Ok(env)
}
