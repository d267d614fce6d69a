//! FIR design and the streaming quadrature envelope detector.
//!
//! The detector mixes the real IF samples with `e^(−j2πf_IF t)`, low-pass
//! filters and decimates the complex product through a cascade of
//! Blackman-windowed sinc stages, and reports `2|z|`, which is the carrier
//! amplitude. Filter state carries across blocks, so a capture can be fed
//! in pieces of any size with identical output.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{require_positive, Error, Result};

/// Largest decimation factor handled by one stage.
const MAX_STAGE_FACTOR: usize = 10;
/// Blackman transition width in cycles/sample is about this over the length.
const BLACKMAN_TRANSITION: f64 = 5.5;

/// Linear-phase low-pass: Blackman-windowed sinc with `taps` coefficients
/// and cutoff `cutoff` in cycles per sample, scaled to unit DC gain.
pub fn windowed_sinc(taps: usize, cutoff: f64) -> Vec<f64> {
    assert!(taps >= 1 && cutoff > 0.0 && cutoff < 0.5);
    if taps == 1 {
        return vec![1.0];
    }
    let m = (taps - 1) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - m / 2.0;
            let sinc = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            let w = 0.42 - 0.5 * (2.0 * PI * i as f64 / m).cos() + 0.08 * (4.0 * PI * i as f64 / m).cos();
            sinc * w
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    h
}

/// Magnitude response of real taps at `freq` cycles/sample.
pub fn magnitude_response(taps: &[f64], freq: f64) -> f64 {
    let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, h)| {
        let w = -2.0 * PI * freq * k as f64;
        (re + h * w.cos(), im + h * w.sin())
    });
    re.hypot(im)
}

fn taps_for_transition(rate: f64, width: f64) -> usize {
    ((BLACKMAN_TRANSITION * rate / width).ceil() as usize) | 1
}

/// One decimating FIR stage on complex samples.
#[derive(Debug, Clone)]
pub struct DecimatingFir {
    taps: Vec<f64>,
    factor: usize,
    buf: Vec<Complex64>,
    // Position in `buf` of the newest sample of the next output window.
    next: usize,
}

impl DecimatingFir {
    pub fn new(taps: Vec<f64>, factor: usize) -> Self {
        let n = taps.len();
        DecimatingFir {
            taps,
            factor: factor.max(1),
            buf: vec![Complex64::new(0.0, 0.0); n - 1],
            next: n - 1,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Appends one output for every `factor` inputs; the first output
    /// corresponds to the first input ever pushed.
    pub fn process(&mut self, input: &[Complex64], out: &mut Vec<Complex64>) {
        let n = self.taps.len();
        self.buf.extend_from_slice(input);
        while self.next < self.buf.len() {
            let window = &self.buf[self.next + 1 - n..=self.next];
            let acc = window
                .iter()
                .zip(&self.taps)
                .fold(Complex64::new(0.0, 0.0), |acc, (x, h)| acc + x * h);
            out.push(acc);
            self.next += self.factor;
        }
        let keep_from = (self.next + 1 - n).min(self.buf.len());
        self.buf.drain(..keep_from);
        self.next -= keep_from;
    }
}

/// Cascade of decimating stages from the IF sample rate down to the
/// envelope rate.
#[derive(Debug, Clone)]
pub struct DecimatorChain {
    stages: Vec<DecimatingFir>,
    input_rate: f64,
    output_rate: f64,
    group_delay: f64,
}

fn stage_factors(total: usize) -> Vec<usize> {
    let mut primes = Vec::new();
    let mut rest = total;
    let mut p = 2;
    while rest > 1 {
        while rest.is_multiple_of(p) {
            primes.push(p);
            rest /= p;
        }
        p += 1;
    }
    primes.sort_unstable_by(|a, b| b.cmp(a));
    let mut stages: Vec<usize> = Vec::new();
    for p in primes {
        match stages.iter_mut().find(|s| **s * p <= MAX_STAGE_FACTOR) {
            Some(s) => *s *= p,
            None => stages.push(p),
        }
    }
    stages.sort_unstable_by(|a, b| b.cmp(a));
    if stages.is_empty() {
        stages.push(1);
    }
    stages
}

impl DecimatorChain {
    /// Designs a cascade with pass band `cutoff` Hz and an output rate as
    /// close to `output_rate` as an integer decimation of `input_rate`
    /// allows.
    pub fn design(input_rate: f64, cutoff: f64, output_rate: f64) -> Result<Self> {
        require_positive("sample_rate", input_rate)?;
        require_positive("lowpass_cutoff", cutoff)?;
        require_positive("envelope_rate", output_rate)?;
        let total = (input_rate / output_rate).round().max(1.0) as usize;
        let actual_out = input_rate / total as f64;
        if actual_out <= 2.0 * cutoff {
            return Err(Error::invalid(
                "envelope_rate",
                format!("{actual_out} Hz must exceed twice the {cutoff} Hz cutoff"),
            ));
        }
        let factors = stage_factors(total);
        let mut stages = Vec::with_capacity(factors.len());
        let mut rate = input_rate;
        let mut group_delay = 0.0;
        for (i, &m) in factors.iter().enumerate() {
            let r_out = rate / m as f64;
            let taps = if i + 1 == factors.len() {
                let width = cutoff.min(r_out - 2.0 * cutoff);
                windowed_sinc(taps_for_transition(rate, width), cutoff / rate)
            } else {
                // Keep [0, cutoff] clean of anything that folds back on
                // decimation; the final stage sets the actual cutoff.
                let stop = r_out - cutoff;
                windowed_sinc(taps_for_transition(rate, stop - cutoff), 0.5 * r_out / rate)
            };
            group_delay += (taps.len() - 1) as f64 / 2.0 / rate;
            stages.push(DecimatingFir::new(taps, m));
            rate = r_out;
        }
        Ok(DecimatorChain {
            stages,
            input_rate,
            output_rate: rate,
            group_delay,
        })
    }

    pub fn input_rate(&self) -> f64 {
        self.input_rate
    }

    pub fn output_rate(&self) -> f64 {
        self.output_rate
    }

    /// Total group delay in seconds.
    pub fn group_delay(&self) -> f64 {
        self.group_delay
    }

    pub fn stages(&self) -> &[DecimatingFir] {
        &self.stages
    }

    pub fn process(&mut self, input: &[Complex64]) -> Vec<Complex64> {
        let mut data = input.to_vec();
        for stage in &mut self.stages {
            let mut out = Vec::with_capacity(data.len() / stage.factor + 1);
            stage.process(&data, &mut out);
            data = out;
        }
        data
    }

    /// Impulse response of the whole cascade at the input rate.
    pub fn equivalent_impulse_response(&self) -> Vec<f64> {
        let mut h = vec![1.0];
        let mut step = 1;
        for stage in &self.stages {
            let taps = stage.taps();
            let len = h.len() + (taps.len() - 1) * step;
            let mut out = vec![0.0; len];
            for (i, &a) in h.iter().enumerate() {
                for (k, &b) in taps.iter().enumerate() {
                    out[i + k * step] += a * b;
                }
            }
            h = out;
            step *= stage.factor;
        }
        h
    }
}

/// Streaming I/Q envelope detector.
#[derive(Debug, Clone)]
pub struct EnvelopeExtractor {
    f_if: f64,
    sample_rate: f64,
    chain: DecimatorChain,
    consumed: u64,
    produced: u64,
}

impl EnvelopeExtractor {
    pub fn new(sample_rate: f64, f_if: f64, cutoff: f64, output_rate: f64) -> Result<Self> {
        require_positive("f_if", f_if)?;
        if cutoff >= f_if {
            return Err(Error::invalid(
                "lowpass_cutoff",
                format!("{cutoff} Hz must be below the {f_if} Hz IF"),
            ));
        }
        if sample_rate <= 2.0 * f_if {
            return Err(Error::Aliasing {
                rate_hz: sample_rate,
                max_freq_hz: f_if,
            });
        }
        Ok(EnvelopeExtractor {
            f_if,
            sample_rate,
            chain: DecimatorChain::design(sample_rate, cutoff, output_rate)?,
            consumed: 0,
            produced: 0,
        })
    }

    pub fn chain(&self) -> &DecimatorChain {
        &self.chain
    }

    pub fn output_rate(&self) -> f64 {
        self.chain.output_rate()
    }

    pub fn group_delay(&self) -> f64 {
        self.chain.group_delay()
    }

    /// Feeds a block of IF samples, returning `(time, envelope)` pairs for
    /// every output it completes. Times are corrected for the group delay.
    pub fn process(&mut self, samples: &[f64]) -> Vec<(f64, f64)> {
        let cycles_per_sample = self.f_if / self.sample_rate;
        let start = self.consumed;
        let mixed: Vec<Complex64> = samples
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let k = (start + i as u64) as f64;
                let phase = 2.0 * PI * (k * cycles_per_sample).fract();
                let (s, c) = phase.sin_cos();
                Complex64::new(y * c, -y * s)
            })
            .collect();
        self.consumed += samples.len() as u64;
        let out = self.chain.process(&mixed);
        let rate = self.chain.output_rate();
        let delay = self.chain.group_delay();
        out.into_iter()
            .map(|z| {
                let t = self.produced as f64 / rate - delay;
                self.produced += 1;
                (t, 2.0 * z.norm())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windowed_sinc_unit_dc_and_symmetric() {
        let h = windowed_sinc(101, 0.1);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for i in 0..50 {
            assert!((h[i] - h[100 - i]).abs() < 1e-15);
        }
        assert!(magnitude_response(&h, 0.3) < 1e-3);
        assert!((magnitude_response(&h, 0.01) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn stage_factoring() {
        assert_eq!(stage_factors(500), vec![10, 10, 5]);
        assert_eq!(stage_factors(1), vec![1]);
        assert_eq!(stage_factors(13), vec![13]);
        assert_eq!(stage_factors(20).iter().product::<usize>(), 20);
    }

    #[test]
    fn block_size_does_not_change_output() {
        let input: Vec<Complex64> = (0..5000)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut whole = DecimatingFir::new(windowed_sinc(31, 0.05), 4);
        let mut a = Vec::new();
        whole.process(&input, &mut a);
        let mut pieces = DecimatingFir::new(windowed_sinc(31, 0.05), 4);
        let mut b = Vec::new();
        for chunk in input.chunks(333) {
            pieces.process(chunk, &mut b);
        }
        assert_eq!(a.len(), 1250);
        assert_eq!(a, b);
    }

    #[test]
    fn chain_rejects_rate_below_twice_cutoff() {
        assert!(DecimatorChain::design(5e6, 2000.0, 3000.0).is_err());
        let c = DecimatorChain::design(5e6, 2000.0, 10_000.0).unwrap();
        assert_eq!(c.output_rate(), 10_000.0);
        assert_eq!(c.stages().len(), 3);
    }

    #[test]
    fn chain_rejects_image_of_the_if() {
        let c = DecimatorChain::design(5e6, 2000.0, 10_000.0).unwrap();
        let h = c.equivalent_impulse_response();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(magnitude_response(&h, 800e3 / 5e6) < 1e-6);
        assert!((magnitude_response(&h, 200.0 / 5e6) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn extractor_config_errors() {
        assert!(EnvelopeExtractor::new(5e6, 4e5, 4e5, 1e6).is_err());
        assert!(matches!(
            EnvelopeExtractor::new(6e5, 4e5, 2e3, 1e4),
            Err(Error::Aliasing { .. })
        ));
    }
}
