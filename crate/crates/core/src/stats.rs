//! Empirical distributions of normalised gain and the model fits run
//! against them.

use crate::error::{Error, Result};
use crate::misalignment::{sigma_theta_from_gamma, MisalignmentModel};

pub const DEFAULT_BINS: usize = 150;
pub const DEFAULT_MIN_PROMINENCE_FRAC: f64 = 0.05;
pub const DEFAULT_MIN_SEPARATION_FRAC: f64 = 0.02;
const MIN_HISTOGRAM_VALUES: usize = 100;

// ---------------------------------------------------------------------------
// Running moments
// ---------------------------------------------------------------------------

/// One-pass mean and variance (Welford), mergeable across partitions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OnlineStats {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl OnlineStats {
    pub fn new() -> Self {
        OnlineStats {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &OnlineStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

impl FromIterator<f64> for OnlineStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = OnlineStats::new();
        iter.into_iter().for_each(|x| s.push(x));
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (n − 1) sample variance.
    pub variance: f64,
}

pub fn summary_stats(values: &[f64]) -> Result<Summary> {
    if values.len() < 2 {
        return Err(Error::invalid(
            "values",
            format!("need at least 2 samples, got {}", values.len()),
        ));
    }
    let s: OnlineStats = values.iter().copied().collect();
    Ok(Summary {
        count: values.len(),
        mean: s.mean(),
        variance: s.variance(),
    })
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct GainHistogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub sample_count: usize,
    /// `[min, max]` of the data.
    pub range: (f64, f64),
    /// All values were equal; the single bin is a nominal width around them.
    pub degenerate: bool,
}

impl GainHistogram {
    pub fn bin_count(&self) -> usize {
        self.densities.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    /// Σ density · width, which is 1 for a well-formed histogram.
    pub fn total_mass(&self) -> f64 {
        self.bin_edges
            .windows(2)
            .zip(&self.densities)
            .map(|(w, d)| d * (w[1] - w[0]))
            .sum()
    }

    /// Density of the bin touching the upper edge of the data range.
    pub fn upper_edge_density(&self) -> f64 {
        *self.densities.last().expect("histogram has bins")
    }

    pub fn max_density(&self) -> f64 {
        self.densities.iter().copied().fold(0.0, f64::max)
    }

    /// Rebuilds a histogram from exported `(left, right, density)` rows.
    pub fn from_rows(rows: &[(f64, f64, f64)], sample_count: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("histogram", "no bins"));
        }
        let mut edges = Vec::with_capacity(rows.len() + 1);
        edges.push(rows[0].0);
        for (i, &(left, right, density)) in rows.iter().enumerate() {
            if right <= left || density < 0.0 || !density.is_finite() {
                return Err(Error::invalid("histogram", format!("bad bin {i}")));
            }
            if i > 0 && (left - edges[i]).abs() > 1e-12 * left.abs().max(1.0) {
                return Err(Error::invalid("histogram", format!("bin {i} is not contiguous")));
            }
            edges.push(right);
        }
        Ok(GainHistogram {
            range: (edges[0], *edges.last().unwrap()),
            bin_edges: edges,
            densities: rows.iter().map(|r| r.2).collect(),
            sample_count,
            degenerate: false,
        })
    }
}

/// Density-normalised histogram with `bin_count` uniform bins spanning the
/// data range.
pub fn histogram(values: &[f64], bin_count: usize) -> Result<GainHistogram> {
    if values.len() < MIN_HISTOGRAM_VALUES {
        return Err(Error::invalid(
            "values",
            format!("need at least {MIN_HISTOGRAM_VALUES} samples, got {}", values.len()),
        ));
    }
    if bin_count == 0 {
        return Err(Error::invalid("bin_count", "must be >= 1"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values", "contain a non-finite sample"));
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let n = values.len();
    if hi == lo {
        let half = (lo.abs() * 1e-9).max(1e-12);
        let edges = vec![lo - half, lo + half];
        return Ok(GainHistogram {
            densities: vec![1.0 / (edges[1] - edges[0])],
            bin_edges: edges,
            sample_count: n,
            range: (lo, hi),
            degenerate: true,
        });
    }
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0u64; bin_count];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bin_count - 1);
        counts[idx] += 1;
    }
    let bin_edges: Vec<f64> = (0..=bin_count)
        .map(|i| if i == bin_count { hi } else { lo + i as f64 * width })
        .collect();
    let densities = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, w)| c as f64 / (n as f64 * (w[1] - w[0])))
        .collect();
    Ok(GainHistogram {
        bin_edges,
        densities,
        sample_count: n,
        range: (lo, hi),
        degenerate: false,
    })
}

// ---------------------------------------------------------------------------
// Mode detection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Bin centre of the peak.
    pub location: f64,
    pub density: f64,
    pub prominence: f64,
}

/// Local maxima whose topographic prominence is at least
/// `min_prominence_frac` of the highest density and which sit at least
/// `min_separation_frac` of the data range away from any taller accepted
/// peak. The histogram is treated as zero outside its range, so edge bins
/// can be modes. Sorted by location.
pub fn detect_modes(hist: &GainHistogram, min_prominence_frac: f64, min_separation_frac: f64) -> Vec<Mode> {
    let d = &hist.densities;
    let n = d.len();
    let max_density = hist.max_density();
    if n == 0 || max_density <= 0.0 {
        return Vec::new();
    }
    let at = |i: isize| -> f64 {
        if i < 0 || i >= n as isize {
            0.0
        } else {
            d[i as usize]
        }
    };
    let centers: Vec<f64> = hist.centers().collect();

    let mut candidates = Vec::new();
    let mut i = 0usize;
    while i < n {
        // Collapse plateaus to their middle bin.
        let mut j = i;
        while j + 1 < n && d[j + 1] == d[i] {
            j += 1;
        }
        let left = at(i as isize - 1);
        let right = at(j as isize + 1);
        if d[i] > left && d[i] > right {
            let peak = d[i];
            let mut left_min = peak;
            let mut k = i as isize - 1;
            loop {
                let v = at(k);
                left_min = left_min.min(v);
                if k < 0 || v > peak {
                    break;
                }
                k -= 1;
            }
            let mut right_min = peak;
            let mut k = j as isize + 1;
            loop {
                let v = at(k);
                right_min = right_min.min(v);
                if k >= n as isize || v > peak {
                    break;
                }
                k += 1;
            }
            let prominence = peak - left_min.max(right_min);
            let mid = (i + j) / 2;
            candidates.push(Mode {
                location: centers[mid],
                density: peak,
                prominence,
            });
        }
        i = j + 1;
    }

    let span = hist.range.1 - hist.range.0;
    let min_gap = min_separation_frac * span;
    candidates.retain(|m| m.prominence >= min_prominence_frac * max_density);
    candidates.sort_by(|a, b| b.density.total_cmp(&a.density));
    let mut accepted: Vec<Mode> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|a| (a.location - c.location).abs() >= min_gap) {
            accepted.push(c);
        }
    }
    accepted.sort_by(|a, b| a.location.total_cmp(&b.location));
    accepted
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitTarget {
    Mean,
    Variance,
    Peak,
}

impl FitTarget {
    pub fn name(self) -> &'static str {
        match self {
            FitTarget::Mean => "mean",
            FitTarget::Variance => "variance",
            FitTarget::Peak => "peak",
        }
    }
}

impl std::str::FromStr for FitTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(FitTarget::Mean),
            "variance" => Ok(FitTarget::Variance),
            "peak" => Ok(FitTarget::Peak),
            other => Err(Error::invalid("target", format!("unknown fit target `{other}`"))),
        }
    }
}

/// The link scale needed to express a fitted γ as an angular deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkScale {
    pub w_eq: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub target: FitTarget,
    /// The default root.
    pub gamma: f64,
    /// Every root found, ascending. Only the variance fit can have two.
    pub roots: Vec<f64>,
    /// Net angular deviation for `gamma`, radians.
    pub sigma_theta: f64,
    /// Model statistic at `gamma` minus the target.
    pub residual: f64,
}

impl FitResult {
    fn new(target: FitTarget, gamma: f64, roots: Vec<f64>, residual: f64, link: &LinkScale) -> Result<Self> {
        Ok(FitResult {
            target,
            gamma,
            sigma_theta: sigma_theta_from_gamma(gamma, link.w_eq, link.distance)?,
            roots,
            residual,
        })
    }

    pub fn model(&self) -> MisalignmentModel {
        MisalignmentModel::normalized(self.gamma).expect("fitted gamma is positive")
    }
}

/// Inverts `μ̄ = γ²/(γ²+1)` on `A₀ = 1` data.
pub fn fit_gamma_to_mean(normalized_mean: f64, link: &LinkScale) -> Result<FitResult> {
    let m = normalized_mean;
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::NoFit(format!(
            "mean {m} is outside (0, 1); the model mean is always below A0 = 1"
        )));
    }
    let gamma = (m / (1.0 - m)).sqrt();
    let achieved = MisalignmentModel::normalized(gamma)?.mean();
    FitResult::new(FitTarget::Mean, gamma, vec![gamma], achieved - m, link)
}

/// Normalised model variance `γ²/(γ²+2) − (γ²/(γ²+1))²`.
pub fn normalized_variance(gamma: f64) -> f64 {
    let g = gamma * gamma;
    g / ((g + 2.0) * (g + 1.0) * (g + 1.0))
}

/// γ at which the normalised variance peaks: `γ² = (√5 − 1)/2`.
pub fn variance_peak_gamma() -> f64 {
    ((5f64.sqrt() - 1.0) / 2.0).sqrt()
}

pub fn max_normalized_variance() -> f64 {
    normalized_variance(variance_peak_gamma())
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * mid.max(1.0) {
            return mid;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the normalised variance equation for γ. The variance is not
/// monotone in γ, so up to two roots exist; the larger one is the default.
pub fn fit_gamma_to_variance(normalized_variance_target: f64, link: &LinkScale) -> Result<FitResult> {
    let v = normalized_variance_target;
    let v_max = max_normalized_variance();
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::NoFit(format!("variance {v} is not positive")));
    }
    if v > v_max {
        return Err(Error::NoFit(format!(
            "variance {v} exceeds the model maximum {v_max:.7}"
        )));
    }
    let peak = variance_peak_gamma();
    let f = |g: f64| normalized_variance(g) - v;
    let mut roots = Vec::with_capacity(2);
    if v < v_max {
        roots.push(bisect(f, 0.0, peak, 1e-13));
        let mut hi = peak * 2.0;
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        roots.push(bisect(f, peak, hi, 1e-13));
    } else {
        roots.push(peak);
    }
    let gamma = *roots.last().unwrap();
    FitResult::new(FitTarget::Variance, gamma, roots, normalized_variance(gamma) - v, link)
}

/// For γ > 1 the normalised density peaks at x̄ = 1 with value γ².
pub fn fit_gamma_to_peak(peak_density: f64, link: &LinkScale) -> Result<FitResult> {
    if !(peak_density >= 1.0) || !peak_density.is_finite() {
        return Err(Error::NoFit(format!(
            "peak density {peak_density} is below 1; no gamma >= 1 reproduces it"
        )));
    }
    let gamma = peak_density.sqrt();
    FitResult::new(FitTarget::Peak, gamma, vec![gamma], gamma * gamma - peak_density, link)
}

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

/// Kolmogorov distance `sup |F_n − F|` between the sample and `cdf`.
pub fn ks_distance_with<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64> {
    if values.len() < MIN_HISTOGRAM_VALUES {
        return Err(Error::invalid(
            "values",
            format!("need at least {MIN_HISTOGRAM_VALUES} samples, got {}", values.len()),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(worst)
}

pub fn ks_distance(values: &[f64], model: &MisalignmentModel) -> Result<f64> {
    ks_distance_with(values, |x| model.cdf(x))
}
