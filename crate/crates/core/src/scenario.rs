//! Scenario files.
//!
//! A scenario is a sectioned `key = value` text file. Physical quantities
//! carry their unit in the key name (`distance_m`, `f_if_hz`, `bias_az_deg`)
//! and angles may be given in either `_rad` or `_deg`. Unknown keys and
//! sections are rejected with their line number.
//!
//! ```text
//! [geometry]
//! carrier_frequency_hz = 130e9
//! distance_m = 341
//!
//! [motion]
//! kind = driven
//!
//! [mode]
//! frequency_hz = 10.3
//! amp_az_deg = 0.1
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::beam::{propagate_beam, BeamAtReceiver, LinkGeometry};
use crate::error::{Error, Result};
use crate::motion::{CriticalOptions, ModeComponent, MotionKind, MotionSpec};
use crate::signal::{
    dbi_to_linear, free_space_amplitude, noise_sigma_for_snr, static_gain, BudgetInputs, EnvelopeOptions, LinkBudget,
    SignalConfig, DEFAULT_ENVELOPE_RATE, DEFAULT_LOWPASS_CUTOFF,
};
use crate::stats::{FitTarget, DEFAULT_BINS, DEFAULT_MIN_PROMINENCE_FRAC, DEFAULT_MIN_SEPARATION_FRAC};

pub const DEFAULT_MOTION_RATE: f64 = 50_000.0;

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    key: String,
    value: String,
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    line: usize,
    name: String,
    entries: Vec<Entry>,
}

fn parse_sections(text: &str, path: &Path) -> Result<Vec<Section>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("unterminated section header `{content}`")))?
                .trim();
            sections.push(Section {
                line,
                name: name.to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| err(line, "key outside of any section".to_string()))?;
        let key = key.trim();
        if section.entries.iter().any(|e| e.key == key) {
            return Err(err(line, format!("duplicate key `{key}` in [{}]", section.name)));
        }
        section.entries.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

/// Typed access to one section. Every key must be consumed; whatever is
/// left over is reported as unknown.
struct Reader<'a> {
    path: &'a Path,
    section: &'a Section,
    used: HashSet<usize>,
}

impl<'a> Reader<'a> {
    fn new(path: &'a Path, section: &'a Section) -> Self {
        Reader {
            path,
            section,
            used: HashSet::new(),
        }
    }

    fn err(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message,
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Entry> {
        let idx = self.section.entries.iter().position(|e| e.key == key)?;
        self.used.insert(idx);
        Some(&self.section.entries[idx])
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| {
                self.err(
                    e.line,
                    format!("cannot parse `{}` for `{key}` in [{}]", e.value, self.section.name),
                )
            }),
        }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.get(key)?;
        if let Some(x) = v {
            if !x.is_finite() {
                let line = self.raw(key).map(|e| e.line).unwrap_or(0);
                return Err(self.err(line, format!("`{key}` must be finite")));
            }
        }
        Ok(v)
    }

    /// An angle given as `<stem>_rad` or `<stem>_deg`, in radians.
    fn angle(&mut self, stem: &str) -> Result<Option<f64>> {
        let rad = self.number(&format!("{stem}_rad"))?;
        let deg = self.number(&format!("{stem}_deg"))?;
        match (rad, deg) {
            (Some(_), Some(_)) => {
                let line = self.raw(&format!("{stem}_deg")).map(|e| e.line).unwrap_or(0);
                Err(self.err(line, format!("`{stem}` given in both _rad and _deg")))
            }
            (Some(r), None) => Ok(Some(r)),
            (None, Some(d)) => Ok(Some(d.to_radians())),
            (None, None) => Ok(None),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| self.err(e.line, format!("cannot parse list item `{s}` for `{key}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn finish(self) -> Result<()> {
        for (i, e) in self.section.entries.iter().enumerate() {
            if !self.used.contains(&i) {
                return Err(self.err(e.line, format!("unknown key `{}` in [{}]", e.key, self.section.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSpec {
    pub h_a: f64,
    pub g_t_dbi: f64,
    pub g_r_dbi: f64,
    pub v_tx: f64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec {
            h_a: 1.0,
            g_t_dbi: 50.0,
            g_r_dbi: 50.0,
            v_tx: 1.0,
        }
    }
}

/// How the receiver noise was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    SigmaVolts(f64),
    /// Carrier-to-noise ratio relative to the aligned received amplitude.
    SnrDb(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSpec {
    pub bins: usize,
    pub min_prominence_frac: f64,
    pub min_separation_frac: f64,
    pub envelope: EnvelopeOptions,
    /// Clamp normalised samples to 1.0 before statistics. Off by default.
    pub clamp: bool,
    /// Seconds skipped before statistics; five filter group delays if unset.
    pub settle_skip: Option<f64>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            bins: DEFAULT_BINS,
            min_prominence_frac: DEFAULT_MIN_PROMINENCE_FRAC,
            min_separation_frac: DEFAULT_MIN_SEPARATION_FRAC,
            envelope: EnvelopeOptions::default(),
            clamp: false,
            settle_skip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdfSweepSpec {
    pub sigma_theta: Vec<f64>,
    pub gammas: Vec<f64>,
    pub points: usize,
}

impl Default for PdfSweepSpec {
    fn default() -> Self {
        PdfSweepSpec {
            sigma_theta: Vec::new(),
            gammas: vec![1.0, 2.0, 5.0, 10.0, 20.0],
            points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSpec {
    pub samples: usize,
    /// Overrides the γ implied by the Gaussian motion sigma.
    pub gamma: Option<f64>,
    pub workers: usize,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        MonteCarloSpec {
            samples: 1_000_000,
            gamma: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub geometry: LinkGeometry,
    pub budget: BudgetSpec,
    pub motion: MotionSpec,
    pub motion_rate: f64,
    pub critical: CriticalOptions,
    pub f_if: f64,
    pub f_lo: Option<f64>,
    pub sample_rate: f64,
    pub duration: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub analysis: AnalysisSpec,
    pub pdf: PdfSweepSpec,
    pub montecarlo: MonteCarloSpec,
    pub fit_targets: Vec<FitTarget>,
    pub output_dir: Option<PathBuf>,
}

impl Default for Scenario {
    /// The measured link with a noise-free, perfectly aligned static
    /// pointing and a one second capture.
    fn default() -> Self {
        Scenario {
            name: "default".into(),
            description: String::new(),
            geometry: LinkGeometry::reference_link(),
            budget: BudgetSpec::default(),
            motion: MotionSpec::fixed(0.0, 0.0),
            motion_rate: DEFAULT_MOTION_RATE,
            critical: CriticalOptions::default(),
            f_if: 400e3,
            f_lo: None,
            sample_rate: 5e6,
            duration: 1.0,
            noise: NoiseSpec::SigmaVolts(0.0),
            seed: 0,
            analysis: AnalysisSpec::default(),
            pdf: PdfSweepSpec::default(),
            montecarlo: MonteCarloSpec::default(),
            fit_targets: vec![FitTarget::Mean, FitTarget::Variance, FitTarget::Peak],
            output_dir: None,
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    parse_scenario(&text, path)
}

/// Parses and validates scenario text. `path` is only used in messages.
pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario> {
    let sections = parse_sections(text, path)?;
    let mut sc = Scenario {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into()),
        ..Scenario::default()
    };
    let mut seen = HashSet::new();
    let mut geometry = (
        sc.geometry.carrier_frequency(),
        sc.geometry.tx_waist(),
        sc.geometry.distance(),
        sc.geometry.rx_radius(),
    );
    let mut kind: Option<(usize, String)> = None;
    let mut sigma = (0.0, 0.0);
    let mut bandwidth = None;
    let mut bias = (0.0, 0.0);
    let mut modes = Vec::new();
    let mut noise_keys = (None, None);
    let mut motion_line = 0;

    for s in &sections {
        if s.name != "mode" && !seen.insert(s.name.clone()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: s.line,
                message: format!("duplicate section [{}]", s.name),
            });
        }
        let mut r = Reader::new(path, s);
        match s.name.as_str() {
            "scenario" => {
                if let Some(n) = r.get::<String>("name")? {
                    sc.name = n;
                }
                if let Some(d) = r.get::<String>("description")? {
                    sc.description = d;
                }
            }
            "geometry" => {
                geometry.0 = r.number("carrier_frequency_hz")?.unwrap_or(geometry.0);
                geometry.1 = r.number("tx_waist_m")?.unwrap_or(geometry.1);
                geometry.2 = r.number("distance_m")?.unwrap_or(geometry.2);
                geometry.3 = r.number("rx_radius_m")?.unwrap_or(geometry.3);
            }
            "budget" => {
                let b = &mut sc.budget;
                b.h_a = r.number("h_a")?.unwrap_or(b.h_a);
                b.g_t_dbi = r.number("g_t_dbi")?.unwrap_or(b.g_t_dbi);
                b.g_r_dbi = r.number("g_r_dbi")?.unwrap_or(b.g_r_dbi);
                b.v_tx = r.number("v_tx_v")?.unwrap_or(b.v_tx);
            }
            "motion" => {
                motion_line = s.line;
                if let Some(e) = r.raw("kind") {
                    kind = Some((e.line, e.value.clone()));
                }
                sigma.0 = r.angle("sigma_az")?.unwrap_or(0.0);
                sigma.1 = r.angle("sigma_el")?.unwrap_or(0.0);
                bandwidth = r.number("gaussian_bandwidth_hz")?;
                bias.0 = r.angle("bias_az")?.unwrap_or(0.0);
                bias.1 = r.angle("bias_el")?.unwrap_or(0.0);
                sc.motion_rate = r.number("motion_rate_hz")?.unwrap_or(sc.motion_rate);
                sc.critical.window = r.number("period_window_s")?;
                sc.critical.cluster_tolerance = r.number("cluster_tolerance")?.unwrap_or(sc.critical.cluster_tolerance);
            }
            "mode" => {
                let frequency = r.number("frequency_hz")?.ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: s.line,
                    message: "[mode] needs frequency_hz".into(),
                })?;
                let amp_az = r.angle("amp_az")?.unwrap_or(0.0);
                let amp_el = r.angle("amp_el")?.unwrap_or(0.0);
                let phase_az = r.angle("phase_az")?.unwrap_or(0.0);
                let phase_el = r.angle("phase_el")?.unwrap_or(0.0);
                modes.push(
                    ModeComponent::new(frequency, amp_az, amp_el, phase_az, phase_el).map_err(|e| Error::Parse {
                        path: path.to_path_buf(),
                        line: s.line,
                        message: e.to_string(),
                    })?,
                );
            }
            "signal" => {
                sc.f_if = r.number("f_if_hz")?.unwrap_or(sc.f_if);
                sc.f_lo = r.number("f_lo_hz")?;
                sc.sample_rate = r.number("sample_rate_hz")?.unwrap_or(sc.sample_rate);
                sc.duration = r.number("duration_s")?.unwrap_or(sc.duration);
                let sigma_line = r.raw("noise_sigma_v").map(|e| e.line);
                noise_keys = (
                    r.number("noise_sigma_v")?.map(|v| (sigma_line.unwrap_or(0), v)),
                    r.number("snr_db")?,
                );
                sc.seed = r.get("seed")?.unwrap_or(sc.seed);
            }
            "analysis" => {
                let a = &mut sc.analysis;
                a.bins = r.get("bins")?.unwrap_or(a.bins);
                a.min_prominence_frac = r.number("min_prominence_frac")?.unwrap_or(a.min_prominence_frac);
                a.min_separation_frac = r.number("min_separation_frac")?.unwrap_or(a.min_separation_frac);
                a.envelope.lowpass_cutoff = r.number("lowpass_cutoff_hz")?.unwrap_or(DEFAULT_LOWPASS_CUTOFF);
                a.envelope.output_rate = r.number("envelope_rate_hz")?.unwrap_or(DEFAULT_ENVELOPE_RATE);
                a.clamp = r.get("clamp")?.unwrap_or(false);
                a.settle_skip = r.number("settle_skip_s")?;
            }
            "pdf" => {
                let p = &mut sc.pdf;
                if let Some(list) = r.list::<f64>("sigma_theta_deg")? {
                    p.sigma_theta = list.into_iter().map(f64::to_radians).collect();
                    p.gammas.clear();
                }
                if let Some(list) = r.list("gamma")? {
                    p.gammas = list;
                }
                p.points = r.get("points")?.unwrap_or(p.points);
            }
            "montecarlo" => {
                let m = &mut sc.montecarlo;
                m.samples = r.get("samples")?.unwrap_or(m.samples);
                m.gamma = r.number("gamma")?;
                m.workers = r.get("workers")?.unwrap_or(m.workers);
            }
            "fit" => {
                if let Some(t) = r.list("targets")? {
                    sc.fit_targets = t;
                }
            }
            "output" => {
                sc.output_dir = r.get::<String>("dir")?.map(PathBuf::from);
            }
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: s.line,
                    message: format!("unknown section [{other}]"),
                })
            }
        }
        r.finish()?;
    }

    sc.geometry = LinkGeometry::new(geometry.0, geometry.1, geometry.2, geometry.3)?;
    let kind = match kind {
        None if modes.is_empty() && sigma == (0.0, 0.0) => MotionKind::Static,
        None => MotionKind::Driven,
        Some((line, k)) => match k.as_str() {
            "gaussian" => MotionKind::Gaussian,
            "driven" => MotionKind::Driven,
            "static" => MotionKind::Static,
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("motion kind must be gaussian, driven or static, got `{k}`"),
                })
            }
        },
    };
    sc.motion = MotionSpec {
        kind,
        gaussian_sigma_az: sigma.0,
        gaussian_sigma_el: sigma.1,
        gaussian_bandwidth: bandwidth,
        modes,
        bias_az: bias.0,
        bias_el: bias.1,
    };
    sc.noise = match noise_keys {
        (Some((line, _)), Some(_)) => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "give either noise_sigma_v or snr_db, not both".into(),
            })
        }
        (Some((_, v)), None) => NoiseSpec::SigmaVolts(v),
        (None, Some(db)) => NoiseSpec::SnrDb(db),
        (None, None) => NoiseSpec::SigmaVolts(0.0),
    };
    sc.validate().map_err(|e| match e {
        Error::Parse { .. } => e,
        other if motion_line > 0 && matches!(other, Error::InvalidParameter { ref name, .. } if name == "motion") => {
            Error::Parse {
                path: path.to_path_buf(),
                line: motion_line,
                message: other.to_string(),
            }
        }
        other => other,
    })?;
    Ok(sc)
}

impl Scenario {
    /// Cross-field checks.
    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        self.budget()?;
        self.signal_config(self.seed)?.validate()?;
        if !(self.motion_rate > 0.0) {
            return Err(Error::invalid("motion_rate_hz", "must be positive"));
        }
        let f_max = self.motion.max_mode_frequency();
        for limit in [self.motion_rate, self.sample_rate] {
            if f_max > 0.0 && limit <= 2.0 * f_max {
                return Err(Error::Aliasing {
                    rate_hz: limit,
                    max_freq_hz: f_max,
                });
            }
        }
        if let Some(b) = self.motion.gaussian_bandwidth {
            if b >= self.motion_rate / 2.0 {
                return Err(Error::Aliasing {
                    rate_hz: self.motion_rate,
                    max_freq_hz: b,
                });
            }
        }
        let a = &self.analysis;
        if a.bins == 0 {
            return Err(Error::invalid("bins", "must be >= 1"));
        }
        for (name, v) in [
            ("min_prominence_frac", a.min_prominence_frac),
            ("min_separation_frac", a.min_separation_frac),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1), got {v}")));
            }
        }
        if a.envelope.lowpass_cutoff >= self.f_if {
            return Err(Error::invalid(
                "lowpass_cutoff_hz",
                format!("{} Hz must be below the IF {} Hz", a.envelope.lowpass_cutoff, self.f_if),
            ));
        }
        if a.envelope.output_rate <= 2.0 * a.envelope.lowpass_cutoff || a.envelope.output_rate > self.sample_rate {
            return Err(Error::invalid(
                "envelope_rate_hz",
                "must exceed twice the low-pass cutoff and not exceed the sample rate",
            ));
        }
        if let Some(s) = a.settle_skip {
            if !(s >= 0.0) {
                return Err(Error::invalid("settle_skip_s", "must be >= 0"));
            }
        }
        if self.pdf.points < 2 {
            return Err(Error::invalid("points", "pdf sweeps need at least 2 points"));
        }
        if self.montecarlo.samples < 100 || self.montecarlo.workers == 0 {
            return Err(Error::invalid("montecarlo", "needs >= 100 samples and >= 1 worker"));
        }
        Ok(())
    }

    pub fn beam(&self) -> BeamAtReceiver {
        propagate_beam(&self.geometry)
    }

    pub fn budget(&self) -> Result<LinkBudget> {
        static_gain(BudgetInputs {
            h_pl: free_space_amplitude(self.geometry.wavelength(), self.geometry.distance()),
            h_a: self.budget.h_a,
            g_t: dbi_to_linear(self.budget.g_t_dbi),
            g_r: dbi_to_linear(self.budget.g_r_dbi),
            v_tx: self.budget.v_tx,
        })
    }

    /// Received amplitude with perfect alignment, `V_rx A₀`.
    pub fn aligned_amplitude(&self) -> Result<f64> {
        Ok(self.budget()?.v_rx * self.beam().a0)
    }

    pub fn noise_sigma(&self) -> Result<f64> {
        Ok(match self.noise {
            NoiseSpec::SigmaVolts(v) => v,
            NoiseSpec::SnrDb(db) => noise_sigma_for_snr(db, self.aligned_amplitude()?),
        })
    }

    pub fn signal_config(&self, seed: u64) -> Result<SignalConfig> {
        Ok(SignalConfig {
            f_if: self.f_if,
            f_lo: self.f_lo,
            carrier_frequency: Some(self.geometry.carrier_frequency()),
            sample_rate: self.sample_rate,
            duration: self.duration,
            noise_sigma: self.noise_sigma()?,
            seed,
        })
    }

    /// Motion of the reference capture: the same static bias, nothing else.
    pub fn baseline_motion(&self) -> MotionSpec {
        MotionSpec::fixed(self.motion.bias_az, self.motion.bias_el)
    }
}
