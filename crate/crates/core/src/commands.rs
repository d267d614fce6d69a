//! The subcommands behind the command-line front end. Each takes a loaded
//! scenario, a seed and an output directory and returns the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use crate::dsp::EnvelopeExtractor;
use crate::error::{Error, Result};
use crate::io::{
    read_histogram_csv, write_histogram_csv, write_table, CaptureMeta, CaptureReader, CaptureWriter, Report,
};
use crate::misalignment::{gamma_from_sigma_theta, sigma_theta_from_gamma, MisalignmentModel};
use crate::motion::{gain_trace, synthesize_pointing, MotionKind, MotionSpec, PointingTrace};
use crate::plot::{Curve, Figure};
use crate::rng::{split_seed, streams};
use crate::scenario::{AnalysisSpec, Scenario};
use crate::signal::{baseline_reference, EnvelopeTrace, IfSynthesizer, SignalConfig};
use crate::stats::{
    detect_modes, fit_gamma_to_mean, fit_gamma_to_peak, fit_gamma_to_variance, histogram, ks_distance, summary_stats,
    FitResult, FitTarget, GainHistogram, LinkScale, Mode, Summary,
};

/// Samples handed to the synthesiser and the CSV writer per step.
pub const BLOCK_SAMPLES: usize = 1 << 16;
/// Longest motion trace held in memory.
pub const MAX_MOTION_SAMPLES: f64 = 1e8;
/// Best-fit Kolmogorov distance above which the analytic model is reported
/// as not describing the data.
pub const ANALYTIC_FIT_KS_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Short human-readable result.
    pub summary: String,
}

fn prepare(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    Ok(())
}

fn link_scale(sc: &Scenario) -> LinkScale {
    LinkScale {
        w_eq: sc.beam().w_eq,
        distance: sc.geometry.distance(),
    }
}

/// Normalised pdf on `points` uniform abscissae in `(0, 1]`.
fn pdf_curve(model: &MisalignmentModel, points: usize) -> Vec<(f64, f64)> {
    (1..=points)
        .map(|i| i as f64 / points as f64)
        .map(|x| (x, model.pdf(x)))
        .filter(|(_, d)| !d.is_unbounded())
        .map(|(x, d)| (x, d.value()))
        .collect()
}

// ---------------------------------------------------------------------------
// propagate
// ---------------------------------------------------------------------------

pub fn run_propagate(sc: &Scenario, out_dir: &Path) -> Result<Outcome> {
    prepare(out_dir)?;
    let g = &sc.geometry;
    let beam = sc.beam();
    let budget = sc.budget()?;
    let mut r = Report::new();
    r.push("carrier_frequency_hz", g.carrier_frequency())
        .push("tx_waist_m", g.tx_waist())
        .push("distance_m", g.distance())
        .push("rx_radius_m", g.rx_radius())
        .push("wavelength_m", g.wavelength())
        .push("rayleigh_range_m", g.rayleigh_range())
        .push("beam_radius_m", beam.beam_radius)
        .push("u", beam.u)
        .push("a0", beam.a0)
        .push("w_eq_m", beam.w_eq)
        .push("h_pl", budget.h_pl)
        .push("c_static", budget.c_static)
        .push("v_rx_v", budget.v_rx)
        .push("aligned_amplitude_v", budget.v_rx * beam.a0);
    let path = out_dir.join("beam.txt");
    r.write(&path)?;
    Ok(Outcome {
        files: vec![path],
        summary: r.render(),
    })
}

// ---------------------------------------------------------------------------
// pdf
// ---------------------------------------------------------------------------

pub fn run_pdf_sweep(sc: &Scenario, out_dir: &Path) -> Result<Outcome> {
    prepare(out_dir)?;
    let beam = sc.beam();
    let d = sc.geometry.distance();
    let mut curves = Vec::new();
    for &s in &sc.pdf.sigma_theta {
        curves.push((gamma_from_sigma_theta(s, beam.w_eq, d)?, s));
    }
    for &g in &sc.pdf.gammas {
        curves.push((g, sigma_theta_from_gamma(g, beam.w_eq, d)?));
    }
    if curves.is_empty() {
        return Err(Error::invalid("pdf", "no sigma_theta_deg or gamma values to sweep"));
    }
    let mut rows = Vec::new();
    let mut fig = Figure::new("Normalized misalignment gain pdf", "normalized gain", "density");
    let mut summary = String::new();
    for &(gamma, sigma) in &curves {
        let model = MisalignmentModel::normalized(gamma)?;
        let pts = pdf_curve(&model, sc.pdf.points);
        rows.extend(pts.iter().map(|&(x, y)| vec![gamma, sigma.to_degrees(), x, y]));
        fig.curves.push(Curve {
            label: format!("gamma = {gamma:.4}, sigma_theta = {:.5} deg", sigma.to_degrees()),
            points: pts,
        });
        summary.push_str(&format!("gamma={gamma} sigma_theta_deg={}\n", sigma.to_degrees()));
    }
    let csv = out_dir.join("pdf_curves.csv");
    write_table(&csv, &["gamma", "sigma_theta_deg", "x", "density"], rows)?;
    let svg = out_dir.join("pdf_curves.svg");
    fig.write(&svg)?;
    Ok(Outcome {
        files: vec![csv, svg],
        summary,
    })
}

// ---------------------------------------------------------------------------
// montecarlo
// ---------------------------------------------------------------------------

/// γ for Monte Carlo runs: explicit, or implied by isotropic Gaussian motion.
pub fn montecarlo_gamma(sc: &Scenario) -> Result<f64> {
    if let Some(g) = sc.montecarlo.gamma {
        return Ok(g);
    }
    let m = &sc.motion;
    if m.kind != MotionKind::Gaussian || m.gaussian_sigma_az != m.gaussian_sigma_el || m.gaussian_sigma_az <= 0.0 {
        return Err(Error::invalid(
            "montecarlo",
            "set [montecarlo] gamma or use gaussian motion with equal sigma_az and sigma_el",
        ));
    }
    gamma_from_sigma_theta(m.gaussian_sigma_az, sc.beam().w_eq, sc.geometry.distance())
}

pub fn run_montecarlo(sc: &Scenario, seed: u64, out_dir: &Path) -> Result<Outcome> {
    prepare(out_dir)?;
    let gamma = montecarlo_gamma(sc)?;
    let model = MisalignmentModel::normalized(gamma)?;
    let samples = model.sample_parallel(sc.montecarlo.samples, seed, sc.montecarlo.workers);
    let stats = summary_stats(&samples)?;
    let ks = ks_distance(&samples, &model)?;
    let hist = histogram(&samples, sc.analysis.bins)?;

    let mut r = Report::new();
    r.push("gamma", gamma)
        .push("samples", samples.len())
        .push("seed", seed)
        .push("sample_mean", stats.mean)
        .push("analytic_mean", model.mean())
        .push("sample_variance", stats.variance)
        .push("analytic_variance", model.variance())
        .push("ks_distance", ks);
    let report = out_dir.join("montecarlo.txt");
    r.write(&report)?;
    let csv = out_dir.join("montecarlo_histogram.csv");
    write_histogram_csv(&csv, &hist)?;
    let mut fig = Figure::new(
        &format!("Monte Carlo, gamma = {gamma:.4}"),
        "normalized gain",
        "density",
    );
    fig.curves.push(Curve {
        label: "analytic pdf".into(),
        points: pdf_curve(&model, 400),
    });
    fig.histogram = Some(hist);
    let svg = out_dir.join("montecarlo.svg");
    fig.write(&svg)?;
    Ok(Outcome {
        files: vec![report, csv, svg],
        summary: r.render(),
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Motion and gain for `spec` covering `duration` plus one motion sample.
pub fn pointing_for(sc: &Scenario, spec: &MotionSpec, seed: u64) -> Result<PointingTrace> {
    let n = sc.duration * sc.motion_rate;
    if n > MAX_MOTION_SAMPLES {
        return Err(Error::invalid(
            "duration_s",
            format!("{n} motion samples exceed the in-memory limit of {MAX_MOTION_SAMPLES}"),
        ));
    }
    let trace = synthesize_pointing(spec, sc.duration + 1.0 / sc.motion_rate, sc.motion_rate, seed)?;
    gain_trace(trace, &sc.beam(), sc.geometry.distance())
}

/// Streams one capture through the synthesiser and the envelope extractor,
/// writing the samples to `capture` if given.
pub fn stream_capture(
    sc: &Scenario,
    gain: &PointingTrace,
    cfg: SignalConfig,
    capture: Option<(&Path, &CaptureMeta)>,
) -> Result<EnvelopeTrace> {
    let v_rx = sc.budget()?.v_rx;
    let mut synth = IfSynthesizer::new(gain, cfg, v_rx)?;
    let opts = sc.analysis.envelope;
    let mut extractor = EnvelopeExtractor::new(cfg.sample_rate, cfg.f_if, opts.lowpass_cutoff, opts.output_rate)?;
    let mut writer = capture.map(|(p, m)| CaptureWriter::create(p, m)).transpose()?;
    let mut pairs = Vec::new();
    while let Some(block) = synth.next_block(BLOCK_SAMPLES) {
        if let Some(w) = writer.as_mut() {
            w.write_block(&block)?;
        }
        pairs.extend(extractor.process(&block));
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    Ok(EnvelopeTrace::from_pairs(
        pairs,
        extractor.output_rate(),
        extractor.group_delay(),
    ))
}

/// Seconds skipped before statistics.
pub fn settle_skip(analysis: &AnalysisSpec, env: &EnvelopeTrace) -> f64 {
    analysis.settle_skip.unwrap_or_else(|| env.settle_time())
}

/// Normalised, settled (and optionally clamped) samples of `env`.
pub fn normalized_samples(analysis: &AnalysisSpec, env: &EnvelopeTrace, epsilon_0: f64) -> Vec<f64> {
    let start = env.first_index_after(settle_skip(analysis, env));
    env.envelope[start.min(env.envelope.len())..]
        .iter()
        .map(|e| e / epsilon_0)
        .map(|v| if analysis.clamp { v.min(1.0) } else { v })
        .collect()
}

/// In-memory simulation of a jittered capture and its reference,
/// returning both envelopes and `ε₀`.
#[derive(Debug, Clone)]
pub struct SimulatedRun {
    pub pointing: PointingTrace,
    pub envelope: EnvelopeTrace,
    pub baseline: EnvelopeTrace,
    pub epsilon_0: f64,
}

impl SimulatedRun {
    pub fn normalized(&self, analysis: &AnalysisSpec) -> Vec<f64> {
        normalized_samples(analysis, &self.envelope, self.epsilon_0)
    }
}

pub fn simulate_envelopes(sc: &Scenario, seed: u64) -> Result<SimulatedRun> {
    simulate_inner(sc, seed, None)
}

fn simulate_inner(sc: &Scenario, seed: u64, out_dir: Option<&Path>) -> Result<SimulatedRun> {
    let pointing = pointing_for(sc, &sc.motion, seed)?;
    let reference = pointing_for(sc, &sc.baseline_motion(), seed)?;
    let cfg = sc.signal_config(seed)?;
    let baseline_cfg = SignalConfig {
        seed: split_seed(seed, streams::BASELINE),
        ..cfg
    };
    let meta = |description: &str, s: u64| CaptureMeta {
        sample_rate: cfg.sample_rate,
        f_if: cfg.f_if,
        description: format!("{}: {description}", sc.name),
        seed: s,
    };
    let (cap_path, base_path) = match out_dir {
        Some(d) => (Some(d.join("capture.csv")), Some(d.join("baseline.csv"))),
        None => (None, None),
    };
    let cap_meta = meta("jittered capture", seed);
    let base_meta = meta("baseline capture", seed);
    let envelope = stream_capture(sc, &pointing, cfg, cap_path.as_deref().map(|p| (p, &cap_meta)))?;
    let baseline = stream_capture(
        sc,
        &reference,
        baseline_cfg,
        base_path.as_deref().map(|p| (p, &base_meta)),
    )?;
    let epsilon_0 = baseline_reference(&baseline, settle_skip(&sc.analysis, &baseline))?;
    Ok(SimulatedRun {
        pointing,
        envelope,
        baseline,
        epsilon_0,
    })
}

pub fn run_simulate(sc: &Scenario, seed: u64, out_dir: &Path) -> Result<Outcome> {
    prepare(out_dir)?;
    let run = simulate_inner(sc, seed, Some(out_dir))?;
    let p = &run.pointing;
    let pointing = out_dir.join("pointing.csv");
    write_table(
        &pointing,
        &["time_s", "theta_x_rad", "theta_y_rad", "displacement_m", "gain"],
        (0..p.len()).map(|i| {
            vec![
                p.sample_times[i],
                p.theta_x[i],
                p.theta_y[i],
                p.displacement[i],
                p.gain[i],
            ]
        }),
    )?;
    let env = &run.envelope;
    let envelope = out_dir.join("envelope.csv");
    write_table(
        &envelope,
        &["time_s", "envelope_v", "normalized"],
        env.sample_times
            .iter()
            .zip(&env.envelope)
            .map(|(&t, &e)| vec![t, e, e / run.epsilon_0]),
    )?;
    let cfg = sc.signal_config(seed)?;
    let mut r = Report::new();
    r.push("scenario", &sc.name)
        .push("seed", seed)
        .push("samples", cfg.sample_count())
        .push("sample_rate_hz", cfg.sample_rate)
        .push("noise_sigma_v", cfg.noise_sigma)
        .push("v_rx_v", sc.budget()?.v_rx)
        .push("a0", sc.beam().a0)
        .push("epsilon_0_v", run.epsilon_0)
        .push("envelope_rate_hz", env.sample_rate)
        .push("envelope_rows", env.envelope.len())
        .push("group_delay_s", env.group_delay);
    let report = out_dir.join("simulate.txt");
    r.write(&report)?;
    Ok(Outcome {
        files: vec![
            out_dir.join("capture.csv"),
            out_dir.join("capture.meta"),
            out_dir.join("baseline.csv"),
            out_dir.join("baseline.meta"),
            pointing,
            envelope,
            report,
        ],
        summary: r.render(),
    })
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

/// Everything derived from one set of normalised samples.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub summary: Summary,
    pub histogram: GainHistogram,
    pub modes: Vec<Mode>,
    pub fraction_above_one: f64,
    /// Per target: the fit, or why there is none.
    pub fits: Vec<(FitTarget, std::result::Result<FitResult, String>)>,
    /// Kolmogorov distance of each successful fit, same order as `fits`.
    pub ks: Vec<Option<f64>>,
}

impl Analysis {
    pub fn fit(&self, target: FitTarget) -> Option<&FitResult> {
        self.fits
            .iter()
            .find(|(t, _)| *t == target)
            .and_then(|(_, r)| r.as_ref().ok())
    }

    pub fn best_ks(&self) -> Option<f64> {
        self.ks.iter().flatten().copied().reduce(f64::min)
    }

    /// Relative gap between the mean-fit and variance-fit γ.
    pub fn mean_variance_disagreement(&self) -> Option<f64> {
        let m = self.fit(FitTarget::Mean)?.gamma;
        let v = self.fit(FitTarget::Variance)?.gamma;
        Some((m - v).abs() / m.min(v))
    }

    pub fn analytic_fit_ok(&self) -> bool {
        self.best_ks().is_some_and(|k| k <= ANALYTIC_FIT_KS_LIMIT)
    }
}

fn fit_target(target: FitTarget, mean: f64, variance: f64, peak: f64, link: &LinkScale) -> Result<FitResult> {
    match target {
        FitTarget::Mean => fit_gamma_to_mean(mean, link),
        FitTarget::Variance => fit_gamma_to_variance(variance, link),
        FitTarget::Peak => fit_gamma_to_peak(peak, link),
    }
}

pub fn analyze_values(values: &[f64], analysis: &AnalysisSpec, link: &LinkScale) -> Result<Analysis> {
    let summary = summary_stats(values)?;
    let hist = histogram(values, analysis.bins)?;
    let modes = detect_modes(&hist, analysis.min_prominence_frac, analysis.min_separation_frac);
    let above = values.iter().filter(|&&v| v > 1.0).count() as f64 / values.len() as f64;
    let mut fits = Vec::new();
    let mut ks = Vec::new();
    for target in [FitTarget::Mean, FitTarget::Variance, FitTarget::Peak] {
        match fit_target(target, summary.mean, summary.variance, hist.max_density(), link) {
            Ok(f) => {
                ks.push(Some(ks_distance(values, &f.model())?));
                fits.push((target, Ok(f)));
            }
            Err(Error::NoFit(reason)) => {
                ks.push(None);
                fits.push((target, Err(reason)));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Analysis {
        summary,
        histogram: hist,
        modes,
        fraction_above_one: above,
        fits,
        ks,
    })
}

fn envelope_of_file(path: &Path, analysis: &AnalysisSpec) -> Result<(CaptureMeta, EnvelopeTrace)> {
    let mut reader = CaptureReader::open(path)?;
    let meta = reader.meta().clone();
    let opts = analysis.envelope;
    let mut extractor = EnvelopeExtractor::new(meta.sample_rate, meta.f_if, opts.lowpass_cutoff, opts.output_rate)?;
    let mut pairs = Vec::new();
    while let Some(block) = reader.next_block(BLOCK_SAMPLES)? {
        pairs.extend(extractor.process(&block));
    }
    Ok((
        meta,
        EnvelopeTrace::from_pairs(pairs, extractor.output_rate(), extractor.group_delay()),
    ))
}

/// Normalised samples of `capture` referenced to `baseline`, plus `ε₀`.
pub fn normalized_from_files(capture: &Path, baseline: &Path, analysis: &AnalysisSpec) -> Result<(Vec<f64>, f64)> {
    let (cap_meta, env) = envelope_of_file(capture, analysis)?;
    let (base_meta, base_env) = envelope_of_file(baseline, analysis)?;
    cap_meta.check_compatible(&base_meta)?;
    let skip = settle_skip(analysis, &base_env);
    let epsilon_0 = baseline_reference(&base_env, skip).map_err(|_| {
        Error::invalid(
            "baseline",
            format!("capture is shorter than the {skip} s settling window"),
        )
    })?;
    Ok((normalized_samples(analysis, &env, epsilon_0), epsilon_0))
}

fn analysis_report(r: &mut Report, a: &Analysis) {
    r.push("samples", a.summary.count)
        .push("mean", a.summary.mean)
        .push("variance", a.summary.variance)
        .push("fraction_above_one", a.fraction_above_one)
        .push("bins", a.histogram.bin_count())
        .push("modes", a.modes.len())
        .push(
            "mode_locations",
            a.modes
                .iter()
                .map(|m| m.location.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    for ((target, fit), ks) in a.fits.iter().zip(&a.ks) {
        match (fit, ks) {
            (Ok(f), Some(k)) => {
                r.push(&format!("{}_fit_gamma", target.name()), f.gamma);
                r.push(&format!("{}_fit_ks", target.name()), k);
            }
            _ => {
                r.push(&format!("{}_fit_gamma", target.name()), "none");
            }
        }
    }
    if let Some(d) = a.mean_variance_disagreement() {
        r.push("mean_variance_gamma_disagreement", d);
    }
    r.push(
        "best_fit_ks",
        a.best_ks().map(|k| k.to_string()).unwrap_or_else(|| "none".into()),
    );
    r.push(
        "analytic_fit",
        if a.analytic_fit_ok() { "consistent" } else { "rejected" },
    );
}

fn analysis_figure(title: &str, a: &Analysis) -> Figure {
    let mut fig = Figure::new(title, "normalized gain", "density");
    let best = a
        .fits
        .iter()
        .zip(&a.ks)
        .filter_map(|((_, f), k)| Some((f.as_ref().ok()?, (*k)?)))
        .min_by(|x, y| x.1.total_cmp(&y.1));
    if let Some((f, k)) = best {
        let hi = a.histogram.range.1.min(1.0);
        let lo = a.histogram.range.0.max(0.0);
        let model = f.model();
        let points = (0..=400)
            .map(|i| lo + (hi - lo) * i as f64 / 400.0)
            .filter(|&x| x > 0.0)
            .map(|x| (x, model.pdf(x).value()))
            .collect();
        fig.curves.push(Curve {
            label: format!("{} fit, gamma = {:.4}, KS = {:.4}", f.target.name(), f.gamma, k),
            points,
        });
    }
    fig.markers = a.modes.iter().map(|m| m.location).collect();
    fig.histogram = Some(a.histogram.clone());
    fig
}

pub fn run_analyze(sc: &Scenario, capture: &Path, baseline: &Path, out_dir: &Path) -> Result<Outcome> {
    prepare(out_dir)?;
    let (values, epsilon_0) = normalized_from_files(capture, baseline, &sc.analysis)?;
    let a = analyze_values(&values, &sc.analysis, &link_scale(sc))?;
    let mut r = Report::new();
    let name = capture
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    r.push("capture", name).push("epsilon_0_v", epsilon_0);
    analysis_report(&mut r, &a);
    let report = out_dir.join("analysis.txt");
    r.write(&report)?;
    let csv = out_dir.join("histogram.csv");
    write_histogram_csv(&csv, &a.histogram)?;
    let svg = out_dir.join("histogram.svg");
    analysis_figure(&format!("{}: normalized gain", sc.name), &a).write(&svg)?;
    Ok(Outcome {
        files: vec![report, csv, svg],
        summary: r.render(),
    })
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum FitInput {
    /// Statistics given directly. Missing ones make their targets fail.
    Statistics {
        mean: Option<f64>,
        variance: Option<f64>,
        peak: Option<f64>,
    },
    Histogram(PathBuf),
    Capture {
        capture: PathBuf,
        baseline: PathBuf,
    },
}

/// Mean, variance and peak density of a histogram, treating each bin's mass
/// as sitting at its centre.
pub fn histogram_statistics(h: &GainHistogram) -> (f64, f64, f64) {
    let masses: Vec<(f64, f64)> = h
        .bin_edges
        .windows(2)
        .zip(&h.densities)
        .map(|(w, d)| (0.5 * (w[0] + w[1]), d * (w[1] - w[0])))
        .collect();
    let total: f64 = masses.iter().map(|m| m.1).sum();
    let mean = masses.iter().map(|(c, m)| c * m).sum::<f64>() / total;
    let var = masses.iter().map(|(c, m)| (c - mean).powi(2) * m).sum::<f64>() / total;
    (mean, var, h.max_density())
}

pub fn run_fit(sc: &Scenario, input: &FitInput, out_dir: &Path) -> Result<Outcome> {
    prepare(out_dir)?;
    let link = link_scale(sc);
    let (mean, variance, peak) = match input {
        FitInput::Statistics { mean, variance, peak } => (*mean, *variance, *peak),
        FitInput::Histogram(path) => {
            let (m, v, p) = histogram_statistics(&read_histogram_csv(path)?);
            (Some(m), Some(v), Some(p))
        }
        FitInput::Capture { capture, baseline } => {
            let (values, _) = normalized_from_files(capture, baseline, &sc.analysis)?;
            let s = summary_stats(&values)?;
            let h = histogram(&values, sc.analysis.bins)?;
            (Some(s.mean), Some(s.variance), Some(h.max_density()))
        }
    };
    let mut r = Report::new();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (i, &target) in sc.fit_targets.iter().enumerate() {
        if i > 0 {
            r.gap();
        }
        r.push("target", target.name());
        let stat = match target {
            FitTarget::Mean => mean,
            FitTarget::Variance => variance,
            FitTarget::Peak => peak,
        };
        let result = match stat {
            None => Err(Error::NoFit(format!("no {} statistic supplied", target.name()))),
            Some(v) => fit_target(target, v, v, v, &link),
        };
        match result {
            Ok(f) => {
                r.push("status", "ok")
                    .push("gamma", f.gamma)
                    .push("sigma_theta_deg", f.sigma_theta.to_degrees())
                    .push("residual", f.residual)
                    .push(
                        "roots",
                        f.roots.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(","),
                    );
                rows.extend(
                    pdf_curve(&f.model(), 400)
                        .into_iter()
                        .map(|(x, y)| vec![i as f64, f.gamma, x, y]),
                );
            }
            Err(Error::NoFit(reason)) => {
                r.push("status", "no_fit").push("reason", &reason);
                failures.push(format!("{}: {reason}", target.name()));
            }
            Err(e) => return Err(e),
        }
    }
    let report = out_dir.join("fit_report.txt");
    r.write(&report)?;
    let curves = out_dir.join("fit_curves.csv");
    write_table(&curves, &["target_index", "gamma", "x", "density"], rows)?;
    if !failures.is_empty() {
        return Err(Error::NoFit(format!(
            "{} (report written to {})",
            failures.join("; "),
            report.display()
        )));
    }
    Ok(Outcome {
        files: vec![report, curves],
        summary: r.render(),
    })
}
