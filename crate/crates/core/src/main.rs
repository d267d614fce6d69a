use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thzjitter::commands::{
    run_analyze, run_fit, run_montecarlo, run_pdf_sweep, run_propagate, run_simulate, FitInput, Outcome,
};
use thzjitter::scenario::{load_scenario, Scenario};
use thzjitter::stats::FitTarget;
use thzjitter::Result;

/// Pointing-jitter fading simulator and analysis toolkit.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file; the built-in defaults are used without one.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's [output] dir, then `out`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the beam and print the link quantities.
    Propagate(Common),
    /// Sweep the analytic pdf over sigma_theta or gamma values.
    Pdf(Common),
    /// Sample the analytic model and compare with its closed forms.
    Montecarlo(Common),
    /// Synthesize a jittered capture and its baseline.
    Simulate(Common),
    /// Normalize a capture against a baseline and summarize it.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Defaults to <out-dir>/capture.csv.
        #[arg(long)]
        capture: Option<PathBuf>,
        /// Defaults to <out-dir>/baseline.csv.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Fit gamma to a mean, variance or peak density.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Histogram CSV to fit.
        #[arg(long, conflicts_with_all = ["capture", "mean", "variance", "peak"])]
        histogram: Option<PathBuf>,
        /// Capture CSV to fit; needs --baseline.
        #[arg(long, requires = "baseline", conflicts_with_all = ["mean", "variance", "peak"])]
        capture: Option<PathBuf>,
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Normalized mean.
        #[arg(long)]
        mean: Option<f64>,
        /// Normalized variance.
        #[arg(long)]
        variance: Option<f64>,
        /// Highest normalized density.
        #[arg(long)]
        peak: Option<f64>,
        /// Comma-separated subset of mean, variance, peak. Defaults to the
        /// statistics given, else the scenario's [fit] targets.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<FitTarget>>,
    },
}

struct Context {
    scenario: Scenario,
    seed: u64,
    out_dir: PathBuf,
}

fn context(common: &Common) -> Result<Context> {
    let scenario = match &common.scenario {
        Some(p) => load_scenario(p)?,
        None => Scenario::default(),
    };
    let out_dir = common
        .out_dir
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(Context {
        seed: common.seed.unwrap_or(scenario.seed),
        scenario,
        out_dir,
    })
}

fn or_default(path: &Option<PathBuf>, dir: &Path, name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| dir.join(name))
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Propagate(c) => {
            let ctx = context(&c)?;
            run_propagate(&ctx.scenario, &ctx.out_dir)
        }
        Command::Pdf(c) => {
            let ctx = context(&c)?;
            run_pdf_sweep(&ctx.scenario, &ctx.out_dir)
        }
        Command::Montecarlo(c) => {
            let ctx = context(&c)?;
            run_montecarlo(&ctx.scenario, ctx.seed, &ctx.out_dir)
        }
        Command::Simulate(c) => {
            let ctx = context(&c)?;
            run_simulate(&ctx.scenario, ctx.seed, &ctx.out_dir)
        }
        Command::Analyze {
            common,
            capture,
            baseline,
        } => {
            let ctx = context(&common)?;
            let capture = or_default(&capture, &ctx.out_dir, "capture.csv");
            let baseline = or_default(&baseline, &ctx.out_dir, "baseline.csv");
            run_analyze(&ctx.scenario, &capture, &baseline, &ctx.out_dir)
        }
        Command::Fit {
            common,
            histogram,
            capture,
            baseline,
            mean,
            variance,
            peak,
            targets,
        } => {
            let mut ctx = context(&common)?;
            let supplied: Vec<FitTarget> = [
                (FitTarget::Mean, mean),
                (FitTarget::Variance, variance),
                (FitTarget::Peak, peak),
            ]
            .into_iter()
            .filter_map(|(t, v)| v.map(|_| t))
            .collect();
            // Statistics given on the command line select their own targets.
            if let Some(t) = targets.or((!supplied.is_empty()).then_some(supplied)) {
                ctx.scenario.fit_targets = t;
            }
            let input = match (histogram, capture, baseline) {
                (Some(h), _, _) => FitInput::Histogram(h),
                (None, Some(capture), Some(baseline)) => FitInput::Capture { capture, baseline },
                _ if mean.is_some() || variance.is_some() || peak.is_some() => {
                    FitInput::Statistics { mean, variance, peak }
                }
                _ => FitInput::Histogram(ctx.out_dir.join("histogram.csv")),
            };
            run_fit(&ctx.scenario, &input, &ctx.out_dir)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
