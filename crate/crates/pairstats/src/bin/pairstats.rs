//! Command-line front end: ingest click data, characterize a source,
//! bound its brightness, and emit plot-ready curves.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pairstats::io::{
    ingest_click_records_file, ingest_timetags_file, parse_setup_file, write_click_records_file,
    write_g2_curve, write_g_curve, write_timetags_file, DeadTimes, RunReport, SetupValues,
    WindowSpec,
};
use pairstats::{
    brightness_upper_bound, detection_statistics, estimate_probabilities, g2_low_brightness_approx,
    multipair_ratio, predict_g2_at_heralding, propagate_uncertainty, simulate_windows,
    solve_transmissions, ChannelTransmissions, CharacterizedSource, ClickCounts,
    correlation_curve, correlation_strength, Error, PairDistribution, PairKind, Result,
};

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CONSISTENCY: u8 = 4;

#[derive(Parser)]
#[command(name = "pairstats", about = "Detection statistics for a heralded photon-pair source")]
struct Cli {
    /// Treat model-consistency warnings as errors (exit code 4).
    #[arg(long, global = true)]
    strict: bool,

    /// Write the report or curve to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    Poisson,
    Thermal,
}

impl From<DistKind> for PairKind {
    fn from(d: DistKind) -> PairKind {
        match d {
            DistKind::Poisson => PairKind::Poisson,
            DistKind::Thermal => PairKind::Thermal,
        }
    }
}

/// Setup parameters; a setup file provides defaults, flags win.
#[derive(Args)]
struct SetupArgs {
    /// Setup file with key = value lines (eta_h, eta_a, eta_b, d_h, d_a, d_b, c).
    #[arg(long)]
    setup: Option<PathBuf>,

    #[arg(long)]
    eta_h: Option<f64>,
    #[arg(long)]
    eta_a: Option<f64>,
    #[arg(long)]
    eta_b: Option<f64>,
    #[arg(long)]
    d_h: Option<f64>,
    #[arg(long)]
    d_a: Option<f64>,
    #[arg(long)]
    d_b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
}

impl SetupArgs {
    fn values(&self) -> Result<SetupValues> {
        let from_file = match &self.setup {
            Some(path) => parse_setup_file(path)?,
            None => SetupValues::default(),
        };
        let flags = SetupValues {
            eta_h: self.eta_h,
            eta_a: self.eta_a,
            eta_b: self.eta_b,
            d_h: self.d_h,
            d_a: self.d_a,
            d_b: self.d_b,
            c: self.c,
        };
        Ok(from_file.overridden_by(&flags))
    }
}

#[derive(Args)]
struct WindowArgs {
    /// Clock period in picoseconds (timetag input only).
    #[arg(long, default_value_t = 10_000)]
    period: i64,
    /// Acceptance window width in picoseconds.
    #[arg(long, default_value_t = 5_000)]
    width: i64,
    /// Window offset from the clock edge in picoseconds.
    #[arg(long, default_value_t = 0)]
    offset: i64,
}

impl WindowArgs {
    fn spec(&self) -> Result<WindowSpec> {
        WindowSpec::new(self.period, self.width, self.offset)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Recover transmissions and brightness from recorded click data.
    Characterize {
        /// Click-record CSV, or timetag CSV with --timetags.
        #[arg(long)]
        input: PathBuf,
        /// Interpret the input as a timetag stream.
        #[arg(long)]
        timetags: bool,
        #[command(flatten)]
        window: WindowArgs,
        /// Detector A dead time in picoseconds (0 disables gating).
        #[arg(long, default_value_t = 0)]
        dead_a: i64,
        /// Detector B dead time in picoseconds (0 disables gating).
        #[arg(long, default_value_t = 0)]
        dead_b: i64,
        /// Herald detector dead time in picoseconds (off by default).
        #[arg(long, default_value_t = 0)]
        dead_h: i64,
        #[arg(long, value_enum, default_value_t = DistKind::Poisson)]
        dist: DistKind,
        /// Bootstrap resamples for the standard errors.
        #[arg(long, default_value_t = 200)]
        resamples: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        setup: SetupArgs,
    },

    /// Upper-bound the brightness from a measured correlation strength.
    BoundMu {
        /// Measured correlation strength G.
        #[arg(long)]
        g: f64,
        #[arg(long, value_enum, default_value_t = DistKind::Poisson)]
        dist: DistKind,
        #[command(flatten)]
        setup: SetupArgs,
    },

    /// Emit the correlation-strength curve G(mu) as CSV.
    GCurve {
        #[arg(long, default_value_t = 1e-4)]
        mu_min: f64,
        #[arg(long, default_value_t = 1.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, value_enum, default_value_t = DistKind::Poisson)]
        dist: DistKind,
        #[command(flatten)]
        setup: SetupArgs,
    },

    /// Emit the heralded g2 curve versus heralding probability as CSV.
    G2Curve {
        #[arg(long, default_value_t = 1e-5)]
        ph_min: f64,
        #[arg(long, default_value_t = 0.05)]
        ph_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Use the thermal pair-number distribution instead of Poissonian.
        #[arg(long)]
        thermal: bool,
        #[command(flatten)]
        setup: SetupArgs,
    },

    /// Generate click data from the Monte Carlo simulator.
    Simulate {
        #[arg(long, value_enum, default_value_t = DistKind::Poisson)]
        dist: DistKind,
        /// Source brightness.
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        windows: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Emit a timetag stream instead of click records.
        #[arg(long)]
        emit_timetags: bool,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        setup: SetupArgs,
    },

    /// Predict brightness and g2 at a requested heralding probability.
    Predict {
        /// Heralding probability target.
        #[arg(long)]
        ph: f64,
        #[arg(long, value_enum, default_value_t = DistKind::Poisson)]
        dist: DistKind,
        #[command(flatten)]
        setup: SetupArgs,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Io(_) => EXIT_PARSE,
        Error::Inconsistency(_) => EXIT_CONSISTENCY,
        _ => EXIT_NUMERICAL,
    }
}

fn error_class(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } | Error::Io(_) => "parse",
        Error::Inconsistency(_) => "consistency",
        _ => "numerical",
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(text.as_bytes())?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn characterization_report(
    c: &CharacterizedSource,
    counts: &ClickCounts,
    gating: Option<&pairstats::io::GatingStats>,
) -> RunReport {
    let mut report = RunReport::new();
    report.text("distribution", match c.kind {
        PairKind::Poisson => "poisson",
        PairKind::Thermal => "thermal",
    });
    report.text("n_windows", counts.n_windows);
    if let Some(g) = gating {
        report.text("total_clock_windows", g.total_windows);
        report.text("discarded_windows", g.discarded_windows);
        report.text("multi_tag_windows", g.multi_tag_windows);
    }
    report.estimate("eta_h", &c.eta_h);
    report.estimate("eta_a", &c.eta_a);
    report.estimate("eta_b", &c.eta_b);
    report.estimate("mu", &c.mu);
    report.exact("p1", c.p1);
    report.exact("p1_from_h", c.p1_from_h);
    report.exact("p1_from_a", c.p1_from_a);
    report.exact("r", c.r);
    report.warnings(&c.warnings);
    report
}

/// Returns the rendered report (`None` when the subcommand wrote its
/// own output file) plus any model-consistency warnings.
fn run(cli: &Cli) -> Result<(Option<String>, Vec<String>)> {
    match &cli.command {
        Command::Characterize {
            input,
            timetags,
            window,
            dead_a,
            dead_b,
            dead_h,
            dist,
            resamples,
            seed,
            setup,
        } => {
            let values = setup.values()?;
            let darks = values.darks()?;
            let (counts, gating) = if *timetags {
                let dead = DeadTimes { a: *dead_a, b: *dead_b, h: *dead_h };
                let (counts, stats) = ingest_timetags_file(input, &window.spec()?, &dead)?;
                (counts, Some(stats))
            } else {
                (ingest_click_records_file(input)?, None)
            };
            let kind = PairKind::from(*dist);
            let c = if *resamples >= 2 {
                propagate_uncertainty(&counts, &darks, kind, *resamples, *seed)?
            } else {
                solve_transmissions(&estimate_probabilities(&counts), &darks, kind)?
            };
            let report = characterization_report(&c, &counts, gating.as_ref());
            Ok((Some(report.render()), c.warnings))
        }

        Command::BoundMu { g, dist, setup } => {
            let values = setup.values()?;
            let assumed = ChannelTransmissions::new(
                values.eta_h.ok_or(Error::Domain("eta_h is required".into()))?,
                values.eta_a.ok_or(Error::Domain("eta_a is required".into()))?,
                values.eta_b.unwrap_or(0.0),
            )?;
            let bound = brightness_upper_bound(*g, &assumed, &values.darks()?, (*dist).into())?;
            let mut report = RunReport::new();
            report.exact("g_measured", *g);
            report.exact("mu_max", bound.mu_max);
            report.exact("r_lower", bound.r_lower);
            report.warnings(&bound.warnings);
            Ok((Some(report.render()), bound.warnings.clone()))
        }

        Command::GCurve { mu_min, mu_max, points, dist, setup } => {
            let model = setup.values()?.setup_model()?;
            let curve = correlation_curve(&model, (*dist).into(), *mu_min, *mu_max, *points)?;
            let mut buf = Vec::new();
            write_g_curve(&mut buf, &curve)?;
            Ok((Some(String::from_utf8(buf).expect("ascii csv")), Vec::new()))
        }

        Command::G2Curve { ph_min, ph_max, points, thermal, setup } => {
            let model = setup.values()?.setup_model()?;
            let kind = if *thermal { PairKind::Thermal } else { PairKind::Poisson };
            if !(*ph_min > 0.0 && ph_max > ph_min) || *points < 2 {
                return Err(Error::Domain(
                    "need 0 < ph_min < ph_max and at least 2 points".into(),
                ));
            }
            let (lo, hi) = (ph_min.ln(), ph_max.ln());
            let mut rows = Vec::with_capacity(*points);
            for k in 0..*points {
                let ph = (lo + (hi - lo) * k as f64 / (*points - 1) as f64).exp();
                let (mu, g2) = predict_g2_at_heralding(&model, kind, ph)?;
                let approx = g2_low_brightness_approx(mu, model.transmissions.eta_h());
                rows.push((ph, mu, g2, approx));
            }
            let mut buf = Vec::new();
            write_g2_curve(&mut buf, &rows)?;
            Ok((Some(String::from_utf8(buf).expect("ascii csv")), Vec::new()))
        }

        Command::Simulate { dist, mu, windows, seed, emit_timetags, window, setup } => {
            let model = setup.values()?.setup_model()?;
            let d = PairDistribution::new((*dist).into(), *mu)?;
            let counts = simulate_windows(&model, &d, *windows, *seed)?;
            let path = cli.output.as_ref().ok_or(Error::Domain(
                "simulate requires --output for the generated data file".into(),
            ))?;
            if *emit_timetags {
                write_timetags_file(path, &counts, &window.spec()?)?;
            } else {
                write_click_records_file(path, &counts)?;
            }
            Ok((None, Vec::new()))
        }

        Command::Predict { ph, dist, setup } => {
            let model = setup.values()?.setup_model()?;
            let kind = PairKind::from(*dist);
            let (mu, g2) = predict_g2_at_heralding(&model, kind, *ph)?;
            let d = PairDistribution::new(kind, mu)?;
            let p = detection_statistics(&d, &model, 1e-12)?;
            let mut report = RunReport::new();
            report.exact("p_h_target", *ph);
            report.exact("mu", mu);
            report.exact("g2", g2);
            report.exact("g2_low_brightness_approx",
                g2_low_brightness_approx(mu, model.transmissions.eta_h()));
            report.exact("r", multipair_ratio(&d));
            report.exact("G", correlation_strength(&p)?);
            Ok((Some(report.render()), Vec::new()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not usage errors
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok((text, warnings)) => {
            if let Some(text) = text {
                if let Err(e) = emit(&cli.output, &text) {
                    eprintln!("error: {e}");
                    eprintln!("error_class: {}", error_class(&e));
                    return ExitCode::from(exit_code_for(&e));
                }
            }
            if cli.strict && !warnings.is_empty() {
                eprintln!("error: strict mode: {}", warnings.join("; "));
                eprintln!("error_class: consistency");
                return ExitCode::from(EXIT_CONSISTENCY);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("error_class: {}", error_class(&e));
            ExitCode::from(exit_code_for(&e))
        }
    }
}
