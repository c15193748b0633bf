//! `headway`: convert, synthesize, filter, evaluate and plot headway logs.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use headway_core::headway_filter::{filter_trip, Classification, FilterConfig, Verdict};
use headway_core::synth::{parse_truth_sidecar, write_truth_sidecar, NoiseConfig};
use headway_core::trip_data::{parse_log, write_trips, ParsedLog, Trip};
use headway_core::{
    compare_models, gen_approach, inject_noise, pulse_to_distance, ApproachConfig, ModelOrder,
    PulseSample,
};

#[derive(Parser)]
#[command(name = "headway", version, about = "LIDAR headway filtering pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a pulse-width column (microseconds) to distances in meters.
    Convert {
        input: PathBuf,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a noisy controlled-approach trip and its truth sidecar.
    Synth(SynthArgs),
    /// Classify every reading and write annotated and filtered logs.
    Filter {
        input: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        /// Also keep warmup rows in the filtered output.
        #[arg(long)]
        keep_warmup: bool,
        /// Annotated log; the filtered log goes next to it as `<stem>.filtered.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score model orders against a truth sidecar.
    Evaluate {
        truth: PathBuf,
        raw: PathBuf,
        /// Gate order `p,d,q`; repeatable. All six orders if omitted.
        #[arg(long = "order", value_name = "p,d,q", value_parser = parse_order)]
        orders: Vec<ModelOrder>,
        #[arg(long, default_value_t = 30)]
        window: usize,
        #[arg(long, default_value_t = 2.0)]
        th1: f64,
        #[arg(long, default_value_t = 1.0)]
        th2: f64,
        #[arg(long, default_value_t = 5)]
        lookahead: usize,
    },
    /// Draw raw, predicted and filtered series as an SVG chart.
    Plot {
        raw: PathBuf,
        /// Truth sidecar to draw as a dashed reference line.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        filter: FilterArgs,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FilterArgs {
    /// Prediction window length N.
    #[arg(long, default_value_t = 30)]
    window: usize,
    /// Prediction gate threshold, meters.
    #[arg(long, default_value_t = 2.0)]
    th1: f64,
    /// Mean gate threshold, meters.
    #[arg(long, default_value_t = 1.0)]
    th2: f64,
    /// Readings averaged by the mean gate, including the one under test.
    #[arg(long, default_value_t = 5)]
    lookahead: usize,
    #[arg(long, value_name = "p,d,q", default_value = "0,1,1", value_parser = parse_order)]
    order: ModelOrder,
}

impl FilterArgs {
    fn config(&self) -> Result<FilterConfig> {
        let cfg = FilterConfig {
            window_size: self.window,
            th1: self.th1,
            th2: self.th2,
            lookahead: self.lookahead,
            order: self.order,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    /// Samples per second.
    #[arg(long, default_value_t = 3.0)]
    rate: f64,
    /// Approach speed, mph.
    #[arg(long, default_value_t = 10.0)]
    speed: f64,
    #[arg(long, default_value_t = 26.0)]
    start_gap: f64,
    #[arg(long, default_value_t = 10.0)]
    end_gap: f64,
    /// Gaussian jitter, meters.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0.02)]
    weak_prob: f64,
    #[arg(long, default_value_t = 0.03)]
    spike_prob: f64,
    /// Trip log; the sidecar goes next to it as `<stem>.truth.csv`.
    #[arg(long)]
    out: PathBuf,
}

fn parse_order(s: &str) -> Result<ModelOrder, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Convert { input, out } => {
            let text = read(&input)?;
            emit(out.as_deref(), &convert(&text)?)
        }
        Command::Synth(args) => synth(&args),
        Command::Filter {
            input,
            filter,
            keep_warmup,
            out,
        } => {
            let cfg = filter.config()?;
            let log = load_log(&input)?;
            let verdicts = classify(&log.trips, &cfg)?;
            let refs: Vec<&[Classification]> = verdicts.iter().map(Vec::as_slice).collect();
            write(&out, &write_trips(&log.trips, Some(&refs))?)?;

            let kept: Vec<Trip> = log
                .trips
                .iter()
                .zip(&verdicts)
                .map(|(trip, v)| Trip {
                    trip_id: trip.trip_id,
                    readings: trip
                        .readings
                        .iter()
                        .zip(v)
                        .filter(|(_, c)| {
                            c.verdict.is_accepted() || (keep_warmup && c.verdict == Verdict::Warmup)
                        })
                        .map(|(r, _)| r.clone())
                        .collect(),
                })
                .filter(|t| !t.is_empty())
                .collect();
            write(&sibling(&out, "filtered"), &write_trips(&kept, None)?)
        }
        Command::Evaluate {
            truth,
            raw,
            orders,
            window,
            th1,
            th2,
            lookahead,
        } => {
            let cfg = FilterArgs {
                window,
                th1,
                th2,
                lookahead,
                order: ModelOrder::SES,
            }
            .config()?;
            let (truth, _) = parse_truth_sidecar(&read(&truth)?)?;
            let raw = single_trip(&raw)?.distances();
            ensure!(
                truth.len() == raw.len(),
                "truth has {} samples but the log has {} readings",
                truth.len(),
                raw.len()
            );
            let orders = if orders.is_empty() {
                ModelOrder::ALL.to_vec()
            } else {
                orders
            };
            print!("{}", compare_models(&truth, &raw, &orders, &cfg)?);
            Ok(())
        }
        Command::Plot {
            raw,
            truth,
            filter,
            out,
        } => {
            let cfg = filter.config()?;
            let trip = single_trip(&raw)?;
            let verdicts = filter_trip(&trip, &cfg)?;
            let truth = match truth {
                Some(path) => {
                    let (t, _) = parse_truth_sidecar(&read(&path)?)?;
                    ensure!(
                        t.len() == trip.len(),
                        "truth has {} samples but the log has {} readings",
                        t.len(),
                        trip.len()
                    );
                    Some(t)
                }
                None => None,
            };
            let series = plot::Series {
                raw: trip.distances(),
                predicted: verdicts.iter().map(|c| c.predicted).collect(),
                filtered: verdicts
                    .iter()
                    .zip(&trip.readings)
                    .map(|(c, r)| c.verdict.is_accepted().then_some(r.distance))
                    .collect(),
                truth,
            };
            emit(out.as_deref(), &plot::render(&series))
        }
    }
}

fn synth(args: &SynthArgs) -> Result<()> {
    let approach = ApproachConfig {
        speed_mph: args.speed,
        start_gap: args.start_gap,
        end_gap: args.end_gap,
        sample_rate: args.rate,
        ..ApproachConfig::default()
    };
    let noise = NoiseConfig {
        gaussian_sigma: args.sigma,
        weak_signal_prob: args.weak_prob,
        env_spike_prob: args.spike_prob,
        ..NoiseConfig::with_seed(args.seed)
    };
    let truth: Vec<f64> = gen_approach(&approach)?.iter().map(|p| p.1).collect();
    let trace = inject_noise(&truth, &noise)?;
    let trip = trace.to_trip(1, args.rate, args.speed);
    write(&args.out, &write_trips(&[trip], None)?)?;
    write(&sibling(&args.out, "truth"), &write_truth_sidecar(&trace))
}

/// Rewrites the first column whose header starts with "Pulse Width" as
/// "Distance (m)"; everything else passes through.
fn convert(text: &str) -> Result<String> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let Some(col) = headers
        .iter()
        .position(|h| h.trim().to_ascii_lowercase().starts_with("pulse width"))
    else {
        bail!("no pulse width column in header");
    };
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(headers.iter().enumerate().map(|(i, h)| {
        if i == col {
            "Distance (m)"
        } else {
            h
        }
    }))?;
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.with_context(|| format!("line {line}"))?;
        let field = record.get(col).unwrap_or("").trim();
        let width: f64 = field
            .parse()
            .with_context(|| format!("line {line}: bad pulse width {field:?}"))?;
        let d =
            pulse_to_distance(PulseSample::new(width)).with_context(|| format!("line {line}"))?;
        let d = d.to_string();
        writer.write_record(record.iter().enumerate().map(|(i, v)| {
            if i == col {
                d.as_str()
            } else {
                v
            }
        }))?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

fn classify(trips: &[Trip], cfg: &FilterConfig) -> Result<Vec<Vec<Classification>>> {
    trips
        .iter()
        .map(|t| filter_trip(t, cfg).with_context(|| format!("trip {}", t.trip_id)))
        .collect()
}

fn load_log(path: &Path) -> Result<ParsedLog> {
    let log = parse_log(&read(path)?).with_context(|| path.display().to_string())?;
    for w in &log.warnings {
        eprintln!(
            "warning: {}: line {}: {}",
            path.display(),
            w.line,
            w.message
        );
    }
    Ok(log)
}

fn single_trip(path: &Path) -> Result<Trip> {
    let mut trips = load_log(path)?.trips;
    ensure!(
        trips.len() == 1,
        "{}: expected one trip, found {}",
        path.display(),
        trips.len()
    );
    Ok(trips.remove(0))
}

/// `dir/run.csv` with tag `truth` gives `dir/run.truth.csv`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
