use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use microdop::batch::{self, read_manifest, run_all, verify_manifest, BatchReport};
use microdop::config::{self, RawConfig, RunConfig};
use microdop::dsp::{self, DopplerSpectrum, SpreadOptions};
use microdop::format::{self, Format, Kind};
use microdop::validate::run_checks;
use microdop::Execution;

/// Bistatic OFDM micro-Doppler simulator for rotating propellers.
#[derive(Parser)]
#[command(name = "microdop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single run.
    Simulate(RunArgs),
    /// Simulate every point of the config's [sweep] table.
    Sweep(RunArgs),
    /// Print metrics of existing payload files or output directories.
    Analyze(AnalyzeArgs),
    /// Run the built-in oracle and invariant checks.
    Validate {
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Binary,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => Format::Binary,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Config file (TOML).
    #[arg(short, long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset instead of a config file.
    #[arg(short, long, value_parser = config::PRESETS)]
    preset: Option<String>,
    /// Output directory (overrides the config).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep every N-th symbol in slow time.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Disable the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Payload files or batch output directories.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    peak_threshold_db: f64,
    #[arg(long, default_value_t = SpreadOptions::default().floor_margin_db)]
    floor_margin_db: f64,
    #[arg(long, default_value_t = SpreadOptions::default().dynamic_range_db)]
    dynamic_range_db: f64,
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let mut raw: RawConfig = match (&args.config, &args.preset) {
        (Some(path), None) => config::load_raw(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(name)) => config::preset_raw(name)?,
        _ => bail!("give either --config or --preset"),
    };
    if let Some(seed) = args.seed {
        raw.seed = Some(seed);
    }
    if let Some(subsample) = args.subsample {
        raw.dsp.subsample = Some(subsample);
    }
    if let Some(format) = args.format {
        raw.dsp.format = Some(format.into());
    }
    if let Some(dir) = &args.output {
        raw.output_dir = Some(dir.to_string_lossy().into_owned());
    }
    Ok(RunConfig::from_raw(raw)?)
}

fn report(r: &BatchReport) {
    for rec in &r.manifest.records {
        let l = &rec.labels;
        let head = format!(
            "run {:04}  beta {:6.1} deg  blades {:?}  rpm {:?}  seed {}",
            rec.index, l.bistatic_angle_deg, l.blades, l.rotation_rate_rpm, l.seed
        );
        match (&rec.metrics, &rec.error) {
            (_, Some(err)) => println!("{head}  FAILED: {err}"),
            (Some(m), None) => println!(
                "{head}  spacing {}  spread {:.1} Hz",
                m.impulse_spacing_hz.map_or("-".into(), |s| format!("{s:.2} Hz")),
                m.doppler_spread_hz
            ),
            (None, None) => println!("{head}"),
        }
    }
    println!(
        "{} run(s), {} failed; manifest in {}",
        r.manifest.runs,
        r.manifest.failed,
        r.output_dir.join(batch::MANIFEST).display()
    );
}

fn simulate(args: &RunArgs, sweep: bool) -> Result<bool> {
    let cfg = load(args)?;
    let runs = if sweep {
        cfg.expand()?
    } else {
        if !cfg.sweep.is_empty() {
            bail!(
                "config has a [sweep] table with {} runs; use `microdop sweep`",
                cfg.sweep.len()
            );
        }
        vec![cfg.clone()]
    };
    let r = run_all(&runs, &cfg.output_dir, execution(args.sequential))?;
    report(&r);
    Ok(r.all_succeeded())
}

fn describe_spectrum(spec: &DopplerSpectrum, args: &AnalyzeArgs) -> String {
    let opts = SpreadOptions {
        floor_margin_db: args.floor_margin_db,
        dynamic_range_db: args.dynamic_range_db,
        ..SpreadOptions::default()
    };
    let (lo, hi) = dsp::support_edges(spec, opts);
    let spacing = match dsp::impulse_spacing(spec, args.peak_threshold_db) {
        Ok(s) => format!("{s:.2} Hz"),
        Err(e) => format!("- ({e})"),
    };
    format!(
        "{} bins of {:.3} Hz, impulse spacing {spacing}, support [{lo:.1}, {hi:.1}] Hz, spread {:.1} Hz",
        spec.len(),
        spec.bin_width,
        hi - lo + spec.bin_width
    )
}

fn analyze_file(path: &Path, args: &AnalyzeArgs) -> Result<()> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let m = format::decode_any(&bytes).with_context(|| format!("decoding {}", path.display()))?;
    match m.kind {
        Kind::Spectrum => println!("{}: {}", path.display(), describe_spectrum(&m.to_spectrum()?, args)),
        Kind::Map => {
            let map = m.to_map()?;
            let dc = map.row_spectrum(0).dc_bin();
            // range bin carrying the most energy away from 0 Hz
            let energy = |mu: usize| -> f64 {
                map.row(mu)
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| j.abs_diff(dc) > dsp::DC_GUARD_BINS)
                    .map(|(_, v)| v * v)
                    .sum()
            };
            let best = (0..map.n_range)
                .max_by(|&a, &b| energy(a).total_cmp(&energy(b)))
                .unwrap_or(0);
            println!(
                "{}: range-Doppler map {} x {}, range resolution {:.4} m; strongest moving bin {best} ({:.3} m): {}",
                path.display(),
                map.n_range,
                map.n_doppler,
                map.range_resolution(),
                map.bin_range(best),
                describe_spectrum(&map.row_spectrum(best), args)
            );
        }
        Kind::Frames => println!("{}: {} frames of {} samples", path.display(), m.rows, m.cols),
        Kind::Grid => println!("{}: modulation grid {} x {}", path.display(), m.rows, m.cols),
    }
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Result<bool> {
    let mut ok = true;
    for path in &args.paths {
        if path.is_dir() {
            let manifest = read_manifest(path)?;
            let bad = verify_manifest(path)?;
            println!(
                "{}: {} run(s), {} failed, {} payload(s) failing verification",
                path.display(),
                manifest.runs,
                manifest.failed,
                bad.len()
            );
            for file in &bad {
                println!("  hash mismatch: {file}");
            }
            ok &= bad.is_empty() && manifest.failed == 0;
            for rec in manifest.records.iter().filter(|r| r.error.is_none()) {
                for p in &rec.payloads {
                    analyze_file(&path.join(&p.file), args)?;
                }
            }
        } else {
            analyze_file(path, args)?;
        }
    }
    Ok(ok)
}

fn validate(sequential: bool) -> bool {
    let outcomes = run_checks(execution(sequential));
    for c in &outcomes {
        println!(
            "{} {} ({:.2} s): {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.seconds,
            c.detail
        );
    }
    outcomes.iter().all(|c| c.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate(args, false),
        Command::Sweep(args) => simulate(args, true),
        Command::Analyze(args) => analyze(args),
        Command::Validate { sequential } => Ok(validate(*sequential)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
