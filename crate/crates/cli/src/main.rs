//! `tactorsim` — run device simulations, sweeps, fits, replays and plots
//! from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/config error. All file
//! outputs are written atomically (write to a temp file in the target
//! directory, then rename).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use tactorsim_core::calibration::{fit_stiffness, sweep, FitOptions, SweepProtocol, SweepResult};
use tactorsim_core::plot::{emit_plot, PlotSpec};
use tactorsim_core::rng::SimRng;
use tactorsim_core::telemetry::{
    log_to_csv, parse_log_csv, parse_sweep_csv, parse_trace_csv, replay_check, sweep_to_csv,
};
use tactorsim_core::trace::parse_trace_arg;
use tactorsim_core::{run, DeviceConfig, SkinModel, TraceArg, TraceSpec};

#[derive(Parser)]
#[command(
    name = "tactorsim",
    version,
    about = "Simulator for a wearable elbow-angle-to-deep-pressure haptic device"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write the telemetry log CSV.
    Simulate(SimulateArgs),
    /// Recompute a log's derived columns from its raw angle column and
    /// report the deviations (all zero for logs this tool produced).
    Replay(ReplayArgs),
    /// Run a force-displacement sweep and write `x_mm,force_n` samples.
    Sweep(SweepArgs),
    /// Fit contact stiffness to sweep samples.
    Fit(FitArgs),
    /// Render a log as a stacked-panel SVG chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Device config file.
    #[arg(long)]
    config: PathBuf,
    /// Trace: hold:ANGLE | sine:CENTER,AMP,FREQ | ramp:FROM,TO,DUR | file:PATH
    #[arg(long)]
    trace: String,
    /// Output log CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Log CSV to check.
    #[arg(long = "in")]
    input: PathBuf,
    /// Config the log was produced with.
    #[arg(long)]
    config: PathBuf,
    /// Output report (key=value lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Device config file (actuator, skin, force sensor, loop rate, seed).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured skin site with a preset (forearm | hand).
    #[arg(long)]
    site: Option<String>,
    /// Output sweep CSV.
    #[arg(long)]
    out: PathBuf,
    /// Largest commanded extension, mm.
    #[arg(long, default_value_t = 18.0)]
    x_max: f64,
    /// Extension step between targets, mm.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Control ticks to wait at each target before sampling.
    #[arg(long, default_value_t = 100)]
    settle_ticks: u32,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV (`x_mm,force_n`).
    #[arg(long = "in")]
    input: PathBuf,
    /// Fit F = a*x (no intercept) instead of F = a*x + b.
    #[arg(long)]
    through_origin: bool,
    /// Samples at or below this force are excluded as pre-contact.
    #[arg(long, default_value_t = 0.05)]
    contact_threshold: f64,
    /// Print the fit as JSON instead of key=value lines.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Log CSV to render.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated log columns, one panel each
    /// (default: angle_filt_deg,pos_mm,force_n).
    #[arg(long)]
    columns: Option<String>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => match dispatch(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e:#}");
                2
            }
        },
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            0
        }
        Err(e) => {
            eprint!("{e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: &Path) -> Result<DeviceConfig> {
    DeviceConfig::parse(&read_file(path)?)
        .map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Write-then-rename so a crash never leaves a truncated output file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn resolve_trace(arg: &str) -> Result<TraceSpec> {
    match parse_trace_arg(arg).map_err(|e| anyhow!("{e}"))? {
        TraceArg::Spec(spec) => Ok(spec),
        TraceArg::File(path) => {
            let path = Path::new(&path);
            let rows = parse_trace_csv(&read_file(path)?)
                .map_err(|e| anyhow!("{}: {e}", path.display()))?;
            let spec = TraceSpec::Table(rows);
            spec.validate()
                .map_err(|e| anyhow!("{}: {e}", path.display()))?;
            Ok(spec)
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let trace = resolve_trace(&args.trace)?;
    let records = run(&cfg, &trace).map_err(|e| anyhow!("{e}"))?;
    write_atomic(&args.out, log_to_csv(&records).as_bytes())?;
    println!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let records = parse_log_csv(&read_file(&args.input)?)
        .map_err(|e| anyhow!("{}: {e}", args.input.display()))?;
    let report = replay_check(&records, &cfg);
    let text = report.to_key_values();
    write_atomic(&args.out, text.as_bytes())?;
    print!("{text}");
    if !report.is_clean() {
        bail!(
            "replay deviations detected in {} (see {})",
            args.input.display(),
            args.out.display()
        );
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let skin = match &args.site {
        Some(name) => SkinModel::preset(name)
            .ok_or_else(|| anyhow!("unknown site \"{name}\" (expected forearm or hand)"))?,
        None => cfg.skin.clone(),
    };
    let protocol = SweepProtocol {
        x_max_mm: args.x_max,
        step_mm: args.step,
        settle_ticks: args.settle_ticks,
        rate_hz: cfg.loop_cfg.rate_hz,
    };
    let mut rng = SimRng::new(cfg.loop_cfg.seed);
    let noise = cfg.loop_cfg.noise_enabled.then_some(&mut rng);
    let result = sweep(&cfg.actuator, &skin, &cfg.force_sensor, &protocol, noise)
        .map_err(|e| anyhow!("{e}"))?;
    write_atomic(&args.out, sweep_to_csv(&result.samples).as_bytes())?;
    println!(
        "wrote {} samples for site \"{}\" to {}{}",
        result.samples.len(),
        result.site_name,
        args.out.display(),
        if result.truncated_by_stall {
            " (truncated by stall)"
        } else {
            ""
        }
    );
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let samples = parse_sweep_csv(&read_file(&args.input)?)
        .map_err(|e| anyhow!("{}: {e}", args.input.display()))?;
    for w in samples.windows(2) {
        if w[1].0 <= w[0].0 {
            bail!(
                "{}: extensions must be strictly increasing ({} then {})",
                args.input.display(),
                w[0].0,
                w[1].0
            );
        }
    }
    let site = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    let result = SweepResult {
        site_name: site.clone(),
        samples,
        truncated_by_stall: false,
    };
    let options = FitOptions {
        contact_threshold_n: args.contact_threshold,
        through_origin: args.through_origin,
    };
    let fit = fit_stiffness(&result, &options)
        .map_err(|e| anyhow!("{}: {e}", args.input.display()))?;
    if args.json {
        let value = serde_json::json!({
            "site": site,
            "stiffness_n_per_m": fit.stiffness_n_per_m,
            "contact_offset_mm": fit.contact_offset_mm,
            "residual_rms_n": fit.residual_rms_n,
            "n_contact_samples": fit.n_contact_samples,
        });
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        println!("site={site}");
        println!("stiffness_n_per_m={}", fit.stiffness_n_per_m);
        println!("contact_offset_mm={}", fit.contact_offset_mm);
        println!("residual_rms_n={}", fit.residual_rms_n);
        println!("n_contact_samples={}", fit.n_contact_samples);
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let records = parse_log_csv(&read_file(&args.input)?)
        .map_err(|e| anyhow!("{}: {e}", args.input.display()))?;
    let spec = match &args.columns {
        Some(list) => {
            let columns: Vec<&str> = list.split(',').map(str::trim).collect();
            PlotSpec::from_columns(&columns).map_err(|e| anyhow!("{e}"))?
        }
        None => PlotSpec::default(),
    };
    let svg = emit_plot(&spec, &records).map_err(|e| anyhow!("{e}"))?;
    write_atomic(&args.out, svg.as_bytes())?;
    println!(
        "wrote {}-panel SVG to {}",
        spec.panels.len(),
        args.out.display()
    );
    Ok(())
}
