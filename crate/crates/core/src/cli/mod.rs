//! Command-line scenario runner.

pub mod scenario;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::crossbar::{
    calibrate_theta, calibrate_v_read, dynamic_range, initialize_column, matched_capacitance, recall, ArrayConfig,
    ArrayState,
};
use crate::device::{calibrate_amp, DeviceParams};
use crate::error::{Error, Result};
use crate::formats::{self, EnergyRow, MetricsRow, ReportRow, TrialRow};
use crate::recording::{capture_digital, capture_native, round_trip, CapturePath, NoJitter, ProgramSpec};
use crate::variability::{monte_carlo, spread_wavefront, Execution, Scenario};
use crate::wavefront::Wavefront;

pub use scenario::{PathKind, ScenarioFile};

#[derive(Debug, Parser)]
#[command(name = "tempmem", version, about = "Memristive temporal memory simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Recall a stored column (input: resistance grid CSV).
    Recall,
    /// Capture a wavefront into a fresh column.
    Capture,
    /// Capture, reset, recall and score a wavefront.
    Roundtrip,
    /// Monte Carlo round trips under device variation.
    Sweep,
    /// Derive amp_a, theta and v_read for a target span and read energy.
    Calibrate,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Opts {
    /// Scenario file (TOML with dotted keys).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Wavefront CSV, or resistance grid CSV for `recall`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides variation.seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides run.trials
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Overrides run.path
    #[arg(long, global = true, value_enum)]
    pub path: Option<PathKind>,
    /// Run sweep trials on one thread.
    #[arg(long, global = true)]
    pub serial: bool,
}

struct Ctx {
    file: ScenarioFile,
    base_dir: PathBuf,
    opts: Opts,
}

impl Ctx {
    fn out_file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.opts.out.join(name))?))
    }

    fn wavefront(&self) -> Result<Wavefront<f64>> {
        if let Some(p) = &self.opts.input {
            return read_wavefront_file(p);
        }
        if let Some(p) = &self.file.run.input {
            return read_wavefront_file(&self.base_dir.join(p));
        }
        let channels = self.file.run.channels.or(self.file.array.rows).unwrap_or(4);
        spread_wavefront(channels, self.file.run.span_ns)
    }

    fn path(&self) -> PathKind {
        self.opts.path.unwrap_or(self.file.run.path)
    }
}

fn read_wavefront_file(p: &Path) -> Result<Wavefront<f64>> {
    formats::read_wavefront(formats::open(p)?, &p.display().to_string())
}

/// Runs one command and returns the summary printed to stdout.
pub fn run(cli: &Cli) -> Result<String> {
    let (file, base_dir) = match &cli.opts.scenario {
        Some(p) => ScenarioFile::load(p)?,
        None => (ScenarioFile::default(), PathBuf::new()),
    };
    fs::create_dir_all(&cli.opts.out)?;
    let ctx = Ctx {
        file,
        base_dir,
        opts: cli.opts.clone(),
    };
    match cli.command {
        Command::Recall => cmd_recall(&ctx),
        Command::Capture => cmd_capture(&ctx),
        Command::Roundtrip => cmd_roundtrip(&ctx),
        Command::Sweep => cmd_sweep(&ctx),
        Command::Calibrate => cmd_calibrate(&ctx),
    }
}

fn cmd_recall(ctx: &Ctx) -> Result<String> {
    let params = ctx.file.device()?;
    let input = ctx.opts.input.clone().ok_or_else(|| {
        Error::Precondition("recall needs --input <grid.csv> with header row,col,resistance_ohm".into())
    })?;
    let name = input.display().to_string();
    let cells = formats::read_grid(formats::open(&input)?, &name)?;
    let (cfg, state) = formats::array_from_grid(&cells, &ctx.file.array(1)?, &params, &name)?;
    let col = ctx.file.run.column;
    let (w, energy) = recall(&state, &cfg, col)?;
    formats::write_wavefront(ctx.out_file("recall_wavefront.csv")?, &w)?;
    formats::write_records(ctx.out_file("energy.csv")?, &[EnergyRow::new(cfg.rows, &energy)])?;
    let times: Vec<String> = w.times().iter().map(|t| format!("{t:.3}")).collect();
    Ok(format!(
        "recall column {col}: edges [{}] ns, span {:.3} ns, {:.3} fJ per line\n",
        times.join(", "),
        w.span(),
        energy.per_line * 1e15
    ))
}

fn cmd_capture(ctx: &Ctx) -> Result<String> {
    let params = ctx.file.device()?;
    let w = ctx.wavefront()?;
    let cfg = ctx.file.array(w.channels())?;
    let spec = ctx.file.round_trip(ctx.path(), &cfg, &params)?;
    let state = initialize_column(ArrayState::new(&cfg, &params)?, spec.col)?;
    let (state, result) = match spec.path {
        CapturePath::Native => capture_native(state, spec.col, &w, spec.v_write)?,
        CapturePath::Digital { quantizer, slope, tol } => {
            let prog = ProgramSpec::for_tolerance(tol, spec.v_write, &params)?;
            capture_digital(state, &params, spec.col, &w, &quantizer, slope, &prog, &mut NoJitter)?
        }
    };
    formats::write_capture(ctx.out_file("capture.csv")?, &result)?;
    formats::write_grid(ctx.out_file("grid.csv")?, &state)?;
    let mut msg = format!(
        "capture ({}) column {}: {} channels, write energy {:.3} fJ, converged {}\n",
        ctx.path().name(),
        spec.col,
        w.channels(),
        result.write_energy * 1e15,
        result.all_converged()
    );
    if result.window_exceeded {
        msg.push_str("warning: wavefront span exceeds the device's linear programming window\n");
    }
    Ok(msg)
}

fn cmd_roundtrip(ctx: &Ctx) -> Result<String> {
    let params = ctx.file.device()?;
    let w = ctx.wavefront()?;
    let cfg = ctx.file.array(w.channels())?;
    let spec = ctx.file.round_trip(ctx.path(), &cfg, &params)?;
    let state = ArrayState::new(&cfg, &params)?;
    let (_, rt) = round_trip(state, &cfg, &params, &w, &spec, &mut NoJitter)?;
    formats::write_wavefront(ctx.out_file("input_wavefront.csv")?, &rt.input)?;
    formats::write_wavefront(ctx.out_file("output_wavefront.csv")?, &rt.output)?;
    formats::write_capture(ctx.out_file("capture.csv")?, &rt.capture)?;
    let metrics = MetricsRow::new(ctx.path().name(), &rt.fidelity, &rt.capture, &rt.recall_energy);
    formats::write_records(ctx.out_file("metrics.csv")?, &[metrics])?;
    Ok(format!(
        "roundtrip ({}): tau {}, rms {:.4} ns, max {:.4} ns, {:.2} effective bits over {:.3} ns\n",
        ctx.path().name(),
        rt.fidelity.kendall_tau,
        rt.fidelity.rms,
        rt.fidelity.max_abs,
        rt.fidelity.effective_bits,
        rt.fidelity.span
    ))
}

fn cmd_sweep(ctx: &Ctx) -> Result<String> {
    let params = ctx.file.device()?;
    let w = ctx.wavefront()?;
    let cfg = ctx.file.array(w.channels())?;
    let spec = ctx.file.round_trip(ctx.path(), &cfg, &params)?;
    let variation = ctx.file.variation(ctx.opts.seed)?;
    let trials = ctx.opts.trials.unwrap_or(ctx.file.run.trials);
    let exec = if ctx.opts.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let span = w.span();
    let channels = w.channels();
    let scenario = Scenario {
        array: cfg,
        device: params,
        wavefront: w,
        round_trip: spec,
    };
    let (report, records) = monte_carlo(&scenario, &variation, trials, exec)?;
    formats::write_records(ctx.out_file("trial_report.csv")?, &[ReportRow::from(&report)])?;
    let rows: Vec<TrialRow> = records.iter().map(TrialRow::from).collect();
    formats::write_records(ctx.out_file("trials.csv")?, &rows)?;
    let text = formats::report_text(&report, &variation, channels, span);
    let mut f = ctx.out_file("trial_report.txt")?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(format!(
        "sweep ({}, {} trials): rank exact {:.4}, 5-bit timing {:.4}, mean tau {:.4}, {:.3} effective bits\n",
        ctx.path().name(),
        report.n_trials,
        report.rank_exact_rate,
        report.timing_success_rate,
        report.mean_tau,
        report.effective_bits_mean
    ))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibrationRow {
    pub amp_a_ohm: f64,
    pub theta: f64,
    pub v_read: f64,
    pub c_line_pf: f64,
    pub matched_c_pf: f64,
    pub dynamic_range_ns: f64,
}

/// Calibration implied by the scenario's device window and calibration targets.
pub fn calibration(file: &ScenarioFile) -> Result<CalibrationRow> {
    let params: DeviceParams<f64> = file.device()?;
    let base = file.array(1)?;
    let r_span = file.calibrate.r_span_ohm.unwrap_or(params.r_window);
    let params = calibrate_amp(r_span, params.t_window, &params)?;
    let theta = calibrate_theta(file.calibrate.target_span_ns, r_span, base.c_line)?;
    let v_read = calibrate_v_read(file.calibrate.target_energy_fj * 1e-15, base.c_line)?;
    let cfg = ArrayConfig { theta, v_read, ..base };
    Ok(CalibrationRow {
        amp_a_ohm: params.amp_a,
        theta,
        v_read,
        c_line_pf: cfg.c_line * 1e12,
        matched_c_pf: matched_capacitance(&cfg, &params) * 1e12,
        dynamic_range_ns: dynamic_range(&cfg, &params, params.r_on + r_span)?,
    })
}

fn cmd_calibrate(ctx: &Ctx) -> Result<String> {
    let row = calibration(&ctx.file)?;
    formats::write_records(ctx.out_file("calibration.csv")?, std::slice::from_ref(&row))?;
    Ok(format!(
        "calibrate: amp_a {:.2} ohm, theta {:.6}, v_read {:.6} V, matched C {:.4} pF, range {:.3} ns\n",
        row.amp_a_ohm, row.theta, row.v_read, row.matched_c_pf, row.dynamic_range_ns
    ))
}
