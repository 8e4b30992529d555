//! `omc` command-line front end.
//!
//! Every frequency on the command line and in files is cyclic (Hz); the
//! conversion to rad/s happens here and in the file parsers. Exit codes: 0 on
//! success, 1 on bad input, 2 on a numerical failure (including fits that do
//! not converge and designs that never reach the window).

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    extract_g0, fit_mechanical_modes, fit_optical_resonance, fit_s11_detuning, subtract_background, table1_report,
    FitResult, G0Options, PowerSeries, TableEntry,
};
use crate::bands::{
    mechanical_bands, optical_bands, MechanicalMedium, OpticalMedium, UnitCellGeometry, DEFAULT_HARMONICS,
};
use crate::consts::{angular, cyclic};
use crate::dynamics::{
    backaction_series, effective_linewidth_full, intracavity_photons, omit_response, thermal_spectrum, BackactionForm,
    Branch, CavityParams, DriveCondition, ThermalMode, ROOM_TEMPERATURE,
};
use crate::error::{Error, Result};
use crate::fields::{field_spectrum, FieldsDocument, DEFAULT_PAD_FACTOR};
use crate::optimizer::{optimize_cell, DesignObjective, NelderMeadOptions};
use crate::phasematch::{classify_interaction, WavevectorSet, DEFAULT_THRESHOLD};
use crate::presets;
use crate::spectrum::Spectrum;
use crate::window::{linspace, window_map, SubstrateModel};

#[derive(Parser, Debug)]
#[command(
    name = "omc",
    version,
    about = "Design and analysis tools for clamped optomechanical crystals",
    long_about = "Design and analysis tools for clamped optomechanical crystals.\n\n\
                  All frequencies in flags and files are cyclic (Hz); lengths are in metres; powers in watts.",
    arg_required_else_help = true
)]
struct Cli {
    /// Output file, written atomically; stdout when absent
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format; commands with a text table default to text
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Suppress warnings and progress on stderr
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// SAW-cutoff map over (n_eff, a) with window flags
    Window(WindowArgs),
    /// Zero-padded spatial spectrum of a cavity field
    Fft(FftArgs),
    /// Moving-boundary zero-point coupling from sampled fields
    G0(G0Args),
    /// Six-term phase-match table for standing-wave fields
    Phasematch(PhasematchArgs),
    /// 1-D plane-wave band diagram of a unit cell
    Bands(BandsArgs),
    /// Simulate spectra and backaction series
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Fit measured traces
    #[command(subcommand)]
    Fit(FitCommand),
    /// Figure-of-merit comparison table
    Table1(Table1Args),
    /// Nelder-Mead design of the unit cell
    Optimize(OptimizeArgs),
}

#[derive(Args, Debug)]
struct WindowArgs {
    /// Lowest effective index (dimensionless)
    #[arg(long, default_value_t = 1.0)]
    neff_min: f64,
    /// Highest effective index (dimensionless)
    #[arg(long, default_value_t = 3.5)]
    neff_max: f64,
    /// Smallest lattice period, m
    #[arg(long, default_value_t = 100e-9)]
    a_min: f64,
    /// Largest lattice period, m
    #[arg(long, default_value_t = 500e-9)]
    a_max: f64,
    /// Grid points per axis (count)
    #[arg(long, default_value_t = 26)]
    steps: usize,
    /// Pump vacuum wavelength, m
    #[arg(long, default_value_t = 1550e-9)]
    lambda0: f64,
    /// Substrate SAW velocity, m/s
    #[arg(long, default_value_t = 3400.0)]
    vsaw: f64,
    /// Cladding refractive index (dimensionless)
    #[arg(long, default_value_t = 1.45)]
    ncl: f64,
    /// Mechanical frequency, Hz
    #[arg(long, default_value_t = 5.37e9)]
    omega_m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FieldKind {
    Optical,
    Mechanical,
}

#[derive(Args, Debug)]
struct FftArgs {
    /// Field document (JSON; frequencies in Hz, lengths in m)
    #[arg(long)]
    fields: PathBuf,
    /// Zero-padding factor (count)
    #[arg(long, default_value_t = DEFAULT_PAD_FACTOR)]
    pad: usize,
    /// Which field to transform
    #[arg(long, value_enum, default_value_t = FieldKind::Optical)]
    field: FieldKind,
}

#[derive(Args, Debug)]
struct G0Args {
    /// Field document (JSON; frequencies in Hz, lengths in m)
    #[arg(long)]
    fields: PathBuf,
}

#[derive(Args, Debug)]
struct PhasematchArgs {
    /// Optical wavevector, rad/m
    #[arg(long)]
    ko: f64,
    /// Mechanical wavevector, rad/m
    #[arg(long)]
    km: f64,
    /// Number of defect cells (count)
    #[arg(long = "N", alias = "n")]
    n_cells: usize,
    /// Lattice period, m
    #[arg(long)]
    a: f64,
    /// Matched when |sinc| exceeds this (dimensionless)
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BandKind {
    Optical,
    Mechanical,
}

#[derive(Args, Debug)]
struct BandsArgs {
    /// Unit cell (JSON; lengths in m)
    #[arg(long)]
    cell: PathBuf,
    /// Optical (light line, Hz) or mechanical (sound line, Hz) bands
    #[arg(long = "type", value_enum)]
    kind: BandKind,
    /// Medium overrides (JSON; indices dimensionless, densities kg/m³, moduli Pa, velocity m/s)
    #[arg(long)]
    medium: Option<PathBuf>,
    /// Wavevector samples over [0, π/a] (count)
    #[arg(long, default_value_t = 21)]
    k_points: usize,
    /// Bands to report (count)
    #[arg(long, default_value_t = 6)]
    bands: usize,
    /// Plane waves on each side of zero (count)
    #[arg(long, default_value_t = DEFAULT_HARMONICS)]
    harmonics: usize,
}

#[derive(Args, Debug, Clone)]
struct CavityInputs {
    /// Cavity parameters (JSON; all rates in Hz)
    #[arg(long)]
    params: PathBuf,
    /// Pump (JSON; p_in_w in W, delta_hz in Hz, lambda0_m in m)
    #[arg(long)]
    drive: PathBuf,
}

#[derive(Args, Debug, Clone, Copy)]
struct Axis {
    /// First frequency of the output axis, Hz
    #[arg(long)]
    f_min: Option<f64>,
    /// Last frequency of the output axis, Hz
    #[arg(long)]
    f_max: Option<f64>,
    /// Samples on the output axis (count)
    #[arg(long, default_value_t = 2001)]
    points: usize,
}

#[derive(Subcommand, Debug)]
enum SimulateCommand {
    /// Probe reflection under a detuned pump, versus probe offset in Hz
    Omit {
        #[command(flatten)]
        inputs: CavityInputs,
        #[command(flatten)]
        axis: Axis,
    },
    /// Thermal mechanical lines, linear power per Hz versus frequency in Hz
    Thermal {
        #[command(flatten)]
        inputs: CavityInputs,
        #[command(flatten)]
        axis: Axis,
        /// Mode list (JSON array; omega_m_hz and gamma_eff_hz in Hz, relative_g0_sq dimensionless)
        #[arg(long)]
        modes: Option<PathBuf>,
        /// Bath temperature, K
        #[arg(long, default_value_t = ROOM_TEMPERATURE)]
        temperature: f64,
    },
    /// Effective mechanical linewidth (Hz) versus pump power (W)
    Backaction {
        #[command(flatten)]
        inputs: CavityInputs,
        /// Lowest pump power, W; defaults to a tenth of the drive power
        #[arg(long)]
        p_min: Option<f64>,
        /// Highest pump power, W; defaults to the drive power
        #[arg(long)]
        p_max: Option<f64>,
        /// Power steps (count)
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Also emit the mirrored detuning
        #[arg(long)]
        both: bool,
        /// Gaussian noise on each linewidth as a fraction of the intrinsic γ (dimensionless)
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Noise seed (integer)
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    Blue,
    Red,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Full,
    Asymptotic,
}

#[derive(Subcommand, Debug)]
enum FitCommand {
    /// Optical resonance from a laser sweep (axis: laser frequency, Hz)
    Resonance {
        /// Trace CSV (freq_hz in Hz; linear or dBm)
        #[arg(long)]
        trace: PathBuf,
    },
    /// Pump detuning from the modulation response (axis: modulation frequency, Hz)
    S11 {
        /// Trace CSV (freq_hz in Hz; linear |S| or 20 log10 |S| as dbm)
        #[arg(long)]
        trace: PathBuf,
        /// Cavity parameters (JSON; all rates in Hz)
        #[arg(long)]
        params: PathBuf,
        /// Preferred detuning sign
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
    },
    /// Lorentzian mechanical lines (axis: frequency, Hz)
    Mech {
        /// Spectrum CSV (freq_hz in Hz; linear or dBm)
        #[arg(long)]
        trace: PathBuf,
        /// Lines to fit (count)
        #[arg(long, default_value_t = 1)]
        peaks: usize,
        /// Background CSV subtracted in linear power first (freq_hz in Hz)
        #[arg(long)]
        background: Option<PathBuf>,
    },
    /// Zero-point coupling from a backaction power series
    G0 {
        /// Series CSV (p_in_w in W, delta_hz and gamma_eff_hz in Hz)
        #[arg(long)]
        series: PathBuf,
        /// Cavity parameters (JSON; all rates in Hz)
        #[arg(long)]
        params: PathBuf,
        /// Backaction model
        #[arg(long, value_enum, default_value_t = FormArg::Full)]
        form: FormArg,
        /// Fractional 1σ power calibration uncertainty (dimensionless)
        #[arg(long, default_value_t = 0.0)]
        power_systematic: f64,
        /// Pump vacuum wavelength, m
        #[arg(long, default_value_t = 1550e-9)]
        lambda0: f64,
        /// Fix the intrinsic linewidth, Hz
        #[arg(long)]
        known_gamma: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct Table1Args {
    /// `builtin` or an entries file (JSON array; g0_hz, omega_m_hz, kappa_hz, gamma_hz in Hz)
    #[arg(long, default_value = "builtin")]
    entries: String,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// Start cell (JSON; lengths in m)
    #[arg(long)]
    start: PathBuf,
    /// Objective (JSON; lengths in m, rates in Hz, weights dimensionless); defaults when absent
    #[arg(long)]
    objective: Option<PathBuf>,
    /// Iteration cap (count)
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    /// Value-spread tolerance (objective units, dimensionless)
    #[arg(long, default_value_t = 1e-10)]
    tol_f: f64,
    /// Simplex-diameter tolerance in normalized coordinates (dimensionless)
    #[arg(long, default_value_t = 1e-8)]
    tol_x: f64,
    /// Per-iteration trace CSV, written atomically
    #[arg(long)]
    trace: Option<PathBuf>,
}

/// What a handler hands back: the payload plus whether it is a soft failure.
struct Outcome {
    body: String,
    failed: bool,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, failed: false }
    }
}

struct Ctx {
    format: Option<Format>,
    quiet: bool,
}

impl Ctx {
    fn warn(&self, msg: &str) {
        if !self.quiet {
            eprintln!("warning: {msg}");
        }
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    let ctx = Ctx {
        format: cli.format,
        quiet: cli.quiet,
    };
    let result = run(&cli.command, &ctx).and_then(|o| {
        emit(cli.out.as_deref(), &o.body)?;
        Ok(o.failed)
    });
    match result {
        Ok(false) => 0,
        Ok(true) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => 2,
                _ => 1,
            }
        }
    }
}

fn run(cmd: &Command, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        Command::Window(a) => cmd_window(a, ctx),
        Command::Fft(a) => cmd_fft(a, ctx),
        Command::G0(a) => cmd_g0(a, ctx),
        Command::Phasematch(a) => cmd_phasematch(a, ctx),
        Command::Bands(a) => cmd_bands(a, ctx),
        Command::Simulate(s) => cmd_simulate(s, ctx),
        Command::Fit(f) => cmd_fit(f, ctx),
        Command::Table1(a) => cmd_table1(a, ctx),
        Command::Optimize(a) => cmd_optimize(a, ctx),
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, body),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(body.as_bytes()).and_then(|_| stdout.flush()) {
                // reader went away (`omc ... | head`)
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

/// Temp file in the target directory, then rename over the target.
fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| with_path(e, dir))?;
    tmp.write_all(body.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| with_path(e.error, path))?;
    Ok(())
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| with_path(e, path))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_spectrum(path: &Path) -> Result<Spectrum> {
    Spectrum::from_csv(&read_text(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn cmd_window(a: &WindowArgs, ctx: &Ctx) -> Result<Outcome> {
    if a.steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".into()));
    }
    let s = SubstrateModel::new(a.vsaw, a.ncl)?;
    let map = window_map(
        &linspace(a.neff_min, a.neff_max, a.steps),
        &linspace(a.a_min, a.a_max, a.steps),
        a.lambda0,
        &s,
        angular(a.omega_m),
    )?;
    Ok(Outcome::ok(match ctx.format {
        Some(Format::Json) => to_json(&map)?,
        _ => map.to_csv(),
    }))
}

fn cmd_fft(a: &FftArgs, ctx: &Ctx) -> Result<Outcome> {
    let doc: FieldsDocument = read_json(&a.fields)?;
    let pair = match a.field {
        FieldKind::Optical => &doc.optical,
        FieldKind::Mechanical => &doc.mechanical,
    };
    let spec = field_spectrum(pair, a.pad, doc.period_m)?;
    let peak = spec.peak_wavevector(true);
    ctx.note(&format!(
        "peak |k| = {peak:e} rad/m{}",
        doc.period_m
            .map(|p| format!(" ({:.6} pi/a)", peak * p / std::f64::consts::PI))
            .unwrap_or_default()
    ));
    Ok(Outcome::ok(match ctx.format {
        Some(Format::Json) => to_json(&spec)?,
        _ => spec.to_csv(),
    }))
}

fn cmd_g0(a: &G0Args, ctx: &Ctx) -> Result<Outcome> {
    let doc: FieldsDocument = read_json(&a.fields)?;
    let r = doc.g0()?;
    let (signed, magnitude) = (cyclic(r.signed), cyclic(r.magnitude));
    Ok(Outcome::ok(match ctx.format {
        Some(Format::Json) => to_json(&json!({ "g0_hz": magnitude, "g0_signed_hz": signed }))?,
        _ => format!("quantity,value\ng0_hz,{magnitude}\ng0_signed_hz,{signed}\n"),
    }))
}

fn cmd_phasematch(a: &PhasematchArgs, ctx: &Ctx) -> Result<Outcome> {
    if a.n_cells == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if !(a.a > 0.0) {
        return Err(Error::InvalidInput(format!("period must be positive, got {}", a.a)));
    }
    let w = WavevectorSet::standing_wave(a.ko, a.km, a.n_cells as f64 * a.a)?;
    let c = classify_interaction(&w, a.threshold)?;
    Ok(Outcome::ok(match ctx.format {
        Some(Format::Json) => to_json(&c)?,
        Some(Format::Csv) => {
            let mut s = String::from("term,delta_k_rad_per_m,phase,suppression,envelope,matched\n");
            for e in &c.report.entries {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    e.term, e.delta_k, e.phase, e.suppression, e.envelope, e.matched
                ));
            }
            s
        }
        None => {
            let class = serde_json::to_value(c.class)?;
            format!(
                "{}class: {}{}\n",
                c.report,
                class.as_str().unwrap_or("?"),
                if c.ambiguous { " (ambiguous)" } else { "" }
            )
        }
    }))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Medium {
    Optical(OpticalMedium),
    Mechanical(MechanicalMedium),
}

fn cmd_bands(a: &BandsArgs, ctx: &Ctx) -> Result<Outcome> {
    let cell: UnitCellGeometry = read_json(&a.cell)?;
    let medium: Option<Medium> = a.medium.as_deref().map(read_json).transpose()?;
    let ks = linspace(0.0, 1.0, a.k_points);
    let diagram = match a.kind {
        BandKind::Optical => {
            let m = match medium {
                Some(Medium::Optical(m)) => m,
                Some(Medium::Mechanical(_)) => {
                    return Err(Error::InvalidInput("medium file holds mechanical data".into()))
                }
                None => OpticalMedium::default(),
            };
            optical_bands(&cell, &m, &ks, a.bands, a.harmonics)?
        }
        BandKind::Mechanical => {
            let m = match medium {
                Some(Medium::Mechanical(m)) => m,
                Some(Medium::Optical(_)) => {
                    return Err(Error::InvalidInput("medium file holds optical data".into()))
                }
                None => MechanicalMedium::default(),
            };
            mechanical_bands(&cell, &m, &ks, a.bands, a.harmonics)?
        }
    };
    Ok(Outcome::ok(match ctx.format {
        Some(Format::Json) => to_json(&diagram)?,
        _ => diagram.to_csv(),
    }))
}

fn load_cavity(i: &CavityInputs) -> Result<(CavityParams, DriveCondition)> {
    let c: CavityParams = read_json(&i.params)?;
    let d: DriveCondition = read_json(&i.drive)?;
    Ok((c, d))
}

fn axis_or(axis: &Axis, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let (lo, hi) = (axis.f_min.unwrap_or(lo), axis.f_max.unwrap_or(hi));
    if !(hi > lo) || axis.points < 2 {
        return Err(Error::InvalidInput(format!(
            "need f_max > f_min and at least 2 points, got [{lo}, {hi}] with {}",
            axis.points
        )));
    }
    Ok(linspace(lo, hi, axis.points))
}

#[derive(Deserialize)]
struct ModeHz {
    omega_m_hz: f64,
    gamma_eff_hz: f64,
    #[serde(default = "unit")]
    relative_g0_sq: f64,
}

fn unit() -> f64 {
    1.0
}

fn cmd_simulate(s: &SimulateCommand, ctx: &Ctx) -> Result<Outcome> {
    match s {
        SimulateCommand::Omit { inputs, axis } => {
            let (c, d) = load_cavity(inputs)?;
            let n = intracavity_photons(&c, &d);
            let centre = cyclic(c.omega_m);
            let half = cyclic(c.kappa);
            let f = axis_or(axis, (centre - half).max(0.0), centre + half)?;
            let spec = omit_response(&c, &d, n, &f)?;
            ctx.note(&format!("intracavity photons: {n:e}"));
            Ok(Outcome::ok(match ctx.format {
                Some(Format::Json) => to_json(&spec)?,
                _ => spec.to_csv(),
            }))
        }
        SimulateCommand::Thermal {
            inputs,
            axis,
            modes,
            temperature,
        } => {
            let (c, d) = load_cavity(inputs)?;
            let modes: Vec<ThermalMode> = match modes {
                Some(p) => read_json::<Vec<ModeHz>>(p)?
                    .into_iter()
                    .map(|m| ThermalMode {
                        omega_m: angular(m.omega_m_hz),
                        gamma_eff: angular(m.gamma_eff_hz),
                        relative_g0_sq: m.relative_g0_sq,
                    })
                    .collect(),
                None => {
                    let n = intracavity_photons(&c, &d);
                    let lw = effective_linewidth_full(&c, n, d.delta)?;
                    if lw.lasing {
                        return Err(Error::Numerical(format!(
                            "drive is above the lasing threshold (gamma_eff = {:e} Hz); no thermal line",
                            cyclic(lw.gamma_eff)
                        )));
                    }
                    vec![ThermalMode {
                        omega_m: c.omega_m,
                        gamma_eff: lw.gamma_eff,
                        relative_g0_sq: 1.0,
                    }]
                }
            };
            if modes.is_empty() {
                return Err(Error::InvalidInput("mode list is empty".into()));
            }
            let widest = modes.iter().map(|m| cyclic(m.gamma_eff)).fold(0.0, f64::max);
            let lo = modes.iter().map(|m| cyclic(m.omega_m)).fold(f64::INFINITY, f64::min) - 10.0 * widest;
            let hi = modes.iter().map(|m| cyclic(m.omega_m)).fold(0.0, f64::max) + 10.0 * widest;
            let f = axis_or(axis, lo.max(0.0), hi)?;
            let spec = thermal_spectrum(&c, &modes, *temperature, &f)?;
            Ok(Outcome::ok(match ctx.format {
                Some(Format::Json) => to_json(&spec)?,
                _ => spec.to_csv(),
            }))
        }
        SimulateCommand::Backaction {
            inputs,
            p_min,
            p_max,
            steps,
            both,
            noise,
            seed,
        } => {
            let (c, d) = load_cavity(inputs)?;
            let hi = p_max.unwrap_or(d.p_in);
            let lo = p_min.unwrap_or(0.1 * hi);
            if !(hi > lo && lo >= 0.0) || *steps < 2 {
                return Err(Error::InvalidInput(format!(
                    "need 0 <= p_min < p_max and at least 2 steps, got [{lo}, {hi}] with {steps}"
                )));
            }
            if !(*noise >= 0.0 && noise.is_finite()) {
                return Err(Error::InvalidInput("noise fraction must be non-negative".into()));
            }
            let powers = linspace(lo, hi, *steps);
            let mut points = backaction_series(&c, &powers, d.delta, d.lambda0)?;
            if *both {
                points.extend(backaction_series(&c, &powers, -d.delta, d.lambda0)?);
            }
            if *noise > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let n = Normal::new(0.0, noise * c.gamma).map_err(|e| Error::InvalidInput(e.to_string()))?;
                for p in &mut points {
                    p.gamma_eff += n.sample(&mut rng);
                }
            }
            if points.iter().any(|p| p.gamma_eff <= 0.0) {
                ctx.warn("series crosses the lasing threshold; linewidths past it are not physical");
            }
            let series = PowerSeries::new(points);
            Ok(Outcome::ok(match ctx.format {
                Some(Format::Json) => to_json(&series)?,
                _ => series.to_csv(),
            }))
        }
    }
}

fn fit_json(f: &FitResult) -> serde_json::Value {
    let params: Vec<serde_json::Value> = f
        .params
        .iter()
        .map(|p| {
            let (name, value, sigma) = p.external();
            json!({ "name": name, "value": value, "sigma": sigma })
        })
        .collect();
    json!({
        "params": params,
        "residual_norm": f.residual_norm,
        "converged": f.converged,
        "warnings": f.warnings,
    })
}

fn fit_outcome(fit: &FitResult, ctx: &Ctx) -> Result<Outcome> {
    for w in &fit.warnings {
        ctx.warn(w);
    }
    let body = match ctx.format {
        Some(Format::Json) => to_json(&fit_json(fit))?,
        _ => fit.to_csv(),
    };
    if !fit.converged {
        eprintln!("error: fit did not converge");
    }
    Ok(Outcome {
        body,
        failed: !fit.converged,
    })
}

fn cmd_fit(f: &FitCommand, ctx: &Ctx) -> Result<Outcome> {
    match f {
        FitCommand::Resonance { trace } => {
            let t = read_spectrum(trace)?;
            fit_outcome(&fit_optical_resonance(&t)?, ctx)
        }
        FitCommand::S11 { trace, params, branch } => {
            let t = read_spectrum(trace)?;
            let c: CavityParams = read_json(params)?;
            let hint = branch.map(|b| match b {
                BranchArg::Blue => Branch::Blue,
                BranchArg::Red => Branch::Red,
            });
            let fit = fit_s11_detuning(&t, &c, hint)?;
            if fit.ambiguous {
                ctx.warn("magnitude data fix |delta| only; both signs are listed, preferred first");
            }
            if let Some(w) = fit.window_hz {
                ctx.note(&format!("structured residual (transparency window) near {w:e} Hz"));
            }
            let failed = !fit.best().converged;
            let body = match ctx.format {
                Some(Format::Json) => to_json(&json!({
                    "candidates": fit.candidates.iter().map(fit_json).collect::<Vec<_>>(),
                    "ambiguous": fit.ambiguous,
                    "window_hz": fit.window_hz,
                }))?,
                _ => {
                    let mut s = String::from("candidate,name,value,sigma\n");
                    for (i, cand) in fit.candidates.iter().enumerate() {
                        for line in cand.to_csv().lines().skip(1) {
                            s.push_str(&format!("{i},{line}\n"));
                        }
                    }
                    s
                }
            };
            Ok(Outcome { body, failed })
        }
        FitCommand::Mech { trace, peaks, background } => {
            let mut t = read_spectrum(trace)?;
            if let Some(b) = background {
                let bg = read_spectrum(b)?;
                let sub = subtract_background(&t, &bg)?;
                if sub.clamped > 0 {
                    ctx.warn(&format!("{} samples fell below the background and were clamped to 0", sub.clamped));
                }
                t = sub.spectrum;
            }
            let fit = fit_mechanical_modes(&t, *peaks)?;
            for w in &fit.warnings {
                ctx.warn(w);
            }
            let body = match ctx.format {
                Some(Format::Json) => {
                    let (_, bv, bs) = fit.background.external();
                    to_json(&json!({
                        "modes": fit.modes.iter().map(fit_json).collect::<Vec<_>>(),
                        "background": { "value": bv, "sigma": bs },
                        "residual_norm": fit.residual_norm,
                        "converged": fit.converged,
                        "warnings": fit.warnings,
                    }))?
                }
                _ => {
                    let mut s = String::from("mode,name,value,sigma\n");
                    for (i, m) in fit.modes.iter().enumerate() {
                        for p in &m.params {
                            let (n, v, sg) = p.external();
                            s.push_str(&format!("{i},{n},{v},{sg}\n"));
                        }
                    }
                    let (_, bv, bs) = fit.background.external();
                    s.push_str(&format!(",background,{bv},{bs}\n"));
                    s.push_str(&format!(",residual_norm,{},\n", fit.residual_norm));
                    s.push_str(&format!(",converged,{},\n", fit.converged as u8));
                    s
                }
            };
            if !fit.converged {
                eprintln!("error: fit did not converge");
            }
            Ok(Outcome {
                body,
                failed: !fit.converged,
            })
        }
        FitCommand::G0 {
            series,
            params,
            form,
            power_systematic,
            lambda0,
            known_gamma,
        } => {
            let s = PowerSeries::from_csv(&read_text(series)?)?;
            let c: CavityParams = read_json(params)?;
            let opts = G0Options {
                form: match form {
                    FormArg::Full => BackactionForm::Full,
                    FormArg::Asymptotic => BackactionForm::Asymptotic,
                },
                power_systematic: *power_systematic,
                lambda0: *lambda0,
                known_gamma: known_gamma.map(angular),
            };
            fit_outcome(&extract_g0(&s, &c, &opts)?, ctx)
        }
    }
}

fn cmd_table1(a: &Table1Args, ctx: &Ctx) -> Result<Outcome> {
    let builtin = a.entries == "builtin";
    let entries: Vec<TableEntry> = if builtin {
        presets::table1_entries()
    } else {
        read_json(Path::new(&a.entries))?
    };
    let mut report = table1_report(&entries)?;
    if builtin {
        report.add_note(presets::kappa_note());
    }
    Ok(Outcome::ok(match ctx.format {
        Some(Format::Json) => to_json(&report)?,
        Some(Format::Csv) => report.to_csv(),
        None => report.to_string(),
    }))
}

fn cmd_optimize(a: &OptimizeArgs, ctx: &Ctx) -> Result<Outcome> {
    let start: UnitCellGeometry = read_json(&a.start)?;
    let obj: DesignObjective = match &a.objective {
        Some(p) => read_json(p)?,
        None => DesignObjective::default(),
    };
    let opts = NelderMeadOptions {
        max_iter: a.max_iter,
        tol_f: a.tol_f,
        tol_x: a.tol_x,
        ..Default::default()
    };
    let r = optimize_cell(&start, &obj, &opts)?;
    if let Some(t) = &a.trace {
        write_atomic(t, &r.run.trace_csv())?;
    }
    if r.run.rejected > 0 {
        ctx.warn(&format!("{} trial designs could not be evaluated", r.run.rejected));
    }
    if r.best_infeasible {
        eprintln!("error: no design inside the operating window was found; reporting the best infeasible one");
    }
    let body = match ctx.format {
        Some(Format::Json) => to_json(&json!({
            "geometry": r.geometry,
            "start": r.start,
            "best": r.best,
            "best_infeasible": r.best_infeasible,
            "iterations": r.run.iterations,
            "evaluations": r.run.evaluations,
            "termination": r.run.termination,
        }))?,
        Some(Format::Csv) => {
            let mut s = String::from(
                "label,a_m,w_m,hole_x_m,hole_y_m,n_eff,f_m_hz,f_saw_hz,in_window,g0_hz,coupling_term,window_term,phase_term,total\n",
            );
            for (label, e) in [("start", &r.start), ("best", &r.best)] {
                s.push_str(&format!(
                    "{label},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    e.a_m,
                    e.w_m,
                    e.hole_x_m,
                    e.hole_y_m,
                    e.n_eff,
                    e.f_m_hz,
                    e.f_saw_hz,
                    e.in_window,
                    e.g0_hz.map(|v| v.to_string()).unwrap_or_default(),
                    e.coupling_term,
                    e.window_term,
                    e.phase_term,
                    e.total
                ));
            }
            s
        }
        None => r.to_string(),
    };
    Ok(Outcome {
        body,
        failed: r.best_infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_flag_help_names_a_unit_or_kind() {
        use clap::CommandFactory;
        fn walk(cmd: &clap::Command, path: &str) {
            for arg in cmd.get_arguments() {
                let id = arg.get_id().as_str();
                if matches!(id, "help" | "version" | "out" | "format" | "quiet") {
                    continue;
                }
                let help = arg.get_help().map(|h| h.to_string()).unwrap_or_default();
                assert!(!help.is_empty(), "{path} --{id} has no help");
            }
            for sub in cmd.get_subcommands() {
                walk(sub, &format!("{path} {}", sub.get_name()));
            }
        }
        walk(&Cli::command(), "omc");
        Cli::command().debug_assert();
    }
}
