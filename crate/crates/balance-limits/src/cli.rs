//! Command-line grammar and dispatch.
//!
//! Data goes to stdout or to `--out` (written atomically); diagnostics go
//! to stderr. Exit status: 0 success, 1 I/O failure, 2 usage error, 3
//! domain or singularity error, 4 inconclusive stability.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use balance_limits_core::lti::{self, log_grid};
use balance_limits_core::plant::Orientation;
use balance_limits_core::quadrature::QuadratureConfig;
use balance_limits_core::robustness::{self, bode_integral, waterbed_check, Band};
use balance_limits_core::stability::nyquist_stable;
use balance_limits_core::sweep::{self, Abscissa, SweepSpec, SweepVariable};
use balance_limits_core::timesim::{simulate, SimConfig};
use balance_limits_core::{
    Complex64, ConstructedT, DelayLoop, PoissonKernel, Regime, WaterbedStatus,
};
use clap::{Args, ColorChoice, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{parse_list, to_kv_text, ControllerCoeffs, KvFile, Preset, RunConfig};
use crate::error::{CliError, CoreContext, Result, EXIT_OK, EXIT_USAGE};
use crate::formats::{self, to_json_text};
use crate::heatmap::{parallel_heatmap, AxisRange};
use crate::output::{emit, write_atomic};
use crate::psd::{welch, DEFAULT_OVERLAP};

/// Static gain used when no controller is configured.
pub const DEFAULT_GAIN: f64 = 10.0;

#[derive(Debug, Parser)]
#[command(
    name = "balance-limits",
    version,
    color = ColorChoice::Never,
    about = "Fundamental performance limits of delayed cart-pendulum balancing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Poles and zeros of the linearized plant (JSON)
    #[command(name = "poleszeros", allow_negative_numbers = true)]
    PolesZeros(PolesZerosArgs),
    /// Fragility bound F in nats (JSON)
    #[command(allow_negative_numbers = true)]
    Fragility(FragilityArgs),
    /// Fragility curve over one swept parameter
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Fragility over a grid of stick length and fixation point
    #[command(allow_negative_numbers = true)]
    Heatmap(HeatmapArgs),
    /// Frequency response of T or S for the delayed loop
    #[command(name = "freqresp", allow_negative_numbers = true)]
    FreqResp(FreqRespArgs),
    /// Poisson-weighted integral of ln|T| at the RHP pole (JSON)
    #[command(allow_negative_numbers = true)]
    BodeIntegral(BodeArgs),
    /// Waterbed inequality c1 ln M1 + c2 ln M2 >= F on a band (JSON)
    #[command(allow_negative_numbers = true)]
    Waterbed(WaterbedArgs),
    /// Nyquist stability of the delayed loop (JSON)
    #[command(allow_negative_numbers = true)]
    Stability(StabilityArgs),
    /// Seeded time-domain simulation of the upright loop (CSV)
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Welch power spectral density of a trajectory column (CSV)
    Psd(PsdArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Parameter preset, applied first [default: case-study]
    #[arg(long, value_enum, value_name = "NAME")]
    pub preset: Option<Preset>,
    /// Key-value parameter file, applied after the preset
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Effective cart mass M (kg)
    #[arg(long = "M", value_name = "KG")]
    pub cart_mass: Option<f64>,
    /// Effective stick mass m (kg)
    #[arg(long = "m", value_name = "KG")]
    pub stick_mass: Option<f64>,
    /// Effective stick length l (m)
    #[arg(long = "l", value_name = "METERS")]
    pub stick_length: Option<f64>,
    /// Fixation point l0 (m)
    #[arg(long = "l0", value_name = "METERS")]
    pub fixation_point: Option<f64>,
    /// Gravitational acceleration g (m/s^2)
    #[arg(long = "g", value_name = "M_PER_S2")]
    pub gravity: Option<f64>,
    /// Loop delay tau (s)
    #[arg(long = "tau", value_name = "SECONDS")]
    pub delay: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ControllerArgs {
    /// Static controller C(s) = K [default: 10 unless a controller is configured]
    #[arg(long, value_name = "K", conflicts_with = "controller_num")]
    pub gain: Option<f64>,
    /// Controller numerator, comma-separated coefficients in descending powers
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub controller_num: Option<String>,
    /// Controller denominator, comma-separated coefficients [default: 1]
    #[arg(
        long,
        value_name = "LIST",
        allow_hyphen_values = true,
        requires = "controller_num"
    )]
    pub controller_den: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Write output to PATH (atomically) instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientationArg {
    Up,
    Down,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::Up => Orientation::Upright,
            OrientationArg::Down => Orientation::Downward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct PolesZerosArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Equilibrium to linearize about
    #[arg(long, value_enum, default_value = "up")]
    pub orientation: OrientationArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FragilityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also report F in dB (20/ln 10 times the value in nats)
    #[arg(long)]
    pub db: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VaryArg {
    /// Effective stick length l (m)
    Length,
    /// Fixation point l0 (m)
    Fixation,
    /// m/M, varying m at fixed M
    MassRatio,
    /// Loop delay tau (s)
    Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AbscissaArg {
    Effective,
    Actual,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Parameter to sweep
    #[arg(long, value_enum)]
    pub vary: VaryArg,
    /// Start of the sweep range
    #[arg(long)]
    pub lo: f64,
    /// End of the sweep range
    #[arg(long)]
    pub hi: f64,
    /// Number of evenly spaced points
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Keep l0 equal to l while sweeping the stick length
    #[arg(long)]
    pub couple: bool,
    /// Report stick-length abscissae as effective l or actual length 1.5 l
    #[arg(long, value_enum, default_value = "effective")]
    pub abscissa: AbscissaArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Stick-length axis as LO,HI,COUNT (m)
    #[arg(long, value_name = "LO,HI,N", default_value = "0.2,2,200")]
    pub l_range: String,
    /// Fixation-point axis as LO,HI,COUNT (m)
    #[arg(long, value_name = "LO,HI,N", default_value = "0.1,2,200")]
    pub l0_range: String,
    /// Emit the matrix CSV layout instead of one row per cell
    #[arg(long)]
    pub matrix: bool,
    /// Worker threads [default: all cores]
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Lowest grid frequency (rad/s)
    #[arg(long, default_value_t = lti::DEFAULT_GRID_MIN)]
    pub omega_min: f64,
    /// Highest grid frequency (rad/s)
    #[arg(long, default_value_t = lti::DEFAULT_GRID_MAX)]
    pub omega_max: f64,
    /// Number of logarithmically spaced grid points
    #[arg(long, default_value_t = lti::DEFAULT_GRID_POINTS)]
    pub points: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        log_grid(self.omega_min, self.omega_max, self.points)
            .context("frequency grid (omega-min, omega-max, points)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LoopFunction {
    /// Complementary sensitivity T = L/(1+L)
    T,
    /// Sensitivity S = 1/(1+L)
    S,
}

#[derive(Debug, Clone, Args)]
pub struct FreqRespArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[arg(long, value_enum, default_value = "up")]
    pub orientation: OrientationArg,
    /// Closed-loop function to sample
    #[arg(long, value_enum, default_value = "t")]
    pub function: LoopFunction,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TSource {
    /// T(s) built with the exact interpolation properties of the plant's p, q, tau
    Constructed,
    /// T(s) of the configured delayed loop
    Loop,
}

#[derive(Debug, Clone, Args)]
pub struct TSourceArgs {
    /// Where T(s) comes from
    #[arg(long, value_enum, default_value = "constructed")]
    pub source: TSource,
    /// Roll-off corner a of the constructed T (rad/s)
    #[arg(long, default_value_t = 10.0)]
    pub corner: f64,
    /// Roll-off order n of the constructed T
    #[arg(long, default_value_t = 1)]
    pub order: u32,
}

#[derive(Debug, Clone, Args)]
pub struct BodeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[command(flatten)]
    pub source: TSourceArgs,
    /// Kernel real part sigma0 [default: the RHP pole p]
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Kernel imaginary part omega0
    #[arg(long, default_value_t = 0.0)]
    pub omega0: f64,
    /// Gauss-Legendre nodes per quadrature panel
    #[arg(long, default_value_t = QuadratureConfig::default().nodes_per_panel)]
    pub nodes_per_panel: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WaterbedArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[command(flatten)]
    pub source: TSourceArgs,
    /// Band as OMEGA1,OMEGA2 (rad/s)
    #[arg(long, value_name = "W1,W2")]
    pub band: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    #[arg(long, value_enum, default_value = "up")]
    pub orientation: OrientationArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
    /// Integration step (s) [default: 0.001]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time (s) [default: 10]
    #[arg(long)]
    pub duration: Option<f64>,
    /// Standard deviation of the sensor noise n (m)
    #[arg(long)]
    pub sensor_noise: Option<f64>,
    /// Standard deviation of the actuation noise r (N)
    #[arg(long)]
    pub actuation_noise: Option<f64>,
    /// Noise seed; required when any noise is nonzero
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial cart position x (m)
    #[arg(long)]
    pub initial_x: Option<f64>,
    /// Initial cart velocity (m/s)
    #[arg(long)]
    pub initial_velocity: Option<f64>,
    /// Initial stick angle theta (rad)
    #[arg(long)]
    pub initial_theta: Option<f64>,
    /// Initial angular velocity (rad/s)
    #[arg(long)]
    pub initial_angular_velocity: Option<f64>,
    /// Also write the resolved configuration as a parameter file
    #[arg(long, value_name = "PATH")]
    pub save_config: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Column {
    X,
    Theta,
    Z,
    Y,
    U,
}

#[derive(Debug, Clone, Args)]
pub struct PsdArgs {
    /// Trajectory CSV as written by `simulate`
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Trajectory column to analyse
    #[arg(long, value_enum, default_value = "z")]
    pub column: Column,
    /// Samples per Welch segment
    #[arg(long, default_value_t = 4096)]
    pub segment_len: usize,
    /// Fractional segment overlap in [0, 0.9]
    #[arg(long, default_value_t = DEFAULT_OVERLAP)]
    pub overlap: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::PolesZeros(a) => poles_zeros(a, stdout),
        Command::Fragility(a) => fragility(a, stdout),
        Command::Sweep(a) => sweep_cmd(a, stdout, stderr),
        Command::Heatmap(a) => heatmap(a, stdout),
        Command::FreqResp(a) => freqresp(a, stdout, stderr),
        Command::BodeIntegral(a) => bode(a, stdout),
        Command::Waterbed(a) => waterbed(a, stdout),
        Command::Stability(a) => stability(a, stdout),
        Command::Simulate(a) => simulate_cmd(a, stdout, stderr),
        Command::Psd(a) => psd(a, stdout, stderr),
    }
}

/// Preset, then file, then flags.
pub fn resolve(model: &ModelArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_preset(model.preset.unwrap_or(Preset::CaseStudy));
    if let Some(path) = &model.config {
        KvFile::read(path)?.apply(&mut cfg)?;
    }
    let p = &mut cfg.params;
    for (slot, flag) in [
        (&mut p.cart_mass, model.cart_mass),
        (&mut p.stick_mass, model.stick_mass),
        (&mut p.stick_length, model.stick_length),
        (&mut p.fixation_point, model.fixation_point),
        (&mut p.gravity, model.gravity),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if let Some(tau) = model.delay {
        cfg.delay = tau;
    }
    cfg.params.validate().context("parameters")?;
    if !(cfg.delay.is_finite() && cfg.delay >= 0.0) {
        return Err(CliError::data(
            "tau",
            format!("must be finite and >= 0, got {}", cfg.delay),
        ));
    }
    Ok(cfg)
}

fn resolve_controller(cfg: &RunConfig, args: &ControllerArgs) -> Result<ControllerCoeffs> {
    if let Some(k) = args.gain {
        return Ok(ControllerCoeffs::gain(k));
    }
    if let Some(num) = &args.controller_num {
        let den = match &args.controller_den {
            Some(d) => parse_list("controller-den", d)?,
            None => vec![1.0],
        };
        return Ok(ControllerCoeffs {
            num: parse_list("controller-num", num)?,
            den,
        });
    }
    Ok(cfg
        .controller
        .clone()
        .unwrap_or_else(|| ControllerCoeffs::gain(DEFAULT_GAIN)))
}

fn build_loop(cfg: &RunConfig, ctrl: &ControllerCoeffs, orient: Orientation) -> Result<DelayLoop> {
    DelayLoop::new(cfg.params.plant_tf(orient), ctrl.to_tf()?, cfg.delay).context("loop")
}

fn finish_json<T: Serialize>(value: &T, out: &OutArgs, stdout: &mut dyn Write) -> Result<()> {
    emit(out.out.as_deref(), stdout, to_json_text(value)?.as_bytes())
}

fn finish_csv<F>(out: &OutArgs, stdout: &mut dyn Write, write: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    emit(out.out.as_deref(), stdout, &buf)
}

#[derive(Serialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

impl From<&Complex64> for ComplexJson {
    fn from(c: &Complex64) -> Self {
        ComplexJson { re: c.re, im: c.im }
    }
}

#[derive(Serialize)]
struct ParamsJson {
    cart_mass: f64,
    stick_mass: f64,
    stick_length: f64,
    fixation_point: f64,
    gravity: f64,
}

impl ParamsJson {
    fn new(cfg: &RunConfig) -> Self {
        let p = &cfg.params;
        ParamsJson {
            cart_mass: p.cart_mass,
            stick_mass: p.stick_mass,
            stick_length: p.stick_length,
            fixation_point: p.fixation_point,
            gravity: p.gravity,
        }
    }
}

#[derive(Serialize)]
struct PolesZerosJson {
    orientation: &'static str,
    params: ParamsJson,
    poles: Vec<ComplexJson>,
    zeros: Vec<ComplexJson>,
}

fn poles_zeros(a: PolesZerosArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a.model)?;
    let orient = Orientation::from(a.orientation);
    let pz = cfg.params.poles_zeros(orient);
    let json = PolesZerosJson {
        orientation: match orient {
            Orientation::Upright => "upright",
            Orientation::Downward => "downward",
        },
        params: ParamsJson::new(&cfg),
        poles: pz.poles.iter().map(ComplexJson::from).collect(),
        zeros: pz.zeros.iter().map(ComplexJson::from).collect(),
    };
    finish_json(&json, &a.out, stdout)
}

#[derive(Serialize)]
struct FragilityJson {
    fragility: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fragility_db: Option<f64>,
    p: f64,
    q: Option<f64>,
    delay: f64,
    regime: &'static str,
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::NoRhpZero => "no_rhp_zero",
        Regime::RhpZero => "rhp_zero",
    }
}

fn fragility(a: FragilityArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a.model)?;
    let r = robustness::fragility(&cfg.params, cfg.delay).context("fragility (l0)")?;
    let json = FragilityJson {
        fragility: r.fragility,
        fragility_db: a.db.then(|| r.fragility_db()),
        p: r.p,
        q: r.q,
        delay: r.delay,
        regime: regime_name(r.regime),
    };
    finish_json(&json, &a.out, stdout)
}

#[derive(Serialize)]
struct CurveJson {
    vary: &'static str,
    points: Vec<formats::CurveRow>,
    skipped: Vec<f64>,
}

fn sweep_cmd(a: SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a.model)?;
    let (vary, name) = match a.vary {
        VaryArg::Length => (SweepVariable::StickLength, "length"),
        VaryArg::Fixation => (SweepVariable::FixationPoint, "fixation"),
        VaryArg::MassRatio => (SweepVariable::MassRatio, "mass_ratio"),
        VaryArg::Delay => (SweepVariable::Delay, "delay"),
    };
    let spec = SweepSpec {
        vary,
        lo: a.lo,
        hi: a.hi,
        count: a.count,
        base: cfg.params,
        delay: cfg.delay,
        couple_l0_to_l: a.couple,
        abscissa: match a.abscissa {
            AbscissaArg::Effective => Abscissa::Effective,
            AbscissaArg::Actual => Abscissa::Actual,
        },
    };
    let curve = sweep::fragility_curve(&spec).context("sweep (lo, hi, count)")?;
    for x in &curve.skipped {
        let _ = writeln!(stderr, "skipped singular point q = p at abscissa {x}");
    }
    match a.format {
        Format::Csv => finish_csv(&a.out, stdout, |b| formats::write_curve(b, &curve)),
        Format::Json => finish_json(
            &CurveJson {
                vary: name,
                points: curve
                    .points
                    .iter()
                    .map(|&(abscissa, f_nats)| formats::CurveRow { abscissa, f_nats })
                    .collect(),
                skipped: curve.skipped.clone(),
            },
            &a.out,
            stdout,
        ),
    }
}

fn parse_axis(param: &str, text: &str) -> Result<AxisRange> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(CliError::usage(
            param,
            format!("expected LO,HI,COUNT, got `{text}`"),
        ));
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::usage(param, format!("not a number: `{s}`")))
    };
    let count = n
        .parse::<usize>()
        .map_err(|_| CliError::usage(param, format!("count is not an integer: `{n}`")))?;
    Ok((num(lo)?, num(hi)?, count))
}

#[derive(Serialize)]
struct HeatmapJson<'a> {
    l_axis: &'a [f64],
    l0_axis: &'a [f64],
    #[serde(rename = "F_nats")]
    f_nats: Vec<Vec<Option<f64>>>,
}

fn heatmap(a: HeatmapArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a.model)?;
    if a.threads == Some(0) {
        return Err(CliError::usage("threads", "must be >= 1"));
    }
    let l_range = parse_axis("l-range", &a.l_range)?;
    let l0_range = parse_axis("l0-range", &a.l0_range)?;
    let surface = parallel_heatmap(l_range, l0_range, &cfg.params, cfg.delay, a.threads)?;
    match a.format {
        Format::Csv if a.matrix => finish_csv(&a.out, stdout, |b| {
            formats::write_heatmap_matrix(b, &surface)
        }),
        Format::Csv => finish_csv(&a.out, stdout, |b| formats::write_heatmap_long(b, &surface)),
        Format::Json => {
            let rows = (0..surface.l0_axis.len())
                .map(|i| {
                    (0..surface.l_axis.len())
                        .map(|j| surface.get(i, j))
                        .collect()
                })
                .collect();
            finish_json(
                &HeatmapJson {
                    l_axis: &surface.l_axis,
                    l0_axis: &surface.l0_axis,
                    f_nats: rows,
                },
                &a.out,
                stdout,
            )
        }
    }
}

fn freqresp(a: FreqRespArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a.model)?;
    let ctrl = resolve_controller(&cfg, &a.controller)?;
    let lp = build_loop(&cfg, &ctrl, a.orientation.into())?;
    let omegas = a.grid.grid()?;
    let (s, t) = lp.loop_response(&omegas).context("loop response")?;
    let resp = match a.function {
        LoopFunction::T => t,
        LoopFunction::S => s,
    };
    let pick = a.function;
    let eval = |w: f64| {
        let (s, t) = lp.sensitivities(Complex64::new(0.0, w))?;
        Ok(match pick {
            LoopFunction::T => t,
            LoopFunction::S => s,
        })
    };
    let (w, m) = lti::hinf_estimate_refined(eval, &omegas).context("peak refinement")?;
    let _ = writeln!(
        stderr,
        "peak |{}| = {m} at omega = {w} rad/s ({} Hz)",
        match pick {
            LoopFunction::T => "T",
            LoopFunction::S => "S",
        },
        w / std::f64::consts::TAU
    );
    match a.format {
        Format::Csv => finish_csv(&a.out, stdout, |b| formats::write_freq_response(b, &resp)),
        Format::Json => finish_json(&formats::freq_rows(&resp), &a.out, stdout),
    }
}

/// `T(jω)` for the chosen source together with the kernel pole data.
struct TSpec {
    constructed: Option<ConstructedT>,
    lp: Option<DelayLoop>,
    p: f64,
    fragility: f64,
}

impl TSpec {
    fn new(cfg: &RunConfig, src: &TSourceArgs, ctrl: &ControllerArgs) -> Result<Self> {
        let f = robustness::fragility(&cfg.params, cfg.delay).context("fragility (l0)")?;
        match src.source {
            TSource::Constructed => Ok(TSpec {
                constructed: Some(
                    ConstructedT::new(f.p, f.q, cfg.delay, src.corner, src.order)
                        .context("constructed T (corner, order)")?,
                ),
                lp: None,
                p: f.p,
                fragility: f.fragility,
            }),
            TSource::Loop => {
                let c = resolve_controller(cfg, ctrl)?;
                Ok(TSpec {
                    constructed: None,
                    lp: Some(build_loop(cfg, &c, Orientation::Upright)?),
                    p: f.p,
                    fragility: f.fragility,
                })
            }
        }
    }

    fn eval(&self, w: f64) -> balance_limits_core::Result<Complex64> {
        match (&self.constructed, &self.lp) {
            (Some(c), _) => c.eval_axis(w),
            (None, Some(lp)) => lp.complementary_at(w),
            (None, None) => unreachable!("TSpec always holds one source"),
        }
    }

    fn source_name(&self) -> &'static str {
        if self.constructed.is_some() {
            "constructed"
        } else {
            "loop"
        }
    }
}

#[derive(Serialize)]
struct BodeJson {
    source: &'static str,
    sigma0: f64,
    omega0: f64,
    nodes: usize,
    integral: f64,
    fragility: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_minphase_at_pole: Option<f64>,
}

fn bode(a: BodeArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a.model)?;
    let spec = TSpec::new(&cfg, &a.source, &a.controller)?;
    let kernel = PoissonKernel::new(a.sigma0.unwrap_or(spec.p), a.omega0)
        .context("kernel (sigma0, omega0)")?;
    if a.nodes_per_panel == 0 {
        return Err(CliError::usage("nodes-per-panel", "must be >= 1"));
    }
    let quad = QuadratureConfig {
        nodes_per_panel: a.nodes_per_panel,
        ..QuadratureConfig::default()
    };
    let integral = bode_integral(|w| spec.eval(w), &kernel, &quad).context("bode integral")?;
    let json = BodeJson {
        source: spec.source_name(),
        sigma0: kernel.sigma0(),
        omega0: kernel.omega0(),
        nodes: quad.total_nodes(),
        integral,
        fragility: spec.fragility,
        log_minphase_at_pole: spec.constructed.map(|c| c.log_minphase_at_pole()),
    };
    finish_json(&json, &a.out, stdout)
}

#[derive(Serialize)]
struct WaterbedJson {
    source: &'static str,
    band: [f64; 2],
    c1: f64,
    c2: f64,
    m1: f64,
    m2: f64,
    fragility: f64,
    lhs: f64,
    holds: bool,
    status: &'static str,
}

fn parse_band(text: &str) -> Result<Band> {
    let v = parse_list("band", text)?;
    let [lo, hi] = v.as_slice() else {
        return Err(CliError::usage(
            "band",
            format!("expected W1,W2, got `{text}`"),
        ));
    };
    Band::new(*lo, *hi).context("band")
}

fn waterbed(a: WaterbedArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a.model)?;
    let spec = TSpec::new(&cfg, &a.source, &a.controller)?;
    let band = parse_band(&a.band)?;
    let omegas = a.grid.grid()?;
    let r = waterbed_check(|w| spec.eval(w), spec.p, band, spec.fragility, &omegas)
        .context("waterbed check")?;
    let json = WaterbedJson {
        source: spec.source_name(),
        band: [r.band.lo, r.band.hi],
        c1: r.c1,
        c2: r.c2,
        m1: r.m1,
        m2: r.m2,
        fragility: r.fragility,
        lhs: r.lhs,
        holds: r.holds,
        status: match r.status {
            WaterbedStatus::Holds => "holds",
            WaterbedStatus::InconclusiveTight => "inconclusive_tight",
            WaterbedStatus::Violated => "violated",
        },
    };
    finish_json(&json, &a.out, stdout)
}

#[derive(Serialize)]
struct StabilityJson {
    stable: bool,
    winding: i64,
    open_loop_rhp_poles: i64,
    closed_loop_rhp_poles: i64,
    samples: usize,
}

fn stability(a: StabilityArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve(&a.model)?;
    let ctrl = resolve_controller(&cfg, &a.controller)?;
    let lp = build_loop(&cfg, &ctrl, a.orientation.into())?;
    let r = nyquist_stable(&lp).context("stability")?;
    let json = StabilityJson {
        stable: r.stable,
        winding: r.winding,
        open_loop_rhp_poles: r.open_loop_rhp_poles,
        closed_loop_rhp_poles: r.closed_loop_rhp_poles,
        samples: r.samples,
    };
    finish_json(&json, &a.out, stdout)
}

fn simulate_cmd(a: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut cfg = resolve(&a.model)?;
    let ctrl = resolve_controller(&cfg, &a.controller)?;
    let s = &mut cfg.sim;
    let [x0, v0, th0, w0] = &mut s.initial_state;
    for (slot, flag) in [
        (&mut s.dt, a.dt),
        (&mut s.duration, a.duration),
        (&mut s.sensor_noise_std, a.sensor_noise),
        (&mut s.actuation_noise_std, a.actuation_noise),
        (x0, a.initial_x),
        (v0, a.initial_velocity),
        (th0, a.initial_theta),
        (w0, a.initial_angular_velocity),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if a.seed.is_some() {
        s.seed = a.seed;
    }
    let noisy = s.sensor_noise_std != 0.0 || s.actuation_noise_std != 0.0;
    if noisy && s.seed.is_none() {
        return Err(CliError::usage(
            "seed",
            "required when sensor or actuation noise is nonzero",
        ));
    }
    cfg.controller = Some(ctrl.clone());
    if let Some(path) = &a.save_config {
        write_atomic(path, to_kv_text(&cfg).as_bytes())?;
    }
    let sim = SimConfig {
        params: cfg.params,
        controller: ctrl.to_tf()?,
        delay: cfg.delay,
        dt: cfg.sim.dt,
        duration: cfg.sim.duration,
        sensor_noise_std: cfg.sim.sensor_noise_std,
        actuation_noise_std: cfg.sim.actuation_noise_std,
        seed: cfg.sim.seed.unwrap_or(0),
        initial_state: cfg.sim.initial_state,
    };
    let tr = simulate(&sim).context("simulation")?;
    if tr.diverged {
        let t_end = tr.t.last().copied().unwrap_or(0.0);
        let _ = writeln!(
            stderr,
            "warning: |z| exceeded the divergence limit at t = {t_end} s; run stopped"
        );
    }
    finish_csv(&a.out, stdout, |b| formats::write_trajectory(b, &tr))
}

/// Sample spacing of a uniformly sampled time column.
fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(CliError::data(
            "input",
            "trajectory has fewer than 2 samples",
        ));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let tol = 1e-6 * dt;
    if dt.is_nan() || dt <= 0.0 || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > tol) {
        return Err(CliError::data("t_s", "time column is not uniformly spaced"));
    }
    Ok(dt)
}

fn psd(a: PsdArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let file = std::fs::File::open(&a.input).map_err(|source| CliError::Io {
        path: a.input.clone(),
        source,
    })?;
    let tr = formats::read_trajectory(std::io::BufReader::new(file))?;
    let dt = uniform_step(&tr.t)?;
    let col = match a.column {
        Column::X => &tr.x,
        Column::Theta => &tr.theta,
        Column::Z => &tr.z,
        Column::Y => &tr.y,
        Column::U => &tr.u,
    };
    let spec = welch(col, dt, a.segment_len, a.overlap)?;
    if let Some((f, _)) = spec.peak() {
        let _ = writeln!(stderr, "peak at {f} Hz (bin width {} Hz)", spec.bin_width());
    }
    finish_csv(&a.out, stdout, |b| formats::write_spectrum(b, &spec))
}
