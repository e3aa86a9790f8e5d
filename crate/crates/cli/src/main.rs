use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellcomm::bell::{chsh_sampled, ChshSettings};
use bellcomm::math::PolarAngle;
use bellcomm::montecarlo::{sweep_curve, DEFAULT_GRID, DEFAULT_N};
use bellcomm::protocols::{self, ProtocolSpec};
use bellcomm::report::{
    chsh_record_line, chsh_summary, curve_csv_string, render_curve_svg, write_curve_csv,
};
use bellcomm::verify::{run_verify, VerifyConfig, VerifyHooks};
use bellcomm::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// `println!` that reports a closed stdout instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(io::stdout().lock(), $($arg)*)?
    };
}

#[derive(Parser)]
#[command(
    name = "bellcomm",
    version,
    about = "Classical one-bit protocols for planar EPR-Bohm correlations"
)]
struct Cli {
    /// Worker threads for Monte Carlo estimation (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Read every angle flag in degrees instead of radians.
    #[arg(long, global = true)]
    degrees: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the correlation function over θ ∈ [0, π] and write CSV/SVG.
    Curve(CurveArgs),
    /// Estimate the CHSH functional.
    Chsh(ChshArgs),
    /// Run the identity and reproduction checks.
    Verify(VerifyArgs),
    /// Run and print a single trial with explicit shares.
    Trial(TrialArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolKind {
    Plain,
    FixedShift,
    RandomShift,
    TwoShare,
    Adaptive,
    Quantum,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, value_enum)]
    protocol: ProtocolKind,

    /// Shift angle for fixed-shift, in [0, π/2].
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,

    /// Bits sent by the adaptive protocol.
    #[arg(long, default_value_t = 3)]
    k: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,

    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,

    #[arg(long, default_value_t = DEFAULT_N)]
    n: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output file. With `--format both` the extension is replaced by .csv
    /// and .svg. CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ChshArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,

    #[arg(long, default_value_t = DEFAULT_N)]
    n: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,

    #[arg(long = "a-prime", allow_negative_numbers = true)]
    a_prime: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,

    #[arg(long = "b-prime", allow_negative_numbers = true)]
    b_prime: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = VerifyConfig::default().n)]
    n: u64,

    #[arg(long, default_value_t = VerifyConfig::default().grid_points)]
    grid: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Test hook: negate Bob's fixed-shift outcome.
    #[arg(long, hide = true)]
    inject_flip_bob: bool,

    /// Test hook: evaluate the Heaviside form with H(0) = 1.
    #[arg(long, hide = true)]
    inject_heaviside_one: bool,
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,

    #[arg(long, allow_negative_numbers = true)]
    a: f64,

    #[arg(long, allow_negative_numbers = true)]
    b: f64,

    /// First (or only) shared direction.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,

    /// Second shared direction (two-share).
    #[arg(long, allow_negative_numbers = true)]
    lambda2: Option<f64>,

    /// Uniform draws for the quantum reference sampler.
    #[arg(long)]
    u: Option<f64>,

    #[arg(long)]
    v: Option<f64>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            Error::Config(_) | Error::Usage(_) | Error::Domain(_) => EXIT_USAGE,
            _ => EXIT_VERIFY,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        // A reader that went away (`| head`) is not an error.
        let code = if e.kind() == io::ErrorKind::BrokenPipe {
            0
        } else {
            EXIT_IO
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

struct Angles {
    degrees: bool,
}

impl Angles {
    fn radians(&self, x: f64) -> f64 {
        if self.degrees {
            x.to_radians()
        } else {
            x
        }
    }

    fn polar(&self, x: f64) -> Result<PolarAngle, Failure> {
        Ok(PolarAngle::try_new(self.radians(x))?)
    }
}

fn protocol_spec(args: &ProtocolArgs, angles: &Angles) -> Result<ProtocolSpec, Failure> {
    if args.delta.is_some()
        && !matches!(
            args.protocol,
            ProtocolKind::FixedShift | ProtocolKind::RandomShift
        )
    {
        return Err(usage(
            "--delta only applies to fixed-shift (and to random-shift trials)",
        ));
    }
    let spec = match args.protocol {
        ProtocolKind::Plain => ProtocolSpec::PlainLhv,
        ProtocolKind::FixedShift => {
            let delta = args
                .delta
                .ok_or_else(|| usage("fixed-shift needs --delta"))?;
            ProtocolSpec::fixed_shift(angles.radians(delta))?
        }
        ProtocolKind::RandomShift => ProtocolSpec::RandomShift,
        ProtocolKind::TwoShare => ProtocolSpec::TwoShare,
        ProtocolKind::Adaptive => ProtocolSpec::adaptive(args.k)?,
        ProtocolKind::Quantum => ProtocolSpec::QuantumReference,
    };
    Ok(spec)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    })
}

fn cmd_curve(args: CurveArgs, angles: &Angles) -> Result<(), Failure> {
    let spec = protocol_spec(&args.protocol, angles)?;
    if args.grid < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let (csv_path, svg_path) = match (args.format, &args.out) {
        (Format::Csv, out) => (out.clone(), None),
        (Format::Svg, Some(out)) => (None, Some(out.clone())),
        (Format::Both, Some(out)) => (
            Some(out.with_extension("csv")),
            Some(out.with_extension("svg")),
        ),
        (_, None) => return Err(usage("--format svg/both needs --out")),
    };
    let sweep = sweep_curve(spec, args.grid, args.n, args.seed)?;

    match (args.format, csv_path) {
        (Format::Svg, _) => {}
        (_, Some(path)) => {
            let mut w = create(&path)?;
            write_curve_csv(&sweep, &mut w)?;
            w.flush()?;
            eprintln!("wrote {}", path.display());
        }
        (_, None) => {
            io::stdout()
                .lock()
                .write_all(curve_csv_string(&sweep)?.as_bytes())?;
        }
    }
    if let Some(path) = svg_path {
        let mut w = create(&path)?;
        w.write_all(render_curve_svg(&sweep).as_bytes())?;
        w.flush()?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_chsh(args: ChshArgs, angles: &Angles) -> Result<(), Failure> {
    let spec = protocol_spec(&args.protocol, angles)?;
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let base = ChshSettings::canonical();
    let pick = |v: Option<f64>, default: PolarAngle| v.map_or(Ok(default), |x| angles.polar(x));
    let settings = ChshSettings::new(
        pick(args.a, base.a)?,
        pick(args.a_prime, base.a_prime)?,
        pick(args.b, base.b)?,
        pick(args.b_prime, base.b_prime)?,
    );
    let result = chsh_sampled(spec, &settings, args.n, args.seed)?;
    out!("{}", chsh_record_line(&spec, &result, args.seed));
    out!("{}", chsh_summary(&spec, &result));
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let cfg = VerifyConfig {
        n: args.n,
        grid_points: args.grid,
        seed: args.seed,
        hooks: VerifyHooks {
            flip_fixed_shift_bob: args.inject_flip_bob,
            heaviside_zero_is_one: args.inject_heaviside_one,
        },
    };
    if cfg.grid_points < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    let report = run_verify(&cfg)?;
    for check in &report.checks {
        out!("{check}");
    }
    if report.all_passed() {
        out!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("{} check(s) failed: {}", names.len(), names.join(", ")),
        })
    }
}

fn cmd_trial(args: TrialArgs, angles: &Angles) -> Result<(), Failure> {
    let a = angles.polar(args.a)?;
    let b = angles.polar(args.b)?;
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| usage(format!("{flag} is required for this protocol")))
    };
    let lambda = || -> Result<PolarAngle, Failure> { angles.polar(need(args.lambda, "--lambda")?) };

    let record = match args.protocol.protocol {
        ProtocolKind::Plain => protocols::run_trial_plain(a, b, lambda()?),
        ProtocolKind::FixedShift => {
            let delta = need(args.protocol.delta, "--delta")?;
            protocols::run_trial_fixed(a, b, lambda()?, angles.radians(delta))?
        }
        ProtocolKind::RandomShift => {
            let delta = need(args.protocol.delta, "--delta")?;
            protocols::run_trial_random_shift(a, b, lambda()?, angles.radians(delta))?
        }
        ProtocolKind::TwoShare => {
            let l2 = angles.polar(need(args.lambda2, "--lambda2")?)?;
            protocols::run_trial_twoshare(a, b, lambda()?, l2)?
        }
        ProtocolKind::Adaptive => {
            let l = match args.lambda {
                Some(x) => angles.polar(x)?,
                None => PolarAngle::ZERO,
            };
            protocols::run_trial_adaptive(a, b, l, args.protocol.k)?
        }
        ProtocolKind::Quantum => {
            let u = need(args.u, "--u")?;
            let v = need(args.v, "--v")?;
            if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
                return Err(usage("--u and --v must lie in [0, 1)"));
            }
            protocols::run_trial_quantum(a, b, u, v)
        }
    };
    out!("protocol = {}", protocol_label(&args.protocol, angles));
    out!("{record}");
    Ok(())
}

fn protocol_label(args: &ProtocolArgs, angles: &Angles) -> String {
    match args.protocol {
        ProtocolKind::FixedShift | ProtocolKind::RandomShift => match args.delta {
            Some(d) => format!("{}(delta={})", kind_name(args.protocol), angles.radians(d)),
            None => kind_name(args.protocol).to_string(),
        },
        ProtocolKind::Adaptive => format!("adaptive(k={})", args.k),
        other => kind_name(other).to_string(),
    }
}

fn kind_name(kind: ProtocolKind) -> &'static str {
    match kind {
        ProtocolKind::Plain => "plain",
        ProtocolKind::FixedShift => "fixed-shift",
        ProtocolKind::RandomShift => "random-shift",
        ProtocolKind::TwoShare => "two-share",
        ProtocolKind::Adaptive => "adaptive",
        ProtocolKind::Quantum => "quantum",
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let angles = Angles {
        degrees: cli.degrees,
    };
    let dispatch = move || match cli.command {
        Command::Curve(a) => cmd_curve(a, &angles),
        Command::Chsh(a) => cmd_chsh(a, &angles),
        Command::Verify(a) => cmd_verify(a),
        Command::Trial(a) => cmd_trial(a, &angles),
    };
    match cli.threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| usage(e.to_string()))?
            .install(dispatch),
        None => dispatch(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.code == 0 => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
