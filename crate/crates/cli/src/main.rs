use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperbessel::hypergroup::{
    bk_character, bk_fourier, lag_character, BesselKingmanParams, FanPoint, LaguerreParams,
};
use hyperbessel::kernels::{bes_density, qbes_transition, BesDensity};
use hyperbessel::quad::QuadratureSpec;
use hyperbessel::sampling::{simulate_bes_paths, simulate_qbes_paths, PathSample};
use hyperbessel::verify::{run_suite, SUITES};
use serde::Serialize;

mod parse;

use parse::{parse_grid, parse_heis_points, parse_state, thread_count, Grid, Points};

#[derive(Parser, Debug)]
#[command(name = "hyperbessel", version, about = "Bessel and quantum Bessel kernels, samplers and identity checks")]
struct Cli {
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transition law of QBES(δ) from one state over time t (JSON).
    #[command(allow_negative_numbers = true)]
    QbesKernel {
        #[arg(long)]
        delta: f64,
        /// `tau=<real>,k=<int>` or `y1=<real>`.
        #[arg(long, value_parser = parse_state)]
        state: FanPoint,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-12)]
        trunc_eps: f64,
    },
    /// Simulated QBES(δ) paths on an absolute time grid.
    #[command(allow_negative_numbers = true)]
    QbesSim {
        #[arg(long)]
        delta: f64,
        #[arg(long, value_parser = parse_state)]
        start: FanPoint,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 1e-12)]
        trunc_eps: f64,
    },
    /// Simulated BES(δ) paths by exact noncentral chi-square steps.
    #[command(allow_negative_numbers = true)]
    BesSim {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// BES(δ) transition density p_t(x, ·) on a grid.
    #[command(allow_negative_numbers = true)]
    BesDensity {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x: f64,
        /// Comma list or start:stop:count.
        #[arg(long, value_parser = parse_grid)]
        y_grid: Grid,
    },
    /// Hypergroup characters on a grid.
    #[command(allow_negative_numbers = true)]
    CharEval {
        #[arg(long, value_enum, default_value_t = Hypergroup::Laguerre)]
        hypergroup: Hypergroup,
        #[arg(long)]
        alpha: f64,
        /// Laguerre character index, in state syntax.
        #[arg(long, value_parser = parse_state)]
        char: Option<FanPoint>,
        /// Laguerre points as x:w pairs, e.g. `0.5:1,1.2:-0.3`.
        #[arg(long, value_parser = parse_heis_points)]
        points: Option<Points>,
        /// Bessel-Kingman character indices.
        #[arg(long, value_parser = parse_grid)]
        u_grid: Option<Grid>,
        /// Bessel-Kingman points.
        #[arg(long, value_parser = parse_grid)]
        x_grid: Option<Grid>,
    },
    /// Bessel-Kingman Fourier (Hankel) transform of a built-in function.
    #[command(allow_negative_numbers = true)]
    Hankel {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum)]
        function: TestFunction,
        #[arg(long, value_parser = parse_grid)]
        u_grid: Grid,
        /// Upper integration limit; chosen from the function's decay when omitted.
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Runs the identity checks; exits with status 2 if any fails.
    #[command(allow_negative_numbers = true)]
    Verify {
        /// Suite name or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Overrides every check's tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Comma list or start:stop:count of positive, increasing times.
    #[arg(long, value_parser = parse_grid)]
    t_grid: Grid,
    #[arg(long, default_value_t = 1)]
    paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Hypergroup {
    Laguerre,
    BesselKingman,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TestFunction {
    /// `e^{-x²/2}`.
    Gaussian,
    /// Indicator of `[0, 1]`.
    Indicator,
}

enum Failure {
    Invalid(String),
    ChecksFailed { failed: usize, total: usize },
}

impl From<hyperbessel::Error> for Failure {
    fn from(e: hyperbessel::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Invalid(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Invalid(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(format!("json: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn open(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            Failure::Invalid(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize + ?Sized>(out: &Option<PathBuf>, value: &T) -> Outcome {
    let mut w = open(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv(out: &Option<PathBuf>, header: &[&str], rows: Vec<Vec<String>>) -> Outcome {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(open(out)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

const PATH_HEADER: [&str; 6] = ["path_id", "time", "coord0", "coord1", "branch", "k"];

fn state_row(path_id: u64, time: f64, s: FanPoint) -> Vec<String> {
    let (c0, c1) = s.plane();
    let (branch, k) = match s {
        FanPoint::Discrete { k, .. } => ("discrete", i64::from(k)),
        FanPoint::Continuous { .. } => ("continuous", -1),
    };
    vec![
        path_id.to_string(),
        num(time),
        num(c0),
        num(c1),
        branch.into(),
        k.to_string(),
    ]
}

fn bes_row(path_id: u64, time: f64, x: f64) -> Vec<String> {
    vec![
        path_id.to_string(),
        num(time),
        num(x),
        num(0.0),
        "continuous".into(),
        "-1".into(),
    ]
}

fn qbes_rows(start: FanPoint, paths: &[PathSample<FanPoint>]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.push(state_row(p.path_id, 0.0, start));
        for (&t, &s) in p.times.iter().zip(&p.states) {
            rows.push(state_row(p.path_id, t, s));
        }
    }
    rows
}

fn bes_rows(x0: f64, paths: &[PathSample<f64>]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.push(bes_row(p.path_id, 0.0, x0));
        for (&t, &x) in p.times.iter().zip(&p.states) {
            rows.push(bes_row(p.path_id, t, x));
        }
    }
    rows
}

fn json_only(format: Option<Format>, command: &str) -> Outcome {
    if format == Some(Format::Csv) {
        return Err(Failure::Invalid(format!("{command} writes JSON only")));
    }
    Ok(())
}

#[derive(Serialize)]
struct DensityPoint {
    y: f64,
    density: f64,
}

#[derive(Serialize)]
struct LaguerreValue {
    x: f64,
    w: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct BkValue {
    u: f64,
    x: f64,
    value: f64,
}

#[derive(Serialize)]
struct TransformValue {
    u: f64,
    value: f64,
    tail_bound: f64,
    tail_warning: bool,
}

// Smallest half-integer c with |f(c)| c^{α-1} below 1e-17.
fn decay_cutoff(f: impl Fn(f64) -> f64, exponent: f64) -> f64 {
    let mut c: f64 = 1.0;
    while f(c).abs() * c.powf(exponent) > 1e-17 && c < 1e4 {
        c += 0.5;
    }
    c
}

fn run(cli: Cli) -> Outcome {
    let out = &cli.out;
    match cli.command {
        Command::QbesKernel {
            delta,
            state,
            t,
            trunc_eps,
        } => {
            json_only(cli.format, "qbes-kernel")?;
            let law = qbes_transition(state, t, delta, trunc_eps)?;
            write_json(out, &law)
        }
        Command::QbesSim {
            delta,
            start,
            sim,
            trunc_eps,
        } => {
            let paths =
                simulate_qbes_paths(start, &sim.t_grid.0, delta, trunc_eps, sim.paths, sim.seed)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(out, &PATH_HEADER, qbes_rows(start, &paths)),
                Format::Json => write_json(out, &paths),
            }
        }
        Command::BesSim { delta, x0, sim } => {
            let paths = simulate_bes_paths(x0, &sim.t_grid.0, delta, sim.paths, sim.seed)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(out, &PATH_HEADER, bes_rows(x0, &paths)),
                Format::Json => write_json(out, &paths),
            }
        }
        Command::BesDensity { delta, t, x, y_grid } => {
            let d = BesDensity::new(delta, t, x)?;
            if let Some(y) = y_grid.0.iter().find(|y| **y < 0.0) {
                return Err(Failure::Invalid(format!("y-grid values must be >= 0, got {y}")));
            }
            let values: Vec<DensityPoint> = y_grid
                .0
                .iter()
                .map(|&y| DensityPoint {
                    y,
                    density: bes_density(&d, y),
                })
                .collect();
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(
                    out,
                    &["y", "density"],
                    values.iter().map(|v| vec![num(v.y), num(v.density)]).collect(),
                ),
                Format::Json => write_json(out, &values),
            }
        }
        Command::CharEval {
            hypergroup,
            alpha,
            char,
            points,
            u_grid,
            x_grid,
        } => match hypergroup {
            Hypergroup::Laguerre => {
                let p = LaguerreParams::new(alpha)?;
                let (Some(c), Some(Points(points))) = (char, points) else {
                    return Err(Failure::Invalid(
                        "laguerre characters need --char and --points".into(),
                    ));
                };
                let values: Vec<LaguerreValue> = points
                    .iter()
                    .map(|&a| {
                        let v = lag_character(c, a, &p);
                        LaguerreValue {
                            x: a.x,
                            w: a.w,
                            re: v.re,
                            im: v.im,
                        }
                    })
                    .collect();
                match cli.format.unwrap_or(Format::Csv) {
                    Format::Csv => write_csv(
                        out,
                        &["x", "w", "re", "im"],
                        values
                            .iter()
                            .map(|v| vec![num(v.x), num(v.w), num(v.re), num(v.im)])
                            .collect(),
                    ),
                    Format::Json => write_json(out, &values),
                }
            }
            Hypergroup::BesselKingman => {
                let p = BesselKingmanParams::new(alpha)?;
                let (Some(Grid(us)), Some(Grid(xs))) = (u_grid, x_grid) else {
                    return Err(Failure::Invalid(
                        "bessel-kingman characters need --u-grid and --x-grid".into(),
                    ));
                };
                if let Some(v) = us.iter().chain(&xs).find(|v| **v < 0.0) {
                    return Err(Failure::Invalid(format!("grid values must be >= 0, got {v}")));
                }
                let mut values = Vec::new();
                for &u in &us {
                    for &x in &xs {
                        values.push(BkValue {
                            u,
                            x,
                            value: bk_character(u, x, &p),
                        });
                    }
                }
                match cli.format.unwrap_or(Format::Csv) {
                    Format::Csv => write_csv(
                        out,
                        &["u", "x", "value"],
                        values
                            .iter()
                            .map(|v| vec![num(v.u), num(v.x), num(v.value)])
                            .collect(),
                    ),
                    Format::Json => write_json(out, &values),
                }
            }
        },
        Command::Hankel {
            alpha,
            function,
            u_grid,
            cutoff,
        } => {
            let p = BesselKingmanParams::new(alpha)?;
            let q = QuadratureSpec::default();
            let f = match function {
                TestFunction::Gaussian => |x: f64| (-0.5 * x * x).exp(),
                TestFunction::Indicator => |x: f64| if x <= 1.0 { 1.0 } else { 0.0 },
            };
            let cutoff = match (function, cutoff) {
                (_, Some(c)) if !(c > 0.0 && c.is_finite()) => {
                    return Err(Failure::Invalid(format!("cutoff must be positive, got {c}")))
                }
                (TestFunction::Indicator, c) => c.unwrap_or(1.0).min(1.0),
                (TestFunction::Gaussian, Some(c)) => c,
                (TestFunction::Gaussian, None) => decay_cutoff(f, p.haar_exponent()),
            };
            let values = u_grid
                .0
                .iter()
                .map(|&u| {
                    let v = bk_fourier(f, u, &p, &q, cutoff)?;
                    // The indicator vanishes past 1, so nothing is cut off there.
                    let exact_support = function == TestFunction::Indicator && cutoff == 1.0;
                    Ok(TransformValue {
                        u,
                        value: v.value,
                        tail_bound: if exact_support { 0.0 } else { v.tail_bound },
                        tail_warning: v.tail_warning && !exact_support,
                    })
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(
                    out,
                    &["u", "value", "tail_bound", "tail_warning"],
                    values
                        .iter()
                        .map(|v| {
                            vec![num(v.u), num(v.value), num(v.tail_bound), v.tail_warning.to_string()]
                        })
                        .collect(),
                ),
                Format::Json => write_json(out, &values),
            }
        }
        Command::Verify { suite, tol } => {
            json_only(cli.format, "verify")?;
            if suite != "all" && !SUITES.contains(&suite.as_str()) {
                return Err(Failure::Invalid(format!(
                    "unknown suite '{suite}'; expected all or one of {}",
                    SUITES.join(", ")
                )));
            }
            let reports = run_suite(&suite, tol)?;
            write_json(out, &reports)?;
            let failed = reports.iter().filter(|r| !r.pass).count();
            eprintln!("{} of {} checks passed", reports.len() - failed, reports.len());
            if failed > 0 {
                return Err(Failure::ChecksFailed {
                    failed,
                    total: reports.len(),
                });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(1);
        }
    };
    match thread_count(std::env::var("HYPERBESSEL_THREADS").ok()) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: cannot start {n} worker threads: {e}");
                return ExitCode::from(1);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::ChecksFailed { failed, total }) => {
            eprintln!("error: {failed} of {total} checks failed");
            ExitCode::from(2)
        }
    }
}
