use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lpvssa::hankel::{block_count, DEFAULT_MAX_BLOCKS};
use lpvssa::io::{self, Signals, ThetaTable};
use lpvssa::linalg::{numeric_rank, DEFAULT_REL_TOL};
use lpvssa::realize::{self, DEFAULT_ISO_TOL};
use lpvssa::{reduce, sim, InitialState, LpvSsa, ModelOracle, SubMarkovOracle, TimeDomain};
use nalgebra::DMatrix;
use serde_json::{json, Value};

mod check;

#[derive(Parser)]
#[command(name = "lpvssa", version, about = "Realization theory for affine LPV state-space models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Dt,
    Ct,
}

impl From<DomainArg> for TimeDomain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Dt => TimeDomain::Discrete,
            DomainArg::Ct => TimeDomain::Continuous,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check dimensions, finiteness and the span condition of a model file
    Validate { model: PathBuf },
    /// Write the sub-Markov parameters of every word up to --max-len
    Markov {
        model: PathBuf,
        #[arg(long)]
        max_len: usize,
        /// Output file (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report size, singular values and rank of a finite Hankel matrix
    Hankel {
        /// Model file or theta table
        input: PathBuf,
        /// Row word bound (default: nx for models, max_len/2 for tables)
        #[arg(long)]
        n: Option<usize>,
        /// Column word bound (default: n)
        #[arg(long)]
        m: Option<usize>,
        /// Relative tolerance for the rank
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
        /// Also write the raw matrix to this file
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Refuse matrices with more blocks than this
        #[arg(long, default_value_t = DEFAULT_MAX_BLOCKS)]
        max_blocks: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Ho-Kalman realization from a model file or a theta table
    Realize {
        input: PathBuf,
        /// Word bound; uses H(n, n+1) (default: nx for models, (max_len-1)/2 for tables)
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
        /// Time domain of the result when the input is a theta table
        #[arg(long, value_enum, default_value_t = DomainArg::Dt)]
        time_domain: DomainArg,
        #[arg(long, default_value_t = DEFAULT_MAX_BLOCKS)]
        max_blocks: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reachability then observability reduction
    Minimize {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Kalman decomposition: transformed model, T and the block sizes
    Decompose {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recover T with T x = x' between two models; exit 1 if none fits
    Isomorph {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
        /// Largest accepted residual
        #[arg(long, default_value_t = DEFAULT_ISO_TOL)]
        iso_tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate a model on the signals of a signals file
    Simulate {
        model: PathBuf,
        signals: PathBuf,
        /// RK4 step for continuous-time models
        #[arg(long)]
        step: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the property suite on a model; exit 1 on any failure
    Check {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_ISO_TOL)]
        iso_tol: f64,
        /// Seed for the random simulation runs
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random simulation runs
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_BLOCKS)]
        max_blocks: usize,
        /// Print the report as JSON
        #[arg(long)]
        json: bool,
    },
}

/// An input problem; maps to exit code 2.
#[derive(Debug)]
struct InputError(String);

impl From<lpvssa::Error> for InputError {
    fn from(e: lpvssa::Error) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<ExitCode, InputError>;

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: lpvssa::Result<T>) -> Result<T, InputError> {
    r.map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// A model with its initial state; a missing `x0` is the zero state.
fn load_model(path: &Path) -> Result<(LpvSsa, InitialState), InputError> {
    let (model, x0) = in_file(path, io::parse_model(&read(path)?))?;
    let x0 = x0.unwrap_or_else(|| InitialState::zeros(model.nx()));
    Ok((model, x0))
}

enum Source {
    Model(LpvSsa, InitialState),
    Table(ThetaTable),
}

impl Source {
    fn load(path: &Path) -> Result<Source, InputError> {
        let text = read(path)?;
        let value: Value = in_file(path, serde_json::from_str(&text).map_err(Into::into))?;
        if value.get("records").is_some() {
            Ok(Source::Table(in_file(path, ThetaTable::parse(&text))?))
        } else {
            let (model, x0) = in_file(path, io::parse_model(&text))?;
            let x0 = x0.unwrap_or_else(|| InitialState::zeros(model.nx()));
            Ok(Source::Model(model, x0))
        }
    }

    fn oracle(&self) -> Box<dyn SubMarkovOracle + '_> {
        match self {
            Source::Model(m, x0) => Box::new(ModelOracle::new(m, x0)),
            Source::Table(t) => Box::new(t.clone()),
        }
    }
}

/// Writes to stdout; a closed pipe (`lpvssa ... | head`) is not an error.
fn stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), InputError> {
    match output {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| InputError(format!("{}: {e}", path.display()))),
        None => {
            stdout(&format!("{text}\n"));
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn rows(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn model_value(model: &LpvSsa, x0: &InitialState) -> Value {
    serde_json::from_str(&io::model_to_json(model, Some(x0))).expect("model JSON parses")
}

fn check_blocks(np: usize, n: usize, m: usize, max_blocks: usize) -> Result<(), InputError> {
    match block_count(np, n, m) {
        Some(c) if c <= max_blocks => Ok(()),
        Some(c) => Err(InputError(format!(
            "H({n}, {m}) has {c} blocks, above the limit of {max_blocks} (raise --max-blocks)"
        ))),
        None => Err(InputError(format!("H({n}, {m}) block count overflows"))),
    }
}

fn validate(path: &Path) -> CmdResult {
    let doc = in_file(path, io::parse_model_document(&read(path)?))?;
    let report = lpvssa::model::validate(&doc.parts);
    let mut errors = report.errors.clone();
    if let Some(x0) = &doc.x0 {
        if x0.len() != doc.parts.nx {
            errors.push(format!("x0: expected length {}, got {}", doc.parts.nx, x0.len()));
        }
    }
    let valid = report.is_valid() && errors.len() == report.errors.len();
    let text = pretty(&json!({
        "valid": valid,
        "errors": errors,
        "span": report.span,
        "d_is_zero": report.d_is_zero,
    }));
    stdout(&format!("{text}\n"));
    Ok(if valid { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn markov(path: &Path, max_len: usize, output: &Option<PathBuf>) -> CmdResult {
    let (model, x0) = load_model(path)?;
    let table = ThetaTable::from_oracle(&ModelOracle::new(&model, &x0), max_len)?;
    emit(output, &table.to_json())?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn hankel(
    path: &Path,
    n: Option<usize>,
    m: Option<usize>,
    tol: f64,
    dump: &Option<PathBuf>,
    max_blocks: usize,
    output: &Option<PathBuf>,
) -> CmdResult {
    let source = Source::load(path)?;
    let n = n.unwrap_or(match &source {
        Source::Model(model, _) => model.nx(),
        Source::Table(t) => t.max_len() / 2,
    });
    let m = m.unwrap_or(n);
    let oracle = source.oracle();
    check_blocks(oracle.dims().np, n, m, max_blocks)?;
    let h = lpvssa::build_hankel(oracle.as_ref(), n, m)?;
    let (rank, sv) = numeric_rank(&h.matrix, tol);
    if let Some(p) = dump {
        fs::write(p, io::write_hankel_dump(&h)).map_err(|e| InputError(format!("{}: {e}", p.display())))?;
    }
    emit(
        output,
        &pretty(&json!({
            "n": n,
            "m": m,
            "rows": h.matrix.nrows(),
            "cols": h.matrix.ncols(),
            "tol": tol,
            "rank": rank,
            "singular_values": sv,
        })),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn realize_cmd(
    path: &Path,
    n: Option<usize>,
    tol: f64,
    time_domain: DomainArg,
    max_blocks: usize,
    output: &Option<PathBuf>,
) -> CmdResult {
    let source = Source::load(path)?;
    let (n, td) = match &source {
        Source::Model(model, _) => (n.unwrap_or(model.nx()), model.time_domain()),
        Source::Table(t) => {
            if t.max_len() == 0 && n.is_none() {
                return Err(InputError("a theta table with max_len 0 cannot fill H(n, n+1)".into()));
            }
            (n.unwrap_or((t.max_len().max(1) - 1) / 2), time_domain.into())
        }
    };
    let oracle = source.oracle();
    check_blocks(oracle.dims().np, n, n + 1, max_blocks)?;
    let h = lpvssa::build_hankel(oracle.as_ref(), n, n + 1)?;
    let hk = realize::ho_kalman(&h, tol, td)?;
    eprintln!("rank H({n}, {}) = {}, rank H({n}, {n}) = {}", n + 1, hk.rank, hk.rank_square);
    if hk.rank_mismatch() {
        eprintln!("warning: the ranks differ, so n is too small for the realization to be exact");
    }
    let mut model = hk.model;
    // feedthrough and scheduling set do not enter the sub-Markov parameters,
    // so a model input passes them through unchanged
    if let Source::Model(src, _) = &source {
        model = model
            .with_feedthrough(src.d().to_vec())?
            .with_scheduling_set(src.scheduling_set().map(<[_]>::to_vec))?;
    }
    emit(output, &io::model_to_json(&model, Some(&hk.x0)))?;
    Ok(ExitCode::SUCCESS)
}

fn minimize_cmd(path: &Path, tol: f64, output: &Option<PathBuf>) -> CmdResult {
    let (model, x0) = load_model(path)?;
    let min = reduce::minimize(&model, &x0, tol)?;
    eprintln!("nx {} -> {}", model.nx(), min.model.nx());
    emit(output, &io::model_to_json(&min.model, Some(&min.x0)))?;
    Ok(ExitCode::SUCCESS)
}

fn decompose(path: &Path, tol: f64, output: &Option<PathBuf>) -> CmdResult {
    let (model, x0) = load_model(path)?;
    let kd = reduce::kalman_decompose(&model, &x0, tol)?;
    emit(
        output,
        &pretty(&json!({
            "nx": model.nx(),
            "r": kd.r,
            "r_m": kd.r_m,
            "zero_pattern_residual": kd.zero_pattern_residual,
            "T": rows(&kd.t),
            "model": model_value(&kd.hat_model, &kd.hat_x0),
            "minimal": model_value(&kd.minimal_part, &kd.minimal_x0),
        })),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn isomorph(first: &Path, second: &Path, tol: f64, iso_tol: f64, output: &Option<PathBuf>) -> CmdResult {
    let (m1, x1) = load_model(first)?;
    let (m2, x2) = load_model(second)?;
    let shape = |m: &LpvSsa| (m.np(), m.nx(), m.nu(), m.ny());
    if shape(&m1) != shape(&m2) {
        eprintln!(
            "not isomorphic: (np, nx, nu, ny) = {:?} vs {:?}",
            shape(&m1),
            shape(&m2)
        );
        return Ok(ExitCode::from(1));
    }
    let iso = realize::find_isomorphism(&m1, &x1, &m2, &x2, iso_tol, tol)?;
    emit(
        output,
        &pretty(&json!({
            "success": iso.success,
            "T": rows(&iso.t),
            "condition": if iso.condition.is_finite() { json!(iso.condition) } else { Value::Null },
            "residuals": iso.residuals,
        })),
    )?;
    Ok(if iso.success { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn simulate(model_path: &Path, signals_path: &Path, step: Option<f64>, output: &Option<PathBuf>) -> CmdResult {
    let (model, x0) = load_model(model_path)?;
    let signals = in_file(signals_path, io::parse_signals(&read(signals_path)?))?;
    let traj = match (signals, model.time_domain()) {
        (Signals::Discrete { u, p }, TimeDomain::Discrete) => sim::simulate_dt(&model, &x0, &u, &p)?,
        (Signals::Continuous { u, p }, TimeDomain::Continuous) => {
            let h = step.unwrap_or_else(|| sim::default_ct_step(u.t_end().min(p.t_end())));
            sim::simulate_ct(&model, &x0, &u, &p, h)?
        }
        (_, td) => {
            return Err(InputError(format!(
                "{}: signals do not match the {} model",
                signals_path.display(),
                td.as_str()
            )))
        }
    };
    emit(output, &io::trajectory_to_json(&traj))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Validate { model } => validate(&model),
        Command::Markov { model, max_len, output } => markov(&model, max_len, &output),
        Command::Hankel {
            input,
            n,
            m,
            tol,
            dump,
            max_blocks,
            output,
        } => hankel(&input, n, m, tol, &dump, max_blocks, &output),
        Command::Realize {
            input,
            n,
            tol,
            time_domain,
            max_blocks,
            output,
        } => realize_cmd(&input, n, tol, time_domain, max_blocks, &output),
        Command::Minimize { model, tol, output } => minimize_cmd(&model, tol, &output),
        Command::Decompose { model, tol, output } => decompose(&model, tol, &output),
        Command::Isomorph {
            first,
            second,
            tol,
            iso_tol,
            output,
        } => isomorph(&first, &second, tol, iso_tol, &output),
        Command::Simulate {
            model,
            signals,
            step,
            output,
        } => simulate(&model, &signals, step, &output),
        Command::Check {
            model,
            tol,
            iso_tol,
            seed,
            runs,
            max_blocks,
            json,
        } => {
            let (m, x0) = load_model(&model)?;
            let opts = check::Options {
                tol,
                iso_tol,
                seed,
                runs,
                max_blocks,
            };
            let report = check::run(&m, &x0, &opts)?;
            if json {
                stdout(&format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")));
            } else {
                stdout(&report.render());
            }
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
