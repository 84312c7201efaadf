//! Command-line front end: solve, sweep, interp, simulate and matrix.
//!
//! Output files are CSV with a `#`-prefixed header block. Numbers are written
//! with 17 significant digits so a solution file reloads bit-exactly.
//!
//! Exit codes: 0 converged, 1 not converged (or a numerical failure), 2 invalid
//! input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::continuation::{extract_extrema, sweep, BranchStatus, SweepConfig};
use crate::error::{Error, Result};
use crate::models::{
    circuit_outputs, circuit_system, linear_system, pendulum_system, CircuitParams,
    PendulumParams,
};
use crate::solver::{newton_solve, NewtonConfig, ResidualTolerance, SolveResult};
use crate::spectral::{trig_interpolate, DiffMatrix, NodeGrid};
use crate::system::{CollocationProblem, FlatState, PeriodicSystem};
use crate::warmstart::{
    guess_near_pi, rk4_guess, rk4_transient, TransientConfig, CIRCUIT_WARMUP_CYCLES,
    PENDULUM_WARMUP_CYCLES,
};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "limcycle", about = "Periodic steady states by trigonometric collocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for one periodic steady state and write its node values.
    Solve(SolveArgs),
    /// Continue a solution in one parameter and write per-point extrema.
    Sweep(SweepArgs),
    /// Resample a solution file on a dense phase grid.
    Interp(InterpArgs),
    /// Integrate the model with fixed-step RK4 and write the transient.
    Simulate(SimulateArgs),
    /// Write the differentiation matrix for N nodes.
    Matrix(MatrixArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// TOML file with `model`, `N`, `subharmonic`, `guess` and a table of
    /// parameters named after the model. Flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// pendulum | circuit | linear
    #[arg(long)]
    pub model: Option<String>,
    /// Odd number of collocation nodes.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Parameter overrides, `name=value`.
    #[arg(long = "param", num_args = 1.., action = clap::ArgAction::Append)]
    pub params: Vec<String>,
    #[arg(long)]
    pub subharmonic: Option<usize>,
    /// Initial state for RK4 transients, comma separated.
    #[arg(long)]
    pub init: Option<String>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// constant:v[,v..] | pi | sin:eps[,harmonic] | rk4:cycles | file:path
    #[arg(long)]
    pub guess: Option<String>,
    /// Absolute residual tolerance (default scales with the initial F).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// `name=start:end:step`
    #[arg(long)]
    pub sweep: String,
    /// 1-based component indices to report.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub component: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    pub oversample: usize,
    /// Disable step halving on failed points.
    #[arg(long)]
    pub fixed_step: bool,
}

#[derive(Debug, Args, Clone)]
pub struct InterpArgs {
    /// Solution file written by `solve`.
    #[arg(long)]
    pub solution: PathBuf,
    /// Number of dense phase points.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub cycles: usize,
    /// RK4 steps per response period.
    #[arg(long)]
    pub steps: usize,
    /// Write every k-th step only.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Debug, Args, Clone)]
pub struct MatrixArgs {
    #[arg(long = "N")]
    pub n: usize,
    /// Build from the general-node formula instead of the closed form.
    #[arg(long)]
    pub general: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Pendulum,
    Circuit,
    Linear,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pendulum" => Ok(Self::Pendulum),
            "circuit" => Ok(Self::Circuit),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Parse(format!("unknown model '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Pendulum => "pendulum",
            Self::Circuit => "circuit",
            Self::Linear => "linear",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Pendulum => 2,
            Self::Circuit => 3,
            Self::Linear => 1,
        }
    }

    /// Recognized parameter names, in output order.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Self::Pendulum => &["a", "b", "omega"],
            Self::Circuit => &[
                "R1", "R2", "R3", "R4", "C1", "C2", "L", "i_s", "eta", "T_abs", "A_m",
                "T_period",
            ],
            Self::Linear => &["p"],
        }
    }

    fn default_params(self) -> BTreeMap<String, f64> {
        let vals: Vec<f64> = match self {
            Self::Pendulum => {
                let p = PendulumParams::default();
                vec![p.a, p.b, p.omega]
            }
            Self::Circuit => {
                let p = CircuitParams::default();
                vec![
                    p.r1, p.r2, p.r3, p.r4, p.c1, p.c2, p.l, p.i_s, p.eta, p.t_abs, p.a_m,
                    p.t_period,
                ]
            }
            Self::Linear => vec![1.0],
        };
        self.parameter_names()
            .iter()
            .map(|s| s.to_string())
            .zip(vals)
            .collect()
    }

    fn default_guess(self) -> Guess {
        match self {
            Self::Pendulum => Guess::Pi,
            Self::Circuit => Guess::Rk4 {
                cycles: CIRCUIT_WARMUP_CYCLES,
            },
            Self::Linear => Guess::Constant(vec![0.0]),
        }
    }
}

/// Initial-guess descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum Guess {
    Constant(Vec<f64>),
    Pi,
    Sin { epsilon: f64, harmonic: usize },
    Rk4 { cycles: usize },
    File(PathBuf),
}

impl Guess {
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::Parse(format!("invalid guess '{s}'"));
        match kind {
            "pi" if arg.is_empty() => Ok(Self::Pi),
            "constant" => Ok(Self::Constant(parse_list(arg).map_err(|_| bad())?)),
            "sin" => {
                let v = parse_list(arg).map_err(|_| bad())?;
                match v.as_slice() {
                    [e] => Ok(Self::Sin {
                        epsilon: *e,
                        harmonic: 1,
                    }),
                    [e, h] if *h >= 1.0 && h.fract() == 0.0 => Ok(Self::Sin {
                        epsilon: *e,
                        harmonic: *h as usize,
                    }),
                    _ => Err(bad()),
                }
            }
            "rk4" => {
                let cycles: usize = if arg.is_empty() {
                    PENDULUM_WARMUP_CYCLES
                } else {
                    arg.parse().map_err(|_| bad())?
                };
                if cycles == 0 {
                    return Err(bad());
                }
                Ok(Self::Rk4 { cycles })
            }
            "file" if !arg.is_empty() => Ok(Self::File(PathBuf::from(arg))),
            _ => Err(bad()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Constant(v) => format!(
                "constant:{}",
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
            Self::Pi => "pi".into(),
            Self::Sin { epsilon, harmonic } => format!("sin:{epsilon},{harmonic}"),
            Self::Rk4 { cycles } => format!("rk4:{cycles}"),
            Self::File(p) => format!("file:{}", p.display()),
        }
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(',').map(|v| v.trim().parse::<f64>()).collect()
}

/// Fully resolved run configuration (config file merged with flags).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub n: usize,
    pub params: BTreeMap<String, f64>,
    pub subharmonic: usize,
    pub guess: Guess,
    pub init: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(args: &ModelArgs, guess: Option<&str>) -> Result<Self> {
        let file = match &args.config {
            Some(path) => Some(ConfigFile::load(path)?),
            None => None,
        };
        let model_name = args
            .model
            .clone()
            .or_else(|| file.as_ref().and_then(|f| f.model.clone()))
            .ok_or_else(|| Error::Parse("no model given (use --model or a config file)".into()))?;
        let model = ModelKind::parse(&model_name)?;
        let n = args
            .n
            .or_else(|| file.as_ref().and_then(|f| f.n))
            .unwrap_or(match model {
                ModelKind::Pendulum => 101,
                ModelKind::Circuit => 251,
                ModelKind::Linear => 3,
            });
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::Parse(format!("N must be odd and >= 3, got {n}")));
        }
        let subharmonic = args
            .subharmonic
            .or_else(|| file.as_ref().and_then(|f| f.subharmonic))
            .unwrap_or(1);
        if subharmonic == 0 {
            return Err(Error::Parse("subharmonic must be >= 1".into()));
        }

        let mut params = model.default_params();
        let mut set = |name: &str, value: f64| -> Result<()> {
            match params.get_mut(name) {
                Some(slot) => {
                    *slot = value;
                    Ok(())
                }
                None => Err(Error::Parse(format!(
                    "model {} has no parameter '{name}'",
                    model.name()
                ))),
            }
        };
        if let Some(f) = &file {
            if let Some(table) = f.sections.get(model.name()) {
                for (k, v) in table {
                    set(k, *v)?;
                }
            }
        }
        for kv in &args.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected name=value, got '{kv}'")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("bad value in '{kv}'")))?;
            set(k, v)?;
        }

        let guess = match guess.map(str::to_owned).or_else(|| file.as_ref().and_then(|f| f.guess.clone())) {
            Some(g) => Guess::parse(&g)?,
            None => model.default_guess(),
        };
        let init = match &args.init {
            Some(s) => {
                let v = parse_list(s).map_err(|_| Error::Parse(format!("bad --init '{s}'")))?;
                if v.len() != model.dim() {
                    return Err(Error::Parse(format!(
                        "--init needs {} values for model {}",
                        model.dim(),
                        model.name()
                    )));
                }
                Some(v)
            }
            None => None,
        };
        let out = args
            .out
            .clone()
            .or_else(|| file.as_ref().and_then(|f| f.out.clone()));
        let cfg = Self {
            model,
            n,
            params,
            subharmonic,
            guess,
            init,
            out,
        };
        cfg.system()?;
        Ok(cfg)
    }

    fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn pendulum_params(&self) -> PendulumParams {
        PendulumParams {
            a: self.param("a"),
            b: self.param("b"),
            omega: self.param("omega"),
        }
    }

    pub fn circuit_params(&self) -> CircuitParams {
        CircuitParams {
            r1: self.param("R1"),
            r2: self.param("R2"),
            r3: self.param("R3"),
            r4: self.param("R4"),
            c1: self.param("C1"),
            c2: self.param("C2"),
            l: self.param("L"),
            i_s: self.param("i_s"),
            eta: self.param("eta"),
            t_abs: self.param("T_abs"),
            a_m: self.param("A_m"),
            t_period: self.param("T_period"),
        }
    }

    pub fn system(&self) -> Result<PeriodicSystem> {
        let sys = match self.model {
            ModelKind::Pendulum => pendulum_system(&self.pendulum_params())?,
            ModelKind::Circuit => circuit_system(&self.circuit_params())?,
            ModelKind::Linear => linear_system(self.param("p"))?,
        };
        sys.with_subharmonic(self.subharmonic)
    }

    pub fn problem(&self) -> Result<CollocationProblem> {
        CollocationProblem::new(self.system()?, self.n)
    }

    /// Build the initial guess for `problem`.
    pub fn initial_guess(&self, problem: &CollocationProblem) -> Result<FlatState> {
        let (m, n) = (problem.dim(), problem.nodes());
        match &self.guess {
            Guess::Constant(v) => match v.len() {
                1 => Ok(FlatState::constant(&vec![v[0]; m], n)),
                len if len == m => Ok(FlatState::constant(v, n)),
                _ => Err(Error::Parse(format!("constant guess needs 1 or {m} values"))),
            },
            Guess::Pi | Guess::Sin { .. } => {
                if self.model != ModelKind::Pendulum {
                    return Err(Error::Parse("pi and sin guesses apply to the pendulum only".into()));
                }
                let (eps, h) = match self.guess {
                    Guess::Sin { epsilon, harmonic } => (epsilon, harmonic),
                    _ => (0.0, 1),
                };
                guess_near_pi(n, eps, h, problem.system().omega(), self.subharmonic)
            }
            Guess::Rk4 { cycles } => rk4_guess(
                problem.system(),
                problem.grid(),
                *cycles,
                self.init.clone().unwrap_or_else(|| vec![0.0; m]),
            ),
            Guess::File(path) => {
                let sol = SolutionFile::load(path)?;
                if sol.dim() != m {
                    return Err(Error::Parse(format!(
                        "guess file has {} components, model needs {m}",
                        sol.dim()
                    )));
                }
                sol.resample(problem.grid())
            }
        }
    }
}

#[derive(Debug, Default)]
struct ConfigFile {
    model: Option<String>,
    n: Option<usize>,
    subharmonic: Option<usize>,
    guess: Option<String>,
    out: Option<PathBuf>,
    sections: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ConfigFile {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(format!("config: {e}")))?;
        let mut cfg = Self::default();
        let as_usize = |k: &str, v: &toml::Value| {
            v.as_integer()
                .filter(|i| *i >= 0)
                .map(|i| i as usize)
                .ok_or_else(|| Error::Parse(format!("config: '{k}' must be a non-negative integer")))
        };
        let as_str = |k: &str, v: &toml::Value| {
            v.as_str()
                .map(str::to_owned)
                .ok_or_else(|| Error::Parse(format!("config: '{k}' must be a string")))
        };
        for (k, v) in &table {
            match (k.as_str(), v) {
                ("model", v) => cfg.model = Some(as_str(k, v)?),
                ("N", v) => cfg.n = Some(as_usize(k, v)?),
                ("subharmonic", v) => cfg.subharmonic = Some(as_usize(k, v)?),
                ("guess", v) => cfg.guess = Some(as_str(k, v)?),
                ("out", v) => cfg.out = Some(PathBuf::from(as_str(k, v)?)),
                (section, toml::Value::Table(t)) => {
                    let mut vals = BTreeMap::new();
                    for (pk, pv) in t {
                        let x = pv
                            .as_float()
                            .or_else(|| pv.as_integer().map(|i| i as f64))
                            .ok_or_else(|| {
                                Error::Parse(format!("config: {section}.{pk} must be a number"))
                            })?;
                        vals.insert(pk.clone(), x);
                    }
                    cfg.sections.insert(section.to_owned(), vals);
                }
                _ => return Err(Error::Parse(format!("config: unknown key '{k}'"))),
            }
        }
        Ok(cfg)
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Contents of a solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SolutionFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                if let Some((k, v)) = h.split_once('=') {
                    meta.insert(k.trim().to_owned(), v.trim().to_owned());
                }
            } else if columns.is_empty() {
                columns = line.split(',').map(|c| c.trim().to_owned()).collect();
            } else {
                let row = parse_list(line)
                    .map_err(|_| Error::Parse(format!("bad data row '{line}'")))?;
                if row.len() != columns.len() {
                    return Err(Error::Parse(format!("row has {} fields, expected {}", row.len(), columns.len())));
                }
                rows.push(row);
            }
        }
        if rows.is_empty() {
            return Err(Error::Parse("solution file has no data rows".into()));
        }
        Ok(Self {
            meta,
            columns,
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn meta_f64(&self, key: &str) -> Result<f64> {
        self.meta
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("solution file lacks numeric '{key}'")))
    }

    pub fn dim(&self) -> usize {
        self.columns.iter().filter(|c| c.starts_with('x')).count()
    }

    fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Parse(format!("solution file lacks column '{name}'")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Node values as a [`FlatState`] on the file's own grid.
    pub fn state(&self) -> Result<(NodeGrid, FlatState)> {
        let grid = NodeGrid::equispaced(self.rows.len())?;
        let table = (1..=self.dim())
            .map(|k| self.column(&format!("x{k}")))
            .collect::<Result<Vec<_>>>()?;
        Ok((grid, crate::system::flatten(&table)?))
    }

    /// Node values moved onto `grid` by trigonometric interpolation.
    pub fn resample(&self, grid: &NodeGrid) -> Result<FlatState> {
        let (own, x) = self.state()?;
        if own.size() == grid.size() {
            return Ok(x);
        }
        let table = (0..x.dim())
            .map(|k| {
                grid.nodes()
                    .iter()
                    .map(|t| trig_interpolate(&own, x.component(k), *t))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        crate::system::flatten(&table)
    }
}

fn header(cfg: &RunConfig, problem: &CollocationProblem, kind: &str) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# limcycle {kind}");
    let _ = writeln!(h, "# model = {}", cfg.model.name());
    for name in cfg.model.parameter_names() {
        let _ = writeln!(h, "# param.{name} = {}", num(cfg.params[*name]));
    }
    let _ = writeln!(h, "# N = {}", problem.nodes());
    let _ = writeln!(h, "# omega = {}", num(problem.system().omega()));
    let _ = writeln!(h, "# subharmonic = {}", problem.system().subharmonic());
    let _ = writeln!(h, "# guess = {}", cfg.guess.describe());
    h
}

/// Render a solved cycle as a solution file.
pub fn format_solution(
    cfg: &RunConfig,
    problem: &CollocationProblem,
    result: &SolveResult,
) -> Result<String> {
    let mut s = header(cfg, problem, "solution");
    let _ = writeln!(s, "# residual_norm = {}", num(result.residual_norm));
    let _ = writeln!(s, "# tolerance = {}", num(result.tol_residual));
    let _ = writeln!(s, "# iterations = {}", result.iterations);
    let _ = writeln!(s, "# converged = {}", result.converged);
    if !result.converged {
        let _ = writeln!(s, "# WARNING = Newton did not converge; best iterate written");
    }
    let m = problem.dim();
    let mut cols = vec!["phase".to_owned(), "time".to_owned()];
    cols.extend((1..=m).map(|k| format!("x{k}")));
    let circuit = cfg.model == ModelKind::Circuit;
    if circuit {
        cols.push("i_d".into());
        cols.push("V0".into());
    }
    let _ = writeln!(s, "{}", cols.join(","));
    let xdot = problem.derivative(&result.x)?;
    let cp = if circuit { cfg.circuit_params() } else { CircuitParams::default() };
    for j in 0..problem.nodes() {
        let mut row = vec![problem.grid().nodes()[j], problem.original_time(j)];
        let xj = result.x.node_state(j);
        row.extend_from_slice(&xj);
        if circuit {
            let (id, v0) = circuit_outputs(&xj, &xdot.node_state(j), &cp);
            row.push(id);
            row.push(v0);
        }
        let _ = writeln!(s, "{}", row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
    }
    Ok(s)
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn newton_config(args: &SolveArgs) -> Result<NewtonConfig> {
    let mut cfg = NewtonConfig::default();
    if let Some(t) = args.tol {
        cfg.tol_residual = ResidualTolerance::Absolute(t);
    }
    if let Some(m) = args.max_iter {
        cfg.max_iterations = m;
    }
    cfg.validate().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(cfg)
}

/// Invalid-input failures map to exit code 2, numerical ones to 1.
fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::InvalidArgument(_) | Error::Io(_) | Error::Shape { .. } => {
            EXIT_INVALID
        }
        _ => EXIT_NOT_CONVERGED,
    }
}

pub fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&args.model, args.guess.as_deref())?;
    let newton = newton_config(args)?;
    let problem = cfg.problem()?;
    let x0 = cfg.initial_guess(&problem)?;
    let result = newton_solve(&problem, &x0, &newton)?;
    let _ = writeln!(
        stderr,
        "residual_norm = {:e}, iterations = {}, converged = {}",
        result.residual_norm, result.iterations, result.converged
    );
    emit(&cfg.out, &format_solution(&cfg, &problem, &result)?, stdout)?;
    Ok(if result.converged {
        EXIT_CONVERGED
    } else {
        EXIT_NOT_CONVERGED
    })
}

/// Parse `name=start:end:step`.
pub fn parse_sweep_range(text: &str) -> Result<(String, f64, f64, f64)> {
    let bad = || Error::Parse(format!("sweep must be name=start:end:step, got '{text}'"));
    let (name, range) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<f64> = range
        .split(':')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !start.is_finite() || !end.is_finite() {
        return Err(Error::Parse(format!("sweep step must be positive in '{text}'")));
    }
    if start == end {
        return Err(Error::Parse(format!("empty sweep range in '{text}'")));
    }
    Ok((name.trim().to_owned(), start, end, step))
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&args.solve.model, args.solve.guess.as_deref())?;
    let newton = newton_config(&args.solve)?;
    let (name, start, end, step) = parse_sweep_range(&args.sweep)?;
    if !cfg.params.contains_key(&name) {
        return Err(Error::Parse(format!(
            "model {} has no parameter '{name}'",
            cfg.model.name()
        )));
    }
    let m = cfg.model.dim();
    if args.component.iter().any(|c| *c == 0 || *c > m) {
        return Err(Error::Parse(format!("components must lie in 1..={m}")));
    }
    if args.oversample < 4 {
        return Err(Error::Parse("oversample must be >= 4".into()));
    }
    let mut sweep_cfg = SweepConfig::new(name.clone(), start, end, step);
    sweep_cfg.adaptive = !args.fixed_step;

    let mut seed_cfg = cfg.clone();
    seed_cfg.params.insert(name.clone(), start);
    let x0 = seed_cfg.initial_guess(&seed_cfg.problem()?)?;
    let family = |p: f64| {
        let mut c = cfg.clone();
        c.params.insert(name.clone(), p);
        c.problem()
    };
    let branch = sweep(family, &x0, &sweep_cfg, &newton, cfg.guess.describe())?;

    let grid = NodeGrid::equispaced(cfg.n)?;
    let problem = seed_cfg.problem()?;
    let mut s = header(&seed_cfg, &problem, "sweep");
    let _ = writeln!(s, "# sweep = {}", args.sweep);
    match branch.status {
        BranchStatus::Completed => {
            let _ = writeln!(s, "# status = completed");
        }
        BranchStatus::Truncated {
            last_parameter,
            failed_at,
        } => {
            let _ = writeln!(
                s,
                "# status = truncated after {} (failed at {})",
                num(last_parameter),
                num(failed_at)
            );
        }
    }
    let _ = writeln!(s, "{name},component,max,min,iterations,converged");
    for point in &branch.points {
        for c in &args.component {
            let (mx, mn) = extract_extrema(&grid, &point.result.x, c - 1, args.oversample)?;
            let _ = writeln!(
                s,
                "{},{c},{},{},{},{}",
                num(point.parameter),
                num(mx),
                num(mn),
                point.result.iterations,
                point.result.converged
            );
        }
    }
    let _ = writeln!(stderr, "{} converged points, status {:?}", branch.points.len(), branch.status);
    emit(&cfg.out, &s, stdout)?;
    Ok(EXIT_CONVERGED)
}

pub fn cmd_interp(args: &InterpArgs, stdout: &mut dyn Write) -> Result<i32> {
    if args.points == 0 {
        return Err(Error::Parse("points must be positive".into()));
    }
    let sol = SolutionFile::load(&args.solution)?;
    let (grid, x) = sol.state()?;
    let omega = sol.meta_f64("omega")?;
    let s = sol.meta_f64("subharmonic").unwrap_or(1.0);
    let mut out = String::new();
    let _ = writeln!(out, "# limcycle interpolation");
    let _ = writeln!(out, "# source = {}", args.solution.display());
    let _ = writeln!(out, "# N = {}", grid.size());
    let _ = writeln!(out, "# points = {}", args.points);
    let mut cols = vec!["phase".to_owned(), "time".to_owned()];
    cols.extend((1..=x.dim()).map(|k| format!("x{k}")));
    let _ = writeln!(out, "{}", cols.join(","));
    for i in 1..=args.points {
        let u = if i == args.points {
            std::f64::consts::PI
        } else {
            -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / args.points as f64
        };
        let mut row = vec![u, s * u / omega];
        for k in 0..x.dim() {
            row.push(trig_interpolate(&grid, x.component(k), u)?);
        }
        let _ = writeln!(out, "{}", row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
    }
    emit(&args.out, &out, stdout)?;
    Ok(EXIT_CONVERGED)
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&args.model, None)?;
    if args.stride == 0 {
        return Err(Error::Parse("stride must be positive".into()));
    }
    let system = cfg.system()?;
    let m = system.dim();
    let tcfg = TransientConfig {
        cycles: args.cycles,
        steps_per_cycle: args.steps,
        initial_state: cfg.init.clone().unwrap_or_else(|| vec![0.0; m]),
    };
    tcfg.validate(m).map_err(|e| Error::Parse(e.to_string()))?;
    let tr = rk4_transient(&system, &tcfg)?;
    let problem = CollocationProblem::new(system.clone(), cfg.n)?;
    let mut s = header(&cfg, &problem, "transient");
    let _ = writeln!(s, "# cycles = {}", args.cycles);
    let _ = writeln!(s, "# steps_per_cycle = {}", args.steps);
    let mut cols = vec!["time".to_owned(), "phase".to_owned()];
    cols.extend((1..=m).map(|k| format!("x{k}")));
    let circuit = cfg.model == ModelKind::Circuit;
    if circuit {
        cols.push("i_d".into());
        cols.push("V0".into());
    }
    let _ = writeln!(s, "{}", cols.join(","));
    let cp = if circuit { cfg.circuit_params() } else { CircuitParams::default() };
    for i in (0..tr.len()).step_by(args.stride) {
        let phase = crate::spectral::wrap_phase(system.omega() * tr.times[i]);
        let x = tr.state(i);
        let mut row = vec![tr.times[i], phase];
        row.extend_from_slice(x);
        if circuit {
            let f = system.rhs(x, phase)?;
            let (id, v0) = circuit_outputs(x, &f, &cp);
            row.push(id);
            row.push(v0);
        }
        let _ = writeln!(s, "{}", row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
    }
    emit(&cfg.out, &s, stdout)?;
    Ok(EXIT_CONVERGED)
}

pub fn cmd_matrix(args: &MatrixArgs, stdout: &mut dyn Write) -> Result<i32> {
    let d = if args.general {
        DiffMatrix::general(&NodeGrid::equispaced(args.n)?)?
    } else {
        DiffMatrix::equispaced(args.n)?
    };
    let mut s = String::new();
    let _ = writeln!(s, "# limcycle differentiation matrix");
    let _ = writeln!(s, "# N = {}", args.n);
    let _ = writeln!(s, "# kind = {:?}", d.kind());
    let _ = writeln!(
        s,
        "# nodes = {}",
        d.grid().nodes().iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
    );
    for j in 0..d.order() {
        let row: Vec<String> = (0..d.order()).map(|k| num(d.get(j, k))).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    emit(&args.out, &s, stdout)?;
    Ok(EXIT_CONVERGED)
}

/// Parse arguments and run one command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_CONVERGED };
        }
    };
    let res = match &cli.command {
        Command::Solve(a) => cmd_solve(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Interp(a) => cmd_interp(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Matrix(a) => cmd_matrix(a, stdout),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code_for(&e)
        }
    }
}
