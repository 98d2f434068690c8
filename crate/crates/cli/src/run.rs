//! Request validation and solver orchestration.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use optctl_core::problems::parse_override;
use optctl_core::sweep::check_callbacks;
use optctl_core::{
    registry_lookup, solve_direct, sweep_solve, DirectConfig, DirectResult, OcProblem, PmpCallbacks, RegistryError,
    SolveError, SweepConfig, SweepResult,
};

use crate::args::{Method, SolveArgs};
use crate::output::{direct_path, write_csv, Table};
use crate::report::{CallbackCheck, Comparison, DirectRecord, Override, RunReport, SweepRecord};

const CALLBACK_SAMPLES: usize = 100;

/// A validated `solve` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub problem: String,
    pub method: Method,
    pub n_intervals: usize,
    pub tol: f64,
    pub grad_tol: f64,
    pub max_iter: Option<usize>,
    pub relaxation: f64,
    pub seed: u64,
    pub overrides: Vec<(String, f64)>,
    pub out: PathBuf,
    pub report: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Registry(RegistryError),
    Io { path: PathBuf, source: std::io::Error },
    Solve(SolveError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Registry(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Solve(e) => write!(f, "solver failed: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// 1 for usage and IO problems, 2 when a solver itself fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve(SolveError::Config(_)) => 1,
            CliError::Solve(_) => 2,
            _ => 1,
        }
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        CliError::Registry(e)
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Solve(e)
    }
}

impl RunRequest {
    pub fn from_args(a: SolveArgs) -> Result<Self, CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if a.steps < 2 {
            return usage(format!("--steps must be at least 2, got {}", a.steps));
        }
        if a.tol.is_nan() || a.tol <= 0.0 {
            return usage(format!("--tol must be positive, got {}", a.tol));
        }
        if a.grad_tol.is_nan() || a.grad_tol <= 0.0 {
            return usage(format!("--grad-tol must be positive, got {}", a.grad_tol));
        }
        if !(a.relax > 0.0 && a.relax <= 1.0) {
            return usage(format!("--relax must lie in (0, 1], got {}", a.relax));
        }
        if a.max_iter == Some(0) {
            return usage("--max-iter must be at least 1".into());
        }
        let overrides = a.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            problem: a.problem,
            method: a.method,
            n_intervals: a.steps,
            tol: a.tol,
            grad_tol: a.grad_tol,
            max_iter: a.max_iter,
            relaxation: a.relax,
            seed: a.seed,
            overrides,
            out: a.out,
            report: a.report,
        })
    }

    fn sweep_config(&self) -> SweepConfig {
        let d = SweepConfig::default();
        SweepConfig {
            n_intervals: self.n_intervals,
            tol: self.tol,
            relaxation: self.relaxation,
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            initial_control: None,
        }
    }

    fn direct_config(&self) -> DirectConfig {
        let d = DirectConfig::default();
        DirectConfig {
            n_intervals: self.n_intervals,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            ..d
        }
    }
}

/// Solver outputs of one run, before anything is written.
pub struct Outcome {
    pub report: RunReport,
    pub sweep: Option<SweepResult>,
    pub direct: Option<DirectResult>,
    n_states: usize,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn timed_sweep(p: &OcProblem, cb: &PmpCallbacks, cfg: &SweepConfig) -> Result<(SweepResult, f64), SolveError> {
    let start = Instant::now();
    let r = sweep_solve(p, cb, cfg)?;
    Ok((r, elapsed_ms(start)))
}

fn timed_direct(p: &OcProblem, cfg: &DirectConfig) -> Result<(DirectResult, f64), SolveError> {
    let start = Instant::now();
    let r = solve_direct(p, cfg)?;
    Ok((r, elapsed_ms(start)))
}

/// Runs the requested solvers. `--method both` runs them on two threads.
pub fn solve(req: &RunRequest) -> Result<Outcome, CliError> {
    let spec = registry_lookup(&req.problem)?;
    let (problem, callbacks) = spec.build(&req.overrides)?;
    let cb = match (&callbacks, req.method.runs_sweep()) {
        (Some(cb), _) => Some(cb),
        (None, false) => None,
        (None, true) => {
            return Err(CliError::Usage(format!(
                "problem '{}' has no Pontryagin callbacks; use --method direct",
                req.problem
            )))
        }
    };
    let (sweep_cfg, direct_cfg) = (req.sweep_config(), req.direct_config());

    let (sweep, direct) = std::thread::scope(|s| {
        let direct = req
            .method
            .runs_direct()
            .then(|| s.spawn(|| timed_direct(&problem, &direct_cfg)));
        let sweep = cb
            .filter(|_| req.method.runs_sweep())
            .map(|cb| timed_sweep(&problem, cb, &sweep_cfg));
        let direct = direct.map(|h| h.join().expect("direct solver thread panicked"));
        (sweep, direct)
    });
    let sweep = sweep.transpose()?;
    let direct = direct.transpose()?;

    let callback_check = match (&sweep, cb) {
        (Some(_), Some(cb)) => {
            let c = check_callbacks(&problem, cb, CALLBACK_SAMPLES, req.seed);
            Some(CallbackCheck {
                samples: c.samples,
                adjoint_rel_err: c.adjoint_rel_err,
                stationarity: c.stationarity,
            })
        }
        _ => None,
    };
    let comparison = match (&sweep, &direct) {
        (Some((s, _)), Some((d, _))) => Some(Comparison {
            objective_rel_diff: (d.objective - s.objective).abs() / s.objective.abs().max(f64::MIN_POSITIVE),
            control_max_abs_diff: s.control.values.max_abs_distance(&d.control.values),
        }),
        _ => None,
    };

    let mut trajectories = Vec::new();
    if sweep.is_some() {
        trajectories.push(req.out.display().to_string());
    }
    if direct.is_some() {
        let path = if sweep.is_some() {
            direct_path(&req.out)
        } else {
            req.out.clone()
        };
        trajectories.push(path.display().to_string());
    }

    let converged = sweep.as_ref().is_none_or(|(s, _)| s.converged) && direct.as_ref().is_none_or(|(d, _)| d.converged);
    let report = RunReport {
        problem: req.problem.clone(),
        method: req.method,
        n_intervals: req.n_intervals,
        overrides: req
            .overrides
            .iter()
            .map(|(k, v)| Override {
                key: k.clone(),
                value: *v,
            })
            .collect(),
        seed: req.seed,
        converged,
        sweep: sweep.as_ref().map(|(s, ms)| SweepRecord {
            objective: s.objective,
            iterations: s.iterations,
            converged: s.converged,
            pmp_residual: s.pmp_residual,
            wall_ms: *ms,
        }),
        direct: direct.as_ref().map(|(d, ms)| DirectRecord {
            objective: d.objective,
            iterations: d.iterations,
            converged: d.converged,
            projected_grad_norm: d.projected_grad_norm,
            line_search_failed: d.line_search_failed,
            wall_ms: *ms,
        }),
        comparison,
        callback_check,
        trajectories,
    };
    Ok(Outcome {
        report,
        sweep: sweep.map(|(s, _)| s),
        direct: direct.map(|(d, _)| d),
        n_states: problem.n_states(),
    })
}

/// Writes the trajectory CSV file(s) and the report.
pub fn write_outputs(req: &RunRequest, o: &Outcome) -> Result<(), CliError> {
    let io = |path: &PathBuf| {
        let path = path.clone();
        move |source| CliError::Io { path, source }
    };
    let mut paths = o.report.trajectories.iter().map(PathBuf::from);
    if let Some(s) = &o.sweep {
        let path = paths.next().expect("sweep path");
        let t = Table {
            grid: &s.grid,
            states: &s.states,
            n_states: o.n_states,
            adjoints: Some(&s.adjoints),
            control: &s.control,
        };
        write_csv(&path, &t).map_err(io(&path))?;
    }
    if let Some(d) = &o.direct {
        let path = paths.next().expect("direct path");
        let t = Table {
            grid: &d.grid,
            states: &d.states,
            n_states: o.n_states,
            adjoints: None,
            control: &d.control,
        };
        write_csv(&path, &t).map_err(io(&path))?;
    }
    std::fs::write(&req.report, o.report.to_json()).map_err(io(&req.report))
}

/// Full `solve` flow. Returns the process exit code.
pub fn run(req: &RunRequest) -> Result<i32, CliError> {
    let o = solve(req)?;
    write_outputs(req, &o)?;
    if let Some(s) = &o.report.sweep {
        println!(
            "sweep:  J = {:.10e}  iterations = {}  converged = {}",
            s.objective, s.iterations, s.converged
        );
    }
    if let Some(d) = &o.report.direct {
        println!(
            "direct: J = {:.10e}  iterations = {}  converged = {}",
            d.objective, d.iterations, d.converged
        );
    }
    if let Some(c) = &o.report.comparison {
        println!("relative objective difference = {:.3e}", c.objective_rel_diff);
    }
    Ok(if o.report.converged { 0 } else { 2 })
}
