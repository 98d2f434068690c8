//! Forward-backward sweep for Pontryagin-type optimality systems.
//!
//! Each iteration integrates the state forward with RK4, the adjoint backward
//! from `lambda(tf) = 0`, and replaces the control by a relaxed version of
//! the clipped pointwise minimizer of the Hamiltonian.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ProblemError, SolveError};
use crate::grid::{AdjointTrajectory, ControlGrid, NodeValues, StateTrajectory, TimeGrid};
use crate::integrators::{rk4_backward, rk4_forward};
use crate::problem::{fd_step, OcProblem, Sense};

pub use crate::problems::rubella_callbacks;

pub type HamiltonianFn = Arc<dyn Fn(f64, &[f64], &[f64], &[f64]) -> f64 + Send + Sync>;
/// `(t, x, u, lambda, out)`.
pub type AdjointRhsFn = Arc<dyn Fn(f64, &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;
/// `(t, x, lambda, out)`: writes the unclipped stationary control.
pub type ControlUpdateFn = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Analytic optimality system of a problem: the Hamiltonian
/// `H = f + lambda . g`, the adjoint right-hand side `-dH/dx`, and the
/// solution of `dH/du = 0`.
#[derive(Clone)]
pub struct PmpCallbacks {
    pub hamiltonian: HamiltonianFn,
    pub adjoint_rhs: AdjointRhsFn,
    pub control_update: ControlUpdateFn,
}

impl fmt::Debug for PmpCallbacks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PmpCallbacks").finish_non_exhaustive()
    }
}

impl PmpCallbacks {
    pub fn new<H, A, C>(hamiltonian: H, adjoint_rhs: A, control_update: C) -> Self
    where
        H: Fn(f64, &[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
        A: Fn(f64, &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        C: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            hamiltonian: Arc::new(hamiltonian),
            adjoint_rhs: Arc::new(adjoint_rhs),
            control_update: Arc::new(control_update),
        }
    }

    /// Callbacks for the sense-negated problem: with `mu = -lambda`,
    /// `H'(mu) = -H(-mu)`, `mu' = -rhs(-mu)`, `u'(mu) = u(-mu)`.
    pub fn negate_sense(&self) -> Self {
        let h = self.hamiltonian.clone();
        let rhs = self.adjoint_rhs.clone();
        let cu = self.control_update.clone();
        Self::new(
            move |t, x, u, mu| {
                let lam: Vec<f64> = mu.iter().map(|v| -v).collect();
                -h(t, x, u, &lam)
            },
            move |t, x, u, mu, out| {
                let lam: Vec<f64> = mu.iter().map(|v| -v).collect();
                rhs(t, x, u, &lam, out);
                out.iter_mut().for_each(|o| *o = -*o);
            },
            move |t, x, mu, out| {
                let lam: Vec<f64> = mu.iter().map(|v| -v).collect();
                cu(t, x, &lam, out);
            },
        )
    }

    /// `dH/du` by central differences.
    pub fn hamiltonian_du(&self, t: f64, x: &[f64], u: &[f64], lambda: &[f64], out: &mut [f64]) {
        let mut up = u.to_vec();
        for (k, o) in out.iter_mut().enumerate() {
            let step = fd_step(u[k]);
            up[k] = u[k] + step;
            let hp = (self.hamiltonian)(t, x, &up, lambda);
            up[k] = u[k] - step;
            let hm = (self.hamiltonian)(t, x, &up, lambda);
            up[k] = u[k];
            *o = (hp - hm) / (2.0 * step);
        }
    }

    /// `dH/dx` by central differences.
    pub fn hamiltonian_dx(&self, t: f64, x: &[f64], u: &[f64], lambda: &[f64], out: &mut [f64]) {
        let mut xp = x.to_vec();
        for (k, o) in out.iter_mut().enumerate() {
            let step = fd_step(x[k]);
            xp[k] = x[k] + step;
            let hp = (self.hamiltonian)(t, &xp, u, lambda);
            xp[k] = x[k] - step;
            let hm = (self.hamiltonian)(t, &xp, u, lambda);
            xp[k] = x[k];
            *o = (hp - hm) / (2.0 * step);
        }
    }
}

/// Componentwise `median(lower, u, upper)`.
pub fn clip_control(u_tilde: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>, ProblemError> {
    if lower.len() != u_tilde.len() || upper.len() != u_tilde.len() {
        return Err(ProblemError::DimensionMismatch {
            what: "control bounds",
            expected: u_tilde.len(),
            actual: lower.len().min(upper.len()),
        });
    }
    Ok(u_tilde
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(u, (a, b))| u.max(*a).min(*b))
        .collect())
}

fn clip_in_place(u: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, a), b) in u.iter_mut().zip(lower).zip(upper) {
        *v = v.max(*a).min(*b);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_intervals: usize,
    /// Relative convergence tolerance.
    pub tol: f64,
    /// Weight of the new characterization in the control update.
    pub relaxation: f64,
    pub max_iter: usize,
    /// Defaults to `u = 0` (clipped into the control box).
    pub initial_control: Option<ControlGrid>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_intervals: 3000,
            tol: 1e-3,
            relaxation: 0.5,
            max_iter: 500,
            initial_control: None,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<(), SolveError> {
        if self.n_intervals == 0 {
            return Err(SolveError::Config("n_intervals must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(SolveError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(SolveError::Config(format!(
                "relaxation must lie in (0, 1], got {}",
                self.relaxation
            )));
        }
        if self.max_iter == 0 {
            return Err(SolveError::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: TimeGrid,
    pub states: StateTrajectory,
    pub adjoints: AdjointTrajectory,
    pub control: ControlGrid,
    /// Objective in the problem's own sense.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max `|dH/du|` over nodes where the control is strictly inside its box.
    pub pmp_residual: f64,
}

/// `tol * sum|v| - sum|v - v_prev| >= 0`.
fn close_enough(tol: f64, v: &NodeValues, prev: &NodeValues) -> bool {
    tol * v.l1_norm() - v.l1_distance(prev) >= 0.0
}

/// Forward-backward sweep. Maximization problems are solved through their
/// negation; the returned objective and adjoints are in the caller's sense.
pub fn sweep_solve(p: &OcProblem, cb: &PmpCallbacks, cfg: &SweepConfig) -> Result<SweepResult, SolveError> {
    if p.sense() == Sense::Maximize {
        let mut r = sweep_minimize(&p.negate_sense(), &cb.negate_sense(), cfg)?;
        r.objective = -r.objective;
        let flipped: Vec<f64> = r.adjoints.values.as_flat().iter().map(|v| -v).collect();
        r.adjoints.values = NodeValues::from_flat(r.adjoints.values.width(), flipped).expect("same shape");
        return Ok(r);
    }
    sweep_minimize(p, cb, cfg)
}

fn sweep_minimize(p: &OcProblem, cb: &PmpCallbacks, cfg: &SweepConfig) -> Result<SweepResult, SolveError> {
    cfg.validate()?;
    let grid = p
        .grid(cfg.n_intervals)
        .ok_or_else(|| SolveError::Config("invalid grid".into()))?;
    let n = p.n_states();
    let m = p.n_controls();
    let (lower, upper) = (p.control_lower(), p.control_upper());
    let omega = cfg.relaxation;

    let mut control = match &cfg.initial_control {
        Some(u0) => {
            if u0.values.rows() != grid.n_nodes() || u0.n_controls() != m {
                return Err(ProblemError::DimensionMismatch {
                    what: "initial control",
                    expected: grid.n_nodes() * m,
                    actual: u0.values.rows() * u0.n_controls(),
                }
                .into());
            }
            u0.clone()
        }
        None => ControlGrid::zeros(&grid, m),
    };
    for i in 0..grid.n_nodes() {
        clip_in_place(control.values.row_mut(i), lower, upper);
    }

    let lambda_tf = vec![0.0; n];
    let dynamics = |t: f64, x: &[f64], u: &[f64], out: &mut [f64]| p.dynamics(t, x, u, out);
    let adjoint = |t: f64, x: &[f64], u: &[f64], l: &[f64], out: &mut [f64]| (cb.adjoint_rhs)(t, x, u, l, out);

    let mut x_prev = NodeValues::zeros(grid.n_nodes(), n);
    let mut l_prev = NodeValues::zeros(grid.n_nodes(), n);
    let mut u_tilde = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        let states = rk4_forward(dynamics, p.x0(), &control, &grid)?;
        let adjoints = rk4_backward(adjoint, &lambda_tf, &states, &control, &grid)?;

        let mut next = control.clone();
        for i in 0..grid.n_nodes() {
            (cb.control_update)(grid.node(i), states.row(i), adjoints.row(i), &mut u_tilde);
            clip_in_place(&mut u_tilde, lower, upper);
            let row = next.values.row_mut(i);
            for k in 0..m {
                row[k] = omega * u_tilde[k] + (1.0 - omega) * row[k];
            }
            clip_in_place(row, lower, upper);
        }
        if next.values.first_non_finite_row().is_some() {
            return Err(SolveError::NonFinite("control update"));
        }

        converged = close_enough(cfg.tol, &next.values, &control.values)
            && close_enough(cfg.tol, &states.values, &x_prev)
            && close_enough(cfg.tol, &adjoints.values, &l_prev);
        control = next;
        x_prev = states.values;
        l_prev = adjoints.values;
        if converged {
            break;
        }
    }

    // Re-solve at the returned control so states, adjoints and objective
    // describe the same iterate.
    let states = rk4_forward(dynamics, p.x0(), &control, &grid)?;
    let adjoints = rk4_backward(adjoint, &lambda_tf, &states, &control, &grid)?;
    let objective = p.evaluate_objective(&states, &control, &grid)?;
    let pmp_residual = pmp_diagnostics(p, cb, &grid, &states, &adjoints, &control).interior_residual;

    Ok(SweepResult {
        grid,
        states,
        adjoints,
        control,
        objective,
        iterations,
        converged,
        pmp_residual,
    })
}

/// First-order optimality diagnostics of a discrete solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmpDiagnostics {
    /// Max `|dH/du|` over components strictly inside the box.
    pub interior_residual: f64,
    pub interior_nodes: usize,
    /// Components at a bound where the sign of `dH/du` contradicts the
    /// minimization case split (`dH/du >= 0` at the lower bound, `<= 0` at
    /// the upper bound).
    pub bound_sign_violations: usize,
    /// Most negative `dH/du` at a lower bound / most positive at an upper
    /// bound, zero if none.
    pub worst_bound_violation: f64,
}

/// Evaluates the minimization optimality conditions node by node.
pub fn pmp_diagnostics(
    p: &OcProblem,
    cb: &PmpCallbacks,
    grid: &TimeGrid,
    states: &StateTrajectory,
    adjoints: &AdjointTrajectory,
    control: &ControlGrid,
) -> PmpDiagnostics {
    let m = p.n_controls();
    let (lower, upper) = (p.control_lower(), p.control_upper());
    let mut hu = vec![0.0; m];
    let mut d = PmpDiagnostics {
        interior_residual: 0.0,
        interior_nodes: 0,
        bound_sign_violations: 0,
        worst_bound_violation: 0.0,
    };
    for i in 0..grid.n_nodes() {
        let u = control.row(i);
        cb.hamiltonian_du(grid.node(i), states.row(i), u, adjoints.row(i), &mut hu);
        for k in 0..m {
            if lower[k] < u[k] && u[k] < upper[k] {
                d.interior_nodes += 1;
                d.interior_residual = d.interior_residual.max(hu[k].abs());
            } else {
                let violation = if u[k] <= lower[k] {
                    (-hu[k]).max(0.0)
                } else {
                    hu[k].max(0.0)
                };
                if violation > 0.0 {
                    d.bound_sign_violations += 1;
                    d.worst_bound_violation = d.worst_bound_violation.max(violation);
                }
            }
        }
    }
    d
}

/// Sampled agreement between the callbacks and their Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallbackConsistency {
    pub samples: usize,
    /// Max over samples of `|rhs + dH/dx|_inf / max(1, |dH/dx|_inf)`.
    pub adjoint_rel_err: f64,
    /// Max over samples of `|dH/du|_inf / max(1, |H|)` at the stationary
    /// control.
    pub stationarity: f64,
}

/// Compares `adjoint_rhs` with `-dH/dx` and checks `dH/du = 0` at
/// `control_update`, both by central differences, at `samples` seeded
/// random points. States are drawn around `x0`, controls inside the box
/// (or `[-1, 1]` where unbounded), adjoints from `[-1, 1]`.
pub fn check_callbacks(p: &OcProblem, cb: &PmpCallbacks, samples: usize, seed: u64) -> CallbackConsistency {
    let n = p.n_states();
    let m = p.n_controls();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hx = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut hu = vec![0.0; m];
    let mut u_tilde = vec![0.0; m];
    let mut out = CallbackConsistency {
        samples,
        adjoint_rel_err: 0.0,
        stationarity: 0.0,
    };
    for _ in 0..samples {
        let t = rng.random_range(p.t0()..=p.tf());
        let x: Vec<f64> = p
            .x0()
            .iter()
            .map(|x0| x0 + rng.random_range(-1.0..=1.0) * x0.abs().max(1.0))
            .collect();
        let u: Vec<f64> = p
            .control_lower()
            .iter()
            .zip(p.control_upper())
            .map(|(a, b)| {
                let (a, b) = if a.is_finite() && b.is_finite() {
                    (*a, *b)
                } else {
                    (-1.0, 1.0)
                };
                if a < b {
                    rng.random_range(a..=b)
                } else {
                    a
                }
            })
            .collect();
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();

        cb.hamiltonian_dx(t, &x, &u, &lambda, &mut hx);
        (cb.adjoint_rhs)(t, &x, &u, &lambda, &mut rhs);
        let scale = hx.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
        let err = rhs.iter().zip(&hx).fold(0.0_f64, |e, (r, g)| e.max((r + g).abs()));
        out.adjoint_rel_err = out.adjoint_rel_err.max(err / scale);

        (cb.control_update)(t, &x, &lambda, &mut u_tilde);
        cb.hamiltonian_du(t, &x, &u_tilde, &lambda, &mut hu);
        let h_scale = (cb.hamiltonian)(t, &x, &u_tilde, &lambda).abs().max(1.0);
        let s = hu.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        out.stationarity = out.stationarity.max(s / h_scale);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_interior_and_bounds() {
        assert_eq!(clip_control(&[0.5], &[0.0], &[0.9]).unwrap(), vec![0.5]);
        assert_eq!(clip_control(&[1.7], &[0.0], &[0.9]).unwrap(), vec![0.9]);
        assert_eq!(clip_control(&[-0.3], &[0.0], &[0.9]).unwrap(), vec![0.0]);
        assert!(clip_control(&[0.0, 1.0], &[0.0], &[1.0]).is_err());
    }

    fn quadratic() -> (OcProblem, PmpCallbacks) {
        let p = OcProblem::builder(1, 1)
            .horizon(0.0, 1.0)
            .dynamics(|_, _, u, out| out[0] = u[0])
            .running_cost(|_, _, u| u[0] * u[0])
            .control_bounds(vec![-1.0], vec![1.0])
            .build()
            .unwrap();
        let cb = PmpCallbacks::new(
            |_, _, u, l| u[0] * u[0] + l[0] * u[0],
            |_, _, _, _, out| out[0] = 0.0,
            |_, _, l, out| out[0] = -l[0] / 2.0,
        );
        (p, cb)
    }

    #[test]
    fn stationary_problem_converges_immediately() {
        let (p, cb) = quadratic();
        let cfg = SweepConfig {
            n_intervals: 50,
            ..SweepConfig::default()
        };
        let r = sweep_solve(&p, &cb, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
        assert_eq!(r.objective, 0.0);
        assert!(r.control.values.as_flat().iter().all(|u| *u == 0.0));
    }

    #[test]
    fn initial_control_outside_box_is_clipped() {
        let (p, cb) = quadratic();
        let g = p.grid(10).unwrap();
        let cfg = SweepConfig {
            n_intervals: 10,
            max_iter: 1,
            initial_control: Some(ControlGrid::constant(&g, &[7.0])),
            ..SweepConfig::default()
        };
        let r = sweep_solve(&p, &cb, &cfg).unwrap();
        assert!(r.control.within_bounds(p.control_lower(), p.control_upper()));
        assert_eq!(r.iterations, 1);
        assert!(!r.converged);
        assert_eq!(r.control.row(0), &[0.5]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (p, cb) = quadratic();
        for cfg in [
            SweepConfig {
                tol: 0.0,
                ..SweepConfig::default()
            },
            SweepConfig {
                relaxation: 0.0,
                ..SweepConfig::default()
            },
            SweepConfig {
                relaxation: 1.5,
                ..SweepConfig::default()
            },
            SweepConfig {
                max_iter: 0,
                ..SweepConfig::default()
            },
        ] {
            assert!(matches!(sweep_solve(&p, &cb, &cfg), Err(SolveError::Config(_))));
        }
    }

    #[test]
    fn consistency_check_flags_wrong_adjoint() {
        let (p, good) = quadratic();
        let c = check_callbacks(&p, &good, 20, 7);
        assert!(c.adjoint_rel_err < 1e-8 && c.stationarity < 1e-8, "{c:?}");
        let bad = PmpCallbacks::new(
            |_, x, u, l| u[0] * u[0] + l[0] * u[0] + x[0] * x[0],
            |_, _, _, _, out| out[0] = 0.0,
            |_, _, l, out| out[0] = -l[0],
        );
        let c = check_callbacks(&p, &bad, 20, 7);
        assert!(c.adjoint_rel_err > 1e-3 && c.stationarity > 1e-3, "{c:?}");
    }

    #[test]
    fn negated_callbacks_are_an_involution() {
        let (_, cb) = quadratic();
        let twice = cb.negate_sense().negate_sense();
        let (x, u, l) = ([0.3], [0.2], [-0.7]);
        assert_eq!((cb.hamiltonian)(0.0, &x, &u, &l), (twice.hamiltonian)(0.0, &x, &u, &l));
        let mut a = [0.0];
        let mut b = [0.0];
        (cb.control_update)(0.0, &x, &l, &mut a);
        (twice.control_update)(0.0, &x, &l, &mut b);
        assert_eq!(a, b);
    }
}
