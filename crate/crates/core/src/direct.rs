//! Direct method: forward-Euler transcription of a Mayer problem, reduced to
//! a box-constrained program over the nodal controls by single shooting.
//!
//! The decision vector is node-major, `u_vec[i * m + k] = u_k(t_i)`, for
//! `i = 0..=N`. Euler never reads `u_N`, so its gradient entry is zero.

use crate::error::{ProblemError, SolveError};
use crate::grid::{ControlGrid, NodeValues, StateTrajectory, TimeGrid};
use crate::integrators::euler_forward;
use crate::problem::{OcProblem, Sense};

/// Reduced nonlinear program `min F(u)` s.t. `lower <= u <= upper`.
#[derive(Debug, Clone)]
pub struct Nlp {
    problem: OcProblem,
    grid: TimeGrid,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Transcribes a Mayer-form problem on `grid`. Maximization problems are
/// negated so that `F` is always minimized.
pub fn transcribe_euler(p_mayer: &OcProblem, grid: &TimeGrid) -> Result<Nlp, ProblemError> {
    if !p_mayer.is_mayer() {
        return Err(ProblemError::NotMayer);
    }
    if grid.t0() != p_mayer.t0() || grid.tf() != p_mayer.tf() {
        return Err(ProblemError::InvalidHorizon {
            t0: grid.t0(),
            tf: grid.tf(),
        });
    }
    let problem = p_mayer.as_minimization();
    let rows = grid.n_nodes();
    let lower = NodeValues::constant(rows, problem.control_lower()).into_flat();
    let upper = NodeValues::constant(rows, problem.control_upper()).into_flat();
    Ok(Nlp {
        problem,
        grid: *grid,
        lower,
        upper,
    })
}

impl Nlp {
    pub fn n_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// The minimization-sense Mayer problem behind the program.
    pub fn problem(&self) -> &OcProblem {
        &self.problem
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn project(&self, u: &mut [f64]) {
        for ((v, a), b) in u.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(*a).min(*b);
        }
    }

    fn controls(&self, u_vec: &[f64]) -> Result<ControlGrid, SolveError> {
        if u_vec.len() != self.n_vars() {
            return Err(ProblemError::DimensionMismatch {
                what: "decision vector",
                expected: self.n_vars(),
                actual: u_vec.len(),
            }
            .into());
        }
        let values = NodeValues::from_flat(self.problem.n_controls(), u_vec.to_vec()).expect("checked length");
        Ok(ControlGrid { values })
    }

    /// Euler states for the decision vector.
    pub fn simulate(&self, u_vec: &[f64]) -> Result<StateTrajectory, SolveError> {
        let ug = self.controls(u_vec)?;
        let p = &self.problem;
        Ok(euler_forward(
            |t, x, u, out: &mut [f64]| p.dynamics(t, x, u, out),
            p.x0(),
            &ug,
            &self.grid,
        )?)
    }

    pub fn objective(&self, u_vec: &[f64]) -> Result<f64, SolveError> {
        let states = self.simulate(u_vec)?;
        let f = self.problem.terminal_cost(states.row(0), states.last());
        if f.is_finite() {
            Ok(f)
        } else {
            Err(SolveError::NonFinite("objective"))
        }
    }

    /// Objective and its exact gradient through the Euler recursion
    /// (discrete adjoint):
    ///
    /// ```text
    /// p_N = d phi / d x_N
    /// dF/du_i = h * p_{i+1}^T dg/du(t_i, x_i, u_i)
    /// p_i = p_{i+1} + h * dg/dx(t_i, x_i, u_i)^T p_{i+1}
    /// ```
    pub fn objective_and_gradient(&self, u_vec: &[f64]) -> Result<(f64, Vec<f64>), SolveError> {
        let states = self.simulate(u_vec)?;
        let p = &self.problem;
        let n = p.n_states();
        let m = p.n_controls();
        let h = self.grid.step();
        let f = p.terminal_cost(states.row(0), states.last());

        let mut costate = vec![0.0; n];
        p.terminal_cost_gradient(states.row(0), states.last(), &mut costate);
        let mut next = vec![0.0; n];
        let mut jx = vec![0.0; n * n];
        let mut ju = vec![0.0; n * m];
        let mut grad = vec![0.0; self.n_vars()];

        for i in (0..self.grid.n_intervals()).rev() {
            let u = &u_vec[i * m..(i + 1) * m];
            p.dynamics_jacobians(self.grid.node(i), states.row(i), u, &mut jx, &mut ju);
            for k in 0..m {
                let mut s = 0.0;
                for r in 0..n {
                    s += costate[r] * ju[r * m + k];
                }
                grad[i * m + k] = h * s;
            }
            for c in 0..n {
                let mut s = 0.0;
                for r in 0..n {
                    s += costate[r] * jx[r * n + c];
                }
                next[c] = costate[c] + h * s;
            }
            std::mem::swap(&mut costate, &mut next);
        }
        if !f.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(SolveError::NonFinite("gradient"));
        }
        Ok((f, grad))
    }
}

/// Exact gradient of the transcribed objective.
pub fn nlp_gradient(nlp: &Nlp, u_vec: &[f64]) -> Result<Vec<f64>, SolveError> {
    nlp.objective_and_gradient(u_vec).map(|(_, g)| g)
}

/// Euler defects `x_{i+1} - (x_i + h g(t_i, x_i, u_i))`, node-major.
pub fn constraint_residuals(
    p_mayer: &OcProblem,
    states: &StateTrajectory,
    ug: &ControlGrid,
    grid: &TimeGrid,
) -> Result<Vec<f64>, ProblemError> {
    let n = p_mayer.n_states();
    for (what, expected, actual) in [
        ("state rows", grid.n_nodes(), states.values.rows()),
        ("state width", n, states.n_states()),
        ("control rows", grid.n_nodes(), ug.values.rows()),
        ("control width", p_mayer.n_controls(), ug.n_controls()),
    ] {
        if expected != actual {
            return Err(ProblemError::DimensionMismatch { what, expected, actual });
        }
    }
    let h = grid.step();
    let mut rate = vec![0.0; n];
    let mut out = Vec::with_capacity(grid.n_intervals() * n);
    for i in 0..grid.n_intervals() {
        let x = states.row(i);
        p_mayer.dynamics(grid.node(i), x, ug.row(i), &mut rate);
        let x_next = states.row(i + 1);
        for c in 0..n {
            out.push(x_next[c] - (x[c] + h * rate[c]));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectConfig {
    pub n_intervals: usize,
    /// Stop when `|u - clip(u - grad F)|_inf <= grad_tol`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Trial step of the first iteration; later iterations start from the
    /// Barzilai-Borwein step.
    pub initial_step: f64,
    pub initial_control: Option<ControlGrid>,
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            n_intervals: 3000,
            grad_tol: 1e-6,
            max_iter: 5000,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            initial_step: 1.0,
            initial_control: None,
        }
    }
}

impl DirectConfig {
    fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: String| Err(SolveError::Config(msg));
        if self.n_intervals == 0 {
            return bad("n_intervals must be positive".into());
        }
        if !(self.grad_tol > 0.0) {
            return bad(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            ));
        }
        if !(self.initial_step > 0.0) {
            return bad(format!("initial_step must be positive, got {}", self.initial_step));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectResult {
    pub grid: TimeGrid,
    pub control: ControlGrid,
    /// Euler states of the Mayer problem, cost state included.
    pub states: StateTrajectory,
    /// Objective in the sense of the problem that was solved.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub projected_grad_norm: f64,
    /// True when the line search gave up before reaching `grad_tol`.
    pub line_search_failed: bool,
    /// Accepted objective values (minimization sense), starting point first.
    pub history: Vec<f64>,
}

const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e14;

fn projected_gradient_norm(nlp: &Nlp, u: &[f64], g: &[f64]) -> f64 {
    u.iter()
        .zip(g)
        .zip(nlp.lower.iter().zip(&nlp.upper))
        .map(|((u, g), (a, b))| (u - (u - g).max(*a).min(*b)).abs())
        .fold(0.0, f64::max)
}

/// Projected gradient descent with Armijo backtracking along the projection
/// arc `u(alpha) = clip(u - alpha grad F)`.
pub fn projected_gradient_solve(nlp: &Nlp, cfg: &DirectConfig) -> Result<DirectResult, SolveError> {
    cfg.validate()?;
    if nlp.lower.iter().chain(&nlp.upper).any(|v| !v.is_finite()) {
        return Err(SolveError::Config(
            "projected gradient needs finite control bounds".into(),
        ));
    }
    let m = nlp.problem.n_controls();
    let mut u = match &cfg.initial_control {
        Some(u0) => nlp.controls(u0.values.as_flat())?.values.into_flat(),
        None => vec![0.0; nlp.n_vars()],
    };
    nlp.project(&mut u);

    let (mut f, mut g) = nlp.objective_and_gradient(&u)?;
    let mut history = vec![f];
    let mut trial = cfg.initial_step;
    let mut iterations = 0;
    let mut converged = false;
    let mut line_search_failed = false;
    let mut pg = projected_gradient_norm(nlp, &u, &g);
    let mut candidate = vec![0.0; u.len()];

    while iterations < cfg.max_iter {
        if pg <= cfg.grad_tol {
            converged = true;
            break;
        }
        let mut alpha = trial;
        let accepted = loop {
            for ((c, ui), gi) in candidate.iter_mut().zip(&u).zip(&g) {
                *c = ui - alpha * gi;
            }
            nlp.project(&mut candidate);
            let slope: f64 = candidate
                .iter()
                .zip(&u)
                .zip(&g)
                .map(|((c, ui), gi)| gi * (c - ui))
                .sum();
            if slope < 0.0 {
                if let Ok(fc) = nlp.objective(&candidate) {
                    if fc <= f + cfg.armijo_c * slope && fc < f {
                        break Some(fc);
                    }
                }
            }
            alpha *= cfg.backtrack_factor;
            if alpha < MIN_STEP {
                break None;
            }
        };
        let Some(_) = accepted else {
            line_search_failed = true;
            break;
        };

        let (f_new, g_new) = nlp.objective_and_gradient(&candidate)?;
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..u.len() {
            let s = candidate[i] - u[i];
            ss += s * s;
            sy += s * (g_new[i] - g[i]);
        }
        trial = if sy > 0.0 {
            (ss / sy).clamp(MIN_STEP, MAX_STEP)
        } else {
            (2.0 * alpha).min(MAX_STEP)
        };

        std::mem::swap(&mut u, &mut candidate);
        f = f_new;
        g = g_new;
        history.push(f);
        iterations += 1;
        pg = projected_gradient_norm(nlp, &u, &g);
    }
    if !converged && pg <= cfg.grad_tol {
        converged = true;
    }

    // u_N never enters the objective; report it equal to u_{N-1}.
    let n_int = nlp.grid.n_intervals();
    let (head, tail) = u.split_at_mut(n_int * m);
    tail.copy_from_slice(&head[(n_int - 1) * m..]);

    let states = nlp.simulate(&u)?;
    let control = nlp.controls(&u)?;
    Ok(DirectResult {
        grid: nlp.grid,
        control,
        states,
        objective: f,
        iterations,
        converged,
        projected_grad_norm: pg,
        line_search_failed,
        history,
    })
}

/// Converts to Mayer form if needed, transcribes on `cfg.n_intervals`
/// intervals and solves. The objective is reported in `p`'s own sense.
pub fn solve_direct(p: &OcProblem, cfg: &DirectConfig) -> Result<DirectResult, SolveError> {
    let mayer = if p.is_mayer() { p.clone() } else { p.to_mayer() };
    let grid = mayer
        .grid(cfg.n_intervals)
        .ok_or_else(|| SolveError::Config("invalid grid".into()))?;
    let nlp = transcribe_euler(&mayer, &grid)?;
    let mut r = projected_gradient_solve(&nlp, cfg)?;
    if p.sense() == Sense::Maximize {
        r.objective = -r.objective;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cost_only(tf: f64) -> OcProblem {
        // x_c' = u^2
        OcProblem::builder(1, 1)
            .horizon(0.0, tf)
            .dynamics(|_, _, u, out| out[0] = u[0] * u[0])
            .terminal_cost(|_, _, _, xf| xf[0])
            .control_bounds(vec![-1.0], vec![1.0])
            .build()
            .unwrap()
    }

    #[test]
    fn one_step_objective_and_gradient() {
        let p = cost_only(3.0);
        let grid = TimeGrid::new(0.0, 3.0, 1).unwrap();
        let nlp = transcribe_euler(&p, &grid).unwrap();
        assert_eq!(nlp.n_vars(), 2);
        assert_eq!(nlp.objective(&[0.0, 0.0]).unwrap(), 0.0);
        let (f, g) = nlp.objective_and_gradient(&[0.9, 0.4]).unwrap();
        assert!((f - 2.43).abs() < 1e-14);
        assert!((g[0] - 5.4).abs() < 1e-8, "{g:?}");
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn control_free_dynamics_have_zero_gradient() {
        let p = OcProblem::builder(1, 1)
            .horizon(0.0, 1.0)
            .initial_state(vec![1.0])
            .dynamics(|_, x, _, out| out[0] = -x[0])
            .terminal_cost(|_, _, _, xf| xf[0] * xf[0])
            .control_bounds(vec![0.0], vec![1.0])
            .build()
            .unwrap();
        let grid = p.grid(20).unwrap();
        let nlp = transcribe_euler(&p, &grid).unwrap();
        let g = nlp_gradient(&nlp, &vec![0.3; nlp.n_vars()]).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn transcription_requires_mayer_form() {
        let p = OcProblem::builder(1, 1)
            .dynamics(|_, _, u, out| out[0] = u[0])
            .running_cost(|_, _, u| u[0] * u[0])
            .build()
            .unwrap();
        let grid = p.grid(4).unwrap();
        assert_eq!(transcribe_euler(&p, &grid).unwrap_err(), ProblemError::NotMayer);
        assert!(transcribe_euler(&p.to_mayer(), &grid).is_ok());
    }

    #[test]
    fn wrong_length_decision_vector() {
        let p = cost_only(1.0);
        let nlp = transcribe_euler(&p, &p.grid(4).unwrap()).unwrap();
        assert!(matches!(
            nlp.objective(&[0.0; 3]),
            Err(SolveError::Problem(ProblemError::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn euler_states_satisfy_defects_exactly() {
        let p = cost_only(1.0);
        let grid = p.grid(50).unwrap();
        let ug = ControlGrid::from_fn(&grid, 1, |t| vec![(7.0 * t).sin()]);
        let nlp = transcribe_euler(&p, &grid).unwrap();
        let states = nlp.simulate(ug.values.as_flat()).unwrap();
        let r = constraint_residuals(&p, &states, &ug, &grid).unwrap();
        assert_eq!(r.len(), 50);
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn residual_perturbation_is_local() {
        let p = OcProblem::builder(2, 1)
            .dynamics(|_, x, u, out| {
                out[0] = x[1];
                out[1] = u[0] - x[0];
            })
            .terminal_cost(|_, _, _, xf| xf[0])
            .build()
            .unwrap();
        let grid = p.grid(10).unwrap();
        let ug = ControlGrid::constant(&grid, &[1.0]);
        let nlp = transcribe_euler(&p, &grid).unwrap();
        let mut states = nlp.simulate(ug.values.as_flat()).unwrap();
        states.values.row_mut(4)[1] += 1e-3;
        let r = constraint_residuals(&p, &states, &ug, &grid).unwrap();
        let touched: Vec<usize> = (0..10).filter(|i| r[2 * i] != 0.0 || r[2 * i + 1] != 0.0).collect();
        assert_eq!(touched, vec![3, 4]);
    }

    #[test]
    fn quadratic_converges_to_zero() {
        let p = cost_only(1.0);
        let grid = p.grid(20).unwrap();
        let nlp = transcribe_euler(&p, &grid).unwrap();
        let cfg = DirectConfig {
            n_intervals: 20,
            initial_control: Some(ControlGrid::constant(&grid, &[0.5])),
            ..DirectConfig::default()
        };
        let r = projected_gradient_solve(&nlp, &cfg).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.objective < 1e-12);
        assert!(r.control.values.as_flat().iter().all(|u| u.abs() < 1e-6));
        assert!(r.history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn active_lower_bound() {
        let p = OcProblem::builder(1, 1)
            .dynamics(|_, _, u, out| out[0] = u[0] * u[0])
            .terminal_cost(|_, _, _, xf| xf[0])
            .control_bounds(vec![0.2], vec![1.0])
            .build()
            .unwrap();
        let grid = p.grid(10).unwrap();
        let nlp = transcribe_euler(&p, &grid).unwrap();
        let cfg = DirectConfig {
            n_intervals: 10,
            initial_control: Some(ControlGrid::constant(&grid, &[0.9])),
            ..DirectConfig::default()
        };
        let r = projected_gradient_solve(&nlp, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.projected_grad_norm <= cfg.grad_tol);
        assert!(r.control.values.as_flat().iter().all(|u| *u == 0.2), "{:?}", r.control);
    }

    #[test]
    fn unbounded_controls_are_rejected() {
        let p = OcProblem::builder(1, 1)
            .dynamics(|_, _, u, out| out[0] = u[0] * u[0])
            .terminal_cost(|_, _, _, xf| xf[0])
            .build()
            .unwrap();
        let nlp = transcribe_euler(&p, &p.grid(4).unwrap()).unwrap();
        assert!(matches!(
            projected_gradient_solve(&nlp, &DirectConfig::default()),
            Err(SolveError::Config(_))
        ));
    }
}
