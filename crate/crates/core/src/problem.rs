//! Continuous-time optimal control problems in Lagrange, Mayer and Bolza form.
//!
//! A problem is
//!
//! ```text
//! opt  J = phi(t0, x(t0), tf, x(tf)) + integral_{t0}^{tf} f(t, x, u) dt
//! s.t. x' = g(t, x, u),  x(t0) = x0,  a <= u(t) <= b
//! ```
//!
//! with fixed `tf` and free `x(tf)`. The running cost `f` and terminal cost
//! `phi` are optional; an absent term is identically zero, which is what
//! [`OcProblem::form`] inspects.

use std::fmt;
use std::sync::Arc;

use crate::error::{ProblemError, SolveError};
use crate::grid::{ControlGrid, Scheme, StateTrajectory, TimeGrid};

/// `(t, x, u, out)`: writes a vector (dynamics, gradients) or a row-major
/// matrix (Jacobians) into `out`.
pub type VectorFn = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;
/// `(t, x, u) -> f`.
pub type RunningCostFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;
/// `(t0, x(t0), tf, x(tf)) -> phi`.
pub type TerminalCostFn = Arc<dyn Fn(f64, &[f64], f64, &[f64]) -> f64 + Send + Sync>;
/// `(t0, x(t0), tf, x(tf), out)`: writes `d phi / d x(tf)`.
pub type TerminalGradFn = Arc<dyn Fn(f64, &[f64], f64, &[f64], &mut [f64]) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    pub fn flipped(self) -> Self {
        match self {
            Sense::Minimize => Sense::Maximize,
            Sense::Maximize => Sense::Minimize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Lagrange,
    Mayer,
    Bolza,
}

/// Optional analytic derivatives. Missing pieces fall back to central
/// differences.
#[derive(Clone, Default)]
pub struct Derivatives {
    /// `dg/dx`, `n x n` row-major.
    pub dynamics_dx: Option<VectorFn>,
    /// `dg/du`, `n x m` row-major.
    pub dynamics_du: Option<VectorFn>,
    /// `df/dx`, length `n`.
    pub running_cost_dx: Option<VectorFn>,
    /// `df/du`, length `m`.
    pub running_cost_du: Option<VectorFn>,
    /// `d phi / d x(tf)`, length `n`.
    pub terminal_cost_dx: Option<TerminalGradFn>,
}

/// Immutable optimal control problem. All evaluators are shared behind
/// `Arc`, so cloning is cheap.
#[derive(Clone)]
pub struct OcProblem {
    t0: f64,
    tf: f64,
    x0: Vec<f64>,
    n_controls: usize,
    dynamics: VectorFn,
    running_cost: Option<RunningCostFn>,
    terminal_cost: Option<TerminalCostFn>,
    control_lower: Vec<f64>,
    control_upper: Vec<f64>,
    sense: Sense,
    derivatives: Derivatives,
}

impl fmt::Debug for OcProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OcProblem")
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .field("x0", &self.x0)
            .field("n_controls", &self.n_controls)
            .field("form", &self.form())
            .field("control_lower", &self.control_lower)
            .field("control_upper", &self.control_upper)
            .field("sense", &self.sense)
            .finish_non_exhaustive()
    }
}

pub struct OcProblemBuilder {
    t0: f64,
    tf: f64,
    x0: Vec<f64>,
    n_controls: usize,
    dynamics: Option<VectorFn>,
    running_cost: Option<RunningCostFn>,
    terminal_cost: Option<TerminalCostFn>,
    control_lower: Option<Vec<f64>>,
    control_upper: Option<Vec<f64>>,
    sense: Sense,
    derivatives: Derivatives,
}

impl OcProblemBuilder {
    pub fn horizon(mut self, t0: f64, tf: f64) -> Self {
        self.t0 = t0;
        self.tf = tf;
        self
    }

    pub fn initial_state(mut self, x0: impl Into<Vec<f64>>) -> Self {
        self.x0 = x0.into();
        self
    }

    pub fn dynamics<F>(mut self, g: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.dynamics = Some(Arc::new(g));
        self
    }

    pub fn running_cost<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.running_cost = Some(Arc::new(f));
        self
    }

    pub fn terminal_cost<F>(mut self, phi: F) -> Self
    where
        F: Fn(f64, &[f64], f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.terminal_cost = Some(Arc::new(phi));
        self
    }

    pub fn control_bounds(mut self, lower: impl Into<Vec<f64>>, upper: impl Into<Vec<f64>>) -> Self {
        self.control_lower = Some(lower.into());
        self.control_upper = Some(upper.into());
        self
    }

    pub fn sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }

    pub fn dynamics_jacobians<Fx, Fu>(mut self, dx: Fx, du: Fu) -> Self
    where
        Fx: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        Fu: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.derivatives.dynamics_dx = Some(Arc::new(dx));
        self.derivatives.dynamics_du = Some(Arc::new(du));
        self
    }

    pub fn running_cost_gradients<Fx, Fu>(mut self, dx: Fx, du: Fu) -> Self
    where
        Fx: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        Fu: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.derivatives.running_cost_dx = Some(Arc::new(dx));
        self.derivatives.running_cost_du = Some(Arc::new(du));
        self
    }

    pub fn terminal_cost_gradient<F>(mut self, dx: F) -> Self
    where
        F: Fn(f64, &[f64], f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.derivatives.terminal_cost_dx = Some(Arc::new(dx));
        self
    }

    pub fn build(self) -> Result<OcProblem, ProblemError> {
        if !(self.t0 < self.tf) || !self.t0.is_finite() || !self.tf.is_finite() {
            return Err(ProblemError::InvalidHorizon {
                t0: self.t0,
                tf: self.tf,
            });
        }
        if self.x0.is_empty() || self.n_controls == 0 {
            return Err(ProblemError::EmptyDimensions);
        }
        let dynamics = self.dynamics.ok_or(ProblemError::MissingDynamics)?;
        let m = self.n_controls;
        let lower = self.control_lower.unwrap_or_else(|| vec![f64::NEG_INFINITY; m]);
        let upper = self.control_upper.unwrap_or_else(|| vec![f64::INFINITY; m]);
        for (what, v) in [("control_lower", &lower), ("control_upper", &upper)] {
            if v.len() != m {
                return Err(ProblemError::DimensionMismatch {
                    what,
                    expected: m,
                    actual: v.len(),
                });
            }
        }
        for (index, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if !(a <= b) {
                return Err(ProblemError::InvalidBounds {
                    index,
                    lower: a,
                    upper: b,
                });
            }
        }
        Ok(OcProblem {
            t0: self.t0,
            tf: self.tf,
            x0: self.x0,
            n_controls: m,
            dynamics,
            running_cost: self.running_cost,
            terminal_cost: self.terminal_cost,
            control_lower: lower,
            control_upper: upper,
            sense: self.sense,
            derivatives: self.derivatives,
        })
    }
}

impl OcProblem {
    /// Starts a builder with horizon `[0, 1]`, zero initial state, unbounded
    /// controls and minimization sense.
    pub fn builder(n_states: usize, n_controls: usize) -> OcProblemBuilder {
        OcProblemBuilder {
            t0: 0.0,
            tf: 1.0,
            x0: vec![0.0; n_states],
            n_controls,
            dynamics: None,
            running_cost: None,
            terminal_cost: None,
            control_lower: None,
            control_upper: None,
            sense: Sense::Minimize,
            derivatives: Derivatives::default(),
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn n_states(&self) -> usize {
        self.x0.len()
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn control_lower(&self) -> &[f64] {
        &self.control_lower
    }

    pub fn control_upper(&self) -> &[f64] {
        &self.control_upper
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn derivatives(&self) -> &Derivatives {
        &self.derivatives
    }

    pub fn form(&self) -> Form {
        match (self.running_cost.is_some(), self.terminal_cost.is_some()) {
            (_, false) => Form::Lagrange,
            (false, true) => Form::Mayer,
            (true, true) => Form::Bolza,
        }
    }

    /// True when no running cost is present (pure terminal objective).
    pub fn is_mayer(&self) -> bool {
        self.running_cost.is_none()
    }

    /// Grid with `n_intervals` intervals over this problem's horizon.
    pub fn grid(&self, n_intervals: usize) -> Option<TimeGrid> {
        TimeGrid::new(self.t0, self.tf, n_intervals)
    }

    pub fn dynamics(&self, t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        (self.dynamics)(t, x, u, out)
    }

    pub fn running_cost(&self, t: f64, x: &[f64], u: &[f64]) -> f64 {
        self.running_cost.as_ref().map_or(0.0, |f| f(t, x, u))
    }

    pub fn terminal_cost(&self, x_initial: &[f64], x_final: &[f64]) -> f64 {
        self.terminal_cost
            .as_ref()
            .map_or(0.0, |phi| phi(self.t0, x_initial, self.tf, x_final))
    }

    /// `dg/dx` (`n x n`) and `dg/du` (`n x m`), row-major. Uses the analytic
    /// callbacks when present, central differences otherwise.
    pub fn dynamics_jacobians(&self, t: f64, x: &[f64], u: &[f64], jx: &mut [f64], ju: &mut [f64]) {
        let n = self.n_states();
        match &self.derivatives.dynamics_dx {
            Some(dx) => dx(t, x, u, jx),
            None => central_jacobian(n, x, jx, |xp, out| self.dynamics(t, xp, u, out)),
        }
        match &self.derivatives.dynamics_du {
            Some(du) => du(t, x, u, ju),
            None => central_jacobian(n, u, ju, |up, out| self.dynamics(t, x, up, out)),
        }
    }

    /// `d phi / d x(tf)`.
    pub fn terminal_cost_gradient(&self, x_initial: &[f64], x_final: &[f64], out: &mut [f64]) {
        match (&self.terminal_cost, &self.derivatives.terminal_cost_dx) {
            (None, _) => out.fill(0.0),
            (Some(_), Some(dx)) => dx(self.t0, x_initial, self.tf, x_final, out),
            (Some(_), None) => {
                let mut xp = x_final.to_vec();
                for (j, o) in out.iter_mut().enumerate() {
                    let step = fd_step(x_final[j]);
                    xp[j] = x_final[j] + step;
                    let fp = self.terminal_cost(x_initial, &xp);
                    xp[j] = x_final[j] - step;
                    let fm = self.terminal_cost(x_initial, &xp);
                    xp[j] = x_final[j];
                    *o = (fp - fm) / (2.0 * step);
                }
            }
        }
    }

    /// Lagrange/Bolza to Mayer: appends a cost state `x_c' = f(t, x, u)`,
    /// `x_c(t0) = 0`, and moves it into the terminal cost
    /// `phi + x_c(tf)`. The original dynamics are untouched on the first
    /// `n` components.
    pub fn to_mayer(&self) -> OcProblem {
        let n = self.n_states();
        let m = self.n_controls;
        let mut x0 = self.x0.clone();
        x0.push(0.0);

        let g = self.dynamics.clone();
        let f = self.running_cost.clone();
        let dynamics: VectorFn = Arc::new(move |t, x, u, out| {
            g(t, &x[..n], u, &mut out[..n]);
            out[n] = f.as_ref().map_or(0.0, |f| f(t, &x[..n], u));
        });

        let phi = self.terminal_cost.clone();
        let terminal_cost: TerminalCostFn =
            Arc::new(move |t0, xi, tf, xf| phi.as_ref().map_or(0.0, |phi| phi(t0, &xi[..n], tf, &xf[..n])) + xf[n]);

        let d = &self.derivatives;
        let running_dx_ok = self.running_cost.is_none() || d.running_cost_dx.is_some();
        let running_du_ok = self.running_cost.is_none() || d.running_cost_du.is_some();
        let dynamics_dx = match (&d.dynamics_dx, running_dx_ok) {
            (Some(gx), true) => {
                let gx = gx.clone();
                let fx = d.running_cost_dx.clone();
                let has_f = self.running_cost.is_some();
                let v: VectorFn = Arc::new(move |t, x, u, out: &mut [f64]| {
                    let w = n + 1;
                    out.fill(0.0);
                    let mut block = vec![0.0; n * n];
                    gx(t, &x[..n], u, &mut block);
                    for r in 0..n {
                        out[r * w..r * w + n].copy_from_slice(&block[r * n..(r + 1) * n]);
                    }
                    if has_f {
                        if let Some(fx) = &fx {
                            fx(t, &x[..n], u, &mut out[n * w..n * w + n]);
                        }
                    }
                });
                Some(v)
            }
            _ => None,
        };
        let dynamics_du = match (&d.dynamics_du, running_du_ok) {
            (Some(gu), true) => {
                let gu = gu.clone();
                let fu = d.running_cost_du.clone();
                let has_f = self.running_cost.is_some();
                let v: VectorFn = Arc::new(move |t, x, u, out: &mut [f64]| {
                    gu(t, &x[..n], u, &mut out[..n * m]);
                    let last = &mut out[n * m..(n + 1) * m];
                    last.fill(0.0);
                    if has_f {
                        if let Some(fu) = &fu {
                            fu(t, &x[..n], u, last);
                        }
                    }
                });
                Some(v)
            }
            _ => None,
        };
        let terminal_cost_dx = match (&self.terminal_cost, &d.terminal_cost_dx) {
            (None, _) => {
                let v: TerminalGradFn = Arc::new(move |_, _, _, _, out: &mut [f64]| {
                    out.fill(0.0);
                    out[n] = 1.0;
                });
                Some(v)
            }
            (Some(_), Some(px)) => {
                let px = px.clone();
                let v: TerminalGradFn = Arc::new(move |t0, xi, tf, xf, out: &mut [f64]| {
                    px(t0, &xi[..n], tf, &xf[..n], &mut out[..n]);
                    out[n] = 1.0;
                });
                Some(v)
            }
            (Some(_), None) => None,
        };

        OcProblem {
            t0: self.t0,
            tf: self.tf,
            x0,
            n_controls: m,
            dynamics,
            running_cost: None,
            terminal_cost: Some(terminal_cost),
            control_lower: self.control_lower.clone(),
            control_upper: self.control_upper.clone(),
            sense: self.sense,
            derivatives: Derivatives {
                dynamics_dx,
                dynamics_du,
                running_cost_dx: None,
                running_cost_du: None,
                terminal_cost_dx,
            },
        }
    }

    /// Flips the optimization sense and negates both cost terms, so every
    /// trajectory's objective changes sign.
    pub fn negate_sense(&self) -> OcProblem {
        let d = &self.derivatives;
        OcProblem {
            sense: self.sense.flipped(),
            running_cost: self.running_cost.clone().map(|f| {
                let v: RunningCostFn = Arc::new(move |t, x, u| -f(t, x, u));
                v
            }),
            terminal_cost: self.terminal_cost.clone().map(|phi| {
                let v: TerminalCostFn = Arc::new(move |t0, xi, tf, xf| -phi(t0, xi, tf, xf));
                v
            }),
            derivatives: Derivatives {
                dynamics_dx: d.dynamics_dx.clone(),
                dynamics_du: d.dynamics_du.clone(),
                running_cost_dx: d.running_cost_dx.clone().map(negated_vector_fn),
                running_cost_du: d.running_cost_du.clone().map(negated_vector_fn),
                terminal_cost_dx: d.terminal_cost_dx.clone().map(|px| {
                    let v: TerminalGradFn = Arc::new(move |t0, xi, tf, xf, out: &mut [f64]| {
                        px(t0, xi, tf, xf, out);
                        out.iter_mut().for_each(|o| *o = -*o);
                    });
                    v
                }),
            },
            ..self.clone()
        }
    }

    /// Equivalent problem with `Sense::Minimize`.
    pub fn as_minimization(&self) -> OcProblem {
        match self.sense {
            Sense::Minimize => self.clone(),
            Sense::Maximize => self.negate_sense(),
        }
    }

    /// `phi(x(t0), x(tf))` plus a quadrature of the running cost matched to
    /// the scheme that produced `traj`: left-endpoint sums for Euler,
    /// Simpson with a cubic-Hermite midpoint state for RK4.
    pub fn evaluate_objective(
        &self,
        traj: &StateTrajectory,
        ug: &ControlGrid,
        grid: &TimeGrid,
    ) -> Result<f64, SolveError> {
        let n = self.n_states();
        let rows = grid.n_nodes();
        check_len("trajectory rows", rows, traj.values.rows())?;
        check_len("trajectory width", n, traj.values.width())?;
        check_len("control rows", rows, ug.values.rows())?;
        check_len("control width", self.n_controls, ug.values.width())?;

        let mut integral = 0.0;
        if self.running_cost.is_some() {
            let h = grid.step();
            match traj.scheme {
                Scheme::Euler => {
                    for i in 0..grid.n_intervals() {
                        integral += h * self.running_cost(grid.node(i), traj.row(i), ug.row(i));
                    }
                }
                Scheme::Rk4 | Scheme::DormandPrince => {
                    let mut gl = vec![0.0; n];
                    let mut gr = vec![0.0; n];
                    let mut xm = vec![0.0; n];
                    let mut um = vec![0.0; self.n_controls];
                    for i in 0..grid.n_intervals() {
                        let (tl, tr) = (grid.node(i), grid.node(i + 1));
                        let (xl, xr) = (traj.row(i), traj.row(i + 1));
                        let (ul, ur) = (ug.row(i), ug.row(i + 1));
                        self.dynamics(tl, xl, ul, &mut gl);
                        self.dynamics(tr, xr, ur, &mut gr);
                        for k in 0..n {
                            xm[k] = 0.5 * (xl[k] + xr[k]) + h / 8.0 * (gl[k] - gr[k]);
                        }
                        for k in 0..self.n_controls {
                            um[k] = 0.5 * (ul[k] + ur[k]);
                        }
                        let fl = self.running_cost(tl, xl, ul);
                        let fm = self.running_cost(0.5 * (tl + tr), &xm, &um);
                        let fr = self.running_cost(tr, xr, ur);
                        integral += h / 6.0 * (fl + 4.0 * fm + fr);
                    }
                }
            }
        }
        let value = self.terminal_cost(traj.row(0), traj.last()) + integral;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(SolveError::NonFinite("objective"))
        }
    }
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<(), ProblemError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ProblemError::DimensionMismatch { what, expected, actual })
    }
}

fn negated_vector_fn(f: VectorFn) -> VectorFn {
    Arc::new(move |t, x, u, out: &mut [f64]| {
        f(t, x, u, out);
        out.iter_mut().for_each(|o| *o = -*o);
    })
}

/// Central-difference step `1e-6 * max(1, |v|)`.
pub(crate) fn fd_step(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

/// Fills row-major `out[r * cols + c] = d eval_r / d at_c` by central
/// differences, `cols = at.len()`.
fn central_jacobian(rows: usize, at: &[f64], out: &mut [f64], mut eval: impl FnMut(&[f64], &mut [f64])) {
    let cols = at.len();
    let mut p = at.to_vec();
    let mut fp = vec![0.0; rows];
    let mut fm = vec![0.0; rows];
    for c in 0..cols {
        let step = fd_step(at[c]);
        p[c] = at[c] + step;
        eval(&p, &mut fp);
        p[c] = at[c] - step;
        eval(&p, &mut fm);
        p[c] = at[c];
        for r in 0..rows {
            out[r * cols + c] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::NodeValues;

    fn scalar_problem() -> OcProblemBuilder {
        OcProblem::builder(1, 1)
            .horizon(0.0, 3.0)
            .initial_state(vec![0.0])
            .dynamics(|_, _, u, out| out[0] = u[0])
    }

    fn traj(rows: &[[f64; 1]], scheme: Scheme) -> StateTrajectory {
        StateTrajectory {
            values: NodeValues::from_rows(rows).unwrap(),
            scheme,
        }
    }

    #[test]
    fn form_classification() {
        let lagrange = scalar_problem().running_cost(|_, _, u| u[0] * u[0]).build().unwrap();
        let mayer = scalar_problem().terminal_cost(|_, _, _, xf| xf[0]).build().unwrap();
        let bolza = scalar_problem()
            .running_cost(|_, _, _| 1.0)
            .terminal_cost(|_, _, _, xf| xf[0])
            .build()
            .unwrap();
        assert_eq!(lagrange.form(), Form::Lagrange);
        assert_eq!(mayer.form(), Form::Mayer);
        assert_eq!(bolza.form(), Form::Bolza);
    }

    #[test]
    fn builder_rejects_invalid_problems() {
        assert!(matches!(
            scalar_problem().horizon(1.0, 1.0).build(),
            Err(ProblemError::InvalidHorizon { .. })
        ));
        assert!(matches!(
            scalar_problem().control_bounds(vec![1.0], vec![0.0]).build(),
            Err(ProblemError::InvalidBounds { index: 0, .. })
        ));
        assert!(matches!(
            scalar_problem().control_bounds(vec![0.0, 0.0], vec![1.0, 1.0]).build(),
            Err(ProblemError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            OcProblem::builder(1, 1).build(),
            Err(ProblemError::MissingDynamics)
        ));
    }

    #[test]
    fn pure_mayer_readout() {
        let p = scalar_problem().terminal_cost(|_, _, _, xf| xf[0]).build().unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 2).unwrap();
        let t = traj(&[[0.0], [1.0], [2.0]], Scheme::Rk4);
        let u = ControlGrid::constant(&grid, &[0.0]);
        assert_eq!(p.evaluate_objective(&t, &u, &grid).unwrap(), 2.0);
    }

    #[test]
    fn constant_integrand_gives_horizon_length() {
        let p = scalar_problem().running_cost(|_, _, _| 1.0).build().unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 3).unwrap();
        let u = ControlGrid::constant(&grid, &[0.7]);
        for scheme in [Scheme::Euler, Scheme::Rk4] {
            let t = traj(&[[0.0], [5.0], [-1.0], [2.0]], scheme);
            let j = p.evaluate_objective(&t, &u, &grid).unwrap();
            assert!((j - 3.0).abs() < 1e-14, "{scheme:?}: {j}");
        }
    }

    #[test]
    fn evaluate_objective_checks_dimensions() {
        let p = scalar_problem().running_cost(|_, _, _| 1.0).build().unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 3).unwrap();
        let u = ControlGrid::constant(&grid, &[0.0]);
        let short = traj(&[[0.0], [1.0]], Scheme::Rk4);
        assert!(matches!(
            p.evaluate_objective(&short, &u, &grid),
            Err(SolveError::Problem(ProblemError::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn negate_sense_flips_objective() {
        let p = scalar_problem()
            .sense(Sense::Maximize)
            .terminal_cost(|_, _, _, _| 5.0)
            .build()
            .unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 1).unwrap();
        let u = ControlGrid::constant(&grid, &[0.0]);
        let t = traj(&[[0.0], [0.0]], Scheme::Euler);
        let q = p.negate_sense();
        assert_eq!(q.sense(), Sense::Minimize);
        assert_eq!(q.evaluate_objective(&t, &u, &grid).unwrap(), -5.0);
        let r = q.negate_sense();
        assert_eq!(r.sense(), Sense::Maximize);
        assert_eq!(r.evaluate_objective(&t, &u, &grid).unwrap(), 5.0);
    }

    #[test]
    fn to_mayer_shapes_and_terminal_cost() {
        let p = scalar_problem()
            .running_cost(|_, x, u| x[0] + u[0] * u[0])
            .terminal_cost(|_, _, _, xf| 2.0 * xf[0])
            .build()
            .unwrap();
        let q = p.to_mayer();
        assert_eq!(q.n_states(), 2);
        assert_eq!(q.x0(), &[0.0, 0.0]);
        assert!(q.is_mayer());
        assert_eq!(q.form(), Form::Mayer);
        let mut out = [0.0; 2];
        q.dynamics(0.0, &[1.5, 9.0], &[2.0], &mut out);
        assert_eq!(out, [2.0, 1.5 + 4.0]);
        assert_eq!(q.terminal_cost(&[0.0, 0.0], &[1.0, 0.25]), 2.0 + 0.25);
    }

    #[test]
    fn fallback_jacobians_match_linear_dynamics() {
        let p = OcProblem::builder(2, 1)
            .dynamics(|_, x, u, out| {
                out[0] = 2.0 * x[0] - x[1] + 3.0 * u[0];
                out[1] = x[0] * x[1];
            })
            .build()
            .unwrap();
        let mut jx = [0.0; 4];
        let mut ju = [0.0; 2];
        p.dynamics_jacobians(0.0, &[1.0, 2.0], &[0.5], &mut jx, &mut ju);
        let expect_x = [2.0, -1.0, 2.0, 1.0];
        for (a, b) in jx.iter().zip(expect_x) {
            assert!((a - b).abs() < 1e-8, "{jx:?}");
        }
        assert!((ju[0] - 3.0).abs() < 1e-8 && ju[1].abs() < 1e-8);
    }
}
