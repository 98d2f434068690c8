//! `min integral_0^1 u^2 dt`, `x' = u`, `x(0) = 0`, `u in [u_min, u_max]`.
//!
//! With `0` inside the box the optimum is `u = 0`, `J = 0`; otherwise the
//! control sits on the bound closest to zero.

use crate::error::ProblemError;
use crate::problem::OcProblem;
use crate::sweep::PmpCallbacks;

pub fn quadratic_control_problem() -> (OcProblem, PmpCallbacks) {
    quadratic_with_bounds(-1.0, 1.0).expect("default bounds are valid")
}

pub fn quadratic_with_bounds(u_min: f64, u_max: f64) -> Result<(OcProblem, PmpCallbacks), ProblemError> {
    let problem = OcProblem::builder(1, 1)
        .horizon(0.0, 1.0)
        .initial_state(vec![0.0])
        .dynamics(|_, _, u, out| out[0] = u[0])
        .running_cost(|_, _, u| u[0] * u[0])
        .dynamics_jacobians(|_, _, _, jx| jx[0] = 0.0, |_, _, _, ju| ju[0] = 1.0)
        .running_cost_gradients(|_, _, _, fx| fx[0] = 0.0, |_, _, u, fu| fu[0] = 2.0 * u[0])
        .control_bounds(vec![u_min], vec![u_max])
        .build()?;
    let callbacks = PmpCallbacks::new(
        |_, _, u, l| u[0] * u[0] + l[0] * u[0],
        |_, _, _, _, out| out[0] = 0.0,
        |_, _, l, out| out[0] = -l[0] / 2.0,
    );
    Ok((problem, callbacks))
}
