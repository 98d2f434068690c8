//! Rubella vaccination benchmark over three years.
//!
//! States: `x1` susceptible, `x2` incubating, `x3` infectious, `x4` the
//! total-population balance. Control `u` is the vaccination rate.
//!
//! ```text
//! min  integral_0^3 (A x3 + u^2) dt
//! x1' = b - b (p x2 + q x3) - b x1 - beta x1 x3 - u x1
//! x2' = b p x2 + beta x1 x3 - (e + b) x2
//! x3' = e x2 - (g + b) x3
//! x4' = b - b x4
//! ```
//!
//! The `q` term multiplies `x3` (vertical transmission from infectious
//! mothers).

use crate::error::ProblemError;
use crate::problem::OcProblem;
use crate::sweep::PmpCallbacks;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RubellaParams {
    /// Birth and death rate.
    pub b: f64,
    /// Rate of leaving the incubation class.
    pub e: f64,
    /// Recovery rate.
    pub g_rec: f64,
    pub p: f64,
    pub q: f64,
    /// Transmission rate.
    pub beta: f64,
    /// Weight of the infectious class in the cost.
    pub a_weight: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub t_final: f64,
    pub x_init: [f64; 4],
}

impl Default for RubellaParams {
    fn default() -> Self {
        Self {
            b: 0.012,
            e: 36.5,
            g_rec: 30.417,
            p: 0.65,
            q: 0.65,
            beta: 527.59,
            a_weight: 100.0,
            u_min: 0.0,
            u_max: 0.9,
            t_final: 3.0,
            x_init: [0.0555, 0.0003, 0.0004, 1.0],
        }
    }
}

impl RubellaParams {
    /// Sets a parameter by its registry key. Returns `false` for unknown keys.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "b" => &mut self.b,
            "e" => &mut self.e,
            "g" | "g_rec" => &mut self.g_rec,
            "p" => &mut self.p,
            "q" => &mut self.q,
            "beta" => &mut self.beta,
            "A" => &mut self.a_weight,
            "u_min" => &mut self.u_min,
            "u_max" => &mut self.u_max,
            "tf" => &mut self.t_final,
            "x1_0" => &mut self.x_init[0],
            "x2_0" => &mut self.x_init[1],
            "x3_0" => &mut self.x_init[2],
            "x4_0" => &mut self.x_init[3],
            _ => return false,
        };
        *slot = value;
        true
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let invalid = |name: &str, value: f64, reason: &'static str| {
            Err(ProblemError::InvalidParameter {
                name: name.to_string(),
                value,
                reason,
            })
        };
        for (name, v) in [
            ("b", self.b),
            ("e", self.e),
            ("g", self.g_rec),
            ("p", self.p),
            ("q", self.q),
            ("beta", self.beta),
            ("A", self.a_weight),
            ("tf", self.t_final),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(name, v, "must be positive and finite");
            }
        }
        if !(self.u_min >= 0.0) {
            return invalid("u_min", self.u_min, "must be non-negative");
        }
        if !(self.u_max > self.u_min && self.u_max.is_finite()) {
            return invalid("u_max", self.u_max, "must be finite and exceed u_min");
        }
        for (k, v) in self.x_init.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return invalid(["x1_0", "x2_0", "x3_0", "x4_0"][k], *v, "must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

/// Four-state Lagrange minimization problem with analytic Jacobians, and
/// its optimality system.
pub fn rubella_problem(params: &RubellaParams) -> Result<(OcProblem, PmpCallbacks), ProblemError> {
    params.validate()?;
    let RubellaParams {
        b,
        e,
        g_rec: g,
        p,
        q,
        beta,
        a_weight: a,
        ..
    } = *params;
    let problem = OcProblem::builder(4, 1)
        .horizon(0.0, params.t_final)
        .initial_state(params.x_init.to_vec())
        .dynamics(move |_, x, u, out| {
            out[0] = b - b * (p * x[1] + q * x[2]) - b * x[0] - beta * x[0] * x[2] - u[0] * x[0];
            out[1] = b * p * x[1] + beta * x[0] * x[2] - (e + b) * x[1];
            out[2] = e * x[1] - (g + b) * x[2];
            out[3] = b - b * x[3];
        })
        .running_cost(move |_, x, u| a * x[2] + u[0] * u[0])
        .dynamics_jacobians(
            move |_, x, u, jx| {
                jx.copy_from_slice(&[
                    -b - beta * x[2] - u[0],
                    -b * p,
                    -b * q - beta * x[0],
                    0.0,
                    beta * x[2],
                    b * p - (e + b),
                    beta * x[0],
                    0.0,
                    0.0,
                    e,
                    -(g + b),
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    -b,
                ]);
            },
            |_, x, _, ju| ju.copy_from_slice(&[-x[0], 0.0, 0.0, 0.0]),
        )
        .running_cost_gradients(
            move |_, _, _, fx| fx.copy_from_slice(&[0.0, 0.0, a, 0.0]),
            |_, _, u, fu| fu[0] = 2.0 * u[0],
        )
        .control_bounds(vec![params.u_min], vec![params.u_max])
        .build()?;
    Ok((problem, rubella_callbacks(params)))
}

/// `H = A x3 + u^2 + lambda . g`, its adjoint system `lambda' = -dH/dx`
/// and the stationary control `u = lambda1 x1 / 2`.
pub fn rubella_callbacks(params: &RubellaParams) -> PmpCallbacks {
    let RubellaParams {
        b,
        e,
        g_rec: g,
        p,
        q,
        beta,
        a_weight: a,
        ..
    } = *params;
    PmpCallbacks::new(
        move |_, x, u, l| {
            let u = u[0];
            a * x[2]
                + u * u
                + l[0] * (b - b * (p * x[1] + q * x[2]) - b * x[0] - beta * x[0] * x[2] - u * x[0])
                + l[1] * (b * p * x[1] + beta * x[0] * x[2] - (e + b) * x[1])
                + l[2] * (e * x[1] - (g + b) * x[2])
                + l[3] * (b - b * x[3])
        },
        move |_, x, u, l, out| {
            out[0] = l[0] * (b + u[0] + beta * x[2]) - l[1] * beta * x[2];
            out[1] = l[0] * b * p + l[1] * (e + b - p * b) - l[2] * e;
            out[2] = -a + l[0] * (b * q + beta * x[0]) - l[1] * beta * x[0] + l[2] * (g + b);
            out[3] = b * l[3];
        },
        |_, x, l, out| out[0] = l[0] * x[0] / 2.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dynamics_at_initial_state() {
        let params = RubellaParams::default();
        let (p, _) = rubella_problem(&params).unwrap();
        let mut out = [0.0; 4];
        p.dynamics(0.0, &params.x_init, &[0.0], &mut out);
        assert_eq!(out[3], 0.0);
        assert!((out[2] - (-0.0012216)).abs() < 1e-15, "{}", out[2]);
        assert!((p.running_cost(0.0, &params.x_init, &[0.0]) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_and_adjoint_spot_values() {
        let cb = rubella_callbacks(&RubellaParams::default());
        assert_eq!((cb.hamiltonian)(0.0, &[0.5, 0.5, 0.0, 1.0], &[0.0], &[0.0; 4]), 0.0);
        let mut out = [0.0; 4];
        (cb.adjoint_rhs)(0.0, &[0.1, 0.2, 0.3, 0.4], &[0.5], &[0.0, 0.0, 0.0, 1.0], &mut out);
        assert_eq!(out[3], 0.012);
        let mut u = [0.0];
        (cb.control_update)(0.0, &[0.06, 0.0, 0.0, 1.0], &[30.0, 0.0, 0.0, 0.0], &mut u);
        assert!((u[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn parameter_validation() {
        let mut params = RubellaParams::default();
        assert!(params.set("u_max", -1.0));
        assert!(matches!(
            rubella_problem(&params),
            Err(ProblemError::InvalidParameter { .. })
        ));
        let mut params = RubellaParams::default();
        params.set("x1_0", 1.5);
        assert!(params.validate().is_err());
        assert!(!RubellaParams::default().set("nosuch", 1.0));
    }
}
