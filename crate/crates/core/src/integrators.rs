//! Fixed-step and adaptive ODE integrators.
//!
//! [`rk4_forward`] and [`rk4_backward`] are the engines of the sweep method;
//! [`euler_forward`] is the stepping scheme of the direct transcription;
//! [`dopri45`] produces adaptive reference solutions.

use crate::error::IntegrationError;
use crate::grid::{AdjointTrajectory, ControlGrid, NodeValues, Scheme, StateTrajectory, TimeGrid};

/// Classical RK4 on a uniform grid.
///
/// Stage controls are `u_i` at the left node, `(u_i + u_{i+1}) / 2` at both
/// half steps and `u_{i+1}` at the right node.
pub fn rk4_forward<F>(
    dynamics: F,
    x0: &[f64],
    ug: &ControlGrid,
    grid: &TimeGrid,
) -> Result<StateTrajectory, IntegrationError>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]),
{
    let n = x0.len();
    let m = ug.n_controls();
    ug.check(grid, m)?;
    let h = grid.step();
    let h2 = 0.5 * h;

    let mut values = NodeValues::zeros(grid.n_nodes(), n);
    values.row_mut(0).copy_from_slice(x0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut u_mid = vec![0.0; m];

    for i in 0..grid.n_intervals() {
        let t = grid.node(i);
        let (ul, ur) = (ug.row(i), ug.row(i + 1));
        for c in 0..m {
            u_mid[c] = 0.5 * (ul[c] + ur[c]);
        }
        let x = values.row(i).to_vec();

        dynamics(t, &x, ul, &mut k1);
        axpy_into(&mut stage, &x, h2, &k1);
        dynamics(t + h2, &stage, &u_mid, &mut k2);
        axpy_into(&mut stage, &x, h2, &k2);
        dynamics(t + h2, &stage, &u_mid, &mut k3);
        axpy_into(&mut stage, &x, h, &k3);
        dynamics(grid.node(i + 1), &stage, ur, &mut k4);

        let next = values.row_mut(i + 1);
        for c in 0..n {
            next[c] = x[c] + (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFinite { node: i + 1 });
        }
    }
    Ok(StateTrajectory {
        values,
        scheme: Scheme::Rk4,
    })
}

/// RK4 from `t_N` down to `t_0` for `lambda' = rhs(t, x, u, lambda)`.
///
/// Stepping from node `j` to `j - 1`, the stage states are `x_j`, the nodal
/// average `(x_j + x_{j-1}) / 2` at both half steps, and `x_{j-1}`. The
/// control is held at `u_j` for all four stages. The result is indexed in
/// forward order (row `i` belongs to `t_i`) and row `N` equals `lambda_tf`.
pub fn rk4_backward<F>(
    adjoint_rhs: F,
    lambda_tf: &[f64],
    traj: &StateTrajectory,
    ug: &ControlGrid,
    grid: &TimeGrid,
) -> Result<AdjointTrajectory, IntegrationError>
where
    F: Fn(f64, &[f64], &[f64], &[f64], &mut [f64]),
{
    let n = lambda_tf.len();
    let width = traj.n_states();
    let m = ug.n_controls();
    ug.check(grid, m)?;
    if traj.values.rows() != grid.n_nodes() {
        return Err(IntegrationError::DimensionMismatch {
            what: "state trajectory rows",
            expected: grid.n_nodes(),
            actual: traj.values.rows(),
        });
    }
    let h = grid.step();
    let h2 = 0.5 * h;
    let last = grid.n_intervals();

    let mut values = NodeValues::zeros(grid.n_nodes(), n);
    values.row_mut(last).copy_from_slice(lambda_tf);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut x_mid = vec![0.0; width];

    for j in (1..=last).rev() {
        let t = grid.node(j);
        let (xr, xl) = (traj.row(j), traj.row(j - 1));
        for c in 0..width {
            x_mid[c] = 0.5 * (xr[c] + xl[c]);
        }
        let u = ug.row(j);
        let lam = values.row(j).to_vec();

        adjoint_rhs(t, xr, u, &lam, &mut k1);
        axpy_into(&mut stage, &lam, -h2, &k1);
        adjoint_rhs(t - h2, &x_mid, u, &stage, &mut k2);
        axpy_into(&mut stage, &lam, -h2, &k2);
        adjoint_rhs(t - h2, &x_mid, u, &stage, &mut k3);
        axpy_into(&mut stage, &lam, -h, &k3);
        adjoint_rhs(grid.node(j - 1), xl, u, &stage, &mut k4);

        let prev = values.row_mut(j - 1);
        for c in 0..n {
            prev[c] = lam[c] - (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if prev.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFinite { node: j - 1 });
        }
    }
    Ok(AdjointTrajectory { values })
}

/// Forward Euler, `x_{i+1} = x_i + h g(t_i, x_i, u_i)`. `u_N` is unused.
pub fn euler_forward<F>(
    dynamics: F,
    x0: &[f64],
    ug: &ControlGrid,
    grid: &TimeGrid,
) -> Result<StateTrajectory, IntegrationError>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]),
{
    let n = x0.len();
    ug.check(grid, ug.n_controls())?;
    let h = grid.step();
    let mut values = NodeValues::zeros(grid.n_nodes(), n);
    values.row_mut(0).copy_from_slice(x0);
    let mut rate = vec![0.0; n];
    for i in 0..grid.n_intervals() {
        let x = values.row(i).to_vec();
        dynamics(grid.node(i), &x, ug.row(i), &mut rate);
        let next = values.row_mut(i + 1);
        for c in 0..n {
            next[c] = x[c] + h * rate[c];
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFinite { node: i + 1 });
        }
    }
    Ok(StateTrajectory {
        values,
        scheme: Scheme::Euler,
    })
}

/// Accepted nodes of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveTrajectory {
    pub times: Vec<f64>,
    pub states: StateTrajectory,
    pub rejected_steps: usize,
}

impl AdaptiveTrajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last()
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Adaptive Dormand-Prince 5(4) with proportional step control and FSAL.
///
/// The error norm is the RMS of `err_i / (atol + rtol * max(|y_i|, |y_new_i|))`.
/// Fails when the step would drop below `1e-12 * (tf - t0)`.
pub fn dopri45<F, C>(
    dynamics: F,
    x0: &[f64],
    control_fn: C,
    t0: f64,
    tf: f64,
    rtol: f64,
    atol: f64,
) -> Result<AdaptiveTrajectory, IntegrationError>
where
    F: Fn(f64, &[f64], &[f64], &mut [f64]),
    C: Fn(f64) -> Vec<f64>,
{
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(IntegrationError::InvalidTolerance { rtol, atol });
    }
    let span = tf - t0;
    let h_min = 1e-12 * span;
    let n = x0.len();
    let f = |t: f64, x: &[f64], out: &mut [f64]| dynamics(t, x, &control_fn(t), out);

    let mut t = t0;
    let mut y = x0.to_vec();
    let mut times = vec![t0];
    let mut flat = x0.to_vec();
    let mut rejected = 0;

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    f(t, &y, &mut k1);
    let mut h = initial_step(&f, t0, &y, &k1, span, rtol, atol);

    while t < tf {
        if tf - t <= h_min {
            break;
        }
        h = h.min(tf - t);
        if h < h_min {
            return Err(IntegrationError::StepUnderflow { t, h });
        }

        for c in 0..n {
            stage[c] = y[c] + h * A21 * k1[c];
        }
        f(t + C2 * h, &stage, &mut k2);
        for c in 0..n {
            stage[c] = y[c] + h * (A31 * k1[c] + A32 * k2[c]);
        }
        f(t + C3 * h, &stage, &mut k3);
        for c in 0..n {
            stage[c] = y[c] + h * (A41 * k1[c] + A42 * k2[c] + A43 * k3[c]);
        }
        f(t + C4 * h, &stage, &mut k4);
        for c in 0..n {
            stage[c] = y[c] + h * (A51 * k1[c] + A52 * k2[c] + A53 * k3[c] + A54 * k4[c]);
        }
        f(t + C5 * h, &stage, &mut k5);
        for c in 0..n {
            stage[c] = y[c] + h * (A61 * k1[c] + A62 * k2[c] + A63 * k3[c] + A64 * k4[c] + A65 * k5[c]);
        }
        let t_new = if tf - (t + h) <= h_min { tf } else { t + h };
        f(t_new, &stage, &mut k6);
        for c in 0..n {
            y_new[c] = y[c] + h * (B1 * k1[c] + B3 * k3[c] + B4 * k4[c] + B5 * k5[c] + B6 * k6[c]);
        }
        f(t_new, &y_new, &mut k7);

        let mut err_sq = 0.0;
        for c in 0..n {
            let e = h * (E1 * k1[c] + E3 * k3[c] + E4 * k4[c] + E5 * k5[c] + E6 * k6[c] + E7 * k7[c]);
            let scale = atol + rtol * y[c].abs().max(y_new[c].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / n.max(1) as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            // Retry smaller; non-finite at the minimum step is a hard failure.
            if h <= h_min * 2.0 {
                return Err(IntegrationError::NonFinite { node: times.len() });
            }
            h *= MIN_FACTOR;
            rejected += 1;
            continue;
        }

        if err <= 1.0 {
            t = t_new;
            y.copy_from_slice(&y_new);
            std::mem::swap(&mut k1, &mut k7);
            times.push(t);
            flat.extend_from_slice(&y);
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
        } else {
            h *= (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            rejected += 1;
        }
    }

    let values = NodeValues::from_flat(n, flat).expect("width divides buffer");
    Ok(AdaptiveTrajectory {
        times,
        states: StateTrajectory {
            values,
            scheme: Scheme::DormandPrince,
        },
        rejected_steps: rejected,
    })
}

/// Starting step from the derivative scales (Hairer, Norsett & Wanner II.4).
fn initial_step(
    f: &impl Fn(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    rtol: f64,
    atol: f64,
) -> f64 {
    let n = y0.len().max(1) as f64;
    let scale: Vec<f64> = y0.iter().map(|y| atol + rtol * y.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

fn axpy_into(out: &mut [f64], x: &[f64], a: f64, k: &[f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}
