//! Numerical optimal control for fixed-horizon, free-endpoint problems with
//! box-bounded controls.
//!
//! Two solver families share one problem model:
//!
//! - [`sweep`]: the indirect forward-backward sweep. RK4 state and adjoint
//!   integration with a clipped, relaxed Pontryagin control update.
//! - [`direct`]: forward-Euler transcription to a reduced nonlinear program
//!   over nodal controls, solved by projected gradient with a discrete
//!   adjoint gradient.
//!
//! ```
//! use optctl_core::{problems, sweep::{sweep_solve, SweepConfig}};
//!
//! let (problem, callbacks) = problems::quadratic_control_problem();
//! let cfg = SweepConfig { n_intervals: 100, ..SweepConfig::default() };
//! let result = sweep_solve(&problem, &callbacks, &cfg).unwrap();
//! assert!(result.converged);
//! assert_eq!(result.objective, 0.0);
//! ```

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod direct;
pub mod error;
pub mod grid;
pub mod integrators;
pub mod problem;
pub mod problems;
pub mod sweep;

pub use direct::{
    constraint_residuals, nlp_gradient, projected_gradient_solve, solve_direct, transcribe_euler, DirectConfig,
    DirectResult, Nlp,
};
pub use error::{IntegrationError, ProblemError, RegistryError, SolveError};
pub use grid::{AdjointTrajectory, ControlGrid, NodeValues, Scheme, StateTrajectory, TimeGrid};
pub use integrators::{dopri45, euler_forward, rk4_backward, rk4_forward, AdaptiveTrajectory};
pub use problem::{Form, OcProblem, OcProblemBuilder, Sense};
pub use problems::{registry_lookup, ProblemSpec, RubellaParams};
pub use sweep::{clip_control, sweep_solve, PmpCallbacks, SweepConfig, SweepResult};
