//! Built-in problems, looked up by name.

mod quadratic;
mod rubella;

pub use quadratic::{quadratic_control_problem, quadratic_with_bounds};
pub use rubella::{rubella_callbacks, rubella_problem, RubellaParams};

use crate::error::RegistryError;
use crate::problem::OcProblem;
use crate::sweep::PmpCallbacks;

pub type BuiltProblem = (OcProblem, Option<PmpCallbacks>);

type BuildFn = fn(&[(String, f64)]) -> Result<BuiltProblem, RegistryError>;

/// Registry entry.
#[derive(Debug, Clone, Copy)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub description: &'static str,
    /// Parameter keys and their default values.
    pub defaults: &'static [(&'static str, f64)],
    builder: BuildFn,
}

impl ProblemSpec {
    /// Builds the problem with `overrides` applied in order.
    pub fn build(&self, overrides: &[(String, f64)]) -> Result<BuiltProblem, RegistryError> {
        for (key, _) in overrides {
            if !self.defaults.iter().any(|(k, _)| k == key) {
                return Err(RegistryError::UnknownParameter {
                    problem: self.name.to_string(),
                    key: key.clone(),
                    known: self.defaults.iter().map(|(k, _)| k.to_string()).collect(),
                });
            }
        }
        (self.builder)(overrides)
    }
}

const RUBELLA_DEFAULTS: &[(&str, f64)] = &[
    ("b", 0.012),
    ("e", 36.5),
    ("g", 30.417),
    ("p", 0.65),
    ("q", 0.65),
    ("beta", 527.59),
    ("A", 100.0),
    ("u_min", 0.0),
    ("u_max", 0.9),
    ("tf", 3.0),
    ("x1_0", 0.0555),
    ("x2_0", 0.0003),
    ("x3_0", 0.0004),
    ("x4_0", 1.0),
];

const QUADRATIC_DEFAULTS: &[(&str, f64)] = &[("u_min", -1.0), ("u_max", 1.0)];

fn build_rubella(overrides: &[(String, f64)]) -> Result<BuiltProblem, RegistryError> {
    let mut params = RubellaParams::default();
    for (key, value) in overrides {
        params.set(key, *value);
    }
    let (p, cb) = rubella_problem(&params)?;
    Ok((p, Some(cb)))
}

fn build_quadratic(overrides: &[(String, f64)]) -> Result<BuiltProblem, RegistryError> {
    let (mut lo, mut hi) = (-1.0, 1.0);
    for (key, value) in overrides {
        match key.as_str() {
            "u_min" => lo = *value,
            "u_max" => hi = *value,
            _ => unreachable!("keys validated against defaults"),
        }
    }
    let (p, cb) = quadratic_with_bounds(lo, hi)?;
    Ok((p, Some(cb)))
}

static REGISTRY: &[ProblemSpec] = &[
    ProblemSpec {
        name: "rubella",
        description: "rubella vaccination over three years (4 states, 1 control)",
        defaults: RUBELLA_DEFAULTS,
        builder: build_rubella,
    },
    ProblemSpec {
        name: "quadratic",
        description: "min integral u^2 with x' = u on [0, 1] (analytic fixture)",
        defaults: QUADRATIC_DEFAULTS,
        builder: build_quadratic,
    },
];

pub fn registry() -> &'static [ProblemSpec] {
    REGISTRY
}

pub fn problem_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|s| s.name).collect()
}

pub fn registry_lookup(name: &str) -> Result<&'static ProblemSpec, RegistryError> {
    REGISTRY
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| RegistryError::UnknownProblem {
            name: name.to_string(),
            available: problem_names().into_iter().map(String::from).collect(),
        })
}

/// Parses a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, f64), RegistryError> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| RegistryError::MalformedOverride(s.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(RegistryError::MalformedOverride(s.to_string()));
    }
    let v: f64 = value.trim().parse().map_err(|_| RegistryError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })?;
    Ok((key.to_string(), v))
}
