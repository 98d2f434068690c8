use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optctl_core::problems::registry;

#[derive(Debug, Parser)]
#[command(
    name = "optctl",
    version,
    about = "Solve optimal control problems by sweep or direct transcription"
)]
#[command(after_help = problems_help())]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a registered problem and write a trajectory CSV and a JSON report.
    #[command(after_help = problems_help())]
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Indirect forward-backward sweep.
    Sweep,
    /// Euler transcription solved by projected gradient.
    Direct,
    /// Run both and compare.
    Both,
}

impl Method {
    pub fn runs_sweep(self) -> bool {
        matches!(self, Method::Sweep | Method::Both)
    }

    pub fn runs_direct(self) -> bool {
        matches!(self, Method::Direct | Method::Both)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Registered problem name.
    #[arg(long, default_value = "rubella")]
    pub problem: String,
    #[arg(long, value_enum, default_value_t = Method::Sweep)]
    pub method: Method,
    /// Number of mesh intervals N (the CSV has N+1 rows).
    #[arg(long, default_value_t = 3000)]
    pub steps: usize,
    /// Sweep relative convergence tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Direct projected-gradient stopping tolerance.
    #[arg(long = "grad-tol", default_value_t = 1e-6)]
    pub grad_tol: f64,
    /// Iteration cap [default: 500 for sweep, 5000 for direct].
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Sweep relaxation weight of the new control, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub relax: f64,
    /// Parameter override KEY=VALUE; repeatable [default: none].
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Trajectory CSV path. With --method both the direct trajectory goes to
    /// <stem>_direct.csv next to it.
    #[arg(long, default_value = "trajectory.csv")]
    pub out: PathBuf,
    /// Run report JSON path.
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    /// Seed for the sampled callback consistency check.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn problems_help() -> String {
    let mut s = String::from("Registered problems:\n");
    for spec in registry() {
        let keys: Vec<&str> = spec.defaults.iter().map(|(k, _)| *k).collect();
        s.push_str(&format!(
            "  {:<10} {} [--set keys: {}]\n",
            spec.name,
            spec.description,
            keys.join(", ")
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use optctl_core::problems::problem_names;

    #[test]
    fn command_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults_apply() {
        let cli = Cli::try_parse_from(["optctl", "solve"]).unwrap();
        let Command::Solve(a) = cli.command;
        assert_eq!(a.problem, "rubella");
        assert_eq!(a.method, Method::Sweep);
        assert_eq!(a.steps, 3000);
        assert_eq!(a.tol, 1e-3);
        assert_eq!(a.grad_tol, 1e-6);
        assert_eq!(a.max_iter, None);
        assert_eq!(a.relax, 0.5);
        assert!(a.set.is_empty());
        assert_eq!(a.seed, 0);
    }

    #[test]
    fn repeated_overrides_are_collected() {
        let cli = Cli::try_parse_from([
            "optctl", "solve", "--set", "A=50", "--set", "b=0.02", "--method", "both",
        ])
        .unwrap();
        let Command::Solve(a) = cli.command;
        assert_eq!(a.set, vec!["A=50", "b=0.02"]);
        assert_eq!(a.method, Method::Both);
    }

    #[test]
    fn help_lists_problems() {
        let help = Cli::command()
            .find_subcommand_mut("solve")
            .unwrap()
            .render_help()
            .to_string();
        for name in problem_names() {
            assert!(help.contains(name));
        }
        for flag in [
            "--problem",
            "--method",
            "--steps",
            "--tol",
            "--grad-tol",
            "--max-iter",
            "--relax",
            "--set",
            "--out",
            "--report",
            "--seed",
        ] {
            assert!(help.contains(flag), "{flag}");
        }
    }
}
