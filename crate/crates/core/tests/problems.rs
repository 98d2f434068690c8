use optctl_core::problems::{parse_override, problem_names, rubella_problem};
use optctl_core::{registry_lookup, rk4_forward, ControlGrid, RegistryError, RubellaParams, Scheme, StateTrajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn registry_contains_builtin_problems() {
    assert_eq!(registry_lookup("rubella").unwrap().name, "rubella");
    assert_eq!(registry_lookup("quadratic").unwrap().name, "quadratic");
    assert_eq!(problem_names(), vec!["rubella", "quadratic"]);
}

#[test]
fn unknown_problem_lists_available_names() {
    let err = registry_lookup("nosuch").unwrap_err();
    assert!(matches!(err, RegistryError::UnknownProblem { .. }));
    let msg = err.to_string();
    assert!(
        msg.contains("nosuch") && msg.contains("rubella") && msg.contains("quadratic"),
        "{msg}"
    );
}

#[test]
fn default_parameters_match_the_model() {
    let p = RubellaParams::default();
    assert_eq!((p.b, p.e, p.g_rec, p.p, p.q), (0.012, 36.5, 30.417, 0.65, 0.65));
    assert_eq!(
        (p.beta, p.a_weight, p.u_min, p.u_max, p.t_final),
        (527.59, 100.0, 0.0, 0.9, 3.0)
    );
    assert_eq!(p.x_init, [0.0555, 0.0003, 0.0004, 1.0]);
}

#[test]
fn susceptible_birth_term_uses_infectious_fraction() {
    let (p, _) = rubella_problem(&RubellaParams::default()).unwrap();
    let x = [0.1, 0.02, 0.05, 1.0];
    let mut out = [0.0; 4];
    p.dynamics(0.0, &x, &[0.2], &mut out);
    let expected = 0.012 - 0.012 * (0.65 * 0.02 + 0.65 * 0.05) - 0.012 * 0.1 - 527.59 * 0.1 * 0.05 - 0.2 * 0.1;
    assert!((out[0] - expected).abs() <= 1e-15);
    let expected2 = 0.012 * 0.65 * 0.02 + 527.59 * 0.1 * 0.05 - (36.5 + 0.012) * 0.02;
    assert!((out[1] - expected2).abs() <= 1e-15);
}

fn sample_problem(p: &optctl_core::OcProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = vec![0.0; p.n_states()];
    let mut all = Vec::new();
    for _ in 0..20 {
        let t = rng.random_range(0.0..=3.0);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..=1.0)).collect();
        let u = [rng.random_range(0.0..=0.9)];
        p.dynamics(t, &x, &u, &mut out);
        all.extend_from_slice(&out);
        all.push(p.running_cost(t, &x, &u));
    }
    all
}

#[test]
fn overriding_with_default_value_is_a_no_op() {
    let spec = registry_lookup("rubella").unwrap();
    let (a, _) = spec.build(&[]).unwrap();
    let (b, _) = spec.build(&[parse_override("A=100").unwrap()]).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let mut ra = ChaCha8Rng::seed_from_u64(5);
    let mut rb = ChaCha8Rng::seed_from_u64(5);
    assert_eq!(sample_problem(&a, &mut ra), sample_problem(&b, &mut rb));

    let (c, _) = spec.build(&[parse_override("A=50").unwrap()]).unwrap();
    let mut rc = ChaCha8Rng::seed_from_u64(5);
    let mut ra = ChaCha8Rng::seed_from_u64(5);
    assert_ne!(sample_problem(&a, &mut ra), sample_problem(&c, &mut rc));
}

#[test]
fn unknown_parameter_is_rejected() {
    let spec = registry_lookup("rubella").unwrap();
    assert!(matches!(
        spec.build(&[("zeta".into(), 1.0)]),
        Err(RegistryError::UnknownParameter { .. })
    ));
    assert!(parse_override("A").is_err());
    assert!(parse_override("A=abc").is_err());
}

#[test]
fn objective_quadrature_equals_augmented_terminal_state() {
    let (p, _) = rubella_problem(&RubellaParams::default()).unwrap();
    let mayer = p.to_mayer();
    let grid = p.grid(3000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let ug = ControlGrid::from_fn(&grid, 1, |_| vec![rng.random_range(0.0..=0.9)]);
        let aug = rk4_forward(|t, x, u, o| mayer.dynamics(t, x, u, o), mayer.x0(), &ug, &grid).unwrap();
        let orig = StateTrajectory {
            values: optctl_core::NodeValues::from_rows(
                &aug.values.iter_rows().map(|r| r[..4].to_vec()).collect::<Vec<_>>(),
            )
            .unwrap(),
            scheme: Scheme::Rk4,
        };
        let j = p.evaluate_objective(&orig, &ug, &grid).unwrap();
        assert!((j - aug.last()[4]).abs() <= 1e-6, "{} vs {}", j, aug.last()[4]);
        assert_eq!(mayer.evaluate_objective(&aug, &ug, &grid).unwrap(), aug.last()[4]);
    }
}
