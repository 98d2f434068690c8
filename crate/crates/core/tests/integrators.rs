use optctl_core::problems::rubella_problem;
use optctl_core::{dopri45, euler_forward, rk4_backward, rk4_forward, ControlGrid, RubellaParams, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn growth(_: f64, x: &[f64], _: &[f64], out: &mut [f64]) {
    out[0] = x[0];
}

fn final_error(step: fn(&TimeGrid) -> f64, n: usize) -> f64 {
    let grid = TimeGrid::new(0.0, 1.0, n).unwrap();
    (step(&grid) - std::f64::consts::E).abs()
}

fn rk4_final(grid: &TimeGrid) -> f64 {
    let ug = ControlGrid::zeros(grid, 1);
    rk4_forward(growth, &[1.0], &ug, grid).unwrap().last()[0]
}

fn euler_final(grid: &TimeGrid) -> f64 {
    let ug = ControlGrid::zeros(grid, 1);
    euler_forward(growth, &[1.0], &ug, grid).unwrap().last()[0]
}

fn observed_orders(step: fn(&TimeGrid) -> f64) -> Vec<f64> {
    let errs: Vec<f64> = [10, 20, 40, 80].iter().map(|&n| final_error(step, n)).collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn rk4_is_fourth_order_on_growth() {
    for order in observed_orders(rk4_final) {
        assert!((3.9..=4.1).contains(&order), "order {order}");
    }
}

#[test]
fn euler_is_first_order_on_growth() {
    let errs: Vec<f64> = [10, 20, 40, 80].iter().map(|&n| final_error(euler_final, n)).collect();
    for w in errs.windows(2) {
        let factor = w[0] / w[1];
        assert!((1.9..=2.1).contains(&factor), "halving factor {factor}");
        assert!((0.9..=1.1).contains(&factor.log2()));
    }
}

fn rubella_rk4_vs_dopri(u: fn(f64) -> f64) -> f64 {
    let (p, _) = rubella_problem(&RubellaParams::default()).unwrap();
    let grid = p.grid(3000).unwrap();
    let ug = ControlGrid::from_fn(&grid, 1, |t| vec![u(t)]);
    let rk = rk4_forward(|t, x, u, o| p.dynamics(t, x, u, o), p.x0(), &ug, &grid).unwrap();
    let dp = dopri45(
        |t, x, u, o| p.dynamics(t, x, u, o),
        p.x0(),
        |t| vec![u(t)],
        0.0,
        3.0,
        1e-11,
        1e-13,
    )
    .unwrap();
    rk.last()
        .iter()
        .zip(dp.final_state())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn rk4_matches_dormand_prince_on_rubella() {
    assert!(rubella_rk4_vs_dopri(|_| 0.0) <= 1e-5);
    assert!(rubella_rk4_vs_dopri(|_| 0.3) <= 1e-5);
    assert!(rubella_rk4_vs_dopri(|t| 0.45 * (1.0 + (2.0 * t).sin())) <= 1e-5);
}

#[test]
fn population_component_is_invariant_under_any_admissible_control() {
    let (p, _) = rubella_problem(&RubellaParams::default()).unwrap();
    let grid = p.grid(3000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let ug = ControlGrid::from_fn(&grid, 1, |_| vec![rng.random_range(0.0..=0.9)]);
        let traj = rk4_forward(|t, x, u, o| p.dynamics(t, x, u, o), p.x0(), &ug, &grid).unwrap();
        let dev = traj
            .values
            .column(3)
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-12, "x4 deviation {dev}");
    }
}

#[test]
fn uncontrolled_rubella_stays_in_envelope() {
    let (p, _) = rubella_problem(&RubellaParams::default()).unwrap();
    let grid = p.grid(3000).unwrap();
    let ug = ControlGrid::zeros(&grid, 1);
    let traj = rk4_forward(|t, x, u, o| p.dynamics(t, x, u, o), p.x0(), &ug, &grid).unwrap();
    assert!(traj.values.as_flat().iter().all(|v| (0.0..=1.05).contains(v)));
}

#[test]
fn backward_pass_reproduces_linear_adjoint() {
    let grid = TimeGrid::new(0.0, 3.0, 3000).unwrap();
    let ug = ControlGrid::zeros(&grid, 1);
    let traj = rk4_forward(|_, _, _, o: &mut [f64]| o[0] = 0.0, &[0.0], &ug, &grid).unwrap();
    let adj = rk4_backward(|_, _, _, _, o: &mut [f64]| o[0] = 0.7, &[0.0], &traj, &ug, &grid).unwrap();
    for (i, t) in grid.nodes().enumerate() {
        assert!((adj.row(i)[0] - 0.7 * (t - 3.0)).abs() <= 1e-12);
    }
}
