use zermelo_vortex::flow::cartesian_rhs;
use zermelo_vortex::model::{feasible_transfer_time, CartesianState};
use zermelo_vortex::ode::{solve, OdeOptions};
use zermelo_vortex::shooting::{solve_all, ShootingProblem};
use zermelo_vortex::flow::initial_state;
use zermelo_vortex::VortexProblem;

const CASES: [(f64, [f64; 2]); 6] = [
    (4.0, [-2.0, 0.0]),
    (4.0, [2.5, 0.0]),
    (1.0, [-2.0, 0.0]),
    (1.0, [2.5, 0.0]),
    (-1.5, [0.5, 1.5]),
    (0.3, [3.0, -2.0]),
];

#[test]
fn solutions_survive_tighter_reintegration() {
    for (mu, xf) in CASES {
        let p = VortexProblem::new(mu, [2.0, 0.0]).unwrap();
        let sp = ShootingProblem::new(p, xf).unwrap();
        let sols = solve_all(&sp, 16).unwrap();
        assert!(!sols.is_empty(), "mu={mu} xf={xf:?}");
        for b in &sols {
            // Independent Cartesian integration at a hundredth of the tolerance.
            let z0 = initial_state(&p, b.alpha);
            let q = z0.cartesian_costate();
            let opts = OdeOptions::with_tol(p.tol.rtol / 100.0, p.tol.atol / 100.0);
            let y = solve(|_, y: &[f64; 4]| cartesian_rhs(y, mu), 0.0, [2.0, 0.0, q[0], q[1]], b.t, &opts);
            let Ok(y) = y else { continue };
            let miss = (y[0] - xf[0]).hypot(y[1] - xf[1]);
            assert!(miss < 1e-8, "mu={mu} xf={xf:?} T={} miss {miss:e}", b.t);
        }
    }
}

#[test]
fn value_is_below_the_feasible_transfer() {
    for (mu, xf) in CASES {
        let p = VortexProblem::new(mu, [2.0, 0.0]).unwrap();
        let sols = solve_all(&ShootingProblem::new(p, xf).unwrap(), 16).unwrap();
        let bound =
            feasible_transfer_time(&CartesianState::from([2.0, 0.0]), &CartesianState::from(xf), mu).unwrap();
        assert!(sols[0].t <= bound + 1e-9, "mu={mu} xf={xf:?} T={} bound={bound}", sols[0].t);
    }
}

#[test]
fn start_equal_to_target_costs_nothing() {
    let p = VortexProblem::new(-0.7, [1.0, 1.0]).unwrap();
    let sols = solve_all(&ShootingProblem::new(p, [1.0, 1.0]).unwrap(), 4).unwrap();
    assert_eq!(sols[0].t, 0.0);
}

#[test]
fn residuals_are_reported_small() {
    let p = VortexProblem::new(1.0, [2.0, 0.0]).unwrap();
    for b in solve_all(&ShootingProblem::new(p, [-2.0, 0.0]).unwrap(), 16).unwrap() {
        assert!(b.residual < 1e-9);
        assert!((b.endpoint[0] + 2.0).hypot(b.endpoint[1]) < 1e-9);
    }
}
