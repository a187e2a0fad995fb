use std::f64::consts::PI;

use proptest::prelude::*;
use zermelo_vortex::flow::{
    compactified_rhs, endpoint, exponential_sampled, initial_state, CompactifiedState, StopReason,
};
use zermelo_vortex::flow::cartesian_rhs;
use zermelo_vortex::ode::{integrate, solve, Control, OdeOptions};
use zermelo_vortex::VortexProblem;

fn tight() -> OdeOptions {
    OdeOptions::with_tol(1e-13, 1e-13)
}

#[test]
fn cartesian_and_polar_flows_agree() {
    for (mu, x0, alpha) in [(1.0, [2.0, 0.0], 0.7), (-1.5, [0.5, 1.8], 2.2), (0.3, [-3.0, -1.0], 4.0)] {
        let p = VortexProblem::new(mu, x0).unwrap();
        let z0 = initial_state(&p, alpha);
        let pc = z0.cartesian_costate();
        let y0 = [x0[0], x0[1], pc[0], pc[1]];
        for t in [0.5, 1.0, 2.0] {
            let (_, z, stop) = endpoint(&p, alpha, t).unwrap();
            assert_eq!(stop, StopReason::ReachedTime);
            let y = solve(|_, y: &[f64; 4]| cartesian_rhs(y, mu), 0.0, y0, t, &tight()).unwrap();
            let x = z.position();
            assert!((x[0] - y[0]).hypot(x[1] - y[1]) < 1e-9, "mu={mu} t={t}");
            let q = z.cartesian_costate();
            assert!((q[0] - y[2]).hypot(q[1] - y[3]) < 1e-8);
        }
    }
}

#[test]
fn rotation_commutes_with_the_flow() {
    let (mu, alpha, t) = (1.3, 1.1, 2.5);
    let base = endpoint(&VortexProblem::new(mu, [2.0, 0.0]).unwrap(), alpha, t).unwrap().1;
    for phi in [0.4, -2.0, 3.0] {
        let x0 = [2.0 * f64::cos(phi), 2.0 * f64::sin(phi)];
        let z = endpoint(&VortexProblem::new(mu, x0).unwrap(), alpha, t).unwrap().1;
        assert!((z.r - base.r).abs() < 1e-11);
        assert!((z.theta - base.theta - phi).abs() < 1e-10);
    }
}

#[test]
fn dilatation_scales_geodesics() {
    // (x0, mu, t) -> (l x0, l mu, l t) maps geodesics onto scaled copies.
    let (mu, x0, alpha) = (0.8, [1.5, 0.5], 2.0);
    let base = endpoint(&VortexProblem::new(mu, x0).unwrap(), alpha, 1.7).unwrap().1;
    for l in [0.25, 3.0] {
        let p = VortexProblem::new(l * mu, [l * x0[0], l * x0[1]]).unwrap();
        let z = endpoint(&p, alpha, l * 1.7).unwrap().1;
        assert!((z.r - l * base.r).abs() < 1e-10 * l);
        assert!((z.theta - base.theta).abs() < 1e-10);
    }
}

#[test]
fn compactified_flow_retraces_the_geodesic() {
    let (mu, alpha) = (1.2, 2.4);
    let p = VortexProblem::new(mu, [2.0, 0.0]).unwrap();
    let c0 = CompactifiedState::from_extremal(&initial_state(&p, alpha), mu);
    // State (r, theta, p_r, x, t): the last slot integrates dt/ds.
    let rhs = |_: f64, y: &[f64; 5]| {
        let c = CompactifiedState { x: y[3], ..c0.with_coords(y[0], y[1], y[2]) };
        let d = compactified_rhs(&c);
        [d[0], d[1], d[2], d[3], c.time_rate()]
    };
    let y0 = [c0.r, c0.theta, c0.p_r, 1.0, 0.0];
    let mut states = vec![];
    integrate(rhs, 0.0, y0, 2e-2 * c0.time_rate().signum(), &tight(), |s| {
        states.push(s.y1);
        Control::Continue
    })
    .unwrap();
    let times: Vec<f64> = states.iter().map(|y| y[4].abs()).filter(|t| *t > 1e-6).collect();
    assert!(times.len() > 5);
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let traj = exponential_sampled(&p, alpha, &sorted).unwrap();
    let mut checked = 0;
    for y in &states {
        let t = y[4].abs();
        let Some((_, z)) = traj.samples.iter().find(|s| s.0 == t) else { continue };
        checked += 1;
        assert!((z.r - y[0]).abs() < 1e-9 * (1.0 + z.r));
        assert!((z.theta - y[1]).abs() < 1e-9);
        let k1 = c0.with_coords(y[0], y[1], y[2]).quadrature();
        assert!((k1 - c0.k1).abs() < 1e-9 * (1.0 + c0.k1.abs()));
    }
    assert!(checked > 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mirror_instance_reflects_geodesics(mu in 0.1..3.0f64, r0 in 0.5..4.0f64, alpha in 0.0..2.0 * PI, t in 0.1..3.0f64) {
        // (mu, alpha) and (-mu, -alpha) from a point on the x1 axis are mirror
        // images across that axis.
        let a = endpoint(&VortexProblem::new(mu, [r0, 0.0]).unwrap(), alpha, t).unwrap();
        let b = endpoint(&VortexProblem::new(-mu, [r0, 0.0]).unwrap(), -alpha, t).unwrap();
        prop_assert_eq!(a.2, b.2);
        prop_assert!((a.1.r - b.1.r).abs() < 1e-9 * (1.0 + a.1.r));
        prop_assert!((a.1.theta + b.1.theta).abs() < 1e-8);
    }

    #[test]
    fn radius_stays_within_stop_bounds(mu in -3.0..3.0f64, r0 in 0.2..4.0f64, alpha in 0.0..2.0 * PI) {
        let p = VortexProblem::new(mu, [r0, 0.0]).unwrap();
        let (t, z, stop) = endpoint(&p, alpha, 30.0).unwrap();
        prop_assert!(t <= 30.0);
        match stop {
            StopReason::ReachedTime => prop_assert!(z.r > p.tol.r_min && z.r < p.tol.r_max),
            StopReason::HitInnerRadius => prop_assert!(z.r < 1.01 * p.tol.r_min),
            StopReason::HitOuterRadius => prop_assert!((z.r - p.tol.r_max).abs() < 1e-6 * p.tol.r_max),
        }
    }
}
