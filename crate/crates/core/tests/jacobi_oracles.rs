use proptest::prelude::*;
use zermelo_vortex::flow::{endpoint, StopReason};
use zermelo_vortex::jacobi::{cartesian_delta, jacobi_sampled};
use zermelo_vortex::VortexProblem;

// Central difference of the end point in alpha.
fn fd_delta(p: &VortexProblem, alpha: f64, t: f64, h: f64) -> Option<[f64; 2]> {
    let (_, zp, sp) = endpoint(p, alpha + h, t).ok()?;
    let (_, zm, sm) = endpoint(p, alpha - h, t).ok()?;
    if sp != StopReason::ReachedTime || sm != StopReason::ReachedTime {
        return None;
    }
    let (a, b) = (zp.position(), zm.position());
    Some([(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)])
}

#[test]
fn field_starts_at_zero() {
    let p = VortexProblem::new(1.0, [2.0, 0.0]).unwrap();
    let (s, _) = jacobi_sampled(&p, 0.4, &[0.0, 1e-8]).unwrap();
    let d = cartesian_delta(&s[0].1, &s[0].2);
    assert!(d[0].hypot(d[1]) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn field_matches_finite_differences(
        mu in -2.5..2.5f64,
        r0 in 0.5..3.0f64,
        alpha in 0.0..std::f64::consts::TAU,
        t in 0.2..4.0f64,
    ) {
        let p = VortexProblem::new(mu, [r0, 0.0]).unwrap();
        let (s, stop) = jacobi_sampled(&p, alpha, &[t]).unwrap();
        prop_assume!(stop == StopReason::ReachedTime);
        let fd = fd_delta(&p, alpha, t, 1e-5);
        prop_assume!(fd.is_some());
        let fd = fd.unwrap();
        let (_, z, dz) = s.last().unwrap();
        prop_assume!(z.r > 0.05);
        let d = cartesian_delta(z, dz);
        let scale = d[0].hypot(d[1]).max(1e-3);
        prop_assert!((d[0] - fd[0]).hypot(d[1] - fd[1]) / scale < 1e-5,
            "field {:?} differences {:?}", d, fd);
    }
}
