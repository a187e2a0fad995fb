//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest
//! harness so the lines always reach stdout.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use zermelo_vortex::classify::{self, abnormal_angles, alpha_stars, fate, phi, Fate};
use zermelo_vortex::flow::{self, endpoint, exponential, exponential_sampled, hamiltonian, StopReason};
use zermelo_vortex::homotopy::SplittingCurve;
use zermelo_vortex::jacobi::conjugate_test;
use zermelo_vortex::jacobi::conjugate_scan;
use zermelo_vortex::shooting::{solve_all, ShootingProblem};
use zermelo_vortex::synthesis::{self, cut_locus, distance_to_curve, sphere_and_ball, BallType};
use zermelo_vortex::{Tolerances, VortexProblem};

// Criterion 1.
const SHOOT_TOL: f64 = 0.005;
const SHOOT_TOL_2DIGIT: f64 = 0.01;
const SHOOT_BUDGET: Duration = Duration::from_secs(5);
// Criterion 2.
const T_INJ: f64 = 2.889;
const T_INJ_TOL: f64 = 0.01;
const T_VOR_TOL: f64 = 1e-6;
const CUT_BUDGET: Duration = Duration::from_secs(120);
// Criterion 3.
const SCAN_N: usize = 1000;
const SCAN_T_MAX: f64 = 50.0;
const SCAN_SAMPLES: usize = 500;
const PLATEAU_TOL: f64 = 0.05;
const LAMBDA_SIGMA: f64 = 1e-3;
const SCAN_BUDGET: Duration = Duration::from_secs(300);
// Criterion 4.
const N_RANDOM: usize = 200;
const CONS_T: f64 = 20.0;
const H_REL: f64 = 1e-9;
const P_THETA_TOL: f64 = 1e-12;
const LEMMA4_TOL: f64 = 1e-8;
// Criterion 5.
const FATE_GRID: usize = 500;
const FATE_BOUNDARY: f64 = 1e-6;
const FATE_T: f64 = 1e4;
// Criterion 6.
const CLOSED_FORM_TOL: f64 = 1e-7;
const REEB_REL: f64 = 1e-6;
const SEPARATRIX_MARGIN: f64 = 1e-3;
// Criterion 7.
const ROTATION_TOL: f64 = 1e-9;
const SCALING_REL: f64 = 1e-8;
const N_SCALING: usize = 50;
const REFLECTION_TOL: f64 = 1e-8;
// Criterion 8.
const SINGULAR_TOL: f64 = 1e-4;
const B_TO_C: f64 = 3.0;
const B_TO_C_TOL: f64 = 0.02;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn synthesis_problem() -> VortexProblem {
    VortexProblem::new(1.8, [3.0, 0.0]).unwrap()
}

/// Sigma-1 and the time its continuation took, computed once.
fn sigma1() -> &'static (SplittingCurve, Duration) {
    static CELL: OnceLock<(SplittingCurve, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let c = cut_locus(&synthesis_problem()).expect("cut locus");
        (c, start.elapsed())
    })
}

fn shooting_regression() -> Verdict {
    let cases = [
        (4.0, [-2.0, 0.0], 1.641, SHOOT_TOL),
        (4.0, [2.5, 0.0], 2.821, SHOOT_TOL),
        (1.0, [-2.0, 0.0], 2.826, SHOOT_TOL),
        (1.0, [2.5, 0.0], 0.56, SHOOT_TOL_2DIGIT),
    ];
    let start = Instant::now();
    let mut pass = true;
    let mut found = vec![];
    for (mu, xf, want, tol) in cases {
        let sp = ShootingProblem::new(VortexProblem::new(mu, [2.0, 0.0]).unwrap(), xf).unwrap();
        match solve_all(&sp, 16) {
            Ok(sols) if !sols.is_empty() => {
                let t = sols[0].t;
                pass &= (t - want).abs() <= tol;
                found.push(format!("{t:.5}"));
            }
            _ => {
                pass = false;
                found.push("none".into());
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < SHOOT_BUDGET;
    verdict(pass, format!("T = [{}] in {:.2?}", found.join(", "), elapsed))
}

fn injectivity_radius() -> Verdict {
    let (c, elapsed) = sigma1();
    let t_inj = c.min_t();
    let t_vor = synthesis::t_vor(&synthesis_problem());
    let pass = (t_inj - T_INJ).abs() <= T_INJ_TOL && (t_vor - 3.0).abs() <= T_VOR_TOL && *elapsed < CUT_BUDGET;
    verdict(pass, format!("t_inj = {t_inj:.5}, t_vor = {t_vor}, continuation {elapsed:.2?}"))
}

fn conjugate_evidence() -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut notes = vec![];
    for (name, mu, r0) in [("weak", 2.0, 8.0 / 3.0), ("strong", 2.0, 1.0)] {
        let p = VortexProblem::new(mu, [r0, 0.0]).unwrap();
        let scan = conjugate_scan(&p, SCAN_N, SCAN_T_MAX, SCAN_SAMPLES).unwrap();
        let zeros = scan.conjugate_count();
        let failures = scan.failures().len();
        pass &= zeros == 0 && failures == 0;

        // Plateaus: escaping geodesics well away from the circle, the
        // separatrix, and geodesics stopped at the inner radius.
        let (mut theta_worst, mut lambda_worst, mut n_theta, mut n_lambda) = (0.0f64, 0.0f64, 0, 0);
        for test in scan.tests.iter().flatten() {
            let f = fate(test.alpha, r0, mu);
            let r_end = endpoint(&p, test.alpha, test.t_stop).unwrap().1.r;
            if f == Fate::ToInfinity && r_end >= 10.0 * 2.0 * mu.abs() {
                theta_worst = theta_worst.max((test.sigma_end - 1.0).abs());
                n_theta += 1;
            }
            if f == Fate::ToVortex && test.stop_reason == StopReason::HitInnerRadius {
                lambda_worst = lambda_worst.max(test.sigma_end);
                n_lambda += 1;
            }
        }
        let sep = classify::separatrix_alpha(r0, mu).unwrap();
        let sep_sigma = conjugate_test(&p, sep, SCAN_T_MAX, SCAN_SAMPLES).unwrap().sigma_end;
        pass &= n_theta > 0 && theta_worst <= PLATEAU_TOL;
        pass &= n_lambda > 0 && lambda_worst < LAMBDA_SIGMA;
        pass &= (sep_sigma - 0.5).abs() <= PLATEAU_TOL;
        notes.push(format!(
            "{name}: {zeros} conjugate, {failures} failed, theta |s-1| <= {theta_worst:.3} ({n_theta}), \
             separatrix s = {sep_sigma:.4}, lambda s <= {lambda_worst:.1e} ({n_lambda})"
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < SCAN_BUDGET;
    verdict(pass, format!("{} in {elapsed:.2?}", notes.join("; ")))
}

fn random_instance(rng: &mut StdRng) -> (VortexProblem, f64) {
    let r0 = rng.random_range(0.5..5.0);
    let th = rng.random_range(-PI..PI);
    let mut mu: f64 = rng.random_range(0.1..4.0);
    if rng.random_bool(0.5) {
        mu = -mu;
    }
    let alpha = rng.random_range(0.0..2.0 * PI);
    (VortexProblem::new(mu, [r0 * th.cos(), r0 * th.sin()]).unwrap(), alpha)
}

fn conservation() -> Verdict {
    let mut rng = StdRng::seed_from_u64(20);
    let (mut h_worst, mut pt_worst, mut l4_worst) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..N_RANDOM {
        let (p, alpha) = random_instance(&mut rng);
        let traj = exponential(&p, alpha, CONS_T).unwrap();
        let (_, z0) = traj.samples[0];
        let h0 = hamiltonian(&z0, p.mu);
        for (_, z) in &traj.samples {
            // Relative to the summands of H, which grow like r^-2 at the vortex
            // and cancel there.
            let scale = (z.p_theta * p.mu / (z.r * z.r)).abs() + z.costate_norm();
            h_worst = h_worst.max((hamiltonian(z, p.mu) - h0).abs() / scale);
            pt_worst = pt_worst.max((z.p_theta - z0.p_theta).abs());
            // Relative to the size of p_r^2, which grows like r^-4 at the vortex.
            let ph = phi(z.r, z0.p_theta, p.r0(), p.mu);
            l4_worst = l4_worst.max((z.p_r * z.p_r - ph).abs() / (z.p_r * z.p_r).max(1.0));
        }
    }
    let pass = h_worst <= H_REL && pt_worst <= P_THETA_TOL && l4_worst <= LEMMA4_TOL;
    verdict(
        pass,
        format!("{N_RANDOM} geodesics: H drift {h_worst:.1e}, p_theta drift {pt_worst:.1e}, lemma-4 residual {l4_worst:.1e}"),
    )
}

fn is_boundary(alpha: f64, r0: f64, mu: f64) -> bool {
    let (a1, a2) = alpha_stars(r0, mu);
    let mut marks = vec![a1, a2];
    marks.extend(abnormal_angles(r0, mu).to_vec());
    marks.iter().any(|&m| {
        let d = (alpha - m).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d) < FATE_BOUNDARY
    })
}

fn fate_oracle() -> Verdict {
    let instances = [
        ("weak", 3.0, 1.8),
        ("weak", 8.0 / 3.0, 2.0),
        ("weak outside", 5.0, 1.0),
        ("moderate", 2.0, 2.0),
        ("strong", 1.0, 2.0),
    ];
    let tol = Tolerances { r_max: 1e3, ..Tolerances::default() };
    let (mut agree, mut total, mut skipped) = (0, 0, 0);
    let mut bad = vec![];
    for (_, r0, mu_abs) in instances {
        for mu in [mu_abs, -mu_abs] {
            let p = VortexProblem::with_tol(mu, [r0, 0.0], tol).unwrap();
            for i in 0..FATE_GRID {
                let alpha = 2.0 * PI * i as f64 / FATE_GRID as f64;
                if is_boundary(alpha, r0, mu) {
                    skipped += 1;
                    continue;
                }
                total += 1;
                let want = match fate(alpha, r0, mu) {
                    Fate::ToVortex => StopReason::HitInnerRadius,
                    Fate::ToInfinity => StopReason::HitOuterRadius,
                    _ => StopReason::ReachedTime,
                };
                let got = endpoint(&p, alpha, FATE_T).map(|e| e.2);
                if got.as_ref().ok() == Some(&want) {
                    agree += 1;
                } else if bad.len() < 5 {
                    bad.push(format!("(r0={r0:.3}, mu={mu}, alpha={alpha:.4}: {got:?})"));
                }
            }
        }
    }
    verdict(
        agree == total,
        format!("{agree}/{total} agree, {skipped} boundary directions skipped {}", bad.join(" ")),
    )
}

/// Inverts the separatrix time primitive by bisection on `(r0, 2|mu|)`.
fn separatrix_radius(t: f64, r0: f64, mu: f64) -> f64 {
    let (mut lo, mut hi) = (r0, 2.0 * mu.abs());
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if classify::separatrix_time(mid, r0, mu).unwrap() < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

fn closed_forms() -> Verdict {
    // Abnormal radius on strong-drift instances, both abnormal directions.
    let mut ab_worst = 0.0f64;
    for (r0, mu) in [(1.0, 2.0), (1.0, -2.0), (0.5, 3.0), (1.5, -2.5)] {
        let p = VortexProblem::new(mu, [r0, 0.0]).unwrap();
        for alpha in abnormal_angles(r0, mu).to_vec() {
            let t_lim = flow::abnormal_time_limit(r0, alpha).unwrap();
            let times: Vec<f64> = (1..=400).map(|k| t_lim * k as f64 / 401.0).collect();
            let traj = exponential_sampled(&p, alpha, &times).unwrap();
            for (t, z) in &traj.samples {
                if *t < t_lim {
                    ab_worst = ab_worst.max((flow::abnormal_radius(*t, r0, alpha).unwrap() - z.r).abs());
                }
            }
        }
    }

    // Separatrices inside the Reeb disk: radius and polar angle against the
    // closed forms at equal times, and the level-set function along them.
    // The radius creeps up to 2|mu| along an unstable circle, so the domain
    // stops at SEPARATRIX_MARGIN below it.
    let (mut sep_worst, mut reeb_worst) = (0.0f64, 0.0f64);
    for (r0, mu) in [(8.0 / 3.0, 2.0), (8.0 / 3.0, -2.0), (1.0, 2.0), (3.0, 1.8), (0.5, -0.6)] {
        let p = VortexProblem::new(mu, [r0, 0.0]).unwrap();
        let alpha = classify::separatrix_alpha(r0, mu).unwrap();
        let m = mu.abs();
        let t_end = classify::separatrix_time(2.0 * m * (1.0 - SEPARATRIX_MARGIN), r0, mu).unwrap();
        let times: Vec<f64> = (1..=400).map(|k| t_end * k as f64 / 400.0).collect();
        let traj = exponential_sampled(&p, alpha, &times).unwrap();
        let f0 = classify::reeb_F(r0, 0.0, mu).unwrap();
        for (t, z) in &traj.samples {
            let r_cf = separatrix_radius(*t, r0, mu);
            let th_cf = classify::separatrix_theta(r_cf, r0, mu).unwrap();
            sep_worst = sep_worst.max((r_cf - z.r).abs()).max((th_cf - z.theta).abs());
            let f = classify::reeb_F(z.r, z.theta, mu).unwrap();
            reeb_worst = reeb_worst.max((f - f0).abs() / f0.abs());
        }
    }
    let pass = ab_worst <= CLOSED_FORM_TOL && sep_worst <= CLOSED_FORM_TOL && reeb_worst <= REEB_REL;
    verdict(
        pass,
        format!("abnormal radius {ab_worst:.1e}, separatrix r/theta {sep_worst:.1e}, level set {reeb_worst:.1e}"),
    )
}

fn rotate(x: [f64; 2], a: f64) -> [f64; 2] {
    let (s, c) = a.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1]]
}

fn value_of(mu: f64, x0: [f64; 2], xf: [f64; 2]) -> Option<f64> {
    let p = VortexProblem::new(mu, x0).ok()?;
    synthesis::value(&p, xf, None, 16).ok().map(|v| v.0)
}

fn symmetries() -> Verdict {
    let mut rng = StdRng::seed_from_u64(7);
    let mut pass = true;

    // Rotation of the shooting examples.
    let mut rot_worst = 0.0f64;
    for (mu, xf) in [(4.0, [-2.0, 0.0]), (4.0, [2.5, 0.0]), (1.0, [-2.0, 0.0]), (1.0, [2.5, 0.0])] {
        let base = value_of(mu, [2.0, 0.0], xf);
        for _ in 0..3 {
            let a = rng.random_range(-PI..PI);
            let rot = value_of(mu, rotate([2.0, 0.0], a), rotate(xf, a));
            match (base, rot) {
                (Some(b), Some(r)) => rot_worst = rot_worst.max((b - r).abs()),
                _ => pass = false,
            }
        }
    }

    // Dilatation on random weak-drift instances.
    let mut scale_worst = 0.0f64;
    let mut n_ok = 0;
    for _ in 0..N_SCALING {
        let r0 = rng.random_range(1.0..3.0);
        let mu = rng.random_range(0.2..0.8) * r0 * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let rf = rng.random_range(1.0..4.0);
        let thf = rng.random_range(-PI..PI);
        let xf = [rf * thf.cos(), rf * thf.sin()];
        let lam = rng.random_range(0.3..3.0);
        let v = value_of(mu, [r0, 0.0], xf);
        let vl = value_of(lam * mu, [lam * r0, 0.0], [lam * xf[0], lam * xf[1]]);
        match (v, vl) {
            (Some(v), Some(vl)) => {
                scale_worst = scale_worst.max((vl - lam * v).abs() / (lam * v));
                n_ok += 1;
            }
            _ => pass = false,
        }
    }

    // Reflection: backward flow from the reflected covector retraces the
    // mirror image of the forward geodesic.
    let mut refl_worst = 0.0f64;
    let tol = Tolerances::default();
    for _ in 0..20 {
        let (p, alpha) = random_instance(&mut rng);
        let z0 = flow::initial_state(&p, alpha);
        let times: Vec<f64> = (1..=20).map(|k| 0.25 * k as f64).collect();
        let fwd = exponential_sampled(&p, alpha, &times).unwrap();
        let mut zr = z0;
        zr.p_r = -z0.p_r;
        for (t, z) in &fwd.samples {
            if fwd.stop_reason != StopReason::ReachedTime && *t >= fwd.t_end() {
                continue;
            }
            let (_, zb, stop) = flow::flow_state(p.mu, &zr, -t, &tol).unwrap();
            if stop != StopReason::ReachedTime {
                continue;
            }
            // Mirror of the forward point across the axis through x0.
            let mirror = rotate([z.position()[0], -z.position()[1]], 2.0 * z0.theta);
            let xb = zb.position();
            refl_worst = refl_worst.max((xb[0] - mirror[0]).hypot(xb[1] - mirror[1]));
        }
    }
    pass &= rot_worst <= ROTATION_TOL && n_ok == N_SCALING && scale_worst <= SCALING_REL && refl_worst <= REFLECTION_TOL;
    verdict(
        pass,
        format!("rotation {rot_worst:.1e}, dilatation {scale_worst:.1e} over {n_ok} instances, reflection {refl_worst:.1e}"),
    )
}

fn ball_milestones() -> Verdict {
    let p = synthesis_problem();
    let (c, _) = sigma1();
    let ty = |t: f64| sphere_and_ball(&p, t, c).unwrap().ball_type;
    let before = ty(2.88);
    let after = ty(2.90);
    let a_to_b = before == BallType::A && after == BallType::B;
    let b_side = ty(B_TO_C - B_TO_C_TOL);
    let c_side = ty(B_TO_C + B_TO_C_TOL);
    let b_to_c = b_side == BallType::B && c_side == BallType::C;
    let s35 = sphere_and_ball(&p, 3.5, c).unwrap();
    let d = s35
        .singular_points
        .iter()
        .map(|q| distance_to_curve(c, q.x))
        .fold(f64::INFINITY, f64::min);
    let pass = a_to_b && b_to_c && s35.ball_type == BallType::C && s35.singular_points.len() == 1 && d <= SINGULAR_TOL;
    verdict(
        pass,
        format!(
            "2.88 {before:?}, 2.90 {after:?}, {:.2} {b_side:?}, {:.2} {c_side:?}, 3.5 {:?} with {} singular point(s) at distance {d:.1e}",
            B_TO_C - B_TO_C_TOL,
            B_TO_C + B_TO_C_TOL,
            s35.ball_type,
            s35.singular_points.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("shooting regression", shooting_regression),
        ("injectivity radius", injectivity_radius),
        ("conjugate-locus evidence", conjugate_evidence),
        ("conservation", conservation),
        ("fate vs integration", fate_oracle),
        ("closed forms", closed_forms),
        ("symmetries", symmetries),
        ("ball topology", ball_milestones),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.1?})",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
