//! Jacobi fields along extremals and the conjugate-point test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VzError};
use crate::flow::{initial_state, polar_rhs, run, ExtremalState, StopReason};
use crate::model::{Tolerances, VortexProblem};

/// Linearization of the extremal vector field applied to `dz`.
pub fn variational_rhs(z: &ExtremalState, dz: &[f64; 4], mu: f64) -> [f64; 4] {
    let (r, pr, pt) = (z.r, z.p_r, z.p_theta);
    let r2 = r * r;
    let r3 = r2 * r;
    let n = (pr * pr + pt * pt / r2).sqrt();
    let n3 = n * n * n;
    let g = pt / n;
    // Partial derivatives of g = p_theta / |p|_r.
    let g_r = pt.powi(3) / (r3 * n3);
    let g_pr = -pt * pr / n3;
    let g_pt = 1.0 / n - pt * pt / (r2 * n3);

    let f1_r = pr * pt * pt / (r3 * n3);
    let f1_pr = 1.0 / n - pr * pr / n3;
    let f1_pt = -pr * pt / (r2 * n3);

    let f2_r = -2.0 * (mu + g) / r3 + g_r / r2;
    let f2_pr = g_pr / r2;
    let f2_pt = g_pt / r2;

    let f3_r = -3.0 * pt * (2.0 * mu + g) / (r2 * r2) + pt * g_r / r3;
    let f3_pr = pt * g_pr / r3;
    let f3_pt = (2.0 * mu + g) / r3 + pt * g_pt / r3;

    let [dr, _, dpr, dpt] = *dz;
    [
        f1_r * dr + f1_pr * dpr + f1_pt * dpt,
        f2_r * dr + f2_pr * dpr + f2_pt * dpt,
        f3_r * dr + f3_pr * dpr + f3_pt * dpt,
        0.0,
    ]
}

#[inline]
pub(crate) fn joint_rhs(y: &[f64; 8], mu: f64) -> [f64; 8] {
    let z = ExtremalState::from_array(&y[..4]);
    let f = polar_rhs(&[y[0], y[1], y[2], y[3]], mu);
    let dz = [y[4], y[5], y[6], y[7]];
    let d = variational_rhs(&z, &dz, mu);
    [f[0], f[1], f[2], f[3], d[0], d[1], d[2], d[3]]
}

/// Derivative of the initial phase point with respect to `alpha`.
pub fn alpha_field(alpha: f64, r0: f64) -> [f64; 4] {
    [0.0, 0.0, -alpha.sin(), r0 * alpha.cos()]
}

pub(crate) fn joint_initial(problem: &VortexProblem, alpha: f64) -> [f64; 8] {
    let z = initial_state(problem, alpha).to_array();
    let d = alpha_field(alpha, problem.r0());
    [z[0], z[1], z[2], z[3], d[0], d[1], d[2], d[3]]
}

/// Cartesian velocity of the geodesic at `z`.
pub fn cartesian_velocity(z: &ExtremalState, mu: f64) -> [f64; 2] {
    let f = polar_rhs(&z.to_array(), mu);
    let (s, c) = z.theta.sin_cos();
    [c * f[0] - z.r * s * f[1], s * f[0] + z.r * c * f[1]]
}

/// Cartesian image of a polar state perturbation at `z`.
pub fn cartesian_delta(z: &ExtremalState, dz: &[f64; 4]) -> [f64; 2] {
    let (s, c) = z.theta.sin_cos();
    [c * dz[0] - z.r * s * dz[1], s * dz[0] + z.r * c * dz[1]]
}

/// Smallest singular value of the 2x2 matrix with columns `u`, `v`.
pub fn sigma_min_2x2(u: [f64; 2], v: [f64; 2]) -> f64 {
    let det = (u[0] * v[1] - u[1] * v[0]).abs();
    let s = u[0] * u[0] + u[1] * u[1] + v[0] * v[0] + v[1] * v[1];
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let smax = ((s + disc) / 2.0).sqrt();
    if smax == 0.0 {
        0.0
    } else {
        det / smax
    }
}

struct Probe {
    det: f64,
    sigma: f64,
}

fn probe(y: &[f64; 8], mu: f64) -> Probe {
    let z = ExtremalState::from_array(&y[..4]);
    let u = cartesian_velocity(&z, mu);
    let v = cartesian_delta(&z, &[y[4], y[5], y[6], y[7]]);
    let nv = v[0].hypot(v[1]);
    let det = u[0] * v[1] - u[1] * v[0];
    let sigma = if nv > 0.0 {
        sigma_min_2x2(u, [v[0] / nv, v[1] / nv])
    } else {
        0.0
    };
    Probe { det, sigma }
}

/// Geodesic and its alpha-Jacobi field sampled at the given times.
pub fn jacobi_sampled(
    problem: &VortexProblem,
    alpha: f64,
    times: &[f64],
) -> Result<(Vec<(f64, ExtremalState, [f64; 4])>, StopReason)> {
    let t_end = times.last().copied().unwrap_or(0.0);
    let mu = problem.mu;
    let out = run(
        |_, y: &[f64; 8]| joint_rhs(y, mu),
        joint_initial(problem, alpha),
        t_end,
        &problem.tol,
        |y: &[f64; 8]| y[0],
        false,
        times,
    )?;
    let v = out
        .samples
        .iter()
        .map(|(t, y)| (*t, ExtremalState::from_array(&y[..4]), [y[4], y[5], y[6], y[7]]))
        .collect();
    Ok((v, out.stop))
}

/// Geodesic end point and alpha-Jacobi field at time `t`.
pub(crate) fn jacobi_at(
    mu: f64,
    y0: [f64; 8],
    t: f64,
    tol: &Tolerances,
) -> Result<(f64, [f64; 8], StopReason)> {
    let out = run(
        |_, y: &[f64; 8]| joint_rhs(y, mu),
        y0,
        t,
        tol,
        |y: &[f64; 8]| y[0],
        false,
        &[],
    )?;
    Ok((out.t, out.y, out.stop))
}

/// Times below this are ignored when looking for sign changes of the
/// determinant, which vanishes at the start by construction.
pub const INITIAL_WINDOW: f64 = 1e-3;
const BISECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugateTest {
    pub alpha: f64,
    /// `(t, sigma_min)` on the sampling grid, plus the stop point.
    pub sigma: Vec<(f64, f64)>,
    pub first_zero: Option<f64>,
    pub stop_reason: StopReason,
    pub t_stop: f64,
    /// `sigma_min` at the last reached time.
    pub sigma_end: f64,
}

/// Samples `sigma_min(t)` on `n_samples` uniform times in `(0, t_max]` and
/// locates the first sign change of `det(xdot, dx)` after the initial window.
/// Times past a stop event are not sampled.
pub fn conjugate_test(
    problem: &VortexProblem,
    alpha: f64,
    t_max: f64,
    n_samples: usize,
) -> Result<ConjugateTest> {
    if !(t_max > 0.0) || n_samples == 0 {
        return Err(VzError::InvalidInput("need t_max > 0 and n_samples >= 1".into()));
    }
    let mu = problem.mu;
    let tol = &problem.tol;
    let times: Vec<f64> = (1..=n_samples).map(|k| t_max * k as f64 / n_samples as f64).collect();
    let out = run(
        |_, y: &[f64; 8]| joint_rhs(y, mu),
        joint_initial(problem, alpha),
        t_max,
        tol,
        |y: &[f64; 8]| y[0],
        true,
        &times,
    )?;
    let mut sigma: Vec<(f64, f64)> =
        out.samples.iter().map(|(t, y)| (*t, probe(y, mu).sigma)).collect();
    let end = probe(&out.y, mu);
    if sigma.last().map_or(true, |s| s.0 < out.t) {
        sigma.push((out.t, end.sigma));
    }

    let mut first_zero = None;
    let mut prev: Option<(f64, [f64; 8], f64)> = None;
    for (t, y) in out.steps.iter().chain(std::iter::once(&(out.t, out.y))) {
        if *t < INITIAL_WINDOW {
            continue;
        }
        let d = probe(y, mu).det;
        if let Some((t0, y0, d0)) = prev {
            if d == 0.0 || d0 * d < 0.0 {
                first_zero = Some(refine_zero(mu, tol, t0, y0, d0, *t)?);
                break;
            }
        }
        prev = Some((*t, *y, d));
    }

    Ok(ConjugateTest {
        alpha,
        sigma,
        first_zero,
        stop_reason: out.stop,
        t_stop: out.t,
        sigma_end: end.sigma,
    })
}

fn refine_zero(mu: f64, tol: &Tolerances, t0: f64, y0: [f64; 8], d0: f64, t1: f64) -> Result<f64> {
    let (mut a, mut b) = (0.0, t1 - t0);
    while b - a > BISECT_TOL {
        let m = 0.5 * (a + b);
        let (_, y, _) = jacobi_at(mu, y0, m, tol)?;
        let d = probe(&y, mu).det;
        if d == 0.0 {
            return Ok(t0 + m);
        }
        if d * d0 > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(t0 + 0.5 * (a + b))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugateScan {
    pub alpha_grid: Vec<f64>,
    pub tests: Vec<std::result::Result<ConjugateTest, String>>,
}

impl ConjugateScan {
    pub fn first_zeros(&self) -> Vec<Option<f64>> {
        self.tests
            .iter()
            .map(|r| r.as_ref().ok().and_then(|c| c.first_zero))
            .collect()
    }

    pub fn conjugate_count(&self) -> usize {
        self.first_zeros().iter().filter(|z| z.is_some()).count()
    }

    pub fn failures(&self) -> Vec<(f64, String)> {
        self.alpha_grid
            .iter()
            .zip(&self.tests)
            .filter_map(|(a, r)| r.as_ref().err().map(|e| (*a, e.clone())))
            .collect()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let zeros: Vec<serde_json::Value> = self
            .alpha_grid
            .iter()
            .zip(self.first_zeros())
            .filter_map(|(a, z)| z.map(|t| serde_json::json!({"alpha": a, "t": t})))
            .collect();
        serde_json::json!({
            "n": self.alpha_grid.len(),
            "conjugate_count": self.conjugate_count(),
            "first_zeros": zeros,
            "failures": self.failures().iter()
                .map(|(a, e)| serde_json::json!({"alpha": a, "error": e}))
                .collect::<Vec<_>>(),
        })
    }
}

/// Runs [`conjugate_test`] on the uniform grid `alpha_i = 2 pi i / n`.
pub fn conjugate_scan(
    problem: &VortexProblem,
    n: usize,
    t_max: f64,
    n_samples: usize,
) -> Result<ConjugateScan> {
    if n < 2 {
        return Err(VzError::InvalidInput("scan needs at least two angles".into()));
    }
    let alpha_grid: Vec<f64> =
        (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64).collect();
    let tests = alpha_grid
        .par_iter()
        .map(|&a| conjugate_test(problem, a, t_max, n_samples).map_err(|e| e.to_string()))
        .collect();
    Ok(ConjugateScan { alpha_grid, tests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::extremal_rhs;

    #[test]
    fn linearization_matches_finite_differences() {
        let mu = 1.3;
        let z = ExtremalState { r: 1.7, theta: 0.4, p_r: -0.3, p_theta: 0.9 };
        let dz = [0.2, -0.1, 0.5, -0.7];
        let an = variational_rhs(&z, &dz, mu);
        let h = 1e-6;
        let shift = |s: f64| ExtremalState {
            r: z.r + s * dz[0],
            theta: z.theta + s * dz[1],
            p_r: z.p_r + s * dz[2],
            p_theta: z.p_theta + s * dz[3],
        };
        let fp = extremal_rhs(&shift(h), mu);
        let fm = extremal_rhs(&shift(-h), mu);
        for i in 0..4 {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            assert!((fd - an[i]).abs() < 1e-7, "component {i}: {fd} vs {}", an[i]);
        }
    }

    #[test]
    fn sigma_of_orthonormal_pair_is_one() {
        assert!((sigma_min_2x2([1.0, 0.0], [0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(sigma_min_2x2([1.0, 2.0], [2.0, 4.0]), 0.0);
        assert!((sigma_min_2x2([0.5, 0.0], [0.0, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_angle_scan_is_valid() {
        let p = VortexProblem::new(2.0, [8.0 / 3.0, 0.0]).unwrap();
        let scan = conjugate_scan(&p, 2, 5.0, 10).unwrap();
        assert_eq!(scan.alpha_grid.len(), 2);
        assert_eq!(scan.conjugate_count(), 0);
        assert!(conjugate_scan(&p, 1, 5.0, 10).is_err());
    }
}
