//! Indirect shooting: find `(T, alpha)` with `exp_{x0}(T, p0(alpha)) = xf`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, wrap_angle, GeodesicClassification};
use crate::error::{Result, VzError};
use crate::flow::{exponential_sampled, ExtremalState, StopReason};
use crate::jacobi::{cartesian_delta, cartesian_velocity, jacobi_at, joint_initial};
use crate::model::{feasible_transfer_time, CartesianState, VortexProblem};

/// Residual below which a Newton run counts as converged even if the
/// requested tolerance is out of reach of the integrator.
pub const ACCEPT_RESIDUAL: f64 = 1e-10;
const MAX_ITER: usize = 60;
const MAX_HALVINGS: usize = 30;
const STALL_WINDOW: usize = 6;
/// Seeds farther from the target than this fraction of `|xf|` are dropped.
const SEED_RADIUS: f64 = 0.5;
/// Solutions closer than this in `(T, alpha mod 2 pi)` are merged.
pub const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingProblem {
    pub problem: VortexProblem,
    pub xf: [f64; 2],
}

impl ShootingProblem {
    pub fn new(problem: VortexProblem, xf: [f64; 2]) -> Result<Self> {
        if !(xf[0].hypot(xf[1]) > 0.0) {
            return Err(VzError::Domain("target must differ from the vortex".into()));
        }
        Ok(Self { problem, xf })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BCExtremal {
    #[serde(rename = "T")]
    pub t: f64,
    pub alpha: f64,
    pub residual: f64,
    pub iterations: usize,
    pub classification: GeodesicClassification,
    pub endpoint: [f64; 2],
}

impl BCExtremal {
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "T": self.t,
            "alpha": self.alpha,
            "residual": self.residual,
            "fate": self.classification.fate,
            "type": self.classification.gtype,
            "iterations": self.iterations,
        })
    }
}

/// Value of the shooting function and its Jacobian in `(T, alpha)`.
#[derive(Debug, Clone, Copy)]
pub struct ShootEval {
    pub s: [f64; 2],
    /// Columns: derivative in `T`, derivative in `alpha`.
    pub jac: [[f64; 2]; 2],
    pub state: ExtremalState,
}

impl ShootEval {
    pub fn norm(&self) -> f64 {
        self.s[0].hypot(self.s[1])
    }
}

pub fn shooting_map(sp: &ShootingProblem, t: f64, alpha: f64) -> Result<ShootEval> {
    if !(t >= 0.0) {
        return Err(VzError::InvalidInput(format!("negative time {t}")));
    }
    let p = &sp.problem;
    let (t_reached, y, stop) = jacobi_at(p.mu, joint_initial(p, alpha), t, &p.tol)?;
    if stop != StopReason::ReachedTime {
        return Err(VzError::EarlyStop { t, t_stop: t_reached });
    }
    let z = ExtremalState::from_array(&y[..4]);
    let x = z.position();
    let u = cartesian_velocity(&z, p.mu);
    let v = cartesian_delta(&z, &[y[4], y[5], y[6], y[7]]);
    Ok(ShootEval {
        s: [x[0] - sp.xf[0], x[1] - sp.xf[1]],
        jac: [u, v],
        state: z,
    })
}

fn finish(sp: &ShootingProblem, t: f64, alpha: f64, ev: &ShootEval, iterations: usize) -> Result<BCExtremal> {
    let alpha = wrap_angle(alpha);
    Ok(BCExtremal {
        t,
        alpha,
        residual: ev.norm(),
        iterations,
        classification: classify(alpha, sp.problem.r0(), sp.problem.mu)?,
        endpoint: ev.state.position(),
    })
}

/// Damped Newton from the guess `(T, alpha)`.
pub fn shoot(sp: &ShootingProblem, guess: (f64, f64)) -> Result<BCExtremal> {
    shoot_bounded(sp, guess, f64::INFINITY)
}

/// Damped Newton where trial times above `t_max` are rejected.
pub fn shoot_bounded(sp: &ShootingProblem, guess: (f64, f64), t_max: f64) -> Result<BCExtremal> {
    let (mut t, mut alpha) = guess;
    let tol = sp.problem.tol.newton_tol;
    let mut ev = shooting_map(sp, t, alpha)?;
    let mut res = ev.norm();
    let mut history = vec![res];
    for it in 0..MAX_ITER {
        if res <= tol {
            return finish(sp, t, alpha, &ev, it);
        }
        // Stalled at a local minimum of the residual.
        if it >= STALL_WINDOW && res > 0.5 * history[it - STALL_WINDOW] && res > ACCEPT_RESIDUAL {
            return Err(VzError::NoConvergence { iterations: it, residual: res });
        }
        let [u, v] = ev.jac;
        let det = u[0] * v[1] - u[1] * v[0];
        let scale = (u[0] * u[0] + u[1] * u[1]) * (v[0] * v[0] + v[1] * v[1]);
        if !(det.abs() > 1e-14 * scale.sqrt()) || scale == 0.0 {
            return Err(VzError::SingularJacobian { t, alpha });
        }
        // Solve [u v] (dT, da) = -s.
        let dt = -(ev.s[0] * v[1] - ev.s[1] * v[0]) / det;
        let da = -(u[0] * ev.s[1] - u[1] * ev.s[0]) / det;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let tt = t + lambda * dt;
            let aa = alpha + lambda * da;
            if tt >= 0.0 && tt <= t_max {
                if let Ok(e) = shooting_map(sp, tt, aa) {
                    if e.norm() < res {
                        accepted = Some((tt, aa, e));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((tt, aa, e)) => {
                let step = (tt - t).abs() + (aa - alpha).abs();
                t = tt;
                alpha = aa;
                ev = e;
                res = ev.norm();
                history.push(res);
                if step <= 1e-14 * (1.0 + t) && res <= ACCEPT_RESIDUAL {
                    return finish(sp, t, alpha, &ev, it + 1);
                }
            }
            None => {
                if res <= ACCEPT_RESIDUAL {
                    return finish(sp, t, alpha, &ev, it);
                }
                return Err(VzError::NoConvergence { iterations: it, residual: res });
            }
        }
    }
    if res <= ACCEPT_RESIDUAL {
        return finish(sp, t, alpha, &ev, MAX_ITER);
    }
    Err(VzError::NoConvergence { iterations: MAX_ITER, residual: res })
}

fn trivial(sp: &ShootingProblem) -> Result<BCExtremal> {
    let x = sp.problem.x0;
    Ok(BCExtremal {
        t: 0.0,
        alpha: 0.0,
        residual: (x[0] - sp.xf[0]).hypot(x[1] - sp.xf[1]),
        iterations: 0,
        classification: classify(0.0, sp.problem.r0(), sp.problem.mu)?,
        endpoint: x,
    })
}

/// Horizon over which geodesics are searched for approaches to the target.
pub fn search_horizon(sp: &ShootingProblem) -> Result<f64> {
    let bound = feasible_transfer_time(
        &CartesianState::from(sp.problem.x0),
        &CartesianState::from(sp.xf),
        sp.problem.mu,
    )?;
    Ok(1.05 * bound + 1e-3)
}

const SEED_SAMPLES: usize = 400;
/// Directions in the seed grid; more are used when `n_starts` is larger.
pub const SEED_DIRECTIONS: usize = 360;

/// Distances to the target along one geodesic on the seed time grid; `None`
/// once the geodesic has stopped.
fn distances(sp: &ShootingProblem, alpha: f64, times: &[f64]) -> Vec<Option<f64>> {
    let mut d = vec![None; times.len()];
    if let Ok(tr) = exponential_sampled(&sp.problem, alpha, times) {
        for (k, (t, z)) in tr.samples.iter().enumerate() {
            if k < d.len() && *t == times[k] {
                let x = z.position();
                d[k] = Some((x[0] - sp.xf[0]).hypot(x[1] - sp.xf[1]));
            }
        }
    }
    d
}

/// Local minima `(t, alpha, distance)` of the distance to the target over a
/// grid in direction and time, best first. At most `4 n_starts` are kept, none
/// farther than half the target radius.
pub fn seed_candidates(sp: &ShootingProblem, n_starts: usize, horizon: f64) -> Vec<(f64, f64, f64)> {
    let na = SEED_DIRECTIONS.max(n_starts);
    let alphas: Vec<f64> = (0..na).map(|i| 2.0 * PI * i as f64 / na as f64).collect();
    let times: Vec<f64> =
        (1..=SEED_SAMPLES).map(|k| horizon * k as f64 / SEED_SAMPLES as f64).collect();
    let grid: Vec<Vec<Option<f64>>> = alphas.par_iter().map(|&a| distances(sp, a, &times)).collect();
    let radius = SEED_RADIUS * sp.xf[0].hypot(sp.xf[1]);
    let mut seeds = vec![];
    for i in 0..na {
        for k in 0..times.len() {
            let Some(d) = grid[i][k] else { continue };
            if d > radius {
                continue;
            }
            let mut is_min = true;
            'nb: for di in [na - 1, 0, 1] {
                for dk in [-1i64, 0, 1] {
                    let kk = k as i64 + dk;
                    if (di == 0 && dk == 0) || kk < 0 || kk >= times.len() as i64 {
                        continue;
                    }
                    if let Some(e) = grid[(i + di) % na][kk as usize] {
                        if e < d {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
            }
            if is_min {
                seeds.push((times[k], alphas[i], d));
            }
        }
    }
    seeds.sort_by(|a, b| a.2.total_cmp(&b.2));
    seeds.truncate(4 * n_starts);
    seeds
}

/// Multi-start shooting from the best `4 n_starts` seeds.
///
/// Seeds are local minima of the distance to the target over directions and
/// times up to a horizon slightly above the feasible transfer time. Distinct
/// solutions are returned sorted by transfer time.
pub fn solve_all(sp: &ShootingProblem, n_starts: usize) -> Result<Vec<BCExtremal>> {
    if n_starts == 0 {
        return Err(VzError::InvalidInput("n_starts must be positive".into()));
    }
    let x0 = sp.problem.x0;
    if (x0[0] - sp.xf[0]).hypot(x0[1] - sp.xf[1]) <= 1e-14 * (1.0 + sp.problem.r0()) {
        return Ok(vec![trivial(sp)?]);
    }
    let horizon = search_horizon(sp)?;
    let seeds = seed_candidates(sp, n_starts, horizon);
    let mut found: Vec<BCExtremal> = seeds
        .par_iter()
        .filter_map(|&(t, a, _)| shoot_bounded(sp, (t, a), 2.0 * horizon).ok())
        .filter(|b| b.t > 0.0)
        .collect();
    found.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.alpha.total_cmp(&b.alpha)));
    let mut out: Vec<BCExtremal> = Vec::new();
    for b in found {
        let dup = out.iter().any(|o| {
            let da = (o.alpha - b.alpha).rem_euclid(2.0 * PI);
            (o.t - b.t).abs() <= DEDUP_TOL && da.min(2.0 * PI - da) <= DEDUP_TOL
        });
        if !dup {
            out.push(b);
        }
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_matches_central_differences() {
        let p = VortexProblem::new(1.0, [2.0, 0.0]).unwrap();
        let sp = ShootingProblem::new(p, [-1.0, 1.0]).unwrap();
        let (t, a) = (1.3, 0.9);
        let ev = shooting_map(&sp, t, a).unwrap();
        let h = 1e-6;
        let fd = |dt: f64, da: f64| {
            let p = shooting_map(&sp, t + dt, a + da).unwrap().s;
            let m = shooting_map(&sp, t - dt, a - da).unwrap().s;
            [(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)]
        };
        for (col, fdc) in [(ev.jac[0], fd(h, 0.0)), (ev.jac[1], fd(0.0, h))] {
            let n = col[0].hypot(col[1]);
            let e = (col[0] - fdc[0]).hypot(col[1] - fdc[1]);
            assert!(e / n < 1e-5, "relative error {}", e / n);
        }
    }

    #[test]
    fn identical_endpoints_give_zero_time() {
        let p = VortexProblem::new(1.0, [2.0, 0.0]).unwrap();
        let sp = ShootingProblem::new(p, [2.0, 0.0]).unwrap();
        let all = solve_all(&sp, 8).unwrap();
        assert_eq!(all[0].t, 0.0);
    }

    #[test]
    fn shoot_refuses_bad_target() {
        let p = VortexProblem::new(1.0, [2.0, 0.0]).unwrap();
        assert!(ShootingProblem::new(p, [0.0, 0.0]).is_err());
        let sp = ShootingProblem::new(p, [1.0, 0.0]).unwrap();
        assert!(solve_all(&sp, 0).is_err());
    }
}
