//! Continuation of zero paths `F(y, lambda) = 0` and splitting curves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VzError};
use crate::flow::{ExtremalState, StopReason};
use crate::jacobi::{cartesian_delta, cartesian_velocity, jacobi_at, joint_initial};
use crate::model::VortexProblem;

/// Value and partial Jacobians of a parameterized map.
#[derive(Debug, Clone)]
pub struct PathEval {
    pub f: DVector<f64>,
    pub fy: DMatrix<f64>,
    pub fl: DVector<f64>,
}

pub trait PathSystem {
    fn eval(&self, y: &DVector<f64>, lambda: f64) -> Result<PathEval>;
}

/// Adapter turning a closure into a [`PathSystem`].
pub struct FnSystem<F>(pub F);

impl<F> PathSystem for FnSystem<F>
where
    F: Fn(&DVector<f64>, f64) -> Result<PathEval>,
{
    fn eval(&self, y: &DVector<f64>, lambda: f64) -> Result<PathEval> {
        (self.0)(y, lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathStop {
    LeftAnnulus,
    ParameterBound,
    StepFailure,
    MaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `+1` to increase lambda, `-1` to decrease it.
    pub direction: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Bound on the change of `y` over one step.
    pub dy_max: f64,
    pub corrector_tol: f64,
    pub predictor_tol: f64,
    pub max_newton: usize,
    pub max_steps: usize,
    /// Above this `|dy/dlambda|` the arclength fallback is used.
    pub slope_max: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            lambda_min: f64::NEG_INFINITY,
            lambda_max: f64::INFINITY,
            direction: 1.0,
            h0: 1e-2,
            h_min: 1e-10,
            h_max: 0.1,
            dy_max: f64::INFINITY,
            corrector_tol: 1e-10,
            predictor_tol: 1e-6,
            max_newton: 8,
            max_steps: 100_000,
            slope_max: 1e3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroPath {
    /// `(y, lambda)` samples in continuation order.
    pub samples: Vec<(Vec<f64>, f64)>,
    pub stop_reason: PathStop,
    /// Steps taken with the arclength fallback.
    pub arclength_steps: usize,
}

fn davidenko(ev: &PathEval) -> Option<DVector<f64>> {
    let lu = ev.fy.clone().lu();
    let v = lu.solve(&(-&ev.fl))?;
    if v.iter().all(|x| x.is_finite()) {
        Some(v)
    } else {
        None
    }
}

/// Newton on `y` at fixed `lambda`.
fn correct<S: PathSystem + ?Sized>(
    sys: &S,
    mut y: DVector<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Option<DVector<f64>> {
    let mut prev = f64::INFINITY;
    for _ in 0..=max_iter {
        let ev = sys.eval(&y, lambda).ok()?;
        let n = ev.f.norm();
        if n <= tol {
            return Some(y);
        }
        if n > prev {
            return None;
        }
        prev = n;
        let d = ev.fy.lu().solve(&(-ev.f))?;
        y += d;
    }
    None
}

/// Null direction of the `n x (n+1)` matrix `[Fy | Fl]`.
fn tangent(ev: &PathEval) -> DVector<f64> {
    let n = ev.f.len();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&ev.fy);
    m.view_mut((0, n), (n, 1)).copy_from(&ev.fl);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(n);
    vt.row(k).transpose()
}

/// One pseudo-arclength step of length `s` along `dir`.
fn arclength_step<S: PathSystem + ?Sized>(
    sys: &S,
    y: &DVector<f64>,
    lambda: f64,
    dir: &DVector<f64>,
    s: f64,
    tol: f64,
    max_iter: usize,
) -> Option<(DVector<f64>, f64, DVector<f64>)> {
    let n = y.len();
    let ev = sys.eval(y, lambda).ok()?;
    let mut tau = tangent(&ev);
    if tau.dot(dir) < 0.0 {
        tau = -tau;
    }
    let mut w = DVector::zeros(n + 1);
    w.rows_mut(0, n).copy_from(y);
    w[n] = lambda;
    let w_pred = &w + &tau * s;
    let mut wk = w_pred.clone();
    for _ in 0..=max_iter {
        let yk = wk.rows(0, n).into_owned();
        let ev = sys.eval(&yk, wk[n]).ok()?;
        let g = tau.dot(&(&wk - &w_pred));
        let res = ev.f.norm().max(g.abs());
        if ev.f.norm() <= tol && g.abs() <= tol {
            return Some((yk, wk[n], tau));
        }
        let mut a = DMatrix::zeros(n + 1, n + 1);
        a.view_mut((0, 0), (n, n)).copy_from(&ev.fy);
        a.view_mut((0, n), (n, 1)).copy_from(&ev.fl);
        a.view_mut((n, 0), (1, n + 1)).copy_from(&tau.transpose());
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-&ev.f));
        rhs[n] = -g;
        let d = a.lu().solve(&rhs)?;
        wk += d;
        if !res.is_finite() {
            return None;
        }
    }
    None
}

/// Follows the zero path through `(y0, lambda0)` in the direction of
/// `opts.direction` until the region check fails, lambda leaves its range,
/// or steps stop converging.
///
/// The predictor integrates `dy/dlambda = -Fy^{-1} Fl` with an embedded
/// Bogacki–Shampine pair; the corrector is Newton at fixed lambda. When
/// `Fy` becomes singular an arclength step is taken instead.
pub fn follow_path<S, R>(
    sys: &S,
    y0: &[f64],
    lambda0: f64,
    opts: &PathOptions,
    region: R,
) -> Result<ZeroPath>
where
    S: PathSystem + ?Sized,
    R: Fn(&[f64], f64) -> bool,
{
    let mut dir = if opts.direction < 0.0 { -1.0 } else { 1.0 };
    let seed = DVector::from_column_slice(y0);
    let f0 = sys.eval(&seed, lambda0)?.f.norm();
    if f0 > 1e-6 {
        return Err(VzError::InvalidInput(format!("seed residual {f0:e} too large")));
    }
    let mut y = correct(sys, seed, lambda0, opts.corrector_tol, opts.max_newton).ok_or(
        VzError::NoConvergence {
            iterations: opts.max_newton,
            residual: f0,
        },
    )?;
    let mut lambda = lambda0;
    let mut samples = vec![(y.as_slice().to_vec(), lambda)];
    let mut h = opts.h0.min(opts.h_max);
    let mut arclength_steps = 0;
    let n = y.len();
    // Direction of travel in (y, lambda) space, used to orient tangents.
    let mut travel = DVector::zeros(n + 1);
    travel[n] = dir;

    for _ in 0..opts.max_steps {
        let bound = if dir > 0.0 { opts.lambda_max } else { opts.lambda_min };
        if (bound - lambda) * dir <= 0.0 {
            return Ok(ZeroPath { samples, stop_reason: PathStop::ParameterBound, arclength_steps });
        }
        let mut step: Option<(DVector<f64>, f64)> = None;
        let k1 = sys
            .eval(&y, lambda)
            .ok()
            .and_then(|e| davidenko(&e))
            .filter(|k| k.norm() <= opts.slope_max);
        while step.is_none() && h >= opts.h_min {
            let Some(k1) = k1.as_ref() else { break };
            let hh = h.min((bound - lambda).abs());
            let hs = dir * hh;
            let pred = (|| {
                let y2 = &y + k1 * (0.5 * hs);
                let k2 = davidenko(&sys.eval(&y2, lambda + 0.5 * hs).ok()?)?;
                let y3 = &y + &k2 * (0.75 * hs);
                let k3 = davidenko(&sys.eval(&y3, lambda + 0.75 * hs).ok()?)?;
                let yn = &y + (k1 * (2.0 / 9.0) + &k2 * (1.0 / 3.0) + &k3 * (4.0 / 9.0)) * hs;
                let k4 = davidenko(&sys.eval(&yn, lambda + hs).ok()?)?;
                let ylow = &y
                    + (k1 * (7.0 / 24.0) + &k2 * 0.25 + &k3 * (1.0 / 3.0) + &k4 * 0.125) * hs;
                Some((yn.clone(), (&yn - &ylow).norm()))
            })();
            match pred {
                Some((yp, err)) => {
                    let dy = (&yp - &y).norm();
                    if err > opts.predictor_tol || dy > opts.dy_max {
                        let f1 = if err > 0.0 { 0.9 * (opts.predictor_tol / err).cbrt() } else { 0.5 };
                        let f2 = if dy > opts.dy_max { 0.9 * opts.dy_max / dy } else { 1.0 };
                        h = hh * f1.min(f2).clamp(0.1, 0.5);
                        continue;
                    }
                    match correct(sys, yp, lambda + hs, opts.corrector_tol, opts.max_newton) {
                        Some(yc) => {
                            step = Some((yc, lambda + hs));
                            let grow = if err > 0.0 { 0.9 * (opts.predictor_tol / err).cbrt() } else { 2.0 };
                            let grow = if dy > 0.0 { grow.min(0.9 * opts.dy_max / dy) } else { grow };
                            h = (hh * grow.clamp(1.0, 2.0)).min(opts.h_max);
                        }
                        None => h = hh * 0.5,
                    }
                }
                None => h = hh * 0.5,
            }
        }
        let (yn, ln) = match step {
            Some(s) => s,
            None => {
                let mut s = travel.norm().clamp(opts.h_min, opts.h_max);
                let mut res = None;
                while res.is_none() && s >= opts.h_min {
                    res = arclength_step(sys, &y, lambda, &travel, s, opts.corrector_tol, opts.max_newton);
                    s *= 0.5;
                }
                match res {
                    Some((yn, ln, _)) => {
                        arclength_steps += 1;
                        (yn, ln)
                    }
                    None => {
                        return Ok(ZeroPath { samples, stop_reason: PathStop::StepFailure, arclength_steps });
                    }
                }
            }
        };
        if !region(yn.as_slice(), ln) {
            return Ok(ZeroPath { samples, stop_reason: PathStop::LeftAnnulus, arclength_steps });
        }
        travel.rows_mut(0, n).copy_from(&(&yn - &y));
        travel[n] = ln - lambda;
        if travel[n] * dir < 0.0 {
            // Past a fold the parameter runs backwards.
            dir = -dir;
        }
        h = h.max(travel[n].abs()).min(opts.h_max);
        y = yn;
        lambda = ln;
        samples.push((y.as_slice().to_vec(), lambda));
    }
    Ok(ZeroPath { samples, stop_reason: PathStop::MaxSteps, arclength_steps })
}

/// Endpoint, velocity and alpha-derivative of `exp_{x0}(t, p0(alpha))`.
pub(crate) fn exp_with_derivatives(problem: &VortexProblem, t: f64, alpha: f64) -> Result<([f64; 2], [f64; 2], [f64; 2])> {
    let (t_reached, y, stop) = jacobi_at(problem.mu, joint_initial(problem, alpha), t, &problem.tol)?;
    if stop != StopReason::ReachedTime {
        return Err(VzError::EarlyStop { t, t_stop: t_reached });
    }
    let z = ExtremalState::from_array(&y[..4]);
    Ok((
        z.position(),
        cartesian_velocity(&z, problem.mu),
        cartesian_delta(&z, &[y[4], y[5], y[6], y[7]]),
    ))
}

/// `F(t, a1, x, a2) = (x - exp(t, a1), x - exp(t, a2))` with `y = (t, a1, x1, x2)`
/// and `lambda = a2`.
pub struct SplitSystem {
    pub problem: VortexProblem,
}

impl PathSystem for SplitSystem {
    fn eval(&self, y: &DVector<f64>, lambda: f64) -> Result<PathEval> {
        let (t, a1, x) = (y[0], y[1], [y[2], y[3]]);
        if !(t > 0.0) {
            return Err(VzError::Domain(format!("splitting time {t} must be positive")));
        }
        let (e1, u1, v1) = exp_with_derivatives(&self.problem, t, a1)?;
        let (e2, u2, v2) = exp_with_derivatives(&self.problem, t, lambda)?;
        let f = DVector::from_vec(vec![x[0] - e1[0], x[1] - e1[1], x[0] - e2[0], x[1] - e2[1]]);
        #[rustfmt::skip]
        let fy = DMatrix::from_row_slice(4, 4, &[
            -u1[0], -v1[0], 1.0, 0.0,
            -u1[1], -v1[1], 0.0, 1.0,
            -u2[0], 0.0, 1.0, 0.0,
            -u2[1], 0.0, 0.0, 1.0,
        ]);
        let fl = DVector::from_vec(vec![0.0, 0.0, -v2[0], -v2[1]]);
        Ok(PathEval { f, fy, fl })
    }
}

/// A point reached at time `t` by the two geodesics `alpha1` and `alpha2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPoint {
    pub t: f64,
    pub alpha1: f64,
    pub x: [f64; 2],
    pub alpha2: f64,
}

impl SplitPoint {
    fn from_sample(y: &[f64], lambda: f64) -> Self {
        Self { t: y[0], alpha1: y[1], x: [y[2], y[3]], alpha2: lambda }
    }

    /// Largest distance between `x` and the two geodesic end points.
    pub fn residual(&self, problem: &VortexProblem) -> Result<f64> {
        let (e1, _, _) = exp_with_derivatives(problem, self.t, self.alpha1)?;
        let (e2, _, _) = exp_with_derivatives(problem, self.t, self.alpha2)?;
        let d1 = (e1[0] - self.x[0]).hypot(e1[1] - self.x[1]);
        let d2 = (e2[0] - self.x[0]).hypot(e2[1] - self.x[1]);
        Ok(d1.max(d2))
    }
}

/// Newton at fixed time on `(a1, x1, x2, a2)` for a splitting point.
pub fn polish_fixed_time(problem: &VortexProblem, seed: &SplitPoint, tol: f64) -> Result<SplitPoint> {
    let mut p = *seed;
    let mut last = f64::INFINITY;
    // Equal directions solve the system trivially.
    let distinct = |p: &SplitPoint| {
        let d = (p.alpha2 - p.alpha1).rem_euclid(std::f64::consts::TAU);
        d.min(std::f64::consts::TAU - d) > 1e-7
    };
    for it in 0..30 {
        if !distinct(&p) {
            break;
        }
        let (e1, _, v1) = exp_with_derivatives(problem, p.t, p.alpha1)?;
        let (e2, _, v2) = exp_with_derivatives(problem, p.t, p.alpha2)?;
        let f = DVector::from_vec(vec![p.x[0] - e1[0], p.x[1] - e1[1], p.x[0] - e2[0], p.x[1] - e2[1]]);
        let n = f.norm();
        if n <= tol {
            return Ok(p);
        }
        if it > 3 && n >= last {
            break;
        }
        last = n;
        #[rustfmt::skip]
        let j = DMatrix::from_row_slice(4, 4, &[
            -v1[0], 1.0, 0.0, 0.0,
            -v1[1], 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, -v2[0],
            0.0, 0.0, 1.0, -v2[1],
        ]);
        let d = j.lu().solve(&(-f)).ok_or(VzError::SingularJacobian { t: p.t, alpha: p.alpha1 })?;
        p.alpha1 += d[0];
        p.x[0] += d[1];
        p.x[1] += d[2];
        p.alpha2 += d[3];
    }
    if last <= 1e3 * tol && distinct(&p) {
        return Ok(p);
    }
    Err(VzError::NoConvergence { iterations: 30, residual: last })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Inner and outer radius of the region where the spatial point may move.
    pub annulus: (f64, f64),
    /// Continuation also stops once the splitting time exceeds this.
    pub t_cap: f64,
    /// Maximal distance travelled by the splitting point in one step.
    pub dx_max: f64,
    pub h_max: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self { annulus: (0.005, 100.0), t_cap: f64::INFINITY, dx_max: 0.02, h_max: 0.02 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplittingCurve {
    pub label: usize,
    /// Samples ordered by increasing `alpha2`.
    pub points: Vec<SplitPoint>,
    pub stop_reasons: (PathStop, PathStop),
}

impl SplittingCurve {
    /// `(alpha2, t)` pairs.
    pub fn t_of_alpha2(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.alpha2, p.t)).collect()
    }

    /// Minimal splitting time, refined by a parabola through the lowest sample
    /// and its neighbours.
    pub fn min_t(&self) -> f64 {
        let pts = &self.points;
        let Some((k, _)) = pts.iter().enumerate().min_by(|a, b| a.1.t.total_cmp(&b.1.t)) else {
            return f64::INFINITY;
        };
        if k == 0 || k + 1 == pts.len() {
            return pts[k].t;
        }
        let (x0, x1, x2) = (pts[k - 1].alpha2, pts[k].alpha2, pts[k + 1].alpha2);
        let (y0, y1, y2) = (pts[k - 1].t, pts[k].t, pts[k + 1].t);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let a = (d12 - d01) / (x2 - x0);
        if !(a > 0.0) {
            return y1;
        }
        let b = d01 - a * (x0 + x1);
        let xm = -b / (2.0 * a);
        if xm < x0 || xm > x2 {
            return y1;
        }
        let ym = y1 + (xm - x1) * (d01 + a * (xm - x0));
        ym.min(y1)
    }

    pub fn lambda_range(&self) -> (f64, f64) {
        let a = self.points.first().map_or(f64::NAN, |p| p.alpha2);
        let b = self.points.last().map_or(f64::NAN, |p| p.alpha2);
        (a, b)
    }

    pub const CSV_HEADER: [&'static str; 5] = ["lambda", "t", "alpha1", "x1", "x2"];

    pub fn csv_rows(&self) -> Vec<[f64; 5]> {
        self.points.iter().map(|p| [p.alpha2, p.t, p.alpha1, p.x[0], p.x[1]]).collect()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let (a, b) = self.lambda_range();
        serde_json::json!({
            "label": self.label,
            "min_t": self.min_t(),
            "lambda_range": [a, b],
            "stop_reason": [self.stop_reasons.0, self.stop_reasons.1],
            "samples": self.points.len(),
        })
    }
}

/// Continues the splitting curve through `seed` in both directions of `alpha2`.
pub fn splitting_curve(
    problem: &VortexProblem,
    seed: &SplitPoint,
    label: usize,
    opts: &SplitOptions,
) -> Result<SplittingCurve> {
    if (seed.alpha1 - seed.alpha2).abs() < 1e-9 {
        return Err(VzError::InvalidInput("seed directions must differ".into()));
    }
    let sys = SplitSystem { problem: *problem };
    let y0 = [seed.t, seed.alpha1, seed.x[0], seed.x[1]];
    let (r_in, r_out) = opts.annulus;
    let region = |y: &[f64], lambda: f64| {
        let r = y[2].hypot(y[3]);
        let gap = (y[1] - lambda).rem_euclid(2.0 * std::f64::consts::PI);
        r >= r_in && r <= r_out && y[0] <= opts.t_cap && y[0] > 0.0 && gap > 1e-6
            && 2.0 * std::f64::consts::PI - gap > 1e-6
    };
    let base = PathOptions {
        lambda_min: seed.alpha2 - 2.0 * std::f64::consts::PI,
        lambda_max: seed.alpha2 + 2.0 * std::f64::consts::PI,
        h0: 1e-3,
        h_max: opts.h_max,
        dy_max: opts.dx_max,
        ..PathOptions::default()
    };
    let fwd = follow_path(&sys, &y0, seed.alpha2, &PathOptions { direction: 1.0, ..base }, region)?;
    let bwd = follow_path(&sys, &y0, seed.alpha2, &PathOptions { direction: -1.0, ..base }, region)?;
    let mut points: Vec<SplitPoint> =
        bwd.samples.iter().rev().map(|(y, l)| SplitPoint::from_sample(y, *l)).collect();
    points.extend(fwd.samples.iter().skip(1).map(|(y, l)| SplitPoint::from_sample(y, *l)));
    points.sort_by(|a, b| a.alpha2.total_cmp(&b.alpha2));
    Ok(SplittingCurve { label, points, stop_reasons: (bwd.stop_reason, fwd.stop_reason) })
}
