//! Extremal flow of the maximum principle and the exponential mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VzError};
use crate::model::{Tolerances, VortexProblem};
use crate::ode::{integrate, Control, OdeError, OdeOptions};

/// Phase point `(r, theta, p_r, p_theta)` of the extremal flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalState {
    pub r: f64,
    pub theta: f64,
    pub p_r: f64,
    pub p_theta: f64,
}

impl ExtremalState {
    pub fn from_array(y: &[f64]) -> Self {
        Self {
            r: y[0],
            theta: y[1],
            p_r: y[2],
            p_theta: y[3],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.r, self.theta, self.p_r, self.p_theta]
    }

    /// Riemannian norm `sqrt(p_r^2 + p_theta^2 / r^2)` of the costate.
    pub fn costate_norm(&self) -> f64 {
        (self.p_r * self.p_r + (self.p_theta / self.r).powi(2)).sqrt()
    }

    pub fn position(&self) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.r * c, self.r * s]
    }

    pub fn cartesian_costate(&self) -> [f64; 2] {
        crate::model::mathieu_inverse(self.theta, self.r, [self.p_r, self.p_theta])
    }
}

/// Maximized Hamiltonian `p_theta mu / r^2 + |p|_r`.
pub fn hamiltonian(z: &ExtremalState, mu: f64) -> f64 {
    z.p_theta * mu / (z.r * z.r) + z.costate_norm()
}

/// Hamiltonian of the initial covector `(cos a, r0 sin a)`.
pub fn hamiltonian_alpha(alpha: f64, r0: f64, mu: f64) -> f64 {
    mu * alpha.sin() / r0 + 1.0
}

/// Right-hand side of the polar extremal system.
pub fn extremal_rhs(z: &ExtremalState, mu: f64) -> [f64; 4] {
    polar_rhs(&z.to_array(), mu)
}

#[inline]
pub(crate) fn polar_rhs(y: &[f64; 4], mu: f64) -> [f64; 4] {
    let [r, _, pr, pt] = *y;
    let n = (pr * pr + (pt / r).powi(2)).sqrt();
    let g = pt / n;
    let r2 = r * r;
    [pr / n, (mu + g) / r2, pt / (r2 * r) * (2.0 * mu + g), 0.0]
}

/// Right-hand side of the Cartesian extremal system, state `(x1, x2, p1, p2)`.
pub fn cartesian_rhs(y: &[f64; 4], mu: f64) -> [f64; 4] {
    let [x1, x2, p1, p2] = *y;
    let r2 = x1 * x1 + x2 * x2;
    let r4 = r2 * r2;
    let n = p1.hypot(p2);
    let d = x1 * x1 - x2 * x2;
    [
        -mu * x2 / r2 + p1 / n,
        mu * x1 / r2 + p2 / n,
        -mu / r4 * (2.0 * x1 * x2 * p1 - d * p2),
        mu / r4 * (d * p1 + 2.0 * x1 * x2 * p2),
    ]
}

/// Initial phase point for the direction `alpha`, costate `(cos a, r0 sin a)`.
pub fn initial_state(problem: &VortexProblem, alpha: f64) -> ExtremalState {
    let r0 = problem.r0();
    ExtremalState {
        r: r0,
        theta: problem.theta0(),
        p_r: alpha.cos(),
        p_theta: r0 * alpha.sin(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ReachedTime,
    HitInnerRadius,
    HitOuterRadius,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub mu: f64,
    pub samples: Vec<(f64, ExtremalState)>,
    pub stop_reason: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> &(f64, ExtremalState) {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn t_end(&self) -> f64 {
        self.last().0
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|(_, z)| z.position()).collect()
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["t", "r", "theta", "p_r", "p_theta", "x1", "x2", "H"];

    /// Rows matching [`Self::CSV_HEADER`].
    pub fn csv_rows(&self) -> Vec<[f64; 8]> {
        self.samples
            .iter()
            .map(|(t, z)| {
                let x = z.position();
                [*t, z.r, z.theta, z.p_r, z.p_theta, x[0], x[1], hamiltonian(z, self.mu)]
            })
            .collect()
    }
}

/// Output of [`run`].
pub(crate) struct Run<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub stop: StopReason,
    /// Accepted step end points, starting with the initial point.
    pub steps: Vec<(f64, [f64; N])>,
    /// States at the requested sample times that were reached.
    pub samples: Vec<(f64, [f64; N])>,
}

pub(crate) fn ode_options(tol: &Tolerances) -> OdeOptions {
    OdeOptions::with_tol(tol.rtol, tol.atol)
}

/// Integrates `f` from `t = 0` to `t_end` (any sign) stopping when the radius
/// leaves `[r_min, r_max]`; event times are refined on the dense output.
pub(crate) fn run<const N: usize, F, R>(
    f: F,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerances,
    radius: R,
    record_steps: bool,
    sample_times: &[f64],
) -> Result<Run<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    R: Fn(&[f64; N]) -> f64,
{
    let dir = if t_end < 0.0 { -1.0 } else { 1.0 };
    let mut steps = Vec::new();
    if record_steps {
        steps.push((0.0, y0));
    }
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next = 0usize;
    while next < sample_times.len() && sample_times[next] * dir <= 0.0 {
        samples.push((sample_times[next], y0));
        next += 1;
    }
    let r_start = radius(&y0);
    if r_start <= tol.r_min || r_start >= tol.r_max {
        let stop = if r_start <= tol.r_min {
            StopReason::HitInnerRadius
        } else {
            StopReason::HitOuterRadius
        };
        return Ok(Run {
            t: 0.0,
            y: y0,
            stop,
            steps,
            samples,
        });
    }
    let mut last = (0.0, y0);
    let mut event: Option<StopReason> = None;
    let opts = ode_options(tol);
    let res = integrate(f, 0.0, y0, t_end, &opts, |s| {
        let r1 = radius(&s.y1);
        let mut t_stop = s.t1;
        if r1 <= tol.r_min {
            event = Some(StopReason::HitInnerRadius);
            t_stop = s.locate(|y| radius(y) - tol.r_min, 1e-12);
        } else if r1 >= tol.r_max {
            event = Some(StopReason::HitOuterRadius);
            t_stop = s.locate(|y| radius(y) - tol.r_max, 1e-12);
        }
        while next < sample_times.len() && sample_times[next] * dir <= t_stop * dir {
            let ts = sample_times[next];
            let y = if ts == s.t1 { s.y1 } else { s.eval(ts) };
            samples.push((ts, y));
            next += 1;
        }
        if event.is_some() {
            Control::StopAt(t_stop)
        } else {
            last = (s.t1, s.y1);
            if record_steps {
                steps.push((s.t1, s.y1));
            }
            Control::Continue
        }
    });
    match res {
        Ok(out) => {
            let stop = event.unwrap_or(StopReason::ReachedTime);
            if record_steps && out.stopped {
                steps.push((out.t, out.y));
            }
            Ok(Run {
                t: out.t,
                y: out.y,
                stop,
                steps,
                samples,
            })
        }
        Err(OdeError::StepSizeUnderflow { .. }) => Ok(Run {
            t: last.0,
            y: last.1,
            stop: StopReason::HitInnerRadius,
            steps,
            samples,
        }),
        Err(e) => Err(VzError::Integration(e)),
    }
}

pub(crate) fn polar_radius<const N: usize>(y: &[f64; N]) -> f64 {
    y[0]
}

/// Integrates the extremal flow from `z0` for a signed duration `t`.
pub fn flow_state(
    mu: f64,
    z0: &ExtremalState,
    t: f64,
    tol: &Tolerances,
) -> Result<(f64, ExtremalState, StopReason)> {
    let run = run(
        |_, y: &[f64; 4]| polar_rhs(y, mu),
        z0.to_array(),
        t,
        tol,
        polar_radius,
        false,
        &[],
    )?;
    Ok((run.t, ExtremalState::from_array(&run.y), run.stop))
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(VzError::InvalidInput(format!("duration must be finite and >= 0, got {t}")))
    }
}

/// Geodesic from `x0` in the direction `alpha`, recorded at every accepted step.
pub fn exponential(problem: &VortexProblem, alpha: f64, t: f64) -> Result<Trajectory> {
    check_time(t)?;
    let mu = problem.mu;
    let run = run(
        |_, y: &[f64; 4]| polar_rhs(y, mu),
        initial_state(problem, alpha).to_array(),
        t,
        &problem.tol,
        polar_radius,
        true,
        &[],
    )?;
    Ok(Trajectory {
        mu,
        samples: run
            .steps
            .iter()
            .map(|(t, y)| (*t, ExtremalState::from_array(y)))
            .collect(),
        stop_reason: run.stop,
    })
}

/// Geodesic sampled at the given increasing times; samples after a stop event
/// are omitted.
pub fn exponential_sampled(problem: &VortexProblem, alpha: f64, times: &[f64]) -> Result<Trajectory> {
    let t_end = times.last().copied().unwrap_or(0.0);
    check_time(t_end)?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VzError::InvalidInput("sample times must increase".into()));
    }
    let mu = problem.mu;
    let run = run(
        |_, y: &[f64; 4]| polar_rhs(y, mu),
        initial_state(problem, alpha).to_array(),
        t_end,
        &problem.tol,
        polar_radius,
        false,
        times,
    )?;
    let mut samples: Vec<(f64, ExtremalState)> = run
        .samples
        .iter()
        .map(|(t, y)| (*t, ExtremalState::from_array(y)))
        .collect();
    if run.stop != StopReason::ReachedTime && samples.last().map_or(true, |s| s.0 < run.t) {
        samples.push((run.t, ExtremalState::from_array(&run.y)));
    }
    Ok(Trajectory {
        mu,
        samples,
        stop_reason: run.stop,
    })
}

/// End point of the geodesic: `(t_reached, state, stop_reason)`.
pub fn endpoint(problem: &VortexProblem, alpha: f64, t: f64) -> Result<(f64, ExtremalState, StopReason)> {
    check_time(t)?;
    flow_state(problem.mu, &initial_state(problem, alpha), t, &problem.tol)
}

/// Coordinates of the polynomial reparameterization with `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactifiedState {
    pub r: f64,
    pub theta: f64,
    pub p_r: f64,
    pub x: f64,
    /// `(l1, l2, l3, l4)`.
    pub lambdas: [f64; 4],
    /// Quadrature constant.
    pub k1: f64,
    pub mu: f64,
    pub p_theta: f64,
    /// Value of the Hamiltonian on the extremal.
    pub c: f64,
}

impl CompactifiedState {
    pub fn from_extremal(z: &ExtremalState, mu: f64) -> Self {
        let c = hamiltonian(z, mu);
        let pt = z.p_theta;
        let lambdas = [
            (2.0 * mu * c + pt) * pt,
            2.0 * (mu * pt).powi(2),
            mu * c + pt,
            mu * mu * pt,
        ];
        let mut s = Self {
            r: z.r,
            theta: z.theta,
            p_r: z.p_r,
            x: 1.0,
            lambdas,
            k1: 0.0,
            mu,
            p_theta: pt,
            c,
        };
        s.k1 = s.quadrature();
        s
    }

    /// `l2 x^6 / (4 r^4) - l1 x^4 / (2 r^2) - p_r^2 / 2`.
    pub fn quadrature(&self) -> f64 {
        let [l1, l2, _, _] = self.lambdas;
        let x2 = self.x * self.x;
        let r2 = self.r * self.r;
        l2 * x2 * x2 * x2 / (4.0 * r2 * r2) - l1 * x2 * x2 / (2.0 * r2) - 0.5 * self.p_r * self.p_r
    }

    /// `dt/ds = r^3 (c r^2 - mu p_theta)`.
    pub fn time_rate(&self) -> f64 {
        self.r.powi(3) * (self.c * self.r * self.r - self.mu * self.p_theta)
    }

    pub fn with_coords(&self, r: f64, theta: f64, p_r: f64) -> Self {
        Self {
            r,
            theta,
            p_r,
            ..*self
        }
    }
}

/// Derivative of `(r, theta, p_r, x)` with respect to the new time `s`.
pub fn compactified_rhs(cz: &CompactifiedState) -> [f64; 4] {
    let [l1, l2, l3, l4] = cz.lambdas;
    let (r, x) = (cz.r, cz.x);
    [
        r.powi(5) * cz.p_r,
        l3 * r.powi(3) * x.powi(3) - l4 * r * x.powi(5),
        l1 * r * r * x.powi(4) - l2 * x.powi(6),
        0.0,
    ]
}

fn abnormal_parts(r0: f64, alpha: f64) -> Result<(f64, f64)> {
    let (s, c) = alpha.sin_cos();
    if !(r0 > 0.0) || s.abs() < 1e-300 {
        return Err(VzError::Domain(format!("no abnormal formula for r0={r0}, alpha={alpha}")));
    }
    Ok((s / r0, (-c / s).atan()))
}

/// Time at which the closed form of the abnormal radius reaches the vortex.
pub fn abnormal_time_limit(r0: f64, alpha: f64) -> Result<f64> {
    let (q, a0) = abnormal_parts(r0, alpha)?;
    let edge = if q < 0.0 { -std::f64::consts::FRAC_PI_2 } else { std::f64::consts::FRAC_PI_2 };
    Ok((edge - a0) / q)
}

/// Radius along an abnormal geodesic at time `t`, valid on `[0, t_lim)`.
pub fn abnormal_radius(t: f64, r0: f64, alpha: f64) -> Result<f64> {
    let (q, a0) = abnormal_parts(r0, alpha)?;
    let t_lim = abnormal_time_limit(r0, alpha)?;
    if !(t >= 0.0 && t < t_lim) {
        return Err(VzError::Domain(format!(
            "t={t} outside the validity interval [0, {t_lim})"
        )));
    }
    let c = alpha.cos();
    let s = q * (q * t + a0).tan() + c / r0;
    let v = s * s - 2.0 * c / r0 * s + 1.0 / (r0 * r0);
    Ok(1.0 / v.sqrt())
}
