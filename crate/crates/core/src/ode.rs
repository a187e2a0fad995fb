//! Explicit Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The integrator works on fixed-size states `[f64; N]`. Every accepted step is
//! handed to an observer as a [`DenseStep`], which can interpolate the solution
//! anywhere inside the step and may ask the integrator to stop at an interior
//! time (used for event location).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("non-finite initial state or derivative")]
    NonFinite,
}

/// Step-size control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `None` lets the integrator pick one.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }
}

/// Observer verdict after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    Continue,
    /// Stop the integration at the given time, which must lie inside the step.
    StopAt(f64),
}

/// One accepted step together with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    /// Derivative at `t1` (first-same-as-last stage).
    pub f1: [f64; N],
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Fourth-order interpolant on `[t0, t1]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.h();
        let theta = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let theta1 = 1.0 - theta;
        let c = &self.cont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = c[0][i]
                + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])));
        }
        y
    }

    /// Bisection for a sign change of `g` on the step; `g(t0)` and `g(t1)`
    /// must have opposite signs (or `g(t1) == 0`).
    pub fn locate<G: Fn(&[f64; N]) -> f64>(&self, g: G, tol: f64) -> f64 {
        let mut a = self.t0;
        let mut b = self.t1;
        let ga = g(&self.y0);
        if g(&self.y1) == 0.0 {
            return b;
        }
        let sa = ga.signum();
        while (b - a).abs() > tol {
            let m = 0.5 * (a + b);
            let gm = g(&self.eval(m));
            if gm == 0.0 {
                return m;
            }
            if gm.signum() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// Result of an integration run.
#[derive(Debug, Clone)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// `true` when the observer requested the stop.
    pub stopped: bool,
}

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `observe` is called after every accepted step. Returning
/// [`Control::StopAt`] ends the run at that time, with the state obtained from
/// the dense output.
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut observe: O,
) -> Result<Outcome<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&DenseStep<N>) -> Control,
{
    let mut t = t0;
    let mut y = y0;
    if t_end == t0 {
        return Ok(Outcome {
            t,
            y,
            accepted: 0,
            rejected: 0,
            stopped: false,
        });
    }
    let dir = (t_end - t0).signum();
    let mut k1 = f(t, &y);
    if !all_finite(&y) || !all_finite(&k1) {
        return Err(OdeError::NonFinite);
    }
    let h_max = opts.h_max.min((t_end - t0).abs());
    let mut h = match opts.h0 {
        Some(h0) => h0.abs().min(h_max),
        None => initial_step(&mut f, t, &y, &k1, dir, opts).min(h_max),
    };

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO: f64 = 0.2 - BETA * 0.75;

    loop {
        if accepted + rejected >= opts.max_steps {
            return Err(OdeError::MaxSteps(opts.max_steps));
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining * (1.0 - 1e-14) {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow { t, h });
        }
        let hs = dir * h;

        let y2 = axpy(&y, hs, &[(A21, &k1)]);
        let k2 = f(t + C2 * hs, &y2);
        let y3 = axpy(&y, hs, &[(A31, &k1), (A32, &k2)]);
        let k3 = f(t + C3 * hs, &y3);
        let y4 = axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = f(t + C4 * hs, &y4);
        let y5 = axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = f(t + C5 * hs, &y5);
        let y6 = axpy(
            &y,
            hs,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let k6 = f(t + hs, &y6);
        let y_new = axpy(
            &y,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + hs, &y_new);

        let finite = all_finite(&y_new) && all_finite(&k7);
        let mut err = f64::INFINITY;
        if finite {
            let mut acc = 0.0;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                acc += (e / sk).powi(2);
            }
            err = (acc / N as f64).sqrt();
        }

        if err <= 1.0 {
            let t_new = if last { t_end } else { t + hs };
            let mut cont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - hs * k7[i] - bspl;
                cont[4][i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            let step = DenseStep {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                f1: k7,
                cont,
            };
            accepted += 1;
            match observe(&step) {
                Control::Continue => {}
                Control::StopAt(ts) => {
                    let ts = if dir > 0.0 {
                        ts.clamp(step.t0, step.t1)
                    } else {
                        ts.clamp(step.t1, step.t0)
                    };
                    let ys = if ts == step.t1 { step.y1 } else { step.eval(ts) };
                    return Ok(Outcome {
                        t: ts,
                        y: ys,
                        accepted,
                        rejected,
                        stopped: true,
                    });
                }
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            if last {
                return Ok(Outcome {
                    t,
                    y,
                    accepted,
                    rejected,
                    stopped: false,
                });
            }
            // PI step-size controller.
            let err_c = err.max(1e-10);
            let mut fac = SAFE * err_c.powf(-EXPO) * err_old.powf(BETA);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_old = err_c;
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            rejected += 1;
            let fac = if err.is_finite() {
                (SAFE * err.powf(-0.2)).clamp(0.1, 1.0)
            } else {
                0.1
            };
            h *= fac;
            last_rejected = true;
        }
    }
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    opts: &OdeOptions,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    h = h.min(opts.h_max);
    let y1 = axpy(y, dir * h, &[(1.0, f0)]);
    let f1 = f(t + dir * h, &y1);
    if !all_finite(&f1) {
        return h * 1e-3;
    }
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1)
}

/// Convenience wrapper returning the state at `t_end` only.
pub fn solve<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<[f64; N], OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    integrate(f, t0, y0, t_end, opts, |_| Control::Continue).map(|o| o.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let opts = OdeOptions::with_tol(1e-12, 1e-12);
        let y = solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 10.0, &opts).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let opts = OdeOptions::default();
        let y = solve(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], -2.0, &opts).unwrap();
        assert!((y[0] - (-2f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn dense_output_is_fourth_order_accurate() {
        // Loose tolerance so steps are large and the interpolant is exercised.
        let opts = OdeOptions::with_tol(1e-6, 1e-6);
        let mut worst: f64 = 0.0;
        integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            6.0,
            &opts,
            |s| {
                for k in 1..10 {
                    let t = s.t0 + s.h() * k as f64 / 10.0;
                    let y = s.eval(t);
                    worst = worst.max((y[0] - t.cos()).abs());
                }
                Control::Continue
            },
        )
        .unwrap();
        assert!(worst < 1e-5, "dense output error {worst}");
    }

    #[test]
    fn event_stop_uses_dense_output() {
        let opts = OdeOptions::default();
        // y = 1 - t crosses 0.25 at t = 0.75.
        let out = integrate(
            |_, _y: &[f64; 1]| [-1.0],
            0.0,
            [1.0],
            5.0,
            &opts,
            |s| {
                if s.y1[0] <= 0.25 {
                    Control::StopAt(s.locate(|y| y[0] - 0.25, 1e-14))
                } else {
                    Control::Continue
                }
            },
        )
        .unwrap();
        assert!(out.stopped);
        assert!((out.t - 0.75).abs() < 1e-12);
        assert!((out.y[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_length_interval() {
        let out = integrate(
            |_, y: &[f64; 1]| [y[0]],
            1.0,
            [3.0],
            1.0,
            &OdeOptions::default(),
            |_| Control::Continue,
        )
        .unwrap();
        assert_eq!(out.y, [3.0]);
        assert_eq!(out.accepted, 0);
    }

    #[test]
    fn blow_up_reports_underflow_or_nonfinite() {
        // y' = y^2, y(0) = 1 blows up at t = 1.
        let r = solve(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &OdeOptions::default());
        assert!(r.is_err());
    }
}
