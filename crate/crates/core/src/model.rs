//! Problem data, coordinate charts and elementary time bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VzError};

/// Numeric tolerances shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub newton_tol: f64,
    /// Integration stops when the radius drops to this value.
    pub r_min: f64,
    /// Integration stops when the radius reaches this value.
    pub r_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            newton_tol: 1e-12,
            r_min: 1e-3,
            r_max: 100.0,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.newton_tol > 0.0
            && self.r_min > 0.0
            && self.r_max > self.r_min
            && self.r_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(VzError::InvalidInput(format!("inconsistent tolerances {self:?}")))
        }
    }

    /// Same bundle with integration tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rtol: self.rtol / factor,
            atol: self.atol / factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub x1: f64,
    pub x2: f64,
}

impl CartesianState {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

impl From<[f64; 2]> for CartesianState {
    fn from(v: [f64; 2]) -> Self {
        Self { x1: v[0], x2: v[1] }
    }
}

/// Polar point; `theta` is never reduced modulo 2π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftStrength {
    Weak,
    Moderate,
    Strong,
}

/// A navigation problem: circulation and starting point. The control bound
/// is normalized to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexProblem {
    pub mu: f64,
    pub x0: [f64; 2],
    #[serde(default)]
    pub tol: Tolerances,
}

impl VortexProblem {
    pub fn new(mu: f64, x0: [f64; 2]) -> Result<Self> {
        Self::with_tol(mu, x0, Tolerances::default())
    }

    pub fn with_tol(mu: f64, x0: [f64; 2], tol: Tolerances) -> Result<Self> {
        let p = Self { mu, x0, tol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(VzError::InvalidInput("mu must be finite".into()));
        }
        if !(self.x0[0].is_finite() && self.x0[1].is_finite()) {
            return Err(VzError::InvalidInput("x0 must be finite".into()));
        }
        if self.x0[0].hypot(self.x0[1]) <= 0.0 {
            return Err(VzError::Domain("x0 must differ from the vortex".into()));
        }
        self.tol.validate()
    }

    /// Parses `{ "mu": .., "x0": [..], "tol": {..} }`.
    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self =
            serde_json::from_str(s).map_err(|e| VzError::InvalidInput(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn r0(&self) -> f64 {
        self.x0[0].hypot(self.x0[1])
    }

    pub fn theta0(&self) -> f64 {
        self.x0[1].atan2(self.x0[0])
    }

    pub fn strength(&self) -> DriftStrength {
        drift_strength_r(self.r0(), self.mu)
    }
}

fn check_nonzero(x: &CartesianState) -> Result<f64> {
    let r2 = x.x1 * x.x1 + x.x2 * x.x2;
    if r2 > 0.0 && r2.is_finite() {
        Ok(r2)
    } else {
        Err(VzError::Domain(format!(
            "point ({}, {}) is not in the punctured plane",
            x.x1, x.x2
        )))
    }
}

/// Vortex current at `x`.
pub fn drift(x: &CartesianState, mu: f64) -> Result<[f64; 2]> {
    let r2 = check_nonzero(x)?;
    Ok([-mu * x.x2 / r2, mu * x.x1 / r2])
}

const MODERATE_RTOL: f64 = 1e-9;

pub fn drift_strength(x: &CartesianState, mu: f64) -> Result<DriftStrength> {
    check_nonzero(x)?;
    Ok(drift_strength_r(x.norm(), mu))
}

pub(crate) fn drift_strength_r(r: f64, mu: f64) -> DriftStrength {
    let m = mu.abs();
    if (m - r).abs() <= MODERATE_RTOL * r {
        DriftStrength::Moderate
    } else if m < r {
        DriftStrength::Weak
    } else {
        DriftStrength::Strong
    }
}

pub fn to_polar(x: &CartesianState) -> Result<PolarState> {
    check_nonzero(x)?;
    Ok(PolarState {
        r: x.norm(),
        theta: x.x2.atan2(x.x1),
    })
}

pub fn to_cartesian(q: &PolarState) -> Result<CartesianState> {
    if !(q.r > 0.0) {
        return Err(VzError::Domain(format!("radius {} must be positive", q.r)));
    }
    let (s, c) = q.theta.sin_cos();
    Ok(CartesianState {
        x1: q.r * c,
        x2: q.r * s,
    })
}

/// Cartesian covector to polar `(p_r, p_theta)`.
pub fn mathieu_costate(theta: f64, r: f64, p: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * p[0] + s * p[1], -r * s * p[0] + r * c * p[1]]
}

/// Polar `(p_r, p_theta)` back to the Cartesian covector.
pub fn mathieu_inverse(theta: f64, r: f64, pp: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    let q = pp[1] / r;
    [c * pp[0] - s * q, s * pp[0] + c * q]
}

/// Times used to show that circling beats reaching the vortex close to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Bounds {
    /// Duration of a full turn at radius `R` pushed by the current.
    pub t_theta: f64,
    /// Duration of the radial run from `R` down to `eps`.
    pub t_r: f64,
    /// Radius below which turning is faster than diving to the vortex.
    pub r_mu: f64,
    /// Inner radius below which the radial run is slower than one turn.
    pub eps_mu_r: f64,
}

pub fn lemma2_bounds(eps: f64, r: f64, mu: f64) -> Result<Lemma2Bounds> {
    if !(r > 0.0) || eps < 0.0 || mu == 0.0 || !mu.is_finite() {
        return Err(VzError::InvalidInput(format!(
            "need R > 0, eps >= 0, mu != 0 (got R={r}, eps={eps}, mu={mu})"
        )));
    }
    if eps > r {
        return Err(VzError::InvalidInput(format!("eps={eps} exceeds R={r}")));
    }
    let m = mu.abs();
    Ok(Lemma2Bounds {
        t_theta: 2.0 * PI * r * r / (m + r),
        t_r: r - eps,
        r_mu: m / (2.0 * PI - 1.0),
        eps_mu_r: r * (1.0 - 2.0 * PI * r / (m + r)),
    })
}

/// Duration of the radial-then-circular strategy from `x0` to `xf`.
///
/// First a unit radial control moves from `r0` to `rf` while the current turns
/// the vehicle; then a tangential unit control in the direction of the current
/// covers the remaining angle. The result bounds the value function from above.
pub fn feasible_transfer_time(x0: &CartesianState, xf: &CartesianState, mu: f64) -> Result<f64> {
    let q0 = to_polar(x0)?;
    let qf = to_polar(xf)?;
    let t_radial = (qf.r - q0.r).abs();
    let theta1 = q0.theta + mu * (1.0 / q0.r - 1.0 / qf.r).abs();
    let dir = if mu < 0.0 { -1.0 } else { 1.0 };
    let two_pi = 2.0 * PI;
    let mut residual = ((qf.theta - theta1) * dir).rem_euclid(two_pi);
    if two_pi - residual < 1e-12 {
        residual = 0.0;
    }
    let rate = mu.abs() / (qf.r * qf.r) + 1.0 / qf.r;
    Ok(t_radial + residual / rate)
}

/// Transfer time for control bound `umax` from the time computed with unit
/// control bound and circulation `mu / umax`.
pub fn rescale_time(t_unit: f64, umax: f64) -> f64 {
    t_unit / umax
}

/// Circulation of the normalized problem for control bound `umax`.
pub fn normalized_mu(mu: f64, umax: f64) -> f64 {
    mu / umax
}
