//! Closed-form classification of geodesics by their asymptotic fate.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VzError};
use crate::model::{drift_strength_r, DriftStrength};

const TWO_PI: f64 = 2.0 * PI;
/// Angles closer than this are treated as equal when testing set membership.
pub const ANGLE_TOL: f64 = 1e-12;
/// Relative tolerance for the coincidence `r0 = 2|mu|`.
pub const REEB_RTOL: f64 = 1e-12;
/// Hamiltonian values below this are treated as zero.
pub const H_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fate {
    ToVortex,
    ToInfinity,
    Separatrix,
    ReebCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeodesicType {
    Hyperbolic,
    Elliptic,
    Exceptional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    StrictlyMonotone,
    OneOscillation,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AbnormalAngles {
    None,
    One(f64),
    Pair(f64, f64),
}

impl AbnormalAngles {
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            AbnormalAngles::None => vec![],
            AbnormalAngles::One(a) => vec![a],
            AbnormalAngles::Pair(a, b) => vec![a, b],
        }
    }
}

/// Directions whose Hamiltonian vanishes, i.e. `sin a = -r0 / mu`.
pub fn abnormal_angles(r0: f64, mu: f64) -> AbnormalAngles {
    if mu == 0.0 {
        return AbnormalAngles::None;
    }
    match drift_strength_r(r0, mu) {
        DriftStrength::Weak => AbnormalAngles::None,
        DriftStrength::Moderate => {
            AbnormalAngles::One(if mu > 0.0 { 3.0 * FRAC_PI_2 } else { FRAC_PI_2 })
        }
        DriftStrength::Strong => {
            let a = (r0 / mu.abs()).asin();
            if mu > 0.0 {
                let a1 = PI + a;
                AbnormalAngles::Pair(a1, 3.0 * PI - a1)
            } else {
                AbnormalAngles::Pair(a, PI - a)
            }
        }
    }
}

/// Coefficients of `P(X) = aX^2 + bX + c` with `p_r^2 = P(1/r^2)`, its
/// discriminant and the critical angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantData {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
    pub p_theta_star: f64,
    /// `(X-, X+)` when the discriminant is nonnegative and `a > 0`.
    pub roots: Option<(f64, f64)>,
    /// Turning radii `r1 = X+^(-1/2)`, `r2 = X-^(-1/2)`; infinite for a zero
    /// root, `None` for a negative one.
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    /// `(alpha1*, alpha2*)`.
    pub alpha_stars: (f64, f64),
    /// `p_theta = 0`: the polynomial collapses to the constant one.
    pub degenerate: bool,
}

fn root_radius(x: f64) -> Option<f64> {
    if x > 0.0 {
        Some(x.powf(-0.5))
    } else if x == 0.0 {
        Some(f64::INFINITY)
    } else {
        None
    }
}

pub fn p_theta_star(r0: f64, mu: f64) -> f64 {
    -4.0 * mu / (1.0 + 4.0 * mu * mu / (r0 * r0))
}

/// Critical directions `(alpha1*, alpha2*)` for which `p_theta = p_theta*`.
pub fn alpha_stars(r0: f64, mu: f64) -> (f64, f64) {
    let s = (p_theta_star(r0, mu) / r0).clamp(-1.0, 1.0);
    let a = s.asin();
    if mu > 0.0 {
        (PI - a, TWO_PI + a)
    } else {
        (a, PI - a)
    }
}

pub fn discriminant_data(p_theta: f64, r0: f64, mu: f64) -> Result<DiscriminantData> {
    if !(r0 > 0.0) || mu == 0.0 || !mu.is_finite() || !p_theta.is_finite() {
        return Err(VzError::InvalidInput(format!(
            "need r0 > 0 and mu != 0 (r0={r0}, mu={mu})"
        )));
    }
    let p = p_theta;
    let r02 = r0 * r0;
    let a = mu * mu * p * p;
    let b = -p * (p + 2.0 * mu + 2.0 * p * mu * mu / r02);
    let c = (1.0 + mu * p / r02).powi(2);
    let delta = p.powi(3) * (p * (1.0 + 4.0 * mu * mu / r02) + 4.0 * mu);
    let mut roots = None;
    let (mut r1, mut r2) = (None, None);
    if a > 0.0 && delta >= 0.0 {
        let base = p * p * r02 + 2.0 * mu * mu * p * p + 2.0 * mu * p * r02;
        let sq = r0 * (p.powi(3) * (4.0 * p * mu * mu + 4.0 * mu * r02 + p * r02)).max(0.0).sqrt();
        let den = 2.0 * mu * mu * p * p * r02;
        let mut xm = (base - sq) / den;
        let xp = (base + sq) / den;
        // Exact zero of the smaller root, lost to cancellation otherwise.
        if (p + r02 / mu).abs() <= 1e-14 * (p.abs() + r02 / mu.abs()) {
            xm = 0.0;
        }
        roots = Some((xm, xp));
        r1 = root_radius(xp);
        r2 = root_radius(xm);
    }
    Ok(DiscriminantData {
        a,
        b,
        c,
        delta,
        p_theta_star: p_theta_star(r0, mu),
        roots,
        r1,
        r2,
        alpha_stars: alpha_stars(r0, mu),
        degenerate: p == 0.0,
    })
}

/// `p_r^2` as a function of the radius along the extremal with angular
/// momentum `p_theta` issued from radius `r0` with unit costate norm.
pub fn phi(r: f64, p_theta: f64, r0: f64, mu: f64) -> f64 {
    let a = mu * mu * p_theta * p_theta;
    let b = -p_theta * (p_theta + 2.0 * mu + 2.0 * p_theta * mu * mu / (r0 * r0));
    let ir2 = 1.0 / (r * r);
    let ir02 = 1.0 / (r0 * r0);
    a * (ir2 * ir2 - ir02 * ir02) + b * (ir2 - ir02) + 1.0 - p_theta * p_theta * ir02
}

pub fn wrap_angle(alpha: f64) -> f64 {
    let a = alpha.rem_euclid(TWO_PI);
    if a >= TWO_PI {
        0.0
    } else {
        a
    }
}

fn near(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(TWO_PI);
    d <= ANGLE_TOL || TWO_PI - d <= ANGLE_TOL
}

/// Whether `r0` and `2|mu|` coincide.
pub fn on_reeb_radius(r0: f64, mu: f64) -> bool {
    (r0 - 2.0 * mu.abs()).abs() <= REEB_RTOL * r0
}

/// The separating direction from radius `r0`.
pub fn separatrix_alpha(r0: f64, mu: f64) -> Option<f64> {
    if mu == 0.0 {
        return None;
    }
    let (a1, a2) = alpha_stars(r0, mu);
    let reeb = on_reeb_radius(r0, mu);
    let outside = r0 > 2.0 * mu.abs() && !reeb;
    Some(if mu > 0.0 {
        if outside {
            a1
        } else {
            a2
        }
    } else if outside {
        a2
    } else {
        a1
    })
}

/// Asymptotic fate of the geodesic issued in the direction `alpha`.
pub fn fate(alpha: f64, r0: f64, mu: f64) -> Fate {
    let a = wrap_angle(alpha);
    if mu == 0.0 {
        return if near(a, PI) { Fate::ToVortex } else { Fate::ToInfinity };
    }
    // Radial directions carry no angular momentum.
    if a == 0.0 {
        return Fate::ToInfinity;
    }
    if a == PI {
        return Fate::ToVortex;
    }
    let sep = separatrix_alpha(r0, mu).expect("mu != 0");
    if near(a, sep) {
        return if on_reeb_radius(r0, mu) {
            Fate::ReebCircle
        } else {
            Fate::Separatrix
        };
    }
    let to_vortex = if mu > 0.0 {
        a >= PI && a < sep
    } else {
        a > sep && a <= PI
    };
    if to_vortex {
        Fate::ToVortex
    } else {
        Fate::ToInfinity
    }
}

/// Sign of the Hamiltonian of the initial covector.
pub fn geodesic_type(alpha: f64, r0: f64, mu: f64) -> GeodesicType {
    let h = mu * alpha.sin() / r0 + 1.0;
    if h.abs() <= H_TOL {
        GeodesicType::Exceptional
    } else if h > 0.0 {
        GeodesicType::Hyperbolic
    } else {
        GeodesicType::Elliptic
    }
}

/// Radial profile: the radius changes direction at most once, exactly when the
/// initial radial velocity points away from the final destination.
pub fn monotonicity(alpha: f64, r0: f64, mu: f64) -> Monotonicity {
    let f = fate(alpha, r0, mu);
    let start = alpha.cos();
    let end = match f {
        Fate::ReebCircle => return Monotonicity::Constant,
        Fate::Separatrix => return Monotonicity::StrictlyMonotone,
        Fate::ToVortex => -1.0,
        Fate::ToInfinity => 1.0,
    };
    if start * end < 0.0 && start.abs() > ANGLE_TOL {
        Monotonicity::OneOscillation
    } else {
        Monotonicity::StrictlyMonotone
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicClassification {
    pub alpha: f64,
    pub fate: Fate,
    pub gtype: GeodesicType,
    pub monotonicity: Monotonicity,
    pub discriminant: DiscriminantData,
    /// Set when `r0 = 2|mu|`, where the case tables meet.
    pub reeb_boundary: bool,
}

pub fn classify(alpha: f64, r0: f64, mu: f64) -> Result<GeodesicClassification> {
    let discriminant = discriminant_data(r0 * alpha.sin(), r0, mu)?;
    Ok(GeodesicClassification {
        alpha,
        fate: fate(alpha, r0, mu),
        gtype: geodesic_type(alpha, r0, mu),
        monotonicity: monotonicity(alpha, r0, mu),
        discriminant,
        reeb_boundary: on_reeb_radius(r0, mu),
    })
}

/// Compact JSON view `{alpha, fate, type, delta, p_theta_star, r1, r2}`.
pub fn report_json(c: &GeodesicClassification) -> serde_json::Value {
    serde_json::json!({
        "alpha": c.alpha,
        "fate": c.fate,
        "type": c.gtype,
        "monotonicity": c.monotonicity,
        "delta": c.discriminant.delta,
        "p_theta_star": c.discriminant.p_theta_star,
        "r1": c.discriminant.r1,
        "r2": c.discriminant.r2,
        "reeb_boundary": c.reeb_boundary,
    })
}

fn check_separatrix_domain(r: f64, mu: f64) -> Result<f64> {
    let m = mu.abs();
    if mu == 0.0 || !(r > 0.0) || r >= 2.0 * m {
        return Err(VzError::Domain(format!(
            "separatrix closed forms need 0 < r < 2|mu| (r={r}, mu={mu})"
        )));
    }
    Ok(m)
}

/// `(dr/dt, dtheta/dt)` along a separating geodesic inside the Reeb disk.
pub fn separatrix_rhs(r: f64, mu: f64) -> Result<(f64, f64)> {
    let m = check_separatrix_domain(r, mu)?;
    let q = 4.0 * m * m;
    let rdot = (q - r * r) / (q + r * r);
    let thdot = mu / (r * r) * (q - 3.0 * r * r) / (q + r * r);
    Ok((rdot, thdot))
}

fn sep_time_primitive(r: f64, m: f64) -> f64 {
    4.0 * m * (r / (2.0 * m)).atanh() - r
}

fn sep_theta_primitive(r: f64, mu: f64) -> f64 {
    let m = mu.abs();
    mu.signum() * (-(r / (2.0 * m)).atanh() - m / r)
}

/// Time needed along the separatrix to go from `r0` to `r`.
pub fn separatrix_time(r: f64, r0: f64, mu: f64) -> Result<f64> {
    let m = check_separatrix_domain(r, mu)?;
    check_separatrix_domain(r0, mu)?;
    Ok(sep_time_primitive(r, m) - sep_time_primitive(r0, m))
}

/// Polar angle along the separatrix issued from `(r0, 0)`.
pub fn separatrix_theta(r: f64, r0: f64, mu: f64) -> Result<f64> {
    check_separatrix_domain(r, mu)?;
    check_separatrix_domain(r0, mu)?;
    Ok(sep_theta_primitive(r, mu) - sep_theta_primitive(r0, mu))
}

/// `f(r) = sqrt((2|mu| - r) / (2|mu| + r)) exp(-|mu| / r)`, with `f(0) = 0`.
pub fn reeb_f(r: f64, mu: f64) -> Result<f64> {
    let m = mu.abs();
    if mu == 0.0 || r < 0.0 || r > 2.0 * m {
        return Err(VzError::Domain(format!("need 0 <= r <= 2|mu| (r={r}, mu={mu})")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(((2.0 * m - r) / (2.0 * m + r)).sqrt() * (-m / r).exp())
}

/// Level-set function of the separating geodesics: `f(r) exp(-sign(mu) theta)`.
#[allow(non_snake_case)]
pub fn reeb_F(r: f64, theta: f64, mu: f64) -> Result<f64> {
    Ok(reeb_f(r, mu)? * (-mu.signum() * theta).exp())
}
