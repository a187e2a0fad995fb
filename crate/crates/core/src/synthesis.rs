//! Wavefronts, cut locus, spheres and balls, and the value function.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VzError};
use crate::flow::{endpoint, StopReason};
use crate::homotopy::{polish_fixed_time, splitting_curve, SplitOptions, SplitPoint, SplittingCurve};
use crate::model::{DriftStrength, VortexProblem};
use crate::shooting::{solve_all, BCExtremal, ShootingProblem};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePoint {
    pub alpha: f64,
    pub x: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfIntersection {
    pub point: [f64; 2],
    pub alpha1: f64,
    pub alpha2: f64,
    /// Whether the crossing was refined to a true splitting point.
    pub polished: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Wavefront {
    pub t: f64,
    /// End points of the geodesics still alive at time `t`, by increasing alpha.
    pub points: Vec<WavePoint>,
    /// Alpha intervals `(last alive, next alive)` bracketing dead directions.
    pub gaps: Vec<(f64, f64)>,
    pub self_intersections: Vec<SelfIntersection>,
}

impl Wavefront {
    /// Polylines between gaps; a gap-free front is returned closed.
    pub fn branches(&self) -> Vec<Vec<[f64; 2]>> {
        branches_of(&self.points, &self.gaps)
    }
}

fn branches_of(points: &[WavePoint], gaps: &[(f64, f64)]) -> Vec<Vec<[f64; 2]>> {
    if points.is_empty() {
        return vec![];
    }
    let in_gap = |a: f64, b: f64| gaps.iter().any(|g| g.0 == a && g.1 == b);
    let mut out: Vec<Vec<[f64; 2]>> = vec![vec![points[0].x]];
    for w in points.windows(2) {
        if in_gap(w[0].alpha, w[1].alpha) {
            out.push(vec![]);
        }
        out.last_mut().unwrap().push(w[1].x);
    }
    let last = points.last().unwrap();
    let closes = !in_gap(last.alpha, points[0].alpha + TWO_PI) && points.len() > 1;
    if closes {
        if out.len() > 1 {
            let first = out.remove(0);
            out.last_mut().unwrap().extend(first);
        } else {
            out[0].push(points[0].x);
        }
    }
    out
}

/// Wavefront sampling options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavefrontOptions {
    /// Chords longer than this are split by inserting midpoint directions.
    pub max_chord: f64,
    pub max_depth: usize,
    pub polish: bool,
}

impl Default for WavefrontOptions {
    fn default() -> Self {
        Self { max_chord: 0.05, max_depth: 8, polish: true }
    }
}

fn alive_point(problem: &VortexProblem, alpha: f64, t: f64) -> Option<[f64; 2]> {
    match endpoint(problem, alpha, t) {
        Ok((_, z, StopReason::ReachedTime)) => Some(z.position()),
        _ => None,
    }
}

/// Inserts midpoints until chords are below `max_chord`; false when the depth
/// budget ran out first.
fn refine(problem: &VortexProblem, t: f64, a: WavePoint, b: WavePoint, opts: &WavefrontOptions, depth: usize, out: &mut Vec<WavePoint>) -> bool {
    let chord = (a.x[0] - b.x[0]).hypot(a.x[1] - b.x[1]);
    if chord <= opts.max_chord {
        return true;
    }
    if depth >= opts.max_depth {
        return false;
    }
    let am = 0.5 * (a.alpha + b.alpha);
    match alive_point(problem, am, t) {
        Some(x) => {
            let m = WavePoint { alpha: am, x };
            let left = refine(problem, t, a, m, opts, depth + 1, out);
            out.push(m);
            let right = refine(problem, t, m, b, opts, depth + 1, out);
            left && right
        }
        None => true,
    }
}

/// Points from `start` towards the alive/dead boundary on the way to `dead`,
/// approached geometrically. Near a grazing direction the front winds
/// without limit, so the approach stops where refinement no longer resolves
/// it or the front comes within `max_chord` of the vortex; extremities are
/// only rough.
fn edge_run(problem: &VortexProblem, t: f64, start: WavePoint, dead: f64, opts: &WavefrontOptions) -> Vec<WavePoint> {
    let (mut lo, mut hi) = (start.alpha, dead);
    while (hi - lo).abs() > 1e-13 {
        let m = 0.5 * (lo + hi);
        if alive_point(problem, m, t).is_some() {
            lo = m;
        } else {
            hi = m;
        }
    }
    let edge = lo;
    let mut out = vec![];
    let mut prev = start;
    let mut d = 0.5 * (start.alpha - edge);
    while d.abs() > 1e-13 {
        if let Some(x) = alive_point(problem, edge + d, t) {
            if x[0].hypot(x[1]) < opts.max_chord {
                break;
            }
            let q = WavePoint { alpha: edge + d, x };
            let mut mids = vec![];
            if !refine(problem, t, prev, q, opts, 0, &mut mids) {
                break;
            }
            out.extend(mids);
            out.push(q);
            prev = q;
        }
        d *= 0.5;
    }
    out
}

/// Wavefront at time `t` from `n` uniformly spaced directions, refined where
/// neighbouring end points are far apart.
pub fn wavefront(problem: &VortexProblem, t: f64, n: usize) -> Result<Wavefront> {
    wavefront_with(problem, t, n, &WavefrontOptions::default())
}

pub fn wavefront_with(problem: &VortexProblem, t: f64, n: usize, opts: &WavefrontOptions) -> Result<Wavefront> {
    if n < 8 {
        return Err(VzError::InvalidInput("wavefront needs at least 8 directions".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(VzError::InvalidInput(format!("time {t} must be finite and >= 0")));
    }
    if t == 0.0 {
        return Ok(Wavefront {
            t,
            points: vec![WavePoint { alpha: 0.0, x: problem.x0 }],
            gaps: vec![],
            self_intersections: vec![],
        });
    }
    let grid: Vec<(f64, Option<[f64; 2]>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = TWO_PI * i as f64 / n as f64;
            (a, alive_point(problem, a, t))
        })
        .collect();
    // Refine each interval between alive neighbours independently.
    let pieces: Vec<Vec<WavePoint>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (a, xa) = grid[i];
            let (b, xb) = grid[(i + 1) % n];
            let b = if i + 1 == n { b + TWO_PI } else { b };
            let mut v = vec![];
            match (xa, xb) {
                (Some(xa), Some(xb)) => {
                    let pa = WavePoint { alpha: a, x: xa };
                    let pb = WavePoint { alpha: b, x: xb };
                    v.push(pa);
                    refine(problem, t, pa, pb, opts, 0, &mut v);
                }
                (Some(xa), None) => {
                    let pa = WavePoint { alpha: a, x: xa };
                    v.push(pa);
                    v.extend(edge_run(problem, t, pa, b, opts));
                }
                (None, Some(xb)) => {
                    v.extend(edge_run(problem, t, WavePoint { alpha: b, x: xb }, a, opts));
                }
                (None, None) => {}
            }
            v
        })
        .collect();
    let mut points: Vec<WavePoint> = pieces.into_iter().flatten().collect();
    for p in points.iter_mut() {
        if p.alpha >= TWO_PI {
            p.alpha -= TWO_PI;
        }
    }
    points.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));

    // A gap joins consecutive kept points that straddle a dead grid direction.
    let mut gaps = vec![];
    let m = points.len();
    for i in 0..m {
        let a = points[i].alpha;
        let b = if i + 1 < m { points[i + 1].alpha } else { points[0].alpha + TWO_PI };
        let dead_between = grid.iter().any(|(g, x)| x.is_none() && [*g, *g + TWO_PI].iter().any(|g| *g > a && *g < b));
        if dead_between {
            gaps.push((a, b));
        }
    }
    if m == 0 {
        gaps.push((0.0, TWO_PI));
    }

    let mut self_intersections = find_crossings(&points, &gaps);
    if opts.polish {
        let polished = self_intersections
            .par_iter()
            .map(|s| {
                let seed = SplitPoint { t, alpha1: s.alpha1, x: s.point, alpha2: s.alpha2 };
                polish_fixed_time(problem, &seed, 1e-10)
                    .ok()
                    .map(|p| SelfIntersection { point: p.x, alpha1: p.alpha1, alpha2: p.alpha2, polished: true })
            })
            .collect::<Vec<_>>();
        self_intersections = vec![];
        for p in polished.into_iter().flatten() {
            let seen = self_intersections.iter().any(|q: &SelfIntersection| {
                (q.alpha1 - p.alpha1).abs() < 1e-8 && (q.alpha2 - p.alpha2).abs() < 1e-8
            });
            if !seen {
                self_intersections.push(p);
            }
        }
    }
    Ok(Wavefront { t, points, gaps, self_intersections })
}

fn seg_intersection(p: [f64; 2], p2: [f64; 2], q: [f64; 2], q2: [f64; 2]) -> Option<(f64, f64)> {
    let r = [p2[0] - p[0], p2[1] - p[1]];
    let s = [q2[0] - q[0], q2[1] - q[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den == 0.0 {
        return None;
    }
    let qp = [q[0] - p[0], q[1] - p[1]];
    let u = (qp[0] * s[1] - qp[1] * s[0]) / den;
    let v = (qp[0] * r[1] - qp[1] * r[0]) / den;
    if (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v) {
        Some((u, v))
    } else {
        None
    }
}

fn find_crossings(points: &[WavePoint], gaps: &[(f64, f64)]) -> Vec<SelfIntersection> {
    let m = points.len();
    if m < 4 {
        return vec![];
    }
    struct Seg {
        a: WavePoint,
        b: WavePoint,
        idx: usize,
        bb: [f64; 4],
    }
    let in_gap = |a: f64, b: f64| gaps.iter().any(|g| g.0 == a && (g.1 == b || g.1 == b + TWO_PI));
    let mut segs = vec![];
    for i in 0..m {
        let a = points[i];
        let mut b = points[(i + 1) % m];
        if i + 1 == m {
            b.alpha += TWO_PI;
        }
        if in_gap(a.alpha, b.alpha) || in_gap(a.alpha, b.alpha - TWO_PI) {
            continue;
        }
        let bb = [a.x[0].min(b.x[0]), a.x[0].max(b.x[0]), a.x[1].min(b.x[1]), a.x[1].max(b.x[1])];
        segs.push(Seg { a, b, idx: i, bb });
    }
    segs.sort_by(|s, t| s.bb[0].total_cmp(&t.bb[0]));
    let mut out = vec![];
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let (s, t) = (&segs[i], &segs[j]);
            if t.bb[0] > s.bb[1] {
                break;
            }
            if t.bb[2] > s.bb[3] || t.bb[3] < s.bb[2] {
                continue;
            }
            let d = s.idx.abs_diff(t.idx);
            if d <= 1 || d + 1 == m {
                continue;
            }
            if let Some((u, v)) = seg_intersection(s.a.x, s.b.x, t.a.x, t.b.x) {
                let a1 = s.a.alpha + u * (s.b.alpha - s.a.alpha);
                let a2 = t.a.alpha + v * (t.b.alpha - t.a.alpha);
                let point = [s.a.x[0] + u * (s.b.x[0] - s.a.x[0]), s.a.x[1] + u * (s.b.x[1] - s.a.x[1])];
                let (alpha1, alpha2) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
                out.push(SelfIntersection { point, alpha1, alpha2, polished: false });
            }
        }
    }
    out.sort_by(|a, b| a.alpha1.total_cmp(&b.alpha1));
    out
}

/// Minimal time to reach the vortex: the radial run `|x0|`.
pub fn t_vor(problem: &VortexProblem) -> f64 {
    problem.r0()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutOptions {
    /// Times at which wavefronts are searched for splitting seeds, as
    /// multiples of `t_vor`.
    pub seed_times: [f64; 4],
    pub wavefront_n: usize,
    pub split: SplitOptions,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self {
            seed_times: [0.97, 0.99, 1.02, 1.1],
            wavefront_n: 720,
            split: SplitOptions { t_cap: f64::INFINITY, ..SplitOptions::default() },
        }
    }
}

/// Lowest splitting curve of the problem, taken as its cut locus.
///
/// Seeds come from self-intersections of wavefronts slightly before and
/// after `t_vor`; each seed not already on a computed curve is continued, and
/// the curve with the smallest minimal time is returned. The identification
/// of this curve with the cut locus rests on the absence of conjugate points
/// and on continuity of the value function, both assumed.
pub fn cut_locus(problem: &VortexProblem) -> Result<SplittingCurve> {
    cut_locus_with(problem, &CutOptions::default())
}

pub fn cut_locus_with(problem: &VortexProblem, opts: &CutOptions) -> Result<SplittingCurve> {
    if problem.strength() != DriftStrength::Weak {
        return Err(VzError::Refused(format!(
            "cut locus is only characterized under weak drift at x0 (|mu| = {} >= |x0| = {})",
            problem.mu.abs(),
            problem.r0()
        )));
    }
    let tv = t_vor(problem);
    let mut split = opts.split;
    if !split.t_cap.is_finite() {
        split.t_cap = 1.5 * tv;
    }
    let mut curves: Vec<SplittingCurve> = vec![];
    for &k in &opts.seed_times {
        let w = wavefront(problem, k * tv, opts.wavefront_n)?;
        let mut seeds: Vec<&SelfIntersection> = w
            .self_intersections
            .iter()
            .filter(|s| s.polished && s.point[0].hypot(s.point[1]) > split.annulus.0)
            .collect();
        seeds.sort_by(|a, b| (b.point[0].hypot(b.point[1])).total_cmp(&a.point[0].hypot(a.point[1])));
        for s in seeds {
            let on_existing = curves.iter().any(|c| distance_to_curve(c, s.point) < 1e-3);
            if on_existing {
                continue;
            }
            let seed = SplitPoint { t: w.t, alpha1: s.alpha1, x: s.point, alpha2: s.alpha2 };
            if let Ok(c) = splitting_curve(problem, &seed, curves.len() + 1, &split) {
                if c.points.len() > 2 {
                    curves.push(c);
                }
            }
        }
        if !curves.is_empty() {
            break;
        }
    }
    let best = curves
        .into_iter()
        .min_by(|a, b| a.min_t().total_cmp(&b.min_t()))
        .ok_or(VzError::NotFound)?;
    Ok(SplittingCurve { label: 1, ..best })
}

/// Euclidean distance from `x` to the polyline of a splitting curve.
pub fn distance_to_curve(c: &SplittingCurve, x: [f64; 2]) -> f64 {
    let pts = &c.points;
    if pts.len() == 1 {
        return (pts[0].x[0] - x[0]).hypot(pts[0].x[1] - x[1]);
    }
    pts.windows(2)
        .map(|w| {
            let (a, b) = (w[0].x, w[1].x);
            let d = [b[0] - a[0], b[1] - a[1]];
            let l2 = d[0] * d[0] + d[1] * d[1];
            let s = if l2 > 0.0 {
                (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (a[0] + s * d[0] - x[0]).hypot(a[1] + s * d[1] - x[1])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Cut times along directions, read off both sides of a splitting curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutMap {
    /// `(alpha, t)` along the first-direction side, continuous in alpha.
    pub side1: Vec<(f64, f64)>,
    /// `(alpha, t)` along the second-direction side.
    pub side2: Vec<(f64, f64)>,
    /// Direction wedges `(lo, hi, t)` enclosed by a curve end that runs into
    /// the vortex at time `t`.
    pub vortex_ends: Vec<(f64, f64, f64)>,
}

/// A splitting curve ending this close to the vortex is taken to reach it.
pub const VORTEX_END_RADIUS: f64 = 0.01;

impl CutMap {
    pub fn from_curve(c: &SplittingCurve) -> Self {
        let mut vortex_ends = vec![];
        if let (Some(first), Some(last)) = (c.points.first(), c.points.last()) {
            for p in if c.points.len() > 1 { vec![first, last] } else { vec![first] } {
                if p.x[0].hypot(p.x[1]) < VORTEX_END_RADIUS {
                    let (lo, hi) = if p.alpha1 <= p.alpha2 { (p.alpha1, p.alpha2) } else { (p.alpha2, p.alpha1) };
                    vortex_ends.push((lo, hi, p.t));
                }
            }
        }
        Self {
            side1: c.points.iter().map(|p| (p.alpha1, p.t)).collect(),
            side2: c.points.iter().map(|p| (p.alpha2, p.t)).collect(),
            vortex_ends,
        }
    }

    /// Cut time of `alpha`, interpolated in alpha; infinite outside coverage.
    pub fn cut_time(&self, alpha: f64) -> f64 {
        let mut best = f64::INFINITY;
        for side in [&self.side1, &self.side2] {
            for w in side.windows(2) {
                let (a0, t0) = w[0];
                let (a1, t1) = w[1];
                let (lo, hi) = if a0 <= a1 { (a0, a1) } else { (a1, a0) };
                for k in -2..=2 {
                    let a = alpha + TWO_PI * k as f64;
                    if a >= lo && a <= hi {
                        let s = if a1 != a0 { (a - a0) / (a1 - a0) } else { 0.0 };
                        best = best.min(t0 + s * (t1 - t0));
                    }
                }
            }
        }
        for &(lo, hi, tc) in &self.vortex_ends {
            if (-2..=2).any(|k| (lo..=hi).contains(&(alpha + TWO_PI * k as f64))) {
                best = best.min(tc);
            }
        }
        best
    }

    /// Direction intervals whose cut time is below `t`.
    pub fn removed_intervals(&self, t: f64) -> Vec<(f64, f64)> {
        let mut out = vec![];
        for side in [&self.side1, &self.side2] {
            let mut start: Option<f64> = None;
            for (k, &(a, tk)) in side.iter().enumerate() {
                if tk < t {
                    if start.is_none() {
                        start = Some(if k == 0 {
                            a
                        } else {
                            let (ap, tp) = side[k - 1];
                            ap + (t - tp) / (tk - tp) * (a - ap)
                        });
                    }
                } else if let Some(s) = start.take() {
                    let (ap, tp) = side[k - 1];
                    let e = ap + (t - tp) / (tk - tp) * (a - ap);
                    out.push(if s <= e { (s, e) } else { (e, s) });
                }
            }
            if let Some(s) = start {
                let e = side.last().unwrap().0;
                out.push(if s <= e { (s, e) } else { (e, s) });
            }
        }
        out.extend(self.vortex_ends.iter().filter(|v| v.2 < t).map(|v| (v.0, v.1)));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallType {
    /// Simply connected with a smooth boundary.
    A,
    /// Annular: a hole around the vortex.
    B,
    /// Simply connected with a boundary singularity on the cut locus.
    C,
    Unknown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereBall {
    pub t: f64,
    pub ball_type: BallType,
    /// Directions removed by the cut or by reaching the vortex, merged.
    pub removed: Vec<(f64, f64)>,
    /// Sphere components, one polyline per surviving direction arc.
    pub arcs: Vec<Vec<[f64; 2]>>,
    /// Points where the sphere meets the cut locus.
    pub singular_points: Vec<SplitPoint>,
}

/// Directions whose geodesic has stopped at the vortex by time `t`.
pub fn dead_intervals(problem: &VortexProblem, t: f64, n: usize) -> Vec<(f64, f64)> {
    let dead = |a: f64| alive_point(problem, a, t).is_none();
    let grid: Vec<bool> = (0..n).into_par_iter().map(|i| dead(TWO_PI * i as f64 / n as f64)).collect();
    if grid.iter().all(|d| *d) {
        return vec![(0.0, TWO_PI)];
    }
    let h = TWO_PI / n as f64;
    let bisect = |mut alive: f64, mut gone: f64| {
        while (alive - gone).abs() > 1e-10 {
            let m = 0.5 * (alive + gone);
            if dead(m) {
                gone = m;
            } else {
                alive = m;
            }
        }
        0.5 * (alive + gone)
    };
    let mut out = vec![];
    for i in 0..n {
        let j = (i + 1) % n;
        if !grid[i] && grid[j] {
            let a0 = i as f64 * h;
            let lo = bisect(a0, a0 + h);
            let mut k = j;
            while grid[k] {
                k = (k + 1) % n;
            }
            let mut b = k as f64 * h;
            if b <= a0 {
                b += TWO_PI;
            }
            let hi = bisect(b, b - h);
            out.push((lo, hi));
        }
    }
    out
}

/// Merges intervals on the circle; returns them within `[0, 4 pi)` sorted.
fn merge_circular(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    for v in iv.iter_mut() {
        let s = v.0.rem_euclid(TWO_PI);
        *v = (s, s + (v.1 - v.0));
    }
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = vec![];
    for (s, e) in iv {
        match out.last_mut() {
            Some(l) if s <= l.1 => l.1 = l.1.max(e),
            _ => out.push((s, e)),
        }
    }
    // Intervals wrapping past 2 pi may overlap the first ones.
    while out.len() > 1 {
        let last = *out.last().unwrap();
        if last.1 - TWO_PI >= out[0].0 {
            let first = out.remove(0);
            let l = out.last_mut().unwrap();
            l.1 = l.1.max(first.1 + TWO_PI);
        } else {
            break;
        }
    }
    out
}

/// Tolerance around `t_inj` and `t_vor` within which the ball type is not
/// decided.
pub const BALL_TYPE_TOL: f64 = 1e-3;

/// Sphere at time `t` and topological type of the ball it bounds.
pub fn sphere_and_ball(problem: &VortexProblem, t: f64, cut: &SplittingCurve) -> Result<SphereBall> {
    let cm = CutMap::from_curve(cut);
    let mut removed = cm.removed_intervals(t);
    removed.extend(dead_intervals(problem, t, 720));
    let removed = merge_circular(removed);
    let covered: f64 = removed.iter().map(|r| r.1 - r.0).sum();
    let t_inj = cut.min_t();
    let tv = t_vor(problem);
    let ball_type = if (t - t_inj).abs() < BALL_TYPE_TOL || (t - tv).abs() < BALL_TYPE_TOL {
        BallType::Unknown
    } else if covered >= TWO_PI {
        BallType::Unknown
    } else {
        match removed.len() {
            0 => BallType::A,
            1 => BallType::C,
            _ => BallType::B,
        }
    };

    // Surviving arcs sampled along alpha.
    let survivors: Vec<(f64, f64)> = if removed.is_empty() {
        vec![(0.0, TWO_PI)]
    } else {
        (0..removed.len())
            .map(|i| {
                let s = removed[i].1;
                let mut e = if i + 1 < removed.len() { removed[i + 1].0 } else { removed[0].0 + TWO_PI };
                if e < s {
                    e += TWO_PI;
                }
                (s, e)
            })
            .filter(|(s, e)| e > s)
            .collect()
    };
    let arcs: Vec<Vec<[f64; 2]>> = survivors
        .par_iter()
        .map(|&(s, e)| {
            let m = ((e - s) / TWO_PI * 720.0).ceil().max(2.0) as usize;
            let coarse: Vec<WavePoint> = (0..=m)
                .filter_map(|k| {
                    let alpha = s + (e - s) * k as f64 / m as f64;
                    alive_point(problem, alpha, t).map(|x| WavePoint { alpha, x })
                })
                .collect();
            let opts = WavefrontOptions::default();
            let mut arc = coarse.first().map(|p| vec![p.x]).unwrap_or_default();
            for w in coarse.windows(2) {
                let mut mids = vec![];
                refine(problem, t, w[0], w[1], &opts, 0, &mut mids);
                arc.extend(mids.iter().map(|p| p.x));
                arc.push(w[1].x);
            }
            arc
        })
        .collect();

    let mut singular_points = vec![];
    let pts = &cut.points;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if (p.t - t) * (q.t - t) < 0.0 {
            let s = (t - p.t) / (q.t - p.t);
            let lerp = |a: f64, b: f64| a + s * (b - a);
            let seed = SplitPoint {
                t,
                alpha1: lerp(p.alpha1, q.alpha1),
                x: [lerp(p.x[0], q.x[0]), lerp(p.x[1], q.x[1])],
                alpha2: lerp(p.alpha2, q.alpha2),
            };
            singular_points.push(polish_fixed_time(problem, &seed, 1e-11).unwrap_or(seed));
        }
    }
    Ok(SphereBall { t, ball_type, removed, arcs, singular_points })
}

/// Value function: the shortest BC-extremal whose time does not exceed the
/// cut time of its direction.
pub fn value(problem: &VortexProblem, xf: [f64; 2], cut: Option<&CutMap>, n_starts: usize) -> Result<(f64, BCExtremal)> {
    let sp = ShootingProblem::new(*problem, xf)?;
    let all = solve_all(&sp, n_starts)?;
    all.into_iter()
        .find(|b| cut.map_or(true, |c| b.t <= c.cut_time(b.alpha) + 1e-9))
        .map(|b| (b.t, b))
        .ok_or(VzError::NotFound)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub t_inj: f64,
    pub t_vor: f64,
    pub cut_curve: SplittingCurve,
    pub balls: Vec<(f64, BallType)>,
    pub assumptions: Vec<String>,
}

pub const ASSUMPTIONS: [&str; 2] = [
    "the conjugate locus is empty (numerical evidence only)",
    "the value function is continuous, so the cut locus is the lowest splitting curve",
];

/// Cut locus, injectivity radius and ball types at the requested times.
pub fn synthesis(problem: &VortexProblem, times: &[f64]) -> Result<SynthesisReport> {
    let cut = cut_locus(problem)?;
    let balls = times
        .iter()
        .map(|&t| sphere_and_ball(problem, t, &cut).map(|s| (t, s.ball_type)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthesisReport {
        t_inj: cut.min_t(),
        t_vor: t_vor(problem),
        cut_curve: cut,
        balls,
        assumptions: ASSUMPTIONS.iter().map(|s| s.to_string()).collect(),
    })
}
