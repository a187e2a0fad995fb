use std::f64::consts::PI;

use serde_json::{json, Value};
use zermelo_vortex::classify::{
    abnormal_angles, alpha_stars, classify, report_json, reeb_f, separatrix_alpha, Fate,
};
use zermelo_vortex::flow::{
    exponential_sampled, flow_state, hamiltonian, initial_state, ExtremalState, StopReason,
};
use zermelo_vortex::homotopy::{splitting_curve, SplitOptions, SplitPoint, SplittingCurve};
use zermelo_vortex::jacobi::{conjugate_scan, conjugate_test};
use zermelo_vortex::shooting::{solve_all, BCExtremal, ShootingProblem};
use zermelo_vortex::synthesis::{
    cut_locus_with, sphere_and_ball, t_vor, wavefront_with, BallType, CutOptions, WavefrontOptions,
    ASSUMPTIONS,
};
use zermelo_vortex::VortexProblem;

use crate::error::{CliError, CliResult};
use crate::output::{jnum, num, opt_num, time_tag, OutDir};
use crate::svg::{Item, Plot, Style, BLACK, BLUE, PALETTE, RED};
use crate::{
    ClassifyArgs, Command, ConjugateArgs, GeodesicArgs, RenderArgs, ShootArgs, SplitArgs, SplittingArgs,
    SynthesisArgs, WavefrontArgs,
};

pub fn run(cmd: Command) -> CliResult<Value> {
    match cmd {
        Command::Geodesic(a) => geodesic(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Shoot(a) => shoot(a),
        Command::ConjugateScan(a) => conjugate(a),
        Command::Wavefront(a) => wavefront_cmd(a),
        Command::Splitting(a) => splitting(a),
        Command::Synthesis(a) => synthesis(a),
        Command::Render(a) => render(a),
    }
}

fn problem_json(p: &VortexProblem) -> Value {
    json!({ "mu": p.mu, "x0": p.x0, "strength": p.strength() })
}

fn finish(command: &str, out: OutDir, summary: Value) -> CliResult<Value> {
    Ok(json!({ "command": command, "files": out.files, "summary": summary }))
}

fn stop_name(s: StopReason) -> String {
    format!("{s:?}")
}

fn enum_name<T: std::fmt::Debug>(v: &T) -> String {
    format!("{v:?}")
}

fn rotate(x: [f64; 2], phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1]]
}

fn check_positive(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn check_count(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return Err(CliError::Config(format!("--{name} must be at least 1")));
    }
    Ok(())
}

// ---------------------------------------------------------------- geodesic

/// States of the geodesic from `z0` backward in time, at steps of `dt`.
fn backward_samples(p: &VortexProblem, z0: ExtremalState, t: f64, n: usize) -> CliResult<(Vec<(f64, ExtremalState)>, StopReason)> {
    let dt = t / n as f64;
    let mut out = vec![(0.0, z0)];
    let mut z = z0;
    let mut s = 0.0;
    for _ in 0..n {
        let (tr, zn, stop) = flow_state(p.mu, &z, -dt, &p.tol)?;
        s += tr;
        out.push((s, zn));
        z = zn;
        if stop != StopReason::ReachedTime {
            return Ok((out, stop));
        }
    }
    Ok((out, StopReason::ReachedTime))
}

fn geodesic(a: GeodesicArgs) -> CliResult<Value> {
    let p = a.problem.load()?;
    check_positive("t", a.t)?;
    check_count("samples", a.samples)?;
    check_count("rotations", a.rotations)?;
    let (r0, mu) = (p.r0(), p.mu);
    let mut dirs = a.alpha.clone();
    dirs.extend((0..a.fan).map(|i| 2.0 * PI * i as f64 / a.fan as f64));
    if a.separatrix {
        dirs.extend(separatrix_alpha(r0, mu));
    }
    if a.abnormal {
        dirs.extend(abnormal_angles(r0, mu).to_vec());
    }
    if dirs.is_empty() {
        return Err(CliError::Config("no directions: use --alpha, --fan, --separatrix or --abnormal".into()));
    }
    let times: Vec<f64> = (0..=a.samples).map(|k| a.t * k as f64 / a.samples as f64).collect();

    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let mut rows = vec![];
    let mut summary = vec![];
    let mut plot = Plot::plane("geodesics");
    plot.viewport = a.out.viewport();
    for (id, &alpha) in dirs.iter().enumerate() {
        let fwd = exponential_sampled(&p, alpha, &times)?;
        let mut branches = vec![("forward", fwd.samples.clone(), fwd.stop_reason)];
        if a.backward {
            let (s, stop) = backward_samples(&p, initial_state(&p, alpha), a.t, a.samples)?;
            branches.push(("backward", s, stop));
        }
        let color = PALETTE[id % PALETTE.len()];
        for k in 0..a.rotations {
            let phi = 2.0 * PI * k as f64 / a.rotations as f64;
            for (name, samples, _) in &branches {
                let mut line = vec![];
                for (t, z) in samples {
                    let x = rotate(z.position(), phi);
                    line.push(x);
                    rows.push(vec![
                        id.to_string(),
                        num(alpha),
                        k.to_string(),
                        name.to_string(),
                        num(*t),
                        num(z.r),
                        num(z.theta + phi),
                        num(z.p_r),
                        num(z.p_theta),
                        num(x[0]),
                        num(x[1]),
                        num(hamiltonian(z, mu)),
                    ]);
                }
                let st = Style::line(color);
                plot.push(Item::Polyline(line, if *name == "backward" { st.dashed() } else { st }));
            }
        }
        let mut entry = json!({
            "id": id,
            "alpha": alpha,
            "classification": report_json(&classify(alpha, r0, mu)?),
        });
        for (name, samples, stop) in &branches {
            entry[*name] = json!({ "t_end": samples.last().map(|s| s.0), "stop_reason": stop_name(*stop) });
        }
        summary.push(entry);
    }
    out.csv(
        "geodesic.csv",
        &["id", "alpha", "rotation", "direction", "t", "r", "theta", "p_r", "p_theta", "x1", "x2", "H"],
        rows,
    )?;
    let s = json!({ "problem": problem_json(&p), "t": a.t, "geodesics": summary });
    out.json("geodesic.json", &s)?;
    if a.reeb {
        plot.reeb_overlay(mu);
    }
    for k in 0..a.rotations {
        plot.vortex_and_start(rotate(p.x0, 2.0 * PI * k as f64 / a.rotations as f64));
    }
    out.svg("geodesic.svg", &plot)?;
    finish("geodesic", out, s)
}

// ---------------------------------------------------------------- classify

fn fate_color(f: Fate) -> &'static str {
    match f {
        Fate::ToVortex => RED,
        Fate::ToInfinity => BLUE,
        Fate::Separatrix => BLACK,
        Fate::ReebCircle => PALETTE[1],
    }
}

/// Samples of `r` on `(0, 2|mu|)` clustered at both ends, where the leaves spiral.
fn reeb_radii(mu: f64) -> Vec<f64> {
    let m = mu.abs();
    (0..=6000)
        .map(|k| -4.0 + 34.0 * k as f64 / 6000.0)
        .map(|u: f64| 2.0 * m / (1.0 + (-u).exp()))
        .filter(|r| *r > 0.0 && *r < 2.0 * m)
        .collect()
}

fn classify_cmd(a: ClassifyArgs) -> CliResult<Value> {
    let p = a.problem.load()?;
    let (r0, mu) = (p.r0(), p.mu);
    let mut dirs = a.alpha.clone();
    let grid = a.grid.unwrap_or(if dirs.is_empty() { 360 } else { 0 });
    dirs.extend((0..grid).map(|i| 2.0 * PI * i as f64 / grid as f64));

    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let mut rows = vec![];
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    let mut plot = Plot::plane("initial directions x0 + F0(x0) + u(alpha)");
    plot.viewport = a.out.viewport();
    let drift = [-mu * p.x0[1] / (r0 * r0), mu * p.x0[0] / (r0 * r0)];
    for &alpha in &dirs {
        let c = classify(alpha, r0, mu)?;
        *counts.entry(enum_name(&c.fate)).or_default() += 1;
        rows.push(vec![
            num(alpha),
            enum_name(&c.fate),
            enum_name(&c.gtype),
            enum_name(&c.monotonicity),
            num(c.discriminant.delta),
            num(c.discriminant.p_theta_star),
            opt_num(c.discriminant.r1),
            opt_num(c.discriminant.r2),
        ]);
        // The control angle is measured from the radial direction at x0.
        let u = rotate([alpha.cos(), alpha.sin()], p.theta0());
        let tip = [p.x0[0] + drift[0] + u[0], p.x0[1] + drift[1] + u[1]];
        plot.push(Item::Dot(tip, 2.0, fate_color(c.fate).into()));
    }
    out.csv("classify.csv", &["alpha", "fate", "type", "monotonicity", "delta", "p_theta_star", "r1", "r2"], rows)?;
    let (s1, s2) = alpha_stars(r0, mu);
    let mut s = json!({
        "problem": problem_json(&p),
        "alpha_stars": [s1, s2],
        "separatrix_alpha": separatrix_alpha(r0, mu),
        "abnormal_angles": abnormal_angles(r0, mu).to_vec(),
        "counts": counts,
    });
    let centre = [p.x0[0] + drift[0], p.x0[1] + drift[1]];
    plot.push(Item::Circle(centre, 1.0, Style::line(BLACK).dashed()));
    plot.push(Item::Polyline(vec![p.x0, [p.x0[0] + drift[0], p.x0[1] + drift[1]]], Style::line(BLACK)));
    plot.vortex_and_start(p.x0);
    out.svg("classify.svg", &plot)?;

    if a.reeb {
        if mu == 0.0 {
            return Err(CliError::Config("--reeb needs a nonzero circulation".into()));
        }
        check_count("leaves", a.leaves)?;
        let radii = reeb_radii(mu);
        let mut graph_rows = vec![];
        let mut graph = vec![];
        for &r in &radii {
            let y = -reeb_f(r, mu)?.ln();
            graph_rows.push(vec![num(r), num(y)]);
            graph.push([r, y]);
        }
        out.csv("reeb.csv", &["r", "minus_ln_f"], graph_rows)?;
        let r_min = 2.0 * mu.abs() / 3f64.sqrt();
        let y_min = -reeb_f(r_min, mu)?.ln();
        let mut g = Plot::graph("-ln f(r)", "r", "-ln f");
        g.viewport = Some([0.0, 2.0 * mu.abs(), y_min - 0.5, y_min + 4.0]);
        g.push(Item::Polyline(graph, Style::line(BLUE)));
        g.push(Item::HLine(y_min, Style::line(BLACK).dashed().width(0.6)));
        out.svg("reeb_graph.svg", &g)?;

        // Leaves f(r) exp(-sign(mu) theta) = const, rotated copies of one another.
        let sg = mu.signum();
        let mut leaf_rows = vec![];
        let mut fol = Plot::plane("Reeb foliation of the disk of radius 2|mu|");
        fol.viewport = a.out.viewport();
        for k in 0..a.leaves {
            let th0 = 2.0 * PI * k as f64 / a.leaves as f64;
            let mut line = vec![];
            for &r in &radii {
                let th = th0 + sg * reeb_f(r, mu)?.ln();
                let x = [r * th.cos(), r * th.sin()];
                leaf_rows.push(vec![k.to_string(), num(r), num(th), num(x[0]), num(x[1])]);
                line.push(x);
            }
            fol.push(Item::Polyline(line, Style::line(BLUE).width(0.8)));
        }
        out.csv("reeb_leaves.csv", &["leaf", "r", "theta", "x1", "x2"], leaf_rows)?;
        fol.reeb_overlay(mu);
        fol.push(Item::Dot([0.0, 0.0], 3.5, RED.into()));
        out.svg("reeb_foliation.svg", &fol)?;
        s["reeb"] = json!({ "radius": 2.0 * mu.abs(), "argmin_radius": r_min, "min_minus_ln_f": y_min });
    }
    out.json("classify.json", &s)?;
    finish("classify", out, s)
}

// ---------------------------------------------------------------- shoot

fn parse_targets(path: &std::path::Path) -> CliResult<Vec<[f64; 2]>> {
    let s = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read batch file {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&s).map_err(|e| CliError::Config(format!("batch file: {e}")))?;
    let list = v.as_array().ok_or_else(|| CliError::Config("batch file must hold a JSON list".into()))?;
    list.iter()
        .enumerate()
        .map(|(i, t)| {
            let xy = t.get("xf").unwrap_or(t);
            match xy.as_array().map(|a| a.iter().map(Value::as_f64).collect::<Vec<_>>()) {
                Some(a) if a.len() == 2 && a.iter().all(Option::is_some) => Ok([a[0].unwrap(), a[1].unwrap()]),
                _ => Err(CliError::Config(format!("batch entry {i} is not [x1, x2] or {{\"xf\": [x1, x2]}}"))),
            }
        })
        .collect()
}

fn shoot_one(p: &VortexProblem, xf: [f64; 2], n_starts: usize) -> CliResult<Vec<BCExtremal>> {
    let sols = solve_all(&ShootingProblem::new(*p, xf)?, n_starts)?;
    if sols.is_empty() {
        return Err(CliError::Numeric(format!("no BC-extremal found for xf = {xf:?}; try a larger --n-starts")));
    }
    Ok(sols)
}

fn shoot(a: ShootArgs) -> CliResult<Value> {
    let p = a.problem.load()?;
    check_count("n-starts", a.n_starts)?;
    check_count("samples", a.samples)?;
    let (targets, batch) = match (&a.xf, &a.batch) {
        (Some(x), None) => (vec![[x[0], x[1]]], false),
        (None, Some(f)) => (parse_targets(f)?, true),
        _ => return Err(CliError::Config("give --xf X1 X2 or --batch FILE".into())),
    };
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let mut results = vec![];
    let mut rows = vec![];
    let mut traj_rows = vec![];
    let mut plot = Plot::plane("time-minimal geodesics");
    plot.viewport = a.out.viewport();
    let mut failures = vec![];
    for (i, &xf) in targets.iter().enumerate() {
        let sols = match shoot_one(&p, xf, a.n_starts) {
            Ok(s) => s,
            Err(e) if batch => {
                results.push(json!({ "xf": xf, "error": e.to_json()["error"] }));
                failures.push(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        for (rank, b) in sols.iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                num(xf[0]),
                num(xf[1]),
                rank.to_string(),
                num(b.t),
                num(b.alpha),
                num(b.residual),
                enum_name(&b.classification.fate),
                enum_name(&b.classification.gtype),
            ]);
        }
        let best = &sols[0];
        let times: Vec<f64> = (0..=a.samples).map(|k| best.t * k as f64 / a.samples as f64).collect();
        let tr = exponential_sampled(&p, best.alpha, &times)?;
        let mut line = vec![];
        for (t, z) in &tr.samples {
            let x = z.position();
            line.push(x);
            traj_rows.push(vec![i.to_string(), num(*t), num(z.r), num(z.theta), num(x[0]), num(x[1])]);
        }
        plot.push(Item::Polyline(line, Style::line(PALETTE[i % PALETTE.len()]).width(1.6)));
        plot.push(Item::Dot(xf, 3.0, BLUE.into()));
        let mut r = best.summary_json();
        r["xf"] = json!(xf);
        r["solutions"] = json!(sols.iter().map(BCExtremal::summary_json).collect::<Vec<_>>());
        results.push(r);
    }
    out.csv("shoot.csv", &["target", "xf1", "xf2", "rank", "T", "alpha", "residual", "fate", "type"], rows)?;
    out.csv("shoot_trajectory.csv", &["target", "t", "r", "theta", "x1", "x2"], traj_rows)?;
    let s = if batch { json!(results) } else { results.pop().unwrap() };
    out.json("shoot.json", &s)?;
    plot.vortex_and_start(p.x0);
    out.svg("shoot.svg", &plot)?;
    if let Some(e) = failures.first() {
        return Err(CliError::Numeric(format!(
            "{} of {} targets failed (first: {e}); results written to {}",
            failures.len(),
            targets.len(),
            a.out.out.display()
        )));
    }
    finish("shoot", out, s)
}

// ---------------------------------------------------------------- conjugate-scan

fn decimate(curve: &[(f64, f64)], max: usize, log: bool) -> Vec<[f64; 2]> {
    let step = curve.len().div_ceil(max).max(1);
    curve
        .iter()
        .step_by(step)
        .chain(curve.last())
        .map(|&(t, s)| [t, if log { s.max(1e-300).log10() } else { s }])
        .collect()
}

fn conjugate(a: ConjugateArgs) -> CliResult<Value> {
    let p = a.problem.load()?;
    check_positive("tmax", a.tmax)?;
    check_count("samples", a.samples)?;
    let (r0, mu) = (p.r0(), p.mu);
    let scan = conjugate_scan(&p, a.n, a.tmax, a.samples)?;
    let sep = match separatrix_alpha(r0, mu) {
        Some(s) => Some(conjugate_test(&p, s, a.tmax, a.samples)?),
        None => None,
    };

    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let mut rows = vec![];
    let mut curve_rows = vec![];
    let mut plateau = std::collections::BTreeMap::<String, (f64, f64)>::new();
    let mut theta = Plot::graph("sigma_min(t), escaping directions", "t", "sigma_min");
    let mut lambda = Plot::graph("log10 sigma_min(t), vortex-bound directions", "t", "log10 sigma_min");
    let stride = (a.n / 250).max(1);
    for (i, (alpha, r)) in scan.alpha_grid.iter().zip(&scan.tests).enumerate() {
        let fate = zermelo_vortex::classify::fate(*alpha, r0, mu);
        match r {
            Ok(c) => {
                rows.push(vec![
                    num(*alpha),
                    enum_name(&fate),
                    opt_num(c.first_zero),
                    stop_name(c.stop_reason),
                    num(c.t_stop),
                    num(c.sigma_end),
                    String::new(),
                ]);
                let e = plateau.entry(enum_name(&fate)).or_insert((f64::INFINITY, f64::NEG_INFINITY));
                *e = (e.0.min(c.sigma_end), e.1.max(c.sigma_end));
                if a.curves {
                    for (t, s) in &c.sigma {
                        curve_rows.push(vec![num(*alpha), num(*t), num(*s)]);
                    }
                }
                if i % stride == 0 {
                    let color = Style::line(BLUE).width(0.5);
                    match fate {
                        Fate::ToInfinity => theta.push(Item::Polyline(decimate(&c.sigma, 200, false), color)),
                        Fate::ToVortex => lambda.push(Item::Polyline(decimate(&c.sigma, 200, true), color)),
                        _ => {}
                    }
                }
            }
            Err(e) => rows.push(vec![num(*alpha), enum_name(&fate), String::new(), String::new(), String::new(), String::new(), e.clone()]),
        }
    }
    out.csv("conjugate.csv", &["alpha", "fate", "first_zero", "stop_reason", "t_stop", "sigma_end", "error"], rows)?;
    if a.curves {
        out.csv("conjugate_curves.csv", &["alpha", "t", "sigma_min"], curve_rows)?;
    }
    if let Some(c) = &sep {
        theta.push(Item::Polyline(decimate(&c.sigma, 400, false), Style::line(RED).width(1.5)));
        lambda.push(Item::Polyline(decimate(&c.sigma, 400, true), Style::line(RED).width(1.5)));
    }
    out.svg("conjugate_theta.svg", &theta)?;
    out.svg("conjugate_lambda.svg", &lambda)?;

    let mut s = scan.summary_json();
    s["problem"] = problem_json(&p);
    s["t_max"] = json!(a.tmax);
    s["samples"] = json!(a.samples);
    s["sigma_end_range"] = json!(plateau
        .iter()
        .map(|(k, (lo, hi))| (k.clone(), json!([jnum(*lo), jnum(*hi)])))
        .collect::<serde_json::Map<_, _>>());
    s["separatrix"] = match &sep {
        Some(c) => json!({ "alpha": c.alpha, "first_zero": c.first_zero, "sigma_end": c.sigma_end }),
        None => Value::Null,
    };
    out.json("conjugate.json", &s)?;
    finish("conjugate-scan", out, s)
}

// ---------------------------------------------------------------- wavefront

fn wavefront_cmd(a: WavefrontArgs) -> CliResult<Value> {
    let p = a.problem.load()?;
    check_count("n", a.n)?;
    check_positive("max-chord", a.max_chord)?;
    let opts = WavefrontOptions { max_chord: a.max_chord, max_depth: a.max_depth, polish: !a.no_polish };
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let (mut pts, mut br, mut cr) = (vec![], vec![], vec![]);
    let mut summary = vec![];
    for &t in &a.t {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Config(format!("--t values must be finite and >= 0, got {t}")));
        }
        let w = wavefront_with(&p, t, a.n, &opts)?;
        for q in &w.points {
            pts.push(vec![num(t), num(q.alpha), num(q.x[0]), num(q.x[1])]);
        }
        let branches = w.branches();
        let mut plot = Plot::plane(format!("wavefront t = {t}"));
        plot.viewport = a.out.viewport();
        for (b, line) in branches.iter().enumerate() {
            for (k, x) in line.iter().enumerate() {
                br.push(vec![num(t), b.to_string(), k.to_string(), num(x[0]), num(x[1])]);
            }
            plot.push(Item::Polyline(line.clone(), Style::line(BLACK)));
        }
        for s in &w.self_intersections {
            cr.push(vec![num(t), num(s.point[0]), num(s.point[1]), num(s.alpha1), num(s.alpha2), s.polished.to_string()]);
            if s.polished {
                plot.push(Item::Dot(s.point, 2.5, BLUE.into()));
            }
        }
        if a.reeb {
            plot.reeb_overlay(p.mu);
        }
        plot.vortex_and_start(p.x0);
        out.svg(&format!("wavefront_t{}.svg", time_tag(t)), &plot)?;
        summary.push(json!({
            "t": t,
            "points": w.points.len(),
            "branches": branches.len(),
            "gaps": w.gaps,
            "self_intersections": w.self_intersections.len(),
            "polished_self_intersections": w.self_intersections.iter().filter(|s| s.polished).count(),
        }));
    }
    out.csv("wavefront_points.csv", &["t", "alpha", "x1", "x2"], pts)?;
    out.csv("wavefront.csv", &["t", "branch", "vertex", "x1", "x2"], br)?;
    out.csv("wavefront_crossings.csv", &["t", "x1", "x2", "alpha1", "alpha2", "polished"], cr)?;
    let s = json!({ "problem": problem_json(&p), "n": a.n, "wavefronts": summary });
    out.json("wavefront.json", &s)?;
    finish("wavefront", out, s)
}

// ---------------------------------------------------------------- splitting

fn split_options(a: &SplitArgs) -> CliResult<SplitOptions> {
    let (r_in, r_out) = (a.annulus[0], a.annulus[1]);
    if !(r_in >= 0.0 && r_out > r_in) {
        return Err(CliError::Config(format!("--annulus needs 0 <= RIN < ROUT, got {r_in} {r_out}")));
    }
    check_positive("dx-max", a.dx_max)?;
    Ok(SplitOptions {
        annulus: (r_in, r_out),
        t_cap: a.t_cap.unwrap_or(f64::INFINITY),
        dx_max: a.dx_max,
        ..SplitOptions::default()
    })
}

fn curve_csv(out: &mut OutDir, name: &str, c: &SplittingCurve) -> CliResult<()> {
    out.csv(name, &SplittingCurve::CSV_HEADER, c.csv_rows().iter().map(|r| r.iter().map(|v| num(*v)).collect()))
}

fn splitting(a: SplittingArgs) -> CliResult<Value> {
    let p = a.problem.load()?;
    let opts = split_options(&a.split)?;
    let curve = match &a.seed {
        Some(s) => {
            let seed = SplitPoint { t: s[0], alpha1: s[1], x: [s[2], s[3]], alpha2: s[4] };
            splitting_curve(&p, &seed, 1, &opts)?
        }
        None => cut_locus_with(&p, &CutOptions { split: opts, ..CutOptions::default() })?,
    };
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    curve_csv(&mut out, "splitting.csv", &curve)?;
    let mut s = curve.summary_json();
    s["problem"] = problem_json(&p);
    s["t_inj"] = json!(curve.min_t());
    s["t_vor"] = json!(t_vor(&p));
    out.json("splitting.json", &s)?;

    let mut plane = Plot::plane("splitting curve");
    plane.viewport = a.out.viewport();
    plane.push(Item::Polyline(curve.points.iter().map(|q| q.x).collect(), Style::line(BLUE).width(1.5)));
    plane.vortex_and_start(p.x0);
    out.svg("splitting_plane.svg", &plane)?;
    let mut graph = Plot::graph("t(alpha2) along the splitting curve", "alpha2", "t");
    graph.push(Item::Polyline(curve.t_of_alpha2().iter().map(|&(l, t)| [l, t]).collect(), Style::line(BLUE).width(1.5)));
    graph.push(Item::HLine(curve.min_t(), Style::line(BLACK).dashed()));
    graph.push(Item::HLine(t_vor(&p), Style::line(RED).dashed()));
    out.svg("splitting_t_alpha.svg", &graph)?;
    finish("splitting", out, s)
}

// ---------------------------------------------------------------- synthesis

fn synthesis(a: SynthesisArgs) -> CliResult<Value> {
    let p = a.problem.load()?;
    for &t in &a.t {
        check_positive("t", t)?;
    }
    let cut = cut_locus_with(&p, &CutOptions::default())?;
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    curve_csv(&mut out, "cut_curve.csv", &cut)?;

    let clipped: Vec<[f64; 2]> = cut
        .points
        .iter()
        .map(|q| if q.x[0].hypot(q.x[1]) < a.cut_clip { [f64::NAN; 2] } else { q.x })
        .collect();
    let cut_style = Style::line(BLUE).width(1.5);
    let mut spheres = Plot::plane("spheres and cut locus");
    spheres.viewport = a.out.viewport();
    spheres.push(Item::Polyline(clipped.clone(), cut_style.clone()));
    let (mut sphere_rows, mut sing_rows, mut balls) = (vec![], vec![], vec![]);
    for &t in &a.t {
        let sb = sphere_and_ball(&p, t, &cut)?;
        for (k, arc) in sb.arcs.iter().enumerate() {
            for (j, x) in arc.iter().enumerate() {
                sphere_rows.push(vec![num(t), k.to_string(), j.to_string(), num(x[0]), num(x[1])]);
            }
        }
        for s in &sb.singular_points {
            sing_rows.push(vec![num(t), num(s.x[0]), num(s.x[1]), num(s.alpha1), num(s.alpha2)]);
        }
        let color = if sb.ball_type == BallType::B { BLUE } else { BLACK };
        for arc in &sb.arcs {
            spheres.push(Item::Polyline(arc.clone(), Style::line(color)));
        }
        let mut ball = Plot::plane(format!("ball t = {t}, type {:?}", sb.ball_type));
        ball.viewport = a.out.viewport();
        ball.push(Item::Rings(sb.arcs.clone(), Style::line(BLACK).fill(BLUE)));
        ball.push(Item::Polyline(clipped.clone(), cut_style.clone().dashed().width(0.8)));
        for s in &sb.singular_points {
            ball.push(Item::Dot(s.x, 2.5, BLUE.into()));
        }
        ball.vortex_and_start(p.x0);
        out.svg(&format!("ball_t{}.svg", time_tag(t)), &ball)?;
        balls.push(json!({
            "t": t,
            "type": enum_name(&sb.ball_type),
            "removed": sb.removed,
            "components": sb.arcs.len(),
            "singular_points": sb.singular_points.iter().map(|s| s.x).collect::<Vec<_>>(),
        }));
    }
    spheres.vortex_and_start(p.x0);
    out.svg("spheres.svg", &spheres)?;
    out.csv("spheres.csv", &["t", "arc", "vertex", "x1", "x2"], sphere_rows)?;
    out.csv("sphere_singular.csv", &["t", "x1", "x2", "alpha1", "alpha2"], sing_rows)?;
    let s = json!({
        "problem": problem_json(&p),
        "t_inj": cut.min_t(),
        "t_vor": t_vor(&p),
        "ball_type": balls,
        "cut_curve_file": "cut_curve.csv",
        "cut_curve": cut.summary_json(),
        "assumptions": ASSUMPTIONS,
    });
    out.json("synthesis.json", &s)?;
    finish("synthesis", out, s)
}

// ---------------------------------------------------------------- render

fn render(a: RenderArgs) -> CliResult<Value> {
    let mut rdr = csv::Reader::from_path(&a.input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", a.input.display())))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("missing column '{name}' in {}", a.input.display())))
    };
    // A header-less (empty) file renders as an empty plot.
    let empty = headers.is_empty();
    let mut lines: Vec<Vec<[f64; 2]>> = vec![];
    let mut rows = 0usize;
    if !empty {
        let (ix, iy) = (col(&a.x)?, col(&a.y)?);
        let ig = a.group.as_deref().map(col).transpose()?;
        let mut last: Option<String> = None;
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| rec.get(i).and_then(|v| v.trim().parse::<f64>().ok()).unwrap_or(f64::NAN);
            let g = ig.and_then(|i| rec.get(i).map(String::from));
            if lines.is_empty() || g != last {
                lines.push(vec![]);
                last = g;
            }
            lines.last_mut().unwrap().push([parse(ix), parse(iy)]);
            rows += 1;
        }
    }
    let mut plot = if a.graph {
        Plot::graph(a.input.display().to_string(), &a.x, &a.y)
    } else {
        Plot { xlabel: a.x.clone(), ylabel: a.y.clone(), ..Plot::plane(a.input.display().to_string()) }
    };
    plot.viewport = a.out.viewport();
    for (i, l) in lines.into_iter().enumerate() {
        plot.push(Item::Polyline(l, Style::line(PALETTE[i % PALETTE.len()])));
    }
    if let Some(mu) = a.reeb_mu {
        plot.reeb_overlay(mu);
    }
    if a.vortex {
        plot.push(Item::Dot([0.0, 0.0], 3.5, RED.into()));
    }
    let mut out = OutDir::create(&a.out.out, true)?;
    out.svg_always(&a.output, &plot)?;
    let s = json!({ "input": a.input.display().to_string(), "rows": rows });
    finish("render", out, s)
}
