//! `kernel`: frozen-symbol convolution kernel slices of the weighted
//! semigroup, with least-squares decay fits against `(1 + |y|/t)`.

use crate::config::RunConfig;
use crate::out::{fmt, OutDir};
use poisson_dn::grid::TorusGrid;
use poisson_dn::psdo::{WeightEngine, WeightKind};
use poisson_dn::report::{CheckReport, RunReport};
use poisson_dn::{CoreError, Result};
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn parse_weight(tag: &str) -> Result<WeightKind> {
    match tag {
        "unit" => Ok(WeightKind::Unit),
        "pi-prime" => Ok(WeightKind::PiPrime(0)),
        "zeta" => Ok(WeightKind::ZetaBs { s: 0.5 }),
        "q-weight" => Ok(WeightKind::QWeight { axis: 0, eps: 0.5 }),
        other => Err(CoreError::Config(format!(
            "unknown weight tag `{other}` (expected unit | pi-prime | zeta | q-weight)"
        ))),
    }
}

/// Displacement of node `m` from the origin node, wrapped to
/// `[-L/2, L/2)` per axis; returns (signed first component, radial norm).
fn offset(grid: &TorusGrid, m: usize) -> (f64, f64) {
    let l = grid.l();
    let x = grid.x(m);
    let wrap = |v: f64| if v >= l / 2.0 { v - l } else { v };
    let y1 = wrap(x[0]);
    let y2 = if grid.d() == 2 { wrap(x[1]) } else { 0.0 };
    (y1, (y1 * y1 + y2 * y2).sqrt())
}

/// Least-squares line `ln k = a + b ln(1 + y/t)` over the window
/// `lo * t <= y <= L/4`; returns (slope b, intercept a).
fn fit(points: &[(f64, f64)], t: f64, lo: f64, l: f64) -> Result<(f64, f64)> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for &(y, k) in points {
        if y < lo * t || y > l / 4.0 || k < 1e-300 {
            continue;
        }
        lx.push((1.0 + y / t).ln());
        ly.push(k.ln());
    }
    if lx.len() < 8 {
        return Err(CoreError::Verify(
            "kernel decay fit has too few points (widen the torus or lower t)".into(),
        ));
    }
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    let slope = num / den;
    Ok((slope, my - slope * mx))
}

pub fn run(rc: &RunConfig, tag: &str, times: &[f64], out: &OutDir) -> Result<bool> {
    let kind = parse_weight(tag)?;
    if times.is_empty() {
        return Err(CoreError::Config("--times needs at least one value".into()));
    }
    if times.iter().any(|&t| !(t > 0.0)) {
        return Err(CoreError::Config("--times must be positive".into()));
    }
    let d = rc.grid.d;
    let field = rc.field()?;
    let grid = TorusGrid::new(d, rc.grid.n, rc.grid.l)?;
    let engine = WeightEngine::new(&field, grid)?;
    let w = engine.weight(kind)?;
    let x0 = 0usize;

    let params = {
        let mut p = rc.params();
        p.insert("weight".into(), tag.into());
        p.insert(
            "times".into(),
            times.iter().map(|t| fmt(*t)).collect::<Vec<_>>().join(";"),
        );
        p
    };
    let base = |name: &str, identity: &str| CheckReport {
        name: name.into(),
        identity: identity.into(),
        family: rc.family_label(),
        params: params.clone(),
        measured: 0.0,
        tol: 0.0,
        pass: true,
        extra: BTreeMap::new(),
        notes: Vec::new(),
    };

    // Far-field fits start at |y| = t for the q-weight (its envelope allows
    // a mild near-diagonal singularity); elsewhere the full window is fit.
    let far_lo = if tag == "q-weight" { 1.0 } else { 0.0 };
    let mut rows = Vec::new();
    let mut worst_slope = f64::NEG_INFINITY;
    let mut per_t = BTreeMap::new();
    let mut slices = Vec::new();
    for &t in times {
        let kf = engine.kernel(&w, x0, t)?;
        let mut pts: Vec<(usize, f64, f64, f64)> = (0..grid.node_count())
            .map(|m| {
                let (y1, r) = offset(&grid, m);
                let key = if d == 1 { y1 } else { r };
                (m, key, r, kf.values()[m].norm())
            })
            .collect();
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        if pts.iter().all(|&(_, _, _, k)| k < 1e-250) {
            return Err(CoreError::Config(format!(
                "the {tag} kernel is numerically zero at t = {t} (commutator weights \
                 vanish for constant coefficients); pick a variable family"
            )));
        }
        let window: Vec<(f64, f64)> = pts.iter().map(|&(_, _, r, k)| (r, k)).collect();
        let (slope, intercept) = fit(&window, t, far_lo, grid.l())?;
        worst_slope = worst_slope.max(slope);
        per_t.insert(format!("slope_t_{}", fmt(t)), slope);
        for &(_, key, r, k) in &pts {
            let env = intercept.exp() * (1.0 + r / t).powf(slope);
            rows.push(format!("{},{},{},{}", fmt(key), fmt(t), fmt(k), fmt(env)));
        }
        slices.push((t, pts));
    }

    let mut reports = Vec::new();

    // Identity + unit weight reproduces the classical Poisson kernel.
    if tag == "unit" && d == 1 && rc.family_label() == "identity" {
        let front = 1.0 / std::f64::consts::TAU.sqrt();
        let mut worst: f64 = 0.0;
        for (t, pts) in &slices {
            let mut num = 0.0;
            let mut den = 0.0;
            for &(_, y, _, k) in pts {
                if y.abs() > grid.l() / 4.0 {
                    continue;
                }
                let pv = t / (PI * (t * t + y * y));
                num += (k * front - pv).powi(2);
                den += pv * pv;
            }
            worst = worst.max((num / den).sqrt());
        }
        let mut rep = base(
            "poisson_match",
            "identity-coefficient unit-weight kernel matches (1/pi) t/(t^2+y^2) \
             within 1% in relative l2 over |y| <= L/4",
        );
        rep.measured = worst;
        rep.tol = 1e-2;
        rep.pass = worst <= rep.tol;
        reports.push(rep);
    }

    let mut rep = base("decay_fit", "");
    rep.extra = per_t;
    rep.measured = worst_slope;
    match tag {
        "unit" | "pi-prime" => {
            rep.identity = format!(
                "worst per-t least-squares slope of ln|K| against ln(1 + |y|/t) \
                 over |y| <= L/4 is at most -(d + 1/2) = {}",
                -(d as f64 + 0.5)
            );
            rep.tol = -(d as f64 + 0.5);
            rep.pass = worst_slope <= rep.tol;
        }
        "q-weight" => {
            rep.identity = format!(
                "far-field (|y| >= t) slope of the q-weight kernel is at most \
                 -(d + delta) + 3/4 = {} with delta = 1/2",
                -(d as f64 + 0.5) + 0.75
            );
            rep.tol = -(d as f64 + 0.5) + 0.75;
            rep.pass = worst_slope <= rep.tol;
            // Near field: |K| must stay inside its |y|^{-(d - delta)}
            // profile relative to the near-window peak.
            let mut near: f64 = 0.0;
            for (t, pts) in &slices {
                let peak = pts
                    .iter()
                    .filter(|&&(_, _, r, _)| r <= *t)
                    .map(|&(_, _, _, k)| k)
                    .fold(0.0, f64::max);
                for &(_, _, r, k) in pts {
                    if r == 0.0 || r > *t {
                        continue;
                    }
                    near = near.max(k * (r / t).powf(0.5) / peak.max(1e-300));
                }
            }
            let mut nrep = base(
                "near_envelope",
                "q-weight kernel near-field envelope constant \
                 max |K| (|y|/t)^{1/2} / peak is at most 25",
            );
            nrep.measured = near;
            nrep.tol = 25.0;
            nrep.pass = near <= nrep.tol;
            reports.push(nrep);
        }
        _ => {
            rep.identity = "least-squares decay fit of the zeta-weight kernel \
                            (informational: no pinned threshold)"
                .into();
            rep.notes
                .push("no pinned threshold for this weight; fit reported for inspection".into());
        }
    }
    reports.insert(0, rep);

    for rep in &reports {
        println!("{}", rep.line());
    }
    out.write_csv(
        &format!("kernel_{tag}.csv"),
        "y,t,abs_g,envelope",
        &rows,
    )?;
    let mut run_rep = RunReport {
        suite: format!("kernel-{tag}"),
        d,
        n: rc.grid.n,
        nt: rc.grid.nt,
        l: rc.grid.l,
        tmax: rc.tmax(),
        seed: rc.run.seed,
        refine: false,
        reports,
        passed: 0,
        failed: 0,
    };
    run_rep.tally();
    out.write_json(&format!("kernel_{tag}.json"), &run_rep)?;
    Ok(run_rep.all_passed())
}
