//! `check-symbol`: tabulate the boundary symbols mu, lambda, q and check
//! the ellipticity-driven bounds.

use crate::config::RunConfig;
use crate::out::{fmt, OutDir};
use num_complex::Complex64;
use poisson_dn::coeff::CoefficientField;
use poisson_dn::grid::TorusGrid;
use poisson_dn::report::{CheckReport, RunReport};
use poisson_dn::symbol::{check_symbol_bounds, lambda_at, mu_at, q_at};
use poisson_dn::Result;
use std::collections::BTreeMap;

/// Residual and margin gates mirror the symbol-correctness criterion.
const TOL_RESID: f64 = 1e-10;
const TOL_MARGIN: f64 = -1e-12;
const ENV_SLACK: f64 = 1e-9;

pub fn run(rc: &RunConfig, out: &OutDir) -> Result<bool> {
    let field = rc.field()?;
    let grid = TorusGrid::new(rc.grid.d, rc.grid.n, rc.grid.l)?;
    let samples = if rc.grid.d == 1 { 256 } else { 48 };
    // Non-elliptic fields error out here with the witness vector.
    let val = field.validate(samples, 1e-9)?;
    let bounds = check_symbol_bounds(&field, grid, val.nu1)?;

    let ratio = val.nu2 / val.nu1;
    let envelope_upper = 2.0 * ratio + ratio.sqrt();
    let envelope_lower = (1.0 / ratio).powf(1.5);
    let upper_ok = bounds.c_upper <= envelope_upper * (1.0 + ENV_SLACK);
    let lower_ok = bounds.c_lower >= envelope_lower * (1.0 - ENV_SLACK);

    let mut rep = CheckReport {
        name: "symbol_bounds".into(),
        identity: "quadratic residual of mu < 1e-10; accretivity margin >= -1e-12; \
                   C = sup |mu|/|xi| and C' = inf Im mu/|xi| inside the ellipticity \
                   envelopes 2 nu2/nu1 + sqrt(nu2/nu1) and (nu1/nu2)^{3/2}"
            .into(),
        family: rc.family_label(),
        params: rc.params(),
        measured: bounds.resid_max,
        tol: TOL_RESID,
        pass: bounds.resid_max < TOL_RESID
            && bounds.margin_min >= TOL_MARGIN
            && bounds.c_lower > 0.0
            && upper_ok
            && lower_ok,
        extra: BTreeMap::new(),
        notes: vec![format!(
            "ellipticity scan: {} samples, lipschitz sup {:.6}",
            val.samples, val.lip
        )],
    };
    rep.extra.insert("nu1".into(), val.nu1);
    rep.extra.insert("nu2".into(), val.nu2);
    rep.extra.insert("c".into(), bounds.c_upper);
    rep.extra.insert("c_prime".into(), bounds.c_lower);
    rep.extra.insert("envelope_upper".into(), envelope_upper);
    rep.extra.insert("envelope_lower".into(), envelope_lower);
    rep.extra.insert("margin_min".into(), bounds.margin_min);
    println!("{}", rep.line());

    write_samples(&field, &grid, out)?;

    let mut run_rep = RunReport {
        suite: "check-symbol".into(),
        d: rc.grid.d,
        n: rc.grid.n,
        nt: rc.grid.nt,
        l: rc.grid.l,
        tmax: rc.tmax(),
        seed: rc.run.seed,
        refine: false,
        reports: vec![rep],
        passed: 0,
        failed: 0,
    };
    run_rep.tally();
    out.write_json("check_symbol.json", &run_rep)?;
    Ok(run_rep.all_passed())
}

/// Long-format decimated sample table: one row per (symbol, x, xi).
fn write_samples(field: &CoefficientField, grid: &TorusGrid, out: &OutDir) -> Result<()> {
    let d = grid.d();
    let n = grid.n();
    let close = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
    // <= 16 nodes per axis, modes |k| <= 32 (d = 1) or |k| <= 8 (d = 2).
    let x_stride = (n / 16).max(1);
    let k_cap = (if d == 1 { 32i64 } else { 8 }).min(n as i64 / 2 - 1);
    let mut rows = Vec::new();
    for flat in (0..grid.node_count()).step_by(if d == 1 { x_stride } else { 1 }) {
        if d == 2 {
            let (i, j) = (flat / n, flat % n);
            if i % x_stride != 0 || j % x_stride != 0 {
                continue;
            }
        }
        let x = grid.x(flat);
        let e = field.blocks_at(x);
        let mut push = |name: &str, xi: [f64; 2], v: Complex64| {
            rows.push(format!(
                "{name},{},{},{},{},{},{}",
                fmt(x[0]),
                fmt(x[1]),
                fmt(xi[0]),
                fmt(xi[1]),
                fmt(close(v.re)),
                fmt(close(v.im)),
            ));
        };
        let k2_range = if d == 2 { -k_cap..=k_cap } else { 0..=0 };
        for k2 in k2_range {
            for k1 in -k_cap..=k_cap {
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                let xi = [
                    k1 as f64 * std::f64::consts::TAU / grid.l(),
                    k2 as f64 * std::f64::consts::TAU / grid.l(),
                ];
                push("mu", xi, mu_at(&e, xi)?);
                push("lambda", xi, lambda_at(&e, xi)?);
                push("q", xi, q_at(&e, xi)?);
            }
        }
    }
    out.write_csv("symbols.csv", "symbol,x1,x2,xi1,xi2,re,im", &rows)?;
    Ok(())
}
