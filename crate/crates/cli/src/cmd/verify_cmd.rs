//! `verify`: run verification suites and emit the merged report.

use crate::config::RunConfig;
use crate::out::{fmt, OutDir};
use poisson_dn::report::RunReport;
use poisson_dn::verify::{criterion_ids, run_criterion, suite_names, VerifyCtx};
use poisson_dn::{CoreError, Result};
use std::collections::BTreeSet;

pub fn run(
    rc: &RunConfig,
    suite: Option<&str>,
    refine: bool,
    out: &OutDir,
) -> Result<bool> {
    let selection: Vec<String> = match suite {
        Some(s) => vec![s.to_string()],
        None => rc.run.suites.clone(),
    };
    if selection.is_empty() {
        return Err(CoreError::Config(
            "empty check selection (set run.suites or pass --suite)".into(),
        ));
    }
    let mut ids = BTreeSet::new();
    for name in &selection {
        let suite_ids = criterion_ids(name).ok_or_else(|| {
            CoreError::Config(format!(
                "unknown suite '{name}'; valid suites: {}",
                suite_names().join(", ")
            ))
        })?;
        ids.extend(suite_ids);
    }
    let label = selection.join("+");
    let vcfg = rc.verify_config(refine)?;
    let ctx = VerifyCtx::new(vcfg.clone());

    let mut reports = Vec::new();
    for id in ids {
        let mut rep = run_criterion(id, &ctx);
        // Apply tolerance overrides (tighten-only, so an override can never
        // turn a pinned failure into a pass).
        if let Some(&t) = rc.tolerances.get(&rep.name) {
            if t > rep.tol {
                return Err(CoreError::Config(format!(
                    "tolerances.{}: override {t:e} loosens the pinned threshold {:e}; \
                     overrides may only tighten",
                    rep.name, rep.tol
                )));
            }
            rep.notes
                .push(format!("tolerance tightened from {:e} by config", rep.tol));
            rep.tol = t;
            rep.pass = rep.pass && rep.measured <= t;
        }
        println!("{}", rep.line());
        reports.push(rep);
    }
    // Overrides naming no executed check are config errors (typo guard).
    for name in rc.tolerances.keys() {
        if !reports.iter().any(|r| &r.name == name) {
            return Err(CoreError::Config(format!(
                "tolerances.{name} does not match any check in this selection"
            )));
        }
    }

    let mut run_rep = RunReport {
        suite: label.clone(),
        d: 1,
        n: vcfg.n1,
        nt: vcfg.nt1,
        l: vcfg.l,
        tmax: vcfg.t_factor * vcfg.l,
        seed: vcfg.seed,
        refine,
        reports,
        passed: 0,
        failed: 0,
    };
    run_rep.tally();
    println!(
        "suite {label}: {} passed, {} failed",
        run_rep.passed, run_rep.failed
    );

    out.write_json(&format!("verify_{label}.json"), &run_rep)?;
    for rep in &run_rep.reports {
        let mut rows = vec![
            format!("measured,{}", fmt(rep.measured)),
            format!("tol,{}", fmt(rep.tol)),
            format!("pass,{}", u8::from(rep.pass)),
        ];
        for (k, v) in &rep.extra {
            rows.push(format!("{k},{}", fmt(*v)));
        }
        out.write_csv(&format!("{label}_{}.csv", rep.name), "key,value", &rows)?;
    }
    Ok(run_rep.all_passed())
}
