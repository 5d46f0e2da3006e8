//! Structured results for verification checks, plus the small statistics
//! used to summarize ensembles (medians, rank correlation, log-log slopes).
//!
//! Reports serialize with a stable field order (struct order plus sorted
//! maps) and carry no timestamps, so byte-identical reruns stay
//! byte-identical.

use serde::Serialize;
use std::collections::BTreeMap;

/// Outcome of a single named check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    /// Unique snake_case identifier.
    pub name: String,
    /// Human-readable statement of the identity or estimate being tested.
    pub identity: String,
    /// Coefficient family label.
    pub family: String,
    /// Grid / discretization echo (sorted).
    pub params: BTreeMap<String, String>,
    /// The scalar the check compares against `tol` (its meaning is stated
    /// in `identity`; usually a residual, ratio, or constant).
    pub measured: f64,
    /// Acceptance threshold for `measured`.
    pub tol: f64,
    pub pass: bool,
    /// Auxiliary named quantities (sorted).
    pub extra: BTreeMap<String, f64>,
    /// Free-form observations (kept deterministic).
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn line(&self) -> String {
        format!(
            "{} {:<44} measured {:>12.4e}  tol {:>9.2e}  [{}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tol,
            self.family
        )
    }
}

/// A full run of one or more suites.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub suite: String,
    pub d: usize,
    pub n: usize,
    pub nt: usize,
    pub l: f64,
    pub tmax: f64,
    pub seed: u64,
    pub refine: bool,
    pub reports: Vec<CheckReport>,
    pub passed: usize,
    pub failed: usize,
}

impl RunReport {
    pub fn tally(&mut self) {
        self.passed = self.reports.iter().filter(|c| c.pass).count();
        self.failed = self.reports.len() - self.passed;
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Median of a sample (mean of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty sample");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Kendall rank correlation tau between two equal-length samples
/// (tie pairs count zero; normalization by n(n-1)/2).
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut conc = 0i64;
    let mut disc = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let p = (xs[j] - xs[i]) * (ys[j] - ys[i]);
            if p > 0.0 {
                conc += 1;
            } else if p < 0.0 {
                disc += 1;
            }
        }
    }
    (conc - disc) as f64 / (n * (n - 1) / 2) as f64
}

/// Least-squares slope of `ln y` against `ln x` (all inputs positive).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

/// Geometric grid from `t0` to at least `t1` with the given ratio.
pub fn geometric_grid(t0: f64, t1: f64, ratio: f64) -> Vec<f64> {
    assert!(t0 > 0.0 && t1 > t0 && ratio > 1.0);
    let mut ts = vec![t0];
    while *ts.last().unwrap() < t1 {
        ts.push(ts.last().unwrap() * ratio);
    }
    ts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn kendall_tau_extremes() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let up = [0.1, 0.2, 0.3, 0.4];
        let down = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(kendall_tau(&xs, &up), 1.0);
        assert_eq!(kendall_tau(&xs, &down), -1.0);
        let flat = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(kendall_tau(&xs, &flat), 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert_relative_eq!(loglog_slope(&xs, &ys), 1.7, max_relative = 1e-12);
    }

    #[test]
    fn geometric_grid_covers_range() {
        let ts = geometric_grid(0.01, 10.0, 2.0_f64.powf(0.125));
        assert!(ts[0] == 0.01 && *ts.last().unwrap() >= 10.0);
        for w in ts.windows(2) {
            assert_relative_eq!(w[1] / w[0], 2.0_f64.powf(0.125), max_relative = 1e-12);
        }
    }
}
