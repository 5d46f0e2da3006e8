//! The explicit first-order symbols attached to a coefficient field.
//!
//! For the operator in divergence form with blocks `A'`, `r1`, `r2`, `b`,
//! three scalar symbols on (node, frequency) pairs drive the whole
//! calculus, with `v = (r1 + r2)/b`:
//!
//! * `mu(x, xi)  = -(v.xi)/2 + i sqrt( <A' xi, xi>/b - (v.xi)^2/4 )`,
//!   the root of `b z^2 + ((r1+r2).xi) z + <A' xi, xi> = 0` with positive
//!   imaginary part (principal square root branch);
//! * `lambda(x, xi) = b mu + r2.xi`, a root of
//!   `z^2 + ((r1-r2).xi) z + b <A' xi, xi> - (r1.xi)(r2.xi) = 0`;
//! * `q(x, xi) = mu + v.xi`, a root of
//!   `b z^2 - ((r1+r2).xi) z + <A' xi, xi> = 0`.
//!
//! Ellipticity forces the argument of the square root off the branch cut,
//! so `Im mu > 0` for `xi != 0`; every evaluation re-checks its quadratic
//! residual and the sign of the imaginary part and fails loudly otherwise.

use crate::coeff::{BlockEval, CoefficientField};
use crate::error::{CoreError, Result};
use crate::grid::{GridFunction, TorusGrid};
use num_complex::Complex64;

/// Relative residual ceiling for a single symbol evaluation.
const RESID_TOL: f64 = 1e-10;

/// Which of the three symbols a table holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Mu,
    Lambda,
    Q,
}

#[derive(Clone, Copy, Debug)]
struct Quad {
    /// `<A' xi, xi>` (plain bilinear form, `xi` real).
    axx: Complex64,
    /// `(r1 + r2) . xi`.
    rsum: Complex64,
    /// `(r1 - r2) . xi`.
    rdiff: Complex64,
    /// `r2 . xi`.
    r2xi: Complex64,
    /// `r1 . xi`.
    r1xi: Complex64,
    b: Complex64,
}

fn quad(e: &BlockEval, xi: [f64; 2]) -> Quad {
    let mut axx = Complex64::default();
    let mut r1xi = Complex64::default();
    let mut r2xi = Complex64::default();
    for i in 0..2 {
        for j in 0..2 {
            axx += e.aprime[i][j] * xi[j] * xi[i];
        }
        r1xi += e.r1[i] * xi[i];
        r2xi += e.r2[i] * xi[i];
    }
    Quad {
        axx,
        rsum: r1xi + r2xi,
        rdiff: r1xi - r2xi,
        r2xi,
        r1xi,
        b: e.b,
    }
}

/// `mu(x, xi)` from the pointwise blocks.  Fails if the quadratic residual
/// exceeds `1e-10` relative or the imaginary part is not positive for
/// `xi != 0` (both would indicate a branch or ellipticity violation).
pub fn mu_at(e: &BlockEval, xi: [f64; 2]) -> Result<Complex64> {
    let q = quad(e, xi);
    let vxi = q.rsum / q.b;
    let w = q.axx / q.b - vxi * vxi * 0.25;
    let mu = -vxi * 0.5 + Complex64::i() * w.sqrt();
    let xi_norm = xi[0].hypot(xi[1]);
    if xi_norm > 0.0 && mu.im <= 0.0 {
        return Err(CoreError::Symbol(format!(
            "branch violation: Im mu = {:.3e} <= 0 at |xi| = {:.3e} (sqrt argument {:.3e}{:+.3e}i)",
            mu.im, xi_norm, w.re, w.im
        )));
    }
    let resid = (q.b * mu * mu + q.rsum * mu + q.axx).norm();
    let scale = (q.b.norm() * mu.norm_sqr() + q.rsum.norm() * mu.norm() + q.axx.norm())
        .max(f64::MIN_POSITIVE);
    if resid > RESID_TOL * scale {
        return Err(CoreError::Symbol(format!(
            "quadratic residual {:.3e} (relative {:.3e}) for mu at |xi| = {:.3e}",
            resid,
            resid / scale,
            xi_norm
        )));
    }
    Ok(mu)
}

/// `lambda(x, xi) = b mu + r2.xi`, with its own quadratic re-checked.
pub fn lambda_at(e: &BlockEval, xi: [f64; 2]) -> Result<Complex64> {
    let q = quad(e, xi);
    let mu = mu_at(e, xi)?;
    let lam = q.b * mu + q.r2xi;
    let resid = (lam * lam + q.rdiff * lam + q.b * q.axx - q.r1xi * q.r2xi).norm();
    let scale = (lam.norm_sqr()
        + q.rdiff.norm() * lam.norm()
        + (q.b * q.axx).norm()
        + (q.r1xi * q.r2xi).norm())
    .max(f64::MIN_POSITIVE);
    if resid > RESID_TOL * scale {
        return Err(CoreError::Symbol(format!(
            "quadratic residual {:.3e} (relative {:.3e}) for lambda",
            resid,
            resid / scale
        )));
    }
    Ok(lam)
}

/// `q(x, xi) = mu + (r1+r2).xi / b`, with its own quadratic re-checked.
pub fn q_at(e: &BlockEval, xi: [f64; 2]) -> Result<Complex64> {
    let q = quad(e, xi);
    let mu = mu_at(e, xi)?;
    let qq = mu + q.rsum / q.b;
    let resid = (q.b * qq * qq - q.rsum * qq + q.axx).norm();
    let scale = (q.b.norm() * qq.norm_sqr() + q.rsum.norm() * qq.norm() + q.axx.norm())
        .max(f64::MIN_POSITIVE);
    if resid > RESID_TOL * scale {
        return Err(CoreError::Symbol(format!(
            "quadratic residual {:.3e} (relative {:.3e}) for q",
            resid,
            resid / scale
        )));
    }
    Ok(qq)
}

fn symbol_at(e: &BlockEval, xi: [f64; 2], kind: SymbolKind) -> Result<Complex64> {
    match kind {
        SymbolKind::Mu => mu_at(e, xi),
        SymbolKind::Lambda => lambda_at(e, xi),
        SymbolKind::Q => q_at(e, xi),
    }
}

/// Hard cap on materialized table entries (`N^{2d}`); N = 64 at d = 2 and
/// N = 4096 at d = 1 both land exactly on the cap.
pub const MAX_TABLE_ENTRIES: usize = 1 << 24;

/// Materialized symbol values on all (node, frequency) pairs of a grid.
///
/// Storage is frequency-major: the values for one frequency slot `k` form
/// a contiguous x-column, so per-mode transforms are cache friendly.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl SymbolTable {
    /// Tabulate one of the three symbols of `field` on `grid`.
    pub fn build(field: &CoefficientField, grid: TorusGrid, kind: SymbolKind) -> Result<Self> {
        if field.d() != grid.d() || field.l() != grid.l() {
            return Err(CoreError::Symbol(
                "coefficient field and grid disagree on d or L".into(),
            ));
        }
        let m = grid.node_count();
        if m.saturating_mul(m) > MAX_TABLE_ENTRIES {
            return Err(CoreError::Symbol(format!(
                "symbol table would hold {} entries (cap {}); reduce N",
                m.saturating_mul(m),
                MAX_TABLE_ENTRIES
            )));
        }
        let blocks: Vec<BlockEval> = (0..m).map(|i| field.blocks_at(grid.x(i))).collect();
        let mut values = vec![Complex64::default(); m * m];
        for k in 0..m {
            let xi = grid.xi(k);
            let col = &mut values[k * m..(k + 1) * m];
            for (i, e) in blocks.iter().enumerate() {
                col[i] = symbol_at(e, xi, kind).map_err(|err| {
                    CoreError::Symbol(format!("at node {i}, frequency slot {k}: {err}"))
                })?;
            }
        }
        Ok(Self { grid, values })
    }

    /// Build a table directly from per-(node, slot) values (for derived
    /// symbols such as `exp(i t mu)` or weight symbols).
    pub fn from_values(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.node_count() * grid.node_count() {
            return Err(CoreError::Symbol(
                "symbol table values must have N^d x N^d entries".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Contiguous x-column for frequency slot `k`.
    pub fn column(&self, k: usize) -> &[Complex64] {
        let m = self.grid.node_count();
        &self.values[k * m..(k + 1) * m]
    }

    pub fn value(&self, node: usize, k: usize) -> Complex64 {
        self.values[k * self.grid.node_count() + node]
    }

    /// Map every entry (given node index, frequency slot, value).
    pub fn map(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Self {
        let m = self.grid.node_count();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(idx % m, idx / m, v))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Exact (spectral) x-derivative along a horizontal axis, column by
    /// column; symbols are real-analytic in x, so truncation error decays
    /// exponentially in N.
    pub fn x_derivative(&self, axis: usize) -> Result<Self> {
        let m = self.grid.node_count();
        let mut values = vec![Complex64::default(); m * m];
        for k in 0..m {
            let col = GridFunction::from_values(self.grid, self.column(k).to_vec())?;
            values[k * m..(k + 1) * m].copy_from_slice(col.derivative(axis).values());
        }
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// Finite-difference xi-derivative along a horizontal axis on the
    /// frequency lattice (spacing `2 pi / L`).  Stencils are centered where
    /// possible, second-order one-sided at lattice edges and next to the
    /// origin (symbols are homogeneous, hence not smooth across `xi = 0`);
    /// the origin column itself is set to zero and should be excluded by
    /// callers.
    pub fn xi_derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.grid.d() {
            return Err(CoreError::Symbol("xi-derivative axis out of range".into()));
        }
        let m = self.grid.node_count();
        let dxi = std::f64::consts::TAU / self.grid.l();
        let n = self.grid.n() as i64;
        let half = n / 2;
        let mut values = vec![Complex64::default(); m * m];
        for k in 0..m {
            let mode = self.grid.mode(k);
            if mode == [0, 0] {
                continue;
            }
            let shifted = |delta: i64| -> Option<usize> {
                let mut km = mode;
                km[axis] += delta;
                if km == [0, 0] {
                    return None; // never difference across the origin
                }
                if km[axis] < -half || km[axis] >= half {
                    return None;
                }
                self.grid.slot_of_mode(km)
            };
            let out = &mut values[k * m..(k + 1) * m];
            match (shifted(-1), shifted(1)) {
                (Some(lo), Some(hi)) => {
                    let (clo, chi) = (self.column(lo), self.column(hi));
                    for i in 0..m {
                        out[i] = (chi[i] - clo[i]) / (2.0 * dxi);
                    }
                }
                (Some(lo), None) => {
                    let lo2 = shifted(-2).ok_or_else(|| {
                        CoreError::Symbol("lattice too small for one-sided xi stencil".into())
                    })?;
                    let (c0, c1, c2) = (self.column(k), self.column(lo), self.column(lo2));
                    for i in 0..m {
                        out[i] = (3.0 * c0[i] - 4.0 * c1[i] + c2[i]) / (2.0 * dxi);
                    }
                }
                (None, Some(hi)) => {
                    let hi2 = shifted(2).ok_or_else(|| {
                        CoreError::Symbol("lattice too small for one-sided xi stencil".into())
                    })?;
                    let (c0, c1, c2) = (self.column(k), self.column(hi), self.column(hi2));
                    for i in 0..m {
                        out[i] = (-3.0 * c0[i] + 4.0 * c1[i] - c2[i]) / (2.0 * dxi);
                    }
                }
                (None, None) => {
                    return Err(CoreError::Symbol(
                        "lattice too small for xi-derivative stencils".into(),
                    ))
                }
            }
        }
        Ok(Self {
            grid: self.grid,
            values,
        })
    }
}

/// Empirical symbol bounds over all nodes and nonzero frequencies.
#[derive(Clone, Copy, Debug)]
pub struct SymbolBounds {
    /// `max |mu| / |xi|`.
    pub c_upper: f64,
    /// `min Im mu / |xi|`.
    pub c_lower: f64,
    /// Minimum over (x, xi) of the normalized accretivity margin
    /// `[Re(<A' xi, xi> - b (v.xi)^2 / 4) - nu1 (|xi|^2 + |v.xi|^2/4)] / |xi|^2`.
    pub margin_min: f64,
    /// Largest relative quadratic residual of `mu` seen in the scan.
    pub resid_max: f64,
}

/// Scan the `mu` bounds on the full (node, frequency) set of `grid`.
/// `nu1` is the validated ellipticity constant of `field`.
pub fn check_symbol_bounds(
    field: &CoefficientField,
    grid: TorusGrid,
    nu1: f64,
) -> Result<SymbolBounds> {
    if field.d() != grid.d() || field.l() != grid.l() {
        return Err(CoreError::Symbol(
            "coefficient field and grid disagree on d or L".into(),
        ));
    }
    let m = grid.node_count();
    let blocks: Vec<BlockEval> = (0..m).map(|i| field.blocks_at(grid.x(i))).collect();
    let mut c_upper: f64 = 0.0;
    let mut c_lower = f64::INFINITY;
    let mut margin_min = f64::INFINITY;
    let mut resid_max: f64 = 0.0;
    for k in 0..m {
        let xi = grid.xi(k);
        let xi_norm = grid.xi_norm(k);
        if xi_norm == 0.0 {
            continue;
        }
        for e in &blocks {
            let q = quad(e, xi);
            let mu = mu_at(e, xi)?;
            c_upper = c_upper.max(mu.norm() / xi_norm);
            c_lower = c_lower.min(mu.im / xi_norm);
            let resid = (q.b * mu * mu + q.rsum * mu + q.axx).norm();
            let scale = (q.b.norm() * mu.norm_sqr() + q.rsum.norm() * mu.norm() + q.axx.norm())
                .max(f64::MIN_POSITIVE);
            resid_max = resid_max.max(resid / scale);
            let vxi = q.rsum / q.b;
            let lhs = (q.axx - q.b * vxi * vxi * 0.25).re;
            let rhs = nu1 * (xi_norm * xi_norm + vxi.norm_sqr() * 0.25);
            margin_min = margin_min.min((lhs - rhs) / (xi_norm * xi_norm));
        }
    }
    Ok(SymbolBounds {
        c_upper,
        c_lower,
        margin_min,
        resid_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{builtin, Family};
    use approx::assert_relative_eq;

    const TAU: f64 = std::f64::consts::TAU;
    // sqrt(1.84) = 1.35646599662505...: the shared imaginary slope of all
    // three symbols for the running example.
    fn sqrt_184() -> f64 {
        1.84_f64.sqrt()
    }

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, TAU).unwrap()
    }

    #[test]
    fn running_example_symbols_are_exact() {
        // A = [[2, 0.5], [0.3, 1]]: v.xi = 0.8 xi, <A' xi, xi> = 2 xi^2,
        // mu = -0.4 xi + i sqrt(1.84) |xi|, lambda = mu + 0.3 xi,
        // q = mu + 0.8 xi.
        let a = builtin(1, Family::Constant, TAU).unwrap();
        for xi0 in [1.0_f64, 3.0, -2.0, 17.0, -31.0] {
            let e = a.blocks_at([0.3, 0.0]);
            let xi = [xi0, 0.0];
            let mu = mu_at(&e, xi).unwrap();
            assert_relative_eq!(mu.re, -0.4 * xi0, max_relative = 1e-13);
            assert_relative_eq!(mu.im, sqrt_184() * xi0.abs(), max_relative = 1e-13);
            let lam = lambda_at(&e, xi).unwrap();
            assert_relative_eq!(lam.re, -0.1 * xi0, max_relative = 1e-12);
            assert_relative_eq!(lam.im, sqrt_184() * xi0.abs(), max_relative = 1e-13);
            let q = q_at(&e, xi).unwrap();
            assert_relative_eq!(q.re, 0.4 * xi0, max_relative = 1e-13);
            assert_relative_eq!(q.im, sqrt_184() * xi0.abs(), max_relative = 1e-13);
        }
        // xi = 0: all symbols vanish
        let e = a.blocks_at([0.0, 0.0]);
        assert_eq!(mu_at(&e, [0.0, 0.0]).unwrap(), Complex64::default());
    }

    #[test]
    fn symbols_are_homogeneous_of_degree_one() {
        let a = builtin(2, Family::Hermitian, TAU).unwrap();
        let e = a.blocks_at([1.1, 2.3]);
        for xi in [[1.0, 0.5], [-2.0, 3.0], [0.0, 1.0]] {
            let m1 = mu_at(&e, xi).unwrap();
            let m3 = mu_at(&e, [3.0 * xi[0], 3.0 * xi[1]]).unwrap();
            assert!((m3 - 3.0 * m1).norm() < 1e-12 * m3.norm().max(1.0));
        }
    }

    #[test]
    fn quadratic_residuals_hold_for_variable_fields() {
        for d in [1, 2] {
            for fam in [Family::Hermitian, Family::Lipschitz { seed: 5 }, Family::Block] {
                let a = builtin(d, fam, TAU).unwrap();
                let xs = [[0.0, 0.0], [0.7, 1.9], [3.1, 5.2]];
                let xis = [[1.0, 0.0], [4.0, -3.0], [-7.0, 2.0]];
                for x in xs {
                    let e = a.blocks_at(x);
                    for xi in xis {
                        let xi = if d == 1 { [xi[0], 0.0] } else { xi };
                        // the *_at functions assert residual < 1e-10 internally
                        let mu = mu_at(&e, xi).unwrap();
                        assert!(mu.im > 0.0);
                        lambda_at(&e, xi).unwrap();
                        q_at(&e, xi).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn closure_matrices_reproduce_lambda_and_q() {
        // Phi(M) = lambda_A and Phi(N) = q_A pointwise, where Phi is the
        // mu-map applied to the derived fields.
        for d in [1, 2] {
            for fam in [Family::Constant, Family::Hermitian, Family::Lipschitz { seed: 11 }] {
                let a = builtin(d, fam, TAU).unwrap();
                let (mf, nf) = a.closure_matrices();
                for x in [[0.0, 0.0], [1.3, 0.4], [5.0, 2.2]] {
                    let ea = a.blocks_at(x);
                    let em = mf.blocks_at(x);
                    let en = nf.blocks_at(x);
                    for xi in [[1.0, 0.0], [-3.0, 2.0], [5.0, -7.0]] {
                        let xi = if d == 1 { [xi[0], 0.0] } else { xi };
                        let lam = lambda_at(&ea, xi).unwrap();
                        let q = q_at(&ea, xi).unwrap();
                        let phi_m = mu_at(&em, xi).unwrap();
                        let phi_n = mu_at(&en, xi).unwrap();
                        let s = lam.norm().max(1e-30);
                        assert!(
                            (phi_m - lam).norm() < 1e-11 * s,
                            "Phi(M) != lambda: {phi_m} vs {lam} (d={d}, {fam:?})"
                        );
                        assert!(
                            (phi_n - q).norm() < 1e-11 * q.norm().max(1e-30),
                            "Phi(N) != q: {phi_n} vs {q} (d={d}, {fam:?})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn table_matches_pointwise_and_guards_size() {
        let a = builtin(1, Family::Hermitian, TAU).unwrap();
        let g = grid1(32);
        let t = SymbolTable::build(&a, g, SymbolKind::Mu).unwrap();
        for (m, k) in [(0usize, 1usize), (7, 30), (19, 16)] {
            let e = a.blocks_at(g.x(m));
            let expect = mu_at(&e, g.xi(k)).unwrap();
            assert_eq!(t.value(m, k), expect);
            assert_eq!(t.column(k)[m], expect);
        }
        // d = 2, N = 80 would need 80^4 > 2^24 entries
        let big = TorusGrid::new(2, 80, TAU).unwrap();
        let a2 = builtin(2, Family::Constant, TAU).unwrap();
        let err = SymbolTable::build(&a2, big, SymbolKind::Mu).unwrap_err();
        assert!(err.to_string().contains("cap"), "{err}");
    }

    #[test]
    fn x_derivative_matches_analytic_formula() {
        // A' = 2 + 0.3 sin x, r = 0, b = 1:
        // mu = i sqrt(2 + 0.3 sin x) |xi|,
        // d_x mu = i (0.3 cos x) / (2 sqrt(2 + 0.3 sin x)) |xi|.
        use crate::coeff::{CoefficientField, TrigKind, TrigPoly};
        let l = TAU;
        let one = TrigPoly::constant(1, l, Complex64::new(1.0, 0.0));
        let ap = TrigPoly::constant(1, l, Complex64::new(2.0, 0.0)).with_term(
            TrigKind::Sin,
            [1, 0],
            Complex64::new(0.3, 0.0),
        );
        let f = CoefficientField::from_entries(
            1,
            l,
            vec![ap, TrigPoly::zero(1, l), TrigPoly::zero(1, l), one],
        )
        .unwrap();
        let g = grid1(64);
        let t = SymbolTable::build(&f, g, SymbolKind::Mu).unwrap();
        let dt = t.x_derivative(0).unwrap();
        for k in [1usize, 5, 20] {
            let xi = g.xi(k)[0].abs();
            for m in [0usize, 11, 40] {
                let x = g.x(m)[0];
                let expect =
                    Complex64::i() * 0.3 * x.cos() / (2.0 * (2.0 + 0.3 * x.sin()).sqrt()) * xi;
                assert!(
                    (dt.value(m, k) - expect).norm() < 1e-10 * xi.max(1.0),
                    "k={k} m={m}: {} vs {expect}",
                    dt.value(m, k)
                );
            }
        }
    }

    #[test]
    fn xi_derivative_exact_for_piecewise_linear_symbol() {
        // constant running example: d mu / d xi = -0.4 + i sqrt(1.84) sign(xi);
        // mu is linear on each side of 0, so the stencils are exact.
        let a = builtin(1, Family::Constant, TAU).unwrap();
        let g = grid1(32);
        let t = SymbolTable::build(&a, g, SymbolKind::Mu).unwrap();
        let dt = t.xi_derivative(0).unwrap();
        for j in 0..32usize {
            let k = g.freq_int(j);
            if k == 0 {
                continue;
            }
            let expect = Complex64::new(-0.4, sqrt_184() * (k as f64).signum());
            assert!(
                (dt.value(3, j) - expect).norm() < 1e-11,
                "k={k}: {} vs {expect}",
                dt.value(3, j)
            );
        }
    }

    #[test]
    fn bounds_scan_running_example() {
        // |mu|/|xi| = sqrt(0.16 + 1.84) = sqrt(2); Im mu / |xi| = sqrt(1.84);
        // margin: Re(2 - 0.16) - nu1 (1 + 0.16) with nu1 = (3 - sqrt(1.64))/2.
        let a = builtin(1, Family::Constant, TAU).unwrap();
        let nu1 = (3.0 - 1.64_f64.sqrt()) / 2.0;
        let b = check_symbol_bounds(&a, grid1(64), nu1).unwrap();
        assert_relative_eq!(b.c_upper, 2.0_f64.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(b.c_lower, sqrt_184(), max_relative = 1e-13);
        assert_relative_eq!(b.margin_min, 1.84 - nu1 * 1.16, max_relative = 1e-12);
        assert!(b.margin_min > 0.0);
        assert!(b.resid_max < 1e-12);
    }

    #[test]
    fn bounds_respect_provable_envelopes() {
        // |mu| <= (2 nu2/nu1 + sqrt(nu2/nu1)) |xi| and
        // Im mu >= (nu1/nu2)^{3/2} |xi| follow from ellipticity alone.
        for d in [1, 2] {
            for fam in [Family::Constant, Family::Block, Family::Hermitian,
                        Family::Lipschitz { seed: 3 }] {
                let a = builtin(d, fam, TAU).unwrap();
                let v = a.validate(if d == 1 { 128 } else { 32 }, 0.0).unwrap();
                let g = TorusGrid::new(d, if d == 1 { 64 } else { 16 }, TAU).unwrap();
                let bounds = check_symbol_bounds(&a, g, v.nu1).unwrap();
                let ratio = v.nu2 / v.nu1;
                assert!(bounds.c_upper <= 2.0 * ratio + ratio.sqrt() + 1e-9,
                    "{fam:?} d={d}: C = {} vs cap {}", bounds.c_upper, 2.0 * ratio + ratio.sqrt());
                assert!(bounds.c_lower >= (1.0 / ratio).powf(1.5) - 1e-9,
                    "{fam:?} d={d}: C' = {} vs floor {}", bounds.c_lower, (1.0 / ratio).powf(1.5));
                assert!(bounds.margin_min >= -1e-12,
                    "{fam:?} d={d}: margin {}", bounds.margin_min);
            }
        }
    }
}
