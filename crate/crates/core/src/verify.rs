//! The acceptance surface: twelve numbered criteria covering constant-
//! coefficient exactness, the symbol calculus, the closure matrices, the
//! operator factorization, the Dirichlet-Neumann map (consistency, adjoint,
//! domain characterization), the lower-order remainder, square functions,
//! kernel decay, the DN semigroup, and byte determinism of the reporting
//! path.
//!
//! Each criterion is a standalone function returning a [`CheckReport`]
//! whose `measured`/`tol` pair is the headline quantity; secondary
//! conditions (refinement ratios, per-family constants, refusal behavior)
//! are folded into `pass` and recorded under `extra`.  The runner executes
//! criteria in ascending name order and never parallelizes, so identical
//! configurations reproduce identical reports byte for byte.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::rc::Rc;

use num_complex::Complex64;

use crate::coeff::{builtin, BlockEval, CoefficientField, Family, TrigPoly};
use crate::ensemble;
use crate::expm;
use crate::grid::{GridFunction, TorusGrid};
use crate::psdo::{WeightEngine, WeightKind};
use crate::report::{kendall_tau, loglog_slope, median, CheckReport, RunReport};
use crate::solver::{adapted_strip, EllipticSolver, SpatialScheme, StripConfig};
use crate::symbol::{check_symbol_bounds, lambda_at, mu_at, q_at};
use crate::{CoreError, Result};

/// Sizes, seeds, and gates for one verification run.  `desk` is the
/// acceptance surface; `reduced` is a fast configuration used by the
/// determinism criterion (outcomes at reduced size are irrelevant there;
/// only byte equality is asserted).
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Torus side length for the main grids.
    pub l: f64,
    /// d = 1 base grid size (power of two).
    pub n1: usize,
    /// d = 1 base number of strip levels (power of two).
    pub nt1: usize,
    /// Strip height as a multiple of `l`.
    pub t_factor: f64,
    /// d = 2 grid size (gated checks).
    pub n2: usize,
    /// d = 2 strip levels.
    pub nt2: usize,
    pub seed: u64,
    /// Ensemble size for factorization / trace / adjoint / quadratic checks.
    pub members_small: usize,
    /// Ensemble size for the domain characterization.
    pub members_domain: usize,
    /// Ensemble size for semigroup invariance checks.
    pub members_semigroup: usize,
    /// Grid size for the dense DN-semigroup checks.
    pub semigroup_n: usize,
    /// Grid size of the wide kernel torus.
    pub kernel_n: usize,
    /// Side length of the wide kernel torus.
    pub kernel_l: f64,
    /// Largest mode in the remainder sweep.
    pub sweep_max: usize,
    /// Run the dyadic-refinement halves of the criteria.
    pub refine: bool,
    /// Run the gated d = 2 checks.
    pub run_d2: bool,
}

impl VerifyConfig {
    /// The pinned acceptance surface: d = 1, N = 256, Nt = 1024, T = 4L,
    /// L = 2 pi; d = 2 gated at N = 32.
    pub fn desk() -> Self {
        Self {
            l: TAU,
            n1: 256,
            nt1: 1024,
            t_factor: 4.0,
            n2: 32,
            nt2: 128,
            seed: 117,
            members_small: 8,
            members_domain: 64,
            members_semigroup: 16,
            semigroup_n: 128,
            kernel_n: 1024,
            kernel_l: 16.0 * TAU,
            sweep_max: 64,
            refine: true,
            run_d2: true,
        }
    }

    /// Fast configuration for the determinism criterion and smoke tests.
    pub fn reduced() -> Self {
        Self {
            l: TAU,
            n1: 64,
            nt1: 128,
            t_factor: 4.0,
            n2: 16,
            nt2: 64,
            seed: 117,
            members_small: 2,
            members_domain: 4,
            members_semigroup: 2,
            semigroup_n: 16,
            kernel_n: 64,
            kernel_l: 2.0 * TAU,
            sweep_max: 8,
            refine: false,
            run_d2: false,
        }
    }

    pub fn tmax(&self) -> f64 {
        self.t_factor * self.l
    }
}

/// Shared state for one run: the configuration plus a cache of factored
/// strip solvers keyed by (family label, dimension, grid, levels) so
/// criteria reuse expensive factorizations.
pub struct VerifyCtx {
    pub cfg: VerifyConfig,
    solvers: RefCell<BTreeMap<String, Rc<EllipticSolver>>>,
}

impl VerifyCtx {
    pub fn new(cfg: VerifyConfig) -> Self {
        Self {
            cfg,
            solvers: RefCell::new(BTreeMap::new()),
        }
    }

    /// A solver on the standard strip (height `t_factor * l`), cached.
    fn solver(
        &self,
        label: &str,
        field: &CoefficientField,
        n: usize,
        nt: usize,
    ) -> Result<Rc<EllipticSolver>> {
        let key = format!("{label}:d{}:n{}:nt{}", field.d(), n, nt);
        if let Some(s) = self.solvers.borrow().get(&key) {
            return Ok(Rc::clone(s));
        }
        let grid = TorusGrid::new(field.d(), n, self.cfg.l)?;
        let solver = Rc::new(EllipticSolver::new(
            field,
            grid,
            StripConfig::new(nt, self.cfg.tmax(), SpatialScheme::Spectral),
        )?);
        self.solvers.borrow_mut().insert(key, Rc::clone(&solver));
        Ok(solver)
    }
}

/// The four builtin coefficient families in canonical order.
pub fn families(d: usize, l: f64) -> Vec<(&'static str, CoefficientField)> {
    vec![
        ("constant", builtin(d, Family::Constant, l).expect("builtin family")),
        ("block", builtin(d, Family::Block, l).expect("builtin family")),
        ("hermitian", builtin(d, Family::Hermitian, l).expect("builtin family")),
        (
            "lipschitz",
            builtin(d, Family::Lipschitz { seed: 11 }, l).expect("builtin family"),
        ),
    ]
}

fn variable_families(d: usize, l: f64) -> Vec<(&'static str, CoefficientField)> {
    families(d, l)
        .into_iter()
        .filter(|(name, _)| matches!(*name, "hermitian" | "lipschitz"))
        .collect()
}

/// `A = I`, the reference field for closed-form oracles.
pub fn identity_field(d: usize, l: f64) -> CoefficientField {
    let k = d + 1;
    let mut entries = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            entries.push(if i == j {
                TrigPoly::constant(d, l, Complex64::ONE)
            } else {
                TrigPoly::zero(d, l)
            });
        }
    }
    CoefficientField::from_entries(d, l, entries).expect("identity field is elliptic")
}

fn new_report(name: &str, identity: &str, family: &str) -> CheckReport {
    CheckReport {
        name: name.into(),
        identity: identity.into(),
        family: family.into(),
        params: BTreeMap::new(),
        measured: 1e300,
        tol: 0.0,
        pass: false,
        extra: BTreeMap::new(),
        notes: Vec::new(),
    }
}

fn poly_values(p: &TrigPoly, grid: &TorusGrid) -> Vec<Complex64> {
    (0..grid.node_count()).map(|m| p.eval(grid.x(m))).collect()
}

fn mul_values(f: &GridFunction, vals: &[Complex64]) -> GridFunction {
    let prod: Vec<Complex64> = f.values().iter().zip(vals).map(|(a, b)| a * b).collect();
    GridFunction::from_values(*f.grid(), prod).expect("length preserved")
}

fn subtract_mean(f: &GridFunction) -> GridFunction {
    f.sub(&GridFunction::constant(*f.grid(), f.mean()))
}

/// Base medians below this are identities satisfied to machine precision;
/// their refinement ratio is noise on noise and is not gated.
const RATIO_FLOOR: f64 = 1e-12;

/// Signed displacement of node `m` on a 1-d torus, in `(-L/2, L/2]`.
fn signed_offset(grid: &TorusGrid, m: usize) -> f64 {
    let x = grid.x(m)[0];
    if x <= grid.l() / 2.0 {
        x
    } else {
        x - grid.l()
    }
}

/// Direct radical evaluation of `mu` for a real-entry block at real `xi`
/// (independent of the quadratic-solver path; used for closed-form pins).
fn real_radical_mu(e: &BlockEval, xi: f64) -> Complex64 {
    let b = e.b.re;
    let v = (e.r1[0].re + e.r2[0].re) / b;
    let disc = e.aprime[0][0].re / b * xi * xi - (v * xi) * (v * xi) / 4.0;
    Complex64::new(-(v * xi) / 2.0, disc.max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Criterion 1: constant-coefficient exactness of the strip oracle.
// ---------------------------------------------------------------------------

pub fn c01_constant_exactness(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let field = builtin(1, Family::Constant, cfg.l)?;
    let e = field.blocks_at([0.0, 0.0]);
    let mu1 = mu_at(&e, [1.0, 0.0])?;
    let mu_closed = real_radical_mu(&e, 1.0);

    let mut rep = new_report(
        "01_constant_exactness",
        "E_A e^{ix} = e^{i t mu(1)} e^{ix}: relative strip-L2 error < 1e-2 at base \
         resolution, order >= 1.8 over two dyadic refinements",
        "constant",
    );
    rep.params.insert("n".into(), cfg.n1.to_string());
    rep.params.insert("nt".into(), cfg.nt1.to_string());
    rep.params.insert("tmax".into(), format!("{:.6}", cfg.tmax()));

    let mut errs = Vec::new();
    for lev in 0..3usize {
        let n = cfg.n1 << lev;
        let nt = cfg.nt1 << lev;
        let solver = ctx.solver("constant", &field, n, nt)?;
        let grid = *solver.grid();
        let f = GridFunction::fourier_mode(grid, [1, 0]);
        let u = solver.solve_dirichlet(&f)?;
        let dt = solver.dt();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=nt {
            let phase = (Complex64::i() * mu1 * (j as f64 * dt)).exp();
            for (m, v) in u.level(j).iter().enumerate() {
                let exact = phase * f.values()[m];
                num += (v - exact).norm_sqr();
                den += exact.norm_sqr();
            }
        }
        errs.push((num / den).sqrt());
        if lev == 0 {
            // the oracle's own interior residual (rows of the solved system)
            let au = solver.apply_interior(&u)?;
            let scale = field.b().c0().norm() / (dt * dt) * u.l2_sq().sqrt();
            rep.extra
                .insert("interior_residual".into(), au.l2_sq().sqrt() / scale.max(1e-300));
        }
    }
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    rep.extra.insert("err_base".into(), errs[0]);
    rep.extra.insert("err_refined_1".into(), errs[1]);
    rep.extra.insert("err_refined_2".into(), errs[2]);
    rep.extra.insert("order_1".into(), o1);
    rep.extra.insert("order_2".into(), o2);
    rep.extra.insert("mu_re".into(), mu1.re);
    rep.extra.insert("mu_im".into(), mu1.im);
    rep.measured = errs[0];
    rep.tol = 1e-2;
    rep.pass = errs[0].is_finite()
        && errs[0] < rep.tol
        && o1 >= 1.8
        && o2 >= 1.8
        && (mu1 - mu_closed).norm() < 1e-12;
    rep.notes.push(format!(
        "mu(1) = {:.6}{:+.6}i (closed form {:.6}{:+.6}i)",
        mu1.re, mu1.im, mu_closed.re, mu_closed.im
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 2: symbol correctness (quadratic residual and envelopes).
// ---------------------------------------------------------------------------

pub fn c02_symbol_correctness(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let mut rep = new_report(
        "02_symbol_correctness",
        "quadratic residual of mu < 1e-10 on all families; Im mu >= C'|xi| with C' > 0 \
         reported; |mu|/|xi| and Im mu/|xi| inside the provable ellipticity envelopes",
        "all",
    );
    let mut dims = vec![(1usize, cfg.n1)];
    if cfg.run_d2 {
        dims.push((2, cfg.n2));
    }
    let mut worst_resid: f64 = 0.0;
    let mut worst_env: f64 = 0.0;
    let mut min_cp = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    for (d, n) in dims {
        rep.params.insert(format!("n_d{d}"), n.to_string());
        let grid = TorusGrid::new(d, n, cfg.l)?;
        for (label, field) in families(d, cfg.l) {
            let val = field.validate(if d == 1 { 256 } else { 48 }, 1e-9)?;
            let bounds = check_symbol_bounds(&field, grid, val.nu1)?;
            let env_up = 2.0 * val.nu2 / val.nu1 + (val.nu2 / val.nu1).sqrt();
            let env_lo = (val.nu1 / val.nu2).powf(1.5);
            worst_resid = worst_resid.max(bounds.resid_max);
            worst_env = worst_env
                .max(bounds.c_upper / env_up)
                .max(env_lo / bounds.c_lower);
            min_cp = min_cp.min(bounds.c_lower);
            min_margin = min_margin.min(bounds.margin_min);
            rep.extra
                .insert(format!("c_lower_{label}_d{d}"), bounds.c_lower);
            rep.extra
                .insert(format!("c_upper_{label}_d{d}"), bounds.c_upper);
        }
    }
    rep.extra.insert("envelope_worst".into(), worst_env);
    rep.extra.insert("margin_min".into(), min_margin);
    rep.extra.insert("c_lower_min".into(), min_cp);
    rep.measured = worst_resid;
    rep.tol = 1e-10;
    rep.pass = worst_resid < rep.tol
        && min_cp > 0.0
        && worst_env <= 1.0 + 1e-9
        && min_margin >= -1e-12;
    rep.notes
        .push(format!("reported C' = min Im mu / |xi| = {min_cp:.4}"));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 3: closure matrices reproduce lambda and q.
// ---------------------------------------------------------------------------

pub fn c03_phi_closure(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let mut rep = new_report(
        "03_phi_closure",
        "mu of the closure matrices M, N reproduces lambda and q pointwise (< 1e-10 \
         relative) on all families; the closure matrices stay elliptic",
        "all",
    );
    let mut worst: f64 = 0.0;
    let mut min_nu1 = f64::INFINITY;
    let mut dims = vec![(1usize, cfg.n1.min(128))];
    if cfg.run_d2 {
        dims.push((2, cfg.n2.min(16)));
    }
    for (d, n) in dims {
        let grid = TorusGrid::new(d, n, cfg.l)?;
        for (_label, field) in families(d, cfg.l) {
            let (mf, nf) = field.closure_matrices();
            for closure in [&mf, &nf] {
                let v = closure.validate(24, 1e-9)?;
                min_nu1 = min_nu1.min(v.nu1);
            }
            let stride = (grid.node_count() / 24).max(1);
            for m in (0..grid.node_count()).step_by(stride) {
                let x = grid.x(m);
                let e = field.blocks_at(x);
                let em = mf.blocks_at(x);
                let en = nf.blocks_at(x);
                for k in 0..grid.node_count() {
                    let xi = grid.xi(k);
                    let an = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                    if an == 0.0 {
                        continue;
                    }
                    let lam = lambda_at(&e, xi)?;
                    let q = q_at(&e, xi)?;
                    let pm = mu_at(&em, xi)?;
                    let pn = mu_at(&en, xi)?;
                    worst = worst.max((pm - lam).norm() / an.max(lam.norm()));
                    worst = worst.max((pn - q).norm() / an.max(q.norm()));
                }
            }
        }
    }
    // closed form for the running example at xi = 1
    let f1 = builtin(1, Family::Constant, cfg.l)?;
    let e1 = f1.blocks_at([0.0, 0.0]);
    let (mf, nf) = f1.closure_matrices();
    let mu_c = real_radical_mu(&e1, 1.0);
    let lam_c = e1.b * mu_c + e1.r2[0];
    let q_c = mu_c + (e1.r1[0] + e1.r2[0]) / e1.b;
    let dm = (mu_at(&mf.blocks_at([0.0, 0.0]), [1.0, 0.0])? - lam_c).norm();
    let dn = (mu_at(&nf.blocks_at([0.0, 0.0]), [1.0, 0.0])? - q_c).norm();
    rep.extra.insert("closed_form_m".into(), dm);
    rep.extra.insert("closed_form_n".into(), dn);
    rep.extra.insert("closure_nu1_min".into(), min_nu1);
    rep.measured = worst;
    rep.tol = 1e-10;
    rep.pass = worst < rep.tol && dm < 1e-12 && dn < 1e-12 && min_nu1 > 0.0;
    rep.notes.push(format!(
        "Phi(M)(1) = {:.6}{:+.6}i, Phi(N)(1) = {:.6}{:+.6}i",
        lam_c.re, lam_c.im, q_c.re, q_c.im
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 4: factorization A' = M_b Q P on the boundary.
// ---------------------------------------------------------------------------

pub fn c04_factorization(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let band = 8usize.min(cfg.n1 / 4).max(1);
    let mut rep = new_report(
        "04_factorization",
        "A' f = b Q(P f): median relative residual < 5e-2 per family, at least \
         halving under dyadic refinement",
        "all",
    );
    rep.params.insert("band".into(), band.to_string());
    rep.params
        .insert("members".into(), cfg.members_small.to_string());
    let mut worst_med: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for (label, field) in families(1, cfg.l) {
        let mut meds = Vec::new();
        let passes: &[usize] = if cfg.refine { &[1, 2] } else { &[1] };
        for &s in passes {
            let solver = ctx.solver(label, &field, cfg.n1 * s, cfg.nt1 * s)?;
            let grid = *solver.grid();
            let bvals = poly_values(field.b(), &grid);
            let members = ensemble::members(grid, cfg.seed + 40, cfg.members_small, band)?;
            let mut rels = Vec::new();
            for f in &members {
                let apf = solver.aprime_apply(f)?;
                let pf = solver.p_apply(f)?;
                let qpf = solver.q_apply(&pf)?;
                let bqpf = mul_values(&qpf, &bvals);
                rels.push(apf.sub(&bqpf).norm_l2() / apf.norm_l2().max(1e-300));
            }
            meds.push(median(&rels));
        }
        rep.extra.insert(format!("med_{label}"), meds[0]);
        worst_med = worst_med.max(meds[0]);
        if meds.len() == 2 {
            let ratio = meds[1] / meds[0].max(1e-300);
            rep.extra.insert(format!("ratio_{label}"), ratio);
            if meds[0] > RATIO_FLOOR {
                worst_ratio = worst_ratio.max(ratio);
            }
        }
    }
    rep.measured = worst_med;
    rep.tol = 5e-2;
    rep.pass = worst_med < rep.tol && (!cfg.refine || worst_ratio <= 0.625);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 5: trace identity vs the energy form.
// ---------------------------------------------------------------------------

pub fn c05_trace_consistency(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let band = 8usize.min(cfg.n1 / 4).max(1);
    let pairs = (cfg.members_small / 2).max(1);
    let mut rep = new_report(
        "05_trace_consistency",
        "<Lambda f, g> agrees with the energy pairing B(E f, E g): median relative \
         gap < 5e-2 per family, at least halving under dyadic refinement",
        "all",
    );
    rep.params.insert("band".into(), band.to_string());
    rep.params.insert("pairs".into(), pairs.to_string());
    let mut worst_med: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for (label, field) in families(1, cfg.l) {
        let mut meds = Vec::new();
        let passes: &[usize] = if cfg.refine { &[1, 2] } else { &[1] };
        for &s in passes {
            let solver = ctx.solver(label, &field, cfg.n1 * s, cfg.nt1 * s)?;
            let grid = *solver.grid();
            let members = ensemble::members(grid, cfg.seed + 50, 2 * pairs, band)?;
            let mut rels = Vec::new();
            for i in 0..pairs {
                let f = &members[i];
                let g = &members[pairs + i];
                let u = solver.solve_dirichlet(f)?;
                let v = solver.solve_dirichlet(g)?;
                let weak = solver.energy_pairing(&u, &v);
                let lamf = solver.dn_apply(f)?;
                let strong = lamf.inner(g);
                rels.push(
                    (weak - strong).norm() / (lamf.norm_l2() * g.norm_l2()).max(1e-300),
                );
            }
            meds.push(median(&rels));
        }
        rep.extra.insert(format!("med_{label}"), meds[0]);
        worst_med = worst_med.max(meds[0]);
        if meds.len() == 2 {
            let ratio = meds[1] / meds[0].max(1e-300);
            rep.extra.insert(format!("ratio_{label}"), ratio);
            if meds[0] > RATIO_FLOOR {
                worst_ratio = worst_ratio.max(ratio);
            }
        }
    }
    rep.measured = worst_med;
    rep.tol = 5e-2;
    rep.pass = worst_med < rep.tol && (!cfg.refine || worst_ratio <= 0.625);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 6: adjoint relation <b Q_A f, g> = <f, conj(b) P_{A*} g>.
// ---------------------------------------------------------------------------

pub fn c06_adjoint_relation(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let band = 8usize.min(cfg.n1 / 4).max(1);
    let mut rep = new_report(
        "06_adjoint_relation",
        "<b Q_A f, g> = <f, conj(b) P_{A*} g>: median relative gap < 5e-2 per family, \
         at least halving under dyadic refinement",
        "all",
    );
    rep.params.insert("band".into(), band.to_string());
    rep.params
        .insert("members".into(), cfg.members_small.to_string());
    let mut worst_med: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for (label, field) in families(1, cfg.l) {
        let adj = field.adjoint();
        let mut meds = Vec::new();
        let passes: &[usize] = if cfg.refine { &[1, 2] } else { &[1] };
        for &s in passes {
            let solver = ctx.solver(label, &field, cfg.n1 * s, cfg.nt1 * s)?;
            let solver_adj =
                ctx.solver(&format!("{label}_adj"), &adj, cfg.n1 * s, cfg.nt1 * s)?;
            let grid = *solver.grid();
            let bvals = poly_values(field.b(), &grid);
            let bbar: Vec<Complex64> = bvals.iter().map(|z| z.conj()).collect();
            let fs = ensemble::members(grid, cfg.seed + 60, cfg.members_small, band)?;
            let gs = ensemble::members(grid, cfg.seed + 61, cfg.members_small, band)?;
            let mut rels = Vec::new();
            for (f, g) in fs.iter().zip(&gs) {
                let bqf = mul_values(&solver.q_apply(f)?, &bvals);
                let pg = solver_adj.p_apply(g)?;
                let bbar_pg = mul_values(&pg, &bbar);
                let lhs = bqf.inner(g);
                let rhs = f.inner(&bbar_pg);
                rels.push((lhs - rhs).norm() / (bqf.norm_l2() * g.norm_l2()).max(1e-300));
            }
            meds.push(median(&rels));
        }
        rep.extra.insert(format!("med_{label}"), meds[0]);
        worst_med = worst_med.max(meds[0]);
        if meds.len() == 2 {
            let ratio = meds[1] / meds[0].max(1e-300);
            rep.extra.insert(format!("ratio_{label}"), ratio);
            if meds[0] > RATIO_FLOOR {
                worst_ratio = worst_ratio.max(ratio);
            }
        }
    }
    rep.measured = worst_med;
    rep.tol = 5e-2;
    rep.pass = worst_med < rep.tol && (!cfg.refine || worst_ratio <= 0.625);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 7: domain characterization of Lambda.
// ---------------------------------------------------------------------------

pub fn c07_domain_characterization(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let band = (cfg.n1 / 8).max(1);
    let s_list = [0.0, 0.5, 1.0];
    let mut rep = new_report(
        "07_domain_characterization",
        "||Lambda f||_{H^{s-1}} / ||f||_{H^s} within [0.02, 50] for s in {0, 1/2, 1} \
         (homogeneous norms, zero-mean data); medians drift < 20% under refinement",
        "all",
    );
    rep.params.insert("band".into(), band.to_string());
    rep.params
        .insert("members".into(), cfg.members_domain.to_string());
    let mut viol: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    for (label, field) in families(1, cfg.l) {
        let mut meds: Vec<Vec<f64>> = Vec::new();
        let passes: &[usize] = if cfg.refine { &[1, 2] } else { &[1] };
        for &sc in passes {
            let solver = ctx.solver(label, &field, cfg.n1 * sc, cfg.nt1 * sc)?;
            let grid = *solver.grid();
            let members = ensemble::members(grid, cfg.seed + 70, cfg.members_domain, band)?;
            let mut per_s: Vec<Vec<f64>> = vec![Vec::new(); s_list.len()];
            for f in &members {
                let lam = subtract_mean(&solver.dn_apply(f)?);
                for (si, &s) in s_list.iter().enumerate() {
                    let r = lam.sobolev_norm(s - 1.0, true)?
                        / f.sobolev_norm(s, true)?.max(1e-300);
                    per_s[si].push(r);
                    viol = viol.max(r / 50.0).max(0.02 / r.max(1e-300));
                }
            }
            meds.push(per_s.iter().map(|v| median(v)).collect());
        }
        for (si, &s) in s_list.iter().enumerate() {
            rep.extra
                .insert(format!("med_{label}_s{:02}", (s * 10.0) as usize), meds[0][si]);
            if meds.len() == 2 {
                let drift = (meds[1][si] / meds[0][si].max(1e-300) - 1.0).abs();
                worst_drift = worst_drift.max(drift);
            }
        }
    }
    if cfg.run_d2 {
        let field = builtin(2, Family::Hermitian, cfg.l)?;
        let solver = ctx.solver("hermitian", &field, cfg.n2, cfg.nt2)?;
        let grid = *solver.grid();
        let band2 = (cfg.n2 / 8).max(1);
        let members = ensemble::members(grid, cfg.seed + 71, cfg.members_small, band2)?;
        let mut rs = Vec::new();
        for f in &members {
            let lam = subtract_mean(&solver.dn_apply(f)?);
            let r = lam.sobolev_norm(-0.5, true)? / f.sobolev_norm(0.5, true)?.max(1e-300);
            viol = viol.max(r / 50.0).max(0.02 / r.max(1e-300));
            rs.push(r);
        }
        rep.extra.insert("med_hermitian_d2_s05".into(), median(&rs));
    }
    rep.extra.insert("max_drift".into(), worst_drift);
    rep.measured = viol;
    rep.tol = 1.0;
    rep.pass = viol <= 1.0 && (!cfg.refine || worst_drift < 0.2);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 8: lower-order remainder on the mode sweep.
// ---------------------------------------------------------------------------

pub fn c08_lower_order_remainder(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let mut ks: Vec<usize> = Vec::new();
    let mut k = 2usize;
    while k <= cfg.sweep_max && 4 * k <= cfg.n1 {
        ks.push(k);
        k *= 2;
    }
    let mut rep = new_report(
        "08_lower_order_remainder",
        "on the mode sweep ||P e^{ikx}|| fits log-log slope 1.0 +/- 0.1; \
         ||S1 e^{ikx}|| shows no monotone growth (Kendall tau <= 0.5 on variable \
         families) and stays < 1e-3 for constant A (adapted strips per mode)",
        "all",
    );
    rep.params.insert(
        "sweep".into(),
        ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
    );
    let grid = TorusGrid::new(1, cfg.n1, cfg.l)?;
    let mut worst_slope_dev: f64 = 0.0;
    let mut worst_tau: f64 = -1.0;
    let mut smax_const: f64 = 0.0;
    for (label, field) in families(1, cfg.l) {
        let engine = WeightEngine::new(&field, grid)?;
        let xs: Vec<f64> = ks.iter().map(|k| *k as f64).collect();
        let mut pnorms = Vec::new();
        let mut snorms = Vec::new();
        for &k in &ks {
            let (tmax, nt) = adapted_strip(k as f64, cfg.l, engine.c_lower);
            let solver = EllipticSolver::new(
                &field,
                grid,
                StripConfig::new(nt, tmax, SpatialScheme::Spectral),
            )?;
            let f = GridFunction::fourier_mode(grid, [k as i64, 0]);
            let pf = solver.p_apply(&f)?;
            let opmu = engine.op_mu(&f)?;
            let s1 = pf.scale(-Complex64::ONE).sub(&opmu.scale(Complex64::i()));
            pnorms.push(pf.norm_l2() / f.norm_l2());
            snorms.push(s1.norm_l2() / f.norm_l2());
        }
        let slope = loglog_slope(&xs, &pnorms);
        worst_slope_dev = worst_slope_dev.max((slope - 1.0).abs());
        rep.extra.insert(format!("p_slope_{label}"), slope);
        let smax = snorms.iter().cloned().fold(0.0, f64::max);
        rep.extra.insert(format!("s1_max_{label}"), smax);
        if label == "constant" {
            smax_const = smax;
        } else {
            let tau = kendall_tau(&xs, &snorms);
            worst_tau = worst_tau.max(tau);
            rep.extra.insert(format!("s1_tau_{label}"), tau);
        }
    }
    rep.measured = worst_slope_dev;
    rep.tol = 0.1;
    rep.pass = worst_slope_dev <= rep.tol && worst_tau <= 0.5 && smax_const < 1e-3;
    rep.extra.insert("s1_tau_worst".into(), worst_tau);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 9: quadratic estimates (square functions).
// ---------------------------------------------------------------------------

pub fn c09_quadratic_estimates(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let n_id = (cfg.n1 / 2).max(32);
    let mut rep = new_report(
        "09_quadratic_estimates",
        "square-function ratio for t|xi| with A = I equals 1/4 (+/- 1e-3) and for \
         (t|xi|)^{1/2} equals 1/2; all tagged weights on the variable families give \
         ratios <= 50 with < 20% drift under refinement; untagged weights refuse",
        "all",
    );
    rep.params.insert("n_identity".into(), n_id.to_string());
    let grid_id = TorusGrid::new(1, n_id, cfg.l)?;
    let band_id = 8usize.min(n_id / 4).max(1);
    let idf = identity_field(1, cfg.l);
    let eng_id = WeightEngine::new(&idf, grid_id)?;
    let members_id =
        ensemble::members(grid_id, cfg.seed + 90, cfg.members_small.clamp(1, 4), band_id)?;
    let wtxi = eng_id.weight(WeightKind::TXi)?;
    let wsq = eng_id.weight(WeightKind::SqrtTXi)?;
    let mut dev_txi: f64 = 0.0;
    let mut dev_sq: f64 = 0.0;
    for f in &members_id {
        let n2 = f.norm_l2().powi(2);
        let s = eng_id.square_function(&wtxi, f)?;
        dev_txi = dev_txi.max((s.value / n2 - 0.25).abs());
        let s2 = eng_id.square_function(&wsq, f)?;
        dev_sq = dev_sq.max((s2.value / n2 - 0.5).abs());
    }
    rep.extra.insert("dev_txi".into(), dev_txi);
    rep.extra.insert("dev_sqrt_txi".into(), dev_sq);

    // tagged weights, bounded and refinement-stable, on the variable families
    let kinds = [
        WeightKind::TXi,
        WeightKind::SqrtTXi,
        WeightKind::PiPrime(0),
        WeightKind::ZetaBs { s: 0.5 },
        WeightKind::ZetaTilde,
        WeightKind::TimeDeriv(1),
        WeightKind::TimeDeriv(2),
    ];
    let mut worst_ratio: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    for (label, field) in variable_families(1, cfg.l) {
        let base_n = (cfg.n1 / 2).max(32);
        let sizes: Vec<usize> = if cfg.refine {
            vec![base_n, 2 * base_n]
        } else {
            vec![base_n]
        };
        let band = 8usize.min(base_n / 4).max(1);
        let mut meds: Vec<Vec<f64>> = Vec::new();
        for &n in &sizes {
            let grid = TorusGrid::new(1, n, cfg.l)?;
            let engine = WeightEngine::new(&field, grid)?;
            let members = ensemble::members(grid, cfg.seed + 91, cfg.members_small, band)?;
            let mut per_kind = Vec::new();
            for kind in &kinds {
                let w = engine.weight(*kind)?;
                let mut ratios = Vec::new();
                for f in &members {
                    let s = engine.square_function(&w, f)?;
                    let r = s.value / f.norm_l2().powi(2);
                    worst_ratio = worst_ratio.max(r);
                    ratios.push(r);
                }
                per_kind.push(median(&ratios));
            }
            meds.push(per_kind);
        }
        for (ki, kind) in kinds.iter().enumerate() {
            rep.extra
                .insert(format!("med_{label}_{}", kind.label()), meds[0][ki]);
            if meds.len() == 2 {
                worst_drift =
                    worst_drift.max((meds[1][ki] / meds[0][ki].max(1e-300) - 1.0).abs());
            }
        }
    }
    rep.extra.insert("ratio_max".into(), worst_ratio);
    rep.extra.insert("max_drift".into(), worst_drift);

    // refusal semantics: sup-only weights, the bare semigroup, nonzero mean
    let herm = builtin(1, Family::Hermitian, cfg.l)?;
    let engr = WeightEngine::new(&herm, grid_id)?;
    let f0 = &ensemble::members(grid_id, cfg.seed + 92, 1, band_id)?[0];
    let mut refusals_ok = true;
    for kind in [
        WeightKind::PiLast,
        WeightKind::ZetaRaw,
        WeightKind::QWeight { axis: 0, eps: 0.5 },
    ] {
        let w = engr.weight(kind)?;
        match engr.square_function(&w, f0) {
            Err(e) if e.to_string().contains("sup-only") => {}
            _ => refusals_ok = false,
        }
    }
    let wu = engr.weight(WeightKind::Unit)?;
    match engr.square_function(&wu, f0) {
        Err(e) if e.to_string().contains("diverges") => {}
        _ => refusals_ok = false,
    }
    let ones = GridFunction::constant(grid_id, Complex64::ONE);
    let wt = engr.weight(WeightKind::TXi)?;
    match engr.square_function(&wt, &ones) {
        Err(e) if e.to_string().contains("zero mode") => {}
        _ => refusals_ok = false,
    }
    let guards_ok = engr.weight(WeightKind::ZetaBs { s: 0.0 }).is_err()
        && engr.weight(WeightKind::TimeDeriv(0)).is_err()
        && engr.weight(WeightKind::QWeight { axis: 3, eps: 0.5 }).is_err();
    rep.extra
        .insert("refusals_ok".into(), if refusals_ok { 1.0 } else { 0.0 });
    rep.extra
        .insert("guards_ok".into(), if guards_ok { 1.0 } else { 0.0 });

    rep.measured = dev_txi;
    rep.tol = 1e-3;
    rep.pass = dev_txi <= rep.tol
        && dev_sq <= 1e-3
        && worst_ratio <= 50.0
        && (!cfg.refine || worst_drift < 0.2)
        && refusals_ok
        && guards_ok;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 10: kernel decay on the wide torus.
// ---------------------------------------------------------------------------

/// Worst (largest) per-`t` least-squares slope of `ln |K|` against
/// `ln(1 + |y|/t)`, pooled over base nodes, on `lo * t <= |y| <= L/4`.
fn kernel_slope(
    engine: &WeightEngine,
    kind: WeightKind,
    ts: &[f64],
    x0s: &[usize],
    lo: f64,
) -> Result<f64> {
    let grid = *engine.grid();
    let w = engine.weight(kind)?;
    let mut worst = f64::NEG_INFINITY;
    for &t in ts {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &x0 in x0s {
            let kf = engine.kernel(&w, x0, t)?;
            for m in 0..grid.node_count() {
                let y = signed_offset(&grid, m).abs();
                if y > grid.l() / 4.0 || y < lo * t {
                    continue;
                }
                let kv = kf.values()[m].norm();
                if kv < 1e-300 {
                    continue;
                }
                xs.push(1.0 + y / t);
                ys.push(kv);
            }
        }
        if xs.len() < 8 {
            return Err(CoreError::Verify(
                "kernel decay fit has too few points".into(),
            ));
        }
        worst = worst.max(loglog_slope(&xs, &ys));
    }
    Ok(worst)
}

pub fn c10_kernel_decay(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let mut rep = new_report(
        "10_kernel_decay",
        "identity-A kernel matches (1/pi) t/(t^2+y^2) within 1% on |y| <= L/4; \
         decay-fit slopes <= -(d+1/2) for the unit and Pi' weights; q-weight kernel \
         consistent with the min(|y|^{-d+delta}, |y|^{-d-delta}) envelope",
        "all",
    );
    let grid = TorusGrid::new(1, cfg.kernel_n, cfg.kernel_l)?;
    rep.params.insert("kernel_n".into(), cfg.kernel_n.to_string());
    rep.params
        .insert("kernel_l".into(), format!("{:.6}", cfg.kernel_l));
    let ts = [0.25, 0.5, 1.0];
    let idf = identity_field(1, cfg.kernel_l);
    let eng_id = WeightEngine::new(&idf, grid)?;
    let unit = eng_id.weight(WeightKind::Unit)?;
    let front = 1.0 / TAU.sqrt();
    let mut worst_poisson: f64 = 0.0;
    for &t in &ts {
        let kf = eng_id.kernel(&unit, 0, t)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for m in 0..grid.node_count() {
            let y = signed_offset(&grid, m);
            if y.abs() > cfg.kernel_l / 4.0 {
                continue;
            }
            let kv = kf.values()[m] * front;
            let pv = t / (PI * (t * t + y * y));
            num += (kv - Complex64::new(pv, 0.0)).norm_sqr();
            den += pv * pv;
        }
        worst_poisson = worst_poisson.max((num / den).sqrt());
    }
    rep.extra.insert("poisson_rel_l2".into(), worst_poisson);

    let x0s = [0usize, grid.node_count() / 3, 2 * grid.node_count() / 3];
    let slope_unit_id = kernel_slope(&eng_id, WeightKind::Unit, &ts, &[0], 0.0)?;
    let herm = builtin(1, Family::Hermitian, cfg.kernel_l)?;
    let eng_h = WeightEngine::new(&herm, grid)?;
    let slope_unit = kernel_slope(&eng_h, WeightKind::Unit, &ts, &x0s, 0.0)?;
    let slope_pip = kernel_slope(&eng_h, WeightKind::PiPrime(0), &ts, &x0s, 0.0)?;
    // q-weight: the envelope is an upper bound (mild singularity near the
    // diagonal, decay at least d+delta in the far field), so the far-field
    // slope must be at most -(d+delta)+margin and the near field must not
    // exceed its |y|^{-(d-delta)} profile; delta = 0.5, margin = 0.75.
    let delta = 0.5;
    let qkind = WeightKind::QWeight { axis: 0, eps: 0.5 };
    let slope_q_far = kernel_slope(&eng_h, qkind, &ts, &x0s, 1.0)?;
    let wq = eng_h.weight(qkind)?;
    let mut near_env: f64 = 0.0;
    for &t in &ts {
        for &x0 in &x0s {
            let kf = eng_h.kernel(&wq, x0, t)?;
            let peak = (0..grid.node_count())
                .filter(|&m| signed_offset(&grid, m).abs() <= t)
                .map(|m| kf.values()[m].norm())
                .fold(0.0, f64::max);
            for m in 0..grid.node_count() {
                let y = signed_offset(&grid, m).abs();
                if y == 0.0 || y > t {
                    continue;
                }
                let c = kf.values()[m].norm() * (y / t).powf(1.0 - delta) / peak.max(1e-300);
                near_env = near_env.max(c);
            }
        }
    }
    rep.extra.insert("slope_unit_identity".into(), slope_unit_id);
    rep.extra.insert("slope_unit".into(), slope_unit);
    rep.extra.insert("slope_pi_prime".into(), slope_pip);
    rep.extra.insert("slope_q_far".into(), slope_q_far);
    rep.extra.insert("q_near_envelope".into(), near_env);

    rep.measured = worst_poisson;
    rep.tol = 1e-2;
    rep.pass = worst_poisson <= rep.tol
        && slope_unit_id <= -1.5
        && slope_unit <= -1.5
        && slope_pip <= -1.5
        && slope_q_far <= -(1.0 + delta) + 0.75
        && near_env <= 25.0;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 11: the DN semigroup.
// ---------------------------------------------------------------------------

pub fn c11_dn_semigroup(ctx: &VerifyCtx) -> Result<CheckReport> {
    let cfg = &ctx.cfg;
    let n = cfg.semigroup_n;
    let rho0 = 0.5 * TAU / cfg.l;
    let ts = [0.1, 0.5, 2.0];
    let s_list = [0.0, 0.5, 1.0];
    let mut rep = new_report(
        "11_dn_semigroup",
        "Lambda spectrum inside the 85-degree sector (zero mode excluded); H^s \
         invariance constants <= 25 for s in {0, 1/2, 1}; semigroup defect < 1e-8; \
         analyticity proxy ||t Lambda E(t)|| <= 25",
        "all",
    );
    rep.params.insert("n".into(), n.to_string());
    rep.params.insert("rho0".into(), format!("{rho0:.6}"));
    let mut worst_angle: f64 = 0.0;
    let mut max_low = 0usize;
    let mut worst_hs: f64 = 0.0;
    let mut worst_defect: f64 = 0.0;
    let mut worst_analytic: f64 = 0.0;
    for (label, field) in families(1, cfg.l) {
        let solver = ctx.solver(label, &field, n, cfg.nt1)?;
        let grid = *solver.grid();
        let rows = solver.lambda_matrix()?;
        let eig = expm::eigenvalues(&rows)?;
        let low = eig.iter().filter(|z| z.norm() < rho0).count();
        max_low = max_low.max(low);
        let ang = eig
            .iter()
            .filter(|z| z.norm() >= rho0)
            .map(|z| z.arg().abs())
            .fold(0.0, f64::max)
            .to_degrees();
        worst_angle = worst_angle.max(ang);
        rep.extra.insert(format!("angle_{label}"), ang);
        rep.extra.insert(format!("low_count_{label}"), low as f64);

        let band = (n / 8).max(1);
        let members = ensemble::members(grid, cfg.seed + 110, cfg.members_semigroup, band)?;
        for &t in &ts {
            let scaled: Vec<Vec<Complex64>> = rows
                .iter()
                .map(|r| r.iter().map(|z| z * (-t)).collect())
                .collect();
            let et = expm::expm(&scaled)?;
            for f in &members {
                let ef = GridFunction::from_values(grid, expm::matvec_rows(&et, f.values()))?;
                for &s in &s_list {
                    let r =
                        ef.sobolev_norm(s, false)? / f.sobolev_norm(s, false)?.max(1e-300);
                    worst_hs = worst_hs.max(r);
                }
                let lef =
                    GridFunction::from_values(grid, expm::matvec_rows(&rows, ef.values()))?;
                worst_analytic = worst_analytic.max(t * lef.norm_l2() / f.norm_l2().max(1e-300));
            }
        }
        // semigroup property E(0.3) E(0.7) = E(1.0)
        let ets: Vec<Vec<Vec<Complex64>>> = [0.3, 0.7, 1.0]
            .iter()
            .map(|&t| {
                let scaled: Vec<Vec<Complex64>> = rows
                    .iter()
                    .map(|r| r.iter().map(|z| z * (-t)).collect())
                    .collect();
                expm::expm(&scaled)
            })
            .collect::<Result<_>>()?;
        let prod = expm::matmul_rows(&ets[0], &ets[1]);
        let mut diff = prod;
        for (i, row) in diff.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= ets[2][i][j];
            }
        }
        let defect = expm::frobenius(&diff) / expm::frobenius(&ets[2]).max(1e-300);
        worst_defect = worst_defect.max(defect);
        rep.extra.insert(format!("defect_{label}"), defect);
    }
    rep.extra.insert("hs_max".into(), worst_hs);
    rep.extra.insert("analytic_max".into(), worst_analytic);
    rep.extra.insert("defect_max".into(), worst_defect);
    rep.measured = worst_angle;
    rep.tol = 85.0;
    rep.pass = worst_angle <= rep.tol
        && max_low <= 1
        && worst_hs <= 25.0
        && worst_defect < 1e-8
        && worst_analytic <= 25.0;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Criterion 12: byte determinism of the suite runner.
// ---------------------------------------------------------------------------

pub fn c12_determinism(ctx: &VerifyCtx) -> Result<CheckReport> {
    let mut sub = VerifyConfig::reduced();
    sub.seed = ctx.cfg.seed;
    let r1 = run_suite_inner("all", &sub, false)?;
    let r2 = run_suite_inner("all", &sub, false)?;
    let j1 = serde_json::to_string_pretty(&r1)
        .map_err(|e| CoreError::Verify(format!("serialize: {e}")))?;
    let j2 = serde_json::to_string_pretty(&r2)
        .map_err(|e| CoreError::Verify(format!("serialize: {e}")))?;
    let equal = j1 == j2;
    let mut rep = new_report(
        "12_determinism",
        "two reduced-size runs of every other criterion with the same config and \
         seed serialize to byte-identical JSON",
        "all",
    );
    rep.extra.insert("bytes".into(), j1.len() as f64);
    rep.extra.insert("sub_checks".into(), r1.reports.len() as f64);
    rep.measured = if equal { 0.0 } else { 1.0 };
    rep.tol = 0.5;
    rep.pass = equal;
    rep.notes.push(format!(
        "reduced sub-run tally: {} passed, {} failed (only byte equality is asserted here)",
        r1.passed, r1.failed
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Runner.
// ---------------------------------------------------------------------------

/// Stable report name of criterion `id` (1..=12), e.g. `04_factorization`.
pub fn criterion_name(id: usize) -> &'static str {
    match id {
        1 => "01_constant_exactness",
        2 => "02_symbol_correctness",
        3 => "03_phi_closure",
        4 => "04_factorization",
        5 => "05_trace_consistency",
        6 => "06_adjoint_relation",
        7 => "07_domain_characterization",
        8 => "08_lower_order_remainder",
        9 => "09_quadratic_estimates",
        10 => "10_kernel_decay",
        11 => "11_dn_semigroup",
        12 => "12_determinism",
        _ => "unknown",
    }
}

/// Valid suite names, each a subset of the twelve criteria.
pub fn suite_names() -> Vec<&'static str> {
    vec![
        "all",
        "determinism",
        "dn",
        "domain",
        "factorization",
        "kernel",
        "phi",
        "quadratic",
        "remainder",
        "semigroup",
        "symbol",
    ]
}

/// Criterion ids (1-based) for a suite, or `None` for an unknown name.
pub fn criterion_ids(suite: &str) -> Option<Vec<usize>> {
    Some(match suite {
        "all" => (1..=12).collect(),
        "factorization" => vec![1, 4],
        "symbol" => vec![2],
        "phi" => vec![3],
        "dn" => vec![5, 6],
        "domain" => vec![7],
        "remainder" => vec![8],
        "quadratic" => vec![9],
        "kernel" => vec![10],
        "semigroup" => vec![11],
        "determinism" => vec![12],
        _ => return None,
    })
}

/// Run one criterion, converting an internal error into a failed report.
pub fn run_criterion(id: usize, ctx: &VerifyCtx) -> CheckReport {
    let out = match id {
        1 => c01_constant_exactness(ctx),
        2 => c02_symbol_correctness(ctx),
        3 => c03_phi_closure(ctx),
        4 => c04_factorization(ctx),
        5 => c05_trace_consistency(ctx),
        6 => c06_adjoint_relation(ctx),
        7 => c07_domain_characterization(ctx),
        8 => c08_lower_order_remainder(ctx),
        9 => c09_quadratic_estimates(ctx),
        10 => c10_kernel_decay(ctx),
        11 => c11_dn_semigroup(ctx),
        12 => c12_determinism(ctx),
        _ => Err(CoreError::Verify(format!("unknown criterion id {id}"))),
    };
    out.unwrap_or_else(|e| {
        let mut rep = new_report(criterion_name(id), "criterion aborted", "-");
        rep.notes.push(format!("error: {e}"));
        rep
    })
}

fn run_suite_inner(suite: &str, cfg: &VerifyConfig, include_determinism: bool) -> Result<RunReport> {
    let ids = criterion_ids(suite).ok_or_else(|| {
        CoreError::Config(format!(
            "unknown suite '{suite}'; valid suites: {}",
            suite_names().join(", ")
        ))
    })?;
    let ctx = VerifyCtx::new(cfg.clone());
    let mut reports = Vec::new();
    for id in ids {
        if id == 12 && !include_determinism {
            continue;
        }
        reports.push(run_criterion(id, &ctx));
    }
    let mut report = RunReport {
        suite: suite.into(),
        d: 1,
        n: cfg.n1,
        nt: cfg.nt1,
        l: cfg.l,
        tmax: cfg.tmax(),
        seed: cfg.seed,
        refine: cfg.refine,
        reports,
        passed: 0,
        failed: 0,
    };
    report.tally();
    Ok(report)
}

/// Run a named suite sequentially in ascending criterion order.
pub fn run_suite(suite: &str, cfg: &VerifyConfig) -> Result<RunReport> {
    run_suite_inner(suite, cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_and_closure_criteria_pass_at_reduced_size() {
        let mut cfg = VerifyConfig::reduced();
        cfg.run_d2 = true;
        let ctx = VerifyCtx::new(cfg);
        let r2 = run_criterion(2, &ctx);
        assert!(r2.pass, "{}\n{:?}", r2.line(), r2.notes);
        let r3 = run_criterion(3, &ctx);
        assert!(r3.pass, "{}\n{:?}", r3.line(), r3.notes);
    }

    #[test]
    fn constant_exactness_converges_at_second_order() {
        let mut cfg = VerifyConfig::reduced();
        cfg.n1 = 64;
        cfg.nt1 = 512;
        let ctx = VerifyCtx::new(cfg);
        let r = run_criterion(1, &ctx);
        assert!(r.pass, "{}\n{:?}", r.line(), r.extra);
    }

    #[test]
    fn unknown_suite_is_rejected_and_names_are_sorted() {
        assert!(run_suite("bogus", &VerifyConfig::reduced()).is_err());
        let names = suite_names();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        for name in names {
            assert!(criterion_ids(name).is_some());
        }
    }

    #[test]
    fn suite_reports_are_name_ordered() {
        let cfg = VerifyConfig::reduced();
        let rep = run_suite("dn", &cfg).unwrap();
        let names: Vec<&str> = rep.reports.iter().map(|c| c.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        assert_eq!(rep.reports.len(), 2);
    }
}
