//! Quantization of tabulated symbols, the Poisson-type semigroup
//! `U_0(t) = Op(e^{i t mu})`, weighted square functions, and convolution
//! kernels.
//!
//! Quantization convention (symmetric DFT, `c_k = hat f(k) / N^{d/2}`):
//!
//! ```text
//!   (Op(sigma) f)(x_m) = N^{-d/2} sum_k sigma(x_m, xi_k) c_k e^{i xi_k . x_m}
//! ```
//!
//! evaluated with exact integer twiddles `e^{2 pi i (k . m) / N}`, so an
//! x-independent symbol reproduces the corresponding Fourier multiplier to
//! round-off and an xi-independent symbol reproduces pointwise
//! multiplication.
//!
//! A [`Weight`] is a finite sum `W(t, x, xi) = sum_j t^{p_j} F_j(x, xi)`;
//! the weighted semigroup applies `Op(W e^{i t mu})`.  Weights carry
//! optional square-function tags `(l_lo, l_hi)` — the small-`t` and
//! large-`t` growth exponents of `||W(t) U_0(t) f||` — used for the tail
//! corrections of
//!
//! ```text
//!   S(f)^2 = int_0^inf ||W(t) U_0(t) f||^2 dt/t ,
//! ```
//!
//! computed by trapezoid in `ln t` on a geometric grid.  Untagged weights
//! (and weights with `l_lo <= 0`) are sup-only: the square function
//! refuses them rather than returning a divergent number.

use crate::coeff::CoefficientField;
use crate::error::{CoreError, Result};
use crate::grid::{GridFunction, TorusGrid};
use crate::symbol::{check_symbol_bounds, SymbolKind, SymbolTable};
use num_complex::Complex64;

/// Applies tabulated symbols with precomputed twiddles.
pub struct Quantizer {
    grid: TorusGrid,
    tw: Vec<Complex64>,
    multi: Vec<[usize; 2]>,
}

impl Quantizer {
    pub fn new(grid: TorusGrid) -> Self {
        let n = grid.n();
        let tw: Vec<Complex64> = (0..n)
            .map(|r| Complex64::from_polar(1.0, std::f64::consts::TAU * r as f64 / n as f64))
            .collect();
        let multi = (0..grid.node_count()).map(|m| grid.multi(m)).collect();
        Self { grid, tw, multi }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    fn phase(&self, slot: usize, node: usize) -> Complex64 {
        let n = self.grid.n();
        let k = self.multi[slot];
        let m = self.multi[node];
        let idx = if self.grid.d() == 1 {
            (k[0] * m[0]) % n
        } else {
            (k[0] * m[0] + k[1] * m[1]) % n
        };
        self.tw[idx]
    }

    /// `Op(sigma) f`.
    pub fn apply(&self, sigma: &SymbolTable, f: &GridFunction) -> Result<GridFunction> {
        if sigma.grid() != &self.grid || f.grid() != &self.grid {
            return Err(CoreError::Psdo(
                "symbol table, function, and quantizer must share one grid".into(),
            ));
        }
        let m = self.grid.node_count();
        let scale = 1.0 / (m as f64).sqrt();
        let c = f.spectral();
        let mut out = vec![Complex64::default(); m];
        for k in 0..m {
            let ck = c[k];
            if ck.norm_sqr() < 1e-300 {
                continue;
            }
            let col = sigma.column(k);
            for i in 0..m {
                out[i] += col[i] * ck * self.phase(k, i);
            }
        }
        for v in &mut out {
            *v *= scale;
        }
        GridFunction::from_values(self.grid, out)
    }

    /// `Op(W(t) e^{i t mu}) f` without materializing the combined table.
    fn apply_weighted(
        &self,
        components: &[(f64, SymbolTable)],
        mu: &SymbolTable,
        t: f64,
        f: &GridFunction,
    ) -> Result<GridFunction> {
        if f.grid() != &self.grid {
            return Err(CoreError::Psdo(
                "function lives on a different grid".into(),
            ));
        }
        let m = self.grid.node_count();
        let scale = 1.0 / (m as f64).sqrt();
        let c = f.spectral();
        let tp: Vec<f64> = components.iter().map(|(p, _)| t.powf(*p)).collect();
        let mut out = vec![Complex64::default(); m];
        for k in 0..m {
            let ck = c[k];
            if ck.norm_sqr() < 1e-300 {
                continue;
            }
            let mucol = mu.column(k);
            let cols: Vec<&[Complex64]> =
                components.iter().map(|(_, tab)| tab.column(k)).collect();
            for i in 0..m {
                let mut w = Complex64::default();
                for (j, col) in cols.iter().enumerate() {
                    w += tp[j] * col[i];
                }
                let evol = (Complex64::i() * t * mucol[i]).exp();
                out[i] += w * evol * ck * self.phase(k, i);
            }
        }
        for v in &mut out {
            *v *= scale;
        }
        GridFunction::from_values(self.grid, out)
    }
}

/// The built-in weight families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightKind {
    /// `1` (sup checks of the bare semigroup; square function diverges).
    Unit,
    /// `t |xi|`.
    TXi,
    /// `(t |xi|)^{1/2}`.
    SqrtTXi,
    /// `i t (A' grad_x mu)_a` — horizontal commutator density, component `a`.
    PiPrime(usize),
    /// `div r1 + i t (r1 + r2) . grad_x mu` — vertical commutator density
    /// (sup-only).
    PiLast,
    /// `zeta_0 + t zeta_1` with
    /// `zeta_0 = i (r1 + r2) . grad_x mu + i (div A') . xi`,
    /// `zeta_1 = -(A' xi) . grad_x mu` (sup-only; untagged).
    ZetaRaw,
    /// `t^{1-s} zeta_0 |xi|^{-s} + t^{2-s} zeta_1 |xi|^{-s}`, `0 < s < 1`.
    ZetaBs { s: f64 },
    /// `t^{1/2} zeta_0 |xi|^{1/2}/(i mu) + t^{3/2} zeta_1 |xi|^{1/2}/(i mu)
    ///  + t^{1/2} zeta_1 |xi|^{1/2}/mu^2`.
    ZetaTilde,
    /// `i (1+|xi|^2)^{-(1+eps)/2} (1 + i t mu) (A' grad_x mu)_a` (sup-only).
    QWeight { axis: usize, eps: f64 },
    /// `(i t mu)^k` — vertical derivatives of the semigroup.
    TimeDeriv(u32),
}

impl WeightKind {
    pub fn label(&self) -> String {
        match self {
            WeightKind::Unit => "unit".into(),
            WeightKind::TXi => "t-xi".into(),
            WeightKind::SqrtTXi => "sqrt-t-xi".into(),
            WeightKind::PiPrime(a) => format!("pi-prime-{a}"),
            WeightKind::PiLast => "pi-last".into(),
            WeightKind::ZetaRaw => "zeta".into(),
            WeightKind::ZetaBs { s } => format!("zeta-bs-{s}"),
            WeightKind::ZetaTilde => "zeta-tilde".into(),
            WeightKind::QWeight { axis, eps } => format!("q-weight-{axis}-{eps}"),
            WeightKind::TimeDeriv(k) => format!("time-deriv-{k}"),
        }
    }
}

/// A tabulated weight `W(t, x, xi) = sum_j t^{p_j} F_j(x, xi)`.
pub struct Weight {
    kind: WeightKind,
    components: Vec<(f64, SymbolTable)>,
    tags: Option<(f64, f64)>,
}

impl Weight {
    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// Square-function growth tags `(l_lo, l_hi)`; `None` marks a sup-only
    /// weight.
    pub fn tags(&self) -> Option<(f64, f64)> {
        self.tags
    }

    pub fn sup_only(&self) -> bool {
        self.tags.is_none()
    }

    /// Evaluate `W(t, x_node, xi_slot)`.
    pub fn eval(&self, t: f64, node: usize, slot: usize) -> Complex64 {
        self.components
            .iter()
            .map(|(p, tab)| t.powf(*p) * tab.value(node, slot))
            .sum()
    }
}

/// Square-function value with its error decomposition.
#[derive(Clone, Copy, Debug)]
pub struct SquareFunction {
    /// Full estimate: quadrature plus both tail corrections.
    pub value: f64,
    /// Trapezoid-in-`ln t` part over `[t_first, t_last]`.
    pub quadrature: f64,
    pub tail_small: f64,
    pub tail_large: f64,
    pub t_first: f64,
    pub t_last: f64,
    pub points: usize,
}

/// Symbol tables and node data for one coefficient field on one grid:
/// builds weights, applies the weighted semigroup, computes square
/// functions and convolution kernels.
pub struct WeightEngine {
    grid: TorusGrid,
    quant: Quantizer,
    mu: SymbolTable,
    dmu: Vec<SymbolTable>,
    // node data
    ap_node: Vec<Vec<Vec<Complex64>>>, // [row][col][node]
    rsum_node: Vec<Vec<Complex64>>,    // [axis][node] = r1 + r2
    divap_node: Vec<Vec<Complex64>>,   // [col][node] = (div A')_col
    divr1_node: Vec<Complex64>,
    unit: std::cell::OnceCell<Weight>,
    /// Lower decay bound: `Im mu >= c_lower |xi|` over the grid.
    pub c_lower: f64,
    /// Upper symbol bound: `|mu| <= c_upper |xi|` over the grid.
    pub c_upper: f64,
}

impl WeightEngine {
    pub fn new(field: &CoefficientField, grid: TorusGrid) -> Result<Self> {
        let validation = field.validate_on(&grid, 1e-10)?;
        let bounds = check_symbol_bounds(field, grid, validation.nu1)?;
        let mu = SymbolTable::build(field, grid, SymbolKind::Mu)?;
        let d = grid.d();
        let dmu: Vec<SymbolTable> = (0..d)
            .map(|a| mu.x_derivative(a))
            .collect::<Result<_>>()?;
        let m = grid.node_count();
        let mut ap_node = vec![vec![vec![Complex64::default(); m]; d]; d];
        let mut rsum_node = vec![vec![Complex64::default(); m]; d];
        let divap = field.aprime_divergence();
        let mut divap_node = vec![vec![Complex64::default(); m]; d];
        let divr1 = field.r1_divergence();
        let mut divr1_node = vec![Complex64::default(); m];
        for i in 0..m {
            let x = grid.x(i);
            for a in 0..d {
                for c in 0..d {
                    ap_node[a][c][i] = field.aprime(a, c).eval(x);
                }
                rsum_node[a][i] = field.r1(a).eval(x) + field.r2(a).eval(x);
                divap_node[a][i] = divap[a].eval(x);
            }
            divr1_node[i] = divr1.eval(x);
        }
        Ok(Self {
            grid,
            quant: Quantizer::new(grid),
            mu,
            dmu,
            ap_node,
            rsum_node,
            divap_node,
            divr1_node,
            unit: std::cell::OnceCell::new(),
            c_lower: bounds.c_lower,
            c_upper: bounds.c_upper,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn mu(&self) -> &SymbolTable {
        &self.mu
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quant
    }

    /// `Op(mu) f` — the quantized symbol itself.
    pub fn op_mu(&self, f: &GridFunction) -> Result<GridFunction> {
        self.quant.apply(&self.mu, f)
    }

    /// Semigroup application `U_0(t) f = Op(e^{i t mu}) f`.
    pub fn u0_apply(&self, t: f64, f: &GridFunction) -> Result<GridFunction> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CoreError::Psdo(format!("semigroup time t = {t} invalid")));
        }
        let unit = self
            .unit
            .get_or_init(|| self.weight(WeightKind::Unit).expect("unit weight"));
        self.quant.apply_weighted(&unit.components, &self.mu, t, f)
    }

    /// Weighted semigroup application `Op(W(t) e^{i t mu}) f`.
    pub fn weighted_apply(
        &self,
        w: &Weight,
        t: f64,
        f: &GridFunction,
    ) -> Result<GridFunction> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CoreError::Psdo(format!("semigroup time t = {t} invalid")));
        }
        self.quant.apply_weighted(&w.components, &self.mu, t, f)
    }

    /// `(A' grad_x mu)_a` as a table.
    fn a_grad_mu(&self, a: usize) -> Vec<Complex64> {
        let d = self.grid.d();
        let m = self.grid.node_count();
        let mut vals = vec![Complex64::default(); m * m];
        for k in 0..m {
            for c in 0..d {
                let col = self.dmu[c].column(k);
                let base = k * m;
                for i in 0..m {
                    vals[base + i] += self.ap_node[a][c][i] * col[i];
                }
            }
        }
        vals
    }

    fn zeta_tables(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let d = self.grid.d();
        let m = self.grid.node_count();
        let mut z0 = vec![Complex64::default(); m * m];
        let mut z1 = vec![Complex64::default(); m * m];
        for k in 0..m {
            let xi = self.grid.xi(k);
            let base = k * m;
            for a in 0..d {
                let dcol = self.dmu[a].column(k);
                for i in 0..m {
                    z0[base + i] += Complex64::i()
                        * (self.rsum_node[a][i] * dcol[i] + self.divap_node[a][i] * xi[a]);
                    // (A' xi)_a . grad_x mu, negated
                    let mut apxi = Complex64::default();
                    for c in 0..d {
                        apxi += self.ap_node[a][c][i] * xi[c];
                    }
                    z1[base + i] -= apxi * dcol[i];
                }
            }
        }
        (z0, z1)
    }

    /// Build one of the weight families as tabulated components.
    pub fn weight(&self, kind: WeightKind) -> Result<Weight> {
        let m = self.grid.node_count();
        let d = self.grid.d();
        let table_of = |f: &dyn Fn(usize, usize) -> Complex64| -> Result<SymbolTable> {
            let mut vals = vec![Complex64::default(); m * m];
            for k in 0..m {
                for i in 0..m {
                    vals[k * m + i] = f(i, k);
                }
            }
            SymbolTable::from_values(self.grid, vals)
        };
        let (components, tags): (Vec<(f64, SymbolTable)>, Option<(f64, f64)>) = match kind {
            WeightKind::Unit => (
                vec![(0.0, table_of(&|_, _| Complex64::ONE)?)],
                Some((0.0, 0.0)),
            ),
            WeightKind::TXi => (
                vec![(
                    1.0,
                    table_of(&|_, k| Complex64::new(self.grid.xi_norm(k), 0.0))?,
                )],
                Some((1.0, 1.0)),
            ),
            WeightKind::SqrtTXi => (
                vec![(
                    0.5,
                    table_of(&|_, k| Complex64::new(self.grid.xi_norm(k).sqrt(), 0.0))?,
                )],
                Some((0.5, 0.5)),
            ),
            WeightKind::PiPrime(a) => {
                if a >= d {
                    return Err(CoreError::Psdo(format!(
                        "pi-prime component {a} out of range for d = {d}"
                    )));
                }
                let vals = self.a_grad_mu(a);
                let tab =
                    SymbolTable::from_values(self.grid, vals.iter().map(|v| Complex64::i() * v).collect())?;
                (vec![(1.0, tab)], Some((1.0, 1.0)))
            }
            WeightKind::PiLast => {
                let tab0 = table_of(&|i, _| self.divr1_node[i])?;
                let mut vals = vec![Complex64::default(); m * m];
                for k in 0..m {
                    for a in 0..d {
                        let dcol = self.dmu[a].column(k);
                        for i in 0..m {
                            vals[k * m + i] +=
                                Complex64::i() * self.rsum_node[a][i] * dcol[i];
                        }
                    }
                }
                let tab1 = SymbolTable::from_values(self.grid, vals)?;
                (vec![(0.0, tab0), (1.0, tab1)], None)
            }
            WeightKind::ZetaRaw => {
                let (z0, z1) = self.zeta_tables();
                (
                    vec![
                        (0.0, SymbolTable::from_values(self.grid, z0)?),
                        (1.0, SymbolTable::from_values(self.grid, z1)?),
                    ],
                    None,
                )
            }
            WeightKind::ZetaBs { s } => {
                if !(s > 0.0 && s < 1.0) {
                    return Err(CoreError::Psdo(format!(
                        "zeta-bs exponent s = {s} outside (0, 1)"
                    )));
                }
                let (mut z0, mut z1) = self.zeta_tables();
                for k in 0..m {
                    let xin = self.grid.xi_norm(k);
                    let w = if xin == 0.0 { 0.0 } else { xin.powf(-s) };
                    for i in 0..m {
                        z0[k * m + i] *= w;
                        z1[k * m + i] *= w;
                    }
                }
                (
                    vec![
                        (1.0 - s, SymbolTable::from_values(self.grid, z0)?),
                        (2.0 - s, SymbolTable::from_values(self.grid, z1)?),
                    ],
                    Some((1.0 - s, 2.0 - s)),
                )
            }
            WeightKind::ZetaTilde => {
                let (z0, z1) = self.zeta_tables();
                let mut w1 = vec![Complex64::default(); m * m];
                let mut w2 = vec![Complex64::default(); m * m];
                let mut w3 = vec![Complex64::default(); m * m];
                for k in 0..m {
                    let xin = self.grid.xi_norm(k);
                    if xin == 0.0 {
                        continue;
                    }
                    let sq = xin.sqrt();
                    let mucol = self.mu.column(k);
                    for i in 0..m {
                        let imu = Complex64::i() * mucol[i];
                        let mu2 = mucol[i] * mucol[i];
                        w1[k * m + i] = z0[k * m + i] * sq / imu;
                        w2[k * m + i] = z1[k * m + i] * sq / imu;
                        w3[k * m + i] = z1[k * m + i] * sq / mu2;
                    }
                }
                (
                    vec![
                        (0.5, SymbolTable::from_values(self.grid, w1)?),
                        (1.5, SymbolTable::from_values(self.grid, w2)?),
                        (0.5, SymbolTable::from_values(self.grid, w3)?),
                    ],
                    Some((0.5, 1.5)),
                )
            }
            WeightKind::QWeight { axis, eps } => {
                if axis >= d {
                    return Err(CoreError::Psdo(format!(
                        "q-weight component {axis} out of range for d = {d}"
                    )));
                }
                if !(eps > 0.0) {
                    return Err(CoreError::Psdo(format!(
                        "q-weight regularization eps = {eps} must be positive"
                    )));
                }
                let adm = self.a_grad_mu(axis);
                let mut base = vec![Complex64::default(); m * m];
                let mut evolved = vec![Complex64::default(); m * m];
                for k in 0..m {
                    let xin = self.grid.xi_norm(k);
                    let damp = (1.0 + xin * xin).powf(-(1.0 + eps) / 2.0);
                    let mucol = self.mu.column(k);
                    for i in 0..m {
                        let b = Complex64::i() * damp * adm[k * m + i];
                        base[k * m + i] = b;
                        evolved[k * m + i] = b * Complex64::i() * mucol[i];
                    }
                }
                (
                    vec![
                        (0.0, SymbolTable::from_values(self.grid, base)?),
                        (1.0, SymbolTable::from_values(self.grid, evolved)?),
                    ],
                    None,
                )
            }
            WeightKind::TimeDeriv(p) => {
                if p == 0 || p > 4 {
                    return Err(CoreError::Psdo(format!(
                        "time-derivative order {p} outside supported range 1..=4"
                    )));
                }
                let mucol_pow = self.mu.map(|_, _, v| (Complex64::i() * v).powi(p as i32));
                (
                    vec![(p as f64, mucol_pow)],
                    Some((p as f64, p as f64)),
                )
            }
        };
        Ok(Weight {
            kind,
            components,
            tags,
        })
    }

    fn guard_zero_mean(&self, f: &GridFunction) -> Result<()> {
        let c = f.spectral();
        let maxc = c.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        if c[0].norm() > 1e-12 * maxc.max(f64::MIN_POSITIVE) {
            return Err(CoreError::Psdo(
                "square function requires zero-mean data (nonzero zero mode found); \
                 the zero frequency neither decays nor is weighted"
                    .into(),
            ));
        }
        Ok(())
    }

    /// `S(f)^2 = int ||W(t) U_0(t) f||^2 dt/t` on a geometric `t`-grid
    /// from `1e-3 L / N` to `10 L` with ratio `2^{1/8}`, trapezoid in
    /// `ln t`, plus power-law (small `t`) and exponential-decay (large
    /// `t`) tail corrections.
    pub fn square_function(&self, w: &Weight, f: &GridFunction) -> Result<SquareFunction> {
        let (l_lo, _l_hi) = w.tags.ok_or_else(|| {
            CoreError::Psdo(format!(
                "weight '{}' is sup-only (untagged); its square function is not defined",
                w.kind.label()
            ))
        })?;
        if l_lo <= 0.0 {
            return Err(CoreError::Psdo(format!(
                "weight '{}' has small-t exponent {l_lo} <= 0; \
                 the square function diverges at t = 0 (sup-only use)",
                w.kind.label()
            )));
        }
        self.guard_zero_mean(f)?;
        let l = self.grid.l();
        let n = self.grid.n() as f64;
        let t_lo = 1e-3 * l / n;
        let t_hi = 10.0 * l;
        let ratio = 2f64.powf(1.0 / 8.0);
        let ts = crate::report::geometric_grid(t_lo, t_hi, ratio);
        let mut g = Vec::with_capacity(ts.len());
        for &t in &ts {
            let wf = self.weighted_apply(w, t, f)?;
            let nv = wf.norm_l2();
            g.push(nv * nv);
        }
        let dln = ratio.ln();
        let mut quad = 0.0;
        for (i, gi) in g.iter().enumerate() {
            let wt = if i == 0 || i + 1 == g.len() { 0.5 } else { 1.0 };
            quad += wt * gi * dln;
        }
        let tail_small = g[0] / (2.0 * l_lo);
        let xi_min = std::f64::consts::TAU / l;
        let t_last = *ts.last().unwrap();
        let tail_large = g[g.len() - 1] / (2.0 * self.c_lower * xi_min * t_last);
        Ok(SquareFunction {
            value: quad + tail_small + tail_large,
            quadrature: quad,
            tail_small,
            tail_large,
            t_first: ts[0],
            t_last,
            points: ts.len(),
        })
    }

    /// Convolution kernel of `Op(W(t) e^{i t mu})` frozen at node `x`:
    /// the displacement profile
    ///
    /// ```text
    ///   G(x, y, t) = (2 pi)^{-d/2} (2 pi / L)^d
    ///                sum_k W(t, x, xi_k) e^{i t mu(x, xi_k)} e^{i y . xi_k}
    /// ```
    ///
    /// returned as a grid function of `y`.  Exact identities on the
    /// lattice: `(2 pi)^{-d/2} h^d sum_y G = W(t, x, 0)` (zero-frequency
    /// mass) and `Op(W e^{i t mu}) f(x) = (2 pi)^{-d/2} h^d
    /// sum_z G(x, z, t) f(x - z)` when the symbol is frozen at `x`.
    pub fn kernel(&self, w: &Weight, x_node: usize, t: f64) -> Result<GridFunction> {
        let m = self.grid.node_count();
        if x_node >= m {
            return Err(CoreError::Psdo(format!(
                "kernel base node {x_node} out of range ({m} nodes)"
            )));
        }
        let d = self.grid.d() as i32;
        let l = self.grid.l();
        let two_pi = std::f64::consts::TAU;
        let front = two_pi.powf(-(d as f64) / 2.0) * (two_pi / l).powi(d);
        let mut coeffs = vec![Complex64::default(); m];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let wv = w.eval(t, x_node, k);
            let evol = (Complex64::i() * t * self.mu.value(x_node, k)).exp();
            *ck = wv * evol;
        }
        // sum_k c_k e^{i y xi_k} = N^{d/2} * inverse symmetric DFT
        let scale = front * (m as f64).sqrt();
        let gf = GridFunction::from_spectral(self.grid, coeffs)?;
        Ok(gf.scale(Complex64::new(scale, 0.0)))
    }
}

/// Smooth cutoff: `1` for `t <= 1`, `0` for `t >= 2`, with
/// `chi(3/2) = 1/2`.
pub fn chi(t: f64) -> f64 {
    fn s(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    let a = s(2.0 - t);
    let b = s(t - 1.0);
    if a + b == 0.0 {
        if t <= 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        a / (a + b)
    }
}
