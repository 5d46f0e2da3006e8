//! Coefficient matrices `A(x)` with trigonometric-polynomial entries.
//!
//! `A` is an `(d+1) x (d+1)` complex matrix field on the torus, independent
//! of the vertical variable, in block form
//!
//! ```text
//!         [ A'   r1 ]        A' : d x d     r1 : last column
//!   A  =  [          ]
//!         [ r2^T  b ]        r2 : last row   b : scalar corner
//! ```
//!
//! Entries are closed under sums, products, conjugation, and
//! differentiation (exact product-to-sum rewriting), which keeps every
//! derived field — adjoints, midpoint samples, divergence terms, and the
//! closure matrices of the symbol map — inside the same class, with no
//! numerical differentiation anywhere.
//!
//! Accessors use the natural index convention `0..d` for horizontal axes
//! and `d` for the vertical slot.

use crate::error::{CoreError, Result};
use crate::grid::TorusGrid;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::collections::BTreeMap;

const TAU: f64 = std::f64::consts::TAU;

/// Trigonometric flavour of one term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TrigKind {
    Sin,
    Cos,
}

/// One term `amp * trig((2 pi / L) k . x)`.
#[derive(Clone, Copy, Debug)]
pub struct TrigTerm {
    pub kind: TrigKind,
    pub mode: [i64; 2],
    pub amp: Complex64,
}

/// Complex trigonometric polynomial on the torus:
/// `c0 + sum_t amp_t trig_t((2 pi / L) k_t . x)`.
///
/// Terms are kept canonical: the zero mode is folded into `c0`, the
/// leading nonzero component of every mode is positive (using
/// `sin(-y) = -sin(y)`, `cos(-y) = cos(y)`), and duplicate `(kind, mode)`
/// pairs are merged.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    d: usize,
    l: f64,
    c0: Complex64,
    terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn zero(d: usize, l: f64) -> Self {
        Self {
            d,
            l,
            c0: Complex64::default(),
            terms: Vec::new(),
        }
    }

    pub fn constant(d: usize, l: f64, c: Complex64) -> Self {
        Self {
            d,
            l,
            c0: c,
            terms: Vec::new(),
        }
    }

    /// Builder: add `amp * trig((2 pi / L) mode . x)`.
    pub fn with_term(mut self, kind: TrigKind, mode: [i64; 2], amp: Complex64) -> Self {
        self.push(kind, mode, amp);
        self.merge();
        self
    }

    fn push(&mut self, kind: TrigKind, mut mode: [i64; 2], mut amp: Complex64) {
        if self.d == 1 {
            mode[1] = 0;
        }
        if mode == [0, 0] {
            match kind {
                TrigKind::Cos => self.c0 += amp,
                TrigKind::Sin => {}
            }
            return;
        }
        let lead = if mode[0] != 0 { mode[0] } else { mode[1] };
        if lead < 0 {
            mode = [-mode[0], -mode[1]];
            if kind == TrigKind::Sin {
                amp = -amp;
            }
        }
        if amp != Complex64::default() {
            self.terms.push(TrigTerm { kind, mode, amp });
        }
    }

    fn merge(&mut self) {
        let mut map: BTreeMap<(TrigKind, [i64; 2]), Complex64> = BTreeMap::new();
        for t in &self.terms {
            *map.entry((t.kind, t.mode)).or_default() += t.amp;
        }
        self.terms = map
            .into_iter()
            .filter(|(_, amp)| *amp != Complex64::default())
            .map(|((kind, mode), amp)| TrigTerm { kind, mode, amp })
            .collect();
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn c0(&self) -> Complex64 {
        self.c0
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        let base = TAU / self.l;
        let mut acc = self.c0;
        for t in &self.terms {
            let theta = base * (t.mode[0] as f64 * x[0] + t.mode[1] as f64 * x[1]);
            let trig = match t.kind {
                TrigKind::Sin => theta.sin(),
                TrigKind::Cos => theta.cos(),
            };
            acc += t.amp * trig;
        }
        acc
    }

    /// Exact partial derivative along `axis`.
    pub fn deriv(&self, axis: usize) -> Self {
        assert!(axis < self.d, "derivative axis out of range");
        let base = TAU / self.l;
        let mut out = Self::zero(self.d, self.l);
        for t in &self.terms {
            let factor = base * t.mode[axis] as f64;
            match t.kind {
                // d/dx sin(k.x) = k_a cos(k.x)
                TrigKind::Sin => out.push(TrigKind::Cos, t.mode, t.amp * factor),
                // d/dx cos(k.x) = -k_a sin(k.x)
                TrigKind::Cos => out.push(TrigKind::Sin, t.mode, -t.amp * factor),
            }
        }
        out.merge();
        out
    }

    /// Complex conjugate (trig factors are real).
    pub fn conj(&self) -> Self {
        Self {
            d: self.d,
            l: self.l,
            c0: self.c0.conj(),
            terms: self
                .terms
                .iter()
                .map(|t| TrigTerm {
                    kind: t.kind,
                    mode: t.mode,
                    amp: t.amp.conj(),
                })
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.c0 *= c;
        for t in &mut out.terms {
            t.amp *= c;
        }
        out.merge();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.d, self.l), (other.d, other.l), "mismatched polynomials");
        let mut out = self.clone();
        out.c0 += other.c0;
        out.terms.extend_from_slice(&other.terms);
        out.merge();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Exact product via product-to-sum identities.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!((self.d, self.l), (other.d, other.l), "mismatched polynomials");
        let mut out = Self::zero(self.d, self.l);
        out.c0 = self.c0 * other.c0;
        for t in &other.terms {
            out.push(t.kind, t.mode, t.amp * self.c0);
        }
        for s in &self.terms {
            out.push(s.kind, s.mode, s.amp * other.c0);
        }
        for s in &self.terms {
            for t in &other.terms {
                let sum = [s.mode[0] + t.mode[0], s.mode[1] + t.mode[1]];
                let diff = [s.mode[0] - t.mode[0], s.mode[1] - t.mode[1]];
                let half = s.amp * t.amp * 0.5;
                match (s.kind, t.kind) {
                    // cos a cos b = (cos(a-b) + cos(a+b)) / 2
                    (TrigKind::Cos, TrigKind::Cos) => {
                        out.push(TrigKind::Cos, diff, half);
                        out.push(TrigKind::Cos, sum, half);
                    }
                    // sin a sin b = (cos(a-b) - cos(a+b)) / 2
                    (TrigKind::Sin, TrigKind::Sin) => {
                        out.push(TrigKind::Cos, diff, half);
                        out.push(TrigKind::Cos, sum, -half);
                    }
                    // sin a cos b = (sin(a+b) + sin(a-b)) / 2
                    (TrigKind::Sin, TrigKind::Cos) => {
                        out.push(TrigKind::Sin, sum, half);
                        out.push(TrigKind::Sin, diff, half);
                    }
                    // cos a sin b = (sin(a+b) - sin(a-b)) / 2
                    (TrigKind::Cos, TrigKind::Sin) => {
                        out.push(TrigKind::Sin, sum, half);
                        out.push(TrigKind::Sin, diff, -half);
                    }
                }
            }
        }
        out.merge();
        out
    }

    /// Rigorous sup bound `|c0| + sum |amp|`.
    pub fn sup_bound(&self) -> f64 {
        self.c0.norm() + self.terms.iter().map(|t| t.amp.norm()).sum::<f64>()
    }
}

/// Pointwise evaluation of all blocks at one point.
#[derive(Clone, Copy, Debug)]
pub struct BlockEval {
    pub aprime: [[Complex64; 2]; 2],
    pub r1: [Complex64; 2],
    pub r2: [Complex64; 2],
    pub b: Complex64,
}

/// Result of an ellipticity / regularity scan.
#[derive(Clone, Copy, Debug)]
pub struct Validation {
    /// Smallest eigenvalue of the Hermitian part over all samples
    /// (the sharp constant in `Re <A eta, eta> >= nu1 |eta|^2`).
    pub nu1: f64,
    /// Largest operator norm over all samples (the sharp constant in
    /// `|<A eta, zeta>| <= nu2 |eta| |zeta|`).
    pub nu2: f64,
    /// Sampled sup of `sum_ij |grad a_ij|`.
    pub lip: f64,
    /// Number of sample points scanned.
    pub samples: usize,
}

/// Matrix field `A(x)` with trig-polynomial entries, stored row-major as
/// `(d+1)^2` polynomials.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    d: usize,
    l: f64,
    entries: Vec<TrigPoly>,
}

impl CoefficientField {
    pub fn from_entries(d: usize, l: f64, entries: Vec<TrigPoly>) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(CoreError::Config(format!("dimension d = {d} not in {{1, 2}}")));
        }
        let m = (d + 1) * (d + 1);
        if entries.len() != m {
            return Err(CoreError::Config(format!(
                "need {m} entries for d = {d}, got {}",
                entries.len()
            )));
        }
        for e in &entries {
            if e.d() != d || e.l() != l {
                return Err(CoreError::Config(
                    "entry polynomial has mismatched dimension or period".into(),
                ));
            }
        }
        Ok(Self { d, l, entries })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Entry `a_{ij}` with `i, j` in `0..=d` (index `d` = vertical slot).
    pub fn entry(&self, i: usize, j: usize) -> &TrigPoly {
        &self.entries[i * (self.d + 1) + j]
    }

    /// Corner coefficient `b`.
    pub fn b(&self) -> &TrigPoly {
        self.entry(self.d, self.d)
    }

    /// Last-column entry `(r1)_i`.
    pub fn r1(&self, i: usize) -> &TrigPoly {
        self.entry(i, self.d)
    }

    /// Last-row entry `(r2)_j`.
    pub fn r2(&self, j: usize) -> &TrigPoly {
        self.entry(self.d, j)
    }

    /// Horizontal block entry `a'_{ij}`, `i, j < d`.
    pub fn aprime(&self, i: usize, j: usize) -> &TrigPoly {
        self.entry(i, j)
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(TrigPoly::is_constant)
    }

    /// Adjoint field `A*(x) = A(x)^H`.
    pub fn adjoint(&self) -> Self {
        let n = self.d + 1;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.entry(j, i).conj());
            }
        }
        Self {
            d: self.d,
            l: self.l,
            entries,
        }
    }

    /// Evaluate all blocks at a point (unused slots stay zero when d = 1).
    pub fn blocks_at(&self, x: [f64; 2]) -> BlockEval {
        let mut e = BlockEval {
            aprime: [[Complex64::default(); 2]; 2],
            r1: [Complex64::default(); 2],
            r2: [Complex64::default(); 2],
            b: self.b().eval(x),
        };
        for i in 0..self.d {
            for j in 0..self.d {
                e.aprime[i][j] = self.aprime(i, j).eval(x);
            }
            e.r1[i] = self.r1(i).eval(x);
            e.r2[i] = self.r2(i).eval(x);
        }
        e
    }

    /// Full matrix at a point (size `(d+1) x (d+1)` in the top-left corner).
    pub fn matrix_at(&self, x: [f64; 2]) -> [[Complex64; 3]; 3] {
        let mut m = [[Complex64::default(); 3]; 3];
        for i in 0..=self.d {
            for j in 0..=self.d {
                m[i][j] = self.entry(i, j).eval(x);
            }
        }
        m
    }

    /// Horizontal divergence of the last column, `div r1 = sum_i d_i (r1)_i`.
    pub fn r1_divergence(&self) -> TrigPoly {
        let mut acc = TrigPoly::zero(self.d, self.l);
        for i in 0..self.d {
            acc = acc.add(&self.r1(i).deriv(i));
        }
        acc
    }

    /// Column divergence of the horizontal block:
    /// `(div A')_j = sum_i d_i a'_{ij}`.
    pub fn aprime_divergence(&self) -> Vec<TrigPoly> {
        (0..self.d)
            .map(|j| {
                let mut acc = TrigPoly::zero(self.d, self.l);
                for i in 0..self.d {
                    acc = acc.add(&self.aprime(i, j).deriv(i));
                }
                acc
            })
            .collect()
    }

    /// The two derived matrix fields under which the symbol map reproduces
    /// `lambda` and `q`: returns `(M, N)` with
    ///
    /// * `M' = |b|^2 A' - conj(b) r2 (x) r1`, last column `conj(b) r1`,
    ///   last row `-conj(b) r2`, corner `conj(b)`;
    /// * `N' = A'`, last column `-r1`, last row `-r2`, corner `b`.
    pub fn closure_matrices(&self) -> (Self, Self) {
        let d = self.d;
        let n = d + 1;
        let bb = self.b().mul(&self.b().conj()); // |b|^2
        let bc = self.b().conj();

        let mut m_entries = vec![TrigPoly::zero(d, self.l); n * n];
        let mut n_entries = vec![TrigPoly::zero(d, self.l); n * n];
        for i in 0..d {
            for j in 0..d {
                m_entries[i * n + j] = bb
                    .mul(self.aprime(i, j))
                    .sub(&bc.mul(self.r2(i)).mul(self.r1(j)));
                n_entries[i * n + j] = self.aprime(i, j).clone();
            }
            m_entries[i * n + d] = bc.mul(self.r1(i));
            m_entries[d * n + i] = bc.mul(self.r2(i)).scale(-Complex64::ONE);
            n_entries[i * n + d] = self.r1(i).scale(-Complex64::ONE);
            n_entries[d * n + i] = self.r2(i).scale(-Complex64::ONE);
        }
        m_entries[d * n + d] = bc;
        n_entries[d * n + d] = self.b().clone();

        (
            Self {
                d,
                l: self.l,
                entries: m_entries,
            },
            Self {
                d,
                l: self.l,
                entries: n_entries,
            },
        )
    }

    /// Scan ellipticity and regularity constants on a `samples_per_axis`
    /// grid (covering node midpoints when it is twice the solve grid).
    /// Fails with a witness vector if `nu1 < min_nu1` anywhere.
    pub fn validate(&self, samples_per_axis: usize, min_nu1: f64) -> Result<Validation> {
        let n = samples_per_axis.max(4);
        let h = self.l / n as f64;
        let count = n.pow(self.d as u32);
        let dim = self.d + 1;

        let grads: Vec<Vec<TrigPoly>> = self
            .entries
            .iter()
            .map(|e| (0..self.d).map(|a| e.deriv(a)).collect())
            .collect();

        let mut nu1 = f64::INFINITY;
        let mut nu2: f64 = 0.0;
        let mut lip: f64 = 0.0;
        let mut worst = (0usize, f64::INFINITY, [Complex64::default(); 3]);

        for flat in 0..count {
            let x = match self.d {
                1 => [flat as f64 * h, 0.0],
                _ => [(flat / n) as f64 * h, (flat % n) as f64 * h],
            };
            let m = self.matrix_at(x);

            // Hermitian part H = (M + M^H)/2; min eigenvalue + witness.
            let mut herm = [[Complex64::default(); 3]; 3];
            for i in 0..dim {
                for j in 0..dim {
                    herm[i][j] = 0.5 * (m[i][j] + m[j][i].conj());
                }
            }
            let (lo, vec) = hermitian_min_eig(&herm, dim);
            if lo < worst.1 {
                worst = (flat, lo, vec);
            }
            nu1 = nu1.min(lo);

            // Operator norm: sqrt of the largest eigenvalue of M^H M.
            let mut gram = [[Complex64::default(); 3]; 3];
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = Complex64::default();
                    for k in 0..dim {
                        s += m[k][i].conj() * m[k][j];
                    }
                    gram[i][j] = s;
                }
            }
            let hi = hermitian_max_eig(&gram, dim);
            nu2 = nu2.max(hi.max(0.0).sqrt());

            let mut l1 = 0.0;
            for g in &grads {
                let mut sq = 0.0;
                for ga in g {
                    sq += ga.eval(x).norm_sqr();
                }
                l1 += sq.sqrt();
            }
            lip = lip.max(l1);
        }

        if nu1 < min_nu1 {
            return Err(CoreError::Ellipticity {
                node: worst.0,
                value: worst.1,
                witness: worst.2[..dim].to_vec(),
            });
        }
        Ok(Validation {
            nu1,
            nu2,
            lip,
            samples: count,
        })
    }

    /// Validate on the nodes and midpoints of a computational grid
    /// (samples at spacing `h/2`).
    pub fn validate_on(&self, grid: &TorusGrid, min_nu1: f64) -> Result<Validation> {
        if grid.d() != self.d || grid.l() != self.l {
            return Err(CoreError::Config(
                "validation grid does not match coefficient field".into(),
            ));
        }
        self.validate(2 * grid.n(), min_nu1)
    }
}

/// Eigenvalues of a Hermitian `dim x dim` (dim <= 3) matrix, ascending.
fn hermitian_eigs(h: &[[Complex64; 3]; 3], dim: usize) -> Vec<f64> {
    let m = faer::Mat::<faer::complex_native::c64>::from_fn(dim, dim, |i, j| {
        faer::complex_native::c64::new(h[i][j].re, h[i][j].im)
    });
    let eig: Vec<faer::complex_native::c64> = m.eigenvalues();
    let mut eigs: Vec<f64> = eig.into_iter().map(|z| z.re).collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Smallest eigenvalue of a Hermitian matrix together with a unit witness
/// vector (null vector of `H - lambda I` via exact cross products).
fn hermitian_min_eig(h: &[[Complex64; 3]; 3], dim: usize) -> (f64, [Complex64; 3]) {
    let lo = hermitian_eigs(h, dim)[0];
    let mut shifted = *h;
    for (i, row) in shifted.iter_mut().enumerate().take(dim) {
        row[i] -= lo;
    }
    let witness = null_vector(&shifted, dim);
    (lo, witness)
}

fn hermitian_max_eig(h: &[[Complex64; 3]; 3], dim: usize) -> f64 {
    *hermitian_eigs(h, dim).last().unwrap()
}

/// Unit-norm approximate null vector of a singular `dim x dim` matrix.
fn null_vector(m: &[[Complex64; 3]; 3], dim: usize) -> [Complex64; 3] {
    let mut best = [Complex64::ONE, Complex64::default(), Complex64::default()];
    if dim == 2 {
        // rows are proportional; null vector of row with largest norm
        let cands = [
            [m[0][1], -m[0][0], Complex64::default()],
            [m[1][1], -m[1][0], Complex64::default()],
        ];
        let mut bn = 0.0;
        for c in cands {
            let n = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
            if n > bn {
                bn = n;
                best = c;
            }
        }
        if bn == 0.0 {
            return [Complex64::ONE, Complex64::default(), Complex64::default()];
        }
    } else {
        // cross products of row pairs lie in the null space (bilinear dot)
        let cross = |a: [Complex64; 3], b: [Complex64; 3]| {
            [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]
        };
        let rows = [m[0], m[1], m[2]];
        let mut bn = 0.0;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let c = cross(rows[i], rows[j]);
            let n = (c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()).sqrt();
            if n > bn {
                bn = n;
                best = c;
            }
        }
        if bn == 0.0 {
            return [Complex64::ONE, Complex64::default(), Complex64::default()];
        }
    }
    let n = (best[0].norm_sqr() + best[1].norm_sqr() + best[2].norm_sqr()).sqrt();
    [best[0] / n, best[1] / n, best[2] / n]
}

/// Builtin coefficient families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// The identity matrix (`-div A grad` is the Laplacian).
    Identity,
    /// Constant matrix with mild non-symmetry (the crate's running example
    /// in d = 1).
    Constant,
    /// Block-diagonal: `r1 = r2 = 0`, complex `b`, variable `A'`.
    Block,
    /// Pointwise Hermitian field (`A(x)^H = A(x)`), variable entries.
    Hermitian,
    /// Seeded random Lipschitz perturbation of the constant family, with
    /// an amplitude budget keeping `nu1 >= 0.2`.
    Lipschitz { seed: u64 },
}

impl Family {
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        match name {
            "identity" => Ok(Self::Identity),
            "constant" => Ok(Self::Constant),
            "block" => Ok(Self::Block),
            "hermitian" => Ok(Self::Hermitian),
            "lipschitz" => Ok(Self::Lipschitz { seed }),
            other => Err(CoreError::Config(format!(
                "unknown coefficient family `{other}` (expected identity | constant | block | hermitian | lipschitz)"
            ))),
        }
    }
}

/// Construct a builtin family on the torus of period `l`.  Every family is
/// validated at construction time (`nu1 >= 0.2` on a 256-sample scan per
/// axis).
pub fn builtin(d: usize, family: Family, l: f64) -> Result<CoefficientField> {
    let c = |v: f64| TrigPoly::constant(d, l, Complex64::new(v, 0.0));
    let cz = |re: f64, im: f64| TrigPoly::constant(d, l, Complex64::new(re, im));
    let field = match (d, family) {
        (_, Family::Identity) => {
            let n = d + 1;
            let entries = (0..n * n)
                .map(|s| c(if s / n == s % n { 1.0 } else { 0.0 }))
                .collect();
            CoefficientField::from_entries(d, l, entries)?
        }
        (1, Family::Constant) => CoefficientField::from_entries(
            d,
            l,
            vec![c(2.0), c(0.5), c(0.3), c(1.0)],
        )?,
        (2, Family::Constant) => CoefficientField::from_entries(
            d,
            l,
            vec![
                c(2.0), c(0.3), c(0.4),
                c(0.2), c(1.5), c(0.1),
                c(0.2), c(-0.3), c(1.2),
            ],
        )?,
        (1, Family::Block) => CoefficientField::from_entries(
            d,
            l,
            vec![
                c(1.5).with_term(TrigKind::Cos, [1, 0], Complex64::new(0.25, 0.1)),
                c(0.0),
                c(0.0),
                cz(1.0, 0.6),
            ],
        )?,
        (2, Family::Block) => CoefficientField::from_entries(
            d,
            l,
            vec![
                c(1.8).with_term(TrigKind::Cos, [1, 0], Complex64::new(0.2, 0.1)),
                cz(0.2, 0.1),
                c(0.0),
                cz(0.1, -0.1),
                c(1.4).with_term(TrigKind::Sin, [0, 1], Complex64::new(0.15, 0.0)),
                c(0.0),
                c(0.0),
                c(0.0),
                cz(1.0, 0.5),
            ],
        )?,
        (1, Family::Hermitian) => {
            let r1 = cz(0.3, 0.2).with_term(TrigKind::Cos, [1, 0], Complex64::new(0.1, 0.0));
            CoefficientField::from_entries(
                d,
                l,
                vec![
                    c(2.0).with_term(TrigKind::Sin, [1, 0], Complex64::new(0.3, 0.0)),
                    r1.clone(),
                    r1.conj(),
                    c(1.0).with_term(TrigKind::Cos, [1, 0], Complex64::new(0.2, 0.0)),
                ],
            )?
        }
        (2, Family::Hermitian) => {
            let a12 = cz(0.1, 0.1).with_term(TrigKind::Cos, [0, 1], Complex64::new(0.05, 0.0));
            let r1a = cz(0.2, 0.1);
            let r1b = c(0.1).with_term(TrigKind::Sin, [1, 0], Complex64::new(0.05, 0.0));
            CoefficientField::from_entries(
                d,
                l,
                vec![
                    c(2.0).with_term(TrigKind::Sin, [1, 0], Complex64::new(0.2, 0.0)),
                    a12.clone(),
                    r1a.clone(),
                    a12.conj(),
                    c(1.5).with_term(TrigKind::Cos, [1, 0], Complex64::new(0.2, 0.0)),
                    r1b.clone(),
                    r1a.conj(),
                    r1b.conj(),
                    c(1.0).with_term(TrigKind::Sin, [0, 1], Complex64::new(0.1, 0.0)),
                ],
            )?
        }
        (_, Family::Lipschitz { seed }) => {
            let base = builtin(d, Family::Constant, l)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = d + 1;
            // draw raw terms in a fixed order, then rescale to the budget
            let mut raw: Vec<Vec<TrigTerm>> = Vec::with_capacity(n * n);
            let mut total = 0.0;
            for _ in 0..n * n {
                let mut terms = Vec::with_capacity(2);
                for _ in 0..2 {
                    let kind = if rng.gen::<bool>() { TrigKind::Sin } else { TrigKind::Cos };
                    let mut mode = [0i64; 2];
                    loop {
                        mode[0] = rng.gen_range(-2..=2);
                        mode[1] = if d == 2 { rng.gen_range(-2..=2) } else { 0 };
                        if mode != [0, 0] {
                            break;
                        }
                    }
                    let re: f64 = rng.sample(rand_distr::StandardNormal);
                    let im: f64 = rng.sample(rand_distr::StandardNormal);
                    let amp = Complex64::new(re, im);
                    total += amp.norm();
                    terms.push(TrigTerm { kind, mode, amp });
                }
                raw.push(terms);
            }
            // nu1(base) >= 0.85 (d=1) / 0.75 (d=2); a total amplitude of
            // 0.5 in the entrywise-l1 norm bounds the perturbation's
            // operator norm by 0.5, keeping nu1 >= 0.2 with margin.
            let budget = 0.5;
            let scale = if total > 0.0 { budget / total } else { 0.0 };
            let entries = base
                .entries
                .iter()
                .zip(raw)
                .map(|(e, terms)| {
                    let mut p = e.clone();
                    for t in terms {
                        p = p.with_term(t.kind, t.mode, t.amp * scale);
                    }
                    p
                })
                .collect();
            CoefficientField::from_entries(d, l, entries)?
        }
        _ => unreachable!("dimension validated by from_entries"),
    };
    field.validate(if d == 1 { 256 } else { 64 }, 0.2)?;
    Ok(field)
}

// ---------------------------------------------------------------------------
// TOML configuration
// ---------------------------------------------------------------------------

/// Real or `[re, im]` complex scalar in configuration files.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    fn to_complex(self) -> Complex64 {
        match self {
            Self::Real(x) => Complex64::new(x, 0.0),
            Self::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// One trigonometric term in a configured entry.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// "sin" or "cos".
    #[serde(rename = "fn")]
    pub function: String,
    /// Integer mode vector, length d.
    pub mode: Vec<i64>,
    /// Amplitude (real or `[re, im]`).
    pub amp: ComplexSpec,
}

/// One matrix entry: constant part plus trigonometric terms.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub c0: Option<ComplexSpec>,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

/// `[coefficients]` section: dimension and entries keyed `a11`, `a12`, ...
/// (1-based row/column, index `d+1` = vertical slot).  Missing entries are
/// zero.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffConfig {
    pub d: usize,
    #[serde(default)]
    pub entries: BTreeMap<String, EntrySpec>,
}

#[derive(Debug, Deserialize)]
struct CoeffConfigFile {
    coefficients: CoeffConfig,
}

impl CoeffConfig {
    /// Build the coefficient field on a torus of period `l`.
    pub fn build(&self, l: f64) -> Result<CoefficientField> {
        let d = self.d;
        if !(d == 1 || d == 2) {
            return Err(CoreError::Config(format!(
                "coefficients.d = {d} not in {{1, 2}}"
            )));
        }
        let n = d + 1;
        let mut entries = vec![TrigPoly::zero(d, l); n * n];
        for (key, spec) in &self.entries {
            let (i, j) = parse_entry_key(key, d)?;
            let mut poly = TrigPoly::constant(
                d,
                l,
                spec.c0.map(ComplexSpec::to_complex).unwrap_or_default(),
            );
            for (t_idx, term) in spec.terms.iter().enumerate() {
                let kind = match term.function.as_str() {
                    "sin" => TrigKind::Sin,
                    "cos" => TrigKind::Cos,
                    other => {
                        return Err(CoreError::Config(format!(
                            "coefficients.entries.{key}.terms[{t_idx}]: fn = `{other}` (expected sin | cos)"
                        )))
                    }
                };
                if term.mode.len() != d {
                    return Err(CoreError::Config(format!(
                        "coefficients.entries.{key}.terms[{t_idx}]: mode has length {}, expected {d}",
                        term.mode.len()
                    )));
                }
                let mode = [term.mode[0], if d == 2 { term.mode[1] } else { 0 }];
                poly = poly.with_term(kind, mode, term.amp.to_complex());
            }
            entries[i * n + j] = poly;
        }
        CoefficientField::from_entries(d, l, entries)
    }
}

fn parse_entry_key(key: &str, d: usize) -> Result<(usize, usize)> {
    let digits: Vec<u32> = key
        .strip_prefix('a')
        .map(|s| s.chars().filter_map(|c| c.to_digit(10)).collect())
        .unwrap_or_default();
    if !key.starts_with('a') || digits.len() != key.len() - 1 || digits.len() != 2 {
        return Err(CoreError::Config(format!(
            "coefficients.entries.{key}: keys must look like a11 ... a{n}{n} (1-based)",
            n = d + 1
        )));
    }
    let (i, j) = (digits[0] as usize, digits[1] as usize);
    if i == 0 || j == 0 || i > d + 1 || j > d + 1 {
        return Err(CoreError::Config(format!(
            "coefficients.entries.{key}: index out of range for d = {d} (valid: 1..={})",
            d + 1
        )));
    }
    Ok((i - 1, j - 1))
}

/// Parse a standalone TOML document with a `[coefficients]` section.  Parse
/// errors carry the line and column reported by the TOML parser.
pub fn from_toml_str(text: &str, l: f64) -> Result<CoefficientField> {
    let file: CoeffConfigFile =
        toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
    file.coefficients.build(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_to_sum_is_exact() {
        let l = TAU;
        let p = TrigPoly::constant(1, l, c(0.3, 0.0))
            .with_term(TrigKind::Cos, [1, 0], c(1.0, 0.5))
            .with_term(TrigKind::Sin, [2, 0], c(-0.4, 0.1));
        let q = TrigPoly::constant(1, l, c(-0.1, 0.2))
            .with_term(TrigKind::Sin, [1, 0], c(0.7, 0.0))
            .with_term(TrigKind::Cos, [3, 0], c(0.2, -0.3));
        let prod = p.mul(&q);
        for m in 0..17 {
            let x = [0.37 + m as f64 * 0.41, 0.0];
            let expect = p.eval(x) * q.eval(x);
            assert!((prod.eval(x) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_and_conjugate_are_exact() {
        let l = TAU;
        let p = TrigPoly::zero(2, l)
            .with_term(TrigKind::Cos, [2, -1], c(0.5, 0.2))
            .with_term(TrigKind::Sin, [0, 3], c(-0.1, 0.4));
        let dp = p.deriv(1);
        let eps = 1e-6;
        for m in 0..9 {
            let x = [0.2 + 0.5 * m as f64, 0.9 - 0.3 * m as f64];
            let num = (p.eval([x[0], x[1] + eps]) - p.eval([x[0], x[1] - eps])) / (2.0 * eps);
            assert!((dp.eval(x) - num).norm() < 1e-7);
            assert!((p.conj().eval(x) - p.eval(x).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn sign_canonicalization() {
        let l = TAU;
        // sin(-k.x) = -sin(k.x), cos(-k.x) = cos(k.x)
        let p = TrigPoly::zero(1, l).with_term(TrigKind::Sin, [-2, 0], c(1.0, 0.0));
        let q = TrigPoly::zero(1, l).with_term(TrigKind::Sin, [2, 0], c(-1.0, 0.0));
        for m in 0..7 {
            let x = [0.1 + m as f64, 0.0];
            assert!((p.eval(x) - q.eval(x)).norm() < 1e-15);
        }
        assert_eq!(p.terms().len(), 1);
        assert!(p.terms()[0].mode[0] > 0);
    }

    #[test]
    fn running_example_ellipticity_constants() {
        // A = [[2, 0.5], [0.3, 1]]: Hermitian part [[2, 0.4], [0.4, 1]],
        // nu1 = (3 - sqrt(1.64)) / 2.
        let a = builtin(1, Family::Constant, TAU).unwrap();
        let v = a.validate(32, 0.0).unwrap();
        assert_relative_eq!(v.nu1, (3.0 - 1.64_f64.sqrt()) / 2.0, max_relative = 1e-12);
        assert!(v.nu2 >= v.nu1);
        assert_relative_eq!(v.lip, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn ellipticity_failure_carries_witness() {
        let l = TAU;
        // b(x) = 0.2 + cos(x) dips negative
        let f = CoefficientField::from_entries(
            1,
            l,
            vec![
                TrigPoly::constant(1, l, c(2.0, 0.0)),
                TrigPoly::zero(1, l),
                TrigPoly::zero(1, l),
                TrigPoly::constant(1, l, c(0.2, 0.0))
                    .with_term(TrigKind::Cos, [1, 0], c(1.0, 0.0)),
            ],
        )
        .unwrap();
        match f.validate(64, 0.2) {
            Err(CoreError::Ellipticity { value, witness, .. }) => {
                assert!(value < 0.0);
                // witness should point along the vertical slot
                assert!(witness[1].norm() > 0.99);
            }
            other => panic!("expected ellipticity error, got {other:?}"),
        }
    }

    #[test]
    fn adjoint_is_pointwise_conjugate_transpose() {
        let a = builtin(2, Family::Hermitian, TAU).unwrap();
        let astar = a.adjoint();
        let x = [0.7, 2.1];
        let m = a.matrix_at(x);
        let ms = astar.matrix_at(x);
        for i in 0..3 {
            for j in 0..3 {
                assert!((ms[i][j] - m[j][i].conj()).norm() < 1e-14);
            }
        }
        // hermitian family: A* = A
        for i in 0..3 {
            for j in 0..3 {
                assert!((ms[i][j] - m[i][j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn builtin_families_are_elliptic() {
        for d in [1, 2] {
            for fam in [
                Family::Constant,
                Family::Block,
                Family::Hermitian,
                Family::Lipschitz { seed: 7 },
                Family::Lipschitz { seed: 1234 },
            ] {
                let f = builtin(d, fam, TAU).unwrap();
                let v = f.validate(64, 0.2).unwrap();
                assert!(v.nu1 >= 0.2, "{fam:?} d={d}: nu1 = {}", v.nu1);
                assert!(v.nu2.is_finite() && v.nu2 > 0.0);
            }
        }
    }

    #[test]
    fn lipschitz_family_is_deterministic() {
        let a = builtin(1, Family::Lipschitz { seed: 42 }, TAU).unwrap();
        let b = builtin(1, Family::Lipschitz { seed: 42 }, TAU).unwrap();
        let x = [1.234, 0.0];
        let (ma, mb) = (a.matrix_at(x), b.matrix_at(x));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(ma[i][j], mb[i][j]);
            }
        }
        let c = builtin(1, Family::Lipschitz { seed: 43 }, TAU).unwrap();
        let mc = c.matrix_at(x);
        assert!((ma[0][0] - mc[0][0]).norm() > 1e-9);
    }

    #[test]
    fn block_family_has_zero_coupling() {
        for d in [1, 2] {
            let f = builtin(d, Family::Block, TAU).unwrap();
            for i in 0..d {
                assert!(f.r1(i).sup_bound() == 0.0);
                assert!(f.r2(i).sup_bound() == 0.0);
            }
        }
    }

    #[test]
    fn divergence_helpers_match_manual_derivatives() {
        let f = builtin(2, Family::Hermitian, TAU).unwrap();
        let div_r1 = f.r1_divergence();
        let manual = f.r1(0).deriv(0).add(&f.r1(1).deriv(1));
        let x = [0.31, 1.7];
        assert!((div_r1.eval(x) - manual.eval(x)).norm() < 1e-14);
        let div_ap = f.aprime_divergence();
        for j in 0..2 {
            let m = f.aprime(0, j).deriv(0).add(&f.aprime(1, j).deriv(1));
            assert!((div_ap[j].eval(x) - m.eval(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn lip_estimate_of_single_cosine() {
        let l = TAU;
        let mut entries = vec![TrigPoly::zero(1, l); 4];
        entries[0] = TrigPoly::constant(1, l, c(2.0, 0.0))
            .with_term(TrigKind::Cos, [1, 0], c(0.1, 0.0));
        entries[3] = TrigPoly::constant(1, l, c(1.0, 0.0));
        let f = CoefficientField::from_entries(1, l, entries).unwrap();
        let v = f.validate(512, 0.0).unwrap();
        // sup |d/dx 0.1 cos x| = 0.1
        assert_relative_eq!(v.lip, 0.1, max_relative = 1e-3);
    }

    #[test]
    fn config_roundtrip_and_errors() {
        let text = r#"
[coefficients]
d = 1

[coefficients.entries.a11]
c0 = 2.0
terms = [{ fn = "cos", mode = [1], amp = [0.1, 0.05] }]

[coefficients.entries.a12]
c0 = [0.5, 0.0]

[coefficients.entries.a21]
c0 = 0.3

[coefficients.entries.a22]
c0 = 1.0
"#;
        let f = from_toml_str(text, TAU).unwrap();
        let x = [0.9, 0.0];
        let expect = c(2.0, 0.0) + c(0.1, 0.05) * (0.9_f64).cos();
        assert!((f.entry(0, 0).eval(x) - expect).norm() < 1e-14);
        assert!((f.entry(0, 1).eval(x) - c(0.5, 0.0)).norm() < 1e-14);

        // key out of range
        let bad = "[coefficients]\nd = 1\n[coefficients.entries.a13]\nc0 = 1.0\n";
        let err = from_toml_str(bad, TAU).unwrap_err().to_string();
        assert!(err.contains("a13") && err.contains("out of range"), "{err}");

        // malformed TOML carries a line reference
        let syn = "[coefficients]\nd = 1\nentries = {{\n";
        let err = from_toml_str(syn, TAU).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");

        // bad trig name mentions the term
        let badfn = r#"
[coefficients]
d = 1
[coefficients.entries.a11]
terms = [{ fn = "tan", mode = [1], amp = 0.1 }]
"#;
        let err = from_toml_str(badfn, TAU).unwrap_err().to_string();
        assert!(err.contains("tan"), "{err}");
    }

    #[test]
    fn closure_matrices_running_example() {
        // with b = 1: M' = A' - r2 r1 = 2 - 0.15, corners/rows per formula
        let a = builtin(1, Family::Constant, TAU).unwrap();
        let (m, n) = a.closure_matrices();
        let x = [0.0, 0.0];
        assert!((m.entry(0, 0).eval(x) - c(2.0 - 0.15, 0.0)).norm() < 1e-14);
        assert!((m.entry(0, 1).eval(x) - c(0.5, 0.0)).norm() < 1e-14); // b~ r1
        assert!((m.entry(1, 0).eval(x) - c(-0.3, 0.0)).norm() < 1e-14); // -b~ r2
        assert!((m.entry(1, 1).eval(x) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((n.entry(0, 0).eval(x) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((n.entry(0, 1).eval(x) - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((n.entry(1, 0).eval(x) - c(-0.3, 0.0)).norm() < 1e-14);
        assert!((n.entry(1, 1).eval(x) - c(1.0, 0.0)).norm() < 1e-14);
    }
}
