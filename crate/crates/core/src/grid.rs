//! Periodic torus grid, frequency lattice, and grid functions.
//!
//! Nodes: `x_m = m h`, `h = L/N`, per axis, d = 1 or 2 (square torus).
//! Frequency lattice: `xi_k = 2 pi k / L` with integer `k` in
//! `{-N/2, ..., N/2 - 1}` per axis (N even).
//!
//! Conventions (fixed across the crate):
//! * inner product `<f, g> = h^d sum_m f(x_m) conj(g(x_m))`,
//! * spectral coefficients use the symmetric `1/sqrt(N^d)` DFT
//!   normalization, so Parseval holds exactly in the discrete inner
//!   product: `h^d sum_k |c_k|^2 = h^d sum_m |f_m|^2`,
//! * Sobolev norms: `||f||_{H^s}^2 = h^d sum_k (1+|xi_k|^2)^s |c_k|^2`,
//!   homogeneous variant uses `|xi_k|^{2s}` and excludes the zero mode.

use crate::error::{CoreError, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::sync::OnceLock;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Square periodic grid in d = 1 or 2 horizontal dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGrid {
    d: usize,
    n: usize,
    l: f64,
}

impl TorusGrid {
    /// `d` in {1, 2}, `n` even and >= 8 (per axis), period `l > 0`.
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(CoreError::Grid(format!("dimension d = {d} not in {{1, 2}}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(CoreError::Grid(format!(
                "lattice size N = {n} must be even and >= 8"
            )));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(CoreError::Grid(format!("period L = {l} must be positive")));
        }
        Ok(Self { d, n, l })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Torus period per axis.
    pub fn l(&self) -> f64 {
        self.l
    }

    /// Mesh width `h = L/N`.
    pub fn h(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Total number of nodes `N^d`.
    pub fn node_count(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Grid refined by an integer factor (same period).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.d, self.n * factor, self.l)
    }

    /// Multi-index of a flat node/slot index (row-major; axis 0 slowest).
    pub fn multi(&self, flat: usize) -> [usize; 2] {
        match self.d {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    /// Flat index of a multi-index.
    pub fn flat(&self, m: [usize; 2]) -> usize {
        match self.d {
            1 => m[0],
            _ => m[0] * self.n + m[1],
        }
    }

    /// Coordinates of node `flat` (second entry 0 when d = 1).
    pub fn x(&self, flat: usize) -> [f64; 2] {
        let m = self.multi(flat);
        let h = self.h();
        [m[0] as f64 * h, if self.d == 2 { m[1] as f64 * h } else { 0.0 }]
    }

    /// Signed integer frequency of DFT slot `j` on one axis:
    /// `k = j` for `j < N/2`, else `j - N` (so `k` covers `[-N/2, N/2)`).
    pub fn freq_int(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Integer frequency vector of a flat spectral slot.
    pub fn mode(&self, flat: usize) -> [i64; 2] {
        let m = self.multi(flat);
        [
            self.freq_int(m[0]),
            if self.d == 2 { self.freq_int(m[1]) } else { 0 },
        ]
    }

    /// Continuous frequency `xi = 2 pi k / L` of a flat spectral slot.
    pub fn xi(&self, flat: usize) -> [f64; 2] {
        let k = self.mode(flat);
        let c = 2.0 * std::f64::consts::PI / self.l;
        [c * k[0] as f64, c * k[1] as f64]
    }

    /// Euclidean norm `|xi|` of a flat spectral slot.
    pub fn xi_norm(&self, flat: usize) -> f64 {
        let xi = self.xi(flat);
        xi[0].hypot(xi[1])
    }

    /// Flat spectral slot holding integer mode `k`, if representable.
    pub fn slot_of_mode(&self, k: [i64; 2]) -> Option<usize> {
        let half = self.n as i64 / 2;
        let ok = |ki: i64| (-half..half).contains(&ki);
        if !ok(k[0]) || (self.d == 2 && !ok(k[1])) {
            return None;
        }
        let wrap = |ki: i64| ki.rem_euclid(self.n as i64) as usize;
        Some(match self.d {
            1 => wrap(k[0]),
            _ => wrap(k[0]) * self.n + wrap(k[1]),
        })
    }
}

/// Complex function sampled on a [`TorusGrid`], with lazily cached spectral
/// coefficients.  Values are immutable after construction; all operations
/// return new functions.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<Complex64>,
    spectral: OnceLock<Vec<Complex64>>,
}

fn fft_in_place(grid: &TorusGrid, data: &mut [Complex64], forward: bool) {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fft = if forward {
            planner.plan_fft_forward(grid.n())
        } else {
            planner.plan_fft_inverse(grid.n())
        };
        match grid.d() {
            1 => fft.process(data),
            _ => {
                let n = grid.n();
                // rows (contiguous)
                for row in data.chunks_exact_mut(n) {
                    fft.process(row);
                }
                // columns (gather/scatter)
                let mut col = vec![Complex64::default(); n];
                for j in 0..n {
                    for i in 0..n {
                        col[i] = data[i * n + j];
                    }
                    fft.process(&mut col);
                    for i in 0..n {
                        data[i * n + j] = col[i];
                    }
                }
            }
        }
    });
    let scale = 1.0 / (grid.node_count() as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

impl GridFunction {
    pub fn from_values(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(CoreError::Grid(format!(
                "value vector has length {}, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self {
            grid,
            values,
            spectral: OnceLock::new(),
        })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.node_count()).map(|m| f(grid.x(m))).collect();
        Self {
            grid,
            values,
            spectral: OnceLock::new(),
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, Complex64::default())
    }

    pub fn constant(grid: TorusGrid, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.node_count()],
            spectral: OnceLock::new(),
        }
    }

    /// Pure lattice mode `e^{i xi_k . x}`.
    pub fn fourier_mode(grid: TorusGrid, k: [i64; 2]) -> Self {
        let c = 2.0 * std::f64::consts::PI / grid.l();
        Self::from_fn(grid, |x| {
            (Complex64::i() * c * (k[0] as f64 * x[0] + k[1] as f64 * x[1])).exp()
        })
    }

    /// Build from spectral coefficients in DFT slot order (symmetric
    /// normalization).
    pub fn from_spectral(grid: TorusGrid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.node_count() {
            return Err(CoreError::Grid(format!(
                "coefficient vector has length {}, lattice has {} slots",
                coeffs.len(),
                grid.node_count()
            )));
        }
        let stored = coeffs.clone();
        fft_in_place(&grid, &mut coeffs, false);
        let f = Self {
            grid,
            values: coeffs,
            spectral: OnceLock::new(),
        };
        let _ = f.spectral.set(stored);
        Ok(f)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Spectral coefficients (computed once, cached).
    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let mut data = self.values.clone();
            fft_in_place(&self.grid, &mut data, true);
            data
        })
    }

    /// Mean value `N^{-d} sum_m f(x_m)`.
    pub fn mean(&self) -> Complex64 {
        let s: Complex64 = self.values.iter().sum();
        s / self.grid.node_count() as f64
    }

    /// Discrete inner product `h^d sum f conj(g)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.grid, other.grid, "inner product on mismatched grids");
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.grid.h().powi(self.grid.d() as i32)
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.h().powi(self.grid.d() as i32)).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_zero_mode(&self, what: &str) -> Result<()> {
        let c0 = self.spectral()[0];
        let scale: f64 = self.spectral().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if c0.norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(CoreError::Grid(format!(
                "{what} undefined for data with nonzero mean: the zero mode carries |c_0| = {:.3e} (relative {:.3e})",
                c0.norm(),
                c0.norm() / scale.max(f64::MIN_POSITIVE)
            )));
        }
        Ok(())
    }

    /// Sobolev norm of order `s` in [-2, 2]; `homogeneous` uses
    /// `|xi|^{2s}` weights and excludes the zero mode (for `s < 0` the
    /// data must have zero mean, otherwise the norm is undefined).
    pub fn sobolev_norm(&self, s: f64, homogeneous: bool) -> Result<f64> {
        if !(-2.0..=2.0).contains(&s) {
            return Err(CoreError::Grid(format!(
                "sobolev order s = {s} outside supported range [-2, 2]"
            )));
        }
        if homogeneous && s < 0.0 {
            self.check_zero_mode("homogeneous norm with s < 0")?;
        }
        let hd = self.grid.h().powi(self.grid.d() as i32);
        let mut acc = 0.0;
        for (j, c) in self.spectral().iter().enumerate() {
            let xi2 = {
                let xi = self.grid.xi(j);
                xi[0] * xi[0] + xi[1] * xi[1]
            };
            let w = if homogeneous {
                if xi2 == 0.0 {
                    continue;
                }
                xi2.powf(s)
            } else {
                (1.0 + xi2).powf(s)
            };
            acc += w * c.norm_sqr();
        }
        Ok((acc * hd).sqrt())
    }

    /// Apply a scalar spectral multiplier `m(xi)` (given per slot).
    pub fn multiplier(&self, m: impl Fn(usize) -> Complex64) -> Self {
        let coeffs: Vec<Complex64> = self
            .spectral()
            .iter()
            .enumerate()
            .map(|(j, c)| c * m(j))
            .collect();
        Self::from_spectral(self.grid, coeffs).expect("multiplier preserves length")
    }

    /// Fractional Laplacian multipliers: `(I - Delta)^{s/2}` or, when
    /// `homogeneous`, `(-Delta)^{s/2}` (zero mode annihilated for `s > 0`,
    /// rejected for `s < 0` unless the data has zero mean).
    pub fn fractional_multiplier(&self, s: f64, homogeneous: bool) -> Result<Self> {
        if !(-2.0..=2.0).contains(&s) {
            return Err(CoreError::Grid(format!(
                "fractional order s = {s} outside supported range [-2, 2]"
            )));
        }
        if homogeneous && s < 0.0 {
            self.check_zero_mode("(-Delta)^{s/2} with s < 0")?;
        }
        let grid = self.grid;
        Ok(self.multiplier(|j| {
            let xi = grid.xi(j);
            let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
            if homogeneous {
                if xi2 == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::new(xi2.powf(s / 2.0), 0.0)
                }
            } else {
                Complex64::new((1.0 + xi2).powf(s / 2.0), 0.0)
            }
        }))
    }

    /// Spectral partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < self.grid.d(), "derivative axis out of range");
        let grid = self.grid;
        self.multiplier(|j| Complex64::i() * grid.xi(j)[axis])
    }

    /// Spectral gradient (one component per horizontal axis).
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.grid.d()).map(|a| self.derivative(a)).collect()
    }

    /// Pointwise product with another grid function.
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "pointwise product on mismatched grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Self {
            grid: self.grid,
            values,
            spectral: OnceLock::new(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            spectral: OnceLock::new(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "sum on mismatched grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            grid: self.grid,
            values,
            spectral: OnceLock::new(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "difference on mismatched grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            grid: self.grid,
            values,
            spectral: OnceLock::new(),
        }
    }

    /// Embed into a finer grid with the same period by spectral injection
    /// (the continuum function is preserved exactly for band-limited data).
    pub fn embed(&self, fine: TorusGrid) -> Result<Self> {
        if fine.d() != self.grid.d() || fine.l() != self.grid.l() || fine.n() < self.grid.n() {
            return Err(CoreError::Grid(
                "embedding target must share d and L and be at least as fine".into(),
            ));
        }
        let scale = ((fine.node_count() as f64) / (self.grid.node_count() as f64)).sqrt();
        let mut coeffs = vec![Complex64::default(); fine.node_count()];
        for (j, c) in self.spectral().iter().enumerate() {
            let k = self.grid.mode(j);
            let slot = fine
                .slot_of_mode(k)
                .expect("coarse mode representable on fine lattice");
            coeffs[slot] = c * scale;
        }
        Self::from_spectral(fine, coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TAU: f64 = std::f64::consts::TAU;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n, TAU).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::new(3, 16, TAU).is_err());
        assert!(TorusGrid::new(1, 7, TAU).is_err());
        assert!(TorusGrid::new(1, 6, TAU).is_err());
        assert!(TorusGrid::new(1, 16, -1.0).is_err());
    }

    #[test]
    fn lattice_layout_covers_symmetric_range() {
        let g = grid1(8);
        let ks: Vec<i64> = (0..8).map(|j| g.freq_int(j)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        let mut sorted = ks.clone();
        sorted.sort();
        assert_eq!(sorted, (-4..4).collect::<Vec<_>>());
        assert_eq!(g.slot_of_mode([-4, 0]), Some(4));
        assert_eq!(g.slot_of_mode([4, 0]), None);
    }

    #[test]
    fn constant_function_spectrum_and_norm() {
        // f = 1 on N = 8, L = 2 pi: single slot k = 0 with value sqrt(8)
        // (symmetric DFT normalization) and ||f||_{L^2} = sqrt(2 pi).
        let g = grid1(8);
        let f = GridFunction::constant(g, Complex64::new(1.0, 0.0));
        let c = f.spectral();
        assert_relative_eq!(c[0].re, 8.0_f64.sqrt(), max_relative = 1e-14);
        for j in 1..8 {
            assert!(c[j].norm() < 1e-14);
        }
        assert_relative_eq!(f.norm_l2(), TAU.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn parseval_holds_exactly() {
        let g = grid1(32);
        let f = GridFunction::from_fn(g, |x| {
            Complex64::new((3.0 * x[0]).sin() + 0.3, 0.5 * (x[0]).cos())
        });
        let phys: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
        let spec: f64 = f.spectral().iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(phys, spec, max_relative = 1e-13);
    }

    #[test]
    fn roundtrip_from_spectral() {
        let g = grid1(16);
        let f = GridFunction::from_fn(g, |x| Complex64::new(x[0].sin(), (2.0 * x[0]).cos()));
        let back = GridFunction::from_spectral(g, f.spectral().to_vec()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn sobolev_norm_single_modes() {
        // ||e^{ix}||_{H^1} = sqrt(2) sqrt(2 pi) on L = 2 pi.
        let g = grid1(64);
        let f = GridFunction::fourier_mode(g, [1, 0]);
        assert_relative_eq!(
            f.sobolev_norm(1.0, false).unwrap(),
            2.0_f64.sqrt() * TAU.sqrt(),
            max_relative = 1e-13
        );
        // homogeneous H^{1/2} of e^{i4x}: |xi|^{1/2} = 2 -> 2 sqrt(2 pi).
        let f4 = GridFunction::fourier_mode(g, [4, 0]);
        assert_relative_eq!(
            f4.sobolev_norm(0.5, true).unwrap(),
            2.0 * TAU.sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn homogeneous_negative_order_rejects_nonzero_mean() {
        let g = grid1(16);
        let f = GridFunction::constant(g, Complex64::new(1.0, 0.0));
        let err = f.sobolev_norm(-0.5, true).unwrap_err();
        assert!(err.to_string().contains("zero mode"), "got: {err}");
        assert!(f.fractional_multiplier(-0.5, true).is_err());
        // zero-mean data is fine
        let f = GridFunction::fourier_mode(g, [2, 0]);
        assert!(f.sobolev_norm(-0.5, true).is_ok());
    }

    #[test]
    fn sobolev_order_range_enforced() {
        let g = grid1(16);
        let f = GridFunction::fourier_mode(g, [1, 0]);
        assert!(f.sobolev_norm(2.5, false).is_err());
        assert!(f.sobolev_norm(-2.5, false).is_err());
    }

    #[test]
    fn derivative_of_mode() {
        let g = grid1(32);
        let f = GridFunction::fourier_mode(g, [3, 0]);
        let df = f.derivative(0);
        for (v, x) in df.values().iter().zip((0..32).map(|m| g.x(m))) {
            let expect = Complex64::i() * 3.0 * (Complex64::i() * 3.0 * x[0]).exp();
            assert!((v - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn embedding_preserves_function_and_norms() {
        let g = grid1(16);
        let fine = grid1(32);
        let f = GridFunction::from_fn(g, |x| {
            Complex64::new((2.0 * x[0]).cos(), (3.0 * x[0]).sin())
        });
        let fe = f.embed(fine).unwrap();
        // values at shared nodes agree
        for m in 0..16 {
            let a = f.values()[m];
            let b = fe.values()[2 * m];
            assert!((a - b).norm() < 1e-12, "node {m}: {a} vs {b}");
        }
        assert_relative_eq!(f.norm_l2(), fe.norm_l2(), max_relative = 1e-13);
        assert_relative_eq!(
            f.sobolev_norm(1.0, false).unwrap(),
            fe.sobolev_norm(1.0, false).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn two_dimensional_fft_parseval_and_modes() {
        let g = TorusGrid::new(2, 16, TAU).unwrap();
        let f = GridFunction::fourier_mode(g, [2, -3]);
        let c = f.spectral();
        let slot = g.slot_of_mode([2, -3]).unwrap();
        assert_relative_eq!(c[slot].re, 16.0, max_relative = 1e-12);
        let energy: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(energy, c[slot].norm_sqr(), max_relative = 1e-12);
        // H^1 norm: (1 + 4 + 9)^{1/2} * L^{d/2} with L = 2 pi
        assert_relative_eq!(
            f.sobolev_norm(1.0, false).unwrap(),
            14.0_f64.sqrt() * TAU,
            max_relative = 1e-12
        );
    }
}
