//! Seeded random boundary-data ensembles.
//!
//! Members are band-limited (integer modes with `|k|_inf <= band`,
//! excluding 0), zero-mean, and normalized to unit inhomogeneous H^1 norm.
//! All spectral draws depend only on `(seed, index, band)` — never on the
//! grid — so the same member realized on a finer grid (same period) is the
//! identical band-limited function; refinement studies compare like with
//! like.

use crate::error::{CoreError, Result};
use crate::grid::{GridFunction, TorusGrid};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Golden-ratio hash step for deriving per-member seeds.
const SEED_STEP: u64 = 0x9E37_79B9_7F4A_7C15;

/// Default band for a grid: `N/8` (kept fixed at the *base* N across a
/// refinement pair by passing it explicitly).
pub fn default_band(grid: &TorusGrid) -> usize {
    (grid.n() / 8).max(1)
}

/// Deterministic member `index` of the ensemble with master seed `seed`.
pub fn band_limited(
    grid: TorusGrid,
    seed: u64,
    index: usize,
    band: usize,
) -> Result<GridFunction> {
    if band == 0 || 2 * band >= grid.n() {
        return Err(CoreError::Config(format!(
            "ensemble band {band} not representable on N = {} lattice",
            grid.n()
        )));
    }
    let member_seed = seed ^ (index as u64).wrapping_mul(SEED_STEP).wrapping_add(SEED_STEP);
    let mut rng = ChaCha8Rng::seed_from_u64(member_seed);
    let b = band as i64;
    let mut coeffs = vec![Complex64::default(); grid.node_count()];
    // fixed draw order: lexicographic over the band box, independent of N
    for k0 in -b..=b {
        let k1_range: Vec<i64> = if grid.d() == 2 { (-b..=b).collect() } else { vec![0] };
        for k1 in k1_range {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if k0 == 0 && k1 == 0 {
                continue; // zero mean (the draw is still consumed)
            }
            let slot = grid
                .slot_of_mode([k0, k1])
                .expect("band checked against lattice");
            coeffs[slot] = Complex64::new(re, im);
        }
    }
    let f = GridFunction::from_spectral(grid, coeffs)?;
    let h1 = f.sobolev_norm(1.0, false)?;
    if h1 == 0.0 {
        return Err(CoreError::Verify("degenerate ensemble member".into()));
    }
    Ok(f.scale(Complex64::new(1.0 / h1, 0.0)))
}

/// First `count` members of the ensemble.
pub fn members(
    grid: TorusGrid,
    seed: u64,
    count: usize,
    band: usize,
) -> Result<Vec<GridFunction>> {
    (0..count)
        .map(|i| band_limited(grid, seed, i, band))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TAU: f64 = std::f64::consts::TAU;

    #[test]
    fn members_are_deterministic_zero_mean_unit_h1() {
        let g = TorusGrid::new(1, 64, TAU).unwrap();
        let a = band_limited(g, 7, 3, 8).unwrap();
        let b = band_limited(g, 7, 3, 8).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(x, y);
        }
        assert!(a.mean().norm() < 1e-13);
        assert_relative_eq!(a.sobolev_norm(1.0, false).unwrap(), 1.0, max_relative = 1e-12);
        let c = band_limited(g, 7, 4, 8).unwrap();
        assert!(a.sub(&c).norm_l2() > 1e-3);
    }

    #[test]
    fn refinement_realizes_the_same_function() {
        let coarse = TorusGrid::new(1, 64, TAU).unwrap();
        let fine = TorusGrid::new(1, 128, TAU).unwrap();
        let a = band_limited(coarse, 42, 0, 8).unwrap();
        let b = band_limited(fine, 42, 0, 8).unwrap();
        let ae = a.embed(fine).unwrap();
        for (x, y) in ae.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn band_is_respected() {
        let g = TorusGrid::new(2, 32, TAU).unwrap();
        let f = band_limited(g, 1, 0, 4).unwrap();
        for (j, c) in f.spectral().iter().enumerate() {
            let k = g.mode(j);
            if k[0].abs() > 4 || k[1].abs() > 4 {
                assert!(c.norm() < 1e-14, "leaked outside band at {k:?}");
            }
        }
    }

    #[test]
    fn band_guard() {
        let g = TorusGrid::new(1, 16, TAU).unwrap();
        assert!(band_limited(g, 1, 0, 8).is_err());
        assert!(band_limited(g, 1, 0, 7).is_ok());
    }
}
