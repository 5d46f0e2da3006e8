//! Dense matrix exponential (Padé-13 with scaling and squaring) and an
//! eigenvalue helper, both over `Complex64` row-major matrices.
//!
//! The degree-13 diagonal Padé approximant is accurate to machine precision
//! for `||A||_1 <= theta_13`; larger inputs are halved `s` times first and
//! the result squared `s` times.

use crate::error::{CoreError, Result};
use faer::complex_native::c64;
use faer::prelude::*;
use num_complex::Complex64;

type FMat = faer::Mat<c64>;

const THETA13: f64 = 5.371920351148152;
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub(crate) fn rows_to_mat(rows: &[Vec<Complex64>]) -> Result<FMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CoreError::Solver("matrix must be square".into()));
    }
    Ok(FMat::from_fn(n, n, |i, j| {
        c64::new(rows[i][j].re, rows[i][j].im)
    }))
}

pub(crate) fn mat_to_rows(m: &FMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let v = m.read(i, j);
                    Complex64::new(v.re, v.im)
                })
                .collect()
        })
        .collect()
}

fn one_norm(m: &FMat) -> f64 {
    let (r, c) = (m.nrows(), m.ncols());
    (0..c)
        .map(|j| (0..r).map(|i| m.read(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `out = sum_k coeff_k * mats_k + c0 * I` (all square, same size).
fn lincomb(n: usize, terms: &[(f64, &FMat)], c0: f64) -> FMat {
    FMat::from_fn(n, n, |i, j| {
        let mut acc = if i == j {
            c64::new(c0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        };
        for (c, m) in terms {
            acc = c64::new(acc.re + c * m.read(i, j).re, acc.im + c * m.read(i, j).im);
        }
        acc
    })
}

/// Matrix exponential of a row-major complex matrix.
pub fn expm(rows: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let a0 = rows_to_mat(rows)?;
    let n = a0.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let norm = one_norm(&a0);
    if !norm.is_finite() {
        return Err(CoreError::Solver(
            "matrix exponential of non-finite matrix".into(),
        ));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(s as i32);
    let a = FMat::from_fn(n, n, |i, j| {
        let v = a0.read(i, j);
        c64::new(v.re * scale, v.im * scale)
    });
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = PADE13;
    let w1 = lincomb(n, &[(b[13], &a6), (b[11], &a4), (b[9], &a2)], 0.0);
    let w2 = lincomb(n, &[(b[7], &a6), (b[5], &a4), (b[3], &a2)], b[1]);
    let z1 = lincomb(n, &[(b[12], &a6), (b[10], &a4), (b[8], &a2)], 0.0);
    let z2 = lincomb(n, &[(b[6], &a6), (b[4], &a4), (b[2], &a2)], b[0]);
    let a6w1 = &a6 * &w1;
    let w = lincomb(n, &[(1.0, &a6w1), (1.0, &w2)], 0.0);
    let u = &a * &w; // odd part
    let a6z1 = &a6 * &z1;
    let v = lincomb(n, &[(1.0, &a6z1), (1.0, &z2)], 0.0); // even part
    let vmu = lincomb(n, &[(1.0, &v), (-1.0, &u)], 0.0);
    let vpu = lincomb(n, &[(1.0, &v), (1.0, &u)], 0.0);
    let lu = vmu.partial_piv_lu();
    let mut r = lu.solve(&vpu);
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(mat_to_rows(&r))
}

/// Eigenvalues of a row-major complex matrix (unsorted output of the
/// underlying QR algorithm, then sorted by real part, then imaginary).
pub fn eigenvalues(rows: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
    let m = rows_to_mat(rows)?;
    let eig: Vec<c64> = m.eigenvalues();
    let mut out: Vec<Complex64> = eig.iter().map(|v| Complex64::new(v.re, v.im)).collect();
    out.sort_by(|a, b| {
        a.re.total_cmp(&b.re)
            .then_with(|| a.im.total_cmp(&b.im))
    });
    Ok(out)
}

/// `y = M x` for a row-major matrix.
pub fn matvec_rows(rows: &[Vec<Complex64>], x: &[Complex64]) -> Vec<Complex64> {
    rows.iter()
        .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Frobenius norm of a row-major matrix.
pub fn frobenius(rows: &[Vec<Complex64>]) -> f64 {
    rows.iter()
        .flat_map(|r| r.iter())
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `A B` for row-major matrices.
pub fn matmul_rows(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let m = if n > 0 { b[0].len() } else { 0 };
    let k = b.len();
    let mut out = vec![vec![Complex64::default(); m]; n];
    for i in 0..n {
        for p in 0..k {
            let aip = a[i][p];
            if aip == Complex64::default() {
                continue;
            }
            for j in 0..m {
                out[i][j] += aip * b[p][j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_of_diagonal_matrix() {
        let lams = [c(0.3, -1.2), c(-2.0, 0.7), c(4.9, 3.3)];
        let rows: Vec<Vec<Complex64>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { lams[i] } else { Complex64::default() })
                    .collect()
            })
            .collect();
        let e = expm(&rows).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j {
                    lams[i].exp()
                } else {
                    Complex64::default()
                };
                assert!(
                    (e[i][j] - expect).norm() < 1e-12 * lams[i].exp().norm().max(1.0),
                    "({i},{j}): {} vs {expect}",
                    e[i][j]
                );
            }
        }
    }

    #[test]
    fn exponential_of_nilpotent_matrix() {
        // exp([[0,1],[0,0]]) = [[1,1],[0,1]]
        let rows = vec![
            vec![Complex64::default(), Complex64::ONE],
            vec![Complex64::default(), Complex64::default()],
        ];
        let e = expm(&rows).unwrap();
        let expect = [[1.0, 1.0], [0.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((e[i][j] - expect[i][j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn exponential_inverse_identity() {
        // expm(A) expm(-A) = I, with ||A|| above the scaling threshold
        let n = 5;
        let rows: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let s = (i * n + j) as f64;
                        c(2.0 * (1.3 * s).sin(), 1.5 * (0.7 * s).cos())
                    })
                    .collect()
            })
            .collect();
        let neg: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|v| -v).collect())
            .collect();
        let e = expm(&rows).unwrap();
        let em = expm(&neg).unwrap();
        let prod = matmul_rows(&e, &em);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (prod[i][j] - expect).norm() < 1e-9,
                    "({i},{j}): {}",
                    prod[i][j]
                );
            }
        }
    }

    #[test]
    fn exponential_matches_taylor_series_for_small_matrix() {
        let rows = vec![
            vec![c(0.1, 0.2), c(-0.3, 0.05), c(0.02, -0.1)],
            vec![c(0.0, -0.25), c(0.15, 0.0), c(0.3, 0.1)],
            vec![c(-0.12, 0.0), c(0.08, -0.2), c(-0.05, 0.3)],
        ];
        let e = expm(&rows).unwrap();
        // Taylor: sum A^k / k!
        let n = 3;
        let mut term: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Complex64::ONE } else { Complex64::default() })
                    .collect()
            })
            .collect();
        let mut acc = term.clone();
        for k in 1..30 {
            term = matmul_rows(&term, &rows);
            let fk = 1.0 / (1..=k).map(|x| x as f64).product::<f64>();
            for i in 0..n {
                for j in 0..n {
                    acc[i][j] += term[i][j] * fk;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!(
                    (e[i][j] - acc[i][j]).norm() < 1e-13,
                    "({i},{j}): {} vs {}",
                    e[i][j],
                    acc[i][j]
                );
            }
        }
    }

    #[test]
    fn eigenvalues_of_companion_matrix() {
        // companion of z^2 - 3z + 2: eigenvalues 1 and 2
        let rows = vec![
            vec![c(3.0, 0.0), c(-2.0, 0.0)],
            vec![Complex64::ONE, Complex64::default()],
        ];
        let e = eigenvalues(&rows).unwrap();
        assert!((e[0] - c(1.0, 0.0)).norm() < 1e-10);
        assert!((e[1] - c(2.0, 0.0)).norm() < 1e-10);
    }
}
