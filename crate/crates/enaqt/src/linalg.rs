//! Dense complex linear algebra kernel.
//!
//! Small self-contained routines sized for the matrices this engine
//! actually meets (dimension ≤ 25): cyclic-Jacobi Hermitian
//! eigendecomposition, PSD square root, scaling-and-squaring Padé matrix
//! exponential, Kronecker products and LU solves with partial pivoting.
//! All functions are pure and safe to call concurrently.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;
pub type CVector = Array1<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// n×n identity.
pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

/// Largest entry magnitude (∞-like scale used by tolerances).
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation("matrix contains NaN or Inf".into()))
    }
}

pub fn ensure_square(a: &CMatrix) -> Result<()> {
    if a.nrows() == a.ncols() && a.nrows() >= 1 {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

/// Checks max |a − a†| ≤ tol, reporting the worst offending entry.
pub fn ensure_hermitian(a: &CMatrix, tol: f64) -> Result<()> {
    ensure_square(a)?;
    let mut worst = 0.0;
    let mut at = (0, 0);
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            let d = (a[[i, j]] - a[[j, i]].conj()).norm();
            if d > worst {
                worst = d;
                at = (i, j);
            }
        }
    }
    if worst <= tol {
        Ok(())
    } else {
        Err(Error::NotHermitian {
            deviation: worst,
            row: at.0,
            col: at.1,
            tol,
        })
    }
}

const HERMITIAN_TOL: f64 = 1e-10;

/// Result of [`eigh`]: eigenvalues ascending, eigenvectors as the columns
/// of a unitary matrix, so that A = V·diag(λ)·V†.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: CMatrix,
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Adequate and robust at the dimensions used here; reconstruction
/// V·diag(λ)·V† matches the input to ~1e-13 relative in practice.
pub fn eigh(a: &CMatrix) -> Result<EigenDecomposition> {
    ensure_finite(a)?;
    ensure_hermitian(a, HERMITIAN_TOL)?;
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = identity(n);

    let scale = max_abs(a).max(1e-300);
    let stop = 1e-30 * scale * scale; // on the summed squared off-diagonal
    let max_sweeps = 100;

    let mut sweeps = 0;
    loop {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]].norm_sqr();
            }
        }
        if off <= stop {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence {
                sweeps,
                off: off.sqrt(),
            });
        }
        sweeps += 1;

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let abs_apq = apq.norm();
                if abs_apq <= 1e-300 {
                    continue;
                }
                let phase = apq / abs_apq; // e^{iφ}
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                // Rotation angle zeroing m[p][q]; τ convention keeps |t| ≤ 1.
                let tau = (app - aqq) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = Complex64::new(s, 0.0) * phase; // s·e^{iφ}
                let spc = sp.conj();

                // Columns: col_p ← c·col_p + s·e^{−iφ}·col_q,
                //          col_q ← −s·e^{iφ}·col_p + c·col_q.
                for r in 0..n {
                    let mrp = m[[r, p]];
                    let mrq = m[[r, q]];
                    m[[r, p]] = c * mrp + spc * mrq;
                    m[[r, q]] = -sp * mrp + c * mrq;
                }
                // Rows (conjugate transform).
                for r in 0..n {
                    let mpr = m[[p, r]];
                    let mqr = m[[q, r]];
                    m[[p, r]] = c * mpr + sp * mqr;
                    m[[q, r]] = -spc * mpr + c * mqr;
                }
                // Pin what is exact by symmetry.
                m[[p, q]] = ZERO;
                m[[q, p]] = ZERO;
                m[[p, p]] = Complex64::new(m[[p, p]].re, 0.0);
                m[[q, q]] = Complex64::new(m[[q, q]].re, 0.0);

                for r in 0..n {
                    let vrp = v[[r, p]];
                    let vrq = v[[r, q]];
                    v[[r, p]] = c * vrp + spc * vrq;
                    v[[r, q]] = -sp * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].re.partial_cmp(&m[[j, j]].re).unwrap());
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| m[[i, i]].re));
    let mut eigenvectors = Array2::from_elem((n, n), ZERO);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[[r, dst]] = v[[r, src]];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Tiny negative eigenvalues tolerated (and clamped) by [`sqrtm_psd`];
/// round-off on physical states routinely produces them.
pub const PSD_CLAMP: f64 = 1e-10;

/// Principal square root of a Hermitian PSD matrix via its eigenbasis.
/// Eigenvalues in [−1e-10, 0) are clamped to zero; anything lower is an
/// error carrying the offending eigenvalue.
pub fn sqrtm_psd(a: &CMatrix) -> Result<CMatrix> {
    let dec = eigh(a)?;
    let n = a.nrows();
    let min = dec.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_CLAMP {
        return Err(Error::NotPsd { eigenvalue: min });
    }
    let mut out = Array2::from_elem((n, n), ZERO);
    for k in 0..n {
        let lam = dec.eigenvalues[k].max(0.0).sqrt();
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] +=
                    Complex64::new(lam, 0.0) * dec.eigenvectors[[i, k]] * dec.eigenvectors[[j, k]].conj();
            }
        }
    }
    // Symmetrize away residual round-off.
    let outd = dagger(&out);
    Ok((&out + &outd).mapv(|z| 0.5 * z))
}

/// 1-norm (maximum absolute column sum).
pub fn one_norm(a: &CMatrix) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..a.ncols() {
        let s: f64 = (0..a.nrows()).map(|i| a[[i, j]].norm()).sum();
        best = best.max(s);
    }
    best
}

/// ∞-norm (maximum absolute row sum).
pub fn inf_norm(a: &CMatrix) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..a.nrows() {
        let s: f64 = (0..a.ncols()).map(|j| a[[i, j]].norm()).sum();
        best = best.max(s);
    }
    best
}

// Padé coefficient tables for the [m/m] approximants of e^x.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

// 1-norm thresholds under which each Padé order meets double precision.
const THETA3: f64 = 1.495_585_217_958_292e-2;
const THETA5: f64 = 2.539_398_330_063_23e-1;
const THETA7: f64 = 9.504_178_996_162_932e-1;
const THETA9: f64 = 2.097_847_961_257_068;
const THETA13: f64 = 4.25;

fn pade_uv(a: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    // U = A·(Σ b_{2k+1} A^{2k}),  V = Σ b_{2k} A^{2k}.
    let n = a.nrows();
    let a2 = a.dot(a);
    let mut odd = identity(n).mapv(|z| z * b[1]);
    let mut even = identity(n).mapv(|z| z * b[0]);
    let mut pow = identity(n); // A^{2k}
    let mut k = 2;
    while k < b.len() {
        pow = pow.dot(&a2);
        even = even + pow.mapv(|z| z * b[k]);
        if k + 1 < b.len() {
            odd = odd + pow.mapv(|z| z * b[k + 1]);
        }
        k += 2;
    }
    (a.dot(&odd), even)
}

fn pade13_uv(a: &CMatrix) -> (CMatrix, CMatrix) {
    let b = &PADE13;
    let n = a.nrows();
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let u_hi = a6.mapv(|z| z * b[13]) + a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let u_lo = a6.mapv(|z| z * b[7])
        + a4.mapv(|z| z * b[5])
        + a2.mapv(|z| z * b[3])
        + identity(n).mapv(|z| z * b[1]);
    let u = a.dot(&(a6.dot(&u_hi) + u_lo));
    let v_hi = a6.mapv(|z| z * b[12]) + a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let v = a6.dot(&v_hi)
        + a6.mapv(|z| z * b[6])
        + a4.mapv(|z| z * b[4])
        + a2.mapv(|z| z * b[2])
        + identity(n).mapv(|z| z * b[0]);
    (u, v)
}

/// Matrix exponential by scaling-and-squaring with Padé approximants
/// (orders 3/5/7/9/13 picked from the 1-norm, as in Higham's method).
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    ensure_square(a)?;
    ensure_finite(a)?;
    let norm = one_norm(a);

    let (u, v, squarings) = if norm <= THETA3 {
        let (u, v) = pade_uv(a, &PADE3);
        (u, v, 0)
    } else if norm <= THETA5 {
        let (u, v) = pade_uv(a, &PADE5);
        (u, v, 0)
    } else if norm <= THETA7 {
        let (u, v) = pade_uv(a, &PADE7);
        (u, v, 0)
    } else if norm <= THETA9 {
        let (u, v) = pade_uv(a, &PADE9);
        (u, v, 0)
    } else {
        let s = ((norm / THETA13).log2().ceil()).max(0.0) as u32;
        let scaled = a.mapv(|z| z / 2f64.powi(s as i32));
        let (u, v) = pade13_uv(&scaled);
        (u, v, s)
    };

    let num = &v + &u;
    let den = &v - &u;
    let mut r = solve_matrix(&den, &num)?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

/// LU factorization with partial pivoting, packed in-place.
/// Returns the permutation as a row index map.
fn lu_factor(a: &CMatrix) -> Result<(CMatrix, Vec<usize>)> {
    ensure_square(a)?;
    let n = a.nrows();
    let tol = 1e-14 * max_abs(a).max(1e-300);
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = lu[[k, k]].norm();
        for r in (k + 1)..n {
            let mag = lu[[r, k]].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag <= tol {
            return Err(Error::Singular {
                pivot: pivot_mag,
                tol,
                hint: String::new(),
            });
        }
        if pivot_row != k {
            perm.swap(k, pivot_row);
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[pivot_row, j]];
                lu[[pivot_row, j]] = tmp;
            }
        }
        let inv = ONE / lu[[k, k]];
        for r in (k + 1)..n {
            let factor = lu[[r, k]] * inv;
            lu[[r, k]] = factor;
            for j in (k + 1)..n {
                let sub = factor * lu[[k, j]];
                lu[[r, j]] -= sub;
            }
        }
    }
    Ok((lu, perm))
}

fn lu_solve_one(lu: &CMatrix, perm: &[usize], b: &CVector) -> CVector {
    let n = lu.nrows();
    let mut x = Array1::from_iter(perm.iter().map(|&p| b[p]));
    for i in 1..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= lu[[i, j]] * x[j];
        }
        x[i] = acc;
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc -= lu[[i, j]] * x[j];
        }
        x[i] = acc / lu[[i, i]];
    }
    x
}

/// Solves a·x = y by LU with partial pivoting.
pub fn solve(a: &CMatrix, y: &CVector) -> Result<CVector> {
    if a.nrows() != y.len() {
        return Err(Error::Validation(format!(
            "solve: matrix is {}x{} but right-hand side has length {}",
            a.nrows(),
            a.ncols(),
            y.len()
        )));
    }
    let (lu, perm) = lu_factor(a)?;
    Ok(lu_solve_one(&lu, &perm, y))
}

/// Solves a·X = B column by column (shared factorization).
pub fn solve_matrix(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::Validation(format!(
            "solve_matrix: matrix is {}x{} but right-hand side is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let (lu, perm) = lu_factor(a)?;
    let mut out = Array2::from_elem((b.nrows(), b.ncols()), ZERO);
    for j in 0..b.ncols() {
        let col = Array1::from_iter((0..b.nrows()).map(|i| b[[i, j]]));
        let x = lu_solve_one(&lu, &perm, &col);
        for i in 0..b.nrows() {
            out[[i, j]] = x[i];
        }
    }
    Ok(out)
}

/// Kronecker product, dimensions (rₐ·r_b) × (cₐ·c_b).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    let mut out = Array2::from_elem((ra * rb, ca * cb), ZERO);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testsupport::{max_diff, random_hermitian, rng, round_trip_matrix};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn eigh_diagonal_matrix_is_identity_decomposition() {
        let a = array![
            [Complex64::new(2.0, 0.0), ZERO],
            [ZERO, Complex64::new(5.0, 0.0)]
        ];
        let dec = eigh(&a).unwrap();
        assert_abs_diff_eq!(dec.eigenvalues[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.eigenvalues[1], 5.0, epsilon = 1e-14);
        assert!(max_diff(&dec.eigenvectors, &identity(2)) < 1e-14);
    }

    #[test]
    fn eigh_symmetric_offdiagonal_spectrum() {
        let a = array![[ZERO, ONE], [ONE, ZERO]];
        let dec = eigh(&a).unwrap();
        assert_abs_diff_eq!(dec.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.eigenvalues[1], 1.0, epsilon = 1e-14);
        let inv = 1.0 / 2f64.sqrt();
        for k in 0..2 {
            let v0 = dec.eigenvectors[[0, k]];
            let v1 = dec.eigenvectors[[1, k]];
            assert_abs_diff_eq!(v0.norm(), inv, epsilon = 1e-12);
            assert_abs_diff_eq!(v1.norm(), inv, epsilon = 1e-12);
            let expected_sign = if k == 0 { -1.0 } else { 1.0 };
            let ratio = v1 / v0;
            assert_abs_diff_eq!(ratio.re, expected_sign, epsilon = 1e-12);
            assert_abs_diff_eq!(ratio.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigh_reconstructs_random_hermitian_matrices() {
        let mut r = rng(11);
        for _ in 0..100 {
            let a = random_hermitian(&mut r, 5);
            let dec = eigh(&a).unwrap();
            let scale = max_abs(&a).max(1.0);

            let vd = dagger(&dec.eigenvectors);
            let gram = vd.dot(&dec.eigenvectors);
            assert!(max_diff(&gram, &identity(5)) < 1e-10, "eigenvectors not unitary");

            let mut lam = Array2::from_elem((5, 5), ZERO);
            for i in 0..5 {
                lam[[i, i]] = Complex64::new(dec.eigenvalues[i], 0.0);
            }
            let rec = dec.eigenvectors.dot(&lam).dot(&vd);
            assert!(max_diff(&rec, &a) < 1e-9 * scale, "reconstruction off");

            for k in 1..5 {
                assert!(dec.eigenvalues[k] >= dec.eigenvalues[k - 1]);
            }
        }
    }

    #[test]
    fn eigh_rejects_non_square_and_non_hermitian() {
        let rect = Array2::from_elem((2, 3), ZERO);
        assert!(matches!(eigh(&rect), Err(Error::NotSquare { .. })));
        let a = array![[ZERO, ONE], [2.0 * ONE, ZERO]];
        assert!(matches!(eigh(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrtm_psd_diagonal_and_identity() {
        let a = array![
            [Complex64::new(4.0, 0.0), ZERO],
            [ZERO, Complex64::new(9.0, 0.0)]
        ];
        let r = sqrtm_psd(&a).unwrap();
        let expected = array![
            [Complex64::new(2.0, 0.0), ZERO],
            [ZERO, Complex64::new(3.0, 0.0)]
        ];
        assert!(max_diff(&r, &expected) < 1e-12);
        let id = identity(4);
        assert!(max_diff(&sqrtm_psd(&id).unwrap(), &id) < 1e-13);
    }

    #[test]
    fn sqrtm_psd_squares_back_on_random_psd() {
        let mut r = rng(12);
        for _ in 0..50 {
            let mut b = Array2::from_elem((4, 4), ZERO);
            for i in 0..4 {
                for j in 0..4 {
                    b[[i, j]] = Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
                }
            }
            let a = dagger(&b).dot(&b);
            let s = sqrtm_psd(&a).unwrap();
            let scale = max_abs(&a).max(1.0);
            assert!(max_diff(&s.dot(&s), &a) < 1e-8 * scale);
            // Functions of the same eigenbasis commute.
            let sa = s.dot(&a);
            let as_ = a.dot(&s);
            assert!(max_diff(&sa, &as_) < 1e-8 * scale);
        }
    }

    #[test]
    fn sqrtm_psd_rejects_indefinite_input() {
        let a = array![
            [Complex64::new(1.0, 0.0), ZERO],
            [ZERO, Complex64::new(-0.5, 0.0)]
        ];
        match sqrtm_psd(&a) {
            Err(Error::NotPsd { eigenvalue }) => assert_abs_diff_eq!(eigenvalue, -0.5, epsilon = 1e-12),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = Array2::from_elem((3, 3), ZERO);
        assert!(max_diff(&expm(&z).unwrap(), &identity(3)) < 1e-14);
    }

    #[test]
    fn expm_diagonal_exponentiates_entries() {
        let a = array![
            [Complex64::new(1.5, 0.0), ZERO],
            [ZERO, Complex64::new(-2.0, 0.5)]
        ];
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]] - Complex64::new(1.5, 0.0).exp()).norm() < 1e-12);
        assert!((e[[1, 1]] - Complex64::new(-2.0, 0.5).exp()).norm() < 1e-12);
        assert!(e[[0, 1]].norm() < 1e-14 && e[[1, 0]].norm() < 1e-14);
    }

    #[test]
    fn expm_rotation_generator_gives_rotation_matrix() {
        for theta in [0.3, 2.0, 11.0] {
            let a = array![
                [ZERO, Complex64::new(theta, 0.0)],
                [Complex64::new(-theta, 0.0), ZERO]
            ];
            let e = expm(&a).unwrap();
            let expected = array![
                [
                    Complex64::new(theta.cos(), 0.0),
                    Complex64::new(theta.sin(), 0.0)
                ],
                [
                    Complex64::new(-theta.sin(), 0.0),
                    Complex64::new(theta.cos(), 0.0)
                ]
            ];
            assert!(max_diff(&e, &expected) < 1e-12, "theta = {theta}");
        }
    }

    #[test]
    fn expm_of_commuting_pair_factorizes() {
        let mut r = rng(13);
        for _ in 0..20 {
            let n = 4;
            let mut a = Array2::from_elem((n, n), ZERO);
            let mut b = Array2::from_elem((n, n), ZERO);
            for i in 0..n {
                a[[i, i]] = Complex64::new(2.0 * r.random::<f64>() - 1.0, r.random::<f64>());
                b[[i, i]] = Complex64::new(2.0 * r.random::<f64>() - 1.0, r.random::<f64>());
            }
            let lhs = expm(&(&a + &b)).unwrap();
            let rhs = expm(&a).unwrap().dot(&expm(&b).unwrap());
            assert!(max_diff(&lhs, &rhs) < 1e-9);
        }
    }

    #[test]
    fn expm_matches_squared_half_step_on_dense_input() {
        // e^A = (e^{A/2})² exercises the scaling path on a matrix with
        // norm past θ₁₃.
        let mut r = rng(14);
        let mut a = Array2::from_elem((5, 5), ZERO);
        for i in 0..5 {
            for j in 0..5 {
                a[[i, j]] = Complex64::new(4.0 * (r.random::<f64>() - 0.5), 4.0 * (r.random::<f64>() - 0.5));
            }
        }
        let whole = expm(&a).unwrap();
        let half = expm(&a.mapv(|z| 0.5 * z)).unwrap();
        let squared = half.dot(&half);
        let scale = max_abs(&whole).max(1.0);
        assert!(max_diff(&whole, &squared) < 1e-10 * scale);
    }

    #[test]
    fn kron_identities_and_sigma_z() {
        assert!(max_diff(&kron(&identity(2), &identity(2)), &identity(4)) < 1e-15);
        let sz = array![
            [ONE, ZERO],
            [ZERO, Complex64::new(-1.0, 0.0)]
        ];
        let k = kron(&sz, &identity(2));
        let expected = Array2::from_diag(&Array1::from_vec(vec![
            ONE,
            ONE,
            Complex64::new(-1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]));
        assert!(max_diff(&k, &expected) < 1e-15);
    }

    #[test]
    fn kron_mixed_product_property() {
        let mut r = rng(15);
        for _ in 0..50 {
            let m = |r: &mut rand_chacha::ChaCha8Rng| {
                let mut a = Array2::from_elem((2, 2), ZERO);
                for i in 0..2 {
                    for j in 0..2 {
                        a[[i, j]] = Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
                    }
                }
                a
            };
            let (a, b, c, d) = (m(&mut r), m(&mut r), m(&mut r), m(&mut r));
            let lhs = kron(&a, &b).dot(&kron(&c, &d));
            let rhs = kron(&a.dot(&c), &b.dot(&d));
            assert!(max_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let y = Array1::from_vec(vec![Complex64::new(2.0, 1.0), Complex64::new(-3.0, 0.0)]);
        let x = solve(&identity(2), &y).unwrap();
        assert!((x[0] - y[0]).norm() < 1e-15 && (x[1] - y[1]).norm() < 1e-15);

        let a = array![
            [Complex64::new(2.0, 0.0), ZERO],
            [ZERO, Complex64::new(4.0, 0.0)]
        ];
        let y = Array1::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(4.0, 0.0)]);
        let x = solve(&a, &y).unwrap();
        assert!((x[0] - ONE).norm() < 1e-15 && (x[1] - ONE).norm() < 1e-15);
    }

    #[test]
    fn solve_random_system_has_small_residual() {
        let mut r = rng(16);
        for _ in 0..50 {
            let n = 9;
            let mut a = Array2::from_elem((n, n), ZERO);
            for i in 0..n {
                for j in 0..n {
                    a[[i, j]] = Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
                }
                a[[i, i]] += Complex64::new(3.0, 0.0); // keep it well conditioned
            }
            let mut y = Array1::from_elem(n, ZERO);
            for i in 0..n {
                y[i] = Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
            }
            let x = solve(&a, &y).unwrap();
            let res = &a.dot(&x) - &y;
            let ynorm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let rnorm = res.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(rnorm < 1e-9 * ynorm.max(1.0));
        }
    }

    #[test]
    fn solve_reports_singular_systems() {
        let a = Array2::from_elem((3, 3), ONE);
        let y = Array1::from_elem(3, ONE);
        assert!(matches!(solve(&a, &y), Err(Error::Singular { .. })));
    }

    #[test]
    fn matrices_round_trip_through_vectors() {
        // Guards the row/column conventions the tests above lean on.
        let mut r = rng(17);
        let a = random_hermitian(&mut r, 4);
        let b = round_trip_matrix(&a);
        assert!(max_diff(&a, &b) < 1e-15);
    }
}
