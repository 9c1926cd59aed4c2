//! Dense complex linear algebra used by the propagators.
//!
//! Matrices are row-major `ndarray` arrays of `Complex64`; products go through
//! `ndarray`'s gemm. The Hermitian eigendecomposition is delegated to
//! `nalgebra`.

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

/// Hard cap on the number of squarings in scaling-and-squaring. Reaching it
/// means ‖A‖₁ > θ₁₃·2⁶⁰, which no physical input in this crate produces.
pub const MAX_SQUARINGS: u32 = 60;

/// Tolerance on ‖M − M†‖_max below which a matrix is treated as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };

pub fn to_complex(m: &Array2<f64>) -> CMatrix {
    m.mapv(|x| C64::new(x, 0.0))
}

pub fn conj_transpose(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim());
    Zip::from(a)
        .and(b)
        .fold(0.0_f64, |acc, x, y| acc.max((x - y).norm()))
}

/// ‖M − M†‖_max.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

/// ‖U†U − I‖_max.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let gram = conj_transpose(u).dot(u);
    max_abs_diff(&gram, &identity(u.nrows()))
}

pub fn norm1(m: &CMatrix) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn to_nalgebra(m: &CMatrix) -> nalgebra::DMatrix<C64> {
    nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Largest singular value, from the top eigenvalue of the Gram matrix.
pub fn max_singular_value(m: &CMatrix) -> f64 {
    let gram = to_nalgebra(&conj_transpose(m).dot(m));
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(0.0, f64::max).sqrt()
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// `e^{−iMt}` for Hermitian `M` via `M = QΛQ†`.
pub fn expm_hermitian(m: &CMatrix, t: f64) -> Result<CMatrix> {
    check_finite(m)?;
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NonHermitian { deviation });
    }
    let n = m.nrows();
    let phase = |lambda: f64| C64::from_polar(1.0, -lambda * t);

    if m.iter().all(|z| z.im == 0.0) {
        // real symmetric: real orthogonal eigenvectors
        let real = nalgebra::DMatrix::from_fn(n, n, |i, j| m[[i, j]].re);
        let eig = real.symmetric_eigen();
        let q = Array2::from_shape_fn((n, n), |(i, k)| C64::new(eig.eigenvectors[(i, k)], 0.0));
        let scaled = Array2::from_shape_fn((n, n), |(i, k)| q[[i, k]] * phase(eig.eigenvalues[k]));
        Ok(scaled.dot(&q.t()))
    } else {
        let eig = to_nalgebra(m).symmetric_eigen();
        let q = Array2::from_shape_fn((n, n), |(i, k)| eig.eigenvectors[(i, k)]);
        let scaled = Array2::from_shape_fn((n, n), |(i, k)| q[[i, k]] * phase(eig.eigenvalues[k]));
        Ok(scaled.dot(&conj_transpose(&q)))
    }
}

// Padé coefficients b_0..b_m of the [m/m] approximant to e^x.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
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

// Backward-error thresholds θ_m for double precision.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

/// `e^{−iMt}` for a general (non-normal) `M` by scaling and squaring with a
/// degree-{3,5,7,9,13} diagonal Padé approximant.
pub fn expm_pade(m: &CMatrix, t: f64) -> Result<CMatrix> {
    check_finite(m)?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("propagation time {t} is not finite")));
    }
    let a = m.mapv(|z| z * MINUS_I * t);
    expm(&a)
}

/// Matrix exponential `e^A`.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    check_finite(a)?;
    let norm = norm1(a);
    for &(order, theta) in &THETA {
        if norm <= theta {
            return pade_low(a, order);
        }
    }
    let ratio = norm / THETA_13;
    let squarings = if ratio > 1.0 { ratio.log2().ceil() as u32 } else { 0 };
    if squarings > MAX_SQUARINGS {
        return Err(Error::ScalingOverflow {
            norm,
            squarings,
            cap: MAX_SQUARINGS,
        });
    }
    let scale = 0.5_f64.powi(squarings as i32);
    let scaled = a.mapv(|z| z * scale);
    let mut r = pade13(&scaled)?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    check_finite(&r)?;
    Ok(r)
}

fn pade_low(a: &CMatrix, order: usize) -> Result<CMatrix> {
    let b: &[f64] = match order {
        3 => &PADE3,
        5 => &PADE5,
        7 => &PADE7,
        9 => &PADE9,
        _ => unreachable!("unsupported Padé order {order}"),
    };
    let n = a.nrows();
    let a2 = a.dot(a);
    // even powers I, A², A⁴, ...
    let mut powers = vec![identity(n), a2.clone()];
    while powers.len() < order.div_ceil(2) {
        let next = powers.last().unwrap().dot(&a2);
        powers.push(next);
    }
    let mut odd = Array2::<C64>::zeros((n, n));
    let mut even = Array2::<C64>::zeros((n, n));
    for (k, p) in powers.iter().enumerate() {
        odd.scaled_add(C64::new(b[2 * k + 1], 0.0), p);
        even.scaled_add(C64::new(b[2 * k], 0.0), p);
    }
    let u = a.dot(&odd);
    finish_pade(u, even)
}

fn pade13(a: &CMatrix) -> Result<CMatrix> {
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let n = a.nrows();
    let ident = identity(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let mut inner_u = a6.mapv(|z| z * b(13));
    inner_u.scaled_add(b(11), &a4);
    inner_u.scaled_add(b(9), &a2);
    let mut odd = a6.dot(&inner_u);
    odd.scaled_add(b(7), &a6);
    odd.scaled_add(b(5), &a4);
    odd.scaled_add(b(3), &a2);
    odd.scaled_add(b(1), &ident);
    let u = a.dot(&odd);

    let mut inner_v = a6.mapv(|z| z * b(12));
    inner_v.scaled_add(b(10), &a4);
    inner_v.scaled_add(b(8), &a2);
    let mut v = a6.dot(&inner_v);
    v.scaled_add(b(6), &a6);
    v.scaled_add(b(4), &a4);
    v.scaled_add(b(2), &a2);
    v.scaled_add(b(0), &ident);

    finish_pade(u, v)
}

/// Solves `(V − U) X = V + U`.
fn finish_pade(u: CMatrix, v: CMatrix) -> Result<CMatrix> {
    let q = &v - &u;
    let p = &v + &u;
    solve(q, p)
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub fn solve(a: CMatrix, b: CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "solve needs a square system");
    assert_eq!(b.nrows(), n, "right-hand side has the wrong number of rows");
    let m = b.ncols();
    let mut a = a.as_standard_layout().into_owned();
    let mut b = b.as_standard_layout().into_owned();
    let av = a.as_slice_mut().expect("standard layout");
    let bv = b.as_slice_mut().expect("standard layout");

    for k in 0..n {
        let (pivot_row, pivot_abs) = (k..n)
            .map(|i| (i, av[i * n + k].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty pivot range");
        if pivot_abs == 0.0 || !pivot_abs.is_finite() {
            return Err(Error::Singular);
        }
        if pivot_row != k {
            swap_rows(av, n, k, pivot_row);
            swap_rows(bv, m, k, pivot_row);
        }
        let (upper_a, lower_a) = av.split_at_mut((k + 1) * n);
        let (upper_b, lower_b) = bv.split_at_mut((k + 1) * m);
        let pivot_a = &upper_a[k * n..];
        let pivot_b = &upper_b[k * m..];
        let pivot = pivot_a[k];
        for (row_a, row_b) in lower_a.chunks_exact_mut(n).zip(lower_b.chunks_exact_mut(m)) {
            let factor = row_a[k] / pivot;
            if factor == ZERO {
                continue;
            }
            for (x, &p) in row_a[k..].iter_mut().zip(&pivot_a[k..]) {
                *x -= factor * p;
            }
            for (x, &p) in row_b.iter_mut().zip(pivot_b) {
                *x -= factor * p;
            }
        }
    }

    for k in (0..n).rev() {
        let (head, tail) = bv.split_at_mut((k + 1) * m);
        let row = &mut head[k * m..];
        for (j, solved) in tail.chunks_exact(m).enumerate() {
            let coeff = av[k * n + k + 1 + j];
            if coeff == ZERO {
                continue;
            }
            for (x, &y) in row.iter_mut().zip(solved) {
                *x -= coeff * y;
            }
        }
        let inv = ONE / av[k * n + k];
        for x in row.iter_mut() {
            *x *= inv;
        }
    }
    Ok(b)
}

fn swap_rows(data: &mut [C64], width: usize, i: usize, j: usize) {
    let (lo, hi) = (i.min(j), i.max(j));
    let (head, tail) = data.split_at_mut(hi * width);
    head[lo * width..(lo + 1) * width].swap_with_slice(&mut tail[..width]);
}
