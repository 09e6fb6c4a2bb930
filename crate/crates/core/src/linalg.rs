//! Small dense complex linear-algebra helpers on top of nalgebra.

use alloc::format;
use alloc::string::String;

use nalgebra::{Cholesky, DVector, Dyn, Schur};

use crate::{CMat, Error, Result, C64};

/// Eigenvalues in `[-PSD_ROUNDOFF, 0)` are treated as roundoff and clamped to
/// zero. The bound is scaled by `max(1, largest eigenvalue)`.
pub const PSD_ROUNDOFF: f64 = 1e-10;

/// Largest condition number accepted before a Hermitian matrix is declared
/// singular.
pub const MAX_CONDITION: f64 = 1e13;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `(m + m^H) / 2`
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

/// Frobenius inner product `<a, b> = tr(a^H b)`.
pub fn inner(a: &CMat, b: &CMat) -> C64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius_relative(a: &CMat, b: &CMat) -> f64 {
    let denom = b.norm().max(1e-300);
    (a - b).norm() / denom
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (DVector<f64>, CMat) {
    let eig = hermitize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: alloc::vec::Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

fn rebuild(values: &DVector<f64>, vectors: &CMat) -> CMat {
    let n = values.len();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let s = values[j];
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    hermitize(&(scaled * vectors.adjoint()))
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    let (v, _) = eigh(m);
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Cholesky factor of the Hermitian part of `m`, or `None` unless every
/// pivot is real and positive. nalgebra takes complex square roots of the
/// pivots, so its own factorization also succeeds on indefinite matrices.
pub fn cholesky_pd(m: &CMat) -> Option<Cholesky<C64, Dyn>> {
    let ch = hermitize(m).cholesky()?;
    let l = ch.l_dirty();
    let ok = (0..l.nrows()).all(|j| {
        let d = l[(j, j)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
    });
    ok.then_some(ch)
}

/// Clamp roundoff-level negative eigenvalues of a Hermitian matrix to zero.
///
/// Fails with [`Error::NotPsd`] when an eigenvalue is more negative than the
/// roundoff bound.
pub fn repair_psd(m: &CMat, what: &str) -> Result<CMat> {
    if cholesky_pd(m).is_some() {
        return Ok(hermitize(m));
    }
    let (mut values, vectors) = eigh(m);
    let n = values.len();
    if n == 0 {
        return Ok(m.clone());
    }
    let scale = values[n - 1].abs().max(1.0);
    let min = values[0];
    if min < -PSD_ROUNDOFF * scale {
        return Err(Error::NotPsd { what: String::from(what), min_eigenvalue: min });
    }
    if min >= 0.0 {
        return Ok(hermitize(m));
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(rebuild(&values, &vectors))
}

/// Condition number `lambda_max / lambda_min` of a Hermitian PSD matrix.
pub fn condition_number(m: &CMat) -> f64 {
    let (v, _) = eigh(m);
    let n = v.len();
    if n == 0 {
        return 1.0;
    }
    let hi = v[n - 1].abs();
    let lo = v[0];
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solve `a x = b` for Hermitian positive-definite `a` via Cholesky.
pub fn solve_pd(a: &CMat, b: &CMat, what: &str) -> Result<CMat> {
    match cholesky_pd(a) {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(Error::NotPd { what: String::from(what) }),
    }
}

/// Inverse of a Hermitian positive-definite matrix; reports the condition
/// number when the matrix is singular in practice.
pub fn inverse_pd(a: &CMat, what: &str) -> Result<CMat> {
    let h = hermitize(a);
    let cond = condition_number(&h);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::Singular { what: String::from(what), condition: cond });
    }
    match cholesky_pd(&h) {
        Some(ch) => Ok(hermitize(&ch.inverse())),
        None => Err(Error::Singular { what: String::from(what), condition: cond }),
    }
}

/// Moore-Penrose pseudo-inverse of a Hermitian matrix. Eigenvalues with
/// `|lambda| <= rel_tol * max|lambda|` are dropped.
///
/// Returns the inverse and the number of dropped directions.
pub fn pinv_hermitian(m: &CMat, rel_tol: f64) -> (CMat, usize) {
    let (mut values, vectors) = eigh(m);
    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut dropped = 0;
    for v in values.iter_mut() {
        if v.abs() <= rel_tol * peak || peak == 0.0 {
            *v = 0.0;
            dropped += 1;
        } else {
            *v = 1.0 / *v;
        }
    }
    (rebuild(&values, &vectors), dropped)
}

/// `m^{-1/2}` for Hermitian positive-definite `m`.
pub fn inv_sqrt_pd(m: &CMat, what: &str) -> Result<CMat> {
    let (mut values, vectors) = eigh(m);
    let n = values.len();
    if n == 0 {
        return Ok(m.clone());
    }
    let hi = values[n - 1].abs();
    let lo = values[0];
    if lo <= 0.0 || hi / lo > MAX_CONDITION {
        return Err(Error::Singular {
            what: String::from(what),
            condition: if lo <= 0.0 { f64::INFINITY } else { hi / lo },
        });
    }
    for v in values.iter_mut() {
        *v = 1.0 / libm::sqrt(*v);
    }
    Ok(rebuild(&values, &vectors))
}

/// `m^{1/2}` for Hermitian PSD `m` (roundoff negatives clamped).
pub fn sqrt_psd(m: &CMat, what: &str) -> Result<CMat> {
    let (mut values, vectors) = eigh(&repair_psd(m, what)?);
    for v in values.iter_mut() {
        *v = libm::sqrt(v.max(0.0));
    }
    Ok(rebuild(&values, &vectors))
}

/// Largest eigenvalue modulus of a general square complex matrix.
pub fn spectral_radius(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    match Schur::try_new(m.clone(), f64::EPSILON, 10_000 * m.nrows()) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0, f64::max)
        }
        None => gelfand_radius(m),
    }
}

/// `lim ||m^k||^(1/k)` by repeated squaring with renormalization.
fn gelfand_radius(m: &CMat) -> f64 {
    let mut p = m.clone();
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..40 {
        let norm = p.norm();
        if norm == 0.0 {
            return 0.0;
        }
        p /= C64::new(norm, 0.0);
        log_scale += libm::log(norm) / k;
        p = &p * &p;
        k *= 2.0;
    }
    libm::exp(log_scale + libm::log(p.norm().max(f64::MIN_POSITIVE)) / k)
}

/// Identity of size `n`.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub(crate) fn dims_error(what: &str, expected: (usize, usize), got: (usize, usize)) -> Error {
    Error::misuse(format!("{what}: expected {expected:?}, got {got:?}"))
}
