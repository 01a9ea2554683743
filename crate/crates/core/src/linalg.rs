//! Thin LAPACK bindings over column-major `nalgebra` storage.

extern crate openblas_src;

use std::os::raw::c_int;

use lapack_sys::__BindgenComplex;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Return code from a LAPACK driver that reported `info != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LapackFailure(pub i32);

fn as_int(n: usize) -> c_int {
    c_int::try_from(n).expect("matrix dimension exceeds LAPACK integer range")
}

/// Eigen-decomposition of a real symmetric matrix (divide and conquer).
/// Eigenvalues ascend; column `i` of the result holds eigenvector `i`.
pub fn symmetric_eigen(mut a: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), LapackFailure> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen needs a square matrix");
    if n == 0 {
        return Ok((DVector::zeros(0), a));
    }
    let ni = as_int(n);
    let mut w = vec![0.0; n];
    let mut info: c_int = 0;
    let mut work_q = 0.0f64;
    let mut iwork_q: c_int = 0;
    let query: c_int = -1;
    unsafe {
        lapack_sys::dsyevd_(
            c"V".as_ptr(),
            c"L".as_ptr(),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut work_q,
            &query,
            &mut iwork_q,
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LapackFailure(info));
    }
    let lwork = work_q as usize;
    let liwork = iwork_q as usize;
    let mut work = vec![0.0; lwork.max(1)];
    let mut iwork = vec![0 as c_int; liwork.max(1)];
    unsafe {
        lapack_sys::dsyevd_(
            c"V".as_ptr(),
            c"L".as_ptr(),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &as_int(work.len()),
            iwork.as_mut_ptr(),
            &as_int(iwork.len()),
            &mut info,
        );
    }
    if info != 0 {
        return Err(LapackFailure(info));
    }
    Ok((DVector::from_vec(w), a))
}

/// Complex Schur factorization `A = Z T Z^H` returning the diagonal of `T`
/// and the unitary `Z`. For a normal matrix `T` is diagonal and the columns of
/// `Z` are eigenvectors.
pub fn complex_schur(mut a: DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>), LapackFailure> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "complex_schur needs a square matrix");
    if n == 0 {
        return Ok((Vec::new(), a));
    }
    let ni = as_int(n);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut z = DMatrix::<Complex64>::zeros(n, n);
    let mut sdim: c_int = 0;
    let mut rwork = vec![0.0f64; n];
    let mut bwork = vec![0 as c_int; n];
    let mut info: c_int = 0;
    let mut work_q = Complex64::new(0.0, 0.0);
    let query: c_int = -1;

    // Complex64 and the binding's complex struct are both repr(C) {re, im}.
    let cp = |p: *mut Complex64| p as *mut __BindgenComplex<f64>;
    unsafe {
        lapack_sys::zgees_(
            c"V".as_ptr(),
            c"N".as_ptr(),
            None,
            &ni,
            cp(a.as_mut_ptr()),
            &ni,
            &mut sdim,
            cp(w.as_mut_ptr()),
            cp(z.as_mut_ptr()),
            &ni,
            cp(&mut work_q),
            &query,
            rwork.as_mut_ptr(),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(LapackFailure(info));
    }
    let mut work = vec![Complex64::new(0.0, 0.0); (work_q.re as usize).max(1)];
    unsafe {
        lapack_sys::zgees_(
            c"V".as_ptr(),
            c"N".as_ptr(),
            None,
            &ni,
            cp(a.as_mut_ptr()),
            &ni,
            &mut sdim,
            cp(w.as_mut_ptr()),
            cp(z.as_mut_ptr()),
            &ni,
            cp(work.as_mut_ptr()),
            &as_int(work.len()),
            rwork.as_mut_ptr(),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(LapackFailure(info));
    }
    Ok((w, z))
}

/// Real and imaginary parts of a complex matrix.
pub fn split(a: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|c| c.re), a.map(|c| c.im))
}

pub fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<Complex64> {
    re.zip_map(im, Complex64::new)
}

/// `A B` for complex matrices through four real products, which use the
/// optimized real kernel instead of the generic complex loop.
pub fn complex_mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(&re, &im)
}

/// `A^H B` for complex matrices.
pub fn complex_adjoint_mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = ar.tr_mul(&br) + ai.tr_mul(&bi);
    let im = ar.tr_mul(&bi) - ai.tr_mul(&br);
    join(&re, &im)
}

/// `max |A^H A - I|` entrywise.
pub fn unitarity_defect(a: &DMatrix<Complex64>) -> f64 {
    let g = complex_adjoint_mul(a, a);
    max_identity_defect(&g)
}

pub fn max_identity_defect(g: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for ((i, j), v) in g.iter().enumerate().map(|(idx, v)| ((idx % g.nrows(), idx / g.nrows()), v)) {
        let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        worst = worst.max((v - target).norm());
    }
    worst
}
