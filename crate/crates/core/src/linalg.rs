//! Small dense complex linear-algebra helpers built on nalgebra.

use crate::scalar::{cabs, cre, real, CMat, CVec, Real};
use nalgebra::{DMatrix, Schur};
use num_complex::Complex;

/// Eigenvalues of a square complex matrix (complex Schur form).
pub fn eigenvalues<T: Real>(m: &CMat<T>) -> Vec<Complex<T>> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur = Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Eigenvalues of a real square matrix.
pub fn real_eigenvalues<T: Real>(m: &DMatrix<T>) -> Vec<Complex<T>> {
    eigenvalues(&m.map(cre))
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(m: &CMat<T>) -> Vec<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<T> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Spectral norm.
pub fn norm2<T: Real>(m: &CMat<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

/// Numerical rank: number of singular values above `threshold`.
pub fn rank<T: Real>(m: &CMat<T>, threshold: T) -> usize {
    singular_values(m)
        .iter()
        .filter(|&&s| s > threshold)
        .count()
}

/// Condition number `σ_max / σ_min` (infinite when singular).
pub fn condition_number<T: Real>(m: &CMat<T>) -> T {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        (Some(_), Some(_)) => real::<T>(f64::INFINITY),
        _ => T::one(),
    }
}

/// Orthonormal basis (as columns) of the numerical null space of `m`:
/// right singular vectors whose singular value is `<= threshold`.
pub fn null_space<T: Real>(m: &CMat<T>, threshold: T) -> CMat<T> {
    let n = m.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    // Pad to square so that the SVD exposes all n right singular vectors.
    let a = if m.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let cols: Vec<CVec<T>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= threshold)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space of `m`, keeping directions with
/// singular value above `threshold`, ordered by decreasing singular value.
///
/// Directions are formed as `m v_i / σ_i` from the right singular vectors,
/// which keeps them inside the span of the columns to working precision.
pub fn column_space<T: Real>(m: &CMat<T>, threshold: T) -> CMat<T> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let n = m.ncols();
    let a = if m.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > threshold)
        .collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let cols: Vec<CVec<T>> = idx
        .iter()
        .map(|&i| {
            let v = v_t.row(i).adjoint();
            let mut u = m * v;
            let norm = vnorm(&u);
            u /= cre(norm);
            u
        })
        .collect();
    if cols.is_empty() {
        CMat::zeros(m.nrows(), 0)
    } else {
        let raw = CMat::from_columns(&cols);
        // re-orthonormalize against rounding
        let qr = raw.qr();
        let q = qr.q();
        let r = qr.r();
        let mut out = q.columns(0, cols.len()).into_owned();
        for j in 0..cols.len() {
            if r[(j, j)].re < T::zero() {
                let c = -out.column(j).into_owned();
                out.set_column(j, &c);
            }
        }
        out
    }
}

/// Minimum-norm least-squares solution of `a x ≈ b` (SVD, relative cutoff).
pub fn lstsq<T: Real>(a: &CMat<T>, b: &CVec<T>, rcond: T) -> CVec<T> {
    if a.ncols() == 0 {
        return CVec::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd
        .singular_values
        .iter()
        .copied()
        .fold(T::zero(), |x, y| if y > x { y } else { x });
    let cutoff = rcond * smax;
    let u = svd.u.as_ref().expect("U");
    let v_t = svd.v_t.as_ref().expect("V^H");
    let mut x = CVec::zeros(a.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coef = u.column(i).dotc(b) / cre(s);
            x += v_t.row(i).adjoint() * coef;
        }
    }
    x
}

/// Integer power of a square matrix.
pub fn mat_pow<T: Real>(m: &CMat<T>, k: usize) -> CMat<T> {
    let mut out = CMat::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Euclidean norm of a complex vector.
pub fn vnorm<T: Real>(v: &CVec<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Largest entry modulus.
pub fn vmax<T: Real>(v: &CVec<T>) -> T {
    v.iter()
        .map(|z| cabs(*z))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one() {
        let m: CMat<f64> = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]).map(cre);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 1);
        let r = &m * &ns;
        assert!(r.norm() < 1e-12);
        assert_eq!(rank(&m, 1e-10), 1);
    }

    #[test]
    fn lstsq_recovers_solution() {
        let a: CMat<f64> = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).map(cre);
        let x = CVec::from_vec(vec![cre(2.0), cre(-1.0)]);
        let b = &a * &x;
        let got = lstsq(&a, &b, 1e-12);
        assert!((got - x).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_rotation() {
        let m: DMatrix<f64> = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        let mut ev = real_eigenvalues(&m);
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] - Complex::new(1.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - Complex::new(1.0, 1.0)).norm() < 1e-12);
    }
}
