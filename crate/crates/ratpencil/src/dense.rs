//! Small dense-matrix utilities shared by every module: Kronecker products,
//! column-stacking vec, perfect shuffle permutations, and block writes.

use crate::{CMat, CVec, Scalar};
use num_complex::Complex;

/// Kronecker product a ⊗ b.
pub fn kron<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kronecker(b)
}

/// Column-stacking vec(a): columns of `a` concatenated into one column.
pub fn vec_of<T: Scalar>(a: &CMat<T>) -> CVec<T> {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_of`]: reshape a column back into a `rows`×`cols` matrix.
pub fn unvec<T: Scalar>(v: &CVec<T>, rows: usize, cols: usize) -> CMat<T> {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Identity of size n.
pub fn eye<T: Scalar>(n: usize) -> CMat<T> {
    CMat::identity(n, n)
}

/// Perfect shuffle permutation for a p×q grid: the index vector `perm` with
/// `shuffled[i] = x[perm[i]]`, chosen so that applying it to vec(X) of a
/// p×q matrix X yields vec(Xᵀ).
pub fn perfect_shuffle(p: usize, q: usize) -> Vec<usize> {
    // vec(X)[r + c·p] = X[r,c]; vec(Xᵀ)[c + r·q] = X[r,c].
    let mut perm = vec![0usize; p * q];
    for r in 0..p {
        for c in 0..q {
            perm[c + r * q] = r + c * p;
        }
    }
    perm
}

/// Apply an index permutation to a vector: `out[i] = v[perm[i]]`.
pub fn permute_vec<T: Scalar>(v: &CVec<T>, perm: &[usize]) -> CVec<T> {
    assert_eq!(v.len(), perm.len());
    CVec::from_fn(perm.len(), |i, _| v[perm[i]])
}

/// The permutation as a 0/1 matrix P with P·v = permute_vec(v, perm).
pub fn permutation_matrix<T: Scalar>(perm: &[usize]) -> CMat<T> {
    let n = perm.len();
    let mut p = CMat::<T>::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        p[(i, j)] = Complex::new(T::one(), T::zero());
    }
    p
}

/// Copy `src` into `dst` with its top-left corner at (i, j).
pub fn set_block<T: Scalar>(dst: &mut CMat<T>, i: usize, j: usize, src: &CMat<T>) {
    dst.view_mut((i, j), (src.nrows(), src.ncols())).copy_from(src);
}

/// Extract the r×c block of `src` with top-left corner at (i, j).
pub fn get_block<T: Scalar>(src: &CMat<T>, i: usize, j: usize, r: usize, c: usize) -> CMat<T> {
    src.view((i, j), (r, c)).into_owned()
}

/// Frobenius norm.
pub fn fro<T: Scalar>(a: &CMat<T>) -> T {
    a.norm()
}

/// Frobenius norm of a list of matrices viewed as one stacked object.
pub fn fro_joint<T: Scalar>(ms: &[&CMat<T>]) -> T {
    let mut s = T::zero();
    for m in ms {
        let f = m.norm();
        s += f * f;
    }
    s.sqrt()
}

/// Modulus of a complex entry, available for any real scalar.
pub fn cmod<T: Scalar>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Largest entry modulus; cheap scale estimate for tolerances.
pub fn max_abs<T: Scalar>(a: &CMat<T>) -> T {
    let mut m = T::zero();
    for v in a.iter() {
        let x = cmod(*v);
        if x > m {
            m = x;
        }
    }
    m
}

/// True when every entry of `a` is finite.
pub fn all_finite<T: Scalar>(a: &CMat<T>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
