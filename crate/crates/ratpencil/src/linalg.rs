//! SVD-based kernels shared across the crate: spectral norms, numerical rank,
//! pseudoinverse and minimum-norm least squares, plain LU solves.
//!
//! Singular values are always returned in descending order. Truncation for
//! rank decisions and pseudoinverses uses the conventional threshold
//! max(m,n)·ε·σ_max unless stated otherwise.

use crate::{CMat, CVec, Error, Result, Scalar};
use num_complex::Complex;

/// Thin SVD with factors ordered by descending singular value:
/// a = u · diag(sigma) · vt, with vt the adjoint of the right factor.
pub struct Svd<T: Scalar> {
    pub u: CMat<T>,
    pub vt: CMat<T>,
    pub sigma: Vec<T>,
}

const SVD_MAX_SWEEPS: usize = 10_000;

/// Full (thin) SVD. Panics only if the iteration fails to converge, which at
/// the dense desk-scale sizes used here indicates a bug rather than bad data.
pub fn svd<T: Scalar>(a: &CMat<T>) -> Svd<T> {
    assert!(
        a.nrows() > 0 && a.ncols() > 0,
        "svd of an empty matrix (callers skip absent blocks)"
    );
    let dec = nalgebra::SVD::try_new(a.clone(), true, true, T::eps(), SVD_MAX_SWEEPS)
        .expect("SVD did not converge");
    let u = dec.u.expect("svd requested u");
    let vt = dec.v_t.expect("svd requested v_t");
    let sv = dec.singular_values;

    // Defensive ordering: sort descending and permute the factors to match.
    let k = sv.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
    let sigma: Vec<T> = order.iter().map(|&i| sv[i]).collect();
    let mut u_s = CMat::<T>::zeros(u.nrows(), k);
    let mut vt_s = CMat::<T>::zeros(k, vt.ncols());
    for (dst, &src) in order.iter().enumerate() {
        u_s.set_column(dst, &u.column(src));
        vt_s.set_row(dst, &vt.row(src));
    }
    Svd { u: u_s, vt: vt_s, sigma }
}

/// Singular values only, descending.
pub fn singular_values<T: Scalar>(a: &CMat<T>) -> Vec<T> {
    let mut sv: Vec<T> = nalgebra::SVD::try_new(a.clone(), false, false, T::eps(), SVD_MAX_SWEEPS)
        .expect("SVD did not converge")
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Smallest singular value (of the thin decomposition, i.e. the
/// min(m,n)-th one).
pub fn sigma_min<T: Scalar>(a: &CMat<T>) -> T {
    *singular_values(a).last().unwrap()
}

/// Largest singular value = spectral norm.
pub fn sigma_max<T: Scalar>(a: &CMat<T>) -> T {
    if a.nrows() == 0 || a.ncols() == 0 {
        return T::zero();
    }
    singular_values(a)[0]
}

/// Spectral norm, alias of [`sigma_max`].
pub fn two_norm<T: Scalar>(a: &CMat<T>) -> T {
    sigma_max(a)
}

impl<T: Scalar> Svd<T> {
    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    pub fn sigma_min(&self) -> T {
        self.sigma.last().copied().unwrap_or_else(T::zero)
    }

    /// Truncation threshold max(m,n)·ε·σ_max.
    pub fn default_tol(&self) -> T {
        let maxdim = self.u.nrows().max(self.vt.ncols());
        T::fr(maxdim as f64) * T::eps() * self.sigma_max()
    }

    /// Numerical rank at the default threshold.
    pub fn rank(&self) -> usize {
        let tol = self.default_tol();
        self.sigma.iter().filter(|&&s| s > tol).count()
    }

    /// Minimum-norm least-squares solution of a·x = b: x = v·Σ⁺·uᴴ·b with
    /// singular values at or below the default threshold treated as zero.
    pub fn min_norm_solve(&self, b: &CMat<T>) -> CMat<T> {
        let tol = self.default_tol();
        let mut y = self.u.adjoint() * b;
        for (i, &s) in self.sigma.iter().enumerate() {
            let f = if s > tol {
                Complex::new(T::one() / s, T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            };
            let scaled = y.row(i) * f;
            y.set_row(i, &scaled);
        }
        self.vt.adjoint() * y
    }

    /// Moore–Penrose pseudoinverse at the default threshold.
    pub fn pseudoinverse(&self) -> CMat<T> {
        let m = self.u.nrows();
        self.min_norm_solve(&CMat::identity(m, m))
    }
}

/// Numerical rank at the max(m,n)·ε·σ_max threshold.
pub fn rank<T: Scalar>(a: &CMat<T>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = singular_values(a);
    let tol = T::fr(a.nrows().max(a.ncols()) as f64) * T::eps() * sv[0];
    sv.iter().filter(|&&s| s > tol).count()
}

/// Solve a·x = b by LU with partial pivoting.
pub fn solve<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> Result<CMat<T>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Degenerate("LU solve: matrix is singular".into()))
}

/// Inverse by LU; errors on singular input.
pub fn inverse<T: Scalar>(a: &CMat<T>) -> Result<CMat<T>> {
    a.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("inverse: matrix is singular".into()))
}

/// Minimum-norm least-squares solve for a single right-hand side vector.
pub fn min_norm_solve_vec<T: Scalar>(a: &CMat<T>, b: &CVec<T>) -> CVec<T> {
    let bm = CMat::from_column_slice(b.len(), 1, b.as_slice());
    let x = svd(a).min_norm_solve(&bm);
    CVec::from_column_slice(x.as_slice())
}
