//! Block Kronecker linearizations of rational matrices and the companion
//! machinery used to cross-check them.
//!
//! A rational matrix is carried as a quadruple {A, B, C, D(λ)} with transfer
//! function R(λ) = C(λI−A)⁻¹B + D(λ). For a polynomial part of degree
//! d = ε+η+1 ≥ 2 the linearization S(λ) is assembled on a 3×3 block grid
//!
//! ```text
//!   [ M(λ)      K̂₂ᵀC     L_ηᵀ(λ)⊗I_m ]      rows: (η+1)m, ℓ, εn
//!   [ B·K̂₁     A−λI_ℓ    0           ]      cols: (ε+1)n, ℓ, ηm
//!   [ L_ε(λ)⊗I_n  0       0           ]
//! ```
//!
//! where K̂₁ = e_{ε+1}ᵀ⊗I_n and K̂₂ = e_{η+1}ᵀ⊗I_m pick the last block
//! column / row, so B occupies the last n columns of its block and C the
//! last m rows of its own. When η = 0 (or ε = 0) the corresponding L block
//! and its grid row/column are simply absent and K̂ degenerates to an
//! identity. Degree ≤ 1 rational matrices use the smaller [`build_linear_s`]
//! form instead.
//!
//! The M(λ) block is one particular pencil with
//! D(λ) = (Λ_η(λ)⊗I_m)ᵀ M(λ) (Λ_ε(λ)⊗I_n); the choice here places every
//! coefficient of D exactly once (see [`build_m`]), which makes
//! ‖M‖_F = ‖D‖_F hold to the last bit.

use num_complex::Complex;

use crate::dense;
use crate::errors::{Error, Result};
use crate::linalg;
use crate::pencil_core::{structural_blocks, Pencil, PolyMatrix, RationalQuadruple};
use crate::scalar::Scalar;
use crate::CMat;

/// A block Kronecker linearization together with its grid bookkeeping.
#[derive(Debug, Clone)]
pub struct BlockKroneckerPencil<T: Scalar> {
    pub s: Pencil<T>,
    pub m: usize,
    pub n: usize,
    /// State dimension ℓ of the quadruple.
    pub state_dim: usize,
    pub eps: usize,
    pub eta: usize,
    /// Row boundaries of the 3 block rows: [0, (η+1)m, (η+1)m+ℓ, total].
    pub row_offsets: [usize; 4],
    /// Column boundaries of the 3 block columns: [0, (ε+1)n, (ε+1)n+ℓ, total].
    pub col_offsets: [usize; 4],
}

impl<T: Scalar> BlockKroneckerPencil<T> {
    pub fn shape(&self) -> (usize, usize) {
        self.s.shape()
    }

    /// Grid block (i, j) with i, j in 0..3, as its own pencil.
    pub fn block(&self, i: usize, j: usize) -> Pencil<T> {
        let r0 = self.row_offsets[i];
        let c0 = self.col_offsets[j];
        self.s.block(
            r0,
            c0,
            self.row_offsets[i + 1] - r0,
            self.col_offsets[j + 1] - c0,
        )
    }

    pub fn fro_norm(&self) -> T {
        self.s.fro_norm()
    }
}

/// Place the coefficients of D on the (η+1)×(ε+1) block grid so that
/// (Λ_η⊗I_m)ᵀ M(λ) (Λ_ε⊗I_n) = D(λ) and ‖M‖_F = ‖D‖_F.
///
/// Grid position (i, j) carries the monomial weight
/// e(i,j) = (η−i) + (ε−j) (zero based). The walk starts at (0,0), steps
/// diagonally until it hits the bottom or right edge, then continues two
/// cells at a time along that edge; the t-th stop receives λD_{e+1} + D_e
/// with e = d−1−2(t−1), which always equals the weight of the cell. For
/// even d the leftover D₀ lands alone in the bottom-right corner.
pub fn build_m<T: Scalar>(d: &PolyMatrix<T>, eps: usize, eta: usize) -> Result<Pencil<T>> {
    let deg = d.degree();
    if deg != eps + eta + 1 {
        return Err(Error::Structure(format!(
            "build_m needs degree(D) = eps + eta + 1; got degree {deg} with eps={eps}, eta={eta}"
        )));
    }
    let (m, n) = (d.nrows(), d.ncols());
    let mut out = Pencil::zeros((eta + 1) * m, (eps + 1) * n);
    let (mut bi, mut bj) = (0usize, 0usize);
    let mut e = deg - 1;
    loop {
        debug_assert_eq!(e, (eta - bi) + (eps - bj));
        dense::set_block(&mut out.p1, bi * m, bj * n, d.coeff(e + 1));
        dense::set_block(&mut out.p0, bi * m, bj * n, d.coeff(e));
        if e <= 1 {
            break;
        }
        e -= 2;
        if bi < eta && bj < eps {
            bi += 1;
            bj += 1;
        } else if bi == eta {
            bj += 2;
        } else {
            bi += 2;
        }
    }
    if deg % 2 == 0 {
        dense::set_block(&mut out.p0, eta * m, eps * n, d.coeff(0));
    }
    Ok(out)
}

/// Read D(λ) back out of any pencil of the right size:
/// D_k = Σ_{e(i,j)=k} M⁰_{ij} + Σ_{e(i,j)=k−1} M¹_{ij}, equal to
/// (Λ_η⊗I_m)ᵀ M(λ) (Λ_ε⊗I_n) as a polynomial. Inverse of [`build_m`] on
/// its own output; on arbitrary input the coefficient norm can grow by at
/// most [`d_recovery_growth`].
pub fn recover_d<T: Scalar>(
    mp: &Pencil<T>,
    eps: usize,
    eta: usize,
    m: usize,
    n: usize,
) -> Result<PolyMatrix<T>> {
    if mp.nrows() != (eta + 1) * m || mp.ncols() != (eps + 1) * n {
        return Err(Error::Dimension(format!(
            "recover_d expected a {}x{} pencil, got {}x{}",
            (eta + 1) * m,
            (eps + 1) * n,
            mp.nrows(),
            mp.ncols()
        )));
    }
    let deg = eps + eta + 1;
    let mut coeffs = vec![CMat::<T>::zeros(m, n); deg + 1];
    for bi in 0..=eta {
        for bj in 0..=eps {
            let e = (eta - bi) + (eps - bj);
            coeffs[e] += dense::get_block(&mp.p0, bi * m, bj * n, m, n);
            coeffs[e + 1] += dense::get_block(&mp.p1, bi * m, bj * n, m, n);
        }
    }
    PolyMatrix::new(coeffs)
}

/// Worst-case growth of ‖recover_d(M)‖_F over ‖M‖_F: √(2·min(ε+1, η+1)).
pub fn d_recovery_growth<T: Scalar>(eps: usize, eta: usize) -> T {
    T::fr(2.0 * ((eps + 1).min(eta + 1) as f64)).sqrt()
}

/// Assemble the block Kronecker linearization of the quadruple for the
/// split d = ε + η + 1. Needs max(ε, η) > 0; degree ≤ 1 inputs go through
/// [`build_linear_s`].
pub fn build_s<T: Scalar>(
    q: &RationalQuadruple<T>,
    eps: usize,
    eta: usize,
) -> Result<BlockKroneckerPencil<T>> {
    if eps == 0 && eta == 0 {
        return Err(Error::Structure(
            "build_s needs max(eps, eta) > 0; use build_linear_s for degree <= 1".into(),
        ));
    }
    let (m, n, l) = (q.m(), q.n(), q.state_dim());
    let mm = build_m(&q.d, eps, eta)?;
    let row_offsets = [
        0,
        (eta + 1) * m,
        (eta + 1) * m + l,
        (eta + 1) * m + l + eps * n,
    ];
    let col_offsets = [
        0,
        (eps + 1) * n,
        (eps + 1) * n + l,
        (eps + 1) * n + l + eta * m,
    ];
    let mut s = Pencil::zeros(row_offsets[3], col_offsets[3]);
    s.set_block(0, 0, &mm);
    // C sits in the last m rows of grid block (0,1), B in the last n
    // columns of grid block (1,0)
    dense::set_block(&mut s.p0, eta * m, col_offsets[1], &q.c);
    dense::set_block(&mut s.p0, row_offsets[1], eps * n, &q.b);
    dense::set_block(&mut s.p0, row_offsets[1], col_offsets[1], &q.a);
    let neg = Complex::new(-T::one(), T::zero());
    for i in 0..l {
        s.p1[(row_offsets[1] + i, col_offsets[1] + i)] = neg;
    }
    if eta > 0 {
        let sb = structural_blocks::<T>(eta, m)?;
        s.set_block(0, col_offsets[2], &sb.lkron.transpose());
    }
    if eps > 0 {
        let sb = structural_blocks::<T>(eps, n)?;
        s.set_block(row_offsets[2], 0, &sb.lkron);
    }
    Ok(BlockKroneckerPencil {
        s,
        m,
        n,
        state_dim: l,
        eps,
        eta,
        row_offsets,
        col_offsets,
    })
}

/// Polynomial system matrix [[λI−A, −B], [C, D(λ)]] of size (ℓ+m)×(ℓ+n),
/// returned with degree max(1, d). Its Frobenius norm equals the quadruple
/// norm exactly.
pub fn build_p<T: Scalar>(q: &RationalQuadruple<T>) -> PolyMatrix<T> {
    let (m, n, l) = (q.m(), q.n(), q.state_dim());
    let d = q.degree();
    let deg = d.max(1);
    let mut coeffs = vec![CMat::<T>::zeros(l + m, l + n); deg + 1];
    dense::set_block(&mut coeffs[0], 0, 0, &(-&q.a));
    dense::set_block(&mut coeffs[0], 0, l, &(-&q.b));
    dense::set_block(&mut coeffs[0], l, 0, &q.c);
    let one = Complex::new(T::one(), T::zero());
    for i in 0..l {
        coeffs[1][(i, i)] = one;
    }
    for k in 0..=d {
        dense::set_block(&mut coeffs[k], l, l, q.d.coeff(k));
    }
    PolyMatrix::new(coeffs).expect("system matrix coefficients share a shape")
}

/// The compact linearization [[M(λ), C], [B, A−λI]] for rational matrices
/// whose polynomial part has degree ≤ 1, with M(λ) = D₀ + λD₁. Satisfies
/// ‖S‖_F = ‖q‖_F.
pub fn build_linear_s<T: Scalar>(q: &RationalQuadruple<T>) -> Result<Pencil<T>> {
    if q.degree() > 1 {
        return Err(Error::Structure(format!(
            "build_linear_s needs degree(D) <= 1, got {}",
            q.degree()
        )));
    }
    let (m, n, l) = (q.m(), q.n(), q.state_dim());
    let mut s = Pencil::zeros(m + l, n + l);
    dense::set_block(&mut s.p0, 0, 0, q.d.coeff(0));
    if q.degree() == 1 {
        dense::set_block(&mut s.p1, 0, 0, q.d.coeff(1));
    }
    dense::set_block(&mut s.p0, 0, n, &q.c);
    dense::set_block(&mut s.p0, m, 0, &q.b);
    dense::set_block(&mut s.p0, m, n, &q.a);
    let neg = Complex::new(-T::one(), T::zero());
    for i in 0..l {
        s.p1[(m + i, n + i)] = neg;
    }
    Ok(s)
}

/// First companion linearization of a square polynomial matrix, used as an
/// independent cross-check for the block Kronecker forms. For degree g and
/// size s the pencil is g·s × g·s with block rows
/// [P_{g−1} … P₁ P₀] over a −I subdiagonal, leading block diag(P_g, I, …).
pub fn companion_linearization<T: Scalar>(p: &PolyMatrix<T>) -> Result<Pencil<T>> {
    let s = p.nrows();
    if s != p.ncols() {
        return Err(Error::Structure(
            "companion linearization needs a square polynomial matrix".into(),
        ));
    }
    let g = p.degree();
    if g == 0 {
        return Ok(Pencil {
            p0: p.coeff(0).clone(),
            p1: CMat::zeros(s, s),
        });
    }
    if g == 1 {
        return Ok(Pencil {
            p0: p.coeff(0).clone(),
            p1: p.coeff(1).clone(),
        });
    }
    let nn = g * s;
    let mut p0m = CMat::<T>::zeros(nn, nn);
    let mut p1m = CMat::<T>::zeros(nn, nn);
    dense::set_block(&mut p1m, 0, 0, p.coeff(g));
    let one = Complex::new(T::one(), T::zero());
    for k in 1..g {
        for i in 0..s {
            p1m[(k * s + i, k * s + i)] = one;
        }
    }
    for j in 0..g {
        dense::set_block(&mut p0m, 0, j * s, p.coeff(g - 1 - j));
    }
    for k in 1..g {
        for i in 0..s {
            p0m[(k * s + i, (k - 1) * s + i)] = -one;
        }
    }
    Pencil::new(p0m, p1m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimalityReport {
    pub controllable: bool,
    pub observable: bool,
    pub minimal: bool,
}

/// Full-rank test of the Krylov block matrix [B, AB, …, A^{ℓ−1}B] with the
/// numerical-rank tolerance ℓ·ε·σ_max.
fn krylov_full_rank<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> bool {
    let l = a.nrows();
    if l == 0 {
        return true;
    }
    let n = b.ncols();
    if n == 0 {
        return false;
    }
    let mut k = CMat::<T>::zeros(l, l * n);
    let mut cur = b.clone();
    for j in 0..l {
        dense::set_block(&mut k, 0, j * n, &cur);
        if j + 1 < l {
            cur = a * &cur;
        }
    }
    let sv = linalg::singular_values(&k);
    let tol = T::fr(l as f64) * T::eps() * sv[0];
    sv.iter().filter(|&&s| s > tol).count() == l
}

/// Controllability of (A, B), observability of (A, C), and their
/// conjunction.
pub fn minimality_check<T: Scalar>(
    a: &CMat<T>,
    b: &CMat<T>,
    c: &CMat<T>,
) -> Result<MinimalityReport> {
    let l = a.nrows();
    if a.ncols() != l || b.nrows() != l || c.ncols() != l {
        return Err(Error::Dimension(format!(
            "minimality check with A {}x{}, B {}x{}, C {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let controllable = krylov_full_rank(a, b);
    let observable = krylov_full_rank(&a.transpose(), &c.transpose());
    Ok(MinimalityReport {
        controllable,
        observable,
        minimal: controllable && observable,
    })
}
