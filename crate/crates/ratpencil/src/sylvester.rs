//! Generalized Sylvester equations X(A₁−λB₁) + (A₂−λB₂)Y = Δᵃ−λΔᵇ, solved
//! densely through their Kronecker vectorization, plus the smallest singular
//! values of the four structured coefficient matrices that control how well a
//! perturbed block Kronecker pencil can be restored to its exact shape.
//!
//! Matching coefficients of λ⁰ and λ¹ and column-stacking turns the equation
//! into one linear system
//!
//! ```text
//!   [ A₁ᵀ⊗I_{m₂}   I_{n₁}⊗A₂ ] [vec X]   [vec Δᵃ]
//!   [ B₁ᵀ⊗I_{m₂}   I_{n₁}⊗B₂ ] [vec Y] = [vec Δᵇ]
//! ```
//!
//! (plain transpose, also over ℂ, because vec(XA) = (Aᵀ⊗I)vec X is a
//! transpose identity, not an adjoint one). When the first pencil has full
//! column normal rank, the second full row normal rank, and they share no
//! eigenvalue, the system is consistent for every right hand side and the
//! minimum-norm solution is bounded by ‖(Δᵃ,Δᵇ)‖_F / σ_{2m₂n₁}.
//!
//! The `omega` quantities are the σ_{2m₂n₁} values for the specific pencil
//! pairs appearing in a block Kronecker linearization: (A−λI, L_ε⊗I),
//! (L_ηᵀ⊗I, A−λI), (L_ηᵀ⊗I, L_ε⊗I), and the coupled E/F matrix behind the
//! repeated-L case. Each comes with an analytic lower bound, and the coupled
//! matrix is additionally decomposed by explicit row/column permutations into
//! a direct sum of upper bidiagonal ones-blocks, which is what pins down its
//! smallest singular value exactly.

use num_complex::Complex;

use crate::dense;
use crate::errors::{Error, Result};
use crate::linalg;
use crate::pencil_core::{structural_blocks, Pencil};
use crate::scalar::Scalar;
use crate::{CMat, CVec};

/// Vectorized form of X(A₁−λB₁) + (A₂−λB₂)Y = Δᵃ−λΔᵇ.
#[derive(Debug, Clone)]
pub struct SylvesterSystem<T: Scalar> {
    /// The 2m₂n₁ × (m₂m₁ + n₂n₁) Kronecker coefficient matrix.
    pub coeff: CMat<T>,
    /// vec(Δᵃ) stacked over vec(Δᵇ).
    pub rhs: CVec<T>,
    /// (m₁, n₁, m₂, n₂): the first pencil is m₁×n₁, the second m₂×n₂.
    pub shapes: (usize, usize, usize, usize),
}

/// Minimum-norm least-squares solution of a [`SylvesterSystem`].
#[derive(Debug, Clone)]
pub struct SylvesterSolution<T: Scalar> {
    pub x: CMat<T>,
    pub y: CMat<T>,
    /// 2-norm of coeff·[vec X; vec Y] − rhs. Zero (up to roundoff) exactly
    /// when the equation is consistent.
    pub residual: T,
    /// σ_{2m₂n₁}(coeff): the row-count-th singular value, i.e. zero whenever
    /// the system is overdetermined and hence cannot have full row rank.
    pub sigma_min: T,
}

/// Strict equivalence (I+X)⁻¹ · p_perturbed · (I−Y) ≈ p_target.
#[derive(Debug, Clone)]
pub struct EquivalenceRestoration<T: Scalar> {
    pub x: CMat<T>,
    pub y: CMat<T>,
    /// Whether the underlying Sylvester equation was consistent to roundoff,
    /// which is what makes the triple product reproduce the target.
    pub ok: bool,
    pub residual: T,
}

/// Assemble the vectorized system for X·p1 + p2·Y = delta, with every pencil
/// read as A−λB (so `Pencil { p0, p1 }` contributes A = p0 and B = −p1).
pub fn assemble<T: Scalar>(
    p1: &Pencil<T>,
    p2: &Pencil<T>,
    delta: &Pencil<T>,
) -> Result<SylvesterSystem<T>> {
    let (m1, n1) = p1.shape();
    let (m2, n2) = p2.shape();
    if m1 == 0 || n1 == 0 || m2 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument(
            "sylvester pencils must be nonempty".into(),
        ));
    }
    if delta.shape() != (m2, n1) {
        return Err(Error::Structure(format!(
            "delta must be {}x{} (rows of second pencil by columns of first), got {}x{}",
            m2,
            n1,
            delta.nrows(),
            delta.ncols()
        )));
    }

    let a1t = p1.p0.transpose();
    let b1t = p1.p1.map(|v| -v).transpose();
    let a2 = &p2.p0;
    let b2 = p2.p1.map(|v| -v);

    let rows = 2 * m2 * n1;
    let xcols = m2 * m1;
    let ycols = n2 * n1;
    let mut coeff = CMat::<T>::zeros(rows, xcols + ycols);
    dense::set_block(&mut coeff, 0, 0, &dense::kron(&a1t, &dense::eye(m2)));
    dense::set_block(&mut coeff, 0, xcols, &dense::kron(&dense::eye(n1), a2));
    dense::set_block(&mut coeff, m2 * n1, 0, &dense::kron(&b1t, &dense::eye(m2)));
    dense::set_block(&mut coeff, m2 * n1, xcols, &dense::kron(&dense::eye(n1), &b2));

    let mut rhs = CVec::<T>::zeros(rows);
    rhs.rows_mut(0, m2 * n1).copy_from(&dense::vec_of(&delta.p0));
    rhs.rows_mut(m2 * n1, m2 * n1)
        .copy_from(&dense::vec_of(&delta.p1.map(|v| -v)));

    Ok(SylvesterSystem {
        coeff,
        rhs,
        shapes: (m1, n1, m2, n2),
    })
}

/// Minimum-Frobenius-norm least-squares solution via the SVD pseudoinverse.
/// Inconsistency is reported through `residual`, never as an error.
pub fn min_norm_solve<T: Scalar>(sys: &SylvesterSystem<T>) -> SylvesterSolution<T> {
    let sol = linalg::min_norm_solve_vec(&sys.coeff, &sys.rhs);
    let residual = (&sys.coeff * &sol - &sys.rhs).norm();
    let sigma_min = if sys.coeff.nrows() <= sys.coeff.ncols() {
        linalg::sigma_min(&sys.coeff)
    } else {
        T::zero()
    };
    let (m1, n1, m2, n2) = sys.shapes;
    let x = dense::unvec(&CVec::from(sol.rows(0, m2 * m1)), m2, m1);
    let y = dense::unvec(&CVec::from(sol.rows(m2 * m1, n2 * n1)), n2, n1);
    SylvesterSolution {
        x,
        y,
        residual,
        sigma_min,
    }
}

/// Find the strict equivalence closest to the identity that maps a slightly
/// perturbed pencil back onto its target: solve X·target + perturbed·Y =
/// perturbed − target, after which (I+X)⁻¹ · perturbed · (I−Y) = target up
/// to the reported residual.
pub fn restore_equivalence<T: Scalar>(
    p_target: &Pencil<T>,
    p_perturbed: &Pencil<T>,
) -> Result<EquivalenceRestoration<T>> {
    if p_target.shape() != p_perturbed.shape() {
        return Err(Error::Dimension(format!(
            "pencils must agree in shape: {:?} vs {:?}",
            p_target.shape(),
            p_perturbed.shape()
        )));
    }
    let delta = Pencil::new(
        &p_perturbed.p0 - &p_target.p0,
        &p_perturbed.p1 - &p_target.p1,
    )?;
    let sys = assemble(p_target, p_perturbed, &delta)?;
    let sol = min_norm_solve(&sys);
    if linalg::two_norm(&sol.x) >= T::one() {
        return Err(Error::Degenerate(
            "correction X has 2-norm >= 1, I+X may not be safely invertible".into(),
        ));
    }
    let ok = sol.residual <= T::fr(1e2) * T::eps() * p_perturbed.fro_norm();
    Ok(EquivalenceRestoration {
        x: sol.x,
        y: sol.y,
        ok,
        residual: sol.residual,
    })
}

/// Which structured smallest singular value to compute, with its inputs.
/// The numbering follows the order in which the corresponding equations are
/// eliminated during restoration.
pub enum OmegaParams<'a, T: Scalar> {
    /// σ for the pair (A−λI_ℓ, L_ε⊗I_n). The n factor is dropped: it does
    /// not change the smallest singular value.
    One { a: &'a CMat<T>, eps: usize },
    /// σ for the pair (L_ηᵀ⊗I_m, A−λI_ℓ), with the m factor dropped.
    Two { a: &'a CMat<T>, eta: usize },
    /// σ for the pair (L_ηᵀ⊗I_m, L_ε⊗I_n), with both identity factors
    /// dropped.
    Three { eps: usize, eta: usize },
    /// σ of the coupled matrix [[E_kᵀ⊗I_k, I_{k+1}⊗E_k],[F_kᵀ⊗I_k,
    /// I_{k+1}⊗F_k]] from the repeated-L pair, replicated factors dropped.
    Four { k: usize },
}

/// A computed smallest singular value next to its analytic lower bound.
#[derive(Debug, Clone)]
pub struct OmegaReport<T: Scalar> {
    pub which: u8,
    pub omega: T,
    pub lower_bound: T,
    /// Parameters actually used; fields that do not apply are zero.
    pub eps: usize,
    pub eta: usize,
    pub k: usize,
    pub ell: usize,
    pub a_norm: T,
}

/// Compute one of the four structured smallest singular values together with
/// its analytic lower bound. The matrices are the size-reduced forms (Kronecker
/// identity factors that leave σ_min unchanged are dropped), so the SVDs stay
/// at a few hundred rows even for generous parameters.
pub fn omega<T: Scalar>(params: OmegaParams<'_, T>) -> Result<OmegaReport<T>> {
    let one = T::one();
    let two = T::fr(2.0);
    match params {
        OmegaParams::One { a, eps } => {
            let ell = square_dim(a)?;
            if eps == 0 {
                return Err(Error::InvalidArgument(
                    "eps = 0 leaves no equation to measure (the coupling block is void)".into(),
                ));
            }
            let sb = structural_blocks::<T>(eps, 1)?;
            // [[Aᵀ⊗I_ε, I_ℓ⊗E_ε], [I_ℓε, I_ℓ⊗F_ε]]
            let rows = 2 * ell * eps;
            let mut w = CMat::<T>::zeros(rows, ell * eps + ell * (eps + 1));
            dense::set_block(&mut w, 0, 0, &dense::kron(&a.transpose(), &dense::eye(eps)));
            dense::set_block(&mut w, 0, ell * eps, &dense::kron(&dense::eye(ell), &sb.e));
            dense::set_block(&mut w, ell * eps, 0, &dense::eye(ell * eps));
            dense::set_block(
                &mut w,
                ell * eps,
                ell * eps,
                &dense::kron(&dense::eye(ell), &sb.f),
            );
            let a_norm = linalg::two_norm(a);
            let lower_bound =
                one / (one + two * T::fr(eps as f64) * one.max(a_norm.powi(eps as i32)));
            Ok(OmegaReport {
                which: 1,
                omega: linalg::sigma_min(&w),
                lower_bound,
                eps,
                eta: 0,
                k: 0,
                ell,
                a_norm,
            })
        }
        OmegaParams::Two { a, eta } => {
            let ell = square_dim(a)?;
            if eta == 0 {
                return Err(Error::InvalidArgument(
                    "eta = 0 leaves no equation to measure (the coupling block is void)".into(),
                ));
            }
            let sb = structural_blocks::<T>(eta, 1)?;
            // [[E_η⊗I_ℓ, I_η⊗A], [F_η⊗I_ℓ, I_η⊗I_ℓ]]
            let rows = 2 * eta * ell;
            let mut w = CMat::<T>::zeros(rows, (eta + 1) * ell + eta * ell);
            dense::set_block(&mut w, 0, 0, &dense::kron(&sb.e, &dense::eye(ell)));
            dense::set_block(
                &mut w,
                0,
                (eta + 1) * ell,
                &dense::kron(&dense::eye(eta), a),
            );
            dense::set_block(&mut w, eta * ell, 0, &dense::kron(&sb.f, &dense::eye(ell)));
            dense::set_block(
                &mut w,
                eta * ell,
                (eta + 1) * ell,
                &dense::eye(eta * ell),
            );
            let a_norm = linalg::two_norm(a);
            let lower_bound =
                one / (one + two * T::fr(eta as f64) * one.max(a_norm.powi(eta as i32)));
            Ok(OmegaReport {
                which: 2,
                omega: linalg::sigma_min(&w),
                lower_bound,
                eps: 0,
                eta,
                k: 0,
                ell,
                a_norm,
            })
        }
        OmegaParams::Three { eps, eta } => {
            if eps.min(eta) == 0 {
                return Err(Error::InvalidArgument(
                    "eps and eta must both be positive, otherwise the equation is void".into(),
                ));
            }
            let se = structural_blocks::<T>(eps, 1)?;
            let sh = structural_blocks::<T>(eta, 1)?;
            // [[E_η⊗I_ε, I_η⊗E_ε], [F_η⊗I_ε, I_η⊗F_ε]]
            let rows = 2 * eta * eps;
            let mut w = CMat::<T>::zeros(rows, (eta + 1) * eps + eta * (eps + 1));
            dense::set_block(&mut w, 0, 0, &dense::kron(&sh.e, &dense::eye(eps)));
            dense::set_block(
                &mut w,
                0,
                (eta + 1) * eps,
                &dense::kron(&dense::eye(eta), &se.e),
            );
            dense::set_block(&mut w, eta * eps, 0, &dense::kron(&sh.f, &dense::eye(eps)));
            dense::set_block(
                &mut w,
                eta * eps,
                (eta + 1) * eps,
                &dense::kron(&dense::eye(eta), &se.f),
            );
            let lower_bound = two * two.sqrt() / T::fr((eps + eta) as f64);
            Ok(OmegaReport {
                which: 3,
                omega: linalg::sigma_min(&w),
                lower_bound,
                eps,
                eta,
                k: 0,
                ell: 0,
                a_norm: T::zero(),
            })
        }
        OmegaParams::Four { k } => {
            if k == 0 {
                return Err(Error::InvalidArgument("k must be at least 1".into()));
            }
            let w = coupled_ef_matrix::<T>(k);
            let lower_bound = T::fr(3.0) / T::fr((4 * k - 1) as f64);
            Ok(OmegaReport {
                which: 4,
                omega: linalg::sigma_min(&w),
                lower_bound,
                eps: 0,
                eta: 0,
                k,
                ell: 0,
                a_norm: T::zero(),
            })
        }
    }
}

fn square_dim<T: Scalar>(a: &CMat<T>) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "state matrix must be square and nonempty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// k×k upper bidiagonal matrix of ones (main diagonal and superdiagonal).
pub fn bidiagonal_square<T: Scalar>(k: usize) -> CMat<T> {
    CMat::from_fn(k, k, |i, j| {
        if j == i || j == i + 1 {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// k×(k+1) upper bidiagonal matrix of ones, one column wider than square.
pub fn bidiagonal_wide<T: Scalar>(k: usize) -> CMat<T> {
    CMat::from_fn(k, k + 1, |i, j| {
        if j == i || j == i + 1 {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// [[E_kᵀ⊗I_k, I_{k+1}⊗E_k], [F_kᵀ⊗I_k, I_{k+1}⊗F_k]]: the 0/1 matrix whose
/// smallest singular value is the `Four` omega quantity. 2k(k+1) rows and
/// k² + (k+1)² columns, so one column more than rows.
fn coupled_ef_matrix<T: Scalar>(k: usize) -> CMat<T> {
    let sb = structural_blocks::<T>(k, 1).expect("k >= 1 checked by callers");
    let half = k * (k + 1);
    let mut w = CMat::<T>::zeros(2 * half, k * k + (k + 1) * (k + 1));
    dense::set_block(&mut w, 0, 0, &dense::kron(&sb.e.transpose(), &dense::eye(k)));
    dense::set_block(
        &mut w,
        0,
        k * k,
        &dense::kron(&dense::eye(k + 1), &sb.e),
    );
    dense::set_block(
        &mut w,
        half,
        0,
        &dense::kron(&sb.f.transpose(), &dense::eye(k)),
    );
    dense::set_block(
        &mut w,
        half,
        k * k,
        &dense::kron(&dense::eye(k + 1), &sb.f),
    );
    w
}

/// Row/column permutations turning the coupled E/F matrix into a direct sum
/// of upper bidiagonal ones-blocks.
#[derive(Debug, Clone)]
pub struct BidiagonalBlocks<T: Scalar> {
    /// Row order: permuted row i is original row perm_rows[i].
    pub perm_rows: Vec<usize>,
    pub perm_cols: Vec<usize>,
    /// Square blocks of odd sizes 1,1,3,3,…,2k−1,2k−1 followed by one
    /// 2k×(2k+1) wide block.
    pub blocks: Vec<CMat<T>>,
}

/// Decompose the coupled E/F matrix for parameter k into bidiagonal blocks by
/// explicit permutations. Every row and column of the matrix carries at most
/// two ones, so the nonzero pattern is a disjoint union of paths; following
/// each path from a column with a single one and reading off rows and columns
/// in visiting order produces exactly one bidiagonal block per path.
///
/// The result is verified twice before being returned: the permuted matrix
/// must equal the direct sum entry for entry (the entries are exact zeros and
/// ones), and the singular value multisets of both sides must agree.
pub fn permute_to_bidiagonal_blocks<T: Scalar>(k: usize) -> Result<BidiagonalBlocks<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let w = coupled_ef_matrix::<T>(k);
    let (nr, nc) = (w.nrows(), w.ncols());

    let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); nr];
    let mut col_adj: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for j in 0..nc {
        for i in 0..nr {
            if w[(i, j)] != Complex::new(T::zero(), T::zero()) {
                row_adj[i].push(j);
                col_adj[j].push(i);
            }
        }
    }
    if row_adj.iter().any(|a| a.is_empty() || a.len() > 2)
        || col_adj.iter().any(|a| a.is_empty() || a.len() > 2)
    {
        return Err(Error::Internal(
            "coupled matrix should have one or two ones in every row and column".into(),
        ));
    }

    // Walk each path starting from a column that carries a single one. Paths
    // alternate column, row, column, ... and end either at a row whose other
    // column is already consumed (square block) or at another single-one
    // column (the one wide block).
    let mut row_done = vec![false; nr];
    let mut col_done = vec![false; nc];
    let mut paths: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for start in 0..nc {
        if col_adj[start].len() != 1 || col_done[start] {
            continue;
        }
        let mut rows = Vec::new();
        let mut cols = vec![start];
        col_done[start] = true;
        let mut cur = start;
        loop {
            let Some(&r) = col_adj[cur].iter().find(|&&r| !row_done[r]) else {
                break;
            };
            row_done[r] = true;
            rows.push(r);
            let Some(&c) = row_adj[r].iter().find(|&&c| !col_done[c]) else {
                break;
            };
            col_done[c] = true;
            cols.push(c);
            cur = c;
        }
        paths.push((rows, cols));
    }
    if row_done.iter().any(|&d| !d) || col_done.iter().any(|&d| !d) {
        return Err(Error::Internal(
            "nonzero pattern did not decompose into paths from single-one columns".into(),
        ));
    }

    // Smallest blocks first; the wide block sorts last because it has the
    // most columns. First-row index breaks ties deterministically.
    paths.sort_by_key(|(rows, cols)| (cols.len(), rows[0]));

    let mut perm_rows = Vec::with_capacity(nr);
    let mut perm_cols = Vec::with_capacity(nc);
    let mut blocks = Vec::with_capacity(paths.len());
    for (rows, cols) in &paths {
        let block = if cols.len() == rows.len() {
            bidiagonal_square::<T>(rows.len())
        } else if cols.len() == rows.len() + 1 {
            bidiagonal_wide::<T>(rows.len())
        } else {
            return Err(Error::Internal(format!(
                "path with {} rows and {} columns is not bidiagonal",
                rows.len(),
                cols.len()
            )));
        };
        perm_rows.extend_from_slice(rows);
        perm_cols.extend_from_slice(cols);
        blocks.push(block);
    }

    // Entrywise check of the whole permuted matrix against the direct sum,
    // off-block zeros included. Entries are exact 0/1 so equality is exact.
    let zero = Complex::new(T::zero(), T::zero());
    for (pi, &ri) in perm_rows.iter().enumerate() {
        for (pj, &cj) in perm_cols.iter().enumerate() {
            let expected = direct_sum_entry(&blocks, pi, pj).unwrap_or(zero);
            if w[(ri, cj)] != expected {
                return Err(Error::Internal(format!(
                    "permuted entry ({pi},{pj}) disagrees with the direct sum"
                )));
            }
        }
    }

    let mut sv_blocks: Vec<T> = blocks
        .iter()
        .flat_map(|b| linalg::singular_values(b))
        .collect();
    sv_blocks.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let sv_full = linalg::singular_values(&w);
    if sv_full.len() != sv_blocks.len() {
        return Err(Error::Internal("singular value counts disagree".into()));
    }
    let tol = T::fr(1e3) * T::eps() * (T::one() + sv_full[0]);
    for (a, b) in sv_full.iter().zip(&sv_blocks) {
        if (*a - *b).abs() > tol {
            return Err(Error::Internal(format!(
                "singular value multisets disagree beyond {:e}",
                tol.to_f64_lossy()
            )));
        }
    }

    Ok(BidiagonalBlocks {
        perm_rows,
        perm_cols,
        blocks,
    })
}

fn direct_sum_entry<T: Scalar>(blocks: &[CMat<T>], i: usize, j: usize) -> Option<Complex<T>> {
    let (mut ro, mut co) = (0, 0);
    for b in blocks {
        if i < ro + b.nrows() && j < co + b.ncols() {
            if i >= ro && j >= co {
                return Some(b[(i - ro, j - co)]);
            }
            return None;
        }
        if i < ro + b.nrows() || j < co + b.ncols() {
            return None;
        }
        ro += b.nrows();
        co += b.ncols();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::{Cx64, Mat64, Pencil64};
    use std::f64::consts::PI;

    const EPS: f64 = f64::EPSILON;

    fn scalar_pencil(a: f64, b: f64) -> Pencil64 {
        // the 1x1 pencil a + lambda*b
        Pencil64::new(
            Mat64::from_element(1, 1, Cx64::new(a, 0.0)),
            Mat64::from_element(1, 1, Cx64::new(b, 0.0)),
        )
        .unwrap()
    }

    fn l_pencil(k: usize) -> Pencil64 {
        // L_k = E_k - lambda F_k
        let sb = structural_blocks::<f64>(k, 1).unwrap();
        Pencil64::new(sb.e.clone(), sb.f.map(|v| -v)).unwrap()
    }

    #[test]
    fn trivial_identity_pencils_with_zero_rhs() {
        let p = scalar_pencil(1.0, -1.0); // 1 - lambda
        let delta = Pencil64::zeros(1, 1);
        let sys = assemble(&p, &p, &delta).unwrap();
        assert_eq!(sys.coeff.shape(), (2, 2));
        let sol = min_norm_solve(&sys);
        assert_eq!(sol.x[(0, 0)], Cx64::new(0.0, 0.0));
        assert_eq!(sol.y[(0, 0)], Cx64::new(0.0, 0.0));
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn reconstruction_solves_to_floating_point_accuracy() {
        let mut rng = SplitMix64::new(0x51_1e57);
        for &(m1, n1, m2, n2) in &[(3, 2, 2, 4), (2, 2, 2, 2), (1, 3, 2, 2), (4, 1, 1, 4)] {
            let p1 = Pencil64::new(rng.randn_complex(m1, n1), rng.randn_complex(m1, n1)).unwrap();
            let p2 = Pencil64::new(rng.randn_complex(m2, n2), rng.randn_complex(m2, n2)).unwrap();
            let x: Mat64 = rng.randn_complex(m2, m1);
            let y: Mat64 = rng.randn_complex(n2, n1);
            // delta := X p1 + p2 Y, so the system is consistent by construction
            let d0 = &x * &p1.p0 + &p2.p0 * &y;
            let d1 = &x * &p1.p1 + &p2.p1 * &y;
            let delta = Pencil64::new(d0, d1).unwrap();
            let sys = assemble(&p1, &p2, &delta).unwrap();
            let sol = min_norm_solve(&sys);
            let scale = dense::fro_joint(&[&delta.p0, &delta.p1]);
            assert!(sol.residual <= 1e-12 * scale.max(1.0), "{}", sol.residual);
            // the returned pair solves both coefficient equations
            let a1 = &p1.p0;
            let b1 = p1.p1.map(|v| -v);
            let ra = &sol.x * a1 + &p2.p0 * &sol.y - &delta.p0;
            let rb = &sol.x * &b1 + p2.p1.map(|v| -v) * &sol.y - delta.p1.map(|v| -v);
            assert!(dense::fro(&ra) <= 1e-12 * scale.max(1.0));
            assert!(dense::fro(&rb) <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn disjoint_eigenvalues_make_every_rhs_consistent() {
        // first slot: the regular pencil 2 - lambda (eigenvalue 2, full
        // column rank); second slot: L_1, full row rank with no eigenvalues
        // at all. No shared eigenvalue, so consistency holds for any delta.
        let p1 = scalar_pencil(2.0, -1.0);
        let p2 = l_pencil(1);
        let mut rng = SplitMix64::new(42);
        for _ in 0..20 {
            let delta = Pencil64::new(rng.randn_complex(1, 1), rng.randn_complex(1, 1)).unwrap();
            let sys = assemble(&p1, &p2, &delta).unwrap();
            assert_eq!(sys.coeff.shape(), (2, 3));
            let sol = min_norm_solve(&sys);
            assert!(sol.residual <= 1e-12, "residual {}", sol.residual);
            assert!(sol.sigma_min > 0.0);
        }
    }

    #[test]
    fn min_norm_bound_holds_on_consistent_systems() {
        let mut rng = SplitMix64::new(7);
        for trial in 0..10usize {
            let n1 = 1 + trial % 3;
            let p1 = Pencil64::new(rng.randn_complex(n1, n1), rng.randn_complex(n1, n1)).unwrap();
            let p2 = l_pencil(2); // wide, keeps the system underdetermined
            let x: Mat64 = rng.randn_complex(2, n1);
            let y: Mat64 = rng.randn_complex(3, n1);
            let delta = Pencil64::new(
                &x * &p1.p0 + &p2.p0 * &y,
                &x * &p1.p1 + &p2.p1 * &y,
            )
            .unwrap();
            let sys = assemble(&p1, &p2, &delta).unwrap();
            let sol = min_norm_solve(&sys);
            let pair_norm = dense::fro_joint(&[&sol.x, &sol.y]);
            let rhs_norm = sys.rhs.norm();
            assert!(sol.residual <= 1e-10 * rhs_norm.max(1.0));
            assert!(
                pair_norm * sol.sigma_min <= rhs_norm * (1.0 + 1e-10),
                "bound violated: {} * {} > {}",
                pair_norm,
                sol.sigma_min,
                rhs_norm
            );
        }
    }

    #[test]
    fn shared_eigenvalue_reports_inconsistency() {
        // both pencils are lambda itself; the constant-coefficient equation
        // becomes 0 = 1, which no (X, Y) can fix
        let p = scalar_pencil(0.0, 1.0);
        let delta = scalar_pencil(1.0, 0.0);
        let sys = assemble(&p, &p, &delta).unwrap();
        let sol = min_norm_solve(&sys);
        assert!(sol.residual > 0.5, "residual {}", sol.residual);
        // brute-force cross-check: the rhs is outside the column space
        let mut aug = Mat64::zeros(sys.coeff.nrows(), sys.coeff.ncols() + 1);
        dense::set_block(&mut aug, 0, 0, &sys.coeff);
        for i in 0..sys.rhs.len() {
            aug[(i, sys.coeff.ncols())] = sys.rhs[i];
        }
        assert!(linalg::rank(&aug) > linalg::rank(&sys.coeff));
    }

    #[test]
    fn minimum_norm_is_actually_minimal() {
        let p1 = scalar_pencil(2.0, -1.0);
        let p2 = l_pencil(2);
        let mut rng = SplitMix64::new(11);
        let delta = Pencil64::new(rng.randn_complex(2, 1), rng.randn_complex(2, 1)).unwrap();
        let sys = assemble(&p1, &p2, &delta).unwrap();
        let sol = min_norm_solve(&sys);
        assert!(sol.residual <= 1e-12);

        let dec = linalg::svd(&sys.coeff);
        assert!(dec.rank() < sys.coeff.ncols(), "need a nontrivial null space");
        let pinv = dec.pseudoinverse();
        let mut packed = CVec::<f64>::zeros(sys.coeff.ncols());
        packed.rows_mut(0, 2).copy_from(&dense::vec_of(&sol.x));
        packed.rows_mut(2, 3).copy_from(&dense::vec_of(&sol.y));
        let base = packed.norm();
        for trial in 0..5 {
            // project a random vector onto the null space; adding any such
            // direction must strictly grow the norm of a minimum-norm point
            let w = dense::vec_of(&rng.randn_complex(sys.coeff.ncols(), 1));
            let z = &w - &pinv * (&sys.coeff * &w);
            let zn = z.norm();
            assert!(zn > 1e-8, "trial {trial} drew a zero null component");
            let bumped = (&packed + z * Cx64::new(0.1 * base / zn, 0.0)).norm();
            assert!(bumped >= base * 1.0049, "{} vs {}", bumped, base);
        }
    }

    #[test]
    fn restore_identity_perturbation_is_noop() {
        let p = l_pencil(2);
        let r = restore_equivalence(&p, &p).unwrap();
        assert!(r.ok);
        assert_eq!(dense::fro(&r.x), 0.0);
        assert_eq!(dense::fro(&r.y), 0.0);
    }

    fn triple_product_error(target: &Pencil64, perturbed: &Pencil64, x: &Mat64, y: &Mat64) -> f64 {
        let m = x.nrows();
        let n = y.ncols();
        let s_inv = linalg::inverse(&(dense::eye(m) + x)).unwrap();
        let t = dense::eye(n) - y;
        let m0 = &s_inv * &perturbed.p0 * &t;
        let m1 = &s_inv * &perturbed.p1 * &t;
        dense::fro_joint(&[&(&m0 - &target.p0), &(&m1 - &target.p1)])
    }

    #[test]
    fn restore_small_perturbation_of_kronecker_block() {
        let base = l_pencil(2);
        let target = Pencil64::new(
            dense::kron(&base.p0, &dense::eye(2)),
            dense::kron(&base.p1, &dense::eye(2)),
        )
        .unwrap();
        let mut rng = SplitMix64::new(0xb10c);
        let perturbed = Pencil64::new(
            &target.p0 + rng.randn_complex(4, 6) * Cx64::new(1e-8, 0.0),
            &target.p1 + rng.randn_complex(4, 6) * Cx64::new(1e-8, 0.0),
        )
        .unwrap();
        let r = restore_equivalence(&target, &perturbed).unwrap();
        assert!(r.ok, "residual {}", r.residual);
        let pair = dense::fro_joint(&[&r.x, &r.y]);
        assert!(pair > 0.0 && pair < 1e-6, "pair norm {pair}");
        let err = triple_product_error(&target, &perturbed, &r.x, &r.y);
        assert!(err <= 1e2 * EPS * perturbed.fro_norm(), "triple product {err}");
    }

    #[test]
    fn restore_reproduces_target_after_transformation() {
        let target = l_pencil(3);
        let mut rng = SplitMix64::new(0xfeed);
        let perturbed = Pencil64::new(
            &target.p0 + rng.randn_complex(3, 4) * Cx64::new(1e-9, 0.0),
            &target.p1 + rng.randn_complex(3, 4) * Cx64::new(1e-9, 0.0),
        )
        .unwrap();
        let r = restore_equivalence(&target, &perturbed).unwrap();
        assert!(r.ok);
        let err = triple_product_error(&target, &perturbed, &r.x, &r.y);
        assert!(err <= 1e-12, "triple product error {err}");
    }

    #[test]
    fn restore_rejects_large_corrections() {
        // a perturbation of norm comparable to the target forces X beyond
        // the safe invertibility threshold
        let target = l_pencil(2);
        let mut rng = SplitMix64::new(3);
        let perturbed = Pencil64::new(
            &target.p0 + rng.randn_complex(2, 3) * Cx64::new(10.0, 0.0),
            &target.p1 + rng.randn_complex(2, 3) * Cx64::new(10.0, 0.0),
        )
        .unwrap();
        match restore_equivalence(&target, &perturbed) {
            Err(Error::Degenerate(_)) => {}
            other => panic!("expected a degeneracy error, got {other:?}"),
        }
    }

    #[test]
    fn omega_three_closed_forms() {
        for &(eps, eta) in &[(1usize, 2usize), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)] {
            let rep = omega::<f64>(OmegaParams::Three { eps, eta }).unwrap();
            let expected = 2.0 * (PI / (4.0 * eps.min(eta) as f64 + 2.0)).sin();
            assert!(
                (rep.omega - expected).abs() <= 1e-12,
                "eps={eps} eta={eta}: {} vs {expected}",
                rep.omega
            );
        }
        for eta in 1..=3usize {
            let rep = omega::<f64>(OmegaParams::Three { eps: eta, eta }).unwrap();
            let expected = 2.0 * (PI / (4.0 * eta as f64)).sin();
            assert!((rep.omega - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn omega_four_closed_form() {
        for k in 1..=4usize {
            let rep = omega::<f64>(OmegaParams::Four { k }).unwrap();
            let expected = 2.0 * (PI / (8.0 * k as f64 - 2.0)).sin();
            assert!(
                (rep.omega - expected).abs() <= 1e-12,
                "k={k}: {} vs {expected}",
                rep.omega
            );
            assert!(rep.omega >= rep.lower_bound - 1e-12);
        }
    }

    #[test]
    fn omega_one_with_zero_state_matrix() {
        let a = Mat64::zeros(2, 2);
        let rep = omega::<f64>(OmegaParams::One { a: &a, eps: 1 }).unwrap();
        assert!((rep.lower_bound - 1.0 / 3.0).abs() <= 1e-15);
        assert!(rep.omega >= 1.0 / 3.0 - 1e-12, "omega {}", rep.omega);
    }

    #[test]
    fn omega_void_parameters_error() {
        assert!(matches!(
            omega::<f64>(OmegaParams::Three { eps: 0, eta: 2 }),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            omega::<f64>(OmegaParams::Three { eps: 2, eta: 0 }),
            Err(Error::InvalidArgument(_))
        ));
        let a = Mat64::zeros(2, 2);
        assert!(omega::<f64>(OmegaParams::One { a: &a, eps: 0 }).is_err());
        assert!(omega::<f64>(OmegaParams::Two { a: &a, eta: 0 }).is_err());
        assert!(omega::<f64>(OmegaParams::Four { k: 0 }).is_err());
    }

    #[test]
    fn omega_bounds_hold_across_parameter_sweep() {
        let mut rng = SplitMix64::new(0x03e9a);
        for ell in [1usize, 2, 3] {
            for norm_target in [0.5f64, 1.0, 2.0] {
                let mut a: Mat64 = rng.randn_complex(ell, ell);
                let nrm = linalg::two_norm(&a);
                a *= Cx64::new(norm_target / nrm, 0.0);
                for t in 1..=3usize {
                    let r1 = omega(OmegaParams::One { a: &a, eps: t }).unwrap();
                    assert!(
                        r1.omega >= r1.lower_bound - 1e-12,
                        "one: {} < {}",
                        r1.omega,
                        r1.lower_bound
                    );
                    let r2 = omega(OmegaParams::Two { a: &a, eta: t }).unwrap();
                    assert!(r2.omega >= r2.lower_bound - 1e-12);
                }
            }
        }
        for eps in 1..=3usize {
            for eta in 1..=3usize {
                let r = omega::<f64>(OmegaParams::Three { eps, eta }).unwrap();
                assert!(r.omega >= r.lower_bound - 1e-12);
            }
        }
        for k in 1..=3usize {
            let r = omega::<f64>(OmegaParams::Four { k }).unwrap();
            assert!(r.omega >= r.lower_bound - 1e-12);
        }
    }

    #[test]
    fn bidiagonal_singular_value_closed_forms() {
        for k in 1..=6usize {
            let sq = linalg::sigma_min(&bidiagonal_square::<f64>(k));
            let expected_sq = 2.0 * (PI / (4.0 * k as f64 + 2.0)).sin();
            assert!((sq - expected_sq).abs() <= 1e-12, "square k={k}");
            let wd = linalg::sigma_min(&bidiagonal_wide::<f64>(k));
            let expected_wd = 2.0 * (PI / (2.0 * k as f64 + 2.0)).sin();
            assert!((wd - expected_wd).abs() <= 1e-12, "wide k={k}");
        }
    }

    #[test]
    fn decomposition_block_sequence() {
        let d1 = permute_to_bidiagonal_blocks::<f64>(1).unwrap();
        let sizes: Vec<(usize, usize)> = d1.blocks.iter().map(|b| b.shape()).collect();
        assert_eq!(sizes, vec![(1, 1), (1, 1), (2, 3)]);

        let d3 = permute_to_bidiagonal_blocks::<f64>(3).unwrap();
        let sizes: Vec<(usize, usize)> = d3.blocks.iter().map(|b| b.shape()).collect();
        assert_eq!(
            sizes,
            vec![(1, 1), (1, 1), (3, 3), (3, 3), (5, 5), (5, 5), (6, 7)]
        );
    }

    #[test]
    fn decomposition_is_a_permutation_and_verifies() {
        for k in 1..=4usize {
            let d = permute_to_bidiagonal_blocks::<f64>(k).unwrap();
            let nr = 2 * k * (k + 1);
            let nc = k * k + (k + 1) * (k + 1);
            assert_eq!(d.perm_rows.len(), nr);
            assert_eq!(d.perm_cols.len(), nc);
            let mut rs = d.perm_rows.clone();
            rs.sort_unstable();
            assert_eq!(rs, (0..nr).collect::<Vec<_>>());
            let mut cs = d.perm_cols.clone();
            cs.sort_unstable();
            assert_eq!(cs, (0..nc).collect::<Vec<_>>());
        }
    }

    #[test]
    fn decomposition_singular_values_match_omega_four() {
        for k in 1..=3usize {
            let d = permute_to_bidiagonal_blocks::<f64>(k).unwrap();
            let min_block = d
                .blocks
                .iter()
                .map(|b| linalg::sigma_min(b))
                .fold(f64::INFINITY, f64::min);
            let rep = omega::<f64>(OmegaParams::Four { k }).unwrap();
            assert!((rep.omega - min_block).abs() <= 1e-12);
        }
    }
}
