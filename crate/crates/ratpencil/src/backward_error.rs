//! Structured backward error estimates for computed zeros of a rational
//! matrix.
//!
//! For each computed eigenvalue λᵢ the estimator finds the smallest dense
//! perturbation Δ⁽ⁱ⁾ that makes the evaluated system matrix P(λᵢ) singular,
//! then redistributes it onto the quadruple coefficients: the (1,1), (1,2)
//! and (2,1) blocks perturb A, B and C directly, while the (2,2) block is
//! spread over the numerator coefficients as ΔD_k = Δ₂₂λ̄ᵢᵏ/g(λᵢ) with
//! g(λ) = Σ_{k=0}^d |λ|^{2k}, which is the minimum norm way to hit Δ₂₂ at
//! λᵢ. The per-eigenvalue size r(λᵢ) of that coefficient 7-tuple, maximized
//! over the computed eigenvalues, is a lower bound for the global structured
//! backward error: it certifies each zero separately, not all of them at
//! once.
//!
//! The conjugate powers make the distributed ΔD_k complex at complex λᵢ
//! even for real data; they are kept complex here.

use num_complex::Complex;

use crate::dense;
use crate::linalg;
use crate::pencil_core::{PolyMatrix, RationalQuadruple};
use crate::{CMat, Scalar};

/// The minimal structured perturbation attached to one eigenvalue.
#[derive(Debug, Clone)]
pub struct LocalBackwardError<T: Scalar> {
    pub lambda_i: Complex<T>,
    /// Perturbation of A.
    pub delta_11: CMat<T>,
    /// Perturbation of B.
    pub delta_12: CMat<T>,
    /// Perturbation of C.
    pub delta_21: CMat<T>,
    /// The (2,2) block before distribution over the D coefficients.
    pub delta_22: CMat<T>,
    /// The distributed perturbation of D(λ), degree matching the quadruple.
    pub delta_d: PolyMatrix<T>,
    /// Frobenius norm of the coefficient 7-tuple.
    pub r_local: T,
    /// Normalizer g(λᵢ) = Σ_{k=0}^d |λᵢ|^{2k}.
    pub g_value: T,
    /// σ_min(P(λᵢ)) = norm of the dense singularizer.
    pub sigma_min: T,
}

impl<T: Scalar> LocalBackwardError<T> {
    /// Assemble the perturbation of the system matrix at a point:
    /// [[Δ₁₁, Δ₁₂], [Δ₂₁, ΔD(λ)]]. At λ = λᵢ this reproduces the dense
    /// singularizer.
    pub fn delta_p_at(&self, lambda: Complex<T>) -> CMat<T> {
        let l = self.delta_11.nrows();
        let m = self.delta_21.nrows();
        let n = self.delta_12.ncols();
        let mut out = CMat::zeros(l + m, l + n);
        dense::set_block(&mut out, 0, 0, &self.delta_11);
        dense::set_block(&mut out, 0, l, &self.delta_12);
        dense::set_block(&mut out, l, 0, &self.delta_21);
        dense::set_block(&mut out, l, l, &self.delta_d.eval(lambda));
        out
    }
}

/// Aggregate estimate over a set of computed eigenvalues.
#[derive(Debug, Clone)]
pub struct GlobalBackwardError<T: Scalar> {
    /// max over the per-eigenvalue estimates.
    pub r: T,
    /// r divided by the quadruple norm (the one counting the λ-identity).
    pub r_relative: T,
    pub per_eig: Vec<LocalBackwardError<T>>,
    /// Eigenvalues with non-finite components are not estimated.
    pub skipped_nonfinite: usize,
    pub warnings: Vec<String>,
}

/// The polynomial system matrix of the quadruple evaluated at a point:
/// [[A−λI, B], [C, D(λ)]]. With this sign convention adding
/// [[ΔA, ΔB], [ΔC, ΔD(λ)]] is the same as perturbing the quadruple
/// coefficients, which is what the estimator needs. (The pencil-building
/// code uses the equivalent form with the first block row negated; the
/// singular values agree.)
pub fn system_matrix_at<T: Scalar>(
    q: &RationalQuadruple<T>,
    lambda: Complex<T>,
) -> CMat<T> {
    let (m, n, l) = (q.m(), q.n(), q.state_dim());
    let mut p = CMat::zeros(l + m, l + n);
    let shifted = &q.a - dense::eye::<T>(l) * lambda;
    dense::set_block(&mut p, 0, 0, &shifted);
    dense::set_block(&mut p, 0, l, &q.b);
    dense::set_block(&mut p, l, 0, &q.c);
    dense::set_block(&mut p, l, l, &q.d.eval(lambda));
    p
}

fn singularizer_with_sigma<T: Scalar>(m: &CMat<T>) -> (CMat<T>, T) {
    let dec = linalg::svd(m);
    let k = dec.sigma.len();
    // repeated smallest singular values: the sort is stable, so the last
    // triplet is a deterministic choice among the minimizers
    let mut smin = dec.sigma[k - 1];
    let mut u = dec.u.column(k - 1).clone_owned();
    let v = dec.vt.row(k - 1).adjoint();
    // the iterative bidiagonal svd flushes singular values sitting near
    // eps * sigma_max down to exact zero, where dense solvers would report
    // a value at the eps * sigma_max rounding floor instead.  recover that
    // absolute-accuracy estimate from the right singular vector, which
    // stays reliable as long as the next singular value is well separated.
    // an exactly singular matrix still comes out as smin == 0
    let floor = T::fr(k as f64) * T::eps() * dec.sigma[0];
    if smin < floor {
        let w = m * &v;
        smin = w.norm();
        if smin > T::zero() {
            u = w * Complex::new(T::one() / smin, T::zero());
        }
    }
    let delta = &u * v.adjoint() * Complex::new(-smin, T::zero());
    (delta, smin)
}

/// The minimum Frobenius norm matrix Δ making M + Δ singular:
/// Δ = −σ_min·u·v* from the singular triplet of σ_min(M). Its norm is
/// σ_min(M); a zero σ_min yields Δ = 0.
pub fn rank_one_singularizer<T: Scalar>(m: &CMat<T>) -> CMat<T> {
    singularizer_with_sigma(m).0
}

/// Per-eigenvalue structured backward error estimate: evaluates P(λᵢ),
/// singularizes it minimally, partitions the perturbation on the
/// (ℓ+m)×(ℓ+n) grid and distributes the (2,2) block over the numerator
/// coefficients with the conjugate-power weights that minimize the
/// coefficient norm.
pub fn local_r<T: Scalar>(
    q: &RationalQuadruple<T>,
    lambda: Complex<T>,
) -> LocalBackwardError<T> {
    let (m, n, l) = (q.m(), q.n(), q.state_dim());
    let p = system_matrix_at(q, lambda);
    let (delta, smin) = singularizer_with_sigma(&p);

    let delta_11 = dense::get_block(&delta, 0, 0, l, l);
    let delta_12 = dense::get_block(&delta, 0, l, l, n);
    let delta_21 = dense::get_block(&delta, l, 0, m, l);
    let delta_22 = dense::get_block(&delta, l, l, m, n);

    let d = q.degree();
    // |λ|² as re²+im², so dyadic eigenvalues keep g exact
    let t = lambda.norm_sqr();
    let mut g = T::one();
    let mut pw = T::one();
    for _ in 0..d {
        pw *= t;
        g += pw;
    }

    let conj = lambda.conj();
    let mut w = Complex::new(T::one(), T::zero());
    let mut coeffs = Vec::with_capacity(d + 1);
    for _ in 0..=d {
        let f = Complex::new(w.re / g, w.im / g);
        coeffs.push(&delta_22 * f);
        w *= conj;
    }
    let delta_d = PolyMatrix::new(coeffs).expect("distributed coefficients share a shape");

    let n11 = dense::fro(&delta_11);
    let n12 = dense::fro(&delta_12);
    let n21 = dense::fro(&delta_21);
    let n22 = dense::fro(&delta_22);
    let r_local = (n11 * n11 + n12 * n12 + n21 * n21 + n22 * n22 / g).sqrt();

    let local = LocalBackwardError {
        lambda_i: lambda,
        delta_11,
        delta_12,
        delta_21,
        delta_22,
        delta_d,
        r_local,
        g_value: g,
        sigma_min: smin,
    };
    debug_assert!(
        dense::fro(&(&local.delta_p_at(lambda) - &delta))
            <= T::fr(1e3) * T::eps() * smin.max(T::eps()),
        "distributed perturbation does not reproduce the dense singularizer"
    );
    local
}

/// Maximum of the local estimates over the finite entries of the eigenvalue
/// list. Non-finite entries are counted and skipped; an empty effective
/// list reports r = 0 with a warning.
pub fn global_r<T: Scalar>(
    q: &RationalQuadruple<T>,
    eigenvalues: &[Complex<T>],
) -> GlobalBackwardError<T> {
    let mut per_eig = Vec::new();
    let mut skipped = 0usize;
    for &z in eigenvalues {
        if z.re.to_f64_lossy().is_finite() && z.im.to_f64_lossy().is_finite() {
            per_eig.push(local_r(q, z));
        } else {
            skipped += 1;
        }
    }
    let mut warnings = Vec::new();
    if per_eig.is_empty() {
        warnings.push("no finite eigenvalues to estimate; r = 0".to_string());
    }
    let r = per_eig
        .iter()
        .map(|e| e.r_local)
        .fold(T::zero(), |a, b| a.max(b));
    let nf = q.norm_f();
    let r_relative = if nf > T::zero() { r / nf } else { T::zero() };
    GlobalBackwardError {
        r,
        r_relative,
        per_eig,
        skipped_nonfinite: skipped,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver;
    use crate::linearization;
    use crate::rng::SplitMix64;
    use crate::scaling;
    use crate::{Cx64, Mat64, PolyMatrix64, Quadruple64};

    fn c(re: f64, im: f64) -> Cx64 {
        Cx64::new(re, im)
    }

    fn random_quadruple(
        rng: &mut SplitMix64,
        m: usize,
        n: usize,
        l: usize,
        deg: usize,
    ) -> Quadruple64 {
        let a = rng.randn_complex(l, l);
        let b = rng.randn_complex(l, n);
        let cc = rng.randn_complex(m, l);
        let coeffs = (0..=deg).map(|_| rng.randn_complex(m, n)).collect();
        Quadruple64::new(a, b, cc, PolyMatrix64::new(coeffs).unwrap()).unwrap()
    }

    /// Nearest singular matrix to m, by zeroing the smallest singular value.
    fn truncate_to_singular(m: &Mat64) -> Mat64 {
        let dec = linalg::svd(m);
        let k = dec.sigma.len();
        let mut s = Mat64::zeros(k, k);
        for i in 0..k - 1 {
            s[(i, i)] = c(dec.sigma[i], 0.0);
        }
        &dec.u * s * &dec.vt
    }

    #[test]
    fn singularizer_removes_the_smallest_direction() {
        let eye = dense::eye::<f64>(2);
        let delta = rank_one_singularizer(&eye);
        assert!((dense::fro(&delta) - 1.0).abs() <= 1e-14);
        let sum = &eye + &delta;
        assert!(linalg::sigma_min(&sum) <= 4.0 * f64::EPSILON);

        let m = Mat64::from_diagonal(&crate::CVec::from_vec(vec![
            c(3.0, 0.0),
            c(1e-5, 0.0),
        ]));
        let delta = rank_one_singularizer(&m);
        assert!((dense::fro(&delta) - 1e-5).abs() <= 1e-19);
        let sum = &m + &delta;
        assert!(linalg::sigma_min(&sum) <= 2.0 * f64::EPSILON * 3.0);
        // the large direction is untouched
        assert!((dense::cmod(sum[(0, 0)]) - 3.0).abs() <= 1e-14);
    }

    #[test]
    fn singularizer_is_minimal_among_singular_targets() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..20 {
            let m: Mat64 = rng.randn_complex(4, 4);
            let smin = linalg::sigma_min(&m);
            let delta = rank_one_singularizer(&m);
            assert!((dense::fro(&delta) - smin).abs() <= 1e-14 * smin.max(1e-30));
            for _ in 0..10 {
                // any singular matrix is at least σ_min away from m
                let noise: Mat64 = rng.randn_complex(4, 4) * c(smin, 0.0);
                let target = truncate_to_singular(&(&m + &noise));
                let dist = dense::fro(&(&target - &m));
                assert!(
                    dist >= smin * (1.0 - 1e-10),
                    "singular target closer than sigma_min: {dist:.3e} vs {smin:.3e}"
                );
            }
        }
    }

    #[test]
    fn zero_lambda_keeps_the_whole_block_in_the_constant_coefficient() {
        let mut rng = SplitMix64::new(11);
        let q = random_quadruple(&mut rng, 2, 2, 5, 3);
        let e = local_r(&q, c(0.0, 0.0));
        assert_eq!(e.g_value, 1.0);
        assert_eq!(*e.delta_d.coeff(0), e.delta_22);
        for k in 1..=3 {
            assert_eq!(dense::fro(e.delta_d.coeff(k)), 0.0);
        }
        // with g = 1 the tuple norm is the dense singularizer norm
        assert!((e.r_local - e.sigma_min).abs() <= 1e-14 * e.sigma_min);
    }

    #[test]
    fn exactly_singular_system_matrix_gives_zero_estimate() {
        // R(λ) = 1/λ + 2 has its zero at λ = −1/2, and P(−1/2) is exactly
        // singular in floating point: [[1/2, 1], [1, 2]]
        let a = Mat64::from_element(1, 1, c(0.0, 0.0));
        let b = Mat64::from_element(1, 1, c(1.0, 0.0));
        let cc = Mat64::from_element(1, 1, c(1.0, 0.0));
        let d = PolyMatrix64::new(vec![Mat64::from_element(1, 1, c(2.0, 0.0))]).unwrap();
        let q = Quadruple64::new(a, b, cc, d).unwrap();
        let e = local_r(&q, c(-0.5, 0.0));
        assert!(e.r_local <= 1e-14, "estimate at an exact zero: {:.3e}", e.r_local);
    }

    #[test]
    fn distribution_matches_the_dense_min_norm_oracle() {
        let mut rng = SplitMix64::new(13);
        let q = random_quadruple(&mut rng, 2, 2, 5, 3);
        let lam = c(1.0, 1.0);
        let e = local_r(&q, lam);
        assert_eq!(e.g_value, 15.0);

        // per entry of Δ₂₂, solve min ‖x‖ s.t. [1 λ λ² λ³]·x = Δ₂₂[r,c]
        // through the SVD least-squares path, independently of the closed
        // form used by local_r
        let mut vand = Mat64::zeros(1, 4);
        let mut p = c(1.0, 0.0);
        for k in 0..4 {
            vand[(0, k)] = p;
            p *= lam;
        }
        let mut dist_sq = 0.0f64;
        for r in 0..2 {
            for col in 0..2 {
                let rhs = crate::CVec::from_vec(vec![e.delta_22[(r, col)]]);
                let x = linalg::min_norm_solve_vec(&vand, &rhs);
                for k in 0..4 {
                    let got = e.delta_d.coeff(k)[(r, col)];
                    assert!(
                        dense::cmod(got - x[k]) <= 1e-12 * dense::fro(&e.delta_22),
                        "coefficient ({r},{col}) power {k} disagrees with the oracle"
                    );
                    dist_sq += dense::cmod(x[k]).powi(2);
                }
            }
        }
        // tuple norm recomputed from the oracle solution
        let fixed = [&e.delta_11, &e.delta_12, &e.delta_21];
        let mut want = dist_sq;
        for blk in fixed {
            want += dense::fro(blk).powi(2);
        }
        let want = want.sqrt();
        assert!((e.r_local - want).abs() <= 1e-12 * want.max(1e-30));
    }

    #[test]
    fn distributed_perturbation_reproduces_the_singularizer() {
        let mut rng = SplitMix64::new(17);
        for trial in 0..6u32 {
            let q = random_quadruple(&mut rng, 2, 2, 4, 3);
            let lam = c(rng.normal(), rng.normal());
            let e = local_r(&q, lam);
            let p = system_matrix_at(&q, lam);
            let dense_delta = rank_one_singularizer(&p);
            let rebuilt = e.delta_p_at(lam);
            assert!(
                dense::fro(&(&rebuilt - &dense_delta)) <= 1e-13 * e.sigma_min.max(1e-30),
                "trial {trial}: reconstruction drift"
            );
            // and the perturbed matrix is numerically singular
            let perturbed = &p + &rebuilt;
            assert!(
                linalg::sigma_min(&perturbed) <= 1e-12 * linalg::sigma_max(&p),
                "trial {trial}: perturbed system matrix is far from singular"
            );
        }
    }

    #[test]
    fn global_r_is_an_index_stable_max() {
        let mut rng = SplitMix64::new(19);
        let q = random_quadruple(&mut rng, 2, 2, 3, 2);
        let z1 = c(0.3, -0.2);
        let z2 = c(-1.1, 0.5);

        let single = global_r(&q, &[z1]);
        assert_eq!(single.per_eig.len(), 1);
        assert_eq!(single.r, single.per_eig[0].r_local);

        let doubled = global_r(&q, &[z1, z1, z2]);
        let plain = global_r(&q, &[z2, z1]);
        assert_eq!(doubled.r, plain.r);
        assert!((plain.r_relative - plain.r / q.norm_f()).abs() <= 1e-15 * plain.r_relative);

        let empty = global_r(&q, &[]);
        assert_eq!(empty.r, 0.0);
        assert_eq!(empty.warnings.len(), 1);

        let with_inf = global_r(&q, &[z1, c(f64::INFINITY, 0.0)]);
        assert_eq!(with_inf.skipped_nonfinite, 1);
        assert_eq!(with_inf.per_eig.len(), 1);
    }

    #[test]
    fn estimator_agrees_with_an_independent_system_matrix_path() {
        let mut rng = SplitMix64::new(23);
        let mut q = random_quadruple(&mut rng, 2, 2, 5, 3);
        q = Quadruple64::new(
            &q.a * c(1e3, 0.0),
            q.b.clone(),
            q.c.clone(),
            q.d.clone(),
        )
        .unwrap();
        let (q_hat, sr) = scaling::scale_quadruple(&q, true).unwrap();
        for trial in 0..5u32 {
            let lam = c(rng.normal(), rng.normal());
            let mapped = lam * c(sr.d_lambda, 0.0);
            let e = local_r(&q_hat, mapped);
            // build_p evaluates the system matrix with the first block row
            // negated; singular values are identical
            let alt = linearization::build_p(&q_hat).eval(mapped);
            let smin_alt = linalg::sigma_min(&alt);
            assert!(
                (e.sigma_min - smin_alt).abs() <= 1e-12 * smin_alt.max(1e-30),
                "trial {trial}: sigma_min mismatch"
            );
            assert!(e.r_local <= e.sigma_min * (1.0 + 1e-14));
        }
    }

    #[test]
    fn scaling_shrinks_the_pipeline_estimate_for_large_state_norms() {
        let mut rng = SplitMix64::new(29);
        let mut q = random_quadruple(&mut rng, 2, 2, 5, 3);
        let f = 1e6 / dense::fro(&q.a);
        q = Quadruple64::new(
            &q.a * c(f, 0.0),
            q.b.clone(),
            q.c.clone(),
            q.d.clone(),
        )
        .unwrap();

        let z = eigensolver::zeros(&q, 1, 1).unwrap().finite();
        let r_unscaled = global_r(&q, &z).r;

        let (q_hat, sr) = scaling::scale_quadruple(&q, true).unwrap();
        let z_hat = eigensolver::zeros(&q_hat, 1, 1).unwrap().finite();
        let r_scaled = global_r(&q_hat, &z_hat).r;
        assert!(
            r_unscaled >= 1e2 * r_scaled,
            "scaling gain too small: unscaled {r_unscaled:.3e}, scaled {r_scaled:.3e} \
             (d_lambda {:.3e})",
            sr.d_lambda
        );
    }
}
