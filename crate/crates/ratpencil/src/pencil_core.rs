//! Core value types: matrix pencils P(λ) = P₀ + λP₁, polynomial matrices
//! D(λ) = Σ Dᵢλⁱ, the state-space quadruple {A,B,C,D(λ)} of a rational matrix
//! R(λ) = C(λI−A)⁻¹B + D(λ), and the structural building blocks E_k, F_k,
//! L_k(λ) = E_k − λF_k and Λ_k(λ) = [λᵏ,…,λ,1]ᵀ used by the linearizations.
//!
//! Sign convention: pencils are stored in the plus form p0 + λ·p1. A pencil
//! written A − λB elsewhere enters here as p0 = A, p1 = −B (see
//! [`Pencil::from_a_minus_lambda_b`]).
//!
//! Norms: for a pencil, ‖P‖² = ‖p0‖² + ‖p1‖² in both the Frobenius and the
//! spectral sense; a polynomial matrix sums the squared Frobenius norms of
//! its coefficients; a quadruple additionally counts the λ-identity of its
//! system matrix, contributing the state dimension ℓ under the square root.

use crate::dense::{self, kron};
use crate::{linalg, CMat, CVec, Error, Result, Scalar};
use num_complex::Complex;

/// Matrix pencil P(λ) = p0 + λ·p1.
#[derive(Clone, Debug, PartialEq)]
pub struct Pencil<T: Scalar> {
    pub p0: CMat<T>,
    pub p1: CMat<T>,
}

impl<T: Scalar> Pencil<T> {
    pub fn new(p0: CMat<T>, p1: CMat<T>) -> Result<Self> {
        if p0.shape() != p1.shape() {
            return Err(Error::Dimension(format!(
                "pencil coefficients differ in shape: {:?} vs {:?}",
                p0.shape(),
                p1.shape()
            )));
        }
        Ok(Self { p0, p1 })
    }

    /// Store a pencil written in the minus convention A − λB.
    pub fn from_a_minus_lambda_b(a: CMat<T>, b: &CMat<T>) -> Result<Self> {
        Self::new(a, -b)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { p0: CMat::zeros(rows, cols), p1: CMat::zeros(rows, cols) }
    }

    pub fn nrows(&self) -> usize {
        self.p0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.p0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.p0.shape()
    }

    pub fn eval(&self, lambda: Complex<T>) -> CMat<T> {
        &self.p0 + &self.p1 * lambda
    }

    pub fn fro_norm(&self) -> T {
        dense::fro_joint(&[&self.p0, &self.p1])
    }

    pub fn spectral_norm(&self) -> T {
        let (a, b) = (linalg::sigma_max(&self.p0), linalg::sigma_max(&self.p1));
        (a * a + b * b).sqrt()
    }

    /// Sub-pencil with top-left corner (i, j) and shape r×c.
    pub fn block(&self, i: usize, j: usize, r: usize, c: usize) -> Pencil<T> {
        Pencil {
            p0: dense::get_block(&self.p0, i, j, r, c),
            p1: dense::get_block(&self.p1, i, j, r, c),
        }
    }

    pub fn set_block(&mut self, i: usize, j: usize, src: &Pencil<T>) {
        dense::set_block(&mut self.p0, i, j, &src.p0);
        dense::set_block(&mut self.p1, i, j, &src.p1);
    }

    pub fn transpose(&self) -> Pencil<T> {
        Pencil { p0: self.p0.transpose(), p1: self.p1.transpose() }
    }

    pub fn scale(&self, f: Complex<T>) -> Pencil<T> {
        Pencil { p0: &self.p0 * f, p1: &self.p1 * f }
    }

    /// Entrywise finite check over both coefficients.
    pub fn all_finite(&self) -> bool {
        dense::all_finite(&self.p0) && dense::all_finite(&self.p1)
    }
}

impl<T: Scalar> std::ops::Add for &Pencil<T> {
    type Output = Pencil<T>;
    fn add(self, rhs: Self) -> Pencil<T> {
        Pencil { p0: &self.p0 + &rhs.p0, p1: &self.p1 + &rhs.p1 }
    }
}

impl<T: Scalar> std::ops::Sub for &Pencil<T> {
    type Output = Pencil<T>;
    fn sub(self, rhs: Self) -> Pencil<T> {
        Pencil { p0: &self.p0 - &rhs.p0, p1: &self.p1 - &rhs.p1 }
    }
}

/// Polynomial matrix stored by coefficients: coeffs[i] multiplies λⁱ.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix<T: Scalar> {
    coeffs: Vec<CMat<T>>,
}

impl<T: Scalar> PolyMatrix<T> {
    pub fn new(coeffs: Vec<CMat<T>>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidArgument("polynomial matrix needs at least one coefficient".into()))?;
        let shape = first.shape();
        if coeffs.iter().any(|c| c.shape() != shape) {
            return Err(Error::Dimension("polynomial coefficients differ in shape".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(rows: usize, cols: usize, degree: usize) -> Self {
        Self { coeffs: vec![CMat::zeros(rows, cols); degree + 1] }
    }

    pub fn constant(m: CMat<T>) -> Self {
        Self { coeffs: vec![m] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn nrows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    pub fn coeff(&self, i: usize) -> &CMat<T> {
        &self.coeffs[i]
    }

    pub fn coeff_mut(&mut self, i: usize) -> &mut CMat<T> {
        &mut self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[CMat<T>] {
        &self.coeffs
    }

    /// Horner evaluation at λ.
    pub fn eval(&self, lambda: Complex<T>) -> CMat<T> {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * lambda + c;
        }
        acc
    }

    pub fn fro_norm(&self) -> T {
        let refs: Vec<&CMat<T>> = self.coeffs.iter().collect();
        dense::fro_joint(&refs)
    }

    pub fn all_finite(&self) -> bool {
        self.coeffs.iter().all(dense::all_finite)
    }
}

impl<T: Scalar> std::ops::Sub for &PolyMatrix<T> {
    type Output = PolyMatrix<T>;
    fn sub(self, rhs: Self) -> PolyMatrix<T> {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "degree mismatch in difference");
        PolyMatrix {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// State-space quadruple {A, B, C, D(λ)} of R(λ) = C(λI−A)⁻¹B + D(λ).
#[derive(Clone, Debug, PartialEq)]
pub struct RationalQuadruple<T: Scalar> {
    pub a: CMat<T>,
    pub b: CMat<T>,
    pub c: CMat<T>,
    pub d: PolyMatrix<T>,
}

impl<T: Scalar> RationalQuadruple<T> {
    pub fn new(a: CMat<T>, b: CMat<T>, c: CMat<T>, d: PolyMatrix<T>) -> Result<Self> {
        let l = a.nrows();
        if l == 0 {
            return Err(Error::InvalidArgument("state dimension must be positive".into()));
        }
        if a.ncols() != l {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b.nrows() != l || c.ncols() != l {
            return Err(Error::Dimension("B rows and C cols must match the state dimension".into()));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension("D must be m×n with m = C rows, n = B cols".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Output dimension m.
    pub fn m(&self) -> usize {
        self.c.nrows()
    }

    /// Input dimension n.
    pub fn n(&self) -> usize {
        self.b.ncols()
    }

    /// State dimension ℓ.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn degree(&self) -> usize {
        self.d.degree()
    }

    /// Frobenius norm of the quadruple, counting the λ-identity of its system
    /// matrix: √(ℓ + ‖A‖² + ‖B‖² + ‖C‖² + Σ‖Dᵢ‖²).
    pub fn norm_f(&self) -> T {
        let c = self.coeff_norm_f();
        (c * c + T::fr(self.state_dim() as f64)).sqrt()
    }

    /// Same without the ℓ summand: √(‖A‖² + ‖B‖² + ‖C‖² + Σ‖Dᵢ‖²).
    pub fn coeff_norm_f(&self) -> T {
        let mut s = T::zero();
        for f in [self.a.norm(), self.b.norm(), self.c.norm(), self.d.fro_norm()] {
            s += f * f;
        }
        s.sqrt()
    }

    /// Evaluate R(λ) = C(λI−A)⁻¹B + D(λ). Errors at poles.
    pub fn eval(&self, lambda: Complex<T>) -> Result<CMat<T>> {
        let l = self.state_dim();
        let shifted = CMat::<T>::identity(l, l) * lambda - &self.a;
        let x = linalg::solve(&shifted, &self.b)
            .map_err(|_| Error::Degenerate("evaluation at a pole of the rational matrix".into()))?;
        Ok(&self.c * x + self.d.eval(lambda))
    }

    pub fn all_finite(&self) -> bool {
        dense::all_finite(&self.a)
            && dense::all_finite(&self.b)
            && dense::all_finite(&self.c)
            && self.d.all_finite()
    }
}

/// The k×(k+1) structural pair E_k, F_k, the block L_k(λ) = E_k − λF_k, and
/// its Kronecker expansion L_k(λ) ⊗ I_r.
pub struct StructuralBlocks<T: Scalar> {
    pub e: CMat<T>,
    pub f: CMat<T>,
    pub l: Pencil<T>,
    pub lkron: Pencil<T>,
}

/// E_k has ones on (i,i), F_k on (i,i+1); L_k(λ)·Λ_k(λ) = 0 for every λ.
pub fn structural_blocks<T: Scalar>(k: usize, r: usize) -> Result<StructuralBlocks<T>> {
    if k == 0 || r == 0 {
        return Err(Error::InvalidArgument(
            "structural blocks need k ≥ 1 and r ≥ 1; absent blocks are simply omitted".into(),
        ));
    }
    let one = Complex::new(T::one(), T::zero());
    let mut e = CMat::<T>::zeros(k, k + 1);
    let mut f = CMat::<T>::zeros(k, k + 1);
    for i in 0..k {
        e[(i, i)] = one;
        f[(i, i + 1)] = one;
    }
    let l = Pencil { p0: e.clone(), p1: -&f };
    let ir = dense::eye::<T>(r);
    let lkron = Pencil { p0: kron(&e, &ir), p1: -kron(&f, &ir) };
    Ok(StructuralBlocks { e, f, l, lkron })
}

/// Λ_k(λ) = [λᵏ, …, λ, 1]ᵀ, a column of length k+1.
pub fn lambda_vector<T: Scalar>(k: usize, lambda: Complex<T>) -> CVec<T> {
    let mut v = CVec::from_element(k + 1, Complex::new(T::one(), T::zero()));
    for i in (0..k).rev() {
        let next = v[i + 1] * lambda;
        v[i] = next;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::{Cx64, Mat64};

    fn rm(data: &[&[f64]]) -> Mat64 {
        Mat64::from_fn(data.len(), data[0].len(), |i, j| Cx64::new(data[i][j], 0.0))
    }

    #[test]
    fn structural_blocks_k2_at_one() {
        let sb = structural_blocks::<f64>(2, 1).unwrap();
        let got = sb.l.eval(Cx64::new(1.0, 0.0));
        let want = rm(&[&[1.0, -1.0, 0.0], &[0.0, 1.0, -1.0]]);
        assert_eq!(got, want);
    }

    #[test]
    fn l_annihilates_lambda_vector() {
        for k in 1..=4 {
            let sb = structural_blocks::<f64>(k, 1).unwrap();
            for lam in [Cx64::new(0.0, 0.0), Cx64::new(1.0, 0.0), Cx64::new(2.0, 3.0)] {
                let prod = sb.l.eval(lam) * lambda_vector::<f64>(k, lam);
                let scale = lam.norm().max(1.0).powi(k as i32);
                assert!(prod.norm() <= 1e-14 * scale, "k={k} lam={lam}");
            }
        }
    }

    #[test]
    fn lkron_k1_r2_layout() {
        let sb = structural_blocks::<f64>(1, 2).unwrap();
        assert_eq!(sb.lkron.p0, rm(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]));
        assert_eq!(sb.lkron.p1, rm(&[&[0.0, 0.0, -1.0, 0.0], &[0.0, 0.0, 0.0, -1.0]]));
    }

    #[test]
    fn zero_k_or_r_rejected() {
        assert!(structural_blocks::<f64>(0, 1).is_err());
        assert!(structural_blocks::<f64>(3, 0).is_err());
    }

    #[test]
    fn lambda_vector_values() {
        let v = lambda_vector::<f64>(0, Cx64::new(9.0, 9.0));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0], Cx64::new(1.0, 0.0));

        let v = lambda_vector::<f64>(2, Cx64::new(2.0, 0.0));
        let want = [4.0, 2.0, 1.0];
        for (a, b) in v.iter().zip(want) {
            assert_eq!(*a, Cx64::new(b, 0.0));
        }

        // Powers of (1+i) by repeated multiplication.
        let lam = Cx64::new(1.0, 1.0);
        let v = lambda_vector::<f64>(3, lam);
        let mut p = Cx64::new(1.0, 0.0);
        let mut want = vec![p];
        for _ in 0..3 {
            p *= lam;
            want.push(p);
        }
        want.reverse();
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn pencil_eval_and_norms() {
        let zero = Pencil::<f64>::zeros(2, 3);
        assert_eq!(zero.eval(Cx64::new(4.0, -1.0)), Mat64::zeros(2, 3));

        let p = Pencil::new(Mat64::identity(2, 2), Mat64::identity(2, 2)).unwrap();
        assert_eq!(p.eval(Cx64::new(3.0, 0.0)), Mat64::identity(2, 2) * Cx64::new(4.0, 0.0));

        let q = Pencil::new(Mat64::identity(2, 2), Mat64::zeros(2, 2)).unwrap();
        assert!((q.fro_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert!((q.spectral_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pencil_fro_norm_is_elementwise_sum() {
        let mut g = SplitMix64::new(17);
        let p = Pencil::new(g.randn_complex::<f64>(3, 3), g.randn_complex::<f64>(3, 3)).unwrap();
        let direct: f64 = p
            .p0
            .iter()
            .chain(p.p1.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!((p.fro_norm() - direct).abs() < 1e-14 * direct);
    }

    #[test]
    fn spectral_below_frobenius() {
        let mut g = SplitMix64::new(29);
        for _ in 0..20 {
            let p = Pencil::new(g.randn_complex::<f64>(4, 3), g.randn_complex::<f64>(4, 3)).unwrap();
            let s = p.spectral_norm();
            let f = p.fro_norm();
            assert!(s <= f * (1.0 + 1e-13));
            assert!(f <= s * (2.0 * 3f64.sqrt()) * (1.0 + 1e-13));
        }
    }

    #[test]
    fn poly_eval_horner() {
        let d = PolyMatrix::new(vec![
            rm(&[&[1.0]]),
            rm(&[&[2.0]]),
            rm(&[&[1.0]]),
        ])
        .unwrap();
        assert_eq!(d.eval(Cx64::new(2.0, 0.0))[(0, 0)], Cx64::new(9.0, 0.0));
    }

    #[test]
    fn quadruple_norm_definition() {
        let q = RationalQuadruple::new(
            rm(&[&[0.0]]),
            rm(&[&[1.0]]),
            rm(&[&[1.0]]),
            PolyMatrix::constant(rm(&[&[1.0]])),
        )
        .unwrap();
        assert!((q.norm_f() - 2.0).abs() < 1e-15);
        let v = q.coeff_norm_f();
        assert!((q.norm_f() * q.norm_f() - 1.0 - v * v).abs() < 1e-14);
    }

    #[test]
    fn quadruple_eval_scalar_case() {
        // R(λ) = 1/(λ−2) + 1: at λ=3 this is 2.
        let q = RationalQuadruple::new(
            rm(&[&[2.0]]),
            rm(&[&[1.0]]),
            rm(&[&[1.0]]),
            PolyMatrix::constant(rm(&[&[1.0]])),
        )
        .unwrap();
        let r = q.eval(Cx64::new(3.0, 0.0)).unwrap();
        assert!((r[(0, 0)] - Cx64::new(2.0, 0.0)).norm() < 1e-14);
        assert!(q.eval(Cx64::new(2.0, 0.0)).is_err(), "pole must be rejected");
    }

    #[test]
    fn quadruple_shape_validation() {
        let bad = RationalQuadruple::new(
            Mat64::zeros(2, 3),
            Mat64::zeros(2, 1),
            Mat64::zeros(1, 2),
            PolyMatrix::constant(Mat64::zeros(1, 1)),
        );
        assert!(bad.is_err());
    }
}
