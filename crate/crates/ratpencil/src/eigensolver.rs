//! Dense generalized eigenvalue computation for regular matrix pencils.
//!
//! The entry point is [`qz`], which takes a pencil p(λ) = p0 + λ·p1 and
//! returns eigenvalues of the pair (p0, −p1) in homogeneous (α, β) form,
//! so λ = α/β and β ≈ 0 marks an infinite eigenvalue.
//!
//! The implementation is a single-shift implicit QZ iteration built on
//! complex Givens rotations: Hessenberg-triangular reduction first, then
//! shifted bulge-chasing sweeps with deflation. Pencils whose leading
//! coefficient is singular (infinite eigenvalues) are handled by a Möbius
//! substitution: we iterate on (A, B + τA) for a nonzero τ chosen so the
//! second matrix is comfortably nonsingular, and map the computed pairs
//! back with (α, β) = (α̃, β̃ − τ·α̃). A short ladder of τ values is tried;
//! τ = 0 is the fast path taken whenever B itself passes a triangular
//! min-diagonal screen.
//!
//! Eigenvectors are not computed; downstream code only needs eigenvalues
//! and classifies accuracy through σ_min(p(λᵢ)) residuals.

use num_complex::Complex;

use crate::dense::{self, cmod};
use crate::errors::{Error, Result};
use crate::linearization;
use crate::pencil_core::{Pencil, RationalQuadruple};
use crate::scalar::Scalar;
use crate::CMat;

/// Eigenvalues of a regular pencil in homogeneous form.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenvalues<T: Scalar> {
    /// One (α, β) pair per pencil dimension; the eigenvalue is α/β.
    pub pairs: Vec<(Complex<T>, Complex<T>)>,
    /// Threshold on |β| below which a pair is classified as infinite.
    pub finite_tol: T,
    /// Set when the input looked numerically singular (some pair had both
    /// components below tolerance, or every Möbius screen was rejected).
    pub regularity_warning: bool,
}

impl<T: Scalar> GeneralizedEigenvalues<T> {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_finite(&self, i: usize) -> bool {
        cmod(self.pairs[i].1) > self.finite_tol
    }

    /// Finite eigenvalues α/β, in pair order.
    pub fn finite(&self) -> Vec<Complex<T>> {
        self.pairs
            .iter()
            .filter(|(_, b)| cmod(*b) > self.finite_tol)
            .map(|&(a, b)| a / b)
            .collect()
    }

    pub fn infinite_count(&self) -> usize {
        self.pairs.len() - self.finite().len()
    }
}

fn hypot2<T: Scalar>(a: T, b: T) -> T {
    let (a, b) = (a.abs(), b.abs());
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == T::zero() {
        return T::zero();
    }
    let r = lo / hi;
    hi * (T::one() + r * r).sqrt()
}

/// Square root of a complex number, stable near the branch cut.
fn csqrt<T: Scalar>(z: Complex<T>) -> Complex<T> {
    let r = cmod(z);
    if r == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let two = T::fr(2.0);
    let t = ((r + z.re.abs()) / two).sqrt();
    if z.re >= T::zero() {
        Complex::new(t, z.im / (two * t))
    } else {
        let u = z.im.abs() / (two * t);
        let sgn = if z.im >= T::zero() { T::one() } else { -T::one() };
        Complex::new(u, sgn * t)
    }
}

/// Complex Givens rotation (c real, s complex) with
/// [c s; -s̄ c]·[f; g] = [r; 0].
fn givens<T: Scalar>(f: Complex<T>, g: Complex<T>) -> (T, Complex<T>) {
    let (af, ag) = (cmod(f), cmod(g));
    if ag == T::zero() {
        return (T::one(), Complex::new(T::zero(), T::zero()));
    }
    if af == T::zero() {
        return (T::zero(), g.conj() / Complex::new(ag, T::zero()));
    }
    let d = hypot2(af, ag);
    let c = af / d;
    let s = f * g.conj() * Complex::new(T::one() / (af * d), T::zero());
    (c, s)
}

/// Apply the rotation to rows i and j: rowᵢ ← c·rowᵢ + s·rowⱼ,
/// rowⱼ ← −s̄·rowᵢ + c·rowⱼ.
fn rot_rows<T: Scalar>(m: &mut CMat<T>, i: usize, j: usize, c: T, s: Complex<T>) {
    let cc = Complex::new(c, T::zero());
    let sc = s.conj();
    for k in 0..m.ncols() {
        let (x, y) = (m[(i, k)], m[(j, k)]);
        m[(i, k)] = cc * x + s * y;
        m[(j, k)] = cc * y - sc * x;
    }
}

/// Same combination on columns i and j (a unitary transformation from the
/// right). With (c, s) = givens(m[(r,i)], m[(r,j)]) this zeroes m[(r,j)].
fn rot_cols<T: Scalar>(m: &mut CMat<T>, i: usize, j: usize, c: T, s: Complex<T>) {
    let cc = Complex::new(c, T::zero());
    let sc = s.conj();
    for k in 0..m.nrows() {
        let (x, y) = (m[(k, i)], m[(k, j)]);
        m[(k, i)] = cc * x + s * y;
        m[(k, j)] = cc * y - sc * x;
    }
}

/// Reduce (a, b) to Hessenberg-triangular form by a unitary equivalence.
///
/// Returns min_i |b_ii| / ‖b‖_F measured right after the triangularization
/// of b, a cheap near-singularity screen for the second matrix.
fn hess_tri<T: Scalar>(a: &mut CMat<T>, b: &mut CMat<T>) -> T {
    let n = a.nrows();
    let z0 = Complex::new(T::zero(), T::zero());
    for j in 0..n {
        for i in (j + 1..n).rev() {
            if cmod(b[(i, j)]) == T::zero() {
                continue;
            }
            let (c, s) = givens(b[(i - 1, j)], b[(i, j)]);
            rot_rows(b, i - 1, i, c, s);
            b[(i, j)] = z0;
            rot_rows(a, i - 1, i, c, s);
        }
    }
    let bfro = dense::fro(b);
    let screen = if bfro == T::zero() {
        T::zero()
    } else {
        let mut mindiag = cmod(b[(0, 0)]);
        for i in 1..n {
            mindiag = mindiag.min(cmod(b[(i, i)]));
        }
        mindiag / bfro
    };
    if n >= 3 {
        for j in 0..n - 2 {
            for i in (j + 2..n).rev() {
                if cmod(a[(i, j)]) != T::zero() {
                    let (c, s) = givens(a[(i - 1, j)], a[(i, j)]);
                    rot_rows(a, i - 1, i, c, s);
                    a[(i, j)] = z0;
                    rot_rows(b, i - 1, i, c, s);
                }
                if cmod(b[(i, i - 1)]) != T::zero() {
                    let (c, s) = givens(b[(i, i)], b[(i, i - 1)]);
                    rot_cols(b, i, i - 1, c, s);
                    b[(i, i - 1)] = z0;
                    rot_cols(a, i, i - 1, c, s);
                }
            }
        }
    }
    screen
}

/// Shift from the trailing 2×2 of the active window: the root of
/// det(H₂ − μT₂) = 0 closest to the bottom-right quotient.
fn wilkinson_shift<T: Scalar>(h: &CMat<T>, t: &CMat<T>, hi: usize, tnorm: T) -> Complex<T> {
    let i = hi - 1;
    let (h11, h12, h21, h22) = (h[(i, i)], h[(i, hi)], h[(hi, i)], h[(hi, hi)]);
    let (t11, t12, t22) = (t[(i, i)], t[(i, hi)], t[(hi, hi)]);
    let one = Complex::new(T::one(), T::zero());
    let tiny = T::eps() * tnorm;
    let target = if cmod(t22) > tiny {
        h22 / t22
    } else if cmod(t11) > tiny {
        h11 / t11
    } else {
        one
    };
    // quadratic a·μ² + b·μ + c = det(H₂ − μT₂), with t21 = 0
    let a = t11 * t22;
    let b = -(h11 * t22 + h22 * t11 - h21 * t12);
    let c = h11 * h22 - h12 * h21;
    let disc = csqrt(b * b - Complex::new(T::fr(4.0), T::zero()) * a * c);
    let (s1, s2) = ((-b + disc) * Complex::new(T::fr(0.5), T::zero()),
                    (-b - disc) * Complex::new(T::fr(0.5), T::zero()));
    let s = if cmod(s1) >= cmod(s2) { s1 } else { s2 };
    let mut best = target;
    let mut best_d = T::max_value().unwrap_or_else(T::one);
    let consider = |mu: Complex<T>, best: &mut Complex<T>, best_d: &mut T| {
        let d = cmod(mu - target);
        if d < *best_d {
            *best = mu;
            *best_d = d;
        }
    };
    if cmod(a) > T::zero() {
        consider(s / a, &mut best, &mut best_d);
    }
    if cmod(s) > T::zero() {
        consider(c / s, &mut best, &mut best_d);
    }
    best
}

/// One implicit shifted QZ step on the window [lo, hi] of the
/// Hessenberg-triangular pair (h, t).
fn qz_step<T: Scalar>(h: &mut CMat<T>, t: &mut CMat<T>, lo: usize, hi: usize, mu: Complex<T>) {
    let z0 = Complex::new(T::zero(), T::zero());
    let x1 = h[(lo, lo)] - mu * t[(lo, lo)];
    let x2 = h[(lo + 1, lo)];
    let (c, s) = givens(x1, x2);
    rot_rows(h, lo, lo + 1, c, s);
    rot_rows(t, lo, lo + 1, c, s);
    for k in lo..hi {
        // t picked up fill at (k+1, k); restore triangularity from the right
        if cmod(t[(k + 1, k)]) != T::zero() {
            let (c, s) = givens(t[(k + 1, k + 1)], t[(k + 1, k)]);
            rot_cols(t, k + 1, k, c, s);
            t[(k + 1, k)] = z0;
            rot_cols(h, k + 1, k, c, s);
        }
        // h picked up a bulge at (k+2, k); chase it one row down
        if k + 2 <= hi && cmod(h[(k + 2, k)]) != T::zero() {
            let (c, s) = givens(h[(k + 1, k)], h[(k + 2, k)]);
            rot_rows(h, k + 1, k + 2, c, s);
            h[(k + 2, k)] = z0;
            rot_rows(t, k + 1, k + 2, c, s);
        }
    }
}

/// Reduce a Hessenberg-triangular pair to triangular-triangular by shifted
/// QZ sweeps with deflation. Eigenvalue pairs are then the diagonals.
fn qz_iterate<T: Scalar>(h: &mut CMat<T>, t: &mut CMat<T>) -> Result<()> {
    let n = h.nrows();
    if n <= 1 {
        return Ok(());
    }
    let z0 = Complex::new(T::zero(), T::zero());
    let hnorm = dense::fro(h);
    let tnorm = dense::fro(t);
    let eps = T::eps();
    let mut hi = n - 1;
    let mut total = 0usize;
    let mut stagnant = 0usize;
    let max_total = 300 * n;
    while hi > 0 {
        // set negligible subdiagonals to zero
        for i in 1..=hi {
            if cmod(h[(i, i - 1)]) == T::zero() {
                continue;
            }
            let local = cmod(h[(i - 1, i - 1)]) + cmod(h[(i, i)]);
            let tol = if local > T::zero() { eps * local } else { eps * hnorm };
            if cmod(h[(i, i - 1)]) <= tol {
                h[(i, i - 1)] = z0;
            }
        }
        if cmod(h[(hi, hi - 1)]) == T::zero() {
            hi -= 1;
            stagnant = 0;
            continue;
        }
        let mut lo = hi;
        while lo > 0 && cmod(h[(lo, lo - 1)]) != T::zero() {
            lo -= 1;
        }
        total += 1;
        stagnant += 1;
        if total > max_total || stagnant > 100 {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: cmod(h[(hi, hi - 1)]).to_f64_lossy(),
            });
        }
        let mu = if stagnant % 10 == 0 {
            // exceptional shift to break symmetric stagnation
            let base = wilkinson_shift(h, t, hi, tnorm);
            let kick = T::fr(0.75) * cmod(h[(hi, hi - 1)]) / tnorm.max(eps);
            base + Complex::new(kick, kick * T::fr(0.5))
        } else {
            wilkinson_shift(h, t, hi, tnorm)
        };
        qz_step(h, t, lo, hi, mu);
    }
    Ok(())
}

/// Generalized eigenvalues of the pair (p0, −p1), i.e. the roots of
/// det(p0 + λ·p1) = 0 in homogeneous (α, β) form.
///
/// A pair is classified finite when |β| > dim·ε·‖p‖₂. Near-singular input
/// is reported through `regularity_warning` rather than an error; genuinely
/// non-convergent iterations return `Error::NoConvergence`.
pub fn qz<T: Scalar>(p: &Pencil<T>) -> Result<GeneralizedEigenvalues<T>> {
    let (rows, cols) = p.shape();
    if rows != cols {
        return Err(Error::Structure(format!(
            "qz needs a square pencil, got {rows}x{cols}"
        )));
    }
    if !p.all_finite() {
        return Err(Error::InvalidArgument(
            "qz input contains non-finite entries".into(),
        ));
    }
    let n = rows;
    let pnorm2 = p.spectral_norm();
    let finite_tol = T::fr(n as f64) * T::eps() * pnorm2;
    if n == 0 {
        return Ok(GeneralizedEigenvalues {
            pairs: Vec::new(),
            finite_tol,
            regularity_warning: false,
        });
    }

    let a0 = p.p0.clone();
    let b0 = -&p.p1;
    let (anorm, bnorm) = (dense::fro(&a0), dense::fro(&b0));
    let rho = if anorm > T::zero() && bnorm > T::zero() {
        (bnorm / anorm)
            .max(T::fr((2.0f64).powi(-30)))
            .min(T::fr((2.0f64).powi(30)))
    } else {
        T::one()
    };
    // τ = 0 first (no substitution), then a few fixed directions in the
    // complex plane scaled to the pencil; angles chosen away from common
    // eigenvalue symmetries
    let mut taus = vec![Complex::new(T::zero(), T::zero())];
    for th in [0.9191f64, 2.5327, 4.0899, 5.7713] {
        taus.push(Complex::new(T::fr(th.cos()), T::fr(th.sin())) * Complex::new(rho, T::zero()));
    }

    let screen_tol = T::fr(n as f64) * T::eps();
    let mut last_err = None;
    for pass in 0..2 {
        // pass 0 rejects τ whose shifted second matrix looks singular;
        // pass 1 is the last resort, running anyway with a warning
        for &tau in &taus {
            let mut h = a0.clone();
            let mut t = &b0 + &a0 * tau;
            let screen = hess_tri(&mut h, &mut t);
            if pass == 0 && screen <= screen_tol {
                continue;
            }
            match qz_iterate(&mut h, &mut t) {
                Ok(()) => {
                    let mut pairs = Vec::with_capacity(n);
                    let mut degenerate = false;
                    for i in 0..n {
                        let alpha = h[(i, i)];
                        let beta = t[(i, i)] - tau * alpha;
                        if cmod(alpha) <= finite_tol && cmod(beta) <= finite_tol {
                            degenerate = true;
                        }
                        pairs.push((alpha, beta));
                    }
                    return Ok(GeneralizedEigenvalues {
                        pairs,
                        finite_tol,
                        regularity_warning: degenerate || pass == 1,
                    });
                }
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            }
        }
    }
    Err(last_err.unwrap_or(Error::NoConvergence {
        iterations: 0,
        residual: f64::NAN,
    }))
}

/// Zeros of a square rational matrix: eigenvalues of its block Kronecker
/// linearization for the split d = ε+η+1, or of the compact linear form
/// when the polynomial part has degree ≤ 1 (ε, η are ignored then).
///
/// Finite eigenvalues of the returned set are the finite zeros of R when
/// the realization is minimal; non-minimal state adds spurious copies of
/// cancelled poles, which [`poles`] flags.
pub fn zeros<T: Scalar>(
    q: &RationalQuadruple<T>,
    eps: usize,
    eta: usize,
) -> Result<GeneralizedEigenvalues<T>> {
    if q.degree() <= 1 {
        qz(&linearization::build_linear_s(q)?)
    } else {
        qz(&linearization::build_s(q, eps, eta)?.s)
    }
}

/// Poles of the rational matrix: the eigenvalues of A.
#[derive(Debug, Clone)]
pub struct Poles<T: Scalar> {
    pub values: Vec<Complex<T>>,
    /// False when (A, B, C) is not minimal; the pole list then overcounts.
    pub minimal: bool,
}

pub fn poles<T: Scalar>(q: &RationalQuadruple<T>) -> Result<Poles<T>> {
    let l = q.state_dim();
    let p = Pencil::new(q.a.clone(), -dense::eye::<T>(l))?;
    let ev = qz(&p)?;
    let rep = linearization::minimality_check(&q.a, &q.b, &q.c)?;
    Ok(Poles {
        values: ev.finite(),
        minimal: rep.minimal,
    })
}
