//! Diagonal scalings that bring a quadruple to unit size norms.
//!
//! A state space quadruple with badly scaled data makes the linearization a
//! poor place to run an eigensolver: the backward error amplification grows
//! with powers of ‖A‖ and with the overall norm spread. The procedure here
//! balances A by a diagonal similarity T, compresses the spectrum with a
//! variable change λ̂ = d_λ·λ, and normalizes the output size with a factor
//! d_R, so that max(‖Â‖_F, ‖B̂‖_F, ‖Ĉ‖_F, ‖D̂‖_F) lands at 1. The same
//! scaling can be applied directly to an already built structured pencil via
//! left and right diagonal factors, and that path agrees with scaling the
//! quadruple first and rebuilding. In power of two mode every factor is 2ᵏ,
//! so A and the numerator coefficients are scaled without any rounding; the
//! B and C maps carry a √(d_λd_R) which is exact whenever the combined
//! exponent is even.

use num_complex::Complex;

use crate::dense;
use crate::errors::{Error, Result};
use crate::linearization::BlockKroneckerPencil;
use crate::pencil_core::{PolyMatrix, RationalQuadruple};
use crate::{CMat, Scalar};

/// Balancing sweep cap.
const MAX_SWEEPS: usize = 20;
/// A balancing factor is only accepted when it shrinks the combined squared
/// row and column norm below this fraction of the current value. Keeps the
/// sweeps from chasing negligible improvements.
const ACCEPT_FRACTION: f64 = 0.95;

/// The three scale factors produced by the procedure: the diagonal of the
/// balancing similarity T, the variable change factor d_λ and the output
/// factor d_R. With `pow2` set, every factor is an integer power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult<T: Scalar> {
    pub t_diag: Vec<T>,
    pub d_lambda: T,
    pub d_r: T,
    pub pow2: bool,
}

impl<T: Scalar> ScalingResult<T> {
    /// The do nothing scaling for a state dimension.
    pub fn identity(state_dim: usize) -> Self {
        Self {
            t_diag: vec![T::one(); state_dim],
            d_lambda: T::one(),
            d_r: T::one(),
            pow2: true,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.d_lambda == T::one()
            && self.d_r == T::one()
            && self.t_diag.iter().all(|d| *d == T::one())
    }

    /// Whether the √(d_λ·d_R) applied to B and C is an exact power of two.
    /// Only meaningful in pow2 mode; the factor is exact when the combined
    /// exponent of d_λ and d_R is even.
    pub fn half_factor_exact(&self) -> bool {
        if !self.pow2 {
            return false;
        }
        match (log2_exact(self.d_lambda), log2_exact(self.d_r)) {
            (Ok(a), Ok(b)) => (a + b) % 2 == 0,
            _ => false,
        }
    }
}

fn pow2i<T: Scalar>(k: i64) -> T {
    T::fr(2.0).powi(k as i32)
}

/// 2^(s/2) with one shared rounded √2 for odd s, so that every code path
/// multiplying by a half power produces identical bits.
fn half_pow2<T: Scalar>(s: i64) -> T {
    let k = s.div_euclid(2);
    if s.rem_euclid(2) == 0 {
        pow2i::<T>(k)
    } else {
        pow2i::<T>(k) * T::fr(2.0).sqrt()
    }
}

/// Exponent of a value that must be an exact power of two.
fn log2_exact<T: Scalar>(x: T) -> Result<i64> {
    let xf = x.to_f64_lossy();
    if !xf.is_finite() || xf <= 0.0 {
        return Err(Error::InvalidArgument(
            "scale factor must be positive and finite".into(),
        ));
    }
    let k = xf.log2().round() as i64;
    if pow2i::<T>(k) != x {
        return Err(Error::InvalidArgument(
            "pow2 scaling carries a factor that is not a power of two".into(),
        ));
    }
    Ok(k)
}

/// Largest k with 2^k ≤ x, for x positive and finite.
fn pow2_floor_exp(x: f64) -> i64 {
    let mut k = x.log2().floor() as i64;
    while 2f64.powi((k + 1) as i32) <= x {
        k += 1;
    }
    while 2f64.powi(k as i32) > x {
        k -= 1;
    }
    k
}

fn scalar<T: Scalar>(f: T) -> Complex<T> {
    Complex::new(f, T::zero())
}

/// Diagonal similarity balancing of A, followed by a global factor that
/// equalizes ‖T⁻¹B‖_F and ‖CT‖_F.
///
/// Each sweep visits every index and rescales it to equalize the 2-norms of
/// its off diagonal row and column; a factor is accepted only when it
/// clearly shrinks their combined squared norm, so the Frobenius norm of
/// T⁻¹AT never increases. An index whose off diagonal row or column is zero
/// keeps its factor. Sweeps stop when nothing changes or after 20 rounds.
pub fn balance<T: Scalar>(
    a: &CMat<T>,
    b: &CMat<T>,
    c: &CMat<T>,
    pow2: bool,
) -> Result<Vec<T>> {
    let l = a.nrows();
    if a.ncols() != l {
        return Err(Error::Dimension(format!(
            "state matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.nrows() != l || c.ncols() != l {
        return Err(Error::Dimension(
            "input and output maps do not match the state dimension".into(),
        ));
    }

    let mut m = a.clone();
    let mut d = vec![T::one(); l];
    let accept = T::fr(ACCEPT_FRACTION);
    for _ in 0..MAX_SWEEPS {
        let mut changed = false;
        for i in 0..l {
            let mut c2 = T::zero();
            let mut r2 = T::zero();
            for j in 0..l {
                if j != i {
                    c2 += dense::cmod(m[(j, i)]).powi(2);
                    r2 += dense::cmod(m[(i, j)]).powi(2);
                }
            }
            if c2 == T::zero() || r2 == T::zero() {
                continue;
            }
            // col i scales by f, row i by 1/f; equality wants f⁴ = r2/c2
            let f = if pow2 {
                let quarter_log = (r2.to_f64_lossy() / c2.to_f64_lossy()).log2() / 4.0;
                pow2i::<T>(quarter_log.round() as i64)
            } else {
                (r2 / c2).sqrt().sqrt()
            };
            if !f.to_f64_lossy().is_finite() || f == T::one() {
                continue;
            }
            if c2 * f * f + r2 / (f * f) >= (c2 + r2) * accept {
                continue;
            }
            for j in 0..l {
                let fc = scalar(f);
                m[(j, i)] *= fc;
                m[(i, j)] /= fc;
            }
            d[i] *= f;
            changed = true;
        }
        if !changed {
            break;
        }
    }

    // global factor g on T: ‖T⁻¹B‖/g should equal g·‖CT‖
    let mut bn2 = T::zero();
    for i in 0..l {
        for j in 0..b.ncols() {
            bn2 += (dense::cmod(b[(i, j)]) / d[i]).powi(2);
        }
    }
    let mut cn2 = T::zero();
    for i in 0..c.nrows() {
        for j in 0..l {
            cn2 += (dense::cmod(c[(i, j)]) * d[j]).powi(2);
        }
    }
    if bn2 > T::zero() && cn2 > T::zero() {
        let g = if pow2 {
            let quarter_log = (bn2.to_f64_lossy() / cn2.to_f64_lossy()).log2() / 4.0;
            pow2i::<T>(quarter_log.round() as i64)
        } else {
            (bn2 / cn2).sqrt().sqrt()
        };
        if g.to_f64_lossy().is_finite() && g > T::zero() {
            for di in &mut d {
                *di *= g;
            }
        }
    }
    Ok(d)
}

/// Apply the full procedure to a quadruple: balance, pick d_λ so the state
/// matrix has norm at most one, pick d_R so the largest of the remaining
/// norms lands at one, and map the coefficients. Returns the scaled
/// quadruple together with the factors.
///
/// In pow2 mode d_λ and d_R are rounded down to powers of two; the norm of
/// the scaled state matrix stays ≤ 1 and the max of the other three norms
/// lands in [1/2, 1].
pub fn scale_quadruple<T: Scalar>(
    q: &RationalQuadruple<T>,
    pow2: bool,
) -> Result<(RationalQuadruple<T>, ScalingResult<T>)> {
    let l = q.state_dim();
    let t_diag = balance(&q.a, &q.b, &q.c, pow2)?;

    // similarity and row/column maps; exact when the factors are powers of two
    let mut at = q.a.clone();
    for i in 0..l {
        for j in 0..l {
            at[(i, j)] *= scalar(t_diag[j] / t_diag[i]);
        }
    }
    let mut bt = q.b.clone();
    for i in 0..l {
        for j in 0..bt.ncols() {
            bt[(i, j)] /= scalar(t_diag[i]);
        }
    }
    let mut ct = q.c.clone();
    for i in 0..ct.nrows() {
        for j in 0..l {
            ct[(i, j)] *= scalar(t_diag[j]);
        }
    }

    let anorm = dense::fro(&at);
    let d_lambda = if anorm <= T::one() {
        T::one()
    } else if pow2 {
        pow2i(pow2_floor_exp(1.0 / anorm.to_f64_lossy()))
    } else {
        T::one() / anorm
    };

    let bt_n = dense::fro(&bt);
    let ct_n = dense::fro(&ct);
    let b_term = d_lambda * bt_n * bt_n;
    let c_term = d_lambda * ct_n * ct_n;
    let mut w2 = T::zero();
    for i in 0..=q.degree() {
        let scaled = d_lambda.powi(-(i as i32)) * dense::fro(q.d.coeff(i));
        w2 += scaled * scaled;
    }
    let d_term = w2.sqrt();
    let largest = b_term.max(c_term).max(d_term);
    let d_r = if largest == T::zero() {
        T::one()
    } else if pow2 {
        pow2i(pow2_floor_exp(1.0 / largest.to_f64_lossy()))
    } else {
        T::one() / largest
    };

    let (a_hat, b_hat, c_hat, d_hat) = if pow2 {
        let alam = log2_exact(d_lambda)?;
        let ar = log2_exact(d_r)?;
        let half = scalar(half_pow2::<T>(alam + ar));
        let a_hat = &at * scalar(pow2i::<T>(alam));
        let b_hat = &bt * half;
        let c_hat = &ct * half;
        let coeffs = (0..=q.degree())
            .map(|i| q.d.coeff(i) * scalar(pow2i::<T>(ar - (i as i64) * alam)))
            .collect();
        (a_hat, b_hat, c_hat, PolyMatrix::new(coeffs)?)
    } else {
        let half = scalar((d_lambda * d_r).sqrt());
        let a_hat = &at * scalar(d_lambda);
        let b_hat = &bt * half;
        let c_hat = &ct * half;
        let coeffs = (0..=q.degree())
            .map(|i| q.d.coeff(i) * scalar(d_r * d_lambda.powi(-(i as i32))))
            .collect();
        (a_hat, b_hat, c_hat, PolyMatrix::new(coeffs)?)
    };

    let q_hat = RationalQuadruple::new(a_hat, b_hat, c_hat, d_hat)?;
    let sr = ScalingResult { t_diag, d_lambda, d_r, pow2 };
    Ok((q_hat, sr))
}

/// Invert `scale_quadruple`. The state matrix and the numerator coefficients
/// come back exactly in pow2 mode; B and C come back exactly whenever
/// `half_factor_exact` holds and to a rounding error otherwise.
pub fn unscale_quadruple<T: Scalar>(
    q_hat: &RationalQuadruple<T>,
    sr: &ScalingResult<T>,
) -> Result<RationalQuadruple<T>> {
    let l = q_hat.state_dim();
    if sr.t_diag.len() != l {
        return Err(Error::Dimension(
            "scaling diagonal does not match the state dimension".into(),
        ));
    }
    let exps = if sr.pow2 {
        Some((log2_exact(sr.d_lambda)?, log2_exact(sr.d_r)?))
    } else {
        None
    };
    let half = match exps {
        Some((alam, ar)) => half_pow2::<T>(alam + ar),
        None => (sr.d_lambda * sr.d_r).sqrt(),
    };

    let mut a = q_hat.a.clone();
    for i in 0..l {
        for j in 0..l {
            a[(i, j)] = a[(i, j)] / scalar(sr.d_lambda) * scalar(sr.t_diag[i] / sr.t_diag[j]);
        }
    }
    let mut b = q_hat.b.clone();
    for i in 0..l {
        for j in 0..b.ncols() {
            b[(i, j)] = b[(i, j)] / scalar(half) * scalar(sr.t_diag[i]);
        }
    }
    let mut c = q_hat.c.clone();
    for i in 0..c.nrows() {
        for j in 0..l {
            c[(i, j)] = c[(i, j)] / scalar(half) / scalar(sr.t_diag[j]);
        }
    }
    let coeffs = (0..=q_hat.degree())
        .map(|i| {
            let f = match exps {
                Some((alam, ar)) => pow2i::<T>((i as i64) * alam - ar),
                None => sr.d_lambda.powi(i as i32) / sr.d_r,
            };
            q_hat.d.coeff(i) * scalar(f)
        })
        .collect();
    RationalQuadruple::new(a, b, c, PolyMatrix::new(coeffs)?)
}

/// Half exponents (value = 2^(p/2)) of the left and right pencil diagonals
/// in pow2 mode: output rows get d_R^{1/2}·d_λ^{i−η}, state rows
/// d_λ^{1/2}·d_k⁻¹, Kronecker rows d_R^{−1/2}·d_λ^{ε−i}, and dually for the
/// columns with ε and η swapped and d_k instead of d_k⁻¹.
fn half_exponents(
    s: &GridShape,
    alam: i64,
    ar: i64,
    ei: &[i64],
) -> (Vec<i64>, Vec<i64>) {
    let mut p = Vec::with_capacity(s.rows);
    for i in 0..=s.eta {
        let v = ar + 2 * (i as i64 - s.eta as i64) * alam;
        p.extend(std::iter::repeat(v).take(s.m));
    }
    for k in 0..s.l {
        p.push(alam - 2 * ei[k]);
    }
    for i in 0..s.eps {
        let v = -ar + 2 * (s.eps as i64 - i as i64) * alam;
        p.extend(std::iter::repeat(v).take(s.n));
    }
    let mut q = Vec::with_capacity(s.cols);
    for j in 0..=s.eps {
        let v = ar + 2 * (j as i64 - s.eps as i64) * alam;
        q.extend(std::iter::repeat(v).take(s.n));
    }
    for k in 0..s.l {
        q.push(alam + 2 * ei[k]);
    }
    for j in 0..s.eta {
        let v = -ar + 2 * (s.eta as i64 - j as i64) * alam;
        q.extend(std::iter::repeat(v).take(s.m));
    }
    (p, q)
}

struct GridShape {
    m: usize,
    n: usize,
    l: usize,
    eps: usize,
    eta: usize,
    rows: usize,
    cols: usize,
}

/// Scale an already built structured pencil: left and right diagonal factors
/// plus the substitution λ = λ̂/d_λ, which divides the λ coefficient by d_λ.
/// For a pencil built from a quadruple q this agrees with building the
/// pencil of the scaled quadruple; in pow2 mode the agreement is bitwise.
pub fn scale_pencil<T: Scalar>(
    s: &BlockKroneckerPencil<T>,
    sr: &ScalingResult<T>,
) -> Result<BlockKroneckerPencil<T>> {
    if sr.t_diag.len() != s.state_dim {
        return Err(Error::Dimension(
            "scaling diagonal does not match the pencil state dimension".into(),
        ));
    }
    let shape = GridShape {
        m: s.m,
        n: s.n,
        l: s.state_dim,
        eps: s.eps,
        eta: s.eta,
        rows: s.row_offsets[3],
        cols: s.col_offsets[3],
    };
    let mut out = s.s.clone();

    if sr.pow2 {
        let alam = log2_exact(sr.d_lambda)?;
        let ar = log2_exact(sr.d_r)?;
        let ei: Vec<i64> = sr
            .t_diag
            .iter()
            .map(|d| log2_exact(*d))
            .collect::<Result<_>>()?;
        let (p, q) = half_exponents(&shape, alam, ar, &ei);
        for r in 0..shape.rows {
            for c in 0..shape.cols {
                let sum = p[r] + q[c];
                out.p0[(r, c)] *= scalar(half_pow2::<T>(sum));
                out.p1[(r, c)] *= scalar(half_pow2::<T>(sum - 2 * alam));
            }
        }
    } else {
        let rt_r = sr.d_r.sqrt();
        let rt_l = sr.d_lambda.sqrt();
        let mut dl = Vec::with_capacity(shape.rows);
        for i in 0..=shape.eta {
            let v = rt_r * sr.d_lambda.powi(i as i32 - shape.eta as i32);
            dl.extend(std::iter::repeat(v).take(shape.m));
        }
        for k in 0..shape.l {
            dl.push(rt_l / sr.t_diag[k]);
        }
        for i in 0..shape.eps {
            let v = sr.d_lambda.powi(shape.eps as i32 - i as i32) / rt_r;
            dl.extend(std::iter::repeat(v).take(shape.n));
        }
        let mut dr = Vec::with_capacity(shape.cols);
        for j in 0..=shape.eps {
            let v = rt_r * sr.d_lambda.powi(j as i32 - shape.eps as i32);
            dr.extend(std::iter::repeat(v).take(shape.n));
        }
        for k in 0..shape.l {
            dr.push(rt_l * sr.t_diag[k]);
        }
        for j in 0..shape.eta {
            let v = sr.d_lambda.powi(shape.eta as i32 - j as i32) / rt_r;
            dr.extend(std::iter::repeat(v).take(shape.m));
        }
        let inv_lam = T::one() / sr.d_lambda;
        for r in 0..shape.rows {
            for c in 0..shape.cols {
                let f = dl[r] * dr[c];
                out.p0[(r, c)] *= scalar(f);
                out.p1[(r, c)] *= scalar(f * inv_lam);
            }
        }
    }

    Ok(BlockKroneckerPencil {
        s: out,
        m: s.m,
        n: s.n,
        state_dim: s.state_dim,
        eps: s.eps,
        eta: s.eta,
        row_offsets: s.row_offsets,
        col_offsets: s.col_offsets,
    })
}

/// Map eigenvalues of a scaled pencil back: λ = λ̂/d_λ. Infinite inputs
/// (infinite components) stay infinite.
pub fn unscale_eigenvalues<T: Scalar>(
    vals: &[Complex<T>],
    sr: &ScalingResult<T>,
) -> Vec<Complex<T>> {
    let d = scalar(sr.d_lambda);
    let finite = |z: &Complex<T>| {
        z.re.to_f64_lossy().is_finite() && z.im.to_f64_lossy().is_finite()
    };
    vals.iter()
        .map(|z| if finite(z) { *z / d } else { *z })
        .collect()
}
