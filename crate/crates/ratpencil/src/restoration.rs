//! Recovery of block Kronecker structure after a dense perturbation.
//!
//! A structured linearization that went through a backward stable eigensolver
//! comes back as S + Δ with every block polluted. The three sweeps here build
//! strict equivalence multipliers (I − X)·(S + Δ)·(I − Y) that put the zero,
//! Kronecker, identity and corner blocks back exactly, so a nearby state
//! space quadruple can be read off again. Each sweep reports its multipliers
//! together with the growth constants that make the procedure backward stable.

use num_complex::Complex;

use crate::dense;
use crate::eigensolver;
use crate::errors::{Error, Result};
use crate::linalg;
use crate::linearization::{self, BlockKroneckerPencil};
use crate::pencil_core::{structural_blocks, Pencil, RationalQuadruple};
use crate::sylvester;
use crate::{CMat, CVec, Scalar};

/// Iteration cap for the fixed point sweep of step 1.
const STEP1_MAX_ITER: usize = 50;
/// Stagnation threshold for step 1, times ε_M·‖Ŝ‖_F.
const STEP1_STAGNATION_FACTOR: f64 = 1e-2;
/// Residual allowed in a structural block before it is overwritten exactly,
/// times ε_M·‖Ŝ‖_F.
const SNAP_TOL_FACTOR: f64 = 1e3;
/// Drift allowed between (I − total_x)·Ŝ·(I − total_y) and the snapped
/// result, times ε_M·‖Ŝ‖_F. Looser than SNAP_TOL_FACTOR because three snaps
/// and two extra products accumulate.
const RECOMPOSE_TOL_FACTOR: f64 = 1e4;
/// Relative agreement required between eigenvalues of the input pencil and
/// of the restored one.
const EIG_MATCH_TOL: f64 = 1e-6;

/// Block grid of a structured pencil: row blocks of heights (η+1)m, ℓ, εn
/// and column blocks of widths (ε+1)n, ℓ, ηm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims {
    pub m: usize,
    pub n: usize,
    pub state_dim: usize,
    pub eps: usize,
    pub eta: usize,
}

impl GridDims {
    pub fn new(m: usize, n: usize, state_dim: usize, eps: usize, eta: usize) -> Self {
        Self { m, n, state_dim, eps, eta }
    }

    /// Grid of an already built structured pencil.
    pub fn of<T: Scalar>(s: &BlockKroneckerPencil<T>) -> Self {
        Self { m: s.m, n: s.n, state_dim: s.state_dim, eps: s.eps, eta: s.eta }
    }

    pub fn row_offsets(&self) -> [usize; 4] {
        let a = (self.eta + 1) * self.m;
        [0, a, a + self.state_dim, a + self.state_dim + self.eps * self.n]
    }

    pub fn col_offsets(&self) -> [usize; 4] {
        let a = (self.eps + 1) * self.n;
        [0, a, a + self.state_dim, a + self.state_dim + self.eta * self.m]
    }

    pub fn nrows(&self) -> usize {
        self.row_offsets()[3]
    }

    pub fn ncols(&self) -> usize {
        self.col_offsets()[3]
    }
}

/// One strict equivalence sweep (I − X)·Ŝ·(I − Y) of the pipeline.
#[derive(Debug, Clone)]
pub struct RestorationStep<T: Scalar> {
    /// Left correction, applied as I − X.
    pub x: CMat<T>,
    /// Right correction, applied as I − Y.
    pub y: CMat<T>,
    /// √(‖X‖_F² + ‖Y‖_F²).
    pub xy_norm: T,
    /// ‖Ŝ_k − Ŝ_{k−1}‖_F, the change this sweep made to the pencil.
    pub step_delta_norm: T,
    /// ‖Ŝ_k − S_ref‖_F. The step functions fill this with step_delta_norm;
    /// `restore` overwrites it with the distance from the nominal structured
    /// pencil when one is given, else from the final restored pencil.
    pub cumulative_delta_norm: T,
    /// Fixed point updates used (step 1 only; the direct sweeps report 0).
    pub iterations: usize,
}

/// Constants controlling the growth of the restoration, evaluated for a
/// nominal quadruple and its structured pencil.
#[derive(Debug, Clone)]
pub struct BoundReport<T: Scalar> {
    /// 1 + 2ε·max(1, ‖A‖₂^ε).
    pub alpha: T,
    /// 1 + 2η·max(1, ‖A‖₂^η).
    pub beta: T,
    /// (ε + η)/(2√2).
    pub gamma: T,
    /// max(α, β, γ) + γ(β‖B‖₂ + α‖C‖₂); its reciprocal lower bounds
    /// σ_min of the step 1 coefficient matrix.
    pub s: T,
    /// Step 1 growth factor 4√2·s/(2 − √3).
    pub f1: T,
    /// Step 2 growth factor √2(4 max(ε,η) − 1)/3.
    pub f2: T,
    /// Step 3 growth factor √2(1 + 2 max(ε,η)·max(1, ‖A‖₂^max(ε,η))).
    pub f3: T,
    /// σ_min of the nominal step 1 coefficient matrix, computed by SVD.
    pub sigma_min_t: T,
    /// Bound on how far the perturbation can move that matrix in 2-norm.
    /// `bound_constants` uses the certified surrogate √3·Δnorm; `restore`
    /// replaces it with the 2-norm of the actual difference.
    pub delta_t_norm: T,
    /// sigma_min_t − delta_t_norm, the contraction margin of step 1.
    pub sigma: T,
    /// Size of the blocks step 1 must remove. `bound_constants` uses the
    /// surrogate Δnorm; `restore` replaces it with the exact block norm.
    pub theta: T,
    /// Upper bound on ‖(M, A − λI, B, C)‖_F plus the perturbation size.
    pub omega_cap: T,
    /// End to end amplification constant from pencil perturbations to
    /// quadruple perturbations, relative to ‖R‖_F.
    pub k_sr: T,
    /// max(ε, η).
    pub t: usize,
    /// Exponent q in the simplified bound k_sr ≤ g·t^q·√(m+n):
    /// 5 when both ε and η are positive, 9/2 otherwise.
    pub g_exponent: T,
    /// The implied g, that is k_sr/(t^q·√(m+n)).
    pub g_implied: T,
    /// Relative perturbation size ‖Δ_S‖_F/‖S‖_F.
    pub delta: T,
    /// Whether σ > 0 and θ·ω/σ² < 1/4, the fixed point hypothesis.
    pub contraction_ok: bool,
    /// Whether Δnorm is below the a priori threshold
    /// ((2 − √3)/(4s))²/(1 + ‖(M, A − λI, B, C)‖_F).
    pub smallness_ok: bool,
}

/// Full output of `restore` or `restore_linear`.
#[derive(Debug, Clone)]
pub struct RestorationResult<T: Scalar> {
    /// Per sweep multipliers and norms, in application order.
    pub steps: Vec<RestorationStep<T>>,
    /// The exactly structured pencil, strictly equivalent to the input.
    pub restored: BlockKroneckerPencil<T>,
    /// State space data read off the restored pencil.
    pub quadruple: RationalQuadruple<T>,
    /// Combined left correction: I − total_x is the product of the per sweep
    /// left factors, outermost last.
    pub total_x: CMat<T>,
    /// Combined right correction, same convention.
    pub total_y: CMat<T>,
    /// Growth constants, present when a nominal quadruple was supplied.
    pub bounds: Option<BoundReport<T>>,
    /// √(‖ΔA‖² + ‖ΔB‖² + ‖ΔC‖² + Σᵢ‖ΔDᵢ‖²)/‖R‖_F against the nominal data.
    pub backward_error_lhs: Option<T>,
    /// Non fatal observations: hypothesis violations, degree degeneracies,
    /// near singular eigenvalue checks.
    pub warnings: Vec<String>,
}

fn check_dims<T: Scalar>(s: &Pencil<T>, d: &GridDims) -> Result<()> {
    if d.m == 0 || d.n == 0 || d.state_dim == 0 {
        return Err(Error::InvalidArgument(
            "block grid needs m, n and state_dim at least 1".into(),
        ));
    }
    if d.eps == 0 && d.eta == 0 {
        return Err(Error::InvalidArgument(
            "grid with eps = eta = 0 has no Kronecker blocks; use restore_linear".into(),
        ));
    }
    if s.shape() != (d.nrows(), d.ncols()) {
        return Err(Error::Dimension(format!(
            "pencil is {:?} but the grid wants {:?}",
            s.shape(),
            (d.nrows(), d.ncols())
        )));
    }
    Ok(())
}

fn block_of<T: Scalar>(s: &Pencil<T>, d: &GridDims, i: usize, j: usize) -> Pencil<T> {
    let r = d.row_offsets();
    let c = d.col_offsets();
    s.block(r[i], c[j], r[i + 1] - r[i], c[j + 1] - c[j])
}

/// Split a pencil block into the coefficients of the form A − λB, which is
/// the convention all restoration equations are written in. With our storage
/// p0 + λp1 this is (p0, −p1).
fn ab<T: Scalar>(p: &Pencil<T>) -> (CMat<T>, CMat<T>) {
    (p.p0.clone(), -&p.p1)
}

fn conjugate<T: Scalar>(p: &Pencil<T>, left: &CMat<T>, right: &CMat<T>) -> Pencil<T> {
    Pencil { p0: left * &p.p0 * right, p1: left * &p.p1 * right }
}

fn pair_norm<T: Scalar>(x: &CMat<T>, y: &CMat<T>) -> T {
    dense::fro_joint(&[x, y])
}

fn col<T: Scalar>(v: &CVec<T>) -> CMat<T> {
    CMat::from_column_slice(v.len(), 1, v.as_slice())
}

fn stack_vecs<T: Scalar>(parts: &[&CMat<T>]) -> CVec<T> {
    let total = parts.iter().map(|p| p.len()).sum();
    let mut v = CVec::zeros(total);
    let mut off = 0;
    for p in parts {
        for (k, z) in p.as_slice().iter().enumerate() {
            v[off + k] = *z;
        }
        off += p.len();
    }
    v
}

/// Joint Frobenius norm of the three blocks step 1 has to zero out:
/// (2,3), (3,2) and (3,3) of the grid.
fn anti_block_residual<T: Scalar>(s: &Pencil<T>, d: &GridDims) -> T {
    let b23 = block_of(s, d, 1, 2).fro_norm();
    let b32 = block_of(s, d, 2, 1).fro_norm();
    let b33 = block_of(s, d, 2, 2).fro_norm();
    (b23 * b23 + b32 * b32 + b33 * b33).sqrt()
}

fn zero_region<T: Scalar>(s: &mut Pencil<T>, r0: usize, c0: usize, r: usize, c: usize) {
    let z = Complex::new(T::zero(), T::zero());
    s.p0.view_mut((r0, c0), (r, c)).fill(z);
    s.p1.view_mut((r0, c0), (r, c)).fill(z);
}

fn zero_anti_blocks<T: Scalar>(s: &mut Pencil<T>, d: &GridDims) {
    let r = d.row_offsets();
    let c = d.col_offsets();
    zero_region(s, r[1], c[2], r[2] - r[1], c[3] - c[2]);
    zero_region(s, r[2], c[1], r[3] - r[2], c[2] - c[1]);
    zero_region(s, r[2], c[2], r[3] - r[2], c[3] - c[2]);
}

/// Shapes of the six step 1 unknowns, in the packing order
/// X₂₁, Y₂₃, X₃₂, Y₁₂, X₃₁, Y₁₃ (left corrections by row block, right
/// corrections by column block).
fn step1_segment_shapes(d: &GridDims) -> [(usize, usize); 6] {
    let (m, n, l, e, h) = (d.m, d.n, d.state_dim, d.eps, d.eta);
    [
        (l, (h + 1) * m),
        (l, h * m),
        (e * n, l),
        ((e + 1) * n, l),
        (e * n, (h + 1) * m),
        ((e + 1) * n, h * m),
    ]
}

fn step1_unpack<T: Scalar>(x: &CMat<T>, d: &GridDims) -> Vec<CMat<T>> {
    let s = x.as_slice();
    let mut out = Vec::with_capacity(6);
    let mut off = 0;
    for (r, c) in step1_segment_shapes(d) {
        out.push(CMat::from_column_slice(r, c, &s[off..off + r * c]));
        off += r * c;
    }
    out
}

/// Coefficient matrix of the linearized block zeroing equations, assembled
/// from the blocks of the pencil that is passed in. Feeding the perturbed
/// pencil gives the operator the fixed point iteration inverts; feeding the
/// nominal one gives the unperturbed operator used in the bounds. Row blocks
/// come in λ⁰/λ¹ pairs for the (2,3), (3,2) and (3,3) equations; columns
/// follow the unknown order of `step1_segment_shapes`.
pub fn step1_coefficient_matrix<T: Scalar>(s: &Pencil<T>, dims: &GridDims) -> Result<CMat<T>> {
    check_dims(s, dims)?;
    let (m, n, l) = (dims.m, dims.n, dims.state_dim);
    let (e, h) = (dims.eps, dims.eta);

    let (s12a, s12b) = ab(&block_of(s, dims, 0, 1));
    let (s13a, s13b) = ab(&block_of(s, dims, 0, 2));
    let (s21a, s21b) = ab(&block_of(s, dims, 1, 0));
    let (s22a, s22b) = ab(&block_of(s, dims, 1, 1));
    let (s23a, s23b) = ab(&block_of(s, dims, 1, 2));
    let (s31a, s31b) = ab(&block_of(s, dims, 2, 0));
    let (s32a, s32b) = ab(&block_of(s, dims, 2, 1));

    let row_sizes = [l * h * m, l * h * m, e * n * l, e * n * l, e * n * h * m, e * n * h * m];
    let col_sizes: Vec<usize> = step1_segment_shapes(dims).iter().map(|(r, c)| r * c).collect();
    let mut row_off = [0usize; 6];
    let mut col_off = [0usize; 6];
    for i in 1..6 {
        row_off[i] = row_off[i - 1] + row_sizes[i - 1];
        col_off[i] = col_off[i - 1] + col_sizes[i - 1];
    }
    let mut t = CMat::zeros(row_off[5] + row_sizes[5], col_off[5] + col_sizes[5]);

    let eye_l = dense::eye::<T>(l);
    let eye_hm = dense::eye::<T>(h * m);
    let eye_en = dense::eye::<T>(e * n);
    let put = |t: &mut CMat<T>, r: usize, c: usize, b: CMat<T>| {
        dense::set_block(t, row_off[r], col_off[c], &b);
    };

    // λ⁰ and λ¹ rows of the (2,3) equation: X₂₁Ŝ₁₃ + Ŝ₂₂Y₂₃ + Ŝ₂₁Y₁₃
    put(&mut t, 0, 0, dense::kron(&s13a.transpose(), &eye_l));
    put(&mut t, 0, 1, dense::kron(&eye_hm, &s22a));
    put(&mut t, 0, 5, dense::kron(&eye_hm, &s21a));
    put(&mut t, 1, 0, dense::kron(&s13b.transpose(), &eye_l));
    put(&mut t, 1, 1, dense::kron(&eye_hm, &s22b));
    put(&mut t, 1, 5, dense::kron(&eye_hm, &s21b));
    // rows of the (3,2) equation: X₃₂Ŝ₂₂ + Ŝ₃₁Y₁₂ + X₃₁Ŝ₁₂
    put(&mut t, 2, 2, dense::kron(&s22a.transpose(), &eye_en));
    put(&mut t, 2, 3, dense::kron(&eye_l, &s31a));
    put(&mut t, 2, 4, dense::kron(&s12a.transpose(), &eye_en));
    put(&mut t, 3, 2, dense::kron(&s22b.transpose(), &eye_en));
    put(&mut t, 3, 3, dense::kron(&eye_l, &s31b));
    put(&mut t, 3, 4, dense::kron(&s12b.transpose(), &eye_en));
    // rows of the (3,3) equation: X₃₂Ŝ₂₃ + Ŝ₃₂Y₂₃ + X₃₁Ŝ₁₃ + Ŝ₃₁Y₁₃
    put(&mut t, 4, 1, dense::kron(&eye_hm, &s32a));
    put(&mut t, 4, 2, dense::kron(&s23a.transpose(), &eye_en));
    put(&mut t, 4, 4, dense::kron(&s13a.transpose(), &eye_en));
    put(&mut t, 4, 5, dense::kron(&eye_hm, &s31a));
    put(&mut t, 5, 1, dense::kron(&eye_hm, &s32b));
    put(&mut t, 5, 2, dense::kron(&s23b.transpose(), &eye_en));
    put(&mut t, 5, 4, dense::kron(&s13b.transpose(), &eye_en));
    put(&mut t, 5, 5, dense::kron(&eye_hm, &s31b));

    Ok(t)
}

/// Right hand side of the linearized equations: the λ⁰/λ¹ parts of the three
/// blocks to be removed.
fn step1_rhs<T: Scalar>(s: &Pencil<T>, d: &GridDims) -> CVec<T> {
    let (a23, b23) = ab(&block_of(s, d, 1, 2));
    let (a32, b32) = ab(&block_of(s, d, 2, 1));
    let (a33, b33) = ab(&block_of(s, d, 2, 2));
    stack_vecs(&[&a23, &b23, &a32, &b32, &a33, &b33])
}

/// Quadratic terms of the block zeroing equations at the given unknowns,
/// stacked in the same order as the right hand side.
fn step1_quadratic_terms<T: Scalar>(s: &Pencil<T>, d: &GridDims, u: &[CMat<T>]) -> CVec<T> {
    let (s11a, s11b) = ab(&block_of(s, d, 0, 0));
    let (s12a, s12b) = ab(&block_of(s, d, 0, 1));
    let (s21a, s21b) = ab(&block_of(s, d, 1, 0));
    let (s22a, s22b) = ab(&block_of(s, d, 1, 1));
    // shared products: the (3,·) left combinations and the (·,3) right ones
    let ra = &s11a * &u[5] + &s12a * &u[1];
    let rb = &s11b * &u[5] + &s12b * &u[1];
    let la = &u[4] * &s11a + &u[2] * &s21a;
    let lb = &u[4] * &s11b + &u[2] * &s21b;
    let z1 = &u[0] * &ra;
    let z2 = &u[0] * &rb;
    let z3 = &la * &u[3];
    let z4 = &lb * &u[3];
    let z5 = &la * &u[5] + (&u[4] * &s12a + &u[2] * &s22a) * &u[1];
    let z6 = &lb * &u[5] + (&u[4] * &s12b + &u[2] * &s22b) * &u[1];
    stack_vecs(&[&z1, &z2, &z3, &z4, &z5, &z6])
}

/// Place the six unknowns into full size strictly triangular corrections:
/// X carries the blocks below the diagonal of the row grid, Y the blocks
/// above the diagonal of the column grid.
fn step1_multipliers<T: Scalar>(d: &GridDims, u: &[CMat<T>]) -> (CMat<T>, CMat<T>) {
    let r = d.row_offsets();
    let c = d.col_offsets();
    let mut x = CMat::zeros(r[3], r[3]);
    dense::set_block(&mut x, r[1], r[0], &u[0]);
    dense::set_block(&mut x, r[2], r[1], &u[2]);
    dense::set_block(&mut x, r[2], r[0], &u[4]);
    let mut y = CMat::zeros(c[3], c[3]);
    dense::set_block(&mut y, c[0], c[1], &u[3]);
    dense::set_block(&mut y, c[0], c[2], &u[5]);
    dense::set_block(&mut y, c[1], c[2], &u[1]);
    (x, y)
}

/// First sweep: zero the (2,3), (3,2) and (3,3) blocks with block triangular
/// multipliers. The corrections solve a quadratic matrix system; each fixed
/// point update is the minimum norm solution of the linearized system with
/// the quadratic terms frozen at the previous iterate. The pseudoinverse is
/// factored once and reused.
pub fn step1_antitriangularize<T: Scalar>(
    s_hat: &Pencil<T>,
    dims: &GridDims,
) -> Result<(RestorationStep<T>, Pencil<T>)> {
    check_dims(s_hat, dims)?;
    let coeff = step1_coefficient_matrix(s_hat, dims)?;
    let rhs = step1_rhs(s_hat, dims);
    let decomp = linalg::svd(&coeff);

    let scale = s_hat.fro_norm();
    let tol = T::fr(STEP1_STAGNATION_FACTOR) * T::eps() * scale;
    let mut xk = decomp.min_norm_solve(&col(&rhs));
    let mut iterations = 0;
    let mut last_step = T::zero();
    let mut converged = false;
    for it in 1..=STEP1_MAX_ITER {
        let u = step1_unpack(&xk, dims);
        let z = step1_quadratic_terms(s_hat, dims, &u);
        let next = decomp.min_norm_solve(&col(&(&rhs + &z)));
        last_step = (&next - &xk).norm();
        xk = next;
        iterations = it;
        if last_step <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: STEP1_MAX_ITER,
            residual: last_step.to_f64_lossy(),
        });
    }

    let u = step1_unpack(&xk, dims);
    let (x, y) = step1_multipliers(dims, &u);
    let left = dense::eye::<T>(x.nrows()) - &x;
    let right = dense::eye::<T>(y.nrows()) - &y;
    let mut s1 = conjugate(s_hat, &left, &right);

    let resid = anti_block_residual(&s1, dims);
    let snap_tol = T::fr(SNAP_TOL_FACTOR) * T::eps() * scale;
    if resid > snap_tol {
        return Err(Error::Internal(format!(
            "triangularization left residual {:.3e} in the zero blocks (allowed {:.3e})",
            resid.to_f64_lossy(),
            snap_tol.to_f64_lossy()
        )));
    }
    zero_anti_blocks(&mut s1, dims);

    let step_delta_norm = (&s1 - s_hat).fro_norm();
    let step = RestorationStep {
        xy_norm: pair_norm(&x, &y),
        x,
        y,
        step_delta_norm,
        cumulative_delta_norm: step_delta_norm,
        iterations,
    };
    Ok((step, s1))
}

/// Second sweep: with the lower right blocks already zero, restore the two
/// Kronecker blocks and the identity part of the middle block using a block
/// diagonal equivalence. The two Kronecker solves reuse the pencil
/// equivalence machinery; the identity block is fixed by inverting its λ
/// coefficient.
pub fn step2_restore_kronecker<T: Scalar>(
    s1: &Pencil<T>,
    dims: &GridDims,
) -> Result<(RestorationStep<T>, Pencil<T>)> {
    check_dims(s1, dims)?;
    let scale = s1.fro_norm();
    let snap_tol = T::fr(SNAP_TOL_FACTOR) * T::eps() * scale;
    if anti_block_residual(s1, dims) > snap_tol {
        return Err(Error::Structure(
            "lower right blocks are not zero yet; run the triangularization sweep first".into(),
        ));
    }

    let (m, n, l) = (dims.m, dims.n, dims.state_dim);
    let r = dims.row_offsets();
    let c = dims.col_offsets();
    let mut x = CMat::<T>::zeros(r[3], r[3]);
    let mut y = CMat::<T>::zeros(c[3], c[3]);

    let k1 = if dims.eps > 0 {
        let target = structural_blocks::<T>(dims.eps, n)?.lkron;
        let perturbed = block_of(s1, dims, 2, 0);
        let er = sylvester::restore_equivalence(&target, &perturbed)?;
        if !er.ok {
            return Err(Error::Degenerate(format!(
                "left Kronecker block is too far from structured (residual {:.3e})",
                er.residual.to_f64_lossy()
            )));
        }
        let k = er.x.nrows();
        let inv = linalg::inverse(&(dense::eye::<T>(k) + &er.x)).map_err(|_| {
            Error::Degenerate("left Kronecker correction is not invertible".into())
        })?;
        dense::set_block(&mut x, r[2], r[2], &(dense::eye::<T>(k) - &inv));
        dense::set_block(&mut y, c[0], c[0], &er.y);
        Some(target)
    } else {
        None
    };

    let k2t = if dims.eta > 0 {
        let target = structural_blocks::<T>(dims.eta, m)?.lkron;
        let perturbed = block_of(s1, dims, 0, 2).transpose();
        let er = sylvester::restore_equivalence(&target, &perturbed)?;
        if !er.ok {
            return Err(Error::Degenerate(format!(
                "right Kronecker block is too far from structured (residual {:.3e})",
                er.residual.to_f64_lossy()
            )));
        }
        let k = er.x.nrows();
        let inv = linalg::inverse(&(dense::eye::<T>(k) + &er.x)).map_err(|_| {
            Error::Degenerate("right Kronecker correction is not invertible".into())
        })?;
        dense::set_block(&mut x, r[0], r[0], &er.y.transpose());
        dense::set_block(&mut y, c[2], c[2], &(dense::eye::<T>(k) - &inv).transpose());
        Some(target.transpose())
    } else {
        None
    };

    {
        let ihat = -&block_of(s1, dims, 1, 1).p1;
        let inv = linalg::inverse(&ihat).map_err(|_| {
            Error::Degenerate("perturbed identity block is singular".into())
        })?;
        dense::set_block(&mut x, r[1], r[1], &(dense::eye::<T>(l) - &inv));
        // y keeps a zero middle block
    }

    let left = dense::eye::<T>(r[3]) - &x;
    let right = dense::eye::<T>(c[3]) - &y;
    let mut s2 = conjugate(s1, &left, &right);

    let mut resid2 = T::zero();
    if let Some(k1) = &k1 {
        let f = (&block_of(&s2, dims, 2, 0) - k1).fro_norm();
        resid2 += f * f;
    }
    if let Some(k2t) = &k2t {
        let f = (&block_of(&s2, dims, 0, 2) - k2t).fro_norm();
        resid2 += f * f;
    }
    let f = dense::fro(&(block_of(&s2, dims, 1, 1).p1 + dense::eye::<T>(l)));
    resid2 += f * f;
    let resid = resid2.sqrt();
    if resid > snap_tol {
        return Err(Error::Internal(format!(
            "Kronecker restoration left residual {:.3e} (allowed {:.3e})",
            resid.to_f64_lossy(),
            snap_tol.to_f64_lossy()
        )));
    }
    if let Some(k1) = &k1 {
        s2.set_block(r[2], c[0], k1);
    }
    if let Some(k2t) = &k2t {
        s2.set_block(r[0], c[2], k2t);
    }
    s2.p1.view_mut((r[1], c[1]), (l, l)).copy_from(&(-dense::eye::<T>(l)));

    let step_delta_norm = (&s2 - s1).fro_norm();
    let step = RestorationStep {
        xy_norm: pair_norm(&x, &y),
        x,
        y,
        step_delta_norm,
        cumulative_delta_norm: step_delta_norm,
        iterations: 0,
    };
    Ok((step, s2))
}

/// Joint residual of everything steps 1 and 2 are supposed to have fixed:
/// the zero blocks, the two Kronecker blocks and the identity part.
fn structured_block_residual<T: Scalar>(s: &Pencil<T>, d: &GridDims) -> Result<T> {
    let r = d.row_offsets();
    let c = d.col_offsets();
    let mut acc = anti_block_residual(s, d);
    acc *= acc;
    if d.eps > 0 {
        let t = structural_blocks::<T>(d.eps, d.n)?.lkron;
        let f = (&block_of(s, d, 2, 0) - &t).fro_norm();
        acc += f * f;
    }
    if d.eta > 0 {
        let t = structural_blocks::<T>(d.eta, d.m)?.lkron.transpose();
        let f = (&block_of(s, d, 0, 2) - &t).fro_norm();
        acc += f * f;
    }
    let f = dense::fro(&(dense::get_block(&s.p1, r[1], c[1], d.state_dim, d.state_dim)
        + dense::eye::<T>(d.state_dim)));
    acc += f * f;
    Ok(acc.sqrt())
}

/// Third sweep: make the off diagonal corner blocks constant. The λ parts of
/// the top middle and middle left blocks are eliminated by forward block
/// substitution (the systems are unit triangular thanks to the Kronecker
/// blocks restored in step 2), leaving e_{η+1}⊗C̃ and B̃·(last block column)
/// exactly. Only blocks (1,1), (1,2) and (2,1) change.
pub fn step3_restore_bc<T: Scalar>(
    s2: &Pencil<T>,
    dims: &GridDims,
) -> Result<(RestorationStep<T>, Pencil<T>)> {
    check_dims(s2, dims)?;
    let scale = s2.fro_norm();
    let snap_tol = T::fr(SNAP_TOL_FACTOR) * T::eps() * scale;
    if structured_block_residual(s2, dims)? > snap_tol {
        return Err(Error::Structure(
            "Kronecker and identity blocks must be exact before the corner sweep".into(),
        ));
    }

    let (m, n, l) = (dims.m, dims.n, dims.state_dim);
    let (e, h) = (dims.eps, dims.eta);
    let r = dims.row_offsets();
    let c = dims.col_offsets();
    let a_hat = block_of(s2, dims, 1, 1).p0;

    // top middle block, split into row blocks of height m; degree 0 and 1
    // coefficients in the A − λB reading
    let cb = block_of(s2, dims, 0, 1);
    let c0 = |i: usize| dense::get_block(&cb.p0, i * m, 0, m, l);
    let c1 = |i: usize| -dense::get_block(&cb.p1, i * m, 0, m, l);
    let mut e_blocks: Vec<CMat<T>> = vec![c1(0)];
    let mut f_blocks: Vec<CMat<T>> = Vec::with_capacity(h);
    for i in 0..h {
        let fi = c0(i) - &e_blocks[i] * &a_hat;
        e_blocks.push(c1(i + 1) - &fi);
        f_blocks.push(fi);
    }
    let c_tilde = c0(h) - &e_blocks[h] * &a_hat;

    // middle left block, split into column blocks of width n
    let bb = block_of(s2, dims, 1, 0);
    let b0 = |j: usize| dense::get_block(&bb.p0, 0, j * n, l, n);
    let b1 = |j: usize| -dense::get_block(&bb.p1, 0, j * n, l, n);
    let mut g_blocks: Vec<CMat<T>> = vec![b1(0)];
    let mut h_blocks: Vec<CMat<T>> = Vec::with_capacity(e);
    for j in 0..e {
        let hj = b0(j) - &a_hat * &g_blocks[j];
        g_blocks.push(b1(j + 1) - &hj);
        h_blocks.push(hj);
    }
    let b_tilde = b0(e) - &a_hat * &g_blocks[e];

    let mut x = CMat::<T>::zeros(r[3], r[3]);
    let mut y = CMat::<T>::zeros(c[3], c[3]);
    for (i, eb) in e_blocks.iter().enumerate() {
        dense::set_block(&mut x, i * m, r[1], eb);
    }
    for (j, hb) in h_blocks.iter().enumerate() {
        dense::set_block(&mut x, r[1], r[2] + j * n, hb);
    }
    for (j, gb) in g_blocks.iter().enumerate() {
        dense::set_block(&mut y, c[1], j * n, gb);
    }
    for (i, fb) in f_blocks.iter().enumerate() {
        dense::set_block(&mut y, c[2] + i * m, c[1], fb);
    }

    let left = dense::eye::<T>(r[3]) - &x;
    let right = dense::eye::<T>(c[3]) - &y;
    let mut s3 = conjugate(s2, &left, &right);

    // residual of the two corner blocks against their constant targets
    let nb = block_of(&s3, dims, 0, 1);
    let mut resid2 = nb.p1.norm_squared();
    let f = dense::fro(&(dense::get_block(&nb.p0, h * m, 0, m, l) - &c_tilde));
    resid2 += f * f;
    if h > 0 {
        let f = dense::fro(&dense::get_block(&nb.p0, 0, 0, h * m, l));
        resid2 += f * f;
    }
    let mb = block_of(&s3, dims, 1, 0);
    resid2 += mb.p1.norm_squared();
    let f = dense::fro(&(dense::get_block(&mb.p0, 0, e * n, l, n) - &b_tilde));
    resid2 += f * f;
    if e > 0 {
        let f = dense::fro(&dense::get_block(&mb.p0, 0, 0, l, e * n));
        resid2 += f * f;
    }
    let resid = resid2.sqrt();
    if resid > snap_tol {
        return Err(Error::Internal(format!(
            "corner sweep left residual {:.3e} (allowed {:.3e})",
            resid.to_f64_lossy(),
            snap_tol.to_f64_lossy()
        )));
    }
    zero_region(&mut s3, r[0], c[1], r[1] - r[0], l);
    dense::set_block(&mut s3.p0, h * m, c[1], &c_tilde);
    zero_region(&mut s3, r[1], c[0], l, c[1] - c[0]);
    dense::set_block(&mut s3.p0, r[1], e * n, &b_tilde);

    let step_delta_norm = (&s3 - s2).fro_norm();
    let step = RestorationStep {
        xy_norm: pair_norm(&x, &y),
        x,
        y,
        step_delta_norm,
        cumulative_delta_norm: step_delta_norm,
        iterations: 0,
    };
    Ok((step, s3))
}

/// Greedy multiset comparison of generalized eigenvalues. Returns whether
/// either pencil tripped the near singularity heuristic of the solver.
fn verify_same_eigenvalues<T: Scalar>(a: &Pencil<T>, b: &Pencil<T>) -> Result<bool> {
    let ea = eigensolver::qz(a)?;
    let eb = eigensolver::qz(b)?;
    let fuzzy = ea.regularity_warning || eb.regularity_warning;
    if ea.infinite_count() != eb.infinite_count() {
        return Err(Error::Internal(format!(
            "restoration changed the infinite eigenvalue count: {} vs {}",
            ea.infinite_count(),
            eb.infinite_count()
        )));
    }
    let fa = ea.finite();
    let mut fb = eb.finite();
    if fa.len() != fb.len() {
        return Err(Error::Internal(format!(
            "restoration changed the finite eigenvalue count: {} vs {}",
            fa.len(),
            fb.len()
        )));
    }
    let tol = T::fr(EIG_MATCH_TOL);
    for za in fa {
        let mut best = 0;
        let mut best_d = T::fr(f64::MAX);
        for (j, zb) in fb.iter().enumerate() {
            let d = dense::cmod(za - *zb);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        let denom = T::one().max(dense::cmod(za));
        if best_d > tol * denom {
            return Err(Error::Internal(format!(
                "eigenvalue {:.6e}{:+.6e}i moved by {:.3e} under restoration",
                za.re.to_f64_lossy(),
                za.im.to_f64_lossy(),
                best_d.to_f64_lossy()
            )));
        }
        fb.swap_remove(best);
    }
    Ok(fuzzy)
}

/// Run the three sweeps, certify the result and read off the quadruple.
///
/// When `nominal` is given it is used as the reference for the cumulative
/// error norms, for the growth constants in `bounds` and for the relative
/// quadruple error in `backward_error_lhs`. Without it the reference is the
/// restored pencil itself and both report fields stay empty.
pub fn restore<T: Scalar>(
    s_hat: &Pencil<T>,
    dims: &GridDims,
    nominal: Option<&RationalQuadruple<T>>,
) -> Result<RestorationResult<T>> {
    check_dims(s_hat, dims)?;
    let s_nom = match nominal {
        Some(q) => {
            if q.m() != dims.m || q.n() != dims.n || q.state_dim() != dims.state_dim {
                return Err(Error::Dimension(
                    "nominal quadruple sizes do not match the block grid".into(),
                ));
            }
            if q.degree() != dims.eps + dims.eta + 1 {
                return Err(Error::Dimension(format!(
                    "nominal numerator degree {} does not match eps + eta + 1 = {}",
                    q.degree(),
                    dims.eps + dims.eta + 1
                )));
            }
            Some(linearization::build_s(q, dims.eps, dims.eta)?)
        }
        None => None,
    };

    let (mut st1, s1) = step1_antitriangularize(s_hat, dims)?;
    let (mut st2, s2) = step2_restore_kronecker(&s1, dims)?;
    let (mut st3, s3) = step3_restore_bc(&s2, dims)?;

    let left = {
        let l1 = dense::eye::<T>(dims.nrows()) - &st1.x;
        let l2 = dense::eye::<T>(dims.nrows()) - &st2.x;
        let l3 = dense::eye::<T>(dims.nrows()) - &st3.x;
        &l3 * &(&l2 * &l1)
    };
    let right = {
        let r1 = dense::eye::<T>(dims.ncols()) - &st1.y;
        let r2 = dense::eye::<T>(dims.ncols()) - &st2.y;
        let r3 = dense::eye::<T>(dims.ncols()) - &st3.y;
        &r1 * &(&r2 * &r3)
    };
    let total_x = dense::eye::<T>(dims.nrows()) - &left;
    let total_y = dense::eye::<T>(dims.ncols()) - &right;

    let recomposed = conjugate(s_hat, &left, &right);
    let drift = (&recomposed - &s3).fro_norm();
    let drift_tol = T::fr(RECOMPOSE_TOL_FACTOR) * T::eps() * s_hat.fro_norm();
    if drift > drift_tol {
        return Err(Error::Internal(format!(
            "composed transformation drifted {:.3e} from the restored pencil (allowed {:.3e})",
            drift.to_f64_lossy(),
            drift_tol.to_f64_lossy()
        )));
    }

    let mut warnings = Vec::new();
    let (m, n, l) = (dims.m, dims.n, dims.state_dim);
    let r = dims.row_offsets();
    let c = dims.col_offsets();
    let a_t = block_of(&s3, dims, 1, 1).p0;
    let b_t = dense::get_block(&s3.p0, r[1], c[1] - n, l, n);
    let c_t = dense::get_block(&s3.p0, r[1] - m, c[1], m, l);
    let d_t = linearization::recover_d(&block_of(&s3, dims, 0, 0), dims.eps, dims.eta, m, n)?;
    let lead = dense::fro(d_t.coeff(d_t.degree()));
    if lead < T::eps() * d_t.fro_norm() {
        warnings.push(format!(
            "leading numerator coefficient is tiny ({:.3e}); the effective degree dropped",
            lead.to_f64_lossy()
        ));
    }
    let quadruple = RationalQuadruple::new(a_t, b_t, c_t, d_t)?;

    if verify_same_eigenvalues(s_hat, &s3)? {
        warnings.push(
            "pencil looks numerically singular; the eigenvalue comparison may be unreliable"
                .into(),
        );
    }

    let mut bounds = None;
    let mut backward_error_lhs = None;
    if let (Some(q), Some(s_nom)) = (nominal, &s_nom) {
        let delta_pencil = s_hat - &s_nom.s;
        let delta_norm = delta_pencil.fro_norm();
        let mut rep = bound_constants(q, s_nom, delta_norm)?;
        // replace the scalar surrogates with the exact quantities now that
        // the perturbation itself is available
        rep.theta = anti_block_residual(&delta_pencil, dims);
        let t_nom = step1_coefficient_matrix(&s_nom.s, dims)?;
        let t_hat = step1_coefficient_matrix(s_hat, dims)?;
        rep.delta_t_norm = linalg::two_norm(&(&t_hat - &t_nom));
        rep.sigma = rep.sigma_min_t - rep.delta_t_norm;
        rep.contraction_ok = rep.sigma > T::zero()
            && rep.theta * rep.omega_cap < T::fr(0.25) * rep.sigma * rep.sigma;
        if !rep.contraction_ok {
            warnings.push(
                "fixed point hypothesis not certified for this perturbation; sweep ran anyway"
                    .into(),
            );
        }
        if !rep.smallness_ok {
            warnings.push(
                "perturbation exceeds the a priori smallness threshold; bounds may not apply"
                    .into(),
            );
        }

        let da = dense::fro(&(&quadruple.a - &q.a));
        let db = dense::fro(&(&quadruple.b - &q.b));
        let dc = dense::fro(&(&quadruple.c - &q.c));
        let dd = (&quadruple.d - &q.d).fro_norm();
        let num = (da * da + db * db + dc * dc + dd * dd).sqrt();
        backward_error_lhs = Some(num / q.norm_f());
        bounds = Some(rep);
    }

    let s_ref = match &s_nom {
        Some(sn) => &sn.s,
        None => &s3,
    };
    st1.cumulative_delta_norm = (&s1 - s_ref).fro_norm();
    st2.cumulative_delta_norm = (&s2 - s_ref).fro_norm();
    st3.cumulative_delta_norm = (&s3 - s_ref).fro_norm();

    let restored = BlockKroneckerPencil {
        s: s3,
        m,
        n,
        state_dim: l,
        eps: dims.eps,
        eta: dims.eta,
        row_offsets: r,
        col_offsets: c,
    };
    Ok(RestorationResult {
        steps: vec![st1, st2, st3],
        restored,
        quadruple,
        total_x,
        total_y,
        bounds,
        backward_error_lhs,
        warnings,
    })
}

/// Structure restoration for the degree one form [M(λ) C; B A − λI].
///
/// Two sweeps suffice: rescale the state rows so the λ coefficient of the
/// corner becomes −I, then strip the λ parts of the off diagonal blocks.
/// The result reuses `RestorationResult` with two steps and an empty bound
/// report; the restored pencil is stored on a degenerate grid with
/// eps = eta = 0.
pub fn restore_linear<T: Scalar>(
    s_hat: &Pencil<T>,
    m: usize,
    n: usize,
    state_dim: usize,
) -> Result<RestorationResult<T>> {
    let l = state_dim;
    if m == 0 || n == 0 || l == 0 {
        return Err(Error::InvalidArgument(
            "block sizes m, n and state_dim must be at least 1".into(),
        ));
    }
    if s_hat.shape() != (m + l, n + l) {
        return Err(Error::Dimension(format!(
            "pencil is {:?} but the split wants {:?}",
            s_hat.shape(),
            (m + l, n + l)
        )));
    }
    let scale = s_hat.fro_norm();
    let snap_tol = T::fr(SNAP_TOL_FACTOR) * T::eps() * scale;

    // sweep 1: normalize the λ coefficient of the state block
    let ihat = -dense::get_block(&s_hat.p1, m, n, l, l);
    let inv = linalg::inverse(&ihat)
        .map_err(|_| Error::Degenerate("perturbed identity block is singular".into()))?;
    let mut x1 = CMat::<T>::zeros(m + l, m + l);
    dense::set_block(&mut x1, m, m, &(dense::eye::<T>(l) - &inv));
    let y1 = CMat::<T>::zeros(n + l, n + l);
    let left1 = dense::eye::<T>(m + l) - &x1;
    let right1 = dense::eye::<T>(n + l);
    let mut s1 = conjugate(s_hat, &left1, &right1);
    let dev = dense::fro(&(dense::get_block(&s1.p1, m, n, l, l) + dense::eye::<T>(l)));
    if dev > snap_tol {
        return Err(Error::Internal(format!(
            "state block normalization left residual {:.3e} (allowed {:.3e})",
            dev.to_f64_lossy(),
            snap_tol.to_f64_lossy()
        )));
    }
    s1.p1.view_mut((m, n), (l, l)).copy_from(&(-dense::eye::<T>(l)));
    let delta1 = (&s1 - s_hat).fro_norm();
    let mut st1 = RestorationStep {
        xy_norm: pair_norm(&x1, &y1),
        x: x1,
        y: y1,
        step_delta_norm: delta1,
        cumulative_delta_norm: delta1,
        iterations: 0,
    };

    // sweep 2: constant off diagonal blocks
    let a_hat = dense::get_block(&s1.p0, m, n, l, l);
    let e1 = -dense::get_block(&s1.p1, 0, n, m, l);
    let c_tilde = dense::get_block(&s1.p0, 0, n, m, l) - &e1 * &a_hat;
    let g1 = -dense::get_block(&s1.p1, m, 0, l, n);
    let b_tilde = dense::get_block(&s1.p0, m, 0, l, n) - &a_hat * &g1;
    let mut x2 = CMat::<T>::zeros(m + l, m + l);
    dense::set_block(&mut x2, 0, m, &e1);
    let mut y2 = CMat::<T>::zeros(n + l, n + l);
    dense::set_block(&mut y2, m, 0, &g1);
    let left2 = dense::eye::<T>(m + l) - &x2;
    let right2 = dense::eye::<T>(n + l) - &y2;
    let mut s2 = conjugate(&s1, &left2, &right2);

    let mut resid2 = dense::get_block(&s2.p1, 0, n, m, l).norm_squared();
    resid2 += dense::get_block(&s2.p1, m, 0, l, n).norm_squared();
    let f = dense::fro(&(dense::get_block(&s2.p0, 0, n, m, l) - &c_tilde));
    resid2 += f * f;
    let f = dense::fro(&(dense::get_block(&s2.p0, m, 0, l, n) - &b_tilde));
    resid2 += f * f;
    if resid2.sqrt() > snap_tol {
        return Err(Error::Internal(format!(
            "corner sweep left residual {:.3e} (allowed {:.3e})",
            resid2.sqrt().to_f64_lossy(),
            snap_tol.to_f64_lossy()
        )));
    }
    let z = Complex::new(T::zero(), T::zero());
    s2.p1.view_mut((0, n), (m, l)).fill(z);
    s2.p1.view_mut((m, 0), (l, n)).fill(z);
    dense::set_block(&mut s2.p0, 0, n, &c_tilde);
    dense::set_block(&mut s2.p0, m, 0, &b_tilde);
    let delta2 = (&s2 - &s1).fro_norm();
    let mut st2 = RestorationStep {
        xy_norm: pair_norm(&x2, &y2),
        x: x2,
        y: y2,
        step_delta_norm: delta2,
        cumulative_delta_norm: delta2,
        iterations: 0,
    };

    let left = &left2 * &left1;
    let right = &right1 * &right2;
    let total_x = dense::eye::<T>(m + l) - &left;
    let total_y = dense::eye::<T>(n + l) - &right;
    let recomposed = conjugate(s_hat, &left, &right);
    let drift = (&recomposed - &s2).fro_norm();
    let drift_tol = T::fr(RECOMPOSE_TOL_FACTOR) * T::eps() * scale;
    if drift > drift_tol {
        return Err(Error::Internal(format!(
            "composed transformation drifted {:.3e} from the restored pencil (allowed {:.3e})",
            drift.to_f64_lossy(),
            drift_tol.to_f64_lossy()
        )));
    }

    let mut warnings = Vec::new();
    if verify_same_eigenvalues(s_hat, &s2)? {
        warnings.push(
            "pencil looks numerically singular; the eigenvalue comparison may be unreliable"
                .into(),
        );
    }

    let d_t = linearization::recover_d(&s2.block(0, 0, m, n), 0, 0, m, n)?;
    let quadruple = RationalQuadruple::new(a_hat, b_tilde, c_tilde, d_t)?;

    st1.cumulative_delta_norm = (&s1 - &s2).fro_norm();
    st2.cumulative_delta_norm = T::zero();

    let restored = BlockKroneckerPencil {
        s: s2,
        m,
        n,
        state_dim: l,
        eps: 0,
        eta: 0,
        row_offsets: [0, m, m + l, m + l],
        col_offsets: [0, n, n + l, n + l],
    };
    Ok(RestorationResult {
        steps: vec![st1, st2],
        restored,
        quadruple,
        total_x,
        total_y,
        bounds: None,
        backward_error_lhs: None,
        warnings,
    })
}

/// Evaluate every growth constant of the restoration for a nominal quadruple
/// and its structured pencil, at perturbation size `delta_norm`.
///
/// Only a scalar perturbation size is available here, so two quantities use
/// certified upper bound surrogates: delta_t_norm = √3·delta_norm (the
/// coefficient matrix moves at most √3 times the pencil 2-norm, which is at
/// most the Frobenius norm) and theta = delta_norm. `restore` tightens both
/// once it holds the actual perturbation.
pub fn bound_constants<T: Scalar>(
    q: &RationalQuadruple<T>,
    s: &BlockKroneckerPencil<T>,
    delta_norm: T,
) -> Result<BoundReport<T>> {
    let dims = GridDims::of(s);
    if q.m() != dims.m || q.n() != dims.n || q.state_dim() != dims.state_dim {
        return Err(Error::Dimension(
            "quadruple sizes do not match the structured pencil grid".into(),
        ));
    }
    if !delta_norm.to_f64_lossy().is_finite() || delta_norm < T::zero() {
        return Err(Error::InvalidArgument("perturbation size must be finite and nonnegative".into()));
    }
    let (e, h) = (dims.eps, dims.eta);
    let t = e.max(h);
    let one = T::one();
    let two = T::fr(2.0);
    let sqrt2 = two.sqrt();
    let sqrt3 = T::fr(3.0).sqrt();

    let a2 = linalg::two_norm(&q.a);
    let b2 = linalg::two_norm(&q.b);
    let c2 = linalg::two_norm(&q.c);
    let alpha = one + T::fr(2.0 * e as f64) * one.max(a2.powi(e as i32));
    let beta = one + T::fr(2.0 * h as f64) * one.max(a2.powi(h as i32));
    let gamma = T::fr((e + h) as f64) / (two * sqrt2);
    let s_const = alpha.max(beta).max(gamma) + gamma * (beta * b2 + alpha * c2);
    let f1 = T::fr(4.0) * sqrt2 * s_const / (two - sqrt3);
    let f2 = sqrt2 * T::fr((4 * t - 1) as f64) / T::fr(3.0);
    let f3 = sqrt2 * (one + T::fr(2.0 * t as f64) * one.max(a2.powi(t as i32)));

    let coeff = step1_coefficient_matrix(&s.s, &dims)?;
    let sigma_min_t = linalg::sigma_min(&coeff);
    let delta_t_norm = sqrt3 * delta_norm;
    let sigma = sigma_min_t - delta_t_norm;
    let theta = delta_norm;

    let m_fro = block_of(&s.s, &dims, 0, 0).fro_norm();
    let core = (m_fro * m_fro
        + dense::fro(&q.a).powi(2)
        + T::fr(dims.state_dim as f64)
        + dense::fro(&q.b).powi(2)
        + dense::fro(&q.c).powi(2))
    .sqrt();
    let omega_cap = core + delta_norm;
    let contraction_ok = sigma > T::zero() && theta * omega_cap < T::fr(0.25) * sigma * sigma;
    let quarter = (two - sqrt3) / (T::fr(4.0) * s_const);
    let smallness_ok = delta_norm < quarter * quarter / (one + core);

    let s2n = s.s.spectral_norm();
    let s_fro = s.s.fro_norm();
    let r_fro = q.norm_f();
    let k_sr = linearization::d_recovery_growth::<T>(e, h)
        * (one + f1 * s2n)
        * (one + f2 * s2n)
        * (one + f3 * s2n)
        * s_fro
        / r_fro;
    let g_exponent = if e > 0 && h > 0 { T::fr(5.0) } else { T::fr(4.5) };
    let g_implied = k_sr / (T::fr(t as f64).powf(g_exponent) * T::fr((dims.m + dims.n) as f64).sqrt());
    let delta = if s_fro > T::zero() { delta_norm / s_fro } else { T::zero() };

    Ok(BoundReport {
        alpha,
        beta,
        gamma,
        s: s_const,
        f1,
        f2,
        f3,
        sigma_min_t,
        delta_t_norm,
        sigma,
        theta,
        omega_cap,
        k_sr,
        t,
        g_exponent,
        g_implied,
        delta,
        contraction_ok,
        smallness_ok,
    })
}
