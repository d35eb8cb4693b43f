//! Plain-text serialization for the crate's working objects.
//!
//! Matrices travel in a small whitespace format: a header line
//! `rows cols complex|real` followed by the entries row by row, complex
//! entries as the two floats `re im`. Larger objects frame matrix blocks
//! with their own headers: a pencil is two blocks, a polynomial matrix is
//! a `degree d` line plus d+1 blocks, a quadruple is a `QUAD m n l d` line
//! plus the blocks of A, B, C and the D coefficients in that order.
//! Scaling factors serialize as key=value lines, eigenvalues and
//! backward-error reports as CSV. Floats are printed with enough digits
//! to round-trip bit for bit, so save and load are lossless.

use crate::backward_error::GlobalBackwardError;
use crate::eigensolver::GeneralizedEigenvalues;
use crate::pencil_core::{Pencil, PolyMatrix, RationalQuadruple};
use crate::scaling::ScalingResult;
use crate::{CMat, Error, Result, Scalar};
use num_complex::Complex;
use std::fmt::Write as _;
use std::path::Path;

/// Upper bound on entries per matrix block accepted by the parsers; a
/// corrupt header cannot then request an absurd allocation.
const MAX_ENTRIES: usize = 16_000_000;

// ---------------------------------------------------------------------------
// token-level reader

/// Whitespace token stream over an input string. Blank lines carry no
/// tokens, so block separators need no special handling on the way in.
struct Tokens<'a> {
    iter: std::str::SplitWhitespace<'a>,
    consumed: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens { iter: text.split_whitespace(), consumed: 0 }
    }

    fn next_tok(&mut self, what: &str) -> Result<&'a str> {
        match self.iter.next() {
            Some(t) => {
                self.consumed += 1;
                Ok(t)
            }
            None => Err(Error::Parse(format!(
                "input ended while reading {what} (after {} tokens)",
                self.consumed
            ))),
        }
    }

    fn usize_tok(&mut self, what: &str) -> Result<usize> {
        let t = self.next_tok(what)?;
        t.parse().map_err(|_| Error::Parse(format!("expected a count for {what}, got {t:?}")))
    }

    fn float_tok<T: Scalar>(&mut self, what: &str) -> Result<T> {
        let t = self.next_tok(what)?;
        t.parse::<f64>()
            .map(T::fr)
            .map_err(|_| Error::Parse(format!("expected a number for {what}, got {t:?}")))
    }

    fn expect(&mut self, keyword: &str) -> Result<()> {
        let t = self.next_tok(keyword)?;
        if t == keyword {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected {keyword:?}, got {t:?}")))
        }
    }

    fn finish(mut self, what: &str) -> Result<()> {
        match self.iter.next() {
            None => Ok(()),
            Some(t) => Err(Error::Parse(format!("trailing data after {what}: {t:?}"))),
        }
    }
}

fn fmt_float<T: Scalar>(x: T) -> String {
    format!("{:e}", x.to_f64_lossy())
}

// ---------------------------------------------------------------------------
// matrices, pencils, polynomial matrices, quadruples

/// Renders one matrix block. The header advertises `real` when every
/// imaginary part is zero, halving the file size for real data.
pub fn format_matrix<T: Scalar>(m: &CMat<T>) -> String {
    let complex = m.iter().any(|z| z.im != T::zero());
    let mut s = format!(
        "{} {} {}\n",
        m.nrows(),
        m.ncols(),
        if complex { "complex" } else { "real" }
    );
    for i in 0..m.nrows() {
        let mut row = String::new();
        for j in 0..m.ncols() {
            if j > 0 {
                row.push(' ');
            }
            let z = m[(i, j)];
            row.push_str(&fmt_float(z.re));
            if complex {
                row.push(' ');
                row.push_str(&fmt_float(z.im));
            }
        }
        s.push_str(&row);
        s.push('\n');
    }
    s
}

fn matrix_from_tokens<T: Scalar>(toks: &mut Tokens) -> Result<CMat<T>> {
    let rows = toks.usize_tok("matrix rows")?;
    let cols = toks.usize_tok("matrix cols")?;
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_ENTRIES => {}
        _ => {
            return Err(Error::Parse(format!(
                "matrix header {rows} x {cols} exceeds the size limit"
            )))
        }
    }
    let kind = toks.next_tok("matrix kind")?;
    let complex = match kind {
        "complex" => true,
        "real" => false,
        other => {
            return Err(Error::Parse(format!(
                "matrix kind must be \"real\" or \"complex\", got {other:?}"
            )))
        }
    };
    let mut m = CMat::<T>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re = toks.float_tok::<T>("matrix entry")?;
            let im = if complex { toks.float_tok::<T>("matrix entry")? } else { T::zero() };
            m[(i, j)] = Complex::new(re, im);
        }
    }
    Ok(m)
}

pub fn parse_matrix<T: Scalar>(text: &str) -> Result<CMat<T>> {
    let mut toks = Tokens::new(text);
    let m = matrix_from_tokens(&mut toks)?;
    toks.finish("matrix")?;
    Ok(m)
}

/// Two matrix blocks, constant part first.
pub fn format_pencil<T: Scalar>(p: &Pencil<T>) -> String {
    format!("{}\n{}", format_matrix(&p.p0), format_matrix(&p.p1))
}

pub fn parse_pencil<T: Scalar>(text: &str) -> Result<Pencil<T>> {
    let mut toks = Tokens::new(text);
    let p0 = matrix_from_tokens(&mut toks)?;
    let p1 = matrix_from_tokens(&mut toks)?;
    toks.finish("pencil")?;
    Pencil::new(p0, p1)
}

/// A `degree d` line, then the coefficient blocks of λ⁰ through λᵈ.
pub fn format_poly<T: Scalar>(p: &PolyMatrix<T>) -> String {
    let mut s = format!("degree {}\n", p.degree());
    for c in p.coeffs() {
        s.push('\n');
        s.push_str(&format_matrix(c));
    }
    s
}

pub fn parse_poly<T: Scalar>(text: &str) -> Result<PolyMatrix<T>> {
    let mut toks = Tokens::new(text);
    let p = poly_from_tokens(&mut toks)?;
    toks.finish("polynomial matrix")?;
    Ok(p)
}

fn poly_from_tokens<T: Scalar>(toks: &mut Tokens) -> Result<PolyMatrix<T>> {
    toks.expect("degree")?;
    let d = toks.usize_tok("polynomial degree")?;
    let coeffs: Vec<CMat<T>> =
        (0..=d).map(|_| matrix_from_tokens(toks)).collect::<Result<_>>()?;
    PolyMatrix::new(coeffs)
}

/// A `QUAD m n l d` line, then A (l x l), B (l x n), C (m x l) and the
/// d+1 coefficients of D (m x n each).
pub fn format_quadruple<T: Scalar>(q: &RationalQuadruple<T>) -> String {
    let mut s = format!(
        "QUAD {} {} {} {}\n",
        q.m(),
        q.n(),
        q.state_dim(),
        q.degree()
    );
    for block in [&q.a, &q.b, &q.c] {
        s.push('\n');
        s.push_str(&format_matrix(block));
    }
    for c in q.d.coeffs() {
        s.push('\n');
        s.push_str(&format_matrix(c));
    }
    s
}

pub fn parse_quadruple<T: Scalar>(text: &str) -> Result<RationalQuadruple<T>> {
    let mut toks = Tokens::new(text);
    toks.expect("QUAD")?;
    let m = toks.usize_tok("output dimension m")?;
    let n = toks.usize_tok("input dimension n")?;
    let l = toks.usize_tok("state dimension l")?;
    let d = toks.usize_tok("polynomial degree d")?;
    let a = matrix_from_tokens(&mut toks)?;
    let b = matrix_from_tokens(&mut toks)?;
    let c = matrix_from_tokens(&mut toks)?;
    let shapes = [(a.shape(), (l, l), "A"), (b.shape(), (l, n), "B"), (c.shape(), (m, l), "C")];
    for (got, want, name) in shapes {
        if got != want {
            return Err(Error::Parse(format!(
                "{name} block is {}x{} but the QUAD header implies {}x{}",
                got.0, got.1, want.0, want.1
            )));
        }
    }
    let mut coeffs = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let dk = matrix_from_tokens::<T>(&mut toks)?;
        if dk.shape() != (m, n) {
            return Err(Error::Parse(format!(
                "D_{k} block is {}x{} but the QUAD header implies {m}x{n}",
                dk.nrows(),
                dk.ncols()
            )));
        }
        coeffs.push(dk);
    }
    toks.finish("quadruple")?;
    RationalQuadruple::new(a, b, c, PolyMatrix::new(coeffs)?)
}

// ---------------------------------------------------------------------------
// scaling factors

/// key=value lines: `d_lambda`, `d_R`, `T` (diagonal, space separated)
/// and `pow2`.
pub fn format_scaling<T: Scalar>(sr: &ScalingResult<T>) -> String {
    let t: Vec<String> = sr.t_diag.iter().map(|&x| fmt_float(x)).collect();
    format!(
        "d_lambda={}\nd_R={}\nT={}\npow2={}\n",
        fmt_float(sr.d_lambda),
        fmt_float(sr.d_r),
        t.join(" "),
        sr.pow2
    )
}

pub fn parse_scaling<T: Scalar>(text: &str) -> Result<ScalingResult<T>> {
    let mut d_lambda = None;
    let mut d_r = None;
    let mut t_diag: Option<Vec<T>> = None;
    let mut pow2 = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("scaling line without '=': {line:?}")))?;
        let parse_t = |v: &str, what: &str| -> Result<T> {
            v.trim()
                .parse::<f64>()
                .map(T::fr)
                .map_err(|_| Error::Parse(format!("bad number for {what}: {v:?}")))
        };
        match key.trim() {
            "d_lambda" if d_lambda.is_none() => d_lambda = Some(parse_t(value, "d_lambda")?),
            "d_R" if d_r.is_none() => d_r = Some(parse_t(value, "d_R")?),
            "T" if t_diag.is_none() => {
                let parsed: Result<Vec<T>> =
                    value.split_whitespace().map(|v| parse_t(v, "T entry")).collect();
                t_diag = Some(parsed?);
            }
            "pow2" if pow2.is_none() => {
                pow2 = Some(match value.trim() {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(Error::Parse(format!("pow2 must be true or false, got {other:?}")))
                    }
                })
            }
            other => return Err(Error::Parse(format!("unexpected or repeated scaling key {other:?}"))),
        }
    }
    let t_diag = t_diag.ok_or_else(|| Error::Parse("scaling is missing the T line".into()))?;
    if t_diag.is_empty() {
        return Err(Error::Parse("scaling T line holds no entries".into()));
    }
    Ok(ScalingResult {
        t_diag,
        d_lambda: d_lambda.ok_or_else(|| Error::Parse("scaling is missing d_lambda".into()))?,
        d_r: d_r.ok_or_else(|| Error::Parse("scaling is missing d_R".into()))?,
        pow2: pow2.ok_or_else(|| Error::Parse("scaling is missing pow2".into()))?,
    })
}

// ---------------------------------------------------------------------------
// eigenvalue and backward-error reports

pub const EIGENVALUE_CSV_HEADER: &str = "re_alpha,im_alpha,re_beta,im_beta,finite";

/// One CSV row per (α, β) pair with the finiteness classification.
pub fn format_eigenvalues_csv<T: Scalar>(ev: &GeneralizedEigenvalues<T>) -> String {
    let mut s = String::from(EIGENVALUE_CSV_HEADER);
    s.push('\n');
    for (i, (alpha, beta)) in ev.pairs.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_float(alpha.re),
            fmt_float(alpha.im),
            fmt_float(beta.re),
            fmt_float(beta.im),
            ev.is_finite(i)
        );
    }
    s
}

/// A parsed eigenvalue CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueRow<T: Scalar> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub finite: bool,
}

impl<T: Scalar> EigenvalueRow<T> {
    /// α/β; meaningful for finite rows only.
    pub fn value(&self) -> Complex<T> {
        self.alpha / self.beta
    }
}

pub fn parse_eigenvalues_csv<T: Scalar>(text: &str) -> Result<Vec<EigenvalueRow<T>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == EIGENVALUE_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "eigenvalue csv must start with {EIGENVALUE_CSV_HEADER:?}, got {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "eigenvalue row needs 5 fields, got {}: {line:?}",
                fields.len()
            )));
        }
        let num = |f: &str| -> Result<T> {
            f.parse::<f64>()
                .map(T::fr)
                .map_err(|_| Error::Parse(format!("bad number in eigenvalue row: {f:?}")))
        };
        let finite = match fields[4] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Parse(format!(
                    "finite flag must be true or false, got {other:?}"
                )))
            }
        };
        rows.push(EigenvalueRow {
            alpha: Complex::new(num(fields[0])?, num(fields[1])?),
            beta: Complex::new(num(fields[2])?, num(fields[3])?),
            finite,
        });
    }
    Ok(rows)
}

pub const BACKWARD_ERROR_CSV_HEADER: &str = "re,im,r_local,g,sigma_min";

/// One CSV row per analyzed eigenvalue, then a comment footer carrying the
/// aggregate estimate and its input-norm-relative form.
pub fn format_backward_error_csv<T: Scalar>(be: &GlobalBackwardError<T>) -> String {
    let mut s = String::from(BACKWARD_ERROR_CSV_HEADER);
    s.push('\n');
    for e in &be.per_eig {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_float(e.lambda_i.re),
            fmt_float(e.lambda_i.im),
            fmt_float(e.r_local),
            fmt_float(e.g_value),
            fmt_float(e.sigma_min)
        );
    }
    let _ = writeln!(s, "# r={} r_relative={}", fmt_float(be.r), fmt_float(be.r_relative));
    s
}

// ---------------------------------------------------------------------------
// restoration reports

/// key=value lines for every growth constant and hypothesis flag.
pub fn format_bound_report<T: Scalar>(b: &crate::restoration::BoundReport<T>) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: T| {
        let _ = writeln!(s, "{k}={}", fmt_float(v));
    };
    kv("alpha", b.alpha);
    kv("beta", b.beta);
    kv("gamma", b.gamma);
    kv("s", b.s);
    kv("f1", b.f1);
    kv("f2", b.f2);
    kv("f3", b.f3);
    kv("sigma_min_t", b.sigma_min_t);
    kv("delta_t_norm", b.delta_t_norm);
    kv("sigma", b.sigma);
    kv("theta", b.theta);
    kv("omega_cap", b.omega_cap);
    kv("k_sr", b.k_sr);
    kv("g_exponent", b.g_exponent);
    kv("g_implied", b.g_implied);
    kv("delta", b.delta);
    let _ = writeln!(s, "t={}", b.t);
    let _ = writeln!(s, "contraction_ok={}", b.contraction_ok);
    let _ = writeln!(s, "smallness_ok={}", b.smallness_ok);
    s
}

pub const RESTORATION_CSV_HEADER: &str =
    "step,xy_norm,step_delta_norm,cumulative_delta_norm";

/// CSV of the per-sweep correction norms, followed by the bound constants
/// as commented key=value lines and any warnings as comments.
pub fn format_restoration_csv<T: Scalar>(r: &crate::restoration::RestorationResult<T>) -> String {
    let mut s = String::from(RESTORATION_CSV_HEADER);
    s.push('\n');
    for (i, step) in r.steps.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            i + 1,
            fmt_float(step.xy_norm),
            fmt_float(step.step_delta_norm),
            fmt_float(step.cumulative_delta_norm)
        );
    }
    if let Some(lhs) = r.backward_error_lhs {
        let _ = writeln!(s, "# backward_error_lhs={}", fmt_float(lhs));
    }
    if let Some(b) = &r.bounds {
        for line in format_bound_report(b).lines() {
            let _ = writeln!(s, "# {line}");
        }
    }
    for w in &r.warnings {
        let _ = writeln!(s, "# warning: {w}");
    }
    s
}

// ---------------------------------------------------------------------------
// file-level conveniences

pub fn save_quadruple<T: Scalar>(path: &Path, q: &RationalQuadruple<T>) -> Result<()> {
    std::fs::write(path, format_quadruple(q))?;
    Ok(())
}

pub fn load_quadruple<T: Scalar>(path: &Path) -> Result<RationalQuadruple<T>> {
    parse_quadruple(&std::fs::read_to_string(path)?)
}

pub fn save_pencil<T: Scalar>(path: &Path, p: &Pencil<T>) -> Result<()> {
    std::fs::write(path, format_pencil(p))?;
    Ok(())
}

pub fn load_pencil<T: Scalar>(path: &Path) -> Result<Pencil<T>> {
    parse_pencil(&std::fs::read_to_string(path)?)
}
