//! Batch experiments measuring how the structured backward error of the
//! linearize-then-QZ pipeline responds to badly scaled inputs.
//!
//! Each experiment draws batches of random quadruples, inflates selected
//! matrices by a batch-indexed power of ten, and runs the pipeline twice per
//! draw: once on the raw quadruple and once after the power-of-two scaling
//! pass. The per-batch averages of the backward-error estimate form one row
//! of the report; emitters serialize the rows as CSV, as log10 columns for
//! plotting, or as a small self-contained SVG chart.
//!
//! Reproducibility is part of the contract: every draw is keyed by the
//! master seed and the (profile, batch, run, attempt) coordinates through
//! the SplitMix64 fork mechanism, so a config reproduces its rows bit for
//! bit on one platform regardless of execution order.

use crate::pencil_core::{PolyMatrix, RationalQuadruple};
use crate::rng::SplitMix64;
use crate::{backward_error, eigensolver, scaling, Error, Result, Scalar};
use num_complex::Complex;
use std::io::Write;
use std::path::{Path, PathBuf};

/// How many fresh draws a single (batch, run) slot may consume before a
/// persistent QZ failure is treated as a hard error.
pub const MAX_RESAMPLES: usize = 5;

/// Which matrices get inflated as the batch index grows.
///
/// Profile 1 inflates the state matrix only, profile 2 the non-state
/// matrices only, profile 3 both at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    StateNorm,
    CoefficientNorms,
    Combined,
}

impl Profile {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Profile::StateNorm),
            2 => Ok(Profile::CoefficientNorms),
            3 => Ok(Profile::Combined),
            other => Err(Error::InvalidArgument(format!(
                "experiment profile must be 1, 2 or 3, got {other}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Profile::StateNorm => 1,
            Profile::CoefficientNorms => 2,
            Profile::Combined => 3,
        }
    }

    fn inflates_state(self) -> bool {
        matches!(self, Profile::StateNorm | Profile::Combined)
    }

    fn inflates_coefficients(self) -> bool {
        matches!(self, Profile::CoefficientNorms | Profile::Combined)
    }
}

/// Full description of one experiment run; every field participates in the
/// deterministic seeding, so two equal configs produce identical reports.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub batches: usize,
    pub runs_per_batch: usize,
    pub m: usize,
    pub n: usize,
    pub state_dim: usize,
    pub degree: usize,
    pub eps: usize,
    pub eta: usize,
    pub seed: u64,
    /// When false the scaled pipeline is skipped and its column reads zero.
    pub scaled: bool,
    /// Directory the emitters write into; `None` leaves output to the caller.
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The dimensions used throughout: 2x2 rational matrices with a state
    /// dimension of 5 and a cubic polynomial part, linearized with one
    /// Kronecker block on each side.
    pub fn new(profile: Profile) -> Self {
        ExperimentConfig {
            profile,
            batches: 7,
            runs_per_batch: 50,
            m: 2,
            n: 2,
            state_dim: 5,
            degree: 3,
            eps: 1,
            eta: 1,
            seed: 0,
            scaled: true,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches == 0 || self.runs_per_batch == 0 {
            return Err(Error::InvalidArgument(
                "batches and runs_per_batch must be at least 1".into(),
            ));
        }
        if self.m == 0 || self.n == 0 || self.state_dim == 0 {
            return Err(Error::InvalidArgument(
                "matrix dimensions must be positive".into(),
            ));
        }
        if self.degree != self.eps + self.eta + 1 {
            return Err(Error::InvalidArgument(format!(
                "degree {} does not split as eps + eta + 1 = {} + {} + 1",
                self.degree, self.eps, self.eta
            )));
        }
        Ok(())
    }
}

/// Per-batch averages over `runs_per_batch` runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub batch_index: usize,
    pub mean_r_unscaled: f64,
    pub mean_r_scaled: f64,
    /// Average of eps_machine times the input norm, the size a fully
    /// structurally backward stable run would report.
    pub mean_eps_norm_r: f64,
}

/// Rows plus the resample log (one line per slot that needed extra draws).
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub resamples: Vec<String>,
}

/// Seed for the (batch, run, attempt) slot of a profile, derived from the
/// master seed by hashing the coordinates into a fork tag. Stateless, so
/// any execution order reproduces the same draws.
fn slot_seed(master: u64, profile: Profile, batch: usize, run: usize, attempt: usize) -> u64 {
    let tag = ((profile.index() as u64) << 56)
        ^ ((batch as u64) << 40)
        ^ ((run as u64) << 16)
        ^ attempt as u64;
    SplitMix64::new(master).fork(tag).next_u64()
}

/// One random quadruple with the profile's inflation applied.
///
/// Base matrices are drawn from the standard normal in the order A, B, C,
/// D_0, ..., D_degree, row-major within each matrix, all from a SplitMix64
/// stream started at `seed`. Entries are real; the downstream machinery is
/// complex but nothing here feeds the imaginary parts. The batch index
/// then inflates, for profile 1, A by 10^i; for profile 2, B by 10^(i/2),
/// C by 10^(i/3) and D_k by 10^(i/k) for k >= 1; profile 3 applies both
/// sets of factors.
pub fn random_quadruple<T: Scalar>(
    seed: u64,
    m: usize,
    n: usize,
    state_dim: usize,
    degree: usize,
    profile: Profile,
    batch: usize,
) -> Result<RationalQuadruple<T>> {
    let mut g = SplitMix64::new(seed);
    let mut a = g.randn::<T>(state_dim, state_dim);
    let mut b = g.randn::<T>(state_dim, n);
    let mut c = g.randn::<T>(m, state_dim);
    let mut coeffs: Vec<_> = (0..=degree).map(|_| g.randn::<T>(m, n)).collect();

    let i = batch as f64;
    let ten = |e: f64| Complex::new(T::fr(10f64.powf(e)), T::zero());
    if profile.inflates_state() {
        a *= ten(i);
    }
    if profile.inflates_coefficients() {
        b *= ten(i / 2.0);
        c *= ten(i / 3.0);
        for (k, dk) in coeffs.iter_mut().enumerate().skip(1) {
            *dk *= ten(i / k as f64);
        }
    }
    RationalQuadruple::new(a, b, c, PolyMatrix::new(coeffs)?)
}

/// Runs the full batch grid. Each (batch, run) slot draws a quadruple,
/// measures the backward-error estimate of the unscaled and the scaled
/// pipeline, and a QZ failure resamples the slot with the attempt counter
/// bumped, up to [`MAX_RESAMPLES`] fresh draws.
pub fn run_experiment<T: Scalar>(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.batches);
    let mut resamples = Vec::new();
    for batch in 1..=cfg.batches {
        let mut sum_u = 0.0f64;
        let mut sum_s = 0.0f64;
        let mut sum_e = 0.0f64;
        for run in 0..cfg.runs_per_batch {
            let (r_u, r_s, eps_n) = run_slot::<T>(cfg, batch, run, &mut resamples)?;
            sum_u += r_u.to_f64_lossy();
            sum_s += r_s.to_f64_lossy();
            sum_e += eps_n.to_f64_lossy();
        }
        let runs = cfg.runs_per_batch as f64;
        rows.push(ExperimentRow {
            batch_index: batch,
            mean_r_unscaled: sum_u / runs,
            mean_r_scaled: sum_s / runs,
            mean_eps_norm_r: sum_e / runs,
        });
    }
    Ok(ExperimentReport { rows, resamples })
}

fn run_slot<T: Scalar>(
    cfg: &ExperimentConfig,
    batch: usize,
    run: usize,
    resamples: &mut Vec<String>,
) -> Result<(T, T, T)> {
    let mut last_err = None;
    for attempt in 0..MAX_RESAMPLES {
        let seed = slot_seed(cfg.seed, cfg.profile, batch, run, attempt);
        match measure::<T>(cfg, seed, batch) {
            Ok(out) => {
                if attempt > 0 {
                    resamples.push(format!(
                        "batch {batch} run {run}: succeeded after {attempt} resample(s)"
                    ));
                }
                return Ok(out);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::Degenerate(format!(
        "batch {batch} run {run}: qz kept failing after {MAX_RESAMPLES} draws \
         (last error: {})",
        last_err.expect("at least one attempt ran")
    )))
}

fn measure<T: Scalar>(cfg: &ExperimentConfig, seed: u64, batch: usize) -> Result<(T, T, T)> {
    let q = random_quadruple::<T>(
        seed,
        cfg.m,
        cfg.n,
        cfg.state_dim,
        cfg.degree,
        cfg.profile,
        batch,
    )?;
    let z = eigensolver::zeros(&q, cfg.eps, cfg.eta)?;
    let r_unscaled = backward_error::global_r(&q, &z.finite()).r;
    let r_scaled = if cfg.scaled {
        let (q_hat, _) = scaling::scale_quadruple(&q, true)?;
        let z_hat = eigensolver::zeros(&q_hat, cfg.eps, cfg.eta)?;
        backward_error::global_r(&q_hat, &z_hat.finite()).r
    } else {
        T::zero()
    };
    Ok((r_unscaled, r_scaled, T::eps() * q.norm_f()))
}

/// Output flavors understood by [`emit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    PlotData,
    Svg,
}

impl EmitFormat {
    pub fn extension(self) -> &'static str {
        match self {
            EmitFormat::Csv => "csv",
            EmitFormat::PlotData => "dat",
            EmitFormat::Svg => "svg",
        }
    }
}

/// Writes `rows` to `path` in the requested format. Empty row lists are
/// rejected so a truncated run cannot silently produce an empty artifact.
pub fn emit(rows: &[ExperimentRow], format: EmitFormat, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "refusing to emit an empty experiment report".into(),
        ));
    }
    let mut file = std::fs::File::create(path)?;
    match format {
        EmitFormat::Csv => write_csv(rows, &mut file)?,
        EmitFormat::PlotData => write_plotdata(rows, &mut file)?,
        EmitFormat::Svg => write_svg(rows, &mut file)?,
    }
    Ok(())
}

/// CSV with one header line; floats are printed in scientific notation with
/// enough digits to round-trip exactly.
pub fn write_csv(rows: &[ExperimentRow], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "i,mean_r_unscaled,mean_r_scaled,mean_epsM_normR")?;
    for row in rows {
        writeln!(
            w,
            "{},{:e},{:e},{:e}",
            row.batch_index, row.mean_r_unscaled, row.mean_r_scaled, row.mean_eps_norm_r
        )?;
    }
    Ok(())
}

/// Whitespace-separated columns holding the batch index and the log10 of
/// each mean, ready for gnuplot's `using 1:2` style selection.
pub fn write_plotdata(rows: &[ExperimentRow], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "# i log10_r_unscaled log10_r_scaled log10_epsM_normR")?;
    for row in rows {
        writeln!(
            w,
            "{} {:e} {:e} {:e}",
            row.batch_index,
            row.mean_r_unscaled.log10(),
            row.mean_r_scaled.log10(),
            row.mean_eps_norm_r.log10()
        )?;
    }
    Ok(())
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 480.0;
const SVG_MARGIN_LEFT: f64 = 70.0;
const SVG_MARGIN_RIGHT: f64 = 20.0;
const SVG_MARGIN_TOP: f64 = 20.0;
const SVG_MARGIN_BOTTOM: f64 = 45.0;

/// A small self-contained line chart: batch index on the x axis, log10 of
/// the three mean columns on the y axis, one polyline per series. Points
/// whose mean is zero or negative have no logarithm and are dropped from
/// their polyline; the polyline element itself stays so the series list is
/// stable.
pub fn write_svg(rows: &[ExperimentRow], w: &mut impl Write) -> std::io::Result<()> {
    let series: [(&str, &str, Vec<(f64, f64)>); 3] = [
        ("unscaled", "#c0392b", log_points(rows, |r| r.mean_r_unscaled)),
        ("scaled", "#2980b9", log_points(rows, |r| r.mean_r_scaled)),
        ("eps * input norm", "#7f8c8d", log_points(rows, |r| r.mean_eps_norm_r)),
    ];

    let xs: Vec<f64> = rows.iter().map(|r| r.batch_index as f64).collect();
    let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1].max(xs[0] + 1.0));
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for (_, _, pts) in &series {
        for &(_, y) in pts {
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if !y_lo.is_finite() || !y_hi.is_finite() {
        (y_lo, y_hi) = (-1.0, 1.0);
    }
    let y_lo = (y_lo - 0.5).floor();
    let y_hi = (y_hi + 0.5).ceil();

    let plot_w = SVG_WIDTH - SVG_MARGIN_LEFT - SVG_MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - SVG_MARGIN_TOP - SVG_MARGIN_BOTTOM;
    let to_x = |x: f64| SVG_MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let to_y = |y: f64| SVG_MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    )?;
    writeln!(w, "<rect width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" fill=\"white\"/>")?;

    // horizontal gridlines at integer decades
    let mut decade = y_lo.ceil() as i64;
    while (decade as f64) <= y_hi {
        let y = to_y(decade as f64);
        writeln!(
            w,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\"/>",
            SVG_MARGIN_LEFT,
            SVG_WIDTH - SVG_MARGIN_RIGHT
        )?;
        writeln!(
            w,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{decade}</text>",
            SVG_MARGIN_LEFT - 6.0,
            y + 4.0
        )?;
        decade += 1;
    }
    // x tick labels at each batch index
    for &x in &xs {
        writeln!(
            w,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            to_x(x),
            SVG_HEIGHT - SVG_MARGIN_BOTTOM + 18.0,
            x as usize
        )?;
    }
    writeln!(
        w,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">batch index</text>",
        SVG_MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 8.0
    )?;

    // axes
    writeln!(
        w,
        "<path d=\"M {l:.1} {t:.1} V {b:.1} H {r:.1}\" fill=\"none\" stroke=\"black\"/>",
        l = SVG_MARGIN_LEFT,
        t = SVG_MARGIN_TOP,
        b = SVG_HEIGHT - SVG_MARGIN_BOTTOM,
        r = SVG_WIDTH - SVG_MARGIN_RIGHT
    )?;

    for (idx, (label, color, pts)) in series.iter().enumerate() {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", to_x(x), to_y(y)))
            .collect();
        writeln!(
            w,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            coords.join(" ")
        )?;
        let ly = SVG_MARGIN_TOP + 16.0 * (idx as f64 + 1.0);
        writeln!(
            w,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"1.5\"/>",
            SVG_MARGIN_LEFT + 34.0,
            lx = SVG_MARGIN_LEFT + 10.0,
        )?;
        writeln!(
            w,
            "<text x=\"{:.1}\" y=\"{:.1}\">{label}</text>",
            SVG_MARGIN_LEFT + 40.0,
            ly + 4.0
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

fn log_points(rows: &[ExperimentRow], pick: impl Fn(&ExperimentRow) -> f64) -> Vec<(f64, f64)> {
    rows.iter()
        .filter_map(|r| {
            let v = pick(r);
            (v > 0.0).then(|| (r.batch_index as f64, v.log10()))
        })
        .collect()
}
