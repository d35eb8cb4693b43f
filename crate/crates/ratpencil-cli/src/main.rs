//! Command line front end for the ratpencil library.
//!
//! Quadruples, pencils and polynomial coefficients travel in the plain-text
//! formats of `ratpencil::io`; eigenvalues and backward-error reports come
//! out as CSV on stdout. A key=value config file supplies defaults for any
//! flag, flags win over the file, and the RATPENCIL_SEED environment
//! variable backs the seed when neither is given.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use num_complex::Complex;
use ratpencil::experiment::{self, EmitFormat, ExperimentConfig, Profile};
use ratpencil::pencil_core::{Pencil, RationalQuadruple};
use ratpencil::rng::SplitMix64;
use ratpencil::{backward_error, eigensolver, io, linearization, restoration, scaling, sylvester};
use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

const SEED_ENV: &str = "RATPENCIL_SEED";

#[derive(Parser)]
#[command(name = "ratpencil", version, about = "rational matrices via block Kronecker pencils")]
struct Cli {
    /// key=value file with defaults for the flags of any subcommand
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the structured pencil of a quadruple and write it out
    Linearize {
        quad: PathBuf,
        /// left minimal index count; defaults to floor((d-1)/2)
        #[arg(long)]
        eps: Option<usize>,
        /// right minimal index count; defaults to d-1-eps
        #[arg(long)]
        eta: Option<usize>,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Print the generalized eigenvalues of a pencil or quadruple file
    Eig {
        /// pencil file, or a quadruple file (detected by its QUAD header)
        input: PathBuf,
        #[arg(long)]
        eps: Option<usize>,
        #[arg(long)]
        eta: Option<usize>,
    },
    /// Print the scaling factors of a quadruple, optionally saving the result
    Scale {
        quad: PathBuf,
        /// use the exact factors instead of rounding them to powers of two
        #[arg(long)]
        no_pow2: bool,
        /// write the scaled quadruple here
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Perturb the structured pencil at random and restore its structure
    RestoreDemo {
        quad: PathBuf,
        /// perturbation size relative to the pencil norm
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        eps: Option<usize>,
        #[arg(long)]
        eta: Option<usize>,
        /// write the restored quadruple here
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Print the restoration growth constants for a perturbation size
    Bounds {
        quad: PathBuf,
        #[arg(long)]
        eps: Option<usize>,
        #[arg(long)]
        eta: Option<usize>,
        /// perturbation size relative to the pencil norm
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Estimate the structured backward error at computed eigenvalues
    BackwardError {
        quad: PathBuf,
        /// CSV of eigenvalues to evaluate at; computed from the quadruple
        /// when absent
        #[arg(long, value_name = "FILE")]
        eigenvalues: Option<PathBuf>,
        #[arg(long)]
        eps: Option<usize>,
        #[arg(long)]
        eta: Option<usize>,
    },
    /// Check the singular value lower bounds over a parameter grid
    VerifyLemmas {
        #[arg(long)]
        max_k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the scaling experiments and write CSV, plot data and SVG reports
    Experiment {
        /// 1 inflates the state matrix, 2 the coefficients, 3 both; all
        /// three run when the flag is absent
        #[arg(long)]
        profile: Option<u8>,
        #[arg(long)]
        batches: Option<usize>,
        /// draws per batch
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long, value_name = "DIR")]
        output: Option<PathBuf>,
    },
}

/// Defaults loaded from the config file. Lines look like `runs=50`; blank
/// lines and `#` comments are skipped.
struct Defaults(HashMap<String, String>);

impl Defaults {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    anyhow!("config {}:{}: expected key=value", path.display(), lineno + 1)
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Defaults(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key {key}={raw}: {e}")),
        }
    }
}

/// Flag wins, then the config file, then the fallback.
fn resolve<T: FromStr>(flag: Option<T>, cfg: &Defaults, key: &str, fallback: T) -> Result<T>
where
    T::Err: Display,
{
    Ok(flag.or(cfg.get(key)?).unwrap_or(fallback))
}

/// Seed resolution adds the environment variable between the config file
/// and the fixed default of zero.
fn resolve_seed(flag: Option<u64>, cfg: &Defaults) -> Result<u64> {
    if let Some(seed) = flag.or(cfg.get("seed")?) {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .parse()
            .map_err(|e| anyhow!("{SEED_ENV}={raw}: {e}")),
        Err(_) => Ok(0),
    }
}

/// Split the degree across the two index counts. Any combination summing
/// to d-1 is accepted; one given value fixes the other, none picks the
/// balanced split.
fn split_indices(
    degree: usize,
    eps: Option<usize>,
    eta: Option<usize>,
) -> Result<(usize, usize)> {
    if degree <= 1 {
        // the linear pencil has no index blocks to size
        return Ok((0, 0));
    }
    let want = degree - 1;
    match (eps, eta) {
        (Some(e), Some(h)) if e + h == want => Ok((e, h)),
        (Some(e), None) if e <= want => Ok((e, want - e)),
        (None, Some(h)) if h <= want => Ok((want - h, h)),
        (None, None) => Ok((want / 2, want - want / 2)),
        _ => bail!("eps + eta must equal degree - 1 = {want}"),
    }
}

fn load_quad(path: &Path) -> Result<RationalQuadruple<f64>> {
    io::load_quadruple(path).with_context(|| format!("loading quadruple {}", path.display()))
}

fn build_pencil(
    q: &RationalQuadruple<f64>,
    eps: usize,
    eta: usize,
) -> Result<Pencil<f64>> {
    if q.degree() <= 1 {
        Ok(linearization::build_linear_s(q)?)
    } else {
        Ok(linearization::build_s(q, eps, eta)?.s)
    }
}

fn cmd_linearize(
    cfg: &Defaults,
    quad: &Path,
    eps: Option<usize>,
    eta: Option<usize>,
    output: &Path,
) -> Result<()> {
    let q = load_quad(quad)?;
    let eps = eps.or(cfg.get("eps")?);
    let eta = eta.or(cfg.get("eta")?);
    let (e, h) = split_indices(q.degree(), eps, eta)?;
    let p = build_pencil(&q, e, h)?;
    io::save_pencil(output, &p)?;
    let (rows, cols) = p.shape();
    println!(
        "wrote {rows}x{cols} pencil (eps={e}, eta={h}) to {}",
        output.display()
    );
    Ok(())
}

fn cmd_eig(cfg: &Defaults, input: &Path, eps: Option<usize>, eta: Option<usize>) -> Result<()> {
    let text = fs::read_to_string(input)
        .with_context(|| format!("reading {}", input.display()))?;
    let ev = if text.split_whitespace().next() == Some("QUAD") {
        let q = io::parse_quadruple::<f64>(&text)?;
        let eps = eps.or(cfg.get("eps")?);
        let eta = eta.or(cfg.get("eta")?);
        let (e, h) = split_indices(q.degree(), eps, eta)?;
        eigensolver::zeros(&q, e, h)?
    } else {
        let p = io::parse_pencil::<f64>(&text)?;
        eigensolver::qz(&p)?
    };
    if ev.regularity_warning {
        eprintln!("warning: pencil is close to singular, eigenvalues may be unreliable");
    }
    print!("{}", io::format_eigenvalues_csv(&ev));
    Ok(())
}

fn cmd_scale(cfg: &Defaults, quad: &Path, no_pow2: bool, output: Option<&Path>) -> Result<()> {
    let q = load_quad(quad)?;
    let pow2 = !(no_pow2 || cfg.get("no_pow2")?.unwrap_or(false));
    let (scaled, factors) = scaling::scale_quadruple(&q, pow2)?;
    print!("{}", io::format_scaling(&factors));
    if let Some(path) = output {
        io::save_quadruple(path, &scaled)?;
        eprintln!("wrote scaled quadruple to {}", path.display());
    }
    Ok(())
}

/// Add a random perturbation of relative Frobenius size `delta` to both
/// pencil coefficients, drawn from a seeded normal stream.
fn perturb(p: &Pencil<f64>, delta: f64, seed: u64) -> Result<Pencil<f64>> {
    let (rows, cols) = p.shape();
    let mut rng = SplitMix64::new(seed);
    let e0 = rng.randn_complex::<f64>(rows, cols);
    let e1 = rng.randn_complex::<f64>(rows, cols);
    let size = (e0.norm_squared() + e1.norm_squared()).sqrt();
    let scale = Complex::new(delta * p.fro_norm() / size, 0.0);
    Ok(Pencil::new(&p.p0 + e0 * scale, &p.p1 + e1 * scale)?)
}

fn cmd_restore_demo(
    cfg: &Defaults,
    quad: &Path,
    delta: Option<f64>,
    seed: Option<u64>,
    eps: Option<usize>,
    eta: Option<usize>,
    output: Option<&Path>,
) -> Result<()> {
    let q = load_quad(quad)?;
    let delta = resolve(delta, cfg, "delta", 1e-8)?;
    let seed = resolve_seed(seed, cfg)?;
    let eps = eps.or(cfg.get("eps")?);
    let eta = eta.or(cfg.get("eta")?);
    let (e, h) = split_indices(q.degree(), eps, eta)?;
    let result = if q.degree() <= 1 {
        let p = linearization::build_linear_s(&q)?;
        let perturbed = perturb(&p, delta, seed)?;
        restoration::restore_linear(&perturbed, q.m(), q.n(), q.state_dim())?
    } else {
        let s = linearization::build_s(&q, e, h)?;
        let perturbed = perturb(&s.s, delta, seed)?;
        let dims = restoration::GridDims::of(&s);
        restoration::restore(&perturbed, &dims, Some(&q))?
    };
    print!("{}", io::format_restoration_csv(&result));
    if let Some(path) = output {
        io::save_quadruple(path, &result.quadruple)?;
        eprintln!("wrote restored quadruple to {}", path.display());
    }
    Ok(())
}

fn cmd_bounds(
    cfg: &Defaults,
    quad: &Path,
    eps: Option<usize>,
    eta: Option<usize>,
    delta: Option<f64>,
) -> Result<()> {
    let q = load_quad(quad)?;
    let delta = resolve(delta, cfg, "delta", 1e-8)?;
    let eps = eps.or(cfg.get("eps")?);
    let eta = eta.or(cfg.get("eta")?);
    let (e, h) = split_indices(q.degree(), eps, eta)?;
    if q.degree() <= 1 {
        bail!("bounds need the full block structure; the quadruple has degree <= 1");
    }
    let s = linearization::build_s(&q, e, h)?;
    let report = restoration::bound_constants(&q, &s, delta * s.s.fro_norm())?;
    print!("{}", io::format_bound_report(&report));
    Ok(())
}

fn cmd_backward_error(
    cfg: &Defaults,
    quad: &Path,
    eigenvalues: Option<&Path>,
    eps: Option<usize>,
    eta: Option<usize>,
) -> Result<()> {
    let q = load_quad(quad)?;
    let lambdas: Vec<Complex<f64>> = match eigenvalues {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            io::parse_eigenvalues_csv::<f64>(&text)?
                .iter()
                .filter(|row| row.finite)
                .map(|row| row.value())
                .collect()
        }
        None => {
            let eps = eps.or(cfg.get("eps")?);
            let eta = eta.or(cfg.get("eta")?);
            let (e, h) = split_indices(q.degree(), eps, eta)?;
            eigensolver::zeros(&q, e, h)?.finite()
        }
    };
    if lambdas.is_empty() {
        bail!("no finite eigenvalues to evaluate at");
    }
    let report = backward_error::global_r(&q, &lambdas);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", io::format_backward_error_csv(&report));
    Ok(())
}

fn cmd_verify_lemmas(cfg: &Defaults, max_k: Option<usize>, seed: Option<u64>) -> Result<()> {
    let max_k = resolve(max_k, cfg, "max_k", 4)?;
    if max_k == 0 {
        bail!("max_k must be at least 1");
    }
    let seed = resolve_seed(seed, cfg)?;
    // one random state matrix serves the bounds that depend on A; its norm
    // shows up in the report rows
    let ell = 4;
    let a = SplitMix64::new(seed).fork(0x6c65_6d6d).randn_complex::<f64>(ell, ell);
    println!("which,eps,eta,k,ell,a_norm,omega,lower_bound,ok");
    let mut all_ok = true;
    for k in 1..=max_k {
        let mut cases = vec![
            sylvester::OmegaParams::One { a: &a, eps: k },
            sylvester::OmegaParams::Two { a: &a, eta: k },
            sylvester::OmegaParams::Three { eps: k, eta: k },
        ];
        if k + 1 <= max_k {
            // the two-sided bound has a separate branch when the counts differ
            cases.push(sylvester::OmegaParams::Three { eps: k, eta: k + 1 });
        }
        cases.push(sylvester::OmegaParams::Four { k });
        for params in cases {
            let r = sylvester::omega(params)?;
            // the bound is exact arithmetic; leave two digits of slack for
            // the singular value computation itself
            let ok = r.omega >= r.lower_bound * (1.0 - 1e-13);
            all_ok &= ok;
            println!(
                "{},{},{},{},{},{:e},{:e},{:e},{}",
                r.which, r.eps, r.eta, r.k, r.ell, r.a_norm, r.omega, r.lower_bound, ok
            );
        }
    }
    if !all_ok {
        bail!("a computed value fell below its lower bound");
    }
    Ok(())
}

fn cmd_experiment(
    cfg: &Defaults,
    profile: Option<u8>,
    batches: Option<usize>,
    runs: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
) -> Result<()> {
    let profile = profile.or(cfg.get("profile")?);
    let profiles = match profile {
        Some(i) => vec![Profile::from_index(i)?],
        None => vec![Profile::StateNorm, Profile::CoefficientNorms, Profile::Combined],
    };
    let batches = resolve(batches, cfg, "batches", 7)?;
    let runs = resolve(runs, cfg, "runs", 50)?;
    let seed = resolve_seed(seed, cfg)?;
    let out_dir = match output.or(cfg.get("output")?) {
        Some(dir) => dir,
        None => PathBuf::from("out"),
    };
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    for profile in profiles {
        let mut config = ExperimentConfig::new(profile);
        config.batches = batches;
        config.runs_per_batch = runs;
        config.seed = seed;
        config.out_dir = Some(out_dir.clone());
        let report = experiment::run_experiment::<f64>(&config)?;
        for format in [EmitFormat::Csv, EmitFormat::PlotData, EmitFormat::Svg] {
            let name = format!("experiment{}.{}", profile.index(), format.extension());
            let path = out_dir.join(name);
            experiment::emit(&report.rows, format, &path)?;
            println!("wrote {}", path.display());
        }
        for row in &report.rows {
            println!(
                "profile {} batch {}: r={:e} scaled={:e} epsM_normR={:e}",
                profile.index(),
                row.batch_index,
                row.mean_r_unscaled,
                row.mean_r_scaled,
                row.mean_eps_norm_r
            );
        }
        for note in &report.resamples {
            eprintln!("resampled: {note}");
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = Defaults::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Linearize { quad, eps, eta, output } => {
            cmd_linearize(&cfg, &quad, eps, eta, &output)
        }
        Cmd::Eig { input, eps, eta } => cmd_eig(&cfg, &input, eps, eta),
        Cmd::Scale { quad, no_pow2, output } => {
            cmd_scale(&cfg, &quad, no_pow2, output.as_deref())
        }
        Cmd::RestoreDemo { quad, delta, seed, eps, eta, output } => {
            cmd_restore_demo(&cfg, &quad, delta, seed, eps, eta, output.as_deref())
        }
        Cmd::Bounds { quad, eps, eta, delta } => cmd_bounds(&cfg, &quad, eps, eta, delta),
        Cmd::BackwardError { quad, eigenvalues, eps, eta } => {
            cmd_backward_error(&cfg, &quad, eigenvalues.as_deref(), eps, eta)
        }
        Cmd::VerifyLemmas { max_k, seed } => cmd_verify_lemmas(&cfg, max_k, seed),
        Cmd::Experiment { profile, batches, runs, seed, output } => {
            cmd_experiment(&cfg, profile, batches, runs, seed, output)
        }
    }
}
