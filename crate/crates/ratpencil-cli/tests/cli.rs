//! End-to-end runs of the installed binary over small input files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const QUAD: &str = "\
QUAD 1 1 2 3

2 2 real
0.5 0
0 -0.25

2 1 real
1
0.5

1 2 real
0.25 1

1 1 real
0.75

1 1 real
0.3

1 1 real
-0.2

1 1 real
0.4
";

const QUAD_LINEAR: &str = "\
QUAD 1 1 2 1

2 2 real
0.5 0
0 -0.25

2 1 real
1
0.5

1 2 real
0.25 1

1 1 real
0.75

1 1 real
0.3
";

struct Workdir(PathBuf);

impl Workdir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir()
            .join(format!("ratpencil-cli-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("q.quad"), QUAD).unwrap();
        Workdir(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratpencil"))
        .args(args)
        .current_dir(dir)
        .env_remove("RATPENCIL_SEED")
        .output()
        .expect("binary should launch")
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn linearize_then_eig_matches_eig_on_the_quadruple() {
    let w = Workdir::new("eig");
    run_ok(&["linearize", "q.quad", "-o", "s.pencil"], &w.0);
    let from_pencil = run_ok(&["eig", "s.pencil"], &w.0);
    let from_quad = run_ok(&["eig", "q.quad"], &w.0);
    assert_eq!(from_pencil, from_quad);
    let lines: Vec<&str> = from_quad.lines().collect();
    assert_eq!(lines[0], "re_alpha,im_alpha,re_beta,im_beta,finite");
    // one row per eigenvalue of the 5x5 pencil; det of the system matrix
    // has degree l + d = 5 here, so every eigenvalue is a finite zero
    assert_eq!(lines.len(), 6);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",true")).count(), 5);
}

#[test]
fn eig_takes_the_linear_path_for_degree_one() {
    let w = Workdir::new("eig-linear");
    fs::write(w.path("lin.quad"), QUAD_LINEAR).unwrap();
    let csv = run_ok(&["eig", "lin.quad"], &w.0);
    assert!(csv.lines().count() >= 2);
}

#[test]
fn explicit_index_split_is_validated() {
    let w = Workdir::new("split");
    let out = run(
        &["linearize", "q.quad", "--eps", "2", "--eta", "2", "-o", "s.pencil"],
        &w.0,
    );
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("degree - 1"), "unexpected message: {msg}");
    // fixing one side infers the other
    run_ok(&["linearize", "q.quad", "--eps", "2", "-o", "s.pencil"], &w.0);
}

#[test]
fn scale_reports_factors_and_written_file_loads_back() {
    let w = Workdir::new("scale");
    let report = run_ok(&["scale", "q.quad", "-o", "scaled.quad"], &w.0);
    for key in ["d_lambda=", "d_R=", "T=", "pow2=true"] {
        assert!(report.contains(key), "missing {key} in:\n{report}");
    }
    let exact = run_ok(&["scale", "q.quad", "--no-pow2"], &w.0);
    assert!(exact.contains("pow2=false"));
    // the scaled file is itself a valid input
    let rescaled = run_ok(&["scale", "scaled.quad"], &w.0);
    assert!(rescaled.contains("d_lambda="));
}

#[test]
fn restore_demo_prints_sweeps_and_bound_constants() {
    let w = Workdir::new("restore");
    let report = run_ok(
        &["restore-demo", "q.quad", "--delta", "1e-8", "--seed", "5", "-o", "restored.quad"],
        &w.0,
    );
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "step,xy_norm,step_delta_norm,cumulative_delta_norm");
    assert!(lines[1].starts_with("1,"));
    assert!(report.contains("# backward_error_lhs="));
    assert!(report.contains("# k_sr="));
    // the restored quadruple file loads back through another subcommand
    let csv = run_ok(&["eig", "restored.quad"], &w.0);
    assert_eq!(csv.lines().filter(|l| l.ends_with(",true")).count(), 5);
}

#[test]
fn bounds_prints_the_constant_table() {
    let w = Workdir::new("bounds");
    let report = run_ok(&["bounds", "q.quad", "--delta", "1e-8"], &w.0);
    for key in ["alpha=", "gamma=", "k_sr=", "g_implied=", "contraction_ok=", "smallness_ok="] {
        assert!(report.contains(key), "missing {key} in:\n{report}");
    }
}

#[test]
fn backward_error_reads_its_own_eig_output() {
    let w = Workdir::new("bwerr");
    let direct = run_ok(&["backward-error", "q.quad"], &w.0);
    assert!(direct.starts_with("re,im,r_local,g,sigma_min"));
    let footer = direct.lines().last().unwrap();
    assert!(footer.starts_with("# r="));
    let r: f64 = footer
        .split("r=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    // a well conditioned example evaluated at its own zeros sits near
    // machine precision
    assert!(r > 0.0 && r < 1e-12, "r={r:e}");

    let csv = run_ok(&["eig", "q.quad"], &w.0);
    fs::write(w.path("eigs.csv"), csv).unwrap();
    let via_file = run_ok(&["backward-error", "q.quad", "--eigenvalues", "eigs.csv"], &w.0);
    assert_eq!(via_file, direct);
}

#[test]
fn verify_lemmas_reports_every_bound_as_satisfied() {
    let w = Workdir::new("lemmas");
    let table = run_ok(&["verify-lemmas", "--max-k", "3", "--seed", "1"], &w.0);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "which,eps,eta,k,ell,a_norm,omega,lower_bound,ok");
    assert!(lines.len() > 10);
    for line in &lines[1..] {
        assert!(line.ends_with(",true"), "bound violated: {line}");
    }
}

#[test]
fn experiment_writes_all_three_report_formats() {
    let w = Workdir::new("exp");
    run_ok(
        &["experiment", "--profile", "1", "--batches", "2", "--runs", "2", "--seed", "3", "-o", "out"],
        &w.0,
    );
    let csv = fs::read_to_string(w.path("out/experiment1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("i,mean_r_unscaled,mean_r_scaled,mean_epsM_normR"));
    let dat = fs::read_to_string(w.path("out/experiment1.dat")).unwrap();
    assert_eq!(dat.lines().count(), 3);
    let svg = fs::read_to_string(w.path("out/experiment1.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let w = Workdir::new("config");
    fs::write(
        w.path("exp.cfg"),
        "profile=1\nbatches=2\nruns=2\nseed=3\n# comment line\n\n",
    )
    .unwrap();
    run_ok(&["experiment", "--config", "exp.cfg", "-o", "a"], &w.0);
    run_ok(
        &["experiment", "--profile", "1", "--batches", "2", "--runs", "2", "--seed", "3", "-o", "b"],
        &w.0,
    );
    // same parameters, byte-identical report
    assert_eq!(
        fs::read_to_string(w.path("a/experiment1.csv")).unwrap(),
        fs::read_to_string(w.path("b/experiment1.csv")).unwrap()
    );
    // a flag overrides the file: one batch instead of two
    run_ok(&["experiment", "--config", "exp.cfg", "--batches", "1", "-o", "c"], &w.0);
    assert_eq!(
        fs::read_to_string(w.path("c/experiment1.csv")).unwrap().lines().count(),
        2
    );
}

#[test]
fn seed_env_variable_backs_the_flag() {
    let w = Workdir::new("seedenv");
    let args = ["experiment", "--profile", "1", "--batches", "1", "--runs", "2", "-o", "env"];
    let out = Command::new(env!("CARGO_BIN_EXE_ratpencil"))
        .args(args)
        .current_dir(&w.0)
        .env("RATPENCIL_SEED", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    run_ok(
        &["experiment", "--profile", "1", "--batches", "1", "--runs", "2", "--seed", "3", "-o", "flag"],
        &w.0,
    );
    assert_eq!(
        fs::read_to_string(w.path("env/experiment1.csv")).unwrap(),
        fs::read_to_string(w.path("flag/experiment1.csv")).unwrap()
    );
}

#[test]
fn missing_and_malformed_inputs_fail_cleanly() {
    let w = Workdir::new("errors");
    let out = run(&["eig", "nonexistent.quad"], &w.0);
    assert!(!out.status.success());
    fs::write(w.path("broken.quad"), "QUAD 1 1 2 3\n1 1 real\n").unwrap();
    let out = run(&["eig", "broken.quad"], &w.0);
    assert!(!out.status.success());
    let out = run(&["experiment", "--profile", "7"], &w.0);
    assert!(!out.status.success());
}
