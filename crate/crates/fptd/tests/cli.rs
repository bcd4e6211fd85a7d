//! End-to-end checks of the command-line surface: exit codes, CSV
//! formats, idempotent coefficient caches, and the selftest gate.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fptd"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fptd-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn coeffs_writes_idempotent_golden_rows() {
    let dir = tmp_dir("coeffs");
    let path = dir.join("table.csv");
    let path_s = path.to_str().unwrap();

    let out = run(&["coeffs", "--max-order", "2", "--out", path_s]);
    assert!(out.status.success());
    let first = std::fs::read(&path).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.lines().any(|l| l == "1,2,0,1,2"), "missing golden row");
    assert_eq!(text.lines().count(), 14); // header + unit + 12 entries

    // Re-running produces a byte-identical file.
    let out = run(&["coeffs", "--max-order", "2", "--out", path_s]);
    assert!(out.status.success());
    let second = std::fs::read(&path).unwrap();
    assert_eq!(first, second);

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn coeffs_rejects_order_zero() {
    let out = run(&["coeffs", "--max-order", "0", "--out", "/tmp/never.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn density_two_methods_coincide_and_round_trip() {
    let dir = tmp_dir("density");
    let path = dir.join("curves.csv");
    let out = run(&[
        "density",
        "--process", "ou",
        "--eps", "0.1",
        "--theta", "0.3",
        "--sigma", "0.3",
        "--x0", "0.5",
        "--level", "0.3",
        "--t-start", "0.1",
        "--t-stop", "2.0",
        "--points", "12",
        "--method", "perturbed,talbot-exact",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,p,method,flags\n"));
    let gap_line = text
        .lines()
        .find(|l| l.starts_with("# max_rel_gap perturbed vs talbot-exact:"))
        .expect("footer reports the gap");
    let gap: f64 = gap_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(gap < 0.025, "methods diverge: {gap}");

    // The emitted file parses back into the in-memory curves exactly.
    let curves = fptd::curve::DensityCurve::read_csv(text.as_bytes()).unwrap();
    assert_eq!(curves.len(), 2);
    assert_eq!(curves[0].method, "perturbed");
    assert_eq!(curves[1].method, "talbot-exact");
    assert_eq!(curves[0].len(), 12);
    let gap_direct = fptd::curve::max_rel_gap(&curves[0], &curves[1]).unwrap();
    assert!((gap_direct - gap).abs() <= 1e-6 * gap.max(1e-12));

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn density_closed_form_requires_equilibrium_barrier() {
    let out = run(&[
        "density",
        "--process", "ou",
        "--eps", "0.1",
        "--theta", "0.3",
        "--sigma", "0.3",
        "--x0", "0.5",
        "--level", "0.2",
        "--points", "5",
        "--t-start", "0.5",
        "--t-stop", "1.5",
        "--method", "closed-form",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("equilibrium"), "stderr: {err}");
}

#[test]
fn density_rejects_bessel_barrier_above_start() {
    let out = run(&[
        "density",
        "--process", "bessel",
        "--eps", "0.1",
        "--x0", "0.1",
        "--level", "0.7",
        "--points", "5",
        "--method", "perturbed",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("strictly above"), "stderr: {err}");
}

#[test]
fn error_command_zero_eps_reports_zero_estimates() {
    let out = run(&[
        "error",
        "--process", "ou",
        "--eps", "0",
        "--theta", "0.3",
        "--sigma", "0.3",
        "--x0", "0.5",
        "--level", "0.3",
        "--t-start", "0.5",
        "--t-stop", "1.5",
        "--points", "3",
        "--n-paths", "50",
        "--steps", "50",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    assert_eq!(
        rows.next().unwrap(),
        "t,q_hat,std_err,rel_err,realized_rel_err,oracle"
    );
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.0, "row {row}");
        // A barrier-at-equilibrium run carries both the estimated and the
        // realized-error columns.
        assert!(!fields[4].is_empty(), "realized column empty: {row}");
        assert_eq!(fields[5], "closed-form");
    }
}

#[test]
fn error_command_general_barrier_uses_exact_transform_oracle() {
    let out = run(&[
        "error",
        "--process", "ou",
        "--eps", "0.1",
        "--theta", "0.3",
        "--sigma", "0.3",
        "--x0", "0.5",
        "--level", "0.2",
        "--t-start", "0.5",
        "--t-stop", "1.0",
        "--points", "2",
        "--n-paths", "60",
        "--steps", "60",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for row in text.lines().skip(1) {
        assert!(row.ends_with(",talbot-exact"), "row {row}");
    }
}

#[test]
fn bench_reports_ratio_and_gap() {
    let out = run(&[
        "bench",
        "--process", "ou",
        "--eps", "0.1",
        "--theta", "0.3",
        "--sigma", "0.3",
        "--x0", "0.5",
        "--level", "0.3",
        "--t-start", "0.2",
        "--t-stop", "1.0",
        "--points", "4",
        "--preload",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("method,points,seconds,ratio_vs_perturbed\n"));
    assert!(text.contains("\nperturbed,4,"));
    assert!(text.contains("\ntalbot-exact,4,"));
    assert!(text.contains("# preload: true"));
}

#[test]
fn selftest_quick_passes_on_fresh_checkout() {
    let out = run(&["selftest", "--quick"]);
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("[PASS]")).count(), 10);
}

#[test]
fn selftest_names_first_corrupted_golden_row() {
    let dir = tmp_dir("corrupt");
    let path = dir.join("table.csv");
    let out = run(&["coeffs", "--max-order", "2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());

    // Perturb one golden rational: c at (2,2,2) becomes 1/3.
    let doctored = std::fs::read_to_string(&path)
        .unwrap()
        .replace("2,2,2,1,2", "2,2,2,1,3");
    std::fs::write(&path, doctored).unwrap();

    let out = run(&["selftest", "--quick", "--coeffs", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("row (2,2,2)") && text.contains("expected 1/2") && text.contains("found 1/3"),
        "verdict lines:\n{text}"
    );

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn coeff_cache_env_var_is_honored() {
    let dir = tmp_dir("env");
    let path = dir.join("order1.csv");
    let out = run(&["coeffs", "--max-order", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());

    // The cached table only holds order 1; asking for order 2 through the
    // environment default must fail loudly, proving the cache was used.
    let out = bin()
        .env("FPTD_COEFF_CACHE", path.to_str().unwrap())
        .args([
            "density",
            "--process", "ou",
            "--eps", "0.1",
            "--theta", "0.3",
            "--sigma", "0.3",
            "--x0", "0.5",
            "--level", "0.3",
            "--points", "4",
            "--t-start", "0.5",
            "--t-stop", "1.0",
            "--order", "2",
            "--method", "perturbed",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("holds order 1"), "stderr: {err}");

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn thread_pool_size_does_not_change_values() {
    let args = [
        "density",
        "--process", "bessel",
        "--eps", "0.1",
        "--x0", "0.7",
        "--level", "0.1",
        "--t-start", "0.1",
        "--t-stop", "2.0",
        "--points", "9",
        "--method", "perturbed",
    ];
    let one = bin().args(args).args(["--threads", "1"]).output().unwrap();
    let many = bin().args(args).args(["--threads", "8"]).output().unwrap();
    assert!(one.status.success() && many.status.success());
    // Per-point timings live in the footer only; data rows must be
    // byte-identical.
    let strip = |raw: &[u8]| {
        String::from_utf8(raw.to_vec())
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&one.stdout), strip(&many.stdout));
}

#[test]
fn config_file_defaults_are_overridden_by_flags() {
    let dir = tmp_dir("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "points=3\nt-start=0.5\nt-stop=1.5\n").unwrap();
    let out = run(&[
        "density",
        "--config", cfg.to_str().unwrap(),
        "--process", "ou",
        "--eps", "0.1",
        "--theta", "0.3",
        "--sigma", "0.3",
        "--x0", "0.5",
        "--level", "0.3",
        "--points", "5",
        "--method", "perturbed",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = text.lines().filter(|l| l.contains(",perturbed,")).count();
    assert_eq!(rows, 5, "flag should beat the config file:\n{text}");

    std::fs::remove_dir_all(&dir).unwrap();
}
