//! End-to-end tests of the `pdn` binary: exit codes, emitted files, the
//! closed-form witness values, and byte determinism of repeated runs.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pdn"))
}

/// Fresh scratch directory under the target tmpdir.
fn scratch(tag: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join(format!("cli_{tag}_{}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn report<'a>(doc: &'a Value, name: &str) -> &'a Value {
    doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == name)
        .unwrap_or_else(|| panic!("no report named {name}"))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("signal exit")
}

#[test]
fn check_symbol_closed_forms() {
    let dir = scratch("symbol");
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 32\nnt = 64\n[run]\nout_dir = \"{0}/out\"\n\
             [family]\nname = \"identity\"\n",
            dir.display()
        ),
    );
    let out = bin().arg("check-symbol").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.join("out/check_symbol.json"));
    let extra = &report(&doc, "symbol_bounds")["extra"];
    assert!((extra["c"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((extra["c_prime"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    // The constant running example: C' = inf Im mu / |xi| = sqrt(1.84).
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 32\nnt = 64\n[run]\nout_dir = \"{0}/out2\"\n\
             [family]\nname = \"constant\"\n",
            dir.display()
        ),
    );
    let out = bin().arg("check-symbol").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 0);
    let doc = json(&dir.join("out2/check_symbol.json"));
    let extra = &report(&doc, "symbol_bounds")["extra"];
    assert!((extra["c_prime"].as_f64().unwrap() - 1.84f64.sqrt()).abs() < 1e-12);
    assert!((extra["c"].as_f64().unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
    let csv = std::fs::read_to_string(dir.join("out2/symbols.csv")).unwrap();
    assert!(csv.starts_with("symbol,x1,x2,xi1,xi2,re,im\n"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn check_symbol_rejects_non_elliptic_with_witness() {
    let dir = scratch("nonelliptic");
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 16\nnt = 32\n[run]\nout_dir = \"{0}/out\"\n\
             [coefficients]\nd = 1\n\
             [coefficients.entries.a11]\nc0 = -1.0\n\
             [coefficients.entries.a22]\nc0 = 1.0\n",
            dir.display()
        ),
    );
    let out = bin().arg("check-symbol").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ellipticity violated"), "stderr: {err}");
    assert!(err.contains("witness"), "stderr: {err}");
}

#[test]
fn solve_identity_mode_preserves_dn_norm() {
    let dir = scratch("solve_id");
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 32\nnt = 512\n[run]\nout_dir = \"{0}/out\"\n\
             [family]\nname = \"identity\"\n",
            dir.display()
        ),
    );
    let out = bin()
        .arg("solve")
        .arg(&cfg)
        .args(["--data", "mode:1"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.join("out/solve.json"));
    assert_eq!(report(&doc, "boundary_trace")["pass"], true);
    assert_eq!(report(&doc, "interior_residual")["pass"], true);
    let extra = &report(&doc, "trace_dn")["extra"];
    let ratio = extra["norm"].as_f64().unwrap() / extra["norm_f"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 1e-2, "|Lambda f| / |f| = {ratio}");
    let csv = std::fs::read_to_string(dir.join("out/solution.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,re_u,im_u\n"));
}

#[test]
fn solve_running_example_reports_modal_p() {
    let dir = scratch("solve_const");
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 32\nnt = 2048\n[run]\nout_dir = \"{0}/out\"\n\
             [family]\nname = \"constant\"\n",
            dir.display()
        ),
    );
    let out = bin()
        .arg("solve")
        .arg(&cfg)
        .args(["--data", "mode:1"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let doc = json(&dir.join("out/solve.json"));
    let extra = &report(&doc, "trace_p")["extra"];
    let re = extra["modal_re"].as_f64().unwrap();
    let im = extra["modal_im"].as_f64().unwrap();
    // P f on the mode e^{ix} multiplies by sqrt(1.84) + 0.4 i.
    assert!((re - 1.84f64.sqrt()).abs() < 5e-3, "re = {re}");
    assert!((im - 0.4).abs() < 5e-3, "im = {im}");
}

#[test]
fn solve_constant_data_annihilates_traces() {
    let dir = scratch("solve_mean");
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 32\nnt = 64\n[run]\nout_dir = \"{0}/out\"\n\
             [family]\nname = \"constant\"\n",
            dir.display()
        ),
    );
    let out = bin()
        .arg("solve")
        .arg(&cfg)
        .args(["--data", "const:2"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let doc = json(&dir.join("out/solve.json"));
    for name in ["trace_p", "trace_dn", "trace_q"] {
        let norm = report(&doc, name)["extra"]["norm"].as_f64().unwrap();
        assert_eq!(norm, 0.0, "{name} norm = {norm}");
    }

    let out = bin()
        .arg("solve")
        .arg(&cfg)
        .args(["--data", "wibble:3"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_selection_runs_and_unknown_suite_is_rejected() {
    let dir = scratch("verify_sel");
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 64\nnt = 128\n[run]\nout_dir = \"{0}/out\"\n\
             suites = [\"phi\", \"symbol\"]\n[verify]\nprofile = \"reduced\"\n",
            dir.display()
        ),
    );
    let out = bin().arg("verify").arg(&cfg).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.join("out/verify_phi+symbol.json"));
    assert_eq!(doc["suite"], "phi+symbol");
    assert_eq!(doc["failed"], 0);
    let names: Vec<&str> = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["02_symbol_correctness", "03_phi_closure"]);
    assert!(dir.join("out/phi+symbol_03_phi_closure.csv").exists());

    let out = bin()
        .arg("verify")
        .arg(&cfg)
        .args(["--suite", "nope"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("valid suites"), "stderr: {err}");
}

#[test]
fn verify_all_is_byte_deterministic() {
    let dir = scratch("verify_det");
    let mut paths = Vec::new();
    for run in 0..2 {
        let cfg = write_config(
            &dir,
            &format!(
                "[grid]\nn = 64\nnt = 128\n[run]\nout_dir = \"{0}/out{run}\"\n\
                 [verify]\nprofile = \"reduced\"\n",
                dir.display()
            ),
        );
        let out = bin()
            .arg("verify")
            .arg(&cfg)
            .args(["--suite", "all"])
            .output()
            .unwrap();
        // Reduced scale trips some tolerance-pinned checks (expected);
        // what matters here is the exit contract and byte equality.
        assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
        paths.push(dir.join(format!("out{run}/verify_all.json")));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "repeated runs must serialize identically");
}

#[test]
fn verify_tolerance_overrides_only_tighten() {
    let dir = scratch("verify_tol");
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 64\nnt = 128\n[run]\nout_dir = \"{0}/out\"\n\
             [verify]\nprofile = \"reduced\"\n\
             [tolerances]\n\"03_phi_closure\" = 1e-30\n",
            dir.display()
        ),
    );
    let out = bin()
        .arg("verify")
        .arg(&cfg)
        .args(["--suite", "phi"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let doc = json(&dir.join("out/verify_phi.json"));
    let rep = report(&doc, "03_phi_closure");
    // Compare relatively: serde_json's default float reader can be one ULP
    // off at extreme exponents even though the emitted text is exact.
    let tol = rep["tol"].as_f64().unwrap();
    assert!((tol / 1e-30 - 1.0).abs() < 1e-12, "tol = {tol:e}");
    assert_eq!(rep["pass"], false);

    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 64\nnt = 128\n[run]\nout_dir = \"{0}/out\"\n\
             [verify]\nprofile = \"reduced\"\n\
             [tolerances]\n\"03_phi_closure\" = 1.0\n",
            dir.display()
        ),
    );
    let out = bin()
        .arg("verify")
        .arg(&cfg)
        .args(["--suite", "phi"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("only tighten"), "stderr: {err}");
}

#[test]
fn kernel_unit_identity_matches_poisson() {
    let dir = scratch("kernel");
    let cfg = write_config(
        &dir,
        &format!(
            "[grid]\nn = 1024\nl = 100.53096491487338\n[run]\nout_dir = \"{0}/out\"\n\
             [family]\nname = \"identity\"\n",
            dir.display()
        ),
    );
    let out = bin()
        .arg("kernel")
        .arg(&cfg)
        .args(["--weight", "unit", "--times", "0.25,0.5"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.join("out/kernel_unit.json"));
    assert_eq!(report(&doc, "poisson_match")["pass"], true);
    let fit = report(&doc, "decay_fit");
    assert!(fit["measured"].as_f64().unwrap() <= -1.5);
    let csv = std::fs::read_to_string(dir.join("out/kernel_unit.csv")).unwrap();
    assert!(csv.starts_with("y,t,abs_g,envelope\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 1024);

    let out = bin()
        .arg("kernel")
        .arg(&cfg)
        .args(["--weight", "wibble", "--times", "0.5"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn out_dir_env_var_is_the_default() {
    let dir = scratch("envvar");
    let cfg = write_config(
        &dir,
        "[grid]\nn = 16\nnt = 32\n[family]\nname = \"identity\"\n",
    );
    let out = bin()
        .arg("check-symbol")
        .arg(&cfg)
        .env("PDN_OUT_DIR", dir.join("envout"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("envout/check_symbol.json").exists());
    // Timestamps live only in the sidecar.
    let meta = std::fs::read_to_string(dir.join("envout/run_meta.json")).unwrap();
    assert!(meta.contains("epoch_seconds"));
    let main = std::fs::read_to_string(dir.join("envout/check_symbol.json")).unwrap();
    assert!(!main.contains("epoch"));
    assert!(!main.contains("elapsed"));
}
