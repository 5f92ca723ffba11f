use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn affine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affine"))
        .current_dir(data())
        .args(args)
        .output()
        .expect("failed to spawn affine")
}

/// Runs `args` in the data directory and compares stdout with `expected/<name>.txt`.
/// Set `UPDATE_GOLDEN=1` to rewrite the expected files.
fn golden(name: &str, args: &[&str], code: i32) {
    let out = affine(args);
    let path = data().join("expected").join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &out.stdout).unwrap();
    }
    assert_eq!(
        out.status.code(),
        Some(code),
        "`affine {}` exit status\nstderr:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    let expected = fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&expected),
        "stdout of `affine {}` differs from {name}.txt",
        args.join(" ")
    );
}

fn stderr_error(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"));
    v["error"].clone()
}

#[test]
fn eval_two_point_rendezvous_sentence() {
    golden("eval_two_point", &["eval", "two_point.json", "sup x1. sup x2. inf y. 1/2*d(x1,y)+1/2*d(x2,y)"], 0);
}

#[test]
fn eval_with_assignment_and_decimal() {
    golden("eval_assign", &["eval", "M2.json", "R(x) + d(x,c)", "--assign", "x=q", "--decimal", "4"], 0);
}

#[test]
fn validate_reports() {
    golden("validate_ok", &["validate", "M1.json"], 0);
    golden("validate_triangle", &["validate", "bad_triangle.json"], 1);
}

#[test]
fn mean_half_half_identity() {
    golden(
        "mean_half_half",
        &["mean", "half_half.json", "M1.json", "M2.json", "--check-ultramean", "sup x. R(x) + -1/2*d(x,c)"],
        0,
    );
    golden("mean_open_formula", &["mean", "half_half.json", "M1.json", "M2.json", "--check-ultramean", "R(x) + d(x,y)"], 0);
}

#[test]
fn mean_structure_output() {
    golden("mean_structure", &["mean", "half_half.json", "M1.json", "M2.json"], 0);
}

#[test]
fn sat_verdicts() {
    golden("sat", &["sat", "theory_sat.json", "M1.json", "M2.json"], 0);
    golden("unsat", &["sat", "theory_unsat.json", "M1.json", "M2.json"], 1);
    golden("sat_target_follows", &["sat", "theory_sat.json", "M1.json", "M2.json", "--target", "sup x. R(x) <= 1"], 0);
    golden("sat_target_fails", &["sat", "theory_sat.json", "M1.json", "M2.json", "--target", "sup x. R(x) <= 3/4"], 1);
}

#[test]
fn separate_families() {
    golden("separate", &["separate", "family_a", "family_b", "basis_sentences.json"], 0);
    golden("separate_same", &["separate", "family_a", "family_a", "basis_sentences.json"], 1);
}

#[test]
fn types_report() {
    golden("types", &["types", "basis_unary.json", "M1.json", "M2.json", "--metrics", "0,0", "1,1"], 0);
}

#[test]
fn qe_outputs() {
    golden("qe_sup_and", &["qe", "sup y. mu(and(x,y))"], 0);
    golden("qe_oracle", &["qe", "sup y. mu(and(x,y)) + -1*mu(and(x,not(y)))", "--oracle", "3"], 0);
}

#[test]
fn check_proof_outcomes() {
    golden("proof_valid", &["check-proof", "zero_scaling.proof.json", "zero.theory.json", "--probe", "probe"], 0);
    golden("proof_broken", &["check-proof", "broken.proof.json", "zero.theory.json"], 1);
}

#[test]
fn rendezvous_two_point() {
    golden("rendezvous", &["rendezvous", "two_point.json", "--n", "2"], 0);
}

#[test]
fn input_errors_are_json_with_exit_2() {
    for args in [
        vec!["eval", "missing.json", "1"],
        vec!["eval", "M1.json", "sup x. Q(x)"],
        vec!["eval", "M1.json", "R(x)", "--assign", "x=zz"],
        vec!["sat", "M1.json", "M1.json"],
        vec!["no-such-command"],
    ] {
        let out = affine(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        let err = stderr_error(&out);
        assert_eq!(err["exit_code"], 2);
        assert!(err["kind"].is_string() && err["message"].is_string());
    }
}

#[test]
fn semantic_failures_report_json() {
    let out = affine(&["sat", "theory_unsat.json", "M1.json", "M2.json"]);
    assert_eq!(stderr_error(&out)["kind"], "unsat");
}

#[test]
fn manifest_hashes_inputs_and_outputs() {
    let dir = std::env::temp_dir().join(format!("affine-manifest-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let manifest = dir.join("run.json");
    let mean = dir.join("mean.json");
    let out = affine(&[
        "--manifest",
        manifest.to_str().unwrap(),
        "mean",
        "half_half.json",
        "M1.json",
        "M2.json",
        "--out",
        mean.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    let inputs = m["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 3);
    for entry in inputs {
        let bytes = fs::read(data().join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"], hex::encode(Sha256::digest(&bytes)));
    }
    let written = fs::read(&mean).unwrap();
    assert_eq!(m["outputs"][0]["sha256"], hex::encode(Sha256::digest(&written)));
    assert_eq!(m["exit_code"], 0);

    let again = affine(&["mean", "half_half.json", "M1.json", "M2.json"]);
    assert_eq!(again.stdout, written, "--out and stdout agree");
    fs::remove_dir_all(&dir).ok();
}
