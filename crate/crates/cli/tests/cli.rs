use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use curv4_cli::output::float17;
use curv4_cli::{run, Command, Identity};
use proptest::prelude::*;
use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn text(name: &str) -> String {
    std::fs::read_to_string(scenario(name)).unwrap()
}

/// Runs the binary; returns exit code, stdout+stderr and the output directory.
fn curv4(args: &[&str], name: &str, threads: Option<&str>) -> (i32, String, tempfile::TempDir) {
    let out = tempfile::tempdir().unwrap();
    let mut p = Proc::new(env!("CARGO_BIN_EXE_curv4"));
    p.args(args).arg("--scenario").arg(scenario(name)).arg("--out").arg(out.path());
    if let Some(t) = threads {
        p.env("CURV4_THREADS", t);
    }
    let o = p.output().unwrap();
    let msg = format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    (o.status.code().unwrap(), msg, out)
}

fn report(dir: &tempfile::TempDir) -> Value {
    serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap()
}

#[test]
fn fg_product_on_conformal_product_passes() {
    let (code, msg, dir) = curv4(&["verify", "fg-product"], "conformal_product.json", None);
    assert_eq!(code, 0, "{msg}");
    let r = report(&dir);
    assert!(r["result"]["max_rel_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["result"]["included"].as_u64().unwrap(), 30);
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["conventions"]["version"], "curv4-signs-1");
    assert!(r["tolerances"]["fg_product"].as_f64().is_some());
}

#[test]
fn definiteness_on_flat_torus() {
    let (code, msg, dir) = curv4(&["grid", "definiteness"], "flat_t4_n6.json", None);
    assert_eq!(code, 0, "{msg}");
    let d = &report(&dir)["result"]["definiteness"];
    assert_eq!(d["b2_plus"], 3);
    assert_eq!(d["b2_minus"], 3);
    assert_eq!(d["signature"], 0);
    assert_eq!(d["definite"], false);
}

#[test]
fn nonharmonic_input_exits_2_with_the_gate() {
    let (code, msg, dir) = curv4(&["verify", "component-bochner"], "nonharmonic.json", None);
    assert_eq!(code, 2);
    assert!(msg.contains("not harmonic") && msg.contains("|Δφ|") && msg.contains("exceeds the gate"), "{msg}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn violated_tolerance_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tight.json");
    let mut v: Value = serde_json::from_str(&text("round_s4_random.json")).unwrap();
    v["tolerances"] = serde_json::json!({ "weitzenboeck": 1e-300 });
    std::fs::write(&path, v.to_string()).unwrap();
    let o = Proc::new(env!("CARGO_BIN_EXE_curv4"))
        .args(["verify", "weitzenboeck", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL"));
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(r["passed"], false);
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    for (args, name) in [
        (&["verify", "fg-product"][..], "conformal_product.json"),
        (&["kato", "scan"][..], "conformal_product.json"),
        (&["curvature"][..], "cp2_kaehler.json"),
        (&["grid", "harmonic"][..], "perturbed_t4.json"),
    ] {
        let runs: Vec<(Vec<u8>, Vec<u8>)> = [Some("1"), Some("4"), None]
            .into_iter()
            .map(|t| {
                let (code, msg, dir) = curv4(args, name, t);
                assert_eq!(code, 0, "{msg}");
                (
                    std::fs::read(dir.path().join("report.json")).unwrap(),
                    std::fs::read(dir.path().join("samples.csv")).unwrap(),
                )
            })
            .collect();
        assert!(runs.windows(2).all(|w| w[0] == w[1]), "{args:?} {name}");
    }
}

#[test]
fn ksweep_rows() {
    let (code, msg, dir) = curv4(&["kato", "ksweep", "--k", "0,1,2,4,8"], "conformal_product.json", None);
    assert_eq!(code, 0, "{msg}");
    let scan = run(&Command::KatoScan, &text("conformal_product.json"), "t").unwrap();
    let scan: Value = serde_json::from_slice(&scan.report_json).unwrap();
    let min_rho = scan["result"]["min_rho"].as_f64().unwrap();

    let csv = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "k,min_ratio,lower_bound,residual,points");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    // at k = 0 the ratio is rho itself; at k = 1 it is rho - 3/2
    assert!((rows[0][1] - min_rho).abs() < 1e-12, "{} vs {min_rho}", rows[0][1]);
    assert!((rows[1][1] - (min_rho - 1.5)).abs() < 1e-12 && rows[1][1] >= -1e-6);
    for r in &rows[2..] {
        assert!(r[3] < 1e-5, "{r:?}");
    }
}

#[test]
fn sample_csv_has_the_documented_columns() {
    let (_, _, dir) = curv4(&["verify", "adapted-frame"], "cp2_kaehler.json", None);
    let csv = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x1,x2,x3,x4,residual,abs_residual,rho,K,R1234,F,G,degeneracy");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 12);
    let k: f64 = first[7].parse().unwrap();
    assert!((k - 2.0).abs() < 1e-7, "{k}");
}

fn input_error(json: &str) -> String {
    match run(&Command::Verify(Identity::Weitzenboeck), json, "s.json") {
        Err(e) => {
            assert_eq!(e.exit_code(), 2);
            e.to_string()
        }
        Ok(_) => panic!("accepted {json}"),
    }
}

#[test]
fn schema_errors_are_located() {
    let base = r#"{"schema_version": 1, "id": "x", "manifold": "flat_t4", "form": "kaehler""#;
    let cases = [
        (format!("{base}, \"colour\": 1}}"), "unknown field `colour`"),
        (format!("{base}, \"sampling\": {{\"count\": 3, \"sed\": 1}}}}"), "unknown field `sed`"),
        (base.to_string(), "EOF while parsing"),
        (base.replace("flat_t4", "torus") + "}", "unknown preset `torus`"),
        (base.replace("\"kaehler\"", r#"{"components": {"21": "x1"}}"#) + "}", "unknown component `21`"),
        (base.replace("\"kaehler\"", r#"{"components": {"12": "x1 +* 2"}}"#) + "}", "syntax error at byte 4"),
        (base.replace("\"kaehler\"", r#"{"preset": "kaehler", "seed": 2}"#) + "}", "does not take seed"),
        (base.replace("1,", "2,") + "}", "schema_version 2"),
        (format!("{base}, \"sampling\": {{\"count\": 0}}}}"), "count must be at least 1"),
        (format!("{base}, \"grid\": {{\"n\": 1}}}}"), "at least 2"),
    ];
    for (json, needle) in cases {
        let e = input_error(&json);
        assert!(e.contains(needle), "{json}\n  -> {e}");
        assert!(e.starts_with("s.json"), "{e}");
    }
    // serde locates the offending token
    let e = input_error(&format!("{base}, \"colour\": 1}}"));
    assert!(e.contains("line 1 column"), "{e}");
}

#[test]
fn inline_manifold_matches_the_preset() {
    let inline = r#"{"schema_version": 1, "id": "s", "form": {"preset": "random", "seed": 5},
        "manifold": {"diagonal": ["1", "sin(x1)^2", "1", "sin(x3)^2"],
                     "domain": [[0, 3.141592653589793], [0, 6.283185307179586], [0, 3.141592653589793], [0, 6.283185307179586]]}}"#;
    let preset = r#"{"schema_version": 1, "id": "s", "form": {"preset": "random", "seed": 5},
        "manifold": "product_s2s2(1, 1)"}"#;
    let cmd = Command::Verify(Identity::Weitzenboeck);
    let a: Value = serde_json::from_slice(&run(&cmd, inline, "a").unwrap().report_json).unwrap();
    let b: Value = serde_json::from_slice(&run(&cmd, preset, "b").unwrap().report_json).unwrap();
    assert_eq!(a["result"]["samples"], b["result"]["samples"]);

    let asym = inline.replace(
        r#""diagonal": ["1", "sin(x1)^2", "1", "sin(x3)^2"]"#,
        r#""metric": [["1","x1","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]]"#,
    );
    assert!(input_error(&asym).contains("not symmetric"));
}

#[test]
fn form_presets_need_a_matching_manifold() {
    let json = r#"{"schema_version": 1, "id": "s", "manifold": "round_s4(1)", "form": "kaehler"}"#;
    assert!(input_error(json).contains("flat_t4 and cp2_fubini_study"));
    let json = r#"{"schema_version": 1, "id": "s", "manifold": "cp2_fubini_study", "form": "factor_volumes"}"#;
    assert!(input_error(json).contains("flat_t4 and product_s2s2"));
    let json = r#"{"schema_version": 1, "id": "s", "manifold": "flat_t4"}"#;
    assert!(input_error(json).contains("needs a `form`"));
}

#[test]
fn conformal_factor_on_kaehler_stays_harmonic() {
    // harmonicity of 2-forms is conformally invariant in dimension four
    let json = r#"{"schema_version": 1, "id": "s", "manifold": "cp2_fubini_study", "form": "kaehler",
        "conformal_factor": "0.2*x1*x2", "sampling": {"count": 8}}"#;
    let o = run(&Command::Verify(Identity::FgProduct), json, "s").unwrap();
    assert!(o.passed, "{}", o.summary);
}

proptest! {
    #[test]
    fn float17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(float17(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn json_floats_round_trip(x in proptest::num::f64::NORMAL) {
        let bytes = curv4_cli::output::to_json(&[x]).unwrap();
        let back: Vec<f64> = serde_json::from_slice(&bytes).unwrap();
        prop_assert_eq!(back[0].to_bits(), x.to_bits());
    }
}
