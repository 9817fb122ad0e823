use std::process::{Command, Output};

fn linweb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linweb")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const PENCILS: [&str; 6] = ["--P", "y/x", "--Q", "y/(x-1)", "--R", "(y-1)/x"];

#[test]
fn three_pencils_have_vanishing_invariants() {
    let o = linweb(&[&["invariants"], &PENCILS[..], &["--at", "2,3", "--json"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for k in ["a", "b", "c", "k"] {
        assert_eq!(v[k], "0", "{k}");
    }
    assert!(v["tolerance"].is_null());
}

#[test]
fn text_lines_carry_their_tolerance() {
    let o = linweb(&[&["invariants"], &PENCILS[..], &["--at", "1.5,-1/4"]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with("(exact)")), "{}", stdout(&o));
    let o = linweb(&["invariants", "--P", "y/x", "--Q", "y/(x-1)", "--R", "sqrt(y)", "--at", "2,3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().skip(1).all(|l| l.contains("tol ")), "{}", stdout(&o));
}

#[test]
fn collinear_centers_are_degenerate() {
    let args = ["invariants", "--P", "y/x", "--Q", "y/(x-1)", "--R", "y/(x-2)", "--at", "2,3"];
    let o = linweb(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("regular/degenerate"));
    let o = linweb(&[&args[..], &["--json"]].concat());
    assert_eq!(o.status.code(), Some(1));
    let e: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(e["error"], "degenerate");
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["invariants", "--P", "y/x", "--at", "1,2"],
        vec!["invariants", "--P", "y/x", "--Q", "1", "--R", "0", "--at", "1"],
        vec!["invariants", "--P", "y/x+", "--Q", "1", "--R", "0", "--at", "1,2"],
        vec!["hexagonal", "--P", "y/x", "--Q", "1", "--R", "0", "--tol", "-1"],
        vec!["signature", "--P", "y/x", "--Q", "1", "--R", "0", "--samples", "0"],
        vec!["two-pencils", "--through-stage", "11"],
        vec!["frobnicate"],
    ] {
        let o = linweb(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = linweb(&["frobnicate", "--json"]);
    let e: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(e["error"], "usage");
}

#[test]
fn two_pencils_transcript_ends_with_the_secant_relation() {
    let o = linweb(&["two-pencils", "--through-stage", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().last().unwrap().trim(), "Z2 = 1/2*Z + 1");
    assert_eq!(out.lines().filter(|l| l.starts_with("stage")).count(), 6);
    assert!(out.lines().filter(|l| l.starts_with("stage")).all(|l| l.contains("Verified")));
}

#[test]
fn signature_output_is_deterministic() {
    let args = [&["signature"], &PENCILS[..], &["--samples", "26", "--seed", "5"]].concat();
    let a = linweb(&args);
    let b = linweb(&[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let csv = stdout(&a);
    assert!(csv.starts_with("x,y,a,b,c,a2,b3,c1,a22,b33,c11\r\n"));
    assert_eq!(csv.lines().count(), 27);
    assert!(stderr(&a).contains("dimension 0") && stderr(&a).contains("rank tol"));
}

#[test]
fn hexagonality_and_lines() {
    let o = linweb(&[&["hexagonal"], &PENCILS[..]].concat());
    assert_eq!(stdout(&o).trim(), "hexagonal = true (exact: k = 0)");
    let o = linweb(&[&["linearize"], &PENCILS[..], &["--samples", "2"]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("(tol 1e-6): collinear"), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 3 * 5);
}

#[test]
fn curvature_grid_csv() {
    let web = ["--P", "2*x+2*sqrt(x^2-y)", "--Q", "2*x-2*sqrt(x^2-y)", "--R", "(x*y+sqrt(x^2+y^2-1))/(x^2-1)"];
    let o = linweb(&[&["curvature"], &web[..], &["--N", "1+c*x", "--param", "c=2", "--region", "2,0.5,3,2", "--grid", "2,3"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 6);
    assert!(stderr(&o).contains("agree"));
}

#[test]
fn pencil_compatibility_transcript() {
    let o = linweb(&["lemma1", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let last = v.as_array().unwrap().last().unwrap();
    assert_eq!(last["lhs"], "P_yy");
    assert_eq!(last["rhs"], "0");
}

#[test]
fn chain_on_a_mock_system() {
    let path = std::env::temp_dir().join("linweb-mock-chain.json");
    std::fs::write(&path, r#"{"structure": ["0", "0"], "rules": {"x": ["y", "0"], "y": ["z", "0"], "z": ["0", "0"]}, "seed": ["x-y^2"], "invert": ["x"]}"#).unwrap();
    let o = linweb(&["chain", "--input", path.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let dims: Vec<i64> = v["steps"].as_array().unwrap().iter().map(|s| s["dimension"].as_i64().unwrap()).collect();
    assert_eq!(dims, [2, 1]);
    assert_eq!(v["verdict"]["verdict"], "conjecture_true");
}

#[test]
fn selftest_subset() {
    let o = linweb(&["selftest", "--only", "1,5,10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.contains(" PASS ")).count(), 3);
}
