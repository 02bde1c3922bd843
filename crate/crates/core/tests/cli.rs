//! End-to-end runs of the `subset-ldp` binary.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subset-ldp"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn risk_values() {
    let v = json(&run(&[
        "risk",
        "--scheme",
        "subset",
        "--k",
        "4",
        "--d",
        "2",
        "--epsilon",
        "1.0986",
        "--n",
        "1000",
        "--loss",
        "l22",
        "--dist",
        "uniform",
    ]));
    assert!((v["value"].as_f64().unwrap() - 0.009).abs() < 1e-5);
    assert_eq!(v["flavor"], "ExactAllN");
    let v = json(&run(&[
        "risk",
        "--scheme",
        "rappor",
        "--k",
        "4",
        "--epsilon",
        "1.3863",
        "--n",
        "1000",
        "--loss",
        "l22",
    ]));
    assert!((v["value"].as_f64().unwrap() - 0.00875).abs() < 1e-6);
    let out = run(&[
        "risk",
        "--k",
        "4",
        "--d",
        "2",
        "--exp-epsilon",
        "3",
        "--n",
        "1000",
        "--loss",
        "l1",
    ]);
    assert_eq!(json(&out)["flavor"], "AsymptoticLeading");
    assert!(String::from_utf8_lossy(&out.stderr).contains("leading"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["risk", "--k", "4"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "risk",
            "--k",
            "4",
            "--d",
            "4",
            "--epsilon",
            "1",
            "--n",
            "10"
        ])
        .status
        .code(),
        Some(2)
    );
    let out = run(&["bounds", "--k", "10", "--exp-epsilon", "3", "--n", "20"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshold 25"));
    assert_eq!(
        run(&["bounds", "--k", "3", "--exp-epsilon", "3", "--n", "100000"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let args = [
        "simulate",
        "--scheme",
        "subset",
        "--k",
        "4",
        "--d",
        "2",
        "--epsilon",
        "1.0986",
        "--n",
        "500",
        "--trials",
        "300",
        "--seed",
        "9",
    ];
    let a = run(&args);
    let b = run(&args);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    let c = run(&threaded);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v = json(&a);
    assert!(v["losses"]["l22"]["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn near_noiseless_rr() {
    let v = json(&run(&[
        "simulate",
        "--scheme",
        "rr",
        "--k",
        "5",
        "--epsilon",
        "10",
        "--n",
        "10000",
        "--trials",
        "20",
        "--dist",
        "1,0,0,0,0",
        "--loss",
        "l1",
    ]));
    assert!(v["losses"]["l1"]["mean"].as_f64().unwrap() < 0.01);
}

#[test]
fn compare_statuses() {
    let v = json(&run(&["compare", "--k", "500", "--epsilon", "4.0"]));
    assert_eq!(v["status"], "PASS");
    let r = &v["bound_ratios"];
    assert!(r["l22_vs_rappor"].as_f64().unwrap() < 0.5 && r["l22_vs_rr"].as_f64().unwrap() < 0.5);
    assert!(r["l1_vs_rappor"].as_f64().unwrap() < 0.7 && r["l1_vs_rr"].as_f64().unwrap() < 0.7);
    assert_eq!(
        json(&run(&["compare", "--k", "100", "--epsilon", "4.0"]))["status"],
        "NOT-APPLICABLE"
    );
    let v = json(&run(&["compare", "--k", "1000", "--epsilon", "0.1"]));
    assert_eq!(v["status"], "NOT-APPLICABLE");
    let ratio = v["exact_ratios"]["l22_vs_rappor"].as_f64().unwrap();
    assert!((0.8..=1.2).contains(&ratio));
}

#[test]
fn bounds_certificate_and_grid() {
    let v = json(&run(&[
        "bounds",
        "--k",
        "10",
        "--epsilon",
        "1.0986122886681098",
        "--n",
        "1000",
        "--loss",
        "l22",
    ]));
    assert!((v["lower"].as_f64().unwrap() / (9.0 / 128_000.0) - 1.0).abs() < 1e-12);
    let out = run(&[
        "bounds",
        "--grid",
        "--k",
        "8,12",
        "--exp-epsilon",
        "2",
        "--n",
        "100000",
        "--loss",
        "l22",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.starts_with("k,epsilon,exp_epsilon,n,loss,d,lower,exact_worst_case,upper,ordered\n")
    );
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn select_d_and_channel() {
    let v = json(&run(&["select-d", "--k", "10", "--epsilon", "1"]));
    assert_eq!(v["choice"]["d_star"], 3);
    let out = run(&[
        "channel",
        "--scheme",
        "rappor",
        "--k",
        "2",
        "--exp-epsilon",
        "4",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("00,01,10,11"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn sample_then_estimate() {
    let sampled = run(&[
        "sample",
        "--k",
        "5",
        "--d",
        "2",
        "--exp-epsilon",
        "4",
        "--count",
        "200",
        "--seed",
        "3",
    ]);
    let v = json(&sampled);
    let outputs: Vec<String> = v["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o.as_str().unwrap().to_owned())
        .collect();
    assert_eq!(outputs.len(), 200);
    assert!(outputs.iter().all(|o| o.split('+').count() == 2));
    let dir = std::env::temp_dir().join(format!("subset-ldp-it-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("reports.txt");
    std::fs::write(&path, outputs.join("\n")).unwrap();
    let e = json(&run(&[
        "estimate",
        "--k",
        "5",
        "--d",
        "2",
        "--exp-epsilon",
        "4",
        "--reports",
        path.to_str().unwrap(),
        "--clip",
    ]));
    assert_eq!(e["n"], 200);
    let sum: f64 = e["estimate"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .sum();
    assert!((sum - 1.0).abs() < 1e-9);
    let raw = dir.join("reports.json");
    std::fs::write(&raw, &sampled.stdout).unwrap();
    let from_json = json(&run(&[
        "estimate",
        "--k",
        "5",
        "--d",
        "2",
        "--exp-epsilon",
        "4",
        "--reports",
        raw.to_str().unwrap(),
        "--clip",
    ]));
    assert_eq!(from_json, e);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_fast_suites() {
    for suite in ["lemimp", "select-d", "extremal", "risks"] {
        let v = json(&run(&["verify", "--suite", suite]));
        assert_eq!(v["pass"], true, "{suite}");
    }
}
