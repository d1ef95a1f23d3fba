//! Acceptance criterion 10: every subcommand, run twice with the same
//! flags, writes byte-identical CSV.

use std::process::{Command, ExitCode, Stdio};

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pairs.csv");
    let data = data.to_str().unwrap();
    let setup = Command::new(env!("CARGO_BIN_EXE_lsib"))
        .args([
            "gen",
            "--gen",
            "contradict:matrix=0.7/0.3|0.3/0.7,nx=2,labels=10",
            "--out",
            data,
        ])
        .status()
        .unwrap();
    assert!(setup.success());

    let cases: Vec<Vec<&str>> = vec![
        vec!["gen", "--gen", "unique:k=4,per=25", "--seed", "7"],
        vec![
            "gen",
            "--gen",
            "contradict:matrix=0.6/0.4|0.2/0.8,nx=4,labels=9,mode=sampled",
            "--seed",
            "3",
        ],
        vec![
            "gen",
            "--gen",
            "factor:role=redundant,nf=8,ns=4,k=4,rows=200",
            "--seed",
            "2",
        ],
        vec!["info", "--data", data, "--units", "bits"],
        vec!["curve", "--gen", "unique:k=4,per=25"],
        vec![
            "verify",
            "--gen",
            "unique:k=4,per=25",
            "--alphas",
            "0:0.9:0.1",
            "--tol",
            "1e-3",
            "--seed",
            "5",
        ],
        vec!["sweep-alpha", "--data", data, "--alphas", "0:1:0.1"],
        vec![
            "sweep-alpha",
            "--gen",
            "unique:k=3,per=4",
            "--alphas",
            "0:0.8:0.2",
            "--mode",
            "trained",
            "--seed",
            "1",
        ],
        vec![
            "solve", "--data", data, "--betas", "0:1:0.1", "--seed", "11",
        ],
        vec![
            "probe", "--role", "nuisance", "--alphas", "0,0.6", "--seeds", "3", "--rows", "800",
            "--epochs", "10",
        ],
    ];

    let mut failed = 0;
    for (i, args) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let out = dir.path().join(format!("case{i}.csv"));
            let out = out.to_str().unwrap().to_string();
            let status = Command::new(env!("CARGO_BIN_EXE_lsib"))
                .args(args)
                .args(["--out", &out])
                .stderr(Stdio::null())
                .status()
                .unwrap();
            let bytes = std::fs::read(&out).unwrap_or_default();
            outputs.push((status.code(), bytes));
        }
        let same = outputs[0] == outputs[1] && !outputs[0].1.is_empty();
        if !same {
            failed += 1;
        }
        println!(
            "[{}] 10 reproducible CSV: lsib {} (exit {:?}, {} bytes)",
            if same { "PASS" } else { "FAIL" },
            args.join(" "),
            outputs[0].0,
            outputs[0].1.len()
        );
    }
    println!(
        "criterion 10: {}",
        if failed == 0 { "PASS" } else { "FAIL" }
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
