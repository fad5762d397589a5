use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bcf-ablation"))
}

#[test]
fn generate_writes_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let status = bin()
        .args([
            "generate", "--dgp", "slight", "--alpha", "2", "--n", "40", "--seed", "5", "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "x1,x2,x3,x4,x5,pi_true,d,y,cate_true"
    );
    assert_eq!(text.lines().count(), 41);

    let again = dir.path().join("e.csv");
    bin()
        .args([
            "generate", "--dgp", "slight", "--alpha", "2", "--n", "40", "--seed", "5", "--out",
        ])
        .arg(&again)
        .status()
        .unwrap();
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn bad_arguments_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    for args in [
        vec!["generate", "--dgp", "extreme", "--alpha", "3", "--out"],
        vec!["generate", "--dgp", "severe", "--alpha", "1", "--out"],
    ] {
        let output = bin().args(&args).arg(&out).output().unwrap();
        assert!(!output.status.success(), "{args:?}");
        assert!(!output.stderr.is_empty());
    }
    let missing = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("nope.toml"))
        .output()
        .unwrap();
    assert!(!missing.status.success());
    let report = bin()
        .args(["report", "--from"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!report.status.success());
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(
        &config,
        "selections = [\"moderate\"]\nalphas = [1]\nn = 50\nreplicates = 2\nmodels = [\"no_pi\", \"est_pi\"]\n\
         burn_in = 10\nretained = 10\nmu_trees = 10\ntau_trees = 5\npropensity_trees = 10\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "-q", "--seed", "3", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = fs::read_to_string(out.join("replicates.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4);
    assert!(out.join("pvalues_DGP2_1_no_pi_vs_est_pi.csv").exists());

    let refused = bin()
        .args(["run", "-q", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!refused.status.success());
    let resumed = bin()
        .args(["run", "-q", "--resume", "--seed", "3", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(resumed.success());
    assert_eq!(
        fs::read_to_string(out.join("replicates.csv")).unwrap(),
        rows
    );

    let summary = out.join("summary_DGP2_1.md");
    fs::remove_file(&summary).unwrap();
    assert!(bin()
        .args(["report", "--from"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert!(fs::read_to_string(&summary)
        .unwrap()
        .contains("| rmse_pi |"));
}
