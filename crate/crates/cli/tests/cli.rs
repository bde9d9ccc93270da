use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use collapse_cli::table::ResultTable;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_collapse"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn fig5_text() -> String {
    std::fs::read_to_string(configs().join("fig5_k4.toml")).unwrap()
}

#[test]
fn shipped_configs_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["fig3_n10.toml", "fig5_k4.toml", "fully_synthetic.toml", "random_sampled.toml"] {
        let out = tmp.path().join(name);
        let o = run(&[
            "simulate",
            configs().join(name).to_str().unwrap(),
            "--replicates",
            "5",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        for f in ["results.csv", "results.json", "bounds.json", "plot.svg", "run_meta.json"] {
            assert!(out.join(f).is_file(), "{name}: missing {f}");
        }
    }
}

#[test]
fn missing_window_exits_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &fig5_text().replace("window = 4\n", ""));
    let o = run(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schedule.window"));
}

#[test]
fn zero_replicates_exits_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &fig5_text().replace("replicates = 100", "replicates = 0"));
    assert_eq!(run(&["simulate", cfg.to_str().unwrap()]).status.code(), Some(1));
    let good = configs().join("fig5_k4.toml");
    let o = run(&["simulate", good.to_str().unwrap(), "--replicates", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_validation_code() {
    assert_eq!(run(&["simulate", "/nonexistent/cfg.toml"]).status.code(), Some(1));
    assert_eq!(run(&["reproduce-fig", "4"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = run(&[
        "simulate",
        configs().join("fig3_n10.toml").to_str().unwrap(),
        "--replicates",
        "3",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("fully_synthetic.toml");
    let mut outputs = Vec::new();
    for (i, seed) in ["3", "3", "4"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        let o = run(&[
            "simulate",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--replicates",
            "50",
            "--format",
            "csv",
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(!dir.join("plot.svg").exists());
        outputs.push(std::fs::read(dir.join("results.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
}

#[test]
fn emitted_csv_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        configs().join("fig3_n10.toml").to_str().unwrap(),
        "--replicates",
        "20",
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let bytes = std::fs::read(tmp.path().join("results.csv")).unwrap();
    let text = std::str::from_utf8(&bytes).unwrap();
    assert!(text.starts_with("run_id,generation,metric,value,stderr\n"));
    assert!(!text.contains('\r'));
    assert!(text.contains(",NA"));
    let table = ResultTable::read_csv(bytes.as_slice()).unwrap();
    assert!(!table.rows.is_empty());
    assert_eq!(table.to_csv_string().as_bytes(), bytes.as_slice());
}

#[test]
fn bounds_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "bounds",
        configs().join("fig3_n10.toml").to_str().unwrap(),
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = ResultTable::read_csv(std::fs::File::open(tmp.path().join("bounds.csv")).unwrap())
        .unwrap();
    assert!(table.rows.iter().any(|r| r.metric == "s_m_formula"));
}

#[test]
fn reproduce_figure_three_small() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "reproduce-fig",
        "3",
        "--replicates",
        "4",
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["data.csv", "data.json", "figure.svg", "run_meta.json"] {
        assert!(tmp.path().join("fig3").join(f).is_file(), "missing {f}");
    }
}

#[test]
fn softmax_check_passes() {
    let o = run(&["softmax-check"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("softmax-check PASS"));
}
