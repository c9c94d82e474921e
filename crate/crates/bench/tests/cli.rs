use std::path::{Path, PathBuf};
use std::process::Command;

use jaguar_bench::output::{csv_body, TRACE_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jaguar-bench"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn run_writes_post_init_first_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("simplex_quadratic.cfg");
    let (code, _, err) = run(&["run", "--config", cfg.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(dir.path().join("jaguar/trace_seed0.csv")).unwrap();
    assert!(text.lines().any(|l| l == TRACE_HEADER));
    assert!(text.lines().any(|l| l.starts_with("# config_hash=")));
    let first: Vec<&str> = csv_body(&text)[0].split(',').collect();
    assert_eq!(&first[..2], &["0", "20"]);
    assert!(dir.path().join("plotdata.csv").is_file());
    assert!(dir.path().join("plot.gp").is_file());
    assert!(dir.path().join("fstar.txt").is_file());
}

#[test]
fn run_twice_is_byte_identical() {
    let cfg = config("stochastic_logistic.cfg");
    let texts: Vec<String> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let (code, _, err) = run(&[
                "run",
                "--config",
                cfg.to_str().unwrap(),
                "--seed-override",
                "4",
                "--budget-override",
                "3000",
                "--output-dir",
                dir.path().to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{err}");
            std::fs::read_to_string(dir.path().join("jaguar_stochastic/trace_seed4.csv")).unwrap()
        })
        .collect();
    assert_eq!(texts[0], texts[1]);
    assert!(texts[0].contains("# seed=4"));
}

#[test]
fn compare_aligns_methods_on_the_call_axis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("simplex_quadratic.cfg");
    let (code, _, err) = run(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--methods",
        "jaguar,full,l2smooth",
        "--budget",
        "20000",
        "--seed-override",
        "0",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let plot = std::fs::read_to_string(dir.path().join("plotdata.csv")).unwrap();
    let mut grids: Vec<Vec<String>> = Vec::new();
    for method in ["jaguar", "full", "l2smooth"] {
        assert!(dir.path().join(method).join("trace_seed0.csv").is_file());
        let grid = csv_body(&plot)
            .iter()
            .filter(|l| l.starts_with(&format!("{method},")))
            .map(|l| l.split(',').nth(1).unwrap().to_string())
            .collect();
        grids.push(grid);
    }
    assert_eq!(grids[0].len(), 20);
    assert_eq!(grids[0], grids[1]);
    assert_eq!(grids[0], grids[2]);
    // one seed: zero spread
    for line in csv_body(&plot) {
        let f: Vec<&str> = line.split(',').collect();
        assert!(f[2] == f[3] && f[3] == f[4], "{line}");
    }
}

#[test]
fn validate_theory_passes() {
    let (code, out, _) = run(&["validate-theory"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
}

#[test]
fn missing_config_is_exit_2() {
    let (code, _, err) = run(&["run", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(code, 2);
    assert!(err.contains("cannot read config"), "{err}");
}

#[test]
fn malformed_config_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "name = bad\n[problem]\nobjective = quadratic\ndim = x\n[run]\nbudget = 10\n").unwrap();
    let (code, _, err) = run(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn non_finite_objective_is_exit_3_with_trace_flush() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("huge.svm");
    std::fs::write(&data, "-1 1:1e308 2:1e308\n-1 1:1e308 2:1e308\n+1 1:1\n").unwrap();
    let cfg = dir.path().join("nan.cfg");
    std::fs::write(
        &cfg,
        "name = nan\noutput_dir = out\n[problem]\nobjective = logistic\ndata = huge.svm\nset = l2_ball\n[run]\nbudget = 100\n",
    )
    .unwrap();
    let (code, _, err) = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("non-finite"), "{err}");
    assert!(dir.path().join("out/jaguar/trace_seed0.partial.csv").is_file());
}

#[test]
fn parse_data_reports_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.svm");
    std::fs::write(&data, "1 1:0.5 3:2\n2 2:1\n").unwrap();
    let out_path = dir.path().join("out.svm");
    let (code, out, err) = run(&[
        "parse-data",
        "--input",
        data.to_str().unwrap(),
        "--normalize",
        "l2_rows",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.trim(), "rows=2 features=3 nnz=3 positive=1 negative=1");
    assert!(std::fs::read_to_string(out_path).unwrap().lines().count() == 2);
}
