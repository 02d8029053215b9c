use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spand-bench"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spand-bench-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn generated_run_reports_all_fields() {
    let out = bin()
        .args(["--gen", "lap2d", "--n", "32", "--rho", "1", "--eps", "1e-4", "--variant", "orths"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    for key in ["tP", "tF", "tS", "nCG", "sizeTop", "memF", "perLevel", "residuals", "status"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["status"], "converged");
    let it = v["nCG"].as_u64().unwrap();
    assert!((1..=15).contains(&it), "nCG {it}");
    assert_eq!(v["residuals"].as_array().unwrap().len() as u64, it + 1);
    let levels = v["config"]["levels"].as_u64().unwrap();
    let per_level = v["perLevel"].as_array().unwrap();
    assert_eq!(per_level.len() as u64, levels);
    let nnz: Vec<u64> = per_level.iter().map(|r| r["nnz"].as_u64().unwrap()).collect();
    assert!(nnz.windows(2).all(|w| w[0] <= w[1]), "{nnz:?}");
    assert_eq!(*nnz.last().unwrap(), v["memF"].as_u64().unwrap());
}

#[test]
fn two_by_two_matrix_file_in_exact_mode() {
    let path = scratch("two.mtx");
    std::fs::write(&path, "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 4\n2 1 2\n2 2 3\n").unwrap();
    let out = bin()
        .args([
            "--matrix",
            path.to_str().unwrap(),
            "--eps",
            "0",
            "--variant",
            "orths",
            "--tol",
            "1e-12",
            "--backend",
            "graph",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["nCG"].as_u64().unwrap() <= 2);
    assert_eq!(v["config"]["dofs"], 2);
}

#[test]
fn indefinite_matrix_exits_with_breakdown_code() {
    let path = scratch("neg.mtx");
    std::fs::write(
        &path,
        "%%MatrixMarket matrix coordinate real symmetric\n3 3 5\n1 1 -2\n2 1 1\n2 2 -2\n3 2 1\n3 3 -2\n",
    )
    .unwrap();
    let out = bin().args(["--matrix", path.to_str().unwrap(), "--backend", "graph", "--levels", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["status"], "breakdown");
    assert!(v["failedLevel"].as_u64().is_some());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bin().arg("--no-such-flag").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["--gen", "lap2d", "--eps", "-1"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["--matrix", "/nonexistent/m.mtx"]).output().unwrap().status.code(), Some(1));
    assert_eq!(
        bin().args(["--gen", "lap2d", "--n", "8", "--levels", "3", "--skip", "3"]).output().unwrap().status.code(),
        Some(1)
    );
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn non_convergence_exits_three() {
    let out =
        bin().args(["--gen", "lap2d", "--n", "32", "--rho", "100", "--eps", "0.9", "--maxit", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["status"], "not_converged");
}

#[test]
fn sweep_writes_csv_rows() {
    let path = scratch("sweep.csv");
    let out = bin()
        .args(["--gen", "lap2d", "--sweep", "n=16,32,64;eps=1e-4;rho=1;variant=orths", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "nCG").unwrap();
    let its: Vec<f64> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(its.len(), 3);
    // n=16 gets two levels, so nothing is compressed and the solve is exact.
    assert!(its[0] <= 2.0, "{its:?}");
    let (lo, hi) = (its[1].min(its[2]), its[1].max(its[2]));
    assert!(hi < 2.0 * lo, "{its:?}");
}

#[test]
fn empty_sweep_is_header_only() {
    let out = bin().args(["--gen", "lap2d", "--sweep", "n="]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim_end(), spand_bench::SWEEP_HEADER.join(","));
}
