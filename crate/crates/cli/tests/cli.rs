use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsim")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn gen_regular_writes_fifty_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&gsim(dir.path(), &["gen", "--n", "20", "--degree", "5", "--seed", "7"]));
    assert_eq!(field(&out, "edges"), "50");
    let rudy = fs::read_to_string(dir.path().join("graph.rudy")).unwrap();
    assert_eq!(rudy.lines().next().unwrap(), "20 50");
    assert_eq!(rudy.lines().count(), 51);
    assert!(dir.path().join("graph.json").exists());
}

#[test]
fn gen_density_rounds_edge_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&gsim(dir.path(), &["gen", "--n", "4", "--density", "0.5", "--name", "g4"]));
    assert_eq!(field(&out, "edges"), "3");
    assert_eq!(field(&out, "density"), "0.5");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gsim(dir.path(), &["gen", "--degree", "3"]).status.code(), Some(2));
    assert_eq!(gsim(dir.path(), &["gen", "--n", "5", "--degree", "3"]).status.code(), Some(2));
    assert_eq!(gsim(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn decompose_two_spin_matrix() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("j.csv"), "0,0.5\n0.5,0\n").unwrap();
    let out = stdout(&gsim(dir.path(), &["decompose", "--input", "j.csv", "--out", "d"]));
    let rows: Vec<Vec<&str>> = out.lines().skip(2).map(|l| l.split(' ').collect()).collect();
    assert_eq!(rows.len(), 2);
    // k index lambda sign error_ratio tail_frobenius
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.5);
    assert_eq!(rows[0][3], "+");
    assert!((rows[0][4].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(rows[1][2].parse::<f64>().unwrap(), -0.5);
    assert_eq!(rows[1][4].parse::<f64>().unwrap(), 0.0);
    let csv = fs::read_to_string(dir.path().join("d/spectrum.csv")).unwrap();
    assert!(csv.starts_with("k,index,lambda,sign,error_ratio,tail_frobenius\n"));
    assert!(dir.path().join("d/eigen.json").exists());
}

#[test]
fn malformed_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "0,0.5\n").unwrap();
    fs::write(dir.path().join("asym.csv"), "0,1\n2,0\n").unwrap();
    fs::write(dir.path().join("bad.rudy"), "3 1\n1 9 1.0\n").unwrap();
    fs::write(dir.path().join("bad.toml"), "runs = \n").unwrap();
    for args in [
        vec!["decompose", "--input", "bad.csv"],
        vec!["decompose", "--input", "asym.csv"],
        vec!["solve", "--input", "bad.rudy"],
        vec!["experiment", "prob", "--config", "bad.toml", "--out", "x"],
    ] {
        let o = gsim(dir.path(), &args);
        assert_eq!(o.status.code(), Some(3), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn solve_single_edge_is_optimal() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.rudy"), "2 1\n1 2 1\n").unwrap();
    let out = stdout(&gsim(dir.path(), &["solve", "--input", "e.rudy", "--oracle"]));
    assert_eq!(field(&out, "final_cut"), "1");
    assert_eq!(field(&out, "optimal"), "true");
    let field_out = stdout(&gsim(dir.path(), &["solve", "--input", "e.rudy", "--backend", "field", "--block", "4"]));
    assert_eq!(field(&field_out, "final_cut"), "1");
    assert_eq!(field(&field_out, "backend"), "field");
}

#[test]
fn solve_reports_optimality_on_twenty_vertices() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&gsim(dir.path(), &["gen", "--n", "20", "--degree", "5", "--seed", "7"]));
    let args = [
        "solve",
        "--input",
        "graph.rudy",
        "--k",
        "20",
        "--rate",
        "0.995",
        "--iters",
        "3000",
        "--oracle",
        "--seed",
        "2",
    ];
    let a = stdout(&gsim(dir.path(), &args));
    assert!(["true", "false"].contains(&field(&a, "optimal")));
    assert_eq!(field(&a, "state").len(), 20);
    assert_eq!(a, stdout(&gsim(dir.path(), &args)));
}

#[test]
fn oracle_guard_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&gsim(dir.path(), &["gen", "--n", "30", "--degree", "3"]));
    let o = gsim(dir.path(), &["solve", "--input", "graph.rudy", "--iters", "10", "--oracle"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_problems_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "runs = 0\nks = [0, 99]\n[graph]\nn = 5\ndegree = 3\n").unwrap();
    let o = gsim(dir.path(), &["experiment", "prob", "--config", "c.toml", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("4 problems"), "{err}");
    assert!(err.contains("runs") && err.contains("K = 99") && err.contains("3-regular"));
}

#[test]
fn noise_levels_flag_sets_columns() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "runs = 4\nschedule = { rate = 0.98, iters = 200 }\n[graph]\nn = 8\ndegree = 3\n",
    )
    .unwrap();
    stdout(&gsim(
        dir.path(),
        &["experiment", "noise", "--config", "c.toml", "--levels", "0,0.01,0.02,0.05", "--out", "n"],
    ));
    let csv = fs::read_to_string(dir.path().join("n/noise.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    for l in ["0", "0.01", "0.02", "0.05"] {
        assert!(dir.path().join(format!("n/noise_level{l}.dat")).exists());
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("n/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["levels"], serde_json::json!([0.0, 0.01, 0.02, 0.05]));
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn rmse_and_prob_studies_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "samples = 50\ngraph_seeds = 2\nsizes = [8, 12]\nruns = 4\nschedules = [{ rate = 0.98, iters = 200 }]\n\
         [graph]\nn = 8\ndensity = 0.4\n",
    )
    .unwrap();
    stdout(&gsim(dir.path(), &["experiment", "rmse", "--config", "c.toml", "--out", "r"]));
    for f in ["r/match/rmse.csv", "r/match/scatter_k8.dat", "r/sweep/rmse_n8.dat", "r/sweep/rmse_n12.dat"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    stdout(&gsim(dir.path(), &["experiment", "prob", "--config", "c.toml", "--ks", "1,4", "--out", "p"]));
    let csv = fs::read_to_string(dir.path().join("p/probability.csv")).unwrap();
    // K = 1, 4 and the added K = N row
    assert_eq!(csv.lines().count(), 4);
}
