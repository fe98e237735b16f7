use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sipdec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sipdec")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn solves_single_arc_into_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.graph", "p 2 1\na 0 1\n");
    let t = write(dir.path(), "t.graph", "p 3 3\na 0 1\na 1 2\na 2 0\n");
    for model in ["cpfc", "cpac", "dec", "dec-h1", "dec-h2"] {
        let o = sipdec(&["solve", "--pattern", &p, "--target", &t, "--model", model]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).starts_with("solved count=3 "), "{}", stdout(&o));
    }
    let o = sipdec(&["solve", "--pattern", &p, "--target", &t, "--mode", "enum"]);
    let sols: Vec<_> = stdout(&o).lines().filter(|l| l.starts_with("sol ")).map(str::to_owned).collect();
    assert_eq!(sols, ["sol 0 1", "sol 1 2", "sol 2 0"]);
}

#[test]
fn oracle_counts_and_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.graph", "p 2 1\na 0 1\n");
    let t = write(dir.path(), "t.graph", "p 3 3\na 0 1\na 1 2\na 2 0\n");
    let o = sipdec(&["oracle", "--pattern", &p, "--target", &t]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "count=3");

    let big = write(dir.path(), "big.graph", "p 20 0\n");
    let o = sipdec(&["oracle", "--pattern", &p, "--target", &big]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stdout(&o).contains("count"));
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.graph", "p 2 1\na 0 5\n");
    let t = write(dir.path(), "t.graph", "p 3 0\n");
    let o = sipdec(&["solve", "--pattern", &p, "--target", &t]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(sipdec(&["solve", "--model", "nope"]).status.code(), Some(1));
}

#[test]
fn generated_instance_solves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst");
    let o = sipdec(&[
        "gen", "random", "--n", "40", "--eta", "0.08", "--alpha", "0.2", "--seed", "3", "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["pattern.graph", "target.graph", "witness.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let o = sipdec(&[
        "solve",
        "--pattern",
        out.join("pattern.graph").to_str().unwrap(),
        "--target",
        out.join("target.graph").to_str().unwrap(),
        "--mode",
        "first",
    ]);
    assert!(stdout(&o).starts_with("solved count=1 "), "{}", stdout(&o));

    let mesh = dir.path().join("mesh");
    let o = sipdec(&[
        "gen", "mesh", "--side", "4", "--dims", "2", "--rho", "0.1", "--alpha", "0.3", "--mode", "independent",
        "--out-dir", mesh.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!mesh.join("witness.txt").exists());
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let suite = write(
        dir.path(),
        "suite.toml",
        r#"
[[class]]
label = "tiny"
family = "random"
n = 30
eta = 0.1
alpha = 0.2
instances = 10
seed = 5
models = ["cpfc", "dec-h1"]
time_limit = 30.0
"#,
    );
    let csv = dir.path().join("out.csv");
    let o = sipdec(&["bench", "--suite", &suite, "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row[col("instances")], "10");
        assert_eq!(row[col("solved_pct")].parse::<f64>().unwrap(), 100.0);
        assert!(row[col("mean_solutions")].parse::<f64>().unwrap() >= 1.0);
    }
    assert_eq!(fs::read_to_string(csv.with_extension("jsonl")).unwrap().lines().count(), 20);
}
