use std::path::Path;
use std::process::{Command, Output};

fn syncland(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syncland")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn gen(dir: &Path, name: &str, spec: &str) -> String {
    let spec_path = write(dir, &format!("{name}.json"), spec);
    let out = dir.join(format!("{name}.txt")).to_str().unwrap().to_string();
    let o = syncland(&["gen", &spec_path, "-o", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_is_deterministic_and_matches_known_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a", r#"{"family": "gaussian_z2", "n": 12, "sigma": 0.8, "seed": 5}"#);
    let b = gen(dir.path(), "b", r#"{"family": "gaussian_z2", "n": 12, "sigma": 0.8, "seed": 5}"#);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let clean = gen(dir.path(), "clean", r#"{"family": "gaussian_z2", "n": 3, "sigma": 0.0, "ground_truth": "balanced"}"#);
    assert_eq!(std::fs::read_to_string(clean).unwrap(), "3\n1 2 -1.0\n1 3 -1.0\n2 3 1.0\n");

    let k5 = gen(dir.path(), "k5", r#"{"family": "circulant_knn", "n": 5, "k": 2}"#);
    let text = std::fs::read_to_string(k5).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().skip(1).all(|l| l.ends_with(" 1.0")));
}

#[test]
fn malformed_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.json", r#"{"family": "gaussian_z2", "n": 12}"#);
    let o = syncland(&["gen", &spec, "-o", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));
}

#[test]
fn certify_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("50\n");
    for i in 1..=50 {
        for j in (i + 1)..=50 {
            text.push_str(&format!("{i} {j} 1\n"));
        }
    }
    let k50 = write(dir.path(), "k50.txt", &text);
    let o = syncland(&["certify", &k50, "--rank", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&o);
    assert!((rep["condition_number"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(rep["verdict"], "benign_for_r");

    let half = gen(dir.path(), "half", r#"{"family": "circulant_knn", "n": 40, "k": 10}"#);
    let o = syncland(&["certify", &half, "--rank", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["verdict"], "psd_certified_only");

    let o = syncland(&["certify", dir.path().join("missing.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn degree_preconditioner_changes_the_ratio() {
    let dir = tempfile::tempdir().unwrap();
    // A weighted star with a heavy edge between two leaves.
    let m = write(dir.path(), "star.txt", "5\n1 2 1\n1 3 1\n1 4 1\n1 5 1\n2 3 4\n");
    let o = syncland(&["certify", &m, "--preconditioner", "both"]);
    let reps = json(&o);
    let reps = reps.as_array().unwrap();
    assert_eq!(reps[0]["preconditioner"], "identity");
    assert_eq!(reps[1]["preconditioner"], "degree");
    let (a, b) = (reps[0]["condition_number"].as_f64().unwrap(), reps[1]["condition_number"].as_f64().unwrap());
    assert!((a - b).abs() > 1e-3, "{a} {b}");
}

#[test]
fn certified_instance_is_recovered_and_twisted_start_is_not() {
    let dir = tempfile::tempdir().unwrap();
    let dense = gen(dir.path(), "dense", r#"{"family": "circulant_knn", "n": 40, "k": 16}"#);
    let o = syncland(&["solve", &dense, "--z", "ones", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["recovered"], true);

    let half = gen(dir.path(), "half", r#"{"family": "circulant_knn", "n": 40, "k": 10}"#);
    let o = syncland(&["solve", &half, "--z", "ones", "--init", "twisted:1"]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&o);
    assert_eq!(rep["recovered"], false);
    assert_eq!(rep["second_order_critical"], true);

    let again = syncland(&["solve", &half, "--z", "ones", "--seed", "3"]);
    assert_eq!(again.stdout, syncland(&["solve", &half, "--z", "ones", "--seed", "3"]).stdout);
}

#[test]
fn kuramoto_runs_and_dumps_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let k20 = gen(dir.path(), "k20", r#"{"family": "circulant_knn", "n": 21, "k": 10}"#);
    let traj = dir.path().join("traj.csv");
    let o = syncland(&["kuramoto", &k20, "--seed", "1", "--trajectory", traj.to_str().unwrap(), "--stride", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["classification"], "synchronized");
    let text = std::fs::read_to_string(traj).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("t,theta_1,") && header.ends_with(",theta_21"));
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 22));

    let half = gen(dir.path(), "half", r#"{"family": "circulant_knn", "n": 60, "k": 15}"#);
    let o = syncland(&["kuramoto", &half, "--init", "twisted:1"]);
    assert_eq!(json(&o)["classification"], "stable_nonsync");
}

#[test]
fn circulant_table_lists_every_frequency() {
    let o = syncland(&["circulant", "-n", "12", "-k", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut blocks = text.split("\n\n");
    let table = blocks.next().unwrap();
    assert_eq!(table.lines().next().unwrap(), "m,h_a,h_l,h_ltilde");
    assert_eq!(table.lines().count(), 1 + 7);
    assert!(table.lines().nth(1).unwrap().starts_with("0,6.0,0.0,"));
    let summary = blocks.next().unwrap();
    assert!(summary.starts_with("n,k,condition_number"));

    let o = syncland(&["circulant", "-n", "12", "-k", "3", "--format", "json"]);
    assert_eq!(json(&o)["stability"]["k"], 3);
}

#[test]
fn phase_output_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(
        dir.path(),
        "grid.toml",
        "trials = 4\n[[sweep]]\nfamily = \"gaussian_z2\"\nn = 30\nmargin = [0.4, 2.5]\n",
    );
    let run = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let o = syncland(&["phase", &grid, "-o", out.to_str().unwrap(), "--seed", "99", "--jobs", jobs, "--omit-timing"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "2"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("aggregate,")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.starts_with("trial,")).count(), 8);

    let o = syncland(&["phase", &grid, "--seed", "99", "--format", "json", "--omit-timing"]);
    assert_eq!(json(&o)["records"].as_array().unwrap().len(), 8);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(syncland(&["nope"]).status.code(), Some(1));
    assert_eq!(syncland(&["circulant", "-n", "4", "-k", "2"]).status.code(), Some(1));
    assert_eq!(syncland(&["--help"]).status.code(), Some(0));
}
