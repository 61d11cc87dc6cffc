mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::spec_path;

fn matchperf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matchperf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![reader.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(
        reader
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect()),
    );
    rows
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn check_reports_tightest_set() {
    let o = matchperf(&["check", p(&spec_path("n_graph.toml"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "Stable; min Δ = 0.25 at {2,A}");
}

#[test]
fn check_sweeps_every_grid_point() {
    let o = matchperf(&["check", p(&spec_path("path.toml"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 19);
    assert!(
        out.starts_with("rho = 0.05: Stable; min Δ = 0.00625 at {1,E}"),
        "{out}"
    );
}

#[test]
fn unstable_model_fails_check_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("unstable.toml");
    let text = fs::read_to_string(spec_path("n_graph.toml"))
        .unwrap()
        .replace("A = 0.25", "A = 0.6")
        .replace("B = 0.75", "B = 0.4");
    fs::write(&spec, text).unwrap();

    let o = matchperf(&["check", p(&spec)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).starts_with("Unstable; Δ = -0.1 at {2,A}"),
        "{}",
        stdout(&o)
    );

    let o = matchperf(&["solve", p(&spec), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("{2,A}"));
    assert!(!dir.path().join("report.csv").exists());

    // simulation still runs, with an advisory
    let o = matchperf(&[
        "simulate",
        p(&spec),
        "--slots",
        "20000",
        "--warmup",
        "0",
        "--reps",
        "2",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn solve_single_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = matchperf(&[
        "solve",
        p(&spec_path("single_pair.toml")),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("report.csv"));
    assert_eq!(rows[0], ["metric", "class", "value"]);
    assert!(rows.contains(&vec!["pi_empty".into(), "".into(), "1".into()]));
    let waiting: Vec<_> = rows
        .iter()
        .filter(|r| r[0] == "waiting_probability")
        .collect();
    assert_eq!(waiting.len(), 4);
    assert!(waiting.iter().all(|r| r[2] == "0"));
    let pi = csv_rows(&dir.path().join("pi.csv"));
    assert_eq!(
        pi,
        vec![vec!["members", "pi", "delta"], vec!["{}", "1", ""]]
    );
}

#[test]
fn solve_n_graph_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = matchperf(&[
        "solve",
        p(&spec_path("n_graph.toml")),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(!text.contains('\r'));
    for line in [
        "waiting_probability,2,0.5",
        "waiting_probability,A,0.666666666667",
        "mean_wait,2,1",
        "transition_probability,equal/pm,0.0416666666667",
        "transition_probability,equal/equal,0.583333333333",
    ] {
        assert!(text.lines().any(|l| l == line), "missing {line}");
    }
    let pi = csv_rows(&dir.path().join("pi.csv"));
    assert_eq!(pi[2], ["{2,A}", "0.333333333333", "0.25"]);
}

#[test]
fn parametric_spec_needs_a_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = matchperf(&["solve", p(&spec_path("path.toml")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--param"));
    let o = matchperf(&[
        "solve",
        p(&spec_path("path.toml")),
        "--param",
        "0.5",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let pi = csv_rows(&dir.path().join("pi.csv"));
    assert_eq!(pi.len(), 44);
}

#[test]
fn malformed_specs_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.toml");
    let text = fs::read_to_string(spec_path("n_graph.toml"))
        .unwrap()
        .replace(r#"["2", "B"]"#, r#"["2", "Z"]"#);
    fs::write(&spec, text).unwrap();
    let o = matchperf(&["check", p(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("line 4") && err.contains("edges") && err.contains("\"Z\""),
        "{err}"
    );

    fs::write(&spec, "customers = [\"1\"\n").unwrap();
    let o = matchperf(&["check", p(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"));

    let o = matchperf(&["check", p(&dir.path().join("missing.toml"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = matchperf(&["solve"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_mirror_symmetric_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = matchperf(&["sweep", p(&spec_path("path.toml")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("model_waiting_probability_customers.csv"));
    assert_eq!(rows[0], ["parameter", "1", "2", "3", "4", "average"]);
    assert_eq!(rows.len(), 20);
    let num = |s: &str| s.parse::<f64>().unwrap();
    for j in 1..=19 {
        let (a, b) = (&rows[j], &rows[20 - j]);
        assert!((num(&a[0]) + num(&b[0]) - 1.0).abs() < 1e-12);
        for i in 1..=4 {
            // customer i at rho is customer 5 - i at 1 - rho
            assert!((num(&a[i]) - num(&b[5 - i])).abs() < 1e-11, "{a:?} {b:?}");
        }
        assert!((num(&a[5]) - num(&b[5])).abs() < 1e-11);
    }
    let servers = csv_rows(&dir.path().join("model_mean_wait_servers.csv"));
    assert_eq!(
        servers[0],
        ["parameter", "A", "B", "C", "D", "E", "average"]
    );
    let transitions = csv_rows(&dir.path().join("model_transition_probabilities.csv"));
    assert_eq!(
        transitions[0],
        [
            "parameter",
            "minus/minus",
            "pm/equal",
            "equal/pm",
            "equal/equal",
            "plus/plus"
        ]
    );
    assert!(!dir
        .path()
        .join("simulation_waiting_probability_customers.csv")
        .exists());
}

#[test]
fn sweep_with_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("short.toml");
    let text = fs::read_to_string(spec_path("path.toml")).unwrap().replace(
        "start = 0.05\nstop = 0.95\nstep = 0.05",
        "grid = [0.25, 0.75]",
    );
    fs::write(&spec, text).unwrap();
    let o = matchperf(&[
        "sweep",
        p(&spec),
        "--with-sim",
        "--slots",
        "20000",
        "--warmup",
        "2000",
        "--reps",
        "2",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = csv_rows(&dir.path().join("model_waiting_probability_servers.csv"));
    let sim = csv_rows(
        &dir.path()
            .join("simulation_waiting_probability_servers.csv"),
    );
    assert_eq!(model[0], sim[0]);
    assert_eq!(sim.len(), 3);
    for (m, s) in model[1..].iter().zip(&sim[1..]) {
        for (a, b) in m.iter().zip(s).skip(1) {
            let (a, b) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = matchperf(&[
            "simulate",
            p(&spec_path("n_graph.toml")),
            "--seed",
            seed,
            "--slots",
            "30000",
            "--warmup",
            "1000",
            "--reps",
            "3",
            "--out",
            p(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("sim_report.csv")).unwrap()
    };
    let a = run("a", "9");
    assert_eq!(a, run("b", "9"));
    assert_ne!(a, run("c", "10"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("metric,class,mean,stddev\n"));
    assert!(text.contains("waiting_probability,1,0,0\n"));
}

#[test]
fn compare_passes_on_stable_models() {
    let o = matchperf(&[
        "compare",
        p(&spec_path("n_graph.toml")),
        "--slots",
        "200000",
        "--warmup",
        "10000",
        "--reps",
        "8",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().next().unwrap().contains("sim_stddev"));
    assert!(out.contains("return_time"));
}

#[test]
fn canonical_form_reparses() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["n_graph.toml", "path.toml", "single_pair.toml"] {
        let o = matchperf(&["canonical", p(&spec_path(name))]);
        assert_eq!(o.status.code(), Some(0));
        let copy = dir.path().join(name);
        fs::write(&copy, stdout(&o)).unwrap();
        let again = matchperf(&["canonical", p(&copy)]);
        assert_eq!(stdout(&o), stdout(&again));

        let original = matchperf(&[
            "solve",
            p(&spec_path(name)),
            "--param",
            "0.4",
            "--out",
            p(&dir.path().join("x")),
        ]);
        let reparsed = matchperf(&[
            "solve",
            p(&copy),
            "--param",
            "0.4",
            "--out",
            p(&dir.path().join("y")),
        ]);
        assert_eq!(original.status.code(), reparsed.status.code());
        assert_eq!(
            fs::read(dir.path().join("x/report.csv")).unwrap(),
            fs::read(dir.path().join("y/report.csv")).unwrap()
        );
    }
}
