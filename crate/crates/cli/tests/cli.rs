use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ddol::bounds::{domd_avg_regret_bound, dwm_a_bound, dwm_i_bound};
use serde_json::Value;

fn ddol(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddol"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn ddol")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const DWM_ARGS: [&str; 14] = [
    "--algo", "dwm-i", "--agents", "1", "--synthetic", "1000,4,0.5,0.05", "--alpha", "0.9", "--experts", "4",
    "--rounds", "1000", "--seed", "7",
];

#[test]
fn repeated_runs_write_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(ddol(&DWM_ARGS, a.path()).status.success());
    assert!(ddol(&DWM_ARGS, b.path()).status.success());
    let ca = fs::read(a.path().join("run_N1.csv")).unwrap();
    let cb = fs::read(b.path().join("run_N1.csv")).unwrap();
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
}

#[test]
fn parallel_flag_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = ["--algo", "drwm", "--agents", "3", "--synthetic", "900,5,0.4,0.1", "--experts", "5", "--seed", "2"];
    assert!(ddol(&base, a.path()).status.success());
    let mut par = base.to_vec();
    par.push("--parallel");
    assert!(ddol(&par, b.path()).status.success());
    assert_eq!(
        fs::read(a.path().join("run_N3.csv")).unwrap(),
        fs::read(b.path().join("run_N3.csv")).unwrap()
    );
}

#[test]
fn sweep_writes_one_csv_per_agent_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = ddol(
        &[
            "--algo", "dogd", "--agents", "1,2,4", "--C", "0.01", "--S", "10000", "--synthetic", "2000,6,0.5,0.05",
            "--rounds", "300", "--emit-bounds",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|f| f.ends_with(".csv") || f == "summary.json")
        .collect();
    files.sort();
    assert_eq!(files, ["run_N1.csv", "run_N2.csv", "run_N4.csv", "summary.json"]);

    let s = summary(dir.path());
    let runs = s["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    for (run, n) in runs.iter().zip([1usize, 2, 4]) {
        // the logged inputs reproduce the reported bound
        let inputs: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("bounds_N{n}.json"))).unwrap()).unwrap();
        let norms: Vec<f64> = inputs["aggregate_norms"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        let r = &run["regret"];
        let bound = domd_avg_regret_bound(
            r["diam_bound"].as_f64().unwrap(),
            r["strong_convexity"].as_f64().unwrap(),
            &norms,
            n,
        );
        assert_eq!(bound, r["avg_regret_bound"].as_f64().unwrap());
        assert_eq!(r["bound_satisfied"], Value::Bool(true));
    }
}

#[test]
fn csv_rows_and_prefix_sums() {
    let dir = tempfile::tempdir().unwrap();
    let out = ddol(
        &["--algo", "doeg", "--agents", "3", "--C", "1", "--S", "50", "--synthetic", "600,4,0.5,0.1", "--rounds", "150"],
        dir.path(),
    );
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(dir.path().join("run_N3.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["round", "agent", "mistake", "cum_mistakes", "loss", "cum_loss"]
    );
    let mut cm = [0u64; 3];
    let mut cl = [0.0f64; 3];
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let i: usize = rec[1].parse().unwrap();
        cm[i] += rec[2].parse::<u64>().unwrap();
        cl[i] += rec[4].parse::<f64>().unwrap();
        assert_eq!(rec[3].parse::<u64>().unwrap(), cm[i]);
        assert_eq!(rec[5].parse::<f64>().unwrap(), cl[i]);
        rows += 1;
    }
    assert_eq!(rows, 150 * 3);
}

#[test]
fn dwm_complete_graph_bounds_are_satisfied() {
    for algo in ["dwm-i", "dwm-a", "wma"] {
        let dir = tempfile::tempdir().unwrap();
        let out = ddol(
            &[
                "--algo", algo, "--agents", "1,2,4", "--synthetic", "4000,8,0.3,0.1", "--experts", "6", "--rounds",
                "800", "--seed", "3", "--emit-bounds",
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let s = summary(dir.path());
        for run in s["runs"].as_array().unwrap() {
            let n = run["n_agents"].as_u64().unwrap() as usize;
            for ok in run["bound_satisfied"].as_array().unwrap() {
                assert_eq!(ok, &Value::Bool(true), "{algo} N={n}");
            }
            let e = &run["experts"];
            let m_star = e["m_star"].as_u64().unwrap();
            assert_eq!(e["dwm_i_bound"].as_f64().unwrap(), dwm_i_bound(m_star, n, 6, 0.9));
            let inputs: Value =
                serde_json::from_str(&fs::read_to_string(dir.path().join(format!("bounds_N{n}.json"))).unwrap())
                    .unwrap();
            let series: Vec<u64> = inputs["m_star_series"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap())
                .collect();
            assert_eq!(e["dwm_a_bound"].as_f64().unwrap(), dwm_a_bound(&series, n, 6, 0.9));
        }
    }
}

#[test]
fn randomized_runs_report_no_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = ddol(&["--algo", "rwm", "--agents", "2", "--synthetic", "400,4,0.5,0.1"], dir.path());
    assert!(out.status.success());
    assert_eq!(summary(dir.path())["runs"][0]["bound_satisfied"], Value::Null);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--algo", "bogus", "--synthetic", "100,2,0.5,0"],
        vec!["--algo", "dwm-i"],
        vec!["--algo", "dogd", "--synthetic", "100,2,0.5,0"],
        vec!["--algo", "dwm-i", "--agents", "2,2", "--synthetic", "100,2,0.5,0"],
        vec!["--algo", "dwm-i", "--agents", "0", "--synthetic", "100,2,0.5,0"],
        vec!["--algo", "dwm-i", "--alpha", "1.5", "--synthetic", "100,2,0.5,0"],
        vec!["--algo", "dwm-i", "--synthetic", "100,2,0.5"],
    ] {
        let out = ddol(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.libsvm");
    fs::write(&bad, "+1 1:1\n-1 2:1 1:3\n").unwrap();
    let out = ddol(&["--algo", "wma", "--data", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let missing = dir.path().join("missing.libsvm");
    let out = ddol(&["--algo", "wma", "--data", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // more rounds than the stream holds
    let out = ddol(&["--algo", "wma", "--synthetic", "50,2,0.5,0.1", "--rounds", "51"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn known_dataset_names_supply_c_and_s() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("cod-rna.txt");
    let mut text = String::new();
    for k in 0..60 {
        let (l, x) = if k % 2 == 0 { ("+1", 0.8) } else { ("-1", -0.6) };
        text.push_str(&format!("{l} 1:{x} 2:{}\n", k as f64 / 60.0));
    }
    fs::write(&data, text).unwrap();
    let out = ddol(&["--algo", "eg", "--agents", "2", "--data", data.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["config"]["C"].as_f64(), Some(1e-2));
    assert_eq!(s["config"]["S"].as_f64(), Some(1e4));
    assert_eq!(s["runs"][0]["rounds"].as_u64(), Some(30));
}
