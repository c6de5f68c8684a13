mod common;

use std::fs;

use common::{hourly_feed, run, snapshot, stderr};

fn csv_rows(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

#[test]
fn simulate_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "seed = 1\n[simulate]\nn = 30\nreplicates = 3\ngrid_points = 40\ntruncation = 40\n",
    )
    .unwrap();
    let out = run(
        &["simulate", "--config", "run.toml", "--out", "a"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let files = snapshot(&dir.path().join("a"));
    assert_eq!(files.len(), 6);
    for label in ["0.0000", "0.3333", "0.6667"] {
        let csv = String::from_utf8(files[&format!("mc_alpha{label}.csv")].clone()).unwrap();
        assert!(csv.starts_with("# seed=1 config_hash="));
        let rows = csv_rows(&csv);
        assert_eq!(rows.iter().filter(|r| r.contains(",FLC,")).count(), 3);
        assert_eq!(rows.iter().filter(|r| r.contains(",FLL,")).count(), 3);
        let summary: serde_json::Value =
            serde_json::from_slice(&files[&format!("summary_alpha{label}.json")]).unwrap();
        assert_eq!(summary["seed"], 1);
        assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(summary["estimators"].as_array().unwrap().len(), 2);
    }

    // reruns, other thread counts and another output directory agree byte for byte
    let again = run(
        &[
            "simulate",
            "--config",
            "run.toml",
            "--out",
            "b",
            "--threads",
            "1",
        ],
        dir.path(),
    );
    assert!(again.status.success());
    assert_eq!(files, snapshot(&dir.path().join("b")));

    // a different seed changes the stamp and the draws
    let other = run(
        &[
            "simulate", "--config", "run.toml", "--out", "c", "--seed", "2",
        ],
        dir.path(),
    );
    assert!(other.status.success());
    let c = snapshot(&dir.path().join("c"));
    assert!(String::from_utf8_lossy(&c["mc_alpha0.0000.csv"]).starts_with("# seed=2 "));
    assert_ne!(files["mc_alpha0.0000.csv"], c["mc_alpha0.0000.csv"]);
}

#[test]
fn invalid_configs_fail_before_running() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("typo.toml", "[simulate]\nreplicate = 3\n"),
        ("alpha.toml", "[simulate]\nalphas = [1.5]\n"),
        ("kernel.toml", "[flc]\nkernel = \"gaussian\"\n"),
        ("syntax.toml", "seed = \n"),
    ] {
        fs::write(dir.path().join(name), text).unwrap();
        let out = run(&["simulate", "--config", name, "--out", "o"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}: {}", stderr(&out));
        assert!(stderr(&out).contains("config error"));
    }
    assert!(!dir.path().join("o").exists());
    let missing = run(&["forecast", "--out", "o"], dir.path());
    assert!(!missing.status.success());
    assert!(stderr(&missing).contains("forecast.input"));
}

fn forecast_config(dir: &std::path::Path, feed: &str, window: usize) {
    fs::write(dir.join("load.csv"), feed).unwrap();
    fs::write(
        dir.join("run.toml"),
        format!(
            "[forecast]\ninput = \"load.csv\"\nwindow = {window}\ncv_refresh = 7\n\
             [flc]\nr_d = [1, 2]\n[fll]\nr_d = [1, 2]\nr_beta = [1, 2]\n"
        ),
    )
    .unwrap();
}

#[test]
fn forecast_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    forecast_config(dir.path(), &hourly_feed(60, &[]), 40);
    let out = run(
        &["forecast", "--config", "run.toml", "--out", "a"],
        dir.path(),
    );
    let log = stderr(&out);
    assert!(out.status.success(), "{log}");
    // 60 clean days give 59 consecutive pairs
    assert!(log.contains("T=59 W=40 T_out=19 "), "{log}");
    let files = snapshot(&dir.path().join("a"));
    let forecasts = String::from_utf8(files["forecasts.csv"].clone()).unwrap();
    assert_eq!(csv_rows(&forecasts).len(), 19);
    let gw: serde_json::Value = serde_json::from_slice(&files["gw.json"]).unwrap();
    assert_eq!(gw["t_out"], 19);
    assert_eq!(gw["gw"]["degrees_of_freedom"], 2);

    let again = run(
        &[
            "forecast",
            "--config",
            "run.toml",
            "--out",
            "b",
            "--threads",
            "3",
        ],
        dir.path(),
    );
    assert!(again.status.success());
    assert_eq!(files, snapshot(&dir.path().join("b")));
}

#[test]
fn forecast_reports_dropped_days() {
    let dir = tempfile::tempdir().unwrap();
    forecast_config(dir.path(), &hourly_feed(60, &[(20, 2)]), 30);
    let out = run(
        &["forecast", "--config", "run.toml", "--out", "a"],
        dir.path(),
    );
    let log = stderr(&out);
    assert!(out.status.success(), "{log}");
    // day 20 is lost, and with it the pairs (19, 20) and (20, 21)
    assert!(log.contains("dropped_days=1"), "{log}");
    assert!(log.contains("T=57 W=30 T_out=27 "), "{log}");
}

#[test]
fn forecast_window_too_large() {
    let dir = tempfile::tempdir().unwrap();
    forecast_config(dir.path(), &hourly_feed(20, &[]), 30);
    let out = run(
        &["forecast", "--config", "run.toml", "--out", "a"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("usable"));
}

fn write_sample(dir: &std::path::Path, responses: impl Fn(usize) -> f64) {
    let mut text = String::from("response");
    for k in 1..=12 {
        text.push_str(&format!(",{}", k as f64 / 13.0));
    }
    text.push('\n');
    for i in 0..25 {
        text.push_str(&responses(i).to_string());
        for k in 1..=12 {
            let v =
                ((i * 37 + k * 11) % 17) as f64 / 17.0 + (i as f64 * 0.3).sin() * k as f64 / 12.0;
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    fs::write(dir.join("sample.csv"), text).unwrap();
}

#[test]
fn cv_tables_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    write_sample(dir.path(), |i| (i as f64 * 0.3).sin());
    fs::write(
        dir.path().join("run.toml"),
        "[cv]\ninput = \"sample.csv\"\n[fll]\nr_d = [1, 2, 3]\nr_beta = [1, 2]\n\
         bandwidths = { kind = \"distance_quantiles\", values = [0.25, 0.5, 0.75, 1.0] }\n",
    )
    .unwrap();
    let out = run(&["cv", "--config", "run.toml", "--out", "a"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let files = snapshot(&dir.path().join("a"));
    let fll = String::from_utf8(files["cv_table_fll.csv"].clone()).unwrap();
    assert_eq!(csv_rows(&fll).len(), 4 * 3 * 2);
    let flc = String::from_utf8(files["cv_table_flc.csv"].clone()).unwrap();
    assert_eq!(csv_rows(&flc).len(), 20 * 6);
    let sel: serde_json::Value = serde_json::from_slice(&files["cv_selected.json"]).unwrap();
    assert_eq!(sel["selected"].as_array().unwrap().len(), 2);
    assert_eq!(sel["selected"][1]["config"]["method"], "fll");
}

#[test]
fn cv_constant_responses_score_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_sample(dir.path(), |_| 2.0);
    fs::write(
        dir.path().join("run.toml"),
        "[cv]\ninput = \"sample.csv\"\nmethods = [\"flc\"]\n",
    )
    .unwrap();
    let out = run(&["cv", "--config", "run.toml", "--out", "a"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let files = snapshot(&dir.path().join("a"));
    let sel: serde_json::Value = serde_json::from_slice(&files["cv_selected.json"]).unwrap();
    assert_eq!(sel["selected"][0]["cv_score"], 0.0);
    let table = String::from_utf8(files["cv_table_flc.csv"].clone()).unwrap();
    assert!(csv_rows(&table).iter().any(|r| r.ends_with(",0,0")));
}

#[test]
fn ratecheck_entries_per_size() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "seed = 3\n[simulate]\ngrid_points = 30\ntruncation = 30\n\
         [ratecheck]\nn = [20, 40, 80]\nreplicates = 4\nmethods = [\"fll\"]\n",
    )
    .unwrap();
    let out = run(
        &["ratecheck", "--config", "run.toml", "--out", "a"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let files = snapshot(&dir.path().join("a"));
    let report: serde_json::Value =
        serde_json::from_slice(&files["ratecheck_alpha0.0000.json"]).unwrap();
    let r = &report["reports"][0];
    assert_eq!(r["n"].as_array().unwrap().len(), 3);
    assert_eq!(r["median_mspe"].as_array().unwrap().len(), 3);
    assert!(r["slope"].is_f64());
    let again = run(
        &["ratecheck", "--config", "run.toml", "--out", "b"],
        dir.path(),
    );
    assert!(again.status.success());
    assert_eq!(files, snapshot(&dir.path().join("b")));
}

#[test]
fn diagnose_simulated_sample() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "[simulate]\nn = 60\ngrid_points = 30\ntruncation = 30\n[diagnose]\nradii = 10\n",
    )
    .unwrap();
    let out = run(
        &["diagnose", "--config", "run.toml", "--out", "a"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let files = snapshot(&dir.path().join("a"));
    let profile = String::from_utf8(files["ball_profile.csv"].clone()).unwrap();
    let rows = csv_rows(&profile);
    assert_eq!(rows.len(), 10);
    let fractions: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*fractions.last().unwrap(), 1.0);
    let q: serde_json::Value = serde_json::from_slice(&files["quantiles.json"]).unwrap();
    assert_eq!(q["quantiles"].as_array().unwrap().len(), 20);
}
