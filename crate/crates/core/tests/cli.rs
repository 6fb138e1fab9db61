//! The `kelly-game` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kelly-game"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn equilibrium_on_the_default_market() {
    let v = json_stdout(&run(&["equilibrium", "--json"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "equilibrium");
    let k = v["kelly"][0].as_f64().unwrap();
    assert!((k - 0.5).abs() < 1e-12);
    assert_eq!(v["saddle_report"]["passed"], true);
    let text = run(&["equilibrium"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("saddle check:          pass"));
}

#[test]
fn equilibrium_two_asset_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "equilibrium",
        "--scenario",
        fixture("two_asset.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("equilibrium.json")).unwrap(),
    )
    .unwrap();
    let k: Vec<f64> = v["kelly"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(
        (k[0] - 0.5556).abs() < 1e-3 && (k[1] - 0.7407).abs() < 1e-3,
        "{k:?}"
    );
    assert_eq!(v["inputs"]["market"]["r"], 0.02);
}

#[test]
fn best_response_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "best-response",
        "--range",
        "0,1",
        "--step",
        "0.25",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("best_response.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "c,b_kind,c_star_of_b");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].contains("unbounded_above"));
    assert!(lines[3].contains("indifferent"));
    assert!(lines[5].contains("unbounded_below"));
    let last: Vec<&str> = lines[5].split(',').collect();
    assert_eq!(last[2].parse::<f64>().unwrap(), 0.75);
}

#[test]
fn best_response_rejects_bad_ranges_and_many_assets() {
    assert_eq!(code(&run(&["best-response", "--range", "1,2"])), 2);
    assert_eq!(code(&run(&["best-response", "--range", "0"])), 2);
    assert_eq!(code(&run(&["best-response", "--step", "-1"])), 2);
    let two = fixture("two_asset.json");
    assert_eq!(
        code(&run(&[
            "best-response",
            "--scenario",
            two.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn simulate_single_play() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--b",
        "0.5",
        "--c",
        "1",
        "-T",
        "300",
        "--steps",
        "300",
        "--seed",
        "2024",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("sample_play.csv")).unwrap();
    assert_eq!(csv.lines().count(), 302);
    assert!(csv.starts_with("t,v1,v2,ratio\n"));
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(first, vec![0.0, 1.0, 1.0, 1.0]);
    assert!(dir.path().join("summary.json").exists());
    assert_eq!(String::from_utf8_lossy(&out.stdout), csv);
}

#[test]
fn simulate_estimates_against_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--c",
        "1",
        "--b",
        "kelly",
        "-T",
        "100",
        "--steps",
        "2",
        "--paths",
        "20000",
        "--at",
        "50,100",
        "--json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let v = json_stdout(&out);
    let est = v["estimates"].as_array().unwrap();
    assert_eq!(est.len(), 2);
    for e in est {
        let w = &e["win_probability"];
        let gap = (w["estimate"].as_f64().unwrap() - w["reference"].as_f64().unwrap()).abs();
        assert!(gap <= 4.0 * w["std_error"].as_f64().unwrap(), "{e}");
    }
    let csv = std::fs::read_to_string(dir.path().join("mean_log_wealth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("estimates.json").exists());
}

#[test]
fn simulate_needs_a_second_player_and_grid_times() {
    assert_eq!(code(&run(&["simulate", "--b", "0.5"])), 2);
    assert_eq!(
        code(&run(&[
            "simulate", "--c", "1", "--paths", "10", "--at", "0.3", "--steps", "4"
        ])),
        2
    );
    assert_eq!(code(&run(&["simulate", "--c", "1,2"])), 2);
}

#[test]
fn phi_game_default_is_half() {
    let v = json_stdout(&run(&[
        "phi-game",
        "--t",
        "10",
        "--samples",
        "50000",
        "--seed",
        "3",
        "--json",
    ]));
    let est = v["estimate"].as_f64().unwrap();
    let se = v["std_error"].as_f64().unwrap();
    assert_eq!(v["value_reference"], 0.5);
    assert!((est - 0.5).abs() <= 4.0 * se);
}

#[test]
fn phi_game_usage_errors() {
    assert_eq!(code(&run(&["phi-game", "--phi", "cube"])), 2);
    assert_eq!(code(&run(&["phi-game", "--w1", "point:3"])), 2);
    assert_eq!(
        code(&run(&["phi-game", "--w2", "point:0", "--samples", "10"])),
        2
    );
}

#[test]
fn hjb_check_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "hjb-check",
        "--constant-j",
        "--json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let v = json_stdout(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["constant_candidate_ok"], true);
    let r = v["residual_b0.5_c1"].as_f64().unwrap();
    assert!((r - 0.1201).abs() < 1e-4);
    assert!(dir.path().join("hjb_report.json").exists());
}

#[test]
fn hjb_check_exit_codes() {
    let two = fixture("two_asset.json");
    assert_eq!(
        code(&run(&["hjb-check", "--scenario", two.to_str().unwrap()])),
        2
    );
    assert_eq!(code(&run(&["hjb-check", "--grid-b", "0,1"])), 2);
    // a tolerance too tight for the stencil fails the check
    assert_eq!(code(&run(&["hjb-check", "--tol", "1e-14"])), 4);
}

#[test]
fn io_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(
        code(&run(&[
            "equilibrium",
            "--out",
            blocker.join("sub").to_str().unwrap()
        ])),
        3
    );
    assert_eq!(
        code(&run(&[
            "equilibrium",
            "--scenario",
            dir.path().join("missing.json").to_str().unwrap()
        ])),
        3
    );
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\"r\": 0.0, \"mu\": [0.1], \"sigma\": [-1.0], \"rho\": [[1.0]]}",
    )
    .unwrap();
    let out = run(&["equilibrium", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma"));
    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn scenario_fixture_drives_simulate() {
    let shannon = fixture("shannon.json");
    let out = run(&[
        "simulate",
        "--scenario",
        shannon.to_str().unwrap(),
        "--json",
    ]);
    let v = json_stdout(&out);
    assert_eq!(v["command"], "simulate");
    let identity = fixture("identity.json");
    let v = json_stdout(&run(&[
        "equilibrium",
        "--scenario",
        identity.to_str().unwrap(),
        "--json",
    ]));
    // Kelly = mu - r with unit covariance
    let k: Vec<f64> = v["kelly"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((k[0] - 0.1).abs() < 1e-12 && (k[1] - 0.2).abs() < 1e-12);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let d = dir.path().to_str().unwrap();
        assert_eq!(
            code(&run(&[
                "simulate", "--c", "1", "-T", "10", "--steps", "10", "--seed", "9", "--out", d
            ])),
            0
        );
        assert_eq!(
            code(&run(&[
                "simulate", "--c", "1", "--paths", "500", "--seed", "9", "--out", d
            ])),
            0
        );
        assert_eq!(
            code(&run(&[
                "phi-game",
                "--samples",
                "1000",
                "--seed",
                "9",
                "--out",
                d
            ])),
            0
        );
    }
    for name in [
        "sample_play.csv",
        "summary.json",
        "estimates.json",
        "mean_log_wealth.csv",
        "phi_game.json",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}
