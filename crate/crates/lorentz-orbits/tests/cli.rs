//! Black-box tests of the binary: exit codes, stderr error JSON,
//! output artifacts and determinism.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lorentz-orbits"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn kepler_scenario() -> String {
    format!(
        r#"{{
          "constants": {{"c": 10.0, "eps0": 0.07957747154594767, "m": 1.0, "q": 1.0}},
          "model": {{"type": "kepler", "period": {}}},
          "seeds": [{{"type": "kfold", "k": 1}}, {{"type": "kfold", "k": 2}}],
          "simulate": {{"x0": [1.0, 0.0, 0.0], "p0": [0.0, 1.0, 0.0], "steps": 2000}}
        }}"#,
        2.0 * PI
    )
}

fn stderr_json(output: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&output.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| {
        panic!("stderr is not valid JSON ({e}): {text}");
    })
}

#[test]
fn missing_config_is_a_config_error() {
    let output = bin().arg("simulate").output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    let err = stderr_json(&output);
    assert_eq!(err["error"]["code"], 3);
}

#[test]
fn unknown_key_is_rejected_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"type": "kepler", "period": 1.0}, "typo_key": 1}"#,
    );
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_json(&output)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("typo_key"));
}

#[test]
fn superluminal_source_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
          "constants": {"c": 1.0, "eps0": 0.07957747154594767, "m": 1.0, "q": 1.0},
          "model": {"type": "lienard-wiechert", "period": 6.283185307179586,
                    "sources": [{"charge": -1.0,
                                 "cos_coefficients": [[2.0, 0.0, 0.0]],
                                 "sin_coefficients": [[0.0, 2.0, 0.0]]}]},
          "simulate": {"x0": [5.0, 0.0, 0.0]}
        }"#,
    );
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_json(&output)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("superluminal source"));
}

#[test]
fn zero_field_rest_particle_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
          "model": {"type": "builtin:zero-field", "period": 1.0},
          "simulate": {"x0": [0.25, -1.5, 3.0], "steps": 100}
        }"#,
    );
    let out = dir.path().join("out");
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), 0.25);
        assert_eq!(cols[2].parse::<f64>().unwrap(), -1.5);
        assert_eq!(cols[3].parse::<f64>().unwrap(), 3.0);
    }
    assert!(out.join("config.resolved.json").exists());
}

#[test]
fn find_orbits_is_deterministic_and_lists_radii() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &kepler_scenario());
    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("out{run}"));
        let output = bin()
            .args(["find-orbits", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(
            output.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
        let mut report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("orbits.json")).unwrap())
                .unwrap();
        let orbits = report["orbits"].as_array().unwrap();
        assert_eq!(orbits.len(), 2);
        let r1 = orbits[0]["mean_radius"].as_f64().unwrap();
        let r2 = orbits[1]["mean_radius"].as_f64().unwrap();
        assert!(r1.max(r2) > r1.min(r2), "radii not distinct: {r1}, {r2}");
        assert!(out.join("orbit_00.csv").exists() && out.join("orbit_01.csv").exists());
        report.as_object_mut().unwrap().remove("wall_time_ms");
        reports.push(serde_json::to_string(&report).unwrap());
    }
    assert_eq!(reports[0], reports[1], "summaries differ between identical runs");
}

#[test]
fn find_orbits_without_seeds_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"type": "kepler", "period": 6.283185307179586}}"#,
    );
    let output = bin()
        .args(["find-orbits", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_json(&output)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("no seeds"));
}

#[test]
fn check_assumptions_repulsive_exits_4_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
          "constants": {"c": 10.0, "eps0": 0.07957747154594767, "m": 1.0, "q": 1.0},
          "model": {"type": "lienard-wiechert", "period": 6.283185307179586,
                    "sources": [{"charge": 1.0}]}
        }"#,
    );
    let out = dir.path().join("out");
    let output = bin()
        .args(["check-assumptions", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("assumptions.json")).unwrap())
            .unwrap();
    assert!(!report["all_pass"].as_bool().unwrap());
}

#[test]
fn fields_probe_matches_coulomb_on_a_ray() {
    let dir = tempfile::tempdir().unwrap();
    let points: Vec<String> = (1..=8)
        .map(|i| format!("[{}.0, 0.0, 0.0]", i))
        .collect();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{
              "constants": {{"c": 10.0, "eps0": 0.07957747154594767, "m": 1.0, "q": 1.0}},
              "model": {{"type": "lienard-wiechert", "period": 6.283185307179586,
                        "sources": [{{"charge": -1.0}}]}},
              "probe": {{"times": [0.0], "points": [{}]}}
            }}"#,
            points.join(", ")
        ),
    );
    let out = dir.path().join("out");
    let output = bin()
        .args(["fields-probe", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(out.join("fields.csv")).unwrap();
    for (i, line) in csv.lines().skip(1).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let r = (i + 1) as f64;
        let ex = cols[9].parse::<f64>().unwrap();
        let ey = cols[10].parse::<f64>().unwrap();
        let ez = cols[11].parse::<f64>().unwrap();
        let e_norm = (ex * ex + ey * ey + ez * ez).sqrt();
        let expected = 1.0 / (r * r);
        assert!(
            ((e_norm - expected) / expected).abs() <= 1e-10,
            "|E| = {e_norm} at r = {r}, expected {expected}"
        );
    }
}
