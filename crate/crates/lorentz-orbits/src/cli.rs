//! Command implementations behind the binary: simulate,
//! check-assumptions, find-orbits and fields-probe. Each command takes
//! a parsed `ScenarioConfig`, writes machine-readable artifacts into
//! the output directory, and maps failures onto the exit-code contract
//! (0 ok, 2 collision, 3 config, 4 assumption failure, 5 no orbit).

use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use crate::config::{ConfigError, ScenarioConfig};
use crate::dynamics::{energy, integrate, ParticleState};
use crate::error::DynamicsError;
use crate::fields::check_assumptions;
use crate::orbit::multiplicity_scan;
use crate::vec3::Vec3;

pub const EXIT_OK: i32 = 0;
pub const EXIT_COLLISION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_ASSUMPTION: i32 = 4;
pub const EXIT_NO_ORBIT: i32 = 5;

/// A failure carrying its exit code; the message is emitted as JSON on
/// stderr by the binary.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, kind: "config", message: message.into() }
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind, "code": self.code, "message": self.message}})
            .to_string()
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_CONFIG, kind: "io", message: e.to_string() }
    }
}

fn dynamics_error(e: DynamicsError) -> CliError {
    let code = match e {
        DynamicsError::Collision { .. } => EXIT_COLLISION,
        _ => EXIT_CONFIG,
    };
    CliError { code, kind: "dynamics", message: e.to_string() }
}

/// 17 significant decimal digits: lossless f64 round-trip, diff-friendly.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_resolved_config(config: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.resolved.json"), config.resolved_json())?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Integrates the configured initial state and writes `trajectory.csv`
/// plus `summary.json`.
pub fn cmd_simulate(config: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    let sim = config
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::config("missing \"simulate\" section"))?;
    let model = config.build_model()?;
    write_resolved_config(config, out)?;

    let state0 = ParticleState::new(
        sim.t0,
        Vec3::new(sim.x0[0], sim.x0[1], sim.x0[2]),
        Vec3::new(sim.p0[0], sim.p0[1], sim.p0[2]),
    );
    let t_end = sim.t_end.unwrap_or(sim.t0 + model.period());
    if !t_end.is_finite() || t_end <= sim.t0 {
        return Err(CliError::config("t_end must exceed t0"));
    }
    let start = std::time::Instant::now();
    let states = integrate(model.as_ref(), state0, t_end, sim.steps).map_err(dynamics_error)?;

    let autonomous = model.is_autonomous();
    let constants = *model.constants();
    let mut csv = String::from("t,x,y,z,px,py,pz,speed_ratio,V,H\n");
    let mut min_sep = f64::INFINITY;
    let mut h0 = None;
    let mut max_drift = 0.0f64;
    for s in &states {
        let v = s.velocity(&constants);
        let potential = model
            .scalar_potential(s.t, s.x)
            .map_err(|e| dynamics_error(DynamicsError::Collision { t: s.t, source: e }))?;
        let h_text = if autonomous {
            let h = energy(model.as_ref(), s).map_err(dynamics_error)?;
            let h0 = *h0.get_or_insert(h);
            max_drift = max_drift.max(((h - h0) / h0).abs());
            fmt_float(h)
        } else {
            String::new()
        };
        min_sep = min_sep.min(model.min_separation(s.t, s.x));
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_float(s.t),
            fmt_float(s.x.x),
            fmt_float(s.x.y),
            fmt_float(s.x.z),
            fmt_float(s.p.x),
            fmt_float(s.p.y),
            fmt_float(s.p.z),
            fmt_float(v.norm() / constants.c),
            fmt_float(potential),
            h_text,
        )
        .expect("string write");
    }
    std::fs::write(out.join("trajectory.csv"), csv)?;

    let summary = json!({
        "steps": sim.steps,
        "t0": sim.t0,
        "t_end": t_end,
        "autonomous": autonomous,
        "energy_drift": if autonomous { Some(max_drift) } else { None },
        "min_separation": min_sep,
        "wall_time_ms": start.elapsed().as_millis() as u64,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(())
}

/// Runs the (V)/(AV1)/(AV2) checkers and writes `assumptions.json`.
/// The report is written even on failure; failure maps to exit 4.
pub fn cmd_check_assumptions(config: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    let model = config.build_model()?;
    write_resolved_config(config, out)?;
    let spec = config.assumptions.build();
    let report = check_assumptions(model.as_ref(), &spec);
    let value = serde_json::to_value(&report).map_err(|e| CliError::config(e.to_string()))?;
    write_json(&out.join("assumptions.json"), &value)?;
    if report.all_pass {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_ASSUMPTION,
            kind: "assumptions",
            message: "one or more assumption checks failed; see assumptions.json".into(),
        })
    }
}

/// Runs the multiplicity scan over the configured seeds; writes one CSV
/// per distinct orbit plus a combined `orbits.json`.
pub fn cmd_find_orbits(config: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    if config.seeds.is_empty() {
        return Err(CliError::config("no seeds"));
    }
    let model = config.build_model()?;
    write_resolved_config(config, out)?;
    let seeds = config.seed_specs();
    let opts = config.solver_options();
    let start = std::time::Instant::now();
    let outcome = multiplicity_scan(model.as_ref(), &seeds, &opts);

    let mut entries = Vec::new();
    for (i, orbit) in outcome.orbits.iter().enumerate() {
        let csv_name = format!("orbit_{i:02}.csv");
        let mut csv = String::from("t,x,y,z\n");
        for k in 0..orbit.path.len() {
            let x = orbit.path.node(k);
            writeln!(
                csv,
                "{},{},{},{}",
                fmt_float(orbit.path.node_time(k)),
                fmt_float(x.x),
                fmt_float(x.y),
                fmt_float(x.z),
            )
            .expect("string write");
        }
        std::fs::write(out.join(&csv_name), csv)?;

        let mean_radius = (0..orbit.path.len())
            .map(|k| orbit.path.node(k).norm())
            .sum::<f64>()
            / orbit.path.len() as f64;
        entries.push(json!({
            "csv": csv_name,
            "seed_id": orbit.seed_id,
            "method": orbit.method,
            "converged": orbit.converged,
            "iterations": orbit.iterations,
            "residual_norm": orbit.residual_norm,
            "closure_error": orbit.closure_error,
            "action": {
                "psi": orbit.action.psi,
                "phi": orbit.action.phi,
                "total": orbit.action.total,
            },
            "min_separation": orbit.min_separation,
            "mean_radius": mean_radius,
        }));
    }
    let report = json!({
        "orbits": entries,
        "failures": outcome
            .failures
            .iter()
            .map(|(seed, msg)| json!({"seed_id": seed, "message": msg}))
            .collect::<Vec<_>>(),
        "solver": {
            "tol_shoot": opts.tol_shoot,
            "tol_colloc": opts.tol_colloc,
            "n": opts.n,
            "dedup_tol_factor": opts.dedup_tol_factor,
            "rng_seed": opts.rng_seed,
        },
        "wall_time_ms": start.elapsed().as_millis() as u64,
    });
    write_json(&out.join("orbits.json"), &report)?;

    if outcome.orbits.is_empty() {
        Err(CliError {
            code: EXIT_NO_ORBIT,
            kind: "orbits",
            message: "no seed converged to a periodic orbit; see orbits.json".into(),
        })
    } else {
        Ok(())
    }
}

/// Tabulates V, A, E, B on the configured probe points and writes
/// `fields.csv`. Points inside the collision floor are flagged and
/// left blank instead of emitting garbage.
pub fn cmd_fields_probe(config: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    let probe = config
        .probe
        .as_ref()
        .ok_or_else(|| CliError::config("missing \"probe\" section"))?;
    let model = config.build_model()?;
    write_resolved_config(config, out)?;

    let mut csv =
        String::from("t,x,y,z,flagged,V,Ax,Ay,Az,Ex,Ey,Ez,Bx,By,Bz\n");
    for &t in &probe.times {
        for &p in &probe.points {
            let x = Vec3::new(p[0], p[1], p[2]);
            let blank = ",,,,,,,,,".to_string();
            let (flag, tail) = if model.min_separation(t, x) <= model.collision_floor() {
                (1, blank)
            } else {
                match model.sample(t, x) {
                    Ok(s) => (
                        0,
                        format!(
                            "{},{},{},{},{},{},{},{},{},{}",
                            fmt_float(s.v),
                            fmt_float(s.a.x),
                            fmt_float(s.a.y),
                            fmt_float(s.a.z),
                            fmt_float(s.e.x),
                            fmt_float(s.e.y),
                            fmt_float(s.e.z),
                            fmt_float(s.b.x),
                            fmt_float(s.b.y),
                            fmt_float(s.b.z),
                        ),
                    ),
                    Err(_) => (1, blank),
                }
            };
            writeln!(
                csv,
                "{},{},{},{},{flag},{tail}",
                fmt_float(t),
                fmt_float(x.x),
                fmt_float(x.y),
                fmt_float(x.z),
            )
            .expect("string write");
        }
    }
    std::fs::write(out.join("fields.csv"), csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn kepler_config() -> ScenarioConfig {
        ScenarioConfig::from_json(&format!(
            r#"{{
              "constants": {{"c": 10.0, "eps0": 0.07957747154594767, "m": 1.0, "q": 1.0}},
              "model": {{"type": "kepler", "period": {}}},
              "seeds": [{{"type": "kfold", "k": 1}}],
              "simulate": {{"x0": [1.0, 0.0, 0.0], "p0": [0.0, 1.0, 0.0], "steps": 2000}}
            }}"#,
            2.0 * PI
        ))
        .unwrap()
    }

    #[test]
    fn simulate_writes_csv_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = kepler_config();
        cmd_simulate(&cfg, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert!(csv.starts_with("t,x,y,z,px,py,pz,speed_ratio,V,H\n"));
        assert_eq!(csv.lines().count(), 2002); // header + steps + 1 states
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert!(summary["autonomous"].as_bool().unwrap());
        assert!(summary["energy_drift"].as_f64().unwrap() < 1e-6);
        assert!(dir.path().join("config.resolved.json").exists());
    }

    #[test]
    fn simulate_into_the_singularity_exits_with_collision_code() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = kepler_config();
        // start on the singular point itself
        if let Some(sim) = cfg.simulate.as_mut() {
            sim.x0 = [0.0, 0.0, 0.0];
            sim.p0 = [0.0, 0.0, 0.0];
        }
        let err = cmd_simulate(&cfg, dir.path()).unwrap_err();
        assert_eq!(err.code, EXIT_COLLISION);
    }

    #[test]
    fn find_orbits_reports_the_circular_orbit() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = kepler_config();
        cmd_find_orbits(&cfg, dir.path()).unwrap();
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("orbits.json")).unwrap())
                .unwrap();
        let orbits = report["orbits"].as_array().unwrap();
        assert_eq!(orbits.len(), 1);
        assert!(orbits[0]["residual_norm"].as_f64().unwrap() <= 1e-8);
        assert!(dir.path().join("orbit_00.csv").exists());
    }

    #[test]
    fn find_orbits_without_seeds_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = kepler_config();
        cfg.seeds.clear();
        let err = cmd_find_orbits(&cfg, dir.path()).unwrap_err();
        assert_eq!(err.code, EXIT_CONFIG);
        assert!(err.message.contains("no seeds"));
    }

    #[test]
    fn fields_probe_flags_the_singular_point() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = kepler_config();
        cfg.probe = Some(crate::config::ProbeConfig {
            times: vec![0.0],
            points: vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
        });
        cmd_fields_probe(&cfg, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("fields.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains(",1,")); // flagged, no NaN anywhere
        assert!(!csv.contains("NaN") && !csv.contains("nan"));
    }

    #[test]
    fn check_assumptions_passes_for_forced_kepler() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::from_json(&format!(
            r#"{{
              "model": {{"type": "kepler", "period": {},
                        "forcing": {{"epsilon": 1e-3}}}}
            }}"#,
            2.0 * PI
        ))
        .unwrap();
        cmd_check_assumptions(&cfg, dir.path()).unwrap();
        let report: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("assumptions.json")).unwrap(),
        )
        .unwrap();
        assert!(report["all_pass"].as_bool().unwrap());
    }
}
