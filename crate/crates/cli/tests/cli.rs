use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use mapgroups::atlas::Atlas;
use mapgroups::io::{write_json, CurveFile};
use mapgroups::ladder::TimeSampledCurve;
use mapgroups::lie::{random_algebra_section, MatrixGroup};
use mapgroups::probe::suite_rng;
use mapgroups::sobolev::WeightConvention;
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapgroups")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn report(out: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{name}.json"))).unwrap()).unwrap()
}

fn check<'a>(r: &'a Value, id: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["id"] == id).unwrap_or_else(|| panic!("no check {id}"))
}

fn config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_axioms_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify-axioms"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path(), "verify-axioms");
    assert_eq!(r["passed"], true);
    for id in ["axiom-PF", "axiom-PB", "axiom-GL", "axiom-MU"] {
        assert_eq!(check(&r, id)["passed"], true, "{id}");
    }
    assert_eq!(r["weight_exponent_convention"], "paper-s/2");
}

#[test]
fn zero_tolerance_fails_the_named_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"tolerances": {"axiom-PF": 0.0}}"#);
    let o = run(&["verify-axioms", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("axiom-PF")), "{stdout}");
    assert_eq!(check(&report(dir.path(), "verify-axioms"), "axiom-PF")["passed"], false);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        r#"{"atlas": "klein-bottle"}"#,
        r#"{"tolerances": {"axiom-PF": -1.0}}"#,
        r#"{"tolerances": {"no-such-check": 1.0}}"#,
        r#"{"unknown_field": 1}"#,
        r#"{"grid_factor": 1}"#,
        "not json",
    ] {
        let cfg = config(dir.path(), body);
        let o = run(&["verify-axioms", "--config", &cfg], dir.path());
        assert_eq!(o.status.code(), Some(2), "{body}");
    }
    let o = run(&["verify-axioms", "--config", "/nonexistent/config.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["no-such-command"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["shrink-domain", "--domain", "triangle"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cmd in ["verify-axioms", "group-demo", "norms", "extend", "ladder"] {
        assert_eq!(run(&[cmd, "--seed", "11"], a.path()).status.code(), Some(0), "{cmd}");
        assert_eq!(run(&[cmd, "--seed", "11"], b.path()).status.code(), Some(0), "{cmd}");
        let name = format!("{cmd}.json");
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap(), "{cmd}");
    }
    let c = tempfile::tempdir().unwrap();
    run(&["norms", "--seed", "12"], c.path());
    assert_ne!(
        std::fs::read(a.path().join("norms.json")).unwrap(),
        std::fs::read(c.path().join("norms.json")).unwrap()
    );
}

#[test]
fn group_demo_on_every_group() {
    let dir = tempfile::tempdir().unwrap();
    for g in ["SO3", "SU2", "UT2"] {
        let cfg = config(dir.path(), &format!(r#"{{"group": "{g}", "modes": 16}}"#));
        let o = run(&["group-demo", "--config", &cfg], dir.path());
        assert_eq!(o.status.code(), Some(0), "{g}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(dir.path().join("group_section.json").exists());
    }
}

fn write_curve(path: &Path, constant: bool) {
    let atlas = Arc::new(Atlas::circle2(65).unwrap());
    let mut rng = suite_rng(3, "cli-curve");
    let a = random_algebra_section(atlas.clone(), MatrixGroup::So3, 3, 0.5, &mut rng).unwrap();
    let curve = if constant {
        TimeSampledCurve::constant(MatrixGroup::So3, a).unwrap()
    } else {
        let b = random_algebra_section(atlas, MatrixGroup::So3, 3, 0.5, &mut rng).unwrap();
        TimeSampledCurve::new(MatrixGroup::So3, vec![a, b]).unwrap()
    };
    write_json(path, &CurveFile::from_curve(&curve, WeightConvention::PaperHalf)).unwrap();
}

#[test]
fn evolve_constant_curve_matches_exp() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.json");
    write_curve(&curve, true);
    let o = run(&["evolve", "--curve", curve.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path(), "evolve");
    assert_eq!(check(&r, "evolve-constant")["passed"], true);
    assert!(check(&r, "evolve-constant")["value"].as_f64().unwrap() < 1e-8);
    let eta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("eta1.json")).unwrap()).unwrap();
    assert_eq!(eta["group"], "SO3");
    assert_eq!(eta["atlas"], "circle2");

    write_curve(&curve, false);
    let o = run(&["evolve", "--curve", curve.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(report(dir.path(), "evolve")["checks"].as_array().unwrap().iter().all(|c| c["id"] != "evolve-constant"));
}

#[test]
fn evolve_file_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["evolve", "--curve", "/nonexistent/curve.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"weight_exponent_convention": "paper-s/2", "group": "SO3", "times": [0.0], "samples": []}"#,
    )
    .unwrap();
    let o = run(&["evolve", "--curve", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ladder_critical_orders() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ladder"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path(), "ladder");
    let fits = r["data"]["critical_orders"].as_array().unwrap();
    for (fit, expected) in fits.iter().zip([1.0, 2.0, 3.0]) {
        assert!((fit["estimate"].as_f64().unwrap() - expected).abs() < 0.1, "{fit}");
    }
    let csv = std::fs::read_to_string(dir.path().join("ladder_spectrum_0.csv")).unwrap();
    assert!(csv.starts_with("k_index,sigma\n"));

    let o = run(&["ladder", "--convention", "standard"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path(), "ladder");
    assert_eq!(r["weight_exponent_convention"], "standard-s");
    let est = r["data"]["critical_orders"][0]["estimate"].as_f64().unwrap();
    assert!((est - 0.5).abs() < 0.1);
}

#[test]
fn shrink_every_domain() {
    let dir = tempfile::tempdir().unwrap();
    for d in ["disc", "ellipse", "peanut"] {
        let o = run(&["shrink-domain", "--domain", d], dir.path());
        assert_eq!(o.status.code(), Some(0), "{d}");
        let cert: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("shrink_{d}.json"))).unwrap())
                .unwrap();
        assert!(cert["shrink"]["margin"].as_f64().unwrap() > 0.0);
        assert!(cert["enlarge"]["margin"].as_f64().unwrap() > 0.0);
        assert_eq!(cert["shrink"]["t0"], 0.1);
    }
    let cfg = config(dir.path(), r#"{"t0": 0.0}"#);
    assert_eq!(run(&["shrink-domain", "--config", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn norms_and_extend_on_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["extend"], dir.path()).status.code(), Some(0));
    let data = dir.path().join("extend_data.json");
    let o = run(&["norms", "--field", data.to_str().unwrap(), "--modes", "16"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(dir.path(), "norms")["data"]["kind"], "sampled (quotient norm)");
    let o = run(&["extend", "--field", data.to_str().unwrap(), "--order", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let ext = dir.path().join("extension.json");
    assert_eq!(run(&["extend", "--field", ext.to_str().unwrap()], dir.path()).status.code(), Some(2));
}
