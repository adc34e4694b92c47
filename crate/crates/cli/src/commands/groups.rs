use std::path::Path;
use std::sync::Arc;

use mapgroups::io::{read_json, CurveFile, GroupSectionFile};
use mapgroups::ladder::{evolve as run_evolve, EvolveOptions};
use mapgroups::lie::{bch_bracket, bch_order2_probe, bracket, exp_section, random_algebra_section, GroupSection};
use mapgroups::probe::suite_rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{save_json, Check, Report};
use crate::CliError;

pub fn group_demo(cfg: &RunConfig) -> Result<Report, CliError> {
    let atlas = Arc::new(cfg.atlas()?);
    let group = cfg.group()?;
    let mut rng = suite_rng(cfg.seed, "group-demo");
    let modes = cfg.modes.min(4);
    let r = 0.25 * group.v_radius();
    let xi = random_algebra_section(atlas.clone(), group, modes, r, &mut rng)?;
    let eta = random_algebra_section(atlas.clone(), group, modes, r, &mut rng)?;
    let zeta = random_algebra_section(atlas.clone(), group, modes, r, &mut rng)?;
    let (a, b, c) = (exp_section(group, &xi)?, exp_section(group, &eta)?, exp_section(group, &zeta)?);
    let one = GroupSection::identity(atlas.clone(), group);

    let assoc = a.multiply(&b)?.multiply(&c)?.max_distance(&a.multiply(&b.multiply(&c)?)?)?;
    let unit = a.multiply(&one)?.max_distance(&a)?.max(one.multiply(&a)?.max_distance(&a)?);
    let inverse = a.multiply(&a.invert())?.max_distance(&one)?;
    let exp_log = a.log_section()?.max_node_distance(&xi)?;
    let ad = exp_section(group, &a.adjoint_operator(&eta)?)?.max_distance(&a.multiply(&b)?.multiply(&a.invert())?)?;
    let hom = exp_section(group, &xi.scale(0.3))?
        .multiply(&exp_section(group, &xi.scale(0.5))?)?
        .max_distance(&exp_section(group, &xi.scale(0.8))?)?;
    let ts = [0.2, 0.1, 0.05, 0.025];
    let bch = bch_order2_probe(group, &xi, &eta, &ts)?;
    let bch_defect = bch.slope.map_or(0.0, |s| (2.9 - s).max(0.0));
    let br = bch_bracket(group, &xi, &eta, 1e-3)?.max_node_distance(&bracket(group, &xi, &eta)?)?;
    let compat = a.multiply(&b)?.compatibility_defect();

    let checks = vec![
        Check::new("group-assoc", "fi-prop", assoc, cfg.tol("group-assoc", 1e-12), "max ‖(ab)c − a(bc)‖"),
        Check::new("group-identity", "fi-prop", unit, cfg.tol("group-identity", 1e-12), "max ‖a·1 − a‖, ‖1·a − a‖"),
        Check::new("group-inverse", "fi-prop", inverse, cfg.tol("group-inverse", 1e-12), "max ‖a a⁻¹ − 1‖"),
        Check::new("group-compat", "fi-prop", compat, cfg.tol("group-compat", 1e-9), "overlap defect of a product"),
        Check::new("exp-log", "fi-prop", exp_log, cfg.tol("exp-log", 1e-10), "max ‖log exp ξ − ξ‖"),
        Check::new(
            "exp-homomorphism",
            "fi-prop",
            hom,
            cfg.tol("exp-homomorphism", 1e-12),
            "exp(0.3ξ)exp(0.5ξ) vs exp(0.8ξ)",
        ),
        Check::new("ad-conjugation", "for-Ad", ad, cfg.tol("ad-conjugation", 1e-10), "exp(Ad_a η) vs a exp(η) a⁻¹"),
        Check::new(
            "bch-order2",
            "defn-bch",
            bch_defect,
            cfg.tol("bch-order2", 0.0),
            format!("residual slope {:?}, required at least 2.9", bch.slope),
        ),
        Check::new(
            "bch-bracket",
            "defn-bch",
            br,
            cfg.tol("bch-bracket", 1e-5),
            "second-order BCH quotient at t = 1e-3 vs bracket",
        ),
    ];
    save_json(&cfg.out.join("group_section.json"), &GroupSectionFile::from_section(&a, cfg.convention))?;
    let data = json!({
        "group": group.name(),
        "atlas": atlas.name(),
        "atlas_hash": atlas.hash(),
        "bch_ts": bch.ts,
        "bch_residuals": bch.residuals,
        "bch_slope": bch.slope,
    });
    Ok(Report::new("group-demo", cfg, checks, data))
}

pub fn evolve(cfg: &RunConfig, curve_path: &Path) -> Result<Report, CliError> {
    let file: CurveFile =
        read_json(curve_path).map_err(|e| CliError::Input(format!("{}: {e}", curve_path.display())))?;
    let curve = file.to_curve(None).map_err(|e| CliError::Input(format!("{}: {e}", curve_path.display())))?;
    let group = curve.group();
    let eta = run_evolve(&curve, EvolveOptions::new(cfg.steps))?;
    let fine = run_evolve(&curve, EvolveOptions::new(2 * cfg.steps))?;
    let mut checks = vec![
        Check::new(
            "evolve-relations",
            "eq-inival",
            eta.relation_defect(),
            cfg.tol("evolve-relations", 1e-10),
            "group relation defect of η(1)",
        ),
        Check::new(
            "evolve-compat",
            "eq-inival",
            eta.compatibility_defect(),
            cfg.tol("evolve-compat", 1e-9),
            "overlap defect of η(1)",
        ),
        Check::new(
            "evolve-steps",
            "eq-inival",
            eta.max_distance(&fine)?,
            cfg.tol("evolve-steps", 1e-6),
            format!("η(1) at {} vs {} RK4 steps", cfg.steps, 2 * cfg.steps),
        ),
    ];
    let first = &curve.samples()[0];
    let constant = curve.samples().iter().all(|s| s.pieces() == first.pieces());
    if constant {
        checks.push(Check::new(
            "evolve-constant",
            "eq-inival",
            eta.max_distance(&exp_section(group, first)?)?,
            cfg.tol("evolve-constant", 1e-8),
            "constant curve: η(1) vs exp(ξ)",
        ));
    }
    save_json(&cfg.out.join("eta1.json"), &GroupSectionFile::from_section(&eta, cfg.convention))?;
    let data = json!({
        "group": group.name(),
        "atlas": curve.atlas().name(),
        "samples": curve.samples().len(),
        "steps": cfg.steps,
        "projections": eta.projections(),
        "constant_curve": constant,
    });
    Ok(Report::new("evolve", cfg, checks, data))
}
