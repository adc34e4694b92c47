use mapgroups::flow::{boundary_samples, monotone_descent_check, shrink_domain, FlowField, LevelSetDomain};
use mapgroups::probe::suite_rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{save_json, Check, Report};
use crate::CliError;

pub fn run(cfg: &RunConfig, name: &str) -> Result<Report, CliError> {
    let domain = LevelSetDomain::builtin(name).map_err(|e| CliError::Config(e.to_string()))?;
    if !(cfg.t0.is_finite() && cfg.t0 != 0.0) {
        return Err(CliError::Config("t0 must be a nonzero finite time".into()));
    }
    let field = FlowField::standard(domain.clone())?;
    let mut rng = suite_rng(cfg.seed, "shrink-domain");
    let samples = boundary_samples(&domain, 10 * cfg.samples, &mut rng)?;
    let t0 = cfg.t0.abs();
    let shrink = shrink_domain(&field, t0, &samples, cfg.steps)?;
    let enlarge = shrink_domain(&field, -t0, &samples, cfg.steps)?;
    let descent = monotone_descent_check(&field, &samples, 1e-4, 16)?;
    save_json(&cfg.out.join(format!("shrink_{name}.json")), &json!({"shrink": shrink, "enlarge": enlarge}))?;

    let checks = vec![
        Check::new(
            "shrink-margin",
            "smoo-bd",
            -shrink.margin,
            0.0,
            format!("margin {:.3e} of the flowed boundary inside U", shrink.margin),
        ),
        Check::new(
            "enlarge-margin",
            "smoo-bd",
            -enlarge.margin,
            0.0,
            format!("margin {:.3e} of the back-flowed boundary outside L", enlarge.margin),
        ),
        Check::new("shrink-k-fixed", "smoo-bd", shrink.k_max_displacement, 0.0, "displacement of points of K"),
        Check::new(
            "descent-slope",
            "smoo-bd",
            descent.max_error,
            cfg.tol("descent-slope", 1e-4),
            "d/dt g(Fl_t x) at 0 against −‖∇g‖",
        ),
    ];
    let data = json!({
        "domain": domain,
        "band": field.band(),
        "k_center": field.k_center(),
        "k_radius": field.k_radius(),
        "t0": t0,
        "samples": samples.len(),
        "shrink_margin": shrink.margin,
        "enlarge_margin": enlarge.margin,
    });
    Ok(Report::new("shrink-domain", cfg, checks, data))
}
