use mapgroups::ladder::{critical_order_estimate, rung_compactness_probe, SobolevLadder};
use mapgroups::probe::suite_rng;
use mapgroups::sobolev::{rellich_spectrum, BandlimitedField};
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{save_json, write_text, Check, Report};
use crate::CliError;

const CUTOFFS: [usize; 3] = [1_000, 10_000, 100_000];
const SIGMA_TOL: f64 = 1e-3;

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let ladder = SobolevLadder::new(cfg.s0, cfg.rungs, 1)
        .map_err(|e| CliError::Config(e.to_string()))?
        .with_convention(cfg.convention);

    let mut probes = Vec::new();
    for j in 0..ladder.len() - 1 {
        let p = rung_compactness_probe(&ladder, j, cfg.modes, SIGMA_TOL)?;
        let sp = rellich_spectrum(ladder.order(j)?, ladder.order(j + 1)?, 1, cfg.modes)?;
        write_text(&cfg.out.join(format!("ladder_spectrum_{j}.csv")), &sp.to_csv())?;
        probes.push(p);
    }
    let not_decreasing = probes.iter().filter(|p| !p.strictly_decreasing).count();
    let not_compact = probes.iter().filter(|p| !p.compact).count();

    let mut rng = suite_rng(cfg.seed, "ladder-monotone");
    let mut mono: f64 = 0.0;
    for _ in 0..cfg.samples {
        let a = BandlimitedField::random(1, cfg.modes, 1, 0.5, &mut rng)?;
        mono = mono.max(ladder.monotonicity_defect(&a)?);
    }

    let mut crit_defect: f64 = 0.0;
    let mut fits = Vec::new();
    for &alpha in &cfg.alphas {
        let c = critical_order_estimate(alpha, &CUTOFFS, cfg.convention)?;
        crit_defect = crit_defect.max(c.estimate.map_or(f64::INFINITY, |e| (e - c.oracle).abs()));
        fits.push(c);
    }
    save_json(&cfg.out.join("ladder_critical_orders.json"), &fits)?;

    let checks = vec![
        Check::new(
            "rung-spectrum",
            "rettich",
            not_decreasing as f64,
            0.0,
            "rungs whose inclusion spectrum is not strictly decreasing",
        ),
        Check::new("rung-compact", "rettich", not_compact as f64, 0.0, "rungs without a finite decay threshold"),
        Check::new(
            "ladder-monotone",
            "norm-order",
            mono.max(0.0),
            cfg.tol("ladder-monotone", 1e-12),
            "rung norm increase",
        ),
        Check::new(
            "critical-order",
            "dirlim-1",
            crit_defect,
            cfg.tol("critical-order", 0.1),
            "max |estimate − integral-test value| over the alphas",
        ),
    ];
    let data = json!({
        "rungs": ladder.rungs,
        "probes": probes,
        "critical_orders": fits,
    });
    Ok(Report::new("ladder", cfg, checks, data))
}
