use mapgroups::atlas::validate_atlas;
use mapgroups::probe::{max_abs_diff, suite_rng};
use mapgroups::sobolev::{
    cutoff_multiply_bandlimited, cutoff_multiply_sampled, extend_by_zero, multiplier_bound_probe,
    nemytskij_continuity_slope, pullback, restrict, restrict_sampled, sample, BandlimitedField, Diffeo, GridDomain,
    SmoothCutoff, SmoothMap, SobolevOrder, Window,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{Check, Report};
use crate::CliError;

const PF_MAPS: [&str; 3] = ["sine", "square", "sine-modulated"];

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let atlas = cfg.atlas()?;
    let m = atlas.dim();
    let res = cfg.resolution();
    let n = cfg.modes;
    let mut checks = Vec::new();

    let report = validate_atlas(&atlas, cfg.tol("atlas", 1e-10), 33);
    let failing: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect();
    checks.push(Check::new(
        "atlas",
        "def_F_loc",
        failing.len() as f64,
        0.0,
        format!("{} hash {}; failing checks: {:?}", atlas.name(), report.hash, failing),
    ));

    // Superposition: ε ↦ ‖f∘(γ + εη) − f∘γ‖ has slope one.
    let mut rng = suite_rng(cfg.seed, "axiom-PF");
    let chart = atlas.chart(0)?;
    let eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let mut pf_slopes = Vec::new();
    for _ in 0..cfg.samples {
        let g = restrict(&BandlimitedField::random(m, n.min(8), 2, 1.0, &mut rng)?, chart.grid())?;
        let e = restrict(&BandlimitedField::random(m, n.min(8), 2, 1.0, &mut rng)?, chart.grid())?;
        for name in PF_MAPS {
            pf_slopes.push(nemytskij_continuity_slope(&SmoothMap::builtin(name, 2)?, &g, &e, &eps)?);
        }
    }
    let pf = pf_slopes.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::new(
        "axiom-PF",
        "nemytskij",
        pf,
        cfg.tol("axiom-PF", 0.1),
        format!("max |slope - 1| over {} probes", pf_slopes.len()),
    ));

    // Pullbacks compose contravariantly: (θ₁∘θ₂)^* = θ₂^* θ₁^*.
    let mut rng = suite_rng(cfg.seed, "axiom-PB");
    let full = GridDomain::full(m, res)?;
    let mut pb: f64 = 0.0;
    for i in 0..cfg.samples {
        let a = BandlimitedField::random(m, n.min(8), 1, 1.0, &mut rng)?;
        let gamma = sample(&a, &full)?;
        let t = 0.37 + 0.11 * i as f64;
        let theta1 = Diffeo::translation(vec![t; m]);
        let theta2 = Diffeo::sine_warp(vec![0.3; m])?;
        let two_step = pullback(&theta2, &pullback(&theta1, &gamma, &full)?, &full)?;
        let direct = pullback(&theta1.after(&theta2), &gamma, &full)?;
        pb = pb.max(max_abs_diff(two_step.values(), direct.values()));
    }
    checks.push(Check::new(
        "axiom-PB",
        "PB_loc",
        pb,
        cfg.tol("axiom-PB", 1e-10),
        "max nodal difference of iterated and composed pullbacks",
    ));

    // Extension by zero from V to U and restriction back to V.
    let mut rng = suite_rng(cfg.seed, "axiom-GL");
    let u_grid = chart.grid().clone();
    let Window::Box(u_box) = u_grid.window() else {
        return Err(CliError::Config("chart window must be a box".into()));
    };
    let v_box = u_box.grown(-0.25 * u_box.half_widths()[0])?;
    let v_grid = GridDomain::boxed_with_origin(v_box.clone(), u_grid.origin().to_vec(), res)?;
    let h = SmoothCutoff::on_box(&v_box.grown(-2.0 * u_grid.spacing(0))?, 0.5)?;
    let mut gl: f64 = 0.0;
    for _ in 0..cfg.samples {
        let a = BandlimitedField::random(m, n.min(8), 2, 1.0, &mut rng)?;
        let gamma = cutoff_multiply_sampled(&h, &restrict(&a, &v_grid)?.without_spectral())?;
        let ext = extend_by_zero(&gamma, &u_grid)?;
        let back = restrict_sampled(&ext, &v_grid)?;
        gl = gl.max(max_abs_diff(back.values(), gamma.values()));
        for i in 0..u_grid.len() {
            if !v_box.contains_open(&u_grid.coords(i)) {
                gl = gl.max(ext.value(i).iter().map(|v| v.abs()).fold(0.0, f64::max));
            }
        }
    }
    checks.push(Check::new(
        "axiom-GL",
        "theaxioms",
        gl,
        cfg.tol("axiom-GL", 1e-14),
        "round trip defect and largest value off the support window",
    ));

    // Cutoff multiplication against the Peetre bound.
    let mut rng = suite_rng(cfg.seed, "axiom-MU");
    let bump = chart.bump();
    let probe_modes = n.min(16);
    let h_hat = cutoff_multiply_bandlimited(bump, &BandlimitedField::constant(m, probe_modes, &[1.0])?, None)?;
    let mut mu: f64 = 0.0;
    let mut ratios = Vec::new();
    for &s in &cfg.orders {
        let order = SobolevOrder::new(s)?.with_convention(cfg.convention);
        let e = cfg.convention.exponent(s);
        let bound = 2f64.powf(0.5 * e)
            * (0..h_hat.mode_count())
                .map(|j| {
                    let k = h_hat.multi_index(j);
                    let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                    h_hat.coeffs()[j].norm() * (1.0 + k2).powf(0.5 * e)
                })
                .sum::<f64>();
        let ratio = multiplier_bound_probe(bump, order, m, probe_modes, cfg.samples, None, &mut rng)?;
        ratios.push(json!({"s": s, "ratio": ratio, "bound": bound}));
        mu = mu.max(ratio / bound);
    }
    checks.push(Check::new(
        "axiom-MU",
        "theaxioms",
        mu,
        cfg.tol("axiom-MU", 1.0),
        "largest observed ‖hγ‖/‖γ‖ over the Peetre bound",
    ));

    let data = json!({
        "atlas": atlas.name(),
        "atlas_hash": atlas.hash(),
        "pf_slopes": pf_slopes,
        "mu_ratios": ratios,
    });
    Ok(Report::new("verify-axioms", cfg, checks, data))
}
