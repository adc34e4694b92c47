use std::path::Path;

use mapgroups::io::{read_json, FieldFile, FieldPayload};
use mapgroups::probe::{max_abs_diff, suite_rng};
use mapgroups::sobolev::{
    hs_inner, hs_norm, quotient_norm, restrict, BandlimitedField, BoxRegion, ExtensionOperator, GridDomain,
    SampledField, SobolevOrder,
};
use rand::Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{save_json, Check, Report};
use crate::CliError;

fn load_field(path: &Path) -> Result<FieldFile, CliError> {
    read_json(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn order(cfg: &RunConfig, s: f64) -> Result<SobolevOrder, CliError> {
    Ok(SobolevOrder::new(s).map_err(|e| CliError::Config(e.to_string()))?.with_convention(cfg.convention))
}

enum Subject {
    Global(BandlimitedField),
    Window(Box<SampledField>),
}

/// `‖γ‖_{H^s}` for each configured order; lower orders must not exceed higher ones.
pub fn norms(cfg: &RunConfig, field: Option<&Path>) -> Result<Report, CliError> {
    let subject = match field {
        Some(p) => match load_field(p)?.field {
            FieldPayload::Bandlimited(b) => Subject::Global(b.to_field().map_err(|e| CliError::Input(e.to_string()))?),
            FieldPayload::Sampled(s) => {
                Subject::Window(Box::new(s.to_field().map_err(|e| CliError::Input(e.to_string()))?))
            }
        },
        None => {
            let m = cfg.atlas()?.dim();
            let mut rng = suite_rng(cfg.seed, "norms");
            let a = BandlimitedField::random(m, cfg.modes, 1, 1.0, &mut rng)?;
            save_json(&cfg.out.join("norms_field.json"), &FieldFile::bandlimited(&a, cfg.convention))?;
            Subject::Global(a)
        }
    };
    let mut orders = cfg.orders.clone();
    orders.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for &s in &orders {
        let o = order(cfg, s)?;
        let v = match &subject {
            Subject::Global(a) => hs_norm(a, o)?,
            Subject::Window(w) => quotient_norm(w, o, cfg.modes)?,
        };
        rows.push((s, v));
    }
    let defect =
        rows.windows(2).map(|w| ((w[0].1 - w[1].1) / w[1].1.max(f64::MIN_POSITIVE)).max(0.0)).fold(0.0, f64::max);
    let checks = vec![Check::new(
        "norm-order",
        "norm-order",
        defect,
        cfg.tol("norm-order", 1e-12),
        "largest relative excess of a lower-order norm over the next higher one",
    )];
    let kind = match subject {
        Subject::Global(_) => "bandlimited",
        Subject::Window(_) => "sampled (quotient norm)",
    };
    let data = json!({
        "kind": kind,
        "modes": cfg.modes,
        "norms": rows.iter().map(|(s, v)| json!({"s": s, "norm": v})).collect::<Vec<_>>(),
    });
    Ok(Report::new("norms", cfg, checks, data))
}

/// Minimum-norm extension: interpolation residual, kernel orthogonality and
/// minimality against random competitors.
pub fn extend(cfg: &RunConfig, field: Option<&Path>, s: f64) -> Result<Report, CliError> {
    let o = order(cfg, s)?;
    let data_field = match field {
        Some(p) => match load_field(p)?.field {
            FieldPayload::Sampled(sp) => sp.to_field().map_err(|e| CliError::Input(e.to_string()))?,
            FieldPayload::Bandlimited(_) => {
                return Err(CliError::Input("extend needs a sampled field file".into()));
            }
        },
        None => {
            let m = cfg.atlas()?.dim();
            let mut rng = suite_rng(cfg.seed, "extend");
            let a = BandlimitedField::random(m, cfg.modes.min(8), 1, 1.0, &mut rng)?;
            let window = GridDomain::boxed(BoxRegion::cube(1.0, 2.2, m)?, cfg.resolution())?;
            let v = restrict(&a, &window)?.without_spectral();
            save_json(&cfg.out.join("extend_data.json"), &FieldFile::sampled(&v, cfg.convention))?;
            v
        }
    };
    let m = data_field.domain().dim();
    let modes = if m == 1 { cfg.modes } else { cfg.modes.min(16) };
    let op = ExtensionOperator::new(data_field.domain(), o, modes)?;
    let ext = op.apply(&data_field)?;
    let norm = hs_norm(&ext, o)?;
    let residual = max_abs_diff(op.resample(&ext)?.values(), data_field.values());
    let kernel = op.kernel_basis()?;
    let mut orth: f64 = 0.0;
    for k in &kernel {
        let kn = hs_norm(k, o)?;
        orth = orth.max(hs_inner(&ext, k, o)?.abs() / (norm * kn).max(f64::MIN_POSITIVE));
    }
    // Competitors ext + Σ c_i k_i agree on the data and must not be shorter.
    let mut rng = suite_rng(cfg.seed, "extend-competitors");
    let mut excess: f64 = 0.0;
    if !kernel.is_empty() {
        for _ in 0..50 {
            let mut comp = ext.clone();
            for k in &kernel {
                comp = comp.linear_combination(1.0, k, rng.random_range(-1.0..1.0))?;
            }
            excess = excess.max((norm - hs_norm(&comp, o)?) / norm.max(f64::MIN_POSITIVE));
        }
    }
    save_json(&cfg.out.join("extension.json"), &FieldFile::bandlimited(&ext, cfg.convention))?;
    let checks = vec![
        Check::new("extend-residual", "RES", residual, cfg.tol("extend-residual", 1e-8), "max nodal residual"),
        Check::new(
            "extend-kernel",
            "RES",
            orth,
            cfg.tol("extend-kernel", 1e-8),
            format!("max normalised inner product with {} kernel directions", kernel.len()),
        ),
        Check::new(
            "extend-minimal",
            "RES",
            excess.max(0.0),
            cfg.tol("extend-minimal", 1e-12),
            "largest relative norm deficit of a competitor",
        ),
    ];
    let data = json!({
        "order": s,
        "modes": modes,
        "nodes": data_field.len(),
        "rank": op.rank(),
        "kernel_dim": kernel.len(),
        "norm": norm,
    });
    Ok(Report::new("extend", cfg, checks, data))
}
