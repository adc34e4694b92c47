use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::atlas::Atlas;
use crate::error::{Error, Result};
use crate::lie::{GroupSection, MatrixGroup, PROJECTION_THRESHOLD};
use crate::probe::loglog_slope;
use crate::section::Section;

/// Algebra sections on a uniform time grid of `[0, 1]`.
#[derive(Clone, Debug)]
pub struct TimeSampledCurve {
    group: MatrixGroup,
    samples: Vec<Section>,
}

impl TimeSampledCurve {
    pub fn new(group: MatrixGroup, samples: Vec<Section>) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::Input("a curve needs at least one sample".into()))?;
        for s in &samples {
            if s.components() != group.algebra_dim() {
                return Err(Error::Input(format!(
                    "curve sample has {} components, {} needs {}",
                    s.components(),
                    group.name(),
                    group.algebra_dim()
                )));
            }
            if !Arc::ptr_eq(s.atlas(), first.atlas()) && s.atlas().hash() != first.atlas().hash() {
                return Err(Error::Input("curve samples live on different atlases".into()));
            }
        }
        Ok(TimeSampledCurve { group, samples })
    }

    /// `t ↦ ξ` for all `t`.
    pub fn constant(group: MatrixGroup, xi: Section) -> Result<Self> {
        Self::new(group, vec![xi])
    }

    /// `γ(t_i) = f(t_i)` on `intervals + 1` uniform times.
    pub fn from_fn(group: MatrixGroup, intervals: usize, f: impl Fn(f64) -> Result<Section>) -> Result<Self> {
        let n = intervals.max(1);
        Self::new(group, (0..=n).map(|i| f(i as f64 / n as f64)).collect::<Result<Vec<_>>>()?)
    }

    pub fn group(&self) -> MatrixGroup {
        self.group
    }

    pub fn atlas(&self) -> &Arc<Atlas> {
        self.samples[0].atlas()
    }

    pub fn samples(&self) -> &[Section] {
        &self.samples
    }

    /// Sample times `t_i = i/(n−1)`; a single sample is a constant curve.
    pub fn times(&self) -> Vec<f64> {
        let n = self.samples.len();
        if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
        }
    }

    pub fn intervals(&self) -> usize {
        self.samples.len().saturating_sub(1).max(1)
    }

    /// `a·self + b·other` samplewise.
    pub fn linear_combination(&self, a: f64, other: &TimeSampledCurve, b: f64) -> Result<TimeSampledCurve> {
        if self.samples.len() != other.samples.len() || self.group != other.group {
            return Err(Error::Input("curves differ in group or time grid".into()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(x, y)| x.linear_combination(a, y, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(TimeSampledCurve { samples, ..self.clone() })
    }

    /// `γ(t)` at chart `j`, node `q`, linear in time between samples.
    fn value(&self, chart: usize, node: usize, t: f64) -> Vec<f64> {
        let n = self.samples.len();
        if n == 1 {
            return self.samples[0].piece(chart).value(node).to_vec();
        }
        let pos = (t.clamp(0.0, 1.0) * (n - 1) as f64).min((n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let w = pos - i as f64;
        let a = self.samples[i].piece(chart).value(node);
        let b = self.samples[i + 1].piece(chart).value(node);
        a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
    }
}

fn rk4_step(eta: &DMatrix<f64>, a: [&DMatrix<f64>; 3], h: f64) -> DMatrix<f64> {
    let [a0, am, a1] = a;
    let k1 = eta * a0;
    let k2 = (eta + &k1 * (0.5 * h)) * am;
    let k3 = (eta + &k2 * (0.5 * h)) * am;
    let k4 = (eta + &k3 * h) * a1;
    eta + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrator settings for [`evolve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub steps: usize,
    /// Re-project onto the group at the end of every step when the
    /// relation defect exceeds the projection threshold.
    pub project: bool,
}

impl EvolveOptions {
    pub fn new(steps: usize) -> Self {
        EvolveOptions { steps, project: true }
    }

    pub fn without_projection(mut self) -> Self {
        self.project = false;
        self
    }
}

/// Solves `η'(t, x) = η(t, x)·γ(t)(x)`, `η(0) = e`, nodewise with the
/// classical fourth-order Runge-Kutta method and returns `η(1)`.
pub fn evolve(curve: &TimeSampledCurve, options: EvolveOptions) -> Result<GroupSection> {
    if options.steps < curve.intervals() {
        return Err(Error::Input(format!(
            "{} steps cannot resolve {} time intervals",
            options.steps,
            curve.intervals()
        )));
    }
    let group = curve.group();
    let atlas = curve.atlas().clone();
    let h = 1.0 / options.steps as f64;
    let mut pieces = Vec::with_capacity(atlas.len());
    let mut projections = 0usize;
    for (j, chart) in atlas.charts().iter().enumerate() {
        let mut piece = Vec::with_capacity(chart.grid().len());
        for q in 0..chart.grid().len() {
            let mut eta = group.identity();
            let mut a0 = group.hat(&curve.value(j, q, 0.0));
            for step in 0..options.steps {
                let t = step as f64 * h;
                let am = group.hat(&curve.value(j, q, t + 0.5 * h));
                let a1 = group.hat(&curve.value(j, q, t + h));
                eta = rk4_step(&eta, [&a0, &am, &a1], h);
                if eta.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        node: q,
                        context: format!("evolution in chart {j} at t = {:.4}", t + h),
                    });
                }
                if options.project {
                    let defect = group.relation_defect(&eta);
                    if defect > PROJECTION_THRESHOLD {
                        projections += 1;
                        log::debug!("evolve: projected chart {j} node {q} at step {step} (defect {defect:.3e})");
                        eta = group.project(&eta);
                    }
                }
                a0 = a1;
            }
            piece.push(eta);
        }
        pieces.push(piece);
    }
    let tolerance = curve.samples()[0].tolerance();
    let mut out = GroupSection::from_pieces_unchecked(atlas, group, pieces, tolerance);
    out.add_projections(projections);
    Ok(out)
}

/// Derivative of the discrete evolution map along `delta`: the tangent
/// equation `ζ' = ζ·A + η·Δ`, `ζ(0) = 0`, integrated with the same RK4
/// scheme as `η`.
pub fn evolve_derivative(
    curve: &TimeSampledCurve,
    delta: &TimeSampledCurve,
    steps: usize,
) -> Result<Vec<Vec<DMatrix<f64>>>> {
    if curve.samples.len() != delta.samples.len() {
        return Err(Error::Input("curve and direction need the same time grid".into()));
    }
    let group = curve.group();
    let atlas = curve.atlas().clone();
    let h = 1.0 / steps as f64;
    let d = group.matrix_dim();
    let mut out = Vec::with_capacity(atlas.len());
    for (j, chart) in atlas.charts().iter().enumerate() {
        let mut piece = Vec::with_capacity(chart.grid().len());
        for q in 0..chart.grid().len() {
            let mut eta = group.identity();
            let mut zeta = DMatrix::zeros(d, d);
            let at = |t: f64| (group.hat(&curve.value(j, q, t)), group.hat(&delta.value(j, q, t)));
            for step in 0..steps {
                let t = step as f64 * h;
                let (a0, d0) = at(t);
                let (am, dm) = at(t + 0.5 * h);
                let (a1, d1) = at(t + h);
                let f =
                    |e: &DMatrix<f64>, z: &DMatrix<f64>, a: &DMatrix<f64>, dd: &DMatrix<f64>| (e * a, z * a + e * dd);
                let (k1e, k1z) = f(&eta, &zeta, &a0, &d0);
                let (k2e, k2z) = f(&(&eta + &k1e * (0.5 * h)), &(&zeta + &k1z * (0.5 * h)), &am, &dm);
                let (k3e, k3z) = f(&(&eta + &k2e * (0.5 * h)), &(&zeta + &k2z * (0.5 * h)), &am, &dm);
                let (k4e, k4z) = f(&(&eta + &k3e * h), &(&zeta + &k3z * h), &a1, &d1);
                eta += (k1e + k2e * 2.0 + k3e * 2.0 + k4e) * (h / 6.0);
                zeta += (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (h / 6.0);
            }
            piece.push(zeta);
        }
        out.push(piece);
    }
    Ok(out)
}

/// Central-difference errors of `γ ↦ evolve(γ)` along `δ` against the
/// tangent solution, with their log-log slope.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothnessProbe {
    pub epsilons: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: Option<f64>,
    pub derivative_norm: f64,
}

pub fn evolution_smoothness_probe(
    curve: &TimeSampledCurve,
    delta: &TimeSampledCurve,
    epsilons: &[f64],
    steps: usize,
) -> Result<SmoothnessProbe> {
    let exact = evolve_derivative(curve, delta, steps)?;
    let options = EvolveOptions::new(steps).without_projection();
    let mut errors = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let plus = evolve(&curve.linear_combination(1.0, delta, eps)?, options)?;
        let minus = evolve(&curve.linear_combination(1.0, delta, -eps)?, options)?;
        let mut worst: f64 = 0.0;
        for (j, piece) in exact.iter().enumerate() {
            for (q, z) in piece.iter().enumerate() {
                let fd = (plus.value(j, q) - minus.value(j, q)) / (2.0 * eps);
                worst = worst.max((fd - z).amax());
            }
        }
        errors.push(worst);
    }
    let derivative_norm = exact.iter().flatten().map(|z| z.amax()).fold(0.0, f64::max);
    let slope = if errors.iter().all(|e| *e > 0.0) { loglog_slope(epsilons, &errors) } else { None };
    Ok(SmoothnessProbe { epsilons: epsilons.to_vec(), errors, slope, derivative_norm })
}

/// Step-halving convergence of [`evolve`] for a constant curve against
/// `exp_section(ξ)`: errors per step count and successive error ratios.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepConvergence {
    pub steps: Vec<usize>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
}

pub fn constant_curve_convergence(group: MatrixGroup, xi: &Section, steps: &[usize]) -> Result<StepConvergence> {
    let exact = crate::lie::exp_section(group, xi)?;
    let curve = TimeSampledCurve::constant(group, xi.clone())?;
    let errors = steps
        .iter()
        .map(|&n| evolve(&curve, EvolveOptions::new(n).without_projection())?.max_distance(&exact))
        .collect::<Result<Vec<_>>>()?;
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(StepConvergence { steps: steps.to_vec(), errors, ratios })
}
