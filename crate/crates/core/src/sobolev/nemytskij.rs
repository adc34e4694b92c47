use std::fmt;
use std::sync::Arc;

use super::sampled::SampledField;
use crate::error::{Error, Result};
use crate::probe::loglog_slope;

type PointFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// A smooth outer map `f(x, y)` with `x` a base point and `y ∈ ℝⁿ`.
///
/// `d2` is the fibre derivative `∂f/∂y(x, y)`, row-major `out × in`, when
/// it is known in closed form.
#[derive(Clone)]
pub struct SmoothMap {
    name: String,
    input: usize,
    output: usize,
    f: PointFn,
    d2: Option<PointFn>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("name", &self.name)
            .field("input", &self.input)
            .field("output", &self.output)
            .finish()
    }
}

impl SmoothMap {
    pub fn new(
        name: impl Into<String>,
        input: usize,
        output: usize,
        f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SmoothMap { name: name.into(), input, output, f: Arc::new(f), d2: None }
    }

    pub fn with_derivative(mut self, d2: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn output_dim(&self) -> usize {
        self.output
    }

    pub fn has_derivative(&self) -> bool {
        self.d2.is_some()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.f)(x, y)
    }

    /// Fibre derivative; central differences with step `1e-6` when no
    /// closed form was supplied.
    pub fn d2(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        if let Some(d) = &self.d2 {
            return d(x, y);
        }
        let h = 1e-6;
        let mut jac = vec![0.0; self.output * self.input];
        let mut yp = y.to_vec();
        for j in 0..self.input {
            yp[j] = y[j] + h;
            let fp = self.eval(x, &yp);
            yp[j] = y[j] - h;
            let fm = self.eval(x, &yp);
            yp[j] = y[j];
            for i in 0..self.output {
                jac[i * self.input + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    pub fn identity(n: usize) -> Self {
        SmoothMap::new("identity", n, n, |_, y| y.to_vec()).with_derivative(move |_, _| {
            let mut j = vec![0.0; n * n];
            for i in 0..n {
                j[i * n + i] = 1.0;
            }
            j
        })
    }

    /// Componentwise `y ↦ y²`.
    pub fn square(n: usize) -> Self {
        SmoothMap::new("square", n, n, |_, y| y.iter().map(|v| v * v).collect())
            .with_derivative(move |_, y| diagonal(n, y.iter().map(|v| 2.0 * v)))
    }

    /// Componentwise `y ↦ y³`.
    pub fn cube(n: usize) -> Self {
        SmoothMap::new("cube", n, n, |_, y| y.iter().map(|v| v * v * v).collect())
            .with_derivative(move |_, y| diagonal(n, y.iter().map(|v| 3.0 * v * v)))
    }

    /// Componentwise `y ↦ sin y`.
    pub fn sine(n: usize) -> Self {
        SmoothMap::new("sine", n, n, |_, y| y.iter().map(|v| v.sin()).collect())
            .with_derivative(move |_, y| diagonal(n, y.iter().map(|v| v.cos())))
    }

    /// `y ↦ a·y`.
    pub fn linear(n: usize, a: f64) -> Self {
        SmoothMap::new("linear", n, n, move |_, y| y.iter().map(|v| a * v).collect())
            .with_derivative(move |_, _| diagonal(n, std::iter::repeat_n(a, n)))
    }

    /// `(x, y) ↦ y·cos x₀`, an outer map that depends on the base point.
    pub fn modulated(n: usize) -> Self {
        SmoothMap::new("modulated", n, n, |x, y| {
            let c = x[0].cos();
            y.iter().map(|v| c * v).collect()
        })
        .with_derivative(move |x, _| diagonal(n, std::iter::repeat_n(x[0].cos(), n)))
    }

    /// `(x, y) ↦ sin(y)·(1 + ½ cos x₀)`.
    pub fn sine_modulated(n: usize) -> Self {
        SmoothMap::new("sine-modulated", n, n, |x, y| {
            let c = 1.0 + 0.5 * x[0].cos();
            y.iter().map(|v| c * v.sin()).collect()
        })
        .with_derivative(move |x, y| {
            let c = 1.0 + 0.5 * x[0].cos();
            diagonal(n, y.iter().map(|v| c * v.cos()))
        })
    }

    pub const BUILTINS: [&'static str; 6] = ["identity", "square", "cube", "sine", "modulated", "sine-modulated"];

    /// Built-in map by name, one of [`SmoothMap::BUILTINS`].
    pub fn builtin(name: &str, n: usize) -> Result<Self> {
        match name {
            "sine-modulated" => Ok(Self::sine_modulated(n)),
            "identity" => Ok(Self::identity(n)),
            "square" => Ok(Self::square(n)),
            "cube" => Ok(Self::cube(n)),
            "sine" => Ok(Self::sine(n)),
            "modulated" => Ok(Self::modulated(n)),
            other => Err(Error::Input(format!("unknown outer map '{other}'"))),
        }
    }
}

fn diagonal(n: usize, d: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut j = vec![0.0; n * n];
    for (i, v) in d.enumerate().take(n) {
        j[i * n + i] = v;
    }
    j
}

/// Superposition `f_*(γ)(x) = f(x, γ(x))` at the nodes of `γ`.
///
/// Exact at grid level; the result is evaluated between nodes by local
/// interpolation since it carries no band-limited representative.
pub fn nemytskij(f: &SmoothMap, gamma: &SampledField) -> Result<SampledField> {
    nemytskij_at(f, gamma, |x| x.to_vec())
}

/// Superposition with the base point recovered from the node coordinate:
/// the value at node `u` is `f(base(u), γ(u))`.
pub fn nemytskij_at(f: &SmoothMap, gamma: &SampledField, base: impl Fn(&[f64]) -> Vec<f64>) -> Result<SampledField> {
    if f.input_dim() != gamma.components() {
        return Err(Error::Shape(format!(
            "outer map '{}' takes {} components, field has {}",
            f.name(),
            f.input_dim(),
            gamma.components()
        )));
    }
    let domain = gamma.domain();
    let mut values = Vec::with_capacity(domain.len() * f.output_dim());
    for node in 0..domain.len() {
        let x = base(&domain.coords(node));
        let y = f.eval(&x, gamma.value(node));
        if y.len() != f.output_dim() {
            return Err(Error::Shape(format!("outer map '{}' returned {} values", f.name(), y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node, context: format!("outer map '{}' at {:?}", f.name(), x) });
        }
        values.extend(y);
    }
    SampledField::new(domain.clone(), f.output_dim(), values)
}

/// Root-mean-square norm over the nodes.
pub fn node_rms(field: &SampledField) -> f64 {
    let n = field.values().len().max(1) as f64;
    (field.values().iter().map(|v| v * v).sum::<f64>() / n).sqrt()
}

/// Log-log slope of `ε ↦ ‖f_*(γ + εη) − f_*(γ)‖` over the given steps.
///
/// A slope near one is the finite-difference signature of continuity
/// (indeed of differentiability) of the superposition operator.
pub fn nemytskij_continuity_slope(
    f: &SmoothMap,
    gamma: &SampledField,
    eta: &SampledField,
    epsilons: &[f64],
) -> Result<f64> {
    let base = nemytskij(f, gamma)?;
    let mut diffs = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let moved = nemytskij(f, &gamma.linear_combination(1.0, eta, eps)?)?;
        diffs.push(node_rms(&moved.linear_combination(1.0, &base, -1.0)?));
    }
    loglog_slope(epsilons, &diffs)
        .ok_or_else(|| Error::Domain("continuity probe produced no positive differences".into()))
}
