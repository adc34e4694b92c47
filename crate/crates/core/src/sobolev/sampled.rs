use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::field::{mode_count, multi_index, BandlimitedField};
use super::grid::{GridDomain, Window};
use crate::error::{Error, Result};

/// How a sampled field is evaluated between its nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    /// Through a band-limited representative that reproduces the samples.
    #[serde(rename = "trigonometric")]
    Trigonometric,
    /// Tensor-product four-point Lagrange stencils on the node lattice.
    #[serde(rename = "piecewise-cubic")]
    PiecewiseCubic,
}

/// Samples of an `ℝⁿ`-valued function at the masked nodes of a
/// [`GridDomain`], stored node-major.
///
/// When the samples come from a band-limited field (restriction, exact
/// affine pullback) that field is kept as the representative used between
/// nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    domain: GridDomain,
    components: usize,
    values: Vec<f64>,
    spectral: Option<BandlimitedField>,
}

impl SampledField {
    pub fn new(domain: GridDomain, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::Input("a sampled field needs at least one component".into()));
        }
        if values.len() != domain.len() * components {
            return Err(Error::Shape(format!(
                "{} values for {} nodes x {} components",
                values.len(),
                domain.len(),
                components
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: pos / components, context: "sampled value".into() });
        }
        Ok(SampledField { domain, components, values, spectral: None })
    }

    pub fn zeros(domain: GridDomain, components: usize) -> Result<Self> {
        let len = domain.len() * components;
        Self::new(domain, components, vec![0.0; len])
    }

    /// Samples a closed-form function at the masked nodes.
    pub fn from_fn(domain: GridDomain, components: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(domain.len() * components);
        for i in 0..domain.len() {
            let v = f(&domain.coords(i));
            if v.len() != components {
                return Err(Error::Shape(format!("function returned {} components, expected {components}", v.len())));
            }
            values.extend(v);
        }
        Self::new(domain, components, values)
    }

    pub(crate) fn with_spectral(mut self, spectral: Option<BandlimitedField>) -> Self {
        self.spectral = spectral;
        self
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.components..(node + 1) * self.components]
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn spectral(&self) -> Option<&BandlimitedField> {
        self.spectral.as_ref()
    }

    pub fn interpolation(&self) -> Interpolation {
        if self.spectral.is_some() {
            Interpolation::Trigonometric
        } else {
            Interpolation::PiecewiseCubic
        }
    }

    /// Drops the band-limited representative, forcing lattice interpolation.
    pub fn without_spectral(mut self) -> Self {
        self.spectral = None;
        self
    }

    /// Largest Euclidean norm of a node value.
    pub fn sup_norm(&self) -> f64 {
        self.values.chunks(self.components).map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    pub fn linear_combination(&self, a: f64, other: &SampledField, b: f64) -> Result<Self> {
        if self.domain != other.domain || self.components != other.components {
            return Err(Error::Shape("sampled fields live on different domains".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        let spectral = match (&self.spectral, &other.spectral) {
            (Some(p), Some(q)) => p.linear_combination(a, q, b).ok(),
            _ => None,
        };
        Ok(SampledField::new(self.domain.clone(), self.components, values)?.with_spectral(spectral))
    }

    pub fn scale(&self, a: f64) -> Self {
        SampledField {
            values: self.values.iter().map(|x| a * x).collect(),
            spectral: self.spectral.as_ref().map(|p| p.scale(a)),
            ..self.clone()
        }
    }

    /// Value at an arbitrary point of the window.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.domain.dim() {
            return Err(Error::Shape("point dimension differs from the domain".into()));
        }
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!("point {x:?} is outside the sampled window")));
        }
        if let Some(p) = &self.spectral {
            return Ok(p.eval(x));
        }
        if self.domain.is_empty() {
            return Err(Error::Domain("empty sampled window".into()));
        }
        let stencils: Vec<Vec<(usize, f64)>> = (0..self.domain.dim()).map(|a| self.axis_stencil(a, x[a])).collect();
        let mut out = vec![0.0; self.components];
        if self.domain.dim() == 1 {
            for (q, w) in &stencils[0] {
                for (o, v) in out.iter_mut().zip(self.value(*q)) {
                    *o += w * v;
                }
            }
        } else {
            let k1 = self.domain.axis_count(1);
            for (q0, w0) in &stencils[0] {
                for (q1, w1) in &stencils[1] {
                    for (o, v) in out.iter_mut().zip(self.value(q0 * k1 + q1)) {
                        *o += w0 * w1 * v;
                    }
                }
            }
        }
        Ok(out)
    }

    fn axis_stencil(&self, axis: usize, x: f64) -> Vec<(usize, f64)> {
        let count = self.domain.axis_count(axis);
        let h = self.domain.spacing(axis);
        let t = (x - self.domain.axis_first(axis)) / h;
        if self.domain.is_full() {
            let n = count as i64;
            let base = t.floor() as i64 - 1;
            return lagrange_weights(t - base as f64, 4)
                .into_iter()
                .enumerate()
                .map(|(s, w)| ((base + s as i64).rem_euclid(n) as usize, w))
                .collect();
        }
        let points = count.min(4);
        if points == 1 {
            return vec![(0, 1.0)];
        }
        let lead = if points == 4 { 1.0 } else { 0.0 };
        let base = ((t.floor() - lead).max(0.0) as usize).min(count - points);
        lagrange_weights(t - base as f64, points).into_iter().enumerate().map(|(s, w)| (base + s, w)).collect()
    }
}

/// Lagrange basis weights for nodes `0, 1, …, p-1` evaluated at `u`.
fn lagrange_weights(u: f64, p: usize) -> Vec<f64> {
    (0..p).map(|s| (0..p).filter(|r| *r != s).map(|r| (u - r as f64) / (s as f64 - r as f64)).product()).collect()
}

fn check_resolution(grid: &GridDomain, modes: usize) -> Result<()> {
    let required = 2 * modes + 1;
    for (axis, n) in grid.resolution().iter().enumerate() {
        if *n < required {
            return Err(Error::Aliasing { axis, resolution: *n, required });
        }
    }
    Ok(())
}

fn axis_phase_table(first: f64, h: f64, count: usize, modes: usize) -> Vec<Complex64> {
    let n = modes as i64;
    let side = 2 * modes + 1;
    let mut table = Vec::with_capacity(count * side);
    for q in 0..count {
        let x = first + h * q as f64;
        table.extend((-n..=n).map(|k| Complex64::from_polar(1.0, k as f64 * x)));
    }
    table
}

/// Evaluates a real band-limited field at the masked nodes of `grid`.
pub fn sample(a: &BandlimitedField, grid: &GridDomain) -> Result<SampledField> {
    if a.dim() != grid.dim() {
        return Err(Error::Shape(format!("field on T^{} sampled on a {}-d grid", a.dim(), grid.dim())));
    }
    if !a.is_real() {
        return Err(Error::Input("only real fields can be sampled".into()));
    }
    check_resolution(grid, a.modes())?;
    let side = 2 * a.modes() + 1;
    let per = a.mode_count();
    let n = a.components();
    let tables: Vec<Vec<Complex64>> = (0..grid.dim())
        .map(|ax| axis_phase_table(grid.axis_first(ax), grid.spacing(ax), grid.axis_count(ax), a.modes()))
        .collect();
    let mut values = vec![0.0; grid.len() * n];
    for (c, block) in a.coeffs().chunks(per).enumerate() {
        if grid.dim() == 1 {
            for q in 0..grid.axis_count(0) {
                let row = &tables[0][q * side..(q + 1) * side];
                let v: Complex64 = block.iter().zip(row).map(|(x, e)| x * e).sum();
                values[q * n + c] = v.re;
            }
        } else {
            let (k0, k1) = (grid.axis_count(0), grid.axis_count(1));
            // inner[i][q1] = Σ_{k2} c[i, k2] e^{i k2 x1(q1)}
            let mut inner = vec![Complex64::new(0.0, 0.0); side * k1];
            for i in 0..side {
                let coeff_row = &block[i * side..(i + 1) * side];
                for q1 in 0..k1 {
                    let row = &tables[1][q1 * side..(q1 + 1) * side];
                    inner[i * k1 + q1] = coeff_row.iter().zip(row).map(|(x, e)| x * e).sum();
                }
            }
            for q0 in 0..k0 {
                let row = &tables[0][q0 * side..(q0 + 1) * side];
                for q1 in 0..k1 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, e) in row.iter().enumerate() {
                        acc += e * inner[i * k1 + q1];
                    }
                    values[(q0 * k1 + q1) * n + c] = acc.re;
                }
            }
        }
    }
    Ok(SampledField::new(grid.clone(), n, values)?.with_spectral(Some(a.clone())))
}

/// Trigonometric interpolation: recovers the band-limited field at cutoff
/// `modes` from samples on a full-torus grid.
///
/// Exact (up to rounding) whenever the samples come from a field of cutoff
/// at most `modes` and the resolution is at least `2·modes + 1`.
pub fn synthesize(v: &SampledField, modes: usize) -> Result<BandlimitedField> {
    let grid = v.domain();
    if !matches!(grid.window(), Window::FullTorus) {
        return Err(Error::Input(
            "synthesis needs samples on the full torus; use the minimum-norm extension for windows".into(),
        ));
    }
    check_resolution(grid, modes)?;
    let m = grid.dim();
    let n = v.components();
    let res = grid.resolution().to_vec();
    let total: usize = res.iter().product();
    let mut planner = FftPlanner::<f64>::new();
    let per = mode_count(m, modes);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * per];
    for c in 0..n {
        let mut data: Vec<Complex64> = (0..total).map(|i| Complex64::new(v.values()[i * n + c], 0.0)).collect();
        if m == 1 {
            planner.plan_fft_forward(res[0]).process(&mut data);
        } else {
            let (n0, n1) = (res[0], res[1]);
            let row_fft = planner.plan_fft_forward(n1);
            for row in data.chunks_mut(n1) {
                row_fft.process(row);
            }
            let col_fft = planner.plan_fft_forward(n0);
            let mut column = vec![Complex64::new(0.0, 0.0); n0];
            for j in 0..n1 {
                for i in 0..n0 {
                    column[i] = data[i * n1 + j];
                }
                col_fft.process(&mut column);
                for i in 0..n0 {
                    data[i * n1 + j] = column[i];
                }
            }
        }
        for idx in 0..per {
            let k = multi_index(m, modes, idx);
            let mut flat = 0usize;
            let mut phase = 0.0;
            for a in 0..m {
                flat = flat * res[a] + k[a].rem_euclid(res[a] as i64) as usize;
                phase -= k[a] as f64 * grid.axis_first(a);
            }
            coeffs[c * per + idx] = data[flat] * Complex64::from_polar(1.0 / total as f64, phase);
        }
    }
    BandlimitedField::real_part_of(m, modes, n, coeffs)
}

/// Pointwise restriction `γ ↦ γ|_U` of a band-limited field to a window.
pub fn restrict(a: &BandlimitedField, window: &GridDomain) -> Result<SampledField> {
    if window.is_empty() {
        return Err(Error::Input("restriction to a window without nodes".into()));
    }
    sample(a, window)
}

/// Restriction of samples to a sub-window on the same lattice.
pub fn restrict_sampled(field: &SampledField, sub: &GridDomain) -> Result<SampledField> {
    if sub.is_empty() {
        return Err(Error::Input("restriction to a window without nodes".into()));
    }
    if !field.domain().same_lattice(sub) {
        return Err(Error::Input("sub-window does not share the sample lattice".into()));
    }
    let n = field.components();
    let mut values = Vec::with_capacity(sub.len() * n);
    for i in 0..sub.len() {
        let x = sub.coords(i);
        let j = field
            .domain()
            .locate(&x)
            .ok_or_else(|| Error::Domain(format!("node {i} at {x:?} is not a node of the parent window")))?;
        values.extend_from_slice(field.value(j));
    }
    Ok(SampledField::new(sub.clone(), n, values)?.with_spectral(field.spectral().cloned()))
}

/// Extension by zero from a box `V` to a larger window `U` on the same
/// lattice. The samples must vanish on the outermost node layer of `V`,
/// the sample-level form of a support compact in `V`.
pub fn extend_by_zero(field: &SampledField, target: &GridDomain) -> Result<SampledField> {
    let source = field.domain();
    if !source.same_lattice(target) {
        return Err(Error::Input("target window does not share the sample lattice".into()));
    }
    let Window::Box(inner) = source.window() else {
        return Err(Error::Input("extension by zero starts from a bounded window".into()));
    };
    let n = field.components();
    for i in 0..source.len() {
        let q = source.axis_positions(i);
        let on_rim = (0..source.dim()).any(|a| q[a] == 0 || q[a] + 1 == source.axis_count(a));
        if on_rim && field.value(i).iter().any(|v| *v != 0.0) {
            return Err(Error::Input(format!(
                "support is not compact in the window: node {i} on the rim carries {:?}",
                field.value(i)
            )));
        }
        if target.locate(&source.coords(i)).is_none() {
            return Err(Error::Domain(format!("node {i} of the source window is not in the target")));
        }
    }
    let mut values = vec![0.0; target.len() * n];
    for i in 0..target.len() {
        let x = target.coords(i);
        if inner.contains_open(&x) {
            if let Some(j) = source.locate(&x) {
                values[i * n..(i + 1) * n].copy_from_slice(field.value(j));
            }
        }
    }
    SampledField::new(target.clone(), n, values)
}

#[cfg(test)]
mod tests {
    use super::super::grid::BoxRegion;
    use super::*;
    use crate::probe::suite_rng;
    use std::f64::consts::PI;

    #[test]
    fn sampling_constant_and_cosine() {
        let one = BandlimitedField::constant(2, 3, &[1.0]).unwrap();
        let g = GridDomain::full(2, 9).unwrap();
        assert!(sample(&one, &g).unwrap().values().iter().all(|v| (*v - 1.0).abs() < 1e-15));
        let cos = BandlimitedField::cosine(1, 4, &[1]).unwrap();
        let s = sample(&cos, &GridDomain::full(1, 9).unwrap()).unwrap();
        assert!((s.value(0)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn aliasing_is_an_error() {
        let f = BandlimitedField::zeros(1, 8, 1).unwrap();
        let g = GridDomain::full(1, 16).unwrap();
        assert!(matches!(sample(&f, &g), Err(Error::Aliasing { required: 17, .. })));
        let s = SampledField::zeros(g, 1).unwrap();
        assert!(matches!(synthesize(&s, 8), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn synthesis_inverts_sampling_with_offset_origin() {
        let mut rng = suite_rng(11, "synth-offset");
        for m in [1, 2] {
            let f = BandlimitedField::random(m, 5, 2, 0.5, &mut rng).unwrap();
            let grid = GridDomain::build(vec![0.37; m], vec![11; m], Window::FullTorus).unwrap();
            let g = synthesize(&sample(&f, &grid).unwrap(), 5).unwrap();
            for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn synthesis_rejects_windows() {
        let g = GridDomain::boxed(BoxRegion::interval(0.5, 3.0).unwrap(), 17).unwrap();
        let s = SampledField::zeros(g, 1).unwrap();
        assert!(matches!(synthesize(&s, 2), Err(Error::Input(_))));
    }

    #[test]
    fn restriction_of_zero_and_cosine() {
        let u = GridDomain::boxed(BoxRegion::interval(0.0, PI).unwrap(), 33).unwrap();
        let z = restrict(&BandlimitedField::zeros(1, 4, 1).unwrap(), &u).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        let cos = BandlimitedField::cosine(1, 4, &[1]).unwrap();
        let r = restrict(&cos, &u).unwrap();
        for i in 0..u.len() {
            assert!((r.value(i)[0] - u.coords(i)[0].cos()).abs() < 1e-14);
        }
        let empty = GridDomain::boxed(BoxRegion::interval(0.01, 0.02).unwrap(), 33).unwrap();
        assert!(restrict(&cos, &empty).is_err());
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = GridDomain::boxed(BoxRegion::interval(0.2, 3.0).unwrap(), 40).unwrap();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let s = SampledField::from_fn(g, 1, |x| vec![f(x[0])]).unwrap();
        assert_eq!(s.interpolation(), Interpolation::PiecewiseCubic);
        for x in [0.25, 1.0, 1.37, 2.99] {
            assert!((s.eval(&[x]).unwrap()[0] - f(x)).abs() < 1e-11);
        }
        assert!(s.eval(&[3.5]).is_err());
    }

    #[test]
    fn cubic_interpolation_in_two_dimensions_and_on_the_full_torus() {
        let g = GridDomain::boxed(BoxRegion::cube(0.5, 4.0, 2).unwrap(), 24).unwrap();
        let f = |x: &[f64]| vec![x[0] * x[0] * x[1] - x[1] * x[1] * x[1]];
        let s = SampledField::from_fn(g, 1, f).unwrap();
        let p = [1.234, 3.21];
        assert!((s.eval(&p).unwrap()[0] - f(&p)[0]).abs() < 1e-10);

        let full = GridDomain::full(1, 64).unwrap();
        let t = SampledField::from_fn(full, 1, |x| vec![x[0].sin()]).unwrap();
        assert!((t.eval(&[6.25]).unwrap()[0] - 6.25f64.sin()).abs() < 1e-5);
    }

    #[test]
    fn extension_by_zero_round_trip() {
        let u = GridDomain::boxed(BoxRegion::interval(0.1, 6.0).unwrap(), 64).unwrap();
        let v = GridDomain::boxed(BoxRegion::interval(1.0, 3.0).unwrap(), 64).unwrap();
        let bump = SampledField::from_fn(v.clone(), 1, |x| {
            let r = (x[0] - 2.0).abs();
            vec![if r < 0.8 { (1.0 - r / 0.8).powi(3) } else { 0.0 }]
        })
        .unwrap();
        let ext = extend_by_zero(&bump, &u).unwrap();
        let back = restrict_sampled(&ext, &v).unwrap();
        assert_eq!(back.values(), bump.values());

        let rimmed = SampledField::from_fn(v, 1, |_| vec![1.0]).unwrap();
        assert!(extend_by_zero(&rimmed, &u).is_err());
    }
}
