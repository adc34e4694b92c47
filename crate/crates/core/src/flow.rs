//! Level-set domains in the plane, inner normal flows and shrunken domains.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::loglog_slope;
use crate::sobolev::SmoothCutoff;

/// Closed-form level-set functions `g` with `U = {g < 0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    /// `‖y‖² − r²`.
    Disc { radius: f64 },
    /// `x²/a² + y²/b² − 1`.
    Ellipse { a: f64, b: f64 },
    /// Cassini oval `((x−d)²+y²)((x+d)²+y²) − c⁴`, a peanut for `d < c < √2·d`.
    Peanut { d: f64, c: f64 },
}

/// `U = {g < 0}`, `L = {g ≤ 0}`, with `g = scale·shape`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetDomain {
    #[serde(flatten)]
    pub shape: Shape,
    pub scale: f64,
}

impl LevelSetDomain {
    pub fn new(shape: Shape, scale: f64) -> Result<Self> {
        let ok = match &shape {
            Shape::Disc { radius } => *radius > 0.0,
            Shape::Ellipse { a, b } => *a > 0.0 && *b > 0.0,
            Shape::Peanut { d, c } => *d > 0.0 && *c > *d,
        };
        if !ok || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Input(format!("invalid level-set parameters {shape:?}, scale {scale}")));
        }
        Ok(LevelSetDomain { shape, scale })
    }

    pub fn disc(radius: f64) -> Self {
        Self::new(Shape::Disc { radius }, 1.0).expect("positive radius")
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::new(Shape::Ellipse { a, b }, 1.0).expect("positive semi-axes")
    }

    pub fn peanut() -> Self {
        Self::new(Shape::Peanut { d: 0.8, c: 0.9 }, 1.0).expect("valid peanut")
    }

    /// `disc` (unit), `ellipse` (2 × 1), `peanut` (d = 0.8, c = 0.9).
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "disc" => Ok(Self::disc(1.0)),
            "ellipse" => Ok(Self::ellipse(2.0, 1.0)),
            "peanut" => Ok(Self::peanut()),
            other => Err(Error::Input(format!("unknown domain '{other}' (expected disc, ellipse or peanut)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            Shape::Disc { .. } => "disc",
            Shape::Ellipse { .. } => "ellipse",
            Shape::Peanut { .. } => "peanut",
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Input("scale must be positive".into()));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn g(&self, y: &[f64; 2]) -> f64 {
        let [x, v] = *y;
        let raw = match self.shape {
            Shape::Disc { radius } => x * x + v * v - radius * radius,
            Shape::Ellipse { a, b } => x * x / (a * a) + v * v / (b * b) - 1.0,
            Shape::Peanut { d, c } => {
                let p = (x - d).powi(2) + v * v;
                let q = (x + d).powi(2) + v * v;
                p * q - c.powi(4)
            }
        };
        self.scale * raw
    }

    pub fn grad(&self, y: &[f64; 2]) -> [f64; 2] {
        let [x, v] = *y;
        let raw = match self.shape {
            Shape::Disc { .. } => [2.0 * x, 2.0 * v],
            Shape::Ellipse { a, b } => [2.0 * x / (a * a), 2.0 * v / (b * b)],
            Shape::Peanut { d, .. } => {
                let p = (x - d).powi(2) + v * v;
                let q = (x + d).powi(2) + v * v;
                [2.0 * (x - d) * q + 2.0 * (x + d) * p, 2.0 * v * (p + q)]
            }
        };
        [self.scale * raw[0], self.scale * raw[1]]
    }

    /// A box containing `L`.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let (rx, ry) = match self.shape {
            Shape::Disc { radius } => (radius, radius),
            Shape::Ellipse { a, b } => (a, b),
            Shape::Peanut { d, c } => {
                let r = (d * d + c * c).sqrt();
                (r, r)
            }
        };
        ([-rx, -ry], [rx, ry])
    }

    pub fn contains(&self, y: &[f64; 2]) -> bool {
        self.g(y) < 0.0
    }
}

fn norm2(v: &[f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// Tolerance on `|g|` for a point to count as a boundary point.
pub const BOUNDARY_BAND: f64 = 1e-6;
const GRAD_FLOOR: f64 = 1e-12;

/// `ν(y) = −∇g(y)/‖∇g(y)‖` at a boundary point.
pub fn inner_normal(d: &LevelSetDomain, y: &[f64; 2]) -> Result<[f64; 2]> {
    let g = d.g(y);
    if g.abs() >= BOUNDARY_BAND {
        return Err(Error::Domain(format!("{y:?} is not a boundary point (g = {g:.3e})")));
    }
    let grad = d.grad(y);
    let n = norm2(&grad);
    if n < GRAD_FLOOR {
        return Err(Error::SingularBoundary { point: y.to_vec(), norm: n });
    }
    Ok([-grad[0] / n, -grad[1] / n])
}

/// `F = −ξ(g)·∇g/max(‖∇g‖, ε)`, with `ξ` a cutoff in `g` that equals one
/// for `|g| ≤ plateau·band` and vanishes for `|g| ≥ band`, and the excluded
/// compact `K` a closed ball inside `{g ≤ −band}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    domain: LevelSetDomain,
    band: f64,
    cutoff: SmoothCutoff,
    k_center: [f64; 2],
    k_radius: f64,
}

impl FlowField {
    pub fn new(domain: LevelSetDomain, band: f64, plateau: f64, k_center: [f64; 2], k_radius: f64) -> Result<Self> {
        if !(band > 0.0) {
            return Err(Error::Input("cutoff band must be positive".into()));
        }
        let cutoff = SmoothCutoff::new(vec![0.0], vec![band], plateau)?;
        let f = FlowField { domain, band, cutoff, k_center, k_radius };
        if k_radius < 0.0 {
            return Err(Error::Input("K radius must be non-negative".into()));
        }
        // K must sit where F vanishes: check the centre and a ring.
        let ring = (0..64).map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 64.0;
            [k_center[0] + k_radius * a.cos(), k_center[1] + k_radius * a.sin()]
        });
        for p in std::iter::once(k_center).chain(ring) {
            if f.domain.g(&p) > -band {
                return Err(Error::Input(format!("K reaches {p:?}, outside {{g < -band}}")));
            }
        }
        Ok(f)
    }

    /// Band `min(0.5·scale, 0.4·|g(0)|)` in `g`, plateau 0.5 of the band,
    /// `K` the ball of radius 0.1 at the origin.
    pub fn standard(domain: LevelSetDomain) -> Result<Self> {
        let band = (0.5 * domain.scale).min(0.4 * domain.g(&[0.0, 0.0]).abs());
        Self::new(domain, band, 0.5, [0.0, 0.0], 0.1)
    }

    pub fn domain(&self) -> &LevelSetDomain {
        &self.domain
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn k_center(&self) -> [f64; 2] {
        self.k_center
    }

    pub fn k_radius(&self) -> f64 {
        self.k_radius
    }

    pub fn xi(&self, g: f64) -> f64 {
        self.cutoff.eval(&[g])
    }

    pub fn eval(&self, y: &[f64; 2]) -> [f64; 2] {
        let xi = self.xi(self.domain.g(y));
        if xi == 0.0 {
            return [0.0, 0.0];
        }
        let grad = self.domain.grad(y);
        let n = norm2(&grad).max(GRAD_FLOOR);
        [-xi * grad[0] / n, -xi * grad[1] / n]
    }

    /// `Fl_t(y)` by classical RK4 with `steps ≥ 16` equal steps.
    pub fn flow(&self, y: &[f64; 2], t: f64, steps: usize) -> Result<[f64; 2]> {
        if steps < 16 {
            return Err(Error::Input(format!("flow needs at least 16 steps, got {steps}")));
        }
        let h = t / steps as f64;
        let mut x = *y;
        let add = |a: &[f64; 2], k: &[f64; 2], s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
        for _ in 0..steps {
            let k1 = self.eval(&x);
            let k2 = self.eval(&add(&x, &k1, 0.5 * h));
            let k3 = self.eval(&add(&x, &k2, 0.5 * h));
            let k4 = self.eval(&add(&x, &k3, h));
            x = [
                x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            if !(x[0].is_finite() && x[1].is_finite()) {
                return Err(Error::NonFinite { node: 0, context: format!("flow from {y:?}") });
            }
        }
        Ok(x)
    }
}

/// Boundary points by rejection sampling in a coarse `|g|` band, polished
/// by Newton steps along `∇g` until `|g| < 1e−6`.
pub fn boundary_samples<R: Rng + ?Sized>(d: &LevelSetDomain, count: usize, rng: &mut R) -> Result<Vec<[f64; 2]>> {
    let (lo, hi) = d.bounding_box();
    let pad = 0.1 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    // Coarse band: a tenth of the range of g over the boundary-free centre scale.
    let coarse = 0.1 * d.g(&[hi[0] + pad, hi[1] + pad]).abs().max(d.g(&[0.0, 0.0]).abs());
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::Domain(format!("boundary sampling of {} stalled", d.name())));
        }
        let mut y = [rng.random_range(lo[0] - pad..hi[0] + pad), rng.random_range(lo[1] - pad..hi[1] + pad)];
        if d.g(&y).abs() >= coarse {
            continue;
        }
        for _ in 0..50 {
            let g = d.g(&y);
            if g.abs() < 1e-13 * d.scale {
                break;
            }
            let grad = d.grad(&y);
            let n2 = grad[0] * grad[0] + grad[1] * grad[1];
            if n2 < GRAD_FLOOR * GRAD_FLOOR {
                break;
            }
            y = [y[0] - g * grad[0] / n2, y[1] - g * grad[1] / n2];
        }
        let g = d.g(&y);
        if g.abs() < BOUNDARY_BAND && norm2(&d.grad(&y)) >= GRAD_FLOOR {
            out.push(y);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub g_end: f64,
}

/// Sample-based evidence that `closure(Fl_{t0}(U)) ⊂ U` (`t0 > 0`) or
/// `closure(U) ⊂ Fl_{t0}(U)` (`t0 < 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkCertificate {
    pub domain: String,
    pub t0: f64,
    pub steps: usize,
    pub samples: usize,
    /// `min(−g)` over flowed samples for `t0 > 0`, `min(g)` for `t0 < 0`.
    pub margin: f64,
    pub worst: Vec<SampleOutcome>,
    pub k_points: usize,
    pub k_max_displacement: f64,
    pub k_fixed: bool,
    pub passed: bool,
}

pub fn shrink_domain(f: &FlowField, t0: f64, boundary: &[[f64; 2]], steps: usize) -> Result<ShrinkCertificate> {
    if t0 == 0.0 || !t0.is_finite() {
        return Err(Error::Input("t0 must be a nonzero finite time".into()));
    }
    let d = f.domain();
    let sign = if t0 > 0.0 { -1.0 } else { 1.0 };
    let mut outcomes = Vec::with_capacity(boundary.len());
    for (i, y) in boundary.iter().enumerate() {
        let end = f.flow(y, t0, steps)?;
        outcomes.push(SampleOutcome { index: i, start: *y, end, g_end: d.g(&end) });
    }
    let margin = outcomes.iter().map(|o| sign * o.g_end).fold(f64::INFINITY, f64::min);
    let mut worst = outcomes.clone();
    worst.sort_by(|a, b| (sign * a.g_end).total_cmp(&(sign * b.g_end)).then(a.index.cmp(&b.index)));
    worst.truncate(5);

    let (c, r) = (f.k_center(), f.k_radius());
    let mut k_points = vec![c];
    if r > 0.0 {
        for i in 0..32 {
            let a = std::f64::consts::TAU * i as f64 / 32.0;
            k_points.push([c[0] + r * a.cos(), c[1] + r * a.sin()]);
        }
    }
    let mut k_max_displacement: f64 = 0.0;
    for p in &k_points {
        let q = f.flow(p, t0, steps)?;
        k_max_displacement = k_max_displacement.max(norm2(&[q[0] - p[0], q[1] - p[1]]));
    }
    let k_fixed = k_max_displacement == 0.0 && k_points.iter().all(|p| d.contains(p));
    Ok(ShrinkCertificate {
        domain: d.name().to_string(),
        t0,
        steps,
        samples: boundary.len(),
        margin,
        worst,
        k_points: k_points.len(),
        k_max_displacement,
        k_fixed,
        passed: margin > 0.0 && k_fixed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentEntry {
    pub point: [f64; 2],
    pub slope: f64,
    pub expected: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    pub step: f64,
    pub entries: Vec<DescentEntry>,
    pub max_error: f64,
    pub all_negative: bool,
}

/// Central difference of `t ↦ g(Fl_t(x))` at `t = 0`, against `−‖∇g(x)‖`
/// (boundary points) or 0 (points where `F` vanishes).
pub fn monotone_descent_check(f: &FlowField, points: &[[f64; 2]], step: f64, steps: usize) -> Result<DescentReport> {
    let d = f.domain();
    let mut entries = Vec::with_capacity(points.len());
    for p in points {
        let plus = f.flow(p, step, steps)?;
        let minus = f.flow(p, -step, steps)?;
        let slope = (d.g(&plus) - d.g(&minus)) / (2.0 * step);
        let field = f.eval(p);
        let expected = if field == [0.0, 0.0] { 0.0 } else { -norm2(&d.grad(p)) };
        entries.push(DescentEntry { point: *p, slope, expected, error: (slope - expected).abs() });
    }
    let max_error = entries.iter().map(|e| e.error).fold(0.0, f64::max);
    let all_negative = entries.iter().filter(|e| e.expected < 0.0).all(|e| e.slope < 0.0);
    Ok(DescentReport { step, entries, max_error, all_negative })
}

/// Step-halving errors of the flow against a reference run with 64× the
/// finest step count, with successive ratios and the log-log slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConvergence {
    pub steps: Vec<usize>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    pub order: Option<f64>,
}

pub fn flow_convergence(f: &FlowField, y: &[f64; 2], t: f64, steps: &[usize]) -> Result<FlowConvergence> {
    let finest = *steps.iter().max().ok_or_else(|| Error::Input("no step counts".into()))?;
    let reference = f.flow(y, t, 64 * finest)?;
    let errors = steps
        .iter()
        .map(|&n| {
            let x = f.flow(y, t, n)?;
            Ok(norm2(&[x[0] - reference[0], x[1] - reference[1]]))
        })
        .collect::<Result<Vec<f64>>>()?;
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let hs: Vec<f64> = steps.iter().map(|n| t.abs() / *n as f64).collect();
    Ok(FlowConvergence { steps: steps.to_vec(), order: loglog_slope(&hs, &errors), errors, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::suite_rng;

    #[test]
    fn normals() {
        let disc = LevelSetDomain::disc(1.0);
        assert_eq!(inner_normal(&disc, &[1.0, 0.0]).unwrap(), [-1.0, 0.0]);
        let ell = LevelSetDomain::ellipse(2.0, 1.0);
        assert_eq!(inner_normal(&ell, &[2.0, 0.0]).unwrap(), [-1.0, 0.0]);
        assert!(inner_normal(&disc, &[0.5, 0.0]).is_err());
        let mut rng = suite_rng(30, "normals");
        for d in [disc, ell, LevelSetDomain::peanut()] {
            let scaled = d.clone().with_scale(5.0).unwrap();
            for y in boundary_samples(&d, 50, &mut rng).unwrap() {
                let n = inner_normal(&d, &y).unwrap();
                assert!((norm2(&n) - 1.0).abs() < 1e-15);
                let grad = d.grad(&y);
                assert!(n[0] * grad[0] + n[1] * grad[1] < 0.0);
                assert!(d.g(&[y[0] + 1e-4 * n[0], y[1] + 1e-4 * n[1]]) < d.g(&y));
                let m = inner_normal(&scaled, &y);
                if let Ok(m) = m {
                    assert!((m[0] - n[0]).abs() < 1e-12 && (m[1] - n[1]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn radial_flow_and_fixed_points() {
        let f = FlowField::standard(LevelSetDomain::disc(1.0)).unwrap();
        let x = f.flow(&[1.0, 0.0], 0.1, 64).unwrap();
        assert!((x[0] - 0.9).abs() < 1e-12 && x[1].abs() < 1e-15);
        assert_eq!(f.flow(&[0.05, 0.0], 0.7, 32).unwrap(), [0.05, 0.0]);
        assert_eq!(f.flow(&[0.3, 0.2], 0.0, 16).unwrap(), [0.3, 0.2]);
        assert!(f.flow(&[1.0, 0.0], 0.1, 8).is_err());
    }

    #[test]
    fn group_law_and_duality() {
        let f = FlowField::standard(LevelSetDomain::ellipse(2.0, 1.0)).unwrap();
        let mut rng = suite_rng(31, "flow-group");
        for y in boundary_samples(f.domain(), 20, &mut rng).unwrap() {
            let one = f.flow(&y, 0.15, 256).unwrap();
            let two = f.flow(&f.flow(&y, 0.05, 256).unwrap(), 0.1, 256).unwrap();
            assert!(norm2(&[one[0] - two[0], one[1] - two[1]]) < 1e-8);
            let back = f.flow(&f.flow(&y, 0.1, 256).unwrap(), -0.1, 256).unwrap();
            assert!(norm2(&[back[0] - y[0], back[1] - y[1]]) < 1e-6);
        }
    }

    #[test]
    fn shrink_certificates() {
        let mut rng = suite_rng(32, "shrink");
        for d in [LevelSetDomain::disc(1.0), LevelSetDomain::ellipse(2.0, 1.0), LevelSetDomain::peanut()] {
            let f = FlowField::standard(d.clone()).unwrap();
            let samples = boundary_samples(&d, 200, &mut rng).unwrap();
            let c = shrink_domain(&f, 0.1, &samples, 64).unwrap();
            assert!(c.passed && c.margin > 0.0, "{} {c:?}", d.name());
            let e = shrink_domain(&f, -0.1, &samples, 64).unwrap();
            assert!(e.margin > 0.0, "{}", d.name());
            assert!(shrink_domain(&f, 0.0, &samples, 64).is_err());
        }
        // Radial prediction for the disc: g ≈ (1 − t0)² − 1.
        let f = FlowField::standard(LevelSetDomain::disc(1.0)).unwrap();
        let c = shrink_domain(&f, 0.1, &[[0.0, 1.0]], 64).unwrap();
        assert!((c.margin - (1.0 - 0.81)).abs() < 1e-12);
    }

    #[test]
    fn descent_slopes() {
        let f = FlowField::standard(LevelSetDomain::disc(1.0)).unwrap();
        let r = monotone_descent_check(&f, &[[1.0, 0.0], [0.0, 0.0]], 1e-4, 16).unwrap();
        assert!((r.entries[0].slope + 2.0).abs() < 1e-4);
        assert_eq!(r.entries[1].slope, 0.0);
        let mut rng = suite_rng(33, "descent");
        let f = FlowField::standard(LevelSetDomain::ellipse(2.0, 1.0)).unwrap();
        let pts = boundary_samples(f.domain(), 100, &mut rng).unwrap();
        let r = monotone_descent_check(&f, &pts, 1e-4, 16).unwrap();
        assert!(r.all_negative && r.max_error < 1e-4, "{}", r.max_error);
    }

    #[test]
    fn flow_is_fourth_order() {
        let f = FlowField::standard(LevelSetDomain::ellipse(2.0, 1.0)).unwrap();
        let c = flow_convergence(&f, &[1.2, 0.8 * (1.0f64 - 0.36).sqrt()], 0.3, &[16, 32, 64]).unwrap();
        for r in &c.ratios {
            assert!((r - 16.0).abs() < 4.0, "{c:?}");
        }
    }
}
