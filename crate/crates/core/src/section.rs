//! Vector-valued sections `γ ∈ F(M, ℝⁿ)` stored chart-wise on witness windows.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::atlas::Atlas;
use crate::error::{Error, Result};
use crate::probe::loglog_slope;
use crate::sobolev::{
    nemytskij_at, restrict, BandlimitedField, ExtensionOperator, Interpolation, SampledField, SmoothMap, SobolevOrder,
    PERIOD,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// A section: one sampled field per chart, `γ_j = γ ∘ φ_j⁻¹ |_{W_j}`.
#[derive(Clone, Debug)]
pub struct Section {
    atlas: Arc<Atlas>,
    components: usize,
    pieces: Vec<SampledField>,
    tolerance: f64,
}

/// Largest disagreement between chart pieces on a shared manifold node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub defect: f64,
    pub chart_i: usize,
    pub chart_j: usize,
    pub point: Vec<f64>,
}

fn check_pieces(atlas: &Atlas, pieces: &[SampledField]) -> Result<usize> {
    if pieces.len() != atlas.len() {
        return Err(Error::Input(format!("{} pieces for an atlas of {} charts", pieces.len(), atlas.len())));
    }
    let n = pieces[0].components();
    for (j, p) in pieces.iter().enumerate() {
        if p.domain() != atlas.charts()[j].grid() {
            return Err(Error::Input(format!("piece {j} does not live on the window grid of chart {j}")));
        }
        if p.components() != n {
            return Err(Error::Input(format!("piece {j} has {} components, expected {n}", p.components())));
        }
    }
    Ok(n)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Worst disagreement `‖γ_i(φ_i(x)) − γ_j(φ_j(x))‖` over shared nodes.
pub fn worst_incompatibility(pieces: &[SampledField], atlas: &Atlas) -> Result<Defect> {
    check_pieces(atlas, pieces)?;
    let mut worst = Defect { defect: 0.0, chart_i: 0, chart_j: 0, point: Vec::new() };
    for i in 0..atlas.len() {
        for j in i + 1..atlas.len() {
            for (p, q) in atlas.overlap_pairs(i, j) {
                let d = dist(pieces[i].value(p), pieces[j].value(q));
                if d > worst.defect || worst.point.is_empty() {
                    worst =
                        Defect { defect: d.max(worst.defect), chart_i: i, chart_j: j, point: atlas.node_point(i, p) };
                }
            }
        }
    }
    Ok(worst)
}

/// `max ‖γ_i(φ_i(x)) − γ_j(φ_j(x))‖` over overlap nodes; zero for a single chart.
pub fn compatibility_defect(pieces: &[SampledField], atlas: &Atlas) -> Result<f64> {
    Ok(worst_incompatibility(pieces, atlas)?.defect)
}

/// Glues compatible chart pieces through the partition of unity,
/// `γ(x) = Σ_i h_i(x) γ_i(φ_i(x))`, evaluated exactly at nodes.
pub fn glue(pieces: &[SampledField], atlas: Arc<Atlas>, tolerance: f64) -> Result<Section> {
    let n = check_pieces(&atlas, pieces)?;
    let worst = worst_incompatibility(pieces, &atlas)?;
    if worst.defect > tolerance {
        return Err(Error::Incompatible {
            defect: worst.defect,
            chart_i: worst.chart_i,
            chart_j: worst.chart_j,
            point: worst.point,
        });
    }
    let mut glued = Vec::with_capacity(atlas.len());
    for (j, piece) in pieces.iter().enumerate() {
        let grid = piece.domain();
        let mut values = vec![0.0; grid.len() * n];
        for q in 0..grid.len() {
            let out = &mut values[q * n..(q + 1) * n];
            for l in atlas.links(j, q) {
                for (o, v) in out.iter_mut().zip(pieces[l.chart].value(l.node)) {
                    *o += l.weight * v;
                }
            }
        }
        let mut field = SampledField::new(grid.clone(), n, values)?;
        if let Some(rep) = piece.spectral() {
            field = field.with_spectral(Some(rep.clone()));
        }
        glued.push(field);
    }
    Ok(Section { atlas, components: n, pieces: glued, tolerance })
}

/// Open target sets in `ℝⁿ` with distance-to-complement queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValueRegion {
    /// `{y : ‖y − c‖ < r}`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `∏ (lo_a, hi_a)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{y : ‖y − c‖ > r}`.
    BallComplement { center: Vec<f64>, radius: f64 },
    /// All of `ℝⁿ`.
    Whole,
}

impl ValueRegion {
    pub fn dim(&self) -> Option<usize> {
        match self {
            ValueRegion::Ball { center, .. } | ValueRegion::BallComplement { center, .. } => Some(center.len()),
            ValueRegion::Box { lo, .. } => Some(lo.len()),
            ValueRegion::Whole => None,
        }
    }

    /// Distance from `y` to `ℝⁿ ∖ U`, zero outside `U`.
    pub fn distance_to_complement(&self, y: &[f64]) -> f64 {
        match self {
            ValueRegion::Ball { center, radius } => (radius - dist(y, center)).max(0.0),
            ValueRegion::BallComplement { center, radius } => (dist(y, center) - radius).max(0.0),
            ValueRegion::Box { lo, hi } => y
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| (v - a).min(b - v))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            ValueRegion::Whole => f64::INFINITY,
        }
    }
}

/// `inf_x dist(γ(x), ℝⁿ ∖ U)` over the stored nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessMargin {
    pub margin: f64,
    pub chart: usize,
    pub node: usize,
}

impl OpennessMargin {
    pub fn is_member(&self) -> bool {
        self.margin > 0.0
    }
}

impl Section {
    fn assemble(atlas: Arc<Atlas>, pieces: Vec<SampledField>, tolerance: f64) -> Result<Self> {
        let components = check_pieces(&atlas, &pieces)?;
        Ok(Section { atlas, components, pieces, tolerance })
    }

    /// Chart pieces taken as they are, rejected if they disagree on an
    /// overlap by more than `tolerance`.
    pub fn from_pieces(atlas: Arc<Atlas>, pieces: Vec<SampledField>, tolerance: f64) -> Result<Self> {
        let worst = worst_incompatibility(&pieces, &atlas)?;
        if worst.defect > tolerance {
            return Err(Error::Incompatible {
                defect: worst.defect,
                chart_i: worst.chart_i,
                chart_j: worst.chart_j,
                point: worst.point,
            });
        }
        Self::assemble(atlas, pieces, tolerance)
    }

    /// The section of a global band-limited field on the torus; each piece
    /// keeps the exact pulled-back polynomial as its representative.
    pub fn from_global_field(atlas: Arc<Atlas>, a: &BandlimitedField) -> Result<Self> {
        if a.dim() != atlas.dim() {
            return Err(Error::Shape("field and atlas dimensions differ".into()));
        }
        let pieces = atlas
            .charts()
            .iter()
            .map(|c| restrict(&a.affine_pullback(c.sign(), c.shift())?, c.grid()))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(atlas, pieces, DEFAULT_TOLERANCE)
    }

    /// Samples `f` at the manifold point behind every node.
    pub fn from_fn(atlas: Arc<Atlas>, components: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let pieces = atlas
            .charts()
            .iter()
            .map(|c| SampledField::from_fn(c.grid().clone(), components, |u| f(&c.from_chart(u))))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(atlas, pieces, DEFAULT_TOLERANCE)
    }

    pub fn constant(atlas: Arc<Atlas>, value: &[f64]) -> Result<Self> {
        let a = BandlimitedField::constant(atlas.dim(), 0, value)?;
        Self::from_global_field(atlas, &a)
    }

    pub fn zeros(atlas: Arc<Atlas>, components: usize) -> Result<Self> {
        Self::constant(atlas, &vec![0.0; components])
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn atlas(&self) -> &Arc<Atlas> {
        &self.atlas
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn pieces(&self) -> &[SampledField] {
        &self.pieces
    }

    pub fn piece(&self, chart: usize) -> &SampledField {
        &self.pieces[chart]
    }

    /// Interpolation used between nodes of each piece.
    pub fn interpolation(&self) -> Vec<Interpolation> {
        self.pieces.iter().map(|p| p.interpolation()).collect()
    }

    /// The tuple `(γ ∘ φ_j⁻¹ |_{W_j})_j`.
    pub fn theta_embed(&self) -> Vec<SampledField> {
        self.pieces.clone()
    }

    pub fn compatibility_defect(&self) -> f64 {
        compatibility_defect(&self.pieces, &self.atlas).expect("pieces conform to the atlas")
    }

    fn same_atlas(&self, other: &Section) -> Result<()> {
        if !Arc::ptr_eq(&self.atlas, &other.atlas) && self.atlas.hash() != other.atlas.hash() {
            return Err(Error::Input("sections live on different atlases".into()));
        }
        if self.components != other.components {
            return Err(Error::Input(format!("sections have {} and {} components", self.components, other.components)));
        }
        Ok(())
    }

    pub fn linear_combination(&self, a: f64, other: &Section, b: f64) -> Result<Section> {
        self.same_atlas(other)?;
        let pieces = self
            .pieces
            .iter()
            .zip(&other.pieces)
            .map(|(p, q)| p.linear_combination(a, q, b))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(self.atlas.clone(), pieces, self.tolerance.max(other.tolerance))
    }

    pub fn scale(&self, a: f64) -> Section {
        Section { pieces: self.pieces.iter().map(|p| p.scale(a)).collect(), ..self.clone() }
    }

    /// Largest nodewise distance between two sections.
    pub fn max_node_distance(&self, other: &Section) -> Result<f64> {
        self.same_atlas(other)?;
        let mut worst: f64 = 0.0;
        for (p, q) in self.pieces.iter().zip(&other.pieces) {
            for i in 0..p.len() {
                worst = worst.max(dist(p.value(i), q.value(i)));
            }
        }
        Ok(worst)
    }

    /// `γ_j(φ_j(x))` through a given chart.
    pub fn point_eval_in_chart(&self, chart: usize, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.atlas.chart(chart)?;
        let u = c.to_chart(x);
        if !c.window().contains_open(&u) {
            return Err(Error::Domain(format!("{x:?} is not in the window of chart {chart}")));
        }
        self.pieces[chart].eval(&u)
    }

    /// The chart whose window contains `x` deepest.
    pub fn best_chart(&self, x: &[f64]) -> Result<usize> {
        let (j, depth) = self
            .atlas
            .charts()
            .iter()
            .map(|c| (c.index(), c.window().depth(&c.to_chart(x))))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        if depth <= 0.0 {
            return Err(Error::Domain(format!("{x:?} is not covered by any witness window")));
        }
        Ok(j)
    }

    /// `γ(x)` at a manifold point.
    pub fn point_eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.atlas.dim() {
            return Err(Error::Shape("point dimension differs from the atlas".into()));
        }
        let x: Vec<f64> = x.iter().map(|v| crate::sobolev::wrap(*v)).collect();
        self.point_eval_in_chart(self.best_chart(&x)?, &x)
    }

    /// Largest Euclidean norm of a stored node value.
    pub fn node_sup_norm(&self) -> f64 {
        self.pieces.iter().map(|p| p.sup_norm()).fold(0.0, f64::max)
    }

    /// `sup_x ‖γ(x)‖` of the evaluated section: a scan on a lattice four
    /// times finer than the atlas, refined by coordinate golden-section
    /// searches around the best scan points, and never below the node maximum.
    pub fn sup_norm(&self) -> Result<f64> {
        let m = self.atlas.dim();
        let per = 4 * self.atlas.resolution();
        let h = PERIOD / per as f64;
        let norm_at = |x: &[f64]| -> Result<f64> { Ok(self.point_eval(x)?.iter().map(|v| v * v).sum::<f64>().sqrt()) };
        let total = per.pow(m as u32);
        let mut scan = Vec::with_capacity(total);
        for i in 0..total {
            let x: Vec<f64> =
                if m == 1 { vec![h * i as f64] } else { vec![h * (i / per) as f64, h * (i % per) as f64] };
            scan.push((norm_at(&x)?, x));
        }
        scan.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = self.node_sup_norm().max(scan[0].0);
        for (_, start) in scan.iter().take(4) {
            let mut x = start.clone();
            for _ in 0..3 {
                for a in 0..m {
                    let (mut lo, mut hi) = (x[a] - h, x[a] + h);
                    let g = 0.5 * (5f64.sqrt() - 1.0);
                    for _ in 0..40 {
                        let c = hi - g * (hi - lo);
                        let d = lo + g * (hi - lo);
                        let mut xc = x.clone();
                        xc[a] = c;
                        let mut xd = x.clone();
                        xd[a] = d;
                        if norm_at(&xc)? > norm_at(&xd)? {
                            hi = d;
                        } else {
                            lo = c;
                        }
                    }
                    x[a] = 0.5 * (lo + hi);
                }
            }
            best = best.max(norm_at(&x)?);
        }
        Ok(best)
    }

    /// Membership margin of the section's values in the open set `U`.
    pub fn open_margin(&self, region: &ValueRegion) -> Result<OpennessMargin> {
        if let Some(d) = region.dim() {
            if d != self.components {
                return Err(Error::Shape(format!("region in R^{d} for a section in R^{}", self.components)));
            }
        }
        let mut best = OpennessMargin { margin: f64::INFINITY, chart: 0, node: 0 };
        for (j, p) in self.pieces.iter().enumerate() {
            for q in 0..p.len() {
                let d = region.distance_to_complement(p.value(q));
                if d < best.margin {
                    best = OpennessMargin { margin: d, chart: j, node: q };
                }
            }
        }
        Ok(best)
    }

    fn require_margin(&self, region: &ValueRegion) -> Result<()> {
        let m = self.open_margin(region)?;
        if !m.is_member() {
            return Err(Error::Domain(format!(
                "section leaves the target set at node {} of chart {}",
                m.node, m.chart
            )));
        }
        Ok(())
    }

    /// `f_*(γ) = f ∘ (id_M, γ)`, applied chart-wise with the manifold point
    /// recovered through `φ_j⁻¹`.
    pub fn pushforward(&self, f: &SmoothMap, region: &ValueRegion) -> Result<Section> {
        self.require_margin(region)?;
        let pieces = self
            .atlas
            .charts()
            .iter()
            .zip(&self.pieces)
            .map(|(c, p)| nemytskij_at(f, p, |u| c.from_chart(u)))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(self.atlas.clone(), pieces, self.tolerance)
    }

    /// `x ↦ d₂f(x, γ(x), η(x))`.
    pub fn pushforward_derivative(&self, f: &SmoothMap, eta: &Section, region: &ValueRegion) -> Result<Section> {
        self.same_atlas(eta)?;
        self.require_margin(region)?;
        if f.input_dim() != self.components {
            return Err(Error::Shape(format!(
                "outer map '{}' takes {} components, section has {}",
                f.name(),
                f.input_dim(),
                self.components
            )));
        }
        let (n, k) = (f.input_dim(), f.output_dim());
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for ((c, g), e) in self.atlas.charts().iter().zip(&self.pieces).zip(&eta.pieces) {
            let grid = g.domain();
            let mut values = Vec::with_capacity(grid.len() * k);
            for q in 0..grid.len() {
                let x = c.from_chart(&grid.coords(q));
                let jac = f.d2(&x, g.value(q));
                let v = e.value(q);
                values.extend((0..k).map(|r| (0..n).map(|s| jac[r * n + s] * v[s]).sum::<f64>()));
            }
            pieces.push(SampledField::new(grid.clone(), k, values)?);
        }
        Self::assemble(self.atlas.clone(), pieces, self.tolerance)
    }

    /// Components `range` of the section.
    pub fn split(&self, range: std::ops::Range<usize>) -> Result<Section> {
        if range.is_empty() || range.end > self.components {
            return Err(Error::Input(format!("component range {range:?} of {}", self.components)));
        }
        let n = self.components;
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let values = p.values().chunks(n).flat_map(|v| v[range.clone()].to_vec()).collect();
                let rep = p.spectral().and_then(|s| {
                    BandlimitedField::stack(&range.clone().map(|c| s.component(c)).collect::<Result<Vec<_>>>().ok()?)
                        .ok()
                });
                Ok(SampledField::new(p.domain().clone(), range.len(), values)?.with_spectral(rep))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(self.atlas.clone(), pieces, self.tolerance)
    }

    /// `(γ, η) ↦ (γ, η)` into the product `ℝ^{n₁+n₂}`.
    pub fn concat(parts: &[Section]) -> Result<Section> {
        let first = parts.first().ok_or_else(|| Error::Input("nothing to concatenate".into()))?;
        for p in parts {
            if !Arc::ptr_eq(&first.atlas, &p.atlas) && first.atlas.hash() != p.atlas.hash() {
                return Err(Error::Input("sections live on different atlases".into()));
            }
        }
        let n: usize = parts.iter().map(|p| p.components).sum();
        let mut pieces = Vec::with_capacity(first.atlas.len());
        for j in 0..first.atlas.len() {
            let grid = first.pieces[j].domain();
            let mut values = Vec::with_capacity(grid.len() * n);
            for q in 0..grid.len() {
                for p in parts {
                    values.extend_from_slice(p.pieces[j].value(q));
                }
            }
            let reps: Option<Vec<BandlimitedField>> = parts.iter().map(|p| p.pieces[j].spectral().cloned()).collect();
            let rep = reps.and_then(|r| BandlimitedField::stack(&r).ok());
            pieces.push(SampledField::new(grid.clone(), n, values)?.with_spectral(rep));
        }
        Self::assemble(first.atlas.clone(), pieces, first.tolerance)
    }
}

/// The chart-wise Hilbert structure: `⟨γ, η⟩ = Σ_j ⟨E γ_j, E η_j⟩_{H^s}`
/// with `E` the minimum-norm extension at cutoff `N` on each window.
///
/// Windows are sampled more finely than `2N+1` nodes per axis, so each
/// chart term interpolates on the decimated node sub-lattice of
/// [`ExtensionOperator::decimated`].
pub struct HilbertStructure {
    atlas: Arc<Atlas>,
    order: SobolevOrder,
    modes: usize,
    operators: Vec<ExtensionOperator>,
}

impl HilbertStructure {
    pub fn new(atlas: Arc<Atlas>, order: SobolevOrder, modes: usize) -> Result<Self> {
        let operators = atlas
            .charts()
            .iter()
            .map(|c| ExtensionOperator::decimated(c.grid(), order, modes))
            .collect::<Result<Vec<_>>>()?;
        Ok(HilbertStructure { atlas, order, modes, operators })
    }

    pub fn order(&self) -> SobolevOrder {
        self.order
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn inner(&self, gamma: &Section, eta: &Section) -> Result<f64> {
        gamma.same_atlas(eta)?;
        if gamma.atlas.hash() != self.atlas.hash() {
            return Err(Error::Input("section atlas differs from the Hilbert structure's".into()));
        }
        let mut total = 0.0;
        for (j, op) in self.operators.iter().enumerate() {
            total += op.inner(&gamma.pieces[j], &eta.pieces[j])?;
        }
        Ok(total)
    }

    pub fn norm(&self, gamma: &Section) -> Result<f64> {
        Ok(self.inner(gamma, gamma)?.max(0.0).sqrt())
    }
}

/// One-shot `⟨γ, η⟩` of the chart-wise Hilbert structure.
pub fn hilbert_inner(gamma: &Section, eta: &Section, s: SobolevOrder, modes: usize) -> Result<f64> {
    HilbertStructure::new(gamma.atlas.clone(), s, modes)?.inner(gamma, eta)
}

/// Central-difference convergence of `f_*` along `η` against the closed-form
/// derivative section: returns the log-log slope and the error per step.
pub fn pushforward_fd_slope(
    f: &SmoothMap,
    gamma: &Section,
    eta: &Section,
    region: &ValueRegion,
    epsilons: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let exact = gamma.pushforward_derivative(f, eta, region)?;
    let mut errors = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let plus = gamma.linear_combination(1.0, eta, eps)?.pushforward(f, &ValueRegion::Whole)?;
        let minus = gamma.linear_combination(1.0, eta, -eps)?.pushforward(f, &ValueRegion::Whole)?;
        let fd = plus.linear_combination(0.5 / eps, &minus, -0.5 / eps)?;
        errors.push(fd.max_node_distance(&exact)?);
    }
    let slope = loglog_slope(epsilons, &errors)
        .ok_or_else(|| Error::Domain("finite differences matched the derivative exactly".into()))?;
    Ok((slope, errors))
}
