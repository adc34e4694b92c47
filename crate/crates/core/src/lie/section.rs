use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::group::{MatrixGroup, PROJECTION_THRESHOLD};
use crate::atlas::Atlas;
use crate::error::{Error, Result};
use crate::probe::loglog_slope;
use crate::section::{Section, DEFAULT_TOLERANCE};
use crate::sobolev::{BandlimitedField, SampledField};

/// A section with values in algebra coordinates.
pub type AlgebraSection = Section;

/// `γ ∈ F(M, G)`: one group element per window node of every chart.
#[derive(Clone, Debug)]
pub struct GroupSection {
    atlas: Arc<Atlas>,
    group: MatrixGroup,
    pieces: Vec<Vec<DMatrix<f64>>>,
    tolerance: f64,
    projections: usize,
}

impl GroupSection {
    fn build(atlas: Arc<Atlas>, group: MatrixGroup, pieces: Vec<Vec<DMatrix<f64>>>, projections: usize) -> Self {
        GroupSection { atlas, group, pieces, tolerance: DEFAULT_TOLERANCE, projections }
    }

    /// Matrices given per chart node, checked against the group relations
    /// (1e−10) and for overlap compatibility.
    pub fn from_pieces(
        atlas: Arc<Atlas>,
        group: MatrixGroup,
        pieces: Vec<Vec<DMatrix<f64>>>,
        tolerance: f64,
    ) -> Result<Self> {
        if pieces.len() != atlas.len() {
            return Err(Error::Input(format!("{} pieces for {} charts", pieces.len(), atlas.len())));
        }
        let d = group.matrix_dim();
        for (j, p) in pieces.iter().enumerate() {
            if p.len() != atlas.charts()[j].grid().len() {
                return Err(Error::Input(format!("piece {j} has {} nodes", p.len())));
            }
            for (q, g) in p.iter().enumerate() {
                if g.shape() != (d, d) {
                    return Err(Error::Shape(format!(
                        "chart {j} node {q}: {:?} matrix for {}",
                        g.shape(),
                        group.name()
                    )));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { node: q, context: format!("chart {j}") });
                }
                let defect = group.relation_defect(g);
                if defect > 1e-10 {
                    return Err(Error::Input(format!(
                        "chart {j} node {q} violates the {} relations by {defect:.3e}",
                        group.name()
                    )));
                }
            }
        }
        let s = GroupSection { atlas, group, pieces, tolerance, projections: 0 };
        let (defect, i, j, point) = s.worst_incompatibility();
        if defect > tolerance {
            return Err(Error::Incompatible { defect, chart_i: i, chart_j: j, point });
        }
        Ok(s)
    }

    pub(crate) fn from_pieces_unchecked(
        atlas: Arc<Atlas>,
        group: MatrixGroup,
        pieces: Vec<Vec<DMatrix<f64>>>,
        tolerance: f64,
    ) -> Self {
        let mut s = Self::build(atlas, group, pieces, 0);
        s.tolerance = tolerance;
        s
    }

    pub(crate) fn add_projections(&mut self, count: usize) {
        self.projections += count;
    }

    pub fn identity(atlas: Arc<Atlas>, group: MatrixGroup) -> Self {
        let pieces = atlas.charts().iter().map(|c| vec![group.identity(); c.grid().len()]).collect();
        Self::build(atlas, group, pieces, 0)
    }

    /// Group element `f(x)` at the manifold point behind every node.
    pub fn from_fn(atlas: Arc<Atlas>, group: MatrixGroup, f: impl Fn(&[f64]) -> DMatrix<f64>) -> Result<Self> {
        let pieces = atlas
            .charts()
            .iter()
            .map(|c| (0..c.grid().len()).map(|q| f(&c.from_chart(&c.grid().coords(q)))).collect())
            .collect();
        Self::from_pieces(atlas, group, pieces, DEFAULT_TOLERANCE)
    }

    pub fn atlas(&self) -> &Arc<Atlas> {
        &self.atlas
    }

    pub fn group(&self) -> MatrixGroup {
        self.group
    }

    pub fn pieces(&self) -> &[Vec<DMatrix<f64>>] {
        &self.pieces
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Number of re-projections onto the group performed while building
    /// this section (cumulative over the operations that produced it).
    pub fn projections(&self) -> usize {
        self.projections
    }

    pub fn value(&self, chart: usize, node: usize) -> &DMatrix<f64> {
        &self.pieces[chart][node]
    }

    /// `ev_x(γ)` for a manifold point `x` that is a lattice node.
    pub fn eval_at_node_point(&self, x: &[f64]) -> Result<&DMatrix<f64>> {
        for c in self.atlas.charts() {
            if let Some(q) = c.grid().locate(&c.to_chart(x)) {
                return Ok(&self.pieces[c.index()][q]);
            }
        }
        Err(Error::Domain(format!("{x:?} is not a node of any chart window")))
    }

    fn check_same(&self, other: &GroupSection) -> Result<()> {
        if self.group != other.group {
            return Err(Error::Input(format!("group mismatch: {} vs {}", self.group.name(), other.group.name())));
        }
        if !Arc::ptr_eq(&self.atlas, &other.atlas) && self.atlas.hash() != other.atlas.hash() {
            return Err(Error::Input("group sections live on different atlases".into()));
        }
        Ok(())
    }

    fn check_algebra(&self, xi: &Section) -> Result<()> {
        if !Arc::ptr_eq(&self.atlas, xi.atlas()) && self.atlas.hash() != xi.atlas().hash() {
            return Err(Error::Input("algebra section lives on a different atlas".into()));
        }
        if xi.components() != self.group.algebra_dim() {
            return Err(Error::Input(format!(
                "algebra section has {} components, {} needs {}",
                xi.components(),
                self.group.name(),
                self.group.algebra_dim()
            )));
        }
        Ok(())
    }

    /// Re-projects drifted elements, counting and logging each correction.
    fn settle(group: MatrixGroup, g: DMatrix<f64>, count: &mut usize, chart: usize, node: usize) -> DMatrix<f64> {
        let defect = group.relation_defect(&g);
        if defect > PROJECTION_THRESHOLD {
            *count += 1;
            log::info!(
                "projected {} element at chart {chart} node {node} (relation defect {defect:.3e})",
                group.name()
            );
            group.project(&g)
        } else {
            g
        }
    }

    fn map_nodes(&self, f: impl Fn(usize, usize, &DMatrix<f64>) -> DMatrix<f64>) -> GroupSection {
        let mut count = self.projections;
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(j, p)| {
                p.iter().enumerate().map(|(q, g)| Self::settle(self.group, f(j, q, g), &mut count, j, q)).collect()
            })
            .collect();
        GroupSection { pieces, projections: count, ..self.clone() }
    }

    /// `γ₁γ₂ = μ_G ∘ (γ₁, γ₂)`.
    pub fn multiply(&self, other: &GroupSection) -> Result<GroupSection> {
        self.check_same(other)?;
        let mut out = self.map_nodes(|j, q, g| g * &other.pieces[j][q]);
        out.projections += other.projections;
        Ok(out)
    }

    /// `γ⁻¹ = η_G ∘ γ`.
    pub fn invert(&self) -> GroupSection {
        self.map_nodes(|_, _, g| self.group.inverse(g))
    }

    /// Nodewise logarithm; fails at the first node outside the chart.
    pub fn log_section(&self) -> Result<AlgebraSection> {
        let mut fields = Vec::with_capacity(self.pieces.len());
        for (j, p) in self.pieces.iter().enumerate() {
            let mut values = Vec::with_capacity(p.len() * self.group.algebra_dim());
            for (q, g) in p.iter().enumerate() {
                let v = self.group.try_log(g).map_err(|reason| Error::ChartDomain { chart: j, node: q, reason })?;
                values.extend(v);
            }
            fields.push(SampledField::new(self.atlas.charts()[j].grid().clone(), self.group.algebra_dim(), values)?);
        }
        crate::section::glue(&fields, self.atlas.clone(), self.tolerance)
    }

    /// `x ↦ Ad_{γ(x)} η(x)`.
    pub fn adjoint_operator(&self, eta: &AlgebraSection) -> Result<AlgebraSection> {
        self.check_algebra(eta)?;
        let k = self.group.algebra_dim();
        let fields = self
            .pieces
            .iter()
            .zip(eta.pieces())
            .map(|(p, e)| {
                let values = p.iter().enumerate().flat_map(|(q, g)| self.group.adjoint(g, e.value(q))).collect();
                SampledField::new(e.domain().clone(), k, values)
            })
            .collect::<Result<Vec<_>>>()?;
        crate::section::glue(&fields, self.atlas.clone(), f64::INFINITY).map(|s| s.with_tolerance(self.tolerance))
    }

    /// Largest nodewise `‖g − h‖_max`.
    pub fn max_distance(&self, other: &GroupSection) -> Result<f64> {
        self.check_same(other)?;
        let mut worst: f64 = 0.0;
        for (p, r) in self.pieces.iter().zip(&other.pieces) {
            for (g, h) in p.iter().zip(r) {
                worst = worst.max((g - h).amax());
            }
        }
        Ok(worst)
    }

    /// Largest relation defect over all nodes.
    pub fn relation_defect(&self) -> f64 {
        self.pieces.iter().flatten().map(|g| self.group.relation_defect(g)).fold(0.0, f64::max)
    }

    fn worst_incompatibility(&self) -> (f64, usize, usize, Vec<f64>) {
        let mut worst = (0.0, 0, 0, Vec::new());
        for i in 0..self.atlas.len() {
            for j in i + 1..self.atlas.len() {
                for (p, q) in self.atlas.overlap_pairs(i, j) {
                    let d = (&self.pieces[i][p] - &self.pieces[j][q]).amax();
                    if d > worst.0 {
                        worst = (d, i, j, self.atlas.node_point(i, p));
                    }
                }
            }
        }
        worst
    }

    pub fn compatibility_defect(&self) -> f64 {
        self.worst_incompatibility().0
    }
}

/// `exp_G ∘ ξ`.
pub fn exp_section(group: MatrixGroup, xi: &AlgebraSection) -> Result<GroupSection> {
    let atlas = xi.atlas().clone();
    let probe = GroupSection::identity(atlas.clone(), group);
    probe.check_algebra(xi)?;
    let mut count = 0;
    let pieces = xi
        .pieces()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            (0..f.len()).map(|q| GroupSection::settle(group, group.exp(f.value(q)), &mut count, j, q)).collect()
        })
        .collect();
    let mut out = GroupSection::build(atlas, group, pieces, count);
    out.tolerance = xi.tolerance();
    Ok(out)
}

/// The pointwise bracket `[ξ, η](x) = [ξ(x), η(x)]_𝔤`.
pub fn bracket(group: MatrixGroup, xi: &AlgebraSection, eta: &AlgebraSection) -> Result<AlgebraSection> {
    let probe = GroupSection::identity(xi.atlas().clone(), group);
    probe.check_algebra(xi)?;
    probe.check_algebra(eta)?;
    let k = group.algebra_dim();
    let fields = xi
        .pieces()
        .iter()
        .zip(eta.pieces())
        .map(|(a, b)| {
            let values = (0..a.len()).flat_map(|q| group.bracket(a.value(q), b.value(q))).collect();
            SampledField::new(a.domain().clone(), k, values)
        })
        .collect::<Result<Vec<_>>>()?;
    crate::section::glue(&fields, xi.atlas().clone(), f64::INFINITY).map(|s| s.with_tolerance(xi.tolerance()))
}

fn product_log(group: MatrixGroup, a: &AlgebraSection, b: &AlgebraSection, t: f64) -> Result<AlgebraSection> {
    let ea = exp_section(group, &a.scale(t))?;
    let eb = exp_section(group, &b.scale(t))?;
    ea.multiply(&eb)?.log_section()
}

/// `sup_x ‖log(e^{tξ} e^{tη}) − t(ξ+η) − (t²/2)[ξ,η]‖`.
pub fn bch_residual(group: MatrixGroup, xi: &AlgebraSection, eta: &AlgebraSection, t: f64) -> Result<f64> {
    let z = product_log(group, xi, eta, t)?;
    let br = bracket(group, xi, eta)?;
    let model = xi.linear_combination(t, eta, t)?.linear_combination(1.0, &br, 0.5 * t * t)?;
    z.max_node_distance(&model)
}

/// Residuals of the second-order BCH truncation over `ts` and their log-log slope.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BchProbe {
    pub ts: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: Option<f64>,
}

pub fn bch_order2_probe(group: MatrixGroup, xi: &AlgebraSection, eta: &AlgebraSection, ts: &[f64]) -> Result<BchProbe> {
    let residuals = ts.iter().map(|&t| bch_residual(group, xi, eta, t)).collect::<Result<Vec<_>>>()?;
    // Residuals at rounding level carry no slope information.
    let scale = xi.node_sup_norm().max(eta.node_sup_norm()).max(1.0);
    let meaningful = residuals.iter().all(|r| *r > 1e-13 * scale);
    let slope = if meaningful { loglog_slope(ts, &residuals) } else { None };
    Ok(BchProbe { ts: ts.to_vec(), residuals, slope })
}

/// `(log(e^{tξ}e^{tη}) − log(e^{tη}e^{tξ}))/t²`, which tends to `[ξ, η]`.
pub fn bch_bracket(group: MatrixGroup, xi: &AlgebraSection, eta: &AlgebraSection, t: f64) -> Result<AlgebraSection> {
    let ab = product_log(group, xi, eta, t)?;
    let ba = product_log(group, eta, xi, t)?;
    ab.linear_combination(1.0 / (t * t), &ba, -1.0 / (t * t))
}

/// Random algebra section from a global band-limited field, scaled so its
/// largest node norm is `radius`.
pub fn random_algebra_section<R: Rng + ?Sized>(
    atlas: Arc<Atlas>,
    group: MatrixGroup,
    modes: usize,
    radius: f64,
    rng: &mut R,
) -> Result<AlgebraSection> {
    let a = BandlimitedField::random(atlas.dim(), modes, group.algebra_dim(), 1.0, rng)?;
    let s = Section::from_global_field(atlas, &a)?;
    let sup = s.node_sup_norm();
    Ok(if sup > 0.0 { s.scale(radius / sup) } else { s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::suite_rng;
    use std::f64::consts::PI;

    fn circle() -> Arc<Atlas> {
        Arc::new(Atlas::circle2(33).unwrap())
    }

    #[test]
    fn group_axioms() {
        let atlas = circle();
        let mut rng = suite_rng(13, "group-axioms");
        for g in MatrixGroup::ALL {
            let draw =
                |rng: &mut _| exp_section(g, &random_algebra_section(atlas.clone(), g, 4, 1.0, rng).unwrap()).unwrap();
            let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let e = GroupSection::identity(atlas.clone(), g);
            assert!(a.multiply(&e).unwrap().max_distance(&a).unwrap() < 1e-15);
            assert!(a.multiply(&a.invert()).unwrap().max_distance(&e).unwrap() < 1e-12);
            let l = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let r = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            assert!(l.max_distance(&r).unwrap() < 1e-12);
            assert!(l.compatibility_defect() < 1e-9);
        }
    }

    #[test]
    fn exp_of_zero_and_quarter_turn() {
        let atlas = circle();
        let zero = Section::zeros(atlas.clone(), 3).unwrap();
        let e = exp_section(MatrixGroup::So3, &zero).unwrap();
        assert_eq!(e.max_distance(&GroupSection::identity(atlas.clone(), MatrixGroup::So3)).unwrap(), 0.0);
        let lz = Section::constant(atlas, &[0.0, 0.0, PI / 2.0]).unwrap();
        let r = exp_section(MatrixGroup::So3, &lz).unwrap();
        let m = r.value(0, 0);
        assert!((m[(0, 1)] + 1.0).abs() < 1e-15 && (m[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_rejects_half_turn_naming_node() {
        let atlas = circle();
        let g = GroupSection::from_fn(atlas, MatrixGroup::So3, |x| {
            MatrixGroup::So3.exp(&[0.0, 0.0, PI * (0.5 + 0.5 * x[0].cos())])
        })
        .unwrap();
        match g.log_section() {
            Err(Error::ChartDomain { chart, node, .. }) => {
                let p = g.atlas().node_point(chart, node)[0];
                assert!(p.cos() > 0.9, "{p}");
            }
            other => panic!("expected chart-domain error, got {other:?}"),
        }
    }

    #[test]
    fn conjugation_identity() {
        let atlas = circle();
        let mut rng = suite_rng(14, "conjugation");
        for g in MatrixGroup::ALL {
            let gamma = exp_section(g, &random_algebra_section(atlas.clone(), g, 4, 1.2, &mut rng).unwrap()).unwrap();
            let eta = random_algebra_section(atlas.clone(), g, 4, 0.8, &mut rng).unwrap();
            let lhs = gamma.multiply(&exp_section(g, &eta).unwrap()).unwrap().multiply(&gamma.invert()).unwrap();
            let rhs = exp_section(g, &gamma.adjoint_operator(&eta).unwrap()).unwrap();
            assert!(lhs.max_distance(&rhs).unwrap() < 1e-10, "{}", g.name());
        }
    }

    #[test]
    fn bch_slope_and_bracket() {
        let atlas = circle();
        let mut rng = suite_rng(15, "bch");
        let g = MatrixGroup::So3;
        let xi = random_algebra_section(atlas.clone(), g, 4, 1.0, &mut rng).unwrap();
        let eta = random_algebra_section(atlas.clone(), g, 4, 1.0, &mut rng).unwrap();
        let probe = bch_order2_probe(g, &xi, &eta, &[1e-1, 3e-2, 1e-2]).unwrap();
        assert!(probe.slope.unwrap() >= 2.9, "{probe:?}");
        let b = bch_bracket(g, &xi, &eta, 1e-3).unwrap();
        assert!(b.max_node_distance(&bracket(g, &xi, &eta).unwrap()).unwrap() < 1e-6);

        let lz = Section::from_fn(atlas.clone(), 3, |x| vec![0.0, 0.0, x[0].sin()]).unwrap();
        let lz2 = lz.scale(-0.7);
        let flat = bch_order2_probe(g, &lz, &lz2, &[1e-1, 3e-2, 1e-2]).unwrap();
        assert!(flat.residuals.iter().all(|r| *r < 1e-15));
        let zero = Section::zeros(atlas, 3).unwrap();
        assert!(bch_order2_probe(g, &zero, &eta, &[1e-1]).unwrap().residuals[0] < 1e-16);
    }

    #[test]
    fn evaluation_is_a_homomorphism_at_nodes() {
        let atlas = circle();
        let mut rng = suite_rng(16, "ev-hom");
        let g = MatrixGroup::Su2;
        let a = exp_section(g, &random_algebra_section(atlas.clone(), g, 4, 1.0, &mut rng).unwrap()).unwrap();
        let b = exp_section(g, &random_algebra_section(atlas.clone(), g, 4, 1.0, &mut rng).unwrap()).unwrap();
        let ab = a.multiply(&b).unwrap();
        let x = atlas.node_point(1, 5);
        let lhs = ab.eval_at_node_point(&x).unwrap();
        let rhs = a.eval_at_node_point(&x).unwrap() * b.eval_at_node_point(&x).unwrap();
        assert_eq!(*lhs, rhs);
    }
}
