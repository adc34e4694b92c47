//! Finite atlases of the circle and the 2-torus.
//!
//! Manifold points are angle vectors in `[0, 2π)^m`. Chart `j` is the
//! signed shift `φ_j⁻¹(u) = σ_j ⊙ u + b_j (mod 2π)` on the codomain box
//! `V_j = (0.1, 2π − 0.1)^m`, with witness window `W_j = (0.3, 2π − 0.3)^m`.
//! Chart grids are images of one shared manifold lattice, so every
//! manifold point that is a node of one chart is a node of every other
//! chart whose window contains it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sobolev::{circular_diff, wrap, BoxRegion, Diffeo, GridDomain, SmoothCutoff, PERIOD};

pub const CODOMAIN_INSET: f64 = 0.1;
pub const WINDOW_INSET: f64 = 0.3;
pub const DEFAULT_PLATEAU: f64 = 0.5;
pub const DEFAULT_RESOLUTION: usize = 129;
pub const DEFAULT_SAMPLES: usize = 64;

#[derive(Clone, Debug)]
pub struct Chart {
    index: usize,
    sign: Vec<f64>,
    shift: Vec<f64>,
    codomain: BoxRegion,
    window: BoxRegion,
    grid: GridDomain,
    bump: SmoothCutoff,
}

impl Chart {
    fn new(
        index: usize,
        sign: Vec<f64>,
        shift: Vec<f64>,
        window: BoxRegion,
        resolution: usize,
        plateau: f64,
    ) -> Result<Self> {
        let m = sign.len();
        let codomain = BoxRegion::cube(CODOMAIN_INSET, PERIOD - CODOMAIN_INSET, m)?;
        // Lattice origin: the image of the manifold node 0.
        let origin: Vec<f64> = (0..m).map(|a| wrap(-sign[a] * shift[a])).collect();
        let grid = GridDomain::boxed_with_origin(window.clone(), origin, resolution)?;
        let bump = SmoothCutoff::on_box(&window, plateau)?;
        Ok(Chart { index, sign, shift, codomain, window, grid, bump })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.sign.len()
    }

    pub fn sign(&self) -> &[f64] {
        &self.sign
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Codomain box `V_j`.
    pub fn codomain(&self) -> &BoxRegion {
        &self.codomain
    }

    /// Witness window `W_j`.
    pub fn window(&self) -> &BoxRegion {
        &self.window
    }

    /// Sample nodes on `W_j`.
    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }

    pub fn bump(&self) -> &SmoothCutoff {
        &self.bump
    }

    /// `φ_j(x)`, reduced into `[0, 2π)^m`.
    pub fn to_chart(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|a| wrap(self.sign[a] * (x[a] - self.shift[a]))).collect()
    }

    /// `φ_j⁻¹(u)`.
    pub fn from_chart(&self, u: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|a| wrap(self.sign[a] * u[a] + self.shift[a])).collect()
    }

    /// `x ∈ U_j = φ_j⁻¹(V_j)`.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.codomain.contains_open(&self.to_chart(x))
    }

    /// `x ∈ φ_j⁻¹(W_j)`.
    pub fn window_contains(&self, x: &[f64]) -> bool {
        self.window.contains_open(&self.to_chart(x))
    }

    /// `φ_j⁻¹` as a diffeomorphism of the torus.
    pub fn parametrization(&self) -> Diffeo {
        Diffeo::signed_shift(&self.sign, self.shift.clone(), true).expect("chart signs are ±1")
    }

    /// Margin of `closure(W_j)` inside `V_j`.
    pub fn margin(&self) -> f64 {
        self.codomain.margin_around(&self.window)
    }

    /// A window strictly between `W_j` and `V_j` (half the margin on each side).
    pub fn enlarged_window(&self) -> Result<BoxRegion> {
        let margin = self.margin();
        if margin <= 0.0 {
            return Err(Error::Domain(format!("window of chart {} touches its codomain", self.index)));
        }
        self.window.grown(0.5 * margin)
    }
}

/// A chart node seen from another chart: the same manifold point is node
/// `node` of chart `chart`, whose partition function takes `weight` there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLink {
    pub chart: usize,
    pub node: usize,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct Atlas {
    name: String,
    m: usize,
    resolution: usize,
    plateau: f64,
    charts: Vec<Chart>,
    transitions: Vec<Vec<Diffeo>>,
    links: Vec<Vec<Vec<NodeLink>>>,
}

impl Atlas {
    /// Atlas of signed-shift charts sharing one manifold lattice of
    /// `resolution` nodes per axis.
    pub fn from_shifts(
        name: &str,
        signs: Vec<Vec<f64>>,
        shifts: Vec<Vec<f64>>,
        resolution: usize,
        plateau: f64,
    ) -> Result<Self> {
        if signs.is_empty() || signs.len() != shifts.len() {
            return Err(Error::Input("an atlas needs one sign vector per shift".into()));
        }
        let m = signs[0].len();
        if !(1..=2).contains(&m) || signs.iter().chain(&shifts).any(|v| v.len() != m) {
            return Err(Error::Shape("charts must share a dimension in {1, 2}".into()));
        }
        if signs.iter().flatten().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::Input("chart signs must be ±1".into()));
        }
        let window = BoxRegion::cube(WINDOW_INSET, PERIOD - WINDOW_INSET, m)?;
        let charts = signs
            .into_iter()
            .zip(shifts)
            .enumerate()
            .map(|(j, (s, b))| Chart::new(j, s, b, window.clone(), resolution, plateau))
            .collect::<Result<Vec<_>>>()?;
        let transitions =
            charts.iter().map(|ci| charts.iter().map(|cj| Self::closed_form_transition(ci, cj)).collect()).collect();
        let mut atlas =
            Atlas { name: name.to_string(), m, resolution, plateau, charts, transitions, links: Vec::new() };
        atlas.link_nodes();
        Ok(atlas)
    }

    /// `Θ_ij = φ_i ∘ φ_j⁻¹ : u ↦ σ_iσ_j u + σ_i(b_j − b_i) (mod 2π)`.
    fn closed_form_transition(ci: &Chart, cj: &Chart) -> Diffeo {
        let m = ci.dim();
        if ci.index == cj.index {
            return Diffeo::identity(m);
        }
        let sign: Vec<f64> = (0..m).map(|a| ci.sign[a] * cj.sign[a]).collect();
        let offset = (0..m).map(|a| wrap(ci.sign[a] * (cj.shift[a] - ci.shift[a]))).collect();
        Diffeo::signed_shift(&sign, offset, true).expect("signs are ±1")
    }

    /// Two angular charts offset by π.
    pub fn circle2(resolution: usize) -> Result<Self> {
        Self::from_shifts("circle2", vec![vec![1.0]; 2], vec![vec![0.0], vec![PI]], resolution, DEFAULT_PLATEAU)
    }

    /// Four box charts shifted by 0 or π per axis.
    pub fn torus4(resolution: usize) -> Result<Self> {
        let shifts = vec![vec![0.0, 0.0], vec![PI, 0.0], vec![0.0, PI], vec![PI, PI]];
        Self::from_shifts("torus4", vec![vec![1.0, 1.0]; 4], shifts, resolution, DEFAULT_PLATEAU)
    }

    pub fn builtin(name: &str, resolution: usize) -> Result<Self> {
        match name {
            "circle2" => Self::circle2(resolution),
            "torus4" => Self::torus4(resolution),
            other => Err(Error::Input(format!("unknown atlas '{other}' (expected circle2 or torus4)"))),
        }
    }

    fn link_nodes(&mut self) {
        let links = self
            .charts
            .iter()
            .map(|cj| {
                (0..cj.grid.len())
                    .map(|q| {
                        let x = cj.from_chart(&cj.grid.coords(q));
                        let mut found: Vec<NodeLink> = Vec::new();
                        for ci in &self.charts {
                            let u = ci.to_chart(&x);
                            if let Some(node) = ci.grid.locate(&u) {
                                found.push(NodeLink {
                                    chart: ci.index,
                                    node,
                                    weight: ci.bump.eval(&ci.grid.coords(node)),
                                });
                            }
                        }
                        let total: f64 = found.iter().map(|l| l.weight).sum();
                        for l in &mut found {
                            l.weight /= total;
                        }
                        found
                    })
                    .collect()
            })
            .collect();
        self.links = links;
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, j: usize) -> Result<&Chart> {
        self.charts
            .get(j)
            .ok_or_else(|| Error::Input(format!("chart {j} out of range (atlas has {})", self.charts.len())))
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    /// Stored transition `Θ_ij`.
    pub fn transition(&self, i: usize, j: usize) -> &Diffeo {
        &self.transitions[i][j]
    }

    /// Copies of the manifold point behind node `q` of chart `j`, one per
    /// chart whose window holds it, with partition weights summing to one.
    pub fn links(&self, chart: usize, node: usize) -> &[NodeLink] {
        &self.links[chart][node]
    }

    /// Node pairs `(p, q)` of charts `i < j` carrying the same manifold point.
    pub fn overlap_pairs(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (p, links) in self.links[i].iter().enumerate() {
            for l in links {
                if l.chart == j {
                    pairs.push((p, l.node));
                }
            }
        }
        pairs
    }

    /// Manifold point behind node `q` of chart `j`.
    pub fn node_point(&self, chart: usize, node: usize) -> Vec<f64> {
        let c = &self.charts[chart];
        c.from_chart(&c.grid.coords(node))
    }

    /// Partition of unity `h_i = b_i / Σ_j b_j` at a manifold point.
    pub fn partition(&self, x: &[f64]) -> Vec<f64> {
        let bumps: Vec<f64> = self.charts.iter().map(|c| c.bump.eval(&c.to_chart(x))).collect();
        let total: f64 = bumps.iter().sum();
        if total > 0.0 {
            bumps.into_iter().map(|b| b / total).collect()
        } else {
            vec![0.0; bumps.len()]
        }
    }

    /// `Θ_ij(u)` for `u` in the overlap codomain `φ_j(U_i ∩ U_j)`.
    pub fn transition_eval(&self, i: usize, j: usize, u: &[f64]) -> Result<Vec<f64>> {
        let (ci, cj) = (self.chart(i)?, self.chart(j)?);
        if u.len() != self.m {
            return Err(Error::Shape(format!("point of dimension {} on a {}-dimensional atlas", u.len(), self.m)));
        }
        if !cj.codomain.contains_open(u) {
            return Err(Error::Domain(format!("{u:?} is outside the codomain of chart {j}")));
        }
        if !ci.contains(&cj.from_chart(u)) {
            return Err(Error::Domain(format!("{u:?} in chart {j} is outside the overlap with chart {i}")));
        }
        Ok(self.transitions[i][j].apply(u))
    }

    /// Replaces the window of one chart (fault injection and experiments).
    pub fn with_window(mut self, chart: usize, window: BoxRegion) -> Result<Self> {
        let c = self.chart(chart)?.clone();
        self.charts[chart] = Chart::new(chart, c.sign, c.shift, window, self.resolution, self.plateau)?;
        self.link_nodes();
        Ok(self)
    }

    /// Replaces the stored transition `Θ_ij` (fault injection).
    pub fn with_transition(mut self, i: usize, j: usize, theta: Diffeo) -> Result<Self> {
        self.chart(i)?;
        self.chart(j)?;
        if theta.dim() != self.m {
            return Err(Error::Shape("transition dimension differs from the atlas".into()));
        }
        self.transitions[i][j] = theta;
        Ok(self)
    }

    pub fn descriptor(&self) -> AtlasDescriptor {
        let charts = self
            .charts
            .iter()
            .map(|c| ChartDescriptor {
                index: c.index,
                sign: c.sign.clone(),
                shift: c.shift.clone(),
                codomain: c.codomain.clone(),
                window: c.window.clone(),
                bump_profile: "exp(1-1/(1-r^2))".into(),
                bump_plateau: self.plateau,
            })
            .collect();
        let mut transitions = Vec::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if i != j {
                    transitions.push(TransitionDescriptor {
                        i,
                        j,
                        kind: self.transitions[i][j].kind_tag().to_string(),
                        map: self.transitions[i][j].clone(),
                    });
                }
            }
        }
        let mut d = AtlasDescriptor {
            name: self.name.clone(),
            m: self.m,
            resolution: self.resolution,
            charts,
            transitions,
            hash: String::new(),
        };
        d.hash = d.compute_hash();
        d
    }

    pub fn hash(&self) -> String {
        self.descriptor().hash
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDescriptor {
    pub index: usize,
    pub sign: Vec<f64>,
    pub shift: Vec<f64>,
    pub codomain: BoxRegion,
    pub window: BoxRegion,
    pub bump_profile: String,
    pub bump_plateau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionDescriptor {
    pub i: usize,
    pub j: usize,
    pub kind: String,
    pub map: Diffeo,
}

/// JSON description of an atlas; `hash` is the SHA-256 of the descriptor
/// serialised with an empty hash field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasDescriptor {
    pub name: String,
    pub m: usize,
    pub resolution: usize,
    pub charts: Vec<ChartDescriptor>,
    pub transitions: Vec<TransitionDescriptor>,
    pub hash: String,
}

impl AtlasDescriptor {
    pub fn compute_hash(&self) -> String {
        let mut blank = self.clone();
        blank.hash = String::new();
        let bytes = serde_json::to_vec(&blank).expect("descriptor serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Outcome of one validation check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub max_defect: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_point: Option<Vec<f64>>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasReport {
    pub atlas: String,
    pub hash: String,
    pub samples_per_dim: usize,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl AtlasReport {
    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }
}

#[derive(Default)]
struct Worst {
    defect: f64,
    point: Option<Vec<f64>>,
    samples: usize,
}

impl Worst {
    fn record(&mut self, defect: f64, point: &[f64]) {
        self.samples += 1;
        if defect > self.defect || (self.point.is_none() && defect.is_nan()) {
            self.defect = defect;
            self.point = Some(point.to_vec());
        }
    }

    fn finish(self, id: &str, tolerance: f64, extra_ok: bool) -> CheckResult {
        CheckResult {
            id: id.to_string(),
            max_defect: self.defect,
            tolerance,
            passed: extra_ok && self.defect <= tolerance,
            worst_point: self.point,
            samples: self.samples,
        }
    }
}

/// Cell-centred sample points of a box, `per_dim` per axis.
fn box_samples(lo: &[f64], hi: &[f64], per_dim: usize) -> Vec<Vec<f64>> {
    let m = lo.len();
    let axis = |a: usize, j: usize| lo[a] + (hi[a] - lo[a]) * (j as f64 + 0.5) / per_dim as f64;
    if m == 1 {
        (0..per_dim).map(|j| vec![axis(0, j)]).collect()
    } else {
        (0..per_dim * per_dim).map(|j| vec![axis(0, j / per_dim), axis(1, j % per_dim)]).collect()
    }
}

fn circular_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| circular_diff(*x, *y).abs()).fold(0.0, f64::max)
}

/// Runs the cover, margin, inverse, transition, cocycle and partition checks.
pub fn validate_atlas(atlas: &Atlas, tol: f64, samples_per_dim: usize) -> AtlasReport {
    let m = atlas.dim();
    let torus_lo = vec![0.0; m];
    let torus_hi = vec![PERIOD; m];
    let mut manifold = box_samples(&torus_lo, &torus_hi, samples_per_dim);
    // Lattice nodes are where glueing happens, so they are covered explicitly.
    let lattice = GridDomain::full(m, atlas.resolution()).expect("valid resolution");
    manifold.extend((0..lattice.len()).map(|i| lattice.coords(i)));

    // Cover: every point lies at positive depth in some window.
    let mut cover = Worst::default();
    let mut uncovered = 0usize;
    for x in &manifold {
        let depth = atlas.charts().iter().map(|c| c.window().depth(&c.to_chart(x))).fold(f64::NEG_INFINITY, f64::max);
        if depth <= 0.0 {
            uncovered += 1;
            cover.record(-depth + f64::MIN_POSITIVE, x);
        } else {
            cover.record(0.0, x);
        }
    }
    let cover = cover.finish("cover", tol, uncovered == 0);

    // Margin: closure(W_j) ⊂ V_j with a strictly larger window in between.
    let mut margin = Worst::default();
    let mut margins_ok = true;
    for c in atlas.charts() {
        let gap = c.margin();
        let between = c
            .enlarged_window()
            .map(|w| c.codomain().margin_around(&w) > 0.0 && w.margin_around(c.window()) > 0.0)
            .unwrap_or(false);
        margins_ok &= gap > 0.0 && between;
        margin.record((-gap).max(0.0), &c.window().center());
    }
    let margin = margin.finish("margin", tol, margins_ok);

    // Inverse: φ_j(φ_j⁻¹(u)) = u on V_j and Θ_ji(Θ_ij(u)) = u on overlaps.
    let mut inverse = Worst::default();
    for cj in atlas.charts() {
        for u in box_samples(&cj.codomain().lo, &cj.codomain().hi, samples_per_dim) {
            inverse.record(circular_dist(&cj.to_chart(&cj.from_chart(&u)), &u), &u);
            let x = cj.from_chart(&u);
            for ci in atlas.charts() {
                if ci.contains(&x) {
                    let there = atlas.transition(ci.index(), cj.index()).apply(&u);
                    let back = atlas.transition(cj.index(), ci.index()).apply(&there);
                    inverse.record(circular_dist(&back, &u), &x);
                }
            }
        }
    }
    let inverse = inverse.finish("inverse", tol, true);

    // Transition: stored Θ_ij agrees with φ_i ∘ φ_j⁻¹.
    let mut transition = Worst::default();
    let mut cocycle = Worst::default();
    for ck in atlas.charts() {
        for u in box_samples(&ck.codomain().lo, &ck.codomain().hi, samples_per_dim) {
            let x = ck.from_chart(&u);
            let members: Vec<&Chart> = atlas.charts().iter().filter(|c| c.contains(&x)).collect();
            for ci in &members {
                let direct = ci.to_chart(&x);
                let stored = atlas.transition(ci.index(), ck.index()).apply(&u);
                transition.record(circular_dist(&stored, &direct), &x);
                for cj in &members {
                    let via = atlas.transition(cj.index(), ck.index()).apply(&u);
                    let composed = atlas.transition(ci.index(), cj.index()).apply(&via);
                    cocycle.record(circular_dist(&composed, &stored), &x);
                }
            }
        }
    }
    let transition = transition.finish("transition", tol, true);
    let cocycle = cocycle.finish("cocycle", tol, true);

    // Partition of unity sums to one everywhere.
    let mut partition = Worst::default();
    for x in &manifold {
        let h = atlas.partition(x);
        let sum: f64 = h.iter().sum();
        let support_ok = atlas.charts().iter().zip(&h).all(|(c, hi)| *hi == 0.0 || c.window_contains(x));
        partition.record(if support_ok { (sum - 1.0).abs() } else { f64::INFINITY }, x);
    }
    let partition = partition.finish("partition", tol, true);

    let checks = vec![cover, margin, inverse, transition, cocycle, partition];
    let passed = checks.iter().all(|c| c.passed);
    AtlasReport { atlas: atlas.name().to_string(), hash: atlas.hash(), samples_per_dim, checks, passed }
}
