use serde::{Deserialize, Serialize};

use super::grid::GridDomain;
use super::sampled::SampledField;
use super::wrap;
use crate::error::{Error, Result};

/// A closed-form diffeomorphism with closed-form inverse and Jacobian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diffeo {
    /// `x ↦ A x + b`, reduced into `[0, 2π)` per axis when `periodic`.
    Affine { linear: Vec<f64>, offset: Vec<f64>, periodic: bool },
    /// `x_a ↦ x_a + c_a sin x_a` per axis with `|c_a| < 1`, or its inverse.
    SineWarp { amplitude: Vec<f64>, inverted: bool },
    /// `outer ∘ inner`.
    Compose { outer: Box<Diffeo>, inner: Box<Diffeo> },
}

fn invert_small(a: &[f64], m: usize) -> Option<Vec<f64>> {
    match m {
        1 => (a[0] != 0.0).then(|| vec![1.0 / a[0]]),
        2 => {
            let det = a[0] * a[3] - a[1] * a[2];
            (det != 0.0).then(|| vec![a[3] / det, -a[1] / det, -a[2] / det, a[0] / det])
        }
        _ => None,
    }
}

fn mat_vec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let m = x.len();
    (0..m).map(|i| (0..m).map(|j| a[i * m + j] * x[j]).sum()).collect()
}

fn mat_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = (0..m).map(|k| a[i * m + k] * b[k * m + j]).sum();
        }
    }
    out
}

fn det(a: &[f64], m: usize) -> f64 {
    if m == 1 {
        a[0]
    } else {
        a[0] * a[3] - a[1] * a[2]
    }
}

fn unwarp(y: f64, c: f64) -> f64 {
    // x + c sin x is strictly increasing for |c| < 1; bisection-guarded Newton.
    let (mut lo, mut hi) = (y - c.abs(), y + c.abs());
    let mut x = y;
    for _ in 0..100 {
        let f = x + c * x.sin() - y;
        if f.abs() <= 1e-16 * (1.0 + y.abs()) {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let next = x - f / (1.0 + c * x.cos());
        x = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    x
}

impl Diffeo {
    pub fn identity(m: usize) -> Self {
        let mut linear = vec![0.0; m * m];
        for a in 0..m {
            linear[a * m + a] = 1.0;
        }
        Diffeo::Affine { linear, offset: vec![0.0; m], periodic: false }
    }

    /// Translation by `tau` on the torus.
    pub fn translation(tau: Vec<f64>) -> Self {
        let m = tau.len();
        match Self::identity(m) {
            Diffeo::Affine { linear, .. } => Diffeo::Affine { linear, offset: tau, periodic: true },
            _ => unreachable!(),
        }
    }

    /// `x ↦ σ ⊙ x + b` with axis signs `σ ∈ {±1}`.
    pub fn signed_shift(sign: &[f64], offset: Vec<f64>, periodic: bool) -> Result<Self> {
        let m = sign.len();
        if offset.len() != m || sign.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::Input("signs must be ±1 with one offset per axis".into()));
        }
        let mut linear = vec![0.0; m * m];
        for a in 0..m {
            linear[a * m + a] = sign[a];
        }
        Ok(Diffeo::Affine { linear, offset, periodic })
    }

    pub fn affine(linear: Vec<f64>, offset: Vec<f64>, periodic: bool) -> Result<Self> {
        let m = offset.len();
        if linear.len() != m * m || !(1..=2).contains(&m) {
            return Err(Error::Shape("affine map needs an m x m matrix with m in {1, 2}".into()));
        }
        if invert_small(&linear, m).is_none() {
            return Err(Error::Input("affine map is singular".into()));
        }
        Ok(Diffeo::Affine { linear, offset, periodic })
    }

    pub fn sine_warp(amplitude: Vec<f64>) -> Result<Self> {
        if amplitude.is_empty() || amplitude.iter().any(|c| !(c.abs() < 1.0)) {
            return Err(Error::Input("sine warp amplitudes must satisfy |c| < 1".into()));
        }
        Ok(Diffeo::SineWarp { amplitude, inverted: false })
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &Diffeo) -> Diffeo {
        Diffeo::Compose { outer: Box::new(self.clone()), inner: Box::new(inner.clone()) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Diffeo::Affine { offset, .. } => offset.len(),
            Diffeo::SineWarp { amplitude, .. } => amplitude.len(),
            Diffeo::Compose { inner, .. } => inner.dim(),
        }
    }

    /// Tag used in atlas descriptors.
    pub fn kind_tag(&self) -> &'static str {
        match self {
            Diffeo::Affine { linear, .. } => {
                let m = self.dim();
                let is_identity = (0..m).all(|i| (0..m).all(|j| linear[i * m + j] == if i == j { 1.0 } else { 0.0 }));
                if is_identity {
                    "translation"
                } else {
                    "affine"
                }
            }
            Diffeo::SineWarp { .. } => "sine-warp",
            Diffeo::Compose { .. } => "composite",
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Diffeo::Affine { linear, offset, periodic } => {
                let y = mat_vec(linear, x);
                y.into_iter().zip(offset).map(|(v, b)| if *periodic { wrap(v + b) } else { v + b }).collect()
            }
            Diffeo::SineWarp { amplitude, inverted } => {
                x.iter().zip(amplitude).map(|(v, c)| if *inverted { unwarp(*v, *c) } else { v + c * v.sin() }).collect()
            }
            Diffeo::Compose { outer, inner } => outer.apply(&inner.apply(x)),
        }
    }

    pub fn inverse(&self) -> Diffeo {
        match self {
            Diffeo::Affine { linear, offset, periodic } => {
                let m = offset.len();
                let inv = invert_small(linear, m).expect("affine maps are constructed invertible");
                let shift = mat_vec(&inv, offset).into_iter().map(|v| -v).collect();
                Diffeo::Affine { linear: inv, offset: shift, periodic: *periodic }
            }
            Diffeo::SineWarp { amplitude, inverted } => {
                Diffeo::SineWarp { amplitude: amplitude.clone(), inverted: !inverted }
            }
            Diffeo::Compose { outer, inner } => {
                Diffeo::Compose { outer: Box::new(inner.inverse()), inner: Box::new(outer.inverse()) }
            }
        }
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        self.inverse().apply(y)
    }

    /// Row-major `m x m` Jacobian at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        match self {
            Diffeo::Affine { linear, .. } => linear.clone(),
            Diffeo::SineWarp { amplitude, inverted } => {
                let mut j = vec![0.0; m * m];
                for a in 0..m {
                    let c = amplitude[a];
                    j[a * m + a] =
                        if *inverted { 1.0 / (1.0 + c * unwarp(x[a], c).cos()) } else { 1.0 + c * x[a].cos() };
                }
                j
            }
            Diffeo::Compose { outer, inner } => mat_mul(&outer.jacobian(&inner.apply(x)), &inner.jacobian(x), m),
        }
    }

    pub fn jacobian_det(&self, x: &[f64]) -> f64 {
        det(&self.jacobian(x), self.dim())
    }

    /// `(σ, b)` when the map is `x ↦ σ ⊙ x + b` with axis signs `σ`.
    pub fn signed_shift_parts(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Diffeo::Affine { linear, offset, .. } => {
                let m = offset.len();
                let diagonal = (0..m).all(|i| (0..m).all(|j| i == j || linear[i * m + j] == 0.0));
                let signs: Vec<f64> = (0..m).map(|a| linear[a * m + a]).collect();
                (diagonal && signs.iter().all(|s| s.abs() == 1.0)).then(|| (signs, offset.clone()))
            }
            Diffeo::Compose { outer, inner } => {
                let (s1, b1) = outer.signed_shift_parts()?;
                let (s2, b2) = inner.signed_shift_parts()?;
                Some((
                    s1.iter().zip(&s2).map(|(a, b)| a * b).collect(),
                    (0..s1.len()).map(|a| s1[a] * b2[a] + b1[a]).collect(),
                ))
            }
            Diffeo::SineWarp { .. } => None,
        }
    }

    /// Largest `|Θ(Θ⁻¹(y)) - y|` and smallest `|det DΘ|` over sample points.
    pub fn check_on(&self, points: &[Vec<f64>]) -> (f64, f64) {
        let inv = self.inverse();
        let mut residual: f64 = 0.0;
        let mut min_det = f64::INFINITY;
        for y in points {
            let back = self.apply(&inv.apply(y));
            for (a, b) in back.iter().zip(y) {
                residual = residual.max(super::circular_diff(*a, *b).abs().min((a - b).abs()));
            }
            min_det = min_det.min(self.jacobian_det(&inv.apply(y)).abs());
        }
        (residual, min_det)
    }
}

/// `(γ ∘ Θ)|_W`: values of `γ` at `Θ(x)` for the masked nodes `x` of `W`.
///
/// `γ` is evaluated through its band-limited representative when it has
/// one, otherwise by lattice interpolation. Signed-shift maps carry the
/// representative over exactly.
pub fn pullback(theta: &Diffeo, gamma: &SampledField, window: &GridDomain) -> Result<SampledField> {
    if theta.dim() != window.dim() || gamma.domain().dim() != window.dim() {
        return Err(Error::Shape("pullback dimensions disagree".into()));
    }
    let n = gamma.components();
    let mut values = Vec::with_capacity(window.len() * n);
    for i in 0..window.len() {
        let x = window.coords(i);
        let y = theta.apply(&x);
        if !gamma.domain().contains(&y) {
            return Err(Error::Domain(format!("node {i} at {x:?} is mapped to {y:?}, outside the field's window")));
        }
        values.extend(gamma.eval(&y)?);
    }
    let spectral = match (gamma.spectral(), theta.signed_shift_parts()) {
        (Some(p), Some((sign, shift))) => Some(p.affine_pullback(&sign, &shift)?),
        _ => None,
    };
    Ok(SampledField::new(window.clone(), n, values)?.with_spectral(spectral))
}

#[cfg(test)]
mod tests {
    use super::super::field::BandlimitedField;
    use super::super::grid::BoxRegion;
    use super::super::sampled::{restrict, sample};
    use super::*;
    use crate::probe::suite_rng;

    #[test]
    fn inverses_and_jacobians() {
        let warp = Diffeo::sine_warp(vec![0.6, -0.3]).unwrap();
        let aff = Diffeo::affine(vec![2.0, 1.0, 0.0, 1.0], vec![0.5, -1.0], false).unwrap();
        let both = warp.after(&aff);
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![0.1 * i as f64, 1.0 - 0.07 * i as f64]).collect();
        for d in [&warp, &aff, &both] {
            let (res, min_det) = d.check_on(&pts);
            assert!(res < 1e-10, "{res}");
            assert!(min_det > 0.0);
        }
        // finite-difference Jacobian of the composite
        let x = [0.4, 0.9];
        let j = both.jacobian(&x);
        for col in 0..2 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[col] += 1e-6;
            xm[col] -= 1e-6;
            let (fp, fm) = (both.apply(&xp), both.apply(&xm));
            for row in 0..2 {
                assert!(((fp[row] - fm[row]) / 2e-6 - j[row * 2 + col]).abs() < 1e-7);
            }
        }
        assert!(Diffeo::sine_warp(vec![1.0]).is_err());
        assert!(Diffeo::affine(vec![1.0, 2.0, 2.0, 4.0], vec![0.0, 0.0], false).is_err());
    }

    #[test]
    fn translation_pulls_cosine_back_to_shifted_cosine() {
        let cos = BandlimitedField::cosine(1, 4, &[1]).unwrap();
        let gamma = sample(&cos, &GridDomain::full(1, 17).unwrap()).unwrap();
        let w = GridDomain::boxed(BoxRegion::interval(0.3, 5.0).unwrap(), 40).unwrap();
        let tau = 0.77;
        let pulled = pullback(&Diffeo::translation(vec![tau]), &gamma, &w).unwrap();
        for i in 0..w.len() {
            assert!((pulled.value(i)[0] - (w.coords(i)[0] + tau).cos()).abs() < 1e-13);
        }
        assert!(pulled.spectral().is_some());
    }

    #[test]
    fn identity_pullback_is_restriction() {
        let mut rng = suite_rng(8, "pullback-id");
        let a = BandlimitedField::random(2, 3, 1, 1.0, &mut rng).unwrap();
        let big = GridDomain::boxed(BoxRegion::cube(0.2, 6.0, 2).unwrap(), 13).unwrap();
        let small = GridDomain::boxed(BoxRegion::cube(1.0, 4.0, 2).unwrap(), 13).unwrap();
        let gamma = restrict(&a, &big).unwrap();
        let pulled = pullback(&Diffeo::identity(2), &gamma, &small).unwrap();
        let direct = restrict(&a, &small).unwrap();
        for (x, y) in pulled.values().iter().zip(direct.values()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn node_leaving_the_window_is_named() {
        let w = GridDomain::boxed(BoxRegion::interval(1.0, 2.0).unwrap(), 32).unwrap();
        let gamma = SampledField::zeros(w.clone(), 1).unwrap();
        let err = pullback(&Diffeo::translation(vec![0.5]), &gamma, &w).unwrap_err();
        assert!(matches!(err, Error::Domain(msg) if msg.contains("node")));
    }
}
