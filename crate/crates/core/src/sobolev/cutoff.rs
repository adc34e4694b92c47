use rand::Rng;

use super::field::{hs_norm, BandlimitedField};
use super::grid::{BoxRegion, GridDomain, Window};
use super::order::SobolevOrder;
use super::sampled::{sample, synthesize, SampledField};
use super::PERIOD;
use crate::error::{Error, Result};

/// `C^∞` transition from 0 (for `t ≤ 0`) to 1 (for `t ≥ 1`), built from
/// `e^{-1/t}`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// A tensor-product smooth bump with compact support in a box.
///
/// Along each axis the profile depends on `r = |x - c| / w`. Without a
/// plateau it is `exp(1 - 1/(1 - r²))`; with plateau fraction `p > 0` it is
/// identically 1 for `r ≤ p` and falls through [`smooth_step`] to 0 at
/// `r = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothCutoff {
    center: Vec<f64>,
    half_width: Vec<f64>,
    plateau: f64,
}

impl SmoothCutoff {
    pub fn new(center: Vec<f64>, half_width: Vec<f64>, plateau: f64) -> Result<Self> {
        if center.len() != half_width.len() || center.is_empty() {
            return Err(Error::Shape("cutoff center and widths must have equal length".into()));
        }
        if half_width.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Input("cutoff half widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&plateau) {
            return Err(Error::Input(format!("plateau fraction {plateau} outside [0, 1)")));
        }
        Ok(SmoothCutoff { center, half_width, plateau })
    }

    /// Cutoff supported in the closure of `support`.
    pub fn on_box(support: &BoxRegion, plateau: f64) -> Result<Self> {
        Self::new(support.center(), support.half_widths(), plateau)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    fn profile(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else if self.plateau == 0.0 {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else if r <= self.plateau {
            1.0
        } else {
            smooth_step((1.0 - r) / (1.0 - self.plateau))
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.center.iter().zip(&self.half_width))
            .map(|(v, (c, w))| self.profile((v - c).abs() / w))
            .product()
    }

    pub fn support_box(&self) -> BoxRegion {
        BoxRegion {
            lo: self.center.iter().zip(&self.half_width).map(|(c, w)| c - w).collect(),
            hi: self.center.iter().zip(&self.half_width).map(|(c, w)| c + w).collect(),
        }
    }

    /// The closed box on which the cutoff is identically 1 (`None` without plateau).
    pub fn plateau_box(&self) -> Option<BoxRegion> {
        (self.plateau > 0.0).then(|| BoxRegion {
            lo: self.center.iter().zip(&self.half_width).map(|(c, w)| c - self.plateau * w).collect(),
            hi: self.center.iter().zip(&self.half_width).map(|(c, w)| c + self.plateau * w).collect(),
        })
    }

    fn check_support_in(&self, lo: &[f64], hi: &[f64]) -> Result<()> {
        let support = self.support_box();
        let inside = (0..self.dim()).all(|a| lo[a] <= support.lo[a] && support.hi[a] <= hi[a]);
        if !inside {
            return Err(Error::Input(format!(
                "cutoff support {:?}..{:?} is not inside {lo:?}..{hi:?}",
                support.lo, support.hi
            )));
        }
        Ok(())
    }
}

/// Pointwise product `hγ` on the nodes of the sample window.
pub fn cutoff_multiply_sampled(h: &SmoothCutoff, field: &SampledField) -> Result<SampledField> {
    let domain = field.domain();
    if h.dim() != domain.dim() {
        return Err(Error::Shape("cutoff and field dimensions differ".into()));
    }
    match domain.window() {
        Window::Box(b) => h.check_support_in(&b.lo, &b.hi)?,
        Window::FullTorus => h.check_support_in(&vec![0.0; h.dim()], &vec![PERIOD; h.dim()])?,
    }
    let n = field.components();
    let mut values = field.values().to_vec();
    for i in 0..domain.len() {
        let w = h.eval(&domain.coords(i));
        for v in &mut values[i * n..(i + 1) * n] {
            *v *= w;
        }
    }
    SampledField::new(domain.clone(), n, values)
}

/// Product `hγ` of a band-limited field with a cutoff supported in the
/// fundamental domain.
///
/// The product is sampled on the full grid of resolution `2·out + 1` and
/// re-synthesised at cutoff `out` (default `2N`), which is a trigonometric
/// interpolation of the product with controlled aliasing.
pub fn cutoff_multiply_bandlimited(
    h: &SmoothCutoff,
    a: &BandlimitedField,
    out_modes: Option<usize>,
) -> Result<BandlimitedField> {
    if h.dim() != a.dim() {
        return Err(Error::Shape("cutoff and field dimensions differ".into()));
    }
    h.check_support_in(&vec![0.0; h.dim()], &vec![PERIOD; h.dim()])?;
    let out = out_modes.unwrap_or(2 * a.modes());
    if out < a.modes() {
        return Err(Error::Input(format!("output cutoff {out} below input cutoff {}", a.modes())));
    }
    let grid = GridDomain::full(a.dim(), 2 * out + 1)?;
    let product = cutoff_multiply_sampled(h, &sample(a, &grid)?)?;
    synthesize(&product, out)
}

/// Largest ratio `‖hγ‖_s / ‖γ‖_s` over `trials` random unit-norm fields of
/// cutoff `modes`; an empirical lower bound for the multiplier's operator norm.
pub fn multiplier_bound_probe<R: Rng + ?Sized>(
    h: &SmoothCutoff,
    s: SobolevOrder,
    m: usize,
    modes: usize,
    trials: usize,
    out_modes: Option<usize>,
    rng: &mut R,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let g = BandlimitedField::random(m, modes, 1, 0.0, rng)?;
        let g = g.scale(1.0 / hs_norm(&g, s)?);
        let hg = cutoff_multiply_bandlimited(h, &g, out_modes)?;
        best = best.max(hs_norm(&hg, s)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::suite_rng;
    use std::f64::consts::PI;

    #[test]
    fn profile_bounds_and_plateau() {
        let h = SmoothCutoff::new(vec![3.0], vec![1.0], 0.5).unwrap();
        assert_eq!(h.eval(&[3.0]), 1.0);
        assert_eq!(h.eval(&[3.49]), 1.0);
        assert_eq!(h.eval(&[4.0]), 0.0);
        assert_eq!(h.eval(&[1.5]), 0.0);
        for i in 0..200 {
            let v = h.eval(&[2.0 + i as f64 * 0.01]);
            assert!((0.0..=1.0).contains(&v));
        }
        let bump = SmoothCutoff::new(vec![0.0], vec![2.0], 0.0).unwrap();
        assert_eq!(bump.eval(&[0.0]), 1.0);
        assert!((bump.eval(&[1.0]) - (1.0f64 - 1.0 / 0.75).exp()).abs() < 1e-15);
    }

    #[test]
    fn smooth_step_is_symmetric() {
        for t in [0.1, 0.3, 0.5, 0.77] {
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn plateau_leaves_samples_unchanged() {
        let grid = GridDomain::boxed(BoxRegion::interval(0.5, 5.5).unwrap(), 64).unwrap();
        let gamma = SampledField::from_fn(grid.clone(), 1, |x| vec![x[0].sin() + 2.0]).unwrap();
        let h = SmoothCutoff::on_box(&BoxRegion::interval(0.5, 5.5).unwrap(), 0.5).unwrap();
        let hg = cutoff_multiply_sampled(&h, &gamma).unwrap();
        let plateau = h.plateau_box().unwrap();
        for i in 0..grid.len() {
            let x = grid.coords(i);
            if x[0] >= plateau.lo[0] && x[0] <= plateau.hi[0] {
                assert_eq!(hg.value(i), gamma.value(i));
            }
        }
        let zero = SampledField::zeros(grid, 1).unwrap();
        assert!(cutoff_multiply_sampled(&h, &zero).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn support_violation_is_rejected() {
        let grid = GridDomain::boxed(BoxRegion::interval(1.0, 2.0).unwrap(), 64).unwrap();
        let gamma = SampledField::zeros(grid, 1).unwrap();
        let h = SmoothCutoff::new(vec![1.5], vec![1.0], 0.5).unwrap();
        assert!(cutoff_multiply_sampled(&h, &gamma).is_err());
        let wide = SmoothCutoff::new(vec![PI], vec![4.0], 0.0).unwrap();
        let a = BandlimitedField::cosine(1, 3, &[1]).unwrap();
        assert!(cutoff_multiply_bandlimited(&wide, &a, None).is_err());
    }

    #[test]
    fn bandlimited_product_reproduces_nodes() {
        let mut rng = suite_rng(5, "cutoff-nodes");
        let a = BandlimitedField::random(1, 6, 1, 1.0, &mut rng).unwrap();
        let h = SmoothCutoff::new(vec![PI], vec![2.0], 0.4).unwrap();
        let p = cutoff_multiply_bandlimited(&h, &a, None).unwrap();
        assert_eq!(p.modes(), 12);
        let grid = GridDomain::full(1, 25).unwrap();
        for i in 0..grid.len() {
            let x = grid.coords(i);
            assert!((p.eval(&x)[0] - h.eval(&x) * a.eval(&x)[0]).abs() < 1e-12);
        }
    }
}
