use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sobolev::{
    decay_cutoff, decay_threshold, hs_norm, rellich_spectrum, BandlimitedField, SobolevOrder, WeightConvention,
};

/// A finite decreasing ladder `s₁ > s₂ > ⋯ > s_J > s₀` with `s_j = s₀ + 1/j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevLadder {
    pub s0: f64,
    pub m: usize,
    pub rungs: Vec<f64>,
    pub convention: WeightConvention,
}

impl SobolevLadder {
    pub fn new(s0: f64, rungs: usize, m: usize) -> Result<Self> {
        if !(1..=2).contains(&m) {
            return Err(Error::Input(format!("dimension {m} not supported")));
        }
        if !(s0.is_finite() && s0 >= 0.5 * m as f64) {
            return Err(Error::Input(format!("limit exponent s0 = {s0} must be at least m/2 = {}", 0.5 * m as f64)));
        }
        if rungs < 2 {
            return Err(Error::Input("a ladder needs at least two rungs".into()));
        }
        Ok(SobolevLadder {
            s0,
            m,
            rungs: (1..=rungs).map(|j| s0 + 1.0 / j as f64).collect(),
            convention: WeightConvention::default(),
        })
    }

    pub fn with_convention(mut self, convention: WeightConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn len(&self) -> usize {
        self.rungs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rungs.is_empty()
    }

    /// Order of rung `j` (zero-based).
    pub fn order(&self, j: usize) -> Result<SobolevOrder> {
        let s = *self
            .rungs
            .get(j)
            .ok_or_else(|| Error::Input(format!("rung {j} out of range ({} rungs)", self.rungs.len())))?;
        Ok(SobolevOrder::new(s)?.with_convention(self.convention))
    }

    /// Norms of `a` on every rung, from the strongest to the weakest.
    pub fn rung_norms(&self, a: &BandlimitedField) -> Result<Vec<f64>> {
        (0..self.len()).map(|j| hs_norm(a, self.order(j)?)).collect()
    }

    /// Largest relative increase `(‖a‖_{s_{j+1}} − ‖a‖_{s_j})/‖a‖_{s_j}`;
    /// non-positive when the norms are monotone.
    pub fn monotonicity_defect(&self, a: &BandlimitedField) -> Result<f64> {
        let norms = self.rung_norms(a)?;
        Ok(norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { (w[1] - w[0]) / w[0] } else { w[1] })
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// The witness field with coefficients `c_k = (1+‖k‖²)^{−α/2}`.
#[derive(Clone, Debug)]
pub struct DecayField {
    pub alpha: f64,
    pub field: BandlimitedField,
}

impl DecayField {
    pub fn new(alpha: f64, m: usize, modes: usize) -> Result<Self> {
        let per = (2 * modes + 1).pow(m as u32);
        let mut field = BandlimitedField::zeros(m, modes, 1)?;
        let coeffs = (0..per)
            .map(|flat| {
                let k = field.multi_index(flat);
                let nsq = (k[0] * k[0] + k[1] * k[1]) as f64;
                num_complex::Complex64::new((1.0 + nsq).powf(-0.5 * alpha), 0.0)
            })
            .collect();
        field = BandlimitedField::from_coeffs(m, modes, 1, coeffs, true)?;
        Ok(DecayField { alpha, field })
    }
}

/// `‖DecayField(α, N)‖²_{H^s} = Σ_{|k| ≤ N} w_s(k)(1+k²)^{−α}` on `T¹`, in
/// closed form per mode, summed from the tail inwards.
pub fn decay_partial_norm_sq(alpha: f64, s: SobolevOrder, modes: usize) -> f64 {
    let e = s.convention().exponent(s.value()) - alpha;
    let mut sum = 0.0;
    for k in (1..=modes).rev() {
        sum += 2.0 * (1.0 + (k * k) as f64).powf(e);
    }
    sum + 1.0
}

/// Growth ratio of partial-sum increments over the last two windows of
/// `cutoffs`; at least one iff the partial sums diverge (window ratio 10
/// gives `R = 10^{1−p}` for terms `~k^{−p}`).
pub fn growth_ratio(alpha: f64, s: SobolevOrder, cutoffs: &[usize]) -> Result<f64> {
    if cutoffs.len() < 3 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("growth ratio needs three increasing cutoffs".into()));
    }
    let n = cutoffs.len();
    let e = s.convention().exponent(s.value()) - alpha;
    let window =
        |lo: usize, hi: usize| -> f64 { (lo + 1..=hi).rev().map(|k| 2.0 * (1.0 + (k * k) as f64).powf(e)).sum() };
    let i1 = window(cutoffs[n - 3], cutoffs[n - 2]);
    let i2 = window(cutoffs[n - 2], cutoffs[n - 1]);
    Ok(i2 / i1)
}

/// Result of the critical-order fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalOrder {
    pub alpha: f64,
    pub estimate: Option<f64>,
    pub oracle: f64,
    pub cutoffs: Vec<usize>,
    pub note: String,
}

/// Bisection over `s` (to 0.01) for the boundary where the partial norms of
/// `DecayField(α, ·)` on `T¹` start to diverge, decided by the growth ratio.
pub fn critical_order_estimate(alpha: f64, cutoffs: &[usize], convention: WeightConvention) -> Result<CriticalOrder> {
    // Terms (1+k²)^{x−α} with x the weight exponent: critical at x = α − 1/2.
    let oracle = match convention {
        WeightConvention::PaperHalf => 2.0 * alpha - 1.0,
        WeightConvention::Standard => alpha - 0.5,
    };
    if alpha <= 0.5 {
        return Ok(CriticalOrder {
            alpha,
            estimate: None,
            oracle,
            cutoffs: cutoffs.to_vec(),
            note: "alpha <= 1/2: the field lies in no rung".into(),
        });
    }
    let diverges = |s: f64| -> Result<bool> {
        let order = SobolevOrder::new(s)?.with_convention(convention);
        Ok(growth_ratio(alpha, order, cutoffs)? >= 1.0)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while !diverges(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Domain("no divergence found".into()));
        }
    }
    if diverges(lo)? {
        return Ok(CriticalOrder {
            alpha,
            estimate: Some(0.0),
            oracle,
            cutoffs: cutoffs.to_vec(),
            note: "partial sums diverge already at s = 0".into(),
        });
    }
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if diverges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalOrder {
        alpha,
        estimate: Some(0.5 * (lo + hi)),
        oracle,
        cutoffs: cutoffs.to_vec(),
        note: "growth-ratio bisection".into(),
    })
}

/// Spectrum summary of one inclusion `H^{s_j} → H^{s_{j+1}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RungProbe {
    pub rung: usize,
    pub s: f64,
    pub t: f64,
    pub modes: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub strictly_decreasing: bool,
    pub tolerance: f64,
    /// Rank of the first singular value below `tolerance`, if any.
    pub index_below: Option<usize>,
    /// `‖k‖` beyond which `σ_k < tolerance`.
    pub threshold_norm: f64,
    /// Smallest cutoff whose spectrum reaches below `tolerance`.
    pub cutoff_needed: f64,
    pub compact: bool,
}

pub fn rung_compactness_probe(ladder: &SobolevLadder, j: usize, modes: usize, tolerance: f64) -> Result<RungProbe> {
    if j + 1 >= ladder.len() {
        return Err(Error::Input(format!("rung {j} has no successor in a ladder of {} rungs", ladder.len())));
    }
    let (s, t) = (ladder.order(j)?, ladder.order(j + 1)?);
    let sp = rellich_spectrum(s, t, ladder.m, modes)?;
    let sigmas = sp.sigmas();
    // Strict decrease across shells ‖k‖; the spectrum is decreasing in ‖k‖.
    let strictly_decreasing = sp.is_decreasing() && sp.smallest() < sp.largest();
    let threshold_norm = decay_threshold(s, t, tolerance)?;
    Ok(RungProbe {
        rung: j,
        s: s.value(),
        t: t.value(),
        modes,
        sigma_max: sigmas[0],
        sigma_min: *sigmas.last().expect("nonempty spectrum"),
        strictly_decreasing,
        tolerance,
        index_below: sp.first_below(tolerance),
        threshold_norm,
        cutoff_needed: decay_cutoff(s, t, ladder.m, tolerance)?,
        // σ_k → 0 with a finite threshold: compact.
        compact: strictly_decreasing && threshold_norm.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::suite_rng;

    #[test]
    fn ladder_rungs() {
        let l = SobolevLadder::new(0.5, 3, 1).unwrap();
        assert_eq!(l.rungs[0], 1.5);
        assert_eq!(l.rungs[1], 1.0);
        assert!((l.rungs[2] - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
        assert!(l.rungs.windows(2).all(|w| w[1] < w[0]));
        assert!(l.rungs.iter().all(|s| *s > 0.5));
        assert!(SobolevLadder::new(0.4, 3, 1).is_err());
        assert!(SobolevLadder::new(0.9, 3, 2).is_err());
        assert!(SobolevLadder::new(1.0, 1, 1).is_err());
    }

    #[test]
    fn rung_norms_are_monotone() {
        let l = SobolevLadder::new(1.0, 5, 2).unwrap();
        let mut rng = suite_rng(17, "ladder-monotone");
        for _ in 0..20 {
            let a = BandlimitedField::random(2, 5, 2, 0.5, &mut rng).unwrap();
            assert!(l.monotonicity_defect(&a).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn decay_field_matches_closed_form() {
        let d = DecayField::new(1.5, 1, 20).unwrap();
        for s in [0.0, 1.0, 1.9] {
            let o = SobolevOrder::new(s).unwrap();
            let n2 = hs_norm(&d.field, o).unwrap().powi(2);
            assert!((n2 - decay_partial_norm_sq(1.5, o, 20)).abs() < 1e-12 * n2);
        }
        assert_eq!(d.field.coeff(0, &[3]).unwrap().re, 10f64.powf(-0.75));
    }

    #[test]
    fn critical_orders() {
        let cutoffs = [1_000, 10_000, 100_000];
        for alpha in [1.0, 1.5, 2.0] {
            let c = critical_order_estimate(alpha, &cutoffs, WeightConvention::PaperHalf).unwrap();
            assert!((c.estimate.unwrap() - (2.0 * alpha - 1.0)).abs() < 0.1, "{c:?}");
        }
        let c = critical_order_estimate(1.5, &cutoffs, WeightConvention::Standard).unwrap();
        assert!((c.estimate.unwrap() - 1.0).abs() < 0.1);
        assert!(critical_order_estimate(0.5, &cutoffs, WeightConvention::PaperHalf).unwrap().estimate.is_none());
    }

    #[test]
    fn cauchy_well_below_critical() {
        let alpha = 1.5;
        let s = SobolevOrder::new(2.0 * alpha - 2.0).unwrap();
        let inc = decay_partial_norm_sq(alpha, s, 10_001) - decay_partial_norm_sq(alpha, s, 10_000);
        assert!(inc < 1e-6, "{inc}");
    }

    #[test]
    fn rung_probe() {
        let l = SobolevLadder::new(0.5, 3, 1).unwrap();
        let p = rung_compactness_probe(&l, 0, 64, 1e-3).unwrap();
        assert_eq!(p.sigma_max, 1.0);
        assert!(p.strictly_decreasing && p.compact);
        // Gap 1/2: σ_k = (1+k²)^{−1/8} needs ‖k‖ ≈ 1e12 to fall below 1e−3.
        assert!(p.index_below.is_none());
        assert!((p.threshold_norm / 1e12 - 1.0).abs() < 1e-6);
        assert!(rung_compactness_probe(&l, 2, 64, 1e-3).is_err());
    }
}
