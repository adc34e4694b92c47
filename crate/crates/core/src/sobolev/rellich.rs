use serde::{Deserialize, Serialize};

use super::field::{mode_count, multi_index};
use super::order::SobolevOrder;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub k: [i64; 2],
    pub sigma: f64,
}

/// Singular values of the inclusion of the band-limited `H^s` ball into
/// `H^t`, one per Fourier mode, sorted decreasing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub s: f64,
    pub t: f64,
    pub m: usize,
    pub modes: usize,
    pub convention: String,
    pub entries: Vec<SpectrumEntry>,
}

impl Spectrum {
    pub fn sigmas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.sigma).collect()
    }

    pub fn largest(&self) -> f64 {
        self.entries.first().map_or(0.0, |e| e.sigma)
    }

    pub fn smallest(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.sigma)
    }

    /// Rank of the first singular value below `tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.entries.iter().position(|e| e.sigma < tol)
    }

    /// Non-increasing along the sorted list, and strictly decreasing across
    /// distinct shells `‖k‖`.
    pub fn is_decreasing(&self) -> bool {
        self.entries.windows(2).all(|w| {
            let n0 = w[0].k[0] * w[0].k[0] + w[0].k[1] * w[0].k[1];
            let n1 = w[1].k[0] * w[1].k[0] + w[1].k[1] * w[1].k[1];
            if n0 == n1 {
                w[0].sigma == w[1].sigma
            } else {
                w[1].sigma < w[0].sigma
            }
        })
    }

    /// CSV with rows `(k_index, sigma)`, `k_index` being the rank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k_index,sigma\n");
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&format!("{i},{:.17e}\n", e.sigma));
        }
        out
    }
}

/// Exponent `a` in `σ_k = (1+‖k‖²)^a`.
fn decay_exponent(s: SobolevOrder, t: SobolevOrder) -> f64 {
    0.5 * (t.convention().exponent(t.value()) - s.convention().exponent(s.value()))
}

/// Spectrum of the inclusion `H^s_N → H^t_N` on `T^m`.
pub fn rellich_spectrum(s: SobolevOrder, t: SobolevOrder, m: usize, modes: usize) -> Result<Spectrum> {
    if s.convention() != t.convention() {
        return Err(Error::Input("orders use different weight conventions".into()));
    }
    if s.value() <= t.value() {
        return Err(Error::Input(format!("the inclusion needs s > t, got s = {}, t = {}", s.value(), t.value())));
    }
    if !(1..=2).contains(&m) {
        return Err(Error::Input(format!("dimension {m} not supported")));
    }
    let mut entries: Vec<SpectrumEntry> = (0..mode_count(m, modes))
        .map(|flat| {
            let k = multi_index(m, modes, flat);
            let nsq = (k[0] * k[0] + k[1] * k[1]) as f64;
            SpectrumEntry { k, sigma: (t.weight(nsq) / s.weight(nsq)).sqrt() }
        })
        .collect();
    entries.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
    Ok(Spectrum { s: s.value(), t: t.value(), m, modes, convention: s.convention().tag().to_string(), entries })
}

/// Smallest `‖k‖` with `σ_k < tol`, from the closed form.
pub fn decay_threshold(s: SobolevOrder, t: SobolevOrder, tol: f64) -> Result<f64> {
    let a = decay_exponent(s, t);
    if a >= 0.0 || !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Input("threshold needs s > t and 0 < tol < 1".into()));
    }
    Ok((tol.powf(1.0 / a) - 1.0).max(0.0).sqrt())
}

/// Smallest cutoff `N` for which some mode `|k_i| ≤ N` has `σ_k < tol`.
///
/// Returned as a whole number in `f64`: for small gaps `s − t` the cutoff
/// exceeds every machine integer. Above 2⁵³ it is the closed-form value
/// rounded up.
pub fn decay_cutoff(s: SobolevOrder, t: SobolevOrder, m: usize, tol: f64) -> Result<f64> {
    let r = decay_threshold(s, t, tol)?;
    // Along the diagonal ‖k‖ = √m·N.
    let mut n = (r / (m as f64).sqrt()).floor();
    if n >= 2f64.powi(53) {
        return Ok(n + 1.0);
    }
    loop {
        let nsq = m as f64 * n * n;
        if (t.weight(nsq) / s.weight(nsq)).sqrt() < tol {
            return Ok(n);
        }
        n += 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::super::field::{hs_norm, BandlimitedField};
    use super::super::order::WeightConvention;
    use super::*;

    fn o(s: f64) -> SobolevOrder {
        SobolevOrder::new(s).unwrap()
    }

    #[test]
    fn equal_orders_rejected() {
        assert!(rellich_spectrum(o(1.0), o(1.0), 1, 4).is_err());
        assert!(rellich_spectrum(o(1.0), o(2.0), 1, 4).is_err());
    }

    #[test]
    fn closed_form_value() {
        let sp = rellich_spectrum(o(2.0), o(1.0), 1, 8).unwrap();
        assert_eq!(sp.largest(), 1.0);
        let e = sp.entries.iter().find(|e| e.k[0] == 1).unwrap();
        assert!((e.sigma - 2f64.powf(-0.25)).abs() < 1e-15);
        let ek = BandlimitedField::cosine(1, 8, &[1]).unwrap();
        let ratio = hs_norm(&ek, o(1.0)).unwrap() / hs_norm(&ek, o(2.0)).unwrap();
        assert!((ratio - e.sigma).abs() < 1e-12);
    }

    #[test]
    fn sorted_and_decreasing() {
        let sp = rellich_spectrum(o(1.5), o(0.5), 2, 6).unwrap();
        assert_eq!(sp.entries.len(), 169);
        assert!(sp.is_decreasing());
        assert_eq!(sp.entries[0].k, [0, 0]);
    }

    #[test]
    fn standard_convention_decays_faster() {
        let std = |s| o(s).with_convention(WeightConvention::Standard);
        let a = rellich_spectrum(o(2.0), o(1.0), 1, 8).unwrap();
        let b = rellich_spectrum(std(2.0), std(1.0), 1, 8).unwrap();
        assert!((b.entries[1].sigma - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(b.smallest() < a.smallest());
    }

    #[test]
    fn thresholds_agree_with_the_list() {
        let (s, t) = (o(3.0), o(1.0));
        let n = decay_cutoff(s, t, 1, 1e-3).unwrap();
        assert_eq!(n, 1000.0);
        assert!(rellich_spectrum(s, t, 1, 1000).unwrap().first_below(1e-3).is_some());
        assert!(rellich_spectrum(s, t, 1, 999).unwrap().first_below(1e-3).is_none());
        // Gap 1/12: far beyond machine integers, still finite.
        let big = decay_cutoff(o(0.5 + 1.0 / 3.0), o(0.75), 1, 1e-3).unwrap();
        assert!(big > 1e70 && big.is_finite());
    }

    #[test]
    fn csv_layout() {
        let csv = rellich_spectrum(o(1.0), o(0.0), 1, 1).unwrap().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "k_index,sigma");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1.0"));
    }
}
