use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent convention for the Fourier weight `(1 + |k|²)^e`.
///
/// `PaperHalf` uses `e = s/2` inside the squared norm; `Standard` uses
/// `e = s`. Only relative orderings matter for the implemented checks, so
/// both are supported and tagged in every output file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightConvention {
    #[default]
    #[serde(rename = "paper-s/2")]
    PaperHalf,
    #[serde(rename = "standard-s")]
    Standard,
}

impl WeightConvention {
    pub fn tag(self) -> &'static str {
        match self {
            WeightConvention::PaperHalf => "paper-s/2",
            WeightConvention::Standard => "standard-s",
        }
    }

    /// Accepts the file tags as well as the short CLI spellings.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "paper" | "paper-s/2" => Ok(WeightConvention::PaperHalf),
            "standard" | "standard-s" => Ok(WeightConvention::Standard),
            other => Err(Error::Input(format!("unknown weight convention {other:?}"))),
        }
    }

    /// Exponent applied to `1 + |k|²` for smoothness `s`.
    pub fn exponent(self, s: f64) -> f64 {
        match self {
            WeightConvention::PaperHalf => 0.5 * s,
            WeightConvention::Standard => s,
        }
    }
}

/// A smoothness exponent `s ≥ 0` together with its weight convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevOrder {
    s: f64,
    #[serde(default)]
    convention: WeightConvention,
}

impl SobolevOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Input(format!("Sobolev order must be finite and >= 0, got {s}")));
        }
        Ok(SobolevOrder { s, convention: WeightConvention::default() })
    }

    pub fn with_convention(mut self, convention: WeightConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn value(&self) -> f64 {
        self.s
    }

    pub fn convention(&self) -> WeightConvention {
        self.convention
    }

    /// Weight of a Fourier mode with squared Euclidean length `norm_sq`.
    pub fn weight(&self, norm_sq: f64) -> f64 {
        (1.0 + norm_sq).powf(self.convention.exponent(self.s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(SobolevOrder::new(-0.1).is_err());
        assert!(SobolevOrder::new(f64::NAN).is_err());
        assert!(SobolevOrder::new(f64::INFINITY).is_err());
    }

    #[test]
    fn weights_follow_convention() {
        let s = SobolevOrder::new(2.0).unwrap();
        assert_eq!(s.weight(1.0), 2.0);
        let st = s.with_convention(WeightConvention::Standard);
        assert_eq!(st.weight(1.0), 4.0);
        assert_eq!(s.weight(0.0), 1.0);
    }

    #[test]
    fn tags_round_trip() {
        for c in [WeightConvention::PaperHalf, WeightConvention::Standard] {
            assert_eq!(WeightConvention::parse(c.tag()).unwrap(), c);
        }
        assert!(WeightConvention::parse("sobolev").is_err());
    }
}
