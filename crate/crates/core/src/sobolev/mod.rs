//! Fractional Sobolev calculus on the m-torus (m = 1, 2) and on sampled
//! restrictions to boxes inside its fundamental domain `[0, 2π)^m`.

mod cutoff;
mod diffeo;
mod extension;
mod field;
mod grid;
mod nemytskij;
mod order;
mod rellich;
mod sampled;

pub use cutoff::{
    cutoff_multiply_bandlimited, cutoff_multiply_sampled, multiplier_bound_probe, smooth_step, SmoothCutoff,
};
pub use diffeo::{pullback, Diffeo};
pub use extension::{min_norm_extension, quotient_norm, ExtensionOperator};
pub use field::{hs_inner, hs_norm, BandlimitedField};
pub use grid::{BoxRegion, GridDomain, Window};
pub use nemytskij::{nemytskij, nemytskij_at, nemytskij_continuity_slope, node_rms, SmoothMap};
pub use order::{SobolevOrder, WeightConvention};
pub use rellich::{decay_cutoff, decay_threshold, rellich_spectrum, Spectrum, SpectrumEntry};
pub use sampled::{extend_by_zero, restrict, restrict_sampled, sample, synthesize, Interpolation, SampledField};

/// Period of the torus along every axis.
pub const PERIOD: f64 = std::f64::consts::TAU;

/// Reduces `x` into `[0, 2π)`.
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(PERIOD);
    if r >= PERIOD {
        0.0
    } else {
        r
    }
}

/// Signed distance between two angles, in `[-π, π)`.
pub fn circular_diff(a: f64, b: f64) -> f64 {
    (a - b + std::f64::consts::PI).rem_euclid(PERIOD) - std::f64::consts::PI
}
