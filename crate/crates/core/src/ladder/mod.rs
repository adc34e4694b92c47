//! Decreasing Sobolev ladders and the regularity evolution map.

mod evolve;
mod rungs;

pub use evolve::{
    constant_curve_convergence, evolution_smoothness_probe, evolve, evolve_derivative, EvolveOptions, SmoothnessProbe,
    StepConvergence, TimeSampledCurve,
};
pub use rungs::{
    critical_order_estimate, decay_partial_norm_sq, growth_ratio, rung_compactness_probe, CriticalOrder, DecayField,
    RungProbe, SobolevLadder,
};
