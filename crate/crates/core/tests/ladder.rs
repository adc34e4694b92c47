use mapgroups::ladder::{decay_partial_norm_sq, growth_ratio, rung_compactness_probe, SobolevLadder};
use mapgroups::sobolev::{SobolevOrder, WeightConvention};

const CUTOFFS: [usize; 3] = [1_000, 10_000, 100_000];

fn ord(s: f64) -> SobolevOrder {
    SobolevOrder::new(s).unwrap()
}

#[test]
fn partial_norms_split_at_the_critical_order() {
    for alpha in [1.0, 1.5, 2.0] {
        let critical = 2.0 * alpha - 1.0;
        // Above the boundary the window increments grow, below they shrink.
        assert!(growth_ratio(alpha, ord(critical + 0.2), &CUTOFFS).unwrap() > 1.0);
        assert!(growth_ratio(alpha, ord(critical - 0.2), &CUTOFFS).unwrap() < 1.0);
        let above = ord(critical + 0.2);
        let sums: Vec<f64> = CUTOFFS.iter().map(|&n| decay_partial_norm_sq(alpha, above, n)).collect();
        assert!(sums.windows(2).all(|w| w[1] - w[0] > 0.5 * w[0]), "{sums:?}");
        // The 1e3 bound at N = 1e5 needs a wider margin than 0.2.
        assert!(decay_partial_norm_sq(alpha, ord(critical + 0.5), 100_000) >= 1e3);
        assert!(decay_partial_norm_sq(alpha, above, 100_000) < 1e3);
    }
}

#[test]
fn cauchy_increments_below_the_critical_order() {
    for alpha in [1.0, 1.5, 2.0] {
        let s = ord(2.0 * alpha - 2.0);
        let inc = decay_partial_norm_sq(alpha, s, 10_001) - decay_partial_norm_sq(alpha, s, 10_000);
        assert!(inc > 0.0 && inc < 1e-6, "alpha {alpha}: {inc}");
    }
}

#[test]
fn standard_convention_halves_the_boundary() {
    let alpha = 1.5;
    let std = |s: f64| SobolevOrder::new(s).unwrap().with_convention(WeightConvention::Standard);
    assert!(growth_ratio(alpha, std(alpha - 0.5 + 0.2), &CUTOFFS).unwrap() > 1.0);
    assert!(growth_ratio(alpha, std(alpha - 0.5 - 0.2), &CUTOFFS).unwrap() < 1.0);
}

#[test]
fn every_adjacent_rung_is_compact() {
    for m in [1, 2] {
        let ladder = SobolevLadder::new(0.5 * m as f64, 4, m).unwrap();
        for j in 0..3 {
            let p = rung_compactness_probe(&ladder, j, 32, 1e-3).unwrap();
            assert!(p.compact && p.strictly_decreasing);
            assert_eq!(p.sigma_max, 1.0);
            assert!(p.cutoff_needed > 32.0 && p.cutoff_needed.is_finite());
        }
    }
}
