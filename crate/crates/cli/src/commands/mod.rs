pub mod axioms;
pub mod domains;
pub mod groups;
pub mod ladder;
pub mod spaces;

/// Check ids whose tolerance a config file may override.
pub const KNOWN_CHECKS: &[&str] = &[
    "atlas",
    "axiom-PF",
    "axiom-PB",
    "axiom-GL",
    "axiom-MU",
    "norm-order",
    "extend-residual",
    "extend-kernel",
    "extend-minimal",
    "group-assoc",
    "group-identity",
    "group-inverse",
    "group-compat",
    "exp-log",
    "exp-homomorphism",
    "ad-conjugation",
    "bch-order2",
    "bch-bracket",
    "evolve-relations",
    "evolve-compat",
    "evolve-steps",
    "evolve-constant",
    "ladder-monotone",
    "critical-order",
    "descent-slope",
];
