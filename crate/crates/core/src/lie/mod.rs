//! Matrix Lie groups and the mapping group `F(M, G)`.

mod group;
mod section;

pub use group::{MatrixGroup, PROJECTION_THRESHOLD};
pub use section::{
    bch_bracket, bch_order2_probe, bch_residual, bracket, exp_section, random_algebra_section, AlgebraSection,
    BchProbe, GroupSection,
};
