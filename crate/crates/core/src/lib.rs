//! Mapping groups `F(M, G)` built from fractional Sobolev spaces, at desk scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`sobolev`]: band-limited fields on the torus, sampled restrictions to
//!   boxes, Sobolev norms, the minimum-norm extension operator, cutoffs,
//!   pullbacks, superposition operators and the compact-inclusion spectrum.
//! * [`atlas`]: the circle and the 2-torus as finite atlases with witness
//!   windows and a subordinate partition of unity.
//! * [`section`]: vector-valued sections stored chart-wise, glueing, the
//!   Hilbert structure, point evaluation and pushforwards.
//! * [`lie`]: matrix Lie groups with closed-form charts and the pointwise
//!   group, exponential, adjoint and bracket on sections.
//! * [`ladder`]: decreasing exponent ladders, decay witnesses and the
//!   evolution map of the regularity ODE.
//! * [`flow`]: level-set domains, inner normals and boundary flows.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod error;
pub mod flow;
pub mod io;
pub mod ladder;
pub mod lie;
pub mod probe;
pub mod section;
pub mod sobolev;

pub use error::{Error, Result};
