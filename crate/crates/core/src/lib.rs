//! Cameron–Liebler sets of k-spaces in finite projective and affine spaces.

pub mod field;
pub mod gauss;
pub mod geometry;
pub mod incidence;
pub mod spreads;
pub mod clset;
pub mod identities;
pub mod search;
pub mod format;
