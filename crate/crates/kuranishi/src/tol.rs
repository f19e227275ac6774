//! Tolerance constants used across the crate. Two regimes: coefficient-wise
//! polynomial identities (tight) and pointwise evaluations (looser).

/// Coefficient-wise polynomial identity tolerance.
pub const COEFF_IDENTITY: f64 = 1e-9;

/// Coefficients below this are dropped during normalization.
pub const COEFF_DROP: f64 = 1e-15;

/// Max residual `||s(x)||_inf` allowed at a footprint point.
pub const FOOTPRINT_RESIDUAL: f64 = 1e-9;

/// Pointwise map/matrix agreement at footprint or sampled points.
pub const POINTWISE: f64 = 1e-7;

/// Newton convergence target on `||s||_inf`.
pub const NEWTON_CONVERGED: f64 = 1e-12;

/// Acceptance residual for a polished zero.
pub const ZERO_ACCEPT: f64 = 1e-9;

/// Pairwise separation below which two candidate zeros are one cluster.
pub const ZERO_CLUSTER: f64 = 1e-6;

/// `|det ds|` below this marks a zero as degenerate.
pub const DET_DEGENERATE: f64 = 1e-8;

/// Singular values below this count as zero when computing ranks.
pub const SVD_RANK: f64 = 1e-8;

/// Induced cohomology-map comparison tolerance.
pub const COHOMOLOGY_MAP: f64 = 1e-6;

/// Footprint injectivity: images closer than this collide.
pub const EMBED_SEPARATION: f64 = 1e-9;

/// Sample density per axis used by quotient-equality checks.
pub const KHOM_SAMPLE_DENSITY: usize = 5;
