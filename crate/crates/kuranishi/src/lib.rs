//! Finite-dimensional Kuranishi charts with polynomial sections.
//!
//! A chart is an open box-union domain `V` in R^n, a trivial obstruction
//! bundle `R^m`, a polynomial section `s: V -> R^m`, and a finite labeled
//! footprint inside the zero set of `s`. Virtual dimension is `n - m`.
//! On top of charts the crate provides morphisms, homotopies and atlases
//! (`atlas`), mapping-cone tangent complexes (`tangent`), and perturbed
//! signed zero counts (`vfc`). All equalities are either coefficient-wise
//! polynomial identities or pointwise evaluations at stated tolerances;
//! every numerical routine is deterministic given its seed.

pub mod atlas;
pub mod chart;
pub mod mat;
pub mod newton;
pub mod poly;
pub mod region;
pub mod report;
pub mod tangent;
pub mod tol;
pub mod vfc;

mod error;

pub use atlas::{ChartMorphism, KuranishiAtlas, StrictMorphism};
pub use chart::{FootprintPoint, KuranishiChart, LinfChart};
pub use error::Error;
pub use mat::MatrixMap;
pub use poly::PolyMap;
pub use region::BoxUnion;
pub use report::{CheckItem, CheckReport};

pub type Result<T> = std::result::Result<T, Error>;
