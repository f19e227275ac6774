//! SU(2) representation varieties of finitely presented groups, realized
//! through unit quaternions: a deterministic multistart solver for the
//! relator equations, twisted cohomology of the presentation complex at a
//! solution, Kuranishi charts around orbits, and the signed orbit count
//! for integral homology sphere presentations.

pub mod casson;
pub mod fox;
pub mod local;
pub mod presentation;
pub mod quat;
pub mod solve;
pub mod system;

pub use casson::{casson_count, CassonOpts, CassonReport};
pub use fox::{fox_complex, twisted_cohomology, CohomologyDims, FoxComplex};
pub use local::{local_chart, LocalChartOpts};
pub use presentation::{GroupPresentation, HomologyReport, Word};
pub use quat::Quat;
pub use solve::{solve_reps, RepOrbit, RepPoint, SolveOpts, SolveReport};
pub use system::{relator_system, system_eval, SystemEval};
