//! Decides the Blackwell order between two quantum information structures:
//! either constructs a trace-preserving completely positive map carrying one
//! bipartite state into the other, or produces a certified witness game —
//! an environment plus payoff observables — on which the supposedly worse
//! structure achieves strictly higher optimal payoff.
//!
//! Module map:
//! - [`matops`]: dense complex algebra over labeled tensor factors
//! - [`states`]: density operators, information structures, entropy
//! - [`channels`]: Kraus/Choi representations, CP/TP tests, local-map solve
//! - [`games`]: games, POVM strategies, certified optimal-payoff solver
//! - [`teleport`]: generalized teleportation (Bell bases, Weyl corrections)
//! - [`compare`]: the decision procedure, witness search, classical LP
//! - [`formats`]: JSON/CSV file formats shared with the CLI

pub mod channels;
pub mod compare;
pub mod formats;
pub mod games;
pub mod matops;
mod simplex;
pub mod states;
pub mod teleport;

pub use channels::{ChoiMatrix, KrausChannel, Superoperator};
pub use compare::{ComparisonVerdict, Diagnostics, FeasibilityReport, StochasticMatrix};
pub use games::{Game, OptimalPayoffResult, Povm};
pub use matops::{ComplexMatrix, HermitianOperator, SystemLayout};
pub use states::{ClassicalStructure, DensityOperator, InformationStructure, PauliSet};
