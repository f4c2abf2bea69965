//! Harmonic fields, Hodge decompositions, primitive cohomology, Poincaré-lemma
//! solvers and Gaffney constants, all computed Fourier mode by Fourier mode.

pub mod cohomology;
pub mod decompose;
pub mod gaffney;
pub mod harmonic;
pub mod linalg;
pub mod modes;
pub mod poincare;

pub use cohomology::{
    cohomology_dim, cohomology_dim_with, isomorphism_battery, lefschetz_rhs, CohomologyReport, IsoCase, LefschetzReport, Level,
    PolyOptions, Relation, Variant,
};
pub use decompose::{hodge_decompose, DecompositionResult, Decomposer, Flavor, FlavorSpec};
pub use gaffney::{conjugation_check, gaffney_constant, Conjugation, GaffneyReport, Which};
pub use harmonic::{harmonic_space, HarmonicKind, HarmonicSpace, DEFAULT_CUTOFF};
pub use modes::{AxisModel, ModeOps, ModeSet, Spectral};
pub use poincare::{poincare_solve, PoincareOp, PoincareOptions, SolveReport, SolveStatus};
