//! Symplectic exterior calculus on flat cylinders [0,1] × T^{2n−1}.

pub mod error;
pub mod fiber_algebra;
pub mod grid_domain;
pub mod hodge_engine;
pub mod symplectic_operators;

pub use error::{Result, SymError};
pub use fiber_algebra::{FiberForm, LefschetzComponents, SymplecticModel};
pub use grid_domain::{make_grid, BoundaryTrace, DefiningFunction, FormField, Grid};
pub use symplectic_operators::{assemble, Assembler, BoundaryCondition, LinearOpMatrix, OpTag};
