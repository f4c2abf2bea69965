//! One module per subcommand; each returns a filled [`Report`].

pub mod cohomology;
pub mod decompose;
pub mod gaffney;
pub mod harmonic;
pub mod identities;
pub mod operators;
pub mod poincare;

use anyhow::{bail, Result};
use sprs::CsMat;
use symhodge::symplectic_operators::matvec;
use symhodge::{make_grid, FormField, Grid};

use crate::config::ExperimentConfig;
use crate::report::Report;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.experiment.as_str() {
        "identities" => identities::run(cfg),
        "operators" => operators::run(cfg),
        "harmonic" => harmonic::run(cfg),
        "decompose" => decompose::run(cfg),
        "cohomology" => cohomology::run(cfg),
        "poincare" => poincare::run(cfg),
        "gaffney" => gaffney::run(cfg),
        other => bail!("unknown experiment '{other}'"),
    }
}

pub(crate) fn grids(cfg: &ExperimentConfig, n1: &[&[usize]], n2: &[&[usize]]) -> Result<Vec<Grid>> {
    let defaults = if cfg.n == 1 { n1 } else { n2 };
    cfg.shapes_or(defaults).iter().map(|s| Ok(make_grid(cfg.n, s, cfg.order)?)).collect()
}

pub(crate) fn apply(a: &CsMat<f64>, f: &FormField, degree: usize) -> FormField {
    FormField { grid: f.grid.clone(), degree, primitive_flag: false, coeffs: matvec(a, &f.coeffs) }
}

/// log₂ of the error ratio between consecutive halvings.
pub(crate) fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
