//! Fiber algebra identities: sl(2) relations, 𝒥, ⋆ and Lefschetz round trips.

use anyhow::Result;
use serde_json::json;
use symhodge::fiber_algebra::identity_suite;
use symhodge::SymplecticModel;

use crate::config::ExperimentConfig;
use crate::report::{num, Report};

pub const TOL: f64 = 1e-12;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let md = SymplecticModel::new(cfg.n)?;
    let mut rep = Report::new(cfg, &["n", "identity", "residual", "bound", "passed"]);
    let mut worst = 0.0f64;
    for c in identity_suite(&md) {
        let ok = c.residual <= TOL;
        worst = worst.max(c.residual);
        rep.row(vec![json!(cfg.n), json!(c.name), num(c.residual), num(TOL), json!(ok)]);
        rep.check(c.name.clone(), ok, format!("residual {:.3e}", c.residual));
    }
    rep.note("max_residual", num(worst));
    Ok(rep)
}
