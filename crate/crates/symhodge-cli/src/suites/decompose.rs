//! Decomposition battery: every flavor and degree on random primitive inputs.

use anyhow::Result;
use serde_json::json;
use symhodge::grid_domain::random_field;
use symhodge::hodge_engine::{Decomposer, Flavor};
use symhodge::SymplecticModel;

use super::grids;
use crate::config::ExperimentConfig;
use crate::report::{num, Report};

pub const ORTHOGONALITY_TOL: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-8;

const N1_SHAPES: &[&[usize]] = &[&[33, 32]];
const N2_SHAPES: &[&[usize]] = &[&[9, 8, 8, 8]];

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let md = SymplecticModel::new(cfg.n)?;
    let gs = grids(cfg, N1_SHAPES, N2_SHAPES)?;
    let mut rep = Report::new(
        cfg,
        &["flavor", "line", "degree", "shape", "samples", "max_orthogonality", "max_residual", "harmonic_dim", "discrete_dim", "max_sine", "passed"],
    );
    let (mut worst_o, mut worst_r) = (0.0f64, 0.0f64);
    for g in &gs {
        for (fi, flavor) in Flavor::all().into_iter().enumerate() {
            for k in flavor.degrees(cfg.n) {
                let dec = Decomposer::new(flavor, k, g, &md)?;
                let (mut o, mut r) = (0.0f64, 0.0f64);
                for s in 0..cfg.samples {
                    let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((fi * 7919 + k * 131 + s) as u64);
                    let eta = random_field(g, &md, k, true, cfg.modes, seed)?;
                    let d = dec.decompose(&eta)?;
                    o = o.max(d.orthogonality);
                    r = r.max(d.residual);
                }
                worst_o = worst_o.max(o);
                worst_r = worst_r.max(r);
                let ok = o <= ORTHOGONALITY_TOL && r <= RESIDUAL_TOL;
                rep.row(vec![
                    json!(flavor.name()),
                    json!(flavor.line),
                    json!(k),
                    json!(g.shape_label()),
                    json!(cfg.samples),
                    num(o),
                    num(r),
                    json!(dec.harmonic_dim),
                    json!(dec.discrete_dim),
                    num(dec.max_sine),
                    json!(ok),
                ]);
                rep.check(
                    format!("{flavor} line {} k={k} {}", flavor.line, g.shape_label()),
                    ok,
                    format!("orthogonality {o:.3e}, residual {r:.3e}"),
                );
            }
        }
    }
    rep.note("max_orthogonality", num(worst_o));
    rep.note("max_residual", num(worst_r));
    Ok(rep)
}
