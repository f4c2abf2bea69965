//! Gaffney constants of Δ₊ and Δ₋ under D and JD across a refinement, and the
//! 𝒥-conjugation between the minus′ and plus Dirichlet integrals.

use anyhow::{ensure, Result};
use serde_json::{json, Value};
use symhodge::grid_domain::random_field;
use symhodge::hodge_engine::{conjugation_check, gaffney_constant, Which};
use symhodge::{BoundaryCondition, SymplecticModel};

use super::grids;
use crate::config::ExperimentConfig;
use crate::report::{num, Report};

/// Allowed relative change of a constant between consecutive grids.
pub const REFINEMENT_TOL: f64 = 0.25;
pub const CONJUGATION_TOL: f64 = 1e-10;
pub const CONJUGATION_SAMPLES: usize = 5;

const N1_SHAPES: &[&[usize]] = &[&[17, 16], &[33, 32]];
const N2_SHAPES: &[&[usize]] = &[&[5, 4, 4, 4], &[9, 8, 8, 8]];

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let md = SymplecticModel::new(cfg.n)?;
    let gs = grids(cfg, N1_SHAPES, N2_SHAPES)?;
    ensure!(gs.len() >= 2, "the refinement study needs at least two shapes");
    let mut rep = Report::new(cfg, &["group", "which", "bc", "degree", "shape", "value", "mode", "change", "passed"]);
    for which in [Which::Plus, Which::Minus] {
        for bc in [BoundaryCondition::D, BoundaryCondition::JD] {
            for k in 0..cfg.n {
                let mut prev: Option<f64> = None;
                for g in &gs {
                    let r = gaffney_constant(which, bc, k, g, &md)?;
                    let c = r.constant;
                    let positive = c > 0.0;
                    rep.check(format!("positive {which} {bc} k={k} {}", r.shape), positive, format!("{c:.6}"));
                    let change = prev.map(|p| (c - p).abs() / p.abs().max(c.abs()));
                    let ok = positive && change.map_or(true, |x| x <= REFINEMENT_TOL);
                    if let Some(x) = change {
                        rep.check(format!("refinement {which} {bc} k={k} ->{}", r.shape), x <= REFINEMENT_TOL, format!("relative change {x:.4}"));
                    }
                    rep.row(vec![
                        json!("constant"),
                        json!(which.name()),
                        json!(bc.name()),
                        json!(k),
                        json!(r.shape),
                        num(c),
                        json!(r.mode),
                        change.map(num).unwrap_or(Value::Null),
                        json!(ok),
                    ]);
                    prev = Some(c);
                }
            }
        }
    }
    let g = &gs[0];
    let mut worst = 0.0f64;
    for k in 0..cfg.n {
        for s in 0..CONJUGATION_SAMPLES {
            let eta = random_field(g, &md, k, true, cfg.modes, cfg.seed.wrapping_mul(7717).wrapping_add((k * 97 + s) as u64))?;
            let c = conjugation_check(&eta, &md)?;
            worst = worst.max(c.relative);
            let ok = c.relative <= CONJUGATION_TOL;
            rep.row(vec![
                json!("conjugation"),
                json!("minus_prime vs plus of J"),
                Value::Null,
                json!(k),
                json!(g.shape_label()),
                num(c.relative),
                Value::Null,
                Value::Null,
                json!(ok),
            ]);
            rep.check(format!("conjugation k={k} sample {s} {}", g.shape_label()), ok, format!("{:.3e} vs {:.3e}, relative {:.3e}", c.minus_prime, c.plus_of_j, c.relative));
        }
    }
    rep.note("max_conjugation_relative", num(worst));
    Ok(rep)
}
