//! Cohomology against harmonic-field dimensions, and the Lefschetz-map count of
//! PH^k(∂₊, D₊) from relative de Rham ranks.

use anyhow::Result;
use serde_json::json;
use symhodge::hodge_engine::{cohomology_dim_with, isomorphism_battery, lefschetz_rhs, Level, PolyOptions, Relation, Variant};
use symhodge::SymplecticModel;

use super::grids;
use crate::config::ExperimentConfig;
use crate::report::{num, Report};

const N1_SHAPES: &[&[usize]] = &[&[17, 16]];
const N2_SHAPES: &[&[usize]] = &[&[5, 4, 4, 4]];

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let md = SymplecticModel::new(cfg.n)?;
    let gs = grids(cfg, N1_SHAPES, N2_SHAPES)?;
    let opts = PolyOptions { cutoff: cfg.cutoff, ..PolyOptions::default() };
    let mut rep = Report::new(cfg, &["group", "name", "degree", "shape", "lhs", "rhs", "relation", "passed"]);
    for g in &gs {
        let shape = g.shape_label();
        for c in isomorphism_battery(g, &md, opts)? {
            let rel = match c.relation {
                Relation::Equal => "=",
                Relation::AtLeast => ">=",
            };
            let ok = c.holds();
            rep.row(vec![json!("isomorphism"), json!(c.name), json!(c.degree), json!(shape), json!(c.lhs), json!(c.rhs), json!(rel), json!(ok)]);
            rep.check(format!("{} k={} {shape}", c.name, c.degree), ok, format!("{} {rel} {}", c.lhs, c.rhs));
        }
        for k in 0..cfg.n {
            let lhs = cohomology_dim_with(Level::DPlus, Variant::RelativeD, k, g, &md, opts)?;
            let l = lefschetz_rhs(k, g, &md, opts)?;
            let ok = lhs.dimension == l.rhs();
            let name = "dplus/relative_D vs ker L + coker L";
            rep.row(vec![json!("lefschetz"), json!(name), json!(k), json!(shape), json!(lhs.dimension), json!(l.rhs()), json!("="), json!(ok)]);
            rep.check(format!("{name} k={k} {shape}"), ok, format!("{} = {} + {}", lhs.dimension, l.kernel, l.cokernel));
            rep.note(&format!("relative_betti_{shape}"), json!(l.relative_betti));
            rep.note(&format!("lefschetz_min_straddle_k{k}_{shape}"), num(l.min_straddle));
        }
    }
    rep.note("poly_degree", json!(opts.q));
    rep.note("poly_degree_step", json!(opts.dq));
    rep.note("rank_cutoff", num(opts.cutoff));
    Ok(rep)
}
