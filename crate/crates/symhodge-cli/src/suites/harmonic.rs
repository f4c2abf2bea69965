//! Harmonic-field dimensions for every kind and boundary condition on a sequence
//! of refined grids: constrained counts must be stable, unconstrained counts grow.

use anyhow::{ensure, Result};
use serde_json::{json, Value};
use symhodge::hodge_engine::harmonic::MIN_STRADDLE;
use symhodge::hodge_engine::{harmonic_space, HarmonicKind};
use symhodge::{BoundaryCondition, SymplecticModel};

use super::grids;
use crate::config::ExperimentConfig;
use crate::report::{num, Report};

const N1_SHAPES: &[&[usize]] = &[&[17, 16], &[33, 32]];
const N2_SHAPES: &[&[usize]] = &[&[5, 4, 4, 4], &[9, 8, 8, 8]];

/// (kind, degree, bc) triples; `None` is the unconstrained space.
pub fn cases(n: usize) -> Vec<(HarmonicKind, usize, Option<BoundaryCondition>)> {
    use BoundaryCondition::*;
    let mut out = Vec::new();
    for k in 0..n {
        for bc in [Some(NPlus), Some(DPlus), None] {
            out.push((HarmonicKind::Plus, k, bc));
        }
        for bc in [Some(NMinus), Some(DMinus), None] {
            out.push((HarmonicKind::Minus, k, bc));
        }
    }
    for bc in [Some(NPlus), Some(DPlusMinus), None] {
        out.push((HarmonicKind::PlusPlus, n, bc));
    }
    for bc in [Some(NPlusMinus), Some(DMinus), None] {
        out.push((HarmonicKind::MinusMinus, n, bc));
    }
    out
}

/// Unconstrained spaces that must be infinite-dimensional: 0 < k < n, or k = n for the mixed kinds.
pub fn must_grow(kind: HarmonicKind, k: usize, n: usize) -> bool {
    match kind {
        HarmonicKind::Plus | HarmonicKind::Minus => k > 0 && k < n,
        _ => k == n,
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let md = SymplecticModel::new(cfg.n)?;
    let gs = grids(cfg, N1_SHAPES, N2_SHAPES)?;
    ensure!(gs.len() >= 2, "the refinement study needs at least two shapes");
    let mut rep = Report::new(cfg, &["kind", "degree", "bc", "shape", "dimension", "straddle_below", "straddle_above", "straddle_ratio", "expect", "passed"]);
    let mut worst_ratio = f64::INFINITY;
    for (kind, k, bc) in cases(cfg.n) {
        let label = bc.map(|b| b.name()).unwrap_or("none");
        let expect = match bc {
            Some(_) => "stable",
            None if must_grow(kind, k, cfg.n) => "growing",
            None => "reported",
        };
        let mut dims = Vec::new();
        for g in &gs {
            let h = harmonic_space(kind, bc, k, g, &md, cfg.cutoff)?;
            let ratio = h.straddle_ratio();
            worst_ratio = worst_ratio.min(ratio);
            dims.push(h.dimension);
            rep.row(vec![
                json!(kind.name()),
                json!(k),
                json!(label),
                json!(g.shape_label()),
                json!(h.dimension),
                num(h.straddle.0),
                num(h.straddle.1),
                num(ratio),
                json!(expect),
                Value::Null,
            ]);
            rep.check(format!("straddle {kind} k={k} {label} {}", g.shape_label()), ratio >= MIN_STRADDLE, format!("ratio {ratio:.3e}"));
        }
        let ok = match expect {
            "stable" => dims.windows(2).all(|w| w[0] == w[1]),
            "growing" => dims.windows(2).all(|w| w[0] < w[1]),
            _ => true,
        };
        if let Some(last) = rep.rows.last_mut() {
            *last.last_mut().expect("row has cells") = json!(ok);
        }
        if expect != "reported" {
            rep.check(format!("{expect} {kind} k={k} {label}"), ok, format!("dimensions {dims:?}"));
        }
    }
    rep.note("min_straddle_ratio", num(worst_ratio));
    rep.note("cutoff", num(cfg.cutoff));
    Ok(rep)
}
