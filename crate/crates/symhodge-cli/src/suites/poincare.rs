//! Poincaré-lemma solvers: manufactured right-hand sides for all six operators,
//! obstruction by harmonic fields, and boundary data for ∂₊ and ∂₊*.

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use symhodge::grid_domain::{make_rho, rho_multiply};
use symhodge::hodge_engine::{harmonic_space, poincare_solve, PoincareOp, PoincareOptions, SolveReport, SolveStatus};
use symhodge::{Assembler, FormField, SymplecticModel};

use super::{apply, grids};
use crate::config::ExperimentConfig;
use crate::manufactured::TrigField;
use crate::report::{num, Report};

pub const RESIDUAL_TOL: f64 = 1e-6;
/// Obstructed inputs: |pairing energy / ‖η‖² − 1| must stay below this.
pub const PAIRING_TOL: f64 = 0.01;

const N1_SHAPES: &[&[usize]] = &[&[17, 16]];
const N2_SHAPES: &[&[usize]] = &[&[9, 8, 8, 8]];

fn row(rep: &mut Report, case: &str, r: &SolveReport, shape: &str, ok: bool) {
    rep.row(vec![
        json!(case),
        json!(r.op.name()),
        json!(r.degree),
        json!(shape),
        json!(r.status.name()),
        num(r.equation_residual),
        num(r.boundary_residual),
        num(r.closedness),
        num(r.obstruction),
        num(r.pairing_energy / r.eta_norm2.max(f64::MIN_POSITIVE)),
        json!(r.harmonic_dim),
        r.secondary_residual.map(num).unwrap_or(Value::Null),
        json!(ok),
    ]);
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let md = SymplecticModel::new(cfg.n)?;
    let n = cfg.n;
    let gs = grids(cfg, N1_SHAPES, N2_SHAPES)?;
    let opts = PoincareOptions::default();
    let mut rep = Report::new(
        cfg,
        &[
            "case",
            "operator",
            "degree",
            "shape",
            "status",
            "equation_residual",
            "boundary_residual",
            "closedness",
            "obstruction",
            "pairing_ratio",
            "harmonic_dim",
            "secondary_residual",
            "passed",
        ],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for g in &gs {
        let shape = g.shape_label();
        let asm = Assembler::new(g, &md)?;
        let rho = make_rho(g);
        for op in PoincareOp::ALL {
            for k in op.degrees(n) {
                let src = op.source_degree(n, k).expect("degree listed by the operator");
                let alpha = TrigField::random(&md, src, 3, cfg.modes, rng.gen()).sample(g, &md)?;
                let eta = apply(&op.sparse(&asm, k), &alpha, k);
                let r = poincare_solve(op, &eta, None, &md, opts)?;
                let ok = r.status == SolveStatus::Solved && r.equation_residual <= RESIDUAL_TOL;
                row(&mut rep, "manufactured", &r, &shape, ok);
                rep.check(format!("manufactured {op} k={k} {shape}"), ok, format!("{}, residual {:.3e}", r.status.name(), r.equation_residual));

                let (kind, bc) = op.harmonic(n, k, false);
                let h = harmonic_space(kind, bc, k, g, &md, cfg.cutoff)?;
                if h.dimension > 0 {
                    let fields = h.to_fields(&md)?;
                    let mut eta = FormField::zeros(g, k);
                    for f in &fields {
                        eta.axpy(rng.gen_range(-1.0..1.0), f);
                    }
                    eta.primitive_flag = true;
                    let r = poincare_solve(op, &eta, None, &md, opts)?;
                    let ratio = r.pairing_energy / r.eta_norm2;
                    let ok = r.status == SolveStatus::IntegrabilityViolated && (ratio - 1.0).abs() <= PAIRING_TOL;
                    row(&mut rep, "obstructed", &r, &shape, ok);
                    rep.check(format!("obstructed {op} k={k} {shape}"), ok, format!("{}, pairing/|eta|^2 {ratio:.6}", r.status.name()));
                }

                if matches!(op, PoincareOp::DPlus | PoincareOp::DPlusStar) {
                    let beta = TrigField::random(&md, src, 2, cfg.modes, rng.gen()).sample(g, &md)?;
                    let mut x = rho_multiply(&rho, &beta);
                    x.axpy(1.0, &alpha);
                    x.primitive_flag = true;
                    let r = poincare_solve(op, &eta, Some(&x), &md, opts)?;
                    let ok = r.status == SolveStatus::Solved && r.equation_residual <= RESIDUAL_TOL && r.boundary_residual <= RESIDUAL_TOL;
                    row(&mut rep, "boundary data", &r, &shape, ok);
                    rep.check(
                        format!("boundary data {op} k={k} {shape}"),
                        ok,
                        format!("{}, residual {:.3e}, boundary {:.3e}", r.status.name(), r.equation_residual, r.boundary_residual),
                    );
                }
            }
        }
    }
    rep.note("tol", num(opts.tol));
    rep.note("lstsq_cutoff", num(opts.cutoff));
    Ok(rep)
}
