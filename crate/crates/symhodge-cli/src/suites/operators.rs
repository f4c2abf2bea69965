//! Symbols, roundoff identities of the assembled operators, and convergence of
//! the splitting d = ∂₊ + L∂₋, of ∂₊² and of the Green's defects under h → h/2.

use anyhow::{ensure, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use symhodge::symplectic_operators::{block_multipliers, greens_defect, symbol_adapted, symbol_at, GreenSide};
use symhodge::{Assembler, FormField, Grid, OpTag, SymplecticModel};

use super::{apply, grids, observed_order};
use crate::config::{format_shape, ExperimentConfig};
use crate::manufactured::TrigField;
use crate::report::{num, Report};

pub const SYMBOL_TOL: f64 = 1e-12;
pub const MULTIPLIER_TOL: f64 = 1e-10;
pub const SINGULAR_FLOOR: f64 = 0.25 - 1e-10;
pub const ROUNDOFF_TOL: f64 = 1e-10;
/// Observed order must lie within this fraction of the nominal order.
pub const ORDER_SLACK: f64 = 0.2;
/// Defects below this on every grid count as identically zero.
pub const EXACT_FLOOR: f64 = 1e-12;
pub const COVECTORS: usize = 100;

const N1_SHAPES: &[&[usize]] = &[&[17, 16], &[33, 32]];
const N2_SHAPES: &[&[usize]] = &[&[9, 8, 8, 8], &[17, 16, 16, 16]];

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Seeded unit covectors, uniform direction.
pub fn unit_covectors(m: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            out.push(v.iter().map(|x| x / r).collect());
        }
    }
    out
}

fn push(rep: &mut Report, group: &str, name: String, degree: Value, shape: &str, value: f64, bound: String, ok: bool) {
    rep.row(vec![json!(group), json!(name.clone()), degree, json!(shape), num(value), json!(bound.clone()), json!(ok)]);
    rep.check(format!("{group}: {name} {shape}"), ok, format!("value {value:.3e}, bound {bound}"));
}

fn symbols(rep: &mut Report, md: &SymplecticModel, seed: u64) -> Result<()> {
    let m = md.dim();
    let xis = unit_covectors(m, COVECTORS, seed);
    let expected = |tag: OpTag, k: usize| -> DMatrix<f64> {
        match tag {
            OpTag::D => md.ext(0, k).clone(),
            OpTag::DStar => -md.int(0, k),
            OpTag::DLam => -md.int(1, k),
            _ => md.ext(1, k).clone(),
        }
    };
    for tag in [OpTag::D, OpTag::DStar, OpTag::DLam, OpTag::DLamStar] {
        for k in (0..=m).filter(|&k| tag.out_degree(md.n, k).is_some()) {
            let mut worst = 0.0f64;
            for xi in &xis {
                let a = symbol_adapted(tag, md, k, xi)?;
                worst = worst.max(max_abs(&(&a.matrix - expected(tag, k))));
            }
            let name = format!("sigma({tag}) adapted-frame formula");
            push(rep, "symbol", name, json!(k), "", worst, format!("<= {SYMBOL_TOL:e}"), worst <= SYMBOL_TOL);
        }
    }
    for tag in [OpTag::LapDDLam, OpTag::LapDPlusDLam] {
        let mut dev = 0.0f64;
        let mut smin = f64::INFINITY;
        for k in 0..=m {
            for xi in &xis {
                let a = symbol_adapted(tag, md, k, xi)?;
                let b = block_multipliers(md, &a);
                dev = dev.max(b.offdiag);
                for (cls, want) in [(0, 1.0), (1, 1.0), (2, 0.25), (3, 0.25)] {
                    let (lo, hi) = b.ranges[cls];
                    if lo.is_finite() {
                        dev = dev.max((lo - want).abs()).max((hi - want).abs());
                    }
                }
                let s = symbol_at(tag, md, k, &[], xi)?;
                smin = smin.min(s.matrix.clone().svd(false, false).singular_values.min());
            }
        }
        push(rep, "symbol", format!("sigma({tag}) block multipliers 1,1,1/4,1/4"), Value::Null, "", dev, format!("<= {MULTIPLIER_TOL:e}"), dev <= MULTIPLIER_TOL);
        push(rep, "symbol", format!("sigma({tag}) smallest singular value"), Value::Null, "", smin, format!(">= {SINGULAR_FLOOR}"), smin >= SINGULAR_FLOOR);
    }
    Ok(())
}

fn rel(num_: &FormField, den: &FormField) -> f64 {
    num_.norm() / den.norm().max(f64::MIN_POSITIVE)
}

/// Relative size of d_exact η − (∂₊ + L∂₋)_h η.
fn split_error(asm: &Assembler, md: &SymplecticModel, f: &TrigField, exact_d: bool) -> Result<f64> {
    let g = asm.grid;
    let k = f.degree;
    let eta = f.sample(g, md)?;
    let mut approx = apply(&asm.dplus(k), &eta, k + 1);
    if k > 0 {
        let lm = &asm.pointwise(md.l(k - 1)) * &asm.dminus(k);
        approx.axpy(1.0, &apply(&lm, &eta, k + 1));
    }
    let reference = if exact_d { f.d_exact(g, md)? } else { apply(&asm.d(k), &eta, k + 1) };
    Ok(rel(&reference.sub(&approx), &reference))
}

/// ‖∂₊,h ψ‖/‖ψ‖ with ψ = ∂₊α sampled exactly (`exact`) or computed discretely.
fn dplus_squared(asm: &Assembler, md: &SymplecticModel, f: &TrigField, exact: bool) -> Result<f64> {
    let k = f.degree;
    let psi = if exact { f.dplus_exact(asm.grid, md)? } else { apply(&asm.dplus(k), &f.sample(asm.grid, md)?, k + 1) };
    Ok(rel(&apply(&asm.dplus(k + 1), &psi, k + 2), &psi))
}

fn green_cases(n: usize) -> Vec<(OpTag, usize, usize)> {
    let mut v = Vec::new();
    for k in 1..=n {
        v.push((OpTag::DLam, k, k - 1));
    }
    for k in 0..n {
        v.push((OpTag::DPlus, k, k + 1));
    }
    for k in 1..=n {
        v.push((OpTag::DMinus, k, k - 1));
    }
    v
}

fn green(asm: &Assembler, md: &SymplecticModel, tag: OpTag, phi: &TrigField, psi: &TrigField, side: GreenSide) -> Result<f64> {
    let g = asm.grid;
    let (a, b) = (phi.sample(g, md)?, psi.sample(g, md)?);
    let scale = apply(&asm.raw(tag, phi.degree)?, &a, psi.degree).norm() * b.norm();
    Ok(greens_defect(asm, tag, &a, &b, side)? / scale.max(f64::MIN_POSITIVE))
}

/// Named per-grid quantities with the excess of their nominal order over the stencil order.
/// Green's defects are boundary sums of one-sided truncation errors weighted by h, hence one order higher.
fn convergent(md: &SymplecticModel, g: &Grid, seed: u64) -> Result<Vec<(String, usize, usize, f64)>> {
    let n = md.n;
    let asm = Assembler::new(g, md)?;
    let field = |k: usize, salt: u64| TrigField::random(md, k, 3, if n == 1 { 2 } else { 1 }, seed.wrapping_mul(31).wrapping_add(salt + k as u64));
    let mut out = Vec::new();
    for k in 0..=n {
        out.push(("d_exact - (dplus + L dminus)".to_string(), k, 0, split_error(&asm, md, &field(k, 0), true)?));
    }
    // mixed frequencies: with equal ones the h² terms of D_i∂_jα and D_j∂_iα cancel
    for k in 0..n.saturating_sub(1) {
        out.push(("dplus applied to sampled dplus alpha".to_string(), k, 0, dplus_squared(&asm, md, &TrigField::random(md, k, 3, 2, seed.wrapping_mul(31).wrapping_add(10 + k as u64)), true)?));
    }
    for (tag, k, kp) in green_cases(n) {
        for (side, label) in [(GreenSide::Forward, "forward"), (GreenSide::Adjoint, "adjoint")] {
            let v = green(&asm, md, tag, &field(k, 20), &field(kp, 30), side)?;
            out.push((format!("green {tag} {label} defect"), k, 1, v));
        }
    }
    Ok(out)
}

fn roundoff(rep: &mut Report, md: &SymplecticModel, g: &Grid, seed: u64) -> Result<()> {
    let n = md.n;
    let asm = Assembler::new(g, md)?;
    let shape = g.shape_label();
    let field = |k: usize| TrigField::random(md, k, 3, 2, seed.wrapping_add(100 + k as u64));
    for k in 0..=n {
        let v = split_error(&asm, md, &field(k), false)?;
        push(rep, "roundoff", "d_h = dplus_h + L dminus_h".into(), json!(k), &shape, v, format!("<= {ROUNDOFF_TOL:e}"), v <= ROUNDOFF_TOL);
    }
    for k in 0..n.saturating_sub(1) {
        let v = dplus_squared(&asm, md, &field(k), false)?;
        push(rep, "roundoff", "dplus_h dplus_h = 0".into(), json!(k), &shape, v, format!("<= {ROUNDOFF_TOL:e}"), v <= ROUNDOFF_TOL);
    }
    for k in 0..=n {
        let eta = field(k).sample(g, md)?;
        let lhs = apply(&asm.dlamstar(k), &eta, k + 1);
        let rhs = apply(&asm.d(k), &eta.map_fiber(md.jop(k), k), k + 1).map_fiber(&md.jop_inv(k + 1), k + 1);
        let mut sum = lhs.clone();
        sum.axpy(1.0, &rhs);
        let v = rel(&sum, &lhs);
        push(rep, "roundoff", "dlamstar_h = -Jinv d_h J".into(), json!(k), &shape, v, format!("<= {ROUNDOFF_TOL:e}"), v <= ROUNDOFF_TOL);
        if k >= 1 {
            let lhs = apply(&asm.dminusprime(k), &eta, k - 1);
            let rhs = apply(&asm.dplusstar(k), &eta.map_fiber(md.jop(k), k), k - 1).map_fiber(&md.jop_inv(k - 1), k - 1);
            let v = rel(&lhs.sub(&rhs), &lhs);
            push(rep, "roundoff", "dminusprime_h = Jinv dplusstar_h J".into(), json!(k), &shape, v, format!("<= {ROUNDOFF_TOL:e}"), v <= ROUNDOFF_TOL);
        }
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let md = SymplecticModel::new(cfg.n)?;
    let gs = grids(cfg, N1_SHAPES, N2_SHAPES)?;
    ensure!(gs.len() >= 2, "the convergence study needs at least two shapes");
    let mut rep = Report::new(cfg, &["group", "name", "degree", "shape", "value", "bound", "passed"]);
    symbols(&mut rep, &md, cfg.seed)?;
    roundoff(&mut rep, &md, &gs[0], cfg.seed)?;
    let per_grid: Vec<Vec<(String, usize, usize, f64)>> = gs.iter().map(|g| convergent(&md, g, cfg.seed)).collect::<Result<_>>()?;
    for (gi, g) in gs.iter().enumerate() {
        for (name, k, _, v) in &per_grid[gi] {
            rep.row(vec![json!("error"), json!(name), json!(k), json!(g.shape_label()), num(*v), Value::Null, Value::Null]);
        }
    }
    let mut worst_dev = 0.0f64;
    for w in 0..gs.len() - 1 {
        let label = format!("{}->{}", format_shape(&gs[w].shape), format_shape(&gs[w + 1].shape));
        for ((name, k, lift, c), (_, _, _, f)) in per_grid[w].iter().zip(&per_grid[w + 1]) {
            if c.abs() < EXACT_FLOOR && f.abs() < EXACT_FLOOR {
                push(&mut rep, "order", format!("{name} (vanishes identically)"), json!(k), &label, c.max(*f), format!("< {EXACT_FLOOR:e}"), true);
                continue;
            }
            let nominal = (cfg.order + lift) as f64;
            let p = observed_order(*c, *f);
            let ok = (p - nominal).abs() <= ORDER_SLACK * nominal;
            worst_dev = worst_dev.max((p - nominal).abs());
            let bound = format!("{:.1}..{:.1}", nominal * (1.0 - ORDER_SLACK), nominal * (1.0 + ORDER_SLACK));
            push(&mut rep, "order", name.clone(), json!(k), &label, p, bound, ok);
        }
    }
    rep.note("stencil_order", json!(cfg.order));
    rep.note("green_nominal_order", json!(cfg.order + 1));
    rep.note("max_order_deviation", num(worst_dev));
    Ok(rep)
}
