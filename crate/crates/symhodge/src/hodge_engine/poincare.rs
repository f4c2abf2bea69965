//! Poincaré-lemma solvers: integrability first, then a per-mode weighted
//! least-squares solve, checked against the sparse assembled operator.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::harmonic::{harmonic_space, HarmonicKind, DEFAULT_CUTOFF};
use super::linalg::{null_space_local, svd, CMat, CVec};
use super::modes::{ModeOps, Spectral};
use crate::error::{Result, SymError};
use crate::fiber_algebra::SymplecticModel;
use crate::grid_domain::FormField;
use crate::symplectic_operators::{bc_rows, matvec, Assembler, BoundaryCondition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PoincareOp {
    DPlus,
    DPlusStar,
    DMinus,
    DMinusStar,
    Dpm,
    DpmStar,
}

impl PoincareOp {
    pub const ALL: [PoincareOp; 6] =
        [PoincareOp::DPlus, PoincareOp::DPlusStar, PoincareOp::DMinus, PoincareOp::DMinusStar, PoincareOp::Dpm, PoincareOp::DpmStar];

    pub fn name(self) -> &'static str {
        match self {
            PoincareOp::DPlus => "dplus",
            PoincareOp::DPlusStar => "dplusstar",
            PoincareOp::DMinus => "dminus",
            PoincareOp::DMinusStar => "dminusstar",
            PoincareOp::Dpm => "dpm",
            PoincareOp::DpmStar => "dpmstar",
        }
    }

    /// Degree of the unknown for right-hand sides of degree k (None when the lemma does not apply).
    pub fn source_degree(self, n: usize, k: usize) -> Option<usize> {
        match self {
            PoincareOp::DPlus | PoincareOp::DMinusStar => (k >= 1 && k <= n).then(|| k - 1),
            PoincareOp::DPlusStar | PoincareOp::DMinus => (k < n).then_some(k + 1),
            PoincareOp::Dpm | PoincareOp::DpmStar => (k == n && n >= 1).then_some(n),
        }
    }

    /// Degrees of right-hand sides the lemma covers at half-dimension n.
    pub fn degrees(self, n: usize) -> Vec<usize> {
        (0..=n).filter(|&k| self.source_degree(n, k).is_some()).collect()
    }

    fn operator(self, ops: &ModeOps, k: usize) -> CMat {
        let n = ops.md.n;
        match self {
            PoincareOp::DPlus => ops.dp(k - 1),
            PoincareOp::DPlusStar => ops.dps(k + 1),
            PoincareOp::DMinus => ops.dm(k + 1),
            PoincareOp::DMinusStar => ops.dms(k - 1),
            PoincareOp::Dpm => ops.dpm(),
            PoincareOp::DpmStar => {
                debug_assert_eq!(k, n);
                ops.dpms()
            }
        }
    }

    /// Closedness operator on the right-hand side.
    fn closedness(self, ops: &ModeOps, k: usize) -> CMat {
        let n = ops.md.n;
        match self {
            PoincareOp::DPlus if k == n => ops.dpm(),
            PoincareOp::DPlus => ops.dp(k),
            PoincareOp::DPlusStar => ops.dps(k),
            PoincareOp::DMinus => ops.dm(k),
            PoincareOp::DMinusStar if k == n => ops.dpms(),
            PoincareOp::DMinusStar => ops.dms(k),
            PoincareOp::Dpm => ops.dm(n),
            PoincareOp::DpmStar => ops.dps(n),
        }
    }

    /// Harmonic space whose pairings obstruct exactness.
    pub fn harmonic(self, n: usize, k: usize, with_boundary_data: bool) -> (HarmonicKind, Option<BoundaryCondition>) {
        use BoundaryCondition::*;
        let top = k == n;
        if with_boundary_data {
            return (if top { HarmonicKind::PlusPlus } else { HarmonicKind::Plus }, None);
        }
        match self {
            PoincareOp::DPlus if top => (HarmonicKind::PlusPlus, Some(NPlus)),
            PoincareOp::DPlus => (HarmonicKind::Plus, Some(NPlus)),
            PoincareOp::DPlusStar => (HarmonicKind::Plus, Some(DPlus)),
            PoincareOp::DMinus => (HarmonicKind::Minus, Some(NMinus)),
            PoincareOp::DMinusStar if top => (HarmonicKind::MinusMinus, Some(DMinus)),
            PoincareOp::DMinusStar => (HarmonicKind::Minus, Some(DMinus)),
            PoincareOp::Dpm => (HarmonicKind::MinusMinus, Some(DPlusMinus)),
            PoincareOp::DpmStar => (HarmonicKind::PlusPlus, Some(NPlusMinus)),
        }
    }

    /// Boundary condition tying the solution to the data x, and the operator kept small among solutions.
    fn boundary_problem(self) -> Option<BoundaryCondition> {
        match self {
            PoincareOp::DPlus => Some(BoundaryCondition::DPlus),
            PoincareOp::DPlusStar => Some(BoundaryCondition::NPlus),
            _ => None,
        }
    }

    fn secondary(self, ops: &ModeOps, src: usize) -> CMat {
        match self {
            PoincareOp::DPlus => ops.dps(src),
            _ => ops.dp(src),
        }
    }

    /// Assembled operator mapping the source degree onto degree k.
    pub fn sparse(self, asm: &Assembler, k: usize) -> sprs::CsMat<f64> {
        let n = asm.grid.n;
        match self {
            PoincareOp::DPlus => asm.dplus(k - 1),
            PoincareOp::DPlusStar => asm.dplusstar(k + 1),
            PoincareOp::DMinus => asm.dminus(k + 1),
            PoincareOp::DMinusStar => asm.dminusstar(k - 1),
            PoincareOp::Dpm => &asm.dplus(n - 1) * &asm.dminus(n),
            PoincareOp::DpmStar => &asm.dminusstar(n - 1) * &asm.dplusstar(n),
        }
    }
}

impl fmt::Display for PoincareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoincareOp {
    type Err = SymError;
    fn from_str(s: &str) -> Result<Self> {
        PoincareOp::ALL.iter().copied().find(|o| o.name() == s).ok_or_else(|| SymError::Invalid(format!("unknown operator '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Solved,
    IntegrabilityViolated,
    NotConverged,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::IntegrabilityViolated => "integrability_violated",
            SolveStatus::NotConverged => "not_converged",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoincareOptions {
    /// Relative tolerance on closedness, discrete obstruction and equation residual.
    pub tol: f64,
    pub cutoff: f64,
}

impl Default for PoincareOptions {
    fn default() -> Self {
        PoincareOptions { tol: 1e-6, cutoff: DEFAULT_CUTOFF }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub op: PoincareOp,
    pub degree: usize,
    pub status: SolveStatus,
    pub solution: Option<FormField>,
    /// ‖Pφ − η‖ / ‖η‖ with the sparse assembled operator.
    pub equation_residual: f64,
    /// Quadrature norm of the boundary rows applied to φ − x, relative to ‖φ‖ (0 without boundary data).
    pub boundary_residual: f64,
    /// ‖Cη‖ / (‖C‖ ‖η‖) for the closedness operator C of the lemma.
    pub closedness: f64,
    /// Distance of η − Px from the discrete range, relative to ‖η‖.
    pub obstruction: f64,
    /// |(η − Px, λ)| over the harmonic basis directions, descending.
    pub integrability: Vec<f64>,
    /// Σ (η − Px, λ)² over the harmonic basis.
    pub pairing_energy: f64,
    /// ‖η‖².
    pub eta_norm2: f64,
    pub harmonic_dim: usize,
    /// ‖Sφ‖ / ‖φ‖ for the operator minimized among solutions (boundary problems only).
    pub secondary_residual: Option<f64>,
}

fn scale_rows(a: &CMat, s: &[f64]) -> CMat {
    let mut out = a.clone();
    for (r, &x) in s.iter().enumerate() {
        out.row_mut(r).scale_mut(x);
    }
    out
}

fn scale_cols(a: &CMat, s: &[f64]) -> CMat {
    let mut out = a.clone();
    for (c, &x) in s.iter().enumerate() {
        out.column_mut(c).scale_mut(x);
    }
    out
}

fn scale_vec(v: &CVec, s: &[f64]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().zip(s).map(|(z, &x)| z * x))
}

/// Minimal-norm least-squares solution and an orthonormal basis of the kernel.
fn lstsq(a: &CMat, b: &CVec, rel: f64) -> (CVec, CMat) {
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        return (CVec::zeros(cols), CMat::identity(cols, cols));
    }
    let d = svd(a, true);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let r = d.s.iter().filter(|&&x| x > rel * smax && x > 0.0).count();
    let pinv = |rhs: &CVec| {
        let mut x = CVec::zeros(cols);
        for i in 0..r {
            let coef = d.u.column(i).dotc(rhs) / d.s[i];
            x += d.v.column(i) * coef;
        }
        x
    };
    let mut x = pinv(b);
    // one refinement step against the backward error of the factorization
    x += pinv(&(b - a * &x));
    (x, d.v.columns(r, cols - r).into_owned())
}

const LSQ_REL: f64 = 1e-10;

/// Solves Pφ = η (with φ − x in the lemma's boundary condition when x is given).
pub fn poincare_solve(op: PoincareOp, eta: &FormField, x: Option<&FormField>, md: &SymplecticModel, opts: PoincareOptions) -> Result<SolveReport> {
    let grid = &eta.grid;
    let n = md.n;
    let k = eta.degree;
    let src = op.source_degree(n, k).ok_or(SymError::Degree { n, degree: k })?;
    if !eta.check_primitive(md) {
        return Err(SymError::NotPrimitive);
    }
    let bvp = match (x, op.boundary_problem()) {
        (Some(xf), Some(bc)) => {
            if xf.degree != src || xf.grid != *grid {
                return Err(SymError::Invalid(format!("boundary data must be a degree-{src} field on the same grid")));
            }
            if !xf.check_primitive(md) {
                return Err(SymError::NotPrimitive);
            }
            Some((xf, bc))
        }
        (Some(_), None) => return Err(SymError::Invalid(format!("operator {op} takes no boundary data"))),
        (None, _) => None,
    };
    let sp = Spectral::new(grid, md)?;
    let eta_hat = sp.forward(eta, true)?;
    let x_hat = match bvp {
        Some((xf, _)) => Some(sp.forward(xf, true)?),
        None => None,
    };
    let ops0 = sp.ops(0);
    let s_out: Vec<f64> = ops0.weights(k, false).iter().map(|w| w.sqrt()).collect();
    let eta_norm2 = eta.norm().powi(2);
    let eta_norm = eta_norm2.sqrt().max(f64::MIN_POSITIVE);

    let mut closed_num = 0.0;
    let mut closed_norm = 0.0f64;
    let mut obstruction2 = 0.0;
    let mut rhs_blocks: Vec<CVec> = Vec::with_capacity(eta_hat.len());
    let mut sol_blocks: Vec<CVec> = Vec::with_capacity(eta_hat.len());
    let mut secondary_num = 0.0;
    for (mode, e) in eta_hat.iter().enumerate() {
        let ops = sp.ops(mode);
        // closedness of the right-hand side
        let c = op.closedness(&ops, k);
        if c.nrows() > 0 {
            let out_deg = c.nrows() / sp.axis.len;
            let s_c: Vec<f64> = sp.axis.weights.iter().flat_map(|&w| std::iter::repeat(w.sqrt()).take(out_deg)).collect();
            let cs = scale_cols(&scale_rows(&c, &s_c), &s_out.iter().map(|s| 1.0 / s).collect::<Vec<_>>());
            closed_num += (&cs * scale_vec(e, &s_out)).norm_squared();
            closed_norm = closed_norm.max(svd(&cs, false).s.first().copied().unwrap_or(0.0));
        }
        let a = op.operator(&ops, k);
        let (rhs, base, v) = match (&bvp, &x_hat) {
            (Some((_, bc)), Some(xh)) => {
                let v = null_space_local(&ops.bc_rows(*bc, src)?, ops.size(src), 1e-11);
                (e - &a * &xh[mode], xh[mode].clone(), v)
            }
            _ => (e.clone(), CVec::zeros(ops.size(src)), CMat::identity(ops.size(src), ops.size(src))),
        };
        // weighted problem in the constrained coordinates
        let av = scale_rows(&(&a * &v), &s_out);
        let (coef, kernel) = lstsq(&av, &scale_vec(&rhs, &s_out), LSQ_REL);
        let fit = &av * &coef;
        obstruction2 += (scale_vec(&rhs, &s_out) - fit).norm_squared();
        let mut phi = &base + &v * &coef;
        if bvp.is_some() && kernel.ncols() > 0 {
            // among solutions, minimize the secondary operator
            let sop = op.secondary(&ops, src);
            if sop.nrows() > 0 {
                let so = sop.nrows() / sp.axis.len;
                let s_s: Vec<f64> = sp.axis.weights.iter().flat_map(|&w| std::iter::repeat(w.sqrt()).take(so)).collect();
                let m = scale_rows(&(&sop * &v * &kernel), &s_s);
                let r0 = scale_vec(&(&sop * &phi), &s_s);
                let (t, _) = lstsq(&m, &(-r0), LSQ_REL);
                phi += &v * (&kernel * t);
            }
        }
        if bvp.is_some() {
            let sop = op.secondary(&ops, src);
            if sop.nrows() > 0 {
                let so = sop.nrows() / sp.axis.len;
                let s_s: Vec<f64> = sp.axis.weights.iter().flat_map(|&w| std::iter::repeat(w.sqrt()).take(so)).collect();
                secondary_num += scale_vec(&(&sop * &phi), &s_s).norm_squared();
            }
        }
        rhs_blocks.push(rhs);
        sol_blocks.push(phi);
    }
    let closedness = if closed_norm > 0.0 { closed_num.sqrt() / (closed_norm * eta_norm) } else { 0.0 };
    let obstruction = obstruction2.sqrt() / eta_norm;

    // pairings with the physical harmonic basis
    let (kind, hbc) = op.harmonic(n, k, bvp.is_some());
    let h = harmonic_space(kind, hbc, k, grid, md, opts.cutoff)?;
    let rhs_field = sp.inverse(&rhs_blocks, k, true)?;
    let mut integrability = h.pairings(md, &rhs_field)?;
    integrability.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let pairing_energy: f64 = integrability.iter().map(|v| v * v).sum();

    let mut report = SolveReport {
        op,
        degree: k,
        status: SolveStatus::IntegrabilityViolated,
        solution: None,
        equation_residual: f64::NAN,
        boundary_residual: 0.0,
        closedness,
        obstruction,
        integrability,
        pairing_energy,
        eta_norm2,
        harmonic_dim: h.dimension,
        secondary_residual: None,
    };
    if closedness > opts.tol || obstruction > opts.tol {
        return Ok(report);
    }
    let phi = sp.inverse(&sol_blocks, src, true)?;
    let asm = Assembler::new(grid, md)?;
    let p = op.sparse(&asm, k);
    let applied = FormField { grid: grid.clone(), degree: k, primitive_flag: false, coeffs: matvec(&p, &phi.coeffs) };
    report.equation_residual = applied.sub(eta).norm() / eta_norm;
    let phi_norm = phi.norm().max(f64::MIN_POSITIVE);
    if let Some((xf, bc)) = bvp {
        let rows = bc_rows(&asm, bc, src)?;
        let diff = phi.sub(xf);
        let r = matvec(&rows.matrix, &diff.coeffs);
        report.boundary_residual = (r.iter().map(|v| v * v).sum::<f64>() * grid.face_weight()).sqrt() / phi_norm;
        report.secondary_residual = Some(secondary_num.sqrt() / phi_norm);
    }
    report.status = if report.equation_residual <= opts.tol && report.boundary_residual <= opts.tol {
        SolveStatus::Solved
    } else {
        SolveStatus::NotConverged
    };
    report.solution = Some(phi);
    Ok(report)
}
