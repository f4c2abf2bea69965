//! Discrete d, d*, d^Λ, ∂₊, ∂₋ and friends on the collocation grid, their
//! Laplacians, boundary-condition traces and rows, Green's defects and symbols.
//!
//! Fields carry full fiber coefficients; operators with a primitive domain are
//! only meaningful on pointwise-primitive inputs.

pub mod bc;
pub mod stencil;
pub mod symbol;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

use crate::error::{Result, SymError};
use crate::fiber_algebra::{binomial, SymplecticModel};
use crate::grid_domain::{boundary_pairing, inner_product, make_rho, rho_multiply, FormField, Grid};

pub use bc::{bc_residual, bc_rows, BcRows, BoundaryCondition};
pub use symbol::{adapted_frame, block_multipliers, symbol_adapted, symbol_at, AdaptedSymbol, BlockMultipliers, SymbolSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpTag {
    D,
    DStar,
    DLam,
    DLamStar,
    DPlus,
    DMinus,
    DMinusPrime,
    DPlusStar,
    DMinusStar,
    LapPlus,
    LapMinus,
    LapPP,
    LapMM,
    LapDDLam,
    LapDPlusDLam,
}

impl OpTag {
    pub const ALL: [OpTag; 15] = [
        OpTag::D,
        OpTag::DStar,
        OpTag::DLam,
        OpTag::DLamStar,
        OpTag::DPlus,
        OpTag::DMinus,
        OpTag::DMinusPrime,
        OpTag::DPlusStar,
        OpTag::DMinusStar,
        OpTag::LapPlus,
        OpTag::LapMinus,
        OpTag::LapPP,
        OpTag::LapMM,
        OpTag::LapDDLam,
        OpTag::LapDPlusDLam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpTag::D => "d",
            OpTag::DStar => "dstar",
            OpTag::DLam => "dlam",
            OpTag::DLamStar => "dlamstar",
            OpTag::DPlus => "dplus",
            OpTag::DMinus => "dminus",
            OpTag::DMinusPrime => "dminusprime",
            OpTag::DPlusStar => "dplusstar",
            OpTag::DMinusStar => "dminusstar",
            OpTag::LapPlus => "lap_plus",
            OpTag::LapMinus => "lap_minus",
            OpTag::LapPP => "lap_pp",
            OpTag::LapMM => "lap_mm",
            OpTag::LapDDLam => "lap_ddlam",
            OpTag::LapDPlusDLam => "lap_dplusdlam",
        }
    }

    /// True when the operator is defined on primitive forms only.
    pub fn primitive_domain(self) -> bool {
        !matches!(self, OpTag::D | OpTag::DStar | OpTag::DLam | OpTag::DLamStar | OpTag::LapDDLam | OpTag::LapDPlusDLam)
    }

    /// Codomain degree for domain degree k (None when undefined).
    pub fn out_degree(self, n: usize, k: usize) -> Option<usize> {
        let m = 2 * n;
        match self {
            OpTag::D => (k < m).then_some(k + 1),
            OpTag::DStar => (k >= 1 && k <= m).then(|| k - 1),
            OpTag::DLam => (k >= 1 && k <= m).then(|| k - 1),
            OpTag::DLamStar => (k < m).then_some(k + 1),
            OpTag::DPlus => (k <= n).then_some(k + 1),
            OpTag::DMinus | OpTag::DMinusPrime | OpTag::DPlusStar => (k >= 1 && k <= n).then(|| k - 1),
            OpTag::DMinusStar => (k < n).then_some(k + 1),
            OpTag::LapPlus | OpTag::LapMinus => (k < n).then_some(k),
            OpTag::LapPP | OpTag::LapMM => (k == n).then_some(k),
            OpTag::LapDDLam | OpTag::LapDPlusDLam => (k <= m).then_some(k),
        }
    }
}

impl fmt::Display for OpTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpTag {
    type Err = SymError;
    fn from_str(s: &str) -> Result<Self> {
        OpTag::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| SymError::Invalid(format!("unknown operator tag {s}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceDesc {
    pub degree: usize,
    pub primitive: bool,
    pub fiber_dim: usize,
    pub nodes: usize,
}

impl SpaceDesc {
    pub fn size(&self) -> usize {
        self.fiber_dim * self.nodes
    }
}

/// Sparse realization of a tagged operator.
#[derive(Clone, Debug)]
pub struct LinearOpMatrix {
    pub tag: OpTag,
    pub matrix: CsMat<f64>,
    pub domain: SpaceDesc,
    pub codomain: SpaceDesc,
}

impl LinearOpMatrix {
    pub fn apply(&self, f: &FormField) -> Result<FormField> {
        if f.degree != self.domain.degree || f.coeffs.len() != self.domain.size() {
            return Err(SymError::Invalid(format!(
                "{} expects degree {} with {} coefficients",
                self.tag,
                self.domain.degree,
                self.domain.size()
            )));
        }
        Ok(FormField {
            grid: f.grid.clone(),
            degree: self.codomain.degree,
            primitive_flag: false,
            coeffs: matvec(&self.matrix, &f.coeffs),
        })
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    /// Coordinate text export: a header line, then `row col value` per entry.
    pub fn write_coo<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "# tag={} domain_degree={} codomain_degree={} rows={} cols={} nnz={}",
            self.tag,
            self.domain.degree,
            self.codomain.degree,
            self.matrix.rows(),
            self.matrix.cols(),
            self.matrix.nnz()
        )?;
        for (r, row) in self.matrix.outer_iterator().enumerate() {
            for (c, v) in row.iter() {
                writeln!(w, "{r} {c} {v:e}")?;
            }
        }
        Ok(())
    }
}

pub fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    if a.is_csr() {
        for (r, row) in a.outer_iterator().enumerate() {
            y[r] = row.iter().map(|(c, v)| v * x[c]).sum();
        }
    } else {
        for (c, col) in a.outer_iterator().enumerate() {
            for (r, v) in col.iter() {
                y[r] += v * x[c];
            }
        }
    }
    y
}

fn scale(a: &CsMat<f64>, s: f64) -> CsMat<f64> {
    a.map(|v| v * s)
}

fn zeros(rows: usize, cols: usize) -> CsMat<f64> {
    CsMat::zero((rows, cols))
}

/// Builds sparse operators on one grid.
pub struct Assembler<'a> {
    pub grid: &'a Grid,
    pub model: &'a SymplecticModel,
    axis: Vec<CsMat<f64>>,
}

impl<'a> Assembler<'a> {
    pub fn new(grid: &'a Grid, model: &'a SymplecticModel) -> Result<Self> {
        if grid.n != model.n {
            return Err(SymError::DimensionMismatch(grid.n, model.n));
        }
        let axis = (0..grid.axes()).map(|a| axis_derivative(grid, a)).collect();
        Ok(Assembler { grid, model, axis })
    }

    fn nodes(&self) -> usize {
        self.grid.num_nodes()
    }

    fn fd(&self, k: usize) -> usize {
        binomial(2 * self.grid.n, k)
    }

    /// A ⊗ F with A acting on nodes and F on the fiber.
    fn kron(&self, a: &CsMat<f64>, f: &DMatrix<f64>) -> CsMat<f64> {
        let (fr, fc) = (f.nrows(), f.ncols());
        let mut fnz = Vec::new();
        for r in 0..fr {
            for c in 0..fc {
                if f[(r, c)] != 0.0 {
                    fnz.push((r, c, f[(r, c)]));
                }
            }
        }
        let mut tri = TriMat::with_capacity((a.rows() * fr, a.cols() * fc), a.nnz() * fnz.len());
        for (p, row) in a.outer_iterator().enumerate() {
            for (q, &v) in row.iter() {
                for &(r, c, x) in &fnz {
                    tri.add_triplet(p * fr + r, q * fc + c, v * x);
                }
            }
        }
        tri.to_csr()
    }

    pub fn pointwise(&self, f: &DMatrix<f64>) -> CsMat<f64> {
        let (fr, fc) = (f.nrows(), f.ncols());
        let mut tri = TriMat::new((self.nodes() * fr, self.nodes() * fc));
        for p in 0..self.nodes() {
            for r in 0..fr {
                for c in 0..fc {
                    let x = f[(r, c)];
                    if x != 0.0 {
                        tri.add_triplet(p * fr + r, p * fc + c, x);
                    }
                }
            }
        }
        tri.to_csr()
    }

    /// Σ_j D_j ⊗ e_j∧ on k-forms.
    pub fn d(&self, k: usize) -> CsMat<f64> {
        let m = 2 * self.grid.n;
        let mut acc = zeros(self.nodes() * self.fd(k + 1), self.nodes() * self.fd(k));
        if k >= m {
            return acc;
        }
        for j in 0..m {
            acc = &acc + &self.kron(&self.axis[j], self.model.ext(j, k));
        }
        acc
    }

    /// d* = −⋆d⋆ (even total dimension).
    pub fn dstar(&self, k: usize) -> CsMat<f64> {
        let m = 2 * self.grid.n;
        if k == 0 {
            return zeros(0, self.nodes());
        }
        let s1 = self.pointwise(self.model.star(k));
        let dd = self.d(m - k);
        let s2 = self.pointwise(self.model.star(m - k + 1));
        scale(&(&s2 * &(&dd * &s1)), -1.0)
    }

    fn l(&self, k: usize) -> CsMat<f64> {
        self.pointwise(self.model.l(k))
    }

    fn lam(&self, k: usize) -> CsMat<f64> {
        self.pointwise(self.model.lam(k))
    }

    /// d^Λ = dΛ − Λd, degree k → k−1.
    pub fn dlam(&self, k: usize) -> CsMat<f64> {
        let m = 2 * self.grid.n;
        let mut acc = zeros(self.nodes() * self.fd(k.saturating_sub(1)), self.nodes() * self.fd(k));
        if k == 0 {
            return zeros(0, self.nodes());
        }
        if k >= 2 {
            acc = &acc + &(&self.d(k - 2) * &self.lam(k));
        }
        if k < m {
            acc = &acc - &(&self.lam(k + 1) * &self.d(k));
        }
        acc
    }

    /// d^{Λ*} = L d* − d* L, degree k → k+1.
    pub fn dlamstar(&self, k: usize) -> CsMat<f64> {
        let m = 2 * self.grid.n;
        let mut acc = zeros(self.nodes() * self.fd(k + 1), self.nodes() * self.fd(k));
        if k >= 1 && k + 1 <= m {
            acc = &acc + &(&self.l(k - 1) * &self.dstar(k));
        }
        if k + 2 <= m {
            acc = &acc - &(&self.dstar(k + 2) * &self.l(k));
        }
        acc
    }

    /// ∂₊ = d − L H⁻¹ Λ d on primitive k-forms.
    pub fn dplus(&self, k: usize) -> CsMat<f64> {
        let n = self.grid.n;
        let dk = self.d(k);
        if k == 0 {
            return dk;
        }
        let w = 1.0 / (n as f64 - k as f64 + 1.0);
        let corr = &self.l(k - 1) * &(&self.lam(k + 1) * &dk);
        &dk - &scale(&corr, w)
    }

    /// ∂₋ = H⁻¹ Λ d on primitive k-forms.
    pub fn dminus(&self, k: usize) -> CsMat<f64> {
        let n = self.grid.n;
        let w = 1.0 / (n as f64 - k as f64 + 1.0);
        scale(&(&self.lam(k + 1) * &self.d(k)), w)
    }

    /// ∂₋′ = (H + R) ∂₋.
    pub fn dminusprime(&self, k: usize) -> CsMat<f64> {
        let hr = self.model.h(k - 1) + self.model.r(k - 1);
        &self.pointwise(&hr) * &self.dminus(k)
    }

    pub fn dplusstar(&self, k: usize) -> CsMat<f64> {
        self.dstar(k)
    }

    /// ∂₋* = (n−k)⁻¹ d* L − (n−k+1)⁻¹ L d* on primitive k-forms, k < n.
    pub fn dminusstar(&self, k: usize) -> CsMat<f64> {
        let n = self.grid.n as f64;
        let kf = k as f64;
        let a = scale(&(&self.dstar(k + 2) * &self.l(k)), 1.0 / (n - kf));
        if k == 0 {
            return a;
        }
        let b = scale(&(&self.l(k - 1) * &self.dstar(k)), 1.0 / (n - kf + 1.0));
        &a - &b
    }

    pub fn raw(&self, tag: OpTag, k: usize) -> Result<CsMat<f64>> {
        let n = self.grid.n;
        if tag.out_degree(n, k).is_none() {
            let why = match tag {
                OpTag::LapPlus | OpTag::LapMinus => format!("{tag} is defined on P^k with k < n (n = {n}), got k = {k}"),
                _ => format!("{tag} undefined on degree {k} (n = {n})"),
            };
            return Err(SymError::Invalid(why));
        }
        Ok(match tag {
            OpTag::D => self.d(k),
            OpTag::DStar => self.dstar(k),
            OpTag::DLam => self.dlam(k),
            OpTag::DLamStar => self.dlamstar(k),
            OpTag::DPlus => self.dplus(k),
            OpTag::DMinus => self.dminus(k),
            OpTag::DMinusPrime => self.dminusprime(k),
            OpTag::DPlusStar => self.dplusstar(k),
            OpTag::DMinusStar => self.dminusstar(k),
            OpTag::LapPlus => {
                let a = &self.dplusstar(k + 1) * &self.dplus(k);
                if k == 0 {
                    a
                } else {
                    &a + &(&self.dplus(k - 1) * &self.dplusstar(k))
                }
            }
            OpTag::LapMinus => {
                let b = &self.dminus(k + 1) * &self.dminusstar(k);
                if k == 0 {
                    b
                } else {
                    &(&self.dminusstar(k - 1) * &self.dminus(k)) + &b
                }
            }
            OpTag::LapPP => {
                let pm = &self.dplus(n - 1) * &self.dminus(n);
                let pm_star = &self.dminusstar(n - 1) * &self.dplusstar(n);
                let pp = &self.dplus(n - 1) * &self.dplusstar(n);
                &(&pm_star * &pm) + &(&pp * &pp)
            }
            OpTag::LapMM => {
                let pm = &self.dplus(n - 1) * &self.dminus(n);
                let pm_star = &self.dminusstar(n - 1) * &self.dplusstar(n);
                let mm = &self.dminusstar(n - 1) * &self.dminus(n);
                &(&pm * &pm_star) + &(&mm * &mm)
            }
            OpTag::LapDDLam => {
                let m = 2 * n;
                let sz = self.nodes() * self.fd(k);
                let mut q = zeros(sz, sz);
                let mut fourth = zeros(sz, sz);
                if k >= 1 {
                    let ddl = &self.d(k - 1) * &self.dlam(k);
                    fourth = &(&self.dlamstar(k - 1) * &self.dstar(k)) * &ddl;
                    q = &q + &(&self.d(k - 1) * &self.dstar(k));
                }
                if k < m {
                    q = &q + &(&self.dlam(k + 1) * &self.dlamstar(k));
                }
                &fourth + &scale(&(&q * &q), 0.25)
            }
            OpTag::LapDPlusDLam => {
                let m = 2 * n;
                let sz = self.nodes() * self.fd(k);
                let mut q = zeros(sz, sz);
                let mut fourth = zeros(sz, sz);
                if k >= 1 {
                    let ds_dls = &self.dlamstar(k - 1) * &self.dstar(k);
                    fourth = &(&self.d(k - 1) * &self.dlam(k)) * &ds_dls;
                    q = &q + &(&self.dlamstar(k - 1) * &self.dlam(k));
                }
                if k < m {
                    q = &q + &(&self.dstar(k + 1) * &self.d(k));
                }
                &fourth + &scale(&(&q * &q), 0.25)
            }
        })
    }

    pub fn assemble(&self, tag: OpTag, k: usize) -> Result<LinearOpMatrix> {
        let n = self.grid.n;
        let out = tag.out_degree(n, k).ok_or_else(|| SymError::Invalid(format!("{tag} undefined on degree {k}")))?;
        let matrix = self.raw(tag, k)?;
        let prim = tag.primitive_domain();
        Ok(LinearOpMatrix {
            tag,
            matrix,
            domain: SpaceDesc { degree: k, primitive: prim, fiber_dim: self.fd(k), nodes: self.nodes() },
            codomain: SpaceDesc { degree: out, primitive: prim && out <= n, fiber_dim: self.fd(out), nodes: self.nodes() },
        })
    }
}

/// D_j on node values (sparse, nodes × nodes).
fn axis_derivative(grid: &Grid, axis: usize) -> CsMat<f64> {
    let nodes = grid.num_nodes();
    let order = grid.stencil_order;
    let mut tri = TriMat::new((nodes, nodes));
    let ns = grid.shape[axis];
    let h = grid.spacing[axis];
    for p in 0..nodes {
        let multi = grid.node_multi(p);
        let i = multi[axis];
        let entries: Vec<(usize, f64)> = if axis == 0 {
            stencil::bounded_row(ns, h, order, i)
        } else {
            stencil::centered(order)
                .iter()
                .map(|&(o, w)| (((i as isize + o).rem_euclid(ns as isize)) as usize, w / h))
                .collect()
        };
        for (c, w) in entries {
            let mut q = multi.clone();
            q[axis] = c;
            tri.add_triplet(p, grid.node_index(&q), w);
        }
    }
    tri.to_csr()
}

/// Convenience wrapper: assemble one tagged operator on degree k.
pub fn assemble(tag: OpTag, grid: &Grid, model: &SymplecticModel, k: usize) -> Result<LinearOpMatrix> {
    Assembler::new(grid, model)?.assemble(tag, k)
}

/// Which side of Corollary-green style identities carries the boundary term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenSide {
    /// ∫⟨P(ρφ), ψ⟩
    Forward,
    /// −∫⟨φ, P*(ρψ)⟩
    Adjoint,
}

/// The adjoint tag paired with a first-order operator in Green's formula.
pub fn adjoint_tag(tag: OpTag) -> Result<OpTag> {
    Ok(match tag {
        OpTag::D => OpTag::DStar,
        OpTag::DLam => OpTag::DLamStar,
        OpTag::DPlus => OpTag::DPlusStar,
        OpTag::DMinus => OpTag::DMinusStar,
        _ => return Err(SymError::Invalid(format!("no Green's formula registered for {tag}"))),
    })
}

/// |(Pφ, ψ) − (φ, P*ψ) − boundary term| with discrete traces of P(ρφ) or P*(ρψ).
pub fn greens_defect(asm: &Assembler, tag: OpTag, phi: &FormField, psi: &FormField, side: GreenSide) -> Result<f64> {
    let adj = adjoint_tag(tag)?;
    let k = phi.degree;
    let p = asm.assemble(tag, k)?;
    let pstar = asm.assemble(adj, psi.degree)?;
    if pstar.codomain.degree != k {
        return Err(SymError::Invalid("degrees do not match the tag".into()));
    }
    let lhs = inner_product(&p.apply(phi)?, psi)? - inner_product(phi, &pstar.apply(psi)?)?;
    let rho = make_rho(asm.grid);
    let bdry = match side {
        GreenSide::Forward => boundary_pairing(&p.apply(&rho_multiply(&rho, phi))?, psi)?,
        GreenSide::Adjoint => -boundary_pairing(phi, &pstar.apply(&rho_multiply(&rho, psi))?)?,
    };
    Ok((lhs - bdry).abs())
}
