//! Three-term Hodge decompositions of primitive fields, one Fourier mode at a time.
//!
//! Each flavor is a triple (A, bc on the potentials of A, A′ with bc on the
//! kernel block). In W^{1/2}-scaled coordinates the pieces are
//! U₂ = range(A V₂), U₁ = (ker A′ ∩ Z) + U₂ minus U₂, and the rest.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::harmonic::{harmonic_space, HarmonicKind, DEFAULT_CUTOFF};
use super::linalg::{hstack, null_space, null_space_local, range_space, svd, vstack, CMat, CVec};
use super::modes::{ModeOps, Spectral};
use crate::error::{Result, SymError};
use crate::fiber_algebra::SymplecticModel;
use crate::grid_domain::{inner_product, FormField, Grid};
use crate::symplectic_operators::BoundaryCondition;

const RANK_REL: f64 = 1e-10;

/// One line of the decomposition table: the kind of Laplacian and the line number 1..=3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Flavor {
    pub kind: HarmonicKind,
    pub line: u8,
}

/// Operators and conditions of a flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlavorSpec {
    /// Condition on the potentials of the first range.
    pub potential_bc: Option<BoundaryCondition>,
    /// Condition on the kernel block.
    pub kernel_bc: Option<BoundaryCondition>,
    /// Boundary condition of the matching harmonic space.
    pub harmonic_bc: Option<BoundaryCondition>,
}

impl Flavor {
    pub fn all() -> Vec<Flavor> {
        HarmonicKind::ALL.iter().flat_map(|&kind| (1..=3).map(move |line| Flavor { kind, line })).collect()
    }

    pub fn spec(self) -> FlavorSpec {
        use BoundaryCondition::*;
        use HarmonicKind::*;
        let (p, z, h) = match (self.kind, self.line) {
            (Plus, 1) => (Some(DPlus), Some(DPlus), Some(DPlus)),
            (Plus, 2) => (None, None, Some(NPlus)),
            (Plus, _) => (Some(DPlus), None, None),
            (Minus, 1) => (Some(DMinus), Some(DMinus), Some(DMinus)),
            (Minus, 2) => (None, None, Some(NMinus)),
            (Minus, _) => (Some(DMinus), None, None),
            (PlusPlus, 1) => (None, None, Some(NPlus)),
            (PlusPlus, 2) => (Some(DPlus), Some(DPlusMinus), Some(DPlusMinus)),
            (PlusPlus, _) => (Some(DPlus), None, None),
            (MinusMinus, 1) => (Some(DPlusMinus), Some(DMinus), Some(DMinus)),
            (MinusMinus, 2) => (None, None, Some(NPlusMinus)),
            (MinusMinus, _) => (Some(DPlusMinus), None, None),
        };
        FlavorSpec { potential_bc: p, kernel_bc: z, harmonic_bc: h }
    }

    pub fn check_degree(self, n: usize, k: usize) -> Result<()> {
        if !(1..=3).contains(&self.line) {
            return Err(SymError::Invalid(format!("flavor line {} (expected 1..3)", self.line)));
        }
        self.kind.check_degree(n, k)
    }

    /// Degrees the flavor applies to at half-dimension n.
    pub fn degrees(self, n: usize) -> Vec<usize> {
        match self.kind {
            HarmonicKind::Plus | HarmonicKind::Minus => (0..n).collect(),
            _ => vec![n],
        }
    }

    pub fn name(self) -> String {
        let h = self.spec().harmonic_bc.map(|b| b.name()).unwrap_or("none");
        format!("{}:{}", self.kind.name(), h)
    }

    /// Forward operator A (None when its source degree does not exist).
    fn first(self, ops: &ModeOps, k: usize) -> Option<(CMat, usize)> {
        match self.kind {
            HarmonicKind::Plus => (k > 0).then(|| (ops.dp(k - 1), k - 1)),
            HarmonicKind::Minus => Some((ops.dm(k + 1), k + 1)),
            HarmonicKind::PlusPlus => Some((ops.dp(k - 1), k - 1)),
            HarmonicKind::MinusMinus => Some((ops.dpm(), k)),
        }
    }

    /// Next operator A′ of the complex.
    fn second(self, ops: &ModeOps, k: usize) -> CMat {
        match self.kind {
            HarmonicKind::Plus => ops.dp(k),
            HarmonicKind::Minus => ops.dm(k),
            HarmonicKind::PlusPlus => ops.dpm(),
            HarmonicKind::MinusMinus => ops.dm(k),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Flavor {
    type Err = SymError;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, bc) = s.split_once(':').ok_or_else(|| SymError::Invalid(format!("flavor '{s}' (expected kind:bc)")))?;
        let kind: HarmonicKind = kind.parse()?;
        Flavor::all()
            .into_iter()
            .find(|f| f.kind == kind && f.spec().harmonic_bc.map(|b| b.name()).unwrap_or("none") == bc)
            .ok_or_else(|| SymError::Invalid(format!("unknown flavor '{s}'")))
    }
}

#[derive(Clone, Debug)]
struct ModeProj {
    u1: CMat,
    u2: CMat,
}

/// Precomputed per-mode projectors for one flavor on one grid and degree.
pub struct Decomposer<'a> {
    pub flavor: Flavor,
    pub degree: usize,
    sp: Spectral<'a>,
    scale: Vec<f64>,
    proj: Vec<ModeProj>,
    /// Dimension of the physical harmonic space with the flavor's condition.
    pub harmonic_dim: usize,
    /// Dimension of the discrete harmonic block over resolved modes.
    pub discrete_dim: usize,
    /// Largest sine of the principal angles from the physical harmonic space to the discrete block.
    pub max_sine: f64,
}

fn scale_rows(a: &CMat, s: &[f64]) -> CMat {
    let mut out = a.clone();
    for (r, &x) in s.iter().enumerate() {
        out.row_mut(r).scale_mut(x);
    }
    out
}

fn mode_proj(flavor: Flavor, ops: &ModeOps, k: usize, s: &[f64]) -> Result<ModeProj> {
    let spec = flavor.spec();
    let n = ops.size(k);
    let u2 = match flavor.first(ops, k) {
        Some((a, src)) => {
            let v2 = match spec.potential_bc {
                Some(b) => null_space_local(&ops.bc_rows(b, src)?, ops.size(src), RANK_REL),
                None => CMat::identity(ops.size(src), ops.size(src)),
            };
            range_space(&scale_rows(&(a * v2), s), RANK_REL, 1.0).0
        }
        None => CMat::zeros(n, 0),
    };
    let a2 = flavor.second(ops, k);
    let rows = match spec.kernel_bc {
        Some(b) => vstack(&[&a2, &ops.bc_rows(b, k)?], n),
        None => a2,
    };
    let kz = scale_rows(&null_space(&rows, n, RANK_REL), s);
    // kernel block with the range removed
    let rest = &kz - &u2 * (u2.adjoint() * &kz);
    let (mut u1, _, _) = range_space(&rest, 1e-8, 1.0);
    // the SVD's left vectors drift off the range at the 1e-6 level; clean up
    for _ in 0..2 {
        u1 = &u1 - &u2 * (u2.adjoint() * &u1);
    }
    if u1.ncols() > 0 {
        u1 = u1.qr().q();
    }
    Ok(ModeProj { u1, u2 })
}

impl<'a> Decomposer<'a> {
    pub fn new(flavor: Flavor, k: usize, grid: &'a Grid, md: &'a SymplecticModel) -> Result<Self> {
        flavor.check_degree(md.n, k)?;
        let sp = Spectral::new(grid, md)?;
        let scale: Vec<f64> = sp.ops(0).weights(k, false).iter().map(|w| w.sqrt()).collect();
        let mut proj: Vec<ModeProj> = Vec::with_capacity(sp.modes.len());
        let mut seen: HashMap<usize, usize> = HashMap::new();
        for mode in 0..sp.modes.len() {
            let conj = sp.modes.conjugate(mode);
            let p = match seen.get(&conj) {
                Some(&i) => ModeProj { u1: proj[i].u1.map(|z| z.conj()), u2: proj[i].u2.map(|z| z.conj()) },
                None => mode_proj(flavor, &sp.ops(mode), k, &scale)?,
            };
            seen.insert(mode, proj.len());
            proj.push(p);
        }
        let discrete_dim = (0..proj.len()).filter(|&m| sp.modes.resolved(m)).map(|m| proj[m].u1.ncols()).sum();
        let h = harmonic_space(flavor.kind, flavor.spec().harmonic_bc, k, grid, md, DEFAULT_CUTOFF)?;
        let mut max_sine = 0.0f64;
        for mb in &h.modes {
            let xs = scale_rows(&mb.vectors, &scale);
            let u1 = &proj[mb.mode].u1;
            let r = &xs - u1 * (u1.adjoint() * &xs);
            max_sine = max_sine.max(svd(&r, false).s.first().copied().unwrap_or(0.0));
        }
        Ok(Decomposer { flavor, degree: k, sp, scale, proj, harmonic_dim: h.dimension, discrete_dim, max_sine })
    }

    pub fn grid(&self) -> &Grid {
        self.sp.grid
    }

    pub fn decompose(&self, eta: &FormField) -> Result<DecompositionResult> {
        let k = self.degree;
        if eta.degree != k {
            return Err(SymError::Degree { n: self.sp.md.n, degree: eta.degree });
        }
        if !eta.check_primitive(self.sp.md) {
            return Err(SymError::NotPrimitive);
        }
        let blocks = self.sp.forward(eta, true)?;
        let mut parts: [Vec<CVec>; 3] = Default::default();
        for (mode, x) in blocks.iter().enumerate() {
            let y = CVec::from_iterator(x.len(), x.iter().zip(&self.scale).map(|(z, &s)| z * s));
            let p = &self.proj[mode];
            let c1 = &p.u1 * (p.u1.adjoint() * &y);
            let c2 = &p.u2 * (p.u2.adjoint() * &y);
            let c3 = &y - &c1 - &c2;
            for (i, ci) in [c1, c2, c3].into_iter().enumerate() {
                parts[i].push(CVec::from_iterator(ci.len(), ci.iter().zip(&self.scale).map(|(z, &s)| z / s)));
            }
        }
        let mut comps = Vec::with_capacity(3);
        for p in &parts {
            comps.push(self.sp.inverse(p, k, true)?);
        }
        let components: [FormField; 3] = comps.try_into().expect("three components");
        let mut gram = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] = inner_product(&components[i], &components[j])?;
            }
        }
        let e2 = eta.norm().powi(2).max(f64::MIN_POSITIVE);
        let orthogonality = [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| gram[i][j].abs() / e2).fold(0.0, f64::max);
        let mut sum = components[0].clone();
        sum.axpy(1.0, &components[1]);
        sum.axpy(1.0, &components[2]);
        let residual = eta.sub(&sum).norm() / e2.sqrt();
        Ok(DecompositionResult {
            flavor: self.flavor,
            degree: k,
            components,
            gram,
            orthogonality,
            residual,
            harmonic_dim: self.harmonic_dim,
            discrete_dim: self.discrete_dim,
            max_sine: self.max_sine,
        })
    }

    /// Orthonormal basis (columns, scaled coordinates) of the discrete harmonic block at a mode.
    pub fn harmonic_block(&self, mode: usize) -> &CMat {
        &self.proj[mode].u1
    }

    /// Stacked bases of all three pieces at a mode, for diagnostics.
    pub fn mode_frame(&self, mode: usize) -> CMat {
        let p = &self.proj[mode];
        hstack(&[&p.u1, &p.u2], p.u1.nrows())
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub flavor: Flavor,
    pub degree: usize,
    /// Harmonic part, first range, second range.
    pub components: [FormField; 3],
    pub gram: [[f64; 3]; 3],
    /// Largest off-diagonal Gram entry relative to ‖η‖².
    pub orthogonality: f64,
    /// ‖η − Σ cᵢ‖ / ‖η‖.
    pub residual: f64,
    pub harmonic_dim: usize,
    pub discrete_dim: usize,
    pub max_sine: f64,
}

pub fn hodge_decompose(eta: &FormField, flavor: Flavor, md: &SymplecticModel) -> Result<DecompositionResult> {
    Decomposer::new(flavor, eta.degree, &eta.grid, md)?.decompose(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_domain::{make_grid, random_field};

    #[test]
    fn names_round_trip() {
        let all = Flavor::all();
        assert_eq!(all.len(), 12);
        for f in all {
            assert_eq!(f.name().parse::<Flavor>().unwrap(), f);
        }
    }

    #[test]
    fn random_fields_split_orthogonally() {
        let g = make_grid(1, &[9, 8], 2).unwrap();
        let md = SymplecticModel::new(1).unwrap();
        for f in Flavor::all() {
            let k = f.degrees(1)[0];
            let dec = Decomposer::new(f, k, &g, &md).unwrap();
            let eta = random_field(&g, &md, k, true, 3, 7).unwrap();
            let r = dec.decompose(&eta).unwrap();
            assert!(r.orthogonality < 1e-10, "{f}: {}", r.orthogonality);
            assert!(r.residual < 1e-10, "{f}: {}", r.residual);
        }
    }
}
