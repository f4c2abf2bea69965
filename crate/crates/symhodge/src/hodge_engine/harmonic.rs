//! Harmonic fields as low-energy directions of Q(η) = Σ ‖Aη‖² on bc-constrained subspaces.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use super::linalg::{herm_eig, herm_eigvals, null_space_local, CMat, CVec};
use super::modes::{ModeOps, Spectral};
use crate::error::{Result, SymError};
use crate::fiber_algebra::SymplecticModel;
use crate::grid_domain::{FormField, Grid};
use crate::symplectic_operators::BoundaryCondition;

pub const DEFAULT_CUTOFF: f64 = 1e-8;
pub const MIN_STRADDLE: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum HarmonicKind {
    Plus,
    Minus,
    PlusPlus,
    MinusMinus,
}

impl HarmonicKind {
    pub const ALL: [HarmonicKind; 4] = [HarmonicKind::Plus, HarmonicKind::Minus, HarmonicKind::PlusPlus, HarmonicKind::MinusMinus];

    pub fn name(self) -> &'static str {
        match self {
            HarmonicKind::Plus => "plus",
            HarmonicKind::Minus => "minus",
            HarmonicKind::PlusPlus => "plusplus",
            HarmonicKind::MinusMinus => "minusminus",
        }
    }

    pub fn check_degree(self, n: usize, k: usize) -> Result<()> {
        let ok = match self {
            HarmonicKind::Plus | HarmonicKind::Minus => k < n,
            HarmonicKind::PlusPlus | HarmonicKind::MinusMinus => k == n,
        };
        if ok {
            Ok(())
        } else {
            Err(SymError::Invalid(format!("kind {} is not defined on degree {k} (n = {n})", self.name())))
        }
    }

    /// The two defining operators with their output degrees.
    pub fn operators(self, ops: &ModeOps, k: usize) -> [(CMat, usize); 2] {
        match self {
            HarmonicKind::Plus => [(ops.dp(k), k + 1), (ops.dps(k), k.wrapping_sub(1))],
            HarmonicKind::Minus => [(ops.dm(k), k.wrapping_sub(1)), (ops.dms(k), k + 1)],
            HarmonicKind::PlusPlus => [(ops.dpm(), k), (ops.dps(k), k - 1)],
            HarmonicKind::MinusMinus => [(ops.dm(k), k - 1), (ops.dpms(), k)],
        }
    }
}

impl fmt::Display for HarmonicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HarmonicKind {
    type Err = SymError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "plus" | "+" => HarmonicKind::Plus,
            "minus" | "-" => HarmonicKind::Minus,
            "plusplus" | "pp" | "++" => HarmonicKind::PlusPlus,
            "minusminus" | "mm" | "--" => HarmonicKind::MinusMinus,
            _ => return Err(SymError::Invalid(format!("unknown harmonic kind '{s}'"))),
        })
    }
}

/// Kernel directions at one Fourier mode, W-orthonormal, primitive coordinates.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    pub mode: usize,
    pub vectors: CMat,
}

#[derive(Clone, Debug)]
pub struct HarmonicSpace {
    pub kind: HarmonicKind,
    pub bc: Option<BoundaryCondition>,
    pub degree: usize,
    pub grid: Grid,
    pub cutoff: f64,
    pub dimension: usize,
    /// Largest eigenvalue over all resolved modes (normalization of the cutoff).
    pub max_eigenvalue: f64,
    /// Largest kept and smallest rejected relative eigenvalue.
    pub straddle: (f64, f64),
    /// Smallest relative eigenvalues over all modes (up to 64).
    pub low_spectrum: Vec<f64>,
    pub modes: Vec<ModeBasis>,
}

impl HarmonicSpace {
    pub fn straddle_ratio(&self) -> f64 {
        let (below, above) = self.straddle;
        if below > 0.0 {
            above / below
        } else {
            above / self.cutoff
        }
    }

    /// Real orthonormal basis fields.
    pub fn to_fields(&self, md: &SymplecticModel) -> Result<Vec<FormField>> {
        let sp = Spectral::new(&self.grid, md)?;
        let per = sp.modes.len();
        let q = sp.axis.len * md.prim_dim(self.degree);
        let mut out = Vec::with_capacity(self.dimension);
        for mb in &self.modes {
            let conj = sp.modes.conjugate(mb.mode);
            if conj < mb.mode {
                continue;
            }
            let selfconj = conj == mb.mode;
            let mut cands: Vec<FormField> = Vec::new();
            for j in 0..mb.vectors.ncols() {
                let v: CVec = mb.vectors.column(j).into_owned();
                let mut blocks = vec![CVec::zeros(q); per];
                if selfconj {
                    // Re(v) and Im(v)
                    blocks[mb.mode] = v.clone();
                    cands.push(sp.inverse(&blocks, self.degree, true)?);
                    blocks[mb.mode] = v.map(|z| z * nalgebra::Complex::new(0.0, -1.0));
                    cands.push(sp.inverse(&blocks, self.degree, true)?);
                } else {
                    // Re and Im of v e^{iθ}, each scaled to unit norm
                    blocks[mb.mode] = v.clone();
                    blocks[conj] = v.map(|z| z.conj());
                    cands.push(sp.inverse(&blocks, self.degree, true)?.scaled(std::f64::consts::FRAC_1_SQRT_2));
                    blocks[mb.mode] = v.map(|z| z * nalgebra::Complex::new(0.0, -1.0));
                    blocks[conj] = v.map(|z| (z * nalgebra::Complex::new(0.0, -1.0)).conj());
                    cands.push(sp.inverse(&blocks, self.degree, true)?.scaled(std::f64::consts::FRAC_1_SQRT_2));
                }
            }
            let want = if selfconj { mb.vectors.ncols() } else { 2 * mb.vectors.ncols() };
            out.extend(orthonormalize(cands, want)?);
        }
        Ok(out)
    }

    /// |(η, λ)| per complex basis direction; a non-real mode pairs with its conjugate,
    /// so the squares sum to `pairing_energy`.
    pub fn pairings(&self, md: &SymplecticModel, eta: &FormField) -> Result<Vec<f64>> {
        let sp = Spectral::new(&self.grid, md)?;
        let blocks = sp.forward(eta, true)?;
        let w = sp.ops(0).weights(self.degree, false);
        let mut out = Vec::with_capacity(self.dimension);
        for mb in &self.modes {
            let conj = sp.modes.conjugate(mb.mode);
            if conj < mb.mode {
                continue;
            }
            let fold = if conj == mb.mode { 1.0 } else { std::f64::consts::SQRT_2 };
            let wv: CVec = CVec::from_iterator(w.len(), blocks[mb.mode].iter().zip(&w).map(|(z, &x)| z * x));
            let p = mb.vectors.adjoint() * wv;
            out.extend(p.iter().map(|z| fold * z.norm()));
        }
        Ok(out)
    }

    /// Σ_i (η, λ_i)² over the orthonormal basis, computed mode by mode.
    pub fn pairing_energy(&self, md: &SymplecticModel, eta: &FormField) -> Result<f64> {
        let sp = Spectral::new(&self.grid, md)?;
        let blocks = sp.forward(eta, true)?;
        let w = sp.ops(0).weights(self.degree, false);
        let mut e = 0.0;
        for mb in &self.modes {
            let wv: CVec = CVec::from_iterator(w.len(), blocks[mb.mode].iter().zip(&w).map(|(z, &x)| z * x));
            let p = mb.vectors.adjoint() * wv;
            e += p.norm_squared();
        }
        Ok(e)
    }
}

/// Gram–Schmidt in the quadrature inner product, keeping `want` fields.
fn orthonormalize(cands: Vec<FormField>, want: usize) -> Result<Vec<FormField>> {
    let mut order: Vec<(usize, f64)> = cands.iter().enumerate().map(|(i, f)| (i, f.norm())).collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let scale = order.first().map(|x| x.1).unwrap_or(1.0);
    let mut basis: Vec<FormField> = Vec::new();
    for (i, _) in order {
        if basis.len() == want {
            break;
        }
        let mut f = cands[i].clone();
        for _ in 0..2 {
            for b in &basis {
                let p = crate::grid_domain::inner_product(&f, b)?;
                f.axpy(-p, b);
            }
        }
        let nrm = f.norm();
        if nrm > 1e-6 * scale {
            basis.push(f.scaled(1.0 / nrm));
        }
    }
    if basis.len() != want {
        return Err(SymError::NotConverged(format!("real basis extraction kept {} of {want} directions", basis.len())));
    }
    Ok(basis)
}

/// Per-mode quadratic and mass forms in the coordinates of an orthonormal basis Z of the bc subspace.
pub(crate) struct ModeForms {
    pub z: CMat,
    pub q: CMat,
    pub mass: CMat,
}

pub(crate) fn mode_forms(ops: &ModeOps, kind: HarmonicKind, bc: Option<BoundaryCondition>, k: usize) -> Result<ModeForms> {
    let n = ops.size(k);
    let interior = bc.is_none();
    let mut q = CMat::zeros(n, n);
    for (a, out) in kind.operators(ops, k) {
        if a.nrows() == 0 {
            continue;
        }
        let w = ops.weights(out, interior);
        let wa = weighted_rows(&a, &w);
        q += a.adjoint() * wa;
    }
    let z = match bc {
        Some(b) => null_space_local(&ops.bc_rows(b, k)?, n, 1e-11),
        None => CMat::identity(n, n),
    };
    let wk = ops.weights(k, false);
    let qz = z.adjoint() * &q * &z;
    let mz = z.adjoint() * weighted_rows(&z, &wk);
    Ok(ModeForms { z, q: qz, mass: mz })
}

pub(crate) fn weighted_rows(a: &CMat, w: &[f64]) -> CMat {
    let mut out = a.clone();
    for (r, &x) in w.iter().enumerate() {
        out.row_mut(r).scale_mut(x);
    }
    out
}

/// Generalized Hermitian eigenproblem Q y = λ M y with M positive definite.
pub(crate) fn gen_eig(q: &CMat, m: &CMat, vectors: bool) -> Result<(Vec<f64>, Option<CMat>)> {
    let n = q.nrows();
    if n == 0 {
        return Ok((Vec::new(), Some(CMat::zeros(0, 0))));
    }
    let ch = nalgebra::Cholesky::new(m.clone()).ok_or_else(|| SymError::IllConditioned(f64::INFINITY))?;
    let l = ch.l();
    let linv = l.clone().try_inverse().ok_or_else(|| SymError::IllConditioned(f64::INFINITY))?;
    let s = &linv * q * linv.adjoint();
    if vectors {
        let (vals, u) = herm_eig(&s)?;
        let y = linv.adjoint() * u;
        Ok((vals, Some(y)))
    } else {
        Ok((herm_eigvals(&s)?, None))
    }
}

/// Harmonic fields of `kind` on degree k with boundary condition `bc` (None: equations at interior nodes only).
pub fn harmonic_space(
    kind: HarmonicKind,
    bc: Option<BoundaryCondition>,
    k: usize,
    grid: &Grid,
    md: &SymplecticModel,
    cutoff: f64,
) -> Result<HarmonicSpace> {
    kind.check_degree(md.n, k)?;
    if let Some(b) = bc {
        crate::symplectic_operators::bc::check_degree_n(md.n, b, k)?;
    }
    let sp = Spectral::new(grid, md)?;
    let resolved: Vec<usize> = (0..sp.modes.len()).filter(|&i| sp.modes.resolved(i)).collect();
    // pass 1: spectra
    let mut spectra: Vec<(usize, Vec<f64>)> = Vec::with_capacity(resolved.len());
    let mut global_max = 0.0f64;
    // real operators: the block at −m is the conjugate of the block at m
    let mut by_mode: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for &mode in &resolved {
        let conj = sp.modes.conjugate(mode);
        let vals = match by_mode.get(&conj) {
            Some(&i) => spectra[i].1.clone(),
            None => {
                let ops = sp.ops(mode);
                let f = mode_forms(&ops, kind, bc, k)?;
                gen_eig(&f.q, &f.mass, false)?.0
            }
        };
        global_max = vals.iter().fold(global_max, |a, &b| a.max(b));
        by_mode.insert(mode, spectra.len());
        spectra.push((mode, vals));
    }
    if global_max <= 0.0 {
        return Err(SymError::NotConverged("quadratic form vanishes identically".into()));
    }
    let thresh = cutoff * global_max;
    let mut below = 0.0f64;
    let mut above = f64::INFINITY;
    let mut dimension = 0;
    let mut all_rel: Vec<f64> = Vec::new();
    for (_, vals) in &spectra {
        for &v in vals {
            let r = v / global_max;
            all_rel.push(r);
            if v < thresh {
                dimension += 1;
                below = below.max(r.max(0.0));
            } else {
                above = above.min(r);
            }
        }
    }
    all_rel.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all_rel.truncate(64);
    // pass 2: vectors where needed
    let mut modes = Vec::new();
    for (mode, vals) in &spectra {
        let cnt = vals.iter().filter(|&&v| v < thresh).count();
        if cnt == 0 {
            continue;
        }
        let ops = sp.ops(*mode);
        let f = mode_forms(&ops, kind, bc, k)?;
        let (_, y) = gen_eig(&f.q, &f.mass, true)?;
        let y = y.unwrap();
        let x = &f.z * y.columns(0, cnt);
        modes.push(ModeBasis { mode: *mode, vectors: x });
    }
    Ok(HarmonicSpace {
        kind,
        bc,
        degree: k,
        grid: grid.clone(),
        cutoff,
        dimension,
        max_eigenvalue: global_max,
        straddle: (below, above),
        low_spectrum: all_rel,
        modes,
    })
}

/// Dense real matrix of basis coefficients (columns), for small spaces and tests.
pub fn basis_matrix(fields: &[FormField]) -> DMatrix<f64> {
    let rows = fields.first().map(|f| f.coeffs.len()).unwrap_or(0);
    DMatrix::from_fn(rows, fields.len(), |r, c| fields[c].coeffs[r])
}
