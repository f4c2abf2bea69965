//! Gaffney constants for Δ₊ and Δ₋ on primitive k-forms (k < n) under D or JD,
//! and the 𝒥-conjugation check between the plus and minus Dirichlet integrals.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::harmonic::gen_eig;
use super::linalg::{kron_real, null_space_local, CMat};
use super::modes::Spectral;
use crate::error::{Result, SymError};
use crate::fiber_algebra::SymplecticModel;
use crate::grid_domain::{inner_product, FormField, Grid};
use crate::symplectic_operators::{matvec, Assembler, BoundaryCondition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Which {
    Plus,
    Minus,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::Plus => "plus",
            Which::Minus => "minus",
        }
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Which {
    type Err = SymError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(Which::Plus),
            "minus" => Ok(Which::Minus),
            _ => Err(SymError::Invalid(format!("unknown Laplacian '{s}' (plus|minus)"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaffneyReport {
    pub which: Which,
    pub bc: String,
    pub degree: usize,
    pub shape: String,
    /// min (D(η) + ‖η‖²) / ‖η‖₁² over the constrained primitive subspace.
    pub constant: f64,
    /// Fourier mode attaining the minimum.
    pub mode: Vec<i64>,
}

/// Hermitian form Aᴴ W A with diagonal row weights W.
fn energy(a: &CMat, w: &[f64]) -> CMat {
    if a.nrows() == 0 {
        return CMat::zeros(a.ncols(), a.ncols());
    }
    let mut wa = a.clone();
    for (r, &x) in w.iter().enumerate() {
        wa.row_mut(r).scale_mut(x);
    }
    a.adjoint() * wa
}

fn diag(w: &[f64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(w.len(), w.iter().map(|&x| nalgebra::Complex::new(x, 0.0))))
}

/// Generalized-eigenvalue Gaffney constant on resolved Fourier modes.
pub fn gaffney_constant(which: Which, bc: BoundaryCondition, k: usize, grid: &Grid, md: &SymplecticModel) -> Result<GaffneyReport> {
    let n = md.n;
    if k >= n {
        return Err(SymError::Degree { n, degree: k });
    }
    if !matches!(bc, BoundaryCondition::D | BoundaryCondition::JD) {
        return Err(SymError::Invalid(format!("Gaffney constants are defined under D or JD, not {bc}")));
    }
    let sp = Spectral::new(grid, md)?;
    let mut best = f64::INFINITY;
    let mut best_mode = 0;
    let mut seen: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    for mode in (0..sp.modes.len()).filter(|&m| sp.modes.resolved(m)) {
        let conj = sp.modes.conjugate(mode);
        let lam = match seen.get(&conj) {
            Some(&v) => v,
            None => {
                let ops = sp.ops(mode);
                let w = |deg: usize| ops.weights(deg, false);
                let mass = diag(&w(k));
                let dirichlet = match which {
                    Which::Plus => energy(&ops.dp(k), &w(k + 1)) + energy(&ops.dps(k), &w(k.saturating_sub(1))),
                    Which::Minus => energy(&ops.dm(k), &w(k.saturating_sub(1))) + energy(&ops.dms(k), &w(k + 1)),
                };
                let q = ops.pdim(k);
                let dx1 = kron_real(&sp.axis.d1, &CMat::identity(q, q));
                let per: f64 = ops.symbols.iter().map(|s| s.norm_sqr()).sum();
                let h1 = energy(&dx1, &w(k)) + &mass * nalgebra::Complex::new(1.0 + per, 0.0);
                let z = null_space_local(&ops.bc_rows(bc, k)?, ops.size(k), 1e-11);
                if z.ncols() == 0 {
                    f64::INFINITY
                } else {
                    let zh = z.adjoint();
                    let num = &zh * (dirichlet + mass) * &z;
                    let den = &zh * h1 * &z;
                    let (vals, _) = gen_eig(&num, &den, false)?;
                    vals.iter().copied().fold(f64::INFINITY, f64::min)
                }
            }
        };
        seen.insert(mode, lam);
        if lam < best {
            best = lam;
            best_mode = mode;
        }
    }
    if !best.is_finite() {
        return Err(SymError::NotConverged("constrained subspace is empty".into()));
    }
    Ok(GaffneyReport {
        which,
        bc: bc.name().to_string(),
        degree: k,
        shape: grid.shape_label(),
        constant: best,
        mode: sp.modes.numbers[best_mode].clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Conjugation {
    /// D_{∂₋′}(η, η) = (n−k+1)²‖∂₋η‖² + (n−k)²‖∂₋*η‖².
    pub minus_prime: f64,
    /// D_{∂₊}(𝒥η, 𝒥η).
    pub plus_of_j: f64,
    pub relative: f64,
}

fn sq(asm_op: &sprs::CsMat<f64>, f: &FormField, deg: usize) -> Result<f64> {
    let g = FormField { grid: f.grid.clone(), degree: deg, primitive_flag: false, coeffs: matvec(asm_op, &f.coeffs) };
    inner_product(&g, &g)
}

/// Compares the minus′ Dirichlet integral of η with the plus integral of 𝒥η using the assembled operators.
pub fn conjugation_check(eta: &FormField, md: &SymplecticModel) -> Result<Conjugation> {
    let n = md.n;
    let k = eta.degree;
    if k >= n {
        return Err(SymError::Degree { n, degree: k });
    }
    if !eta.check_primitive(md) {
        return Err(SymError::NotPrimitive);
    }
    let asm = Assembler::new(&eta.grid, md)?;
    let (nf, kf) = (n as f64, k as f64);
    let mut minus_prime = (nf - kf).powi(2) * sq(&asm.dminusstar(k), eta, k + 1)?;
    if k > 0 {
        minus_prime += (nf - kf + 1.0).powi(2) * sq(&asm.dminus(k), eta, k - 1)?;
    }
    let jeta = eta.map_fiber(md.jop(k), k);
    let mut plus_of_j = sq(&asm.dplus(k), &jeta, k + 1)?;
    if k > 0 {
        plus_of_j += sq(&asm.dplusstar(k), &jeta, k - 1)?;
    }
    let relative = (minus_prime - plus_of_j).abs() / minus_prime.abs().max(plus_of_j.abs()).max(f64::MIN_POSITIVE);
    Ok(Conjugation { minus_prime, plus_of_j, relative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_domain::{make_grid, random_field};

    #[test]
    fn constants_are_positive_and_at_most_one() {
        let g = make_grid(1, &[9, 8], 2).unwrap();
        let md = SymplecticModel::new(1).unwrap();
        for which in [Which::Plus, Which::Minus] {
            for bc in [BoundaryCondition::D, BoundaryCondition::JD] {
                let r = gaffney_constant(which, bc, 0, &g, &md).unwrap();
                assert!(r.constant > 0.0 && r.constant <= 1.0 + 1e-12, "{which} {bc}: {}", r.constant);
            }
        }
        assert!(gaffney_constant(Which::Plus, BoundaryCondition::N, 0, &g, &md).is_err());
        assert!(gaffney_constant(Which::Plus, BoundaryCondition::D, 1, &g, &md).is_err());
    }

    #[test]
    fn conjugation_matches_the_plus_integral() {
        let md = SymplecticModel::new(2).unwrap();
        let g = make_grid(2, &[5, 4, 4, 4], 2).unwrap();
        for k in 0..2 {
            let eta = random_field(&g, &md, k, true, 2, 4).unwrap();
            let c = conjugation_check(&eta, &md).unwrap();
            assert!(c.minus_prime > 1.0);
            assert!(c.relative < 1e-12, "k={k}: {}", c.relative);
        }
    }

    #[test]
    fn minus_constant_on_functions_is_near_a_quarter_at_n2() {
        // D_{∂₋}(f) = ‖∂₋*f‖² = ‖df‖²/4 on functions when n = 2
        let md = SymplecticModel::new(2).unwrap();
        let g = make_grid(2, &[5, 4, 4, 4], 2).unwrap();
        let r = gaffney_constant(Which::Minus, BoundaryCondition::D, 0, &g, &md).unwrap();
        assert!(r.constant > 0.25 && r.constant < 0.3, "{}", r.constant);
    }
}
