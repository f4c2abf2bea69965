//! Boundary conditions: constraint rows at boundary nodes and trace residuals.
//!
//! Rows use the local characterizations with the unit normal covector e₁ (the
//! x₁ direction) on both faces; residuals use discrete traces of P(ρη).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

use super::{matvec, Assembler};
use crate::error::{Result, SymError};
use crate::fiber_algebra::SymplecticModel;
use crate::grid_domain::{make_rho, rho_multiply, Face, FormField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryCondition {
    D,
    N,
    JD,
    JN,
    DPlus,
    NPlus,
    DMinus,
    NMinus,
    DPlusMinus,
    NPlusMinus,
    B,
    C,
}

impl BoundaryCondition {
    pub const ALL: [BoundaryCondition; 12] = [
        BoundaryCondition::D,
        BoundaryCondition::N,
        BoundaryCondition::JD,
        BoundaryCondition::JN,
        BoundaryCondition::DPlus,
        BoundaryCondition::NPlus,
        BoundaryCondition::DMinus,
        BoundaryCondition::NMinus,
        BoundaryCondition::DPlusMinus,
        BoundaryCondition::NPlusMinus,
        BoundaryCondition::B,
        BoundaryCondition::C,
    ];

    pub fn name(self) -> &'static str {
        use BoundaryCondition::*;
        match self {
            D => "D",
            N => "N",
            JD => "JD",
            JN => "JN",
            DPlus => "D+",
            NPlus => "N+",
            DMinus => "D-",
            NMinus => "N-",
            DPlusMinus => "D+-",
            NPlusMinus => "N+-",
            B => "B",
            C => "C",
        }
    }

    /// Conditions stated for primitive forms only.
    pub fn needs_primitive(self) -> bool {
        !matches!(self, BoundaryCondition::D | BoundaryCondition::N | BoundaryCondition::JD | BoundaryCondition::JN)
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryCondition {
    type Err = SymError;
    fn from_str(s: &str) -> Result<Self> {
        use BoundaryCondition::*;
        Ok(match s {
            "D" => D,
            "N" => N,
            "JD" => JD,
            "JN" => JN,
            "D+" | "Dplus" => DPlus,
            "N+" | "Nplus" => NPlus,
            "D-" | "Dminus" => DMinus,
            "N-" | "Nminus" => NMinus,
            "D+-" | "Dplusminus" => DPlusMinus,
            "N+-" | "Nplusminus" => NPlusMinus,
            "B" | "Bn" => B,
            "C" | "Cn" => C,
            _ => return Err(SymError::Invalid(format!("unknown boundary condition '{s}'"))),
        })
    }
}

/// Sparse constraint rows acting on full-fiber degree-k coefficient vectors.
#[derive(Clone, Debug)]
pub struct BcRows {
    pub bc: BoundaryCondition,
    pub degree: usize,
    pub matrix: CsMat<f64>,
}

impl BcRows {
    pub fn count(&self) -> usize {
        self.matrix.rows()
    }
}

pub(crate) fn check_degree_n(n: usize, bc: BoundaryCondition, k: usize) -> Result<()> {
    let m = 2 * n;
    let bad = match bc {
        BoundaryCondition::D | BoundaryCondition::N | BoundaryCondition::JD | BoundaryCondition::JN => k > m,
        BoundaryCondition::DPlus | BoundaryCondition::NPlus | BoundaryCondition::DMinus => k > n,
        BoundaryCondition::NMinus => k >= n,
        BoundaryCondition::DPlusMinus | BoundaryCondition::NPlusMinus | BoundaryCondition::B | BoundaryCondition::C => {
            k == 0 || k > n
        }
    };
    if bad {
        return Err(SymError::Degree { n, degree: k });
    }
    Ok(())
}

fn check_degree(asm: &Assembler, bc: BoundaryCondition, k: usize) -> Result<()> {
    check_degree_n(asm.grid.n, bc, k)
}

/// Pointwise fiber map whose vanishing at the boundary is the condition (simple conditions).
pub(crate) fn local_fiber(md: &SymplecticModel, bc: BoundaryCondition, k: usize) -> DMatrix<f64> {
    let n = md.n;
    let m = 2 * n;
    match bc {
        BoundaryCondition::D => md.ext(0, k).clone(),
        BoundaryCondition::N => md.int(0, k).clone(),
        BoundaryCondition::JD => md.ext(1, k).clone(),
        BoundaryCondition::JN => md.int(1, k).clone(),
        BoundaryCondition::DPlus => {
            if k + 1 > n {
                DMatrix::zeros(0, md.fiber_dim(k))
            } else {
                md.proj(k + 1) * md.ext(0, k)
            }
        }
        BoundaryCondition::NPlus => md.int(0, k).clone(),
        BoundaryCondition::DMinus => {
            if k + 1 > m {
                DMatrix::zeros(0, md.fiber_dim(k))
            } else {
                md.lam(k + 1) * md.ext(0, k)
            }
        }
        BoundaryCondition::NMinus => {
            let nf = n as f64;
            let kf = k as f64;
            let mut a = (md.int(0, k + 2) * md.l(k)) / (nf - kf);
            if k >= 1 {
                a -= (md.l(k - 1) * md.int(0, k)) / (nf - kf + 1.0);
            }
            md.proj(k + 1) * a
        }
        _ => unreachable!("composite condition"),
    }
}

/// Block-diagonal placement of a fiber map at boundary nodes only.
fn at_boundary(asm: &Assembler, f: &DMatrix<f64>) -> CsMat<f64> {
    let mask = asm.grid.boundary_mask();
    let nodes = asm.grid.num_nodes();
    let nb = mask.iter().filter(|&&b| b).count();
    let (fr, fc) = (f.nrows(), f.ncols());
    let mut tri = TriMat::new((nb * fr, nodes * fc));
    let mut row = 0;
    for (p, &b) in mask.iter().enumerate() {
        if !b {
            continue;
        }
        for r in 0..fr {
            for c in 0..fc {
                let x = f[(r, c)];
                if x != 0.0 {
                    tri.add_triplet(row + r, p * fc + c, x);
                }
            }
        }
        row += fr;
    }
    tri.to_csr()
}

fn stack(a: &CsMat<f64>, b: &CsMat<f64>) -> CsMat<f64> {
    sprs::vstack(&[a.view(), b.view()])
}

/// Constraint rows for `bc` on degree-k fields; the condition is `rows · coeffs = 0`.
pub fn bc_rows(asm: &Assembler, bc: BoundaryCondition, k: usize) -> Result<BcRows> {
    use BoundaryCondition::*;
    check_degree(asm, bc, k)?;
    let simple = |c: BoundaryCondition, deg: usize| at_boundary(asm, &local_fiber(asm.model, c, deg));
    let matrix = match bc {
        D | N | JD | JN | DPlus | NPlus | DMinus | NMinus => simple(bc, k),
        DPlusMinus => stack(&simple(DMinus, k), &(&simple(DPlus, k - 1) * &asm.dminus(k))),
        NPlusMinus => stack(&simple(NPlus, k), &(&simple(NMinus, k - 1) * &asm.dstar(k))),
        B => &simple(DMinus, k) * &(&asm.dplus(k - 1) * &asm.dminus(k)),
        C => &simple(NPlus, k) * &(&asm.dminusstar(k - 1) * &asm.dstar(k)),
    };
    Ok(BcRows { bc, degree: k, matrix })
}

/// Boundary-quadrature norm of the trace of P(ρη) for the operator P defining `bc`.
///
/// Composite conditions combine their parts in ℓ².
pub fn bc_residual(asm: &Assembler, eta: &FormField, bc: BoundaryCondition) -> Result<f64> {
    use BoundaryCondition::*;
    let k = eta.degree;
    if eta.grid != *asm.grid {
        return Err(SymError::Invalid("field lives on a different grid".into()));
    }
    check_degree(asm, bc, k)?;
    if bc.needs_primitive() && !eta.check_primitive(asm.model) {
        return Err(SymError::NotPrimitive);
    }
    let rho = make_rho(asm.grid);
    let trace = |op: CsMat<f64>, f: &FormField| -> Result<f64> {
        let rf = rho_multiply(&rho, f);
        let v = matvec(&op, &rf.coeffs);
        let g = asm.grid;
        let width = op.rows() / g.num_nodes();
        let mut s = 0.0;
        for face in [Face::Lower, Face::Upper] {
            for p in g.face_nodes(face) {
                s += v[p * width..(p + 1) * width].iter().map(|x| x * x).sum::<f64>();
            }
        }
        Ok((s * g.face_weight()).sqrt())
    };
    let apply = |op: CsMat<f64>, f: &FormField, deg: usize| FormField {
        grid: f.grid.clone(),
        degree: deg,
        primitive_flag: false,
        coeffs: matvec(&op, &f.coeffs),
    };
    let r = match bc {
        D => trace(asm.d(k), eta)?,
        N => trace(asm.dstar(k), eta)?,
        JD => trace(asm.dlamstar(k), eta)?,
        JN => trace(asm.dlam(k), eta)?,
        DPlus => trace(asm.dplus(k), eta)?,
        NPlus => trace(asm.dstar(k), eta)?,
        DMinus => trace(asm.dminus(k), eta)?,
        NMinus => trace(asm.dminusstar(k), eta)?,
        DPlusMinus => {
            let a = trace(asm.dminus(k), eta)?;
            let dm = apply(asm.dminus(k), eta, k - 1);
            let b = trace(asm.dplus(k - 1), &dm)?;
            a.hypot(b)
        }
        NPlusMinus => {
            let a = trace(asm.dstar(k), eta)?;
            let ds = apply(asm.dstar(k), eta, k - 1);
            let b = trace(asm.dminusstar(k - 1), &ds)?;
            a.hypot(b)
        }
        B => {
            let pm = apply(&asm.dplus(k - 1) * &asm.dminus(k), eta, k);
            trace(asm.dminus(k), &pm)?
        }
        C => {
            let ms = apply(&asm.dminusstar(k - 1) * &asm.dstar(k), eta, k);
            trace(asm.dstar(k), &ms)?
        }
    };
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_domain::{make_grid, sample_form};

    #[test]
    fn names_round_trip() {
        for bc in BoundaryCondition::ALL {
            assert_eq!(bc.name().parse::<BoundaryCondition>().unwrap(), bc);
        }
    }

    #[test]
    fn dirichlet_rows_see_tangential_part() {
        let g = make_grid(1, &[7, 6], 2).unwrap();
        let md = SymplecticModel::new(1).unwrap();
        let asm = Assembler::new(&g, &md).unwrap();
        let rows = bc_rows(&asm, BoundaryCondition::D, 1).unwrap();
        // e₁∧(a dx₁ + b dx₂) = b dx₁∧dx₂: one row per boundary node
        assert_eq!(rows.count(), 12);
        let normal = sample_form(&g, &md, 1, &|_| vec![1.0, 0.0]).unwrap();
        let r = matvec(&rows.matrix, &normal.coeffs);
        assert!(r.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn residual_rejects_non_primitive() {
        let g = make_grid(2, &[5, 3, 3, 3], 2).unwrap();
        let md = SymplecticModel::new(2).unwrap();
        let asm = Assembler::new(&g, &md).unwrap();
        let omega = sample_form(&g, &md, 2, &|_| vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(bc_residual(&asm, &omega, BoundaryCondition::DPlus), Err(SymError::NotPrimitive));
    }
}
