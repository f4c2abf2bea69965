//! Principal symbols at a covector ξ.
//!
//! First-order operators are reported without the factor i (σ(d)(ξ) = ξ∧,
//! σ(d*)(ξ) = −i_ξ); even-order operators carry i^order so that Laplacians have
//! nonnegative symbols. Coefficients are constant, so the base point only labels
//! the sample.

use nalgebra::DMatrix;

use super::OpTag;
use crate::error::{Result, SymError};
use crate::fiber_algebra::SymplecticModel;

#[derive(Clone, Debug)]
pub struct SymbolSample {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub degree: usize,
    pub out_degree: usize,
    pub matrix: DMatrix<f64>,
}

/// Symbol expressed in the ξ-adapted frame w₁ = ξ, w₂ = J₁ξ, then J-pairs.
#[derive(Clone, Debug)]
pub struct AdaptedSymbol {
    /// Frame covectors as columns.
    pub frame: DMatrix<f64>,
    pub degree: usize,
    pub matrix: DMatrix<f64>,
}

/// Min/max diagonal entry over the four blocks β₁ (w₁ only), β₂ (w₂ only),
/// β₃ (both), β₄ (neither), and the largest off-diagonal entry.
#[derive(Clone, Debug)]
pub struct BlockMultipliers {
    pub ranges: [(f64, f64); 4],
    pub offdiag: f64,
}

fn order(tag: OpTag) -> u32 {
    match tag {
        OpTag::LapPlus | OpTag::LapMinus => 2,
        OpTag::LapPP | OpTag::LapMM | OpTag::LapDDLam | OpTag::LapDPlusDLam => 4,
        _ => 1,
    }
}

struct Sym<'a> {
    md: &'a SymplecticModel,
    xi: &'a [f64],
}

impl Sym<'_> {
    fn m(&self) -> usize {
        self.md.dim()
    }
    fn fd(&self, k: usize) -> usize {
        self.md.fiber_dim(k)
    }
    fn d(&self, k: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.fd(k + 1), self.fd(k));
        if k < self.m() {
            for (j, &x) in self.xi.iter().enumerate() {
                a += self.md.ext(j, k) * x;
            }
        }
        a
    }
    fn dstar(&self, k: usize) -> DMatrix<f64> {
        if k == 0 {
            return DMatrix::zeros(0, 1);
        }
        let mut a = DMatrix::zeros(self.fd(k - 1), self.fd(k));
        for (j, &x) in self.xi.iter().enumerate() {
            a -= self.md.int(j, k) * x;
        }
        a
    }
    fn dlam(&self, k: usize) -> DMatrix<f64> {
        if k == 0 {
            return DMatrix::zeros(0, 1);
        }
        let mut a = DMatrix::zeros(self.fd(k - 1), self.fd(k));
        if k >= 2 {
            a += self.d(k - 2) * self.md.lam(k);
        }
        if k < self.m() {
            a -= self.md.lam(k + 1) * self.d(k);
        }
        a
    }
    fn dlamstar(&self, k: usize) -> DMatrix<f64> {
        let m = self.m();
        let mut a = DMatrix::zeros(self.fd(k + 1), self.fd(k));
        if k >= 1 && k < m {
            a += self.md.l(k - 1) * self.dstar(k);
        }
        if k + 2 <= m {
            a -= self.dstar(k + 2) * self.md.l(k);
        }
        a
    }
    fn dplus(&self, k: usize) -> DMatrix<f64> {
        let dk = self.d(k);
        if k == 0 {
            return dk;
        }
        let w = 1.0 / (self.md.n as f64 - k as f64 + 1.0);
        &dk - self.md.l(k - 1) * (self.md.lam(k + 1) * &dk) * w
    }
    fn dminus(&self, k: usize) -> DMatrix<f64> {
        let w = 1.0 / (self.md.n as f64 - k as f64 + 1.0);
        self.md.lam(k + 1) * self.d(k) * w
    }
    fn dminusprime(&self, k: usize) -> DMatrix<f64> {
        (self.md.h(k - 1) + self.md.r(k - 1)) * self.dminus(k)
    }
    fn dminusstar(&self, k: usize) -> DMatrix<f64> {
        let n = self.md.n as f64;
        let kf = k as f64;
        let a = self.dstar(k + 2) * self.md.l(k) / (n - kf);
        if k == 0 {
            return a;
        }
        a - self.md.l(k - 1) * self.dstar(k) / (n - kf + 1.0)
    }
    fn raw(&self, tag: OpTag, k: usize) -> DMatrix<f64> {
        let n = self.md.n;
        let m = self.m();
        match tag {
            OpTag::D => self.d(k),
            OpTag::DStar | OpTag::DPlusStar => self.dstar(k),
            OpTag::DLam => self.dlam(k),
            OpTag::DLamStar => self.dlamstar(k),
            OpTag::DPlus => self.dplus(k),
            OpTag::DMinus => self.dminus(k),
            OpTag::DMinusPrime => self.dminusprime(k),
            OpTag::DMinusStar => self.dminusstar(k),
            OpTag::LapPlus => {
                let a = self.dstar(k + 1) * self.dplus(k);
                if k == 0 {
                    a
                } else {
                    a + self.dplus(k - 1) * self.dstar(k)
                }
            }
            OpTag::LapMinus => {
                let b = self.dminus(k + 1) * self.dminusstar(k);
                if k == 0 {
                    b
                } else {
                    self.dminusstar(k - 1) * self.dminus(k) + b
                }
            }
            OpTag::LapPP => {
                let pm = self.dplus(n - 1) * self.dminus(n);
                let pm_star = self.dminusstar(n - 1) * self.dstar(n);
                let pp = self.dplus(n - 1) * self.dstar(n);
                pm_star * pm + &pp * &pp
            }
            OpTag::LapMM => {
                let pm = self.dplus(n - 1) * self.dminus(n);
                let pm_star = self.dminusstar(n - 1) * self.dstar(n);
                let mm = self.dminusstar(n - 1) * self.dminus(n);
                pm * pm_star + &mm * &mm
            }
            OpTag::LapDDLam => {
                let sz = self.fd(k);
                let mut q = DMatrix::zeros(sz, sz);
                let mut fourth = DMatrix::zeros(sz, sz);
                if k >= 1 {
                    fourth = self.dlamstar(k - 1) * self.dstar(k) * self.d(k - 1) * self.dlam(k);
                    q += self.d(k - 1) * self.dstar(k);
                }
                if k < m {
                    q += self.dlam(k + 1) * self.dlamstar(k);
                }
                fourth + &q * &q * 0.25
            }
            OpTag::LapDPlusDLam => {
                let sz = self.fd(k);
                let mut q = DMatrix::zeros(sz, sz);
                let mut fourth = DMatrix::zeros(sz, sz);
                if k >= 1 {
                    fourth = self.d(k - 1) * self.dlam(k) * self.dlamstar(k - 1) * self.dstar(k);
                    q += self.dlamstar(k - 1) * self.dlam(k);
                }
                if k < m {
                    q += self.dstar(k + 1) * self.d(k);
                }
                fourth + &q * &q * 0.25
            }
        }
    }
}

fn check_xi(model: &SymplecticModel, xi: &[f64]) -> Result<()> {
    if xi.len() != model.dim() {
        return Err(SymError::Invalid(format!("covector needs {} components", model.dim())));
    }
    let nrm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return Err(SymError::Invalid("symbol requested at the zero covector".into()));
    }
    if (nrm - 1.0).abs() > 1e-10 {
        return Err(SymError::Invalid(format!("covector must have unit length, got {nrm}")));
    }
    Ok(())
}

/// Principal symbol of `tag` on degree-k forms at (x, ξ), |ξ| = 1.
pub fn symbol_at(tag: OpTag, model: &SymplecticModel, degree: usize, x: &[f64], xi: &[f64]) -> Result<SymbolSample> {
    check_xi(model, xi)?;
    let out = tag.out_degree(model.n, degree).ok_or_else(|| SymError::Invalid(format!("{tag} undefined on degree {degree}")))?;
    let s = Sym { md: model, xi };
    let mut matrix = s.raw(tag, degree);
    let ord = order(tag);
    if ord % 4 == 2 {
        matrix = -matrix;
    }
    Ok(SymbolSample { x: x.to_vec(), xi: xi.to_vec(), degree, out_degree: out, matrix })
}

/// Orthonormal frame w₁ = ξ, w₂ = J₁ξ completed by J-pairs (columns).
pub fn adapted_frame(model: &SymplecticModel, xi: &[f64]) -> Result<DMatrix<f64>> {
    check_xi(model, xi)?;
    let m = model.dim();
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(m);
    let w1 = nalgebra::DVector::from_column_slice(xi);
    cols.push(model.j.clone() * &w1);
    cols.insert(0, w1);
    let mut c = 0;
    while cols.len() < m {
        let mut v = nalgebra::DVector::zeros(m);
        v[c] = 1.0;
        c += 1;
        for w in &cols {
            let p = w.dot(&v);
            v -= w * p;
        }
        let nv = v.norm();
        if nv < 1e-6 {
            continue;
        }
        v /= nv;
        let jv = model.j.clone() * &v;
        cols.push(v);
        cols.push(jv);
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Symbol of `tag` in the ξ-adapted frame.
pub fn symbol_adapted(tag: OpTag, model: &SymplecticModel, degree: usize, xi: &[f64]) -> Result<AdaptedSymbol> {
    let frame = adapted_frame(model, xi)?;
    let s = symbol_at(tag, model, degree, &[], xi)?;
    let win = model.wedge_power(&frame, degree);
    let wout = model.wedge_power(&frame, s.out_degree);
    let matrix = wout.transpose() * s.matrix * win;
    Ok(AdaptedSymbol { frame, degree, matrix })
}

/// Block statistics of a square adapted symbol.
pub fn block_multipliers(model: &SymplecticModel, sym: &AdaptedSymbol) -> BlockMultipliers {
    let idx = model.basis_indices(sym.degree);
    let mut ranges = [(f64::INFINITY, f64::NEG_INFINITY); 4];
    let mut offdiag = 0.0f64;
    for (r, ir) in idx.iter().enumerate() {
        let a = ir.contains(&0);
        let b = ir.contains(&1);
        let cls = match (a, b) {
            (true, false) => 0,
            (false, true) => 1,
            (true, true) => 2,
            (false, false) => 3,
        };
        let v = sym.matrix[(r, r)];
        ranges[cls].0 = ranges[cls].0.min(v);
        ranges[cls].1 = ranges[cls].1.max(v);
        for c in 0..idx.len() {
            if c != r {
                offdiag = offdiag.max(sym.matrix[(r, c)].abs());
            }
        }
    }
    BlockMultipliers { ranges, offdiag }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_covector_rejected() {
        let md = SymplecticModel::new(1).unwrap();
        assert!(symbol_at(OpTag::D, &md, 0, &[0.5, 0.5], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn d_symbol_is_wedge() {
        let md = SymplecticModel::new(1).unwrap();
        let s = symbol_at(OpTag::D, &md, 0, &[0.1, 0.2], &[0.6, 0.8]).unwrap();
        assert!((s.matrix[(0, 0)] - 0.6).abs() < 1e-15 && (s.matrix[(1, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ddlam_multipliers_are_one_and_quarter() {
        let md = SymplecticModel::new(2).unwrap();
        let xi = [0.5, -0.5, 0.5, 0.5];
        for k in 0..=4 {
            let a = symbol_adapted(OpTag::LapDDLam, &md, k, &xi).unwrap();
            let b = block_multipliers(&md, &a);
            assert!(b.offdiag < 1e-12);
            for (cls, want) in [(0, 1.0), (1, 1.0), (2, 0.25), (3, 0.25)] {
                let (lo, hi) = b.ranges[cls];
                if lo.is_finite() {
                    assert!((lo - want).abs() < 1e-12 && (hi - want).abs() < 1e-12, "k={k} cls={cls} {lo} {hi}");
                }
            }
        }
    }
}
