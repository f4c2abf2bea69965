//! Fourier-mode blocks.
//!
//! Every assembled operator commutes with translations along the periodic
//! axes, so it acts on e^{2πi m·x'} v(x₁) through a dense block in the x₁
//! values of v. Blocks here are written in primitive coordinates
//! (orthonormal primitive basis per node, node-major).

use nalgebra::DMatrix;
use rustfft::FftPlanner;

use super::linalg::{block_diag, c, kron_real, to_complex, vstack, CMat, CVec, C64};
use crate::error::{Result, SymError};
use crate::fiber_algebra::SymplecticModel;
use crate::grid_domain::{FormField, Grid};
use crate::symplectic_operators::bc::{check_degree_n, local_fiber};
use crate::symplectic_operators::stencil;
use crate::symplectic_operators::BoundaryCondition;

/// Discretization of the bounded axis: a derivative matrix on `len` unknowns,
/// quadrature weights and the two endpoint evaluation functionals.
#[derive(Clone, Debug)]
pub struct AxisModel {
    pub len: usize,
    pub d1: DMatrix<f64>,
    pub weights: Vec<f64>,
    pub ends: [Vec<f64>; 2],
}

impl AxisModel {
    /// Collocation values at the grid nodes.
    pub fn grid(grid: &Grid) -> Self {
        let n1 = grid.shape[0];
        let mut e0 = vec![0.0; n1];
        let mut e1 = vec![0.0; n1];
        e0[0] = 1.0;
        e1[n1 - 1] = 1.0;
        AxisModel { len: n1, d1: stencil::bounded_matrix(n1, grid.stencil_order), weights: grid.x1_weights(), ends: [e0, e1] }
    }

    /// Chebyshev coefficients of degree ≤ q in t = 2x₁ − 1 (exact differentiation).
    pub fn chebyshev(q: usize) -> Self {
        let len = q + 1;
        let mut d1 = DMatrix::zeros(len, len);
        for j in 0..len {
            let mut cf = vec![0.0; len];
            cf[j] = 1.0;
            // derivative coefficients by the standard recurrence
            let mut der = vec![0.0; len + 1];
            for k in (1..len).rev() {
                der[k - 1] = der[k + 1] + 2.0 * k as f64 * cf[k];
            }
            der[0] *= 0.5;
            for i in 0..len {
                d1[(i, j)] = 2.0 * der[i];
            }
        }
        let e0 = (0..len).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e1 = vec![1.0; len];
        AxisModel { len, d1, weights: vec![1.0; len], ends: [e0, e1] }
    }
}

/// Fourier modes of the periodic axes in FFT order.
#[derive(Clone, Debug)]
pub struct ModeSet {
    pub shape: Vec<usize>,
    /// Signed mode numbers, one vector per flat index.
    pub numbers: Vec<Vec<i64>>,
}

impl ModeSet {
    pub fn new(grid: &Grid) -> Self {
        let shape = grid.shape[1..].to_vec();
        let total: usize = shape.iter().product();
        let mut numbers = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut mv = vec![0i64; shape.len()];
            for a in (0..shape.len()).rev() {
                let i = rem % shape[a];
                rem /= shape[a];
                mv[a] = signed(i, shape[a]);
            }
            numbers.push(mv);
        }
        ModeSet { shape, numbers }
    }

    pub fn len(&self) -> usize {
        self.numbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numbers.is_empty()
    }

    /// A mode is resolved when no component sits at the Nyquist frequency.
    pub fn resolved(&self, flat: usize) -> bool {
        self.numbers[flat].iter().zip(&self.shape).all(|(&m, &n)| !(n % 2 == 0 && m.unsigned_abs() as usize * 2 == n))
    }

    /// Flat index of −m.
    pub fn conjugate(&self, flat: usize) -> usize {
        let mut idx = 0;
        for (a, &m) in self.numbers[flat].iter().enumerate() {
            let n = self.shape[a] as i64;
            idx = idx * self.shape[a] + (-m).rem_euclid(n) as usize;
        }
        idx
    }

    pub fn symbols(&self, grid: &Grid, flat: usize) -> Vec<C64> {
        self.numbers[flat].iter().zip(&self.shape).map(|(&m, &n)| stencil::periodic_symbol(m, n, grid.stencil_order)).collect()
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if 2 * i <= n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Operator blocks at one Fourier mode.
pub struct ModeOps<'a> {
    pub md: &'a SymplecticModel,
    pub axis: &'a AxisModel,
    pub symbols: Vec<C64>,
}

impl<'a> ModeOps<'a> {
    pub fn new(md: &'a SymplecticModel, axis: &'a AxisModel, symbols: Vec<C64>) -> Self {
        ModeOps { md, axis, symbols }
    }

    fn n(&self) -> usize {
        self.md.n
    }

    pub fn pdim(&self, k: usize) -> usize {
        if k <= self.n() {
            self.md.prim_dim(k)
        } else {
            0
        }
    }

    /// Unknowns of the primitive degree-k block.
    pub fn size(&self, k: usize) -> usize {
        self.axis.len * self.pdim(k)
    }

    pub fn fib(&self, f: &DMatrix<f64>) -> CMat {
        block_diag(self.axis.len, &to_complex(f))
    }

    /// Covector weights of the periodic part: (0, s₁, …, s_{2n−1}).
    fn per_xi(&self) -> Vec<C64> {
        let mut xi = vec![c(0.0)];
        xi.extend(self.symbols.iter().copied());
        xi
    }

    fn normal_xi(&self) -> Vec<C64> {
        let mut xi = vec![c(0.0); self.md.dim()];
        xi[0] = c(1.0);
        xi
    }

    fn ext_xi(&self, k: usize, xi: &[C64]) -> CMat {
        let m = self.md.dim();
        let mut a = CMat::zeros(self.md.fiber_dim(k + 1), self.md.fiber_dim(k));
        if k < m {
            for (j, &x) in xi.iter().enumerate() {
                if x != c(0.0) {
                    a += to_complex(self.md.ext(j, k)) * x;
                }
            }
        }
        a
    }

    fn int_xi(&self, k: usize, xi: &[C64]) -> CMat {
        let mut a = CMat::zeros(self.md.fiber_dim(k.saturating_sub(1)), self.md.fiber_dim(k));
        if k == 0 {
            return CMat::zeros(0, 1);
        }
        for (j, &x) in xi.iter().enumerate() {
            if x != c(0.0) {
                a += to_complex(self.md.int(j, k)) * x;
            }
        }
        a
    }

    /// kron(D₁, f(e₁)) + kron(I, f(periodic symbols)) for a fiber map linear in ξ.
    fn first_order(&self, f: impl Fn(&[C64]) -> CMat) -> CMat {
        let a = f(&self.normal_xi());
        let b = f(&self.per_xi());
        kron_real(&self.axis.d1, &a) + block_diag(self.axis.len, &b)
    }

    fn cprim(&self, k: usize) -> CMat {
        to_complex(self.md.prim(k))
    }

    pub fn d_full(&self, k: usize) -> CMat {
        if k >= self.md.dim() {
            return CMat::zeros(0, self.axis.len * self.md.fiber_dim(k));
        }
        self.first_order(|xi| self.ext_xi(k, xi))
    }

    pub fn ds_full(&self, k: usize) -> CMat {
        if k == 0 {
            return CMat::zeros(0, self.axis.len);
        }
        self.first_order(|xi| -self.int_xi(k, xi))
    }

    pub fn dp(&self, k: usize) -> CMat {
        if k >= self.n() {
            return CMat::zeros(0, self.size(k));
        }
        let (po, pi) = (self.cprim(k + 1), self.cprim(k));
        self.first_order(|xi| po.adjoint() * self.ext_xi(k, xi) * &pi)
    }

    pub fn dm(&self, k: usize) -> CMat {
        if k == 0 {
            return CMat::zeros(0, self.size(0));
        }
        let w = 1.0 / (self.n() as f64 - k as f64 + 1.0);
        let (po, pi) = (self.cprim(k - 1), self.cprim(k));
        let lam = to_complex(self.md.lam(k + 1));
        self.first_order(|xi| po.adjoint() * &lam * self.ext_xi(k, xi) * &pi * c(w))
    }

    pub fn dps(&self, k: usize) -> CMat {
        if k == 0 {
            return CMat::zeros(0, self.size(0));
        }
        let (po, pi) = (self.cprim(k - 1), self.cprim(k));
        self.first_order(|xi| -(po.adjoint() * self.int_xi(k, xi) * &pi))
    }

    pub fn dms(&self, k: usize) -> CMat {
        let n = self.n();
        if k >= n {
            return CMat::zeros(0, self.size(k));
        }
        let nf = n as f64;
        let kf = k as f64;
        let (po, pi) = (self.cprim(k + 1), self.cprim(k));
        let lk = to_complex(self.md.l(k));
        self.first_order(|xi| {
            let mut a = -(self.int_xi(k + 2, xi) * &lk) * c(1.0 / (nf - kf));
            if k > 0 {
                a += to_complex(self.md.l(k - 1)) * self.int_xi(k, xi) * c(1.0 / (nf - kf + 1.0));
            }
            po.adjoint() * a * &pi
        })
    }

    /// ∂₊∂₋ on P^n.
    pub fn dpm(&self) -> CMat {
        let n = self.n();
        self.dp(n - 1) * self.dm(n)
    }

    /// ∂₋*∂₊* on P^n.
    pub fn dpms(&self) -> CMat {
        let n = self.n();
        self.dms(n - 1) * self.dps(n)
    }

    /// Evaluation at both ends of a block with `q` values per node.
    pub fn ends(&self, q: usize) -> CMat {
        let len = self.axis.len;
        let mut out = CMat::zeros(2 * q, len * q);
        for (e, ev) in self.axis.ends.iter().enumerate() {
            for (j, &v) in ev.iter().enumerate() {
                if v != 0.0 {
                    for r in 0..q {
                        out[(e * q + r, j * q + r)] = c(v);
                    }
                }
            }
        }
        out
    }

    /// Local fiber rows at both ends, acting on primitive coordinates of degree k.
    fn local(&self, bc: BoundaryCondition, k: usize) -> CMat {
        let f = local_fiber(self.md, bc, k) * self.md.prim(k);
        let q = f.ncols();
        let rows = f.nrows();
        let ev = self.ends(q);
        let mut out = CMat::zeros(2 * rows, self.axis.len * q);
        let fc = to_complex(&f);
        for e in 0..2 {
            let sel = ev.rows(e * q, q);
            out.view_mut((e * rows, 0), (rows, self.axis.len * q)).copy_from(&(&fc * sel));
        }
        out
    }

    /// Boundary-condition rows on the primitive degree-k block.
    pub fn bc_rows(&self, bc: BoundaryCondition, k: usize) -> Result<CMat> {
        use BoundaryCondition::*;
        check_degree_n(self.n(), bc, k)?;
        let cols = self.size(k);
        Ok(match bc {
            D | N | JD | JN | DPlus | NPlus | DMinus | NMinus => self.local(bc, k),
            DPlusMinus => {
                let a = self.local(DMinus, k);
                let b = self.local(DPlus, k - 1) * self.dm(k);
                vstack(&[&a, &b], cols)
            }
            NPlusMinus => {
                let a = self.local(NPlus, k);
                let b = self.local(NMinus, k - 1) * self.dps(k);
                vstack(&[&a, &b], cols)
            }
            B => self.local(DMinus, k) * (self.dp(k - 1) * self.dm(k)),
            C => self.local(NPlus, k) * (self.dms(k - 1) * self.dps(k)),
        })
    }

    /// Diagonal of the quadrature weight on the primitive degree-k block.
    pub fn weights(&self, k: usize, interior_only: bool) -> Vec<f64> {
        let p = self.pdim(k);
        let len = self.axis.len;
        let mut w = Vec::with_capacity(len * p);
        for (i, &x) in self.axis.weights.iter().enumerate() {
            let x = if interior_only && (i == 0 || i + 1 == len) { 0.0 } else { x };
            w.extend(std::iter::repeat(x).take(p));
        }
        w
    }
}

/// Fields ↔ per-mode coefficient blocks on a grid.
pub struct Spectral<'a> {
    pub grid: &'a Grid,
    pub md: &'a SymplecticModel,
    pub modes: ModeSet,
    pub axis: AxisModel,
}

impl<'a> Spectral<'a> {
    pub fn new(grid: &'a Grid, md: &'a SymplecticModel) -> Result<Self> {
        if grid.n != md.n {
            return Err(SymError::DimensionMismatch(grid.n, md.n));
        }
        Ok(Spectral { grid, md, modes: ModeSet::new(grid), axis: AxisModel::grid(grid) })
    }

    pub fn ops(&self, flat: usize) -> ModeOps<'_> {
        ModeOps::new(self.md, &self.axis, self.modes.symbols(self.grid, flat))
    }

    /// Forward transform; with `primitive` the fiber is reduced to primitive coordinates.
    pub fn forward(&self, f: &FormField, primitive: bool) -> Result<Vec<CVec>> {
        let k = f.degree;
        if f.grid != *self.grid {
            return Err(SymError::Invalid("field lives on a different grid".into()));
        }
        if primitive && k > self.grid.n {
            return Err(SymError::Degree { n: self.grid.n, degree: k });
        }
        let fd = f.fiber_dim();
        let n1 = self.grid.shape[0];
        let per: usize = self.modes.len();
        let mut planner = FftPlanner::<f64>::new();
        let mut spec = vec![C64::new(0.0, 0.0); n1 * per * fd];
        // spec layout: [i1][fiber][mode]
        for i1 in 0..n1 {
            for cidx in 0..fd {
                let mut buf: Vec<C64> = (0..per).map(|p| c(f.coeffs[(i1 * per + p) * fd + cidx])).collect();
                fftn(&mut planner, &mut buf, &self.modes.shape, false);
                let off = (i1 * fd + cidx) * per;
                for (p, v) in buf.into_iter().enumerate() {
                    spec[off + p] = v / per as f64;
                }
            }
        }
        let (q, basis) = if primitive {
            let p = self.md.prim(k);
            (p.ncols(), Some(p))
        } else {
            (fd, None)
        };
        let mut out = Vec::with_capacity(per);
        for mode in 0..per {
            let mut v = CVec::zeros(n1 * q);
            for i1 in 0..n1 {
                let full: Vec<C64> = (0..fd).map(|cidx| spec[(i1 * fd + cidx) * per + mode]).collect();
                match basis {
                    Some(p) => {
                        for j in 0..q {
                            v[i1 * q + j] = (0..fd).map(|cidx| full[cidx] * p[(cidx, j)]).sum();
                        }
                    }
                    None => {
                        for j in 0..q {
                            v[i1 * q + j] = full[j];
                        }
                    }
                }
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Inverse transform (real part).
    pub fn inverse(&self, blocks: &[CVec], degree: usize, primitive: bool) -> Result<FormField> {
        let per = self.modes.len();
        if blocks.len() != per {
            return Err(SymError::Invalid(format!("expected {per} mode blocks, got {}", blocks.len())));
        }
        let n1 = self.grid.shape[0];
        let fd = self.md.fiber_dim(degree);
        let q = if primitive { self.md.prim_dim(degree) } else { fd };
        let mut planner = FftPlanner::<f64>::new();
        let mut coeffs = vec![0.0; self.grid.num_nodes() * fd];
        for i1 in 0..n1 {
            for cidx in 0..fd {
                let mut buf: Vec<C64> = (0..per)
                    .map(|mode| {
                        let b = &blocks[mode];
                        if primitive {
                            let p = self.md.prim(degree);
                            (0..q).map(|j| b[i1 * q + j] * p[(cidx, j)]).sum()
                        } else {
                            b[i1 * q + cidx]
                        }
                    })
                    .collect();
                fftn(&mut planner, &mut buf, &self.modes.shape, true);
                for (p, v) in buf.into_iter().enumerate() {
                    coeffs[(i1 * per + p) * fd + cidx] = v.re;
                }
            }
        }
        FormField::from_coeffs(self.grid, self.md, degree, coeffs)
    }
}

/// In-place multi-dimensional FFT over row-major `shape` (unnormalized).
fn fftn(planner: &mut FftPlanner<f64>, data: &mut [C64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    let mut stride = total;
    for &n in shape {
        stride /= n;
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut line = vec![C64::new(0.0, 0.0); n];
        let block = n * stride;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                for (t, x) in line.iter_mut().enumerate() {
                    *x = data[outer + inner + t * stride];
                }
                fft.process(&mut line);
                for (t, x) in line.iter().enumerate() {
                    data[outer + inner + t * stride] = *x;
                }
            }
        }
    }
}

/// Weighted inner product of two blocks with diagonal weights.
pub fn wdot(a: &CVec, b: &CVec, w: &[f64]) -> C64 {
    a.iter().zip(b.iter()).zip(w).map(|((x, y), &wt)| x.conj() * y * wt).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_domain::{inner_product, make_grid, random_field};
    use crate::symplectic_operators::{Assembler, OpTag};

    #[test]
    fn round_trip_and_parseval() {
        let g = make_grid(2, &[5, 4, 3, 4], 2).unwrap();
        let md = SymplecticModel::new(2).unwrap();
        let sp = Spectral::new(&g, &md).unwrap();
        let f = random_field(&g, &md, 2, true, 2, 7).unwrap();
        let blocks = sp.forward(&f, true).unwrap();
        let back = sp.inverse(&blocks, 2, true).unwrap();
        assert!(back.sub(&f).norm() < 1e-12 * f.norm());
        let ops = sp.ops(0);
        let w = ops.weights(2, false);
        let e: f64 = blocks.iter().map(|b| wdot(b, b, &w).re).sum();
        assert!((e - inner_product(&f, &f).unwrap()).abs() < 1e-12 * e);
    }

    #[test]
    fn blocks_match_sparse_assembly() {
        let g = make_grid(2, &[6, 4, 5, 3], 2).unwrap();
        let md = SymplecticModel::new(2).unwrap();
        let sp = Spectral::new(&g, &md).unwrap();
        let asm = Assembler::new(&g, &md).unwrap();
        let f = random_field(&g, &md, 1, true, 2, 3).unwrap();
        let fb = sp.forward(&f, true).unwrap();
        for (tag, out, blockop) in [
            (OpTag::DPlus, 2usize, 0usize),
            (OpTag::DMinus, 0, 1),
            (OpTag::DPlusStar, 0, 2),
            (OpTag::DMinusStar, 2, 3),
        ] {
            let g_out = asm.assemble(tag, 1).unwrap().apply(&f).unwrap();
            let want = sp.forward(&g_out, true).unwrap();
            for (mode, v) in fb.iter().enumerate() {
                let ops = sp.ops(mode);
                let a = match blockop {
                    0 => ops.dp(1),
                    1 => ops.dm(1),
                    2 => ops.dps(1),
                    _ => ops.dms(1),
                };
                let got = a * v;
                assert!((got - &want[mode]).norm() < 1e-10 * (1.0 + want[mode].norm()), "{tag} {out}");
            }
        }
    }

    #[test]
    fn chebyshev_derivative_is_exact() {
        let ax = AxisModel::chebyshev(4);
        // f = x² on [0,1] → t = 2x−1, x = (t+1)/2, x² = (t² + 2t + 1)/4 = (T2/2 + 1/2 + 2 T1 + 1)/4
        let f = nalgebra::DVector::from_vec(vec![3.0 / 8.0, 0.5, 1.0 / 8.0, 0.0, 0.0]);
        let df = &ax.d1 * f;
        // f' = 2x = t + 1
        assert!((df[0] - 1.0).abs() < 1e-14 && (df[1] - 1.0).abs() < 1e-14 && df[2].abs() < 1e-14);
    }
}
