//! Exterior algebra of the model fiber R^{2n} with its Darboux triple.
//!
//! Covector indices are 0-based: the symplectic pairs are (2i, 2i+1), so
//! `dx1, dx2` of the usual notation are indices 0 and 1. Basis k-covectors
//! are multi-indices in lexicographic order, stored internally as bitmasks.

use itertools::Itertools;
use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, SymError};

pub fn binomial(m: usize, k: usize) -> usize {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (m - i) / (i + 1);
    }
    r
}

fn basis_masks(m: usize, k: usize) -> Vec<u32> {
    (0..m)
        .combinations(k)
        .map(|c| c.iter().fold(0u32, |acc, &i| acc | (1 << i)))
        .collect()
}

/// Sign of e_a ∧ e_b relative to e_{a∪b}; zero when the masks overlap.
fn merge_sign(a: u32, b: u32) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut inv = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        inv += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Coefficient vector of a k-covector on the 2n-dimensional fiber.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberForm {
    pub n: usize,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl FiberForm {
    pub fn zero(n: usize, degree: usize) -> Self {
        FiberForm { n, degree, coeffs: vec![0.0; binomial(2 * n, degree)] }
    }

    pub fn from_coeffs(n: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if degree > 2 * n {
            return Err(SymError::Degree { n, degree });
        }
        if coeffs.len() != binomial(2 * n, degree) {
            return Err(SymError::Invalid(format!(
                "expected {} coefficients, got {}",
                binomial(2 * n, degree),
                coeffs.len()
            )));
        }
        Ok(FiberForm { n, degree, coeffs })
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        FiberForm { n, degree: 0, coeffs: vec![c] }
    }

    /// The basis covector dx_{i1} ∧ … ∧ dx_{ik} with 0-based, strictly increasing indices.
    pub fn basis(n: usize, idx: &[usize]) -> Result<Self> {
        let m = 2 * n;
        if idx.iter().any(|&i| i >= m) || idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SymError::Invalid(format!("bad multi-index {idx:?}")));
        }
        let k = idx.len();
        let pos = (0..m).combinations(k).position(|c| c == idx).unwrap();
        let mut f = FiberForm::zero(n, k);
        f.coeffs[pos] = 1.0;
        Ok(f)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &FiberForm) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &FiberForm) -> FiberForm {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        FiberForm { n: self.n, degree: self.degree, coeffs }
    }

    pub fn scale(&self, s: f64) -> FiberForm {
        FiberForm { n: self.n, degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coeffs)
    }
}

/// Exterior product in the lexicographic basis.
pub fn wedge(a: &FiberForm, b: &FiberForm) -> Result<FiberForm> {
    if a.n != b.n {
        return Err(SymError::DimensionMismatch(a.n, b.n));
    }
    let m = 2 * a.n;
    let k = a.degree + b.degree;
    if k > m {
        return Err(SymError::Degree { n: a.n, degree: k });
    }
    let ba = basis_masks(m, a.degree);
    let bb = basis_masks(m, b.degree);
    let bk = basis_masks(m, k);
    let mut out = FiberForm::zero(a.n, k);
    for (i, &ma) in ba.iter().enumerate() {
        if a.coeffs[i] == 0.0 {
            continue;
        }
        for (j, &mb) in bb.iter().enumerate() {
            let s = merge_sign(ma, mb);
            if s == 0 || b.coeffs[j] == 0.0 {
                continue;
            }
            let pos = bk.binary_search_by(|x| lex_cmp(*x, ma | mb)).unwrap();
            out.coeffs[pos] += s as f64 * a.coeffs[i] * b.coeffs[j];
        }
    }
    Ok(out)
}

// lexicographic order on sorted index tuples of equal length
fn lex_cmp(a: u32, b: u32) -> std::cmp::Ordering {
    mask_indices(a).cmp(&mask_indices(b))
}

fn wedge_complex(m: usize, a: &[Complex<f64>], ka: usize, b: &[Complex<f64>], kb: usize) -> Vec<Complex<f64>> {
    let ba = basis_masks(m, ka);
    let bb = basis_masks(m, kb);
    let bk = basis_masks(m, ka + kb);
    let mut out = vec![Complex::new(0.0, 0.0); bk.len()];
    for (i, &ma) in ba.iter().enumerate() {
        for (j, &mb) in bb.iter().enumerate() {
            let s = merge_sign(ma, mb);
            if s == 0 {
                continue;
            }
            let pos = bk.binary_search_by(|x| lex_cmp(*x, ma | mb)).unwrap();
            out[pos] += a[i] * b[j] * s as f64;
        }
    }
    out
}

/// The pieces of a Lefschetz decomposition, source = Σ (1/r!) L^r B_{k−2r}.
#[derive(Clone, Debug)]
pub struct LefschetzComponents {
    pub components: Vec<(usize, FiberForm)>,
}

/// Compatible triple (ω, J, g) in standard form with cached fiber matrices.
#[derive(Clone, Debug)]
pub struct SymplecticModel {
    pub n: usize,
    pub omega: DMatrix<f64>,
    pub omega_inv: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub metric: DMatrix<f64>,
    pub orientation: i32,
    ext: Vec<Vec<DMatrix<f64>>>,
    int: Vec<Vec<DMatrix<f64>>>,
    l: Vec<DMatrix<f64>>,
    lam: Vec<DMatrix<f64>>,
    jop: Vec<DMatrix<f64>>,
    star: Vec<DMatrix<f64>>,
    prim: Vec<DMatrix<f64>>,
    proj: Vec<DMatrix<f64>>,
    rop: Vec<DMatrix<f64>>,
}

impl SymplecticModel {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(SymError::Invalid(format!("supported half-dimensions are 1 and 2, got {n}")));
        }
        let m = 2 * n;
        let mut omega = DMatrix::zeros(m, m);
        let mut jm = DMatrix::zeros(m, m);
        for i in 0..n {
            omega[(2 * i, 2 * i + 1)] = 1.0;
            omega[(2 * i + 1, 2 * i)] = -1.0;
            jm[(2 * i + 1, 2 * i)] = 1.0;
            jm[(2 * i, 2 * i + 1)] = -1.0;
        }
        let omega_inv = omega.clone().try_inverse().expect("Darboux form is invertible");
        let metric = &omega * &jm;

        let masks: Vec<Vec<u32>> = (0..=m).map(|k| basis_masks(m, k)).collect();
        let pos = |k: usize, mask: u32| masks[k].binary_search_by(|x| lex_cmp(*x, mask)).unwrap();

        let mut ext = vec![Vec::with_capacity(m + 1); m];
        let mut int = vec![Vec::with_capacity(m + 1); m];
        for j in 0..m {
            for k in 0..=m {
                let rows = binomial(m, k + 1);
                let mut e = DMatrix::zeros(rows, binomial(m, k));
                if k < m {
                    for (c, &b) in masks[k].iter().enumerate() {
                        if b & (1 << j) != 0 {
                            continue;
                        }
                        let s = if (b & ((1 << j) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        e[(pos(k + 1, b | (1 << j)), c)] = s;
                    }
                }
                ext[j].push(e);
            }
            for k in 0..=m {
                let i = if k == 0 { DMatrix::zeros(0, 1) } else { ext[j][k - 1].transpose() };
                int[j].push(i);
            }
        }

        let mut l = Vec::with_capacity(m + 1);
        let mut lam = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let mut lk = DMatrix::zeros(binomial(m, k + 2), binomial(m, k));
            if k + 2 <= m {
                for i in 0..n {
                    lk += &ext[2 * i][k + 1] * &ext[2 * i + 1][k];
                }
            }
            l.push(lk);
            // ½ (ω⁻¹)^{ab} i_a i_b
            let mut lk = DMatrix::zeros(binomial(m, k.saturating_sub(2)), binomial(m, k));
            if k >= 2 {
                for a in 0..m {
                    for b in 0..m {
                        let c = omega_inv[(a, b)];
                        if c != 0.0 {
                            lk += (&int[a][k - 1] * &int[b][k]) * (0.5 * c);
                        }
                    }
                }
            } else {
                lk = DMatrix::zeros(0, binomial(m, k));
            }
            lam.push(lk);
        }

        let jop = (0..=m).map(|k| build_j(n, &masks, k)).collect::<Result<Vec<_>>>()?;

        let mut star = Vec::with_capacity(m + 1);
        let full: u32 = (1u32 << m) - 1;
        for k in 0..=m {
            let mut s = DMatrix::zeros(binomial(m, m - k), binomial(m, k));
            for (c, &b) in masks[k].iter().enumerate() {
                let comp = full & !b;
                s[(pos(m - k, comp), c)] = merge_sign(b, comp) as f64;
            }
            star.push(s);
        }

        let mut prim = Vec::with_capacity(n + 1);
        let mut proj = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let p = primitive_basis(&lam[k], binomial(m, k));
            proj.push(&p * p.transpose());
            prim.push(p);
        }

        let mut model = SymplecticModel {
            n,
            omega,
            omega_inv,
            j: jm,
            metric,
            orientation: 1,
            ext,
            int,
            l,
            lam,
            jop,
            star,
            prim,
            proj,
            rop: Vec::new(),
        };
        model.rop = (0..=m).map(|k| model.build_r(k)).collect();
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn fiber_dim(&self, k: usize) -> usize {
        binomial(2 * self.n, k)
    }

    /// Dimension of the primitive subspace of degree k (k ≤ n).
    pub fn prim_dim(&self, k: usize) -> usize {
        self.prim[k].ncols()
    }

    /// Matrix of e_j ∧ · from degree k to k+1.
    pub fn ext(&self, j: usize, k: usize) -> &DMatrix<f64> {
        &self.ext[j][k]
    }

    /// Matrix of the interior product i_{e_j} from degree k to k−1.
    pub fn int(&self, j: usize, k: usize) -> &DMatrix<f64> {
        &self.int[j][k]
    }

    pub fn l(&self, k: usize) -> &DMatrix<f64> {
        &self.l[k]
    }

    pub fn lam(&self, k: usize) -> &DMatrix<f64> {
        &self.lam[k]
    }

    /// H acts on degree k by n − k.
    pub fn h_weight(&self, k: usize) -> f64 {
        self.n as f64 - k as f64
    }

    pub fn h(&self, k: usize) -> DMatrix<f64> {
        DMatrix::identity(self.fiber_dim(k), self.fiber_dim(k)) * self.h_weight(k)
    }

    /// R multiplies the L^r-part of a degree-k form by r.
    pub fn r(&self, k: usize) -> &DMatrix<f64> {
        &self.rop[k]
    }

    pub fn jop(&self, k: usize) -> &DMatrix<f64> {
        &self.jop[k]
    }

    /// 𝒥⁻¹ = (−1)^k 𝒥 on degree k.
    pub fn jop_inv(&self, k: usize) -> DMatrix<f64> {
        if k % 2 == 0 {
            self.jop[k].clone()
        } else {
            -&self.jop[k]
        }
    }

    pub fn star(&self, k: usize) -> &DMatrix<f64> {
        &self.star[k]
    }

    /// Orthonormal basis of the primitive subspace (columns), k ≤ n.
    pub fn prim(&self, k: usize) -> &DMatrix<f64> {
        &self.prim[k]
    }

    /// Orthogonal projector onto primitive k-forms, k ≤ n.
    pub fn proj(&self, k: usize) -> &DMatrix<f64> {
        &self.proj[k]
    }

    /// L^r as a matrix from degree k (zero-row matrix when out of range).
    pub fn l_pow(&self, r: usize, k: usize) -> DMatrix<f64> {
        let m = self.dim();
        let mut out = DMatrix::identity(self.fiber_dim(k), self.fiber_dim(k));
        for s in 0..r {
            let d = k + 2 * s;
            if d + 2 > m {
                return DMatrix::zeros(binomial(m, k + 2 * r), self.fiber_dim(k));
            }
            out = &self.l[d] * out;
        }
        out
    }

    fn lefschetz_range(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        k.saturating_sub(self.n)..=k / 2
    }

    // columns: (1/r!) L^r P_{k-2r}, grouped by r
    fn lefschetz_frame(&self, k: usize) -> (DMatrix<f64>, Vec<(usize, usize, usize)>) {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        let mut blocks = Vec::new();
        for r in self.lefschetz_range(k) {
            let s = k - 2 * r;
            let lr = self.l_pow(r, s) * (1.0 / factorial(r));
            let start = cols.len();
            let pr = &self.prim[s];
            for c in 0..pr.ncols() {
                cols.push(&lr * pr.column(c));
            }
            blocks.push((r, start, pr.ncols()));
        }
        (DMatrix::from_columns(&cols), blocks)
    }

    fn build_r(&self, k: usize) -> DMatrix<f64> {
        let (frame, blocks) = self.lefschetz_frame(k);
        let mut diag = DVector::zeros(frame.ncols());
        for (r, start, len) in blocks {
            for c in start..start + len {
                diag[c] = r as f64;
            }
        }
        let inv = frame.clone().try_inverse().expect("Lefschetz frame is square and invertible");
        frame * DMatrix::from_diagonal(&diag) * inv
    }

    fn check(&self, a: &FiberForm) -> Result<()> {
        if a.n != self.n {
            return Err(SymError::DimensionMismatch(a.n, self.n));
        }
        if a.degree > self.dim() || a.coeffs.len() != self.fiber_dim(a.degree) {
            return Err(SymError::Degree { n: self.n, degree: a.degree });
        }
        Ok(())
    }

    fn apply(&self, m: &DMatrix<f64>, a: &FiberForm, degree: usize) -> FiberForm {
        let v = m * a.as_vector();
        FiberForm { n: self.n, degree, coeffs: v.as_slice().to_vec() }
    }

    pub fn lefschetz_l(&self, a: &FiberForm) -> Result<FiberForm> {
        self.check(a)?;
        if a.degree + 2 > self.dim() {
            return Err(SymError::Degree { n: self.n, degree: a.degree + 2 });
        }
        Ok(self.apply(&self.l[a.degree], a, a.degree + 2))
    }

    pub fn lambda_dual(&self, a: &FiberForm) -> Result<FiberForm> {
        self.check(a)?;
        if a.degree < 2 {
            return Err(SymError::Degree { n: self.n, degree: a.degree });
        }
        Ok(self.apply(&self.lam[a.degree], a, a.degree - 2))
    }

    pub fn degree_h(&self, a: &FiberForm) -> Result<FiberForm> {
        self.check(a)?;
        Ok(a.scale(self.h_weight(a.degree)))
    }

    pub fn interior(&self, j: usize, a: &FiberForm) -> Result<FiberForm> {
        self.check(a)?;
        if a.degree == 0 || j >= self.dim() {
            return Err(SymError::Degree { n: self.n, degree: a.degree });
        }
        Ok(self.apply(&self.int[j][a.degree], a, a.degree - 1))
    }

    pub fn is_primitive(&self, a: &FiberForm, tol: f64) -> bool {
        if a.degree > self.n {
            return false;
        }
        if a.degree < 2 {
            return true;
        }
        let lam = self.apply(&self.lam[a.degree], a, a.degree - 2);
        lam.norm() <= tol * a.norm().max(f64::MIN_POSITIVE)
    }

    pub fn lefschetz_decompose(&self, a: &FiberForm) -> Result<LefschetzComponents> {
        self.check(a)?;
        let (frame, blocks) = self.lefschetz_frame(a.degree);
        let svd = frame.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if cond > 1e8 {
            return Err(SymError::IllConditioned(cond));
        }
        let c = frame
            .lu()
            .solve(&a.as_vector())
            .ok_or(SymError::IllConditioned(f64::INFINITY))?;
        let mut components = Vec::new();
        for (r, start, len) in blocks {
            let s = a.degree - 2 * r;
            let b = &self.prim[s] * c.rows(start, len);
            components.push((r, FiberForm { n: self.n, degree: s, coeffs: b.as_slice().to_vec() }));
        }
        Ok(LefschetzComponents { components })
    }

    /// Σ (1/r!) L^r B.
    pub fn lefschetz_reassemble(&self, comps: &LefschetzComponents, degree: usize) -> FiberForm {
        let mut out = FiberForm::zero(self.n, degree);
        for (r, b) in &comps.components {
            let v = self.l_pow(*r, b.degree) * b.as_vector() * (1.0 / factorial(*r));
            for (o, x) in out.coeffs.iter_mut().zip(v.iter()) {
                *o += x;
            }
        }
        out
    }

    pub fn primitive_project(&self, a: &FiberForm) -> Result<FiberForm> {
        self.check(a)?;
        if a.degree > self.n {
            return Err(SymError::Degree { n: self.n, degree: a.degree });
        }
        Ok(self.apply(&self.proj[a.degree], a, a.degree))
    }

    pub fn j_operator(&self, a: &FiberForm) -> Result<FiberForm> {
        self.check(a)?;
        Ok(self.apply(&self.jop[a.degree], a, a.degree))
    }

    pub fn hodge_star(&self, a: &FiberForm) -> Result<FiberForm> {
        self.check(a)?;
        Ok(self.apply(&self.star[a.degree], a, self.dim() - a.degree))
    }

    /// ∧^k of the 1-form action of J, the oracle for the (p,q) construction of 𝒥.
    pub fn j_wedge_power(&self, k: usize) -> DMatrix<f64> {
        // action on 1-forms: dx_{2i} ↦ dx_{2i+1}, dx_{2i+1} ↦ −dx_{2i}
        self.wedge_power(&self.j, k)
    }

    /// Induced map ∧^k A on k-covectors for a linear map A of 1-forms (columns are images).
    pub fn wedge_power(&self, a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
        let m = self.dim();
        let masks = basis_masks(m, k);
        let mut out = DMatrix::zeros(masks.len(), masks.len());
        for (c, &b) in masks.iter().enumerate() {
            let mut acc = FiberForm::scalar(self.n, 1.0);
            for i in mask_indices(b) {
                let img = FiberForm { n: self.n, degree: 1, coeffs: a.column(i).iter().copied().collect() };
                acc = wedge(&acc, &img).unwrap();
            }
            out.set_column(c, &DVector::from_vec(acc.coeffs));
        }
        out
    }

    /// Multi-indices of the degree-k basis in order.
    pub fn basis_indices(&self, k: usize) -> Vec<Vec<usize>> {
        basis_masks(self.dim(), k).into_iter().map(mask_indices).collect()
    }
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|x| x as f64).product()
}

// Gram-Schmidt on the projections of the standard basis onto ker Λ.
fn primitive_basis(lam: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if lam.nrows() == 0 {
        return DMatrix::identity(dim, dim);
    }
    let gram = lam * lam.transpose();
    let ginv = gram.try_inverse().expect("Λ is onto for k ≤ n");
    let p = DMatrix::identity(dim, dim) - lam.transpose() * ginv * lam;
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for c in 0..dim {
        let mut v = p.column(c).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let a = q.dot(&v);
                v -= q * a;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            cols.push(v / nv);
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(dim, 0);
    }
    DMatrix::from_columns(&cols)
}

// 𝒥 = Σ i^{p−q} Π^{p,q} from the complex frame θ_i = w_{2i} − √−1 w_{2i+1}.
fn build_j(n: usize, masks: &[Vec<u32>], k: usize) -> Result<DMatrix<f64>> {
    let m = 2 * n;
    let dim = masks[k].len();
    let mut theta: Vec<Vec<Complex<f64>>> = Vec::new();
    for conj in [false, true] {
        for i in 0..n {
            let mut v = vec![Complex::new(0.0, 0.0); m];
            v[2 * i] = Complex::new(1.0, 0.0);
            v[2 * i + 1] = Complex::new(0.0, if conj { 1.0 } else { -1.0 });
            theta.push(v);
        }
    }
    let mut frame = DMatrix::<Complex<f64>>::zeros(dim, dim);
    let mut eig = Vec::with_capacity(dim);
    for (c, sel) in (0..m).combinations(k).enumerate() {
        let mut acc = vec![Complex::new(1.0, 0.0)];
        for (deg, &t) in sel.iter().enumerate() {
            acc = wedge_complex(m, &acc, deg, &theta[t], 1);
        }
        let p = sel.iter().filter(|&&t| t < n).count() as i32;
        let q = k as i32 - p;
        eig.push(Complex::new(0.0, 1.0).powi(p - q));
        for (r, x) in acc.into_iter().enumerate() {
            frame[(r, c)] = x;
        }
    }
    let inv = frame
        .clone()
        .try_inverse()
        .ok_or_else(|| SymError::Invalid("(p,q) frame is singular".into()))?;
    let jc = &frame * DMatrix::from_diagonal(&DVector::from_vec(eig)) * inv;
    let imag = jc.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-12 {
        return Err(SymError::Invalid(format!("𝒥 has imaginary residue {imag:.3e}")));
    }
    Ok(jc.map(|z| z.re))
}

/// One named residual of the fiber identity suite.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn null_dim(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 {
        return m.ncols();
    }
    let gram = m.transpose() * m;
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().filter(|&&e| e.abs() < tol).count()
}

/// sl(2), 𝒥, ⋆ and Lefschetz round-trip identities as matrix residuals.
pub fn identity_suite(model: &SymplecticModel) -> Vec<IdentityCheck> {
    let m = model.dim();
    let n = model.n;
    let mut out = Vec::new();
    let mut push = |name: String, r: f64| out.push(IdentityCheck { name, residual: r });

    push(
        "compatibility omega(J,J)=omega".into(),
        max_abs(&(model.j.transpose() * &model.omega * &model.j - &model.omega)),
    );
    push(
        "metric omega(.,J.)=identity".into(),
        max_abs(&(&model.metric - DMatrix::identity(m, m))),
    );

    for k in 0..=m {
        for r in 1..=(m.saturating_sub(k) / 2) {
            if k + 2 * r > m {
                continue;
            }
            let lr = model.l_pow(r, k);
            let lam_out = model.lam(k + 2 * r);
            let comm = if k >= 2 {
                lam_out * &lr - model.l_pow(r, k - 2) * model.lam(k)
            } else {
                lam_out * &lr
            };
            let rhs = model.l_pow(r - 1, k) * (model.h_weight(k + 2 * r - 2) + r as f64 - 1.0) * r as f64;
            push(format!("[Lam,L^{r}] on degree {k}"), max_abs(&(comm - rhs)));
        }
        let id = DMatrix::<f64>::identity(model.fiber_dim(k), model.fiber_dim(k));
        let rk = model.r(k);
        let h = model.h_weight(k);
        if k >= 2 {
            let llam = model.l(k - 2) * model.lam(k);
            let rhs = (rk + &id * (h + 1.0)) * rk;
            push(format!("L Lam = (H+R+1)R on degree {k}"), max_abs(&(llam - rhs)));
        } else {
            push(format!("L Lam = (H+R+1)R on degree {k}"), max_abs(&((rk + &id * (h + 1.0)) * rk)));
        }
        if k + 2 <= m {
            let laml = model.lam(k + 2) * model.l(k);
            let rhs = (rk + &id * h) * (rk + &id);
            push(format!("Lam L = (H+R)(R+1) on degree {k}"), max_abs(&(laml - rhs)));
        }

        let jk = model.jop(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        push(format!("J^2 = (-1)^k on degree {k}"), max_abs(&(jk * jk - &id * sign)));
        push(format!("J = wedge power of J1 on degree {k}"), max_abs(&(jk - model.j_wedge_power(k))));
        if k + 2 <= m {
            push(format!("[J,L] on degree {k}"), max_abs(&(model.jop(k + 2) * model.l(k) - model.l(k) * jk)));
        }
        if k >= 2 {
            push(format!("[J,Lam] on degree {k}"), max_abs(&(model.jop(k - 2) * model.lam(k) - model.lam(k) * jk)));
        }
        let ss = model.star(m - k) * model.star(k);
        let s2 = if (k * (m - k)) % 2 == 0 { 1.0 } else { -1.0 };
        push(format!("star star on degree {k}"), max_abs(&(ss - &id * s2)));

        let mut rt = 0.0f64;
        for c in 0..model.fiber_dim(k) {
            let mut e = FiberForm::zero(n, k);
            e.coeffs[c] = 1.0;
            let comps = model.lefschetz_decompose(&e).expect("well conditioned");
            let back = model.lefschetz_reassemble(&comps, k);
            let d: f64 = back.coeffs.iter().zip(&e.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            rt = rt.max(d);
            for (_, b) in &comps.components {
                if b.degree >= 2 {
                    rt = rt.max((model.lam(b.degree) * DVector::from_column_slice(&b.coeffs)).amax());
                }
            }
        }
        push(format!("Lefschetz round trip on degree {k}"), rt);

        if k <= n {
            let p = model.proj(k);
            push(format!("projector idempotent on degree {k}"), max_abs(&(p * p - p)));
            push(format!("projector self-adjoint on degree {k}"), max_abs(&(p - p.transpose())));
            let lpow = model.l_pow(n - k + 1, k);
            let a = null_dim(model.lam(k), 1e-10);
            let b = null_dim(&lpow, 1e-10);
            push(format!("ker Lam = ker L^(n-k+1) on degree {k}"), (a as f64 - b as f64).abs());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_basics() {
        let dx1 = FiberForm::basis(1, &[0]).unwrap();
        let dx2 = FiberForm::basis(1, &[1]).unwrap();
        assert_eq!(wedge(&dx1, &dx2).unwrap().coeffs, vec![1.0]);
        assert_eq!(wedge(&dx2, &dx1).unwrap().coeffs, vec![-1.0]);
        assert_eq!(wedge(&dx1, &dx1).unwrap().coeffs, vec![0.0]);
    }

    #[test]
    fn omega_squared_is_twice_volume() {
        let model = SymplecticModel::new(2).unwrap();
        let w = model.lefschetz_l(&FiberForm::scalar(2, 1.0)).unwrap();
        let ww = wedge(&w, &w).unwrap();
        assert_eq!(ww.coeffs, vec![2.0]);
    }

    #[test]
    fn lambda_of_omega_is_n() {
        for n in 1..=2 {
            let model = SymplecticModel::new(n).unwrap();
            let w = model.lefschetz_l(&FiberForm::scalar(n, 1.0)).unwrap();
            let lw = model.lambda_dual(&w).unwrap();
            assert!((lw.coeffs[0] - n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn j_and_star_on_dx1() {
        let model = SymplecticModel::new(1).unwrap();
        let dx1 = FiberForm::basis(1, &[0]).unwrap();
        assert_eq!(model.j_operator(&dx1).unwrap().coeffs, vec![0.0, 1.0]);
        assert_eq!(model.hodge_star(&dx1).unwrap().coeffs, vec![0.0, 1.0]);
        let vol = model.hodge_star(&FiberForm::scalar(1, 1.0)).unwrap();
        assert_eq!(vol.coeffs, vec![1.0]);
    }

    #[test]
    fn primitive_dims() {
        let model = SymplecticModel::new(2).unwrap();
        assert_eq!((model.prim_dim(0), model.prim_dim(1), model.prim_dim(2)), (1, 4, 5));
    }

    #[test]
    fn identity_suite_is_exact() {
        for n in 1..=2 {
            let model = SymplecticModel::new(n).unwrap();
            for c in identity_suite(&model) {
                assert!(c.residual <= 1e-12, "n={n} {}: {:.3e}", c.name, c.residual);
            }
        }
    }

    #[test]
    fn overflow_rejected() {
        let a = FiberForm::basis(1, &[0, 1]).unwrap();
        assert!(wedge(&a, &a).is_err());
        let model = SymplecticModel::new(1).unwrap();
        assert!(model.primitive_project(&a).is_err());
    }
}
