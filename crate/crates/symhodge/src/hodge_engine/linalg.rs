//! Dense complex helpers for per-mode blocks.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Result, SymError};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn to_complex(a: &DMatrix<f64>) -> CMat {
    a.map(c)
}

/// kron(I_len, f).
pub fn block_diag(len: usize, f: &CMat) -> CMat {
    let (r, cc) = f.shape();
    let mut out = CMat::zeros(len * r, len * cc);
    for i in 0..len {
        out.view_mut((i * r, i * cc), (r, cc)).copy_from(f);
    }
    out
}

/// kron(a, f) for real a.
pub fn kron_real(a: &DMatrix<f64>, f: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (r, cc) = f.shape();
    let mut out = CMat::zeros(ar * r, ac * cc);
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x != 0.0 {
                out.view_mut((i * r, j * cc), (r, cc)).copy_from(&(f * c(x)));
            }
        }
    }
    out
}

pub fn vstack(blocks: &[&CMat], cols: usize) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        if b.nrows() > 0 {
            out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(b);
        }
        r0 += b.nrows();
    }
    out
}

pub fn hstack(blocks: &[&CMat], rows: usize) -> CMat {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        if b.ncols() > 0 {
            out.view_mut((0, c0), (rows, b.ncols())).copy_from(b);
        }
        c0 += b.ncols();
    }
    out
}

/// Singular values, left vectors, right vectors (V as columns, full when `full_v`).
pub struct Svd {
    pub s: Vec<f64>,
    pub u: CMat,
    pub v: CMat,
}

pub fn svd(a: &CMat, full_v: bool) -> Svd {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Svd { s: Vec::new(), u: CMat::zeros(m, 0), v: if full_v { CMat::identity(n, n) } else { CMat::zeros(n, 0) } };
    }
    // pad with zero rows so that V is square
    let padded = if full_v && m < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let d = SVD::new(padded, true, true);
    let mut s: Vec<f64> = d.singular_values.iter().copied().collect();
    let u = d.u.unwrap();
    let v = d.v_t.unwrap().adjoint();
    // nalgebra returns singular values unsorted in some paths; sort descending
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
    let u = CMat::from_columns(&order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
    let v = CMat::from_columns(&order.iter().map(|&i| v.column(i).into_owned()).collect::<Vec<_>>());
    s = order.iter().map(|&i| s[i]).collect();
    let u = if u.nrows() > m { u.rows(0, m).into_owned() } else { u };
    Svd { s, u, v }
}

/// Number of singular values above `rel · max(smax, floor)`.
pub fn count_above(s: &[f64], rel: f64, floor: f64) -> usize {
    let smax = s.iter().fold(0.0f64, |a, &b| a.max(b)).max(floor);
    s.iter().filter(|&&x| x > rel * smax).count()
}

/// Orthonormal basis (columns) of the null space of `a`, relative cutoff `rel` on singular values.
pub fn null_space(a: &CMat, cols: usize, rel: f64) -> CMat {
    if a.nrows() == 0 {
        return CMat::identity(cols, cols);
    }
    let d = svd(a, true);
    let r = count_above(&d.s, rel, 1.0);
    d.v.columns(r, cols - r).into_owned()
}

/// Null space for row blocks that touch few columns: untouched coordinates pass through.
pub fn null_space_local(a: &CMat, cols: usize, rel: f64) -> CMat {
    if a.nrows() == 0 {
        return CMat::identity(cols, cols);
    }
    let touched: Vec<usize> = (0..cols).filter(|&j| a.column(j).iter().any(|z| z.norm() > 0.0)).collect();
    if touched.is_empty() {
        return CMat::identity(cols, cols);
    }
    let sub = CMat::from_columns(&touched.iter().map(|&j| a.column(j).into_owned()).collect::<Vec<_>>());
    let zs = null_space(&sub, touched.len(), rel);
    let free: Vec<usize> = (0..cols).filter(|j| !touched.contains(j)).collect();
    let mut z = CMat::zeros(cols, free.len() + zs.ncols());
    for (c0, &j) in free.iter().enumerate() {
        z[(j, c0)] = c(1.0);
    }
    for cc in 0..zs.ncols() {
        for (r, &j) in touched.iter().enumerate() {
            z[(j, free.len() + cc)] = zs[(r, cc)];
        }
    }
    z
}

/// Orthonormal basis of the column space with relative cutoff, plus the smallest
/// kept and largest dropped singular values.
pub fn range_space(a: &CMat, rel: f64, floor: f64) -> (CMat, f64, f64) {
    if a.ncols() == 0 || a.nrows() == 0 {
        return (CMat::zeros(a.nrows(), 0), f64::INFINITY, 0.0);
    }
    let d = svd(a, false);
    let r = count_above(&d.s, rel, floor);
    let kept = if r > 0 { d.s[r - 1] } else { f64::INFINITY };
    let dropped = if r < d.s.len() { d.s[r] } else { 0.0 };
    (d.u.columns(0, r).into_owned(), kept, dropped)
}

pub fn rank(a: &CMat, rel: f64, floor: f64) -> usize {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0;
    }
    count_above(&svd(a, false).s, rel, floor)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let sym = (a + a.adjoint()) * c(0.5);
    let e = SymmetricEigen::try_new(sym, 1e-15, 10_000 * n.max(1))
        .ok_or_else(|| SymError::NotConverged(format!("Hermitian eigen-solve of size {n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_columns(&order.iter().map(|&i| e.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    Ok((vals, vecs))
}

/// Eigenvalues only.
pub fn herm_eigvals(a: &CMat) -> Result<Vec<f64>> {
    herm_eig(a).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = CMat::from_row_slice(1, 3, &[c(1.0), c(1.0), c(0.0)]);
        let z = null_space(&a, 3, 1e-12);
        assert_eq!(z.ncols(), 2);
        assert!((&a * &z).norm() < 1e-14);
        assert!((z.adjoint() * &z - CMat::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn eig_sorted() {
        let a = CMat::from_row_slice(2, 2, &[c(2.0), Complex::new(0.0, 1.0), Complex::new(0.0, -1.0), c(2.0)]);
        let (v, _) = herm_eig(&a).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
    }
}
