//! Structured grids on M = [0,1] × T^{2n−1}, sampled form fields, quadrature,
//! boundary traces, the defining function ρ and the SYHF file format.
//!
//! Nodes are ordered row-major with axis 0 (the bounded x₁ axis) slowest;
//! field coefficients are node-major, fiber index fastest.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SymError};
use crate::fiber_algebra::{binomial, SymplecticModel};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub stencil_order: usize,
}

pub fn make_grid(n: usize, shape: &[usize], stencil_order: usize) -> Result<Grid> {
    if shape.len() != 2 * n {
        return Err(SymError::Invalid(format!("expected {} axes, got {}", 2 * n, shape.len())));
    }
    if stencil_order != 2 && stencil_order != 4 {
        return Err(SymError::Invalid(format!("stencil order must be 2 or 4, got {stencil_order}")));
    }
    if shape[0] < 5 {
        return Err(SymError::Invalid(format!("bounded axis needs at least 5 nodes, got {}", shape[0])));
    }
    let min_periodic = if stencil_order == 4 { 5 } else { 3 };
    if shape[1..].iter().any(|&s| s < min_periodic) {
        return Err(SymError::Invalid(format!("periodic axes need at least {min_periodic} nodes")));
    }
    let mut spacing = vec![1.0 / (shape[0] - 1) as f64];
    spacing.extend(shape[1..].iter().map(|&s| 1.0 / s as f64));
    Ok(Grid { n, shape: shape.to_vec(), spacing, stencil_order })
}

impl Grid {
    pub fn num_nodes(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn axes(&self) -> usize {
        self.shape.len()
    }

    /// Number of nodes on one boundary face.
    pub fn face_nodes_count(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn node_multi(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes()];
        for a in (0..self.axes()).rev() {
            out[a] = idx % self.shape[a];
            idx /= self.shape[a];
        }
        out
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.node_multi(idx).iter().zip(&self.spacing).map(|(&i, &h)| i as f64 * h).collect()
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let last = self.shape[0] - 1;
        let stride = self.face_nodes_count();
        (0..self.num_nodes()).map(|p| p / stride == 0 || p / stride == last).collect()
    }

    /// Trapezoid weights on x₁.
    pub fn x1_weights(&self) -> Vec<f64> {
        let n1 = self.shape[0];
        let h = self.spacing[0];
        (0..n1).map(|i| if i == 0 || i == n1 - 1 { 0.5 * h } else { h }).collect()
    }

    /// Volume weight of one periodic cell (1 / Π N_j).
    pub fn face_weight(&self) -> f64 {
        1.0 / self.face_nodes_count() as f64
    }

    pub fn node_weights(&self) -> Vec<f64> {
        let w1 = self.x1_weights();
        let fw = self.face_weight();
        let stride = self.face_nodes_count();
        (0..self.num_nodes()).map(|p| w1[p / stride] * fw).collect()
    }

    /// Node indices of face 0 (x₁ = 0) or face 1 (x₁ = 1), in periodic row-major order.
    pub fn face_nodes(&self, face: Face) -> Vec<usize> {
        let stride = self.face_nodes_count();
        let i1 = match face {
            Face::Lower => 0,
            Face::Upper => self.shape[0] - 1,
        };
        (i1 * stride..(i1 + 1) * stride).collect()
    }

    pub fn refine(&self) -> Result<Grid> {
        let mut shape = vec![2 * (self.shape[0] - 1) + 1];
        shape.extend(self.shape[1..].iter().map(|s| 2 * s));
        make_grid(self.n, &shape, self.stencil_order)
    }

    pub fn shape_label(&self) -> String {
        self.shape.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    Lower,
    Upper,
}

/// ρ and ∇ρ at the nodes.
#[derive(Clone, Debug)]
pub struct DefiningFunction {
    pub values: Vec<f64>,
    pub grad: Vec<Vec<f64>>,
}

const BLEND_LO: f64 = 0.35;
const BLEND_HI: f64 = 0.65;

/// g(x₁) = min(x₁, 1−x₁) with the quintic Hermite blend on [0.35, 0.65]; ρ = −g.
pub fn rho_profile(x: f64) -> (f64, f64) {
    if x <= BLEND_LO {
        (-x, -1.0)
    } else if x >= BLEND_HI {
        (-(1.0 - x), 1.0)
    } else {
        // even quintic matching value, slope and curvature at both ends
        let t = x - 0.5;
        let g = 0.44375 - 5.0 * t * t + (1000.0 / 27.0) * t.powi(4);
        let dg = -10.0 * t + (4000.0 / 27.0) * t.powi(3);
        (-g, -dg)
    }
}

pub fn make_rho(grid: &Grid) -> DefiningFunction {
    let m = grid.axes();
    let mut values = Vec::with_capacity(grid.num_nodes());
    let mut grad = Vec::with_capacity(grid.num_nodes());
    let n1 = grid.shape[0];
    let stride = grid.face_nodes_count();
    for p in 0..grid.num_nodes() {
        let i1 = p / stride;
        let (r, dr) = if i1 == 0 || i1 == n1 - 1 {
            (0.0, if i1 == 0 { -1.0 } else { 1.0 })
        } else {
            rho_profile(i1 as f64 * grid.spacing[0])
        };
        values.push(r);
        let mut g = vec![0.0; m];
        g[0] = dr;
        grad.push(g);
    }
    DefiningFunction { values, grad }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    pub grid: Grid,
    pub degree: usize,
    pub primitive_flag: bool,
    pub coeffs: Vec<f64>,
}

pub const PRIMITIVE_TOL: f64 = 1e-10;

impl FormField {
    pub fn zeros(grid: &Grid, degree: usize) -> Self {
        let d = binomial(2 * grid.n, degree);
        FormField { grid: grid.clone(), degree, primitive_flag: degree <= grid.n, coeffs: vec![0.0; grid.num_nodes() * d] }
    }

    pub fn from_coeffs(grid: &Grid, model: &SymplecticModel, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let d = binomial(2 * grid.n, degree);
        if coeffs.len() != grid.num_nodes() * d {
            return Err(SymError::Invalid(format!("expected {} coefficients, got {}", grid.num_nodes() * d, coeffs.len())));
        }
        let mut f = FormField { grid: grid.clone(), degree, primitive_flag: false, coeffs };
        f.primitive_flag = f.check_primitive(model);
        Ok(f)
    }

    pub fn fiber_dim(&self) -> usize {
        binomial(2 * self.grid.n, self.degree)
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let d = self.fiber_dim();
        &self.coeffs[node * d..(node + 1) * d]
    }

    pub fn check_primitive(&self, model: &SymplecticModel) -> bool {
        if self.degree > self.grid.n {
            return false;
        }
        if self.degree < 2 {
            return true;
        }
        let lam = model.lam(self.degree);
        let d = self.fiber_dim();
        self.coeffs.chunks(d).all(|c| {
            let nrm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut worst = 0.0f64;
            for r in 0..lam.nrows() {
                let v: f64 = (0..d).map(|j| lam[(r, j)] * c[j]).sum();
                worst += v * v;
            }
            worst.sqrt() <= PRIMITIVE_TOL * nrm.max(f64::MIN_POSITIVE)
        })
    }

    pub fn norm(&self) -> f64 {
        inner_product(self, self).map(f64::sqrt).unwrap_or(f64::NAN)
    }

    pub fn axpy(&mut self, a: f64, x: &FormField) {
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += a * v;
        }
    }

    pub fn scaled(&self, a: f64) -> FormField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    pub fn sub(&self, other: &FormField) -> FormField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Apply a fiber matrix at every node.
    pub fn map_fiber(&self, m: &nalgebra::DMatrix<f64>, degree: usize) -> FormField {
        let din = self.fiber_dim();
        let dout = m.nrows();
        let mut coeffs = vec![0.0; self.grid.num_nodes() * dout];
        for (node, c) in self.coeffs.chunks(din).enumerate() {
            for r in 0..dout {
                coeffs[node * dout + r] = (0..din).map(|j| m[(r, j)] * c[j]).sum();
            }
        }
        FormField { grid: self.grid.clone(), degree, primitive_flag: false, coeffs }
    }
}

/// Evaluate a closed-form expression at the nodes.
///
/// The expression returns the C(2n,k) coefficients at a point; periodicity on
/// axes 2..2n is checked by evaluating at x_j = 1 on the x_j = 0 seam.
pub fn sample_form(
    grid: &Grid,
    model: &SymplecticModel,
    degree: usize,
    expr: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<FormField> {
    let d = binomial(2 * grid.n, degree);
    let mut coeffs = Vec::with_capacity(grid.num_nodes() * d);
    for p in 0..grid.num_nodes() {
        let x = grid.coords(p);
        let v = expr(&x);
        if v.len() != d {
            return Err(SymError::Invalid(format!("expression returned {} coefficients, expected {d}", v.len())));
        }
        coeffs.extend(v);
    }
    let scale = coeffs.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    for axis in 1..grid.axes() {
        let mut worst = 0.0f64;
        for p in 0..grid.num_nodes() {
            let multi = grid.node_multi(p);
            if multi[axis] != 0 {
                continue;
            }
            let mut x = grid.coords(p);
            x[axis] = 1.0;
            let v = expr(&x);
            for (a, b) in v.iter().zip(&coeffs[p * d..(p + 1) * d]) {
                worst = worst.max((a - b).abs());
            }
        }
        if worst > 1e-10 * scale {
            return Err(SymError::SeamMismatch { axis, mismatch: worst });
        }
    }
    FormField::from_coeffs(grid, model, degree, coeffs)
}

/// Quadrature inner product: trapezoid on x₁, uniform on periodic axes.
pub fn inner_product(a: &FormField, b: &FormField) -> Result<f64> {
    if a.degree != b.degree {
        return Err(SymError::Invalid(format!("degree mismatch {} vs {}", a.degree, b.degree)));
    }
    if a.grid != b.grid {
        return Err(SymError::Invalid("grid mismatch".into()));
    }
    let d = a.fiber_dim();
    let w = a.grid.node_weights();
    let mut s = 0.0;
    for (node, wt) in w.iter().enumerate() {
        let ca = &a.coeffs[node * d..(node + 1) * d];
        let cb = &b.coeffs[node * d..(node + 1) * d];
        s += wt * ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok(s)
}

pub fn rho_multiply(rho: &DefiningFunction, a: &FormField) -> FormField {
    let d = a.fiber_dim();
    let mut out = a.clone();
    for (node, r) in rho.values.iter().enumerate() {
        out.coeffs[node * d..(node + 1) * d].iter_mut().for_each(|c| *c *= r);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub face: Face,
    pub degree: usize,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn restrict_face(a: &FormField, face: Face) -> BoundaryTrace {
    let d = a.fiber_dim();
    let mut values = Vec::with_capacity(a.grid.face_nodes_count() * d);
    for p in a.grid.face_nodes(face) {
        values.extend_from_slice(&a.coeffs[p * d..(p + 1) * d]);
    }
    BoundaryTrace { face, degree: a.degree, shape: a.grid.shape[1..].to_vec(), values }
}

/// Traces on both faces, lower first.
pub fn restrict_boundary(a: &FormField) -> [BoundaryTrace; 2] {
    [restrict_face(a, Face::Lower), restrict_face(a, Face::Upper)]
}

/// ∫ over one face of ⟨t1, t2⟩ with uniform periodic weights.
pub fn boundary_integral(t1: &BoundaryTrace, t2: &BoundaryTrace) -> Result<f64> {
    if t1.degree != t2.degree || t1.shape != t2.shape || t1.face != t2.face {
        return Err(SymError::Invalid("trace mismatch".into()));
    }
    let cells: usize = t1.shape.iter().product();
    let s: f64 = t1.values.iter().zip(&t2.values).map(|(a, b)| a * b).sum();
    Ok(s / cells as f64)
}

/// ∫_{∂M} ⟨a, b⟩ summed over both faces.
pub fn boundary_pairing(a: &FormField, b: &FormField) -> Result<f64> {
    let ta = restrict_boundary(a);
    let tb = restrict_boundary(b);
    Ok(boundary_integral(&ta[0], &tb[0])? + boundary_integral(&ta[1], &tb[1])?)
}

const MAGIC: &[u8; 4] = b"SYHF";
const VERSION: u32 = 1;

pub fn write_syhf<W: Write>(field: &FormField, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [VERSION, field.grid.n as u32, field.degree as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for &s in &field.grid.shape {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    w.write_all(&(field.grid.stencil_order as u32).to_le_bytes())?;
    w.write_all(&[field.primitive_flag as u8])?;
    for c in &field.coeffs {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_syhf<R: Read>(r: &mut R) -> Result<FormField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SymError::Format("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(SymError::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(r)? as usize;
    let degree = read_u32(r)? as usize;
    if n == 0 || n > 4 || degree > 2 * n {
        return Err(SymError::Format(format!("bad header n={n} degree={degree}")));
    }
    let mut shape = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        shape.push(read_u32(r)? as usize);
    }
    let order = read_u32(r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let grid = make_grid(n, &shape, order)?;
    let len = grid.num_nodes() * binomial(2 * n, degree);
    let mut coeffs = Vec::with_capacity(len);
    let mut b = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut b)?;
        coeffs.push(f64::from_le_bytes(b));
    }
    Ok(FormField { grid, degree, primitive_flag: flag[0] != 0, coeffs })
}

/// CSV rows `face,node,x2,...,x2n,c0,...` for a trace.
pub fn write_trace_csv<W: Write>(trace: &BoundaryTrace, w: &mut W) -> Result<()> {
    let d = trace.values.len() / trace.shape.iter().product::<usize>().max(1);
    let mut header = String::from("face,node");
    for a in 0..trace.shape.len() {
        header.push_str(&format!(",x{}", a + 2));
    }
    for c in 0..d {
        header.push_str(&format!(",c{c}"));
    }
    writeln!(w, "{header}")?;
    let face = match trace.face {
        Face::Lower => 0,
        Face::Upper => 1,
    };
    let cells: usize = trace.shape.iter().product();
    for node in 0..cells {
        let mut rem = node;
        let mut xs = vec![0.0; trace.shape.len()];
        for a in (0..trace.shape.len()).rev() {
            xs[a] = (rem % trace.shape[a]) as f64 / trace.shape[a] as f64;
            rem /= trace.shape[a];
        }
        let mut line = format!("{face},{node}");
        for x in xs {
            line.push_str(&format!(",{x}"));
        }
        for c in &trace.values[node * d..(node + 1) * d] {
            line.push_str(&format!(",{c}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Seeded smooth random field: a truncated Fourier series with spectrum
/// decaying like exp(−|κ|/2), cos(π j x₁) on the bounded axis and e^{2πi m·x}
/// on the periodic axes, |j|, |m_a| ≤ `modes`. Primitive fields are obtained
/// by pointwise primitive projection.
pub fn random_field(
    grid: &Grid,
    model: &SymplecticModel,
    degree: usize,
    primitive: bool,
    modes: usize,
    seed: u64,
) -> Result<FormField> {
    if primitive && degree > grid.n {
        return Err(SymError::Degree { n: grid.n, degree });
    }
    let d = binomial(2 * grid.n, degree);
    let axes = grid.axes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // list of (j, m-vector, phase kind)
    let mut terms: Vec<(usize, Vec<i64>, Vec<f64>, Vec<f64>)> = Vec::new();
    let k = modes as i64;
    let per = axes - 1;
    let count = (2 * k + 1).pow(per as u32);
    for j in 0..=modes {
        for t in 0..count {
            let mut rem = t;
            let mut mv = vec![0i64; per];
            for a in 0..per {
                mv[a] = (rem % (2 * k + 1) as i64) - k;
                rem /= (2 * k + 1) as i64;
            }
            let kap = j as f64 + mv.iter().map(|x| x.abs() as f64).sum::<f64>();
            let amp = (-0.5 * kap).exp();
            let a: Vec<f64> = (0..d).map(|_| amp * (2.0 * rng.gen::<f64>() - 1.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| amp * (2.0 * rng.gen::<f64>() - 1.0)).collect();
            terms.push((j, mv, a, b));
        }
    }
    // per-axis tables: cos(πj x₁) and e^{2πi m y} for m in −k..=k
    let pi = std::f64::consts::PI;
    let xs: Vec<Vec<f64>> = (0..axes).map(|a| (0..grid.shape[a]).map(|i| i as f64 * grid.spacing[a]).collect()).collect();
    let cos_tab: Vec<Vec<f64>> = (0..=modes).map(|j| xs[0].iter().map(|&x| (pi * j as f64 * x).cos()).collect()).collect();
    let exp_tab: Vec<Vec<Vec<(f64, f64)>>> = (1..axes)
        .map(|a| (-k..=k).map(|m| xs[a].iter().map(|&y| (2.0 * pi * m as f64 * y).sin_cos()).collect()).collect())
        .collect();
    // fold the x₁ sum: per (x₁ node, m) amplitude vectors
    let nm = count as usize;
    let n1 = grid.shape[0];
    let mut amp_a = vec![0.0; n1 * nm * d];
    let mut amp_b = vec![0.0; n1 * nm * d];
    for (t, (j, _, a, b)) in terms.iter().enumerate() {
        let mi = t % nm;
        for i1 in 0..n1 {
            let cx = cos_tab[*j][i1];
            let off = (i1 * nm + mi) * d;
            for i in 0..d {
                amp_a[off + i] += cx * a[i];
                amp_b[off + i] += cx * b[i];
            }
        }
    }
    let mut coeffs = vec![0.0; grid.num_nodes() * d];
    for p in 0..grid.num_nodes() {
        let idx = grid.node_multi(p);
        let out = &mut coeffs[p * d..(p + 1) * d];
        for (mi, (_, mv, _, _)) in terms.iter().take(nm).enumerate() {
            let (mut re, mut im) = (1.0, 0.0);
            for (ax, m) in mv.iter().enumerate() {
                let (s1, c1) = exp_tab[ax][(m + k) as usize][idx[ax + 1]];
                let r = re * c1 - im * s1;
                im = re * s1 + im * c1;
                re = r;
            }
            let off = (idx[0] * nm + mi) * d;
            for i in 0..d {
                out[i] += amp_a[off + i] * re + amp_b[off + i] * im;
            }
        }
    }
    let mut f = FormField { grid: grid.clone(), degree, primitive_flag: false, coeffs };
    if primitive {
        f = f.map_fiber(model.proj(degree), degree);
    }
    f.primitive_flag = f.check_primitive(model);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_blend_is_c2() {
        for &x0 in &[BLEND_LO, BLEND_HI] {
            let e = 1e-7;
            let (a, da) = rho_profile(x0 - e);
            let (b, db) = rho_profile(x0 + e);
            assert!((a - b).abs() < 1e-6 && (da - db).abs() < 1e-5);
            let (_, da2) = rho_profile(x0 - 2.0 * e);
            let (_, db2) = rho_profile(x0 + 2.0 * e);
            let curv_l = (da - da2) / e;
            let curv_r = (db2 - db) / e;
            assert!(curv_l.abs() < 1e-4 && curv_r.abs() < 1e-4);
        }
        assert!(rho_profile(0.5).0 < 0.0);
    }

    #[test]
    fn grid_rejects_short_axis() {
        assert!(make_grid(1, &[4, 8], 2).is_err());
        assert!(make_grid(1, &[5, 8], 3).is_err());
        assert!(make_grid(1, &[5, 8, 8], 2).is_err());
    }

    #[test]
    fn boundary_mask_marks_two_faces() {
        let g = make_grid(1, &[6, 4], 2).unwrap();
        let m = g.boundary_mask();
        assert_eq!(m.iter().filter(|&&b| b).count(), 8);
        assert!(m[0] && m[23] && !m[4]);
    }

    #[test]
    fn weights_sum_to_volume() {
        let g = make_grid(2, &[9, 4, 5, 6], 2).unwrap();
        let s: f64 = g.node_weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
