//! Primitive cohomologies by persistent ranks of a polynomial complex.
//!
//! The bounded axis carries Chebyshev coefficients of degree ≤ q (exact
//! differentiation), the periodic axes the grid's Fourier symbols. A class is
//! counted when it is closed at degree q and not exact at degree q + dq.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::harmonic::{harmonic_space, HarmonicKind, DEFAULT_CUTOFF};
use super::linalg::{block_diag, hstack, svd, to_complex, CMat};
use super::modes::{AxisModel, ModeOps, ModeSet};
use crate::error::{Result, SymError};
use crate::fiber_algebra::SymplecticModel;
use crate::grid_domain::Grid;
use crate::symplectic_operators::BoundaryCondition;

pub const DEFAULT_Q: usize = 8;
pub const DEFAULT_DQ: usize = 2;
/// Relative singular-value cutoff for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Level {
    DPlus,
    DMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    Absolute,
    Dual,
    RelativeD,
    RelativeN,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::DPlus => "dplus",
            Level::DMinus => "dminus",
        }
    }
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Absolute, Variant::Dual, Variant::RelativeD, Variant::RelativeN];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Absolute => "absolute",
            Variant::Dual => "dual",
            Variant::RelativeD => "relative_D",
            Variant::RelativeN => "relative_N",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = SymError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dplus" => Ok(Level::DPlus),
            "dminus" => Ok(Level::DMinus),
            _ => Err(SymError::Invalid(format!("unknown level '{s}'"))),
        }
    }
}

impl FromStr for Variant {
    type Err = SymError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(Variant::Absolute),
            "dual" => Ok(Variant::Dual),
            "relative_D" | "relative_d" => Ok(Variant::RelativeD),
            "relative_N" | "relative_n" => Ok(Variant::RelativeN),
            _ => Err(SymError::Invalid(format!("unknown variant '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Dp(usize),
    Dm(usize),
    Dps(usize),
    Dms(usize),
    Dpm,
    Dpms,
}

impl Op {
    fn at(self, ops: &ModeOps) -> CMat {
        match self {
            Op::Dp(k) => ops.dp(k),
            Op::Dm(k) => ops.dm(k),
            Op::Dps(k) => ops.dps(k),
            Op::Dms(k) => ops.dms(k),
            Op::Dpm => ops.dpm(),
            Op::Dpms => ops.dpms(),
        }
    }
}

/// Kernel operator and condition on degree k; image operator from degree `src` with its condition.
struct ComplexSpec {
    kernel: Op,
    kernel_bc: Option<BoundaryCondition>,
    image: Option<(Op, usize, Option<BoundaryCondition>)>,
}

fn complex_spec(level: Level, variant: Variant, k: usize, n: usize) -> ComplexSpec {
    use BoundaryCondition::*;
    use Variant::*;
    let pos = k > 0;
    let (kernel, kernel_bc, image) = if k < n {
        match (level, variant) {
            (Level::DPlus, Absolute) => (Op::Dp(k), None, pos.then(|| (Op::Dp(k - 1), k - 1, None))),
            (Level::DMinus, Absolute) => (Op::Dm(k), None, Some((Op::Dm(k + 1), k + 1, None))),
            (Level::DPlus, Dual) => (Op::Dps(k), None, Some((Op::Dps(k + 1), k + 1, None))),
            (Level::DMinus, Dual) => (Op::Dms(k), None, pos.then(|| (Op::Dms(k - 1), k - 1, None))),
            (Level::DPlus, RelativeD) => (Op::Dp(k), Some(DPlus), pos.then(|| (Op::Dp(k - 1), k - 1, Some(DPlus)))),
            (Level::DMinus, RelativeD) => (Op::Dm(k), pos.then_some(DMinus), Some((Op::Dm(k + 1), k + 1, Some(DMinus)))),
            (Level::DPlus, RelativeN) => (Op::Dps(k), pos.then_some(NPlus), Some((Op::Dps(k + 1), k + 1, Some(NPlus)))),
            (Level::DMinus, RelativeN) => (Op::Dms(k), Some(NMinus), pos.then(|| (Op::Dms(k - 1), k - 1, Some(NMinus)))),
        }
    } else {
        match (level, variant) {
            (Level::DPlus, Absolute) => (Op::Dpm, None, Some((Op::Dp(n - 1), n - 1, None))),
            (Level::DMinus, Absolute) => (Op::Dm(n), None, Some((Op::Dpm, n, None))),
            (Level::DPlus, Dual) => (Op::Dps(n), None, Some((Op::Dpms, n, None))),
            (Level::DMinus, Dual) => (Op::Dpms, None, Some((Op::Dms(n - 1), n - 1, None))),
            (Level::DPlus, RelativeD) => (Op::Dpm, Some(B), Some((Op::Dp(n - 1), n - 1, Some(DPlus)))),
            (Level::DMinus, RelativeD) => (Op::Dm(n), Some(DMinus), Some((Op::Dpm, n, Some(B)))),
            (Level::DPlus, RelativeN) => (Op::Dps(n), Some(NPlus), Some((Op::Dpms, n, Some(C)))),
            (Level::DMinus, RelativeN) => (Op::Dpms, Some(C), Some((Op::Dms(n - 1), n - 1, Some(NMinus)))),
        }
    };
    ComplexSpec { kernel, kernel_bc, image }
}

/// Rank decisions with the smallest observed gap between kept and dropped singular values.
struct Ranks {
    rel: f64,
    min_straddle: f64,
}

impl Ranks {
    fn new(rel: f64) -> Self {
        Ranks { rel, min_straddle: f64::INFINITY }
    }

    fn decide(&mut self, s: &[f64]) -> usize {
        let smax = s.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        let r = s.iter().filter(|&&x| x > self.rel * smax).count();
        let kept = s[r - 1] / smax;
        let ratio = if r < s.len() {
            let dropped = s[r] / smax;
            if dropped > 0.0 {
                kept / dropped
            } else {
                f64::INFINITY
            }
        } else {
            kept / self.rel
        };
        self.min_straddle = self.min_straddle.min(ratio);
        r
    }

    fn rank(&mut self, a: &CMat) -> usize {
        if a.nrows() == 0 || a.ncols() == 0 {
            return 0;
        }
        let s = svd(a, false).s;
        self.decide(&s)
    }

    fn null(&mut self, a: &CMat, cols: usize) -> CMat {
        if a.nrows() == 0 {
            return CMat::identity(cols, cols);
        }
        let d = svd(a, true);
        let r = self.decide(&d.s);
        d.v.columns(r, cols - r).into_owned()
    }
}

/// Zero-padding of degree-q coefficients into degree q + dq.
fn include(z: &CMat, rows: usize) -> CMat {
    let mut out = CMat::zeros(rows, z.ncols());
    out.view_mut((0, 0), z.shape()).copy_from(z);
    out
}

fn constrained(ranks: &mut Ranks, ops: &ModeOps, bc: Option<BoundaryCondition>, k: usize) -> Result<CMat> {
    let n = ops.size(k);
    Ok(match bc {
        Some(b) => ranks.null(&ops.bc_rows(b, k)?, n),
        None => CMat::identity(n, n),
    })
}

/// dim Z_q − dim(Z_q ∩ B_{q+dq}).
fn persistent(ranks: &mut Ranks, lo: &ModeOps, hi: &ModeOps, spec: &ComplexSpec, k: usize) -> Result<usize> {
    let sa = constrained(ranks, lo, spec.kernel_bc, k)?;
    let a = spec.kernel.at(lo);
    let z = if a.nrows() == 0 { sa } else { &sa * ranks.null(&(a * &sa), sa.ncols()) };
    let dz = z.ncols();
    let Some((op, src, bc)) = spec.image else {
        return Ok(dz);
    };
    let sb = constrained(ranks, hi, bc, src)?;
    let b = op.at(hi) * sb;
    let zb = include(&z, hi.size(k));
    let rb = ranks.rank(&b);
    let rsum = ranks.rank(&hstack(&[&zb, &b], zb.nrows()));
    Ok(dz - (dz + rb - rsum))
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyReport {
    pub level: Level,
    pub variant: Variant,
    pub degree: usize,
    pub dimension: usize,
    /// Smallest kept/dropped singular-value ratio over all rank decisions.
    pub min_straddle: f64,
    pub q: usize,
    pub dq: usize,
}

/// Options of the polynomial complex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolyOptions {
    pub q: usize,
    pub dq: usize,
    pub cutoff: f64,
}

impl Default for PolyOptions {
    fn default() -> Self {
        PolyOptions { q: DEFAULT_Q, dq: DEFAULT_DQ, cutoff: RANK_CUTOFF }
    }
}

/// Sum of per-mode values over resolved Fourier modes of the grid; conjugate modes are evaluated once.
fn over_modes<T: Clone>(grid: &Grid, mut f: impl FnMut(&[nalgebra::Complex<f64>]) -> Result<T>) -> Result<Vec<T>> {
    let ms = ModeSet::new(grid);
    let mut done: HashMap<usize, T> = HashMap::new();
    let mut out = Vec::new();
    for mode in (0..ms.len()).filter(|&m| ms.resolved(m)) {
        let v = match done.get(&ms.conjugate(mode)) {
            Some(v) => v.clone(),
            None => f(&ms.symbols(grid, mode))?,
        };
        done.insert(mode, v.clone());
        out.push(v);
    }
    Ok(out)
}

pub fn cohomology_dim_with(
    level: Level,
    variant: Variant,
    k: usize,
    grid: &Grid,
    md: &SymplecticModel,
    opts: PolyOptions,
) -> Result<CohomologyReport> {
    let n = md.n;
    if grid.n != n {
        return Err(SymError::DimensionMismatch(grid.n, n));
    }
    if k > n || (k == 0 && n == 0) {
        return Err(SymError::Degree { n, degree: k });
    }
    let spec = complex_spec(level, variant, k, n);
    let lo_axis = AxisModel::chebyshev(opts.q);
    let hi_axis = AxisModel::chebyshev(opts.q + opts.dq);
    let mut ranks = Ranks::new(opts.cutoff);
    let dims = over_modes(grid, |sym| {
        let lo = ModeOps::new(md, &lo_axis, sym.to_vec());
        let hi = ModeOps::new(md, &hi_axis, sym.to_vec());
        persistent(&mut ranks, &lo, &hi, &spec, k)
    })?;
    let report = CohomologyReport {
        level,
        variant,
        degree: k,
        dimension: dims.iter().sum(),
        min_straddle: ranks.min_straddle,
        q: opts.q,
        dq: opts.dq,
    };
    if report.min_straddle < 10.0 {
        return Err(SymError::RankAmbiguous { ratio: report.min_straddle });
    }
    Ok(report)
}

pub fn cohomology_dim(level: Level, variant: Variant, k: usize, grid: &Grid, md: &SymplecticModel) -> Result<CohomologyReport> {
    cohomology_dim_with(level, variant, k, grid, md, PolyOptions::default())
}

/// Full-form rows: the fiber map `f` evaluated at both ends.
fn end_rows(ops: &ModeOps, f: &nalgebra::DMatrix<f64>) -> CMat {
    block_diag(2, &to_complex(f)) * ops.ends(f.ncols())
}

/// Relative de Rham data per mode: closed forms at degree q and exact forms at q + dq, full fibers.
struct DeRham<'a> {
    md: &'a SymplecticModel,
    lo: ModeOps<'a>,
    hi: ModeOps<'a>,
}

impl DeRham<'_> {
    fn size(&self, ops: &ModeOps, k: usize) -> usize {
        ops.axis.len * self.md.fiber_dim(k)
    }

    fn dirichlet(&self, ranks: &mut Ranks, ops: &ModeOps, k: usize) -> CMat {
        let rows = end_rows(ops, self.md.ext(0, k));
        ranks.null(&rows, self.size(ops, k))
    }

    /// Closed Dirichlet forms of degree k at the low polynomial degree (None for k out of range).
    fn closed(&self, ranks: &mut Ranks, k: isize) -> Option<CMat> {
        let m = self.md.dim() as isize;
        if k < 0 || k > m {
            return None;
        }
        let k = k as usize;
        let s = self.dirichlet(ranks, &self.lo, k);
        let d = self.lo.d_full(k);
        Some(if d.nrows() == 0 { s } else { &s * ranks.null(&(d * &s), s.ncols()) })
    }

    /// Exact Dirichlet forms of degree k at the high polynomial degree.
    fn exact(&self, ranks: &mut Ranks, k: usize) -> CMat {
        if k == 0 {
            return CMat::zeros(self.size(&self.hi, 0), 0);
        }
        let s = self.dirichlet(ranks, &self.hi, k - 1);
        self.hi.d_full(k - 1) * s
    }

    fn lift(&self, z: &CMat, k: usize) -> CMat {
        include(z, self.size(&self.hi, k))
    }

    fn betti(&self, ranks: &mut Ranks, k: isize) -> usize {
        let Some(z) = self.closed(ranks, k) else { return 0 };
        let k = k as usize;
        let b = self.exact(ranks, k);
        let zb = self.lift(&z, k);
        let rb = ranks.rank(&b);
        let rs = ranks.rank(&hstack(&[&zb, &b], zb.nrows()));
        z.ncols() - (z.ncols() + rb - rs)
    }

    /// Rank of L: H^a(d,D) → H^{a+2}(d,D).
    fn lefschetz_rank(&self, ranks: &mut Ranks, a: isize) -> usize {
        let m = self.md.dim() as isize;
        let Some(z) = self.closed(ranks, a) else { return 0 };
        if a + 2 > m {
            return 0;
        }
        let a = a as usize;
        let lz = self.lift(&(self.lo.fib(&self.md.l(a)) * z), a + 2);
        let b = self.exact(ranks, a + 2);
        let rb = ranks.rank(&b);
        ranks.rank(&hstack(&[&lz, &b], lz.nrows())) - rb
    }
}

/// Relative de Rham numbers and the Lefschetz right-hand side at degree k.
#[derive(Clone, Debug, Serialize)]
pub struct LefschetzReport {
    pub degree: usize,
    /// dim H^j(d, D) for j = 0..=2n.
    pub relative_betti: Vec<usize>,
    /// dim ker[L: H^{k−1} → H^{k+1}].
    pub kernel: usize,
    /// dim coker[L: H^{k−2} → H^k].
    pub cokernel: usize,
    pub min_straddle: f64,
}

impl LefschetzReport {
    pub fn rhs(&self) -> usize {
        self.kernel + self.cokernel
    }
}

pub fn lefschetz_rhs(k: usize, grid: &Grid, md: &SymplecticModel, opts: PolyOptions) -> Result<LefschetzReport> {
    let n = md.n;
    if grid.n != n {
        return Err(SymError::DimensionMismatch(grid.n, n));
    }
    if k >= n {
        return Err(SymError::Degree { n, degree: k });
    }
    let lo_axis = AxisModel::chebyshev(opts.q);
    let hi_axis = AxisModel::chebyshev(opts.q + opts.dq);
    let m = md.dim() as isize;
    let ki = k as isize;
    let mut ranks = Ranks::new(opts.cutoff);
    let per_mode = over_modes(grid, |sym| {
        let dr = DeRham { md, lo: ModeOps::new(md, &lo_axis, sym.to_vec()), hi: ModeOps::new(md, &hi_axis, sym.to_vec()) };
        let betti: Vec<usize> = (0..=m).map(|j| dr.betti(&mut ranks, j)).collect();
        let b = |j: isize| if (0..=m).contains(&j) { betti[j as usize] } else { 0 };
        let kernel = b(ki - 1) - dr.lefschetz_rank(&mut ranks, ki - 1);
        let cokernel = b(ki) - dr.lefschetz_rank(&mut ranks, ki - 2);
        Ok((betti, kernel, cokernel))
    })?;
    let mut relative_betti = vec![0; md.dim() + 1];
    let (mut kernel, mut cokernel) = (0, 0);
    for (b, kk, cc) in per_mode {
        for (acc, x) in relative_betti.iter_mut().zip(b) {
            *acc += x;
        }
        kernel += kk;
        cokernel += cc;
    }
    if ranks.min_straddle < 10.0 {
        return Err(SymError::RankAmbiguous { ratio: ranks.min_straddle });
    }
    Ok(LefschetzReport { degree: k, relative_betti, kernel, cokernel, min_straddle: ranks.min_straddle })
}

/// How the two sides of a battery line are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Equal,
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsoCase {
    pub name: String,
    pub degree: usize,
    pub lhs: usize,
    pub rhs: usize,
    pub relation: Relation,
}

impl IsoCase {
    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Equal => self.lhs == self.rhs,
            Relation::AtLeast => self.lhs >= self.rhs,
        }
    }
}

fn bc_label(bc: Option<BoundaryCondition>) -> &'static str {
    bc.map(|b| b.name()).unwrap_or("none")
}

/// Cohomology versus harmonic-field dimensions, plus the 𝒥-dualities, for every degree.
pub fn isomorphism_battery(grid: &Grid, md: &SymplecticModel, opts: PolyOptions) -> Result<Vec<IsoCase>> {
    use BoundaryCondition::*;
    use HarmonicKind::*;
    let n = md.n;
    let mut harm: HashMap<(HarmonicKind, Option<BoundaryCondition>, usize), usize> = HashMap::new();
    let mut hdim = |kind, bc, k| -> Result<usize> {
        if let Some(&d) = harm.get(&(kind, bc, k)) {
            return Ok(d);
        }
        let d = harmonic_space(kind, bc, k, grid, md, DEFAULT_CUTOFF)?.dimension;
        harm.insert((kind, bc, k), d);
        Ok(d)
    };
    let mut coh: HashMap<(Level, Variant, usize), usize> = HashMap::new();
    let mut cdim = |level, variant, k| -> Result<usize> {
        if let Some(&d) = coh.get(&(level, variant, k)) {
            return Ok(d);
        }
        let d = cohomology_dim_with(level, variant, k, grid, md, opts)?.dimension;
        coh.insert((level, variant, k), d);
        Ok(d)
    };
    let mut out = Vec::new();
    for k in 0..=n {
        let rows: Vec<(Level, Variant, HarmonicKind, Option<BoundaryCondition>, Relation)> = if k < n {
            vec![
                (Level::DPlus, Variant::Absolute, Plus, Some(NPlus), Relation::Equal),
                (Level::DMinus, Variant::Absolute, Minus, Some(NMinus), Relation::Equal),
                (Level::DPlus, Variant::Dual, Plus, Some(DPlus), Relation::Equal),
                (Level::DMinus, Variant::Dual, Minus, Some(DMinus), Relation::Equal),
                (Level::DPlus, Variant::RelativeD, Plus, Some(DPlus), Relation::Equal),
                (Level::DMinus, Variant::RelativeD, Minus, Some(DMinus), Relation::Equal),
                (Level::DPlus, Variant::RelativeN, Plus, Some(NPlus), Relation::Equal),
                (Level::DMinus, Variant::RelativeN, Minus, Some(NMinus), Relation::Equal),
            ]
        } else {
            vec![
                (Level::DPlus, Variant::Absolute, PlusPlus, Some(NPlus), Relation::Equal),
                (Level::DMinus, Variant::Absolute, MinusMinus, Some(NPlusMinus), Relation::Equal),
                (Level::DPlus, Variant::Dual, PlusPlus, Some(DPlusMinus), Relation::Equal),
                (Level::DMinus, Variant::Dual, MinusMinus, Some(DMinus), Relation::Equal),
                (Level::DPlus, Variant::RelativeD, PlusPlus, Some(DPlusMinus), Relation::AtLeast),
            ]
        };
        for (level, variant, kind, bc, relation) in rows {
            out.push(IsoCase {
                name: format!("{level}/{variant} vs {kind}/{}", bc_label(bc)),
                degree: k,
                lhs: cdim(level, variant, k)?,
                rhs: hdim(kind, bc, k)?,
                relation,
            });
        }
        // 𝒥 exchanges the two levels of the complex and its dual
        for (a, b) in [((Level::DPlus, Variant::Absolute), (Level::DMinus, Variant::Dual)), ((Level::DPlus, Variant::Dual), (Level::DMinus, Variant::Absolute))] {
            out.push(IsoCase {
                name: format!("{}/{} vs {}/{}", a.0, a.1, b.0, b.1),
                degree: k,
                lhs: cdim(a.0, a.1, k)?,
                rhs: cdim(b.0, b.1, k)?,
                relation: Relation::Equal,
            });
        }
        if k < n {
            out.push(IsoCase {
                name: "plus/D+ vs minus/N-".into(),
                degree: k,
                lhs: hdim(Plus, Some(DPlus), k)?,
                rhs: hdim(Minus, Some(NMinus), k)?,
                relation: Relation::Equal,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_domain::make_grid;

    #[test]
    fn functions_have_one_class() {
        let g = make_grid(1, &[9, 8], 2).unwrap();
        let md = SymplecticModel::new(1).unwrap();
        let r = cohomology_dim(Level::DPlus, Variant::Absolute, 0, &g, &md).unwrap();
        assert_eq!(r.dimension, 1);
        assert!(r.min_straddle >= 10.0);
    }

    #[test]
    fn relative_de_rham_is_shifted_torus_cohomology() {
        // H^j([0,1]×T³, ∂) ≅ H^{j−1}(T³)
        let g = make_grid(2, &[5, 4, 4, 4], 2).unwrap();
        let md = SymplecticModel::new(2).unwrap();
        let r = lefschetz_rhs(1, &g, &md, PolyOptions::default()).unwrap();
        assert_eq!(r.relative_betti, vec![0, 1, 3, 3, 1]);
        assert_eq!(r.rhs(), 1);
    }
}
