//! Analytic primitive fields Σ f_t(x) p_t with trigonometric f_t and constant
//! primitive fiber vectors p_t, sampled together with their exact derivatives.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symhodge::{FormField, Grid, Result, SymplecticModel};

use std::f64::consts::TAU;

#[derive(Clone, Debug)]
struct Term {
    /// Integer frequency per axis (x₁ included) and phase per axis.
    freq: Vec<f64>,
    phase: Vec<f64>,
    fiber: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct TrigField {
    pub n: usize,
    pub degree: usize,
    terms: Vec<Term>,
}

impl Term {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.freq).zip(&self.phase).map(|((&xi, &m), &p)| (TAU * m * xi + p).cos()).product()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = x.iter().zip(&self.freq).zip(&self.phase).map(|((&xi, &m), &p)| (TAU * m * xi + p).cos()).collect();
        (0..x.len())
            .map(|j| {
                let s = -TAU * self.freq[j] * (TAU * self.freq[j] * x[j] + self.phase[j]).sin();
                c.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, v)| v).product::<f64>() * s
            })
            .collect()
    }
}

impl TrigField {
    /// `count` seeded terms with frequencies in 1..=`max_freq` on every axis.
    pub fn random(md: &SymplecticModel, degree: usize, count: usize, max_freq: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = md.dim();
        let prim = md.prim(degree);
        let terms = (0..count)
            .map(|_| {
                let freq = (0..m).map(|_| rng.gen_range(1..=max_freq) as f64).collect();
                let phase = (0..m).map(|_| rng.gen_range(0.0..TAU)).collect();
                let w = DVector::from_iterator(prim.ncols(), (0..prim.ncols()).map(|_| rng.gen_range(-1.0..1.0)));
                Term { freq, phase, fiber: prim * w }
            })
            .collect();
        TrigField { n: md.n, degree, terms }
    }

    fn sample_with(&self, grid: &Grid, md: &SymplecticModel, degree: usize, f: impl Fn(&[f64]) -> DVector<f64>) -> Result<FormField> {
        let d = md.fiber_dim(degree);
        let mut coeffs = Vec::with_capacity(grid.num_nodes() * d);
        for p in 0..grid.num_nodes() {
            coeffs.extend(f(&grid.coords(p)).iter());
        }
        Ok(FormField { grid: grid.clone(), degree, primitive_flag: false, coeffs })
    }

    pub fn sample(&self, grid: &Grid, md: &SymplecticModel) -> Result<FormField> {
        let mut f = self.sample_with(grid, md, self.degree, |x| {
            self.terms.iter().fold(DVector::zeros(md.fiber_dim(self.degree)), |acc, t| acc + &t.fiber * t.value(x))
        })?;
        f.primitive_flag = true;
        Ok(f)
    }

    fn d_at(&self, md: &SymplecticModel, x: &[f64]) -> DVector<f64> {
        let k = self.degree;
        let mut out = DVector::zeros(md.fiber_dim(k + 1));
        for t in &self.terms {
            for (j, g) in t.grad(x).into_iter().enumerate() {
                out += md.ext(j, k) * &t.fiber * g;
            }
        }
        out
    }

    /// Exact dη sampled on the grid.
    pub fn d_exact(&self, grid: &Grid, md: &SymplecticModel) -> Result<FormField> {
        self.sample_with(grid, md, self.degree + 1, |x| self.d_at(md, x))
    }

    /// Exact ∂₊η = π(dη) sampled on the grid.
    pub fn dplus_exact(&self, grid: &Grid, md: &SymplecticModel) -> Result<FormField> {
        let proj: DMatrix<f64> = md.proj(self.degree + 1).clone();
        let mut f = self.sample_with(grid, md, self.degree + 1, |x| &proj * self.d_at(md, x))?;
        f.primitive_flag = true;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use symhodge::make_grid;

    #[test]
    fn gradient_matches_finite_differences() {
        let md = SymplecticModel::new(1).unwrap();
        let f = TrigField::random(&md, 0, 3, 2, 5);
        let x = [0.3, 0.7];
        let h = 1e-6;
        for t in &f.terms {
            let g = t.grad(&x);
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (t.value(&xp) - t.value(&xm)) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-6 * (1.0 + g[j].abs()));
            }
        }
    }

    #[test]
    fn samples_are_primitive_and_periodic() {
        let md = SymplecticModel::new(2).unwrap();
        let g = make_grid(2, &[5, 4, 4, 4], 2).unwrap();
        let f = TrigField::random(&md, 1, 2, 2, 9);
        assert!(f.sample(&g, &md).unwrap().check_primitive(&md));
        assert!(f.dplus_exact(&g, &md).unwrap().check_primitive(&md));
    }
}
