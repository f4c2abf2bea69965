//! Fixed finite-difference coefficients for orders 2 and 4.

use nalgebra::{Complex, DMatrix};

/// Centered first-derivative stencil as (offset, weight), to be divided by h.
pub fn centered(order: usize) -> &'static [(isize, f64)] {
    match order {
        2 => &[(-1, -0.5), (1, 0.5)],
        4 => &[(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)],
        _ => panic!("unsupported stencil order {order}"),
    }
}

/// One-sided rows used at the lower end of the bounded axis, one per boundary-affected node.
/// The upper end mirrors them with reversed offsets and flipped sign.
pub fn one_sided(order: usize) -> &'static [&'static [f64]] {
    match order {
        2 => &[&[-1.5, 2.0, -0.5]],
        4 => &[
            &[-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
            &[-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0],
        ],
        _ => panic!("unsupported stencil order {order}"),
    }
}

/// Row `i` of the bounded-axis derivative as (column, weight/h) pairs.
pub fn bounded_row(n1: usize, h: f64, order: usize, i: usize) -> Vec<(usize, f64)> {
    let sided = one_sided(order);
    let b = sided.len();
    if i < b {
        sided[i].iter().enumerate().map(|(c, w)| (c, w / h)).collect()
    } else if i >= n1 - b {
        let r = n1 - 1 - i;
        sided[r].iter().enumerate().map(|(c, w)| (n1 - 1 - c, -w / h)).collect()
    } else {
        centered(order).iter().map(|&(o, w)| ((i as isize + o) as usize, w / h)).collect()
    }
}

/// Dense derivative matrix on the bounded axis (nodes 0..n1 with spacing h).
pub fn bounded_matrix(n1: usize, order: usize) -> DMatrix<f64> {
    let h = 1.0 / (n1 - 1) as f64;
    let mut m = DMatrix::zeros(n1, n1);
    for i in 0..n1 {
        for (c, w) in bounded_row(n1, h, order, i) {
            m[(i, c)] += w;
        }
    }
    m
}

/// Eigenvalue of the periodic centered stencil on the Fourier mode e^{2πi m x}.
pub fn periodic_symbol(m: i64, n: usize, order: usize) -> Complex<f64> {
    let h = 1.0 / n as f64;
    let th = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
    let s: f64 = centered(order).iter().map(|&(o, w)| w * (th * o as f64).sin()).sum();
    Complex::new(0.0, s / h)
}

/// Fourier mode numbers kept in physical spaces: |m| < N/2 (the Nyquist mode, if any, is dropped).
pub fn resolved_modes(n: usize) -> Vec<i64> {
    let half = (n as i64 - 1) / 2;
    (-half..=half).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        for (order, deg) in [(2, 2), (4, 4)] {
            let n1 = 11;
            let d = bounded_matrix(n1, order);
            let x: Vec<f64> = (0..n1).map(|i| i as f64 / (n1 - 1) as f64).collect();
            for p in 0..=deg {
                let u = nalgebra::DVector::from_iterator(n1, x.iter().map(|&t| t.powi(p as i32)));
                let du = &d * u;
                for i in 0..n1 {
                    let ex = if p == 0 { 0.0 } else { p as f64 * x[i].powi(p as i32 - 1) };
                    assert!((du[i] - ex).abs() < 1e-9, "order {order} p {p} row {i}");
                }
            }
        }
    }

    #[test]
    fn symbols_match_closed_forms() {
        let n = 16;
        for m in -7..=7i64 {
            let th = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            let s2 = periodic_symbol(m, n, 2);
            let s4 = periodic_symbol(m, n, 4);
            assert!((s2.im - th.sin() * n as f64).abs() < 1e-12);
            assert!((s4.im - (8.0 * th.sin() - (2.0 * th).sin()) / 6.0 * n as f64).abs() < 1e-11);
        }
        assert_eq!(resolved_modes(8), vec![-3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(resolved_modes(7).len(), 7);
    }
}
