//! Assembled operators against difference quotients written out node by node.

use symhodge::grid_domain::random_field;
use symhodge::symplectic_operators::matvec;
use symhodge::{make_grid, Assembler, Grid, SymplecticModel};

/// Second-order derivative of nodal data along `axis`, computed directly from neighbours.
fn diff(g: &Grid, f: &[f64], axis: usize, p: usize) -> f64 {
    let multi = g.node_multi(p);
    let n = g.shape[axis];
    let at = |i: usize| {
        let mut m = multi.clone();
        m[axis] = i;
        f[g.node_index(&m)]
    };
    let i = multi[axis];
    if axis == 0 {
        let h = 1.0 / (n - 1) as f64;
        if i == 0 {
            (-1.5 * at(0) + 2.0 * at(1) - 0.5 * at(2)) / h
        } else if i == n - 1 {
            (1.5 * at(n - 1) - 2.0 * at(n - 2) + 0.5 * at(n - 3)) / h
        } else {
            (at(i + 1) - at(i - 1)) / (2.0 * h)
        }
    } else {
        let h = 1.0 / n as f64;
        (at((i + 1) % n) - at((i + n - 1) % n)) / (2.0 * h)
    }
}

#[test]
fn gradient_is_the_nodal_difference_quotient() {
    for (n, shape) in [(1usize, vec![7usize, 6]), (2, vec![5, 4, 6, 3])] {
        let md = SymplecticModel::new(n).unwrap();
        let g = make_grid(n, &shape, 2).unwrap();
        let asm = Assembler::new(&g, &md).unwrap();
        let f = random_field(&g, &md, 0, true, 2, 11).unwrap();
        let df = matvec(&asm.d(0), &f.coeffs);
        let dp = matvec(&asm.dplus(0), &f.coeffs);
        for p in 0..g.num_nodes() {
            for j in 0..2 * n {
                let want = diff(&g, &f.coeffs, j, p);
                assert!((df[p * 2 * n + j] - want).abs() < 1e-10, "n={n} node {p} axis {j}");
                // every 1-form is primitive, so ∂₊ = d on functions
                assert!((dp[p * 2 * n + j] - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn dminus_on_surface_one_forms_is_the_curl() {
    // n = 1: dη = L∂₋η with L the identity from functions to top forms
    let md = SymplecticModel::new(1).unwrap();
    let g = make_grid(1, &[8, 5], 2).unwrap();
    let asm = Assembler::new(&g, &md).unwrap();
    let eta = random_field(&g, &md, 1, true, 2, 3).unwrap();
    let a: Vec<f64> = eta.coeffs.iter().step_by(2).copied().collect();
    let b: Vec<f64> = eta.coeffs.iter().skip(1).step_by(2).copied().collect();
    let out = matvec(&asm.dminus(1), &eta.coeffs);
    for p in 0..g.num_nodes() {
        let want = diff(&g, &b, 0, p) - diff(&g, &a, 1, p);
        assert!((out[p] - want).abs() < 1e-10, "node {p}");
    }
}

#[test]
fn fourth_order_stencil_is_exact_on_quartics_in_x1() {
    let md = SymplecticModel::new(1).unwrap();
    let g = make_grid(1, &[9, 6], 4).unwrap();
    let asm = Assembler::new(&g, &md).unwrap();
    let f: Vec<f64> = (0..g.num_nodes()).map(|p| g.coords(p)[0].powi(4)).collect();
    let df = matvec(&asm.d(0), &f);
    for p in 0..g.num_nodes() {
        let x = g.coords(p)[0];
        assert!((df[2 * p] - 4.0 * x.powi(3)).abs() < 1e-10);
        assert!(df[2 * p + 1].abs() < 1e-12);
    }
}
