//! Decomposition and Poincaré solutions checked with sums computed here.

use symhodge::grid_domain::random_field;
use symhodge::hodge_engine::{hodge_decompose, poincare_solve, Flavor, PoincareOp, PoincareOptions, SolveStatus};
use symhodge::symplectic_operators::matvec;
use symhodge::{make_grid, Assembler, FormField, SymplecticModel};

fn weighted_dot(a: &FormField, b: &FormField) -> f64 {
    let w = a.grid.node_weights();
    let d = a.fiber_dim();
    (0..a.grid.num_nodes()).map(|p| w[p] * (0..d).map(|i| a.coeffs[p * d + i] * b.coeffs[p * d + i]).sum::<f64>()).sum()
}

#[test]
fn plus_components_are_orthogonal_and_the_exact_part_is_closed() {
    let md = SymplecticModel::new(2).unwrap();
    let g = make_grid(2, &[5, 4, 4, 4], 2).unwrap();
    let asm = Assembler::new(&g, &md).unwrap();
    let eta = random_field(&g, &md, 1, true, 2, 21).unwrap();
    let flavor: Flavor = "plus:D+".parse().unwrap();
    let r = hodge_decompose(&eta, flavor, &md).unwrap();
    let e2 = weighted_dot(&eta, &eta);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = weighted_dot(&r.components[i], &r.components[j]);
        assert!(c.abs() < 1e-10 * e2, "components {i},{j}: {c:e}");
    }
    let mut sum = r.components[0].clone();
    sum.axpy(1.0, &r.components[1]);
    sum.axpy(1.0, &r.components[2]);
    let diff = eta.sub(&sum);
    assert!(weighted_dot(&diff, &diff).sqrt() < 1e-10 * e2.sqrt());
    // the first range lies in ∂₊P⁰, which ∂₊ annihilates
    let dd = matvec(&asm.dplus(1), &r.components[1].coeffs);
    let scale = r.components[1].norm().max(1e-300);
    assert!(dd.iter().fold(0.0f64, |a, x| a.max(x.abs())) < 1e-8 * scale.max(1.0));
    assert!(r.components.iter().all(|c| c.check_primitive(&md)));
}

#[test]
fn poincare_solution_reproduces_the_right_hand_side() {
    let md = SymplecticModel::new(2).unwrap();
    let g = make_grid(2, &[5, 4, 4, 4], 2).unwrap();
    let asm = Assembler::new(&g, &md).unwrap();
    let alpha = random_field(&g, &md, 1, true, 2, 4).unwrap();
    let p = PoincareOp::DMinusStar.sparse(&asm, 2);
    let eta = FormField { grid: g.clone(), degree: 2, primitive_flag: true, coeffs: matvec(&p, &alpha.coeffs) };
    let r = poincare_solve(PoincareOp::DMinusStar, &eta, None, &md, PoincareOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Solved);
    let phi = r.solution.unwrap();
    assert_eq!(phi.degree, 1);
    assert!(phi.check_primitive(&md));
    let back = FormField { grid: g.clone(), degree: 2, primitive_flag: true, coeffs: matvec(&p, &phi.coeffs) };
    let res = eta.sub(&back);
    assert!(weighted_dot(&res, &res).sqrt() <= 1e-9 * weighted_dot(&eta, &eta).sqrt());
    // minimal norm: no larger than the manufactured preimage
    assert!(weighted_dot(&phi, &phi) <= weighted_dot(&alpha, &alpha) * (1.0 + 1e-9));
}
