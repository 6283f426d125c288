use approx::assert_relative_eq;
use bec3_core::bogoliubov::{build_hessian, excitation_spectrum, SpectrumMethod};
use bec3_core::gp::*;
use bec3_core::spectral::{Boundary, KineticScheme};

fn harmonic(n: usize, side: f64, b1: f64, b2: f64) -> GPProblem {
    let trap = Trap::Power { strength: 1.0, exponent: 2.0 };
    GPProblem::new(GridSpec::new(side, n, Boundary::Dirichlet), trap, b1, b2).unwrap()
}

#[test]
fn harmonic_ground_state_energy() {
    let sol = minimize(&harmonic(32, 12.0, 0.0, 0.0), &GPOptions::default()).unwrap();
    assert!(sol.converged);
    assert_relative_eq!(sol.energy.total, 3.0, max_relative = 1e-6);
    assert_relative_eq!(sol.mu, 3.0, max_relative = 1e-6);
}

#[test]
fn second_order_stencil_converges_to_the_same_energy() {
    let mut errs = Vec::new();
    for n in [16, 32] {
        let mut p = harmonic(n, 12.0, 0.0, 0.0);
        p.grid.kinetic = KineticScheme::SecondOrder;
        let sol = minimize(&p, &GPOptions::default()).unwrap();
        errs.push((sol.energy.total - 3.0).abs());
    }
    // second order: halving h cuts the error by about four
    assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
}

#[test]
fn restarts_agree_in_the_convex_case() {
    let opts = GPOptions { restarts: 5, seed: 11, ..GPOptions::default() };
    let sol = minimize(&harmonic(16, 10.0, 1.0, 10.0), &opts).unwrap();
    assert_eq!(sol.restarts.len(), 5);
    assert!(sol.energy_spread < 1e-10, "{}", sol.energy_spread);
    assert!(sol.field_spread < 1e-6, "{}", sol.field_spread);
}

#[test]
fn same_seed_same_field() {
    let p = harmonic(12, 8.0, -2.0, 5.0);
    let opts = GPOptions { restarts: 3, seed: 4, ..GPOptions::default() };
    let a = minimize(&p, &opts).unwrap();
    let b = minimize(&p, &opts).unwrap();
    assert_eq!(a.field, b.field);
    assert_eq!(a.energy.total.to_bits(), b.energy.total.to_bits());
}

#[test]
fn virial_identity_for_the_trapped_quintic_problem() {
    let sol = minimize(&harmonic(32, 10.0, 0.0, 100.0), &GPOptions::default()).unwrap();
    let e = sol.energy;
    assert!((2.0 * e.kinetic - 2.0 * e.trap + 6.0 * e.quintic).abs() <= 1e-3 * e.total);
}

#[test]
fn stability_bound_holds_along_the_descent() {
    for (b1, b2) in [(-1.0, 1.0), (-2.0, 0.5)] {
        let p = GPProblem::new(GridSpec::new(1.0, 12, Boundary::Periodic), Trap::None, b1, b2).unwrap();
        let sol = minimize(&p, &GPOptions::default()).unwrap();
        let bound = stability_bound(b1, b2).unwrap();
        assert!(sol.min_evaluated_energy >= bound);
        assert!(sol.energy.total > bound);
    }
}

#[test]
fn chemical_potential_requires_convergence() {
    let p = harmonic(8, 6.0, 0.0, 1.0);
    let sol = minimize(&p, &GPOptions { max_iterations: 1, ..GPOptions::default() }).unwrap();
    assert!(!sol.converged);
    assert!(chemical_potential(&sol, &p).is_err());
    assert!(build_hessian(&sol, &p).is_err());
}

#[test]
fn trapped_spectrum_is_positive_and_dense_matches_iterative() {
    let p = harmonic(8, 8.0, 0.0, 5.0);
    let sol = minimize(&p, &GPOptions::default()).unwrap();
    let h = build_hessian(&sol, &p).unwrap();
    assert_eq!(h.projector_rank(), h.len() - 1);
    let dense = excitation_spectrum(&h, 8, SpectrumMethod::Dense).unwrap();
    let iter = excitation_spectrum(&h, 8, SpectrumMethod::Iterative).unwrap();
    assert!(dense.eigenvalues[0] > 0.0);
    assert!(dense.momenta_squared.is_none());
    for (a, b) in dense.eigenvalues.iter().zip(&iter.eigenvalues) {
        assert_relative_eq!(a, b, max_relative = 1e-8);
    }
}
