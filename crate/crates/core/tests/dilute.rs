use approx::assert_relative_eq;
use bec3_core::dilute::*;
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #[test]
    fn rescaling_multiplies_energies_by_lambda_to_minus_five(
        rho in 1e-6f64..1e-1,
        a in 1e-2f64..1.0,
        b in 1e-1f64..1e2,
        lambda in 0.1f64..10.0,
    ) {
        let f = lambda.powi(-5);
        let e3 = e3b_leading(rho, b).unwrap();
        let e3s = e3b_leading(rho / lambda.powi(3), b * lambda.powi(4)).unwrap();
        prop_assert!((e3s.energy_density / (f * e3.energy_density) - 1.0).abs() < 1e-12);
        prop_assert!((e3s.diluteness / e3.diluteness - 1.0).abs() < 1e-12);

        let e2 = e2b_lhy(rho, a, 2).unwrap();
        let e2s = e2b_lhy(rho / lambda.powi(3), a * lambda, 2).unwrap();
        for (x, y) in e2.partial_sums.iter().zip(&e2s.partial_sums) {
            prop_assert!((y / (f * x) - 1.0).abs() < 1e-12);
        }
        prop_assert!((e2s.gas_parameter / e2.gas_parameter - 1.0).abs() < 1e-12);
    }

    #[test]
    fn renormalization_identity(n in 1.0f64..1e3, ell in 0.1f64..10.0, int_v in 1.0f64..1e2, frac in 0.0f64..1.0) {
        let bm = frac * int_v;
        let sum = mean_field_energy(n, ell, int_v).unwrap() + renormalization_shift(n, ell, bm, int_v).unwrap();
        let want = n.powi(3) * bm / (6.0 * ell.powi(4));
        prop_assert!((sum - want).abs() <= 1e-12 * want.abs().max(mean_field_energy(n, ell, int_v).unwrap()));
    }

    #[test]
    fn crossover_balances_both_leading_terms(a in 1e-3f64..1.0, b in 1e-2f64..1e4) {
        let rho = crossover_density(a, b).unwrap().density;
        let two = 4.0 * PI * a * rho * rho;
        let three = b * rho.powi(3) / 6.0;
        prop_assert!((two - three).abs() <= 1e-12 * two.max(three));
    }

    #[test]
    fn conjectured_scale_ratio_is_the_diluteness(rho in 1e-6f64..1.0, b in 1e-2f64..1e2, c in -5.0f64..5.0) {
        let q = ExpansionQuery { density: rho, b_m: b, c_tl: c, c_gp: 0.0, particles: None, gp_energy: None };
        let r = conjectured_orders(&q).unwrap();
        prop_assert!((r.scale_ratio / r.diluteness - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mean_field_in_density_variables() {
    let (rho, ell, int_v) = (0.3, 2.5, 7.0);
    let n = rho * ell * ell * ell;
    assert_relative_eq!(mean_field_energy(n, ell, int_v).unwrap(), rho.powi(3) * ell.powi(5) * int_v / 6.0, max_relative = 1e-12);
}

#[test]
fn zero_conjecture_constant_reduces_to_leading_order() {
    let q = ExpansionQuery { density: 0.02, b_m: 3.0, c_tl: 0.0, c_gp: 0.0, particles: None, gp_energy: None };
    let r = conjectured_orders(&q).unwrap();
    assert_relative_eq!(r.thermodynamic, e3b_leading(0.02, 3.0).unwrap().energy_density, max_relative = 1e-15);
}

#[test]
fn sweep_crossover_flag_switches_at_the_crossover() {
    let (a, b) = (0.1, 50.0);
    let star = crossover_density(a, b).unwrap().density;
    let rows = sweep(&[0.5 * star, 2.0 * star], Some(a), b).unwrap();
    assert_eq!(rows[0].three_body_dominant, Some(false));
    assert_eq!(rows[1].three_body_dominant, Some(true));
    assert!(sweep(&[0.1], None, b).unwrap()[0].e2b.is_empty());
}

#[test]
fn gp_length_rejects_zero_inputs() {
    assert!(gp_length(1.0, 0.0).is_err());
    assert!(gp_length(0.0, 1.0).is_err());
}
