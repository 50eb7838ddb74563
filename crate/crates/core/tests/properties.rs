use std::f64::consts::PI;

use proptest::prelude::*;

use torus_spectra::logdet::logdet_dt;
use torus_spectra::quadrature::QuadratureConfig;
use torus_spectra::spectrum::{assemble_dt_laplacian, dt_spectrum_closed, oracle_spectrum};
use torus_spectra::theta::{theta_dt, Component, ThetaForm};
use torus_spectra::{DiscreteTorus, IntMatrix, TorsionFamily};

fn upper_triangular() -> impl Strategy<Value = IntMatrix> {
    (2i64..7, 2i64..7, -4i64..5)
        .prop_map(|(a, b, c)| IntMatrix::from_rows(&[vec![a, c], vec![0, b]]).unwrap())
}

fn phase_rows(n: usize, d: usize) -> impl Strategy<Value = TorsionFamily> {
    prop::collection::vec(prop::collection::vec(-PI..PI, n), d)
        .prop_map(|rows| TorsionFamily::from_phases(&rows).unwrap())
}

fn sorted(dt: &DiscreteTorus) -> Vec<f64> {
    dt_spectrum_closed::<f64>(dt).sorted_values()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_matches_dense_solver(m in upper_triangular(), torsion in phase_rows(2, 2)) {
        let dt = DiscreteTorus::new(m, torsion).unwrap();
        let oracle = oracle_spectrum(&assemble_dt_laplacian::<f64>(&dt).unwrap()).unwrap().sorted_values();
        let closed = sorted(&dt);
        prop_assert_eq!(closed.len(), oracle.len());
        for (a, b) in closed.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    // Diagonal entries at least 2 rule out self-loops, so tr L = 2 n d N.
    #[test]
    fn trace_and_range(m in upper_triangular(), torsion in phase_rows(2, 1)) {
        let dt = DiscreteTorus::new(m, torsion).unwrap();
        let values = sorted(&dt);
        let sum: f64 = values.iter().sum();
        prop_assert!((sum - 4.0 * dt.vertices() as f64).abs() < 1e-9);
        prop_assert!(values.iter().all(|&l| (-1e-12..=8.0 + 1e-12).contains(&l)));
    }

    // M and M U generate the same lattice for unimodular U.
    #[test]
    fn spectrum_depends_only_on_lattice(m in upper_triangular(), k in -3i64..4, omega in -PI..PI) {
        let u = IntMatrix::from_rows(&[vec![1, k], vec![0, 1]]).unwrap();
        let mu = m.mul(&u).unwrap();
        // Torsion along the new basis: σ'_2 = σ_1^k σ_2, i.e. ω'_2 = k ω_1 + ω_2.
        let t1 = TorsionFamily::from_phases(&[vec![omega, 0.4]]).unwrap();
        let wrapped = (k as f64 * omega + 0.4 + PI).rem_euclid(2.0 * PI) - PI;
        let t2 = TorsionFamily::from_phases(&[vec![omega, wrapped]]).unwrap();
        let a = sorted(&DiscreteTorus::new(m, t1).unwrap());
        let b = sorted(&DiscreteTorus::new(mu, t2).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn theta_forms_agree(m in upper_triangular(), torsion in phase_rows(2, 1), t in 0.05f64..20.0) {
        let dt = DiscreteTorus::new(m, torsion).unwrap();
        let s = theta_dt(&dt, Component::Total, t, ThetaForm::Spectral, 1e-14).unwrap();
        let d = theta_dt(&dt, Component::Total, t, ThetaForm::DualSum, 1e-14).unwrap();
        prop_assert!(s.gap(&d) < 1e-9 * s.value.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cycle_logdet_reconstruction(n in 3i64..40, omega in 0.2f64..PI) {
        let dt = DiscreteTorus::new(IntMatrix::scalar(n), TorsionFamily::from_phases(&[vec![omega]]).unwrap()).unwrap();
        let r = logdet_dt(&dt, &QuadratureConfig::default(), None).unwrap();
        // Independent product form: det = 2 - 2 cos ω.
        prop_assert!((r.direct_sum - (2.0 - 2.0 * omega.cos()).ln()).abs() < 1e-10);
        prop_assert!((r.reconstructed - r.direct_sum).abs() < 1e-5);
    }
}
