use kalman_mi::instances::{random_gain, random_joint, random_spd, random_update_instance};
use kalman_mi::linops::{is_spd, log_det_spd, Cholesky};
use kalman_mi::nalgebra::DVector;
use kalman_mi::rng::GaussianStream;
use kalman_mi::{mutual_information_joint, schur_det_check, update_joseph, SymMatrix};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_det_scales_with_dimension(seed in any::<u64>(), n in 1usize..8, c in 1e-3f64..1e3) {
        let m = random_spd(&mut GaussianStream::new(seed, 0), n, 0.05);
        let lhs = log_det_spd(&m.scale(c)).unwrap();
        let rhs = n as f64 * c.ln() + log_det_spd(&m).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn factor_reconstructs(seed in any::<u64>(), n in 1usize..8) {
        let m = random_spd(&mut GaussianStream::new(seed, 0), n, 0.01);
        let l = Cholesky::factor(&m).unwrap();
        let back = l.l() * l.l().transpose();
        prop_assert!((back - m.as_matrix()).amax() < 1e-12 * m.as_matrix().amax().max(1.0));
    }

    #[test]
    fn joint_mi_nonnegative_and_schur_consistent(seed in any::<u64>()) {
        let j = random_joint(&mut GaussianStream::new(seed, 0), 4);
        prop_assert!(mutual_information_joint(&j).unwrap() >= -1e-12);
        let (a, b, c) = schur_det_check(&j).unwrap();
        prop_assert!((a - b).abs() < 1e-10 && (a - c).abs() < 1e-10);
    }

    #[test]
    fn joseph_posterior_pd_for_any_gain(seed in any::<u64>(), scale in 0.0f64..20.0) {
        let mut g = GaussianStream::new(seed, 0);
        let inst = random_update_instance(&mut g);
        let k = random_gain(&mut g, inst.model.n, inst.model.m, scale);
        let z = DVector::from_vec(g.normals(inst.model.m));
        let rec = update_joseph(&inst.prior, &z, &k, &inst.model).unwrap();
        let cov = rec.posterior.cov();
        prop_assert!(is_spd(cov));
        prop_assert_eq!(cov.as_matrix(), &cov.as_matrix().transpose());
    }

    #[test]
    fn symmetrize_is_exact(seed in any::<u64>(), n in 1usize..6) {
        let mut g = GaussianStream::new(seed, 0);
        let raw = kalman_mi::instances::random_matrix(&mut g, n, n);
        let s = SymMatrix::symmetrize(raw);
        prop_assert_eq!(s.as_matrix(), &s.as_matrix().transpose());
    }
}
