use proptest::prelude::*;
use ricciwalk_core::frame::{self, FrameState, StepOptions};
use ricciwalk_core::linalg;
use ricciwalk_core::models::EvolvingMetricModel;
use ricciwalk_core::rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projected_steps_stay_orthonormal(seed in any::<u64>(), rho in 0.2f64..2.5, h in 1e-4f64..2e-2) {
        let model = EvolvingMetricModel::sphere(3, 1.0, 1.0).unwrap();
        let mut state = FrameState::at(&model, 0.0, model.point_at_distance(0.0, rho));
        let mut r = rng::path_rng(seed, 0);
        for _ in 0..20 {
            let dw = rng::brownian_increment(&mut r, 3, h);
            state = frame::step(&model, &state, h, &dw, &StepOptions::default()).unwrap();
            prop_assert!(frame::orthonormality_defect(&model, &state) <= 1e-9);
        }
    }

    #[test]
    fn gram_schmidt_orthonormalizes(entries in proptest::collection::vec(-2.0f64..2.0, 9), scale in 0.5f64..3.0) {
        let u = nalgebra::DMatrix::from_vec(3, 3, entries) + nalgebra::DMatrix::identity(3, 3) * 3.0;
        let gram = nalgebra::DMatrix::identity(3, 3) * scale;
        let q = linalg::gram_schmidt(&u, &gram);
        prop_assert!(linalg::orthonormality_defect(&q, &gram) <= 1e-12);
    }

    #[test]
    fn hyperbolic_radial_drift_is_coth(rho in 0.05f64..5.0) {
        let model = EvolvingMetricModel::hyperbolic(3, 1.0, 1.0).unwrap();
        let x = model.point_at_distance(0.0, rho);
        let jet = model.radial_rep(0.0, &x).unwrap();
        prop_assert!((jet.generator_drift() - 1.0 / rho.tanh()).abs() <= 1e-9 * (1.0 + 1.0 / rho));
    }
}
