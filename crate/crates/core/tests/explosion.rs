use ricciwalk_core::comparison;
use ricciwalk_core::explosion::{self, Classification, DriftSpec};
use ricciwalk_core::frame::{self, SimulationConfig, StartPoint};
use ricciwalk_core::models::EvolvingMetricModel;

#[test]
fn shrinking_hyperbolic_radius_is_dominated_by_the_comparison_diffusion() {
    let model = EvolvingMetricModel::homothetic_hyperbolic(2, 3.6, 4.0, -1.0).unwrap();
    let profile = comparison::constants(&model, comparison::default_window(&model, 10.0), 1.0).unwrap();
    let mut sim = SimulationConfig::new(1.0, 1e-2);
    sim.record_every = 0;
    let start = StartPoint::new(model.point_at_distance(0.0, 1.0));
    let rho = frame::ensemble_map(1000, |i| {
        let r = frame::simulate_path(&model, &start, &sim, None, 5, i);
        model.rho_rep(r.terminal.t, &r.terminal.x)
    });
    // The radial generator is ½Δρ + ∂ρ/∂t ≤ ½F̄(ρ).
    let half_fbar = DriftSpec::Scaled { factor: 0.5, inner: Box::new(explosion::comparison_drift(&profile, DriftSpec::Zero)) };
    let comparison = explosion::simulate_1d_ensemble(&half_fbar, 1.0, 1.0, 1e-2, 1000, 6, 1e6);
    let check = explosion::radial_domination(&rho, &comparison.terminals(), &[0.1, 0.25, 0.5, 0.75, 0.9]);
    assert!(check.holds, "{:?}", check.quantiles);
}

#[test]
fn comparison_drift_verdicts() {
    let model = EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap();
    let profile = comparison::constants(&model, comparison::default_window(&model, 0.0), 1.0).unwrap();
    let bounded = explosion::comparison_drift(&profile, DriftSpec::Constant { c: 1.0 });
    let v = explosion::feller_test(&bounded, 1.0, 1e6, 0.05).unwrap();
    assert_eq!(v.classification, Classification::DoesNotExplode);
    let quadratic = explosion::comparison_drift(&profile, DriftSpec::Linear { c: 1.0 });
    let v = explosion::feller_test(&quadratic, 1.0, 1e6, 0.05).unwrap();
    assert_eq!(v.classification, Classification::Explodes);
    assert!(v.tail_bound.is_finite() && v.feller_value.is_finite());
}

#[test]
fn manifold_exit_table_is_monotone_in_the_radius() {
    let model = EvolvingMetricModel::hyperbolic(2, 1.0, 1.0).unwrap();
    let radii = vec![1.5, 2.0, 3.0];
    let mut sim = SimulationConfig::new(1.0, 1e-2);
    sim.record_every = 0;
    sim.exit_radii = radii.clone();
    let start = StartPoint::new(model.point_at_distance(0.0, 1.0));
    let exit_times = frame::ensemble_map(500, |i| frame::simulate_path(&model, &start, &sim, None, 2, i).exit_times);
    let table = explosion::explosion_probability(&explosion::ExitEnsemble { radii, exit_times }, &[1.5, 2.0, 3.0], 1.0, 0.95).unwrap();
    assert!(table.rows.windows(2).all(|w| w[1].hits <= w[0].hits));
    assert!(table.rows[0].hits > table.rows[2].hits);
}
