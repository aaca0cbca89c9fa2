use ricciwalk_core::comparison;
use ricciwalk_core::frame::{SimulationConfig, StartPoint};
use ricciwalk_core::models::EvolvingMetricModel;
use ricciwalk_core::radial::{self, RadialConfig};
use ricciwalk_core::stats;

fn quiet(horizon: f64, step: f64) -> SimulationConfig {
    let mut sim = SimulationConfig::new(horizon, step);
    sim.record_every = 0;
    sim
}

#[test]
fn sphere_local_time_is_positive_and_occupation_shrinks() {
    let model = EvolvingMetricModel::sphere(2, 2.0, 1.0).unwrap();
    let profile = comparison::constants(&model, comparison::default_window(&model, 0.0), 1.0).unwrap();
    let h = 1e-3;
    let cfg = RadialConfig {
        deltas: profile.delta_ladder().to_vec(),
        eps_hit: radial::default_eps_hit(h, 2),
        occupation_eps: vec![0.4, 0.2, 0.1, 0.05],
        grid_every: 100,
        keep_series: false,
    };
    let start = StartPoint::new(model.point_at_distance(0.0, 1.0));
    let e = radial::radial_ensemble(&model, &start, &quiet(2.0, h), None, Some(&profile), &cfg, 2000, 17);
    assert_eq!(e.dropped, 0);
    let table = radial::local_time_table(&e);
    let finest = table.last().unwrap();
    let z = stats::normal_quantile(0.99);
    assert!(finest.deficit.0 - z * finest.deficit.1 > 0.0, "{finest:?}");
    let occ = radial::occupation_time_cutlocus(&e);
    assert!(occ.windows(2).all(|w| w[1].1 <= w[0].1), "{occ:?}");
    assert!(occ[0].1 > 0.0);
    let curves = radial::mean_curves(&e);
    assert_eq!(curves.len(), e.grid.len());
    assert!(curves.windows(2).all(|w| w[1][4] >= w[0][4]));
}

#[test]
fn euclidean_ensemble_never_visits_a_cut_locus() {
    let model = EvolvingMetricModel::euclidean(2, 1.0);
    let profile = comparison::constants(&model, comparison::default_window(&model, 10.0), 1.0).unwrap();
    let cfg = RadialConfig {
        deltas: profile.delta_ladder().to_vec(),
        eps_hit: radial::default_eps_hit(1e-2, 2),
        occupation_eps: vec![0.5, 0.1],
        grid_every: 10,
        keep_series: false,
    };
    let start = StartPoint::new(model.point_at_distance(0.0, 1.0));
    let e = radial::radial_ensemble(&model, &start, &quiet(1.0, 1e-2), None, Some(&profile), &cfg, 200, 3);
    for (_, mean, _) in radial::occupation_time_cutlocus(&e) {
        assert_eq!(mean, 0.0);
    }
    for row in radial::local_time_table(&e) {
        assert_eq!(row.deficit.0, 0.0);
        assert_eq!(row.excursions, 0.0);
    }
}

#[test]
fn ensembles_are_reproducible() {
    let model = EvolvingMetricModel::hyperbolic(2, 0.5, 1.0).unwrap();
    let cfg = RadialConfig { deltas: vec![], eps_hit: 0.0, occupation_eps: vec![], grid_every: 5, keep_series: false };
    let start = StartPoint::new(model.point_at_distance(0.0, 1.0));
    let run = || {
        let e = radial::radial_ensemble(&model, &start, &quiet(0.5, 1e-2), None, None, &cfg, 64, 9);
        radial::mean_curves(&e)
    };
    assert_eq!(run(), run());
}
