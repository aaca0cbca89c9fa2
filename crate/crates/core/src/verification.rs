//! The acceptance criteria as runnable checks, shared by the test suite and
//! the `verify` command.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;

use crate::comparison::{self, ComparisonProfile};
use crate::drift::{self, VectorFieldSpec};
use crate::error::Result;
use crate::explosion::{self, Classification, DriftSpec, ExitEnsemble};
use crate::frame::{self, SimulationConfig, StartPoint};
use crate::models::{EvolvingMetricModel, Point};
use crate::radial::{self, RadialConfig};
use crate::rng;
use crate::stats;

/// Outcome of one criterion.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!("criterion {} [{}] {}", self.id, if self.passed { "PASS" } else { "FAIL" }, self.title)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Deterministic property checks and cheap one-dimensional simulations.
    Fast,
    /// Everything, including the manifold Monte Carlo criteria.
    Full,
}

impl Suite {
    pub fn parse(name: &str) -> Option<Suite> {
        match name {
            "fast" => Some(Suite::Fast),
            "full" => Some(Suite::Full),
            _ => None,
        }
    }

    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Fast => &[2, 6, 7],
            Suite::Full => &[1, 2, 3, 4, 5, 6, 7, 8, 9],
        }
    }
}

pub const TITLES: [&str; 9] = [
    "radial martingale quadratic variation has unit slope",
    "frame stays orthonormal; unprojected defect is first order",
    "manifold radial law matches the 1D radial diffusion",
    "decomposition residual and local-time estimators on the sphere",
    "m(t) is a supermartingale",
    "comparison geometry suite",
    "Feller catalog agrees with 1D simulation",
    "explosion table for the shrinking hyperbolic plane",
    "drifted radial law and Euclidean assumption margins",
];

pub fn run_suite(suite: Suite, seed: u64) -> Vec<CriterionReport> {
    suite.criteria().iter().map(|id| run_criterion(*id, seed)).collect()
}

pub fn run_criterion(id: u8, seed: u64) -> CriterionReport {
    let title = TITLES[(id - 1) as usize];
    let result = match id {
        1 => qv_slope(seed),
        2 => frame_orthonormality(seed),
        3 => radial_law(seed),
        4 => local_time(seed),
        5 => supermartingale(seed),
        6 => comparison_suite(seed),
        7 => feller_catalog(seed),
        8 => explosion_table(seed),
        9 => drifted_radial_law(seed),
        _ => Err(crate::error::Error::Config(format!("unknown criterion {id}"))),
    };
    match result {
        Ok((passed, details)) => CriterionReport { id, title, passed, details },
        Err(e) => CriterionReport { id, title, passed: false, details: vec![format!("error: {e}")] },
    }
}

type Outcome = Result<(bool, Vec<String>)>;

const PATHS: usize = 10_000;

fn terminal_rho(model: &EvolvingMetricModel, start: &StartPoint, sim: &SimulationConfig, drift: Option<&VectorFieldSpec>, paths: usize, seed: u64) -> Vec<f64> {
    frame::ensemble_map(paths, |i| {
        let r = frame::simulate_path(model, start, sim, drift, seed, i);
        model.rho_rep(r.terminal.t, &r.terminal.x)
    })
}

fn quiet_sim(horizon: f64, step: f64) -> SimulationConfig {
    let mut sim = SimulationConfig::new(horizon, step);
    sim.record_every = 0;
    sim
}

fn qv_slope(seed: u64) -> Outcome {
    let cases = [
        ("euclidean d=3", EvolvingMetricModel::euclidean(3, 1.0)),
        ("hyperbolic d=2", EvolvingMetricModel::hyperbolic(2, 1.0, 1.0)?),
    ];
    let cfg = RadialConfig { deltas: vec![], eps_hit: 0.0, occupation_eps: vec![], grid_every: 50, keep_series: false };
    let mut ok = true;
    let mut details = Vec::new();
    for (name, model) in cases {
        let start = StartPoint::new(model.point_at_distance(0.0, 2.0));
        let e = radial::radial_ensemble(&model, &start, &quiet_sim(1.0, 1e-3), None, None, &cfg, PATHS, seed);
        let qv = radial::qv_martingale(&e);
        let pass = (0.98..=1.02).contains(&qv.slope) && e.dropped == 0;
        ok &= pass;
        details.push(format!(
            "{name}: slope {:.6} (frame martingale {:.6}), {} paths, dropped {}",
            qv.slope,
            qv.frame_slope,
            e.summaries.len(),
            e.dropped
        ));
    }
    Ok((ok, details))
}

fn frame_orthonormality(seed: u64) -> Outcome {
    let model = EvolvingMetricModel::sphere(2, 1.0, 1.0)?;
    let start = StartPoint::new(model.point_at_distance(0.0, 1.0));
    let mut sim = SimulationConfig::new(1.0, 1e-3);
    let worst = frame::ensemble_map(50, |i| {
        let r = frame::simulate_path(&model, &start, &sim, None, seed, i);
        r.states.iter().map(|s| frame::orthonormality_defect(&model, s)).fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);
    let mut ok = worst <= 1e-9;
    let mut details = vec![format!("projected: worst defect over 50 paths × 1000 steps {worst:.3e}")];
    sim.project = false;
    sim.record_every = 0;
    let mut defects = Vec::new();
    for h in [4e-3, 2e-3, 1e-3] {
        sim.step = h;
        let d = frame::ensemble_map(400, |i| {
            let r = frame::simulate_path(&model, &start, &sim, None, seed, i);
            frame::orthonormality_defect(&model, &r.terminal)
        });
        defects.push((h, stats::mean_and_se(&d).0));
    }
    for w in defects.windows(2) {
        let ratio = w[1].1 / w[0].1;
        ok &= (0.4..=0.6).contains(&ratio);
        details.push(format!("unprojected: defect {:.4e} at h={} → {:.4e} at h={}, ratio {ratio:.4}", w[0].1, w[0].0, w[1].1, w[1].0));
    }
    Ok((ok, details))
}

fn radial_law(seed: u64) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for dim in [2, 3] {
        let model = EvolvingMetricModel::hyperbolic(dim, 1.0, 1.0)?;
        let start = StartPoint::new(model.point_at_distance(0.0, 2.0));
        let rho = terminal_rho(&model, &start, &quiet_sim(1.0, 1e-3), None, PATHS, seed);
        let oracle = explosion::simulate_1d_ensemble(&DriftSpec::from_model(&model)?, 2.0, 1.0, 1e-3, PATHS, seed ^ 0x5eed, 1e6);
        let (d, p) = stats::ks_two_sample(&rho, &oracle.terminals());
        ok &= p > 0.01;
        details.push(format!("hyperbolic d={dim}: KS D = {d:.5}, p = {p:.4}"));
    }
    Ok((ok, details))
}

fn local_time(seed: u64) -> Outcome {
    // Started next to the antipode so the short run sees many excursions
    // while ε_hit = 2√(2h) stays well below the finest δ.
    let model = EvolvingMetricModel::sphere(2, 1.0, 1.0)?;
    let rho0 = PI - 0.05;
    let profile = comparison::constants(&model, comparison::default_window(&model, 0.0), rho0)?;
    let h = 1e-5;
    let cfg = RadialConfig {
        deltas: profile.delta_ladder().to_vec(),
        eps_hit: radial::default_eps_hit(h, model.dim),
        occupation_eps: vec![],
        grid_every: 100,
        keep_series: false,
    };
    let start = StartPoint::new(model.point_at_distance(0.0, rho0));
    let e = radial::radial_ensemble(&model, &start, &quiet_sim(0.05, h), None, Some(&profile), &cfg, 1000, seed);
    let table = radial::local_time_table(&e);
    let mut details = vec![format!("δ₁ = {:.6}, ε_hit = {:.4e}, h = {h}, T = 0.05, {} paths", profile.delta1, cfg.eps_hit, e.summaries.len())];
    for row in &table {
        details.push(format!(
            "δ = {:.5}: residual {:.5} ± {:.5}, L(deficit) {:.5}, L(downcrossing) {:.5}, excursions/path {:.3}",
            row.delta, row.residual.0, row.residual.1, row.deficit.0, row.downcrossing.0, row.excursions
        ));
    }
    let monotone = table.windows(2).all(|w| w[1].abs_residual.0 < w[0].abs_residual.0);
    let finest = table.last().expect("three deltas");
    let rel = (finest.deficit.0 - finest.downcrossing.0).abs() / finest.downcrossing.0.abs().max(f64::MIN_POSITIVE);
    details.push(format!("residual monotone: {monotone}; estimator gap at finest δ {:.2}%", 100.0 * rel));
    Ok((monotone && rel <= 0.2 && e.dropped == 0, details))
}

fn supermartingale(seed: u64) -> Outcome {
    let cases = [
        ("euclidean d=3", EvolvingMetricModel::euclidean(3, 1.0), 1.0),
        ("sphere d=2", EvolvingMetricModel::sphere(2, 1.0, 1.0)?, 1.0),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (name, model, rho0) in cases {
        let profile = comparison::constants(&model, comparison::default_window(&model, 10.0), rho0)?;
        let cfg = RadialConfig { deltas: vec![], eps_hit: 0.0, occupation_eps: vec![], grid_every: 50, keep_series: false };
        let start = StartPoint::new(model.point_at_distance(0.0, rho0));
        let e = radial::radial_ensemble(&model, &start, &quiet_sim(1.0, 1e-3), None, Some(&profile), &cfg, PATHS, seed);
        let m = radial::supermartingale_check(&e);
        let pass = m.non_increasing_within(m.familywise_z(0.01));
        ok &= pass;
        details.push(format!(
            "{name}: m(T) = {:.5} ± {:.5}, largest increment {:.2} s.e. over {} intervals",
            m.mean.last().unwrap_or(&0.0),
            m.std_error.last().unwrap_or(&0.0),
            m.worst_z,
            m.increments.len()
        ));
    }
    Ok((ok, details))
}

/// Two-dimensional models on which `F ≤ F̄` and the drift bound are checked.
pub fn comparison_catalog() -> Result<Vec<(&'static str, EvolvingMetricModel, ComparisonProfile)>> {
    let euclid = EvolvingMetricModel::euclidean(2, 1.0);
    let sphere = EvolvingMetricModel::sphere(2, 1.0, 1.0)?;
    let shrinking = EvolvingMetricModel::homothetic_hyperbolic(2, 3.6, 4.0, -1.0)?;
    let mut out = Vec::new();
    for (name, m) in [("euclidean", euclid), ("sphere", sphere), ("shrinking hyperbolic", shrinking)] {
        let p = comparison::constants(&m, comparison::default_window(&m, 10.0), 1.0)?;
        out.push((name, m, p));
    }
    Ok(out)
}

/// A random smooth Ricci profile `Σ aⱼ cos(ωⱼ s + φⱼ)` with `Σ|aⱼ| ≤ 2`.
pub fn random_ricci_profile<R: Rng>(rng: &mut R) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    let terms: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.random_range(-0.5..0.5), rng.random_range(0.0..6.0), rng.random_range(0.0..2.0 * PI)))
        .collect();
    move |s| terms.iter().map(|(a, w, phi)| a * (w * s + phi).cos()).sum()
}

fn comparison_suite(seed: u64) -> Outcome {
    let mut details = Vec::new();
    // Jacobi fields of constant curvature.
    let mut jacobi_err: f64 = 0.0;
    for dim in [2usize, 3, 4] {
        let d1 = (dim - 1) as f64;
        for k in [0.5, 1.0, 2.0] {
            let hyp = comparison::solve_jacobi(move |_| -d1 * k * k, dim, 2.0, 1e-3)?;
            for (s, g) in hyp.s.iter().zip(&hyp.g) {
                jacobi_err = jacobi_err.max((g - (k * s).sinh() / k).abs() / (1.0 + (k * s).sinh() / k));
            }
            let b = 0.9 * PI / k;
            let sph = comparison::solve_jacobi(move |_| d1 * k * k, dim, b, 1e-3)?;
            for (s, g) in sph.s.iter().zip(&sph.g) {
                jacobi_err = jacobi_err.max((g - (k * s).sin() / k).abs());
            }
        }
    }
    let mut ok = jacobi_err <= 1e-8;
    details.push(format!("Jacobi vs sinh/sin: worst error {jacobi_err:.3e}"));

    // F' identity and monotonicity on random profiles.
    let mut rng = rng::path_rng(seed, 6);
    let mut identity_err: f64 = 0.0;
    let mut worst_rise = f64::NEG_INFINITY;
    for n in 0..100 {
        let dim = 2 + n % 3;
        let sol = comparison::solve_jacobi(random_ricci_profile(&mut rng), dim, 1.0, 1e-3)?;
        let values: Vec<f64> = sol.s.iter().skip(1).map(|r| sol.index_f(*r)).collect::<Result<_>>()?;
        worst_rise = values.windows(2).map(|w| w[1] - w[0]).fold(worst_rise, f64::max);
        for r in [0.2, 0.5, 0.8] {
            // Five-point stencil, truncation O(e⁴).
            let e = 1e-3;
            let f = |x: f64| sol.index_f(x);
            let fd = (f(r - 2.0 * e)? - 8.0 * f(r - e)? + 8.0 * f(r + e)? - f(r + 2.0 * e)?) / (12.0 * e);
            identity_err = identity_err.max((fd - sol.index_f_derivative(r)?).abs());
        }
    }
    ok &= identity_err <= 1e-6 && worst_rise <= 0.0;
    details.push(format!("F′ identity: worst error {identity_err:.3e}"));
    details.push(format!("F monotone on 100 random profiles: largest step change {worst_rise:.3e}"));

    for (name, model, profile) in comparison_catalog()? {
        let mut worst_gap = f64::NEG_INFINITY;
        for t in comparison::grid(8, 0.0, model.horizon) {
            let sol = comparison::radial_jacobi(&model, &profile, t)?;
            for j in 1..=64 {
                let r = sol.end() * j as f64 / 64.0;
                worst_gap = worst_gap.max(sol.index_f(r)? - profile.fbar(r));
            }
        }
        let samples = comparison::radial_samples(&model, &profile, 64, 64);
        let bound = comparison::drift_bound_check(&model, &profile, &samples)?;
        let mut super_ricci = true;
        for (t, x) in &samples {
            super_ricci &= model.check_super_ricci(*t, x)?.holds;
        }
        ok &= worst_gap <= 1e-9 && bound.worst_margin >= 0.0 && super_ricci;
        details.push(format!(
            "{name}: max(F − F̄) = {worst_gap:.3e}, drift-bound margin {:.4e} at (t, ρ) = ({:.3}, {:.3}), super-Ricci {}",
            bound.worst_margin, bound.worst_t, bound.worst_rho, super_ricci
        ));
    }
    Ok((ok, details))
}

fn feller_catalog(seed: u64) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    let (y0, horizon, h) = (2.0, 5.0, 1e-3);
    for (i, (name, drift)) in explosion::feller_catalog(3).into_iter().enumerate() {
        let verdict = explosion::feller_test(&drift, 1.0, 1e6, 0.05)?;
        let sim = explosion::simulate_1d_ensemble(&drift, y0, horizon, h, 2000, seed.wrapping_add(i as u64), explosion::default_y_max(y0));
        let frac = sim.explosion_fraction();
        let agree = match verdict.classification {
            Classification::Explodes => frac >= 0.99,
            Classification::DoesNotExplode => frac <= 0.01,
            Classification::Inconclusive => false,
        };
        ok &= agree;
        details.push(format!(
            "{name}: Feller {} (tail exponent {:.3}), simulated explosion fraction {frac:.4}",
            verdict.classification.label(),
            verdict.tail_exponent
        ));
    }
    let (_, _, profile) = comparison_catalog()?.remove(1);
    let fbar = explosion::comparison_drift(&profile, DriftSpec::Zero);
    let v = explosion::feller_test(&fbar, 1.0, 1e6, 0.05)?;
    let sq = explosion::feller_test(&DriftSpec::Power { c: 1.0, p: 2.0 }, 1.0, 1e6, 0.05)?;
    ok &= v.classification == Classification::DoesNotExplode && sq.classification == Classification::Explodes;
    details.push(format!("F̄ (sphere profile): {}; y²: {}", v.classification.label(), sq.classification.label()));
    Ok((ok, details))
}

fn explosion_table(seed: u64) -> Outcome {
    let (dim, a0) = (2usize, 4.0);
    let rate = -((dim - 1) as f64);
    let horizon = 0.9 * a0 / (dim - 1) as f64;
    let model = EvolvingMetricModel::homothetic_hyperbolic(dim, horizon, a0, rate)?;
    let ladder = [5.0, 10.0, 20.0];
    let mut sim = quiet_sim(horizon, 1e-3);
    sim.exit_radii = ladder.to_vec();
    sim.stop_at_last_exit = true;
    let start = StartPoint::new(model.point_at_distance(0.0, 1.0));
    let exit_times = frame::ensemble_map(PATHS, |i| frame::simulate_path(&model, &start, &sim, None, seed, i).exit_times);
    let table = explosion::explosion_probability(&ExitEnsemble { radii: ladder.to_vec(), exit_times }, &ladder, horizon, 0.95)?;
    let mut details: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("R = {}: {} / {} hits, estimate {:.4e}, 95% Wilson [{:.4e}, {:.4e}]", r.radius, r.hits, r.paths, r.estimate, r.lower, r.upper))
        .collect();
    let non_explosion = table.non_explosion(1e-2);
    let proxy = explosion::feller_test(&DriftSpec::Power { c: 1.0, p: 2.0 }, 1.0, 1e6, 0.05)?;
    let proxy_sim = explosion::simulate_1d_ensemble(&DriftSpec::Power { c: 1.0, p: 2.0 }, 2.0, 5.0, 1e-3, 1000, seed ^ 8, 2e6);
    let proxy_explodes = proxy.classification == Classification::Explodes && proxy_sim.explosion_fraction() >= 0.99;
    details.push(format!("non-explosion verdict: {non_explosion}"));
    details.push(format!(
        "1D proxy y²: Feller {}, simulated explosion fraction {:.4}",
        proxy.classification.label(),
        proxy_sim.explosion_fraction()
    ));
    Ok((non_explosion && proxy_explodes, details))
}

fn drifted_radial_law(seed: u64) -> Outcome {
    let c = 0.5;
    let model = EvolvingMetricModel::hyperbolic(2, 1.0, 1.0)?;
    let z = VectorFieldSpec::Radial { c };
    let start = StartPoint::new(model.point_at_distance(0.0, 2.0));
    let rho = terminal_rho(&model, &start, &quiet_sim(1.0, 1e-3), Some(&z), PATHS, seed);
    let shifted = DriftSpec::Sum(vec![DriftSpec::from_model(&model)?, DriftSpec::Constant { c }]);
    let oracle = explosion::simulate_1d_ensemble(&shifted, 2.0, 1.0, 1e-3, PATHS, seed ^ 9, 1e6);
    let (d, p) = stats::ks_two_sample(&rho, &oracle.terminals());
    let mut details = vec![format!("Z = {c}∇ρ on the hyperbolic plane: KS D = {d:.5}, p = {p:.4}")];

    let euclid = EvolvingMetricModel::euclidean(2, 1.0);
    let grid: Vec<(f64, Point)> = comparison::grid(5, 0.0, 1.0)
        .into_iter()
        .flat_map(|t| [[0.3, -0.2], [1.0, 2.0], [-3.0, 0.5]].map(|v| (t, Point::from_column_slice(&v))))
        .collect();
    let id = DMatrix::identity(2, 2);
    let cases = [
        (VectorFieldSpec::Zero, 0.0, 0.0),
        (VectorFieldSpec::Linear { matrix: id.clone() }, 1.0, 0.0),
        (VectorFieldSpec::Linear { matrix: id * 2.0 }, 1.0, -1.0),
    ];
    let mut margins_ok = true;
    let mut margins = Vec::new();
    for (spec, b, want) in cases {
        let check = drift::check_assumption(&euclid, &spec, &move |_| b, &grid)?;
        margins_ok &= (check.margin - want).abs() <= 1e-12;
        margins.push(format!("{:.3}", check.margin));
    }
    details.push(format!("Euclidean assumption margins: {}", margins.join(", ")));
    Ok((p > 0.01 && margins_ok, details))
}
