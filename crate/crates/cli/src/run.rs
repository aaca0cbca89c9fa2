//! The `run` command: ensembles, analyses and artifacts.

use anyhow::Context;

use ricciwalk_core::comparison::{self, ComparisonProfile};
use ricciwalk_core::explosion::{self, DriftSpec, ExitEnsemble};
use ricciwalk_core::frame::{self, SimulationConfig, StartPoint};
use ricciwalk_core::radial::{self, RadialConfig, RadialEnsemble};
use ricciwalk_core::{drift, stats, Error};

use crate::config::{Analysis, Experiment, ValidationError};
use crate::output::{float, Artifacts, Report, Table};

/// Exit status of a completed run.
pub enum Outcome {
    Ok,
    ContractViolation(Vec<String>),
}

pub const CONVENTIONS: [(&str, &str); 4] = [
    ("generator", "½Δ_{g(t)} + Z; the radial martingale has unit quadratic variation"),
    ("barrier", "Δρ + 2∂ρ/∂t ≤ F̄(ρ), so the radial drift ½Δρ + ∂ρ/∂t is at most ½F̄(ρ)"),
    ("fbar_factor", "F̄(s) = k₁coth(k₁(s∧r₁)) + k₁(s∧r₁) carries no (d−1) factor; V(r) = (d−1)/2·√K coth(√K(r∧i_M/3)) + 2C₁"),
    ("one_dimensional", "dy = 𝐛(y)dt + dW with 𝐛 = F̄ + ∫₀^y b; Feller test at +∞ with y_ref = 1"),
];

fn validation(e: Error) -> anyhow::Error {
    match e {
        Error::Config(_) | Error::WindowTooSmall { .. } | Error::Ladder { .. } => ValidationError(e.to_string()).into(),
        other => other.into(),
    }
}

pub fn profile(exp: &Experiment) -> anyhow::Result<ComparisonProfile> {
    comparison::constants(&exp.model, exp.window(), exp.config.run.start_radius).map_err(validation)
}

fn sim_config(exp: &Experiment) -> SimulationConfig {
    let mut sim = SimulationConfig::new(exp.horizon, exp.config.run.step);
    sim.record_every = 0;
    sim
}

fn start(exp: &Experiment) -> StartPoint {
    StartPoint::new(exp.model.point_at_distance(0.0, exp.config.run.start_radius))
}

pub fn run(exp: &Experiment) -> anyhow::Result<(Outcome, String)> {
    let cfg = &exp.config;
    let mut analyses = cfg.analyses.clone();
    analyses.sort();
    analyses.dedup();
    let profile = profile(exp)?;
    let mut artifacts = Artifacts::default();
    let mut report = Report::default();
    let mut violations = Vec::new();

    report.section("scenario");
    report.kv("name", &cfg.scenario);
    report.kv("model", cfg.model.label());
    report.kv("dimension", exp.model.dim);
    report.kv("horizon", float(exp.horizon));
    report.kv("step", float(cfg.run.step));
    report.kv("paths", cfg.run.paths);
    report.kv("seed", cfg.run.seed);
    report.kv("start_radius", float(cfg.run.start_radius));
    report.kv("analyses", analyses.iter().map(|a| a.name()).collect::<Vec<_>>().join(", "));
    report.section("conventions");
    for (k, v) in CONVENTIONS {
        report.kv(k, v);
    }
    report.section("constants");
    for (k, v) in profile.report_lines() {
        report.kv(&k, v);
    }

    let needs_radial = analyses.iter().any(|a| matches!(a, Analysis::Qv | Analysis::Supermartingale | Analysis::LocalTime));
    let ensemble = needs_radial.then(|| radial_ensemble(exp, &profile, analyses.contains(&Analysis::LocalTime))).transpose()?;
    if let Some(e) = &ensemble {
        let mut t = Table::new(&["t", "mean_rho", "mean_drift_integral", "mean_qv", "mean_local_time"]);
        for row in radial::mean_curves(e) {
            t.row(row.iter().map(|v| (*v).into()).collect());
        }
        artifacts.add("plotdata/radial_means.csv", &t);
        report.section("ensemble");
        report.kv("completed_paths", e.summaries.len());
        report.kv("dropped_paths", e.dropped);
    }

    for analysis in &analyses {
        report.section(analysis.name());
        match analysis {
            Analysis::Constants => constants(exp, &profile, &mut artifacts, &mut report)?,
            Analysis::Qv => qv(ensemble.as_ref().expect("radial ensemble"), &mut artifacts, &mut report, &mut violations),
            Analysis::DriftCheck => drift_check(exp, &profile, &mut artifacts, &mut report, &mut violations)?,
            Analysis::Supermartingale => {
                supermartingale(ensemble.as_ref().expect("radial ensemble"), &mut artifacts, &mut report, &mut violations)
            }
            Analysis::LocalTime => local_time(ensemble.as_ref().expect("radial ensemble"), &mut artifacts, &mut report),
            Analysis::Explosion => explosion_table(exp, &profile, &mut artifacts, &mut report, &mut violations)?,
            Analysis::Feller => feller(exp, &profile, &mut artifacts, &mut report)?,
            Analysis::AssumptionCheck => assumption(exp, &profile, &mut artifacts, &mut report)?,
        }
    }

    report.section("verdict");
    report.kv("contract_violations", violations.len());
    for v in &violations {
        report.kv("violation", v);
    }
    report.section("artifacts");
    report.kv("files", artifacts.names().cloned().collect::<Vec<_>>().join(", "));
    report.kv("run_hash", artifacts.run_hash(&exp.canonical));
    let text = report.finish();

    std::fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
    artifacts.write(&cfg.output)?;
    std::fs::write(cfg.output.join("report.txt"), &text).context("writing report.txt")?;
    let outcome = if violations.is_empty() { Outcome::Ok } else { Outcome::ContractViolation(violations) };
    Ok((outcome, text))
}

fn radial_ensemble(exp: &Experiment, profile: &ComparisonProfile, local_time: bool) -> anyhow::Result<RadialEnsemble> {
    let run = &exp.config.run;
    let eps_hit = radial::default_eps_hit(run.step, exp.model.dim);
    let deltas = if local_time {
        let deltas = run.delta_ladder.clone().unwrap_or_else(|| profile.delta_ladder().to_vec());
        if let Some(bad) = deltas.iter().find(|d| !(**d > 0.0 && **d < profile.delta1)) {
            return Err(ValidationError(format!("δ = {bad} must lie in (0, δ₁ = {})", profile.delta1)).into());
        }
        deltas
    } else {
        Vec::new()
    };
    let occupation_eps = if exp.model.has_cut_locus() {
        run.occupation_ladder.clone().unwrap_or_else(|| [8.0, 4.0, 2.0, 1.0].map(|m| m * eps_hit).to_vec())
    } else {
        Vec::new()
    };
    let cfg = RadialConfig { deltas, eps_hit, occupation_eps, grid_every: run.record_every, keep_series: false };
    Ok(radial::radial_ensemble(
        &exp.model,
        &start(exp),
        &sim_config(exp),
        exp.drift.as_ref(),
        Some(profile),
        &cfg,
        run.paths,
        run.seed,
    ))
}

fn constants(exp: &Experiment, profile: &ComparisonProfile, artifacts: &mut Artifacts, report: &mut Report) -> anyhow::Result<()> {
    let mut t = Table::new(&["constant", "value"]);
    for (k, v) in profile.report_lines() {
        t.row(vec![k.into(), v.into()]);
    }
    artifacts.add("constants.csv", &t);
    report.kv("csv", "constants.csv");
    let sol = comparison::radial_jacobi(&exp.model, profile, 0.0).map_err(validation)?;
    let mut j = Table::new(&["s", "G", "dG", "F", "Fbar"]);
    let stride = (sol.s.len() / 256).max(1);
    for i in (stride..sol.s.len()).step_by(stride) {
        let s = sol.s[i];
        j.row(vec![s.into(), sol.g[i].into(), sol.dg[i].into(), sol.index_f(s)?.into(), profile.fbar(s).into()]);
    }
    artifacts.add("plotdata/jacobi.csv", &j);
    Ok(())
}

fn qv(e: &RadialEnsemble, artifacts: &mut Artifacts, report: &mut Report, violations: &mut Vec<String>) {
    let curve = radial::qv_martingale(e);
    let mut t = Table::new(&["t", "mean_qv", "mean_frame_qv"]);
    for k in 0..curve.times.len() {
        t.row(vec![curve.times[k].into(), curve.mean_qv[k].into(), curve.mean_frame_qv[k].into()]);
    }
    artifacts.add("qv.csv", &t);
    let horizon = e.grid.last().copied().unwrap_or(1.0);
    let terminal: Vec<f64> = e.summaries.iter().map(|s| s.qv.last().copied().unwrap_or(0.0) / horizon).collect();
    let (_, se) = stats::mean_and_se(&terminal);
    let tolerance = 0.02 + 4.0 * se;
    report.kv("slope", float(curve.slope));
    report.kv("frame_slope", float(curve.frame_slope));
    report.kv("tolerance", float(tolerance));
    let ok = (curve.slope - 1.0).abs() <= tolerance;
    report.kv("unit_slope", ok);
    if !ok {
        violations.push(format!("qv: slope {} outside 1 ± {}", curve.slope, tolerance));
    }
}

fn drift_check(
    exp: &Experiment,
    profile: &ComparisonProfile,
    artifacts: &mut Artifacts,
    report: &mut Report,
    violations: &mut Vec<String>,
) -> anyhow::Result<()> {
    let n = exp.config.run.grid_points;
    let samples = comparison::radial_samples(&exp.model, profile, n, n);
    let mut t = Table::new(&["t", "rho", "margin", "super_ricci_margin"]);
    let mut worst = f64::INFINITY;
    let mut super_ricci = true;
    for (time, x) in &samples {
        let jet = exp.model.distance_jet(*time, x).map_err(validation)?;
        let margin = profile.fbar(jet.rho) - (jet.laplacian_rho + 2.0 * jet.drho_dt);
        let sr = exp.model.check_super_ricci(*time, x).map_err(validation)?;
        super_ricci &= sr.holds;
        worst = worst.min(margin);
        t.row(vec![(*time).into(), jet.rho.into(), margin.into(), sr.margin.into()]);
    }
    artifacts.add("drift_check.csv", &t);
    report.kv("samples", samples.len());
    report.kv("super_ricci", super_ricci);
    report.kv("worst_margin", float(worst));
    if super_ricci && worst < 0.0 {
        violations.push(format!("drift-check: margin {worst} < 0 on a super-Ricci model"));
    }
    Ok(())
}

fn supermartingale(e: &RadialEnsemble, artifacts: &mut Artifacts, report: &mut Report, violations: &mut Vec<String>) {
    let m = radial::supermartingale_check(e);
    let mut t = Table::new(&["t", "mean", "std_error", "lower", "upper", "increment", "increment_std_error"]);
    for k in 0..m.times.len() {
        let (inc, inc_se) = if k == 0 { (0.0, 0.0) } else { m.increments[k - 1] };
        t.row(vec![
            m.times[k].into(),
            m.mean[k].into(),
            m.std_error[k].into(),
            (m.mean[k] - 3.0 * m.std_error[k]).into(),
            (m.mean[k] + 3.0 * m.std_error[k]).into(),
            inc.into(),
            inc_se.into(),
        ]);
    }
    artifacts.add("supermartingale.csv", &t);
    let z = m.familywise_z(0.01);
    let ok = m.non_increasing_within(z);
    report.kv("largest_increment_in_std_errors", float(m.worst_z));
    report.kv("familywise_threshold_in_std_errors", float(z));
    report.kv("non_increasing", ok);
    if !ok {
        violations.push(format!("supermartingale: increment {} standard errors above zero (threshold {z:.3})", m.worst_z));
    }
}

fn local_time(e: &RadialEnsemble, artifacts: &mut Artifacts, report: &mut Report) {
    let rows = radial::local_time_table(e);
    let mut t = Table::new(&[
        "delta",
        "residual_mean",
        "residual_std_error",
        "abs_residual_mean",
        "deficit_mean",
        "deficit_std_error",
        "downcrossing_mean",
        "downcrossing_std_error",
        "excursions_per_path",
        "excursion_time",
    ]);
    for r in &rows {
        t.row(vec![
            r.delta.into(),
            r.residual.0.into(),
            r.residual.1.into(),
            r.abs_residual.0.into(),
            r.deficit.0.into(),
            r.deficit.1.into(),
            r.downcrossing.0.into(),
            r.downcrossing.1.into(),
            r.excursions.into(),
            r.excursion_time.into(),
        ]);
    }
    artifacts.add("local_time.csv", &t);
    let mut occ = Table::new(&["eps", "mean_occupation", "std_error"]);
    for (eps, m, se) in radial::occupation_time_cutlocus(e) {
        occ.row(vec![eps.into(), m.into(), se.into()]);
    }
    artifacts.add("plotdata/occupation.csv", &occ);
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let monotone = sorted.windows(2).all(|w| w[1].abs_residual.0 <= w[0].abs_residual.0);
    report.kv("residual_decreasing_in_delta", monotone);
    if let Some(finest) = sorted.last() {
        let gap = (finest.deficit.0 - finest.downcrossing.0).abs() / finest.downcrossing.0.abs().max(f64::MIN_POSITIVE);
        report.kv("finest_delta", float(finest.delta));
        report.kv("local_time_deficit", float(finest.deficit.0));
        report.kv("local_time_downcrossing", float(finest.downcrossing.0));
        report.kv("estimator_relative_gap", float(gap));
    }
}

fn explosion_table(
    exp: &Experiment,
    profile: &ComparisonProfile,
    artifacts: &mut Artifacts,
    report: &mut Report,
    violations: &mut Vec<String>,
) -> anyhow::Result<()> {
    let run = &exp.config.run;
    let mut sim = sim_config(exp);
    sim.exit_radii = run.radius_ladder.clone();
    sim.stop_at_last_exit = true;
    let start = start(exp);
    let drift = exp.drift.as_ref();
    let exit_times = frame::ensemble_map(run.paths, |i| frame::simulate_path(&exp.model, &start, &sim, drift, run.seed, i).exit_times);
    let table = explosion::explosion_probability(
        &ExitEnsemble { radii: run.radius_ladder.clone(), exit_times },
        &run.radius_ladder,
        exp.horizon,
        0.95,
    )
    .map_err(validation)?;
    let mut t = Table::new(&["radius", "hits", "paths", "estimate", "wilson_lower", "wilson_upper"]);
    for r in &table.rows {
        t.row(vec![r.radius.into(), r.hits.into(), r.paths.into(), r.estimate.into(), r.lower.into(), r.upper.into()]);
    }
    artifacts.add("explosion.csv", &t);
    let last = table.rows.last().expect("non-empty ladder");
    let verdict = if table.non_explosion(1e-2) {
        "non-explosion"
    } else if last.hits > 0 {
        "explosion-detected"
    } else {
        "inconclusive"
    };
    let samples = comparison::radial_samples(&exp.model, profile, 16, 16);
    let mut super_ricci = true;
    for (t, x) in &samples {
        super_ricci &= exp.model.check_super_ricci(*t, x).map_err(validation)?.holds;
    }
    report.kv("confidence", "0.95 (Wilson)");
    report.kv("largest_radius", float(last.radius));
    report.kv("upper_bound_at_largest_radius", float(last.upper));
    report.kv("super_ricci", super_ricci);
    report.kv("verdict", verdict);
    if super_ricci && drift.is_none() && verdict == "explosion-detected" {
        violations.push(format!("explosion: paths reached radius {} on a super-Ricci model", last.radius));
    }
    Ok(())
}

fn feller(exp: &Experiment, profile: &ComparisonProfile, artifacts: &mut Artifacts, report: &mut Report) -> anyhow::Result<()> {
    let fc = exp.config.feller.clone().unwrap_or(crate::config::FellerConfig { extra: None, y_max: 1e6, tolerance: 0.05 });
    let extra = fc.extra.as_ref().map_or(DriftSpec::Zero, |d| d.build());
    let mut drifts = vec![("comparison", explosion::comparison_drift(profile, extra))];
    if let Ok(model_drift) = DriftSpec::from_model(&exp.model) {
        drifts.push(("model_radial", model_drift));
    }
    let mut t = Table::new(&["drift", "classification", "feller_value", "cutoff", "tail_exponent", "tail_bound"]);
    for (name, d) in drifts {
        let v = explosion::feller_test(&d, 1.0, fc.y_max, fc.tolerance).map_err(validation)?;
        t.row(vec![
            name.into(),
            v.classification.label().into(),
            v.feller_value.into(),
            v.cutoff.into(),
            v.tail_exponent.into(),
            v.tail_bound.into(),
        ]);
        report.kv(name, v.classification.label());
    }
    artifacts.add("feller.csv", &t);
    Ok(())
}

fn assumption(exp: &Experiment, profile: &ComparisonProfile, artifacts: &mut Artifacts, report: &mut Report) -> anyhow::Result<()> {
    let spec = exp.drift.as_ref().expect("validated");
    let b = exp.config.run.assumption_b;
    let samples = comparison::radial_samples(&exp.model, profile, 16, 16);
    let mut t = Table::new(&["t", "r", "margin"]);
    let mut worst = f64::INFINITY;
    let mut holds = true;
    for (time, x) in &samples {
        let c = drift::check_assumption(&exp.model, spec, &|_| b, std::slice::from_ref(&(*time, x.clone()))).map_err(validation)?;
        worst = worst.min(c.margin);
        holds &= c.holds;
        t.row(vec![(*time).into(), x.norm().into(), c.margin.into()]);
    }
    artifacts.add("assumption_check.csv", &t);
    report.kv("b", float(b));
    report.kv("worst_margin", float(worst));
    report.kv("holds", holds);
    Ok(())
}
