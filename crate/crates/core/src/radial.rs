//! Radial semimartingale decomposition of `ρ(t, Xₜ) = d_{g(t)}(o, Xₜ)`.
//!
//! Along a discretized path every step is split into
//!
//! * the frame martingale increment `Δβ = dρ(U ΔW)`,
//! * the predicted drift `[½Δρ + ∂ρ/∂t (+ Zρ)] h`,
//! * and, inside δ-excursions around the cut locus, a local-time increment.
//!
//! Excursions follow the stopping-time construction: `Sₙ` is the first grid
//! time after `Tₙ₋₁` with `d(Xₜ, Cut) ≤ ε_hit`, and `Tₙ` is the first of
//! `Sₙ + δ`, the first exit from the `δ`-ball around `X_{Sₙ}`, and `T`.
//! On excursion steps the local-time estimate accrues the drift deficit
//! `max(0, V(ρ)h + Δβ − Δρ)`; a downcrossing estimator (`δ` times the number
//! of upcrossings of the cut distance from `ε_hit` to `ε_hit + δ`) is kept
//! alongside as an independent reading.
//!
//! Everything is computed by [`RadialObserver`] while the path is simulated,
//! so ensembles never store full trajectories.

use nalgebra::DVector;

use crate::comparison::ComparisonProfile;
use crate::drift::VectorFieldSpec;
use crate::error::{Error, Result};
use crate::frame::{self, FrameState, PathObserver, PathRecord, SimulationConfig, StartPoint};
use crate::models::{EvolvingMetricModel, Point};
use crate::stats::Moments;

/// Default cut-locus hit threshold `2√(h d)`: one-step reachability.
pub fn default_eps_hit(step: f64, dim: usize) -> f64 {
    2.0 * (step * dim as f64).sqrt()
}

/// What the radial observer tracks.
#[derive(Clone, Debug)]
pub struct RadialConfig {
    /// Excursion thresholds; the last entry is treated as the finest.
    pub deltas: Vec<f64>,
    pub eps_hit: f64,
    /// Thresholds for the cut-locus occupation time.
    pub occupation_eps: Vec<f64>,
    /// Summary grid spacing in base steps.
    pub grid_every: usize,
    /// Keep per-step series (single-path decompositions).
    pub keep_series: bool,
}

/// One δ-excursion `[Sₙ, Tₙ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Excursion {
    pub start: f64,
    pub end: f64,
}

/// Full decomposition of a single path for one δ.
#[derive(Clone, Debug)]
pub struct RadialDecomposition {
    pub delta: f64,
    pub times: Vec<f64>,
    pub rho: Vec<f64>,
    /// `½Δρ + ∂ρ/∂t (+ Zρ)` at each grid time (left points; last entry repeats).
    pub predicted_drift: Vec<f64>,
    /// `Δρ − drift·h` off excursions, `Δβ` on excursions.
    pub martingale_increments: Vec<f64>,
    /// Frame martingale increments `dρ(U ΔW)`.
    pub frame_increments: Vec<f64>,
    pub excursions: Vec<Excursion>,
    /// Non-decreasing local-time estimate (drift deficit).
    pub local_time: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct DeltaTrack {
    delta: f64,
    active: Option<(f64, Point)>,
    local_time: f64,
    excursions: usize,
    on_time: f64,
    intervals: Vec<Excursion>,
    armed: bool,
    upcrossings: usize,
}

/// Per-path radial summary on the observer grid.
#[derive(Clone, Debug, Default)]
pub struct RadialSummary {
    pub complete: bool,
    /// `ρ` at grid times.
    pub rho: Vec<f64>,
    /// Cumulative realized QV of the decomposition martingale.
    pub qv: Vec<f64>,
    /// Cumulative realized QV of the frame martingale.
    pub frame_qv: Vec<f64>,
    /// `ρ(t) − ρ(0) − ∫₀ᵗ (V(ρ) + Zρ)`.
    pub supermartingale: Vec<f64>,
    /// `∫₀ᵗ predicted drift`.
    pub drift_integral: Vec<f64>,
    /// Local-time estimate (drift deficit) for the finest δ.
    pub local_time: Vec<f64>,
    /// Per δ: total decomposition residual at `T`.
    pub residual: Vec<f64>,
    /// Per δ: drift-deficit local time at `T`.
    pub local_time_deficit: Vec<f64>,
    /// Per δ: downcrossing local time at `T`.
    pub local_time_downcrossing: Vec<f64>,
    pub excursions: Vec<usize>,
    pub excursion_time: Vec<f64>,
    /// Time spent within each occupation threshold of the cut locus.
    pub occupation: Vec<f64>,
}

/// Streams radial statistics out of a simulated path.
pub struct RadialObserver<'a> {
    cfg: &'a RadialConfig,
    profile: Option<&'a ComparisonProfile>,
    drift: Option<&'a VectorFieldSpec>,
    grid_dt: f64,
    next_grid: f64,
    rho0: f64,
    rho: f64,
    beta_sum: f64,
    drift_sum: f64,
    v_sum: f64,
    qv: f64,
    frame_qv: f64,
    tracks: Vec<DeltaTrack>,
    pub summary: RadialSummary,
    series: Option<RadialDecomposition>,
}

impl<'a> RadialObserver<'a> {
    pub fn new(
        cfg: &'a RadialConfig,
        profile: Option<&'a ComparisonProfile>,
        drift: Option<&'a VectorFieldSpec>,
        step: f64,
    ) -> Self {
        let tracks = cfg.deltas.iter().map(|d| DeltaTrack { delta: *d, ..Default::default() }).collect();
        let series = cfg.keep_series.then(|| RadialDecomposition {
            delta: cfg.deltas.first().copied().unwrap_or(0.0),
            times: Vec::new(),
            rho: Vec::new(),
            predicted_drift: Vec::new(),
            martingale_increments: Vec::new(),
            frame_increments: Vec::new(),
            excursions: Vec::new(),
            local_time: Vec::new(),
        });
        Self {
            cfg,
            profile,
            drift,
            grid_dt: step * cfg.grid_every.max(1) as f64,
            next_grid: 0.0,
            rho0: 0.0,
            rho: 0.0,
            beta_sum: 0.0,
            drift_sum: 0.0,
            v_sum: 0.0,
            qv: 0.0,
            frame_qv: 0.0,
            tracks,
            summary: RadialSummary {
                occupation: vec![0.0; cfg.occupation_eps.len()],
                ..Default::default()
            },
            series,
        }
    }

    fn v(&self, rho: f64) -> f64 {
        self.profile.map_or(0.0, |p| p.v(rho))
    }

    fn record_grid(&mut self) {
        let s = &mut self.summary;
        s.rho.push(self.rho);
        s.qv.push(self.qv);
        s.frame_qv.push(self.frame_qv);
        s.supermartingale.push(self.rho - self.rho0 - self.v_sum);
        s.drift_integral.push(self.drift_sum);
        s.local_time.push(self.tracks.last().map_or(0.0, |t| t.local_time));
        self.next_grid += self.grid_dt;
    }

    /// Closes open excursions and fills the terminal statistics.
    pub fn finish(mut self, horizon: f64) -> (RadialSummary, Option<RadialDecomposition>) {
        let base = self.rho - self.rho0 - self.beta_sum - self.drift_sum;
        for track in &mut self.tracks {
            if let Some((start, _)) = track.active.take() {
                track.intervals.push(Excursion { start, end: horizon });
            }
            self.summary.residual.push(base + track.local_time);
            self.summary.local_time_deficit.push(track.local_time);
            self.summary.local_time_downcrossing.push(track.delta * track.upcrossings as f64);
            self.summary.excursions.push(track.excursions);
            self.summary.excursion_time.push(track.on_time);
        }
        if let (Some(series), Some(first)) = (self.series.as_mut(), self.tracks.first()) {
            series.excursions = first.intervals.clone();
            if let Some(d) = series.predicted_drift.last().copied() {
                series.predicted_drift.push(d);
            }
        }
        self.summary.complete = true;
        (self.summary, self.series)
    }
}

impl PathObserver for RadialObserver<'_> {
    fn start(&mut self, model: &EvolvingMetricModel, state: &FrameState) {
        self.rho0 = model.rho_rep(state.t, &state.x);
        self.rho = self.rho0;
        self.next_grid = state.t;
        self.record_grid();
        if let Some(series) = self.series.as_mut() {
            series.times.push(state.t);
            series.rho.push(self.rho0);
            series.local_time.push(0.0);
        }
    }

    fn step(&mut self, model: &EvolvingMetricModel, prev: &FrameState, dw: &DVector<f64>, next: &FrameState) {
        let h = next.t - prev.t;
        let rho_prev = self.rho;
        let rho_next = model.rho_rep(next.t, &next.x);
        let d_rho = rho_next - rho_prev;
        let (drift, z_rho, d_beta) = match model.radial_rep(prev.t, &prev.x) {
            Ok(jet) => {
                let z_rho = self.drift.map_or(0.0, |spec| jet.differential.dot(&spec.value_rep(model, prev.t, &prev.x)));
                (jet.generator_drift() + z_rho, z_rho, jet.differential.dot(&(&prev.u * dw)))
            }
            Err(_) => (0.0, 0.0, 0.0),
        };
        // The barrier bounds the undrifted part; a drift adds its radial component.
        let v = self.v(rho_prev) + z_rho;
        self.v_sum += v * h;
        self.drift_sum += drift * h;
        self.beta_sum += d_beta;
        self.frame_qv += d_beta * d_beta;

        // Excursion bookkeeping is decided at the left point of the step.
        let mut finest_on = false;
        let n_tracks = self.tracks.len();
        for (i, track) in self.tracks.iter_mut().enumerate() {
            if track.active.is_some() {
                let ell = (v * h + d_beta - d_rho).max(0.0);
                track.local_time += ell;
                track.on_time += h;
                if i + 1 == n_tracks {
                    finest_on = true;
                }
            }
        }
        let martingale = if finest_on { d_beta } else { d_rho - drift * h };
        self.qv += martingale * martingale;

        // Update excursion states at the right point.
        let cut = model.cut_distance_rep(next.t, &next.x);
        for track in &mut self.tracks {
            if let Some((start, anchor)) = &track.active {
                let moved = model.distance_rep(next.t, anchor, &next.x).unwrap_or(f64::INFINITY);
                if next.t >= start + track.delta || moved >= track.delta {
                    track.intervals.push(Excursion { start: *start, end: next.t });
                    track.active = None;
                }
            } else if cut <= self.cfg.eps_hit {
                track.active = Some((next.t, next.x.clone()));
                track.excursions += 1;
            }
            if cut <= self.cfg.eps_hit {
                track.armed = true;
            } else if track.armed && cut >= self.cfg.eps_hit + track.delta {
                track.armed = false;
                track.upcrossings += 1;
            }
        }
        for (slot, eps) in self.summary.occupation.iter_mut().zip(&self.cfg.occupation_eps) {
            let prev_cut = model.cut_distance_rep(prev.t, &prev.x);
            if prev_cut <= *eps {
                *slot += h;
            }
        }

        self.rho = rho_next;
        if let Some(series) = self.series.as_mut() {
            series.times.push(next.t);
            series.rho.push(rho_next);
            series.predicted_drift.push(drift);
            series.martingale_increments.push(martingale);
            series.frame_increments.push(d_beta);
            let l = self.tracks.first().map_or(0.0, |t| t.local_time);
            series.local_time.push(l);
        }
        if next.t >= self.next_grid - 1e-9 * self.grid_dt {
            self.record_grid();
        }
    }
}

/// Decomposes a recorded path (states and increments at every step).
pub fn decompose(
    path: &PathRecord,
    model: &EvolvingMetricModel,
    profile: &ComparisonProfile,
    delta: f64,
    eps_hit: f64,
) -> Result<RadialDecomposition> {
    if !(delta > 0.0 && delta < profile.delta1) {
        return Err(Error::Config(format!("δ = {delta} must lie in (0, δ₁ = {})", profile.delta1)));
    }
    if path.states.len() != path.increments.len() + 1 {
        return Err(Error::Config("decompose needs every state and increment recorded".into()));
    }
    let cfg = RadialConfig {
        deltas: vec![delta],
        eps_hit,
        occupation_eps: Vec::new(),
        grid_every: 1,
        keep_series: true,
    };
    let step = path.times.get(1).map_or(1.0, |t1| t1 - path.times[0]);
    let mut obs = RadialObserver::new(&cfg, Some(profile), None, step);
    obs.start(model, &path.states[0]);
    for (k, dw) in path.increments.iter().enumerate() {
        obs.step(model, &path.states[k], dw, &path.states[k + 1]);
    }
    let horizon = path.states.last().map_or(0.0, |s| s.t);
    let (_, series) = obs.finish(horizon);
    Ok(series.expect("series requested"))
}

/// Ensemble of radial summaries on a common grid.
#[derive(Clone, Debug)]
pub struct RadialEnsemble {
    pub grid: Vec<f64>,
    pub deltas: Vec<f64>,
    pub occupation_eps: Vec<f64>,
    pub summaries: Vec<RadialSummary>,
    pub dropped: usize,
}

/// Simulates `paths` paths and collects their radial summaries in index order.
#[allow(clippy::too_many_arguments)]
pub fn radial_ensemble(
    model: &EvolvingMetricModel,
    start: &StartPoint,
    sim: &SimulationConfig,
    drift: Option<&VectorFieldSpec>,
    profile: Option<&ComparisonProfile>,
    cfg: &RadialConfig,
    paths: usize,
    seed: u64,
) -> RadialEnsemble {
    let mut sim = sim.clone();
    sim.record_every = 0;
    sim.record_increments = false;
    let h = sim.horizon / sim.steps() as f64;
    let results = frame::ensemble_map(paths, |i| {
        let mut obs = RadialObserver::new(cfg, profile, drift, h);
        let rec = frame::simulate_path_observed(model, start, &sim, drift, seed, i, &mut obs);
        let (summary, _) = obs.finish(sim.horizon);
        (rec.valid && rec.explosion.is_none(), summary)
    });
    let n_grid = results.iter().map(|(_, s)| s.rho.len()).max().unwrap_or(0);
    let mut summaries = Vec::with_capacity(paths);
    let mut dropped = 0;
    for (ok, s) in results {
        if ok && s.rho.len() == n_grid {
            summaries.push(s);
        } else {
            dropped += 1;
        }
    }
    let grid_dt = h * cfg.grid_every.max(1) as f64;
    RadialEnsemble {
        grid: (0..n_grid).map(|k| (k as f64 * grid_dt).min(sim.horizon)).collect(),
        deltas: cfg.deltas.clone(),
        occupation_eps: cfg.occupation_eps.clone(),
        summaries,
        dropped,
    }
}

/// Mean and standard error of a per-path scalar.
fn moments(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut m = Moments::default();
    values.for_each(|v| m.push(v));
    (m.mean(), m.std_error())
}

#[derive(Clone, Debug)]
pub struct QvCurve {
    pub times: Vec<f64>,
    pub mean_qv: Vec<f64>,
    pub mean_frame_qv: Vec<f64>,
    /// Least-squares slope of the mean QV against `t`.
    pub slope: f64,
    pub frame_slope: f64,
}

/// Realized quadratic variation of the radial martingale; the contract is `⟨β⟩ₜ = t`.
pub fn qv_martingale(ensemble: &RadialEnsemble) -> QvCurve {
    let n = ensemble.grid.len();
    let mean_at = |f: &dyn Fn(&RadialSummary) -> &Vec<f64>, k: usize| {
        moments(ensemble.summaries.iter().map(|s| f(s)[k])).0
    };
    let mean_qv: Vec<f64> = (0..n).map(|k| mean_at(&|s| &s.qv, k)).collect();
    let mean_frame_qv: Vec<f64> = (0..n).map(|k| mean_at(&|s| &s.frame_qv, k)).collect();
    QvCurve {
        slope: crate::stats::ols_slope(&ensemble.grid, &mean_qv),
        frame_slope: crate::stats::ols_slope(&ensemble.grid, &mean_frame_qv),
        times: ensemble.grid.clone(),
        mean_qv,
        mean_frame_qv,
    }
}

/// Mean cut-locus occupation time per threshold, with standard errors.
pub fn occupation_time_cutlocus(ensemble: &RadialEnsemble) -> Vec<(f64, f64, f64)> {
    ensemble
        .occupation_eps
        .iter()
        .enumerate()
        .map(|(j, eps)| {
            let (m, se) = moments(ensemble.summaries.iter().map(|s| s.occupation[j]));
            (*eps, m, se)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SupermartingaleCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Mean and standard error of `m(tₖ₊₁) − m(tₖ)`.
    pub increments: Vec<(f64, f64)>,
    /// Largest increment in units of its standard error.
    pub worst_z: f64,
}

impl SupermartingaleCurve {
    /// Every successive difference is at most `z` standard errors above zero.
    pub fn non_increasing_within(&self, z: f64) -> bool {
        self.increments.iter().all(|(m, se)| *m <= z * se + 1e-15)
    }

    /// One-sided z threshold holding the false-alarm rate over all increments at `alpha`.
    pub fn familywise_z(&self, alpha: f64) -> f64 {
        let n = self.increments.len().max(1) as f64;
        crate::stats::normal_quantile(1.0 - 2.0 * alpha / n)
    }
}

/// `m(t) = E[ρ(t) − ρ(0) − ∫₀ᵗ (V(ρ) + Zρ)]` with bands; `Zρ = 0` without drift.
pub fn supermartingale_check(ensemble: &RadialEnsemble) -> SupermartingaleCurve {
    let n = ensemble.grid.len();
    let stats: Vec<(f64, f64)> =
        (0..n).map(|k| moments(ensemble.summaries.iter().map(|s| s.supermartingale[k]))).collect();
    let increments: Vec<(f64, f64)> = (1..n)
        .map(|k| moments(ensemble.summaries.iter().map(|s| s.supermartingale[k] - s.supermartingale[k - 1])))
        .collect();
    let worst_z = increments
        .iter()
        .map(|(m, se)| if *se > 0.0 { m / se } else if *m > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY })
        .fold(f64::NEG_INFINITY, f64::max);
    SupermartingaleCurve {
        times: ensemble.grid.clone(),
        mean: stats.iter().map(|s| s.0).collect(),
        std_error: stats.iter().map(|s| s.1).collect(),
        increments,
        worst_z,
    }
}

/// Per-δ ensemble statistics of the decomposition.
#[derive(Clone, Debug)]
pub struct LocalTimeRow {
    pub delta: f64,
    pub residual: (f64, f64),
    pub abs_residual: (f64, f64),
    pub deficit: (f64, f64),
    pub downcrossing: (f64, f64),
    pub excursions: f64,
    pub excursion_time: f64,
}

pub fn local_time_table(ensemble: &RadialEnsemble) -> Vec<LocalTimeRow> {
    ensemble
        .deltas
        .iter()
        .enumerate()
        .map(|(j, delta)| {
            let s = &ensemble.summaries;
            LocalTimeRow {
                delta: *delta,
                residual: moments(s.iter().map(|x| x.residual[j])),
                abs_residual: moments(s.iter().map(|x| x.residual[j].abs())),
                deficit: moments(s.iter().map(|x| x.local_time_deficit[j])),
                downcrossing: moments(s.iter().map(|x| x.local_time_downcrossing[j])),
                excursions: moments(s.iter().map(|x| x.excursions[j] as f64)).0,
                excursion_time: moments(s.iter().map(|x| x.excursion_time[j])).0,
            }
        })
        .collect()
}

/// Mean curves for plotting: `(t, mean ρ, mean drift integral, mean QV, mean L)`.
pub fn mean_curves(ensemble: &RadialEnsemble) -> Vec<[f64; 5]> {
    (0..ensemble.grid.len())
        .map(|k| {
            let s = &ensemble.summaries;
            [
                ensemble.grid[k],
                moments(s.iter().map(|x| x.rho[k])).0,
                moments(s.iter().map(|x| x.drift_integral[k])).0,
                moments(s.iter().map(|x| x.qv[k])).0,
                moments(s.iter().map(|x| x.local_time[k])).0,
            ]
        })
        .collect()
}
