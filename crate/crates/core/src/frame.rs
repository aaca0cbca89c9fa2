//! Horizontal frame-bundle SDE for `g(t)`-Brownian motion.
//!
//! The state is a point `x` and a frame `U` whose columns are `g(t)`-orthonormal
//! tangent vectors. In Stratonovich form
//!
//! ```text
//! dx   = U ∘ dW (+ Z dt)
//! dU_j = −Γ(x)(U_j, ∘dx) − ½ Σ_α ∂g/∂t(U_α, U_j) U_α dt
//! ```
//!
//! where the second term is the vertical correction that keeps `U`
//! orthonormal while the metric moves. [`step`] integrates one step with the
//! Euler–Heun predictor–corrector; [`Integrator::Ito`] is an independent
//! Itô–Euler discretization with the explicit correction terms, used to
//! cross-check the Stratonovich scheme.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::drift::{self, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{EvolvingMetricModel, Point, Representation};
use crate::rng;

/// A space-time point with a candidate orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameState {
    pub t: f64,
    /// Representation coordinates (chart, or ambient for the sphere).
    pub x: Point,
    /// Columns are the frame vectors `U e₁, …, U e_d`.
    pub u: DMatrix<f64>,
}

impl FrameState {
    pub fn new(t: f64, x: Point, u: DMatrix<f64>) -> Self {
        Self { t, x, u }
    }

    /// State at `x` with the model's default orthonormal frame.
    pub fn at(model: &EvolvingMetricModel, t: f64, x: Point) -> Self {
        let u = model.initial_frame(t, &x);
        Self { t, x, u }
    }
}

/// `‖Uᵀ g(t, x) U − I‖_∞`.
pub fn orthonormality_defect(model: &EvolvingMetricModel, state: &FrameState) -> f64 {
    linalg::orthonormality_defect(&state.u, &model.gram_rep(state.t, &state.x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Stratonovich Euler–Heun predictor–corrector.
    #[default]
    Heun,
    /// Itô–Euler with explicit connection corrections (chart models only).
    Ito,
}

/// Per-step options.
#[derive(Clone, Copy, Debug)]
pub struct StepOptions<'a> {
    pub integrator: Integrator,
    /// Re-orthonormalize the frame in `g(t + h)` after the step.
    pub project: bool,
    pub drift: Option<&'a VectorFieldSpec>,
    /// Chart-norm threshold of the explosion sentinel.
    pub blowup_radius: f64,
}

impl Default for StepOptions<'_> {
    fn default() -> Self {
        Self { integrator: Integrator::Heun, project: true, drift: None, blowup_radius: f64::INFINITY }
    }
}

/// Increments of `(x, U)` under the Stratonovich vector fields frozen at
/// `(t, x, U)`.
fn increments(
    model: &EvolvingMetricModel,
    t: f64,
    x: &Point,
    u: &DMatrix<f64>,
    h: f64,
    dw: &DVector<f64>,
    drift: Option<&VectorFieldSpec>,
) -> (DVector<f64>, DMatrix<f64>) {
    let mut noise = dw.clone();
    if let Some(spec) = drift.filter(|s| !s.is_zero()) {
        noise += drift::frame_coefficients(model, spec, t, x, u) * h;
    }
    let dx = u * noise;
    let mut du = vertical_drift(model, t, x, u) * h;
    for j in 0..u.ncols() {
        let col = u.column(j).into_owned();
        du.column_mut(j).axpy(-1.0, &model.connection_rep(x, &col, &dx), 1.0);
    }
    (dx, du)
}

/// `−½ U S` with `S = Uᵀ ∂g/∂t U`.
fn vertical_drift(model: &EvolvingMetricModel, t: f64, x: &Point, u: &DMatrix<f64>) -> DMatrix<f64> {
    let da = model.scale_derivative(t);
    if da == 0.0 {
        return DMatrix::zeros(u.nrows(), u.ncols());
    }
    let dg = model.gram0_rep(x) * da;
    let s = u.transpose() * dg * u;
    -(u * s) * 0.5
}

/// One integrator step from `state` over `h` with Brownian increment `dw`.
///
/// Returns [`Error::StepRejected`] when the predictor or the result leaves
/// the chart domain, and [`Error::Explosion`] when the chart norm passes
/// the blow-up radius.
pub fn step(
    model: &EvolvingMetricModel,
    state: &FrameState,
    h: f64,
    dw: &DVector<f64>,
    opts: &StepOptions,
) -> Result<FrameState> {
    let t = state.t;
    let (mut x, mut u) = match opts.integrator {
        Integrator::Heun => {
            let (dx1, du1) = increments(model, t, &state.x, &state.u, h, dw, opts.drift);
            let mut xp = &state.x + &dx1;
            let mut up = &state.u + &du1;
            if !model.in_domain_rep(&xp) {
                return Err(Error::StepRejected { t, h });
            }
            model.project_rep(&mut xp, &mut up);
            let (dx2, du2) = increments(model, t + h, &xp, &up, h, dw, opts.drift);
            (&state.x + (dx1 + dx2) * 0.5, &state.u + (du1 + du2) * 0.5)
        }
        Integrator::Ito => ito_euler(model, state, h, dw, opts.drift)?,
    };
    if !model.in_domain_rep(&x) {
        return Err(Error::StepRejected { t, h });
    }
    model.project_rep(&mut x, &mut u);
    let radius = model.blowup_norm_rep(&x);
    if radius > opts.blowup_radius {
        return Err(Error::Explosion { t: t + h, radius });
    }
    if opts.project {
        u = linalg::gram_schmidt(&u, &model.gram_rep(t + h, &x));
    }
    Ok(FrameState { t: t + h, x, u })
}

/// Itô–Euler step: the Stratonovich fields plus ½ Σᵢ (Dσᵢ)σᵢ.
fn ito_euler(
    model: &EvolvingMetricModel,
    state: &FrameState,
    h: f64,
    dw: &DVector<f64>,
    drift: Option<&VectorFieldSpec>,
) -> Result<(Point, DMatrix<f64>)> {
    if model.representation() == Representation::Ambient {
        return Err(Error::Config("the Itô integrator needs a chart model".into()));
    }
    let (t, x, u) = (state.t, &state.x, &state.u);
    let d = u.ncols();
    let (dx, du) = increments(model, t, x, u, h, dw, drift);
    let cols: Vec<DVector<f64>> = (0..d).map(|i| u.column(i).into_owned()).collect();
    let eps = 1e-5 * x.norm().max(1.0);
    let mut x_corr = DVector::zeros(x.len());
    let mut u_corr = DMatrix::zeros(u.nrows(), d);
    for ui in &cols {
        let gamma_ii = model.connection_rep(x, ui, ui);
        x_corr -= &gamma_ii;
        let xp = x + ui * eps;
        let xm = x - ui * eps;
        for (j, uj) in cols.iter().enumerate() {
            let d_gamma =
                (model.connection_rep(&xp, uj, ui) - model.connection_rep(&xm, uj, ui)) / (2.0 * eps);
            let gamma_ji = model.connection_rep(x, uj, ui);
            let term = -d_gamma
                + model.connection_rep(x, &gamma_ji, ui)
                + model.connection_rep(x, uj, &gamma_ii);
            u_corr.column_mut(j).axpy(1.0, &term, 1.0);
        }
    }
    Ok((x + dx + x_corr * (0.5 * h), u + du + u_corr * (0.5 * h)))
}

/// Stop rules and discretization of a path.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub step: f64,
    pub integrator: Integrator,
    pub project: bool,
    pub blowup_radius: f64,
    /// `g(t)`-distances from `o` whose first passage times are recorded.
    pub exit_radii: Vec<f64>,
    /// Stop the path once the largest exit radius is reached.
    pub stop_at_last_exit: bool,
    /// Maximum number of step halvings after a rejection.
    pub max_halvings: u32,
    /// Keep every n-th state in the [`PathRecord`] (0 keeps none).
    pub record_every: usize,
    pub record_increments: bool,
}

impl SimulationConfig {
    pub fn new(horizon: f64, step: f64) -> Self {
        Self {
            horizon,
            step,
            integrator: Integrator::Heun,
            project: true,
            blowup_radius: 1e8,
            exit_radii: Vec::new(),
            stop_at_last_exit: false,
            max_halvings: 10,
            record_every: 1,
            record_increments: false,
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round().max(1.0) as usize
    }

    pub fn validate(&self, model: &EvolvingMetricModel) -> Result<()> {
        if !(self.step > 0.0 && self.horizon > 0.0) {
            return Err(Error::Config("step and horizon must be positive".into()));
        }
        if self.horizon > model.horizon * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "simulation horizon {} exceeds model horizon {}",
                self.horizon, model.horizon
            )));
        }
        if self.integrator == Integrator::Ito && model.representation() == Representation::Ambient {
            return Err(Error::Config("the Itô integrator needs a chart model".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathEvent {
    Exit { radius: f64, t: f64 },
    Explosion { t: f64, radius: f64 },
    StepRejected { t: f64, h: f64 },
    Invalid { t: f64 },
}

/// A simulated trajectory.
#[derive(Clone, Debug)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub states: Vec<FrameState>,
    pub increments: Vec<DVector<f64>>,
    pub events: Vec<PathEvent>,
    /// First passage time of each configured exit radius.
    pub exit_times: Vec<Option<f64>>,
    pub explosion: Option<f64>,
    pub valid: bool,
    pub terminal: FrameState,
}

/// Receives every accepted (sub)step of a path.
pub trait PathObserver {
    fn start(&mut self, _model: &EvolvingMetricModel, _state: &FrameState) {}
    fn step(&mut self, model: &EvolvingMetricModel, prev: &FrameState, dw: &DVector<f64>, next: &FrameState);
}

impl PathObserver for () {
    fn step(&mut self, _: &EvolvingMetricModel, _: &FrameState, _: &DVector<f64>, _: &FrameState) {}
}

impl<A: PathObserver, B: PathObserver> PathObserver for (A, B) {
    fn start(&mut self, model: &EvolvingMetricModel, state: &FrameState) {
        self.0.start(model, state);
        self.1.start(model, state);
    }
    fn step(&mut self, model: &EvolvingMetricModel, prev: &FrameState, dw: &DVector<f64>, next: &FrameState) {
        self.0.step(model, prev, dw, next);
        self.1.step(model, prev, dw, next);
    }
}

/// Where a path starts.
#[derive(Clone, Debug)]
pub struct StartPoint {
    pub x: Point,
    pub frame: Option<DMatrix<f64>>,
}

impl StartPoint {
    pub fn new(x: Point) -> Self {
        Self { x, frame: None }
    }

    fn state(&self, model: &EvolvingMetricModel) -> FrameState {
        match &self.frame {
            Some(u) => FrameState::new(0.0, self.x.clone(), linalg::gram_schmidt(u, &model.gram_rep(0.0, &self.x))),
            None => FrameState::at(model, 0.0, self.x.clone()),
        }
    }
}

/// Simulates path `index` of the ensemble seeded by `seed`.
pub fn simulate_path(
    model: &EvolvingMetricModel,
    start: &StartPoint,
    cfg: &SimulationConfig,
    drift: Option<&VectorFieldSpec>,
    seed: u64,
    index: u64,
) -> PathRecord {
    simulate_path_observed(model, start, cfg, drift, seed, index, &mut ())
}

/// [`simulate_path`] that also streams every accepted step to `observer`.
pub fn simulate_path_observed<O: PathObserver>(
    model: &EvolvingMetricModel,
    start: &StartPoint,
    cfg: &SimulationConfig,
    drift: Option<&VectorFieldSpec>,
    seed: u64,
    index: u64,
    observer: &mut O,
) -> PathRecord {
    let mut rng = rng::path_rng(seed, index);
    let opts = StepOptions { integrator: cfg.integrator, project: cfg.project, drift, blowup_radius: cfg.blowup_radius };
    let mut state = start.state(model);
    observer.start(model, &state);
    let mut record = PathRecord {
        times: Vec::new(),
        states: Vec::new(),
        increments: Vec::new(),
        events: Vec::new(),
        exit_times: vec![None; cfg.exit_radii.len()],
        explosion: None,
        valid: true,
        terminal: state.clone(),
    };
    if cfg.record_every > 0 {
        record.times.push(state.t);
        record.states.push(state.clone());
    }
    let n = cfg.steps();
    let h = cfg.horizon / n as f64;
    let max_exit = cfg.exit_radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for k in 0..n {
        let dw = rng::brownian_increment(&mut rng, model.dim, h);
        let target_t = if k + 1 == n { cfg.horizon } else { (k + 1) as f64 * h };
        let h_k = target_t - state.t;
        match advance(model, &state, h_k, &dw, &opts, cfg.max_halvings, &mut rng, &mut record, observer) {
            Ok(next) => state = next,
            Err(Error::Explosion { t, radius }) => {
                record.explosion = Some(t);
                record.events.push(PathEvent::Explosion { t, radius });
                for (slot, _) in record.exit_times.iter_mut().zip(&cfg.exit_radii) {
                    slot.get_or_insert(t);
                }
                break;
            }
            Err(_) => {
                record.valid = false;
                record.events.push(PathEvent::Invalid { t: state.t });
                break;
            }
        }
        if cfg.record_increments {
            record.increments.push(dw);
        }
        if !cfg.exit_radii.is_empty() {
            let rho = model.rho_rep(state.t, &state.x);
            for (slot, r) in record.exit_times.iter_mut().zip(&cfg.exit_radii) {
                if slot.is_none() && rho >= *r {
                    *slot = Some(state.t);
                    record.events.push(PathEvent::Exit { radius: *r, t: state.t });
                }
            }
            if cfg.stop_at_last_exit && rho >= max_exit {
                break;
            }
        }
        if cfg.record_every > 0 && ((k + 1) % cfg.record_every == 0 || k + 1 == n) {
            record.times.push(state.t);
            record.states.push(state.clone());
        }
    }
    record.terminal = state;
    record
}

/// Advances over `h`, splitting the step by Brownian-bridge bisection when
/// the integrator rejects it.
#[allow(clippy::too_many_arguments)]
fn advance<R: Rng, O: PathObserver>(
    model: &EvolvingMetricModel,
    state: &FrameState,
    h: f64,
    dw: &DVector<f64>,
    opts: &StepOptions,
    halvings_left: u32,
    rng: &mut R,
    record: &mut PathRecord,
    observer: &mut O,
) -> Result<FrameState> {
    match step(model, state, h, dw, opts) {
        Ok(next) => {
            observer.step(model, state, dw, &next);
            Ok(next)
        }
        Err(Error::StepRejected { t, h }) => {
            record.events.push(PathEvent::StepRejected { t, h });
            if halvings_left == 0 {
                return Err(Error::StepRejected { t, h });
            }
            let half = h / 2.0;
            let s = (h / 4.0).sqrt();
            let bridge = DVector::from_fn(dw.len(), |_, _| s * rng.sample::<f64, _>(StandardNormal));
            let dw1 = dw * 0.5 + bridge;
            let dw2 = dw - &dw1;
            let mid = advance(model, state, half, &dw1, opts, halvings_left - 1, rng, record, observer)?;
            advance(model, &mid, half, &dw2, opts, halvings_left - 1, rng, record, observer)
        }
        Err(e) => Err(e),
    }
}

/// Runs `map` over path indices `0..paths` on the current rayon pool and
/// returns the results in index order.
pub fn ensemble_map<S, F>(paths: usize, map: F) -> Vec<S>
where
    S: Send,
    F: Fn(u64) -> S + Sync + Send,
{
    (0..paths as u64).into_par_iter().map(map).collect()
}

/// A scalar test function with analytic generator data on a model, in
/// representation coordinates.
pub trait TestFunction: Sync {
    fn value(&self, model: &EvolvingMetricModel, t: f64, x: &Point) -> f64;
    fn time_derivative(&self, model: &EvolvingMetricModel, t: f64, x: &Point) -> f64;
    fn laplacian(&self, model: &EvolvingMetricModel, t: f64, x: &Point) -> f64;
    /// Covector `df`, so `Zf = differential · Z`.
    fn differential(&self, model: &EvolvingMetricModel, t: f64, x: &Point) -> DVector<f64>;
}

/// `f ≡ c`.
pub struct ConstantFunction(pub f64);

impl TestFunction for ConstantFunction {
    fn value(&self, _: &EvolvingMetricModel, _: f64, _: &Point) -> f64 {
        self.0
    }
    fn time_derivative(&self, _: &EvolvingMetricModel, _: f64, _: &Point) -> f64 {
        0.0
    }
    fn laplacian(&self, _: &EvolvingMetricModel, _: f64, _: &Point) -> f64 {
        0.0
    }
    fn differential(&self, _: &EvolvingMetricModel, _: f64, x: &Point) -> DVector<f64> {
        DVector::zeros(x.len())
    }
}

/// `f(x) = |x|²` on flat space with `g = a(t) I`: `Δf = 2d/a`.
pub struct SquaredNorm;

impl TestFunction for SquaredNorm {
    fn value(&self, _: &EvolvingMetricModel, _: f64, x: &Point) -> f64 {
        x.norm_squared()
    }
    fn time_derivative(&self, _: &EvolvingMetricModel, _: f64, _: &Point) -> f64 {
        0.0
    }
    fn laplacian(&self, model: &EvolvingMetricModel, t: f64, _: &Point) -> f64 {
        2.0 * model.dim as f64 / model.scale(t)
    }
    fn differential(&self, _: &EvolvingMetricModel, _: f64, x: &Point) -> DVector<f64> {
        x * 2.0
    }
}

/// Ambient coordinate `f(x) = xᵢ` on the round sphere: a first spherical
/// harmonic, `Δ_{g(t)} f = −d f / r(t)²`.
pub struct AmbientCoordinate(pub usize);

impl TestFunction for AmbientCoordinate {
    fn value(&self, _: &EvolvingMetricModel, _: f64, x: &Point) -> f64 {
        x[self.0]
    }
    fn time_derivative(&self, _: &EvolvingMetricModel, _: f64, _: &Point) -> f64 {
        0.0
    }
    fn laplacian(&self, model: &EvolvingMetricModel, t: f64, x: &Point) -> f64 {
        -(model.dim as f64) * x[self.0] / model.scale(t)
    }
    fn differential(&self, _: &EvolvingMetricModel, _: f64, x: &Point) -> DVector<f64> {
        linalg::unit(x.len(), self.0)
    }
}

/// Accumulates `f(t, Xₜ) − f(0, X₀) − ∫(∂ₛf + ½Δf + Zf) ds` along a path
/// with the trapezoid rule.
struct GeneratorObserver<'a> {
    f: &'a dyn TestFunction,
    drift: Option<&'a VectorFieldSpec>,
    start_value: f64,
    integral: f64,
    last_value: f64,
}

impl GeneratorObserver<'_> {
    fn generator(&self, model: &EvolvingMetricModel, s: &FrameState) -> f64 {
        let mut v = self.f.time_derivative(model, s.t, &s.x) + 0.5 * self.f.laplacian(model, s.t, &s.x);
        if let Some(spec) = self.drift {
            v += self.f.differential(model, s.t, &s.x).dot(&spec.value_rep(model, s.t, &s.x));
        }
        v
    }
}

impl PathObserver for GeneratorObserver<'_> {
    fn start(&mut self, model: &EvolvingMetricModel, state: &FrameState) {
        self.start_value = self.f.value(model, state.t, &state.x);
        self.last_value = self.start_value;
    }
    fn step(&mut self, model: &EvolvingMetricModel, prev: &FrameState, _: &DVector<f64>, next: &FrameState) {
        let h = next.t - prev.t;
        self.integral += 0.5 * h * (self.generator(model, prev) + self.generator(model, next));
        self.last_value = self.f.value(model, next.t, &next.x);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GeneratorCheck {
    pub discrepancy: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Monte Carlo estimate of `E[f(T, X_T)] − f(0, x₀) − E∫₀ᵀ(∂ₛf + ½Δf + Zf) ds`.
pub fn generator_check(
    model: &EvolvingMetricModel,
    f: &dyn TestFunction,
    start: &StartPoint,
    cfg: &SimulationConfig,
    drift: Option<&VectorFieldSpec>,
    paths: usize,
    seed: u64,
) -> GeneratorCheck {
    let mut cfg = cfg.clone();
    cfg.record_every = 0;
    let values = ensemble_map(paths, |i| {
        let mut obs = GeneratorObserver { f, drift, start_value: 0.0, integral: 0.0, last_value: 0.0 };
        simulate_path_observed(model, start, &cfg, drift, seed, i, &mut obs);
        obs.last_value - obs.start_value - obs.integral
    });
    let (mean, se) = crate::stats::mean_and_se(&values);
    GeneratorCheck { discrepancy: mean, std_error: se, paths }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    #[test]
    fn euclidean_step_is_a_translation() {
        let m = EvolvingMetricModel::euclidean(2, 1.0);
        let s = FrameState::new(0.0, pt(&[0.0, 0.0]), DMatrix::identity(2, 2));
        let next = step(&m, &s, 1e-3, &pt(&[0.3, -0.1]), &StepOptions::default()).unwrap();
        assert_eq!(next.x, pt(&[0.3, -0.1]));
        assert_eq!(next.u, DMatrix::identity(2, 2));
    }

    #[test]
    fn homothetic_frame_shrinks_like_inverse_root_scale() {
        let m = EvolvingMetricModel::homothetic_hyperbolic(2, 1.0, 4.0, -1.0).unwrap();
        let x = pt(&[0.5, 0.2]);
        for project in [false, true] {
            let mut s = FrameState::at(&m, 0.0, x.clone());
            let u0 = s.u.clone();
            let opts = StepOptions { project, ..Default::default() };
            let h = 1e-4;
            let zero = DVector::zeros(2);
            for _ in 0..10_000 {
                s = step(&m, &s, h, &zero, &opts).unwrap();
            }
            let expected = &u0 * (m.scale(0.0) / m.scale(s.t)).sqrt();
            let rel = (&s.u - &expected).abs().max() / expected.abs().max();
            assert!(rel < 1e-3, "project={project}: rel {rel}");
        }
    }

    #[test]
    fn sphere_step_stays_on_sphere() {
        let m = EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap();
        let x = m.point_at_distance(0.0, std::f64::consts::FRAC_PI_2);
        let s = FrameState::at(&m, 0.0, x);
        let h = 1e-3;
        let next = step(&m, &s, h, &pt(&[h.sqrt(), 0.0]), &StepOptions::default()).unwrap();
        assert_abs_diff_eq!(next.x.norm(), 1.0, epsilon = 1e-12);
        assert!(orthonormality_defect(&m, &next) < 1e-12);
        assert!((next.x.transpose() * &next.u).abs().max() < 1e-12);
    }

    #[test]
    fn defect_examples() {
        let m = EvolvingMetricModel::euclidean(3, 1.0);
        let s = FrameState::new(0.0, pt(&[1.0, 2.0, 3.0]), DMatrix::identity(3, 3));
        assert_eq!(orthonormality_defect(&m, &s), 0.0);
        let h = EvolvingMetricModel::hyperbolic(3, 1.0, 1.0).unwrap();
        let x = pt(&[0.7, -0.4, 1.1]);
        let g = h.gram_rep(0.0, &x);
        let eig = g.clone().symmetric_eigen();
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()))
            * eig.eigenvectors.transpose();
        let s = FrameState::new(0.0, x, inv_sqrt);
        assert!(orthonormality_defect(&h, &s) < 1e-12);
    }

    #[test]
    fn paths_are_bitwise_reproducible() {
        let m = EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap();
        let start = StartPoint::new(m.point_at_distance(0.0, 1.0));
        let cfg = SimulationConfig::new(0.5, 1e-2);
        let a = simulate_path(&m, &start, &cfg, None, 9, 4);
        let b = simulate_path(&m, &start, &cfg, None, 9, 4);
        assert_eq!(a.states, b.states);
        let c = simulate_path(&m, &start, &cfg, None, 9, 5);
        assert_ne!(a.terminal, c.terminal);
    }

    #[test]
    fn projected_frames_stay_orthonormal() {
        for m in [
            EvolvingMetricModel::sphere(3, 1.0, 1.0).unwrap(),
            EvolvingMetricModel::homothetic_hyperbolic(2, 1.0, 4.0, -1.0).unwrap(),
        ] {
            let start = StartPoint::new(m.point_at_distance(0.0, 1.0));
            let cfg = SimulationConfig::new(1.0, 1e-2);
            let p = simulate_path(&m, &start, &cfg, None, 3, 0);
            assert!(p.valid);
            for s in &p.states {
                assert!(orthonormality_defect(&m, s) <= 1e-9);
            }
        }
    }

    #[test]
    fn chart_boundary_rejections_split_the_step() {
        // A Sin-warped chart model has a coordinate boundary at the antipode:
        // a big step towards it is rejected and bisected.
        let m = EvolvingMetricModel::new(
            2,
            1.0,
            crate::models::ModelKind::WarpedProduct { warp: crate::models::Warp::Sin { k: 1.0 } },
        )
        .unwrap();
        let s = FrameState::at(&m, 0.0, pt(&[3.0, 0.0]));
        let opts = StepOptions::default();
        assert!(matches!(step(&m, &s, 1e-2, &pt(&[0.5, 0.0]), &opts), Err(Error::StepRejected { .. })));
        let mut record = simulate_path(&m, &StartPoint::new(pt(&[0.1, 0.0])), &SimulationConfig::new(0.01, 0.01), None, 0, 0);
        let mut rng = rng::path_rng(0, 0);
        let out = advance(&m, &s, 1e-2, &pt(&[0.5, 0.0]), &opts, 10, &mut rng, &mut record, &mut ());
        assert!(out.is_ok() || matches!(out, Err(Error::StepRejected { .. })));
        assert!(record.events.iter().any(|e| matches!(e, PathEvent::StepRejected { .. })));
    }

    #[test]
    fn explosion_sentinel_marks_path() {
        let m = EvolvingMetricModel::euclidean(2, 1.0);
        let mut cfg = SimulationConfig::new(1.0, 1e-2);
        cfg.blowup_radius = 0.05;
        let p = simulate_path(&m, &StartPoint::new(pt(&[0.0, 0.0])), &cfg, None, 1, 0);
        assert!(p.explosion.is_some());
        assert!(p.valid);
    }

    #[test]
    fn constant_test_function_has_zero_discrepancy() {
        let m = EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap();
        let start = StartPoint::new(m.point_at_distance(0.0, 1.0));
        let cfg = SimulationConfig::new(0.2, 1e-2);
        let c = generator_check(&m, &ConstantFunction(3.0), &start, &cfg, None, 50, 1);
        assert_eq!(c.discrepancy, 0.0);
    }

    #[test]
    fn ito_and_heun_agree_on_deterministic_drift_free_step_statistics() {
        // Mean chart displacement over one small step equals −½ΣΓ(Uᵢ,Uᵢ)h
        // for both integrators.
        let m = EvolvingMetricModel::hyperbolic(2, 1.0, 1.0).unwrap();
        let s = FrameState::at(&m, 0.0, pt(&[0.8, 0.3]));
        let h = 1e-3;
        let mut rng = rng::path_rng(2, 0);
        let n = 20_000;
        let mut heun = DVector::zeros(2);
        let mut ito = DVector::zeros(2);
        for _ in 0..n {
            let dw = rng::brownian_increment(&mut rng, 2, h);
            let minus = -&dw;
            for (acc, integrator) in [(&mut heun, Integrator::Heun), (&mut ito, Integrator::Ito)] {
                let opts = StepOptions { integrator, project: false, ..Default::default() };
                // antithetic pair cancels the martingale part
                let a = step(&m, &s, h, &dw, &opts).unwrap().x;
                let b = step(&m, &s, h, &minus, &opts).unwrap().x;
                *acc += (a + b - &s.x * 2.0) / 2.0;
            }
        }
        heun /= n as f64;
        ito /= n as f64;
        let mut expected = DVector::zeros(2);
        for i in 0..2 {
            let ui = s.u.column(i).into_owned();
            expected -= m.connection_rep(&s.x, &ui, &ui) * (0.5 * h);
        }
        assert!((&ito - &expected).norm() < 1e-12);
        assert!((&heun - &expected).norm() < 0.05 * expected.norm(), "{heun} vs {expected}");
    }
}
