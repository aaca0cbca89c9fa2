//! Comparison geometry: the Jacobi ODE along radial geodesics, the
//! index-form bound `F`, the drift cap `V`, the barrier `F̄` and the model
//! constants `i_M, K, C₁, r₁, k₁, δ₁`.
//!
//! Noncompact models are handled on a compact window: the `g₀`-ball of
//! radius `R_w` around `o`. Every extremization runs over a declared
//! `(t, r)` grid inside the window.

use crate::error::{Error, Result};
use crate::models::{EvolvingMetricModel, Point};

/// Grid and window used by [`constants`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonGrid {
    /// Radius `R_w` of the `g₀`-ball around `o`.
    pub window: f64,
    pub time_points: usize,
    pub space_points: usize,
}

impl ComparisonGrid {
    pub fn new(window: f64) -> Self {
        Self { window, time_points: 64, space_points: 64 }
    }
}

/// Barrier constants of a model over `[0, T]` and a window.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonProfile {
    pub dim: usize,
    /// Lower bound of the injectivity radius over `[0, T]`.
    pub i_m: f64,
    /// `√ sup |sec_{g(t)}|`.
    pub k: f64,
    /// Time-Lipschitz constant of `d_{g(t)}` on the window.
    pub c1: f64,
    /// Radius below `d_{g(t)}(o, Cut_{g(t)}(o))` for all `t`.
    pub r1: f64,
    /// Ricci lower-bound constant `≥ 1` on the `r₁`-ball.
    pub k1: f64,
    /// Excursion scale.
    pub delta1: f64,
    /// Conservative surrogate of the space-time distance from the
    /// geodesic-point set to the space-time cut locus (`∞` without cut locus).
    pub cut_gap: f64,
    pub grid: ComparisonGrid,
    /// Whether `i_M` and `r₁` were capped by the window.
    pub window_capped: bool,
}

impl ComparisonProfile {
    /// `V(r) = ((d−1)/2) K coth(K (r ∧ i_M/3)) + 2C₁`.
    pub fn v(&self, r: f64) -> f64 {
        let capped = r.min(self.i_m / 3.0);
        0.5 * (self.dim - 1) as f64 * k_coth(self.k, capped) + 2.0 * self.c1
    }

    /// `F̄(s) = k₁ coth(k₁ (s ∧ r₁)) + k₁ (s ∧ r₁)`.
    pub fn fbar(&self, s: f64) -> f64 {
        let capped = s.min(self.r1);
        k_coth(self.k1, capped) + self.k1 * capped
    }

    /// The δ-ladder `{δ₁/2, δ₁/4, δ₁/8}`.
    pub fn delta_ladder(&self) -> [f64; 3] {
        [self.delta1 / 2.0, self.delta1 / 4.0, self.delta1 / 8.0]
    }

    /// Key/value lines for run reports.
    pub fn report_lines(&self) -> Vec<(String, String)> {
        vec![
            ("dimension".into(), self.dim.to_string()),
            ("i_M".into(), fmt(self.i_m)),
            ("K".into(), fmt(self.k)),
            ("C1".into(), fmt(self.c1)),
            ("r1".into(), fmt(self.r1)),
            ("k1".into(), fmt(self.k1)),
            ("delta1".into(), fmt(self.delta1)),
            ("cut_gap_surrogate".into(), fmt(self.cut_gap)),
            ("window_radius".into(), fmt(self.grid.window)),
            ("window_capped".into(), self.window_capped.to_string()),
            ("time_grid_points".into(), self.grid.time_points.to_string()),
            ("space_grid_points".into(), self.grid.space_points.to_string()),
        ]
    }
}

fn fmt(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.16e}")
    }
}

/// `k coth(k s)` with the `k → 0` limit `1/s`.
pub fn k_coth(k: f64, s: f64) -> f64 {
    let x = k * s;
    if x.abs() < 1e-6 {
        1.0 / s + k * x / 3.0
    } else {
        k / x.tanh()
    }
}

/// `n` equispaced points on `[lo, hi]`.
pub fn grid(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let n = n.max(1);
    (0..n).map(move |i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// Computes the comparison constants of `model` on `window`, for a path
/// starting at base radius `start_radius`.
pub fn constants(model: &EvolvingMetricModel, window: ComparisonGrid, start_radius: f64) -> Result<ComparisonProfile> {
    if window.time_points == 0 || window.space_points == 0 {
        return Err(Error::Config("comparison grids must be non-empty".into()));
    }
    let antipode = model.base_antipode();
    if !(window.window > 0.0) || start_radius >= window.window {
        return Err(Error::WindowTooSmall {
            window: window.window,
            reason: format!("window must contain o and the start point at base radius {start_radius}"),
        });
    }
    if let Some(a) = antipode {
        if (window.window - a).abs() < 1e-9 * a {
            return Err(Error::WindowTooSmall {
                window: window.window,
                reason: "window boundary passes through the cut locus of o".into(),
            });
        }
    }
    // Base radius actually covered by the window.
    let r_max = antipode.map_or(window.window, |a| window.window.min(a));
    let times: Vec<f64> = grid(window.time_points, 0.0, model.horizon).collect();
    let radii: Vec<f64> = grid(window.space_points, 0.0, r_max).collect();
    let sqrt_a_min = times.iter().map(|t| model.scale(*t).sqrt()).fold(f64::INFINITY, f64::min);
    let sqrt_a_max = times.iter().map(|t| model.scale(*t).sqrt()).fold(0.0, f64::max);

    // Sectional curvature bound.
    let mut sec_abs = 0.0f64;
    let mut sec_pos = 0.0f64;
    for t in &times {
        for r in &radii {
            let (radial, tangential) = model.sectional_curvatures(*t, *r);
            let mut s = vec![radial];
            if model.dim >= 3 {
                s.push(tangential);
            }
            for v in s {
                sec_abs = sec_abs.max(v.abs());
                sec_pos = sec_pos.max(v);
            }
        }
    }
    let k = sec_abs.sqrt();

    // Injectivity radius and the pole-to-cut gap.
    let window_radius_g = sqrt_a_min * r_max;
    let (i_m, r1, window_capped) = match antipode {
        Some(a) => {
            let cut = sqrt_a_min * a;
            (cut, 0.9 * cut, false)
        }
        None if model.cartan_hadamard() => (window_radius_g, window_radius_g, true),
        None => {
            let conj = if sec_pos > 0.0 { std::f64::consts::PI / sec_pos.sqrt() } else { f64::INFINITY };
            (conj.min(window_radius_g), window_radius_g, true)
        }
    };

    // Time-Lipschitz constant of the distance on the window.
    let diameter = match antipode {
        Some(a) => a.min(2.0 * window.window),
        None => 2.0 * window.window,
    };
    let c1 = times
        .iter()
        .map(|t| model.scale_derivative(*t).abs() / (2.0 * model.scale(*t).sqrt()))
        .fold(0.0, f64::max)
        * diameter;

    // Ricci lower bound on the ball sup_t d_{g(t)}(o, x) ≤ r₁.
    let r_k1 = (r1 / sqrt_a_max).min(r_max);
    let mut ric_min = f64::INFINITY;
    for t in &times {
        for r in grid(window.space_points, 0.0, r_k1) {
            let (radial, tangential) = model.ricci_unit_eigenvalues(*t, r);
            ric_min = ric_min.min(radial).min(tangential);
        }
    }
    let k1 = (ric_min.min(0.0).abs() / (model.dim - 1) as f64).sqrt().max(1.0);

    // Distance from the geodesic-point set A to the space-time cut locus.
    let cut_gap = match antipode {
        Some(a) => {
            let mut gap = f64::INFINITY;
            for t in &times {
                let sqrt_a = model.scale(*t).sqrt();
                let cut_radius = sqrt_a * a;
                for rho_x in grid(window.space_points, 2.0 * i_m / 3.0, cut_radius) {
                    // y sits on the o–x geodesic at distance i_M/3 from o; its
                    // cut point with respect to x is the antipode of x.
                    let d_xy = rho_x - i_m / 3.0;
                    gap = gap.min(cut_radius - d_xy);
                }
            }
            gap / (2.0 + c1)
        }
        None => f64::INFINITY,
    };
    let delta1 = cut_gap.min(i_m / (3.0 * (c1 + 1.0)));
    Ok(ComparisonProfile { dim: model.dim, i_m, k, c1, r1, k1, delta1, cut_gap, grid: window, window_capped })
}

/// Default window: the whole manifold for models with a cut locus, else
/// the given radius.
pub fn default_window(model: &EvolvingMetricModel, radius: f64) -> ComparisonGrid {
    match model.base_antipode() {
        Some(a) => ComparisonGrid::new(a * 1.5),
        None => ComparisonGrid::new(radius),
    }
}

/// Solution of `G'' = −ric(s) G/(d−1)`, `G(0) = 0`, `G'(0) = 1` on a uniform grid.
#[derive(Clone)]
pub struct JacobiSolution {
    pub dim: usize,
    pub step: f64,
    pub s: Vec<f64>,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    /// `∫₀ˢ ric`.
    pub ric_integral: Vec<f64>,
    /// `ric(s)` at the grid nodes.
    pub ric: Vec<f64>,
    ric_fn: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for JacobiSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JacobiSolution")
            .field("dim", &self.dim)
            .field("step", &self.step)
            .field("end", &self.s.last())
            .finish_non_exhaustive()
    }
}

type Rk4State = [f64; 3];

fn rk4(f: &dyn Fn(f64) -> f64, d1: f64, s: f64, y: Rk4State, h: f64) -> Rk4State {
    let rhs = |s: f64, y: Rk4State| -> Rk4State {
        let r = f(s);
        [y[1], -r * y[0] / d1, r]
    };
    let k1 = rhs(s, y);
    let add = |y: Rk4State, k: Rk4State, c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2]];
    let k2 = rhs(s + h / 2.0, add(y, k1, h / 2.0));
    let k3 = rhs(s + h / 2.0, add(y, k2, h / 2.0));
    let k4 = rhs(s + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Integrates the Jacobi comparison ODE on `[0, b]` with classical RK4.
///
/// Fails with [`Error::ConjugatePoint`] at the first sign change of `G`.
pub fn solve_jacobi<F>(ric: F, dim: usize, b: f64, step: f64) -> Result<JacobiSolution>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if dim < 2 || !(b > 0.0) || !(step > 0.0) {
        return Err(Error::Config("jacobi solve needs d ≥ 2, b > 0, step > 0".into()));
    }
    let n = (b / step).ceil() as usize;
    let h = b / n as f64;
    let d1 = (dim - 1) as f64;
    let mut sol = JacobiSolution {
        dim,
        step: h,
        s: Vec::with_capacity(n + 1),
        g: Vec::with_capacity(n + 1),
        dg: Vec::with_capacity(n + 1),
        ric_integral: Vec::with_capacity(n + 1),
        ric: Vec::with_capacity(n + 1),
        ric_fn: std::sync::Arc::new(ric),
    };
    let mut y = [0.0, 1.0, 0.0];
    for i in 0..=n {
        let s = i as f64 * h;
        sol.s.push(s);
        sol.g.push(y[0]);
        sol.dg.push(y[1]);
        sol.ric_integral.push(y[2]);
        sol.ric.push((sol.ric_fn)(s));
        if i == n {
            break;
        }
        let next = rk4(&*sol.ric_fn, d1, s, y, h);
        if next[0] <= 0.0 {
            let root = s + h * y[0] / (y[0] - next[0]);
            return Err(Error::ConjugatePoint { s: root });
        }
        y = next;
    }
    Ok(sol)
}

impl JacobiSolution {
    pub fn end(&self) -> f64 {
        *self.s.last().expect("non-empty grid")
    }

    /// `(G, G', ∫ric)` at `r` by a partial RK4 step from the previous node.
    pub fn at(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r > 0.0) || r > self.end() * (1.0 + 1e-12) {
            return Err(Error::Config(format!("r = {r} outside (0, {}]", self.end())));
        }
        let k = ((r / self.step).floor() as usize).min(self.s.len() - 1);
        let y0 = [self.g[k], self.dg[k], self.ric_integral[k]];
        let dr = r - self.s[k];
        let y = if dr > 0.0 { rk4(&*self.ric_fn, (self.dim - 1) as f64, self.s[k], y0, dr) } else { y0 };
        if y[0] <= 0.0 {
            return Err(Error::ConjugatePoint { s: r });
        }
        Ok((y[0], y[1], y[2]))
    }

    /// `F(r) = (d−1)[G'/G − ∫₀ʳ G''/G] = (d−1) G'(r)/G(r) + ∫₀ʳ ric`.
    pub fn index_f(&self, r: f64) -> Result<f64> {
        let (g, dg, ric_int) = self.at(r)?;
        Ok((self.dim - 1) as f64 * dg / g + ric_int)
    }

    /// `F'(r) = −(d−1)(G'/G)²`.
    pub fn index_f_derivative(&self, r: f64) -> Result<f64> {
        let (g, dg, _) = self.at(r)?;
        Ok(-((self.dim - 1) as f64) * (dg / g).powi(2))
    }

    /// `Σᵢ I(Yᵢ, Yᵢ)` for `Yᵢ = (G/G(r)) Xᵢ`, by composite Simpson
    /// quadrature of `(d−1)G'² − G² ric` over the grid nodes up to `r`.
    /// `r` must be an even number of grid steps from 0.
    pub fn index_form_sum(&self, node: usize) -> f64 {
        assert!(node % 2 == 0 && node > 0 && node < self.s.len());
        let d1 = (self.dim - 1) as f64;
        let integrand = |i: usize| d1 * self.dg[i].powi(2) - self.g[i].powi(2) * self.ric[i];
        let mut sum = integrand(0) + integrand(node);
        for i in 1..node {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(i);
        }
        sum * self.step / 3.0 / self.g[node].powi(2)
    }
}

/// Jacobi solution along the radial geodesic of `g(t)` from `o`, up to
/// just before the cut locus or the window edge.
pub fn radial_jacobi(model: &EvolvingMetricModel, profile: &ComparisonProfile, t: f64) -> Result<JacobiSolution> {
    let sqrt_a = model.scale(t).sqrt();
    let r_end = model.base_antipode().map_or(profile.grid.window, |a| a.min(profile.grid.window));
    let b = 0.999 * sqrt_a * r_end;
    solve_jacobi(model.radial_ricci_profile(t), model.dim, b, (b / 2000.0).min(1e-3))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftBoundCheck {
    /// `min F̄(ρ) − (Δρ + 2∂ρ/∂t)` over the samples.
    pub worst_margin: f64,
    pub worst_t: f64,
    pub worst_rho: f64,
    pub samples: usize,
}

/// Evaluates `F̄(ρ) − (Δρ + 2∂ρ/∂t)` over `(t, chart point)` samples.
pub fn drift_bound_check(
    model: &EvolvingMetricModel,
    profile: &ComparisonProfile,
    samples: &[(f64, Point)],
) -> Result<DriftBoundCheck> {
    let mut out = DriftBoundCheck { worst_margin: f64::INFINITY, worst_t: 0.0, worst_rho: 0.0, samples: samples.len() };
    for (t, x) in samples {
        let jet = model.distance_jet(*t, x)?;
        let margin = profile.fbar(jet.rho) - (jet.laplacian_rho + 2.0 * jet.drho_dt);
        if margin < out.worst_margin {
            out = DriftBoundCheck { worst_margin: margin, worst_t: *t, worst_rho: jet.rho, ..out };
        }
    }
    Ok(out)
}

/// A `(t, ρ)` grid of chart points strictly between `o` and the cut locus
/// (or the window edge), along the first chart axis.
pub fn radial_samples(
    model: &EvolvingMetricModel,
    profile: &ComparisonProfile,
    time_points: usize,
    rho_points: usize,
) -> Vec<(f64, Point)> {
    let r_end = model.base_antipode().map_or(profile.grid.window, |a| a.min(profile.grid.window));
    let mut out = Vec::with_capacity(time_points * rho_points);
    for t in grid(time_points, 0.0, model.horizon) {
        for j in 0..rho_points {
            let r = r_end * (j as f64 + 0.5) / rho_points as f64;
            let mut x = Point::zeros(model.dim);
            x[0] = r;
            out.push((t, x));
        }
    }
    out
}
