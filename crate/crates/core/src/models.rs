//! Evolving-metric model manifolds with closed-form geometry.
//!
//! Every model is a base geometry `g₀` (flat space, a rotationally symmetric
//! warped product `dr² + f(r)² dσ²`, or the unit round sphere) multiplied by a
//! positive scale curve `a(t)`, so `g(t) = a(t) g₀`. Static models use
//! `a ≡ 1`; the round sphere under backwards Ricci flow uses
//! `a(t) = r₀² + (d−1) t`.
//!
//! Two coordinate systems are in play:
//!
//! * the **chart**: geodesic normal coordinates centred at the reference point
//!   `o` (the origin). For a warped product, `r = |x|` is the `g₀`-distance
//!   to `o` and `g₀ = P + (f(r)/r)² Q` with `P = x̂x̂ᵀ`, `Q = I − P`. All
//!   tensor-valued operations ([`metric_jet`](EvolvingMetricModel::metric_jet),
//!   [`distance_jet`](EvolvingMetricModel::distance_jet), ...) take chart points.
//! * the **representation** used by the SDE. It coincides with the chart for
//!   flat and warped models. The round sphere is simulated as unit vectors in
//!   `ℝ^{d+1}` with `o = e₀`, because normal coordinates degenerate at the
//!   antipode, which is exactly where cut-locus behaviour has to be resolved.
//!   Methods with a `_rep` suffix take representation points.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// A point in chart or representation coordinates.
pub type Point = DVector<f64>;

/// Below this base radius warped-product coefficients switch to Taylor series.
const SERIES_RADIUS: f64 = 1e-3;

/// Relative pole tolerance: `ε_pole = 1e-6 · length scale`.
pub const POLE_TOLERANCE: f64 = 1e-6;

/// Warp function `f` of a rotationally symmetric model `dr² + f(r)² dσ²`.
///
/// All catalog warps satisfy `f(0) = 0`, `f'(0) = 1` and are odd, so the
/// metric extends smoothly over the pole.
#[derive(Clone, Debug, PartialEq)]
pub enum Warp {
    /// `sinh(k r)/k`: constant curvature `−k²`.
    Sinh { k: f64 },
    /// `sin(k r)/k`: constant curvature `k²`, antipode at `π/k`.
    Sin { k: f64 },
    /// `r`: flat.
    Identity,
    /// `r·exp(c r²)`.
    GaussianExp { c: f64 },
    /// `r + Σᵢ cᵢ r^{2i+3}`.
    OddPolynomial { coeffs: Vec<f64> },
}

impl Warp {
    pub fn validate(&self) -> Result<()> {
        match self {
            Warp::Sinh { k } | Warp::Sin { k } if !(*k > 0.0 && k.is_finite()) => {
                Err(Error::Config(format!("warp curvature scale must be positive, got {k}")))
            }
            Warp::GaussianExp { c } if !c.is_finite() => {
                Err(Error::Config("warp coefficient must be finite".into()))
            }
            Warp::OddPolynomial { coeffs } if coeffs.iter().any(|c| !c.is_finite()) => {
                Err(Error::Config("polynomial warp coefficients must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// `(f, f', f'')` at `r`.
    pub fn jet(&self, r: f64) -> (f64, f64, f64) {
        match self {
            Warp::Sinh { k } => ((k * r).sinh() / k, (k * r).cosh(), k * (k * r).sinh()),
            Warp::Sin { k } => ((k * r).sin() / k, (k * r).cos(), -k * (k * r).sin()),
            Warp::Identity => (r, 1.0, 0.0),
            Warp::GaussianExp { c } => {
                let e = (c * r * r).exp();
                (r * e, e * (1.0 + 2.0 * c * r * r), e * (6.0 * c * r + 4.0 * c * c * r.powi(3)))
            }
            Warp::OddPolynomial { coeffs } => {
                let (mut f, mut f1, mut f2) = (r, 1.0, 0.0);
                for (i, c) in coeffs.iter().enumerate() {
                    let p = (2 * i + 3) as i32;
                    let pf = p as f64;
                    f += c * r.powi(p);
                    f1 += c * pf * r.powi(p - 1);
                    f2 += c * pf * (pf - 1.0) * r.powi(p - 2);
                }
                (f, f1, f2)
            }
        }
    }

    /// Coefficients `(A, B)` of `f(r) = r + A r³ + B r⁵ + O(r⁷)`.
    fn taylor(&self) -> (f64, f64) {
        match self {
            Warp::Sinh { k } => (k * k / 6.0, k.powi(4) / 120.0),
            Warp::Sin { k } => (-k * k / 6.0, k.powi(4) / 120.0),
            Warp::Identity => (0.0, 0.0),
            Warp::GaussianExp { c } => (*c, c * c / 2.0),
            Warp::OddPolynomial { coeffs } => {
                (coeffs.first().copied().unwrap_or(0.0), coeffs.get(1).copied().unwrap_or(0.0))
            }
        }
    }

    /// Base radius of the antipodal point, if the warp closes up.
    pub fn antipode(&self) -> Option<f64> {
        match self {
            Warp::Sin { k } => Some(PI / k),
            _ => None,
        }
    }

    /// `f''/f` and `(1 − f'²)/f²`, continuous through `r = 0`.
    ///
    /// These are minus the radial sectional curvature and the tangential
    /// sectional curvature of `g₀` respectively.
    pub fn curvature_ratios(&self, r: f64) -> (f64, f64) {
        match self {
            Warp::Sinh { k } => (k * k, -k * k),
            Warp::Sin { k } => (-k * k, k * k),
            Warp::Identity => (0.0, 0.0),
            Warp::GaussianExp { c } => {
                let u = c * r * r;
                let tangential = if u.abs() < 1e-3 {
                    -6.0 * c - 2.0 * c * c * r * r - (4.0 / 3.0) * c.powi(3) * r.powi(4)
                } else {
                    ((-2.0 * u).exp() - (1.0 + 2.0 * u).powi(2)) / (r * r)
                };
                (6.0 * c + 4.0 * c * c * r * r, tangential)
            }
            Warp::OddPolynomial { .. } => {
                if r < SERIES_RADIUS {
                    let (a, b) = self.taylor();
                    let r2 = r * r;
                    (
                        (6.0 * a + 20.0 * b * r2) / (1.0 + a * r2),
                        (-6.0 * a - (9.0 * a * a + 10.0 * b) * r2) / (1.0 + 2.0 * a * r2),
                    )
                } else {
                    let (f, f1, f2) = self.jet(r);
                    (f2 / f, (1.0 - f1 * f1) / (f * f))
                }
            }
        }
    }

    /// Coefficients of the normal-coordinate metric `g₀ = φ I + ψ x xᵀ` and
    /// of its Christoffel symbols (see [`Base::christoffel0`]).
    fn chart_coefficients(&self, r: f64) -> ChartCoefficients {
        if r < SERIES_RADIUS {
            let (a, b) = self.taylor();
            let q = a * a + 2.0 * b;
            let r2 = r * r;
            ChartCoefficients {
                phi: 1.0 + 2.0 * a * r2 + q * r2 * r2,
                psi: -2.0 * a - q * r2,
                alpha: 2.0 * a + 2.0 * q * r2,
                beta: -q,
            }
        } else {
            let (f, f1, _) = self.jet(r);
            let phi = (f / r).powi(2);
            let dphi = 2.0 * f * f1 / (r * r) - 2.0 * f * f / r.powi(3);
            let psi = (1.0 - phi) / (r * r);
            let dpsi = -dphi / (r * r) - 2.0 * (1.0 - phi) / r.powi(3);
            ChartCoefficients { phi, psi, alpha: dphi / (2.0 * r), beta: dpsi / (2.0 * r) }
        }
    }

    fn length_scale(&self) -> f64 {
        match self {
            Warp::Sinh { k } | Warp::Sin { k } => 1.0 / k,
            Warp::GaussianExp { c } if *c != 0.0 => 1.0 / c.abs().sqrt(),
            _ => 1.0,
        }
    }

    /// True when every sectional curvature of `g₀` is `≤ 0` (simply connected
    /// Cartan–Hadamard model: empty cut locus everywhere).
    fn nonpositively_curved(&self) -> bool {
        match self {
            Warp::Sinh { .. } | Warp::Identity => true,
            Warp::Sin { .. } => false,
            Warp::GaussianExp { c } => *c >= 0.0,
            Warp::OddPolynomial { coeffs } => coeffs.iter().all(|c| *c >= 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct ChartCoefficients {
    phi: f64,
    psi: f64,
    alpha: f64,
    beta: f64,
}

/// Time profile `a(t) > 0` of a homothetic family `g(t) = a(t) g₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScaleCurve {
    Constant(f64),
    /// `a₀ + rate·t`.
    Linear { a0: f64, rate: f64 },
    /// `a₀·exp(rate·t)`.
    Exponential { a0: f64, rate: f64 },
}

impl ScaleCurve {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ScaleCurve::Constant(a) => a,
            ScaleCurve::Linear { a0, rate } => a0 + rate * t,
            ScaleCurve::Exponential { a0, rate } => a0 * (rate * t).exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            ScaleCurve::Constant(_) => 0.0,
            ScaleCurve::Linear { rate, .. } => rate,
            ScaleCurve::Exponential { a0, rate } => a0 * rate * (rate * t).exp(),
        }
    }

    /// `∫₀ᵗ ds / a(s)`, the clock of the equivalent fixed-metric motion.
    pub fn clock(&self, t: f64) -> f64 {
        match *self {
            ScaleCurve::Constant(a) => t / a,
            ScaleCurve::Linear { a0, rate } => {
                if rate == 0.0 {
                    t / a0
                } else {
                    ((a0 + rate * t) / a0).ln() / rate
                }
            }
            ScaleCurve::Exponential { a0, rate } => {
                if rate == 0.0 {
                    t / a0
                } else {
                    (1.0 - (-rate * t).exp()) / (a0 * rate)
                }
            }
        }
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        // Every catalog curve is monotone, so the endpoints decide positivity.
        let (a_start, a_end) = (self.value(0.0), self.value(horizon));
        if a_start > 0.0 && a_end > 0.0 && a_start.is_finite() && a_end.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "scale curve must stay positive on [0, {horizon}]: a(0)={a_start}, a(T)={a_end}"
            )))
        }
    }
}

/// Base geometry `g₀` of a model.
#[derive(Clone, Debug, PartialEq)]
pub enum Base {
    Flat,
    Warped(Warp),
    /// Unit round sphere, simulated in ambient coordinates.
    UnitSphere,
}

impl Base {
    /// The warp describing this base in normal coordinates around `o`.
    fn chart_warp(&self) -> Warp {
        match self {
            Base::Flat => Warp::Identity,
            Base::Warped(w) => w.clone(),
            Base::UnitSphere => Warp::Sin { k: 1.0 },
        }
    }

    fn gram0(&self, x: &Point) -> DMatrix<f64> {
        let n = x.len();
        match self {
            Base::Flat => DMatrix::identity(n, n),
            _ => {
                let r = x.norm();
                let c = self.chart_warp().chart_coefficients(r);
                DMatrix::identity(n, n) * c.phi + (x * x.transpose()) * c.psi
            }
        }
    }

    /// Contraction `Γ₀ᵏᵢⱼ uⁱ vʲ` in normal coordinates.
    ///
    /// With `g₀ = φ I + ψ x xᵀ` the first-kind symbols contract to
    /// `w = α(⟨x,u⟩v + ⟨x,v⟩u) + (−α⟨u,v⟩ + β⟨x,u⟩⟨x,v⟩ + ψ⟨u,v⟩) x`,
    /// `α = φ'/(2r)`, `β = ψ'/(2r)`, and `g₀⁻¹ = I/φ − (ψ/φ) x xᵀ`.
    fn christoffel0(&self, x: &Point, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Base::Flat => DVector::zeros(x.len()),
            _ => {
                let c = self.chart_warp().chart_coefficients(x.norm());
                let xu = x.dot(u);
                let xv = x.dot(v);
                let uv = u.dot(v);
                let mut w = v * (c.alpha * xu) + u * (c.alpha * xv);
                w.axpy(-c.alpha * uv + c.beta * xu * xv + c.psi * uv, x, 1.0);
                let xw = x.dot(&w);
                let mut out = w / c.phi;
                out.axpy(-c.psi / c.phi * xw, x, 1.0);
                out
            }
        }
    }

    /// Ricci tensor of `g₀` in normal coordinates.
    fn ricci0(&self, x: &Point, dim: usize) -> DMatrix<f64> {
        let n = x.len();
        if matches!(self, Base::Flat) {
            return DMatrix::zeros(n, n);
        }
        let warp = self.chart_warp();
        let r = x.norm();
        let (radial, tangential) = ricci_eigen_base(&warp, r, dim);
        if r == 0.0 {
            return DMatrix::identity(n, n) * radial;
        }
        let c = warp.chart_coefficients(r);
        let p = (x * x.transpose()) / (r * r);
        let q = DMatrix::identity(n, n) - &p;
        p * radial + q * (tangential * c.phi)
    }
}

/// Ricci eigenvalues of `g₀` on unit radial and unit tangential vectors.
fn ricci_eigen_base(warp: &Warp, r: f64, dim: usize) -> (f64, f64) {
    let (radial_ratio, tangential_sec) = warp.curvature_ratios(r);
    let d1 = (dim - 1) as f64;
    let radial = -d1 * radial_ratio;
    let tangential = -radial_ratio + (dim as f64 - 2.0) * tangential_sec;
    (radial, tangential)
}

/// Catalog of model kinds.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    /// Flat `ℝ^d`, static.
    Euclidean,
    /// Round sphere of radius `r(t)`, `r(t)² = r₀² + (d−1)t`: the exact
    /// backwards Ricci flow `∂g/∂t = Ric`.
    Sphere { r0: f64 },
    /// `g(t) = a(t) g₀`.
    Homothetic { base: Base, scale: ScaleCurve },
    /// Static warped product `dr² + f(r)² dσ²`.
    WarpedProduct { warp: Warp },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    /// Normal coordinates around `o` (dimension `d`).
    Chart,
    /// Unit vectors in `ℝ^{d+1}`, `o = e₀`.
    Ambient,
}

/// Metric, its time derivative, Christoffel symbols and Ricci tensor at a
/// chart point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg_dt: DMatrix<f64>,
    /// `christoffel[k][(i, j)] = Γᵏᵢⱼ`.
    pub christoffel: Vec<DMatrix<f64>>,
    pub ricci: DMatrix<f64>,
}

/// First-order data of `ρ(t, x) = d_{g(t)}(o, x)`.
#[derive(Clone, Debug)]
pub struct DistanceJet {
    pub rho: f64,
    pub drho_dt: f64,
    /// `g(t)`-gradient of `ρ` (a vector, not a covector).
    pub grad_rho: DVector<f64>,
    pub laplacian_rho: f64,
}

/// Radial data in representation coordinates, as the SDE post-processing
/// needs it: `differential` is the covector `dρ`, so `dρ(v) = differential·v`.
#[derive(Clone, Debug)]
pub struct RadialJet {
    pub rho: f64,
    pub drho_dt: f64,
    pub differential: DVector<f64>,
    pub laplacian: f64,
}

impl RadialJet {
    /// `½Δρ + ∂ρ/∂t`, the drift of `ρ(t, Xₜ)` away from `o` and the cut locus.
    pub fn generator_drift(&self) -> f64 {
        0.5 * self.laplacian + self.drho_dt
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperRicciCheck {
    pub holds: bool,
    /// Smallest eigenvalue of `Ric − ∂g/∂t` relative to `g(t)`.
    pub margin: f64,
}

/// A manifold with a time-dependent metric family on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolvingMetricModel {
    pub dim: usize,
    pub horizon: f64,
    pub kind: ModelKind,
}

impl EvolvingMetricModel {
    pub fn new(dim: usize, horizon: f64, kind: ModelKind) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("dimension must be at least 2, got {dim}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        let model = Self { dim, horizon, kind };
        match &model.kind {
            ModelKind::Sphere { r0 } if !(*r0 > 0.0) => {
                return Err(Error::Config(format!("sphere radius must be positive, got {r0}")))
            }
            ModelKind::WarpedProduct { warp } => warp.validate()?,
            ModelKind::Homothetic { base, scale } => {
                if let Base::Warped(w) = base {
                    w.validate()?;
                }
                scale.validate(horizon)?;
            }
            _ => {}
        }
        Ok(model)
    }

    pub fn euclidean(dim: usize, horizon: f64) -> Self {
        Self::new(dim, horizon, ModelKind::Euclidean).expect("valid Euclidean model")
    }

    pub fn sphere(dim: usize, horizon: f64, r0: f64) -> Result<Self> {
        Self::new(dim, horizon, ModelKind::Sphere { r0 })
    }

    /// Static hyperbolic space of curvature `−k²`.
    pub fn hyperbolic(dim: usize, horizon: f64, k: f64) -> Result<Self> {
        Self::new(dim, horizon, ModelKind::WarpedProduct { warp: Warp::Sinh { k } })
    }

    /// `a(t) g_hyp` with `a(t) = a₀ + rate·t`; `rate = −(d−1)` is the exact
    /// backwards Ricci flow of the unit-curvature hyperbolic metric.
    pub fn homothetic_hyperbolic(dim: usize, horizon: f64, a0: f64, rate: f64) -> Result<Self> {
        Self::new(
            dim,
            horizon,
            ModelKind::Homothetic {
                base: Base::Warped(Warp::Sinh { k: 1.0 }),
                scale: ScaleCurve::Linear { a0, rate },
            },
        )
    }

    pub fn base(&self) -> Base {
        match &self.kind {
            ModelKind::Euclidean => Base::Flat,
            ModelKind::Sphere { .. } => Base::UnitSphere,
            ModelKind::Homothetic { base, .. } => base.clone(),
            ModelKind::WarpedProduct { warp } => Base::Warped(warp.clone()),
        }
    }

    pub fn scale_curve(&self) -> ScaleCurve {
        match &self.kind {
            ModelKind::Sphere { r0 } => {
                ScaleCurve::Linear { a0: r0 * r0, rate: (self.dim - 1) as f64 }
            }
            ModelKind::Homothetic { scale, .. } => *scale,
            _ => ScaleCurve::Constant(1.0),
        }
    }

    pub fn scale(&self, t: f64) -> f64 {
        self.scale_curve().value(t)
    }

    pub fn scale_derivative(&self, t: f64) -> f64 {
        self.scale_curve().derivative(t)
    }

    /// Sphere radius `r(t)` for round-sphere models, `√a(t)` in general.
    pub fn radius(&self, t: f64) -> f64 {
        self.scale(t).sqrt()
    }

    pub fn representation(&self) -> Representation {
        match self.base() {
            Base::UnitSphere => Representation::Ambient,
            _ => Representation::Chart,
        }
    }

    pub fn rep_dim(&self) -> usize {
        match self.representation() {
            Representation::Chart => self.dim,
            Representation::Ambient => self.dim + 1,
        }
    }

    /// Characteristic length of `g(0)`, used for the pole tolerance.
    pub fn length_scale(&self) -> f64 {
        let base_scale = match self.base() {
            Base::Flat => 1.0,
            Base::UnitSphere => 1.0,
            Base::Warped(w) => w.length_scale(),
        };
        base_scale * self.scale(0.0).sqrt()
    }

    pub fn pole_tolerance(&self) -> f64 {
        POLE_TOLERANCE * self.length_scale()
    }

    /// Base radius of the antipode of `o` (the `g₀`-cut distance), if any.
    pub fn base_antipode(&self) -> Option<f64> {
        self.base().chart_warp().antipode()
    }

    /// True when the cut locus of `o` is non-empty.
    pub fn has_cut_locus(&self) -> bool {
        self.base_antipode().is_some()
    }

    /// True when `g₀` has no cut points at all (Cartan–Hadamard base).
    pub fn cartan_hadamard(&self) -> bool {
        match self.base() {
            Base::Flat => true,
            Base::UnitSphere => false,
            Base::Warped(w) => w.nonpositively_curved(),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < -1e-12 || t > self.horizon * (1.0 + 1e-12) + 1e-12 || !t.is_finite() {
            Err(Error::Config(format!("time {t} outside [0, {}]", self.horizon)))
        } else {
            Ok(())
        }
    }

    fn check_chart_point(&self, t: f64, x: &Point) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Config(format!(
                "chart point has {} components, model dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if let Some(antipode) = self.base_antipode() {
            if x.norm() >= antipode * (1.0 - 1e-9) {
                return Err(Error::ChartSingularity {
                    t,
                    reason: "normal coordinates degenerate at the antipode".into(),
                });
            }
        }
        Ok(())
    }

    // ----------------------------------------------------------------------
    // Chart-level operations.
    // ----------------------------------------------------------------------

    /// Metric, `∂g/∂t`, Christoffel symbols and Ricci tensor at a chart point.
    ///
    /// Normal coordinates are regular at `o`; the values there are the
    /// continuous limits.
    pub fn metric_jet(&self, t: f64, x: &Point) -> Result<MetricJet> {
        self.check_time(t)?;
        self.check_chart_point(t, x)?;
        let base = self.chart_base();
        let a = self.scale(t);
        let da = self.scale_derivative(t);
        let g0 = base.gram0(x);
        let n = self.dim;
        let mut christoffel = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in i..n {
                let gamma = base.christoffel0(x, &linalg::unit(n, i), &linalg::unit(n, j));
                for k in 0..n {
                    christoffel[k][(i, j)] = gamma[k];
                    christoffel[k][(j, i)] = gamma[k];
                }
            }
        }
        Ok(MetricJet {
            g: &g0 * a,
            dg_dt: &g0 * da,
            christoffel,
            ricci: base.ricci0(x, self.dim),
        })
    }

    fn chart_base(&self) -> Base {
        match self.base() {
            Base::UnitSphere => Base::Warped(Warp::Sin { k: 1.0 }),
            b => b,
        }
    }

    /// `ρ`, `∂ρ/∂t`, `∇ρ` and `Δρ` at a chart point.
    ///
    /// `∂ρ/∂t = ½∫₀^ρ ∂g/∂t(γ̇, γ̇) ds = a'/(2a)·ρ` for every homothetic family.
    pub fn distance_jet(&self, t: f64, x: &Point) -> Result<DistanceJet> {
        self.check_time(t)?;
        self.check_chart_point(t, x)?;
        let a = self.scale(t);
        let sqrt_a = a.sqrt();
        let r = x.norm();
        let rho = sqrt_a * r;
        if rho < self.pole_tolerance() {
            return Err(Error::Pole { t, rho });
        }
        let warp = self.chart_base().chart_warp();
        let (f, f1, _) = warp.jet(r);
        Ok(DistanceJet {
            rho,
            drho_dt: self.scale_derivative(t) / (2.0 * a) * rho,
            grad_rho: x / (r * sqrt_a),
            laplacian_rho: (self.dim - 1) as f64 * f1 / (f * sqrt_a),
        })
    }

    /// `d_{g(t)}(x, Cut_{g(t)}(o))`; `+∞` when the cut locus of `o` is empty.
    pub fn cutlocus_distance(&self, t: f64, x: &Point) -> f64 {
        match self.base_antipode() {
            Some(antipode) => self.scale(t).sqrt() * (antipode - x.norm()).max(0.0),
            None => f64::INFINITY,
        }
    }

    /// Whether `Ric − ∂g/∂t ⪰ 0` at `(t, x)`.
    pub fn check_super_ricci(&self, t: f64, x: &Point) -> Result<SuperRicciCheck> {
        let jet = self.metric_jet(t, x)?;
        let pencil = &jet.ricci - &jet.dg_dt;
        let margin = linalg::pencil_eigenvalues(&pencil, &jet.g)[0];
        let scale = jet.ricci.abs().max().max(jet.dg_dt.abs().max()).max(1.0);
        Ok(SuperRicciCheck { holds: margin >= -1e-12 * scale, margin })
    }

    /// Ricci eigenvalues of `g(t)` on unit radial and unit tangential
    /// vectors at base radius `r`.
    pub fn ricci_unit_eigenvalues(&self, t: f64, r: f64) -> (f64, f64) {
        let (radial, tangential) = ricci_eigen_base(&self.chart_base().chart_warp(), r, self.dim);
        let a = self.scale(t);
        (radial / a, tangential / a)
    }

    /// Sectional curvatures of `g(t)` of radial and tangential planes at base
    /// radius `r` (the tangential value is only meaningful for `d ≥ 3`).
    pub fn sectional_curvatures(&self, t: f64, r: f64) -> (f64, f64) {
        let (radial_ratio, tangential) = self.chart_base().chart_warp().curvature_ratios(r);
        let a = self.scale(t);
        (-radial_ratio / a, tangential / a)
    }

    /// `Ric(γ̇, γ̇)` along the unit-speed `g(t)`-geodesic from `o`, as a
    /// function of arclength `s`.
    pub fn radial_ricci_profile(&self, t: f64) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        let warp = self.chart_base().chart_warp();
        let dim = self.dim;
        let a = self.scale(t);
        let sqrt_a = a.sqrt();
        move |s: f64| ricci_eigen_base(&warp, s / sqrt_a, dim).0 / a
    }

    // ----------------------------------------------------------------------
    // Representation-level operations used by the SDE.
    // ----------------------------------------------------------------------

    /// The reference point `o` in representation coordinates.
    pub fn pole_rep(&self) -> Point {
        let mut p = Point::zeros(self.rep_dim());
        if self.representation() == Representation::Ambient {
            p[0] = 1.0;
        }
        p
    }

    /// The representation point at `g(t)`-distance `rho` from `o` in the
    /// direction of the first chart axis.
    pub fn point_at_distance(&self, t: f64, rho: f64) -> Point {
        let base_r = rho / self.scale(t).sqrt();
        let mut v = Point::zeros(self.dim);
        v[0] = base_r;
        self.from_chart(&v)
    }

    /// Normal coordinates → representation.
    pub fn from_chart(&self, v: &Point) -> Point {
        match self.representation() {
            Representation::Chart => v.clone(),
            Representation::Ambient => {
                let theta = v.norm();
                let mut x = Point::zeros(self.dim + 1);
                x[0] = theta.cos();
                if theta > 0.0 {
                    let s = theta.sin() / theta;
                    for i in 0..self.dim {
                        x[i + 1] = s * v[i];
                    }
                }
                x
            }
        }
    }

    /// Representation → normal coordinates (undefined at the antipode).
    pub fn to_chart(&self, x: &Point) -> Point {
        match self.representation() {
            Representation::Chart => x.clone(),
            Representation::Ambient => {
                let perp = x.rows(1, self.dim).into_owned();
                let sin_part = perp.norm();
                let theta = sin_part.atan2(x[0]);
                if sin_part == 0.0 {
                    Point::zeros(self.dim)
                } else {
                    perp * (theta / sin_part)
                }
            }
        }
    }

    /// `g₀` in representation coordinates (identity on ambient tangent vectors).
    pub fn gram0_rep(&self, x: &Point) -> DMatrix<f64> {
        match self.representation() {
            Representation::Chart => self.base().gram0(x),
            Representation::Ambient => DMatrix::identity(self.dim + 1, self.dim + 1),
        }
    }

    pub fn gram_rep(&self, t: f64, x: &Point) -> DMatrix<f64> {
        self.gram0_rep(x) * self.scale(t)
    }

    /// Levi-Civita transport term: a frame vector `u` moved along `v`
    /// changes by `−connection_rep(x, u, v)`. Scale-invariant.
    pub fn connection_rep(&self, x: &Point, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self.representation() {
            Representation::Chart => self.base().christoffel0(x, u, v),
            // Parallel transport on the unit sphere: V' = −⟨V, x'⟩ x.
            Representation::Ambient => x * u.dot(v),
        }
    }

    /// Pull a drifted point/frame back to the state space (ambient: unit
    /// sphere and its tangent space). No-op in charts.
    pub fn project_rep(&self, x: &mut Point, frame: &mut DMatrix<f64>) {
        if self.representation() == Representation::Ambient {
            let n = x.norm();
            *x /= n;
            let coeffs = x.transpose() * &*frame;
            *frame -= &*x * coeffs;
        }
    }

    /// Whether `x` is inside the chart domain.
    pub fn in_domain_rep(&self, x: &Point) -> bool {
        if !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        match (self.representation(), self.base_antipode()) {
            (Representation::Chart, Some(antipode)) => x.norm() < antipode * (1.0 - 1e-9),
            _ => true,
        }
    }

    /// Norm used by the blow-up sentinel (chart norm; ambient points are bounded).
    pub fn blowup_norm_rep(&self, x: &Point) -> f64 {
        match self.representation() {
            Representation::Chart => x.norm(),
            Representation::Ambient => 0.0,
        }
    }

    /// `g₀`-distance from `o`.
    pub fn base_radius_rep(&self, x: &Point) -> f64 {
        match self.representation() {
            Representation::Chart => x.norm(),
            Representation::Ambient => {
                let perp = x.rows(1, self.dim).norm();
                perp.atan2(x[0])
            }
        }
    }

    /// `ρ(t, x)`; defined everywhere including `o` and the cut locus.
    pub fn rho_rep(&self, t: f64, x: &Point) -> f64 {
        self.scale(t).sqrt() * self.base_radius_rep(x)
    }

    pub fn cut_distance_rep(&self, t: f64, x: &Point) -> f64 {
        match self.base_antipode() {
            Some(antipode) => self.scale(t).sqrt() * (antipode - self.base_radius_rep(x)).max(0.0),
            None => f64::INFINITY,
        }
    }

    /// Radial jet in representation coordinates. Fails at the pole and
    /// exactly on the cut locus.
    pub fn radial_rep(&self, t: f64, x: &Point) -> Result<RadialJet> {
        let a = self.scale(t);
        let sqrt_a = a.sqrt();
        let drift_rate = self.scale_derivative(t) / (2.0 * a);
        let d1 = (self.dim - 1) as f64;
        match self.representation() {
            Representation::Chart => {
                let r = x.norm();
                let rho = sqrt_a * r;
                if rho < self.pole_tolerance() {
                    return Err(Error::Pole { t, rho });
                }
                if let Some(antipode) = self.base_antipode() {
                    if r >= antipode {
                        return Err(Error::CutLocus { t });
                    }
                }
                let (f, f1, _) = self.base().chart_warp().jet(r);
                Ok(RadialJet {
                    rho,
                    drho_dt: drift_rate * rho,
                    differential: x * (sqrt_a / r),
                    laplacian: d1 * f1 / (f * sqrt_a),
                })
            }
            Representation::Ambient => {
                let perp = x.rows(1, self.dim).norm();
                let theta = perp.atan2(x[0]);
                let rho = sqrt_a * theta;
                if rho < self.pole_tolerance() {
                    return Err(Error::Pole { t, rho });
                }
                if perp == 0.0 {
                    return Err(Error::CutLocus { t });
                }
                // dθ on tangent vectors is −(e₀ − cosθ x)/sinθ.
                let mut cov = x * (theta.cos() / perp);
                cov[0] -= 1.0 / perp;
                Ok(RadialJet {
                    rho,
                    drho_dt: drift_rate * rho,
                    differential: cov * sqrt_a,
                    laplacian: d1 * theta.cos() / (perp * sqrt_a),
                })
            }
        }
    }

    /// `d_{g(t)}(x, y)` for models where it is closed form (flat, round and
    /// constant-curvature warps); `None` otherwise.
    pub fn distance_rep(&self, t: f64, x: &Point, y: &Point) -> Option<f64> {
        let sqrt_a = self.scale(t).sqrt();
        match self.representation() {
            Representation::Ambient => {
                let cos = x.dot(y);
                let sin = (x - y * cos).norm();
                Some(sqrt_a * sin.atan2(cos))
            }
            Representation::Chart => match self.base() {
                Base::Flat | Base::Warped(Warp::Identity) => Some(sqrt_a * (x - y).norm()),
                Base::Warped(Warp::Sinh { k }) => {
                    let (r1, r2) = (x.norm(), y.norm());
                    let cos_angle = angle_cosine(x, y);
                    let c = (k * r1).cosh() * (k * r2).cosh()
                        - (k * r1).sinh() * (k * r2).sinh() * cos_angle;
                    Some(sqrt_a * c.max(1.0).acosh() / k)
                }
                Base::Warped(Warp::Sin { k }) => {
                    let (r1, r2) = (x.norm(), y.norm());
                    let cos_angle = angle_cosine(x, y);
                    let c = (k * r1).cos() * (k * r2).cos()
                        + (k * r1).sin() * (k * r2).sin() * cos_angle;
                    Some(sqrt_a * c.clamp(-1.0, 1.0).acos() / k)
                }
                _ => None,
            },
        }
    }

    /// A `g(t)`-orthonormal frame at `x`.
    pub fn initial_frame(&self, t: f64, x: &Point) -> DMatrix<f64> {
        let gram = self.gram_rep(t, x);
        match self.representation() {
            Representation::Chart => linalg::gram_schmidt(&DMatrix::identity(self.dim, self.dim), &gram),
            Representation::Ambient => {
                // Project the ambient basis to the tangent space and keep the d
                // best-conditioned directions.
                let n = self.dim + 1;
                let mut cols: Vec<DVector<f64>> = (0..n)
                    .map(|i| {
                        let e = linalg::unit(n, i);
                        &e - x * x.dot(&e)
                    })
                    .collect();
                cols.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
                let raw = DMatrix::from_columns(&cols[..self.dim]);
                linalg::gram_schmidt(&raw, &gram)
            }
        }
    }
}

fn angle_cosine(x: &Point, y: &Point) -> f64 {
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        1.0
    } else {
        (x.dot(y) / (nx * ny)).clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    /// Christoffel symbols from central differences of the metric.
    fn fd_christoffel(model: &EvolvingMetricModel, t: f64, x: &Point, h: f64) -> Vec<DMatrix<f64>> {
        let n = model.dim;
        let g = model.metric_jet(t, x).unwrap().g;
        let g_inv = g.try_inverse().unwrap();
        // dg[l][(i,j)] = ∂_l g_ij
        let dg: Vec<DMatrix<f64>> = (0..n)
            .map(|l| {
                let e = linalg::unit(n, l) * h;
                let gp = model.metric_jet(t, &(x + &e)).unwrap().g;
                let gm = model.metric_jet(t, &(x - &e)).unwrap().g;
                (gp - gm) / (2.0 * h)
            })
            .collect();
        let mut out = vec![DMatrix::zeros(n, n); n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += 0.5 * g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    out[k][(i, j)] = s;
                }
            }
        }
        out
    }

    /// Ricci tensor from central differences of the analytic Christoffels.
    fn fd_ricci(model: &EvolvingMetricModel, t: f64, x: &Point, h: f64) -> DMatrix<f64> {
        let n = model.dim;
        let gamma = model.metric_jet(t, x).unwrap().christoffel;
        let dgamma: Vec<Vec<DMatrix<f64>>> = (0..n)
            .map(|l| {
                let e = linalg::unit(n, l) * h;
                let gp = model.metric_jet(t, &(x + &e)).unwrap().christoffel;
                let gm = model.metric_jet(t, &(x - &e)).unwrap().christoffel;
                (0..n).map(|k| (&gp[k] - &gm[k]) / (2.0 * h)).collect()
            })
            .collect();
        let mut ric = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                // R_jk = ∂_i Γ^i_jk − ∂_j Γ^i_ik + Γ^i_im Γ^m_jk − Γ^i_jm Γ^m_ik
                let mut s = 0.0;
                for i in 0..n {
                    s += dgamma[i][i][(j, k)] - dgamma[j][i][(i, k)];
                    for m in 0..n {
                        s += gamma[i][(i, m)] * gamma[m][(j, k)] - gamma[i][(j, m)] * gamma[m][(i, k)];
                    }
                }
                ric[(j, k)] = s;
            }
        }
        ric
    }

    fn catalog() -> Vec<EvolvingMetricModel> {
        vec![
            EvolvingMetricModel::euclidean(2, 1.0),
            EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap(),
            EvolvingMetricModel::sphere(3, 1.0, 1.5).unwrap(),
            EvolvingMetricModel::hyperbolic(3, 1.0, 1.0).unwrap(),
            EvolvingMetricModel::homothetic_hyperbolic(2, 1.0, 4.0, -1.0).unwrap(),
            EvolvingMetricModel::new(3, 1.0, ModelKind::WarpedProduct { warp: Warp::GaussianExp { c: 0.3 } })
                .unwrap(),
            EvolvingMetricModel::new(
                3,
                1.0,
                ModelKind::WarpedProduct { warp: Warp::OddPolynomial { coeffs: vec![0.2, 0.05] } },
            )
            .unwrap(),
        ]
    }

    #[test]
    fn euclidean_metric_jet_is_flat() {
        let m = EvolvingMetricModel::euclidean(2, 1.0);
        let jet = m.metric_jet(0.3, &pt(&[1.0, 1.0])).unwrap();
        assert_eq!(jet.g, DMatrix::identity(2, 2));
        assert_eq!(jet.dg_dt, DMatrix::zeros(2, 2));
        assert!(jet.christoffel.iter().all(|c| c.iter().all(|v| *v == 0.0)));
        assert_eq!(jet.ricci, DMatrix::zeros(2, 2));
    }

    #[test]
    fn sphere_ricci_equals_metric_over_radius_squared() {
        let m = EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap();
        let x = pt(&[PI / 2.0, 0.0]);
        let jet = m.metric_jet(0.0, &x).unwrap();
        let expected = &jet.g * (1.0 / m.scale(0.0));
        assert!((&jet.ricci - &expected).abs().max() < 1e-12);
        let fd = fd_ricci(&m, 0.0, &x, 1e-4);
        assert!((&fd - &expected).abs().max() < 1e-6, "fd ricci {fd}");
    }

    #[test]
    fn hyperbolic_warped_radial_ricci() {
        let m = EvolvingMetricModel::hyperbolic(3, 1.0, 1.0).unwrap();
        let x = pt(&[1.0, 0.0, 0.0]);
        let jet = m.metric_jet(0.0, &x).unwrap();
        // Ric(∂r, ∂r) = −(d−1) f''/f = −2
        assert_abs_diff_eq!(jet.ricci[(0, 0)], -2.0, epsilon = 1e-12);
        // constant curvature −1: Ric = −(d−1) g
        assert!((&jet.ricci + &jet.g * 2.0).abs().max() < 1e-12);
    }

    #[test]
    fn christoffels_match_finite_differences() {
        for m in catalog() {
            for x in [pt(&[0.3, -0.2, 0.5]), pt(&[1.1, 0.4, -0.7]), pt(&[0.02, 0.01, 0.0])] {
                let x = x.rows(0, m.dim).into_owned();
                let t = 0.4;
                let analytic = m.metric_jet(t, &x).unwrap().christoffel;
                let mut errors = Vec::new();
                for h in [1e-3, 5e-4] {
                    let fd = fd_christoffel(&m, t, &x, h);
                    let err = (0..m.dim).map(|k| (&fd[k] - &analytic[k]).abs().max()).fold(0.0, f64::max);
                    errors.push(err);
                }
                assert!(errors[0] < 1e-5, "{:?} at {x}: {errors:?}", m.kind);
                // second order: halving h quarters the error (or both at round-off)
                assert!(errors[1] <= errors[0] * 0.3 + 1e-10, "{:?}: {errors:?}", m.kind);
            }
        }
    }

    #[test]
    fn ricci_matches_finite_difference_curvature() {
        for m in catalog() {
            let x = pt(&[0.4, 0.3, -0.2]).rows(0, m.dim).into_owned();
            let analytic = m.metric_jet(0.2, &x).unwrap().ricci;
            let fd = fd_ricci(&m, 0.2, &x, 1e-4);
            assert!((&fd - &analytic).abs().max() < 1e-6, "{:?}\n{fd}\n{analytic}", m.kind);
        }
    }

    #[test]
    fn metric_is_symmetric_positive_definite() {
        for m in catalog() {
            for x in [pt(&[0.0, 0.0, 0.0]), pt(&[0.5, 1.0, -0.5]), pt(&[1e-5, 0.0, 2e-5])] {
                let x = x.rows(0, m.dim).into_owned();
                let jet = m.metric_jet(0.5, &x).unwrap();
                assert!(linalg::max_abs_asymmetry(&jet.g) < 1e-14);
                assert!(linalg::max_abs_asymmetry(&jet.ricci) < 1e-12);
                assert!(jet.g.clone().symmetric_eigenvalues().iter().all(|e| *e > 0.0));
                for c in &jet.christoffel {
                    assert!(linalg::max_abs_asymmetry(c) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn distance_jet_examples() {
        let e = EvolvingMetricModel::euclidean(3, 1.0);
        let j = e.distance_jet(0.0, &pt(&[0.0, 2.0, 0.0])).unwrap();
        assert_abs_diff_eq!(j.rho, 2.0, epsilon = 1e-15);
        assert_eq!(j.drho_dt, 0.0);
        assert_abs_diff_eq!(j.laplacian_rho, 1.0, epsilon = 1e-15);

        let h = EvolvingMetricModel::homothetic_hyperbolic(2, 2.0, 4.0, -1.0).unwrap();
        let j = h.distance_jet(1.0, &pt(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(j.rho, 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(j.drho_dt, -3f64.sqrt() / 6.0, epsilon = 1e-14);

        let s = EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap();
        for theta in [0.3, 1.0, 2.5] {
            let j = s.distance_jet(0.0, &pt(&[0.0, theta])).unwrap();
            assert_abs_diff_eq!(j.rho, theta, epsilon = 1e-14);
            assert_abs_diff_eq!(j.drho_dt, theta / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn distance_jet_pole_and_cut_errors() {
        let s = EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap();
        assert!(matches!(s.distance_jet(0.0, &pt(&[0.0, 0.0])), Err(Error::Pole { .. })));
        assert!(matches!(s.distance_jet(0.0, &pt(&[PI, 0.0])), Err(Error::ChartSingularity { .. })));
        let e = EvolvingMetricModel::euclidean(2, 1.0);
        assert!(matches!(e.distance_jet(0.0, &pt(&[1e-9, 0.0])), Err(Error::Pole { .. })));
    }

    #[test]
    fn gradient_has_unit_length() {
        for m in catalog() {
            for x in [pt(&[0.3, -0.2, 0.5]), pt(&[1.1, 0.4, -0.7])] {
                let x = x.rows(0, m.dim).into_owned();
                let j = m.distance_jet(0.3, &x).unwrap();
                let g = m.metric_jet(0.3, &x).unwrap().g;
                let norm2 = j.grad_rho.dot(&(&g * &j.grad_rho));
                assert_abs_diff_eq!(norm2, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_of_rho_matches_divergence_formula() {
        // Δρ = (1/√det g) ∂_i(√det g g^{ij} ∂_j ρ), evaluated by central differences.
        for m in catalog() {
            let x = pt(&[0.7, 0.2, -0.3]).rows(0, m.dim).into_owned();
            let t = 0.25;
            let h = 1e-4;
            let flux = |y: &Point| -> DVector<f64> {
                let jet = m.metric_jet(t, y).unwrap();
                let sqrt_det = jet.g.determinant().sqrt();
                m.distance_jet(t, y).unwrap().grad_rho * sqrt_det
            };
            let mut div = 0.0;
            for i in 0..m.dim {
                let e = linalg::unit(m.dim, i) * h;
                div += (flux(&(&x + &e))[i] - flux(&(&x - &e))[i]) / (2.0 * h);
            }
            let sqrt_det = m.metric_jet(t, &x).unwrap().g.determinant().sqrt();
            let lap = m.distance_jet(t, &x).unwrap().laplacian_rho;
            assert_abs_diff_eq!(div / sqrt_det, lap, epsilon = 1e-6);
        }
    }

    #[test]
    fn homothety_scaling_of_distance_and_laplacian() {
        let base = EvolvingMetricModel::hyperbolic(3, 1.0, 1.0).unwrap();
        let scaled = EvolvingMetricModel::homothetic_hyperbolic(3, 1.0, 3.0, -2.0).unwrap();
        for t in [0.0, 0.3, 0.9] {
            for x in [pt(&[0.5, 0.1, 0.2]), pt(&[2.0, -1.0, 0.3])] {
                let b = base.distance_jet(0.0, &x).unwrap();
                let s = scaled.distance_jet(t, &x).unwrap();
                let sqrt_a = scaled.scale(t).sqrt();
                assert_abs_diff_eq!(s.rho, sqrt_a * b.rho, epsilon = 1e-12);
                assert_abs_diff_eq!(s.laplacian_rho, b.laplacian_rho / sqrt_a, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sphere_scale_curve_solves_backwards_ricci_flow() {
        for d in 2..5 {
            let m = EvolvingMetricModel::sphere(d, 2.0, 0.7).unwrap();
            for t in [0.0, 0.5, 1.7] {
                let r = m.radius(t);
                let dr = m.scale_derivative(t) / (2.0 * r);
                assert_abs_diff_eq!(2.0 * r * dr, (d - 1) as f64, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn cutlocus_distance_examples() {
        let e = EvolvingMetricModel::euclidean(2, 1.0);
        assert_eq!(e.cutlocus_distance(0.0, &pt(&[3.0, 4.0])), f64::INFINITY);
        let s = EvolvingMetricModel::sphere(2, 5.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.cutlocus_distance(0.0, &pt(&[PI / 2.0, 0.0])), PI / 2.0, epsilon = 1e-14);
        // t = 3: r = 2, ρ = π ⇒ base radius π/2
        assert_abs_diff_eq!(s.radius(3.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.cutlocus_distance(3.0, &pt(&[0.0, PI / 2.0])), PI, epsilon = 1e-14);
    }

    #[test]
    fn super_ricci_examples() {
        let s = EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap();
        let c = s.check_super_ricci(0.5, &pt(&[0.4, 0.9])).unwrap();
        assert!(c.holds);
        assert_abs_diff_eq!(c.margin, 0.0, epsilon = 1e-12);

        let e = EvolvingMetricModel::euclidean(3, 1.0);
        let c = e.check_super_ricci(0.0, &pt(&[0.4, 0.9, 1.0])).unwrap();
        assert!(c.holds);
        assert_eq!(c.margin, 0.0);

        let h = EvolvingMetricModel::homothetic_hyperbolic(2, 1.0, 4.0, -1.0 + 0.5).unwrap();
        let t = 0.6;
        let c = h.check_super_ricci(t, &pt(&[0.8, -0.1])).unwrap();
        assert!(!c.holds);
        // −0.5 relative to g₀, i.e. −0.5/a(t) relative to g(t)
        assert_abs_diff_eq!(c.margin * h.scale(t), -0.5, epsilon = 1e-12);

        let exact = EvolvingMetricModel::homothetic_hyperbolic(2, 1.0, 4.0, -1.0).unwrap();
        let c = exact.check_super_ricci(t, &pt(&[0.8, -0.1])).unwrap();
        assert!(c.holds);
    }

    #[test]
    fn ambient_and_chart_radial_jets_agree() {
        let s = EvolvingMetricModel::sphere(3, 1.0, 1.3).unwrap();
        let v = pt(&[0.4, -1.1, 0.7]);
        let x = s.from_chart(&v);
        assert_abs_diff_eq!(x.norm(), 1.0, epsilon = 1e-15);
        assert!((s.to_chart(&x) - &v).norm() < 1e-14);
        let chart = s.distance_jet(0.4, &v).unwrap();
        let rep = s.radial_rep(0.4, &x).unwrap();
        assert_abs_diff_eq!(chart.rho, rep.rho, epsilon = 1e-14);
        assert_abs_diff_eq!(chart.laplacian_rho, rep.laplacian, epsilon = 1e-12);
        assert_abs_diff_eq!(chart.drho_dt, rep.drho_dt, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_distances_are_consistent_with_rho() {
        for m in [
            EvolvingMetricModel::hyperbolic(2, 1.0, 1.0).unwrap(),
            EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap(),
            EvolvingMetricModel::euclidean(3, 1.0),
        ] {
            let x = m.point_at_distance(0.5, 1.2);
            let d = m.distance_rep(0.5, &m.pole_rep(), &x).unwrap();
            assert_abs_diff_eq!(d, 1.2, epsilon = 1e-12);
            assert_abs_diff_eq!(m.rho_rep(0.5, &x), 1.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_models() {
        assert!(EvolvingMetricModel::new(1, 1.0, ModelKind::Euclidean).is_err());
        assert!(EvolvingMetricModel::sphere(2, 1.0, 0.0).is_err());
        assert!(EvolvingMetricModel::homothetic_hyperbolic(2, 5.0, 4.0, -1.0).is_err());
        assert!(EvolvingMetricModel::hyperbolic(2, 1.0, -1.0).is_err());
    }
}
