//! One-dimensional comparison diffusions `dy = 𝐛(y) dt + dW`: Feller's test
//! for explosion, Euler–Maruyama simulation and explosion tables for
//! manifold ensembles.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::comparison::{k_coth, ComparisonProfile};
use crate::error::{Error, Result};
use crate::frame;
use crate::models::{Base, EvolvingMetricModel, ScaleCurve, Warp};
use crate::rng;
use crate::stats;

/// A time-homogeneous drift `𝐛(y)` for `y > 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum DriftSpec {
    Zero,
    Constant { c: f64 },
    /// `c·y`.
    Linear { c: f64 },
    /// `c·y^p`.
    Power { c: f64, p: f64 },
    /// `(d−1)/(2y)`.
    Bessel { dim: f64 },
    /// `(d−1)/2 · k coth(k y)`.
    Coth { dim: f64, k: f64 },
    /// Radial drift `(d−1) f′/(2f)` of a static warped product.
    RadialModel { dim: usize, warp: Warp },
    /// `F̄(y) + ∫₀^y b(s) ds` built from comparison constants `k₁, r₁`.
    Comparison { k1: f64, r1: f64, extra: Box<DriftSpec> },
    Sum(Vec<DriftSpec>),
    Scaled { factor: f64, inner: Box<DriftSpec> },
}

impl DriftSpec {
    pub fn value(&self, y: f64) -> f64 {
        match self {
            DriftSpec::Zero => 0.0,
            DriftSpec::Constant { c } => *c,
            DriftSpec::Linear { c } => c * y,
            DriftSpec::Power { c, p } => c * y.powf(*p),
            DriftSpec::Bessel { dim } => (dim - 1.0) / (2.0 * y),
            DriftSpec::Coth { dim, k } => 0.5 * (dim - 1.0) * k_coth(*k, y),
            DriftSpec::RadialModel { dim, warp } => {
                let ratio = match warp {
                    Warp::Sinh { k } => k_coth(*k, y),
                    Warp::Identity => 1.0 / y,
                    Warp::Sin { k } => k / (k * y).tan(),
                    _ => {
                        let (f, df, _) = warp.jet(y);
                        df / f
                    }
                };
                0.5 * (*dim as f64 - 1.0) * ratio
            }
            DriftSpec::Comparison { k1, r1, extra } => {
                let s = y.min(*r1);
                k_coth(*k1, s) + k1 * s + extra.antiderivative(y)
            }
            DriftSpec::Sum(parts) => parts.iter().map(|p| p.value(y)).sum(),
            DriftSpec::Scaled { factor, inner } => factor * inner.value(y),
        }
    }

    /// `∫₀^y 𝐛(s) ds`; closed forms where available, Simpson otherwise.
    pub fn antiderivative(&self, y: f64) -> f64 {
        match self {
            DriftSpec::Zero => 0.0,
            DriftSpec::Constant { c } => c * y,
            DriftSpec::Linear { c } => 0.5 * c * y * y,
            DriftSpec::Power { c, p } if *p > -1.0 => c * y.powf(p + 1.0) / (p + 1.0),
            DriftSpec::Sum(parts) => parts.iter().map(|p| p.antiderivative(y)).sum(),
            DriftSpec::Scaled { factor, inner } => factor * inner.antiderivative(y),
            _ => simpson(|s| self.value(s), 0.0, y, 2000),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid drift: {what}")));
        match self {
            DriftSpec::Constant { c } | DriftSpec::Linear { c } if !c.is_finite() => bad("non-finite coefficient"),
            DriftSpec::Power { c, p } if !(c.is_finite() && p.is_finite()) => bad("non-finite power drift"),
            DriftSpec::Bessel { dim } if !(*dim >= 1.0) => bad("Bessel dimension must be at least 1"),
            DriftSpec::Coth { dim, k } if !(*dim >= 1.0 && *k > 0.0) => bad("coth drift needs d ≥ 1 and k > 0"),
            DriftSpec::RadialModel { warp, .. } => warp.validate(),
            DriftSpec::Comparison { k1, r1, extra } => {
                if !(*k1 > 0.0 && *r1 > 0.0) {
                    return bad("comparison constants must be positive");
                }
                extra.validate()
            }
            DriftSpec::Sum(parts) => parts.iter().try_for_each(|p| p.validate()),
            DriftSpec::Scaled { factor, .. } if !factor.is_finite() => bad("non-finite scale factor"),
            DriftSpec::Scaled { inner, .. } => inner.validate(),
            _ => Ok(()),
        }
    }

    /// The radial drift of a model whose radial process is autonomous.
    pub fn from_model(model: &EvolvingMetricModel) -> Result<DriftSpec> {
        let constant = match model.scale_curve() {
            ScaleCurve::Constant(a) => Some(a),
            _ => None,
        };
        let Some(a) = constant else {
            return Err(Error::Config("radial drift is time-dependent for a non-static model".into()));
        };
        let warp = match model.base() {
            Base::Flat => Warp::Identity,
            Base::Warped(w) => w,
            Base::UnitSphere => Warp::Sin { k: 1.0 },
        };
        let warp = if (a - 1.0).abs() < 1e-15 {
            warp
        } else {
            match warp {
                Warp::Sinh { k } => Warp::Sinh { k: k / a.sqrt() },
                Warp::Sin { k } => Warp::Sin { k: k / a.sqrt() },
                Warp::Identity => Warp::Identity,
                _ => return Err(Error::Config("rescaled radial drift only for constant curvature".into())),
            }
        };
        Ok(DriftSpec::RadialModel { dim: model.dim, warp })
    }
}

/// `𝐛 = F̄ + ∫₀^y b`.
pub fn comparison_drift(profile: &ComparisonProfile, b: DriftSpec) -> DriftSpec {
    DriftSpec::Comparison { k1: profile.k1, r1: profile.r1, extra: Box::new(b) }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Explodes,
    DoesNotExplode,
    Inconclusive,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Explodes => "explodes",
            Classification::DoesNotExplode => "does-not-explode",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplosionVerdict {
    pub classification: Classification,
    /// `v(Y_max)`, the Feller integral up to the cutoff.
    pub feller_value: f64,
    pub cutoff: f64,
    /// Tail exponent `p` of the integrand `J(y) ~ y^{−p}` near the cutoff.
    pub tail_exponent: f64,
    /// Bound on `∫_{Y_max}^∞ J` when the tail converges, `∞` otherwise.
    pub tail_bound: f64,
}

/// Feller's test at `+∞` for `dy = 𝐛 dt + dW`.
///
/// With `J(z) = ∫_{y_ref}^z 2 e^{−2(B(z) − B(w))} dw` the Feller integral is
/// `v(Y) = ∫_{y_ref}^Y J`, and `∞` is reached in finite time with positive
/// probability iff `v(∞) < ∞`. `J` solves `J′ = 2 − 2𝐛J`, integrated with an
/// exponential step on a geometric grid. Convergence is read off the decay
/// exponent of `J` over the last decade: `p ≤ 1 + tol` diverges, `p ≥ 1.25`
/// converges with the power-law majorant `J(Y) Y/(p − 1)`.
pub fn feller_test(drift: &DriftSpec, y_ref: f64, y_max: f64, tol: f64) -> Result<ExplosionVerdict> {
    drift.validate()?;
    if !(y_ref > 0.0 && y_max > y_ref) {
        return Err(Error::Config(format!("Feller cutoff {y_max} must exceed y_ref = {y_ref}")));
    }
    let per_decade = 2000usize;
    let decades = (y_max / y_ref).log10();
    let n = (decades * per_decade as f64).ceil().max(per_decade as f64) as usize;
    let ratio = (y_max / y_ref).powf(1.0 / n as f64);
    let mut y = y_ref;
    let mut j = 0.0f64;
    let mut v = stats::CompensatedSum::default();
    let tail_start = y_max / 10.0;
    let mut j_tail = None;
    for _ in 0..n {
        let y_next = (y * ratio).min(y_max);
        let dy = y_next - y;
        let b = drift.value(0.5 * (y + y_next));
        if !b.is_finite() {
            return Err(Error::Overflow { y });
        }
        let x = -2.0 * b * dy;
        // J(y + dy) = J e^{x} + 2 dy φ(x), φ(x) = (e^x − 1)/x.
        let phi = if x.abs() < 1e-8 { 1.0 + 0.5 * x } else { x.exp_m1() / x };
        let j_next = j * x.exp() + 2.0 * dy * phi;
        if !j_next.is_finite() || j_next > 1e300 {
            return Ok(ExplosionVerdict {
                classification: Classification::DoesNotExplode,
                feller_value: f64::INFINITY,
                cutoff: y,
                tail_exponent: f64::NEG_INFINITY,
                tail_bound: f64::INFINITY,
            });
        }
        v.add(0.5 * (j + j_next) * dy);
        if j_tail.is_none() && y_next >= tail_start {
            j_tail = Some((y_next, j_next));
        }
        j = j_next;
        y = y_next;
    }
    let (y0, j0) = j_tail.unwrap_or((y_ref, j));
    let p = -(j / j0).ln() / (y_max / y0).ln();
    let (classification, tail_bound) = if p <= 1.0 + tol {
        (Classification::DoesNotExplode, f64::INFINITY)
    } else if p >= 1.25 {
        (Classification::Explodes, j * y_max / (p - 1.0))
    } else {
        (Classification::Inconclusive, f64::INFINITY)
    };
    Ok(ExplosionVerdict { classification, feller_value: v.value(), cutoff: y_max, tail_exponent: p, tail_bound })
}

/// Outcome of one simulated 1D path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path1d {
    pub explosion_time: Option<f64>,
    pub terminal: f64,
}

/// Euler–Maruyama for `dy = 𝐛(y) dt + dW`, reflected at 0.
///
/// Steps are split by 16 while `y < 10√h` so singular drifts at the origin
/// stay resolved. A crossing of `y_max` is confirmed by re-running the last
/// ten steps from their starting point at `h/4` with fresh noise; the refined
/// run then decides the path.
pub fn simulate_1d(drift: &DriftSpec, y0: f64, horizon: f64, h: f64, seed: u64, index: u64, y_max: f64) -> Path1d {
    let mut rng = rng::path_rng(seed, index);
    let n = (horizon / h).round().max(1.0) as usize;
    let h = horizon / n as f64;
    let segment = 10usize;
    let mut y = y0;
    let mut checkpoint = (0.0, y0);
    for k in 0..n {
        if k % segment == 0 {
            checkpoint = (k as f64 * h, y);
        }
        y = em_step(drift, y, h, &mut rng);
        if !(y < y_max) {
            let (t0, y_start) = checkpoint;
            return refine(drift, y_start, t0, horizon, h / 4.0, y_max, &mut rng);
        }
    }
    Path1d { explosion_time: None, terminal: y }
}

fn em_step<R: Rng>(drift: &DriftSpec, y: f64, h: f64, rng: &mut R) -> f64 {
    let sub = if y < 10.0 * h.sqrt() { 16 } else { 1 };
    let dt = h / sub as f64;
    let mut y = y;
    for _ in 0..sub {
        let z: f64 = rng.sample(StandardNormal);
        y = (y + drift.value(y.max(f64::MIN_POSITIVE)) * dt + dt.sqrt() * z).abs();
        if !y.is_finite() {
            return f64::INFINITY;
        }
    }
    y
}

fn refine<R: Rng>(drift: &DriftSpec, y0: f64, t0: f64, horizon: f64, h: f64, y_max: f64, rng: &mut R) -> Path1d {
    let n = ((horizon - t0) / h).ceil().max(1.0) as usize;
    let h = (horizon - t0) / n as f64;
    let mut y = y0;
    for k in 0..n {
        y = em_step(drift, y, h, rng);
        if !(y < y_max) {
            return Path1d { explosion_time: Some(t0 + (k + 1) as f64 * h), terminal: y };
        }
    }
    Path1d { explosion_time: None, terminal: y }
}

/// Simulation summary of a 1D ensemble.
#[derive(Clone, Debug)]
pub struct Ensemble1d {
    pub paths: Vec<Path1d>,
    pub explosions: usize,
}

impl Ensemble1d {
    pub fn explosion_fraction(&self) -> f64 {
        self.explosions as f64 / self.paths.len().max(1) as f64
    }

    /// Terminal values of the paths that did not explode.
    pub fn terminals(&self) -> Vec<f64> {
        self.paths.iter().filter(|p| p.explosion_time.is_none()).map(|p| p.terminal).collect()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_1d_ensemble(
    drift: &DriftSpec,
    y0: f64,
    horizon: f64,
    h: f64,
    paths: usize,
    seed: u64,
    y_max: f64,
) -> Ensemble1d {
    let paths = frame::ensemble_map(paths, |i| simulate_1d(drift, y0, horizon, h, seed, i, y_max));
    let explosions = paths.iter().filter(|p| p.explosion_time.is_some()).count();
    Ensemble1d { paths, explosions }
}

/// Default cutoff `10⁶·y₀`.
pub fn default_y_max(y0: f64) -> f64 {
    1e6 * y0
}

/// Exit times of a manifold ensemble at a ladder of radii.
#[derive(Clone, Debug)]
pub struct ExitEnsemble {
    pub radii: Vec<f64>,
    /// Per path, the first passage time of each radius.
    pub exit_times: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplosionRow {
    pub radius: f64,
    pub hits: usize,
    pub paths: usize,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct ExplosionTable {
    pub horizon: f64,
    pub confidence: f64,
    pub rows: Vec<ExplosionRow>,
}

impl ExplosionTable {
    /// Non-explosion: upper bound at the largest radius at most `level`,
    /// and neither estimates nor upper bounds increase along the ladder.
    pub fn non_explosion(&self, level: f64) -> bool {
        let last_ok = self.rows.last().is_some_and(|r| r.upper <= level);
        let trend = self.rows.windows(2).all(|w| w[1].estimate <= w[0].estimate && w[1].upper <= w[0].upper);
        last_ok && trend
    }
}

/// `P(sup_{s≤T} ρ ≥ R)` per ladder radius with Wilson intervals.
pub fn explosion_probability(ensemble: &ExitEnsemble, ladder: &[f64], horizon: f64, confidence: f64) -> Result<ExplosionTable> {
    let mut sorted = ladder.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(sorted.len());
    let r_max = sorted.last().copied().ok_or_else(|| Error::Config("empty radius ladder".into()))?;
    if !ensemble.radii.iter().any(|r| (r - r_max).abs() <= 1e-12 * r_max) {
        return Err(Error::Ladder { radius: r_max });
    }
    for radius in sorted {
        let Some(j) = ensemble.radii.iter().position(|r| (r - radius).abs() <= 1e-12 * radius) else {
            return Err(Error::Ladder { radius });
        };
        let n = ensemble.exit_times.len();
        let hits = ensemble.exit_times.iter().filter(|e| e[j].is_some_and(|t| t <= horizon)).count();
        let (lower, upper) = stats::wilson_interval(hits, n, confidence);
        rows.push(ExplosionRow { radius, hits, paths: n, estimate: hits as f64 / n.max(1) as f64, lower, upper });
    }
    Ok(ExplosionTable { horizon, confidence, rows })
}

/// Radial domination: each `ρ` quantile lies below the `y` quantile shifted
/// up by three standard errors of the empirical CDF.
#[derive(Clone, Debug)]
pub struct DominationCheck {
    pub quantiles: Vec<(f64, f64, f64)>,
    pub holds: bool,
}

pub fn radial_domination(rho: &[f64], y: &[f64], levels: &[f64]) -> DominationCheck {
    let mut a = rho.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let n = a.len().min(b.len()).max(1) as f64;
    let quantiles: Vec<(f64, f64, f64)> = levels
        .iter()
        .map(|q| {
            let shifted = (q + 3.0 * (q * (1.0 - q) / n).sqrt()).min(1.0);
            (*q, stats::quantile(&a, *q), stats::quantile(&b, shifted))
        })
        .collect();
    let holds = quantiles.iter().all(|(_, r, y)| r <= y);
    DominationCheck { quantiles, holds }
}

/// The six reference drifts of the Feller catalog.
pub fn feller_catalog(dim: usize) -> Vec<(String, DriftSpec)> {
    let d = dim as f64;
    vec![
        ("zero".into(), DriftSpec::Zero),
        (format!("bessel-{dim}"), DriftSpec::Bessel { dim: d }),
        (format!("coth-{dim}"), DriftSpec::Coth { dim: d, k: 1.0 }),
        ("linear".into(), DriftSpec::Linear { c: 1.0 }),
        ("power-1.5".into(), DriftSpec::Power { c: 1.0, p: 1.5 }),
        ("square".into(), DriftSpec::Power { c: 1.0, p: 2.0 }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent nested-Simpson evaluation of `v(Y)` from a closed-form `B = ∫𝐛`.
    fn feller_oracle(big_b: impl Fn(f64) -> f64, y_ref: f64, y: f64) -> f64 {
        let inner = |z: f64| {
            let bz = big_b(z);
            simpson(|w| 2.0 * (-2.0 * (bz - big_b(w))).exp(), y_ref, z, 4000)
        };
        simpson(inner, y_ref, y, 400)
    }

    #[test]
    fn zero_drift_feller_integral_is_quadratic() {
        let v = feller_test(&DriftSpec::Zero, 1.0, 100.0, 0.05).unwrap();
        // v(Y) = (Y − 1)².
        assert_abs_diff_eq!(v.feller_value, 99.0 * 99.0, epsilon = 1e-6);
        assert_eq!(v.classification, Classification::DoesNotExplode);
    }

    #[test]
    fn feller_matches_nested_simpson() {
        let cases: [(DriftSpec, fn(f64) -> f64); 3] = [
            (DriftSpec::Power { c: 1.0, p: 2.0 }, |z| z * z * z / 3.0),
            (DriftSpec::Coth { dim: 3.0, k: 1.0 }, |z| z.sinh().ln()),
            (DriftSpec::Linear { c: 0.5 }, |z| 0.25 * z * z),
        ];
        for (drift, big_b) in cases {
            let y = 4.0;
            let v = feller_test(&drift, 1.0, y, 0.05).unwrap().feller_value;
            let oracle = feller_oracle(big_b, 1.0, y);
            assert!((v - oracle).abs() <= 1e-5 * oracle.max(1.0), "{drift:?}: {v} vs {oracle}");
        }
    }

    #[test]
    fn catalog_classification() {
        let expect = [false, false, false, false, true, true];
        for ((name, drift), explodes) in feller_catalog(3).iter().zip(expect) {
            let v = feller_test(drift, 1.0, 1e6, 0.05).unwrap();
            let want = if explodes { Classification::Explodes } else { Classification::DoesNotExplode };
            assert_eq!(v.classification, want, "{name}: {v:?}");
        }
    }

    #[test]
    fn inward_drift_overflow_means_no_explosion() {
        let v = feller_test(&DriftSpec::Linear { c: -5.0 }, 1.0, 1e6, 0.05).unwrap();
        assert_eq!(v.classification, Classification::DoesNotExplode);
        assert!(v.feller_value.is_infinite());
    }

    #[test]
    fn comparison_drift_with_constant_b() {
        let p = DriftSpec::Comparison { k1: 1.0, r1: 2.0, extra: Box::new(DriftSpec::Constant { c: 0.7 }) };
        for y in [0.3, 1.0, 5.0] {
            let s = f64::min(y, 2.0);
            assert_abs_diff_eq!(p.value(y), k_coth(1.0, s) + s + 0.7 * y, epsilon = 1e-14);
        }
        assert_eq!(feller_test(&p, 1.0, 1e6, 0.05).unwrap().classification, Classification::DoesNotExplode);
        let bare = DriftSpec::Comparison { k1: 1.0, r1: 2.0, extra: Box::new(DriftSpec::Zero) };
        assert_eq!(feller_test(&bare, 1.0, 1e6, 0.05).unwrap().classification, Classification::DoesNotExplode);
    }

    #[test]
    fn comparison_drift_with_identity_b_explodes() {
        // F̄ + y²/2 grows quadratically.
        let p = DriftSpec::Comparison { k1: 1.0, r1: 2.0, extra: Box::new(DriftSpec::Linear { c: 1.0 }) };
        assert_eq!(feller_test(&p, 1.0, 1e6, 0.05).unwrap().classification, Classification::Explodes);
    }

    #[test]
    fn numeric_antiderivative_matches_closed_form() {
        let coth = DriftSpec::Coth { dim: 3.0, k: 1.0 };
        // ∫ coth = ln sinh, regularized at 0 by ∫ (coth s − 1/s) + ln y.
        let y: f64 = 2.0;
        let exact = (y.sinh() / y).ln();
        let numeric = simpson(|s| coth.value(s) - 1.0 / s, 1e-9, y, 4000);
        assert_abs_diff_eq!(numeric, exact, epsilon = 1e-6);
    }

    #[test]
    fn brownian_motion_rarely_reaches_100() {
        let e = simulate_1d_ensemble(&DriftSpec::Zero, 1.0, 1.0, 1e-2, 2000, 7, 100.0);
        assert!(e.explosion_fraction() <= 1e-3);
    }

    #[test]
    fn square_drift_explodes() {
        let e = simulate_1d_ensemble(&DriftSpec::Power { c: 1.0, p: 2.0 }, 2.0, 5.0, 1e-3, 500, 7, 1e6);
        assert!(e.explosion_fraction() >= 0.99, "{}", e.explosion_fraction());
    }

    #[test]
    fn bessel_three_second_moment() {
        let (y0, t, d) = (1.0, 1.0, 3.0);
        let e = simulate_1d_ensemble(&DriftSpec::Bessel { dim: d }, y0, t, 1e-3, 4000, 11, 1e6);
        let sq: Vec<f64> = e.terminals().iter().map(|y| y * y).collect();
        let (m, se) = stats::mean_and_se(&sq);
        assert!((m - (y0 * y0 + d * t)).abs() <= 4.0 * se + 0.02, "{m} ± {se}");
    }

    #[test]
    fn simulation_is_reproducible() {
        let d = DriftSpec::Coth { dim: 2.0, k: 1.0 };
        assert_eq!(simulate_1d(&d, 1.0, 1.0, 1e-2, 3, 5, 1e6), simulate_1d(&d, 1.0, 1.0, 1e-2, 3, 5, 1e6));
    }

    #[test]
    fn ladder_requires_largest_radius() {
        let ens = ExitEnsemble { radii: vec![5.0, 10.0], exit_times: vec![vec![None, None]] };
        assert!(matches!(explosion_probability(&ens, &[5.0, 10.0, 20.0], 1.0, 0.95), Err(Error::Ladder { .. })));
        let t = explosion_probability(&ens, &[5.0, 10.0], 1.0, 0.95).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].hits, 0);
    }

    #[test]
    fn explosion_table_counts_hits_before_horizon() {
        let ens = ExitEnsemble {
            radii: vec![1.0, 2.0],
            exit_times: vec![vec![Some(0.5), Some(2.0)], vec![Some(0.1), None], vec![None, None]],
        };
        let t = explosion_probability(&ens, &[1.0, 2.0], 1.0, 0.95).unwrap();
        assert_eq!(t.rows[0].hits, 2);
        assert_eq!(t.rows[1].hits, 0);
        assert!(t.rows[0].lower < 2.0 / 3.0 && t.rows[0].upper > 2.0 / 3.0);
    }

    #[test]
    fn domination_detects_a_shift() {
        let y: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let lower: Vec<f64> = y.iter().map(|v| v - 0.1).collect();
        let higher: Vec<f64> = y.iter().map(|v| v + 0.1).collect();
        let levels = [0.1, 0.5, 0.9];
        assert!(radial_domination(&lower, &y, &levels).holds);
        assert!(!radial_domination(&higher, &y, &levels).holds);
    }

    #[test]
    fn model_drift_for_hyperbolic_space() {
        let m = EvolvingMetricModel::hyperbolic(3, 1.0, 1.0).unwrap();
        let d = DriftSpec::from_model(&m).unwrap();
        assert_abs_diff_eq!(d.value(0.7), DriftSpec::Coth { dim: 3.0, k: 1.0 }.value(0.7), epsilon = 1e-12);
        let shrinking = EvolvingMetricModel::homothetic_hyperbolic(2, 1.0, 4.0, -1.0).unwrap();
        assert!(DriftSpec::from_model(&shrinking).is_err());
        assert_abs_diff_eq!(d.value(800.0), 1.0, epsilon = 1e-12);
    }
}
