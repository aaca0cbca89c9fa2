//! Drifted diffusions with generator `½Δ_{g(t)} + Z(t)`.
//!
//! Provides the vector-field catalog, the symmetrized covariant derivative
//! `(∇Z)♭`, the curvature–drift inequality
//! `(∇Z)♭ + ∂g/∂t ≤ Ric + b(ρ) g` and the frame coefficients used to feed
//! `Z` into the frame SDE.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frame::FrameState;
use crate::linalg;
use crate::models::{EvolvingMetricModel, Point, Representation};

/// Frame tolerance used by [`lift_drift`]: frames further than
/// `10 · FRAME_TOLERANCE` from orthonormal are rejected.
pub const FRAME_TOLERANCE: f64 = 1e-9;

/// Relative PSD tolerance of [`check_assumption`].
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Named vector fields.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorFieldSpec {
    Zero,
    /// `c ∇ρ`.
    Radial { c: f64 },
    /// `Z(x) = A x` in normal coordinates (chart models only).
    Linear { matrix: DMatrix<f64> },
    /// `c ∇(ρ^p)`.
    GradRhoPower { p: f64, c: f64 },
}

impl VectorFieldSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, VectorFieldSpec::Zero)
    }

    pub fn validate(&self, model: &EvolvingMetricModel) -> Result<()> {
        match self {
            VectorFieldSpec::Linear { matrix } => {
                if model.representation() == Representation::Ambient {
                    return Err(Error::Config("linear vector fields need a chart model".into()));
                }
                if matrix.nrows() != model.dim || matrix.ncols() != model.dim {
                    return Err(Error::Config(format!(
                        "linear vector field must be {0}x{0}",
                        model.dim
                    )));
                }
                Ok(())
            }
            VectorFieldSpec::GradRhoPower { p, .. } if *p < 1.0 => {
                Err(Error::Config("gradient power must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// For rotationally symmetric fields, `Z = q(r) x` in normal
    /// coordinates; returns `(q, q')` at base radius `r > 0`.
    fn radial_profile(&self, a: f64, r: f64) -> Option<(f64, f64)> {
        let sqrt_a = a.sqrt();
        match *self {
            VectorFieldSpec::Radial { c } => Some((c / (sqrt_a * r), -c / (sqrt_a * r * r))),
            VectorFieldSpec::GradRhoPower { p, c } => {
                let k = c * p * a.powf((p - 2.0) / 2.0);
                Some((k * r.powf(p - 2.0), k * (p - 2.0) * r.powf(p - 3.0)))
            }
            _ => None,
        }
    }

    /// `Z(t, x)` at a chart point.
    pub fn value(&self, model: &EvolvingMetricModel, t: f64, x: &Point) -> DVector<f64> {
        match self {
            VectorFieldSpec::Zero => DVector::zeros(x.len()),
            VectorFieldSpec::Linear { matrix } => matrix * x,
            _ => {
                let r = x.norm();
                if r == 0.0 {
                    return DVector::zeros(x.len());
                }
                let (q, _) = self.radial_profile(model.scale(t), r).expect("radial field");
                x * q
            }
        }
    }

    /// Coordinate Jacobian `∂ᵢZᵏ` (row `k`, column `i`) at a chart point.
    pub fn jacobian(&self, model: &EvolvingMetricModel, t: f64, x: &Point) -> DMatrix<f64> {
        let n = x.len();
        match self {
            VectorFieldSpec::Zero => DMatrix::zeros(n, n),
            VectorFieldSpec::Linear { matrix } => matrix.clone(),
            _ => {
                let r = x.norm();
                let (q, dq) = self.radial_profile(model.scale(t), r).expect("radial field");
                DMatrix::identity(n, n) * q + (x * x.transpose()) * (dq / r)
            }
        }
    }

    /// `Z(t, x)` in representation coordinates (ambient tangent vectors on the sphere).
    pub fn value_rep(&self, model: &EvolvingMetricModel, t: f64, x: &Point) -> DVector<f64> {
        match model.representation() {
            Representation::Chart => self.value(model, t, x),
            Representation::Ambient => {
                let a = model.scale(t);
                let jet = match model.radial_rep(t, x) {
                    Ok(jet) => jet,
                    Err(_) => return DVector::zeros(x.len()),
                };
                // ∇ρ = dρ / a on ambient vectors.
                let grad = jet.differential / a;
                match *self {
                    VectorFieldSpec::Zero => DVector::zeros(x.len()),
                    VectorFieldSpec::Radial { c } => grad * c,
                    VectorFieldSpec::GradRhoPower { p, c } => grad * (c * p * jet.rho.powf(p - 1.0)),
                    VectorFieldSpec::Linear { .. } => unreachable!("rejected by validate"),
                }
            }
        }
    }
}

/// `(∇Z)♭` at a chart point, relative to `g(t)`.
pub fn nabla_flat(
    model: &EvolvingMetricModel,
    spec: &VectorFieldSpec,
    t: f64,
    x: &Point,
) -> Result<DMatrix<f64>> {
    let jet = model.metric_jet(t, x)?;
    let n = model.dim;
    let z = spec.value(model, t, x);
    let mut cov = spec.jacobian(model, t, x);
    for i in 0..n {
        for k in 0..n {
            cov[(k, i)] += (0..n).map(|j| jet.christoffel[k][(i, j)] * z[j]).sum::<f64>();
        }
    }
    let lowered = &jet.g * cov;
    Ok((&lowered + lowered.transpose()) * 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssumptionCheck {
    pub holds: bool,
    /// Smallest pencil eigenvalue of `Ric + b g − (∇Z)♭ − ∂g/∂t` w.r.t. `g(t)`.
    pub margin: f64,
    /// Time of the worst sample.
    pub worst_t: f64,
}

/// Checks `(∇Z)♭ + ∂g/∂t ≤ Ric + b(ρ) g` over sampled `(t, chart point)` pairs.
pub fn check_assumption(
    model: &EvolvingMetricModel,
    spec: &VectorFieldSpec,
    b: &dyn Fn(f64) -> f64,
    grid: &[(f64, Point)],
) -> Result<AssumptionCheck> {
    let mut worst = AssumptionCheck { holds: true, margin: f64::INFINITY, worst_t: 0.0 };
    for (t, x) in grid {
        let jet = model.metric_jet(*t, x)?;
        let rho = model.scale(*t).sqrt() * x.norm();
        let pencil = &jet.ricci + &jet.g * b(rho) - nabla_flat(model, spec, *t, x)? - &jet.dg_dt;
        let margin = linalg::pencil_eigenvalues(&pencil, &jet.g)[0];
        let g_max = jet.g.symmetric_eigenvalues().max();
        if margin < -PSD_TOLERANCE * g_max {
            worst.holds = false;
        }
        if margin < worst.margin {
            worst.margin = margin;
            worst.worst_t = *t;
        }
    }
    Ok(worst)
}

/// Frame coefficients `cᵢ = ⟨Z, U eᵢ⟩_{g(t)}`, without the orthonormality guard.
pub(crate) fn frame_coefficients(
    model: &EvolvingMetricModel,
    spec: &VectorFieldSpec,
    t: f64,
    x: &Point,
    frame: &DMatrix<f64>,
) -> DVector<f64> {
    let z = spec.value_rep(model, t, x);
    frame.transpose() * (model.gram_rep(t, x) * z)
}

/// Expresses `Z(t, x)` in the moving frame so that `Σ cᵢ U eᵢ = Z`.
pub fn lift_drift(
    model: &EvolvingMetricModel,
    state: &FrameState,
    spec: &VectorFieldSpec,
) -> Result<DVector<f64>> {
    let defect = linalg::orthonormality_defect(&state.u, &model.gram_rep(state.t, &state.x));
    if defect > 10.0 * FRAME_TOLERANCE {
        return Err(Error::DegenerateFrame { defect });
    }
    Ok(frame_coefficients(model, spec, state.t, &state.x, &state.u))
}

/// `C_Z = sup_t |Z(t, o)|_{g(t)}` over the given times; rotationally
/// symmetric fields vanish at the pole up to their radial limit.
pub fn drift_constant_at_pole(model: &EvolvingMetricModel, spec: &VectorFieldSpec, times: &[f64]) -> f64 {
    match spec {
        VectorFieldSpec::Radial { c } => c.abs(),
        VectorFieldSpec::GradRhoPower { p, c } if *p == 1.0 => c.abs(),
        _ => times
            .iter()
            .map(|t| {
                let o = Point::zeros(model.dim);
                let z = spec.value(model, *t, &o);
                let g = model.gram_rep(*t, &o);
                z.dot(&(g * &z)).sqrt()
            })
            .fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn pt(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn euclid_grid() -> Vec<(f64, Point)> {
        vec![(0.0, pt(&[0.5, -0.2])), (0.5, pt(&[1.5, 2.0])), (1.0, pt(&[-3.0, 0.1]))]
    }

    #[test]
    fn zero_field_has_zero_nabla() {
        let m = EvolvingMetricModel::hyperbolic(3, 1.0, 1.0).unwrap();
        let n = nabla_flat(&m, &VectorFieldSpec::Zero, 0.2, &pt(&[0.3, 0.1, 0.2])).unwrap();
        assert_eq!(n, DMatrix::zeros(3, 3));
    }

    #[test]
    fn linear_field_in_flat_space_has_identity_nabla() {
        let m = EvolvingMetricModel::euclidean(2, 1.0);
        let spec = VectorFieldSpec::Linear { matrix: DMatrix::identity(2, 2) };
        let n = nabla_flat(&m, &spec, 0.0, &pt(&[0.7, -1.2])).unwrap();
        assert_eq!(n, DMatrix::identity(2, 2));
    }

    #[test]
    fn hessian_of_half_rho_squared_on_hyperbolic_plane() {
        let m = EvolvingMetricModel::hyperbolic(2, 1.0, 1.0).unwrap();
        let spec = VectorFieldSpec::GradRhoPower { p: 2.0, c: 0.5 };
        for rho in [0.3, 1.0, 2.5] {
            let x = pt(&[rho * 0.6, rho * 0.8]);
            let n = nabla_flat(&m, &spec, 0.0, &x).unwrap();
            let g = m.metric_jet(0.0, &x).unwrap().g;
            let eig = linalg::pencil_eigenvalues(&n, &g);
            assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(eig[1], rho / rho.tanh(), epsilon = 1e-10);
        }
    }

    #[test]
    fn euclidean_assumption_examples() {
        let m = EvolvingMetricModel::euclidean(2, 1.0);
        let grid = euclid_grid();
        let c = check_assumption(&m, &VectorFieldSpec::Zero, &|_| 0.0, &grid).unwrap();
        assert!(c.holds);
        assert_eq!(c.margin, 0.0);
        let id = VectorFieldSpec::Linear { matrix: DMatrix::identity(2, 2) };
        let c = check_assumption(&m, &id, &|_| 1.0, &grid).unwrap();
        assert!(c.holds);
        assert_eq!(c.margin, 0.0);
        let twice = VectorFieldSpec::Linear { matrix: DMatrix::identity(2, 2) * 2.0 };
        let c = check_assumption(&m, &twice, &|_| 1.0, &grid).unwrap();
        assert!(!c.holds);
        assert_eq!(c.margin, -1.0);
    }

    #[test]
    fn nabla_flat_matches_finite_differences_of_lowered_field() {
        // (∇Z)♭ = sym(∂(gZ)) − Γ-free part: check via ∇_X Z = ∂_X Z + Γ(X, Z)
        // against the Lie-derivative identity L_Z g = 2 (∇Z)♭.
        let m = EvolvingMetricModel::new(
            3,
            1.0,
            ModelKind::WarpedProduct { warp: crate::models::Warp::GaussianExp { c: 0.2 } },
        )
        .unwrap();
        let spec = VectorFieldSpec::Linear {
            matrix: DMatrix::from_row_slice(3, 3, &[0.1, 0.4, 0.0, -0.3, 0.2, 0.5, 0.0, 0.1, -0.2]),
        };
        let x = pt(&[0.4, -0.3, 0.6]);
        let h = 1e-5;
        let g = m.metric_jet(0.0, &x).unwrap().g;
        let z = spec.value(&m, 0.0, &x);
        let dz = spec.jacobian(&m, 0.0, &x);
        // (L_Z g)_ij = Z^k ∂_k g_ij + g_kj ∂_i Z^k + g_ik ∂_j Z^k
        let mut zdg = DMatrix::zeros(3, 3);
        for k in 0..3 {
            let e = linalg::unit(3, k) * h;
            let gp = m.metric_jet(0.0, &(&x + &e)).unwrap().g;
            let gm = m.metric_jet(0.0, &(&x - &e)).unwrap().g;
            zdg += (gp - gm) * (z[k] / (2.0 * h));
        }
        let lie = zdg + dz.transpose() * &g + &g * &dz;
        let n = nabla_flat(&m, &spec, 0.0, &x).unwrap();
        assert!((lie * 0.5 - n).abs().max() < 1e-8);
    }

    #[test]
    fn assumption_check_is_chart_independent() {
        // Eigenvalues of the pencil do not change under a linear change of
        // basis T: (S, G) → (TᵀST, TᵀGT).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = EvolvingMetricModel::homothetic_hyperbolic(3, 1.0, 4.0, -2.0).unwrap();
        let spec = VectorFieldSpec::GradRhoPower { p: 2.0, c: 0.3 };
        let x = pt(&[0.5, 0.2, -0.4]);
        let jet = m.metric_jet(0.5, &x).unwrap();
        let pencil = &jet.ricci + &jet.g * 0.7 - nabla_flat(&m, &spec, 0.5, &x).unwrap() - &jet.dg_dt;
        let base = linalg::pencil_eigenvalues(&pencil, &jet.g);
        for _ in 0..10 {
            let t = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.0 } + rng.random_range(-0.5..0.5));
            let e = linalg::pencil_eigenvalues(&(t.transpose() * &pencil * &t), &(t.transpose() * &jet.g * &t));
            for (a, b) in base.iter().zip(&e) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn lift_drift_examples() {
        let m = EvolvingMetricModel::euclidean(2, 1.0);
        let state = FrameState::new(0.0, pt(&[0.3, 0.4]), DMatrix::identity(2, 2));
        let c = lift_drift(&m, &state, &VectorFieldSpec::Zero).unwrap();
        assert_eq!(c, DVector::zeros(2));
        let spec = VectorFieldSpec::Linear { matrix: DMatrix::zeros(2, 2) };
        assert_eq!(lift_drift(&m, &state, &spec).unwrap(), DVector::zeros(2));
        let bad = FrameState::new(0.0, pt(&[0.3, 0.4]), DMatrix::identity(2, 2) * 1.1);
        assert!(matches!(lift_drift(&m, &bad, &spec), Err(Error::DegenerateFrame { .. })));
    }

    #[test]
    fn lift_drift_is_an_isometry() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for m in [
            EvolvingMetricModel::hyperbolic(3, 1.0, 1.0).unwrap(),
            EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap(),
        ] {
            let spec = VectorFieldSpec::GradRhoPower { p: 2.0, c: 0.7 };
            for _ in 0..20 {
                let v = DVector::from_fn(m.dim, |_, _| rng.random_range(-1.0..1.0));
                let x = m.from_chart(&v);
                let t = rng.random_range(0.0..1.0);
                let state = FrameState::new(t, x.clone(), m.initial_frame(t, &x));
                let c = lift_drift(&m, &state, &spec).unwrap();
                let z = spec.value_rep(&m, t, &x);
                let g = m.gram_rep(t, &x);
                assert_abs_diff_eq!(c.norm(), z.dot(&(g * &z)).sqrt(), epsilon = 1e-10);
                assert!((&state.u * &c - &z).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn radial_field_has_constant_length() {
        let m = EvolvingMetricModel::homothetic_hyperbolic(2, 1.0, 4.0, -1.0).unwrap();
        let spec = VectorFieldSpec::Radial { c: 0.8 };
        let x = pt(&[1.3, -0.4]);
        let z = spec.value(&m, 0.5, &x);
        let g = m.metric_jet(0.5, &x).unwrap().g;
        assert_abs_diff_eq!(z.dot(&(g * &z)).sqrt(), 0.8, epsilon = 1e-12);
    }
}
