use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chart singularity at t={t}: {reason}")]
    ChartSingularity { t: f64, reason: String },

    #[error("point within pole tolerance (rho={rho:e}) at t={t}")]
    Pole { t: f64, rho: f64 },

    #[error("point on the cut locus of the reference point at t={t}")]
    CutLocus { t: f64 },

    #[error("step rejected at t={t} with h={h:e}: predictor left the chart domain")]
    StepRejected { t: f64, h: f64 },

    #[error("blow-up radius {radius} exceeded at t={t}")]
    Explosion { t: f64, radius: f64 },

    #[error("degenerate frame: orthonormality defect {defect:e}")]
    DegenerateFrame { defect: f64 },

    #[error("conjugate point at s={s}")]
    ConjugatePoint { s: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("window radius {window} too small: {reason}")]
    WindowTooSmall { window: f64, reason: String },

    #[error("log-domain overflow in Feller integral at y={y}")]
    Overflow { y: f64 },

    #[error("radius ladder entry {radius} was not configured in the simulation stop rules")]
    Ladder { radius: f64 },
}
