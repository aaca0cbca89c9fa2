//! Per-path random streams.
//!
//! Every path draws from its own ChaCha8 stream selected by the path index,
//! so ensembles are bit-identical regardless of how paths are scheduled on
//! worker threads.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent generator for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Brownian increment with covariance `h·I`.
pub fn brownian_increment<R: Rng + ?Sized>(rng: &mut R, dim: usize, h: f64) -> DVector<f64> {
    let s = h.sqrt();
    DVector::from_fn(dim, |_, _| s * rng.sample::<f64, _>(StandardNormal))
}
