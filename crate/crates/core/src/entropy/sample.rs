use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{PhasePoint, SurfaceGroup, C64};

/// Accepted states drawn from one RNG substream.
pub const SHARD: usize = 4096;

/// Named substreams of a master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Substream {
    Sampling = 1,
    Probes = 2,
}

/// ChaCha stream `index` of the named substream.
pub fn substream_rng(seed: u64, stream: Substream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 40) | index);
    rng
}

/// Unit phase points distributed by normalized Liouville measure on the
/// unit tangent bundle over the fundamental polygon.
#[derive(Clone, Debug)]
pub struct LiouvilleSample {
    pub states: Vec<PhasePoint>,
    pub seed: u64,
    pub count: usize,
    /// Proposals drawn in the enclosing hyperbolic disk.
    pub proposals: usize,
    /// Acceptance-rate estimate of the polygon area, with its standard error.
    pub area: f64,
    pub area_stderr: f64,
}

impl LiouvilleSample {
    /// Mean of `f` over the states with its standard error.
    pub fn mean_of<F: Fn(&PhasePoint) -> f64>(&self, f: F) -> (f64, f64) {
        let n = self.states.len() as f64;
        let values: Vec<f64> = self.states.iter().map(f).collect();
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

/// Draw `n` states: base points by rejection from the hyperbolic disk of
/// the polygon's circumradius (uniform in hyperbolic area), fiber angles
/// uniform. Shard `k` uses sampling stream `k`, so the result depends only
/// on `seed` and `n`.
pub fn sample_liouville(group: &SurfaceGroup, n: usize, seed: u64) -> Result<LiouvilleSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let cosh_r = group.circumradius().cosh();
    let shards = n.div_ceil(SHARD);
    let parts: Vec<(Vec<PhasePoint>, usize)> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let want = SHARD.min(n - k * SHARD);
            let mut rng = substream_rng(seed, Substream::Sampling, k as u64);
            let mut out = Vec::with_capacity(want);
            let mut tries = 0;
            while out.len() < want {
                tries += 1;
                // cosh ρ is uniform on [1, cosh R] under hyperbolic area
                let rho = (1.0 + rng.gen::<f64>() * (cosh_r - 1.0)).acosh();
                let z = C64::from_polar((0.5 * rho).tanh(), rng.gen_range(0.0..std::f64::consts::TAU));
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                if group.domain_margin(z) >= 0.0 {
                    out.push(PhasePoint::unit_at(z, angle));
                }
            }
            (out, tries)
        })
        .collect();
    let proposals: usize = parts.iter().map(|p| p.1).sum();
    let states: Vec<PhasePoint> = parts.into_iter().flat_map(|p| p.0).collect();
    let disk = std::f64::consts::TAU * (cosh_r - 1.0);
    let rate = n as f64 / proposals as f64;
    Ok(LiouvilleSample {
        count: states.len(),
        states,
        seed,
        proposals,
        area: disk * rate,
        area_stderr: disk * (rate * (1.0 - rate) / proposals as f64).sqrt(),
    })
}
