//! Reproducible Monte Carlo: counter-based substreams and moment estimates.
//!
//! A stream is identified by `(seed, stream_id)`. The generator is ChaCha8 keyed by
//! the seed with the stream id as its 64-bit stream counter, so any substream can be
//! materialised independently of every other one and of the worker that runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream for replicate `index` of the experiment keyed by this stream's seed.
    pub fn replicate(&self, index: u64) -> Self {
        Self::new(self.seed, index)
    }

    /// Derive an independent seed for a named experiment (splitmix64 mixing).
    pub fn derive(seed: u64, tag: &str) -> Self {
        let mut z = seed;
        for b in tag.bytes() {
            z = splitmix64(z ^ u64::from(b));
        }
        Self::new(splitmix64(z), 0)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample mean with its standard error `sd / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl McEstimate {
    /// Summarise values in the given order (two-pass, order-fixed).
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(HlikError::InvalidInput("need at least two draws".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(HlikError::NonFinite(format!("Monte Carlo draw {bad}")));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let var = ss / (n as f64 - 1.0);
        Ok(Self {
            mean,
            se: (var / n as f64).sqrt(),
            n,
        })
    }

    /// |mean − target| ≤ k·SE, with a floor for zero-variance estimates.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se + 1e-12 * target.abs().max(1.0)
    }

    pub fn sd(&self) -> f64 {
        self.se * (self.n as f64).sqrt()
    }
}

/// Sample variance with a delta-method standard error computed from the fourth
/// central moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub variance: f64,
    pub se: f64,
    pub n: usize,
}

impl VarianceEstimate {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let m = McEstimate::from_values(values)?;
        let n = values.len() as f64;
        let sq: Vec<f64> = values.iter().map(|v| (v - m.mean) * (v - m.mean)).collect();
        let var = sq.iter().sum::<f64>() / (n - 1.0);
        let m4 = sq.iter().map(|s| s * s).sum::<f64>() / n;
        let s2 = var * (n - 1.0) / n;
        Ok(Self {
            variance: var,
            se: ((m4 - s2 * s2).max(0.0) / n).sqrt(),
            n: values.len(),
        })
    }

    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.variance - target).abs() <= k * self.se
    }
}

/// Evaluate `work` for replicate indices `0..n` in parallel and return results in
/// index order. Each replicate receives its own substream of `base`.
pub fn map_replicates<T, F>(n: usize, base: RngStream, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = base.replicate(i as u64).rng();
            work(i, &mut rng)
        })
        .collect()
}

/// Monte Carlo estimate of `E[g(X)]` with `X` drawn by `sampler` from a single stream.
pub fn mc_expect<T, G, S>(g: G, sampler: S, n: usize, stream: RngStream) -> Result<McEstimate>
where
    G: Fn(&T) -> f64,
    S: rand::distr::Distribution<T>,
{
    if n < 2 {
        return Err(HlikError::InvalidInput(format!("mc_expect needs n >= 2, got {n}")));
    }
    let mut rng = stream.rng();
    let values: Vec<f64> = (0..n).map(|_| g(&sampler.sample(&mut rng))).collect();
    McEstimate::from_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::Exp1;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = RngStream::new(7, 3).rng();
            (0..5).map(|_| r.random()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RngStream::new(7, 3).rng();
            (0..5).map(|_| r.random()).collect()
        };
        let c: Vec<u64> = {
            let mut r = RngStream::new(7, 4).rng();
            (0..5).map(|_| r.random()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(RngStream::derive(1, "a"), RngStream::derive(1, "b"));
    }

    #[test]
    fn replicate_map_is_order_stable_across_pools() {
        let work = |i: usize, rng: &mut ChaCha8Rng| i as f64 + rng.random::<f64>();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let base = RngStream::new(11, 0);
        let a = one.install(|| map_replicates(1000, base, work));
        let b = four.install(|| map_replicates(1000, base, work));
        assert_eq!(a, b);
    }

    #[test]
    fn exponential_mean() {
        let est = mc_expect(|x: &f64| *x, Exp1, 1_000_000, RngStream::new(1, 0)).unwrap();
        assert!(est.within(1.0, 3.0), "{est:?}");
    }

    #[test]
    fn rejects_tiny_samples_and_non_finite_draws() {
        assert!(mc_expect(|x: &f64| *x, Exp1, 1, RngStream::new(1, 0)).is_err());
        let err = mc_expect(|_: &f64| f64::INFINITY, Exp1, 10, RngStream::new(1, 0)).unwrap_err();
        assert!(matches!(err, HlikError::NonFinite(_)));
    }

    #[test]
    fn variance_estimate_of_constant_shift() {
        let vals: Vec<f64> = (0..1000).map(|i| (i % 2) as f64).collect();
        let v = VarianceEstimate::from_values(&vals).unwrap();
        assert!((v.variance - 0.25 * 1000.0 / 999.0).abs() < 1e-12);
    }
}
