//! Seeded, sharded sampling and Kolmogorov–Smirnov distances.
//!
//! A master seed plus a shard index fixes each shard's ChaCha8 stream, and
//! shards have a fixed size, so results do not depend on the thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Draws per shard.
pub const SHARD_SIZE: usize = 1 << 16;

/// Generator for shard `shard` of the run seeded with `seed`.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// `n` draws of `draw`, generated shard by shard in parallel and concatenated
/// in shard order.
pub fn par_draws<T, F>(n: usize, seed: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut dyn RngCore) -> T + Sync,
{
    let shards = n.div_ceil(SHARD_SIZE);
    let parts: Vec<Vec<T>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = shard_rng(seed, s as u64);
            let len = SHARD_SIZE.min(n - s * SHARD_SIZE);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Parallel map over `0..count` where item `i` gets its own stream.
pub fn par_indexed<T, F>(count: usize, seed: u64, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = shard_rng(seed, i as u64);
            job(i, &mut rng)
        })
        .collect()
}

fn sorted<T: Real>(samples: &[T]) -> Result<Vec<T>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered"));
    Ok(v)
}

/// One-sample KS distance `sup |F_n − F|` against a continuous CDF.
pub fn ks_distance<T: Real, F: Fn(T) -> T>(samples: &[T], cdf: F) -> Result<T> {
    let v = sorted(samples)?;
    let n = T::from_usize_lossy(v.len());
    let mut d = T::zero();
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        let above = T::from_usize_lossy(i + 1) / n - f;
        let below = f - T::from_usize_lossy(i) / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Two-sample KS distance.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (T::from_usize_lossy(a.len()), T::from_usize_lossy(b.len()));
    let (mut i, mut j) = (0, 0);
    let mut d = T::zero();
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let diff = (T::from_usize_lossy(i) / na - T::from_usize_lossy(j) / nb).abs();
        d = d.max(diff);
    }
    Ok(d)
}

/// 1% critical value of the one-sample KS statistic, `1.63/√n`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn draws_do_not_depend_on_thread_count() {
        let draw = |rng: &mut dyn RngCore| rng.random::<f64>();
        let a = par_draws(200_000, 11, draw);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| par_draws(200_000, 11, draw));
        assert_eq!(a, b);
        let c = par_draws(200_000, 12, draw);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_draws_pass_ks() {
        let u = par_draws(100_000, 3, |rng: &mut dyn RngCore| rng.random::<f64>());
        let d = ks_distance(&u, |x| x).unwrap();
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn ks_two_sample_of_identical_sets_is_zero() {
        let a = [0.3, 0.1, 0.2];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert!((ks_two_sample(&[0.0_f64, 1.0], &[2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(matches!(ks_distance::<f64, _>(&[], |x| x), Err(Error::EmptySample)));
    }
}
