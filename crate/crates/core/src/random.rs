//! Seeded samplers.
//!
//! All randomness flows through [`RngHandle`], a ChaCha8 stream keyed by a
//! `(seed, stream)` pair. ChaCha output is platform independent, so a handle
//! replays the same draws everywhere; trials of an experiment use distinct
//! stream numbers and can therefore run in any order or in parallel.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{dot, normal_pdf, DenseMatrix};

#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngHandle {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Handle on another stream of the same seed.
    pub fn with_stream(&self, stream: u64) -> Self {
        RngHandle::new(self.seed, stream)
    }

    /// Derives an independent handle from the next output of this one.
    pub fn fork(&mut self, stream: u64) -> Self {
        let seed = self.inner.next_u64();
        RngHandle::new(seed, stream)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// `m x n` matrix of independent standard normals, filled row by row.
pub fn gaussian_matrix(m: usize, n: usize, rng: &mut RngHandle) -> DenseMatrix {
    let data: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
    DenseMatrix::new(m, n, data).expect("gaussian entries are finite")
}

pub fn gaussian_vector(len: usize, rng: &mut RngHandle) -> Vec<f64> {
    (0..len).map(|_| rng.normal()).collect()
}

/// A draw of `(c, a) ~ N(0, I_{m+1})` conditioned on `c - u^T a <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedColumn {
    pub c: f64,
    pub a: Vec<f64>,
    /// Number of unconditioned draws consumed, including the accepted one.
    pub attempts: usize,
}

/// Samples an objective/constraint column conditioned to have nonpositive
/// reduced cost against the dual vector `u`.
pub fn conditioned_column(u: &[f64], rng: &mut RngHandle) -> Result<ConditionedColumn> {
    if u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::domain("conditioned_column needs a finite u >= 0"));
    }
    let mut attempts = 0;
    loop {
        attempts += 1;
        let c = rng.normal();
        let a = gaussian_vector(u.len(), rng);
        if c - dot(u, &a) <= 0.0 {
            return Ok(ConditionedColumn { c, a, attempts });
        }
    }
}

/// One round of the band rejection sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSample {
    pub x: f64,
    pub y: f64,
    /// `omega * y - x`, always `>= 0`.
    pub z: f64,
    pub accepted: bool,
}

/// Draws `X, Y ~ N(0,1)` conditioned on `Z = omega Y - X >= 0`, then accepts
/// with probability `phi(nu/s) / phi(z/s)` on `z in [0, nu]`, where
/// `s = sqrt(1 + omega^2)`. Accepted `z` is uniform on `[0, nu]`.
pub fn band_sample(omega: f64, nu: f64, rng: &mut RngHandle) -> Result<BandSample> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::domain(format!("band_sample needs omega >= 0, got {omega}")));
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::domain(format!("band_sample needs nu > 0, got {nu}")));
    }
    let s = (1.0 + omega * omega).sqrt();
    let (x, y, z) = loop {
        let x = rng.normal();
        let y = rng.normal();
        let z = omega * y - x;
        if z >= 0.0 {
            break (x, y, z);
        }
    };
    let u = rng.uniform();
    let accepted = z <= nu && u < acceptance_ratio(z, nu, s);
    Ok(BandSample { x, y, z, accepted })
}

#[inline]
pub(crate) fn acceptance_ratio(z: f64, nu: f64, s: f64) -> f64 {
    normal_pdf(nu / s) / normal_pdf(z / s)
}

/// Overall acceptance probability of [`band_sample`]:
/// `2 nu phi(nu / s) / s` with `s = sqrt(1 + omega^2)`.
pub fn band_acceptance_probability(omega: f64, nu: f64) -> f64 {
    let s = (1.0 + omega * omega).sqrt();
    2.0 * nu * normal_pdf(nu / s) / s
}

/// One draw of `sqrt(eps) U + sqrt(1-eps) Z`, `U` uniform on `[-sqrt 3, sqrt 3]`.
pub fn mixture_sample(eps: f64, rng: &mut RngHandle) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::domain(format!("mixture weight {eps} outside [0, 1]")));
    }
    let r3 = 3f64.sqrt();
    let u = (2.0 * rng.uniform() - 1.0) * r3;
    let z = rng.normal();
    Ok(eps.sqrt() * u + (1.0 - eps).sqrt() * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::mixture_density;

    #[test]
    fn same_handle_same_stream() {
        let a = gaussian_matrix(1, 1, &mut RngHandle::new(17, 0));
        let b = gaussian_matrix(1, 1, &mut RngHandle::new(17, 0));
        assert_eq!(a.get(0, 0).to_bits(), b.get(0, 0).to_bits());
        let c = gaussian_matrix(1, 1, &mut RngHandle::new(17, 1));
        assert_ne!(a.get(0, 0).to_bits(), c.get(0, 0).to_bits());
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = RngHandle::new(1, 0);
        let g = gaussian_matrix(1000, 1000, &mut rng);
        let n = g.as_slice().len() as f64;
        let mean = g.as_slice().iter().sum::<f64>() / n;
        let var = g.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.005, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
    }

    #[test]
    fn conditioned_column_zero_u() {
        let mut rng = RngHandle::new(2, 0);
        let (mut draws, mut accepted) = (0usize, 0usize);
        while draws < 100_000 {
            let col = conditioned_column(&[0.0, 0.0], &mut rng).unwrap();
            assert!(col.c <= 0.0);
            draws += col.attempts;
            accepted += 1;
        }
        let rate = accepted as f64 / draws as f64;
        assert!((0.49..=0.51).contains(&rate), "rate {rate}");
    }

    #[test]
    fn conditioned_column_half_normal_mean() {
        let mut rng = RngHandle::new(3, 0);
        let trials = 100_000;
        let mut sum = 0.0;
        for _ in 0..trials {
            let col = conditioned_column(&[1.0], &mut rng).unwrap();
            assert!(col.c - col.a[0] <= 0.0);
            sum += (col.a[0] - col.c) / 2f64.sqrt();
        }
        let mean = sum / trials as f64;
        assert!((mean - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn conditioned_column_rejects_negative_u() {
        assert!(conditioned_column(&[-1.0], &mut RngHandle::new(0, 0)).is_err());
    }

    #[test]
    fn band_sample_identities() {
        let mut rng = RngHandle::new(4, 0);
        for &(omega, nu) in &[(0.0, 0.1), (1.0, 0.5), (3.0, 2.0)] {
            for _ in 0..10_000 {
                let s = band_sample(omega, nu, &mut rng).unwrap();
                assert_eq!(s.z, omega * s.y - s.x);
                assert!(s.z >= 0.0);
                if s.accepted {
                    assert!(s.z <= nu);
                }
            }
        }
        assert!(band_sample(1.0, 0.0, &mut rng).is_err());
        assert!(band_sample(-1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn mixture_sample_support_and_moments() {
        let mut rng = RngHandle::new(5, 0);
        let r3 = 3f64.sqrt();
        let n = 1_000_000;
        let mut m4 = 0.0;
        for _ in 0..n {
            let x = mixture_sample(1.0, &mut rng).unwrap();
            assert!(x.abs() <= r3);
            m4 += x.powi(4);
        }
        m4 /= n as f64;
        assert!((m4 - 9.0 / 5.0).abs() < 0.05, "fourth moment {m4}");

        let draws: Vec<f64> = (0..n).map(|_| mixture_sample(0.5, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((0.99..=1.01).contains(&var), "var {var}");
        assert!(mixture_sample(-0.1, &mut rng).is_err());
    }

    #[test]
    fn mixture_histogram_matches_density() {
        let mut rng = RngHandle::new(6, 0);
        let n = 1_000_000;
        let bins = 200;
        let (lo, hi) = (-5.0, 5.0);
        let width = (hi - lo) / bins as f64;
        for eps in [0.3, 0.8] {
            let mut counts = vec![0usize; bins];
            for _ in 0..n {
                let x = mixture_sample(eps, &mut rng).unwrap();
                if (lo..hi).contains(&x) {
                    counts[((x - lo) / width) as usize] += 1;
                }
            }
            let worst = counts
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let mid = lo + (i as f64 + 0.5) * width;
                    let empirical = *c as f64 / (n as f64 * width);
                    (empirical - mixture_density(eps, mid).unwrap()).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst <= 0.02, "eps={eps} sup deviation {worst}");
        }
    }
}
