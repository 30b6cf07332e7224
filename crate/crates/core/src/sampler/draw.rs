//! Elementary random draws.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A seedable stream of uniform reals in `[0, 1)` and uniform 64-bit words.
pub trait RandomSource {
    fn next_u64(&mut self) -> u64;

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl<R: RngCore + ?Sized> RandomSource for R {
    fn next_u64(&mut self) -> u64 {
        RngCore::next_u64(self)
    }
}

/// The default source: ChaCha8 seeded from a 64-bit integer.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `true` with probability `p`.
pub fn draw_bernoulli(p: f64, rng: &mut (impl RandomSource + ?Sized)) -> bool {
    rng.next_f64() < p
}

/// `k` with probability `b^k (1 − b)`, by inversion. Requires `b < 1`.
pub fn draw_geometric(b: f64, rng: &mut (impl RandomSource + ?Sized)) -> u64 {
    assert!(b < 1.0, "geometric parameter {b} must be below 1");
    if b <= 0.0 {
        return 0;
    }
    // 1 − U lies in (0, 1], keeping the logarithm finite
    let u = 1.0 - rng.next_f64();
    let k = (u.ln() / b.ln()).floor();
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

/// Poisson(`t`) by sequential inversion of the cumulative distribution.
pub fn draw_poisson(t: f64, rng: &mut (impl RandomSource + ?Sized)) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    let u = rng.next_f64();
    let mut k = 0u64;
    let mut p = (-t).exp();
    let mut cdf = p;
    while u >= cdf {
        k += 1;
        p *= t / k as f64;
        let next = cdf + p;
        if next == cdf {
            // the tail is below rounding
            break;
        }
        cdf = next;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 100_000;

    fn mean(xs: impl Iterator<Item = f64>) -> f64 {
        let v: Vec<f64> = xs.collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn same_seed_same_stream() {
        let (mut a, mut b) = (seeded_rng(3), seeded_rng(3));
        for _ in 0..100 {
            assert_eq!(
                RandomSource::next_u64(&mut a),
                RandomSource::next_u64(&mut b)
            );
        }
        let mut c = seeded_rng(4);
        assert_ne!(
            RandomSource::next_u64(&mut seeded_rng(3)),
            RandomSource::next_u64(&mut c)
        );
    }

    #[test]
    fn uniform_range() {
        let mut rng = seeded_rng(1);
        for _ in 0..N {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn bernoulli_edges_and_mean() {
        let mut rng = seeded_rng(11);
        assert!((0..1000).all(|_| !draw_bernoulli(0.0, &mut rng)));
        assert!((0..1000).all(|_| draw_bernoulli(1.0, &mut rng)));
        let m = mean((0..N).map(|_| draw_bernoulli(0.5, &mut rng) as u8 as f64));
        // 3σ = 3·sqrt(0.25/1e5)
        assert!((m - 0.5).abs() < 0.0047, "{m}");
    }

    #[test]
    fn geometric_law() {
        let mut rng = seeded_rng(12);
        assert!((0..1000).all(|_| draw_geometric(0.0, &mut rng) == 0));
        let draws: Vec<u64> = (0..N).map(|_| draw_geometric(0.5, &mut rng)).collect();
        let m = mean(draws.iter().map(|&k| k as f64));
        // mean b/(1−b) = 1, variance b/(1−b)² = 2
        assert!((m - 1.0).abs() < 3.0 * (2.0f64 / N as f64).sqrt(), "{m}");
        let p0 = draws.iter().filter(|&&k| k == 0).count() as f64 / N as f64;
        assert!((p0 - 0.5).abs() < 0.0047, "{p0}");
    }

    #[test]
    #[should_panic]
    fn geometric_rejects_unit_parameter() {
        draw_geometric(1.0, &mut seeded_rng(0));
    }

    #[test]
    fn poisson_law() {
        let mut rng = seeded_rng(13);
        assert!((0..1000).all(|_| draw_poisson(0.0, &mut rng) == 0));
        let draws: Vec<u64> = (0..N).map(|_| draw_poisson(1.0, &mut rng)).collect();
        let m = mean(draws.iter().map(|&k| k as f64));
        assert!((m - 1.0).abs() < 3.0 * (1.0f64 / N as f64).sqrt(), "{m}");
        let p0 = draws.iter().filter(|&&k| k == 0).count() as f64 / N as f64;
        let e = (-1.0f64).exp();
        assert!(
            (p0 - e).abs() < 3.0 * (e * (1.0 - e) / N as f64).sqrt(),
            "{p0}"
        );
    }
}
