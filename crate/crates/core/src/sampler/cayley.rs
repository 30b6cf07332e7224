//! Analytic sampler for rooted Cayley trees, `T = z·e^T`.
//!
//! With an approximation `t ≥ z·e^t` of `T(z)`, each node first survives a
//! failure test with probability `z·e^t / t` and then gets `Poisson(t)`
//! children. Only the tree shape is produced; labels are not drawn.

use super::draw::{draw_bernoulli, draw_poisson, RandomSource};
use super::{Outcome, SampleError};

/// `t ≥ z·e^t` is tested with this relative slack so that the exact pair
/// `(e⁻¹, 1)` survives the rounding of `e⁻¹·e`.
const ROUNDING_SLACK: f64 = 1e-12;

/// Unlabelled rooted tree stored as its preorder degree sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CayleyShape {
    pub degrees: Vec<u32>,
}

impl CayleyShape {
    pub fn size(&self) -> u64 {
        self.degrees.len() as u64
    }
}

fn success_probability(z: f64, t: f64) -> Result<f64, SampleError> {
    let ok = t > 0.0 && z >= 0.0 && z * t.exp() <= t * (1.0 + ROUNDING_SLACK);
    if !ok {
        return Err(SampleError::InvalidCayley { z, t });
    }
    Ok((z * t.exp() / t).min(1.0))
}

fn run<R: RandomSource + ?Sized>(
    p: f64,
    t: f64,
    rng: &mut R,
    max_size: u64,
    mut record: impl FnMut(u32),
) -> Outcome<()> {
    let mut pending: u64 = 1;
    let mut size: u64 = 0;
    while pending > 0 {
        pending -= 1;
        if !draw_bernoulli(p, rng) {
            return Outcome::Failure { level: 0 };
        }
        size += 1;
        if size > max_size {
            return Outcome::Overflow;
        }
        let k = draw_poisson(t, rng);
        record(k as u32);
        pending += k;
    }
    Outcome::Ok { tree: (), size }
}

/// One attempt. Failures are reported at level 0.
pub fn sample_cayley<R: RandomSource + ?Sized>(
    z: f64,
    t: f64,
    rng: &mut R,
    max_size: u64,
) -> Result<Outcome<CayleyShape>, SampleError> {
    let p = success_probability(z, t)?;
    let mut degrees = Vec::new();
    Ok(match run(p, t, rng, max_size, |k| degrees.push(k)) {
        Outcome::Ok { size, .. } => Outcome::Ok {
            tree: CayleyShape { degrees },
            size,
        },
        Outcome::Failure { level } => Outcome::Failure { level },
        Outcome::Overflow => Outcome::Overflow,
    })
}

/// Same draws as [`sample_cayley`], keeping only the size.
pub fn sample_cayley_size<R: RandomSource + ?Sized>(
    z: f64,
    t: f64,
    rng: &mut R,
    max_size: u64,
) -> Result<Outcome<()>, SampleError> {
    let p = success_probability(z, t)?;
    Ok(run(p, t, rng, max_size, |_| {}))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::seeded_rng;

    #[test]
    fn validity_of_pairs() {
        assert!(success_probability((-1.0f64).exp(), 1.0).unwrap() == 1.0);
        assert!(success_probability(0.4, 1.0).is_err());
        assert!(success_probability(0.1, 0.0).is_err());
        let p = success_probability(0.35, 1.0).unwrap();
        assert!((p - 0.35 * 1f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn shapes_are_preorder_words() {
        let mut rng = seeded_rng(9);
        for _ in 0..500 {
            if let Outcome::Ok { tree, size } = sample_cayley(0.3, 0.9, &mut rng, 10_000).unwrap() {
                assert_eq!(tree.size(), size);
                // Łukasiewicz word: pending count stays positive until the last node
                let mut open: i64 = 1;
                for (i, d) in tree.degrees.iter().enumerate() {
                    open += *d as i64 - 1;
                    assert!(open > 0 || i + 1 == tree.degrees.len());
                }
                assert_eq!(open, 0);
            }
        }
    }

    #[test]
    fn size_only_variant_draws_the_same() {
        let mut a = seeded_rng(4);
        let mut b = seeded_rng(4);
        for _ in 0..200 {
            let full = sample_cayley(0.36, 1.0, &mut a, 1_000).unwrap();
            let lean = sample_cayley_size(0.36, 1.0, &mut b, 1_000).unwrap();
            match (full, lean) {
                (Outcome::Ok { size: x, .. }, Outcome::Ok { size: y, .. }) => assert_eq!(x, y),
                (Outcome::Failure { .. }, Outcome::Failure { .. }) => {}
                (Outcome::Overflow, Outcome::Overflow) => {}
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn exact_pair_never_fails() {
        let mut rng = seeded_rng(1);
        let z = (-1.0f64).exp();
        for _ in 0..300 {
            assert!(!sample_cayley_size(z, 1.0, &mut rng, 10_000)
                .unwrap()
                .is_failure());
        }
    }
}
