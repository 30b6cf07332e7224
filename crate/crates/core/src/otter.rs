//! Otter trees (non-plane binary trees counted by leaves),
//! `V = atom + mset2(V)`.
//!
//! The level values satisfy `v[i] ≥ z^(2^i) + (v[i]² + v[i+1])/2`. Levels
//! `0..=i0` are solved with equality, so expanding them never fails; beyond
//! `i0` the tail `v[i] = K·z^(2^i)` is used, with `K` the smallest constant
//! that keeps every tail level valid.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::grammar::Grammar;
use crate::oracle::{level_arg, Coordinates, MAX_LEVEL};
use crate::sampler::{Outcome, RandomSource, SampleError, Sampler, TermTree};
use crate::tuning::{find_singularity_bisection, TuneError};

pub const OTTER_SPEC: &str = "V = atom + mset2(V);";
pub const OTTER_CLASS: &str = "V";

/// Relative step used when `K` has to be pushed up to satisfy its inequality
/// in floating point.
const K_NUDGE: f64 = 1.0 / (1u64 << 40) as f64;
/// Relative distance kept from the estimated singularity in auto mode.
const AUTO_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OtterError {
    #[error("z = {0} is outside [0, 1)")]
    ZOutOfRange(f64),
    #[error("threshold i0 = {i0} is too low for z = {z}: no tail constant exists")]
    NoTailConstant { z: f64, i0: u32 },
    #[error("tail constant {0} must exceed 1")]
    TailConstant(f64),
    #[error(
        "negative radicand at level {level}: z is beyond the singularity of the truncated system"
    )]
    NegativeRadicand { level: u32 },
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Threshold making `z^(2^(i0+1))` negligible: `max(8, ⌈log₂(ln 1e-12 / ln z)⌉)`.
pub fn default_i0(z: f64) -> u32 {
    if !(z > 0.0 && z < 1.0) {
        return 8;
    }
    let need = ((1e-12f64).ln() / z.ln()).log2().ceil();
    (need.max(8.0) as u32).min(MAX_LEVEL - 1)
}

/// Whether the tail value `K·z^(2^i)` satisfies its inequality at `level`,
/// evaluated the way the validity check does.
fn tail_holds(z: f64, level: u32, k: f64) -> bool {
    let x = level_arg(z, level);
    let v = k * x;
    let next = k * level_arg(z, level + 1);
    v - (x + (v * v + next) / 2.0) >= 0.0
}

/// Smallest `K` with `K ≥ 1 + c·K(K+1)`, `c = z^(2^(i0+1))/2`, i.e. the
/// smaller root of `cK² + (c−1)K + 1`.
pub fn solve_k(z: f64, i0: u32) -> Result<f64, OtterError> {
    if !(0.0..1.0).contains(&z) {
        return Err(OtterError::ZOutOfRange(z));
    }
    let c = level_arg(z, i0 + 1) / 2.0;
    let disc = (1.0 - c) * (1.0 - c) - 4.0 * c;
    if disc < 0.0 {
        return Err(OtterError::NoTailConstant { z, i0 });
    }
    // 2/((1−c) + √disc) equals ((1−c) − √disc)/(2c) without cancellation
    let mut k = 2.0 / ((1.0 - c) + disc.sqrt());
    if k <= 1.0 {
        k = 1.0 + K_NUDGE;
    }
    let mut tries = 0;
    while !(k >= 1.0 + c * k * (k + 1.0)) || !tail_holds(z, i0 + 1, k) {
        k *= 1.0 + K_NUDGE;
        tries += 1;
        if tries > 1000 {
            return Err(OtterError::NoTailConstant { z, i0 });
        }
    }
    Ok(k)
}

/// Solves `v[i] = z^(2^i) + (v[i]² + v[i+1])/2` from `i = i0` down to 0,
/// starting from `v[i0+1] = K·z^(2^(i0+1))`, taking the smaller root.
/// Each value is then raised by whole ulps until the inequality holds in
/// floating point.
pub fn otter_backsolve(z: f64, i0: u32, k: f64) -> Result<Vec<f64>, OtterError> {
    if !(0.0..1.0).contains(&z) {
        return Err(OtterError::ZOutOfRange(z));
    }
    let mut v = vec![0.0; i0 as usize + 2];
    v[i0 as usize + 1] = k * level_arg(z, i0 + 1);
    for i in (0..=i0).rev() {
        let zi = level_arg(z, i);
        let next = v[i as usize + 1];
        let x = 2.0 * zi + next;
        if x > 1.0 {
            return Err(OtterError::NegativeRadicand { level: i });
        }
        // 1 − √(1−x) in a cancellation-free form
        let mut vi = x / (1.0 + (1.0 - x).sqrt());
        while vi - (zi + (vi * vi + next) / 2.0) < 0.0 {
            vi = vi.next_up();
        }
        v[i as usize] = vi;
    }
    v.truncate(i0 as usize + 1);
    Ok(v)
}

/// Level values and tail of an Otter sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct OtterParams {
    pub z: f64,
    pub i0: u32,
    pub k: f64,
    /// `v[0..=i0]`
    pub v: Vec<f64>,
}

impl OtterParams {
    /// Back-solves the levels for the given `z`, `i0` (default
    /// [`default_i0`]) and `K` (default [`solve_k`]).
    pub fn new(z: f64, i0: Option<u32>, k: Option<f64>) -> Result<Self, OtterError> {
        let i0 = i0.unwrap_or_else(|| default_i0(z));
        let k = match k {
            Some(k) if !(k > 1.0) => return Err(OtterError::TailConstant(k)),
            Some(k) => k,
            None => solve_k(z, i0)?,
        };
        let v = otter_backsolve(z, i0, k)?;
        Ok(Self { z, i0, k, v })
    }

    /// Parameters just below the singularity, located by bisection on the
    /// convergence of the level system.
    pub fn near_singularity(i0: Option<u32>) -> Result<Self, OtterError> {
        let rho = otter_singularity(1e-9)?;
        let mut z = rho * (1.0 - AUTO_MARGIN);
        for _ in 0..64 {
            match Self::new(z, i0, None) {
                Err(OtterError::NegativeRadicand { .. } | OtterError::NoTailConstant { .. }) => {
                    z *= 1.0 - AUTO_MARGIN;
                }
                other => return other,
            }
        }
        Self::new(z, i0, None)
    }

    pub fn coordinates(&self) -> Coordinates {
        Coordinates::new(self.z)
            .with_levels(OTTER_CLASS, self.v.clone())
            .with_tail(OTTER_CLASS, self.k)
    }
}

pub fn otter_grammar() -> Grammar {
    Grammar::parse(OTTER_SPEC).expect("builtin grammar")
}

/// Estimate of the radius of convergence of `V`, from below.
pub fn otter_singularity(tol: f64) -> Result<f64, OtterError> {
    let g = otter_grammar();
    Ok(find_singularity_bisection(&g, OTTER_CLASS, 1.0, tol)?.lo)
}

/// Owns the grammar so samplers can borrow it.
#[derive(Debug, Clone)]
pub struct Otter {
    grammar: Grammar,
    params: OtterParams,
}

impl Otter {
    pub fn new(params: OtterParams) -> Self {
        Self {
            grammar: otter_grammar(),
            params,
        }
    }

    pub fn params(&self) -> &OtterParams {
        &self.params
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn sampler(&self) -> Result<Sampler<'_>, OtterError> {
        Ok(Sampler::new(&self.grammar, &self.params.coordinates())?)
    }
}

/// One attempt with the Otter sampler. For repeated draws build an
/// [`Otter`] and reuse its [`Sampler`].
pub fn sample_otter<R: RandomSource + ?Sized>(
    params: &OtterParams,
    rng: &mut R,
    max_size: u64,
) -> Result<Outcome, OtterError> {
    let otter = Otter::new(params.clone());
    let sampler = otter.sampler()?;
    Ok(sampler.sample_once(OTTER_CLASS, rng, max_size)?)
}

/// Leaves bucketed by how many times they are repeated in the expanded
/// tree (`2^d` under `d` duplicated pairs).
pub fn symmetry_histogram(tree: &TermTree) -> BTreeMap<u64, u64> {
    tree.symmetry_histogram()
}
