//! Generating-function values by monotone fixed-point iteration.
//!
//! Starting from zero, `y ← φ(z, y)` increases towards the least fixpoint
//! when `z` is inside the disc of convergence and runs off to infinity
//! outside of it. Classes under `mset2` are iterated at every squaring level
//! down to the point where `z^(2^i)` is negligible; deeper values are taken
//! as zero.

use std::cell::Cell;

use super::{eval_node, level_arg, OracleError};
use crate::grammar::{ClassId, Grammar};

/// Any iterate above this is taken as divergence.
pub const DIVERGENCE_CEILING: f64 = 1e6;
/// Sweeps allowed before giving up on convergence.
pub const ITERATION_CAP: usize = 100_000;

/// Truncation for the level system: deeper arguments are below 1e-20.
const DEEP_ARG: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GfResult {
    Converged { value: f64, iterations: usize },
    Diverged,
}

impl GfResult {
    pub fn value(self) -> Option<f64> {
        match self {
            GfResult::Converged { value, .. } => Some(value),
            GfResult::Diverged => None,
        }
    }

    pub fn converged(self) -> bool {
        matches!(self, GfResult::Converged { .. })
    }
}

fn depth(g: &Grammar, z: f64) -> u32 {
    if !g.has_mset2() {
        return 0;
    }
    let mut d = 0;
    while level_arg(z, d) > DEEP_ARG && d < super::MAX_LEVEL {
        d += 1;
    }
    d
}

/// Value of `class`'s generating function at `z`, or `Diverged`.
///
/// # Panics
/// If `class` is not defined in `g`.
pub fn gf_value(g: &Grammar, class: &str, z: f64, tol: f64) -> GfResult {
    let c = g.class_id(class).expect("unknown class");
    gf_values(g, z, tol).map_or(GfResult::Diverged, |(values, iterations)| {
        GfResult::Converged {
            value: values[0][c.index()],
            iterations,
        }
    })
}

/// All class values at every level, `values[level][class]`.
pub(crate) fn gf_values(g: &Grammar, z: f64, tol: f64) -> Option<(Vec<Vec<f64>>, usize)> {
    if !(0.0..1.0).contains(&z) {
        return None;
    }
    let d = depth(g, z);
    let k = g.class_count();
    let mut y = vec![vec![0.0f64; k]; d as usize + 2];
    for iteration in 1..=ITERATION_CAP {
        let mut change = 0.0f64;
        // deeper levels first so each level reads fresh values below it
        for level in (0..=d).rev() {
            for c in g.class_ids() {
                if level > 0 && !g.is_leveled(c) {
                    continue;
                }
                let z_at = |l| level_arg(z, l);
                let value = |c: ClassId, l: u32| Ok(y[l as usize][c.index()]);
                let next = match eval_node(g, g.root(c), level, &z_at, &value) {
                    Ok(v) => v,
                    Err(OracleError::SeqDivergent { .. }) => return None,
                    Err(e) => unreachable!("{e}"),
                };
                if !next.is_finite() || next > DIVERGENCE_CEILING {
                    return None;
                }
                let slot = &mut y[level as usize][c.index()];
                change = change.max((next - *slot).abs());
                *slot = next;
            }
        }
        if change < tol {
            y.truncate(d as usize + 1);
            return Some((y, iteration));
        }
    }
    None
}

/// Wraps [`gf_value`] and counts how often it is called, so procedures
/// built on the oracle can report their cost.
#[derive(Debug)]
pub struct GfOracle<'g> {
    grammar: &'g Grammar,
    calls: Cell<usize>,
}

impl<'g> GfOracle<'g> {
    pub fn new(grammar: &'g Grammar) -> Self {
        Self {
            grammar,
            calls: Cell::new(0),
        }
    }

    pub fn value(&self, class: &str, z: f64, tol: f64) -> GfResult {
        self.calls.set(self.calls.get() + 1);
        gf_value(self.grammar, class, z, tol)
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn grammar(&self) -> &'g Grammar {
        self.grammar
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_trees_inside_and_outside() {
        let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
        let v = gf_value(&g, "B", 0.3, 1e-12).value().unwrap();
        // smaller root of 0.3 y² − y + 0.3
        assert!((v - 1.0 / 3.0).abs() < 1e-10, "{v}");
        assert_eq!(gf_value(&g, "B", 0.6, 1e-12), GfResult::Diverged);
    }

    #[test]
    fn zero_argument_gives_constant_term() {
        let g = Grammar::parse("B = atom + atom*B*B; S = seq(B); E = eps;").unwrap();
        assert_eq!(gf_value(&g, "B", 0.0, 1e-12).value(), Some(0.0));
        assert_eq!(gf_value(&g, "S", 0.0, 1e-12).value(), Some(1.0));
        assert_eq!(gf_value(&g, "E", 0.0, 1e-12).value(), Some(1.0));
    }

    #[test]
    fn sequence_divergence_is_reported() {
        // 1/(1 − P) with P(z) = z/(1−z) reaches 1 at z = 1/2
        let g = Grammar::parse("C = seq(P); P = atom + atom*P;").unwrap();
        let v = gf_value(&g, "C", 0.25, 1e-13).value().unwrap();
        assert!((v - 1.5).abs() < 1e-9, "{v}");
        assert_eq!(gf_value(&g, "C", 0.55, 1e-12), GfResult::Diverged);
    }

    #[test]
    fn oracle_counts_calls() {
        let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
        let o = GfOracle::new(&g);
        o.value("B", 0.1, 1e-9);
        o.value("B", 0.7, 1e-9);
        assert_eq!(o.calls(), 2);
    }
}
