//! Locating the singularity of a class.
//!
//! For a simply generated family `Y = z·Φ(Y)`, valid coordinates are the
//! pairs with `y ≥ z·Φ(y)`, so the rightmost valid abscissa is the maximum
//! of `y/Φ(y)`. [`tune_simply_generated`] finds it without ever evaluating
//! the generating function. [`find_singularity_bisection`] is the classical
//! alternative: bisect on whether the fixed-point iteration converges.

mod bisect;
pub mod brent;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::grammar::{ClassId, Grammar, Node, NodeId};

pub use bisect::{find_singularity_bisection, BisectResult};

/// Left end of the initial bracket.
const BRACKET_START: f64 = 1e-9;
const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuneError {
    #[error("degree multiset is empty")]
    EmptyOmega,
    #[error("degree multiset has no 0: the family has no leaves")]
    NotPointed,
    #[error("degenerate family: all degrees are 0 or 1, so y/Phi(y) has no interior maximum")]
    Degenerate,
    #[error("class `{class}` is not of the form atom * Phi({class}): {reason}")]
    NotSimplyGenerated { class: String, reason: String },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("the generating function converges at the upper end {0} of the bracket")]
    NotDivergent(f64),
    #[error("the generating function diverges at the lower end {0} of the bracket")]
    NotConvergent(f64),
    #[error("upper end {0} must be positive")]
    BadBracket(f64),
}

/// Trees where every node has a number of children taken from the multiset
/// `Ω`, so `Y = z·Φ(Y)` with `Φ(x) = Σ_{ω∈Ω} x^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleTreeFamily {
    /// degree → multiplicity
    omega: BTreeMap<u32, u64>,
}

impl SimpleTreeFamily {
    pub fn new(degrees: impl IntoIterator<Item = u32>) -> Result<Self, TuneError> {
        let mut omega = BTreeMap::new();
        for d in degrees {
            *omega.entry(d).or_insert(0) += 1;
        }
        if omega.is_empty() {
            return Err(TuneError::EmptyOmega);
        }
        if !omega.contains_key(&0) {
            return Err(TuneError::NotPointed);
        }
        Ok(Self { omega })
    }

    /// Reads `Ω` off a class whose definition expands to `atom · Φ(Y)`.
    /// Classes not depending on `Y` are inlined; `seq`, `mset2` and other
    /// recursion are rejected.
    pub fn from_class(g: &Grammar, class: &str) -> Result<Self, TuneError> {
        let y = g
            .class_id(class)
            .map_err(|_| TuneError::UnknownClass(class.to_owned()))?;
        let reject = |reason: &str| TuneError::NotSimplyGenerated {
            class: class.to_owned(),
            reason: reason.to_owned(),
        };
        let poly = Extract {
            g,
            y,
            stack: Vec::new(),
        }
        .node(g.root(y))
        .map_err(|r| reject(&r))?;
        let mut degrees = Vec::new();
        for (&(zd, yd), &count) in &poly {
            if zd != 1 {
                return Err(reject("every term must contain exactly one atom"));
            }
            degrees.extend(std::iter::repeat_n(yd, count as usize));
        }
        Self::new(degrees)
    }

    pub fn degrees(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.omega.iter().map(|(&d, &m)| (d, m))
    }

    pub fn is_degenerate(&self) -> bool {
        self.omega.keys().all(|&d| d <= 1)
    }

    pub fn phi(&self, y: f64) -> f64 {
        self.omega
            .iter()
            .map(|(&d, &m)| m as f64 * y.powi(d as i32))
            .sum()
    }

    pub fn phi_prime(&self, y: f64) -> f64 {
        self.omega
            .iter()
            .filter(|(&d, _)| d > 0)
            .map(|(&d, &m)| (m * d as u64) as f64 * y.powi(d as i32 - 1))
            .sum()
    }

    /// `Φ(y) − y·Φ′(y)`: positive while `y/Φ(y)` increases.
    pub fn turning(&self, y: f64) -> f64 {
        self.omega
            .iter()
            .map(|(&d, &m)| m as f64 * (1.0 - d as f64) * y.powi(d as i32))
            .sum()
    }
}

/// Polynomial in `(z, y)`: `(z degree, y degree) → coefficient`.
type Poly = BTreeMap<(u32, u32), u64>;

struct Extract<'a> {
    g: &'a Grammar,
    y: ClassId,
    stack: Vec<ClassId>,
}

impl Extract<'_> {
    fn node(&mut self, n: NodeId) -> Result<Poly, String> {
        Ok(match self.g.node(n) {
            Node::Atom => Poly::from([((1, 0), 1)]),
            Node::Epsilon => Poly::from([((0, 0), 1)]),
            Node::Ref(c) if *c == self.y => Poly::from([((0, 1), 1)]),
            Node::Ref(c) => {
                if self.stack.contains(c) {
                    return Err(format!("`{}` is recursive", self.g.class_name(*c)));
                }
                self.stack.push(*c);
                let p = self.node(self.g.root(*c))?;
                self.stack.pop();
                p
            }
            Node::Union(xs) => {
                let mut acc = Poly::new();
                for x in xs {
                    for (k, v) in self.node(*x)? {
                        *acc.entry(k).or_insert(0) += v;
                    }
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = Poly::from([((0, 0), 1)]);
                for x in xs {
                    let p = self.node(*x)?;
                    let mut next = Poly::new();
                    for (&(az, ay), &a) in &acc {
                        for (&(bz, by), &b) in &p {
                            *next.entry((az + bz, ay + by)).or_insert(0) += a * b;
                        }
                    }
                    acc = next;
                }
                acc
            }
            Node::Seq(_) => return Err("seq is not polynomial".into()),
            Node::MSet2(_) => return Err("mset2 is not polynomial".into()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneResult {
    pub y_star: f64,
    pub z_star: f64,
    pub converged: bool,
    /// Evaluations of `Φ` or `Φ′`.
    pub function_evals: usize,
    /// Generating-function evaluations; always 0 for this method.
    pub oracle_calls: usize,
}

/// Maximises `y/Φ(y)` on `(0, ∞)`.
///
/// The bracket `[1e-9, y_hi]` is grown by doubling `y_hi` until
/// `Φ − yΦ′` turns negative. Brent's minimiser applied to `−y/Φ(y)` then
/// locates the maximum; since the objective is flat there, `y*` is polished
/// by a Brent root search on `Φ − yΦ′` inside the final bracket.
pub fn tune_simply_generated(family: &SimpleTreeFamily, tol: f64) -> Result<TuneResult, TuneError> {
    if family.is_degenerate() {
        return Err(TuneError::Degenerate);
    }
    let mut evals = 0usize;
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while family.turning(hi) >= 0.0 {
        evals += 2;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(TuneError::Degenerate);
        }
    }
    evals += 2;
    let lo = BRACKET_START;
    let min = brent::minimize(
        |y| {
            evals += 1;
            -y / family.phi(y)
        },
        lo,
        hi,
        tol,
        MAX_ITERATIONS,
    );
    let mut y_star = min.x;
    let mut converged = min.converged;

    // polish: the maximiser is the sign change of Φ − yΦ′
    let width = (1e-6 * y_star).max(tol);
    let (a, b) = ((y_star - width).max(lo), (y_star + width).min(hi));
    let mut turning = |y: f64| {
        evals += 2;
        family.turning(y)
    };
    let bracket = if turning(a) > 0.0 && turning(b) < 0.0 {
        (a, b)
    } else {
        (lo, hi)
    };
    if let Some(root) = brent::find_root(turning, bracket.0, bracket.1, tol * 1e-3, MAX_ITERATIONS)
    {
        y_star = root.x;
        converged &= root.converged;
    }
    Ok(TuneResult {
        y_star,
        z_star: y_star / family.phi(y_star),
        converged,
        function_evals: evals + 1,
        oracle_calls: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tune(omega: &[u32]) -> TuneResult {
        tune_simply_generated(
            &SimpleTreeFamily::new(omega.iter().copied()).unwrap(),
            1e-12,
        )
        .unwrap()
    }

    #[test]
    fn motzkin_and_binary() {
        let m = tune(&[0, 1, 2]);
        assert!((m.y_star - 1.0).abs() < 1e-9);
        assert!((m.z_star - 1.0 / 3.0).abs() < 1e-9);
        assert!(m.converged);
        assert_eq!(m.oracle_calls, 0);
        let b = tune(&[0, 2]);
        assert!((b.z_star - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ternary() {
        let t = tune(&[0, 3]);
        let y = 2f64.powf(-1.0 / 3.0);
        assert!((t.y_star - y).abs() < 1e-9);
        assert!((t.z_star - y / 1.5).abs() < 1e-9);
    }

    #[test]
    fn multiplicities_shift_the_maximum() {
        // Φ = 1 + 2y + y² = (1+y)²: maximum of y/(1+y)² at y = 1, z = 1/4
        let t = tune(&[0, 1, 1, 2]);
        assert!((t.y_star - 1.0).abs() < 1e-9);
        assert!((t.z_star - 0.25).abs() < 1e-12);
        // Φ = 1 + 4y²: y = 1/2, z = 1/4
        let t = tune(&[0, 2, 2, 2, 2]);
        assert!((t.y_star - 0.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_malformed() {
        let fam = SimpleTreeFamily::new([0, 1]).unwrap();
        assert_eq!(
            tune_simply_generated(&fam, 1e-9),
            Err(TuneError::Degenerate)
        );
        assert_eq!(SimpleTreeFamily::new([]), Err(TuneError::EmptyOmega));
        assert_eq!(SimpleTreeFamily::new([1, 2]), Err(TuneError::NotPointed));
    }

    #[test]
    fn turning_point_is_a_root() {
        for omega in [&[0u32, 2][..], &[0, 1, 2], &[0, 3], &[0, 2, 5], &[0, 0, 4]] {
            let fam = SimpleTreeFamily::new(omega.iter().copied()).unwrap();
            let r = tune_simply_generated(&fam, 1e-12).unwrap();
            assert!(
                fam.turning(r.y_star).abs() < 1e-12 * fam.phi(r.y_star),
                "{omega:?}"
            );
            assert!((r.z_star * fam.phi(r.y_star) - r.y_star).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_from_grammar() {
        let g = Grammar::parse("Y = atom*(E + Y + Y*Y); E = eps;").unwrap();
        let fam = SimpleTreeFamily::from_class(&g, "Y").unwrap();
        assert_eq!(fam, SimpleTreeFamily::new([0, 1, 2]).unwrap());

        let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
        assert_eq!(
            SimpleTreeFamily::from_class(&g, "B").unwrap(),
            SimpleTreeFamily::new([0, 2]).unwrap()
        );

        let g = Grammar::parse("T = atom*(P + P); P = eps + T*T;").unwrap();
        let fam = SimpleTreeFamily::from_class(&g, "T").unwrap();
        assert_eq!(fam.degrees().collect::<Vec<_>>(), vec![(0, 2), (2, 2)]);
    }

    #[test]
    fn non_polynomial_classes_are_rejected() {
        for spec in [
            "V = atom + mset2(V);",
            "T = atom*seq(T);",
            "B = atom + B*B;",
            "A = atom + atom*A*R; R = atom + atom*R;",
        ] {
            let g = Grammar::parse(spec).unwrap();
            let name = g.class_names()[0].clone();
            assert!(
                matches!(
                    SimpleTreeFamily::from_class(&g, &name),
                    Err(TuneError::NotSimplyGenerated { .. })
                ),
                "{spec}"
            );
        }
    }
}
